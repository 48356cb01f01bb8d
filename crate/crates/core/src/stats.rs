//! Closed-form photon statistics of the retrieved field.
//!
//! The retrieved light is modelled as the incoherent sum of the memory
//! output (efficiency `η`, input statistics `g²_in`), spontaneous Raman
//! noise (`N_SRS`, thermal) and broadband fluorescence (`N_F`, `g²_F`).

use roots::{find_root_brent, SimpleConvergency};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct G2Model {
    /// `g²_in·𝒢_ss/η² − 1`.
    pub a: f64,
    pub n_srs: f64,
    pub n_f: f64,
    #[serde(default = "default_g2_f")]
    pub g2_f: f64,
    /// Control leakage photons; taken as zero.
    #[serde(default)]
    pub n_l: f64,
}

fn default_g2_f() -> f64 {
    2.0
}

impl G2Model {
    pub fn new(a: f64, n_srs: f64, n_f: f64) -> Self {
        G2Model {
            a,
            n_srs,
            n_f,
            g2_f: 2.0,
            n_l: 0.0,
        }
    }

    /// Single-photon input: `g²_in = 0`, so `a = −1`.
    pub fn fock(n_srs: f64, n_f: f64) -> Self {
        Self::new(-1.0, n_srs, n_f)
    }

    /// `a` from the signal kernel's quartic integral.
    pub fn from_kernel(g2_in: f64, g_ss: f64, eta: f64, n_srs: f64, n_f: f64) -> Result<Self> {
        if !(eta > 0.0) {
            return Err(Error::invalid("eta", "must be positive"));
        }
        Ok(Self::new(g2_in * g_ss / (eta * eta) - 1.0, n_srs, n_f))
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.n_srs >= 0.0) {
            errs.push("N_SRS must be non-negative".to_string());
        }
        if !(self.n_f >= 0.0) {
            errs.push("N_F must be non-negative".to_string());
        }
        if !self.a.is_finite() {
            errs.push("a must be finite".to_string());
        }
        if !(self.g2_f >= 0.0) {
            errs.push("g2_F must be non-negative".to_string());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    /// Numerator of `g² − 1` times the squared total photon number.
    fn excess(&self, n_out: f64) -> f64 {
        self.a * n_out * n_out
            + 2.0 * self.n_srs * n_out
            + self.n_srs * self.n_srs
            + self.n_f * self.n_f * (self.g2_f - 1.0)
    }
}

/// A measured (or synthetic) g² point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatPoint {
    pub n_out: f64,
    pub g2: f64,
    pub g2_err: f64,
}

/// Poisson standard error of a g² estimate built from `coincidences`
/// detected coincidence events.
pub fn poisson_g2_error(g2: f64, coincidences: f64) -> Result<f64> {
    if !(coincidences > 0.0) {
        return Err(Error::invalid("coincidences", "need at least one event"));
    }
    Ok(g2 / coincidences.sqrt())
}

/// `g²` of the retrieved light at mean signal photon number `n_out`.
pub fn g2_out(model: &G2Model, n_out: f64) -> Result<f64> {
    if !(n_out >= 0.0) {
        return Err(Error::invalid("N_out", "must be non-negative"));
    }
    let total = n_out + model.n_srs + model.n_f;
    if !(total > 0.0) {
        return Err(Error::invalid("N_out", "g2 is undefined with no light at all"));
    }
    Ok(1.0 + model.excess(n_out) / (total * total))
}

/// `g²` of two mutually incoherent fields.
pub fn incoherent_sum(n1: f64, g2_1: f64, n2: f64, g2_2: f64) -> Result<f64> {
    let total = n1 + n2;
    if !(total > 0.0) {
        return Err(Error::invalid("N", "total photon number must be positive"));
    }
    Ok((n1 * n1 * g2_1 + 2.0 * n1 * n2 + n2 * n2 * g2_2) / (total * total))
}

/// `g²` of memory output plus Raman noise, assuming thermal noise.
pub fn g2_signal_only(g2_in: f64, eta: f64, g_ss: f64, n_in: f64, n_srs: f64) -> Result<f64> {
    let denom = eta * n_in + n_srs;
    if !(denom > 0.0) {
        return Err(Error::invalid("N", "signal plus noise photon number must be positive"));
    }
    Ok(2.0 - n_in * n_in * (2.0 * eta * eta - g2_in * g_ss) / (denom * denom))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum HeraldingThreshold {
    /// `g²_out` crosses 1 at `n_out = η·η_h`.
    Reached { eta_h: f64, n_out: f64 },
    /// `g²_out ≥ 1` for every `η_h ∈ [0, 1]`.
    NotReachable,
}

impl HeraldingThreshold {
    pub fn eta_h(&self) -> Option<f64> {
        match self {
            HeraldingThreshold::Reached { eta_h, .. } => Some(*eta_h),
            HeraldingThreshold::NotReachable => None,
        }
    }
}

/// Smallest heralding efficiency giving non-classical output (`g² < 1`)
/// for a single-photon input. The model's `a` is replaced by −1.
pub fn heralding_threshold(model: &G2Model, eta: f64) -> Result<HeraldingThreshold> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    model.validate()?;
    let fock = G2Model { a: -1.0, ..*model };
    let f = |n: f64| fock.excess(n);
    let at_zero = f(0.0);
    if at_zero <= 0.0 {
        return Ok(HeraldingThreshold::Reached { eta_h: 0.0, n_out: 0.0 });
    }
    if f(eta) > 0.0 {
        return Ok(HeraldingThreshold::NotReachable);
    }
    let mut conv = SimpleConvergency {
        eps: 1e-15,
        max_iter: 200,
    };
    let n_out = find_root_brent(0.0, eta, f, &mut conv)
        .map_err(|e| Error::Numerical(format!("threshold root search failed: {e:?}")))?;
    Ok(HeraldingThreshold::Reached {
        eta_h: n_out / eta,
        n_out,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionPoint {
    pub eta_h: f64,
    pub g2_out: f64,
}

/// Predicted `g²_out` for a single-photon input arriving with probability
/// `η_h`, at memory efficiency `eta`.
pub fn fock_prediction(model: &G2Model, eta: f64, eta_h: &[f64]) -> Result<Vec<PredictionPoint>> {
    model.validate()?;
    let fock = G2Model { a: -1.0, ..*model };
    eta_h
        .iter()
        .map(|&h| {
            if !(0.0..=1.0).contains(&h) {
                return Err(Error::invalid("eta_h", "must lie in [0, 1]"));
            }
            Ok(PredictionPoint {
                eta_h: h,
                g2_out: g2_out(&fock, eta * h)?,
            })
        })
        .collect()
}

/// Uniform `η_h` grid on `[0, 1]`.
pub fn unit_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
}

pub fn prediction_table(points: &[PredictionPoint]) -> crate::io::Table {
    let mut t = crate::io::Table::new(["eta_h", "g2_out"]);
    for p in points {
        t.push_numbers(&[p.eta_h, p.g2_out]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiting_values() {
        let thermal = G2Model::new(0.0, 0.05, 0.0);
        assert!((g2_out(&thermal, 0.0).unwrap() - 2.0).abs() < 1e-15);
        let equal = G2Model::new(0.0, 0.02, 0.02);
        assert!((g2_out(&equal, 0.0).unwrap() - 1.5).abs() < 1e-15);
        assert!(g2_out(&G2Model::new(0.0, 0.0, 0.0), 0.0).is_err());
        assert!(g2_out(&thermal, -1.0).is_err());
    }

    #[test]
    fn incoherent_sum_cases() {
        assert_eq!(incoherent_sum(0.3, 1.7, 0.0, 2.0).unwrap(), 1.7);
        assert!((incoherent_sum(0.4, 2.0, 0.4, 2.0).unwrap() - 1.5).abs() < 1e-15);
        assert!((incoherent_sum(0.4, 1.0, 0.4, 2.0).unwrap() - 1.25).abs() < 1e-15);
        assert!(incoherent_sum(0.0, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn signal_only_cases() {
        assert_eq!(g2_signal_only(1.0, 0.3, 0.09, 0.0, 0.01).unwrap(), 2.0);
        let eta: f64 = 0.3;
        let v = g2_signal_only(1.0, eta, eta * eta, 2.0, 0.0).unwrap();
        assert!((v - 1.0).abs() < 1e-14);
        assert!(g2_signal_only(1.0, 0.3, 0.09, 0.0, 0.0).is_err());
    }

    #[test]
    fn noiseless_threshold_is_zero() {
        let m = G2Model::fock(0.0, 0.0);
        assert_eq!(heralding_threshold(&m, 0.1).unwrap().eta_h(), Some(0.0));
    }

    #[test]
    fn unreachable_threshold() {
        let m = G2Model::fock(0.5, 0.1);
        assert_eq!(heralding_threshold(&m, 0.2).unwrap(), HeraldingThreshold::NotReachable);
        assert!(heralding_threshold(&m, 0.0).is_err());
    }

    #[test]
    fn prediction_rejects_out_of_range() {
        let m = G2Model::fock(0.01, 0.004);
        assert!(fock_prediction(&m, 0.1, &[1.2]).is_err());
        let pts = fock_prediction(&m, 0.1, &unit_grid(11)).unwrap();
        assert_eq!(pts.len(), 11);
        assert_eq!(pts[10].eta_h, 1.0);
    }

    #[test]
    fn serde_round_trip() {
        let m = G2Model::new(0.4, 0.08, 0.009);
        let s = serde_json::to_string(&m).unwrap();
        let back: G2Model = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
        let partial: G2Model = serde_json::from_str(r#"{"a":-1,"n_srs":0.01,"n_f":0.002}"#).unwrap();
        assert_eq!(partial.g2_f, 2.0);
    }
}
