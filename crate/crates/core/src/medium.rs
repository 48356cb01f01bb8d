//! Atomic ensemble constants and the linear optical response of the
//! two-line (populated / storage) absorption profile.
//!
//! Detunings are measured as resonance minus field frequency, relative to
//! the populated |1⟩→|2⟩ line. The storage |3⟩→|2⟩ line sits at
//! `Δ = +Δ_hf` on that axis. With the field layout `ω_c = ω_s − Δ_hf`,
//! `ω_a = ω_s − 2Δ_hf` this gives `Δ_c = Δ_s + Δ_hf` and
//! `Δ_a = Δ_s + 2Δ_hf`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::units::{self, SPEED_OF_LIGHT};

/// Which absorption lines contribute to the signal's linear loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalLossModel {
    /// Far wing of the populated line plus the α-weighted storage line.
    #[default]
    Both,
    StorageLineOnly,
    PopulatedWingOnly,
}

/// Ensemble constants. Rates in rad/µs, length in mm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumParams {
    /// On-resonance optical depth at the natural linewidth.
    pub d0: f64,
    /// Natural linewidth (angular HWHM).
    pub gamma_n: f64,
    /// Pressure-broadening contribution to the linewidth.
    pub gamma_p: f64,
    /// Ground-state hyperfine splitting.
    pub delta_hf: f64,
    pub length: f64,
    /// Fraction of the population left in the storage state |3⟩.
    pub alpha: f64,
    /// Speed of light, mm/µs.
    pub c: f64,
    #[serde(default)]
    pub signal_loss: SignalLossModel,
}

impl MediumParams {
    /// Warm caesium with N₂ buffer gas as used for the numerical study:
    /// `d0 = 2.9e4`, `γ_N = 2π·5.2 MHz`, `γ = 2π·96 MHz`, perfect pumping.
    pub fn caesium_simulation() -> Self {
        MediumParams {
            d0: 2.9e4,
            gamma_n: units::mhz_to_rad_per_us(5.2),
            gamma_p: units::mhz_to_rad_per_us(96.0 - 5.2),
            delta_hf: units::ghz_to_rad_per_us(units::CS_HYPERFINE_GHZ),
            length: 72.0,
            alpha: 0.0,
            c: SPEED_OF_LIGHT,
            signal_loss: SignalLossModel::Both,
        }
    }

    /// Parameters matching the experimental cell: `d0 = 2.98e4` and a
    /// pumping efficiency of 99.85 %.
    pub fn caesium_experiment() -> Self {
        MediumParams {
            d0: 2.98e4,
            alpha: 0.0015,
            ..Self::caesium_simulation()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.d0 > 0.0 && self.d0.is_finite()) {
            errors.push("d0 must be positive".to_string());
        }
        if !(self.gamma_n > 0.0 && self.gamma_n.is_finite()) {
            errors.push("gamma_N must be positive".to_string());
        }
        if !(self.gamma_p >= 0.0 && self.gamma_p.is_finite()) {
            errors.push("gamma_P must be non-negative".to_string());
        }
        if !(self.delta_hf > 0.0 && self.delta_hf.is_finite()) {
            errors.push("Delta_hf must be positive".to_string());
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            errors.push("L must be positive".to_string());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            errors.push("alpha out of [0,1]".to_string());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            errors.push("c must be positive".to_string());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Total Lorentzian linewidth `γ = γ_N + γ_P`.
    pub fn gamma(&self) -> f64 {
        self.gamma_n + self.gamma_p
    }

    /// Pressure-broadened optical depth `d = d0·γ_N/γ`.
    pub fn depth(&self) -> f64 {
        self.d0 * self.gamma_n / self.gamma()
    }

    /// Dimensionless complex response `Σ w_line·γ/(γ + iΔ_line)` of the
    /// two lines at detuning `delta` from the populated line.
    fn two_line_response(&self, delta: f64, populated: bool, storage: bool) -> Complex64 {
        let gamma = self.gamma();
        let lorentz = |det: f64| Complex64::new(gamma, 0.0) / Complex64::new(gamma, det);
        let mut out = Complex64::new(0.0, 0.0);
        if populated {
            out += (1.0 - self.alpha) * lorentz(delta);
        }
        if storage {
            out += self.alpha * lorentz(delta - self.delta_hf);
        }
        out
    }

    /// Complex amplitude loss rate (rad/µs) for a weak field at `delta`,
    /// both lines included.
    pub fn kappa_at(&self, delta: f64) -> Complex64 {
        self.c * self.depth() / self.length * self.two_line_response(delta, true, true)
    }
}

/// Signal and anti-Stokes detunings. Construct through [`DetuningConfig::new`]
/// so that `delta_a − delta_s = 2·Δ_hf` holds exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetuningConfig {
    pub delta_s: f64,
    pub delta_a: f64,
}

impl DetuningConfig {
    pub fn new(delta_s: f64, medium: &MediumParams) -> Self {
        DetuningConfig {
            delta_s,
            delta_a: delta_s + 2.0 * medium.delta_hf,
        }
    }

    /// Built-in suppression point: anti-Stokes on the populated resonance.
    pub fn bns(medium: &MediumParams) -> Self {
        Self::new(-2.0 * medium.delta_hf, medium)
    }

    /// Standard Raman point with the same coupling magnitude.
    pub fn standard(medium: &MediumParams) -> Self {
        Self::new(2.0 * medium.delta_hf, medium)
    }

    /// Control detuning from the populated line, midway between signal and
    /// anti-Stokes.
    pub fn delta_c(&self) -> f64 {
        0.5 * (self.delta_s + self.delta_a)
    }
}

/// `Γ_x = γ + iΔ_x` for the signal and anti-Stokes fields.
pub fn complex_detunings(cfg: &DetuningConfig, medium: &MediumParams) -> (Complex64, Complex64) {
    let gamma = medium.gamma();
    (
        Complex64::new(gamma, cfg.delta_s),
        Complex64::new(gamma, cfg.delta_a),
    )
}

/// Complex linear response rates in rad/µs.
///
/// The real part is the amplitude absorption rate and the imaginary part
/// the dispersive phase rate: a field obeys `∂_z E = −(κ/c)·E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearResponse {
    pub kappa_s: Complex64,
    pub kappa_a: Complex64,
}

impl LinearResponse {
    /// Rates per unit normalized length, `κ·L/c`.
    pub fn normalized(&self, medium: &MediumParams) -> (Complex64, Complex64) {
        let scale = medium.length / medium.c;
        (self.kappa_s * scale, self.kappa_a * scale)
    }
}

/// Linear loss `κ_x = (c·d/L)·Σ_line w_line·γ/Γ_x,line`.
///
/// On the populated resonance `Re(κ)·L/c = (1−α)·d`, i.e. amplitude
/// transmission `e^{−d}`. This is the normalization consistent with the
/// `√(dγ/L)` field–spin-wave coupling.
pub fn linear_loss(medium: &MediumParams, cfg: &DetuningConfig) -> LinearResponse {
    let scale = medium.c * medium.depth() / medium.length;
    let (populated, storage) = match medium.signal_loss {
        SignalLossModel::Both => (true, true),
        SignalLossModel::StorageLineOnly => (false, true),
        SignalLossModel::PopulatedWingOnly => (true, false),
    };
    LinearResponse {
        kappa_s: scale * medium.two_line_response(cfg.delta_s, populated, storage),
        kappa_a: scale * medium.two_line_response(cfg.delta_a, true, true),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// rad/µs, resonance minus field, relative to the populated line.
    pub detuning: f64,
    pub optical_depth: f64,
}

/// Two-line optical depth profile `d·[(1−α)·L(Δ) + α·L(Δ−Δ_hf)]`.
pub fn absorption_spectrum(medium: &MediumParams, grid: &[f64]) -> Result<Vec<SpectrumPoint>> {
    if grid.is_empty() {
        return Err(Error::invalid("detuning_grid", "empty grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("detuning_grid", "grid must be strictly increasing"));
    }
    let d = medium.depth();
    Ok(grid
        .iter()
        .map(|&delta| SpectrumPoint {
            detuning: delta,
            optical_depth: d * medium.two_line_response(delta, true, true).re,
        })
        .collect())
}

/// Four-wave-mixing phase mismatch `δk = 2k_c − k_s − k_a` in rad/mm.
///
/// The vacuum wavevectors cancel because `2ω_c = ω_s + ω_a`; what is left
/// is the dispersive part `Im(κ)/c` of each field, both lines included.
pub fn phase_mismatch(medium: &MediumParams, cfg: &DetuningConfig) -> f64 {
    let k = |delta: f64| medium.kappa_at(delta).im / medium.c;
    2.0 * k(cfg.delta_c()) - k(cfg.delta_s) - k(cfg.delta_a)
}
