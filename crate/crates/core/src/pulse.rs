//! Control and signal envelopes and the read-in / storage / read-out
//! pulse sequence.

use std::f64::consts::{LN_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default intensity FWHM of all pulses, µs.
pub const DEFAULT_FWHM: f64 = 0.010;
/// Default photon-counting window, µs.
pub const DEFAULT_WINDOW: f64 = 0.035;
/// Beam waist radius at the cell centre, µm.
pub const DEFAULT_WAIST_UM: f64 = 130.0;

/// `Ω_peak` per `√(pJ/(µs·µm²))`, fixed by [`crate::presets::calibrate_dipole_constant`]
/// against the 750 pJ simulation anchor.
pub const DEFAULT_DIPOLE_CONSTANT: f64 = 1098.1401049033689;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseShape {
    #[default]
    Gaussian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPulse {
    /// rad/µs
    pub peak_rabi: Complex64,
    /// µs
    pub center: f64,
    /// Intensity FWHM, µs.
    pub fwhm: f64,
    #[serde(default)]
    pub shape: PulseShape,
}

impl ControlPulse {
    pub fn gaussian(peak_rabi: f64, center: f64, fwhm: f64) -> Self {
        ControlPulse {
            peak_rabi: Complex64::new(peak_rabi, 0.0),
            center,
            fwhm,
            shape: PulseShape::Gaussian,
        }
    }
}

/// Field amplitude of `pulse` at time `t`; `|envelope|²` has the stated FWHM.
pub fn envelope(pulse: &ControlPulse, t: f64) -> Complex64 {
    match pulse.shape {
        PulseShape::Gaussian => {
            let x = (t - pulse.center) / pulse.fwhm;
            pulse.peak_rabi * (-2.0 * LN_2 * x * x).exp()
        }
    }
}

/// `∫ exp(−4 ln2·t²/fwhm²) dt`, the time integral of a unit-peak Gaussian
/// intensity profile.
pub fn gaussian_intensity_integral(fwhm: f64) -> f64 {
    fwhm * (PI / (4.0 * LN_2)).sqrt()
}

/// Peak Rabi frequency (rad/µs) of a Gaussian pulse of the given energy.
///
/// Peak intensity is `E / (τ_int · πw²/2)` with `τ_int` the Gaussian time
/// integral; `Ω = dipole_constant·√I`.
pub fn energy_to_peak_rabi(
    energy_pj: f64,
    waist_um: f64,
    fwhm: f64,
    dipole_constant: f64,
) -> Result<f64> {
    if !(energy_pj >= 0.0 && energy_pj.is_finite()) {
        return Err(Error::invalid("energy", "pulse energy must be non-negative"));
    }
    if !(waist_um > 0.0) {
        return Err(Error::invalid("waist", "beam waist must be positive"));
    }
    if !(fwhm > 0.0) {
        return Err(Error::invalid("fwhm", "pulse width must be positive"));
    }
    if !(dipole_constant > 0.0) {
        return Err(Error::invalid("dipole_constant", "must be positive"));
    }
    let area = 0.5 * PI * waist_um * waist_um;
    let peak_intensity = energy_pj / (gaussian_intensity_integral(fwhm) * area);
    Ok(dipole_constant * peak_intensity.sqrt())
}

/// Beam and dipole constants used to turn pulse energies into Rabi
/// frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseCalibration {
    pub dipole_constant: f64,
    pub waist_um: f64,
    pub fwhm: f64,
}

impl Default for PulseCalibration {
    fn default() -> Self {
        PulseCalibration {
            dipole_constant: DEFAULT_DIPOLE_CONSTANT,
            waist_um: DEFAULT_WAIST_UM,
            fwhm: DEFAULT_FWHM,
        }
    }
}

impl PulseCalibration {
    pub fn peak_rabi(&self, energy_pj: f64) -> Result<f64> {
        energy_to_peak_rabi(energy_pj, self.waist_um, self.fwhm, self.dipole_constant)
    }
}

/// Temporal mode of the input signal, relative to the read-in centre.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalShape {
    Gaussian { fwhm: f64 },
    /// Superposition of Gaussians `(offset µs, intensity FWHM µs, amplitude)`.
    Sum(Vec<(f64, f64, Complex64)>),
}

impl Default for SignalShape {
    fn default() -> Self {
        SignalShape::Gaussian { fwhm: DEFAULT_FWHM }
    }
}

impl SignalShape {
    fn raw(&self, dt: f64) -> Complex64 {
        let g = |offset: f64, fwhm: f64| {
            let x = (dt - offset) / fwhm;
            (-2.0 * LN_2 * x * x).exp()
        };
        match self {
            SignalShape::Gaussian { fwhm } => Complex64::new(g(0.0, *fwhm), 0.0),
            SignalShape::Sum(parts) => parts.iter().map(|&(o, w, a)| a * g(o, w)).sum(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub read_in: ControlPulse,
    pub read_out: ControlPulse,
    /// Centre-to-centre, µs.
    pub storage_time: f64,
    pub signal: SignalShape,
    /// Mean input photon number.
    pub n_in: f64,
    /// Photon-counting window width, µs.
    pub window: f64,
}

impl PulseSequence {
    /// Sequence from peak Rabi frequencies. The read-in pulse is placed far
    /// enough from `t = 0` that its window and tails fit on the grid.
    pub fn from_rabi(
        read_in_rabi: f64,
        read_out_rabi: f64,
        storage_time: f64,
        n_in: f64,
        signal: SignalShape,
        fwhm: f64,
        window: f64,
    ) -> Result<Self> {
        if !(fwhm > 0.0) {
            return Err(Error::invalid("fwhm", "pulse width must be positive"));
        }
        if !(window > 0.0) {
            return Err(Error::invalid("window", "integration window must be positive"));
        }
        if !(n_in >= 0.0 && n_in.is_finite()) {
            return Err(Error::invalid("N_in", "photon number must be non-negative"));
        }
        if !(storage_time > fwhm) {
            return Err(Error::Precondition(format!(
                "storage time {storage_time} µs must exceed the pulse width {fwhm} µs"
            )));
        }
        if storage_time < window {
            return Err(Error::Precondition(format!(
                "input and retrieval windows overlap: storage {storage_time} µs < window {window} µs"
            )));
        }
        let lead = window.max(3.0 * fwhm);
        Ok(PulseSequence {
            read_in: ControlPulse::gaussian(read_in_rabi, lead, fwhm),
            read_out: ControlPulse::gaussian(read_out_rabi, lead + storage_time, fwhm),
            storage_time,
            signal,
            n_in,
            window,
        })
    }

    pub fn input_window(&self) -> (f64, f64) {
        let c = self.read_in.center;
        (c - 0.5 * self.window, c + 0.5 * self.window)
    }

    pub fn retrieval_window(&self) -> (f64, f64) {
        let c = self.read_out.center;
        (c - 0.5 * self.window, c + 0.5 * self.window)
    }

    /// Time span that covers both windows and the pulse tails.
    pub fn natural_span(&self) -> f64 {
        self.read_out.center + self.read_in.center
    }

    /// Total control Rabi frequency.
    pub fn control(&self, t: f64) -> Complex64 {
        envelope(&self.read_in, t) + envelope(&self.read_out, t)
    }

    pub fn max_rabi(&self) -> f64 {
        self.read_in.peak_rabi.norm().max(self.read_out.peak_rabi.norm())
    }

    /// Signal samples on `times`, scaled so `Σ w·|s|² = N_in` exactly.
    pub fn signal_samples(&self, times: &[f64], weights: &[f64]) -> Vec<Complex64> {
        let raw: Vec<Complex64> = times
            .iter()
            .map(|&t| self.signal.raw(t - self.read_in.center))
            .collect();
        normalize_samples(raw, weights, self.n_in)
    }
}

/// Rescales `samples` so their quadrature energy equals `n`. A zero-norm
/// input (or `n = 0`) yields all zeros.
pub fn normalize_samples(samples: Vec<Complex64>, weights: &[f64], n: f64) -> Vec<Complex64> {
    let norm: f64 = samples
        .iter()
        .zip(weights)
        .map(|(s, w)| w * s.norm_sqr())
        .sum();
    if norm <= 0.0 || n == 0.0 {
        return vec![Complex64::new(0.0, 0.0); samples.len()];
    }
    let scale = (n / norm).sqrt();
    samples.into_iter().map(|s| s * scale).collect()
}

/// Assembles a sequence from pulse energies.
pub fn build_sequence(
    read_in_pj: f64,
    read_out_pj: f64,
    storage_time: f64,
    n_in: f64,
    signal: SignalShape,
    calibration: &PulseCalibration,
    window: f64,
) -> Result<PulseSequence> {
    let rin = calibration.peak_rabi(read_in_pj)?;
    let rout = calibration.peak_rabi(read_out_pj)?;
    PulseSequence::from_rabi(rin, rout, storage_time, n_in, signal, calibration.fwhm, window)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_peak_and_half_intensity_points() {
        let p = ControlPulse {
            peak_rabi: Complex64::new(3.0, 4.0),
            center: 0.02,
            fwhm: 0.01,
            shape: PulseShape::Gaussian,
        };
        assert_eq!(envelope(&p, 0.02), p.peak_rabi);
        for t in [0.015, 0.025] {
            let half = envelope(&p, t).norm_sqr();
            assert!((half - 12.5).abs() < 1e-12);
        }
    }

    #[test]
    fn envelope_energy_matches_quadrature() {
        let p = ControlPulse::gaussian(7.0, 0.0, 0.01);
        let n = 200_001;
        let (lo, hi) = (-0.1, 0.1);
        let h = (hi - lo) / (n - 1) as f64;
        let integral: f64 = (0..n)
            .map(|i| {
                let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                w * h * envelope(&p, lo + h * i as f64).norm_sqr()
            })
            .sum();
        let closed = 49.0 * 0.01 * (PI / (4.0 * LN_2)).sqrt();
        assert!((integral - closed).abs() < 1e-10 * closed);
    }

    #[test]
    fn rabi_follows_square_root_of_energy() {
        let a = energy_to_peak_rabi(200.0, 130.0, 0.01, 2.5).unwrap();
        let b = energy_to_peak_rabi(800.0, 130.0, 0.01, 2.5).unwrap();
        assert!((b - 2.0 * a).abs() < 1e-12 * b);
        assert_eq!(energy_to_peak_rabi(0.0, 130.0, 0.01, 2.5).unwrap(), 0.0);
        let c = energy_to_peak_rabi(330.0, 130.0, 0.01, 2.5).unwrap();
        let d = energy_to_peak_rabi(750.0, 130.0, 0.01, 2.5).unwrap();
        assert!((c / d - (330.0f64 / 750.0).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn rabi_rejects_bad_inputs() {
        assert!(energy_to_peak_rabi(-1.0, 130.0, 0.01, 1.0).is_err());
        assert!(energy_to_peak_rabi(1.0, 0.0, 0.01, 1.0).is_err());
        assert!(energy_to_peak_rabi(1.0, 130.0, 0.0, 1.0).is_err());
        assert!(energy_to_peak_rabi(1.0, 130.0, 0.01, 0.0).is_err());
    }

    #[test]
    fn sequence_ordering_and_windows() {
        let cal = PulseCalibration::default();
        for storage_ns in [50.0, 70.0, 150.0] {
            let seq = build_sequence(750.0, 750.0, storage_ns * 1e-3, 1.0, SignalShape::default(), &cal, DEFAULT_WINDOW)
                .unwrap();
            assert!((seq.read_out.center - seq.read_in.center - seq.storage_time).abs() < 1e-15);
            let (a0, a1) = seq.input_window();
            let (b0, b1) = seq.retrieval_window();
            assert!(a0 >= 0.0 && a1 <= b0 && b0 < b1);
            assert!(seq.natural_span() >= b1);
        }
    }

    #[test]
    fn sequence_rejects_overlap() {
        let cal = PulseCalibration::default();
        assert!(matches!(
            build_sequence(1.0, 1.0, 0.02, 1.0, SignalShape::default(), &cal, DEFAULT_WINDOW),
            Err(Error::Precondition(_))
        ));
        assert!(build_sequence(1.0, 1.0, 0.005, 1.0, SignalShape::default(), &cal, 0.004).is_err());
    }

    #[test]
    fn signal_normalization_on_grid() {
        let cal = PulseCalibration::default();
        for n_in in [0.0, 1.0, 3.2, 3.5] {
            let seq = build_sequence(750.0, 750.0, 0.05, n_in, SignalShape::default(), &cal, DEFAULT_WINDOW)
                .unwrap();
            let n = 500;
            let h = seq.natural_span() / (n - 1) as f64;
            let times: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
            let mut w = vec![h; n];
            w[0] *= 0.5;
            w[n - 1] *= 0.5;
            let s = seq.signal_samples(&times, &w);
            let energy: f64 = s.iter().zip(&w).map(|(s, w)| w * s.norm_sqr()).sum();
            if n_in == 0.0 {
                assert_eq!(energy, 0.0);
            } else {
                assert!((energy - n_in).abs() < 1e-12 * n_in);
            }
        }
    }

    #[test]
    fn zero_read_out_energy_gives_dark_read_out() {
        let seq = build_sequence(750.0, 0.0, 0.05, 1.0, SignalShape::default(), &PulseCalibration::default(), DEFAULT_WINDOW)
            .unwrap();
        assert_eq!(seq.control(seq.read_out.center).norm(), envelope(&seq.read_in, seq.read_out.center).norm());
    }
}
