//! Parameter scans over the named operating points, window-resolved noise
//! comparison and per-figure plot tables.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitting::{fit_exponential, FitResult};
use crate::greens::{extract_greens, quartic_integrals, GreensFunctionSet, KernelPower, Mode};
use crate::io::{fmt_num, Table};
use crate::medium::{absorption_spectrum, phase_mismatch, DetuningConfig, MediumParams};
use crate::parallel::Parallelism;
use crate::presets::{memory_preset, MemoryPreset, Side};
use crate::pulse::{PulseCalibration, PulseSequence};
use crate::solver::{memory_run, window_photons, Inputs, Propagator, SimGrid, SolverOptions};
use crate::stats::{g2_out, G2Model};
use crate::units::{ghz_to_rad_per_us, rad_per_us_to_ghz, us_to_ns};

/// Spatial resolution and the floor on temporal resolution. The time grid
/// is refined beyond `min_n_t` when the pulses demand it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n_z: usize,
    pub min_n_t: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { n_z: 200, min_n_t: 2000 }
    }
}

impl GridSpec {
    pub fn grid_for(&self, seq: &PulseSequence) -> Result<SimGrid> {
        SimGrid::resolving(seq, self.n_z, self.min_n_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanVariable {
    /// Change of `|Δ_s|` away from `2Δ_hf`, GHz. Each case keeps its side.
    Detuning,
    /// Read-in and read-out pulse energy, pJ.
    Energy,
    StorageTime,
    Alpha,
}

impl ScanVariable {
    pub fn column(self) -> &'static str {
        match self {
            ScanVariable::Detuning => "detuning_offset_GHz",
            ScanVariable::Energy => "energy_pJ",
            ScanVariable::StorageTime => "storage_ns",
            ScanVariable::Alpha => "alpha",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "BNS", alias = "bns")]
    Bns,
    #[serde(rename = "STD", alias = "std")]
    Std,
    /// Anti-Stokes channel removed, on the base preset's side.
    #[serde(rename = "FWM_off", alias = "fwm_off")]
    FwmOff,
}

impl Case {
    pub fn label(self) -> &'static str {
        match self {
            Case::Bns => "BNS",
            Case::Std => "STD",
            Case::FwmOff => "FWM_off",
        }
    }

    fn side(self, base: Side) -> Side {
        match self {
            Case::Bns => Side::Bns,
            Case::Std => Side::Std,
            Case::FwmOff => base,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Observable {
    #[serde(rename = "eta")]
    Eta,
    /// `η − η_FWM-off` at the same detuning.
    #[serde(rename = "eta_minus_ideal")]
    EtaMinusIdeal,
    #[serde(rename = "delta_k")]
    DeltaK,
    #[serde(rename = "anti_stokes_OD")]
    AntiStokesOd,
    #[serde(rename = "N_noise_by_window")]
    NoiseByWindow,
    #[serde(rename = "mu1")]
    Mu1,
    /// Coherent-input `g²_out` from the kernels at the preset's `N_in`.
    #[serde(rename = "g2_curve")]
    G2Curve,
}

impl Observable {
    pub fn columns(self) -> &'static [&'static str] {
        match self {
            Observable::Eta => &["eta"],
            Observable::EtaMinusIdeal => &["eta_minus_ideal"],
            Observable::DeltaK => &["delta_k_per_mm"],
            Observable::AntiStokesOd => &["anti_stokes_OD"],
            Observable::NoiseByWindow => &["N_noise_input", "N_noise_retrieval", "N_SRS_AS", "N_SRS_P"],
            Observable::Mu1 => &["mu1"],
            Observable::G2Curve => &["a_kernel", "g2_out"],
        }
    }

    fn is_eta_type(self) -> bool {
        matches!(self, Observable::Eta | Observable::EtaMinusIdeal)
    }

    fn needs_greens(self) -> bool {
        matches!(self, Observable::NoiseByWindow | Observable::Mu1 | Observable::G2Curve)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRange {
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl ScanRange {
    pub fn values(&self) -> Vec<f64> {
        let n = self.n_points;
        if n == 1 {
            return vec![self.lo];
        }
        let step = (self.hi - self.lo) / (n - 1) as f64;
        (0..n)
            .map(|i| if i == n - 1 { self.hi } else { self.lo + step * i as f64 })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    pub scan_variable: ScanVariable,
    pub range: ScanRange,
    pub cases: Vec<Case>,
    pub base_preset: String,
    pub outputs: Vec<Observable>,
    #[serde(default)]
    pub grid: GridSpec,
}

impl ScanSpec {
    /// The three-case detuning scan: ±5 GHz, 101 points.
    pub fn default_detuning(base_preset: &str) -> Self {
        ScanSpec {
            scan_variable: ScanVariable::Detuning,
            range: ScanRange {
                lo: -5.0,
                hi: 5.0,
                n_points: 101,
            },
            cases: vec![Case::Bns, Case::Std, Case::FwmOff],
            base_preset: base_preset.to_string(),
            outputs: vec![Observable::Eta, Observable::EtaMinusIdeal],
            grid: GridSpec::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if self.range.n_points < 2 {
            errs.push("range.n_points must be at least 2".to_string());
        }
        if !(self.range.lo.is_finite() && self.range.hi.is_finite()) {
            errs.push("range bounds must be finite".to_string());
        }
        if self.cases.is_empty() {
            errs.push("cases must not be empty".to_string());
        }
        if self.outputs.is_empty() {
            errs.push("outputs must not be empty".to_string());
        }
        if self.cases.contains(&Case::FwmOff) && self.outputs.iter().any(|o| !o.is_eta_type()) {
            errs.push("case FWM_off supports only eta and eta_minus_ideal".to_string());
        }
        if self.grid.n_z < 2 || self.grid.min_n_t < 2 {
            errs.push("grid needs n_z ≥ 2 and min_n_t ≥ 2".to_string());
        }
        let (lo, hi) = (self.range.lo.min(self.range.hi), self.range.lo.max(self.range.hi));
        match self.scan_variable {
            ScanVariable::Energy if lo < 0.0 => errs.push("energies must be non-negative".into()),
            ScanVariable::StorageTime if lo < 0.0 => errs.push("storage times must be non-negative".into()),
            ScanVariable::Alpha if !(lo >= 0.0 && hi <= 1.0) => errs.push("alpha out of [0,1]".into()),
            _ => {}
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs))
        }
    }

    fn columns(&self) -> Vec<&'static str> {
        let mut cols = Vec::new();
        for o in &self.outputs {
            for c in o.columns() {
                if !cols.contains(c) {
                    cols.push(*c);
                }
            }
        }
        cols
    }
}

/// One `(scan point, case)` row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub value: f64,
    pub case: Case,
    pub delta_s_ghz: f64,
    /// Observable columns in [`ScanResult::columns`] order; NaN when not
    /// computed.
    pub values: Vec<f64>,
    pub n_t: usize,
    pub time_steps: usize,
    pub peak_spinwave_excitation: f64,
    /// `None` for a successful point.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub spec: ScanSpec,
    pub columns: Vec<String>,
    pub rows: Vec<ScanRow>,
}

impl ScanResult {
    /// `(value, column)` pairs for one case, skipping failed rows.
    pub fn series(&self, case: Case, column: &str) -> Vec<(f64, f64)> {
        let Some(k) = self.columns.iter().position(|c| c == column) else {
            return Vec::new();
        };
        self.rows
            .iter()
            .filter(|r| r.case == case && r.error.is_none())
            .map(|r| (r.value, r.values[k]))
            .collect()
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    pub fn to_table(&self) -> Table {
        let mut header = vec![self.spec.scan_variable.column().to_string(), "case".into(), "delta_s_GHz".into()];
        header.extend(self.columns.iter().cloned());
        header.extend(["n_t", "time_steps", "peak_spinwave", "status"].map(String::from));
        let mut t = Table::new(header);
        for r in &self.rows {
            let mut row = vec![fmt_num(r.value), r.case.label().to_string(), fmt_num(r.delta_s_ghz)];
            row.extend(r.values.iter().map(|v| fmt_num(*v)));
            row.push(r.n_t.to_string());
            row.push(r.time_steps.to_string());
            row.push(fmt_num(r.peak_spinwave_excitation));
            row.push(match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("error: {e}"),
            });
            t.push(row);
        }
        t
    }
}

/// Everything needed to run one case at one scan point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSetup {
    pub medium: MediumParams,
    pub detuning: DetuningConfig,
    pub sequence: PulseSequence,
    pub options: SolverOptions,
}

/// Applies the scan variable to `base` for the given side.
pub fn point_setup(
    base: &MemoryPreset,
    calibration: &PulseCalibration,
    variable: ScanVariable,
    value: f64,
    side: Side,
    fwm: bool,
) -> Result<PointSetup> {
    let mut preset = base.clone();
    preset.side = side;
    match variable {
        ScanVariable::Detuning => {}
        ScanVariable::Energy => {
            preset.read_in_pj = value;
            preset.read_out_pj = value;
        }
        ScanVariable::StorageTime => preset.storage_ns = value,
        ScanVariable::Alpha => preset.medium.alpha = value,
    }
    preset.medium.validate()?;
    let mut detuning = preset.detuning();
    if variable == ScanVariable::Detuning {
        let sign = match side {
            Side::Bns => -1.0,
            Side::Std => 1.0,
        };
        let delta_s = sign * (2.0 * preset.medium.delta_hf + ghz_to_rad_per_us(value));
        detuning = DetuningConfig::new(delta_s, &preset.medium);
    }
    let mut options = preset.solver_options();
    options.fwm_enabled = fwm;
    Ok(PointSetup {
        medium: preset.medium,
        detuning,
        sequence: preset.sequence(calibration)?,
        options,
    })
}

fn nan_row(value: f64, case: Case, delta_s: f64, n_cols: usize, error: Option<String>) -> ScanRow {
    ScanRow {
        value,
        case,
        delta_s_ghz: delta_s,
        values: vec![f64::NAN; n_cols],
        n_t: 0,
        time_steps: 0,
        peak_spinwave_excitation: f64::NAN,
        error,
    }
}

fn evaluate_case(
    spec: &ScanSpec,
    columns: &[&str],
    base: &MemoryPreset,
    calibration: &PulseCalibration,
    value: f64,
    case: Case,
) -> ScanRow {
    let side = case.side(base.side);
    let setup = match point_setup(base, calibration, spec.scan_variable, value, side, case != Case::FwmOff) {
        Ok(s) => s,
        Err(e) => return nan_row(value, case, f64::NAN, columns.len(), Some(e.to_string())),
    };
    let delta_s_ghz = rad_per_us_to_ghz(setup.detuning.delta_s);
    let mut row = nan_row(value, case, delta_s_ghz, columns.len(), None);
    let set = |name: &str, v: f64, row: &mut ScanRow| {
        if let Some(k) = columns.iter().position(|c| *c == name) {
            row.values[k] = v;
        }
    };
    let outcome = (|| -> Result<()> {
        let grid = spec.grid.grid_for(&setup.sequence)?;
        row.n_t = grid.n_t;
        let run = memory_run(&setup.medium, &setup.detuning, &setup.sequence, &grid, &setup.options)?;
        row.time_steps = run.diagnostics.time_steps;
        row.peak_spinwave_excitation = run.diagnostics.peak_spinwave_excitation;
        let eta = run.eta()?;
        if !eta.is_finite() {
            return Err(Error::Numerical("non-finite efficiency".into()));
        }
        set("eta", eta, &mut row);
        if spec.outputs.contains(&Observable::EtaMinusIdeal) {
            let ideal = if case == Case::FwmOff {
                eta
            } else {
                let off = SolverOptions {
                    fwm_enabled: false,
                    ..setup.options
                };
                memory_run(&setup.medium, &setup.detuning, &setup.sequence, &grid, &off)?.eta()?
            };
            set("eta_minus_ideal", eta - ideal, &mut row);
        }
        if spec.outputs.contains(&Observable::DeltaK) {
            set("delta_k_per_mm", phase_mismatch(&setup.medium, &setup.detuning), &mut row);
        }
        if spec.outputs.contains(&Observable::AntiStokesOd) {
            let od = absorption_spectrum(&setup.medium, &[setup.detuning.delta_a])?[0].optical_depth;
            set("anti_stokes_OD", od, &mut row);
        }
        if spec.outputs.iter().any(|o| o.needs_greens()) {
            // Kernel columns run sequentially here: scan points are the
            // parallel unit.
            let g = extract_greens(
                &setup.medium,
                &setup.detuning,
                &setup.sequence,
                &grid,
                &setup.options,
                Parallelism::Sequential,
            )?;
            let alpha = setup.medium.alpha;
            let input = g.noise_in_window(alpha, g.input_window);
            let retrieval = g.noise_in_window(alpha, g.retrieval_window);
            set("N_noise_input", input.n_out(), &mut row);
            set("N_noise_retrieval", retrieval.n_out(), &mut row);
            set("N_SRS_AS", retrieval.n_srs_as, &mut row);
            set("N_SRS_P", retrieval.n_srs_p, &mut row);
            if spec.outputs.contains(&Observable::Mu1) {
                set("mu1", mu1(retrieval.n_out(), eta)?, &mut row);
            }
            if spec.outputs.contains(&Observable::G2Curve) {
                let (a, g2) = coherent_g2(&g, eta, setup.sequence.n_in, retrieval.n_srs)?;
                set("a_kernel", a, &mut row);
                set("g2_out", g2, &mut row);
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        row.error = Some(e.to_string());
    }
    row
}

/// `a = 𝒢_ss/η² − 1` for a coherent input and `g²_out` at `η·N_in`.
pub fn coherent_g2(g: &GreensFunctionSet, eta: f64, n_in: f64, n_srs: f64) -> Result<(f64, f64)> {
    let q = quartic_integrals(g, KernelPower::Fourth);
    let model = G2Model::from_kernel(1.0, q[Mode::Signal.index()][Mode::Signal.index()], eta, n_srs, 0.0)?;
    Ok((model.a, g2_out(&model, eta * n_in)?))
}

/// Runs every `(value, case)` pair of `spec` on `base`. Scan points are
/// independent and run concurrently; rows come back in scan order, and a
/// failing point is kept as an error row.
pub fn run_scan(spec: &ScanSpec, base: &MemoryPreset, calibration: &PulseCalibration, par: Parallelism) -> Result<ScanResult> {
    spec.validate()?;
    let columns = spec.columns();
    let values = spec.range.values();
    let pairs: Vec<(f64, Case)> = values
        .iter()
        .flat_map(|v| spec.cases.iter().map(move |c| (*v, *c)))
        .collect();
    let rows = par.map(&pairs, |&(v, c)| evaluate_case(spec, &columns, base, calibration, v, c));
    Ok(ScanResult {
        spec: spec.clone(),
        columns: columns.iter().map(|c| c.to_string()).collect(),
        rows,
    })
}

/// [`run_scan`] with the spec's named base preset.
pub fn run_named_scan(spec: &ScanSpec, calibration: &PulseCalibration, par: Parallelism) -> Result<ScanResult> {
    let base = memory_preset(&spec.base_preset)
        .ok_or_else(|| Error::Config(vec![format!("unknown preset '{}'", spec.base_preset)]))?;
    run_scan(spec, &base, calibration, par)
}

/// Fits the efficiency of a storage-time scan with `A·exp(−t/τ)`.
pub fn lifetime_from_scan(result: &ScanResult, case: Case) -> Result<FitResult> {
    if result.spec.scan_variable != ScanVariable::StorageTime {
        return Err(Error::Precondition("lifetime fits need a storage-time scan".into()));
    }
    let s = result.series(case, "eta");
    let (t, v): (Vec<f64>, Vec<f64>) = s.into_iter().unzip();
    fit_exponential(&t, &v)
}

/// Noise-to-efficiency ratio `μ₁ = N_noise/η`.
pub fn mu1(noise: f64, eta: f64) -> Result<f64> {
    if !(eta > 0.0) {
        return Err(Error::invalid("eta", "must be positive"));
    }
    if !(noise >= 0.0) {
        return Err(Error::invalid("N_noise", "must be non-negative"));
    }
    Ok(noise / eta)
}

/// Settings for the sampled-input noise estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NoiseSampling {
    pub samples: usize,
    pub seed: u64,
}

impl Default for NoiseSampling {
    fn default() -> Self {
        NoiseSampling { samples: 256, seed: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowNoise {
    pub label: String,
    pub window_ns: (f64, f64),
    pub n_srs_as: f64,
    pub n_srs_p: f64,
    /// Kernel route: `N_SRS_AS + N_SRS_P`.
    pub n_noise_greens: f64,
    /// Memory runs with random vacuum-occupation inputs.
    pub n_noise_sampled: f64,
    pub sampled_std_err: f64,
    /// Signal photons of a noiseless memory run in the window.
    pub signal_photons: f64,
}

/// Noise photons per window by two routes: from the extracted kernels, and
/// by averaging memory runs fed with complex Gaussian inputs whose
/// occupation matches the vacuum anti-Stokes field and the thermal spin
/// wave (`α` per mode).
pub fn compare_windows(
    setup: &PointSetup,
    grid: &SimGrid,
    windows: &[(String, (f64, f64))],
    sampling: &NoiseSampling,
    par: Parallelism,
) -> Result<Vec<WindowNoise>> {
    for (label, (lo, hi)) in windows {
        if !(lo < hi && *lo >= 0.0 && *hi <= grid.t_span) {
            return Err(Error::Precondition(format!("window '{label}' lies outside the simulated span")));
        }
    }
    if sampling.samples < 2 {
        return Err(Error::invalid("samples", "need at least two samples"));
    }
    let (m, cfg, seq, opts) = (&setup.medium, &setup.detuning, &setup.sequence, &setup.options);
    let g = extract_greens(m, cfg, seq, grid, opts, par)?;
    let prop = Propagator::new(m, cfg, seq, grid, opts)?;
    let times = grid.times();
    let tw = grid.time_weights();
    let zw = grid.z_weights();
    let signal_run = memory_run(m, cfg, seq, grid, opts)?;
    let sqrt_alpha = m.alpha.sqrt();

    let per_sample: Vec<Result<Vec<f64>>> = par.map_range(sampling.samples, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed.wrapping_add(k as u64));
        let mut draw = |scale: f64| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * (scale * std::f64::consts::FRAC_1_SQRT_2)
        };
        let mut inputs = Inputs::zeros(grid);
        if opts.fwm_enabled {
            for (v, w) in inputs.anti_stokes.iter_mut().zip(&tw) {
                *v = draw(1.0 / w.sqrt());
            }
        }
        for (v, w) in inputs.spin_wave.iter_mut().zip(&zw) {
            *v = draw(sqrt_alpha / w.sqrt());
        }
        let (out, _) = prop.march(&inputs, 0, None)?;
        Ok(windows
            .iter()
            .map(|(_, w)| window_photons(&out.signal, &times, &tw, *w))
            .collect())
    });
    let per_sample: Vec<Vec<f64>> = per_sample.into_iter().collect::<Result<_>>()?;
    let n = per_sample.len() as f64;

    let signal_trace: Vec<Complex64> = signal_run
        .abs2_signal_out
        .iter()
        .map(|p| Complex64::new(p.sqrt(), 0.0))
        .collect();
    Ok(windows
        .iter()
        .enumerate()
        .map(|(i, (label, w))| {
            let mean = per_sample.iter().map(|s| s[i]).sum::<f64>() / n;
            let var = per_sample.iter().map(|s| (s[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let b = g.noise_in_window(m.alpha, *w);
            WindowNoise {
                label: label.clone(),
                window_ns: (us_to_ns(w.0), us_to_ns(w.1)),
                n_srs_as: b.n_srs_as,
                n_srs_p: b.n_srs_p,
                n_noise_greens: b.n_srs,
                n_noise_sampled: mean,
                sampled_std_err: (var / n).sqrt(),
                signal_photons: window_photons(&signal_trace, &times, &tw, *w),
            }
        })
        .collect())
}

/// The sequence's input and retrieval windows, labelled.
pub fn standard_windows(seq: &PulseSequence) -> Vec<(String, (f64, f64))> {
    vec![
        ("input".to_string(), seq.input_window()),
        ("retrieval".to_string(), seq.retrieval_window()),
    ]
}

pub fn window_table(rows: &[WindowNoise]) -> Table {
    let mut t = Table::new([
        "window",
        "t_lo_ns",
        "t_hi_ns",
        "N_SRS_AS",
        "N_SRS_P",
        "N_noise_greens",
        "N_noise_sampled",
        "sampled_std_err",
        "signal_photons",
    ]);
    for r in rows {
        let mut row = vec![r.label.clone()];
        row.extend(
            [
                r.window_ns.0,
                r.window_ns.1,
                r.n_srs_as,
                r.n_srs_p,
                r.n_noise_greens,
                r.n_noise_sampled,
                r.sampled_std_err,
                r.signal_photons,
            ]
            .map(fmt_num),
        );
        t.push(row);
    }
    t
}

/// Per-panel tables for the three-case detuning comparison:
/// efficiencies, gain over the FWM-free case, phase mismatch, and the
/// anti-Stokes absorption line.
pub fn fig_a1_tables(result: &ScanResult, base: &MemoryPreset) -> Result<Vec<(String, Table)>> {
    if result.spec.scan_variable != ScanVariable::Detuning {
        return Err(Error::Precondition("plot data needs a detuning scan".into()));
    }
    let m = &base.medium;
    let values = result.spec.range.values();
    let lookup = |case: Case, col: &str| {
        let s = result.series(case, col);
        values
            .iter()
            .map(|v| s.iter().find(|(x, _)| x == v).map_or(f64::NAN, |p| p.1))
            .collect::<Vec<f64>>()
    };
    let abs_ghz: Vec<f64> = values.iter().map(|v| 2.0 * rad_per_us_to_ghz(m.delta_hf) + v).collect();
    let side_cfg = |side: Side, v: f64| {
        let sign = if side == Side::Bns { -1.0 } else { 1.0 };
        DetuningConfig::new(sign * (2.0 * m.delta_hf + ghz_to_rad_per_us(v)), m)
    };

    let mut a = Table::new(["abs_detuning_GHz", "eta_STD", "eta_BNS", "eta_FWM_off"]);
    let mut b = Table::new(["abs_detuning_GHz", "gain_BNS", "gain_STD"]);
    let (e_std, e_bns, e_off) = (lookup(Case::Std, "eta"), lookup(Case::Bns, "eta"), lookup(Case::FwmOff, "eta"));
    let (g_bns, g_std) = (lookup(Case::Bns, "eta_minus_ideal"), lookup(Case::Std, "eta_minus_ideal"));
    let mut c = Table::new(["abs_detuning_GHz", "delta_k_BNS_per_mm", "delta_k_STD_per_mm", "phase_BNS", "phase_STD"]);
    let mut d = Table::new(["anti_stokes_detuning_GHz", "anti_stokes_OD"]);
    for (i, v) in values.iter().enumerate() {
        a.push_numbers(&[abs_ghz[i], e_std[i], e_bns[i], e_off[i]]);
        b.push_numbers(&[abs_ghz[i], g_bns[i], g_std[i]]);
        let kb = phase_mismatch(m, &side_cfg(Side::Bns, *v));
        let ks = phase_mismatch(m, &side_cfg(Side::Std, *v));
        c.push_numbers(&[abs_ghz[i], kb, ks, kb * m.length, ks * m.length]);
    }
    let da: Vec<f64> = values.iter().map(|v| side_cfg(Side::Bns, *v).delta_a).collect();
    let mut sorted = da.clone();
    sorted.sort_by(f64::total_cmp);
    for p in absorption_spectrum(m, &sorted)? {
        d.push_numbers(&[rad_per_us_to_ghz(p.detuning), p.optical_depth]);
    }
    Ok(vec![
        ("figA1a.csv".into(), a),
        ("figA1b.csv".into(), b),
        ("figA1c.csv".into(), c),
        ("figA1d.csv".into(), d),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn light_preset() -> MemoryPreset {
        let mut p = memory_preset("sim-750pj").unwrap();
        p.read_in_pj = 100.0;
        p.read_out_pj = 100.0;
        p
    }

    fn small_spec(var: ScanVariable, lo: f64, hi: f64, n: usize, cases: Vec<Case>) -> ScanSpec {
        ScanSpec {
            scan_variable: var,
            range: ScanRange { lo, hi, n_points: n },
            cases,
            base_preset: "sim-750pj".into(),
            outputs: vec![Observable::Eta],
            grid: GridSpec { n_z: 24, min_n_t: 400 },
        }
    }

    #[test]
    fn mu1_values() {
        assert!((mu1(0.793, 0.428).unwrap() - 1.85).abs() < 5e-3);
        assert!((mu1(0.0467, 0.230).unwrap() - 0.203).abs() < 5e-4);
        assert_eq!(mu1(0.0, 0.3).unwrap(), 0.0);
        assert!(mu1(0.1, 0.0).is_err());
    }

    #[test]
    fn spec_validation_aggregates() {
        let mut s = small_spec(ScanVariable::Alpha, 0.0, 1.5, 1, vec![]);
        s.outputs = vec![Observable::Mu1];
        let Err(Error::Config(errs)) = s.validate() else {
            panic!("expected config errors");
        };
        assert_eq!(errs.len(), 3, "{errs:?}");
        let mut s = small_spec(ScanVariable::Detuning, -1.0, 1.0, 3, vec![Case::FwmOff]);
        s.outputs = vec![Observable::DeltaK];
        assert!(s.validate().is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let s = ScanSpec::default_detuning("sim-750pj");
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"FWM_off\"") && text.contains("\"eta_minus_ideal\""));
        let back: ScanSpec = serde_json::from_str(&text).unwrap();
        assert_eq!(s, back);
        assert_eq!(s.range.values().len(), 101);
        assert_eq!(s.range.values()[50], 0.0);
    }

    #[test]
    fn zero_energy_stores_nothing() {
        let spec = small_spec(ScanVariable::Energy, 0.0, 100.0, 2, vec![Case::Bns, Case::Std, Case::FwmOff]);
        let r = run_scan(&spec, &light_preset(), &PulseCalibration::default(), Parallelism::Parallel).unwrap();
        assert_eq!(r.failures(), 0);
        for case in [Case::Bns, Case::Std, Case::FwmOff] {
            let s = r.series(case, "eta");
            assert!(s[0].1.abs() < 1e-12, "{case:?}: {}", s[0].1);
            assert!(s[1].1 > 1e-3);
        }
    }

    #[test]
    fn failing_points_are_marked() {
        let spec = small_spec(ScanVariable::StorageTime, -10.0, 10.0, 2, vec![Case::Bns]);
        assert!(spec.validate().is_err());
        // Bypass validation to exercise the per-row error path.
        let columns = spec.columns();
        let row = evaluate_case(&spec, &columns, &light_preset(), &PulseCalibration::default(), -10.0, Case::Bns);
        assert!(row.error.is_some());
        assert!(row.values[0].is_nan());
    }

    #[test]
    fn scan_order_does_not_change_rows() {
        let calib = PulseCalibration::default();
        let base = light_preset();
        let fwd = small_spec(ScanVariable::Detuning, -2.0, 2.0, 3, vec![Case::Bns, Case::Std]);
        let mut rev = fwd.clone();
        rev.range = ScanRange {
            lo: 2.0,
            hi: -2.0,
            n_points: 3,
        };
        rev.cases.reverse();
        let a = run_scan(&fwd, &base, &calib, Parallelism::Parallel).unwrap();
        let b = run_scan(&rev, &base, &calib, Parallelism::Sequential).unwrap();
        for ra in &a.rows {
            let rb = b.rows.iter().find(|r| r.value == ra.value && r.case == ra.case).unwrap();
            assert_eq!(ra, rb);
        }
    }

    #[test]
    fn fwm_off_without_pumping_noise_is_silent() {
        let calib = PulseCalibration::default();
        let base = light_preset();
        let setup = point_setup(&base, &calib, ScanVariable::Energy, 100.0, Side::Bns, false).unwrap();
        let grid = SimGrid::resolving(&setup.sequence, 8, 200).unwrap();
        let w = compare_windows(&setup, &grid, &standard_windows(&setup.sequence), &NoiseSampling { samples: 4, seed: 1 }, Parallelism::Sequential)
            .unwrap();
        for r in &w {
            assert_eq!(r.n_noise_greens, 0.0);
            assert_eq!(r.n_noise_sampled, 0.0);
        }
        let bad = vec![("late".to_string(), (0.0, 10.0))];
        assert!(compare_windows(&setup, &grid, &bad, &NoiseSampling::default(), Parallelism::Sequential).is_err());
    }
}
