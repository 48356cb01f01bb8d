//! The `rms` command line: config loading, verb dispatch and output.
//!
//! Every verb computes all of its outputs in memory first. Files are then
//! written one by one with atomic renames, and `run.json` goes last, so a
//! failed run leaves no outputs and an interrupted one never leaves a
//! truncated file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::{apply_override, validate_config, RunConfig, Validated};
use crate::error::{Error, Result};
use crate::fitting::{fit_exponential, fit_g2_model, fit_linear_noise_vs_alpha, BootstrapOptions, G2FitOptions};
use crate::greens::extract_greens;
use crate::io::{read_columns, write_atomic, Table};
use crate::medium::absorption_spectrum;
use crate::parallel::Parallelism;
use crate::runner::{
    fig_a1_tables, lifetime_from_scan, point_setup, run_scan, Case, Observable, ScanSpec, ScanVariable,
};
use crate::solver::memory_run;
use crate::stats::{fock_prediction, g2_out, heralding_threshold, prediction_table, unit_grid, StatPoint};
use crate::units::{ghz_to_rad_per_us, rad_per_us_to_ghz, us_to_ns};

#[derive(Debug, Parser)]
#[command(name = "rms", version, about = "Raman memory simulator with four-wave-mixing noise")]
pub struct Cli {
    #[command(subcommand)]
    pub verb: Verb,
    /// JSON config; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if needed.
    #[arg(long, global = true, default_value = "rms-out")]
    pub out: PathBuf,
    /// Override a config key, e.g. `--set medium.alpha=0.002`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Worker threads for scans and kernel extraction.
    #[arg(long, env = "RMS_WORKERS", global = true)]
    pub workers: Option<usize>,
    /// Also write per-figure CSV tables.
    #[arg(long, global = true)]
    pub emit_plot_data: bool,
    /// Reject unknown config keys (default).
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Warn about unknown config keys instead of rejecting them.
    #[arg(long, global = true)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Verb {
    /// Two-line absorption spectrum of the medium.
    Spectrum,
    /// One storage-and-retrieval run with output traces.
    Simulate,
    /// Green's kernels and the window noise budget.
    Greens,
    /// Parameter scan over the configured operating point.
    Scan,
    /// Fit the g² noise model to `N_out,g2,g2_err` data.
    G2Fit,
    /// Predicted g² against heralding efficiency for a single-photon input.
    G2Predict,
    /// Exponential lifetime fit to `t_ns,value` data.
    LifetimeFit,
    /// Noise against residual population, simulated or fitted.
    NoiseVsPumping,
}

impl Verb {
    pub fn name(self) -> &'static str {
        match self {
            Verb::Spectrum => "spectrum",
            Verb::Simulate => "simulate",
            Verb::Greens => "greens",
            Verb::Scan => "scan",
            Verb::G2Fit => "g2-fit",
            Verb::G2Predict => "g2-predict",
            Verb::LifetimeFit => "lifetime-fit",
            Verb::NoiseVsPumping => "noise-vs-pumping",
        }
    }
}

/// Files produced by a verb plus a JSON summary for the manifest.
#[derive(Debug, Default)]
pub struct VerbOutput {
    pub files: BTreeMap<String, Vec<u8>>,
    pub summary: Value,
}

impl VerbOutput {
    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        self.files.insert(name.to_string(), t.to_csv()?);
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl serde::Serialize) -> Result<()> {
        self.files
            .insert(name.to_string(), serde_json::to_string_pretty(v)?.into_bytes());
        Ok(())
    }
}

/// Exit code for an error: 2 for numerical failures, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        2
    } else {
        1
    }
}

/// Parses `argv` (including the program name), runs the verb and returns
/// the process exit code. Diagnostics go to stderr.
pub fn run_command<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            return if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                0
            } else {
                1
            };
        }
    };
    match run(&cli) {
        Ok(out_dir) => {
            eprintln!("rms {}: outputs written to {}", cli.verb.name(), out_dir.display());
            0
        }
        Err(e) => {
            eprintln!("rms {}: {e}", cli.verb.name());
            exit_code(&e)
        }
    }
}

/// Reads and validates the config, applying `--set` overrides first.
pub fn load_config(cli: &Cli) -> Result<Validated> {
    let mut doc = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::Config(vec![format!("cannot read config {}: {e}", path.display())]))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(vec![format!("config {} is not valid JSON: {e}", path.display())]))?
        }
        None => Value::Null,
    };
    let mut errs = Vec::new();
    for o in &cli.overrides {
        if let Err(e) = apply_override(&mut doc, o) {
            match e {
                Error::Config(list) => errs.extend(list),
                other => errs.push(other.to_string()),
            }
        }
    }
    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    let mut v = validate_config(&doc, !cli.lenient)?;
    // Data paths are relative to the config file.
    if let (Some(data), Some(cfg)) = (&v.config.fit.data, &cli.config) {
        if data.is_relative() {
            if let Some(dir) = cfg.parent() {
                v.config.fit.data = Some(dir.join(data));
            }
        }
    }
    Ok(v)
}

fn prepare_out_dir(dir: &Path) -> Result<()> {
    let unwritable = |e: std::io::Error| Error::Config(vec![format!("output directory {} is not writable: {e}", dir.display())]);
    fs::create_dir_all(dir).map_err(unwritable)?;
    tempfile::tempfile_in(dir).map_err(unwritable)?;
    Ok(())
}

fn run(cli: &Cli) -> Result<PathBuf> {
    let started = Instant::now();
    let validated = load_config(cli)?;
    prepare_out_dir(&cli.out)?;
    let par = Parallelism::with_workers(cli.workers);
    let cfg = &validated.config;
    for w in &validated.warnings {
        eprintln!("warning: {w}");
    }
    let output = execute(cli.verb, cfg, par, cli.emit_plot_data)?;

    for (name, bytes) in &output.files {
        write_atomic(&cli.out.join(name), bytes)?;
    }
    let manifest = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "verb": cli.verb.name(),
        "config_path": cli.config,
        "overrides": cli.overrides,
        "strict": !cli.lenient,
        "workers": cli.workers,
        "resolved_config": cfg,
        "defaults_applied": validated.defaults,
        "warnings": validated.warnings,
        "outputs": output.files.keys().collect::<Vec<_>>(),
        "result": output.summary,
        "wall_time_s": started.elapsed().as_secs_f64(),
    });
    write_atomic(&cli.out.join("run.json"), serde_json::to_string_pretty(&manifest)?.as_bytes())?;
    Ok(cli.out.clone())
}

/// Runs one verb on a validated config, without touching the filesystem
/// except to read fit data.
pub fn execute(verb: Verb, cfg: &RunConfig, par: Parallelism, plot_data: bool) -> Result<VerbOutput> {
    match verb {
        Verb::Spectrum => spectrum(cfg),
        Verb::Simulate => simulate(cfg),
        Verb::Greens => greens(cfg, par),
        Verb::Scan => scan(cfg, par, plot_data),
        Verb::G2Fit => g2_fit(cfg, par, plot_data),
        Verb::G2Predict => g2_predict(cfg),
        Verb::LifetimeFit => lifetime_fit(cfg),
        Verb::NoiseVsPumping => noise_vs_pumping(cfg, par),
    }
}

/// Uniform GHz grid with both line centres inserted exactly.
pub fn spectrum_grid_ghz(cfg: &RunConfig) -> Vec<f64> {
    let r = cfg.spectrum;
    let step = (r.hi_ghz - r.lo_ghz) / (r.n_points - 1) as f64;
    let mut g: Vec<f64> = (0..r.n_points).map(|i| r.lo_ghz + step * i as f64).collect();
    for centre in [0.0, rad_per_us_to_ghz(cfg.memory.medium.delta_hf)] {
        if centre > r.lo_ghz && centre < r.hi_ghz {
            g.push(centre);
        }
    }
    g.sort_by(f64::total_cmp);
    g.dedup();
    g
}

fn spectrum(cfg: &RunConfig) -> Result<VerbOutput> {
    let m = &cfg.memory.medium;
    let ghz = spectrum_grid_ghz(cfg);
    let rad: Vec<f64> = ghz.iter().map(|g| ghz_to_rad_per_us(*g)).collect();
    let pts = absorption_spectrum(m, &rad)?;
    let mut t = Table::new(["detuning_GHz", "optical_depth"]);
    for (g, p) in ghz.iter().zip(&pts) {
        t.push_numbers(&[*g, p.optical_depth]);
    }
    let mut out = VerbOutput::default();
    out.table("spectrum.csv", &t)?;
    let od = |delta: f64| absorption_spectrum(m, &[delta]).map(|p| p[0].optical_depth);
    out.summary = json!({
        "optical_depth": m.depth(),
        "populated_line_peak": od(0.0)?,
        "storage_line_peak": od(m.delta_hf)?,
        "alpha": m.alpha,
    });
    Ok(out)
}

fn simulate(cfg: &RunConfig) -> Result<VerbOutput> {
    let setup = point_setup(
        &cfg.memory,
        &cfg.calibration,
        ScanVariable::Detuning,
        cfg.detuning_offset_ghz,
        cfg.memory.side,
        cfg.fwm_enabled,
    )?;
    let grid = cfg.grid.grid_for(&setup.sequence)?;
    let run = memory_run(&setup.medium, &setup.detuning, &setup.sequence, &grid, &setup.options)?;
    if run.abs2_signal_out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite output trace".into()));
    }
    let mut t = Table::new(["t_ns", "abs2_S_out", "abs2_A_out"]);
    for ((time, s), a) in run.times.iter().zip(&run.abs2_signal_out).zip(&run.abs2_anti_stokes_out) {
        t.push_numbers(&[us_to_ns(*time), *s, *a]);
    }
    let mut out = VerbOutput::default();
    out.table("trace.csv", &t)?;
    out.summary = json!({
        "eta": run.eta_total,
        "eta_readin": run.eta_readin,
        "leakage": run.leakage,
        "retrieved_photons": run.retrieved_photons,
        "leaked_photons": run.leaked_photons,
        "delta_s_GHz": rad_per_us_to_ghz(setup.detuning.delta_s),
        "grid": grid,
        "diagnostics": run.diagnostics,
    });
    Ok(out)
}

fn greens(cfg: &RunConfig, par: Parallelism) -> Result<VerbOutput> {
    let setup = point_setup(
        &cfg.memory,
        &cfg.calibration,
        ScanVariable::Detuning,
        cfg.detuning_offset_ghz,
        cfg.memory.side,
        cfg.fwm_enabled,
    )?;
    let grid = cfg.grid.grid_for(&setup.sequence)?;
    let g = extract_greens(&setup.medium, &setup.detuning, &setup.sequence, &grid, &setup.options, par)?;
    let run = memory_run(&setup.medium, &setup.detuning, &setup.sequence, &grid, &setup.options)?;
    let alpha = setup.medium.alpha;
    let eta = run.eta_total;
    // The retrieved signal only counts in the retrieval window.
    let retrieval = g.noise_in_window(alpha, g.retrieval_window);
    let noise = json!({
        "input": g.noise_in_window(alpha, g.input_window),
        "retrieval": match eta {
            Some(e) => retrieval.with_signal(e, setup.sequence.n_in, None),
            None => retrieval,
        },
    });
    let (csv, meta) = g.dump()?;
    let mut out = VerbOutput::default();
    out.files.insert("kernels.csv".into(), csv);
    out.files.insert("kernels.json".into(), meta);
    out.json("noise_budget.json", &noise)?;
    out.summary = json!({ "eta": eta, "noise": noise, "grid": grid });
    Ok(out)
}

fn scan(cfg: &RunConfig, par: Parallelism, plot_data: bool) -> Result<VerbOutput> {
    let spec = ScanSpec {
        grid: cfg.grid,
        base_preset: cfg.memory.name.clone(),
        ..cfg.scan.clone()
    };
    let result = run_scan(&spec, &cfg.memory, &cfg.calibration, par)?;
    let mut out = VerbOutput::default();
    out.table("scan.csv", &result.to_table())?;
    let mut summary = json!({
        "points": result.rows.len(),
        "failures": result.failures(),
    });
    if spec.scan_variable == ScanVariable::StorageTime && spec.outputs.contains(&Observable::Eta) {
        let mut fits = serde_json::Map::new();
        for case in &spec.cases {
            let fit = lifetime_from_scan(&result, *case).map_err(|e| e.to_string());
            fits.insert(case.label().into(), serde_json::to_value(fit.ok()).unwrap_or(Value::Null));
        }
        summary["lifetime_fits"] = Value::Object(fits);
    }
    if plot_data && spec.scan_variable == ScanVariable::Detuning {
        let has_all = [Case::Bns, Case::Std, Case::FwmOff].iter().all(|c| spec.cases.contains(c));
        if has_all && spec.outputs.contains(&Observable::EtaMinusIdeal) {
            for (name, t) in fig_a1_tables(&result, &cfg.memory)? {
                out.table(&name, &t)?;
            }
        } else {
            summary["plot_data"] = json!("figA1 tables need cases BNS, STD, FWM_off and output eta_minus_ideal");
        }
    }
    if result.failures() > 0 {
        eprintln!("warning: {} scan points failed; see the status column", result.failures());
    }
    out.summary = summary;
    Ok(out)
}

fn data_path(cfg: &RunConfig, what: &str) -> Result<PathBuf> {
    cfg.fit
        .data
        .clone()
        .ok_or_else(|| Error::Config(vec![format!("fit.data must name a {what} CSV")]))
}

fn g2_fit(cfg: &RunConfig, par: Parallelism, plot_data: bool) -> Result<VerbOutput> {
    let path = data_path(cfg, "N_out,g2,g2_err")?;
    let cols = read_columns(&path, &["N_out", "g2", "g2_err"])?;
    let points: Vec<StatPoint> = (0..cols[0].len())
        .map(|i| StatPoint {
            n_out: cols[0][i],
            g2: cols[1][i],
            g2_err: cols[2][i],
        })
        .collect();
    let opts = G2FitOptions {
        fixed_a: cfg.fit.fixed_a,
        bootstrap: (cfg.fit.bootstrap > 0).then_some(BootstrapOptions {
            resamples: cfg.fit.bootstrap,
            seed: cfg.fit.seed,
            parallelism: par,
        }),
        initial: None,
    };
    let fit = fit_g2_model(&points, &opts)?;
    let mut out = VerbOutput::default();
    out.json("fit.json", &fit)?;
    if plot_data {
        let model = crate::stats::G2Model {
            g2_f: cfg.g2.model.g2_f,
            ..crate::stats::G2Model::new(fit.value("a"), fit.value("N_SRS"), fit.value("N_F"))
        };
        let hi = points.iter().map(|p| p.n_out).fold(0.0, f64::max);
        let mut t = Table::new(["N_out", "g2_model"]);
        for x in unit_grid(101) {
            let n = x * hi * 1.1;
            t.push_numbers(&[n, g2_out(&model, n)?]);
        }
        out.table("g2_fit_curve.csv", &t)?;
    }
    out.summary = json!({ "converged": fit.converged, "warnings": fit.warnings });
    Ok(out)
}

fn g2_predict(cfg: &RunConfig) -> Result<VerbOutput> {
    let g = &cfg.g2;
    let pts = fock_prediction(&g.model, g.eta, &unit_grid(g.n_points))?;
    let threshold = heralding_threshold(&g.model, g.eta)?;
    let min_g2 = pts.iter().map(|p| p.g2_out).fold(f64::INFINITY, f64::min);
    let mut out = VerbOutput::default();
    out.table("prediction.csv", &prediction_table(&pts))?;
    let summary = json!({
        "model": g.model,
        "eta": g.eta,
        "threshold": threshold,
        "g2_at_unit_heralding": pts.last().map(|p| p.g2_out),
        "min_g2": min_g2,
    });
    out.json("threshold.json", &summary)?;
    out.summary = summary;
    Ok(out)
}

fn lifetime_fit(cfg: &RunConfig) -> Result<VerbOutput> {
    let path = data_path(cfg, "t_ns,value")?;
    let cols = read_columns(&path, &["t_ns", "value"])?;
    let fit = fit_exponential(&cols[0], &cols[1])?;
    let mut out = VerbOutput::default();
    out.json("fit.json", &fit)?;
    out.summary = json!({ "tau_ns": fit.value("tau_ns"), "warnings": fit.warnings });
    Ok(out)
}

/// With `fit.data` set, fits `alpha,N_noise` data with a line. Otherwise
/// scans `α` and reports kernel noise per window, with a line fitted to
/// the retrieval-window noise of each case.
fn noise_vs_pumping(cfg: &RunConfig, par: Parallelism) -> Result<VerbOutput> {
    let mut out = VerbOutput::default();
    if cfg.fit.data.is_some() {
        let path = data_path(cfg, "alpha,N_noise")?;
        let cols = read_columns(&path, &["alpha", "N_noise"])?;
        let fit = fit_linear_noise_vs_alpha(&cols[0], &cols[1])?;
        out.json("fit.json", &fit)?;
        out.summary = json!({ "slope": fit.value("slope"), "offset": fit.value("offset") });
        return Ok(out);
    }
    let spec = ScanSpec {
        scan_variable: ScanVariable::Alpha,
        range: cfg.pumping.range,
        cases: cfg.pumping.cases.clone(),
        base_preset: cfg.memory.name.clone(),
        outputs: vec![Observable::Eta, Observable::NoiseByWindow],
        grid: cfg.grid,
    };
    let result = run_scan(&spec, &cfg.memory, &cfg.calibration, par)?;
    out.table("noise_vs_pumping.csv", &result.to_table())?;
    let mut fits = BTreeMap::new();
    for case in &spec.cases {
        let (a, n): (Vec<f64>, Vec<f64>) = result
            .series(*case, "N_noise_retrieval")
            .into_iter()
            .filter(|(_, v)| v.is_finite())
            .unzip();
        fits.insert(case.label(), fit_linear_noise_vs_alpha(&a, &n)?);
    }
    out.json("fit.json", &fits)?;
    out.summary = json!({
        "failures": result.failures(),
        "slopes": fits.iter().map(|(k, f)| (k.to_string(), f.value("slope"))).collect::<BTreeMap<_, _>>(),
    });
    Ok(out)
}
