//! Run configuration: JSON documents in laboratory units, validated into a
//! normalized [`RunConfig`] in internal units (rad/µs, µs, mm).
//!
//! Validation never stops at the first problem. Every error is collected,
//! and unknown keys are errors in strict mode and warnings otherwise.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::medium::MediumParams;
use crate::presets::{medium_preset, memory_preset, stat_preset, MemoryPreset, Side, MEMORY_PRESETS};
use crate::pulse::PulseCalibration;
use crate::runner::{Case, GridSpec, Observable, ScanRange, ScanSpec, ScanVariable};
use crate::stats::G2Model;
use crate::units::{ghz_to_rad_per_us, mhz_to_rad_per_us, ns_to_us, rad_per_us_to_ghz, rad_per_us_to_mhz, us_to_ns};

pub const DEFAULT_PRESET: &str = "sim-750pj";

/// Detuning grid for absorption spectra, GHz from the populated line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumRange {
    pub lo_ghz: f64,
    pub hi_ghz: f64,
    pub n_points: usize,
}

impl Default for SpectrumRange {
    fn default() -> Self {
        SpectrumRange {
            lo_ghz: -10.0,
            hi_ghz: 20.0,
            n_points: 3001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct G2Config {
    pub model: G2Model,
    /// Memory efficiency the model refers to.
    pub eta: f64,
    /// Points on the `η_h ∈ [0, 1]` prediction grid.
    pub n_points: usize,
}

impl Default for G2Config {
    fn default() -> Self {
        let p = stat_preset("bns-fit").expect("built-in preset");
        G2Config {
            model: p.model,
            eta: p.eta,
            n_points: 101,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Input CSV, relative paths resolved against the config file.
    pub data: Option<PathBuf>,
    pub fixed_a: Option<f64>,
    /// Bootstrap resamples; 0 disables the bootstrap.
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            data: None,
            fixed_a: None,
            bootstrap: 0,
            seed: 0x5eed,
        }
    }
}

/// Pumping-efficiency scan: noise against the residual population `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpingConfig {
    pub range: ScanRange,
    pub cases: Vec<Case>,
}

impl Default for PumpingConfig {
    fn default() -> Self {
        PumpingConfig {
            range: ScanRange {
                lo: 0.0,
                hi: 0.01,
                n_points: 5,
            },
            cases: vec![Case::Bns, Case::Std],
        }
    }
}

/// Fully resolved configuration in internal units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub memory: MemoryPreset,
    /// Change of `|Δ_s|` away from `2Δ_hf`, GHz, on the memory's side.
    pub detuning_offset_ghz: f64,
    pub fwm_enabled: bool,
    pub calibration: PulseCalibration,
    pub grid: GridSpec,
    pub spectrum: SpectrumRange,
    pub scan: ScanSpec,
    pub g2: G2Config,
    pub fit: FitConfig,
    pub pumping: PumpingConfig,
}

impl RunConfig {
    /// Exact serialized form of the normalized config.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The config as a document in laboratory units, accepted by
    /// [`validate_config`].
    pub fn to_document(&self) -> Value {
        let m = &self.memory.medium;
        let side = match self.memory.side {
            Side::Bns => "BNS",
            Side::Std => "STD",
        };
        serde_json::json!({
            "preset": self.memory.name,
            "side": side,
            "detuning_offset_GHz": self.detuning_offset_ghz,
            "fwm": self.fwm_enabled,
            "medium": {
                "d0": m.d0,
                "gamma_N_MHz": rad_per_us_to_mhz(m.gamma_n),
                "gamma_P_MHz": rad_per_us_to_mhz(m.gamma_p),
                "Delta_hf_GHz": rad_per_us_to_ghz(m.delta_hf),
                "L_mm": m.length,
                "alpha": m.alpha,
            },
            "sequence": {
                "read_in_pJ": self.memory.read_in_pj,
                "read_out_pJ": self.memory.read_out_pj,
                "storage_ns": self.memory.storage_ns,
                "N_in": self.memory.n_in,
                "window_ns": self.memory.window_ns,
                "lifetime_ns": self.memory.lifetime_ns,
            },
            "calibration": {
                "dipole_constant": self.calibration.dipole_constant,
                "waist_um": self.calibration.waist_um,
                "fwhm_ns": us_to_ns(self.calibration.fwhm),
            },
            "grid": { "n_z": self.grid.n_z, "min_n_t": self.grid.min_n_t },
            "spectrum": {
                "lo_GHz": self.spectrum.lo_ghz,
                "hi_GHz": self.spectrum.hi_ghz,
                "n_points": self.spectrum.n_points,
            },
            "scan": {
                "scan_variable": self.scan.scan_variable,
                "range": self.scan.range,
                "cases": self.scan.cases,
                "outputs": self.scan.outputs,
            },
            "g2": {
                "a": self.g2.model.a,
                "N_SRS": self.g2.model.n_srs,
                "N_F": self.g2.model.n_f,
                "g2_F": self.g2.model.g2_f,
                "eta": self.g2.eta,
                "n_points": self.g2.n_points,
            },
            "fit": {
                "data": self.fit.data,
                "fixed_a": self.fit.fixed_a,
                "bootstrap": self.fit.bootstrap,
                "seed": self.fit.seed,
            },
            "pumping": {
                "range": self.pumping.range,
                "cases": self.pumping.cases,
            },
        })
    }
}

/// Validation output: the config plus what was filled in or questionable.
#[derive(Debug, Clone, PartialEq)]
pub struct Validated {
    pub config: RunConfig,
    /// Defaults that were applied, for the run manifest.
    pub defaults: Vec<String>,
    pub warnings: Vec<String>,
}

/// Collects errors, warnings and default notes while walking a document.
struct Walk {
    strict: bool,
    errors: Vec<String>,
    warnings: Vec<String>,
    defaults: Vec<String>,
}

impl Walk {
    fn section<'a>(&mut self, doc: &'a Map<String, Value>, key: &str) -> Option<&'a Map<String, Value>> {
        match doc.get(key) {
            None | Some(Value::Null) => None,
            Some(Value::Object(m)) => Some(m),
            Some(_) => {
                self.errors.push(format!("{key} must be an object"));
                None
            }
        }
    }

    fn unknown(&mut self, obj: &Map<String, Value>, path: &str, known: &[&str]) {
        for k in obj.keys() {
            if !known.contains(&k.as_str()) {
                let msg = format!("unknown key '{}{k}'", prefix(path));
                if self.strict {
                    self.errors.push(msg);
                } else {
                    self.warnings.push(msg);
                }
            }
        }
    }

    fn num(&mut self, obj: Option<&Map<String, Value>>, path: &str, key: &str) -> Option<f64> {
        match obj?.get(key)? {
            Value::Number(n) => n.as_f64(),
            Value::Null => None,
            _ => {
                self.errors.push(format!("{}{key} must be a number", prefix(path)));
                None
            }
        }
    }

    /// A number with a default; the default is noted when the section is
    /// present but the key is not.
    fn num_or(&mut self, obj: Option<&Map<String, Value>>, path: &str, key: &str, default: f64, shown: f64) -> f64 {
        match (obj, self.num(obj, path, key)) {
            (_, Some(v)) => v,
            (Some(o), None) if !o.contains_key(key) => {
                self.defaults.push(format!("{}{key} defaulted to {shown}", prefix(path)));
                default
            }
            _ => default,
        }
    }

    fn count(&mut self, obj: Option<&Map<String, Value>>, path: &str, key: &str, default: usize) -> usize {
        match obj.and_then(|o| o.get(key)) {
            None | Some(Value::Null) => default,
            Some(v) => match v.as_u64() {
                Some(n) => n as usize,
                None => {
                    self.errors.push(format!("{}{key} must be a non-negative integer", prefix(path)));
                    default
                }
            },
        }
    }

    fn flag(&mut self, obj: &Map<String, Value>, key: &str, default: bool) -> bool {
        match obj.get(key) {
            None | Some(Value::Null) => default,
            Some(Value::Bool(b)) => *b,
            Some(_) => {
                self.errors.push(format!("{key} must be true or false"));
                default
            }
        }
    }

    fn text<'a>(&mut self, obj: &'a Map<String, Value>, path: &str, key: &str) -> Option<&'a str> {
        match obj.get(key)? {
            Value::String(s) => Some(s),
            Value::Null => None,
            _ => {
                self.errors.push(format!("{}{key} must be a string", prefix(path)));
                None
            }
        }
    }

    fn typed<T: serde::de::DeserializeOwned>(&mut self, obj: &Map<String, Value>, path: &str, key: &str) -> Option<T> {
        let v = obj.get(key)?;
        match serde_json::from_value(v.clone()) {
            Ok(t) => Some(t),
            Err(e) => {
                self.errors.push(format!("{}{key}: {e}", prefix(path)));
                None
            }
        }
    }

    fn absorb(&mut self, r: Result<()>) {
        match r {
            Ok(()) => {}
            Err(Error::Config(list)) => self.errors.extend(list),
            Err(e) => self.errors.push(e.to_string()),
        }
    }
}

fn prefix(path: &str) -> String {
    if path.is_empty() {
        String::new()
    } else {
        format!("{path}.")
    }
}

const TOP_KEYS: &[&str] = &[
    "preset",
    "medium_preset",
    "side",
    "detuning_offset_GHz",
    "fwm",
    "medium",
    "sequence",
    "calibration",
    "grid",
    "spectrum",
    "scan",
    "g2",
    "fit",
    "pumping",
];
const MEDIUM_KEYS: &[&str] = &["d0", "gamma_N_MHz", "gamma_P_MHz", "Delta_hf_GHz", "L_mm", "alpha"];
const SEQUENCE_KEYS: &[&str] = &["read_in_pJ", "read_out_pJ", "storage_ns", "N_in", "window_ns", "lifetime_ns"];
const CALIBRATION_KEYS: &[&str] = &["dipole_constant", "waist_um", "fwhm_ns"];
const GRID_KEYS: &[&str] = &["n_z", "min_n_t"];
const SPECTRUM_KEYS: &[&str] = &["lo_GHz", "hi_GHz", "n_points"];
const SCAN_KEYS: &[&str] = &["scan_variable", "range", "cases", "outputs", "base_preset"];
const G2_KEYS: &[&str] = &["stat_preset", "a", "N_SRS", "N_F", "g2_F", "eta", "n_points"];
const FIT_KEYS: &[&str] = &["data", "fixed_a", "bootstrap", "seed"];
const PUMPING_KEYS: &[&str] = &["range", "cases"];

/// Validates a config document and normalizes it to internal units.
///
/// Returns [`Error::Config`] with every problem found.
pub fn validate_config(doc: &Value, strict: bool) -> Result<Validated> {
    let mut w = Walk {
        strict,
        errors: Vec::new(),
        warnings: Vec::new(),
        defaults: Vec::new(),
    };
    let empty = Map::new();
    let top = match doc {
        Value::Object(m) => m,
        Value::Null => &empty,
        _ => return Err(Error::Config(vec!["config must be a JSON object".into()])),
    };
    w.unknown(top, "", TOP_KEYS);

    // Base operating point.
    let scan_sec = w.section(top, "scan");
    let scan_base = scan_sec.and_then(|s| w.text(s, "scan", "base_preset")).map(str::to_string);
    let preset_name = match (w.text(top, "", "preset").map(str::to_string), scan_base) {
        (Some(p), Some(s)) if p != s => {
            w.errors.push(format!("scan.base_preset '{s}' conflicts with preset '{p}'"));
            p
        }
        (Some(p), _) | (None, Some(p)) => p,
        (None, None) => {
            w.defaults.push(format!("preset defaulted to {DEFAULT_PRESET}"));
            DEFAULT_PRESET.to_string()
        }
    };
    let mut memory = match memory_preset(&preset_name) {
        Some(p) => p,
        None => {
            w.errors.push(format!(
                "unknown preset '{preset_name}' (known: {})",
                MEMORY_PRESETS.join(", ")
            ));
            memory_preset(DEFAULT_PRESET).expect("built-in preset")
        }
    };
    if let Some(name) = w.text(top, "", "medium_preset") {
        match medium_preset(name) {
            Some(m) => memory.medium = m,
            None => w.errors.push(format!("unknown medium_preset '{name}'")),
        }
    }
    if let Some(side) = w.text(top, "", "side") {
        match side.to_ascii_uppercase().as_str() {
            "BNS" => memory.side = Side::Bns,
            "STD" => memory.side = Side::Std,
            _ => w.errors.push(format!("side must be BNS or STD, got '{side}'")),
        }
    }
    let detuning_offset_ghz = w.num(Some(top), "", "detuning_offset_GHz").unwrap_or(0.0);
    let fwm_enabled = w.flag(top, "fwm", true);

    // Medium, in MHz / GHz / mm.
    let base = memory.medium;
    let med = w.section(top, "medium");
    if let Some(m) = med {
        w.unknown(m, "medium", MEDIUM_KEYS);
    } else if !top.contains_key("medium_preset") && !top.contains_key("preset") {
        w.defaults.push(format!("medium taken from preset {preset_name}"));
    }
    let mut medium = MediumParams {
        d0: w.num_or(med, "medium", "d0", base.d0, base.d0),
        gamma_n: mhz_to_rad_per_us(w.num_or(
            med,
            "medium",
            "gamma_N_MHz",
            rad_per_us_to_mhz(base.gamma_n),
            round_display(rad_per_us_to_mhz(base.gamma_n)),
        )),
        gamma_p: mhz_to_rad_per_us(w.num_or(
            med,
            "medium",
            "gamma_P_MHz",
            rad_per_us_to_mhz(base.gamma_p),
            round_display(rad_per_us_to_mhz(base.gamma_p)),
        )),
        delta_hf: base.delta_hf,
        length: w.num_or(med, "medium", "L_mm", base.length, base.length),
        alpha: w.num_or(med, "medium", "alpha", base.alpha, base.alpha),
        ..base
    };
    // Keep internal values bit-identical to the preset when a key is absent.
    if !med.is_some_and(|m| m.contains_key("gamma_N_MHz")) {
        medium.gamma_n = base.gamma_n;
    }
    if !med.is_some_and(|m| m.contains_key("gamma_P_MHz")) {
        medium.gamma_p = base.gamma_p;
    }
    match w.num(med, "medium", "Delta_hf_GHz") {
        Some(v) => {
            let hf = ghz_to_rad_per_us(v);
            if (hf - base.delta_hf).abs() > 1e-9 * base.delta_hf {
                w.warnings.push(format!(
                    "Delta_hf overridden to {v} GHz: BNS and STD signal detunings shift to ∓{} GHz",
                    2.0 * v
                ));
                medium.delta_hf = hf;
            }
        }
        None => {
            if med.is_some() {
                w.defaults.push(format!(
                    "medium.Delta_hf_GHz defaulted to {}",
                    round_display(rad_per_us_to_ghz(base.delta_hf))
                ));
            }
        }
    }
    w.absorb(medium.validate());
    memory.medium = medium;

    // Pulse sequence.
    let seq = w.section(top, "sequence");
    if let Some(s) = seq {
        w.unknown(s, "sequence", SEQUENCE_KEYS);
    }
    memory.read_in_pj = w.num_or(seq, "sequence", "read_in_pJ", memory.read_in_pj, memory.read_in_pj);
    memory.read_out_pj = w.num_or(seq, "sequence", "read_out_pJ", memory.read_out_pj, memory.read_out_pj);
    memory.storage_ns = w.num_or(seq, "sequence", "storage_ns", memory.storage_ns, memory.storage_ns);
    memory.n_in = w.num_or(seq, "sequence", "N_in", memory.n_in, memory.n_in);
    memory.window_ns = w.num_or(seq, "sequence", "window_ns", memory.window_ns, memory.window_ns);
    if let Some(s) = seq {
        match s.get("lifetime_ns") {
            None => {}
            Some(Value::Null) => memory.lifetime_ns = None,
            Some(_) => memory.lifetime_ns = w.num(seq, "sequence", "lifetime_ns"),
        }
    }
    for (v, name) in [(memory.read_in_pj, "read_in_pJ"), (memory.read_out_pj, "read_out_pJ")] {
        if !(v >= 0.0 && v.is_finite()) {
            w.errors.push(format!("sequence.{name} must be non-negative"));
        }
    }
    if !(memory.n_in >= 0.0 && memory.n_in.is_finite()) {
        w.errors.push("sequence.N_in must be non-negative".into());
    }
    if !(memory.window_ns > 0.0) {
        w.errors.push("sequence.window_ns must be positive".into());
    }
    if !(memory.storage_ns > 0.0) {
        w.errors.push("sequence.storage_ns must be positive".into());
    } else if memory.storage_ns < memory.window_ns {
        w.errors.push("sequence.storage_ns must be at least window_ns so the windows do not overlap".into());
    }
    if let Some(t) = memory.lifetime_ns {
        if !(t > 0.0) {
            w.errors.push("sequence.lifetime_ns must be positive or null".into());
        }
    }

    // Pulse calibration.
    let cal = w.section(top, "calibration");
    if let Some(c) = cal {
        w.unknown(c, "calibration", CALIBRATION_KEYS);
    }
    let d = PulseCalibration::default();
    let mut calibration = PulseCalibration {
        dipole_constant: w.num_or(cal, "calibration", "dipole_constant", d.dipole_constant, d.dipole_constant),
        waist_um: w.num_or(cal, "calibration", "waist_um", d.waist_um, d.waist_um),
        fwhm: d.fwhm,
    };
    if let Some(f) = w.num(cal, "calibration", "fwhm_ns") {
        calibration.fwhm = ns_to_us(f);
    }
    for (v, name) in [
        (calibration.dipole_constant, "dipole_constant"),
        (calibration.waist_um, "waist_um"),
        (calibration.fwhm, "fwhm_ns"),
    ] {
        if !(v > 0.0 && v.is_finite()) {
            w.errors.push(format!("calibration.{name} must be positive"));
        }
    }

    // Grid.
    let g = w.section(top, "grid");
    if let Some(s) = g {
        w.unknown(s, "grid", GRID_KEYS);
    }
    let gd = GridSpec::default();
    let grid = GridSpec {
        n_z: w.count(g, "grid", "n_z", gd.n_z),
        min_n_t: w.count(g, "grid", "min_n_t", gd.min_n_t),
    };
    if grid.n_z < 2 || grid.min_n_t < 2 {
        w.errors.push("grid needs n_z ≥ 2 and min_n_t ≥ 2".into());
    }

    // Spectrum.
    let sp = w.section(top, "spectrum");
    if let Some(s) = sp {
        w.unknown(s, "spectrum", SPECTRUM_KEYS);
    }
    let sd = SpectrumRange::default();
    let spectrum = SpectrumRange {
        lo_ghz: w.num(sp, "spectrum", "lo_GHz").unwrap_or(sd.lo_ghz),
        hi_ghz: w.num(sp, "spectrum", "hi_GHz").unwrap_or(sd.hi_ghz),
        n_points: w.count(sp, "spectrum", "n_points", sd.n_points),
    };
    if !(spectrum.hi_ghz > spectrum.lo_ghz) {
        w.errors.push("spectrum.hi_GHz must exceed lo_GHz".into());
    }
    if spectrum.n_points < 2 {
        w.errors.push("spectrum.n_points must be at least 2".into());
    }

    // Scan.
    let mut scan = ScanSpec::default_detuning(&preset_name);
    scan.grid = grid;
    if let Some(s) = scan_sec {
        w.unknown(s, "scan", SCAN_KEYS);
        if let Some(v) = w.typed::<ScanVariable>(s, "scan", "scan_variable") {
            scan.scan_variable = v;
        }
        if let Some(r) = w.typed::<ScanRange>(s, "scan", "range") {
            scan.range = r;
        }
        if let Some(c) = w.typed::<Vec<Case>>(s, "scan", "cases") {
            scan.cases = c;
        }
        if let Some(o) = w.typed::<Vec<Observable>>(s, "scan", "outputs") {
            scan.outputs = o;
        }
    }
    let scan_check = scan.validate().map_err(prefix_config("scan"));
    w.absorb(scan_check);

    // Photon statistics.
    let g2s = w.section(top, "g2");
    let mut g2 = G2Config::default();
    if let Some(s) = g2s {
        w.unknown(s, "g2", G2_KEYS);
        if let Some(name) = w.text(s, "g2", "stat_preset") {
            match stat_preset(name) {
                Some(p) => {
                    g2.model = p.model;
                    g2.eta = p.eta;
                }
                None => w.errors.push(format!("unknown g2.stat_preset '{name}'")),
            }
        }
    }
    g2.model.a = w.num(g2s, "g2", "a").unwrap_or(g2.model.a);
    g2.model.n_srs = w.num(g2s, "g2", "N_SRS").unwrap_or(g2.model.n_srs);
    g2.model.n_f = w.num(g2s, "g2", "N_F").unwrap_or(g2.model.n_f);
    g2.model.g2_f = w.num(g2s, "g2", "g2_F").unwrap_or(g2.model.g2_f);
    g2.eta = w.num(g2s, "g2", "eta").unwrap_or(g2.eta);
    g2.n_points = w.count(g2s, "g2", "n_points", g2.n_points);
    let model_check = g2.model.validate().map_err(prefix_config("g2"));
    w.absorb(model_check);
    if !(g2.eta > 0.0 && g2.eta <= 1.0) {
        w.errors.push("g2.eta out of (0,1]".into());
    }
    if g2.n_points < 2 {
        w.errors.push("g2.n_points must be at least 2".into());
    }

    // Fits.
    let fs = w.section(top, "fit");
    let mut fit = FitConfig::default();
    if let Some(s) = fs {
        w.unknown(s, "fit", FIT_KEYS);
        fit.data = w.text(s, "fit", "data").map(PathBuf::from);
    }
    fit.fixed_a = w.num(fs, "fit", "fixed_a");
    fit.bootstrap = w.count(fs, "fit", "bootstrap", fit.bootstrap);
    fit.seed = w.count(fs, "fit", "seed", fit.seed as usize) as u64;
    if fit.bootstrap == 1 {
        w.errors.push("fit.bootstrap needs at least 2 resamples (or 0 to disable)".into());
    }

    // Pumping scan.
    let ps = w.section(top, "pumping");
    let mut pumping = PumpingConfig::default();
    if let Some(s) = ps {
        w.unknown(s, "pumping", PUMPING_KEYS);
        if let Some(r) = w.typed::<ScanRange>(s, "pumping", "range") {
            pumping.range = r;
        }
        if let Some(c) = w.typed::<Vec<Case>>(s, "pumping", "cases") {
            pumping.cases = c;
        }
    }
    let (lo, hi) = (pumping.range.lo.min(pumping.range.hi), pumping.range.lo.max(pumping.range.hi));
    if !(lo >= 0.0 && hi <= 1.0) {
        w.errors.push("pumping.range: alpha out of [0,1]".into());
    }
    if pumping.range.n_points < 2 {
        w.errors.push("pumping.range.n_points must be at least 2".into());
    }
    if pumping.cases.is_empty() || pumping.cases.contains(&Case::FwmOff) {
        w.errors.push("pumping.cases must be a non-empty subset of BNS, STD".into());
    }

    if !w.errors.is_empty() {
        return Err(Error::Config(w.errors));
    }
    // The sequence check needs valid numbers, so it runs last.
    memory.sequence(&calibration).map_err(|e| Error::Config(vec![format!("sequence: {e}")]))?;

    Ok(Validated {
        config: RunConfig {
            memory,
            detuning_offset_ghz,
            fwm_enabled,
            calibration,
            grid,
            spectrum,
            scan,
            g2,
            fit,
            pumping,
        },
        defaults: w.defaults,
        warnings: w.warnings,
    })
}

fn prefix_config(section: &'static str) -> impl Fn(Error) -> Error {
    move |e| match e {
        Error::Config(list) => Error::Config(list.into_iter().map(|m| format!("{section}: {m}")).collect()),
        other => other,
    }
}

fn round_display(v: f64) -> f64 {
    (v * 1e9).round() / 1e9
}

/// Applies a `key.path=value` override to a document. The value is parsed
/// as JSON when possible and kept as a string otherwise.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(vec![format!("override '{assignment}' is not key=value")]))?;
    let path = path.trim();
    if path.is_empty() || path.split('.').any(str::is_empty) {
        return Err(Error::Config(vec![format!("override '{assignment}' has an empty key")]));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().to_string()));
    if doc.is_null() {
        *doc = Value::Object(Map::new());
    }
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(vec![format!("override '{path}': '{part}' is inside a non-object")]))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Map::new()));
    }
    unreachable!("split always yields at least one part")
}
