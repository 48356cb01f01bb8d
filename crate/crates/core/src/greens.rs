//! Green's-function description of the linear memory map.
//!
//! Kernels are extracted column by column: a unit sample in one time bin
//! (or one ζ node for the spin wave) of one input mode is marched through
//! the solver with vacuum elsewhere. Dividing by the quadrature weight of
//! that bin gives a kernel `K` with `out(t) ≈ Σ_{t'} K(t, t')·w(t')·in(t')`.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{DetuningConfig, MediumParams};
use crate::parallel::Parallelism;
use crate::pulse::PulseSequence;
use crate::solver::{Inputs, Outputs, Propagator, SimGrid, SolverOptions};

/// Input / output modes, in matrix order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Signal,
    AntiStokes,
    SpinWave,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::Signal, Mode::AntiStokes, Mode::SpinWave];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn label(self) -> &'static str {
        match self {
            Mode::Signal => "s",
            Mode::AntiStokes => "a",
            Mode::SpinWave => "b",
        }
    }
}

/// One discretized kernel, row-major `[out * n_in + in]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel {
    pub n_out: usize,
    pub n_in: usize,
    pub data: Vec<Complex64>,
}

impl Kernel {
    pub fn zeros(n_out: usize, n_in: usize) -> Self {
        Kernel {
            n_out,
            n_in,
            data: vec![Complex64::new(0.0, 0.0); n_out * n_in],
        }
    }

    pub fn at(&self, out: usize, inp: usize) -> Complex64 {
        self.data[out * self.n_in + inp]
    }

    pub fn row(&self, out: usize) -> &[Complex64] {
        &self.data[out * self.n_in..(out + 1) * self.n_in]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|v| v.norm_sqr() == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Kernel {
        Kernel {
            n_out: self.n_out,
            n_in: self.n_in,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }
}

/// The nine kernels `G[out][in]` together with the quadrature used to
/// build them.
#[derive(Debug, Clone, PartialEq)]
pub struct GreensFunctionSet {
    pub grid: SimGrid,
    pub times: Vec<f64>,
    pub time_weights: Vec<f64>,
    pub z_weights: Vec<f64>,
    pub input_window: (f64, f64),
    pub retrieval_window: (f64, f64),
    pub kernels: [[Kernel; 3]; 3],
}

fn mode_len(mode: Mode, grid: &SimGrid) -> usize {
    match mode {
        Mode::SpinWave => grid.n_z,
        _ => grid.n_t,
    }
}

impl GreensFunctionSet {
    pub fn kernel(&self, out: Mode, inp: Mode) -> &Kernel {
        &self.kernels[out.index()][inp.index()]
    }

    fn weights(&self, mode: Mode) -> &[f64] {
        match mode {
            Mode::SpinWave => &self.z_weights,
            _ => &self.time_weights,
        }
    }

    /// Applies the kernels to arbitrary inputs.
    pub fn apply(&self, inputs: &Inputs) -> Result<Outputs> {
        let sources: [&[Complex64]; 3] = [&inputs.signal, &inputs.anti_stokes, &inputs.spin_wave];
        for (mode, src) in Mode::ALL.iter().zip(sources) {
            if src.len() != mode_len(*mode, &self.grid) {
                return Err(Error::Precondition("input lengths do not match the kernel grid".into()));
            }
        }
        let mut outs: Vec<Vec<Complex64>> = Vec::with_capacity(3);
        for out in Mode::ALL {
            let mut acc = vec![Complex64::new(0.0, 0.0); mode_len(out, &self.grid)];
            for inp in Mode::ALL {
                let src = sources[inp.index()];
                let w = self.weights(inp);
                let weighted: Vec<Complex64> = src.iter().zip(w).map(|(v, w)| v * w).collect();
                if weighted.iter().all(|v| v.norm_sqr() == 0.0) {
                    continue;
                }
                let k = self.kernel(out, inp);
                for (i, a) in acc.iter_mut().enumerate() {
                    *a += k.row(i).iter().zip(&weighted).map(|(g, x)| g * x).sum::<Complex64>();
                }
            }
            outs.push(acc);
        }
        let spin_wave = outs.pop().unwrap_or_default();
        let anti_stokes = outs.pop().unwrap_or_default();
        let signal = outs.pop().unwrap_or_default();
        Ok(Outputs {
            signal,
            anti_stokes,
            spin_wave,
        })
    }

    fn window_rows(&self, window: (f64, f64)) -> impl Iterator<Item = usize> + '_ {
        self.times
            .iter()
            .enumerate()
            .filter(move |(_, &t)| t >= window.0 && t < window.1)
            .map(|(i, _)| i)
    }

    /// `Σ_{t∈window} w_t Σ_{t'} w_{t'} |G_{s,inp}(t, t')|²`: signal photons
    /// produced by a unit-occupation white input in mode `inp`.
    pub fn vacuum_photons(&self, inp: Mode, window: (f64, f64)) -> f64 {
        let k = self.kernel(Mode::Signal, inp);
        let w_in = self.weights(inp);
        self.window_rows(window)
            .map(|i| {
                let row: f64 = k.row(i).iter().zip(w_in).map(|(g, w)| w * g.norm_sqr()).sum();
                self.time_weights[i] * row
            })
            .sum()
    }

    /// Noise in an arbitrary window (vacuum anti-Stokes, thermal spin wave).
    pub fn noise_in_window(&self, alpha: f64, window: (f64, f64)) -> NoiseBudget {
        let n_srs_as = self.vacuum_photons(Mode::AntiStokes, window);
        let n_srs_p = alpha * self.vacuum_photons(Mode::SpinWave, window);
        NoiseBudget {
            n_mem: 0.0,
            n_srs_as,
            n_srs_p,
            n_srs: n_srs_as + n_srs_p,
            eta: None,
            n_f: None,
            mu1: None,
        }
    }

    /// The kernels as `i,j,t_index,tprime_index,re,im` CSV rows, and the
    /// JSON metadata describing the quadrature.
    pub fn dump(&self) -> Result<(Vec<u8>, Vec<u8>)> {
        let mut out = Vec::new();
        let fail = |e: std::io::Error| Error::Numerical(format!("kernel dump buffer: {e}"));
        writeln!(out, "i,j,t_index,tprime_index,re,im").map_err(fail)?;
        for o in Mode::ALL {
            for i in Mode::ALL {
                let k = self.kernel(o, i);
                for r in 0..k.n_out {
                    for c in 0..k.n_in {
                        let v = k.at(r, c);
                        writeln!(out, "{},{},{r},{c},{:e},{:e}", o.label(), i.label(), v.re, v.im).map_err(fail)?;
                    }
                }
            }
        }
        let meta = serde_json::json!({
            "grid": self.grid,
            "times_us": self.times,
            "time_weights": self.time_weights,
            "z_weights": self.z_weights,
            "input_window_us": self.input_window,
            "retrieval_window_us": self.retrieval_window,
            "modes": ["s", "a", "b"],
            "convention": "out(t) = sum over t' of K(t,t') * w(t') * in(t')",
        });
        Ok((out, serde_json::to_string_pretty(&meta)?.into_bytes()))
    }

    /// Writes [`GreensFunctionSet::dump`] atomically to the two paths.
    pub fn write_csv(&self, csv_path: &Path, meta_path: &Path) -> Result<()> {
        let (csv, meta) = self.dump()?;
        crate::io::write_atomic(csv_path, &csv)?;
        crate::io::write_atomic(meta_path, &meta)
    }
}

/// Noise photon decomposition of the retrieved signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseBudget {
    pub n_mem: f64,
    /// From the vacuum anti-Stokes input (spontaneous four-wave mixing).
    pub n_srs_as: f64,
    /// From the thermal spin-wave population left by imperfect pumping.
    pub n_srs_p: f64,
    pub n_srs: f64,
    pub eta: Option<f64>,
    pub n_f: Option<f64>,
    pub mu1: Option<f64>,
}

impl NoiseBudget {
    pub fn n_out(&self) -> f64 {
        self.n_mem + self.n_srs_as + self.n_srs_p
    }

    /// Adds a signal with efficiency `eta` and `n_in` photons, and an
    /// optional fluorescence floor.
    pub fn with_signal(mut self, eta: f64, n_in: f64, n_f: Option<f64>) -> Self {
        self.eta = Some(eta);
        self.n_mem = eta * n_in;
        self.n_f = n_f;
        if eta > 0.0 {
            self.mu1 = Some((self.n_srs + n_f.unwrap_or(0.0)) / eta);
        }
        self
    }
}

/// Extracts all nine kernels. Columns run concurrently under `par`.
pub fn extract_greens(
    medium: &MediumParams,
    cfg: &DetuningConfig,
    seq: &PulseSequence,
    grid: &SimGrid,
    opts: &SolverOptions,
    par: Parallelism,
) -> Result<GreensFunctionSet> {
    grid.check_resolves(seq)?;
    let prop = Propagator::new(medium, cfg, seq, grid, opts)?;
    let n_t = grid.n_t;
    let n_z = grid.n_z;
    let time_weights = grid.time_weights();
    let z_weights = grid.z_weights();

    // Column c: 0..n_t signal bins, n_t..2n_t anti-Stokes bins, then ζ nodes.
    let n_cols = 2 * n_t + n_z;
    let columns: Vec<Result<Outputs>> = par.map_range(n_cols, |c| {
        let mut inputs = Inputs::zeros(grid);
        let unit = Complex64::new(1.0, 0.0);
        let start = if c < n_t {
            inputs.signal[c] = unit / time_weights[c];
            c.saturating_sub(1)
        } else if c < 2 * n_t {
            inputs.anti_stokes[c - n_t] = unit / time_weights[c - n_t];
            (c - n_t).saturating_sub(1)
        } else {
            inputs.spin_wave[c - 2 * n_t] = unit / z_weights[c - 2 * n_t];
            0
        };
        prop.march(&inputs, start, None).map(|(o, _)| o)
    });

    let mut kernels: [[Kernel; 3]; 3] = std::array::from_fn(|o| {
        std::array::from_fn(|i| Kernel::zeros(mode_len(Mode::ALL[o], grid), mode_len(Mode::ALL[i], grid)))
    });
    for (c, col) in columns.into_iter().enumerate() {
        let col = col?;
        let (inp, j) = if c < n_t {
            (Mode::Signal, c)
        } else if c < 2 * n_t {
            (Mode::AntiStokes, c - n_t)
        } else {
            (Mode::SpinWave, c - 2 * n_t)
        };
        let outs: [&[Complex64]; 3] = [&col.signal, &col.anti_stokes, &col.spin_wave];
        for o in Mode::ALL {
            let k = &mut kernels[o.index()][inp.index()];
            for (r, v) in outs[o.index()].iter().enumerate() {
                k.data[r * k.n_in + j] = *v;
            }
        }
    }
    let all_finite = kernels
        .iter()
        .flatten()
        .all(|k| k.data.iter().all(|v| v.re.is_finite() && v.im.is_finite()));
    if !all_finite {
        return Err(Error::Numerical("non-finite Green's-function kernel".into()));
    }
    Ok(GreensFunctionSet {
        grid: *grid,
        times: grid.times(),
        time_weights,
        z_weights,
        input_window: seq.input_window(),
        retrieval_window: seq.retrieval_window(),
        kernels,
    })
}

/// `Σ_{t∈window} w_t Σ_{t'} w_{t'} |G_{s,inp}(t, t')|²` for each window,
/// marching only the columns of input mode `inp` and never storing a
/// kernel. Equals [`GreensFunctionSet::vacuum_photons`] on the same grid.
#[allow(clippy::too_many_arguments)]
pub fn mode_vacuum_photons(
    medium: &MediumParams,
    cfg: &DetuningConfig,
    seq: &PulseSequence,
    grid: &SimGrid,
    opts: &SolverOptions,
    inp: Mode,
    windows: &[(f64, f64)],
    par: Parallelism,
) -> Result<Vec<f64>> {
    grid.check_resolves(seq)?;
    let prop = Propagator::new(medium, cfg, seq, grid, opts)?;
    let times = grid.times();
    let tw = grid.time_weights();
    let zw = grid.z_weights();
    let n_cols = mode_len(inp, grid);
    let per_column: Vec<Result<Vec<f64>>> = par.map_range(n_cols, |c| {
        let mut inputs = Inputs::zeros(grid);
        let unit = Complex64::new(1.0, 0.0);
        let (start, w_in) = match inp {
            Mode::Signal => {
                inputs.signal[c] = unit / tw[c];
                (c.saturating_sub(1), tw[c])
            }
            Mode::AntiStokes => {
                inputs.anti_stokes[c] = unit / tw[c];
                (c.saturating_sub(1), tw[c])
            }
            Mode::SpinWave => {
                inputs.spin_wave[c] = unit / zw[c];
                (0, zw[c])
            }
        };
        let (out, _) = prop.march(&inputs, start, None)?;
        Ok(windows
            .iter()
            .map(|&(lo, hi)| {
                let s: f64 = out
                    .signal
                    .iter()
                    .zip(&times)
                    .zip(&tw)
                    .filter(|((_, t), _)| **t >= lo && **t < hi)
                    .map(|((g, _), w)| w * g.norm_sqr())
                    .sum();
                w_in * s
            })
            .collect())
    });
    let mut total = vec![0.0; windows.len()];
    for col in per_column {
        for (acc, v) in total.iter_mut().zip(col?) {
            *acc += v;
        }
    }
    if total.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite noise photon number".into()));
    }
    Ok(total)
}

/// Noise in the retrieval window with vacuum anti-Stokes input and a
/// thermal spin-wave occupation `alpha`; no signal (`N_in = 0`).
pub fn noise_numbers(g: &GreensFunctionSet, alpha: f64) -> NoiseBudget {
    g.noise_in_window(alpha, g.retrieval_window)
}

/// Retrieval-window efficiency of the signal-to-signal kernel for the
/// input samples `signal` (on the kernel's time grid).
pub fn efficiency_from_greens(g: &GreensFunctionSet, signal: &[Complex64]) -> Result<f64> {
    efficiency_in_window(g, signal, g.retrieval_window)
}

pub fn efficiency_in_window(g: &GreensFunctionSet, signal: &[Complex64], window: (f64, f64)) -> Result<f64> {
    if signal.len() != g.grid.n_t {
        return Err(Error::Precondition("input mode length does not match the kernel grid".into()));
    }
    let n_in: f64 = signal.iter().zip(&g.time_weights).map(|(v, w)| w * v.norm_sqr()).sum();
    if !(n_in > 0.0) {
        return Err(Error::invalid("input_mode", "zero-norm input mode"));
    }
    let k = g.kernel(Mode::Signal, Mode::Signal);
    let weighted: Vec<Complex64> = signal.iter().zip(&g.time_weights).map(|(v, w)| v * w).collect();
    let out: f64 = g
        .window_rows(window)
        .map(|i| {
            let v: Complex64 = k.row(i).iter().zip(&weighted).map(|(a, b)| a * b).sum();
            g.time_weights[i] * v.norm_sqr()
        })
        .sum();
    Ok(out / n_in)
}

/// Exponent used in [`quartic_integrals`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelPower {
    /// `∬ |G|⁴`, as defined for the g² model.
    #[default]
    Fourth,
    /// `∬ |G|²`, for sensitivity studies.
    Second,
}

/// `𝒢_ij = Σ_t Σ_t' w_t w_t' |G_ij(t, t')|^p` over the whole grid.
pub fn quartic_integrals(g: &GreensFunctionSet, power: KernelPower) -> [[f64; 3]; 3] {
    let mut out = [[0.0; 3]; 3];
    for o in Mode::ALL {
        for i in Mode::ALL {
            out[o.index()][i.index()] = kernel_integral(g.kernel(o, i), g.weights(o), g.weights(i), power);
        }
    }
    out
}

pub fn kernel_integral(k: &Kernel, w_out: &[f64], w_in: &[f64], power: KernelPower) -> f64 {
    let mut total = 0.0;
    for (r, wo) in w_out.iter().enumerate().take(k.n_out) {
        let row: f64 = k
            .row(r)
            .iter()
            .zip(w_in)
            .map(|(v, w)| {
                let m2 = v.norm_sqr();
                w * match power {
                    KernelPower::Fourth => m2 * m2,
                    KernelPower::Second => m2,
                }
            })
            .sum();
        total += wo * row;
    }
    total
}
