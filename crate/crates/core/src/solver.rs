//! Retarded-frame integration of the coupled signal / anti-Stokes /
//! spin-wave amplitude equations.
//!
//! With `τ = t − z/c` and `ζ = z/L ∈ [0, 1]`, and writing `Ā = A*` for the
//! anti-Stokes creation amplitude, the equations become
//!
//! ```text
//! ∂ζ S = i g Ω/Γ_s · B − κ̃_s S
//! ∂ζ Ā = −i g Ω*/Γ_a* · B − κ̃_a* Ā
//! ∂τ B = −i g Ω* c_s S + i g Ω c_a Ā − (1/Γ_s + 1/Γ_a*)|Ω|² B − r B
//! ```
//!
//! with `g = √(dγ)`, `κ̃ = κL/c`, `c_x = (1−α)/Γ_x + α/Γ_x*` and `r` the
//! phenomenological spin-wave decay rate. The system is linear in
//! `(S, Ā, B)`.
//!
//! The control carries its linear dispersive phase, `Ω(ζ, τ) = Ω(τ)·e^{−iθζ}`
//! with `θ = Im κ̃_c`. Internally `B` and `Ā` are stored in the frame
//! `B' = B·e^{−iθζ}`, `Ā' = Ā·e^{−2iθζ}`, which removes the ζ dependence
//! from the couplings and leaves the phase mismatch as an extra `2iθ` in
//! the anti-Stokes decay constant.
//!
//! The spin wave is marched in retarded time with classical RK4. Every
//! stage needs the fields on the current spin-wave profile; these come from
//! an exact exponential integration along ζ, treating `B` as piecewise
//! linear between grid points. That keeps the strongly absorbed
//! anti-Stokes field (`κ̃_a ≈ d` near the suppression point) stable on
//! coarse ζ grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::medium::{complex_detunings, linear_loss, DetuningConfig, MediumParams};
use crate::pulse::PulseSequence;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Discretization of the retarded-time × normalized-length domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub n_z: usize,
    pub n_t: usize,
    /// µs, starting at `t = 0`.
    pub t_span: f64,
}

impl SimGrid {
    pub fn new(n_z: usize, n_t: usize, t_span: f64) -> Result<Self> {
        if n_z < 2 {
            return Err(Error::invalid("n_z", "need at least 2 spatial points"));
        }
        if n_t < 2 {
            return Err(Error::invalid("n_t", "need at least 2 temporal points"));
        }
        if !(t_span > 0.0 && t_span.is_finite()) {
            return Err(Error::invalid("t_span", "must be positive"));
        }
        Ok(SimGrid { n_z, n_t, t_span })
    }

    /// Grid spanning the natural extent of `seq`.
    pub fn for_sequence(seq: &PulseSequence, n_z: usize, n_t: usize) -> Result<Self> {
        Self::new(n_z, n_t, seq.natural_span())
    }

    /// Grid over the natural span of `seq` with at least `min_n_t` time
    /// points, refined until [`SimGrid::check_resolves`] holds.
    pub fn resolving(seq: &PulseSequence, n_z: usize, min_n_t: usize) -> Result<Self> {
        let span = seq.natural_span();
        let fwhm = seq.read_in.fwhm.min(seq.read_out.fwhm);
        let mut dt_max = fwhm / 20.0;
        if seq.max_rabi() > 0.0 {
            dt_max = dt_max.min(0.1 / seq.max_rabi());
        }
        let needed = (span / dt_max * (1.0 + 1e-12)).ceil() as usize + 1;
        Self::new(n_z, min_n_t.max(needed), span)
    }

    pub fn dt(&self) -> f64 {
        self.t_span / (self.n_t - 1) as f64
    }

    pub fn dz(&self) -> f64 {
        1.0 / (self.n_z - 1) as f64
    }

    pub fn times(&self) -> Vec<f64> {
        let dt = self.dt();
        (0..self.n_t).map(|i| i as f64 * dt).collect()
    }

    pub fn zetas(&self) -> Vec<f64> {
        let dz = self.dz();
        (0..self.n_z).map(|i| i as f64 * dz).collect()
    }

    pub fn time_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_t, self.dt())
    }

    pub fn z_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.n_z, self.dz())
    }

    /// Checks that the grid resolves the pulses and covers both windows.
    pub fn check_resolves(&self, seq: &PulseSequence) -> Result<()> {
        let dt = self.dt();
        let fwhm = seq.read_in.fwhm.min(seq.read_out.fwhm);
        if dt > fwhm / 20.0 {
            return Err(Error::Precondition(format!(
                "time step {dt:.3e} µs does not resolve the {fwhm:.3e} µs pulses (need ≤ fwhm/20)"
            )));
        }
        let product = dt * seq.max_rabi();
        if product > 0.1 {
            return Err(Error::Precondition(format!(
                "time step × peak Rabi frequency = {product:.3} exceeds 0.1"
            )));
        }
        let (_, end) = seq.retrieval_window();
        if self.t_span < end {
            return Err(Error::Precondition(format!(
                "time span {} µs ends before the retrieval window closes at {end} µs",
                self.t_span
            )));
        }
        Ok(())
    }
}

pub fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] *= 0.5;
    w[n - 1] *= 0.5;
    w
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// When false the anti-Stokes channel is removed: no S↔A
    /// cross-coupling and no anti-Stokes light-shift term on the spin wave.
    pub fwm_enabled: bool,
    /// Phenomenological spin-wave amplitude decay rate, 1/µs.
    pub spinwave_decay_rate: f64,
    /// Give the control its linear dispersive phase along the cell. This
    /// is what sets the four-wave-mixing phase mismatch.
    pub control_dispersion: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            fwm_enabled: true,
            spinwave_decay_rate: 0.0,
            control_dispersion: true,
        }
    }
}

impl SolverOptions {
    pub fn fwm_off() -> Self {
        SolverOptions {
            fwm_enabled: false,
            ..Self::default()
        }
    }

    /// Sets the decay from a memory lifetime, the 1/e time of the
    /// efficiency. The amplitude rate is half the inverse lifetime.
    pub fn with_lifetime(mut self, lifetime_us: Option<f64>) -> Self {
        self.spinwave_decay_rate = lifetime_us.map_or(0.0, |tau| 0.5 / tau);
        self
    }
}

/// Boundary and initial data of the linear problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Inputs {
    /// Signal entering at ζ = 0, one sample per time point.
    pub signal: Vec<Complex64>,
    /// Anti-Stokes creation amplitude entering at ζ = 0.
    pub anti_stokes: Vec<Complex64>,
    /// Spin wave at τ = 0, one sample per ζ point.
    pub spin_wave: Vec<Complex64>,
}

impl Inputs {
    pub fn zeros(grid: &SimGrid) -> Self {
        Inputs {
            signal: vec![ZERO; grid.n_t],
            anti_stokes: vec![ZERO; grid.n_t],
            spin_wave: vec![ZERO; grid.n_z],
        }
    }
}

/// Output modes: fields leaving at ζ = 1 and the final spin wave.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub signal: Vec<Complex64>,
    pub anti_stokes: Vec<Complex64>,
    pub spin_wave: Vec<Complex64>,
}

/// Full solution on the grid, indexed `[iz * n_t + it]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub n_z: usize,
    pub n_t: usize,
    pub s: Vec<Complex64>,
    /// Physical anti-Stokes amplitude `A` (not `A*`).
    pub a: Vec<Complex64>,
    pub b: Vec<Complex64>,
}

impl FieldState {
    fn zeros(n_z: usize, n_t: usize) -> Self {
        FieldState {
            n_z,
            n_t,
            s: vec![ZERO; n_z * n_t],
            a: vec![ZERO; n_z * n_t],
            b: vec![ZERO; n_z * n_t],
        }
    }

    pub fn s_at(&self, iz: usize, it: usize) -> Complex64 {
        self.s[iz * self.n_t + it]
    }

    pub fn a_at(&self, iz: usize, it: usize) -> Complex64 {
        self.a[iz * self.n_t + it]
    }

    pub fn b_at(&self, iz: usize, it: usize) -> Complex64 {
        self.b[iz * self.n_t + it]
    }

    /// Signal leaving the cell.
    pub fn signal_out(&self) -> Vec<Complex64> {
        (0..self.n_t).map(|it| self.s_at(self.n_z - 1, it)).collect()
    }

    pub fn anti_stokes_out(&self) -> Vec<Complex64> {
        (0..self.n_t).map(|it| self.a_at(self.n_z - 1, it)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.s
            .iter()
            .chain(&self.a)
            .chain(&self.b)
            .all(|v| v.re.is_finite() && v.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub time_steps: usize,
    pub stage_evaluations: usize,
    /// Largest spin-wave excitation `∫|B|²dζ` seen on the grid.
    pub peak_spinwave_excitation: f64,
}

/// `J_m(x) = ∫₀¹ e^{−xσ} σ^m dσ` for `m = 0, 1, 2`.
fn exp_moments(x: Complex64) -> [Complex64; 3] {
    if x.norm() < 1.0 {
        let mut j = [ZERO; 3];
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..30 {
            for (m, jm) in j.iter_mut().enumerate() {
                *jm += term / (n + m + 1) as f64;
            }
            term *= -x / (n + 1) as f64;
        }
        j
    } else {
        let e = (-x).exp();
        let j0 = (1.0 - e) / x;
        let j1 = (j0 - e) / x;
        let j2 = (2.0 * j1 - e) / x;
        [j0, j1, j2]
    }
}

/// Exponential-integrator weights for `y' = p·b(ζ) − k·y` over one step
/// `h`, with `b` interpolated by a quadratic through three neighbouring
/// nodes: `y_{n+1} = E·y_n + p·Σ w·b`.
#[derive(Debug, Clone, Copy)]
struct ExpStep {
    decay: Complex64,
    /// Nodes `n−1, n, n+1`.
    backward: [Complex64; 3],
    /// Nodes `n, n+1, n+2`, used on the first step.
    forward: [Complex64; 3],
    /// Nodes `n, n+1`, used when there are only two nodes.
    linear: [Complex64; 2],
}

impl ExpStep {
    fn new(k: Complex64, h: f64) -> Self {
        let x = k * h;
        let [j0, j1, j2] = exp_moments(x);
        // σ runs backwards from the right end of the step in units of h.
        ExpStep {
            decay: (-x).exp(),
            backward: [0.5 * h * (j2 - j1), h * (2.0 * j1 - j2), 0.5 * h * (j2 - 3.0 * j1 + 2.0 * j0)],
            forward: [0.5 * h * (j2 + j1), h * (j0 - j2), 0.5 * h * (j2 - j1)],
            linear: [h * j1, h * (j0 - j1)],
        }
    }

    /// Integrates along all nodes of `b`, starting from `y0`.
    fn sweep(&self, p: Complex64, y0: Complex64, b: &[Complex64], y: &mut [Complex64]) {
        let n = b.len();
        y[0] = y0;
        if n == 2 {
            let [w0, w1] = self.linear;
            y[1] = self.decay * y0 + p * (w0 * b[0] + w1 * b[1]);
            return;
        }
        let [f0, f1, f2] = self.forward;
        y[1] = self.decay * y0 + p * (f0 * b[0] + f1 * b[1] + f2 * b[2]);
        let [w0, w1, w2] = self.backward;
        for k in 1..n - 1 {
            y[k + 1] = self.decay * y[k] + p * (w0 * b[k - 1] + w1 * b[k] + w2 * b[k + 1]);
        }
    }
}

/// Precomputed linear model for one medium / detuning / sequence / grid.
///
/// Reusable across many inputs, which is how Green's-function columns are
/// extracted.
#[derive(Debug, Clone)]
pub struct Propagator {
    grid: SimGrid,
    times: Vec<f64>,
    /// Ω at grid times and at half steps.
    omega: Vec<Complex64>,
    omega_half: Vec<Complex64>,
    coupling: f64,
    inv_gs: Complex64,
    inv_ga_conj: Complex64,
    c_s: Complex64,
    c_a: Complex64,
    light_shift: Complex64,
    decay_rate: f64,
    fwm: bool,
    /// `e^{−iθζ}` at each ζ node.
    control_phase: Vec<Complex64>,
    step_s: ExpStep,
    step_a: ExpStep,
}

impl Propagator {
    pub fn new(
        medium: &MediumParams,
        cfg: &DetuningConfig,
        seq: &PulseSequence,
        grid: &SimGrid,
        opts: &SolverOptions,
    ) -> Result<Self> {
        medium.validate()?;
        if !(opts.spinwave_decay_rate >= 0.0) {
            return Err(Error::invalid("spinwave_decay_rate", "must be non-negative"));
        }
        let (gs, ga) = complex_detunings(cfg, medium);
        let (ks, ka) = linear_loss(medium, cfg).normalized(medium);
        let alpha = medium.alpha;
        let c_s = (1.0 - alpha) / gs + alpha / gs.conj();
        let c_a = (1.0 - alpha) / ga + alpha / ga.conj();
        let mut light_shift = gs.inv();
        if opts.fwm_enabled {
            light_shift += ga.conj().inv();
        }
        let times = grid.times();
        let dt = grid.dt();
        let omega = times.iter().map(|&t| seq.control(t)).collect();
        let omega_half = times.iter().map(|&t| seq.control(t + 0.5 * dt)).collect();
        let h = grid.dz();
        let theta = if opts.control_dispersion {
            (medium.kappa_at(cfg.delta_c()) * (medium.length / medium.c)).im
        } else {
            0.0
        };
        let control_phase = grid.zetas().iter().map(|&z| Complex64::from_polar(1.0, -theta * z)).collect();
        Ok(Propagator {
            grid: *grid,
            times,
            omega,
            omega_half,
            coupling: (medium.depth() * medium.gamma()).sqrt(),
            inv_gs: gs.inv(),
            inv_ga_conj: ga.conj().inv(),
            c_s,
            c_a,
            light_shift,
            decay_rate: opts.spinwave_decay_rate,
            fwm: opts.fwm_enabled,
            control_phase,
            step_s: ExpStep::new(ks, h),
            step_a: ExpStep::new(ka.conj() + 2.0 * I * theta, h),
        })
    }

    pub fn grid(&self) -> &SimGrid {
        &self.grid
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Sweeps S and Ā along ζ for the spin-wave profile `b`.
    fn sweep(&self, omega: Complex64, s0: Complex64, a0: Complex64, b: &[Complex64], s: &mut [Complex64], a: &mut [Complex64]) {
        let ps = I * self.coupling * omega * self.inv_gs;
        self.step_s.sweep(ps, s0, b, s);
        // Without four-wave mixing the anti-Stokes input only propagates.
        let pa = if self.fwm {
            -I * self.coupling * omega.conj() * self.inv_ga_conj
        } else {
            ZERO
        };
        self.step_a.sweep(pa, a0, b, a);
    }

    /// Spin-wave time derivative given the fields already swept.
    fn derivative(&self, omega: Complex64, s: &[Complex64], a: &[Complex64], b: &[Complex64], out: &mut [Complex64]) {
        let qs = -I * self.coupling * omega.conj() * self.c_s;
        let r = self.light_shift * omega.norm_sqr() + self.decay_rate;
        if self.fwm {
            let qa = I * self.coupling * omega * self.c_a;
            for k in 0..b.len() {
                out[k] = qs * s[k] + qa * a[k] - r * b[k];
            }
        } else {
            for k in 0..b.len() {
                out[k] = qs * s[k] - r * b[k];
            }
        }
    }

    /// Marches the linear system. Inputs before `start` must be zero and
    /// the spin wave must be zero unless `start == 0`; outputs before
    /// `start` are then exactly zero and are not computed.
    pub fn march(&self, inputs: &Inputs, start: usize, mut full: Option<&mut FieldState>) -> Result<(Outputs, SolverDiagnostics)> {
        let n_z = self.grid.n_z;
        let n_t = self.grid.n_t;
        if inputs.signal.len() != n_t || inputs.anti_stokes.len() != n_t || inputs.spin_wave.len() != n_z {
            return Err(Error::Precondition("input lengths do not match the grid".into()));
        }
        let dt = self.grid.dt();
        let zw = self.grid.z_weights();
        let mut out = Outputs {
            signal: vec![ZERO; n_t],
            anti_stokes: vec![ZERO; n_t],
            spin_wave: vec![ZERO; n_z],
        };
        let phase = &self.control_phase;
        let mut b = if start == 0 {
            inputs.spin_wave.iter().zip(phase).map(|(v, p)| v * p).collect()
        } else {
            vec![ZERO; n_z]
        };
        let mut s = vec![ZERO; n_z];
        let mut a = vec![ZERO; n_z];
        let mut k1 = vec![ZERO; n_z];
        let mut k2 = vec![ZERO; n_z];
        let mut k3 = vec![ZERO; n_z];
        let mut k4 = vec![ZERO; n_z];
        let mut tmp = vec![ZERO; n_z];
        let mut stages = 0usize;
        let mut peak = 0.0f64;

        for n in start..n_t {
            // Fields at t_n on the current spin wave; these are the outputs.
            let om = self.omega[n];
            self.sweep(om, inputs.signal[n], inputs.anti_stokes[n], &b, &mut s, &mut a);
            stages += 1;
            out.signal[n] = s[n_z - 1];
            out.anti_stokes[n] = a[n_z - 1] * phase[n_z - 1].conj().powi(2);
            let excitation: f64 = b.iter().zip(&zw).map(|(v, w)| w * v.norm_sqr()).sum();
            peak = peak.max(excitation);
            if let Some(state) = full.as_deref_mut() {
                for k in 0..n_z {
                    state.s[k * n_t + n] = s[k];
                    state.a[k * n_t + n] = (a[k] * phase[k].conj().powi(2)).conj();
                    state.b[k * n_t + n] = b[k] * phase[k].conj();
                }
            }
            if n + 1 == n_t {
                break;
            }

            self.derivative(om, &s, &a, &b, &mut k1);

            let omh = self.omega_half[n];
            let s_half = 0.5 * (inputs.signal[n] + inputs.signal[n + 1]);
            let a_half = 0.5 * (inputs.anti_stokes[n] + inputs.anti_stokes[n + 1]);
            for k in 0..n_z {
                tmp[k] = b[k] + 0.5 * dt * k1[k];
            }
            self.sweep(omh, s_half, a_half, &tmp, &mut s, &mut a);
            self.derivative(omh, &s, &a, &tmp, &mut k2);

            for k in 0..n_z {
                tmp[k] = b[k] + 0.5 * dt * k2[k];
            }
            self.sweep(omh, s_half, a_half, &tmp, &mut s, &mut a);
            self.derivative(omh, &s, &a, &tmp, &mut k3);

            let om1 = self.omega[n + 1];
            for k in 0..n_z {
                tmp[k] = b[k] + dt * k3[k];
            }
            self.sweep(om1, inputs.signal[n + 1], inputs.anti_stokes[n + 1], &tmp, &mut s, &mut a);
            self.derivative(om1, &s, &a, &tmp, &mut k4);
            stages += 3;

            for k in 0..n_z {
                b[k] += dt / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]);
            }
        }
        out.spin_wave = b.iter().zip(phase).map(|(v, p)| v * p.conj()).collect();

        let finite = out
            .signal
            .iter()
            .chain(&out.anti_stokes)
            .chain(&out.spin_wave)
            .all(|v| v.re.is_finite() && v.im.is_finite());
        if !finite {
            return Err(Error::Numerical("non-finite field amplitudes; refine the grid".into()));
        }
        Ok((
            out,
            SolverDiagnostics {
                time_steps: n_t - 1 - start.min(n_t - 1),
                stage_evaluations: stages,
                peak_spinwave_excitation: peak,
            },
        ))
    }

    /// Inputs for a memory run: the normalized signal, vacuum elsewhere.
    pub fn memory_inputs(&self, seq: &PulseSequence) -> Inputs {
        let mut inputs = Inputs::zeros(&self.grid);
        inputs.signal = seq.signal_samples(&self.times, &self.grid.time_weights());
        inputs
    }
}

/// Integrates the equations of motion for the sequence's signal input and
/// returns the full field state.
pub fn evolve(
    medium: &MediumParams,
    cfg: &DetuningConfig,
    seq: &PulseSequence,
    grid: &SimGrid,
    opts: &SolverOptions,
) -> Result<FieldState> {
    grid.check_resolves(seq)?;
    let prop = Propagator::new(medium, cfg, seq, grid, opts)?;
    let inputs = prop.memory_inputs(seq);
    let mut state = FieldState::zeros(grid.n_z, grid.n_t);
    prop.march(&inputs, 0, Some(&mut state))?;
    if !state.is_finite() {
        return Err(Error::Numerical("non-finite field state".into()));
    }
    Ok(state)
}

/// Photons in `[lo, hi)` for a trace sampled on `times` with quadrature
/// `weights`.
pub fn window_photons(trace: &[Complex64], times: &[f64], weights: &[f64], window: (f64, f64)) -> f64 {
    trace
        .iter()
        .zip(times)
        .zip(weights)
        .filter(|((_, &t), _)| t >= window.0 && t < window.1)
        .map(|((v, _), w)| w * v.norm_sqr())
        .sum()
}

/// Efficiencies and output traces of one storage-and-retrieval run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryResult {
    pub n_in: f64,
    /// Retrieved photons / N_in; `None` when `N_in = 0`.
    pub eta_total: Option<f64>,
    pub eta_readin: Option<f64>,
    pub leakage: Option<f64>,
    pub retrieved_photons: f64,
    pub leaked_photons: f64,
    pub times: Vec<f64>,
    pub abs2_signal_out: Vec<f64>,
    pub abs2_anti_stokes_out: Vec<f64>,
    pub diagnostics: SolverDiagnostics,
}

impl MemoryResult {
    pub fn eta(&self) -> Result<f64> {
        self.eta_total
            .ok_or_else(|| Error::invalid("N_in", "efficiency is undefined for N_in = 0"))
    }
}

/// Runs the memory and reduces the output to efficiencies.
pub fn memory_run(
    medium: &MediumParams,
    cfg: &DetuningConfig,
    seq: &PulseSequence,
    grid: &SimGrid,
    opts: &SolverOptions,
) -> Result<MemoryResult> {
    grid.check_resolves(seq)?;
    let prop = Propagator::new(medium, cfg, seq, grid, opts)?;
    let inputs = prop.memory_inputs(seq);
    let (out, diagnostics) = prop.march(&inputs, 0, None)?;
    Ok(reduce_memory_output(seq, grid, &out.signal, &out.anti_stokes, diagnostics))
}

pub(crate) fn reduce_memory_output(
    seq: &PulseSequence,
    grid: &SimGrid,
    signal: &[Complex64],
    anti_stokes: &[Complex64],
    diagnostics: SolverDiagnostics,
) -> MemoryResult {
    let times = grid.times();
    let weights = grid.time_weights();
    let retrieved = window_photons(signal, &times, &weights, seq.retrieval_window());
    let leaked = window_photons(signal, &times, &weights, seq.input_window());
    let (eta_total, leakage) = if seq.n_in > 0.0 {
        (Some(retrieved / seq.n_in), Some(leaked / seq.n_in))
    } else {
        (None, None)
    };
    MemoryResult {
        n_in: seq.n_in,
        eta_total,
        eta_readin: leakage.map(|l| 1.0 - l),
        leakage,
        retrieved_photons: retrieved,
        leaked_photons: leaked,
        abs2_signal_out: signal.iter().map(|v| v.norm_sqr()).collect(),
        abs2_anti_stokes_out: anti_stokes.iter().map(|v| v.norm_sqr()).collect(),
        times,
        diagnostics,
    }
}
