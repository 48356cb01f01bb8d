//! Least-squares fits: the g² noise model, exponential lifetimes, and
//! linear noise-versus-pumping extrapolation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::parallel::Parallelism;
use crate::stats::{G2Model, StatPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitParam {
    pub name: String,
    pub value: f64,
    pub std_err: f64,
    pub ci95: (f64, f64),
    /// Held at its starting value.
    #[serde(default)]
    pub fixed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: Vec<FitParam>,
    /// Over the free parameters, in `params` order.
    pub covariance: Vec<Vec<f64>>,
    /// `√Σ r²` of the (weighted) residuals.
    pub residual_norm: f64,
    pub n_points: usize,
    pub dof: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Percentile intervals from resampling, when requested.
    pub bootstrap_ci95: Option<Vec<(f64, f64)>>,
    /// Diagnostics that do not invalidate the fit.
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn get(&self, name: &str) -> Option<&FitParam> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn value(&self, name: &str) -> f64 {
        self.get(name).map_or(f64::NAN, |p| p.value)
    }

    /// True when the named parameter's interval contains `truth`.
    pub fn covers(&self, name: &str, truth: f64) -> bool {
        self.get(name).is_some_and(|p| p.ci95.0 <= truth && truth <= p.ci95.1)
    }
}

/// Settings for the Levenberg–Marquardt iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmOptions {
    pub max_iter: usize,
    /// Relative reduction of the cost below which the iteration stops.
    pub ftol: f64,
    /// Relative step size below which the iteration stops.
    pub xtol: f64,
    pub gtol: f64,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iter: 500,
            ftol: 1e-12,
            xtol: 1e-13,
            gtol: 1e-15,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `JᵀJ` at the solution.
    pub jtj: DMatrix<f64>,
}

/// Minimizes `½Σr²` with a damped Gauss–Newton (Levenberg–Marquardt)
/// trust-region iteration. `residuals` fills `r` and the row-major Jacobian
/// `J[i][k] = ∂r_i/∂x_k`. Parameters are projected onto `x ≥ lower`.
pub fn levenberg_marquardt<F>(mut residuals: F, x0: &[f64], lower: &[f64], opts: &LmOptions) -> Result<LmOutcome>
where
    F: FnMut(&[f64], &mut DVector<f64>, &mut DMatrix<f64>),
{
    let p = x0.len();
    let mut x: Vec<f64> = x0.iter().zip(lower).map(|(v, lo)| v.max(*lo)).collect();
    let probe = {
        let mut r = DVector::zeros(0);
        let mut j = DMatrix::zeros(0, p);
        residuals(&x, &mut r, &mut j);
        r.len()
    };
    let mut r = DVector::zeros(probe);
    let mut jac = DMatrix::zeros(probe, p);
    residuals(&x, &mut r, &mut jac);
    let mut cost = 0.5 * r.norm_squared();
    if !cost.is_finite() {
        return Err(Error::Numerical("non-finite residuals at the starting point".into()));
    }
    let mut lambda = 1e-3;
    let mut r_try = DVector::zeros(probe);
    let mut j_try = DMatrix::zeros(probe, p);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iter {
        iterations += 1;
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * &r;
        let scale = jtj.diagonal().map(|d| d.max(1e-300));
        if grad.amax() <= opts.gtol * (1.0 + cost) {
            converged = true;
            break;
        }
        let mut accepted = false;
        for _ in 0..60 {
            let mut a = jtj.clone();
            for k in 0..p {
                a[(k, k)] += lambda * scale[k];
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&grad))) else {
                lambda *= 10.0;
                continue;
            };
            let x_try: Vec<f64> = x
                .iter()
                .zip(step.iter())
                .zip(lower)
                .map(|((v, s), lo)| (v + s).max(*lo))
                .collect();
            residuals(&x_try, &mut r_try, &mut j_try);
            let cost_try = 0.5 * r_try.norm_squared();
            if cost_try.is_finite() && cost_try <= cost {
                let rel_drop = (cost - cost_try) / cost.max(1e-300);
                let rel_step = x_try
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs() / (b.abs() + 1e-12))
                    .fold(0.0, f64::max);
                x = x_try;
                std::mem::swap(&mut r, &mut r_try);
                std::mem::swap(&mut jac, &mut j_try);
                cost = cost_try;
                lambda = (lambda / 3.0).max(1e-12);
                accepted = true;
                if rel_drop <= opts.ftol || rel_step <= opts.xtol || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            lambda *= 4.0;
        }
        if !accepted {
            // No descent direction left: already at a (possibly bounded) minimum.
            converged = true;
        }
        if converged {
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations,
            residual: (2.0 * cost).sqrt(),
        });
    }
    let jtj = jac.transpose() * &jac;
    Ok(LmOutcome {
        x,
        cost,
        iterations,
        converged,
        jtj,
    })
}

/// How the covariance of the linearized problem is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sigma {
    /// Residuals are already divided by known standard errors.
    Known,
    /// Scale by the residual variance `RSS/(n − p)`.
    Estimated,
}

fn t_quantile(dof: usize) -> f64 {
    if dof == 0 {
        return f64::NAN;
    }
    StudentsT::new(0.0, 1.0, dof as f64).map_or(f64::NAN, |t| t.inverse_cdf(0.975))
}

/// Checks the numerical rank of `JᵀJ` and inverts it.
fn covariance(jtj: &DMatrix<f64>, names: &[&str]) -> Result<DMatrix<f64>> {
    let p = jtj.nrows();
    // Scale to unit diagonal before judging the rank.
    let d: Vec<f64> = (0..p).map(|k| jtj[(k, k)].sqrt()).collect();
    if let Some(k) = d.iter().position(|v| !(*v > 0.0)) {
        return Err(Error::RankDeficient(format!("parameter '{}' does not affect the model", names[k])));
    }
    let scaled = DMatrix::from_fn(p, p, |i, j| jtj[(i, j)] / (d[i] * d[j]));
    let sv = scaled.clone().svd(false, false).singular_values;
    let (smin, smax) = (sv.min(), sv.max());
    if !(smin > 1e-12 * smax) {
        return Err(Error::RankDeficient(format!(
            "parameters {} are not jointly identifiable from these data",
            names.join(", ")
        )));
    }
    let inv = scaled
        .try_inverse()
        .ok_or_else(|| Error::RankDeficient("singular normal matrix".into()))?;
    Ok(DMatrix::from_fn(p, p, |i, j| inv[(i, j)] / (d[i] * d[j])))
}

#[allow(clippy::too_many_arguments)]
fn assemble(
    names: &[&str],
    values: &[f64],
    free: &[bool],
    outcome_cov: Option<&DMatrix<f64>>,
    rss: f64,
    n: usize,
    iterations: usize,
    sigma: Sigma,
) -> FitResult {
    let n_free = free.iter().filter(|f| **f).count();
    let dof = n.saturating_sub(n_free);
    let factor = match sigma {
        Sigma::Known => 1.0,
        Sigma::Estimated => {
            if dof > 0 {
                rss / dof as f64
            } else {
                f64::NAN
            }
        }
    };
    let t = t_quantile(dof);
    let mut params = Vec::new();
    let mut cov_out = vec![vec![f64::NAN; n_free]; n_free];
    let mut k = 0;
    for (i, name) in names.iter().enumerate() {
        if free[i] {
            let var = outcome_cov.map_or(f64::NAN, |c| c[(k, k)] * factor);
            let se = var.max(0.0).sqrt();
            let half = t * se;
            params.push(FitParam {
                name: (*name).to_string(),
                value: values[i],
                std_err: se,
                ci95: (values[i] - half, values[i] + half),
                fixed: false,
            });
            if let Some(c) = outcome_cov {
                for l in 0..n_free {
                    cov_out[k][l] = c[(k, l)] * factor;
                }
            }
            k += 1;
        } else {
            params.push(FitParam {
                name: (*name).to_string(),
                value: values[i],
                std_err: 0.0,
                ci95: (values[i], values[i]),
                fixed: true,
            });
        }
    }
    FitResult {
        params,
        covariance: cov_out,
        residual_norm: rss.sqrt(),
        n_points: n,
        dof,
        iterations,
        converged: true,
        bootstrap_ci95: None,
        warnings: Vec::new(),
    }
}

/// Options for the g² model fit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct G2FitOptions {
    /// Hold `a` fixed (e.g. at a value derived from simulated kernels).
    pub fixed_a: Option<f64>,
    pub bootstrap: Option<BootstrapOptions>,
    /// Starting point; a small multi-start search is used when absent.
    pub initial: Option<G2Model>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapOptions {
    pub resamples: usize,
    pub seed: u64,
    #[serde(skip)]
    pub parallelism: Parallelism,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions {
            resamples: 1000,
            seed: 0x5eed,
            parallelism: Parallelism::Parallel,
        }
    }
}

const G2_NAMES: [&str; 3] = ["a", "N_SRS", "N_F"];

fn g2_model_residuals(points: &[StatPoint], g2_f: f64, x: &[f64], free: &[bool; 3], r: &mut DVector<f64>, j: &mut DMatrix<f64>) {
    let (a, s, f) = (x[0], x[1], x[2]);
    let n_free = free.iter().filter(|v| **v).count();
    if r.len() != points.len() {
        *r = DVector::zeros(points.len());
    }
    if j.nrows() != points.len() || j.ncols() != n_free {
        *j = DMatrix::zeros(points.len(), n_free);
    }
    for (i, p) in points.iter().enumerate() {
        let n = p.n_out;
        let t = n + s + f;
        let e = a * n * n + 2.0 * s * n + s * s + f * f * (g2_f - 1.0);
        let t2 = t * t;
        let model = 1.0 + e / t2;
        let w = 1.0 / p.g2_err;
        r[i] = (model - p.g2) * w;
        let d = [
            n * n / t2,
            (2.0 * n + 2.0 * s) / t2 - 2.0 * e / (t2 * t),
            2.0 * f * (g2_f - 1.0) / t2 - 2.0 * e / (t2 * t),
        ];
        let mut col = 0;
        for k in 0..3 {
            if free[k] {
                j[(i, col)] = d[k] * w;
                col += 1;
            }
        }
    }
}

fn fit_g2_once(points: &[StatPoint], start: [f64; 3], free: [bool; 3], g2_f: f64) -> Result<(LmOutcome, [f64; 3])> {
    let idx: Vec<usize> = (0..3).filter(|k| free[*k]).collect();
    let x0: Vec<f64> = idx.iter().map(|&k| start[k]).collect();
    let lower: Vec<f64> = idx.iter().map(|&k| if k == 0 { f64::NEG_INFINITY } else { 0.0 }).collect();
    let out = levenberg_marquardt(
        |xf, r, j| {
            let mut full = start;
            for (v, &k) in xf.iter().zip(&idx) {
                full[k] = *v;
            }
            g2_model_residuals(points, g2_f, &full, &free, r, j);
        },
        &x0,
        &lower,
        &LmOptions::default(),
    )?;
    let mut full = start;
    for (v, &k) in out.x.iter().zip(&idx) {
        full[k] = *v;
    }
    Ok((out, full))
}

fn check_g2_points(points: &[StatPoint], n_free: usize) -> Result<()> {
    if points.len() < n_free.max(4) {
        return Err(Error::RankDeficient(format!(
            "{} points cannot determine {n_free} parameters (need at least {})",
            points.len(),
            n_free.max(4)
        )));
    }
    for p in points {
        if !(p.n_out >= 0.0 && p.g2.is_finite()) {
            return Err(Error::invalid("points", "N_out must be non-negative and g2 finite"));
        }
        if !(p.g2_err > 0.0 && p.g2_err.is_finite()) {
            return Err(Error::invalid("g2_err", "standard errors must be positive"));
        }
    }
    let max = points.iter().map(|p| p.n_out).fold(0.0, f64::max);
    let min = points.iter().map(|p| p.n_out).fold(f64::INFINITY, f64::min);
    if max <= min {
        return Err(Error::RankDeficient(
            "all points share one N_out; a is not identifiable".into(),
        ));
    }
    if min > 0.1 * max {
        return Err(Error::Precondition(
            "the data need a point near N_out = 0 to separate noise from signal".into(),
        ));
    }
    Ok(())
}

/// Weighted fit of the g² noise model to `(N_out, g², σ)` data.
pub fn fit_g2_model(points: &[StatPoint], opts: &G2FitOptions) -> Result<FitResult> {
    let free = [opts.fixed_a.is_none(), true, true];
    let n_free = free.iter().filter(|v| **v).count();
    check_g2_points(points, n_free)?;
    let g2_f = opts.initial.map_or(2.0, |m| m.g2_f);

    let starts: Vec<[f64; 3]> = match opts.initial {
        Some(m) => vec![[opts.fixed_a.unwrap_or(m.a), m.n_srs, m.n_f]],
        None => {
            let max_n = points.iter().map(|p| p.n_out).fold(0.0, f64::max);
            let top = points.iter().max_by(|x, y| x.n_out.total_cmp(&y.n_out)).map_or(1.0, |p| p.g2);
            let a0 = opts.fixed_a.unwrap_or((top - 1.0).max(-1.0));
            let mut v = Vec::new();
            for scale in [0.01, 0.05, 0.2, 1.0] {
                for frac in [0.1, 0.5, 0.9] {
                    let total = scale * max_n;
                    v.push([a0, total * frac, total * (1.0 - frac)]);
                }
            }
            v
        }
    };
    let mut best: Option<(LmOutcome, [f64; 3])> = None;
    let mut last_err = None;
    for s in starts {
        match fit_g2_once(points, s, free, g2_f) {
            Ok(res) => {
                if best.as_ref().is_none_or(|b| res.0.cost < b.0.cost) {
                    best = Some(res);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (outcome, values) = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::Numerical("no fit attempted".into()))),
    };
    let names: Vec<&str> = (0..3).filter(|k| free[*k]).map(|k| G2_NAMES[k]).collect();
    let cov = covariance(&outcome.jtj, &names)?;
    let rss = 2.0 * outcome.cost;
    let mut result = assemble(&G2_NAMES, &values, &free, Some(&cov), rss, points.len(), outcome.iterations, Sigma::Known);
    for (k, name) in ["N_SRS", "N_F"].iter().enumerate() {
        if values[k + 1] == 0.0 {
            result.warnings.push(format!("{name} is at its lower bound 0"));
        }
    }
    if let Some(b) = opts.bootstrap {
        let model0 = G2Model {
            a: values[0],
            n_srs: values[1],
            n_f: values[2],
            g2_f,
            n_l: 0.0,
        };
        let sub = G2FitOptions {
            fixed_a: opts.fixed_a,
            bootstrap: None,
            initial: Some(model0),
        };
        let samples = bootstrap(points, &b, |pts| {
            fit_g2_model(pts, &sub).map(|f| f.params.iter().map(|p| p.value).collect())
        });
        result.bootstrap_ci95 = percentile_intervals(&samples, 3);
    }
    Ok(result)
}

/// Case resampling; each replicate draws from its own seeded stream so
/// the result does not depend on scheduling.
pub fn bootstrap<T, F>(points: &[T], opts: &BootstrapOptions, fit: F) -> Vec<Vec<f64>>
where
    T: Clone + Sync,
    F: Fn(&[T]) -> Result<Vec<f64>> + Sync,
{
    let n = points.len();
    let reps = opts.parallelism.map_range(opts.resamples, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(i as u64));
        let sample: Vec<T> = (0..n).map(|_| points[rng.random_range(0..n)].clone()).collect();
        fit(&sample).ok()
    });
    reps.into_iter().flatten().collect()
}

/// 2.5 % / 97.5 % percentiles of each coordinate.
pub fn percentile_intervals(samples: &[Vec<f64>], dim: usize) -> Option<Vec<(f64, f64)>> {
    if samples.len() < 2 {
        return None;
    }
    Some(
        (0..dim)
            .map(|k| {
                let mut col: Vec<f64> = samples.iter().map(|s| s[k]).filter(|v| v.is_finite()).collect();
                col.sort_by(f64::total_cmp);
                let q = |p: f64| {
                    let pos = p * (col.len() - 1) as f64;
                    let lo = pos.floor() as usize;
                    let hi = pos.ceil() as usize;
                    col[lo] + (col[hi] - col[lo]) * (pos - lo as f64)
                };
                if col.is_empty() {
                    (f64::NAN, f64::NAN)
                } else {
                    (q(0.025), q(0.975))
                }
            })
            .collect(),
    )
}

/// Fits `A·exp(−t/τ)` to `(t_ns, value)` data by unweighted least squares.
pub fn fit_exponential(t_ns: &[f64], values: &[f64]) -> Result<FitResult> {
    let n = t_ns.len();
    if n != values.len() {
        return Err(Error::invalid("points", "time and value columns differ in length"));
    }
    if n < 2 {
        return Err(Error::RankDeficient("an exponential needs at least two points".into()));
    }
    if t_ns.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("t_ns", "times must be strictly increasing"));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("value", "values must be finite"));
    }
    let span = t_ns[n - 1] - t_ns[0];

    // Start from a log-linear fit over the positive values.
    let pos: Vec<(f64, f64)> = t_ns.iter().zip(values).filter(|(_, v)| **v > 0.0).map(|(t, v)| (*t, v.ln())).collect();
    let (mut k0, mut ln_a0) = (1.0 / span, values[0].abs().max(1e-300).ln());
    if pos.len() >= 2 {
        let (slope, icept) = ols(&pos);
        k0 = -slope;
        ln_a0 = icept;
    }
    let flat = values.iter().all(|v| (v - values[0]).abs() <= 1e-12 * values[0].abs().max(1e-300));
    if flat {
        return Err(Error::RankDeficient(
            "data show no decay; the lifetime is not identifiable (τ → ∞)".into(),
        ));
    }

    let t0 = t_ns[0];
    let residuals = |x: &[f64], r: &mut DVector<f64>, j: &mut DMatrix<f64>| {
        if r.len() != n {
            *r = DVector::zeros(n);
            *j = DMatrix::zeros(n, 2);
        }
        let (amp, k) = (x[0], x[1]);
        for i in 0..n {
            let dt = t_ns[i] - t0;
            let e = (-k * dt).exp();
            r[i] = amp * e - values[i];
            j[(i, 0)] = e;
            j[(i, 1)] = -amp * dt * e;
        }
    };
    // Amplitude referenced to the first sample time keeps the problem well scaled.
    let x0 = [(ln_a0 - k0 * t0).exp(), k0];
    let out = levenberg_marquardt(residuals, &x0, &[f64::NEG_INFINITY; 2], &LmOptions::default())?;
    let (amp_t0, k) = (out.x[0], out.x[1]);
    if k.abs() * span < 1e-9 {
        return Err(Error::RankDeficient(
            "fitted decay rate is zero; the lifetime is not identifiable (τ → ∞)".into(),
        ));
    }
    let cov_k = covariance(&out.jtj, &["amplitude", "rate"]).ok();
    let amplitude = amp_t0 * (k * t0).exp();
    let tau = 1.0 / k;

    // Delta method from (A(t0), k) to (A(0), τ).
    let jac = DMatrix::from_row_slice(2, 2, &[(k * t0).exp(), amp_t0 * t0 * (k * t0).exp(), 0.0, -1.0 / (k * k)]);
    let cov = cov_k.map(|c| &jac * c * jac.transpose());
    let rss = 2.0 * out.cost;
    let mut res = assemble(
        &["amplitude", "tau_ns"],
        &[amplitude, tau],
        &[true, true],
        cov.as_ref(),
        rss,
        n,
        out.iterations,
        Sigma::Estimated,
    );
    if n == 2 {
        res.warnings.push("two points: exact interpolation, no uncertainty estimate".into());
    }
    if tau <= 0.0 {
        res.warnings.push(format!("non-positive lifetime τ = {tau:.4e} ns: data grow with time"));
    }
    Ok(res)
}

fn ols(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Ordinary least squares `N_noise = slope·α + offset`; the offset is the
/// noise left at perfect pumping.
pub fn fit_linear_noise_vs_alpha(alpha: &[f64], noise: &[f64]) -> Result<FitResult> {
    let n = alpha.len();
    if n != noise.len() {
        return Err(Error::invalid("points", "alpha and noise columns differ in length"));
    }
    if alpha.iter().chain(noise).any(|v| !v.is_finite()) {
        return Err(Error::invalid("points", "values must be finite"));
    }
    let distinct = alpha.iter().any(|a| (a - alpha[0]).abs() > 0.0);
    if n < 2 || !distinct {
        return Err(Error::RankDeficient("need at least two distinct alpha values".into()));
    }
    let pts: Vec<(f64, f64)> = alpha.iter().copied().zip(noise.iter().copied()).collect();
    let (slope, offset) = ols(&pts);
    let rss: f64 = pts.iter().map(|(a, y)| (y - slope * a - offset).powi(2)).sum();
    let mx = alpha.iter().sum::<f64>() / n as f64;
    let sxx: f64 = alpha.iter().map(|a| (a - mx).powi(2)).sum();
    let sx2: f64 = alpha.iter().map(|a| a * a).sum();
    // (XᵀX)⁻¹ for columns [α, 1].
    let inv = DMatrix::from_row_slice(2, 2, &[1.0 / sxx, -mx / sxx, -mx / sxx, sx2 / (n as f64 * sxx)]);
    let mut res = assemble(&["slope", "offset"], &[slope, offset], &[true, true], Some(&inv), rss, n, 1, Sigma::Estimated);
    if offset < 0.0 {
        res.warnings.push(format!("negative offset {offset:.4e}: no physical noise floor"));
    }
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::g2_out;

    fn synthetic(model: &G2Model, ns: &[f64], rel_err: f64) -> Vec<StatPoint> {
        ns.iter()
            .map(|&n| {
                let g = g2_out(model, n).unwrap();
                StatPoint {
                    n_out: n,
                    g2: g,
                    g2_err: rel_err * g,
                }
            })
            .collect()
    }

    const NS: [f64; 8] = [0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6];

    #[test]
    fn noiseless_g2_recovery() {
        let truth = G2Model::new(0.5, 0.081, 0.009);
        let fit = fit_g2_model(&synthetic(&truth, &NS, 0.01), &G2FitOptions::default()).unwrap();
        assert!((fit.value("a") - 0.5).abs() < 1e-8);
        assert!((fit.value("N_SRS") - 0.081).abs() < 1e-8);
        assert!((fit.value("N_F") - 0.009).abs() < 1e-8);
        assert!(fit.residual_norm < 1e-8);
    }

    #[test]
    fn fixed_a_mode() {
        let truth = G2Model::new(-0.2, 0.011, 0.0038);
        let fit = fit_g2_model(
            &synthetic(&truth, &NS, 0.01),
            &G2FitOptions {
                fixed_a: Some(-0.2),
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fit.get("a").unwrap().fixed);
        assert_eq!(fit.covariance.len(), 2);
        assert!((fit.value("N_SRS") - 0.011).abs() < 1e-9);
    }

    #[test]
    fn degenerate_g2_inputs() {
        let truth = G2Model::new(0.5, 0.081, 0.009);
        let zeros = synthetic(&truth, &[0.0; 5], 0.01);
        assert!(matches!(fit_g2_model(&zeros, &G2FitOptions::default()), Err(Error::RankDeficient(_))));
        let few = synthetic(&truth, &NS[..3], 0.01);
        assert!(matches!(fit_g2_model(&few, &G2FitOptions::default()), Err(Error::RankDeficient(_))));
        let far = synthetic(&truth, &[0.5, 0.6, 0.8, 1.0], 0.01);
        assert!(matches!(fit_g2_model(&far, &G2FitOptions::default()), Err(Error::Precondition(_))));
    }

    #[test]
    fn exponential_exact_and_degenerate() {
        let t = [0.0, 100.0];
        let v = [2.0, 2.0 * (-100.0f64 / 625.0).exp()];
        let fit = fit_exponential(&t, &v).unwrap();
        assert!((fit.value("tau_ns") - 625.0).abs() < 1e-8);
        assert!((fit.value("amplitude") - 2.0).abs() < 1e-12);
        assert!(matches!(fit_exponential(&[0.0, 1.0, 2.0], &[1.0; 3]), Err(Error::RankDeficient(_))));
        assert!(fit_exponential(&[0.0, 0.0, 2.0], &[1.0, 0.9, 0.8]).is_err());
        let grow = fit_exponential(&[0.0, 50.0, 100.0], &[1.0, 1.1, 1.21]).unwrap();
        assert!(grow.value("tau_ns") < 0.0);
        assert!(!grow.warnings.is_empty());
    }

    #[test]
    fn linear_fit_cases() {
        let alpha = [0.001, 0.002, 0.004, 0.008];
        let noise: Vec<f64> = alpha.iter().map(|a| 1.7 * a + 4.4e-3).collect();
        let fit = fit_linear_noise_vs_alpha(&alpha, &noise).unwrap();
        assert!((fit.value("offset") - 4.4e-3).abs() < 1e-15);
        assert!((fit.value("slope") - 1.7).abs() < 1e-12);
        assert!(fit_linear_noise_vs_alpha(&[0.1, 0.1], &[1.0, 2.0]).is_err());
        let neg = fit_linear_noise_vs_alpha(&[0.0, 1.0, 2.0], &[-0.5, 0.6, 1.4]).unwrap();
        assert!(neg.value("offset") < 0.0);
        assert!(neg.warnings.iter().any(|w| w.contains("negative offset")));
    }

    #[test]
    fn percentile_intervals_bracket() {
        let samples: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64]).collect();
        let ci = percentile_intervals(&samples, 1).unwrap();
        assert!((ci[0].0 - 2.5).abs() < 1e-12 && (ci[0].1 - 97.5).abs() < 1e-12);
    }
}
