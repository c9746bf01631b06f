//! Iteratively reweighted proximal solver.
//!
//! Each outer iteration linearizes the spectral penalty at the current
//! iterate (weights `w_ij = ρ'_λ(σ_ij)`), majorizes the risk quadratically,
//! and solves the resulting weighted tubal-nuclear-norm proximal subproblem
//! exactly with weighted tensor singular value thresholding. The inverse
//! step size `η` is initialized by the Barzilai-Borwein rule and inflated by
//! `κ` until the monotone search criterion
//! `F(b₊) + (α/2)·η·‖b₊ - b‖²_F ≤ F(b)` holds, so the objective trace is
//! nonincreasing by construction.

use log::debug;
use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{risk, risk_and_gradient, Dataset, LossSpec};
use crate::penalty::PenaltySpec;
use crate::tensor::Tensor3;
use crate::tsvd::{fourier_singulars, spectral_penalty_from_sigma, SigmaMat};

/// Tolerance absorbing floating-point noise in the acceptance test; the
/// descent guarantee is exact in real arithmetic.
const MSC_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Initial inverse step size.
    pub eta0: f64,
    /// Backtracking multiplier, `> 1`.
    pub kappa: f64,
    /// Sufficient-decrease weight in the search criterion, in `(0, 1)`.
    pub alpha: f64,
    /// Stop when `‖b_{k+1} - b_k‖_F` falls below this.
    pub eps_tol: f64,
    pub max_iter: usize,
    pub max_backtrack: usize,
    /// Clamps applied to the Barzilai-Borwein estimate.
    pub eta_min: f64,
    pub eta_max: f64,
    /// Opt into parallel risk/gradient reductions (needs the `parallel`
    /// feature); relaxes bitwise reproducibility by about `1e-12·n`.
    pub parallel_gradient: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eta0: 1.0,
            kappa: 2.0,
            alpha: 1e-4,
            eps_tol: 1e-6,
            max_iter: 500,
            max_backtrack: 60,
            eta_min: 1e-8,
            eta_max: 1e12,
            parallel_gradient: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 > 0.0)
            || !(self.kappa > 1.0)
            || !(self.alpha > 0.0 && self.alpha < 1.0)
            || !(self.eps_tol > 0.0)
            || !(self.eta_min > 0.0 && self.eta_min < self.eta_max)
        {
            return Err(Error::BadParameter(format!("invalid solver config {self:?}")));
        }
        Ok(())
    }
}

/// One row of the per-iteration trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub iter: usize,
    pub objective: f64,
    pub eta: f64,
    pub increment_norm: f64,
    pub backtracks: usize,
}

/// Solver output: the estimate, the full trace (row 0 is the initial state),
/// and how the run ended.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub b_hat: Tensor3,
    pub trace: Vec<TraceRecord>,
    pub iterations: usize,
    pub converged: bool,
}

/// Reweighting rule: `w_ij ∈ ∂ρ_λ(σ_ij)`, evaluated at the current singular
/// values. Columns come out nondecreasing because `ρ'_λ` is nonincreasing.
pub fn weights_from_singulars(sigma: &SigmaMat, p: &PenaltySpec) -> Result<SigmaMat> {
    if let Some(&bad) = sigma.data().iter().find(|&&s| s < 0.0) {
        return Err(Error::NegativeSingularValue(bad));
    }
    let mut w = SigmaMat::zeros(sigma.rows(), sigma.cols());
    for i in 0..sigma.rows() {
        for j in 0..sigma.cols() {
            w.set(i, j, p.dvalue(sigma.get(i, j))?);
        }
    }
    Ok(w)
}

/// Weighted tensor singular value thresholding: shrink every Fourier-domain
/// singular value of `g` to `max(σ_ij - w_ij · inv_eta, 0)` and recompose.
///
/// For weights with nondecreasing columns this is the exact minimizer of
/// `inv_eta · ‖b‖_{w,*} + ½‖b - g‖²_F`.
pub fn weighted_tsvt(g: &Tensor3, w: &SigmaMat, inv_eta: f64) -> Result<Tensor3> {
    Ok(weighted_tsvt_with_sigma(g, w, inv_eta)?.0)
}

/// Same as [`weighted_tsvt`], also returning the shrunk singular values,
/// which are exactly the singular values of the output tensor.
pub fn weighted_tsvt_with_sigma(
    g: &Tensor3,
    w: &SigmaMat,
    inv_eta: f64,
) -> Result<(Tensor3, SigmaMat)> {
    use crate::cmat::{jacobi_svd, CMat};
    use crate::tensor::{dft3, idft3_symmetric, FourierSlices};

    let (d1, d2, d3) = g.dims();
    let m = d1.min(d2);
    if w.rows() != m || w.cols() != d3 {
        return Err(Error::DimMismatch(format!(
            "weights {}x{} for tensor {:?}",
            w.rows(),
            w.cols(),
            g.dims()
        )));
    }
    if !(inv_eta > 0.0) || !inv_eta.is_finite() {
        return Err(Error::BadParameter(format!("inv_eta must be positive, got {inv_eta}")));
    }
    for j in 0..w.cols() {
        if let Some(&bad) = (0..w.rows()).map(|i| &w.data()[i * w.cols() + j]).find(|&&v| v < 0.0)
        {
            return Err(Error::NegativeWeight(bad));
        }
        for i in 0..w.rows().saturating_sub(1) {
            if w.get(i, j) - w.get(i + 1, j) > 1e-12 {
                return Err(Error::WeightOrderViolation { column: j, row: i });
            }
        }
    }

    let f = dft3(g);
    let half = d3 / 2;
    let factored: Vec<(CMat, Vec<f64>)> = crate::tsvd::map_unique(&f, |k, slice| {
        let svd = jacobi_svd(slice).map_err(|_| Error::SvdFailure { slice: k })?;
        let shrunk: Vec<f64> = svd
            .sigma
            .iter()
            .enumerate()
            .map(|(i, &s)| (s - w.get(i, k) * inv_eta).max(0.0))
            .collect();
        Ok((CMat::mul_diag_adjoint(&svd.u, &shrunk, &svd.v), shrunk))
    })?;

    let mut sigma = SigmaMat::zeros(m, d3);
    let mut slices = Vec::with_capacity(d3);
    for (k, (slice, shrunk)) in factored.iter().enumerate() {
        for (i, &s) in shrunk.iter().enumerate() {
            sigma.set(i, k, s);
        }
        slices.push(slice.clone());
    }
    for k in half + 1..d3 {
        let src = d3 - k;
        slices.push(slices[src].conj());
        for i in 0..m {
            let v = sigma.get(i, src);
            sigma.set(i, k, v);
        }
    }
    let b = idft3_symmetric(&FourierSlices::new(slices))?;
    Ok((b, sigma))
}

/// Barzilai-Borwein inverse-step estimate
/// `⟨Δb, Δg⟩ / ⟨Δb, Δb⟩`, clamped to `[eta_min, eta_max]`; falls back to
/// `fallback` (the previously accepted `η`, or `eta0` early on) whenever the
/// ratio is degenerate or nonpositive.
pub fn bb_init(
    b_k: &Tensor3,
    b_prev: &Tensor3,
    g_k: &Tensor3,
    g_prev: &Tensor3,
    fallback: f64,
    cfg: &SolverConfig,
) -> f64 {
    let db = b_k.sub(b_prev);
    let dg = g_k.sub(g_prev);
    let denom = match db.inner(&db) {
        Ok(v) => v,
        Err(_) => return fallback,
    };
    let numer = match db.inner(&dg) {
        Ok(v) => v,
        Err(_) => return fallback,
    };
    if denom <= 0.0 {
        return fallback;
    }
    let ratio = numer / denom;
    if !ratio.is_finite() || ratio <= 0.0 {
        return fallback;
    }
    ratio.clamp(cfg.eta_min, cfg.eta_max)
}

/// Objective `F(b) = L_n(b) + ρ_λ(b)`.
pub fn objective(
    b: &Tensor3,
    loss: &LossSpec,
    data: &Dataset,
    p: &PenaltySpec,
) -> Result<f64> {
    let sigma = fourier_singulars(b)?;
    Ok(risk(loss, b, data)? + spectral_penalty_from_sigma(&sigma, p))
}

/// Outcome of one proximal step.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub b_next: Tensor3,
    pub sigma_next: SigmaMat,
    pub objective_next: f64,
    pub eta: f64,
    pub backtracks: usize,
    pub increment: f64,
    /// False when the search criterion never held within `max_backtrack`
    /// inflations; the candidate is then the best one seen.
    pub accepted: bool,
}

/// One reweighted proximal step from `b_k`, backtracking on `η` until the
/// monotone search criterion holds. Weights are computed from `sigma_k` once
/// and held fixed through the inner loop.
pub fn step(
    b_k: &Tensor3,
    sigma_k: &SigmaMat,
    eta_init: f64,
    loss: &LossSpec,
    data: &Dataset,
    p: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    let sigma_pen = spectral_penalty_from_sigma(sigma_k, p);
    let (risk_k, g_k) = eval_risk_and_gradient(loss, b_k, data, cfg)?;
    step_inner(b_k, sigma_k, risk_k + sigma_pen, &g_k, eta_init, loss, data, p, cfg)
}

#[allow(clippy::too_many_arguments)]
fn step_inner(
    b_k: &Tensor3,
    sigma_k: &SigmaMat,
    f_k: f64,
    g_k: &Tensor3,
    eta_init: f64,
    loss: &LossSpec,
    data: &Dataset,
    p: &PenaltySpec,
    cfg: &SolverConfig,
) -> Result<StepOutcome> {
    let w = weights_from_singulars(sigma_k, p)?;
    let mut eta = eta_init.max(cfg.eta_min);
    let mut best: Option<StepOutcome> = None;
    for bt in 0..=cfg.max_backtrack {
        let mut target = b_k.clone();
        target.add_scaled(-1.0 / eta, g_k);
        let (b_next, sigma_next) = weighted_tsvt_with_sigma(&target, &w, 1.0 / eta)?;
        let risk_next = eval_risk(loss, &b_next, data, cfg)?;
        let f_next = risk_next + spectral_penalty_from_sigma(&sigma_next, p);
        let increment = b_next.sub(b_k).fro_norm();
        let quad = 0.5 * cfg.alpha * eta * increment * increment;
        let outcome = StepOutcome {
            b_next,
            sigma_next,
            objective_next: f_next,
            eta,
            backtracks: bt,
            increment,
            accepted: false,
        };
        if f_next.is_finite() && f_next + quad <= f_k + MSC_SLACK * (1.0 + f_k.abs()) {
            return Ok(StepOutcome {
                accepted: true,
                ..outcome
            });
        }
        if best
            .as_ref()
            .map_or(true, |b| f_next < b.objective_next)
        {
            best = Some(outcome);
        }
        eta *= cfg.kappa;
    }
    Ok(best.expect("at least one backtracking candidate"))
}

fn eval_risk(loss: &LossSpec, b: &Tensor3, data: &Dataset, cfg: &SolverConfig) -> Result<f64> {
    #[cfg(feature = "parallel")]
    if cfg.parallel_gradient {
        return crate::loss::risk_par(loss, b, data);
    }
    let _ = cfg;
    risk(loss, b, data)
}

fn eval_gradient(loss: &LossSpec, b: &Tensor3, data: &Dataset, cfg: &SolverConfig) -> Result<Tensor3> {
    #[cfg(feature = "parallel")]
    if cfg.parallel_gradient {
        return crate::loss::gradient_par(loss, b, data);
    }
    let _ = cfg;
    crate::loss::gradient(loss, b, data)
}

fn eval_risk_and_gradient(
    loss: &LossSpec,
    b: &Tensor3,
    data: &Dataset,
    cfg: &SolverConfig,
) -> Result<(f64, Tensor3)> {
    #[cfg(feature = "parallel")]
    if cfg.parallel_gradient {
        return Ok((
            crate::loss::risk_par(loss, b, data)?,
            crate::loss::gradient_par(loss, b, data)?,
        ));
    }
    let _ = cfg;
    risk_and_gradient(loss, b, data)
}

/// Run the solver from `b_init`.
///
/// Weights are refreshed from the singular values of each accepted iterate
/// (reusing the factorization already produced by the thresholding step);
/// `η` is re-initialized by the Barzilai-Borwein rule each outer iteration.
/// Numerical degeneracy (a stalled line search or a failed slice
/// factorization) terminates with `converged = false` instead of panicking.
pub fn fit(
    data: &Dataset,
    loss: &LossSpec,
    p: &PenaltySpec,
    cfg: &SolverConfig,
    b_init: &Tensor3,
) -> Result<FitResult> {
    cfg.validate()?;
    let mut b_k = b_init.clone();
    let mut sigma_k = fourier_singulars(&b_k)?;
    let (risk_k, mut g_k) = eval_risk_and_gradient(loss, &b_k, data, cfg)?;
    let mut f_k = risk_k + spectral_penalty_from_sigma(&sigma_k, p);
    let mut trace = vec![TraceRecord {
        iter: 0,
        objective: f_k,
        eta: cfg.eta0,
        increment_norm: 0.0,
        backtracks: 0,
    }];
    let mut prev_eta = cfg.eta0;
    let mut prev_state: Option<(Tensor3, Tensor3)> = None;
    let mut converged = false;
    let mut iterations = 0;

    for k in 1..=cfg.max_iter {
        let eta_init = match &prev_state {
            Some((b_prev, g_prev)) => bb_init(&b_k, b_prev, &g_k, g_prev, prev_eta, cfg),
            None => prev_eta,
        };
        let out = match step_inner(&b_k, &sigma_k, f_k, &g_k, eta_init, loss, data, p, cfg) {
            Ok(out) => out,
            Err(err) => {
                debug!("iteration {k} aborted: {err}");
                break;
            }
        };
        if !out.accepted {
            debug!("iteration {k} stalled after {} backtracks", out.backtracks);
            break;
        }
        iterations = k;
        trace.push(TraceRecord {
            iter: k,
            objective: out.objective_next,
            eta: out.eta,
            increment_norm: out.increment,
            backtracks: out.backtracks,
        });
        let b_old = std::mem::replace(&mut b_k, out.b_next);
        sigma_k = out.sigma_next;
        f_k = out.objective_next;
        prev_eta = out.eta;
        if out.increment <= cfg.eps_tol {
            converged = true;
            break;
        }
        if k == cfg.max_iter {
            break;
        }
        let g_new = eval_gradient(loss, &b_k, data, cfg)?;
        prev_state = Some((b_old, std::mem::replace(&mut g_k, g_new)));
    }

    Ok(FitResult {
        b_hat: b_k,
        trace,
        iterations,
        converged,
    })
}

/// Default initial value: the (ridge-stabilized) least-squares solution for
/// regression losses, the zero tensor for classification losses.
pub fn default_init(data: &Dataset, loss: &LossSpec) -> Result<Tensor3> {
    let (d1, d2, d3) = data.dims();
    if loss.is_classification() {
        return Ok(Tensor3::zeros(d1, d2, d3));
    }
    ols_init(data)
}

/// Ordinary least squares on the vectorized predictors, falling back to a
/// `1e-6` ridge when the Gram matrix is not positive definite.
pub fn ols_init(data: &Dataset) -> Result<Tensor3> {
    let n = data.len();
    let (d1, d2, d3) = data.dims();
    let p = d1 * d2 * d3;
    let mut xm = Array2::<f64>::zeros((n, p));
    for (i, x) in data.x().iter().enumerate() {
        xm.row_mut(i).assign(&Array1::from_iter(x.data().iter().copied()));
    }
    let gram = xm.t().dot(&xm);
    let y = Array1::from_iter(data.y().iter().copied());
    let rhs = xm.t().dot(&y);
    let solution = match cholesky_solve(gram.clone(), rhs.clone()) {
        Some(sol) => sol,
        None => {
            let mut ridged = gram;
            for i in 0..p {
                ridged[(i, i)] += 1e-6;
            }
            cholesky_solve(ridged, rhs)
                .ok_or_else(|| Error::Domain("ridge-stabilized Gram still singular".into()))?
        }
    };
    Tensor3::from_vec(d1, d2, d3, solution.to_vec())
}

/// In-place Cholesky solve of `a x = b` for symmetric `a`; `None` when a
/// pivot is not strictly positive.
fn cholesky_solve(mut a: Array2<f64>, mut b: Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    for j in 0..n {
        let mut diag = a[(j, j)];
        for k in 0..j {
            diag -= a[(j, k)] * a[(j, k)];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return None;
        }
        let diag = diag.sqrt();
        a[(j, j)] = diag;
        for i in j + 1..n {
            let mut v = a[(i, j)];
            for k in 0..j {
                v -= a[(i, k)] * a[(j, k)];
            }
            a[(i, j)] = v / diag;
        }
    }
    // Forward substitution L z = b.
    for i in 0..n {
        let mut v = b[i];
        for k in 0..i {
            v -= a[(i, k)] * b[k];
        }
        b[i] = v / a[(i, i)];
    }
    // Back substitution Lᵀ x = z.
    for i in (0..n).rev() {
        let mut v = b[i];
        for k in i + 1..n {
            v -= a[(k, i)] * b[k];
        }
        b[i] = v / a[(i, i)];
    }
    Some(b)
}
