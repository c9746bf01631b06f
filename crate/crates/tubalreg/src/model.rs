//! Estimator facade: cross-validation over tuning grids and evaluation.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::loss::{predict, prediction_error, risk, Dataset, LossSpec};
use crate::penalty::{PenaltyKind, PenaltySpec};
use crate::rng;
use crate::solver::{default_init, fit, FitResult, SolverConfig};
use crate::tensor::Tensor3;
use crate::tsvd::{tubal_rank, ttnn};

/// Everything needed to tune and fit one estimator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimatorSpec {
    /// Loss being fit. For Huber and the correntropy loss this also fixes
    /// the *reference* robustification parameter used to score validation
    /// folds, so scores stay comparable across a robustification grid.
    pub loss: LossSpec,
    pub penalty_kind: PenaltyKind,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub lambda_grid: Vec<f64>,
    /// Optional grid over the loss robustification parameter (υ or σ),
    /// tuned jointly with λ.
    #[serde(default)]
    pub robustification_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_gamma() -> f64 {
    2.0
}

fn default_folds() -> usize {
    5
}

impl EstimatorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.lambda_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.lambda_grid.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(Error::BadParameter("lambda grid values must be positive".into()));
        }
        if let Some(grid) = &self.robustification_grid {
            if grid.is_empty() {
                return Err(Error::EmptyGrid);
            }
            if self.loss.robustification().is_none() {
                return Err(Error::BadParameter(format!(
                    "loss {} takes no robustification grid",
                    self.loss
                )));
            }
            if grid.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::BadParameter(
                    "robustification grid values must be positive".into(),
                ));
            }
        }
        if self.folds < 2 {
            return Err(Error::BadParameter(format!(
                "cross-validation needs at least 2 folds, got {}",
                self.folds
            )));
        }
        self.solver.validate()?;
        PenaltySpec::new(self.penalty_kind, self.lambda_grid[0], self.gamma)?;
        Ok(())
    }

    fn penalty(&self, lambda: f64) -> Result<PenaltySpec> {
        PenaltySpec::new(self.penalty_kind, lambda, self.gamma)
    }

    fn loss_at(&self, rob: Option<f64>) -> Result<LossSpec> {
        match rob {
            Some(v) => self.loss.with_robustification(v),
            None => Ok(self.loss),
        }
    }
}

/// One row of the cross-validation table: one `(grid point, fold)` score.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRecord {
    pub lambda: f64,
    pub robustification: Option<f64>,
    pub fold: usize,
    pub criterion: f64,
    pub mean_criterion: f64,
    pub selected: bool,
}

/// Selected tuning parameters plus the full fold-by-grid table.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub lambda: f64,
    pub robustification: Option<f64>,
    pub table: Vec<CvRecord>,
}

/// Deterministic fold assignment: a seeded shuffle chopped into `folds`
/// nearly equal validation blocks.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(seed, "cv/folds", 0);
    use rand::seq::SliceRandom;
    order.shuffle(&mut rng);
    let base = n / folds;
    let extra = n % folds;
    let mut out = Vec::with_capacity(folds);
    let mut at = 0;
    for f in 0..folds {
        let take = base + usize::from(f < extra);
        out.push(order[at..at + take].to_vec());
        at += take;
    }
    out
}

/// Mean validation criterion for one fitted model: the estimator's reference
/// loss for regression (robust fits are validated robustly, at a fixed
/// parameter so scores are comparable across the grid), the same loss for
/// classification.
fn validation_criterion(spec: &EstimatorSpec, b: &Tensor3, val: &Dataset) -> Result<f64> {
    risk(&spec.loss, b, val)
}

/// 5-fold (by default) cross-validation over the product grid
/// `lambda_grid × robustification_grid`.
///
/// Ties in the mean criterion break toward larger λ, then toward the smaller
/// robustification value. Fold × grid refits run in parallel under the
/// `parallel` feature; the table and selection are independent of schedule.
pub fn cross_validate(data: &Dataset, spec: &EstimatorSpec) -> Result<CvOutcome> {
    spec.validate()?;
    let n = data.len();
    if spec.folds > n {
        return Err(Error::FoldTooSmall {
            folds: spec.folds,
            n,
        });
    }

    let rob_grid: Vec<Option<f64>> = match &spec.robustification_grid {
        Some(g) => g.iter().map(|&v| Some(v)).collect(),
        None => vec![None],
    };
    let grid: Vec<(f64, Option<f64>)> = spec
        .lambda_grid
        .iter()
        .flat_map(|&l| rob_grid.iter().map(move |&r| (l, r)))
        .collect();

    let fold_val = kfold_indices(n, spec.folds, spec.seed);
    let mut splits = Vec::with_capacity(spec.folds);
    for val_idx in &fold_val {
        let train_idx: Vec<usize> = {
            let mut in_val = vec![false; n];
            for &i in val_idx {
                in_val[i] = true;
            }
            (0..n).filter(|&i| !in_val[i]).collect()
        };
        let train = data.subset(&train_idx)?;
        let val = data.subset(val_idx)?;
        let init = default_init(&train, &spec.loss)?;
        splits.push((train, val, init));
    }

    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..spec.folds).map(move |f| (g, f)))
        .collect();
    let run_task = |&(g, f): &(usize, usize)| -> Result<f64> {
        let (lambda, rob) = grid[g];
        let (train, val, init) = &splits[f];
        let loss = spec.loss_at(rob)?;
        let penalty = spec.penalty(lambda)?;
        let fitres = fit(train, &loss, &penalty, &spec.solver, init)?;
        validation_criterion(spec, &fitres.b_hat, val)
    };
    #[cfg(feature = "parallel")]
    let scores: Vec<f64> = tasks.par_iter().map(run_task).collect::<Result<_>>()?;
    #[cfg(not(feature = "parallel"))]
    let scores: Vec<f64> = tasks.iter().map(run_task).collect::<Result<_>>()?;

    let mut means = vec![0.0f64; grid.len()];
    for (t, &(g, _)) in tasks.iter().enumerate() {
        means[g] += scores[t] / spec.folds as f64;
    }

    let mut best = 0usize;
    for g in 1..grid.len() {
        let better = means[g] < means[best]
            || (means[g] == means[best]
                && (grid[g].0 > grid[best].0
                    || (grid[g].0 == grid[best].0 && grid[g].1 < grid[best].1)));
        if better {
            best = g;
        }
    }

    let mut table = Vec::with_capacity(tasks.len());
    for (t, &(g, f)) in tasks.iter().enumerate() {
        table.push(CvRecord {
            lambda: grid[g].0,
            robustification: grid[g].1,
            fold: f,
            criterion: scores[t],
            mean_criterion: means[g],
            selected: g == best,
        });
    }
    Ok(CvOutcome {
        lambda: grid[best].0,
        robustification: grid[best].1,
        table,
    })
}

/// Cross-validate, then refit on the full data at the selected parameters.
pub fn fit_cv(data: &Dataset, spec: &EstimatorSpec) -> Result<(FitResult, CvOutcome)> {
    let cv = cross_validate(data, spec)?;
    let loss = spec.loss_at(cv.robustification)?;
    let penalty = spec.penalty(cv.lambda)?;
    let init = default_init(data, &spec.loss)?;
    let fitres = fit(data, &loss, &penalty, &spec.solver, &init)?;
    Ok((fitres, cv))
}

/// The evaluation quantities reported by the simulation tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// `‖b⁰ - b̂‖_F`
    pub err: f64,
    /// `ln(err)`; `-inf` when the error is exactly zero.
    pub log_err: f64,
    /// Tubal nuclear norm of the difference.
    pub nuc_err: f64,
    /// Estimated tubal rank of `b̂`.
    pub r_hat: usize,
    /// Percent of correctly classified test samples; classification only.
    pub accuracy: Option<f64>,
    /// Prediction-error functional on the test data.
    pub pe: f64,
}

/// Compute every evaluation metric against the ground truth.
pub fn evaluate(
    b_hat: &Tensor3,
    b0: &Tensor3,
    test: &Dataset,
    loss: &LossSpec,
    rank_tol: f64,
) -> Result<EvalReport> {
    if b_hat.dims() != b0.dims() {
        return Err(Error::DimMismatch(format!(
            "b_hat {:?} vs b0 {:?}",
            b_hat.dims(),
            b0.dims()
        )));
    }
    let diff = b0.sub(b_hat);
    let err = diff.fro_norm();
    let accuracy = if loss.is_classification() {
        let mut correct = 0usize;
        for (x, &y) in test.x().iter().zip(test.y()) {
            if predict(loss, b_hat, x)? == y {
                correct += 1;
            }
        }
        Some(100.0 * correct as f64 / test.len() as f64)
    } else {
        None
    };
    Ok(EvalReport {
        err,
        log_err: err.ln(),
        nuc_err: ttnn(&diff)?,
        r_hat: tubal_rank(b_hat, rank_tol)?,
        accuracy,
        pe: prediction_error(loss, b_hat, b0, test)?,
    })
}
