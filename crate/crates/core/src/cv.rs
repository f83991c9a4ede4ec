//! Cross-validated selection of the source-weighting parameter.
//!
//! Only experimental data is split into folds; the observational source is
//! reused whole in every fold ("held-in" below means all experimental
//! units outside fold k plus the entire observational source). For each
//! grid value `lambda`, the CV objective averages, over folds, the squared
//! distance between the causal coordinate of the held-in fit and the
//! fold's own experimental estimate. The selected `lambda` minimizes that
//! objective (ties go to the smallest value) and the final fit reruns the
//! weighted minimization on all data.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::CausalDataset;
use crate::erm::{self, ObsGram, ObsLossSpec, WeightedFit};
use crate::error::{Error, Result};
use crate::estimators::ExpEstimatorConfig;
use crate::seed::{derive, TAG_CV_IN, TAG_CV_OUT, TAG_FULL_FIT};
use crate::stats;

/// Number of folds, either explicit or one per experimental unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldCount {
    K(usize),
    LeaveOneOut,
}

/// A fold assignment for every experimental unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<u32>,
    stratified: bool,
    seed: u64,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[u32] {
        &self.assignments
    }

    pub fn is_stratified(&self) -> bool {
        self.stratified
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Units in fold `k`, ascending.
    pub fn fold_indices(&self, k: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize == k)
            .map(|(i, _)| i)
            .collect()
    }

    /// Units outside fold `k`, ascending.
    pub fn held_in_indices(&self, k: usize) -> Vec<usize> {
        self.assignments
            .iter()
            .enumerate()
            .filter(|(_, &a)| a as usize != k)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Assign every experimental unit to one of `folds` folds. Stratified
/// plans shuffle within each treatment arm and deal round-robin, so fold
/// sizes within an arm differ by at most one; unstratified plans do the
/// same over all units at once. Deterministic given `seed`.
pub fn make_folds(
    data: &CausalDataset,
    folds: FoldCount,
    stratified: bool,
    seed: u64,
) -> Result<FoldPlan> {
    let n = data.n();
    let k = match folds {
        FoldCount::K(k) => k,
        FoldCount::LeaveOneOut => n,
    };
    if k < 2 {
        return Err(Error::InvalidConfig {
            reason: alloc::format!("fold count must be at least 2, got {k}"),
        });
    }
    if n < k {
        return Err(Error::TooFewUnits {
            needed: k,
            actual: n,
        });
    }
    let mut assignments = vec![0u32; n];
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    if stratified {
        for treated in [true, false] {
            let count = data.arm_count(treated);
            if count == 0 {
                continue;
            }
            if count < k {
                return Err(Error::TooFewPerArm {
                    treated,
                    needed: k,
                    actual: count,
                });
            }
            let mut idx = data.arm_indices(treated);
            idx.shuffle(&mut rng);
            for (pos, &unit) in idx.iter().enumerate() {
                assignments[unit] = (pos % k) as u32;
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        for (pos, &unit) in idx.iter().enumerate() {
            assignments[unit] = (pos % k) as u32;
        }
    }
    Ok(FoldPlan {
        k,
        assignments,
        stratified,
        seed,
    })
}

/// `size` linearly spaced values covering [0,1] inclusive; `size == 1`
/// degenerates to `[0.0]`.
pub fn default_grid(size: usize) -> Result<Vec<f64>> {
    if size == 0 {
        return Err(Error::InvalidGrid {
            reason: "grid size must be at least 1",
        });
    }
    if size == 1 {
        return Ok(vec![0.0]);
    }
    Ok((0..size).map(|i| i as f64 / (size - 1) as f64).collect())
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid {
            reason: "grid must be nonempty",
        });
    }
    for pair in grid.windows(2) {
        if !(pair[0] < pair[1]) {
            return Err(Error::InvalidGrid {
                reason: "grid must be strictly increasing",
            });
        }
    }
    if !(grid[0] >= 0.0) || !(grid[grid.len() - 1] <= 1.0) {
        return Err(Error::InvalidGrid {
            reason: "grid values must lie in [0,1]",
        });
    }
    Ok(())
}

/// What the cross-validated fit combines.
#[derive(Debug, Clone)]
pub enum CvConfig {
    /// Linear model over `[w | z | 1]`: per-fold experimental estimates
    /// come from `estimator`; the observational side enters through
    /// `loss` on the full observational design.
    Linear {
        estimator: ExpEstimatorConfig,
        loss: ObsLossSpec,
    },
    /// Single-arm mean matching: combine the experimental mean of one arm
    /// with the observational mean of the same arm.
    ArmMean { treated: bool },
}

enum ObsSide<'a> {
    Gram { gram: ObsGram, loss: &'a ObsLossSpec },
    /// Custom losses have no closed form; refit by Newton per evaluation.
    Generic {
        obs: &'a CausalDataset,
        loss: &'a ObsLossSpec,
    },
    Mean(f64),
}

/// Everything `cv_objective` needs that does not depend on `lambda`:
/// per-fold experimental estimates and the observational summary. Building
/// it once lets a grid of `lambda` values share all fold work.
struct CvContext<'a> {
    tau_in: Vec<f64>,
    tau_out: Vec<f64>,
    obs_side: ObsSide<'a>,
}

impl<'a> CvContext<'a> {
    fn new(
        exp: &CausalDataset,
        obs: &'a CausalDataset,
        plan: &FoldPlan,
        config: &'a CvConfig,
        seed: u64,
    ) -> Result<Self> {
        if plan.assignments.len() != exp.n() {
            return Err(Error::LengthMismatch {
                field: "fold assignments",
                expected: exp.n(),
                actual: plan.assignments.len(),
            });
        }
        let k = plan.k;
        let mut tau_in = Vec::with_capacity(k);
        let mut tau_out = Vec::with_capacity(k);
        match config {
            CvConfig::Linear { estimator, loss } => {
                loss.validate()?;
                for fold in 0..k {
                    let held_in = plan.held_in_indices(fold);
                    let held_out = plan.fold_indices(fold);
                    let fit_seed = derive(seed, &[TAG_CV_IN, fold as u64]);
                    let eval_seed = derive(seed, &[TAG_CV_OUT, fold as u64]);
                    let ein = estimator
                        .estimate(exp, Some(&held_in), fit_seed)
                        .map_err(|e| e.with_fold(fold))?;
                    let eout = estimator
                        .estimate(exp, Some(&held_out), eval_seed)
                        .map_err(|e| e.with_fold(fold))?;
                    tau_in.push(ein.tau_hat);
                    tau_out.push(eout.tau_hat);
                }
                let obs_side = match loss {
                    ObsLossSpec::Custom(_) => ObsSide::Generic { obs, loss },
                    _ => ObsSide::Gram {
                        gram: ObsGram::from_dataset(obs)?,
                        loss,
                    },
                };
                Ok(CvContext {
                    tau_in,
                    tau_out,
                    obs_side,
                })
            }
            CvConfig::ArmMean { treated } => {
                let want = *treated as u8;
                for fold in 0..k {
                    let mut in_sum = 0.0;
                    let mut in_n = 0usize;
                    let mut out_sum = 0.0;
                    let mut out_n = 0usize;
                    for (i, &a) in plan.assignments.iter().enumerate() {
                        if exp.w()[i] != want {
                            continue;
                        }
                        if a as usize == fold {
                            out_sum += exp.y()[i];
                            out_n += 1;
                        } else {
                            in_sum += exp.y()[i];
                            in_n += 1;
                        }
                    }
                    if in_n == 0 || out_n == 0 {
                        return Err(Error::EmptyArm {
                            treated: *treated,
                            context: "cross-validation fold arm mean",
                            fold: Some(fold),
                        });
                    }
                    tau_in.push(in_sum / in_n as f64);
                    tau_out.push(out_sum / out_n as f64);
                }
                let ys = obs.arm_outcomes(*treated);
                if ys.is_empty() {
                    return Err(Error::EmptyArm {
                        treated: *treated,
                        context: "observational arm mean",
                        fold: None,
                    });
                }
                Ok(CvContext {
                    tau_in,
                    tau_out,
                    obs_side: ObsSide::Mean(stats::mean(&ys)),
                })
            }
        }
    }

    fn fit_at(&self, lambda: f64, tau_hat_exp: f64) -> Result<WeightedFit> {
        match &self.obs_side {
            ObsSide::Gram { gram, loss } => erm::fit_linear_gram(lambda, tau_hat_exp, gram, loss),
            ObsSide::Generic { obs, loss } => erm::fit_generic(lambda, tau_hat_exp, obs, loss),
            ObsSide::Mean(m) => erm::fit_no_covariate(lambda, tau_hat_exp, *m),
        }
    }

    fn value(&self, lambda: f64) -> Result<f64> {
        let mut acc = 0.0;
        for (tin, tout) in self.tau_in.iter().zip(&self.tau_out) {
            let fit = self.fit_at(lambda, *tin)?;
            let d = fit.beta - tout;
            acc += d * d;
        }
        Ok(acc / self.tau_in.len() as f64)
    }

    /// Experimental estimate on all units, for the final refit.
    fn full_tau(&self, exp: &CausalDataset, config: &CvConfig, seed: u64) -> Result<f64> {
        match config {
            CvConfig::Linear { estimator, .. } => {
                let est = estimator.estimate(exp, None, derive(seed, &[TAG_FULL_FIT]))?;
                Ok(est.tau_hat)
            }
            CvConfig::ArmMean { treated } => {
                let ys = exp.arm_outcomes(*treated);
                if ys.is_empty() {
                    return Err(Error::EmptyArm {
                        treated: *treated,
                        context: "experimental arm mean",
                        fold: None,
                    });
                }
                Ok(stats::mean(&ys))
            }
        }
    }
}

/// The CV objective at a single `lambda`: for each fold, fit on all other
/// experimental units plus the whole observational source, then square the
/// gap to the fold's own experimental estimate, and average over folds.
pub fn cv_objective(
    lambda: f64,
    exp: &CausalDataset,
    obs: &CausalDataset,
    plan: &FoldPlan,
    config: &CvConfig,
    seed: u64,
) -> Result<f64> {
    let ctx = CvContext::new(exp, obs, plan, config, seed)?;
    ctx.value(lambda)
}

/// The selected weight and everything produced along the way.
#[derive(Debug, Clone)]
pub struct CvResult {
    pub grid: Vec<f64>,
    pub cv_values: Vec<f64>,
    pub lambda_hat: f64,
    pub final_fit: WeightedFit,
    pub plan: FoldPlan,
}

/// Evaluate the CV objective over `grid`, pick the minimizer (ties go to
/// the smallest `lambda`), and refit on all data at the winner.
pub fn select_lambda(
    exp: &CausalDataset,
    obs: &CausalDataset,
    plan: &FoldPlan,
    grid: &[f64],
    config: &CvConfig,
    seed: u64,
) -> Result<CvResult> {
    check_grid(grid)?;
    let ctx = CvContext::new(exp, obs, plan, config, seed)?;
    let mut cv_values = Vec::with_capacity(grid.len());
    for &l in grid {
        let v = ctx.value(l)?;
        if !v.is_finite() {
            return Err(Error::NonFiniteValue {
                field: "cv",
                row: cv_values.len(),
            });
        }
        cv_values.push(v);
    }
    let mut best = 0usize;
    for (i, v) in cv_values.iter().enumerate() {
        if *v < cv_values[best] {
            best = i;
        }
    }
    let lambda_hat = grid[best];
    let tau_full = ctx.full_tau(exp, config, seed)?;
    let final_fit = ctx.fit_at(lambda_hat, tau_full)?;
    Ok(CvResult {
        grid: grid.to_vec(),
        cv_values,
        lambda_hat,
        final_fit,
        plan: plan.clone(),
    })
}

/// End-to-end: build a stratified fold plan, select `lambda`, refit.
/// Deterministic given `seed`.
pub fn cvci_estimate(
    exp: &CausalDataset,
    obs: &CausalDataset,
    folds: FoldCount,
    grid: &[f64],
    config: &CvConfig,
    seed: u64,
) -> Result<CvResult> {
    let plan = make_folds(exp, folds, true, derive(seed, &[crate::seed::TAG_FOLDS]))?;
    select_lambda(exp, obs, &plan, grid, config, seed)
}
