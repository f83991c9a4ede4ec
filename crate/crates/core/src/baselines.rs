//! Reference estimators the cross-validated combination is compared
//! against: experimental data alone, observational regression alone,
//! naive pooling, and a two-sample-test gate that pools only when the
//! sources look mean-compatible.

use crate::data::{CausalDataset, DesignMatrix, SourceTag};
use crate::erm;
use crate::error::{Error, Result};
use crate::estimators::{self, ExpEstimatorConfig};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineKind {
    ExpOnly,
    ObsOnly,
    PoolAll,
    TTestPool,
}

impl BaselineKind {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineKind::ExpOnly => "exp_only",
            BaselineKind::ObsOnly => "obs_only",
            BaselineKind::PoolAll => "pool_all",
            BaselineKind::TTestPool => "ttest_pool",
        }
    }
}

/// Per-kind diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BaselineDetail {
    None,
    TTest {
        t: f64,
        df: f64,
        p_value: f64,
        pooled: bool,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub kind: BaselineKind,
    pub beta: f64,
    /// The weight this baseline corresponds to on the exp/obs combination
    /// scale, when one exists (0 = experimental only, 1 = observational
    /// only).
    pub lambda_equivalent: Option<f64>,
    pub detail: BaselineDetail,
}

/// Experimental data alone: the configured experimental estimator on all
/// units. Equivalent to weight 0.
pub fn exp_only(exp: &CausalDataset, config: &ExpEstimatorConfig, seed: u64) -> Result<BaselineResult> {
    let est = config.estimate(exp, None, seed)?;
    Ok(BaselineResult {
        kind: BaselineKind::ExpOnly,
        beta: est.tau_hat,
        lambda_equivalent: Some(0.0),
        detail: BaselineDetail::None,
    })
}

/// The observational source, completed with the experimental arm it lacks
/// (if any). A two-arm observational source is returned unchanged; a
/// single-arm source borrows the missing arm's rows from the experimental
/// data so a treatment coefficient is identified.
pub fn effective_obs(exp: Option<&CausalDataset>, obs: &CausalDataset) -> Result<CausalDataset> {
    if obs.has_both_arms() {
        return Ok(obs.clone());
    }
    if obs.n() == 0 {
        return Err(Error::TooFewUnits {
            needed: 1,
            actual: 0,
        });
    }
    let missing = obs.arm_count(true) == 0;
    let exp = exp.ok_or(Error::EmptyArm {
        treated: missing,
        context: "observational regression",
        fold: None,
    })?;
    let fill_idx = exp.arm_indices(missing);
    if fill_idx.is_empty() {
        return Err(Error::EmptyArm {
            treated: missing,
            context: "observational regression",
            fold: None,
        });
    }
    let fill = exp.subset(&fill_idx, SourceTag::Observational);
    fill.concat(obs, SourceTag::Observational)
}

/// Observational regression alone: ordinary least squares treatment
/// coefficient on the (completed) observational design. Equivalent to
/// weight 1.
pub fn obs_only(exp: Option<&CausalDataset>, obs: &CausalDataset) -> Result<BaselineResult> {
    let data = effective_obs(exp, obs)?;
    let x = DesignMatrix::from_dataset(&data, true);
    let params = estimators::fit_ols(&x, data.y())?;
    Ok(BaselineResult {
        kind: BaselineKind::ObsOnly,
        beta: params.beta(),
        lambda_equivalent: Some(1.0),
        detail: BaselineDetail::None,
    })
}

/// Pool every row of both sources and regress.
pub fn pool_all(exp: &CausalDataset, obs: &CausalDataset) -> Result<BaselineResult> {
    let data = exp.concat(obs, SourceTag::Observational)?;
    let x = DesignMatrix::from_dataset(&data, true);
    let params = estimators::fit_ols(&x, data.y())?;
    Ok(BaselineResult {
        kind: BaselineKind::PoolAll,
        beta: params.beta(),
        lambda_equivalent: None,
        detail: BaselineDetail::None,
    })
}

/// Gatekept pooling of two outcome samples (callers pass the arm being
/// combined, e.g. both sources' control outcomes): run a Welch two-sample
/// test of equal means at level `alpha`; if the test rejects, combine the
/// means with weight `n_obs / (n_exp + n_obs)`, otherwise keep the
/// experimental mean (weight 0).
///
/// The "reject -> pool" direction follows the source procedure literally;
/// the test plays the role of a compatibility screen whose failure mode
/// is discussed where this baseline is compared against cross-validation.
pub fn ttest_then_pool(exp_y: &[f64], obs_y: &[f64], alpha: f64) -> Result<BaselineResult> {
    if !alpha.is_finite() || !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidConfig {
            reason: alloc::format!("alpha must lie in [0,1], got {alpha}"),
        });
    }
    let test = stats::welch_test(exp_y, obs_y)?;
    let pooled = test.p_value <= alpha && alpha > 0.0;
    let lambda = if pooled {
        obs_y.len() as f64 / (exp_y.len() + obs_y.len()) as f64
    } else {
        0.0
    };
    let fit = erm::fit_no_covariate(lambda, stats::mean(exp_y), stats::mean(obs_y))?;
    Ok(BaselineResult {
        kind: BaselineKind::TTestPool,
        beta: fit.beta,
        lambda_equivalent: Some(lambda),
        detail: BaselineDetail::TTest {
            t: test.t,
            df: test.df,
            p_value: test.p_value,
            pooled,
        },
    })
}
