//! Synthetic and semi-synthetic data generation, the Monte Carlo harness,
//! bootstrap standard deviations, and parameter sweeps.
//!
//! Everything here is deterministic given its seed: per-replicate seeds
//! are derived from a master seed with a splittable path scheme, so any
//! single replicate can be replayed in isolation and results do not
//! depend on execution order or thread count.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::baselines::{self, BaselineDetail};
use crate::cv::{self, CvConfig, FoldCount};
use crate::data::{CausalDataset, DesignMatrix, ModelParams, SourceTag};
use crate::erm::ObsLossSpec;
use crate::error::{Error, Result};
use crate::estimators::ExpEstimatorConfig;
use crate::fmath;
use crate::seed::{derive, TAG_BOOT, TAG_GEN, TAG_METHOD, TAG_POOL, TAG_RUN, TAG_SWEEP};
use crate::stats;

const BOOT_MAX_RETRIES: u64 = 10;

/// Which synthetic design to draw from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Setting {
    /// Outcomes only: `y_exp ~ N(tau_star, sigma2)`,
    /// `y_obs ~ N(tau_star + epsilon, sigma2)`, every unit treated, and
    /// the estimand is the treated-arm mean.
    NoCovariate,
    /// Linear outcome model: covariates `N(0, sigma2 I)`, Bernoulli
    /// treatment per source, `y = [z,1]^T theta + w*(tau_star [+ epsilon
    /// in the observational source]) + noise`.
    Linear,
}

/// Parameters of a synthetic scenario. For the linear setting, `d` counts
/// coefficients including the intercept slot, so units carry `d - 1`
/// covariates; coefficient vectors left as `None` are drawn `N(0,1)` per
/// dataset (with a zero intercept slot).
#[derive(Debug, Clone, PartialEq)]
pub struct SimScenario {
    pub setting: Setting,
    pub tau_star: f64,
    pub epsilon: f64,
    pub sigma2: f64,
    pub n_exp: usize,
    pub n_obs: usize,
    pub d: usize,
    pub theta_exp: Option<Vec<f64>>,
    pub theta_obs: Option<Vec<f64>>,
    pub prop_exp: f64,
    pub prop_obs: f64,
}

impl SimScenario {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidConfig {
                reason: alloc::format!("sigma2 must be positive and finite, got {}", self.sigma2),
            });
        }
        if !self.tau_star.is_finite() || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig {
                reason: String::from("tau_star and epsilon must be finite"),
            });
        }
        if self.n_exp == 0 || self.n_obs == 0 {
            return Err(Error::TooFewUnits {
                needed: 1,
                actual: 0,
            });
        }
        if self.setting == Setting::Linear {
            if self.d == 0 {
                return Err(Error::InvalidConfig {
                    reason: String::from("linear setting needs d >= 1 (intercept included)"),
                });
            }
            for (name, p) in [("prop_exp", self.prop_exp), ("prop_obs", self.prop_obs)] {
                if !(p > 0.0 && p < 1.0) {
                    return Err(Error::InvalidConfig {
                        reason: alloc::format!("{name} must lie in (0,1), got {p}"),
                    });
                }
            }
            for (name, th) in [("theta_exp", &self.theta_exp), ("theta_obs", &self.theta_obs)] {
                if let Some(v) = th {
                    if v.len() != self.d {
                        return Err(Error::LengthMismatch {
                            field: if name == "theta_exp" { "theta_exp" } else { "theta_obs" },
                            expected: self.d,
                            actual: v.len(),
                        });
                    }
                    for (i, c) in v.iter().enumerate() {
                        if !c.is_finite() {
                            return Err(Error::NonFiniteValue {
                                field: if name == "theta_exp" { "theta_exp" } else { "theta_obs" },
                                row: i,
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Outcomes-only generator. Draws experimental units first, then
/// observational units, from one stream seeded by `seed`.
pub fn gen_no_covariate(sc: &SimScenario, seed: u64) -> Result<(CausalDataset, CausalDataset)> {
    sc.validate()?;
    if sc.setting != Setting::NoCovariate {
        return Err(Error::InvalidConfig {
            reason: String::from("gen_no_covariate requires the no-covariate setting"),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let sd = fmath::sqrt(sc.sigma2);
    let exp_dist = Normal::new(sc.tau_star, sd).expect("finite mean, nonnegative sd");
    let obs_dist = Normal::new(sc.tau_star + sc.epsilon, sd).expect("finite mean, nonnegative sd");
    let y_exp: Vec<f64> = (0..sc.n_exp).map(|_| exp_dist.sample(&mut rng)).collect();
    let y_obs: Vec<f64> = (0..sc.n_obs).map(|_| obs_dist.sample(&mut rng)).collect();
    let exp = CausalDataset::new(y_exp, vec![1; sc.n_exp], vec![], 0, SourceTag::Experimental)?;
    let obs = CausalDataset::new(y_obs, vec![1; sc.n_obs], vec![], 0, SourceTag::Observational)?;
    Ok((exp, obs))
}

/// Draw a coefficient vector of length `d`: standard normal weights with a
/// zero intercept slot (the last coordinate).
fn draw_theta(d: usize, rng: &mut ChaCha12Rng) -> Vec<f64> {
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut th: Vec<f64> = (0..d - 1).map(|_| std.sample(rng)).collect();
    th.push(0.0);
    th
}

/// One linear-model source: `n` units with `d - 1` covariates each,
/// treatment `Bern(prop)`, response `[z,1]^T theta + w*effect + noise`.
/// Per unit, draws covariates, then treatment, then noise.
fn gen_linear_source(
    n: usize,
    d: usize,
    theta: &[f64],
    effect: f64,
    prop: f64,
    sigma2: f64,
    tag: SourceTag,
    rng: &mut ChaCha12Rng,
) -> Result<CausalDataset> {
    let sd = fmath::sqrt(sigma2);
    let cov_dist = Normal::new(0.0, sd).expect("finite sd");
    let noise_dist = Normal::new(0.0, sd).expect("finite sd");
    let dz = d - 1;
    let mut y = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n * dz);
    for _ in 0..n {
        let mut lin = theta[dz]; // intercept slot
        for j in 0..dz {
            let v = cov_dist.sample(rng);
            lin += theta[j] * v;
            z.push(v);
        }
        let wi = rng.gen_bool(prop) as u8;
        let xi = noise_dist.sample(rng);
        y.push(lin + wi as f64 * effect + xi);
        w.push(wi);
    }
    CausalDataset::new(y, w, z, dz, tag)
}

/// Linear-setting generator. Draw order per `seed`: experimental
/// coefficients (when not supplied), observational coefficients (when not
/// supplied), experimental units, observational units.
pub fn gen_linear(sc: &SimScenario, seed: u64) -> Result<(CausalDataset, CausalDataset)> {
    sc.validate()?;
    if sc.setting != Setting::Linear {
        return Err(Error::InvalidConfig {
            reason: String::from("gen_linear requires the linear setting"),
        });
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let theta_exp = match &sc.theta_exp {
        Some(t) => t.clone(),
        None => draw_theta(sc.d, &mut rng),
    };
    let theta_obs = match &sc.theta_obs {
        Some(t) => t.clone(),
        None => draw_theta(sc.d, &mut rng),
    };
    let exp = gen_linear_source(
        sc.n_exp,
        sc.d,
        &theta_exp,
        sc.tau_star,
        sc.prop_exp,
        sc.sigma2,
        SourceTag::Experimental,
        &mut rng,
    )?;
    let obs = gen_linear_source(
        sc.n_obs,
        sc.d,
        &theta_obs,
        sc.tau_star + sc.epsilon,
        sc.prop_obs,
        sc.sigma2,
        SourceTag::Observational,
        &mut rng,
    )?;
    Ok((exp, obs))
}

/// A linear model fitted to a real dataset plus the sample mean and
/// variance of its residuals; the ingredients for semi-synthetic
/// regeneration.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedSource {
    pub params: ModelParams,
    pub resid_mean: f64,
    pub resid_var: f64,
}

/// Fit `[w | z | 1]` by ordinary least squares and summarize residuals.
pub fn fit_source(ds: &CausalDataset) -> Result<FittedSource> {
    let x = DesignMatrix::from_dataset(ds, true);
    let params = crate::estimators::fit_ols(&x, ds.y())?;
    let resid: Vec<f64> = (0..ds.n())
        .map(|i| ds.y()[i] - params.dot(x.row(i)))
        .collect();
    Ok(FittedSource {
        params,
        resid_mean: stats::mean(&resid),
        resid_var: stats::sample_var(&resid),
    })
}

/// Regenerate one source: keep the template's treatments and covariates,
/// replace responses with fitted values plus Gaussian residual noise with
/// the stored sample mean and variance.
pub fn gen_semisynthetic_source(
    fit: &FittedSource,
    template: &CausalDataset,
    tag: SourceTag,
    rng: &mut ChaCha12Rng,
) -> Result<CausalDataset> {
    let x = DesignMatrix::from_dataset(template, true);
    if fit.params.len() != x.cols() {
        return Err(Error::ColumnMismatch {
            left: fit.params.len(),
            right: x.cols(),
        });
    }
    let dist = Normal::new(fit.resid_mean, fmath::sqrt(fit.resid_var))
        .map_err(|_| Error::InvalidConfig {
            reason: String::from("residual variance must be finite and nonnegative"),
        })?;
    let y: Vec<f64> = (0..template.n())
        .map(|i| fit.params.dot(x.row(i)) + dist.sample(rng))
        .collect();
    CausalDataset::new(
        y,
        template.w().to_vec(),
        (0..template.n())
            .flat_map(|i| template.z_row(i).iter().copied())
            .collect(),
        template.n_covariates(),
        tag,
    )
}

/// Regenerate both sources (experimental first) from one stream.
pub fn gen_semisynthetic(
    exp_fit: &FittedSource,
    obs_fit: &FittedSource,
    exp_template: &CausalDataset,
    obs_template: &CausalDataset,
    seed: u64,
) -> Result<(CausalDataset, CausalDataset)> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let exp = gen_semisynthetic_source(exp_fit, exp_template, SourceTag::Experimental, &mut rng)?;
    let obs = gen_semisynthetic_source(obs_fit, obs_template, SourceTag::Observational, &mut rng)?;
    Ok((exp, obs))
}

/// What a replicate generates its data from.
#[derive(Debug, Clone)]
pub enum McScenario {
    Synthetic(SimScenario),
    /// Responses re-drawn around models fitted to real data; the estimand
    /// is the experimental fit's causal coordinate.
    SemiSynthetic {
        exp_fit: FittedSource,
        obs_fit: FittedSource,
        exp_template: CausalDataset,
        obs_template: CausalDataset,
    },
    /// Fixed observational pool generated once; each replicate draws a
    /// fresh experimental dataset and subsamples `n_obs` pool rows
    /// without replacement.
    SubsampledObs {
        base: SimScenario,
        pool: CausalDataset,
        n_obs: usize,
    },
    /// Mirror image: fixed experimental pool, fresh observational data.
    SubsampledExp {
        base: SimScenario,
        pool: CausalDataset,
        n_exp: usize,
    },
}

impl McScenario {
    pub fn tau_star(&self) -> f64 {
        match self {
            McScenario::Synthetic(sc) => sc.tau_star,
            McScenario::SemiSynthetic { exp_fit, .. } => exp_fit.params.beta(),
            McScenario::SubsampledObs { base, .. } | McScenario::SubsampledExp { base, .. } => {
                base.tau_star
            }
        }
    }

    /// Generate one replicate's pair of sources.
    pub fn generate(&self, seed: u64) -> Result<(CausalDataset, CausalDataset)> {
        match self {
            McScenario::Synthetic(sc) => match sc.setting {
                Setting::NoCovariate => gen_no_covariate(sc, seed),
                Setting::Linear => gen_linear(sc, seed),
            },
            McScenario::SemiSynthetic {
                exp_fit,
                obs_fit,
                exp_template,
                obs_template,
            } => gen_semisynthetic(exp_fit, obs_fit, exp_template, obs_template, seed),
            McScenario::SubsampledObs { base, pool, n_obs } => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let theta = base.theta_exp.as_ref().ok_or(Error::InvalidConfig {
                    reason: String::from("subsampled scenarios need fixed coefficients"),
                })?;
                let exp = gen_linear_source(
                    base.n_exp,
                    base.d,
                    theta,
                    base.tau_star,
                    base.prop_exp,
                    base.sigma2,
                    SourceTag::Experimental,
                    &mut rng,
                )?;
                let obs = subsample(pool, *n_obs, SourceTag::Observational, &mut rng)?;
                Ok((exp, obs))
            }
            McScenario::SubsampledExp { base, pool, n_exp } => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let theta = base.theta_obs.as_ref().ok_or(Error::InvalidConfig {
                    reason: String::from("subsampled scenarios need fixed coefficients"),
                })?;
                let exp = subsample(pool, *n_exp, SourceTag::Experimental, &mut rng)?;
                let obs = gen_linear_source(
                    base.n_obs,
                    base.d,
                    theta,
                    base.tau_star + base.epsilon,
                    base.prop_obs,
                    base.sigma2,
                    SourceTag::Observational,
                    &mut rng,
                )?;
                Ok((exp, obs))
            }
        }
    }
}

/// `n` distinct rows of `pool`, in ascending row order.
fn subsample(
    pool: &CausalDataset,
    n: usize,
    tag: SourceTag,
    rng: &mut ChaCha12Rng,
) -> Result<CausalDataset> {
    if n > pool.n() {
        return Err(Error::TooFewUnits {
            needed: n,
            actual: pool.n(),
        });
    }
    let mut idx = rand::seq::index::sample(rng, pool.n(), n).into_vec();
    idx.sort_unstable();
    Ok(pool.subset(&idx, tag))
}

/// How generated (or supplied) data is analyzed.
#[derive(Debug, Clone)]
pub struct AnalysisConfig {
    pub mode: Mode,
    pub estimator: ExpEstimatorConfig,
    pub loss: ObsLossSpec,
    pub folds: FoldCount,
    pub grid: Vec<f64>,
    /// Significance level for the test-then-pool baseline.
    pub alpha: f64,
}

/// The estimand/data-shape regime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Both sources carry both arms (possibly after completing the
    /// observational source from the experiment); the estimand is the
    /// treatment coefficient of the linear model.
    TwoArm,
    /// The observational source informs only the control arm; the
    /// estimand is the experimental treated mean minus a combined control
    /// mean.
    ControlArmOnly,
    /// Single-arm sources (every unit treated); the estimand is the
    /// treated-arm mean.
    TreatmentMean,
}

/// Estimation strategies the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Cvci,
    ExpOnly,
    ObsOnly,
    PoolAll,
    TTestPool,
    /// Returns the scenario's true effect; a harness-testing stub.
    TrueEffect,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Cvci => "cvci",
            Method::ExpOnly => "exp_only",
            Method::ObsOnly => "obs_only",
            Method::PoolAll => "pool_all",
            Method::TTestPool => "ttest_pool",
            Method::TrueEffect => "true_effect",
        }
    }

    /// Stable id used in seed paths, so a method's stream does not depend
    /// on its position in the requested list.
    pub fn id(&self) -> u64 {
        match self {
            Method::Cvci => 0,
            Method::ExpOnly => 1,
            Method::ObsOnly => 2,
            Method::PoolAll => 3,
            Method::TTestPool => 4,
            Method::TrueEffect => 5,
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "cvci" => Ok(Method::Cvci),
            "exp_only" => Ok(Method::ExpOnly),
            "obs_only" => Ok(Method::ObsOnly),
            "pool_all" => Ok(Method::PoolAll),
            "ttest_pool" => Ok(Method::TTestPool),
            "true_effect" => Ok(Method::TrueEffect),
            other => Err(Error::InvalidConfig {
                reason: alloc::format!("unknown method `{other}`"),
            }),
        }
    }
}

/// One method's output on one dataset pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MethodOutcome {
    pub estimate: f64,
    /// The selected or implied source weight, when the method has one.
    pub lambda: Option<f64>,
    /// Extra diagnostics for methods that produce them (the gated
    /// pooling baseline's test statistics).
    pub detail: BaselineDetail,
}

impl MethodOutcome {
    fn plain(estimate: f64, lambda: Option<f64>) -> Self {
        MethodOutcome {
            estimate,
            lambda,
            detail: BaselineDetail::None,
        }
    }
}

/// The cross-validated combination under the configured mode, returning
/// both the headline outcome and the full selection record (criterion
/// trace, fold plan, final fit).
pub fn cvci_full(
    exp: &CausalDataset,
    obs: &CausalDataset,
    cfg: &AnalysisConfig,
    seed: u64,
) -> Result<(MethodOutcome, cv::CvResult)> {
    match cfg.mode {
        Mode::TwoArm => {
            let eff = baselines::effective_obs(Some(exp), obs)?;
            let config = CvConfig::Linear {
                estimator: cfg.estimator.clone(),
                loss: cfg.loss.clone(),
            };
            let res = cv::cvci_estimate(exp, &eff, cfg.folds, &cfg.grid, &config, seed)?;
            let out = MethodOutcome::plain(res.final_fit.beta, Some(res.lambda_hat));
            Ok((out, res))
        }
        Mode::ControlArmOnly => {
            let treated_mean = arm_mean(exp, true, "experimental treated mean")?;
            let config = CvConfig::ArmMean { treated: false };
            let res = cv::cvci_estimate(exp, obs, cfg.folds, &cfg.grid, &config, seed)?;
            let out =
                MethodOutcome::plain(treated_mean - res.final_fit.beta, Some(res.lambda_hat));
            Ok((out, res))
        }
        Mode::TreatmentMean => {
            let config = CvConfig::ArmMean { treated: true };
            let res = cv::cvci_estimate(exp, obs, cfg.folds, &cfg.grid, &config, seed)?;
            let out = MethodOutcome::plain(res.final_fit.beta, Some(res.lambda_hat));
            Ok((out, res))
        }
    }
}

/// Run a single method on one dataset pair under the configured mode.
/// `tau_star` is only consulted by the true-effect stub.
pub fn run_method(
    method: Method,
    exp: &CausalDataset,
    obs: &CausalDataset,
    cfg: &AnalysisConfig,
    tau_star: Option<f64>,
    seed: u64,
) -> Result<MethodOutcome> {
    if method == Method::TrueEffect {
        let t = tau_star.ok_or(Error::InvalidConfig {
            reason: String::from("true_effect requires a known effect"),
        })?;
        return Ok(MethodOutcome::plain(t, None));
    }
    if method == Method::Cvci {
        return Ok(cvci_full(exp, obs, cfg, seed)?.0);
    }
    match cfg.mode {
        Mode::TwoArm => run_two_arm(method, exp, obs, cfg, seed),
        Mode::ControlArmOnly => run_control_arm(method, exp, obs, cfg, seed),
        Mode::TreatmentMean => run_treatment_mean(method, exp, obs, cfg),
    }
}

fn run_two_arm(
    method: Method,
    exp: &CausalDataset,
    obs: &CausalDataset,
    cfg: &AnalysisConfig,
    seed: u64,
) -> Result<MethodOutcome> {
    match method {
        Method::ExpOnly => {
            let r = baselines::exp_only(exp, &cfg.estimator, seed)?;
            Ok(MethodOutcome::plain(r.beta, r.lambda_equivalent))
        }
        Method::ObsOnly => {
            let r = baselines::obs_only(Some(exp), obs)?;
            Ok(MethodOutcome::plain(r.beta, r.lambda_equivalent))
        }
        Method::PoolAll => {
            let r = baselines::pool_all(exp, obs)?;
            Ok(MethodOutcome::plain(r.beta, None))
        }
        Method::TTestPool => Err(Error::InvalidConfig {
            reason: String::from(
                "ttest_pool compares outcome means and needs a single-arm combination mode",
            ),
        }),
        Method::Cvci | Method::TrueEffect => unreachable!("handled in run_method"),
    }
}

fn arm_mean(ds: &CausalDataset, treated: bool, context: &'static str) -> Result<f64> {
    let ys = ds.arm_outcomes(treated);
    if ys.is_empty() {
        return Err(Error::EmptyArm {
            treated,
            context,
            fold: None,
        });
    }
    Ok(stats::mean(&ys))
}

fn run_control_arm(
    method: Method,
    exp: &CausalDataset,
    obs: &CausalDataset,
    cfg: &AnalysisConfig,
    seed: u64,
) -> Result<MethodOutcome> {
    let treated_mean = arm_mean(exp, true, "experimental treated mean")?;
    match method {
        Method::ExpOnly => {
            let r = baselines::exp_only(exp, &ExpEstimatorConfig::DiffInMeans, seed)?;
            Ok(MethodOutcome::plain(r.beta, r.lambda_equivalent))
        }
        Method::ObsOnly => {
            let r = baselines::obs_only(Some(exp), obs)?;
            Ok(MethodOutcome::plain(r.beta, r.lambda_equivalent))
        }
        Method::PoolAll => {
            let r = baselines::pool_all(exp, obs)?;
            Ok(MethodOutcome::plain(r.beta, None))
        }
        Method::TTestPool => {
            let exp_c = exp.arm_outcomes(false);
            let obs_c = obs.arm_outcomes(false);
            let r = baselines::ttest_then_pool(&exp_c, &obs_c, cfg.alpha)?;
            Ok(MethodOutcome {
                estimate: treated_mean - r.beta,
                lambda: r.lambda_equivalent,
                detail: r.detail,
            })
        }
        Method::Cvci | Method::TrueEffect => unreachable!("handled in run_method"),
    }
}

fn run_treatment_mean(
    method: Method,
    exp: &CausalDataset,
    obs: &CausalDataset,
    cfg: &AnalysisConfig,
) -> Result<MethodOutcome> {
    match method {
        Method::ExpOnly => Ok(MethodOutcome::plain(
            arm_mean(exp, true, "experimental treated mean")?,
            Some(0.0),
        )),
        Method::ObsOnly => Ok(MethodOutcome::plain(
            arm_mean(obs, true, "observational treated mean")?,
            Some(1.0),
        )),
        Method::PoolAll => {
            // Pooling single-arm outcome data is the size-weighted mean.
            let e = arm_mean(exp, true, "experimental treated mean")?;
            let o = arm_mean(obs, true, "observational treated mean")?;
            let ne = exp.arm_count(true) as f64;
            let no = obs.arm_count(true) as f64;
            let lambda = no / (ne + no);
            Ok(MethodOutcome::plain((ne * e + no * o) / (ne + no), Some(lambda)))
        }
        Method::TTestPool => {
            let r = baselines::ttest_then_pool(
                &exp.arm_outcomes(true),
                &obs.arm_outcomes(true),
                cfg.alpha,
            )?;
            Ok(MethodOutcome {
                estimate: r.beta,
                lambda: r.lambda_equivalent,
                detail: r.detail,
            })
        }
        Method::Cvci | Method::TrueEffect => unreachable!("handled in run_method"),
    }
}

/// One generated dataset pair analyzed by every requested method.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicateOutcome {
    pub run: usize,
    pub seed: u64,
    /// Aligned with the method list passed to the harness.
    pub estimates: Vec<f64>,
    pub lambdas: Vec<Option<f64>>,
}

/// Generate replicate `run`'s data and run every method on it. The
/// per-method seeds depend on the method identity, not its list position.
pub fn run_replicate(
    scenario: &McScenario,
    cfg: &AnalysisConfig,
    methods: &[Method],
    run: usize,
    run_seed: u64,
) -> Result<ReplicateOutcome> {
    let inner = (|| -> Result<ReplicateOutcome> {
        let (exp, obs) = scenario.generate(derive(run_seed, &[TAG_GEN]))?;
        let mut estimates = Vec::with_capacity(methods.len());
        let mut lambdas = Vec::with_capacity(methods.len());
        for m in methods {
            let seed_m = derive(run_seed, &[TAG_METHOD, m.id()]);
            let out = run_method(*m, &exp, &obs, cfg, Some(scenario.tau_star()), seed_m)?;
            estimates.push(out.estimate);
            lambdas.push(out.lambda);
        }
        Ok(ReplicateOutcome {
            run,
            seed: run_seed,
            estimates,
            lambdas,
        })
    })();
    inner.map_err(|e| Error::ReplicateFailed {
        run,
        seed: run_seed,
        source: Box::new(e),
    })
}

/// Accuracy summary for one method over all replicates.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodStats {
    pub method: Method,
    pub mse: f64,
    pub bias: f64,
    pub sd: f64,
    pub mean_lambda: Option<f64>,
    pub sd_lambda: Option<f64>,
}

/// Monte Carlo report: per-method accuracy plus every replicate record.
#[derive(Debug, Clone, PartialEq)]
pub struct McReport {
    pub n_runs: usize,
    pub tau_star: f64,
    pub methods: Vec<Method>,
    pub stats: Vec<MethodStats>,
    pub runs: Vec<ReplicateOutcome>,
}

/// Mean squared error, bias, and sample standard deviation of estimates
/// around `tau_star`. `mse == bias^2 + sd^2*(n-1)/n` up to rounding.
pub fn accuracy(tau_star: f64, estimates: &[f64]) -> (f64, f64, f64) {
    let n = estimates.len() as f64;
    let mse = estimates
        .iter()
        .map(|e| (e - tau_star) * (e - tau_star))
        .sum::<f64>()
        / n;
    let bias = stats::mean(estimates) - tau_star;
    let sd = stats::sample_sd(estimates);
    (mse, bias, sd)
}

/// Aggregate replicate outcomes (already in run order) into a report.
/// Shared by the sequential driver here and any concurrent driver, so
/// both produce identical bytes.
pub fn aggregate_report(
    tau_star: f64,
    methods: &[Method],
    runs: Vec<ReplicateOutcome>,
) -> McReport {
    let n_runs = runs.len();
    let mut stats_out = Vec::with_capacity(methods.len());
    for (j, m) in methods.iter().enumerate() {
        let estimates: Vec<f64> = runs.iter().map(|r| r.estimates[j]).collect();
        let (mse, bias, sd) = accuracy(tau_star, &estimates);
        let lambdas: Vec<f64> = runs.iter().filter_map(|r| r.lambdas[j]).collect();
        let (mean_lambda, sd_lambda) = if lambdas.len() == n_runs && n_runs > 0 {
            (
                Some(stats::mean(&lambdas)),
                Some(stats::sample_sd(&lambdas)),
            )
        } else {
            (None, None)
        };
        stats_out.push(MethodStats {
            method: *m,
            mse,
            bias,
            sd,
            mean_lambda,
            sd_lambda,
        });
    }
    McReport {
        n_runs,
        tau_star,
        methods: methods.to_vec(),
        stats: stats_out,
        runs,
    }
}

/// Sequential Monte Carlo driver: replicate `r` uses a seed derived from
/// `master_seed` and `r` alone, so reports are independent of scheduling.
pub fn monte_carlo(
    scenario: &McScenario,
    cfg: &AnalysisConfig,
    methods: &[Method],
    n_runs: usize,
    master_seed: u64,
) -> Result<McReport> {
    if n_runs == 0 {
        return Err(Error::InvalidConfig {
            reason: String::from("n_runs must be at least 1"),
        });
    }
    let mut runs = Vec::with_capacity(n_runs);
    for r in 0..n_runs {
        let run_seed = derive(master_seed, &[TAG_RUN, r as u64]);
        runs.push(run_replicate(scenario, cfg, methods, r, run_seed)?);
    }
    Ok(aggregate_report(scenario.tau_star(), methods, runs))
}

/// Resample rows with replacement, preserving the source size.
fn resample(ds: &CausalDataset, tag: SourceTag, rng: &mut ChaCha12Rng) -> CausalDataset {
    let n = ds.n();
    let idx: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    ds.subset(&idx, tag)
}

/// One bootstrap replicate: within-source resampling of both sources,
/// then the method end to end (including fresh fold splits). Retries a
/// failed resample (e.g. one that lost a treatment arm) up to 10 times
/// with fresh draws before giving up.
pub fn bootstrap_replicate(
    exp: &CausalDataset,
    obs: Option<&CausalDataset>,
    method: Method,
    cfg: &AnalysisConfig,
    b: usize,
    seed: u64,
) -> Result<f64> {
    if obs.is_none() && method != Method::ExpOnly {
        return Err(Error::InvalidConfig {
            reason: alloc::format!("method {} needs an observational source", method.name()),
        });
    }
    let mut last = Error::InvalidConfig {
        reason: String::from("bootstrap retry budget must be positive"),
    };
    for attempt in 0..BOOT_MAX_RETRIES {
        let rs = derive(seed, &[TAG_BOOT, b as u64, attempt]);
        let mut rng = ChaCha12Rng::seed_from_u64(rs);
        let exp_b = resample(exp, SourceTag::Experimental, &mut rng);
        // Methods that ignore the observational source still take a
        // dataset argument; hand them the experimental rows.
        let obs_b = match obs {
            Some(o) => resample(o, SourceTag::Observational, &mut rng),
            None => exp_b.clone(),
        };
        match run_method(method, &exp_b, &obs_b, cfg, None, rs) {
            Ok(out) => return Ok(out.estimate),
            Err(e) => last = e,
        }
    }
    Err(Error::ReplicateFailed {
        run: b,
        seed,
        source: Box::new(last),
    })
}

/// Bootstrap standard deviation of a method's estimate: resample each
/// source with replacement `n_boot` times, rerun the full method each
/// time, and return the sample standard deviation of the estimates.
pub fn bootstrap_sd(
    exp: &CausalDataset,
    obs: Option<&CausalDataset>,
    method: Method,
    cfg: &AnalysisConfig,
    n_boot: usize,
    seed: u64,
) -> Result<f64> {
    let estimates = bootstrap_estimates(exp, obs, method, cfg, n_boot, seed)?;
    Ok(stats::sample_sd(&estimates))
}

/// The raw bootstrap estimates behind `bootstrap_sd`, in replicate order.
pub fn bootstrap_estimates(
    exp: &CausalDataset,
    obs: Option<&CausalDataset>,
    method: Method,
    cfg: &AnalysisConfig,
    n_boot: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if n_boot < 2 {
        return Err(Error::InvalidConfig {
            reason: String::from("n_boot must be at least 2"),
        });
    }
    (0..n_boot)
        .map(|b| bootstrap_replicate(exp, obs, method, cfg, b, seed))
        .collect()
}

/// Which scenario knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Epsilon,
    NObs,
    NExp,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::NObs => "n_obs",
            SweepParam::NExp => "n_exp",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "epsilon" => Ok(SweepParam::Epsilon),
            "n_obs" => Ok(SweepParam::NObs),
            "n_exp" => Ok(SweepParam::NExp),
            other => Err(Error::InvalidConfig {
                reason: alloc::format!("unknown sweep parameter `{other}`"),
            }),
        }
    }
}

/// Reports for each value of the swept parameter, in input order.
#[derive(Debug, Clone)]
pub struct SweepOutcome {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub reports: Vec<McReport>,
}

fn as_count(value: f64, what: &'static str) -> Result<usize> {
    let ok = value.is_finite() && value >= 1.0 && value == (value as u64) as f64;
    if !ok {
        return Err(Error::InvalidConfig {
            reason: alloc::format!("{what} sweep values must be positive integers, got {value}"),
        });
    }
    Ok(value as usize)
}

/// Assemble the per-point scenarios a sweep will run, each with the
/// master-derived seed its replicates hang off, in input order.
///
/// Bias sweeps redraw everything per replicate. Size sweeps hold the
/// model fixed: both coefficient vectors are drawn once from the master
/// seed (unless supplied), the swept source is generated once at the
/// largest requested size, and each replicate subsamples it without
/// replacement while the other source stays fresh per replicate — so
/// points of the sweep differ only in how much of the same pool they see.
pub fn sweep_points(
    base: &SimScenario,
    param: SweepParam,
    values: &[f64],
    master_seed: u64,
) -> Result<Vec<(f64, McScenario, u64)>> {
    base.validate()?;
    if values.is_empty() {
        return Ok(Vec::new());
    }
    if param != SweepParam::Epsilon && base.setting != Setting::Linear {
        return Err(Error::InvalidConfig {
            reason: String::from("size sweeps pool a linear-setting source"),
        });
    }
    let mut points = Vec::with_capacity(values.len());
    match param {
        SweepParam::Epsilon => {
            for (i, &v) in values.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::InvalidConfig {
                        reason: String::from("epsilon sweep values must be finite"),
                    });
                }
                let mut sc = base.clone();
                sc.epsilon = v;
                let seed_i = derive(master_seed, &[TAG_SWEEP, i as u64]);
                points.push((v, McScenario::Synthetic(sc), seed_i));
            }
        }
        SweepParam::NObs | SweepParam::NExp => {
            let counts: Vec<usize> = values
                .iter()
                .map(|&v| as_count(v, param.name()))
                .collect::<Result<_>>()?;
            let max_n = *counts.iter().max().expect("nonempty");
            let mut fixed = base.clone();
            let mut rng = ChaCha12Rng::seed_from_u64(derive(master_seed, &[TAG_POOL]));
            if fixed.theta_exp.is_none() {
                fixed.theta_exp = Some(draw_theta(fixed.d, &mut rng));
            }
            if fixed.theta_obs.is_none() {
                fixed.theta_obs = Some(draw_theta(fixed.d, &mut rng));
            }
            let pool = match param {
                SweepParam::NObs => gen_linear_source(
                    max_n,
                    fixed.d,
                    fixed.theta_obs.as_ref().expect("just fixed"),
                    fixed.tau_star + fixed.epsilon,
                    fixed.prop_obs,
                    fixed.sigma2,
                    SourceTag::Observational,
                    &mut rng,
                )?,
                _ => gen_linear_source(
                    max_n,
                    fixed.d,
                    fixed.theta_exp.as_ref().expect("just fixed"),
                    fixed.tau_star,
                    fixed.prop_exp,
                    fixed.sigma2,
                    SourceTag::Experimental,
                    &mut rng,
                )?,
            };
            for (i, (&count, &v)) in counts.iter().zip(values).enumerate() {
                let mut sc = fixed.clone();
                let scenario = match param {
                    SweepParam::NObs => {
                        sc.n_obs = count;
                        McScenario::SubsampledObs {
                            base: sc,
                            pool: pool.clone(),
                            n_obs: count,
                        }
                    }
                    _ => {
                        sc.n_exp = count;
                        McScenario::SubsampledExp {
                            base: sc,
                            pool: pool.clone(),
                            n_exp: count,
                        }
                    }
                };
                let seed_i = derive(master_seed, &[TAG_SWEEP, i as u64]);
                points.push((v, scenario, seed_i));
            }
        }
    }
    Ok(points)
}

/// Sweep one scenario parameter, sequentially.
pub fn sweep(
    base: &SimScenario,
    cfg: &AnalysisConfig,
    methods: &[Method],
    param: SweepParam,
    values: &[f64],
    n_runs: usize,
    master_seed: u64,
) -> Result<SweepOutcome> {
    let points = sweep_points(base, param, values, master_seed)?;
    let mut reports = Vec::with_capacity(points.len());
    for (_, scenario, seed_i) in &points {
        reports.push(monte_carlo(scenario, cfg, methods, n_runs, *seed_i)?);
    }
    Ok(SweepOutcome {
        param,
        values: values.to_vec(),
        reports,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn no_cov_scenario() -> SimScenario {
        SimScenario {
            setting: Setting::NoCovariate,
            tau_star: 1.0,
            epsilon: 0.0,
            sigma2: 1.0,
            n_exp: 100,
            n_obs: 500,
            d: 0,
            theta_exp: None,
            theta_obs: None,
            prop_exp: 0.5,
            prop_obs: 0.5,
        }
    }

    fn linear_scenario() -> SimScenario {
        SimScenario {
            setting: Setting::Linear,
            tau_star: 1.0,
            epsilon: 0.5,
            sigma2: 1.0,
            n_exp: 120,
            n_obs: 400,
            d: 6,
            theta_exp: None,
            theta_obs: None,
            prop_exp: 0.5,
            prop_obs: 0.2,
        }
    }

    fn mean_cfg(folds: FoldCount) -> AnalysisConfig {
        AnalysisConfig {
            mode: Mode::TreatmentMean,
            estimator: ExpEstimatorConfig::DiffInMeans,
            loss: ObsLossSpec::SquaredError,
            folds,
            grid: cv::default_grid(11).unwrap(),
            alpha: 0.05,
        }
    }

    #[test]
    fn no_covariate_generation_shape_and_determinism() {
        let sc = no_cov_scenario();
        let (exp, obs) = gen_no_covariate(&sc, 7).unwrap();
        assert_eq!(exp.n(), 100);
        assert_eq!(obs.n(), 500);
        assert!(exp.w().iter().all(|&w| w == 1));
        assert_eq!(exp.n_covariates(), 0);
        let (exp2, obs2) = gen_no_covariate(&sc, 7).unwrap();
        assert_eq!(exp, exp2);
        assert_eq!(obs, obs2);
        let (exp3, _) = gen_no_covariate(&sc, 8).unwrap();
        assert_ne!(exp, exp3);
    }

    #[test]
    fn no_covariate_sources_coincide_in_mean_when_unbiased() {
        let mut sc = no_cov_scenario();
        sc.n_exp = 100_000;
        sc.n_obs = 100_000;
        let (exp, obs) = gen_no_covariate(&sc, 11).unwrap();
        let diff = stats::mean(exp.y()) - stats::mean(obs.y());
        let bound = 5.0 / (sc.n_exp as f64).sqrt();
        assert!(diff.abs() < bound, "{diff} vs {bound}");
        // Marginal means and variances match the scenario within 4
        // standard errors.
        let m = stats::mean(exp.y());
        assert!((m - sc.tau_star).abs() < 4.0 / (sc.n_exp as f64).sqrt());
        let v = stats::sample_var(exp.y());
        assert!((v - 1.0).abs() < 4.0 * (2.0 / sc.n_exp as f64).sqrt());
    }

    #[test]
    fn linear_generation_treated_fractions_and_determinism() {
        let sc = linear_scenario();
        let (exp, obs) = gen_linear(&sc, 3).unwrap();
        assert_eq!(exp.n_covariates(), 5);
        let frac_e = exp.arm_count(true) as f64 / exp.n() as f64;
        let frac_o = obs.arm_count(true) as f64 / obs.n() as f64;
        assert!((frac_e - 0.5).abs() < 3.0 * (0.25f64 / 120.0).sqrt());
        assert!((frac_o - 0.2).abs() < 3.0 * (0.16f64 / 400.0).sqrt());
        let (exp2, obs2) = gen_linear(&sc, 3).unwrap();
        assert_eq!(exp, exp2);
        assert_eq!(obs, obs2);
    }

    #[test]
    fn nearly_noiseless_observational_regression_recovers_the_effect() {
        let mut sc = linear_scenario();
        sc.sigma2 = 1e-12;
        sc.epsilon = 0.0;
        sc.theta_exp = Some(alloc::vec![0.5, -0.25, 1.0, 0.0, 2.0, 0.0]);
        sc.theta_obs = sc.theta_exp.clone();
        let (_, obs) = gen_linear(&sc, 5).unwrap();
        let r = baselines::obs_only(None, &obs).unwrap();
        assert!((r.beta - sc.tau_star).abs() < 1e-4, "{}", r.beta);
    }

    #[test]
    fn supplied_intercept_shifts_outcomes() {
        let mut sc = linear_scenario();
        sc.theta_exp = Some(alloc::vec![0.0, 0.0, 0.0, 0.0, 0.0, 100.0]);
        sc.theta_obs = sc.theta_exp.clone();
        sc.tau_star = 0.0;
        sc.epsilon = 0.0;
        let (exp, _) = gen_linear(&sc, 5).unwrap();
        let m = stats::mean(exp.y());
        assert!((m - 100.0).abs() < 1.0, "{m}");
    }

    #[test]
    fn semisynthetic_with_linear_truth_reproduces_outcomes() {
        // Outcomes exactly linear in [w | z | 1] leave zero residuals, so
        // regeneration returns the template outcomes bit for bit ... up
        // to the OLS solve's rounding.
        let n = 30;
        let mut y = Vec::new();
        let mut w = Vec::new();
        let mut z = Vec::new();
        for i in 0..n {
            let zi = (i as f64 * 0.37).sin();
            let wi = (i % 2) as u8;
            z.push(zi);
            w.push(wi);
            y.push(2.0 * wi as f64 + 0.5 * zi - 1.0);
        }
        let ds = CausalDataset::new(y, w, z, 1, SourceTag::Experimental).unwrap();
        let fit = fit_source(&ds).unwrap();
        assert!(fit.resid_var < 1e-18);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let regen =
            gen_semisynthetic_source(&fit, &ds, SourceTag::Experimental, &mut rng).unwrap();
        for (a, b) in regen.y().iter().zip(ds.y()) {
            assert!((a - b).abs() < 1e-9);
        }
        assert_eq!(regen.w(), ds.w());
    }

    #[test]
    fn semisynthetic_is_deterministic() {
        let sc = linear_scenario();
        let (exp, obs) = gen_linear(&sc, 9).unwrap();
        let ef = fit_source(&exp).unwrap();
        let eff = baselines::effective_obs(Some(&exp), &obs).unwrap();
        let of = fit_source(&eff).unwrap();
        let a = gen_semisynthetic(&ef, &of, &exp, &obs, 4).unwrap();
        let b = gen_semisynthetic(&ef, &of, &exp, &obs, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn accuracy_decomposition_hand_instance() {
        let (mse, bias, sd) = accuracy(2.0, &[1.0, 2.0, 3.0]);
        assert!((mse - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(bias, 0.0);
        assert!((sd - 1.0).abs() < 1e-15);
        let n = 3.0;
        assert!((mse - (bias * bias + sd * sd * (n - 1.0) / n)).abs() < 1e-12);
    }

    #[test]
    fn true_effect_stub_has_zero_mse() {
        let sc = McScenario::Synthetic(no_cov_scenario());
        let cfg = mean_cfg(FoldCount::K(5));
        let report = monte_carlo(&sc, &cfg, &[Method::TrueEffect], 10, 99).unwrap();
        assert_eq!(report.n_runs, 10);
        let s = &report.stats[0];
        assert_eq!(s.mse, 0.0);
        assert_eq!(s.bias, 0.0);
        assert_eq!(s.sd, 0.0);
        assert_eq!(report.runs.len(), 10);
    }

    #[test]
    fn monte_carlo_is_deterministic_and_method_order_free() {
        let mut sc = no_cov_scenario();
        sc.n_exp = 30;
        sc.n_obs = 60;
        let scenario = McScenario::Synthetic(sc);
        let cfg = mean_cfg(FoldCount::K(5));
        let ms = [Method::Cvci, Method::ExpOnly, Method::TTestPool];
        let a = monte_carlo(&scenario, &cfg, &ms, 8, 123).unwrap();
        let b = monte_carlo(&scenario, &cfg, &ms, 8, 123).unwrap();
        assert_eq!(a, b);
        // Reordering the method list must not change any method's numbers.
        let swapped = [Method::TTestPool, Method::ExpOnly, Method::Cvci];
        let c = monte_carlo(&scenario, &cfg, &swapped, 8, 123).unwrap();
        for (j, m) in ms.iter().enumerate() {
            let cj = swapped.iter().position(|x| x == m).unwrap();
            assert_eq!(a.stats[j].mse, c.stats[cj].mse, "method {}", m.name());
            for r in 0..8 {
                assert_eq!(a.runs[r].estimates[j], c.runs[r].estimates[cj]);
            }
        }
    }

    #[test]
    fn mse_identity_holds_for_real_methods() {
        let mut sc = no_cov_scenario();
        sc.n_exp = 25;
        sc.n_obs = 50;
        sc.epsilon = 0.7;
        let scenario = McScenario::Synthetic(sc);
        let cfg = mean_cfg(FoldCount::K(5));
        let report = monte_carlo(
            &scenario,
            &cfg,
            &[Method::Cvci, Method::ExpOnly, Method::ObsOnly, Method::PoolAll],
            40,
            5,
        )
        .unwrap();
        let n = report.n_runs as f64;
        for s in &report.stats {
            let rhs = s.bias * s.bias + s.sd * s.sd * (n - 1.0) / n;
            let denom = s.mse.abs().max(1e-300);
            assert!(
                ((s.mse - rhs) / denom).abs() < 1e-9,
                "decomposition failed for {}",
                s.method.name()
            );
        }
        // CVCI tracks a lambda on every run; pooled mean carries its
        // size-implied weight.
        assert!(report.stats[0].mean_lambda.is_some());
        assert!(report.stats[3].mean_lambda.is_some());
    }

    #[test]
    fn two_arm_rejects_ttest_baseline() {
        let sc = linear_scenario();
        let (exp, obs) = gen_linear(&sc, 1).unwrap();
        let cfg = AnalysisConfig {
            mode: Mode::TwoArm,
            estimator: ExpEstimatorConfig::DiffInMeans,
            loss: ObsLossSpec::SquaredError,
            folds: FoldCount::K(5),
            grid: cv::default_grid(5).unwrap(),
            alpha: 0.05,
        };
        let err = run_method(Method::TTestPool, &exp, &obs, &cfg, None, 0).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { .. }));
    }

    #[test]
    fn control_arm_mode_hand_instance() {
        // Experimental: treated mean 5, control mean 2; observational
        // controls mean 4 (sizes 2 and 4).
        let exp = CausalDataset::new(
            alloc::vec![4.0, 6.0, 1.0, 3.0],
            alloc::vec![1, 1, 0, 0],
            alloc::vec![],
            0,
            SourceTag::Experimental,
        )
        .unwrap();
        let obs = CausalDataset::new(
            alloc::vec![3.0, 5.0, 4.0, 4.0],
            alloc::vec![0, 0, 0, 0],
            alloc::vec![],
            0,
            SourceTag::Observational,
        )
        .unwrap();
        let cfg = AnalysisConfig {
            mode: Mode::ControlArmOnly,
            estimator: ExpEstimatorConfig::DiffInMeans,
            loss: ObsLossSpec::SquaredError,
            folds: FoldCount::K(2),
            grid: alloc::vec![0.0, 1.0],
            alpha: 0.05,
        };
        let e = run_method(Method::ExpOnly, &exp, &obs, &cfg, None, 0).unwrap();
        assert_eq!(e.estimate, 3.0);
        let o = run_method(Method::ObsOnly, &exp, &obs, &cfg, None, 0).unwrap();
        assert_eq!(o.estimate, 1.0);
        // Pooled regression: treated mean 5 minus pooled control mean
        // (2+2+16)/6.
        let p = run_method(Method::PoolAll, &exp, &obs, &cfg, None, 0).unwrap();
        assert!((p.estimate - (5.0 - 20.0 / 6.0)).abs() < 1e-12);
        // CVCI at the lambda=1 endpoint equals obs_only; at 0 equals
        // exp_only; the winner must be one of them here.
        let c = run_method(Method::Cvci, &exp, &obs, &cfg, None, 0).unwrap();
        assert!(c.lambda == Some(0.0) || c.lambda == Some(1.0));
        let want = if c.lambda == Some(0.0) { 3.0 } else { 1.0 };
        assert!((c.estimate - want).abs() < 1e-12);
    }

    #[test]
    fn bootstrap_constant_outcomes_have_zero_sd() {
        let exp = CausalDataset::new(
            alloc::vec![2.0; 20],
            (0..20).map(|i| (i % 2) as u8).collect(),
            alloc::vec![],
            0,
            SourceTag::Experimental,
        )
        .unwrap();
        let cfg = AnalysisConfig {
            mode: Mode::TwoArm,
            estimator: ExpEstimatorConfig::DiffInMeans,
            loss: ObsLossSpec::SquaredError,
            folds: FoldCount::K(2),
            grid: alloc::vec![0.0, 1.0],
            alpha: 0.05,
        };
        let sd = bootstrap_sd(&exp, None, Method::ExpOnly, &cfg, 50, 3).unwrap();
        assert_eq!(sd, 0.0);
    }

    #[test]
    fn bootstrap_resamples_produce_variation_and_determinism() {
        let sc = no_cov_scenario();
        let (exp, obs) = gen_no_covariate(&sc, 21).unwrap();
        let cfg = mean_cfg(FoldCount::K(5));
        let a = bootstrap_estimates(&exp, Some(&obs), Method::Cvci, &cfg, 12, 77).unwrap();
        let b = bootstrap_estimates(&exp, Some(&obs), Method::Cvci, &cfg, 12, 77).unwrap();
        assert_eq!(a, b);
        let sd = stats::sample_sd(&a);
        assert!(sd > 0.0);
        // Methods that need an observational source refuse to run blind.
        assert!(bootstrap_sd(&exp, None, Method::Cvci, &cfg, 5, 0).is_err());
    }

    #[test]
    fn epsilon_sweep_shapes_and_determinism() {
        let mut sc = no_cov_scenario();
        sc.n_exp = 20;
        sc.n_obs = 40;
        let cfg = mean_cfg(FoldCount::K(4));
        let out = sweep(
            &sc,
            &cfg,
            &[Method::Cvci, Method::ExpOnly],
            SweepParam::Epsilon,
            &[0.0, 1.0, 2.0],
            6,
            31,
        )
        .unwrap();
        assert_eq!(out.reports.len(), 3);
        assert_eq!(out.values, alloc::vec![0.0, 1.0, 2.0]);
        let again = sweep(
            &sc,
            &cfg,
            &[Method::Cvci, Method::ExpOnly],
            SweepParam::Epsilon,
            &[0.0, 1.0, 2.0],
            6,
            31,
        )
        .unwrap();
        for (x, y) in out.reports.iter().zip(&again.reports) {
            assert_eq!(x, y);
        }
        // Zero sweep values is a valid degenerate request.
        let empty = sweep(&sc, &cfg, &[Method::Cvci], SweepParam::Epsilon, &[], 2, 1).unwrap();
        assert!(empty.reports.is_empty());
    }

    #[test]
    fn size_sweep_subsamples_one_fixed_pool() {
        let mut sc = linear_scenario();
        sc.n_exp = 40;
        sc.n_obs = 0; // overridden per sweep point
        sc.d = 3;
        let cfg = AnalysisConfig {
            mode: Mode::TwoArm,
            estimator: ExpEstimatorConfig::DiffInMeans,
            loss: ObsLossSpec::SquaredError,
            folds: FoldCount::K(4),
            grid: cv::default_grid(5).unwrap(),
            alpha: 0.05,
        };
        sc.n_obs = 50;
        let out = sweep(
            &sc,
            &cfg,
            &[Method::ObsOnly],
            SweepParam::NObs,
            &[60.0, 120.0],
            4,
            17,
        )
        .unwrap();
        assert_eq!(out.reports.len(), 2);
        // Same sweep, same bytes.
        let again = sweep(
            &sc,
            &cfg,
            &[Method::ObsOnly],
            SweepParam::NObs,
            &[60.0, 120.0],
            4,
            17,
        )
        .unwrap();
        assert_eq!(out.reports[1], again.reports[1]);
        // Non-integer sizes are rejected.
        assert!(sweep(
            &sc,
            &cfg,
            &[Method::ObsOnly],
            SweepParam::NObs,
            &[60.5],
            2,
            17
        )
        .is_err());
    }

    #[test]
    fn replicate_failures_carry_run_and_seed() {
        // Three experimental units cannot fill five folds, so the first
        // replicate fails and the wrapper must record which one and with
        // what seed.
        let mut sc = no_cov_scenario();
        sc.n_exp = 3;
        let scenario = McScenario::Synthetic(sc);
        let cfg = mean_cfg(FoldCount::K(5));
        let err = monte_carlo(&scenario, &cfg, &[Method::Cvci], 2, 1).unwrap_err();
        match err {
            Error::ReplicateFailed { run, source, .. } => {
                assert_eq!(run, 0);
                assert!(matches!(*source, Error::TooFewUnits { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }
}
