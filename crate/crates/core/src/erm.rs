//! Weighted empirical risk minimization.
//!
//! For a fixed weight `lambda` in [0,1], minimize
//! `(1 - lambda) * Lexp(beta(theta)) + lambda * Lobs(theta)` where
//! `Lexp(beta) = (beta - tau_hat_exp)^2` anchors the causal coordinate to
//! the experimental estimate and `Lobs` is an observational-data loss
//! (mean squared error, optionally ridge-penalized, or a user-supplied
//! strongly convex loss). Closed forms cover the mean-only and linear
//! cases; a damped Newton solver covers generic losses.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{CausalDataset, DesignMatrix, ModelParams};
use crate::error::{Error, Result};
use crate::fmath;
use crate::linalg::{SpdSolver, SymMat, SINGULAR_REL_TOL};

const NEWTON_MAX_ITERS: usize = 200;
const NEWTON_GRAD_TOL: f64 = 1e-9;
const ARMIJO_C: f64 = 1e-4;
const ARMIJO_MAX_HALVINGS: usize = 60;

/// A user-supplied observational loss. Must be strongly convex with a
/// gradient and Hessian available everywhere; `hessian` fills a row-major
/// `dim x dim` buffer.
pub trait CustomLoss: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, theta: &[f64]) -> f64;
    fn gradient(&self, theta: &[f64], out: &mut [f64]);
    fn hessian(&self, theta: &[f64], out: &mut [f64]);
}

/// Observational loss choice.
#[derive(Clone)]
pub enum ObsLossSpec {
    /// Mean squared residual over the observational design.
    SquaredError,
    /// Mean squared residual plus `penalty / n_obs` times the squared norm
    /// of the non-intercept coordinates (the treatment coordinate is
    /// penalized; the intercept is not).
    Ridge { penalty: f64 },
    /// Caller-supplied strongly convex loss.
    Custom(Arc<dyn CustomLoss>),
}

impl core::fmt::Debug for ObsLossSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ObsLossSpec::SquaredError => write!(f, "SquaredError"),
            ObsLossSpec::Ridge { penalty } => write!(f, "Ridge {{ penalty: {penalty} }}"),
            ObsLossSpec::Custom(c) => write!(f, "Custom {{ dim: {} }}", c.dim()),
        }
    }
}

impl ObsLossSpec {
    pub fn validate(&self) -> Result<()> {
        if let ObsLossSpec::Ridge { penalty } = self {
            if !penalty.is_finite() || *penalty < 0.0 {
                return Err(Error::InvalidConfig {
                    reason: alloc::format!("ridge penalty must be finite and nonnegative, got {penalty}"),
                });
            }
        }
        Ok(())
    }

    fn ridge_penalty(&self) -> f64 {
        match self {
            ObsLossSpec::Ridge { penalty } => *penalty,
            _ => 0.0,
        }
    }
}

/// The minimizer for one `lambda`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFit {
    pub lambda: f64,
    pub theta: ModelParams,
    /// The causal coordinate of `theta`.
    pub beta: f64,
    /// The weighted objective evaluated at `theta`.
    pub objective_value: f64,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) || lambda.is_nan() {
        return Err(Error::LambdaOutOfRange { lambda });
    }
    Ok(())
}

/// Mean-only closed form: `theta = [(1-lambda)*ybar_exp + lambda*ybar_obs]`.
/// The objective here is `(1-lambda)*(theta - ybar_exp)^2 +
/// lambda*(theta - ybar_obs)^2`, the squared distances to the two source
/// means.
pub fn fit_no_covariate(lambda: f64, ybar_exp: f64, ybar_obs: f64) -> Result<WeightedFit> {
    check_lambda(lambda)?;
    let value = (1.0 - lambda) * ybar_exp + lambda * ybar_obs;
    let de = value - ybar_exp;
    let do_ = value - ybar_obs;
    let objective_value = (1.0 - lambda) * de * de + lambda * do_ * do_;
    Ok(WeightedFit {
        lambda,
        theta: ModelParams::new(vec![value], 0)?,
        beta: value,
        objective_value,
    })
}

/// Per-unit-normalized sufficient statistics of the observational squared
/// loss: `g = X^T X / n`, `h = X^T y / n`, `ysq = y^T y / n` over the
/// design `[w | z | 1]`. One of these summarizes the observational source
/// for every `lambda` on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ObsGram {
    g: SymMat,
    h: Vec<f64>,
    ysq: f64,
    n_obs: usize,
    dim: usize,
}

impl ObsGram {
    pub fn from_dataset(obs: &CausalDataset) -> Result<Self> {
        let n = obs.n();
        if n == 0 {
            return Err(Error::TooFewUnits {
                needed: 1,
                actual: 0,
            });
        }
        let x = DesignMatrix::from_dataset(obs, true);
        let mut g = x.gram();
        let inv_n = 1.0 / n as f64;
        g.scale(inv_n);
        let mut h = x.xt_y(obs.y());
        for v in &mut h {
            *v *= inv_n;
        }
        let ysq = obs.y().iter().map(|y| y * y).sum::<f64>() * inv_n;
        Ok(ObsGram {
            g,
            h,
            ysq,
            n_obs: n,
            dim: x.cols(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    /// Mean squared residual at `theta`, plus the ridge term when the
    /// loss carries one.
    pub fn obs_loss(&self, theta: &[f64], loss: &ObsLossSpec) -> f64 {
        debug_assert_eq!(theta.len(), self.dim);
        let mut quad = 0.0;
        for i in 0..self.dim {
            let mut gi = 0.0;
            for j in 0..self.dim {
                gi += self.g.get(i, j) * theta[j];
            }
            quad += theta[i] * gi;
        }
        let lin: f64 = theta.iter().zip(&self.h).map(|(t, h)| t * h).sum();
        let mut out = self.ysq - 2.0 * lin + quad;
        let p = loss.ridge_penalty();
        if p > 0.0 {
            let mut pen = 0.0;
            for (i, t) in theta.iter().enumerate() {
                if i != self.dim - 1 {
                    pen += t * t;
                }
            }
            out += p / self.n_obs as f64 * pen;
        }
        out
    }

    /// Gradient of `obs_loss` at `theta`, written into `out`.
    fn obs_grad(&self, theta: &[f64], loss: &ObsLossSpec, out: &mut [f64]) {
        for i in 0..self.dim {
            let mut gi = 0.0;
            for j in 0..self.dim {
                gi += self.g.get(i, j) * theta[j];
            }
            out[i] = 2.0 * (gi - self.h[i]);
        }
        let p = loss.ridge_penalty();
        if p > 0.0 {
            let scale = 2.0 * p / self.n_obs as f64;
            for i in 0..self.dim - 1 {
                out[i] += scale * theta[i];
            }
        }
    }
}

/// The full weighted objective at `theta`.
pub fn weighted_objective(
    lambda: f64,
    tau_hat_exp: f64,
    gram: &ObsGram,
    loss: &ObsLossSpec,
    theta: &[f64],
) -> f64 {
    let de = theta[0] - tau_hat_exp;
    (1.0 - lambda) * de * de + lambda * gram.obs_loss(theta, loss)
}

fn min_norm_fit(tau_hat_exp: f64, dim: usize) -> Result<WeightedFit> {
    let mut theta = vec![0.0; dim];
    theta[0] = tau_hat_exp;
    Ok(WeightedFit {
        lambda: 0.0,
        theta: ModelParams::new(theta, 0)?,
        beta: tau_hat_exp,
        objective_value: 0.0,
    })
}

/// Closed-form linear fit from precomputed observational statistics.
///
/// Solves `((1-lambda) e1 e1^T + lambda*(g + penalty/n * I~)) theta =
/// (1-lambda) tau_hat e1 + lambda h`, where `I~` is the identity with the
/// intercept diagonal zeroed. At `lambda = 0` the system is rank one and
/// the minimum-norm representative `[tau_hat, 0, ..., 0]` is returned.
pub fn fit_linear_gram(
    lambda: f64,
    tau_hat_exp: f64,
    gram: &ObsGram,
    loss: &ObsLossSpec,
) -> Result<WeightedFit> {
    check_lambda(lambda)?;
    loss.validate()?;
    if matches!(loss, ObsLossSpec::Custom(_)) {
        return Err(Error::UnsupportedLoss { op: "fit_linear" });
    }
    if lambda == 0.0 {
        return min_norm_fit(tau_hat_exp, gram.dim);
    }
    let dim = gram.dim;
    let mut a = gram.g.clone();
    a.scale(lambda);
    a.add(0, 0, 1.0 - lambda);
    let p = loss.ridge_penalty();
    if p > 0.0 {
        let shift = lambda * p / gram.n_obs as f64;
        for i in 0..dim - 1 {
            a.add(i, i, shift);
        }
    }
    let mut rhs = vec![0.0; dim];
    for (r, h) in rhs.iter_mut().zip(&gram.h) {
        *r = lambda * h;
    }
    rhs[0] += (1.0 - lambda) * tau_hat_exp;
    let solver = SpdSolver::new(&a, SINGULAR_REL_TOL).map_err(|e| Error::SingularSystem {
        lambda,
        ratio: e.ratio,
        tol: e.tol,
    })?;
    let theta = solver.solve(&rhs);
    let objective_value = weighted_objective(lambda, tau_hat_exp, gram, loss, &theta);
    let beta = theta[0];
    Ok(WeightedFit {
        lambda,
        theta: ModelParams::new(theta, 0)?,
        beta,
        objective_value,
    })
}

/// Closed-form linear fit straight from the observational dataset.
pub fn fit_linear(
    lambda: f64,
    tau_hat_exp: f64,
    obs: &CausalDataset,
    loss: &ObsLossSpec,
) -> Result<WeightedFit> {
    let gram = ObsGram::from_dataset(obs)?;
    fit_linear_gram(lambda, tau_hat_exp, &gram, loss)
}

struct ObjectiveParts<'a> {
    lambda: f64,
    tau_hat_exp: f64,
    gram: Option<&'a ObsGram>,
    loss: &'a ObsLossSpec,
    dim: usize,
}

impl ObjectiveParts<'_> {
    fn value(&self, theta: &[f64]) -> f64 {
        let de = theta[0] - self.tau_hat_exp;
        let obs = match self.loss {
            ObsLossSpec::Custom(c) => c.value(theta),
            _ => self.gram.expect("gram for built-in loss").obs_loss(theta, self.loss),
        };
        (1.0 - self.lambda) * de * de + self.lambda * obs
    }

    fn gradient(&self, theta: &[f64], out: &mut [f64]) {
        match self.loss {
            ObsLossSpec::Custom(c) => c.gradient(theta, out),
            _ => self
                .gram
                .expect("gram for built-in loss")
                .obs_grad(theta, self.loss, out),
        }
        for v in out.iter_mut() {
            *v *= self.lambda;
        }
        out[0] += 2.0 * (1.0 - self.lambda) * (theta[0] - self.tau_hat_exp);
    }

    fn hessian(&self, theta: &[f64]) -> SymMat {
        let dim = self.dim;
        let mut h = SymMat::zeros(dim);
        match self.loss {
            ObsLossSpec::Custom(c) => {
                let mut buf = vec![0.0; dim * dim];
                c.hessian(theta, &mut buf);
                for i in 0..dim {
                    for j in 0..dim {
                        // Symmetrize defensively; exact for honest Hessians.
                        let v = 0.5 * (buf[i * dim + j] + buf[j * dim + i]);
                        h.set(i, j, self.lambda * v);
                    }
                }
            }
            _ => {
                let gram = self.gram.expect("gram for built-in loss");
                for i in 0..dim {
                    for j in 0..dim {
                        h.set(i, j, 2.0 * self.lambda * gram.g.get(i, j));
                    }
                }
                let p = self.loss.ridge_penalty();
                if p > 0.0 {
                    let shift = 2.0 * self.lambda * p / gram.n_obs as f64;
                    for i in 0..dim - 1 {
                        h.add(i, i, shift);
                    }
                }
            }
        }
        h.add(0, 0, 2.0 * (1.0 - self.lambda));
        h
    }
}

/// Damped Newton minimization of the weighted objective from `theta = 0`,
/// for any strongly convex observational loss. Stops when the gradient
/// norm falls to `1e-9 * (1 + ||theta||)`; backtracking line search with
/// Armijo constant 1e-4.
pub fn fit_generic(
    lambda: f64,
    tau_hat_exp: f64,
    obs: &CausalDataset,
    loss: &ObsLossSpec,
) -> Result<WeightedFit> {
    check_lambda(lambda)?;
    loss.validate()?;
    let (gram, dim) = match loss {
        ObsLossSpec::Custom(c) => {
            let dim = c.dim();
            let expect = obs.n_covariates() + 2;
            if dim != expect {
                return Err(Error::ColumnMismatch {
                    left: dim,
                    right: expect,
                });
            }
            (None, dim)
        }
        _ => {
            let g = ObsGram::from_dataset(obs)?;
            let dim = g.dim();
            (Some(g), dim)
        }
    };
    if lambda == 0.0 {
        return min_norm_fit(tau_hat_exp, dim);
    }
    let parts = ObjectiveParts {
        lambda,
        tau_hat_exp,
        gram: gram.as_ref(),
        loss,
        dim,
    };
    let mut theta = vec![0.0; dim];
    let mut grad = vec![0.0; dim];
    let mut obj = parts.value(&theta);
    for _ in 0..NEWTON_MAX_ITERS {
        parts.gradient(&theta, &mut grad);
        let gnorm = fmath::norm2(&grad);
        if gnorm <= NEWTON_GRAD_TOL * (1.0 + fmath::norm2(&theta)) {
            let beta = theta[0];
            return Ok(WeightedFit {
                lambda,
                theta: ModelParams::new(theta, 0)?,
                beta,
                objective_value: obj,
            });
        }
        let hess = parts.hessian(&theta);
        let solver = SpdSolver::new(&hess, SINGULAR_REL_TOL).map_err(|e| Error::SingularSystem {
            lambda,
            ratio: e.ratio,
            tol: e.tol,
        })?;
        let mut dir = solver.solve(&grad);
        for v in &mut dir {
            *v = -*v;
        }
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..=ARMIJO_MAX_HALVINGS {
            let cand: Vec<f64> = theta.iter().zip(&dir).map(|(t, d)| t + step * d).collect();
            let cand_obj = parts.value(&cand);
            if cand_obj <= obj + ARMIJO_C * step * slope {
                theta = cand;
                obj = cand_obj;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { grad_norm: gnorm });
        }
    }
    parts.gradient(&theta, &mut grad);
    Err(Error::NoConvergence {
        grad_norm: fmath::norm2(&grad),
    })
}

/// Dispatch to the closed form when the loss admits one, otherwise Newton.
pub fn fit_weighted(
    lambda: f64,
    tau_hat_exp: f64,
    obs: &CausalDataset,
    loss: &ObsLossSpec,
) -> Result<WeightedFit> {
    match loss {
        ObsLossSpec::Custom(_) => fit_generic(lambda, tau_hat_exp, obs, loss),
        _ => fit_linear(lambda, tau_hat_exp, obs, loss),
    }
}
