//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "cvci",
    version,
    about = "Combine experimental and observational data with a cross-validated mixing weight"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Estimate the treatment effect on a pair of CSV files, with the
    /// reference baselines alongside.
    Estimate(EstimateArgs),
    /// Monte Carlo benchmark on synthetic data.
    Simulate(SimulateArgs),
    /// Bootstrap standard deviation of one method on CSV data.
    Bootstrap(BootstrapArgs),
    /// Monte Carlo benchmark across a grid of scenario parameters, with
    /// a long-format CSV companion.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Experimental (randomized) source CSV.
    #[arg(long)]
    pub exp: PathBuf,
    /// Observational source CSV.
    #[arg(long)]
    pub obs: PathBuf,
    /// Outcome column name.
    #[arg(long, default_value = "y")]
    pub outcome: String,
    /// Treatment column name (0/1 literals).
    #[arg(long, default_value = "w")]
    pub treatment: String,
    /// Comma-separated covariate column names, in model order.
    #[arg(long, value_delimiter = ',')]
    pub covariates: Vec<String>,
}

#[derive(Args, Debug)]
pub struct AnalysisArgs {
    /// two_arm: both sources model the treatment coefficient.
    /// control_arm_only: the second source informs only the control mean.
    #[arg(long, default_value = "two_arm")]
    pub mode: String,
    /// Experimental estimator: diff_in_means, plug_in, or aipw
    /// (cross-fitted, known propensity).
    #[arg(long, default_value = "diff_in_means")]
    pub estimator: String,
    /// Known treatment propensity for the aipw estimator.
    #[arg(long, default_value_t = 0.5)]
    pub propensity: f64,
    /// Fold count: an integer >= 2, or "loo".
    #[arg(long, default_value = "5")]
    pub k: String,
    /// Number of evenly spaced weight grid points on [0, 1].
    #[arg(long, default_value_t = 50)]
    pub grid_size: usize,
    /// Observational loss: squared or ridge.
    #[arg(long, default_value = "squared")]
    pub loss: String,
    /// Ridge penalty (with --loss ridge).
    #[arg(long, default_value_t = 1.0)]
    pub ridge: f64,
    /// Significance level for the test-then-pool baseline.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Also attach bootstrap standard deviations with this many
    /// replicates.
    #[arg(long)]
    pub boot: Option<usize>,
    /// Output path for the result document (stdout when omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub analysis: AnalysisArgs,
    /// Method to resample: cvci, exp_only, obs_only, pool_all, or
    /// ttest_pool.
    #[arg(long, default_value = "cvci")]
    pub method: String,
    /// Bootstrap replicates.
    #[arg(long, default_value_t = 200)]
    pub boot: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScenarioArgs {
    /// Synthetic design: no_covariate or linear.
    #[arg(long, default_value = "no_covariate")]
    pub setting: String,
    /// True effect.
    #[arg(long, default_value_t = 1.0)]
    pub tau_star: f64,
    /// Observational bias.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Noise variance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 100)]
    pub n_exp: usize,
    #[arg(long, default_value_t = 5000)]
    pub n_obs: usize,
    /// Linear-setting coefficient count, intercept included.
    #[arg(long, default_value_t = 6)]
    pub dim: usize,
    /// Treatment probability in the experimental source (linear setting).
    #[arg(long, default_value_t = 0.5)]
    pub prop_exp: f64,
    /// Treatment probability in the observational source (linear setting).
    #[arg(long, default_value_t = 0.5)]
    pub prop_obs: f64,
}

#[derive(Args, Debug)]
pub struct HarnessArgs {
    /// Comma-separated methods to benchmark; defaults to every method
    /// valid in the setting.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Fold count: an integer >= 2, or "loo". Defaults to loo in the
    /// no-covariate setting and 5 in the linear setting.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long, default_value_t = 50)]
    pub grid_size: usize,
    #[arg(long, default_value = "diff_in_means")]
    pub estimator: String,
    #[arg(long, default_value_t = 0.5)]
    pub propensity: f64,
    #[arg(long, default_value = "squared")]
    pub loss: String,
    #[arg(long, default_value_t = 1.0)]
    pub ridge: f64,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub harness: HarnessArgs,
    /// Monte Carlo replicates.
    #[arg(long, default_value_t = 1000)]
    pub runs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scenario: ScenarioArgs,
    #[command(flatten)]
    pub harness: HarnessArgs,
    /// Scenario knob to vary: epsilon, n_obs, or n_exp.
    #[arg(long)]
    pub param: String,
    /// Comma-separated values of the swept parameter (size sweeps take
    /// positive integers). An empty list yields an empty document.
    #[arg(long, value_delimiter = ',')]
    pub values: Vec<f64>,
    /// Monte Carlo replicates per sweep point.
    #[arg(long, default_value_t = 200)]
    pub runs: usize,
    /// Output path for the result document; the CSV companion lands
    /// beside it with a .csv extension.
    #[arg(long)]
    pub out: PathBuf,
}
