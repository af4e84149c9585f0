use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "abac-mine", version, about = "Mine ABAC policies from access logs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mine a policy from attribute data and a log or log summary.
    Mine(MineArgs),
    /// Generate a synthetic policy and its attribute data.
    Synth(SynthArgs),
    /// Sample a log or log summary from a policy.
    Genlog(GenlogArgs),
    /// Compare a mined policy with the original one.
    Eval(EvalArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algo {
    Seeded,
    Atm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Qrul,
    Qrulfreq,
    Qrulilp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NoiseMetricArg {
    Qfreq,
    Qrulfreq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValidityArg {
    Strict,
    Relaxed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Ratios {
    /// Uniform rule, user, resource and operation distributions.
    Uniform,
    /// Distributions with fixed max/min probability ratios.
    Skewed,
}

#[derive(Debug, Args)]
pub struct MineArgs {
    /// Attribute data (JSON).
    #[arg(long)]
    pub data: PathBuf,
    /// Log file `user,resource,op,timestamp`.
    #[arg(long, conflicts_with = "summary", required_unless_present = "summary")]
    pub log: Option<PathBuf>,
    /// Log summary file `user,resource,op,freq`.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "seeded")]
    pub algo: Algo,
    /// Rule quality metric of the seeded miner.
    #[arg(long, value_enum, default_value = "qrul")]
    pub metric: Metric,
    /// Estimated log completeness; sets the default over-assignment weights.
    #[arg(long, default_value_t = 1.0)]
    pub completeness_estimate: f64,
    /// Policy over-assignment weight (overrides the estimate).
    #[arg(long)]
    pub wo: Option<f64>,
    /// Rule over-assignment weight (overrides the estimate).
    #[arg(long)]
    pub wo_rule: Option<f64>,
    /// Under-assignment weight.
    #[arg(long)]
    pub wu: Option<f64>,
    /// Drop rules whose log share falls below this threshold.
    #[arg(long)]
    pub noise_tau: Option<f64>,
    #[arg(long, value_enum, default_value = "qfreq")]
    pub noise_metric: NoiseMetricArg,
    #[arg(long, value_enum, default_value = "strict")]
    pub validity: ValidityArg,
    /// Seed for sampling and annealing.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Topic count; searched upward from 1 when absent.
    #[arg(long)]
    pub k: Option<usize>,
    /// Minimum Q_pol gain that continues the topic-count search.
    #[arg(long, default_value_t = 1.0)]
    pub k_threshold: f64,
    #[arg(long, default_value_t = 200)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 10.0)]
    pub t0: f64,
    #[arg(long, default_value_t = 0.95)]
    pub gamma: f64,
    #[arg(long, default_value_t = 1)]
    pub epsilon: usize,
    #[arg(long, default_value_t = 200)]
    pub gibbs_iterations: usize,
    /// Author bounds `b_u,b_r,b_c,b_s`.
    #[arg(long, default_value = "2,2,2,1")]
    pub bounds: String,
    #[arg(long)]
    pub author_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 10)]
    pub nrule: usize,
    #[arg(long, default_value_t = 5)]
    pub users_per_rule: usize,
    #[arg(long, default_value_t = 5)]
    pub resources_per_rule: usize,
    #[arg(long, default_value_t = 4)]
    pub nops: usize,
    #[arg(long, default_value_t = 3)]
    pub single_families: usize,
    #[arg(long, default_value_t = 1)]
    pub multi_families: usize,
    #[arg(long, default_value_t = 6)]
    pub values_per_attr: usize,
    /// Percent chance that an unconstrained attribute is unknown.
    #[arg(long, default_value_t = 5)]
    pub bottom_percent: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenlogArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub completeness: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write a summary instead of individual entries.
    #[arg(long)]
    pub summary: bool,
    #[arg(long, value_enum, default_value = "uniform")]
    pub ratios: Ratios,
    #[arg(long, default_value_t = abac_logmine::synth::DEFAULT_MAX_ENTRIES)]
    pub max_entries: usize,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub original: PathBuf,
    #[arg(long)]
    pub mined: PathBuf,
    /// Also write the report and a manifest here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}
