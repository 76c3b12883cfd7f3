use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use runlmc::Method;
use serde::Serialize;

use crate::THREADS_ENV;

#[derive(Debug, Parser, Serialize)]
#[command(name = "runlmc", version, about = "Running-performance prediction by local low-rank matrix completion")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Root seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = THREADS_ENV, default_value_t = 0)]
    pub threads: usize,
    /// JSON object of flag values that override the command line.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Primary TSV output; the JSON companion goes next to it. Stdout if absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Parse, clean, collate and subsample raw exports into a table.
    Ingest(IngestArgs),
    /// Collate raw exports into a table without cleaning.
    Collate(CollateArgs),
    /// Apply the cleaning rules to raw exports.
    Clean(CleanArgs),
    /// Filter the rows of a table.
    Subsample(SubsampleArgs),
    /// Predict one entry.
    Predict(PredictArgs),
    /// Fill every missing entry.
    Impute(ImputeArgs),
    /// Leave-one-out validation of one method.
    Validate(ValidateArgs),
    /// Paired comparison of several methods on shared holdouts.
    Compare(CompareArgs),
    /// Low-rank components and per-athlete coefficients.
    Components(ComponentsArgs),
    /// Per-athlete percentiles, preferred distance and training standard.
    Summary(SummaryArgs),
    /// Generate a synthetic population.
    Synth(SynthArgs),
    /// Distance at which two athletes are predicted equally fast.
    FairRace(FairRaceArgs),
    /// Perturbation response of rank-2 predictions.
    Pivot(PivotArgs),
    /// Event with the athlete's best predicted percentile.
    Optimal(OptimalArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Ingest(_) => "ingest",
            Command::Collate(_) => "collate",
            Command::Clean(_) => "clean",
            Command::Subsample(_) => "subsample",
            Command::Predict(_) => "predict",
            Command::Impute(_) => "impute",
            Command::Validate(_) => "validate",
            Command::Compare(_) => "compare",
            Command::Components(_) => "components",
            Command::Summary(_) => "summary",
            Command::Synth(_) => "synth",
            Command::FairRace(_) => "fair-race",
            Command::Pivot(_) => "pivot",
            Command::Optimal(_) => "optimal",
        }
    }
}

fn method_name(s: &str) -> Result<String, String> {
    s.parse::<Method>().map(|_| s.to_string()).map_err(|e| e.to_string())
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Param {
    Time,
    Normalized,
    LogTime,
    Speed,
}

impl From<Param> for runlmc::Parameterization {
    fn from(p: Param) -> Self {
        match p {
            Param::Time => runlmc::Parameterization::Time,
            Param::Normalized => runlmc::Parameterization::Normalized,
            Param::LogTime => runlmc::Parameterization::LogTime,
            Param::Speed => runlmc::Parameterization::Speed,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    AllRemaining,
    CausalPast,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CollateModeArg {
    Best,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenderArg {
    M,
    F,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scaling {
    Singular,
    PureU,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    None,
    Uniform,
    Consecutive,
    Reference,
}

/// Table input and the parameterization to work in.
#[derive(Debug, Args, Serialize)]
pub struct TableInput {
    /// Table TSV; its JSON sidecar must sit next to it.
    #[arg(long)]
    pub input: PathBuf,
    /// Parameterization the table is converted to before use.
    #[arg(long, value_enum, default_value_t = Param::LogTime)]
    pub param: Param,
}

/// Method selection and its tuning flags.
#[derive(Debug, Args, Serialize)]
pub struct MethodArgs {
    /// mean|knn|riegel|powerlaw|ind-powerlaw|purdy|em|nuclear|lmc1..lmc4
    #[arg(long, default_value = "lmc2", value_parser = method_name)]
    pub method: String,
    /// Bagged source-event selection for LMC.
    #[arg(long)]
    pub bagged: bool,
    /// Circuits per LMC estimate.
    #[arg(long)]
    pub circuits: Option<usize>,
    /// Neighbours for k-NN.
    #[arg(long)]
    pub knn_k: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct RawInput {
    /// Athlete CSV: athlete_id,gender,birth_date.
    #[arg(long)]
    pub athletes: PathBuf,
    /// Attempt CSV: athlete_id,event,date,performance.
    #[arg(long)]
    pub events: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CleaningArgs {
    /// Drop attempts slower than this multiple of the event median.
    #[arg(long, default_value_t = 3.0)]
    pub slow_factor: f64,
    /// Drop birth dates implying a younger age at any attempt.
    #[arg(long, default_value_t = 9)]
    pub min_age: u32,
    /// Birth date treated as unknown.
    #[arg(long, default_value = "1900-01-01")]
    pub sentinel_birth_date: String,
    /// Attempt dates treated as unknown.
    #[arg(long, value_delimiter = ',', default_value = "1901-01-01,2038-08-20")]
    pub sentinel_dates: Vec<String>,
    /// World-record history JSON replacing the bundled one.
    #[arg(long)]
    pub world_records: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubsampleFlags {
    #[arg(long, value_enum)]
    pub gender: Option<GenderArg>,
    /// Youngest age in whole years at the best event.
    #[arg(long)]
    pub age_min: Option<u32>,
    /// Oldest age in whole years at the best event.
    #[arg(long)]
    pub age_max: Option<u32>,
    /// Minimum number of attempted events.
    #[arg(long, default_value_t = 0)]
    pub min_events: usize,
    #[arg(long, default_value_t = 0.0)]
    pub percentile_low: f64,
    #[arg(long, default_value_t = 100.0)]
    pub percentile_high: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[command(flatten)]
    pub raw: RawInput,
    #[command(flatten)]
    pub cleaning: CleaningArgs,
    #[command(flatten)]
    pub subsample: SubsampleFlags,
    #[arg(long, value_enum, default_value_t = CollateModeArg::Best)]
    pub collate: CollateModeArg,
    /// Drop the 5% of rows with the widest percentile spread.
    #[arg(long)]
    pub remove_outliers: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CollateArgs {
    #[command(flatten)]
    pub raw: RawInput,
    #[arg(long, value_enum, default_value_t = CollateModeArg::Best)]
    pub mode: CollateModeArg,
    #[arg(long)]
    pub remove_outliers: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct CleanArgs {
    #[command(flatten)]
    pub raw: RawInput,
    #[command(flatten)]
    pub cleaning: CleaningArgs,
    /// Cleaned athlete CSV; defaults next to `--out`.
    #[arg(long)]
    pub athletes_out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SubsampleArgs {
    /// Table TSV; its JSON sidecar must sit next to it.
    #[arg(long)]
    pub input: PathBuf,
    #[command(flatten)]
    pub subsample: SubsampleFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct PredictArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub row: usize,
    /// Event label or alias, e.g. `marathon`, `1500m`.
    #[arg(long)]
    pub event: String,
}

#[derive(Debug, Args, Serialize)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub method: MethodArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidationFlags {
    #[arg(long, default_value_t = 1000)]
    pub holdouts: usize,
    #[arg(long, value_enum, default_value_t = Mode::AllRemaining)]
    pub mode: Mode,
    /// Bootstrap replicates for standard errors.
    #[arg(long, default_value_t = 1000)]
    pub boot: usize,
    /// Parameterization residuals are measured in.
    #[arg(long, value_enum, default_value_t = Param::LogTime)]
    pub metric: Param,
    /// Only hold out entries within this fastest fraction of their event.
    #[arg(long)]
    pub fastest: Option<f64>,
    /// Only hold out entries of athletes with at least this many other events.
    #[arg(long)]
    pub min_other_events: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub method: MethodArgs,
    #[command(flatten)]
    pub validation: ValidationFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// Comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true, value_parser = method_name)]
    pub methods: Vec<String>,
    /// Method the others are tested against; defaults to the first.
    #[arg(long, value_parser = method_name)]
    pub reference: Option<String>,
    #[arg(long)]
    pub bagged: bool,
    #[arg(long)]
    pub circuits: Option<usize>,
    #[arg(long)]
    pub knn_k: Option<usize>,
    #[command(flatten)]
    pub validation: ValidationFlags,
}

#[derive(Debug, Args, Serialize)]
pub struct ComponentsArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[arg(long, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, value_enum, default_value_t = Scaling::Singular)]
    pub scaling: Scaling,
}

#[derive(Debug, Args, Serialize)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// Append the three-number summary of a rank-3 model.
    #[arg(long)]
    pub three_number: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1000)]
    pub athletes: usize,
    /// Noise standard deviation in log-time.
    #[arg(long, default_value_t = 0.01)]
    pub noise: f64,
    #[arg(long, value_enum, default_value_t = Scheme::None)]
    pub scheme: Scheme,
    /// Missing entries per row (uniform) or present window length (consecutive).
    #[arg(long, default_value_t = 6)]
    pub k: usize,
    /// Also write the complete table here.
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FairRaceArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub a: usize,
    #[arg(long)]
    pub b: usize,
    #[arg(long, default_value_t = 200)]
    pub boot: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct PivotArgs {
    #[command(flatten)]
    pub table: TableInput,
    /// Marathon benchmark in seconds.
    #[arg(long)]
    pub benchmark: f64,
    /// Perturbations; defaults to -0.10..=0.10 in steps of 0.01.
    #[arg(long, value_delimiter = ',')]
    pub epsilons: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimalArgs {
    #[command(flatten)]
    pub table: TableInput,
    #[command(flatten)]
    pub method: MethodArgs,
    #[arg(long)]
    pub athlete: usize,
}
