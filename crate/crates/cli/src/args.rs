use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "gradcf", version, about = "Counterfactual explanations by gradual construction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train an MLP classifier and write it as a model file
    Train(TrainArgs),
    /// Explain one instance
    Explain(ExplainArgs),
    /// Explain a random test subset and report φ1, φ2, coherence and logit distance
    Evaluate(EvaluateArgs),
    /// Grow an image of a target class from a blank seed image
    Generate(GenerateArgs),
    /// Compare logit matching with probability maximization on the same instances
    Ablate(AblateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// `synth`, `mnist`, or a CSV file. Defaults to the data the model was trained on
    #[arg(long)]
    pub data: Option<String>,
    /// Held-out CSV file (train only)
    #[arg(long)]
    pub test_data: Option<PathBuf>,
    /// CSV file to draw reference instances from (defaults to the model's training file)
    #[arg(long)]
    pub train_data: Option<PathBuf>,
    /// Name of the CSV label column
    #[arg(long)]
    pub label_column: Option<String>,
    /// Synthetic feature count
    #[arg(long)]
    pub d: Option<usize>,
    /// Synthetic class count
    #[arg(long)]
    pub classes: Option<usize>,
    /// Distance of synthetic class means from the origin
    #[arg(long)]
    pub separation: Option<f64>,
    #[arg(long)]
    pub n_per_class: Option<usize>,
    #[arg(long)]
    pub n_test_per_class: Option<usize>,
    /// Directory holding the four MNIST IDX files
    #[arg(long)]
    pub mnist_dir: Option<PathBuf>,
    /// Use only the first N MNIST training images
    #[arg(long)]
    pub train_limit: Option<usize>,
    /// Use only the first N MNIST test images
    #[arg(long)]
    pub test_limit: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Hidden layer widths (default 32,16 for tabular data, 64,32 for images)
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    #[arg(long, default_value_t = 30)]
    pub epochs: usize,
    #[arg(long, default_value_t = 32)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Model file to write
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for the run manifest (defaults to the model file's directory)
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ObjectiveArg {
    Gradual,
    Wachter,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Masked,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankArg {
    Static,
    Recompute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GradientArg {
    Probability,
    Logit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Vector,
    ScalarSum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MembershipArg {
    Predicted,
    Label,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Test,
}

/// Explanation hyperparameters. Unset values take the tabular or image
/// defaults depending on the model's input shape.
#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Target probability that ends the search (default 0.5 tabular, 0.9 image)
    #[arg(long)]
    pub tau: Option<f64>,
    /// Adam steps per composition step (default 500 tabular, 1000 image)
    #[arg(long)]
    pub sigma: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub lambda: f64,
    /// Total-variation weight for images
    #[arg(long, default_value_t = 0.3)]
    pub eta: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta: f64,
    /// Number of reference instances N
    #[arg(long, default_value_t = 100)]
    pub ref_count: usize,
    /// Composition step size
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    /// Image block size as HxW (default 4x4)
    #[arg(long)]
    pub block: Option<String>,
    /// Scope of the wachter objective
    #[arg(long, value_enum, default_value_t = ScopeArg::Full)]
    pub wachter_scope: ScopeArg,
    #[arg(long, value_enum, default_value_t = RankArg::Static)]
    pub rank_mode: RankArg,
    /// Keep composite values inside the feature bounds
    #[arg(long)]
    pub clamp: bool,
    /// Outer-iteration cap (default: number of units)
    #[arg(long)]
    pub max_outer: Option<usize>,
    #[arg(long, value_enum, default_value_t = GradientArg::Probability)]
    pub gradient_of: GradientArg,
    #[arg(long, value_enum, default_value_t = NormArg::Vector)]
    pub logit_norm: NormArg,
    /// Redraw the composite before every composition step
    #[arg(long)]
    pub cold_start: bool,
    #[arg(long, value_enum, default_value_t = MembershipArg::Predicted)]
    pub membership: MembershipArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Row of the instance set to explain
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    pub row: Option<usize>,
    /// Comma-separated raw feature values
    #[arg(long)]
    pub input: Option<String>,
    /// Which split `--row` indexes (synth and mnist)
    #[arg(long, value_enum, default_value_t = SplitArg::Test)]
    pub split: SplitArg,
    /// Target class (default: the class after the predicted one)
    #[arg(long)]
    pub target: Option<usize>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Gradual)]
    pub objective: ObjectiveArg,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "gradcf-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Number of randomly selected test instances
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "gradual,wachter,ablation")]
    pub objectives: Vec<ObjectiveArg>,
    /// Coherence neighbourhood radius in changed features
    #[arg(long, default_value_t = 3)]
    pub epsilon: usize,
    /// Fixed target class (default: the class after the predicted one)
    #[arg(long)]
    pub target: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "gradcf-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub target: usize,
    /// Pixel value of the seed image
    #[arg(long, default_value_t = 0.0)]
    pub fill: f64,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "gradcf-out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long)]
    pub target: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[arg(long, default_value = "gradcf-out")]
    pub out_dir: PathBuf,
}
