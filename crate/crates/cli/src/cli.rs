//! Argument definitions and how flags override a [`RunConfig`].

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "bscope",
    version,
    about = "Generate borderline instances near a classifier's pairwise decision boundary and measure its complexity"
)]
pub struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train and checkpoint a classifier.
    Train(TrainArgs),
    /// Generate borderline instances for a class pair in both directions.
    Deepdig(DeepdigArgs),
    /// Refine random (rpbs) or embedding-nearest (epbs) pairs for comparison.
    Baseline(BaselineArgs),
    /// Compute IDC, EDC1, EDC2 and the PCA projection for one pair.
    Characterize(CharacterizeArgs),
    /// Generate and characterize every class pair of a model.
    CharacterizeAll(CharacterizeAllArgs),
    /// Render an image grid or a PCA scatter plot.
    Viz(VizArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// mnist, fashion-mnist or synthetic.
    #[arg(long)]
    pub dataset: Option<String>,
    /// Directory holding the IDX files, or a parent with one subdirectory per
    /// dataset. Falls back to $BSCOPE_DATA_DIR.
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// mnist_cnn, mnist_fcn or synthetic_2d.
    #[arg(long)]
    pub model: Option<String>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdvArgs {
    /// Weight of the classification term in the autoencoder objective.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Score-gap acceptance threshold of the bisection.
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Autoencoder training steps.
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub ae_batch_size: Option<usize>,
    #[arg(long)]
    pub ae_lr: Option<f64>,
    /// Use only the first N source-class training samples.
    #[arg(long)]
    pub max_source: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DeepdigArgs {
    #[arg(long)]
    pub model_ckpt: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Source class (name or index).
    #[arg(long)]
    pub source: Option<String>,
    /// Target class (name or index).
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    pub adv: AdvArgs,
    /// Run once per listed alpha, each into `<out>/alpha-<value>/`.
    #[arg(long, value_delimiter = ',')]
    pub alpha_sweep: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum MethodArg {
    Rpbs,
    Epbs,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long, value_enum)]
    pub method: Option<MethodArg>,
    #[arg(long)]
    pub model_ckpt: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub target: Option<String>,
    /// Pairs per direction; defaults to the pair counts in `<out>/stats.json`.
    #[arg(long)]
    pub n_pairs: Option<usize>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run directory; results go to `<out>/baseline-<method>/`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CharArgs {
    /// Interpolation points per trajectory.
    #[arg(long)]
    pub m: Option<usize>,
    /// Partners per borderline instance.
    #[arg(long)]
    pub k: Option<usize>,
    /// Average IDC over this many seeded anchors instead of all instances.
    #[arg(long)]
    pub idc_anchors: Option<usize>,
    #[arg(long)]
    pub svm_gamma: Option<f64>,
    #[arg(long)]
    pub svm_epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CharacterizeArgs {
    #[arg(long)]
    pub model_ckpt: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    /// Directory containing `borderline.jsonl`.
    #[arg(long)]
    pub borderline_dir: Option<PathBuf>,
    /// Class pair as `a,b`; defaults to the pair in the run's `stats.json`.
    #[arg(long)]
    pub pair: Option<String>,
    #[command(flatten)]
    pub char: CharArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to `<borderline-dir>/characterization`.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CharacterizeAllArgs {
    #[arg(long)]
    pub model_ckpt: Option<PathBuf>,
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub adv: AdvArgs,
    #[command(flatten)]
    pub char: CharArgs,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum VizKind {
    Grid,
    Scatter,
}

#[derive(Debug, Args)]
pub struct VizArgs {
    /// `borderline.jsonl` (or its directory) for grids, a PCA CSV for scatter plots.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<VizKind>,
    /// Tile size `HxW` for grids; defaults to a square inferred from the pixel count.
    #[arg(long)]
    pub shape: Option<String>,
    /// Output PNG path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_opt<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

impl DataArgs {
    fn apply(self, cfg: &mut RunConfig) {
        set_opt(&mut cfg.dataset, self.dataset);
        set_opt(&mut cfg.data_dir, self.data_dir);
    }
}

impl AdvArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let d = &mut cfg.deepdig;
        set(&mut d.advgen.alpha, self.alpha);
        set(&mut d.refine.beta, self.beta);
        set(&mut d.refine.max_iter, self.max_iter);
        set(&mut d.advgen.steps, self.steps);
        set(&mut d.advgen.batch_size, self.ae_batch_size);
        set(&mut d.advgen.lr, self.ae_lr);
        set_opt(&mut d.max_source_samples, self.max_source);
    }
}

impl CharArgs {
    fn apply(self, cfg: &mut RunConfig) {
        let c = &mut cfg.characterize;
        set(&mut c.idc.m, self.m);
        set(&mut c.idc.k, self.k);
        set_opt(&mut c.idc.max_anchors, self.idc_anchors);
        set(&mut c.svm.gamma, self.svm_gamma);
        set(&mut c.svm.epochs, self.svm_epochs);
    }
}

fn set_char_seed(cfg: &mut RunConfig, seed: Option<u64>) {
    if let Some(s) = seed {
        cfg.characterize.idc.seed = s;
        cfg.characterize.svm.seed = s;
    }
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Train(_) => "train",
            Command::Deepdig(_) => "deepdig",
            Command::Baseline(_) => "baseline",
            Command::Characterize(_) => "characterize",
            Command::CharacterizeAll(_) => "characterize-all",
            Command::Viz(_) => "viz",
        }
    }

    /// Overlays the flags given on the command line onto `cfg`.
    pub fn apply(self, cfg: &mut RunConfig) {
        cfg.command = self.name().to_string();
        match self {
            Command::Train(a) => {
                set(&mut cfg.model, a.model);
                a.data.apply(cfg);
                set(&mut cfg.train.epochs, a.epochs);
                set(&mut cfg.train.batch_size, a.batch_size);
                set(&mut cfg.train.lr, a.lr);
                set(&mut cfg.train.seed, a.seed);
                set_opt(&mut cfg.out, a.out);
            }
            Command::Deepdig(a) => {
                set_opt(&mut cfg.model_ckpt, a.model_ckpt);
                a.data.apply(cfg);
                set_opt(&mut cfg.source, a.source);
                set_opt(&mut cfg.target, a.target);
                a.adv.apply(cfg);
                set(&mut cfg.alpha_sweep, a.alpha_sweep);
                set(&mut cfg.deepdig.advgen.seed, a.seed);
                set_opt(&mut cfg.out, a.out);
            }
            Command::Baseline(a) => {
                set_opt(
                    &mut cfg.method,
                    a.method.map(|m| match m {
                        MethodArg::Rpbs => "rpbs".to_string(),
                        MethodArg::Epbs => "epbs".to_string(),
                    }),
                );
                set_opt(&mut cfg.model_ckpt, a.model_ckpt);
                a.data.apply(cfg);
                set_opt(&mut cfg.source, a.source);
                set_opt(&mut cfg.target, a.target);
                set_opt(&mut cfg.n_pairs, a.n_pairs);
                set(&mut cfg.deepdig.refine.beta, a.beta);
                set(&mut cfg.deepdig.refine.max_iter, a.max_iter);
                set(&mut cfg.baseline_seed, a.seed);
                set_opt(&mut cfg.out, a.out);
            }
            Command::Characterize(a) => {
                set_opt(&mut cfg.model_ckpt, a.model_ckpt);
                a.data.apply(cfg);
                set_opt(&mut cfg.borderline_dir, a.borderline_dir);
                set_opt(&mut cfg.pair, a.pair);
                a.char.apply(cfg);
                set_char_seed(cfg, a.seed);
                set_opt(&mut cfg.out, a.out);
            }
            Command::CharacterizeAll(a) => {
                set_opt(&mut cfg.model_ckpt, a.model_ckpt);
                a.data.apply(cfg);
                a.adv.apply(cfg);
                a.char.apply(cfg);
                if let Some(s) = a.seed {
                    cfg.deepdig.advgen.seed = s;
                }
                set_char_seed(cfg, a.seed);
                set_opt(&mut cfg.out, a.out);
            }
            Command::Viz(a) => {
                set_opt(&mut cfg.input, a.input);
                set_opt(
                    &mut cfg.kind,
                    a.kind.map(|k| match k {
                        VizKind::Grid => "grid".to_string(),
                        VizKind::Scatter => "scatter".to_string(),
                    }),
                );
                set_opt(&mut cfg.shape, a.shape);
                set_opt(&mut cfg.out, a.out);
            }
        }
    }
}
