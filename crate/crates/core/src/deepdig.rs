//! Borderline instance generation: targeted adversarial autoencoder,
//! reverse adversarial autoencoder and bisection refinement, run in both
//! directions of a class pair.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{split_indices, LabeledDataset, SplitSpec};
use crate::error::{Error, Result};
use crate::io::{write_json_atomic, write_jsonl_atomic};
use crate::models::ClassifierModel;
use crate::netcore::loss::{mse_with_grad, one_hot, softmax_cross_entropy_with_grad};
use crate::netcore::{adam_step, AdamConfig, AdamState, Gradients, LayerSpec, Network};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::viz::save_grid;

/// Images written per grid.
pub const GRID_LIMIT: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdvGenConfig {
    pub alpha: f64,
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub decay: f64,
    pub decay_interval: u64,
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for AdvGenConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            steps: 5000,
            batch_size: 128,
            lr: 0.01,
            decay: 0.95,
            decay_interval: 1000,
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

impl AdvGenConfig {
    fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch size must be positive".into()));
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "validation fraction must lie in (0, 1), got {}",
                self.validation_fraction
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RefineConfig {
    pub beta: f64,
    pub max_iter: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            beta: 1e-4,
            max_iter: 100,
        }
    }
}

/// Fully connected autoencoder over flattened inputs with a sigmoid output.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    net: Network,
}

impl Autoencoder {
    pub fn new(dim: usize, seed: u64) -> Result<Self> {
        let layers = vec![
            LayerSpec::dense(dim, 100),
            LayerSpec::Relu,
            LayerSpec::dense(100, 50),
            LayerSpec::Relu,
            LayerSpec::dense(50, dim),
            LayerSpec::Sigmoid,
        ];
        Ok(Self {
            net: Network::new(vec![dim], layers, seed)?,
        })
    }

    /// The untrained autoencoder that training with `cfg` starts from.
    pub fn initial(dim: usize, cfg: &AdvGenConfig) -> Result<Self> {
        Self::new(dim, Rng::fork(cfg.seed, 1).next_u64())
    }

    pub fn from_network(net: Network) -> Result<Self> {
        if net.input_shape().len() != 1 || net.input_shape() != net.output_shape() {
            return Err(Error::Shape(format!(
                "autoencoder maps {:?} to {:?}",
                net.input_shape(),
                net.output_shape()
            )));
        }
        Ok(Self { net })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn dim(&self) -> usize {
        self.net.input_shape()[0]
    }

    /// Maps `[B, dim]` rows to `[B, dim]` reconstructions.
    pub fn apply(&self, batch: &Tensor) -> Result<Tensor> {
        self.net.predict(batch)
    }
}

/// Per-batch objective `mse(x, A(x)) + alpha * CE(f(A(x)), target)` and its
/// parameter gradient. The classifier is only read.
pub fn adversarial_objective(
    classifier: &ClassifierModel,
    ae: &Autoencoder,
    batch: &Tensor,
    target: usize,
    alpha: f64,
) -> Result<(f64, Gradients)> {
    let acts = ae.net.forward(batch)?;
    let recon = acts.last().unwrap();
    let (mse, mut grad) = mse_with_grad(recon, batch)?;
    let mut loss = mse;
    if alpha != 0.0 {
        let x = classifier.as_input(recon.clone())?;
        let cacts = classifier.forward(&x)?;
        let target = one_hot(&vec![target; batch.batch_size()], classifier.num_classes())?;
        let (ce, logit_grad) = softmax_cross_entropy_with_grad(cacts.last().unwrap(), &target)?;
        let dx = classifier.input_gradient(&x, &cacts, &logit_grad)?;
        for (g, d) in grad.data_mut().iter_mut().zip(dx.data()) {
            *g = (*g as f64 + alpha * *d as f64) as f32;
        }
        loss += alpha * ce;
    }
    let grads = ae.net.backward(batch, &acts, &grad)?;
    Ok((loss, grads))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSummary {
    pub target: usize,
    pub train_size: usize,
    pub validation_size: usize,
    /// Percentage of held-out inputs mapped to the target class.
    pub validation_success_rate: f64,
    pub first_loss: f64,
    pub final_loss: f64,
}

#[derive(Debug, Clone)]
pub struct ComponentResult {
    pub autoencoder: Autoencoder,
    pub summary: ComponentSummary,
    /// Reconstructions of the first validation inputs.
    pub samples: Tensor,
}

fn flatten_rows(images: &Tensor) -> Result<Tensor> {
    let n = images.batch_size();
    let w = images.row_width();
    images.clone().reshape(vec![n, w])
}

/// Apply the autoencoder in chunks.
fn apply_all(ae: &Autoencoder, inputs: &Tensor) -> Result<Tensor> {
    let mut out = Vec::with_capacity(inputs.len());
    for start in (0..inputs.batch_size()).step_by(crate::models::EVAL_CHUNK) {
        let end = (start + crate::models::EVAL_CHUNK).min(inputs.batch_size());
        out.extend_from_slice(ae.apply(&inputs.slice_rows(start, end)?)?.data());
    }
    Tensor::new(inputs.shape().to_vec(), out)
}

/// Trains an autoencoder on `inputs` (`[N, dim]`) toward class `target` and
/// reports its held-out success rate.
pub fn train_adversarial_autoencoder(
    classifier: &ClassifierModel,
    inputs: &Tensor,
    target: usize,
    cfg: &AdvGenConfig,
) -> Result<ComponentResult> {
    cfg.validate()?;
    if target >= classifier.num_classes() {
        return Err(Error::InvalidArgument(format!("class {target} out of range")));
    }
    let n = inputs.batch_size();
    if n < 2 {
        return Err(Error::InsufficientSamples(format!(
            "autoencoder training needs at least 2 inputs, got {n}"
        )));
    }
    let dim = classifier.input_len();
    if inputs.row_width() != dim {
        return Err(Error::Shape(format!(
            "inputs of width {} for a classifier taking {dim}",
            inputs.row_width()
        )));
    }
    let inputs = flatten_rows(inputs)?;
    let (train_idx, val_idx) =
        split_indices(n, SplitSpec::new(1.0 - cfg.validation_fraction, cfg.seed)?)?;
    let train = inputs.select_rows(&train_idx)?;
    let val = inputs.select_rows(&val_idx)?;

    let mut ae = Autoencoder::initial(dim, cfg)?;
    let mut state = AdamState::new(
        &ae.net,
        AdamConfig::with_schedule(cfg.lr, cfg.decay, cfg.decay_interval),
    );
    let mut rng = Rng::fork(cfg.seed, 2);
    let mut order = rng.permutation(train_idx.len());
    let mut cursor = 0;
    let (mut first_loss, mut final_loss) = (f64::NAN, f64::NAN);
    for step in 0..cfg.steps {
        if cursor >= order.len() {
            order = rng.permutation(train_idx.len());
            cursor = 0;
        }
        let end = (cursor + cfg.batch_size).min(order.len());
        let batch = train.select_rows(&order[cursor..end])?;
        cursor = end;
        let (loss, grads) = adversarial_objective(classifier, &ae, &batch, target, cfg.alpha)?;
        if !loss.is_finite() {
            return Err(Error::Numerical(format!("autoencoder loss diverged at step {step}")));
        }
        adam_step(&mut ae.net, &grads, &mut state)?;
        if step == 0 {
            first_loss = loss;
        }
        final_loss = loss;
        if (step + 1) % 1000 == 0 {
            log::info!("autoencoder toward {target}: step {}/{} loss {loss:.5}", step + 1, cfg.steps);
        }
    }

    let recon = apply_all(&ae, &val)?;
    let preds = classifier.predict_all(&recon)?;
    let hits = preds.iter().filter(|&&p| p == target).count();
    let keep = val.batch_size().min(GRID_LIMIT);
    Ok(ComponentResult {
        samples: recon.slice_rows(0, keep)?,
        summary: ComponentSummary {
            target,
            train_size: train_idx.len(),
            validation_size: val_idx.len(),
            validation_success_rate: 100.0 * hits as f64 / val_idx.len() as f64,
            first_loss,
            final_loss,
        },
        autoencoder: ae,
    })
}

/// Targeted adversarial autoencoder mapping class-`s` samples toward `t`.
pub fn train_component1(
    classifier: &ClassifierModel,
    source: &Tensor,
    s: usize,
    t: usize,
    cfg: &AdvGenConfig,
) -> Result<ComponentResult> {
    if s == t {
        return Err(Error::InvalidArgument(format!("source and target are both class {s}")));
    }
    train_adversarial_autoencoder(classifier, source, t, cfg)
}

/// Reverse autoencoder mapping successful adversarial examples back to `s`.
pub fn train_component2(
    classifier: &ClassifierModel,
    adv_t: &Tensor,
    s: usize,
    cfg: &AdvGenConfig,
) -> Result<ComponentResult> {
    if adv_t.is_empty() {
        return Err(Error::EmptySelection("no successful adversarial examples".into()));
    }
    train_adversarial_autoencoder(classifier, adv_t, s, cfg)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BorderlinePair {
    pub origin_index: usize,
    pub adv_t: Vec<f32>,
    pub adv_s: Vec<f32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BorderlineInstance {
    pub origin_index: usize,
    /// Ordered `(s, t)`: the instance was approached from class `s`.
    pub direction: (usize, usize),
    pub gap: f64,
    pub predicted: usize,
    pub iterations: usize,
    pub pixels: Vec<f32>,
}

impl BorderlineInstance {
    pub fn source(&self) -> usize {
        self.direction.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailReason {
    RegionEscape,
    NoConvergence,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RefineOutcome {
    Borderline(BorderlineInstance),
    Fail(FailReason),
}

/// Score gap `|f_s(x) - f_t(x)|` and predicted class of one input.
pub fn score_gap(classifier: &ClassifierModel, x: &[f32], s: usize, t: usize) -> Result<(f64, usize)> {
    let (pred, scores) = classifier.classify(x)?;
    Ok(((scores[s] - scores[t]).abs(), pred))
}

/// Bisection on the segment from `adv_s` (class `s`) to `adv_t` (class `t`).
/// `visit` sees every midpoint evaluated.
pub fn refine_pair_traced(
    classifier: &ClassifierModel,
    pair: &BorderlinePair,
    s: usize,
    t: usize,
    cfg: &RefineConfig,
    mut visit: impl FnMut(&[f32]),
) -> Result<RefineOutcome> {
    if s == t {
        return Err(Error::InvalidArgument(format!("source and target are both class {s}")));
    }
    let cs = classifier.predict_class(&pair.adv_s)?;
    let ct = classifier.predict_class(&pair.adv_t)?;
    if cs != s || ct != t {
        return Err(Error::InvalidArgument(format!(
            "pair endpoints classified ({cs}, {ct}), expected ({s}, {t})"
        )));
    }
    let mut left = pair.adv_s.clone();
    let mut right = pair.adv_t.clone();
    let mut mid = vec![0.0f32; left.len()];
    for iter in 1..=cfg.max_iter {
        for ((m, l), r) in mid.iter_mut().zip(&left).zip(&right) {
            *m = 0.5 * (l + r);
        }
        visit(&mid);
        let (pred, scores) = classifier.classify(&mid)?;
        if pred == s {
            left.copy_from_slice(&mid);
        } else if pred == t {
            right.copy_from_slice(&mid);
        } else {
            return Ok(RefineOutcome::Fail(FailReason::RegionEscape));
        }
        let gap = (scores[s] - scores[t]).abs();
        if gap < cfg.beta {
            return Ok(RefineOutcome::Borderline(BorderlineInstance {
                origin_index: pair.origin_index,
                direction: (s, t),
                gap,
                predicted: pred,
                iterations: iter,
                pixels: mid,
            }));
        }
    }
    Ok(RefineOutcome::Fail(FailReason::NoConvergence))
}

pub fn refine_pair(
    classifier: &ClassifierModel,
    pair: &BorderlinePair,
    s: usize,
    t: usize,
    cfg: &RefineConfig,
) -> Result<RefineOutcome> {
    refine_pair_traced(classifier, pair, s, t, cfg, |_| {})
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub pairs_fed: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_gap: f64,
    pub region_escapes: usize,
    pub no_convergence: usize,
}

impl RunStats {
    pub fn from_outcomes(outcomes: &[RefineOutcome]) -> Self {
        let mut stats = RunStats {
            pairs_fed: outcomes.len(),
            successes: 0,
            success_rate: 0.0,
            mean_gap: 0.0,
            region_escapes: 0,
            no_convergence: 0,
        };
        let mut gap_sum = 0.0;
        for o in outcomes {
            match o {
                RefineOutcome::Borderline(b) => {
                    stats.successes += 1;
                    gap_sum += b.gap;
                }
                RefineOutcome::Fail(FailReason::RegionEscape) => stats.region_escapes += 1,
                RefineOutcome::Fail(FailReason::NoConvergence) => stats.no_convergence += 1,
            }
        }
        stats.finish(gap_sum);
        stats
    }

    fn finish(&mut self, gap_sum: f64) {
        self.success_rate = if self.pairs_fed == 0 {
            0.0
        } else {
            100.0 * self.successes as f64 / self.pairs_fed as f64
        };
        self.mean_gap = if self.successes == 0 {
            0.0
        } else {
            gap_sum / self.successes as f64
        };
    }

    pub fn combine(parts: &[RunStats]) -> Self {
        let mut out = RunStats {
            pairs_fed: 0,
            successes: 0,
            success_rate: 0.0,
            mean_gap: 0.0,
            region_escapes: 0,
            no_convergence: 0,
        };
        let mut gap_sum = 0.0;
        for p in parts {
            out.pairs_fed += p.pairs_fed;
            out.successes += p.successes;
            out.region_escapes += p.region_escapes;
            out.no_convergence += p.no_convergence;
            gap_sum += p.mean_gap * p.successes as f64;
        }
        out.finish(gap_sum);
        out
    }
}

/// Refines every pair, returning instances in pair order and the stats.
pub fn refine_all(
    classifier: &ClassifierModel,
    pairs: &[BorderlinePair],
    s: usize,
    t: usize,
    cfg: &RefineConfig,
) -> Result<(Vec<BorderlineInstance>, RunStats)> {
    let outcomes = pairs
        .iter()
        .map(|p| refine_pair(classifier, p, s, t, cfg))
        .collect::<Result<Vec<_>>>()?;
    let stats = RunStats::from_outcomes(&outcomes);
    let instances = outcomes
        .into_iter()
        .filter_map(|o| match o {
            RefineOutcome::Borderline(b) => Some(b),
            RefineOutcome::Fail(_) => None,
        })
        .collect();
    Ok((instances, stats))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeepDigConfig {
    pub advgen: AdvGenConfig,
    pub refine: RefineConfig,
    /// Uses only the first N class-`s` samples when set.
    pub max_source_samples: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct DirectionResult {
    pub s: usize,
    pub t: usize,
    pub component1: ComponentSummary,
    /// Absent when component I produced no adversarial example.
    pub component2: Option<ComponentSummary>,
    /// Successful adversarial examples `A1(x_s)` classified as `t`.
    pub adv_t: Vec<Vec<f32>>,
    /// Reverse images `A2(adv_t)` of every fed pair.
    pub adv_s: Vec<Vec<f32>>,
    pub instances: Vec<BorderlineInstance>,
    pub stats: RunStats,
}

/// Indices of the samples labelled `class`, truncated to `limit`.
pub fn class_indices(ds: &LabeledDataset, class: usize, limit: Option<usize>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == class).collect();
    if let Some(limit) = limit {
        idx.truncate(limit);
    }
    idx
}

fn component_seed(seed: u64, s: usize, t: usize, component: u64) -> u64 {
    Rng::fork(seed, ((s as u64) << 32) | ((t as u64) << 8) | component).next_u64()
}

/// Components I, II and III for the ordered pair `(s, t)` over the class-`s`
/// training samples of `train`.
pub fn run_direction(
    classifier: &ClassifierModel,
    train: &LabeledDataset,
    s: usize,
    t: usize,
    cfg: &DeepDigConfig,
) -> Result<DirectionResult> {
    if s == t {
        return Err(Error::InvalidArgument(format!("source and target are both class {s}")));
    }
    for c in [s, t] {
        if c >= classifier.num_classes() {
            return Err(Error::InvalidArgument(format!("class {c} out of range")));
        }
    }
    let origin = class_indices(train, s, cfg.max_source_samples);
    if origin.is_empty() {
        return Err(Error::EmptySelection(format!("dataset has no samples of class {s}")));
    }
    let source = flatten_rows(&train.images().select_rows(&origin)?)?;

    let adv1 = AdvGenConfig {
        seed: component_seed(cfg.advgen.seed, s, t, 1),
        ..cfg.advgen
    };
    let c1 = train_component1(classifier, &source, s, t, &adv1)?;
    let mapped = apply_all(&c1.autoencoder, &source)?;
    let preds = classifier.predict_all(&mapped)?;
    let ok: Vec<usize> = (0..preds.len()).filter(|&i| preds[i] == t).collect();
    log::info!(
        "({s},{t}) component I: {}/{} adversarial examples (validation {:.2}%)",
        ok.len(),
        preds.len(),
        c1.summary.validation_success_rate
    );
    let adv_t: Vec<Vec<f32>> = ok.iter().map(|&i| mapped.row(i).to_vec()).collect();
    if adv_t.is_empty() {
        log::warn!("({s},{t}) component I produced no adversarial examples");
        return Ok(DirectionResult {
            s,
            t,
            component1: c1.summary,
            component2: None,
            adv_t,
            adv_s: Vec::new(),
            instances: Vec::new(),
            stats: RunStats::from_outcomes(&[]),
        });
    }

    let adv2 = AdvGenConfig {
        seed: component_seed(cfg.advgen.seed, s, t, 2),
        ..cfg.advgen
    };
    let adv_t_tensor = Tensor::stack(&[source.row_width()], adv_t.iter().map(Vec::as_slice))?;
    let c2 = train_component2(classifier, &adv_t_tensor, s, &adv2)?;
    let reverse = apply_all(&c2.autoencoder, &adv_t_tensor)?;
    let rpreds = classifier.predict_all(&reverse)?;
    let fed: Vec<usize> = (0..rpreds.len()).filter(|&i| rpreds[i] == s).collect();
    let pairs: Vec<BorderlinePair> = fed
        .iter()
        .map(|&i| BorderlinePair {
            origin_index: origin[ok[i]],
            adv_t: adv_t[i].clone(),
            adv_s: reverse.row(i).to_vec(),
        })
        .collect();
    let (instances, stats) = refine_all(classifier, &pairs, s, t, &cfg.refine)?;
    log::info!(
        "({s},{t}) refinement: {}/{} borderline, mean gap {:.3e}",
        stats.successes,
        stats.pairs_fed,
        stats.mean_gap
    );
    let adv_s = pairs.into_iter().map(|p| p.adv_s).collect();
    Ok(DirectionResult {
        s,
        t,
        component1: c1.summary,
        component2: Some(c2.summary),
        adv_t,
        adv_s,
        instances,
        stats,
    })
}

#[derive(Debug, Clone)]
pub struct PairwiseResult {
    pub a: usize,
    pub b: usize,
    pub directions: [DirectionResult; 2],
    pub stats: RunStats,
}

impl PairwiseResult {
    /// Direction `(a, b)` instances followed by `(b, a)`.
    pub fn borderline(&self) -> Vec<BorderlineInstance> {
        self.directions.iter().flat_map(|d| d.instances.iter().cloned()).collect()
    }
}

pub fn run_pairwise(
    classifier: &ClassifierModel,
    train: &LabeledDataset,
    a: usize,
    b: usize,
    cfg: &DeepDigConfig,
) -> Result<PairwiseResult> {
    let ab = run_direction(classifier, train, a, b, cfg)?;
    let ba = run_direction(classifier, train, b, a, cfg)?;
    let stats = RunStats::combine(&[ab.stats, ba.stats]);
    Ok(PairwiseResult {
        a,
        b,
        directions: [ab, ba],
        stats,
    })
}

/// Contents of `stats.json` in a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: String,
    pub pair: (usize, usize),
    pub combined: RunStats,
    pub directions: Vec<DirectionSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSummary {
    pub direction: (usize, usize),
    pub stats: RunStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component1: Option<ComponentSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub component2: Option<ComponentSummary>,
}

impl PairwiseResult {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            method: "deepdig".into(),
            pair: (self.a, self.b),
            combined: self.stats,
            directions: self
                .directions
                .iter()
                .map(|d| DirectionSummary {
                    direction: (d.s, d.t),
                    stats: d.stats,
                    component1: Some(d.component1.clone()),
                    component2: d.component2.clone(),
                })
                .collect(),
        }
    }
}

fn grid_of_rows(path: &Path, rows: impl Iterator<Item = Vec<f32>>, shape: &[usize]) -> Result<()> {
    let rows: Vec<Vec<f32>> = rows.take(GRID_LIMIT).collect();
    if rows.is_empty() {
        return Ok(());
    }
    let (h, w) = image_dims(shape);
    let refs: Vec<&[f32]> = rows.iter().map(Vec::as_slice).collect();
    save_grid(path, &refs, h, w)
}

fn image_dims(shape: &[usize]) -> (usize, usize) {
    match shape {
        [.., h, w] => (*h, *w),
        [w] => (1, *w),
        [] => (1, 1),
    }
}

/// Writes `borderline.jsonl`, `stats.json` and the `borderline/` grids.
pub fn write_borderline_dir(
    dir: &Path,
    summary: &RunSummary,
    instances: &[BorderlineInstance],
    input_shape: &[usize],
) -> Result<()> {
    write_jsonl_atomic(&dir.join("borderline.jsonl"), instances)?;
    for (s, t) in [summary.pair, (summary.pair.1, summary.pair.0)] {
        grid_of_rows(
            &dir.join("borderline").join(format!("{s}_to_{t}.png")),
            instances.iter().filter(|b| b.direction == (s, t)).map(|b| b.pixels.clone()),
            input_shape,
        )?;
    }
    write_json_atomic(&dir.join("stats.json"), summary)
}

/// Full DeepDIG run directory including the `adv_t/` and `adv_s/` grids.
pub fn write_run_dir(dir: &Path, result: &PairwiseResult, input_shape: &[usize]) -> Result<()> {
    for d in &result.directions {
        let name = format!("{}_to_{}.png", d.s, d.t);
        grid_of_rows(&dir.join("adv_t").join(&name), d.adv_t.iter().cloned(), input_shape)?;
        grid_of_rows(&dir.join("adv_s").join(&name), d.adv_s.iter().cloned(), input_shape)?;
    }
    write_borderline_dir(dir, &result.summary(), &result.borderline(), input_shape)
}

pub fn read_borderline(path: &Path) -> Result<Vec<BorderlineInstance>> {
    crate::io::read_jsonl(path)
}
