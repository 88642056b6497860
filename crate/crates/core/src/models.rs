//! Classifier zoo, training loop and the prediction/score/embedding accessors.
//!
//! Every classifier ends in a single `Dense(d, c)` layer with no activation;
//! the embedding is the input to that layer.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::netcore::loss::{one_hot, softmax_cross_entropy_with_grad, softmax_f64};
use crate::netcore::{adam_step, AdamConfig, AdamState, GradRequest, LayerSpec, Network};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// Rows per forward pass when scoring whole datasets.
pub const EVAL_CHUNK: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Arch {
    MnistCnn,
    MnistFcn,
    Synthetic2d,
}

impl Arch {
    pub fn name(self) -> &'static str {
        match self {
            Arch::MnistCnn => "mnist_cnn",
            Arch::MnistFcn => "mnist_fcn",
            Arch::Synthetic2d => "synthetic_2d",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "mnist_cnn" | "cnn" => Ok(Arch::MnistCnn),
            "mnist_fcn" | "fcn" => Ok(Arch::MnistFcn),
            "synthetic_2d" => Ok(Arch::Synthetic2d),
            other => Err(Error::InvalidArgument(format!(
                "unknown architecture `{other}` (expected mnist_cnn, mnist_fcn or synthetic_2d)"
            ))),
        }
    }

    fn input_shape(self) -> Vec<usize> {
        match self {
            Arch::MnistCnn | Arch::MnistFcn => vec![1, 28, 28],
            Arch::Synthetic2d => vec![1, 1, 2],
        }
    }

    fn layers(self) -> Vec<LayerSpec> {
        match self {
            // Literal layer list; the flatten width follows from the
            // stride-1 / no-padding / floor-pool arithmetic (10 x 5 x 5).
            Arch::MnistCnn => vec![
                LayerSpec::conv(1, 10, 3),
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Relu,
                LayerSpec::conv(10, 10, 3),
                LayerSpec::MaxPool { size: 2 },
                LayerSpec::Relu,
                LayerSpec::Flatten,
                LayerSpec::dense(250, 50),
                LayerSpec::Relu,
                LayerSpec::dense(50, 10),
            ],
            Arch::MnistFcn => vec![
                LayerSpec::Flatten,
                LayerSpec::dense(784, 50),
                LayerSpec::Relu,
                LayerSpec::dense(50, 50),
                LayerSpec::Relu,
                LayerSpec::dense(50, 10),
            ],
            Arch::Synthetic2d => vec![
                LayerSpec::Flatten,
                LayerSpec::dense(2, 16),
                LayerSpec::Relu,
                LayerSpec::dense(16, 2),
            ],
        }
    }
}

/// Sidecar stored under `model` in the checkpoint file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub embedding_layer_index: usize,
    pub c: usize,
    pub d: usize,
    pub arch_name: String,
    pub dataset: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    net: Network,
    embedding_layer_index: usize,
    classes: usize,
    embedding_dim: usize,
    arch: Arch,
    dataset: String,
}

pub fn build_model(arch: Arch, seed: u64) -> Result<ClassifierModel> {
    let net = Network::new(arch.input_shape(), arch.layers(), seed)?;
    ClassifierModel::from_network(net, arch, "")
}

/// Lowest index among the maxima.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

impl ClassifierModel {
    pub fn from_network(net: Network, arch: Arch, dataset: &str) -> Result<Self> {
        let layers = net.layers();
        let n = layers.len();
        let LayerSpec::Dense { input, output, .. } = layers[n - 1] else {
            return Err(Error::InvalidArgument("classifier must end in a Dense layer".into()));
        };
        if n < 2 {
            return Err(Error::InvalidArgument("classifier needs an embedding layer".into()));
        }
        let tap = n - 2;
        let width: usize = net.layer_output_shape(tap).iter().product();
        if width != input || net.layer_output_shape(tap).len() != 1 {
            return Err(Error::Shape(format!(
                "embedding tap width {width} does not feed Dense({input}, {output})"
            )));
        }
        Ok(Self {
            net,
            embedding_layer_index: tap,
            classes: output,
            embedding_dim: input,
            arch,
            dataset: dataset.to_string(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn arch(&self) -> Arch {
        self.arch
    }

    pub fn dataset(&self) -> &str {
        &self.dataset
    }

    pub fn set_dataset(&mut self, dataset: &str) {
        self.dataset = dataset.to_string();
    }

    pub fn num_classes(&self) -> usize {
        self.classes
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding_dim
    }

    pub fn embedding_layer_index(&self) -> usize {
        self.embedding_layer_index
    }

    pub fn input_shape(&self) -> &[usize] {
        self.net.input_shape()
    }

    pub fn input_len(&self) -> usize {
        self.net.input_shape().iter().product()
    }

    pub fn meta(&self) -> ModelMeta {
        ModelMeta {
            embedding_layer_index: self.embedding_layer_index,
            c: self.classes,
            d: self.embedding_dim,
            arch_name: self.arch.name().to_string(),
            dataset: self.dataset.clone(),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let meta = serde_json::to_value(self.meta())?;
        crate::netcore::save_checkpoint_with(&self.net, Some(meta), path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let (net, meta) = crate::netcore::load_checkpoint_with(path)?;
        let meta: ModelMeta = match meta {
            Some(v) => serde_json::from_value(v)
                .map_err(|e| Error::Checkpoint(format!("bad model metadata: {e}")))?,
            None => return Err(Error::Checkpoint("checkpoint has no model metadata".into())),
        };
        let model = Self::from_network(net, Arch::parse(&meta.arch_name)?, &meta.dataset)?;
        if model.meta() != meta {
            return Err(Error::Checkpoint(format!(
                "metadata {meta:?} disagrees with the stored network"
            )));
        }
        Ok(model)
    }

    /// Reshapes flat `[B, D]` rows into the model's `[B] + input_shape`.
    pub fn as_input(&self, batch: Tensor) -> Result<Tensor> {
        let mut shape = vec![batch.batch_size()];
        shape.extend_from_slice(self.net.input_shape());
        batch.reshape(shape)
    }

    fn single(&self, x: &[f32]) -> Result<Tensor> {
        if x.len() != self.input_len() {
            return Err(Error::Shape(format!(
                "input of length {} for model input {:?}",
                x.len(),
                self.input_shape()
            )));
        }
        Tensor::stack(self.net.input_shape(), [x])
    }

    pub fn logits(&self, batch: &Tensor) -> Result<Tensor> {
        self.net.predict(batch)
    }

    /// Row-wise softmax probabilities, in `f64`.
    pub fn scores_batch(&self, batch: &Tensor) -> Result<Vec<Vec<f64>>> {
        let logits = self.logits(batch)?;
        Ok(logits.rows().map(softmax_f64).collect())
    }

    pub fn class_scores(&self, x: &[f32]) -> Result<Vec<f64>> {
        Ok(self.scores_batch(&self.single(x)?)?.pop().unwrap())
    }

    pub fn predict_batch(&self, batch: &Tensor) -> Result<Vec<usize>> {
        Ok(self.scores_batch(batch)?.iter().map(|s| argmax(s)).collect())
    }

    pub fn predict_class(&self, x: &[f32]) -> Result<usize> {
        Ok(argmax(&self.class_scores(x)?))
    }

    /// Predicted class and scores for one sample.
    pub fn classify(&self, x: &[f32]) -> Result<(usize, Vec<f64>)> {
        let s = self.class_scores(x)?;
        Ok((argmax(&s), s))
    }

    pub fn embed_batch(&self, batch: &Tensor) -> Result<Tensor> {
        let mut acts = self.net.forward(batch)?;
        Ok(acts.swap_remove(self.embedding_layer_index))
    }

    pub fn embed(&self, x: &[f32]) -> Result<Vec<f32>> {
        Ok(self.embed_batch(&self.single(x)?)?.into_data())
    }

    /// Applies the final Dense layer to `[B, d]` embeddings.
    pub fn logits_from_embedding(&self, embeddings: &Tensor) -> Result<Tensor> {
        self.net.forward_from(self.embedding_layer_index + 1, embeddings)
    }

    /// Predictions for every row of a `[N, ...]` tensor, evaluated in chunks.
    pub fn predict_all(&self, images: &Tensor) -> Result<Vec<usize>> {
        let mut out = Vec::with_capacity(images.batch_size());
        for start in (0..images.batch_size()).step_by(EVAL_CHUNK) {
            let end = (start + EVAL_CHUNK).min(images.batch_size());
            let chunk = self.as_input(images.slice_rows(start, end)?)?;
            out.extend(self.predict_batch(&chunk)?);
        }
        Ok(out)
    }

    /// `[N, d]` embeddings of every row, evaluated in chunks.
    pub fn embed_all(&self, images: &Tensor) -> Result<Tensor> {
        let mut data = Vec::with_capacity(images.batch_size() * self.embedding_dim);
        for start in (0..images.batch_size()).step_by(EVAL_CHUNK) {
            let end = (start + EVAL_CHUNK).min(images.batch_size());
            let chunk = self.as_input(images.slice_rows(start, end)?)?;
            data.extend_from_slice(self.embed_batch(&chunk)?.data());
        }
        Tensor::new(vec![images.batch_size(), self.embedding_dim], data)
    }

    /// Gradient of a logit-space loss with respect to the input batch.
    /// Parameters are read-only.
    pub fn input_gradient(&self, batch: &Tensor, acts: &[Tensor], logit_grad: &Tensor) -> Result<Tensor> {
        let g = self.net.backward_with(
            batch,
            acts,
            logit_grad,
            GradRequest {
                params: false,
                input: true,
            },
        )?;
        Ok(g.input.expect("input gradient requested"))
    }

    pub fn forward(&self, batch: &Tensor) -> Result<Vec<Tensor>> {
        self.net.forward(batch)
    }
}

/// Percentage of samples whose prediction equals the label.
pub fn evaluate_accuracy(model: &ClassifierModel, ds: &LabeledDataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::EmptySelection("accuracy of an empty dataset".into()));
    }
    let preds = model.predict_all(ds.images())?;
    let correct = preds.iter().zip(ds.labels()).filter(|(p, l)| p == l).count();
    Ok(100.0 * correct as f64 / ds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub decay: f64,
    pub decay_interval: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            lr: 0.01,
            decay: 0.99,
            decay_interval: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
    pub test_accuracy: Option<f64>,
    pub wall_time_secs: f64,
    pub steps: u64,
    pub seed: u64,
}

/// Adam on softmax cross-entropy with per-epoch seeded shuffling.
pub fn train_classifier(
    model: &mut ClassifierModel,
    train: &LabeledDataset,
    test: Option<&LabeledDataset>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    if train.num_classes() != model.classes {
        return Err(Error::InvalidArgument(format!(
            "dataset has {} classes, model has {}",
            train.num_classes(),
            model.classes
        )));
    }
    if train.sample_shape() != model.input_shape() {
        return Err(Error::Shape(format!(
            "dataset samples {:?} vs model input {:?}",
            train.sample_shape(),
            model.input_shape()
        )));
    }
    if cfg.batch_size == 0 {
        return Err(Error::InvalidArgument("batch size must be positive".into()));
    }
    let started = Instant::now();
    let mut state = AdamState::new(
        &model.net,
        AdamConfig::with_schedule(cfg.lr, cfg.decay, cfg.decay_interval),
    );
    let mut rng = Rng::new(cfg.seed);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let order = rng.permutation(train.len());
        let mut total = 0.0;
        for idx in order.chunks(cfg.batch_size) {
            let batch = train.images().select_rows(idx)?;
            let labels: Vec<usize> = idx.iter().map(|&i| train.labels()[i]).collect();
            let target = one_hot(&labels, model.classes)?;
            let acts = model.net.forward(&batch)?;
            let (loss, grad) = softmax_cross_entropy_with_grad(acts.last().unwrap(), &target)?;
            let grads = model.net.backward(&batch, &acts, &grad)?;
            adam_step(&mut model.net, &grads, &mut state)?;
            total += loss * idx.len() as f64;
        }
        let mean = total / train.len() as f64;
        log::info!("epoch {}/{}: loss {mean:.5}", epoch + 1, cfg.epochs);
        epoch_losses.push(mean);
    }
    let test_accuracy = test.map(|t| evaluate_accuracy(model, t)).transpose()?;
    Ok(TrainReport {
        epoch_losses,
        test_accuracy,
        wall_time_secs: started.elapsed().as_secs_f64(),
        steps: state.step(),
        seed: cfg.seed,
    })
}
