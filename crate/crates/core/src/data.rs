//! Labeled image datasets: IDX ingestion, class filtering, seeded splits and
//! a synthetic two-Gaussian oracle dataset.

use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

pub const FASHION_MNIST_CLASSES: [&str; 10] = [
    "T-shirt/top",
    "Trouser",
    "Pullover",
    "Dress",
    "Coat",
    "Sandal",
    "Shirt",
    "Sneaker",
    "Bag",
    "Ankle boot",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Mnist,
    FashionMnist,
    Synthetic,
}

impl DatasetKind {
    pub fn class_names(self) -> Vec<String> {
        match self {
            DatasetKind::Mnist => (0..10).map(|d| d.to_string()).collect(),
            DatasetKind::FashionMnist => FASHION_MNIST_CLASSES.iter().map(|s| s.to_string()).collect(),
            DatasetKind::Synthetic => vec!["0".into(), "1".into()],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetKind::Mnist => "mnist",
            DatasetKind::FashionMnist => "fashion-mnist",
            DatasetKind::Synthetic => "synthetic",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "mnist" => Ok(DatasetKind::Mnist),
            "fashion-mnist" | "fashionmnist" | "fmnist" => Ok(DatasetKind::FashionMnist),
            "synthetic" => Ok(DatasetKind::Synthetic),
            other => Err(Error::InvalidArgument(format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

/// Images `[N, C, H, W]` with pixels in `[0, 1]` and labels in `[0, c)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Tensor,
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(images: Tensor, labels: Vec<usize>, class_names: Vec<String>) -> Result<Self> {
        if images.shape().len() != 4 {
            return Err(Error::Shape(format!(
                "images must be [N, C, H, W], got {:?}",
                images.shape()
            )));
        }
        if images.batch_size() != labels.len() {
            return Err(Error::Shape(format!(
                "{} images but {} labels",
                images.batch_size(),
                labels.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "label {l} outside {} classes",
                class_names.len()
            )));
        }
        if images.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("pixel outside [0, 1]".into()));
        }
        Ok(Self {
            images,
            labels,
            class_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Per-sample shape `[C, H, W]`.
    pub fn sample_shape(&self) -> &[usize] {
        &self.images.shape()[1..]
    }

    pub fn image(&self, i: usize) -> &[f32] {
        self.images.row(i)
    }

    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::EmptySelection("no indices selected".into()));
        }
        Ok(Self {
            images: self.images.select_rows(indices)?,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
        })
    }

    /// Resolves a class by name (case-insensitive) or by numeric index.
    pub fn class_index(&self, name: &str) -> Result<usize> {
        resolve_class(&self.class_names, name)
    }
}

pub fn resolve_class(class_names: &[String], name: &str) -> Result<usize> {
    if let Some(i) = class_names.iter().position(|c| c.eq_ignore_ascii_case(name)) {
        return Ok(i);
    }
    match name.parse::<usize>() {
        Ok(i) if i < class_names.len() => Ok(i),
        _ => Err(Error::InvalidArgument(format!(
            "unknown class `{name}` (known: {})",
            class_names.join(", ")
        ))),
    }
}

/// Raw IDX payload: dimensions and the unsigned-byte body.
fn read_idx(path: &Path, magic: u32) -> Result<(Vec<usize>, Vec<u8>)> {
    let raw = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes = if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        flate2::read::GzDecoder::new(&raw[..])
            .read_to_end(&mut out)
            .map_err(|e| Error::Parse(format!("{}: bad gzip stream: {e}", path.display())))?;
        out
    } else {
        raw
    };
    let bad = |what: String| Error::Parse(format!("{}: {what}", path.display()));
    if bytes.len() < 4 {
        return Err(bad("truncated header".into()));
    }
    let found = u32::from_be_bytes(bytes[0..4].try_into().unwrap());
    if found != magic {
        return Err(bad(format!("magic {found:#010x}, expected {magic:#010x}")));
    }
    let ndim = (magic & 0xff) as usize;
    let header = 4 + 4 * ndim;
    if bytes.len() < header {
        return Err(bad("truncated header".into()));
    }
    let dims: Vec<usize> = (0..ndim)
        .map(|i| u32::from_be_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize)
        .collect();
    let body: usize = dims.iter().product();
    if bytes.len() != header + body {
        return Err(bad(format!(
            "expected {body} data bytes for dims {dims:?}, found {}",
            bytes.len() - header
        )));
    }
    Ok((dims, bytes[header..].to_vec()))
}

/// Loads an IDX image/label file pair; pixels are scaled by 1/255.
pub fn load_idx(images_path: &Path, labels_path: &Path, class_names: Vec<String>) -> Result<LabeledDataset> {
    let (img_dims, pixels) = read_idx(images_path, IDX_IMAGES_MAGIC)?;
    let (lbl_dims, labels) = read_idx(labels_path, IDX_LABELS_MAGIC)?;
    if img_dims[0] != lbl_dims[0] {
        return Err(Error::Parse(format!(
            "{} images but {} labels",
            img_dims[0], lbl_dims[0]
        )));
    }
    if img_dims[0] == 0 {
        return Err(Error::Parse("IDX files contain no samples".into()));
    }
    let shape = vec![img_dims[0], 1, img_dims[1], img_dims[2]];
    let data = pixels.iter().map(|&b| b as f32 / 255.0).collect();
    let images = Tensor::new(shape, data)?;
    LabeledDataset::new(images, labels.into_iter().map(usize::from).collect(), class_names)
}

fn find_idx_file(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz")] {
        let p = dir.join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::io(
        dir.join(stem),
        std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found"),
    ))
}

/// Loads the standard `train-*`/`t10k-*` files from a directory.
pub fn load_dir(dir: &Path, kind: DatasetKind, split: Split) -> Result<LabeledDataset> {
    let prefix = match split {
        Split::Train => "train",
        Split::Test => "t10k",
    };
    let images = find_idx_file(dir, &format!("{prefix}-images-idx3-ubyte"))?;
    let labels = find_idx_file(dir, &format!("{prefix}-labels-idx1-ubyte"))?;
    load_idx(&images, &labels, kind.class_names())
}

/// Keeps samples whose label is in `classes`, in original order.
pub fn filter_classes(ds: &LabeledDataset, classes: &[usize]) -> Result<LabeledDataset> {
    if classes.is_empty() {
        return Err(Error::InvalidArgument("no classes requested".into()));
    }
    if let Some(&c) = classes.iter().find(|&&c| c >= ds.num_classes()) {
        return Err(Error::InvalidArgument(format!(
            "class {c} outside {} classes",
            ds.num_classes()
        )));
    }
    let keep: Vec<usize> = (0..ds.len()).filter(|&i| classes.contains(&ds.labels[i])).collect();
    if keep.is_empty() {
        return Err(Error::EmptySelection(format!("no samples with labels {classes:?}")));
    }
    ds.subset(&keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "train fraction {train_fraction} not in (0, 1)"
            )));
        }
        Ok(Self {
            train_fraction,
            seed,
        })
    }
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.8,
            seed: 0,
        }
    }
}

/// Index form of [`split`]: `(train, validation)` positions into `0..n`.
pub fn split_indices(n: usize, spec: SplitSpec) -> Result<(Vec<usize>, Vec<usize>)> {
    if n < 2 {
        return Err(Error::InsufficientSamples(format!("cannot split {n} samples")));
    }
    SplitSpec::new(spec.train_fraction, spec.seed)?;
    let mut order = Rng::new(spec.seed).permutation(n);
    let n_train = ((spec.train_fraction * n as f64).round() as usize).clamp(1, n - 1);
    let val = order.split_off(n_train);
    Ok((order, val))
}

/// Seeded shuffle followed by a prefix split into `(train, validation)`.
pub fn split(ds: &LabeledDataset, spec: SplitSpec) -> Result<(LabeledDataset, LabeledDataset)> {
    let (train, val) = split_indices(ds.len(), spec)?;
    Ok((ds.subset(&train)?, ds.subset(&val)?))
}

/// Two isotropic Gaussian blobs in the unit square, shaped `[N, 1, 1, 2]`.
///
/// Class 0 samples come first, then class 1. Coordinates are clipped to `[0, 1]`.
pub fn synthetic_two_gaussians(
    n_per_class: usize,
    centers: [[f32; 2]; 2],
    sigma: f32,
    seed: u64,
) -> Result<LabeledDataset> {
    if centers[0] == centers[1] {
        return Err(Error::InvalidArgument("centers must differ".into()));
    }
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be positive".into()));
    }
    let mut rng = Rng::new(seed);
    let mut data = Vec::with_capacity(4 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, center) in centers.iter().enumerate() {
        for _ in 0..n_per_class {
            for &c in center {
                let v = c as f64 + sigma as f64 * rng.normal();
                data.push(v.clamp(0.0, 1.0) as f32);
            }
            labels.push(label);
        }
    }
    let images = Tensor::new(vec![2 * n_per_class, 1, 1, 2], data)?;
    LabeledDataset::new(images, labels, DatasetKind::Synthetic.class_names())
}

pub const SYNTHETIC_CENTERS: [[f32; 2]; 2] = [[0.3, 0.35], [0.7, 0.65]];
pub const SYNTHETIC_SIGMA: f32 = 0.1;

/// Standard two-Gaussian benchmark: 1000 training and 250 test samples per class.
pub fn synthetic_standard(split: Split) -> Result<LabeledDataset> {
    match split {
        Split::Train => synthetic_two_gaussians(1000, SYNTHETIC_CENTERS, SYNTHETIC_SIGMA, 1),
        Split::Test => synthetic_two_gaussians(250, SYNTHETIC_CENTERS, SYNTHETIC_SIGMA, 2),
    }
}
