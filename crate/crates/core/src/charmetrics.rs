//! Decision-boundary characterization.
//!
//! Input space: prediction oscillation along straight trajectories between
//! borderline instances and its mean over sampled partners (IDC).
//! Embedding space: a linear SVM fitted on training embeddings, the mean
//! normalized hyperplane distance (EDC1) and its accuracy (EDC2), plus a
//! two-component PCA projection.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{filter_classes, LabeledDataset};
use crate::deepdig::BorderlineInstance;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::models::ClassifierModel;
use crate::rng::Rng;
use crate::tensor::Tensor;

/// `m` points `t*x_i + (1-t)*x_j` at `t = p/(m-1)`, `p = 0..m`, so the first
/// point is `x_j` and the last is `x_i`. Reversing the endpoints reverses the
/// sequence exactly.
pub fn interpolate(x_i: &[f32], x_j: &[f32], m: usize) -> Result<Vec<Vec<f32>>> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("trajectory needs m >= 2, got {m}")));
    }
    if x_i.len() != x_j.len() {
        return Err(Error::Shape(format!("endpoints of length {} and {}", x_i.len(), x_j.len())));
    }
    let denom = (m - 1) as f64;
    Ok((0..m)
        .map(|p| {
            let (wi, wj) = (p as f64, (m - 1 - p) as f64);
            x_i.iter()
                .zip(x_j)
                .map(|(&a, &b)| ((wi * a as f64 + wj * b as f64) / denom) as f32)
                .collect()
        })
        .collect())
}

/// Adjacent disagreements divided by the number of points.
pub fn oscillation_of(predictions: &[usize]) -> f64 {
    if predictions.is_empty() {
        return 0.0;
    }
    let flips = predictions.windows(2).filter(|w| w[0] != w[1]).count();
    flips as f64 / predictions.len() as f64
}

pub fn trajectory_predictions(
    classifier: &ClassifierModel,
    x_i: &[f32],
    x_j: &[f32],
    m: usize,
) -> Result<Vec<usize>> {
    let points = interpolate(x_i, x_j, m)?;
    let batch = Tensor::stack(classifier.input_shape(), points.iter().map(Vec::as_slice))?;
    classifier.predict_batch(&batch)
}

pub fn oscillation(classifier: &ClassifierModel, x_i: &[f32], x_j: &[f32], m: usize) -> Result<f64> {
    Ok(oscillation_of(&trajectory_predictions(classifier, x_i, x_j, m)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdcConfig {
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    /// Averages over a seeded subset of anchors when set.
    pub max_anchors: Option<usize>,
}

impl Default for IdcConfig {
    fn default() -> Self {
        Self {
            m: 100,
            k: 10,
            seed: 0,
            max_anchors: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdcResult {
    pub value: f64,
    pub anchors: Vec<usize>,
    pub partners: Vec<Vec<usize>>,
    pub oscillations: Vec<Vec<f64>>,
}

/// Anchors and their partner sets, drawn serially from the seed.
pub fn idc_partners(n: usize, cfg: &IdcConfig) -> Result<(Vec<usize>, Vec<Vec<usize>>)> {
    if n <= cfg.k {
        return Err(Error::InsufficientSamples(format!(
            "IDC with k = {} needs more than {} borderline instances, got {n}",
            cfg.k, cfg.k
        )));
    }
    let mut anchors: Vec<usize> = match cfg.max_anchors {
        Some(a) if a < n => {
            let mut sel = Rng::fork(cfg.seed, 1).permutation(n);
            sel.truncate(a.max(1));
            sel.sort_unstable();
            sel
        }
        _ => (0..n).collect(),
    };
    anchors.dedup();
    let mut rng = Rng::fork(cfg.seed, 2);
    let partners = anchors
        .iter()
        .map(|&i| rng.sample_distinct_excluding(n, cfg.k, i))
        .collect();
    Ok((anchors, partners))
}

/// Mean oscillation over every anchor and each of its `k` partners.
pub fn idc(classifier: &ClassifierModel, points: &[&[f32]], cfg: &IdcConfig) -> Result<IdcResult> {
    if cfg.k == 0 {
        return Err(Error::InvalidArgument("IDC needs k >= 1".into()));
    }
    let (anchors, partners) = idc_partners(points.len(), cfg)?;
    let mut total = 0.0;
    let mut count = 0usize;
    let mut oscillations = Vec::with_capacity(anchors.len());
    for (&i, js) in anchors.iter().zip(&partners) {
        let row = js
            .iter()
            .map(|&j| oscillation(classifier, points[i], points[j], cfg.m))
            .collect::<Result<Vec<f64>>>()?;
        for o in &row {
            total += o;
        }
        count += row.len();
        oscillations.push(row);
    }
    Ok(IdcResult {
        value: total / count as f64,
        anchors,
        partners,
        oscillations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub w: Vec<f64>,
    pub b: f64,
    pub gamma: f64,
    /// `0.5*|w|^2 + gamma * sum of hinge losses` on the training set.
    pub objective: f64,
}

impl SvmModel {
    pub fn score(&self, z: &[f32]) -> f64 {
        self.w.iter().zip(z).map(|(w, &x)| w * x as f64).sum::<f64>() + self.b
    }

    /// `+1` when the score is non-negative.
    pub fn classify(&self, z: &[f32]) -> f64 {
        if self.score(z) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn norm(&self) -> f64 {
        self.w.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub gamma: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            gamma: 1.0,
            epochs: 200,
            seed: 0,
        }
    }
}

fn check_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::InvalidArgument("SVM labels must be +1 or -1".into()));
    }
    Ok(())
}

/// Soft-margin linear SVM by Pegasos stochastic subgradient descent.
///
/// The bias is an extra weight on a constant feature of 1, so it shares the
/// regularizer; `lambda = 1/(gamma*n)` makes the Pegasos objective a rescaling
/// of the soft-margin primal.
pub fn fit_linear_svm(embeddings: &Tensor, labels: &[f64], cfg: &SvmConfig) -> Result<SvmModel> {
    let n = embeddings.batch_size();
    if labels.len() != n {
        return Err(Error::Shape(format!("{} labels for {n} embeddings", labels.len())));
    }
    check_labels(labels)?;
    if !labels.contains(&1.0) || !labels.contains(&-1.0) {
        return Err(Error::InvalidArgument("SVM training needs both classes".into()));
    }
    if cfg.gamma.is_nan() || cfg.gamma <= 0.0 || cfg.epochs == 0 {
        return Err(Error::InvalidArgument("SVM needs gamma > 0 and at least one epoch".into()));
    }
    let d = embeddings.row_width();
    let lambda = 1.0 / (cfg.gamma * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut w = vec![0.0f64; d + 1];
    let mut rng = Rng::new(cfg.seed);
    let mut step = 0u64;
    for _ in 0..cfg.epochs {
        for i in rng.permutation(n) {
            step += 1;
            let eta = 1.0 / (lambda * step as f64);
            let z = embeddings.row(i);
            let y = labels[i];
            let margin = y * (w[..d].iter().zip(z).map(|(w, &x)| w * x as f64).sum::<f64>() + w[d]);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|v| *v *= shrink);
            if margin < 1.0 {
                for (v, &x) in w[..d].iter_mut().zip(z) {
                    *v += eta * y * x as f64;
                }
                w[d] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let scale = radius / norm;
                w.iter_mut().for_each(|v| *v *= scale);
            }
        }
    }
    let b = w.pop().unwrap();
    let mut model = SvmModel {
        w,
        b,
        gamma: cfg.gamma,
        objective: 0.0,
    };
    if model.norm() == 0.0 {
        return Err(Error::Numerical("SVM weight vector collapsed to zero".into()));
    }
    let hinge: f64 = (0..n)
        .map(|i| (1.0 - labels[i] * model.score(embeddings.row(i))).max(0.0))
        .sum();
    model.objective = 0.5 * model.norm().powi(2) + cfg.gamma * hinge;
    Ok(model)
}

pub fn hyperplane_distance(svm: &SvmModel, z: &[f32]) -> Result<f64> {
    let norm = svm.norm();
    if norm == 0.0 {
        return Err(Error::Numerical("hyperplane with zero normal".into()));
    }
    Ok(svm.score(z).abs() / norm)
}

/// Mean distances of each set to the hyperplane, all divided by the largest
/// distance over both sets.
pub fn edc1(svm: &SvmModel, borderline: &Tensor, test: &Tensor) -> Result<(f64, f64)> {
    let db = borderline.rows().map(|z| hyperplane_distance(svm, z)).collect::<Result<Vec<_>>>()?;
    let dt = test.rows().map(|z| hyperplane_distance(svm, z)).collect::<Result<Vec<_>>>()?;
    let max = db.iter().chain(&dt).cloned().fold(0.0, f64::max);
    let mean = |d: &[f64]| {
        if max == 0.0 {
            0.0
        } else {
            d.iter().map(|v| v / max).sum::<f64>() / d.len() as f64
        }
    };
    Ok((mean(&db), mean(&dt)))
}

/// Percentage of rows whose SVM sign matches the `±1` label.
pub fn svm_accuracy(svm: &SvmModel, embeddings: &Tensor, labels: &[f64]) -> Result<f64> {
    if labels.len() != embeddings.batch_size() {
        return Err(Error::Shape(format!(
            "{} labels for {} embeddings",
            labels.len(),
            embeddings.batch_size()
        )));
    }
    check_labels(labels)?;
    let hits = embeddings.rows().zip(labels).filter(|(z, &y)| svm.classify(z) == y).count();
    Ok(100.0 * hits as f64 / labels.len() as f64)
}

pub fn edc2(
    svm: &SvmModel,
    borderline: (&Tensor, &[f64]),
    test: (&Tensor, &[f64]),
) -> Result<(f64, f64)> {
    Ok((svm_accuracy(svm, borderline.0, borderline.1)?, svm_accuracy(svm, test.0, test.1)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: [Vec<f64>; 2],
    /// Variance along each component (squared singular value over `n - 1`).
    pub explained_variance: [f64; 2],
}

/// Top-2 principal axes from the SVD of the centered data.
pub fn fit_pca(embeddings: &Tensor) -> Result<PcaModel> {
    let (n, d) = (embeddings.batch_size(), embeddings.row_width());
    if n < 2 || d < 2 {
        return Err(Error::InsufficientSamples(format!("PCA on a {n}x{d} matrix")));
    }
    let mut mean = vec![0.0f64; d];
    for z in embeddings.rows() {
        for (m, &v) in mean.iter_mut().zip(z) {
            *m += v as f64;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| embeddings.row(i)[j] as f64 - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let sv = |k: usize| svd.singular_values[order[k]];
    let tol = f64::EPSILON * n.max(d) as f64 * sv(0);
    if sv(0) == 0.0 || sv(1) <= tol {
        return Err(Error::Numerical("PCA input has rank below 2".into()));
    }
    let component = |k: usize| {
        let mut c: Vec<f64> = v_t.row(order[k]).iter().copied().collect();
        let lead = c.iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
        if lead < 0.0 {
            c.iter_mut().for_each(|v| *v = -*v);
        }
        c
    };
    Ok(PcaModel {
        mean,
        components: [component(0), component(1)],
        explained_variance: [sv(0).powi(2) / (n - 1) as f64, sv(1).powi(2) / (n - 1) as f64],
    })
}

pub fn project_pca(pca: &PcaModel, embeddings: &Tensor) -> Result<Vec<[f64; 2]>> {
    if embeddings.row_width() != pca.mean.len() {
        return Err(Error::Shape(format!(
            "embeddings of width {} for a PCA over {}",
            embeddings.row_width(),
            pca.mean.len()
        )));
    }
    Ok(embeddings
        .rows()
        .map(|z| {
            let dot = |c: &[f64]| z.iter().zip(&pca.mean).zip(c).map(|((&x, m), c)| (x as f64 - m) * c).sum();
            [dot(&pca.components[0]), dot(&pca.components[1])]
        })
        .collect())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CharParams {
    pub idc: IdcConfig,
    pub svm: SvmConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharacterizationReport {
    pub pair: (usize, usize),
    pub idc: f64,
    pub edc1_borderline: f64,
    pub edc1_test: f64,
    pub edc2_borderline: f64,
    pub edc2_test: f64,
    pub n_borderline: usize,
    pub n_test: usize,
    pub m: usize,
    pub k: usize,
    pub seed: u64,
    pub idc_anchors: usize,
    pub svm_train_accuracy: f64,
    pub svm_objective: f64,
}

impl CharacterizationReport {
    /// Checks the documented value ranges.
    pub fn in_range(&self) -> bool {
        let max_idc = (self.m - 1) as f64 / self.m as f64;
        (0.0..=max_idc).contains(&self.idc)
            && (0.0..=1.0).contains(&self.edc1_borderline)
            && (0.0..=1.0).contains(&self.edc1_test)
            && (0.0..=100.0).contains(&self.edc2_borderline)
            && (0.0..=100.0).contains(&self.edc2_test)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaRow {
    pub set: String,
    pub label: usize,
    pub pc1: f64,
    pub pc2: f64,
}

#[derive(Debug, Clone)]
pub struct Characterization {
    pub report: CharacterizationReport,
    pub svm: SvmModel,
    pub pca: PcaModel,
    pub projections: Vec<PcaRow>,
}

fn signed_labels(labels: &[usize], positive: usize) -> Vec<f64> {
    labels.iter().map(|&l| if l == positive { 1.0 } else { -1.0 }).collect()
}

fn embed_rows(classifier: &ClassifierModel, rows: &[&[f32]]) -> Result<Tensor> {
    let images = Tensor::stack(classifier.input_shape(), rows.iter().copied())?;
    classifier.embed_all(&images)
}

fn pca_rows<'a>(set: &str, labels: &'a [usize], coords: Vec<[f64; 2]>) -> impl Iterator<Item = PcaRow> + 'a {
    let set = set.to_string();
    labels.iter().zip(coords).map(move |(&label, [pc1, pc2])| PcaRow {
        set: set.clone(),
        label,
        pc1,
        pc2,
    })
}

/// Input- and embedding-space measures for the boundary between `a` and `b`.
/// `train` and `test` may hold any classes; only `a` and `b` are used.
pub fn characterize_pair(
    classifier: &ClassifierModel,
    train: &LabeledDataset,
    test: &LabeledDataset,
    a: usize,
    b: usize,
    borderline: &[BorderlineInstance],
    params: &CharParams,
) -> Result<Characterization> {
    if a == b {
        return Err(Error::InvalidArgument(format!("pair ({a}, {b}) repeats a class")));
    }
    if let Some(bad) = borderline.iter().find(|x| x.direction != (a, b) && x.direction != (b, a)) {
        return Err(Error::InvalidArgument(format!(
            "borderline instance with direction {:?} in pair ({a}, {b})",
            bad.direction
        )));
    }
    let train = filter_classes(train, &[a, b])?;
    let test = filter_classes(test, &[a, b])?;

    let train_emb = classifier.embed_all(train.images())?;
    let train_y = signed_labels(train.labels(), a);
    let svm = fit_linear_svm(&train_emb, &train_y, &params.svm)?;
    let svm_train_accuracy = svm_accuracy(&svm, &train_emb, &train_y)?;

    let points: Vec<&[f32]> = borderline.iter().map(|x| x.pixels.as_slice()).collect();
    let idc = idc(classifier, &points, &params.idc)?;

    let b_emb = embed_rows(classifier, &points)?;
    let b_labels: Vec<usize> = borderline.iter().map(BorderlineInstance::source).collect();
    let b_y = signed_labels(&b_labels, a);
    let t_emb = classifier.embed_all(test.images())?;
    let t_y = signed_labels(test.labels(), a);
    let (edc1_b, edc1_t) = edc1(&svm, &b_emb, &t_emb)?;
    let (edc2_b, edc2_t) = edc2(&svm, (&b_emb, &b_y), (&t_emb, &t_y))?;

    let pca = fit_pca(&train_emb)?;
    let projections = pca_rows("train", train.labels(), project_pca(&pca, &train_emb)?)
        .chain(pca_rows("test", test.labels(), project_pca(&pca, &t_emb)?))
        .chain(pca_rows("borderline", &b_labels, project_pca(&pca, &b_emb)?))
        .collect();

    Ok(Characterization {
        report: CharacterizationReport {
            pair: (a, b),
            idc: idc.value,
            edc1_borderline: edc1_b,
            edc1_test: edc1_t,
            edc2_borderline: edc2_b,
            edc2_test: edc2_t,
            n_borderline: borderline.len(),
            n_test: test.len(),
            m: params.idc.m,
            k: params.idc.k,
            seed: params.idc.seed,
            idc_anchors: idc.anchors.len(),
            svm_train_accuracy,
            svm_objective: svm.objective,
        },
        svm,
        pca,
        projections,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    pair: &'a str,
    idc: f64,
    edc1_b: f64,
    edc1_t: f64,
    edc2_b: f64,
    edc2_t: f64,
    n_b: usize,
    n_t: usize,
    m: usize,
    k: usize,
    seed: u64,
}

/// Pair label used in CSV files, e.g. `1-2`.
pub fn pair_label(pair: (usize, usize)) -> String {
    format!("{}-{}", pair.0, pair.1)
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>, header: &[&str]) -> Result<Vec<u8>> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Parse(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

pub const REPORT_HEADER: [&str; 11] =
    ["pair", "idc", "edc1_b", "edc1_t", "edc2_b", "edc2_t", "n_b", "n_t", "m", "k", "seed"];
pub const PCA_HEADER: [&str; 4] = ["set", "label", "pc1", "pc2"];

pub fn reports_csv(reports: &[CharacterizationReport]) -> Result<Vec<u8>> {
    let labels: Vec<String> = reports.iter().map(|r| pair_label(r.pair)).collect();
    csv_bytes(
        reports.iter().zip(&labels).map(|(r, label)| CsvRow {
            pair: label,
            idc: r.idc,
            edc1_b: r.edc1_borderline,
            edc1_t: r.edc1_test,
            edc2_b: r.edc2_borderline,
            edc2_t: r.edc2_test,
            n_b: r.n_borderline,
            n_t: r.n_test,
            m: r.m,
            k: r.k,
            seed: r.seed,
        }),
        &REPORT_HEADER,
    )
}

pub fn write_reports_csv(path: &Path, reports: &[CharacterizationReport]) -> Result<()> {
    write_atomic(path, &reports_csv(reports)?)
}

pub fn write_pca_csv(path: &Path, rows: &[PcaRow]) -> Result<()> {
    write_atomic(path, &csv_bytes(rows, &PCA_HEADER)?)
}

pub fn read_pca_csv(path: &Path) -> Result<Vec<PcaRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    r.deserialize().map(|row| row.map_err(csv_err)).collect()
}
