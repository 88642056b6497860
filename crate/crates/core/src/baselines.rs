//! Baseline pairings refined by the same bisection as DeepDIG: random pairs
//! (RPBS) and nearest opposite-side neighbours in embedding space (EPBS).

use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::deepdig::{refine_all, BorderlineInstance, BorderlinePair, RefineConfig, RunStats, RunSummary, DirectionSummary};
use crate::error::{Error, Result};
use crate::models::ClassifierModel;
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rpbs,
    Epbs,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Rpbs => "rpbs",
            Method::Epbs => "epbs",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rpbs" => Ok(Method::Rpbs),
            "epbs" => Ok(Method::Epbs),
            other => Err(Error::InvalidArgument(format!(
                "unknown baseline method `{other}` (expected rpbs or epbs)"
            ))),
        }
    }
}

/// Pairs `(i, j)` of dataset indices with `C(x_i) = s` and `C(x_j) = t`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaselinePairing {
    pub method: Method,
    pub s: usize,
    pub t: usize,
    pub pairs: Vec<(usize, usize)>,
    pub seed: Option<u64>,
}

/// Indices whose prediction is `s` and those whose prediction is `t`.
fn predicted_sides(preds: &[usize], s: usize, t: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    if s == t {
        return Err(Error::InvalidArgument(format!("source and target are both class {s}")));
    }
    let side_s: Vec<usize> = (0..preds.len()).filter(|&i| preds[i] == s).collect();
    let side_t: Vec<usize> = (0..preds.len()).filter(|&i| preds[i] == t).collect();
    if side_s.is_empty() || side_t.is_empty() {
        return Err(Error::InsufficientSamples(format!(
            "{} samples predicted as {s}, {} as {t}",
            side_s.len(),
            side_t.len()
        )));
    }
    Ok((side_s, side_t))
}

/// Random pairing without replacement on both sides, `min(n_pairs, |S|, |T|)` pairs.
pub fn rpbs_pairs(
    classifier: &ClassifierModel,
    ds: &LabeledDataset,
    s: usize,
    t: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<BaselinePairing> {
    let preds = classifier.predict_all(ds.images())?;
    rpbs_from_predictions(&preds, s, t, n_pairs, seed)
}

pub fn rpbs_from_predictions(
    preds: &[usize],
    s: usize,
    t: usize,
    n_pairs: usize,
    seed: u64,
) -> Result<BaselinePairing> {
    let (mut side_s, mut side_t) = predicted_sides(preds, s, t)?;
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut side_s);
    rng.shuffle(&mut side_t);
    let n = n_pairs.min(side_s.len()).min(side_t.len());
    Ok(BaselinePairing {
        method: Method::Rpbs,
        s,
        t,
        pairs: side_s.into_iter().zip(side_t).take(n).collect(),
        seed: Some(seed),
    })
}

fn squared_distance(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (*x as f64 - *y as f64).powi(2)).sum()
}

/// Each of the first `n_pairs` s-predicted samples (in index order) is paired
/// with the t-predicted sample nearest in embedding space; ties go to the
/// lowest index.
pub fn epbs_pairs(
    classifier: &ClassifierModel,
    ds: &LabeledDataset,
    s: usize,
    t: usize,
    n_pairs: usize,
) -> Result<BaselinePairing> {
    let preds = classifier.predict_all(ds.images())?;
    let (side_s, side_t) = predicted_sides(&preds, s, t)?;
    let emb = classifier.embed_all(ds.images())?;
    let pairs = side_s
        .iter()
        .take(n_pairs)
        .map(|&i| {
            let zi = emb.row(i);
            let mut best = (f64::INFINITY, side_t[0]);
            for &j in &side_t {
                let d = squared_distance(zi, emb.row(j));
                if d < best.0 {
                    best = (d, j);
                }
            }
            (i, best.1)
        })
        .collect();
    Ok(BaselinePairing {
        method: Method::Epbs,
        s,
        t,
        pairs,
        seed: None,
    })
}

/// Refines every pairing with `x_i` as the class-`s` end.
pub fn run_baseline(
    classifier: &ClassifierModel,
    ds: &LabeledDataset,
    pairing: &BaselinePairing,
    cfg: &RefineConfig,
) -> Result<(Vec<BorderlineInstance>, RunStats)> {
    let pairs: Vec<BorderlinePair> = pairing
        .pairs
        .iter()
        .map(|&(i, j)| BorderlinePair {
            origin_index: i,
            adv_s: ds.image(i).to_vec(),
            adv_t: ds.image(j).to_vec(),
        })
        .collect();
    refine_all(classifier, &pairs, pairing.s, pairing.t, cfg)
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub method: Method,
    pub pair: (usize, usize),
    pub instances: Vec<BorderlineInstance>,
    pub per_direction: Vec<((usize, usize), RunStats)>,
    pub stats: RunStats,
}

impl BaselineResult {
    pub fn summary(&self) -> RunSummary {
        RunSummary {
            method: self.method.name().into(),
            pair: self.pair,
            combined: self.stats,
            directions: self
                .per_direction
                .iter()
                .map(|&(direction, stats)| DirectionSummary {
                    direction,
                    stats,
                    component1: None,
                    component2: None,
                })
                .collect(),
        }
    }
}

/// Runs a baseline for `(a, b)` and `(b, a)` with per-direction pair budgets.
#[allow(clippy::too_many_arguments)]
pub fn run_baseline_pairwise(
    classifier: &ClassifierModel,
    ds: &LabeledDataset,
    method: Method,
    a: usize,
    b: usize,
    budgets: [usize; 2],
    seed: u64,
    cfg: &RefineConfig,
) -> Result<BaselineResult> {
    let preds = classifier.predict_all(ds.images())?;
    let mut instances = Vec::new();
    let mut per_direction = Vec::new();
    for (k, (s, t)) in [(a, b), (b, a)].into_iter().enumerate() {
        let pairing = match method {
            Method::Rpbs => rpbs_from_predictions(&preds, s, t, budgets[k], Rng::fork(seed, k as u64).next_u64())?,
            Method::Epbs => epbs_pairs(classifier, ds, s, t, budgets[k])?,
        };
        let (inst, stats) = run_baseline(classifier, ds, &pairing, cfg)?;
        log::info!(
            "{} ({s},{t}): {}/{} borderline",
            method.name(),
            stats.successes,
            stats.pairs_fed
        );
        instances.extend(inst);
        per_direction.push(((s, t), stats));
    }
    let stats = RunStats::combine(&per_direction.iter().map(|p| p.1).collect::<Vec<_>>());
    Ok(BaselineResult {
        method,
        pair: (a, b),
        instances,
        per_direction,
        stats,
    })
}
