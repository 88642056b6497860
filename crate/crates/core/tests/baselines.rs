mod common;

use bscope::baselines::*;
use bscope::data::{synthetic_two_gaussians, LabeledDataset};
use bscope::deepdig::{score_gap, RefineConfig};
use bscope::models::{build_model, train_classifier, Arch, ClassifierModel, TrainConfig};

fn setup() -> (ClassifierModel, LabeledDataset) {
    let train = synthetic_two_gaussians(150, [[0.3, 0.3], [0.7, 0.7]], 0.12, 5).unwrap();
    let mut model = build_model(Arch::Synthetic2d, 1).unwrap();
    train_classifier(&mut model, &train, None, &TrainConfig { epochs: 6, ..TrainConfig::default() }).unwrap();
    (model, train)
}

#[test]
fn rpbs_is_seeded_and_respects_predictions() {
    let (model, ds) = setup();
    let a = rpbs_pairs(&model, &ds, 0, 1, 40, 7).unwrap();
    assert_eq!(a, rpbs_pairs(&model, &ds, 0, 1, 40, 7).unwrap());
    assert_ne!(a.pairs, rpbs_pairs(&model, &ds, 0, 1, 40, 8).unwrap().pairs);
    assert_eq!(a.pairs.len(), 40);
    let preds = model.predict_all(ds.images()).unwrap();
    for &(i, j) in &a.pairs {
        assert_eq!((preds[i], preds[j]), (0, 1));
    }
    let mut left: Vec<usize> = a.pairs.iter().map(|p| p.0).collect();
    left.sort_unstable();
    left.dedup();
    assert_eq!(left.len(), 40, "sampling with replacement");
    let all = rpbs_pairs(&model, &ds, 0, 1, usize::MAX, 7).unwrap();
    let n_s = preds.iter().filter(|&&p| p == 0).count();
    let n_t = preds.iter().filter(|&&p| p == 1).count();
    assert_eq!(all.pairs.len(), n_s.min(n_t));
}

#[test]
fn epbs_partner_is_the_exhaustive_nearest() {
    let (model, ds) = setup();
    let pairing = epbs_pairs(&model, &ds, 1, 0, 25).unwrap();
    let preds = model.predict_all(ds.images()).unwrap();
    let emb: Vec<Vec<f64>> = (0..ds.len()).map(|i| common::embedding(model.network(), ds.image(i))).collect();
    let firsts: Vec<usize> = (0..ds.len()).filter(|&i| preds[i] == 1).take(25).collect();
    assert_eq!(pairing.pairs.iter().map(|p| p.0).collect::<Vec<_>>(), firsts);
    for &(i, j) in &pairing.pairs {
        let d = |k: usize| emb[i].iter().zip(&emb[k]).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let best = (0..ds.len()).filter(|&k| preds[k] == 0).map(d).fold(f64::INFINITY, f64::min);
        assert!(d(j) <= best * (1.0 + 1e-5) + 1e-9, "{} vs {best}", d(j));
    }
    assert_eq!(pairing, epbs_pairs(&model, &ds, 1, 0, 25).unwrap());
}

#[test]
fn epbs_ties_go_to_lowest_index() {
    let (model, ds) = setup();
    let preds = model.predict_all(ds.images()).unwrap();
    let s = (0..ds.len()).find(|&i| preds[i] == 0).unwrap();
    let t = (0..ds.len()).find(|&i| preds[i] == 1).unwrap();
    // Duplicate the t sample so two candidates are equally near.
    let sub = ds.subset(&[s, t, t]).unwrap();
    let pairing = epbs_pairs(&model, &sub, 0, 1, 10).unwrap();
    assert_eq!(pairing.pairs, vec![(0, 1)]);
}

#[test]
fn single_pair_and_insufficient_samples() {
    let (model, ds) = setup();
    let preds = model.predict_all(ds.images()).unwrap();
    let s = (0..ds.len()).find(|&i| preds[i] == 0).unwrap();
    let t = (0..ds.len()).find(|&i| preds[i] == 1).unwrap();
    let sub = ds.subset(&[s, t]).unwrap();
    assert_eq!(epbs_pairs(&model, &sub, 0, 1, 5).unwrap().pairs, vec![(0, 1)]);
    assert_eq!(rpbs_pairs(&model, &sub, 0, 1, 5, 0).unwrap().pairs, vec![(0, 1)]);
    let only_s = ds.subset(&[s]).unwrap();
    assert!(rpbs_pairs(&model, &only_s, 0, 1, 5, 0).is_err());
    assert!(epbs_pairs(&model, &only_s, 0, 1, 5).is_err());
    assert!(Method::parse("nearest").is_err());
}

#[test]
fn baseline_instances_satisfy_refinement_contract() {
    let (model, ds) = setup();
    let empty = BaselinePairing { method: Method::Rpbs, s: 0, t: 1, pairs: vec![], seed: Some(0) };
    let (inst, stats) = run_baseline(&model, &ds, &empty, &RefineConfig::default()).unwrap();
    assert!(inst.is_empty());
    assert_eq!((stats.pairs_fed, stats.success_rate), (0, 0.0));

    let res = run_baseline_pairwise(&model, &ds, Method::Rpbs, 0, 1, [30, 20], 4, &RefineConfig::default()).unwrap();
    assert_eq!(res.per_direction[0].1.pairs_fed, 30);
    assert_eq!(res.per_direction[1].1.pairs_fed, 20);
    assert_eq!(res.instances.len(), res.stats.successes);
    for b in &res.instances {
        let (gap, pred) = score_gap(&model, &b.pixels, b.direction.0, b.direction.1).unwrap();
        assert!(gap < 1e-4 && (pred == b.direction.0 || pred == b.direction.1));
    }
    assert!(res.stats.mean_gap < 1e-4);
}
