//! Property tests for the numerical invariants.
#![allow(clippy::needless_range_loop)]

use bscope::charmetrics::{self, fit_linear_svm, fit_pca, hyperplane_distance, interpolate, oscillation_of, project_pca, SvmConfig, SvmModel};
use bscope::data::{load_idx, split_indices, SplitSpec};
use bscope::deepdig::{BorderlineInstance, FailReason, RefineOutcome, RunStats};
use bscope::netcore::loss::softmax;
use bscope::netcore::{adam_step, checkpoint_from_str, checkpoint_to_string, AdamConfig, AdamState, LayerSpec, Network};
use bscope::{Rng, Tensor};
use proptest::prelude::*;

fn small_net(seed: u64, conv: bool) -> Network {
    if conv {
        let layers = vec![
            LayerSpec::conv(1, 2, 3),
            LayerSpec::MaxPool { size: 2 },
            LayerSpec::Relu,
            LayerSpec::Flatten,
            LayerSpec::dense(8, 3),
        ];
        Network::new(vec![1, 6, 6], layers, seed).unwrap()
    } else {
        let layers = vec![LayerSpec::dense(4, 5), LayerSpec::Sigmoid, LayerSpec::Dense { input: 5, output: 2, with_bias: false }];
        Network::new(vec![4], layers, seed).unwrap()
    }
}

fn points(n: usize, d: usize, seed: u64, spread: &[f64]) -> Tensor {
    let mut rng = Rng::new(seed);
    let data = (0..n * d).map(|i| (rng.normal() * spread[i % d]) as f32).collect();
    Tensor::new(vec![n, d], data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn softmax_rows_sum_to_one_and_ignore_shifts(
        logits in prop::collection::vec(-30.0f32..30.0, 1..40),
        shift in -50.0f32..50.0,
    ) {
        let n = logits.len();
        let p = softmax(&Tensor::new(vec![1, n], logits.clone()).unwrap()).unwrap();
        let sum: f64 = p.data().iter().map(|&v| v as f64).sum();
        prop_assert!((sum - 1.0).abs() < 1e-6);
        let shifted: Vec<f32> = logits.iter().map(|v| v + shift).collect();
        let q = softmax(&Tensor::new(vec![1, n], shifted).unwrap()).unwrap();
        for (a, b) in p.data().iter().zip(q.data()) {
            prop_assert!((a - b).abs() < 1e-5);
        }
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise(seed in any::<u64>(), conv in any::<bool>(), scale in -1e3f32..1e3) {
        let mut net = small_net(seed, conv);
        for group in net.params_mut() {
            for t in group.iter_mut() {
                for v in t.data_mut() {
                    *v *= scale;
                }
            }
        }
        let (back, _) = checkpoint_from_str(&checkpoint_to_string(&net, None).unwrap()).unwrap();
        for (a, b) in net.params().iter().flatten().zip(back.params().iter().flatten()) {
            let bits_a: Vec<u32> = a.data().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u32> = b.data().iter().map(|v| v.to_bits()).collect();
            prop_assert_eq!(bits_a, bits_b);
        }
        prop_assert_eq!(back, net);
    }

    #[test]
    fn adam_zero_gradient_is_identity(seed in any::<u64>(), steps in 1usize..5) {
        let mut net = small_net(seed, seed % 2 == 0);
        let before = net.clone();
        let zeros = bscope::netcore::Gradients {
            params: net.params().iter().map(|g| g.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect()).collect(),
            input: None,
        };
        let mut state = AdamState::new(&net, AdamConfig::with_schedule(0.01, 0.99, 100));
        for _ in 0..steps {
            adam_step(&mut net, &zeros, &mut state).unwrap();
        }
        prop_assert_eq!(net, before);
    }

    #[test]
    fn idx_pixels_lie_in_unit_interval(body in prop::collection::vec(any::<u8>(), 12)) {
        let dir = tempfile::tempdir().unwrap();
        let mut images = 2051u32.to_be_bytes().to_vec();
        for d in [3u32, 2, 2] {
            images.extend_from_slice(&d.to_be_bytes());
        }
        images.extend_from_slice(&body);
        let mut labels = 2049u32.to_be_bytes().to_vec();
        labels.extend_from_slice(&3u32.to_be_bytes());
        labels.extend_from_slice(&[0, 1, 2]);
        std::fs::write(dir.path().join("i"), images).unwrap();
        std::fs::write(dir.path().join("l"), labels).unwrap();
        let names = (0..3).map(|i| i.to_string()).collect();
        let ds = load_idx(&dir.path().join("i"), &dir.path().join("l"), names).unwrap();
        for (&v, &b) in ds.images().data().iter().zip(&body) {
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert_eq!(v, b as f32 / 255.0);
        }
    }

    #[test]
    fn split_partitions_indices(n in 2usize..500, frac in 0.01f64..0.99, seed in any::<u64>()) {
        let spec = SplitSpec::new(frac, seed).unwrap();
        let (a, b) = split_indices(n, spec).unwrap();
        prop_assert!(!a.is_empty() && !b.is_empty());
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        prop_assert_eq!(split_indices(n, spec).unwrap(), (a, b));
    }

    #[test]
    fn interpolation_stays_between_endpoints_and_is_symmetric(
        xi in prop::collection::vec(-2.0f32..2.0, 1..20),
        seed in any::<u64>(),
        m in 2usize..64,
    ) {
        let mut rng = Rng::new(seed);
        let xj: Vec<f32> = xi.iter().map(|_| rng.uniform_range(-2.0, 2.0) as f32).collect();
        let fwd = interpolate(&xi, &xj, m).unwrap();
        let mut rev = interpolate(&xj, &xi, m).unwrap();
        rev.reverse();
        prop_assert_eq!(&fwd, &rev);
        prop_assert_eq!(&fwd[0], &xj);
        prop_assert_eq!(&fwd[m - 1], &xi);
        for p in &fwd {
            for k in 0..xi.len() {
                prop_assert!(p[k] >= xi[k].min(xj[k]) && p[k] <= xi[k].max(xj[k]));
            }
        }
    }

    #[test]
    fn oscillation_range_and_reversal(preds in prop::collection::vec(0usize..3, 2..80)) {
        let m = preds.len();
        let o = oscillation_of(&preds);
        prop_assert!(o >= 0.0 && o <= (m - 1) as f64 / m as f64);
        let mut rev = preds.clone();
        rev.reverse();
        prop_assert_eq!(oscillation_of(&rev), o);
    }

    #[test]
    fn hyperplane_distance_is_scale_invariant(
        w in prop::collection::vec(-5.0f64..5.0, 3),
        b in -5.0f64..5.0,
        z in prop::collection::vec(-5.0f32..5.0, 3),
        c in 0.01f64..100.0,
    ) {
        prop_assume!(w.iter().any(|v| v.abs() > 1e-3));
        let svm = SvmModel { w: w.clone(), b, gamma: 1.0, objective: 0.0 };
        let scaled = SvmModel { w: w.iter().map(|v| v * c).collect(), b: b * c, gamma: 1.0, objective: 0.0 };
        let d1 = hyperplane_distance(&svm, &z).unwrap();
        let d2 = hyperplane_distance(&scaled, &z).unwrap();
        prop_assert!((d1 - d2).abs() <= 1e-9 * d1.max(1.0));
        prop_assert_eq!(svm.classify(&z), scaled.classify(&z));
    }

    #[test]
    fn svm_separates_scaled_separable_blobs(seed in any::<u64>(), scale in 0.1f32..10.0) {
        let mut rng = Rng::new(seed);
        let n = 60;
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let y = if i % 2 == 0 { 1.0 } else { -1.0 };
            data.push((y * 2.0 + rng.uniform_range(-0.8, 0.8)) as f32);
            data.push(rng.uniform_range(-3.0, 3.0) as f32);
            labels.push(y);
        }
        let cfg = SvmConfig { epochs: 50, seed, ..SvmConfig::default() };
        let x = Tensor::new(vec![n, 2], data.clone()).unwrap();
        let xs = Tensor::new(vec![n, 2], data.iter().map(|v| v * scale).collect()).unwrap();
        let a = fit_linear_svm(&x, &labels, &cfg).unwrap();
        let b = fit_linear_svm(&xs, &labels, &cfg).unwrap();
        prop_assert_eq!(charmetrics::svm_accuracy(&a, &x, &labels).unwrap(), 100.0);
        prop_assert_eq!(charmetrics::svm_accuracy(&b, &xs, &labels).unwrap(), 100.0);
    }

    #[test]
    fn pca_components_orthonormal_and_decorrelating(seed in any::<u64>(), d in 2usize..8) {
        let spread: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
        let x = points(80, d, seed, &spread);
        let pca = fit_pca(&x).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let dot: f64 = pca.components[i].iter().zip(&pca.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-6);
            }
            let lead = pca.components[i].iter().cloned().fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            prop_assert!(lead > 0.0);
        }
        let proj = project_pca(&pca, &x).unwrap();
        let n = proj.len() as f64;
        let mean: Vec<f64> = (0..2).map(|c| proj.iter().map(|p| p[c]).sum::<f64>() / n).collect();
        prop_assert!(mean.iter().all(|m| m.abs() < 1e-6));
        let cov = |a: usize, b: usize| proj.iter().map(|p| p[a] * p[b]).sum::<f64>() / (n - 1.0);
        let scale = cov(0, 0);
        prop_assert!(cov(0, 1).abs() < 1e-6 * scale);
        prop_assert!(cov(0, 0) >= cov(1, 1));
        prop_assert!((cov(0, 0) - pca.explained_variance[0]).abs() < 1e-6 * scale);
    }

    #[test]
    fn pca_projection_is_affine_with_orthogonal_residual(seed in any::<u64>()) {
        let x = points(50, 4, seed, &[3.0, 2.0, 1.0, 0.5]);
        let pca = fit_pca(&x).unwrap();
        let mean32: Vec<f32> = pca.mean.iter().map(|&v| v as f32).collect();
        let origin = project_pca(&pca, &Tensor::new(vec![1, 4], mean32).unwrap()).unwrap()[0];
        prop_assert!(origin[0].abs() < 1e-6 && origin[1].abs() < 1e-6);
        let a = [0.5f32, -1.0, 2.0, 0.25];
        let b = [1.5f32, 0.5, -0.5, 1.0];
        let sum: Vec<f32> = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        let rows = Tensor::new(vec![4, 4], [sum.as_slice(), &b, &a, &[0.0; 4]].concat()).unwrap();
        let p = project_pca(&pca, &rows).unwrap();
        for c in 0..2 {
            prop_assert!(((p[0][c] - p[1][c]) - (p[2][c] - p[3][c])).abs() < 1e-9);
        }
        // Residual of a after removing its projection is orthogonal to both axes.
        let pa = &p[2];
        let resid: Vec<f64> = (0..4)
            .map(|k| a[k] as f64 - pca.mean[k] - pa[0] * pca.components[0][k] - pa[1] * pca.components[1][k])
            .collect();
        for c in 0..2 {
            let dot: f64 = resid.iter().zip(&pca.components[c]).map(|(r, v)| r * v).sum();
            prop_assert!(dot.abs() < 1e-9);
        }
    }

    #[test]
    fn run_stats_rate_formula(succ in 0usize..50, esc in 0usize..50, nc in 0usize..5) {
        let mut outcomes = Vec::new();
        for i in 0..succ {
            outcomes.push(RefineOutcome::Borderline(BorderlineInstance {
                origin_index: i, direction: (0, 1), gap: 1e-5 * (i % 10) as f64, predicted: 0, iterations: 3, pixels: vec![0.0],
            }));
        }
        outcomes.extend((0..esc).map(|_| RefineOutcome::Fail(FailReason::RegionEscape)));
        outcomes.extend((0..nc).map(|_| RefineOutcome::Fail(FailReason::NoConvergence)));
        let s = RunStats::from_outcomes(&outcomes);
        prop_assert_eq!(s.pairs_fed, succ + esc + nc);
        if s.pairs_fed > 0 {
            prop_assert_eq!(s.success_rate, 100.0 * succ as f64 / s.pairs_fed as f64);
        } else {
            prop_assert_eq!(s.success_rate, 0.0);
        }
        prop_assert!(s.mean_gap < 1e-4);
        let both = RunStats::combine(&[s, s]);
        prop_assert_eq!(both.successes, 2 * succ);
        prop_assert!((both.success_rate - s.success_rate).abs() < 1e-9);
    }
}

#[test]
fn pca_rejects_rank_one() {
    let x = Tensor::new(vec![3, 2], vec![1.0, 2.0, 2.0, 4.0, 3.0, 6.0]).unwrap();
    assert!(fit_pca(&x).is_err());
}

#[test]
fn pca_axis_aligned_data_recovers_axes() {
    let x = points(400, 2, 3, &[5.0, 1.0]);
    let pca = fit_pca(&x).unwrap();
    assert!(pca.components[0][0] > 0.99);
    assert!(pca.components[1][1].abs() > 0.99);
}

#[test]
fn hyperplane_distance_by_hand() {
    let svm = SvmModel { w: vec![1.0, 0.0], b: 0.0, gamma: 1.0, objective: 0.0 };
    assert_eq!(hyperplane_distance(&svm, &[3.0, 7.0]).unwrap(), 3.0);
    assert_eq!(hyperplane_distance(&svm, &[0.0, 7.0]).unwrap(), 0.0);
    let zero = SvmModel { w: vec![0.0, 0.0], ..svm };
    assert!(hyperplane_distance(&zero, &[1.0, 1.0]).is_err());
}

#[test]
fn svm_rejects_single_class() {
    let x = Tensor::new(vec![2, 1], vec![1.0, 2.0]).unwrap();
    assert!(fit_linear_svm(&x, &[1.0, 1.0], &SvmConfig::default()).is_err());
}

#[test]
fn edc_extremes() {
    let svm = SvmModel { w: vec![1.0, 0.0], b: 0.0, gamma: 1.0, objective: 0.0 };
    let on_plane = Tensor::new(vec![2, 2], vec![0.0, 1.0, 0.0, -3.0]).unwrap();
    let test = Tensor::new(vec![2, 2], vec![2.0, 0.0, -4.0, 0.0]).unwrap();
    let (b, t) = charmetrics::edc1(&svm, &on_plane, &test).unwrap();
    assert_eq!(b, 0.0);
    assert_eq!(t, 0.75);
    let (acc_b, acc_t) = charmetrics::edc2(&svm, (&on_plane, &[1.0, -1.0]), (&test, &[1.0, -1.0])).unwrap();
    assert_eq!(acc_b, 50.0);
    assert_eq!(acc_t, 100.0);
}

#[test]
fn oscillation_examples() {
    assert_eq!(oscillation_of(&[0, 0, 1, 1, 0]), 0.4);
    assert_eq!(oscillation_of(&[3; 7]), 0.0);
    assert_eq!(oscillation_of(&[0, 1, 0, 1]), 0.75);
    let mid = interpolate(&[0.0; 3], &[1.0; 3], 3).unwrap();
    assert_eq!(mid[1], vec![0.5; 3]);
    assert_eq!(interpolate(&[1.0], &[2.0], 2).unwrap(), vec![vec![2.0], vec![1.0]]);
    assert!(interpolate(&[1.0], &[2.0], 1).is_err());
}
