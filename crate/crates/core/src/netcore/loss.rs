//! Softmax, cross-entropy and squared-error losses over `[B, ...]` batches.
//! Reductions accumulate in `f64`.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Probabilities below this are clamped before taking the log.
pub const PROB_FLOOR: f64 = 1e-12;

fn require_2d(t: &Tensor, what: &str) -> Result<(usize, usize)> {
    match *t.shape() {
        [b, c] => Ok((b, c)),
        _ => Err(Error::Shape(format!("{what} must be [B, c], got {:?}", t.shape()))),
    }
}

/// Row-wise softmax with max subtraction.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    let (_, c) = require_2d(logits, "logits")?;
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(c) {
        out.extend(softmax_f64(row).into_iter().map(|p| p as f32));
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Softmax of a single logit vector, in `f64`.
pub fn softmax_f64(row: &[f32]) -> Vec<f64> {
    let max = row.iter().copied().fold(f32::NEG_INFINITY, f32::max) as f64;
    let exps: Vec<f64> = row.iter().map(|&v| (v as f64 - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// One-hot `[B, c]` targets.
pub fn one_hot(labels: &[usize], classes: usize) -> Result<Tensor> {
    if labels.is_empty() {
        return Err(Error::Shape("no labels".into()));
    }
    let mut t = Tensor::zeros(vec![labels.len(), classes]);
    for (b, &l) in labels.iter().enumerate() {
        if l >= classes {
            return Err(Error::InvalidArgument(format!("label {l} >= {classes} classes")));
        }
        t.row_mut(b)[l] = 1.0;
    }
    Ok(t)
}

/// Mean over the batch of `-sum_k target_k * ln(max(p_k, 1e-12))`.
pub fn cross_entropy(probs: &Tensor, target: &Tensor) -> Result<f64> {
    let (b, _) = require_2d(probs, "probs")?;
    if probs.shape() != target.shape() {
        return Err(Error::Shape(format!(
            "probs {:?} vs target {:?}",
            probs.shape(),
            target.shape()
        )));
    }
    let total: f64 = probs
        .data()
        .iter()
        .zip(target.data())
        .filter(|(_, &t)| t != 0.0)
        .map(|(&p, &t)| -(t as f64) * (p as f64).max(PROB_FLOOR).ln())
        .sum();
    Ok(total / b as f64)
}

/// Softmax cross-entropy on logits and its fused gradient `(p - target) / B`.
pub fn softmax_cross_entropy_with_grad(logits: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    let probs = softmax(logits)?;
    let loss = cross_entropy(&probs, target)?;
    let inv_b = 1.0 / logits.batch_size() as f64;
    let grad = probs
        .data()
        .iter()
        .zip(target.data())
        .map(|(&p, &t)| ((p as f64 - t as f64) * inv_b) as f32)
        .collect();
    Ok((loss, Tensor::new(logits.shape().to_vec(), grad)?))
}

/// `(1/B) * sum_b ||x_b - y_b||^2`.
pub fn mse(x: &Tensor, y: &Tensor) -> Result<f64> {
    if x.shape() != y.shape() {
        return Err(Error::Shape(format!("mse of {:?} vs {:?}", x.shape(), y.shape())));
    }
    let total: f64 = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum();
    Ok(total / x.batch_size() as f64)
}

/// `mse(x, y)` and its gradient with respect to `x`.
pub fn mse_with_grad(x: &Tensor, y: &Tensor) -> Result<(f64, Tensor)> {
    let loss = mse(x, y)?;
    let scale = 2.0 / x.batch_size() as f64;
    let grad = x
        .data()
        .iter()
        .zip(y.data())
        .map(|(&a, &b)| ((a as f64 - b as f64) * scale) as f32)
        .collect();
    Ok((loss, Tensor::new(x.shape().to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(shape: Vec<usize>, data: Vec<f32>) -> Tensor {
        Tensor::new(shape, data).unwrap()
    }

    #[test]
    fn softmax_uniform_for_equal_logits() {
        let p = softmax(&t(vec![1, 10], vec![3.0; 10])).unwrap();
        for &v in p.data() {
            assert!((v - 0.1).abs() < 1e-7);
        }
    }

    #[test]
    fn softmax_large_logits_do_not_overflow() {
        let p = softmax(&t(vec![1, 2], vec![1000.0, 0.0])).unwrap();
        assert!((p.data()[0] - 1.0).abs() < 1e-7);
        assert!(p.data()[1] >= 0.0 && p.data()[1] < 1e-30);
    }

    #[test]
    fn softmax_reference_values() {
        // e^1, e^2, e^3 normalized.
        let (e1, e2, e3) = (1f64.exp(), 2f64.exp(), 3f64.exp());
        let s = e1 + e2 + e3;
        let expected = [e1 / s, e2 / s, e3 / s];
        let p = softmax(&t(vec![1, 3], vec![1.0, 2.0, 3.0])).unwrap();
        for (got, want) in p.data().iter().zip(expected) {
            assert!((*got as f64 - want).abs() < 1e-6);
        }
        for (want, frozen) in expected.iter().zip([0.09003, 0.24473, 0.66524]) {
            assert!((want - frozen).abs() < 1e-4);
        }
    }

    #[test]
    fn cross_entropy_cases() {
        let target = one_hot(&[2], 3).unwrap();
        let sure = t(vec![1, 3], vec![0.0, 0.0, 1.0]);
        assert_eq!(cross_entropy(&sure, &target).unwrap(), 0.0);

        let uniform = t(vec![1, 10], vec![0.1; 10]);
        let ce = cross_entropy(&uniform, &one_hot(&[4], 10).unwrap()).unwrap();
        assert!((ce - 10f64.ln()).abs() < 1e-6);

        let probs = t(vec![2, 2], vec![0.5, 0.5, 0.25, 0.75]);
        let target = one_hot(&[0, 1], 2).unwrap();
        let ce = cross_entropy(&probs, &target).unwrap();
        let want = (-(0.5f64).ln() - (0.75f64).ln()) / 2.0;
        assert!((ce - want).abs() < 1e-7);
    }

    #[test]
    fn cross_entropy_clamps_zero_probability() {
        let probs = t(vec![1, 2], vec![1.0, 0.0]);
        let ce = cross_entropy(&probs, &one_hot(&[1], 2).unwrap()).unwrap();
        assert!((ce - (-(PROB_FLOOR).ln())).abs() < 1e-9);
    }

    #[test]
    fn mse_cases() {
        let x = t(vec![1, 4], vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(mse(&x, &x).unwrap(), 0.0);
        let y = t(vec![1, 4], vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(mse(&x, &y).unwrap(), 4.0);
        assert!(mse(&x, &t(vec![2, 2], vec![0.0; 4])).is_err());
    }

    #[test]
    fn mse_matches_loop() {
        let mut rng = crate::rng::Rng::new(9);
        let a: Vec<f32> = (0..30).map(|_| rng.normal() as f32).collect();
        let b: Vec<f32> = (0..30).map(|_| rng.normal() as f32).collect();
        let mut want = 0.0f64;
        for i in 0..30 {
            want += (a[i] as f64 - b[i] as f64).powi(2);
        }
        want /= 3.0;
        let got = mse(&t(vec![3, 10], a), &t(vec![3, 10], b)).unwrap();
        assert!((got - want).abs() < 1e-12);
    }
}
