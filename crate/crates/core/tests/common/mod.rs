//! Independent scalar-loop reference implementations used as test oracles.
#![allow(dead_code, clippy::needless_range_loop)]

use bscope::netcore::{LayerSpec, Network};

/// Per-layer parameters in f64, weight first.
pub type Params = Vec<Vec<Vec<f64>>>;

pub fn params_f64(net: &Network) -> Params {
    net.params()
        .iter()
        .map(|g| g.iter().map(|t| t.data().iter().map(|&v| v as f64).collect()).collect())
        .collect()
}

/// Forward pass for one sample. Returns the output and a record of every
/// ReLU sign and max-pool winner, so callers can detect kinks.
pub fn forward(layers: &[LayerSpec], params: &Params, input_shape: &[usize], x: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut shape = input_shape.to_vec();
    let mut a = x.to_vec();
    let mut pattern = Vec::new();
    for (layer, p) in layers.iter().zip(params) {
        match *layer {
            LayerSpec::Dense { input, output, with_bias } => {
                let mut y = vec![0.0; output];
                for (o, yo) in y.iter_mut().enumerate() {
                    let mut s = if with_bias { p[1][o] } else { 0.0 };
                    for i in 0..input {
                        s += p[0][o * input + i] * a[i];
                    }
                    *yo = s;
                }
                a = y;
                shape = vec![output];
            }
            LayerSpec::Conv2d { in_channels, out_channels, kernel } => {
                let (h, w) = (shape[1], shape[2]);
                let (oh, ow) = (h - kernel + 1, w - kernel + 1);
                let mut y = vec![0.0; out_channels * oh * ow];
                for oc in 0..out_channels {
                    for r in 0..oh {
                        for c in 0..ow {
                            let mut s = p[1][oc];
                            for ic in 0..in_channels {
                                for kr in 0..kernel {
                                    for kc in 0..kernel {
                                        let wgt = p[0][((oc * in_channels + ic) * kernel + kr) * kernel + kc];
                                        s += wgt * a[(ic * h + r + kr) * w + c + kc];
                                    }
                                }
                            }
                            y[(oc * oh + r) * ow + c] = s;
                        }
                    }
                }
                a = y;
                shape = vec![out_channels, oh, ow];
            }
            LayerSpec::MaxPool { size } => {
                let (ch, h, w) = (shape[0], shape[1], shape[2]);
                let (oh, ow) = (h / size, w / size);
                let mut y = vec![0.0; ch * oh * ow];
                for c in 0..ch {
                    for r in 0..oh {
                        for q in 0..ow {
                            let mut best = (f64::NEG_INFINITY, 0);
                            for dr in 0..size {
                                for dq in 0..size {
                                    let v = a[(c * h + r * size + dr) * w + q * size + dq];
                                    if v > best.0 {
                                        best = (v, dr * size + dq);
                                    }
                                }
                            }
                            y[(c * oh + r) * ow + q] = best.0;
                            pattern.push(best.1);
                        }
                    }
                }
                a = y;
                shape = vec![ch, oh, ow];
            }
            LayerSpec::Relu => {
                for v in a.iter_mut() {
                    pattern.push((*v > 0.0) as usize);
                    *v = v.max(0.0);
                }
            }
            LayerSpec::Sigmoid => {
                for v in a.iter_mut() {
                    *v = 1.0 / (1.0 + (-*v).exp());
                }
            }
            LayerSpec::Flatten => shape = vec![a.len()],
        }
    }
    (a, pattern)
}

pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i] > v[best] {
            best = i;
        }
    }
    best
}

/// Class probabilities of `x` under `net`, computed by the oracle.
pub fn scores(net: &Network, x: &[f32]) -> Vec<f64> {
    let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    softmax(&forward(net.layers(), &params_f64(net), net.input_shape(), &xs).0)
}

/// Embedding (input of the final layer) of `x` under `net`.
pub fn embedding(net: &Network, x: &[f32]) -> Vec<f64> {
    let n = net.layers().len();
    let xs: Vec<f64> = x.iter().map(|&v| v as f64).collect();
    forward(&net.layers()[..n - 1], &params_f64(net), net.input_shape(), &xs).0
}

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns eigenvalues in descending order with matching column eigenvectors.
pub fn jacobi_eigen(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].total_cmp(&a[i][i]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = order.iter().map(|&i| (0..n).map(|k| v[k][i]).collect()).collect();
    (vals, vecs)
}

/// Sample covariance (divisor n - 1) of row vectors.
pub fn covariance(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let d = rows[0].len();
    let mut mean = vec![0.0; d];
    for r in rows {
        for j in 0..d {
            mean[j] += r[j];
        }
    }
    for m in mean.iter_mut() {
        *m /= n as f64;
    }
    let mut cov = vec![vec![0.0; d]; d];
    for r in rows {
        for i in 0..d {
            for j in 0..d {
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
            }
        }
    }
    for row in cov.iter_mut() {
        for v in row.iter_mut() {
            *v /= (n - 1) as f64;
        }
    }
    (mean, cov)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}
