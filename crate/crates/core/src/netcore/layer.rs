//! Layer descriptions and their batched kernels.
//!
//! Shapes here are per-sample (no batch dimension). Convolutions are stride 1
//! with no padding; max pooling uses non-overlapping `a x a` windows and floor
//! division for the output size.

use serde::{Deserialize, Serialize};

use super::gemm::{gemm, Strides};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "hyperparams", rename_all = "snake_case")]
pub enum LayerSpec {
    Dense {
        input: usize,
        output: usize,
        with_bias: bool,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    Relu,
    MaxPool {
        size: usize,
    },
    Sigmoid,
    Flatten,
}

impl LayerSpec {
    pub fn dense(input: usize, output: usize) -> Self {
        LayerSpec::Dense {
            input,
            output,
            with_bias: true,
        }
    }

    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let mismatch = |what: &str| {
            Error::Shape(format!("{self:?} cannot take input {input:?}: {what}"))
        };
        match *self {
            LayerSpec::Dense {
                input: fan_in,
                output,
                ..
            } => {
                if input != [fan_in] {
                    return Err(mismatch(&format!("expected [{fan_in}]")));
                }
                Ok(vec![output])
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => {
                let [c, h, w] = *input else {
                    return Err(mismatch("expected [C, H, W]"));
                };
                if c != in_channels {
                    return Err(mismatch(&format!("expected {in_channels} channels")));
                }
                if kernel == 0 || h < kernel || w < kernel {
                    return Err(mismatch("kernel larger than image"));
                }
                Ok(vec![out_channels, h - kernel + 1, w - kernel + 1])
            }
            LayerSpec::MaxPool { size } => {
                let [c, h, w] = *input else {
                    return Err(mismatch("expected [C, H, W]"));
                };
                if size == 0 || h < size || w < size {
                    return Err(mismatch("pool window larger than image"));
                }
                Ok(vec![c, h / size, w / size])
            }
            LayerSpec::Relu | LayerSpec::Sigmoid => Ok(input.to_vec()),
            LayerSpec::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    /// Shapes of the trainable tensors, weight first.
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerSpec::Dense {
                input,
                output,
                with_bias,
            } => {
                let mut v = vec![vec![output, input]];
                if with_bias {
                    v.push(vec![output]);
                }
                v
            }
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => vec![
                vec![out_channels, in_channels, kernel, kernel],
                vec![out_channels],
            ],
            _ => Vec::new(),
        }
    }

    /// Kaiming-uniform weights (bound `sqrt(6 / fan_in)`), zero biases.
    pub fn init_params(&self, rng: &mut Rng) -> Vec<Tensor> {
        let shapes = self.param_shapes();
        let mut out = Vec::with_capacity(shapes.len());
        for (i, shape) in shapes.into_iter().enumerate() {
            if i == 0 {
                let fan_in: usize = shape[1..].iter().product();
                let bound = (6.0 / fan_in as f64).sqrt();
                let n: usize = shape.iter().product();
                let data = (0..n)
                    .map(|_| rng.uniform_range(-bound, bound) as f32)
                    .collect();
                out.push(Tensor::new(shape, data).expect("param shape"));
            } else {
                out.push(Tensor::zeros(shape));
            }
        }
        out
    }

    pub fn is_trainable(&self) -> bool {
        matches!(self, LayerSpec::Dense { .. } | LayerSpec::Conv2d { .. })
    }

    pub(crate) fn kind_name(&self) -> &'static str {
        match self {
            LayerSpec::Dense { .. } => "dense",
            LayerSpec::Conv2d { .. } => "conv2d",
            LayerSpec::Relu => "relu",
            LayerSpec::MaxPool { .. } => "max_pool",
            LayerSpec::Sigmoid => "sigmoid",
            LayerSpec::Flatten => "flatten",
        }
    }
}

/// Batched forward for one layer. `in_shape`/`out_shape` are per-sample.
pub(crate) fn forward(
    spec: &LayerSpec,
    params: &[Tensor],
    x: &Tensor,
    in_shape: &[usize],
    out_shape: &[usize],
) -> Tensor {
    let batch = x.batch_size();
    let mut shape = vec![batch];
    shape.extend_from_slice(out_shape);
    match *spec {
        LayerSpec::Dense {
            input,
            output,
            with_bias,
        } => {
            let mut y = Tensor::zeros(shape);
            if with_bias {
                let b = params[1].data();
                for row in y.data_mut().chunks_exact_mut(output) {
                    row.copy_from_slice(b);
                }
            }
            gemm(
                batch,
                input,
                output,
                x.data(),
                Strides::row_major(input),
                params[0].data(),
                Strides::transposed(input),
                y.data_mut(),
                Strides::row_major(output),
                if with_bias { 1.0 } else { 0.0 },
            );
            y
        }
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => {
            let (h, w) = (in_shape[1], in_shape[2]);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let positions = oh * ow;
            let patch = in_channels * kernel * kernel;
            let in_width = in_channels * h * w;
            let out_width = out_channels * positions;
            let mut y = Tensor::zeros(shape);
            let mut col = vec![0.0f32; positions * patch];
            let bias = params[1].data();
            for b in 0..batch {
                im2col(
                    &x.data()[b * in_width..(b + 1) * in_width],
                    in_channels,
                    h,
                    w,
                    kernel,
                    &mut col,
                );
                let out = &mut y.data_mut()[b * out_width..(b + 1) * out_width];
                for (o, chunk) in out.chunks_exact_mut(positions).enumerate() {
                    chunk.fill(bias[o]);
                }
                // out[o, p] += sum_q col[p, q] * weight[o, q]
                gemm(
                    positions,
                    patch,
                    out_channels,
                    &col,
                    Strides::row_major(patch),
                    params[0].data(),
                    Strides::transposed(patch),
                    out,
                    Strides::transposed(positions),
                    1.0,
                );
            }
            y
        }
        LayerSpec::Relu => map(x, shape, |v| v.max(0.0)),
        LayerSpec::Sigmoid => map(x, shape, |v| 1.0 / (1.0 + (-v).exp())),
        LayerSpec::Flatten => Tensor::new(shape, x.data().to_vec()).expect("flatten"),
        LayerSpec::MaxPool { size } => {
            let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let mut y = Tensor::zeros(shape);
            let in_width = c * h * w;
            let out_width = c * oh * ow;
            for b in 0..batch {
                let src = &x.data()[b * in_width..(b + 1) * in_width];
                let dst = &mut y.data_mut()[b * out_width..(b + 1) * out_width];
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let idx = pool_argmax(src, ch, h, w, size, oy, ox);
                            dst[(ch * oh + oy) * ow + ox] = src[idx];
                        }
                    }
                }
            }
            y
        }
    }
}

/// Batched backward for one layer.
///
/// Accumulates parameter gradients into `param_grads` when given and returns
/// the gradient with respect to the layer input when `want_input` is set.
#[allow(clippy::too_many_arguments)]
pub(crate) fn backward(
    spec: &LayerSpec,
    params: &[Tensor],
    x: &Tensor,
    y: &Tensor,
    dy: &Tensor,
    in_shape: &[usize],
    out_shape: &[usize],
    param_grads: Option<&mut [Tensor]>,
    want_input: bool,
) -> Option<Tensor> {
    let batch = x.batch_size();
    match *spec {
        LayerSpec::Dense {
            input,
            output,
            with_bias,
        } => {
            if let Some(grads) = param_grads {
                // dW[o, i] = sum_b dy[b, o] * x[b, i]
                gemm(
                    output,
                    batch,
                    input,
                    dy.data(),
                    Strides::transposed(output),
                    x.data(),
                    Strides::row_major(input),
                    grads[0].data_mut(),
                    Strides::row_major(input),
                    1.0,
                );
                if with_bias {
                    let db = grads[1].data_mut();
                    for o in 0..output {
                        let s: f64 = dy.data()[o..]
                            .iter()
                            .step_by(output)
                            .map(|&v| v as f64)
                            .sum();
                        db[o] += s as f32;
                    }
                }
            }
            want_input.then(|| {
                let mut dx = Tensor::zeros(x.shape().to_vec());
                gemm(
                    batch,
                    output,
                    input,
                    dy.data(),
                    Strides::row_major(output),
                    params[0].data(),
                    Strides::row_major(input),
                    dx.data_mut(),
                    Strides::row_major(input),
                    0.0,
                );
                dx
            })
        }
        LayerSpec::Conv2d {
            in_channels,
            out_channels,
            kernel,
        } => {
            let (h, w) = (in_shape[1], in_shape[2]);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let positions = oh * ow;
            let patch = in_channels * kernel * kernel;
            let in_width = in_channels * h * w;
            let out_width = out_channels * positions;
            let mut col = vec![0.0f32; positions * patch];
            let mut dcol = vec![0.0f32; positions * patch];
            let mut dx = want_input.then(|| Tensor::zeros(x.shape().to_vec()));
            let mut grads = param_grads;
            for b in 0..batch {
                let dout = &dy.data()[b * out_width..(b + 1) * out_width];
                if let Some(grads) = grads.as_deref_mut() {
                    im2col(
                        &x.data()[b * in_width..(b + 1) * in_width],
                        in_channels,
                        h,
                        w,
                        kernel,
                        &mut col,
                    );
                    // dW[o, q] += sum_p dout[o, p] * col[p, q]
                    gemm(
                        out_channels,
                        positions,
                        patch,
                        dout,
                        Strides::row_major(positions),
                        &col,
                        Strides::row_major(patch),
                        grads[0].data_mut(),
                        Strides::row_major(patch),
                        1.0,
                    );
                    let db = grads[1].data_mut();
                    for (o, chunk) in dout.chunks_exact(positions).enumerate() {
                        db[o] += chunk.iter().map(|&v| v as f64).sum::<f64>() as f32;
                    }
                }
                if let Some(dx) = dx.as_mut() {
                    // dcol[p, q] = sum_o dout[o, p] * weight[o, q]
                    gemm(
                        positions,
                        out_channels,
                        patch,
                        dout,
                        Strides::transposed(positions),
                        params[0].data(),
                        Strides::row_major(patch),
                        &mut dcol,
                        Strides::row_major(patch),
                        0.0,
                    );
                    col2im_add(
                        &dcol,
                        in_channels,
                        h,
                        w,
                        kernel,
                        &mut dx.data_mut()[b * in_width..(b + 1) * in_width],
                    );
                }
            }
            dx
        }
        LayerSpec::Relu => want_input.then(|| {
            zip_map(y, dy, |out, g| if out > 0.0 { g } else { 0.0 })
        }),
        LayerSpec::Sigmoid => want_input.then(|| zip_map(y, dy, |s, g| g * s * (1.0 - s))),
        LayerSpec::Flatten => want_input
            .then(|| Tensor::new(x.shape().to_vec(), dy.data().to_vec()).expect("flatten")),
        LayerSpec::MaxPool { size } => want_input.then(|| {
            let (c, h, w) = (in_shape[0], in_shape[1], in_shape[2]);
            let (oh, ow) = (out_shape[1], out_shape[2]);
            let in_width = c * h * w;
            let out_width = c * oh * ow;
            let mut dx = Tensor::zeros(x.shape().to_vec());
            for b in 0..batch {
                let src = &x.data()[b * in_width..(b + 1) * in_width];
                let g = &dy.data()[b * out_width..(b + 1) * out_width];
                let dst = &mut dx.data_mut()[b * in_width..(b + 1) * in_width];
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let idx = pool_argmax(src, ch, h, w, size, oy, ox);
                            dst[idx] += g[(ch * oh + oy) * ow + ox];
                        }
                    }
                }
            }
            dx
        }),
    }
}

/// Flat index of the first maximum in a pooling window.
#[inline]
fn pool_argmax(src: &[f32], ch: usize, h: usize, w: usize, size: usize, oy: usize, ox: usize) -> usize {
    let mut best = (ch * h + oy * size) * w + ox * size;
    for dy in 0..size {
        let row = (ch * h + oy * size + dy) * w + ox * size;
        for dx in 0..size {
            if src[row + dx] > src[best] {
                best = row + dx;
            }
        }
    }
    best
}

/// `col[p, (c, ki, kj)] = x[c, oy + ki, ox + kj]` with `p = oy * ow + ox`.
fn im2col(x: &[f32], channels: usize, h: usize, w: usize, k: usize, col: &mut [f32]) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let patch = channels * k * k;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &mut col[(oy * ow + ox) * patch..(oy * ow + ox + 1) * patch];
            let mut q = 0;
            for c in 0..channels {
                for ki in 0..k {
                    let src = (c * h + oy + ki) * w + ox;
                    row[q..q + k].copy_from_slice(&x[src..src + k]);
                    q += k;
                }
            }
        }
    }
}

fn col2im_add(col: &[f32], channels: usize, h: usize, w: usize, k: usize, dx: &mut [f32]) {
    let (oh, ow) = (h - k + 1, w - k + 1);
    let patch = channels * k * k;
    for oy in 0..oh {
        for ox in 0..ow {
            let row = &col[(oy * ow + ox) * patch..(oy * ow + ox + 1) * patch];
            let mut q = 0;
            for c in 0..channels {
                for ki in 0..k {
                    let dst = (c * h + oy + ki) * w + ox;
                    for kj in 0..k {
                        dx[dst + kj] += row[q + kj];
                    }
                    q += k;
                }
            }
        }
    }
}

fn map(x: &Tensor, shape: Vec<usize>, f: impl Fn(f32) -> f32) -> Tensor {
    Tensor::new(shape, x.data().iter().map(|&v| f(v)).collect()).expect("elementwise")
}

fn zip_map(a: &Tensor, b: &Tensor, f: impl Fn(f32, f32) -> f32) -> Tensor {
    let data = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(&u, &v)| f(u, v))
        .collect();
    Tensor::new(a.shape().to_vec(), data).expect("elementwise")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_rules() {
        assert_eq!(
            LayerSpec::conv(1, 10, 3).output_shape(&[1, 28, 28]).unwrap(),
            vec![10, 26, 26]
        );
        assert_eq!(
            LayerSpec::MaxPool { size: 2 }.output_shape(&[10, 11, 11]).unwrap(),
            vec![10, 5, 5]
        );
        assert_eq!(LayerSpec::Flatten.output_shape(&[10, 5, 5]).unwrap(), vec![250]);
        assert!(LayerSpec::dense(3, 2).output_shape(&[4]).is_err());
        assert!(LayerSpec::conv(2, 1, 3).output_shape(&[1, 5, 5]).is_err());
    }

    #[test]
    fn maxpool_ties_route_to_first() {
        let x = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        let spec = LayerSpec::MaxPool { size: 2 };
        let y = forward(&spec, &[], &x, &[1, 2, 2], &[1, 1, 1]);
        let dy = Tensor::new(vec![1, 1, 1, 1], vec![3.0]).unwrap();
        let dx = backward(&spec, &[], &x, &y, &dy, &[1, 2, 2], &[1, 1, 1], None, true).unwrap();
        assert_eq!(dx.data(), &[3.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn conv_matches_direct_loop() {
        let mut rng = Rng::new(5);
        let spec = LayerSpec::conv(2, 3, 2);
        let params = spec.init_params(&mut rng);
        let mut params = params;
        params[1] = Tensor::new(vec![3], vec![0.1, -0.2, 0.3]).unwrap();
        let x_data: Vec<f32> = (0..2 * 2 * 4 * 3).map(|_| rng.normal() as f32).collect();
        let x = Tensor::new(vec![2, 2, 4, 3], x_data).unwrap();
        let y = forward(&spec, &params, &x, &[2, 4, 3], &[3, 3, 2]);
        let wt = params[0].data();
        for b in 0..2 {
            for o in 0..3 {
                for oy in 0..3 {
                    for ox in 0..2 {
                        let mut s = params[1].data()[o] as f64;
                        for c in 0..2 {
                            for ki in 0..2 {
                                for kj in 0..2 {
                                    s += wt[((o * 2 + c) * 2 + ki) * 2 + kj] as f64
                                        * x.data()[((b * 2 + c) * 4 + oy + ki) * 3 + ox + kj] as f64;
                                }
                            }
                        }
                        let got = y.data()[((b * 3 + o) * 3 + oy) * 2 + ox] as f64;
                        assert!((got - s).abs() < 1e-5, "{got} vs {s}");
                    }
                }
            }
        }
    }
}
