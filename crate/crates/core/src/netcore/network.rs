use super::layer::{self, LayerSpec};
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::tensor::Tensor;

/// A feed-forward stack of layers over a fixed per-sample input shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    /// One entry per layer; empty for parameterless layers.
    params: Vec<Vec<Tensor>>,
    /// `shapes[i]` is the per-sample input shape of layer `i`; the last entry
    /// is the network output shape.
    shapes: Vec<Vec<usize>>,
}

/// Which gradients `backward_with` should produce.
#[derive(Debug, Clone, Copy)]
pub struct GradRequest {
    pub params: bool,
    pub input: bool,
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// Mirrors `Network::params`; empty when parameter gradients were not requested.
    pub params: Vec<Vec<Tensor>>,
    pub input: Option<Tensor>,
}

impl Gradients {
    pub fn iter(&self) -> impl Iterator<Item = &Tensor> {
        self.params.iter().flatten()
    }
}

impl Network {
    /// Builds a network with seeded Kaiming-uniform weights.
    pub fn new(input_shape: Vec<usize>, layers: Vec<LayerSpec>, seed: u64) -> Result<Self> {
        let mut rng = Rng::new(seed);
        let params = layers.iter().map(|l| l.init_params(&mut rng)).collect();
        Self::from_parts(input_shape, layers, params)
    }

    pub fn from_parts(
        input_shape: Vec<usize>,
        layers: Vec<LayerSpec>,
        params: Vec<Vec<Tensor>>,
    ) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Shape("network has no layers".into()));
        }
        if params.len() != layers.len() {
            return Err(Error::Shape(format!(
                "{} parameter groups for {} layers",
                params.len(),
                layers.len()
            )));
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, layer) in layers.iter().enumerate() {
            let next = layer
                .output_shape(shapes.last().unwrap())
                .map_err(|e| Error::Shape(format!("layer {i}: {e}")))?;
            let expected = layer.param_shapes();
            let got: Vec<&[usize]> = params[i].iter().map(|t| t.shape()).collect();
            if expected.len() != got.len()
                || expected.iter().zip(&got).any(|(e, g)| e.as_slice() != *g)
            {
                return Err(Error::Shape(format!(
                    "layer {i} ({}) expects params {expected:?}, got {got:?}",
                    layer.kind_name()
                )));
            }
            shapes.push(next);
        }
        Ok(Self {
            input_shape,
            layers,
            params,
            shapes,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn output_shape(&self) -> &[usize] {
        self.shapes.last().unwrap()
    }

    /// Per-sample output shape of layer `i`.
    pub fn layer_output_shape(&self, i: usize) -> &[usize] {
        &self.shapes[i + 1]
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn params(&self) -> &[Vec<Tensor>] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Vec<Tensor>] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.iter().flatten().map(Tensor::len).sum()
    }

    fn check_batch(&self, batch: &Tensor) -> Result<()> {
        if batch.shape().len() != self.input_shape.len() + 1
            || batch.shape()[1..] != self.input_shape[..]
        {
            return Err(Error::Shape(format!(
                "batch shape {:?} does not match [B] + {:?}",
                batch.shape(),
                self.input_shape
            )));
        }
        Ok(())
    }

    /// Every layer's output for `batch`; the last entry is the network output.
    pub fn forward(&self, batch: &Tensor) -> Result<Vec<Tensor>> {
        self.check_batch(batch)?;
        let mut acts: Vec<Tensor> = Vec::with_capacity(self.layers.len());
        for (i, spec) in self.layers.iter().enumerate() {
            let x = if i == 0 { batch } else { &acts[i - 1] };
            let y = layer::forward(spec, &self.params[i], x, &self.shapes[i], &self.shapes[i + 1]);
            acts.push(y);
        }
        Ok(acts)
    }

    /// Output of the final layer only.
    pub fn predict(&self, batch: &Tensor) -> Result<Tensor> {
        Ok(self.forward(batch)?.pop().unwrap())
    }

    /// Runs layers `from..` on an activation that is the output of layer `from - 1`.
    pub fn forward_from(&self, from: usize, activation: &Tensor) -> Result<Tensor> {
        if from == 0 || from > self.layers.len() {
            return Err(Error::InvalidArgument(format!("cannot resume at layer {from}")));
        }
        let expected = &self.shapes[from];
        if activation.shape()[1..] != expected[..] {
            return Err(Error::Shape(format!(
                "activation {:?} does not match layer {from} input {expected:?}",
                activation.shape()
            )));
        }
        let mut x = activation.clone();
        for i in from..self.layers.len() {
            x = layer::forward(&self.layers[i], &self.params[i], &x, &self.shapes[i], &self.shapes[i + 1]);
        }
        Ok(x)
    }

    /// Parameter gradients of a loss whose gradient w.r.t. the output is `loss_grad`.
    pub fn backward(
        &self,
        batch: &Tensor,
        activations: &[Tensor],
        loss_grad: &Tensor,
    ) -> Result<Gradients> {
        self.backward_with(
            batch,
            activations,
            loss_grad,
            GradRequest {
                params: true,
                input: false,
            },
        )
    }

    pub fn backward_with(
        &self,
        batch: &Tensor,
        activations: &[Tensor],
        loss_grad: &Tensor,
        request: GradRequest,
    ) -> Result<Gradients> {
        self.check_batch(batch)?;
        if activations.len() != self.layers.len() {
            return Err(Error::Shape(format!(
                "{} activations for {} layers",
                activations.len(),
                self.layers.len()
            )));
        }
        let out = activations.last().unwrap();
        if loss_grad.shape() != out.shape() {
            return Err(Error::Shape(format!(
                "loss gradient {:?} does not match output {:?}",
                loss_grad.shape(),
                out.shape()
            )));
        }
        let mut param_grads: Vec<Vec<Tensor>> = if request.params {
            self.params
                .iter()
                .map(|g| g.iter().map(|t| Tensor::zeros(t.shape().to_vec())).collect())
                .collect()
        } else {
            Vec::new()
        };
        // Earliest layer whose input gradient is still needed.
        let first_trainable = self.layers.iter().position(LayerSpec::is_trainable);
        let stop = if request.input {
            0
        } else if request.params {
            match first_trainable {
                Some(i) => i,
                None => self.layers.len(),
            }
        } else {
            self.layers.len()
        };

        let mut grad = loss_grad.clone();
        let mut input_grad = None;
        for i in (stop..self.layers.len()).rev() {
            let x = if i == 0 { batch } else { &activations[i - 1] };
            let want_input = i > stop || (i == 0 && request.input);
            let pg = if request.params && self.layers[i].is_trainable() {
                Some(param_grads[i].as_mut_slice())
            } else {
                None
            };
            let dx = layer::backward(
                &self.layers[i],
                &self.params[i],
                x,
                &activations[i],
                &grad,
                &self.shapes[i],
                &self.shapes[i + 1],
                pg,
                want_input,
            );
            match dx {
                Some(dx) if i == 0 => input_grad = Some(dx),
                Some(dx) => grad = dx,
                None => break,
            }
        }
        Ok(Gradients {
            params: param_grads,
            input: input_grad,
        })
    }
}
