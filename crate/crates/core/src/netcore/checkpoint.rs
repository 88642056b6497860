//! JSON checkpoints:
//! `{format_version, input_shape, layers: [{kind, hyperparams}], params: [{name, shape, data}]}`
//! plus an optional free-form `model` object for higher-level metadata.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::layer::LayerSpec;
use super::network::Network;
use crate::error::{Error, Result};
use crate::io::write_atomic;
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct ParamRecord {
    name: String,
    shape: Vec<usize>,
    data: Vec<f32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CheckpointFile {
    format_version: u32,
    input_shape: Vec<usize>,
    layers: Vec<LayerSpec>,
    params: Vec<ParamRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    model: Option<serde_json::Value>,
}

pub fn checkpoint_to_string(net: &Network, model: Option<serde_json::Value>) -> Result<String> {
    let mut params = Vec::new();
    for (i, group) in net.params().iter().enumerate() {
        for (j, t) in group.iter().enumerate() {
            params.push(ParamRecord {
                name: format!("layer{i}.{}", if j == 0 { "weight" } else { "bias" }),
                shape: t.shape().to_vec(),
                data: t.data().to_vec(),
            });
        }
    }
    let file = CheckpointFile {
        format_version: FORMAT_VERSION,
        input_shape: net.input_shape().to_vec(),
        layers: net.layers().to_vec(),
        params,
        model,
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn checkpoint_from_str(text: &str) -> Result<(Network, Option<serde_json::Value>)> {
    let file: CheckpointFile =
        serde_json::from_str(text).map_err(|e| Error::Checkpoint(format!("malformed file: {e}")))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format_version {} is not supported (expected {FORMAT_VERSION})",
            file.format_version
        )));
    }
    let mut records = file.params.into_iter();
    let mut params = Vec::with_capacity(file.layers.len());
    for (i, layer) in file.layers.iter().enumerate() {
        let mut group = Vec::new();
        for (j, shape) in layer.param_shapes().into_iter().enumerate() {
            let rec = records
                .next()
                .ok_or_else(|| Error::Checkpoint(format!("missing parameter {j} of layer {i}")))?;
            if rec.shape != shape {
                return Err(Error::Checkpoint(format!(
                    "{}: declared shape {:?}, layer needs {shape:?}",
                    rec.name, rec.shape
                )));
            }
            let t = Tensor::new(rec.shape, rec.data)
                .map_err(|e| Error::Checkpoint(format!("{}: {e}", rec.name)))?;
            if !t.all_finite() {
                return Err(Error::Checkpoint(format!("{}: non-finite value", rec.name)));
            }
            group.push(t);
        }
        params.push(group);
    }
    if records.next().is_some() {
        return Err(Error::Checkpoint("more parameter records than layers need".into()));
    }
    let net = Network::from_parts(file.input_shape, file.layers, params)
        .map_err(|e| Error::Checkpoint(e.to_string()))?;
    Ok((net, file.model))
}

pub fn save_checkpoint(net: &Network, path: &Path) -> Result<()> {
    save_checkpoint_with(net, None, path)
}

pub fn save_checkpoint_with(net: &Network, model: Option<serde_json::Value>, path: &Path) -> Result<()> {
    let text = checkpoint_to_string(net, model)?;
    write_atomic(path, text.as_bytes())
}

pub fn load_checkpoint(path: &Path) -> Result<Network> {
    Ok(load_checkpoint_with(path)?.0)
}

pub fn load_checkpoint_with(path: &Path) -> Result<(Network, Option<serde_json::Value>)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    checkpoint_from_str(&text)
}
