use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use synthbt_neural::{Parameters, TensorBuffer, DISCRIMINATOR_INPUT, GENERATOR_INPUT};

use crate::config::GanConfig;
use crate::error::{Result, RganError};
use crate::model::{DiscriminatorParams, GanModel, GeneratorParams};
use crate::scaler::Scaler;

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const PARAMS_FILE: &str = "params.bin";
const SCALER_TENSOR: &str = "scaler";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
    /// Offset into `params.bin`, in values.
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub architecture: String,
    pub hidden_units: usize,
    pub generator_input: usize,
    pub discriminator_input: usize,
    pub seed: u64,
    pub steps_trained: u64,
    pub config: GanConfig,
    pub scaler: Scaler,
    pub tensors: Vec<TensorEntry>,
}

fn corrupt(msg: impl Into<String>) -> RganError {
    RganError::Checkpoint(msg.into())
}

/// Writes `manifest.json` and `params.bin` (little-endian f64) into `dir`.
pub fn save_checkpoint(model: &GanModel, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut buffers = model.generator.to_buffers();
    buffers.extend(model.discriminator.to_buffers());
    let s = &model.scaler;
    buffers.push((
        SCALER_TENSOR.into(),
        TensorBuffer::new(vec![3], vec![s.min, s.max, s.scaling])?,
    ));
    let mut bytes = Vec::with_capacity(8 * buffers.iter().map(|(_, b)| b.len()).sum::<usize>());
    let mut tensors = Vec::with_capacity(buffers.len());
    let mut offset = 0;
    for (name, buf) in &buffers {
        tensors.push(TensorEntry {
            name: name.clone(),
            shape: buf.shape.clone(),
            offset,
        });
        offset += buf.len();
        for v in &buf.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        architecture: "rgan".into(),
        hidden_units: model.config.hidden_units,
        generator_input: GENERATOR_INPUT,
        discriminator_input: DISCRIMINATOR_INPUT,
        seed: model.config.seed,
        steps_trained: model.steps_trained,
        config: model.config.clone(),
        scaler: model.scaler,
        tensors,
    };
    fs::write(dir.join(PARAMS_FILE), bytes)?;
    fs::write(dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))
        .map_err(|e| corrupt(format!("cannot read {}: {e}", dir.join(MANIFEST_FILE).display())))?;
    let manifest: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(format!("bad manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(corrupt(format!(
            "format version {} is not supported (expected {FORMAT_VERSION})",
            manifest.format_version
        )));
    }
    if manifest.architecture != "rgan"
        || manifest.generator_input != GENERATOR_INPUT
        || manifest.discriminator_input != DISCRIMINATOR_INPUT
    {
        return Err(corrupt("unsupported architecture"));
    }
    Ok(manifest)
}

pub fn load_checkpoint(dir: &Path) -> Result<GanModel> {
    let manifest = read_manifest(dir)?;
    let bytes = fs::read(dir.join(PARAMS_FILE))?;
    if bytes.len() % 8 != 0 {
        return Err(corrupt("parameter file length is not a multiple of 8"));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let mut buffers = Vec::with_capacity(manifest.tensors.len());
    for t in &manifest.tensors {
        let n: usize = t.shape.iter().product();
        let data = values
            .get(t.offset..t.offset + n)
            .ok_or_else(|| corrupt(format!("tensor {} runs past the end of the file", t.name)))?;
        buffers.push((t.name.clone(), TensorBuffer::new(t.shape.clone(), data.to_vec())?));
    }
    let h = manifest.hidden_units;
    if manifest.config.hidden_units != h {
        return Err(corrupt("hidden size disagrees with config"));
    }
    let mut generator = GeneratorParams {
        lstm: synthbt_neural::LstmParams::zeros(GENERATOR_INPUT, h),
        head: synthbt_neural::DenseParams::zeros(h, 1, true),
    };
    let mut discriminator = DiscriminatorParams {
        fwd: synthbt_neural::LstmParams::zeros(DISCRIMINATOR_INPUT, h),
        bwd: synthbt_neural::LstmParams::zeros(DISCRIMINATOR_INPUT, h),
        head: synthbt_neural::DenseParams::zeros(2 * h, 2, false),
    };
    generator.load_buffers(&buffers)?;
    discriminator.load_buffers(&buffers)?;
    let sc = buffers
        .iter()
        .find(|(n, _)| n == SCALER_TENSOR)
        .map(|(_, b)| b.data.clone())
        .filter(|d| d.len() == 3)
        .ok_or_else(|| corrupt("missing scaler tensor"))?;
    let scaler = Scaler::new(sc[0], sc[1], sc[2])?;
    manifest.config.validate()?;
    Ok(GanModel {
        config: manifest.config,
        generator,
        discriminator,
        scaler,
        steps_trained: manifest.steps_trained,
    })
}
