//! Model weight files.
//!
//! Layout, little-endian throughout:
//!
//! ```text
//! "PLSW" | version u8 = 1 | layers u8
//! layers x ( rows u32 | cols u32 | rows*cols f32 weights, row-major | cols f32 biases )
//! trailer: n u16 | lambda f64 | level u8 | epochs u32 | batch u32
//!          | init seed u64 | shuffle seed u64 | provenance len u32 | provenance utf-8
//! ```
//!
//! `rows` is the layer's input width and `cols` its output width.

use std::io::{Read, Write};

use super::mlp::{Layer, Mlp};
use crate::error::{Error, Result};
use crate::propagate::KnowledgeLevel;

pub const MODEL_MAGIC: &[u8; 4] = b"PLSW";
pub const MODEL_VERSION: u8 = 0x01;

/// Training provenance stored after the weights.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelMeta {
    pub n: u16,
    pub lambda: f64,
    pub level: KnowledgeLevel,
    pub epochs: u32,
    pub batch_size: u32,
    pub init_seed: u64,
    pub shuffle_seed: u64,
    /// Free-form provenance, e.g. a config hash.
    pub provenance: String,
}

pub fn write_model<W: Write>(model: &Mlp<f32>, meta: &ModelMeta, mut w: W) -> Result<()> {
    let layers = model.layers();
    let count = u8::try_from(layers.len()).map_err(|_| Error::Format("more than 255 layers".into()))?;
    w.write_all(MODEL_MAGIC)?;
    w.write_all(&[MODEL_VERSION, count])?;
    for l in layers {
        w.write_all(&(l.inputs as u32).to_le_bytes())?;
        w.write_all(&(l.outputs as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(4 * (l.weights.len() + l.bias.len()));
        for v in l.weights.iter().chain(&l.bias) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    w.write_all(&meta.n.to_le_bytes())?;
    w.write_all(&meta.lambda.to_le_bytes())?;
    w.write_all(&[meta.level.code()])?;
    w.write_all(&meta.epochs.to_le_bytes())?;
    w.write_all(&meta.batch_size.to_le_bytes())?;
    w.write_all(&meta.init_seed.to_le_bytes())?;
    w.write_all(&meta.shuffle_seed.to_le_bytes())?;
    w.write_all(&(meta.provenance.len() as u32).to_le_bytes())?;
    w.write_all(meta.provenance.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn take<const N: usize, R: Read>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_f32s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f32>> {
    let mut bytes = vec![0u8; count * 4];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

pub fn read_model<R: Read>(mut r: R) -> Result<(Mlp<f32>, ModelMeta)> {
    let magic: [u8; 4] = take(&mut r)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad model magic {magic:?}")));
    }
    let [version, count] = take(&mut r)?;
    if version != MODEL_VERSION {
        return Err(Error::Format(format!("unsupported model version {version}")));
    }
    let mut layers = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let inputs = u32::from_le_bytes(take(&mut r)?) as usize;
        let outputs = u32::from_le_bytes(take(&mut r)?) as usize;
        if inputs.checked_mul(outputs).map_or(true, |p| p > 1 << 30) {
            return Err(Error::Format(format!("implausible layer size {inputs} x {outputs}")));
        }
        let weights = read_f32s(&mut r, inputs * outputs)?;
        let bias = read_f32s(&mut r, outputs)?;
        layers.push(Layer {
            inputs,
            outputs,
            weights,
            bias,
        });
    }
    let model = Mlp::from_layers(layers).map_err(|e| Error::Format(e.to_string()))?;
    let n = u16::from_le_bytes(take(&mut r)?);
    let lambda = f64::from_le_bytes(take(&mut r)?);
    let [level] = take(&mut r)?;
    let level = KnowledgeLevel::from_code(level)?;
    let epochs = u32::from_le_bytes(take(&mut r)?);
    let batch_size = u32::from_le_bytes(take(&mut r)?);
    let init_seed = u64::from_le_bytes(take(&mut r)?);
    let shuffle_seed = u64::from_le_bytes(take(&mut r)?);
    let len = u32::from_le_bytes(take(&mut r)?) as usize;
    let mut prov = vec![0u8; len];
    r.read_exact(&mut prov)?;
    let provenance = String::from_utf8(prov).map_err(|e| Error::Format(e.to_string()))?;
    Ok((
        model,
        ModelMeta {
            n,
            lambda,
            level,
            epochs,
            batch_size,
            init_seed,
            shuffle_seed,
            provenance,
        },
    ))
}
