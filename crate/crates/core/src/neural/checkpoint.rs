//! Versioned binary checkpoints: model tensors, optimizer state, epoch.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! bytes 0..4   magic "LSTM"
//! bytes 4..8   version u32 (currently 1)
//! bytes 8..16  config digest u64
//! u32 tensor count, then per tensor:
//!     u32 name length, name bytes (utf-8),
//!     u32 rank, u32 dims[rank],
//!     f64 values (product of dims)
//! u32 optimizer tensor count, same per-tensor scheme
//! ```
//!
//! Model tensors cover the trainable parameters, the batch-norm running
//! statistics, and a one-element `meta/epoch` tensor.

use super::{LstmModel, RmspropState};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"LSTM";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
}

fn write_tensor(out: &mut impl Write, tensor: &NamedTensor) -> Result<()> {
    out.write_all(&(tensor.name.len() as u32).to_le_bytes())?;
    out.write_all(tensor.name.as_bytes())?;
    out.write_all(&(tensor.dims.len() as u32).to_le_bytes())?;
    for &dim in &tensor.dims {
        out.write_all(&(dim as u32).to_le_bytes())?;
    }
    for &v in &tensor.values {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact_u32(reader: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| Error::Format("checkpoint truncated".into()))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_tensor(reader: &mut impl Read) -> Result<NamedTensor> {
    let name_len = read_exact_u32(reader)? as usize;
    if name_len > 4096 {
        return Err(Error::Format(format!(
            "implausible tensor name length {name_len}"
        )));
    }
    let mut name_bytes = vec![0u8; name_len];
    reader
        .read_exact(&mut name_bytes)
        .map_err(|_| Error::Format("checkpoint truncated in tensor name".into()))?;
    let name = String::from_utf8(name_bytes)
        .map_err(|_| Error::Format("tensor name is not utf-8".into()))?;
    let rank = read_exact_u32(reader)? as usize;
    if rank > 8 {
        return Err(Error::Format(format!("implausible tensor rank {rank}")));
    }
    let mut dims = Vec::with_capacity(rank);
    for _ in 0..rank {
        dims.push(read_exact_u32(reader)? as usize);
    }
    let count: usize = dims.iter().product();
    let mut values = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        reader
            .read_exact(&mut buf)
            .map_err(|_| Error::Format(format!("checkpoint truncated in tensor {name:?}")))?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok(NamedTensor { name, dims, values })
}

/// Collect the model tensors in their serialized order.
fn model_tensors(model: &LstmModel, epoch: usize) -> Vec<NamedTensor> {
    let specs = model.param_specs();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(specs.len());
    model.visit_params(&mut |v| values.push(v.to_vec()));
    let mut tensors: Vec<NamedTensor> = specs
        .into_iter()
        .zip(values)
        .map(|((name, dims), values)| NamedTensor { name, dims, values })
        .collect();
    for (name, values) in model.state_tensors() {
        let dims = vec![values.len()];
        tensors.push(NamedTensor { name, dims, values });
    }
    tensors.push(NamedTensor {
        name: "meta/epoch".into(),
        dims: vec![1],
        values: vec![epoch as f64],
    });
    tensors
}

/// Serialize model + optimizer at the end of `epoch`.
pub fn save(
    path: &Path,
    model: &LstmModel,
    optimizer: &RmspropState,
    epoch: usize,
    config_digest: u64,
) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    out.write_all(&CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    out.write_all(&config_digest.to_le_bytes())?;

    let tensors = model_tensors(model, epoch);
    out.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for tensor in &tensors {
        write_tensor(&mut out, tensor)?;
    }

    let specs = model.param_specs();
    out.write_all(&(optimizer.averages.len() as u32).to_le_bytes())?;
    for ((name, _), avg) in specs.iter().zip(&optimizer.averages) {
        write_tensor(
            &mut out,
            &NamedTensor {
                name: format!("opt/{name}"),
                dims: vec![avg.len()],
                values: avg.clone(),
            },
        )?;
    }
    out.flush()?;
    Ok(())
}

/// Raw checkpoint contents.
pub struct Checkpoint {
    pub config_digest: u64,
    pub tensors: Vec<NamedTensor>,
    pub optimizer_tensors: Vec<NamedTensor>,
}

/// Parse a checkpoint file without applying it.
pub fn load(path: &Path) -> Result<Checkpoint> {
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut magic = [0u8; 4];
    reader
        .read_exact(&mut magic)
        .map_err(|_| Error::Format("file too short for a checkpoint header".into()))?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::Format(format!(
            "bad checkpoint magic {magic:?}, expected \"LSTM\""
        )));
    }
    let version = read_exact_u32(&mut reader)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Format(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    let mut digest_bytes = [0u8; 8];
    reader
        .read_exact(&mut digest_bytes)
        .map_err(|_| Error::Format("checkpoint truncated in digest".into()))?;
    let config_digest = u64::from_le_bytes(digest_bytes);

    let n_tensors = read_exact_u32(&mut reader)? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        tensors.push(read_tensor(&mut reader)?);
    }
    let n_opt = read_exact_u32(&mut reader)? as usize;
    let mut optimizer_tensors = Vec::with_capacity(n_opt);
    for _ in 0..n_opt {
        optimizer_tensors.push(read_tensor(&mut reader)?);
    }
    let mut trailing = Vec::new();
    reader.read_to_end(&mut trailing)?;
    if !trailing.is_empty() {
        return Err(Error::Format(format!(
            "{} unexpected trailing bytes in checkpoint",
            trailing.len()
        )));
    }
    Ok(Checkpoint {
        config_digest,
        tensors,
        optimizer_tensors,
    })
}

/// Restore a checkpoint into a freshly initialized model and optimizer of the
/// same architecture. Returns the epoch the checkpoint was taken at.
pub fn load_into(
    path: &Path,
    model: &mut LstmModel,
    optimizer: &mut RmspropState,
    expected_digest: u64,
) -> Result<usize> {
    let checkpoint = load(path)?;
    if checkpoint.config_digest != expected_digest {
        return Err(Error::Config(format!(
            "checkpoint config digest {:016x} does not match current config {:016x}",
            checkpoint.config_digest, expected_digest
        )));
    }
    let by_name: std::collections::HashMap<&str, &NamedTensor> = checkpoint
        .tensors
        .iter()
        .map(|t| (t.name.as_str(), t))
        .collect();

    let specs = model.param_specs();
    let mut restored: Vec<Vec<f64>> = Vec::with_capacity(specs.len());
    for (name, dims) in &specs {
        let tensor = by_name
            .get(name.as_str())
            .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor {name:?}")))?;
        if &tensor.dims != dims {
            return Err(Error::Format(format!(
                "tensor {name:?} has dims {:?}, model expects {:?}",
                tensor.dims, dims
            )));
        }
        restored.push(tensor.values.clone());
    }
    let mut iter = restored.into_iter();
    model.visit_params_mut(&mut |values| {
        values.copy_from_slice(&iter.next().expect("aligned tensor list"));
    });

    for (l, layer) in model.layers.iter_mut().enumerate() {
        for (field, slot) in [
            ("bn_running_mean", &mut layer.bn.running_mean),
            ("bn_running_var", &mut layer.bn.running_var),
        ] {
            let name = format!("layer{l}/{field}");
            let tensor = by_name
                .get(name.as_str())
                .ok_or_else(|| Error::Format(format!("checkpoint is missing tensor {name:?}")))?;
            if tensor.values.len() != slot.len() {
                return Err(Error::Format(format!("tensor {name:?} has wrong length")));
            }
            slot.copy_from_slice(&tensor.values);
        }
    }

    let epoch_tensor = by_name
        .get("meta/epoch")
        .ok_or_else(|| Error::Format("checkpoint is missing meta/epoch".into()))?;
    let epoch = epoch_tensor.values.first().copied().unwrap_or(0.0) as usize;

    if checkpoint.optimizer_tensors.len() != optimizer.averages.len() {
        return Err(Error::Format(format!(
            "checkpoint has {} optimizer tensors, model needs {}",
            checkpoint.optimizer_tensors.len(),
            optimizer.averages.len()
        )));
    }
    for (((name, _), avg), tensor) in specs
        .iter()
        .zip(&mut optimizer.averages)
        .zip(&checkpoint.optimizer_tensors)
    {
        let expected = format!("opt/{name}");
        if tensor.name != expected {
            return Err(Error::Format(format!(
                "optimizer tensor {:?} out of order, expected {expected:?}",
                tensor.name
            )));
        }
        if tensor.values.len() != avg.len() {
            return Err(Error::Format(format!(
                "optimizer tensor {expected:?} has wrong length"
            )));
        }
        avg.copy_from_slice(&tensor.values);
    }
    Ok(epoch)
}
