//! Model checkpoint file: a magic tag, a one-line JSON header carrying the
//! model config and a manifest of tensor names/shapes, then the tensor data
//! as little-endian 64-bit floats in row-major order. Round-trips are
//! bit-exact.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::model::{ModelConfig, ModelParams};

const MAGIC: &[u8; 8] = b"SPANET\x01\n";

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Serialize, Deserialize)]
struct HeaderJson {
    config: ModelConfig,
    tensors: Vec<TensorMeta>,
}

pub fn save(path: &Path, cfg: &ModelConfig, params: &ModelParams) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    let header = HeaderJson {
        config: cfg.clone(),
        tensors: params
            .names
            .iter()
            .zip(params.tensors.iter())
            .map(|(name, t)| TensorMeta { name: name.clone(), rows: t.nrows(), cols: t.ncols() })
            .collect(),
    };
    let mut file = BufWriter::new(std::fs::File::create(path)?);
    file.write_all(MAGIC)?;
    serde_json::to_writer(&mut file, &header)?;
    file.write_all(b"\n")?;
    for t in &params.tensors {
        for r in 0..t.nrows() {
            for c in 0..t.ncols() {
                file.write_f64::<LittleEndian>(t[(r, c)])?;
            }
        }
    }
    file.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<(ModelConfig, ModelParams)> {
    let mut file = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    file.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::data("not a model checkpoint (bad magic)"));
    }
    let mut header_bytes = Vec::new();
    loop {
        let mut byte = [0u8; 1];
        file.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        header_bytes.push(byte[0]);
    }
    let header: HeaderJson = serde_json::from_slice(&header_bytes)
        .map_err(|e| Error::data(format!("bad checkpoint header: {e}")))?;

    let mut names = Vec::with_capacity(header.tensors.len());
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for meta in header.tensors {
        let mut t = DMatrix::<f64>::zeros(meta.rows, meta.cols);
        for r in 0..meta.rows {
            for c in 0..meta.cols {
                t[(r, c)] = file.read_f64::<LittleEndian>()?;
            }
        }
        names.push(meta.name);
        tensors.push(t);
    }
    Ok((header.config, ModelParams { names, tensors }))
}
