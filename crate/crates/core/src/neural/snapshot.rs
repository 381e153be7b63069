//! Binary weight snapshots.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic    8 bytes  "QNEEWTS\0"
//! version  u32      currently 1
//! n_qubits u32
//! count    u32      number of tensors
//! count × {
//!     name_len u32, name (UTF-8),
//!     ndim u32, dims u64 × ndim,
//!     data f64 × prod(dims)
//! }
//! ```
//!
//! Tensors are written in [`EntropyNet::named_tensors`] order.

use std::io::{Read, Write};

use super::{EntropyNet, NetConfig, HIDDEN_LAYERS};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"QNEEWTS\0";
pub const VERSION: u32 = 1;

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(io_err)?;
    Ok(u64::from_le_bytes(b))
}

pub fn write_snapshot(net: &EntropyNet, w: &mut impl Write) -> Result<()> {
    let tensors = net.named_tensors();
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(net.n_qubits() as u32).to_le_bytes());
    buf.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, shape, data) in tensors {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&(shape.len() as u32).to_le_bytes());
        for d in shape {
            buf.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for x in data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_snapshot(r: &mut impl Read) -> Result<EntropyNet> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(io_err)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_qubits = read_u32(r)? as usize;
    let count = read_u32(r)? as usize;
    let mut tensors = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u32(r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name).map_err(io_err)?;
        let name = String::from_utf8(name).map_err(|e| Error::Format(e.to_string()))?;
        let ndim = read_u32(r)? as usize;
        let shape = (0..ndim)
            .map(|_| read_u64(r).map(|d| d as usize))
            .collect::<Result<Vec<_>>>()?;
        let len: usize = shape.iter().product();
        let mut bytes = vec![0u8; len * 8];
        r.read_exact(&mut bytes).map_err(io_err)?;
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        tensors.push((name, shape, data));
    }

    if count != 1 + 2 * (HIDDEN_LAYERS + 1) {
        return Err(Error::Format(format!("unexpected tensor count {count}")));
    }
    let embed_dim = *tensors[0].1.get(1).ok_or_else(|| Error::Format("embedding shape".into()))?;
    let hidden_width = *tensors[1].1.get(1).ok_or_else(|| Error::Format("layer shape".into()))?;
    let mut net = EntropyNet::new(
        n_qubits,
        NetConfig {
            embed_dim,
            hidden_width,
        },
        0,
    )?;
    let expected = net.named_tensors();
    for ((name, shape, _), (ename, eshape, _)) in tensors.iter().zip(&expected) {
        if name != ename || shape != eshape {
            return Err(Error::Format(format!(
                "tensor {name} {shape:?} does not match expected {ename} {eshape:?}"
            )));
        }
    }
    drop(expected);
    let flat: Vec<f64> = tensors.into_iter().flat_map(|(_, _, d)| d).collect();
    net.set_flat(&flat)?;
    Ok(net)
}
