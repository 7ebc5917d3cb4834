//! Flat little-endian parameter files.
//!
//! ```text
//! magic      8 bytes  "SYMRLNN1"
//! width      1 byte   bytes per scalar (4 or 8)
//! n_sizes    u32      number of layer sizes
//! sizes      u32 × n_sizes
//! per layer  weights (fan_in rows × fan_out columns, row-major), then bias
//! ```

use std::io::{Read, Write};

use ndarray::{Array1, Array2};

use super::{Layer, Mlp, NetError};
use crate::scalar::Scalar;

const MAGIC: &[u8; 8] = b"SYMRLNN1";

pub fn save<T: Scalar, W: Write>(mlp: &Mlp<T>, mut out: W) -> Result<(), NetError> {
    let width = std::mem::size_of::<T>() as u8;
    out.write_all(MAGIC)?;
    out.write_all(&[width])?;
    let sizes = mlp.layer_sizes();
    out.write_all(&(sizes.len() as u32).to_le_bytes())?;
    for s in sizes {
        out.write_all(&(s as u32).to_le_bytes())?;
    }
    for layer in mlp.layers() {
        for &v in layer.weights.iter().chain(layer.bias.iter()) {
            match width {
                4 => out.write_all(&(v.as_f64() as f32).to_le_bytes())?,
                _ => out.write_all(&v.as_f64().to_le_bytes())?,
            }
        }
    }
    Ok(())
}

pub fn load<T: Scalar, R: Read>(mut input: R) -> Result<Mlp<T>, NetError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NetError::Format("bad magic bytes".into()));
    }
    let mut width = [0u8; 1];
    input.read_exact(&mut width)?;
    let width = width[0] as usize;
    if width != 4 && width != 8 {
        return Err(NetError::Format(format!("unsupported scalar width {width}")));
    }
    let read_u32 = |input: &mut R| -> Result<u32, NetError> {
        let mut b = [0u8; 4];
        input.read_exact(&mut b)?;
        Ok(u32::from_le_bytes(b))
    };
    let n = read_u32(&mut input)? as usize;
    if !(2..=64).contains(&n) {
        return Err(NetError::Format(format!("implausible layer count {n}")));
    }
    let sizes = (0..n).map(|_| read_u32(&mut input).map(|s| s as usize)).collect::<Result<Vec<_>, _>>()?;
    let read_scalar = |input: &mut R| -> Result<T, NetError> {
        let mut b = [0u8; 8];
        input.read_exact(&mut b[..width])?;
        let v = if width == 4 { f32::from_le_bytes(b[..4].try_into().unwrap()) as f64 } else { f64::from_le_bytes(b) };
        Ok(T::lit(v))
    };
    let mut layers = Vec::with_capacity(n - 1);
    for w in sizes.windows(2) {
        let weights = (0..w[0] * w[1]).map(|_| read_scalar(&mut input)).collect::<Result<Vec<_>, _>>()?;
        let bias = (0..w[1]).map(|_| read_scalar(&mut input)).collect::<Result<Vec<_>, _>>()?;
        layers.push(Layer {
            weights: Array2::from_shape_vec((w[0], w[1]), weights).map_err(|e| NetError::Format(e.to_string()))?,
            bias: Array1::from(bias),
        });
    }
    Mlp::from_layers(layers)
}
