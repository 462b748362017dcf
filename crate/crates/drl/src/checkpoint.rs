//! `VQN1` network checkpoints.
//!
//! Layout, all little-endian: magic `VQN1`, u32 layer count, then per layer
//! u32 in and u32 out; then per layer the weights (row-major, out x in) and
//! biases as f64; then a u8 flag and, if set, the Adam step count (u64)
//! followed by the first and second moments in parameter order.

use std::io::{Read, Write};

use crate::net::{AdamState, Mlp};
use crate::DrlError;

pub const MAGIC: &[u8; 4] = b"VQN1";

pub fn write_checkpoint<W: Write>(net: &Mlp, with_adam: bool, mut w: W) -> Result<(), DrlError> {
    w.write_all(MAGIC)?;
    w.write_all(&(net.num_layers() as u32).to_le_bytes())?;
    for d in net.dims.windows(2) {
        w.write_all(&(d[0] as u32).to_le_bytes())?;
        w.write_all(&(d[1] as u32).to_le_bytes())?;
    }
    let put = |w: &mut W, xs: &[f64]| -> std::io::Result<()> {
        for x in xs {
            w.write_all(&x.to_le_bytes())?;
        }
        Ok(())
    };
    put(&mut w, &net.params)?;
    w.write_all(&[with_adam as u8])?;
    if with_adam {
        w.write_all(&net.adam.step_count.to_le_bytes())?;
        put(&mut w, &net.adam.m)?;
        put(&mut w, &net.adam.v)?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DrlError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, DrlError> {
    let mut out = Vec::with_capacity(n);
    let mut b = [0u8; 8];
    for _ in 0..n {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

/// Without stored Adam state the moments start at zero.
pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Mlp, DrlError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(DrlError::Checkpoint(format!("bad magic {magic:?}")));
    }
    let layers = read_u32(&mut r)? as usize;
    if layers == 0 || layers > 64 {
        return Err(DrlError::Checkpoint(format!("implausible layer count {layers}")));
    }
    let mut dims = Vec::with_capacity(layers + 1);
    for k in 0..layers {
        let (i, o) = (read_u32(&mut r)? as usize, read_u32(&mut r)? as usize);
        if k == 0 {
            dims.push(i);
        } else if dims[k] != i {
            return Err(DrlError::Checkpoint(format!("layer {k} input {i} does not match previous output {}", dims[k])));
        }
        dims.push(o);
    }
    let mut net = Mlp::zeros(&dims).map_err(|e| DrlError::Checkpoint(e.to_string()))?;
    let n = net.params.len();
    net.params = read_f64s(&mut r, n)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    match flag[0] {
        0 => {}
        1 => {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            net.adam = AdamState { step_count: u64::from_le_bytes(b), m: read_f64s(&mut r, n)?, v: read_f64s(&mut r, n)? };
        }
        f => return Err(DrlError::Checkpoint(format!("bad optimizer flag {f}"))),
    }
    if net.params.iter().any(|p| !p.is_finite()) {
        return Err(DrlError::Checkpoint("non-finite weight".into()));
    }
    Ok(net)
}
