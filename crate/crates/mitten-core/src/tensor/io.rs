//! Binary dump of tensor trains, used for middle-out checkpoints.
//!
//! Layout (little-endian): magic `MPTT`, version u32, qubit count u32, kind
//! u32 (0 = MPS, 1 = MPO), then `n + 1` bond dimensions as u32, then the core
//! tensors as f64 in row-major `(left, phys, right)` order, site by site.

use super::{Mpo, Mps, TensorTrain};
use crate::scalar::Scalar;
use ndarray::Array3;
use std::io::{Read, Write};

const MAGIC: [u8; 4] = *b"MPTT";
const VERSION: u32 = 1;

const KIND_MPS: u32 = 0;
const KIND_MPO: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DumpError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes (not a tensor dump)")]
    BadMagic,
    #[error("unsupported dump version {0}")]
    BadVersion(u32),
    #[error("unexpected kind tag {got} (wanted {want})")]
    BadKind { got: u32, want: u32 },
    #[error("corrupt dump: {0}")]
    Corrupt(String),
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<(), DumpError> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DumpError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn write_tt<T: Scalar, W: Write>(tt: &TensorTrain<T>, kind: u32, w: &mut W) -> Result<(), DumpError> {
    w.write_all(&MAGIC)?;
    write_u32(w, VERSION)?;
    write_u32(w, tt.n() as u32)?;
    write_u32(w, kind)?;
    for d in tt.bond_dims() {
        write_u32(w, d as u32)?;
    }
    for core in tt.cores() {
        for &x in core.iter() {
            w.write_all(&x.as_f64().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_tt<T: Scalar, R: Read>(r: &mut R, kind: u32, phys: usize) -> Result<TensorTrain<T>, DumpError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(DumpError::BadMagic);
    }
    let version = read_u32(r)?;
    if version != VERSION {
        return Err(DumpError::BadVersion(version));
    }
    let n = read_u32(r)? as usize;
    if n == 0 || n > 64 {
        return Err(DumpError::Corrupt(format!("site count {n}")));
    }
    let got_kind = read_u32(r)?;
    if got_kind != kind {
        return Err(DumpError::BadKind { got: got_kind, want: kind });
    }
    let mut bonds = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        bonds.push(read_u32(r)? as usize);
    }
    if bonds[0] != 1 || bonds[n] != 1 {
        return Err(DumpError::Corrupt("boundary bonds must be 1".into()));
    }
    let mut cores = Vec::with_capacity(n);
    for k in 0..n {
        let (l, rr) = (bonds[k], bonds[k + 1]);
        let len = l
            .checked_mul(phys)
            .and_then(|x| x.checked_mul(rr))
            .ok_or_else(|| DumpError::Corrupt("core size overflow".into()))?;
        let mut data = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            r.read_exact(&mut buf)?;
            data.push(T::of_f64(f64::from_le_bytes(buf)));
        }
        let core = Array3::from_shape_vec((l, phys, rr), data)
            .map_err(|e| DumpError::Corrupt(e.to_string()))?;
        cores.push(core);
    }
    TensorTrain::new(phys, cores).map_err(|e| DumpError::Corrupt(e.to_string()))
}

impl<T: Scalar> Mps<T> {
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<(), DumpError> {
        write_tt(&self.tt, KIND_MPS, w)
    }

    pub fn read_dump<R: Read>(r: &mut R) -> Result<Self, DumpError> {
        Ok(Self { tt: read_tt(r, KIND_MPS, 4)? })
    }
}

impl<T: Scalar> Mpo<T> {
    pub fn write_dump<W: Write>(&self, w: &mut W) -> Result<(), DumpError> {
        write_tt(&self.tt, KIND_MPO, w)
    }

    pub fn read_dump<R: Read>(r: &mut R) -> Result<Self, DumpError> {
        Ok(Self { tt: read_tt(r, KIND_MPO, 16)? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_mps_and_mpo() {
        let v = Mps::<f64>::pauli(&"XZY".parse().unwrap());
        let mut buf = Vec::new();
        v.write_dump(&mut buf).unwrap();
        let back = Mps::<f64>::read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(v, back);

        let m = Mpo::<f64>::identity(3);
        let mut buf = Vec::new();
        m.write_dump(&mut buf).unwrap();
        let back = Mpo::<f64>::read_dump(&mut buf.as_slice()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn kind_mismatch_rejected() {
        let v = Mps::<f64>::pauli(&"XZ".parse().unwrap());
        let mut buf = Vec::new();
        v.write_dump(&mut buf).unwrap();
        let err = Mpo::<f64>::read_dump(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DumpError::BadKind { .. }));
    }

    #[test]
    fn bad_magic_rejected() {
        let buf = b"NOPE00000000".to_vec();
        let err = Mps::<f64>::read_dump(&mut buf.as_slice()).unwrap_err();
        assert!(matches!(err, DumpError::BadMagic));
    }
}
