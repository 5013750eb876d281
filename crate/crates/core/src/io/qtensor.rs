//! QTEN binary tensors.
//!
//! Layout (all integers little-endian):
//!
//! | bytes          | content                                  |
//! |----------------|------------------------------------------|
//! | 0..4           | magic `QTEN`                             |
//! | 4              | version, currently 1                     |
//! | 5              | dtype: 1 = f32, 2 = f64, 3 = u32         |
//! | 6              | rank (>= 1)                              |
//! | 7..7+8*rank    | dims as u64                              |
//! | rest           | row-major payload                        |

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const QTEN_MAGIC: [u8; 4] = *b"QTEN";
const VERSION: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DType {
    F32,
    F64,
    U32,
}

impl DType {
    fn code(self) -> u8 {
        match self {
            DType::F32 => 1,
            DType::F64 => 2,
            DType::U32 => 3,
        }
    }

    fn from_code(code: u8) -> Option<Self> {
        match code {
            1 => Some(DType::F32),
            2 => Some(DType::F64),
            3 => Some(DType::U32),
            _ => None,
        }
    }

    fn size(self) -> usize {
        match self {
            DType::F64 => 8,
            DType::F32 | DType::U32 => 4,
        }
    }
}

pub fn encode_qtensor(tensor: &Tensor, dtype: DType) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(7 + 8 * tensor.shape().len() + dtype.size() * tensor.len());
    out.extend_from_slice(&QTEN_MAGIC);
    out.push(VERSION);
    out.push(dtype.code());
    let rank = u8::try_from(tensor.shape().len())
        .map_err(|_| Error::BadHeader("rank exceeds 255".into()))?;
    out.push(rank);
    for &d in tensor.shape() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    for &v in tensor.data() {
        match dtype {
            DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
            DType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
            DType::U32 => {
                if !(v >= 0.0 && v <= u32::MAX as f64 && v.fract() == 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "value {v} cannot be stored as u32"
                    )));
                }
                out.extend_from_slice(&(v as u32).to_le_bytes());
            }
        }
    }
    Ok(out)
}

pub fn decode_qtensor(bytes: &[u8]) -> Result<(Tensor, DType)> {
    if bytes.len() < 7 {
        return Err(Error::BadHeader(format!(
            "header needs at least 7 bytes, file has {}",
            bytes.len()
        )));
    }
    let magic: [u8; 4] = bytes[..4].try_into().unwrap();
    if magic != QTEN_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    if bytes[4] != VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let dtype = DType::from_code(bytes[5])
        .ok_or_else(|| Error::BadHeader(format!("unknown dtype code {}", bytes[5])))?;
    let rank = bytes[6] as usize;
    if rank == 0 {
        return Err(Error::BadHeader(
            "rank 0 is not allowed; store scalars as rank 1 with dim 1".into(),
        ));
    }
    let header_len = 7 + 8 * rank;
    if bytes.len() < header_len {
        return Err(Error::BadHeader(format!(
            "header declares rank {rank} but file ends after {} bytes",
            bytes.len()
        )));
    }
    let dims: Vec<usize> = bytes[7..header_len]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as usize)
        .collect();
    if dims.contains(&0) {
        return Err(Error::BadHeader(format!("zero-sized dimension in {dims:?}")));
    }
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::BadHeader(format!("dimensions {dims:?} overflow")))?;
    let expected = (count as u64) * dtype.size() as u64;
    let payload = &bytes[header_len..];
    if (payload.len() as u64) < expected {
        return Err(Error::TruncatedPayload {
            expected,
            actual: payload.len() as u64,
        });
    }
    if payload.len() as u64 > expected {
        return Err(Error::BadHeader(format!(
            "{} trailing bytes after payload",
            payload.len() as u64 - expected
        )));
    }
    let data: Vec<f64> = match dtype {
        DType::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect(),
        DType::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
        DType::U32 => payload
            .chunks_exact(4)
            .map(|c| u32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect(),
    };
    Ok((Tensor::new(dims, data)?, dtype))
}

pub fn read_qtensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_qtensor(&bytes).map(|(t, _)| t)
}

pub fn write_qtensor(tensor: &Tensor, dtype: DType, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_qtensor(tensor, dtype)?;
    super::write_atomic(path.as_ref(), &bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    fn random(shape: Vec<usize>) -> Tensor {
        let mut rng = Rng::from_seed(8);
        let n = shape.iter().product();
        Tensor::new(shape, (0..n).map(|_| rng.normal()).collect()).unwrap()
    }

    #[test]
    fn f64_round_trip_is_bitwise() {
        let t = random(vec![3, 2, 5]);
        let (back, dtype) = decode_qtensor(&encode_qtensor(&t, DType::F64).unwrap()).unwrap();
        assert_eq!(dtype, DType::F64);
        assert_eq!(back.shape(), t.shape());
        assert!(back.data().iter().zip(t.data()).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn f32_round_trip_is_a_cast() {
        let t = random(vec![7]);
        let (back, _) = decode_qtensor(&encode_qtensor(&t, DType::F32).unwrap()).unwrap();
        for (a, b) in back.data().iter().zip(t.data()) {
            assert_eq!(*a, *b as f32 as f64);
        }
    }

    #[test]
    fn header_layout_is_exact() {
        let t = Tensor::new(vec![2], vec![1.0, 0.0]).unwrap();
        let bytes = encode_qtensor(&t, DType::U32).unwrap();
        assert_eq!(
            bytes,
            vec![
                0x51, 0x54, 0x45, 0x4E, 1, 3, 1, 2, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0, 0
            ]
        );
    }

    #[test]
    fn truncated_payload_names_counts() {
        let t = random(vec![4]);
        let bytes = encode_qtensor(&t, DType::F64).unwrap();
        let err = decode_qtensor(&bytes[..bytes.len() - 3]).unwrap_err();
        assert!(matches!(err, Error::TruncatedPayload { expected: 32, actual: 29 }));
    }

    #[test]
    fn header_errors() {
        let mut bytes = encode_qtensor(&random(vec![1]), DType::F64).unwrap();
        bytes[0] = b'X';
        assert!(matches!(decode_qtensor(&bytes), Err(Error::BadMagic(_))));
        bytes[0] = b'Q';
        bytes[4] = 2;
        assert!(matches!(decode_qtensor(&bytes), Err(Error::UnsupportedVersion(2))));
        let rank0 = [b'Q', b'T', b'E', b'N', 1, 2, 0];
        assert!(matches!(decode_qtensor(&rank0), Err(Error::BadHeader(_))));
    }

    #[test]
    fn u32_rejects_fractions() {
        let t = Tensor::from_vec(vec![0.5]).unwrap();
        assert!(encode_qtensor(&t, DType::U32).is_err());
    }
}
