//! Middlebury `.flo` files.

use std::io::{Read, Write};
use std::path::Path;

use fgt_tensor::Scalar;

use super::field::FlowField;
use crate::error::{Error, Result};

/// `"PIEH"` read as a little-endian float.
pub const FLO_MAGIC: f32 = 202021.25;

pub fn encode_flo<T: Scalar>(flow: &FlowField<T>) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + flow.data().len() * 4);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(flow.width() as i32).to_le_bytes());
    out.extend_from_slice(&(flow.height() as i32).to_le_bytes());
    for v in flow.data() {
        out.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo<T: Scalar>(bytes: &[u8]) -> Result<FlowField<T>> {
    if bytes.len() < 12 {
        return Err(Error::Format(format!("flo header truncated ({} bytes)", bytes.len())));
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    if f32::from_le_bytes(word(0)) != FLO_MAGIC {
        return Err(Error::Format("bad flo magic, expected PIEH".into()));
    }
    let w = i32::from_le_bytes(word(4));
    let h = i32::from_le_bytes(word(8));
    if w < 2 || h < 2 || w > (1 << 15) || h > (1 << 15) {
        return Err(Error::Format(format!("implausible flo size {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let need = 12 + w * h * 8;
    if bytes.len() < need {
        return Err(Error::Format(format!("flo payload truncated: {} of {need} bytes", bytes.len())));
    }
    let data = (0..w * h * 2)
        .map(|k| T::of(f32::from_le_bytes(word(12 + 4 * k)) as f64))
        .collect();
    FlowField::new(w, h, data).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_flo<T: Scalar>(flow: &FlowField<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&encode_flo(flow)).map_err(|e| Error::io(path, e))
}

pub fn read_flo<T: Scalar>(path: impl AsRef<Path>) -> Result<FlowField<T>> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_encoded_2x2() {
        let f = FlowField::<f32>::new(2, 2, vec![1.0, -1.0, 0.5, 0.0, 2.0, 0.25, -3.0, 8.0]).unwrap();
        let bytes = encode_flo(&f);
        let mut expect = vec![0x50, 0x49, 0x45, 0x48, 2, 0, 0, 0, 2, 0, 0, 0];
        for v in [1.0f32, -1.0, 0.5, 0.0, 2.0, 0.25, -3.0, 8.0] {
            expect.extend_from_slice(&v.to_bits().to_le_bytes());
        }
        assert_eq!(bytes.len(), 44);
        assert_eq!(&bytes[..4], b"PIEH");
        assert_eq!(bytes, expect);
        assert_eq!(decode_flo::<f32>(&bytes).unwrap(), f);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let f = FlowField::<f32>::zeros(3, 2);
        let mut bytes = encode_flo(&f);
        assert!(decode_flo::<f32>(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] ^= 1;
        assert!(matches!(decode_flo::<f32>(&bytes), Err(Error::Format(_))));
    }
}
