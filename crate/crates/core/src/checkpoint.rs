//! Versioned binary checkpoints: a header, the model config as TOML, then named
//! little-endian tensors.

use std::path::Path;

use fgt_tensor::{DType, ParamStore, Scalar, Tensor};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"FGTCKPT\0";
pub const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub kind: String,
    pub dtype: DType,
    pub config_toml: String,
    pub tensors: Vec<(String, Vec<usize>, Vec<f64>)>,
}

impl Checkpoint {
    pub fn from_store<T: Scalar>(kind: &str, config_toml: String, stores: &[(&str, &ParamStore<T>)]) -> Self {
        let mut tensors = Vec::new();
        for (prefix, store) in stores {
            for p in store.params() {
                tensors.push((
                    format!("{prefix}/{}", p.name),
                    p.value.shape().to_vec(),
                    p.value.data().iter().map(|v| v.as_f64()).collect(),
                ));
            }
        }
        Self {
            kind: kind.to_string(),
            dtype: T::DTYPE,
            config_toml,
            tensors,
        }
    }

    /// Overwrite every parameter of `store` from the tensors under `prefix`.
    pub fn load_into<T: Scalar>(&self, prefix: &str, store: &mut ParamStore<T>) -> Result<()> {
        let names: Vec<String> = store.params().iter().map(|p| p.name.clone()).collect();
        for name in names {
            let key = format!("{prefix}/{name}");
            let (_, shape, data) = self
                .tensors
                .iter()
                .find(|(k, _, _)| *k == key)
                .ok_or_else(|| Error::Format(format!("checkpoint has no tensor {key}")))?;
            let id = store.id(&name).expect("name from store");
            if store.get(id).shape() != shape.as_slice() {
                return Err(Error::Format(format!(
                    "tensor {key}: checkpoint shape {shape:?}, model {:?}",
                    store.get(id).shape()
                )));
            }
            store.set(id, Tensor::from_f64(shape, data));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.kind);
        out.push(match self.dtype {
            DType::F32 => 4,
            DType::F64 => 8,
        });
        put_str(&mut out, &self.config_toml);
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, shape, data) in &self.tensors {
            put_str(&mut out, name);
            out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
            for &d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for &v in data {
                match self.dtype {
                    DType::F32 => out.extend_from_slice(&(v as f32).to_le_bytes()),
                    DType::F64 => out.extend_from_slice(&v.to_le_bytes()),
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let kind = r.string()?;
        let dtype = match r.take(1)?[0] {
            4 => DType::F32,
            8 => DType::F64,
            b => return Err(Error::Format(format!("unknown dtype tag {b}"))),
        };
        let config_toml = r.string()?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n: usize = shape.iter().product();
            let data = match dtype {
                DType::F32 => (0..n).map(|_| r.f32().map(|v| v as f64)).collect::<Result<Vec<_>>>()?,
                DType::F64 => (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?,
            };
            tensors.push((name, shape, data));
        }
        Ok(Self {
            kind,
            dtype,
            config_toml,
            tensors,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }

    pub fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::Format(format!("expected a {kind} checkpoint, found {}", self.kind)));
        }
        Ok(())
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Format("checkpoint string is not UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use fgt_tensor::Init;

    #[test]
    fn round_trip_restores_parameters() {
        let mut a = ParamStore::<f32>::new(3);
        a.add("w", &[2, 3], Init::Uniform(1.0));
        a.add_buffer("u", Tensor::ones(&[3]));
        let ck = Checkpoint::from_store("lafc", "n = 1\n".into(), &[("net", &a)]);
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        let mut b = ParamStore::<f32>::new(99);
        b.add("w", &[2, 3], Init::Const(0.0));
        b.add_buffer("u", Tensor::zeros(&[3]));
        back.load_into("net", &mut b).unwrap();
        assert_eq!(b.params()[0].value, a.params()[0].value);
        assert!(Checkpoint::from_bytes(&ck.to_bytes()[..20]).is_err());
    }
}
