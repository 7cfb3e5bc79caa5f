//! Binary checkpoint container.
//!
//! Layout (little endian):
//!
//! ```text
//! magic     8 bytes  "PC2DCKPT"
//! version   u32      1
//! cfg_len   u32      byte length of the JSON config block
//! config    cfg_len bytes of UTF-8 JSON (ModelConfig)
//! n_params  u32
//! per parameter:
//!   name_len u32, name bytes (UTF-8)
//!   ndim     u32, dims u64 x ndim
//!   values   f64 x prod(dims)
//! trailer   4 bytes  "END!"
//! ```

use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};
use crate::model::config::ModelConfig;
use crate::model::network::Pc2daeModel;

const MAGIC: &[u8; 8] = b"PC2DCKPT";
const TRAILER: &[u8; 4] = b"END!";
pub const VERSION: u32 = 1;

pub fn encode(model: &Pc2daeModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = serde_json::to_vec(&model.config).expect("config serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    out.extend_from_slice(&(model.params.len() as u32).to_le_bytes());
    for (name, t) in model.params.iter() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(t.rank() as u32).to_le_bytes());
        for &d in t.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in t.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(TRAILER);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Checkpoint(format!("truncated checkpoint at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Decoded container: the embedded config and the parameters in file order.
pub struct Decoded {
    pub config: ModelConfig,
    pub params: Vec<(String, Tensor)>,
}

pub fn decode(buf: &[u8]) -> Result<Decoded> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Checkpoint(format!("unsupported checkpoint version {version}")));
    }
    let cfg_len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(cfg_len)?)
        .map_err(|e| Error::Checkpoint(format!("bad config block: {e}")))?;
    let n = r.u32()? as usize;
    let mut params = Vec::with_capacity(n);
    for _ in 0..n {
        let len = r.u32()? as usize;
        let name = String::from_utf8(r.take(len)?.to_vec())
            .map_err(|_| Error::Checkpoint("parameter name is not UTF-8".into()))?;
        let ndim = r.u32()? as usize;
        let dims = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = dims.iter().product();
        let bytes = r.take(count.checked_mul(8).ok_or_else(|| Error::Checkpoint("absurd tensor size".into()))?)?;
        let data = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        params.push((name, Tensor::new(dims, data)?));
    }
    if r.take(4)? != TRAILER {
        return Err(Error::Checkpoint("missing end marker".into()));
    }
    if r.pos != buf.len() {
        return Err(Error::Checkpoint("trailing bytes after end marker".into()));
    }
    Ok(Decoded { config, params })
}

impl Pc2daeModel {
    /// Replaces every parameter with the decoded values. On any name or
    /// shape disagreement the model is left untouched.
    pub fn load_params(&mut self, params: &[(String, Tensor)]) -> Result<()> {
        let mut problems = Vec::new();
        for (name, t) in params {
            match self.params.get(name) {
                None => problems.push(format!("unexpected parameter {name}")),
                Some(cur) if cur.shape() != t.shape() => {
                    problems.push(format!("{name}: checkpoint shape {:?}, model shape {:?}", t.shape(), cur.shape()))
                }
                Some(_) => {}
            }
        }
        for name in self.params.names() {
            if !params.iter().any(|(n, _)| n == name) {
                problems.push(format!("missing parameter {name}"));
            }
        }
        if !problems.is_empty() {
            return Err(Error::Checkpoint(problems.join("; ")));
        }
        for (name, t) in params {
            *self.params.get_mut(name).unwrap() = t.clone();
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, encode(self))?;
        Ok(())
    }

    /// Rebuilds the model from the config stored in the file.
    pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Self> {
        let d = decode(&std::fs::read(path)?)?;
        let mut m = Pc2daeModel::new(d.config)?;
        m.load_params(&d.params)?;
        Ok(m)
    }

    /// Loads parameters from a file into this model's existing layout.
    pub fn load_into(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let d = decode(&std::fs::read(path)?)?;
        self.load_params(&d.params)
    }
}
