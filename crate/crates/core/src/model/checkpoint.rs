//! Binary checkpoint format.
//!
//! ```text
//! "MMCK"            4 bytes magic
//! version           u32
//! config length     u64, then that many bytes of canonical JSON
//! training step     u64
//! rng seed          32 bytes, stream u64, word position u128
//! blob count        u32
//! per blob:         u64 name length, name bytes, u64 element count, f32 values
//! ```
//! Every integer and float is little-endian.

use std::io::{Read, Write};
use std::path::Path;

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{InteractionModel, ModelConfig};
use crate::nn::{NdArray, Scalar};

pub const MAGIC: &[u8; 4] = b"MMCK";
pub const VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    pub word_pos: u128,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos(),
        }
    }

    pub fn restore(&self) -> ChaCha8Rng {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(self.word_pos);
        rng
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub blobs: Vec<(String, Vec<f32>)>,
    pub step: u64,
    pub rng: RngState,
}

impl Checkpoint {
    pub fn from_model<T: Scalar>(model: &InteractionModel<T>, step: u64, rng: RngState) -> Self {
        let blobs = model
            .params
            .params()
            .iter()
            .map(|p| (p.name.clone(), p.value.data().iter().map(|v| v.as_f64() as f32).collect()))
            .collect();
        Checkpoint {
            config: model.config().clone(),
            blobs,
            step,
            rng,
        }
    }

    pub fn to_model<T: Scalar>(&self) -> Result<InteractionModel<T>> {
        let mut model = InteractionModel::<T>::new(&self.config)?;
        if model.params.len() != self.blobs.len() {
            return Err(Error::Checkpoint(format!(
                "{} blobs for an architecture with {} parameters",
                self.blobs.len(),
                model.params.len()
            )));
        }
        for (p, (name, data)) in model.params.params_mut().iter_mut().zip(&self.blobs) {
            if &p.name != name || p.value.len() != data.len() {
                return Err(Error::Checkpoint(format!(
                    "blob `{name}` ({} values) does not match parameter `{}` ({} values)",
                    data.len(),
                    p.name,
                    p.value.len()
                )));
            }
            p.value = NdArray::from_vec(p.value.shape(), data.iter().map(|&v| T::of(f64::from(v))).collect())?;
        }
        Ok(model)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        let cfg = self.config.to_canonical();
        out.extend_from_slice(&(cfg.len() as u64).to_le_bytes());
        out.extend_from_slice(cfg.as_bytes());
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.rng.seed);
        out.extend_from_slice(&self.rng.stream.to_le_bytes());
        out.extend_from_slice(&self.rng.word_pos.to_le_bytes());
        out.extend_from_slice(&(self.blobs.len() as u32).to_le_bytes());
        for (name, data) in &self.blobs {
            out.extend_from_slice(&(name.len() as u64).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(data.len() as u64).to_le_bytes());
            for v in data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(mut bytes: &[u8]) -> Result<Self> {
        let r = &mut bytes;
        let mut magic = [0u8; 4];
        read_exact(r, &mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic, not a checkpoint".into()));
        }
        let version = u32::from_le_bytes(read_array(r)?);
        if version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {version}")));
        }
        let cfg_len = read_len(r)?;
        let cfg_text = read_string(r, cfg_len)?;
        let config: ModelConfig = serde_json::from_str(&cfg_text)?;
        let step = u64::from_le_bytes(read_array(r)?);
        let seed = read_array::<32>(r)?;
        let stream = u64::from_le_bytes(read_array(r)?);
        let word_pos = u128::from_le_bytes(read_array(r)?);
        let count = u32::from_le_bytes(read_array(r)?) as usize;
        let mut blobs = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = read_len(r)?;
            let name = read_string(r, name_len)?;
            let n = read_len(r)?;
            if n.checked_mul(4).is_none_or(|b| b > r.len()) {
                return Err(Error::Checkpoint(format!("blob `{name}` truncated")));
            }
            let data = (0..n).map(|_| read_array::<4>(r).map(f32::from_le_bytes)).collect::<Result<Vec<_>>>()?;
            blobs.push((name, data));
        }
        if !r.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", r.len())));
        }
        Ok(Checkpoint {
            config,
            blobs,
            step,
            rng: RngState { seed, stream, word_pos },
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(&self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Checkpoint::from_bytes(&bytes)
    }
}

fn read_exact(r: &mut &[u8], buf: &mut [u8]) -> Result<()> {
    if r.len() < buf.len() {
        return Err(Error::Checkpoint("unexpected end of data".into()));
    }
    let (head, tail) = r.split_at(buf.len());
    buf.copy_from_slice(head);
    *r = tail;
    Ok(())
}

fn read_array<const N: usize>(r: &mut &[u8]) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    read_exact(r, &mut buf)?;
    Ok(buf)
}

fn read_len(r: &mut &[u8]) -> Result<usize> {
    let n = u64::from_le_bytes(read_array(r)?);
    usize::try_from(n).map_err(|_| Error::Checkpoint(format!("length {n} too large")))
}

fn read_string(r: &mut &[u8], n: usize) -> Result<String> {
    if n > r.len() {
        return Err(Error::Checkpoint("string truncated".into()));
    }
    let mut buf = vec![0u8; n];
    read_exact(r, &mut buf)?;
    String::from_utf8(buf).map_err(|_| Error::Checkpoint("invalid utf-8".into()))
}
