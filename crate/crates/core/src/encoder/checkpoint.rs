//! Checkpoints are JSON documents:
//! `{"version": 1, "config": {...}, "tensors": [{"name", "shape", "data"}],
//! "running_stats": [{"mean", "var"}]}`. Floats round-trip exactly through
//! serde_json's shortest representation.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::seed::SeedStream;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDump {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: EncoderConfig,
    pub tensors: Vec<NamedTensor>,
    pub running_stats: Vec<StatsDump>,
}

impl Checkpoint {
    pub fn from_encoder(enc: &Encoder) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: enc.config().clone(),
            tensors: enc
                .params()
                .named_tensors()
                .map(|(name, t)| NamedTensor {
                    name: name.to_string(),
                    shape: t.shape().to_vec(),
                    data: t.data().to_vec(),
                })
                .collect(),
            running_stats: enc
                .running_stats()
                .iter()
                .map(|s| StatsDump {
                    mean: s.mean.clone(),
                    var: s.var.clone(),
                })
                .collect(),
        }
    }

    pub fn into_encoder(self) -> Result<Encoder> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::InvalidArgument(format!(
                "unsupported checkpoint version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut enc = Encoder::new(self.config, SeedStream::new(0))?;
        if self.tensors.len() != enc.params().len() {
            return Err(Error::InvalidArgument(format!(
                "checkpoint has {} tensors, encoder has {}",
                self.tensors.len(),
                enc.params().len()
            )));
        }
        for nt in self.tensors {
            let id = enc
                .params()
                .find(&nt.name)
                .ok_or_else(|| Error::InvalidArgument(format!("unknown tensor {}", nt.name)))?;
            let t = Tensor::new(nt.shape, nt.data)?;
            if t.shape() != enc.params().get(id).shape() {
                return Err(Error::shape(
                    "checkpoint",
                    format!("tensor {} has the wrong shape", nt.name),
                ));
            }
            *enc.params_mut().get_mut(id) = t;
        }
        let stats = enc.running_stats_mut();
        if self.running_stats.len() != stats.len() {
            return Err(Error::InvalidArgument(
                "running statistics do not match the encoder".into(),
            ));
        }
        for (dst, src) in stats.iter_mut().zip(self.running_stats) {
            if src.mean.len() != dst.mean.len() || src.var.len() != dst.var.len() {
                return Err(Error::shape("checkpoint", "running statistics have the wrong length"));
            }
            dst.mean = src.mean;
            dst.var = src.var;
        }
        Ok(enc)
    }
}

pub fn save_checkpoint(path: &Path, enc: &Encoder) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(f), &Checkpoint::from_encoder(enc))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Encoder> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let ck: Checkpoint = serde_json::from_reader(BufReader::new(f))?;
    ck.into_encoder()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let enc = Encoder::new(EncoderConfig::new(2), SeedStream::new(9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("enc.json");
        save_checkpoint(&p, &enc).unwrap();
        let back = load_checkpoint(&p).unwrap();
        assert_eq!(
            back.params().named_tensors().count(),
            enc.params().named_tensors().count()
        );
        for ((n1, t1), (n2, t2)) in back.params().named_tensors().zip(enc.params().named_tensors()) {
            assert_eq!(n1, n2);
            assert_eq!(t1, t2);
        }
    }

    #[test]
    fn version_mismatch_rejected() {
        let enc = Encoder::new(EncoderConfig::new(1), SeedStream::new(9)).unwrap();
        let mut ck = Checkpoint::from_encoder(&enc);
        ck.version = 99;
        assert!(ck.into_encoder().is_err());
    }
}
