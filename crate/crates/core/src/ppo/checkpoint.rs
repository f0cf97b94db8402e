//! Policy checkpoint container.
//!
//! Layout (little-endian):
//! `b"VSTK"` · `u32` version · `u32` header length · UTF-8 JSON header ·
//! `f32` tensor data. The header names every tensor with its shape, in data
//! order; matrices are row-major `[rows, cols]` = `[out, in]`. It also carries
//! the grouping tag, the iteration, normalizer counts and the training and
//! environment configs.

use std::io::Write;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::TrainConfig;
use super::mlp::{Dense, Mlp};
use super::normalizer::RunningNormalizer;
use super::policy::PolicyParameters;
use crate::actuation::StiffnessGrouping;
use crate::env::EnvConfig;
use crate::error::CheckpointError;

pub const MAGIC: &[u8; 4] = b"VSTK";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub grouping: StiffnessGrouping,
    pub iteration: usize,
    pub params: PolicyParameters,
    pub train_config: TrainConfig,
    pub env_config: EnvConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TensorInfo {
    name: String,
    shape: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    grouping: StiffnessGrouping,
    iteration: usize,
    actor_layers: usize,
    critic_layers: usize,
    obs_count: f64,
    obs_clip: f64,
    privileged_count: f64,
    privileged_clip: f64,
    tensors: Vec<TensorInfo>,
    train_config: TrainConfig,
    env_config: EnvConfig,
}

fn mlp_tensors<'a>(prefix: &str, mlp: &'a Mlp, out: &mut Vec<(TensorInfo, Vec<f64>)>) {
    for (l, layer) in mlp.layers.iter().enumerate() {
        let (rows, cols) = layer.weight.shape();
        let row_major: Vec<f64> = (0..rows).flat_map(|r| (0..cols).map(move |c| (r, c))).map(|(r, c)| layer.weight[(r, c)]).collect();
        out.push((TensorInfo { name: format!("{prefix}.{l}.weight"), shape: vec![rows, cols] }, row_major));
        out.push((TensorInfo { name: format!("{prefix}.{l}.bias"), shape: vec![rows] }, layer.bias.as_slice().to_vec()));
    }
}

impl Checkpoint {
    fn tensors(&self) -> Vec<(TensorInfo, Vec<f64>)> {
        let p = &self.params;
        let mut out = Vec::new();
        mlp_tensors("actor", &p.actor, &mut out);
        out.push((TensorInfo { name: "log_std".into(), shape: vec![p.log_std.len()] }, p.log_std.clone()));
        mlp_tensors("critic", &p.critic, &mut out);
        for (name, n) in [("obs_normalizer", &p.obs_normalizer), ("privileged_normalizer", &p.privileged_normalizer)] {
            out.push((TensorInfo { name: format!("{name}.mean"), shape: vec![n.dim()] }, n.mean.clone()));
            out.push((TensorInfo { name: format!("{name}.var"), shape: vec![n.dim()] }, n.var.clone()));
        }
        out
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let tensors = self.tensors();
        let p = &self.params;
        let header = Header {
            grouping: self.grouping,
            iteration: self.iteration,
            actor_layers: p.actor.layers.len(),
            critic_layers: p.critic.layers.len(),
            obs_count: p.obs_normalizer.count,
            obs_clip: p.obs_normalizer.clip,
            privileged_count: p.privileged_normalizer.count,
            privileged_clip: p.privileged_normalizer.clip,
            tensors: tensors.iter().map(|(info, _)| info.clone()).collect(),
            train_config: self.train_config.clone(),
            env_config: self.env_config.clone(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut bytes = Vec::with_capacity(12 + json.len() + 4 * tensors.iter().map(|(_, d)| d.len()).sum::<usize>());
        bytes.extend_from_slice(MAGIC);
        bytes.extend_from_slice(&VERSION.to_le_bytes());
        bytes.extend_from_slice(&(json.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&json);
        for (_, data) in &tensors {
            for v in data {
                bytes.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        bytes
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self, CheckpointError> {
        let bad = |reason: String| CheckpointError::Format { path: path.to_path_buf(), reason };
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(bad("missing VSTK magic".into()));
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
        if version != VERSION {
            return Err(bad(format!("unsupported version {version}")));
        }
        let header_len = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
        let json = bytes.get(12..12 + header_len).ok_or_else(|| bad("truncated header".into()))?;
        let header: Header = serde_json::from_slice(json).map_err(|e| bad(format!("header: {e}")))?;

        let mut data = &bytes[12 + header_len..];
        let mut tensors = std::collections::HashMap::new();
        for info in &header.tensors {
            let n: usize = info.shape.iter().product();
            if data.len() < 4 * n {
                return Err(bad(format!("tensor {} truncated", info.name)));
            }
            let values: Vec<f64> = data[..4 * n]
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
                .collect();
            data = &data[4 * n..];
            tensors.insert(info.name.clone(), (info.shape.clone(), values));
        }
        if !data.is_empty() {
            return Err(bad(format!("{} trailing bytes", data.len())));
        }
        let mut take = |name: String| tensors.remove(&name).ok_or_else(|| bad(format!("missing tensor {name}")));
        let mut mlp = |prefix: &str, layers: usize| -> Result<Mlp, CheckpointError> {
            let mut out = Vec::with_capacity(layers);
            for l in 0..layers {
                let (shape, w) = take(format!("{prefix}.{l}.weight"))?;
                let (bshape, b) = take(format!("{prefix}.{l}.bias"))?;
                if shape.len() != 2 || bshape != [shape[0]] {
                    return Err(bad(format!("{prefix}.{l} has inconsistent shapes")));
                }
                out.push(Dense {
                    weight: DMatrix::from_row_slice(shape[0], shape[1], &w),
                    bias: DVector::from_vec(b),
                });
            }
            if out.windows(2).any(|w| w[0].weight.nrows() != w[1].weight.ncols()) {
                return Err(bad(format!("{prefix} layers do not chain")));
            }
            Ok(Mlp { layers: out })
        };
        let actor = mlp("actor", header.actor_layers)?;
        let critic = mlp("critic", header.critic_layers)?;
        let mut take = |name: &str| tensors.remove(name).map(|(_, v)| v).ok_or_else(|| bad(format!("missing tensor {name}")));
        let log_std = take("log_std")?;
        let obs_normalizer = RunningNormalizer {
            mean: take("obs_normalizer.mean")?,
            var: take("obs_normalizer.var")?,
            count: header.obs_count,
            clip: header.obs_clip,
        };
        let privileged_normalizer = RunningNormalizer {
            mean: take("privileged_normalizer.mean")?,
            var: take("privileged_normalizer.var")?,
            count: header.privileged_count,
            clip: header.privileged_clip,
        };
        if actor.output_dim() != log_std.len() || critic.output_dim() != 1 {
            return Err(bad("output dimensions do not match".into()));
        }
        if obs_normalizer.dim() != actor.input_dim() || privileged_normalizer.dim() != critic.input_dim() {
            return Err(bad("normalizer dimensions do not match".into()));
        }
        if header.grouping.action_dim() != log_std.len() {
            return Err(bad(format!("{} policy needs {} outputs", header.grouping.name(), header.grouping.action_dim())));
        }
        let params = PolicyParameters { actor, log_std, critic, obs_normalizer, privileged_normalizer };
        if !params.is_finite() {
            return Err(bad("non-finite weights".into()));
        }
        Ok(Self {
            grouping: header.grouping,
            iteration: header.iteration,
            params,
            train_config: header.train_config,
            env_config: header.env_config,
        })
    }

    /// Writes to a sibling temporary file, then renames over `path`.
    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let io = |source| CheckpointError::Io { path: path.to_path_buf(), source };
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        let mut file = std::fs::File::create(&tmp).map_err(io)?;
        file.write_all(&self.to_bytes()).map_err(io)?;
        file.sync_all().map_err(io)?;
        drop(file);
        std::fs::rename(&tmp, path).map_err(io)
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path).map_err(|source| CheckpointError::Io { path: path.to_path_buf(), source })?;
        Self::from_bytes(&bytes, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn checkpoint() -> Checkpoint {
        let g = StiffnessGrouping::Pls;
        let mut params = PolicyParameters::new(52, 97, g.action_dim(), &[16, 8], &[12], 0.5, 5.0, &mut ChaCha8Rng::seed_from_u64(1));
        params.obs_normalizer.update(&[vec![1.0; 52], vec![3.0; 52]]);
        Checkpoint { grouping: g, iteration: 7, params, train_config: TrainConfig::default(), env_config: EnvConfig::default() }
    }

    #[test]
    fn round_trip_preserves_f32_weights() {
        let c = checkpoint();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("policy.vstk");
        c.save(&path).unwrap();
        let back = Checkpoint::load(&path).unwrap();
        assert_eq!((back.grouping, back.iteration), (c.grouping, c.iteration));
        assert_eq!(back.train_config, c.train_config);
        for (a, b) in back.params.tensors().iter().zip(c.params.tensors()) {
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
        assert_eq!(back.params.obs_normalizer.count, 2.0);
        assert!(!dir.path().join("policy.vstk.tmp").exists());
        // Re-encoding the loaded checkpoint is lossless.
        assert_eq!(back.to_bytes(), c.to_bytes());
    }

    #[test]
    fn rejects_corrupt_files() {
        let bytes = checkpoint().to_bytes();
        let p = Path::new("x");
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 4], p).is_err());
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(Checkpoint::from_bytes(&wrong, p).is_err());
        let mut extra = bytes;
        extra.push(0);
        assert!(Checkpoint::from_bytes(&extra, p).is_err());
    }
}
