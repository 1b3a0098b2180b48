//! Versioned policy checkpoints: magic, JSON header, little-endian `f32` blocks.

use std::path::Path;

use auv_core::env::{ACT_DIM, OBS_DIM};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::mlp::LayerSpan;
use crate::policy::{Architecture, PolicySnapshot};

pub const MAGIC: &[u8; 8] = b"AUVPOLCY";
pub const FORMAT_VERSION: u32 = 1;
const MAX_HEADER: usize = 1 << 20;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed checkpoint: {0}")]
    Format(String),
    #[error("checkpoint does not match expected architecture: {0}")]
    Mismatch(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub format_version: u32,
    pub obs_dim: usize,
    pub act_dim: usize,
    pub actor_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub activation: String,
    pub actor_output: String,
    pub dtype: String,
    pub config_hash: String,
    pub blocks: Vec<Block>,
}

/// Hex SHA-256 of arbitrary bytes (typically a canonical config dump).
pub fn config_hash(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn blocks(arch: &Architecture) -> Vec<Block> {
    let layout = arch.layout();
    let mut out = Vec::new();
    let mut push = |net: &str, layers: &[LayerSpan]| {
        for (k, l) in layers.iter().enumerate() {
            out.push(Block { name: format!("{net}.{k}.weight"), shape: vec![l.outputs, l.inputs] });
            out.push(Block { name: format!("{net}.{k}.bias"), shape: vec![l.outputs] });
        }
    };
    push("actor", &layout.actor);
    push("critic", &layout.critic);
    out.push(Block { name: "log_std".into(), shape: vec![ACT_DIM] });
    out
}

pub fn header_for(arch: &Architecture, config_hash: &str) -> CheckpointHeader {
    CheckpointHeader {
        format_version: FORMAT_VERSION,
        obs_dim: OBS_DIM,
        act_dim: ACT_DIM,
        actor_hidden: arch.actor_hidden.clone(),
        critic_hidden: arch.critic_hidden.clone(),
        activation: "elu".into(),
        actor_output: "tanh".into(),
        dtype: "f32le".into(),
        config_hash: config_hash.into(),
        blocks: blocks(arch),
    }
}

pub fn to_bytes(policy: &PolicySnapshot, config_hash: &str) -> Vec<u8> {
    let header = serde_json::to_vec(&header_for(policy.arch(), config_hash)).expect("header serializes");
    let mut out = Vec::with_capacity(12 + header.len() + 4 * policy.theta().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in policy.theta() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn from_bytes(bytes: &[u8]) -> Result<(PolicySnapshot, CheckpointHeader), CheckpointError> {
    let fmt = |m: &str| CheckpointError::Format(m.into());
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(fmt("missing magic"));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes")) as usize;
    if hlen > MAX_HEADER || bytes.len() < 12 + hlen {
        return Err(fmt("header length out of range"));
    }
    let header: CheckpointHeader =
        serde_json::from_slice(&bytes[12..12 + hlen]).map_err(|e| CheckpointError::Format(format!("header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(CheckpointError::Format(format!("unsupported format version {}", header.format_version)));
    }
    if header.obs_dim != OBS_DIM || header.act_dim != ACT_DIM {
        return Err(CheckpointError::Mismatch(format!(
            "dims {}→{}, expected {OBS_DIM}→{ACT_DIM}",
            header.obs_dim, header.act_dim
        )));
    }
    if header.activation != "elu" || header.actor_output != "tanh" || header.dtype != "f32le" {
        return Err(CheckpointError::Mismatch("unsupported activation or dtype".into()));
    }
    let arch = Architecture { actor_hidden: header.actor_hidden.clone(), critic_hidden: header.critic_hidden.clone() };
    arch.validate().map_err(|e| CheckpointError::Mismatch(e.to_string()))?;
    if header.blocks != blocks(&arch) {
        return Err(CheckpointError::Mismatch("block list disagrees with layer sizes".into()));
    }
    let data = &bytes[12 + hlen..];
    let n = arch.layout().len;
    if data.len() != 4 * n {
        return Err(CheckpointError::Format(format!("expected {} parameter bytes, found {}", 4 * n, data.len())));
    }
    let theta = data.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes"))).collect();
    let policy = PolicySnapshot::from_parts(arch, theta).map_err(|e| CheckpointError::Format(e.to_string()))?;
    Ok((policy, header))
}

pub fn save_checkpoint(path: &Path, policy: &PolicySnapshot, config_hash: &str) -> Result<(), CheckpointError> {
    std::fs::write(path, to_bytes(policy, config_hash))?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<(PolicySnapshot, CheckpointHeader), CheckpointError> {
    from_bytes(&std::fs::read(path)?)
}
