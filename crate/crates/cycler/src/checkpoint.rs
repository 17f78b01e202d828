//! Checkpoint files: a JSON header describing shapes and provenance, then the
//! flat parameter vectors as little-endian `f64`.
//!
//! Layout: the magic line `cycler-ckpt v1\n`, an 8-byte little-endian header
//! length, the header JSON, then actor parameters followed by critic
//! parameters. The header embeds the automaton text and the training
//! configuration so evaluation needs nothing but the checkpoint.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use cycler_core::learn::{ActionHead, Activation, Mlp, PolicyNet, ValueNet};

use crate::formats::{FormatError, TrainFile};

const MAGIC: &[u8] = b"cycler-ckpt v1\n";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointHeader {
    pub actor_sizes: Vec<usize>,
    pub critic_sizes: Vec<usize>,
    pub head: HeadDto,
    pub obs_dim: usize,
    pub eps_ids: Vec<String>,
    pub eps_sources: Vec<usize>,
    /// Automaton source text, verbatim.
    pub ldba_text: String,
    pub config: TrainFile,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, rename_all = "snake_case")]
pub enum HeadDto {
    Continuous { dim: usize, bound: f64 },
    Discrete { count: usize },
}

impl From<ActionHead> for HeadDto {
    fn from(head: ActionHead) -> Self {
        match head {
            ActionHead::Continuous { dim, bound } => HeadDto::Continuous { dim, bound },
            ActionHead::Discrete { count } => HeadDto::Discrete { count },
        }
    }
}

impl From<&HeadDto> for ActionHead {
    fn from(head: &HeadDto) -> Self {
        match head {
            HeadDto::Continuous { dim, bound } => ActionHead::Continuous {
                dim: *dim,
                bound: *bound,
            },
            HeadDto::Discrete { count } => ActionHead::Discrete { count: *count },
        }
    }
}

#[derive(Debug)]
pub enum CheckpointError {
    Io(std::io::Error),
    Format(FormatError),
    Corrupt(String),
}

impl std::fmt::Display for CheckpointError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckpointError::Io(e) => write!(f, "io: {e}"),
            CheckpointError::Format(e) => write!(f, "header: {e}"),
            CheckpointError::Corrupt(msg) => write!(f, "corrupt checkpoint: {msg}"),
        }
    }
}

impl std::error::Error for CheckpointError {}

impl From<std::io::Error> for CheckpointError {
    fn from(e: std::io::Error) -> Self {
        CheckpointError::Io(e)
    }
}

pub fn save<W: Write>(
    mut writer: W,
    policy: &PolicyNet,
    value: &ValueNet,
    ldba_text: &str,
    config: &TrainFile,
) -> Result<(), CheckpointError> {
    let header = CheckpointHeader {
        actor_sizes: policy.net.sizes.clone(),
        critic_sizes: value.net.sizes.clone(),
        head: policy.head.into(),
        obs_dim: policy.obs_dim,
        eps_ids: policy.eps_ids.clone(),
        eps_sources: policy.eps_sources.clone(),
        ldba_text: ldba_text.to_string(),
        config: config.clone(),
    };
    let header_bytes = serde_json::to_vec(&header)
        .map_err(|e| CheckpointError::Format(FormatError::Json(e)))?;
    writer.write_all(MAGIC)?;
    writer.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    writer.write_all(&header_bytes)?;
    for p in policy.net.params.iter().chain(value.net.params.iter()) {
        writer.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

pub fn load<R: Read>(mut reader: R) -> Result<(PolicyNet, ValueNet, CheckpointHeader), CheckpointError> {
    let mut magic = vec![0u8; MAGIC.len()];
    reader.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(CheckpointError::Corrupt("bad magic".to_string()));
    }
    let mut len_bytes = [0u8; 8];
    reader.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 64 * 1024 * 1024 {
        return Err(CheckpointError::Corrupt("oversized header".to_string()));
    }
    let mut header_bytes = vec![0u8; header_len];
    reader.read_exact(&mut header_bytes)?;
    let header: CheckpointHeader = serde_json::from_slice(&header_bytes)
        .map_err(|e| CheckpointError::Format(FormatError::Json(e)))?;

    let actor_count = Mlp::param_count(&header.actor_sizes);
    let critic_count = Mlp::param_count(&header.critic_sizes);
    let mut raw = vec![0u8; (actor_count + critic_count) * 8];
    reader.read_exact(&mut raw)?;
    let mut params = Vec::with_capacity(actor_count + critic_count);
    for chunk in raw.chunks_exact(8) {
        params.push(f64::from_le_bytes(chunk.try_into().expect("8-byte chunk")));
    }

    let policy = PolicyNet {
        net: Mlp {
            sizes: header.actor_sizes.clone(),
            activation: Activation::Relu,
            params: params[..actor_count].to_vec(),
        },
        head: (&header.head).into(),
        obs_dim: header.obs_dim,
        eps_ids: header.eps_ids.clone(),
        eps_sources: header.eps_sources.clone(),
    };
    let value = ValueNet {
        net: Mlp {
            sizes: header.critic_sizes.clone(),
            activation: Activation::Tanh,
            params: params[actor_count..].to_vec(),
        },
    };
    Ok((policy, value, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formats::{FlatWorldFile, ModeDto};
    use cycler_core::automaton::{parse_ldba, ParseOptions};
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip() {
        let ldba_text =
            "ldba v1\naps: a\nstates: 1\ninitial: 0\naccepting: 0\nedge: 0 -> 0 : true\n";
        let ldba = parse_ldba(ldba_text, ParseOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let policy = PolicyNet::new(
            7,
            ActionHead::Continuous { dim: 2, bound: 1.0 },
            &ldba,
            8,
            &mut rng,
        );
        let value = ValueNet::new(7, 8, &mut rng);
        let config = TrainFile {
            version: crate::formats::TRAIN_VERSION.to_string(),
            ldba: "x.ldba".to_string(),
            env: FlatWorldFile::defaults(),
            mode: ModeDto::Discrete,
            gamma: 0.98,
            gamma_phi: 0.9,
            lambda: 400.0,
            batch_size: 4,
            horizon: 8,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            episodes: 8,
            seed: 1,
            entropy_coef: 0.0,
            update_epochs: 1,
            clip_epsilon: 0.2,
            hidden: 8,
            allow_partial: true,
            clamp_negative_progress: false,
        };
        let mut buffer = Vec::new();
        save(&mut buffer, &policy, &value, ldba_text, &config).unwrap();
        let (p2, v2, header) = load(buffer.as_slice()).unwrap();
        assert_eq!(p2.net.params, policy.net.params);
        assert_eq!(v2.net.params, value.net.params);
        assert_eq!(header.ldba_text, ldba_text);
        assert_eq!(header.config, config);
    }
}
