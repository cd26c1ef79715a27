//! Binary checkpoint format.
//!
//! All integers and floats are little-endian.
//!
//! ```text
//! magic            8 bytes  "CATPUSH\0"
//! version          u32      = 1
//! spec_hash        32 bytes network layout hash
//! config_hash      32 bytes resume hash of the training configuration
//! iteration        u64      completed iterations
//! seed             u64
//! blocks           actor, log_std, critic, then for each of the three
//!                  optimisers: step (u64), m, v
//! ```
//!
//! Each float block is a `u64` length followed by that many `f64` values.

use std::io::{self, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::adam::Adam;
use super::model::{ActorCritic, NetworkConfig};
use super::ppo::Optimizers;

pub const MAGIC: [u8; 8] = *b"CATPUSH\0";
pub const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error(
        "network layout mismatch: checkpoint spec hash {found}, configuration expects {expected}"
    )]
    SpecHash { found: String, expected: String },
    #[error("block `{name}` has {found} values, expected {expected}")]
    BlockLength {
        name: &'static str,
        found: u64,
        expected: usize,
    },
    #[error("checkpoint contains non-finite parameters")]
    NonFinite,
}

/// Everything persisted between runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec_hash: [u8; 32],
    pub config_hash: [u8; 32],
    pub iteration: u64,
    pub seed: u64,
    pub model: ActorCritic,
    pub optimizers: Optimizers,
}

fn write_block<W: Write>(w: &mut W, values: &[f64]) -> io::Result<()> {
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_block<R: Read>(
    r: &mut R,
    name: &'static str,
    expected: usize,
) -> Result<Vec<f64>, CheckpointError> {
    let n = read_u64(r)?;
    if n != expected as u64 {
        return Err(CheckpointError::BlockLength {
            name,
            found: n,
            expected,
        });
    }
    let mut out = Vec::with_capacity(expected);
    let mut b = [0u8; 8];
    for _ in 0..expected {
        r.read_exact(&mut b)?;
        out.push(f64::from_le_bytes(b));
    }
    Ok(out)
}

fn write_adam<W: Write>(w: &mut W, a: &Adam) -> io::Result<()> {
    w.write_all(&a.step.to_le_bytes())?;
    write_block(w, &a.m)?;
    write_block(w, &a.v)
}

fn read_adam<R: Read>(r: &mut R, name: &'static str, n: usize) -> Result<Adam, CheckpointError> {
    let mut a = Adam::new(n);
    a.step = read_u64(r)?;
    a.m = read_block(r, name, n)?;
    a.v = read_block(r, name, n)?;
    Ok(a)
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, w: &mut W) -> io::Result<()> {
        w.write_all(&MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.spec_hash)?;
        w.write_all(&self.config_hash)?;
        w.write_all(&self.iteration.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        write_block(w, &self.model.actor)?;
        write_block(w, &self.model.log_std)?;
        write_block(w, &self.model.critic)?;
        write_adam(w, &self.optimizers.actor)?;
        write_adam(w, &self.optimizers.log_std)?;
        write_adam(w, &self.optimizers.critic)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out)
            .expect("writing to memory cannot fail");
        out
    }

    /// Reads a checkpoint whose layout must match `network`.
    pub fn read_from<R: Read>(r: &mut R, network: &NetworkConfig) -> Result<Self, CheckpointError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(CheckpointError::BadMagic);
        }
        let mut v = [0u8; 4];
        r.read_exact(&mut v)?;
        let version = u32::from_le_bytes(v);
        if version != VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: VERSION,
            });
        }
        let mut spec_hash = [0u8; 32];
        r.read_exact(&mut spec_hash)?;
        let expected = network.spec_hash();
        if spec_hash != expected {
            return Err(CheckpointError::SpecHash {
                found: hex::encode(spec_hash),
                expected: hex::encode(expected),
            });
        }
        let mut config_hash = [0u8; 32];
        r.read_exact(&mut config_hash)?;
        let iteration = read_u64(r)?;
        let seed = read_u64(r)?;
        let actor_spec = network.actor_spec();
        let critic_spec = network.critic_spec();
        let (na, nc) = (actor_spec.num_params(), critic_spec.num_params());
        let nl = actor_spec.output;
        let model = ActorCritic {
            actor: read_block(r, "actor", na)?,
            log_std: read_block(r, "log_std", nl)?,
            critic: read_block(r, "critic", nc)?,
            actor_spec,
            critic_spec,
        };
        if !model.is_finite() {
            return Err(CheckpointError::NonFinite);
        }
        let optimizers = Optimizers {
            actor: read_adam(r, "actor_optimizer", na)?,
            log_std: read_adam(r, "log_std_optimizer", nl)?,
            critic: read_adam(r, "critic_optimizer", nc)?,
        };
        Ok(Self {
            spec_hash,
            config_hash,
            iteration,
            seed,
            model,
            optimizers,
        })
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, self.to_bytes())?;
        std::fs::rename(tmp, path)
    }

    pub fn load(path: &Path, network: &NetworkConfig) -> Result<Self, CheckpointError> {
        let bytes = std::fs::read(path)?;
        Self::read_from(&mut bytes.as_slice(), network)
    }
}
