//! Checkpoint byte layout (all integers little-endian):
//!
//! ```text
//! b"PFCK"            magic
//! u32                format version
//! u32                header length H
//! [u8; H]            UTF-8 JSON header describing the architecture
//! u64                parameter count P
//! [f64 LE; P]        parameters in trunk order
//! ```

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ParametricPolicy, PolicyHead, QApproximator, QHead, QLayout, Trunk};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"PFCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelHeader {
    Policy { trunk: Trunk, head: PolicyHead },
    Q { trunk: Trunk, head: QHead, layout: QLayout },
}

impl ModelHeader {
    fn trunk(&self) -> &Trunk {
        match self {
            ModelHeader::Policy { trunk, .. } | ModelHeader::Q { trunk, .. } => trunk,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub header: ModelHeader,
    pub params: Vec<f64>,
}

impl From<&ParametricPolicy> for Checkpoint {
    fn from(p: &ParametricPolicy) -> Self {
        Checkpoint {
            header: ModelHeader::Policy {
                trunk: p.trunk.clone(),
                head: p.head,
            },
            params: p.params.clone(),
        }
    }
}

impl From<&QApproximator> for Checkpoint {
    fn from(q: &QApproximator) -> Self {
        Checkpoint {
            header: ModelHeader::Q {
                trunk: q.trunk.clone(),
                head: q.head,
                layout: q.layout,
            },
            params: q.params.clone(),
        }
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 8 * self.params.len());
        write_checkpoint(&mut out, self).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        read_checkpoint(&mut &bytes[..])
    }

    pub fn into_policy(self) -> Result<ParametricPolicy> {
        match self.header {
            ModelHeader::Policy { trunk, head } => Ok(ParametricPolicy {
                trunk,
                head,
                params: self.params,
            }),
            _ => Err(Error::Checkpoint("checkpoint holds a Q-function".into())),
        }
    }

    pub fn into_q(self) -> Result<QApproximator> {
        match self.header {
            ModelHeader::Q { trunk, head, layout } => Ok(QApproximator {
                trunk,
                head,
                layout,
                params: self.params,
            }),
            _ => Err(Error::Checkpoint("checkpoint holds a policy".into())),
        }
    }
}

pub fn write_checkpoint<W: Write>(w: &mut W, ckpt: &Checkpoint) -> Result<()> {
    let header = serde_json::to_vec(&ckpt.header)
        .map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(header.len() as u32).to_le_bytes())?;
    w.write_all(&header)?;
    w.write_all(&(ckpt.params.len() as u64).to_le_bytes())?;
    for p in &ckpt.params {
        w.write_all(&p.to_le_bytes())?;
    }
    Ok(())
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Checkpoint(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

pub fn read_checkpoint<R: Read>(r: &mut R) -> Result<Checkpoint> {
    let mut magic = [0u8; 4];
    read_exact(r, &mut magic, "magic")?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let mut u32buf = [0u8; 4];
    read_exact(r, &mut u32buf, "version")?;
    let version = u32::from_le_bytes(u32buf);
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}")));
    }
    read_exact(r, &mut u32buf, "header length")?;
    let mut header = vec![0u8; u32::from_le_bytes(u32buf) as usize];
    read_exact(r, &mut header, "header")?;
    let header: ModelHeader =
        serde_json::from_slice(&header).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    let mut u64buf = [0u8; 8];
    read_exact(r, &mut u64buf, "parameter count")?;
    let count = u64::from_le_bytes(u64buf) as usize;
    if count != header.trunk().param_count() {
        return Err(Error::Checkpoint(format!(
            "header describes {} parameters, file declares {count}",
            header.trunk().param_count()
        )));
    }
    let mut params = Vec::with_capacity(count);
    for _ in 0..count {
        read_exact(r, &mut u64buf, "parameters")?;
        params.push(f64::from_le_bytes(u64buf));
    }
    Ok(Checkpoint { header, params })
}
