//! Dataset byte layout (integers little-endian, floats IEEE-754 f64 LE):
//!
//! ```text
//! header:
//!   b"PFDS"              magic
//!   u32                  format version
//!   u16 + bytes          env id (UTF-8)
//!   u16 + bytes          teacher tier (UTF-8)
//!   u8                   deterministic collection flag
//!   u64                  collection seed
//!   u64                  episode count E
//! E episode records:
//!   u64                  record length in bytes, then the record:
//!   u8 source (0 teacher-offline, 1 student-online), u8 success,
//!   u64 episode seed, u32 transition count, then per transition:
//!     observation, action, f64 reward, observation (next), u8 terminal,
//!     f64 behavior log-density
//! observation: u8 tag 0 + u64 index | u8 tag 1 + u32 len + f64 * len
//! action:      u8 tag 0 + u64 index | u8 tag 1 + u32 len + f64 * len
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::{stream_ids, Action, ActionSelection, Episode, EpisodeSource, Observation, RandomStream, StochasticPolicy, Transition};
use crate::envs::{run_episode, Environment};
use crate::{Error, Result};

pub const DATASET_MAGIC: &[u8; 4] = b"PFDS";
pub const DATASET_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub env_id: String,
    pub teacher_tier: String,
    pub deterministic: bool,
    pub seed: u64,
}

/// Immutable teacher episodes with a flat transition index.
#[derive(Debug, Clone, PartialEq)]
pub struct OfflineDataset {
    meta: DatasetMeta,
    episodes: Vec<Episode>,
    index: Vec<(u32, u32)>,
}

impl OfflineDataset {
    pub fn new(meta: DatasetMeta, episodes: Vec<Episode>) -> Self {
        let index = episodes
            .iter()
            .enumerate()
            .flat_map(|(e, ep)| (0..ep.len()).map(move |t| (e as u32, t as u32)))
            .collect();
        Self { meta, episodes, index }
    }

    /// Rolls out `teacher` for `n` episodes: mode actions when
    /// `deterministic`, samples otherwise. Resets come from one stream, so
    /// a smaller dataset with the same seed is a prefix of a larger one.
    pub fn collect<E, P>(
        env: &mut E,
        teacher: &P,
        teacher_tier: &str,
        n: usize,
        deterministic: bool,
        seed: u64,
    ) -> Result<Self>
    where
        E: Environment + ?Sized,
        P: StochasticPolicy + ?Sized,
    {
        if n == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one episode".into()));
        }
        let mut resets = RandomStream::new(seed, stream_ids::DATASET);
        let mut actions = RandomStream::new(seed, stream_ids::TEACHER_SAMPLES);
        let selection = if deterministic {
            ActionSelection::Mode
        } else {
            ActionSelection::Sample
        };
        let episodes = (0..n)
            .map(|_| run_episode(env, teacher, selection, &mut resets, &mut actions, EpisodeSource::TeacherOffline))
            .collect::<Result<Vec<_>>>()?;
        let meta = DatasetMeta {
            env_id: env.spec().id.to_string(),
            teacher_tier: teacher_tier.to_string(),
            deterministic,
            seed,
        };
        Ok(Self::new(meta, episodes))
    }

    pub fn meta(&self) -> &DatasetMeta {
        &self.meta
    }

    pub fn episodes(&self) -> &[Episode] {
        &self.episodes
    }

    /// Episode count.
    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn n_transitions(&self) -> usize {
        self.index.len()
    }

    pub fn transition(&self, i: usize) -> &Transition {
        let (e, t) = self.index[i];
        &self.episodes[e as usize].transitions[t as usize]
    }

    pub fn success_rate(&self) -> f64 {
        if self.episodes.is_empty() {
            return 0.0;
        }
        self.episodes.iter().filter(|e| e.success).count() as f64 / self.episodes.len() as f64
    }

    /// The first `n` episodes.
    pub fn prefix(&self, n: usize) -> Result<Self> {
        if n > self.episodes.len() {
            return Err(Error::InvalidArgument(format!(
                "requested {n} episodes from a dataset of {}",
                self.episodes.len()
            )));
        }
        Ok(Self::new(self.meta.clone(), self.episodes[..n].to_vec()))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        let mut head = Vec::new();
        head.extend_from_slice(DATASET_MAGIC);
        head.extend_from_slice(&DATASET_VERSION.to_le_bytes());
        put_str(&mut head, &self.meta.env_id)?;
        put_str(&mut head, &self.meta.teacher_tier)?;
        head.push(self.meta.deterministic as u8);
        head.extend_from_slice(&self.meta.seed.to_le_bytes());
        head.extend_from_slice(&(self.episodes.len() as u64).to_le_bytes());
        w.write_all(&head)?;
        let mut rec = Vec::new();
        for ep in &self.episodes {
            rec.clear();
            encode_episode(&mut rec, ep);
            w.write_all(&(rec.len() as u64).to_le_bytes())?;
            w.write_all(&rec)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        self.write_to(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        fill(r, &mut magic, "magic")?;
        if &magic != DATASET_MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = u32::from_le_bytes(take(r, "version")?);
        if version != DATASET_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let env_id = get_str(r)?;
        let teacher_tier = get_str(r)?;
        let [flag] = take::<1, _>(r, "deterministic flag")?;
        if flag > 1 {
            return Err(Error::Format(format!("deterministic flag {flag}")));
        }
        let seed = u64::from_le_bytes(take(r, "seed")?);
        let count = u64::from_le_bytes(take(r, "episode count")?) as usize;
        let mut episodes = Vec::with_capacity(count.min(1 << 20));
        for e in 0..count {
            let len = u64::from_le_bytes(take(r, "record length")?) as usize;
            let mut rec = vec![0u8; len];
            fill(r, &mut rec, "episode record")?;
            let mut cur = Cursor { buf: &rec, pos: 0 };
            let ep = decode_episode(&mut cur).map_err(|m| Error::Format(format!("episode {e}: {m}")))?;
            if cur.pos != rec.len() {
                return Err(Error::Format(format!("episode {e}: trailing bytes")));
            }
            episodes.push(ep);
        }
        let mut extra = [0u8; 1];
        if r.read(&mut extra)? != 0 {
            return Err(Error::Format("trailing data after last episode".into()));
        }
        let meta = DatasetMeta {
            env_id,
            teacher_tier,
            deterministic: flag == 1,
            seed,
        };
        Ok(Self::new(meta, episodes))
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(&mut &bytes[..])
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingDataset(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::read_from(&mut BufReader::new(file))
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::Format(format!("string too long: {s}")))?;
    out.extend_from_slice(&len.to_le_bytes());
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

fn fill<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn take<const N: usize, R: Read>(r: &mut R, what: &str) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    fill(r, &mut b, what)?;
    Ok(b)
}

fn get_str<R: Read>(r: &mut R) -> Result<String> {
    let len = u16::from_le_bytes(take(r, "string length")?) as usize;
    let mut b = vec![0u8; len];
    fill(r, &mut b, "string")?;
    String::from_utf8(b).map_err(|_| Error::Format("invalid UTF-8 in header".into()))
}

fn put_f64s(out: &mut Vec<u8>, xs: &[f64]) {
    out.extend_from_slice(&(xs.len() as u32).to_le_bytes());
    for x in xs {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn put_obs(out: &mut Vec<u8>, obs: &Observation) {
    match obs {
        Observation::Index(i) => {
            out.push(0);
            out.extend_from_slice(&(*i as u64).to_le_bytes());
        }
        Observation::Features(f) => {
            out.push(1);
            put_f64s(out, f);
        }
    }
}

fn put_action(out: &mut Vec<u8>, a: &Action) {
    match a {
        Action::Discrete(i) => {
            out.push(0);
            out.extend_from_slice(&(*i as u64).to_le_bytes());
        }
        Action::Continuous(v) => {
            out.push(1);
            put_f64s(out, v);
        }
    }
}

fn encode_episode(out: &mut Vec<u8>, ep: &Episode) {
    out.push(match ep.source {
        EpisodeSource::TeacherOffline => 0,
        EpisodeSource::StudentOnline => 1,
    });
    out.push(ep.success as u8);
    out.extend_from_slice(&ep.seed.to_le_bytes());
    out.extend_from_slice(&(ep.transitions.len() as u32).to_le_bytes());
    for t in &ep.transitions {
        put_obs(out, &t.state);
        put_action(out, &t.action);
        out.extend_from_slice(&t.reward.to_le_bytes());
        put_obs(out, &t.next_state);
        out.push(t.terminal as u8);
        out.extend_from_slice(&t.behavior_log_density.to_le_bytes());
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn bytes<const N: usize>(&mut self) -> std::result::Result<[u8; N], String> {
        let end = self.pos + N;
        let b = self
            .buf
            .get(self.pos..end)
            .ok_or_else(|| "record too short".to_string())?;
        self.pos = end;
        Ok(b.try_into().expect("slice has length N"))
    }

    fn u8(&mut self) -> std::result::Result<u8, String> {
        Ok(self.bytes::<1>()?[0])
    }

    fn flag(&mut self) -> std::result::Result<bool, String> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(format!("invalid flag byte {b}")),
        }
    }

    fn u32(&mut self) -> std::result::Result<u32, String> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }

    fn u64(&mut self) -> std::result::Result<u64, String> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }

    fn f64(&mut self) -> std::result::Result<f64, String> {
        Ok(f64::from_le_bytes(self.bytes()?))
    }

    fn f64s(&mut self) -> std::result::Result<Vec<f64>, String> {
        let n = self.u32()? as usize;
        if n * 8 > self.buf.len() - self.pos {
            return Err("vector overruns record".into());
        }
        (0..n).map(|_| self.f64()).collect()
    }

    fn obs(&mut self) -> std::result::Result<Observation, String> {
        match self.u8()? {
            0 => Ok(Observation::Index(self.u64()? as usize)),
            1 => Ok(Observation::Features(self.f64s()?)),
            t => Err(format!("observation tag {t}")),
        }
    }

    fn action(&mut self) -> std::result::Result<Action, String> {
        match self.u8()? {
            0 => Ok(Action::Discrete(self.u64()? as usize)),
            1 => Ok(Action::Continuous(self.f64s()?)),
            t => Err(format!("action tag {t}")),
        }
    }
}

fn decode_episode(c: &mut Cursor<'_>) -> std::result::Result<Episode, String> {
    let source = match c.u8()? {
        0 => EpisodeSource::TeacherOffline,
        1 => EpisodeSource::StudentOnline,
        s => return Err(format!("source tag {s}")),
    };
    let success = c.flag()?;
    let seed = c.u64()?;
    let n = c.u32()? as usize;
    let mut transitions = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        transitions.push(Transition {
            state: c.obs()?,
            action: c.action()?,
            reward: c.f64()?,
            next_state: c.obs()?,
            terminal: c.flag()?,
            behavior_log_density: c.f64()?,
        });
    }
    Ok(Episode {
        transitions,
        source,
        success,
        seed,
    })
}
