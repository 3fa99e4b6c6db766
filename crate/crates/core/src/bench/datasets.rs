use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::datastore::OfflineDataset;
use crate::envs::{EnvConfig, TeacherPolicy, TeacherTier};
use crate::{Error, Result};

/// Hex SHA-256 of a file's bytes.
pub fn content_hash(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

fn sidecar(path: &Path) -> PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".sha256");
    PathBuf::from(p)
}

/// One dataset file per (env, teacher, size, seed, collection mode), written
/// once and shared by every cell that needs it. Each file has a `.sha256`
/// sidecar checked on reuse.
#[derive(Debug, Clone)]
pub struct DatasetCache {
    dir: PathBuf,
}

impl DatasetCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, env: &EnvConfig, tier: TeacherTier, n: u64, deterministic: bool, seed: u64) -> PathBuf {
        let mode = if deterministic { "det" } else { "sto" };
        let targets = env.fixed_targets.map_or(String::new(), |[b, g]| format!("-fixed{b}_{g}"));
        self.dir
            .join(format!("{}{targets}-{}-{mode}-n{n}-s{seed}.pfds", env.kind.id(), tier.name()))
    }

    /// Returns the cached file, collecting it first if absent.
    pub fn ensure(
        &self,
        env: &EnvConfig,
        teacher: &TeacherPolicy,
        tier: TeacherTier,
        n: u64,
        deterministic: bool,
        seed: u64,
    ) -> Result<PathBuf> {
        if n == 0 {
            return Err(Error::InvalidArgument("refusing to cache an empty dataset".into()));
        }
        let path = self.path_for(env, tier, n, deterministic, seed);
        if path.exists() {
            self.verify(&path)?;
            return Ok(path);
        }
        fs::create_dir_all(&self.dir)?;
        let mut e = env.build()?;
        let data = OfflineDataset::collect(&mut e, teacher, tier.name(), n as usize, deterministic, seed)?;
        let mut tmp = path.as_os_str().to_owned();
        tmp.push(format!(".tmp{}", std::process::id()));
        let tmp = PathBuf::from(tmp);
        data.save(&tmp)?;
        let hash = content_hash(&tmp)?;
        fs::write(sidecar(&path), &hash)?;
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Checks a cached file against its recorded hash.
    pub fn verify(&self, path: &Path) -> Result<String> {
        let hash = content_hash(path)?;
        match fs::read_to_string(sidecar(path)) {
            Ok(expected) if expected.trim() == hash => Ok(hash),
            Ok(_) => Err(Error::Format(format!("{} does not match its recorded hash", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                fs::write(sidecar(path), &hash)?;
                Ok(hash)
            }
            Err(e) => Err(e.into()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reuse_and_tamper_detection() {
        let dir = tempfile::tempdir().unwrap();
        let cache = DatasetCache::new(dir.path());
        let env = EnvConfig::grid();
        let teacher = crate::envs::make_teacher(&env, TeacherTier::Mastery, 1.0, &Default::default()).unwrap();
        let p = cache.ensure(&env, &teacher, TeacherTier::Mastery, 5, false, 3).unwrap();
        let h = content_hash(&p).unwrap();
        let again = cache.ensure(&env, &teacher, TeacherTier::Mastery, 5, false, 3).unwrap();
        assert_eq!(p, again);
        assert_eq!(content_hash(&again).unwrap(), h);
        let mut bytes = fs::read(&p).unwrap();
        let last = bytes.len() - 1;
        bytes[last] ^= 1;
        fs::write(&p, bytes).unwrap();
        assert!(matches!(cache.verify(&p), Err(Error::Format(_))));
        assert!(cache.ensure(&env, &teacher, TeacherTier::Mastery, 0, false, 3).is_err());
    }
}
