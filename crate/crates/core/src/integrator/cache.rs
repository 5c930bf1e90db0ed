//! On-disk trajectory cache keyed by a content hash of the integration inputs.

use super::dopri::{integrate, IntegratorSettings};
use super::trajectory::{Direction, Segment, Status, Trajectory};
use crate::field::ScalarField;
use crate::{Error, Result};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

const MAGIC: &[u8; 8] = b"TLTRAJ01";

/// Hex sha256 over the JSON of the field and settings and the bit patterns
/// of the endpoints.
pub fn cache_key(
    field: &ScalarField,
    settings: &IntegratorSettings,
    s: f64,
    x0: f64,
    t_end: f64,
) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_vec(field).expect("field serializes"));
    hasher.update(serde_json::to_vec(settings).expect("settings serialize"));
    for v in [s, x0, t_end] {
        hasher.update(v.to_bits().to_le_bytes());
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Clone, Debug)]
pub struct TrajectoryCache {
    dir: PathBuf,
}

impl TrajectoryCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::Cache(e.to_string()))?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.traj"))
    }

    /// Returns the cached trajectory or integrates and stores it.
    pub fn integrate(
        &self,
        field: &ScalarField,
        s: f64,
        x0: f64,
        t_end: f64,
        settings: &IntegratorSettings,
    ) -> Result<Trajectory> {
        let key = cache_key(field, settings, s, x0, t_end);
        let path = self.path(&key);
        if let Ok(bytes) = fs::read(&path) {
            if let Ok(tr) = decode(&bytes) {
                return Ok(tr);
            }
        }
        let tr = integrate(field, s, x0, t_end, settings)?;
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, encode(&tr)).map_err(|e| Error::Cache(e.to_string()))?;
        fs::rename(&tmp, &path).map_err(|e| Error::Cache(e.to_string()))?;
        Ok(tr)
    }
}

pub fn encode(tr: &Trajectory) -> Vec<u8> {
    let n = tr.times.len();
    let mut out = Vec::with_capacity(64 + n * 8 * 16);
    out.extend_from_slice(MAGIC);
    let put = |out: &mut Vec<u8>, v: f64| out.extend_from_slice(&v.to_le_bytes());
    put(&mut out, tr.anchor);
    put(&mut out, tr.x0);
    out.push(match tr.direction {
        Direction::Forward => 0,
        Direction::Backward => 1,
    });
    let (tag, a, b) = match tr.status {
        Status::ReachedHorizon => (0u8, 0.0, 0.0),
        Status::BlowUp { t, sign } => (1, t, sign),
        Status::StepCollapse { t } => (2, t, 0.0),
    };
    out.push(tag);
    put(&mut out, a);
    put(&mut out, b);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for i in 0..n {
        put(&mut out, tr.times[i]);
        put(&mut out, tr.xs[i]);
        put(&mut out, tr.integrals[i]);
    }
    for s in &tr.segments {
        put(&mut out, s.t_old);
        put(&mut out, s.h);
        for v in s.cx.iter().chain(&s.ci) {
            put(&mut out, *v);
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn byte(&mut self) -> Result<u8> {
        let b = *self.bytes.get(self.pos).ok_or_else(corrupt)?;
        self.pos += 1;
        Ok(b)
    }

    fn word(&mut self) -> Result<[u8; 8]> {
        let chunk = self.bytes.get(self.pos..self.pos + 8).ok_or_else(corrupt)?;
        self.pos += 8;
        Ok(chunk.try_into().unwrap())
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.word()?))
    }
}

fn corrupt() -> Error {
    Error::Cache("corrupt trajectory cache entry".into())
}

pub fn decode(bytes: &[u8]) -> Result<Trajectory> {
    if bytes.len() < MAGIC.len() || &bytes[..8] != MAGIC {
        return Err(corrupt());
    }
    let mut r = Reader { bytes, pos: 8 };
    let anchor = r.f64()?;
    let x0 = r.f64()?;
    let direction = match r.byte()? {
        0 => Direction::Forward,
        1 => Direction::Backward,
        _ => return Err(corrupt()),
    };
    let tag = r.byte()?;
    let a = r.f64()?;
    let b = r.f64()?;
    let status = match tag {
        0 => Status::ReachedHorizon,
        1 => Status::BlowUp { t: a, sign: b },
        2 => Status::StepCollapse { t: a },
        _ => return Err(corrupt()),
    };
    let n = u64::from_le_bytes(r.word()?) as usize;
    if n == 0 || bytes.len() != r.pos + 8 * (3 * n + 12 * (n - 1)) {
        return Err(corrupt());
    }
    let mut times = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut integrals = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(r.f64()?);
        xs.push(r.f64()?);
        integrals.push(r.f64()?);
    }
    let mut segments = Vec::with_capacity(n - 1);
    for _ in 0..n - 1 {
        let t_old = r.f64()?;
        let h = r.f64()?;
        let mut cx = [0.0; 5];
        let mut ci = [0.0; 5];
        for v in cx.iter_mut().chain(ci.iter_mut()) {
            *v = r.f64()?;
        }
        segments.push(Segment { t_old, h, cx, ci });
    }
    Ok(Trajectory {
        anchor,
        x0,
        direction,
        times,
        xs,
        integrals,
        segments,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cache = TrajectoryCache::new(dir.path()).unwrap();
        let f = ScalarField::polynomial([0.0, 1.0, 0.0, -1.0]);
        let s = IntegratorSettings::default();
        let a = cache.integrate(&f, 0.0, 0.5, 10.0, &s).unwrap();
        let b = cache.integrate(&f, 0.0, 0.5, 10.0, &s).unwrap();
        assert_eq!(a, b);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
        assert_ne!(
            cache_key(&f, &s, 0.0, 0.5, 10.0),
            cache_key(&f, &s, 0.0, 0.5000000000000001, 10.0)
        );
    }

    #[test]
    fn corrupt_entries_are_rejected() {
        assert!(decode(b"nonsense").is_err());
        let f = ScalarField::polynomial([0.0, -1.0, 0.0, 0.0]);
        let tr = integrate(&f, 0.0, 1.0, -2.0, &IntegratorSettings::default()).unwrap();
        let bytes = encode(&tr);
        assert_eq!(decode(&bytes).unwrap(), tr);
        assert!(decode(&bytes[..bytes.len() - 3]).is_err());
    }
}
