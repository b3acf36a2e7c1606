//! On-disk cache of eigensystems.
//!
//! Entries are keyed by the SHA-256 of a canonical description of the
//! Hamiltonian: its kind, the exact bit patterns of the parameters it
//! depends on, and the basis ordering. Bath entries ignore `delta` and
//! `epsilon`, so every recipe at the same `(J, U, N, L)` shares one.
//!
//! File layout (`<key>.eig`, little endian):
//!
//! ```text
//! magic    8 bytes  "BMEIG\x00\x01\n"
//! dim      u64
//! tag_len  u32, then tag bytes (UTF-8)
//! energies dim × f64
//! vectors  dim² × f64, row k = eigenvector k
//! digest   32 bytes, SHA-256 of everything above
//! ```
//!
//! A sidecar `<key>.json` describes the entry for `lab cache ls`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use born_markov::{operators, EigenSystem, FockBasis, ModelParams, SparseOperator};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

const MAGIC: &[u8; 8] = b"BMEIG\x00\x01\n";
const ORDERING: &str = "fock=descending-lex;composite=spin-major(up,down)";
/// Eigenpairs checked on every load.
pub const SPOT_CHECKS: usize = 5;
/// Relative to `max |H_ij|`.
pub const SPOT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Bath,
    Composite,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::Bath => "bath",
            SystemKind::Composite => "composite",
        }
    }

    pub fn hamiltonian(self, p: &ModelParams) -> born_markov::Result<SparseOperator> {
        let basis = FockBasis::new(p.particles, p.sites)?;
        match self {
            SystemKind::Bath => operators::build_bath_hamiltonian(p, &basis),
            SystemKind::Composite => operators::build_total_hamiltonian(p, &basis),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub kind: SystemKind,
    pub hex: String,
    pub description: String,
}

impl CacheKey {
    pub fn new(kind: SystemKind, p: &ModelParams) -> Self {
        let mut d = format!(
            "born-markov eigensystem v1\nkind={}\nJ={:016x}\nU={:016x}\nN={}\nL={}\n",
            kind.name(),
            p.j.to_bits(),
            p.u.to_bits(),
            p.particles,
            p.sites
        );
        if kind == SystemKind::Composite {
            d.push_str(&format!("delta={:016x}\nepsilon={:016x}\n", p.delta.to_bits(), p.epsilon.to_bits()));
        }
        d.push_str(&format!("ordering={ORDERING}\n"));
        Self { kind, hex: hex(&Sha256::digest(d.as_bytes())), description: d }
    }

    /// Seed of the spot-check index draw: the first 8 bytes of the key.
    pub fn seed(&self) -> u64 {
        u64::from_str_radix(&self.hex[..16], 16).expect("hex key")
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Human-readable record next to each entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntryInfo {
    pub key: String,
    pub kind: SystemKind,
    pub j: f64,
    pub u: f64,
    pub sites: usize,
    pub particles: usize,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub dim: usize,
    pub bytes: u64,
    pub created_by: String,
}

#[derive(Debug)]
pub enum Lookup {
    Hit { system: EigenSystem, checked: Vec<usize>, max_residual: f64 },
    Miss,
    /// The entry exists but is unusable; it has been removed.
    Corrupt(String),
}

#[derive(Debug, Clone)]
pub struct EigenCache {
    dir: PathBuf,
}

impl EigenCache {
    pub fn open(dir: impl Into<PathBuf>) -> io::Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn entry_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.eig", key.hex))
    }

    fn info_path(&self, key: &CacheKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.hex))
    }

    /// Loads an entry and verifies it against a freshly built Hamiltonian on
    /// [`SPOT_CHECKS`] eigenpairs drawn with [`CacheKey::seed`].
    pub fn lookup(&self, key: &CacheKey, p: &ModelParams) -> Lookup {
        let path = self.entry_path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Lookup::Miss,
            Err(e) => return self.discard(key, format!("unreadable: {e}")),
        };
        let system = match decode(&bytes) {
            Ok(s) => s,
            Err(why) => return self.discard(key, why),
        };
        let h = match key.kind.hamiltonian(p) {
            Ok(h) => h,
            Err(e) => return self.discard(key, format!("cannot rebuild Hamiltonian: {e}")),
        };
        if h.dim() != system.dim() {
            return self.discard(key, format!("dimension {} does not match the model ({})", system.dim(), h.dim()));
        }
        let scale = h.max_abs().max(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(key.seed());
        let checked: Vec<usize> = (0..SPOT_CHECKS.min(system.dim())).map(|_| rng.random_range(0..system.dim())).collect();
        let mut max_residual = 0.0f64;
        for &k in &checked {
            match system.residual(&h, k) {
                Ok(r) if r <= SPOT_TOLERANCE * scale => max_residual = max_residual.max(r),
                Ok(r) => return self.discard(key, format!("eigenpair {k} residual {r:e} exceeds tolerance")),
                Err(e) => return self.discard(key, e.to_string()),
            }
        }
        Lookup::Hit { system, checked, max_residual }
    }

    fn discard(&self, key: &CacheKey, why: String) -> Lookup {
        let _ = fs::remove_file(self.entry_path(key));
        let _ = fs::remove_file(self.info_path(key));
        Lookup::Corrupt(why)
    }

    /// Writes through a temporary file so readers never see a partial entry.
    pub fn store(&self, key: &CacheKey, p: &ModelParams, system: &EigenSystem) -> io::Result<()> {
        let bytes = encode(system);
        let path = self.entry_path(key);
        let tmp = path.with_extension("eig.tmp");
        fs::write(&tmp, &bytes)?;
        fs::rename(&tmp, &path)?;
        let composite = key.kind == SystemKind::Composite;
        let info = EntryInfo {
            key: key.hex.clone(),
            kind: key.kind,
            j: p.j,
            u: p.u,
            sites: p.sites,
            particles: p.particles,
            delta: composite.then_some(p.delta),
            epsilon: composite.then_some(p.epsilon),
            dim: system.dim(),
            bytes: bytes.len() as u64,
            created_by: crate::code_version(),
        };
        fs::write(self.info_path(key), serde_json::to_vec_pretty(&info).map_err(io::Error::other)?)
    }

    /// Entries with a readable sidecar, sorted by key.
    pub fn entries(&self) -> io::Result<Vec<EntryInfo>> {
        let mut out = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "json") {
                if let Ok(info) = serde_json::from_slice::<EntryInfo>(&fs::read(&path)?) {
                    out.push(info);
                }
            }
        }
        out.sort_by(|a, b| a.key.cmp(&b.key));
        Ok(out)
    }

    /// Removes every cache file; returns how many entries were dropped.
    pub fn clear(&self) -> io::Result<usize> {
        let mut n = 0;
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            match path.extension().and_then(|e| e.to_str()) {
                Some("eig") => {
                    fs::remove_file(&path)?;
                    n += 1;
                }
                Some("json") | Some("tmp") => fs::remove_file(&path)?,
                _ => {}
            }
        }
        Ok(n)
    }
}

pub fn encode(es: &EigenSystem) -> Vec<u8> {
    let n = es.dim();
    let tag = es.tag().as_bytes();
    let mut out = Vec::with_capacity(8 + 8 + 4 + tag.len() + 8 * n * (n + 1) + 32);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(tag.len() as u32).to_le_bytes());
    out.extend_from_slice(tag);
    for x in es.energies().iter().chain(es.vectors()) {
        out.extend_from_slice(&x.to_le_bytes());
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

pub fn decode(bytes: &[u8]) -> Result<EigenSystem, String> {
    if bytes.len() < 8 + 8 + 4 + 32 {
        return Err("truncated header".into());
    }
    if &bytes[..8] != MAGIC {
        return Err("bad magic or unsupported version".into());
    }
    let (body, digest) = bytes.split_at(bytes.len() - 32);
    if Sha256::digest(body).as_slice() != digest {
        return Err("checksum mismatch".into());
    }
    let n = u64::from_le_bytes(body[8..16].try_into().unwrap()) as usize;
    let tag_len = u32::from_le_bytes(body[16..20].try_into().unwrap()) as usize;
    let start = 20 + tag_len;
    let expected = n.checked_mul(n + 1).and_then(|m| m.checked_mul(8)).and_then(|m| m.checked_add(start));
    if expected != Some(body.len()) {
        return Err("length does not match the recorded dimension".into());
    }
    let tag = String::from_utf8(body[20..start].to_vec()).map_err(|_| "tag is not UTF-8".to_string())?;
    let mut floats = body[start..].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let energies: Vec<f64> = floats.by_ref().take(n).collect();
    let vectors: Vec<f64> = floats.collect();
    EigenSystem::from_parts(n, energies, vectors, tag).map_err(|e| e.to_string())
}
