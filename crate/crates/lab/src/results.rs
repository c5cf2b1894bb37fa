//! Result files, the study index and parameter checkpoints.
//!
//! Layout of an output directory:
//!
//! ```text
//! <out>/runs/<hash16>_<seed>.json      one run, written once
//! <out>/checkpoints/<hash16>_<seed>.ckpt
//! <out>/index.json                      rebuilt after every run
//! <out>/timings.csv                     wall-clock seconds per run
//! ```

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use rta_core::harness::{ExperimentSpec, RunResult};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const RESULT_FORMAT: u32 = 1;

/// SHA-256 of the canonical JSON of `spec` with its seed list cleared, so
/// every seed of one spec shares a hash.
pub fn config_hash(spec: &ExperimentSpec) -> String {
    let mut s = spec.clone();
    s.seeds.clear();
    let json = serde_json::to_vec(&s).expect("spec serialises");
    hex::encode(Sha256::digest(&json))
}

pub fn run_stem(hash: &str, seed: u64) -> String {
    format!("{}_{seed}", &hash[..16])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub format: u32,
    pub config_hash: String,
    pub seed: u64,
    /// The producing spec, seed list cleared.
    pub spec: ExperimentSpec,
    pub result: RunResult,
}

impl ResultFile {
    pub fn new(spec: &ExperimentSpec, result: RunResult) -> Self {
        let mut s = spec.clone();
        s.seeds.clear();
        Self {
            format: RESULT_FORMAT,
            config_hash: config_hash(spec),
            seed: result.seed,
            spec: s,
            result,
        }
    }
}

pub fn runs_dir(out: &Path) -> PathBuf {
    out.join("runs")
}

pub fn result_path(out: &Path, hash: &str, seed: u64) -> PathBuf {
    runs_dir(out).join(format!("{}.json", run_stem(hash, seed)))
}

pub fn checkpoint_path(out: &Path, hash: &str, seed: u64) -> PathBuf {
    out.join("checkpoints").join(format!("{}.ckpt", run_stem(hash, seed)))
}

/// Writes `bytes` to a sibling temporary file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Result files never change once written; an existing file is an error.
pub fn write_result(out: &Path, file: &ResultFile) -> io::Result<PathBuf> {
    let path = result_path(out, &file.config_hash, file.seed);
    if path.exists() {
        return Err(io::Error::new(
            io::ErrorKind::AlreadyExists,
            format!("{} already exists", path.display()),
        ));
    }
    let mut bytes = serde_json::to_vec_pretty(file).map_err(io::Error::other)?;
    bytes.push(b'\n');
    write_atomic(&path, &bytes)?;
    Ok(path)
}

pub fn read_result(path: &Path) -> io::Result<ResultFile> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, format!("{}: {e}", path.display())))
}

/// Every result file under `out`, ordered by file name.
pub fn load_results(out: &Path) -> io::Result<Vec<ResultFile>> {
    let dir = runs_dir(out);
    if !dir.is_dir() {
        return Ok(Vec::new());
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| read_result(p)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexEntry {
    pub file: String,
    pub config_hash: String,
    pub seed: u64,
    pub env: String,
    pub filter: String,
    pub config: String,
    pub algorithm: String,
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Index {
    pub format: u32,
    pub runs: Vec<IndexEntry>,
}

/// Rebuilds `index.json` from the result files on disk.
pub fn write_index(out: &Path) -> io::Result<Index> {
    let runs = load_results(out)?
        .into_iter()
        .map(|r| IndexEntry {
            file: format!("runs/{}.json", run_stem(&r.config_hash, r.seed)),
            env: r.result.env.to_string(),
            filter: r.result.filter.to_string(),
            config: r.result.config.to_string(),
            algorithm: r.result.algorithm.to_string(),
            failed: r.result.failed(),
            config_hash: r.config_hash,
            seed: r.seed,
        })
        .collect();
    let index = Index {
        format: RESULT_FORMAT,
        runs,
    };
    let mut bytes = serde_json::to_vec_pretty(&index).map_err(io::Error::other)?;
    bytes.push(b'\n');
    write_atomic(&out.join("index.json"), &bytes)?;
    Ok(index)
}

pub fn append_timing(out: &Path, hash: &str, seed: u64, seconds: f64) -> io::Result<()> {
    let path = out.join("timings.csv");
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new().create(true).append(true).open(&path)?;
    if fresh {
        writeln!(f, "config_hash,seed,seconds")?;
    }
    writeln!(f, "{hash},{seed},{seconds:.3}")
}

const MAGIC: &[u8; 8] = b"RTACKPT1";

/// Binary checkpoint: magic, tensor count (u32 LE), then per tensor the
/// name length (u32 LE), UTF-8 name, value count (u64 LE) and f64 LE values.
pub fn encode_checkpoint(tensors: &[(&str, &[f64])]) -> Vec<u8> {
    let mut b = Vec::from(&MAGIC[..]);
    b.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, data) in tensors {
        b.extend_from_slice(&(name.len() as u32).to_le_bytes());
        b.extend_from_slice(name.as_bytes());
        b.extend_from_slice(&(data.len() as u64).to_le_bytes());
        for v in *data {
            b.extend_from_slice(&v.to_le_bytes());
        }
    }
    b
}

pub fn decode_checkpoint(mut r: impl Read) -> io::Result<Vec<(String, Vec<f64>)>> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint"));
    }
    let mut u32b = [0u8; 4];
    let mut u64b = [0u8; 8];
    r.read_exact(&mut u32b)?;
    let count = u32::from_le_bytes(u32b);
    let mut out = Vec::new();
    for _ in 0..count {
        r.read_exact(&mut u32b)?;
        let mut name = vec![0u8; u32::from_le_bytes(u32b) as usize];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| bad("tensor name is not UTF-8"))?;
        r.read_exact(&mut u64b)?;
        let n = u64::from_le_bytes(u64b) as usize;
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            r.read_exact(&mut u64b)?;
            data.push(f64::from_le_bytes(u64b));
        }
        out.push((name, data));
    }
    Ok(out)
}
