//! Bit-packed raw sample archives.
//!
//! One binary file per (instance, setting): each record is a little-endian
//! `u32` gauge index followed by `ceil(n / 8)` bytes of spins, bit `i` set
//! when spin `i` is `-1`. A JSON manifest describes every file.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::SpinState;
use crate::sampler::SampleSet;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub file: String,
    pub instance_id: String,
    /// Spins per record.
    pub n: usize,
    pub reads: usize,
    pub gauges: usize,
    pub t_f: f64,
    pub seed: u64,
    /// Free-form setting tags matching the metrics rows.
    pub tags: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub entries: Vec<ArchiveEntry>,
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST))?)?)
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(MANIFEST), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn row_bytes(n: usize) -> usize {
    n.div_ceil(8)
}

pub fn pack_state(s: &SpinState, out: &mut Vec<u8>) {
    let start = out.len();
    out.resize(start + row_bytes(s.len()), 0);
    for (i, &spin) in s.as_slice().iter().enumerate() {
        if spin == -1 {
            out[start + i / 8] |= 1 << (i % 8);
        }
    }
}

pub fn unpack_state(bytes: &[u8], n: usize) -> SpinState {
    let spins = (0..n)
        .map(|i| if bytes[i / 8] >> (i % 8) & 1 == 1 { -1 } else { 1 })
        .collect();
    SpinState::new(spins).expect("decoded spins are +-1")
}

/// Encodes every record of `samples` as `(gauge, packed state)`.
pub fn encode(samples: &SampleSet, n: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * (4 + row_bytes(n)));
    for r in samples.records() {
        out.extend_from_slice(&(r.gauge as u32).to_le_bytes());
        pack_state(&r.state, &mut out);
    }
    out
}

/// Inverse of [`encode`].
pub fn decode(bytes: &[u8], n: usize) -> Result<Vec<(usize, SpinState)>> {
    let width = 4 + row_bytes(n);
    if !bytes.len().is_multiple_of(width) {
        return Err(Error::Validation(format!(
            "archive length {} is not a multiple of the {width}-byte record size",
            bytes.len()
        )));
    }
    Ok(bytes
        .chunks_exact(width)
        .map(|rec| {
            let gauge = u32::from_le_bytes(rec[..4].try_into().unwrap()) as usize;
            (gauge, unpack_state(&rec[4..], n))
        })
        .collect())
}

pub fn read_entry(dir: &Path, entry: &ArchiveEntry) -> Result<Vec<(usize, SpinState)>> {
    let records = decode(&fs::read(dir.join(&entry.file))?, entry.n)?;
    if records.len() != entry.reads {
        return Err(Error::Validation(format!(
            "{} holds {} records, manifest says {}",
            entry.file,
            records.len(),
            entry.reads
        )));
    }
    Ok(records)
}
