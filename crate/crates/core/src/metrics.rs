//! Success probability, ST99 and percentile summaries.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sampler::{AnnealerConfig, SampleSet};

/// Relative slack when comparing energies against a reference.
const ENERGY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuccessMode {
    ExactGround,
    WithinBand,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuccessCriterion {
    pub mode: SuccessMode,
    pub reference_energy: f64,
    pub band: f64,
}

impl SuccessCriterion {
    pub fn exact(ground: f64) -> Self {
        Self {
            mode: SuccessMode::ExactGround,
            reference_energy: ground,
            band: 0.0,
        }
    }

    pub fn within_band(reference: f64, band: f64) -> Result<Self> {
        if !(band > 0.0 && band.is_finite()) {
            return Err(Error::InvalidParameter(format!("band must be positive, got {band}")));
        }
        Ok(Self {
            mode: SuccessMode::WithinBand,
            reference_energy: reference,
            band,
        })
    }

    pub fn is_success(&self, energy: f64) -> bool {
        let tol = ENERGY_TOL * self.reference_energy.abs().max(1.0);
        energy <= self.reference_energy + self.band + tol
    }

    pub fn label(&self) -> &'static str {
        match self.mode {
            SuccessMode::ExactGround => "exact_ground",
            SuccessMode::WithinBand => "within_band",
        }
    }
}

/// Fraction of `energies` that count as successes.
pub fn success_fraction<I: IntoIterator<Item = f64>>(energies: I, crit: &SuccessCriterion) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for e in energies {
        total += 1;
        hits += usize::from(crit.is_success(e));
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

pub fn success_prob(samples: &SampleSet, crit: &SuccessCriterion) -> f64 {
    success_fraction(samples.energies(), crit)
}

/// Reads needed to see at least one success with probability 0.99.
pub fn st99(pi: f64) -> f64 {
    if pi <= 0.0 {
        f64::INFINITY
    } else if pi >= 1.0 {
        1.0
    } else {
        (0.01f64.ln() / (1.0 - pi).ln()).max(1.0)
    }
}

/// Seconds to reach 99% confidence: whole reads plus one programming cycle
/// per `k_per_gauge` reads.
pub fn st99_time(pi: f64, k_per_gauge: usize, config: &AnnealerConfig) -> f64 {
    let k99 = st99(pi);
    if k99.is_infinite() {
        return f64::INFINITY;
    }
    let reads = k99.ceil();
    let programmings = (k99 / k_per_gauge.max(1) as f64).ceil();
    reads * (config.t_f + config.t_s) + programmings * config.t_p
}

pub const REPORT_LEVELS: [u32; 5] = [5, 25, 50, 75, 95];

/// Nearest-rank percentiles; infinities sort above every finite value.
pub fn percentiles(values: &[f64], levels: &[u32]) -> Result<BTreeMap<u32, f64>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter("percentiles of an empty list".into()));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("percentiles of NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut out = BTreeMap::new();
    for &p in levels {
        if p == 0 || p > 100 {
            return Err(Error::InvalidParameter(format!("percentile level {p} outside 1..=100")));
        }
        let rank = (f64::from(p) / 100.0 * n as f64).ceil() as usize;
        out.insert(p, sorted[rank.clamp(1, n) - 1]);
    }
    Ok(out)
}

/// One line of a metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub instance_id: String,
    pub class: String,
    /// Logical size.
    pub n: usize,
    /// Active qubits.
    #[serde(rename = "N")]
    pub qubits: usize,
    /// Active couplers.
    #[serde(rename = "M")]
    pub couplers: usize,
    pub criterion: String,
    #[serde(rename = "pi")]
    pub success_prob: f64,
    pub k99: f64,
    pub st99_time_s: f64,
    /// Free-form tags, e.g. the varied parameter.
    pub tags: String,
}

pub fn write_csv<W: Write>(rows: &[MetricRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(input: R) -> Result<Vec<MetricRow>> {
    let mut r = csv::Reader::from_reader(input);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}
