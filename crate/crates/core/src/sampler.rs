//! The annealer pipeline: program, anneal, read out, repeat.
//!
//! A run divides `k` reads among `p` programming cycles. Each cycle draws a
//! gauge, programs the gauged Hamiltonian (one persistent ICE draw plus any
//! systematic offsets), anneals its share of reads and maps every readout
//! back through the gauge. Accounted time is `p t_p + k (t_f + t_s)`.
//!
//! Annealing itself is delegated to a [`Backend`]; the bundled backend is a
//! single-spin-flip Metropolis simulated annealer whose sweep count grows
//! linearly with the configured anneal time.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{broken_chains, EmbeddedProblem};
use crate::error::{Error, Result};
use crate::ice::IceModel;
use crate::ising::{gauge_state, Adjacency, GaugeVector, Hamiltonian, SpinState};
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnnealerConfig {
    /// Programming time per cycle, seconds.
    pub t_p: f64,
    /// Anneal time per read, seconds.
    pub t_f: f64,
    /// Readout time per read, seconds.
    pub t_s: f64,
    /// Smallest allowed anneal time, seconds.
    pub min_t_f: f64,
    /// Metropolis sweeps corresponding to an anneal of `min_t_f`.
    pub sweeps_per_min_anneal: f64,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub seed: u64,
}

impl Default for AnnealerConfig {
    fn default() -> Self {
        Self {
            t_p: 30e-3,
            t_f: 20e-6,
            t_s: 116e-6,
            min_t_f: 20e-6,
            sweeps_per_min_anneal: 10.0,
            beta_initial: 0.1,
            beta_final: 10.0,
            seed: 0,
        }
    }
}

impl AnnealerConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("t_p", self.t_p), ("t_f", self.t_f), ("t_s", self.t_s), ("min_t_f", self.min_t_f)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.t_f < self.min_t_f * (1.0 - 1e-12) {
            return Err(Error::Config(format!(
                "anneal time {} s is below the {} s floor",
                self.t_f, self.min_t_f
            )));
        }
        if !(self.sweeps_per_min_anneal > 0.0) {
            return Err(Error::Config("sweeps_per_min_anneal must be positive".into()));
        }
        if !(self.beta_initial > 0.0 && self.beta_final > 0.0) {
            return Err(Error::Config("inverse temperatures must be positive".into()));
        }
        Ok(())
    }

    /// Metropolis sweeps per read: linear in `t_f / min_t_f`, at least one.
    pub fn sweeps(&self) -> usize {
        ((self.sweeps_per_min_anneal * self.t_f / self.min_t_f).round() as usize).max(1)
    }

    /// The same configuration with `t_f = multiplier * min_t_f`.
    pub fn with_anneal_multiplier(&self, multiplier: f64) -> Self {
        Self {
            t_f: self.min_t_f * multiplier,
            ..self.clone()
        }
    }
}

/// `p t_p + k (t_f + t_s)`.
pub fn total_time(k: usize, p: usize, config: &AnnealerConfig) -> f64 {
    p as f64 * config.t_p + k as f64 * (config.t_f + config.t_s)
}

/// Geometric inverse-temperature schedule from `beta0` to `beta1`.
pub fn geometric_schedule(beta0: f64, beta1: f64, sweeps: usize) -> Vec<f64> {
    if sweeps <= 1 {
        return vec![beta1];
    }
    let ratio = (beta1 / beta0).ln() / (sweeps - 1) as f64;
    (0..sweeps)
        .map(|t| beta0 * (ratio * t as f64).exp())
        .collect()
}

/// Something that anneals a programmed Hamiltonian.
///
/// Read `r` of programming cycle `cycle` must depend only on
/// `(seed, cycle, r)` so results are independent of scheduling.
pub trait Backend: Sync {
    fn sample(
        &self,
        programmed: &Hamiltonian,
        seed: u64,
        cycle: u64,
        reads: std::ops::Range<u64>,
    ) -> Vec<SpinState>;
}

/// Simulated-annealing stand-in for the analog anneal.
#[derive(Clone, Debug)]
pub struct SaBackend {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
}

impl SaBackend {
    pub fn from_config(config: &AnnealerConfig) -> Self {
        Self {
            sweeps: config.sweeps(),
            beta_initial: config.beta_initial,
            beta_final: config.beta_final,
        }
    }
}

impl Backend for SaBackend {
    fn sample(
        &self,
        programmed: &Hamiltonian,
        seed: u64,
        cycle: u64,
        reads: std::ops::Range<u64>,
    ) -> Vec<SpinState> {
        let adj = Adjacency::new(programmed);
        let schedule = geometric_schedule(self.beta_initial, self.beta_final, self.sweeps);
        let reads: Vec<u64> = reads.collect();
        reads
            .par_iter()
            .map(|&r| {
                let mut rng = rng::stream(seed, &[rng::TAG_READ, cycle, r]);
                anneal_with(programmed.fields(), &adj, &schedule, &mut rng)
            })
            .collect()
    }
}

/// One simulated-annealing read: uniform random start, then one Metropolis
/// sweep per step of a geometric schedule from `beta_initial` to
/// `beta_final`.
pub fn anneal_once<R: Rng + ?Sized>(
    ham: &Hamiltonian,
    sweeps: usize,
    beta_initial: f64,
    beta_final: f64,
    rng: &mut R,
) -> Result<SpinState> {
    if sweeps == 0 {
        return Err(Error::InvalidParameter("at least one sweep is required".into()));
    }
    let adj = Adjacency::new(ham);
    let schedule = geometric_schedule(beta_initial, beta_final, sweeps);
    Ok(anneal_with(ham.fields(), &adj, &schedule, rng))
}

fn anneal_with<R: Rng + ?Sized>(h: &[f64], adj: &Adjacency, schedule: &[f64], rng: &mut R) -> SpinState {
    let n = h.len();
    let mut s: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
    for &beta in schedule {
        for i in 0..n {
            let si = f64::from(s[i]);
            let delta = -2.0 * si * (h[i] + adj.coupling_field(i, &s));
            if delta <= 0.0 || rng.random::<f64>() < (-beta * delta).exp() {
                s[i] = -s[i];
            }
        }
    }
    SpinState::from_vec_unchecked(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleRecord {
    /// Readout mapped back to the submitted frame.
    pub state: SpinState,
    /// Energy under the nominal submitted Hamiltonian.
    pub energy: f64,
    pub gauge: usize,
    pub read: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    records: Vec<SampleRecord>,
    gauges: Vec<GaugeVector>,
    accounted_time: f64,
}

impl SampleSet {
    /// Rebuilds a sample set from stored `(gauge, state)` readouts, e.g. an
    /// archive, recomputing energies under `ham`.
    pub fn from_readouts(
        ham: &Hamiltonian,
        readouts: Vec<(usize, SpinState)>,
        gauges: Vec<GaugeVector>,
        config: &AnnealerConfig,
    ) -> Result<Self> {
        let mut records = Vec::with_capacity(readouts.len());
        for (read, (gauge, state)) in readouts.into_iter().enumerate() {
            if gauge >= gauges.len() {
                return Err(Error::Validation(format!("gauge index {gauge} out of range")));
            }
            let energy = ham.energy(&state)?;
            records.push(SampleRecord { state, energy, gauge, read });
        }
        let accounted_time = total_time(records.len(), gauges.len(), config);
        Ok(Self { records, gauges, accounted_time })
    }

    pub fn records(&self) -> &[SampleRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Total reads `k`.
    pub fn reads(&self) -> usize {
        self.records.len()
    }

    /// Programming cycles `p`.
    pub fn num_gauges(&self) -> usize {
        self.gauges.len()
    }

    pub fn gauges(&self) -> &[GaugeVector] {
        &self.gauges
    }

    pub fn accounted_time(&self) -> f64 {
        self.accounted_time
    }

    pub fn energies(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.energy)
    }

    pub fn min_energy(&self) -> Option<f64> {
        self.energies().min_by(f64::total_cmp)
    }
}

/// The gauge of programming cycle `cycle` out of `p`: the identity for a
/// single cycle, otherwise uniformly random.
pub fn cycle_gauge(seed: u64, n: usize, p: usize, cycle: usize) -> GaugeVector {
    if p == 1 {
        GaugeVector::identity(n)
    } else {
        GaugeVector::random(n, &mut rng::stream(seed, &[rng::TAG_GAUGE, cycle as u64]))
    }
}

/// Pipeline driver around a [`Backend`].
pub struct Sampler<'a, B: Backend = SaBackend> {
    backend: B,
    config: &'a AnnealerConfig,
    ice: &'a IceModel,
    offsets: Vec<(usize, f64)>,
}

impl<'a> Sampler<'a, SaBackend> {
    pub fn new(config: &'a AnnealerConfig, ice: &'a IceModel) -> Self {
        Self {
            backend: SaBackend::from_config(config),
            config,
            ice,
            offsets: Vec::new(),
        }
    }
}

impl<'a, B: Backend> Sampler<'a, B> {
    pub fn with_backend<C: Backend>(self, backend: C) -> Sampler<'a, C> {
        Sampler {
            backend,
            config: self.config,
            ice: self.ice,
            offsets: self.offsets,
        }
    }

    /// Field offsets programmed in the hardware frame on every cycle, e.g.
    /// compensating biases from [`chain_shim`]. Zero entries are skipped.
    pub fn with_offsets(mut self, offsets: &[f64]) -> Self {
        self.offsets = offsets
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(q, &b)| (q, b))
            .collect();
        self
    }

    pub fn run(&self, ham: &Hamiltonian, k: usize, p: usize) -> Result<SampleSet> {
        self.config.validate()?;
        self.ice.validate()?;
        if k == 0 || p == 0 {
            return Err(Error::InvalidParameter(format!(
                "need at least one read and one gauge (k = {k}, p = {p})"
            )));
        }
        let n = ham.n();
        let seed = self.config.seed;
        let mut records = Vec::with_capacity(k);
        let mut gauges = Vec::with_capacity(p);
        let mut next_read = 0usize;
        for cycle in 0..p {
            let share = k / p + usize::from(cycle < k % p);
            let gauge = cycle_gauge(seed, n, p, cycle);
            let mut programmed = self.ice.program(&ham.apply_gauge(&gauge)?, cycle as u64)?;
            for &(q, b) in &self.offsets {
                programmed.add_field(q, b)?;
            }
            let states = if self.ice.has_transient() {
                (0..share as u64)
                    .into_par_iter()
                    .flat_map_iter(|r| {
                        let h = self.ice.perturb_transient(&programmed, cycle as u64, r);
                        self.backend.sample(&h, seed, cycle as u64, r..r + 1)
                    })
                    .collect()
            } else {
                self.backend.sample(&programmed, seed, cycle as u64, 0..share as u64)
            };
            for s in states {
                let state = gauge_state(&gauge, &s)?;
                let energy = ham.energy_of(state.as_slice());
                records.push(SampleRecord {
                    state,
                    energy,
                    gauge: cycle,
                    read: next_read,
                });
                next_read += 1;
            }
            gauges.push(gauge);
        }
        Ok(SampleSet {
            records,
            gauges,
            accounted_time: total_time(k, p, self.config),
        })
    }
}

/// Runs the pipeline with the simulated-annealing backend.
pub fn run(
    ham: &Hamiltonian,
    k: usize,
    p: usize,
    config: &AnnealerConfig,
    ice: &IceModel,
) -> Result<SampleSet> {
    Sampler::new(config, ice).run(ham, k, p)
}

// ---------------------------------------------------------------------------
// Chain shimming
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ShimParams {
    pub iterations: usize,
    /// Initial change in a chain's total field per unit of measured
    /// polarization; adapted per chain as the loop runs.
    pub step: f64,
    pub reads: usize,
    pub gauges: usize,
}

impl Default for ShimParams {
    fn default() -> Self {
        Self {
            iterations: 5,
            step: 0.1,
            reads: 1000,
            gauges: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShimResult {
    /// Compensating field per hardware qubit.
    pub biases: Vec<f64>,
    /// Chain polarization measured at the start of each iteration.
    pub history: Vec<Vec<Option<f64>>>,
    /// Whether the last measured polarizations were all within three
    /// standard errors of zero.
    pub converged: bool,
}

/// Mean logical spin of every chain over unbroken reads of the chain
/// Hamiltonian, with `biases` programmed as hardware offsets. `None` for a
/// chain that never came back unbroken.
pub fn measure_chain_polarization(
    problem: &EmbeddedProblem,
    biases: &[f64],
    config: &AnnealerConfig,
    ice: &IceModel,
    reads: usize,
    gauges: usize,
) -> Result<Vec<Option<f64>>> {
    Ok(chain_statistics(problem, biases, config, ice, reads, gauges)?.polarization)
}

struct ChainStats {
    polarization: Vec<Option<f64>>,
    /// Unbroken reads per chain.
    counts: Vec<usize>,
    /// Mean hardware-frame spin per qubit over its chain's unbroken reads.
    hardware: Vec<Option<f64>>,
}

fn chain_statistics(
    problem: &EmbeddedProblem,
    biases: &[f64],
    config: &AnnealerConfig,
    ice: &IceModel,
    reads: usize,
    gauges: usize,
) -> Result<ChainStats> {
    let emb = problem.embedding();
    let chain_ham = problem.chain_hamiltonian();
    let samples = Sampler::new(config, ice)
        .with_offsets(biases)
        .run(&chain_ham, reads, gauges)?;
    let chains = emb.chains();
    let mut sum = vec![0i64; chains.len()];
    let mut count = vec![0usize; chains.len()];
    let mut hw_sum = vec![0i64; chain_ham.n()];
    for rec in samples.records() {
        let broken = broken_chains(&rec.state, emb);
        let gauge = &samples.gauges()[rec.gauge];
        let mut b = broken.iter().peekable();
        for (v, chain) in chains.iter().enumerate() {
            if b.peek() == Some(&&v) {
                b.next();
                continue;
            }
            sum[v] += i64::from(rec.state[chain[0]]);
            count[v] += 1;
            for &q in chain {
                hw_sum[q] += i64::from(rec.state[q] * gauge.as_slice()[q]);
            }
        }
    }
    let polarization = sum
        .iter()
        .zip(&count)
        .map(|(&s, &c)| (c > 0).then(|| s as f64 / c as f64))
        .collect();
    let mut hw = vec![None; chain_ham.n()];
    for (v, chain) in chains.iter().enumerate() {
        if count[v] > 0 {
            for &q in chain {
                hw[q] = Some(hw_sum[q] as f64 / count[v] as f64);
            }
        }
    }
    Ok(ChainStats {
        polarization,
        counts: count,
        hardware: hw,
    })
}

/// Iteratively programs the chain-only Hamiltonian `(0, J_chain)`, measures
/// each chain's polarization over unbroken reads and nudges the fields on
/// that chain's qubits against it. A chain that reads `+1` too often gets a
/// positive field, which raises the energy of `+1`.
///
/// Chains differ a lot in how strongly they respond to a field (a lone qubit
/// follows it far more readily than a long chain), so every chain keeps its
/// own step: `step` to begin with, doubled while the polarization shrinks by
/// less than half, halved when it changes sign. Chains within one standard
/// error of zero are left alone and their history is dropped.
pub fn chain_shim(
    problem: &EmbeddedProblem,
    config: &AnnealerConfig,
    ice: &IceModel,
    params: &ShimParams,
) -> Result<ShimResult> {
    if params.iterations == 0 {
        return Err(Error::InvalidParameter("shimming needs at least one iteration".into()));
    }
    if !(params.step > 0.0 && params.step.is_finite()) {
        return Err(Error::InvalidParameter(format!("shim step must be positive, got {}", params.step)));
    }
    let chains = problem.embedding().chains();
    let mut biases = vec![0.0; problem.hardware().n()];
    let mut steps = vec![params.step; chains.len()];
    let mut last: Vec<Option<f64>> = vec![None; chains.len()];
    let mut history = Vec::with_capacity(params.iterations);
    let mut converged = false;
    for it in 0..params.iterations {
        let iter_config = AnnealerConfig {
            seed: rng::derive_seed(config.seed, &[rng::TAG_SHIM, it as u64]),
            ..config.clone()
        };
        let stats = chain_statistics(problem, &biases, &iter_config, ice, params.reads, params.gauges)?;
        converged = true;
        for (v, chain) in chains.iter().enumerate() {
            if stats.counts[v] == 0 {
                continue;
            }
            // Hardware-frame mean; equals the polarization without gauges.
            let m = chain.iter().filter_map(|&q| stats.hardware[q]).sum::<f64>() / chain.len() as f64;
            let noise = 1.0 / (stats.counts[v] as f64).sqrt();
            converged &= m.abs() <= 3.0 * noise;
            if m.abs() <= noise {
                last[v] = None;
                continue;
            }
            if let Some(prev) = last[v] {
                if prev * m < 0.0 {
                    steps[v] *= 0.5;
                } else if m.abs() > 0.5 * prev.abs() {
                    steps[v] *= 2.0;
                }
            }
            last[v] = Some(m);
            let share = steps[v] / chain.len() as f64;
            for &q in chain {
                if let Some(mq) = stats.hardware[q] {
                    biases[q] += share * mq;
                }
            }
        }
        history.push(stats.polarization);
    }
    Ok(ShimResult {
        biases,
        history,
        converged,
    })
}
