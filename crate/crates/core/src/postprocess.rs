//! Classical clean-up of sampled states: chain majority vote and greedy
//! single-flip descent on the embedded or the logical problem.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{unembed, Embedding, UnembedPolicy};
use crate::error::{Error, Result};
use crate::ising::{Adjacency, Hamiltonian, SpinState};
use crate::metrics::SuccessCriterion;
use crate::rng;
use crate::sampler::SampleSet;

/// Flips single spins while that strictly lowers the energy, visiting spins
/// in a fresh random order each pass, until a full pass changes nothing.
pub fn greedy_descent<R: Rng + ?Sized>(ham: &Hamiltonian, s: &SpinState, rng: &mut R) -> Result<SpinState> {
    if s.len() != ham.n() {
        return Err(Error::Dimension {
            expected: ham.n(),
            got: s.len(),
        });
    }
    let adj = Adjacency::new(ham);
    Ok(descend(ham, &adj, s.clone(), rng))
}

fn descend<R: Rng + ?Sized>(ham: &Hamiltonian, adj: &Adjacency, s: SpinState, rng: &mut R) -> SpinState {
    let mut s = s.into_inner();
    let h = ham.fields();
    let tol = flip_tolerance(ham);
    let mut order: Vec<usize> = (0..s.len()).collect();
    loop {
        order.shuffle(rng);
        let mut improved = false;
        for &i in &order {
            let delta = -2.0 * f64::from(s[i]) * (h[i] + adj.coupling_field(i, &s));
            if delta < -tol {
                s[i] = -s[i];
                improved = true;
            }
        }
        if !improved {
            return SpinState::from_vec_unchecked(s);
        }
    }
}

/// Flips that gain less than this are rounding noise on an exact tie.
fn flip_tolerance(ham: &Hamiltonian) -> f64 {
    1e-9 * ham.max_abs_weight().max(1.0)
}

/// True when no single flip strictly lowers the energy.
pub fn is_local_minimum(ham: &Hamiltonian, s: &SpinState) -> bool {
    let e = ham.energy_of(s.as_slice());
    let tol = flip_tolerance(ham);
    let mut t = s.clone();
    (0..s.len()).all(|i| {
        t.flip(i);
        let lower = ham.energy_of(t.as_slice()) < e - tol;
        t.flip(i);
        !lower
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    MajorityVote,
    DescentEmbedded,
    DescentLogical,
}

impl std::str::FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "majority_vote" => Ok(Self::MajorityVote),
            "descent_embedded" => Ok(Self::DescentEmbedded),
            "descent_logical" => Ok(Self::DescentLogical),
            other => Err(Error::Config(format!("unknown postprocessing stage {other:?}"))),
        }
    }
}

/// What the stages operate on. `hardware` is the Hamiltonian that was
/// sampled; the embedding and logical Hamiltonian are needed to go back to
/// logical variables.
#[derive(Clone, Copy)]
pub struct PostprocessContext<'a> {
    pub hardware: &'a Hamiltonian,
    pub embedding: Option<&'a Embedding>,
    pub logical: Option<&'a Hamiltonian>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedRecord {
    pub read: usize,
    pub gauge: usize,
    pub raw_state: SpinState,
    /// Raw energy on the problem being scored: the logical energy of the
    /// unembedded state when an embedding is present (discarding broken
    /// chains), otherwise the sampled energy.
    pub raw_energy: Option<f64>,
    /// Final state: logical when an embedding is present.
    pub state: Option<SpinState>,
    pub energy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProcessedSet {
    pub stages: Vec<Stage>,
    pub records: Vec<ProcessedRecord>,
}

impl ProcessedSet {
    /// Success fraction of the processed states; rejected samples fail.
    pub fn success_prob(&self, crit: &SuccessCriterion) -> f64 {
        fraction(self.records.iter().map(|r| r.energy), crit)
    }

    /// Success fraction of the raw states under the same scoring.
    pub fn raw_success_prob(&self, crit: &SuccessCriterion) -> f64 {
        fraction(self.records.iter().map(|r| r.raw_energy), crit)
    }
}

fn fraction<I: Iterator<Item = Option<f64>>>(energies: I, crit: &SuccessCriterion) -> f64 {
    let (mut hits, mut total) = (0usize, 0usize);
    for e in energies {
        total += 1;
        hits += usize::from(e.is_some_and(|e| crit.is_success(e)));
    }
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

/// Applies `stages` in order to every record.
///
/// Before a logical stage runs, samples are unembedded; a preceding
/// `MajorityVote` repairs broken chains, otherwise samples with broken
/// chains are dropped.
pub fn postprocess_pipeline(
    samples: &SampleSet,
    ctx: &PostprocessContext<'_>,
    stages: &[Stage],
) -> Result<ProcessedSet> {
    let needs_embedding = stages
        .iter()
        .any(|s| matches!(s, Stage::MajorityVote | Stage::DescentLogical));
    if needs_embedding && (ctx.embedding.is_none() || ctx.logical.is_none()) {
        return Err(Error::Config(
            "majority vote and logical descent need an embedding and a logical Hamiltonian".into(),
        ));
    }
    if let (Some(emb), Some(logical)) = (ctx.embedding, ctx.logical) {
        if emb.num_variables() != logical.n() {
            return Err(Error::Dimension {
                expected: logical.n(),
                got: emb.num_variables(),
            });
        }
    }
    if let Some(first_logical) = stages.iter().position(|s| *s != Stage::DescentEmbedded) {
        if stages[first_logical..].contains(&Stage::DescentEmbedded) {
            return Err(Error::Config("embedded descent must come before logical stages".into()));
        }
    }
    if ctx.embedding.is_some() != ctx.logical.is_some() {
        return Err(Error::Config("embedding and logical Hamiltonian go together".into()));
    }
    let hw_adj = Adjacency::new(ctx.hardware);
    let logical_adj = ctx.logical.map(Adjacency::new);

    let records = samples
        .records()
        .par_iter()
        .map(|rec| {
            let mut rng = rng::stream(ctx.seed, &[rng::TAG_POST, rec.read as u64]);
            let mut vote_rng = rng::stream(ctx.seed, &[rng::TAG_VOTE, rec.read as u64]);
            let raw_energy = match (ctx.embedding, ctx.logical) {
                (Some(emb), Some(logical)) => unembed(&rec.state, emb, UnembedPolicy::Discard, &mut vote_rng)
                    .map(|s| logical.energy_of(s.as_slice())),
                _ => Some(rec.energy),
            };

            let mut hw = rec.state.clone();
            let mut logical_state: Option<Option<SpinState>> = None;
            for stage in stages {
                match stage {
                    Stage::DescentEmbedded => {
                        hw = descend(ctx.hardware, &hw_adj, hw, &mut rng);
                    }
                    Stage::MajorityVote => {
                        if logical_state.is_none() {
                            let emb = ctx.embedding.unwrap();
                            logical_state = Some(unembed(&hw, emb, UnembedPolicy::MajorityVote, &mut vote_rng));
                        }
                    }
                    Stage::DescentLogical => {
                        let emb = ctx.embedding.unwrap();
                        let current = logical_state
                            .take()
                            .unwrap_or_else(|| unembed(&hw, emb, UnembedPolicy::Discard, &mut vote_rng));
                        let logical = ctx.logical.unwrap();
                        let adj = logical_adj.as_ref().unwrap();
                        logical_state = Some(current.map(|s| descend(logical, adj, s, &mut rng)));
                    }
                }
            }

            let (state, energy) = match (ctx.embedding, ctx.logical) {
                (Some(emb), Some(logical)) => {
                    let s = logical_state
                        .unwrap_or_else(|| unembed(&hw, emb, UnembedPolicy::Discard, &mut vote_rng));
                    let e = s.as_ref().map(|s| logical.energy_of(s.as_slice()));
                    (s, e)
                }
                _ => {
                    let e = ctx.hardware.energy_of(hw.as_slice());
                    (Some(hw), Some(e))
                }
            };
            ProcessedRecord {
                read: rec.read,
                gauge: rec.gauge,
                raw_state: rec.state.clone(),
                raw_energy,
                state,
                energy,
            }
        })
        .collect();
    Ok(ProcessedSet {
        stages: stages.to_vec(),
        records,
    })
}
