//! Benchmark instance classes: random couplings (RAN), planted frustrated
//! loops (FL), max-cut on cubic graphs (3MC) and not-all-equal 3-SAT (NAE).

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::chimera::ChimeraGraph;
use crate::error::{Error, Result};
use crate::exact::BruteForce;
use crate::ising::{Hamiltonian, SpinState};
use crate::rng::{self, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum InstanceClass {
    Ran,
    Fl,
    #[serde(rename = "3MC")]
    ThreeMc,
    Nae,
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Ran => "RAN",
            Self::Fl => "FL",
            Self::ThreeMc => "3MC",
            Self::Nae => "NAE",
        })
    }
}

impl FromStr for InstanceClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RAN" => Ok(Self::Ran),
            "FL" => Ok(Self::Fl),
            "3MC" => Ok(Self::ThreeMc),
            "NAE" => Ok(Self::Nae),
            other => Err(Error::InvalidParameter(format!("unknown instance class {other:?}"))),
        }
    }
}

/// What was generated and how; serialized next to the problem file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    pub class: InstanceClass,
    /// Precision limit `R` (RAN, FL).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    /// Cycle-to-qubit (FL) or clause-to-variable (NAE) ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ratio: Option<f64>,
    /// Qubits for hardware-native classes, variables for logical ones.
    pub size: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted_state: Option<SpinState>,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        let need_r = matches!(self.class, InstanceClass::Ran | InstanceClass::Fl);
        if need_r && !self.precision.is_some_and(|r| r >= 1) {
            return Err(Error::Validation(format!("{} needs a precision limit R >= 1", self.class)));
        }
        let need_ratio = matches!(self.class, InstanceClass::Fl | InstanceClass::Nae);
        if need_ratio && !self.ratio.is_some_and(|r| r > 0.0) {
            return Err(Error::Validation(format!("{} needs a positive ratio r", self.class)));
        }
        if self.planted_state.is_some() != (self.class == InstanceClass::Fl) {
            return Err(Error::Validation("only FL instances carry a planted state".into()));
        }
        Ok(())
    }
}

/// Sidecar metadata record.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMeta {
    #[serde(flatten)]
    pub spec: InstanceSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cycles: Vec<Vec<usize>>,
    /// Logical graph edges (3MC).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<(usize, usize)>,
    /// Clauses as signed 1-based literals (NAE).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub clauses: Vec<[i64; 3]>,
}

impl InstanceMeta {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let meta: Self = serde_json::from_str(text)?;
        meta.spec.validate()?;
        Ok(meta)
    }
}

fn check_precision(r: u32) -> Result<()> {
    if r == 0 {
        return Err(Error::InvalidParameter("precision limit R must be at least 1".into()));
    }
    Ok(())
}

fn count_for_ratio(ratio: f64, n: usize) -> usize {
    (ratio * n as f64).round() as usize
}

/// RAN-R: every active coupler gets a uniform nonzero integer in `[-R, R]`,
/// then everything is divided by `R`.
pub fn gen_ran(graph: &ChimeraGraph, r: u32, seed: u64) -> Result<Hamiltonian> {
    check_precision(r)?;
    let mut rng = rng::stream(seed, &[rng::TAG_GEN, 0]);
    let mut h = Hamiltonian::new(graph.num_sites());
    let r = i64::from(r);
    for (u, v) in graph.couplers() {
        let mut x = rng.random_range(1..=r);
        if rng.random::<bool>() {
            x = -x;
        }
        h.add_coupling(u, v, x as f64)?;
    }
    h.divided(r as f64)
}

#[derive(Clone, Debug)]
pub struct FlInstance {
    pub hamiltonian: Hamiltonian,
    /// All-up; a ground state by construction.
    pub planted: SpinState,
    pub cycles: Vec<Vec<usize>>,
    /// Energy of the planted state before unit scaling.
    pub planted_energy: f64,
}

/// Frustrated-loop instance on the working graph.
///
/// Each of `round(r n)` cycles comes from a non-backtracking random walk
/// that stops at the first vertex it revisits; the closed loop is kept
/// unless it lies inside one unit cell. One random edge of the loop gets
/// `+1`, the rest `-1`. Edges whose accumulated weight reaches `R` in
/// magnitude are barred from later loops.
pub fn gen_fl(graph: &ChimeraGraph, r: u32, ratio: f64, seed: u64) -> Result<FlInstance> {
    check_precision(r)?;
    if !(ratio > 0.0 && ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio must be positive, got {ratio}")));
    }
    let active: Vec<usize> = graph.qubits().collect();
    let n = active.len();
    let wanted = count_for_ratio(ratio, n);
    if wanted > 0 && graph.num_couplers() == 0 {
        return Err(Error::Generation("working graph has no couplers".into()));
    }
    let budget = 100 * n.max(1);
    let mut rng = rng::stream(seed, &[rng::TAG_GEN, 1]);
    let mut weights: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    let limit = i64::from(r);
    let mut cycles = Vec::with_capacity(wanted);

    while cycles.len() < wanted {
        let frozen = |u: usize, v: usize| {
            weights.get(&(u.min(v), u.max(v))).is_some_and(|w| w.abs() >= limit)
        };
        let cycle = walk_cycle(graph, &active, budget, &frozen, &mut rng).ok_or_else(|| {
            Error::Generation(format!(
                "random walk budget of {budget} steps exhausted after {} of {wanted} loops",
                cycles.len()
            ))
        })?;
        let flipped = rng.random_range(0..cycle.len());
        for i in 0..cycle.len() {
            let (u, v) = (cycle[i], cycle[(i + 1) % cycle.len()]);
            let w = if i == flipped { 1 } else { -1 };
            *weights.entry((u.min(v), u.max(v))).or_insert(0) += w;
        }
        cycles.push(cycle);
    }

    let mut h = Hamiltonian::new(graph.num_sites());
    for (&(u, v), &w) in &weights {
        if w != 0 {
            h.add_coupling(u, v, w as f64)?;
        }
    }
    let planted = SpinState::all_up(graph.num_sites());
    let planted_energy = h.energy(&planted)?;
    let hamiltonian = if h.num_couplings() == 0 { h } else { h.scale_to_unit()? };
    Ok(FlInstance {
        hamiltonian,
        planted,
        cycles,
        planted_energy,
    })
}

/// One loop, or `None` once `budget` walk steps are spent. Walks that get
/// stuck or close inside a unit cell restart from a fresh vertex.
fn walk_cycle(
    graph: &ChimeraGraph,
    active: &[usize],
    budget: usize,
    frozen: &dyn Fn(usize, usize) -> bool,
    rng: &mut StreamRng,
) -> Option<Vec<usize>> {
    let mut steps = 0;
    let mut position = vec![usize::MAX; graph.num_sites()];
    while steps < budget {
        let mut path = vec![*active.choose(rng)?];
        position[path[0]] = 0;
        let closed = loop {
            if steps >= budget {
                break None;
            }
            steps += 1;
            let here = *path.last().unwrap();
            let back = (path.len() >= 2).then(|| path[path.len() - 2]);
            let options: Vec<usize> = graph
                .neighbors(here)
                .iter()
                .copied()
                .filter(|&v| Some(v) != back && !frozen(here, v))
                .collect();
            let Some(&next) = options.choose(rng) else {
                break None;
            };
            if position[next] != usize::MAX {
                break Some(path[position[next]..].to_vec());
            }
            position[next] = path.len();
            path.push(next);
        };
        for &q in &path {
            position[q] = usize::MAX;
        }
        if let Some(cycle) = closed {
            let cell = graph.cell(cycle[0]);
            if cycle.iter().any(|&q| graph.cell(q) != cell) {
                return Some(cycle);
            }
        }
    }
    None
}

/// `-(len - 2)` per loop: the all-up energy of the unscaled FL sum.
pub fn fl_planted_energy(cycles: &[Vec<usize>]) -> f64 {
    cycles.iter().map(|c| -(c.len() as f64 - 2.0)).sum()
}

/// Uniform random connected cubic graph on `n` vertices (configuration
/// model with rejection) and its max-cut Hamiltonian, `J = 1` per edge.
pub fn gen_3mc(n: usize, seed: u64) -> Result<(Hamiltonian, Vec<(usize, usize)>)> {
    if n < 4 || n % 2 == 1 {
        return Err(Error::InvalidParameter(format!(
            "cubic graphs need an even vertex count of at least 4, got {n}"
        )));
    }
    let mut attempt = 0u64;
    let edges = loop {
        let mut rng = rng::stream(seed, &[rng::TAG_GEN, 2, attempt]);
        attempt += 1;
        let mut stubs: Vec<usize> = (0..3 * n).map(|i| i / 3).collect();
        stubs.shuffle(&mut rng);
        let mut edges = BTreeSet::new();
        let simple = stubs.chunks(2).all(|p| {
            let (u, v) = (p[0].min(p[1]), p[0].max(p[1]));
            u != v && edges.insert((u, v))
        });
        if simple && connected(n, &edges) {
            break edges.into_iter().collect::<Vec<_>>();
        }
    };
    let mut h = Hamiltonian::new(n);
    for &(u, v) in &edges {
        h.add_coupling(u, v, 1.0)?;
    }
    Ok((h, edges))
}

fn connected(n: usize, edges: &BTreeSet<(usize, usize)>) -> bool {
    let mut adj = vec![Vec::new(); n];
    for &(u, v) in edges {
        adj[u].push(v);
        adj[v].push(u);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    count == n
}

#[derive(Clone, Debug)]
pub struct NaeParams {
    pub ratio: f64,
    pub unique_filter: bool,
    /// Largest instance the uniqueness filter will brute-force.
    pub brute_force_cap: usize,
    /// Regeneration attempts before giving up.
    pub max_attempts: usize,
}

impl Default for NaeParams {
    fn default() -> Self {
        Self {
            ratio: 2.1,
            unique_filter: false,
            brute_force_cap: 24,
            max_attempts: 10_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NaeInstance {
    pub hamiltonian: Hamiltonian,
    /// Signed 1-based literals; `-3` is the negation of variable 2.
    pub clauses: Vec<[i64; 3]>,
    /// Regeneration attempts spent by the uniqueness filter.
    pub attempts: usize,
}

/// Energy of one NAE clause `(x, y, z)` with signs `q`: `sum q_a q_b s_a s_b`
/// over the three pairs.
pub fn nae_clause_hamiltonian(n: usize, vars: [usize; 3], signs: [i8; 3]) -> Result<Hamiltonian> {
    let mut h = Hamiltonian::new(n);
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        h.add_coupling(vars[a], vars[b], f64::from(signs[a] * signs[b]))?;
    }
    Ok(h)
}

/// Random NAE3SAT with `round(r n)` clauses. With `unique_filter`, instances
/// with more than one ground state up to global flip are regenerated.
pub fn gen_nae(n: usize, params: &NaeParams, seed: u64) -> Result<NaeInstance> {
    if n < 4 {
        return Err(Error::InvalidParameter(format!("NAE needs at least 4 variables, got {n}")));
    }
    if !(params.ratio > 0.0 && params.ratio.is_finite()) {
        return Err(Error::InvalidParameter(format!("ratio must be positive, got {}", params.ratio)));
    }
    if params.unique_filter && n > params.brute_force_cap {
        return Err(Error::Config(format!(
            "uniqueness filter needs exhaustive search; {n} variables exceeds the cap of {}",
            params.brute_force_cap
        )));
    }
    let m = count_for_ratio(params.ratio, n);
    let solver = BruteForce::default().with_limit(params.brute_force_cap).with_cap(2);
    for attempt in 0..params.max_attempts.max(1) {
        let mut rng = rng::stream(seed, &[rng::TAG_GEN, 3, attempt as u64]);
        let mut weights: BTreeMap<(usize, usize), i64> = BTreeMap::new();
        let mut clauses = Vec::with_capacity(m);
        for _ in 0..m {
            let vars = rand::seq::index::sample(&mut rng, n, 3).into_vec();
            let signs: Vec<i64> = (0..3).map(|_| if rng.random::<bool>() { -1 } else { 1 }).collect();
            for (a, b) in [(0, 1), (0, 2), (1, 2)] {
                let (u, v) = (vars[a].min(vars[b]), vars[a].max(vars[b]));
                *weights.entry((u, v)).or_insert(0) += signs[a] * signs[b];
            }
            clauses.push([0, 1, 2].map(|i| signs[i] * (vars[i] as i64 + 1)));
        }
        let mut h = Hamiltonian::new(n);
        for (&(u, v), &w) in &weights {
            if w != 0 {
                h.add_coupling(u, v, w as f64)?;
            }
        }
        if params.unique_filter && solver.solve(&h)?.degeneracy != 2 {
            continue;
        }
        return Ok(NaeInstance {
            hamiltonian: h,
            clauses,
            attempts: attempt + 1,
        });
    }
    Err(Error::Generation(format!(
        "no instance with a unique solution after {} attempts",
        params.max_attempts
    )))
}
