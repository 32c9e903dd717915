//! Minor-embedding of logical Ising problems into a Chimera working graph.
//!
//! Each logical variable maps to a chain: a connected set of hardware
//! qubits, disjoint from every other chain. Chains are held together by
//! ferromagnetic couplers of strength `-kappa` along a spanning tree.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, VecDeque};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rayon::prelude::*;

use crate::chimera::ChimeraGraph;
use crate::error::{Error, Result};
use crate::ice::IceModel;
use crate::ising::{Hamiltonian, SpinState};
use crate::rng;
use crate::sampler::{self, AnnealerConfig};

#[derive(Clone, Debug)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
    target: Arc<ChimeraGraph>,
}

impl PartialEq for Embedding {
    fn eq(&self, other: &Self) -> bool {
        self.chains == other.chains && *self.target == *other.target
    }
}

impl Embedding {
    /// Wraps chains (logical variable `i` -> `chains[i]`). Chains are sorted;
    /// every qubit must be active in `target`. Disjointness, connectivity
    /// and edge coverage are checked by [`Embedding::validate`].
    pub fn new(mut chains: Vec<Vec<usize>>, target: Arc<ChimeraGraph>) -> Result<Self> {
        for (v, chain) in chains.iter_mut().enumerate() {
            if chain.is_empty() {
                return Err(Error::Validation(format!("chain {v} is empty")));
            }
            chain.sort_unstable();
            chain.dedup();
            if let Some(&q) = chain.iter().find(|&&q| !target.is_active(q)) {
                return Err(Error::Validation(format!(
                    "chain {v} uses qubit {q}, which is not active"
                )));
            }
        }
        Ok(Self { chains, target })
    }

    /// Every logical variable on its own qubit.
    pub fn identity(n: usize, target: Arc<ChimeraGraph>) -> Result<Self> {
        Self::new((0..n).map(|q| vec![q]).collect(), target)
    }

    pub fn num_variables(&self) -> usize {
        self.chains.len()
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, v: usize) -> &[usize] {
        &self.chains[v]
    }

    pub fn target(&self) -> &Arc<ChimeraGraph> {
        &self.target
    }

    pub fn num_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn all_singletons(&self) -> bool {
        self.chains.iter().all(|c| c.len() == 1)
    }

    /// Qubits used by any chain, ascending.
    pub fn used_qubits(&self) -> Vec<usize> {
        let mut q: Vec<usize> = self.chains.iter().flatten().copied().collect();
        q.sort_unstable();
        q
    }

    /// `owner[q] = Some(v)` when qubit `q` belongs to chain `v`.
    pub fn owners(&self) -> Vec<Option<usize>> {
        let mut owner = vec![None; self.target.num_sites()];
        for (v, chain) in self.chains.iter().enumerate() {
            for &q in chain {
                owner[q] = Some(v);
            }
        }
        owner
    }

    /// Checks disjointness, chain connectivity and that every logical edge
    /// is realized by some coupler between the two chains.
    pub fn validate(&self, edges: &[(usize, usize)]) -> Result<()> {
        let mut owner = vec![None; self.target.num_sites()];
        for (v, chain) in self.chains.iter().enumerate() {
            for &q in chain {
                if let Some(u) = owner[q] {
                    return Err(Error::Validation(format!(
                        "qubit {q} shared by chains {u} and {v}"
                    )));
                }
                owner[q] = Some(v);
            }
        }
        for (v, chain) in self.chains.iter().enumerate() {
            if spanning_tree(chain, &self.target).is_none() {
                return Err(Error::Validation(format!("chain {v} is not connected")));
            }
        }
        for &(a, b) in edges {
            if a >= self.chains.len() || b >= self.chains.len() {
                return Err(Error::Validation(format!(
                    "logical edge ({a}, {b}) has no chain"
                )));
            }
            if a != b && inter_chain_coupler(&self.chains[a], &self.chains[b], &self.target).is_none()
            {
                return Err(Error::Validation(format!(
                    "no coupler joins chains {a} and {b}"
                )));
            }
        }
        Ok(())
    }

    /// One line per logical variable: `var: q1 q2 ...`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, chain) in self.chains.iter().enumerate() {
            let _ = write!(out, "{v}:");
            for q in chain {
                let _ = write!(out, " {q}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str, target: Arc<ChimeraGraph>) -> Result<Self> {
        let mut chains: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (var, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(line_no, "expected `var: q1 q2 ...`"))?;
            let var: usize = var
                .trim()
                .parse()
                .map_err(|e| Error::parse(line_no, format!("bad variable: {e}")))?;
            let qubits = rest
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|e| Error::parse(line_no, format!("bad qubit `{t}`: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if chains.insert(var, qubits).is_some() {
                return Err(Error::parse(line_no, format!("variable {var} listed twice")));
            }
        }
        let n = chains.len();
        if chains.keys().copied().ne(0..n) {
            return Err(Error::Validation("variables must be numbered 0..n".into()));
        }
        Self::new(chains.into_values().collect(), target)
    }
}

/// Edges of a BFS spanning tree of `chain` inside `graph`; `None` when the
/// chain is disconnected.
fn spanning_tree(chain: &[usize], graph: &ChimeraGraph) -> Option<Vec<(usize, usize)>> {
    let mut seen = vec![false; chain.len()];
    let pos = |q: usize| chain.binary_search(&q).ok();
    let mut edges = Vec::with_capacity(chain.len().saturating_sub(1));
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        let q = chain[i];
        for &nb in graph.neighbors(q) {
            if let Some(j) = pos(nb) {
                if !seen[j] {
                    seen[j] = true;
                    edges.push((q.min(nb), q.max(nb)));
                    queue.push_back(j);
                }
            }
        }
    }
    seen.iter().all(|&s| s).then_some(edges)
}

/// First coupler (in ascending qubit order) joining chains `a` and `b`.
fn inter_chain_coupler(a: &[usize], b: &[usize], graph: &ChimeraGraph) -> Option<(usize, usize)> {
    a.iter().find_map(|&qa| {
        graph
            .neighbors(qa)
            .iter()
            .find(|&&qb| b.binary_search(&qb).is_ok())
            .map(|&qb| (qa, qb))
    })
}

// ---------------------------------------------------------------------------
// Heuristic embedder
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct EmbedParams {
    pub seed: u64,
    pub max_tries: usize,
    /// Rip-up-and-reroute rounds per attempt before giving up.
    pub max_rounds: usize,
    /// Extra rounds with overlap forbidden, run after the first valid
    /// embedding of an attempt, keeping the smallest one seen.
    pub tighten_rounds: usize,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            seed: 0,
            max_tries: 10,
            max_rounds: 64,
            tighten_rounds: 4,
        }
    }
}

/// Searches for a minor-embedding of the graph `(n0, edges)` in `target`.
///
/// Each attempt places variables one at a time: the chain of a variable is
/// the union of cheapest paths from a common root qubit to each already
/// placed neighbour chain, where a qubit costs `penalty^usage`. Qubits may be
/// shared temporarily; the penalty grows every round and every chain is
/// ripped up and rerouted until no qubit is shared. Attempts use
/// independent random streams and the first successful attempt by index
/// is returned, so the result does not depend on scheduling.
pub fn find_embedding(
    n0: usize,
    edges: &[(usize, usize)],
    target: Arc<ChimeraGraph>,
    params: &EmbedParams,
) -> Result<Option<Embedding>> {
    if n0 == 0 {
        return Err(Error::InvalidParameter("logical graph is empty".into()));
    }
    let mut adjacency = vec![Vec::new(); n0];
    for &(a, b) in edges {
        if a >= n0 || b >= n0 || a == b {
            return Err(Error::InvalidParameter(format!("bad logical edge ({a}, {b})")));
        }
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    for list in &mut adjacency {
        list.sort_unstable();
        list.dedup();
    }
    if n0 > target.num_qubits() {
        return Ok(None);
    }
    let found = (0..params.max_tries).into_par_iter().find_map_first(|attempt| {
        let mut router = Router::new(&target, &adjacency);
        let mut rng = rng::stream(params.seed, &[rng::TAG_EMBED, attempt as u64]);
        router
            .run(&mut rng, params.max_rounds, params.tighten_rounds)
            .and_then(|chains| {
                let emb = Embedding::new(chains, target.clone()).ok()?;
                emb.validate(edges).ok()?;
                Some(emb)
            })
    });
    Ok(found)
}

#[derive(Clone, Copy, PartialEq)]
struct Cost(f64, usize);

impl Eq for Cost {}

impl Ord for Cost {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed for a min-heap.
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Cost {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Router<'a> {
    graph: &'a ChimeraGraph,
    logical: &'a [Vec<usize>],
    chains: Vec<Vec<usize>>,
    usage: Vec<u32>,
    penalty: f64,
    forbid_overlap: bool,
}

impl<'a> Router<'a> {
    fn new(graph: &'a ChimeraGraph, logical: &'a [Vec<usize>]) -> Self {
        Self {
            graph,
            logical,
            chains: vec![Vec::new(); logical.len()],
            usage: vec![0; graph.num_sites()],
            penalty: 2.0,
            forbid_overlap: false,
        }
    }

    fn weight(&self, q: usize) -> f64 {
        match self.usage[q] {
            0 => 1.0,
            _ if self.forbid_overlap => f64::INFINITY,
            u => self.penalty.powi(u as i32),
        }
    }

    fn overlapping(&self) -> bool {
        self.usage.iter().any(|&u| u > 1)
    }

    fn total_qubits(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    fn run<R: Rng>(&mut self, rng: &mut R, max_rounds: usize, tighten: usize) -> Option<Vec<Vec<usize>>> {
        let n = self.logical.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        for &v in &order {
            if !self.place(v, rng) {
                return None;
            }
        }
        let mut solved = !self.overlapping();
        let mut round = 0;
        while !solved && round < max_rounds {
            round += 1;
            self.penalty = (self.penalty * 1.5).min(1e12);
            order.shuffle(rng);
            for &v in &order {
                self.rip_up(v);
                if !self.place(v, rng) {
                    return None;
                }
            }
            solved = !self.overlapping();
        }
        if !solved {
            return None;
        }
        let mut best = self.chains.clone();
        let mut best_size = self.total_qubits();
        self.forbid_overlap = true;
        for _ in 0..tighten {
            order.shuffle(rng);
            for &v in &order {
                let old = std::mem::take(&mut self.chains[v]);
                for &q in &old {
                    self.usage[q] -= 1;
                }
                if !self.place(v, rng) || self.chains[v].len() > old.len() {
                    self.rip_up(v);
                    for &q in &old {
                        self.usage[q] += 1;
                    }
                    self.chains[v] = old;
                }
            }
            let size = self.total_qubits();
            if size < best_size {
                best_size = size;
                best = self.chains.clone();
            }
        }
        Some(best)
    }

    fn rip_up(&mut self, v: usize) {
        for &q in &self.chains[v] {
            self.usage[q] -= 1;
        }
        self.chains[v].clear();
    }

    /// Routes variable `v` against its currently placed neighbours.
    fn place<R: Rng>(&mut self, v: usize, rng: &mut R) -> bool {
        let placed: Vec<usize> = self.logical[v]
            .iter()
            .copied()
            .filter(|&u| !self.chains[u].is_empty())
            .collect();
        let sites = self.graph.num_sites();
        if placed.is_empty() {
            let mut best = f64::INFINITY;
            let mut candidates = Vec::new();
            for q in self.graph.qubits() {
                let w = self.weight(q);
                if w < best {
                    best = w;
                    candidates.clear();
                }
                if w == best && w.is_finite() {
                    candidates.push(q);
                }
            }
            let Some(&q) = candidates.as_slice().choose(rng) else {
                return false;
            };
            self.chains[v] = vec![q];
            self.usage[q] += 1;
            return true;
        }

        let mut trees = Vec::with_capacity(placed.len());
        for &u in &placed {
            trees.push(self.shortest_paths(u));
        }
        let mut best = f64::INFINITY;
        let mut candidates = Vec::new();
        for q in 0..sites {
            if !self.graph.is_active(q) {
                continue;
            }
            let w = self.weight(q);
            let mut cost = w;
            for (dist, _) in &trees {
                cost += dist[q] - w;
            }
            if !cost.is_finite() {
                continue;
            }
            if cost < best - 1e-9 {
                best = cost;
                candidates.clear();
                candidates.push(q);
            } else if (cost - best).abs() <= 1e-9 {
                candidates.push(q);
            }
        }
        let Some(&root) = candidates.as_slice().choose(rng) else {
            return false;
        };
        let mut chain = vec![root];
        for (_, pred) in &trees {
            let mut q = root;
            while let Some(p) = pred[q] {
                chain.push(p);
                q = p;
            }
        }
        chain.sort_unstable();
        chain.dedup();
        for &q in &chain {
            self.usage[q] += 1;
        }
        self.chains[v] = chain;
        true
    }

    /// Vertex-weighted Dijkstra from chain `u`. `dist[q]` includes the weight
    /// of `q` itself; qubits of chain `u` are unreachable (infinite).
    fn shortest_paths(&self, u: usize) -> (Vec<f64>, Vec<Option<usize>>) {
        let sites = self.graph.num_sites();
        let mut in_chain = vec![false; sites];
        for &q in &self.chains[u] {
            in_chain[q] = true;
        }
        let mut dist = vec![f64::INFINITY; sites];
        let mut pred = vec![None; sites];
        let mut heap = BinaryHeap::new();
        for &q in &self.chains[u] {
            for &nb in self.graph.neighbors(q) {
                if in_chain[nb] {
                    continue;
                }
                let w = self.weight(nb);
                if w < dist[nb] {
                    dist[nb] = w;
                    heap.push(Cost(w, nb));
                }
            }
        }
        while let Some(Cost(d, q)) = heap.pop() {
            if d > dist[q] {
                continue;
            }
            for &nb in self.graph.neighbors(q) {
                if in_chain[nb] {
                    continue;
                }
                let nd = d + self.weight(nb);
                if nd < dist[nb] {
                    dist[nb] = nd;
                    pred[nb] = Some(q);
                    heap.push(Cost(nd, nb));
                }
            }
        }
        (dist, pred)
    }
}

// ---------------------------------------------------------------------------
// Embedded problems
// ---------------------------------------------------------------------------

/// A logical Hamiltonian placed on hardware. Hardware weights are
/// `J = J_problem + J_chain` and are unit-scaled together, so a larger
/// `kappa` shrinks `alpha`.
#[derive(Clone, Debug)]
pub struct EmbeddedProblem {
    logical: Hamiltonian,
    embedding: Embedding,
    kappa: f64,
    problem_couplers: BTreeMap<(usize, usize), f64>,
    chain_couplers: Vec<(usize, usize)>,
    hardware: Hamiltonian,
    alpha: f64,
}

/// Builds the hardware Hamiltonian for `logical` under `emb`:
/// each logical coupling sits on one inter-chain coupler, each field is
/// split equally over its chain, and chains are bound by `-kappa` along a
/// spanning tree. The result is unit-scaled.
pub fn embed(logical: &Hamiltonian, emb: &Embedding, kappa: f64) -> Result<EmbeddedProblem> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidParameter(format!("chain strength must be positive, got {kappa}")));
    }
    if logical.n() != emb.num_variables() {
        return Err(Error::EmbeddingMismatch(format!(
            "logical problem has {} variables, embedding has {}",
            logical.n(),
            emb.num_variables()
        )));
    }
    let graph = emb.target();
    let mut raw = Hamiltonian::new(graph.num_sites());
    let mut problem_couplers = BTreeMap::new();
    for (a, b, w) in logical.couplings() {
        if w == 0.0 {
            continue;
        }
        let (qa, qb) = inter_chain_coupler(emb.chain(a), emb.chain(b), graph).ok_or_else(|| {
            Error::EmbeddingMismatch(format!("logical edge ({a}, {b}) has no hardware coupler"))
        })?;
        let key = (qa.min(qb), qa.max(qb));
        *problem_couplers.entry(key).or_insert(0.0) += w;
        raw.add_coupling(qa, qb, w)?;
    }
    for (v, chain) in emb.chains().iter().enumerate() {
        let share = logical.field(v) / chain.len() as f64;
        if share != 0.0 {
            for &q in chain {
                raw.add_field(q, share)?;
            }
        }
    }
    let mut chain_couplers = Vec::new();
    for (v, chain) in emb.chains().iter().enumerate() {
        let tree = spanning_tree(chain, graph)
            .ok_or_else(|| Error::EmbeddingMismatch(format!("chain {v} is not connected")))?;
        for (qa, qb) in tree {
            raw.add_coupling(qa, qb, -kappa)?;
            chain_couplers.push((qa, qb));
        }
    }
    let (hardware, alpha) = if raw.max_abs_weight() > 0.0 {
        let h = raw.scale_to_unit()?;
        let a = h.scale_alpha().unwrap_or(1.0);
        (h, a)
    } else {
        (raw, 1.0)
    };
    Ok(EmbeddedProblem {
        logical: logical.clone(),
        embedding: emb.clone(),
        kappa,
        problem_couplers,
        chain_couplers,
        hardware,
        alpha,
    })
}

impl EmbeddedProblem {
    pub fn logical(&self) -> &Hamiltonian {
        &self.logical
    }

    pub fn embedding(&self) -> &Embedding {
        &self.embedding
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// The unit-scaled hardware Hamiltonian.
    pub fn hardware(&self) -> &Hamiltonian {
        &self.hardware
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Problem couplers before scaling.
    pub fn problem_couplers(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.problem_couplers
    }

    /// Chain couplers; each carries `-kappa` before scaling.
    pub fn chain_couplers(&self) -> &[(usize, usize)] {
        &self.chain_couplers
    }

    /// `-kappa` times the number of chain couplers: the energy every
    /// unbroken state picks up from chains, before scaling.
    pub fn chain_constant(&self) -> f64 {
        -self.kappa * self.chain_couplers.len() as f64
    }

    /// The chain part `(0, alpha * J_chain)` of the hardware Hamiltonian.
    pub fn chain_hamiltonian(&self) -> Hamiltonian {
        let mut h = Hamiltonian::new(self.hardware.n());
        for &(a, b) in &self.chain_couplers {
            h.add_coupling(a, b, -self.kappa * self.alpha)
                .expect("chain couplers are valid hardware edges");
        }
        h
    }

    /// The hardware Hamiltonian restricted to used qubits, with the mapping
    /// from compact index to hardware id.
    pub fn compact(&self) -> (Hamiltonian, Vec<usize>) {
        let used = self.embedding.used_qubits();
        let h = self
            .hardware
            .restrict(&used)
            .expect("used qubits are in range");
        (h, used)
    }

    /// Lifts a compact state back to the full hardware id space; qubits
    /// outside the embedding are set to +1.
    pub fn expand(&self, compact: &SpinState, used: &[usize]) -> SpinState {
        let mut full = vec![1i8; self.hardware.n()];
        for (i, &q) in used.iter().enumerate() {
            full[q] = compact[i];
        }
        SpinState::from_vec_unchecked(full)
    }
}

/// Logical variables whose chains do not agree unanimously, ascending.
pub fn broken_chains(s_hw: &SpinState, emb: &Embedding) -> Vec<usize> {
    emb.chains()
        .iter()
        .enumerate()
        .filter(|(_, chain)| {
            let first = s_hw[chain[0]];
            chain.iter().any(|&q| s_hw[q] != first)
        })
        .map(|(v, _)| v)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnembedPolicy {
    /// Reject any sample with a broken chain.
    Discard,
    /// Chain majority, ties broken uniformly at random.
    MajorityVote,
}

/// Maps a hardware state to a logical state; `None` when the sample is
/// rejected under [`UnembedPolicy::Discard`].
pub fn unembed<R: Rng + ?Sized>(
    s_hw: &SpinState,
    emb: &Embedding,
    policy: UnembedPolicy,
    rng: &mut R,
) -> Option<SpinState> {
    let mut out = Vec::with_capacity(emb.num_variables());
    for chain in emb.chains() {
        let sum: i32 = chain.iter().map(|&q| i32::from(s_hw[q])).sum();
        let unanimous = sum.unsigned_abs() as usize == chain.len();
        let spin = match (policy, sum.cmp(&0)) {
            (UnembedPolicy::Discard, _) if !unanimous => return None,
            (_, Ordering::Greater) => 1,
            (_, Ordering::Less) => -1,
            (_, Ordering::Equal) => {
                if rng.random::<bool>() {
                    1
                } else {
                    -1
                }
            }
        };
        out.push(spin);
    }
    Some(SpinState::from_vec_unchecked(out))
}

// ---------------------------------------------------------------------------
// Chain-strength calibration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Kappa0Search {
    /// Increasing positive chain strengths to try.
    pub grid: Vec<f64>,
    pub reads: usize,
    pub gauges: usize,
}

impl Default for Kappa0Search {
    fn default() -> Self {
        Self {
            grid: (2..=20).map(|i| f64::from(i) * 0.5).collect(),
            reads: 1000,
            gauges: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kappa0Estimate {
    pub kappa: f64,
    /// True when no grid value satisfied the check; `kappa` is then the cap.
    pub saturated: bool,
}

/// Smallest grid chain strength for which a lowest-energy sample has no
/// broken chains. With only singleton chains nothing can break and the
/// first grid value is returned without sampling.
pub fn estimate_kappa0(
    logical: &Hamiltonian,
    emb: &Embedding,
    config: &AnnealerConfig,
    ice: &IceModel,
    search: &Kappa0Search,
) -> Result<Kappa0Estimate> {
    let Some(&first) = search.grid.first() else {
        return Err(Error::InvalidParameter("empty chain-strength grid".into()));
    };
    if search
        .grid
        .windows(2)
        .any(|w| !(w[1] > w[0]))
        || !(first > 0.0)
    {
        return Err(Error::InvalidParameter(
            "chain-strength grid must be positive and increasing".into(),
        ));
    }
    if emb.all_singletons() {
        return Ok(Kappa0Estimate {
            kappa: first,
            saturated: false,
        });
    }
    for &kappa in &search.grid {
        let problem = embed(logical, emb, kappa)?;
        let samples = sampler::run(problem.hardware(), search.reads, search.gauges, config, ice)?;
        let min = samples
            .records()
            .iter()
            .map(|r| r.energy)
            .fold(f64::INFINITY, f64::min);
        let tol = 1e-9 * (1.0 + min.abs());
        let clean = samples
            .records()
            .iter()
            .filter(|r| r.energy <= min + tol)
            .any(|r| broken_chains(&r.state, emb).is_empty());
        if clean {
            return Ok(Kappa0Estimate {
                kappa,
                saturated: false,
            });
        }
    }
    Ok(Kappa0Estimate {
        kappa: *search.grid.last().unwrap(),
        saturated: true,
    })
}
