//! Chimera hardware graphs.
//!
//! `C_k` is a `k x k` grid of `K_{4,4}` cells. Qubit ids follow
//! `id = 8 * (k * row + col) + 4 * orientation + index`, where vertical
//! qubits (orientation 0) couple to the same index in the cells above and
//! below, and horizontal qubits (orientation 1) to the cells left and right.
//! Inside a cell every vertical qubit couples to every horizontal one.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::seq::index;

use crate::embedding::Embedding;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Vertical = 0,
    Horizontal = 1,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChimeraCoord {
    pub row: usize,
    pub col: usize,
    pub orientation: Orientation,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChimeraGraph {
    k: usize,
    active: Vec<bool>,
    couplers: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl ChimeraGraph {
    /// The full `C_k` with every qubit and coupler active.
    pub fn build(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("Chimera dimension k must be >= 1".into()));
        }
        let active = vec![true; 8 * k * k];
        let couplers = full_couplers(k);
        Ok(Self::assemble(k, active, couplers))
    }

    /// A working graph with exactly the given qubits and couplers active.
    pub fn from_parts<Q, C>(k: usize, qubits: Q, couplers: C) -> Result<Self>
    where
        Q: IntoIterator<Item = usize>,
        C: IntoIterator<Item = (usize, usize)>,
    {
        if k == 0 {
            return Err(Error::InvalidParameter("Chimera dimension k must be >= 1".into()));
        }
        let sites = 8 * k * k;
        let mut active = vec![false; sites];
        for q in qubits {
            if q >= sites {
                return Err(Error::Validation(format!("qubit {q} is outside C_{k}")));
            }
            active[q] = true;
        }
        let mut set = BTreeSet::new();
        for (u, v) in couplers {
            let (u, v) = if u < v { (u, v) } else { (v, u) };
            if u >= sites || v >= sites || !is_full_coupler(k, u, v) {
                return Err(Error::Validation(format!("coupler ({u}, {v}) is not in C_{k}")));
            }
            if !active[u] || !active[v] {
                return Err(Error::Validation(format!(
                    "coupler ({u}, {v}) references an inactive qubit"
                )));
            }
            set.insert((u, v));
        }
        Ok(Self::assemble(k, active, set))
    }

    fn assemble(k: usize, active: Vec<bool>, couplers: BTreeSet<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); active.len()];
        for &(u, v) in &couplers {
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self {
            k,
            active,
            couplers,
            adjacency,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Size of the id space, `8 k^2`, active or not.
    pub fn num_sites(&self) -> usize {
        self.active.len()
    }

    /// Active qubit count (N).
    pub fn num_qubits(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    /// Active coupler count (M).
    pub fn num_couplers(&self) -> usize {
        self.couplers.len()
    }

    pub fn is_active(&self, q: usize) -> bool {
        self.active.get(q).copied().unwrap_or(false)
    }

    pub fn has_coupler(&self, u: usize, v: usize) -> bool {
        let key = if u < v { (u, v) } else { (v, u) };
        self.couplers.contains(&key)
    }

    pub fn neighbors(&self, q: usize) -> &[usize] {
        &self.adjacency[q]
    }

    pub fn degree(&self, q: usize) -> usize {
        self.adjacency[q].len()
    }

    pub fn qubits(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(q, &a)| a.then_some(q))
    }

    pub fn couplers(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.couplers.iter().copied()
    }

    pub fn id(&self, c: ChimeraCoord) -> usize {
        coord_to_id(self.k, c)
    }

    pub fn coord(&self, q: usize) -> ChimeraCoord {
        id_to_coord(self.k, q)
    }

    /// `(row, col)` of the unit cell holding `q`.
    pub fn cell(&self, q: usize) -> (usize, usize) {
        let c = q / 8;
        (c / self.k, c % self.k)
    }

    /// Removes the given qubits and their incident couplers.
    pub fn without_qubits(&self, dead: &[usize]) -> Self {
        let mut active = self.active.clone();
        for &q in dead {
            if q < active.len() {
                active[q] = false;
            }
        }
        let couplers = self
            .couplers
            .iter()
            .copied()
            .filter(|&(u, v)| active[u] && active[v])
            .collect();
        Self::assemble(self.k, active, couplers)
    }

    /// Removes a uniformly random set of `dead_qubits` active qubits and their
    /// incident couplers. Deterministic per seed.
    pub fn random_yield(&self, dead_qubits: usize, seed: u64) -> Result<Self> {
        let alive: Vec<usize> = self.qubits().collect();
        if dead_qubits > alive.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot remove {dead_qubits} of {} active qubits",
                alive.len()
            )));
        }
        let mut rng = rng::stream(seed, &[0x7969_656c]);
        let dead: Vec<usize> = index::sample(&mut rng, alive.len(), dead_qubits)
            .into_iter()
            .map(|i| alive[i])
            .collect();
        Ok(self.without_qubits(&dead))
    }

    /// Removes a uniformly random set of `dead_couplers` active couplers.
    pub fn random_coupler_yield(&self, dead_couplers: usize, seed: u64) -> Result<Self> {
        let all: Vec<(usize, usize)> = self.couplers().collect();
        if dead_couplers > all.len() {
            return Err(Error::InvalidParameter(format!(
                "cannot remove {dead_couplers} of {} active couplers",
                all.len()
            )));
        }
        let mut rng = rng::stream(seed, &[0x636f_7570]);
        let dead: BTreeSet<(usize, usize)> = index::sample(&mut rng, all.len(), dead_couplers)
            .into_iter()
            .map(|i| all[i])
            .collect();
        let couplers = all.into_iter().filter(|c| !dead.contains(c)).collect();
        Ok(Self::assemble(self.k, self.active.clone(), couplers))
    }

    /// Working-graph text: `chimera k`, then `q <id>` and `c <u> <v>` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "chimera {}", self.k);
        for q in self.qubits() {
            let _ = writeln!(out, "q {q}");
        }
        for (u, v) in self.couplers() {
            let _ = writeln!(out, "c {u} {v}");
        }
        out
    }

    /// Parses the working-graph text format. Every listed element must
    /// belong to the declared `C_k`; couplers must join listed qubits.
    pub fn load_working_graph(text: &str) -> Result<Self> {
        let mut k = None;
        let mut qubits = Vec::new();
        let mut couplers = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            let num = |t: &str| {
                t.parse::<usize>()
                    .map_err(|e| Error::parse(line_no, format!("bad integer `{t}`: {e}")))
            };
            match (tokens[0], tokens.len(), k) {
                ("chimera", 2, None) => k = Some(num(tokens[1])?),
                ("chimera", _, _) => return Err(Error::parse(line_no, "bad or repeated header")),
                (_, _, None) => return Err(Error::parse(line_no, "missing `chimera k` header")),
                ("q", 2, Some(_)) => qubits.push(num(tokens[1])?),
                ("c", 3, Some(_)) => {
                    couplers.push((num(tokens[1])?, num(tokens[2])?));
                }
                _ => return Err(Error::parse(line_no, format!("unrecognized line `{line}`"))),
            }
        }
        let k = k.ok_or_else(|| Error::parse(1, "missing `chimera k` header"))?;
        Self::from_parts(k, qubits, couplers)
    }
}

fn coord_to_id(k: usize, c: ChimeraCoord) -> usize {
    8 * (k * c.row + c.col) + 4 * c.orientation as usize + c.index
}

fn id_to_coord(k: usize, q: usize) -> ChimeraCoord {
    let cell = q / 8;
    let within = q % 8;
    ChimeraCoord {
        row: cell / k,
        col: cell % k,
        orientation: if within < 4 {
            Orientation::Vertical
        } else {
            Orientation::Horizontal
        },
        index: within % 4,
    }
}

/// Whether `(u, v)` is a coupler of the full `C_k`.
pub fn is_full_coupler(k: usize, u: usize, v: usize) -> bool {
    let sites = 8 * k * k;
    if u >= sites || v >= sites || u == v {
        return false;
    }
    let a = id_to_coord(k, u);
    let b = id_to_coord(k, v);
    if a.row == b.row && a.col == b.col {
        return a.orientation != b.orientation;
    }
    if a.orientation != b.orientation || a.index != b.index {
        return false;
    }
    match a.orientation {
        Orientation::Vertical => a.col == b.col && a.row.abs_diff(b.row) == 1,
        Orientation::Horizontal => a.row == b.row && a.col.abs_diff(b.col) == 1,
    }
}

fn full_couplers(k: usize) -> BTreeSet<(usize, usize)> {
    let mut set = BTreeSet::new();
    let id = |row, col, orientation, index| {
        coord_to_id(
            k,
            ChimeraCoord {
                row,
                col,
                orientation,
                index,
            },
        )
    };
    for row in 0..k {
        for col in 0..k {
            for i in 0..4 {
                for j in 0..4 {
                    set.insert((
                        id(row, col, Orientation::Vertical, i),
                        id(row, col, Orientation::Horizontal, j),
                    ));
                }
                if row + 1 < k {
                    set.insert((
                        id(row, col, Orientation::Vertical, i),
                        id(row + 1, col, Orientation::Vertical, i),
                    ));
                }
                if col + 1 < k {
                    set.insert((
                        id(row, col, Orientation::Horizontal, i),
                        id(row, col + 1, Orientation::Horizontal, i),
                    ));
                }
            }
        }
    }
    set
}

/// Embeds `K_{4k}` in the upper triangle of cells of `graph`.
///
/// Logical variable `4 i + t` owns the vertical qubits with index `t` in
/// column `i`, rows `0..=i`, and the horizontal qubits with index `t` in row
/// `i`, columns `i..k`: `k + 1` qubits per chain and `4k(k + 1)` in total.
/// Two chains `(i, t)` and `(j, u)` with `i <= j` meet in cell `(i, j)`.
pub fn choi_clique_embedding(graph: Arc<ChimeraGraph>) -> Result<Embedding> {
    let k = graph.k();
    let mut chains = Vec::with_capacity(4 * k);
    for i in 0..k {
        for t in 0..4 {
            let mut chain = Vec::with_capacity(k + 1);
            for row in 0..=i {
                chain.push(graph.id(ChimeraCoord {
                    row,
                    col: i,
                    orientation: Orientation::Vertical,
                    index: t,
                }));
            }
            for col in i..k {
                chain.push(graph.id(ChimeraCoord {
                    row: i,
                    col,
                    orientation: Orientation::Horizontal,
                    index: t,
                }));
            }
            chains.push(chain);
        }
    }
    for chain in &chains {
        if let Some(q) = chain.iter().find(|&&q| !graph.is_active(q)) {
            return Err(Error::Infeasible(format!(
                "clique embedding needs qubit {q}, which is inactive"
            )));
        }
    }
    let emb = Embedding::new(chains, graph)?;
    let n = emb.num_variables();
    let clique: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    emb.validate(&clique)
        .map_err(|e| Error::Infeasible(format!("clique embedding broken by dead couplers: {e}")))?;
    Ok(emb)
}

/// Convenience: the clique embedding on the full `C_k`.
pub fn choi_clique_embedding_full(k: usize) -> Result<Embedding> {
    choi_clique_embedding(Arc::new(ChimeraGraph::build(k)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet};

    #[test]
    fn single_cell() {
        let g = ChimeraGraph::build(1).unwrap();
        assert_eq!(g.num_qubits(), 8);
        assert_eq!(g.num_couplers(), 16);
        assert!(g.qubits().all(|q| g.degree(q) == 4));
    }

    #[test]
    fn eight_by_eight_counts() {
        let g = ChimeraGraph::build(8).unwrap();
        assert_eq!(g.num_qubits(), 512);
        assert_eq!(g.num_couplers(), 1472);
        let degree_sum: usize = g.qubits().map(|q| g.degree(q)).sum();
        assert_eq!(degree_sum / 2, 1472);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(ChimeraGraph::build(0).is_err());
    }

    #[test]
    fn couplers_respect_cell_structure() {
        let g = ChimeraGraph::build(3).unwrap();
        for (u, v) in g.couplers() {
            let a = g.coord(u);
            let b = g.coord(v);
            let same_cell = a.row == b.row && a.col == b.col;
            if same_cell {
                assert_ne!(a.orientation, b.orientation);
            } else {
                assert_eq!(a.orientation, b.orientation);
                assert_eq!(a.index, b.index);
                assert_eq!(a.row.abs_diff(b.row) + a.col.abs_diff(b.col), 1);
            }
        }
    }

    #[test]
    fn coordinates_round_trip() {
        let g = ChimeraGraph::build(4).unwrap();
        for q in 0..g.num_sites() {
            assert_eq!(g.id(g.coord(q)), q);
        }
    }

    #[test]
    fn working_graph_round_trip() {
        let full = ChimeraGraph::build(8).unwrap();
        assert_eq!(ChimeraGraph::load_working_graph(&full.to_text()).unwrap(), full);
        let reduced = full.random_yield(31, 11).unwrap();
        assert_eq!(reduced.num_qubits(), 481);
        assert_eq!(ChimeraGraph::load_working_graph(&reduced.to_text()).unwrap(), reduced);
    }

    #[test]
    fn working_graph_validation() {
        let err = ChimeraGraph::load_working_graph("chimera 1\nq 0\nc 0 4\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
        let err = ChimeraGraph::load_working_graph("chimera 1\nq 9\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // 0 and 1 are both vertical in cell (0,0): not a coupler.
        let err = ChimeraGraph::load_working_graph("chimera 1\nq 0\nq 1\nc 0 1\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let err = ChimeraGraph::load_working_graph("q 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = ChimeraGraph::load_working_graph("chimera 1\nz 0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn random_yield_behaviour() {
        let g = ChimeraGraph::build(8).unwrap();
        assert_eq!(g.random_yield(0, 5).unwrap(), g);
        let a = g.random_yield(31, 5).unwrap();
        let b = g.random_yield(31, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.num_qubits(), 481);
        assert!(a.couplers().all(|(u, v)| a.is_active(u) && a.is_active(v)));
        assert!(g.random_yield(513, 5).is_err());
        let fewer = a.random_coupler_yield(10, 1).unwrap();
        assert_eq!(fewer.num_couplers(), a.num_couplers() - 10);
    }

    #[test]
    fn clique_embedding_shape() {
        for k in 1..=4 {
            let emb = choi_clique_embedding_full(k).unwrap();
            assert_eq!(emb.num_variables(), 4 * k);
            assert_eq!(emb.num_qubits(), 4 * k * (k + 1));
            assert!(emb.chains().iter().all(|c| c.len() == k + 1));
            let mut seen = HashSet::new();
            for chain in emb.chains() {
                for &q in chain {
                    assert!(seen.insert(q));
                }
            }
            // Every logical pair meets on some coupler.
            let owner: HashMap<usize, usize> = emb
                .chains()
                .iter()
                .enumerate()
                .flat_map(|(v, c)| c.iter().map(move |&q| (q, v)))
                .collect();
            let mut met = HashSet::new();
            for (u, v) in emb.target().couplers() {
                if let (Some(&a), Some(&b)) = (owner.get(&u), owner.get(&v)) {
                    if a != b {
                        met.insert((a.min(b), a.max(b)));
                    }
                }
            }
            assert_eq!(met.len(), 4 * k * (4 * k - 1) / 2);
        }
    }

    #[test]
    fn clique_embedding_detects_dead_qubit() {
        let full = ChimeraGraph::build(2).unwrap();
        let broken = Arc::new(full.without_qubits(&[0]));
        assert!(matches!(choi_clique_embedding(broken), Err(Error::Infeasible(_))));
        // A dead qubit outside the upper triangle is harmless.
        let lower = full.id(ChimeraCoord {
            row: 1,
            col: 0,
            orientation: Orientation::Horizontal,
            index: 2,
        });
        assert!(choi_clique_embedding(Arc::new(full.without_qubits(&[lower]))).is_ok());
    }
}
