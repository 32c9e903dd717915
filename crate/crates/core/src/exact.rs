//! Exhaustive ground-state search.
//!
//! Enumeration walks a Gray code inside fixed-size prefix blocks, keeping a
//! per-spin local-field array so each step costs one neighbour update. The
//! lowest few spins are never walked: at each step all their combinations
//! are scored together from the current local fields. Blocks are
//! independent and run in parallel; the merged result does not
//! depend on how the state space was split. When every field is zero the
//! last spin is pinned to `+1` and the other half of the space is recovered
//! by global flip.

use std::collections::BinaryHeap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ising::{Adjacency, Hamiltonian, SpinState};

/// Default refusal threshold for exhaustive enumeration.
pub const DEFAULT_LIMIT: usize = 28;
const BLOCK_BITS: usize = 20;
const LEAF_BITS: usize = 6;

#[derive(Clone, Debug)]
pub struct BruteForce {
    pub limit: usize,
    /// Ground states to keep; the smallest indices win (bit `i` set means
    /// spin `i` is `-1`).
    pub cap: usize,
}

impl Default for BruteForce {
    fn default() -> Self {
        Self {
            limit: DEFAULT_LIMIT,
            cap: 1024,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GroundStates {
    pub energy: f64,
    /// At most `cap` ground states in ascending index order.
    pub states: Vec<SpinState>,
    /// Total number of ground states, including any not listed.
    pub degeneracy: u64,
}

impl GroundStates {
    pub fn is_truncated(&self) -> bool {
        (self.states.len() as u64) < self.degeneracy
    }

    pub fn contains(&self, s: &SpinState) -> bool {
        self.states.iter().any(|t| t == s)
    }
}

impl BruteForce {
    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn with_limit(mut self, limit: usize) -> Self {
        self.limit = limit;
        self
    }

    fn check(&self, ham: &Hamiltonian) -> Result<()> {
        if ham.n() > self.limit {
            return Err(Error::TooLarge {
                n: ham.n(),
                limit: self.limit,
            });
        }
        if ham.n() >= 64 {
            return Err(Error::TooLarge { n: ham.n(), limit: 63 });
        }
        Ok(())
    }

    pub fn solve(&self, ham: &Hamiltonian) -> Result<GroundStates> {
        self.check(ham)?;
        let n = ham.n();
        if n == 0 {
            return Ok(GroundStates {
                energy: 0.0,
                states: vec![SpinState::all_up(0)],
                degeneracy: 1,
            });
        }
        let symmetric = ham.has_zero_fields();
        let free = if symmetric { n - 1 } else { n };
        let scan = enumerate(ham, free, self.cap);
        let mut indices = scan.indices;
        let mut degeneracy = scan.count;
        if symmetric {
            let mask = (1u64 << n) - 1;
            let mut mirrored: Vec<u64> = indices.iter().map(|&i| mask ^ i).collect();
            mirrored.sort_unstable();
            let room = self.cap.saturating_sub(indices.len());
            indices.extend(mirrored.into_iter().take(room));
            degeneracy *= 2;
        }
        let states: Vec<SpinState> = indices.iter().map(|&i| SpinState::from_index(n, i)).collect();
        let energy = states
            .iter()
            .map(|s| ham.energy_of(s.as_slice()))
            .min_by(f64::total_cmp)
            .unwrap_or(scan.best);
        Ok(GroundStates {
            energy,
            states,
            degeneracy,
        })
    }

    /// The two lowest distinct energy levels.
    pub fn energy_gap(&self, ham: &Hamiltonian) -> Result<(f64, f64)> {
        self.check(ham)?;
        let n = ham.n();
        let free = if ham.has_zero_fields() { n.saturating_sub(1) } else { n };
        let scan = enumerate(ham, free, 0);
        match scan.second {
            Some(e1) => Ok((scan.best, e1)),
            None => Err(Error::Degenerate("energy landscape is constant".into())),
        }
    }
}

pub fn brute_force(ham: &Hamiltonian, cap: usize) -> Result<GroundStates> {
    BruteForce::default().with_cap(cap).solve(ham)
}

pub fn energy_gap(ham: &Hamiltonian) -> Result<(f64, f64)> {
    BruteForce::default().energy_gap(ham)
}

/// Exact ground energy as a sum over connected components, each solved
/// exhaustively. Isolated spins contribute `-|h|`. Every component must fit
/// within `limit`.
pub fn ground_energy_by_components(ham: &Hamiltonian, limit: usize) -> Result<f64> {
    let adj = Adjacency::new(ham);
    let n = ham.n();
    let mut component = vec![usize::MAX; n];
    let mut total = 0.0;
    for start in 0..n {
        if component[start] != usize::MAX {
            continue;
        }
        let mut members = vec![start];
        component[start] = start;
        let mut i = 0;
        while i < members.len() {
            for (v, _) in adj.neighbors(members[i]) {
                if component[v] == usize::MAX {
                    component[v] = start;
                    members.push(v);
                }
            }
            i += 1;
        }
        members.sort_unstable();
        if members.len() == 1 {
            total -= ham.field(start).abs();
            continue;
        }
        let sub = ham.restrict(&members)?;
        total += BruteForce::default().with_limit(limit).with_cap(1).solve(&sub)?.energy;
    }
    Ok(total)
}

/// Every energy, indexed by state index, computed naively.
pub fn spectrum(ham: &Hamiltonian) -> Result<Vec<f64>> {
    const LIMIT: usize = 24;
    if ham.n() > LIMIT {
        return Err(Error::TooLarge { n: ham.n(), limit: LIMIT });
    }
    let n = ham.n();
    Ok((0..1u64 << n)
        .into_par_iter()
        .map(|i| ham.energy_of(SpinState::from_index(n, i).as_slice()))
        .collect())
}

fn tolerance(ham: &Hamiltonian) -> f64 {
    let scale: f64 = ham.fields().iter().map(|h| h.abs()).sum::<f64>()
        + ham.couplings().map(|(_, _, w)| w.abs()).sum::<f64>();
    1e-9 * scale.max(1.0)
}

struct Scan {
    best: f64,
    second: Option<f64>,
    count: u64,
    /// Smallest `cap` ground indices, ascending.
    indices: Vec<u64>,
}

/// Enumerates all assignments of spins `0..free`; spins `free..n` stay `+1`.
fn enumerate(ham: &Hamiltonian, free: usize, cap: usize) -> Scan {
    let n = ham.n();
    let adj = Adjacency::new(ham);
    let tol = tolerance(ham);
    let low = free.min(BLOCK_BITS);
    let blocks = 1u64 << (free - low);
    let parts: Vec<BlockScan> = (0..blocks)
        .into_par_iter()
        .map(|b| scan_block(ham, &adj, n, low, b << low, cap, tol))
        .collect();

    let best = parts.iter().map(|p| p.best).fold(f64::INFINITY, f64::min);
    let mut count = 0u64;
    let mut heap = BinaryHeap::new();
    let mut levels = Vec::new();
    for p in &parts {
        levels.push(p.best);
        levels.extend(p.second);
        if p.best <= best + tol {
            count += p.count;
            for &i in p.heap.iter() {
                push_capped(&mut heap, i, cap);
            }
        }
    }
    levels.sort_by(f64::total_cmp);
    let second = levels.into_iter().find(|&e| e > best + tol);
    Scan {
        best,
        second,
        count,
        indices: heap.into_sorted_vec(),
    }
}

struct BlockScan {
    best: f64,
    second: Option<f64>,
    count: u64,
    heap: BinaryHeap<u64>,
}

fn push_capped(heap: &mut BinaryHeap<u64>, i: u64, cap: usize) {
    if cap == 0 {
        return;
    }
    if heap.len() < cap {
        heap.push(i);
    } else if heap.peek().is_some_and(|&top| i < top) {
        heap.pop();
        heap.push(i);
    }
}

fn scan_block(
    ham: &Hamiltonian,
    adj: &Adjacency,
    n: usize,
    low: usize,
    start: u64,
    cap: usize,
    tol: f64,
) -> BlockScan {
    let mut s: Vec<f64> = SpinState::from_index(n, start)
        .as_slice()
        .iter()
        .map(|&x| f64::from(x))
        .collect();
    let h = ham.fields();
    let spins = SpinState::from_index(n, start);
    let mut field: Vec<f64> = (0..n).map(|i| h[i] + adj.coupling_field(i, spins.as_slice())).collect();
    let mut energy = ham.energy_of(spins.as_slice());
    let mut index = start;
    let (offsets, targets, weights) = adj.raw();
    let doubled: Vec<f64> = weights.iter().map(|w| 2.0 * w).collect();

    let mut out = BlockScan {
        best: f64::INFINITY,
        second: None,
        count: 0,
        heap: BinaryHeap::new(),
    };
    // The lowest `leaf` spins are never flipped. At each configuration of
    // the others, all their combinations are scored at once from their local
    // fields plus a precomputed pairwise correction.
    let leaf = low.min(LEAF_BITS);
    let combos = 1usize << leaf;
    let mut pair = vec![0.0; combos];
    for (c, p) in pair.iter_mut().enumerate() {
        for i in 0..leaf {
            for j in i + 1..leaf {
                if c >> i & 1 == 1 && c >> j & 1 == 1 {
                    *p += 4.0 * ham.coupling(i, j) * s[i] * s[j];
                }
            }
        }
    }
    let lo_bits = leaf / 2;
    let lo_len = 1usize << lo_bits;
    let hi_len = 1usize << (leaf - lo_bits);
    let mut candidates = [0.0f64; 1 << LEAF_BITS];
    let mut lo = [0.0f64; 1 << LEAF_BITS];
    let mut hi = [0.0f64; 1 << LEAF_BITS];
    for t in 0u64..(1u64 << (low - leaf)) {
        if t > 0 {
            let i = t.trailing_zeros() as usize + leaf;
            let si = s[i];
            energy -= 2.0 * si * field[i];
            for k in offsets[i]..offsets[i + 1] {
                field[targets[k]] -= doubled[k] * si;
            }
            s[i] = -si;
            index ^= 1 << i;
        }
        for c in 1..lo_len {
            let b = c.trailing_zeros() as usize;
            lo[c] = lo[c & (c - 1)] - 2.0 * s[b] * field[b];
        }
        for c in 1..hi_len {
            let b = c.trailing_zeros() as usize + lo_bits;
            hi[c] = hi[c & (c - 1)] - 2.0 * s[b] * field[b];
        }
        for (hc, &hv) in hi[..hi_len].iter().enumerate() {
            let base = hc * lo_len;
            let row = &mut candidates[base..base + lo_len];
            for ((cand, &lv), &pv) in row.iter_mut().zip(&lo[..lo_len]).zip(&pair[base..base + lo_len]) {
                *cand = energy + hv + lv + pv;
            }
        }
        // Independent accumulators keep the reduction off one dependency chain.
        let mut lanes = [f64::INFINITY; 4];
        for chunk in candidates[..combos].chunks(4) {
            for (m, &e) in lanes.iter_mut().zip(chunk) {
                *m = m.min(e);
            }
        }
        let min = lanes.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= out.best + tol {
            for (c, &e) in candidates[..combos].iter().enumerate() {
                out.visit(e, index ^ c as u64, cap, tol);
            }
        } else if out.second.is_none_or(|e1| min < e1 - tol) {
            out.second = Some(min);
        }
    }
    out
}

impl BlockScan {
    #[inline]
    fn visit(&mut self, energy: f64, index: u64, cap: usize, tol: f64) {
        if energy < self.best - tol {
            if self.best.is_finite() {
                self.second = Some(self.best);
            }
            self.best = energy;
            self.count = 1;
            self.heap.clear();
            push_capped(&mut self.heap, index, cap);
        } else if energy <= self.best + tol {
            self.count += 1;
            push_capped(&mut self.heap, index, cap);
        } else if self.second.is_none_or(|e1| energy < e1 - tol) {
            self.second = Some(energy);
        }
    }
}
