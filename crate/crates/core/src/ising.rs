//! Ising problems: fields `h`, couplings `J`, spin states and gauge vectors.
//!
//! The energy of a state `s` is `sum_v h_v s_v + sum_{u<v} J_uv s_u s_v`.
//! Couplings are stored sparse and upper-triangular; adding `(v, u)` with
//! `v > u` folds into the `(u, v)` entry.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::ops::Index;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights whose magnitude is at most this far above 1 still count as
/// hardware-ready (absorbs rounding from `1/max * max`).
const UNIT_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n: usize,
    h: Vec<f64>,
    j: BTreeMap<(usize, usize), f64>,
    scale_alpha: Option<f64>,
}

impl Hamiltonian {
    /// A Hamiltonian on `n` spins with no fields and no couplings.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            h: vec![0.0; n],
            j: BTreeMap::new(),
            scale_alpha: None,
        }
    }

    pub fn from_terms<I>(h: Vec<f64>, couplings: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut ham = Self::new(h.len());
        ham.h = h;
        for (u, v, w) in couplings {
            ham.add_coupling(u, v, w)?;
        }
        Ok(ham)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fields(&self) -> &[f64] {
        &self.h
    }

    pub fn field(&self, u: usize) -> f64 {
        self.h[u]
    }

    pub fn set_field(&mut self, u: usize, value: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.h[u] = value;
        Ok(())
    }

    pub fn add_field(&mut self, u: usize, value: f64) -> Result<()> {
        self.check_vertex(u)?;
        self.h[u] += value;
        Ok(())
    }

    /// Adds `w` to the coupling between `u` and `v`, in either order.
    pub fn add_coupling(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        let key = self.key(u, v)?;
        *self.j.entry(key).or_insert(0.0) += w;
        Ok(())
    }

    pub fn set_coupling(&mut self, u: usize, v: usize, w: f64) -> Result<()> {
        let key = self.key(u, v)?;
        self.j.insert(key, w);
        Ok(())
    }

    /// Coupling between `u` and `v` (either order); 0 when absent.
    pub fn coupling(&self, u: usize, v: usize) -> f64 {
        let key = if u < v { (u, v) } else { (v, u) };
        self.j.get(&key).copied().unwrap_or(0.0)
    }

    /// Stored couplings as `(u, v, J_uv)` with `u < v`, in key order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.j.iter().map(|(&(u, v), &w)| (u, v, w))
    }

    pub fn num_couplings(&self) -> usize {
        self.j.len()
    }

    /// Edges of the interaction graph (stored couplings, including zeros).
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.j.keys().copied().collect()
    }

    /// Removes couplings whose weight is exactly zero.
    pub fn prune_zeros(&mut self) {
        self.j.retain(|_, w| *w != 0.0);
    }

    /// The scaling factor applied by [`Hamiltonian::scale_to_unit`] or
    /// [`Hamiltonian::scaled`], if any.
    pub fn scale_alpha(&self) -> Option<f64> {
        self.scale_alpha
    }

    pub fn max_abs_weight(&self) -> f64 {
        let hmax = self.h.iter().fold(0.0_f64, |m, w| m.max(w.abs()));
        self.j.values().fold(hmax, |m, w| m.max(w.abs()))
    }

    /// True when every weight lies in `[-1, 1]`.
    pub fn is_hardware_ready(&self) -> bool {
        self.max_abs_weight() <= 1.0 + UNIT_SLACK
    }

    pub fn has_zero_fields(&self) -> bool {
        self.h.iter().all(|&w| w == 0.0)
    }

    /// Vertices that carry a field or at least one coupling.
    pub fn participating(&self) -> Vec<bool> {
        let mut mask: Vec<bool> = self.h.iter().map(|&w| w != 0.0).collect();
        for &(u, v) in self.j.keys() {
            mask[u] = true;
            mask[v] = true;
        }
        mask
    }

    pub fn energy(&self, s: &SpinState) -> Result<f64> {
        if s.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: s.len(),
            });
        }
        Ok(self.energy_of(s.as_slice()))
    }

    /// Energy of a raw spin slice; the caller guarantees the length.
    pub(crate) fn energy_of(&self, s: &[i8]) -> f64 {
        let mut e = 0.0;
        for (hv, &sv) in self.h.iter().zip(s) {
            e += hv * f64::from(sv);
        }
        for (&(u, v), &w) in &self.j {
            e += w * f64::from(s[u] * s[v]);
        }
        e
    }

    /// `h'_u = h_u g_u`, `J'_uv = J_uv g_u g_v`.
    pub fn apply_gauge(&self, g: &GaugeVector) -> Result<Self> {
        if g.len() != self.n {
            return Err(Error::Dimension {
                expected: self.n,
                got: g.len(),
            });
        }
        let gs = g.as_slice();
        let h = self
            .h
            .iter()
            .zip(gs)
            .map(|(w, &gu)| w * f64::from(gu))
            .collect();
        let j = self
            .j
            .iter()
            .map(|(&(u, v), &w)| ((u, v), w * f64::from(gs[u] * gs[v])))
            .collect();
        Ok(Self {
            n: self.n,
            h,
            j,
            scale_alpha: self.scale_alpha,
        })
    }

    /// Multiplies every weight by `factor > 0`, accumulating it into
    /// `scale_alpha`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "scale factor must be positive and finite, got {factor}"
            )));
        }
        Ok(Self {
            n: self.n,
            h: self.h.iter().map(|w| w * factor).collect(),
            j: self.j.iter().map(|(&k, &w)| (k, w * factor)).collect(),
            scale_alpha: Some(self.scale_alpha.unwrap_or(1.0) * factor),
        })
    }

    /// Divides every weight by `divisor`. Integer weights divided by their
    /// precision limit land exactly on +-1, which multiplying by the
    /// reciprocal does not guarantee.
    pub fn divided(&self, divisor: f64) -> Result<Self> {
        let mut out = self.scaled(1.0 / divisor)?;
        for (o, w) in out.h.iter_mut().zip(&self.h) {
            *o = w / divisor;
        }
        for (k, o) in out.j.iter_mut() {
            *o = self.j[k] / divisor;
        }
        Ok(out)
    }

    /// Scales by `alpha = 1 / max(|h|_inf, |J|_inf)` so the largest weight
    /// sits at exactly +-1.
    pub fn scale_to_unit(&self) -> Result<Self> {
        let max = self.max_abs_weight();
        if max == 0.0 {
            return Err(Error::Degenerate(
                "cannot scale a Hamiltonian whose weights are all zero".into(),
            ));
        }
        let alpha = 1.0 / max;
        let mut out = Self {
            n: self.n,
            h: self.h.iter().map(|w| w * alpha).collect(),
            j: self.j.iter().map(|(&k, &w)| (k, w * alpha)).collect(),
            scale_alpha: Some(self.scale_alpha.unwrap_or(1.0) * alpha),
        };
        // Pin the extreme weights to exactly +-1 so hardware-readiness holds
        // without slack.
        for w in out.h.iter_mut().chain(out.j.values_mut()) {
            if (w.abs() - 1.0).abs() < 1e-12 {
                *w = w.signum();
            }
        }
        Ok(out)
    }

    /// Restriction to the vertices in `keep` (in the given order); returns
    /// the relabelled Hamiltonian. Couplings to dropped vertices vanish.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let mut index = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            self.check_vertex(old)?;
            index[old] = new;
        }
        let mut out = Self::new(keep.len());
        for (new, &old) in keep.iter().enumerate() {
            out.h[new] = self.h[old];
        }
        for (&(u, v), &w) in &self.j {
            if index[u] != usize::MAX && index[v] != usize::MAX {
                out.add_coupling(index[u], index[v], w)?;
            }
        }
        out.scale_alpha = self.scale_alpha;
        Ok(out)
    }

    /// Serializes to the problem text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.n);
        if let Some(alpha) = self.scale_alpha {
            let _ = writeln!(out, "# alpha {alpha}");
        }
        for (u, &w) in self.h.iter().enumerate() {
            if w != 0.0 {
                let _ = writeln!(out, "{u} {u} {w}");
            }
        }
        for (&(u, v), &w) in &self.j {
            let _ = writeln!(out, "{u} {v} {w}");
        }
        out
    }

    /// Parses the problem text format: a header line `n`, then `u u h_u`
    /// and `u v J_uv` lines. Blank lines and `#` comments are ignored,
    /// except `# alpha <value>` which restores the recorded scale factor.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut ham: Option<Self> = None;
        let mut alpha = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                let mut parts = comment.split_whitespace();
                if parts.next() == Some("alpha") {
                    let value = parts
                        .next()
                        .ok_or_else(|| Error::parse(line_no, "missing alpha value"))?;
                    alpha = Some(
                        value
                            .parse::<f64>()
                            .map_err(|e| Error::parse(line_no, format!("bad alpha: {e}")))?,
                    );
                }
                continue;
            }
            let tokens: Vec<&str> = line.split_whitespace().collect();
            match ham.as_mut() {
                None => {
                    if tokens.len() != 1 {
                        return Err(Error::parse(line_no, "expected header line `n`"));
                    }
                    let n = tokens[0]
                        .parse::<usize>()
                        .map_err(|e| Error::parse(line_no, format!("bad vertex count: {e}")))?;
                    ham = Some(Self::new(n));
                }
                Some(h) => {
                    if tokens.len() != 3 {
                        return Err(Error::parse(
                            line_no,
                            format!("expected `u v weight`, found {} fields", tokens.len()),
                        ));
                    }
                    let u = parse_index(tokens[0], line_no)?;
                    let v = parse_index(tokens[1], line_no)?;
                    let w = tokens[2]
                        .parse::<f64>()
                        .map_err(|e| Error::parse(line_no, format!("bad weight: {e}")))?;
                    if !w.is_finite() {
                        return Err(Error::parse(line_no, "weight must be finite"));
                    }
                    let res = if u == v {
                        h.add_field(u, w)
                    } else {
                        h.add_coupling(u, v, w)
                    };
                    res.map_err(|e| Error::parse(line_no, e.to_string()))?;
                }
            }
        }
        let mut ham = ham.ok_or_else(|| Error::parse(1, "empty problem file"))?;
        ham.scale_alpha = alpha;
        Ok(ham)
    }

    fn check_vertex(&self, u: usize) -> Result<()> {
        if u >= self.n {
            return Err(Error::Validation(format!(
                "vertex {u} out of range for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    fn key(&self, u: usize, v: usize) -> Result<(usize, usize)> {
        if u == v {
            return Err(Error::Validation(format!("self-coupling on vertex {u}")));
        }
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        Ok(if u < v { (u, v) } else { (v, u) })
    }
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|e| Error::parse(line, format!("bad vertex index `{token}`: {e}")))
}

/// Compressed adjacency of a Hamiltonian's couplings, for local-field
/// updates in samplers and searches.
#[derive(Clone, Debug)]
pub struct Adjacency {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl Adjacency {
    pub fn new(ham: &Hamiltonian) -> Self {
        let n = ham.n();
        let mut degree = vec![0usize; n];
        for (u, v, _) in ham.couplings() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let total = *offsets.last().unwrap();
        let mut targets = vec![0; total];
        let mut weights = vec![0.0; total];
        let mut cursor = offsets[..n].to_vec();
        for (u, v, w) in ham.couplings() {
            targets[cursor[u]] = v;
            weights[cursor[u]] = w;
            cursor[u] += 1;
            targets[cursor[v]] = u;
            weights[cursor[v]] = w;
            cursor[v] += 1;
        }
        Self {
            offsets,
            targets,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[u]..self.offsets[u + 1];
        self.targets[range.clone()]
            .iter()
            .copied()
            .zip(self.weights[range].iter().copied())
    }

    pub(crate) fn raw(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    /// `sum_v J_uv s_v`.
    #[inline]
    pub fn coupling_field(&self, u: usize, s: &[i8]) -> f64 {
        let mut f = 0.0;
        for k in self.offsets[u]..self.offsets[u + 1] {
            f += self.weights[k] * f64::from(s[self.targets[k]]);
        }
        f
    }
}

/// A spin configuration; every entry is -1 or +1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinState(Vec<i8>);

impl TryFrom<Vec<i8>> for SpinState {
    type Error = Error;

    fn try_from(spins: Vec<i8>) -> Result<Self> {
        Self::new(spins)
    }
}

impl From<SpinState> for Vec<i8> {
    fn from(s: SpinState) -> Self {
        s.0
    }
}

impl SpinState {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        validate_signs(&spins)?;
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    /// Decodes a state index: bit `i` set means spin `i` is -1.
    pub fn from_index(n: usize, index: u64) -> Self {
        Self((0..n).map(|i| if index >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<i8> {
        self.0
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = -self.0[i];
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }

    /// Number of positions where the two states differ.
    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }

    pub(crate) fn from_vec_unchecked(spins: Vec<i8>) -> Self {
        debug_assert!(spins.iter().all(|&s| s == 1 || s == -1));
        Self(spins)
    }
}

impl Index<usize> for SpinState {
    type Output = i8;

    fn index(&self, i: usize) -> &i8 {
        &self.0[i]
    }
}

/// A gauge (spin-reversal) vector in `{-1, +1}^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GaugeVector(Vec<i8>);

impl GaugeVector {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        validate_signs(&signs)?;
        Ok(Self(signs))
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&g| g == 1)
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }
}

/// Elementwise product `g_u s_u`. Applying the same gauge twice is the
/// identity.
pub fn gauge_state(g: &GaugeVector, s: &SpinState) -> Result<SpinState> {
    if g.len() != s.len() {
        return Err(Error::Dimension {
            expected: g.len(),
            got: s.len(),
        });
    }
    Ok(SpinState(
        g.0.iter().zip(&s.0).map(|(&a, &b)| a * b).collect(),
    ))
}

fn validate_signs(v: &[i8]) -> Result<()> {
    if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| x != 1 && x != -1) {
        return Err(Error::InvalidSpin {
            index,
            value: i64::from(value),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spins(v: &[i8]) -> SpinState {
        SpinState::new(v.to_vec()).unwrap()
    }

    fn random_ham(n: usize, seed: u64) -> Hamiltonian {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = (0..n).map(|_| rng.random_range(-2..=2) as f64).collect();
        let mut ham = Hamiltonian::from_terms(h, []).unwrap();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.5) {
                    ham.add_coupling(u, v, rng.random_range(-3..=3) as f64).unwrap();
                }
            }
        }
        ham
    }

    fn all_states(n: usize) -> impl Iterator<Item = SpinState> {
        (0..1u64 << n).map(move |i| SpinState::from_index(n, i))
    }

    #[test]
    fn energy_of_empty_hamiltonian_is_zero() {
        let ham = Hamiltonian::new(4);
        assert_eq!(ham.energy(&spins(&[1, -1, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn ferromagnetic_pair() {
        let ham = Hamiltonian::from_terms(vec![0.0, 0.0], [(0, 1, -1.0)]).unwrap();
        assert_eq!(ham.energy(&spins(&[1, 1])).unwrap(), -1.0);
        assert_eq!(ham.energy(&spins(&[1, -1])).unwrap(), 1.0);
    }

    #[test]
    fn antiferromagnetic_triangle_minimum() {
        let ham =
            Hamiltonian::from_terms(vec![0.0; 3], [(0, 1, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(ham.energy(&spins(&[1, 1, -1])).unwrap(), -1.0);
        let min = all_states(3)
            .map(|s| ham.energy(&s).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert_eq!(min, -1.0);
    }

    #[test]
    fn energy_rejects_wrong_length() {
        let ham = Hamiltonian::new(3);
        assert!(matches!(
            ham.energy(&spins(&[1, 1])),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }

    #[test]
    fn symmetric_input_folds_into_upper_triangle() {
        let ham = Hamiltonian::from_terms(vec![0.0; 3], [(0, 2, 1.5), (2, 0, 0.5)]).unwrap();
        assert_eq!(ham.couplings().collect::<Vec<_>>(), vec![(0, 2, 2.0)]);
        assert!(Hamiltonian::from_terms(vec![0.0; 3], [(1, 1, 1.0)]).is_err());
        assert!(Hamiltonian::from_terms(vec![0.0; 3], [(1, 3, 1.0)]).is_err());
    }

    #[test]
    fn spin_and_gauge_validation() {
        assert!(SpinState::new(vec![1, 0]).is_err());
        assert!(GaugeVector::new(vec![2]).is_err());
    }

    #[test]
    fn identity_gauge_is_identity() {
        let ham = random_ham(6, 1);
        assert_eq!(ham.apply_gauge(&GaugeVector::identity(6)).unwrap(), ham);
    }

    #[test]
    fn gauge_direct_substitution() {
        let ham = Hamiltonian::from_terms(vec![1.0, 0.0], [(0, 1, -1.0)]).unwrap();
        let g = GaugeVector::new(vec![-1, 1]).unwrap();
        let out = ham.apply_gauge(&g).unwrap();
        assert_eq!(out.fields(), &[-1.0, 0.0]);
        assert_eq!(out.coupling(0, 1), 1.0);
        assert!(ham.apply_gauge(&GaugeVector::identity(3)).is_err());
    }

    #[test]
    fn gauge_state_special_cases() {
        let s = spins(&[1, -1, -1, 1]);
        assert_eq!(gauge_state(&GaugeVector::identity(4), &s).unwrap(), s);
        let minus = GaugeVector::new(vec![-1; 4]).unwrap();
        assert_eq!(gauge_state(&minus, &s).unwrap(), s.negated());
        assert!(gauge_state(&minus, &spins(&[1])).is_err());
    }

    #[test]
    fn gauge_preserves_energy_exhaustively() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for seed in 0..20 {
            let n = 2 + (seed as usize % 9);
            let ham = random_ham(n, seed);
            let g = GaugeVector::random(n, &mut rng);
            let gauged = ham.apply_gauge(&g).unwrap();
            for s in all_states(n) {
                let t = gauge_state(&g, &s).unwrap();
                assert_eq!(gauged.energy(&t).unwrap(), ham.energy(&s).unwrap());
            }
        }
    }

    #[test]
    fn scale_to_unit_examples() {
        let mut ham = Hamiltonian::new(3);
        ham.add_coupling(0, 1, 3.0).unwrap();
        ham.add_coupling(1, 2, -2.0).unwrap();
        let scaled = ham.scale_to_unit().unwrap();
        assert!((scaled.scale_alpha().unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!(scaled.is_hardware_ready());
        assert_eq!(scaled.coupling(0, 1), 1.0);

        let unit = Hamiltonian::from_terms(vec![0.5, -1.0], [(0, 1, 0.25)]).unwrap();
        let same = unit.scale_to_unit().unwrap();
        assert_eq!(same.scale_alpha(), Some(1.0));
        assert_eq!(same.fields(), unit.fields());
        assert_eq!(same.coupling(0, 1), 0.25);

        let six = Hamiltonian::from_terms(vec![0.0, 0.0], [(0, 1, -6.0)]).unwrap();
        let s6 = six.scale_to_unit().unwrap();
        assert!((s6.scale_alpha().unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(s6.coupling(0, 1), -1.0);

        assert!(matches!(
            Hamiltonian::new(3).scale_to_unit(),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn scaling_preserves_ground_states() {
        for seed in 0..10 {
            let ham = random_ham(8, seed + 100);
            if ham.max_abs_weight() == 0.0 {
                continue;
            }
            let scaled = ham.scale_to_unit().unwrap();
            let ground = |hm: &Hamiltonian| {
                let energies: Vec<f64> = all_states(8).map(|s| hm.energy(&s).unwrap()).collect();
                let min = energies.iter().cloned().fold(f64::INFINITY, f64::min);
                energies
                    .iter()
                    .enumerate()
                    .filter(|(_, &e)| (e - min).abs() < 1e-9)
                    .map(|(i, _)| i)
                    .collect::<Vec<_>>()
            };
            assert_eq!(ground(&ham), ground(&scaled));
        }
    }

    #[test]
    fn integer_weights_separate_energies_by_two() {
        for seed in 0..10 {
            let ham = random_ham(7, seed + 200);
            let mut energies: Vec<i64> = all_states(7)
                .map(|s| ham.energy(&s).unwrap() as i64)
                .collect();
            energies.sort_unstable();
            energies.dedup();
            for w in energies.windows(2) {
                assert!(w[1] - w[0] >= 2, "{energies:?}");
            }
        }
    }

    #[test]
    fn text_round_trip_and_errors() {
        let mut ham = Hamiltonian::from_terms(vec![0.5, 0.0, -0.125], [(0, 1, -1.0), (1, 2, 0.3)])
            .unwrap()
            .scaled(0.5)
            .unwrap();
        ham.prune_zeros();
        let text = ham.to_text();
        assert_eq!(Hamiltonian::from_text(&text).unwrap(), ham);

        let err = Hamiltonian::from_text("3\n0 1 1.0\n1 2 x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = Hamiltonian::from_text("2\n0 5 1.0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Hamiltonian::from_text("").is_err());
    }

    #[test]
    fn restrict_relabels() {
        let ham = Hamiltonian::from_terms(vec![1.0, 2.0, 3.0], [(0, 2, -1.0), (0, 1, 4.0)]).unwrap();
        let r = ham.restrict(&[2, 0]).unwrap();
        assert_eq!(r.fields(), &[3.0, 1.0]);
        assert_eq!(r.coupling(0, 1), -1.0);
        assert_eq!(r.num_couplings(), 1);
    }

    #[test]
    fn adjacency_matches_energy_difference() {
        let ham = random_ham(9, 7);
        let adj = Adjacency::new(&ham);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = SpinState::random(9, &mut rng);
        for i in 0..9 {
            let mut t = s.clone();
            t.flip(i);
            let delta = ham.energy(&t).unwrap() - ham.energy(&s).unwrap();
            let local = -2.0
                * f64::from(s[i])
                * (ham.field(i) + adj.coupling_field(i, s.as_slice()));
            assert!((delta - local).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn gauge_state_is_an_involution(bits in proptest::collection::vec(any::<bool>(), 1..40),
                                        gbits in proptest::collection::vec(any::<bool>(), 40)) {
            let n = bits.len();
            let s = SpinState::new(bits.iter().map(|&b| if b { 1 } else { -1 }).collect()).unwrap();
            let g = GaugeVector::new(gbits[..n].iter().map(|&b| if b { 1 } else { -1 }).collect()).unwrap();
            let twice = gauge_state(&g, &gauge_state(&g, &s).unwrap()).unwrap();
            prop_assert_eq!(twice, s);
        }

        #[test]
        fn text_format_round_trips(weights in proptest::collection::vec(-1000i32..1000, 1..30)) {
            let n = weights.len();
            let mut ham = Hamiltonian::new(n);
            for (i, w) in weights.iter().enumerate() {
                let w = f64::from(*w) / 8.0;
                if i % 2 == 0 {
                    ham.set_field(i, w).unwrap();
                } else {
                    ham.add_coupling(i - 1, i, w).unwrap();
                }
            }
            ham.prune_zeros();
            prop_assert_eq!(Hamiltonian::from_text(&ham.to_text()).unwrap(), ham);
        }
    }
}
