//! Intrinsic control error (ICE).
//!
//! Programmed weights are perturbed by independent zero-mean Gaussians:
//! `h'_u = h_u + N(0, sigma_h)` and `J'_uv = J_uv + N(0, sigma_J)`. The error
//! is on the hardware scale, so a problem scaled by `alpha` suffers relative
//! error amplified by `1/alpha`. For any fixed state the induced energy error
//! has standard deviation `sigma_E = sqrt(N sigma_h^2 + M sigma_J^2)`.
//!
//! The persistent component is drawn once per programming cycle (keyed by a
//! draw index); an optional transient component is redrawn per read.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::{Hamiltonian, SpinState};
use crate::rng::{self, StreamRng};

pub const V7_SIGMA_H: f64 = 0.050;
pub const V7_SIGMA_J: f64 = 0.035;
/// Energy tolerance at full size (N = 481, M = 1306).
pub const V7_SIGMA_E: f64 = 1.67;
pub const V7_QUBITS: usize = 481;
pub const V7_COUPLERS: usize = 1306;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IceModel {
    pub sigma_h: f64,
    pub sigma_j: f64,
    #[serde(default)]
    pub transient_sigma_h: f64,
    #[serde(default)]
    pub transient_sigma_j: f64,
    #[serde(default)]
    pub seed: u64,
    /// Fixed field offsets `(qubit, bias)` in the hardware frame. They are
    /// not affected by gauge transformations.
    #[serde(default)]
    pub systematic_h: Vec<(usize, f64)>,
}

impl Default for IceModel {
    fn default() -> Self {
        Self::v7(0)
    }
}

impl IceModel {
    pub fn new(sigma_h: f64, sigma_j: f64, seed: u64) -> Result<Self> {
        let model = Self {
            sigma_h,
            sigma_j,
            transient_sigma_h: 0.0,
            transient_sigma_j: 0.0,
            seed,
            systematic_h: Vec::new(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn v7(seed: u64) -> Self {
        Self::new(V7_SIGMA_H, V7_SIGMA_J, seed).expect("V7 parameters are valid")
    }

    pub fn noiseless(seed: u64) -> Self {
        Self::new(0.0, 0.0, seed).expect("zero noise is valid")
    }

    pub fn with_transient(mut self, sigma_h: f64, sigma_j: f64) -> Result<Self> {
        self.transient_sigma_h = sigma_h;
        self.transient_sigma_j = sigma_j;
        self.validate()?;
        Ok(self)
    }

    pub fn with_systematic_h(mut self, bias: Vec<(usize, f64)>) -> Self {
        self.systematic_h = bias;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_h", self.sigma_h),
            ("sigma_j", self.sigma_j),
            ("transient_sigma_h", self.transient_sigma_h),
            ("transient_sigma_j", self.transient_sigma_j),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn has_transient(&self) -> bool {
        self.transient_sigma_h > 0.0 || self.transient_sigma_j > 0.0
    }

    /// The persistent perturbation for programming cycle `draw_index`.
    ///
    /// Fields are perturbed only on participating vertices (those with a
    /// field or a coupling); isolated vertices are left alone. Perturbed
    /// weights are not clamped to `[-1, 1]`.
    pub fn perturb(&self, ham: &Hamiltonian, draw_index: u64) -> Hamiltonian {
        let mut rng = rng::stream(self.seed, &[rng::TAG_ICE, draw_index]);
        gaussian_perturbation(ham, self.sigma_h, self.sigma_j, &mut rng)
    }

    /// The per-read transient perturbation; identity when disabled.
    pub fn perturb_transient(&self, ham: &Hamiltonian, draw_index: u64, read: u64) -> Hamiltonian {
        if !self.has_transient() {
            return ham.clone();
        }
        let mut rng = rng::stream(self.seed, &[rng::TAG_ICE_TRANSIENT, draw_index, read]);
        gaussian_perturbation(ham, self.transient_sigma_h, self.transient_sigma_j, &mut rng)
    }

    /// What the chip holds after programming `ham` (already in the hardware
    /// frame): persistent Gaussian error plus the systematic field offsets.
    pub fn program(&self, ham: &Hamiltonian, draw_index: u64) -> Result<Hamiltonian> {
        let mut out = self.perturb(ham, draw_index);
        for &(q, bias) in &self.systematic_h {
            out.add_field(q, bias)?;
        }
        Ok(out)
    }

    /// `sigma_E` for `n` active qubits and `m` active couplers.
    pub fn sigma_e(&self, n: usize, m: usize) -> f64 {
        sigma_e(self.sigma_h, self.sigma_j, n, m)
    }
}

fn gaussian_perturbation(
    ham: &Hamiltonian,
    sigma_h: f64,
    sigma_j: f64,
    rng: &mut StreamRng,
) -> Hamiltonian {
    let mut out = ham.clone();
    if sigma_h == 0.0 && sigma_j == 0.0 {
        return out;
    }
    let active = ham.participating();
    for (u, &is_active) in active.iter().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        if is_active && sigma_h > 0.0 {
            out.add_field(u, sigma_h * z).expect("vertex in range");
        }
    }
    if sigma_j > 0.0 {
        for (u, v, _) in ham.couplings() {
            let z: f64 = StandardNormal.sample(rng);
            out.add_coupling(u, v, sigma_j * z).expect("coupler in range");
        }
    }
    out
}

/// `sigma_E = sqrt(N sigma_h^2 + M sigma_J^2)`.
pub fn sigma_e(sigma_h: f64, sigma_j: f64, n: usize, m: usize) -> f64 {
    (n as f64 * sigma_h * sigma_h + m as f64 * sigma_j * sigma_j).sqrt()
}

/// Size-scaled energy tolerance `1.67 sqrt(N / 481)`.
pub fn success_band(n: usize) -> f64 {
    V7_SIGMA_E * (n as f64 / V7_QUBITS as f64).sqrt()
}

/// `E'(s) - E(s)` for a perturbed Hamiltonian.
pub fn energy_error(nominal: &Hamiltonian, perturbed: &Hamiltonian, s: &SpinState) -> Result<f64> {
    Ok(perturbed.energy(s)? - nominal.energy(s)?)
}

/// Empirical maximum of `|E'(s) - E(s)|` over `states` random states for
/// each of `draws` persistent perturbations; returns the mean over draws.
pub fn max_energy_error_estimate(
    model: &IceModel,
    ham: &Hamiltonian,
    draws: u64,
    states: usize,
    seed: u64,
) -> f64 {
    let mut total = 0.0;
    for d in 0..draws {
        let perturbed = model.perturb(ham, d);
        let mut rng = rng::stream(seed, &[d]);
        let mut worst = 0.0_f64;
        for _ in 0..states {
            let s = SpinState::random(ham.n(), &mut rng);
            let e = perturbed.energy_of(s.as_slice()) - ham.energy_of(s.as_slice());
            worst = worst.max(e.abs());
        }
        total += worst;
    }
    total / draws.max(1) as f64
}
