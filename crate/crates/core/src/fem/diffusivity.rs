use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frequencies of the four diffusivity modes.
pub const MODE_FREQUENCIES: [f64; 4] = [1.72, 4.05, 6.85, 9.82];

/// Coefficients `ω ∈ [-3, 3]⁴` of the log-diffusivity expansion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct DiffusivityParams {
    omega: [f64; 4],
}

impl TryFrom<[f64; 4]> for DiffusivityParams {
    type Error = Error;

    fn try_from(omega: [f64; 4]) -> Result<Self> {
        Self::new(omega)
    }
}

impl From<DiffusivityParams> for [f64; 4] {
    fn from(p: DiffusivityParams) -> Self {
        p.omega
    }
}

impl DiffusivityParams {
    pub fn new(omega: [f64; 4]) -> Result<Self> {
        if omega.iter().any(|w| !(-3.0..=3.0).contains(w)) {
            return Err(Error::Domain(format!("omega {omega:?} outside [-3, 3]^4")));
        }
        Ok(Self { omega })
    }

    /// `ω` drawn uniformly from the box.
    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self { omega: [(); 4].map(|_| rng.gen_range(-3.0..=3.0)) }
    }

    pub fn omega(&self) -> [f64; 4] {
        self.omega
    }
}

/// `λ_i = 1 / (1 + a_i² / 4)`.
pub fn mode_weight(i: usize) -> f64 {
    let a = MODE_FREQUENCIES[i];
    1.0 / (1.0 + 0.25 * a * a)
}

/// `ξ_i(t) = (a_i/2) cos(a_i t) + sin(a_i t)`; the same profile is used in `y`.
pub fn mode_profile(i: usize, t: f64) -> f64 {
    let a = MODE_FREQUENCIES[i];
    0.5 * a * (a * t).cos() + (a * t).sin()
}

/// `ν(x, y) = exp(Σ ω_i λ_i ξ_i(x) η_i(y))`.
pub fn diffusivity_field(params: &DiffusivityParams, x: f64, y: f64) -> f64 {
    (0..4).map(|i| params.omega[i] * mode_weight(i) * mode_profile(i, x) * mode_profile(i, y)).sum::<f64>().exp()
}
