use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Result};
use crate::grid::{Grid2D, SpectralField2D};

use super::{curl, PhysicsParams, SimState};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    Zero,
    /// `u = (−sin x₂, sin x₁)`, `b = s(−sin x₂, sin 2x₁)`.
    OrszagTang {
        amplitude: f64,
    },
    /// `ω = j = A cos x₁`, an exact decaying solution.
    SingleMode {
        amplitude: f64,
    },
    /// Random phases with energy spectrum `E(k) ∝ k⁴ e^{−2(k/k₀)²}`.
    Random {
        seed: u64,
        energy: f64,
        k0: f64,
    },
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid2D, params: PhysicsParams) -> Result<SimState> {
        match *self {
            Self::Zero => Ok(SimState::zero(grid, params)),
            Self::OrszagTang { amplitude } => orszag_tang(grid, params, amplitude),
            Self::SingleMode { amplitude } => single_mode(grid, params, amplitude),
            Self::Random { seed, energy, k0 } => random_state(grid, params, seed, energy, k0),
        }
    }
}

/// The Orszag-Tang vortex; the curls are taken spectrally from the sampled fields.
pub fn orszag_tang(grid: &Grid2D, params: PhysicsParams, amplitude: f64) -> Result<SimState> {
    let u1 = SpectralField2D::from_fn(grid, |_, y| -y.sin());
    let u2 = SpectralField2D::from_fn(grid, |x, _| x.sin());
    let b1 = SpectralField2D::from_fn(grid, |_, y| -amplitude * y.sin());
    let b2 = SpectralField2D::from_fn(grid, |x, _| amplitude * (2.0 * x).sin());
    SimState::new(curl(&u1, &u2)?, curl(&b1, &b2)?, params)
}

/// A shear flow with aligned field, for which every nonlinear term vanishes.
pub fn single_mode(grid: &Grid2D, params: PhysicsParams, amplitude: f64) -> Result<SimState> {
    let w = SpectralField2D::from_fn(grid, |x, _| amplitude * x.cos());
    SimState::new(w.clone(), w, params)
}

/// Random vorticity and current with total energy `energy`.
///
/// `ω` and `j` draw from streams 0 and 1 of a ChaCha8 generator seeded with
/// `seed`, over the integer modes `|k_i| ≤ ⌈3k₀⌉`; the same seed yields the
/// same fields on every grid that retains those modes.
pub fn random_state(
    grid: &Grid2D,
    params: PhysicsParams,
    seed: u64,
    energy: f64,
    k0: f64,
) -> Result<SimState> {
    if !(k0 > 0.0) || !(energy >= 0.0) {
        return Err(invalid("random data needs k0 > 0 and energy >= 0"));
    }
    let kmax = (3.0 * k0).ceil() as i64;
    if !grid.keeps_mode(kmax) {
        return Err(invalid(format!(
            "random data with k0 = {k0} needs modes up to {kmax}, beyond the retained band of n = {}",
            grid.n()
        )));
    }
    // |ω̂(k)| = k |û(k)| with E(k) ≈ π k |û(k)|².
    let weight = |r: f64| r.powf(2.5) * (-(r / k0).powi(2)).exp();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(0);
    let w = SpectralField2D::random_band_limited(grid, kmax, &mut rng, weight);
    rng.set_stream(1);
    rng.set_word_pos(0);
    let j = SpectralField2D::random_band_limited(grid, kmax, &mut rng, weight);
    let state = SimState::new(w, j, params)?;
    let (u1, u2) = state.velocity();
    let (b1, b2) = state.magnetic();
    let e = 0.5 * (u1.l2_norm_sq() + u2.l2_norm_sq() + b1.l2_norm_sq() + b2.l2_norm_sq());
    let scale = if e > 0.0 { (energy / e).sqrt() } else { 0.0 };
    Ok(SimState {
        omega: state.omega.scaled(scale),
        current: state.current.scaled(scale),
        ..state
    })
}
