//! Vorticity-current evolution on the periodic torus.
//!
//! The state is `(ω̂, ĵ)`, kept inside the 2/3-rule band so that every
//! quadratic product below is computed without aliasing. Linear dissipation
//! is propagated exactly through integrating factors; the nonlinear terms
//! are advanced with classical fourth-order Runge-Kutta.

mod diagnostics;
mod init;
mod run;

pub use diagnostics::{DiagConfig, DiagRecord, Diagnostics};
pub use init::{orszag_tang, random_state, single_mode, InitialCondition};
pub use run::{simulate, NoopObserver, Observer, RunControl, StepControl};

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid2D, SpectralField2D};
use crate::symbols::GFunction;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Switches for the individual terms of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Terms {
    pub nonlinear: bool,
    pub velocity_dissipation: bool,
    pub magnetic_diffusion: bool,
}

impl Default for Terms {
    fn default() -> Self {
        Self {
            nonlinear: true,
            velocity_dissipation: true,
            magnetic_diffusion: true,
        }
    }
}

impl Terms {
    /// Both dissipations off.
    pub fn inviscid() -> Self {
        Self {
            nonlinear: true,
            velocity_dissipation: false,
            magnetic_diffusion: false,
        }
    }

    /// Nonlinear terms off.
    pub fn linear() -> Self {
        Self {
            nonlinear: false,
            ..Self::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicsParams {
    /// Power of the velocity dissipation `Λ^{2α}`.
    pub alpha: f64,
    /// Weight of the magnetic diffusion `𝓛`, symbol `|ξ|²/g`.
    pub g: GFunction,
    pub terms: Terms,
}

impl PhysicsParams {
    pub fn new(alpha: f64, g: GFunction) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self {
            alpha,
            g,
            terms: Terms::default(),
        })
    }

    pub fn with_terms(mut self, terms: Terms) -> Self {
        self.terms = terms;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub t: f64,
    /// Vorticity `ω = ∂₁u₂ − ∂₂u₁`.
    pub omega: SpectralField2D,
    /// Current `j = ∂₁b₂ − ∂₂b₁`.
    pub current: SpectralField2D,
    pub params: PhysicsParams,
    pub step_count: u64,
}

impl SimState {
    /// A state at `t = 0`. Both fields are projected onto the zero-mean,
    /// 2/3-truncated band the solver works in.
    pub fn new(
        omega: SpectralField2D,
        current: SpectralField2D,
        params: PhysicsParams,
    ) -> Result<Self> {
        if omega.grid() != current.grid() {
            return Err(Error::GridMismatch);
        }
        Ok(Self {
            t: 0.0,
            omega: omega.dealiased().without_mean(),
            current: current.dealiased().without_mean(),
            params,
            step_count: 0,
        })
    }

    pub fn zero(grid: &Grid2D, params: PhysicsParams) -> Self {
        Self {
            t: 0.0,
            omega: SpectralField2D::zeros(grid),
            current: SpectralField2D::zeros(grid),
            params,
            step_count: 0,
        }
    }

    pub fn grid(&self) -> &Grid2D {
        self.omega.grid()
    }

    pub fn velocity(&self) -> (SpectralField2D, SpectralField2D) {
        biot_savart(&self.omega)
    }

    pub fn magnetic(&self) -> (SpectralField2D, SpectralField2D) {
        biot_savart(&self.current)
    }

    fn is_finite(&self) -> bool {
        self.omega
            .coeffs()
            .iter()
            .chain(self.current.coeffs())
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Recovers the divergence-free field with curl `ω`:
/// `v̂ = -i ξ^⊥ ω̂ / |ξ|²` with `ξ^⊥ = (−ξ₂, ξ₁)`, and `v̂(0) = 0`.
pub fn biot_savart(omega: &SpectralField2D) -> (SpectralField2D, SpectralField2D) {
    let grid = omega.grid();
    let n = grid.n();
    let mut v1 = vec![ZERO; n * n];
    let mut v2 = vec![ZERO; n * n];
    for i2 in 0..n {
        let k2 = grid.wavenumber(i2);
        for i1 in 0..n {
            let k1 = grid.wavenumber(i1);
            let k_sq = k1 * k1 + k2 * k2;
            if k_sq == 0.0 {
                continue;
            }
            let w = omega.coeffs()[i2 * n + i1] / k_sq;
            v1[i2 * n + i1] = Complex64::new(0.0, k2) * w;
            v2[i2 * n + i1] = Complex64::new(0.0, -k1) * w;
        }
    }
    (
        SpectralField2D::from_coeffs(grid, v1).expect("grid shape"),
        SpectralField2D::from_coeffs(grid, v2).expect("grid shape"),
    )
}

/// `∂₁v₂ − ∂₂v₁`.
pub fn curl(v1: &SpectralField2D, v2: &SpectralField2D) -> Result<SpectralField2D> {
    v2.derivative(crate::grid::Axis::X1)
        .sub(&v1.derivative(crate::grid::Axis::X2))
}

/// Largest `|iξ·v̂|` over the lattice.
pub fn divergence_defect(v1: &SpectralField2D, v2: &SpectralField2D) -> f64 {
    let grid = v1.grid();
    let n = grid.n();
    let mut worst = 0.0f64;
    for i2 in 0..n {
        let k2 = grid.wavenumber(i2);
        for i1 in 0..n {
            let k1 = grid.wavenumber(i1);
            let idx = i2 * n + i1;
            let d = v1.coeffs()[idx] * k1 + v2.coeffs()[idx] * k2;
            worst = worst.max(d.norm());
        }
    }
    worst
}

/// Physical fields entering the nonlinear terms, all on the grid.
pub(crate) struct Physical {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    /// `∂₁u₁`.
    pub d1u1: Vec<f64>,
    /// `∂₂u₁ + ∂₁u₂`.
    pub su: Vec<f64>,
    /// `∂₁b₁`; `∂₂b₂ = −∂₁b₁`.
    pub d1b1: Vec<f64>,
    pub d2b1: Vec<f64>,
    pub d1b2: Vec<f64>,
    pub omega: Vec<f64>,
}

impl Physical {
    /// `T(∇u, ∇b) = 2∂₁b₁(∂₂u₁+∂₁u₂) − 2∂₁u₁(∂₂b₁+∂₁b₂)` at grid point `i`.
    #[inline]
    pub fn stretching(&self, i: usize) -> f64 {
        2.0 * self.d1b1[i] * self.su[i] - 2.0 * self.d1u1[i] * (self.d2b1[i] + self.d1b2[i])
    }

    /// `|∇b|` at grid point `i`, all four components.
    #[inline]
    pub fn grad_b(&self, i: usize) -> f64 {
        let a = self.d1b1[i];
        (2.0 * a * a + self.d2b1[i] * self.d2b1[i] + self.d1b2[i] * self.d1b2[i]).sqrt()
    }

    pub fn max_speed(&self) -> f64 {
        (0..self.u1.len())
            .map(|i| {
                (self.u1[i] * self.u1[i] + self.u2[i] * self.u2[i]).sqrt()
                    + (self.b1[i] * self.b1[i] + self.b2[i] * self.b2[i]).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Per-wavenumber tables shared by every step on one grid.
pub struct Solver {
    grid: Grid2D,
    params: PhysicsParams,
    k1: Vec<f64>,
    k2: Vec<f64>,
    inv_k_sq: Vec<f64>,
    mask: Vec<bool>,
    /// Active linear rates; zero where a dissipation is switched off.
    rate_u: Vec<f64>,
    rate_b: Vec<f64>,
    /// `|ξ|^{2α}` and `|ξ|²/g` regardless of the switches.
    sym_u: Vec<f64>,
    sym_b: Vec<f64>,
    diag_q: f64,
}

/// Stage integrals accumulated over one step.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepIncrements {
    /// `∫ (‖Λ^α u‖² + ‖𝓛^{1/2} b‖²) dt` with the active rates.
    pub dissipation: f64,
    /// `∫ ‖∇j‖_{L^q} dt`.
    pub grad_j_lq: f64,
    /// `∫ ‖∇b‖_{L^∞} dt`.
    pub grad_b_linf: f64,
}

pub struct StepOutcome {
    pub state: SimState,
    pub dt: f64,
    pub increments: StepIncrements,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DtPolicy {
    Fixed(f64),
    /// `dt = min(cfl · Δx / max(|u|+|b|), dt_max, remaining)`.
    Cfl {
        cfl: f64,
        dt_max: f64,
        remaining: f64,
    },
}

struct StageValues {
    dissipation: f64,
    grad_j_lq: f64,
    grad_b_linf: f64,
}

impl Solver {
    /// `q` is the Lebesgue exponent of the time-integrated `‖∇j‖_{L^q}`.
    pub fn new(grid: &Grid2D, params: PhysicsParams, q: f64) -> Result<Self> {
        if !(q >= 1.0) {
            return Err(invalid(format!(
                "diagnostic exponent q must be >= 1, got {q}"
            )));
        }
        let n = grid.n();
        let mut k1 = Vec::with_capacity(n * n);
        let mut k2 = Vec::with_capacity(n * n);
        for i2 in 0..n {
            for i1 in 0..n {
                k1.push(grid.wavenumber(i1));
                k2.push(grid.wavenumber(i2));
            }
        }
        let k_sq: Vec<f64> = k1.iter().zip(&k2).map(|(a, b)| a * a + b * b).collect();
        let inv_k_sq = k_sq
            .iter()
            .map(|&k| if k == 0.0 { 0.0 } else { 1.0 / k })
            .collect();
        let sym_u: Vec<f64> = k_sq.iter().map(|&k| k.powf(params.alpha)).collect();
        let sym_b: Vec<f64> = k_sq.iter().map(|&k| k / params.g.eval(k.sqrt())).collect();
        let rate_u = if params.terms.velocity_dissipation {
            sym_u.clone()
        } else {
            vec![0.0; n * n]
        };
        let rate_b = if params.terms.magnetic_diffusion {
            sym_b.clone()
        } else {
            vec![0.0; n * n]
        };
        Ok(Self {
            grid: grid.clone(),
            params,
            k1,
            k2,
            inv_k_sq,
            mask: grid.dealias_mask(),
            rate_u,
            rate_b,
            sym_u,
            sym_b,
            diag_q: q,
        })
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn params(&self) -> &PhysicsParams {
        &self.params
    }

    pub fn diag_q(&self) -> f64 {
        self.diag_q
    }

    pub(crate) fn symbols(&self) -> (&[f64], &[f64]) {
        (&self.sym_u, &self.sym_b)
    }

    pub(crate) fn rates(&self) -> (&[f64], &[f64]) {
        (&self.rate_u, &self.rate_b)
    }

    pub(crate) fn inv_k_sq(&self) -> &[f64] {
        &self.inv_k_sq
    }

    fn check_state(&self, state: &SimState) -> Result<()> {
        if state.grid() != &self.grid || state.current.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// All physical fields needed by the nonlinear terms, via seven paired transforms.
    pub(crate) fn physical(&self, w: &[Complex64], j: &[Complex64]) -> Physical {
        let len = w.len();
        let mut modes: [Vec<Complex64>; 14] = std::array::from_fn(|_| vec![ZERO; len]);
        for i in 0..len {
            let (k1, k2) = (self.k1[i], self.k2[i]);
            let ik1 = Complex64::new(0.0, k1);
            let ik2 = Complex64::new(0.0, k2);
            let wi = w[i];
            let ji = j[i];
            let u1 = ik2 * wi * self.inv_k_sq[i];
            let u2 = -ik1 * wi * self.inv_k_sq[i];
            let b1 = ik2 * ji * self.inv_k_sq[i];
            let b2 = -ik1 * ji * self.inv_k_sq[i];
            modes[0][i] = u1;
            modes[1][i] = u2;
            modes[2][i] = b1;
            modes[3][i] = b2;
            modes[4][i] = ik1 * wi;
            modes[5][i] = ik2 * wi;
            modes[6][i] = ik1 * ji;
            modes[7][i] = ik2 * ji;
            modes[8][i] = ik1 * u1;
            modes[9][i] = ik2 * u1 + ik1 * u2;
            modes[10][i] = ik1 * b1;
            modes[11][i] = ik2 * b1;
            modes[12][i] = ik1 * b2;
            modes[13][i] = wi;
        }
        let mut phys: Vec<Vec<f64>> = Vec::with_capacity(14);
        for pair in modes.chunks(2) {
            let (a, b) = self.grid.inverse_pair_raw(&pair[0], &pair[1]);
            phys.push(a);
            phys.push(b);
        }
        let mut it = phys.into_iter();
        let mut next = || it.next().expect("fourteen fields");
        Physical {
            u1: next(),
            u2: next(),
            b1: next(),
            b2: next(),
            w1: next(),
            w2: next(),
            j1: next(),
            j2: next(),
            d1u1: next(),
            su: next(),
            d1b1: next(),
            d2b1: next(),
            d1b2: next(),
            omega: next(),
        }
    }

    /// `(N_ω, N_j)` from physical fields, projected onto the retained band.
    fn nonlinear_from(&self, p: &Physical) -> (Vec<Complex64>, Vec<Complex64>) {
        let len = p.u1.len();
        let mut nw = vec![0.0; len];
        let mut nj = vec![0.0; len];
        for i in 0..len {
            let adv_w = p.u1[i] * p.w1[i] + p.u2[i] * p.w2[i];
            let lor_w = p.b1[i] * p.j1[i] + p.b2[i] * p.j2[i];
            let adv_j = p.u1[i] * p.j1[i] + p.u2[i] * p.j2[i];
            let str_j = p.b1[i] * p.w1[i] + p.b2[i] * p.w2[i];
            nw[i] = lor_w - adv_w;
            nj[i] = str_j - adv_j + p.stretching(i);
        }
        let (mut a, mut b) = self.grid.forward_pair_raw(&nw, &nj);
        for i in 0..len {
            if !self.mask[i] {
                a[i] = ZERO;
                b[i] = ZERO;
            }
        }
        // The zero mode of a flux-form product vanishes analytically.
        a[0] = ZERO;
        b[0] = ZERO;
        (a, b)
    }

    fn stage_values(&self, w: &[Complex64], j: &[Complex64], p: Option<&Physical>) -> StageValues {
        let area = self.grid.area();
        let mut diss = 0.0;
        for i in 0..w.len() {
            diss += (self.rate_u[i] * w[i].norm_sqr() + self.rate_b[i] * j[i].norm_sqr())
                * self.inv_k_sq[i];
        }
        let (grad_j_lq, grad_b_linf) = match p {
            Some(p) => {
                let cell = self.grid.spacing().powi(2);
                let q = self.diag_q;
                let mut sum = 0.0;
                let mut gmax = 0.0f64;
                for i in 0..p.j1.len() {
                    let s = p.j1[i] * p.j1[i] + p.j2[i] * p.j2[i];
                    sum += half_power(s, q);
                    gmax = gmax.max(p.grad_b(i));
                }
                ((sum * cell).powf(1.0 / q), gmax)
            }
            None => (0.0, 0.0),
        };
        StageValues {
            dissipation: diss * area,
            grad_j_lq,
            grad_b_linf,
        }
    }

    /// Nonlinear terms plus stage diagnostics at one stage.
    fn evaluate(
        &self,
        w: &[Complex64],
        j: &[Complex64],
    ) -> (Vec<Complex64>, Vec<Complex64>, StageValues, f64) {
        let p = self.physical(w, j);
        let vals = self.stage_values(w, j, Some(&p));
        let speed = p.max_speed();
        let (nw, nj) = if self.params.terms.nonlinear {
            self.nonlinear_from(&p)
        } else {
            (vec![ZERO; w.len()], vec![ZERO; w.len()])
        };
        (nw, nj, vals, speed)
    }

    /// `(N_ω, N_j)` for a state, with `N_j` including the stretching term `T`.
    pub fn nonlinear_rhs(&self, state: &SimState) -> Result<(SpectralField2D, SpectralField2D)> {
        self.check_state(state)?;
        let p = self.physical(state.omega.coeffs(), state.current.coeffs());
        let (a, b) = self.nonlinear_from(&p);
        Ok((
            SpectralField2D::from_coeffs(&self.grid, a)?,
            SpectralField2D::from_coeffs(&self.grid, b)?,
        ))
    }

    /// Largest stable advective step `Δx / max(|u|+|b|)` for unit CFL number.
    pub fn advective_limit(&self, state: &SimState) -> f64 {
        let p = self.physical(state.omega.coeffs(), state.current.coeffs());
        let speed = p.max_speed();
        if speed > 0.0 {
            self.grid.spacing() / speed
        } else {
            f64::INFINITY
        }
    }

    /// One integrating-factor RK4 step of size `dt`.
    pub fn step(&self, state: &SimState, dt: f64) -> Result<SimState> {
        Ok(self.advance(state, DtPolicy::Fixed(dt))?.state)
    }

    /// One step with the step size chosen by `policy`.
    pub fn advance(&self, state: &SimState, policy: DtPolicy) -> Result<StepOutcome> {
        self.check_state(state)?;
        let w0 = state.omega.coeffs();
        let j0 = state.current.coeffs();
        let (k1w, k1j, v1, speed) = self.evaluate(w0, j0);

        let dt = match policy {
            DtPolicy::Fixed(dt) => dt,
            DtPolicy::Cfl {
                cfl,
                dt_max,
                remaining,
            } => {
                let adv = if speed > 0.0 {
                    cfl * self.grid.spacing() / speed
                } else {
                    f64::INFINITY
                };
                adv.min(dt_max).min(remaining)
            }
        };
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!(
                "time step must be positive and finite, got {dt}"
            )));
        }

        let len = w0.len();
        let mut e_w = vec![0.0; len];
        let mut e_j = vec![0.0; len];
        let mut h_w = vec![0.0; len];
        let mut h_j = vec![0.0; len];
        for i in 0..len {
            e_w[i] = (-self.rate_u[i] * dt).exp();
            e_j[i] = (-self.rate_b[i] * dt).exp();
            h_w[i] = (-0.5 * self.rate_u[i] * dt).exp();
            h_j[i] = (-0.5 * self.rate_b[i] * dt).exp();
        }
        let half = 0.5 * dt;

        let mut aw = vec![ZERO; len];
        let mut aj = vec![ZERO; len];
        for i in 0..len {
            aw[i] = (w0[i] + k1w[i] * half) * h_w[i];
            aj[i] = (j0[i] + k1j[i] * half) * h_j[i];
        }
        let (k2w, k2j, v2, _) = self.evaluate(&aw, &aj);

        for i in 0..len {
            aw[i] = w0[i] * h_w[i] + k2w[i] * half;
            aj[i] = j0[i] * h_j[i] + k2j[i] * half;
        }
        let (k3w, k3j, v3, _) = self.evaluate(&aw, &aj);

        for i in 0..len {
            aw[i] = w0[i] * e_w[i] + k3w[i] * (dt * h_w[i]);
            aj[i] = j0[i] * e_j[i] + k3j[i] * (dt * h_j[i]);
        }
        let (k4w, k4j, v4, _) = self.evaluate(&aw, &aj);

        let sixth = dt / 6.0;
        let mut w_new = vec![ZERO; len];
        let mut j_new = vec![ZERO; len];
        for i in 0..len {
            w_new[i] = w0[i] * e_w[i]
                + (k1w[i] * e_w[i] + (k2w[i] + k3w[i]) * (2.0 * h_w[i]) + k4w[i]) * sixth;
            j_new[i] = j0[i] * e_j[i]
                + (k1j[i] * e_j[i] + (k2j[i] + k3j[i]) * (2.0 * h_j[i]) + k4j[i]) * sixth;
        }

        let weigh =
            |f: fn(&StageValues) -> f64| sixth * (f(&v1) + 2.0 * f(&v2) + 2.0 * f(&v3) + f(&v4));
        let increments = StepIncrements {
            dissipation: weigh(|v| v.dissipation),
            grad_j_lq: weigh(|v| v.grad_j_lq),
            grad_b_linf: weigh(|v| v.grad_b_linf),
        };

        let next = SimState {
            t: state.t + dt,
            omega: SpectralField2D::from_coeffs(&self.grid, w_new)?,
            current: SpectralField2D::from_coeffs(&self.grid, j_new)?,
            params: state.params,
            step_count: state.step_count + 1,
        };
        if !next.is_finite() || !increments.grad_b_linf.is_finite() {
            return Err(Error::BlowUp {
                t: next.t,
                step: next.step_count,
                snapshot: Box::new(state.clone()),
            });
        }
        Ok(StepOutcome {
            state: next,
            dt,
            increments,
        })
    }
}

/// `s^{q/2}` with the common exponents special-cased.
#[inline]
pub(crate) fn half_power(s: f64, q: f64) -> f64 {
    if q == 2.0 {
        s
    } else if q == 4.0 {
        s * s
    } else {
        s.powf(0.5 * q)
    }
}
