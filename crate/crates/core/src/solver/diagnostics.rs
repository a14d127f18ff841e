use crate::error::{invalid, Result};
use crate::grid::lp_norm;

use super::{biot_savart, divergence_defect, half_power, SimState, Solver, StepIncrements};

/// Exponents of the configurable diagnostic norms.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagConfig {
    /// Lebesgue exponent of `‖ω‖_{L^q}` and `‖∇j‖_{L^q}`.
    pub q: f64,
    /// Sobolev index of `‖u‖_{H^s}` and `‖b‖_{H^s}`.
    pub s: f64,
    /// Order of `‖Λ^r j‖`.
    pub r: f64,
}

impl DiagConfig {
    /// `q = 4`, `s = 2`, `r = α/2`.
    pub fn for_alpha(alpha: f64) -> Self {
        Self {
            q: 4.0,
            s: 2.0,
            r: 0.5 * alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 1.0) {
            return Err(invalid(format!("diag.q must be >= 1, got {}", self.q)));
        }
        if !(self.s >= 0.0) || !(self.r >= 0.0) {
            return Err(invalid("diag.s and diag.r must be nonnegative"));
        }
        Ok(())
    }
}

/// One row of diagnostics. Norms without a power suffix in their
/// description are plain norms; `omega_l2`, `j_l2` and the dissipation
/// entries are squared, as they enter the energy identities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagRecord {
    pub t: f64,
    pub step: u64,
    /// Size of the step that produced this state.
    pub dt: f64,
    /// `½(‖u‖² + ‖b‖²)`.
    pub energy: f64,
    /// `‖ω‖²`.
    pub omega_l2: f64,
    /// `‖j‖²`.
    pub j_l2: f64,
    /// `‖Λ^α u‖²`.
    pub diss_u: f64,
    /// `‖𝓛^{1/2} b‖²`.
    pub diss_b: f64,
    /// `‖Λ^α ω‖²`.
    pub diss_omega: f64,
    /// `‖𝓛^{1/2} j‖²`.
    pub diss_j: f64,
    pub omega_lq: f64,
    pub grad_j_lq: f64,
    pub grad_b_linf: f64,
    pub hs_u: f64,
    pub hs_b: f64,
    /// `‖Λ^r j‖`.
    pub lr_j: f64,
    /// `∫ T(∇u, ∇b) j dx`.
    pub t_pairing: f64,
    /// Trapezoidal defect of the energy identity since the previous row.
    pub energy_residual: f64,
    /// Trapezoidal defect of the `½(‖ω‖²+‖j‖²)` identity since the previous row.
    pub vorticity_residual: f64,
    /// `|⟨N_ω,ω⟩ + ⟨N_j,j⟩ − ⟨T,j⟩|` relative to the summed `L¹` norms of the four integrands.
    pub cancellation_residual: f64,
    /// Largest `|iξ·û| + |iξ·b̂|` over the lattice.
    pub divergence_residual: f64,
    /// Time integral of the active dissipation rates.
    pub cum_dissipation: f64,
    /// `|E(t) + ∫D − E(0)| / E(0)`.
    pub budget_residual: f64,
    /// `∫ ‖∇j‖_{L^q} dt`.
    pub int_grad_j_lq: f64,
    /// `∫ ‖∇b‖_{L^∞} dt`.
    pub int_grad_b_linf: f64,
}

impl DiagRecord {
    pub const FIELDS: [&'static str; 25] = [
        "t",
        "step",
        "dt",
        "energy",
        "omega_l2",
        "j_l2",
        "diss_u",
        "diss_b",
        "diss_omega",
        "diss_j",
        "omega_lq",
        "grad_j_lq",
        "grad_b_linf",
        "hs_u",
        "hs_b",
        "lr_j",
        "t_pairing",
        "energy_residual",
        "vorticity_residual",
        "cancellation_residual",
        "divergence_residual",
        "cum_dissipation",
        "budget_residual",
        "int_grad_j_lq",
        "int_grad_b_linf",
    ];

    /// Values in the order of [`FIELDS`](Self::FIELDS).
    pub fn values(&self) -> Vec<f64> {
        vec![
            self.t,
            self.step as f64,
            self.dt,
            self.energy,
            self.omega_l2,
            self.j_l2,
            self.diss_u,
            self.diss_b,
            self.diss_omega,
            self.diss_j,
            self.omega_lq,
            self.grad_j_lq,
            self.grad_b_linf,
            self.hs_u,
            self.hs_b,
            self.lr_j,
            self.t_pairing,
            self.energy_residual,
            self.vorticity_residual,
            self.cancellation_residual,
            self.divergence_residual,
            self.cum_dissipation,
            self.budget_residual,
            self.int_grad_j_lq,
            self.int_grad_b_linf,
        ]
    }

    /// Inverse of [`values`](Self::values); `None` unless exactly one value
    /// per field is given.
    pub fn from_values(v: &[f64]) -> Option<Self> {
        let &[t, step, dt, energy, omega_l2, j_l2, diss_u, diss_b, diss_omega, diss_j, omega_lq, grad_j_lq, grad_b_linf, hs_u, hs_b, lr_j, t_pairing, energy_residual, vorticity_residual, cancellation_residual, divergence_residual, cum_dissipation, budget_residual, int_grad_j_lq, int_grad_b_linf] =
            v
        else {
            return None;
        };
        Some(Self {
            t,
            step: step as u64,
            dt,
            energy,
            omega_l2,
            j_l2,
            diss_u,
            diss_b,
            diss_omega,
            diss_j,
            omega_lq,
            grad_j_lq,
            grad_b_linf,
            hs_u,
            hs_b,
            lr_j,
            t_pairing,
            energy_residual,
            vorticity_residual,
            cancellation_residual,
            divergence_residual,
            cum_dissipation,
            budget_residual,
            int_grad_j_lq,
            int_grad_b_linf,
        })
    }

    pub fn all_finite(&self) -> bool {
        self.values().iter().all(|v| v.is_finite())
    }
}

struct Previous {
    t: f64,
    energy: f64,
    enstrophy: f64,
    energy_rate: f64,
    enstrophy_rate: f64,
}

/// Running diagnostics of one trajectory: tracks the time integrals and the
/// previous row needed by the residuals.
pub struct Diagnostics {
    config: DiagConfig,
    initial_energy: Option<f64>,
    prev: Option<Previous>,
    cum_dissipation: f64,
    int_grad_j_lq: f64,
    int_grad_b_linf: f64,
}

impl Diagnostics {
    pub fn new(config: DiagConfig) -> Self {
        Self {
            config,
            initial_energy: None,
            prev: None,
            cum_dissipation: 0.0,
            int_grad_j_lq: 0.0,
            int_grad_b_linf: 0.0,
        }
    }

    pub fn config(&self) -> &DiagConfig {
        &self.config
    }

    pub fn accumulate(&mut self, inc: &StepIncrements) {
        self.cum_dissipation += inc.dissipation;
        self.int_grad_j_lq += inc.grad_j_lq;
        self.int_grad_b_linf += inc.grad_b_linf;
    }

    /// Diagnostics of `state`, with residuals measured against the previous call.
    pub fn record(&mut self, solver: &Solver, state: &SimState, dt: f64) -> DiagRecord {
        let grid = solver.grid();
        let area = grid.area();
        let cell = grid.spacing().powi(2);
        let (sym_u, sym_b) = solver.symbols();
        let (rate_u, rate_b) = solver.rates();
        let inv = solver.inv_k_sq();
        let cfg = self.config;
        let w = state.omega.coeffs();
        let j = state.current.coeffs();

        let mut s = [0.0f64; 11];
        for i in 0..w.len() {
            let (ww, jj) = (w[i].norm_sqr(), j[i].norm_sqr());
            let k_sq = if inv[i] == 0.0 { 0.0 } else { 1.0 / inv[i] };
            s[0] += (ww + jj) * inv[i];
            s[1] += ww;
            s[2] += jj;
            s[3] += sym_u[i] * ww * inv[i];
            s[4] += sym_b[i] * jj * inv[i];
            s[5] += sym_u[i] * ww;
            s[6] += sym_b[i] * jj;
            let hs = (1.0 + k_sq).powf(cfg.s) * inv[i];
            s[7] += hs * ww;
            s[8] += hs * jj;
            s[9] += if k_sq == 0.0 {
                0.0
            } else {
                k_sq.powf(cfg.r) * jj
            };
            s[10] += (rate_u[i] * ww + rate_b[i] * jj) * inv[i];
        }
        let mut active_enstrophy_diss = 0.0;
        for i in 0..w.len() {
            active_enstrophy_diss += rate_u[i] * w[i].norm_sqr() + rate_b[i] * j[i].norm_sqr();
        }

        let p = solver.physical(w, j);
        let q = cfg.q;
        let omega_lq = lp_norm(&p.omega, q, cell);
        let mut grad_j_sum = 0.0;
        let mut grad_b_max = 0.0f64;
        let mut t_pairing = 0.0;
        let mut a = [0.0f64; 4];
        let mut scale = 0.0;
        for i in 0..p.u1.len() {
            let ji = p.d1b2[i] - p.d2b1[i];
            let wi = p.omega[i];
            grad_j_sum += half_power(p.j1[i] * p.j1[i] + p.j2[i] * p.j2[i], q);
            grad_b_max = grad_b_max.max(p.grad_b(i));
            t_pairing += p.stretching(i) * ji;
            let terms = [
                -(p.u1[i] * p.w1[i] + p.u2[i] * p.w2[i]) * wi,
                (p.b1[i] * p.j1[i] + p.b2[i] * p.j2[i]) * wi,
                -(p.u1[i] * p.j1[i] + p.u2[i] * p.j2[i]) * ji,
                (p.b1[i] * p.w1[i] + p.b2[i] * p.w2[i]) * ji,
            ];
            for (acc, v) in a.iter_mut().zip(terms) {
                *acc += v;
                scale += v.abs();
            }
        }
        let cancellation_residual = if scale > 0.0 {
            a.iter().sum::<f64>().abs() / scale
        } else {
            0.0
        };
        let (u1, u2) = biot_savart(&state.omega);
        let (b1, b2) = biot_savart(&state.current);
        let divergence_residual = divergence_defect(&u1, &u2) + divergence_defect(&b1, &b2);

        let energy = 0.5 * area * s[0];
        let omega_l2 = area * s[1];
        let j_l2 = area * s[2];
        let t_pairing = cell * t_pairing;
        let nonlinear = if state.params.terms.nonlinear {
            1.0
        } else {
            0.0
        };
        let energy_rate = area * s[10];
        let enstrophy = 0.5 * (omega_l2 + j_l2);
        let enstrophy_rate = area * active_enstrophy_diss - nonlinear * t_pairing;

        let (energy_residual, vorticity_residual) = match &self.prev {
            Some(prev) if state.t > prev.t => {
                let tau = state.t - prev.t;
                (
                    ((energy - prev.energy) / tau + 0.5 * (energy_rate + prev.energy_rate)).abs(),
                    ((enstrophy - prev.enstrophy) / tau
                        + 0.5 * (enstrophy_rate + prev.enstrophy_rate))
                        .abs(),
                )
            }
            _ => (0.0, 0.0),
        };
        self.prev = Some(Previous {
            t: state.t,
            energy,
            enstrophy,
            energy_rate,
            enstrophy_rate,
        });
        let e0 = *self.initial_energy.get_or_insert(energy);
        let budget_residual = if e0 > 0.0 {
            (energy + self.cum_dissipation - e0).abs() / e0
        } else {
            0.0
        };

        DiagRecord {
            t: state.t,
            step: state.step_count,
            dt,
            energy,
            omega_l2,
            j_l2,
            diss_u: area * s[3],
            diss_b: area * s[4],
            diss_omega: area * s[5],
            diss_j: area * s[6],
            omega_lq,
            grad_j_lq: (cell * grad_j_sum).powf(1.0 / q),
            grad_b_linf: grad_b_max,
            hs_u: (area * s[7]).sqrt(),
            hs_b: (area * s[8]).sqrt(),
            lr_j: (area * s[9]).sqrt(),
            t_pairing,
            energy_residual,
            vorticity_residual,
            cancellation_residual,
            divergence_residual,
            cum_dissipation: self.cum_dissipation,
            budget_residual,
            int_grad_j_lq: self.int_grad_j_lq,
            int_grad_b_linf: self.int_grad_b_linf,
        }
    }
}
