//! The refined logarithmic Gronwall inequality: its iterated-log factor,
//! extremal growth envelopes and a posteriori checks on simulation output.
//!
//! Envelopes are integrated for `Y = A + α₀` in the coordinate
//! `z = ln^{(k+2)} Y`, where the pure `n G` growth becomes `z' = n` and the
//! remaining terms are damped by the product of the iterated logs. `Y`
//! itself reaches towers of exponentials that no float can hold.

use crate::error::{invalid, Error, Result};
use crate::solver::DiagRecord;
use crate::symbols::sigma_floor;

/// `ln^{(m)} x`, the `m`-fold logarithm; NaN outside its domain.
pub fn iterated_log(m: u32, x: f64) -> f64 {
    (0..m).fold(x, |acc, _| if acc > 0.0 { acc.ln() } else { f64::NAN })
}

/// `G(k, r) = r · ln r · … · ln^{(k)} r`.
pub fn g_eval(k: u32, r: f64) -> Result<f64> {
    if k == 0 {
        return Err(invalid("G needs k >= 1"));
    }
    let mut prod = r;
    let mut x = r;
    for m in 1..=k {
        if !(x > 1.0) {
            return Err(Error::Domain(format!("ln^({m}) of {r} is not positive")));
        }
        x = x.ln();
        prod *= x;
    }
    Ok(prod)
}

/// A nonnegative coefficient of time.
#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient {
    Constant(f64),
    /// `scale · e^{rate t}`.
    Exponential {
        scale: f64,
        rate: f64,
    },
    /// Piecewise-linear through the samples, constant beyond them.
    Sampled {
        times: Vec<f64>,
        values: Vec<f64>,
    },
}

impl Default for Coefficient {
    fn default() -> Self {
        Self::Constant(0.0)
    }
}

impl Coefficient {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::Exponential { scale, rate } => scale * (rate * t).exp(),
            Self::Sampled { times, values } => {
                let i = times.partition_point(|&s| s <= t);
                if i == 0 {
                    values[0]
                } else if i == times.len() {
                    values[i - 1]
                } else {
                    let w = (t - times[i - 1]) / (times[i] - times[i - 1]);
                    values[i - 1] + w * (values[i] - values[i - 1])
                }
            }
        }
    }

    fn validate(&self, name: &str, t_end: f64) -> Result<()> {
        let ok = match self {
            Self::Constant(c) => *c >= 0.0 && c.is_finite(),
            Self::Exponential { scale, rate } => {
                *scale >= 0.0
                    && rate.is_finite()
                    && (scale * (rate.max(0.0) * t_end).exp()).is_finite()
            }
            Self::Sampled { times, values } => {
                !times.is_empty()
                    && times.len() == values.len()
                    && times.windows(2).all(|w| w[1] > w[0])
                    && values.iter().all(|v| *v >= 0.0 && v.is_finite())
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "coefficient {name} must be finite and nonnegative on [0, T]"
            )))
        }
    }
}

/// `n(t) ≤ K (A+α₀)^a (A+B+α₀)^β`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthConstraint {
    pub k_const: f64,
    pub a_exp: f64,
    pub beta_exp: f64,
}

/// `A' + B ≤ [l + m ln(A+α₀) + n G(k, ln(A+B+α₀))](A+α₀) + f` on `[0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct GronwallProblem {
    pub k: u32,
    pub alpha0: f64,
    pub l: Coefficient,
    pub m: Coefficient,
    pub n: Coefficient,
    pub f: Coefficient,
    pub constraint: Option<GrowthConstraint>,
    pub t_end: f64,
}

impl GronwallProblem {
    /// All coefficients zero; `α₀` defaults to the smallest admissible value.
    pub fn new(k: u32, t_end: f64) -> Result<Self> {
        let alpha0 = sigma_floor(k)?.max(2.0);
        let p = Self {
            k,
            alpha0,
            l: Coefficient::default(),
            m: Coefficient::default(),
            n: Coefficient::default(),
            f: Coefficient::default(),
            constraint: None,
            t_end,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        sigma_floor(self.k)?;
        if !(self.alpha0 >= 2.0) || !(iterated_log(self.k, self.alpha0) >= 1.0 - 1e-12) {
            return Err(invalid(format!(
                "alpha0 = {} needs alpha0 >= 2 and ln^({}) alpha0 >= 1",
                self.alpha0, self.k
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(invalid(format!("T must be positive, got {}", self.t_end)));
        }
        for (name, c) in [
            ("l", &self.l),
            ("m", &self.m),
            ("n", &self.n),
            ("f", &self.f),
        ] {
            c.validate(name, self.t_end)?;
        }
        if let Some(c) = self.constraint {
            if !(c.k_const >= 0.0) || !(c.a_exp >= 0.0) || !(0.0..1.0).contains(&c.beta_exp) {
                return Err(invalid(
                    "constraint needs K >= 0, a >= 0 and beta in [0, 1)",
                ));
            }
        }
        Ok(())
    }

    /// `dz/dt` at depth `k + 2`.
    fn rate(&self, t: f64, z: f64) -> f64 {
        // x[i] = ln^{(i)} Y for i = 1..=k+1, from the top down; overflow to +inf is harmless.
        let k = self.k as usize;
        let mut x = vec![0.0; k + 2];
        x[k + 1] = z.exp();
        for i in (1..=k).rev() {
            x[i] = x[i + 1].exp();
        }
        // ln(x₂⋯x_{k+1}) and ln(x₁⋯x_{k+1}).
        let upper = x[3..].iter().sum::<f64>() + z;
        let all = x[2..].iter().sum::<f64>() + z;
        let l = self.l.eval(t);
        let m = self.m.eval(t);
        let f = self.f.eval(t);
        let mut r = self.n.eval(t);
        if l > 0.0 {
            r += l * (-all).exp();
        }
        if m > 0.0 {
            r += m * (-upper).exp();
        }
        if f > 0.0 {
            r += f * (-(x[1] + all)).exp();
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Number of uniform output intervals on `[0, T]`.
    pub samples: usize,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-11,
            atol: 1e-12,
            samples: 100,
        }
    }
}

/// An extremal trajectory with `B ≡ 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Number of logarithms in `coordinate`.
    pub depth: u32,
    pub times: Vec<f64>,
    /// `ln^{(depth)}(A + α₀)`.
    pub coordinate: Vec<f64>,
    /// `ln(A + α₀)`; `+inf` once it leaves the float range.
    pub log_y: Vec<f64>,
    /// Accepted integrator steps.
    pub steps: usize,
    /// Whether the growth constraint held at every output sample, if one was given.
    pub constraint_holds: Option<bool>,
}

/// Integrates the equality case `A' = [l + m ln Y + n G(k, ln Y)] Y + f`, `Y = A + α₀`.
pub fn integrate_envelope(
    problem: &GronwallProblem,
    a0: f64,
    opts: EnvelopeOptions,
) -> Result<Trajectory> {
    problem.validate()?;
    if !(a0 >= problem.alpha0) || !a0.is_finite() {
        return Err(invalid(format!(
            "A0 = {a0} must be at least alpha0 = {}",
            problem.alpha0
        )));
    }
    if opts.samples == 0 || !(opts.rtol > 0.0) || !(opts.atol > 0.0) {
        return Err(invalid(
            "envelope options need samples > 0 and positive tolerances",
        ));
    }
    let depth = problem.k + 2;
    let z0 = iterated_log(depth, a0 + problem.alpha0);
    if !z0.is_finite() {
        return Err(Error::Domain(format!(
            "ln^({depth}) of A0 + alpha0 is undefined"
        )));
    }
    let times: Vec<f64> = (0..=opts.samples)
        .map(|i| problem.t_end * i as f64 / opts.samples as f64)
        .collect();
    let (coordinate, steps) = dopri45(|t, z| problem.rate(t, z), z0, &times, opts.rtol, opts.atol)?;
    let log_y: Vec<f64> = coordinate
        .iter()
        .map(|&z| (0..problem.k).fold(z.exp(), |acc, _| acc.exp()))
        .collect();
    let constraint_holds = problem.constraint.map(|c| {
        times.iter().zip(&log_y).all(|(&t, &ly)| {
            let n = problem.n.eval(t);
            n == 0.0 || n.ln() <= c.k_const.ln() + (c.a_exp + c.beta_exp) * ly
        })
    });
    Ok(Trajectory {
        depth,
        times,
        coordinate,
        log_y,
        steps,
        constraint_holds,
    })
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth- minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Dormand-Prince 5(4) for a scalar ODE, landing exactly on each output time.
fn dopri45(
    f: impl Fn(f64, f64) -> f64,
    y0: f64,
    outputs: &[f64],
    rtol: f64,
    atol: f64,
) -> Result<(Vec<f64>, usize)> {
    let mut t = outputs[0];
    let mut y = y0;
    let mut out = vec![y0];
    let mut k = [0.0; 7];
    k[0] = f(t, y);
    let mut h = 1e-3 * (outputs[outputs.len() - 1] - t).max(1e-6);
    let mut steps = 0;
    for &target in &outputs[1..] {
        while target - t > 1e-14 * target.abs().max(1.0) {
            let last = h >= target - t;
            let step = if last { target - t } else { h };
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonConvergence(format!(
                    "step size underflow at t = {t}"
                )));
            }
            for s in 1..7 {
                let inc: f64 = (0..s).map(|i| A[s][i] * k[i]).sum();
                k[s] = f(t + C[s] * step, y + step * inc);
            }
            let y_new = y + step * (0..6).map(|i| A[6][i] * k[i]).sum::<f64>();
            let err = step * (0..7).map(|i| E[i] * k[i]).sum::<f64>();
            if !y_new.is_finite() || !err.is_finite() {
                h = 0.2 * step;
                continue;
            }
            let ratio = err.abs() / (atol + rtol * y.abs().max(y_new.abs()));
            let factor = if ratio == 0.0 {
                5.0
            } else {
                (0.9 * ratio.powf(-0.2)).clamp(0.2, 5.0)
            };
            if ratio <= 1.0 {
                t = if last { target } else { t + step };
                y = y_new;
                k[0] = k[6];
                steps += 1;
                if !last {
                    h = step * factor;
                }
            } else {
                h = step * factor;
            }
        }
        out.push(y);
    }
    Ok((out, steps))
}

/// Fitted constants of the two inequalities that feed the Gronwall argument.
#[derive(Clone, Debug, PartialEq)]
pub struct UsageReport {
    pub samples: usize,
    /// `max n/A` over the series.
    pub c_growth: f64,
    /// `max (A' + B) / (n A Π_{m≤k} ln^{(m)}(σ+B))` over interior samples.
    pub c_inequality: f64,
    /// Samples whose `n/A` exceeds 1.2 times every other sample's.
    pub growth_flags: Vec<usize>,
    /// Interior samples whose inequality ratio exceeds 1.2 times every other sample's.
    pub inequality_flags: Vec<usize>,
}

impl UsageReport {
    pub fn constants_finite(&self) -> bool {
        self.c_growth.is_finite() && self.c_inequality.is_finite()
    }

    pub fn passed(&self) -> bool {
        self.constants_finite() && self.growth_flags.is_empty() && self.inequality_flags.is_empty()
    }
}

/// Indices whose value exceeds 1.2 times the maximum over all other entries.
fn headroom_flags(values: &[(usize, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].1.total_cmp(&values[a].1));
    let mut flags = Vec::new();
    if let [first, second, ..] = order[..] {
        if values[first].1 > 0.0 && values[first].1 > 1.2 * values[second].1 {
            flags.push(values[first].0);
        }
    }
    flags
}

/// Evaluates, on a diagnostic series, `n ≤ C A` and
/// `A' + B ≤ C n A ln(σ+B) ⋯ ln^{(k)}(σ+B)` with
/// `A = σ + ‖ω‖² + ‖j‖²`, `B = σ + ‖Λ^α ω‖² + ‖𝓛^{1/2} j‖²` and
/// `n = (1 + ‖𝓛^{1/2} b‖)²`; `A'` by central differences.
pub fn check_estimate_usage(series: &[DiagRecord], sigma: f64, k: u32) -> Result<UsageReport> {
    if series.len() < 10 {
        return Err(invalid(format!(
            "usage check needs at least 10 samples, got {}",
            series.len()
        )));
    }
    let floor = sigma_floor(k)?;
    if !(sigma >= floor * (1.0 - 1e-12)) {
        return Err(invalid(format!(
            "sigma = {sigma} is below the floor {floor} for k = {k}"
        )));
    }
    if series.windows(2).any(|w| !(w[1].t > w[0].t)) {
        return Err(invalid("series times must be strictly increasing"));
    }
    let a: Vec<f64> = series.iter().map(|r| sigma + r.omega_l2 + r.j_l2).collect();
    let b: Vec<f64> = series
        .iter()
        .map(|r| sigma + r.diss_omega + r.diss_j)
        .collect();
    let n: Vec<f64> = series
        .iter()
        .map(|r| (1.0 + r.diss_b.sqrt()).powi(2))
        .collect();

    let growth: Vec<(usize, f64)> = (0..series.len()).map(|i| (i, n[i] / a[i])).collect();
    let mut ineq = Vec::with_capacity(series.len() - 2);
    for i in 1..series.len() - 1 {
        let da = (a[i + 1] - a[i - 1]) / (series[i + 1].t - series[i - 1].t);
        let logs: f64 = (1..=k).map(|m| iterated_log(m, sigma + b[i])).product();
        ineq.push((i, (da + b[i]) / (n[i] * a[i] * logs)));
    }
    let max = |v: &[(usize, f64)]| v.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(UsageReport {
        samples: series.len(),
        c_growth: max(&growth),
        c_inequality: max(&ineq),
        growth_flags: headroom_flags(&growth),
        inequality_flags: headroom_flags(&ineq),
    })
}
