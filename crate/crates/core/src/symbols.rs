//! The radial weight `g`, the multipliers built from it, and the `A_t` root.

use crate::error::{invalid, Error, Result};
use crate::grid::SpectralField2D;

/// Largest supported iterated-log depth; `σ(4)` overflows `f64`.
pub const MAX_DEPTH: u32 = 3;

/// `σ(k)`: the `k`-fold exponential tower on 1.
pub fn sigma_floor(k: u32) -> Result<f64> {
    if k == 0 {
        return Err(invalid("iterated-log depth must be >= 1"));
    }
    if k > MAX_DEPTH {
        return Err(invalid(format!(
            "iterated-log depth {k} needs sigma beyond f64 range (max depth {MAX_DEPTH})"
        )));
    }
    Ok((0..k).fold(1.0f64, |acc, _| acc.exp()))
}

/// A radial function of `|ξ|`.
pub trait RadialWeight {
    fn value(&self, r: f64) -> f64;

    /// `d/dr` of [`value`](Self::value); central differences unless overridden.
    fn slope(&self, r: f64) -> f64 {
        let h = 1e-6 * r.max(1e-3);
        let lo = (r - h).max(0.0);
        (self.value(r + h) - self.value(lo)) / (r + h - lo)
    }

    /// `r g'(r) / g(r)`.
    fn log_slope(&self, r: f64) -> f64 {
        r * self.slope(r) / self.value(r)
    }

    /// True only when the weight is known to be constant.
    fn is_constant(&self) -> bool {
        false
    }
}

/// Wraps a closure as a [`RadialWeight`], for weights outside the built-in family.
#[derive(Clone, Copy)]
pub struct FnWeight<F>(pub F);

impl<F: Fn(f64) -> f64> RadialWeight for FnWeight<F> {
    fn value(&self, r: f64) -> f64 {
        (self.0)(r)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GKind {
    Constant,
    IteratedLog { depth: u32 },
}

/// `g(r) = C̃ (ln(σ+r) · ln ln(σ+r) ··· ln^{(k)}(σ+r))^e`, or a constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GFunction {
    kind: GKind,
    sigma: f64,
    ctilde: f64,
    c0: f64,
    exponent: f64,
}

impl GFunction {
    /// `g ≡ value`.
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value.is_finite()) {
            return Err(invalid(format!("constant g must be positive, got {value}")));
        }
        Ok(Self {
            kind: GKind::Constant,
            sigma: 0.0,
            ctilde: value,
            c0: value.min(1.0),
            exponent: 0.0,
        })
    }

    pub fn iterated_log(k: u32, sigma: f64, ctilde: f64, exponent: f64) -> Result<Self> {
        let floor = sigma_floor(k)?;
        // A relative slack absorbs the last-bit error of the exponential tower.
        if !(sigma >= floor * (1.0 - 1e-12)) || !sigma.is_finite() {
            return Err(invalid(format!(
                "sigma = {sigma} is below sigma({k}) = {floor}"
            )));
        }
        if !(ctilde > 0.0 && ctilde.is_finite()) {
            return Err(invalid(format!("ctilde must be positive, got {ctilde}")));
        }
        if !(exponent > 0.0 && exponent <= 1.0) {
            return Err(invalid(format!(
                "exponent must lie in (0, 1], got {exponent}"
            )));
        }
        let mut g = Self {
            kind: GKind::IteratedLog { depth: k },
            sigma: sigma.max(floor),
            ctilde,
            c0: 0.0,
            exponent,
        };
        g.c0 = g.eval(0.0).min(1.0);
        Ok(g)
    }

    /// The standard choice `k = 1`, `σ = e`, `C̃ = 1`, exponent ½.
    pub fn log_half() -> Self {
        Self::iterated_log(1, std::f64::consts::E, 1.0, 0.5).expect("valid parameters")
    }

    /// Overrides the floor constant `C₀`.
    pub fn with_floor(mut self, c0: f64) -> Result<Self> {
        if !(c0 > 0.0) {
            return Err(invalid(format!(
                "floor constant must be positive, got {c0}"
            )));
        }
        self.c0 = c0;
        Ok(self)
    }

    pub fn kind(&self) -> GKind {
        self.kind
    }

    pub fn depth(&self) -> u32 {
        match self.kind {
            GKind::Constant => 0,
            GKind::IteratedLog { depth } => depth,
        }
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn ctilde(&self) -> f64 {
        self.ctilde
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// Iterated logs `ln^{(m)}(σ+r)` for `m = 1..=k`, or `None` when some
    /// argument falls to 1 or below before depth `k` is reached.
    fn logs(&self, r: f64) -> Option<[f64; MAX_DEPTH as usize]> {
        let mut out = [0.0; MAX_DEPTH as usize];
        let mut x = self.sigma + r;
        for slot in out.iter_mut().take(self.depth() as usize) {
            if !(x > 1.0) {
                return None;
            }
            x = x.ln();
            *slot = x;
        }
        Some(out)
    }

    /// `g(r)`, with domain checks.
    pub fn try_eval(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("g evaluated at negative radius {r}")));
        }
        match self.kind {
            GKind::Constant => Ok(self.ctilde),
            GKind::IteratedLog { depth } => {
                let logs = self.logs(r).ok_or_else(|| {
                    Error::Domain(format!("iterated log argument <= 1 at r = {r}"))
                })?;
                let prod: f64 = logs[..depth as usize].iter().product();
                Ok(self.ctilde * prod.powf(self.exponent))
            }
        }
    }

    /// `g(r)`; valid instances cannot fail for `r ≥ 0`.
    pub fn eval(&self, r: f64) -> f64 {
        self.try_eval(r.max(0.0))
            .expect("sigma >= sigma(k) keeps every log >= 1")
    }

    /// `Σ_m (ln^{(m)})' / ln^{(m)}`, the derivative of `ln ∏ ln^{(m)}(σ+r)`.
    fn log_product_slope(&self, r: f64) -> f64 {
        let depth = self.depth() as usize;
        let Some(logs) = self.logs(r.max(0.0)) else {
            return f64::NAN;
        };
        let mut d = 1.0 / (self.sigma + r);
        let mut sum = 0.0;
        // d holds (ln^{(m)})' on entry to iteration m.
        for &l in &logs[..depth] {
            sum += d / l;
            d /= l;
        }
        sum
    }
}

impl RadialWeight for GFunction {
    fn value(&self, r: f64) -> f64 {
        self.eval(r)
    }

    fn slope(&self, r: f64) -> f64 {
        match self.kind {
            GKind::Constant => 0.0,
            GKind::IteratedLog { .. } => self.eval(r) * self.exponent * self.log_product_slope(r),
        }
    }

    fn log_slope(&self, r: f64) -> f64 {
        match self.kind {
            GKind::Constant => 0.0,
            GKind::IteratedLog { .. } => r * self.exponent * self.log_product_slope(r),
        }
    }

    fn is_constant(&self) -> bool {
        self.kind == GKind::Constant
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConditionReport {
    pub monotone: bool,
    pub floor: bool,
    /// Sampled maxima of `|g^{(k)}(r)| r^k / g(r)` for `k = 1, 2`.
    pub mikhlin: [f64; 2],
    pub mikhlin_bounded: bool,
}

impl ConditionReport {
    pub fn all_pass(&self) -> bool {
        self.monotone && self.floor && self.mikhlin_bounded
    }
}

/// Log-spaced radii `10^{lo} .. 10^{hi}`.
pub fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let step = (hi - lo) / (count.max(2) - 1) as f64;
    (0..count)
        .map(|i| 10f64.powf(lo + step * i as f64))
        .collect()
}

/// Samples monotonicity, the floor `g ≥ c0` and the Mikhlin ratios of `g`.
///
/// Failures are reported in the result; only malformed samples are errors.
pub fn check_conditions<W: RadialWeight + ?Sized>(
    g: &W,
    c0: f64,
    samples: &[f64],
) -> Result<ConditionReport> {
    if samples.len() < 100 {
        return Err(invalid(format!(
            "need at least 100 samples, got {}",
            samples.len()
        )));
    }
    if samples.windows(2).any(|w| !(w[1] > w[0])) || !(samples[0] > 0.0) {
        return Err(invalid("samples must be positive and strictly increasing"));
    }
    let span = (samples[samples.len() - 1] / samples[0]).log10();
    if span < 6.0 - 1e-9 {
        return Err(invalid(format!("samples span {span:.2} decades, need 6")));
    }

    let values: Vec<f64> = samples.iter().map(|&r| g.value(r)).collect();
    let monotone = values.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-14));
    let floor = g.value(0.0) >= c0 && values.iter().all(|&v| v >= c0);

    let mut mikhlin = [0.0f64; 2];
    for (&r, &v) in samples.iter().zip(&values) {
        let h = 1e-4 * r;
        let (gp, gm) = (g.value(r + h), g.value(r - h));
        let d1 = (gp - gm) / (2.0 * h);
        let d2 = (gp - 2.0 * v + gm) / (h * h);
        mikhlin[0] = mikhlin[0].max(d1.abs() * r / v.abs());
        mikhlin[1] = mikhlin[1].max(d2.abs() * r * r / v.abs());
    }
    let mikhlin_bounded = mikhlin.iter().all(|m| m.is_finite());
    Ok(ConditionReport {
        monotone,
        floor,
        mikhlin,
        mikhlin_bounded,
    })
}

/// The unique `x > 0` with `g(x)/x² = t`, by geometric bisection.
pub fn solve_at<W: RadialWeight + ?Sized>(g: &W, t: f64) -> Result<f64> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("A_t needs t > 0, got {t}")));
    }
    let h = |x: f64| g.value(x) / (x * x) - t;
    let (mut lo, mut hi) = (1e-12f64, 1.0f64);
    let mut expansions = 0;
    while h(hi) > 0.0 {
        hi *= 2.0;
        expansions += 1;
        if expansions > 2000 || !hi.is_finite() {
            return Err(Error::NonConvergence(format!(
                "no upper bracket for A_t at t = {t}"
            )));
        }
    }
    while h(lo) < 0.0 {
        lo *= 0.5;
        expansions += 1;
        if expansions > 2000 || lo == 0.0 {
            return Err(Error::NonConvergence(format!(
                "no lower bracket for A_t at t = {t}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        let r = h(mid);
        if r == 0.0 {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 4.0 * f64::EPSILON {
            break;
        }
    }
    let x = if h(lo).abs() < h(hi).abs() { lo } else { hi };
    if h(x).abs() <= 1e-12 * t {
        Ok(x)
    } else {
        Err(Error::NonConvergence(format!(
            "A_t residual {:e} exceeds tolerance at t = {t}",
            h(x).abs()
        )))
    }
}

/// A nonnegative radial Fourier multiplier.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MultiplierSymbol {
    /// `|ξ|^{2α}`.
    Fractional { alpha: f64 },
    /// `|ξ|^p / g(|ξ|)^{p/2}`.
    Weighted { power: f64, g: GFunction },
}

impl MultiplierSymbol {
    pub fn fractional(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(invalid(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self::Fractional { alpha })
    }

    /// `|ξ|²/g`, the symbol of `𝓛`.
    pub fn weakened(g: GFunction) -> Self {
        Self::Weighted { power: 2.0, g }
    }

    /// `|ξ|/√g`, the symbol of `𝓛^{1/2}`.
    pub fn weakened_sqrt(g: GFunction) -> Self {
        Self::Weighted { power: 1.0, g }
    }

    pub fn eval(&self, r: f64) -> f64 {
        if r == 0.0 {
            return 0.0;
        }
        match *self {
            Self::Fractional { alpha } => r.powf(2.0 * alpha),
            Self::Weighted { power, g } => {
                let gv = g.eval(r);
                if power == 2.0 {
                    r * r / gv
                } else if power == 1.0 {
                    r / gv.sqrt()
                } else {
                    r.powf(power) / gv.powf(0.5 * power)
                }
            }
        }
    }

    pub fn apply(&self, f: &SpectralField2D) -> SpectralField2D {
        f.map_radial(|r| self.eval(r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid2D;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::E;

    #[test]
    fn sigma_tower() {
        assert_eq!(sigma_floor(1).unwrap(), E);
        assert!((sigma_floor(2).unwrap() - E.exp()).abs() < 1e-12);
        assert!(sigma_floor(4).is_err());
        assert!(sigma_floor(0).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let one = GFunction::constant(1.0).unwrap();
        assert_eq!(one.eval(0.0), 1.0);
        assert_eq!(one.eval(1e9), 1.0);
        let g = GFunction::log_half();
        assert!((g.eval(0.0) - 1.0).abs() < 1e-15);
        assert!((g.eval(E * E - E) - 2f64.sqrt()).abs() < 1e-14);
        assert!(g.try_eval(-1.0).is_err());
    }

    #[test]
    fn depth_two_at_floor() {
        let g = GFunction::iterated_log(2, E.exp(), 1.0, 1.0).unwrap();
        // ln(e^e) · ln ln(e^e) = e · 1
        assert!((g.eval(0.0) - E).abs() < 1e-12);
    }

    #[test]
    fn rejects_sigma_below_floor() {
        assert!(GFunction::iterated_log(1, 1.0, 1.0, 0.5).is_err());
        assert!(GFunction::iterated_log(2, 10.0, 1.0, 0.5).is_err());
        assert!(GFunction::iterated_log(1, E, 1.0, 1.5).is_err());
        assert!(GFunction::iterated_log(1, E, -1.0, 0.5).is_err());
    }

    #[test]
    fn analytic_slope_matches_differences() {
        for g in [
            GFunction::log_half(),
            GFunction::iterated_log(2, 20.0, 1.5, 0.5).unwrap(),
            GFunction::iterated_log(3, sigma_floor(3).unwrap(), 1.0, 1.0).unwrap(),
        ] {
            for r in [0.5, 3.0, 100.0, 1e5] {
                let h = 1e-5 * r;
                let fd = (g.eval(r + h) - g.eval(r - h)) / (2.0 * h);
                let an = g.slope(r);
                let gv = g.eval(r);
                assert!((fd - an).abs() * r / gv < 1e-8, "r = {r}: {fd} vs {an}");
                assert!((g.log_slope(r) - r * an / gv).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn conditions_examples() {
        let samples = log_samples(-3.0, 5.0, 400);
        let c = GFunction::constant(1.0).unwrap();
        let rep = check_conditions(&c, c.c0(), &samples).unwrap();
        assert!(rep.all_pass());
        assert!(rep.mikhlin[0] < 1e-12 && rep.mikhlin[1] < 1e-12);

        let g = GFunction::log_half();
        let rep = check_conditions(&g, g.c0(), &samples).unwrap();
        assert!(rep.all_pass(), "{rep:?}");
        assert!(rep.mikhlin[0] < 1.0 && rep.mikhlin[1] < 1.0);

        let dec = FnWeight(|r: f64| 1.0 / (1.0 + r));
        let rep = check_conditions(&dec, 1e-9, &samples).unwrap();
        assert!(!rep.monotone);

        assert!(check_conditions(&g, 1.0, &samples[..50]).is_err());
        assert!(check_conditions(&g, 1.0, &log_samples(0.0, 3.0, 200)).is_err());
    }

    #[test]
    fn floor_failure_is_reported() {
        let g = GFunction::constant(0.5).unwrap().with_floor(1.0).unwrap();
        let rep = check_conditions(&g, g.c0(), &log_samples(-3.0, 4.0, 200)).unwrap();
        assert!(!rep.floor);
    }

    #[test]
    fn at_examples() {
        let one = GFunction::constant(1.0).unwrap();
        assert!((solve_at(&one, 4.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((solve_at(&one, 1e-4).unwrap() - 100.0).abs() < 1e-11);
        let g = GFunction::log_half();
        let x = solve_at(&g, 1.0).unwrap();
        assert!((g.eval(x) / (x * x) - 1.0).abs() < 1e-12);
        assert!(x > 1.0 && x < 2.0);
        assert!(solve_at(&g, 0.0).is_err());
    }

    #[test]
    fn at_decreases_in_t() {
        let g = GFunction::log_half();
        let ts = log_samples(-6.0, 0.0, 60);
        let xs: Vec<f64> = ts.iter().map(|&t| solve_at(&g, t).unwrap()).collect();
        assert!(xs.windows(2).all(|w| w[1] < w[0]));
    }

    fn mode_field(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> SpectralField2D {
        SpectralField2D::from_fn(grid, f)
    }

    fn max_err(a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn multiplier_examples() {
        let grid = Grid2D::torus(16).unwrap();
        let s1 = mode_field(&grid, |x, _| x.sin());
        let out = MultiplierSymbol::fractional(1.0)
            .unwrap()
            .apply(&s1)
            .to_physical();
        let e = max_err(&out, &s1.to_physical());
        assert!(e < 1e-13, "{e}");

        let s2 = mode_field(&grid, |x, _| (2.0 * x).sin());
        let out = MultiplierSymbol::fractional(0.5)
            .unwrap()
            .apply(&s2)
            .to_physical();
        assert!(max_err(&out, &grid.sample(|x, _| 2.0 * (2.0 * x).sin())) < 1e-13);

        let s3 = mode_field(&grid, |_, y| (3.0 * y).sin());
        let lap = MultiplierSymbol::weakened(GFunction::constant(1.0).unwrap());
        let out = lap.apply(&s3).to_physical();
        assert!(max_err(&out, &grid.sample(|_, y| 9.0 * (3.0 * y).sin())) < 1e-13);

        assert_eq!(lap.eval(0.0), 0.0);
        assert!(MultiplierSymbol::fractional(0.0).is_err());
    }

    #[test]
    fn weighted_matches_laplacian_for_constant_g() {
        let grid = Grid2D::torus(32).unwrap();
        let f = SpectralField2D::random_band_limited(
            &grid,
            15,
            &mut ChaCha8Rng::seed_from_u64(4),
            |_| 1.0,
        );
        let a = MultiplierSymbol::weakened(GFunction::constant(1.0).unwrap()).apply(&f);
        let b = MultiplierSymbol::fractional(1.0).unwrap().apply(&f);
        let scale = a.max_abs();
        assert!(a.max_abs_diff(&b) <= 1e-14 * scale);
    }

    #[test]
    fn half_operator_squares_to_full() {
        let grid = Grid2D::torus(32).unwrap();
        let f = SpectralField2D::random_band_limited(
            &grid,
            15,
            &mut ChaCha8Rng::seed_from_u64(5),
            |_| 1.0,
        );
        let g = GFunction::log_half();
        let half = MultiplierSymbol::weakened_sqrt(g);
        let twice = half.apply(&half.apply(&f));
        let once = MultiplierSymbol::weakened(g).apply(&f);
        for (a, b) in twice.coeffs().iter().zip(once.coeffs()) {
            assert!((a - b).norm() <= 1e-14 * b.norm().max(1e-300));
        }
    }

    proptest! {
        #[test]
        fn g_nondecreasing_and_floored(k in 1u32..=3, extra in 0.0f64..50.0, ct in 0.1f64..5.0,
                                       e in 0.05f64..1.0, r in 0.0f64..1e6, dr in 0.0f64..1e3) {
            let g = GFunction::iterated_log(k, sigma_floor(k).unwrap() + extra, ct, e).unwrap();
            prop_assert!(g.eval(r + dr) >= g.eval(r));
            prop_assert!(g.eval(r) >= g.c0());
        }

        #[test]
        fn at_residual(t in -8.0f64..4.0) {
            let t = 10f64.powf(t);
            let g = GFunction::log_half();
            let x = solve_at(&g, t).unwrap();
            prop_assert!((g.eval(x) / (x * x) - t).abs() <= 1e-12 * t);
        }
    }
}
