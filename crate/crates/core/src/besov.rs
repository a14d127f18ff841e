//! Littlewood-Paley blocks, Besov norms and Bernstein-type ratios on the torus.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::{lp_norm, Axis, Grid2D, SpectralField2D};
use crate::symbols::MultiplierSymbol;

const INNER: f64 = 0.75;
const OUTER: f64 = 4.0 / 3.0;

/// Smooth step: 1 for `s ≤ 0`, 0 for `s ≥ 1`.
fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = (-1.0 / (1.0 - s)).exp();
        let b = (-1.0 / s).exp();
        a / (a + b)
    }
}

/// Radial cutoff: 1 on `|ξ| ≤ 3/4`, 0 for `|ξ| ≥ 4/3`.
pub fn chi(r: f64) -> f64 {
    psi((r - INNER) / (OUTER - INNER))
}

/// Ring function `φ(ξ) = χ(ξ/2) − χ(ξ)`, supported in `3/4 ≤ |ξ| ≤ 8/3`.
pub fn phi(r: f64) -> f64 {
    chi(0.5 * r) - chi(r)
}

/// The dyadic blocks a grid can represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DyadicPartition {
    /// Lowest homogeneous block meeting the smallest nonzero wavenumber.
    pub j_min: i32,
    /// Highest block needed so the blocks sum to 1 on every grid wavenumber.
    pub j_max: i32,
}

impl DyadicPartition {
    pub fn for_grid(grid: &Grid2D) -> Self {
        let k_min = 2.0 * std::f64::consts::PI / grid.length();
        // χ(2^{-j_max-1} ξ) = 1 needs 2^{-j_max-1} |ξ|_max ≤ 3/4.
        let j_max = (grid.max_radius() / INNER).log2().ceil() as i32 - 1;
        // φ(2^{-j} ξ) vanishes for every |ξ| ≥ k_min once 2^{-j} k_min > 8/3.
        let j_min = (3.0 * k_min / 8.0).log2().ceil() as i32;
        Self { j_min, j_max }
    }

    /// Multiplier of block `j`; `j = -1` is the low-frequency cutoff.
    pub fn weight(&self, j: i32, r: f64) -> f64 {
        if j == -1 {
            chi(r)
        } else {
            phi(r * 2f64.powi(-j))
        }
    }

    /// Multiplier of homogeneous block `j`, any integer.
    pub fn homogeneous_weight(&self, j: i32, r: f64) -> f64 {
        phi(r * 2f64.powi(-j))
    }

    /// Largest `|1 - Σ_j weight_j(|ξ|)|` over the grid wavenumbers.
    pub fn unity_residual(&self, grid: &Grid2D) -> f64 {
        grid.radii()
            .into_iter()
            .map(|r| {
                let sum: f64 = (-1..=self.j_max).map(|j| self.weight(j, r)).sum();
                (1.0 - sum).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// `Δ_j f`: `χ(D) f` for `j = -1`, `φ(2^{-j}D) f` for `j ≥ 0`.
pub fn lp_block(
    f: &SpectralField2D,
    j: i32,
    partition: &DyadicPartition,
) -> Result<SpectralField2D> {
    if j < -1 || j > partition.j_max {
        return Err(invalid(format!(
            "block {j} outside the representable range -1..={}",
            partition.j_max
        )));
    }
    Ok(f.map_radial(|r| partition.weight(j, r)))
}

/// `Δ̇_j f = φ(2^{-j}D) f`.
pub fn homogeneous_block(
    f: &SpectralField2D,
    j: i32,
    partition: &DyadicPartition,
) -> Result<SpectralField2D> {
    if j < partition.j_min || j > partition.j_max {
        return Err(invalid(format!(
            "homogeneous block {j} outside {}..={}",
            partition.j_min, partition.j_max
        )));
    }
    Ok(f.map_radial(|r| partition.homogeneous_weight(j, r)))
}

/// Physical values of each block, transformed two at a time.
fn block_values(f: &SpectralField2D, homogeneous: bool) -> Vec<(i32, Vec<f64>)> {
    let partition = DyadicPartition::for_grid(f.grid());
    let first = if homogeneous { partition.j_min } else { -1 };
    let js: Vec<i32> = (first..=partition.j_max).collect();
    let spectra: Vec<SpectralField2D> = js
        .iter()
        .map(|&j| {
            if homogeneous {
                f.map_radial(|r| partition.homogeneous_weight(j, r))
            } else {
                f.map_radial(|r| partition.weight(j, r))
            }
        })
        .collect();
    let grid = f.grid();
    let mut out = Vec::with_capacity(js.len());
    for (pair_j, pair) in js.chunks(2).zip(spectra.chunks(2)) {
        if pair.len() == 2 {
            let (a, b) = grid.inverse_pair_raw(pair[0].coeffs(), pair[1].coeffs());
            out.push((pair_j[0], a));
            out.push((pair_j[1], b));
        } else {
            out.push((pair_j[0], pair[0].to_physical()));
        }
    }
    out
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(invalid(format!("{name} must lie in [1, ∞], got {p}")));
    }
    Ok(())
}

fn require_zero_mean(f: &SpectralField2D) -> Result<()> {
    let scale = f.max_abs().max(f64::MIN_POSITIVE);
    if !f.is_zero_mean(1e-12 * scale) {
        return Err(invalid("homogeneous norm requires a zero-mean field"));
    }
    Ok(())
}

/// `(Σ_j 2^{jrs} ‖Δ_j f‖^r_{L^p})^{1/r}`; `p` or `r` may be infinite.
pub fn besov_norm(f: &SpectralField2D, s: f64, p: f64, r: f64, homogeneous: bool) -> Result<f64> {
    check_exponent("p", p)?;
    check_exponent("r", r)?;
    if homogeneous {
        require_zero_mean(f)?;
    }
    let cell = f.grid().spacing().powi(2);
    let terms = block_values(f, homogeneous)
        .into_iter()
        .map(|(j, v)| 2f64.powf(j as f64 * s) * lp_norm(&v, p, cell));
    Ok(if r.is_infinite() {
        terms.fold(0.0, f64::max)
    } else {
        terms.map(|t| t.powf(r)).sum::<f64>().powf(1.0 / r)
    })
}

fn binomial(k: u32, m: u32) -> f64 {
    (0..m).fold(1.0, |acc, i| acc * (k - i) as f64 / (i + 1) as f64)
}

/// Pointwise `|∇^k f|`, the Frobenius norm of the symmetric derivative tensor.
pub fn gradient_magnitude(f: &SpectralField2D, k: u32) -> Vec<f64> {
    let mut sq = vec![0.0; f.grid().len()];
    for m in 0..=k {
        let mut d = f.clone();
        for _ in 0..m {
            d = d.derivative(Axis::X1);
        }
        for _ in m..k {
            d = d.derivative(Axis::X2);
        }
        let w = binomial(k, m);
        for (acc, v) in sq.iter_mut().zip(d.to_physical()) {
            *acc += w * v * v;
        }
    }
    sq.into_iter().map(f64::sqrt).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BernsteinRatios {
    /// `‖∇^k f‖_{L^b} / (λ^{k+2(1/a-1/b)} ‖f‖_{L^a})`.
    pub upper: f64,
    /// `‖∇^k f‖_{L^b} / (λ^k ‖f‖_{L^b})`.
    pub lower: f64,
}

/// Bernstein ratios for `f` with spectrum in `λ{3/4 ≤ |ξ| ≤ 8/3}`.
pub fn bernstein_check(
    lambda: f64,
    k: u32,
    a: f64,
    b: f64,
    f: &SpectralField2D,
) -> Result<BernsteinRatios> {
    check_exponent("a", a)?;
    check_exponent("b", b)?;
    if a > b {
        return Err(invalid(format!("need a <= b, got a = {a}, b = {b}")));
    }
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let grid = f.grid();
    let scale = f.max_abs();
    let (lo, hi) = (0.75 * lambda, 8.0 / 3.0 * lambda);
    let radii = grid.radii();
    for (c, &r) in f.coeffs().iter().zip(&radii) {
        if c.norm() > 1e-14 * scale && !(r >= lo * (1.0 - 1e-12) && r <= hi * (1.0 + 1e-12)) {
            return Err(Error::Support(format!(
                "mode at |ξ| = {r} lies outside the annulus [{lo}, {hi}]"
            )));
        }
    }
    let cell = grid.spacing().powi(2);
    let values = f.to_physical();
    let grad = gradient_magnitude(f, k);
    let top = lp_norm(&grad, b, cell);
    let inv = |p: f64| if p.is_infinite() { 0.0 } else { 1.0 / p };
    let upper = top / (lambda.powf(k as f64 + 2.0 * (inv(a) - inv(b))) * lp_norm(&values, a, cell));
    let lower = top / (lambda.powi(k as i32) * lp_norm(&values, b, cell));
    Ok(BernsteinRatios { upper, lower })
}

/// Both sides of `∫ Λ^{2α}f |f|^{q-2}f dx ≥ C ‖f‖^q_{Ḃ^{2α/q}_{q,q}}` for one field.
///
/// Caches the physical field and its homogeneous blocks so several `(α, q)`
/// pairs can be evaluated without repeating the transforms.
pub struct DissipationProbe {
    field: SpectralField2D,
    values: Vec<f64>,
    blocks: Vec<(i32, Vec<f64>)>,
}

impl DissipationProbe {
    /// The field is 2/3-truncated first so the pairing is free of aliasing.
    pub fn new(f: &SpectralField2D) -> Result<Self> {
        require_zero_mean(f)?;
        let field = f.dealiased();
        let values = field.to_physical();
        let blocks = block_values(&field, true);
        Ok(Self {
            field,
            values,
            blocks,
        })
    }

    /// `(lhs, rhs)` with `rhs = Σ_j 2^{2αj} ‖Δ̇_j f‖^q_{L^q}`.
    pub fn pair(&self, alpha: f64, q: f64) -> Result<(f64, f64)> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        if !(q >= 2.0 && q.is_finite()) {
            return Err(invalid(format!("q must lie in [2, ∞), got {q}")));
        }
        let grid = self.field.grid();
        let cell = grid.spacing().powi(2);
        let lam = MultiplierSymbol::fractional(alpha)?
            .apply(&self.field)
            .to_physical();
        let lhs = cell
            * self
                .values
                .iter()
                .zip(&lam)
                .map(|(&f, &l)| {
                    let w = if q == 2.0 {
                        f
                    } else {
                        f.abs().powf(q - 2.0) * f
                    };
                    l * w
                })
                .sum::<f64>();
        let rhs = self
            .blocks
            .iter()
            .map(|(j, v)| 2f64.powf(2.0 * alpha * *j as f64) * lp_norm(v, q, cell).powf(q))
            .sum();
        Ok((lhs, rhs))
    }
}

/// One-shot form of [`DissipationProbe::pair`].
pub fn dissipation_lower_bound(f: &SpectralField2D, alpha: f64, q: f64) -> Result<(f64, f64)> {
    DissipationProbe::new(f)?.pair(alpha, q)
}

/// Extremes of `lhs / rhs` over a family of random fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LowerBoundSurvey {
    pub alpha: f64,
    pub q: f64,
    pub n: usize,
    pub fields: usize,
    pub min_lhs: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
}

/// Evaluates every `(α, q)` pair on `count` random zero-mean fields on the
/// `n × n` torus.
///
/// Field `i` uses stream `i` of a ChaCha8 generator seeded with `seed`: modes
/// `|k_i| ≤ kmax` with amplitude `(1+|ξ|)^{-p}`, `p` itself drawn from
/// `[0.5, 2.5]`. The fields do not depend on `n`, so surveys on different
/// grids see the same functions.
pub fn lower_bound_survey(
    n: usize,
    count: usize,
    seed: u64,
    kmax: i64,
    pairs: &[(f64, f64)],
) -> Result<Vec<LowerBoundSurvey>> {
    let grid = Grid2D::torus(n)?;
    if !grid.keeps_mode(kmax) {
        return Err(invalid(format!(
            "kmax = {kmax} exceeds the retained band of n = {n}"
        )));
    }
    let mut out: Vec<LowerBoundSurvey> = pairs
        .iter()
        .map(|&(alpha, q)| LowerBoundSurvey {
            alpha,
            q,
            n,
            fields: 0,
            min_lhs: f64::INFINITY,
            min_ratio: f64::INFINITY,
            max_ratio: 0.0,
        })
        .collect();
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let p: f64 = rng.random_range(0.5..2.5);
        let f = SpectralField2D::random_band_limited(&grid, kmax, &mut rng, |r| (1.0 + r).powf(-p));
        let probe = DissipationProbe::new(&f)?;
        for s in &mut out {
            let (lhs, rhs) = probe.pair(s.alpha, s.q)?;
            s.fields += 1;
            s.min_lhs = s.min_lhs.min(lhs);
            s.min_ratio = s.min_ratio.min(lhs / rhs);
            s.max_ratio = s.max_ratio.max(lhs / rhs);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn torus(n: usize) -> Grid2D {
        Grid2D::torus(n).unwrap()
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(chi(0.5), 1.0);
        assert_eq!(chi(0.75), 1.0);
        assert_eq!(chi(4.0 / 3.0), 0.0);
        assert!(chi(1.0) > 0.6 && chi(1.0) < 0.7);
        assert_eq!(phi(0.7), 0.0);
        assert_eq!(phi(2.7), 0.0);
        for i in 0..400 {
            let r = i as f64 * 0.01;
            assert!(chi(r) >= 0.0 && chi(r) <= 1.0);
            assert!(phi(r) >= 0.0);
        }
    }

    #[test]
    fn partition_of_unity() {
        for n in [32, 256] {
            let grid = torus(n);
            let p = DyadicPartition::for_grid(&grid);
            assert!(p.unity_residual(&grid) < 1e-12);
            assert_eq!(p.j_min, -1);
        }
    }

    #[test]
    fn unit_mode_splits_by_cutoff_values() {
        let grid = torus(64);
        let p = DyadicPartition::for_grid(&grid);
        let f = SpectralField2D::from_fn(&grid, |x, _| x.sin());
        // |ξ| = 1 sits where χ(1) ∈ (0, 1): blocks −1 and 0 share it.
        let b_m1 = lp_block(&f, -1, &p).unwrap();
        let b0 = lp_block(&f, 0, &p).unwrap();
        let c = chi(1.0);
        assert!((b_m1.mode(1, 0) - f.mode(1, 0) * c).norm() < 1e-15);
        assert!((b0.mode(1, 0) - f.mode(1, 0) * (1.0 - c)).norm() < 1e-15);
        for j in 1..=p.j_max {
            assert!(lp_block(&f, j, &p).unwrap().max_abs() < 1e-15);
        }
        assert!(lp_block(&f, p.j_max + 1, &p).is_err());
        assert!(lp_block(&f, -2, &p).is_err());
    }

    #[test]
    fn constant_is_low_block() {
        let grid = torus(32);
        let p = DyadicPartition::for_grid(&grid);
        let f = SpectralField2D::from_fn(&grid, |_, _| 3.0);
        assert!(lp_block(&f, -1, &p).unwrap().max_abs_diff(&f) == 0.0);
        for j in 0..=p.j_max {
            assert_eq!(lp_block(&f, j, &p).unwrap().max_abs(), 0.0);
        }
    }

    #[test]
    fn blocks_reconstruct() {
        let grid = torus(128);
        let p = DyadicPartition::for_grid(&grid);
        let f = SpectralField2D::random_band_limited(
            &grid,
            63,
            &mut ChaCha8Rng::seed_from_u64(1),
            |_| 1.0,
        );
        let mut sum = SpectralField2D::zeros(&grid);
        for j in -1..=p.j_max {
            sum = sum.add(&lp_block(&f, j, &p).unwrap()).unwrap();
        }
        let err = sum.sub(&f).unwrap().l2_norm_sq().sqrt() / f.l2_norm_sq().sqrt();
        assert!(err < 1e-12);
        let mut hsum = SpectralField2D::zeros(&grid);
        for j in p.j_min..=p.j_max {
            hsum = hsum.add(&homogeneous_block(&f, j, &p).unwrap()).unwrap();
        }
        assert!(hsum.sub(&f).unwrap().l2_norm_sq().sqrt() / f.l2_norm_sq().sqrt() < 1e-12);
    }

    #[test]
    fn besov_l2_equivalence() {
        let grid = torus(64);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let f = SpectralField2D::random_band_limited(&grid, 20, &mut rng, |_| 1.0);
            let b = besov_norm(&f, 0.0, 2.0, 2.0, false).unwrap();
            let l2 = f.l2_norm_sq().sqrt();
            let ratio = b / l2;
            assert!(
                ratio >= 1.0 / 3f64.sqrt() && ratio <= 3f64.sqrt(),
                "{ratio}"
            );
        }
    }

    #[test]
    fn besov_single_mode_scaling() {
        let grid = torus(128);
        let f = SpectralField2D::from_fn(&grid, |x, _| (32.0 * x).sin());
        let l2 = f.l2_norm_sq().sqrt();
        let c = chi(1.0);
        for s in [-1.0, 0.0, 0.25, 1.0] {
            let b = besov_norm(&f, s, 2.0, 2.0, true).unwrap();
            // |ξ| = 2^5 is shared by blocks 4 (weight χ(1)) and 5 (weight 1 − χ(1)).
            let exact =
                l2 * 2f64.powf(5.0 * s) * ((c * 2f64.powf(-s)).powi(2) + (1.0 - c).powi(2)).sqrt();
            assert!((b - exact).abs() < 1e-12 * exact, "s = {s}");
            if s <= 0.25 {
                let ratio = b / (2f64.powf(5.0 * s) * l2);
                assert!(
                    ratio >= 1.0 / 3f64.sqrt() && ratio <= 3f64.sqrt(),
                    "s = {s}: {ratio}"
                );
            }
        }
    }

    #[test]
    fn besov_edge_cases() {
        let grid = torus(32);
        let zero = SpectralField2D::zeros(&grid);
        assert_eq!(
            besov_norm(&zero, 1.0, 2.0, f64::INFINITY, true).unwrap(),
            0.0
        );
        let c = SpectralField2D::from_fn(&grid, |x, _| 1.0 + x.sin());
        assert!(besov_norm(&c, 0.0, 2.0, 2.0, true).is_err());
        assert!(besov_norm(&c, 0.0, 2.0, 2.0, false).is_ok());
        assert!(besov_norm(&c, 0.0, 0.5, 2.0, false).is_err());
    }

    #[test]
    fn bernstein_single_modes() {
        let grid = torus(256);
        for j in 1..=5 {
            let lam = 2f64.powi(j);
            let f = SpectralField2D::from_fn(&grid, |x, _| (lam * x).sin());
            for k in 0..=2 {
                for (a, b) in [(2.0, 2.0), (f64::INFINITY, f64::INFINITY)] {
                    let r = bernstein_check(lam, k, a, b, &f).unwrap();
                    assert!((r.upper - 1.0).abs() < 1e-12, "j={j} k={k}: {r:?}");
                    assert!((r.lower - 1.0).abs() < 1e-12, "j={j} k={k}: {r:?}");
                }
            }
        }
    }

    fn in_annulus(r: f64, lam: f64) -> bool {
        r >= 0.75 * lam && r <= 8.0 / 3.0 * lam
    }

    #[test]
    fn bernstein_random_annulus_fields() {
        let grid = torus(128);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut maxima = Vec::new();
        for j in 2..=5 {
            let lam = 2f64.powi(j);
            let mut worst = 0.0f64;
            for _ in 0..20 {
                let f = SpectralField2D::random_band_limited(
                    &grid,
                    (3.0 * lam) as i64,
                    &mut rng,
                    |r| {
                        if in_annulus(r, lam) {
                            1.0
                        } else {
                            0.0
                        }
                    },
                );
                let r = bernstein_check(lam, 0, 2.0, f64::INFINITY, &f).unwrap();
                worst = worst.max(r.upper);
                let r1 = bernstein_check(lam, 1, 2.0, 2.0, &f).unwrap();
                assert!(r1.lower >= 0.75 - 1e-12 && r1.upper <= 8.0 / 3.0 + 1e-12);
            }
            maxima.push(worst);
        }
        // Random phases keep the sampled maxima below the first scale's.
        assert!(maxima.iter().all(|&m| m <= maxima[0] * 1.01), "{maxima:?}");
    }

    #[test]
    fn bernstein_coherent_fields_are_scale_invariant() {
        // All annulus modes in phase: the L∞/L² extremal shape at each scale.
        let grid = torus(128);
        let radii = grid.radii();
        let ratios: Vec<f64> = (2..=5)
            .map(|j| {
                let lam = 2f64.powi(j);
                let coeffs = radii
                    .iter()
                    .map(|&r| {
                        num_complex::Complex64::new(if in_annulus(r, lam) { 1.0 } else { 0.0 }, 0.0)
                    })
                    .collect();
                let f = SpectralField2D::from_coeffs(&grid, coeffs).unwrap();
                bernstein_check(lam, 0, 2.0, f64::INFINITY, &f)
                    .unwrap()
                    .upper
            })
            .collect();
        let (lo, hi) = ratios
            .iter()
            .fold((f64::INFINITY, 0.0f64), |(a, b), &m| (a.min(m), b.max(m)));
        assert!(hi / lo < 1.5, "{ratios:?}");
    }

    #[test]
    fn bernstein_rejects_off_support() {
        let grid = torus(64);
        let f = SpectralField2D::from_fn(&grid, |x, _| x.sin() + (8.0 * x).sin());
        assert!(matches!(
            bernstein_check(8.0, 1, 2.0, 2.0, &f),
            Err(Error::Support(_))
        ));
    }

    #[test]
    fn lower_bound_q2_is_plancherel() {
        let grid = torus(64);
        let f = SpectralField2D::random_band_limited(
            &grid,
            15,
            &mut ChaCha8Rng::seed_from_u64(2),
            |r| 1.0 / (1.0 + r),
        );
        let (lhs, rhs) = dissipation_lower_bound(&f, 0.5, 2.0).unwrap();
        let half = MultiplierSymbol::fractional(0.25).unwrap().apply(&f);
        let exact = half.l2_norm_sq();
        assert!((lhs - exact).abs() < 1e-10 * exact);
        assert!(rhs > 0.0 && lhs / rhs > 0.2 && lhs / rhs < 5.0);
    }

    #[test]
    fn lower_bound_single_mode_q4() {
        let grid = torus(64);
        let f = SpectralField2D::from_fn(&grid, |x, _| (3.0 * x).sin());
        let (lhs, _) = dissipation_lower_bound(&f, 0.5, 4.0).unwrap();
        // ∫ 3 sin⁴(3x) over the torus = 3 · (3/8) · 4π².
        let exact = 3.0 * 0.375 * grid.area();
        assert!((lhs - exact).abs() < 1e-10 * exact);
    }

    #[test]
    fn lower_bound_requires_zero_mean() {
        let grid = torus(32);
        let f = SpectralField2D::from_fn(&grid, |x, _| 1.0 + x.sin());
        assert!(dissipation_lower_bound(&f, 0.5, 2.0).is_err());
    }

    #[test]
    fn survey_is_grid_independent() {
        let pairs = [(0.5, 2.0), (0.25, 4.0)];
        let a = lower_bound_survey(32, 6, 4, 5, &pairs).unwrap();
        let b = lower_bound_survey(64, 6, 4, 5, &pairs).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.fields, 6);
            assert!(x.min_lhs > 0.0 && x.min_ratio > 0.0 && x.min_ratio <= x.max_ratio);
            assert!((x.min_ratio / y.min_ratio - 1.0).abs() < 1e-10);
        }
        assert!(lower_bound_survey(32, 1, 4, 11, &pairs).is_err());
    }
}
