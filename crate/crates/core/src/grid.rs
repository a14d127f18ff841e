//! Uniform periodic grid, 2D discrete Fourier transforms and spectral calculus.
//!
//! Physical arrays are stored row-major with the row index running over `x₂`
//! and the column index over `x₁`: value `f[i2 * n + i1]` sits at
//! `(i1 * h, i2 * h)`. Spectral arrays use the same layout in FFT order, so
//! index `i` on either axis carries the integer wavenumber `i` for `i < n/2`
//! and `i - n` otherwise.
//!
//! Coefficients are normalized so that the physical field `e^{iξ·x}` has unit
//! coefficient at `ξ`, i.e. `f(x) = Σ c(ξ) e^{iξ·x}`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X1,
    X2,
}

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// An `n × n` periodic grid on `[0, length)²`.
#[derive(Clone)]
pub struct Grid2D {
    n: usize,
    length: f64,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D")
            .field("n", &self.n)
            .field("length", &self.length)
            .finish()
    }
}

impl PartialEq for Grid2D {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.length == other.length
    }
}

impl Grid2D {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(invalid(format!("grid size must be even and >= 8, got {n}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(invalid(format!(
                "domain length must be positive, got {length}"
            )));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        };
        Ok(Self {
            n,
            length,
            plans: Arc::new(plans),
        })
    }

    /// The standard `[0, 2π)²` torus.
    pub fn torus(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of lattice points; never zero.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn area(&self) -> f64 {
        self.length * self.length
    }

    /// Integer wavenumber carried by FFT index `i`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        if i < self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// FFT index of integer wavenumber `k`, if representable.
    pub fn index_of(&self, k: i64) -> Option<usize> {
        let half = (self.n / 2) as i64;
        if k < -half || k >= half {
            return None;
        }
        Some(if k >= 0 {
            k as usize
        } else {
            (k + self.n as i64) as usize
        })
    }

    /// Physical wavenumber `2π k / length` for FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.mode(i) as f64 * 2.0 * PI / self.length
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// True when integer mode `k` survives 2/3-rule truncation (`|k| < n/3`).
    ///
    /// The bound is strict so that, when `3 | n`, the alias of a product mode
    /// at `2n/3` cannot land on a retained mode.
    #[inline]
    pub fn keeps_mode(&self, k: i64) -> bool {
        3 * (k.unsigned_abs() as usize) < self.n
    }

    /// Per-coefficient 2/3-rule mask in spectral layout.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let n = self.n;
        let mut mask = vec![false; n * n];
        for i2 in 0..n {
            let keep2 = self.keeps_mode(self.mode(i2));
            for i1 in 0..n {
                mask[i2 * n + i1] = keep2 && self.keeps_mode(self.mode(i1));
            }
        }
        mask
    }

    /// `|ξ|` for every coefficient in spectral layout.
    pub fn radii(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i2 in 0..n {
            let k2 = self.wavenumber(i2);
            for i1 in 0..n {
                let k1 = self.wavenumber(i1);
                out.push((k1 * k1 + k2 * k2).sqrt());
            }
        }
        out
    }

    /// Largest `|ξ|` on the lattice (the Nyquist corner).
    pub fn max_radius(&self) -> f64 {
        let k = (self.n / 2) as f64 * 2.0 * PI / self.length;
        k * 2f64.sqrt()
    }

    /// Physical coordinate of grid index `i` along either axis.
    pub fn coordinate(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    /// Samples `f(x₁, x₂)` on the grid.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let n = self.n;
        let mut out = Vec::with_capacity(n * n);
        for i2 in 0..n {
            let x2 = self.coordinate(i2);
            for i1 in 0..n {
                out.push(f(self.coordinate(i1), x2));
            }
        }
        out
    }

    /// In-place unnormalized 2D FFT.
    pub(crate) fn fft2(&self, data: &mut [Complex64], inverse: bool) {
        debug_assert_eq!(data.len(), self.len());
        let plan = if inverse {
            &self.plans.inverse
        } else {
            &self.plans.forward
        };
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, self.n);
    }

    /// Forward transform of real grid values.
    pub fn forward(&self, values: &[f64]) -> Result<SpectralField2D> {
        if values.len() != self.len() {
            return Err(Error::ShapeMismatch {
                expected: self.len(),
                actual: values.len(),
            });
        }
        let mut data: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut data, false);
        let scale = 1.0 / self.len() as f64;
        // Discard the imaginary round-off so the result is exactly Hermitian.
        let (a, _) = self.split_packed(&data, scale);
        Ok(SpectralField2D::from_raw(self.clone(), a))
    }

    /// Forward transforms of two real arrays using one complex FFT.
    pub(crate) fn forward_pair_raw(
        &self,
        a: &[f64],
        b: &[f64],
    ) -> (Vec<Complex64>, Vec<Complex64>) {
        let mut data: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| Complex64::new(x, y))
            .collect();
        self.fft2(&mut data, false);
        self.split_packed(&data, 1.0 / self.len() as f64)
    }

    /// Splits the transform of `a + i b` into the transforms of `a` and `b`.
    fn split_packed(&self, z: &[Complex64], scale: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        let n = self.n;
        let mut a = vec![ZERO; n * n];
        let mut b = vec![ZERO; n * n];
        for i2 in 0..n {
            let m2 = (n - i2) % n;
            for i1 in 0..n {
                let m1 = (n - i1) % n;
                let zk = z[i2 * n + i1];
                let zm = z[m2 * n + m1].conj();
                a[i2 * n + i1] = (zk + zm) * (0.5 * scale);
                // (zk - zm) / (2i)
                let d = zk - zm;
                b[i2 * n + i1] = Complex64::new(d.im, -d.re) * (0.5 * scale);
            }
        }
        (a, b)
    }

    /// Inverse transforms of two Hermitian spectra using one complex FFT.
    pub(crate) fn inverse_pair_raw(
        &self,
        a: &[Complex64],
        b: &[Complex64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut data: Vec<Complex64> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| x + Complex64::new(-y.im, y.re))
            .collect();
        self.fft2(&mut data, true);
        let re = data.iter().map(|z| z.re).collect();
        let im = data.iter().map(|z| z.im).collect();
        (re, im)
    }

    pub(crate) fn inverse_raw(&self, a: &[Complex64]) -> Vec<f64> {
        let mut data = a.to_vec();
        self.fft2(&mut data, true);
        data.into_iter().map(|z| z.re).collect()
    }

    /// `L^p` norm of physical grid values over the periodic domain.
    pub fn lp_norm(&self, values: &[f64], p: f64) -> f64 {
        lp_norm(values, p, self.spacing() * self.spacing())
    }
}

fn transpose(data: &mut [Complex64], n: usize) {
    for r in 0..n {
        for c in (r + 1)..n {
            data.swap(r * n + c, c * n + r);
        }
    }
}

/// `(h² Σ |v|^p)^{1/p}`; `p = ∞` gives the grid maximum.
pub fn lp_norm(values: &[f64], p: f64, cell_area: f64) -> f64 {
    if p.is_infinite() {
        return values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    }
    let sum: f64 = if p == 2.0 {
        values.iter().map(|v| v * v).sum()
    } else if p == 4.0 {
        values.iter().map(|v| (v * v) * (v * v)).sum()
    } else if p == 1.0 {
        values.iter().map(|v| v.abs()).sum()
    } else {
        values.iter().map(|v| v.abs().powf(p)).sum()
    };
    (sum * cell_area).powf(1.0 / p)
}

/// Fourier coefficients of a real periodic scalar field.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField2D {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField2D {
    pub fn zeros(grid: &Grid2D) -> Self {
        Self {
            coeffs: vec![ZERO; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_coeffs(grid: &Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(Self::from_raw(grid.clone(), coeffs))
    }

    pub(crate) fn from_raw(grid: Grid2D, coeffs: Vec<Complex64>) -> Self {
        debug_assert_eq!(coeffs.len(), grid.len());
        Self { grid, coeffs }
    }

    /// Transform of `f(x₁, x₂)` sampled on the grid.
    pub fn from_fn(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> Self {
        grid.forward(&grid.sample(f))
            .expect("sample has grid shape")
    }

    /// Random real field whose modes satisfy `|k₁|, |k₂| ≤ kmax`, with
    /// amplitude `weight(|ξ|)` and uniformly random phase.
    ///
    /// Random numbers are drawn over the full `(2 kmax + 1)²` integer square in
    /// a fixed order, so the same generator state yields the same function on
    /// every grid that can represent it.
    pub fn random_band_limited<R: Rng + ?Sized>(
        grid: &Grid2D,
        kmax: i64,
        rng: &mut R,
        weight: impl Fn(f64) -> f64,
    ) -> Self {
        let mut field = Self::zeros(grid);
        let scale = 2.0 * PI / grid.length();
        for k2 in 0..=kmax {
            for k1 in -kmax..=kmax {
                let amp_draw: f64 = rng.random();
                let phase: f64 = rng.random::<f64>() * 2.0 * PI;
                if k2 == 0 && k1 <= 0 {
                    continue;
                }
                let r = scale * ((k1 * k1 + k2 * k2) as f64).sqrt();
                let w = weight(r);
                if w == 0.0 {
                    continue;
                }
                let (Some(i1), Some(i2), Some(j1), Some(j2)) = (
                    grid.index_of(k1),
                    grid.index_of(k2),
                    grid.index_of(-k1),
                    grid.index_of(-k2),
                ) else {
                    continue;
                };
                let c = Complex64::from_polar(w * (0.5 + amp_draw), phase);
                let n = grid.n();
                field.coeffs[i2 * n + i1] = c;
                field.coeffs[j2 * n + j1] = c.conj();
            }
        }
        field
    }

    pub fn grid(&self) -> &Grid2D {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient at integer wavenumber `(k₁, k₂)`, zero if not representable.
    pub fn mode(&self, k1: i64, k2: i64) -> Complex64 {
        match (self.grid.index_of(k1), self.grid.index_of(k2)) {
            (Some(i1), Some(i2)) => self.coeffs[i2 * self.grid.n() + i1],
            _ => ZERO,
        }
    }

    /// Spatial mean (the zero mode).
    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    pub fn is_zero_mean(&self, tol: f64) -> bool {
        self.coeffs[0].norm() <= tol
    }

    pub fn without_mean(mut self) -> Self {
        self.coeffs[0] = ZERO;
        self
    }

    /// Inverse transform to physical grid values.
    pub fn to_physical(&self) -> Vec<f64> {
        self.grid.inverse_raw(&self.coeffs)
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// Multiplies every coefficient by `symbol(ξ₁, ξ₂)`.
    pub fn map_symbol(&self, symbol: impl Fn(f64, f64) -> Complex64) -> Self {
        let n = self.grid.n();
        let mut out = self.coeffs.clone();
        for i2 in 0..n {
            let k2 = self.grid.wavenumber(i2);
            for i1 in 0..n {
                let k1 = self.grid.wavenumber(i1);
                out[i2 * n + i1] *= symbol(k1, k2);
            }
        }
        Self::from_raw(self.grid.clone(), out)
    }

    /// Multiplies every coefficient by the real radial symbol `m(|ξ|)`.
    pub fn map_radial(&self, m: impl Fn(f64) -> f64) -> Self {
        self.map_symbol(|k1, k2| Complex64::new(m((k1 * k1 + k2 * k2).sqrt()), 0.0))
    }

    /// `∂_{x_axis}` of the field; the Nyquist mode along `axis` is zeroed.
    pub fn derivative(&self, axis: Axis) -> Self {
        let n = self.grid.n();
        let mut out = self.coeffs.clone();
        for i2 in 0..n {
            for i1 in 0..n {
                let i = match axis {
                    Axis::X1 => i1,
                    Axis::X2 => i2,
                };
                let idx = i2 * n + i1;
                out[idx] = if self.grid.is_nyquist(i) {
                    ZERO
                } else {
                    out[idx] * Complex64::new(0.0, self.grid.wavenumber(i))
                };
            }
        }
        Self::from_raw(self.grid.clone(), out)
    }

    /// 2/3-rule truncation: zero every mode with `|k_i| ≥ n/3`.
    pub fn dealiased(&self) -> Self {
        let n = self.grid.n();
        let mut out = self.coeffs.clone();
        for i2 in 0..n {
            let keep2 = self.grid.keeps_mode(self.grid.mode(i2));
            for i1 in 0..n {
                if !(keep2 && self.grid.keeps_mode(self.grid.mode(i1))) {
                    out[i2 * n + i1] = ZERO;
                }
            }
        }
        Self::from_raw(self.grid.clone(), out)
    }

    /// Pointwise product with 2/3-rule truncation of both inputs and the output.
    pub fn dealiased_product(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let a = self.dealiased();
        let b = other.dealiased();
        let (fa, fb) = self.grid.inverse_pair_raw(&a.coeffs, &b.coeffs);
        let prod: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x * y).collect();
        Ok(self.grid.forward(&prod)?.dealiased())
    }

    /// `Σ |c|²`, the mean of the squared physical values.
    pub fn mean_square(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// `‖f‖²_{L²}` over the periodic domain.
    pub fn l2_norm_sq(&self) -> f64 {
        self.grid.area() * self.mean_square()
    }

    /// `∫ f g dx` computed from the coefficients.
    pub fn inner(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self.grid.area() * inner_raw(&self.coeffs, &other.coeffs))
    }

    /// Largest `|c(-ξ) - conj c(ξ)|` over the lattice (zero for real fields).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst = 0.0f64;
        for i2 in 0..n {
            let m2 = (n - i2) % n;
            for i1 in 0..n {
                let m1 = (n - i1) % n;
                let d = self.coeffs[m2 * n + m1] - self.coeffs[i2 * n + i1].conj();
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::from_raw(
            self.grid.clone(),
            self.coeffs.iter().map(|c| c * s).collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self::from_raw(self.grid.clone(), coeffs))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self::from_raw(self.grid.clone(), coeffs))
    }
}

/// `Re Σ a conj(b)`.
pub(crate) fn inner_raw(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

/// Inverse transform of two fields at once.
pub fn inverse_pair(a: &SpectralField2D, b: &SpectralField2D) -> Result<(Vec<f64>, Vec<f64>)> {
    a.check_grid(b)?;
    Ok(a.grid.inverse_pair_raw(&a.coeffs, &b.coeffs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_values(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(Grid2D::torus(6).is_err());
        assert!(Grid2D::torus(9).is_err());
        assert!(Grid2D::new(8, 0.0).is_err());
        assert!(Grid2D::torus(8).is_ok());
    }

    #[test]
    fn forward_rejects_shape_mismatch() {
        let grid = Grid2D::torus(8).unwrap();
        assert!(matches!(
            grid.forward(&[0.0; 10]),
            Err(Error::ShapeMismatch {
                expected: 64,
                actual: 10
            })
        ));
    }

    #[test]
    fn constant_field_has_unit_zero_mode() {
        let grid = Grid2D::torus(16).unwrap();
        let f = SpectralField2D::from_fn(&grid, |_, _| 1.0);
        assert!((f.coeffs()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(f.coeffs()[1..].iter().all(|c| c.norm() < 1e-15));
    }

    #[test]
    fn cosine_has_half_coefficients() {
        let grid = Grid2D::torus(16).unwrap();
        let f = SpectralField2D::from_fn(&grid, |x1, _| x1.cos());
        assert!((f.mode(1, 0).re - 0.5).abs() < 1e-15);
        assert!((f.mode(-1, 0).re - 0.5).abs() < 1e-15);
        assert!((f.mean_square() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn round_trip_and_parseval() {
        let grid = Grid2D::torus(32).unwrap();
        let values = random_values(32, 7);
        let f = grid.forward(&values).unwrap();
        let back = f.to_physical();
        let scale = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let err = values
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err / scale < 1e-12, "round trip error {err}");

        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64;
        assert!((f.mean_square() - mean_sq).abs() / mean_sq < 1e-12);
        assert!(f.hermitian_defect() < 1e-15);
    }

    #[test]
    fn derivatives_of_band_limited_fields() {
        let grid = Grid2D::torus(32).unwrap();
        let f = SpectralField2D::from_fn(&grid, |x1, _| x1.sin());
        let df = f.derivative(Axis::X1).to_physical();
        let expected = grid.sample(|x1, _| x1.cos());
        let err = df
            .iter()
            .zip(&expected)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-13);

        let g = SpectralField2D::from_fn(&grid, |_, x2| (3.0 * x2).sin());
        let dg = g.derivative(Axis::X2).to_physical();
        let expected = grid.sample(|_, x2| 3.0 * (3.0 * x2).cos());
        let err = dg
            .iter()
            .zip(&expected)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-12);

        let c = SpectralField2D::from_fn(&grid, |_, _| 2.5).derivative(Axis::X1);
        assert!(c.max_abs() == 0.0);
    }

    #[test]
    fn derivative_zeroes_nyquist() {
        let grid = Grid2D::torus(8).unwrap();
        let f = SpectralField2D::from_fn(&grid, |x1, _| (4.0 * x1).cos());
        assert!(f.mode(-4, 0).norm() > 0.9);
        assert!(f.derivative(Axis::X1).max_abs() == 0.0);
    }

    #[test]
    fn low_mode_product_is_exact() {
        let grid = Grid2D::torus(8).unwrap();
        let f = SpectralField2D::from_fn(&grid, |x1, _| x1.cos());
        let p = f.dealiased_product(&f).unwrap().to_physical();
        let expected = grid.sample(|x1, _| 0.5 + 0.5 * (2.0 * x1).cos());
        let err = p
            .iter()
            .zip(&expected)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        assert!(err < 1e-14);

        let zero = SpectralField2D::zeros(&grid);
        assert!(zero.dealiased_product(&f).unwrap().max_abs() < 1e-16);
    }

    #[test]
    fn product_matches_direct_convolution() {
        let n = 32usize;
        let grid = Grid2D::torus(n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let kb = (n / 4) as i64 / 2;
        let f = SpectralField2D::random_band_limited(&grid, kb, &mut rng, |_| 1.0);
        let g = SpectralField2D::random_band_limited(&grid, kb, &mut rng, |_| 1.0);
        let p = f.dealiased_product(&g).unwrap();

        // Brute-force convolution over integer wavenumbers.
        let mut worst = 0.0f64;
        for q2 in -2 * kb..=2 * kb {
            for q1 in -2 * kb..=2 * kb {
                let mut acc = ZERO;
                for a2 in -kb..=kb {
                    for a1 in -kb..=kb {
                        acc += f.mode(a1, a2) * g.mode(q1 - a1, q2 - a2);
                    }
                }
                worst = worst.max((acc - p.mode(q1, q2)).norm());
            }
        }
        assert!(worst < 1e-12, "convolution mismatch {worst}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let a = SpectralField2D::zeros(&Grid2D::torus(8).unwrap());
        let b = SpectralField2D::zeros(&Grid2D::torus(16).unwrap());
        assert!(matches!(a.dealiased_product(&b), Err(Error::GridMismatch)));
    }

    #[test]
    fn pair_transforms_match_single_transforms() {
        let grid = Grid2D::torus(16).unwrap();
        let a = random_values(16, 1);
        let b = random_values(16, 2);
        let (fa, fb) = grid.forward_pair_raw(&a, &b);
        let sa = grid.forward(&a).unwrap();
        let sb = grid.forward(&b).unwrap();
        let ea = fa
            .iter()
            .zip(sa.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        let eb = fb
            .iter()
            .zip(sb.coeffs())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max);
        assert!(ea < 1e-15 && eb < 1e-15);
        let (pa, pb) = inverse_pair(&sa, &sb).unwrap();
        let err = pa
            .iter()
            .chain(&pb)
            .zip(a.iter().chain(&b))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-14);
    }

    #[test]
    fn random_fields_are_grid_independent() {
        let g1 = Grid2D::torus(32).unwrap();
        let g2 = Grid2D::torus(64).unwrap();
        let f1 =
            SpectralField2D::random_band_limited(&g1, 6, &mut ChaCha8Rng::seed_from_u64(9), |_| {
                1.0
            });
        let f2 =
            SpectralField2D::random_band_limited(&g2, 6, &mut ChaCha8Rng::seed_from_u64(9), |_| {
                1.0
            });
        for k2 in -6..=6 {
            for k1 in -6..=6 {
                assert_eq!(f1.mode(k1, k2), f2.mode(k1, k2));
            }
        }
        assert!(f1.hermitian_defect() == 0.0);
        assert_eq!(f1.mean(), 0.0);
    }
}
