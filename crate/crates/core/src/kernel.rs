//! Whole-space quadrature of the semigroup kernel `K̂(ξ, t) = e^{-t|ξ|²/g(ξ)}`.
//!
//! Everything radial is integrated in the variable `u = ln r`, which turns the
//! power-law prefactors into exponentials and keeps the peak of the integrand
//! well resolved for any `t` from `1e-8` to `1e4`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid2D;
use crate::quadrature::integrate;
use crate::symbols::{solve_at, RadialWeight};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub abs_error_estimate: f64,
    /// Radius beyond which the integrand was bounded rather than integrated.
    pub truncation_radius: f64,
    /// Bound on the discarded contributions on both sides of the peak.
    pub tail_bound: f64,
}

/// `2π ∫₀^∞ r^{2s+1} g(r)^{-k} e^{-2t r²/g(r)} dr`.
pub fn kernel_moment<W: RadialWeight + ?Sized>(
    g: &W,
    s: f64,
    k: f64,
    t: f64,
) -> Result<QuadratureResult> {
    if !(k >= 0.0) {
        return Err(invalid(format!("weight power k must be >= 0, got {k}")));
    }
    if !(s > k - 1.0) {
        return Err(invalid(format!(
            "moment needs s > k - 1, got s = {s}, k = {k}"
        )));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let log_f = |u: f64| {
        let r = u.exp();
        let gv = g.value(r);
        (2.0 * s + 2.0) * u - k * gv.ln() - 2.0 * t * r * r / gv
    };
    let f = |u: f64| 2.0 * PI * log_f(u).exp();

    let mut peak_u = -60.0;
    let mut peak = f64::NEG_INFINITY;
    let mut u = -60.0;
    while u <= 60.0 {
        let v = log_f(u);
        if v > peak {
            peak = v;
            peak_u = u;
        }
        u += 0.1;
    }
    // Truncate where the integrand is 1e-18 of its peak; tails are bounded below.
    let cutoff = peak - 18.0 * 10f64.ln();
    let mut lo = peak_u;
    while log_f(lo) > cutoff && lo > -700.0 {
        lo -= 0.25;
    }
    let mut hi = peak_u;
    while log_f(hi) > cutoff && hi < 340.0 {
        hi += 0.25;
    }

    // Beyond each cut the log-integrand is monotone with at least the slope
    // measured at the cut, so F(cut)/|slope| bounds the tail; doubled for slack.
    let slope = |u: f64| (log_f(u + 1e-4) - log_f(u - 1e-4)) / 2e-4;
    let (s_lo, s_hi) = (slope(lo), slope(hi));
    if !(s_lo > 0.0 && s_hi < 0.0) {
        return Err(Error::NonConvergence(format!(
            "kernel integrand not decaying at the cuts (slopes {s_lo}, {s_hi})"
        )));
    }
    let tail_bound = 2.0 * (f(lo) / s_lo + f(hi) / -s_hi);

    let mid = integrate(f, lo, peak_u, 0.0, 1e-12)?;
    let right = integrate(f, peak_u, hi, 0.0, 1e-12)?;
    let value = mid.value + right.value;
    let abs_error_estimate = mid.abs_error + right.abs_error;
    if abs_error_estimate > 1e-8 * value {
        return Err(Error::NonConvergence(format!(
            "kernel moment error {abs_error_estimate:e} exceeds 1e-8 of {value:e}"
        )));
    }
    if tail_bound > 1e-10 * value {
        return Err(Error::NonConvergence(format!(
            "kernel moment tail {tail_bound:e} exceeds 1e-10 of {value:e}"
        )));
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate,
        truncation_radius: hi.exp(),
        tail_bound,
    })
}

/// `‖K(t)‖_{Ḣ^s} = (∫ |ξ|^{2s} e^{-2t|ξ|²/g} dξ)^{1/2}`.
pub fn kernel_hs_norm<W: RadialWeight + ?Sized>(g: &W, s: f64, t: f64) -> Result<f64> {
    if !(s > -1.0) {
        return Err(invalid(format!("Sobolev index must exceed -1, got {s}")));
    }
    Ok(kernel_moment(g, s, 0.0, t)?.value.sqrt())
}

/// The decay envelope `t^{-(s+1)} g(A_t)^{s-k+1}` bounding [`kernel_moment`].
pub fn moment_envelope<W: RadialWeight + ?Sized>(g: &W, s: f64, k: f64, t: f64) -> Result<f64> {
    let a = solve_at(g, t)?;
    Ok(t.powf(-(s + 1.0)) * g.value(a).powf(s - k + 1.0))
}

/// `t^{-(1-δ/2)} g(A_t)^{1-δ/2}`, the envelope of `‖Λ^{2-δ}K(t)‖_{L¹}`.
pub fn l1_envelope<W: RadialWeight + ?Sized>(g: &W, delta: f64, t: f64) -> Result<f64> {
    let a = solve_at(g, t)?;
    let p = 1.0 - 0.5 * delta;
    Ok(t.powf(-p) * g.value(a).powf(p))
}

/// A periodic box comfortably containing `Λ^{2-δ}K(t)`: twelve diffusion
/// lengths `√(t g(A_t))` from the origin to the edge for `δ = 0`, and 32 for
/// `δ > 0` where the algebraic tail needs the extra room.
pub fn l1_box<W: RadialWeight + ?Sized>(g: &W, delta: f64, t: f64) -> Result<f64> {
    let a = solve_at(g, t)?;
    let reach = if delta == 0.0 { 12.0 } else { 32.0 };
    Ok(2.0 * reach * (t * g.value(a)).sqrt())
}

/// `‖Λ^{2-δ}K(t)‖_{L¹}` approximated on the periodic box `grid.length()`.
///
/// The result is rejected when the box or the resolution is inadequate. The
/// spectrum must have decayed to 1e-10 of its peak at the Nyquist edge. When
/// the symbol is smooth (constant `g`, `δ = 0`) the kernel is Gaussian and its
/// value on the box boundary must be below 1e-10 of the peak. Otherwise the
/// symbol has a kink at the origin and the kernel an algebraic tail, so the
/// check instead bounds the tail mass outside the box, estimated from the
/// boundary value, by 1e-2 of the computed norm.
pub fn kernel_l1_norm<W: RadialWeight + ?Sized>(
    g: &W,
    delta: f64,
    t: f64,
    grid: &Grid2D,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !(t > 0.0 && t.is_finite()) {
        return Err(invalid(format!("time must be positive, got {t}")));
    }
    let n = grid.n();
    if n < 256 {
        return Err(invalid(format!("kernel L1 norm needs n >= 256, got {n}")));
    }
    let area = grid.area();
    let mut coeffs = Vec::with_capacity(grid.len());
    let mut peak_c = 0.0f64;
    let mut edge_c = 0.0f64;
    for i2 in 0..n {
        let k2 = grid.wavenumber(i2);
        for i1 in 0..n {
            let k1 = grid.wavenumber(i1);
            let r = (k1 * k1 + k2 * k2).sqrt();
            let c = if r == 0.0 {
                0.0
            } else {
                r.powf(2.0 - delta) * (-t * r * r / g.value(r)).exp()
            };
            peak_c = peak_c.max(c);
            if grid.is_nyquist(i1) || grid.is_nyquist(i2) {
                edge_c = edge_c.max(c);
            }
            coeffs.push(Complex64::new(c / area, 0.0));
        }
    }
    if edge_c > 1e-10 * peak_c {
        return Err(Error::Resolution(format!(
            "kernel spectrum at the Nyquist edge is {:.3e} of its peak; refine the grid",
            edge_c / peak_c
        )));
    }
    let values = grid.inverse_raw(&coeffs);
    let peak = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let half = n / 2;
    let mut boundary = 0.0f64;
    for i in 0..n {
        boundary = boundary
            .max(values[half * n + i].abs())
            .max(values[i * n + half].abs());
    }
    let h = grid.spacing();
    let norm = h * h * values.iter().map(|v| v.abs()).sum::<f64>();
    if delta == 0.0 && g.is_constant() {
        if boundary > 1e-10 * peak {
            return Err(Error::Resolution(format!(
                "kernel boundary value is {:.3e} of its peak; enlarge the box",
                boundary / peak
            )));
        }
    } else {
        let reach = 0.5 * grid.length();
        // A tail |x|^{-m} with m = 4 - δ carries ∫_R^∞ |x|^{-m} 2π|x| d|x| of mass.
        let tail_mass = boundary * reach * reach * 2.0 * PI / (2.0 - delta);
        if tail_mass > 1e-2 * norm {
            return Err(Error::Resolution(format!(
                "kernel tail outside the box is {:.3e} of the norm; enlarge the box",
                tail_mass / norm
            )));
        }
    }
    Ok(norm)
}

/// `∫₀^T t^{-(1-δ/2)} g(A_t)^{1-δ/2} dt` through the substitution `t = g(R)/R²`.
///
/// In `u = ln R` the integrand becomes `e^{-δu} g(e^u) (2 - R g'(R)/g(R))`,
/// integrated from `ln A_T` upwards in windows of width 50. The integral is
/// declared divergent when successive window contributions stop shrinking.
pub fn verify_integrability<W: RadialWeight + ?Sized>(
    g: &W,
    delta: f64,
    t_end: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(invalid(format!("T must be positive, got {t_end}")));
    }
    let u0 = solve_at(g, t_end)?.ln();
    let h = |u: f64| {
        let r = u.exp();
        (-delta * u).exp() * g.value(r) * (2.0 - g.log_slope(r))
    };
    const WIDTH: f64 = 50.0;
    const U_MAX: f64 = 700.0;
    let mut total = 0.0;
    let mut prev: Option<f64> = None;
    let mut a = u0;
    while a < U_MAX {
        let b = (a + WIDTH).min(U_MAX);
        let w = integrate(h, a, b, 0.0, 1e-12)?.value;
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Divergent { partial: total });
        }
        total += w;
        if let Some(p) = prev {
            if w >= p {
                return Err(Error::Divergent { partial: total });
            }
        }
        if w <= 1e-16 * total {
            return Ok(total);
        }
        prev = Some(w);
        a = b;
    }
    match prev {
        Some(last) if last <= 1e-12 * total => Ok(total),
        _ => Err(Error::Divergent { partial: total }),
    }
}

/// The same integral as [`verify_integrability`], computed directly in
/// `v = ln t` on `[-700, ln T]` with a root solve for `A_t` at every node.
pub fn envelope_integral_direct<W: RadialWeight + ?Sized>(
    g: &W,
    delta: f64,
    t_end: f64,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    let p = 1.0 - 0.5 * delta;
    let h = |v: f64| {
        let t = v.exp();
        match solve_at(g, t) {
            Ok(a) => (0.5 * delta * v).exp() * g.value(a).powf(p),
            Err(_) => f64::NAN,
        }
    };
    let top = t_end.ln();
    let mut total = 0.0;
    let mut b = top;
    while b > -700.0 {
        let a = (b - 50.0).max(-700.0);
        let w = integrate(h, a, b, 0.0, 1e-12)?.value;
        total += w;
        if w <= 1e-16 * total {
            break;
        }
        b = a;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{FnWeight, GFunction};

    fn gamma(x: f64) -> f64 {
        // Values needed for half-integer and integer arguments up to 3.
        match x {
            1.0 | 2.0 => 1.0,
            1.5 => 0.5 * PI.sqrt(),
            3.0 => 2.0,
            2.5 => 0.75 * PI.sqrt(),
            _ => panic!("no tabulated gamma for {x}"),
        }
    }

    fn gaussian_moment(s: f64, t: f64) -> f64 {
        PI * (2.0 * t).powf(-(s + 1.0)) * gamma(s + 1.0)
    }

    #[test]
    fn gaussian_examples() {
        let one = GFunction::constant(1.0).unwrap();
        let r = kernel_moment(&one, 0.0, 0.0, 0.5).unwrap();
        assert!((r.value - PI).abs() < 1e-8 * PI);
        let r = kernel_moment(&one, 1.0, 0.0, 0.5).unwrap();
        assert!((r.value - PI).abs() < 1e-8 * PI);
        assert!(r.abs_error_estimate <= 1e-8 * r.value);
        assert!(r.tail_bound <= 1e-10 * r.value);
    }

    #[test]
    fn gaussian_oracle_grid() {
        let one = GFunction::constant(1.0).unwrap();
        for s in [0.0, 0.5, 1.0, 2.0] {
            for t in [1e-3, 1e-1, 1.0] {
                let v = kernel_moment(&one, s, 0.0, t).unwrap().value;
                let e = gaussian_moment(s, t);
                assert!((v - e).abs() < 1e-8 * e, "s = {s}, t = {t}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn moment_preconditions() {
        let one = GFunction::constant(1.0).unwrap();
        assert!(kernel_moment(&one, 0.0, 1.0, 1.0).is_err());
        assert!(kernel_moment(&one, 0.5, 0.0, 0.0).is_err());
        assert!(kernel_hs_norm(&one, -1.0, 1.0).is_err());
    }

    #[test]
    fn hs_norm_examples() {
        let one = GFunction::constant(1.0).unwrap();
        assert!((kernel_hs_norm(&one, 0.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((kernel_hs_norm(&one, 0.0, PI / 8.0).unwrap() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn moment_decreases_in_t_and_k() {
        let g = GFunction::log_half();
        let ts = [1e-4, 1e-3, 1e-2, 1e-1, 1.0];
        let vals: Vec<f64> = ts
            .iter()
            .map(|&t| kernel_moment(&g, 1.5, 1.0, t).unwrap().value)
            .collect();
        assert!(vals.windows(2).all(|w| w[1] < w[0]));
        for t in ts {
            let a = kernel_moment(&g, 2.0, 0.5, t).unwrap().value;
            let b = kernel_moment(&g, 2.0, 1.0, t).unwrap().value;
            assert!(b < a);
        }
    }

    #[test]
    fn envelope_ratio_bounded() {
        let g = GFunction::log_half();
        for (s, k) in [(0.0, 0.0), (1.0, 1.0), (2.0, 1.0)] {
            let ratios: Vec<f64> = crate::symbols::log_samples(-6.0, -1.0, 11)
                .into_iter()
                .map(|t| {
                    kernel_moment(&g, s, k, t).unwrap().value
                        / moment_envelope(&g, s, k, t).unwrap()
                })
                .collect();
            let max = ratios.iter().cloned().fold(0.0, f64::max);
            let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(max / min < 10.0, "(s, k) = ({s}, {k}): band {min}..{max}");
        }
    }

    #[test]
    fn moment_at_small_t_within_envelope() {
        let g = GFunction::log_half();
        let c = kernel_moment(&g, 1.0, 1.0, 1e-2).unwrap().value
            / moment_envelope(&g, 1.0, 1.0, 1e-2).unwrap();
        let v = kernel_moment(&g, 1.0, 1.0, 1e-3).unwrap().value;
        let bound = 2.0 * c * moment_envelope(&g, 1.0, 1.0, 1e-3).unwrap();
        assert!(v.is_finite() && v < bound);
    }

    #[test]
    fn heat_kernel_l1_closed_form() {
        // ‖ΔK(t)‖_{L¹} = 2/(e t) for the Gaussian heat kernel.
        let one = GFunction::constant(1.0).unwrap();
        let t = 1.0;
        let grid = Grid2D::new(256, l1_box(&one, 0.0, t).unwrap()).unwrap();
        let v = kernel_l1_norm(&one, 0.0, t, &grid).unwrap();
        let exact = 2.0 / (std::f64::consts::E * t);
        assert!((v - exact).abs() < 1e-3 * exact, "{v} vs {exact}");

        let fine = Grid2D::new(512, grid.length()).unwrap();
        let vf = kernel_l1_norm(&one, 0.0, t, &fine).unwrap();
        assert!((v - vf).abs() < 1e-2 * vf);
    }

    #[test]
    fn l1_rejects_small_box_and_coarse_grid() {
        let one = GFunction::constant(1.0).unwrap();
        let small = Grid2D::new(256, 4.0).unwrap();
        assert!(matches!(
            kernel_l1_norm(&one, 0.0, 1.0, &small),
            Err(Error::Resolution(_))
        ));
        let coarse = Grid2D::new(64, 24.0).unwrap();
        assert!(kernel_l1_norm(&one, 0.0, 1.0, &coarse).is_err());
    }

    #[test]
    fn l1_self_similarity() {
        for (g, delta) in [
            (GFunction::constant(1.0).unwrap(), 0.0),
            (GFunction::log_half(), 0.0),
            (GFunction::log_half(), 0.5),
        ] {
            let t = 1e-2;
            let at = |t: f64| {
                let grid = Grid2D::new(256, l1_box(&g, delta, t).unwrap()).unwrap();
                kernel_l1_norm(&g, delta, t, &grid).unwrap() / l1_envelope(&g, delta, t).unwrap()
            };
            let ratio = at(t) / at(4.0 * t);
            assert!((ratio - 1.0).abs() < 0.1, "delta = {delta}: {ratio}");
        }
    }

    #[test]
    fn integrability_power_law() {
        let one = GFunction::constant(1.0).unwrap();
        let v = verify_integrability(&one, 0.5, 1.0).unwrap();
        assert!((v - 4.0).abs() < 1e-10, "{v}");
        let d = envelope_integral_direct(&one, 0.5, 1.0).unwrap();
        assert!((d - 4.0).abs() < 1e-10, "{d}");
    }

    #[test]
    fn integrability_two_routes_agree() {
        let g = GFunction::log_half();
        let a = verify_integrability(&g, 0.5, 1.0).unwrap();
        let b = envelope_integral_direct(&g, 0.5, 1.0).unwrap();
        assert!((a - b).abs() < 1e-6 * b, "{a} vs {b}");
    }

    #[test]
    fn integrability_increases_with_t() {
        let g = GFunction::log_half();
        let vals: Vec<f64> = [0.1, 0.5, 1.0, 2.0]
            .iter()
            .map(|&t| verify_integrability(&g, 0.3, t).unwrap())
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn polynomial_weight_diverges() {
        let e = std::f64::consts::E;
        let poly = FnWeight(move |r: f64| (e + r).powf(0.1));
        assert!(matches!(
            verify_integrability(&poly, 0.05, 1.0),
            Err(Error::Divergent { .. })
        ));
    }
}
