//! Power-law exponent fits on log-log axes.

use crate::error::{invalid, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingFit {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub fitted_exponent: f64,
    pub correction_used: bool,
    /// Largest relative deviation of `value · t^{-p} / correction` from its median.
    pub residual: f64,
}

/// Least-squares slope of `ln(value / correction)` against `ln t`.
///
/// `correction`, when given, holds one positive divisor per sample.
pub fn fit_scaling(
    times: &[f64],
    values: &[f64],
    correction: Option<&[f64]>,
) -> Result<ScalingFit> {
    let n = times.len();
    if values.len() != n || correction.is_some_and(|c| c.len() != n) {
        return Err(invalid(
            "times, values and correction must have equal length",
        ));
    }
    if n < 8 {
        return Err(invalid(format!(
            "scaling fit needs at least 8 samples, got {n}"
        )));
    }
    if !(times[0] > 0.0) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times must be positive and strictly increasing"));
    }
    let span = (times[n - 1] / times[0]).log10();
    if span < 3.0 - 1e-9 {
        return Err(invalid(format!(
            "times span {span:.2} decades, need at least 3"
        )));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(invalid("values must be positive and finite"));
    }
    if correction.is_some_and(|c| c.iter().any(|v| !(*v > 0.0 && v.is_finite()))) {
        return Err(invalid("correction must be positive and finite"));
    }

    let xs: Vec<f64> = times.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = (0..n)
        .map(|i| (values[i] / correction.map_or(1.0, |c| c[i])).ln())
        .collect();
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;

    let mut scaled: Vec<f64> = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x).exp())
        .collect();
    let mut sorted = scaled.clone();
    sorted.sort_by(f64::total_cmp);
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    };
    for v in &mut scaled {
        *v = (*v / median - 1.0).abs();
    }
    let residual = scaled.into_iter().fold(0.0, f64::max);
    Ok(ScalingFit {
        times: times.to_vec(),
        values: values.to_vec(),
        fitted_exponent: slope,
        correction_used: correction.is_some(),
        residual,
    })
}
