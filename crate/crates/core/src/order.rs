//! Log-log least squares used for every "leading order" estimate.

use serde::{Deserialize, Serialize};

/// `|x_ε| ≈ C·ρ_ε^a`, fitted on the grid tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderFit {
    /// The leading order `a`.
    pub exponent: f64,
    /// `ln C`.
    pub log_coeff: f64,
    /// RMS of the log-log residuals.
    pub residual: f64,
    pub samples_used: usize,
}

impl OrderFit {
    /// Whether the data looked like a power law (residual within `limit`).
    pub fn is_reliable(&self, limit: f64) -> bool {
        self.residual <= limit
    }
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
///
/// Returns `(slope, intercept, rms)`; `None` with fewer than two points or
/// when all `x` coincide.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (slope * x + intercept);
            r * r
        })
        .sum();
    Some((slope, intercept, (ss / nf).sqrt()))
}

/// Fits `ln|x| = a·ln ρ + c` over the pairs whose `ln|x|` is finite.
pub(crate) fn fit_log_log(ln_rho: &[f64], ln_abs: &[f64]) -> Option<OrderFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = ln_rho
        .iter()
        .zip(ln_abs)
        .filter(|(_, y)| y.is_finite())
        .map(|(x, y)| (*x, *y))
        .unzip();
    let (exponent, log_coeff, residual) = fit_line(&xs, &ys)?;
    Some(OrderFit {
        exponent,
        log_coeff,
        residual,
        samples_used: xs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let (s, c, r) = fit_line(&xs, &ys).unwrap();
        assert!((s - 2.0).abs() < 1e-14);
        assert!((c + 1.0).abs() < 1e-14);
        assert!(r < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[1.0], &[1.0]).is_none());
        assert!(fit_line(&[1.0, 1.0], &[1.0, 2.0]).is_none());
    }

    #[test]
    fn non_finite_logs_skipped() {
        let fit = fit_log_log(&[-1.0, -2.0, -3.0], &[f64::NEG_INFINITY, -4.0, -6.0]).unwrap();
        assert_eq!(fit.samples_used, 2);
        assert!((fit.exponent - 2.0).abs() < 1e-14);
    }
}
