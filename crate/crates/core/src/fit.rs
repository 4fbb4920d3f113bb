//! Least-squares slope fits on log10-log10 axes.

use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// Points with `y` below this are treated as numerical noise and dropped.
pub const NOISE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    /// 95% confidence interval on the slope; degenerate for two points.
    pub slope_ci95: (f64, f64),
    pub points_used: usize,
}

impl SlopeFit {
    pub fn within(&self, expected: f64, tol: f64) -> bool {
        (self.slope - expected).abs() <= tol
    }
}

/// Fit `log10 y = slope * log10 x + intercept`, ignoring points with
/// `y < NOISE_FLOOR` or nonpositive `x`.
pub fn fit_loglog(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidProtocol(format!(
            "fit needs paired data, got {} x and {} y values",
            xs.len(),
            ys.len()
        )));
    }
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(&x, &y)| x > 0.0 && y >= NOISE_FLOOR && y.is_finite())
        .map(|(&x, &y)| (x.log10(), y.log10()))
        .collect();
    let n = pts.len();
    if n < 2 {
        return Err(Error::InvalidProtocol(format!(
            "fit needs at least two points above the noise floor, got {n}"
        )));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx <= 0.0 {
        return Err(Error::InvalidProtocol(
            "fit needs at least two distinct x values".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_ci95 = if n > 2 {
        let sse: f64 = pts
            .iter()
            .map(|p| (p.1 - intercept - slope * p.0).powi(2))
            .sum();
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0)
            .map(|d| d.inverse_cdf(0.975))
            .unwrap_or(f64::INFINITY);
        (slope - t * se, slope + t * se)
    } else {
        (slope, slope)
    };
    Ok(SlopeFit {
        slope,
        intercept,
        slope_ci95,
        points_used: n,
    })
}
