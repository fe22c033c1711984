//! Log-log least-squares exponent fits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub max_residual: f64,
}

/// Fits `value ≈ e^{intercept} · scale^{slope}`.
pub fn fit_scaling(pairs: &[(f64, f64)]) -> Result<ScalingFit> {
    if pairs.len() < 3 {
        return Err(invalid(format!("need at least 3 points, got {}", pairs.len())));
    }
    if pairs.iter().any(|&(s, v)| !(s > 0.0 && v > 0.0) || !s.is_finite() || !v.is_finite()) {
        return Err(invalid("scales and values must be positive and finite"));
    }
    let (slope, intercept, max_residual) = log_log_line(pairs)?;
    Ok(ScalingFit { points: pairs.to_vec(), slope, intercept, max_residual })
}

/// Least-squares line through `(ln s, ln v)`: `(slope, intercept, max |residual|)`.
pub(crate) fn log_log_line(pairs: &[(f64, f64)]) -> Result<(f64, f64, f64)> {
    let xs: Vec<f64> = pairs.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx <= 1e-24 {
        return Err(Error::DegenerateFit("all scales are equal".into()));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_res = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).abs())
        .fold(0.0, f64::max);
    Ok((slope, intercept, max_res))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_laws() {
        let f = fit_scaling(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14);
        assert!(f.max_residual < 1e-14);
        let pairs: Vec<(f64, f64)> = (4..=8).map(|k| 2f64.powi(-k)).map(|d| (d, d.powf(-0.5))).collect();
        assert!((fit_scaling(&pairs).unwrap().slope + 0.5).abs() < 1e-14);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(fit_scaling(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]), Err(Error::DegenerateFit(_))));
        assert!(fit_scaling(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
        assert!(fit_scaling(&[(1.0, 0.0), (2.0, 2.0), (3.0, 1.0)]).is_err());
    }
}
