//! Ordinary least squares on paired samples.

use serde::{Deserialize, Serialize};

/// Straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `ys` on `xs`. Returns `None` with fewer than two points or when every
/// `x` is identical.
pub fn ols(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    assert_eq!(xs.len(), ys.len(), "ols: length mismatch");
    let n = xs.len();
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mean_x = xs.iter().sum::<f64>() / nf;
    let mean_y = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mean_x;
        let dy = y - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 || !sxx.is_finite() {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 {
        if ss_res == 0.0 { 1.0 } else { 0.0 }
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Some(LinearFit { slope, intercept, r_squared, n })
}

/// Slope of the zero-intercept fit `y = slope * x`; `None` when `sum(x^2) = 0`.
pub fn ols_through_origin(xs: &[f64], ys: &[f64]) -> Option<f64> {
    assert_eq!(xs.len(), ys.len(), "ols_through_origin: length mismatch");
    let sxx: f64 = xs.iter().map(|x| x * x).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collinear_points_fit_exactly() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.3 - 2.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 - 0.8 * x).collect();
        let fit = ols(&xs, &ys).unwrap();
        assert!((fit.slope + 0.8).abs() < 1e-12);
        assert!((fit.intercept - 1.5).abs() < 1e-12);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(ols(&[1.0], &[2.0]).is_none());
        assert!(ols(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        let flat = ols(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).unwrap();
        assert_eq!(flat.slope, 0.0);
        assert_eq!(flat.r_squared, 1.0);
        assert_eq!(ols_through_origin(&[0.0, 0.0], &[1.0, 2.0]), None);
        assert_eq!(ols_through_origin(&[1.0, 2.0], &[2.0, 4.0]), Some(2.0));
    }

    proptest! {
        #[test]
        fn residuals_are_orthogonal_to_regressor(
            pts in prop::collection::vec((-10f64..10.0, -10f64..10.0), 3..60)
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Some(fit) = ols(&xs, &ys) {
                let res: Vec<f64> = xs.iter().zip(&ys).map(|(&x, &y)| y - fit.predict(x)).collect();
                let dot: f64 = res.iter().zip(&xs).map(|(r, x)| r * x).sum();
                let sum: f64 = res.iter().sum();
                let scale: f64 = xs.iter().zip(&ys).map(|(x, y)| (x * y).abs()).sum::<f64>() + 1.0;
                prop_assert!(dot.abs() <= 1e-9 * scale);
                prop_assert!(sum.abs() <= 1e-9 * scale);
                prop_assert!((0.0..=1.0).contains(&fit.r_squared));
            }
        }
    }
}
