use serde::Serialize;

use super::BenchError;
use crate::distcone::linear_fit;

/// log(value) = intercept + slope · log(r) over the positive part of a series.
#[derive(Debug, Clone, Serialize)]
pub struct RateFit {
    pub series: Vec<(usize, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// −slope
    pub exponent: f64,
    pub predicted: Option<f64>,
    /// First and last level used.
    pub window: (usize, usize),
    pub points: usize,
}

/// Fits values strictly above `floor`; at least three must remain.
pub fn fit_rate_above(series: &[(usize, f64)], floor: f64, predicted: Option<f64>) -> Result<RateFit, BenchError> {
    let kept: Vec<(usize, f64)> = series.iter().copied().filter(|&(r, v)| r > 0 && v > floor.max(0.0) && v.is_finite()).collect();
    if kept.len() < 3 {
        return Err(BenchError::TooFewPoints { found: kept.len(), needed: 3 });
    }
    let xs: Vec<f64> = kept.iter().map(|(r, _)| (*r as f64).ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|(_, v)| v.ln()).collect();
    let (a, b, r2) = linear_fit(&xs, &ys);
    Ok(RateFit {
        series: series.to_vec(),
        slope: b,
        intercept: a,
        r_squared: r2,
        exponent: -b,
        predicted,
        window: (kept[0].0, kept[kept.len() - 1].0),
        points: kept.len(),
    })
}

pub fn fit_rate(series: &[(usize, f64)], predicted: Option<f64>) -> Result<RateFit, BenchError> {
    fit_rate_above(series, 0.0, predicted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_slopes() {
        let s2: Vec<_> = (2..=6).map(|r| (r, 3.0 / (r * r) as f64)).collect();
        assert!((fit_rate(&s2, None).unwrap().slope + 2.0).abs() < 1e-9);
        let s1: Vec<_> = (2..=6).map(|r| (r, 0.5 / r as f64)).collect();
        assert!((fit_rate(&s1, None).unwrap().slope + 1.0).abs() < 1e-9);
        let flat: Vec<_> = (2..=6).map(|r| (r, 0.7)).collect();
        assert!(fit_rate(&flat, None).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn nonpositive_values_are_dropped() {
        let s = vec![(2, 0.25), (3, 0.0), (4, -1.0), (5, 0.04)];
        assert!(matches!(fit_rate(&s, None), Err(BenchError::TooFewPoints { found: 2, .. })));
        let s = vec![(2, 0.25), (3, 1e-12), (4, 1.0 / 16.0), (5, 0.04)];
        let fit = fit_rate_above(&s, 1e-9, Some(2.0)).unwrap();
        assert_eq!(fit.points, 3);
        assert_eq!(fit.window, (2, 5));
    }
}
