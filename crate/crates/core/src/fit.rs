//! Least-squares line fits on log–log data, with Student-t confidence intervals,
//! and Spearman rank correlation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Standard error of the slope; NaN when there are only two points.
    pub slope_se: f64,
    pub n: usize,
}

impl LineFit {
    /// Half-width of the two-sided confidence interval for the slope.
    pub fn ci_halfwidth(&self, level: f64) -> f64 {
        if self.n < 3 || !self.slope_se.is_finite() {
            return f64::INFINITY;
        }
        if self.slope_se == 0.0 {
            return 0.0;
        }
        let dist = StudentsT::new(0.0, 1.0, (self.n - 2) as f64).expect("positive degrees of freedom");
        dist.inverse_cdf(0.5 + 0.5 * level) * self.slope_se
    }
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    let n = xs.len();
    if n != ys.len() {
        return Err(Error::arg(format!("fit needs equal-length data, got {} and {}", n, ys.len())));
    }
    if n < 2 {
        return Err(Error::arg(format!("fit needs at least 2 points, got {n}")));
    }
    if xs.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::arg("fit data must be finite"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::arg("fit abscissae are all equal"));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { (1.0 - sse / syy).clamp(0.0, 1.0) };
    let slope_se = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(LineFit { slope, intercept, r2, slope_se, n })
}

/// Average ranks (1-based), ties sharing the mean rank.
pub fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * (i + j) as f64 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

/// Spearman correlation: Pearson correlation of the average ranks.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::arg("spearman needs two equal-length samples of size >= 2"));
    }
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    if va == 0.0 || vb == 0.0 {
        return Ok(0.0);
    }
    Ok(cov / (va * vb).sqrt())
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-15);
        assert!((f.intercept - 2.0).abs() < 1e-15);
        assert_eq!(f.r2, 1.0);
        assert_eq!(f.ci_halfwidth(0.95), 0.0);
    }

    #[test]
    fn ci_matches_hand_computation() {
        // residuals ±0.1 alternate: sse = 0.04, sxx = 5, se = sqrt(0.04/2/5)
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.1, 0.9, 2.1, 2.9];
        let f = least_squares(&xs, &ys).unwrap();
        assert!((f.slope - 0.96).abs() < 1e-12);
        let se = f.slope_se;
        let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - f.intercept - f.slope * x).powi(2)).sum();
        assert!((se - (sse / 2.0 / 5.0).sqrt()).abs() < 1e-15);
        // t_{0.975, 2} = 4.302652729911275
        assert!((f.ci_halfwidth(0.95) / se - 4.302652729911275).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(least_squares(&[1.0], &[2.0]).is_err());
        assert!(least_squares(&[1.0, 1.0], &[2.0, 3.0]).is_err());
        assert!(least_squares(&[1.0, 2.0], &[2.0, 3.0]).unwrap().ci_halfwidth(0.95).is_infinite());
    }

    #[test]
    fn spearman_monotone_and_ties() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap(), 1.0);
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_eq!(ranks(&[5.0, 1.0, 5.0]), vec![2.5, 1.0, 2.5]);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }
}
