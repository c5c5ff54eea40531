//! One-dimensional Gaussian kernel density estimates.

use crate::error::{Error, Result};

/// Density of `samples` smoothed by a Gaussian of standard deviation
/// `bandwidth`, evaluated at each grid point.
pub fn kde(samples: &[f64], bandwidth: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if !(bandwidth > 0.0) {
        return Err(Error::argument("KDE bandwidth must be positive"));
    }
    if samples.is_empty() {
        return Err(Error::argument("KDE needs at least one sample"));
    }
    let norm = 1.0 / (samples.len() as f64 * (2.0 * std::f64::consts::PI).sqrt() * bandwidth);
    let inv = 1.0 / (2.0 * bandwidth * bandwidth);
    Ok(grid
        .iter()
        .map(|&g| norm * samples.iter().map(|&x| (-(g - x) * (g - x) * inv).exp()).sum::<f64>())
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let dx = (hi - lo) / (n - 1) as f64;
            (0..n).map(|i| lo + dx * i as f64).collect()
        }
    }
}

/// Grid locations of strict interior local maxima. Flat tops count once, at
/// their left edge.
pub fn local_maxima(grid: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len().min(grid.len());
    let mut out = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                out.push(grid[i]);
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    out
}

/// Trapezoid rule on a sorted grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(g, v)| 0.5 * (g[1] - g[0]) * (v[0] + v[1]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn maxima_of_simple_profiles() {
        let g = linspace(0.0, 6.0, 7);
        assert_eq!(local_maxima(&g, &[0.0, 1.0, 0.0, 2.0, 2.0, 1.0, 3.0]), vec![1.0, 3.0]);
        assert!(local_maxima(&g, &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).is_empty());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(kde(&[0.0], 0.0, &[0.0]).is_err());
        assert!(kde(&[], 1.0, &[0.0]).is_err());
    }
}
