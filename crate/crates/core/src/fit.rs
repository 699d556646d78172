//! Small regression helpers for scan summaries.

/// Least-squares slope of `ln y` against `ln x` over the points with both
/// coordinates positive. `None` with fewer than two such points.
pub fn loglog_slope(points: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .into_iter()
        .filter(|&(x, y)| x > 0.0 && y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

/// Every value strictly below its predecessor.
pub fn strictly_decreasing(values: impl IntoIterator<Item = f64>) -> bool {
    let v: Vec<f64> = values.into_iter().collect();
    v.windows(2).all(|w| w[1] < w[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_slope() {
        let s = loglog_slope((1..10).map(|n| (n as f64, 3.0 / (n as f64).powi(2)))).unwrap();
        assert!((s + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope([(1.0, 0.0), (2.0, 1.0)]), None);
        assert!(strictly_decreasing([3.0, 2.0, 1.0]));
        assert!(!strictly_decreasing([3.0, 3.0]));
    }
}
