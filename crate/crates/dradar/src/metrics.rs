//! Image quality figures.

/// `10 log10(||c x - g||^2 / ||g||^2)` with the least-squares scale
/// `c = <x, g> / <x, x>`, so images of arbitrary scale (BP is peak
/// normalized) are compared on shape alone.
pub fn nmse_db(estimate: &[f64], truth: &[f64]) -> f64 {
    assert_eq!(estimate.len(), truth.len(), "image sizes differ");
    let xx: f64 = estimate.iter().map(|a| a * a).sum();
    let xg: f64 = estimate.iter().zip(truth).map(|(a, b)| a * b).sum();
    let gg: f64 = truth.iter().map(|b| b * b).sum();
    let c = if xx > 0.0 { xg / xx } else { 0.0 };
    let err: f64 = estimate.iter().zip(truth).map(|(a, b)| (c * a - b).powi(2)).sum();
    10.0 * (err / gg).log10()
}

/// `||a - b|| / ||b||`.
pub fn relative_difference(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "image sizes differ");
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let n: f64 = b.iter().map(|y| y * y).sum();
    if n == 0.0 {
        return if d == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (d / n).sqrt()
}
