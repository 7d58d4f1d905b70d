//! Binomial interval estimation for error probabilities.

/// Two-sided 95% z quantile.
pub const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for `errors` failures out of `trials` at 95%
/// confidence. Returns `(lo, hi)` clamped to [0, 1].
pub fn wilson_interval(errors: usize, trials: usize) -> (f64, f64) {
    assert!(trials > 0, "wilson interval needs at least one trial");
    assert!(errors <= trials, "more errors than trials");
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = Z_95 * Z_95;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = (Z_95 / denom) * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    // The bounds are exact at the extremes; rounding in `half` must not
    // leak a stray ulp past them.
    let lo = if errors == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if errors == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}
