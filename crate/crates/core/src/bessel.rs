//! Bessel functions of the first kind by Miller's downward recurrence.
//!
//! The scattering spectrum needs `J_n(η)` for every order up to the series
//! truncation at once, so the natural implementation is a single downward
//! recurrence pass normalized with the sum rule `J_0 + 2·Σ_{k≥1} J_{2k} = 1`.
//! Upward recurrence is unstable for `n > x`; downward recurrence from a
//! well-above-turning-point seed is stable for all orders kept.

/// `J_0(x) … J_{n_max}(x)` in one downward-recurrence pass.
///
/// Stable for the full returned range. Arguments may be any finite real;
/// negative `x` uses `J_n(-x) = (-1)^n J_n(x)`.
pub fn bessel_j_sequence(n_max: usize, x: f64) -> Vec<f64> {
    assert!(x.is_finite(), "bessel_j_sequence: non-finite argument");
    if x < 0.0 {
        let mut seq = bessel_j_sequence(n_max, -x);
        for (n, j) in seq.iter_mut().enumerate() {
            if n % 2 == 1 {
                *j = -*j;
            }
        }
        return seq;
    }
    if x == 0.0 {
        let mut seq = vec![0.0; n_max + 1];
        seq[0] = 1.0;
        return seq;
    }
    if x < 1e-6 {
        // Leading series terms; for x this small orders ≥ 3 underflow the
        // double-precision tail anyway.
        return (0..=n_max).map(|n| series_j(n, x, 4)).collect();
    }

    // Start well above both the requested order and the turning point n ≈ x.
    let start = n_max.max(x.ceil() as usize) + 42;
    let mut jn = vec![0.0_f64; start + 2];
    jn[start + 1] = 0.0;
    jn[start] = 1e-30;
    let mut m = start;
    while m > 0 {
        jn[m - 1] = (2.0 * m as f64 / x) * jn[m] - jn[m + 1];
        // Downward recurrence grows toward the turning point; rescale before
        // anything overflows.
        if jn[m - 1].abs() > 1e250 {
            for v in jn[m - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
        m -= 1;
    }

    // Normalization: J_0(x) + 2·Σ J_{2k}(x) = 1.
    let mut sum = jn[0];
    let mut k = 2;
    while k <= start {
        sum += 2.0 * jn[k];
        k += 2;
    }
    let inv = 1.0 / sum;
    jn.truncate(n_max + 1);
    for v in jn.iter_mut() {
        *v *= inv;
    }
    jn
}

/// `J_n(x)` for a single (possibly negative) order.
pub fn bessel_j(n: i32, x: f64) -> f64 {
    let order = n.unsigned_abs() as usize;
    let value = bessel_j_sequence(order, x)[order];
    if n < 0 && n % 2 != 0 {
        -value
    } else {
        value
    }
}

/// Truncated power series `Σ_m (-1)^m (x/2)^{2m+n} / (m!·(m+n)!)`.
///
/// Only trustworthy for small arguments; kept as the small-x branch and as a
/// reference for tests.
fn series_j(n: usize, x: f64, terms: usize) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let mut sum = term;
    for m in 1..terms {
        term *= -(half * half) / (m as f64 * (m + n) as f64);
        sum += term;
    }
    sum
}
