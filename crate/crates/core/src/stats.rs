//! Small statistical helpers shared across modules.

/// Upper tail `P(X > z)` of the standard normal distribution.
pub(crate) fn normal_tail(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

/// SplitMix64 finalizer; used to derive independent per-trial RNG seeds.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tail_reference_values() {
        // Q(0) = 1/2, Q(1) = 0.158655…, Q(4) = 3.16712e-5
        assert!((normal_tail(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_tail(1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
        assert!((normal_tail(4.0) - 3.167_124_183_311_992e-5).abs() < 1e-16);
        assert!((normal_tail(-1.0) - (1.0 - 0.158_655_253_931_457_05)).abs() < 1e-12);
    }

    #[test]
    fn splitmix_is_deterministic_and_mixing() {
        assert_eq!(splitmix64(1), splitmix64(1));
        assert_ne!(splitmix64(1), splitmix64(2));
        assert_ne!(splitmix64(0), 0);
    }
}
