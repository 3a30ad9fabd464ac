//! Standard normal density, distribution function and their logarithms.

use crate::scalar::Scalar;

#[inline]
pub fn norm_pdf<T: Scalar>(x: T) -> T {
    let inv_sqrt_2pi = T::of(0.398_942_280_401_432_7);
    inv_sqrt_2pi * (-(x * x) / T::of(2.0)).exp()
}

#[inline]
pub fn norm_cdf<T: Scalar>(x: T) -> T {
    T::of(0.5) * (-x / T::SQRT_2()).erfc()
}

/// `ln Φ(x)`, finite for every finite `x`.
pub fn log_norm_cdf<T: Scalar>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let cdf = norm_cdf(x);
    // erfc keeps full relative accuracy until it approaches underflow.
    let floor = T::min_positive_value() * T::of(1e10);
    if x >= T::zero() || cdf > floor {
        return cdf.ln();
    }
    let x2 = x * x;
    let inv = T::one() / x2;
    let series = T::one()
        - inv * (T::one() - inv * (T::of(3.0) - inv * (T::of(15.0) - inv * T::of(105.0))));
    -x2 / T::of(2.0) - (-x).ln() - T::of(0.918_938_533_204_672_8) + series.ln()
}

/// `ln(1 - e^a)` for `a <= 0`.
fn log1m_exp<T: Scalar>(a: T) -> T {
    if a > -T::LN_2() {
        (-a.exp_m1()).ln()
    } else {
        (-a.exp()).ln_1p()
    }
}

/// `ln(Φ(b) - Φ(a))` for `a <= b`, accurate deep in either tail.
pub fn log_norm_interval<T: Scalar>(a: T, b: T) -> T {
    if !(a < b) {
        return T::neg_infinity();
    }
    if a > T::zero() {
        // Upper tail: reflect so both arguments are in the lower tail.
        return log_norm_interval(-b, -a);
    }
    if b <= T::zero() {
        let lb = log_norm_cdf(b);
        let la = log_norm_cdf(a);
        if la == T::neg_infinity() {
            return lb;
        }
        return lb + log1m_exp(la - lb);
    }
    // Straddles zero: mass is at least min(Φ(b), 1-Φ(a)) - 1/2, never tiny
    // unless the interval itself is tiny.
    (norm_cdf(b) - norm_cdf(a)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((norm_cdf(0.0f64) - 0.5).abs() < 1e-16);
        assert!((norm_cdf(3.0f64) - norm_cdf(-3.0) - 0.997_300_203_936_739_8).abs() < 1e-15);
        assert!((norm_pdf(0.0f64) - 0.398_942_280_401_432_7).abs() < 1e-16);
        assert!((norm_cdf(-1.0f64) - 0.158_655_253_931_457_05).abs() < 1e-15);
    }

    #[test]
    fn log_cdf_is_continuous_across_the_switch() {
        // The switch to the asymptotic series happens near x = -37.5.
        let mut prev = log_norm_cdf(-30.0f64);
        let mut x = -30.0;
        while x > -45.0 {
            x -= 0.01;
            let cur = log_norm_cdf(x);
            assert!(cur < prev);
            assert!((cur - prev).abs() < 0.5, "jump at {x}: {prev} -> {cur}");
            prev = cur;
        }
        // Mills-ratio check far out: ln Φ(-100) ≈ -5000 - ln(100) - ln√(2π) - 1e-4.
        let expect = -5000.0 - 100f64.ln() - 0.918_938_533_204_672_8 + (1.0 - 1e-4f64 + 3e-8).ln();
        assert!((log_norm_cdf(-100.0f64) - expect).abs() < 1e-9);
    }

    #[test]
    fn log_interval_matches_direct_difference() {
        for &(a, b) in &[(-1.0f64, 2.0), (-5.0, -4.0), (4.0, 5.0), (-0.3, -0.1), (0.2, 9.0)] {
            let direct: f64 = (norm_cdf(b) - norm_cdf(a)).ln();
            assert!((log_norm_interval(a, b) - direct).abs() < 1e-10, "{a} {b}");
        }
        // Both far in the lower tail.
        let v = log_norm_interval(-60.0f64, -59.0);
        assert!((v - log_norm_cdf(-59.0)).abs() < 1e-12);
        assert_eq!(log_norm_interval(1.0f64, 1.0), f64::NEG_INFINITY);
    }
}
