//! Scalar float helpers routed through `libm` so numeric results are
//! identical with and without the `std` feature.

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub(crate) fn norm2(xs: &[f64]) -> f64 {
    sqrt(xs.iter().map(|v| v * v).sum())
}

/// Largest power of two `<= x` for positive normal `x`, else 1.0.
/// Used for exact (rounding-free) diagonal equilibration.
pub(crate) fn pow2_floor(x: f64) -> f64 {
    if !(x > 0.0) || !x.is_finite() {
        return 1.0;
    }
    let exp_bits = x.to_bits() & 0x7FF0_0000_0000_0000;
    if exp_bits == 0 {
        return 1.0; // subnormal
    }
    f64::from_bits(exp_bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pow2_floor_brackets_input() {
        for &x in &[1.0, 1.5, 2.0, 3.9, 1e-8, 7.3e12, 0.49] {
            let p = pow2_floor(x);
            assert!(p <= x && x < 2.0 * p, "x={x} p={p}");
        }
        assert_eq!(pow2_floor(0.0), 1.0);
        assert_eq!(pow2_floor(-3.0), 1.0);
        assert_eq!(pow2_floor(f64::NAN), 1.0);
    }
}
