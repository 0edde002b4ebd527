//! Float helpers that work on both `std` and `libm` backends.

use num_complex::Complex64;

/// Extension trait supplying the `f64` math methods that live in `std`.
/// Compiled only for `no_std` builds, where `libm` provides the kernels;
/// with `std` enabled the inherent methods win and this trait is unused.
#[cfg(not(feature = "std"))]
pub(crate) trait F64Ext {
    fn sqrt(self) -> f64;
    fn cos(self) -> f64;
    fn sin(self) -> f64;
    fn ln(self) -> f64;
    fn exp(self) -> f64;
    fn log10(self) -> f64;
    fn floor(self) -> f64;
}

#[cfg(not(feature = "std"))]
impl F64Ext for f64 {
    #[inline]
    fn sqrt(self) -> f64 {
        libm::sqrt(self)
    }
    #[inline]
    fn cos(self) -> f64 {
        libm::cos(self)
    }
    #[inline]
    fn sin(self) -> f64 {
        libm::sin(self)
    }
    #[inline]
    fn ln(self) -> f64 {
        libm::log(self)
    }
    #[inline]
    fn exp(self) -> f64 {
        libm::exp(self)
    }
    #[inline]
    fn log10(self) -> f64 {
        libm::log10(self)
    }
    #[inline]
    fn floor(self) -> f64 {
        libm::floor(self)
    }
}

/// Round to the nearest integer, ties to the even one.
///
/// Implemented from `floor` so both backends produce identical results.
pub(crate) fn round_ties_even(x: f64) -> f64 {
    let f = x.floor();
    let frac = x - f;
    let odd = (f as i64) & 1 != 0;
    if frac > 0.5 || (frac == 0.5 && odd) {
        f + 1.0
    } else {
        f
    }
}

/// e^{j theta} as a complex sample.
#[inline]
pub(crate) fn unit_phasor(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_to_even() {
        assert_eq!(round_ties_even(0.5), 0.0);
        assert_eq!(round_ties_even(1.5), 2.0);
        assert_eq!(round_ties_even(2.5), 2.0);
        assert_eq!(round_ties_even(127.5), 128.0);
        assert_eq!(round_ties_even(-0.5), 0.0);
        assert_eq!(round_ties_even(-1.5), -2.0);
        assert_eq!(round_ties_even(1.25), 1.0);
        assert_eq!(round_ties_even(1.75), 2.0);
    }

    #[test]
    fn phasor_is_unit_magnitude() {
        for k in 0..16 {
            let z = unit_phasor(0.3 * k as f64);
            assert!((z.norm_sqr() - 1.0).abs() < 1e-15);
        }
    }
}
