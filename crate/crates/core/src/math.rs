//! Thin float-math shim: std intrinsics when available, `libm` otherwise.

#![allow(dead_code)]

macro_rules! unary {
    ($($name:ident),*) => {
        $(
            #[cfg(feature = "std")]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 { x.$name() }
            #[cfg(not(feature = "std"))]
            #[inline(always)]
            pub(crate) fn $name(x: f64) -> f64 { libm::$name(x) }
        )*
    };
}

unary!(exp, sqrt, sin, cos, tan, sinh, cosh, tanh, floor, round, cbrt);

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    x.ln()
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    x.powf(y)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[cfg(feature = "std")]
#[inline(always)]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    x.hypot(y)
}
#[cfg(not(feature = "std"))]
#[inline(always)]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline(always)]
pub(crate) fn abs(x: f64) -> f64 {
    f64::from_bits(x.to_bits() & 0x7fff_ffff_ffff_ffff)
}

/// sinh(m x) / m, continued through m = 0 by its limit x.
///
/// Below `m = 1e-6` the two-term Taylor expansion in `m` is exact to well
/// under f64 roundoff for the |x| <= O(10) arguments that arise here.
pub(crate) fn sinh_ratio(m: f64, x: f64) -> f64 {
    if abs(m) < 1e-6 {
        let mx = m * x;
        x * (1.0 + mx * mx / 6.0)
    } else {
        sinh(m * x) / m
    }
}

/// Compensated (Neumaier) accumulator: keeps the running sum as a hi/lo pair,
/// which is what a double-double accumulation of a sum amounts to.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Accum {
    sum: f64,
    comp: f64,
}

impl Accum {
    pub(crate) fn new(x: f64) -> Self {
        Accum { sum: x, comp: 0.0 }
    }

    #[inline(always)]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if abs(self.sum) >= abs(x) {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline(always)]
    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Natural log of |Gamma(x)| together with the sign of Gamma(x).
///
/// Lanczos approximation (g = 7, 9 terms) with the reflection formula for
/// x < 0.5; good to ~1e-14 relative over the real arguments used here.
/// Returns an error-free sign of 0 at the poles (non-positive integers).
pub(crate) fn ln_gamma_sign(x: f64) -> (f64, f64) {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Gamma(x) Gamma(1-x) = pi / sin(pi x)
        if x == floor(x) {
            return (f64::INFINITY, 0.0);
        }
        let s = sin(core::f64::consts::PI * x);
        let (lg, _) = ln_gamma_sign(1.0 - x);
        let val = ln(core::f64::consts::PI / abs(s)) - lg;
        (val, if s > 0.0 { 1.0 } else { -1.0 })
    } else {
        let xx = x - 1.0;
        let mut a = COEF[0];
        let t = xx + G + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (xx + i as f64);
        }
        let val = 0.5 * ln(2.0 * core::f64::consts::PI) + (xx + 0.5) * ln(t) - t + ln(a);
        (val, 1.0)
    }
}

/// Gamma(x) for real x away from the poles.
pub(crate) fn gamma(x: f64) -> f64 {
    let (lg, sign) = ln_gamma_sign(x);
    sign * exp(lg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_known_values() {
        assert!(abs(gamma(1.0) - 1.0) < 1e-14);
        assert!(abs(gamma(5.0) - 24.0) < 1e-12);
        assert!(abs(gamma(0.5) - sqrt(core::f64::consts::PI)) < 1e-14);
        // Gamma(-1/2) = -2 sqrt(pi)
        assert!(abs(gamma(-0.5) + 2.0 * sqrt(core::f64::consts::PI)) < 2e-13);
        // Gamma(-3/2) = 4/3 sqrt(pi)
        let g = gamma(-1.5);
        assert!(abs(g - 4.0 / 3.0 * sqrt(core::f64::consts::PI)) < 2e-13);
    }

    #[test]
    fn sinh_ratio_limit() {
        assert_eq!(sinh_ratio(0.0, 2.5), 2.5);
        let exact = sinh(1e-7 * 3.0) / 1e-7;
        assert!(abs(sinh_ratio(1e-7, 3.0) - exact) < 1e-12);
    }

    #[test]
    fn accum_compensates() {
        let mut acc = Accum::new(1.0);
        for _ in 0..1000 {
            acc.add(1e-18);
        }
        assert!(abs(acc.value() - (1.0 + 1e-15)) < 1e-17);
    }
}
