//! Special functions backing the kernel evaluations: the diagonal-parameter
//! Gauss hypergeometric function F(a,a;c;z) for c in {1,2} on z in [0,1), and
//! the modified Bessel functions I0, I1.
//!
//! The hypergeometric series is summed with an incremental term-ratio
//! recurrence (no factorials or Gamma calls on the hot path) into a
//! compensated hi/lo accumulator, and every result carries a certified
//! truncation bound.  Arguments close to z = 1 arise deep inside the light
//! cone at large times, where the direct series needs more terms than any
//! sane cap; those are rerouted through the 1-z connection formula, which is
//! the one place a (log-)Gamma evaluation is allowed.

use crate::math;
use crate::math::Accum;

/// Series term cap.  For the in-scope parameters the direct series converges
/// well before this; the cap guards misuse and the integer-2a arguments for
/// which the connection formula is unavailable.
pub const MAX_TERMS: usize = 100_000;

/// Direct series is used up to this argument; beyond it the connection
/// formula in 1-z is preferred whenever applicable.
const Z_SWITCH: f64 = 0.9;

/// Minimum distance of 2a from an integer for the connection formula: closer
/// than this the Gamma prefactors become a cancelling near-pole pair.
const CONNECTION_MARGIN: f64 = 0.05;

/// Argument bundle for F(a,a;c;z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HypergeomDiagArg {
    /// Repeated upper parameter.
    pub a: f64,
    /// Lower parameter, restricted to 1 or 2.
    pub c: f64,
    /// Argument, 0 <= z < 1.
    pub z: f64,
}

impl HypergeomDiagArg {
    pub fn new(a: f64, c: f64, z: f64) -> Self {
        HypergeomDiagArg { a, c, z }
    }
}

/// Value plus a certified bound on the truncation error of the series that
/// was actually summed (absolute), and the number of terms it took.
#[derive(Clone, Copy, Debug)]
pub struct EvalResult {
    pub value: f64,
    pub est_error: f64,
    pub terms_used: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecFunError {
    /// Argument outside the supported domain.
    Domain { what: &'static str },
    /// Term cap reached before the tail bound certified the tolerance.
    Convergence { est_error: f64, terms: usize },
    /// Result would exceed the representable range.
    Overflow { x: f64 },
}

impl core::fmt::Display for SpecFunError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SpecFunError::Domain { what } => write!(f, "domain error: {what}"),
            SpecFunError::Convergence { est_error, terms } => write!(
                f,
                "series did not certify tolerance after {terms} terms (tail bound {est_error:.3e})"
            ),
            SpecFunError::Overflow { x } => write!(f, "overflow evaluating at x = {x}"),
        }
    }
}

impl core::error::Error for SpecFunError {}

/// True when `a` is exactly a non-positive integer, making F(a,a;c;z) the
/// degree |a| polynomial with positive coefficients.
fn is_nonpositive_integer(a: f64) -> bool {
    a <= 0.0 && a == math::floor(a)
}

/// One pass of the 2F1 series sum(n) [(a)_n (b)_n / ((c)_n n!)] z^n with the
/// ratio recurrence T_{n+1} = T_n z (a+n)(b+n) / ((c+n)(1+n)).
///
/// `c` may be any real that is not a non-positive integer.  Terminates when a
/// geometric bound on the remaining tail drops below `tol` relative to the
/// partial sum, or after `max_terms`.  The tail bound uses
/// rho = z (1+|a-c|/(n+c)) (1+|b-1|/(n+1)) >= sup_{m>=n} |ratio_m|,
/// valid once n+c > 0.
fn series_2f1(
    a: f64,
    b: f64,
    c: f64,
    z: f64,
    tol: f64,
    max_terms: usize,
) -> Result<EvalResult, SpecFunError> {
    debug_assert!((0.0..1.0).contains(&z));
    let mut sum = Accum::new(1.0);
    let mut term = 1.0f64;
    // Terms with n+c <= 0 are summed unconditionally before any bound applies.
    let n_floor = if c < 0.0 { (-c) as usize + 2 } else { 2 };
    for n in 0..max_terms {
        let nf = n as f64;
        let next = term * z * (a + nf) * (b + nf) / ((c + nf) * (1.0 + nf));
        if next == 0.0 {
            // Polynomial termination (a or b hit a non-positive integer).
            sum.add(0.0);
            return Ok(EvalResult {
                value: sum.value(),
                est_error: 0.0,
                terms_used: n + 1,
            });
        }
        term = next;
        sum.add(term);
        if n + 1 >= n_floor {
            let m = nf + 1.0;
            let g_bar = (1.0 + math::abs(a - c) / (m + c)) * (1.0 + math::abs(b - 1.0) / (m + 1.0));
            let rho = z * g_bar;
            if rho < 1.0 {
                let tail = math::abs(term) * rho / (1.0 - rho);
                let s = math::abs(sum.value());
                if tail <= tol * s && math::abs(term) <= tol * s {
                    return Ok(EvalResult {
                        value: sum.value(),
                        est_error: tail + math::abs(term) * f64::EPSILON,
                        terms_used: n + 2,
                    });
                }
            }
        }
    }
    Err(SpecFunError::Convergence {
        est_error: math::abs(term) / (1.0 - z),
        terms: max_terms,
    })
}

/// Exact polynomial sum for a = -k.
fn polynomial_2f1(k: usize, c: f64, z: f64) -> EvalResult {
    let a = -(k as f64);
    let mut sum = Accum::new(1.0);
    let mut term = 1.0f64;
    for n in 0..k {
        let nf = n as f64;
        term *= z * (a + nf) * (a + nf) / ((c + nf) * (1.0 + nf));
        sum.add(term);
    }
    EvalResult {
        value: sum.value(),
        est_error: 0.0,
        terms_used: k + 1,
    }
}

/// Gamma-ratio coefficient exp(lnG(top) - lnG(bot) - lnG(bot)) with signs.
fn gamma_ratio(top: f64, bot: f64) -> f64 {
    let (lt, st) = math::ln_gamma_sign(top);
    let (lb, sb) = math::ln_gamma_sign(bot);
    st * sb * sb * math::exp(lt - 2.0 * lb)
}

/// Connection formula at z -> 1 for the diagonal function, c in {1,2}:
/// both right-hand series run in w = 1-z and converge in a handful of terms.
/// Requires 2a not an integer (the log case is not implemented; callers fall
/// back to the direct series there).
fn connection_near_one(a: f64, c: f64, z: f64, tol: f64) -> Result<EvalResult, SpecFunError> {
    let w = 1.0 - z;
    let inner_tol = tol * 0.1;
    let (coef1, coef2, r1, r2) = if c == 1.0 {
        // F(a,a;1;z) = G(1-2a)/G(1-a)^2 F(a,a;2a;w)
        //            + w^{1-2a} G(2a-1)/G(a)^2 F(1-a,1-a;2-2a;w)
        let coef1 = gamma_ratio(1.0 - 2.0 * a, 1.0 - a);
        let coef2 = gamma_ratio(2.0 * a - 1.0, a) * math::pow(w, 1.0 - 2.0 * a);
        let r1 = series_2f1(a, a, 2.0 * a, w, inner_tol, MAX_TERMS)?;
        let r2 = series_2f1(1.0 - a, 1.0 - a, 2.0 - 2.0 * a, w, inner_tol, MAX_TERMS)?;
        (coef1, coef2, r1, r2)
    } else {
        // F(a,a;2;z) = G(2)G(2-2a)/G(2-a)^2 F(a,a;2a-1;w)
        //            + w^{2-2a} G(2)G(2a-2)/G(a)^2 F(2-a,2-a;3-2a;w)
        let coef1 = gamma_ratio(2.0 - 2.0 * a, 2.0 - a);
        let coef2 = gamma_ratio(2.0 * a - 2.0, a) * math::pow(w, 2.0 - 2.0 * a);
        let r1 = series_2f1(a, a, 2.0 * a - 1.0, w, inner_tol, MAX_TERMS)?;
        let r2 = series_2f1(2.0 - a, 2.0 - a, 3.0 - 2.0 * a, w, inner_tol, MAX_TERMS)?;
        (coef1, coef2, r1, r2)
    };
    let value = coef1 * r1.value + coef2 * r2.value;
    let est_error = math::abs(coef1) * r1.est_error
        + math::abs(coef2) * r2.est_error
        + 8.0 * f64::EPSILON * (math::abs(coef1 * r1.value) + math::abs(coef2 * r2.value));
    Ok(EvalResult {
        value,
        est_error,
        terms_used: r1.terms_used + r2.terms_used,
    })
}

/// F(a,a;c;z) for c in {1,2} and z in [0,1), with certified accuracy.
///
/// Non-positive integer a returns the exact polynomial (est_error = 0).
/// `tol` is relative to the returned value; `est_error` is absolute.
pub fn gauss_2f1_diag(arg: HypergeomDiagArg, tol: f64) -> Result<EvalResult, SpecFunError> {
    let HypergeomDiagArg { a, c, z } = arg;
    if !(tol > 0.0) {
        return Err(SpecFunError::Domain {
            what: "tol must be positive",
        });
    }
    if c != 1.0 && c != 2.0 {
        return Err(SpecFunError::Domain {
            what: "c must be 1 or 2",
        });
    }
    if !(0.0..1.0).contains(&z) {
        return Err(SpecFunError::Domain {
            what: "z must lie in [0,1)",
        });
    }
    if a == 0.0 {
        return Ok(EvalResult {
            value: 1.0,
            est_error: 0.0,
            terms_used: 1,
        });
    }
    if is_nonpositive_integer(a) {
        return Ok(polynomial_2f1((-a) as usize, c, z));
    }
    let two_a_off_integer = math::abs(2.0 * a - math::round(2.0 * a)) >= CONNECTION_MARGIN;
    if z > Z_SWITCH && two_a_off_integer {
        return connection_near_one(a, c, z, tol);
    }
    series_2f1(a, a, c, z, tol, MAX_TERMS)
}

/// Modified Bessel function I0 by its power series sum(n) (x/2)^{2n}/(n!)^2.
///
/// All terms are positive, so the compensated sum is accurate to a few ulps;
/// the series is used over the whole supported range (overflow near x ~ 705).
pub fn bessel_i0(x: f64) -> Result<f64, SpecFunError> {
    let ax = math::abs(x);
    if !ax.is_finite() {
        return Err(SpecFunError::Domain {
            what: "bessel_i0 argument must be finite",
        });
    }
    if ax > 705.0 {
        return Err(SpecFunError::Overflow { x });
    }
    let q = 0.25 * ax * ax;
    let mut sum = Accum::new(1.0);
    let mut term = 1.0f64;
    for n in 1..=1000usize {
        let nf = n as f64;
        term *= q / (nf * nf);
        sum.add(term);
        if term < sum.value() * 1e-18 {
            break;
        }
    }
    Ok(sum.value())
}

/// Modified Bessel function I1 (odd in x), series (x/2) sum(n) (x/2)^{2n}/(n!(n+1)!).
pub fn bessel_i1(x: f64) -> Result<f64, SpecFunError> {
    Ok(bessel_i1_over_x(x)? * x)
}

/// I1(x)/x, even and regular at x = 0 (value 1/2); this is the factor that
/// makes d/dt I0(M sqrt(t^2-r^2)) smooth across r = t.
pub fn bessel_i1_over_x(x: f64) -> Result<f64, SpecFunError> {
    let ax = math::abs(x);
    if !ax.is_finite() {
        return Err(SpecFunError::Domain {
            what: "bessel_i1 argument must be finite",
        });
    }
    if ax > 705.0 {
        return Err(SpecFunError::Overflow { x });
    }
    let q = 0.25 * ax * ax;
    let mut sum = Accum::new(0.5);
    let mut term = 0.5f64;
    for n in 1..=1000usize {
        let nf = n as f64;
        term *= q / (nf * (nf + 1.0));
        sum.add(term);
        if term < sum.value() * 1e-18 {
            break;
        }
    }
    Ok(sum.value())
}
