//! The de Sitter kernel functions E, K0, K1, the three integral identities
//! behind the maximum-principle proof, and positivity / sign-change scans.
//!
//! `E` is the source kernel
//!
//! ```text
//! E(z,t;0,b;M) = 4^{-M} e^{M(b+t)} A^{M-1/2} F(1/2-M, 1/2-M; 1; B/A),
//! A = (e^{-b}+e^{-t})^2 - z^2,   B = (e^{-b}-e^{-t})^2 - z^2,
//! ```
//!
//! `K1(z,t;M) = E(z,t;0,0;M)` propagates the second Cauchy datum and
//! `K0(z,t;M) = -[d/db E(z,t;0,b;M)]_{b=0}` the first.  K0 is evaluated by
//! carrying out the b-derivative analytically, which keeps every
//! hypergeometric factor diagonal (the printed two-term rearrangement with a
//! 1/B prefactor is algebraically equal but is a 0/0 form at the light-cone
//! boundary B = 0, where this route stays regular).

use alloc::vec::Vec;

use crate::math;
use crate::quad::{self, Grading};
use crate::specfun::{self, HypergeomDiagArg, SpecFunError};

/// Scan values within this band of zero are treated as "numerically zero"
/// when deciding sign changes.
pub const TOL_SCAN: f64 = 1e-10;

/// Relative cone-boundary guard for K0: error out when
/// (1-e^{-t})^2 - z^2 < TOL_CONE * (1-e^{-t})^2.
pub const TOL_CONE: f64 = 1e-13;

/// Relative margin kept from the light-cone edge by the scan grids.
const SCAN_CONE_MARGIN: f64 = 1e-9;

/// Hypergeometric tolerance used inside kernel evaluations.  The identity
/// checks need the kernels at close to full f64 accuracy (cosh(Mt) grows to
/// ~1e6 over the in-scope parameter range while the permitted residual stays
/// absolute), so this is kept near roundoff.
const F_TOL: f64 = 1e-14;

/// Evaluation point (z,t; source time b; effective mass M).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelArg {
    /// Spatial separation |x - x0|, >= 0.
    pub z: f64,
    /// Evaluation time, >= 0.
    pub t: f64,
    /// Source time t0 in [0, t].
    pub b: f64,
    /// Effective mass (M^2 = 9/4 + mu^2 for the Higgs case).
    pub m: f64,
}

impl KernelArg {
    pub fn new(z: f64, t: f64, b: f64, m: f64) -> Self {
        KernelArg { z, t, b, m }
    }

    /// Argument with b = 0, as K0 and K1 require.
    pub fn cauchy(z: f64, t: f64, m: f64) -> Self {
        KernelArg { z, t, b: 0.0, m }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KernelError {
    Domain {
        what: &'static str,
    },
    /// K0 requested within TOL_CONE of the light-cone boundary.
    SingularBoundary {
        z: f64,
        t: f64,
    },
    SpecFun(SpecFunError),
    Quad(quad::QuadError),
}

impl From<SpecFunError> for KernelError {
    fn from(e: SpecFunError) -> Self {
        KernelError::SpecFun(e)
    }
}

impl From<quad::QuadError> for KernelError {
    fn from(e: quad::QuadError) -> Self {
        KernelError::Quad(e)
    }
}

impl core::fmt::Display for KernelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            KernelError::Domain { what } => write!(f, "kernel domain error: {what}"),
            KernelError::SingularBoundary { z, t } => {
                write!(
                    f,
                    "K0 evaluated on the light-cone boundary (z = {z}, t = {t})"
                )
            }
            KernelError::SpecFun(e) => write!(f, "{e}"),
            KernelError::Quad(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for KernelError {}

/// phi(t) := 1 - e^{-t}, the light-cone radius from time 0.
pub fn phi(t: f64) -> f64 {
    -math::exp(-t) + 1.0
}

/// E without domain checks; shared by E, K1 and the scans.
pub(crate) fn kernel_e_raw(z: f64, t: f64, b: f64, m: f64) -> Result<f64, KernelError> {
    let et = math::exp(-t);
    let eb = math::exp(-b);
    let a_big = (eb + et) * (eb + et) - z * z;
    let b_big = (eb - et) * (eb - et) - z * z;
    let zeta = (b_big / a_big).clamp(0.0, 1.0 - f64::EPSILON);
    let f = specfun::gauss_2f1_diag(HypergeomDiagArg::new(0.5 - m, 1.0, zeta), F_TOL)?;
    let pref = math::exp(m * (b + t) - m * math::ln(4.0) + (m - 0.5) * math::ln(a_big));
    Ok(pref * f.value)
}

/// Source kernel E(z,t;0,b;M).
pub fn kernel_e(arg: KernelArg) -> Result<f64, KernelError> {
    let KernelArg { z, t, b, m } = arg;
    if !(0.0..=t).contains(&b) {
        return Err(KernelError::Domain {
            what: "need 0 <= b <= t",
        });
    }
    if m < 0.0 {
        return Err(KernelError::Domain {
            what: "need M >= 0",
        });
    }
    let cone = math::exp(-b) - math::exp(-t);
    if z < 0.0 || z > cone * (1.0 + 1e-12) + 1e-300 {
        return Err(KernelError::Domain {
            what: "need 0 <= z <= e^{-b} - e^{-t}",
        });
    }
    kernel_e_raw(z, t, b, m)
}

/// Second-data kernel K1(z,t;M) = E(z,t;0,0;M); same code path as E.
pub fn kernel_k1(arg: KernelArg) -> Result<f64, KernelError> {
    let KernelArg { z, t, b, m } = arg;
    if b != 0.0 {
        return Err(KernelError::Domain {
            what: "K1 requires b = 0",
        });
    }
    kernel_e(KernelArg { z, t, b: 0.0, m })
}

/// First-data kernel K0(z,t;M) = -[d/db E(z,t;0,b;M)]_{b=0}.
///
/// The derivative is taken analytically:
///
/// ```text
/// K0 = -4^{-M} e^{Mt} A^{M-1/2} [ (M + (M-1/2) A'/A) F(a,a;1;zeta)
///                                + a^2 zeta' F(a+1,a+1;2;zeta) ],
/// a = 1/2-M,  A' = -2(1+e^{-t}),  zeta' = -4 e^{-t} (1-e^{-2t}+z^2) / A^2,
/// ```
///
/// evaluated at b = 0.  For half-integer M the polynomial representation
/// [`kernel_k0_half_integer`] provides an independent cross-check path.
pub fn kernel_k0(arg: KernelArg) -> Result<f64, KernelError> {
    let KernelArg { z, t, b, m } = arg;
    if b != 0.0 {
        return Err(KernelError::Domain {
            what: "K0 requires b = 0",
        });
    }
    if m < 0.0 {
        return Err(KernelError::Domain {
            what: "need M >= 0",
        });
    }
    if t <= 0.0 {
        return Err(KernelError::Domain {
            what: "K0 requires t > 0",
        });
    }
    let p = phi(t);
    if z < 0.0 || z >= p {
        return Err(KernelError::Domain {
            what: "need 0 <= z < 1 - e^{-t}",
        });
    }
    let b_big = (1.0 - math::exp(-t)) * (1.0 - math::exp(-t)) - z * z;
    if b_big < TOL_CONE * p * p {
        return Err(KernelError::SingularBoundary { z, t });
    }
    kernel_k0_raw(z, t, m)
}

/// K0 by the analytic-derivative route without domain gating.  The expression
/// is regular on the whole closed cone (the 0/0 prefactor form is avoided),
/// so internal quadratures may evaluate arbitrarily close to the boundary.
pub(crate) fn kernel_k0_raw(z: f64, t: f64, m: f64) -> Result<f64, KernelError> {
    let et = math::exp(-t);
    let a_big = (1.0 + et) * (1.0 + et) - z * z;
    let b_big = (1.0 - et) * (1.0 - et) - z * z;
    let a = 0.5 - m;
    let zeta = (b_big / a_big).clamp(0.0, 1.0 - f64::EPSILON);
    let f1 = specfun::gauss_2f1_diag(HypergeomDiagArg::new(a, 1.0, zeta), F_TOL)?;
    let q = 1.0 - et * et + z * z;
    let zeta_b = -4.0 * et * q / (a_big * a_big);
    let da = -2.0 * (1.0 + et);
    let mut bracket = (m + (m - 0.5) * da / a_big) * f1.value;
    if a != 0.0 {
        let f2 = specfun::gauss_2f1_diag(HypergeomDiagArg::new(a + 1.0, 2.0, zeta), F_TOL)?;
        bracket += a * a * zeta_b * f2.value;
    }
    let pref = math::exp(m * t - m * math::ln(4.0) + (m - 0.5) * math::ln(a_big));
    Ok(-pref * bracket)
}

/// Half-integer (M = k + 1/2) representation of K0 through the two exact
/// polynomials F(-k,-k;1;zeta) and F(1-k,1-k;2;zeta):
///
/// ```text
/// K0 = 4^{-k-1} e^{(k+1/2)t} A^{k-2} [ 8k^2 e^{-t} (1+z^2-e^{-2t}) F(1-k,1-k;2;zeta)
///                                     - 2((k+1/2)A - 2k(1+e^{-t})) A F(-k,-k;1;zeta) ].
/// ```
///
/// At k = 0 this collapses to -(1/4) e^{t/2} exactly.
pub fn kernel_k0_half_integer(z: f64, t: f64, k: u32) -> Result<f64, KernelError> {
    let p = phi(t);
    if z < 0.0 || z >= p {
        return Err(KernelError::Domain {
            what: "need 0 <= z < 1 - e^{-t}",
        });
    }
    let kf = k as f64;
    let et = math::exp(-t);
    let a_big = (1.0 + et) * (1.0 + et) - z * z;
    let b_big = (1.0 - et) * (1.0 - et) - z * z;
    let zeta = (b_big / a_big).clamp(0.0, 1.0 - f64::EPSILON);
    let f1 = specfun::gauss_2f1_diag(HypergeomDiagArg::new(-kf, 1.0, zeta), F_TOL)?;
    let f2 = if k >= 1 {
        specfun::gauss_2f1_diag(HypergeomDiagArg::new(1.0 - kf, 2.0, zeta), F_TOL)?.value
    } else {
        1.0
    };
    let pref =
        math::exp((kf + 0.5) * t - (kf + 1.0) * math::ln(4.0) + (kf - 2.0) * math::ln(a_big));
    let term2 = 8.0 * kf * kf * et * (1.0 + z * z - et * et) * f2;
    let term1 = -2.0 * ((kf + 0.5) * a_big - 2.0 * kf * (1.0 + et)) * a_big * f1.value;
    Ok(pref * (term2 + term1))
}

/// Residuals of the three closed-form integral identities.
#[derive(Clone, Copy, Debug)]
pub struct IdentityResiduals {
    /// | int_0^{e^{-b}-e^{-t}} E dr - sinh(M(t-b)) / (2M) |
    pub res_e: f64,
    /// | 2 int_0^{phi(t)} K1 dr - sinh(Mt) / M |
    pub res_k1: f64,
    /// | e^{t/2} + 2 int_0^{phi(t)} K0 dr - cosh(Mt) |
    pub res_k0: f64,
}

/// Verifies the kernel integral identities by adaptive quadrature with
/// absolute target `quad_tol`, grading toward the light-cone endpoint.
pub fn verify_kernel_identities(
    t: f64,
    b: f64,
    m: f64,
    quad_tol: f64,
) -> Result<IdentityResiduals, KernelError> {
    if !(0.0..t).contains(&b) {
        return Err(KernelError::Domain {
            what: "need 0 <= b < t",
        });
    }
    if m <= 0.0 {
        return Err(KernelError::Domain { what: "need M > 0" });
    }
    let cone_e = math::exp(-b) - math::exp(-t);
    let int_e = quad_checked(|r| kernel_e_raw(r, t, b, m), 0.0, cone_e, quad_tol)?;
    let res_e = math::abs(int_e - 0.5 * math::sinh_ratio(m, t - b));

    let p = phi(t);
    let int_k1 = quad_checked(|r| kernel_e_raw(r, t, 0.0, m), 0.0, p, quad_tol)?;
    let res_k1 = math::abs(2.0 * int_k1 - math::sinh_ratio(m, t));

    let int_k0 = quad_checked(|r| kernel_k0_raw(r, t, m), 0.0, p, quad_tol)?;
    let res_k0 = math::abs(math::exp(0.5 * t) + 2.0 * int_k0 - math::cosh(m * t));

    Ok(IdentityResiduals {
        res_e,
        res_k1,
        res_k0,
    })
}

/// Adaptive quadrature of a fallible kernel over [0, hi]; kernel errors and
/// quadrature non-convergence both surface as errors.
fn quad_checked<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64, KernelError>
where
    F: Fn(f64) -> Result<f64, KernelError>,
{
    // Kernel failures are smuggled out as NaN and re-detected by the driver.
    let cell = core::cell::Cell::new(None::<KernelError>);
    let g = |r: f64| match f(r) {
        Ok(v) => v,
        Err(e) => {
            cell.set(Some(e));
            f64::NAN
        }
    };
    let res = quad::integrate_graded(g, lo, hi, tol, Grading::TowardUpper);
    if let Some(e) = cell.take() {
        return Err(e);
    }
    Ok(res.map_err(KernelError::Quad)?.value)
}

/// Which kernel a scan evaluates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KernelKind {
    E,
    K0,
    K1,
}

/// One grid sample of a scan.  For `E` the recorded value is the minimum
/// over a coarse grid of source times b in [0, t].
#[derive(Clone, Copy, Debug)]
pub struct ScanSample {
    pub z: f64,
    pub t: f64,
    pub value: f64,
}

/// Summary of a positivity scan.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PositivityReport {
    pub kind: &'static str,
    pub m: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub nz: usize,
    pub nt: usize,
    pub min_value: f64,
    pub argmin: (f64, f64),
    pub max_value: f64,
    pub argmax: (f64, f64),
    pub sign_change: bool,
    /// Grid points whose evaluation failed (recorded, not fatal).
    pub eval_errors: usize,
}

/// Scans the chosen kernel on an (z,t) grid over t in (t_min, t_max], z in
/// [0, cone - margin], and reports extrema and sign changes.
pub fn positivity_scan(
    m: f64,
    t_min: f64,
    t_max: f64,
    nz: usize,
    nt: usize,
    which: KernelKind,
) -> Result<(PositivityReport, Vec<ScanSample>), KernelError> {
    if nz < 16 || nt < 16 {
        return Err(KernelError::Domain {
            what: "need nz, nt >= 16",
        });
    }
    if !(t_max > t_min && t_max > 0.0) {
        return Err(KernelError::Domain {
            what: "need t_max > max(t_min, 0)",
        });
    }
    let b_fractions: &[f64] = match which {
        KernelKind::E => &[0.0, 0.25, 0.5, 0.75, 0.95],
        _ => &[0.0],
    };
    let mut samples = Vec::with_capacity(nz * nt);
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    let mut argmin = (0.0, 0.0);
    let mut argmax = (0.0, 0.0);
    let mut eval_errors = 0usize;
    for j in 0..nt {
        let t = t_min + (t_max - t_min) * (j + 1) as f64 / nt as f64;
        for i in 0..nz {
            let mut cell_min = f64::INFINITY;
            for &fb in b_fractions {
                let b = fb * t;
                let cone = match which {
                    KernelKind::E => math::exp(-b) - math::exp(-t),
                    _ => phi(t),
                };
                let z = cone * (1.0 - SCAN_CONE_MARGIN) * i as f64 / (nz - 1) as f64;
                let val = match which {
                    KernelKind::E => kernel_e_raw(z, t, b, m),
                    KernelKind::K1 => kernel_e_raw(z, t, 0.0, m),
                    KernelKind::K0 => kernel_k0(KernelArg::cauchy(z, t, m)),
                };
                match val {
                    Ok(v) => {
                        cell_min = cell_min.min(v);
                        if v < min_value {
                            min_value = v;
                            argmin = (z, t);
                        }
                        if v > max_value {
                            max_value = v;
                            argmax = (z, t);
                        }
                    }
                    Err(_) => eval_errors += 1,
                }
            }
            if cell_min.is_finite() {
                let z_rep = phi(t) * (1.0 - SCAN_CONE_MARGIN) * i as f64 / (nz - 1) as f64;
                samples.push(ScanSample {
                    z: z_rep,
                    t,
                    value: cell_min,
                });
            }
        }
    }
    let kind = match which {
        KernelKind::E => "E",
        KernelKind::K0 => "K0",
        KernelKind::K1 => "K1",
    };
    let report = PositivityReport {
        kind,
        m,
        t_min,
        t_max,
        nz,
        nt,
        min_value,
        argmin,
        max_value,
        argmax,
        sign_change: min_value < -TOL_SCAN && max_value > TOL_SCAN,
        eval_errors,
    };
    Ok((report, samples))
}
