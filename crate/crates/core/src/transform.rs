//! Solutions of the linear Klein-Gordon equations by integral transforms —
//! the Minkowski imaginary-mass representation through I0-weighted integrals
//! of wave solutions, and the de Sitter source/Cauchy representations through
//! the kernels E, K0, K1 — together with the maximum-principle checks they
//! support and the tail functional.

use alloc::vec::Vec;

use crate::kernels::{self, KernelError};
use crate::math;
use crate::quad::{self, Grading, QuadError};
use crate::specfun::{self, SpecFunError};
use crate::wave::{dalembert_1d, radial_wave_3d, FieldSampler};

/// Absolute tolerance on maximum-principle inequality violations.
pub const TOL_MP: f64 = 1e-7;

/// Superharmonicity gate: the discrete Laplacian at every sample point must
/// not exceed this.
pub const TOL_SH: f64 = 1e-6;

/// Step for the discrete Laplacian in the superharmonicity gate.
const SH_STEP: f64 = 1e-3;

/// Spatial geometry of the data: signed line coordinate or 3-D radial.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dim {
    Line,
    Radial3,
}

/// Cauchy data (u(.,0), u_t(.,0)) in a common geometry.
#[derive(Clone, Copy, Debug)]
pub struct CauchyData<'a> {
    pub phi0: FieldSampler<'a>,
    pub phi1: FieldSampler<'a>,
    pub dim: Dim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceSign {
    NonPositive,
    Unknown,
}

/// Right-hand side f(position, time).
#[derive(Clone, Copy)]
pub struct SourceTerm<'a> {
    f: &'a dyn Fn(f64, f64) -> f64,
    pub sign: SourceSign,
}

impl<'a> SourceTerm<'a> {
    pub fn new(f: &'a dyn Fn(f64, f64) -> f64, sign: SourceSign) -> Self {
        SourceTerm { f, sign }
    }

    pub fn zero() -> SourceTerm<'static> {
        SourceTerm {
            f: &|_, _| 0.0,
            sign: SourceSign::NonPositive,
        }
    }

    #[inline]
    pub fn value(&self, x: f64, t: f64) -> f64 {
        (self.f)(x, t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TransformError {
    Domain {
        what: &'static str,
    },
    /// A maximum-principle precondition failed; reported as invalid input,
    /// never as principle failure.
    InvalidInput {
        what: &'static str,
    },
    Kernel(KernelError),
    SpecFun(SpecFunError),
    Quad(QuadError),
}

impl From<KernelError> for TransformError {
    fn from(e: KernelError) -> Self {
        TransformError::Kernel(e)
    }
}

impl From<SpecFunError> for TransformError {
    fn from(e: SpecFunError) -> Self {
        TransformError::SpecFun(e)
    }
}

impl From<QuadError> for TransformError {
    fn from(e: QuadError) -> Self {
        TransformError::Quad(e)
    }
}

impl core::fmt::Display for TransformError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TransformError::Domain { what } => write!(f, "transform domain error: {what}"),
            TransformError::InvalidInput { what } => write!(f, "invalid input: {what}"),
            TransformError::Kernel(e) => write!(f, "{e}"),
            TransformError::SpecFun(e) => write!(f, "{e}"),
            TransformError::Quad(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for TransformError {}

/// Wave oracle value v_phi(x, r) in the given geometry.
fn wave_value(dim: Dim, phi: &FieldSampler, x: f64, r: f64) -> f64 {
    match dim {
        Dim::Line => dalembert_1d(phi, x, r),
        Dim::Radial3 => radial_wave_3d(phi, x, r),
    }
}

/// Fallible-integrand adaptive quadrature (kernel failures surface as errors).
fn quad_fallible<F>(
    f: F,
    lo: f64,
    hi: f64,
    tol: f64,
    grading: Grading,
) -> Result<f64, TransformError>
where
    F: Fn(f64) -> Result<f64, TransformError>,
{
    let cell = core::cell::Cell::new(None::<TransformError>);
    let g = |r: f64| match f(r) {
        Ok(v) => v,
        Err(e) => {
            cell.set(Some(e));
            f64::NAN
        }
    };
    let res = quad::integrate_graded(g, lo, hi, tol, grading);
    if let Some(e) = cell.take() {
        return Err(e);
    }
    Ok(res?.value)
}

/// Minkowski imaginary-mass solution of u_tt - Lap(u) - M^2 u = f with data
/// (phi0, phi1), evaluated at a point:
///
/// ```text
/// u(x,t) = int_0^t db int_0^{t-b} I0(M sqrt((t-b)^2-r^2)) v_f(x,r;b) dr
///        + v_{phi0}(x,t) + int_0^t dI0/dt (M sqrt(t^2-r^2)) v_{phi0}(x,r) dr
///        + int_0^t I0(M sqrt(t^2-r^2)) v_{phi1}(x,r) dr,
/// ```
///
/// with dI0/dt computed analytically as M^2 t I1(s)/s, which is smooth
/// across the cone r = t.
pub fn minkowski_kg_solution(
    data: &CauchyData,
    src: &SourceTerm,
    m: f64,
    x: f64,
    t: f64,
    quad_tol: f64,
) -> Result<f64, TransformError> {
    if m < 0.0 {
        return Err(TransformError::Domain {
            what: "need M >= 0",
        });
    }
    if t < 0.0 {
        return Err(TransformError::Domain {
            what: "need t >= 0",
        });
    }
    let dim = data.dim;
    let mut u = wave_value(dim, &data.phi0, x, t);

    let i0 = |s: f64| specfun::bessel_i0(s).map_err(TransformError::from);
    let di0_dt = |r: f64| -> Result<f64, TransformError> {
        let s2 = (t * t - r * r).max(0.0);
        let s = m * math::sqrt(s2);
        Ok(m * m * t * specfun::bessel_i1_over_x(s)?)
    };

    if t > 0.0 {
        u += quad_fallible(
            |r| Ok(di0_dt(r)? * wave_value(dim, &data.phi0, x, r)),
            0.0,
            t,
            quad_tol / 4.0,
            Grading::None,
        )?;
        u += quad_fallible(
            |r| {
                Ok(i0(m * math::sqrt((t * t - r * r).max(0.0)))?
                    * wave_value(dim, &data.phi1, x, r))
            },
            0.0,
            t,
            quad_tol / 4.0,
            Grading::None,
        )?;
        let inner_tol = quad_tol / (4.0 * if t > 1.0 { t } else { 1.0 });
        u += quad_fallible(
            |b| {
                let tb = t - b;
                quad_fallible(
                    |r| {
                        let s = m * math::sqrt((tb * tb - r * r).max(0.0));
                        let vf = |y: f64| src.value(y, b);
                        let sampler = FieldSampler::smooth(&vf);
                        Ok(i0(s)? * wave_value(dim, &sampler, x, r))
                    },
                    0.0,
                    tb,
                    inner_tol,
                    Grading::None,
                )
            },
            0.0,
            t,
            quad_tol / 4.0,
            Grading::None,
        )?;
    }
    Ok(u)
}

/// de Sitter source solution u = G[f] at a point:
/// 2 int_0^t db int_0^{e^{-b}-e^{-t}} v_f(x,r;b) E(r,t;0,b;M) dr.
pub fn desitter_source_solution(
    src: &SourceTerm,
    dim: Dim,
    m: f64,
    x: f64,
    t: f64,
    quad_tol: f64,
) -> Result<f64, TransformError> {
    if m < 0.0 {
        return Err(TransformError::Domain {
            what: "need M >= 0",
        });
    }
    if t < 0.0 {
        return Err(TransformError::Domain {
            what: "need t >= 0",
        });
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let et = math::exp(-t);
    let inner_tol = quad_tol / (4.0 * if t > 1.0 { t } else { 1.0 });
    let outer = quad_fallible(
        |b| {
            let cone = math::exp(-b) - et;
            quad_fallible(
                |r| {
                    let e = kernels::kernel_e_raw(r, t, b, m)?;
                    let vf = |y: f64| src.value(y, b);
                    let sampler = FieldSampler::smooth(&vf);
                    Ok(e * wave_value(dim, &sampler, x, r))
                },
                0.0,
                cone,
                inner_tol,
                Grading::TowardUpper,
            )
        },
        0.0,
        t,
        quad_tol / 2.0,
        Grading::None,
    )?;
    Ok(2.0 * outer)
}

/// de Sitter Cauchy solution at a point:
///
/// ```text
/// u(x,t) = e^{t/2} v_{u0}(x, phi(t))
///        + 2 int_0^{phi(t)} v_{u0}(x, r) K0(r,t;M) dr
///        + 2 int_0^{phi(t)} v_{u1}(x, r) K1(r,t;M) dr.
/// ```
///
/// The representation is stated for n >= 2; `Line` runs are exploratory and
/// excluded from acceptance checks.
pub fn desitter_cauchy_solution(
    data: &CauchyData,
    m: f64,
    x: f64,
    t: f64,
    quad_tol: f64,
) -> Result<f64, TransformError> {
    if m < 0.0 {
        return Err(TransformError::Domain {
            what: "need M >= 0",
        });
    }
    if t < 0.0 {
        return Err(TransformError::Domain {
            what: "need t >= 0",
        });
    }
    let p = kernels::phi(t);
    let dim = data.dim;
    let mut u = math::exp(0.5 * t) * wave_value(dim, &data.phi0, x, p);
    if t > 0.0 {
        u += 2.0
            * quad_fallible(
                |r| Ok(kernels::kernel_k0_raw(r, t, m)? * wave_value(dim, &data.phi0, x, r)),
                0.0,
                p,
                quad_tol / 4.0,
                Grading::TowardUpper,
            )?;
        u += 2.0
            * quad_fallible(
                |r| Ok(kernels::kernel_e_raw(r, t, 0.0, m)? * wave_value(dim, &data.phi1, x, r)),
                0.0,
                p,
                quad_tol / 4.0,
                Grading::TowardUpper,
            )?;
    }
    Ok(u)
}

/// v(s) - (1/2) int_0^s v(r) dr — the light-cone tail functional.
pub fn tail_functional<F: Fn(f64) -> f64>(
    v: F,
    s: f64,
    quad_tol: f64,
) -> Result<f64, TransformError> {
    if !(0.0..=1.0).contains(&s) {
        return Err(TransformError::Domain {
            what: "need s in [0,1]",
        });
    }
    let integral = if s > 0.0 {
        quad::integrate(&v, 0.0, s, quad_tol)?.value
    } else {
        0.0
    };
    Ok(v(s) - 0.5 * integral)
}

/// Where the samples for a maximum-principle check live.
#[derive(Clone, Copy, Debug)]
pub struct SampleSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub t_max: f64,
    pub nt: usize,
}

/// One checked sample (feeds the per-sample CSV).
#[derive(Clone, Copy, Debug)]
pub struct MpSample {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub rhs: f64,
    pub violation: f64,
}

#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MaxPrincipleReport {
    pub space: &'static str,
    pub m: f64,
    pub n_points: usize,
    pub worst_violation: f64,
    /// ln(M/(M-1)) in de Sitter (0 when the first datum vanishes), 0 in
    /// Minkowski.
    pub t_threshold: f64,
    pub passed: bool,
}

/// Discrete Laplacian of a sampler at x (line: second difference; radial:
/// phi'' + 2 phi'/r with the regular origin limit 3 phi''(0)).
fn discrete_laplacian(dim: Dim, phi: &FieldSampler, x: f64) -> f64 {
    let h = SH_STEP;
    match dim {
        Dim::Line => (phi.value(x - h) - 2.0 * phi.value(x) + phi.value(x + h)) / (h * h),
        Dim::Radial3 => {
            if x > h {
                let d2 = (phi.value(x - h) - 2.0 * phi.value(x) + phi.value(x + h)) / (h * h);
                let d1 = (phi.value(x + h) - phi.value(x - h)) / (2.0 * h);
                d2 + 2.0 * d1 / x
            } else {
                6.0 * (phi.value(h) - phi.value(0.0)) / (h * h)
            }
        }
    }
}

fn gate_superharmonic_nonpositive(
    dim: Dim,
    phi: &FieldSampler,
    xs: &[f64],
    what: &'static str,
) -> Result<(), TransformError> {
    for &x in xs {
        if phi.value(x) > 1e-12 {
            return Err(TransformError::InvalidInput { what });
        }
        if discrete_laplacian(dim, phi, x) > TOL_SH {
            return Err(TransformError::InvalidInput { what });
        }
    }
    Ok(())
}

fn sample_positions(dim: Dim, spec: &SampleSpec) -> Vec<f64> {
    let lo = match dim {
        Dim::Radial3 => spec.x_min.max(0.0),
        Dim::Line => spec.x_min,
    };
    (0..spec.nx)
        .map(|i| lo + (spec.x_max - lo) * i as f64 / (spec.nx.max(2) - 1) as f64)
        .collect()
}

/// Checks u <= RHS and u <= 0 on a sample grid for the Minkowski
/// imaginary-mass equation with superharmonic nonpositive data and source.
///
/// ```text
/// RHS = int_0^t f(x,b) sinh(M(t-b))/M db + cosh(Mt) phi0(x) + sinh(Mt)/M phi1(x)
/// ```
pub fn check_max_principle_minkowski(
    data: &CauchyData,
    src: &SourceTerm,
    m: f64,
    spec: &SampleSpec,
    quad_tol: f64,
) -> Result<(MaxPrincipleReport, Vec<MpSample>), TransformError> {
    let xs = sample_positions(data.dim, spec);
    gate_superharmonic_nonpositive(
        data.dim,
        &data.phi0,
        &xs,
        "u(.,0) must be superharmonic and <= 0",
    )?;
    gate_superharmonic_nonpositive(
        data.dim,
        &data.phi1,
        &xs,
        "u_t(.,0) must be superharmonic and <= 0",
    )?;
    gate_source(data.dim, src, &xs, spec.t_max)?;
    let mut samples = Vec::with_capacity(spec.nx * spec.nt);
    let mut worst = f64::NEG_INFINITY;
    for j in 0..spec.nt {
        let t = spec.t_max * (j + 1) as f64 / spec.nt as f64;
        for &x in &xs {
            let u = minkowski_kg_solution(data, src, m, x, t, quad_tol)?;
            let rhs = principle_rhs(data, src, m, x, t, quad_tol)?;
            let violation = (u - rhs).max(u);
            worst = worst.max(violation);
            samples.push(MpSample {
                x,
                t,
                u,
                rhs,
                violation,
            });
        }
    }
    let report = MaxPrincipleReport {
        space: "minkowski",
        m,
        n_points: samples.len(),
        worst_violation: worst,
        t_threshold: 0.0,
        passed: worst <= TOL_MP,
    };
    Ok((report, samples))
}

/// Checks u <= RHS and u <= 0 for the de Sitter equation.  Requires M > 1
/// and samples t >= ln(M/(M-1)) unless the first datum vanishes identically,
/// in which case any M >= 0 is admitted and t starts at 0.
pub fn check_max_principle_desitter(
    data: &CauchyData,
    src: &SourceTerm,
    m: f64,
    spec: &SampleSpec,
    quad_tol: f64,
) -> Result<(MaxPrincipleReport, Vec<MpSample>), TransformError> {
    let xs = sample_positions(data.dim, spec);
    let phi0_vanishes = xs.iter().all(|&x| data.phi0.value(x) == 0.0)
        && data.phi0.value(0.5 * (spec.x_min + spec.x_max) + 0.123) == 0.0;
    let t_threshold = if phi0_vanishes {
        0.0
    } else if m > 1.0 {
        math::ln(m / (m - 1.0))
    } else {
        return Err(TransformError::InvalidInput {
            what: "de Sitter principle with nonvanishing first datum needs M > 1",
        });
    };
    if t_threshold >= spec.t_max {
        return Err(TransformError::Domain {
            what: "t_max below the principle threshold",
        });
    }
    gate_superharmonic_nonpositive(
        data.dim,
        &data.phi0,
        &xs,
        "u(.,0) must be superharmonic and <= 0",
    )?;
    gate_superharmonic_nonpositive(
        data.dim,
        &data.phi1,
        &xs,
        "u_t(.,0) must be superharmonic and <= 0",
    )?;
    gate_source(data.dim, src, &xs, spec.t_max)?;
    let mut samples = Vec::with_capacity(spec.nx * spec.nt);
    let mut worst = f64::NEG_INFINITY;
    for j in 0..spec.nt {
        let t = t_threshold + (spec.t_max - t_threshold) * (j + 1) as f64 / spec.nt as f64;
        for &x in &xs {
            let u = desitter_cauchy_solution(data, m, x, t, quad_tol)?
                + desitter_source_solution(src, data.dim, m, x, t, quad_tol)?;
            let rhs = principle_rhs(data, src, m, x, t, quad_tol)?;
            let violation = (u - rhs).max(u);
            worst = worst.max(violation);
            samples.push(MpSample {
                x,
                t,
                u,
                rhs,
                violation,
            });
        }
    }
    let report = MaxPrincipleReport {
        space: "desitter",
        m,
        n_points: samples.len(),
        worst_violation: worst,
        t_threshold,
        passed: worst <= TOL_MP,
    };
    Ok((report, samples))
}

/// Common right-hand side of both principle inequalities.
fn principle_rhs(
    data: &CauchyData,
    src: &SourceTerm,
    m: f64,
    x: f64,
    t: f64,
    quad_tol: f64,
) -> Result<f64, TransformError> {
    let source_part = if t > 0.0 {
        quad::integrate(
            |b| src.value(x, b) * math::sinh_ratio(m, t - b),
            0.0,
            t,
            quad_tol,
        )?
        .value
    } else {
        0.0
    };
    Ok(source_part
        + math::cosh(m * t) * data.phi0.value(x)
        + math::sinh_ratio(m, t) * data.phi1.value(x))
}

fn gate_source(dim: Dim, src: &SourceTerm, xs: &[f64], t_max: f64) -> Result<(), TransformError> {
    for j in 0..5 {
        let b = t_max * j as f64 / 4.0;
        for &x in xs {
            if src.value(x, b) > 1e-12 {
                return Err(TransformError::InvalidInput {
                    what: "source must be <= 0",
                });
            }
            let prof = |y: f64| src.value(y, b);
            let s = FieldSampler::smooth(&prof);
            if discrete_laplacian(dim, &s, x) > TOL_SH {
                return Err(TransformError::InvalidInput {
                    what: "source must be superharmonic in x",
                });
            }
        }
    }
    Ok(())
}
