//! Semilinear machinery for the Higgs-potential equation: the resolving
//! operator G, the weak-solution Picard iteration
//! u_{k+1} = u_0 - G[lambda e^{-3.} u_k^3], the x-independent Duffing
//! reduction, integral (F-functional) diagnostics, the sign-change condition
//! on initial data, the weighted-L^3 measure, and the static/boosted wall
//! residual check.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::quad;
use crate::sim::Field3D;
use crate::transform::{
    desitter_cauchy_solution, desitter_source_solution, CauchyData, Dim, SourceSign, SourceTerm,
    TransformError,
};
use crate::wave::FieldSampler;

#[derive(Clone, Debug, PartialEq)]
pub enum SemilinearError {
    Config {
        what: String,
    },
    /// Energy blow-up detected by the ODE integrator.
    Instability {
        t: f64,
    },
    /// Field support reaches the outer shells, so integration by parts over
    /// the box is invalid.
    SupportTouchesBoundary,
    Transform(TransformError),
}

impl From<TransformError> for SemilinearError {
    fn from(e: TransformError) -> Self {
        SemilinearError::Transform(e)
    }
}

impl core::fmt::Display for SemilinearError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SemilinearError::Config { what } => write!(f, "configuration error: {what}"),
            SemilinearError::Instability { t } => write!(f, "integrator instability at t = {t}"),
            SemilinearError::SupportTouchesBoundary => {
                write!(f, "field support touches the grid boundary")
            }
            SemilinearError::Transform(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SemilinearError {}

/// M for the Higgs reduction: M^2 = 9/4 + mu^2.
pub fn mass_from_mu2(mu2: f64) -> f64 {
    math::sqrt(2.25 + mu2)
}

/// Parameterization of the Picard iteration lattice.
#[derive(Clone, Debug)]
pub struct PicardConfig {
    /// Effective mass (use [`mass_from_mu2`] for the Higgs case).
    pub m: f64,
    pub lambda: f64,
    pub t_max: f64,
    pub n_iter: usize,
    pub nr: usize,
    pub nt: usize,
    pub r_max: f64,
    pub quad_tol: f64,
    pub dim: Dim,
}

impl PicardConfig {
    fn validate(&self) -> Result<(), SemilinearError> {
        if self.n_iter < 1 {
            return Err(SemilinearError::Config {
                what: String::from("n_iter must be >= 1"),
            });
        }
        if self.nr < 2 || self.nt < 2 {
            return Err(SemilinearError::Config {
                what: String::from("lattice needs nr, nt >= 2"),
            });
        }
        if !(self.lambda >= 0.0) {
            return Err(SemilinearError::Config {
                what: String::from("lambda must be >= 0"),
            });
        }
        Ok(())
    }
}

/// Values on the (r, t) evaluation lattice, row-major in t.
#[derive(Clone, Debug)]
pub struct Lattice {
    pub nr: usize,
    pub nt: usize,
    pub r_max: f64,
    pub t_max: f64,
    pub values: Vec<f64>,
}

impl Lattice {
    fn zeros(cfg: &PicardConfig) -> Lattice {
        Lattice {
            nr: cfg.nr,
            nt: cfg.nt,
            r_max: cfg.r_max,
            t_max: cfg.t_max,
            values: vec![0.0; cfg.nr * cfg.nt],
        }
    }

    #[inline]
    pub fn at(&self, i_r: usize, j_t: usize) -> f64 {
        self.values[j_t * self.nr + i_r]
    }

    pub fn r_of(&self, i: usize) -> f64 {
        self.r_max * i as f64 / (self.nr - 1) as f64
    }

    pub fn t_of(&self, j: usize) -> f64 {
        self.t_max * j as f64 / (self.nt - 1) as f64
    }

    /// Catmull-Rom interpolation in r and t (clamped at the edges).
    pub fn sample(&self, r: f64, t: f64) -> f64 {
        let fr = (r / self.r_max * (self.nr - 1) as f64).clamp(0.0, (self.nr - 1) as f64);
        let ft = (t / self.t_max * (self.nt - 1) as f64).clamp(0.0, (self.nt - 1) as f64);
        let ir = fr as usize;
        let it = ft as usize;
        let xr = fr - ir as f64;
        let xt = ft - it as f64;
        let mut rows = [0.0f64; 4];
        for (dj, out) in rows.iter_mut().enumerate() {
            let j = (it + dj).saturating_sub(1).min(self.nt - 1);
            let mut cols = [0.0f64; 4];
            for (di, c) in cols.iter_mut().enumerate() {
                let i = (ir + di).saturating_sub(1).min(self.nr - 1);
                *c = self.at(i, j);
            }
            *out = catmull_rom(cols, xr);
        }
        catmull_rom(rows, xt)
    }

    pub fn sup_diff(&self, other: &Lattice) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .fold(0.0f64, |m, (a, b)| m.max(math::abs(a - b)))
    }
}

fn catmull_rom(p: [f64; 4], x: f64) -> f64 {
    let [p0, p1, p2, p3] = p;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * x
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x * x
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x * x * x)
}

/// G[f] tabulated on the lattice: the de Sitter source solution evaluated
/// pointwise (pure; parallelizable over lattice points by the caller).
pub fn g_apply(src: &SourceTerm, cfg: &PicardConfig) -> Result<Lattice, SemilinearError> {
    cfg.validate()?;
    let mut out = Lattice::zeros(cfg);
    for j in 0..cfg.nt {
        let t = out.t_of(j);
        for i in 0..cfg.nr {
            let r = out.r_of(i);
            out.values[j * cfg.nr + i] =
                desitter_source_solution(src, cfg.dim, cfg.m, r, t, cfg.quad_tol)?;
        }
    }
    Ok(out)
}

/// Per-sweep convergence record of the Picard iteration.
#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConvergenceReport {
    /// sup-norm of u_{k+1} - u_k per sweep.
    pub sup_diffs: Vec<f64>,
    /// Set when the differences grew three sweeps in a row; iteration stops
    /// there (global existence is an open matter and is not presumed).
    pub diverged: bool,
}

/// Picard iteration for the weak solution of
/// u_tt - e^{-2t} Lap(u) - M^2 u = -lambda e^{-3t} u^3 with the given data:
/// u_0 from the Cauchy representation, then
/// u_{k+1} = u_0 - G[lambda e^{-3.} u_k^3] with the cube interpolated off
/// the previous lattice.
pub fn picard_weak_solution(
    data: &CauchyData,
    cfg: &PicardConfig,
) -> Result<(Lattice, ConvergenceReport), SemilinearError> {
    cfg.validate()?;
    let mut u0 = Lattice::zeros(cfg);
    for j in 0..cfg.nt {
        let t = u0.t_of(j);
        for i in 0..cfg.nr {
            let r = u0.r_of(i);
            u0.values[j * cfg.nr + i] = desitter_cauchy_solution(data, cfg.m, r, t, cfg.quad_tol)?;
        }
    }
    let mut report = ConvergenceReport::default();
    if cfg.lambda == 0.0 {
        report.sup_diffs.push(0.0);
        return Ok((u0, report));
    }
    let mut current = u0.clone();
    let mut grow_streak = 0usize;
    for _ in 0..cfg.n_iter {
        let prev = current.clone();
        let lambda = cfg.lambda;
        let cube = |r: f64, b: f64| {
            let v = prev.sample(r, b);
            lambda * math::exp(-3.0 * b) * v * v * v
        };
        let src = SourceTerm::new(&cube, SourceSign::Unknown);
        let correction = g_apply(&src, cfg)?;
        for (i, v) in current.values.iter_mut().enumerate() {
            *v = u0.values[i] - correction.values[i];
        }
        let diff = current.sup_diff(&prev);
        let grew = report.sup_diffs.last().map(|&d| diff > d).unwrap_or(false);
        grow_streak = if grew { grow_streak + 1 } else { 0 };
        report.sup_diffs.push(diff);
        if grow_streak >= 3 {
            report.diverged = true;
            break;
        }
    }
    Ok((current, report))
}

/// One state sample of the Duffing-type reduction.
#[derive(Clone, Copy, Debug)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub psi: f64,
    pub dpsi: f64,
}

/// RK4 trajectory of psi'' + 3 psi' = mu^2 psi - lambda psi^3.
/// The constants +-mu/sqrt(lambda) are fixed points.  Aborts when the state
/// leaves |psi| < 1e8 (step-size instability).
pub fn duffing_ode(
    psi0: f64,
    psi1: f64,
    mu2: f64,
    lambda: f64,
    t_end: f64,
    dt: f64,
) -> Result<Vec<TrajectoryPoint>, SemilinearError> {
    if !(dt > 0.0 && t_end > 0.0) {
        return Err(SemilinearError::Config {
            what: String::from("need dt > 0 and t_end > 0"),
        });
    }
    let f = |y: (f64, f64)| (y.1, mu2 * y.0 - lambda * y.0 * y.0 * y.0 - 3.0 * y.1);
    let steps = (t_end / dt + 0.5) as usize;
    let mut out = Vec::with_capacity(steps + 1);
    let mut y = (psi0, psi1);
    out.push(TrajectoryPoint {
        t: 0.0,
        psi: y.0,
        dpsi: y.1,
    });
    for step in 1..=steps {
        let k1 = f(y);
        let k2 = f((y.0 + 0.5 * dt * k1.0, y.1 + 0.5 * dt * k1.1));
        let k3 = f((y.0 + 0.5 * dt * k2.0, y.1 + 0.5 * dt * k2.1));
        let k4 = f((y.0 + dt * k3.0, y.1 + dt * k3.1));
        y.0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        y.1 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        let t = step as f64 * dt;
        if !y.0.is_finite() || math::abs(y.0) > 1e8 {
            return Err(SemilinearError::Instability { t });
        }
        out.push(TrajectoryPoint {
            t,
            psi: y.0,
            dpsi: y.1,
        });
    }
    Ok(out)
}

/// Time series of the integral functional F(t) = int u dx with the
/// per-snapshot lower bound on the weighted-L^3 constant.
#[derive(Clone, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionalSeries {
    pub times: Vec<f64>,
    pub f_values: Vec<f64>,
    /// Sign of the first nonvanishing F value (+1/-1), 0 for all-zero runs.
    pub sigma: i8,
    /// |int u|^3 / |int u^3| per snapshot where defined.
    pub nu_lower: Vec<Option<f64>>,
    /// Residual of F'' - M^2 F = int f at interior snapshots
    /// (second differences in t; length max(len-2, 0)).
    pub residuals: Vec<f64>,
}

/// Computes F(t) by the trapezoid rule per snapshot and the residual of the
/// reduced ODE F'' - M^2 F = int f.  Fields whose support reaches the two
/// outermost shells are rejected (the Laplacian term no longer integrates
/// to zero).
pub fn f_functional(
    snapshots: &[Field3D],
    src_integral: &[f64],
    m: f64,
) -> Result<FunctionalSeries, SemilinearError> {
    if snapshots.len() < 2 {
        return Err(SemilinearError::Config {
            what: String::from("need at least two snapshots"),
        });
    }
    if src_integral.len() != snapshots.len() {
        return Err(SemilinearError::Config {
            what: String::from("source integral series must match the snapshot count"),
        });
    }
    let mut times = Vec::with_capacity(snapshots.len());
    let mut f_values = Vec::with_capacity(snapshots.len());
    let mut nu_lower = Vec::with_capacity(snapshots.len());
    for field in snapshots {
        // Gate well above the super-luminal ripple noise of the 4th-order
        // stencil (~1e-9 of the field scale at desk resolutions) but far
        // below any shell amplitude that could bias the reduced ODE.
        let shell_tol = 1e-6 * field.max_abs();
        if support_touches_boundary(field, shell_tol) {
            return Err(SemilinearError::SupportTouchesBoundary);
        }
        times.push(field.time);
        f_values.push(field.integral());
        nu_lower.push(l3_weight_measure(field));
    }
    let sigma = f_values
        .iter()
        .find(|v| v.abs() > 0.0)
        .map(|v| if *v > 0.0 { 1i8 } else { -1 })
        .unwrap_or(0);
    let mut residuals = Vec::new();
    for j in 1..snapshots.len() - 1 {
        let dt0 = times[j] - times[j - 1];
        let dt1 = times[j + 1] - times[j];
        // nonuniform central second difference
        let d2 = 2.0 * (dt0 * f_values[j + 1] - (dt0 + dt1) * f_values[j] + dt1 * f_values[j - 1])
            / (dt0 * dt1 * (dt0 + dt1));
        residuals.push(d2 - m * m * f_values[j] - src_integral[j]);
    }
    Ok(FunctionalSeries {
        times,
        f_values,
        sigma,
        nu_lower,
        residuals,
    })
}

fn support_touches_boundary(field: &Field3D, tol: f64) -> bool {
    let n = field.n;
    for k in 0..n {
        for j in 0..n {
            for i in 0..n {
                let shell = i < 2 || j < 2 || k < 2 || i >= n - 2 || j >= n - 2 || k >= n - 2;
                if shell && math::abs(field.at(i, j, k)) > tol {
                    return true;
                }
            }
        }
    }
    false
}

/// |int psi|^3 / |int psi^3| when the cubic integral is resolvable, None
/// otherwise (this is the per-time lower bound on C nu(t)).
pub fn l3_weight_measure(field: &Field3D) -> Option<f64> {
    let i1 = field.integral();
    let i3 = field.integral_of(|v| v * v * v);
    let abs3 = field.integral_of(|v| math::abs(v * v * v));
    if math::abs(i3) <= 1e-14 * abs3 || abs3 == 0.0 {
        None
    } else {
        Some(math::abs(i1 * i1 * i1) / math::abs(i3))
    }
}

/// Which sign satisfies a data sign-change condition, and both sides.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SignChangeCheck {
    pub lhs_plus: f64,
    pub lhs_minus: f64,
    /// +1, -1, or None when neither strict inequality holds.
    pub satisfied_sigma: Option<i8>,
    /// The coefficient multiplying the first data integral.
    pub coefficient: f64,
}

/// Integral of a radial sampler over R^3: 4 pi int r^2 psi(r) dr.
pub fn radial_integral(psi: &FieldSampler, quad_tol: f64) -> Result<f64, SemilinearError> {
    let hi = if psi.support_radius.is_finite() {
        psi.support_radius
    } else {
        60.0
    };
    let v = quad::integrate(|r| r * r * psi.value(r), 0.0, hi, quad_tol)
        .map_err(TransformError::from)?
        .value;
    Ok(4.0 * core::f64::consts::PI * v)
}

/// Sign-change condition on the Higgs-field data:
/// sigma [ (sqrt(9 + 4 mu^2) + 3) int psi0 + 2 int psi1 ] > 0.
pub fn sign_change_condition(
    psi0: &FieldSampler,
    psi1: &FieldSampler,
    mu2: f64,
    quad_tol: f64,
) -> Result<SignChangeCheck, SemilinearError> {
    let coefficient = math::sqrt(9.0 + 4.0 * mu2) + 3.0;
    sign_condition_with_coefficients(psi0, psi1, coefficient, 2.0, quad_tol)
}

/// Companion condition for the transformed linear variable:
/// sigma [ M int phi0 + int phi1 ] > 0 (same implementation, coefficient
/// switch).
pub fn sign_change_condition_linear(
    phi0: &FieldSampler,
    phi1: &FieldSampler,
    m: f64,
    quad_tol: f64,
) -> Result<SignChangeCheck, SemilinearError> {
    sign_condition_with_coefficients(phi0, phi1, m, 1.0, quad_tol)
}

fn sign_condition_with_coefficients(
    psi0: &FieldSampler,
    psi1: &FieldSampler,
    c0: f64,
    c1: f64,
    quad_tol: f64,
) -> Result<SignChangeCheck, SemilinearError> {
    let i0 = radial_integral(psi0, quad_tol)?;
    let i1 = radial_integral(psi1, quad_tol)?;
    let base = c0 * i0 + c1 * i1;
    let satisfied_sigma = if base > 0.0 {
        Some(1)
    } else if base < 0.0 {
        Some(-1)
    } else {
        None
    };
    Ok(SignChangeCheck {
        lhs_plus: base,
        lhs_minus: -base,
        satisfied_sigma,
        coefficient: c0,
    })
}

/// Residual report for the flat-wall profile
/// psi(x,t) = (mu/sqrt(lambda)) tanh((mu^2/2) [N.(x-x0) + v(t-t0)] / sqrt(1-v^2)).
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WallResidual {
    pub max_residual: f64,
    /// Wall-normal coordinate where the maximum was met.
    pub arg_s: f64,
    pub amplitude: f64,
    pub steepness: f64,
}

/// Max residual of psi_tt - Lap(psi) - mu^2 psi + lambda psi^3 over a sample
/// lattice along the wall normal, all derivatives by 4th-order central
/// differences with step h.  `velocity` None gives the static wall.
pub fn static_wall_residual(
    mu: f64,
    lambda: f64,
    normal: [f64; 3],
    x0: [f64; 3],
    velocity: Option<f64>,
    h: f64,
) -> Result<WallResidual, SemilinearError> {
    if !(h > 0.0) {
        return Err(SemilinearError::Config {
            what: String::from("need h > 0"),
        });
    }
    let norm = math::sqrt(normal[0] * normal[0] + normal[1] * normal[1] + normal[2] * normal[2]);
    if math::abs(norm - 1.0) > 1e-12 {
        return Err(SemilinearError::Config {
            what: String::from("N must be a unit vector"),
        });
    }
    let v = velocity.unwrap_or(0.0);
    if !(0.0..1.0).contains(&v) {
        return Err(SemilinearError::Config {
            what: String::from("need 0 <= v < 1"),
        });
    }
    let amplitude = mu / math::sqrt(lambda);
    let steepness = 0.5 * mu * mu;
    let gamma = 1.0 / math::sqrt(1.0 - v * v);
    let profile = move |p: [f64; 3], t: f64| {
        let s =
            normal[0] * (p[0] - x0[0]) + normal[1] * (p[1] - x0[1]) + normal[2] * (p[2] - x0[2]);
        amplitude * math::tanh(steepness * (s + v * t) * gamma)
    };
    let mu2 = mu * mu;
    let (max_residual, arg_s) =
        residual_of_profile(&profile, mu2, lambda, h, steepness, x0, normal);
    Ok(WallResidual {
        max_residual,
        arg_s,
        amplitude,
        steepness,
    })
}

/// Max |psi_tt - Lap(psi) - mu^2 psi + lambda psi^3| for an arbitrary
/// space-time profile along the wall-normal sample line; returns the maximum
/// and where it was met.
fn residual_of_profile(
    profile: &dyn Fn([f64; 3], f64) -> f64,
    mu2: f64,
    lambda: f64,
    h: f64,
    steepness: f64,
    x0: [f64; 3],
    normal: [f64; 3],
) -> (f64, f64) {
    // 4th-order second derivative: (-1, 16, -30, 16, -1)/(12 h^2)
    let d2 = |g: &dyn Fn(f64) -> f64| {
        (-g(-2.0 * h) + 16.0 * g(-h) - 30.0 * g(0.0) + 16.0 * g(h) - g(2.0 * h)) / (12.0 * h * h)
    };
    let span = 6.0 / steepness.max(1e-3);
    let n_samples = 801usize;
    let mut max_residual = 0.0f64;
    let mut arg_s = 0.0f64;
    for jt in 0..3 {
        let t = 0.35 * jt as f64;
        for i in 0..n_samples {
            let s = -span + 2.0 * span * i as f64 / (n_samples - 1) as f64;
            let p = [
                x0[0] + s * normal[0],
                x0[1] + s * normal[1],
                x0[2] + s * normal[2],
            ];
            let u = profile(p, t);
            let psi_tt = d2(&|dt: f64| profile(p, t + dt));
            let lap = d2(&|dx: f64| profile([p[0] + dx, p[1], p[2]], t))
                + d2(&|dy: f64| profile([p[0], p[1] + dy, p[2]], t))
                + d2(&|dz: f64| profile([p[0], p[1], p[2] + dz], t));
            let res = psi_tt - lap - mu2 * u + lambda * u * u * u;
            if math::abs(res) > max_residual {
                max_residual = math::abs(res);
                arg_s = s;
            }
        }
    }
    (max_residual, arg_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{abs, cosh, exp, sqrt};
    use crate::wave::Smoothness;

    fn const_sampler(c: f64) -> (impl Fn(f64) -> f64, f64) {
        (move |_: f64| c, f64::INFINITY)
    }

    #[test]
    fn g_apply_zero_and_constant() {
        let cfg = PicardConfig {
            m: 0.5,
            lambda: 0.1,
            t_max: 1.0,
            n_iter: 1,
            nr: 3,
            nt: 5,
            r_max: 0.5,
            quad_tol: 1e-8,
            dim: Dim::Radial3,
        };
        let zero = g_apply(&SourceTerm::zero(), &cfg).unwrap();
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let one = |_: f64, _: f64| 1.0;
        let src = SourceTerm::new(&one, SourceSign::Unknown);
        let lat = g_apply(&src, &cfg).unwrap();
        // final-time row: 4 (cosh(t/2) - 1) at every r
        for i in 0..cfg.nr {
            let v = lat.at(i, cfg.nt - 1);
            assert!(abs(v - 0.510_503_860_825_523_1) < 1e-7, "r index {i}: {v}");
        }
    }

    #[test]
    fn g_apply_is_linear_and_monotone() {
        let cfg = PicardConfig {
            m: 1.1,
            lambda: 0.1,
            t_max: 0.8,
            n_iter: 1,
            nr: 4,
            nt: 4,
            r_max: 0.6,
            quad_tol: 1e-9,
            dim: Dim::Radial3,
        };
        let f = |x: f64, t: f64| -crate::sim::bell_value(x * x, 0.4) * (1.0 + t);
        let g = |x: f64, t: f64| 0.25 * crate::sim::bell_value(x * x, 0.3) * t;
        let combo = |x: f64, t: f64| 2.0 * f(x, t) - 0.5 * g(x, t);
        let sf = SourceTerm::new(&f, SourceSign::NonPositive);
        let sg = SourceTerm::new(&g, SourceSign::Unknown);
        let sc = SourceTerm::new(&combo, SourceSign::Unknown);
        let lf = g_apply(&sf, &cfg).unwrap();
        let lg = g_apply(&sg, &cfg).unwrap();
        let lc = g_apply(&sc, &cfg).unwrap();
        for i in 0..lf.values.len() {
            // linearity to quadrature accuracy
            let lin = 2.0 * lf.values[i] - 0.5 * lg.values[i];
            assert!((lc.values[i] - lin).abs() < 1e-7, "index {i}");
            // monotonicity: f <= g pointwise (f <= 0 <= g) and E >= 0
            assert!(lf.values[i] <= lg.values[i] + 1e-12, "index {i}");
        }
    }

    #[test]
    fn picard_lambda_zero_is_u0() {
        let (c, sr) = const_sampler(0.3);
        let phi0 = FieldSampler::new(&c, sr, Smoothness::CInf);
        let zero = |_: f64| 0.0;
        let data = CauchyData {
            phi0,
            phi1: FieldSampler::new(&zero, 0.0, Smoothness::CInf),
            dim: Dim::Radial3,
        };
        let cfg = PicardConfig {
            m: 1.2,
            lambda: 0.0,
            t_max: 0.8,
            n_iter: 4,
            nr: 3,
            nt: 4,
            r_max: 0.4,
            quad_tol: 1e-8,
            dim: Dim::Radial3,
        };
        let (u, rep) = picard_weak_solution(&data, &cfg).unwrap();
        assert_eq!(rep.sup_diffs, vec![0.0]);
        assert!(!rep.diverged);
        // u0 for constant data: c cosh(Mt)
        let v = u.at(1, cfg.nt - 1);
        assert!(abs(v - 0.3 * cosh(1.2 * 0.8)) < 1e-7);
    }

    #[test]
    fn picard_x_independent_matches_duffing_oracle() {
        // Constant data reduce the weak solution to the scalar ODE
        // u'' - M^2 u = -lambda e^{-3t} u^3.
        let c0 = 0.4;
        let (c, sr) = const_sampler(c0);
        let phi0 = FieldSampler::new(&c, sr, Smoothness::CInf);
        let zero = |_: f64| 0.0;
        let data = CauchyData {
            phi0,
            phi1: FieldSampler::new(&zero, 0.0, Smoothness::CInf),
            dim: Dim::Radial3,
        };
        let mu2 = 0.1;
        let lambda = 0.5;
        let cfg = PicardConfig {
            m: mass_from_mu2(mu2),
            lambda,
            t_max: 1.0,
            n_iter: 8,
            nr: 3,
            nt: 6,
            r_max: 0.4,
            quad_tol: 1e-8,
            dim: Dim::Radial3,
        };
        let (u, rep) = picard_weak_solution(&data, &cfg).unwrap();
        assert!(!rep.diverged);
        // RK4 oracle for the scalar ODE
        let m = cfg.m;
        let dt = 1e-4;
        let mut y = (c0, 0.0f64);
        let f =
            |t: f64, y: (f64, f64)| (y.1, m * m * y.0 - lambda * exp(-3.0 * t) * y.0 * y.0 * y.0);
        let mut t = 0.0;
        let mut oracle_at = vec![y.0];
        let per = (0.2 / dt) as usize;
        for step in 1..=(1.0 / dt) as usize {
            let k1 = f(t, y);
            let k2 = f(t + dt / 2.0, (y.0 + dt / 2.0 * k1.0, y.1 + dt / 2.0 * k1.1));
            let k3 = f(t + dt / 2.0, (y.0 + dt / 2.0 * k2.0, y.1 + dt / 2.0 * k2.1));
            let k4 = f(t + dt, (y.0 + dt * k3.0, y.1 + dt * k3.1));
            y.0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            y.1 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
            t = step as f64 * dt;
            if step % per == 0 {
                oracle_at.push(y.0);
            }
        }
        for j in 0..cfg.nt {
            let got = u.at(1, j);
            let want = oracle_at[j];
            assert!(
                abs(got - want) <= 1e-4 * abs(want),
                "t = {}: {got} vs {want}",
                u.t_of(j)
            );
        }
    }

    #[test]
    fn picard_contracts_for_small_bump() {
        let small = |r: f64| 1e-2 * crate::sim::bell_value(r * r, 0.3);
        let phi0 = FieldSampler::new(&small, 0.3, Smoothness::CInf);
        let zero = |_: f64| 0.0;
        let data = CauchyData {
            phi0,
            phi1: FieldSampler::new(&zero, 0.0, Smoothness::CInf),
            dim: Dim::Radial3,
        };
        let cfg = PicardConfig {
            m: mass_from_mu2(0.1),
            lambda: 0.1,
            t_max: 1.0,
            n_iter: 4,
            nr: 6,
            nt: 4,
            r_max: 1.4,
            quad_tol: 1e-9,
            dim: Dim::Radial3,
        };
        let (_, rep) = picard_weak_solution(&data, &cfg).unwrap();
        assert!(!rep.diverged);
        // geometric decrease of successive differences
        for w in rep.sup_diffs.windows(2) {
            assert!(w[1] <= 0.5 * w[0] + 1e-15, "diffs = {:?}", rep.sup_diffs);
        }
    }

    #[test]
    fn duffing_equilibria_and_relaxation() {
        // mu^2 = lambda = 0.1: the nontrivial constants are +-1.
        let traj = duffing_ode(1.0, 0.0, 0.1, 0.1, 50.0, 1e-3).unwrap();
        let drift = traj.iter().fold(0.0f64, |m, p| m.max(abs(p.psi - 1.0)));
        assert!(drift < 1e-10, "drift = {drift:e}");
        let traj = duffing_ode(0.0, 0.0, 0.1, 0.1, 5.0, 1e-3).unwrap();
        assert!(traj.iter().all(|p| p.psi == 0.0 && p.dpsi == 0.0));
        // small kick drifts monotonically toward the +1 well at the slow
        // overdamped rate (sqrt(9+4 mu^2)-3)/2 ~ 0.033, saturating by t~150
        let traj = duffing_ode(0.1, 0.0, 0.1, 0.1, 200.0, 1e-3).unwrap();
        let at20 = traj[(20.0 / 1e-3) as usize];
        assert!(at20.psi > 0.1 && at20.psi < 1.0, "psi(20) = {}", at20.psi);
        for w in traj.windows(2).step_by(1000) {
            assert!(w[1].psi >= w[0].psi - 1e-12);
        }
        let last = traj.last().unwrap();
        assert!(abs(last.psi - 1.0) < 1e-3, "psi(200) = {}", last.psi);
        // Richardson: halving dt changes a mid-trajectory value negligibly
        let fine = duffing_ode(0.1, 0.0, 0.1, 0.1, 20.0, 5e-4).unwrap();
        assert!(abs(fine.last().unwrap().psi - at20.psi) < 1e-9);
    }

    #[test]
    fn duffing_instability_detected() {
        // dt far beyond the stability limit of the linearized system
        let r = duffing_ode(1.0, 0.0, 100.0, 0.0, 50.0, 0.5);
        assert!(matches!(r, Err(SemilinearError::Instability { .. })));
    }

    #[test]
    fn picard_divergence_is_flagged() {
        // Large data and coupling: the iteration map is expansive and the
        // report must surface growth instead of clamping it.
        let (c, sr) = const_sampler(3.0);
        let phi0 = FieldSampler::new(&c, sr, Smoothness::CInf);
        let zero = |_: f64| 0.0;
        let data = CauchyData {
            phi0,
            phi1: FieldSampler::new(&zero, 0.0, Smoothness::CInf),
            dim: Dim::Radial3,
        };
        let cfg = PicardConfig {
            m: mass_from_mu2(0.1),
            lambda: 5.0,
            t_max: 1.5,
            n_iter: 10,
            nr: 3,
            nt: 4,
            r_max: 0.4,
            quad_tol: 1e-6,
            dim: Dim::Radial3,
        };
        let (_, rep) = picard_weak_solution(&data, &cfg).unwrap();
        assert!(rep.diverged, "sup diffs: {:?}", rep.sup_diffs);
        assert!(rep.sup_diffs.len() < 10, "iteration must stop early");
    }

    fn make_box_field(n: usize, fill: impl Fn(f64, f64, f64) -> f64, time: f64) -> Field3D {
        let dx = 1.0 / (n - 1) as f64;
        let mut f = Field3D::zeros(n, dx);
        f.time = time;
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    let id = f.idx(i, j, k);
                    f.values[id] = fill(i as f64 * dx, j as f64 * dx, k as f64 * dx);
                }
            }
        }
        f
    }

    #[test]
    fn f_functional_zero_field() {
        let snaps: Vec<Field3D> = (0..4)
            .map(|j| make_box_field(19, |_, _, _| 0.0, 0.1 * j as f64))
            .collect();
        let series = f_functional(&snaps, &[0.0; 4], 1.0).unwrap();
        assert!(series.f_values.iter().all(|&v| v == 0.0));
        assert!(series.residuals.iter().all(|&v| v == 0.0));
        assert_eq!(series.sigma, 0);
    }

    #[test]
    fn f_functional_cosh_series() {
        // Synthetic snapshots u = cosh(Mt) * bump: F(t) = cosh(Mt) F(0) and
        // the reduced ODE residual vanishes to O(dt^2).
        let m = 0.5;
        let bump = |x: f64, y: f64, z: f64| {
            let d2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) + (z - 0.5) * (z - 0.5);
            crate::sim::bell_value(d2, 0.3)
        };
        let dt = 0.05;
        let snaps: Vec<Field3D> = (0..6)
            .map(|j| {
                let t = dt * j as f64;
                make_box_field(33, |x, y, z| cosh(m * t) * bump(x, y, z), t)
            })
            .collect();
        let series = f_functional(&snaps, &[0.0; 6], m).unwrap();
        assert_eq!(series.sigma, 1);
        let f0 = series.f_values[0];
        for (j, &fv) in series.f_values.iter().enumerate() {
            let want = f0 * cosh(m * dt * j as f64);
            assert!(abs(fv - want) < 1e-12 * f0.max(1.0));
        }
        for &r in &series.residuals {
            assert!(abs(r) < 1e-4 * f0.max(1.0), "residual {r}");
        }
    }

    #[test]
    fn f_functional_rejects_boundary_support() {
        let snaps: Vec<Field3D> = (0..3)
            .map(|j| {
                make_box_field(
                    19,
                    |x, _, _| if x < 0.01 { 1.0 } else { 0.0 },
                    0.1 * j as f64,
                )
            })
            .collect();
        assert!(matches!(
            f_functional(&snaps, &[0.0; 3], 1.0),
            Err(SemilinearError::SupportTouchesBoundary)
        ));
    }

    #[test]
    fn l3_measure_values() {
        let all = make_box_field(21, |_, _, _| -1.0, 0.0);
        let v = l3_weight_measure(&all).unwrap();
        assert!(abs(v - 1.0) < 1e-12, "v = {v}");
        // antisymmetric field: cubic integral cancels
        let anti = make_box_field(21, |x, _, _| x - 0.5, 0.0);
        assert!(l3_weight_measure(&anti).is_none());
        // nonpositive bump: finite positive value
        let bump = make_box_field(
            33,
            |x, y, z| {
                let d2 = (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5) + (z - 0.5) * (z - 0.5);
                -crate::sim::bell_value(d2, 0.3)
            },
            0.0,
        );
        let v = l3_weight_measure(&bump).unwrap();
        let i1 = bump.integral();
        let i3 = bump.integral_of(|u| u * u * u);
        assert!(v > 0.0);
        assert!(abs(v - i1.abs().powi(3) / i3.abs()) < 1e-12);
    }

    #[test]
    fn sign_condition_on_two_bell_data() {
        // psi1 = -5 psi0 with psi0 >= 0: the coefficient is below 10, so the
        // minus branch is the satisfied one.
        let bell = |r: f64| crate::sim::bell_value(r * r, 0.2);
        let neg5 = |r: f64| -5.0 * crate::sim::bell_value(r * r, 0.2);
        let psi0 = FieldSampler::new(&bell, 0.2, Smoothness::CInf);
        let psi1 = FieldSampler::new(&neg5, 0.2, Smoothness::CInf);
        let chk = sign_change_condition(&psi0, &psi1, 0.1, 1e-11).unwrap();
        assert!(abs(chk.coefficient - 6.065_941_943_352_157) < 1e-12);
        assert_eq!(chk.satisfied_sigma, Some(-1));
        assert!(chk.lhs_minus > 0.0 && chk.lhs_plus < 0.0);
        // psi1 = 0: plus branch
        let zero = |_: f64| 0.0;
        let z = FieldSampler::new(&zero, 0.0, Smoothness::CInf);
        let chk = sign_change_condition(&psi0, &z, 0.1, 1e-11).unwrap();
        assert_eq!(chk.satisfied_sigma, Some(1));
        // both zero: none
        let chk = sign_change_condition(&z, &z, 0.1, 1e-11).unwrap();
        assert_eq!(chk.satisfied_sigma, None);
    }

    #[test]
    fn sign_condition_is_homogeneous() {
        let bell = |r: f64| crate::sim::bell_value(r * r, 0.25);
        let scaled = |r: f64| 7.5 * crate::sim::bell_value(r * r, 0.25);
        let vel = |r: f64| -2.0 * crate::sim::bell_value(r * r, 0.25);
        let vel_scaled = |r: f64| -15.0 * crate::sim::bell_value(r * r, 0.25);
        let p0 = FieldSampler::new(&bell, 0.25, Smoothness::CInf);
        let p0s = FieldSampler::new(&scaled, 0.25, Smoothness::CInf);
        let p1 = FieldSampler::new(&vel, 0.25, Smoothness::CInf);
        let p1s = FieldSampler::new(&vel_scaled, 0.25, Smoothness::CInf);
        let a = sign_change_condition(&p0, &p1, 0.3, 1e-11).unwrap();
        let b = sign_change_condition(&p0s, &p1s, 0.3, 1e-11).unwrap();
        assert_eq!(a.satisfied_sigma, b.satisfied_sigma);
        assert!(abs(b.lhs_plus - 7.5 * a.lhs_plus) < 1e-9 * abs(b.lhs_plus).max(1.0));
    }

    #[test]
    fn linear_condition_coefficient_switch() {
        let bell = |r: f64| crate::sim::bell_value(r * r, 0.2);
        let p0 = FieldSampler::new(&bell, 0.2, Smoothness::CInf);
        let zero = |_: f64| 0.0;
        let z = FieldSampler::new(&zero, 0.0, Smoothness::CInf);
        let chk = sign_change_condition_linear(&p0, &z, 2.5, 1e-11).unwrap();
        assert_eq!(chk.coefficient, 2.5);
        assert_eq!(chk.satisfied_sigma, Some(1));
    }

    #[test]
    fn wall_equilibrium_constant_profile() {
        // psi = mu/sqrt(lambda) exactly solves the flat equation.
        let profile = |_: [f64; 3], _: f64| 1.0f64; // mu = lambda = 1
        let (res, _) =
            residual_of_profile(&profile, 1.0, 1.0, 1e-3, 0.5, [0.0; 3], [1.0, 0.0, 0.0]);
        assert!(res < 1e-14, "residual {res}");
    }

    #[test]
    fn wall_residual_vanishes_at_matching_steepness() {
        // mu = sqrt(2), lambda = 1: steepness mu^2/2 equals mu/sqrt(2), the
        // profile solves the equation and only the O(h^4) stencil error
        // remains.
        let r =
            static_wall_residual(sqrt(2.0), 1.0, [1.0, 0.0, 0.0], [0.0; 3], None, 1e-3).unwrap();
        assert!(r.max_residual < 1e-8, "residual {}", r.max_residual);
    }

    #[test]
    fn wall_residual_mu_one_is_h_independent() {
        // mu = lambda = 1: steepness 1/2 does not match the wall equation;
        // the analytic residual max is (1/2) max|tanh sech^2| = 1/(3 sqrt 3).
        let n = [0.6, 0.8, 0.0];
        let r1 = static_wall_residual(1.0, 1.0, n, [0.1, -0.2, 0.3], None, 2e-3).unwrap();
        let r2 = static_wall_residual(1.0, 1.0, n, [0.1, -0.2, 0.3], None, 1e-3).unwrap();
        assert!(abs(r1.max_residual - r2.max_residual) < 1e-8);
        let analytic = 1.0 / (3.0 * sqrt(3.0));
        assert!(
            abs(r1.max_residual - analytic) < 1e-4,
            "residual {}",
            r1.max_residual
        );
    }

    #[test]
    fn boosted_wall_residual_is_lorentz_invariant() {
        let stat = static_wall_residual(1.0, 1.0, [0.0, 0.0, 1.0], [0.0; 3], None, 1e-3).unwrap();
        let boost =
            static_wall_residual(1.0, 1.0, [0.0, 0.0, 1.0], [0.0; 3], Some(0.5), 1e-3).unwrap();
        assert!(
            abs(stat.max_residual - boost.max_residual) < 1e-5,
            "{} vs {}",
            stat.max_residual,
            boost.max_residual
        );
    }
}
