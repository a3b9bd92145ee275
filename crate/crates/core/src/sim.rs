//! Desk-scale reproduction of the 3-D bubble experiment: fourth-order central
//! differences in space and classical RK4 in time for
//!
//! ```text
//! psi_tt + 3 psi_t - e^{-2t} Lap(psi) = mu^2 psi - lambda psi^3
//! ```
//!
//! on the unit box with zero Dirichlet boundary (zero ghost extension, valid
//! because the data are compactly supported away from the boundary), plus a
//! second-order radial solver used as a cross-validation oracle by the
//! transform module.
//!
//! The stepping kernels are exposed per z-slab so a driver can parallelize
//! over slabs; every voxel update is identical arithmetic regardless of the
//! slab partition, which keeps runs bit-identical across worker counts.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::math;
use crate::transform::{CauchyData, Dim, SourceTerm, TransformError};

/// Wave-CFL gate: stepping aborts when e^{-t} sqrt(3) dt / dx exceeds this.
pub const C_CFL: f64 = 0.5;

/// Uniform-grid scalar field, x-fastest order, with physical parameters.
#[derive(Clone, Debug)]
pub struct Field3D {
    pub n: usize,
    pub dx: f64,
    pub time: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub values: Vec<f64>,
}

impl Field3D {
    pub fn zeros(n: usize, dx: f64) -> Field3D {
        Field3D {
            n,
            dx,
            time: 0.0,
            mu2: 0.0,
            lambda: 0.0,
            values: vec![0.0; n * n * n],
        }
    }

    #[inline(always)]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (k * self.n + j) * self.n + i
    }

    #[inline(always)]
    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.values[self.idx(i, j, k)]
    }

    /// Trapezoidal integral over the box (halved weights on the faces).
    pub fn integral(&self) -> f64 {
        self.integral_of(|v| v)
    }

    pub fn integral_of<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        let n = self.n;
        let mut acc = math::Accum::default();
        for k in 0..n {
            let wk = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
            for j in 0..n {
                let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                for i in 0..n {
                    let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    acc.add(wi * wj * wk * f(self.at(i, j, k)));
                }
            }
        }
        acc.value() * self.dx * self.dx * self.dx
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, &v| m.max(math::abs(v)))
    }
}

/// (psi, psi_t) pair advancing together.
#[derive(Clone, Debug)]
pub struct FieldState {
    pub psi: Field3D,
    pub chi: Field3D,
    pub t: f64,
}

/// Initial-data recipe: a sum of compactly supported exponential bells
/// B(x) = exp(1/R^2 - 1/(R^2 - |x-C|^2)) inside |x-C| < R, with the second
/// datum a constant multiple of the first.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InitRecipe {
    pub centers: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    pub psi1_factor: f64,
}

impl Default for InitRecipe {
    /// The two-bubble configuration: bells at (0.4,0.4,0.4) and
    /// (0.6,0.6,0.6) with radius 0.2 and psi_1 = -5 psi_0.
    fn default() -> Self {
        InitRecipe {
            centers: vec![[0.4, 0.4, 0.4], [0.6, 0.6, 0.6]],
            radii: vec![0.2, 0.2],
            psi1_factor: -5.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Boundary {
    Zero,
}

/// Full parameterization of a simulation run.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimConfig {
    /// Points per axis (n x n x n grid), n >= 17.
    pub n: usize,
    /// Grid spacing; always 1/(n-1) on the unit box.
    pub dx: f64,
    pub dt: f64,
    pub mu2: f64,
    pub lambda: f64,
    pub t_end: f64,
    pub snapshot_every: f64,
    pub init: InitRecipe,
    pub boundary: Boundary,
}

impl SimConfig {
    /// Desk-scale default configuration: n = 101, dt = 1e-3,
    /// lambda = mu^2 = 0.1, unit box.
    pub fn desk_default() -> SimConfig {
        let n = 101;
        SimConfig {
            n,
            dx: 1.0 / (n - 1) as f64,
            dt: 1e-3,
            mu2: 0.1,
            lambda: 0.1,
            t_end: 1.0,
            snapshot_every: 0.02,
            init: InitRecipe::default(),
            boundary: Boundary::Zero,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.n < 17 {
            return Err(SimError::Config {
                what: String::from("n must be >= 17 (stencil width)"),
            });
        }
        if !(self.dt > 0.0) {
            return Err(SimError::Config {
                what: String::from("dt must be positive"),
            });
        }
        if !(self.dx > 0.0) {
            return Err(SimError::Config {
                what: String::from("dx must be positive"),
            });
        }
        if !(self.t_end > 0.0) {
            return Err(SimError::Config {
                what: String::from("t_end must be positive"),
            });
        }
        if !(self.snapshot_every > 0.0) {
            return Err(SimError::Config {
                what: String::from("snapshot_every must be positive"),
            });
        }
        if self.init.centers.len() != self.init.radii.len() {
            return Err(SimError::Config {
                what: String::from("centers and radii differ in length"),
            });
        }
        for (c, &r) in self.init.centers.iter().zip(self.init.radii.iter()) {
            for &coord in c {
                if coord - r < 0.0 || coord + r > 1.0 {
                    return Err(SimError::Config {
                        what: String::from("initial bell escapes the unit box"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SimError {
    Config {
        what: String,
    },
    /// A non-finite value appeared; carries the time of the aborted step.
    NumericalBlowup {
        t: f64,
    },
    /// The wave CFL gate failed.
    Cfl {
        t: f64,
        number: f64,
    },
    /// Snapshot sink failure (I/O lives in the driver crate).
    Sink(String),
    Transform(TransformError),
}

impl From<TransformError> for SimError {
    fn from(e: TransformError) -> Self {
        SimError::Transform(e)
    }
}

impl core::fmt::Display for SimError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimError::Config { what } => write!(f, "configuration error: {what}"),
            SimError::NumericalBlowup { t } => write!(f, "non-finite field at t = {t}"),
            SimError::Cfl { t, number } => {
                write!(f, "CFL gate failed at t = {t} (number {number:.3})")
            }
            SimError::Sink(msg) => write!(f, "snapshot sink: {msg}"),
            SimError::Transform(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SimError {}

/// The exponential bell profile at squared distance d2 from the center.
pub fn bell_value(d2: f64, radius: f64) -> f64 {
    let r2 = radius * radius;
    if d2 < r2 {
        math::exp(1.0 / r2 - 1.0 / (r2 - d2))
    } else {
        0.0
    }
}

/// Builds (psi_0, psi_1) from the recipe; psi_1 = psi1_factor * psi_0.
pub fn make_initial_data(cfg: &SimConfig) -> Result<(Field3D, Field3D), SimError> {
    cfg.validate()?;
    let n = cfg.n;
    let mut psi = Field3D::zeros(n, cfg.dx);
    psi.mu2 = cfg.mu2;
    psi.lambda = cfg.lambda;
    for k in 0..n {
        let z = k as f64 * cfg.dx;
        for j in 0..n {
            let y = j as f64 * cfg.dx;
            for i in 0..n {
                let x = i as f64 * cfg.dx;
                let mut v = 0.0;
                for (c, &r) in cfg.init.centers.iter().zip(cfg.init.radii.iter()) {
                    let d2 =
                        (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + (z - c[2]) * (z - c[2]);
                    v += bell_value(d2, r);
                }
                let id = psi.idx(i, j, k);
                psi.values[id] = v;
            }
        }
    }
    let mut chi = psi.clone();
    for v in chi.values.iter_mut() {
        *v *= cfg.init.psi1_factor;
    }
    Ok((psi, chi))
}

/// Per-step parameters of the stencil kernel.
#[derive(Clone, Copy, Debug)]
pub struct StepParams {
    pub n: usize,
    pub dx: f64,
    pub mu2: f64,
    pub lambda: f64,
}

impl StepParams {
    pub fn of(cfg: &SimConfig) -> StepParams {
        StepParams {
            n: cfg.n,
            dx: cfg.dx,
            mu2: cfg.mu2,
            lambda: cfg.lambda,
        }
    }
}

/// Fourth-order Laplacian coefficients per axis: (-1/12, 4/3, -5/2, 4/3, -1/12)/dx^2.
const C1: f64 = 4.0 / 3.0;
const C2: f64 = -1.0 / 12.0;
const C0_AXIS: f64 = -5.0 / 2.0;

/// Right-hand side (dpsi, dchi) = (chi, e^{-2t} Lap4(psi) - 3 chi
/// + mu^2 psi - lambda psi^3) on z-slab k in [k_lo, k_hi); boundary nodes
/// keep zero time-derivatives and ghosts are zero-extended.
///
/// `psi`/`chi` are the full grids; `dpsi`/`dchi` receive the slab only
/// ((k_hi - k_lo) n^2 values).  This is the unit of work a parallel driver
/// distributes over disjoint output slices; the per-voxel arithmetic is
/// independent of the slab split, so runs are bit-identical across worker
/// counts.
pub fn eval_rhs_slab(
    p: &StepParams,
    psi: &[f64],
    chi: &[f64],
    t: f64,
    dpsi: &mut [f64],
    dchi: &mut [f64],
    k_lo: usize,
    k_hi: usize,
) {
    let n = p.n;
    let inv_dx2 = 1.0 / (p.dx * p.dx);
    let wave = math::exp(-2.0 * t) * inv_dx2;
    let c0 = 3.0 * C0_AXIS;
    let plane = n * n;
    for k in k_lo..k_hi.min(n) {
        for j in 0..n {
            let row = (k * n + j) * n;
            let out_row = ((k - k_lo) * n + j) * n;
            if k == 0 || k == n - 1 || j == 0 || j == n - 1 {
                for i in 0..n {
                    dpsi[out_row + i] = 0.0;
                    dchi[out_row + i] = 0.0;
                }
                continue;
            }
            dpsi[out_row] = 0.0;
            dchi[out_row] = 0.0;
            dpsi[out_row + n - 1] = 0.0;
            dchi[out_row + n - 1] = 0.0;
            let interior_z = (2..n - 2).contains(&k);
            let interior_y = (2..n - 2).contains(&j);
            for i in 1..n - 1 {
                let id = row + i;
                let u = psi[id];
                let mut lap = c0 * u;
                // x-axis neighbours (i-2 .. i+2), zero ghost off the grid
                lap += C1 * (psi[id - 1] + psi[id + 1]);
                lap += C2
                    * (if i >= 2 { psi[id - 2] } else { 0.0 }
                        + if i + 2 < n { psi[id + 2] } else { 0.0 });
                // y-axis
                lap += C1 * (psi[id - n] + psi[id + n]);
                lap += C2
                    * (if interior_y {
                        psi[id - 2 * n] + psi[id + 2 * n]
                    } else {
                        (if j >= 2 { psi[id - 2 * n] } else { 0.0 })
                            + (if j + 2 < n { psi[id + 2 * n] } else { 0.0 })
                    });
                // z-axis
                lap += C1 * (psi[id - plane] + psi[id + plane]);
                lap += C2
                    * (if interior_z {
                        psi[id - 2 * plane] + psi[id + 2 * plane]
                    } else {
                        (if k >= 2 { psi[id - 2 * plane] } else { 0.0 })
                            + (if k + 2 < n { psi[id + 2 * plane] } else { 0.0 })
                    });
                let c = chi[id];
                dpsi[out_row + i] = c;
                dchi[out_row + i] = wave * lap - 3.0 * c + p.mu2 * u - p.lambda * u * u * u;
            }
        }
    }
}

/// Scratch buffers for one RK4 step.
pub struct RkScratch {
    stage_psi: Vec<f64>,
    stage_chi: Vec<f64>,
    k_psi: Vec<f64>,
    k_chi: Vec<f64>,
    acc_psi: Vec<f64>,
    acc_chi: Vec<f64>,
}

impl RkScratch {
    pub fn new(n: usize) -> RkScratch {
        let len = n * n * n;
        RkScratch {
            stage_psi: vec![0.0; len],
            stage_chi: vec![0.0; len],
            k_psi: vec![0.0; len],
            k_chi: vec![0.0; len],
            acc_psi: vec![0.0; len],
            acc_chi: vec![0.0; len],
        }
    }
}

/// External forcing hook (used by manufactured-solution verification).
pub type Forcing<'a> = &'a dyn Fn(f64, f64, f64, f64) -> f64;

/// One classical RK4 step of the first-order system; returns max |psi| after
/// the step.  Fails on non-finite values or on the wave-CFL gate
/// e^{-t} sqrt(3) dt / dx > C_CFL.
pub fn step_rk4(
    state: &mut FieldState,
    dt: f64,
    p: &StepParams,
    scratch: &mut RkScratch,
    forcing: Option<Forcing>,
) -> Result<f64, SimError> {
    let number = cfl_wave_number(state.t, dt, p.dx);
    if number > C_CFL {
        return Err(SimError::Cfl { t: state.t, number });
    }
    let n = p.n;
    let len = n * n * n;
    let t = state.t;
    let psi = &mut state.psi.values;
    let chi = &mut state.chi.values;
    let s = scratch;

    // k1
    eval_rhs_slab(p, psi, chi, t, &mut s.k_psi, &mut s.k_chi, 0, n);
    add_forcing(p, forcing, t, &mut s.k_chi);
    for i in 0..len {
        s.acc_psi[i] = s.k_psi[i];
        s.acc_chi[i] = s.k_chi[i];
        s.stage_psi[i] = psi[i] + 0.5 * dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + 0.5 * dt * s.k_chi[i];
    }
    // k2
    eval_rhs_slab(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + 0.5 * dt,
        &mut s.k_psi,
        &mut s.k_chi,
        0,
        n,
    );
    add_forcing(p, forcing, t + 0.5 * dt, &mut s.k_chi);
    for i in 0..len {
        s.acc_psi[i] += 2.0 * s.k_psi[i];
        s.acc_chi[i] += 2.0 * s.k_chi[i];
        s.stage_psi[i] = psi[i] + 0.5 * dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + 0.5 * dt * s.k_chi[i];
    }
    // k3
    eval_rhs_slab(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + 0.5 * dt,
        &mut s.k_psi,
        &mut s.k_chi,
        0,
        n,
    );
    add_forcing(p, forcing, t + 0.5 * dt, &mut s.k_chi);
    for i in 0..len {
        s.acc_psi[i] += 2.0 * s.k_psi[i];
        s.acc_chi[i] += 2.0 * s.k_chi[i];
        s.stage_psi[i] = psi[i] + dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + dt * s.k_chi[i];
    }
    // k4
    eval_rhs_slab(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + dt,
        &mut s.k_psi,
        &mut s.k_chi,
        0,
        n,
    );
    add_forcing(p, forcing, t + dt, &mut s.k_chi);
    let w = dt / 6.0;
    let mut max_abs = 0.0f64;
    for i in 0..len {
        psi[i] += w * (s.acc_psi[i] + s.k_psi[i]);
        chi[i] += w * (s.acc_chi[i] + s.k_chi[i]);
        max_abs = max_abs.max(math::abs(psi[i]));
    }
    state.t += dt;
    state.psi.time = state.t;
    state.chi.time = state.t;
    if !max_abs.is_finite() {
        return Err(SimError::NumericalBlowup { t: state.t });
    }
    Ok(max_abs)
}

fn add_forcing(p: &StepParams, forcing: Option<Forcing>, t: f64, dchi: &mut [f64]) {
    let Some(f) = forcing else { return };
    let n = p.n;
    for k in 1..n - 1 {
        let z = k as f64 * p.dx;
        for j in 1..n - 1 {
            let y = j as f64 * p.dx;
            let row = (k * n + j) * n;
            for i in 1..n - 1 {
                let x = i as f64 * p.dx;
                dchi[row + i] += f(x, y, z, t);
            }
        }
    }
}

/// e^{-t} sqrt(3) dt / dx — the quantity gated against [`C_CFL`].
pub fn cfl_wave_number(t: f64, dt: f64, dx: f64) -> f64 {
    math::exp(-t) * math::sqrt(3.0) * dt / dx
}

/// Stability report: the printed amplitude monitor (a), which bounds
/// max |psi| by dx/(sqrt(3) dt) and is recorded but does not gate stepping,
/// and the wave-speed condition (b), which does.
#[derive(Clone, Copy, Debug)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CflReport {
    /// dx / (sqrt(3) dt), the amplitude bound of monitor (a).
    pub monitor_bound: f64,
    pub max_abs_psi: f64,
    pub monitor_ok: bool,
    /// e^{-t} sqrt(3) dt / dx, gated against C_CFL.
    pub wave_number: f64,
    pub wave_ok: bool,
}

pub fn cfl_check(state: &FieldState, cfg: &SimConfig) -> CflReport {
    let monitor_bound = cfg.dx / (math::sqrt(3.0) * cfg.dt);
    let max_abs_psi = state.psi.max_abs();
    let wave_number = cfl_wave_number(state.t, cfg.dt, cfg.dx);
    CflReport {
        monitor_bound,
        max_abs_psi,
        monitor_ok: max_abs_psi < monitor_bound,
        wave_number,
        wave_ok: wave_number <= C_CFL,
    }
}

/// Per-run statistics returned by [`run_simulation`].
#[derive(Clone, Debug, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunStats {
    pub steps: usize,
    pub snapshots: usize,
    pub final_time: f64,
    /// (t, max |psi|) at every snapshot time.
    pub max_abs_history: Vec<(f64, f64)>,
    /// (t, wave CFL number) at every snapshot time.
    pub cfl_history: Vec<(f64, f64)>,
}

/// Runs the simulation serially, handing each snapshot (including the
/// initial state) to `sink`.  Aborts on NaN and on the wave-CFL gate.
pub fn run_simulation<F>(cfg: &SimConfig, mut sink: F) -> Result<RunStats, SimError>
where
    F: FnMut(usize, &Field3D) -> Result<(), SimError>,
{
    cfg.validate()?;
    let (psi, chi) = make_initial_data(cfg)?;
    let mut state = FieldState { psi, chi, t: 0.0 };
    let p = StepParams::of(cfg);
    let mut scratch = RkScratch::new(cfg.n);
    let stride = (cfg.snapshot_every / cfg.dt + 0.5) as usize;
    let stride = stride.max(1);
    let total_steps = (cfg.t_end / cfg.dt + 0.5) as usize;
    let mut stats = RunStats::default();
    sink(0, &state.psi)?;
    stats.snapshots = 1;
    stats.max_abs_history.push((0.0, state.psi.max_abs()));
    stats
        .cfl_history
        .push((0.0, cfl_wave_number(0.0, cfg.dt, cfg.dx)));
    for step in 1..=total_steps {
        let max_abs = step_rk4(&mut state, cfg.dt, &p, &mut scratch, None)?;
        stats.steps = step;
        if step % stride == 0 || step == total_steps {
            let k = stats.snapshots;
            sink(k, &state.psi)?;
            stats.snapshots += 1;
            stats.max_abs_history.push((state.t, max_abs));
            stats
                .cfl_history
                .push((state.t, cfl_wave_number(state.t, cfg.dt, cfg.dx)));
        }
    }
    stats.final_time = state.t;
    Ok(stats)
}

/// Energy-like monitor int (chi^2 + e^{-2t} |grad psi|^2) dx with a
/// second-order gradient; used to observe boundedness of runs.
pub fn energy_monitor(state: &FieldState) -> f64 {
    let n = state.psi.n;
    let dx = state.psi.dx;
    let w = math::exp(-2.0 * state.t);
    let mut acc = math::Accum::default();
    for k in 1..n - 1 {
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = state.chi.at(i, j, k);
                let gx = (state.psi.at(i + 1, j, k) - state.psi.at(i - 1, j, k)) / (2.0 * dx);
                let gy = (state.psi.at(i, j + 1, k) - state.psi.at(i, j - 1, k)) / (2.0 * dx);
                let gz = (state.psi.at(i, j, k + 1) - state.psi.at(i, j, k - 1)) / (2.0 * dx);
                acc.add(c * c + w * (gx * gx + gy * gy + gz * gz));
            }
        }
    }
    acc.value() * dx * dx * dx
}

/// Radial solution history on a uniform r-grid.
#[derive(Clone, Debug)]
pub struct RadialField {
    pub nr: usize,
    pub dr: f64,
    pub times: Vec<f64>,
    /// times.len() rows of nr values.
    pub values: Vec<f64>,
}

impl RadialField {
    /// Sampled value at (r, t): cubic (Catmull-Rom) in r so interpolation
    /// stays far below the scheme's own error, linear in t between saves.
    pub fn sample(&self, r: f64, t: f64) -> f64 {
        let nt = self.times.len();
        let dt = self.times[1] - self.times[0];
        let ft = (t / dt).clamp(0.0, (nt - 1) as f64);
        let jt = (ft as usize).min(nt - 2);
        let wt = ft - jt as f64;
        let row = |j: usize| self.sample_row(j, r);
        (1.0 - wt) * row(jt) + wt * row(jt + 1)
    }

    fn sample_row(&self, j: usize, r: f64) -> f64 {
        let fr = (r / self.dr).clamp(0.0, (self.nr - 1) as f64);
        let ir = fr as usize;
        let x = fr - ir as f64;
        let at = |i: isize| {
            // even extension across the origin, clamp at the far end
            let i = if i < 0 { -i } else { i } as usize;
            self.values[j * self.nr + i.min(self.nr - 1)]
        };
        let p0 = at(ir as isize - 1);
        let p1 = at(ir as isize);
        let p2 = at(ir as isize + 1);
        let p3 = at(ir as isize + 2);
        0.5 * ((2.0 * p1)
            + (-p0 + p2) * x
            + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * x * x
            + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * x * x * x)
    }
}

/// Second-order finite-difference solver for the radial equation
/// u_tt - e^{-2t}(u_rr + (2/r) u_r) - M^2 u = f with u_r(0,t) = 0 and a far
/// boundary at r_max that the compactly supported solution never reaches
/// (finite cone of influence; the margin is the caller's responsibility).
/// RK4 in time; spatial error dominates at second order.
pub fn radial_fd_solve(
    data: &CauchyData,
    src: &SourceTerm,
    m: f64,
    r_max: f64,
    t_end: f64,
    nr: usize,
    dt: f64,
    save_every: usize,
) -> Result<RadialField, SimError> {
    if nr < 64 {
        return Err(SimError::Config {
            what: String::from("need nr >= 64"),
        });
    }
    if data.dim != Dim::Radial3 {
        return Err(SimError::Config {
            what: String::from("radial solver needs radial data"),
        });
    }
    let dr = r_max / (nr - 1) as f64;
    if math::sqrt(3.0) * dt / dr > C_CFL {
        return Err(SimError::Cfl {
            t: 0.0,
            number: math::sqrt(3.0) * dt / dr,
        });
    }
    let mut u: Vec<f64> = (0..nr).map(|i| data.phi0.value(i as f64 * dr)).collect();
    let mut v: Vec<f64> = (0..nr).map(|i| data.phi1.value(i as f64 * dr)).collect();
    let rhs = |u: &[f64], v: &[f64], t: f64, du: &mut [f64], dv: &mut [f64]| {
        let w = math::exp(-2.0 * t);
        du.copy_from_slice(v);
        // origin: Lap = 3 u_rr(0) = 6 (u1 - u0)/dr^2 by symmetry
        dv[0] = w * 6.0 * (u[1] - u[0]) / (dr * dr) + m * m * u[0] + src.value(0.0, t);
        for i in 1..nr - 1 {
            let r = i as f64 * dr;
            let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (dr * dr);
            let d1 = (u[i + 1] - u[i - 1]) / (2.0 * dr);
            dv[i] = w * (d2 + 2.0 * d1 / r) + m * m * u[i] + src.value(r, t);
        }
        du[nr - 1] = 0.0;
        dv[nr - 1] = 0.0;
    };
    let steps = (t_end / dt + 0.5) as usize;
    let mut times = Vec::new();
    let mut values = Vec::new();
    let push = |t: f64, u: &[f64], times: &mut Vec<f64>, values: &mut Vec<f64>| {
        times.push(t);
        values.extend_from_slice(u);
    };
    push(0.0, &u, &mut times, &mut values);
    let mut k1u = vec![0.0; nr];
    let mut k1v = vec![0.0; nr];
    let mut k2u = vec![0.0; nr];
    let mut k2v = vec![0.0; nr];
    let mut k3u = vec![0.0; nr];
    let mut k3v = vec![0.0; nr];
    let mut k4u = vec![0.0; nr];
    let mut k4v = vec![0.0; nr];
    let mut tu = vec![0.0; nr];
    let mut tv = vec![0.0; nr];
    let mut t = 0.0;
    for step in 1..=steps {
        rhs(&u, &v, t, &mut k1u, &mut k1v);
        for i in 0..nr {
            tu[i] = u[i] + 0.5 * dt * k1u[i];
            tv[i] = v[i] + 0.5 * dt * k1v[i];
        }
        rhs(&tu, &tv, t + 0.5 * dt, &mut k2u, &mut k2v);
        for i in 0..nr {
            tu[i] = u[i] + 0.5 * dt * k2u[i];
            tv[i] = v[i] + 0.5 * dt * k2v[i];
        }
        rhs(&tu, &tv, t + 0.5 * dt, &mut k3u, &mut k3v);
        for i in 0..nr {
            tu[i] = u[i] + dt * k3u[i];
            tv[i] = v[i] + dt * k3v[i];
        }
        rhs(&tu, &tv, t + dt, &mut k4u, &mut k4v);
        let w6 = dt / 6.0;
        let mut max_abs = 0.0f64;
        for i in 0..nr {
            u[i] += w6 * (k1u[i] + 2.0 * k2u[i] + 2.0 * k3u[i] + k4u[i]);
            v[i] += w6 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
            max_abs = max_abs.max(math::abs(u[i]));
        }
        t = step as f64 * dt;
        if !max_abs.is_finite() {
            return Err(SimError::NumericalBlowup { t });
        }
        if step % save_every == 0 || step == steps {
            push(t, &u, &mut times, &mut values);
        }
    }
    Ok(RadialField {
        nr,
        dr,
        times,
        values,
    })
}
