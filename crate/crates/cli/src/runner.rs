//! Threaded simulation driver: z-slab parallel RK4 stages with scoped
//! threads, a dedicated snapshot-writer thread so stepping never blocks on
//! I/O, and the `KG_THREADS` worker-count cap.
//!
//! Every voxel update is computed by the same slab kernel regardless of the
//! partition, so results are bit-identical across worker counts.

use std::path::{Path, PathBuf};
use std::sync::mpsc;

use anyhow::{anyhow, Result};
use kgds_core::sim::{
    self, cfl_wave_number, eval_rhs_slab, make_initial_data, Field3D, FieldState, RunStats,
    SimConfig, SimError, StepParams, C_CFL,
};

/// Worker count: `KG_THREADS` when set (>= 1), else available parallelism.
pub fn worker_count() -> usize {
    if let Ok(v) = std::env::var("KG_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            return n.max(1);
        }
    }
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn slab_bounds(n: usize, workers: usize) -> Vec<(usize, usize)> {
    let w = workers.clamp(1, n);
    let base = n / w;
    let extra = n % w;
    let mut out = Vec::with_capacity(w);
    let mut k = 0;
    for i in 0..w {
        let len = base + if i < extra { 1 } else { 0 };
        out.push((k, k + len));
        k += len;
    }
    out
}

pub struct Scratch {
    stage_psi: Vec<f64>,
    stage_chi: Vec<f64>,
    k_psi: Vec<f64>,
    k_chi: Vec<f64>,
    acc_psi: Vec<f64>,
    acc_chi: Vec<f64>,
}

impl Scratch {
    pub fn new(len: usize) -> Scratch {
        Scratch {
            stage_psi: vec![0.0; len],
            stage_chi: vec![0.0; len],
            k_psi: vec![0.0; len],
            k_chi: vec![0.0; len],
            acc_psi: vec![0.0; len],
            acc_chi: vec![0.0; len],
        }
    }
}

/// Evaluates the RHS into (k_psi, k_chi) with one scoped thread per slab.
fn eval_rhs_parallel(
    p: &StepParams,
    psi: &[f64],
    chi: &[f64],
    t: f64,
    k_psi: &mut [f64],
    k_chi: &mut [f64],
    bounds: &[(usize, usize)],
) {
    let n = p.n;
    let plane = n * n;
    if bounds.len() == 1 {
        eval_rhs_slab(p, psi, chi, t, k_psi, k_chi, 0, n);
        return;
    }
    std::thread::scope(|scope| {
        let mut rest_psi = k_psi;
        let mut rest_chi = k_chi;
        for &(k_lo, k_hi) in bounds {
            let (chunk_psi, tail_psi) = rest_psi.split_at_mut((k_hi - k_lo) * plane);
            let (chunk_chi, tail_chi) = rest_chi.split_at_mut((k_hi - k_lo) * plane);
            rest_psi = tail_psi;
            rest_chi = tail_chi;
            scope.spawn(move || {
                eval_rhs_slab(p, psi, chi, t, chunk_psi, chunk_chi, k_lo, k_hi);
            });
        }
    });
}

/// One RK4 step with slab-parallel stage evaluations; returns max |psi|.
pub fn step_rk4_parallel(
    state: &mut FieldState,
    dt: f64,
    p: &StepParams,
    scratch: &mut Scratch,
    bounds: &[(usize, usize)],
) -> Result<f64, SimError> {
    let number = cfl_wave_number(state.t, dt, p.dx);
    if number > C_CFL {
        return Err(SimError::Cfl { t: state.t, number });
    }
    let len = p.n * p.n * p.n;
    let t = state.t;
    let psi = &mut state.psi.values;
    let chi = &mut state.chi.values;
    let s = scratch;

    eval_rhs_parallel(p, psi, chi, t, &mut s.k_psi, &mut s.k_chi, bounds);
    for i in 0..len {
        s.acc_psi[i] = s.k_psi[i];
        s.acc_chi[i] = s.k_chi[i];
        s.stage_psi[i] = psi[i] + 0.5 * dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + 0.5 * dt * s.k_chi[i];
    }
    eval_rhs_parallel(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + 0.5 * dt,
        &mut s.k_psi,
        &mut s.k_chi,
        bounds,
    );
    for i in 0..len {
        s.acc_psi[i] += 2.0 * s.k_psi[i];
        s.acc_chi[i] += 2.0 * s.k_chi[i];
        s.stage_psi[i] = psi[i] + 0.5 * dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + 0.5 * dt * s.k_chi[i];
    }
    eval_rhs_parallel(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + 0.5 * dt,
        &mut s.k_psi,
        &mut s.k_chi,
        bounds,
    );
    for i in 0..len {
        s.acc_psi[i] += 2.0 * s.k_psi[i];
        s.acc_chi[i] += 2.0 * s.k_chi[i];
        s.stage_psi[i] = psi[i] + dt * s.k_psi[i];
        s.stage_chi[i] = chi[i] + dt * s.k_chi[i];
    }
    eval_rhs_parallel(
        p,
        &s.stage_psi,
        &s.stage_chi,
        t + dt,
        &mut s.k_psi,
        &mut s.k_chi,
        bounds,
    );
    let w = dt / 6.0;
    let mut max_abs = 0.0f64;
    for i in 0..len {
        psi[i] += w * (s.acc_psi[i] + s.k_psi[i]);
        chi[i] += w * (s.acc_chi[i] + s.k_chi[i]);
        max_abs = max_abs.max(psi[i].abs());
    }
    state.t += dt;
    state.psi.time = state.t;
    state.chi.time = state.t;
    if !max_abs.is_finite() {
        return Err(SimError::NumericalBlowup { t: state.t });
    }
    Ok(max_abs)
}

/// Parallel analogue of `kgds_core::sim::run_simulation`.
pub fn run_simulation_parallel<F>(
    cfg: &SimConfig,
    workers: usize,
    mut sink: F,
) -> Result<RunStats, SimError>
where
    F: FnMut(usize, &Field3D) -> Result<(), SimError>,
{
    cfg.validate()?;
    let (psi, chi) = make_initial_data(cfg)?;
    let mut state = FieldState { psi, chi, t: 0.0 };
    let p = StepParams::of(cfg);
    let bounds = slab_bounds(cfg.n, workers);
    let mut scratch = Scratch::new(cfg.n * cfg.n * cfg.n);
    let stride = ((cfg.snapshot_every / cfg.dt + 0.5) as usize).max(1);
    let total_steps = (cfg.t_end / cfg.dt + 0.5) as usize;
    let mut stats = RunStats::default();
    sink(0, &state.psi)?;
    stats.snapshots = 1;
    stats.max_abs_history.push((0.0, state.psi.max_abs()));
    stats
        .cfl_history
        .push((0.0, cfl_wave_number(0.0, cfg.dt, cfg.dx)));
    for step in 1..=total_steps {
        let max_abs = step_rk4_parallel(&mut state, cfg.dt, &p, &mut scratch, &bounds)?;
        stats.steps = step;
        if step % stride == 0 || step == total_steps {
            sink(stats.snapshots, &state.psi)?;
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

/// Runs a simulation writing snapshots under `dir` with the given stem on a
/// dedicated writer thread; returns run statistics and the written snapshot
/// paths (raw and meta interleaved).
pub fn run_simulation_to_dir(
    cfg: &SimConfig,
    dir: &Path,
    stem: &str,
    workers: usize,
) -> Result<(RunStats, Vec<PathBuf>)> {
    std::fs::create_dir_all(dir)?;
    let (tx, rx) = mpsc::sync_channel::<(usize, Field3D)>(2);
    let dir_owned = dir.to_path_buf();
    let stem_owned = stem.to_string();
    let dt = cfg.dt;
    let writer = std::thread::spawn(move || -> Result<Vec<PathBuf>> {
        let mut paths = Vec::new();
        for (k, field) in rx {
            let (raw, meta) = crate::io::write_snapshot(&dir_owned, &stem_owned, k, &field, dt)?;
            paths.push(raw);
            paths.push(meta);
        }
        Ok(paths)
    });
    let run = run_simulation_parallel(cfg, workers, |k, field| {
        tx.send((k, field.clone()))
            .map_err(|e| SimError::Sink(format!("writer thread gone: {e}")))
    });
    drop(tx);
    let paths = writer
        .join()
        .map_err(|_| anyhow!("snapshot writer panicked"))?
        .map_err(|e| anyhow!("snapshot writer: {e}"))?;
    let stats = run.map_err(|e| anyhow!("{e}"))?;
    Ok((stats, paths))
}

/// Serial reference runner (same sink contract), for determinism checks.
pub fn run_simulation_serial<F>(cfg: &SimConfig, sink: F) -> Result<RunStats, SimError>
where
    F: FnMut(usize, &Field3D) -> Result<(), SimError>,
{
    sim::run_simulation(cfg, sink)
}

#[cfg(test)]
mod tests {
    use super::*;
    use kgds_core::sim::InitRecipe;

    fn small_cfg() -> SimConfig {
        SimConfig {
            n: 33,
            dx: 1.0 / 32.0,
            dt: 1e-3,
            mu2: 0.1,
            lambda: 0.1,
            t_end: 0.05,
            snapshot_every: 0.01,
            init: InitRecipe {
                centers: vec![[0.4, 0.4, 0.4], [0.6, 0.6, 0.6]],
                radii: vec![0.2, 0.2],
                psi1_factor: -5.0,
            },
            boundary: kgds_core::sim::Boundary::Zero,
        }
    }

    #[test]
    fn parallel_matches_serial_bitwise() {
        let cfg = small_cfg();
        let mut serial: Vec<Vec<f64>> = Vec::new();
        run_simulation_serial(&cfg, |_, f| {
            serial.push(f.values.clone());
            Ok(())
        })
        .unwrap();
        for workers in [1usize, 3, 5] {
            let mut par: Vec<Vec<f64>> = Vec::new();
            run_simulation_parallel(&cfg, workers, |_, f| {
                par.push(f.values.clone());
                Ok(())
            })
            .unwrap();
            assert_eq!(serial.len(), par.len());
            for (a, b) in serial.iter().zip(par.iter()) {
                assert!(
                    a.iter()
                        .zip(b.iter())
                        .all(|(x, y)| x.to_bits() == y.to_bits()),
                    "worker count {workers} diverged"
                );
            }
        }
    }

    #[test]
    fn slab_bounds_cover_range() {
        for (n, w) in [(33, 4), (101, 8), (17, 1), (20, 32)] {
            let b = slab_bounds(n, w);
            assert_eq!(b[0].0, 0);
            assert_eq!(b.last().unwrap().1, n);
            for win in b.windows(2) {
                assert_eq!(win[0].1, win[1].0);
            }
        }
    }

    #[test]
    fn writer_thread_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_cfg();
        let (stats, paths) = run_simulation_to_dir(&cfg, dir.path(), "psi", 2).unwrap();
        assert_eq!(stats.snapshots, 6);
        assert_eq!(paths.len(), 12);
        let series = crate::io::read_snapshot_series(dir.path(), "psi").unwrap();
        assert_eq!(series.len(), 6);
        assert!(series.windows(2).all(|w| w[0].time < w[1].time));
    }
}
