//! File formats: raw+meta field snapshots (little-endian f64, x-fastest),
//! CSV writers with 17-significant-digit floats, and the JSON-lines bubble
//! timeline.

use anyhow::{bail, Context, Result};
use kgds_core::bubbles::{BubbleEvent, BubbleTimeline};
use kgds_core::kernels::ScanSample;
use kgds_core::sim::Field3D;
use kgds_core::transform::MpSample;
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::fmt17;

/// Sidecar metadata of a snapshot file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SnapshotMeta {
    pub n: usize,
    pub dx: f64,
    pub dt: f64,
    pub time: f64,
    pub mu2: f64,
    pub lambda: f64,
    /// Always "x-fastest".
    pub order: String,
    /// Always "f64le".
    pub dtype: String,
}

/// Writes `<stem>_<k>.raw` and `<stem>_<k>.meta.json`; returns both paths.
pub fn write_snapshot(
    dir: &Path,
    stem: &str,
    k: usize,
    field: &Field3D,
    dt: f64,
) -> Result<(PathBuf, PathBuf)> {
    let raw_path = dir.join(format!("{stem}_{k:04}.raw"));
    let meta_path = dir.join(format!("{stem}_{k:04}.meta.json"));
    let mut w = BufWriter::new(File::create(&raw_path).context("create raw snapshot")?);
    for v in &field.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    let meta = SnapshotMeta {
        n: field.n,
        dx: field.dx,
        dt,
        time: field.time,
        mu2: field.mu2,
        lambda: field.lambda,
        order: "x-fastest".into(),
        dtype: "f64le".into(),
    };
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)?)?;
    Ok((raw_path, meta_path))
}

/// Reads a snapshot back from its meta path.
pub fn read_snapshot(meta_path: &Path) -> Result<Field3D> {
    let meta: SnapshotMeta = serde_json::from_str(&std::fs::read_to_string(meta_path)?)
        .with_context(|| format!("parse {}", meta_path.display()))?;
    if meta.dtype != "f64le" || meta.order != "x-fastest" {
        bail!("unsupported snapshot layout {}/{}", meta.order, meta.dtype);
    }
    let raw_path = meta_path
        .to_str()
        .and_then(|s| s.strip_suffix(".meta.json"))
        .map(|s| PathBuf::from(format!("{s}.raw")))
        .context("meta path must end in .meta.json")?;
    let mut reader = BufReader::new(File::open(&raw_path)?);
    let len = meta.n * meta.n * meta.n;
    let mut values = vec![0.0f64; len];
    let mut buf = [0u8; 8];
    for v in values.iter_mut() {
        reader.read_exact(&mut buf)?;
        *v = f64::from_le_bytes(buf);
    }
    Ok(Field3D {
        n: meta.n,
        dx: meta.dx,
        time: meta.time,
        mu2: meta.mu2,
        lambda: meta.lambda,
        values,
    })
}

/// All snapshots of a directory for a stem, time-ordered.
pub fn read_snapshot_series(dir: &Path, stem: &str) -> Result<Vec<Field3D>> {
    let mut metas: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.file_name()
                .and_then(|s| s.to_str())
                .map(|s| s.starts_with(stem) && s.ends_with(".meta.json"))
                .unwrap_or(false)
        })
        .collect();
    metas.sort();
    if metas.is_empty() {
        bail!("no {stem}_*.meta.json snapshots under {}", dir.display());
    }
    let mut fields: Vec<Field3D> = metas
        .iter()
        .map(|p| read_snapshot(p))
        .collect::<Result<_>>()?;
    fields.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(fields)
}

/// Scan CSV: header `z,t,value`, one row per grid point.
pub fn write_scan_csv(path: &Path, samples: &[ScanSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "z,t,value")?;
    for s in samples {
        writeln!(w, "{},{},{}", fmt17(s.z), fmt17(s.t), fmt17(s.value))?;
    }
    Ok(w.flush()?)
}

/// Maximum-principle CSV: `x,t,u,rhs,violation`.
pub fn write_mp_csv(path: &Path, samples: &[MpSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,t,u,rhs,violation")?;
    for s in samples {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt17(s.x),
            fmt17(s.t),
            fmt17(s.u),
            fmt17(s.rhs),
            fmt17(s.violation)
        )?;
    }
    Ok(w.flush()?)
}

/// Trajectory CSV: `t,psi,dpsi`.
pub fn write_trajectory_csv(
    path: &Path,
    traj: &[kgds_core::semilinear::TrajectoryPoint],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,psi,dpsi")?;
    for p in traj {
        writeln!(w, "{},{},{}", fmt17(p.t), fmt17(p.psi), fmt17(p.dpsi))?;
    }
    Ok(w.flush()?)
}

/// Functional series CSV: `t,F,nu_lower` (empty cell when undefined).
pub fn write_functional_csv(
    path: &Path,
    series: &kgds_core::semilinear::FunctionalSeries,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "t,F,nu_lower")?;
    for i in 0..series.times.len() {
        let nu = series.nu_lower[i].map(fmt17).unwrap_or_default();
        writeln!(
            w,
            "{},{},{nu}",
            fmt17(series.times[i]),
            fmt17(series.f_values[i])
        )?;
    }
    Ok(w.flush()?)
}

#[derive(Serialize)]
struct SnapshotLine<'a> {
    t: f64,
    n_bubbles: usize,
    bubbles: Vec<BubbleLine<'a>>,
}

#[derive(Serialize)]
struct BubbleLine<'a> {
    id: u32,
    volume_voxels: usize,
    volume: f64,
    centroid: &'a [f64; 3],
    euler_char: i64,
}

#[derive(Serialize)]
struct EventLine<'a> {
    event: &'a BubbleEvent,
}

/// Timeline JSONL: one object per snapshot, then one per event.
pub fn write_timeline_jsonl(path: &Path, timeline: &BubbleTimeline) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for snap in &timeline.snapshots {
        let line = SnapshotLine {
            t: snap.t,
            n_bubbles: snap.stats.len(),
            bubbles: snap
                .stats
                .iter()
                .map(|s| BubbleLine {
                    id: s.id,
                    volume_voxels: s.volume_voxels,
                    volume: s.volume_physical,
                    centroid: &s.centroid,
                    euler_char: s.euler_char,
                })
                .collect(),
        };
        writeln!(w, "{}", serde_json::to_string(&line)?)?;
    }
    for event in &timeline.events {
        writeln!(w, "{}", serde_json::to_string(&EventLine { event })?)?;
    }
    Ok(w.flush()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut field = Field3D::zeros(19, 1.0 / 18.0);
        field.time = 0.25;
        field.mu2 = 0.1;
        field.lambda = 0.1;
        for (i, v) in field.values.iter_mut().enumerate() {
            *v = (i as f64).sin() * 1e-3 + i as f64;
        }
        let (_, meta) = write_snapshot(dir.path(), "psi", 7, &field, 1e-3).unwrap();
        let back = read_snapshot(&meta).unwrap();
        assert_eq!(back.n, field.n);
        assert_eq!(back.time, field.time);
        assert!(back
            .values
            .iter()
            .zip(field.values.iter())
            .all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn csv_floats_round_trip() {
        let x = core::f64::consts::PI * 1e-7;
        let s = fmt17(x);
        let y: f64 = s.parse().unwrap();
        assert_eq!(x.to_bits(), y.to_bits());
    }
}
