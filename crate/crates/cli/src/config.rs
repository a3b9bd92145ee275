//! Simulation configuration file handling: JSON documents with the SimConfig
//! keys, explicit defaults, hard errors on unknown keys, and a validated echo
//! that round-trips into an identical configuration.

use anyhow::{bail, Context, Result};
use kgds_core::sim::{Boundary, InitRecipe, SimConfig};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// On-disk form of [`SimConfig`]; every key optional except `n`, with the
/// defaults of the desk-scale experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_end: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshot_every: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init: Option<InitFile>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub boundary: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitFile {
    /// Recipe type; only "bells" exists.
    #[serde(rename = "type")]
    pub kind: String,
    pub centers: Vec<[f64; 3]>,
    pub radii: Vec<f64>,
    pub psi1_factor: f64,
}

/// Loads and validates a configuration, filling defaults.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<SimConfig> {
    let file: ConfigFile = serde_json::from_str(text).context("config parse error")?;
    validate(file)
}

fn validate(file: ConfigFile) -> Result<SimConfig> {
    let n = file.n;
    if n < 17 {
        bail!("key \"n\": must be >= 17 (stencil width), got {n}");
    }
    let dx_default = 1.0 / (n - 1) as f64;
    let dx = file.dx.unwrap_or(dx_default);
    if !(dx > 0.0) {
        bail!("key \"dx\": must be positive");
    }
    let dt = file.dt.unwrap_or(1e-3);
    if !(dt > 0.0) {
        bail!("key \"dt\": must be positive");
    }
    let t_end = file.t_end.unwrap_or(3.0);
    if !(t_end > 0.0) {
        bail!("key \"t_end\": must be positive");
    }
    let snapshot_every = file.snapshot_every.unwrap_or(0.02);
    if !(snapshot_every > 0.0) {
        bail!("key \"snapshot_every\": must be positive");
    }
    let init = match file.init {
        None => InitRecipe::default(),
        Some(i) => {
            if i.kind != "bells" {
                bail!("key \"init.type\": unknown recipe {:?}", i.kind);
            }
            if i.centers.len() != i.radii.len() {
                bail!("key \"init\": centers and radii differ in length");
            }
            InitRecipe {
                centers: i.centers,
                radii: i.radii,
                psi1_factor: i.psi1_factor,
            }
        }
    };
    let boundary = match file.boundary.as_deref() {
        None | Some("zero") => Boundary::Zero,
        Some(other) => bail!("key \"boundary\": unknown value {other:?}"),
    };
    let cfg = SimConfig {
        n,
        dx,
        dt,
        mu2: file.mu2.unwrap_or(0.1),
        lambda: file.lambda.unwrap_or(0.1),
        t_end,
        snapshot_every,
        init,
        boundary,
    };
    cfg.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(cfg)
}

/// Serializes a validated configuration with every default made explicit;
/// re-loading the echo reproduces the configuration exactly.
pub fn echo_config(cfg: &SimConfig) -> String {
    let file = ConfigFile {
        n: cfg.n,
        dx: Some(cfg.dx),
        dt: Some(cfg.dt),
        mu2: Some(cfg.mu2),
        lambda: Some(cfg.lambda),
        t_end: Some(cfg.t_end),
        snapshot_every: Some(cfg.snapshot_every),
        init: Some(InitFile {
            kind: "bells".into(),
            centers: cfg.init.centers.clone(),
            radii: cfg.init.radii.clone(),
            psi1_factor: cfg.init.psi1_factor,
        }),
        boundary: Some("zero".into()),
    };
    serde_json::to_string_pretty(&file).expect("config serialization")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = parse_config(r#"{"n":101}"#).unwrap();
        assert_eq!(cfg.n, 101);
        assert_eq!(cfg.dt, 1e-3);
        assert_eq!(cfg.mu2, 0.1);
        assert_eq!(cfg.lambda, 0.1);
        assert_eq!(cfg.t_end, 3.0);
        assert_eq!(cfg.dx, 0.01);
        assert_eq!(cfg.init, InitRecipe::default());
    }

    #[test]
    fn small_grid_rejected_with_key() {
        let err = parse_config(r#"{"n":8}"#).unwrap_err().to_string();
        assert!(err.contains("\"n\""), "{err}");
    }

    #[test]
    fn unknown_key_is_hard_error() {
        let err = parse_config(r#"{"n":101,"unknown_key":1}"#).unwrap_err();
        let chain = format!("{err:#}");
        assert!(chain.contains("unknown_key"), "{chain}");
    }

    #[test]
    fn echo_round_trips() {
        let cfg = parse_config(r#"{"n":33,"dt":0.002,"mu2":0.25}"#).unwrap();
        let echoed = echo_config(&cfg);
        let back = parse_config(&echoed).unwrap();
        assert_eq!(cfg, back);
    }
}
