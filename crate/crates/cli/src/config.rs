//! Shared config parsing: complex numbers as `[re, im]` pairs, path specs,
//! and the schlesinger run configuration.

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use isolab_core::integrate::PathSpec;

/// Complex number serialized as a two-element array `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CJson(pub (f64, f64));

impl CJson {
    pub fn value(&self) -> C64 {
        C64::new(self.0 .0, self.0 .1)
    }
}

/// Parse "re,im" (or a bare "re") into a complex number.
pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => Ok(C64::new(
            re.parse::<f64>().with_context(|| format!("bad number {re:?}"))?,
            0.0,
        )),
        [re, im] => Ok(C64::new(
            re.parse::<f64>().with_context(|| format!("bad number {re:?}"))?,
            im.parse::<f64>().with_context(|| format!("bad number {im:?}"))?,
        )),
        _ => bail!("expected re,im but got {s:?}"),
    }
}

/// Parse "re,im -> re,im -> ..." into a path with the given sampling.
pub fn parse_path(s: &str, samples_per_segment: usize) -> Result<PathSpec> {
    let waypoints: Result<Vec<C64>> = s.split("->").map(|w| parse_complex(w.trim())).collect();
    let waypoints = waypoints?;
    PathSpec::new(waypoints, samples_per_segment).map_err(|e| anyhow!("invalid path: {e}"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PathConfig {
    pub waypoints: Vec<CJson>,
    pub samples_per_segment: usize,
}

impl PathConfig {
    pub fn build(&self) -> Result<PathSpec> {
        PathSpec::new(
            self.waypoints.iter().map(CJson::value).collect(),
            self.samples_per_segment,
        )
        .map_err(|e| anyhow!("invalid path: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LoopConfig {
    pub center: CJson,
    pub radius: f64,
    #[serde(default = "default_vertices")]
    pub vertices: usize,
    #[serde(default = "default_loop_samples")]
    pub samples_per_segment: usize,
}

fn default_vertices() -> usize {
    20
}

fn default_loop_samples() -> usize {
    6
}

impl LoopConfig {
    pub fn build(&self) -> Result<PathSpec> {
        PathSpec::circle(
            self.center.value(),
            self.radius,
            self.vertices,
            self.samples_per_segment,
        )
        .map_err(|e| anyhow!("invalid loop: {e}"))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WhithamConfig {
    pub a: usize,
    pub b: usize,
    #[serde(default = "default_fd_step")]
    pub fd_step: f64,
}

fn default_fd_step() -> f64 {
    1e-5
}

/// Pole-system run configuration (JSON file for the schlesinger command).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchlesingerConfig {
    pub seed: u64,
    #[serde(default = "default_scale")]
    pub scale: f64,
    pub kappa: CJson,
    pub positions: Vec<CJson>,
    /// Explicit residues (row-major `[re, im]` entries per matrix); when
    /// absent, a seeded random sl2 system is generated.
    #[serde(default)]
    pub residues: Option<Vec<Vec<Vec<CJson>>>>,
    pub moving: usize,
    pub path: PathConfig,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default)]
    pub loops: Vec<LoopConfig>,
    #[serde(default)]
    pub monodromy: bool,
    #[serde(default)]
    pub frozen_control: bool,
    #[serde(default)]
    pub tau: bool,
    #[serde(default)]
    pub alt_path: Option<PathConfig>,
    #[serde(default)]
    pub whitham: Option<WhithamConfig>,
}

fn default_scale() -> f64 {
    0.7
}

fn default_tol() -> f64 {
    1e-11
}
