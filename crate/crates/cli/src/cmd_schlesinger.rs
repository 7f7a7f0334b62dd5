//! `schlesinger` subcommand: run a pole-system deformation from a JSON
//! config with optional monodromy, tau and Whitham checks.

use std::path::Path;

use anyhow::{anyhow, Context, Result};
use num_complex::Complex64 as C64;
use serde::Serialize;

use isolab_core::linalg::CMat;
use isolab_core::schlesinger::{
    casimir_spectrum, integrate_schlesinger, isomonodromy_check, isomonodromy_check_frozen,
    tau_log_increment, whitham_residual, MNormalization, PoleSystem, zero_curvature_residual,
};

use crate::config::SchlesingerConfig;
use crate::report::{file_name, CheckLine, CsvWriter, Manifest};

pub const MOMENT_THRESHOLD: f64 = 1e-10;
pub const CASIMIR_THRESHOLD: f64 = 1e-9;
pub const ZERO_CURVATURE_THRESHOLD: f64 = 1e-10;
pub const MONODROMY_THRESHOLD: f64 = 1e-6;
pub const FROZEN_CONTROL_THRESHOLD: f64 = 1e-3;
pub const TAU_PATH_THRESHOLD: f64 = 1e-7;
pub const WHITHAM_THRESHOLD: f64 = 1e-6;

fn build_system(cfg: &SchlesingerConfig) -> Result<PoleSystem> {
    let positions: Vec<C64> = cfg.positions.iter().map(|c| c.value()).collect();
    match &cfg.residues {
        Some(mats) => {
            let residues: Result<Vec<CMat>> = mats
                .iter()
                .map(|rows| {
                    let n = rows.len();
                    let mut flat = Vec::with_capacity(n * n);
                    for row in rows {
                        if row.len() != n {
                            return Err(anyhow!("residue matrix is not square"));
                        }
                        for entry in row {
                            flat.push(entry.value());
                        }
                    }
                    Ok(CMat::from_row_slice(n, n, &flat))
                })
                .collect();
            PoleSystem::new(positions, residues?, cfg.kappa.value()).map_err(|e| anyhow!("{e}"))
        }
        None => PoleSystem::random_sl2(cfg.seed, positions, cfg.scale, cfg.kappa.value())
            .map_err(|e| anyhow!("{e}")),
    }
}

#[derive(Serialize)]
struct LoopReport {
    eigenvalues_before: Vec<(f64, f64)>,
    eigenvalues_after: Vec<(f64, f64)>,
}

#[derive(Serialize)]
struct MonodromyFile {
    drift: f64,
    loops: Vec<LoopReport>,
}

pub fn run(cfg: &SchlesingerConfig, out_dir: &Path) -> Result<i32> {
    let config_echo = serde_json::to_value(cfg)?;
    let mut manifest = Manifest::new("schlesinger", config_echo);
    let sys = build_system(cfg)?;
    if cfg.moving >= sys.len() {
        anyhow::bail!("moving index {} out of range for {} poles", cfg.moving, sys.len());
    }
    let path = cfg.path.build()?;

    let traj = match integrate_schlesinger(&sys, cfg.moving, &path, cfg.tol) {
        Ok(t) => t,
        Err(e) => {
            manifest.failed_stage = Some(format!("deformation: {e}"));
            manifest.finalize(out_dir)?;
            return Ok(1);
        }
    };

    // Per-sample invariant monitors.
    let spec0 = casimir_spectrum(&sys);
    let mut header = vec!["idx".to_string(), "x_re".to_string(), "x_im".to_string(), "moment".to_string()];
    for a in 0..sys.len() {
        header.push(format!("tr_p{a}_sq_re"));
        header.push(format!("tr_p{a}_sq_im"));
    }
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = CsvWriter::new(out_dir.join("schlesinger_traj.csv"), &header_refs);
    let mut moment_worst = 0.0f64;
    let mut casimir_worst = 0.0f64;
    for k in 0..traj.len() {
        let s = traj.system_at(k);
        let moment = s.moment_norm();
        moment_worst = moment_worst.max(moment);
        let spec = casimir_spectrum(&s);
        for (pa, pb) in spec.iter().zip(&spec0) {
            for (x, y) in pa.iter().zip(pb) {
                casimir_worst = casimir_worst.max((x - y).norm());
            }
        }
        let mut row = vec![k as f64, traj.base.params[k].re, traj.base.params[k].im, moment];
        for pa in &spec {
            row.push(pa[0].re);
            row.push(pa[0].im);
        }
        csv.row(&row);
    }
    let csv_path = csv.finish()?;
    manifest.outputs.push(file_name(&csv_path));
    manifest.push(CheckLine::below("moment_drift", moment_worst, MOMENT_THRESHOLD));
    manifest.push(CheckLine::below("casimir_drift", casimir_worst, CASIMIR_THRESHOLD));

    // Zero-curvature residual at the endpoint configuration.
    let end = traj.endpoint_system();
    let w_samples: Vec<C64> = vec![
        C64::new(0.3, 0.35),
        C64::new(-0.8, 0.4),
        C64::new(1.9, -0.7),
        C64::new(0.5, 2.0),
    ];
    match zero_curvature_residual(&end, cfg.moving, &w_samples, MNormalization::LevelScaled) {
        Ok(r) => manifest.push(CheckLine::below("zero_curvature", r, ZERO_CURVATURE_THRESHOLD)),
        Err(e) => {
            manifest.failed_stage = Some(format!("zero curvature: {e}"));
            manifest.finalize(out_dir)?;
            return Ok(1);
        }
    }

    if cfg.monodromy && !cfg.loops.is_empty() {
        let loops: Result<Vec<_>> = cfg.loops.iter().map(|l| l.build()).collect();
        let loops = loops?;
        match isomonodromy_check(&sys, cfg.moving, &path, &loops, cfg.tol) {
            Ok(rep) => {
                manifest.push(CheckLine::below("monodromy_drift", rep.drift, MONODROMY_THRESHOLD));
                let file = MonodromyFile {
                    drift: rep.drift,
                    loops: rep
                        .before
                        .iter()
                        .zip(&rep.after)
                        .map(|(b, a)| LoopReport {
                            eigenvalues_before: b.eigenvalues.iter().map(|e| (e.re, e.im)).collect(),
                            eigenvalues_after: a.eigenvalues.iter().map(|e| (e.re, e.im)).collect(),
                        })
                        .collect(),
                };
                let path = out_dir.join("monodromy.json");
                std::fs::write(&path, serde_json::to_string_pretty(&file)? + "\n")
                    .with_context(|| format!("writing {path:?}"))?;
                manifest.outputs.push(file_name(&path));
            }
            Err(e) => {
                manifest.failed_stage = Some(format!("monodromy: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        }
        if cfg.frozen_control {
            match isomonodromy_check_frozen(&sys, cfg.moving, &path, &loops, cfg.tol) {
                Ok(rep) => manifest.push(CheckLine::at_least(
                    "frozen_control_drift",
                    rep.drift,
                    FROZEN_CONTROL_THRESHOLD,
                )),
                Err(e) => {
                    manifest.failed_stage = Some(format!("frozen control: {e}"));
                    manifest.finalize(out_dir)?;
                    return Ok(1);
                }
            }
        }
    }

    if cfg.tau {
        let inc = tau_log_increment(&traj);
        manifest.calibrate("tau_log_increment", serde_json::json!([inc.re, inc.im]));
        if let Some(alt) = &cfg.alt_path {
            let alt_path = alt.build()?;
            if (alt_path.start() - path.start()).norm() > 1e-12
                || (alt_path.end() - path.end()).norm() > 1e-12
            {
                anyhow::bail!("alt_path must share endpoints with path");
            }
            match integrate_schlesinger(&sys, cfg.moving, &alt_path, cfg.tol) {
                Ok(alt_traj) => {
                    let alt_inc = tau_log_increment(&alt_traj);
                    manifest.push(CheckLine::below(
                        "tau_path_independence",
                        (inc - alt_inc).norm(),
                        TAU_PATH_THRESHOLD,
                    ));
                }
                Err(e) => {
                    manifest.failed_stage = Some(format!("alt-path deformation: {e}"));
                    manifest.finalize(out_dir)?;
                    return Ok(1);
                }
            }
        }
    }

    if let Some(wh) = &cfg.whitham {
        match whitham_residual(&end, wh.a, wh.b, wh.fd_step) {
            Ok(r) => manifest.push(CheckLine::below("whitham_residual", r.norm(), WHITHAM_THRESHOLD)),
            Err(e) => {
                manifest.failed_stage = Some(format!("whitham: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        }
    }

    manifest.finalize(out_dir)
}
