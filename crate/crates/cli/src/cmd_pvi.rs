//! `pvi` subcommand: integrate the elliptic form along a τ-path and emit
//! the trajectory in both coordinate systems; optional cross-form check.

use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64 as C64;

use isolab_core::elliptic::EllipticModulus;
use isolab_core::integrate::PathSpec;
use isolab_core::pvi::{
    cross_form_residual, elliptic_to_rational_at, solve_pvi_elliptic, PhaseState, PviParams,
};

use crate::report::{file_name, CheckLine, CsvWriter, Manifest};

pub struct PviRequest {
    pub nu: C64,
    pub kappa: C64,
    pub u0: C64,
    pub v0: C64,
    pub tau_path: PathSpec,
    pub tol: f64,
    pub cross_check: bool,
}

pub const CROSS_FORM_THRESHOLD: f64 = 1e-5;

pub fn run(req: &PviRequest, out_dir: &Path) -> Result<i32> {
    if req.tau_path.waypoints().iter().any(|w| w.im <= 0.0) {
        bail!("tau path leaves the upper half plane; keep Im tau > 0");
    }
    let config = serde_json::json!({
        "nu": [req.nu.re, req.nu.im],
        "kappa": [req.kappa.re, req.kappa.im],
        "u0": [req.u0.re, req.u0.im],
        "v0": [req.v0.re, req.v0.im],
        "tau_path": req.tau_path.waypoints().iter().map(|w| [w.re, w.im]).collect::<Vec<_>>(),
        "samples_per_segment": req.tau_path.samples_per_segment(),
        "tol": req.tol,
        "cross_check": req.cross_check,
    });
    let mut manifest = Manifest::new("pvi", config);
    let params = PviParams::family(req.nu);
    let state0 = PhaseState::new(req.v0, req.u0, req.tau_path.start())
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let traj = match solve_pvi_elliptic(&state0, &req.tau_path, &params, req.kappa, req.tol) {
        Ok(t) => t,
        Err(e) => {
            manifest.failed_stage = Some(format!("integration: {e}"));
            manifest.finalize(out_dir)?;
            return Ok(1);
        }
    };

    let mut csv = CsvWriter::new(
        out_dir.join("pvi_traj.csv"),
        &[
            "idx", "tau_re", "tau_im", "u_re", "u_im", "v_re", "v_im", "t_re", "t_im", "x_re",
            "x_im",
        ],
    );
    for (k, (tau, st)) in traj.params.iter().zip(&traj.states).enumerate() {
        let m = EllipticModulus::new(*tau).map_err(|e| anyhow::anyhow!("{e}"))?;
        let (t, x) = match elliptic_to_rational_at(st[1], &m) {
            Ok(tx) => tx,
            Err(e) => {
                manifest.failed_stage = Some(format!("coordinate map at sample {k}: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        };
        csv.row(&[
            k as f64, tau.re, tau.im, st[1].re, st[1].im, st[0].re, st[0].im, t.re, t.im, x.re,
            x.im,
        ]);
    }
    let path = csv.finish()?;
    manifest.outputs.push(file_name(&path));

    if req.cross_check {
        match cross_form_residual(&traj, &params) {
            Ok(report) => {
                manifest.push(CheckLine::below(
                    "cross_form_residual",
                    report.residual,
                    CROSS_FORM_THRESHOLD,
                ));
                manifest.calibrate("cross_form_coverage", serde_json::json!(report.coverage));
                manifest.calibrate("cross_form_evaluated", serde_json::json!(report.evaluated));
            }
            Err(e) => {
                manifest.failed_stage = Some(format!("cross-form residual: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        }
    }

    manifest.finalize(out_dir)
}
