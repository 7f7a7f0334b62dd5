//! `elliptic` subcommand: the genus-one one-pole flow, the independent
//! Lax-matrix transcription check, the periodicity probe for the two
//! exponent readings, and the flow-calibration constant.

use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use isolab_core::elliptic::EllipticModulus;
use isolab_core::integrate::PathSpec;
use isolab_core::linalg::frobenius_norm;
use isolab_core::pvi::{potential_u_du, PviParams};
use isolab_core::torus::{
    integrate_torus_flow, lax_l_elliptic, sl2_one_pole_lax, torus_acceleration, CartanState,
    ExponentDenominator, OrbitResidue, TorusTimes,
};

use crate::report::{file_name, CheckLine, CsvWriter, Manifest};

pub struct EllipticRequest {
    pub nu: C64,
    pub kappa: C64,
    pub tau0: C64,
    pub tau_path: Option<PathSpec>,
    pub u0: C64,
    pub du0: C64,
    pub tol: f64,
    pub check_transcription: bool,
}

pub const TRANSCRIPTION_THRESHOLD: f64 = 1e-12;

/// Entrywise mismatch between the assembled Lax matrix and its independent
/// one-pole transcription over ten samples at the reference structure.
pub fn transcription_mismatch(nu: C64, kappa: C64, tau0: C64) -> Result<f64> {
    let times = TorusTimes::reference(tau0, vec![C64::new(0.0, 0.0)])
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let res = vec![OrbitResidue::rank_one_sl2(nu)];
    let mut worst = 0.0f64;
    for k in 0..10 {
        let t = k as f64 / 10.0;
        let w = C64::new(0.15 + 0.06 * t, 0.1 + 0.05 * t);
        let u = C64::new(0.21 + 0.02 * t, 0.03 * t);
        let v = C64::new(0.4 - 0.05 * t, 0.1);
        let state = CartanState::sl2(v, u);
        let general = lax_l_elliptic(
            w,
            w.conj(),
            &state,
            &res,
            &times,
            kappa,
            ExponentDenominator::ReferenceConjugate,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))?;
        let direct =
            sl2_one_pole_lax(w, w.conj(), v, u, nu, &times, kappa).map_err(|e| anyhow::anyhow!("{e}"))?;
        worst = worst.max(frobenius_norm(&(&general - &direct)));
    }
    Ok(worst)
}

/// Double-periodicity residuals of the two exponent readings at a deformed
/// modulus: (printed period-1, printed period-τ, deformed period-1,
/// deformed period-τ).
fn periodicity_probe(nu: C64, kappa: C64, times: &TorusTimes) -> Result<[f64; 4]> {
    let state = CartanState::sl2(C64::new(0.31, 0.07), C64::new(0.23, 0.045));
    let res = vec![OrbitResidue::rank_one_sl2(nu)];
    let w = C64::new(0.27, 0.33);
    let tau = times.tau();
    let lax = |w: C64, mode: ExponentDenominator| {
        lax_l_elliptic(w, w.conj(), &state, &res, times, kappa, mode)
            .map_err(|e| anyhow::anyhow!("{e}"))
    };
    let mut out = [0.0f64; 4];
    for (i, mode) in [
        ExponentDenominator::ReferenceConjugate,
        ExponentDenominator::DeformedConjugate,
    ]
    .into_iter()
    .enumerate()
    {
        let base = lax(w, mode)?;
        let shift1 = lax(w + 1.0, mode)?;
        let shift_tau = lax(w + tau, mode)?;
        let scale = frobenius_norm(&base).max(1.0);
        out[2 * i] = frobenius_norm(&(&shift1 - &base)) / scale;
        out[2 * i + 1] = frobenius_norm(&(&shift_tau - &base)) / scale;
    }
    Ok(out)
}

/// Fit of the proportionality constant between the one-pole acceleration
/// and the ν-family elliptic acceleration over a 5×3 grid.
pub fn proportionality_fit(nu: C64) -> Result<(C64, f64)> {
    let params = PviParams::family(nu);
    let mut ratios = Vec::new();
    for tau in [C64::new(0.0, 1.0), C64::new(0.0, 1.3), C64::new(0.2, 1.1)] {
        let m = EllipticModulus::new(tau).map_err(|e| anyhow::anyhow!("{e}"))?;
        for k in 0..5 {
            let u = C64::new(0.17 + 0.04 * k as f64, 0.03 + 0.02 * k as f64);
            let r1 = torus_acceleration(u, &m, nu, C64::new(1.0, 0.0))
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            let r2 = potential_u_du(u, &m, &params).map_err(|e| anyhow::anyhow!("{e}"))?;
            ratios.push(r1 / r2);
        }
    }
    let mean: C64 = ratios.iter().sum::<C64>() / ratios.len() as f64;
    let spread = ratios
        .iter()
        .map(|r| (r - mean).norm())
        .fold(0.0f64, f64::max)
        / mean.norm();
    Ok((mean, spread))
}

pub fn run(req: &EllipticRequest, out_dir: &Path) -> Result<i32> {
    let config = serde_json::json!({
        "nu": [req.nu.re, req.nu.im],
        "kappa": [req.kappa.re, req.kappa.im],
        "tau0": [req.tau0.re, req.tau0.im],
        "tau_path": req.tau_path.as_ref().map(|p| p.waypoints().iter().map(|w| [w.re, w.im]).collect::<Vec<_>>()),
        "u0": [req.u0.re, req.u0.im],
        "du0": [req.du0.re, req.du0.im],
        "tol": req.tol,
        "check_transcription": req.check_transcription,
    });
    let mut manifest = Manifest::new("elliptic", config);

    if req.check_transcription {
        let mismatch = transcription_mismatch(req.nu, req.kappa, req.tau0)?;
        manifest.push(CheckLine::below(
            "lax_transcription_match",
            mismatch,
            TRANSCRIPTION_THRESHOLD,
        ));
    }

    if let Some(path) = &req.tau_path {
        if (path.start() - req.tau0).norm() > 1e-12 {
            bail!("tau path must start at tau0");
        }
        let traj = match integrate_torus_flow(req.u0, req.du0, req.nu, path, req.kappa, req.tol) {
            Ok(t) => t,
            Err(e) => {
                manifest.failed_stage = Some(format!("flow: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        };
        let mut csv = CsvWriter::new(
            out_dir.join("torus_traj.csv"),
            &["idx", "tau_re", "tau_im", "u_re", "u_im", "du_re", "du_im"],
        );
        for (k, (tau, st)) in traj.params.iter().zip(&traj.states).enumerate() {
            csv.row(&[k as f64, tau.re, tau.im, st[0].re, st[0].im, st[1].re, st[1].im]);
        }
        let path_out = csv.finish()?;
        manifest.outputs.push(file_name(&path_out));

        // Periodicity probe at the deformed endpoint: which exponent
        // reading keeps L doubly periodic there.
        let times = TorusTimes::new(req.tau0, path.end(), vec![C64::new(0.0, 0.0)])
            .map_err(|e| anyhow::anyhow!("{e}"))?;
        let probe = periodicity_probe(req.nu, req.kappa, &times)?;
        manifest.calibrate(
            "periodicity_residuals",
            serde_json::json!({
                "printed_period_1": probe[0],
                "printed_period_tau": probe[1],
                "deformed_period_1": probe[2],
                "deformed_period_tau": probe[3],
                "periodic_reading": if probe[1] < 1e-8 { "printed" } else { "deformed_conjugate" },
            }),
        );
    }

    let (c_fit, spread) = proportionality_fit(req.nu)?;
    manifest.push(CheckLine::below("family_rhs_ratio_spread", spread, 1e-8));
    manifest.calibrate(
        "family_rhs_constant",
        serde_json::json!({
            "fitted_c": [c_fit.re, c_fit.im],
            "matched_nu": [req.nu.re, req.nu.im],
            "analytic_c": -8.0 * PI * PI,
        }),
    );

    manifest.finalize(out_dir)
}
