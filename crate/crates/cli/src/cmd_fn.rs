//! `fn` subcommand: evaluate the special functions and run the identity
//! suite.

use std::path::Path;

use anyhow::{bail, Result};
use num_complex::Complex64 as C64;

use isolab_core::elliptic::{
    eisenstein_e1, eisenstein_e2, eta1, identity_report, phi_kernel, theta, theta_derivatives,
    weierstrass_p, weierstrass_p_prime, EllipticModulus, SeriesTolerance,
};

use crate::report::{file_name, CheckLine, CsvWriter, Manifest};

pub struct FnRequest {
    pub taus: Vec<C64>,
    pub check: bool,
    pub eval: Option<String>,
    pub z: Option<C64>,
    pub z2: Option<C64>,
    pub grid: Option<usize>,
}

fn default_taus() -> Vec<C64> {
    vec![C64::new(0.0, 1.0), C64::new(0.0, 1.5), C64::new(0.3, 1.2)]
}

fn evaluate(name: &str, z: C64, z2: Option<C64>, m: &EllipticModulus) -> isolab_core::Result<C64> {
    let tol = SeriesTolerance::default();
    match name {
        "theta" => theta(z, m, tol),
        "theta_d1" => theta_derivatives(z, m, 1),
        "theta_d2" => theta_derivatives(z, m, 2),
        "theta_d3" => theta_derivatives(z, m, 3),
        "e1" => eisenstein_e1(z, m),
        "e2" => eisenstein_e2(z, m),
        "eta1" => eta1(m),
        "wp" => weierstrass_p(z, m),
        "wp_prime" => weierstrass_p_prime(z, m),
        "phi" => phi_kernel(z, z2.unwrap_or(C64::new(0.3, 0.0)), m),
        other => Err(isolab_core::CoreError::Degenerate(format!(
            "unknown function {other:?}"
        ))),
    }
}

pub fn run(req: &FnRequest, out_dir: &Path) -> Result<i32> {
    let taus = if req.taus.is_empty() {
        default_taus()
    } else {
        req.taus.clone()
    };
    let config = serde_json::json!({
        "taus": taus.iter().map(|t| [t.re, t.im]).collect::<Vec<_>>(),
        "check": req.check,
        "eval": req.eval,
        "z": req.z.map(|z| [z.re, z.im]),
        "z2": req.z2.map(|z| [z.re, z.im]),
        "grid": req.grid,
    });
    let mut manifest = Manifest::new("fn", config);

    if let Some(name) = &req.eval {
        let mut csv = CsvWriter::new(
            out_dir.join("fn_eval.csv"),
            &[
                "tau_re", "tau_im", "z_re", "z_im", "z2_re", "z2_im", "value_re", "value_im",
            ],
        );
        let z2 = req.z2.unwrap_or(C64::new(0.0, 0.0));
        for &tau in &taus {
            let m = EllipticModulus::new(tau).map_err(|e| anyhow::anyhow!("{e}"))?;
            let points: Vec<C64> = match req.grid {
                Some(n) if n > 0 => (0..n)
                    .flat_map(|j| {
                        (0..n).map(move |k| {
                            C64::new((j as f64 + 0.5) / n as f64, (k as f64 + 0.5) / n as f64)
                        })
                    })
                    .collect(),
                _ => vec![req.z.unwrap_or(C64::new(0.25, 0.1))],
            };
            for z in points {
                match evaluate(name, z, req.z2, &m) {
                    Ok(v) => {
                        csv.row(&[tau.re, tau.im, z.re, z.im, z2.re, z2.im, v.re, v.im]);
                    }
                    Err(e) => {
                        manifest.failed_stage = Some(format!("eval {name} at {z}: {e}"));
                        manifest.finalize(out_dir)?;
                        return Ok(1);
                    }
                }
            }
        }
        let path = csv.finish()?;
        manifest.outputs.push(file_name(&path));
    } else if !req.check {
        bail!("fn needs --check and/or --eval NAME");
    }

    if req.check {
        for &tau in &taus {
            let m = EllipticModulus::new(tau).map_err(|e| anyhow::anyhow!("{e}"))?;
            match identity_report(&m) {
                Ok(checks) => {
                    for check in checks {
                        manifest.push(CheckLine::below(
                            &format!("{}@tau={},{}", check.name, tau.re, tau.im),
                            check.residual,
                            check.threshold,
                        ));
                    }
                }
                Err(e) => {
                    manifest.failed_stage = Some(format!("identity suite at tau {tau}: {e}"));
                    manifest.finalize(out_dir)?;
                    return Ok(1);
                }
            }
        }
    }

    manifest.finalize(out_dir)
}
