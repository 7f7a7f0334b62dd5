//! `limit` subcommand: κ-sweep of the level flow against the frozen-modulus
//! flow, with the convergence-order fit. Sweep points for different initial
//! conditions run on up to ISOLAB_THREADS worker threads.

use std::path::Path;

use anyhow::{anyhow, Result};
use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use isolab_core::calogero::{scaling_limit_fit, ScalingFit};
use isolab_core::elliptic::EllipticModulus;

use crate::report::{file_name, CheckLine, CsvWriter, Manifest};

pub struct LimitRequest {
    pub nu: C64,
    pub kappas: Vec<f64>,
    pub horizon: f64,
    pub tau0: C64,
    pub u0: C64,
    pub v0: C64,
    pub tol: f64,
    pub seed: u64,
    pub random_ics: usize,
}

pub const ORDER_LOW: f64 = 0.8;
pub const ORDER_HIGH: f64 = 1.2;

pub fn thread_cap() -> usize {
    std::env::var("ISOLAB_THREADS")
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .filter(|&n| n >= 1)
        .unwrap_or(1)
}

pub fn run(req: &LimitRequest, out_dir: &Path) -> Result<i32> {
    let config = serde_json::json!({
        "nu": [req.nu.re, req.nu.im],
        "kappas": req.kappas,
        "horizon": req.horizon,
        "tau0": [req.tau0.re, req.tau0.im],
        "u0": [req.u0.re, req.u0.im],
        "v0": [req.v0.re, req.v0.im],
        "tol": req.tol,
        "seed": req.seed,
        "random_ics": req.random_ics,
    });
    let mut manifest = Manifest::new("limit", config);
    let tau0 = EllipticModulus::new(req.tau0).map_err(|e| anyhow!("{e}"))?;

    // Initial conditions: the explicit one, plus seeded random ones.
    let mut ics = vec![(req.u0, req.v0)];
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    for _ in 0..req.random_ics {
        ics.push((
            C64::new(rng.gen_range(0.2..0.4), rng.gen_range(-0.05..0.05)),
            C64::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.05..0.05)),
        ));
    }

    let cap = thread_cap().min(ics.len()).max(1);
    let mut fits: Vec<Option<isolab_core::Result<ScalingFit>>> = Vec::new();
    fits.resize_with(ics.len(), || None);
    std::thread::scope(|scope| {
        for (chunk_ics, chunk_fits) in ics
            .chunks(ics.len().div_ceil(cap))
            .zip(fits.chunks_mut(ics.len().div_ceil(cap)))
        {
            scope.spawn(move || {
                for ((u0, v0), slot) in chunk_ics.iter().zip(chunk_fits.iter_mut()) {
                    *slot = Some(scaling_limit_fit(
                        *u0,
                        *v0,
                        req.nu,
                        &tau0,
                        &req.kappas,
                        req.horizon,
                        req.tol,
                    ));
                }
            });
        }
    });

    let mut csv = CsvWriter::new(
        out_dir.join("limit_sweep.csv"),
        &["ic", "kappa", "distance"],
    );
    for (k, slot) in fits.into_iter().enumerate() {
        let fit = match slot.expect("all slots filled") {
            Ok(f) => f,
            Err(e) => {
                manifest.failed_stage = Some(format!("sweep for ic {k}: {e}"));
                manifest.finalize(out_dir)?;
                return Ok(1);
            }
        };
        for (kappa, dist) in fit.kappas.iter().zip(&fit.distances) {
            csv.row(&[k as f64, *kappa, *dist]);
        }
        match fit.fitted_order {
            Some(order) => {
                manifest.push(CheckLine {
                    name: format!("fitted_order_ic{k}"),
                    value: order,
                    threshold: ORDER_LOW,
                    pass: (ORDER_LOW..=ORDER_HIGH).contains(&order),
                });
            }
            None => {
                // Degenerate sweep (distances at rounding, e.g. ν = 0).
                manifest.calibrate(
                    &format!("fitted_order_ic{k}"),
                    serde_json::json!("degenerate (all distances at rounding)"),
                );
            }
        }
    }
    let path = csv.finish()?;
    manifest.outputs.push(file_name(&path));
    manifest.finalize(out_dir)
}
