//! Brute-force oracles, independent of the library implementation path.
// Each integration test compiles this module separately and uses a subset.
#![allow(dead_code)]

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

/// Plain symmetric lattice sum ℘(z) ≈ 1/z² + Σ' [1/(z-ω)² - 1/ω²] over the
/// square |m|,|n| ≤ cutoff. The ω⁻³ tail cancels by symmetric pairing; the
/// remaining tail is O(cutoff⁻²), so this oracle is only good to ~1e-4
/// relative at cutoff 60.
pub fn wp_lattice_sum_plain(z: C64, tau: C64, cutoff: i64) -> C64 {
    let one = C64::new(1.0, 0.0);
    let mut s = one / (z * z);
    for m in -cutoff..=cutoff {
        for n in -cutoff..=cutoff {
            if m == 0 && n == 0 {
                continue;
            }
            let w = C64::new(m as f64, 0.0) + tau * (n as f64);
            let d = z - w;
            s += one / (d * d) - one / (w * w);
        }
    }
    s
}

/// Sum of divisors of k.
fn sigma1(k: u64) -> u64 {
    (1..=k).filter(|d| k.is_multiple_of(*d)).sum()
}

/// Eisenstein-regularized G₂(τ) = (π²/3)(1 - 24 Σ_{k≥1} σ₁(k) q^k),
/// q = e^{2πiτ}.
pub fn g2_eisenstein(tau: C64) -> C64 {
    let q = (C64::new(0.0, 2.0 * PI) * tau).exp();
    let mut sum = C64::new(0.0, 0.0);
    let mut qk = C64::new(1.0, 0.0);
    for k in 1..=400u64 {
        qk *= q;
        let term = qk * (sigma1(k) as f64);
        sum += term;
        if term.norm() < 1e-20 {
            break;
        }
    }
    (C64::new(1.0, 0.0) - sum * 24.0) * (PI * PI / 3.0)
}

/// Eisenstein (row-first) summed Weierstrass function:
/// ℘(z) = Σ_{|n| ≤ cutoff} π²/sin²(π(z - nτ)) - G₂(τ).
/// The inner m-sum is the exact closed form π²/sin²; the outer tail decays
/// like e^{-2π n Im τ}, so cutoff 60 is far below machine precision.
pub fn wp_eisenstein(z: C64, tau: C64, cutoff: i64) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for n in -cutoff..=cutoff {
        let y = z - tau * (n as f64);
        // Row magnitude ~ 4π² e^{-2π|Im y|}; skip rows that underflow.
        if PI * y.im.abs() > 300.0 {
            continue;
        }
        let sn = (y * PI).sin();
        s += C64::new(PI * PI, 0.0) / (sn * sn);
    }
    s - g2_eisenstein(tau)
}

/// Direct two-sided theta summation with a fixed large term count, kept
/// textually independent of the library series loop.
pub fn theta_direct(z: C64, tau: C64, nmax: i64) -> C64 {
    let ipi = C64::new(0.0, PI);
    let mut s = C64::new(0.0, 0.0);
    for n in -nmax..=nmax {
        let nf = n as f64;
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        s += (ipi * (tau * (nf * (nf + 1.0)) + z * (2.0 * nf + 1.0))).exp() * sign;
    }
    s * (ipi * tau / 4.0).exp()
}

pub fn assert_close(a: C64, b: C64, tol: f64, what: &str) {
    let d = (a - b).norm();
    assert!(d < tol, "{what}: |{a} - {b}| = {d:.3e} >= {tol:.1e}");
}

pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}
