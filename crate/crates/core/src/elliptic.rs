//! Complex elliptic special functions built on a single odd theta series.
//!
//! Everything reduces to the odd theta function
//!
//! ```text
//! θ(z|τ) = q^{1/8} Σ_{n∈Z} (-1)^n exp(iπ[n(n+1)τ + (2n+1)z]),   q = e^{2πiτ},
//! ```
//!
//! with the branch q^{1/8} = exp(iπτ/4), and its analytic z-derivatives:
//! the logarithmic derivative E1 = θ'/θ, the even double-periodic
//! E2 = -∂E1, the Weierstrass function ℘ = E2 - 2η₁ with
//! η₁ = -θ'''(0)/(6θ'(0)), and the kernel φ(u,z) = θ(u+z)θ'(0)/(θ(u)θ(z)).
//!
//! θ satisfies θ(z+1) = -θ(z) and θ(z+τ) = -exp(-iπτ-2πiz)·θ(z); every
//! derived identity used elsewhere in the crate is pinned by tests against
//! brute-force oracles.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

/// Distance (after reduction mod the lattice) below which an evaluation
/// point counts as a pole of E1/E2/℘/φ.
pub const LATTICE_GUARD: f64 = 1e-9;

fn ipi() -> C64 {
    C64::new(0.0, PI)
}

/// Complex modulus τ with Im τ > 0 and its cached nome q = e^{2πiτ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticModulus {
    tau: C64,
    q: C64,
}

impl EllipticModulus {
    pub fn new(tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) || !tau.re.is_finite() || !tau.im.is_finite() {
            return Err(CoreError::Degenerate(format!(
                "elliptic modulus needs Im tau > 0, got {tau}"
            )));
        }
        let q = (C64::new(0.0, 2.0 * PI) * tau).exp();
        Ok(Self { tau, q })
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn nome(&self) -> C64 {
        self.q
    }

    /// The half periods (1/2, τ/2, (1+τ)/2), in this order.
    pub fn half_periods(&self) -> [C64; 3] {
        [
            C64::new(0.5, 0.0),
            self.tau * 0.5,
            (self.tau + 1.0) * 0.5,
        ]
    }
}

/// Truncation policy for the theta series.
#[derive(Debug, Clone, Copy)]
pub struct SeriesTolerance {
    pub abs_tol: f64,
    pub max_terms: usize,
}

impl SeriesTolerance {
    pub fn new(abs_tol: f64, max_terms: usize) -> Result<Self> {
        if !(abs_tol > 0.0) {
            return Err(CoreError::Degenerate("abs_tol must be positive".into()));
        }
        if max_terms < 8 {
            return Err(CoreError::Degenerate("max_terms must be at least 8".into()));
        }
        Ok(Self { abs_tol, max_terms })
    }
}

impl Default for SeriesTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-14,
            max_terms: 512,
        }
    }
}

/// Reduce z modulo the lattice Z + Zτ, putting the lattice coordinates in
/// [-1/2, 1/2). Returns (z - m - nτ, m, n).
pub fn lattice_reduce(z: C64, tau: C64) -> (C64, i64, i64) {
    let b = z.im / tau.im;
    let a = z.re - b * tau.re;
    let m = (a + 0.5).floor() as i64;
    let n = (b + 0.5).floor() as i64;
    (z - C64::new(m as f64, 0.0) - tau * (n as f64), m, n)
}

fn require_off_lattice(z: C64, m: &EllipticModulus) -> Result<()> {
    let (red, mm, nn) = lattice_reduce(z, m.tau);
    let dist = red.norm();
    if dist < LATTICE_GUARD {
        return Err(CoreError::LatticePole {
            point: z,
            nearest: C64::new(mm as f64, 0.0) + m.tau * (nn as f64),
            dist,
        });
    }
    Ok(())
}

/// Sum θ and its first `order` z-derivatives in one symmetric two-sided
/// pass n = 0, -1, 1, -2, 2, …, stopping once two consecutive terms fall
/// below the tolerance.
///
/// The argument is first reduced to the fundamental cell; the exact
/// quasi-periodicity factor θ(z₀+m+nτ) = (-1)^{m+n} e^{-iπτn²-2πinz₀} θ(z₀)
/// is applied analytically, so evaluation stays well conditioned for large
/// |Im z| where the raw series would lose all significant digits to
/// cancellation.
fn theta_jet(z: C64, m: &EllipticModulus, tol: SeriesTolerance, order: usize) -> Result<[C64; 4]> {
    debug_assert!(order <= 3);
    let (z0, mm, nn) = lattice_reduce(z, m.tau);
    if mm != 0 || nn != 0 {
        let jet0 = theta_jet(z0, m, tol, order)?;
        let beta = C64::new(0.0, -2.0 * PI) * (nn as f64);
        let sign = if (mm + nn).rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let factor = (-ipi() * m.tau * ((nn * nn) as f64) + beta * z0).exp() * sign;
        const BINOM: [[f64; 4]; 4] = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        let mut jet = [C64::new(0.0, 0.0); 4];
        for (k, slot) in jet.iter_mut().enumerate().take(order + 1) {
            let mut acc = C64::new(0.0, 0.0);
            let mut beta_pow = C64::new(1.0, 0.0);
            // Σ_j C(k,j) β^{k-j} θ^{(j)}(z₀), powers accumulated from j=k down.
            for j in (0..=k).rev() {
                acc += jet0[j] * BINOM[k][j] * beta_pow;
                beta_pow *= beta;
            }
            *slot = acc * factor;
        }
        return Ok(jet);
    }
    let tau = m.tau;
    let mut acc = [C64::new(0.0, 0.0); 4];
    let mut below = 0usize;
    let mut count = 0usize;
    let mut n: i64 = 0;
    loop {
        let nf = n as f64;
        let exponent = ipi() * (tau * (nf * (nf + 1.0)) + z * (2.0 * nf + 1.0));
        let sign = if n.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
        let term = exponent.exp() * sign;
        let dfac = ipi() * (2.0 * nf + 1.0);
        let mut tk = term;
        acc[0] += tk;
        for slot in acc.iter_mut().take(order + 1).skip(1) {
            tk *= dfac;
            *slot += tk;
        }
        let gauge = term.norm() * dfac.norm().max(1.0).powi(order as i32);
        if gauge < tol.abs_tol {
            below += 1;
        } else {
            below = 0;
        }
        count += 1;
        if below >= 2 && count >= 6 {
            break;
        }
        if count >= tol.max_terms {
            return Err(CoreError::SeriesDivergence {
                abs_q: m.q.norm(),
                max_terms: tol.max_terms,
            });
        }
        n = if n >= 0 { -n - 1 } else { -n };
    }
    let prefactor = (ipi() * tau / 4.0).exp();
    for slot in acc.iter_mut() {
        *slot *= prefactor;
    }
    Ok(acc)
}

/// θ(z|τ).
pub fn theta(z: C64, m: &EllipticModulus, tol: SeriesTolerance) -> Result<C64> {
    Ok(theta_jet(z, m, tol, 0)?[0])
}

/// k-th analytic z-derivative of θ, k ∈ {1,2,3}. Term-by-term
/// differentiation of the series, not finite differences.
pub fn theta_derivatives(z: C64, m: &EllipticModulus, order: usize) -> Result<C64> {
    if !(1..=3).contains(&order) {
        return Err(CoreError::Degenerate(format!(
            "theta derivative order must be 1, 2 or 3, got {order}"
        )));
    }
    Ok(theta_jet(z, m, SeriesTolerance::default(), order)?[order])
}

/// E1(z|τ) = ∂_z log θ = θ'/θ.
pub fn eisenstein_e1(z: C64, m: &EllipticModulus) -> Result<C64> {
    require_off_lattice(z, m)?;
    let jet = theta_jet(z, m, SeriesTolerance::default(), 1)?;
    Ok(jet[1] / jet[0])
}

/// E2(z|τ) = -∂_z E1 = (θ'/θ)² - θ''/θ. Doubly periodic.
pub fn eisenstein_e2(z: C64, m: &EllipticModulus) -> Result<C64> {
    require_off_lattice(z, m)?;
    let jet = theta_jet(z, m, SeriesTolerance::default(), 2)?;
    let r1 = jet[1] / jet[0];
    let r2 = jet[2] / jet[0];
    Ok(r1 * r1 - r2)
}

/// η₁(τ) = -θ'''(0)/(6θ'(0)); the constant in E2 = ℘ + 2η₁.
pub fn eta1(m: &EllipticModulus) -> Result<C64> {
    let jet = theta_jet(C64::new(0.0, 0.0), m, SeriesTolerance::default(), 3)?;
    Ok(-jet[3] / (jet[1] * 6.0))
}

/// ℘(z|τ) = E2(z) - 2η₁(τ).
pub fn weierstrass_p(z: C64, m: &EllipticModulus) -> Result<C64> {
    Ok(eisenstein_e2(z, m)? - eta1(m)? * 2.0)
}

/// ℘'(z|τ) = ∂_z E2 = 3E1·θ''/θ - 2E1³ - θ'''/θ.
pub fn weierstrass_p_prime(z: C64, m: &EllipticModulus) -> Result<C64> {
    require_off_lattice(z, m)?;
    let jet = theta_jet(z, m, SeriesTolerance::default(), 3)?;
    let r1 = jet[1] / jet[0];
    let r2 = jet[2] / jet[0];
    let r3 = jet[3] / jet[0];
    Ok(r1 * r2 * 3.0 - r1 * r1 * r1 * 2.0 - r3)
}

/// Branch values (e₁, e₂, e₃) = (℘(1/2), ℘(τ/2), ℘((1+τ)/2)).
pub fn half_period_values(m: &EllipticModulus) -> Result<(C64, C64, C64)> {
    let [h1, h2, h3] = m.half_periods();
    Ok((
        weierstrass_p(h1, m)?,
        weierstrass_p(h2, m)?,
        weierstrass_p(h3, m)?,
    ))
}

/// φ(u,z) = θ(u+z)θ'(0)/(θ(u)θ(z)). Symmetric in (u,z); simple pole with
/// residue 1 at z = 0.
pub fn phi_kernel(u: C64, z: C64, m: &EllipticModulus) -> Result<C64> {
    require_off_lattice(u, m)?;
    require_off_lattice(z, m)?;
    let tol = SeriesTolerance::default();
    let theta_sum = theta(u + z, m, tol)?;
    let theta_u = theta(u, m, tol)?;
    let theta_z = theta(z, m, tol)?;
    let d0 = theta_jet(C64::new(0.0, 0.0), m, tol, 1)?[1];
    Ok(theta_sum * d0 / (theta_u * theta_z))
}

/// One named residual of the built-in identity suite.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: &'static str,
    pub residual: f64,
    pub threshold: f64,
}

impl IdentityCheck {
    pub fn passes(&self) -> bool {
        self.residual < self.threshold
    }
}

/// Identity suite on a 5×5 grid in the fundamental cell of `m`:
/// quasi-periodicity and oddness of θ, double periodicity of E2, the
/// residue of φ at z = 0, and analytic-vs-finite-difference θ'.
pub fn identity_report(m: &EllipticModulus) -> Result<Vec<IdentityCheck>> {
    let tol = SeriesTolerance::default();
    let tau = m.tau();
    // 5×5 grid on the unit square, which sits inside the fundamental cell
    // for every modulus with Im τ ≥ 1. Keeping Im z ≤ 0.9 also keeps
    // |θ(z+τ)| small enough that the quasi-periodicity residual is not
    // swamped by f64 rounding of the exponential factors.
    let grid: Vec<C64> = (0..5)
        .flat_map(|j| {
            (0..5).map(move |k| C64::new((j as f64 + 0.5) / 5.0, (k as f64 + 0.5) / 5.0))
        })
        .collect();

    let mut quasi_one: f64 = 0.0;
    let mut quasi_tau: f64 = 0.0;
    let mut odd: f64 = 0.0;
    let mut e2_periodic: f64 = 0.0;
    for &z in &grid {
        let t0 = theta(z, m, tol)?;
        let scale = t0.norm().max(1.0);
        quasi_one = quasi_one.max((theta(z + 1.0, m, tol)? + t0).norm() / scale);
        let factor = (-ipi() * tau - C64::new(0.0, 2.0 * PI) * z).exp();
        quasi_tau = quasi_tau.max((theta(z + tau, m, tol)? + factor * t0).norm() / scale);
        odd = odd.max((theta(-z, m, tol)? + t0).norm() / scale);
        let e2 = eisenstein_e2(z, m)?;
        e2_periodic = e2_periodic
            .max((eisenstein_e2(z + 1.0, m)? - e2).norm())
            .max((eisenstein_e2(z + tau, m)? - e2).norm());
    }

    // Residue of φ(u,·) at 0: z·φ(u,z) = 1 + c₁z + c₂z² + …; two Richardson
    // levels on a halving sequence kill both correction terms.
    let u = C64::new(0.31, 0.0) + tau * 0.17;
    let h = C64::new(1e-4, 0.0);
    let v = |zz: C64| -> Result<C64> { Ok(zz * phi_kernel(u, zz, m)?) };
    let extrap = (v(h * 0.25)? * 8.0 - v(h * 0.5)? * 6.0 + v(h)?) / 3.0;
    let phi_residue = (extrap - 1.0).norm();

    // Analytic θ' against a central difference, step 1e-5.
    let mut deriv_fd: f64 = 0.0;
    for &z in grid.iter().step_by(7) {
        let h = C64::new(1e-5, 0.0);
        let fd = (theta(z + h, m, tol)? - theta(z - h, m, tol)?) / (h * 2.0);
        let an = theta_derivatives(z, m, 1)?;
        deriv_fd = deriv_fd.max((fd - an).norm() / an.norm().max(1.0));
    }

    Ok(vec![
        IdentityCheck {
            name: "theta_antiperiod_1",
            residual: quasi_one,
            threshold: 1e-12,
        },
        IdentityCheck {
            name: "theta_quasiperiod_tau",
            residual: quasi_tau,
            threshold: 1e-10,
        },
        IdentityCheck {
            name: "theta_odd",
            residual: odd,
            threshold: 1e-12,
        },
        IdentityCheck {
            name: "e2_double_periodic",
            residual: e2_periodic,
            threshold: 1e-10,
        },
        IdentityCheck {
            name: "phi_residue_at_zero",
            residual: phi_residue,
            threshold: 1e-8,
        },
        IdentityCheck {
            name: "theta_prime_vs_fd",
            residual: deriv_fd,
            threshold: 1e-7,
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tau_i() -> EllipticModulus {
        EllipticModulus::new(c(0.0, 1.0)).unwrap()
    }

    #[test]
    fn modulus_rejects_lower_half_plane() {
        assert!(EllipticModulus::new(c(0.3, -0.2)).is_err());
        assert!(EllipticModulus::new(c(0.3, 0.0)).is_err());
    }

    #[test]
    fn theta_vanishes_at_origin() {
        let v = theta(c(0.0, 0.0), &tau_i(), SeriesTolerance::default()).unwrap();
        assert!(v.norm() < 1e-14);
    }

    #[test]
    fn theta_is_odd() {
        let m = tau_i();
        let z = c(0.3, 0.1);
        let a = theta(z, &m, SeriesTolerance::default()).unwrap();
        let b = theta(-z, &m, SeriesTolerance::default()).unwrap();
        assert!((a + b).norm() < 1e-13);
    }

    #[test]
    fn theta_second_derivative_vanishes_at_origin() {
        let v = theta_derivatives(c(0.0, 0.0), &tau_i(), 2).unwrap();
        assert!(v.norm() < 1e-13);
    }

    #[test]
    fn theta_first_derivative_at_origin_nonzero_and_matches_fd() {
        let m = tau_i();
        let d1 = theta_derivatives(c(0.0, 0.0), &m, 1).unwrap();
        assert!(d1.norm() > 0.1);
        let h = c(1e-5, 0.0);
        let fd = (theta(h, &m, SeriesTolerance::default()).unwrap()
            - theta(-h, &m, SeriesTolerance::default()).unwrap())
            / (h * 2.0);
        assert!((fd - d1).norm() / d1.norm() < 1e-8);
    }

    #[test]
    fn derivative_order_validation() {
        assert!(theta_derivatives(c(0.1, 0.0), &tau_i(), 0).is_err());
        assert!(theta_derivatives(c(0.1, 0.0), &tau_i(), 4).is_err());
    }

    #[test]
    fn series_diverges_for_nearly_real_modulus() {
        let m = EllipticModulus::new(c(0.0, 1e-9)).unwrap();
        let err = theta(c(0.3, 0.0), &m, SeriesTolerance::default()).unwrap_err();
        match err {
            CoreError::SeriesDivergence { abs_q, .. } => assert!(abs_q > 0.99),
            other => panic!("expected divergence, got {other}"),
        }
    }

    #[test]
    fn e1_rejects_lattice_points() {
        let m = tau_i();
        let err = eisenstein_e1(c(1.0, 1.0), &m).unwrap_err();
        match err {
            CoreError::LatticePole { nearest, .. } => {
                assert!((nearest - c(1.0, 1.0)).norm() < 1e-12)
            }
            other => panic!("expected lattice pole, got {other}"),
        }
    }

    #[test]
    fn e1_is_odd_and_finite_at_half_period() {
        let m = tau_i();
        let z = c(0.3, 0.0);
        let a = eisenstein_e1(z, &m).unwrap();
        let b = eisenstein_e1(-z, &m).unwrap();
        assert!((a + b).norm() < 1e-12);
        let half = eisenstein_e1(c(0.5, 0.0), &m).unwrap();
        assert!(half.is_finite());
    }

    #[test]
    fn e1_ratio_definition() {
        let m = EllipticModulus::new(c(0.0, 2.0)).unwrap();
        let z = c(0.2, 0.1);
        let ratio = theta_derivatives(z, &m, 1).unwrap()
            / theta(z, &m, SeriesTolerance::default()).unwrap();
        let e1 = eisenstein_e1(z, &m).unwrap();
        assert!((ratio - e1).norm() < 1e-13);
    }

    #[test]
    fn e2_is_even() {
        let m = tau_i();
        let z = c(0.21, 0.17);
        let a = eisenstein_e2(z, &m).unwrap();
        let b = eisenstein_e2(-z, &m).unwrap();
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn wp_is_even_and_rejects_poles() {
        let m = tau_i();
        let z = c(0.31, 0.22);
        let a = weierstrass_p(z, &m).unwrap();
        let b = weierstrass_p(-z, &m).unwrap();
        assert!((a - b).norm() < 1e-11);
        assert!(weierstrass_p(c(0.0, 0.0), &m).is_err());
    }

    #[test]
    fn half_period_values_square_lattice() {
        let m = tau_i();
        let (e1v, e2v, e3v) = half_period_values(&m).unwrap();
        assert!((e1v + e2v).norm() < 1e-10, "e2 = -e1 on the square lattice");
        assert!(e3v.norm() < 1e-10, "e3 = 0 on the square lattice");
        assert!((e1v + e2v + e3v).norm() < 1e-10);
        assert!((e1v - e2v).norm() > 1.0);
        assert!((e1v - e3v).norm() > 1.0);
    }

    #[test]
    fn phi_kernel_symmetry_and_poles() {
        let m = tau_i();
        let u = c(0.2, 0.0);
        let z = c(0.3, 0.0);
        let a = phi_kernel(u, z, &m).unwrap();
        let b = phi_kernel(z, u, &m).unwrap();
        assert!((a - b).norm() < 1e-12);
        assert!(phi_kernel(c(0.0, 0.0), z, &m).is_err());
        assert!(phi_kernel(u, c(1.0, 0.0), &m).is_err());
    }

    #[test]
    fn phi_kernel_periodicity_factors() {
        let m = tau_i();
        let tau = m.tau();
        let u = c(0.2, 0.0);
        let z = c(0.3, 0.0);
        let base = phi_kernel(u, z, &m).unwrap();
        let p1 = phi_kernel(u, z + 1.0, &m).unwrap();
        assert!((p1 - base).norm() < 1e-12);
        let ptau = phi_kernel(u, z + tau, &m).unwrap();
        let factor = (-C64::new(0.0, 2.0 * PI) * u).exp();
        assert!((ptau - base * factor).norm() < 1e-11);
    }

    #[test]
    fn identity_report_all_pass() {
        for tau in [c(0.0, 1.0), c(0.0, 1.5), c(0.3, 1.2)] {
            let m = EllipticModulus::new(tau).unwrap();
            for check in identity_report(&m).unwrap() {
                assert!(
                    check.passes(),
                    "{} residual {:.3e} >= {:.1e} at tau {tau}",
                    check.name,
                    check.residual,
                    check.threshold
                );
            }
        }
    }

    #[test]
    fn series_tolerance_validation() {
        assert!(SeriesTolerance::new(0.0, 64).is_err());
        assert!(SeriesTolerance::new(1e-10, 4).is_err());
        assert!(SeriesTolerance::new(1e-10, 64).is_ok());
    }
}
