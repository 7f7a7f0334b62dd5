//! Painlevé VI in rational and elliptic coordinates.
//!
//! The rational form is the classical second-order equation for X(t) with
//! parameters (α, β, γ, δ). The elliptic form lives on the extended phase
//! space {v, u, τ}: with (α₀..α₃) = (α, -β, γ, ½-δ) and half periods
//! T_j/2 ∈ {0, 1/2, τ/2, (1+τ)/2},
//!
//! ```text
//! d²u/dτ² = ∂_u U(u|τ),    U(u|τ) = (2πi)⁻² Σ_j α_j ℘(u + T_j/2 | τ),
//! ```
//!
//! and the two forms are exchanged by X = (℘(u)-e₁)/(e₂-e₁),
//! t = (e₃-e₁)/(e₂-e₁). `cross_form_residual` verifies that identification
//! numerically along integrated trajectories.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::elliptic::{half_period_values, weierstrass_p, weierstrass_p_prime, EllipticModulus};
use crate::error::{CoreError, Result};
use crate::integrate::{fd_weights, hamiltonian_flow, PathSpec, Trajectory};

/// The four constants of the rational form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PviParams {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub delta: C64,
}

impl PviParams {
    pub fn new(alpha: C64, beta: C64, gamma: C64, delta: C64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    /// One-parameter family (ν²/4, -ν²/4, ν²/4, ½ - ν²/4).
    pub fn family(nu: C64) -> Self {
        let q = nu * nu * 0.25;
        Self {
            alpha: q,
            beta: -q,
            gamma: q,
            delta: C64::new(0.5, 0.0) - q,
        }
    }

    /// (α₀, α₁, α₂, α₃) = (α, -β, γ, ½ - δ), recomputed on demand.
    pub fn alpha_vector(&self) -> [C64; 4] {
        [
            self.alpha,
            -self.beta,
            self.gamma,
            C64::new(0.5, 0.0) - self.delta,
        ]
    }
}

/// Point of the extended phase space {v, u, τ}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseState {
    pub v: C64,
    pub u: C64,
    pub tau: C64,
}

impl PhaseState {
    pub fn new(v: C64, u: C64, tau: C64) -> Result<Self> {
        if !(tau.im > 0.0) {
            return Err(CoreError::Degenerate(format!(
                "phase state needs Im tau > 0, got {tau}"
            )));
        }
        Ok(Self { v, u, tau })
    }
}

fn inv_two_pi_i_sq() -> C64 {
    // (2πi)⁻² = -1/(4π²)
    C64::new(-1.0 / (4.0 * PI * PI), 0.0)
}

fn half_period_shifts(m: &EllipticModulus) -> [C64; 4] {
    [
        C64::new(0.0, 0.0),
        C64::new(0.5, 0.0),
        m.tau() * 0.5,
        (m.tau() + 1.0) * 0.5,
    ]
}

/// U(u|τ) = (2πi)⁻² Σ_j α_j ℘(u + T_j/2).
pub fn potential_u(u: C64, m: &EllipticModulus, params: &PviParams) -> Result<C64> {
    let alphas = params.alpha_vector();
    let mut sum = C64::new(0.0, 0.0);
    for (aj, sj) in alphas.iter().zip(half_period_shifts(m)) {
        if aj.norm() == 0.0 {
            continue;
        }
        sum += aj * weierstrass_p(u + sj, m)?;
    }
    Ok(sum * inv_two_pi_i_sq())
}

/// ∂_u U(u|τ).
pub fn potential_u_du(u: C64, m: &EllipticModulus, params: &PviParams) -> Result<C64> {
    let alphas = params.alpha_vector();
    let mut sum = C64::new(0.0, 0.0);
    for (aj, sj) in alphas.iter().zip(half_period_shifts(m)) {
        if aj.norm() == 0.0 {
            continue;
        }
        sum += aj * weierstrass_p_prime(u + sj, m)?;
    }
    Ok(sum * inv_two_pi_i_sq())
}

/// X″ of the rational form at (t, X, X′).
pub fn pvi_rational_rhs(t: C64, x: C64, xdot: C64, params: &PviParams) -> Result<C64> {
    let one = C64::new(1.0, 0.0);
    for (value, what) in [(t, "t = 0"), (t - one, "t = 1")] {
        if value.norm() < 1e-12 {
            return Err(CoreError::Degenerate(format!("singular locus: {what}")));
        }
    }
    for (value, what) in [(x, "X = 0"), (x - one, "X = 1"), (x - t, "X = t")] {
        if value.norm() < 1e-12 {
            return Err(CoreError::Degenerate(format!("singular locus: {what}")));
        }
    }
    let first = (one / x + one / (x - one) + one / (x - t)) * xdot * xdot * 0.5;
    let second = (one / t + one / (t - one) + one / (x - t)) * xdot;
    let bracket = params.alpha
        + params.beta * t / (x * x)
        + params.gamma * (t - one) / ((x - one) * (x - one))
        + params.delta * t * (t - one) / ((x - t) * (x - t));
    let prefactor = x * (x - one) * (x - t) / (t * t * (t - one) * (t - one));
    Ok(first - second + prefactor * bracket)
}

/// (t, X) of the rational form for a point (u, τ) of the elliptic form.
pub fn elliptic_to_rational_at(u: C64, m: &EllipticModulus) -> Result<(C64, C64)> {
    let (e1, e2, e3) = half_period_values(m)?;
    let denom = e2 - e1;
    if denom.norm() < 1e-12 {
        return Err(CoreError::Degenerate("degenerate modulus: e1 = e2".into()));
    }
    let t = (e3 - e1) / denom;
    let x = (weierstrass_p(u, m)? - e1) / denom;
    Ok((t, x))
}

pub fn elliptic_to_rational(state: &PhaseState) -> Result<(C64, C64)> {
    let m = EllipticModulus::new(state.tau)?;
    elliptic_to_rational_at(state.u, &m)
}

/// Integrate the elliptic form at level κ along a τ-path:
/// κ du/dτ = v, κ dv/dτ = ∂_u U(u|τ), so that at κ = 1 the trajectory
/// satisfies d²u/dτ² = ∂_u U literally. States are recorded as [v, u].
pub fn solve_pvi_elliptic(
    state0: &PhaseState,
    tau_path: &PathSpec,
    params: &PviParams,
    kappa: C64,
    tol: f64,
) -> Result<Trajectory> {
    if (tau_path.start() - state0.tau).norm() > 1e-12 {
        return Err(CoreError::InvalidPath(
            "tau path must start at the initial state's tau".into(),
        ));
    }
    if tau_path.waypoints().iter().any(|w| w.im <= 0.0) {
        return Err(CoreError::InvalidPath(
            "tau path must stay in the upper half plane".into(),
        ));
    }
    let params = *params;
    // H(v, u; τ) = v²/2 - U(u|τ): under the fixed convention
    // κu̇ = ∂H/∂v, κv̇ = -∂H/∂u this realizes κv̇ = +∂_u U.
    let grad = move |tau: C64, v: C64, u: C64| -> Result<(C64, C64)> {
        let m = EllipticModulus::new(tau)?;
        Ok((v, -potential_u_du(u, &m, &params)?))
    };
    hamiltonian_flow(grad, state0.v, state0.u, tau_path, kappa, tol)
}

/// Residual report of the cross-form verification.
#[derive(Debug, Clone, Copy)]
pub struct CrossFormReport {
    /// max over evaluated samples of |X″ - rhs(t, X, X′)| / (1 + |X″|).
    pub residual: f64,
    /// Fraction of interior samples evaluable (X farther than the guard
    /// from {0, 1, t}).
    pub coverage: f64,
    pub evaluated: usize,
}

const SINGULARITY_GUARD: f64 = 1e-6;

/// Map an elliptic-form trajectory (states [v, u], params τ) through the
/// coordinate change and measure how well X(t) satisfies the rational form,
/// differentiating X in t with five-point stencils on the nonuniform
/// t-samples.
pub fn cross_form_residual(traj: &Trajectory, params: &PviParams) -> Result<CrossFormReport> {
    let n = traj.len();
    if n < 64 {
        return Err(CoreError::InvalidPath(format!(
            "cross-form residual needs at least 64 samples, got {n}"
        )));
    }
    let mut ts = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    for (tau, state) in traj.params.iter().zip(&traj.states) {
        let m = EllipticModulus::new(*tau)?;
        let (t, x) = elliptic_to_rational_at(state[1], &m)?;
        ts.push(t);
        xs.push(x);
    }
    let t_scale = ts.iter().map(|t| t.norm()).fold(1.0f64, f64::max);
    for w in ts.windows(2) {
        if (w[1] - w[0]).norm() < 1e-13 * t_scale {
            return Err(CoreError::InvalidPath(
                "t does not vary along the path (constant τ-path); reparametrize".into(),
            ));
        }
    }
    for w in ts.windows(3) {
        let d1 = w[1] - w[0];
        let d2 = w[2] - w[1];
        if (d2 * d1.conj()).re <= 0.0 {
            return Err(CoreError::InvalidPath(
                "t-path backtracks on itself; reparametrize the τ-path".into(),
            ));
        }
    }

    let mut residual = 0.0f64;
    let mut evaluated = 0usize;
    let interior = n - 4;
    for i in 2..n - 2 {
        let t0 = ts[i];
        let x0 = xs[i];
        if x0.norm() < SINGULARITY_GUARD
            || (x0 - 1.0).norm() < SINGULARITY_GUARD
            || (x0 - t0).norm() < SINGULARITY_GUARD
        {
            continue;
        }
        let nodes = &ts[i - 2..=i + 2];
        let w = fd_weights(nodes, t0, 2);
        let mut xdot = C64::new(0.0, 0.0);
        let mut xddot = C64::new(0.0, 0.0);
        for (j, xv) in xs[i - 2..=i + 2].iter().enumerate() {
            xdot += w[1][j] * xv;
            xddot += w[2][j] * xv;
        }
        let rhs = pvi_rational_rhs(t0, x0, xdot, params)?;
        let r = (xddot - rhs).norm() / (1.0 + xddot.norm());
        residual = residual.max(r);
        evaluated += 1;
    }
    if evaluated == 0 {
        return Err(CoreError::Degenerate(
            "no evaluable samples: trajectory glued to the singular locus".into(),
        ));
    }
    Ok(CrossFormReport {
        residual,
        coverage: evaluated as f64 / interior as f64,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn family_parameter_values() {
        let p0 = PviParams::family(c(0.0, 0.0));
        assert_eq!(p0.alpha, c(0.0, 0.0));
        assert_eq!(p0.beta, c(0.0, 0.0));
        assert_eq!(p0.gamma, c(0.0, 0.0));
        assert_eq!(p0.delta, c(0.5, 0.0));

        let p2 = PviParams::family(c(2.0, 0.0));
        assert_eq!(p2.alpha, c(1.0, 0.0));
        assert_eq!(p2.beta, c(-1.0, 0.0));
        assert_eq!(p2.gamma, c(1.0, 0.0));
        assert_eq!(p2.delta, c(-0.5, 0.0));
        for a in p2.alpha_vector() {
            assert_eq!(a, c(1.0, 0.0));
        }
    }

    #[test]
    fn zero_alpha_vector_gives_zero_potential() {
        // δ = ½ makes every α_j vanish (this is family(0)).
        let m = EllipticModulus::new(c(0.0, 1.0)).unwrap();
        let params = PviParams::family(c(0.0, 0.0));
        let v = potential_u(c(0.3, 0.1), &m, &params).unwrap();
        assert_eq!(v, c(0.0, 0.0));
    }

    #[test]
    fn family_potential_is_even() {
        let m = EllipticModulus::new(c(0.0, 1.0)).unwrap();
        let params = PviParams::family(c(1.0, 0.0));
        let u = c(0.21, 0.13);
        let a = potential_u(u, &m, &params).unwrap();
        let b = potential_u(-u, &m, &params).unwrap();
        assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn rational_rhs_hand_value() {
        // α = 1, others 0, X' = 0, X = 2, t = 3:
        // X(X-1)(X-t)·α/(t²(t-1)²) = 2·1·(-1)/36 = -1/18.
        let params = PviParams::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let v = pvi_rational_rhs(c(3.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), &params).unwrap();
        assert!((v - c(-1.0 / 18.0, 0.0)).norm() < 1e-15, "{v}");
    }

    #[test]
    fn rational_rhs_zero_case_and_alpha_linearity() {
        let zero = PviParams::new(c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0));
        let v = pvi_rational_rhs(c(3.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), &zero).unwrap();
        assert_eq!(v, c(0.0, 0.0));

        let t = c(2.5, 0.3);
        let x = c(0.4, -0.2);
        let xd = c(0.1, 0.05);
        let mk = |a: f64| PviParams::new(c(a, 0.0), c(0.2, 0.0), c(-0.1, 0.0), c(0.3, 0.0));
        let r0 = pvi_rational_rhs(t, x, xd, &mk(0.0)).unwrap();
        let r1 = pvi_rational_rhs(t, x, xd, &mk(1.0)).unwrap();
        let r2 = pvi_rational_rhs(t, x, xd, &mk(2.0)).unwrap();
        assert!(((r2 - r1) - (r1 - r0)).norm() < 1e-12);
    }

    #[test]
    fn rational_rhs_singular_locus_errors() {
        let params = PviParams::family(c(1.0, 0.0));
        assert!(pvi_rational_rhs(c(0.0, 0.0), c(2.0, 0.0), c(0.0, 0.0), &params).is_err());
        assert!(pvi_rational_rhs(c(3.0, 0.0), c(3.0, 0.0), c(0.0, 0.0), &params).is_err());
        assert!(pvi_rational_rhs(c(3.0, 0.0), c(1.0, 0.0), c(0.0, 0.0), &params).is_err());
    }

    #[test]
    fn coordinate_map_anchors() {
        for tau in [c(0.0, 1.0), c(0.2, 1.3)] {
            let m = EllipticModulus::new(tau).unwrap();
            let (t, _) = elliptic_to_rational_at(c(0.37, 0.11), &m).unwrap();
            let (_, x_half) = elliptic_to_rational_at(c(0.5, 0.0), &m).unwrap();
            assert!(x_half.norm() < 1e-10, "X(1/2) = {x_half}");
            let (_, x_tau) = elliptic_to_rational_at(tau * 0.5, &m).unwrap();
            assert!((x_tau - 1.0).norm() < 1e-10, "X(τ/2) = {x_tau}");
            let (_, x_sum) = elliptic_to_rational_at((tau + 1.0) * 0.5, &m).unwrap();
            assert!((x_sum - t).norm() < 1e-10, "X((1+τ)/2) = {x_sum} vs t = {t}");
        }
    }

    #[test]
    fn free_motion_for_zero_family() {
        let tau0 = c(0.0, 1.0);
        let state0 = PhaseState::new(c(0.4, 0.1), c(0.3, 0.2), tau0).unwrap();
        let path = PathSpec::line(tau0, c(0.0, 1.5), 16).unwrap();
        let kappa = c(2.0, 0.0);
        let params = PviParams::family(c(0.0, 0.0));
        let traj = solve_pvi_elliptic(&state0, &path, &params, kappa, 1e-12).unwrap();
        for (tau, st) in traj.params.iter().zip(&traj.states) {
            let expect = state0.u + state0.v * (tau - tau0) / kappa;
            assert!((st[1] - expect).norm() < 1e-10);
            assert!((st[0] - state0.v).norm() < 1e-12);
        }
    }

    #[test]
    fn elliptic_path_validation() {
        let tau0 = c(0.0, 1.0);
        let state0 = PhaseState::new(c(0.0, 0.0), c(0.3, 0.0), tau0).unwrap();
        let params = PviParams::family(c(1.0, 0.0));
        let bad_start = PathSpec::line(c(0.0, 1.1), c(0.0, 1.5), 8).unwrap();
        assert!(solve_pvi_elliptic(&state0, &bad_start, &params, c(1.0, 0.0), 1e-10).is_err());
        let bad_dir = PathSpec::line(tau0, c(0.0, -0.5), 8).unwrap();
        assert!(solve_pvi_elliptic(&state0, &bad_dir, &params, c(1.0, 0.0), 1e-10).is_err());
    }

    #[test]
    fn cross_form_rejects_constant_t() {
        // A τ-path looping back on itself hits a vanishing t-increment.
        let tau0 = c(0.0, 1.0);
        let state0 = PhaseState::new(c(0.2, 0.0), c(0.31, 0.17), tau0).unwrap();
        let params = PviParams::family(c(1.0, 0.0));
        let path = PathSpec::new(vec![tau0, c(0.0, 1.2), tau0], 40).unwrap();
        let traj = solve_pvi_elliptic(&state0, &path, &params, c(1.0, 0.0), 1e-10).unwrap();
        assert!(cross_form_residual(&traj, &params).is_err());
    }

    #[test]
    fn cross_form_needs_dense_sampling() {
        let tau0 = c(0.0, 1.0);
        let state0 = PhaseState::new(c(0.2, 0.0), c(0.31, 0.17), tau0).unwrap();
        let params = PviParams::family(c(1.0, 0.0));
        let path = PathSpec::line(tau0, c(0.0, 1.2), 16).unwrap();
        let traj = solve_pvi_elliptic(&state0, &path, &params, c(1.0, 0.0), 1e-10).unwrap();
        assert!(matches!(
            cross_form_residual(&traj, &params),
            Err(CoreError::InvalidPath(_))
        ));
    }
}
