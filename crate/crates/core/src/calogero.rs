//! Autonomous limits at the critical level: the rank-one flow at frozen
//! modulus, the elliptic N-body system, and the numeric verification that
//! the level-κ flow converges to the frozen-modulus flow as κ → 0 with
//! rescaled time.

use num_complex::Complex64 as C64;

use crate::elliptic::{lattice_reduce, weierstrass_p, weierstrass_p_prime, EllipticModulus};
use crate::error::{CoreError, Result};
use crate::integrate::{integrate_path, PathSpec, Trajectory};
use crate::pvi::{potential_u, potential_u_du, solve_pvi_elliptic, PhaseState, PviParams};

/// Pairwise collision guard for the N-body flow (lattice distance).
pub const BODY_COLLISION_GUARD: f64 = 1e-6;

/// N-body configuration: positions, momenta, frozen modulus, coupling.
#[derive(Debug, Clone)]
pub struct CalogeroState {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub modulus: EllipticModulus,
    pub nu: C64,
}

impl CalogeroState {
    pub fn new(u: Vec<C64>, v: Vec<C64>, modulus: EllipticModulus, nu: C64) -> Result<Self> {
        if u.len() != v.len() || u.is_empty() {
            return Err(CoreError::InvalidSystem(
                "positions and momenta must be nonempty and of equal length".into(),
            ));
        }
        for i in 0..u.len() {
            for j in i + 1..u.len() {
                let (red, _, _) = lattice_reduce(u[i] - u[j], modulus.tau());
                if red.norm() < BODY_COLLISION_GUARD {
                    return Err(CoreError::InvalidSystem(format!(
                        "bodies {i} and {j} coincide mod the lattice"
                    )));
                }
            }
        }
        Ok(Self { u, v, modulus, nu })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

/// Energy H = Σ v_i²/2 + ν² Σ_{i<j} ℘(u_i - u_j | τ₀).
pub fn calogero_energy(u: &[C64], v: &[C64], modulus: &EllipticModulus, nu: C64) -> Result<C64> {
    let mut h: C64 = v.iter().map(|x| x * x).sum::<C64>() * 0.5;
    for i in 0..u.len() {
        for j in i + 1..u.len() {
            h += nu * nu * weierstrass_p(u[i] - u[j], modulus)?;
        }
    }
    Ok(h)
}

/// Conserved energy of the rank-one flow u'' = ∂_u U(u|τ₀):
/// E = v²/2 - U(u|τ₀).
pub fn citv_energy(u: C64, v: C64, modulus: &EllipticModulus, params: &PviParams) -> Result<C64> {
    Ok(v * v * 0.5 - potential_u(u, modulus, params)?)
}

/// Rank-one autonomous flow d²u/dt² = ∂_u U(u|τ₀) at frozen modulus.
/// States are recorded as [u, v] with v = du/dt.
pub fn citv_flow(
    u0: C64,
    v0: C64,
    modulus: &EllipticModulus,
    params: &PviParams,
    t_path: &PathSpec,
    tol: f64,
) -> Result<Trajectory> {
    let m = *modulus;
    let params = *params;
    let rhs = move |_t: C64, y: &[C64], out: &mut [C64]| -> Result<()> {
        out[0] = y[1];
        out[1] = potential_u_du(y[0], &m, &params)?;
        Ok(())
    };
    integrate_path(rhs, t_path, &[u0, v0], tol)
}

/// Elliptic N-body flow of H = Σv²/2 + ν²Σ_{i<j}℘(u_i-u_j):
/// u̇_i = v_i, v̇_i = -ν² Σ_{j≠i} ℘'(u_i - u_j). States are recorded as
/// [u_1..u_N, v_1..v_N].
pub fn calogero_flow(state0: &CalogeroState, t_path: &PathSpec, tol: f64) -> Result<Trajectory> {
    let n = state0.len();
    let m = state0.modulus;
    let nu2 = state0.nu * state0.nu;
    let mut y0 = state0.u.clone();
    y0.extend_from_slice(&state0.v);

    let rhs = move |t: C64, y: &[C64], out: &mut [C64]| -> Result<()> {
        let (u, v) = y.split_at(n);
        for i in 0..n {
            for j in i + 1..n {
                let (red, _, _) = lattice_reduce(u[i] - u[j], m.tau());
                if red.norm() < BODY_COLLISION_GUARD {
                    return Err(CoreError::Collision {
                        a: i,
                        b: j,
                        gap: red.norm(),
                        param: t,
                    });
                }
            }
        }
        out[..n].copy_from_slice(v);
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            if nu2.norm() > 0.0 {
                for j in 0..n {
                    if j == i {
                        continue;
                    }
                    acc -= nu2 * weierstrass_p_prime(u[i] - u[j], &m)?;
                }
            }
            out[n + i] = acc;
        }
        Ok(())
    };
    integrate_path(rhs, t_path, &y0, tol)
}

/// Result of the κ-sweep comparing the level-κ flow against the
/// frozen-modulus flow over rescaled time.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    pub kappas: Vec<f64>,
    /// sup-norm distance between the two u-trajectories, per κ.
    pub distances: Vec<f64>,
    /// Least-squares slope of log distance against log κ; `None` when
    /// fewer than two distances are above rounding (e.g. ν = 0).
    pub fitted_order: Option<f64>,
}

/// For each κ, integrate the family-ν elliptic flow along τ = τ₀ + κ·s,
/// s ∈ [0, horizon], against the autonomous flow at frozen τ₀ over the
/// same rescaled time grid, and fit the convergence order in κ.
pub fn scaling_limit_fit(
    u0: C64,
    v0: C64,
    nu: C64,
    tau0: &EllipticModulus,
    kappas: &[f64],
    horizon: f64,
    tol: f64,
) -> Result<ScalingFit> {
    if kappas.is_empty() {
        return Err(CoreError::InvalidSystem("empty kappa list".into()));
    }
    if kappas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CoreError::InvalidSystem(
            "kappas must be strictly decreasing".into(),
        ));
    }
    if *kappas.last().unwrap() < 1e-3 {
        return Err(CoreError::InvalidSystem(
            "smallest kappa must be at least 1e-3".into(),
        ));
    }
    if !(horizon > 0.0) {
        return Err(CoreError::InvalidSystem("horizon must be positive".into()));
    }
    let params = PviParams::family(nu);
    let samples = 64;
    let t_path = PathSpec::line(C64::new(0.0, 0.0), C64::new(horizon, 0.0), samples)?;
    let reference = citv_flow(u0, v0, tau0, &params, &t_path, tol)?;

    let mut distances = Vec::with_capacity(kappas.len());
    for &kappa in kappas {
        let tau_end = tau0.tau() + C64::new(kappa * horizon, 0.0);
        let tau_path = PathSpec::line(tau0.tau(), tau_end, samples)?;
        let state0 = PhaseState::new(v0, u0, tau0.tau())?;
        let traj = solve_pvi_elliptic(&state0, &tau_path, &params, C64::new(kappa, 0.0), tol)?;
        let mut dist = 0.0f64;
        for (a, b) in traj.states.iter().zip(&reference.states) {
            // Level-κ states are [v, u]; autonomous states are [u, v].
            dist = dist.max((a[1] - b[0]).norm());
        }
        distances.push(dist);
    }

    let pairs: Vec<(f64, f64)> = kappas
        .iter()
        .zip(&distances)
        .filter(|(_, d)| **d > 1e-14)
        .map(|(k, d)| (k.ln(), d.ln()))
        .collect();
    let fitted_order = if pairs.len() >= 2 {
        let n = pairs.len() as f64;
        let sx: f64 = pairs.iter().map(|p| p.0).sum();
        let sy: f64 = pairs.iter().map(|p| p.1).sum();
        let sxx: f64 = pairs.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pairs.iter().map(|p| p.0 * p.1).sum();
        Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
    } else {
        None
    };

    Ok(ScalingFit {
        kappas: kappas.to_vec(),
        distances,
        fitted_order,
    })
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
    fn state_validation() {
        let m = tau_i();
        assert!(CalogeroState::new(vec![], vec![], m, c(1.0, 0.0)).is_err());
        assert!(
            CalogeroState::new(vec![c(0.1, 0.0)], vec![c(0.0, 0.0), c(0.0, 0.0)], m, c(1.0, 0.0))
                .is_err()
        );
        // Lattice-coincident bodies: u₂ = u₁ + 1.
        assert!(CalogeroState::new(
            vec![c(0.1, 0.0), c(1.1, 0.0)],
            vec![c(0.0, 0.0), c(0.0, 0.0)],
            m,
            c(1.0, 0.0)
        )
        .is_err());
    }

    #[test]
    fn free_motion_both_flows() {
        let m = tau_i();
        let params = PviParams::family(c(0.0, 0.0));
        let path = PathSpec::line(c(0.0, 0.0), c(1.0, 0.0), 8).unwrap();
        let traj = citv_flow(c(0.3, 0.1), c(0.2, 0.0), &m, &params, &path, 1e-12).unwrap();
        for (t, st) in traj.params.iter().zip(&traj.states) {
            assert!((st[0] - (c(0.3, 0.1) + c(0.2, 0.0) * t)).norm() < 1e-11);
        }

        let state = CalogeroState::new(
            vec![c(0.1, 0.0), c(0.4, 0.0), c(0.7, 0.0)],
            vec![c(0.05, 0.0), c(0.0, 0.0), c(-0.05, 0.0)],
            m,
            c(0.0, 0.0),
        )
        .unwrap();
        let traj = calogero_flow(&state, &path, 1e-12).unwrap();
        for (t, st) in traj.params.iter().zip(&traj.states) {
            for i in 0..3 {
                let expect = state.u[i] + state.v[i] * t;
                assert!((st[i] - expect).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn citv_time_reversal() {
        let m = tau_i();
        let params = PviParams::family(c(1.0, 0.0));
        let path = PathSpec::line(c(0.0, 0.0), c(0.8, 0.0), 16).unwrap();
        let fwd = citv_flow(c(0.31, 0.12), c(0.15, -0.04), &m, &params, &path, 1e-12).unwrap();
        let end = fwd.endpoint().to_vec();
        // Reverse momentum at the endpoint and integrate the same time span.
        let back = citv_flow(end[0], -end[1], &m, &params, &path, 1e-12).unwrap();
        assert!((back.endpoint()[0] - c(0.31, 0.12)).norm() < 1e-9);
        assert!((back.endpoint()[1] + c(0.15, -0.04)).norm() < 1e-9);
    }

    #[test]
    fn body_collision_guard() {
        let m = tau_i();
        // Head-on free collision course (ν = 0 keeps it exactly linear).
        let state = CalogeroState::new(
            vec![c(0.0, 0.0), c(0.5, 0.0)],
            vec![c(0.5, 0.0), c(-0.5, 0.0)],
            m,
            c(0.0, 0.0),
        )
        .unwrap();
        let path = PathSpec::line(c(0.0, 0.0), c(1.0, 0.0), 8).unwrap();
        assert!(matches!(
            calogero_flow(&state, &path, 1e-10),
            Err(CoreError::Collision { .. })
        ));
    }

    #[test]
    fn kappa_list_validation() {
        let m = tau_i();
        let err = scaling_limit_fit(
            c(0.3, 0.0),
            c(0.1, 0.0),
            c(1.0, 0.0),
            &m,
            &[0.1, 0.2],
            1.0,
            1e-10,
        );
        assert!(err.is_err());
        let err = scaling_limit_fit(
            c(0.3, 0.0),
            c(0.1, 0.0),
            c(1.0, 0.0),
            &m,
            &[0.1, 1e-4],
            1.0,
            1e-10,
        );
        assert!(err.is_err());
    }

    #[test]
    fn nu_zero_sweep_gives_zero_distances() {
        let m = tau_i();
        let fit = scaling_limit_fit(
            c(0.3, 0.1),
            c(0.12, 0.0),
            c(0.0, 0.0),
            &m,
            &[0.2, 0.1],
            1.0,
            1e-11,
        )
        .unwrap();
        for d in &fit.distances {
            assert!(*d < 1e-12, "distance {d:.3e}");
        }
        assert!(fit.fitted_order.is_none());
    }
}
