//! Conservation, zero-curvature, monodromy-invariance, tau and Whitham
//! properties of the pole-system flows.

use isolab_core::integrate::PathSpec;
use isolab_core::linalg::{self, CMat};
use isolab_core::schlesinger::{
    casimir_spectrum, h1_position_derivative_analytic, h1_position_derivative_fd,
    integrate_schlesinger, isomonodromy_check, isomonodromy_check_frozen, lie_poisson_bracket_h1,
    tau_log_increment, whitham_residual, KillingForm, MNormalization, PoleSystem,
    zero_curvature_residual,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn random_3pole(seed: u64, kappa: C64) -> PoleSystem {
    PoleSystem::random_sl2(seed, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.9)], 0.7, kappa).unwrap()
}

fn random_4pole(seed: u64) -> PoleSystem {
    PoleSystem::random_sl2(
        seed,
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.9), c(-0.8, 0.5)],
        0.7,
        c(1.0, 0.0),
    )
    .unwrap()
}

/// Unit-length deformation of the third pole, kept away from the others.
fn unit_deformation() -> PathSpec {
    PathSpec::line(c(0.4, 0.9), c(1.1, 1.6137), 64).unwrap()
}

#[test]
fn lax_and_h1_match_independent_summation() {
    // Re-evaluation oracle: entrywise scalar loops, summed in reverse pole
    // order, independent of the library's matrix arithmetic.
    let sys = random_3pole(3, c(1.0, 0.0));
    let w = c(0.37, 0.61);
    let l = isolab_core::schlesinger::lax_l(w, &sys).unwrap();
    for i in 0..2 {
        for j in 0..2 {
            let mut expect = c(0.0, 0.0);
            for a in (0..sys.len()).rev() {
                expect += sys.residues()[a][(i, j)] / (w - sys.positions()[a]);
            }
            assert!((l[(i, j)] - expect).norm() < 1e-14);
        }
    }

    let a = 1usize;
    let mut expect = c(0.0, 0.0);
    for b in (0..sys.len()).rev() {
        if b == a {
            continue;
        }
        let mut pair = c(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                pair += sys.residues()[a][(i, j)] * sys.residues()[b][(j, i)];
            }
        }
        expect += pair / (sys.positions()[a] - sys.positions()[b]);
    }
    let got = isolab_core::schlesinger::hamiltonian_h1(a, &sys);
    assert!((got - expect).norm() < 1e-14, "{got} vs {expect}");
}

#[test]
fn moment_and_casimirs_conserved_along_flow() {
    let sys = random_3pole(42, c(1.0, 0.0));
    let spec0 = casimir_spectrum(&sys);
    let traj = integrate_schlesinger(&sys, 2, &unit_deformation(), 1e-11).unwrap();
    for k in 0..traj.len() {
        let s = traj.system_at(k);
        assert!(s.moment_norm() < 1e-10, "moment drift {:.3e}", s.moment_norm());
        let spec = casimir_spectrum(&s);
        for (pa, pb) in spec.iter().zip(&spec0) {
            for (x, y) in pa.iter().zip(pb) {
                assert!((x - y).norm() < 1e-9, "Casimir drift {:.3e}", (x - y).norm());
            }
        }
    }
}

#[test]
fn flow_self_convergence() {
    let sys = random_3pole(42, c(1.0, 0.0));
    let a = integrate_schlesinger(&sys, 2, &unit_deformation(), 1e-9).unwrap();
    let b = integrate_schlesinger(&sys, 2, &unit_deformation(), 1e-11).unwrap();
    let ea = a.endpoint_system();
    let eb = b.endpoint_system();
    for (p, q) in ea.residues().iter().zip(eb.residues()) {
        assert!(
            linalg::frobenius_norm(&(p - q)) < 1e-8,
            "self-convergence {:.3e}",
            linalg::frobenius_norm(&(p - q))
        );
    }
}

#[test]
fn zero_curvature_random_system_and_negative_control() {
    let sys = random_3pole(7, c(2.0, 0.0));
    let samples = [c(0.3, 0.35), c(-0.8, 0.4), c(1.9, -0.7), c(0.5, 2.0)];
    let good = zero_curvature_residual(&sys, 2, &samples, MNormalization::LevelScaled).unwrap();
    assert!(good < 1e-10, "level-scaled residual {good:.3e}");
    let bad = zero_curvature_residual(&sys, 2, &samples, MNormalization::Unscaled).unwrap();
    assert!(bad > 0.05, "unscaled control unexpectedly small: {bad:.3e}");
}

fn test_loops() -> Vec<PathSpec> {
    vec![
        PathSpec::circle(c(0.0, 0.0), 0.35, 20, 6).unwrap(),
        PathSpec::circle(c(1.0, 0.0), 0.35, 20, 6).unwrap(),
        // Around both fixed poles; the moving pole stays outside.
        PathSpec::circle(c(0.5, 0.0), 0.8, 24, 6).unwrap(),
    ]
}

#[test]
fn monodromy_preserved_under_deformation() {
    let sys = random_3pole(42, c(1.0, 0.0));
    let rep = isomonodromy_check(&sys, 2, &unit_deformation(), &test_loops(), 1e-11).unwrap();
    assert!(rep.drift < 1e-6, "monodromy drift {:.3e}", rep.drift);
}

#[test]
fn frozen_residue_control_breaks_monodromy_at_four_poles() {
    // Four punctures: the two-pole loop's class is dual to the product of
    // the two complementary local monodromies, which genuinely depends on
    // the configuration, so freezing the residues while a pole moves shows
    // an O(1) spectral drift — and the evolved flow does not.
    let sys = random_4pole(42);
    let loops = vec![PathSpec::circle(c(0.5, 0.0), 0.8, 24, 6).unwrap()];
    let evolved = isomonodromy_check(&sys, 2, &unit_deformation(), &loops, 1e-11).unwrap();
    assert!(evolved.drift < 1e-6, "evolved drift {:.3e}", evolved.drift);
    let frozen =
        isomonodromy_check_frozen(&sys, 2, &unit_deformation(), &loops, 1e-11).unwrap();
    assert!(frozen.drift >= 1e-3, "frozen control drift only {:.3e}", frozen.drift);
}

#[test]
fn three_pole_frozen_control_is_rigid() {
    // With Σp = 0 infinity is regular, so three punctures carry a rigid
    // representation: every loop's trace is a polynomial in the three
    // local traces (Fricke), all frozen with the residues. The frozen
    // control therefore has no power at n = 3; it acquires power at n ≥ 4.
    let sys = random_3pole(42, c(1.0, 0.0));
    let rep =
        isomonodromy_check_frozen(&sys, 2, &unit_deformation(), &test_loops(), 1e-11).unwrap();
    assert!(rep.drift < 1e-5, "rigidity violated: drift {:.3e}", rep.drift);
}

#[test]
fn commuting_system_monodromy_static() {
    let p1 = CMat::from_row_slice(2, 2, &[c(0.4, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-0.4, 0.0)]);
    let sys = PoleSystem::new(
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![p1.clone(), -p1],
        c(1.0, 0.0),
    )
    .unwrap();
    let path = PathSpec::line(c(1.0, 0.0), c(1.4, 0.4), 16).unwrap();
    let loops = vec![PathSpec::circle(c(0.0, 0.0), 0.3, 16, 6).unwrap()];
    let rep = isomonodromy_check(&sys, 1, &path, &loops, 1e-11).unwrap();
    assert!(rep.drift < 1e-8, "drift {:.3e}", rep.drift);
}

#[test]
fn loop_pole_guard_trips() {
    let sys = random_3pole(42, c(1.0, 0.0));
    // Loop whose curve passes through the moving pole's end position.
    let loops = vec![PathSpec::circle(c(0.9, 1.6137), 0.2, 16, 6).unwrap()];
    assert!(isomonodromy_check(&sys, 2, &unit_deformation(), &loops, 1e-10).is_err());
}

#[test]
fn tau_increment_closed_form_for_static_solution() {
    // Commuting residues: p constant, so Δlog τ = Σ_{c≠b}⟨p_b,p_c⟩·
    // [log(x_c-x_b)] evaluated at the endpoints.
    let p1 = CMat::from_row_slice(2, 2, &[c(0.3, 0.2), c(0.0, 0.0), c(0.0, 0.0), c(-0.3, -0.2)]);
    let sys = PoleSystem::new(
        vec![c(0.0, 0.0), c(1.0, 0.0)],
        vec![p1.clone(), -p1.clone()],
        c(1.0, 0.0),
    )
    .unwrap();
    let from = c(1.0, 0.0);
    let to = c(1.6, 0.5);
    let path = PathSpec::line(from, to, 256).unwrap();
    let traj = integrate_schlesinger(&sys, 1, &path, 1e-11).unwrap();
    let got = tau_log_increment(&traj);

    let pairing = KillingForm::pair(&sys.residues()[0], &sys.residues()[1]);
    // Both ordered pairs contribute: 2⟨p₀,p₁⟩·[log(x₁-x₀)] between endpoints.
    let expect = pairing * 2.0 * ((to - c(0.0, 0.0)).ln() - (from - c(0.0, 0.0)).ln());
    assert!((got - expect).norm() < 1e-7, "{got} vs {expect}");
}

#[test]
fn tau_increment_antisymmetric_under_reversal_and_zero_for_zero_residues() {
    let sys = random_3pole(99, c(1.0, 0.0));
    let path = PathSpec::line(c(0.4, 0.9), c(0.9, 1.3), 128).unwrap();
    let fwd = integrate_schlesinger(&sys, 2, &path, 1e-11).unwrap();
    let dfwd = tau_log_increment(&fwd);

    let end_sys = fwd.endpoint_system();
    let back = integrate_schlesinger(&end_sys, 2, &path.reversed(), 1e-11).unwrap();
    let dback = tau_log_increment(&back);
    assert!((dfwd + dback).norm() < 1e-7, "not antisymmetric: {dfwd} vs {dback}");

    let zero = CMat::zeros(2, 2);
    let zsys = PoleSystem::new(
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.9)],
        vec![zero.clone(), zero.clone(), zero],
        c(1.0, 0.0),
    )
    .unwrap();
    let ztraj = integrate_schlesinger(&zsys, 2, &path, 1e-11).unwrap();
    assert!(tau_log_increment(&ztraj).norm() < 1e-14);
}

#[test]
fn tau_increment_path_independence() {
    // Two homotopic collision-free paths with common endpoints.
    let sys = random_3pole(4242, c(1.0, 0.0));
    let from = c(0.4, 0.9);
    let to = c(1.0, 1.4);
    let direct = PathSpec::line(from, to, 256).unwrap();
    let dogleg = PathSpec::new(vec![from, c(0.2, 1.4), to], 256).unwrap();
    let t1 = integrate_schlesinger(&sys, 2, &direct, 1e-12).unwrap();
    let t2 = integrate_schlesinger(&sys, 2, &dogleg, 1e-12).unwrap();
    let d1 = tau_log_increment(&t1);
    let d2 = tau_log_increment(&t2);
    assert!((d1 - d2).norm() < 1e-7, "path dependence: {d1} vs {d2}");
}

#[test]
fn whitham_residual_commuting_and_random() {
    // Commuting residues: every term vanishes separately.
    let p1 = CMat::from_row_slice(2, 2, &[c(0.3, 0.1), c(0.0, 0.0), c(0.0, 0.0), c(-0.3, -0.1)]);
    let p2 = p1.clone() * c(0.5, 0.0);
    let p3 = -(p1.clone() + p2.clone());
    let csys = PoleSystem::new(
        vec![c(0.0, 0.0), c(1.0, 0.0), c(0.4, 0.9)],
        vec![p1, p2, p3],
        c(1.0, 0.0),
    )
    .unwrap();
    let r = whitham_residual(&csys, 0, 1, 1e-5).unwrap();
    assert!(lie_poisson_bracket_h1(&csys, 0, 1).norm() < 1e-13);
    assert!(r.norm() < 1e-9, "commuting residual {r}");

    let sys = random_3pole(77, c(1.0, 0.0));
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let r = whitham_residual(&sys, a, b, 1e-5).unwrap();
        assert!(r.norm() < 1e-6, "residual {:.3e} for ({a},{b})", r.norm());
    }
}

#[test]
fn whitham_fd_derivative_is_second_order() {
    // The genuine h² signal lives in each derivative against its analytic
    // value; in the antisymmetric combination the truncation terms cancel
    // identically, leaving only rounding (bounded by C·h² vacuously).
    let sys = random_3pole(77, c(1.0, 0.0));
    let exact = h1_position_derivative_analytic(&sys, 0, 1);
    let e1 = (h1_position_derivative_fd(&sys, 0, 1, 1e-2) - exact).norm();
    let e2 = (h1_position_derivative_fd(&sys, 0, 1, 1e-3) - exact).norm();
    let order = (e1 / e2).log10();
    assert!(
        (1.6..=2.4).contains(&order),
        "FD error order {order:.2} (errors {e1:.3e}, {e2:.3e})"
    );
    // Residual stays under an O(h²) envelope at every step size.
    for h in [1e-2, 1e-3, 1e-4, 1e-5] {
        let r = whitham_residual(&sys, 0, 1, h).unwrap().norm();
        assert!(r <= h * h, "residual {r:.3e} above h² envelope at h = {h:.0e}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn prop_killing_form_ad_invariant(vals in prop::collection::vec(-1.0f64..1.0, 18)) {
        // ⟨[C,A],B⟩ + ⟨A,[C,B]⟩ = 0 on random 2×2 complex matrices.
        let m = |k: usize| {
            CMat::from_row_slice(2, 2, &[
                c(vals[k], vals[k+1]), c(vals[k+2], vals[k+3]),
                c(vals[k+4], vals[k+5]), c(-vals[k], -vals[k+1]),
            ])
        };
        let a = m(0);
        let b = m(6);
        let cc = m(12);
        let lhs = KillingForm::pair(&linalg::commutator(&cc, &a), &b)
            + KillingForm::pair(&a, &linalg::commutator(&cc, &b));
        prop_assert!(lhs.norm() < 1e-12);
    }
}
