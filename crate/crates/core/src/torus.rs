//! The genus-one isomonodromic system: flat sl(N) bundles over a torus
//! with marked points.
//!
//! Dynamical data: Cartan vectors (v, u) (traceless diagonal, stored as
//! sum-zero N-vectors) and one traceless residue p_a per marked point x_a.
//! The antiholomorphic part of the connection is the constant Cartan
//! matrix `lbar_connection`; the holomorphic part `lax_l_elliptic` is
//! assembled from the Eisenstein function E1 and the kernel φ with a
//! non-holomorphic exponential prefactor that restores double periodicity
//! on the deformed torus.
//!
//! Full dynamics is provided for the one-pole sl2 case
//! (`integrate_torus_flow`, the flow of H_τ = v² - ν²E2(2u|τ));
//! Hamiltonian evaluation works for any sl(N) and any number of poles.

use num_complex::Complex64 as C64;
use std::f64::consts::PI;

use crate::elliptic::{
    eisenstein_e1, eisenstein_e2, lattice_reduce, phi_kernel, theta, theta_derivatives,
    weierstrass_p_prime, EllipticModulus, SeriesTolerance,
};
use crate::error::{CoreError, Result};
use crate::integrate::{integrate_path, PathSpec, Trajectory};
use crate::linalg::{self, CMat};

fn two_pi_i() -> C64 {
    C64::new(0.0, 2.0 * PI)
}

/// Reference and deformed torus moduli plus marked points.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusTimes {
    tau0: C64,
    tau: C64,
    marked: Vec<C64>,
}

impl TorusTimes {
    pub fn new(tau0: C64, tau: C64, marked: Vec<C64>) -> Result<Self> {
        if !(tau0.im > 0.0) || !(tau.im > 0.0) {
            return Err(CoreError::Degenerate(
                "torus moduli need positive imaginary part".into(),
            ));
        }
        for i in 0..marked.len() {
            for j in i + 1..marked.len() {
                let (red, _, _) = lattice_reduce(marked[i] - marked[j], tau0);
                if red.norm() < 1e-9 {
                    return Err(CoreError::InvalidSystem(format!(
                        "marked points {i} and {j} coincide mod the lattice"
                    )));
                }
            }
        }
        Ok(Self { tau0, tau, marked })
    }

    /// Undeformed reference times with the given marked points.
    pub fn reference(tau0: C64, marked: Vec<C64>) -> Result<Self> {
        Self::new(tau0, tau0, marked)
    }

    pub fn tau0(&self) -> C64 {
        self.tau0
    }

    pub fn tau(&self) -> C64 {
        self.tau
    }

    pub fn marked(&self) -> &[C64] {
        &self.marked
    }

    /// ρ = τ₀ - τ̄₀ = 2i Im τ₀.
    pub fn rho(&self) -> C64 {
        C64::new(0.0, 2.0 * self.tau0.im)
    }

    /// Deformation parameter μ̃ = (τ - τ₀)/ρ, a Beltrami-coefficient
    /// magnitude vanishing at the reference structure.
    pub fn mu_tilde(&self) -> C64 {
        (self.tau - self.tau0) / self.rho()
    }

    pub fn with_tau(&self, tau: C64) -> Result<Self> {
        Self::new(self.tau0, tau, self.marked.clone())
    }
}

/// Cartan pair (v, u): sum-zero complex N-vectors (traceless diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct CartanState {
    u: Vec<C64>,
    v: Vec<C64>,
}

impl CartanState {
    pub fn new(v: Vec<C64>, u: Vec<C64>) -> Result<Self> {
        if v.len() != u.len() || v.is_empty() {
            return Err(CoreError::InvalidSystem(
                "Cartan vectors must be nonempty and of equal length".into(),
            ));
        }
        let scale = v
            .iter()
            .chain(&u)
            .map(|c| c.norm())
            .fold(1.0f64, f64::max);
        let su: C64 = u.iter().sum();
        let sv: C64 = v.iter().sum();
        if su.norm() > 1e-9 * scale || sv.norm() > 1e-9 * scale {
            return Err(CoreError::InvalidSystem(
                "Cartan vectors must sum to zero (traceless embedding)".into(),
            ));
        }
        Ok(Self { u, v })
    }

    /// sl2 embedding of scalars: u ↦ (u, -u), v ↦ (v, -v).
    pub fn sl2(v: C64, u: C64) -> Self {
        Self {
            u: vec![u, -u],
            v: vec![v, -v],
        }
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn u(&self) -> &[C64] {
        &self.u
    }

    pub fn v(&self) -> &[C64] {
        &self.v
    }

    /// α(u) = u_i - u_j for the root (i, j).
    pub fn root_value(&self, i: usize, j: usize) -> C64 {
        self.u[i] - self.u[j]
    }
}

/// Traceless residue at a marked point, with Cartan/root accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct OrbitResidue {
    p: CMat,
}

impl OrbitResidue {
    pub fn new(p: CMat) -> Result<Self> {
        if p.nrows() != p.ncols() || p.nrows() < 2 {
            return Err(CoreError::InvalidSystem(
                "orbit residue must be square of dimension at least 2".into(),
            ));
        }
        let scale = linalg::frobenius_norm(&p).max(1.0);
        if linalg::trace(&p).norm() > 1e-10 * scale {
            return Err(CoreError::InvalidSystem(
                "orbit residue must be traceless".into(),
            ));
        }
        Ok(Self { p })
    }

    /// The rank-one sl2 orbit ν[(1,1)ᵀ⊗(1,1) - Id] = [[0, ν], [ν, 0]].
    pub fn rank_one_sl2(nu: C64) -> Self {
        let zero = C64::new(0.0, 0.0);
        Self {
            p: CMat::from_row_slice(2, 2, &[zero, nu, nu, zero]),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.p
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// Diagonal minus its mean (the trace-free Cartan component).
    pub fn cartan_part(&self) -> Vec<C64> {
        let n = self.p.nrows();
        let mean = linalg::trace(&self.p) / (n as f64);
        (0..n).map(|i| self.p[(i, i)] - mean).collect()
    }

    /// Off-diagonal entry for the root (i, j).
    pub fn root_part(&self, i: usize, j: usize) -> C64 {
        assert_ne!(i, j);
        self.p[(i, j)]
    }

    fn scaled_root(&self, i: usize, j: usize, factor: C64) -> OrbitResidue {
        let mut p = self.p.clone();
        p[(i, j)] *= factor;
        OrbitResidue { p }
    }
}

/// ‖Σ_a (p_a)_Cartan‖; zero for a valid system.
pub fn moment_cartan_check(residues: &[OrbitResidue]) -> f64 {
    if residues.is_empty() {
        return 0.0;
    }
    let n = residues[0].dim();
    let mut total = vec![C64::new(0.0, 0.0); n];
    for r in residues {
        for (t, c) in total.iter_mut().zip(r.cartan_part()) {
            *t += c;
        }
    }
    total.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Antiholomorphic Cartan connection 2πi(1-μ̃)/ρ · diag(u).
pub fn lbar_connection(state: &CartanState, times: &TorusTimes) -> CMat {
    let factor = two_pi_i() * (C64::new(1.0, 0.0) - times.mu_tilde()) / times.rho();
    let n = state.dim();
    CMat::from_fn(n, n, |i, j| {
        if i == j {
            factor * state.u[i]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Which conjugated modulus enters the non-holomorphic exponent of the
/// root components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentDenominator {
    /// τ - τ̄₀ (as printed); exactly doubly periodic only at τ = τ₀.
    ReferenceConjugate,
    /// τ - τ̄; exactly doubly periodic at every τ.
    DeformedConjugate,
}

impl ExponentDenominator {
    fn value(&self, times: &TorusTimes) -> C64 {
        match self {
            ExponentDenominator::ReferenceConjugate => times.tau - times.tau0.conj(),
            ExponentDenominator::DeformedConjugate => times.tau - times.tau.conj(),
        }
    }
}

/// Holomorphic Lax connection on the deformed torus. `wbar` is an
/// independent argument; callers on the real-analytic torus pass conj(w).
///
/// Diagonal part: 2πi(v/(1-μ̃) - κu/ρ + Σ_a (p_a)_H E1(w-x_a)).
/// Root part (i,j): 2πi/(1-μ̃) Σ_a (p_a)_{ij}
///   exp(2πi[(w-x_a)-(w̄-x̄_a)]α(u)/denom) φ(α(u), w-x_a).
pub fn lax_l_elliptic(
    w: C64,
    wbar: C64,
    state: &CartanState,
    residues: &[OrbitResidue],
    times: &TorusTimes,
    kappa: C64,
    mode: ExponentDenominator,
) -> Result<CMat> {
    let n = state.dim();
    for r in residues {
        if r.dim() != n {
            return Err(CoreError::InvalidSystem(
                "residue dimension does not match the Cartan state".into(),
            ));
        }
    }
    if residues.len() != times.marked.len() {
        return Err(CoreError::InvalidSystem(
            "one residue per marked point required".into(),
        ));
    }
    let m = EllipticModulus::new(times.tau)?;
    let one = C64::new(1.0, 0.0);
    let inv_one_minus_mu = one / (one - times.mu_tilde());
    let denom = mode.value(times);

    let mut l = linalg::zeros(n);
    // Diagonal part.
    for i in 0..n {
        let mut d = state.v[i] * inv_one_minus_mu - kappa * state.u[i] / times.rho();
        for (x, r) in times.marked.iter().zip(residues) {
            let h = r.cartan_part()[i];
            if h.norm() > 0.0 {
                d += h * eisenstein_e1(w - x, &m)?;
            }
        }
        l[(i, i)] = two_pi_i() * d;
    }
    // Root parts.
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let alpha_u = state.root_value(i, j);
            let mut entry = C64::new(0.0, 0.0);
            for (x, r) in times.marked.iter().zip(residues) {
                let coeff = r.root_part(i, j);
                if coeff.norm() == 0.0 {
                    continue;
                }
                let delta = (w - x) - (wbar - x.conj());
                let expo = (two_pi_i() * delta * alpha_u / denom).exp();
                entry += coeff * expo * phi_kernel(alpha_u, w - x, &m)?;
            }
            l[(i, j)] = two_pi_i() * inv_one_minus_mu * entry;
        }
    }
    Ok(l)
}

/// Independent transcription of the one-pole sl2 Lax matrix (marked point
/// at 0, rank-one orbit of weight ν):
///
/// ```text
/// L = 2πi [ v/(1-μ̃) - κu/ρ            x(u,w,w̄) ]
///         [ x(-u,w,w̄)      -v/(1-μ̃) + κu/ρ ],
/// x(u,w,w̄) = ν/(1-μ̃) · exp(4πi(w-w̄)u(1-μ̃)/ρ) · φ(2u, w).
/// ```
pub fn sl2_one_pole_lax(
    w: C64,
    wbar: C64,
    v: C64,
    u: C64,
    nu: C64,
    times: &TorusTimes,
    kappa: C64,
) -> Result<CMat> {
    let m = EllipticModulus::new(times.tau)?;
    let one = C64::new(1.0, 0.0);
    let mu = times.mu_tilde();
    let rho = times.rho();
    let d = v / (one - mu) - kappa * u / rho;
    let x = |uu: C64| -> Result<C64> {
        let expo = (C64::new(0.0, 4.0 * PI) * (w - wbar) * uu * (one - mu) / rho).exp();
        Ok(nu / (one - mu) * expo * phi_kernel(uu * 2.0, w, &m)?)
    };
    let xu = x(u)?;
    let xmu = x(-u)?;
    Ok(CMat::from_row_slice(
        2,
        2,
        &[
            two_pi_i() * d,
            two_pi_i() * xu,
            two_pi_i() * xmu,
            -two_pi_i() * d,
        ],
    ))
}

/// The three Hamiltonian families of the genus-one system.
#[derive(Debug, Clone)]
pub struct TorusHamiltonians {
    /// Casimirs H_{2,a} = ⟨p_a,p_a⟩/2.
    pub h2: Vec<C64>,
    /// Position Hamiltonians H_{1,a}.
    pub h1: Vec<C64>,
    /// Modulus Hamiltonian H_τ.
    pub h_tau: C64,
}

/// Evaluate the Hamiltonians. The braced root/Cartan sums enter H_τ with a
/// uniform -1/2 prefactor, which reproduces H_τ = v² - ν²E2(2u) for the
/// one-pole sl2 rank-one orbit (the ½·tr L² normalization).
pub fn hamiltonians(
    state: &CartanState,
    residues: &[OrbitResidue],
    times: &TorusTimes,
    kappa: C64,
) -> Result<TorusHamiltonians> {
    let n = state.dim();
    let n_poles = residues.len();
    if n_poles != times.marked.len() {
        return Err(CoreError::InvalidSystem(
            "one residue per marked point required".into(),
        ));
    }
    let m = EllipticModulus::new(times.tau)?;
    let tol = SeriesTolerance::default();
    let one = C64::new(1.0, 0.0);
    let inv_one_minus_mu = one / (one - times.mu_tilde());
    let theta_prime0 = theta_derivatives(C64::new(0.0, 0.0), &m, 1)?;

    // θ(-α(u)+x_a-x_b)θ'(0) / (θ(α(u))θ(x_a-x_b))
    let theta_ratio = |alpha_u: C64, xab: C64| -> Result<C64> {
        Ok(theta(-alpha_u + xab, &m, tol)? * theta_prime0
            / (theta(alpha_u, &m, tol)? * theta(xab, &m, tol)?))
    };

    let cartans: Vec<Vec<C64>> = residues.iter().map(|r| r.cartan_part()).collect();
    let h2: Vec<C64> = residues
        .iter()
        .map(|r| linalg::trace_form(&r.p, &r.p) * 0.5)
        .collect();

    let mut h1 = Vec::with_capacity(n_poles);
    for a in 0..n_poles {
        // 2(v/(1-μ̃) - κu/ρ, (p_a)_H)
        let mut h = C64::new(0.0, 0.0);
        for i in 0..n {
            h += (state.v[i] * inv_one_minus_mu - kappa * state.u[i] / times.rho())
                * cartans[a][i]
                * 2.0;
        }
        for b in 0..n_poles {
            if b == a {
                continue;
            }
            let xab = times.marked[a] - times.marked[b];
            let mut cart_pair = C64::new(0.0, 0.0);
            for i in 0..n {
                cart_pair += cartans[a][i] * cartans[b][i];
            }
            h += cart_pair * eisenstein_e1(xab, &m)?;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let pa = residues[a].root_part(i, j);
                    let pb = residues[b].root_part(j, i);
                    if (pa * pb).norm() == 0.0 {
                        continue;
                    }
                    h += pa * pb * theta_ratio(state.root_value(i, j), xab)?;
                }
            }
        }
        h1.push(h);
    }

    // H_τ = (v,v)/2 - ½[Σ_a Σ_α (p_a)_α(p_a)_{-α} E2(α(u))
    //        + Σ_{a≠b}((p_a)_H,(p_b)_H)(E2(x_ab) - E1²(x_ab))
    //        + Σ_{a≠b}Σ_α (p_a)_α(p_b)_{-α}·ratio·(E1(α(u))
    //            - E1(x_b-x_a+α(u)) - E1(x_b-x_a))].
    let mut h_tau: C64 = state.v.iter().map(|vi| vi * vi).sum::<C64>() * 0.5;
    let mut brace = C64::new(0.0, 0.0);
    for (a, ra) in residues.iter().enumerate() {
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pp = ra.root_part(i, j) * ra.root_part(j, i);
                if pp.norm() == 0.0 {
                    continue;
                }
                brace += pp * eisenstein_e2(state.root_value(i, j), &m)?;
            }
        }
        for b in 0..n_poles {
            if b == a {
                continue;
            }
            let xab = times.marked[a] - times.marked[b];
            let e1ab = eisenstein_e1(xab, &m)?;
            let mut cart_pair = C64::new(0.0, 0.0);
            for i in 0..n {
                cart_pair += cartans[a][i] * cartans[b][i];
            }
            brace += cart_pair * (eisenstein_e2(xab, &m)? - e1ab * e1ab);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let pa = residues[a].root_part(i, j);
                    let pb = residues[b].root_part(j, i);
                    if (pa * pb).norm() == 0.0 {
                        continue;
                    }
                    let alpha_u = state.root_value(i, j);
                    let xba = -xab;
                    let factor = eisenstein_e1(alpha_u, &m)?
                        - eisenstein_e1(xba + alpha_u, &m)?
                        - eisenstein_e1(xba, &m)?;
                    brace += pa * pb * theta_ratio(alpha_u, xab)? * factor;
                }
            }
        }
    }
    h_tau -= brace * 0.5;

    Ok(TorusHamiltonians { h2, h1, h_tau })
}

/// Right-hand side of the one-pole sl2 flow:
/// d²u/dτ² = (2ν²/κ²) ∂_u E2(2u|τ) = (4ν²/κ²) ℘'(2u|τ).
pub fn torus_acceleration(u: C64, m: &EllipticModulus, nu: C64, kappa: C64) -> Result<C64> {
    if kappa.norm() == 0.0 {
        return Err(CoreError::Degenerate("kappa must be nonzero".into()));
    }
    if nu.norm() == 0.0 {
        return Ok(C64::new(0.0, 0.0));
    }
    Ok(nu * nu * 4.0 / (kappa * kappa) * weierstrass_p_prime(u * 2.0, m)?)
}

/// One-pole sl2 flow d²u/dτ² = (2ν²/κ²) ∂_u E2(2u|τ), integrated as the
/// first-order system in (u, u'). States are recorded as [u, u'].
pub fn integrate_torus_flow(
    u0: C64,
    du0: C64,
    nu: C64,
    tau_path: &PathSpec,
    kappa: C64,
    tol: f64,
) -> Result<Trajectory> {
    if tau_path.waypoints().iter().any(|w| w.im <= 0.0) {
        return Err(CoreError::InvalidPath(
            "tau path must stay in the upper half plane".into(),
        ));
    }
    if kappa.norm() == 0.0 {
        return Err(CoreError::Degenerate("kappa must be nonzero".into()));
    }
    let coupling = nu * nu * 4.0 / (kappa * kappa);
    let rhs = move |tau: C64, y: &[C64], out: &mut [C64]| -> Result<()> {
        out[0] = y[1];
        out[1] = if coupling.norm() == 0.0 {
            C64::new(0.0, 0.0)
        } else {
            let m = EllipticModulus::new(tau)?;
            // ∂_u E2(2u) = 2℘'(2u).
            coupling * weierstrass_p_prime(y[0] * 2.0, &m)?
        };
        Ok(())
    };
    integrate_path(rhs, tau_path, &[u0, du0], tol)
}

/// Lattice action u → u + m - nτ, v → v - κn, with the printed phase
/// factor on root components. `m`/`n` are sum-zero integer vectors (the
/// sl(N) root-lattice embedding).
pub fn lattice_action(
    state: &CartanState,
    residues: &[OrbitResidue],
    m_vec: &[i64],
    n_vec: &[i64],
    times: &TorusTimes,
    kappa: C64,
) -> Result<(CartanState, Vec<OrbitResidue>)> {
    let n = state.dim();
    if m_vec.len() != n || n_vec.len() != n {
        return Err(CoreError::InvalidSystem(
            "lattice vectors must match the Cartan dimension".into(),
        ));
    }
    if m_vec.iter().sum::<i64>() != 0 || n_vec.iter().sum::<i64>() != 0 {
        return Err(CoreError::InvalidSystem(
            "lattice vectors must lie in the sum-zero root lattice".into(),
        ));
    }
    let tau = times.tau;
    let u: Vec<C64> = state
        .u
        .iter()
        .zip(m_vec.iter().zip(n_vec))
        .map(|(ui, (&mi, &ni))| ui + C64::new(mi as f64, 0.0) - tau * (ni as f64))
        .collect();
    let v: Vec<C64> = state
        .v
        .iter()
        .zip(n_vec)
        .map(|(vi, &ni)| vi - kappa * (ni as f64))
        .collect();
    let new_state = CartanState { u, v };

    let rho = times.rho();
    let tau0 = times.tau0;
    let mut new_residues = Vec::with_capacity(residues.len());
    for (r, x) in residues.iter().zip(&times.marked) {
        let mut out = r.clone();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let m_alpha = (m_vec[i] - m_vec[j]) as f64;
                let n_alpha = (n_vec[i] - n_vec[j]) as f64;
                // exp{(4πi/ρ)[(m_α - n_α τ̄₀ x_a) - (m_α - n_α τ₀ x̄_a)]}
                let bracket = (C64::new(m_alpha, 0.0) - tau0.conj() * x * n_alpha)
                    - (C64::new(m_alpha, 0.0) - tau0 * x.conj() * n_alpha);
                let phase = (C64::new(0.0, 4.0 * PI) / rho * bracket).exp();
                out = out.scaled_root(i, j, phase);
            }
        }
        new_residues.push(out);
    }
    Ok((new_state, new_residues))
}

/// Modular action for integers (a, b, c, d) with ad - bc = 1:
/// v → v(cτ+d) - κcu, u → u/(cτ+d), τ → (aτ+b)/(cτ+d), x → x/(cτ+d).
pub fn modular_action(
    state: &CartanState,
    times: &TorusTimes,
    mobius: (i64, i64, i64, i64),
    kappa: C64,
) -> Result<(CartanState, TorusTimes)> {
    let (a, b, c, d) = mobius;
    if a * d - b * c != 1 {
        return Err(CoreError::InvalidSystem(
            "modular transformation needs ad - bc = 1".into(),
        ));
    }
    let af = C64::new(a as f64, 0.0);
    let bf = C64::new(b as f64, 0.0);
    let cf = C64::new(c as f64, 0.0);
    let df = C64::new(d as f64, 0.0);
    let j = cf * times.tau + df;
    if j.norm() < 1e-14 {
        return Err(CoreError::Degenerate("cτ + d = 0".into()));
    }
    let v: Vec<C64> = state
        .v
        .iter()
        .zip(&state.u)
        .map(|(vi, ui)| vi * j - kappa * cf * ui)
        .collect();
    let u: Vec<C64> = state.u.iter().map(|ui| ui / j).collect();
    let tau = (af * times.tau + bf) / j;
    let j0 = cf * times.tau0 + df;
    if j0.norm() < 1e-14 {
        return Err(CoreError::Degenerate("cτ₀ + d = 0".into()));
    }
    let tau0 = (af * times.tau0 + bf) / j0;
    let marked = times.marked.iter().map(|x| x / j).collect();
    Ok((CartanState { u, v }, TorusTimes::new(tau0, tau, marked)?))
}
