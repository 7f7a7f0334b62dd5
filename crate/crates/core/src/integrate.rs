//! Adaptive ODE integration along piecewise-linear paths in a complex
//! parameter plane, plus Hamiltonian flows and numeric monodromy of linear
//! systems (κ∂ + L)Ψ = 0.
//!
//! The stepper is an embedded Dormand–Prince 5(4) pair with PI step control,
//! driven in the real arc-length variable of each path segment. Dense output
//! is produced by clamping steps to the requested sample offsets, so results
//! are bit-deterministic for fixed inputs and tolerance.

use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};
use crate::linalg::{self, CMat};

/// Piecewise-linear path in the complex parameter plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    waypoints: Vec<C64>,
    samples_per_segment: usize,
}

impl PathSpec {
    pub fn new(waypoints: Vec<C64>, samples_per_segment: usize) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(CoreError::InvalidPath("need at least 2 waypoints".into()));
        }
        if samples_per_segment < 2 {
            return Err(CoreError::InvalidPath(
                "need at least 2 samples per segment".into(),
            ));
        }
        for w in waypoints.windows(2) {
            if (w[1] - w[0]).norm() < 1e-14 {
                return Err(CoreError::InvalidPath(format!(
                    "consecutive waypoints coincide at {}",
                    w[0]
                )));
            }
        }
        Ok(Self {
            waypoints,
            samples_per_segment,
        })
    }

    pub fn line(from: C64, to: C64, samples: usize) -> Result<Self> {
        Self::new(vec![from, to], samples)
    }

    /// Closed polygonal loop approximating a circle; suitable for monodromy
    /// since only the homotopy class matters.
    pub fn circle(center: C64, radius: f64, vertices: usize, samples_per_segment: usize) -> Result<Self> {
        if radius <= 0.0 || vertices < 3 {
            return Err(CoreError::InvalidPath(
                "circle needs positive radius and at least 3 vertices".into(),
            ));
        }
        let mut pts: Vec<C64> = (0..vertices)
            .map(|k| {
                let ang = 2.0 * std::f64::consts::PI * (k as f64) / (vertices as f64);
                center + C64::new(radius * ang.cos(), radius * ang.sin())
            })
            .collect();
        pts.push(pts[0]);
        Self::new(pts, samples_per_segment)
    }

    pub fn waypoints(&self) -> &[C64] {
        &self.waypoints
    }

    pub fn samples_per_segment(&self) -> usize {
        self.samples_per_segment
    }

    pub fn start(&self) -> C64 {
        self.waypoints[0]
    }

    pub fn end(&self) -> C64 {
        *self.waypoints.last().unwrap()
    }

    pub fn is_closed(&self) -> bool {
        (self.end() - self.start()).norm() < 1e-12
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Self {
            waypoints: w,
            samples_per_segment: self.samples_per_segment,
        }
    }

    /// Same loop traversed from a different vertex (closed paths only).
    pub fn rotated_basepoint(&self, offset: usize) -> Result<Self> {
        if !self.is_closed() {
            return Err(CoreError::InvalidPath("basepoint rotation needs a closed path".into()));
        }
        let cycle = &self.waypoints[..self.waypoints.len() - 1];
        let n = cycle.len();
        let mut w: Vec<C64> = (0..n).map(|k| cycle[(k + offset) % n]).collect();
        w.push(w[0]);
        Self::new(w, self.samples_per_segment)
    }

    pub fn total_length(&self) -> f64 {
        self.waypoints
            .windows(2)
            .map(|w| (w[1] - w[0]).norm())
            .sum()
    }

    /// Minimum distance from `p` to the path (over all segments).
    pub fn distance_to(&self, p: C64) -> f64 {
        let mut best = f64::INFINITY;
        for w in self.waypoints.windows(2) {
            let a = w[0];
            let d = w[1] - w[0];
            let len2 = d.norm_sqr();
            let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
            best = best.min((p - (a + d * t)).norm());
        }
        best
    }
}

/// Dense output of one integration run.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Complex path parameter at each recorded sample, ordered by arc length.
    pub params: Vec<C64>,
    /// State vector at each sample.
    pub states: Vec<Vec<C64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    pub tol_used: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn endpoint(&self) -> &[C64] {
        self.states.last().expect("trajectory has samples")
    }
}

/// Monodromy of a linear system around a closed loop.
#[derive(Debug, Clone)]
pub struct MonodromyReport {
    pub basepoint: C64,
    pub loop_spec: PathSpec,
    pub monodromy: CMat,
    pub eigenvalues: Vec<C64>,
    pub cond_estimate: f64,
}

impl MonodromyReport {
    pub fn det(&self) -> C64 {
        self.monodromy.determinant()
    }
}

const RK_STAGES: usize = 7;

// Dormand–Prince 5(4) tableau.
const RK_C: [f64; RK_STAGES] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const RK_A: [[f64; 6]; RK_STAGES] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const RK_B5: [f64; RK_STAGES] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const RK_B4: [f64; RK_STAGES] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate dy/ds = rhs(s, y) along the path, s being the complex path
/// parameter; internally driven in real arc length per segment. Records the
/// state at `samples_per_segment` evenly spaced points of every segment
/// (plus the start point). Local error per step is held at `tol`.
pub fn integrate_path<F>(mut rhs: F, path: &PathSpec, y0: &[C64], tol: f64) -> Result<Trajectory>
where
    F: FnMut(C64, &[C64], &mut [C64]) -> Result<()>,
{
    if !(tol > 0.0) {
        return Err(CoreError::InvalidPath("tolerance must be positive".into()));
    }
    let dim = y0.len();
    let mut y = y0.to_vec();
    let mut traj = Trajectory {
        params: vec![path.start()],
        states: vec![y.clone()],
        accepted_steps: 0,
        rejected_steps: 0,
        tol_used: tol,
    };

    let total_len = path.total_length();
    let h_floor = 1e-14 * total_len.max(1.0);
    let mut k = vec![vec![C64::new(0.0, 0.0); dim]; RK_STAGES];
    let mut y_stage = vec![C64::new(0.0, 0.0); dim];
    let mut err_prev: f64 = 1.0;

    for seg in path.waypoints.windows(2) {
        let dir_full = seg[1] - seg[0];
        let seg_len = dir_full.norm();
        let dir = dir_full / seg_len;
        let param_at = |sigma: f64| seg[0] + dir * sigma;
        let sample_step = seg_len / (path.samples_per_segment as f64);

        let mut sigma = 0.0f64;
        let mut h = (seg_len / 16.0).min(sample_step);

        for next_sample in 1..=path.samples_per_segment {
            let target = if next_sample == path.samples_per_segment {
                seg_len
            } else {
                sample_step * next_sample as f64
            };

            while sigma < target - 1e-13 * seg_len {
                let h_try = h.min(target - sigma).max(h_floor.min(target - sigma));

                // Stage evaluations: dy/dσ = dir · rhs(param, y).
                rhs(param_at(sigma), &y, &mut k[0])?;
                for v in k[0].iter_mut() {
                    *v *= dir;
                }
                for stage in 1..RK_STAGES {
                    for i in 0..dim {
                        let mut acc = C64::new(0.0, 0.0);
                        for (j, kj) in k.iter().enumerate().take(stage) {
                            let a = RK_A[stage][j];
                            if a != 0.0 {
                                acc += kj[i] * a;
                            }
                        }
                        y_stage[i] = y[i] + acc * h_try;
                    }
                    rhs(param_at(sigma + RK_C[stage] * h_try), &y_stage, &mut k[stage])?;
                    for v in k[stage].iter_mut() {
                        *v *= dir;
                    }
                }

                // 5th-order solution and embedded error estimate.
                let mut err_sq = 0.0f64;
                for i in 0..dim {
                    let mut y5 = C64::new(0.0, 0.0);
                    let mut y4 = C64::new(0.0, 0.0);
                    for j in 0..RK_STAGES {
                        if RK_B5[j] != 0.0 {
                            y5 += k[j][i] * RK_B5[j];
                        }
                        if RK_B4[j] != 0.0 {
                            y4 += k[j][i] * RK_B4[j];
                        }
                    }
                    let ynew = y[i] + y5 * h_try;
                    let scale = tol * (1.0 + y[i].norm().max(ynew.norm()));
                    let e = (y5 - y4).norm() * h_try / scale;
                    err_sq += e * e;
                    y_stage[i] = ynew;
                }
                let err = {
                    let raw = (err_sq / dim as f64).sqrt();
                    if raw.is_finite() {
                        raw.max(1e-20)
                    } else {
                        f64::INFINITY
                    }
                };

                if err <= 1.0 {
                    sigma += h_try;
                    y.copy_from_slice(&y_stage);
                    traj.accepted_steps += 1;
                    // PI controller (Hairer/Wanner constants for DP5).
                    let fac = 0.9 * err.powf(-0.17) * err_prev.powf(0.04);
                    err_prev = err;
                    h = (h_try * fac.clamp(0.2, 5.0)).min(seg_len);
                } else {
                    traj.rejected_steps += 1;
                    let fac = if err.is_finite() {
                        (0.9 * err.powf(-0.2)).clamp(0.1, 0.5)
                    } else {
                        0.1
                    };
                    h = h_try * fac;
                    if h < h_floor || traj.rejected_steps > 1_000_000 {
                        return Err(CoreError::StepUnderflow {
                            param: param_at(sigma),
                            h,
                        });
                    }
                }
            }

            sigma = target;
            traj.params.push(param_at(sigma));
            traj.states.push(y.clone());
        }
    }

    Ok(traj)
}

/// Fundamental solution of κ∂_w Ψ = -L(w) Ψ transported around a closed
/// loop, Ψ(basepoint) = Id. Eigenvalues are reported sorted by (Re, Im).
pub fn monodromy<F>(connection: F, kappa: C64, loop_spec: &PathSpec, tol: f64) -> Result<MonodromyReport>
where
    F: Fn(C64) -> Result<CMat>,
{
    if kappa.norm() == 0.0 {
        return Err(CoreError::Degenerate("kappa must be nonzero".into()));
    }
    if !loop_spec.is_closed() {
        return Err(CoreError::InvalidPath("monodromy needs a closed loop".into()));
    }
    let probe = connection(loop_spec.start())?;
    let n = probe.nrows();
    let id = linalg::identity(n);
    let y0: Vec<C64> = id.iter().copied().collect(); // column-major

    let rhs = |w: C64, y: &[C64], out: &mut [C64]| -> Result<()> {
        let l = connection(w)?;
        let scale = -(C64::new(1.0, 0.0) / kappa);
        for col in 0..n {
            for row in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for j in 0..n {
                    acc += l[(row, j)] * y[col * n + j];
                }
                out[col * n + row] = acc * scale;
            }
        }
        Ok(())
    };

    let traj = integrate_path(rhs, loop_spec, &y0, tol)?;
    let endpoint = traj.endpoint();
    let m = CMat::from_iterator(n, n, endpoint.iter().copied());
    let eigenvalues = linalg::eigenvalues_sorted(&m)?;
    let cond_estimate = match m.clone().try_inverse() {
        Some(inv) => linalg::frobenius_norm(&m) * linalg::frobenius_norm(&inv),
        None => f64::INFINITY,
    };
    Ok(MonodromyReport {
        basepoint: loop_spec.start(),
        loop_spec: loop_spec.clone(),
        monodromy: m,
        eigenvalues,
        cond_estimate,
    })
}

/// Flow of a Hamiltonian H(s, v, u) at level κ:
/// κ du/ds = ∂H/∂v, κ dv/ds = -∂H/∂u. `grad_h` returns (∂H/∂v, ∂H/∂u).
/// States are recorded as [v, u].
pub fn hamiltonian_flow<F>(
    grad_h: F,
    v0: C64,
    u0: C64,
    path: &PathSpec,
    kappa: C64,
    tol: f64,
) -> Result<Trajectory>
where
    F: Fn(C64, C64, C64) -> Result<(C64, C64)>,
{
    if kappa.norm() == 0.0 {
        return Err(CoreError::Degenerate("kappa must be nonzero".into()));
    }
    let inv_kappa = C64::new(1.0, 0.0) / kappa;
    let rhs = |s: C64, y: &[C64], out: &mut [C64]| -> Result<()> {
        let (hv, hu) = grad_h(s, y[0], y[1])?;
        out[0] = -hu * inv_kappa; // dv/ds
        out[1] = hv * inv_kappa; // du/ds
        Ok(())
    };
    integrate_path(rhs, path, &[v0, u0], tol)
}

/// Finite-difference weights on arbitrary (complex) nodes: `out[k][j]` is
/// the weight of `f(nodes[j])` in the k-th derivative at `z0`, for
/// k = 0..=max_order. Fornberg's recurrence, valid over ℂ since it is pure
/// polynomial interpolation.
pub fn fd_weights(nodes: &[C64], z0: C64, max_order: usize) -> Vec<Vec<C64>> {
    let n = nodes.len();
    assert!(n > max_order, "need more nodes than the derivative order");
    let mut c: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); n]; max_order + 1];
    let mut c1 = C64::new(1.0, 0.0);
    let mut c4 = nodes[0] - z0;
    c[0][0] = C64::new(1.0, 0.0);
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = C64::new(1.0, 0.0);
        let c5 = c4;
        c4 = nodes[i] - z0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (c[k - 1][i - 1] * (k as f64) - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - c[k - 1][j] * (k as f64)) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
