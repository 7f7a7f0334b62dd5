//! Small helpers for dense complex matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{CoreError, Result};

pub type CMat = DMatrix<C64>;

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(m: &CMat) -> C64 {
    (0..m.nrows()).map(|i| m[(i, i)]).sum()
}

/// Trace pairing ⟨A,B⟩ = tr(AB), evaluated without forming the product.
pub fn trace_form(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            s += a[(i, j)] * b[(j, i)];
        }
    }
    s
}

pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigenvalues sorted lexicographically by (Re, Im). Closed form for
/// dimensions 1 and 2, complex Schur iteration otherwise.
pub fn eigenvalues_sorted(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    let mut ev: Vec<C64> = match n {
        0 => Vec::new(),
        1 => vec![m[(0, 0)]],
        2 => {
            let tr = m[(0, 0)] + m[(1, 1)];
            let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
            let disc = (tr * tr - det * 4.0).sqrt();
            vec![(tr + disc) * 0.5, (tr - disc) * 0.5]
        }
        _ => {
            let schur = m
                .clone()
                .try_schur(1e-14, 100_000)
                .ok_or_else(|| CoreError::Eigen("complex Schur iteration did not converge".into()))?;
            schur
                .eigenvalues()
                .ok_or_else(|| CoreError::Eigen("Schur form yielded no eigenvalues".into()))?
                .iter()
                .copied()
                .collect()
        }
    };
    ev.sort_by(|a, b| {
        a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
    });
    Ok(ev)
}

/// Distance between two spectra: minimum over pairings of the maximum
/// eigenvalue displacement. Exact (all permutations) for n ≤ 4, greedy
/// nearest-neighbour matching beyond.
pub fn spectral_distance(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n <= 4 {
        let mut idx: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut idx, 0, &mut |perm| {
            let worst = (0..n)
                .map(|i| (a[i] - b[perm[i]]).norm())
                .fold(0.0f64, f64::max);
            best = best.min(worst);
        });
        best
    } else {
        let mut used = vec![false; n];
        let mut worst = 0.0f64;
        for &x in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, y)| (j, (x - y).norm()))
                .min_by(|p, q| p.1.total_cmp(&q.1))
                .unwrap();
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn permute(idx: &mut Vec<usize>, k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        visit(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, visit);
        idx.swap(k, i);
    }
}
