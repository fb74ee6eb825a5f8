//! Dense complex linear algebra helpers shared by all modules.
//!
//! Everything here operates on `DMatrix<Complex64>` at desk scale (n ≲ 32),
//! so we favor clarity and numerical robustness over asymptotic speed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

pub fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

/// Hermitian part ‖M − M*‖ is the caller's business; this just computes M*.
pub fn adjoint(m: &CMat) -> CMat {
    m.adjoint()
}

/// Operator (spectral) norm via the largest eigenvalue of M*M.
pub fn op_norm(m: &CMat) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    let g = m.adjoint() * m;
    let eig = g.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |a, &b| a.max(b.max(0.0)))
        .sqrt()
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending with
/// orthonormal eigenvector columns in matching order.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = idx.iter().map(|&j| se.eigenvalues[j]).collect();
    let mut vecs = CMat::zeros(n, n);
    for (col, &j) in idx.iter().enumerate() {
        vecs.set_column(col, &se.eigenvectors.column(j));
    }
    (vals, vecs)
}

/// Group sorted eigenvalues into degeneracy clusters: values within `tol`
/// of the running cluster mean are merged. Returns (mean, member indices).
pub fn cluster_eigenvalues(vals: &[f64], tol: f64) -> Vec<(f64, Vec<usize>)> {
    let mut out: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in vals.iter().enumerate() {
        match out.last_mut() {
            Some((mean, members)) if (v - *mean).abs() <= tol => {
                let k = members.len() as f64;
                *mean = (*mean * k + v) / (k + 1.0);
                members.push(i);
            }
            _ => out.push((v, vec![i])),
        }
    }
    out
}

/// Matrix exponential (scaling-and-squaring with a Padé core, via nalgebra).
pub fn expm(m: &CMat) -> CMat {
    m.exp()
}

/// Orthonormal basis of the column span via QR (columns assumed full rank).
pub fn orthonormalize(cols: &CMat) -> CMat {
    let qr = cols.clone().qr();
    let q = qr.q();
    q.columns(0, cols.ncols()).into_owned()
}

/// Determinant of a square complex matrix.
pub fn det(m: &CMat) -> Complex64 {
    m.clone().lu().determinant()
}

/// Solve M X = B for X, failing on (numerically) singular M.
pub fn solve(m: &CMat, b: &CMat) -> Result<CMat> {
    m.clone()
        .lu()
        .solve(b)
        .ok_or_else(|| Error::Numerical("singular linear system".into()))
}

/// Eigenphases of a unitary matrix, in (−π, π].
///
/// Writes U = C + iS with commuting Hermitian C, S, diagonalizes C, then
/// refines inside each degenerate C-eigenspace by diagonalizing the
/// compression of S. The phase of each joint eigenvector v is
/// atan2(⟨v,Sv⟩, ⟨v,Cv⟩), which is exact for normal U.
pub fn unitary_eigenphases(u: &CMat) -> Vec<f64> {
    let n = u.nrows();
    if n == 0 {
        return Vec::new();
    }
    let c_part = (u + u.adjoint()).scale(0.5);
    let s_part = (u - u.adjoint()).scale(0.5) * Complex64::new(0.0, -1.0);
    let (cvals, cvecs) = hermitian_eigen(&c_part);
    let clusters = cluster_eigenvalues(&cvals, 1e-9);
    let mut phases = Vec::with_capacity(n);
    for (_, members) in clusters {
        let k = members.len();
        let mut basis = CMat::zeros(n, k);
        for (j, &m) in members.iter().enumerate() {
            basis.set_column(j, &cvecs.column(m));
        }
        let s_block = basis.adjoint() * &s_part * &basis;
        let (_, svecs) = hermitian_eigen(&s_block);
        let joint = &basis * svecs;
        for j in 0..k {
            let v = joint.column(j).into_owned();
            let cij = (v.adjoint() * &c_part * &v)[(0, 0)].re;
            let sij = (v.adjoint() * &s_part * &v)[(0, 0)].re;
            phases.push(sij.atan2(cij));
        }
    }
    phases.sort_by(f64::total_cmp);
    phases
}

/// Deterministic orthonormal basis of a subspace given by a (possibly
/// redundant) spanning projector: Gram–Schmidt over the projected standard
/// basis in coordinate order, with the pivot entry phase-fixed positive real.
pub fn canonical_basis_of_range(p: &CMat, dim: usize) -> CMat {
    let n = p.nrows();
    let mut cols: Vec<CVec> = Vec::new();
    for j in 0..n {
        if cols.len() == dim {
            break;
        }
        let mut v: CVec = p.column(j).into_owned();
        for b in &cols {
            let coef = b.dotc(&v);
            v -= b * coef;
        }
        let nrm = v.norm();
        if nrm > 1e-8 {
            v /= c(nrm);
            phase_fix(&mut v);
            cols.push(v);
        }
    }
    let mut out = CMat::zeros(n, cols.len());
    for (j, v) in cols.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Rotate a vector's global phase so its largest-magnitude entry is real
/// and positive (ties broken by lowest index). Determinism across runs.
pub fn phase_fix(v: &mut CVec) {
    let mut best = 0usize;
    let mut best_abs = 0.0f64;
    for (i, z) in v.iter().enumerate() {
        let a = z.norm();
        if a > best_abs + 1e-15 {
            best_abs = a;
            best = i;
        }
    }
    if best_abs > 0.0 {
        let ph = v[best] / c(best_abs);
        let rot = ph.conj();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hermitian_eigen_sorted_and_orthonormal() {
        let i = I;
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c(2.0),
                i,
                c(0.0),
                -i,
                c(3.0),
                c(1.0),
                c(0.0),
                c(1.0),
                c(1.0),
            ],
        );
        let (vals, vecs) = hermitian_eigen(&m);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let vtv = vecs.adjoint() * &vecs;
        assert!(op_norm(&(vtv - identity(3))) < 1e-12);
        let recon = &vecs
            * CMat::from_diagonal(&CVec::from_iterator(3, vals.iter().map(|&v| c(v))))
            * vecs.adjoint();
        assert!(op_norm(&(recon - m)) < 1e-12);
    }

    #[test]
    fn unitary_eigenphases_diag() {
        let u = CMat::from_diagonal(&CVec::from_vec(vec![
            Complex64::from_polar(1.0, 0.7),
            Complex64::from_polar(1.0, -1.3),
        ]));
        let mut ph = unitary_eigenphases(&u);
        ph.sort_by(f64::total_cmp);
        assert_relative_eq!(ph[0], -1.3, epsilon = 1e-12);
        assert_relative_eq!(ph[1], 0.7, epsilon = 1e-12);
    }

    #[test]
    fn unitary_eigenphases_degenerate_cos() {
        // e^{iβ} and e^{-iβ} share the same C-eigenvalue; the S refinement
        // must still split them.
        let b = 0.9f64;
        let rot = CMat::from_row_slice(
            2,
            2,
            &[
                c(b.cos()),
                c(-b.sin()),
                c(b.sin()),
                c(b.cos()),
            ],
        );
        let mut ph = unitary_eigenphases(&rot);
        ph.sort_by(f64::total_cmp);
        assert_relative_eq!(ph[0], -0.9, epsilon = 1e-10);
        assert_relative_eq!(ph[1], 0.9, epsilon = 1e-10);
    }

    #[test]
    fn expm_rotation() {
        let g = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        let e = expm(&g);
        assert_relative_eq!(e[(0, 0)].re, 1.0f64.cos(), epsilon = 1e-13);
        assert_relative_eq!(e[(0, 1)].re, 1.0f64.sin(), epsilon = 1e-13);
    }
}
