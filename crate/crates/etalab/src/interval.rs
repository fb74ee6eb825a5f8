//! Exact spectra of D_θ = γ(∂_x + A) on the cut circle via transfer
//! matrices and root finding, plus spectral flow over a parameter grid.
//!
//! Folding convention: the circle of circumference L is cut at x = 0; the
//! second component of the folded function is v(x) := u(L−x) on [0, L/2],
//! so the folded operator is γ̃(∂_x + Ã) with γ̃ = diag(γ,−γ), Ã = diag(A,−A),
//! the deformed boundary condition P̃(θ,T) ũ(0) = 0 acts on ũ(0) = (u(0⁺),
//! u(L⁻)), and the fold matching ũ₁(L/2) = ũ₂(L/2) encodes continuity at the
//! midpoint. At θ = π/4 with the distinguished twist T = −I the boundary
//! condition reduces exactly to periodicity u(0) = u(L).
//!
//! The eigenvalue condition is the nontrivial intersection of two
//! γ̃-Lagrangian subspaces of C^{2n}: the transported boundary space
//! M̃(λ)·ker P̃ and the matching space {(v,v)}. Each Lagrangian is the graph
//! of a unitary H₊ → H₋ between the ±i eigenspaces of γ̃, so the condition
//! becomes det(U(λ) − I) = 0 with U(λ) unitary. The determinant is made
//! real by the normalization R = det(U−I)/√det(−U) with a branch of the
//! square root continued along the scan; R changes sign at simple
//! eigenvalues, which drives the bracketing.

use num_complex::Complex64;
use rayon::prelude::*;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::eta::SpectrumSlice;
use crate::linalg::{c, canonical_basis_of_range, det, expm, identity, op_norm, solve, CMat, I};
use crate::model::{
    double_geometry, kernel_reflection_in_bases, spectral_parts, ApsDeformation,
    BoundaryGeometry, SpectralParts,
};

/// Transfer matrix exp(length·(−A − λγ)) propagating (D − λ)u = 0.
pub fn transfer_matrix(geometry: &BoundaryGeometry, lambda: f64, length: f64) -> Result<CMat> {
    if length < 0.0 {
        return Err(Error::Domain("transfer length must be >= 0".into()));
    }
    let gen = -(&geometry.a) - geometry.gamma.scale(lambda);
    if op_norm(&geometry.a) * length > 700.0 {
        return Err(Error::Range(
            "‖A‖·L too large for the matrix exponential; rescale the model".into(),
        ));
    }
    let m = expm(&gen.scale(length));
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Range(
            "transfer matrix overflowed; rescale the model".into(),
        ));
    }
    Ok(m)
}

/// Canonical bases of K̃± = ker Ã ∩ ker(γ̃ ∓ i) for the doubled geometry,
/// both identified with K⁺ ⊕ K⁻ of the base:
/// K̃⁺ gets [(κ⁺_i, 0), (0, κ⁻_j)], K̃⁻ gets [(0, κ⁺_i), (κ⁻_j, 0)].
/// In these bases the distinguished reflection σ = −τ|ker Ã is the twist
/// T = −I, and det T is the determinant entering the gluing law.
pub fn canonical_twist_bases(base_parts: &SpectralParts, n_base: usize) -> (CMat, CMat) {
    let kp = &base_parts.k_plus_basis;
    let km = &base_parts.k_minus_basis;
    let dk = kp.ncols() + km.ncols();
    let mut bp = CMat::zeros(2 * n_base, dk);
    let mut bm = CMat::zeros(2 * n_base, dk);
    for j in 0..kp.ncols() {
        for r in 0..n_base {
            bp[(r, j)] = kp[(r, j)];
            bm[(n_base + r, j)] = kp[(r, j)];
        }
    }
    for j in 0..km.ncols() {
        for r in 0..n_base {
            bp[(n_base + r, kp.ncols() + j)] = km[(r, j)];
            bm[(r, kp.ncols() + j)] = km[(r, j)];
        }
    }
    (bp, bm)
}

/// The cut-circle model: base geometry, circumference, deformation angle,
/// and the kernel twist T (in the canonical identified bases).
#[derive(Debug, Clone)]
pub struct CutCircleModel {
    pub base: BoundaryGeometry,
    pub deformation: ApsDeformation,
    pub circumference: f64,
    pub theta: f64,
    /// twist matrix on K̃⁺ → K̃⁻ (empty when ker A = 0)
    pub twist: CMat,
    // cached frames for the Lagrangian determinant
    q_bc: CMat,
    e_plus: CMat,
    e_minus: CMat,
    theta_match_adj: CMat,
}

impl CutCircleModel {
    /// Builds the model; `twist` defaults to the distinguished −I.
    pub fn new(
        base: BoundaryGeometry,
        circumference: f64,
        theta: f64,
        twist: Option<CMat>,
    ) -> Result<Self> {
        if circumference <= 0.0 {
            return Err(Error::Domain("circumference must be positive".into()));
        }
        let n = base.dim();
        let doubled = double_geometry(&base)?;
        let base_parts = spectral_parts(&base)?;
        let dk = base_parts.k_plus_basis.ncols() + base_parts.k_minus_basis.ncols();
        let twist = twist.unwrap_or_else(|| -identity(dk));
        let geometry = if dk > 0 {
            let (bp, bm) = canonical_twist_bases(&base_parts, n);
            let sigma = kernel_reflection_in_bases(&bp, &bm, &twist)?;
            BoundaryGeometry::new(
                doubled.a.clone(),
                doubled.gamma.clone(),
                doubled.tau.clone(),
                Some(sigma),
            )?
        } else {
            if twist.nrows() != 0 {
                return Err(Error::Structural(
                    "twist supplied but ker A = 0 (the twist space is empty)".into(),
                ));
            }
            doubled
        };
        let deformation = ApsDeformation::cutting(geometry)?;
        let nn = 2 * n;
        let p_theta = deformation.projection(theta)?;
        let q_bc = canonical_basis_of_range(&(identity(nn) - &p_theta), nn / 2);
        if q_bc.ncols() != nn / 2 {
            return Err(Error::Numerical(
                "boundary condition space has unexpected dimension".into(),
            ));
        }
        let gamma_t = &deformation.geometry.gamma;
        let pi_plus = (identity(nn) - gamma_t * I).scale(0.5);
        let pi_minus = (identity(nn) + gamma_t * I).scale(0.5);
        let e_plus = canonical_basis_of_range(&pi_plus, nn / 2);
        let e_minus = canonical_basis_of_range(&pi_minus, nn / 2);
        // matching Lagrangian {(v, v)/√2} and its graph unitary
        let mut q_match = CMat::zeros(nn, n);
        let s = c(1.0 / 2f64.sqrt());
        for j in 0..n {
            q_match[(j, j)] = s;
            q_match[(n + j, j)] = s;
        }
        let theta_match = graph_unitary(&e_plus, &e_minus, &q_match)?;
        Ok(Self {
            base,
            deformation,
            circumference,
            theta,
            twist,
            q_bc,
            e_plus,
            e_minus,
            theta_match_adj: theta_match.adjoint(),
        })
    }

    pub fn doubled_dim(&self) -> usize {
        self.deformation.dim()
    }

    /// det T in the identified kernel bases (1 when the twist is empty).
    pub fn twist_determinant(&self) -> Complex64 {
        if self.twist.nrows() == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            det(&self.twist)
        }
    }

    /// ind A₊ = dim K⁺ − dim K⁻ of the base geometry.
    pub fn ind_a_plus(&self) -> Result<i32> {
        let parts = spectral_parts(&self.base)?;
        Ok(parts.k_plus_basis.ncols() as i32 - parts.k_minus_basis.ncols() as i32)
    }

    /// The unitary U(λ) = Θ_match* Θ_bc(λ) whose unit eigenvalues mark the
    /// spectrum, plus det(U−I) and det(−U).
    pub(crate) fn determinant_data(&self, lambda: f64) -> Result<(Complex64, Complex64, CMat)> {
        let m = transfer_matrix(
            &self.deformation.geometry,
            lambda,
            self.circumference / 2.0,
        )?;
        let transported = &m * &self.q_bc;
        let q1 = crate::linalg::orthonormalize(&transported);
        let theta1 = graph_unitary(&self.e_plus, &self.e_minus, &q1)?;
        let u = &self.theta_match_adj * theta1;
        let n2 = u.nrows();
        let d = det(&(&u - identity(n2)));
        let p = det(&(-&u));
        Ok((d, p, u))
    }

    /// Real-normalized boundary determinant R(λ) = det(U−I)/√det(−U). The
    /// square-root branch is chosen by continuity against `anchor` (a
    /// previously computed (λ, √det(−U)) pair); without an anchor the
    /// principal branch fixes an arbitrary but deterministic overall sign.
    pub fn boundary_determinant(
        &self,
        lambda: f64,
        anchor: Option<Complex64>,
    ) -> Result<(f64, Complex64)> {
        let (d, p, _) = self.determinant_data(lambda)?;
        let mut root = p.sqrt();
        if let Some(prev) = anchor {
            if (root + prev).norm() < (root - prev).norm() {
                root = -root;
            }
        }
        let ratio = d / root;
        Ok((ratio.re, root))
    }

    /// Multiplicity of a (candidate) eigenvalue: the number of eigenphases
    /// of U(λ) within `phase_tol` of 0.
    pub fn multiplicity_at(&self, lambda: f64, phase_tol: f64) -> Result<u32> {
        let (_, _, u) = self.determinant_data(lambda)?;
        let phases = crate::linalg::unitary_eigenphases(&u);
        Ok(phases.iter().filter(|b| b.abs() < phase_tol).count() as u32)
    }
}

/// Graph unitary Θ(L): H₊ → H₋ of a γ̃-Lagrangian subspace spanned by the
/// orthonormal columns of q: Θ = (E₋*q)(E₊*q)^{-1}.
fn graph_unitary(e_plus: &CMat, e_minus: &CMat, q: &CMat) -> Result<CMat> {
    let x = e_plus.adjoint() * q;
    let y = e_minus.adjoint() * q;
    let xinv = solve(&x, &identity(x.nrows()))?;
    Ok(y * xinv)
}

/// Smallest |eigenphase| of U(λ): the distance of λ to the spectrum in
/// phase units (each eigenphase rotates monotonically with λ).
fn min_phase(u: &CMat) -> f64 {
    crate::linalg::unitary_eigenphases(u)
        .iter()
        .fold(f64::INFINITY, |m, b| m.min(b.abs()))
}

/// All eigenvalues in [λ_min, λ_max].
///
/// Primary detection brackets sign changes of the real-normalized
/// determinant R(λ). Because U(λ)'s eigenphases rotate monotonically, an
/// eigenvalue inside a scan step forces a small eigenphase at an adjacent
/// grid point; such steps get a 32-point sub-scan that catches
/// sign-preserving pairs and double roots through the phase minimum.
/// A winding count of det U over the window cross-checks completeness.
/// Roots are polished to 1e-11 and multiplicities settled by the
/// eigenphase rank test.
pub fn spectrum_in(
    model: &CutCircleModel,
    lambda_min: f64,
    lambda_max: f64,
    refinement: Option<f64>,
) -> Result<SpectrumSlice> {
    if lambda_min >= lambda_max {
        return Err(Error::Domain("need lambda_min < lambda_max".into()));
    }
    let n_base = model.base.dim();
    let l = model.circumference;
    // half the spec'd initial step for branch-tracking headroom
    let step = refinement
        .unwrap_or(PI / (2.0 * l * n_base as f64))
        .min(PI / (4.0 * l * n_base as f64));
    let count = ((lambda_max - lambda_min) / step).ceil() as usize + 1;
    let grid: Vec<f64> = (0..=count)
        .map(|k| lambda_min + (lambda_max - lambda_min) * k as f64 / count as f64)
        .collect();
    // raw determinant data in parallel, deterministic order
    let raw: Vec<(Complex64, Complex64, f64)> = grid
        .par_iter()
        .map(|&lam| {
            let (d, p, u) = model.determinant_data(lam)?;
            Ok((d, p, min_phase(&u)))
        })
        .collect::<Result<Vec<_>>>()?;
    // sequential branch continuation for R and the winding of det U
    let mut r_vals = Vec::with_capacity(raw.len());
    let mut roots = Vec::with_capacity(raw.len());
    let mut deltas = Vec::with_capacity(raw.len());
    let mut prev_root: Option<Complex64> = None;
    for (d, p, _) in &raw {
        let mut root = p.sqrt();
        if let Some(prev) = prev_root {
            if (root + prev).norm() < (root - prev).norm() {
                root = -root;
            }
            // winding increment of det U = (root/prev)², principal branch
            deltas.push(2.0 * (root / prev).arg());
        }
        prev_root = Some(root);
        r_vals.push((d / root).re);
        roots.push(root);
    }
    let phase_tol = 1e-7;
    // primary: sign-change brackets
    let mut bracket_steps: Vec<usize> = Vec::new();
    for k in 0..r_vals.len() - 1 {
        if r_vals[k] * r_vals[k + 1] < 0.0 {
            bracket_steps.push(k);
        }
    }
    // rescue candidates: steps whose endpoint phase distance is within the
    // step's own rotation (monotonicity bound), excluding bracketed steps
    let mut rescue_steps: Vec<usize> = Vec::new();
    for k in 0..grid.len() - 1 {
        if bracket_steps.binary_search(&k).is_ok() {
            continue;
        }
        let g = raw[k].2.min(raw[k + 1].2);
        if g <= 1.1 * deltas[k].abs() + 1e-9 {
            rescue_steps.push(k);
        }
    }
    #[derive(Clone, Copy)]
    enum Candidate {
        SignChange(f64, f64, f64, Complex64),
        PhaseMin(f64, f64),
    }
    // Recursive sub-scan of a segment flagged by phase proximity: find
    // interior sign changes; re-flag sub-segments that keep a small phase
    // without a sign change, down to `depth` levels, then fall back to a
    // phase-minimum polish.
    fn scan_segment(
        model: &CutCircleModel,
        a: f64,
        b: f64,
        anchor: Complex64,
        depth: u32,
        out: &mut Vec<Candidate>,
    ) -> Result<()> {
        let m = 32usize;
        let mut sub: Vec<(f64, f64, f64)> = Vec::with_capacity(m + 1);
        for i in 0..=m {
            let lam = a + (b - a) * i as f64 / m as f64;
            let (d, p, u) = model.determinant_data(lam)?;
            let mut root = p.sqrt();
            if (root + anchor).norm() < (root - anchor).norm() {
                root = -root;
            }
            sub.push((lam, (d / root).re, min_phase(&u)));
        }
        for i in 0..m {
            if sub[i].1 * sub[i + 1].1 < 0.0 {
                out.push(Candidate::SignChange(sub[i].0, sub[i + 1].0, sub[i].1, anchor));
            }
        }
        // phase minima not adjacent to a sign change
        let mut flagged: Vec<usize> = Vec::new();
        for i in 0..=m {
            let left_min = i == 0 || sub[i].2 < sub[i - 1].2;
            let right_min = i == m || sub[i].2 <= sub[i + 1].2;
            if left_min && right_min && sub[i].2 < 0.35 {
                let near_change = (i > 0 && sub[i - 1].1 * sub[i].1 < 0.0)
                    || (i < m && sub[i].1 * sub[i + 1].1 < 0.0);
                if !near_change {
                    flagged.push(i);
                }
            }
        }
        for i in flagged {
            let lo = sub[i.saturating_sub(1)].0;
            let hi = sub[(i + 1).min(m)].0;
            if depth > 0 {
                scan_segment(model, lo, hi, anchor, depth - 1, out)?;
            } else {
                out.push(Candidate::PhaseMin(lo, hi));
            }
        }
        Ok(())
    }
    let mut candidates: Vec<Candidate> = bracket_steps
        .iter()
        .map(|&k| Candidate::SignChange(grid[k], grid[k + 1], r_vals[k], roots[k]))
        .collect();
    let rescued: Vec<Result<Vec<Candidate>>> = rescue_steps
        .par_iter()
        .map(|&k| -> Result<Vec<Candidate>> {
            let mut out = Vec::new();
            scan_segment(model, grid[k], grid[k + 1], roots[k], 2, &mut out)?;
            Ok(out)
        })
        .collect();
    for item in rescued {
        candidates.extend(item?);
    }
    let found: Vec<Result<Vec<(f64, u32)>>> = candidates
        .par_iter()
        .map(|cand| -> Result<Vec<(f64, u32)>> {
            match *cand {
                Candidate::SignChange(mut a, mut b, mut fa, anchor) => {
                    for _ in 0..60 {
                        if b - a < 1e-12 {
                            break;
                        }
                        let mid = 0.5 * (a + b);
                        let (fm, _) = model.boundary_determinant(mid, Some(anchor))?;
                        if fa * fm <= 0.0 {
                            b = mid;
                        } else {
                            a = mid;
                            fa = fm;
                        }
                    }
                    let lam = 0.5 * (a + b);
                    let mult = model.multiplicity_at(lam, phase_tol)?.max(1);
                    Ok(vec![(lam, mult)])
                }
                Candidate::PhaseMin(mut a, mut b) => {
                    // golden-section minimization of the phase distance
                    let gval = |x: f64| -> Result<f64> {
                        let (_, _, u) = model.determinant_data(x)?;
                        Ok(min_phase(&u))
                    };
                    let inv_phi = 0.618_033_988_749_894_9_f64;
                    let mut x1 = b - inv_phi * (b - a);
                    let mut x2 = a + inv_phi * (b - a);
                    let mut f1 = gval(x1)?;
                    let mut f2 = gval(x2)?;
                    for _ in 0..80 {
                        if b - a < 1e-12 {
                            break;
                        }
                        if f1 < f2 {
                            b = x2;
                            x2 = x1;
                            f2 = f1;
                            x1 = b - inv_phi * (b - a);
                            f1 = gval(x1)?;
                        } else {
                            a = x1;
                            x1 = x2;
                            f1 = f2;
                            x2 = a + inv_phi * (b - a);
                            f2 = gval(x2)?;
                        }
                    }
                    let lam = 0.5 * (a + b);
                    let g_star = gval(lam)?;
                    if g_star > 1e-6 {
                        return Ok(vec![]);
                    }
                    let mult = model.multiplicity_at(lam, phase_tol)?;
                    if mult == 0 {
                        Ok(vec![])
                    } else {
                        Ok(vec![(lam, mult)])
                    }
                }
            }
        })
        .collect();
    let mut eig: Vec<(f64, u32)> = Vec::new();
    for item in found {
        eig.extend(item?);
    }
    eig.sort_by(|x, y| x.0.total_cmp(&y.0));
    // dedupe within tolerance, keeping the larger multiplicity (the rank
    // test at the polished point is authoritative)
    let merge_tol = 1e-9 * (1.0 + lambda_max.abs().max(lambda_min.abs()));
    let mut dedup: Vec<(f64, u32)> = Vec::new();
    for (lam, m) in eig {
        match dedup.last_mut() {
            Some((prev, pm)) if (lam - *prev).abs() < merge_tol => {
                *pm = (*pm).max(m);
            }
            _ => dedup.push((lam, m)),
        }
    }
    // completeness: winding count of det U across the window, with the
    // endpoint phase fractions allowed as slack
    let winding: f64 = deltas.iter().sum::<f64>().abs() / (2.0 * PI);
    let total: u32 = dedup.iter().map(|(_, m)| m).sum();
    let slack = 0.75 + model.doubled_dim() as f64 / 2.0;
    let warning = if (total as f64 - winding).abs() > slack {
        Some(format!(
            "count {total} deviates from the winding estimate {winding:.2}; consider refining the scan step"
        ))
    } else {
        None
    };
    let mut slice = SpectrumSlice::new(dedup, lambda_max.abs().max(lambda_min.abs()));
    slice.warning = warning;
    Ok(slice)
}

/// Eigenvalue tracks over a model family plus the signed count of zero
/// crossings.
#[derive(Debug, Clone)]
pub struct SpectralFlow {
    /// curves[i][k] = λ_i at family point k
    pub curves: Vec<Vec<f64>>,
    pub flow: i64,
}

/// Tracks eigenvalues across a family of models (one per grid point) inside
/// a window, by order-preserving matching, and counts signed zero
/// crossings. Errors with a refinement request when the matching is
/// ambiguous (a step moves some eigenvalue by more than half the local gap).
pub fn spectral_flow(models: &[CutCircleModel], window: f64) -> Result<SpectralFlow> {
    if models.len() < 2 {
        return Err(Error::Domain("spectral flow needs at least 2 points".into()));
    }
    let lists: Vec<Vec<f64>> = models
        .iter()
        .map(|m| spectrum_in(m, -window, window, None).map(|s| s.flat()))
        .collect::<Result<Vec<_>>>()?;
    if lists.iter().any(|l| l.is_empty()) {
        return Err(Error::Resolution(
            "window contains no eigenvalues at some grid point".into(),
        ));
    }
    // Match consecutive sorted lists by the index shift that minimizes the
    // mean motion (eigenvalues drift across the window edges, so counts and
    // alignments change by small shifts). Motions above half the typical
    // gap flag an ambiguous matching.
    let mut flow = 0i64;
    let mut offsets = vec![0i64; lists.len()];
    for k in 1..lists.len() {
        let a = &lists[k - 1];
        let b = &lists[k];
        let mut best: Option<(f64, i64)> = None;
        for shift in -3i64..=3 {
            let mut cost = 0.0;
            let mut n_pairs = 0usize;
            for (i, bv) in b.iter().enumerate() {
                let j = i as i64 + shift;
                if j >= 0 && (j as usize) < a.len() {
                    cost += (bv - a[j as usize]).abs();
                    n_pairs += 1;
                }
            }
            if n_pairs * 2 >= b.len().min(a.len()) {
                let mean = cost / n_pairs as f64;
                if best.map_or(true, |(bc, _)| mean < bc) {
                    best = Some((mean, shift));
                }
            }
        }
        let (mean_motion, shift) =
            best.ok_or_else(|| Error::Resolution("no overlap between spectra".into()))?;
        let mut gaps: Vec<f64> = a
            .windows(2)
            .map(|w| w[1] - w[0])
            .filter(|g| *g > 1e-9)
            .collect();
        gaps.sort_by(f64::total_cmp);
        let median_gap = gaps.get(gaps.len() / 2).copied().unwrap_or(1.0);
        if mean_motion > 0.45 * median_gap {
            return Err(Error::Resolution(format!(
                "track ambiguity between grid points {} and {k}: mean step {mean_motion:.3e} \
                 exceeds half the typical gap {:.3e}",
                k - 1,
                0.45 * median_gap
            )));
        }
        // crossings counted through a small dead zone so exact zero modes
        // (polished to ±1e-12) do not flicker between sides
        let ztol = 1e-9;
        for (i, bv) in b.iter().enumerate() {
            let j = i as i64 + shift;
            if j >= 0 && (j as usize) < a.len() {
                let av = a[j as usize];
                flow += (*bv > ztol) as i64 - (av > ztol) as i64;
            }
        }
        offsets[k] = offsets[k - 1] - shift;
    }
    // assemble curves in global index coordinates
    let lo = offsets
        .iter()
        .zip(&lists)
        .map(|(o, _)| *o)
        .min()
        .unwrap_or(0);
    let hi = offsets
        .iter()
        .zip(&lists)
        .map(|(o, l)| o + l.len() as i64)
        .max()
        .unwrap_or(0);
    let mut curves = vec![Vec::new(); (hi - lo).max(0) as usize];
    for (o, list) in offsets.iter().zip(&lists) {
        for (i, &lam) in list.iter().enumerate() {
            let g = (o + i as i64 - lo) as usize;
            curves[g].push(lam);
        }
    }
    Ok(SpectralFlow { curves, flow })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DVector;
    use std::f64::consts::FRAC_PI_4;

    pub(crate) fn aps_base() -> BoundaryGeometry {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let gamma = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        BoundaryGeometry::new(a, gamma, None, None).unwrap()
    }

    pub(crate) fn four_fiber_base() -> BoundaryGeometry {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1.0), c(0.0), c(0.0)]));
        let mut gamma = crate::linalg::zeros(4);
        gamma[(0, 1)] = c(1.0);
        gamma[(1, 0)] = c(-1.0);
        gamma[(2, 3)] = c(1.0);
        gamma[(3, 2)] = c(-1.0);
        BoundaryGeometry::new(a, gamma, None, None).unwrap()
    }

    #[test]
    fn transfer_matrix_properties() {
        let g = aps_base();
        // length 0 → identity
        let m0 = transfer_matrix(&g, 0.7, 0.0).unwrap();
        assert!(op_norm(&(m0 - identity(2))) < 1e-14);
        // |det| = 1 (traceless generator)
        let m = transfer_matrix(&g, 2.3, 1.7).unwrap();
        assert_relative_eq!(det(&m).norm(), 1.0, epsilon = 1e-11);
        // semigroup composition
        let m1 = transfer_matrix(&g, 2.3, 0.6).unwrap();
        let m2 = transfer_matrix(&g, 2.3, 1.1).unwrap();
        assert!(op_norm(&(&m2 * &m1 - &m)) < 1e-12);
        // eigenvalues of the generator are ±i√(λ²−a²) for λ² > a²:
        // the transfer matrix over length ℓ has trace 2cos(ℓ√(λ²−a²))
        let lam: f64 = 2.3;
        let omega = (lam * lam - 1.0).sqrt();
        assert_relative_eq!(m.trace().re, (1.7 * omega).cos() * 2.0, epsilon = 1e-10);
        // γ-unitarity M*γM = γ (Wronskian conservation)
        let wr = m.adjoint() * &g.gamma * &m - &g.gamma;
        assert!(op_norm(&wr) < 1e-11);
    }

    #[test]
    fn periodic_closed_form_spectrum() {
        // θ = π/4, T = −I, A = diag(1,−1), L = 2: λ = ±√(1 + (πk)²)
        let model = CutCircleModel::new(aps_base(), 2.0, FRAC_PI_4, None).unwrap();
        let slice = spectrum_in(&model, -12.0, 12.0, None).unwrap();
        assert!(slice.warning.is_none(), "{:?}", slice.warning);
        let mut expected: Vec<(f64, u32)> = Vec::new();
        for k in 0..4 {
            let lam = (1.0 + (PI * k as f64).powi(2)).sqrt();
            let mult = if k == 0 { 1 } else { 2 };
            if lam <= 12.0 {
                expected.push((lam, mult));
                expected.push((-lam, mult));
            }
        }
        expected.sort_by(|x, y| x.0.total_cmp(&y.0));
        assert_eq!(slice.eigenvalues.len(), expected.len());
        for ((lam, m), (elam, em)) in slice.eigenvalues.iter().zip(&expected) {
            assert_relative_eq!(lam, elam, epsilon = 1e-9);
            assert_eq!(m, em, "multiplicity at {lam}");
        }
    }

    #[test]
    fn aps_spectrum_transcendental_oracle() {
        // θ = 0 APS on the cut: positive eigenvalues are √(1+ω²) with
        // tan(ωL) = −ω, and the spectrum is symmetric.
        let l = 2.0;
        let model = CutCircleModel::new(aps_base(), l, 0.0, None).unwrap();
        let slice = spectrum_in(&model, -10.0, 10.0, None).unwrap();
        // symmetry
        assert!(slice.symmetry_defect() < 1e-9);
        // oracle roots of tan(ωL) = −ω by bisection on (kπ+π/2, kπ+π)/L
        let mut expected = Vec::new();
        for k in 0..6 {
            let mut a = (k as f64 * PI + PI / 2.0) / l + 1e-9;
            let mut b = (k as f64 * PI + PI) / l - 1e-9;
            let f = |w: f64| (w * l).tan() + w;
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if f(a) * f(mid) <= 0.0 {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            let w = 0.5 * (a + b);
            let lam = (1.0 + w * w).sqrt();
            if lam < 10.0 {
                expected.push(lam);
            }
        }
        let positive: Vec<f64> = slice
            .eigenvalues
            .iter()
            .filter(|(l, _)| *l > 0.0)
            .map(|(l, _)| *l)
            .collect();
        assert_eq!(positive.len(), expected.len());
        for (got, want) in positive.iter().zip(&expected) {
            assert_relative_eq!(got, want, epsilon = 1e-9);
        }
        // eigenvalue count in [0, 10] against the Weyl density (L/π)·10
        let weyl = l / PI * 10.0;
        assert!((positive.len() as f64 - weyl).abs() <= 2.0);
    }

    #[test]
    fn determinant_even_under_mu_symmetry() {
        let model = CutCircleModel::new(aps_base(), 2.0, 0.35, None).unwrap();
        for &lam in &[0.4, 1.3, 2.9] {
            let (rp, _) = model.boundary_determinant(lam, None).unwrap();
            let (rm, _) = model.boundary_determinant(-lam, None).unwrap();
            assert!(
                (rp.abs() - rm.abs()).abs() < 1e-9 * rp.abs().max(1.0),
                "|R({lam})| = {} vs |R({})| = {}",
                rp.abs(),
                -lam,
                rm.abs()
            );
        }
    }

    #[test]
    fn grid_halving_stability() {
        let model = CutCircleModel::new(aps_base(), 2.0, 0.25, None).unwrap();
        let s1 = spectrum_in(&model, -6.0, 6.0, None).unwrap();
        let s2 = spectrum_in(&model, -6.0, 6.0, Some(PI / (16.0 * 2.0 * 2.0))).unwrap();
        assert_eq!(s1.eigenvalues.len(), s2.eigenvalues.len());
        for ((a, _), (b, _)) in s1.eigenvalues.iter().zip(&s2.eigenvalues) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn empty_window_between_eigenvalues() {
        let model = CutCircleModel::new(aps_base(), 2.0, FRAC_PI_4, None).unwrap();
        // between 1 and √(1+π²) ≈ 3.297 there is nothing
        let slice = spectrum_in(&model, 1.3, 3.0, None).unwrap();
        assert!(slice.eigenvalues.is_empty());
    }

    #[test]
    fn kernel_twist_lattice_spectrum() {
        // 4-fiber base with 1-dim K±: the kernel block contributes exact
        // lattices λ = (2πk − α)/L and λ = 2πm/L.
        let l = 2.0;
        let alpha = 0.7;
        let dk = 2;
        let mut twist = -identity(dk);
        twist[(0, 0)] = -Complex64::from_polar(1.0, alpha);
        let model = CutCircleModel::new(four_fiber_base(), l, 0.0, Some(twist)).unwrap();
        let slice = spectrum_in(&model, -6.0, 6.0, None).unwrap();
        // expected kernel-lattice members in the window
        let mut expected_kernel = Vec::new();
        let mut k = -3i32;
        while k <= 3 {
            let lam = (2.0 * PI * k as f64 - alpha) / l;
            if lam.abs() < 6.0 {
                expected_kernel.push(lam);
            }
            let lam2 = 2.0 * PI * k as f64 / l;
            if lam2.abs() < 6.0 {
                expected_kernel.push(lam2);
            }
            k += 1;
        }
        for want in expected_kernel {
            let hit = slice
                .eigenvalues
                .iter()
                .any(|(lam, _)| (lam - want).abs() < 1e-8);
            assert!(hit, "kernel eigenvalue {want} missing");
        }
        // the APS (nonkernel) block from the transcendental equation
        let f = |w: f64| (w * l).tan() + w;
        let mut a = PI / 2.0 / l + 1e-9;
        let mut b = PI / l - 1e-9;
        for _ in 0..200 {
            let mid = 0.5 * (a + b);
            if f(a) * f(mid) <= 0.0 {
                b = mid;
            } else {
                a = mid;
            }
        }
        let lam_aps = (1.0 + 0.25 * (a + b) * (a + b)).sqrt();
        assert!(slice
            .eigenvalues
            .iter()
            .any(|(lam, _)| (lam - lam_aps).abs() < 1e-8));
    }

    #[test]
    fn glued_with_distinguished_twist_reduces_to_periodic() {
        // θ = π/4, T = −I on the 4-fiber base: kernel block must be the
        // periodic lattice 2πk/L with multiplicity 2.
        let model = CutCircleModel::new(four_fiber_base(), 2.0, FRAC_PI_4, None).unwrap();
        let slice = spectrum_in(&model, -5.5, 5.5, None).unwrap();
        for k in [-1i32, 0, 1] {
            let want = PI * k as f64;
            let entry = slice
                .eigenvalues
                .iter()
                .find(|(lam, _)| (lam - want).abs() < 1e-8);
            let (_, mult) = entry.expect("periodic kernel eigenvalue missing");
            assert_eq!(*mult, 2, "kernel multiplicity at {want}");
        }
    }

    #[test]
    fn spectral_flow_constant_family_is_zero() {
        let models: Vec<CutCircleModel> = (0..5)
            .map(|_| CutCircleModel::new(aps_base(), 2.0, 0.3, None).unwrap())
            .collect();
        let flow = spectral_flow(&models, 4.0).unwrap();
        assert_eq!(flow.flow, 0);
        for curve in &flow.curves {
            let spread = curve
                .iter()
                .fold((f64::INFINITY, -f64::INFINITY), |(lo, hi), &v| {
                    (lo.min(v), hi.max(v))
                });
            assert!(spread.1 - spread.0 < 1e-9);
        }
    }

    #[test]
    fn spectral_flow_twist_sweep() {
        // twist phase sweep over a full loop moves exactly one eigenvalue
        // through zero
        let l = 2.0;
        let models: Vec<CutCircleModel> = (0..33)
            .map(|k| {
                let alpha = 0.2 + 2.0 * PI * k as f64 / 32.0;
                let mut twist = -identity(2);
                twist[(0, 0)] = -Complex64::from_polar(1.0, alpha);
                CutCircleModel::new(four_fiber_base(), l, 0.0, Some(twist)).unwrap()
            })
            .collect();
        let flow = spectral_flow(&models, 3.5).unwrap();
        assert_eq!(flow.flow.abs(), 1, "flow = {}", flow.flow);
    }
}
