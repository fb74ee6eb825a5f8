//! Finite-dimensional boundary data (A, γ, τ, σ) and the deformation family
//! P(θ), U(θ) of boundary projections.
//!
//! The algebra is fixed by three axioms on the projection family,
//!   γP(θ) = (I − P(θ))γ,    [P(θ), A²] = 0,    P(θ)AP(θ) = a(θ)|A|P(θ),
//! together with conjugation P(θ) = U(θ)P(0)U(θ)* by unitaries U = e^{iT(θ)}
//! whose generators commute with γ and anticommute with A. The cutting
//! family (a(θ) = cos 2θ, τ the swap on a doubled fiber) is built in; other
//! families are supplied by the user and validated numerically.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    c, canonical_basis_of_range, cluster_eigenvalues, expm, hermitian_eigen, identity, op_norm,
    zeros, CMat, CVec, I,
};

/// Boundary data: Hermitian tangential operator A, unitary γ with γ² = −I,
/// optional symmetry τ, optional kernel reflection σ (supported on ker A).
#[derive(Debug, Clone)]
pub struct BoundaryGeometry {
    pub a: CMat,
    pub gamma: CMat,
    pub tau: Option<CMat>,
    pub sigma: Option<CMat>,
}

/// Outcome of one algebraic identity check.
#[derive(Debug, Clone)]
pub struct IdentityCheck {
    pub name: String,
    pub violation: f64,
}

/// Per-identity violations in operator norm; passes iff all stay below the
/// tolerance.
#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub checks: Vec<IdentityCheck>,
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|ch| ch.violation < self.tolerance)
    }

    pub fn worst(&self) -> Option<&IdentityCheck> {
        self.checks
            .iter()
            .max_by(|x, y| x.violation.total_cmp(&y.violation))
    }

    pub fn into_result(self) -> Result<ValidationReport> {
        if self.passed() {
            Ok(self)
        } else {
            let worst = self.worst().unwrap();
            Err(Error::Validation(format!(
                "identity '{}' violated by {:.3e} (tolerance {:.3e})",
                worst.name, worst.violation, self.tolerance
            )))
        }
    }
}

impl BoundaryGeometry {
    pub fn new(a: CMat, gamma: CMat, tau: Option<CMat>, sigma: Option<CMat>) -> Result<Self> {
        let n = a.nrows();
        if n < 2 || n % 2 != 0 {
            return Err(Error::Structural(format!(
                "fiber dimension must be even and >= 2, got {n}"
            )));
        }
        for (m, name) in [(&a, "A"), (&gamma, "gamma")] {
            if m.nrows() != n || m.ncols() != n {
                return Err(Error::Structural(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        for (m, name) in [(&tau, "tau"), (&sigma, "sigma")] {
            if let Some(m) = m {
                if m.nrows() != n || m.ncols() != n {
                    return Err(Error::Structural(format!(
                        "{name} must be {n}x{n}, got {}x{}",
                        m.nrows(),
                        m.ncols()
                    )));
                }
            }
        }
        Ok(Self {
            a,
            gamma,
            tau,
            sigma,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    /// Default validation tolerance: 1e-10 relative to ‖A‖ + 1.
    pub fn default_tolerance(&self) -> f64 {
        1e-10 * (op_norm(&self.a) + 1.0)
    }
}

/// Checks every algebraic identity the boundary data must satisfy and
/// reports the violations in operator norm.
pub fn validate_geometry(g: &BoundaryGeometry) -> ValidationReport {
    validate_geometry_with_tol(g, g.default_tolerance())
}

pub fn validate_geometry_with_tol(g: &BoundaryGeometry, tolerance: f64) -> ValidationReport {
    let n = g.dim();
    let id = identity(n);
    let mut checks = Vec::new();
    fn push_check(checks: &mut Vec<IdentityCheck>, name: &str, m: CMat) {
        checks.push(IdentityCheck {
            name: name.to_string(),
            violation: op_norm(&m),
        });
    }
    push_check(&mut checks, "A Hermitian", &g.a - g.a.adjoint());
    push_check(&mut checks, "gamma unitary", &g.gamma * g.gamma.adjoint() - &id);
    push_check(&mut checks, "gamma^2 = -I", &g.gamma * &g.gamma + &id);
    push_check(&mut checks, "gamma* = -gamma", g.gamma.adjoint() + &g.gamma);
    push_check(&mut checks, "gamma A + A gamma = 0", &g.gamma * &g.a + &g.a * &g.gamma);
    if let Some(tau) = &g.tau {
        push_check(&mut checks, "tau gamma + gamma tau = 0", tau * &g.gamma + &g.gamma * tau);
        push_check(&mut checks, "tau A + A tau = 0", tau * &g.a + &g.a * tau);
        push_check(&mut checks, "tau^2 = I", tau * tau - &id);
        push_check(&mut checks, "tau = tau*", tau - tau.adjoint());
    }
    // spectral symmetry of A about 0 with matching multiplicities
    let (vals, _) = hermitian_eigen(&g.a);
    let sym = vals
        .iter()
        .zip(vals.iter().rev())
        .map(|(lo, hi)| (lo + hi).abs())
        .fold(0.0f64, f64::max);
    checks.push(IdentityCheck {
        name: "spec(A) symmetric about 0".into(),
        violation: sym,
    });
    // dim K+ = dim K- (computed through the spectral parts)
    if let Ok(parts) = spectral_parts(g) {
        let dplus = parts.k_plus_basis.ncols() as f64;
        let dminus = parts.k_minus_basis.ncols() as f64;
        checks.push(IdentityCheck {
            name: "dim K+ = dim K-".into(),
            violation: (dplus - dminus).abs(),
        });
        if let Some(sigma) = &g.sigma {
            let p0 = &parts.p_ker;
            push_check(&mut checks,
                "sigma supported on ker A",
                sigma - p0 * sigma * p0,
            );
            push_check(&mut checks, "sigma Hermitian", sigma - sigma.adjoint());
            push_check(&mut checks, "sigma^2 = I on ker A", sigma * sigma - p0.clone());
            push_check(&mut checks,
                "sigma gamma + gamma sigma = 0 on ker A",
                p0 * (sigma * &g.gamma + &g.gamma * sigma) * p0,
            );
        }
    }
    ValidationReport { checks, tolerance }
}

/// Spectral decomposition of A: the three spectral projections, |A|, sgn A,
/// the sorted eigenpairs, the |A|-degeneracy clusters, and deterministic
/// orthonormal bases of K± = ker A ∩ ker(γ ∓ i).
#[derive(Debug, Clone)]
pub struct SpectralParts {
    pub p_pos: CMat,
    pub p_neg: CMat,
    pub p_ker: CMat,
    pub abs_a: CMat,
    pub sgn_a: CMat,
    /// Eigenpairs of A sorted ascending.
    pub eigenpairs: Vec<(f64, CVec)>,
    /// Clusters of |A|: (μ ≥ 0, dim ker(|A|−μ), orthogonal projection Π_μ).
    /// μ = 0 appears first when ker A ≠ 0.
    pub abs_clusters: Vec<AbsCluster>,
    pub k_plus_basis: CMat,
    pub k_minus_basis: CMat,
    pub merge_tol: f64,
}

#[derive(Debug, Clone)]
pub struct AbsCluster {
    pub mu: f64,
    pub dim: usize,
    pub proj: CMat,
}

/// Eigendecomposition of A with degeneracy merging at 1e-10·‖A‖ and the
/// derived projections. P_{>0} + P_{<0} + P_0 = I by construction.
pub fn spectral_parts(g: &BoundaryGeometry) -> Result<SpectralParts> {
    let n = g.dim();
    let (vals, vecs) = hermitian_eigen(&g.a);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical(
            "eigensolver returned non-finite eigenvalues; check the conditioning of A".into(),
        ));
    }
    let norm_a = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let merge_tol = 1e-10 * norm_a.max(1.0);
    let mut p_pos = zeros(n);
    let mut p_neg = zeros(n);
    let mut p_ker = zeros(n);
    let mut abs_a = zeros(n);
    let mut eigenpairs = Vec::with_capacity(n);
    for j in 0..n {
        let v = vecs.column(j).into_owned();
        let proj = &v * v.adjoint();
        let lam = if vals[j].abs() <= merge_tol { 0.0 } else { vals[j] };
        if lam > 0.0 {
            p_pos += &proj;
        } else if lam < 0.0 {
            p_neg += &proj;
        } else {
            p_ker += &proj;
        }
        abs_a += proj * c(lam.abs());
        eigenpairs.push((vals[j], v));
    }
    let sgn_a = &p_pos - &p_neg;
    // |A| clusters: group |eigenvalues| after signed clustering
    let mut abs_vals: Vec<(f64, usize)> = eigenpairs
        .iter()
        .enumerate()
        .map(|(i, (v, _))| (if v.abs() <= merge_tol { 0.0 } else { v.abs() }, i))
        .collect();
    abs_vals.sort_by(|x, y| x.0.total_cmp(&y.0));
    let flat: Vec<f64> = abs_vals.iter().map(|p| p.0).collect();
    let clusters = cluster_eigenvalues(&flat, merge_tol);
    let abs_clusters: Vec<AbsCluster> = clusters
        .into_iter()
        .map(|(mean, members)| {
            let mut proj = zeros(n);
            for &m in &members {
                let idx = abs_vals[m].1;
                let v = &eigenpairs[idx].1;
                proj += v * v.adjoint();
            }
            AbsCluster {
                mu: if mean <= merge_tol { 0.0 } else { mean },
                dim: members.len(),
                proj,
            }
        })
        .collect();
    // K± bases: diagonalize the Hermitian −iγ compressed to ker A.
    let ker_dim = abs_clusters
        .first()
        .filter(|cl| cl.mu == 0.0)
        .map(|cl| cl.dim)
        .unwrap_or(0);
    let (k_plus_basis, k_minus_basis) = if ker_dim == 0 {
        (CMat::zeros(n, 0), CMat::zeros(n, 0))
    } else {
        let ker_basis = canonical_basis_of_range(&p_ker, ker_dim);
        let mig = ker_basis.adjoint() * (&g.gamma * Complex64::new(0.0, -1.0)) * &ker_basis;
        let (gvals, gvecs) = hermitian_eigen(&mig);
        let mut plus_cols: Vec<CVec> = Vec::new();
        let mut minus_cols: Vec<CVec> = Vec::new();
        for (j, &gv) in gvals.iter().enumerate() {
            let amb = &ker_basis * gvecs.column(j).into_owned();
            if gv > 0.0 {
                plus_cols.push(amb);
            } else {
                minus_cols.push(amb);
            }
        }
        let pack = |cols: Vec<CVec>| {
            let mut m = CMat::zeros(n, cols.len());
            for (j, mut v) in cols.into_iter().enumerate() {
                crate::linalg::phase_fix(&mut v);
                m.set_column(j, &v);
            }
            m
        };
        (pack(plus_cols), pack(minus_cols))
    };
    Ok(SpectralParts {
        p_pos,
        p_neg,
        p_ker,
        abs_a,
        sgn_a,
        eigenpairs,
        abs_clusters,
        k_plus_basis,
        k_minus_basis,
        merge_tol,
    })
}

/// Doubles the boundary data for the cutting construction:
/// Ã = diag(A, −A), γ̃ = diag(γ, −γ), τ = swap ⊗ I.
pub fn double_geometry(g: &BoundaryGeometry) -> Result<BoundaryGeometry> {
    let n = g.dim();
    let mut a2 = zeros(2 * n);
    let mut g2 = zeros(2 * n);
    let mut tau = zeros(2 * n);
    for r in 0..n {
        for cidx in 0..n {
            a2[(r, cidx)] = g.a[(r, cidx)];
            a2[(n + r, n + cidx)] = -g.a[(r, cidx)];
            g2[(r, cidx)] = g.gamma[(r, cidx)];
            g2[(n + r, n + cidx)] = -g.gamma[(r, cidx)];
        }
        tau[(r, n + r)] = c(1.0);
        tau[(n + r, r)] = c(1.0);
    }
    BoundaryGeometry::new(a2, g2, Some(tau), None)
}

/// Builds the kernel reflection σ(T) = [[0, T*], [T, 0]] on ker A from an
/// isometry T: K⁺ → K⁻ given in the geometry's canonical K± bases. Returns
/// the ambient n×n matrix supported on ker A.
pub fn kernel_reflection(g: &BoundaryGeometry, t: &CMat) -> Result<CMat> {
    let parts = spectral_parts(g)?;
    kernel_reflection_in_bases(&parts.k_plus_basis, &parts.k_minus_basis, t)
}

/// Same, but with explicit K± bases (columns orthonormal).
pub fn kernel_reflection_in_bases(bp: &CMat, bm: &CMat, t: &CMat) -> Result<CMat> {
    let dk = bp.ncols();
    if bm.ncols() != dk {
        return Err(Error::Structural(format!(
            "dim K+ = {dk} but dim K- = {}",
            bm.ncols()
        )));
    }
    if dk == 0 {
        // empty reflection
        return Ok(zeros(bp.nrows()));
    }
    if t.nrows() != dk || t.ncols() != dk {
        return Err(Error::Structural(format!(
            "twist must be {dk}x{dk}, got {}x{}",
            t.nrows(),
            t.ncols()
        )));
    }
    let unitarity = op_norm(&(t.adjoint() * t - identity(dk)));
    if unitarity > 1e-8 {
        return Err(Error::Structural(format!(
            "twist is not unitary: ‖T*T − I‖ = {unitarity:.3e}"
        )));
    }
    // σ = B⁻ T B⁺* + B⁺ T* B⁻*
    Ok(bm * t * bp.adjoint() + bp * t.adjoint() * bm.adjoint())
}

/// The θ-family kind.
#[derive(Clone)]
pub enum FamilyKind {
    /// a(θ) = cos 2θ, T(θ) = −i (sgn A) τ θ; requires τ (and σ if ker A ≠ 0).
    Cutting,
    /// User-supplied smooth data; axioms are validated numerically at each
    /// requested θ instead of being trusted.
    Generic {
        a_of_theta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        t_of_theta: Arc<dyn Fn(f64) -> CMat + Send + Sync>,
        t_prime: Option<Arc<dyn Fn(f64) -> CMat + Send + Sync>>,
    },
}

impl std::fmt::Debug for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FamilyKind::Cutting => write!(f, "Cutting"),
            FamilyKind::Generic { .. } => write!(f, "Generic"),
        }
    }
}

/// The deformation family θ ↦ (P(θ), U(θ), a(θ), T(θ)).
#[derive(Debug, Clone)]
pub struct ApsDeformation {
    pub geometry: BoundaryGeometry,
    pub parts: SpectralParts,
    pub kind: FamilyKind,
}

impl ApsDeformation {
    /// Cutting family for a geometry carrying τ; σ must be present whenever
    /// ker A ≠ 0 ("Lagrangian reflection required").
    pub fn cutting(geometry: BoundaryGeometry) -> Result<Self> {
        if geometry.tau.is_none() {
            return Err(Error::Configuration(
                "cutting family requires the symmetry tau".into(),
            ));
        }
        let parts = spectral_parts(&geometry)?;
        let has_kernel = parts.k_plus_basis.ncols() + parts.k_minus_basis.ncols() > 0;
        if has_kernel && geometry.sigma.is_none() {
            return Err(Error::Configuration(
                "Lagrangian reflection required: ker A != 0 but sigma missing".into(),
            ));
        }
        Ok(Self {
            geometry,
            parts,
            kind: FamilyKind::Cutting,
        })
    }

    pub fn generic(
        geometry: BoundaryGeometry,
        a_of_theta: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        t_of_theta: Arc<dyn Fn(f64) -> CMat + Send + Sync>,
        t_prime: Option<Arc<dyn Fn(f64) -> CMat + Send + Sync>>,
    ) -> Result<Self> {
        let parts = spectral_parts(&geometry)?;
        let has_kernel = parts.k_plus_basis.ncols() + parts.k_minus_basis.ncols() > 0;
        if has_kernel && geometry.sigma.is_none() {
            return Err(Error::Configuration(
                "Lagrangian reflection required: ker A != 0 but sigma missing".into(),
            ));
        }
        Ok(Self {
            geometry,
            parts,
            kind: FamilyKind::Generic {
                a_of_theta,
                t_of_theta,
                t_prime,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    /// a(θ).
    pub fn a_of(&self, theta: f64) -> f64 {
        match &self.kind {
            FamilyKind::Cutting => (2.0 * theta).cos(),
            FamilyKind::Generic { a_of_theta, .. } => a_of_theta(theta),
        }
    }

    /// T'(θ): for the cutting family the constant −i (sgn A) τ; for generic
    /// families the supplied derivative or a central difference.
    pub fn t_prime(&self, theta: f64) -> Result<CMat> {
        match &self.kind {
            FamilyKind::Cutting => {
                let tau = self.geometry.tau.as_ref().unwrap();
                Ok(&self.parts.sgn_a * tau * -I)
            }
            FamilyKind::Generic {
                t_of_theta,
                t_prime,
                ..
            } => {
                if let Some(tp) = t_prime {
                    Ok(tp(theta))
                } else {
                    let h = 1e-5;
                    let hi = t_of_theta(theta + h);
                    let lo = t_of_theta(theta - h);
                    Ok((hi - lo) / c(2.0 * h))
                }
            }
        }
    }

    /// The base projection P(0) = P_{>0}(A) + P_σ.
    pub fn p_zero(&self) -> CMat {
        let mut p = self.parts.p_pos.clone();
        if let Some(sigma) = &self.geometry.sigma {
            p += (&self.parts.p_ker + sigma).scale(0.5);
        }
        p
    }

    fn check_theta(&self, theta: f64) -> Result<()> {
        if !(theta.abs() < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Domain(format!(
                "theta must satisfy |theta| < pi/2, got {theta}"
            )));
        }
        Ok(())
    }

    /// P(θ). For the cutting family the closed form
    /// cos²θ P_{>0} + sin²θ P_{<0} − ½ sin 2θ · τ(P_{>0}+P_{<0}) + P_σ;
    /// for generic families U(θ) P(0) U(θ)* with the axioms re-validated.
    pub fn projection(&self, theta: f64) -> Result<CMat> {
        self.check_theta(theta)?;
        let p = match &self.kind {
            FamilyKind::Cutting => {
                let tau = self.geometry.tau.as_ref().unwrap();
                let (s, cth) = theta.sin_cos();
                let nonker = &self.parts.p_pos + &self.parts.p_neg;
                let mut p = self.parts.p_pos.scale(cth * cth)
                    + self.parts.p_neg.scale(s * s)
                    - (tau * &nonker).scale(0.5 * (2.0 * theta).sin());
                if let Some(sigma) = &self.geometry.sigma {
                    p += (&self.parts.p_ker + sigma).scale(0.5);
                }
                p
            }
            FamilyKind::Generic { .. } => {
                let u = self.unitary(theta)?;
                let p = &u * self.p_zero() * u.adjoint();
                self.validate_projection_axioms(theta, &p)?;
                p
            }
        };
        Ok(p)
    }

    /// U(θ). Cutting family: e^{(sgn A) τ θ}, also available in the closed
    /// trigonometric form cos θ (P_{>0}+P_{<0}) + sin θ (sgn A) τ + P_0.
    pub fn unitary(&self, theta: f64) -> Result<CMat> {
        self.check_theta(theta)?;
        match &self.kind {
            FamilyKind::Cutting => {
                let tau = self.geometry.tau.as_ref().unwrap();
                let (s, cth) = theta.sin_cos();
                let nonker = &self.parts.p_pos + &self.parts.p_neg;
                Ok(nonker.scale(cth) + (&self.parts.sgn_a * tau).scale(s) + &self.parts.p_ker)
            }
            FamilyKind::Generic { t_of_theta, .. } => Ok(expm(&(t_of_theta(theta) * I))),
        }
    }

    /// Matrix-exponential form of U(θ) for the cutting family (equals the
    /// closed trigonometric form).
    pub fn unitary_exponential(&self, theta: f64) -> Result<CMat> {
        match &self.kind {
            FamilyKind::Cutting => {
                let tau = self.geometry.tau.as_ref().unwrap();
                Ok(expm(&(&self.parts.sgn_a * tau).scale(theta)))
            }
            FamilyKind::Generic { .. } => self.unitary(theta),
        }
    }

    /// Ã(θ) = −a(θ)|A|(I − P(θ)).
    pub fn deformed_tangential(&self, theta: f64) -> Result<CMat> {
        let p = self.projection(theta)?;
        let n = self.dim();
        let one_minus_p = identity(n) - &p;
        Ok((&self.parts.abs_a * one_minus_p).scale(-self.a_of(theta)))
    }

    /// Numerical verification of the projection axioms at one θ, used for
    /// user-supplied families.
    fn validate_projection_axioms(&self, theta: f64, p: &CMat) -> Result<()> {
        let tol = 1e-8 * (op_norm(&self.geometry.a) + 1.0);
        let n = self.dim();
        let id = identity(n);
        let a = &self.geometry.a;
        let checks = [
            ("P^2 = P", op_norm(&(p * p - p))),
            ("P = P*", op_norm(&(p - p.adjoint()))),
            (
                "gamma P = (I-P) gamma",
                op_norm(&(&self.geometry.gamma * p - (&id - p) * &self.geometry.gamma)),
            ),
            ("[P, A^2] = 0", op_norm(&(p * (a * a) - (a * a) * p))),
            (
                "P A P = a|A|P",
                op_norm(&(p * a * p - (&self.parts.abs_a * p).scale(self.a_of(theta)))),
            ),
        ];
        for (name, viol) in checks {
            if viol > tol {
                return Err(Error::Validation(format!(
                    "family axiom '{name}' violated at theta={theta}: {viol:.3e}"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    pub(crate) fn gamma2() -> CMat {
        CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)])
    }

    pub(crate) fn aps2() -> BoundaryGeometry {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0)]));
        BoundaryGeometry::new(a, gamma2(), None, None).unwrap()
    }

    #[test]
    fn validate_basic_pass_and_fail() {
        let report = validate_geometry(&aps2());
        assert!(report.passed(), "{:?}", report.checks);

        // A = diag(1, 1) breaks the anticommutator
        let bad = BoundaryGeometry::new(
            CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(1.0)])),
            gamma2(),
            None,
            None,
        )
        .unwrap();
        let report = validate_geometry(&bad);
        assert!(!report.passed());
        let worst = report.worst().unwrap();
        assert!(worst.name.contains("gamma A + A gamma") || worst.name.contains("symmetric"));
    }

    #[test]
    fn doubled_geometry_validates() {
        let doubled = double_geometry(&aps2()).unwrap();
        let report = validate_geometry(&doubled);
        assert!(report.passed(), "{:?}", report.checks);
        // Ã = diag(1,-1,-1,1)
        assert_relative_eq!(doubled.a[(0, 0)].re, 1.0);
        assert_relative_eq!(doubled.a[(1, 1)].re, -1.0);
        assert_relative_eq!(doubled.a[(2, 2)].re, -1.0);
        assert_relative_eq!(doubled.a[(3, 3)].re, 1.0);
        // doubled spectrum has doubled multiplicities
        let (vals, _) = hermitian_eigen(&doubled.a);
        assert_relative_eq!(vals[0], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[2], 1.0, epsilon = 1e-12);
        assert_relative_eq!(vals[3], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spectral_parts_resolution_of_identity() {
        let g = four_fiber();
        let parts = spectral_parts(&g).unwrap();
        let sum = &parts.p_pos + &parts.p_neg + &parts.p_ker;
        assert!(op_norm(&(sum - identity(4))) < 1e-12);
        assert!(op_norm(&(&parts.sgn_a - (&parts.p_pos - &parts.p_neg))) < 1e-12);
        // P_0 has rank 2 for A = diag(2,-2,0,0)-style data
        let rank: f64 = parts.p_ker.trace().re;
        assert_relative_eq!(rank, 2.0, epsilon = 1e-10);
        // |A| = A sgn A
        assert!(op_norm(&(&parts.abs_a - &g.a * &parts.sgn_a)) < 1e-12);
    }

    /// 4-dim fiber with A = diag(1,-1,0,0): 1-dimensional K±.
    pub(crate) fn four_fiber() -> BoundaryGeometry {
        let a = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(-1.0), c(0.0), c(0.0)]));
        let mut gamma = zeros(4);
        gamma[(0, 1)] = c(1.0);
        gamma[(1, 0)] = c(-1.0);
        gamma[(2, 3)] = c(1.0);
        gamma[(3, 2)] = c(-1.0);
        BoundaryGeometry::new(a, gamma, None, None).unwrap()
    }

    #[test]
    fn k_bases_dimensions_and_gamma_action() {
        let g = four_fiber();
        let parts = spectral_parts(&g).unwrap();
        assert_eq!(parts.k_plus_basis.ncols(), 1);
        assert_eq!(parts.k_minus_basis.ncols(), 1);
        let v = parts.k_plus_basis.column(0).into_owned();
        let gv = &g.gamma * &v;
        assert!((gv - &v * I).norm() < 1e-12);
    }

    #[test]
    fn kernel_reflection_properties() {
        let g = four_fiber();
        let parts = spectral_parts(&g).unwrap();
        // T = e^{iα} on the 1-dim K+
        let alpha = 0.9f64;
        let t = CMat::from_element(1, 1, Complex64::from_polar(1.0, alpha));
        let sigma = kernel_reflection(&g, &t).unwrap();
        // Hermitian, squares to identity on ker A, anticommutes with gamma there
        assert!(op_norm(&(&sigma - sigma.adjoint())) < 1e-12);
        assert!(op_norm(&(&sigma * &sigma - &parts.p_ker)) < 1e-12);
        let anti = &parts.p_ker * (&sigma * &g.gamma + &g.gamma * &sigma) * &parts.p_ker;
        assert!(op_norm(&anti) < 1e-12);
        // wrong dimensions rejected
        assert!(kernel_reflection(&g, &identity(2)).is_err());
        // non-unitary rejected
        let bad = CMat::from_element(1, 1, c(2.0));
        assert!(kernel_reflection(&g, &bad).is_err());
    }

    fn cut_circle_deformation() -> ApsDeformation {
        let doubled = double_geometry(&aps2()).unwrap();
        ApsDeformation::cutting(doubled).unwrap()
    }

    #[test]
    fn projection_axioms_on_grid() {
        let def = cut_circle_deformation();
        let a_mat = &def.geometry.a;
        let n = def.dim();
        for i in -6..=6 {
            let theta = i as f64 * (PI / 2.0 - 0.05) / 6.0;
            let p = def.projection(theta).unwrap();
            assert!(op_norm(&(&p * &p - &p)) < 1e-12, "P^2 != P at {theta}");
            assert!(op_norm(&(&p - p.adjoint())) < 1e-12);
            assert!(
                op_norm(&(&def.geometry.gamma * &p - (identity(n) - &p) * &def.geometry.gamma))
                    < 1e-12
            );
            assert!(op_norm(&(&p * (a_mat * a_mat) - (a_mat * a_mat) * &p)) < 1e-12);
            let papp = &p * a_mat * &p;
            let rhs = (&def.parts.abs_a * &p).scale(def.a_of(theta));
            assert!(op_norm(&(papp - rhs)) < 1e-12, "PAP != a|A|P at {theta}");
            // rank P = n/2
            assert_relative_eq!(p.trace().re, n as f64 / 2.0, epsilon = 1e-10);
            // conjugation U P(0) U* = P(θ)
            let u = def.unitary(theta).unwrap();
            assert!(op_norm(&(&u * def.p_zero() * u.adjoint() - &p)) < 1e-12);
            // exp form agrees with trig form
            let ue = def.unitary_exponential(theta).unwrap();
            assert!(op_norm(&(ue - u)) < 1e-12);
        }
    }

    #[test]
    fn projection_trace_on_abs_clusters() {
        // tr(P(θ)|_{ker(|A|-λ)}) = c(λ)/2
        let def = cut_circle_deformation();
        let p = def.projection(0.37).unwrap();
        for cl in &def.parts.abs_clusters {
            let tr = (&cl.proj * &p).trace().re;
            assert_relative_eq!(tr, cl.dim as f64 / 2.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn unitary_group_law_cutting() {
        let def = cut_circle_deformation();
        let (t1, t2) = (0.3, 0.4);
        let u1 = def.unitary(t1).unwrap();
        let u2 = def.unitary(t2).unwrap();
        let u12 = def.unitary(t1 + t2).unwrap();
        assert!(op_norm(&(u1 * u2 - u12)) < 1e-12);
    }

    #[test]
    fn transmission_kernel_at_pi_over_4() {
        // ker P(π/4) = {(v, v)}
        let def = cut_circle_deformation();
        let p = def.projection(FRAC_PI_4).unwrap();
        for b in 0..2 {
            let mut v = CVec::zeros(4);
            v[b] = c(1.0);
            v[b + 2] = c(1.0);
            assert!((&p * &v).norm() < 1e-12);
        }
        // and P(π/4)(v, -v) = (v, -v)
        let mut w = CVec::zeros(4);
        w[0] = c(1.0);
        w[2] = c(-1.0);
        assert!((&p * &w - &w).norm() < 1e-12);
    }

    #[test]
    fn deformed_tangential_identity() {
        // Ã(θ) = (I − P)A(I − P) = −a(θ)|A|(I − P)
        let def = cut_circle_deformation();
        for &theta in &[0.0, 0.3, 1.1] {
            let p = def.projection(theta).unwrap();
            let imp = identity(4) - &p;
            let direct = &imp * &def.geometry.a * &imp;
            let closed = def.deformed_tangential(theta).unwrap();
            assert!(op_norm(&(direct - &closed)) < 1e-12);
            // commutes with I − P
            assert!(op_norm(&(&closed * &imp - &imp * &closed)) < 1e-12);
        }
        // a = 0 fiber: Ã ≡ 0 (use θ = π/4 so a(θ) = 0)
        let z = def.deformed_tangential(FRAC_PI_4).unwrap();
        assert!(op_norm(&z) < 1e-12);
    }

    #[test]
    fn cutting_family_requires_sigma_with_kernel() {
        let doubled = double_geometry(&four_fiber()).unwrap();
        // ker Ã ≠ 0 and no σ: configuration error
        let err = ApsDeformation::cutting(doubled).unwrap_err();
        match err {
            Error::Configuration(msg) => assert!(msg.contains("Lagrangian reflection required")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generic_family_axiom_validation() {
        // a generic family equal to the cutting family must pass validation
        let doubled = double_geometry(&aps2()).unwrap();
        let def_cut = ApsDeformation::cutting(doubled.clone()).unwrap();
        let sgn_tau = &def_cut.parts.sgn_a * doubled.tau.as_ref().unwrap();
        let gen = ApsDeformation::generic(
            doubled.clone(),
            Arc::new(|th: f64| (2.0 * th).cos()),
            Arc::new(move |th: f64| (&sgn_tau * -I).scale(th)),
            None,
        )
        .unwrap();
        let p1 = gen.projection(0.4).unwrap();
        let p2 = def_cut.projection(0.4).unwrap();
        assert!(op_norm(&(p1 - p2)) < 1e-10);

        // a family violating PAP = a|A|P must fail
        let bad = ApsDeformation::generic(
            doubled,
            Arc::new(|_| 0.123),
            Arc::new(|th: f64| {
                let mut m = zeros(4);
                m[(0, 0)] = c(th);
                m
            }),
            None,
        )
        .unwrap();
        assert!(bad.projection(0.4).is_err());
    }
}
