//! The explicit operator heat kernel of the deformed model operator on the
//! half-line, and the cutoff heat-trace / eta-density / variation terms
//! built from it.
//!
//! The kernel has three pieces: a free Gaussian, an image term carrying
//! (I − 2P(θ)), and a boundary layer
//!   (πt)^{-1/2} (I−P(θ)) ∫_0^∞ e^{-(x+y+z)²/4t} Ã(θ) e^{Ã(θ)z − tA²} dz,
//! with Ã(θ) = −a(θ)|A|(I−P(θ)). Everything is evaluated per |A|-eigenspace,
//! where the z-integral is a scalar integral with the stable closed form
//! e^{-s²/4t} erfcx((s+2tκ)/(2√t)).

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{c, identity, op_norm, CMat, CVec, I};
use crate::model::{AbsCluster, ApsDeformation};
use crate::quad;
use crate::specfn::{erfc, erfcx, f_a_closed};

/// Smooth cutoff: 1 on [0, r0], exp(1 − 1/(1−s²)) on (r0, r1) with
/// s = (x−r0)/(r1−r0), 0 beyond r1.
#[derive(Debug, Clone, Copy)]
pub struct CutoffBump {
    pub r0: f64,
    pub r1: f64,
}

impl Default for CutoffBump {
    fn default() -> Self {
        Self { r0: 0.25, r1: 0.75 }
    }
}

impl CutoffBump {
    pub fn new(r0: f64, r1: f64) -> Result<Self> {
        if !(0.0 < r0 && r0 < r1 && r1 < 1.0) {
            return Err(Error::Configuration(format!(
                "cutoff must satisfy 0 < r0 < r1 < 1, got ({r0}, {r1})"
            )));
        }
        Ok(Self { r0, r1 })
    }

    pub fn phi(&self, x: f64) -> f64 {
        if x <= self.r0 {
            1.0
        } else if x >= self.r1 {
            0.0
        } else {
            let s = (x - self.r0) / (self.r1 - self.r0);
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        }
    }

    pub fn phi_prime(&self, x: f64) -> f64 {
        if x <= self.r0 || x >= self.r1 {
            0.0
        } else {
            let w = self.r1 - self.r0;
            let s = (x - self.r0) / w;
            let g = 1.0 - s * s;
            (1.0 - 1.0 / g).exp() * (-2.0 * s / (g * g)) / w
        }
    }

    /// ∫_0^∞ φ = r0 + ∫_{r0}^{r1} φ.
    pub fn integral(&self) -> f64 {
        self.r0
            + quad::integrate(|x| self.phi(x), self.r0, self.r1, 1e-14, 1e-13)
                .expect("cutoff integral")
    }
}

/// How the scalar z-integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZMethod {
    /// Stable erfcx closed form (default).
    ClosedForm,
    /// Adaptive Gauss–Kronrod on the majorant-truncated interval.
    Quadrature,
}

/// z-integral rule: method plus tolerance / truncation control.
#[derive(Debug, Clone, Copy)]
pub struct ZQuadrature {
    pub method: ZMethod,
    pub rel_tol: f64,
    /// Truncate where the integrand has fallen by e^{-log_drop} from its peak.
    pub log_drop: f64,
}

impl Default for ZQuadrature {
    fn default() -> Self {
        Self {
            method: ZMethod::ClosedForm,
            rel_tol: 1e-12,
            log_drop: 42.0,
        }
    }
}

/// (πt)^{-1/2} ∫_0^∞ e^{-(s+z)²/4t} e^{-κz} dz · e^{-tμ²}, the scalar factor
/// of the boundary-layer term on the eigenspace ker(|A|−μ), with κ = a·μ.
/// Exponents are combined so the value never overflows.
pub fn z_factor_heat(t: f64, s: f64, kappa: f64, mu: f64, rule: &ZQuadrature) -> Result<f64> {
    match rule.method {
        ZMethod::ClosedForm => Ok(z_factor_heat_closed(t, s, kappa, mu)),
        ZMethod::Quadrature => z_factor_heat_quad(t, s, kappa, mu, rule),
    }
}

pub fn z_factor_heat_closed(t: f64, s: f64, kappa: f64, mu: f64) -> f64 {
    let root_t = t.sqrt();
    let cc = (s + 2.0 * t * kappa) / (2.0 * root_t);
    if cc >= 0.0 {
        // e^{-s²/4t - tμ²} erfcx(c)
        (-s * s / (4.0 * t) - t * mu * mu).exp() * erfcx(cc)
    } else {
        // erfc(c) ∈ (1,2); exponent κs + κ²t − tμ² ≤ 0 whenever |κ| ≤ μ
        (kappa * s + kappa * kappa * t - t * mu * mu).exp() * erfc(cc)
    }
}

fn z_factor_heat_quad(t: f64, s: f64, kappa: f64, mu: f64, rule: &ZQuadrature) -> Result<f64> {
    // integrand exponent g(z) = -(s+z)²/4t - κz - tμ² is exactly quadratic;
    // peak at z* = max(0, -2tκ - s), truncation where g drops by log_drop.
    let z_star = (-2.0 * t * kappa - s).max(0.0);
    let cutoff = z_star + 2.0 * (rule.log_drop * t).sqrt();
    let g = |z: f64| -(s + z) * (s + z) / (4.0 * t) - kappa * z - t * mu * mu;
    let peak = g(z_star);
    if peak < -700.0 {
        return Ok(0.0);
    }
    let v = quad::integrate(|z| (g(z) - peak).exp(), 0.0, cutoff, 1e-15, rule.rel_tol).map_err(
        |e| {
            Error::Numerical(format!(
                "z-integral failed (majorant bound exp({:.3}) at truncation {cutoff:.3}): {e}",
                g(cutoff) - peak
            ))
        },
    )?;
    Ok(peak.exp() * v / (PI * t).sqrt())
}

/// Evaluator of the explicit operator heat kernel at fixed θ.
#[derive(Debug, Clone)]
pub struct SommerfeldKernel {
    pub theta: f64,
    pub a_theta: f64,
    pub p: CMat,
    pub one_minus_p: CMat,
    pub i_minus_2p: CMat,
    pub gamma: CMat,
    pub a_mat: CMat,
    pub a_tilde: CMat,
    pub clusters: Vec<AbsCluster>,
    /// (I−P)Π_μ per cluster, aligned with `clusters`.
    pub imp_proj: Vec<CMat>,
    pub quadrature: ZQuadrature,
}

impl SommerfeldKernel {
    pub fn new(deformation: &ApsDeformation, theta: f64, quadrature: ZQuadrature) -> Result<Self> {
        let p = deformation.projection(theta)?;
        let n = deformation.dim();
        let id = identity(n);
        let one_minus_p = &id - &p;
        let i_minus_2p = &id - p.scale(2.0);
        let clusters = deformation.parts.abs_clusters.clone();
        let imp_proj = clusters.iter().map(|cl| &one_minus_p * &cl.proj).collect();
        Ok(Self {
            theta,
            a_theta: deformation.a_of(theta),
            p,
            one_minus_p,
            i_minus_2p,
            gamma: deformation.geometry.gamma.clone(),
            a_mat: deformation.geometry.a.clone(),
            a_tilde: deformation.deformed_tangential(theta)?,
            clusters,
            imp_proj,
            quadrature,
        })
    }

    pub fn dim(&self) -> usize {
        self.p.nrows()
    }

    /// e^{-tA²} as a matrix.
    fn heat_semigroup(&self, t: f64) -> CMat {
        let mut e = crate::linalg::zeros(self.dim());
        for cl in &self.clusters {
            e += cl.proj.scale((-t * cl.mu * cl.mu).exp());
        }
        e
    }

    /// Kernel value K_t(x, y), an n×n matrix.
    pub fn kernel_at(&self, t: f64, x: f64, y: f64) -> Result<CMat> {
        if t <= 0.0 || x <= 0.0 || y <= 0.0 {
            return Err(Error::Domain(format!(
                "kernel_at requires t, x, y > 0 (got t={t}, x={x}, y={y})"
            )));
        }
        let pref = 1.0 / (4.0 * PI * t).sqrt();
        let free = pref * (-(x - y) * (x - y) / (4.0 * t)).exp();
        let image = pref * (-(x + y) * (x + y) / (4.0 * t)).exp();
        let e = self.heat_semigroup(t);
        let mut k = (&e).scale(free) + (&self.i_minus_2p * &e).scale(image);
        let a = self.a_theta;
        for (cl, imp) in self.clusters.iter().zip(&self.imp_proj) {
            if cl.mu == 0.0 {
                continue;
            }
            let zf = z_factor_heat(t, x + y, a * cl.mu, cl.mu, &self.quadrature)?;
            k += imp.scale(-a * cl.mu * zf);
        }
        Ok(k)
    }

    /// Analytic x-derivative ∂_x K_t(x, y).
    pub fn kernel_dx_at(&self, t: f64, x: f64, y: f64) -> Result<CMat> {
        let pref = 1.0 / (4.0 * PI * t).sqrt();
        let free = pref * (-(x - y) * (x - y) / (4.0 * t)).exp() * ((y - x) / (2.0 * t));
        let image = pref * (-(x + y) * (x + y) / (4.0 * t)).exp() * (-(x + y) / (2.0 * t));
        let e = self.heat_semigroup(t);
        let mut k = (&e).scale(free) + (&self.i_minus_2p * &e).scale(image);
        let a = self.a_theta;
        let s = x + y;
        for (cl, imp) in self.clusters.iter().zip(&self.imp_proj) {
            if cl.mu == 0.0 {
                continue;
            }
            let kap = a * cl.mu;
            // ∂_s of the z-factor: −(πt)^{-1/2} e^{-s²/4t - tμ²} + κ·Z
            let zf = z_factor_heat(t, s, kap, cl.mu, &self.quadrature)?;
            let dz = -(1.0 / (PI * t).sqrt()) * (-s * s / (4.0 * t) - t * cl.mu * cl.mu).exp()
                + kap * zf;
            k += imp.scale(-a * cl.mu * dz);
        }
        Ok(k)
    }

    /// Hermitian-adjoint symmetry defect ‖K_t(x,y) − K_t(y,x)*‖.
    pub fn symmetry_defect(&self, t: f64, x: f64, y: f64) -> Result<f64> {
        let kxy = self.kernel_at(t, x, y)?;
        let kyx = self.kernel_at(t, y, x)?;
        Ok(op_norm(&(kxy - kyx.adjoint())))
    }
}

/// Result of applying the kernel to a sampled function.
#[derive(Debug, Clone)]
pub struct AppliedKernel {
    pub values: Vec<CVec>,
    pub warning: Option<String>,
}

/// Q_t u(x) = ∫_0^∞ K_t(x,y) u(y) dy by composite Simpson over the sample
/// grid (uniform spacing, u compactly supported on the grid).
pub fn apply_kernel(
    kernel: &SommerfeldKernel,
    t: f64,
    grid: &[f64],
    u: &[CVec],
) -> Result<AppliedKernel> {
    if grid.len() != u.len() || grid.len() < 3 {
        return Err(Error::Structural(
            "grid and samples must match and hold at least 3 points".into(),
        ));
    }
    let h = grid[1] - grid[0];
    let warning = if h > 0.5 * t.sqrt() {
        Some(format!(
            "grid spacing {h:.3e} is coarse relative to sqrt(t) = {:.3e}; kernel features may be unresolved",
            t.sqrt()
        ))
    } else {
        None
    };
    let n = kernel.dim();
    let mut values = Vec::with_capacity(grid.len());
    for &x in grid {
        let mut acc = CVec::zeros(n);
        for (j, (&y, uy)) in grid.iter().zip(u).enumerate() {
            if y <= 0.0 || uy.norm() == 0.0 {
                continue;
            }
            // Simpson weights on a uniform grid (trapezoid for even counts)
            let w = if grid.len() % 2 == 1 {
                if j == 0 || j == grid.len() - 1 {
                    1.0 / 3.0
                } else if j % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                }
            } else if j == 0 || j == grid.len() - 1 {
                0.5
            } else {
                1.0
            };
            let k = kernel.kernel_at(t, x, y)?;
            acc += (k * uy).scale(w * h);
        }
        values.push(acc);
    }
    Ok(AppliedKernel { values, warning })
}

/// The three heat-trace contributions at time t.
#[derive(Debug, Clone, Copy)]
pub struct HeatTraceTerms {
    pub i: f64,
    /// assembled directly; vanishes identically
    pub ii: f64,
    /// eigenvalue-sum route (the φ(x√t) → 1 limit form)
    pub iii: f64,
    /// strict route with the cutoff in place
    pub iii_strict: f64,
    /// |iii − iii_strict|, the cutoff-replacement discrepancy
    pub discrepancy: f64,
    /// i + ii + iii
    pub total: f64,
}

/// Heat-trace terms I, II, III of tr[φ e^{-t D̃_θ²}].
pub fn heat_trace_terms(
    kernel: &SommerfeldKernel,
    t: f64,
    cutoff: &CutoffBump,
) -> Result<HeatTraceTerms> {
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let phi_int = cutoff.integral();
    let tr_e: f64 = kernel
        .clusters
        .iter()
        .map(|cl| cl.dim as f64 * (-t * cl.mu * cl.mu).exp())
        .sum();
    let i_term = pref * phi_int * tr_e;

    // II: (4πt)^{-1/2} ∫ φ e^{-x²/t} dx · tr[(I−2P)e^{-tA²}] ≡ 0
    let gauss_cut = quad::integrate(
        |x| cutoff.phi(x) * (-x * x / t).exp(),
        0.0,
        cutoff.r1,
        1e-16,
        1e-12,
    )?;
    let tr_i2p: f64 = kernel
        .clusters
        .iter()
        .map(|cl| ((&kernel.i_minus_2p * &cl.proj).trace().re) * (-t * cl.mu * cl.mu).exp())
        .sum();
    let ii_term = pref * gauss_cut * tr_i2p;

    let a = kernel.a_theta;
    // III, eigenvalue-sum route: −(a/2) Σ c(μ) F_a(√t μ)
    let mut iii_eig = 0.0;
    for cl in &kernel.clusters {
        if cl.mu == 0.0 {
            continue;
        }
        iii_eig -= a / 2.0 * cl.dim as f64 * f_a_closed(a, t.sqrt() * cl.mu);
    }
    // III, strict route: −a ∫ φ(x) Σ tr(PΠ_μ) μ Z(t, 2x, aμ, μ) dx
    let p_weights: Vec<f64> = kernel
        .clusters
        .iter()
        .map(|cl| (&kernel.p * &cl.proj).trace().re)
        .collect();
    let iii_strict = -a
        * quad::integrate(
            |x| {
                let mut s = 0.0;
                for (cl, wp) in kernel.clusters.iter().zip(&p_weights) {
                    if cl.mu == 0.0 {
                        continue;
                    }
                    s += wp * cl.mu * z_factor_heat_closed(t, 2.0 * x, a * cl.mu, cl.mu);
                }
                s * cutoff.phi(x)
            },
            0.0,
            cutoff.r1,
            1e-16,
            1e-12,
        )?;
    Ok(HeatTraceTerms {
        i: i_term,
        ii: ii_term,
        iii: iii_eig,
        iii_strict,
        discrepancy: (iii_eig - iii_strict).abs(),
        total: i_term + ii_term + iii_eig,
    })
}

/// The eta-density contributions at time t.
#[derive(Debug, Clone, Copy)]
pub struct EtaDensityTerms {
    /// free-Gaussian part, proportional to tr[γA e^{-tA²}]; vanishes
    pub i_tilde: f64,
    /// −(1/2) tr[γ A P(θ) e^{-tA²}] (the cutoff-free limit form)
    pub ii_tilde: f64,
    /// image term with the Gaussian cutoff factor still in place
    pub ii_tilde_strict: f64,
    /// a(θ) Σ d(μ) F_a(√t μ)
    pub iii_tilde: f64,
    pub iii_tilde_strict: f64,
    pub total: f64,
    /// prelude traces tr[γ e^{-tA²}] and tr[γ P(θ) e^{-tA²}]; both vanish
    pub prelude_gamma: f64,
    pub prelude_gamma_p: f64,
}

/// d(μ) = tr over ker(|A|−μ) of γ A P(θ).
pub fn d_weight(kernel: &SommerfeldKernel, cl: &AbsCluster) -> f64 {
    (&cl.proj * &kernel.gamma * &kernel.a_mat * &kernel.p).trace().re
}

/// Eta-density terms of ∫ φ tr[γ(∂_x + A) K_t(x,x)] dx.
pub fn eta_density_terms(
    kernel: &SommerfeldKernel,
    t: f64,
    cutoff: &CutoffBump,
) -> Result<EtaDensityTerms> {
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let phi_int = cutoff.integral();
    let ga = &kernel.gamma * &kernel.a_mat;
    let mut prelude_gamma = 0.0;
    let mut prelude_gamma_p = 0.0;
    let mut i_tilde = 0.0;
    let mut ii_tilde = 0.0;
    let mut w2 = 0.0;
    let mut dw: Vec<f64> = Vec::with_capacity(kernel.clusters.len());
    for cl in &kernel.clusters {
        let heat = (-t * cl.mu * cl.mu).exp();
        prelude_gamma += (&kernel.gamma * &cl.proj).trace().re * heat;
        prelude_gamma_p += (&kernel.gamma * &kernel.p * &cl.proj).trace().re * heat;
        i_tilde += (&ga * &cl.proj).trace().re * heat;
        let d = d_weight(kernel, cl);
        dw.push(d);
        ii_tilde -= 0.5 * d * heat;
        w2 += (&ga * &kernel.i_minus_2p * &cl.proj).trace().re * heat;
    }
    i_tilde *= pref * phi_int;
    let gauss_cut = quad::integrate(
        |x| cutoff.phi(x) * (-x * x / t).exp(),
        0.0,
        cutoff.r1,
        1e-16,
        1e-12,
    )?;
    let ii_tilde_strict = pref * gauss_cut * w2;

    let a = kernel.a_theta;
    let mut iii_tilde = 0.0;
    for (cl, d) in kernel.clusters.iter().zip(&dw) {
        if cl.mu == 0.0 {
            continue;
        }
        iii_tilde += a * d * f_a_closed(a, t.sqrt() * cl.mu);
    }
    let iii_tilde_strict = a
        * quad::integrate(
            |x| {
                let mut s = 0.0;
                for (cl, d) in kernel.clusters.iter().zip(&dw) {
                    if cl.mu == 0.0 {
                        continue;
                    }
                    s += d * cl.mu * z_factor_heat_closed(t, 2.0 * x, a * cl.mu, cl.mu);
                }
                s * cutoff.phi(x)
            },
            0.0,
            cutoff.r1,
            1e-16,
            1e-12,
        )?;
    Ok(EtaDensityTerms {
        i_tilde,
        ii_tilde,
        ii_tilde_strict,
        iii_tilde,
        iii_tilde_strict,
        total: i_tilde + ii_tilde + iii_tilde,
        prelude_gamma,
        prelude_gamma_p,
    })
}

/// The six terms of d/dθ tr[… e^{-t Ď_θ²}]: the φ'-localized triple and the
/// φ-localized triple, all returned as complex numbers (they are real for
/// admissible families; tests assert this).
#[derive(Debug, Clone, Copy)]
pub struct VariationTraceTerms {
    pub i: Complex64,
    pub ii: Complex64,
    pub iii: Complex64,
    pub i_tilde: Complex64,
    pub ii_tilde: Complex64,
    /// cutoff-free asymptotic form i·tr[γT'AP e^{-tA²}]
    pub ii_tilde_limit: Complex64,
    pub iii_tilde: Complex64,
    /// d(λ)-sum form −2i a(θ) Σ d'(μ) F_a(√t μ)
    pub iii_tilde_limit: Complex64,
    pub total: Complex64,
}

/// Variation trace terms from i γ(φ'T'(θ) − 2φT'(θ)A) against the kernel.
pub fn variation_trace_terms(
    deformation: &ApsDeformation,
    theta: f64,
    t: f64,
    cutoff: &CutoffBump,
) -> Result<VariationTraceTerms> {
    let kernel = SommerfeldKernel::new(deformation, theta, ZQuadrature::default())?;
    let tp = deformation.t_prime(theta)?;
    let gtp = &kernel.gamma * &tp;
    let gtpa = &gtp * &kernel.a_mat;
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let a = kernel.a_theta;

    let mut w_free = Complex64::new(0.0, 0.0); // tr[γT' e^{-tA²}]
    let mut w_img = Complex64::new(0.0, 0.0); // tr[γT'(I−2P) e^{-tA²}]
    let mut w_free_a = Complex64::new(0.0, 0.0); // tr[γT'A e^{-tA²}]
    let mut w_img_a = Complex64::new(0.0, 0.0); // tr[γT'A(I−2P) e^{-tA²}]
    let mut w_ap = Complex64::new(0.0, 0.0); // tr[γT'AP e^{-tA²}]
    let mut lay: Vec<Complex64> = Vec::new(); // tr[γT'(I−P)Π_μ]
    let mut lay_a: Vec<Complex64> = Vec::new(); // tr[γT'A(I−P)Π_μ]
    let mut dprime: Vec<Complex64> = Vec::new(); // tr[Π_μ γT'AP]
    for cl in &kernel.clusters {
        let heat = (-t * cl.mu * cl.mu).exp();
        w_free += (&gtp * &cl.proj).trace() * heat;
        w_img += (&gtp * &kernel.i_minus_2p * &cl.proj).trace() * heat;
        w_free_a += (&gtpa * &cl.proj).trace() * heat;
        w_img_a += (&gtpa * &kernel.i_minus_2p * &cl.proj).trace() * heat;
        w_ap += (&gtpa * &kernel.p * &cl.proj).trace() * heat;
        lay.push((&gtp * &kernel.one_minus_p * &cl.proj).trace());
        lay_a.push((&gtpa * &kernel.one_minus_p * &cl.proj).trace());
        dprime.push((&cl.proj * &gtpa * &kernel.p).trace());
    }

    // boundary-layer sums Σ (−aμ)·w(μ)·Z(t,2x,aμ,μ) against a weight function
    let layer_sum = |weights: &[Complex64], window: &dyn Fn(f64) -> f64, lo: f64| -> Result<Complex64> {
        let eval = |x: f64| -> Complex64 {
            let mut s = Complex64::new(0.0, 0.0);
            for (cl, wgt) in kernel.clusters.iter().zip(weights) {
                if cl.mu == 0.0 {
                    continue;
                }
                s += wgt * (-a * cl.mu * z_factor_heat_closed(t, 2.0 * x, a * cl.mu, cl.mu));
            }
            s * window(x)
        };
        let re = quad::integrate(|x| eval(x).re, lo, cutoff.r1, 1e-16, 1e-12)?;
        let im = quad::integrate(|x| eval(x).im, lo, cutoff.r1, 1e-16, 1e-12)?;
        Ok(Complex64::new(re, im))
    };

    // φ'-localized triple: i tr[γ φ' T' e^{-t D̃²}] (∫φ' = −1)
    let term_i = -I * pref * w_free;
    let gauss_prime = quad::integrate(
        |x| cutoff.phi_prime(x) * (-x * x / t).exp(),
        cutoff.r0,
        cutoff.r1,
        1e-16,
        1e-12,
    )?;
    let term_ii = I * pref * gauss_prime * w_img;
    let phi_prime = |x: f64| cutoff.phi_prime(x);
    let term_iii = I * layer_sum(&lay, &phi_prime, cutoff.r0)?;

    // φ-localized triple: −2i tr[γ φ T' A e^{-t D̃²}]
    let phi_int = cutoff.integral();
    let ti_tilde = -2.0 * I * pref * phi_int * w_free_a;
    let gauss_cut = quad::integrate(
        |x| cutoff.phi(x) * (-x * x / t).exp(),
        0.0,
        cutoff.r1,
        1e-16,
        1e-12,
    )?;
    let tii_tilde = -2.0 * I * pref * gauss_cut * w_img_a;
    let tii_tilde_limit = I * w_ap;
    let phi_fn = |x: f64| cutoff.phi(x);
    let tiii_tilde = -2.0 * I * layer_sum(&lay_a, &phi_fn, 0.0)?;
    let mut tiii_tilde_limit = Complex64::new(0.0, 0.0);
    for (cl, d) in kernel.clusters.iter().zip(&dprime) {
        if cl.mu == 0.0 {
            continue;
        }
        tiii_tilde_limit += -2.0 * I * a * d * f_a_closed(a, t.sqrt() * cl.mu);
    }

    let total = term_i + term_ii + term_iii + ti_tilde + tii_tilde + tiii_tilde;
    Ok(VariationTraceTerms {
        i: term_i,
        ii: term_ii,
        iii: term_iii,
        i_tilde: ti_tilde,
        ii_tilde: tii_tilde,
        ii_tilde_limit: tii_tilde_limit,
        iii_tilde: tiii_tilde,
        iii_tilde_limit: tiii_tilde_limit,
        total,
    })
}

/// Per-identity kernel checks used by the CLI and the acceptance suite:
/// (name, violation) pairs.
pub fn kernel_identity_checks(
    kernel: &SommerfeldKernel,
    deformation: &ApsDeformation,
    t: f64,
) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    let mut sym: f64 = 0.0;
    for &x in &[0.3, 0.7, 1.1] {
        for &y in &[0.4, 0.9] {
            sym = sym.max(kernel.symmetry_defect(t, x, y)?);
        }
    }
    out.push(("kernel_symmetry".into(), sym));
    let bc = op_norm(&(&kernel.p * kernel.kernel_at(t, 1e-4, 1.0)?));
    out.push(("boundary_condition".into(), bc));
    let x0 = 1e-4;
    let kd = kernel.kernel_dx_at(t, x0, 1.0)?;
    let kv = kernel.kernel_at(t, x0, 1.0)?;
    let adj = &kernel.gamma * (&kernel.one_minus_p * kd + &kernel.a_tilde * kv);
    out.push(("adjoint_boundary_condition".into(), op_norm(&adj)));
    let cutoff = CutoffBump::default();
    let traces = heat_trace_terms(kernel, t, &cutoff)?;
    out.push(("ii_vanishes".into(), traces.ii.abs()));
    let densities = eta_density_terms(kernel, t, &cutoff)?;
    out.push(("i_tilde_vanishes".into(), densities.i_tilde.abs()));
    out.push(("prelude_tr_gamma".into(), densities.prelude_gamma.abs()));
    out.push(("prelude_tr_gamma_p".into(), densities.prelude_gamma_p.abs()));
    let p = &kernel.p;
    let n = kernel.dim();
    out.push(("p_idempotent".into(), op_norm(&(p * p - p))));
    out.push((
        "p_gamma_relation".into(),
        op_norm(&(&kernel.gamma * p - (identity(n) - p) * &kernel.gamma)),
    ));
    let a2 = &kernel.a_mat * &kernel.a_mat;
    out.push(("p_commutes_a2".into(), op_norm(&(p * &a2 - &a2 * p))));
    let papp = p * &kernel.a_mat * p;
    let rhs = (&deformation.parts.abs_a * p).scale(kernel.a_theta);
    out.push(("p_compression".into(), op_norm(&(papp - rhs))));
    Ok(out)
}

/// Central-difference heat-equation residual ‖(∂_t + D̃²_y) K‖ with
/// Richardson extrapolation; D̃² = −∂_y² + A² on the model.
pub fn pde_residual(kernel: &SommerfeldKernel, t: f64, x: f64, y: f64) -> Result<f64> {
    let a2 = &kernel.a_mat * &kernel.a_mat;
    let resid = |ht: f64, hy: f64| -> Result<CMat> {
        let dt = (kernel.kernel_at(t + ht, x, y)? - kernel.kernel_at(t - ht, x, y)?)
            .scale(1.0 / (2.0 * ht));
        let dyy = (kernel.kernel_at(t, x, y + hy)? + kernel.kernel_at(t, x, y - hy)?
            - kernel.kernel_at(t, x, y)?.scale(2.0))
        .scale(1.0 / (hy * hy));
        Ok(dt - dyy + kernel.kernel_at(t, x, y)? * &a2)
    };
    let h = 1e-2 * t.powf(0.75);
    let r1 = resid(h, h)?;
    let r2 = resid(h / 2.0, h / 2.0)?;
    // fourth-order elimination of the O(h²) truncation error
    let extrap = (r2.scale(4.0) - r1).scale(1.0 / 3.0);
    Ok(op_norm(&extrap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{double_geometry, ApsDeformation, BoundaryGeometry};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    fn cut_circle_4() -> ApsDeformation {
        let a = CMat::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1.0)]));
        let gamma = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        let base = BoundaryGeometry::new(a, gamma, None, None).unwrap();
        ApsDeformation::cutting(double_geometry(&base).unwrap()).unwrap()
    }

    #[test]
    fn cutoff_shape() {
        let phi = CutoffBump::default();
        assert_eq!(phi.phi(0.1), 1.0);
        assert_eq!(phi.phi(0.8), 0.0);
        assert!(phi.phi(0.5) > 0.0 && phi.phi(0.5) < 1.0);
        let h = 1e-6;
        let x = 0.45;
        let fd = (phi.phi(x + h) - phi.phi(x - h)) / (2.0 * h);
        assert_relative_eq!(phi.phi_prime(x), fd, max_relative = 1e-6);
        assert!(CutoffBump::new(0.8, 0.4).is_err());
    }

    #[test]
    fn z_factor_closed_vs_quadrature() {
        let rule = ZQuadrature {
            method: ZMethod::Quadrature,
            ..Default::default()
        };
        for &t in &[0.05, 0.5] {
            for &s in &[0.1, 1.0, 3.0] {
                for &(kap, mu) in &[(0.8, 1.0), (-0.6, 1.0), (0.0, 2.0), (-1.9, 2.0)] {
                    let closed = z_factor_heat_closed(t, s, kap, mu);
                    let quad = z_factor_heat(t, s, kap, mu, &rule).unwrap();
                    assert_relative_eq!(closed, quad, max_relative = 1e-9, epsilon = 1e-14);
                }
            }
        }
    }

    #[test]
    fn kernel_zero_tangential_closed_form() {
        // A = 0: the boundary layer vanishes and
        // K = (4πt)^{-1/2}(e^{-(x-y)²/4t} I + e^{-(x+y)²/4t}(I−2P)).
        let a = crate::linalg::zeros(2);
        let gamma = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(-1.0), c(0.0)]);
        let base = BoundaryGeometry::new(a, gamma, None, None).unwrap();
        let doubled = double_geometry(&base).unwrap();
        let parts = crate::model::spectral_parts(&doubled).unwrap();
        let t_mat = CMat::from_diagonal(&DVector::from_vec(vec![c(-1.0), c(-1.0)]));
        let sigma = crate::model::kernel_reflection_in_bases(
            &parts.k_plus_basis,
            &parts.k_minus_basis,
            &t_mat,
        )
        .unwrap();
        let geo = BoundaryGeometry::new(
            doubled.a.clone(),
            doubled.gamma.clone(),
            doubled.tau.clone(),
            Some(sigma),
        )
        .unwrap();
        let def = ApsDeformation::cutting(geo).unwrap();
        let kernel = SommerfeldKernel::new(&def, 0.2, ZQuadrature::default()).unwrap();
        let (t, x, y) = (0.3, 0.8, 1.1);
        let k = kernel.kernel_at(t, x, y).unwrap();
        let pref = 1.0 / (4.0 * PI * t).sqrt();
        let expected = identity(4).scale(pref * (-(x - y) * (x - y) / (4.0 * t)).exp())
            + kernel
                .i_minus_2p
                .scale(pref * (-(x + y) * (x + y) / (4.0 * t)).exp());
        assert!(op_norm(&(k - expected)) < 1e-14);
    }

    #[test]
    fn kernel_symmetry_and_boundary() {
        let def = cut_circle_4();
        for &theta in &[0.0, 0.3, std::f64::consts::FRAC_PI_4] {
            let kernel = SommerfeldKernel::new(&def, theta, ZQuadrature::default()).unwrap();
            assert!(kernel.symmetry_defect(0.17, 0.6, 0.9).unwrap() < 1e-10);
            // P(θ)K decays linearly in x near the boundary
            let v1 = op_norm(&(&kernel.p * kernel.kernel_at(0.1, 1e-2, 1.0).unwrap()));
            let v2 = op_norm(&(&kernel.p * kernel.kernel_at(0.1, 1e-3, 1.0).unwrap()));
            let v3 = op_norm(&(&kernel.p * kernel.kernel_at(0.1, 1e-4, 1.0).unwrap()));
            assert!(v2 < 0.2 * v1);
            assert!(v3 < 0.2 * v2);
            assert!(v3 < 1e-3);
        }
    }

    #[test]
    fn heat_equation_residual() {
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.3, ZQuadrature::default()).unwrap();
        let r = pde_residual(&kernel, 0.1, 0.7, 0.9).unwrap();
        assert!(r < 1e-4, "pde residual {r}");
    }

    #[test]
    fn semigroup_property() {
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.3, ZQuadrature::default()).unwrap();
        let m = 161usize;
        let grid: Vec<f64> = (0..m).map(|j| 0.02 + j as f64 * 0.025).collect();
        let u: Vec<CVec> = grid
            .iter()
            .map(|&x| {
                let amp = (-(x - 1.7f64) * (x - 1.7) / 0.04).exp();
                CVec::from_vec(vec![c(amp), c(0.3 * amp), c(-0.2 * amp), c(amp * 0.1)])
            })
            .collect();
        let (t, s) = (0.05, 0.05);
        let once = apply_kernel(&kernel, t + s, &grid, &u).unwrap();
        let first = apply_kernel(&kernel, s, &grid, &u).unwrap();
        let twice = apply_kernel(&kernel, t, &grid, &first.values).unwrap();
        let gap = once
            .values
            .iter()
            .zip(&twice.values)
            .map(|(p, q)| (p - q).norm())
            .fold(0.0f64, f64::max);
        assert!(gap < 1e-5, "semigroup gap {gap}");
        let zeros_in: Vec<CVec> = grid.iter().map(|_| CVec::zeros(4)).collect();
        let z = apply_kernel(&kernel, 0.05, &grid, &zeros_in).unwrap();
        assert!(z.values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn delta_family_recovery() {
        // as t → 0+, Q_t u → u at interior points
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.0, ZQuadrature::default()).unwrap();
        let m = 401usize;
        let grid: Vec<f64> = (0..m).map(|j| 0.2 + j as f64 * 0.004).collect();
        let u: Vec<CVec> = grid
            .iter()
            .map(|&x| {
                let amp = (-(x - 1.0f64) * (x - 1.0) / 0.4).exp();
                CVec::from_vec(vec![c(amp), c(0.0), c(0.0), c(0.0)])
            })
            .collect();
        let out = apply_kernel(&kernel, 1e-4, &grid, &u).unwrap();
        // sup over interior points, away from the truncated integral edges
        let sup = out
            .values
            .iter()
            .zip(&u)
            .zip(&grid)
            .filter(|(_, &x)| (0.7..=1.3).contains(&x))
            .map(|((p, q), _)| (p - q).norm())
            .fold(0.0f64, f64::max);
        assert!(sup < 1e-3, "delta-family distance {sup}");
        let coarse: Vec<f64> = (0..11).map(|j| 0.1 + j as f64 * 0.4).collect();
        let uc: Vec<CVec> = coarse.iter().map(|_| CVec::zeros(4)).collect();
        let w = apply_kernel(&kernel, 1e-4, &coarse, &uc).unwrap();
        assert!(w.warning.is_some());
    }

    #[test]
    fn trace_terms_vanishing_and_routes() {
        let def = cut_circle_4();
        let cutoff = CutoffBump::default();
        for &theta in &[0.0, 0.3] {
            let kernel = SommerfeldKernel::new(&def, theta, ZQuadrature::default()).unwrap();
            for &t in &[1.0, 0.1, 0.01] {
                let terms = heat_trace_terms(&kernel, t, &cutoff).unwrap();
                assert!(terms.ii.abs() < 1e-12, "II(t) = {} at t={t}", terms.ii);
            }
            let terms = heat_trace_terms(&kernel, 0.01, &cutoff).unwrap();
            if terms.iii.abs() > 1e-12 {
                assert!(
                    terms.discrepancy / terms.iii.abs() < 1e-4,
                    "III routes differ: {} vs {}",
                    terms.iii,
                    terms.iii_strict
                );
            }
        }
    }

    #[test]
    fn iii_strict_by_true_double_quadrature() {
        // independent oracle: both the x and z integrals by quadrature
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.3, ZQuadrature::default()).unwrap();
        let cutoff = CutoffBump::default();
        let t = 0.05;
        let a = kernel.a_theta;
        let rule = ZQuadrature {
            method: ZMethod::Quadrature,
            ..Default::default()
        };
        let oracle = -a
            * quad::integrate(
                |x| {
                    let mut s = 0.0;
                    for cl in &kernel.clusters {
                        if cl.mu == 0.0 {
                            continue;
                        }
                        let wp = (&kernel.p * &cl.proj).trace().re;
                        s += wp
                            * cl.mu
                            * z_factor_heat(t, 2.0 * x, a * cl.mu, cl.mu, &rule).unwrap();
                    }
                    s * cutoff.phi(x)
                },
                0.0,
                cutoff.r1,
                1e-15,
                1e-10,
            )
            .unwrap();
        let terms = heat_trace_terms(&kernel, t, &cutoff).unwrap();
        assert_relative_eq!(terms.iii_strict, oracle, max_relative = 1e-8);
    }

    #[test]
    fn eta_density_vanishing_and_reality() {
        let def = cut_circle_4();
        let cutoff = CutoffBump::default();
        let kernel = SommerfeldKernel::new(&def, 0.3, ZQuadrature::default()).unwrap();
        for &t in &[1.0, 0.1, 0.01] {
            let d = eta_density_terms(&kernel, t, &cutoff).unwrap();
            assert!(d.i_tilde.abs() < 1e-12);
            assert!(d.prelude_gamma.abs() < 1e-12);
            assert!(d.prelude_gamma_p.abs() < 1e-12);
        }
        let d = eta_density_terms(&kernel, 0.01, &cutoff).unwrap();
        if d.ii_tilde.abs() > 1e-12 {
            assert!((d.ii_tilde - d.ii_tilde_strict).abs() / d.ii_tilde.abs() < 1e-3);
        }
        if d.iii_tilde.abs() > 1e-12 {
            assert!((d.iii_tilde - d.iii_tilde_strict).abs() / d.iii_tilde.abs() < 1e-3);
        }
    }

    #[test]
    fn ii_tilde_matrix_exponential_oracle() {
        // ĨĨ at θ = 0, t = 0.05: cluster-sum evaluation vs direct matrix
        // functional calculus of −(1/2) tr[γ A P e^{-tA²}]
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.0, ZQuadrature::default()).unwrap();
        let t = 0.05;
        let d = eta_density_terms(&kernel, t, &CutoffBump::default()).unwrap();
        let e = crate::linalg::expm(&(&kernel.a_mat * &kernel.a_mat).scale(-t));
        let direct = -0.5 * (&kernel.gamma * &kernel.a_mat * &kernel.p * e).trace().re;
        assert!((d.ii_tilde - direct).abs() < 1e-6, "{} vs {direct}", d.ii_tilde);
    }

    #[test]
    fn variation_terms_cutting_family() {
        let def = cut_circle_4();
        let cutoff = CutoffBump::default();
        let theta = 0.3;
        let v = variation_trace_terms(&def, theta, 0.1, &cutoff).unwrap();
        let tp = def.t_prime(theta).unwrap();
        let mut tr = Complex64::new(0.0, 0.0);
        for cl in &def.parts.abs_clusters {
            tr += (&def.geometry.gamma * &tp * &cl.proj).trace() * (-0.1 * cl.mu * cl.mu).exp();
        }
        let expected = -I / (4.0 * PI * 0.1).sqrt() * tr;
        assert!((v.i - expected).norm() < 1e-10);
        assert!(v.i_tilde.norm() < 1e-12);
        assert!(v.total.im.abs() < 1e-10, "total not real: {:?}", v.total);
        // II, III decay like e^{-c/t} as t shrinks (φ' lives away from 0)
        let mags: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&t| {
                let v = variation_trace_terms(&def, theta, t, &cutoff).unwrap();
                v.ii.norm() + v.iii.norm()
            })
            .collect();
        assert!(mags[1] < 0.5 * mags[0] || mags[0] < 1e-13);
        assert!(mags[2] < 0.2 * mags[1] || mags[1] < 1e-13);
        // zero generator → all terms vanish
        let zero_family = ApsDeformation::generic(
            def.geometry.clone(),
            std::sync::Arc::new(|_| 1.0),
            std::sync::Arc::new(|_| crate::linalg::zeros(4)),
            Some(std::sync::Arc::new(|_| crate::linalg::zeros(4))),
        )
        .unwrap();
        let vz = variation_trace_terms(&zero_family, 0.0, 0.1, &cutoff).unwrap();
        assert!(vz.total.norm() < 1e-13);
    }

    #[test]
    fn identity_report() {
        let def = cut_circle_4();
        let kernel = SommerfeldKernel::new(&def, 0.3, ZQuadrature::default()).unwrap();
        let checks = kernel_identity_checks(&kernel, &def, 0.02).unwrap();
        for (name, viol) in &checks {
            let tol = match name.as_str() {
                "kernel_symmetry" => 1e-10,
                "boundary_condition" | "adjoint_boundary_condition" => 1e-6,
                _ => 1e-11,
            };
            assert!(viol < &tol, "{name}: {viol}");
        }
    }
}
