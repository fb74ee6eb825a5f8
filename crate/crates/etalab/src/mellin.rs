//! The bridge between small-time heat-trace asymptotics and meromorphic
//! eta/zeta data: residue-sum prediction of the model trace expansion,
//! principal parts of η from expansion coefficients, least-squares
//! expansion fitting, and a numerical contour-shift verification of the
//! residue calculus.
//!
//! Exponents live on the half-integer lattice and are kept exact (twice the
//! exponent, as an integer) so pole bookkeeping never goes through float
//! keys.

use num_complex::Complex64;
use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::heat::CutoffBump;
use crate::linalg::c;
use crate::model::{spectral_parts, ApsDeformation, BoundaryGeometry};
use crate::quad;
use crate::specfn::{
    gamma_laurent_at_pole, ln_gamma_complex, mellin_f, mellin_f_residue, recip_gamma_taylor,
};

/// Exact half-integer: the stored integer is twice the value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct HalfInt(pub i32);

impl HalfInt {
    pub fn integer(n: i32) -> Self {
        Self(2 * n)
    }
    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }
    /// Is this a nonnegative integer?
    pub fn is_nonneg_integer(self) -> bool {
        self.0 >= 0 && self.0 % 2 == 0
    }
    /// Pole location s_α = −2α − 1 (an integer since α is a half-integer).
    pub fn pole_location(self) -> i64 {
        -(self.0 as i64) - 1
    }
}

/// One t^α log^k t term.
#[derive(Debug, Clone, Copy)]
pub struct ExpansionTerm {
    pub alpha: HalfInt,
    pub log_power: u32,
    pub coeff: Complex64,
}

/// Sparse collection of (α, k, a_{αk}) with a remainder order:
/// Σ a_{αk} t^α log^k t + O(t^{remainder_order}).
#[derive(Debug, Clone)]
pub struct ExpansionSeries {
    pub terms: Vec<ExpansionTerm>,
    pub remainder_order: f64,
}

impl ExpansionSeries {
    pub fn new(mut terms: Vec<ExpansionTerm>, remainder_order: f64) -> Self {
        // merge duplicates, sort by (α, k)
        let mut map: BTreeMap<(HalfInt, u32), Complex64> = BTreeMap::new();
        for t in terms.drain(..) {
            *map.entry((t.alpha, t.log_power))
                .or_insert(Complex64::new(0.0, 0.0)) += t.coeff;
        }
        let terms = map
            .into_iter()
            .map(|((alpha, log_power), coeff)| ExpansionTerm {
                alpha,
                log_power,
                coeff,
            })
            .collect();
        Self {
            terms,
            remainder_order,
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let lt = t.ln();
        self.terms
            .iter()
            .map(|term| term.coeff * t.powf(term.alpha.value()) * lt.powi(term.log_power as i32))
            .sum()
    }

    pub fn coeff(&self, alpha: HalfInt, log_power: u32) -> Complex64 {
        self.terms
            .iter()
            .find(|t| t.alpha == alpha && t.log_power == log_power)
            .map(|t| t.coeff)
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn max_log_power(&self) -> u32 {
        self.terms.iter().map(|t| t.log_power).max().unwrap_or(0)
    }
}

/// spectral_zeta(g, w) = Σ_{μ ∈ spec|A| \ {0}} c(μ) μ^{-w} = ζ_{A²}(w/2);
/// entire in w for the finite model (empty-sum 0 when A = 0).
pub fn spectral_zeta(geometry: &BoundaryGeometry, w: Complex64) -> Result<Complex64> {
    let parts = spectral_parts(geometry)?;
    Ok(spectral_zeta_from_clusters(
        &parts
            .abs_clusters
            .iter()
            .map(|cl| (cl.mu, cl.dim as f64))
            .collect::<Vec<_>>(),
        w,
    ))
}

pub fn spectral_zeta_from_clusters(clusters: &[(f64, f64)], w: Complex64) -> Complex64 {
    clusters
        .iter()
        .filter(|(mu, _)| *mu > 0.0)
        .map(|(mu, weight)| Complex64::new(*weight, 0.0) * (-w * mu.ln()).exp())
        .sum()
}

/// Predicted small-t expansion of the heat trace (l = 0) or eta density
/// (l = 1), assembled from the exact Gaussian part plus the residue sum of
/// the boundary-layer Mellin transform. Terms are kept up to exponent
/// < (J+1)/2. No log terms arise (the finite-model zeta is entire).
pub fn trace_expansion_predict(
    deformation: &ApsDeformation,
    theta: f64,
    l: u8,
    order: u32,
    cutoff: &CutoffBump,
) -> Result<ExpansionSeries> {
    if l > 1 {
        return Err(Error::Domain(format!("l must be 0 or 1, got {l}")));
    }
    let a = deformation.a_of(theta);
    let clusters = &deformation.parts.abs_clusters;
    let remainder_order = (order as f64 + 1.0) / 2.0;
    let mut terms: Vec<ExpansionTerm> = Vec::new();
    if l == 0 {
        // I(t): (4πt)^{-1/2} ∫φ Σ_j (−1)^j tr(A^{2j}) t^j / j!
        let phi_int = cutoff.integral();
        let mut j_fact = 1.0f64;
        for j in 0..=(order / 2 + 1) {
            if j > 0 {
                j_fact *= j as f64;
            }
            let moment: f64 = clusters
                .iter()
                .map(|cl| cl.dim as f64 * cl.mu.powi(2 * j as i32))
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(ExpansionTerm {
                alpha: HalfInt(2 * j as i32 - 1),
                log_power: 0,
                coeff: c(phi_int / (4.0 * PI).sqrt() * sign * moment / j_fact),
            });
        }
        // III(t): −(a/2) Σ_j t^{j/2} ζ_{A²}(−j/2) Res₁𝓜F_a(−j)
        for j in 0..=order {
            let res = mellin_f_residue(a, j)?;
            let zeta_val: f64 = clusters
                .iter()
                .filter(|cl| cl.mu > 0.0)
                .map(|cl| cl.dim as f64 * cl.mu.powi(j as i32))
                .sum();
            terms.push(ExpansionTerm {
                alpha: HalfInt(j as i32),
                log_power: 0,
                coeff: c(-a / 2.0 * zeta_val * res),
            });
        }
    } else {
        // ĨĨ(t): −(1/2) Σ_j (−1)^j/j! Σ_μ d(μ) μ^{2j} t^j
        let p = deformation.projection(theta)?;
        let ga = &deformation.geometry.gamma * &deformation.geometry.a;
        let d_weights: Vec<f64> = clusters
            .iter()
            .map(|cl| (&cl.proj * &ga * &p).trace().re)
            .collect();
        let mut j_fact = 1.0f64;
        for j in 0..=(order / 2 + 1) {
            if j > 0 {
                j_fact *= j as f64;
            }
            let moment: f64 = clusters
                .iter()
                .zip(&d_weights)
                .map(|(cl, d)| d * cl.mu.powi(2 * j as i32))
                .sum();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            terms.push(ExpansionTerm {
                alpha: HalfInt(2 * j as i32),
                log_power: 0,
                coeff: c(-0.5 * sign * moment / j_fact),
            });
        }
        // ĨĨĨ(t): a Σ_j t^{j/2} [Σ_μ d(μ) μ^j] Res₁𝓜F_a(−j)
        for j in 0..=order {
            let res = mellin_f_residue(a, j)?;
            let weighted: f64 = clusters
                .iter()
                .zip(&d_weights)
                .filter(|(cl, _)| cl.mu > 0.0)
                .map(|(cl, d)| d * cl.mu.powi(j as i32))
                .sum();
            terms.push(ExpansionTerm {
                alpha: HalfInt(j as i32),
                log_power: 0,
                coeff: c(a * weighted * res),
            });
        }
    }
    let terms = terms
        .into_iter()
        .filter(|t| t.alpha.value() < remainder_order)
        .collect();
    Ok(ExpansionSeries::new(terms, remainder_order))
}

/// Laurent data of η at one lattice point s_α: residues[k−1] = Res_k η(s₀),
/// plus the regular value Res₀. For α ∈ Z₊ with no log terms the pole order
/// is 0 and the whole contribution of the expansion term sits in Res₀.
#[derive(Debug, Clone)]
pub struct EtaPole {
    /// location s_α = −2α−1 (integer on the half-integer α lattice)
    pub location: i64,
    pub order: usize,
    pub residues: Vec<Complex64>,
    /// Res₀ η(s₀): the local constant term contributed by this α-group
    /// (exact when 1/Γ vanishes at the point, i.e. α ∈ Z₊).
    pub regular_value: Complex64,
}

/// Meromorphic eta data determined by an expansion: the principal parts at
/// each pole plus the source series for on-demand evaluation of the Mellin
/// model.
#[derive(Debug, Clone)]
pub struct MeromorphicEta {
    pub poles: Vec<EtaPole>,
    source: ExpansionSeries,
}

/// Builds the meromorphic eta data from an expansion series: poles at
/// s_α = −2α−1 with principal part (1/Γ((s+1)/2)) Σ_k a_{αk} (−1)^k k! 2^{k+1}
/// (s−s_α)^{−k−1}. For α ∈ Z₊ the zero of 1/Γ suppresses one order.
pub fn eta_from_expansion(series: &ExpansionSeries) -> Result<MeromorphicEta> {
    let mut groups: BTreeMap<HalfInt, Vec<(u32, Complex64)>> = BTreeMap::new();
    for t in &series.terms {
        groups
            .entry(t.alpha)
            .or_default()
            .push((t.log_power, t.coeff));
    }
    // distinct α always map to distinct s_α on the half-integer lattice;
    // defend anyway.
    let mut seen: BTreeMap<i64, HalfInt> = BTreeMap::new();
    let mut poles = Vec::new();
    for (alpha, ks) in &groups {
        let s0 = alpha.pole_location();
        if let Some(prev) = seen.insert(s0, *alpha) {
            return Err(Error::Structural(format!(
                "duplicate pole location s = {s0} from exponents {} and {}",
                prev.value(),
                alpha.value()
            )));
        }
        let kmax = ks.iter().map(|(k, _)| *k).max().unwrap_or(0) as usize;
        if kmax > 1 {
            return Err(Error::Structural(format!(
                "log-powers above 1 are not supported (got k = {kmax})"
            )));
        }
        // Taylor of 1/Γ(−α + u/2) around u = 0
        let g = recip_gamma_taylor(-alpha.value(), 3);
        // Res_j = Σ_{k ≥ j−1} a_k (−1)^k k! 2^{k+1} g_{k+1−j}; the local
        // constant term is the same sum with g_{k+1}.
        let mut residues = vec![Complex64::new(0.0, 0.0); kmax + 1];
        let mut regular_value = Complex64::new(0.0, 0.0);
        for (k, a_k) in ks {
            let k = *k as usize;
            let mut k_fact = 1.0;
            for m in 1..=k {
                k_fact *= m as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            let germ = a_k * sign * k_fact * 2.0f64.powi(k as i32 + 1);
            for j in 1..=(k + 1) {
                residues[j - 1] += germ * g[k + 1 - j];
            }
            regular_value += germ * g[k + 1];
        }
        let order = residues
            .iter()
            .rposition(|r| r.norm() > 1e-300)
            .map_or(0, |p| p + 1);
        residues.truncate(order.max(1));
        poles.push(EtaPole {
            location: s0,
            order,
            residues,
            regular_value,
        });
    }
    Ok(MeromorphicEta {
        poles,
        source: series.clone(),
    })
}

impl MeromorphicEta {
    /// Res_k η(s₀); zero when no pole lives there.
    pub fn res(&self, location: i64, k: usize) -> Complex64 {
        self.poles
            .iter()
            .find(|p| p.location == location)
            .and_then(|p| p.residues.get(k - 1))
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn res1(&self, location: i64) -> Complex64 {
        self.res(location, 1)
    }

    /// Evaluates the Mellin model
    /// (1/Γ((s+1)/2)) Σ_{αk} a_{αk} (−1)^k k! 2^{k+1} (s−s_α)^{−k−1}
    /// at a regular point. The entire remainder of the true η is not
    /// recoverable from the expansion and is omitted.
    pub fn eval_model(&self, s: Complex64) -> Result<Complex64> {
        let mut sum = Complex64::new(0.0, 0.0);
        for t in &self.source.terms {
            let s0 = t.alpha.pole_location() as f64;
            let u = s - s0;
            if u.norm() < 1e-10 {
                return Err(Error::Pole(format!("s = {s} is a pole of the model")));
            }
            let k = t.log_power as i32;
            let mut k_fact = 1.0;
            for m in 1..=k {
                k_fact *= m as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += t.coeff * sign * k_fact * 2.0f64.powi(k + 1) * u.powi(-k - 1);
        }
        let lg = ln_gamma_complex((s + 1.0) / 2.0);
        Ok(sum * (-lg).exp())
    }

    /// Inverse route of the Mellin duality: reassembles the t^α log^k t
    /// series from the stored pole data by multiplying the η-Laurent data
    /// with the Γ((s+1)/2) and t^{-(s+1)/2} expansions and taking (1/2)Res₁.
    pub fn inverse_mellin_series(&self) -> Result<ExpansionSeries> {
        let mut terms = Vec::new();
        for pole in &self.poles {
            let s0 = pole.location;
            let z0_twice = s0 + 1; // 2·z0 where z0 = (s0+1)/2
            let alpha = HalfInt(-(z0_twice as i32)); // α = −z0
            let ord = pole.order;
            let gamma_has_pole = z0_twice % 2 == 0 && z0_twice <= 0;
            if ord == 0 && !gamma_has_pole {
                continue;
            }
            // Γ(z0 + u/2) as Laurent/Taylor coefficients c_i starting at i_min
            let (i_min, gcoef): (i32, Vec<f64>) = if gamma_has_pole {
                let q = (-z0_twice / 2) as u32;
                let (cm1, reg) = gamma_laurent_at_pole(q, ord + 1);
                let mut v = vec![cm1];
                v.extend(reg);
                (-1, v)
            } else {
                let g = recip_gamma_taylor(z0_twice as f64 / 2.0, 3);
                // invert the Taylor series 1/Γ → Γ
                let g0 = g[0];
                let a1 = g[1] / g0;
                let a2 = g[2] / g0;
                let a3 = g[3] / g0;
                let inv = [
                    1.0 / g0,
                    -a1 / g0,
                    (a1 * a1 - a2) / g0,
                    (2.0 * a1 * a2 - a1 * a1 * a1 - a3) / g0,
                ];
                (0, inv.to_vec())
            };
            // (1/2) Res₁[ t^{α − u/2} Γ η ]: coefficient of u^{-1}
            if ord > 0 {
                for (j_idx, r_j) in pole.residues.iter().enumerate() {
                    let j = (j_idx + 1) as i32; // η-Laurent order u^{-j}
                    for (gi, gc) in gcoef.iter().enumerate() {
                        let i = i_min + gi as i32;
                        let m = j - 1 - i; // power of u from the t-expansion
                        if m < 0 {
                            continue;
                        }
                        let mut m_fact = 1.0;
                        for q in 1..=m {
                            m_fact *= q as f64;
                        }
                        // t^α (−1/2)^m ln^m t / m!
                        let coeff = r_j * gc * (-0.5f64).powi(m) / m_fact * 0.5;
                        if coeff.norm() > 1e-300 && m <= 3 {
                            terms.push(ExpansionTerm {
                                alpha,
                                log_power: m as u32,
                                coeff,
                            });
                        }
                    }
                }
            }
            // Γ-pole × regular value of η: the only route by which
            // integer-exponent log-free terms come back.
            if gamma_has_pole {
                let coeff = pole.regular_value * gcoef[0] * 0.5;
                if coeff.norm() > 1e-300 {
                    terms.push(ExpansionTerm {
                        alpha,
                        log_power: 0,
                        coeff,
                    });
                }
            }
        }
        Ok(ExpansionSeries::new(terms, self.source.remainder_order))
    }
}

/// Least-squares expansion fit.
#[derive(Debug, Clone)]
pub struct ExpansionFit {
    pub series: ExpansionSeries,
    pub std_errors: Vec<f64>,
    pub condition_number: f64,
    pub residuals: Vec<(f64, f64)>,
    /// empirical decay order of the residual, when resolvable above the
    /// floating-point floor
    pub remainder_order: Option<f64>,
}

/// Fits Σ c_j t^{α_j} log^{k_j} t to samples by SVD least squares.
pub fn fit_expansion(samples: &[(f64, f64)], template: &[(HalfInt, u32)]) -> Result<ExpansionFit> {
    let m = samples.len();
    let p = template.len();
    if p == 0 || m < 2 * p {
        return Err(Error::Configuration(format!(
            "need at least twice as many samples as template terms (m = {m}, p = {p})"
        )));
    }
    let (tmin, tmax) = samples
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), (t, _)| {
            (lo.min(*t), hi.max(*t))
        });
    if tmax / tmin < 10f64.powf(1.5) {
        return Err(Error::Configuration(format!(
            "t-range must span at least 1.5 decades (got {:.2})",
            (tmax / tmin).log10()
        )));
    }
    let mut x = nalgebra::DMatrix::<f64>::zeros(m, p);
    let mut y = nalgebra::DVector::<f64>::zeros(m);
    for (i, (t, v)) in samples.iter().enumerate() {
        for (j, (alpha, k)) in template.iter().enumerate() {
            x[(i, j)] = t.powf(alpha.value()) * t.ln().powi(*k as i32);
        }
        y[i] = *v;
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd
        .singular_values
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b));
    let cond = smax / smin;
    if cond > 1e12 {
        return Err(Error::Conditioning {
            cond,
            hint: "prune the exponent/log template or widen the t-range".into(),
        });
    }
    let coeffs = svd
        .solve(&y, 0.0)
        .map_err(|e| Error::Numerical(format!("svd solve failed: {e}")))?;
    let fitted = &x * &coeffs;
    let residuals: Vec<(f64, f64)> = samples
        .iter()
        .zip(fitted.iter())
        .map(|((t, v), f)| (*t, v - f))
        .collect();
    let dof = (m - p).max(1) as f64;
    let sse: f64 = residuals.iter().map(|(_, r)| r * r).sum();
    let s2 = sse / dof;
    let v_t = svd.v_t.as_ref().unwrap();
    let mut std_errors = Vec::with_capacity(p);
    for j in 0..p {
        let mut cov_jj = 0.0;
        for r in 0..svd.singular_values.len() {
            let sv = svd.singular_values[r];
            if sv > 0.0 {
                cov_jj += v_t[(r, j)] * v_t[(r, j)] / (sv * sv);
            }
        }
        std_errors.push((cov_jj * s2).sqrt());
    }
    // empirical remainder order: log-log slope of |residual| against t over
    // points safely above the floating-point floor
    let floor = 1e3
        * f64::EPSILON
        * samples
            .iter()
            .map(|(_, v)| v.abs())
            .fold(0.0f64, f64::max);
    let pts: Vec<(f64, f64)> = residuals
        .iter()
        .filter(|(_, r)| r.abs() > floor)
        .map(|(t, r)| (t.ln(), r.abs().ln()))
        .collect();
    let remainder_order = if pts.len() >= 4 {
        Some(linear_slope(&pts))
    } else {
        None
    };
    let terms = template
        .iter()
        .zip(coeffs.iter())
        .map(|((alpha, k), &v)| ExpansionTerm {
            alpha: *alpha,
            log_power: *k,
            coeff: c(v),
        })
        .collect();
    let max_alpha = template.iter().map(|(a, _)| a.0).max().unwrap_or(0);
    Ok(ExpansionFit {
        series: ExpansionSeries::new(terms, (max_alpha as f64 + 1.0) / 2.0),
        std_errors,
        condition_number: cond,
        residuals,
        remainder_order,
    })
}

pub(crate) fn linear_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Wodzicki-type residue pipeline for the finite model:
/// Res₁η(A,B;−1) from the trace expansion of tr[B e^{-tA²}], given the
/// eigenspace weights (μ, tr_{ker(|A|−μ)} B). Identically zero at desk scale
/// (integer exponents only, and the Γ-zero kills the pole at s = −1).
pub fn wodzicki_residue_from_weights(weights: &[(f64, f64)], order_j: u32) -> Result<f64> {
    let mut terms = Vec::new();
    let mut j_fact = 1.0;
    for j in 0..=order_j {
        if j > 0 {
            j_fact *= j as f64;
        }
        let moment: f64 = weights
            .iter()
            .map(|(mu, w)| w * mu.powi(2 * j as i32))
            .sum();
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        terms.push(ExpansionTerm {
            alpha: HalfInt::integer(j as i32),
            log_power: 0,
            coeff: c(sign * moment / j_fact),
        });
    }
    let series = ExpansionSeries::new(terms, order_j as f64 + 1.0);
    let eta = eta_from_expansion(&series)?;
    Ok(eta.res1(-1).re)
}

/// Res₁ η(D_θ; 0) assembled from the predicted l = 1 expansion: only an
/// a_{−1/2,0} coefficient could feed the pole at s = 0, and the finite model
/// produces none.
pub fn residue_at_zero(deformation: &ApsDeformation, theta: f64) -> Result<f64> {
    let cutoff = CutoffBump::default();
    let series = trace_expansion_predict(deformation, theta, 1, 8, &cutoff)?;
    let eta = eta_from_expansion(&series)?;
    Ok(eta.res1(0).re)
}

/// Report of the numerical contour-shift verification.
#[derive(Debug, Clone)]
pub struct ContourShiftReport {
    /// (−a/2)(1/2πi)∫_{Re w=c} t^{-w/2} ζ_{A²}(w/2) 𝓜F_a(w) dw
    pub line_value: Complex64,
    /// same along Re w = c − 2J − 1/2 (between poles)
    pub shifted_value: Complex64,
    /// Σ residues crossed by the shift
    pub residue_sum: Complex64,
    /// |line − shifted − residues|
    pub closure_error: f64,
    /// |line − boundary-layer eigenvalue sum III(t)|
    pub inversion_error: f64,
}

/// Numerically integrates the Mellin representation of III(t) along a
/// vertical line, shifts the contour left across the first poles, and
/// compares the difference against the residue sum (the Residue-Theorem
/// step of the expansion theorem).
pub fn verify_contour_shift(
    deformation: &ApsDeformation,
    theta: f64,
    t: f64,
    c_line: f64,
    j_shift: u32,
) -> Result<ContourShiftReport> {
    let a = deformation.a_of(theta);
    if a == 0.0 {
        return Err(Error::Domain(
            "contour verification needs a(θ) ≠ 0 (III vanishes identically)".into(),
        ));
    }
    let clusters: Vec<(f64, f64)> = deformation
        .parts
        .abs_clusters
        .iter()
        .map(|cl| (cl.mu, cl.dim as f64))
        .collect();
    let c_shift = c_line - 2.0 * j_shift as f64 - 0.5;
    let integrand = |cre: f64, y: f64| -> Complex64 {
        let w = Complex64::new(cre, y);
        let zeta = spectral_zeta_from_clusters(&clusters, w);
        match mellin_f(a, w) {
            Ok(mf) => (-w / 2.0 * t.ln()).exp() * zeta * mf.value,
            Err(_) => Complex64::new(f64::NAN, f64::NAN),
        }
    };
    // (1/2πi)∫ f dw along w = c + iy is (1/2π)∫ f(c+iy) dy
    let line_int = |cre: f64| -> Result<Complex64> {
        let y_max = 60.0;
        let re = quad::integrate(|y| integrand(cre, y).re, -y_max, y_max, 1e-12, 1e-10)?;
        let im = quad::integrate(|y| integrand(cre, y).im, -y_max, y_max, 1e-12, 1e-10)?;
        Ok(Complex64::new(re, im) / (2.0 * PI))
    };
    let scale = c(-a / 2.0);
    let line_value = scale * line_int(c_line)?;
    let shifted_value = scale * line_int(c_shift)?;
    // poles crossed: w = −j for −j ∈ (c_shift, c_line)
    let mut residue_sum = Complex64::new(0.0, 0.0);
    let mut j = 0i64;
    loop {
        let w = -(j as f64);
        if w <= c_shift {
            break;
        }
        if w < c_line {
            let res = mellin_f_residue(a, j as u32)?;
            let zeta = spectral_zeta_from_clusters(&clusters, Complex64::new(w, 0.0));
            residue_sum += scale * zeta * res * t.powf(j as f64 / 2.0);
        }
        j += 1;
    }
    // eigenvalue-sum form of III(t) for the inversion check
    let mut iii = 0.0;
    for (mu, weight) in &clusters {
        if *mu > 0.0 {
            iii -= a / 2.0 * weight * crate::specfn::f_a_closed(a, t.sqrt() * mu);
        }
    }
    Ok(ContourShiftReport {
        line_value,
        shifted_value,
        residue_sum,
        closure_error: (line_value - shifted_value - residue_sum).norm(),
        inversion_error: (line_value - c(iii)).norm(),
    })
}

/// (α, k) template on the l = 0 exponent lattice {−1/2 + j/2 : 0 ≤ j < count}.
pub fn half_lattice_template(count: usize) -> Vec<(HalfInt, u32)> {
    (0..count).map(|j| (HalfInt(j as i32 - 1), 0)).collect()
}
