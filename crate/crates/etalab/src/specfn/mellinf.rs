//! The boundary-layer profile F_a, its Mellin transform, and the residues
//! of that transform at the nonpositive integers.
//!
//! F_a(x) = x ∫_0^∞ erfc(z) e^{-2axz - x²} dz for a ∈ (-1, 1], x > 0, with
//! closed form (e^{-x²} - e^{-(1-a²)x²} erfc(ax)) / (2a) and the obvious
//! a → 0 limit x e^{-x²}/√π.

use num_complex::Complex64;
use std::f64::consts::PI;

use super::erf::{erfc, erfcx};
use super::gamma::{gamma_complex, ln_gamma_complex};
use crate::error::{Error, Result};
use crate::quad;

/// Evaluation method for `f_a_eval`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaMethod {
    ClosedForm,
    Quadrature,
}

/// One Mellin-transform evaluation: value plus pole bookkeeping.
#[derive(Debug, Clone, Copy)]
pub struct MellinFValue {
    pub a: f64,
    pub w: Complex64,
    pub value: Complex64,
    /// Nearest pole of 𝓜F_a when w is within 0.5 of one.
    pub nearest_pole: Option<i64>,
}

fn check_a(a: f64) -> Result<()> {
    if !(a > -1.0 && a <= 1.0) {
        return Err(Error::Domain(format!("a must lie in (-1, 1], got {a}")));
    }
    Ok(())
}

/// F_a(x) for x > 0.
pub fn f_a_eval(a: f64, x: f64, method: FaMethod) -> Result<f64> {
    check_a(a)?;
    if x <= 0.0 {
        return Err(Error::Domain(format!("F_a requires x > 0, got {x}")));
    }
    match method {
        FaMethod::ClosedForm => Ok(f_a_closed(a, x)),
        FaMethod::Quadrature => f_a_quadrature(a, x),
    }
}

/// Closed form with a series crossover near a = 0 (the (G − F̃_a)/(2a)
/// difference cancels there).
pub fn f_a_closed(a: f64, x: f64) -> f64 {
    if a.abs() < 1e-4 {
        // F_a = e^{-x²}[ x/√π − a x²/2 + a² 2x³/(3√π) ] + O(a³ x⁴ e^{-x²})
        let e = (-x * x).exp();
        return e * (x / PI.sqrt() - a * x * x / 2.0 + a * a * 2.0 * x * x * x / (3.0 * PI.sqrt()));
    }
    // (e^{-x²} − e^{-(1-a²)x²} erfc(ax)) / 2a, written with erfcx when a > 0
    // so no huge/small pair is multiplied.
    if a > 0.0 {
        // e^{-(1-a²)x²} erfc(ax) = e^{-x²} erfcx(ax)
        let e = (-x * x).exp();
        (e - e * erfcx(a * x)) / (2.0 * a)
    } else {
        let e = (-x * x).exp();
        let e2 = (-(1.0 - a * a) * x * x).exp();
        (e - e2 * erfc(a * x)) / (2.0 * a)
    }
}

/// Defining integral by adaptive quadrature.
pub fn f_a_quadrature(a: f64, x: f64) -> Result<f64> {
    // erfc(z) ≤ e^{-z²}; integrand ≤ e^{-z² + 2|a|xz}. Peak at z = |a|x for
    // a < 0; truncate 9 widths past it.
    let cutoff = if a < 0.0 { a.abs() * x + 9.0 } else { 9.0 };
    let v = quad::integrate_truncated(
        |z| erfc(z) * (-2.0 * a * x * z).exp(),
        cutoff,
        1e-15,
        1e-13,
    )?;
    Ok(x * (-x * x).exp() * v)
}

fn is_pole_of_mellin_f(a: f64, p: i64) -> bool {
    if p > 0 {
        return false;
    }
    if a == 0.0 {
        // only odd negative integers
        return p < 0 && (-p) % 2 == 1;
    }
    if (a - 1.0).abs() < 1e-12 && p == 0 {
        // w = 0 is removable for a = 1 (the two gamma poles cancel)
        return false;
    }
    true
}

/// Complex e^z − 1 without cancellation for small |z|.
fn expm1_c(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        z * (Complex64::new(1.0, 0.0) + z / 2.0 * (Complex64::new(1.0, 0.0) + z / 3.0))
    } else {
        z.exp() - 1.0
    }
}

/// Incomplete integral ∫_0^a (1−t²)^{w/2−1} dt for complex w, |a| < 1.
/// Near |a| → 1 the substitution t = sin u regularizes the endpoint.
fn incomplete_integral(a: f64, w: Complex64) -> Result<Complex64> {
    let half = w / 2.0 - 1.0;
    if a.abs() <= 0.9 {
        quad::integrate_complex(
            |t| (half * (1.0 - t * t).ln()).exp(),
            0.0,
            a,
            1e-14,
            1e-12,
        )
    } else {
        // ∫_0^{asin a} cos(u)^{w-1} du
        let expo = w - 1.0;
        quad::integrate_complex(
            |u| (expo * u.cos().ln()).exp(),
            0.0,
            a.asin(),
            1e-14,
            1e-12,
        )
    }
}

/// 𝓜F_a(w), meromorphic in w with simple poles at the nonpositive integers
/// (odd negative integers only when a = 0; w = 0 removable when a = 1).
pub fn mellin_f(a: f64, w: Complex64) -> Result<MellinFValue> {
    check_a(a)?;
    let nearest = w.re.round() as i64;
    let dist = (w - Complex64::new(nearest as f64, 0.0)).norm();
    if is_pole_of_mellin_f(a, nearest) && dist <= 1e-8 {
        return Err(Error::PoleProximity {
            nearest_pole: nearest,
            distance: dist,
        });
    }
    let nearest_pole = if is_pole_of_mellin_f(a, nearest) && dist < 0.5 {
        Some(nearest)
    } else {
        None
    };
    let value = if a == 0.0 {
        gamma_complex((w + 1.0) / 2.0)? / (2.0 * PI.sqrt())
    } else if (a - 1.0).abs() < 1e-12 {
        mellin_f1(w)?
    } else {
        // (1/4a)[ (1−(1−a²)^{−w/2}) Γ(w/2)
        //        + (2/√π)(1−a²)^{−w/2} ∫_0^a (1−t²)^{w/2−1} dt Γ((w+1)/2) ]
        let l1ma2 = (-a * a).ln_1p(); // ln(1−a²)
        let pow_term = -expm1_c(-w / 2.0 * l1ma2); // 1 − (1−a²)^{−w/2}
        let g_half = gamma_complex(w / 2.0)?;
        let g_shift = gamma_complex((w + 1.0) / 2.0)?;
        let inc = incomplete_integral(a, w)?;
        let scale = (-w / 2.0 * l1ma2).exp(); // (1−a²)^{−w/2}
        (pow_term * g_half + 2.0 / PI.sqrt() * scale * inc * g_shift) / (4.0 * a)
    };
    Ok(MellinFValue {
        a,
        w,
        value,
        nearest_pole,
    })
}

/// 𝓜F_1(w) = (1/4)[Γ(w/2) − (2/(w√π)) Γ((w+1)/2)], with the removable
/// singularity at w = 0 handled by the rearrangement
/// (1/4)·[2Γ(w/2+1) − (2/√π)Γ((w+1)/2)]/w.
fn mellin_f1(w: Complex64) -> Result<Complex64> {
    if w.norm() > 0.05 {
        let g_half = gamma_complex(w / 2.0)?;
        let g_shift = gamma_complex((w + 1.0) / 2.0)?;
        Ok((g_half - 2.0 / (w * PI.sqrt()) * g_shift) / 4.0)
    } else {
        // n(w) = 2Γ(w/2+1) − (2/√π)Γ((w+1)/2) vanishes at 0; use the Taylor
        // expansion of n around 0 through the digamma derivatives.
        let g1 = gamma_complex(w / 2.0 + 1.0)?;
        let g2 = gamma_complex((w + 1.0) / 2.0)?;
        let n = 2.0 * g1 - 2.0 / PI.sqrt() * g2;
        if w.norm() < 1e-9 {
            // n'(0) = 2 ln 2 exactly
            return Ok(Complex64::new(2.0f64.ln() / 2.0, 0.0));
        }
        Ok(n / (4.0 * w))
    }
}

/// Res₁ 𝓜F_a(−k) for k ∈ Z₊ from the closed formulas, with the stated
/// limits at a ∈ {0, 1}.
pub fn mellin_f_residue(a: f64, k: u32) -> Result<f64> {
    check_a(a)?;
    let l = (k / 2) as i32;
    let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
    let mut l_fact = 1.0f64;
    for j in 1..=l {
        l_fact *= j as f64;
    }
    if a.abs() < 1e-6 {
        // a = 0 limits
        if k % 2 == 0 {
            return Ok(0.0);
        }
        return Ok(sign / (PI.sqrt() * l_fact));
    }
    if (1.0 - a).abs() < 1e-9 {
        // a = 1 limits
        if k % 2 == 0 {
            if l == 0 {
                return Ok(0.0);
            }
            return Ok(sign / (l_fact * 2.0));
        }
        return Ok(sign / (l_fact * PI.sqrt() * (2.0 * l as f64 + 1.0)));
    }
    if k % 2 == 0 {
        // ((-1)^l / (l! 2a)) (1 − (1−a²)^l)
        let one_minus = -((l as f64) * (-a * a).ln_1p()).exp_m1();
        Ok(sign / (l_fact * 2.0 * a) * one_minus)
    } else {
        // ((-1)^l / (l! √π a)) (1−a²)^{l+1/2} ∫_0^a (1−t²)^{-l-3/2} dt
        let expo = -(l as f64) - 1.5;
        let integral = if a.abs() <= 0.9 {
            quad::integrate(|t| (expo * (-t * t).ln_1p()).exp(), 0.0, a, 1e-15, 1e-13)?
        } else {
            // t = sin u: ∫ cos(u)^{-2l-2} du
            quad::integrate(
                |u| u.cos().powi(-2 * l - 2),
                0.0,
                a.asin(),
                1e-15,
                1e-13,
            )?
        };
        let prefactor = ((l as f64 + 0.5) * (-a * a).ln_1p()).exp();
        Ok(sign / (l_fact * PI.sqrt() * a) * prefactor * integral)
    }
}

/// Direct numerical Mellin transform ∫_0^∞ x^{w-1} F_a(x) dx, convergent for
/// Re w > 0. Used as the independent oracle for `mellin_f`.
pub fn mellin_f_by_quadrature(a: f64, w: Complex64) -> Result<Complex64> {
    check_a(a)?;
    if w.re <= 0.0 {
        return Err(Error::Domain(
            "direct Mellin integral needs Re w > 0".into(),
        ));
    }
    quad::integrate_complex(
        |x| {
            if x <= 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                ((w - 1.0) * x.ln()).exp() * f_a_closed(a, x)
            }
        },
        0.0,
        16.0 + 2.0 * w.norm().sqrt(),
        1e-14,
        1e-12,
    )
}

/// Contour-integral residue oracle: (1/2πi) ∮ 𝓜F_a on a circle of radius r
/// around −k, by the trapezoid rule (spectrally accurate for the analytic
/// integrand).
pub fn mellin_f_residue_by_contour(a: f64, k: u32, radius: f64, points: usize) -> Result<f64> {
    let center = Complex64::new(-(k as f64), 0.0);
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..points {
        let phi = 2.0 * PI * j as f64 / points as f64;
        let z = center + Complex64::from_polar(radius, phi);
        let val = mellin_f(a, z)?.value;
        // dw = i r e^{iφ} dφ; (1/2πi)∮ f dw = (r/2π)∫ f e^{iφ} dφ
        acc += val * Complex64::from_polar(1.0, phi);
    }
    let res = acc * radius / points as f64;
    Ok(res.re)
}

/// log-Γ based magnitude of Γ((w+1)/2), used by decay checks on vertical
/// strips.
pub fn gamma_strip_magnitude(w: Complex64) -> f64 {
    ln_gamma_complex((w + 1.0) / 2.0).re.exp()
}
