//! Adaptive Gauss–Kronrod quadrature (G7/K15) for real and complex-valued
//! integrands on finite intervals, plus helpers for the semi-infinite
//! integrals that show up in the kernel and Mellin computations.

use num_complex::Complex64;

use crate::error::{Error, Result};

// 15-point Kronrod nodes on [-1, 1] (symmetric; only nonnegative half stored)
// with Kronrod weights, and the embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy)]
struct PanelResult {
    value: Complex64,
    error: f64,
}

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> PanelResult {
    let h = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut resk = Complex64::new(0.0, 0.0);
    let mut resg = Complex64::new(0.0, 0.0);
    let fc = f(mid);
    resk += fc * WGK[7];
    resg += fc * WG[3];
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(mid - x);
        let f2 = f(mid + x);
        resk += (f1 + f2) * WGK[j];
        if j % 2 == 1 {
            // Gauss points are the odd-index Kronrod points.
            resg += (f1 + f2) * WG[j / 2];
        }
    }
    PanelResult {
        value: resk * h,
        error: ((resk - resg) * h).norm(),
    }
}

/// Adaptive quadrature of a complex integrand over [a, b].
///
/// Splits the worst panel until the summed error estimate satisfies the
/// absolute or relative tolerance, or errors out after `max_panels`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Complex64> {
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let max_panels = 2000usize;
    let mut panels: Vec<(f64, f64, PanelResult)> = vec![(a, b, gk15(&f, a, b))];
    let mut best_err = f64::INFINITY;
    let mut stall = 0usize;
    loop {
        let total: Complex64 = panels.iter().map(|p| p.2.value).sum();
        let err: f64 = panels.iter().map(|p| p.2.error).sum();
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok(total);
        }
        // The Kronrod error estimate bottoms out near machine precision;
        // stop splitting once it no longer improves.
        if err < 0.9 * best_err {
            best_err = err;
            stall = 0;
        } else {
            stall += 1;
        }
        if stall > 12 || panels.len() >= max_panels {
            if err <= 1e-9 * total.norm().max(abs_tol * 1e6) {
                return Ok(total);
            }
            return Err(Error::Numerical(format!(
                "quadrature failed to converge on [{a}, {b}]: error estimate {err:.3e}"
            )));
        }
        // split the panel with the largest error estimate
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2.error.total_cmp(&y.1 .2.error))
            .unwrap();
        let (pa, pb, _) = panels.swap_remove(worst);
        let pm = 0.5 * (pa + pb);
        panels.push((pa, pm, gk15(&f, pa, pm)));
        panels.push((pm, pb, gk15(&f, pm, pb)));
    }
}

/// Adaptive quadrature of a real integrand over [a, b].
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<f64> {
    integrate_complex(|x| Complex64::new(f(x), 0.0), a, b, abs_tol, rel_tol).map(|v| v.re)
}

/// Quadrature over [0, ∞) of an integrand known to be negligible beyond
/// `cutoff` (the caller supplies the truncation radius from an analytic
/// majorant). Integrates [0, cutoff] adaptively.
pub fn integrate_truncated<F: Fn(f64) -> f64>(
    f: F,
    cutoff: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64> {
    integrate(f, 0.0, cutoff, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn gaussian_integral() {
        let v = integrate(|x| (-x * x).exp(), 0.0, 12.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, PI.sqrt() / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn oscillatory() {
        let v = integrate(|x| (10.0 * x).cos(), 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert_relative_eq!(v, 10.0f64.sin() / 10.0, epsilon = 1e-13);
    }

    #[test]
    fn mild_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let v = integrate(|x| x.max(1e-300).powf(-0.5), 0.0, 1.0, 1e-10, 1e-10).unwrap();
        assert_relative_eq!(v, 2.0, epsilon = 1e-8);
    }
}
