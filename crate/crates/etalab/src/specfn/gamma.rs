//! Complex gamma function (Lanczos), real polygamma functions, and Taylor
//! expansions of 1/Γ used by the Laurent bookkeeping in the expansion
//! machinery.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};

// Lanczos coefficients, g = 607/128, n = 15 (Godfrey). Good for ~15 digits.
const LANCZOS_G: f64 = 607.0 / 128.0;
const LANCZOS: [f64; 15] = [
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
];

fn lanczos_sum(z: Complex64) -> Complex64 {
    let mut s = Complex64::new(LANCZOS[0], 0.0);
    for (k, &c) in LANCZOS.iter().enumerate().skip(1) {
        s += c / (z + k as f64 - 1.0);
    }
    s
}

/// log Γ(z) for complex z, principal branch away from the negative reals.
pub fn ln_gamma_complex(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z)Γ(1−z) = π/sin(πz)
        let pi_c = Complex64::new(PI, 0.0);
        return (pi_c / (pi_c * z).sin()).ln() - ln_gamma_complex(Complex64::new(1.0, 0.0) - z);
    }
    let zm1 = z - 1.0;
    let base = zm1 + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (zm1 + 0.5) * base.ln() - base + lanczos_sum(z).ln()
}

/// Γ(z) for complex z. Errors at the poles z ∈ {0, −1, −2, …}.
pub fn gamma_complex(z: Complex64) -> Result<Complex64> {
    if z.im == 0.0 && z.re <= 0.0 && z.re == z.re.floor() {
        let k = (-z.re) as i64;
        return Err(Error::Pole(format!(
            "gamma pole at {} (residue {})",
            z.re,
            gamma_pole_residue(k as u32)
        )));
    }
    Ok(ln_gamma_complex(z).exp())
}

/// Residue of Γ at −k: (−1)^k / k!.
pub fn gamma_pole_residue(k: u32) -> f64 {
    let mut r = 1.0f64;
    for j in 1..=k {
        r /= j as f64;
    }
    if k % 2 == 0 {
        r
    } else {
        -r
    }
}

pub(crate) const BERNOULLI_2N: [f64; 12] = [
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
    -3617.0 / 510.0,
    43867.0 / 798.0,
    -174611.0 / 330.0,
    854513.0 / 138.0,
    -236364091.0 / 2730.0,
];

/// Digamma ψ(x) for real x not a nonpositive integer.
pub fn digamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.0 {
        // reflection ψ(1−x) − ψ(x) = π cot(πx)
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut s = x.ln() - 0.5 * inv;
    let mut p = inv2;
    for (n, &b) in BERNOULLI_2N.iter().enumerate().take(8) {
        s -= b / (2.0 * (n as f64 + 1.0)) * p;
        p *= inv2;
    }
    acc + s
}

/// Trigamma ψ'(x) for real x > 0.
/// ψ'(x) = 1/x + 1/(2x²) + Σ_{n≥1} B_{2n} x^{-2n-1} for large x.
pub fn trigamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let mut s = inv + 0.5 * inv2;
    let mut q = inv2 * inv;
    for &b in BERNOULLI_2N.iter().take(8) {
        s += b * q;
        q *= inv2;
    }
    acc + s
}

/// ψ''(x) for real x > 0.
pub fn tetragamma(x: f64) -> f64 {
    let mut x = x;
    let mut acc = 0.0;
    while x < 12.0 {
        acc -= 2.0 / (x * x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ψ''(x) = -1/x² - 1/x³ - Σ_{n≥1} (2n+1) B_{2n} x^{-2n-2}
    let mut s = -inv2 - inv2 * inv;
    let mut q = inv2 * inv2;
    for (n, &b) in BERNOULLI_2N.iter().enumerate().take(8) {
        s -= (2.0 * (n as f64 + 1.0) + 1.0) * b * q;
        q *= inv2;
    }
    acc + s
}

/// Taylor coefficients of u ↦ 1/Γ(z0 + u/2) around u = 0, up to `order`
/// (inclusive), for real z0 (any value, including nonpositive integers where
/// 1/Γ has a zero). Supported up to order 3.
pub fn recip_gamma_taylor(z0: f64, order: usize) -> Vec<f64> {
    assert!(order <= 3, "recip_gamma_taylor supports order <= 3");
    // Lift into the region w0 >= 1.5 with the exact polynomial factor
    // 1/Γ(z) = z (z+1) ⋯ (z+M−1) / Γ(z+M).
    let m = if z0 >= 1.5 {
        0usize
    } else {
        (1.5 - z0).ceil() as usize
    };
    let w0 = z0 + m as f64;
    // Taylor of h(u) = 1/Γ(w0 + u/2): h = e^{f}, f = −lnΓ(w0 + u/2).
    let psi0 = digamma(w0);
    let psi1 = trigamma(w0);
    let psi2 = tetragamma(w0);
    let f1 = -psi0 / 2.0;
    let f2 = -psi1 / 4.0;
    let f3 = -psi2 / 8.0;
    let h0 = 1.0 / ln_gamma_complex(Complex64::new(w0, 0.0)).exp().re;
    let h = [
        h0,
        f1 * h0,
        (f2 + f1 * f1) / 2.0 * h0,
        (f3 + 3.0 * f1 * f2 + f1 * f1 * f1) / 6.0 * h0,
    ];
    // Polynomial Π_{j=0}^{M−1} (z0 + j + u/2), coefficients in u.
    let mut poly = vec![1.0f64];
    for j in 0..m {
        let a = z0 + j as f64;
        let mut next = vec![0.0; poly.len() + 1];
        for (k, &pk) in poly.iter().enumerate() {
            next[k] += pk * a;
            next[k + 1] += pk * 0.5;
        }
        poly = next;
    }
    // product, truncated
    let mut out = vec![0.0; order + 1];
    for (k, o) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for j in 0..=k.min(poly.len() - 1) {
            if k - j <= 3 {
                s += poly[j] * h[k - j];
            }
        }
        *o = s;
    }
    out
}

/// Laurent coefficients of Γ(z0 + u/2) at a pole z0 = −q (q ∈ Z₊), i.e.
/// Γ(z0+u/2) = c₋₁/u + c₀ + c₁ u + …, returned as (c₋₁, [c₀, c₁, …]) up to
/// `order` regular terms. Derived by series inversion of 1/Γ.
pub fn gamma_laurent_at_pole(q: u32, order: usize) -> (f64, Vec<f64>) {
    let g = recip_gamma_taylor(-(q as f64), 3.min(order + 2));
    // 1/Γ = g1 u + g2 u² + g3 u³ (g0 = 0); Γ = (1/g1) u^{-1} / (1 + (g2/g1)u + (g3/g1)u²)
    let g1 = g[1];
    let a = g[2] / g1;
    let b = if g.len() > 3 { g[3] / g1 } else { 0.0 };
    // 1/(1 + a u + b u²) = 1 − a u + (a² − b) u² − …
    let inv = [1.0, -a, a * a - b];
    let cm1 = 1.0 / g1;
    let mut reg = Vec::with_capacity(order);
    for k in 0..order {
        reg.push(cm1 * inv.get(k + 1).copied().unwrap_or(0.0));
    }
    (cm1, reg)
}
