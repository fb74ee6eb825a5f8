//! Scalar special functions backing the kernel and expansion machinery:
//! erfc/erfcx, the complex gamma function, Hurwitz zeta, and the profile
//! function F_a with its Mellin transform and residues.
//!
//! All functions are pure and thread-safe.

mod erf;
mod gamma;
mod mellinf;
mod zeta;

pub use erf::{erf, erfc, erfcx};
pub use gamma::{
    digamma, gamma_complex, gamma_laurent_at_pole, gamma_pole_residue, ln_gamma_complex,
    recip_gamma_taylor, tetragamma, trigamma,
};
pub use mellinf::{
    f_a_closed, f_a_eval, f_a_quadrature, gamma_strip_magnitude, mellin_f, mellin_f_by_quadrature,
    mellin_f_residue, mellin_f_residue_by_contour, FaMethod, MellinFValue,
};
pub use zeta::{hurwitz_zeta, hurwitz_zeta_real};
