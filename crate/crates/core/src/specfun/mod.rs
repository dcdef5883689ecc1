//! Special functions and entire-product primitives.

mod bessel;
pub(crate) mod dd;
mod incgamma;
mod product;

pub use bessel::{bessel_j, bessel_jy_scaled, bessel_series, bessel_y, SERIES_RADIUS};
pub(crate) use bessel::log_series;
pub use incgamma::incomplete_gamma_upper;
pub use product::{
    hadamard_eval, product_lower_bound_check, LowerBoundReport, ProductOptions, ZeroSequence,
};
pub use statrs::function::gamma::{digamma, gamma, ln_gamma};

/// Complex spectral parameter; principal branches cut along the negative real axis.
pub type ComplexPoint = num_complex::Complex64;
