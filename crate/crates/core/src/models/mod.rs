mod bessel;
mod limit_circle;
mod perturbed;
mod soliton;

pub use bessel::BesselModel;
pub use limit_circle::{lc_singular_m, LimitCircleSystem};
pub use perturbed::perturbed_bessel;
pub use soliton::{SolitonFields, SolitonModel};
