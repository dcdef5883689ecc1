//! Potentials, regular solutions near the singular endpoint and ODE
//! propagation of `-u'' + q u = z u` for complex `z`.

pub mod expr;
mod potential;
mod pruefer;
mod solve;

pub use potential::{Potential, Tail};
pub use pruefer::{check_kneser, pruefer_angle, pruefer_count, KneserReport};
pub use solve::{
    double_factorial, integrate, lagrange_bracket, regular_solution_phi,
    second_solution_theta_numeric, BoundaryCondition, SolutionSample,
};
pub(crate) use solve::{propagate, segments};
