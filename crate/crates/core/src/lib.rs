//! Weyl-Titchmarsh analysis for Schrodinger operators with strongly singular
//! potentials: entire solution systems, singular Weyl functions, spectral
//! measures and transforms, generalized Nevanlinna diagnostics and a
//! Borg-Marchenko comparator.

pub mod bm;
pub mod eigen;
pub mod error;
pub mod golden;
pub mod io;
pub mod models;
pub mod nevanlinna;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod schrodinger;
pub mod specfun;
pub mod spectral;
pub mod weyl;

pub use error::{Error, ErrorKind, Result};
pub use num_complex::Complex64;
