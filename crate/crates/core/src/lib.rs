//! High-order unfitted finite elements in 2D: isoparametric interface
//! geometry mapping, Nitsche interface coupling and convergence tooling.

pub mod analysis;
pub mod basis;
pub mod cut;
pub mod error;
pub mod io;
pub mod isomap;
pub mod mesh;
pub mod nitsche;
pub mod quad;
pub mod solver;
pub mod space;

pub use error::{Error, Result};
