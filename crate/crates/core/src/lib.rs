//! Numerical laboratory for capacity-style area bounds: closed planar curves
//! of bounded curvature, magnetic flows on the torus, radially symmetric model
//! Hamiltonians, and Morse–Bott spectral sequences over the two-element field.

pub mod config;
pub mod curve_bounds;
pub mod gf2;
pub mod magnetic;
pub mod model;
pub mod ode;
pub mod report;
pub mod roots;
pub mod scenario;
pub mod spectral;
