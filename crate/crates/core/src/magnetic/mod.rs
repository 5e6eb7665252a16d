//! Magnetic flows on the flat torus `ℝ²/ℤ²`: the reduced flow on an energy
//! level, its return map to `θ ≡ 0`, periodic orbits and the lower bound on
//! their symplectic area.

mod field;
mod flow;
mod orbits;

use thiserror::Error;

use crate::ode::IntegrationError;

pub use field::{field_extrema, Extrema, FourierMode, MagneticField};
pub use flow::{flow, poincare_return, wrap_unit, ReducedState, ReturnPoint, Stop, Trajectory};
pub use orbits::{
    area_bound_certificate, area_constant, build_orbit, energy_sweep, find_periodic_orbits,
    orbit_invariants, AreaCertificate, CertificateStatus, LevelReport, OrbitAreas, OrbitInvariants,
    OrbitOptions, OrbitRecord, OrbitSearch, PeriodicOrbit, SweepReport,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MagneticError {
    #[error("field must be positive everywhere (minimum {min})")]
    NondegeneracyViolation { min: f64 },
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("energy must be positive, got {0}")]
    InvalidEnergy(f64),
    #[error("θ-span must be positive, got {0}")]
    InvalidStop(f64),
    #[error("orbit is not contractible (lattice displacement {displacement:?})")]
    NonContractible { displacement: [i64; 2] },
    #[error("rotation {value} is not an integer")]
    RotationNotInteger { value: f64 },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
}
