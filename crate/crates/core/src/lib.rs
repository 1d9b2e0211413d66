//! Boundary-condition measures on classical path spaces and the numerical
//! machinery around them: Bernoulli-shift statistics, Hamiltonian boundary
//! value problems, semiclassical densities, classical scattering, decay
//! kinematics and preinteractive correlations.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod correlations;
pub mod decay;
pub mod dynamics;
pub mod export;
pub mod measure_lab;
pub mod quadrature;
pub mod scattering;
pub mod semiclassical;
