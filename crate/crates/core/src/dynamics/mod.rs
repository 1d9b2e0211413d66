//! Hamiltonian trajectories: integration, action, boundary-value shooting
//! and asymptotic (p-limit, channel) analysis.

mod asymptotics;
mod integrate;
mod potential;
mod rk;
mod shoot;

pub use asymptotics::{
    classify_channel, p_limit, ChannelOutcome, ChannelPartition, ChannelTolerances, PLimitReport,
};
pub use integrate::{
    action_along, advance, integrate, integrate_variational, ActionQuadrature, Integrator,
    PhasePoint, StepControl, Trajectory, VariationalTrajectory,
};
pub use potential::{
    Approach, HamiltonianSpec, PairTerm, Potential, RadialPotential, TabulatedRadial,
};
pub use shoot::{
    refine_branch, shoot_boundary, BoundaryBranch, MomentumGrid, ShootOutcome, ShootSettings,
};

pub(crate) use potential::norm;
pub(crate) use rk::{dopri5, RkOptions, RkStop};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("invalid hamiltonian: {0}")]
    InvalidSpec(String),
    #[error("expected {expected} coordinates, got {positions} positions and {momenta} momenta")]
    ShapeMismatch {
        expected: usize,
        positions: usize,
        momenta: usize,
    },
    #[error("time span must be increasing, got {start} -> {end}")]
    InvalidSpan { start: f64, end: f64 },
    #[error("{} at t = {time}: separation {distance:e} below r_min", describe_singularity(*.first, *.second))]
    Singularity {
        first: usize,
        second: Option<usize>,
        time: f64,
        distance: f64,
    },
    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },
    #[error("step limit reached at t = {time}")]
    StepLimit { time: f64 },
    #[error("relative energy drift {drift:e} exceeds {tolerance:e}")]
    EnergyDrift { drift: f64, tolerance: f64 },
    #[error("action quadrature needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("simpson quadrature needs an odd number of evenly spaced samples")]
    NonUniformSamples,
    #[error("boundary shooting failed: {}", .failures.join("; "))]
    ShootFailed { failures: Vec<String> },
}

fn describe_singularity(first: usize, second: Option<usize>) -> String {
    match second {
        Some(j) => format!("particles {first} and {j} collide"),
        None => format!("particle {first} hits the force center"),
    }
}
