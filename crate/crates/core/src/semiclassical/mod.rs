//! Van Vleck weights, Maslov indices and the semiclassical density on final
//! positions (`hbar = 1`).

mod fringe;

pub use fringe::{fringe_profile, FringeProfile, FringeRow, TransverseSlitModel, TwoBranchModel};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    action_along, refine_branch, shoot_boundary, ActionQuadrature, BoundaryBranch, DynamicsError,
    HamiltonianSpec, ShootSettings, Trajectory, VariationalTrajectory,
};

/// Determinants smaller than this mark a caustic.
pub const CAUSTIC_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemiclassicalError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("caustic: determinant {determinant:e}")]
    Caustic { determinant: f64 },
    #[error("no classical branch reaches the endpoint")]
    Unreachable,
    #[error("invalid branch: {0}")]
    InvalidBranch(String),
    #[error("density {0:e} is negative beyond roundoff")]
    NegativeDensity(f64),
    #[error("fringe model: {0}")]
    Model(String),
}

/// The two endpoints of a boundary-value problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Endpoints {
    pub x1: Vec<f64>,
    pub t1: f64,
    pub x2: Vec<f64>,
    pub t2: f64,
}

/// One classical path between fixed endpoints with its semiclassical data.
#[derive(Debug, Clone)]
pub struct Branch {
    pub trajectory: Option<Trajectory>,
    pub action: f64,
    /// `|det d^2 W / dx1 dx2|`.
    pub vanvleck: f64,
    pub maslov: u32,
}

impl Branch {
    pub fn new(action: f64, vanvleck: f64, maslov: u32) -> Result<Self, SemiclassicalError> {
        if !(vanvleck > 0.0 && vanvleck.is_finite()) || !action.is_finite() {
            return Err(SemiclassicalError::InvalidBranch(format!(
                "action {action}, van vleck factor {vanvleck}"
            )));
        }
        Ok(Self {
            trajectory: None,
            action,
            vanvleck,
            maslov,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VanVleckRoute {
    /// Central differences of re-shot initial momenta.
    FiniteDifference { step: Option<f64> },
    /// `1 / |det dx(t2)/dp0|` from the variational equations.
    #[default]
    Monodromy,
}

/// `|det dp0/dx2|` by central differences: each endpoint coordinate is
/// moved by `±h` and the branch is followed by Newton continuation.
/// The default step is `1e-5 (1 + |x2_k|)`.
pub fn vanvleck_factor(
    spec: &HamiltonianSpec,
    branch: &BoundaryBranch,
    ends: &Endpoints,
    step: Option<f64>,
    settings: &ShootSettings,
) -> Result<f64, SemiclassicalError> {
    let n = ends.x2.len();
    let mut jac = nalgebra::DMatrix::zeros(n, n);
    for k in 0..n {
        let h = step.unwrap_or(1e-5 * (1.0 + ends.x2[k].abs()));
        let shifted = |sign: f64| -> Result<Vec<f64>, DynamicsError> {
            let mut x2 = ends.x2.clone();
            x2[k] += sign * h;
            let b = refine_branch(
                spec,
                &ends.x1,
                ends.t1,
                &x2,
                ends.t2,
                &branch.initial_momentum,
                settings,
            )?;
            Ok(b.initial_momentum)
        };
        let (plus, minus) = (shifted(1.0)?, shifted(-1.0)?);
        for r in 0..n {
            jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    let det = jac.determinant().abs();
    if !(det >= CAUSTIC_THRESHOLD) || !det.is_finite() {
        return Err(SemiclassicalError::Caustic { determinant: det });
    }
    Ok(det)
}

/// The Van Vleck factor from the monodromy matrix of the branch.
pub fn vanvleck_monodromy(branch: &VariationalTrajectory) -> Result<f64, SemiclassicalError> {
    let det = branch.final_position_jacobian().determinant().abs();
    if !(det >= CAUSTIC_THRESHOLD) {
        return Err(SemiclassicalError::Caustic { determinant: det });
    }
    Ok(1.0 / det)
}

/// Number of sign changes of `det dx(t)/dp0` along the branch. Conjugate
/// points where several eigenvalues vanish together with even multiplicity
/// are not seen by this count.
pub fn maslov_index(branch: &VariationalTrajectory) -> Result<u32, SemiclassicalError> {
    let dets: Vec<f64> = branch
        .position_jacobians
        .iter()
        .skip(1)
        .map(|j| j.determinant())
        .collect();
    let scale = dets.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    let last = *dets
        .last()
        .ok_or_else(|| SemiclassicalError::InvalidBranch("empty trajectory".into()))?;
    if !(last.abs() > 1e-12 * scale) {
        return Err(SemiclassicalError::Caustic { determinant: last });
    }
    let mut count = 0;
    let mut prev_sign = 0.0;
    for d in dets {
        if d == 0.0 {
            continue;
        }
        let s = d.signum();
        if prev_sign != 0.0 && s != prev_sign {
            count += 1;
        }
        prev_sign = s;
    }
    Ok(count)
}

/// Attaches action, Van Vleck factor and Maslov index to a shot branch.
pub fn branch_from_boundary(
    spec: &HamiltonianSpec,
    shot: &BoundaryBranch,
    ends: &Endpoints,
    route: VanVleckRoute,
    settings: &ShootSettings,
) -> Result<Branch, SemiclassicalError> {
    let vanvleck = match route {
        VanVleckRoute::Monodromy => vanvleck_monodromy(&shot.variational)?,
        VanVleckRoute::FiniteDifference { step } => {
            vanvleck_factor(spec, shot, ends, step, settings)?
        }
    };
    let maslov = maslov_index(&shot.variational)?;
    let action = action_along(shot.trajectory(), ActionQuadrature::Hermite)?;
    Ok(Branch {
        trajectory: Some(shot.trajectory().clone()),
        action,
        vanvleck,
        maslov,
    })
}

/// Shoots every branch between the endpoints and equips each one.
/// An empty list means the endpoint is classically unreachable.
pub fn semiclassical_branches(
    spec: &HamiltonianSpec,
    ends: &Endpoints,
    route: VanVleckRoute,
    settings: &ShootSettings,
) -> Result<Vec<Branch>, SemiclassicalError> {
    let outcome = shoot_boundary(spec, &ends.x1, ends.t1, &ends.x2, ends.t2, settings)?;
    outcome
        .branches
        .iter()
        .map(|b| branch_from_boundary(spec, b, ends, route, settings))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDensity {
    pub value: f64,
    pub unreachable: bool,
}

/// `rho_FC = sum_i d_i`.
pub fn classical_density(branches: &[Branch]) -> ClassicalDensity {
    ClassicalDensity {
        value: branches.iter().map(|b| b.vanvleck).sum(),
        unreachable: branches.is_empty(),
    }
}

fn phase(b: &Branch) -> f64 {
    b.action - b.maslov as f64 * PI / 2.0
}

/// `(2 pi i)^(-n/2) sum_i d_i^(1/2) exp(i (W_i - M_i pi / 2))` for `n`
/// endpoint coordinates.
pub fn semiclassical_propagator(
    branches: &[Branch],
    coords: usize,
) -> Result<Complex64, SemiclassicalError> {
    if branches.is_empty() {
        return Err(SemiclassicalError::Unreachable);
    }
    let n = coords as f64;
    let prefactor = Complex64::from_polar((2.0 * PI).powf(-n / 2.0), -PI * n / 4.0);
    let sum: Complex64 = branches
        .iter()
        .map(|b| Complex64::from_polar(b.vanvleck.sqrt(), phase(b)))
        .sum();
    Ok(prefactor * sum)
}

/// `rho_FI = sum_{i != j} (d_i d_j)^(1/2) cos((W_i - W_j) - (M_i - M_j) pi / 2)`.
pub fn interference_term(branches: &[Branch]) -> f64 {
    let mut total = 0.0;
    for (i, a) in branches.iter().enumerate() {
        for b in &branches[i + 1..] {
            total += 2.0 * (a.vanvleck * b.vanvleck).sqrt() * (phase(a) - phase(b)).cos();
        }
    }
    total
}

/// `rho_FQ = (rho_FC + rho_FI) / (2 pi)^n`.
pub fn quantum_density(branches: &[Branch], coords: usize) -> Result<f64, SemiclassicalError> {
    let raw = (classical_density(branches).value + interference_term(branches))
        / (2.0 * PI).powi(coords as i32);
    if raw < -1e-12 {
        return Err(SemiclassicalError::NegativeDensity(raw));
    }
    Ok(raw.max(0.0))
}
