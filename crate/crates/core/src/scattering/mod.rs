//! Classical scattering by a central potential: deflection functions,
//! branch inversion, cross-sections and density transfer between the
//! incidence plane and the sphere of final directions.

mod cross_section;
mod scan;

pub use cross_section::{
    classical_cross_section, cross_section_from_measure, cross_section_table,
    pullback_incidence_density, rutherford, scattered_flux, transfer_density, CrossSectionRow,
    CrossSectionTable, IncidenceDensity, Lebesgue, MeasureCrossSection, PathMeasure,
    TransferredMeasure,
};
pub use scan::{invert_branches, AngleFlag, DeflectionScan, ImpactBranch, Inversion, Segment};

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dynamics::{dopri5, DynamicsError, RadialPotential, RkOptions, RkStop};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScatteringError {
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("invalid scattering problem: {0}")]
    InvalidProblem(String),
    #[error(
        "trajectory with b = {b} is still inside the interaction region at t = {time} (orbiting)"
    )]
    Orbiting { b: f64, time: f64 },
    #[error("theta = {theta} lies in a {flag:?} guard band")]
    Flagged { theta: f64, flag: AngleFlag },
    #[error("{count} branches reach theta = {theta}; the pullback is only defined for one")]
    MultiBranch { theta: f64, count: usize },
    #[error("no impact parameter reaches theta = {theta}")]
    NoBranch { theta: f64 },
}

/// Central interaction seen by the projectile.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CentralPotential {
    /// Served analytically: `theta = 2 acos(b / R)`.
    HardSphere { radius: f64 },
    /// Integrated numerically in the scattering plane.
    Smooth { radial: RadialPotential },
}

/// One projectile species at fixed energy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringProblem {
    pub potential: CentralPotential,
    pub energy: f64,
    #[serde(default = "unit_mass")]
    pub mass: f64,
    /// Relative tolerance of the trajectory integration.
    #[serde(default = "default_rtol")]
    pub rtol: f64,
}

fn unit_mass() -> f64 {
    1.0
}

fn default_rtol() -> f64 {
    1e-11
}

/// Scattering angle at one impact parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeflectionSample {
    pub b: f64,
    pub theta: f64,
    pub dtheta_db: f64,
    pub branch_id: usize,
}

/// Folds a signed rotation of the momentum onto `[0, pi]`.
pub fn fold_angle(signed: f64) -> f64 {
    let a = signed.abs() % (2.0 * PI);
    if a > PI {
        2.0 * PI - a
    } else {
        a
    }
}

fn wrap(delta: f64) -> f64 {
    let mut d = delta % (2.0 * PI);
    if d > PI {
        d -= 2.0 * PI;
    } else if d < -PI {
        d += 2.0 * PI;
    }
    d
}

enum Exit {
    Left,
    Singular(f64),
}

impl ScatteringProblem {
    pub fn new(potential: CentralPotential, energy: f64) -> Result<Self, ScatteringError> {
        let p = Self {
            potential,
            energy,
            mass: 1.0,
            rtol: default_rtol(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ScatteringError> {
        if !(self.energy > 0.0 && self.energy.is_finite()) {
            return Err(ScatteringError::InvalidProblem(
                "energy must be positive".into(),
            ));
        }
        if !(self.mass > 0.0) {
            return Err(ScatteringError::InvalidProblem(
                "mass must be positive".into(),
            ));
        }
        match &self.potential {
            CentralPotential::HardSphere { radius } if !(*radius > 0.0) => Err(
                ScatteringError::InvalidProblem("hard-sphere radius must be positive".into()),
            ),
            CentralPotential::HardSphere { .. } => Ok(()),
            CentralPotential::Smooth { radial } => {
                radial.validate()?;
                if self.horizon().is_none() {
                    return Err(ScatteringError::InvalidProblem(
                        "potential does not decay, no asymptotic region".into(),
                    ));
                }
                Ok(())
            }
        }
    }

    /// Radius beyond which the potential is negligible against the energy.
    pub fn horizon(&self) -> Option<f64> {
        match &self.potential {
            CentralPotential::HardSphere { radius } => Some(*radius),
            CentralPotential::Smooth { radial } => radial.decay_radius(1e-15 * self.energy),
        }
    }

    /// A length below which the interaction acts, used to seed scans.
    pub fn range(&self) -> f64 {
        match &self.potential {
            CentralPotential::HardSphere { radius } => *radius,
            CentralPotential::Smooth { radial } => radial.length_scale(),
        }
    }

    /// Signed rotation of the momentum between the incoming and outgoing
    /// asymptotes.
    pub fn signed_deflection(&self, b: f64) -> Result<f64, ScatteringError> {
        if !(b >= 0.0) {
            return Err(ScatteringError::InvalidProblem(format!(
                "impact parameter {b} is negative"
            )));
        }
        let radial = match &self.potential {
            CentralPotential::HardSphere { radius } => {
                return Ok(if b < *radius {
                    2.0 * (b / radius).acos()
                } else {
                    0.0
                });
            }
            CentralPotential::Smooth { radial } => radial,
        };
        let horizon = self.horizon().expect("validated");
        if b >= horizon {
            return Ok(0.0);
        }
        let m = self.mass;
        let x0 = -(horizon * horizon - b * b).sqrt();
        let p0 = (2.0 * m * (self.energy - radial.value(horizon))).sqrt();
        let speed = p0 / m;
        let t_max = 200.0 * horizon / speed;
        let r_min = 1e-9 * radial.length_scale();
        let opts = RkOptions {
            rtol: self.rtol,
            atol: self.rtol * radial.length_scale().min(p0),
            max_step: f64::INFINITY,
            fixed_step: None,
            max_steps: 10_000_000,
        };
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            let r = y[0].hypot(y[1]);
            let (_, dv, _) = radial.eval(r);
            dy[0] = y[2] / m;
            dy[1] = y[3] / m;
            dy[2] = -dv * y[0] / r;
            dy[3] = -dv * y[1] / r;
        };
        let mut angle = 0.0f64;
        let mut last = 0.0f64;
        let result = dopri5(rhs, 0.0, &[x0, b, p0, 0.0], t_max, &opts, |_, y| {
            let a = y[3].atan2(y[2]);
            angle += wrap(a - last);
            last = a;
            let r = y[0].hypot(y[1]);
            if r < r_min && radial.is_singular() {
                return Err(Exit::Singular(r));
            }
            if r > horizon && y[0] * y[2] + y[1] * y[3] > 0.0 {
                return Err(Exit::Left);
            }
            Ok(())
        });
        match result {
            Err(RkStop::Observer(Exit::Left)) => Ok(angle),
            Err(RkStop::Observer(Exit::Singular(r))) => Err(DynamicsError::Singularity {
                first: 0,
                second: None,
                time: f64::NAN,
                distance: r,
            }
            .into()),
            Ok(_) | Err(RkStop::TooManySteps { .. }) => {
                Err(ScatteringError::Orbiting { b, time: t_max })
            }
            Err(RkStop::StepUnderflow { t }) => {
                Err(DynamicsError::StepUnderflow { time: t }.into())
            }
        }
    }

    /// Scattering angle in `[0, pi]`.
    pub fn theta(&self, b: f64) -> Result<f64, ScatteringError> {
        Ok(fold_angle(self.signed_deflection(b)?))
    }

    /// `theta(b)` and its central-difference derivative.
    pub fn deflection_function(&self, b: f64) -> Result<DeflectionSample, ScatteringError> {
        let theta = self.theta(b)?;
        let dtheta_db = match &self.potential {
            CentralPotential::HardSphere { radius } if b < *radius => {
                -2.0 / (radius * radius - b * b).sqrt()
            }
            CentralPotential::HardSphere { .. } => 0.0,
            CentralPotential::Smooth { .. } => {
                let h = 1e-5 * self.range();
                if b > h {
                    (self.theta(b + h)? - self.theta(b - h)?) / (2.0 * h)
                } else {
                    (self.theta(b + h)? - theta) / h
                }
            }
        };
        Ok(DeflectionSample {
            b,
            theta,
            dtheta_db,
            branch_id: 0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    pub(crate) fn coulomb(screening: f64) -> ScatteringProblem {
        ScatteringProblem::new(
            CentralPotential::Smooth {
                radial: RadialPotential::ScreenedCoulomb {
                    strength: 1.0,
                    screening,
                },
            },
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn hard_sphere_limits() {
        let p = ScatteringProblem::new(CentralPotential::HardSphere { radius: 1.0 }, 1.0).unwrap();
        assert_eq!(p.theta(0.0).unwrap(), PI);
        assert!(p.theta(1.0 - 1e-12).unwrap() < 1e-5);
        assert_eq!(p.theta(2.0).unwrap(), 0.0);
    }

    #[test]
    fn coulomb_regime_matches_rutherford() {
        let p = coulomb(1000.0);
        let th = p.theta(0.5).unwrap();
        assert!((th - FRAC_PI_2).abs() < 1e-3, "{th}");
        // back-scatter at b = 0
        assert!((p.theta(0.0).unwrap() - PI).abs() < 1e-6);
    }

    #[test]
    fn derivative_matches_rutherford() {
        // b = cot(theta/2)/2  =>  dtheta/db = -4 / (1 + 4 b^2)
        let p = coulomb(1000.0);
        let s = p.deflection_function(0.5).unwrap();
        assert!((s.dtheta_db + 2.0).abs() < 1e-2, "{}", s.dtheta_db);
    }

    #[test]
    fn attraction_deflects_the_other_way() {
        let well = ScatteringProblem::new(
            CentralPotential::Smooth {
                radial: RadialPotential::GaussianWell {
                    depth: 0.5,
                    width: 1.0,
                },
            },
            1.0,
        )
        .unwrap();
        assert!(
            well.signed_deflection(0.7).unwrap() * coulomb(10.0).signed_deflection(0.7).unwrap()
                < 0.0
        );
        assert!(well.signed_deflection(0.0).unwrap().abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ScatteringProblem::new(CentralPotential::HardSphere { radius: 1.0 }, 0.0).is_err());
        assert!(ScatteringProblem::new(
            CentralPotential::Smooth {
                radial: RadialPotential::Spring { stiffness: 1.0 }
            },
            1.0
        )
        .is_err());
        assert!(coulomb(10.0).theta(-1.0).is_err());
    }

    #[test]
    fn fold_is_symmetric() {
        assert_eq!(fold_angle(-0.3), 0.3);
        assert!((fold_angle(1.5 * PI) - 0.5 * PI).abs() < 1e-15);
        assert!((fold_angle(-2.0 * PI - 0.1) - 0.1).abs() < 1e-12);
    }
}
