//! Two-branch interference profiles across a detection screen.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classical_density, interference_term, quantum_density, Branch, SemiclassicalError};
use crate::export::{fmt_f64, CsvTable};

/// A family of boundary problems indexed by the screen coordinate, each
/// with exactly two classical branches.
pub trait TwoBranchModel: Sync {
    /// Endpoint coordinates entering the propagator prefactor.
    fn coords(&self) -> usize;
    fn branches_at(&self, screen: f64) -> Result<Vec<Branch>, SemiclassicalError>;
}

/// Free flight from two point slits at `±s/2` to a screen at distance `L`
/// with longitudinal momentum `p`. The longitudinal motion is paraxial, so
/// the transit time is `T = m L / p` for both branches and only the
/// transverse action `m (x - y)^2 / 2T` differs between them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransverseSlitModel {
    pub mass: f64,
    pub momentum: f64,
    pub slit_separation: f64,
    pub screen_distance: f64,
}

impl TransverseSlitModel {
    pub fn validate(&self) -> Result<(), SemiclassicalError> {
        let ok = self.mass > 0.0
            && self.momentum > 0.0
            && self.screen_distance > 0.0
            && self.slit_separation >= 0.0;
        if !ok {
            return Err(SemiclassicalError::Model(format!(
                "{self:?} has a non-positive parameter"
            )));
        }
        Ok(())
    }

    pub fn transit_time(&self) -> f64 {
        self.mass * self.screen_distance / self.momentum
    }

    /// Stationary-phase fringe spacing `2 pi L / (p s)`.
    pub fn predicted_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.screen_distance / (self.momentum * self.slit_separation)
    }
}

impl TwoBranchModel for TransverseSlitModel {
    fn coords(&self) -> usize {
        1
    }

    fn branches_at(&self, x: f64) -> Result<Vec<Branch>, SemiclassicalError> {
        self.validate()?;
        let t = self.transit_time();
        let half = 0.5 * self.slit_separation;
        [-half, half]
            .iter()
            .map(|y| Branch::new(self.mass * (x - y).powi(2) / (2.0 * t), self.mass / t, 0))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeRow {
    pub screen_coordinate: f64,
    pub rho_fq: f64,
    pub rho_fc: f64,
    pub rho_fi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeProfile {
    pub rows: Vec<FringeRow>,
}

impl FringeProfile {
    /// Mean distance between successive maxima of `rho_FQ`, each located
    /// by a parabola through the three grid points around it.
    pub fn mean_spacing(&self) -> Option<f64> {
        let y: Vec<f64> = self.rows.iter().map(|r| r.rho_fq).collect();
        let x: Vec<f64> = self.rows.iter().map(|r| r.screen_coordinate).collect();
        let spread = y.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - y.iter().cloned().fold(f64::INFINITY, f64::min);
        if !(spread > 1e-9 * y.iter().map(|v| v.abs()).fold(0.0, f64::max)) {
            return None;
        }
        let peaks: Vec<f64> = (1..y.len().saturating_sub(1))
            .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
            .map(|k| {
                let h = x[k + 1] - x[k];
                let denom = y[k - 1] - 2.0 * y[k] + y[k + 1];
                if denom == 0.0 {
                    x[k]
                } else {
                    x[k] + 0.5 * h * (y[k - 1] - y[k + 1]) / denom
                }
            })
            .collect();
        if peaks.len() < 2 {
            return None;
        }
        Some((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
    }

    /// Columns `screen_coordinate, rho_FQ, rho_FC, rho_FI`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(
            ["screen_coordinate", "rho_FQ", "rho_FC", "rho_FI"]
                .map(String::from)
                .to_vec(),
        );
        for r in &self.rows {
            t.push(vec![
                fmt_f64(r.screen_coordinate),
                fmt_f64(r.rho_fq),
                fmt_f64(r.rho_fc),
                fmt_f64(r.rho_fi),
            ]);
        }
        t
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

/// Evaluates the model at every screen point.
pub fn fringe_profile<M: TwoBranchModel>(
    model: &M,
    screen: &[f64],
) -> Result<FringeProfile, SemiclassicalError> {
    let rows = screen
        .par_iter()
        .map(|&x| {
            let branches = model.branches_at(x)?;
            if branches.len() != 2 {
                return Err(SemiclassicalError::Model(format!(
                    "{} branches at screen coordinate {x}",
                    branches.len()
                )));
            }
            Ok(FringeRow {
                screen_coordinate: x,
                rho_fq: quantum_density(&branches, model.coords())?,
                rho_fc: classical_density(&branches).value,
                rho_fi: interference_term(&branches),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FringeProfile { rows })
}
