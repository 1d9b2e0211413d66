//! Cross-sections and the transfer of densities from the incidence plane
//! to final directions.

use std::f64::consts::PI;
use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scan::{invert_branches, AngleFlag, DeflectionScan, Inversion};
use super::ScatteringError;
use crate::export::{fmt_f64, CsvTable};
use crate::quadrature::GaussLegendre;

/// A density of incoming paths over the incidence plane in polar
/// coordinates `(b, phi)`.
pub trait IncidenceDensity: Sync {
    fn rho(&self, b: f64, phi: f64) -> f64;
}

/// The uniform density `rho_I = 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Lebesgue;

impl IncidenceDensity for Lebesgue {
    fn rho(&self, _: f64, _: f64) -> f64 {
        1.0
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> IncidenceDensity for F {
    fn rho(&self, b: f64, phi: f64) -> f64 {
        self(b, phi)
    }
}

/// `rho_F(theta, phi) = sum_i rho_I(b_i, phi) (b_i / sin theta) |db_i/dtheta|`.
pub fn transfer_density<D: IncidenceDensity + ?Sized>(
    rho: &D,
    inv: &Inversion,
    phi: f64,
) -> Result<f64, ScatteringError> {
    if inv.flag != AngleFlag::None {
        return Err(ScatteringError::Flagged {
            theta: inv.theta,
            flag: inv.flag,
        });
    }
    let s = inv.theta.sin();
    Ok(inv
        .branches
        .iter()
        .map(|br| rho.rho(br.b, phi) * br.b / s * br.db_dtheta)
        .sum())
}

/// `sigma_C(theta) = sum_i (b_i / sin theta) |db_i/dtheta|`; the transfer of
/// the uniform incidence density.
pub fn classical_cross_section(inv: &Inversion) -> Result<f64, ScatteringError> {
    transfer_density(&Lebesgue, inv, 0.0)
}

/// `(k / 4E)^2 / sin^4(theta / 2)`.
pub fn rutherford(strength: f64, energy: f64, theta: f64) -> f64 {
    (strength / (4.0 * energy)).powi(2) / (theta / 2.0).sin().powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionRow {
    pub theta: f64,
    /// `None` inside a guard band.
    pub sigma: Option<f64>,
    pub n_branches: usize,
    pub flag: AngleFlag,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrossSectionTable {
    pub rows: Vec<CrossSectionRow>,
}

impl CrossSectionTable {
    /// Columns `theta_deg, sigma, n_branches, flag`; flagged rows carry NaN.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["theta_deg", "sigma", "n_branches", "flag"]);
        for r in &self.rows {
            let flag = match r.flag {
                AngleFlag::None => "none",
                AngleFlag::Glory => "glory",
                AngleFlag::Rainbow => "rainbow",
                AngleFlag::ForwardDivergence => "forward_divergence",
            };
            t.push(vec![
                fmt_f64(r.theta.to_degrees()),
                fmt_f64(r.sigma.unwrap_or(f64::NAN)),
                r.n_branches.to_string(),
                flag.into(),
            ]);
        }
        t
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

fn row_from(inv: &Inversion, sigma: Option<f64>) -> CrossSectionRow {
    CrossSectionRow {
        theta: inv.theta,
        sigma,
        n_branches: inv.branches.len(),
        flag: inv.flag,
    }
}

/// Classical cross-section at every angle of `thetas` (radians).
pub fn cross_section_table(
    scan: &DeflectionScan,
    thetas: &[f64],
) -> Result<CrossSectionTable, ScatteringError> {
    let rows = thetas
        .par_iter()
        .map(|&th| {
            let inv = invert_branches(scan, th)?;
            Ok(row_from(&inv, classical_cross_section(&inv).ok()))
        })
        .collect::<Result<Vec<_>, ScatteringError>>()?;
    Ok(CrossSectionTable { rows })
}

/// A measure on scattered paths, seen through its density on final
/// directions and its mass over incidence disks.
pub trait PathMeasure: Sync {
    fn final_density(&self, theta: f64, phi: f64) -> Result<(f64, Inversion), ScatteringError>;
    /// Measure of the paths entering through the disk `b < radius`.
    fn incidence_mass(&self, radius: f64) -> f64;
}

/// The measure obtained by pushing `scale * rho_I` forward through the
/// deflection function.
pub struct TransferredMeasure<'a, D> {
    pub scan: &'a DeflectionScan,
    pub incidence: D,
    pub scale: f64,
}

impl<D: IncidenceDensity> PathMeasure for TransferredMeasure<'_, D> {
    fn final_density(&self, theta: f64, phi: f64) -> Result<(f64, Inversion), ScatteringError> {
        let inv = invert_branches(self.scan, theta)?;
        let rho = transfer_density(&self.incidence, &inv, phi)?;
        Ok((self.scale * rho, inv))
    }

    fn incidence_mass(&self, radius: f64) -> f64 {
        let rule = GaussLegendre::new(24);
        let panels = 16;
        let breaks: Vec<f64> = (0..=panels)
            .map(|k| radius * k as f64 / panels as f64)
            .collect();
        self.scale
            * rule.integrate_panels(&breaks, |b| {
                b * rule.integrate(0.0, 2.0 * PI, |phi| self.incidence.rho(b, phi))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureCrossSection {
    pub table: CrossSectionTable,
    /// Last ratio `mu(D_n) / (pi B_n^2)` of the exhausting sequence.
    pub mu_bar: f64,
    pub mu_sequence: Vec<f64>,
    /// Whether the last two ratios agree within the requested tolerance.
    /// An inconclusive normalizer leaves `table` computed with the last
    /// ratio, for inspection only.
    pub converged: bool,
}

/// `sigma = rho_F / mu_bar`, with `mu_bar` estimated along the nested
/// incidence disks of radii `radii`.
pub fn cross_section_from_measure<M: PathMeasure>(
    measure: &M,
    radii: &[f64],
    thetas: &[f64],
    tolerance: f64,
) -> Result<MeasureCrossSection, ScatteringError> {
    if radii.is_empty() || radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(ScatteringError::InvalidProblem(
            "exhausting sequence must be increasing positive radii".into(),
        ));
    }
    let mu_sequence: Vec<f64> = radii
        .iter()
        .map(|&r| measure.incidence_mass(r) / (PI * r * r))
        .collect();
    let mu_bar = *mu_sequence.last().expect("non-empty");
    let converged = mu_sequence.len() >= 2 && {
        let prev = mu_sequence[mu_sequence.len() - 2];
        (mu_bar - prev).abs() <= tolerance * mu_bar.abs().max(f64::MIN_POSITIVE)
    };
    let rows = thetas
        .par_iter()
        .map(|&th| match measure.final_density(th, 0.0) {
            Ok((rho, inv)) => Ok(row_from(&inv, Some(rho / mu_bar))),
            Err(ScatteringError::Flagged { theta, flag }) => Ok(CrossSectionRow {
                theta,
                sigma: None,
                n_branches: 0,
                flag,
            }),
            Err(e) => Err(e),
        })
        .collect::<Result<Vec<_>, ScatteringError>>()?;
    Ok(MeasureCrossSection {
        table: CrossSectionTable { rows },
        mu_bar,
        mu_sequence,
        converged,
    })
}

/// Incidence density that makes the transferred measure reproduce an
/// assigned cross-section `sigma_q`: `rho_I(b) = sigma_q(theta(b)) /
/// sigma_C(theta(b))`. Only defined where a single branch reaches
/// `theta(b)`.
pub fn pullback_incidence_density<F: Fn(f64) -> f64>(
    scan: &DeflectionScan,
    sigma_q: F,
    b: f64,
) -> Result<f64, ScatteringError> {
    let theta = scan.problem.theta(b)?;
    let inv = invert_branches(scan, theta)?;
    let sigma_c = classical_cross_section(&inv)?;
    match inv.branches.len() {
        0 => Err(ScatteringError::NoBranch { theta }),
        1 => Ok(sigma_q(theta) / sigma_c),
        count => Err(ScatteringError::MultiBranch { theta, count }),
    }
}

/// `int sigma_C(theta) 2 pi sin(theta) dtheta` over `[lo, hi]` by
/// composite Gauss–Legendre on one-degree panels.
pub fn scattered_flux(scan: &DeflectionScan, lo: f64, hi: f64) -> Result<f64, ScatteringError> {
    let rule = GaussLegendre::new(8);
    let panels = ((hi - lo).to_degrees().ceil() as usize).max(1);
    let nodes: Vec<(f64, f64)> = (0..panels)
        .flat_map(|k| {
            let a = lo + (hi - lo) * k as f64 / panels as f64;
            let b = lo + (hi - lo) * (k + 1) as f64 / panels as f64;
            rule.on(a, b).collect::<Vec<_>>()
        })
        .collect();
    let parts = nodes
        .par_iter()
        .map(|&(th, w)| {
            let inv = invert_branches(scan, th)?;
            Ok(w * classical_cross_section(&inv)? * 2.0 * PI * th.sin())
        })
        .collect::<Result<Vec<f64>, ScatteringError>>()?;
    Ok(parts.iter().sum())
}
