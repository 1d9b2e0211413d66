//! Two-point boundary-value solving by shooting on the initial momentum.
//!
//! One-dimensional problems scan a momentum grid for sign changes of the
//! endpoint residual and refine each bracket with safeguarded Newton steps.
//! Higher-dimensional problems run damped Newton from every grid node.
//! Newton steps use the exact Jacobian `dx(t2)/dp0` from the variational
//! equations, so converged branches are polished to roundoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::integrate::{
    advance, integrate_variational, PhasePoint, StepControl, Trajectory, VariationalTrajectory,
};
use super::potential::HamiltonianSpec;
use super::DynamicsError;

/// Box of initial momenta scanned for branches, `points` nodes per axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentumGrid {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub points: usize,
}

impl MomentumGrid {
    pub fn uniform(n: usize, half_width: f64, points: usize) -> Self {
        Self {
            lower: vec![-half_width; n],
            upper: vec![half_width; n],
            points,
        }
    }

    fn axis(&self, k: usize) -> Vec<f64> {
        let (lo, hi) = (self.lower[k], self.upper[k]);
        let m = self.points.max(2);
        (0..m)
            .map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64)
            .collect()
    }

    /// Smallest node spacing over all axes.
    pub fn resolution(&self) -> f64 {
        let m = self.points.max(2) as f64 - 1.0;
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(lo, hi)| (hi - lo) / m)
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShootSettings {
    pub grid: MomentumGrid,
    pub position_tolerance: f64,
    pub max_iterations: usize,
    pub control: StepControl,
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self {
            grid: MomentumGrid::uniform(1, 10.0, 41),
            position_tolerance: 1e-8,
            max_iterations: 60,
            control: StepControl::default(),
        }
    }
}

impl ShootSettings {
    pub fn with_grid(grid: MomentumGrid) -> Self {
        Self {
            grid,
            ..Self::default()
        }
    }
}

/// A classical path from `(x1, t1)` to `(x2, t2)`.
#[derive(Debug, Clone)]
pub struct BoundaryBranch {
    pub initial_momentum: Vec<f64>,
    pub variational: VariationalTrajectory,
    /// `|x(t2) - x2|`.
    pub miss: f64,
}

impl BoundaryBranch {
    pub fn trajectory(&self) -> &Trajectory {
        &self.variational.trajectory
    }

    /// `dx(t2)/dp0`.
    pub fn endpoint_jacobian(&self) -> &DMatrix<f64> {
        self.variational.final_position_jacobian()
    }
}

#[derive(Debug, Clone)]
pub struct ShootOutcome {
    pub branches: Vec<BoundaryBranch>,
    /// Set when the scan found no branch at all and nothing failed: the
    /// endpoint is classically unreachable within the grid.
    pub unreachable: bool,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, Copy)]
struct Boundary<'a> {
    x1: &'a [f64],
    t1: f64,
    x2: &'a [f64],
    t2: f64,
}

impl Boundary<'_> {
    fn start(&self, p0: &[f64]) -> PhasePoint {
        PhasePoint::new(self.x1.to_vec(), p0.to_vec(), self.t1)
    }

    fn residual(&self, end: &[f64]) -> DVector<f64> {
        DVector::from_iterator(end.len(), end.iter().zip(self.x2).map(|(a, b)| a - b))
    }
}

fn check_inputs(
    spec: &HamiltonianSpec,
    b: &Boundary<'_>,
    grid: Option<&MomentumGrid>,
) -> Result<(), DynamicsError> {
    spec.validate()?;
    let n = spec.coords();
    if b.x1.len() != n || b.x2.len() != n {
        return Err(DynamicsError::ShapeMismatch {
            expected: n,
            positions: b.x1.len(),
            momenta: b.x2.len(),
        });
    }
    if !(b.t2 > b.t1) {
        return Err(DynamicsError::InvalidSpan {
            start: b.t1,
            end: b.t2,
        });
    }
    if let Some(g) = grid {
        if g.lower.len() != n || g.upper.len() != n || g.points < 2 {
            return Err(DynamicsError::InvalidSpec(format!(
                "momentum grid must span {n} axes with at least 2 points"
            )));
        }
    }
    Ok(())
}

/// Finds every classical path joining `(x1, t1)` and `(x2, t2)` whose
/// initial momentum lies in the scanned grid.
pub fn shoot_boundary(
    spec: &HamiltonianSpec,
    x1: &[f64],
    t1: f64,
    x2: &[f64],
    t2: f64,
    settings: &ShootSettings,
) -> Result<ShootOutcome, DynamicsError> {
    let b = Boundary { x1, t1, x2, t2 };
    check_inputs(spec, &b, Some(&settings.grid))?;
    let mut failures = Vec::new();
    let mut branches: Vec<BoundaryBranch> = Vec::new();
    let resolution = settings.grid.resolution();

    let candidates: Vec<Result<BoundaryBranch, String>> = if spec.coords() == 1 {
        scan_brackets(spec, &b, settings, &mut failures)
    } else {
        multistart(spec, &b, settings)
    };
    for c in candidates {
        match c {
            Ok(branch) => {
                let duplicate = branches.iter().any(|other| {
                    distance(&other.initial_momentum, &branch.initial_momentum) <= resolution
                });
                if !duplicate {
                    branches.push(branch);
                }
            }
            Err(msg) => {
                log::debug!("shooting start failed: {msg}");
                failures.push(msg)
            }
        }
    }
    branches.sort_by(|a, b| {
        a.initial_momentum
            .partial_cmp(&b.initial_momentum)
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if branches.is_empty() && !failures.is_empty() {
        return Err(DynamicsError::ShootFailed { failures });
    }
    Ok(ShootOutcome {
        unreachable: branches.is_empty(),
        branches,
        failures,
    })
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn scan_brackets(
    spec: &HamiltonianSpec,
    b: &Boundary<'_>,
    settings: &ShootSettings,
    failures: &mut Vec<String>,
) -> Vec<Result<BoundaryBranch, String>> {
    let nodes = settings.grid.axis(0);
    let residuals: Vec<Option<f64>> = nodes
        .iter()
        .map(
            |&p| match advance(spec, &b.start(&[p]), b.t2, &settings.control) {
                Ok(end) => Some(end.positions[0] - b.x2[0]),
                Err(e) => {
                    failures.push(format!("p0 = {p}: {e}"));
                    None
                }
            },
        )
        .collect();
    let mut out = Vec::new();
    for k in 0..nodes.len() {
        let Some(rk) = residuals[k] else { continue };
        if rk == 0.0 {
            out.push(refine_in_bracket(
                spec, b, settings, nodes[k], nodes[k], rk, rk,
            ));
            continue;
        }
        if k + 1 < nodes.len() {
            if let Some(rn) = residuals[k + 1] {
                if rn != 0.0 && rk.signum() != rn.signum() {
                    out.push(refine_in_bracket(
                        spec,
                        b,
                        settings,
                        nodes[k],
                        nodes[k + 1],
                        rk,
                        rn,
                    ));
                }
            }
        }
    }
    out
}

fn refine_in_bracket(
    spec: &HamiltonianSpec,
    b: &Boundary<'_>,
    settings: &ShootSettings,
    mut lo: f64,
    mut hi: f64,
    mut r_lo: f64,
    r_hi: f64,
) -> Result<BoundaryBranch, String> {
    let mut p = if r_lo == r_hi {
        lo
    } else {
        lo - r_lo * (hi - lo) / (r_hi - r_lo)
    };
    let mut best: Option<BoundaryBranch> = None;
    for _ in 0..settings.max_iterations {
        let v = integrate_variational(spec, &b.start(&[p]), b.t2, &settings.control)
            .map_err(|e| format!("bracket [{lo}, {hi}] at p0 = {p}: {e}"))?;
        let r = v.trajectory.end().positions[0] - b.x2[0];
        let slope = v.final_position_jacobian()[(0, 0)];
        let improved = best.as_ref().is_none_or(|bb| r.abs() < bb.miss);
        let converged_before = best
            .as_ref()
            .is_some_and(|bb| bb.miss <= settings.position_tolerance);
        if improved {
            best = Some(BoundaryBranch {
                initial_momentum: vec![p],
                variational: v,
                miss: r.abs(),
            });
        } else if converged_before {
            break;
        }
        if r == 0.0 {
            break;
        }
        if lo != hi {
            if r.signum() == r_lo.signum() {
                lo = p;
                r_lo = r;
            } else {
                hi = p;
            }
        }
        let newton = p - r / slope;
        let inside = if lo == hi {
            newton.is_finite()
        } else {
            newton.is_finite() && newton > lo.min(hi) && newton < lo.max(hi)
        };
        let next = if inside { newton } else { 0.5 * (lo + hi) };
        if next == p {
            break;
        }
        p = next;
    }
    match best {
        Some(bb) if bb.miss <= settings.position_tolerance => Ok(bb),
        Some(bb) => Err(format!(
            "bracket around p0 = {} stalled with miss {:e}",
            bb.initial_momentum[0], bb.miss
        )),
        None => Err("bracket refinement made no progress".into()),
    }
}

fn multistart(
    spec: &HamiltonianSpec,
    b: &Boundary<'_>,
    settings: &ShootSettings,
) -> Vec<Result<BoundaryBranch, String>> {
    let n = spec.coords();
    let axes: Vec<Vec<f64>> = (0..n).map(|k| settings.grid.axis(k)).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    (0..total)
        .map(|mut idx| {
            let p0: Vec<f64> = axes
                .iter()
                .map(|a| {
                    let v = a[idx % a.len()];
                    idx /= a.len();
                    v
                })
                .collect();
            newton_refine(spec, b, settings, p0)
        })
        .collect()
}

fn newton_refine(
    spec: &HamiltonianSpec,
    b: &Boundary<'_>,
    settings: &ShootSettings,
    p_start: Vec<f64>,
) -> Result<BoundaryBranch, String> {
    let eval = |p: &[f64]| integrate_variational(spec, &b.start(p), b.t2, &settings.control);
    let mut p = DVector::from_vec(p_start.clone());
    let mut v = eval(p.as_slice()).map_err(|e| format!("start {p_start:?}: {e}"))?;
    let mut r = b.residual(&v.trajectory.end().positions);
    let mut polish = 0;
    for _ in 0..settings.max_iterations {
        if r.norm() <= settings.position_tolerance {
            polish += 1;
            if polish > 2 || r.norm() == 0.0 {
                break;
            }
        }
        let jac = v.final_position_jacobian().clone();
        let Some(step) = jac.clone().lu().solve(&r) else {
            return Err(format!(
                "start {p_start:?}: singular shooting jacobian (caustic)"
            ));
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &p - &step * lambda;
            if let Ok(tv) = eval(trial.as_slice()) {
                let tr = b.residual(&tv.trajectory.end().positions);
                if tr.norm() < r.norm() {
                    p = trial;
                    v = tv;
                    r = tr;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= settings.position_tolerance {
        Ok(BoundaryBranch {
            initial_momentum: p.as_slice().to_vec(),
            variational: v,
            miss: r.norm(),
        })
    } else {
        Err(format!(
            "start {p_start:?}: newton stalled with miss {:e}",
            r.norm()
        ))
    }
}

/// Newton continuation from a known initial momentum, used to follow one
/// branch to a nearby endpoint.
pub fn refine_branch(
    spec: &HamiltonianSpec,
    x1: &[f64],
    t1: f64,
    x2: &[f64],
    t2: f64,
    p_guess: &[f64],
    settings: &ShootSettings,
) -> Result<BoundaryBranch, DynamicsError> {
    let b = Boundary { x1, t1, x2, t2 };
    check_inputs(spec, &b, None)?;
    newton_refine(spec, &b, settings, p_guess.to_vec()).map_err(|msg| DynamicsError::ShootFailed {
        failures: vec![msg],
    })
}
