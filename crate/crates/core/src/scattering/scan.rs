//! Tabulated deflection functions and their inversion `theta -> {b_i}`.

use std::io;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{CentralPotential, DeflectionSample, ScatteringError, ScatteringProblem};
use crate::export::{fmt_f64, CsvTable};

/// Half a degree: the scan extends until the deflection drops below this.
const FORWARD_CUTOFF: f64 = 0.5 * std::f64::consts::PI / 180.0;
const GLORY_BAND: f64 = std::f64::consts::PI / 180.0;
const RAINBOW_SLOPE: f64 = 1e-3;

/// A maximal run of scan samples on which `theta(b)` is monotone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    /// Inclusive; shared with the next segment.
    pub end: usize,
    pub increasing: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DeflectionScan {
    pub problem: ScatteringProblem,
    pub b_max: f64,
    pub samples: Vec<DeflectionSample>,
    pub segments: Vec<Segment>,
    /// Refined location `(b, theta)` of the extremum between segment `i`
    /// and `i + 1`.
    pub extrema: Vec<(f64, f64)>,
}

impl DeflectionScan {
    /// Scans `points` impact parameters on `[0, b_max]` with `b_max` the
    /// first doubling of the potential's range where `theta < 0.5 deg`.
    pub fn new(problem: ScatteringProblem, points: usize) -> Result<Self, ScatteringError> {
        problem.validate()?;
        let b_max = match &problem.potential {
            CentralPotential::HardSphere { radius } => *radius,
            CentralPotential::Smooth { .. } => {
                let limit = problem.horizon().expect("validated");
                let mut b = problem.range();
                while problem.theta(b)? >= FORWARD_CUTOFF {
                    b *= 2.0;
                    if b >= limit {
                        b = limit;
                        break;
                    }
                }
                b
            }
        };
        log::debug!("deflection scan on [0, {b_max}] with {points} points");
        Self::with_b_max(problem, b_max, points)
    }

    pub fn with_b_max(
        problem: ScatteringProblem,
        b_max: f64,
        points: usize,
    ) -> Result<Self, ScatteringError> {
        problem.validate()?;
        if points < 3 || !(b_max > 0.0) {
            return Err(ScatteringError::InvalidProblem(format!(
                "scan needs at least 3 points and b_max > 0, got {points} and {b_max}"
            )));
        }
        let bs: Vec<f64> = (0..points)
            .map(|k| b_max * k as f64 / (points - 1) as f64)
            .collect();
        let thetas = bs
            .par_iter()
            .map(|&b| problem.theta(b))
            .collect::<Result<Vec<_>, _>>()?;
        let h = bs[1] - bs[0];
        let mut samples: Vec<DeflectionSample> = (0..points)
            .map(|k| {
                let dtheta_db = if k == 0 {
                    (thetas[1] - thetas[0]) / h
                } else if k == points - 1 {
                    (thetas[k] - thetas[k - 1]) / h
                } else {
                    (thetas[k + 1] - thetas[k - 1]) / (2.0 * h)
                };
                DeflectionSample {
                    b: bs[k],
                    theta: thetas[k],
                    dtheta_db,
                    branch_id: 0,
                }
            })
            .collect();
        let segments = segment(&thetas);
        for (id, seg) in segments.iter().enumerate() {
            for s in &mut samples[seg.start..=seg.end] {
                s.branch_id = id;
            }
        }
        let extrema = segments[..segments.len() - 1]
            .iter()
            .map(|seg| {
                let k = seg.end;
                golden_extremum(&problem, bs[k - 1], bs[k + 1], seg.increasing)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            problem,
            b_max,
            samples,
            segments,
            extrema,
        })
    }

    /// The monotone run of `(b, theta)` points of segment `id`, with the
    /// refined extrema in place of the shared boundary samples.
    pub fn segment_points(&self, id: usize) -> Vec<(f64, f64)> {
        let seg = &self.segments[id];
        let mut pts: Vec<(f64, f64)> = self.samples[seg.start..=seg.end]
            .iter()
            .map(|s| (s.b, s.theta))
            .collect();
        if id + 1 < self.segments.len() {
            let e = self.extrema[id];
            pts.pop();
            if e.0 > self.samples[seg.end].b {
                pts.push((self.samples[seg.end].b, self.samples[seg.end].theta));
            }
            pts.push(e);
        }
        if id > 0 {
            let e = self.extrema[id - 1];
            pts.remove(0);
            if e.0 < self.samples[seg.start].b {
                pts.insert(
                    0,
                    (self.samples[seg.start].b, self.samples[seg.start].theta),
                );
            }
            pts.insert(0, e);
        }
        pts
    }

    /// Range `(min, max)` of theta over segment `id`.
    pub fn segment_range(&self, id: usize) -> (f64, f64) {
        let pts = self.segment_points(id);
        let (a, b) = (pts[0].1, pts[pts.len() - 1].1);
        (a.min(b), a.max(b))
    }

    /// Indices of segments whose sampled range contains `theta`.
    pub fn segments_containing(&self, theta: f64) -> Vec<usize> {
        (0..self.segments.len())
            .filter(|&i| {
                let (lo, hi) = self.segment_range(i);
                lo <= theta && theta <= hi
            })
            .collect()
    }

    /// Columns `b, theta, dtheta_db, branch_id`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["b", "theta", "dtheta_db", "branch_id"]);
        for s in &self.samples {
            t.push(vec![
                fmt_f64(s.b),
                fmt_f64(s.theta),
                fmt_f64(s.dtheta_db),
                s.branch_id.to_string(),
            ]);
        }
        t
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

fn golden_extremum(
    problem: &ScatteringProblem,
    mut a: f64,
    mut b: f64,
    maximum: bool,
) -> Result<(f64, f64), ScatteringError> {
    let sign = if maximum { 1.0 } else { -1.0 };
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = sign * problem.theta(c)?;
    let mut fd = sign * problem.theta(d)?;
    while b - a > 1e-10 * (1.0 + b.abs()) {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = sign * problem.theta(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = sign * problem.theta(d)?;
        }
    }
    let m = 0.5 * (a + b);
    Ok((m, problem.theta(m)?))
}

fn segment(thetas: &[f64]) -> Vec<Segment> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut dir = 0.0f64;
    for k in 0..thetas.len() - 1 {
        let d = (thetas[k + 1] - thetas[k]).signum() * ((thetas[k + 1] != thetas[k]) as i32 as f64);
        if d == 0.0 {
            continue;
        }
        if dir != 0.0 && d != dir {
            out.push(Segment {
                start,
                end: k,
                increasing: dir > 0.0,
            });
            start = k;
        }
        dir = d;
    }
    out.push(Segment {
        start,
        end: thetas.len() - 1,
        increasing: dir > 0.0,
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleFlag {
    #[default]
    None,
    /// Within a degree of forward or backward scattering, where `sin theta`
    /// vanishes.
    Glory,
    /// At a stationary point of the deflection function.
    Rainbow,
    /// Reached only for impact parameters beyond the scan.
    ForwardDivergence,
}

/// One impact parameter reaching the requested angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImpactBranch {
    pub b: f64,
    pub dtheta_db: f64,
    /// `|db/dtheta|`.
    pub db_dtheta: f64,
    pub segment: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Inversion {
    pub theta: f64,
    pub branches: Vec<ImpactBranch>,
    pub flag: AngleFlag,
}

/// Every impact parameter scattering into `theta`, one per monotone
/// segment of the scan, each refined on the true deflection function.
pub fn invert_branches(scan: &DeflectionScan, theta: f64) -> Result<Inversion, ScatteringError> {
    let flagged = |flag| {
        Ok(Inversion {
            theta,
            branches: Vec::new(),
            flag,
        })
    };
    if !(GLORY_BAND..=std::f64::consts::PI - GLORY_BAND).contains(&theta) {
        return flagged(AngleFlag::Glory);
    }
    let last = scan.samples.last().expect("scan has samples");
    let outer = scan.segments.last().expect("scan has segments");
    if !outer.increasing && theta < last.theta {
        return flagged(AngleFlag::ForwardDivergence);
    }
    let problem = &scan.problem;
    let mut branches: Vec<ImpactBranch> = Vec::new();
    for id in 0..scan.segments.len() {
        let s = scan.segment_points(id);
        let Some(k) = s
            .windows(2)
            .position(|w| (w[0].1 - theta) * (w[1].1 - theta) <= 0.0)
        else {
            continue;
        };
        let b = match problem.potential {
            CentralPotential::HardSphere { radius } => radius * (theta / 2.0).cos(),
            CentralPotential::Smooth { .. } => refine(
                problem,
                s[k].0,
                s[k + 1].0,
                s[k].1 - theta,
                s[k + 1].1 - theta,
                theta,
            )?,
        };
        if branches
            .iter()
            .any(|o| (o.b - b).abs() <= 1e-10 * (1.0 + b))
        {
            continue;
        }
        let dtheta_db = problem.deflection_function(b)?.dtheta_db;
        branches.push(ImpactBranch {
            b,
            dtheta_db,
            db_dtheta: 1.0 / dtheta_db.abs(),
            segment: id,
        });
    }
    let flag = if branches.iter().any(|b| b.dtheta_db.abs() < RAINBOW_SLOPE) {
        AngleFlag::Rainbow
    } else {
        AngleFlag::None
    };
    Ok(Inversion {
        theta,
        branches,
        flag,
    })
}

/// Illinois-modified regula falsi on a sign-changing bracket.
fn refine(
    problem: &ScatteringProblem,
    mut a: f64,
    mut b: f64,
    mut fa: f64,
    mut fb: f64,
    target: f64,
) -> Result<f64, ScatteringError> {
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut side = 0;
    for _ in 0..100 {
        let c = (a * fb - b * fa) / (fb - fa);
        let fc = problem.theta(c)? - target;
        if fc == 0.0 || (b - a).abs() <= 1e-14 * (1.0 + c.abs()) {
            return Ok(c);
        }
        if fc * fb < 0.0 {
            a = b;
            fa = fb;
            side = 0;
        } else {
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        }
        b = c;
        fb = fc;
        if fb.abs() < 1e-15 {
            return Ok(b);
        }
    }
    Ok(b)
}
