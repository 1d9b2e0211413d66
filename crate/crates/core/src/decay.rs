//! Least-action vertex of a two-body decay `1 -> 2 + 3` fixed by the
//! parent's initial position and the products' final positions.
//!
//! In the low-velocity limit each leg contributes `-m c^2 dt` plus its
//! nonrelativistic kinetic action, so the history is the three straight
//! segments meeting at the vertex `(x, t)` that make the total action
//! stationary.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DecayError {
    #[error("invalid decay spec: {0}")]
    InvalidSpec(String),
    #[error("no real vertex: mass defect m1 - m2 - m3 = {0} is not positive")]
    NoRealVertex(f64),
    #[error("vertex time {t} falls outside [{t_i}, {t_f}]")]
    OutsideWindow { t: f64, t_i: f64, t_f: f64 },
    #[error("closed form needs x1 at the products' centre of mass (off by {0:e})")]
    NotCentreOfMass(f64),
    #[error("time {0} is not strictly inside the window")]
    TimeOutsideWindow(f64),
    #[error(
        "minimizer did not converge: momentum residual {momentum:e}, energy residual {energy:e}"
    )]
    NoConvergence { momentum: f64, energy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySpec {
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub c: f64,
    pub t_i: f64,
    pub t_f: f64,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub x3: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayVertex {
    pub x: Vec<f64>,
    pub t: f64,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
    pub p3: Vec<f64>,
    pub action: f64,
    /// `|p1 - p2 - p3|`.
    pub momentum_residual: f64,
    /// `p2^2/2m2 + p3^2/2m3 - p1^2/2m1 - (m1 - m2 - m3) c^2`.
    pub energy_residual: f64,
    /// Whether the Hessian of the action at the vertex is positive definite.
    pub minimum: bool,
    /// The root of the time equation beyond `t_f`, which the window excludes.
    pub other_root: Option<f64>,
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl DecaySpec {
    pub fn validate(&self) -> Result<(), DecayError> {
        let bad = |m: &str| Err(DecayError::InvalidSpec(m.into()));
        if !(self.m1 > 0.0 && self.m2 > 0.0 && self.m3 > 0.0) {
            return bad("masses must be positive");
        }
        if !(self.c > 0.0) {
            return bad("c must be positive");
        }
        if !(self.t_f > self.t_i) {
            return bad("t_F must exceed t_I");
        }
        let d = self.x1.len();
        if !(1..=3).contains(&d) || self.x2.len() != d || self.x3.len() != d {
            return bad("positions must share a dimension between 1 and 3");
        }
        Ok(())
    }

    pub fn mass_defect(&self) -> f64 {
        self.m1 - self.m2 - self.m3
    }

    fn check_defect(&self) -> Result<(), DecayError> {
        self.validate()?;
        if !(self.mass_defect() > 0.0) {
            return Err(DecayError::NoRealVertex(self.mass_defect()));
        }
        Ok(())
    }

    /// Segment momenta `(p1, p2, p3)` for a vertex at `(x, t)`.
    pub fn momenta(&self, x: &[f64], t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let a = t - self.t_i;
        let b = self.t_f - t;
        let scale =
            |m: f64, v: Vec<f64>, dt: f64| v.into_iter().map(|c| m * c / dt).collect::<Vec<_>>();
        (
            scale(self.m1, sub(x, &self.x1), a),
            scale(self.m2, sub(&self.x2, x), b),
            scale(self.m3, sub(&self.x3, x), b),
        )
    }

    /// Builds the vertex record at `(x, t)` with its conservation residuals.
    pub fn vertex_at(&self, x: Vec<f64>, t: f64) -> Result<DecayVertex, DecayError> {
        let action = decay_action(self, &x, t)?;
        let (p1, p2, p3) = self.momenta(&x, t);
        let mom: Vec<f64> = (0..x.len()).map(|k| p1[k] - p2[k] - p3[k]).collect();
        let energy_residual = dot(&p2, &p2) / (2.0 * self.m2) + dot(&p3, &p3) / (2.0 * self.m3)
            - dot(&p1, &p1) / (2.0 * self.m1)
            - self.mass_defect() * self.c * self.c;
        let minimum = hessian_is_positive(&decay_hessian(self, &x, t));
        Ok(DecayVertex {
            momentum_residual: dot(&mom, &mom).sqrt(),
            energy_residual,
            minimum,
            other_root: None,
            x,
            t,
            p1,
            p2,
            p3,
            action,
        })
    }
}

/// `S = -m1 c^2 (t - t_I) + m1 |x - x1|^2 / 2(t - t_I)
///      - (m2 + m3) c^2 (t_F - t) + (m2 |x2 - x|^2 + m3 |x3 - x|^2) / 2(t_F - t)`.
pub fn decay_action(spec: &DecaySpec, x: &[f64], t: f64) -> Result<f64, DecayError> {
    if !(t > spec.t_i && t < spec.t_f) {
        return Err(DecayError::TimeOutsideWindow(t));
    }
    let a = t - spec.t_i;
    let b = spec.t_f - t;
    let c2 = spec.c * spec.c;
    let d1 = sub(x, &spec.x1);
    let d2 = sub(&spec.x2, x);
    let d3 = sub(&spec.x3, x);
    Ok(
        -spec.m1 * c2 * a + 0.5 * spec.m1 * dot(&d1, &d1) / a - (spec.m2 + spec.m3) * c2 * b
            + 0.5 * (spec.m2 * dot(&d2, &d2) + spec.m3 * dot(&d3, &d3)) / b,
    )
}

/// `(dS/dx, dS/dt)`; the first is `p1 - p2 - p3`, the second the energy
/// balance.
pub fn decay_gradient(spec: &DecaySpec, x: &[f64], t: f64) -> (Vec<f64>, f64) {
    let (p1, p2, p3) = spec.momenta(x, t);
    let gx = (0..x.len()).map(|k| p1[k] - p2[k] - p3[k]).collect();
    let c2 = spec.c * spec.c;
    let gt = -spec.m1 * c2 - dot(&p1, &p1) / (2.0 * spec.m1)
        + (spec.m2 + spec.m3) * c2
        + dot(&p2, &p2) / (2.0 * spec.m2)
        + dot(&p3, &p3) / (2.0 * spec.m3);
    (gx, gt)
}

/// Hessian of the action in `(x, t)`, row-major of size `d + 1`.
pub fn decay_hessian(spec: &DecaySpec, x: &[f64], t: f64) -> nalgebra::DMatrix<f64> {
    let d = x.len();
    let a = t - spec.t_i;
    let b = spec.t_f - t;
    let mut h = nalgebra::DMatrix::zeros(d + 1, d + 1);
    let diag = spec.m1 / a + (spec.m2 + spec.m3) / b;
    let d1 = sub(x, &spec.x1);
    let d2 = sub(&spec.x2, x);
    let d3 = sub(&spec.x3, x);
    for k in 0..d {
        h[(k, k)] = diag;
        let mixed = -spec.m1 * d1[k] / (a * a) - (spec.m2 * d2[k] + spec.m3 * d3[k]) / (b * b);
        h[(k, d)] = mixed;
        h[(d, k)] = mixed;
    }
    h[(d, d)] = spec.m1 * dot(&d1, &d1) / a.powi(3)
        + (spec.m2 * dot(&d2, &d2) + spec.m3 * dot(&d3, &d3)) / b.powi(3);
    h
}

fn hessian_is_positive(h: &nalgebra::DMatrix<f64>) -> bool {
    h.clone().cholesky().is_some()
}

/// The vertex in closed form, valid when `x1` sits at the products' centre
/// of mass: `x = x1`, `t = t_F - sqrt((m2 x2^2 + m3 x3^2) / 2 (m1 - m2 - m3) c^2)`
/// with positions measured from `x1`.
pub fn solve_vertex_closed_form(spec: &DecaySpec) -> Result<DecayVertex, DecayError> {
    spec.check_defect()?;
    let d = spec.x1.len();
    let mtot = spec.m2 + spec.m3;
    let cm: Vec<f64> = (0..d)
        .map(|k| (spec.m2 * spec.x2[k] + spec.m3 * spec.x3[k]) / mtot)
        .collect();
    let off = sub(&cm, &spec.x1);
    let off = dot(&off, &off).sqrt();
    let scale = 1.0
        + [&spec.x1, &spec.x2, &spec.x3]
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    if off > 1e-12 * scale {
        return Err(DecayError::NotCentreOfMass(off));
    }
    let y2 = sub(&spec.x2, &spec.x1);
    let y3 = sub(&spec.x3, &spec.x1);
    let root = ((spec.m2 * dot(&y2, &y2) + spec.m3 * dot(&y3, &y3))
        / (2.0 * spec.mass_defect() * spec.c * spec.c))
        .sqrt();
    let t = spec.t_f - root;
    if !(t > spec.t_i) || root == 0.0 {
        return Err(DecayError::OutsideWindow {
            t,
            t_i: spec.t_i,
            t_f: spec.t_f,
        });
    }
    let mut v = spec.vertex_at(spec.x1.clone(), t)?;
    v.other_root = Some(spec.t_f + root);
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizerSettings {
    pub simplex_iterations: usize,
    pub newton_iterations: usize,
    pub tolerance: f64,
}

impl Default for MinimizerSettings {
    fn default() -> Self {
        Self {
            simplex_iterations: 4000,
            newton_iterations: 50,
            tolerance: 1e-9,
        }
    }
}

/// Stationary point of the action by Nelder–Mead over `(x, u)` with
/// `t = t_I + (t_F - t_I) / (1 + e^-u)`, polished by damped Newton on the
/// gradient.
pub fn solve_vertex_numeric(
    spec: &DecaySpec,
    settings: &MinimizerSettings,
) -> Result<DecayVertex, DecayError> {
    spec.check_defect()?;
    let d = spec.x1.len();
    let span = spec.t_f - spec.t_i;
    let to_t = |u: f64| spec.t_i + span / (1.0 + (-u).exp());
    let objective = |z: &[f64]| {
        let t = to_t(z[d]);
        decay_action(spec, &z[..d], t).unwrap_or(f64::INFINITY)
    };
    let mut start: Vec<f64> = (0..d)
        .map(|k| (spec.x1[k] + spec.x2[k] + spec.x3[k]) / 3.0)
        .collect();
    start.push(0.0);
    let scale = 1.0
        + (0..d)
            .map(|k| (spec.x2[k] - spec.x3[k]).abs())
            .fold(0.0, f64::max);
    let z = nelder_mead(objective, &start, scale, settings.simplex_iterations);

    let mut x: Vec<f64> = z[..d].to_vec();
    let mut t = to_t(z[d]);
    let norm = |x: &[f64], t: f64| {
        let (gx, gt) = decay_gradient(spec, x, t);
        (dot(&gx, &gx) + gt * gt).sqrt()
    };
    for _ in 0..settings.newton_iterations {
        let (gx, gt) = decay_gradient(spec, &x, t);
        let g = nalgebra::DVector::from_iterator(d + 1, gx.iter().copied().chain([gt]));
        let current = g.norm();
        if current == 0.0 {
            break;
        }
        let Some(step) = decay_hessian(spec, &x, t).lu().solve(&g) else {
            break;
        };
        let mut lambda = 1.0;
        let mut improved = false;
        while lambda > 1e-6 {
            let tx: Vec<f64> = (0..d).map(|k| x[k] - lambda * step[k]).collect();
            let tt = t - lambda * step[d];
            if tt > spec.t_i && tt < spec.t_f && norm(&tx, tt) < current {
                x = tx;
                t = tt;
                improved = true;
                break;
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    let v = spec.vertex_at(x, t)?;
    let tol = settings.tolerance;
    if v.momentum_residual > tol || v.energy_residual.abs() > tol {
        return Err(DecayError::NoConvergence {
            momentum: v.momentum_residual,
            energy: v.energy_residual,
        });
    }
    Ok(v)
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: F,
    start: &[f64],
    scale: f64,
    iterations: usize,
) -> Vec<f64> {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|i| {
            let mut p = start.to_vec();
            if i > 0 {
                p[i - 1] += 0.5 * scale;
            }
            let v = f(&p);
            (p, v)
        })
        .collect();
    let blend = |a: &[f64], b: &[f64], w: f64| -> Vec<f64> {
        a.iter().zip(b).map(|(x, y)| x + w * (y - x)).collect()
    };
    for _ in 0..iterations {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[n].1 - simplex[0].1;
        if spread.abs() <= 1e-15 * (1.0 + simplex[0].1.abs()) {
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(p, _)| p[k]).sum::<f64>() / n as f64)
            .collect();
        let worst = simplex[n].clone();
        let reflected = blend(&centroid, &worst.0, -1.0);
        let fr = f(&reflected);
        if fr < simplex[0].1 {
            let expanded = blend(&centroid, &worst.0, -2.0);
            let fe = f(&expanded);
            simplex[n] = if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                blend(&centroid, &reflected, 0.5)
            } else {
                blend(&centroid, &worst.0, 0.5)
            };
            let fc = f(&contracted);
            if fc < worst.1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let best = simplex[0].0.clone();
                for entry in simplex.iter_mut().skip(1) {
                    let p = blend(&best, &entry.0, 0.5);
                    let v = f(&p);
                    *entry = (p, v);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0).0
}
