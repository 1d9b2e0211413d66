use serde::{Deserialize, Serialize};

use super::DynamicsError;

/// A radial interaction `V(r)` with its first two derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RadialPotential {
    /// `k e^{-r/a} / r`; repulsive for `k > 0`.
    ScreenedCoulomb {
        strength: f64,
        screening: f64,
    },
    /// `4 eps [(s/r)^12 - (s/r)^6]`.
    LennardJones {
        epsilon: f64,
        sigma: f64,
    },
    /// `-D exp(-(r/w)^2)`: a smooth attractive well without a core.
    GaussianWell {
        depth: f64,
        width: f64,
    },
    /// `k r^2 / 2`.
    Spring {
        stiffness: f64,
    },
    Tabulated(TabulatedRadial),
}

impl RadialPotential {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidSpec(what.to_string()));
        match self {
            Self::ScreenedCoulomb {
                strength,
                screening,
            } => {
                if !(*screening > 0.0) {
                    return bad("screening length must be positive");
                }
                if !strength.is_finite() {
                    return bad("coulomb strength must be finite");
                }
            }
            Self::LennardJones { epsilon, sigma } => {
                if !(*epsilon > 0.0 && *sigma > 0.0) {
                    return bad("lennard-jones parameters must be positive");
                }
            }
            Self::GaussianWell { depth, width } => {
                if !(depth.is_finite() && *width > 0.0) {
                    return bad("gaussian well needs finite depth and positive width");
                }
            }
            Self::Spring { stiffness } => {
                if !(*stiffness >= 0.0) {
                    return bad("spring stiffness must be nonnegative");
                }
            }
            Self::Tabulated(t) => t.validate()?,
        }
        Ok(())
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    /// `(V, dV/dr, d2V/dr2)` at `r`.
    pub fn eval(&self, r: f64) -> (f64, f64, f64) {
        match self {
            Self::ScreenedCoulomb {
                strength,
                screening,
            } => {
                let v = strength * (-r / screening).exp() / r;
                let g = 1.0 / r + 1.0 / screening;
                (v, -v * g, v * (g * g + 1.0 / (r * r)))
            }
            Self::LennardJones { epsilon, sigma } => {
                let s6 = (sigma / r).powi(6);
                let s12 = s6 * s6;
                (
                    4.0 * epsilon * (s12 - s6),
                    4.0 * epsilon * (-12.0 * s12 + 6.0 * s6) / r,
                    4.0 * epsilon * (156.0 * s12 - 42.0 * s6) / (r * r),
                )
            }
            Self::GaussianWell { depth, width } => {
                let w2 = width * width;
                let e = (-r * r / w2).exp();
                (
                    -depth * e,
                    2.0 * depth * r / w2 * e,
                    2.0 * depth / w2 * e * (1.0 - 2.0 * r * r / w2),
                )
            }
            Self::Spring { stiffness } => (0.5 * stiffness * r * r, stiffness * r, *stiffness),
            Self::Tabulated(t) => t.eval(r),
        }
    }

    /// Whether `V` blows up as `r -> 0`.
    pub fn is_singular(&self) -> bool {
        matches!(
            self,
            Self::ScreenedCoulomb { .. } | Self::LennardJones { .. } | Self::Tabulated(_)
        )
    }

    /// Characteristic range, used to seed impact-parameter and horizon searches.
    pub fn length_scale(&self) -> f64 {
        match self {
            Self::ScreenedCoulomb {
                strength,
                screening,
            } => screening.min(strength.abs().max(1.0)),
            Self::LennardJones { sigma, .. } => *sigma,
            Self::GaussianWell { width, .. } => *width,
            Self::Spring { .. } => 1.0,
            Self::Tabulated(t) => t.r_max(),
        }
    }

    /// Smallest radius beyond which `|V| <= eps` holds for good. `None` for
    /// confining potentials.
    pub fn decay_radius(&self, eps: f64) -> Option<f64> {
        match self {
            Self::Spring { .. } => None,
            Self::Tabulated(t) => Some(t.r_max()),
            _ => {
                let mut r = self.length_scale();
                while self.value(r).abs() > eps || self.value(2.0 * r).abs() > eps {
                    r *= 1.5;
                    if r > 1e12 {
                        return None;
                    }
                }
                Some(r)
            }
        }
    }
}

/// Natural cubic spline through `(r_i, V_i)` samples on `(0, r_max]`;
/// identically zero beyond `r_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableSamples", into = "TableSamples")]
pub struct TabulatedRadial {
    radii: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableSamples {
    radii: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<TableSamples> for TabulatedRadial {
    type Error = DynamicsError;

    fn try_from(t: TableSamples) -> Result<Self, Self::Error> {
        Self::new(t.radii, t.values)
    }
}

impl From<TabulatedRadial> for TableSamples {
    fn from(t: TabulatedRadial) -> Self {
        Self {
            radii: t.radii,
            values: t.values,
        }
    }
}

impl TabulatedRadial {
    pub fn new(radii: Vec<f64>, values: Vec<f64>) -> Result<Self, DynamicsError> {
        let mut t = Self {
            radii,
            values,
            second: Vec::new(),
        };
        t.validate()?;
        t.second = spline_second_derivatives(&t.radii, &t.values);
        Ok(t)
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap_or(&0.0)
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidSpec(what.to_string()));
        if self.radii.len() < 3 || self.radii.len() != self.values.len() {
            return bad("tabulated potential needs at least 3 (r, V) samples of equal length");
        }
        if !(self.radii[0] > 0.0) || self.radii.windows(2).any(|w| w[1] <= w[0]) {
            return bad("tabulated radii must be positive and strictly increasing");
        }
        let peak = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if self.values.last().unwrap().abs() > 1e-6 * peak.max(f64::MIN_POSITIVE) {
            return bad("tabulated potential must decay to zero at r_max");
        }
        Ok(())
    }

    fn eval(&self, r: f64) -> (f64, f64, f64) {
        if r > self.r_max() {
            return (0.0, 0.0, 0.0);
        }
        let second = &self.second;
        let k = match self.radii.partition_point(|&x| x <= r) {
            0 => 0,
            i => (i - 1).min(self.radii.len() - 2),
        };
        let (x0, x1) = (self.radii[k], self.radii[k + 1]);
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (second[k], second[k + 1]);
        let h = x1 - x0;
        let a = (x1 - r) / h;
        let b = (r - x0) / h;
        let v = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0;
        let dv = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * h / 6.0;
        let d2v = a * m0 + b * m1;
        (v, dv, d2v)
    }
}

fn spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * m[i - 1] + 2.0;
        m[i] = (sig - 1.0) / p;
        let d = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * d / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    m[n - 1] = 0.0;
    for k in (0..n - 1).rev() {
        m[k] = m[k] * m[k + 1] + u[k];
    }
    m
}

/// A central interaction between particles `i` and `j` (0-based).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairTerm {
    pub i: usize,
    pub j: usize,
    pub radial: RadialPotential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    /// Isotropic trap `m_i w_i^2 |x_i|^2 / 2` per particle.
    Harmonic {
        omegas: Vec<f64>,
    },
    Pairwise {
        pairs: Vec<PairTerm>,
    },
    /// The same central field `V(|x_i|)` acting on every particle.
    External {
        radial: RadialPotential,
    },
}

/// Masses, spatial dimension and interaction law of an `N`-particle system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianSpec {
    pub masses: Vec<f64>,
    pub dimension: usize,
    pub potential: Potential,
}

/// Where the potential is nearly singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Approach {
    Pair(usize, usize),
    Center(usize),
}

impl HamiltonianSpec {
    pub fn new(
        masses: Vec<f64>,
        dimension: usize,
        potential: Potential,
    ) -> Result<Self, DynamicsError> {
        let spec = Self {
            masses,
            dimension,
            potential,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn free(mass: f64, dimension: usize) -> Result<Self, DynamicsError> {
        Self::new(vec![mass], dimension, Potential::Free)
    }

    pub fn harmonic(mass: f64, omega: f64, dimension: usize) -> Result<Self, DynamicsError> {
        Self::new(
            vec![mass],
            dimension,
            Potential::Harmonic {
                omegas: vec![omega],
            },
        )
    }

    pub fn central(
        mass: f64,
        dimension: usize,
        radial: RadialPotential,
    ) -> Result<Self, DynamicsError> {
        Self::new(vec![mass], dimension, Potential::External { radial })
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: String| Err(DynamicsError::InvalidSpec(what));
        if self.masses.is_empty() {
            return bad("at least one particle is required".into());
        }
        if let Some(m) = self.masses.iter().find(|m| !(**m > 0.0 && m.is_finite())) {
            return bad(format!("mass {m} is not positive"));
        }
        if !(1..=3).contains(&self.dimension) {
            return bad(format!("dimension {} is not 1, 2 or 3", self.dimension));
        }
        match &self.potential {
            Potential::Free => {}
            Potential::Harmonic { omegas } => {
                if omegas.len() != self.masses.len() {
                    return bad(format!(
                        "{} trap frequencies for {} particles",
                        omegas.len(),
                        self.masses.len()
                    ));
                }
                if omegas.iter().any(|w| !(*w >= 0.0)) {
                    return bad("trap frequencies must be nonnegative".into());
                }
            }
            Potential::Pairwise { pairs } => {
                for p in pairs {
                    if p.i == p.j || p.i >= self.masses.len() || p.j >= self.masses.len() {
                        return bad(format!(
                            "pair ({}, {}) does not name two particles",
                            p.i, p.j
                        ));
                    }
                    p.radial.validate()?;
                }
            }
            Potential::External { radial } => radial.validate()?,
        }
        Ok(())
    }

    pub fn particles(&self) -> usize {
        self.masses.len()
    }

    /// Number of configuration coordinates, `N * dimension`.
    pub fn coords(&self) -> usize {
        self.masses.len() * self.dimension
    }

    /// Mass attached to each configuration coordinate.
    pub fn coord_masses(&self) -> Vec<f64> {
        self.masses
            .iter()
            .flat_map(|&m| std::iter::repeat_n(m, self.dimension))
            .collect()
    }

    fn particle<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn kinetic(&self, p: &[f64]) -> f64 {
        p.iter()
            .zip(self.coord_masses())
            .map(|(pi, m)| pi * pi / (2.0 * m))
            .sum()
    }

    pub fn potential_energy(&self, x: &[f64]) -> f64 {
        match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omegas } => (0..self.particles())
                .map(|i| {
                    let r2: f64 = self.particle(x, i).iter().map(|c| c * c).sum();
                    0.5 * self.masses[i] * omegas[i] * omegas[i] * r2
                })
                .sum(),
            Potential::Pairwise { pairs } => pairs
                .iter()
                .map(|p| p.radial.value(self.separation(x, p.i, p.j).0))
                .sum(),
            Potential::External { radial } => (0..self.particles())
                .map(|i| radial.value(norm(self.particle(x, i))))
                .sum(),
        }
    }

    pub fn energy(&self, x: &[f64], p: &[f64]) -> f64 {
        self.kinetic(p) + self.potential_energy(x)
    }

    fn separation(&self, x: &[f64], i: usize, j: usize) -> (f64, Vec<f64>) {
        let d: Vec<f64> = self
            .particle(x, i)
            .iter()
            .zip(self.particle(x, j))
            .map(|(a, b)| a - b)
            .collect();
        (norm(&d), d)
    }

    /// Writes `grad V(x)` into `out`.
    pub fn gradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|g| *g = 0.0);
        let dim = self.dimension;
        match &self.potential {
            Potential::Free => {}
            Potential::Harmonic { omegas } => {
                for i in 0..self.particles() {
                    let k = self.masses[i] * omegas[i] * omegas[i];
                    for c in 0..dim {
                        out[i * dim + c] = k * x[i * dim + c];
                    }
                }
            }
            Potential::Pairwise { pairs } => {
                for p in pairs {
                    let (r, d) = self.separation(x, p.i, p.j);
                    let (_, dv, _) = p.radial.eval(r);
                    if r == 0.0 {
                        continue;
                    }
                    for c in 0..dim {
                        let f = dv * d[c] / r;
                        out[p.i * dim + c] += f;
                        out[p.j * dim + c] -= f;
                    }
                }
            }
            Potential::External { radial } => {
                for i in 0..self.particles() {
                    let xi = self.particle(x, i);
                    let r = norm(xi);
                    if r == 0.0 {
                        continue;
                    }
                    let (_, dv, _) = radial.eval(r);
                    for c in 0..dim {
                        out[i * dim + c] = dv * xi[c] / r;
                    }
                }
            }
        }
    }

    /// Hessian of `V`, row-major `coords x coords`.
    pub fn hessian(&self, x: &[f64], out: &mut [f64]) {
        let n = self.coords();
        let dim = self.dimension;
        out.iter_mut().for_each(|h| *h = 0.0);
        let add_block = |out: &mut [f64], a: usize, b: usize, block: &[f64], sign: f64| {
            for r in 0..dim {
                for c in 0..dim {
                    out[(a * dim + r) * n + b * dim + c] += sign * block[r * dim + c];
                }
            }
        };
        let radial_block = |radial: &RadialPotential, d: &[f64]| -> Vec<f64> {
            let r = norm(d);
            let (_, dv, d2v) = radial.eval(r);
            let mut block = vec![0.0; dim * dim];
            for a in 0..dim {
                for b in 0..dim {
                    let uu = if r > 0.0 { d[a] * d[b] / (r * r) } else { 0.0 };
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let tangential = if r > 0.0 { dv / r } else { d2v };
                    block[a * dim + b] = d2v * uu + tangential * (delta - uu);
                }
            }
            block
        };
        match &self.potential {
            Potential::Free => {}
            Potential::Harmonic { omegas } => {
                for i in 0..self.particles() {
                    let k = self.masses[i] * omegas[i] * omegas[i];
                    for c in 0..dim {
                        out[(i * dim + c) * n + i * dim + c] = k;
                    }
                }
            }
            Potential::Pairwise { pairs } => {
                for p in pairs {
                    let (_, d) = self.separation(x, p.i, p.j);
                    let block = radial_block(&p.radial, &d);
                    add_block(out, p.i, p.i, &block, 1.0);
                    add_block(out, p.j, p.j, &block, 1.0);
                    add_block(out, p.i, p.j, &block, -1.0);
                    add_block(out, p.j, p.i, &block, -1.0);
                }
            }
            Potential::External { radial } => {
                for i in 0..self.particles() {
                    let block = radial_block(radial, self.particle(x, i));
                    add_block(out, i, i, &block, 1.0);
                }
            }
        }
    }

    /// Closest approach to a singular point of the potential, if any is
    /// nearer than `r_min`.
    pub fn singular_approach(&self, x: &[f64], r_min: f64) -> Option<(Approach, f64)> {
        match &self.potential {
            Potential::Pairwise { pairs } => pairs
                .iter()
                .filter(|p| p.radial.is_singular())
                .map(|p| (Approach::Pair(p.i, p.j), self.separation(x, p.i, p.j).0))
                .find(|&(_, r)| r < r_min),
            Potential::External { radial } if radial.is_singular() => (0..self.particles())
                .map(|i| (Approach::Center(i), norm(self.particle(x, i))))
                .find(|&(_, r)| r < r_min),
            _ => None,
        }
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}
