//! Heavy–light elastic collision in one dimension: the three ensembles whose
//! spatial correlations appear only after, only before, or on both sides of
//! the collision, their flow map, and transport checks.
//!
//! The heavy particle rests at `x1`; the light one moves at speed `v`. Each
//! family places the light particle at `x2 = a x1 + v t + zeta` before the
//! collision, with `zeta ~ rho2` independent of `x1 ~ rho1`, and reflects it
//! about `x1` afterwards.

use serde::{Deserialize, Serialize};

use crate::quadrature::GaussLegendre;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CorrelationError {
    #[error("invalid collision model: {0}")]
    InvalidModel(String),
    #[error("light particle at {x2} is not behind the heavy one at {x1}")]
    WrongOrdering { x1: f64, x2: f64 },
    #[error("time {t} is not valid for the {branch:?} branch (window ({t_i}, {t_f}))")]
    OutsideDomain {
        t: f64,
        branch: Branch,
        t_i: f64,
        t_f: f64,
    },
}

/// Compactly supported, unit-normalized one-dimensional profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Box {
        center: f64,
        half_width: f64,
    },
    /// Gaussian cut at `cutoff` standard deviations and renormalized.
    TruncatedGaussian {
        mean: f64,
        sigma: f64,
        cutoff: f64,
    },
}

impl Profile {
    pub fn unit_box() -> Self {
        Profile::Box {
            center: 0.0,
            half_width: 0.5,
        }
    }

    pub fn validate(&self) -> Result<(), CorrelationError> {
        let ok = match *self {
            Profile::Box { center, half_width } => {
                center.is_finite() && half_width > 0.0 && half_width.is_finite()
            }
            Profile::TruncatedGaussian {
                mean,
                sigma,
                cutoff,
            } => {
                mean.is_finite()
                    && sigma > 0.0
                    && sigma.is_finite()
                    && cutoff > 0.0
                    && cutoff.is_finite()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(CorrelationError::InvalidModel(format!(
                "bad profile {self:?}"
            )))
        }
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            Profile::Box { center, half_width } => (center - half_width, center + half_width),
            Profile::TruncatedGaussian {
                mean,
                sigma,
                cutoff,
            } => (mean - cutoff * sigma, mean + cutoff * sigma),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) {
            return 0.0;
        }
        match *self {
            Profile::Box { half_width, .. } => 0.5 / half_width,
            Profile::TruncatedGaussian {
                mean,
                sigma,
                cutoff,
            } => {
                let z = (x - mean) / sigma;
                let norm = sigma
                    * (2.0 * std::f64::consts::PI).sqrt()
                    * libm::erf(cutoff / std::f64::consts::SQRT_2);
                (-0.5 * z * z).exp() / norm
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Uncorrelated before, correlated after.
    Plus,
    /// Correlated before, uncorrelated after.
    Minus,
    /// Correlated on both sides.
    PlusMinus,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Plus, Family::Minus, Family::PlusMinus];

    /// Coefficient of `x1` in the pre-collision light position.
    fn pre_slope(self) -> f64 {
        match self {
            Family::Plus => 0.0,
            Family::Minus => 2.0,
            Family::PlusMinus => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Family::Plus => "plus",
            Family::Minus => "minus",
            Family::PlusMinus => "pm",
        }
    }
}

/// Momentum branch of the light particle: `+m2 v` before the collision,
/// `-m2 v` after it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Pre,
    Post,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CollisionModel {
    pub m1: f64,
    pub m2: f64,
    pub v: f64,
    pub rho1: Profile,
    pub rho2: Profile,
    pub t_i: f64,
    pub t_f: f64,
    #[serde(default = "default_ratio")]
    pub mass_ratio_threshold: f64,
}

fn default_ratio() -> f64 {
    100.0
}

/// Light-particle state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightState {
    pub position: f64,
    pub momentum: f64,
    pub branch: Branch,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDensityValue {
    pub value: f64,
    pub branch: Branch,
}

impl CollisionModel {
    /// Mass ratio 1000, unit-box profiles, `v = 1` and window `(-2, 2)`.
    pub fn reference() -> Self {
        Self {
            m1: 1000.0,
            m2: 1.0,
            v: 1.0,
            rho1: Profile::unit_box(),
            rho2: Profile::unit_box(),
            t_i: -2.0,
            t_f: 2.0,
            mass_ratio_threshold: default_ratio(),
        }
    }

    pub fn validate(&self) -> Result<(), CorrelationError> {
        let bad = |m: String| Err(CorrelationError::InvalidModel(m));
        if !(self.m1 > 0.0 && self.m2 > 0.0) {
            return bad("masses must be positive".into());
        }
        if !(self.m1 / self.m2 >= self.mass_ratio_threshold) {
            return bad(format!(
                "mass ratio {} is below the heavy-particle threshold {}",
                self.m1 / self.m2,
                self.mass_ratio_threshold
            ));
        }
        if !(self.v > 0.0 && self.v.is_finite()) {
            return bad("v must be positive".into());
        }
        if !(self.t_i < 0.0 && 0.0 < self.t_f) {
            return bad("window must satisfy t_I < 0 < t_F".into());
        }
        self.rho1.validate()?;
        self.rho2.validate()?;
        for family in Family::ALL {
            let (lo, hi) = self.collision_times(family);
            if !(lo > self.t_i && hi < self.t_f) {
                return bad(format!(
                    "{} collisions span [{lo}, {hi}], outside ({}, {})",
                    family.name(),
                    self.t_i,
                    self.t_f
                ));
            }
        }
        Ok(())
    }

    /// Range of collision times over the ensemble of `family`. The light
    /// particle meets `x1` when `x1 = a x1 + v t + zeta`.
    pub fn collision_times(&self, family: Family) -> (f64, f64) {
        let (l1, h1) = self.rho1.support();
        let (l2, h2) = self.rho2.support();
        let r = 1.0 - family.pre_slope();
        let (a, b) = (r * l1, r * h1);
        ((a.min(b) - h2) / self.v, (a.max(b) - l2) / self.v)
    }

    /// Light position at time `t` for source coordinates `(x1, zeta)`.
    pub fn light_position(
        &self,
        family: Family,
        branch: Branch,
        x1: f64,
        zeta: f64,
        t: f64,
    ) -> f64 {
        let pre = family.pre_slope() * x1 + self.v * t + zeta;
        match branch {
            Branch::Pre => pre,
            Branch::Post => 2.0 * x1 - pre,
        }
    }

    /// Inverse of [`light_position`](Self::light_position) in `zeta`.
    fn source(&self, family: Family, branch: Branch, x1: f64, x2: f64, t: f64) -> f64 {
        let pre = match branch {
            Branch::Pre => x2,
            Branch::Post => 2.0 * x1 - x2,
        };
        pre - family.pre_slope() * x1 - self.v * t
    }

    fn in_domain(&self, t: f64, branch: Branch) -> bool {
        match branch {
            Branch::Pre => t <= self.t_i,
            Branch::Post => t >= self.t_f,
        }
    }

    fn domain_error(&self, t: f64, branch: Branch) -> CorrelationError {
        CorrelationError::OutsideDomain {
            t,
            branch,
            t_i: self.t_i,
            t_f: self.t_f,
        }
    }

    /// Density on `branch`, zero on the branch the ensemble does not occupy
    /// at `t`. Undefined inside the window.
    fn eta_total(
        &self,
        family: Family,
        x1: f64,
        x2: f64,
        t: f64,
        branch: Branch,
    ) -> Result<f64, CorrelationError> {
        if self.in_domain(t, branch) {
            let zeta = self.source(family, branch, x1, x2, t);
            Ok(self.rho1.density(x1) * self.rho2.density(zeta))
        } else if t > self.t_i && t < self.t_f {
            Err(self.domain_error(t, branch))
        } else {
            Ok(0.0)
        }
    }
}

/// Moves the light particle for a duration `u` (either sign) in the field
/// of a heavy particle at rest at `x1`.
pub fn transport(model: &CollisionModel, x1: f64, x2: f64, branch: Branch, u: f64) -> LightState {
    let v = model.v;
    let (position, branch) = match (branch, u >= 0.0) {
        (Branch::Pre, true) if x2 <= x1 => {
            let hit = (x1 - x2) / v;
            if u < hit {
                (x2 + v * u, Branch::Pre)
            } else {
                (2.0 * x1 - x2 - v * u, Branch::Post)
            }
        }
        (Branch::Post, false) if x2 <= x1 => {
            let hit = (x1 - x2) / v;
            if -u < hit {
                (x2 - v * u, Branch::Post)
            } else {
                (2.0 * x1 - x2 + v * u, Branch::Pre)
            }
        }
        (Branch::Pre, _) => (x2 + v * u, Branch::Pre),
        (Branch::Post, _) => (x2 - v * u, Branch::Post),
    };
    let momentum = match branch {
        Branch::Pre => model.m2 * v,
        Branch::Post => -model.m2 * v,
    };
    LightState {
        position,
        momentum,
        branch,
    }
}

/// State at time `t` of a light particle launched at time 0 from `x2` towards
/// the heavy particle at `x1`.
pub fn collision_flow(
    model: &CollisionModel,
    x1: f64,
    x2: f64,
    t: f64,
) -> Result<LightState, CorrelationError> {
    if x2 > x1 {
        return Err(CorrelationError::WrongOrdering { x1, x2 });
    }
    Ok(transport(model, x1, x2, Branch::Pre, t))
}

/// The density of `family` on `branch`, defined before the window for
/// `Pre` and after it for `Post`.
pub fn eta_evaluate(
    model: &CollisionModel,
    family: Family,
    x1: f64,
    x2: f64,
    t: f64,
    branch: Branch,
) -> Result<PhaseDensityValue, CorrelationError> {
    if !model.in_domain(t, branch) {
        return Err(model.domain_error(t, branch));
    }
    let value = model.eta_total(family, x1, x2, t, branch)?;
    Ok(PhaseDensityValue { value, branch })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LiouvilleReport {
    pub max_residual: f64,
    pub samples: usize,
    /// Samples whose image crossed the collision.
    pub crossed: usize,
}

/// `max |eta(s, t) - eta(G_u s, t + u)|` over `samples` of `(x1, x2)` on
/// `branch` at time `t`.
pub fn liouville_check(
    model: &CollisionModel,
    family: Family,
    samples: &[(f64, f64)],
    branch: Branch,
    t: f64,
    u: f64,
) -> Result<LiouvilleReport, CorrelationError> {
    if !model.in_domain(t, branch) {
        return Err(model.domain_error(t, branch));
    }
    let mut max_residual = 0.0f64;
    let mut crossed = 0;
    for &(x1, x2) in samples {
        let before = model.eta_total(family, x1, x2, t, branch)?;
        let image = transport(model, x1, x2, branch, u);
        crossed += usize::from(image.branch != branch);
        let after = model.eta_total(family, x1, image.position, t + u, image.branch)?;
        max_residual = max_residual.max((before - after).abs());
    }
    Ok(LiouvilleReport {
        max_residual,
        samples: samples.len(),
        crossed,
    })
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

/// First `n` points of the base-(2, 3) Halton sequence mapped onto
/// `[lo1, hi1] x [lo2, hi2]`.
pub fn halton_points(n: usize, (lo1, hi1): (f64, f64), (lo2, hi2): (f64, f64)) -> Vec<(f64, f64)> {
    (1..=n as u64)
        .map(|i| {
            (
                lo1 + (hi1 - lo1) * radical_inverse(i, 2),
                lo2 + (hi2 - lo2) * radical_inverse(i, 3),
            )
        })
        .collect()
}

/// Box containing the support of the density at time `t`, widened by
/// `margin` times its size on each side.
pub fn support_box(
    model: &CollisionModel,
    family: Family,
    branch: Branch,
    t: f64,
    margin: f64,
) -> ((f64, f64), (f64, f64)) {
    let (l1, h1) = model.rho1.support();
    let (l2, h2) = model.rho2.support();
    let corners = [(l1, l2), (l1, h2), (h1, l2), (h1, h2)]
        .map(|(a, z)| model.light_position(family, branch, a, z, t));
    let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let widen = |(a, b): (f64, f64)| (a - margin * (b - a), b + margin * (b - a));
    (widen((l1, h1)), widen((lo, hi)))
}

/// Joint spatial moments of one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpatialMoments {
    pub mass: f64,
    pub mean_x1: f64,
    pub mean_x2: f64,
    pub covariance: f64,
}

const ORDER: usize = 64;

/// Integrates `f(x1, x2) * eta` by tensor Gauss–Legendre in the source
/// coordinates `(x1, zeta)`, where the density factorizes.
fn integrate_source<F: FnMut(f64, f64) -> f64>(
    model: &CollisionModel,
    family: Family,
    branch: Branch,
    t: f64,
    mut f: F,
) -> f64 {
    let gl = GaussLegendre::new(ORDER);
    let (l1, h1) = model.rho1.support();
    let (l2, h2) = model.rho2.support();
    let mut total = 0.0;
    for (x1, w1) in gl.on(l1, h1) {
        let r1 = model.rho1.density(x1);
        for (zeta, w2) in gl.on(l2, h2) {
            let x2 = model.light_position(family, branch, x1, zeta, t);
            total += w1 * w2 * r1 * model.rho2.density(zeta) * f(x1, x2);
        }
    }
    total
}

pub fn spatial_moments(
    model: &CollisionModel,
    family: Family,
    branch: Branch,
    t: f64,
) -> Result<SpatialMoments, CorrelationError> {
    if !model.in_domain(t, branch) {
        return Err(model.domain_error(t, branch));
    }
    let mass = integrate_source(model, family, branch, t, |_, _| 1.0);
    let mean_x1 = integrate_source(model, family, branch, t, |x1, _| x1) / mass;
    let mean_x2 = integrate_source(model, family, branch, t, |_, x2| x2) / mass;
    let covariance = integrate_source(model, family, branch, t, |x1, x2| {
        (x1 - mean_x1) * (x2 - mean_x2)
    }) / mass;
    Ok(SpatialMoments {
        mass,
        mean_x1,
        mean_x2,
        covariance,
    })
}

/// `Cov(x1, x2)` of the density of `family` on `branch` at time `t`.
pub fn correlation_statistic(
    model: &CollisionModel,
    family: Family,
    branch: Branch,
    t: f64,
) -> Result<f64, CorrelationError> {
    Ok(spatial_moments(model, family, branch, t)?.covariance)
}

/// Heavy-particle marginal `int eta dx2` at `x1`.
pub fn heavy_marginal(
    model: &CollisionModel,
    family: Family,
    branch: Branch,
    t: f64,
    x1: f64,
) -> Result<f64, CorrelationError> {
    if !model.in_domain(t, branch) {
        return Err(model.domain_error(t, branch));
    }
    let gl = GaussLegendre::new(ORDER);
    let (l2, h2) = model.rho2.support();
    // x2 is a unit-slope shift of zeta, so the slice integral is over zeta
    Ok(gl
        .on(l2, h2)
        .map(|(zeta, w)| {
            let x2 = model.light_position(family, branch, x1, zeta, t);
            w * model.eta_total(family, x1, x2, t, branch).unwrap_or(0.0)
        })
        .sum())
}

/// Sign of a covariance at the `+` threshold `1e-3`.
pub fn signature_symbol(cov: f64) -> char {
    if cov > 1e-3 {
        '+'
    } else if cov < -1e-3 {
        '-'
    } else {
        '0'
    }
}

/// Rows plus/minus/pm, columns pre/post, evaluated at `t_I` and `t_F`.
pub fn signature_matrix(model: &CollisionModel) -> Result<[[char; 2]; 3], CorrelationError> {
    let mut out = [['0'; 2]; 3];
    for (row, family) in Family::ALL.into_iter().enumerate() {
        out[row][0] = signature_symbol(correlation_statistic(
            model,
            family,
            Branch::Pre,
            model.t_i,
        )?);
        out[row][1] = signature_symbol(correlation_statistic(
            model,
            family,
            Branch::Post,
            model.t_f,
        )?);
    }
    Ok(out)
}
