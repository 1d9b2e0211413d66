//! Long-time behaviour of trajectories: the p-limit `lim m x(t) / t` and
//! the decomposition of the particles into asymptotically bound fragments.

use serde::{Deserialize, Serialize};

use super::integrate::{advance, PhasePoint, StepControl, Trajectory};
use super::potential::HamiltonianSpec;
use super::{norm, DynamicsError};

/// Estimates of `m x(T) / T` at each horizon of the schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLimitReport {
    pub horizons: Vec<f64>,
    pub estimates: Vec<Vec<f64>>,
    /// Norm of the difference between consecutive estimates.
    pub increments: Vec<f64>,
    pub converged: bool,
    /// Momentum reached at the largest horizon.
    pub final_momentum: Vec<f64>,
}

impl PLimitReport {
    pub fn estimate(&self) -> &[f64] {
        self.estimates.last().expect("schedule is non-empty")
    }
}

/// Integrates from `start` through the absolute times in `horizons`
/// (increasing) and reports `m x(T) / T` at each. The run is declared
/// converged when the last two estimates differ by less than `tolerance`;
/// otherwise the report is inconclusive rather than an error.
pub fn p_limit(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    horizons: &[f64],
    control: &StepControl,
    tolerance: f64,
) -> Result<PLimitReport, DynamicsError> {
    if horizons.is_empty() {
        return Err(DynamicsError::InvalidSpec(
            "p-limit needs at least one horizon".into(),
        ));
    }
    let masses = spec.coord_masses();
    let mut point = start.clone();
    let mut estimates: Vec<Vec<f64>> = Vec::with_capacity(horizons.len());
    for &t in horizons {
        if t <= 0.0 {
            return Err(DynamicsError::InvalidSpan { start: 0.0, end: t });
        }
        if t > point.time {
            point = advance(spec, &point, t, control)?;
        } else if t < point.time {
            return Err(DynamicsError::InvalidSpan {
                start: point.time,
                end: t,
            });
        }
        estimates.push(
            point
                .positions
                .iter()
                .zip(&masses)
                .map(|(x, m)| m * x / t)
                .collect(),
        );
    }
    let increments: Vec<f64> = estimates
        .windows(2)
        .map(|w| {
            norm(
                &w[1]
                    .iter()
                    .zip(&w[0])
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            )
        })
        .collect();
    let converged = increments.last().is_some_and(|&d| d < tolerance);
    Ok(PLimitReport {
        horizons: horizons.to_vec(),
        estimates,
        increments,
        converged,
        final_momentum: point.momenta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelTolerances {
    /// Length of the trailing time window examined.
    pub window: f64,
    /// Largest spread of a pair separation over the window that still
    /// counts as bound.
    pub excursion: f64,
    /// Mean relative speeds above this separate two fragments.
    pub velocity: f64,
}

impl Default for ChannelTolerances {
    fn default() -> Self {
        Self {
            window: 200.0,
            excursion: 10.0,
            velocity: 1e-2,
        }
    }
}

/// Particles grouped into fragments, with each fragment's mean
/// centre-of-mass velocity over the trailing window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelPartition {
    pub fragments: Vec<Vec<usize>>,
    pub fragment_velocities: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ChannelOutcome {
    Channel(ChannelPartition),
    Inconclusive {
        reason: String,
        pairs: Vec<(usize, usize)>,
    },
}

impl ChannelOutcome {
    pub fn partition(&self) -> Option<&ChannelPartition> {
        match self {
            Self::Channel(p) => Some(p),
            Self::Inconclusive { .. } => None,
        }
    }
}

struct PairStats {
    excursion: f64,
    drift: f64,
}

fn pair_stats(traj: &Trajectory, window: &[PhasePoint], i: usize, j: usize) -> PairStats {
    let d = traj.spec().dimension;
    let sep = |s: &PhasePoint| -> Vec<f64> {
        (0..d)
            .map(|k| s.positions[i * d + k] - s.positions[j * d + k])
            .collect()
    };
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for s in window {
        let r = norm(&sep(s));
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let first = &window[0];
    let last = window.last().expect("window is non-empty");
    let span = last.time - first.time;
    let delta: Vec<f64> = sep(last)
        .iter()
        .zip(sep(first))
        .map(|(a, b)| a - b)
        .collect();
    PairStats {
        excursion: hi - lo,
        drift: norm(&delta) / span,
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut k = i;
    while parent[k] != r {
        let next = parent[k];
        parent[k] = r;
        k = next;
    }
    r
}

/// Decomposes the particles of `traj` into fragments: a pair is bound when
/// its separation stays within `excursion` over the trailing window and
/// unbound when it drifts apart faster than `velocity`. A pair that is
/// neither makes the classification inconclusive.
pub fn classify_channel(
    traj: &Trajectory,
    tol: &ChannelTolerances,
) -> Result<ChannelOutcome, DynamicsError> {
    let samples = traj.samples();
    let t_end = traj.end().time;
    if t_end - traj.start().time < tol.window || !(tol.window > 0.0) {
        return Err(DynamicsError::InvalidSpec(format!(
            "trajectory spans {} but the channel window is {}",
            t_end - traj.start().time,
            tol.window
        )));
    }
    let cut = samples.partition_point(|s| s.time < t_end - tol.window);
    let window = &samples[cut.min(samples.len() - 2)..];
    let spec = traj.spec();
    let n = spec.particles();
    let d = spec.dimension;

    let mut parent: Vec<usize> = (0..n).collect();
    let mut ambiguous = Vec::new();
    let mut unbound = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let st = pair_stats(traj, window, i, j);
            if st.excursion <= tol.excursion {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                parent[a] = b;
            } else if st.drift > tol.velocity {
                unbound.push((i, j));
            } else {
                ambiguous.push((i, j));
            }
        }
    }
    if !ambiguous.is_empty() {
        return Ok(ChannelOutcome::Inconclusive {
            reason: "pair neither bound nor separating within tolerance".into(),
            pairs: ambiguous,
        });
    }
    let split: Vec<(usize, usize)> = unbound
        .into_iter()
        .filter(|&(i, j)| find(&mut parent, i) == find(&mut parent, j))
        .collect();
    if !split.is_empty() {
        return Ok(ChannelOutcome::Inconclusive {
            reason: "unbound pair joined through bound partners".into(),
            pairs: split,
        });
    }

    let mut fragments: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => fragments[k].push(i),
            None => {
                roots.push(r);
                fragments.push(vec![i]);
            }
        }
    }
    let first = &window[0];
    let last = window.last().expect("window is non-empty");
    let span = last.time - first.time;
    let fragment_velocities: Vec<Vec<f64>> = fragments
        .iter()
        .map(|members| {
            let mass: f64 = members.iter().map(|&i| spec.masses[i]).sum();
            (0..d)
                .map(|k| {
                    members
                        .iter()
                        .map(|&i| {
                            spec.masses[i]
                                * (last.positions[i * d + k] - first.positions[i * d + k])
                        })
                        .sum::<f64>()
                        / (mass * span)
                })
                .collect()
        })
        .collect();
    for a in 0..fragments.len() {
        for b in a + 1..fragments.len() {
            let dv: Vec<f64> = fragment_velocities[a]
                .iter()
                .zip(&fragment_velocities[b])
                .map(|(x, y)| x - y)
                .collect();
            if norm(&dv) <= tol.velocity {
                return Ok(ChannelOutcome::Inconclusive {
                    reason: "two fragments share a velocity within tolerance".into(),
                    pairs: vec![(fragments[a][0], fragments[b][0])],
                });
            }
        }
    }
    Ok(ChannelOutcome::Channel(ChannelPartition {
        fragments,
        fragment_velocities,
    }))
}
