use std::io;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::potential::{Approach, HamiltonianSpec};
use super::rk::{dopri5, RkOptions, RkStop};
use super::DynamicsError;
use crate::export::{fmt_f64, CsvTable};

/// A point of phase space at a given time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub positions: Vec<f64>,
    pub momenta: Vec<f64>,
    pub time: f64,
}

impl PhasePoint {
    pub fn new(positions: Vec<f64>, momenta: Vec<f64>, time: f64) -> Self {
        Self {
            positions,
            momenta,
            time,
        }
    }

    fn check(&self, spec: &HamiltonianSpec) -> Result<(), DynamicsError> {
        let n = spec.coords();
        if self.positions.len() != n || self.momenta.len() != n {
            return Err(DynamicsError::ShapeMismatch {
                expected: n,
                positions: self.positions.len(),
                momenta: self.momenta.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Integrator {
    /// Fixed-step velocity Verlet. Symplectic, second order.
    Leapfrog { dt: f64 },
    /// Dormand–Prince 5(4) with error control.
    Adaptive { rtol: f64, atol: f64, max_step: f64 },
    /// Dormand–Prince 5 at a uniform step, for evenly spaced samples.
    UniformRk { dt: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StepControl {
    pub integrator: Integrator,
    /// Keep every `record_every`-th step (the endpoints are always kept).
    pub record_every: usize,
    /// Distance below which a singular interaction aborts the run.
    pub r_min: f64,
    /// Relative energy drift tolerated over the whole run.
    pub max_energy_drift: Option<f64>,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self::adaptive(1e-12)
    }
}

impl StepControl {
    pub fn adaptive(rtol: f64) -> Self {
        Self {
            integrator: Integrator::Adaptive {
                rtol,
                atol: rtol,
                max_step: f64::INFINITY,
            },
            record_every: 1,
            r_min: 1e-6,
            max_energy_drift: Some(1e-6),
            max_steps: 50_000_000,
        }
    }

    pub fn leapfrog(dt: f64) -> Self {
        Self {
            integrator: Integrator::Leapfrog { dt },
            max_energy_drift: None,
            ..Self::adaptive(1e-12)
        }
    }

    pub fn uniform(dt: f64) -> Self {
        Self {
            integrator: Integrator::UniformRk { dt },
            ..Self::adaptive(1e-12)
        }
    }

    pub fn with_max_step(mut self, h: f64) -> Self {
        if let Integrator::Adaptive { max_step, .. } = &mut self.integrator {
            *max_step = h;
        }
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn with_energy_drift(mut self, drift: Option<f64>) -> Self {
        self.max_energy_drift = drift;
        self
    }

    fn rk_options(&self) -> Option<RkOptions> {
        match self.integrator {
            Integrator::Leapfrog { .. } => None,
            Integrator::Adaptive {
                rtol,
                atol,
                max_step,
            } => Some(RkOptions {
                rtol,
                atol,
                max_step,
                fixed_step: None,
                max_steps: self.max_steps,
            }),
            Integrator::UniformRk { dt } => Some(RkOptions {
                rtol: 1.0,
                atol: 1.0,
                max_step: dt,
                fixed_step: Some(dt),
                max_steps: self.max_steps,
            }),
        }
    }
}

/// Time-ordered phase-space samples of one solution of Hamilton's equations.
#[derive(Debug, Clone)]
pub struct Trajectory {
    spec: Arc<HamiltonianSpec>,
    samples: Vec<PhasePoint>,
}

impl Trajectory {
    pub fn spec(&self) -> &HamiltonianSpec {
        &self.spec
    }

    pub fn samples(&self) -> &[PhasePoint] {
        &self.samples
    }

    pub fn start(&self) -> &PhasePoint {
        &self.samples[0]
    }

    pub fn end(&self) -> &PhasePoint {
        self.samples.last().expect("trajectory has samples")
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn energy_at(&self, k: usize) -> f64 {
        let s = &self.samples[k];
        self.spec.energy(&s.positions, &s.momenta)
    }

    /// Relative drift `|H(end) - H(start)| / |H(start)|` (absolute when `H(start) = 0`).
    pub fn energy_drift(&self) -> f64 {
        relative_drift(self.energy_at(0), self.energy_at(self.len() - 1))
    }

    /// Columns `t, x1..xn, p1..pn, energy`.
    pub fn to_csv(&self) -> CsvTable {
        let n = self.spec.coords();
        let mut header = vec!["t".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=n).map(|i| format!("p{i}")));
        header.push("energy".into());
        let mut table = CsvTable::new(header);
        for s in &self.samples {
            let mut row = vec![fmt_f64(s.time)];
            row.extend(s.positions.iter().map(|&v| fmt_f64(v)));
            row.extend(s.momenta.iter().map(|&v| fmt_f64(v)));
            row.push(fmt_f64(self.spec.energy(&s.positions, &s.momenta)));
            table.push(row);
        }
        table
    }

    pub fn write_csv<W: io::Write>(&self, w: W) -> io::Result<()> {
        self.to_csv().write(w)
    }
}

fn relative_drift(e0: f64, e1: f64) -> f64 {
    let d = (e1 - e0).abs();
    if e0 == 0.0 {
        d
    } else {
        d / e0.abs()
    }
}

/// Solution of Hamilton's equations together with the Jacobi fields
/// `dx(t)/dp0` and `dp(t)/dp0` along it.
#[derive(Debug, Clone)]
pub struct VariationalTrajectory {
    pub trajectory: Trajectory,
    /// `dx(t)/dp0` at every recorded sample.
    pub position_jacobians: Vec<DMatrix<f64>>,
    /// `dp(t_end)/dp0`.
    pub final_momentum_jacobian: DMatrix<f64>,
}

impl VariationalTrajectory {
    pub fn final_position_jacobian(&self) -> &DMatrix<f64> {
        self.position_jacobians.last().expect("at least one sample")
    }
}

fn singularity_error(approach: Approach, time: f64, distance: f64) -> DynamicsError {
    match approach {
        Approach::Pair(i, j) => DynamicsError::Singularity {
            first: i,
            second: Some(j),
            time,
            distance,
        },
        Approach::Center(i) => DynamicsError::Singularity {
            first: i,
            second: None,
            time,
            distance,
        },
    }
}

fn rk_error(stop: RkStop<DynamicsError>) -> DynamicsError {
    match stop {
        RkStop::Observer(e) => e,
        RkStop::StepUnderflow { t } => DynamicsError::StepUnderflow { time: t },
        RkStop::TooManySteps { t } => DynamicsError::StepLimit { time: t },
    }
}

fn check_forward(start: &PhasePoint, t_end: f64) -> Result<(), DynamicsError> {
    if !(t_end > start.time) {
        return Err(DynamicsError::InvalidSpan {
            start: start.time,
            end: t_end,
        });
    }
    Ok(())
}

/// Integrates Hamilton's equations from `start` to `t_end`.
pub fn integrate(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    t_end: f64,
    control: &StepControl,
) -> Result<Trajectory, DynamicsError> {
    spec.validate()?;
    start.check(spec)?;
    check_forward(start, t_end)?;
    let spec = Arc::new(spec.clone());
    let mut samples = vec![start.clone()];
    let n = spec.coords();
    let every = control.record_every.max(1);
    let mut count = 0usize;

    let mut record = |t: f64, x: &[f64], p: &[f64], last: bool| -> Result<(), DynamicsError> {
        if let Some((who, r)) = spec.singular_approach(x, control.r_min) {
            return Err(singularity_error(who, t, r));
        }
        count += 1;
        if last || count.is_multiple_of(every) {
            samples.push(PhasePoint::new(x.to_vec(), p.to_vec(), t));
        }
        Ok(())
    };

    match control.rk_options() {
        None => {
            let Integrator::Leapfrog { dt } = control.integrator else {
                unreachable!()
            };
            leapfrog(&spec, start, t_end, dt, control.max_steps, &mut record)?;
        }
        Some(opts) => {
            let masses = spec.coord_masses();
            let mut grad = vec![0.0; n];
            let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
                let (x, p) = y.split_at(n);
                spec.gradient(x, &mut grad);
                for i in 0..n {
                    dy[i] = p[i] / masses[i];
                    dy[n + i] = -grad[i];
                }
            };
            let y0: Vec<f64> = start
                .positions
                .iter()
                .chain(&start.momenta)
                .copied()
                .collect();
            dopri5(rhs, start.time, &y0, t_end, &opts, |t, y| {
                record(t, &y[..n], &y[n..], t >= t_end)
            })
            .map_err(rk_error)?;
        }
    }
    if samples.last().map(|s| s.time) != Some(t_end) {
        // guard against a recorder that skipped the final step
        return Err(DynamicsError::StepLimit { time: t_end });
    }
    let traj = Trajectory { spec, samples };
    if let Some(tol) = control.max_energy_drift {
        let drift = traj.energy_drift();
        if drift > tol {
            return Err(DynamicsError::EnergyDrift {
                drift,
                tolerance: tol,
            });
        }
    }
    Ok(traj)
}

fn leapfrog<R>(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    t_end: f64,
    dt: f64,
    max_steps: usize,
    record: &mut R,
) -> Result<(), DynamicsError>
where
    R: FnMut(f64, &[f64], &[f64], bool) -> Result<(), DynamicsError>,
{
    if !(dt > 0.0) {
        return Err(DynamicsError::InvalidSpec(
            "leapfrog step must be positive".into(),
        ));
    }
    let span = t_end - start.time;
    let steps = (span / dt).ceil().max(1.0) as usize;
    if steps > max_steps {
        return Err(DynamicsError::StepLimit { time: start.time });
    }
    let h = span / steps as f64;
    let n = spec.coords();
    let masses = spec.coord_masses();
    let mut x = start.positions.clone();
    let mut p = start.momenta.clone();
    let mut g = vec![0.0; n];
    spec.gradient(&x, &mut g);
    for k in 1..=steps {
        for i in 0..n {
            p[i] -= 0.5 * h * g[i];
            x[i] += h * p[i] / masses[i];
        }
        spec.gradient(&x, &mut g);
        for i in 0..n {
            p[i] -= 0.5 * h * g[i];
        }
        let t = if k == steps {
            t_end
        } else {
            start.time + k as f64 * h
        };
        record(t, &x, &p, k == steps)?;
    }
    Ok(())
}

/// Integrates the trajectory together with its variational (monodromy)
/// equations, always with the adaptive scheme from `control`.
pub fn integrate_variational(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    t_end: f64,
    control: &StepControl,
) -> Result<VariationalTrajectory, DynamicsError> {
    spec.validate()?;
    start.check(spec)?;
    check_forward(start, t_end)?;
    let opts = control
        .rk_options()
        .unwrap_or_else(|| StepControl::default().rk_options().expect("adaptive"));
    let n = spec.coords();
    let nn = n * n;
    let masses = spec.coord_masses();
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; nn];
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let x = &y[..n];
        let p = &y[n..2 * n];
        let jx = &y[2 * n..2 * n + nn];
        let jp = &y[2 * n + nn..];
        spec.gradient(x, &mut grad);
        spec.hessian(x, &mut hess);
        for i in 0..n {
            dy[i] = p[i] / masses[i];
            dy[n + i] = -grad[i];
        }
        for r in 0..n {
            for c in 0..n {
                dy[2 * n + r * n + c] = jp[r * n + c] / masses[r];
                let mut acc = 0.0;
                for k in 0..n {
                    acc += hess[r * n + k] * jx[k * n + c];
                }
                dy[2 * n + nn + r * n + c] = -acc;
            }
        }
    };
    let mut y0: Vec<f64> = start
        .positions
        .iter()
        .chain(&start.momenta)
        .copied()
        .collect();
    y0.extend(std::iter::repeat_n(0.0, nn));
    y0.extend(DMatrix::<f64>::identity(n, n).iter());

    let every = control.record_every.max(1);
    let mut count = 0usize;
    let mut samples = vec![start.clone()];
    let mut jacobians = vec![DMatrix::zeros(n, n)];
    let y_end = dopri5(rhs, start.time, &y0, t_end, &opts, |t, y| {
        let x = &y[..n];
        if let Some((who, r)) = spec.singular_approach(x, control.r_min) {
            return Err(singularity_error(who, t, r));
        }
        count += 1;
        if t >= t_end || count.is_multiple_of(every) {
            samples.push(PhasePoint::new(x.to_vec(), y[n..2 * n].to_vec(), t));
            jacobians.push(DMatrix::from_row_slice(n, n, &y[2 * n..2 * n + nn]));
        }
        Ok(())
    })
    .map_err(rk_error)?;
    let final_momentum_jacobian = DMatrix::from_row_slice(n, n, &y_end[2 * n + nn..]);
    let trajectory = Trajectory {
        spec: Arc::new(spec.clone()),
        samples,
    };
    if let Some(tol) = control.max_energy_drift {
        let drift = trajectory.energy_drift();
        if drift > tol {
            return Err(DynamicsError::EnergyDrift {
                drift,
                tolerance: tol,
            });
        }
    }
    Ok(VariationalTrajectory {
        trajectory,
        position_jacobians: jacobians,
        final_momentum_jacobian,
    })
}

/// Final phase point only; nothing is stored along the way.
pub fn advance(
    spec: &HamiltonianSpec,
    start: &PhasePoint,
    t_end: f64,
    control: &StepControl,
) -> Result<PhasePoint, DynamicsError> {
    let control = StepControl {
        record_every: usize::MAX,
        ..*control
    };
    let traj = integrate(spec, start, t_end, &control)?;
    Ok(traj.end().clone())
}

/// Quadrature rule for the action integral over trajectory samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionQuadrature {
    Trapezoid,
    /// Composite Simpson; needs evenly spaced samples.
    Simpson,
    /// Trapezoid with the endpoint-derivative correction, using the exact
    /// `dL/dt = -2 grad V . p / m`. Fourth order on any sample spacing.
    #[default]
    Hermite,
}

/// `int (T - V) dt` along the recorded samples.
pub fn action_along(traj: &Trajectory, rule: ActionQuadrature) -> Result<f64, DynamicsError> {
    let samples = traj.samples();
    if samples.len() < 2 {
        return Err(DynamicsError::TooFewSamples(samples.len()));
    }
    let spec = traj.spec();
    let lagrangian =
        |s: &PhasePoint| spec.kinetic(&s.momenta) - spec.potential_energy(&s.positions);
    match rule {
        ActionQuadrature::Trapezoid => Ok(samples
            .windows(2)
            .map(|w| 0.5 * (w[1].time - w[0].time) * (lagrangian(&w[0]) + lagrangian(&w[1])))
            .sum()),
        ActionQuadrature::Simpson => {
            let h = samples[1].time - samples[0].time;
            let uniform = samples
                .windows(2)
                .all(|w| ((w[1].time - w[0].time) - h).abs() <= 1e-9 * h.abs());
            if !uniform || samples.len().is_multiple_of(2) {
                return Err(DynamicsError::NonUniformSamples);
            }
            let l: Vec<f64> = samples.iter().map(lagrangian).collect();
            let m = l.len() - 1;
            let mut sum = l[0] + l[m];
            for (k, v) in l.iter().enumerate().take(m).skip(1) {
                sum += if k % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            Ok(sum * h / 3.0)
        }
        ActionQuadrature::Hermite => {
            let n = spec.coords();
            let masses = spec.coord_masses();
            let mut g = vec![0.0; n];
            let mut slope = |s: &PhasePoint| {
                spec.gradient(&s.positions, &mut g);
                -2.0 * (0..n).map(|i| g[i] * s.momenta[i] / masses[i]).sum::<f64>()
            };
            let mut total = 0.0;
            let mut prev_l = lagrangian(&samples[0]);
            let mut prev_d = slope(&samples[0]);
            for w in samples.windows(2) {
                let h = w[1].time - w[0].time;
                let l = lagrangian(&w[1]);
                let d = slope(&w[1]);
                total += 0.5 * h * (prev_l + l) + h * h / 12.0 * (prev_d - d);
                prev_l = l;
                prev_d = d;
            }
            Ok(total)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PairTerm, Potential, RadialPotential};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn point(x: &[f64], p: &[f64]) -> PhasePoint {
        PhasePoint::new(x.to_vec(), p.to_vec(), 0.0)
    }

    #[test]
    fn free_particle_moves_uniformly() {
        let spec = HamiltonianSpec::free(1.0, 1).unwrap();
        for control in [StepControl::default(), StepControl::leapfrog(0.01)] {
            let traj = integrate(&spec, &point(&[0.0], &[2.0]), 3.0, &control).unwrap();
            let end = traj.end();
            assert!((end.positions[0] - 6.0).abs() < 1e-12);
            assert_eq!(end.momenta[0], 2.0);
            assert_eq!(end.time, 3.0);
        }
    }

    #[test]
    fn harmonic_quarter_period() {
        let spec = HamiltonianSpec::harmonic(1.0, 1.0, 1).unwrap();
        let traj = integrate(
            &spec,
            &point(&[1.0], &[0.0]),
            FRAC_PI_2,
            &StepControl::default(),
        )
        .unwrap();
        let end = traj.end();
        assert!(end.positions[0].abs() < 1e-9, "{}", end.positions[0]);
        assert!((end.momenta[0] + 1.0).abs() < 1e-9);
    }

    fn coulomb_pair() -> HamiltonianSpec {
        HamiltonianSpec::new(
            vec![1.0, 2.0],
            2,
            Potential::Pairwise {
                pairs: vec![PairTerm {
                    i: 0,
                    j: 1,
                    radial: RadialPotential::ScreenedCoulomb {
                        strength: 1.0,
                        screening: 2.0,
                    },
                }],
            },
        )
        .unwrap()
    }

    #[test]
    fn screened_coulomb_conserves_energy() {
        let spec = coulomb_pair();
        let start = point(&[-5.0, 0.4, 5.0, -0.3], &[1.0, 0.0, -1.0, 0.0]);
        let traj = integrate(&spec, &start, 12.0, &StepControl::default()).unwrap();
        assert!(traj.energy_drift() < 1e-9, "drift {}", traj.energy_drift());
        // the pair actually interacted
        assert!(traj.end().momenta[1].abs() > 1e-3);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let spec = coulomb_pair();
        let start = point(&[-3.0, 0.4, 3.0, -0.3], &[1.0, 0.2, -1.0, 0.0]);
        let fwd = integrate(&spec, &start, 6.0, &StepControl::default()).unwrap();
        let end = fwd.end();
        let back_start = PhasePoint::new(
            end.positions.clone(),
            end.momenta.iter().map(|p| -p).collect(),
            0.0,
        );
        let back = integrate(&spec, &back_start, 6.0, &StepControl::default()).unwrap();
        let b = back.end();
        for i in 0..4 {
            assert!((b.positions[i] - start.positions[i]).abs() < 1e-8);
            assert!((b.momenta[i] + start.momenta[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn collision_is_reported() {
        let spec = HamiltonianSpec::new(
            vec![1.0, 1.0],
            1,
            Potential::Pairwise {
                pairs: vec![PairTerm {
                    i: 0,
                    j: 1,
                    radial: RadialPotential::ScreenedCoulomb {
                        strength: -1.0,
                        screening: 10.0,
                    },
                }],
            },
        )
        .unwrap();
        let control = StepControl {
            r_min: 1e-3,
            ..StepControl::default()
        };
        let err = integrate(&spec, &point(&[-1.0, 1.0], &[0.0, 0.0]), 10.0, &control).unwrap_err();
        match err {
            DynamicsError::Singularity {
                first,
                second,
                time,
                ..
            } => {
                assert_eq!((first, second), (0, Some(1)));
                assert!(time > 0.0 && time < 10.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn free_action() {
        let spec = HamiltonianSpec::free(1.0, 1).unwrap();
        for rule in [ActionQuadrature::Trapezoid, ActionQuadrature::Hermite] {
            let traj =
                integrate(&spec, &point(&[0.0], &[2.0]), 1.0, &StepControl::default()).unwrap();
            assert!((action_along(&traj, rule).unwrap() - 2.0).abs() < 1e-12);
            let rest =
                integrate(&spec, &point(&[0.7], &[0.0]), 1.0, &StepControl::default()).unwrap();
            assert_eq!(action_along(&rest, rule).unwrap(), 0.0);
        }
    }

    #[test]
    fn harmonic_action_matches_closed_form() {
        // Oracle: W = (m w / 2 sin wT) [(x1^2 + x2^2) cos wT - 2 x1 x2].
        let (x1, x2, t) = (0.0f64, 1.0f64, FRAC_PI_4);
        let exact = 1.0 / (2.0 * t.sin()) * ((x1 * x1 + x2 * x2) * t.cos() - 2.0 * x1 * x2);
        assert!((exact - 0.5).abs() < 1e-15);
        let p0 = (x2 - x1 * t.cos()) / t.sin();
        let spec = HamiltonianSpec::harmonic(1.0, 1.0, 1).unwrap();
        let traj = integrate(&spec, &point(&[x1], &[p0]), t, &StepControl::default()).unwrap();
        assert!((traj.end().positions[0] - x2).abs() < 1e-10);
        let w = action_along(&traj, ActionQuadrature::Hermite).unwrap();
        assert!((w - exact).abs() < 1e-6, "{w}");
        let uniform = integrate(
            &spec,
            &point(&[x1], &[p0]),
            t,
            &StepControl::uniform(t / 200.0),
        )
        .unwrap();
        let w = action_along(&uniform, ActionQuadrature::Simpson).unwrap();
        assert!((w - exact).abs() < 1e-8, "{w}");
    }

    #[test]
    fn action_needs_two_samples() {
        let spec = HamiltonianSpec::free(1.0, 1).unwrap();
        let traj = Trajectory {
            spec: Arc::new(spec),
            samples: vec![point(&[0.0], &[0.0])],
        };
        assert!(matches!(
            action_along(&traj, ActionQuadrature::Trapezoid),
            Err(DynamicsError::TooFewSamples(1))
        ));
    }

    #[test]
    fn monodromy_matches_oscillator_jacobi_field() {
        let spec = HamiltonianSpec::harmonic(2.0, 1.5, 1).unwrap();
        let v = integrate_variational(&spec, &point(&[0.3], &[0.1]), 1.7, &StepControl::default())
            .unwrap();
        for (s, j) in v.trajectory.samples().iter().zip(&v.position_jacobians) {
            let exact = (1.5 * s.time).sin() / (2.0 * 1.5);
            assert!((j[(0, 0)] - exact).abs() < 1e-10);
        }
        assert!((v.final_momentum_jacobian[(0, 0)] - (1.5f64 * 1.7).cos()).abs() < 1e-10);
    }

    #[test]
    fn leapfrog_energy_error_is_bounded() {
        let spec = HamiltonianSpec::harmonic(1.0, 1.0, 1).unwrap();
        let control = StepControl::leapfrog(0.01).with_record_every(100);
        let traj = integrate(&spec, &point(&[1.0], &[0.0]), 1000.0, &control).unwrap();
        let worst = (0..traj.len())
            .map(|k| (traj.energy_at(k) - 0.5).abs() / 0.5)
            .fold(0.0, f64::max);
        // Verlet shadow-energy bound ~ (w dt)^2 / 4.
        assert!(worst < 5e-5, "{worst}");
    }

    #[test]
    fn csv_has_expected_columns() {
        let spec = HamiltonianSpec::free(1.0, 2).unwrap();
        let traj = integrate(
            &spec,
            &point(&[0.0, 0.0], &[1.0, 0.0]),
            1.0,
            &StepControl::leapfrog(0.5),
        )
        .unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,x1,x2,p1,p2,energy");
        assert_eq!(lines.count(), 3);
    }
}
