//! Parameter schemas and drivers, one per experiment. Drivers return their
//! artifacts in memory; writing and hashing happen in the caller.

use rayon::prelude::*;
use serde::Deserialize;
use serde_json::{json, Map, Value};

use pathmeasure::correlations::{
    halton_points, liouville_check, signature_symbol, spatial_moments, support_box, Branch as Side,
    CollisionModel, Family,
};
use pathmeasure::decay::{
    solve_vertex_closed_form, solve_vertex_numeric, DecayError, DecaySpec, MinimizerSettings,
};
use pathmeasure::dynamics::{
    integrate, HamiltonianSpec, MomentumGrid, PhasePoint, ShootSettings, StepControl,
};
use pathmeasure::export::{fmt_f64, CsvTable};
use pathmeasure::measure_lab::{orbit_zero_frequency, sample_sequence, DigitMeasure};
use pathmeasure::scattering::{cross_section_table, AngleFlag, DeflectionScan, ScatteringProblem};
use pathmeasure::semiclassical::{
    classical_density, fringe_profile, interference_term, quantum_density, semiclassical_branches,
    semiclassical_propagator, Endpoints, TransverseSlitModel, VanVleckRoute,
};

use crate::config::{parameters, Experiment};
use crate::error::CliError;

pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn csv(name: &str, table: &CsvTable) -> Self {
        Self {
            name: name.into(),
            bytes: table.to_string_lossy().into_bytes(),
        }
    }

    fn json(name: &str, value: &impl serde::Serialize) -> Self {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable");
        bytes.push(b'\n');
        Self {
            name: name.into(),
            bytes,
        }
    }
}

#[derive(Default)]
pub struct Report {
    pub artifacts: Vec<Artifact>,
    pub summary: Map<String, Value>,
}

pub fn run(experiment: Experiment, params: &Value, seed: u64) -> Result<Report, CliError> {
    match experiment {
        Experiment::Bernoulli => bernoulli(parameters(params)?, seed),
        Experiment::Propagate => propagate(parameters(params)?),
        Experiment::Semiclassical => semiclassical(parameters(params)?),
        Experiment::Fringes => fringes(parameters(params)?),
        Experiment::Scatter => scatter(parameters(params)?),
        Experiment::Decay => decay(parameters(params)?),
        Experiment::Correlate => correlate(parameters(params)?),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct BernoulliParams {
    alpha: f64,
    sequences: usize,
    digits: usize,
    /// Also write the raw digit strings.
    write_sequences: bool,
}

impl Default for BernoulliParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            sequences: 200,
            digits: 10_000,
            write_sequences: true,
        }
    }
}

fn bernoulli(p: BernoulliParams, seed: u64) -> Result<Report, CliError> {
    let measure = DigitMeasure::new(p.alpha)?;
    if p.sequences == 0 || p.digits == 0 {
        return Err(CliError::validation(
            "`sequences` and `digits` must be positive",
        ));
    }
    // sequence k draws from its own stream so the result is independent of scheduling
    let draws: Vec<_> = (0..p.sequences as u64)
        .into_par_iter()
        .map(|k| {
            let s = sample_sequence(&measure, p.digits, seed.wrapping_add(k));
            let f = orbit_zero_frequency(&s, p.digits)?;
            Ok((s, f))
        })
        .collect::<Result<_, CliError>>()?;
    let mut table = CsvTable::new(["sequence", "stream_seed", "zero_frequency"]);
    for (k, (_, f)) in draws.iter().enumerate() {
        table.push(vec![
            k.to_string(),
            seed.wrapping_add(k as u64).to_string(),
            fmt_f64(*f),
        ]);
    }
    let mean = draws.iter().map(|(_, f)| f).sum::<f64>() / draws.len() as f64;
    let mut report = Report::default();
    report
        .artifacts
        .push(Artifact::csv("frequencies.csv", &table));
    if p.write_sequences {
        let mut text = String::with_capacity(p.sequences * (p.digits + 1));
        for (s, _) in &draws {
            text.extend(s.digits().iter().map(|&d| if d == 0 { '0' } else { '1' }));
            text.push('\n');
        }
        report.artifacts.push(Artifact {
            name: "sequences.txt".into(),
            bytes: text.into_bytes(),
        });
    }
    report.summary.insert("alpha".into(), json!(p.alpha));
    report
        .summary
        .insert("sequences".into(), json!(p.sequences));
    report.summary.insert("digits".into(), json!(p.digits));
    report
        .summary
        .insert("mean_zero_frequency".into(), json!(mean));
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PropagateParams {
    hamiltonian: HamiltonianSpec,
    positions: Vec<f64>,
    momenta: Vec<f64>,
    #[serde(default)]
    t0: f64,
    t_end: f64,
    #[serde(default)]
    control: StepControl,
}

fn propagate(p: PropagateParams) -> Result<Report, CliError> {
    let start = PhasePoint::new(p.positions, p.momenta, p.t0);
    let traj = integrate(&p.hamiltonian, &start, p.t_end, &p.control)?;
    let mut report = Report::default();
    report
        .artifacts
        .push(Artifact::csv("trajectory.csv", &traj.to_csv()));
    report.summary.insert("samples".into(), json!(traj.len()));
    report
        .summary
        .insert("energy_drift".into(), json!(traj.energy_drift()));
    report
        .summary
        .insert("final_positions".into(), json!(traj.end().positions));
    report
        .summary
        .insert("final_momenta".into(), json!(traj.end().momenta));
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SemiclassicalParams {
    hamiltonian: HamiltonianSpec,
    endpoints: Endpoints,
    #[serde(default)]
    route: VanVleckRoute,
    #[serde(default)]
    shooting: Option<ShootSettings>,
}

fn semiclassical(p: SemiclassicalParams) -> Result<Report, CliError> {
    p.hamiltonian.validate()?;
    let n = p.hamiltonian.coords();
    let settings = p.shooting.unwrap_or_else(|| {
        let points = if n == 1 { 41 } else { 9 };
        ShootSettings::with_grid(MomentumGrid::uniform(n, 10.0, points))
    });
    let branches = semiclassical_branches(&p.hamiltonian, &p.endpoints, p.route, &settings)?;
    let mut header = vec![
        "branch".to_string(),
        "action".into(),
        "vanvleck".into(),
        "maslov".into(),
    ];
    header.extend((1..=n).map(|i| format!("p0_{i}")));
    let mut table = CsvTable::new(header);
    for (k, b) in branches.iter().enumerate() {
        let mut row = vec![
            k.to_string(),
            fmt_f64(b.action),
            fmt_f64(b.vanvleck),
            b.maslov.to_string(),
        ];
        if let Some(t) = &b.trajectory {
            row.extend(t.start().momenta.iter().map(|&v| fmt_f64(v)));
        }
        table.push(row);
    }
    let fc = classical_density(&branches);
    let mut report = Report::default();
    report.artifacts.push(Artifact::csv("branches.csv", &table));
    report
        .summary
        .insert("branches".into(), json!(branches.len()));
    report
        .summary
        .insert("unreachable".into(), json!(fc.unreachable));
    report.summary.insert("rho_FC".into(), json!(fc.value));
    report
        .summary
        .insert("rho_FI".into(), json!(interference_term(&branches)));
    if !branches.is_empty() {
        let k = semiclassical_propagator(&branches, n)?;
        report
            .summary
            .insert("rho_FQ".into(), json!(quantum_density(&branches, n)?));
        report
            .summary
            .insert("propagator".into(), json!([k.re, k.im]));
    }
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FringeParams {
    mass: f64,
    momentum: f64,
    slit_separation: f64,
    screen_distance: f64,
    screen_half_width: f64,
    #[serde(default = "default_screen_points")]
    screen_points: usize,
}

fn default_screen_points() -> usize {
    4001
}

fn fringes(p: FringeParams) -> Result<Report, CliError> {
    let model = TransverseSlitModel {
        mass: p.mass,
        momentum: p.momentum,
        slit_separation: p.slit_separation,
        screen_distance: p.screen_distance,
    };
    model.validate()?;
    if p.screen_points < 2 || p.screen_half_width.is_nan() || p.screen_half_width <= 0.0 {
        return Err(CliError::validation(
            "screen needs at least 2 points and a positive half width",
        ));
    }
    let m = (p.screen_points - 1) as f64;
    let screen: Vec<f64> = (0..p.screen_points)
        .map(|k| -p.screen_half_width + 2.0 * p.screen_half_width * k as f64 / m)
        .collect();
    let profile = fringe_profile(&model, &screen)?;
    let mut report = Report::default();
    report
        .artifacts
        .push(Artifact::csv("fringes.csv", &profile.to_csv()));
    report
        .summary
        .insert("predicted_spacing".into(), json!(model.predicted_spacing()));
    report
        .summary
        .insert("measured_spacing".into(), json!(profile.mean_spacing()));
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScatterParams {
    problem: ScatteringProblem,
    #[serde(default = "default_scan_points")]
    points: usize,
    #[serde(default)]
    b_max: Option<f64>,
    #[serde(default = "default_angles")]
    thetas_deg: Vec<f64>,
}

fn default_scan_points() -> usize {
    2000
}

fn default_angles() -> Vec<f64> {
    (2..=34).map(|k| 5.0 * k as f64).collect()
}

fn scatter(p: ScatterParams) -> Result<Report, CliError> {
    let scan = match p.b_max {
        Some(b) => DeflectionScan::with_b_max(p.problem, b, p.points)?,
        None => DeflectionScan::new(p.problem, p.points)?,
    };
    let thetas: Vec<f64> = p.thetas_deg.iter().map(|d| d.to_radians()).collect();
    let table = cross_section_table(&scan, &thetas)?;
    let flagged = table
        .rows
        .iter()
        .filter(|r| r.flag != AngleFlag::None)
        .count();
    let mut report = Report::default();
    report
        .artifacts
        .push(Artifact::csv("deflection.csv", &scan.to_csv()));
    report
        .artifacts
        .push(Artifact::csv("cross_section.csv", &table.to_csv()));
    report.summary.insert("b_max".into(), json!(scan.b_max));
    report
        .summary
        .insert("segments".into(), json!(scan.segments.len()));
    report
        .summary
        .insert("rainbows".into(), json!(scan.extrema));
    report
        .summary
        .insert("flagged_angles".into(), json!(flagged));
    Ok(report)
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DecayMethod {
    /// Closed form when it applies, numeric otherwise.
    #[default]
    Auto,
    ClosedForm,
    Numeric,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParams {
    m1: f64,
    m2: f64,
    m3: f64,
    c: f64,
    t_i: f64,
    t_f: f64,
    x1: Vec<f64>,
    x2: Vec<f64>,
    x3: Vec<f64>,
    #[serde(default)]
    method: DecayMethod,
    #[serde(default)]
    minimizer: MinimizerSettings,
}

fn decay(p: DecayParams) -> Result<Report, CliError> {
    let spec = DecaySpec {
        m1: p.m1,
        m2: p.m2,
        m3: p.m3,
        c: p.c,
        t_i: p.t_i,
        t_f: p.t_f,
        x1: p.x1,
        x2: p.x2,
        x3: p.x3,
    };
    let (vertex, method) = match p.method {
        DecayMethod::ClosedForm => (solve_vertex_closed_form(&spec)?, "closed_form"),
        DecayMethod::Numeric => (solve_vertex_numeric(&spec, &p.minimizer)?, "numeric"),
        DecayMethod::Auto => match solve_vertex_closed_form(&spec) {
            Err(DecayError::NotCentreOfMass(off)) => {
                log::info!("x1 is {off:e} from the products' centre of mass, solving numerically");
                (solve_vertex_numeric(&spec, &p.minimizer)?, "numeric")
            }
            other => (other?, "closed_form"),
        },
    };
    if !vertex.minimum {
        log::warn!(
            "the stationary point at t = {} is not a minimum of the action",
            vertex.t
        );
    }
    let mut report = Report::default();
    report
        .artifacts
        .push(Artifact::json("vertex.json", &vertex));
    report.summary.insert("method".into(), json!(method));
    report.summary.insert("t".into(), json!(vertex.t));
    report.summary.insert("x".into(), json!(vertex.x));
    report
        .summary
        .insert("momentum_residual".into(), json!(vertex.momentum_residual));
    report
        .summary
        .insert("energy_residual".into(), json!(vertex.energy_residual));
    report
        .summary
        .insert("minimum".into(), json!(vertex.minimum));
    Ok(report)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct CorrelateParams {
    model: CollisionModel,
    samples: usize,
    margin: f64,
}

impl Default for CorrelateParams {
    fn default() -> Self {
        Self {
            model: CollisionModel::reference(),
            samples: 10_000,
            margin: 0.1,
        }
    }
}

fn side_name(s: Side) -> &'static str {
    match s {
        Side::Pre => "pre",
        Side::Post => "post",
    }
}

fn correlate(p: CorrelateParams) -> Result<Report, CliError> {
    let m = &p.model;
    m.validate()?;
    let mut cov = CsvTable::new([
        "family",
        "branch",
        "t",
        "mass",
        "mean_x1",
        "mean_x2",
        "covariance",
        "sign",
    ]);
    let mut signature = Vec::new();
    for family in Family::ALL {
        let mut row_sig = String::new();
        for (side, t) in [(Side::Pre, m.t_i), (Side::Post, m.t_f)] {
            let s = spatial_moments(m, family, side, t)?;
            let sign = signature_symbol(s.covariance);
            row_sig.push(sign);
            cov.push(vec![
                family.name().into(),
                side_name(side).into(),
                fmt_f64(t),
                fmt_f64(s.mass),
                fmt_f64(s.mean_x1),
                fmt_f64(s.mean_x2),
                fmt_f64(s.covariance),
                sign.to_string(),
            ]);
        }
        signature.push(row_sig);
    }

    let span = m.t_f - m.t_i;
    let transports = [
        ("pre_to_pre", Side::Pre, m.t_i - 0.5, 0.3),
        ("pre_to_post", Side::Pre, m.t_i - 0.5, span + 1.2),
        ("post_to_post", Side::Post, m.t_f + 0.5, 1.3),
        ("post_to_pre", Side::Post, m.t_f + 0.5, -(span + 1.2)),
    ];
    let mut liou = CsvTable::new([
        "family",
        "transport",
        "t",
        "u",
        "samples",
        "crossed",
        "max_residual",
    ]);
    let mut worst = 0.0f64;
    for family in Family::ALL {
        for (label, side, t, u) in transports {
            let (b1, b2) = support_box(m, family, side, t, p.margin);
            let pts = halton_points(p.samples, b1, b2);
            let r = liouville_check(m, family, &pts, side, t, u)?;
            worst = worst.max(r.max_residual);
            liou.push(vec![
                family.name().into(),
                label.into(),
                fmt_f64(t),
                fmt_f64(u),
                r.samples.to_string(),
                r.crossed.to_string(),
                fmt_f64(r.max_residual),
            ]);
        }
    }
    let mut report = Report::default();
    report.artifacts.push(Artifact::csv("covariance.csv", &cov));
    report.artifacts.push(Artifact::csv("liouville.csv", &liou));
    report.summary.insert("signature".into(), json!(signature));
    report
        .summary
        .insert("max_liouville_residual".into(), json!(worst));
    Ok(report)
}
