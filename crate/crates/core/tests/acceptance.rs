//! Acceptance criteria 1–9, one PASS/FAIL line each. Criterion 10 (CLI
//! determinism) lives in the cli crate.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use pathmeasure::correlations::{
    correlation_statistic, halton_points, liouville_check, signature_matrix, support_box,
    Branch as Side, CollisionModel, Family,
};
use pathmeasure::decay::{
    solve_vertex_closed_form, solve_vertex_numeric, DecaySpec, MinimizerSettings,
};
use pathmeasure::dynamics::{
    classify_channel, integrate, p_limit, ChannelOutcome, ChannelTolerances, HamiltonianSpec,
    MomentumGrid, PairTerm, PhasePoint, Potential, RadialPotential, ShootSettings, StepControl,
};
use pathmeasure::measure_lab::{
    expand_rational, orbit_zero_frequency, sample_sequence, DigitMeasure,
};
use pathmeasure::scattering::{
    classical_cross_section, cross_section_from_measure, cross_section_table, invert_branches,
    rutherford, scattered_flux, transfer_density, CentralPotential, DeflectionScan, Lebesgue,
    ScatteringProblem, TransferredMeasure,
};
use pathmeasure::semiclassical::{
    classical_density, fringe_profile, interference_term, quantum_density, semiclassical_branches,
    semiclassical_propagator, Branch, Endpoints, TransverseSlitModel, VanVleckRoute,
};

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bernoulli() -> Outcome {
    let third = orbit_zero_frequency(&expand_rational(1, 3, 1000).unwrap(), 1000).unwrap();
    let sevenths = orbit_zero_frequency(&expand_rational(2, 7, 999).unwrap(), 999).unwrap();
    let mean = |alpha: f64| {
        let m = DigitMeasure::new(alpha).unwrap();
        (0..200u64)
            .map(|seed| orbit_zero_frequency(&sample_sequence(&m, 10_000, seed), 10_000).unwrap())
            .sum::<f64>()
            / 200.0
    };
    let (fair, biased) = (mean(0.5), mean(0.7));
    check(
        (third - 0.5).abs() <= 1e-3
            && (sevenths - 2.0 / 3.0).abs() <= 2.0 / 999.0
            && (fair - 0.5).abs() <= 0.01
            && (biased - 0.7).abs() <= 0.01,
        format!("1/3 -> {third}, 2/7 -> {sevenths:.6}, alpha 0.5 -> {fair:.5}, alpha 0.7 -> {biased:.5}"),
    )
}

fn settings() -> ShootSettings {
    ShootSettings::with_grid(MomentumGrid::uniform(1, 20.0, 41))
}

/// 20 `(T, x2)` pairs with `omega T` in `(0.1, pi - 0.1)` and `x1 = 0.1`.
fn grid() -> Vec<Endpoints> {
    let times = [0.15, 0.8, 1.5, 2.2, 2.99];
    let targets = [-1.0, -0.3, 0.5, 1.2];
    times
        .iter()
        .flat_map(|&t| {
            targets.iter().map(move |&x2| Endpoints {
                x1: vec![0.1],
                t1: 0.0,
                x2: vec![x2],
                t2: t,
            })
        })
        .collect()
}

/// Branch sets for both oracles and both Van Vleck routes.
fn oracle_cases() -> Vec<(String, Vec<Branch>, f64)> {
    let free = HamiltonianSpec::free(1.0, 1).unwrap();
    let osc = HamiltonianSpec::harmonic(1.0, 1.0, 1).unwrap();
    let mut out = Vec::new();
    for (label, route) in [
        ("monodromy", VanVleckRoute::Monodromy),
        (
            "finite-difference",
            VanVleckRoute::FiniteDifference { step: None },
        ),
    ] {
        for e in grid() {
            let t = e.t2;
            let b = semiclassical_branches(&free, &e, route, &settings()).unwrap();
            out.push((format!("free {label} T={t}"), b, 1.0 / (2.0 * PI * t)));
            let b = semiclassical_branches(&osc, &e, route, &settings()).unwrap();
            out.push((
                format!("oscillator {label} T={t}"),
                b,
                1.0 / (2.0 * PI * t.sin().abs()),
            ));
        }
    }
    out
}

fn semiclassical_exactness() -> Outcome {
    let mut worst = (0.0f64, String::new());
    for (label, branches, exact) in oracle_cases() {
        let k = semiclassical_propagator(&branches, 1).map_err(|e| format!("{label}: {e}"))?;
        let rel = (k.norm_sqr() - exact).abs() / exact;
        if rel > worst.0 {
            worst = (rel, label);
        }
    }
    check(
        worst.0 <= 1e-9,
        format!("worst relative |K|^2 error {:.2e} ({})", worst.0, worst.1),
    )
}

fn decomposition() -> Outcome {
    let mut sets: Vec<(Vec<Branch>, usize)> =
        oracle_cases().into_iter().map(|(_, b, _)| (b, 1)).collect();
    let model = TransverseSlitModel {
        mass: 1.0,
        momentum: 20.0,
        slit_separation: 1.0,
        screen_distance: 50.0,
    };
    let fringe = fringe_profile(
        &model,
        &(0..201).map(|k| -40.0 + 0.4 * k as f64).collect::<Vec<_>>(),
    )
    .unwrap();
    for n in 1..=3usize {
        for k in 0..20 {
            let branches = (0..=n)
                .map(|j| {
                    let s = (k * 7 + j * 3) as f64;
                    Branch::new(0.37 * s, 0.2 + (s * 0.61).sin().abs(), (j % 3) as u32).unwrap()
                })
                .collect();
            sets.push((branches, n));
        }
    }
    let mut worst = 0.0f64;
    for (branches, n) in &sets {
        let fq = quantum_density(branches, *n).map_err(|e| e.to_string())?;
        let fc = classical_density(branches).value;
        let fi = interference_term(branches);
        worst = worst.max((fq * (2.0 * PI).powi(*n as i32) - fc - fi).abs());
    }
    for r in &fringe.rows {
        worst = worst.max((r.rho_fq * 2.0 * PI - r.rho_fc - r.rho_fi).abs());
    }
    check(
        worst <= 1e-12,
        format!(
            "max |rho_FQ (2pi)^n - rho_FC - rho_FI| = {worst:.2e} over {} cases",
            sets.len() + fringe.rows.len()
        ),
    )
}

fn fringes() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (l, s, p) in [(50.0, 1.0, 20.0), (100.0, 2.0, 30.0), (20.0, 0.5, 10.0)] {
        let model = TransverseSlitModel {
            mass: 1.0,
            momentum: p,
            slit_separation: s,
            screen_distance: l,
        };
        let predicted = 2.0 * PI * l / (p * s);
        let half = 4.0 * predicted;
        let screen: Vec<f64> = (0..4001)
            .map(|k| -half + 2.0 * half * k as f64 / 4000.0)
            .collect();
        let profile = fringe_profile(&model, &screen).map_err(|e| e.to_string())?;
        let measured = profile.mean_spacing().ok_or("no fringes")?;
        let rel = (measured / predicted - 1.0).abs();
        let fc0 = profile.rows[0].rho_fc;
        let flat = profile
            .rows
            .iter()
            .map(|r| (r.rho_fc - fc0).abs())
            .fold(0.0, f64::max);
        ok &= rel <= 0.02 && flat <= 1e-10;
        parts.push(format!(
            "(L={l}, s={s}, p={p}) spacing off {rel:.1e}, rho_FC spread {flat:.0e}"
        ));
    }
    check(ok, parts.join("; "))
}

fn screened_coulomb() -> ScatteringProblem {
    ScatteringProblem::new(
        CentralPotential::Smooth {
            radial: RadialPotential::ScreenedCoulomb {
                strength: 1.0,
                screening: 1000.0,
            },
        },
        1.0,
    )
    .unwrap()
}

fn scattering_oracles() -> Outcome {
    let sphere = DeflectionScan::new(
        ScatteringProblem::new(CentralPotential::HardSphere { radius: 1.0 }, 1.0).unwrap(),
        2000,
    )
    .map_err(|e| e.to_string())?;
    let angles: Vec<f64> = (1..=10).map(|k| (16.0 * k as f64).to_radians()).collect();
    let table = cross_section_table(&sphere, &angles).map_err(|e| e.to_string())?;
    let sphere_err = table
        .rows
        .iter()
        .map(|r| r.sigma.map_or(f64::INFINITY, |s| (s - 0.25).abs()))
        .fold(0.0, f64::max);

    let scan = DeflectionScan::new(screened_coulomb(), 2000).map_err(|e| e.to_string())?;
    let thetas: Vec<f64> = (0..=28)
        .map(|k| (20.0 + 5.0 * k as f64).to_radians())
        .collect();
    let mut coulomb_err = 0.0f64;
    let mut eq_err = 0.0f64;
    for &th in &thetas {
        let inv = invert_branches(&scan, th).map_err(|e| e.to_string())?;
        let sigma = classical_cross_section(&inv).map_err(|e| e.to_string())?;
        coulomb_err = coulomb_err.max((sigma / rutherford(1.0, 1.0, th) - 1.0).abs());
        let direct: f64 = inv
            .branches
            .iter()
            .map(|b| b.b / th.sin() * b.db_dtheta)
            .sum();
        let transferred = transfer_density(&Lebesgue, &inv, 0.3).map_err(|e| e.to_string())?;
        eq_err = eq_err.max((transferred - direct).abs() / direct);
    }

    let (lo, hi) = (10f64.to_radians(), 179f64.to_radians());
    let flux = scattered_flux(&scan, lo, hi).map_err(|e| e.to_string())?;
    let b_at = |th| invert_branches(&scan, th).map(|inv| inv.branches[0].b);
    let (b_lo, b_hi) = (
        b_at(lo).map_err(|e| e.to_string())?,
        b_at(hi).map_err(|e| e.to_string())?,
    );
    let annulus = PI * (b_lo * b_lo - b_hi * b_hi);
    let flux_err = (flux / annulus - 1.0).abs();
    check(
        sphere_err <= 1e-6 && coulomb_err <= 5e-3 && eq_err == 0.0 && flux_err <= 1e-3,
        format!(
            "hard sphere |sigma - R^2/4| {sphere_err:.1e}; Rutherford rel {coulomb_err:.1e}; \
             transfer vs b/sin|db/dtheta| rel {eq_err:.1e}; flux [10,179] deg rel {flux_err:.1e}"
        ),
    )
}

fn measure_cross_section() -> Outcome {
    let scan = DeflectionScan::new(screened_coulomb(), 2000).map_err(|e| e.to_string())?;
    let measure = TransferredMeasure {
        scan: &scan,
        incidence: Lebesgue,
        scale: 1.0,
    };
    let thetas: Vec<f64> = (0..=14)
        .map(|k| (20.0 + 10.0 * k as f64).to_radians())
        .collect();
    let out = cross_section_from_measure(&measure, &[1.0, 2.0, 4.0, 8.0], &thetas, 1e-9)
        .map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for row in &out.table.rows {
        let inv = invert_branches(&scan, row.theta).map_err(|e| e.to_string())?;
        let rho_f = transfer_density(&Lebesgue, &inv, 0.0).map_err(|e| e.to_string())?;
        let sigma = row.sigma.ok_or("flagged angle")?;
        worst = worst.max((sigma - rho_f).abs() / rho_f);
    }
    check(
        (out.mu_bar - 1.0).abs() <= 1e-6 && out.converged && worst <= 1e-12,
        format!(
            "mu_bar = {:.15}, max |sigma - rho_F| / rho_F = {worst:.1e}",
            out.mu_bar
        ),
    )
}

fn decay() -> Outcome {
    let spec = DecaySpec {
        m1: 10.0,
        m2: 3.0,
        m3: 2.0,
        c: 1.0,
        t_i: 0.0,
        t_f: 10.0,
        x1: vec![0.0],
        x2: vec![2.0],
        x3: vec![-3.0],
    };
    let s3 = 3f64.sqrt();
    let closed = solve_vertex_closed_form(&spec).map_err(|e| e.to_string())?;
    let numeric =
        solve_vertex_numeric(&spec, &MinimizerSettings::default()).map_err(|e| e.to_string())?;
    let off = solve_vertex_numeric(
        &DecaySpec {
            x1: vec![1.0],
            ..spec.clone()
        },
        &MinimizerSettings::default(),
    )
    .map_err(|e| e.to_string())?;
    let other = solve_vertex_closed_form(&DecaySpec {
        x2: vec![4.0],
        x3: vec![-6.0],
        ..spec.clone()
    })
    .map_err(|e| e.to_string())?;
    let closed_ok = (closed.t - (10.0 - s3)).abs() <= 1e-12
        && (closed.p2[0] - 2.0 * s3).abs() <= 1e-12
        && (closed.p3[0] + 2.0 * s3).abs() <= 1e-12;
    let agree = (numeric.t - closed.t)
        .abs()
        .max((numeric.x[0] - closed.x[0]).abs());
    let residual = [&closed, &numeric, &off, &other]
        .iter()
        .map(|v| v.momentum_residual.max(v.energy_residual.abs()))
        .fold(0.0, f64::max);
    let distinct = (other.t - closed.t).abs();
    check(
        closed_ok && agree <= 1e-6 && residual <= 1e-9 && distinct > 1e-6 && closed.p1 == other.p1,
        format!(
            "t = {:.9}, p2 = {:.9}; numeric off by {agree:.1e}; residuals <= {residual:.1e}; \
             other type-F data moves t by {distinct:.3}",
            closed.t, closed.p2[0]
        ),
    )
}

fn correlations() -> Outcome {
    let model = CollisionModel::reference();
    model.validate().map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for family in Family::ALL {
        let t = model.t_i - 0.5;
        let (b1, b2) = support_box(&model, family, Side::Pre, t, 0.1);
        let pts = halton_points(10_000, b1, b2);
        for u in [0.3, model.t_f - t + 0.7] {
            worst = worst.max(
                liouville_check(&model, family, &pts, Side::Pre, t, u)
                    .unwrap()
                    .max_residual,
            );
        }
        let t = model.t_f + 0.5;
        let (b1, b2) = support_box(&model, family, Side::Post, t, 0.1);
        let pts = halton_points(10_000, b1, b2);
        worst = worst.max(
            liouville_check(&model, family, &pts, Side::Post, t, 1.3)
                .unwrap()
                .max_residual,
        );
    }
    let sig = signature_matrix(&model).map_err(|e| e.to_string())?;
    let cov = correlation_statistic(&model, Family::Minus, Side::Pre, model.t_i)
        .map_err(|e| e.to_string())?;
    check(
        worst <= 1e-12
            && sig == [['0', '+'], ['+', '0'], ['+', '+']]
            && (cov - 1.0 / 6.0).abs() <= 1e-4,
        format!(
            "Liouville residual {worst:.1e}; signature {sig:?}; minus-pre covariance {cov:.12}"
        ),
    )
}

fn p_limits() -> Outcome {
    let horizons = [1e2, 1e3, 1e4];
    let free = HamiltonianSpec::free(2.0, 2).unwrap();
    let rep = p_limit(
        &free,
        &PhasePoint::new(vec![0.0, 0.0], vec![1.5, -0.5], 0.0),
        &horizons,
        &StepControl::leapfrog(0.1),
        1e-4,
    )
    .map_err(|e| e.to_string())?;
    let free_err = (rep.estimate()[0] - 1.5)
        .abs()
        .max((rep.estimate()[1] + 0.5).abs());
    let free_ok = free_err <= 1e-9;

    let osc = HamiltonianSpec::harmonic(1.0, 1.0, 1).unwrap();
    let rep = p_limit(
        &osc,
        &PhasePoint::new(vec![1.0], vec![0.0], 0.0),
        &horizons,
        &StepControl::leapfrog(0.01),
        1e-4,
    )
    .map_err(|e| e.to_string())?;
    let bound = rep.estimate()[0].abs();
    // |m x(T) / T| <= m A / T at every horizon: the 1/T envelope
    let envelope = rep
        .horizons
        .iter()
        .zip(&rep.estimates)
        .map(|(t, e)| e[0].abs() * t)
        .fold(0.0, f64::max);

    let mut partitions = Vec::new();
    let pair = HamiltonianSpec::new(vec![1.0, 1.0], 1, Potential::Free).unwrap();
    let traj = integrate(
        &pair,
        &PhasePoint::new(vec![0.0, 0.0], vec![1.0, -1.0], 0.0),
        400.0,
        &StepControl::leapfrog(0.5),
    )
    .map_err(|e| e.to_string())?;
    partitions.push((
        classify_channel(&traj, &ChannelTolerances::default()),
        vec![vec![0], vec![1]],
    ));

    let three = HamiltonianSpec::new(
        vec![1.0, 2.0, 1.0],
        2,
        Potential::Pairwise {
            pairs: vec![PairTerm {
                i: 0,
                j: 1,
                radial: RadialPotential::Spring { stiffness: 1.0 },
            }],
        },
    )
    .unwrap();
    let traj = integrate(
        &three,
        &PhasePoint::new(
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 3.0],
            vec![0.3, 0.0, 0.0, 0.3, 0.0, 1.0],
            0.0,
        ),
        600.0,
        &StepControl::leapfrog(0.01).with_record_every(10),
    )
    .map_err(|e| e.to_string())?;
    partitions.push((
        classify_channel(&traj, &ChannelTolerances::default()),
        vec![vec![0, 1], vec![2]],
    ));

    let trap = HamiltonianSpec::new(
        vec![1.0, 2.0, 3.0],
        1,
        Potential::Harmonic {
            omegas: vec![1.0, 0.7, 1.3],
        },
    )
    .unwrap();
    let traj = integrate(
        &trap,
        &PhasePoint::new(vec![1.0, -0.5, 0.2], vec![0.0, 0.4, -0.3], 0.0),
        600.0,
        &StepControl::leapfrog(0.01).with_record_every(10),
    )
    .map_err(|e| e.to_string())?;
    partitions.push((
        classify_channel(&traj, &ChannelTolerances::default()),
        vec![vec![0, 1, 2]],
    ));

    let mut channels_ok = true;
    let mut found = Vec::new();
    for (out, expected) in partitions {
        match out {
            Ok(ChannelOutcome::Channel(p)) => {
                channels_ok &= p.fragments == expected;
                found.push(format!("{:?}", p.fragments));
            }
            other => {
                channels_ok = false;
                found.push(format!("{other:?}"));
            }
        }
    }
    check(
        free_ok && bound <= 1e-3 && envelope <= 1.0 + 1e-6 && channels_ok,
        format!(
            "free error {free_err:.1e}; oscillator |p-limit| at 1e4 = {bound:.1e}, max |est| T = {envelope:.4}; \
             channels {}",
            found.join(" ")
        ),
    )
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "Bernoulli regularities",
            budget: Duration::from_secs(5),
            run: bernoulli,
        },
        Criterion {
            id: 2,
            name: "semiclassical exactness",
            budget: Duration::from_secs(30),
            run: semiclassical_exactness,
        },
        Criterion {
            id: 3,
            name: "decomposition identity",
            budget: Duration::MAX,
            run: decomposition,
        },
        Criterion {
            id: 4,
            name: "fringe model",
            budget: Duration::MAX,
            run: fringes,
        },
        Criterion {
            id: 5,
            name: "scattering oracles",
            budget: Duration::from_secs(60),
            run: scattering_oracles,
        },
        Criterion {
            id: 6,
            name: "measure-based cross-section",
            budget: Duration::MAX,
            run: measure_cross_section,
        },
        Criterion {
            id: 7,
            name: "decay vertex",
            budget: Duration::from_secs(5),
            run: decay,
        },
        Criterion {
            id: 8,
            name: "correlations",
            budget: Duration::from_secs(30),
            run: correlations,
        },
        Criterion {
            id: 9,
            name: "p-limit lemmas",
            budget: Duration::from_secs(60),
            run: p_limits,
        },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (status, detail) = match outcome {
            Ok(d) if elapsed <= c.budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over the {:?} budget", c.budget)),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!(
            "{status} [{}] {}: {detail} ({:.2} s)",
            c.id,
            c.name,
            elapsed.as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
