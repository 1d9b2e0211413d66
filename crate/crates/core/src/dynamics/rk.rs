//! Dormand–Prince 5(4) with FSAL and standard step-size control.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Difference between the 5th- and 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

#[derive(Debug, Clone, Copy)]
pub(crate) struct RkOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    /// Take uniform steps of (at most) this size with no error control.
    pub fixed_step: Option<f64>,
    pub max_steps: usize,
}

#[derive(Debug)]
pub(crate) enum RkStop<E> {
    Observer(E),
    StepUnderflow { t: f64 },
    TooManySteps { t: f64 },
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`, calling `observe` after
/// every accepted step. Returns the final state.
pub(crate) fn dopri5<F, O, Err>(
    mut rhs: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &RkOptions,
    mut observe: O,
) -> Result<Vec<f64>, RkStop<Err>>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, &[f64]) -> Result<(), Err>,
{
    let n = y0.len();
    let span = t_end - t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    rhs(t0, &y, &mut k[0]);

    let mut t = t0;
    let mut h = match opts.fixed_step {
        Some(dt) => span / (span / dt).ceil().max(1.0),
        None => initial_step(&y, &k[0], span, opts),
    };
    let mut steps = 0usize;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(RkStop::TooManySteps { t });
        }
        let last = t + h >= t_end || (t_end - (t + h)) < 1e-12 * span.abs();
        if last {
            h = t_end - t;
        }
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                stage[i] = y[i] + h * acc;
            }
            let (_, rest) = k.split_at_mut(s);
            rhs(t + C[s] * h, &stage, &mut rest[0]);
        }
        // stage now holds the 5th-order solution (row 7 of A equals b).
        y_new.copy_from_slice(&stage);

        let accept = match opts.fixed_step {
            Some(_) => true,
            None => {
                let mut err = 0.0;
                for i in 0..n {
                    let mut e = 0.0;
                    for (j, kj) in k.iter().enumerate() {
                        e += E[j] * kj[i];
                    }
                    let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
                    let r = h * e / sc;
                    err += r * r;
                }
                let err = (err / n as f64).sqrt();
                let factor = if err == 0.0 {
                    5.0
                } else {
                    (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
                };
                let ok = err <= 1.0;
                let h_next = (h * if ok { factor } else { factor.min(1.0) }).min(opts.max_step);
                if ok {
                    t = if last { t_end } else { t + h };
                    h = h_next;
                } else {
                    h = h_next;
                    if h.abs() < 1e-14 * t.abs().max(span.abs()) {
                        return Err(RkStop::StepUnderflow { t });
                    }
                }
                ok
            }
        };
        if accept {
            if opts.fixed_step.is_some() {
                t = if last { t_end } else { t + h };
            }
            steps += 1;
            std::mem::swap(&mut y, &mut y_new);
            // FSAL: the last stage is f(t + h, y_new).
            k.swap(0, 6);
            observe(t, &y).map_err(RkStop::Observer)?;
        }
    }
    Ok(y)
}

fn initial_step(y: &[f64], f0: &[f64], span: f64, opts: &RkOptions) -> f64 {
    let n = y.len() as f64;
    let d0 = (y
        .iter()
        .map(|v| (v / (opts.atol + opts.rtol * v.abs())).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let d1 = (y
        .iter()
        .zip(f0)
        .map(|(v, f)| (f / (opts.atol + opts.rtol * v.abs())).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span.abs()).min(opts.max_step).max(1e-12 * span.abs())
}
