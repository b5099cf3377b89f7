//! Embedded Dormand-Prince 5(4) Runge-Kutta pair for two-component systems.
//!
//! The solution is propagated with the fifth-order weights (local
//! extrapolation); the embedded fourth-order solution only feeds the error
//! estimate. A proposed step that leaves the caller's admissible domain is
//! treated like a step whose error was too large and is retried with a
//! smaller size, so trajectories of positive systems stay positive.

/// Two-component state vector.
pub type Vec2 = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// Fifth-order weights minus embedded fourth-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

/// Error-control settings for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub atol: f64,
    pub rtol: f64,
    /// Upper bound on attempted sub-steps (accepted plus rejected) per call.
    pub max_substeps: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            atol: 1e-8,
            rtol: 1e-6,
            max_substeps: 2_000_000,
        }
    }
}

/// Why an integration stopped early. `at` is the offset (in the caller's
/// time unit) of the last accepted point.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub at: f64,
    pub reason: FailureReason,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureReason {
    StepUnderflow,
    TooManySteps,
    NonFinite,
}

impl std::fmt::Display for FailureReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FailureReason::StepUnderflow => f.write_str("step size underflow"),
            FailureReason::TooManySteps => f.write_str("sub-step budget exhausted"),
            FailureReason::NonFinite => f.write_str("non-finite derivative"),
        }
    }
}

/// Counters from one [`integrate`] call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

fn axpy(y: Vec2, h: f64, terms: &[(f64, Vec2)]) -> Vec2 {
    let mut out = y;
    for &(c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

struct Trial {
    y: Vec2,
    k7: Vec2,
    err: Vec2,
}

fn dopri_stage<F>(rhs: &mut F, t: f64, y: Vec2, k1: Vec2, h: f64) -> Trial
where
    F: FnMut(f64, Vec2) -> Vec2,
{
    let k2 = rhs(t + C2 * h, axpy(y, h, &[(A21, k1)]));
    let k3 = rhs(t + C3 * h, axpy(y, h, &[(A31, k1), (A32, k2)]));
    let k4 = rhs(t + C4 * h, axpy(y, h, &[(A41, k1), (A42, k2), (A43, k3)]));
    let k5 = rhs(t + C5 * h, axpy(y, h, &[(A51, k1), (A52, k2), (A53, k3), (A54, k4)]));
    let k6 = rhs(
        t + h,
        axpy(y, h, &[(A61, k1), (A62, k2), (A63, k3), (A64, k4), (A65, k5)]),
    );
    let y_new = axpy(y, h, &[(A71, k1), (A73, k3), (A74, k4), (A75, k5), (A76, k6)]);
    let k7 = rhs(t + h, y_new);
    let mut err = [0.0; 2];
    for i in 0..2 {
        err[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
    }
    Trial { y: y_new, k7, err }
}

fn error_norm(err: Vec2, y0: Vec2, y1: Vec2, tol: &Tolerances) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sc = tol.atol + tol.rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sc).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn is_finite(y: Vec2) -> bool {
    y[0].is_finite() && y[1].is_finite()
}

// Hairer-Norsett-Wanner starting step heuristic.
fn initial_step<F>(rhs: &mut F, y0: Vec2, f0: Vec2, span: f64, tol: &Tolerances) -> f64
where
    F: FnMut(f64, Vec2) -> Vec2,
{
    let scale = |i: usize| tol.atol + tol.rtol * y0[i].abs();
    let norm = |v: Vec2| ((v[0] / scale(0)).powi(2) + (v[1] / scale(1)).powi(2)).sqrt() / 2f64.sqrt();
    let d0 = norm(y0);
    let d1 = norm(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let f1 = rhs(h0, axpy(y0, h0, &[(1.0, f0)]));
    let d2 = norm([f1[0] - f0[0], f1[1] - f0[1]]) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrate `dy/dt = rhs(t, y)` from offset 0 to `span`, starting at `y0`.
///
/// `admissible` is consulted for every proposed step; a `false` answer rejects
/// the step and shrinks the step size.
pub fn integrate<F, D>(
    mut rhs: F,
    admissible: D,
    y0: Vec2,
    span: f64,
    tol: &Tolerances,
) -> Result<(Vec2, Stats), Failure>
where
    F: FnMut(f64, Vec2) -> Vec2,
    D: Fn(Vec2) -> bool,
{
    let mut stats = Stats::default();
    if span <= 0.0 {
        return Ok((y0, stats));
    }
    let mut k1 = rhs(0.0, y0);
    stats.evaluations += 1;
    if !is_finite(k1) {
        return Err(Failure {
            at: 0.0,
            reason: FailureReason::NonFinite,
        });
    }
    let mut h = initial_step(&mut rhs, y0, k1, span, tol);
    stats.evaluations += 1;
    let mut t = 0.0;
    let mut y = y0;
    let mut attempts = 0usize;

    while t < span {
        if attempts >= tol.max_substeps {
            return Err(Failure {
                at: t,
                reason: FailureReason::TooManySteps,
            });
        }
        attempts += 1;

        let last = t + h >= span;
        if last {
            h = span - t;
        }
        if h <= f64::EPSILON * span.max(1.0) * 4.0 && !last {
            return Err(Failure {
                at: t,
                reason: FailureReason::StepUnderflow,
            });
        }

        let trial = dopri_stage(&mut rhs, t, y, k1, h);
        stats.evaluations += 6;

        if !is_finite(trial.y) || !is_finite(trial.k7) || !admissible(trial.y) {
            stats.rejected += 1;
            h *= 0.25;
            continue;
        }
        let err = error_norm(trial.err, y, trial.y, tol);
        if err <= 1.0 {
            t = if last { span } else { t + h };
            y = trial.y;
            k1 = trial.k7;
            stats.accepted += 1;
            let factor = if err == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h *= factor;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok((y, stats))
}

/// Fixed-step propagation with the fifth-order weights. Used for convergence
/// checks; production paths use [`integrate`].
pub fn integrate_fixed<F>(mut rhs: F, y0: Vec2, span: f64, steps: usize) -> Vec2
where
    F: FnMut(f64, Vec2) -> Vec2,
{
    let h = span / steps as f64;
    let mut y = y0;
    for n in 0..steps {
        let t = n as f64 * h;
        let k1 = rhs(t, y);
        y = dopri_stage(&mut rhs, t, y, k1, h).y;
    }
    y
}
