//! Classical RK4 + shooting reference solutions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::OracleError;
use crate::model::FlowParams;

pub const DEFAULT_STEP: f64 = 1e-4;
pub const TERMINAL_TOLERANCE: f64 = 1e-12;
pub const MAX_SHOOTING_ITERATIONS: usize = 100;
/// Search interval for `s = F''(0)`.
pub const VELOCITY_BRACKET: (f64, f64) = (-30.0, 0.0);

/// One classical RK4 step.
pub fn rk4_step<const N: usize, D>(
    state: &[f64; N],
    eta: f64,
    h: f64,
    derivs: D,
) -> Result<[f64; N], OracleError>
where
    D: Fn(f64, &[f64; N]) -> [f64; N],
{
    let delta = rk4_increment(state, eta, h, derivs)?;
    let mut next = *state;
    for i in 0..N {
        next[i] += delta[i];
    }
    check_finite(&next, eta + h)?;
    Ok(next)
}

fn check_finite<const N: usize>(state: &[f64; N], eta: f64) -> Result<(), OracleError> {
    if state.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(OracleError::NonFiniteState { eta })
    }
}

/// The RK4 update `y_{n+1} − y_n`.
fn rk4_increment<const N: usize, D>(
    state: &[f64; N],
    eta: f64,
    h: f64,
    derivs: D,
) -> Result<[f64; N], OracleError>
where
    D: Fn(f64, &[f64; N]) -> [f64; N],
{
    if !h.is_finite() || h <= 0.0 {
        return Err(OracleError::InvalidStep(h));
    }
    let shift = |base: &[f64; N], k: &[f64; N], f: f64| {
        let mut out = *base;
        for i in 0..N {
            out[i] += f * k[i];
        }
        out
    };
    let k1 = derivs(eta, state);
    let k2 = derivs(eta + h / 2.0, &shift(state, &k1, h / 2.0));
    let k3 = derivs(eta + h / 2.0, &shift(state, &k2, h / 2.0));
    let k4 = derivs(eta + h, &shift(state, &k3, h));
    let mut delta = [0.0; N];
    for i in 0..N {
        delta[i] = h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    check_finite(&delta, eta + h)?;
    Ok(delta)
}

/// Number of steps for `h = 1/n`; rejects steps that do not divide 1.
pub fn steps_for(h: f64) -> Result<usize, OracleError> {
    if !(h > 0.0 && h <= 1.0) || !h.is_finite() {
        return Err(OracleError::InvalidStep(h));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-9 {
        return Err(OracleError::InvalidStep(h));
    }
    Ok(n as usize)
}

/// Fixed-step integration over `[0, 1]` with compensated (Kahan) accumulation
/// of the state, so rounding stays well below the RK4 truncation error even at
/// 10⁴ steps.
fn integrate<const N: usize, D>(
    initial: [f64; N],
    n: usize,
    derivs: D,
) -> Result<Vec<[f64; N]>, OracleError>
where
    D: Fn(f64, &[f64; N]) -> [f64; N],
{
    let h = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n + 1);
    out.push(initial);
    let mut state = initial;
    let mut carry = [0.0; N];
    for i in 0..n {
        let delta = rk4_increment(&state, i as f64 * h, h, &derivs)?;
        for k in 0..N {
            let y = delta[k] - carry[k];
            let t = state[k] + y;
            carry[k] = (t - state[k]) - y;
            state[k] = t;
        }
        check_finite(&state, (i + 1) as f64 * h)?;
        out.push(state);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleKind {
    Velocity,
    Thermal,
}

/// Dense RK4 output on the uniform grid `η_i = i/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleSolution {
    pub kind: OracleKind,
    pub steps: usize,
    /// `(F, F', F'')` or `(θ, θ')` at every node.
    pub values: Vec<Vec<f64>>,
    /// Converged `F''(0)` or `θ(0)`.
    pub shooting_parameter: f64,
    /// `|F(1)|` or `|θ(1)|`.
    pub terminal_miss: f64,
}

impl OracleSolution {
    pub fn step(&self) -> f64 {
        1.0 / self.steps as f64
    }

    pub fn eta(&self, i: usize) -> f64 {
        i as f64 / self.steps as f64
    }

    pub fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.steps).map(|i| self.eta(i))
    }

    /// Primary value (`F` or `θ`) at the node nearest `eta`, if `eta` is a node.
    pub fn at_node(&self, eta: f64) -> Option<f64> {
        let x = eta * self.steps as f64;
        let i = x.round();
        ((x - i).abs() < 1e-6 && (0.0..=self.steps as f64).contains(&i))
            .then(|| self.values[i as usize][0])
    }

    /// Cubic Hermite interpolation of the primary value from stored
    /// values and first derivatives.
    pub fn interpolate(&self, eta: f64) -> f64 {
        let eta = eta.clamp(0.0, 1.0);
        let h = self.step();
        let i = ((eta / h).floor() as usize).min(self.steps - 1);
        let t = (eta - self.eta(i)) / h;
        let (y0, d0) = (self.values[i][0], self.values[i][1]);
        let (y1, d1) = (self.values[i + 1][0], self.values[i + 1][1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * h * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * h * d1
    }

    pub fn column_names(&self) -> &'static [&'static str] {
        match self.kind {
            OracleKind::Velocity => &["eta", "F", "dF", "d2F"],
            OracleKind::Thermal => &["eta", "theta", "dtheta"],
        }
    }

    /// CSV with one row per node, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = self.column_names().join(",");
        out.push('\n');
        for (i, row) in self.values.iter().enumerate() {
            let _ = write!(out, "{:.16e}", self.eta(i));
            for v in row {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

fn velocity_rhs(a: f64, b: f64) -> impl Fn(f64, &[f64; 3]) -> [f64; 3] {
    move |_, y| [y[1], y[2], -a * y[0] * y[1] - b * y[1]]
}

/// `F(1)` for trial slope `s`. A trajectory that overflows counts as an
/// infinite miss with the sign of its last finite `F`.
fn velocity_terminal(params: &FlowParams, n: usize, s: f64) -> f64 {
    let h = 1.0 / n as f64;
    let rhs = velocity_rhs(params.a(), params.b());
    let mut state = [1.0, 0.0, s];
    for i in 0..n {
        match rk4_step(&state, i as f64 * h, h, &rhs) {
            Ok(next) => state = next,
            Err(_) => return f64::INFINITY.copysign(state[0]),
        }
    }
    state[0]
}

/// Integrates the velocity initial-value problem `(F, F', F'')(0) = (1, 0, s)`
/// without adjusting `s`.
pub fn velocity_ivp(params: &FlowParams, s: f64, h: f64) -> Result<OracleSolution, OracleError> {
    let n = steps_for(h)?;
    let values = integrate([1.0, 0.0, s], n, velocity_rhs(params.a(), params.b()))?;
    Ok(OracleSolution {
        kind: OracleKind::Velocity,
        steps: n,
        terminal_miss: values[n][0].abs(),
        values: values.into_iter().map(|v| v.to_vec()).collect(),
        shooting_parameter: s,
    })
}

/// Shoot on `s = F''(0)` until `|F(1)| ≤ 1e-12`: secant iteration with a
/// bisection fallback whenever an iterate leaves the current bracket.
pub fn shoot_velocity(params: &FlowParams, h: f64) -> Result<OracleSolution, OracleError> {
    params.validate()?;
    let n = steps_for(h)?;
    let miss = |s: f64| -> Result<f64, OracleError> { Ok(velocity_terminal(params, n, s)) };

    let (mut lo, mut hi) = VELOCITY_BRACKET;
    let (m_lo, m_hi) = (miss(lo)?, miss(hi)?);
    if m_lo.signum() == m_hi.signum() {
        return Err(OracleError::ShootingDiverged(format!(
            "F(1) does not change sign on s ∈ [{lo}, {hi}]"
        )));
    }
    let lo_sign = m_lo.signum();
    let tighten = |s: f64, m: f64, lo: &mut f64, hi: &mut f64| {
        if m.signum() == lo_sign {
            *lo = s;
        } else {
            *hi = s;
        }
    };

    let (mut s0, mut s1) = (-1.0, -4.0);
    let mut m0 = miss(s0)?;
    tighten(s0, m0, &mut lo, &mut hi);
    let mut m1 = miss(s1)?;
    tighten(s1, m1, &mut lo, &mut hi);
    for _ in 0..MAX_SHOOTING_ITERATIONS {
        if m1.abs() <= TERMINAL_TOLERANCE {
            return velocity_ivp(params, s1, h);
        }
        let (a, b) = (lo.min(hi), lo.max(hi));
        let mut next = if m1 != m0 && m1.is_finite() && m0.is_finite() {
            s1 - m1 * (s1 - s0) / (m1 - m0)
        } else {
            f64::NAN
        };
        if !(next > a && next < b) {
            next = 0.5 * (lo + hi);
        }
        s0 = s1;
        m0 = m1;
        s1 = next;
        m1 = miss(s1)?;
        tighten(s1, m1, &mut lo, &mut hi);
        if (hi - lo).abs() < f64::EPSILON * s1.abs() && m1.abs() > TERMINAL_TOLERANCE {
            break;
        }
    }
    Err(OracleError::ShootingDiverged(format!(
        "|F(1)| = {:.3e} after {MAX_SHOOTING_ITERATIONS} iterations",
        m1.abs()
    )))
}

/// Thermal reference on the velocity solution's grid, by superposition of
/// two initial-value problems (the equation is affine in θ).
pub fn shoot_thermal(
    params: &FlowParams,
    velocity: &OracleSolution,
    h: f64,
) -> Result<OracleSolution, OracleError> {
    params.validate()?;
    let n = steps_for(h)?;
    if velocity.kind != OracleKind::Velocity || velocity.steps != n {
        return Err(OracleError::GridMismatch {
            expected: n,
            found: velocity.steps,
        });
    }
    let (a, b) = (params.a(), params.b());
    let alpha = params.alpha;
    let re_pr = params.reynolds * params.prandtl;
    let forcing = params.beta * params.prandtl;
    let q = params.dissipation();
    // θ is carried alongside F so that RK4 stages see F at half steps.
    let rhs = move |_: f64, y: &[f64; 5]| {
        let (f, df) = (y[0], y[1]);
        [
            y[1],
            y[2],
            -a * f * df - b * df,
            y[4],
            -2.0 * alpha * (2.0 * alpha + re_pr * f) * y[3] - forcing * (q * f * f + df * df),
        ]
    };
    let s = velocity.shooting_parameter;
    let run = |theta0: f64| integrate([1.0, 0.0, s, theta0, 0.0], n, rhs);
    let end_zero = run(0.0)?[n][3];
    let end_one = run(1.0)?[n][3];
    let slope = end_one - end_zero;
    if slope.abs() <= f64::EPSILON * end_one.abs().max(end_zero.abs()).max(f64::MIN_POSITIVE) {
        return Err(OracleError::DegenerateHomogeneous);
    }
    let theta0 = -end_zero / slope;
    let path = run(theta0)?;
    let terminal_miss = path[n][3].abs();
    Ok(OracleSolution {
        kind: OracleKind::Thermal,
        steps: n,
        values: path.iter().map(|y| vec![y[3], y[4]]).collect(),
        shooting_parameter: theta0,
        terminal_miss,
    })
}
