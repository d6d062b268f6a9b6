//! Least-squares identification of the auxiliary-function parameters.
//!
//! The objective is `Σ_q w_q · (R(η_q; C) / s)²`, where `R` is the residual of
//! the governing equation at the assembled OHPM solution and `s` a fixed scale.
//! Levenberg–Marquardt works on the residual vector `√w_q · R(η_q) / s`;
//! Nelder–Mead is the derivative-free fallback.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cases::CaseDefinition;
use crate::engine::{run_stages, AuxFunction, LinearProblem, NonlinearModel, ParamMap, StageSolution};
use crate::error::FitError;
use crate::linalg;
use crate::model::{
    build_thermal_aux_set, build_velocity_aux_set, residual_thermal, residual_velocity,
    thermal_problem, velocity_problem, FlowParams, ThermalMode, ThermalModel, VelocityForm,
    VelocityModel, THERMAL_PARAMS, VELOCITY_EXTRA_PARAMS, VELOCITY_PARAMS,
};
use crate::poly::LaurentPoly;
use crate::quadrature::Quadrature;

pub const DEFAULT_MAX_ITERATIONS: usize = 500;
pub const DEFAULT_SEED: u64 = 20_130_601;
pub const PROFILE_POINTS: usize = 101;
const JACOBIAN_STEP: f64 = 1e-7;
const JACOBIAN_FLOOR: f64 = 1e-4;
const GRADIENT_TOLERANCE: f64 = 1e-10;
const DECREASE_TOLERANCE: f64 = 1e-12;
const DECREASE_WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "problem", rename_all = "lowercase")]
pub enum ProblemSpec {
    Velocity {
        form: VelocityForm,
        /// Adds `η³` and `η⁴` shapes to `H1`.
        extra_h1_terms: bool,
    },
    Thermal {
        mode: ThermalMode,
        /// Velocity field entering the thermal residual (normally the fitted
        /// `F̄`); the stage operator itself always uses `F0 = 1 − η²`.
        velocity: LaurentPoly,
    },
}

impl ProblemSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Velocity { .. } => "velocity",
            ProblemSpec::Thermal { .. } => "thermal",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub problem: ProblemSpec,
    pub quadrature: Quadrature,
    pub parameter_names: Vec<String>,
    pub bounds: Option<Vec<(f64, f64)>>,
    pub normalization: f64,
}

impl ObjectiveSpec {
    /// 30-point Gauss–Legendre, `C1..C7`, unit normalization.
    pub fn velocity(form: VelocityForm) -> Self {
        Self {
            problem: ProblemSpec::Velocity {
                form,
                extra_h1_terms: false,
            },
            quadrature: Quadrature::gauss_legendre(30),
            parameter_names: VELOCITY_PARAMS.iter().map(|s| s.to_string()).collect(),
            bounds: None,
            normalization: 1.0,
        }
    }

    pub fn with_extra_h1_terms(mut self) -> Self {
        if let ProblemSpec::Velocity { extra_h1_terms, .. } = &mut self.problem {
            if !*extra_h1_terms {
                *extra_h1_terms = true;
                self.parameter_names
                    .extend(VELOCITY_EXTRA_PARAMS.iter().map(|s| s.to_string()));
            }
        }
        self
    }

    /// `C8..C13`, normalized by `β·Pr·(H + 4α²)`.
    pub fn thermal(params: &FlowParams, mode: ThermalMode, velocity: LaurentPoly) -> Self {
        Self {
            problem: ProblemSpec::Thermal { mode, velocity },
            quadrature: Quadrature::gauss_legendre(30),
            parameter_names: THERMAL_PARAMS.iter().map(|s| s.to_string()).collect(),
            bounds: None,
            normalization: params.thermal_scale() + 1e-300,
        }
    }

    pub fn with_quadrature(mut self, quadrature: Quadrature) -> Self {
        self.quadrature = quadrature;
        self
    }

    pub fn validate(&self) -> Result<(), FitError> {
        self.quadrature
            .validate()
            .map_err(FitError::InvalidObjective)?;
        if self.parameter_names.is_empty() {
            return Err(FitError::InvalidObjective("no parameters to fit".into()));
        }
        if !(self.normalization > 0.0 && self.normalization.is_finite()) {
            return Err(FitError::InvalidObjective(format!(
                "normalization {} must be positive",
                self.normalization
            )));
        }
        if let Some(bounds) = &self.bounds {
            if bounds.len() != self.parameter_names.len() || bounds.iter().any(|(l, u)| l.is_nan() || u.is_nan() || l > u) {
                return Err(FitError::InvalidObjective("malformed bounds".into()));
            }
        }
        Ok(())
    }
}

/// A ready-to-evaluate objective for one flow case.
pub struct Objective {
    spec: ObjectiveSpec,
    params: FlowParams,
    problem: LinearProblem,
    model: Box<dyn NonlinearModel + Send + Sync>,
    aux: Vec<AuxFunction>,
}

impl Objective {
    pub fn new(spec: ObjectiveSpec, params: FlowParams) -> Result<Self, FitError> {
        spec.validate()?;
        params.validate()?;
        let (problem, model, aux): (LinearProblem, Box<dyn NonlinearModel + Send + Sync>, _) =
            match &spec.problem {
                ProblemSpec::Velocity {
                    form,
                    extra_h1_terms,
                } => (
                    velocity_problem(),
                    Box::new(VelocityModel {
                        params,
                        form: *form,
                    }),
                    build_velocity_aux_set(&params, *form, *extra_h1_terms),
                ),
                ProblemSpec::Thermal { mode, .. } => (
                    thermal_problem(*mode),
                    Box::new(ThermalModel::new(params, *mode)),
                    build_thermal_aux_set(),
                ),
            };
        Ok(Self {
            spec,
            params,
            problem,
            model,
            aux,
        })
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        &self.spec
    }

    pub fn flow_params(&self) -> &FlowParams {
        &self.params
    }

    pub fn to_map(&self, x: &[f64]) -> ParamMap {
        self.spec
            .parameter_names
            .iter()
            .cloned()
            .zip(x.iter().copied())
            .collect()
    }

    pub fn from_map(&self, map: &ParamMap) -> Result<Vec<f64>, FitError> {
        self.spec
            .parameter_names
            .iter()
            .map(|n| {
                map.get(n).copied().ok_or_else(|| {
                    FitError::InvalidObjective(format!("no value for parameter `{n}`"))
                })
            })
            .collect()
    }

    pub fn stages(&self, x: &[f64]) -> Result<StageSolution, FitError> {
        Ok(run_stages(
            &self.problem,
            self.model.as_ref(),
            &self.aux,
            &self.to_map(x),
        )?)
    }

    /// Residual polynomial of the governing equation at the assembled solution.
    pub fn residual_poly(&self, x: &[f64]) -> Result<LaurentPoly, FitError> {
        let solution = self.stages(x)?.assembled;
        Ok(match &self.spec.problem {
            ProblemSpec::Velocity { .. } => residual_velocity(&solution, &self.params),
            ProblemSpec::Thermal { velocity, .. } => {
                residual_thermal(&solution, velocity, &self.params)
            }
        })
    }

    /// `√w_q · R(η_q) / s` at every quadrature node.
    pub fn residual_vector(&self, x: &[f64]) -> Result<Vec<f64>, FitError> {
        let r = self.residual_poly(x)?;
        let q = &self.spec.quadrature;
        q.nodes
            .iter()
            .zip(&q.weights)
            .map(|(&eta, &w)| Ok(w.sqrt() * r.evaluate(eta).map_err(crate::error::EngineError::from)? / self.spec.normalization))
            .collect()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64, FitError> {
        Ok(self.residual_vector(x)?.iter().map(|r| r * r).sum())
    }

    /// Normalized residual on `η = i/100`.
    pub fn residual_profile(&self, x: &[f64]) -> Result<Vec<f64>, FitError> {
        let r = self.residual_poly(x)?;
        (0..PROFILE_POINTS)
            .map(|i| {
                let eta = i as f64 / (PROFILE_POINTS - 1) as f64;
                Ok(r.evaluate(eta).map_err(crate::error::EngineError::from)? / self.spec.normalization)
            })
            .collect()
    }

    fn project(&self, x: &mut [f64]) {
        if let Some(bounds) = &self.spec.bounds {
            for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
                *v = v.clamp(*lo, *hi);
            }
        }
    }
}

/// Objective value for a parameter map.
pub fn objective(
    params: &ParamMap,
    spec: &ObjectiveSpec,
    case: &CaseDefinition,
) -> Result<f64, FitError> {
    let objective = Objective::new(spec.clone(), case.params)?;
    objective.value(&objective.from_map(params)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Optimizer {
    LevenbergMarquardt,
    NelderMead,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iterations: usize,
    pub optimizer: Optimizer,
    /// Run Nelder–Mead from the Levenberg–Marquardt end point whenever LM
    /// fails to converge.
    pub fallback: bool,
    /// Fit the stage-one parameter alone before the joint fit.
    pub staged: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            optimizer: Optimizer::LevenbergMarquardt,
            fallback: true,
            staged: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub parameters: ParamMap,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Normalized residual at `η = 0, 0.01, …, 1`.
    pub residual_profile: Vec<f64>,
    /// Objective after every accepted step of the winning start.
    pub history: Vec<f64>,
    pub optimizer: Optimizer,
    pub start_index: usize,
}

/// The default eight starts: zeros, `±0.01` on the first parameter, and five
/// seeded uniform draws in `[−1, 1]·10⁻²`.
pub fn default_starts(names: &[String], seed: u64) -> Vec<ParamMap> {
    let zeros: ParamMap = names.iter().map(|n| (n.clone(), 0.0)).collect();
    let mut starts = vec![zeros.clone()];
    for sign in [1.0, -1.0] {
        let mut s = zeros.clone();
        if let Some(first) = names.first() {
            s.insert(first.clone(), sign * 0.01);
        }
        starts.push(s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..5 {
        starts.push(
            names
                .iter()
                .map(|n| (n.clone(), rng.gen_range(-1.0..=1.0) * 1e-2))
                .collect(),
        );
    }
    starts
}

#[derive(Debug, Clone)]
pub(crate) struct LocalResult {
    pub x: Vec<f64>,
    pub cost: f64,
    pub iterations: usize,
    pub converged: bool,
    pub history: Vec<f64>,
    /// At least one step was accepted.
    pub progressed: bool,
}

/// Levenberg–Marquardt with Marquardt diagonal scaling and a forward-difference
/// Jacobian. Only steps that lower the objective are accepted.
pub(crate) fn levenberg_marquardt<F>(
    residuals: F,
    x0: &[f64],
    max_iterations: usize,
    project: impl Fn(&mut [f64]),
    active: &[bool],
) -> Result<LocalResult, FitError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FitError>,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    project(&mut x);
    let mut r = residuals(&x)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut history = vec![cost];
    let mut lambda = 1e-3;
    let mut nu = 2.0;
    let mut scale = vec![0.0f64; n];
    let mut small_steps = 0;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < max_iterations {
        iterations += 1;
        let jac = jacobian(&residuals, &x, &r, active)?;
        let m = r.len();
        let grad: Vec<f64> = (0..n)
            .map(|j| (0..m).map(|i| jac[i][j] * r[i]).sum())
            .collect();
        if grad.iter().all(|g| g.abs() < GRADIENT_TOLERANCE) {
            converged = true;
            break;
        }
        let mut normal = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in a..n {
                let v: f64 = (0..m).map(|i| jac[i][a] * jac[i][b]).sum();
                normal[a][b] = v;
                normal[b][a] = v;
            }
            scale[a] = scale[a].max(normal[a][a]);
        }

        let mut accepted = None;
        while lambda < 1e20 {
            let mut damped = normal.clone();
            for j in 0..n {
                // inactive or flat directions still need a positive pivot
                damped[j][j] += lambda * scale[j].max(1e-300) + if active[j] { 0.0 } else { 1.0 };
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(step) = linalg::solve(&damped, &rhs) else {
                lambda *= nu;
                nu *= 2.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(&step).map(|(a, b)| a + b).collect();
            project(&mut trial);
            match residuals(&trial) {
                Ok(rt) => {
                    let ct: f64 = rt.iter().map(|v| v * v).sum();
                    if ct < cost {
                        // gain ratio against the linearized model (Nielsen's update)
                        let predicted: f64 = (0..n)
                            .map(|j| step[j] * (lambda * scale[j].max(1e-300) * step[j] - grad[j]))
                            .sum();
                        let rho = (cost - ct) / predicted.max(f64::MIN_POSITIVE);
                        lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                        lambda = lambda.max(1e-15);
                        nu = 2.0;
                        accepted = Some((trial, rt, ct));
                        break;
                    }
                    lambda *= nu;
                    nu *= 2.0;
                }
                Err(_) => {
                    lambda *= nu;
                    nu *= 2.0;
                }
            }
        }

        let Some((xn, rn, cn)) = accepted else {
            // no representable decrease left: the objective change is zero
            converged = history.len() > 1 || cost == 0.0;
            break;
        };
        let relative = (cost - cn) / cost.max(f64::MIN_POSITIVE);
        x = xn;
        r = rn;
        cost = cn;
        history.push(cost);
        if relative < DECREASE_TOLERANCE {
            small_steps += 1;
            if small_steps >= DECREASE_WINDOW {
                converged = true;
                break;
            }
        } else {
            small_steps = 0;
        }
    }
    Ok(LocalResult {
        progressed: history.len() > 1,
        x,
        cost,
        iterations,
        converged,
        history,
    })
}

fn jacobian<F>(
    residuals: &F,
    x: &[f64],
    r: &[f64],
    active: &[bool],
) -> Result<Vec<Vec<f64>>, FitError>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, FitError>,
{
    let m = r.len();
    let mut jac = vec![vec![0.0; x.len()]; m];
    for j in 0..x.len() {
        if !active[j] {
            continue;
        }
        let h = JACOBIAN_STEP * x[j].abs().max(JACOBIAN_FLOOR);
        let mut shifted = x.to_vec();
        shifted[j] += h;
        // fall back to a backward difference if the forward point is invalid
        let (rs, h) = match residuals(&shifted) {
            Ok(rs) => (rs, h),
            Err(_) => {
                shifted[j] = x[j] - h;
                (residuals(&shifted)?, -h)
            }
        };
        for i in 0..m {
            jac[i][j] = (rs[i] - r[i]) / h;
        }
    }
    Ok(jac)
}

/// Nelder–Mead simplex minimization; invalid points count as `+∞`.
pub(crate) fn nelder_mead<F>(
    f: F,
    x0: &[f64],
    max_iterations: usize,
    initial_step: f64,
    project: impl Fn(&mut [f64]),
) -> LocalResult
where
    F: Fn(&[f64]) -> f64,
{
    let n = x0.len();
    let eval = |x: &mut Vec<f64>| {
        project(x);
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    let mut base = x0.to_vec();
    let f0 = eval(&mut base);
    simplex.push((base.clone(), f0));
    for j in 0..n {
        let mut v = base.clone();
        v[j] += if v[j] != 0.0 { 0.05 * v[j] } else { initial_step };
        let fv = eval(&mut v);
        simplex.push((v, fv));
    }
    let mut history = vec![f0];
    let mut best = f0;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iterations {
        iterations += 1;
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        if simplex[0].1 < best {
            best = simplex[0].1;
            history.push(best);
        }
        let (lo, hi) = (simplex[0].1, simplex[n].1);
        let spread = simplex
            .iter()
            .flat_map(|(v, _)| v.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (hi - lo).abs() <= DECREASE_TOLERANCE * lo.abs() + 1e-300 || spread == 0.0 {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n)
            .map(|j| simplex[..n].iter().map(|(v, _)| v[j]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let mut reflected = along(1.0);
        let fr = eval(&mut reflected);
        if fr < simplex[0].1 {
            let mut expanded = along(2.0);
            let fe = eval(&mut expanded);
            simplex[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (reflected, fr);
        } else {
            let t = if fr < simplex[n].1 { 0.5 } else { -0.5 };
            let mut contracted = along(t);
            let fc = eval(&mut contracted);
            if fc < simplex[n].1.min(fr) {
                simplex[n] = (contracted, fc);
            } else {
                let anchor = simplex[0].0.clone();
                for item in simplex.iter_mut().skip(1) {
                    let mut v: Vec<f64> = anchor
                        .iter()
                        .zip(&item.0)
                        .map(|(a, b)| a + 0.5 * (b - a))
                        .collect();
                    let fv = eval(&mut v);
                    *item = (v, fv);
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let (x, cost) = simplex.swap_remove(0);
    LocalResult {
        progressed: history.len() > 1,
        x,
        cost,
        iterations,
        converged,
        history,
    }
}

const SIMPLEX_RESTARTS: usize = 400;
const SIMPLEX_SIZE: f64 = 0.1;
/// Iterations per simplex before the metric is re-linearized, per parameter.
const SIMPLEX_SPAN: usize = 100;

/// Nelder–Mead in whitened coordinates `x = x_k + L⁻ᵀ z`, where `L Lᵀ` is the
/// Gauss–Newton metric `JᵀJ / ‖r‖²`: a unit step in `z` moves the residual
/// vector by about its own length in every direction.
/// The simplex is rebuilt around the best point until a restart stops helping.
/// Derivatives only set the coordinate scales; the search itself never uses them.
fn scaled_nelder_mead(
    objective: &Objective,
    x0: &[f64],
    budget: usize,
) -> Result<LocalResult, FitError> {
    let n = x0.len();
    let mut x = x0.to_vec();
    objective.project(&mut x);
    let mut r = objective.residual_vector(&x)?;
    let mut cost: f64 = r.iter().map(|v| v * v).sum();
    let mut history = vec![cost];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..SIMPLEX_RESTARTS {
        if iterations >= budget || cost == 0.0 {
            converged = cost == 0.0;
            break;
        }
        let jac = jacobian(&|x: &[f64]| objective.residual_vector(x), &x, &r, &vec![true; n])?;
        // whiten with the Gauss–Newton metric JᵀJ (ridge keeps flat directions finite)
        let mut metric = vec![vec![0.0; n]; n];
        for a in 0..n {
            for b in 0..n {
                metric[a][b] = jac.iter().map(|row| row[a] * row[b]).sum::<f64>() / cost.max(f64::MIN_POSITIVE);
            }
        }
        let ridge = (0..n).map(|j| metric[j][j]).fold(0.0, f64::max) * 1e-12;
        for (j, row) in metric.iter_mut().enumerate() {
            row[j] += ridge.max(1.0 / x[j].abs().max(JACOBIAN_FLOOR).powi(2) * 1e-12);
        }
        let factor = linalg::cholesky(&metric);
        let base = x.clone();
        let to_x = |z: &[f64]| -> Vec<f64> {
            let dx = match &factor {
                Some(l) => linalg::solve_upper_transposed(l, z),
                None => z.iter().zip(&base).map(|(z, b)| z * b.abs().max(JACOBIAN_FLOOR)).collect(),
            };
            let mut out: Vec<f64> = base.iter().zip(&dx).map(|(b, d)| b + d).collect();
            objective.project(&mut out);
            out
        };
        let value = |z: &[f64]| objective.value(&to_x(z)).unwrap_or(f64::INFINITY);
        let cap = (budget - iterations).min(SIMPLEX_SPAN * n);
        let local = nelder_mead(value, &vec![0.0; n], cap, SIMPLEX_SIZE, |_| {});
        iterations += local.iterations;
        let improved = local.cost < cost;
        if improved {
            let gain = (cost - local.cost) / cost;
            history.extend(local.history.into_iter().skip(1));
            x = to_x(&local.x);
            r = objective.residual_vector(&x)?;
            cost = r.iter().map(|v| v * v).sum();
            if gain < 1e-9 {
                converged = true;
                break;
            }
        } else {
            converged = local.converged;
            break;
        }
    }
    Ok(LocalResult {
        progressed: history.len() > 1,
        x,
        cost,
        iterations,
        converged,
        history,
    })
}

fn local_fit(
    objective: &Objective,
    x0: &[f64],
    options: &FitOptions,
) -> Result<(LocalResult, Optimizer), FitError> {
    let residuals = |x: &[f64]| objective.residual_vector(x);
    let project = |x: &mut [f64]| objective.project(x);
    let n = x0.len();
    match options.optimizer {
        Optimizer::NelderMead => Ok((
            scaled_nelder_mead(objective, x0, options.max_iterations * n * 100)?,
            Optimizer::NelderMead,
        )),
        Optimizer::LevenbergMarquardt => {
            let mut start = x0.to_vec();
            let mut prefix = Vec::new();
            if options.staged && n > 1 {
                let mut mask = vec![false; n];
                mask[0] = true;
                let first = levenberg_marquardt(residuals, &start, options.max_iterations, project, &mask)?;
                start = first.x;
                prefix = first.history;
            }
            let mut lm = levenberg_marquardt(
                residuals,
                &start,
                options.max_iterations,
                project,
                &vec![true; n],
            )?;
            if !prefix.is_empty() {
                prefix.extend(lm.history.into_iter().skip(1));
                lm.history = prefix;
                lm.progressed = lm.history.len() > 1;
            }
            if lm.converged || !options.fallback {
                return Ok((lm, Optimizer::LevenbergMarquardt));
            }
            let nm = scaled_nelder_mead(objective, &lm.x, options.max_iterations * n * 2)?;
            if nm.cost < lm.cost {
                let mut history = lm.history;
                history.extend(nm.history.into_iter().skip(1));
                Ok((
                    LocalResult {
                        history,
                        progressed: true,
                        iterations: lm.iterations + nm.iterations,
                        ..nm
                    },
                    Optimizer::NelderMead,
                ))
            } else {
                Ok((lm, Optimizer::LevenbergMarquardt))
            }
        }
    }
}

/// Best local minimum over all starts. Starts that cannot even be evaluated
/// (for instance a zero divisor) are skipped.
pub fn fit(
    spec: &ObjectiveSpec,
    case: &CaseDefinition,
    starts: &[ParamMap],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    let objective = Objective::new(spec.clone(), case.params)?;
    fit_objective(&objective, starts, options)
}

pub fn fit_objective(
    objective: &Objective,
    starts: &[ParamMap],
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if starts.is_empty() {
        return Err(FitError::InvalidObjective("at least one start is required".into()));
    }
    let mut best: Option<(usize, LocalResult, Optimizer)> = None;
    let mut last_error = None;
    for (index, start) in starts.iter().enumerate() {
        let x0 = objective.from_map(start)?;
        match local_fit(objective, &x0, options) {
            Ok((local, optimizer)) => {
                let better = best.as_ref().is_none_or(|(_, b, _)| local.cost < b.cost);
                if better {
                    best = Some((index, local, optimizer));
                }
            }
            Err(e) => last_error = Some(e),
        }
    }
    let Some((start_index, local, optimizer)) = best else {
        return Err(last_error.unwrap_or(FitError::NoProgress {
            iterations: options.max_iterations,
        }));
    };
    Ok(FitResult {
        parameters: objective.to_map(&local.x),
        objective: objective.value(&local.x)?,
        iterations: local.iterations,
        converged: local.converged,
        residual_profile: objective.residual_profile(&local.x)?,
        history: local.history,
        optimizer,
        start_index,
    })
}

/// Fit with the default eight starts.
pub fn fit_default(
    spec: &ObjectiveSpec,
    case: &CaseDefinition,
    seed: u64,
) -> Result<FitResult, FitError> {
    let starts = default_starts(&spec.parameter_names, seed);
    fit(spec, case, &starts, &FitOptions::default())
}

/// Velocity-then-thermal fit: the thermal residual uses the fitted `F̄`.
pub fn fit_case(
    case: &CaseDefinition,
    form: VelocityForm,
    seed: u64,
) -> Result<(FitResult, FitResult, LaurentPoly), FitError> {
    let vspec = ObjectiveSpec::velocity(form);
    let velocity_fit = fit_default(&vspec, case, seed)?;
    let vobj = Objective::new(vspec, case.params)?;
    let f_bar = vobj
        .stages(&vobj.from_map(&velocity_fit.parameters)?)?
        .assembled;
    let tspec = ObjectiveSpec::thermal(&case.params, case.mode, f_bar.clone());
    let thermal_fit = fit_default(&tspec, case, seed)?;
    Ok((velocity_fit, thermal_fit, f_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cases::bundled_case;

    #[test]
    fn lm_solves_linear_least_squares() {
        // minimize ∫(C1·η − η)² with a 30-point rule
        let q = Quadrature::gauss_legendre(30);
        let residuals = |x: &[f64]| -> Result<Vec<f64>, FitError> {
            Ok(q.nodes
                .iter()
                .zip(&q.weights)
                .map(|(&eta, &w)| w.sqrt() * (x[0] * eta - eta))
                .collect())
        };
        let out = levenberg_marquardt(residuals, &[0.0], 500, |_| {}, &[true]).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-8);
        assert!(out.converged);
    }

    #[test]
    fn nelder_mead_finds_rosenbrock_minimum() {
        let f = |x: &[f64]| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2);
        let out = nelder_mead(f, &[-1.2, 1.0], 5000, 2.5e-4, |_| {});
        assert!((out.x[0] - 1.0).abs() < 1e-4 && (out.x[1] - 1.0).abs() < 1e-4);
        assert!(out.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn zero_parameters_leave_seed_residual() {
        let case = bundled_case("5.1").unwrap();
        let spec = ObjectiveSpec::velocity(VelocityForm::Printed);
        let zeros: ParamMap = VELOCITY_PARAMS.iter().map(|n| (n.to_string(), 0.0)).collect();
        let at_zero = objective(&zeros, &spec, &case).unwrap();
        // R(F0) = −2η(A(1 − η²) + B); ∫R² by hand
        let (a, b) = (case.params.a(), case.params.b());
        let exact = 4.0 * (a * a * (1.0 / 3.0 - 2.0 / 5.0 + 1.0 / 7.0)
            + 2.0 * a * b * (1.0 / 3.0 - 1.0 / 5.0)
            + b * b / 3.0);
        assert!(at_zero > 0.0);
        assert!((at_zero - exact).abs() < 1e-10 * exact);
        let paper = objective(case.paper_params_velocity.as_ref().unwrap(), &spec, &case).unwrap();
        assert!(paper <= at_zero);
    }

    #[test]
    fn unforced_thermal_objective_vanishes() {
        let mut case = bundled_case("5.1").unwrap();
        case.params.beta = 0.0;
        let spec = ObjectiveSpec::thermal(&case.params, ThermalMode::ScaleConsistent, crate::model::f0());
        let zeros: ParamMap = THERMAL_PARAMS.iter().map(|n| (n.to_string(), 0.0)).collect();
        assert_eq!(objective(&zeros, &spec, &case).unwrap(), 0.0);
    }

    #[test]
    fn starts_are_seeded() {
        let names: Vec<String> = VELOCITY_PARAMS.iter().map(|s| s.to_string()).collect();
        let a = default_starts(&names, 7);
        assert_eq!(a.len(), 8);
        assert_eq!(a, default_starts(&names, 7));
        assert_ne!(a[3], default_starts(&names, 8)[3]);
        assert_eq!(a[1]["C1"], 0.01);
        assert_eq!(a[2]["C1"], -0.01);
        assert!(a[3..].iter().all(|s| s.values().all(|v| v.abs() <= 0.01)));
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut spec = ObjectiveSpec::velocity(VelocityForm::Printed);
        spec.normalization = 0.0;
        assert!(spec.validate().is_err());
        let spec = ObjectiveSpec::velocity(VelocityForm::Printed).with_quadrature(Quadrature {
            nodes: vec![0.5],
            weights: vec![0.9],
        });
        assert!(spec.validate().is_err());
        let case = bundled_case("5.1").unwrap();
        let ok = ObjectiveSpec::velocity(VelocityForm::Printed);
        assert!(fit(&ok, &case, &[], &FitOptions::default()).is_err());
    }
}
