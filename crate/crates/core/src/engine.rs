//! Problem-independent OHPM machinery.
//!
//! A problem is split as `L(u) + g + N(u) = 0` with `L = d^k/dη^k`. The
//! solution is truncated at second order, `ū = u0 + u1 + u2`, where
//!
//! ```text
//! L(u0) + g                          = 0   original boundary conditions
//! L(u1) + H0 · N(u0)                 = 0   homogeneous conditions
//! L(u2) + Σ_j H_{j+1} · u1^(d_j) · w_j = 0   homogeneous conditions
//! ```
//!
//! and `(d_j, w_j)` are the coupling terms supplied by the nonlinear model
//! (normally the Fréchet partials `N_u`, `N_{u'}`, ... evaluated at `u0`).
//! Every stage is a polynomial, so each solve is `k` exact antiderivatives
//! plus a degree-`(k-1)` correction fixed by the boundary conditions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::EngineError;
use crate::linalg;
use crate::poly::{LaurentPoly, MIN_EXPONENT};

/// Named control-parameter values.
pub type ParamMap = BTreeMap<String, f64>;

const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    /// Wall location, either 0 or 1.
    pub location: f64,
    pub derivative_order: usize,
    pub value: f64,
}

impl BoundaryCondition {
    pub fn new(location: f64, derivative_order: usize, value: f64) -> Self {
        Self {
            location,
            derivative_order,
            value,
        }
    }

    fn residual(&self, u: &LaurentPoly, homogeneous: bool) -> f64 {
        let target = if homogeneous { 0.0 } else { self.value };
        target - u.nth_derivative(self.derivative_order).eval(self.location)
    }
}

/// `d^k u/dη^k + g(η) = 0` together with `k` boundary conditions.
#[derive(Debug, Clone)]
pub struct LinearProblem {
    order: usize,
    conditions: Vec<BoundaryCondition>,
    forcing: LaurentPoly,
    basis_matrix: Vec<Vec<f64>>,
}

impl LinearProblem {
    pub fn new(
        order: usize,
        conditions: Vec<BoundaryCondition>,
        forcing: LaurentPoly,
    ) -> Result<Self, EngineError> {
        if order == 0 {
            return Err(EngineError::InvalidProblem("operator order must be ≥ 1".into()));
        }
        if conditions.len() != order {
            return Err(EngineError::InvalidProblem(format!(
                "order {order} operator needs {order} boundary conditions, got {}",
                conditions.len()
            )));
        }
        for bc in &conditions {
            if bc.location != 0.0 && bc.location != 1.0 {
                return Err(EngineError::InvalidProblem(format!(
                    "boundary location {} is not a wall (0 or 1)",
                    bc.location
                )));
            }
            if bc.derivative_order >= order {
                return Err(EngineError::InvalidProblem(format!(
                    "condition on derivative {} is not below operator order {order}",
                    bc.derivative_order
                )));
            }
        }
        if !forcing.is_polynomial() {
            return Err(EngineError::InvalidProblem(
                "forcing g must be a pure polynomial".into(),
            ));
        }

        // Row i: condition i applied to the monomials 1, η, ..., η^(k-1).
        let basis_matrix: Vec<Vec<f64>> = conditions
            .iter()
            .map(|bc| {
                (0..order)
                    .map(|j| {
                        LaurentPoly::monomial(j as i32, 1.0)
                            .nth_derivative(bc.derivative_order)
                            .eval(bc.location)
                    })
                    .collect()
            })
            .collect();
        let condition = linalg::condition_number(&basis_matrix);
        if condition > SINGULAR_CONDITION {
            return Err(EngineError::SingularBoundarySystem { condition });
        }

        Ok(Self {
            order,
            conditions,
            forcing,
            basis_matrix,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn conditions(&self) -> &[BoundaryCondition] {
        &self.conditions
    }

    pub fn forcing(&self) -> &LaurentPoly {
        &self.forcing
    }

    /// `L(u) = u^(k)`.
    pub fn apply_operator(&self, u: &LaurentPoly) -> LaurentPoly {
        u.nth_derivative(self.order)
    }

    /// Solves `u^(k) + rhs = 0` (plus `g` for the seed stage).
    ///
    /// With `homogeneous` unset this is the seed stage: `g` is included and
    /// the original boundary values apply. With it set, `g` is omitted and
    /// all boundary values are zero.
    pub fn solve_stage(
        &self,
        rhs: &LaurentPoly,
        homogeneous: bool,
    ) -> Result<LaurentPoly, EngineError> {
        let source = if homogeneous {
            rhs.clone()
        } else {
            &self.forcing + rhs
        };
        let particular = (-source).nth_antiderivative(self.order)?;

        let targets: Vec<f64> = self
            .conditions
            .iter()
            .map(|bc| bc.residual(&particular, homogeneous))
            .collect();
        let correction = linalg::solve(&self.basis_matrix, &targets).ok_or(
            EngineError::SingularBoundarySystem {
                condition: f64::INFINITY,
            },
        )?;
        let correction = LaurentPoly::from_coefficients(&correction);
        Ok(&particular + &correction)
    }

    /// Largest boundary-condition violation of `u`.
    pub fn boundary_defect(&self, u: &LaurentPoly, homogeneous: bool) -> f64 {
        self.conditions
            .iter()
            .map(|bc| bc.residual(u, homogeneous).abs())
            .fold(0.0, f64::max)
    }
}

/// `H(η; C) = constant(η) + Σ_k C_k · shape_k(η)`, optionally divided by one
/// further parameter at application time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuxFunction {
    name: String,
    constant: LaurentPoly,
    basis: Vec<(String, LaurentPoly)>,
    divisor: Option<String>,
}

impl AuxFunction {
    pub fn new(
        name: impl Into<String>,
        constant: LaurentPoly,
        basis: Vec<(String, LaurentPoly)>,
    ) -> Result<Self, EngineError> {
        let check = |p: &LaurentPoly| match p.min_exponent() {
            Some(e) if e < MIN_EXPONENT => Err(EngineError::Poly(
                crate::error::PolyError::PoleTooDeep { exponent: e },
            )),
            _ => Ok(()),
        };
        check(&constant)?;
        for (_, shape) in &basis {
            check(shape)?;
        }
        Ok(Self {
            name: name.into(),
            constant,
            basis,
            divisor: None,
        })
    }

    /// Identically zero auxiliary function.
    pub fn zero(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            constant: LaurentPoly::zero(),
            basis: Vec::new(),
            divisor: None,
        }
    }

    /// Divides the whole function by the named parameter when instantiated.
    pub fn with_divisor(mut self, parameter: impl Into<String>) -> Self {
        self.divisor = Some(parameter.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn basis(&self) -> &[(String, LaurentPoly)] {
        &self.basis
    }

    pub fn constant_part(&self) -> &LaurentPoly {
        &self.constant
    }

    pub fn divisor(&self) -> Option<&str> {
        self.divisor.as_deref()
    }

    pub fn parameter_names(&self) -> impl Iterator<Item = &str> {
        self.basis
            .iter()
            .map(|(n, _)| n.as_str())
            .chain(self.divisor.as_deref())
    }

    /// The polynomial `H(η)` for concrete parameter values.
    pub fn instantiate(&self, params: &ParamMap) -> Result<LaurentPoly, EngineError> {
        let lookup = |name: &str| {
            params
                .get(name)
                .copied()
                .ok_or_else(|| EngineError::MissingParameter(name.to_owned()))
        };
        let mut h = self.constant.clone();
        for (name, shape) in &self.basis {
            h = &h + &shape.scale(lookup(name)?);
        }
        if let Some(name) = &self.divisor {
            let d = lookup(name)?;
            // an all-zero numerator means the stage is simply switched off
            if d == 0.0 && h.is_zero() {
                return Ok(h);
            }
            if d == 0.0 {
                return Err(EngineError::ZeroDivisor(name.clone()));
            }
            h = h.scale(1.0 / d);
        }
        Ok(h)
    }

    /// `H(η; C) · carrier`, which must come out as a pure polynomial.
    pub fn apply(
        &self,
        params: &ParamMap,
        carrier: &LaurentPoly,
    ) -> Result<LaurentPoly, EngineError> {
        let product = &self.instantiate(params)? * carrier;
        match product.min_exponent() {
            Some(e) if e < 0 => Err(EngineError::PoleNotCancelled { min_exponent: e }),
            _ => Ok(product),
        }
    }
}

/// One second-stage term: `H · (d^order u1/dη^order) · weight`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pub derivative_order: usize,
    pub weight: LaurentPoly,
}

/// Supplies `N(u0)` and the second-stage couplings for a concrete problem.
pub trait NonlinearModel {
    fn seed_forcing(&self, u0: &LaurentPoly) -> LaurentPoly;

    /// Couplings in the order their auxiliary functions appear after `H0`.
    fn couplings(&self, u0: &LaurentPoly) -> Vec<Coupling>;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageSolution {
    pub u0: LaurentPoly,
    pub u1: LaurentPoly,
    pub u2: LaurentPoly,
    pub assembled: LaurentPoly,
    /// `H0 · N(u0)`.
    pub stage_one_rhs: LaurentPoly,
    /// `Σ_j H_{j+1} · u1^(d_j) · w_j`.
    pub stage_two_rhs: LaurentPoly,
}

/// Runs the seed stage and both correction stages.
///
/// `aux[0]` is `H0`; `aux[j + 1]` multiplies coupling `j`. Couplings without an
/// auxiliary function contribute nothing; surplus auxiliary functions (third
/// order slots) are ignored.
pub fn run_stages(
    problem: &LinearProblem,
    model: &dyn NonlinearModel,
    aux: &[AuxFunction],
    params: &ParamMap,
) -> Result<StageSolution, EngineError> {
    let (h0, stage_two_aux) = aux
        .split_first()
        .ok_or_else(|| EngineError::InvalidProblem("auxiliary set has no H0".into()))?;

    let u0 = problem.solve_stage(&LaurentPoly::zero(), false)?;

    let stage_one_rhs = h0.apply(params, &model.seed_forcing(&u0))?;
    let u1 = problem.solve_stage(&stage_one_rhs, true)?;

    let mut stage_two_rhs = LaurentPoly::zero();
    for (coupling, h) in model.couplings(&u0).iter().zip(stage_two_aux) {
        let carrier = &u1.nth_derivative(coupling.derivative_order) * &coupling.weight;
        stage_two_rhs = &stage_two_rhs + &h.apply(params, &carrier)?;
    }
    let u2 = problem.solve_stage(&stage_two_rhs, true)?;

    let assembled = &(&u0 + &u1) + &u2;
    Ok(StageSolution {
        u0,
        u1,
        u2,
        assembled,
        stage_one_rhs,
        stage_two_rhs,
    })
}
