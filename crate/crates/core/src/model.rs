//! The two Jeffery–Hamel boundary-value problems cast for the OHPM engine.
//!
//! Velocity:  `F''' + 2αRe·F·F' + (4 − H)α²·F' = 0`, `F(0) = 1, F'(0) = 0, F(1) = 0`.
//!
//! Thermal:   `θ'' + 2α(2α + Re·Pr·F)·θ + β·Pr·[(H + 4α²)F² + F'²] = 0`,
//!            `θ(1) = 0, θ'(0) = 0`.
//!
//! With `F0 = 1 − η²` the velocity groups collapse to `A = 2αRe` and
//! `B = (4 − H)α²`.

use serde::{Deserialize, Serialize};

use crate::engine::{AuxFunction, BoundaryCondition, Coupling, LinearProblem, NonlinearModel};
use crate::error::ModelError;
use crate::poly::LaurentPoly;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowParams {
    /// Channel half-angle in radians.
    pub alpha: f64,
    #[serde(rename = "Re")]
    pub reynolds: f64,
    #[serde(rename = "H")]
    pub hartmann: f64,
    #[serde(rename = "Pr")]
    pub prandtl: f64,
    pub beta: f64,
}

impl FlowParams {
    pub fn new(
        alpha: f64,
        reynolds: f64,
        hartmann: f64,
        prandtl: f64,
        beta: f64,
    ) -> Result<Self, ModelError> {
        let p = Self {
            alpha,
            reynolds,
            hartmann,
            prandtl,
            beta,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |msg: String| Err(ModelError::InvalidParams(msg));
        let all = [
            self.alpha,
            self.reynolds,
            self.hartmann,
            self.prandtl,
            self.beta,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return fail("all parameters must be finite".into());
        }
        if !(self.alpha > 0.0 && self.alpha < std::f64::consts::FRAC_PI_2) {
            return fail(format!("alpha = {} must lie in (0, π/2)", self.alpha));
        }
        if self.reynolds <= 0.0 {
            return fail(format!("Re = {} must be positive", self.reynolds));
        }
        if self.hartmann < 0.0 {
            return fail(format!("H = {} must be non-negative", self.hartmann));
        }
        if self.prandtl <= 0.0 {
            return fail(format!("Pr = {} must be positive", self.prandtl));
        }
        if self.beta < 0.0 {
            return fail(format!("beta = {} must be non-negative", self.beta));
        }
        Ok(())
    }

    /// `A = 2αRe`.
    pub fn a(&self) -> f64 {
        2.0 * self.alpha * self.reynolds
    }

    /// `B = (4 − H)α²`.
    pub fn b(&self) -> f64 {
        (4.0 - self.hartmann) * self.alpha * self.alpha
    }

    /// `H + 4α²`, the coefficient of `F²` in the dissipation term.
    pub fn dissipation(&self) -> f64 {
        self.hartmann + 4.0 * self.alpha * self.alpha
    }

    /// `β·Pr·(H + 4α²)`, the natural scale of the thermal forcing.
    pub fn thermal_scale(&self) -> f64 {
        self.beta * self.prandtl * self.dissipation()
    }
}

/// How the thermal equation is split into `L`, `g` and `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ThermalMode {
    /// `g = −1` and an `N` carrying a compensating `+1`, as in the printed
    /// derivation; `θ0` is then O(1).
    #[serde(alias = "paper-fidelity")]
    Paper,
    /// `g = 0` and `N` is the whole remainder of the thermal equation, so
    /// `θ0 ≡ 0` and every stage scales with β.
    #[default]
    ScaleConsistent,
}

/// How the velocity stages are assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelocityForm {
    /// Reproduces the published closed forms: the seed forcing
    /// `2Aη² − 2(A+B)η` and a `C7/η` term acting on `u1` with unit weight
    /// (the printed solution polynomials follow from exactly this algebra).
    #[default]
    Printed,
    /// Seed forcing and couplings taken literally from the velocity operator:
    /// `N(F0) = 2Aη³ − 2(A+B)η`, `H2 = C6/2 + C7/η` acting on `u1'·N_{F'}`.
    Consistent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantsProvenance {
    PaperFormula,
    Derived,
}

/// The groups in `N(θ0) = C − 2Dη² + Eη⁴` and `N_θ(θ0) = L + Kη²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermalConstants {
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub l: f64,
    pub k: f64,
    pub provenance: ConstantsProvenance,
}

impl ThermalConstants {
    /// The published closed-form expressions.
    pub fn paper_formula(p: &FlowParams) -> Self {
        let (a, re, pr, h, beta) = (p.alpha, p.reynolds, p.prandtl, p.hartmann, p.beta);
        let a2 = a * a;
        Self {
            c: 1.0 + 2.0 * a2 + a * re * pr + 4.0 * beta * a2 * pr + pr * h * beta,
            d: a2 + 2.0 * a * re * pr + 2.0 * beta * pr * (2.0 * a2 - 1.0) + pr * h * beta,
            e: a * re * pr + 4.0 * beta * a2 * pr + pr * h * beta,
            l: 4.0 * a2 + 2.0 * a * re * pr,
            k: -2.0 * a * re * pr,
            provenance: ConstantsProvenance::PaperFormula,
        }
    }

    /// Read off the expansion of `N(θ0)` at `θ0 = (1 − η²)/2`, `F0 = 1 − η²`
    /// in paper mode.
    pub fn derived(p: &FlowParams) -> Self {
        let theta0 = LaurentPoly::from_coefficients(&[0.5, 0.0, -0.5]);
        let terms = thermal_nonlinear(p, &f0(), &theta0, ThermalMode::Paper);
        Self {
            c: terms.n0.coefficient(0),
            d: -terms.n0.coefficient(2) / 2.0,
            e: terms.n0.coefficient(4),
            l: terms.n_theta.coefficient(0),
            k: terms.n_theta.coefficient(2),
            provenance: ConstantsProvenance::Derived,
        }
    }
}

/// `F0 = 1 − η²`.
pub fn f0() -> LaurentPoly {
    LaurentPoly::from_coefficients(&[1.0, 0.0, -1.0])
}

#[derive(Debug, Clone, PartialEq)]
pub struct VelocityTerms {
    pub n0: LaurentPoly,
    pub n_f: LaurentPoly,
    pub n_fprime: LaurentPoly,
}

/// `N(F) = 2αRe·F·F' + (4 − H)α²·F'` and its partials at `f`.
pub fn velocity_nonlinear(params: &FlowParams, f: &LaurentPoly) -> VelocityTerms {
    let (a, b) = (params.a(), params.b());
    let df = f.differentiate();
    VelocityTerms {
        n0: &(f * &df).scale(a) + &df.scale(b),
        n_f: df.scale(a),
        n_fprime: &f.scale(a) + &LaurentPoly::constant(b),
    }
}

/// The seed forcing as printed for `F0 = 1 − η²`: `2Aη² − 2(A+B)η`.
pub fn printed_velocity_seed_forcing(params: &FlowParams) -> LaurentPoly {
    let (a, b) = (params.a(), params.b());
    LaurentPoly::from_coefficients(&[0.0, -2.0 * (a + b), 2.0 * a])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalTerms {
    pub n0: LaurentPoly,
    /// `N_θ`; `N_{θ'}` is identically zero.
    pub n_theta: LaurentPoly,
}

/// `N(θ0)` and `N_θ(θ0)` for the selected decomposition, with `f` the
/// velocity field inside the operator.
///
/// Both modes use `(H + 4α²)` as the `F²` dissipation coefficient.
pub fn thermal_nonlinear(
    params: &FlowParams,
    f: &LaurentPoly,
    theta0: &LaurentPoly,
    mode: ThermalMode,
) -> ThermalTerms {
    let alpha = params.alpha;
    let n_theta = &LaurentPoly::constant(4.0 * alpha * alpha)
        + &f.scale(2.0 * alpha * params.reynolds * params.prandtl);
    let df = f.differentiate();
    let dissipation = (&(f * f).scale(params.dissipation()) + &(&df * &df))
        .scale(params.beta * params.prandtl);
    let mut n0 = &(&n_theta * theta0) + &dissipation;
    if mode == ThermalMode::Paper {
        n0 = &n0 + &LaurentPoly::constant(1.0);
    }
    ThermalTerms { n0, n_theta }
}

/// `F''' = 0` with `F(0) = 1, F'(0) = 0, F(1) = 0`.
pub fn velocity_problem() -> LinearProblem {
    LinearProblem::new(
        3,
        vec![
            BoundaryCondition::new(0.0, 0, 1.0),
            BoundaryCondition::new(0.0, 1, 0.0),
            BoundaryCondition::new(1.0, 0, 0.0),
        ],
        LaurentPoly::zero(),
    )
    .expect("velocity boundary system is well posed")
}

/// `θ'' + g = 0` with `θ(1) = 0, θ'(0) = 0`.
pub fn thermal_problem(mode: ThermalMode) -> LinearProblem {
    let g = match mode {
        ThermalMode::Paper => LaurentPoly::constant(-1.0),
        ThermalMode::ScaleConsistent => LaurentPoly::zero(),
    };
    LinearProblem::new(
        2,
        vec![
            BoundaryCondition::new(1.0, 0, 0.0),
            BoundaryCondition::new(0.0, 1, 0.0),
        ],
        g,
    )
    .expect("thermal boundary system is well posed")
}

pub const VELOCITY_PARAMS: [&str; 7] = ["C1", "C2", "C3", "C4", "C5", "C6", "C7"];
pub const THERMAL_PARAMS: [&str; 6] = ["C8", "C9", "C10", "C11", "C12", "C13"];
/// Optional extra `H1` shapes (`η³`, `η⁴`) for experimentation.
pub const VELOCITY_EXTRA_PARAMS: [&str; 2] = ["C2x3", "C2x4"];

fn shape(name: &str, exponent: i32, coefficient: f64) -> (String, LaurentPoly) {
    (name.to_owned(), LaurentPoly::monomial(exponent, coefficient))
}

/// `H0 = −60·C1`, `H1 = (C2η² + C3η + C4 + C5/η)/(2A)`, `H2 = C6/2 + C7/η`.
///
/// In the printed form `H2` is split: `C6/2` multiplies `u1'·N_{F'}` and
/// `C7/η` gets its own slot against `u1`.
pub fn build_velocity_aux_set(
    params: &FlowParams,
    form: VelocityForm,
    extra_h1_terms: bool,
) -> Vec<AuxFunction> {
    let scale = 1.0 / (2.0 * params.a());
    let h0 = AuxFunction::new("H0", LaurentPoly::zero(), vec![shape("C1", 0, -60.0)]);
    let mut h1_basis = vec![
        shape("C2", 2, scale),
        shape("C3", 1, scale),
        shape("C4", 0, scale),
        shape("C5", -1, scale),
    ];
    if extra_h1_terms {
        h1_basis.push(shape(VELOCITY_EXTRA_PARAMS[0], 3, scale));
        h1_basis.push(shape(VELOCITY_EXTRA_PARAMS[1], 4, scale));
    }
    let h1 = AuxFunction::new("H1", LaurentPoly::zero(), h1_basis);
    let mut set = vec![h0, h1];
    match form {
        VelocityForm::Printed => {
            set.push(AuxFunction::new("H2", LaurentPoly::zero(), vec![shape("C6", 0, 0.5)]));
            set.push(AuxFunction::new("H2'", LaurentPoly::zero(), vec![shape("C7", -1, 1.0)]));
        }
        VelocityForm::Consistent => {
            set.push(AuxFunction::new(
                "H2",
                LaurentPoly::zero(),
                vec![shape("C6", 0, 0.5), shape("C7", -1, 1.0)],
            ));
        }
    }
    set.into_iter()
        .map(|h| h.expect("velocity shapes have at most a simple pole"))
        .collect()
}

/// `h0 = −30·C8`, `h1 = (C9 + C10η + C11η² + C12η³ + C13η⁴)/C8`.
pub fn build_thermal_aux_set() -> Vec<AuxFunction> {
    let h0 = AuxFunction::new("h0", LaurentPoly::zero(), vec![shape("C8", 0, -30.0)]);
    let h1 = AuxFunction::new(
        "h1",
        LaurentPoly::zero(),
        (0..5)
            .map(|j| shape(THERMAL_PARAMS[j + 1], j as i32, 1.0))
            .collect(),
    )
    .map(|h| h.with_divisor("C8"));
    vec![h0, h1]
        .into_iter()
        .map(|h| h.expect("thermal shapes are polynomial"))
        .collect()
}

#[derive(Debug, Clone)]
pub struct VelocityModel {
    pub params: FlowParams,
    pub form: VelocityForm,
}

impl NonlinearModel for VelocityModel {
    fn seed_forcing(&self, u0: &LaurentPoly) -> LaurentPoly {
        match self.form {
            // only defined for the fixed seed F0 = 1 − η²
            VelocityForm::Printed => printed_velocity_seed_forcing(&self.params),
            VelocityForm::Consistent => velocity_nonlinear(&self.params, u0).n0,
        }
    }

    fn couplings(&self, u0: &LaurentPoly) -> Vec<Coupling> {
        let terms = velocity_nonlinear(&self.params, u0);
        let mut out = vec![
            Coupling {
                derivative_order: 0,
                weight: terms.n_f,
            },
            Coupling {
                derivative_order: 1,
                weight: terms.n_fprime,
            },
        ];
        if self.form == VelocityForm::Printed {
            out.push(Coupling {
                derivative_order: 0,
                weight: LaurentPoly::constant(-1.0),
            });
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ThermalModel {
    pub params: FlowParams,
    /// Velocity field used inside the operator (normally `F0`).
    pub velocity: LaurentPoly,
    pub mode: ThermalMode,
}

impl ThermalModel {
    pub fn new(params: FlowParams, mode: ThermalMode) -> Self {
        Self {
            params,
            velocity: f0(),
            mode,
        }
    }
}

impl NonlinearModel for ThermalModel {
    fn seed_forcing(&self, u0: &LaurentPoly) -> LaurentPoly {
        thermal_nonlinear(&self.params, &self.velocity, u0, self.mode).n0
    }

    fn couplings(&self, u0: &LaurentPoly) -> Vec<Coupling> {
        let terms = thermal_nonlinear(&self.params, &self.velocity, u0, self.mode);
        vec![Coupling {
            derivative_order: 0,
            weight: terms.n_theta,
        }]
    }
}

/// `F''' + 2αRe·F·F' + (4 − H)α²·F'`.
pub fn residual_velocity(f: &LaurentPoly, params: &FlowParams) -> LaurentPoly {
    let df = f.differentiate();
    let nonlinear = &(f * &df).scale(params.a()) + &df.scale(params.b());
    &f.nth_derivative(3) + &nonlinear
}

/// `θ'' + 2α(2α + Re·Pr·F)θ + β·Pr·[(H + 4α²)F² + F'²]`.
pub fn residual_thermal(theta: &LaurentPoly, f: &LaurentPoly, params: &FlowParams) -> LaurentPoly {
    let terms = thermal_nonlinear(params, f, theta, ThermalMode::ScaleConsistent);
    &theta.nth_derivative(2) + &terms.n0
}
