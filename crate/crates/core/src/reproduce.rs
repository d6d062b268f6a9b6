//! Regeneration of the published comparison tables and the list of
//! internal inconsistencies found while doing so.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::cases::{bundled_cases, bundled_tables, CaseDefinition, PaperTable, Quantity};
use crate::engine::{run_stages, ParamMap};
use crate::error::OracleError;
use crate::model::{
    build_velocity_aux_set, f0, thermal_problem, velocity_problem, FlowParams, ThermalConstants,
    ThermalMode, VelocityForm, VelocityModel,
};
use crate::oracle::{shoot_thermal, shoot_velocity, OracleSolution};
use crate::poly::LaurentPoly;

/// One line of a comparison table. `abs_error` is always recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub eta: f64,
    pub numeric: f64,
    pub ohpm: f64,
    pub abs_error: f64,
    pub paper_numeric: Option<f64>,
    pub paper_ohpm: Option<f64>,
    pub paper_hpm: Option<f64>,
}

impl ComparisonRow {
    pub fn new(eta: f64, numeric: f64, ohpm: f64) -> Self {
        Self {
            eta,
            numeric,
            ohpm,
            abs_error: (numeric - ohpm).abs(),
            paper_numeric: None,
            paper_ohpm: None,
            paper_hpm: None,
        }
    }

    pub const CSV_HEADER: &'static str =
        "eta,numeric,ohpm,abs_error,paper_numeric,paper_ohpm,paper_hpm";
}

/// Both reference solutions for one case.
#[derive(Debug, Clone)]
pub struct CaseOracle {
    pub velocity: OracleSolution,
    pub thermal: OracleSolution,
}

impl CaseOracle {
    pub fn compute(params: &FlowParams, h: f64) -> Result<Self, OracleError> {
        let velocity = shoot_velocity(params, h)?;
        let thermal = shoot_thermal(params, &velocity, h)?;
        Ok(Self { velocity, thermal })
    }

    pub fn get(&self, quantity: Quantity) -> &OracleSolution {
        match quantity {
            Quantity::Velocity => &self.velocity,
            Quantity::Temperature => &self.thermal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegeneratedTable {
    pub table: u32,
    pub case: String,
    pub quantity: Quantity,
    pub equation: u32,
    pub rows: Vec<ComparisonRow>,
    /// `max |own oracle − printed numeric|`.
    pub max_numeric_deviation: f64,
    /// `max |printed polynomial − printed OHPM column|`.
    pub max_ohpm_deviation: f64,
}

/// Rebuild a table from the oracle and the bundled solution polynomial.
pub fn regenerate_table(
    table: &PaperTable,
    case: &CaseDefinition,
    oracle: &CaseOracle,
) -> RegeneratedTable {
    let solution = match table.quantity {
        Quantity::Velocity => case.paper_solution_f.as_ref(),
        Quantity::Temperature => case.paper_solution_theta.as_ref(),
    };
    let reference = oracle.get(table.quantity);
    let rows: Vec<ComparisonRow> = table
        .rows
        .iter()
        .map(|r| {
            let numeric = reference
                .at_node(r.eta)
                .unwrap_or_else(|| reference.interpolate(r.eta));
            let ohpm = solution.map_or(f64::NAN, |p| p.eval(r.eta));
            ComparisonRow {
                paper_numeric: Some(r.numeric),
                paper_ohpm: Some(r.ohpm),
                paper_hpm: r.hpm,
                ..ComparisonRow::new(r.eta, numeric, ohpm)
            }
        })
        .collect();
    let max_dev = |f: &dyn Fn(&ComparisonRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    RegeneratedTable {
        table: table.table,
        case: table.case.clone(),
        quantity: table.quantity,
        equation: table.equation,
        max_numeric_deviation: max_dev(&|r| (r.numeric - r.paper_numeric.unwrap()).abs()),
        max_ohpm_deviation: max_dev(&|r| (r.ohpm - r.paper_ohpm.unwrap()).abs()),
        rows,
    }
}

/// Regenerate every bundled table whose number is in `range`; oracles are
/// computed once per case.
pub fn regenerate_tables(
    range: std::ops::RangeInclusive<u32>,
    h: f64,
) -> Result<Vec<RegeneratedTable>, OracleError> {
    let cases: BTreeMap<String, CaseDefinition> = bundled_cases()
        .into_iter()
        .map(|c| (c.id.clone(), c))
        .collect();
    let mut oracles: BTreeMap<String, CaseOracle> = BTreeMap::new();
    let mut out = Vec::new();
    for table in bundled_tables().into_iter().filter(|t| range.contains(&t.table)) {
        let case = &cases[&table.case];
        if !oracles.contains_key(&case.id) {
            oracles.insert(case.id.clone(), CaseOracle::compute(&case.params, h)?);
        }
        out.push(regenerate_table(&table, case, &oracles[&case.id]));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub key: &'static str,
    pub title: String,
    pub detail: String,
    pub evidence: Vec<Evidence>,
}

fn ev(label: impl Into<String>, value: f64) -> Evidence {
    Evidence {
        label: label.into(),
        value,
    }
}

/// Assembled velocity stages from the printed Case 5.1 parameters.
fn printed_velocity(case: &CaseDefinition) -> Option<(crate::engine::StageSolution, ParamMap)> {
    let params = case.paper_params_velocity.clone()?;
    let model = VelocityModel {
        params: case.params,
        form: VelocityForm::Printed,
    };
    let aux = build_velocity_aux_set(&case.params, VelocityForm::Printed, false);
    run_stages(&velocity_problem(), &model, &aux, &params)
        .ok()
        .map(|s| (s, params))
}

/// The documented inconsistencies of the source derivation, each with
/// numbers computed here. `tables` (if supplied) adds the table-level checks.
pub fn findings(tables: &[RegeneratedTable]) -> Vec<Finding> {
    let cases = bundled_cases();
    let case = &cases[0];
    let p = case.params;
    let mut out = Vec::new();

    // (a) seed of the thermal problem
    let theta0 = thermal_problem(ThermalMode::Paper)
        .solve_stage(&LaurentPoly::zero(), false)
        .expect("thermal seed problem is well posed");
    let printed_theta0 = LaurentPoly::from_coefficients(&[0.5, 0.0, -0.5]);
    let printed_defect = printed_theta0.nth_derivative(2).eval(0.5) - 1.0;
    out.push(Finding {
        key: "thermal-seed-sign",
        title: "Thermal seed: stated stage equation vs stated solution".into(),
        detail: "The seed equation θ0'' − 1 = 0 with θ0(1) = 0, θ0'(0) = 0 integrates to \
                 θ0 = (η² − 1)/2, but the printed seed is (1 − η²)/2, which leaves the \
                 equation with a constant defect of −2."
            .into(),
        evidence: vec![
            ev("solved θ0(0)", theta0.eval(0.0)),
            ev("printed θ0(0)", printed_theta0.eval(0.0)),
            ev("printed θ0'' − 1", printed_defect),
        ],
    });

    // (b) assembled velocity η² coefficient
    if let Some((stages, c)) = printed_velocity(case) {
        let (a, b) = (p.a(), p.b());
        let m = stages.u2.coefficient(2);
        let with_c1 = (3.0 * a + 5.0 * b) * c["C1"] + m - 1.0;
        let without_c1 = (3.0 * a + 5.0 * b) + m - 1.0;
        let published = case
            .paper_solution_f
            .as_ref()
            .map_or(f64::NAN, |f| f.coefficient(2));
        out.push(Finding {
            key: "assembled-eta2-missing-c1",
            title: "Assembled velocity: η² coefficient drops the factor C1".into(),
            detail: "Summing the stages gives (3A + 5B)·C1 + M − 1 for the η² coefficient; \
                     the printed assembled form has (3A + 5B) + M − 1. Evaluated for Case 5.1 \
                     with its printed parameters, only the C1 version matches the published \
                     solution polynomial."
                .into(),
            evidence: vec![
                ev("stage sum η² coefficient", stages.assembled.coefficient(2)),
                ev("(3A+5B)·C1 + M − 1", with_c1),
                ev("(3A+5B) + M − 1 as printed", without_c1),
                ev("published solution η² coefficient", published),
            ],
        });
    }

    // (c) the D group
    let printed = ThermalConstants::paper_formula(&p);
    let derived = ThermalConstants::derived(&p);
    out.push(Finding {
        key: "thermal-constant-d",
        title: "Thermal constant D: printed formula vs expansion".into(),
        detail: "Expanding N(θ0) at θ0 = (1 − η²)/2, F0 = 1 − η² gives an η² coefficient \
                 −2D with D = α² + αRePr + βPr(H + 4α² − 2); the printed D carries 2αRePr. \
                 C and E agree. Values for Case 5.1:"
            .into(),
        evidence: vec![
            ev("printed D", printed.d),
            ev("derived D", derived.d),
            ev("printed − derived", printed.d - derived.d),
            ev("αRePr", p.alpha * p.reynolds * p.prandtl),
            ev("printed C − derived C", printed.c - derived.c),
            ev("printed E − derived E", printed.e - derived.e),
        ],
    });

    // (d) dissipation coefficient
    let mut evidence = Vec::new();
    for c in &cases {
        let q = c.params;
        evidence.push(ev(
            format!("Case {}: (H + 4α²) / (1 + 4α²)", c.id),
            q.dissipation() / (1.0 + 4.0 * q.alpha * q.alpha),
        ));
    }
    out.push(Finding {
        key: "dissipation-coefficient",
        title: "Dissipation term: (1 + 4α²)F² in the operator vs (H + 4α²)F² in the equation"
            .into(),
        detail: "The nonlinear thermal operator multiplies F² by (1 + 4α²), while the \
                 governing energy equation and the printed constants C, D, E (which carry \
                 PrHβ terms) use (H + 4α²). This implementation uses (H + 4α²) throughout. \
                 The two coincide only for H = 1; the ratio per case:"
            .into(),
        evidence,
    });

    // (e) the velocity stage algebra behind the published solutions
    if let Some((stages, c)) = printed_velocity(case) {
        let (a, b) = (p.a(), p.b());
        let n0 = crate::model::velocity_nonlinear(&p, &f0()).n0;
        let eq37_eta4 = -((3.0 * a * a + 8.0 * a * b + 5.0 * b * b) * c["C1"] * c["C6"]
            + (3.0 * a + 5.0 * b) * c["C1"] * c["C7"])
            / 24.0;
        let eq37_eta4_plus = -((3.0 * a * a + 8.0 * a * b + 5.0 * b * b) * c["C1"] * c["C6"]
            - (3.0 * a + 5.0 * b) * c["C1"] * c["C7"])
            / 24.0;
        let max_gap = case.paper_solution_f.as_ref().map_or(f64::NAN, |f| {
            (0..=10)
                .map(|i| (stages.assembled.eval(i as f64 / 10.0) - f.eval(i as f64 / 10.0)).abs())
                .fold(0.0, f64::max)
        });
        out.push(Finding {
            key: "velocity-stage-algebra",
            title: "Velocity stages: the published solutions follow a different algebra".into(),
            detail: "F0·F0' for F0 = 1 − η² is cubic, so N(F0) = 2Aη³ − 2(A + B)η, not the \
                     printed 2Aη² − 2(A + B)η. The published first stage and all published \
                     solution polynomials are built from the quadratic form, and their C7 \
                     terms come from C7/η multiplying F1 itself (weight −1) rather than \
                     F1'·N_F'. Only that reading reproduces the published polynomials from \
                     the printed parameters; the η⁴ C7 term then enters with a + sign."
                .into(),
            evidence: vec![
                ev("true N(F0) η³ coefficient", n0.coefficient(3)),
                ev("true N(F0) η² coefficient", n0.coefficient(2)),
                ev("stage-two η⁴ coefficient (reconstructed)", stages.u2.coefficient(4)),
                ev("printed η⁴ expression", eq37_eta4),
                ev("printed η⁴ expression with + on C7", eq37_eta4_plus),
                ev("max |reconstruction − published polynomial| on η = 0..1", max_gap),
            ],
        });
    }

    // (f) thermal tables
    let thermal: Vec<&RegeneratedTable> = tables
        .iter()
        .filter(|t| t.quantity == Quantity::Temperature)
        .collect();
    if !thermal.is_empty() {
        let mut evidence = Vec::new();
        for t in &thermal {
            let at0 = t.rows.iter().find(|r| r.eta == 0.0);
            if let Some(r) = at0 {
                let alpha = cases
                    .iter()
                    .find(|c| c.id == t.case)
                    .map_or(f64::NAN, |c| c.params.alpha);
                let ratio = r.paper_numeric.unwrap() / r.numeric;
                evidence.push(ev(format!("Table {}: printed θ(0) / computed θ(0)", t.table), ratio));
                evidence.push(ev(format!("Table {}: that ratio × α²", t.table), ratio * alpha * alpha));
                evidence.push(ev(
                    format!("Table {}: published polynomial θ(0) − printed OHPM θ(0)", t.table),
                    r.ohpm - r.paper_ohpm.unwrap(),
                ));
            }
            let even_gap = t
                .rows
                .iter()
                .filter(|r| ((r.eta * 10.0).round() as i64) % 2 == 0)
                .map(|r| (r.paper_numeric.unwrap() - r.paper_ohpm.unwrap()).abs())
                .fold(0.0, f64::max);
            evidence.push(ev(
                format!("Table {}: max |printed numeric − printed OHPM| at even rows", t.table),
                even_gap,
            ));
        }
        out.push(Finding {
            key: "thermal-tables",
            title: "Thermal tables do not match the energy equation they are labelled with".into(),
            detail: "Solving the energy equation by shooting gives temperatures about \
                     1.7/α² times smaller than the printed numeric columns (the ratio also \
                     drifts with η, so no single rescaling reconciles them). At η = 0, 0.2, …, 1 \
                     the printed numeric and OHPM columns coincide to rounding, so the numeric \
                     column is not an independent reference. For most cases the published θ̄ \
                     polynomials also disagree in sign and shape with their own OHPM columns."
                .into(),
            evidence,
        });
    }
    out
}

/// Markdown rendering of the findings.
pub fn findings_markdown(findings: &[Finding]) -> String {
    let mut out = String::from("# Findings\n\n");
    for (i, f) in findings.iter().enumerate() {
        out.push_str(&format!("## {}. {}\n\n{}\n\n", i + 1, f.title, f.detail));
        for e in &f.evidence {
            out.push_str(&format!("- {}: {:.6e}\n", e.label, e.value));
        }
        out.push('\n');
    }
    out
}
