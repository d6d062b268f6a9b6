//! The eight bundled flow cases and the digitized comparison tables.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::ModelError;
use crate::model::{FlowParams, ThermalMode};
use crate::poly::LaurentPoly;

const BUNDLED_CASES: &str = include_str!("../data/cases.json");
const BUNDLED_TABLES: &str = include_str!("../data/tables.json");

/// One entry of a case file; polynomials are `[[exponent, coefficient], ...]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseFile {
    pub id: String,
    pub alpha: f64,
    #[serde(rename = "Re")]
    pub reynolds: f64,
    #[serde(rename = "H")]
    pub hartmann: f64,
    #[serde(rename = "Pr")]
    pub prandtl: f64,
    pub beta: f64,
    #[serde(default)]
    pub mode: ThermalMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_parameters_velocity: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_parameters_thermal: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_solution_f: Option<Vec<(i32, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_solution_theta: Option<Vec<(i32, f64)>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseDefinition {
    pub id: String,
    pub params: FlowParams,
    pub mode: ThermalMode,
    pub paper_params_velocity: Option<BTreeMap<String, f64>>,
    pub paper_params_thermal: Option<BTreeMap<String, f64>>,
    pub paper_solution_f: Option<LaurentPoly>,
    pub paper_solution_theta: Option<LaurentPoly>,
}

fn to_poly(terms: &Option<Vec<(i32, f64)>>) -> Result<Option<LaurentPoly>, ModelError> {
    terms
        .as_ref()
        .map(|t| LaurentPoly::from_terms(t.iter().copied()).map_err(ModelError::from))
        .transpose()
}

impl TryFrom<CaseFile> for CaseDefinition {
    type Error = ModelError;

    fn try_from(file: CaseFile) -> Result<Self, ModelError> {
        let params = FlowParams::new(
            file.alpha,
            file.reynolds,
            file.hartmann,
            file.prandtl,
            file.beta,
        )?;
        Ok(Self {
            paper_solution_f: to_poly(&file.paper_solution_f)?,
            paper_solution_theta: to_poly(&file.paper_solution_theta)?,
            id: file.id,
            params,
            mode: file.mode,
            paper_params_velocity: file.paper_parameters_velocity,
            paper_params_thermal: file.paper_parameters_thermal,
        })
    }
}

impl From<&CaseDefinition> for CaseFile {
    fn from(case: &CaseDefinition) -> Self {
        let terms = |p: &Option<LaurentPoly>| p.as_ref().map(|p| p.terms().collect());
        Self {
            id: case.id.clone(),
            alpha: case.params.alpha,
            reynolds: case.params.reynolds,
            hartmann: case.params.hartmann,
            prandtl: case.params.prandtl,
            beta: case.params.beta,
            mode: case.mode,
            paper_parameters_velocity: case.paper_params_velocity.clone(),
            paper_parameters_thermal: case.paper_params_thermal.clone(),
            paper_solution_f: terms(&case.paper_solution_f),
            paper_solution_theta: terms(&case.paper_solution_theta),
        }
    }
}

/// Parse a case file holding either one case object or an array of them.
pub fn parse_case_file(json: &str) -> Result<Vec<CaseDefinition>, ModelError> {
    let value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    let files: Vec<CaseFile> = if value.is_array() {
        serde_json::from_value(value)
    } else {
        serde_json::from_value(value).map(|one| vec![one])
    }
    .map_err(|e| ModelError::InvalidParams(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(files.len());
    for file in files {
        if !seen.insert(file.id.clone()) {
            return Err(ModelError::InvalidParams(format!("duplicate case id `{}`", file.id)));
        }
        out.push(CaseDefinition::try_from(file)?);
    }
    Ok(out)
}

pub fn bundled_cases() -> Vec<CaseDefinition> {
    parse_case_file(BUNDLED_CASES).expect("bundled case data is valid")
}

pub fn bundled_case(id: &str) -> Result<CaseDefinition, ModelError> {
    bundled_cases()
        .into_iter()
        .find(|c| c.id == id)
        .ok_or_else(|| ModelError::UnknownCase(id.to_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(rename = "F")]
    Velocity,
    #[serde(rename = "theta")]
    Temperature,
}

/// One row of a digitized table. `error` is the printed `|numeric − OHPM|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hpm: Option<f64>,
    pub numeric: f64,
    pub ohpm: f64,
    pub error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperTable {
    pub table: u32,
    pub case: String,
    pub quantity: Quantity,
    /// Number of the printed solution polynomial the OHPM column comes from.
    pub equation: u32,
    pub rows: Vec<TableRow>,
}

impl PaperTable {
    pub fn row_at(&self, eta: f64) -> Option<&TableRow> {
        self.rows.iter().find(|r| (r.eta - eta).abs() < 1e-9)
    }

    pub fn interior_rows(&self) -> impl Iterator<Item = &TableRow> {
        self.rows.iter().filter(|r| r.eta > 1e-9 && r.eta < 1.0 - 1e-9)
    }
}

pub fn bundled_tables() -> Vec<PaperTable> {
    serde_json::from_str(BUNDLED_TABLES).expect("bundled table data is valid")
}

pub fn bundled_table(number: u32) -> Option<PaperTable> {
    bundled_tables().into_iter().find(|t| t.table == number)
}

/// The table for a case and quantity.
pub fn table_for(case: &str, quantity: Quantity) -> Option<PaperTable> {
    bundled_tables()
        .into_iter()
        .find(|t| t.case == case && t.quantity == quantity)
}
