//! Case selection from flags and files.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fs;

use ohpm_core::cases::{bundled_case, parse_case_file, CaseDefinition};
use ohpm_core::{FlowParams, ThermalMode, VelocityForm};

use crate::error::CliError;
use crate::{CaseArgs, FormArg, ModeArg};

pub const DEFAULT_REYNOLDS: f64 = 50.0;
pub const DEFAULT_PRANDTL: f64 = 1.0;
pub const DEFAULT_BETA: f64 = 3.492161428e-13;

/// Parses a plain number or a multiple of π: `pi`, `pi/24`, `2pi/3`, `2*pi/3`, `π/36`.
pub fn parse_angle(s: &str) -> Result<f64, String> {
    let t = s.trim().to_ascii_lowercase().replace('π', "pi");
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot parse angle `{s}`");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let factor = num.strip_suffix("pi").ok_or_else(bad)?.trim_end_matches('*').trim();
    let factor = match factor {
        "" => 1.0,
        "-" => -1.0,
        f => f.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(factor * PI / den)
}

/// Parses `1-16`, `2`, `1,3,5-7`; blank selects nothing.
pub fn parse_table_set(s: &str) -> Result<BTreeSet<u32>, CliError> {
    let bad = || CliError::Validation(format!("invalid table range `{s}`"));
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (lo, hi) = match part.split_once('-') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (part, part),
        };
        let lo: u32 = lo.parse().map_err(|_| bad())?;
        let hi: u32 = hi.parse().map_err(|_| bad())?;
        out.extend(lo..=hi);
    }
    Ok(out)
}

pub fn thermal_mode(m: ModeArg) -> ThermalMode {
    match m {
        ModeArg::Paper => ThermalMode::Paper,
        ModeArg::ScaleConsistent => ThermalMode::ScaleConsistent,
    }
}

pub fn velocity_form(f: FormArg) -> VelocityForm {
    match f {
        FormArg::Printed => VelocityForm::Printed,
        FormArg::Consistent => VelocityForm::Consistent,
    }
}

/// A case built from explicit parameters, without any published data.
pub fn custom_case(id: String, params: FlowParams, mode: ThermalMode) -> CaseDefinition {
    CaseDefinition {
        id,
        params,
        mode,
        paper_params_velocity: None,
        paper_params_thermal: None,
        paper_solution_f: None,
        paper_solution_theta: None,
    }
}

/// Resolves the case flags. Overriding any flow parameter detaches the
/// published data, which no longer describes the case.
pub fn resolve(args: &CaseArgs) -> Result<CaseDefinition, CliError> {
    let mut case = if let Some(path) = &args.case_file {
        let text = fs::read_to_string(path).map_err(CliError::io(path))?;
        let mut cases = parse_case_file(&text)?;
        match &args.case {
            Some(id) => cases
                .into_iter()
                .find(|c| &c.id == id)
                .ok_or_else(|| CliError::MissingData(format!("case `{id}` not in {}", path.display())))?,
            None if cases.len() == 1 => cases.remove(0),
            None => {
                return Err(CliError::Validation(
                    "--case is required when the case file holds several cases".into(),
                ))
            }
        }
    } else if let Some(id) = &args.case {
        bundled_case(id)?
    } else if args.alpha.is_some() {
        let params = FlowParams {
            alpha: 0.0,
            reynolds: DEFAULT_REYNOLDS,
            hartmann: 0.0,
            prandtl: DEFAULT_PRANDTL,
            beta: DEFAULT_BETA,
        };
        custom_case("custom".into(), params, ThermalMode::default())
    } else {
        return Err(CliError::Validation(
            "one of --case, --case-file or --alpha is required".into(),
        ));
    };

    let original = case.params;
    let p = &mut case.params;
    for (flag, target) in [
        (args.alpha, &mut p.alpha),
        (args.re, &mut p.reynolds),
        (args.hartmann, &mut p.hartmann),
        (args.pr, &mut p.prandtl),
        (args.beta, &mut p.beta),
    ] {
        if let Some(v) = flag {
            *target = v;
        }
    }
    if case.params != original {
        case = custom_case(case.id, case.params, case.mode);
    }
    if let Some(m) = args.mode {
        case.mode = thermal_mode(m);
    }
    case.params.validate()?;
    Ok(case)
}
