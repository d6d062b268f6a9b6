use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ohpm_core::cases::{bundled_cases, bundled_tables, table_for, CaseDefinition, Quantity};
use ohpm_core::fit::{fit_case, fit_default, FitResult, Objective, ObjectiveSpec, Optimizer};
use ohpm_core::reproduce::{
    findings, findings_markdown, regenerate_table, CaseOracle, ComparisonRow, RegeneratedTable,
};
use ohpm_core::{FlowParams, LaurentPoly, ParamMap, VelocityForm};
use rayon::prelude::*;
use serde::Serialize;

use crate::case::{custom_case, parse_table_set, resolve, thermal_mode, velocity_form};
use crate::error::CliError;
use crate::output::{
    comparison_cells, comparison_csv, comparison_header, csv_dev, csv_num, csv_table, to_json,
    write,
};
use crate::{FitArgs, Format, OracleArgs, ProblemArg, ReproduceArgs, RunCaseArgs, SweepArgs};

/// Points of the comparison grid η = 0, 0.1, …, 1.
const COMPARISON_POINTS: usize = 11;
/// Points of the plot-data grid.
const PLOT_POINTS: usize = 101;

fn uniform(points: usize) -> impl Iterator<Item = f64> {
    let last = (points - 1).max(1) as f64;
    (0..points).map(move |i| i as f64 / last)
}

fn reference_at(oracle: &CaseOracle, quantity: Quantity, eta: f64) -> f64 {
    let s = oracle.get(quantity);
    s.at_node(eta).unwrap_or_else(|| s.interpolate(eta))
}

/// Approximate solutions of one case and where they came from.
struct Solved {
    source: &'static str,
    f: LaurentPoly,
    theta: LaurentPoly,
    velocity_fit: Option<FitResult>,
    thermal_fit: Option<FitResult>,
    velocity_params: ParamMap,
    thermal_params: Option<ParamMap>,
}

fn assemble(objective: &Objective, params: &ParamMap) -> Result<LaurentPoly, CliError> {
    Ok(objective.stages(&objective.from_map(params)?)?.assembled)
}

/// Fitted solutions, or (with `paper`) the published velocity parameters and
/// the published temperature polynomial.
fn solve(case: &CaseDefinition, paper: bool, form: VelocityForm, seed: u64) -> Result<Solved, CliError> {
    if paper {
        let missing = |what: &str| CliError::MissingData(format!("case `{}` has no published {what}", case.id));
        let params = case
            .paper_params_velocity
            .clone()
            .ok_or_else(|| missing("velocity parameters"))?;
        let theta = case
            .paper_solution_theta
            .clone()
            .ok_or_else(|| missing("temperature solution"))?;
        // the published parameters belong to the printed auxiliary set
        let objective = Objective::new(ObjectiveSpec::velocity(VelocityForm::Printed), case.params)?;
        return Ok(Solved {
            source: "paper-params",
            f: assemble(&objective, &params)?,
            theta,
            velocity_fit: None,
            thermal_fit: None,
            velocity_params: params,
            thermal_params: case.paper_params_thermal.clone(),
        });
    }
    let (velocity_fit, thermal_fit, f) = fit_case(case, form, seed)?;
    let tobj = Objective::new(
        ObjectiveSpec::thermal(&case.params, case.mode, f.clone()),
        case.params,
    )?;
    let theta = assemble(&tobj, &thermal_fit.parameters)?;
    Ok(Solved {
        source: "fit",
        f,
        theta,
        velocity_params: velocity_fit.parameters.clone(),
        thermal_params: Some(thermal_fit.parameters.clone()),
        velocity_fit: Some(velocity_fit),
        thermal_fit: Some(thermal_fit),
    })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct FitRecord {
    case: String,
    problem: &'static str,
    source: &'static str,
    parameters: Option<ParamMap>,
    objective: Option<f64>,
    converged: Option<bool>,
    iterations: Option<usize>,
    optimizer: Option<Optimizer>,
    start_index: Option<usize>,
    seed: Option<u64>,
    max_grid_error_vs_oracle: f64,
    relative_grid_error_vs_oracle: f64,
}

fn grid_errors(poly: &LaurentPoly, oracle: &CaseOracle, quantity: Quantity) -> (f64, f64) {
    let mut max_err: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for eta in uniform(COMPARISON_POINTS) {
        let r = reference_at(oracle, quantity, eta);
        max_err = max_err.max((poly.eval(eta) - r).abs());
        scale = scale.max(r.abs());
    }
    let rel = if scale > 0.0 { max_err / scale } else { max_err };
    (max_err, rel)
}

fn fit_record(
    case: &CaseDefinition,
    quantity: Quantity,
    solved: &Solved,
    oracle: &CaseOracle,
    seed: u64,
) -> FitRecord {
    let (poly, fit, params, problem) = match quantity {
        Quantity::Velocity => (&solved.f, &solved.velocity_fit, Some(&solved.velocity_params), "velocity"),
        Quantity::Temperature => (&solved.theta, &solved.thermal_fit, solved.thermal_params.as_ref(), "thermal"),
    };
    let (max_err, rel) = grid_errors(poly, oracle, quantity);
    FitRecord {
        case: case.id.clone(),
        problem,
        source: solved.source,
        parameters: params.cloned(),
        objective: fit.as_ref().map(|f| f.objective),
        converged: fit.as_ref().map(|f| f.converged),
        iterations: fit.as_ref().map(|f| f.iterations),
        optimizer: fit.as_ref().map(|f| f.optimizer),
        start_index: fit.as_ref().map(|f| f.start_index),
        seed: fit.as_ref().map(|_| seed),
        max_grid_error_vs_oracle: max_err,
        relative_grid_error_vs_oracle: rel,
    }
}

fn comparison_rows(
    case: &CaseDefinition,
    quantity: Quantity,
    poly: &LaurentPoly,
    oracle: &CaseOracle,
) -> Vec<ComparisonRow> {
    // published columns only describe the bundled parameter set
    let table = ohpm_core::cases::bundled_case(&case.id)
        .ok()
        .filter(|b| b.params == case.params)
        .and_then(|_| table_for(&case.id, quantity));
    uniform(COMPARISON_POINTS)
        .map(|eta| {
            let mut row = ComparisonRow::new(eta, reference_at(oracle, quantity, eta), poly.eval(eta));
            if let Some(t) = table.as_ref().and_then(|t| t.row_at(eta)) {
                row.paper_numeric = Some(t.numeric);
                row.paper_ohpm = Some(t.ohpm);
                row.paper_hpm = t.hpm;
            }
            row
        })
        .collect()
}

fn plot_csv(poly: &LaurentPoly, oracle: &CaseOracle, quantity: Quantity) -> String {
    csv_table(
        &["eta", "ohpm", "numeric"],
        uniform(PLOT_POINTS).map(|eta| {
            [
                csv_num(eta),
                csv_num(poly.eval(eta)),
                csv_num(reference_at(oracle, quantity, eta)),
            ]
        }),
    )
}

/// File-system-safe form of a case id.
fn dir_name(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' })
        .collect()
}

fn file_suffix(q: Quantity) -> &'static str {
    match q {
        Quantity::Velocity => "F",
        Quantity::Temperature => "theta",
    }
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    case: &'a str,
    source: &'a str,
    #[serde(rename = "F")]
    f: &'a LaurentPoly,
    theta: &'a LaurentPoly,
}

fn write_plots(dir: &Path, solved: &Solved, oracle: &CaseOracle) -> Result<(), CliError> {
    for (q, poly) in [(Quantity::Velocity, &solved.f), (Quantity::Temperature, &solved.theta)] {
        let path = dir.join(format!("plot_{}.csv", file_suffix(q)));
        write(&path, &plot_csv(poly, oracle, q))?;
    }
    Ok(())
}

pub fn run_case(args: &RunCaseArgs) -> Result<(), CliError> {
    let case = resolve(&args.case)?;
    let oracle = CaseOracle::compute(&case.params, args.h)?;
    let solved = solve(&case, args.paper_params, velocity_form(args.form), args.seed)?;
    let dir = args.out.join(dir_name(&case.id));

    let records: Vec<FitRecord> = [Quantity::Velocity, Quantity::Temperature]
        .into_iter()
        .map(|q| fit_record(&case, q, &solved, &oracle, args.seed))
        .collect();
    write(&dir.join("fit.json"), &to_json(&records))?;
    let solution = SolutionFile {
        case: &case.id,
        source: solved.source,
        f: &solved.f,
        theta: &solved.theta,
    };
    write(&dir.join("solution.json"), &to_json(&solution))?;

    let mut summary = BTreeMap::new();
    for (q, poly) in [(Quantity::Velocity, &solved.f), (Quantity::Temperature, &solved.theta)] {
        let rows = comparison_rows(&case, q, poly, &oracle);
        let max = rows.iter().map(|r| r.abs_error).fold(0.0, f64::max);
        summary.insert(format!("maxAbsError{}", file_suffix(q)), max);
        write(
            &dir.join(format!("comparison_{}.csv", file_suffix(q))),
            &comparison_csv(&rows),
        )?;
    }
    write_plots(&dir, &solved, &oracle)?;

    println!(
        "{}",
        serde_json::json!({
            "case": case.id,
            "source": solved.source,
            "out": dir,
            "maxAbsErrorF": summary["maxAbsErrorF"],
            "maxAbsErrortheta": summary["maxAbsErrortheta"],
        })
    );
    Ok(())
}

pub fn export_plot_data(args: &RunCaseArgs) -> Result<(), CliError> {
    let case = resolve(&args.case)?;
    let oracle = CaseOracle::compute(&case.params, args.h)?;
    let solved = solve(&case, args.paper_params, velocity_form(args.form), args.seed)?;
    let dir = args.out.join(dir_name(&case.id));
    write_plots(&dir, &solved, &oracle)?;
    println!("{}", serde_json::json!({ "case": case.id, "out": dir }));
    Ok(())
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let case = resolve(&args.case)?;
    let oracle = CaseOracle::compute(&case.params, args.h)?;
    let form = velocity_form(args.form);
    let solved = match args.problem {
        ProblemArg::Velocity => {
            let spec = ObjectiveSpec::velocity(form);
            let fit = fit_default(&spec, &case, args.seed)?;
            let objective = Objective::new(spec, case.params)?;
            Solved {
                source: "fit",
                f: assemble(&objective, &fit.parameters)?,
                theta: LaurentPoly::zero(),
                velocity_params: fit.parameters.clone(),
                velocity_fit: Some(fit),
                thermal_fit: None,
                thermal_params: None,
            }
        }
        ProblemArg::Thermal | ProblemArg::Both => solve(&case, false, form, args.seed)?,
    };
    let quantities: &[Quantity] = match args.problem {
        ProblemArg::Velocity => &[Quantity::Velocity],
        ProblemArg::Thermal => &[Quantity::Temperature],
        ProblemArg::Both => &[Quantity::Velocity, Quantity::Temperature],
    };
    let records: Vec<FitRecord> = quantities
        .iter()
        .map(|&q| fit_record(&case, q, &solved, &oracle, args.seed))
        .collect();
    let text = match args.format {
        Format::Json => to_json(&records),
        Format::Csv => fit_records_csv(&records),
    };
    match &args.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn fit_records_csv(records: &[FitRecord]) -> String {
    let mut cells: Vec<[String; 4]> = Vec::new();
    for r in records {
        let mut line = |name: &str, value: String| {
            cells.push([r.case.clone(), r.problem.to_string(), name.to_string(), value]);
        };
        for (name, value) in r.parameters.iter().flatten() {
            line(name, csv_num(*value));
        }
        if let Some(o) = r.objective {
            line("objective", csv_dev(o));
        }
        if let Some(c) = r.converged {
            line("converged", c.to_string());
        }
        line("max_grid_error_vs_oracle", csv_dev(r.max_grid_error_vs_oracle));
        line("relative_grid_error_vs_oracle", csv_dev(r.relative_grid_error_vs_oracle));
    }
    csv_table(&["case", "problem", "name", "value"], cells)
}

pub fn oracle(args: &OracleArgs) -> Result<(), CliError> {
    let case = resolve(&args.case)?;
    let oracle = CaseOracle::compute(&case.params, args.h)?;
    let quantities: &[Quantity] = match args.problem {
        ProblemArg::Velocity => &[Quantity::Velocity],
        ProblemArg::Thermal => &[Quantity::Temperature],
        ProblemArg::Both => &[Quantity::Velocity, Quantity::Temperature],
    };
    let mut summary = Vec::new();
    for &q in quantities {
        let s = oracle.get(q);
        if let Some(dir) = &args.out {
            let (name, text) = match args.format {
                Format::Csv => (format!("oracle_{}.csv", file_suffix(q)), s.to_csv()),
                Format::Json => (format!("oracle_{}.json", file_suffix(q)), to_json(s)),
            };
            write(&dir.join(dir_name(&case.id)).join(name), &text)?;
        }
        let samples: Vec<[f64; 2]> = uniform(COMPARISON_POINTS)
            .map(|eta| [eta, reference_at(&oracle, q, eta)])
            .collect();
        summary.push(serde_json::json!({
            "quantity": file_suffix(q),
            "shootingParameter": s.shooting_parameter,
            "terminalMiss": s.terminal_miss,
            "steps": s.steps,
            "samples": samples,
        }));
    }
    println!("{}", serde_json::json!({ "case": case.id, "solutions": summary }));
    Ok(())
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TableSummary<'a> {
    table: u32,
    case: &'a str,
    quantity: &'static str,
    equation: u32,
    max_numeric_deviation: f64,
    max_ohpm_deviation: f64,
    max_abs_error: f64,
}

fn table_csv(t: &RegeneratedTable) -> String {
    let mut header = comparison_header();
    header.extend(["numeric_deviation", "ohpm_deviation"]);
    let dev = |a: f64, b: Option<f64>| b.map(|b| csv_dev((a - b).abs())).unwrap_or_default();
    csv_table(
        &header,
        t.rows.iter().map(|r| {
            let mut cells = comparison_cells(r);
            cells.push(dev(r.numeric, r.paper_numeric));
            cells.push(dev(r.ohpm, r.paper_ohpm));
            cells
        }),
    )
}

pub fn reproduce_tables(args: &ReproduceArgs) -> Result<(), CliError> {
    let wanted = parse_table_set(&args.tables)?;
    let tables: Vec<_> = bundled_tables()
        .into_iter()
        .filter(|t| wanted.contains(&t.table))
        .collect();
    if let Some(missing) = wanted.iter().find(|n| !tables.iter().any(|t| t.table == **n)) {
        return Err(CliError::MissingData(format!("no bundled data for table {missing}")));
    }
    let cases: BTreeMap<String, CaseDefinition> =
        bundled_cases().into_iter().map(|c| (c.id.clone(), c)).collect();
    let mut oracles: BTreeMap<String, CaseOracle> = BTreeMap::new();
    let mut regenerated = Vec::new();
    for table in &tables {
        let case = cases
            .get(&table.case)
            .ok_or_else(|| CliError::MissingData(format!("table {} refers to unknown case", table.table)))?;
        if !oracles.contains_key(&case.id) {
            oracles.insert(case.id.clone(), CaseOracle::compute(&case.params, args.h)?);
        }
        regenerated.push(regenerate_table(table, case, &oracles[&case.id]));
    }

    let summaries: Vec<TableSummary> = regenerated
        .iter()
        .map(|t| TableSummary {
            table: t.table,
            case: &t.case,
            quantity: file_suffix(t.quantity),
            equation: t.equation,
            max_numeric_deviation: t.max_numeric_deviation,
            max_ohpm_deviation: t.max_ohpm_deviation,
            max_abs_error: t.rows.iter().map(|r| r.abs_error).fold(0.0, f64::max),
        })
        .collect();
    for t in &regenerated {
        write(&args.out.join(format!("table_{:02}.csv", t.table)), &table_csv(t))?;
    }
    let summary_path: PathBuf = match args.format {
        Format::Csv => {
            let text = csv_table(
                &[
                    "table",
                    "case",
                    "quantity",
                    "equation",
                    "max_numeric_deviation",
                    "max_ohpm_deviation",
                    "max_abs_error",
                ],
                summaries.iter().map(|s| {
                    [
                        s.table.to_string(),
                        s.case.to_string(),
                        s.quantity.to_string(),
                        s.equation.to_string(),
                        csv_dev(s.max_numeric_deviation),
                        csv_dev(s.max_ohpm_deviation),
                        csv_dev(s.max_abs_error),
                    ]
                }),
            );
            let p = args.out.join("summary.csv");
            write(&p, &text)?;
            p
        }
        Format::Json => {
            let p = args.out.join("summary.json");
            write(&p, &to_json(&summaries))?;
            p
        }
    };
    let found = findings(&regenerated);
    write(&args.out.join("findings.md"), &findings_markdown(&found))?;
    write(&args.out.join("findings.json"), &to_json(&found))?;
    println!(
        "{}",
        serde_json::json!({ "tables": summaries.len(), "summary": summary_path, "findings": found.len() })
    );
    Ok(())
}

const SWEEP_HEADER: [&str; 11] = [
    "case",
    "alpha",
    "H",
    "eta",
    "F_numeric",
    "F_ohpm",
    "F_abs_error",
    "theta_numeric",
    "theta_ohpm",
    "theta_abs_error",
    "status",
];

type SweepRow = Vec<String>;

fn sweep_case(case: &CaseDefinition, args: &SweepArgs) -> Result<Vec<SweepRow>, CliError> {
    let oracle = CaseOracle::compute(&case.params, args.h)?;
    let solved = solve(case, false, velocity_form(args.form), args.seed)?;
    Ok(uniform(args.samples)
        .map(|eta| {
            let mut cells = vec![
                case.id.clone(),
                csv_num(case.params.alpha),
                csv_num(case.params.hartmann),
                csv_num(eta),
            ];
            for (q, poly) in [(Quantity::Velocity, &solved.f), (Quantity::Temperature, &solved.theta)] {
                let r = ComparisonRow::new(eta, reference_at(&oracle, q, eta), poly.eval(eta));
                cells.extend([csv_num(r.numeric), csv_num(r.ohpm), csv_dev(r.abs_error)]);
            }
            cells.push("ok".into());
            cells
        })
        .collect())
}

pub fn sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.samples < 2 {
        return Err(CliError::Validation("--samples must be at least 2".into()));
    }
    let mode = thermal_mode(args.mode);
    let grid: Vec<(usize, FlowParams)> = args
        .alpha
        .iter()
        .flat_map(|&alpha| {
            args.hartmann.iter().map(move |&hartmann| FlowParams {
                alpha,
                reynolds: args.re,
                hartmann,
                prandtl: args.pr,
                beta: args.beta,
            })
        })
        .enumerate()
        .collect();

    // cases run independently; collect keeps grid order
    let results: Vec<(String, Result<Vec<SweepRow>, CliError>)> = grid
        .par_iter()
        .map(|(i, params)| {
            let id = format!("sweep-{:03}", i + 1);
            let case = custom_case(id.clone(), *params, mode);
            let rows = params
                .validate()
                .map_err(CliError::from)
                .and_then(|_| sweep_case(&case, args));
            (id, rows)
        })
        .collect();

    let mut aggregated: Vec<SweepRow> = Vec::new();
    let mut failures = 0;
    for ((id, rows), (_, params)) in results.into_iter().zip(&grid) {
        let rows = rows.unwrap_or_else(|e| {
            failures += 1;
            let mut cells = vec![id.clone(), csv_num(params.alpha), csv_num(params.hartmann)];
            cells.extend(std::iter::repeat_n(String::new(), 7));
            cells.push(format!("error: {e}"));
            vec![cells]
        });
        write(
            &args.out.join("cases").join(format!("{id}.csv")),
            &csv_table(&SWEEP_HEADER, &rows),
        )?;
        aggregated.extend(rows);
    }
    let path = args.out.join("sweep.csv");
    write(&path, &csv_table(&SWEEP_HEADER, &aggregated))?;
    println!(
        "{}",
        serde_json::json!({ "cases": grid.len(), "failed": failures, "out": path })
    );
    Ok(())
}
