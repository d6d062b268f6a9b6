//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line and
//! then asserts, so the suite summary and the printed lines agree.

use std::collections::BTreeMap;
use std::io::Write;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ohpm_core::cases::{bundled_case, bundled_cases, bundled_tables, table_for, CaseDefinition, Quantity};
use ohpm_core::engine::{Coupling, NonlinearModel};
use ohpm_core::fit::{fit_case, FitResult, Objective, ObjectiveSpec, DEFAULT_SEED};
use ohpm_core::model::{build_thermal_aux_set, build_velocity_aux_set, thermal_problem, velocity_problem, ThermalModel, VelocityModel, THERMAL_PARAMS, VELOCITY_PARAMS};
use ohpm_core::oracle::{shoot_thermal, shoot_velocity, velocity_ivp};
use ohpm_core::reproduce::CaseOracle;
use ohpm_core::{run_stages, AuxFunction, FlowParams, LaurentPoly, ParamMap, ThermalMode, VelocityForm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use tempfile::TempDir;

fn report(criterion: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "acceptance criterion {criterion}: {verdict} — {detail}");
    let _ = out.flush();
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn grid() -> impl Iterator<Item = f64> {
    (0..=10).map(|i| i as f64 / 10.0)
}

#[test]
fn criterion_1_velocity_oracle_matches_tables() {
    let mut worst = (0.0, String::new());
    let mut slowest = Duration::ZERO;
    for case in bundled_cases() {
        let start = Instant::now();
        let v = shoot_velocity(&case.params, 1e-4).unwrap();
        slowest = slowest.max(start.elapsed());
        let table = table_for(&case.id, Quantity::Velocity).unwrap();
        for row in table.interior_rows() {
            let d = (v.at_node(row.eta).unwrap() - row.numeric).abs();
            if d > worst.0 {
                worst = (d, format!("table {} η = {}", table.table, row.eta));
            }
        }
    }
    let pass = worst.0 <= 1e-7 && slowest < Duration::from_secs(1);
    report(
        1,
        pass,
        &format!(
            "max |F_oracle − F_table| = {:.3e} at {} (tol 1e-7); slowest case {:.0} ms",
            worst.0,
            worst.1,
            slowest.as_secs_f64() * 1e3
        ),
    );
}

#[test]
fn criterion_2_thermal_oracle_matches_tables() {
    let mut lines = Vec::new();
    let mut pass = true;
    let mut slowest = Duration::ZERO;
    for case in bundled_cases() {
        let table = table_for(&case.id, Quantity::Temperature).unwrap();
        let start = Instant::now();
        let v = shoot_velocity(&case.params, 1e-4).unwrap();
        let t = shoot_thermal(&case.params, &v, 1e-4).unwrap();
        slowest = slowest.max(start.elapsed());
        let scale = table.rows.iter().map(|r| r.numeric.abs()).fold(0.0, f64::max);
        let tol = if scale < 1e-10 { 1e-15 } else { 1e-12 };
        let mut max = 0.0f64;
        let mut ratio = 0.0;
        for row in table.interior_rows() {
            let ours = t.at_node(row.eta).unwrap();
            max = max.max((ours - row.numeric).abs());
            if row.eta == 0.5 {
                ratio = row.numeric / ours;
            }
        }
        pass &= max <= tol;
        lines.push(format!(
            "table {} max dev {:.2e} (tol {:.0e}, table/oracle at η=0.5 = {:.1})",
            table.table, max, tol, ratio
        ));
    }
    pass &= slowest < Duration::from_secs(1);
    report(2, pass, &lines.join("; "));
}

#[test]
fn criterion_3_plug_in_and_transcription() {
    let mut plug_in = 0.0f64;
    for id in ["5.1", "5.2"] {
        let case = bundled_case(id).unwrap();
        let objective = Objective::new(ObjectiveSpec::velocity(VelocityForm::Printed), case.params).unwrap();
        let x = objective.from_map(case.paper_params_velocity.as_ref().unwrap()).unwrap();
        let f = objective.stages(&x).unwrap().assembled;
        for row in table_for(id, Quantity::Velocity).unwrap().interior_rows() {
            plug_in = plug_in.max((f.eval(row.eta) - row.ohpm).abs());
        }
    }
    let cases: BTreeMap<String, CaseDefinition> =
        bundled_cases().into_iter().map(|c| (c.id.clone(), c)).collect();
    let mut failing = Vec::new();
    let mut worst_velocity = 0.0f64;
    for table in bundled_tables() {
        let case = &cases[&table.case];
        let poly = match table.quantity {
            Quantity::Velocity => case.paper_solution_f.as_ref().unwrap(),
            Quantity::Temperature => case.paper_solution_theta.as_ref().unwrap(),
        };
        let dev = table
            .interior_rows()
            .map(|r| (poly.eval(r.eta) - r.ohpm).abs())
            .fold(0.0, f64::max);
        if table.quantity == Quantity::Velocity {
            worst_velocity = worst_velocity.max(dev);
        }
        if dev > 5e-10 {
            failing.push(format!("table {} ({:.2e})", table.table, dev));
        }
    }
    let pass = plug_in <= 1e-5 && failing.is_empty();
    report(
        3,
        pass,
        &format!(
            "plug-in max dev {:.3e} (tol 1e-5); velocity transcription max dev {:.3e}; tables over 5e-10: [{}]",
            plug_in,
            worst_velocity,
            failing.join(", ")
        ),
    );
}

struct Seed(LaurentPoly);

impl NonlinearModel for Seed {
    fn seed_forcing(&self, _: &LaurentPoly) -> LaurentPoly {
        self.0.clone()
    }

    fn couplings(&self, _: &LaurentPoly) -> Vec<Coupling> {
        Vec::new()
    }
}

fn first_stage(problem: &ohpm_core::LinearProblem, forcing: LaurentPoly, name: &str, factor: f64, value: f64) -> LaurentPoly {
    let h0 = AuxFunction::new("H0", LaurentPoly::zero(), vec![(name.into(), LaurentPoly::constant(factor))]).unwrap();
    let params: ParamMap = [(name.to_string(), value)].into();
    run_stages(problem, &Seed(forcing), &[h0], &params).unwrap().u1
}

fn relative_gap(a: &LaurentPoly, b: &LaurentPoly) -> f64 {
    (a - b).max_abs_coefficient() / b.max_abs_coefficient()
}

#[test]
fn criterion_4_closed_form_first_stages() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut draw = || rng.gen_range(-5.0..5.0);
    let mut velocity = 0.0f64;
    let mut thermal = 0.0f64;
    let start = Instant::now();
    for _ in 0..20 {
        let (a, b, c1) = (draw(), draw(), draw());
        let forcing = LaurentPoly::from_coefficients(&[0.0, -2.0 * (a + b), 2.0 * a]);
        let u1 = first_stage(&velocity_problem(), forcing, "C1", -60.0, c1);
        // 2AC1η⁵ − 5(A+B)C1η⁴ + (3A+5B)C1η²
        let closed = LaurentPoly::from_coefficients(&[0.0, 0.0, (3.0 * a + 5.0 * b) * c1, 0.0, -5.0 * (a + b) * c1, 2.0 * a * c1]);
        velocity = velocity.max(relative_gap(&u1, &closed));

        let (c, d, e, c8) = (draw(), draw(), draw(), draw());
        let forcing = LaurentPoly::from_coefficients(&[c, 0.0, -2.0 * d, 0.0, e]);
        let u1 = first_stage(&thermal_problem(ThermalMode::Paper), forcing, "C8", -30.0, c8);
        // C8[15C(η² − 1) − 5D(η⁴ − 1) + E(η⁶ − 1)]
        let closed = LaurentPoly::from_coefficients(&[c8 * (5.0 * d - 15.0 * c - e), 0.0, 15.0 * c * c8, 0.0, -5.0 * d * c8, 0.0, e * c8]);
        thermal = thermal.max(relative_gap(&u1, &closed));
    }
    let pass = velocity <= 1e-10 && thermal <= 1e-10;
    report(
        4,
        pass,
        &format!(
            "max relative coefficient gap: velocity {velocity:.2e}, thermal {thermal:.2e} over 20 draws each (tol 1e-10); {:.1} ms",
            start.elapsed().as_secs_f64() * 1e3
        ),
    );
}

struct CaseFit {
    id: String,
    velocity_error: f64,
    thermal_relative_error: f64,
    seconds: f64,
}

/// The default fit of every case, shared by the two fit-quality criteria.
fn case_fits() -> &'static [CaseFit] {
    static FITS: OnceLock<Vec<CaseFit>> = OnceLock::new();
    FITS.get_or_init(|| {
        bundled_cases()
            .par_iter()
            .map(|case| {
                let start = Instant::now();
                let (vfit, tfit, f): (FitResult, FitResult, LaurentPoly) =
                    fit_case(case, VelocityForm::Printed, DEFAULT_SEED).unwrap();
                let seconds = start.elapsed().as_secs_f64();
                let tobj = Objective::new(
                    ObjectiveSpec::thermal(&case.params, case.mode, f.clone()),
                    case.params,
                )
                .unwrap();
                let theta = tobj.stages(&tobj.from_map(&tfit.parameters).unwrap()).unwrap().assembled;
                let oracle = CaseOracle::compute(&case.params, 1e-4).unwrap();
                let at = |q: Quantity, eta: f64| oracle.get(q).at_node(eta).unwrap();
                let velocity_error = grid().map(|x| (f.eval(x) - at(Quantity::Velocity, x)).abs()).fold(0.0, f64::max);
                let scale = grid().map(|x| at(Quantity::Temperature, x).abs()).fold(0.0, f64::max);
                let thermal_error = grid()
                    .map(|x| (theta.eval(x) - at(Quantity::Temperature, x)).abs())
                    .fold(0.0, f64::max);
                let _ = vfit;
                CaseFit {
                    id: case.id.clone(),
                    velocity_error,
                    thermal_relative_error: thermal_error / scale,
                    seconds,
                }
            })
            .collect()
    })
}

#[test]
fn criterion_5_velocity_fit_quality() {
    let fits = case_fits();
    let pass = fits.iter().all(|f| f.velocity_error <= 1e-5 && f.seconds < 30.0);
    let detail: Vec<String> = fits
        .iter()
        .map(|f| format!("{} {:.2e} ({:.1} s)", f.id, f.velocity_error, f.seconds))
        .collect();
    report(5, pass, &format!("max |F̄ − F_oracle| (tol 1e-5, < 30 s): {}", detail.join(", ")));
}

#[test]
fn criterion_6_thermal_fit_quality() {
    let fits = case_fits();
    let pass = fits.iter().all(|f| f.thermal_relative_error <= 1e-2);
    let detail: Vec<String> = fits
        .iter()
        .map(|f| format!("{} {:.2e}", f.id, f.thermal_relative_error))
        .collect();
    report(6, pass, &format!("max |θ̄ − θ_oracle| / max|θ_oracle| (tol 1e-2): {}", detail.join(", ")));
}

#[test]
fn criterion_7_rk4_order() {
    let case = bundled_case("5.1").unwrap();
    let s = shoot_velocity(&case.params, 1e-4).unwrap().shooting_parameter;
    let end = |h: f64| velocity_ivp(&case.params, s, h).unwrap().values.last().unwrap()[0];
    let f: Vec<f64> = [1e-3, 5e-4, 2.5e-4, 1.25e-4].iter().map(|&h| end(h)).collect();
    let ratios: Vec<f64> = f.windows(3).map(|w| (w[0] - w[1]) / (w[1] - w[2])).collect();
    let pass = ratios.iter().all(|r| (12.0..=20.0).contains(r));
    report(
        7,
        pass,
        &format!("Richardson ratios of F(1) for h = 1e-3 … 1.25e-4: {:.3?} (range [12, 20])", ratios),
    );
}

fn random_poly(rng: &mut ChaCha8Rng) -> LaurentPoly {
    let n = rng.gen_range(0..10);
    LaurentPoly::from_terms((0..n).map(|_| (rng.gen_range(0..=12), rng.gen_range(-10.0..10.0)))).unwrap()
}

fn close(a: &LaurentPoly, b: &LaurentPoly, rel: f64) -> bool {
    let scale = a.max_abs_coefficient().max(b.max_abs_coefficient()).max(1.0);
    (a - b).max_abs_coefficient() <= rel * scale
}

#[test]
fn criterion_8_property_suites() {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut failures: Vec<&str> = Vec::new();
    let mut check = |name: &'static str, ok: bool| {
        if !ok && !failures.contains(&name) {
            failures.push(name);
        }
    };

    for _ in 0..200 {
        let (a, b, c) = (random_poly(&mut rng), random_poly(&mut rng), random_poly(&mut rng));
        check("ring laws", &a + &b == &b + &a);
        check("ring laws", close(&(&a * &b), &(&b * &a), 1e-14));
        check("ring laws", close(&(&(&a * &b) * &c), &(&a * &(&b * &c)), 1e-12));
        check("ring laws", close(&(&a * &(&b + &c)), &(&(&a * &b) + &(&a * &c)), 1e-12));
        let back = a.antiderivative().unwrap().differentiate();
        check("calculus round trip", a.terms().all(|(e, x)| (back.coefficient(e) - x).abs() <= 2.0 * f64::EPSILON * x.abs()));
    }

    let mut monotone = true;
    for _ in 0..50 {
        let flow = FlowParams {
            alpha: rng.gen_range(0.01..0.5),
            reynolds: rng.gen_range(1.0..100.0),
            hartmann: rng.gen_range(0.0..1000.0),
            prandtl: rng.gen_range(0.5..10.0),
            beta: rng.gen_range(1e-14..1e-10),
        };
        let cv: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let ct: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..2.0)).collect();
        let vmodel = VelocityModel { params: flow, form: VelocityForm::Printed };
        let tmodel = ThermalModel::new(flow, ThermalMode::Paper);
        let runs = [
            (velocity_problem(), &vmodel as &dyn NonlinearModel, build_velocity_aux_set(&flow, VelocityForm::Printed, false),
             VELOCITY_PARAMS.iter().zip(&cv).map(|(n, v)| (n.to_string(), *v)).collect::<ParamMap>()),
            (thermal_problem(ThermalMode::Paper), &tmodel as &dyn NonlinearModel, build_thermal_aux_set(),
             THERMAL_PARAMS.iter().zip(&ct).map(|(n, v)| (n.to_string(), *v)).collect::<ParamMap>()),
        ];
        for (problem, model, aux, params) in runs {
            let s = run_stages(&problem, model, &aux, &params).unwrap();
            check("boundary conditions", problem.boundary_defect(&s.u0, false) <= 1e-12
                && problem.boundary_defect(&s.u1, true) <= 1e-12
                && problem.boundary_defect(&s.u2, true) <= 1e-12);
            for (u, rhs) in [(&s.u1, &s.stage_one_rhs), (&s.u2, &s.stage_two_rhs)] {
                let r = &problem.apply_operator(u) + rhs;
                let scale = rhs.max_abs_coefficient().max(1.0);
                check("stage reconstruction", (0..50).all(|i| r.eval((i as f64 + 0.5) / 50.0).abs() <= 1e-9 * scale));
            }
        }
    }

    let first = fit_case(&bundled_case("5.7").unwrap(), VelocityForm::Printed, DEFAULT_SEED).unwrap();
    for fit in [&first.0, &first.1] {
        monotone &= fit.history.windows(2).all(|w| w[1] <= w[0]);
    }
    check("monotone acceptance", monotone);
    let second = fit_case(&bundled_case("5.7").unwrap(), VelocityForm::Printed, DEFAULT_SEED).unwrap();
    check("determinism", first.0.parameters == second.0.parameters && first.1.parameters == second.1.parameters);

    let runs: Vec<TempDir> = (0..2).map(|_| TempDir::new().unwrap()).collect();
    for dir in &runs {
        let status = Command::new(env!("CARGO_BIN_EXE_jhcli"))
            .args(["run-case", "--case", "5.6", "--out", dir.path().to_str().unwrap()])
            .output()
            .unwrap()
            .status;
        check("determinism", status.success());
    }
    for name in ["comparison_F.csv", "comparison_theta.csv", "plot_F.csv", "plot_theta.csv"] {
        let read = |d: &TempDir| std::fs::read(d.path().join("5.6").join(name)).unwrap_or_default();
        check("determinism", !read(&runs[0]).is_empty() && read(&runs[0]) == read(&runs[1]));
    }

    let pass = failures.is_empty();
    report(
        8,
        pass,
        &if pass {
            "ring laws, calculus round trip, boundary conditions (1e-12), stage reconstruction (1e-9), monotone acceptance, byte-identical reruns".to_string()
        } else {
            format!("failing: {}", failures.join(", "))
        },
    );
}

#[test]
fn criterion_9_findings_report() {
    let dir = TempDir::new().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_jhcli"))
        .args(["reproduce-tables", "--out", dir.path().to_str().unwrap()])
        .output()
        .unwrap();
    let markdown = std::fs::read_to_string(dir.path().join("findings.md")).unwrap_or_default();
    let json: serde_json::Value = std::fs::read_to_string(dir.path().join("findings.json"))
        .ok()
        .and_then(|s| serde_json::from_str(&s).ok())
        .unwrap_or_default();
    let required = [
        ("thermal-seed-sign", "Thermal seed"),
        ("assembled-eta2-missing-c1", "drops the factor C1"),
        ("thermal-constant-d", "Thermal constant D"),
        ("dissipation-coefficient", "(1 + 4α²)"),
    ];
    let mut missing = Vec::new();
    for (key, title) in required {
        let entry = json
            .as_array()
            .and_then(|a| a.iter().find(|f| f["key"] == key));
        let has_evidence = entry
            .and_then(|f| f["evidence"].as_array())
            .is_some_and(|e| !e.is_empty() && e.iter().all(|v| v["value"].is_f64()));
        if !(has_evidence && markdown.contains(title)) {
            missing.push(key);
        }
    }
    let pass = out.status.success() && missing.is_empty();
    report(
        9,
        pass,
        &format!(
            "findings file lists {} items; required with evidence: {}",
            json.as_array().map_or(0, Vec::len),
            if missing.is_empty() { "all four present".to_string() } else { format!("missing {missing:?}") }
        ),
    );
}

