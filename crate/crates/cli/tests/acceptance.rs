//! Acceptance run: every criterion at its stated tolerance, one PASS/FAIL
//! line each.

use std::io::Write;
use std::time::Instant;

use eplp_cli::{decay_profile, run_study, speedup_study, ReportRow, RunOptions, StudyConfig, StudyReport};
use eplp_core::eplp::{solve_fine, EplpConfig, EplpSolver};
use eplp_core::fem::norms::velocity_h1_seminorm;
use eplp_core::fem::state::{PressureContinuity, StokesState};
use eplp_core::problems::{ManufacturedProblem, ProblemId};
use eplp_core::{ExtensionMode, Family};

const TOL: f64 = 1e-10;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn study(text: &str) -> StudyReport {
    let cfg = StudyConfig::parse(text).expect("acceptance config parses");
    let report = run_study(&cfg, &RunOptions::default()).expect("study runs");
    for r in report.rows.iter().filter(|r| r.failed()) {
        eprintln!("row failed: {:?}", r.failure);
    }
    report
}

fn rows<'a>(r: &'a StudyReport, method: &'a str) -> Vec<&'a ReportRow> {
    r.rows_for(method).collect()
}

fn within(v: Option<f64>, lo: f64, hi: f64) -> bool {
    v.is_some_and(|x| x >= lo && x <= hi)
}

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.5}")).unwrap_or_else(|| "n/a".into())
}

#[test]
fn acceptance() {
    let mut results: Vec<(usize, &str, Outcome)> = Vec::new();
    let mut coarse_residuals: Vec<f64> = Vec::new();
    let mut collect = |r: &StudyReport| {
        coarse_residuals.extend(r.rows.iter().filter_map(|x| x.max_coarse_residual));
    };

    // 1, 2: standard Galerkin on h = 1/64 and 1/125
    let started = Instant::now();
    let sfem = study("problem = problem1\nmethod = sfem\nrows = 16:4, 25:5\n");
    let sfem_time = started.elapsed().as_secs_f64();
    let s = rows(&sfem, "sfem");
    results.push((
        1,
        "SFEM order 64->125",
        check(
            within(s[1].ord_u_h1, 1.949, 2.049) && within(s[1].ord_p_l2, 1.95, 2.05) && sfem_time < 120.0,
            format!("H1 order {} p order {} in {sfem_time:.1}s", fmt(s[1].ord_u_h1), fmt(s[1].ord_p_l2)),
        ),
    ));
    let e64 = s[0].err_u_h1;
    results.push((
        2,
        "SFEM magnitude h=1/64",
        check(
            e64.is_some_and(|e| (e - 2.05741e-4).abs() <= 0.2 * 2.05741e-4),
            format!("H1 error {:e} vs 2.05741e-4", e64.unwrap_or(f64::NAN)),
        ),
    ));

    // 3, 4: two-grid on h close to H^(3/2), paired with SFEM on the same fine meshes
    let h1 = study("problem = problem1\nmethod = both\nrows = 16:4:2, 25:5:3, 36:6:3\n");
    collect(&h1);
    let e = rows(&h1, "eplp");
    let orders_ok = e[1..].iter().all(|r| within(r.ord_u_h1, 1.7, 2.6) && within(r.ord_p_l2, 1.7, 2.6));
    results.push((
        3,
        "EPLP orders h~H^(3/2)",
        check(
            e.len() == 3 && orders_ok,
            e[1..].iter().map(|r| format!("H1 {} p {}", fmt(r.ord_u_h1), fmt(r.ord_p_l2))).collect::<Vec<_>>().join("; "),
        ),
    ));
    let pairs: Vec<(f64, Option<f64>)> = rows(&h1, "sfem")
        .iter()
        .zip(&e)
        .map(|(s, e)| (e.fine_h, e.err_u_h1.zip(s.err_u_h1).map(|(a, b)| a / b)))
        .collect();
    results.push((
        4,
        "EPLP <= 2x SFEM",
        check(
            pairs.iter().all(|(_, r)| r.is_some_and(|r| r <= 2.0)),
            pairs.iter().map(|(h, r)| format!("h=1/{:.0}: {}", 1.0 / h, fmt(*r))).collect::<Vec<_>>().join(", "),
        ),
    ));

    // 5: L2 superconvergence, h close to H^(4/3)
    let l2 = study("problem = problem1\nrows = 32:3:3, 64:4:4\n");
    collect(&l2);
    let l = rows(&l2, "eplp");
    results.push((
        5,
        "L2 velocity order",
        check(l[1].ord_u_l2.is_some_and(|o| o >= 2.7), format!("order {}", fmt(l[1].ord_u_l2))),
    ));

    // 6: Mini element, Problem 2, h close to H^2
    let mini = study("problem = problem2\nfamily = mini\nrows = 8:8:2, 16:16:2\n");
    collect(&mini);
    let m = rows(&mini, "eplp");
    results.push((
        6,
        "Mini H1 order",
        check(within(m[1].ord_u_h1, 0.85, 1.2), format!("order {}", fmt(m[1].ord_u_h1))),
    ));

    // 7: full extension, one cycle against the fine Galerkin solution
    let pb = ManufacturedProblem::new(ProblemId::Polynomial, 1.0).unwrap();
    let superposition = (|| -> eplp_core::Result<f64> {
        let mut c = EplpConfig::new(8, 4, Family::TaylorHood);
        c.extension = ExtensionMode::Full;
        c.k_override = Some(1);
        let solver = EplpSolver::new(c)?;
        let run = solver.run(&pb)?;
        let tl = solver.two_level();
        let fine = solve_fine(tl, &|x| pb.body_force(x), 1.0, TOL)?;
        let diff = StokesState {
            velocity: run.state.velocity.iter().zip(&fine.velocity).map(|(a, b)| a - b).collect(),
            coarse_velocity: None,
            pressure: vec![[0.0; 3]; fine.pressure.len()],
            continuity: PressureContinuity::Broken,
        };
        Ok(velocity_h1_seminorm(tl, &diff) / velocity_h1_seminorm(tl, &fine))
    })();
    results.push((
        7,
        "superposition (1/8, 1/32)",
        match superposition {
            Ok(rel) => check(rel <= 1e-9, format!("relative H1 discrepancy {rel:e}")),
            Err(err) => check(false, err.to_string()),
        },
    ));

    // 9: thread-count determinism on the H = 1/16 row
    let max = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let cfg = StudyConfig::parse("problem = problem1\nrows = 16:4:2\n").unwrap();
    let det = speedup_study(&cfg, &[1, 2, max], &RunOptions::default());
    results.push((
        9,
        "thread determinism",
        match &det {
            Ok(r) => {
                let s = r.scaling.as_ref().unwrap();
                check(s.errors_identical, format!("threads 1,2,{max}: identical = {}", s.errors_identical))
            }
            Err(err) => check(false, err.to_string()),
        },
    ));
    if let Ok(r) = &det {
        collect(r);
    }

    // 8: coarse-Galerkin identity after every cycle of every run above
    let worst = coarse_residuals.iter().copied().fold(0.0, f64::max);
    results.push((
        8,
        "coarse-Galerkin identity",
        check(
            !coarse_residuals.is_empty() && worst <= 10.0 * TOL,
            format!("max relative coarse residual {worst:e} over {} runs", coarse_residuals.len()),
        ),
    ));

    // 10: decay of a full-extension correction around the centre patch of H = 1/8
    let cfg = StudyConfig::parse("problem = problem1\nrows = 8:4:1\n").unwrap();
    results.push((
        10,
        "decay diagnostic",
        match decay_profile(&cfg, 40) {
            Ok(r) => check(
                r.len() >= 3 && r.windows(2).all(|w| w[1] < w[0]),
                format!("{} rings, {:e} -> {:e}", r.len(), r[0], r[r.len() - 1]),
            ),
            Err(err) => check(false, err.to_string()),
        },
    ));

    results.sort_by_key(|r| r.0);
    // written past the test harness capture so the lines always show
    let mut out = std::io::stdout().lock();
    for (n, name, o) in &results {
        let _ = writeln!(out, "criterion {n:>2} {:<28} {} ({})", name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    drop(out);
    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
