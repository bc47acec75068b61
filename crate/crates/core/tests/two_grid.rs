use eplp_core::eplp::{accumulate, fine_residual_norm, solve_fine, EplpConfig, EplpSolver};
use eplp_core::fem::norms::{compute_errors, velocity_h1_seminorm};
use eplp_core::fem::state::{PressureContinuity, StokesState, TwoLevel};
use eplp_core::problems::{ManufacturedProblem, ProblemId};
use eplp_core::{ExtensionMode, Family};

fn polynomial() -> ManufacturedProblem<f64> {
    ManufacturedProblem::new(ProblemId::Polynomial, 1.0).unwrap()
}

fn solver(n: usize, m: usize, family: Family, extension: ExtensionMode, k: usize) -> EplpSolver<f64> {
    let mut c = EplpConfig::new(n, m, family);
    c.extension = extension;
    c.k_override = Some(k);
    EplpSolver::new(c).unwrap()
}

fn difference(a: &StokesState<f64>, b: &StokesState<f64>) -> StokesState<f64> {
    let sub = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>();
    StokesState {
        velocity: sub(&a.velocity, &b.velocity),
        coarse_velocity: match (&a.coarse_velocity, &b.coarse_velocity) {
            (Some(x), Some(y)) => Some(sub(x, y)),
            (Some(x), None) => Some(x.clone()),
            (None, Some(y)) => Some(y.iter().map(|v| -v).collect()),
            (None, None) => None,
        },
        pressure: a.pressure.iter().zip(&b.pressure).map(|(p, q)| [p[0] - q[0], p[1] - q[1], p[2] - q[2]]).collect(),
        continuity: PressureContinuity::Broken,
    }
}

fn relative_h1(tl: &TwoLevel<f64>, a: &StokesState<f64>, reference: &StokesState<f64>) -> f64 {
    velocity_h1_seminorm(tl, &difference(a, reference)) / velocity_h1_seminorm(tl, reference)
}

#[test]
fn full_extension_reproduces_the_fine_solution() {
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(8, 4, Family::TaylorHood, ExtensionMode::Full, 1);
    let run = s.run(&pb).unwrap();
    let fine = solve_fine(s.two_level(), &f, 1.0, 1e-10).unwrap();
    let rel = relative_h1(s.two_level(), &run.state, &fine);
    assert!(rel <= 1e-9, "{rel:e}");
}

#[test]
fn full_extension_mini_cycle_satisfies_the_fine_equations() {
    // the coarse bubbles are not fine functions, so only the residual vanishes
    let pb = ManufacturedProblem::new(ProblemId::Trigonometric, 1.0).unwrap();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(4, 4, Family::Mini, ExtensionMode::Full, 1);
    let tl = s.two_level();
    let start = s.coarse_solve(&f).unwrap();
    let (m0, _) = fine_residual_norm(tl, &start, &f, 1.0);
    let state = s.local_step(&start, &f).unwrap();
    let (m1, d1) = fine_residual_norm(tl, &state, &f, 1.0);
    assert!(m1 <= 1e-9 * m0 && d1 <= 1e-9 * m0, "{m0:e} {m1:e} {d1:e}");
}

#[test]
fn fine_solution_is_a_fixed_point_with_full_extension() {
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(4, 3, Family::TaylorHood, ExtensionMode::Full, 1);
    let tl = s.two_level();
    let fine = solve_fine(tl, &f, 1.0, 1e-12).unwrap();
    let after = s.local_step(&fine, &f).unwrap();
    assert!(relative_h1(tl, &after, &fine) <= 1e-9);
}

#[test]
fn one_layer_corrections_at_the_fine_solution_are_small() {
    // phi_j v is not a fine function, so the sum is small but not zero
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(4, 3, Family::TaylorHood, ExtensionMode::OneLayer, 1);
    let tl = s.two_level();
    let fine = solve_fine(tl, &f, 1.0, 1e-12).unwrap();
    let e = compute_errors(tl, &fine, |x| pb.exact(x));
    let after = s.local_step(&fine, &f).unwrap();
    let sum = velocity_h1_seminorm(tl, &difference(&after, &fine));
    assert!(sum > 0.0 && sum < e.u_h1, "{sum:e} vs {:e}", e.u_h1);
}

#[test]
fn corrections_vanish_outside_their_extension() {
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(4, 2, Family::TaylorHood, ExtensionMode::OneLayer, 1);
    let tl = s.two_level();
    let state = s.coarse_solve(&f).unwrap();
    let nf = tl.fine_velocity().num_dofs();
    for j in [0, 6, 12] {
        let (local, corr) = s.local_correct(&state, j, &f).unwrap();
        let ext = local.space_u.zero_extension().unwrap();
        let inside: std::collections::HashSet<usize> = ext.iter().copied().collect();
        let v = corr.zero_extended_velocity(&local, nf);
        assert!(v.iter().any(|&x| x != 0.0));
        for c in 0..2 {
            for d in 0..nf {
                if !inside.contains(&d) {
                    assert_eq!(v[c * nf + d], 0.0);
                }
            }
        }
        // dofs on the boundary of the extension are held at zero
        for (ld, &g) in ext.iter().enumerate() {
            if local.space_u.is_constrained(ld) {
                assert_eq!(v[g], 0.0);
                assert_eq!(v[nf + g], 0.0);
            }
        }
    }
}

#[test]
fn accumulate_without_corrections_is_identity() {
    let s = solver(3, 2, Family::TaylorHood, ExtensionMode::OneLayer, 1);
    let pb = polynomial();
    let state = s.coarse_solve(&|x| pb.body_force(x)).unwrap();
    let mut out = state.clone();
    accumulate(&mut out, &[], s.two_level().fine_velocity().num_dofs());
    assert_eq!(out, state);
}

#[test]
fn zero_force_stays_zero() {
    let s = solver(4, 2, Family::TaylorHood, ExtensionMode::OneLayer, 2);
    let f = |_: [f64; 2]| [0.0, 0.0];
    let mut state = s.coarse_solve(&f).unwrap();
    for _ in 0..2 {
        state = s.coarse_correct(&s.local_step(&state, &f).unwrap(), &f).unwrap();
        assert_eq!(state.max_abs(), 0.0);
    }
}

#[test]
fn coarse_correction_of_a_coarse_solution_is_negligible() {
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(6, 2, Family::TaylorHood, ExtensionMode::OneLayer, 1);
    let state = s.coarse_solve(&f).unwrap();
    let corrected = s.coarse_correct(&state, &f).unwrap();
    let d = difference(&corrected, &state);
    assert!(velocity_h1_seminorm(s.two_level(), &d) <= 10.0 * 1e-10 * velocity_h1_seminorm(s.two_level(), &state));
}

#[test]
fn every_cycle_is_coarse_consistent_and_improves_the_coarse_error() {
    let pb = polynomial();
    let s = solver(8, 4, Family::TaylorHood, ExtensionMode::OneLayer, 3);
    let run = s.run(&pb).unwrap();
    assert_eq!(run.trace.len(), 4);
    assert!(run.coarse_residuals.iter().all(|&r| r <= 1e-9), "{:?}", run.coarse_residuals);
    for w in run.trace.windows(2).take(2) {
        assert!(w[1].u_h1 < w[0].u_h1, "{:?}", run.trace);
    }
    // within a factor 3 of the fine Galerkin error
    let fine = solve_fine(s.two_level(), &|x| pb.body_force(x), 1.0, 1e-10).unwrap();
    let ef = compute_errors(s.two_level(), &fine, |x| pb.exact(x));
    assert!(run.trace[0].u_h1 > ef.u_h1);
    assert!(run.trace[3].u_h1 <= 3.0 * ef.u_h1, "{} vs {}", run.trace[3].u_h1, ef.u_h1);
}

#[test]
fn results_do_not_depend_on_the_thread_count() {
    let pb = polynomial();
    let runs: Vec<_> = [1, 2, 3]
        .iter()
        .map(|&t| {
            let mut c = EplpConfig::new(6, 3, Family::TaylorHood);
            c.k_override = Some(2);
            c.threads = Some(t);
            EplpSolver::new(c).unwrap().run(&pb).unwrap()
        })
        .collect();
    for r in &runs[1..] {
        assert_eq!(r.state, runs[0].state);
        assert_eq!(r.trace, runs[0].trace);
    }
}

#[test]
fn decay_profile_decreases_outward() {
    let pb = polynomial();
    let f = |x: [f64; 2]| pb.body_force(x);
    let s = solver(8, 2, Family::TaylorHood, ExtensionMode::Full, 1);
    for j in [0, 10, 40] {
        let rings = s.decay_profile(j, &f, 9).unwrap();
        assert!(rings.len() >= 4);
        for w in rings.windows(2) {
            assert!(w[1] < w[0], "patch {j}: {rings:?}");
        }
    }
    let zero = s.decay_profile(40, &|_| [0.0, 0.0], 4).unwrap();
    assert!(zero.iter().all(|&e| e == 0.0));
    assert!(s.decay_profile(81, &f, 3).is_err());
}

#[test]
fn translated_patches_share_factorizations() {
    let s = solver(6, 2, Family::TaylorHood, ExtensionMode::OneLayer, 1);
    assert_eq!(s.patches().len(), 49);
    assert!(s.distinct_local_problems() < 49);
}
