use eplp_core::eplp::{single_level, solve_fine};
use eplp_core::fem::assembly::{assemble_load, assemble_stokes};
use eplp_core::fem::residual::coarse_residual;
use eplp_core::fem::state::TwoLevel;
use eplp_core::problems::{ManufacturedProblem, ProblemId};
use eplp_core::saddle::{solve_saddle, SaddleFactorization, SaddleSystem};
use eplp_core::{Error, Family};

fn system(tl: &TwoLevel<f64>, f: impl Fn([f64; 2]) -> [f64; 2]) -> SaddleSystem<f64> {
    let (su, sp) = (tl.fine_velocity(), tl.fine_pressure());
    let blocks = assemble_stokes(su, sp, 1.0).unwrap();
    let mut constrained = su.constrained().to_vec();
    constrained.extend_from_within(..);
    SaddleSystem {
        a: blocks.a,
        bdiv: blocks.bdiv,
        rhs_u: assemble_load(f, su),
        rhs_p: vec![0.0; sp.num_dofs()],
        constrained,
        mean_weights: sp.basis_integrals(),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[test]
fn zero_rhs_gives_zero_solution() {
    for family in [Family::TaylorHood, Family::Mini] {
        let tl = single_level::<f64>(4, family).unwrap();
        let sys = system(&tl, |_| [0.0, 0.0]);
        let (u, p) = solve_saddle(&sys, 1e-10).unwrap();
        assert!(u.iter().chain(&p).all(|&v| v == 0.0));
    }
}

#[test]
fn solution_satisfies_the_equations() {
    let pb = ManufacturedProblem::new(ProblemId::Polynomial, 1.0).unwrap();
    let tl = single_level::<f64>(6, Family::TaylorHood).unwrap();
    let sys = system(&tl, |x| pb.body_force(x));
    let (u, p) = solve_saddle(&sys, 1e-12).unwrap();
    let au = sys.a.mul_vec(&u);
    let btp = sys.bdiv.mul_vec_transpose(&p);
    let scale = sys.rhs_u.iter().map(|v| v * v).sum::<f64>().sqrt();
    for i in 0..u.len() {
        if sys.constrained[i] {
            assert_eq!(u[i], 0.0);
        } else {
            assert!((au[i] + btp[i] - sys.rhs_u[i]).abs() < 1e-10 * scale, "row {i}");
        }
    }
    // discrete divergence vanishes against every pressure test
    let bu = sys.bdiv.mul_vec(&u);
    let unorm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(bu.iter().all(|v| v.abs() < 1e-10 * unorm));
    assert!(dot(&p, &sys.mean_weights).abs() < 1e-12);
}

#[test]
fn fine_solution_is_orthogonal_to_coarse_tests() {
    // nested spaces: the fine Galerkin solution satisfies the coarse equations
    let pb = ManufacturedProblem::new(ProblemId::Polynomial, 1.0).unwrap();
    let f = |x: [f64; 2]| pb.body_force(x);
    let coarse = std::sync::Arc::new(eplp_core::mesh::build_structured_mesh::<f64>(4).unwrap());
    let fine = std::sync::Arc::new(eplp_core::mesh::refine_uniform(&coarse, 3).unwrap());
    let tl = TwoLevel::new(coarse, fine, Family::TaylorHood).unwrap();
    let s = solve_fine(&tl, &f, 1.0, 1e-12).unwrap();
    let r = coarse_residual(&tl, &s, &f, 1.0);
    let load = assemble_load(f, tl.coarse_velocity());
    let scale = dot(&load, &load).sqrt();
    // 20 pseudo-random coarse test combinations
    let mut seed = 12345u64;
    for _ in 0..20 {
        let mut next = || {
            seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((seed >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        let v: Vec<f64> = (0..r.momentum.len()).map(|_| next()).collect();
        let q: Vec<f64> = (0..r.mass.len()).map(|_| next()).collect();
        let vn = (dot(&v, &v) + dot(&q, &q)).sqrt();
        let value = dot(&v, &r.momentum) + dot(&q, &r.mass);
        assert!(value.abs() < 1e-9 * scale * vn, "{value}");
    }
}

#[test]
fn repeated_solves_are_bit_identical() {
    let pb = ManufacturedProblem::new(ProblemId::Trigonometric, 1.0).unwrap();
    let tl = single_level::<f64>(5, Family::Mini).unwrap();
    let sys = system(&tl, |x| pb.body_force(x));
    let fact = SaddleFactorization::new(&sys.a, &sys.bdiv, &sys.constrained, &sys.mean_weights).unwrap();
    let first = fact.solve(&sys.rhs_u, &sys.rhs_p, 1e-10).unwrap();
    let second = fact.solve(&sys.rhs_u, &sys.rhs_p, 1e-10).unwrap();
    assert_eq!(first, second);
    assert_eq!(first, solve_saddle(&sys, 1e-10).unwrap());
}

#[test]
fn direct_and_schur_paths_agree() {
    let pb = ManufacturedProblem::new(ProblemId::Polynomial, 1.0).unwrap();
    for family in [Family::TaylorHood, Family::Mini] {
        let tl = single_level::<f64>(8, family).unwrap();
        let mut sys = system(&tl, |x| pb.body_force(x));
        sys.rhs_p = (0..sys.rhs_p.len()).map(|i| 1e-3 * ((i % 7) as f64 - 3.0)).collect();
        let direct = SaddleFactorization::new(&sys.a, &sys.bdiv, &sys.constrained, &sys.mean_weights).unwrap();
        let schur =
            SaddleFactorization::with_direct_limit(&sys.a, &sys.bdiv, &sys.constrained, &sys.mean_weights, 0).unwrap();
        assert!(direct.is_direct());
        assert!(!schur.is_direct());
        let (u1, p1) = direct.solve(&sys.rhs_u, &sys.rhs_p, 1e-12).unwrap();
        let (u2, p2) = schur.solve(&sys.rhs_u, &sys.rhs_p, 1e-12).unwrap();
        let rel = |a: &[f64], b: &[f64]| {
            let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
            (d / dot(a, a)).sqrt()
        };
        assert!(rel(&u1, &u2) < 1e-9, "{family}: {}", rel(&u1, &u2));
        assert!(rel(&p1, &p2) < 1e-9, "{family}: {}", rel(&p1, &p2));
    }
}

#[test]
fn bad_inputs_are_rejected() {
    let tl = single_level::<f64>(3, Family::TaylorHood).unwrap();
    let sys = system(&tl, |_| [1.0, 0.0]);
    assert!(matches!(solve_saddle(&sys, 1e-3), Err(Error::InvalidArgument(_))));
    let mut bad = sys.clone();
    bad.mean_weights.pop();
    assert!(matches!(solve_saddle(&bad, 1e-10), Err(Error::InvalidArgument(_))));
}

#[test]
fn p1_p1_pair_without_bubbles_is_flagged() {
    // equal-order P1/P1 on one cell: more constraints than free velocities
    let tl = single_level::<f64>(1, Family::TaylorHood).unwrap();
    let su = eplp_core::fem::space::FeSpace::new(tl.fine_mesh().clone(), eplp_core::ElementKind::P1, true);
    let sp = tl.fine_pressure();
    let blocks = assemble_stokes(&su, sp, 1.0).unwrap();
    let mut constrained = su.constrained().to_vec();
    constrained.extend_from_within(..);
    let r = SaddleFactorization::new(&blocks.a, &blocks.bdiv, &constrained, &sp.basis_integrals());
    assert!(matches!(r, Err(Error::UnstablePair { .. }) | Err(Error::Breakdown(_))), "{r:?}");
}
