mod common;

use common::{brute_force_objective, random_problem};
use newsvendor::lp::{solve, solve_weighted_l1, LinearProgram, Sense, WeightedL1Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn matches_vertex_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let p = rng.gen_range(1..=3);
        let n = rng.gen_range(p..=8);
        let problem = random_problem(&mut rng, n, p, case % 3 == 0);
        let sol = solve_weighted_l1(&problem).unwrap();
        let oracle = brute_force_objective(&problem).unwrap();
        assert!((sol.objective - oracle).abs() <= 1e-7, "case {case}: {} vs {oracle}", sol.objective);
    }
}

#[test]
fn no_feasible_perturbation_improves_the_optimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let problem = random_problem(&mut rng, 20, 3, false);
        let sol = solve_weighted_l1(&problem).unwrap();
        for _ in 0..200 {
            let step = rng.gen_range(1e-6..1e-2);
            let q: Vec<f64> = sol.coefficients.iter().map(|c| c + step * rng.gen_range(-1.0..1.0)).collect();
            if problem.bound_violation(&q) > 0.0 {
                continue;
            }
            assert!(problem.objective_at(&q) >= sol.objective - 1e-10);
        }
    }
}

#[test]
fn column_scaling_rescales_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let problem = random_problem(&mut rng, 40, 3, false);
    let base = solve_weighted_l1(&problem).unwrap();
    let mut scaled = problem.clone();
    for row in &mut scaled.design {
        row[1] *= 8.0;
    }
    let sol = solve_weighted_l1(&scaled).unwrap();
    assert!((sol.objective - base.objective).abs() < 1e-9);
    for t in 0..problem.rows() {
        assert!((problem.prediction(t, &base.coefficients) - scaled.prediction(t, &sol.coefficients)).abs() < 1e-6);
    }
}

#[test]
fn textbook_primal_agrees_and_auxiliaries_are_the_deviations() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..10 {
        let problem = random_problem(&mut rng, 15, 2, false);
        let n = problem.rows();
        let p = problem.features();
        let lp = problem.to_primal_lp();
        let primal = solve(&lp).unwrap();
        assert!(primal.is_optimal());
        let dual = solve_weighted_l1(&problem).unwrap();
        assert!((primal.objective / n as f64 - dual.objective).abs() < 1e-8);

        let q = &primal.x[..p];
        for t in 0..n {
            let r = problem.prediction(t, q) - problem.targets[t];
            let (u, o) = (primal.x[p + t], primal.x[p + n + t]);
            // A positive cost forces the auxiliary down onto the deviation.
            if problem.psi_minus[t] > 1e-9 {
                assert!((u - r.max(0.0)).abs() < 1e-7);
            }
            if problem.psi_plus[t] > 1e-9 {
                assert!((o - (-r).max(0.0)).abs() < 1e-7);
            }
        }
    }
}

#[test]
fn an_extra_feature_never_hurts_the_training_fit() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..20 {
        let wide = random_problem(&mut rng, 30, 3, false);
        let mut narrow = wide.clone();
        for row in &mut narrow.design {
            row.pop();
        }
        let a = solve_weighted_l1(&narrow).unwrap();
        let b = solve_weighted_l1(&wide).unwrap();
        assert!(b.objective <= a.objective + 1e-10);
    }
}

#[test]
fn generic_solver_handles_the_dump_round_trip() {
    let problem = WeightedL1Problem::unit_weights(vec![vec![1.0], vec![1.0], vec![1.0]], vec![0.1, 0.5, 0.9], 1.0);
    let lp = problem.to_primal_lp();
    let again = LinearProgram::from_text(&lp.to_text()).unwrap();
    assert_eq!(lp, again);
    let sol = solve(&again).unwrap();
    assert!((sol.x[0] - 0.5).abs() < 1e-12);
}

#[test]
fn equality_rows_are_respected() {
    let mut lp = LinearProgram::new(3).with_objective(vec![1.0, 2.0, 3.0]);
    lp.add_constraint(vec![1.0, 1.0, 1.0], Sense::Eq, 6.0);
    lp.add_constraint(vec![0.0, 1.0, -1.0], Sense::Ge, 1.0);
    let sol = solve(&lp).unwrap();
    assert!(sol.is_optimal());
    assert!(lp.max_violation(&sol.x) < 1e-9);
    assert!((sol.objective - 7.0).abs() < 1e-9);
}
