use num_complex::Complex64;
use rand::Rng;

use super::*;
use crate::ci::{build_constraints, check_feasible, PskSymbol};
use crate::convex_kernel::tests::{feasible_real, grid_oracle, standard_constraints, tiny_constraints, tiny_scenario};
use crate::numerics::{self, test_util::*, ComplexMatrix};
use crate::signal_model::{self, steering_tx, Scenario};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn sca() -> SolverConfig {
    SolverConfig::new(Method::Sca)
}

fn assert_feasible(cs: &CiConstraintSet, x: &ComplexVector) {
    let rep = check_feasible(cs, x);
    assert!(
        rep.feasible,
        "margins {:?}, power {}",
        rep.per_user_margins, rep.power_margin
    );
    assert!(rep.min_user_margin() >= -1e-9);
}

fn assert_descent(res: &SolverResult) {
    for w in res.trace.windows(2) {
        assert!(
            w[1].objective <= w[0].objective + 1e-10,
            "{} -> {}",
            w[0].objective,
            w[1].objective
        );
    }
}

#[test]
fn sca_unconstrained_matches_eigen_solution() {
    let sc = Scenario::standard().without_clutter().with_users(0);
    let cs = build_constraints(&sc, &[], &[], &[]).unwrap();
    let res = sca_solve(&sc, &cs, &sca()).unwrap();
    let u0 = signal_model::steering_matrix(&sc, sc.target_angle).matrix;
    let lmax = numerics::herm_eig(&(u0.adjoint() * &u0)).unwrap().max_eigenvalue();
    let want = sc.mu() * sc.power_budget * lmax;
    assert!((res.sinr_rad - want).abs() <= 1e-4 * want, "{} vs {want}", res.sinr_rad);
    assert_eq!(res.status, SolverStatus::Converged);
}

#[test]
fn sca_standard_scenario_converges_feasibly() {
    let sc = Scenario::standard();
    let mut r = rng(20);
    for _ in 0..5 {
        let cs = standard_constraints(&mut r, &sc, 10f64.powf(1.5));
        let res = sca_solve(&sc, &cs, &sca()).unwrap();
        assert_eq!(res.status, SolverStatus::Converged);
        assert!(res.iterations <= 200);
        assert_feasible(&cs, &res.x_opt);
        assert_descent(&res);
        let last = res.trace.last().unwrap();
        assert!(last.gap.abs() < 1e-5 && last.gap >= -1e-5);
        // Reported SINR is the MVDR output SINR.
        let direct = signal_model::sinr_rad(&sc, &res.x_opt, &res.w_opt).unwrap();
        assert!((direct - res.sinr_rad).abs() <= 1e-8 * res.sinr_rad);
    }
}

#[test]
fn sca_tiny_matches_grid_oracle() {
    let sc = tiny_scenario();
    let mut r = rng(21);
    for _ in 0..3 {
        let cs = tiny_constraints(&mut r, &sc, 10f64.powf(1.5));
        let res = sca_solve(&sc, &cs, &sca()).unwrap();
        let oracle = -grid_oracle(
            |z| -signal_model::sinr_objective(&sc, &numerics::from_real(z)).unwrap(),
            feasible_real(&cs),
            sc.power_budget.sqrt(),
        );
        let got = res.sinr_rad / sc.mu();
        assert!(got >= 0.98 * oracle, "{got} vs {oracle}");
    }
}

#[test]
fn sum_of_reals_without_users_is_flat_real_vector() {
    let sc = Scenario::standard().with_users(0);
    let cs = build_constraints(&sc, &[], &[], &[]).unwrap();
    let x = sca_initialize(&cs, 8).unwrap();
    let v = (sc.power_budget / 8.0).sqrt();
    for z in x.iter() {
        assert!((z - c(v, 0.0)).norm() < 1e-6 * v);
    }
}

#[test]
fn sum_of_reals_is_feasible() {
    let sc = Scenario::standard();
    let mut r = rng(22);
    let cs = standard_constraints(&mut r, &sc, 10f64.powf(1.5));
    assert_feasible(&cs, &sca_initialize(&cs, 8).unwrap());
}

#[test]
fn exact_fixed_phi_variant_is_feasible() {
    let sc = Scenario::standard();
    let mut r = rng(23);
    let cs = standard_constraints(&mut r, &sc, 10f64.powf(1.5));
    let cfg = SolverConfig {
        linesearch: LineSearch::ExactFixedPhi,
        ..sca()
    };
    let res = sca_solve(&sc, &cs, &cfg).unwrap();
    assert!(res.is_feasible_status(), "{:?}", res.status);
    assert_feasible(&cs, &res.x_opt);
    let single = sca_solve(&sc, &cs, &sca()).unwrap();
    assert!((res.sinr_db() - single.sinr_db()).abs() < 1.0);
}

#[test]
fn wrong_method_rejected() {
    let sc = Scenario::standard();
    let mut r = rng(24);
    let cs = standard_constraints(&mut r, &sc, 10.0);
    assert!(matches!(
        sca_solve(&sc, &cs, &SolverConfig::new(Method::Sq)),
        Err(DfrcError::Contract(_))
    ));
}

#[test]
fn infeasible_constraints_give_infeasible_status() {
    let sc = Scenario::standard().with_arrays(2, 2).with_users(1);
    let h = vec![ComplexVector::from_vec(vec![c(0.01, 0.0), c(0.0, 0.0)])];
    let cs = build_constraints(&sc, &h, &[PskSymbol::new(4, 1).unwrap()], &[1e4]).unwrap();
    let res = sca_solve(&sc, &cs, &sca()).unwrap();
    assert_eq!(res.status, SolverStatus::Infeasible);
    assert!(!res.is_feasible_status());
}

#[test]
fn sq_without_clutter_settles_immediately() {
    let sc = Scenario::standard().without_clutter().with_users(2);
    let mut r = rng(25);
    let cs = standard_constraints(&mut r, &sc, 10.0);
    let res = sq_solve(&sc, &cs, &SolverConfig::new(Method::Sq)).unwrap();
    assert_eq!(res.status, SolverStatus::Converged);
    assert!(res.iterations <= 2);
    assert_feasible(&cs, &res.x_opt);
    // The inner maximizer of x^H (Phi - lambda_max I) x: Phi is constant here,
    // so a second solve from the result reproduces it.
    let phi = signal_model::sinr_matrix(&sc, &res.x_opt).unwrap();
    let lmax = numerics::herm_eig(&phi).unwrap().max_eigenvalue();
    let q = numerics::hermitize(&(&phi - ComplexMatrix::identity(8, 8) * c(lmax, 0.0)));
    let again = crate::convex_kernel::solve_concave_qp_over_ci(&q, &cs, 1e-12).unwrap();
    assert!((&again - &res.x_opt).norm() <= 1e-4 * res.x_opt.norm());
}

#[test]
fn sq_without_users_collapses_to_zero() {
    // With no CI constraints every multiple of the top eigenvector maximizes
    // x^H (Phi - lambda_max I) x = 0; the barrier returns the minimum-norm one.
    let sc = Scenario::standard().without_clutter().with_users(0);
    let cs = build_constraints(&sc, &[], &[], &[]).unwrap();
    assert!(matches!(
        sq_solve(&sc, &cs, &SolverConfig::new(Method::Sq)),
        Err(DfrcError::Degenerate(_))
    ));
}

#[test]
fn sq_standard_scenario_trace_and_feasibility() {
    let sc = Scenario::standard();
    let mut r = rng(26);
    let cs = standard_constraints(&mut r, &sc, 10f64.powf(1.5));
    let res = sq_solve(&sc, &cs, &SolverConfig::new(Method::Sq)).unwrap();
    assert!(!res.trace.is_empty());
    assert_feasible(&cs, &res.x_opt);
    for e in &res.trace {
        assert!((e.sinr - sc.mu() * -e.objective).abs() <= 1e-9 * e.sinr);
    }
}

#[test]
fn sq_lambda_shift_study() {
    // Thresholds close to what the power budget allows push the solution onto
    // the sphere; there the shift by lambda only adds a constant.
    let sc = Scenario::standard().with_arrays(4, 4).with_users(1);
    let mut r = rng(27);
    let h = random_vector(&mut r, 4);
    let cap = h.norm_squared() * sc.power_budget;
    let s = PskSymbol::new(4, 1).unwrap();
    let cs = build_constraints(&sc, &[h], &[s], &[0.995 * cap]).unwrap();
    let one = sq_solve(&sc, &cs, &SolverConfig::new(Method::Sq)).unwrap();
    let two = sq_solve(
        &sc,
        &cs,
        &SolverConfig {
            sq_lambda_scale: 2.0,
            ..SolverConfig::new(Method::Sq)
        },
    )
    .unwrap();
    assert_feasible(&cs, &one.x_opt);
    assert_feasible(&cs, &two.x_opt);
    let tight = |x: &ComplexVector| x.norm_squared() >= sc.power_budget * (1.0 - 1e-6);
    if tight(&one.x_opt) && tight(&two.x_opt) {
        assert!((&one.x_opt - &two.x_opt).norm() <= 1e-4 * one.x_opt.norm());
    }
    // Every feasible point lies within a thin shell near the sphere.
    assert!(one.x_opt.norm_squared() >= 0.99 * sc.power_budget);
}

#[test]
fn sdr_tight_instance_reaches_bound() {
    // No clutter: Phi = conj(a) a^T is rank one and the user is served by the
    // matched beam itself, so the relaxation is exact.
    let sc = Scenario::standard().without_clutter().with_arrays(4, 4).with_users(1);
    let a = steering_tx(&sc, sc.target_angle);
    let s = PskSymbol::new(4, 3).unwrap();
    let h = a.map(|v| v.conj()) * s.value.conj();
    let cs = build_constraints(&sc, &[h], &[s], &[10.0]).unwrap();
    let res = sdr_solve(&sc, &cs, &SolverConfig::new(Method::Sdr)).unwrap();
    let achieved = numerics::quad_form(&res.bound_sinr_matrix, &res.result.x_opt);
    assert!(achieved >= 0.999 * res.upper_bound, "{achieved} vs {}", res.upper_bound);
    assert_feasible(&cs, &res.result.x_opt);
}

#[test]
fn sdr_bound_dominates_all_solvers() {
    let sc = Scenario::standard().with_arrays(4, 4).with_users(2);
    let mut r = rng(28);
    for _ in 0..4 {
        let cs = standard_constraints(&mut r, &sc, 10f64.powf(1.5));
        let sdr = sdr_solve(&sc, &cs, &SolverConfig::new(Method::Sdr)).unwrap();
        let phi = &sdr.bound_sinr_matrix;
        let others = [
            sca_solve(&sc, &cs, &sca()).unwrap().x_opt,
            sq_solve(&sc, &cs, &SolverConfig::new(Method::Sq)).unwrap().x_opt,
            sdr.result.x_opt.clone(),
        ];
        for x in &others {
            assert!(numerics::quad_form(phi, x) <= sdr.upper_bound + 1e-6);
        }
        assert_feasible(&cs, &sdr.result.x_opt);
    }
}

#[test]
fn solvers_are_deterministic() {
    let sc = Scenario::standard();
    let mut r = rng(29);
    let cs = standard_constraints(&mut r, &sc, 10.0);
    for method in Method::ALL {
        let cfg = SolverConfig {
            rng_seed: 77,
            ..SolverConfig::new(method)
        };
        let run = || match method {
            Method::Sca => sca_solve(&sc, &cs, &cfg).unwrap(),
            Method::Sq => sq_solve(&sc, &cs, &cfg).unwrap(),
            Method::Sdr => sdr_solve(&sc, &cs, &cfg).unwrap().result,
        };
        let (a, b) = (run(), run());
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.x_opt, b.x_opt);
    }
}

#[test]
fn custom_init_must_be_feasible() {
    let sc = Scenario::standard();
    let mut r = rng(30);
    let cs = standard_constraints(&mut r, &sc, 10.0);
    let bad = SolverConfig {
        init: Init::Custom(ComplexVector::zeros(8)),
        ..sca()
    };
    assert!(sca_solve(&sc, &cs, &bad).is_err());
    let x0 = sca_initialize(&cs, 8).unwrap();
    let good = SolverConfig {
        init: Init::Custom(x0),
        ..sca()
    };
    assert!(sca_solve(&sc, &cs, &good).unwrap().is_feasible_status());
}

#[test]
fn config_validation() {
    let mut cfg = sca();
    cfg.conv_tol = 0.0;
    assert!(cfg.validate().is_err());
    let mut cfg = sca();
    cfg.max_outer_iters = 0;
    assert!(cfg.validate().is_err());
    assert_eq!("SCA".parse::<Method>().unwrap(), Method::Sca);
    assert!("foo".parse::<Method>().is_err());
    let _ = rng(0).random::<u8>();
}
