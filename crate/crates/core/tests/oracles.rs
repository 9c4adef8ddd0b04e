//! Relaxation against independent direct solvers: dense Newton on the full
//! step system and Thomas elimination for the linear case.

mod common;

use common::*;
use compact_scheme::mesh::{courant, make_grid, GridFunction};
use compact_scheme::problems::{self, FkppBoundary, SolitonParams};
use compact_scheme::scheme::{NoSource, StepSystem};
use compact_scheme::stepping::{solve_step, sweep, BoundaryData, Discretization, PredictorKind, RelaxationConfig, SweepOrdering};
use compact_scheme::compact_coefficients;
use num_complex::Complex64;
use proptest::prelude::*;

fn tight() -> RelaxationConfig {
    RelaxationConfig::default().with_delta(1e-14)
}

#[test]
fn fkpp_relaxation_matches_newton() {
    for boundary in [FkppBoundary::Zero, FkppBoundary::InitialTrace] {
        let p = problems::fkpp_cos2(boundary);
        let h = p.grid(8).unwrap().h();
        for nu in [0.1, 0.4, 1.6] {
            let tau = nu * h * h / p.diffusion;
            let d = relaxation_vs_newton(&p, 8, Lanes::real(nu), tau, &tight());
            assert!(d <= 1e-10, "{boundary} nu={nu}: {d:e}");
        }
    }
}

#[test]
fn fhn_relaxation_matches_newton() {
    let p = problems::fhn(Default::default()).unwrap();
    let h = p.grid(8).unwrap().h();
    for nu in [0.1, 0.4] {
        let tau = nu * h * h;
        let d = relaxation_vs_newton(&p, 8, Lanes::pair([nu, nu]), tau, &tight());
        assert!(d <= 1e-10, "nu={nu}: {d:e}");
    }
}

#[test]
fn nlse_relaxation_matches_newton() {
    let p = problems::nlse(SolitonParams::default()).unwrap().with_schrodinger_domain(-4.0, 4.0);
    let h = p.grid(8).unwrap().h();
    for nu in [0.05, 0.2] {
        let tau = nu * h * h;
        let d = relaxation_vs_newton(&p, 8, Lanes::schrodinger(nu), tau, &tight());
        assert!(d <= 1e-10, "nu={nu}: {d:e}");
    }
}

#[test]
fn newton_solution_zeroes_library_residual() {
    let p = problems::fkpp_default();
    let g = p.grid(4).unwrap();
    let nu = 0.1;
    let tau = nu * g.h() * g.h() / p.diffusion;
    let prev = p.initial_state(&g);
    let phi = p.nonlinearity.as_ref();
    let newton = newton_step(&Lanes::real(nu), tau, phi, prev.values(), prev.values());
    let sys = StepSystem::new(prev.values(), compact_coefficients(nu, tau), phi);
    let worst = sys.residuals(&newton).iter().fold(0.0f64, |a, r| a.max(r.abs()));
    assert!(worst <= 1e-13, "{worst:e}");
}

#[test]
fn sweep_leaves_newton_solution_in_place() {
    let p = problems::fkpp_cos2(FkppBoundary::InitialTrace);
    let g = p.grid(8).unwrap();
    let nu = 0.4;
    let tau = nu * g.h() * g.h() / p.diffusion;
    let prev = p.initial_state(&g);
    let phi = p.nonlinearity.as_ref();
    let newton = newton_step(&Lanes::real(nu), tau, phi, prev.values(), prev.values());
    let seed = GridFunction::from_values(g, newton.clone()).unwrap();
    let coefs = compact_coefficients(nu, tau);
    for ordering in [SweepOrdering::Simultaneous, SweepOrdering::Chess, SweepOrdering::ForwardGs, SweepOrdering::CenterOut] {
        let cfg = RelaxationConfig::default().with_ordering(ordering);
        let (out, max) = sweep(&seed, &prev, &coefs, phi, &cfg).unwrap();
        assert!(max <= 1e-13, "{max:e}");
        assert!(max_diff(out.values(), &newton) <= 1e-13);
    }
}

#[test]
fn single_unknown_takes_one_correction_in_every_ordering() {
    let g = make_grid(0.0, 1.0, 2).unwrap();
    let prev = GridFunction::from_values(g, vec![0.0, 0.7, 0.0]).unwrap();
    let coefs = compact_coefficients(0.3, 0.01);
    let mut results = Vec::new();
    for ordering in [
        SweepOrdering::Simultaneous,
        SweepOrdering::Chess,
        SweepOrdering::ForwardGs,
        SweepOrdering::AlternatingGs,
        SweepOrdering::CenterOut,
        SweepOrdering::OutCenter,
        SweepOrdering::Blocked(3),
    ] {
        let cfg = RelaxationConfig::default().with_ordering(ordering);
        results.push(sweep(&prev, &prev, &coefs, &NoSource, &cfg).unwrap().0.values()[1]);
    }
    // Linear single unknown: one correction is the exact solution.
    let [_, _, b0, b1] = weights(Complex64::new(0.3, 0.0)).map(|z| z.re);
    let exact = b1 * 0.7 / b0;
    for r in results {
        assert!((r - exact).abs() < 1e-15);
    }
}

#[test]
fn orderings_share_the_fixed_point() {
    let delta = 1e-12;
    let fk = spread(&final_states(&problems::fkpp_default(), 16, 0.1, 20, delta));
    assert!(fk <= 10.0 * delta, "fkpp spread {fk:e}");
    let fk64 = spread(&final_states(&problems::fkpp_cos2(FkppBoundary::InitialTrace), 64, 0.8, 10, delta));
    assert!(fk64 <= 100.0 * delta, "fkpp N=64 spread {fk64:e}");
    let fhn = spread(&final_states(&problems::fhn(Default::default()).unwrap(), 32, 0.4, 10, delta));
    assert!(fhn <= 100.0 * delta, "fhn spread {fhn:e}");
    let nl = problems::nlse(SolitonParams::default()).unwrap();
    let nls = spread(&final_states(&nl, 64, 0.1, 10, 1e-10));
    assert!(nls <= 100.0 * 1e-10, "nlse spread {nls:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn linear_step_matches_tridiagonal_solve(
        nu in 0.01f64..10.0,
        values in proptest::collection::vec(-1.0f64..1.0, 5..40),
        left in -1.0f64..1.0,
        right in -1.0f64..1.0,
    ) {
        let n = values.len() - 1;
        let g = make_grid(0.0, 1.0, n).unwrap();
        let mut prev = GridFunction::from_values(g, values).unwrap();
        prev.set_boundary((left, right));
        let tau = nu * g.h() * g.h();
        let disc = Discretization::new(courant(1.0, tau, g.h()).unwrap().value, tau);
        let cfg = RelaxationConfig::default().with_delta(1e-14);
        let bc = BoundaryData::StaticValues(left, right);
        let (relaxed, _) = solve_step(&prev, PredictorKind::Euler, &disc, &NoSource, &cfg, &bc, tau).unwrap();
        let direct = linear_step(disc.nu, prev.values(), left, right);
        prop_assert!(max_diff(relaxed.values(), &direct) <= 1e-12);
    }

    #[test]
    fn fkpp_step_matches_newton_for_random_data(
        nu in 0.05f64..1.5,
        values in proptest::collection::vec(0.0f64..1.0, 9),
    ) {
        let mut p = problems::fkpp(1.0, std::sync::Arc::new(|_| 0.0)).unwrap();
        let g = p.grid(8).unwrap();
        let data = values.clone();
        let grid = g;
        p.initial = std::sync::Arc::new(move |x| data[((x - grid.x_left()) / grid.h()).round() as usize]);
        p.boundary = BoundaryData::StaticValues(values[0], values[8]);
        let tau = nu * g.h() * g.h() / p.diffusion;
        let d = relaxation_vs_newton(&p, 8, Lanes::real(nu), tau, &tight());
        prop_assert!(d <= 1e-10, "{:e}", d);
    }
}
