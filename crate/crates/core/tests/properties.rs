//! Randomized property tests for the structural invariants of the core
//! primitives.

use pathlab_core::fields::{BoundaryMode, ScalarField, SpaceGrid};
use pathlab_core::hj::semi_lagrangian_step;
use pathlab_core::invariants::{strat_integral, SymmetryField};
use pathlab_core::problem::{hamiltonian_min, CatalogEntry, Lagrangian, ProblemSpec};
use pathlab_core::randomness::BrownianPath;
use pathlab_core::time::TimeGrid;
use pathlab_core::vect;
use proptest::prelude::*;

fn small_spec() -> ProblemSpec {
    ProblemSpec::new(
        1,
        0.25,
        TimeGrid::new(0.0, 1.0, 8).unwrap(),
        CatalogEntry::Zero,
        CatalogEntry::Zero,
        3.0,
        Lagrangian::Quadratic,
    )
    .unwrap()
    .with_lattice_k(8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backward_step_is_monotone(values in prop::collection::vec(-5.0f64..5.0, 21),
                                 bumps in prop::collection::vec(0.0f64..3.0, 21),
                                 delta in 0.01f64..0.2) {
        let spec = small_spec();
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 21).unwrap();
        let lo = ScalarField::new(grid, values.clone(), BoundaryMode::Clamp).unwrap();
        let hi_values: Vec<f64> = values.iter().zip(&bumps).map(|(v, b)| v + b).collect();
        let hi = ScalarField::new(grid, hi_values, BoundaryMode::Clamp).unwrap();
        let pot = vec![0.0; 21];
        let a = semi_lagrangian_step(&spec, &lo, &pot, delta).unwrap();
        let b = semi_lagrangian_step(&spec, &hi, &pot, delta).unwrap();
        for i in 0..21 {
            prop_assert!(a.values()[i] <= b.values()[i] + 1e-12);
        }
    }

    #[test]
    fn backward_step_commutes_with_constants(values in prop::collection::vec(-5.0f64..5.0, 21),
                                             c in -10.0f64..10.0,
                                             delta in 0.01f64..0.2) {
        let spec = small_spec();
        let grid = SpaceGrid::new_1d(-1.0, 1.0, 21).unwrap();
        let base = ScalarField::new(grid, values.clone(), BoundaryMode::Clamp).unwrap();
        let lifted_values: Vec<f64> = values.iter().map(|v| v + c).collect();
        let lifted = ScalarField::new(grid, lifted_values, BoundaryMode::Clamp).unwrap();
        let pot = vec![0.0; 21];
        let a = semi_lagrangian_step(&spec, &base, &pot, delta).unwrap();
        let b = semi_lagrangian_step(&spec, &lifted, &pot, delta).unwrap();
        for i in 0..21 {
            prop_assert!((b.values()[i] - a.values()[i] - c).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_stays_within_node_range(values in prop::collection::vec(-5.0f64..5.0, 25),
                                             x in -1.2f64..1.2,
                                             y in -1.2f64..1.2) {
        let grid = SpaceGrid::new_2d([-1.0, -1.0], [1.0, 1.0], 5).unwrap();
        let f = ScalarField::new(grid, values.clone(), BoundaryMode::Clamp).unwrap();
        let v = f.interpolate([x, y]);
        let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12);
    }

    #[test]
    fn hamiltonian_value_decreases_with_gradient_norm(p in 0.0f64..6.0, q in 0.0f64..6.0) {
        let spec = small_spec();
        let a = hamiltonian_min([p.min(q), 0.0], &spec).value;
        let b = hamiltonian_min([p.max(q), 0.0], &spec).value;
        prop_assert!(b <= a + 1e-12);
    }

    #[test]
    fn minimizer_stays_in_control_ball(px in -20.0f64..20.0, py in -20.0f64..20.0) {
        let mut spec = small_spec();
        spec.dim = 2;
        let m = hamiltonian_min([px, py], &spec);
        prop_assert!(vect::norm(m.u_star, 2) <= spec.control_bound + 1e-9);
    }

    #[test]
    fn rotation_form_vanishes(vx in -100.0f64..100.0, vy in -100.0f64..100.0) {
        let sym = SymmetryField::rotation();
        let av = (sym.x_fn)(0.0, [vx, vy]);
        prop_assert_eq!(vect::dot(av, [vx, vy], 2), 0.0);
    }

    #[test]
    fn clamp_ball_contracts(vx in -10.0f64..10.0, vy in -10.0f64..10.0, r in 0.1f64..5.0) {
        let n0 = vect::norm([vx, vy], 2);
        let (c, clamped) = vect::clamp_ball([vx, vy], r, 2);
        prop_assert!(vect::norm(c, 2) <= r * (1.0 + 1e-12));
        prop_assert!(vect::norm(c, 2) <= n0 * (1.0 + 1e-12));
        // Re-clamping changes nothing beyond rounding noise.
        let (cc, _) = vect::clamp_ball(c, r, 2);
        prop_assert!((vect::norm(cc, 2) - vect::norm(c, 2)).abs() < 1e-12);
        prop_assert_eq!(clamped, n0 > r);
    }

    #[test]
    fn strat_integral_is_linear_and_additive(seed in 0u64..1000,
                                             scale in -3.0f64..3.0) {
        let grid = TimeGrid::new(0.0, 1.0, 32).unwrap();
        let path = BrownianPath::generate(seed, grid, 1).unwrap();
        let a: Vec<[f64; 2]> = (0..=32).map(|k| [libm::sin(k as f64), 0.0]).collect();
        let scaled: Vec<[f64; 2]> = a.iter().map(|v| vect::scale(*v, scale)).collect();
        let ia = strat_integral(&a, &path, 0, 32).unwrap();
        let is = strat_integral(&scaled, &path, 0, 32).unwrap();
        prop_assert!((is - scale * ia).abs() < 1e-9);
        let left = strat_integral(&a, &path, 0, 13).unwrap();
        let right = strat_integral(&a, &path, 13, 32).unwrap();
        prop_assert!((ia - left - right).abs() < 1e-10);
    }

    #[test]
    fn path_regeneration_and_refinement_are_consistent(seed in 0u64..10_000) {
        let grid = TimeGrid::new(0.0, 1.0, 16).unwrap();
        let a = BrownianPath::generate(seed, grid, 2).unwrap();
        let b = BrownianPath::generate(seed, grid, 2).unwrap();
        prop_assert_eq!(a.raw_values(), b.raw_values());
        let fine = a.refine();
        for k in 0..=16 {
            prop_assert_eq!(a.value(k), fine.value(2 * k));
        }
    }
}
