use orlicz_moser::logval::LogVal;
use orlicz_moser::metric::*;
use orlicz_moser::orlicz::{orlicz_quasinorm, submult_ratio, DiscreteMeasure, Young};
use orlicz_moser::recurrence::{direct_thetas, minimal_cm, run_recurrence};
use orlicz_moser::solver::*;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn recurrence_excess_nondecreasing(m in 2.1f64..4.0, k in 1.0f64..10.0, gamma in 0.0f64..6.0, th in 2.0f64..4.0) {
        let t = run_recurrence(m, k, gamma, th, 500).unwrap();
        prop_assert!(t.excess.windows(2).all(|w| w[1] >= w[0]));
        prop_assert!(t.betas.windows(2).all(|w| w[1] > w[0] + 1.0 - 1e-12));
        let cm = minimal_cm(&t);
        for n in [1usize, 10, 100, 500] {
            prop_assert!(t.betas[n - 1] <= t.alpha(n, cm) + 1e-12);
        }
    }

    #[test]
    fn recurrence_matches_direct_evaluation(m in 2.1f64..4.0, k in 1.0f64..10.0, gamma in 0.0f64..6.0, th in 2.0f64..4.0) {
        let t = run_recurrence(m, k, gamma, th, 40).unwrap();
        let d = direct_thetas(m, k, gamma, th, 40).unwrap();
        for (a, b) in t.betas.iter().zip(&d) {
            prop_assert!((a - b).abs() <= 1e-9 * a, "{} vs {}", a, b);
        }
    }

    #[test]
    fn submultiplicative_random_pairs(m in 1.5f64..4.5, la in -20f64..200.0, lb in -20f64..200.0) {
        for y in [Young::phi(m).unwrap(), Young::phi_tilde(m).unwrap()] {
            let r = submult_ratio(&y, &[(LogVal::from_ln(la), LogVal::from_ln(lb))]);
            prop_assert!(r <= 1.0 + 1e-9, "{:?} {}", y.variant(), r);
        }
    }

    #[test]
    fn quasinorm_monotone(vals in proptest::collection::vec(0.0f64..1e3, 1..30), bump in 0.0f64..10.0) {
        let y = Young::phi(3.0).unwrap();
        let mu = DiscreteMeasure::uniform(vals.len());
        let a = orlicz_quasinorm(&y, &vals, &mu).unwrap();
        let bigger: Vec<f64> = vals.iter().map(|v| v + bump).collect();
        let b = orlicz_quasinorm(&y, &bigger, &mu).unwrap();
        prop_assert!(b.ln() >= a.ln() - 1e-12 || a.is_zero());
    }

    #[test]
    fn cutoff_radii_stay_above_inner_radius(r in 0.01f64..2.0, nu in 0.05f64..0.95, j in 1usize..30) {
        let radii = cutoff_radii(r, nu, j);
        prop_assert_eq!(radii.len(), j + 1);
        prop_assert!(radii.windows(2).all(|w| w[1] < w[0]));
        prop_assert!(*radii.last().unwrap() > nu * r);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn discrete_maximum_principle(a in -2.0f64..2.0, b in -2.0f64..2.0, w in 1.0f64..8.0, contrast in 1.0f64..5.0, deg in proptest::bool::ANY) {
        let coef = if deg { Coefficient::Degenerate { k: 1, sigma: 0.5 } } else { Coefficient::Isotropic };
        let c = CoeffField::layered(&coef, Grid2D::new(0.5, 0.5, 20, 21).unwrap(), (0.0, 0.0), contrast, 0.2).unwrap();
        let bc = c.sample(|x, y| a * x + (w * y).sin() + b * x * y);
        let u = assemble_and_solve(&c, &RhsPair::zero(&c.grid), &bc, 1e-11).unwrap().u;
        let mp = max_principle_check(&c, &u, 0.0).unwrap();
        prop_assert!(mp.max_interior <= mp.max_boundary + 1e-9);
        prop_assert!(mp.min_interior >= mp.min_boundary - 1e-9);
    }

    #[test]
    fn solve_is_linear_in_boundary_data(s in -3.0f64..3.0) {
        let coef = Coefficient::Degenerate { k: 1, sigma: 0.5 };
        let c = CoeffField::uniform(&coef, Grid2D::new(0.5, 0.5, 16, 17).unwrap(), (0.0, 0.0)).unwrap();
        let bc = c.sample(|x, y| x * x - y);
        let u1 = assemble_and_solve(&c, &RhsPair::zero(&c.grid), &bc, 1e-11).unwrap().u;
        let scaled = GridFunction::new(bc.values.iter().map(|v| s * v).collect());
        let u2 = assemble_and_solve(&c, &RhsPair::zero(&c.grid), &scaled, 1e-11).unwrap().u;
        let scale = u1.sup_abs().max(1.0);
        for (p, q) in u1.values.iter().zip(&u2.values) {
            prop_assert!((s * p - q).abs() <= 1e-8 * scale * s.abs().max(1.0));
        }
    }
}

#[test]
fn supnorm_recovery_of_constants() {
    let g = Grid2D::with_resolution(0.5, 0.5, 64).unwrap();
    let f = cc_distance_field(&Coefficient::Isotropic, &g, (0.0, 0.0), Stencil::Sixteen).unwrap();
    let sets = nested_balls(&f, &cutoff_radii(0.4, 0.75, 10));
    for c in [1e-3, 0.5, 7.0, 1e4] {
        let v = GridFunction::new(vec![c; g.len()]);
        let a = supnorm_recovery(&v, &sets, g.cell_area(), 3.0, SupMeasure::Normalized).unwrap();
        assert!(a.iter().all(|x| (x / c - 1.0).abs() < 1e-9), "{c}: {a:?}");
    }
}
