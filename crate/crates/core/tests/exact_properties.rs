use std::f64::consts::PI;

use plap_core::exact::ExactSolution;
use plap_core::{Boundary, GridSpec, ScalarField};
use proptest::prelude::*;

fn barenblatt_strategy() -> impl Strategy<Value = ExactSolution> {
    (1usize..=3, 0.0f64..1.0, any::<bool>(), 0.5f64..2.0).prop_map(|(n, s, slow, a)| {
        let nf = n as f64;
        let lower = 2.0 * nf / (nf + 1.0);
        // slow diffusion p > 2 or fast diffusion inside the admissible window
        let p = if slow {
            2.05 + 3.0 * s
        } else {
            lower + 0.02 + (1.95 - lower - 0.02) * s
        };
        ExactSolution::barenblatt(p, n, a).unwrap()
    })
}

proptest! {
    #[test]
    fn barenblatt_is_self_similar(
        b in barenblatt_strategy(),
        kappa in 0.5f64..2.0,
        dir in prop::array::uniform3(-1.0f64..1.0),
        frac in 0.0f64..0.95,
        t in 0.5f64..2.0,
    ) {
        let n = b.dim();
        let norm = dir[..n].iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-6);
        let radius = b.free_boundary_radius(t).unwrap_or(3.0) * frac;
        let x: Vec<f64> = dir[..n].iter().map(|v| v / norm * radius).collect();
        let lambda = b.barenblatt_lambda();
        let scaled: Vec<f64> = x.iter().map(|v| v * kappa.powf(1.0 / lambda)).collect();
        let lhs = b.eval(&scaled, kappa * t).unwrap();
        let rhs = kappa.powf(-(n as f64) / lambda) * b.eval(&x, t).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn barenblatt_vanishes_outside_its_support(
        p in 2.05f64..5.0,
        n in 1usize..=3,
        t in 0.1f64..4.0,
        beyond in 1.0f64..3.0,
    ) {
        let b = ExactSolution::barenblatt(p, n, 1.0).unwrap();
        prop_assert!(b.barenblatt_gamma() < 0.0);
        let r = b.free_boundary_radius(t).unwrap() * beyond;
        let mut x = vec![0.0; n];
        x[0] = r;
        prop_assert_eq!(b.eval(&x, t).unwrap(), 0.0);
    }

    #[test]
    fn fast_diffusion_gamma_is_positive(n in 1usize..=3, s in 0.01f64..0.99) {
        let lower = 2.0 * n as f64 / (n as f64 + 1.0);
        let b = ExactSolution::barenblatt(lower + (2.0 - lower) * s, n, 1.0).unwrap();
        prop_assert!(b.barenblatt_gamma() > 0.0);
        prop_assert!(b.free_boundary_radius(1.0).is_none());
    }

    #[test]
    fn heat_mode_starts_from_sine(n in 8usize..300, p in 1.0f64..6.0, dim in 1usize..=2) {
        let grid = if dim == 1 {
            GridSpec::uniform_1d(0.0, 2.0 * PI, n, Boundary::Periodic).unwrap()
        } else {
            GridSpec::square_2d(-PI, PI, n.min(40), Boundary::Dirichlet).unwrap()
        };
        let h = ExactSolution::heat_mode(p, 1).unwrap();
        let field = ScalarField::from_fn(&grid, 0.0, |x| h.eval(x, 0.0).unwrap()).unwrap();
        for (i, v) in field.values().iter().enumerate() {
            prop_assert_eq!(*v, grid.coords(i)[0].sin());
        }
    }
}
