use proptest::prelude::*;

use taxislab::diagnostics::{entropy, fit_energy_constant, quasi_energy, QuasiEnergyConfig};
use taxislab::grid::{laplacian_neumann, Field, Grid, State};
use taxislab::model::hypotheses::violates;
use taxislab::model::{
    check_hypotheses, finite_diff_partials, make_caf, make_go_or_grow, CafParams, CafVariant,
    CheckBox, Condition, GoGrowParams, HypothesisBudget, Kinetics, Model, ModelParams, Point,
};

fn base_params() -> ModelParams {
    ModelParams {
        chi: 0.6,
        xi: 0.5,
        alpha: 0.0,
        beta: 0.0,
        du: 1e-3,
        dh: 0.1,
    }
}

fn caf_model(variant: CafVariant, mu: f64, eta: f64, alpha_h: f64, beta_v: f64) -> Model {
    let (beta_v, gamma_w) = match variant {
        CafVariant::Indirect => (beta_v, 1.0),
        CafVariant::Direct => (0.0, 0.0),
    };
    make_caf(
        base_params(),
        CafParams {
            mu,
            eta,
            alpha_h,
            beta_v,
            gamma_w,
            variant,
        },
    )
    .unwrap()
}

fn go_grow_model(k: [f64; 9]) -> Model {
    let gg = GoGrowParams {
        k1: k[0],
        k2: k[1],
        k3: k[2],
        k4: k[3],
        k5: k[4],
        k6: k[5],
        k7: k[6],
        k8: k[7],
        k9: k[8],
    };
    make_go_or_grow(base_params(), gg).unwrap()
}

fn rates() -> impl Strategy<Value = [f64; 9]> {
    prop::array::uniform9(0.1f64..3.0)
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, n)
}

fn budget(scale: f64) -> HypothesisBudget {
    HypothesisBudget {
        phi_decay: 0.5 / scale,
        phi_bound: scale,
        source_bound: scale,
        psi_exponent: 0.25,
        f_bound: scale,
        g_bound: scale,
        psi_bound: scale,
        f0: Default::default(),
    }
}

fn assert_partials_close(kin: &dyn Kinetics, p: Point) -> Result<(), TestCaseError> {
    let fd = finite_diff_partials(kin, p, 1e-6).unwrap();
    let close = |a: f64, b: f64| (a - b).abs() <= 1e-5 * a.abs().max(1.0);
    for (an, num) in kin.phi_partials(p).as_array().iter().zip(fd.phi.as_array()) {
        prop_assert!(close(*an, num), "phi: analytic {an} vs fd {num} at {p:?}");
    }
    for (an, num) in kin.psi_partials(p).as_array().iter().zip(fd.psi.as_array()) {
        prop_assert!(close(*an, num), "psi: analytic {an} vs fd {num} at {p:?}");
    }
    prop_assert!(close(kin.tissue_source_prime(p.w), fd.tissue_source_prime));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn caf_partials_match_finite_differences(
        u in 0.1f64..5.0, v in 0.1f64..5.0, w in 0.1f64..5.0, h in 0.1f64..5.0,
        mu in 0.0f64..2.0, eta in 0.0f64..12.0, alpha_h in 0.0f64..6.0, beta_v in 0.0f64..2.0,
    ) {
        for variant in [CafVariant::Indirect, CafVariant::Direct] {
            let m = caf_model(variant, mu, eta, alpha_h, beta_v);
            assert_partials_close(m.kinetics.as_ref(), Point::new(u, v, w, h))?;
        }
    }

    #[test]
    fn go_grow_partials_match_finite_differences(
        u in 0.1f64..5.0, v in 0.1f64..5.0, w in 0.1f64..5.0, h in 0.1f64..5.0, k in rates(),
    ) {
        // keep the stencil off the kinks of the squared positive parts
        prop_assume!((1.0 - v).abs() > 1e-3 && (1.0 - u - v - w).abs() > 1e-3);
        let m = go_grow_model(k);
        assert_partials_close(m.kinetics.as_ref(), Point::new(u, v, w, h))?;
    }

    #[test]
    fn laplacian_is_symmetric_and_nonpositive(a in field(48), b in field(48)) {
        let g = Grid::new(8, 6, 1.0, 0.75).unwrap();
        let fa = Field::from_vec(g, a).unwrap();
        let fb = Field::from_vec(g, b).unwrap();
        let (la, lb) = (laplacian_neumann(&fa), laplacian_neumann(&fb));
        let (ab, ba) = (la.dot(&fb), fa.dot(&lb));
        prop_assert!((ab - ba).abs() <= 1e-10 * (1.0 + ab.abs()));
        prop_assert!(la.dot(&fa) <= 1e-10);
    }

    #[test]
    fn entropy_lower_bound(values in field(64)) {
        let g = Grid::new(8, 8, 2.0, 0.5).unwrap();
        let f = Field::from_vec(g, values).unwrap();
        prop_assert!(entropy(&f) >= -g.area() / std::f64::consts::E - 1e-12);
    }

    #[test]
    fn energy_rotation_invariant(u in field(36), h in field(36), v in prop::collection::vec(0.1f64..2.0, 36), w in field(36)) {
        let g = Grid::unit(6, 6).unwrap();
        let rotate = |d: &[f64]| {
            // (i, j) -> (j, n-1-i)
            let mut out = vec![0.0; 36];
            for j in 0..6 {
                for i in 0..6 {
                    out[j + (5 - i) * 6] = d[i + j * 6];
                }
            }
            out
        };
        let make = |u: &[f64], h: &[f64], v: &[f64], w: &[f64]| State {
            u: Field::from_vec(g, u.to_vec()).unwrap(),
            h: Field::from_vec(g, h.to_vec()).unwrap(),
            v: Field::from_vec(g, v.to_vec()).unwrap(),
            w: Field::from_vec(g, w.to_vec()).unwrap(),
            t: 0.0,
        };
        let mp = ModelParams { alpha: 10.6, beta: 1.0, ..base_params() };
        let qc = QuasiEnergyConfig::new(&mp, None, None, None).unwrap();
        let (f0, d0) = quasi_energy(&make(&u, &h, &v, &w), &qc);
        let (f1, d1) = quasi_energy(&make(&rotate(&u), &rotate(&h), &rotate(&v), &rotate(&w)), &qc);
        prop_assert!((f0 - f1).abs() <= 1e-10 * (1.0 + f0.abs()));
        prop_assert!((d0 - d1).abs() <= 1e-10 * (1.0 + d0.abs()));
    }

    #[test]
    fn fitted_constant_monotone_in_samples(
        f in prop::collection::vec(-0.3f64..20.0, 4..30),
        d in prop::collection::vec(0.0f64..50.0, 30),
        extra in prop::collection::vec((-0.3f64..20.0, 0.0f64..50.0), 1..5),
    ) {
        let series: Vec<_> = f.iter().zip(&d).enumerate().map(|(k, (&f, &d))| (0.1 * k as f64, f, d)).collect();
        let mut longer = series.clone();
        for (k, &(f, d)) in extra.iter().enumerate() {
            longer.push((0.1 * (series.len() + k) as f64, f, d));
        }
        let short = fit_energy_constant(&series).unwrap().value().unwrap_or(f64::INFINITY);
        let long = fit_energy_constant(&longer).unwrap().value().unwrap_or(f64::INFINITY);
        prop_assert!(long >= short, "{long} < {short}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn larger_budget_never_fails_more(
        k in rates(), scale in 0.5f64..5.0, factor in 1.0f64..10.0,
        upper in prop::array::uniform4(0.5f64..5.0),
    ) {
        let m = go_grow_model(k);
        let cb = CheckBox { upper: Point::new(upper[0], upper[1], upper[2], upper[3]), samples: 5 };
        let tight = check_hypotheses(m.kinetics.as_ref(), &budget(scale), cb).unwrap();
        let loose = check_hypotheses(m.kinetics.as_ref(), &budget(scale * factor), cb).unwrap();
        for c in Condition::ALL {
            if tight.result(c).unwrap().passed {
                prop_assert!(loose.result(c).unwrap().passed, "{} regressed", c.id());
            }
        }
    }

    #[test]
    fn witnesses_reproduce_violations(
        mu in 0.0f64..2.0, eta in 0.0f64..12.0, alpha_h in 0.0f64..6.0, scale in 0.2f64..3.0,
        upper in prop::array::uniform4(0.5f64..10.0), direct in any::<bool>(),
    ) {
        let variant = if direct { CafVariant::Direct } else { CafVariant::Indirect };
        let m = caf_model(variant, mu, eta, alpha_h, 1.0);
        let b = budget(scale);
        let cb = CheckBox { upper: Point::new(upper[0], upper[1], upper[2], upper[3]), samples: 6 };
        let report = check_hypotheses(m.kinetics.as_ref(), &b, cb).unwrap();
        for (cond, failure) in report.failures() {
            let (lhs, rhs) = cond.evaluate(m.kinetics.as_ref(), &b, failure.witness);
            prop_assert_eq!((lhs, rhs), (failure.lhs, failure.rhs));
            prop_assert!(violates(lhs, rhs));
        }
    }
}
