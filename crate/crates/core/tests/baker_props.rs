use haarkit::baker::{
    backward_fiber_orbit, baker_apply, baker_kms_residual, itinerary, preimages, v_product, BakerState, Branch,
    CircleMap, DoublingMap, SineMap,
};
use proptest::prelude::*;

fn maps(eps: f64) -> Vec<Box<dyn CircleMap>> {
    vec![Box::new(DoublingMap), Box::new(SineMap::new(eps).unwrap())]
}

#[test]
fn branches_invert_the_map_on_a_grid() {
    for m in maps(0.3) {
        let x0 = m.x0();
        for i in 0..1024 {
            let y = i as f64 / 1024.0;
            let x1 = m.inverse_branch(Branch::First, y).unwrap();
            let x2 = m.inverse_branch(Branch::Second, y).unwrap();
            assert!((0.0..x0).contains(&x1) && (x0..1.0).contains(&x2));
            assert!((m.eval(x1) - y).abs() < 1e-12 && (m.eval(x2) - y).abs() < 1e-12);
            assert!(m.derivative(y) >= m.expansion() - 1e-15);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn second_coordinate_is_the_map(a in 0.0f64..1.0, b in 0.0f64..1.0, eps in 0.0f64..0.45) {
        for m in maps(eps) {
            let z = baker_apply(m.as_ref(), BakerState::new(a, b).unwrap()).unwrap();
            prop_assert_eq!(z.b, m.eval(b));
            prop_assert_eq!(m.branch_of(z.a), m.branch_of(b));
        }
    }

    #[test]
    fn backward_orbits_contract(a in 0.0f64..1.0, b in 0.0f64..1.0, b0 in 0.0f64..1.0, eps in 0.0f64..0.45) {
        for m in maps(eps) {
            let orbit = backward_fiber_orbit(m.as_ref(), BakerState::new(a, b).unwrap(), b0, 20).unwrap();
            let lambda = m.expansion();
            for (n, &(bn, sn)) in orbit.iter().enumerate() {
                let bound = lambda.powi(-(n as i32 + 1)) * (b - b0).abs();
                prop_assert!((bn - sn).abs() <= bound * (1.0 + 1e-9) + 1e-15);
            }
            let circ = |x: f64, y: f64| (x - y).abs().min(1.0 - (x - y).abs());
            let mut prev = b;
            for &(bn, _) in &orbit {
                prop_assert!(circ(m.eval(bn), prev) < 1e-12);
                prev = bn;
            }
            // Forward iteration amplifies rounding by Π T', so the composite
            // check stays at a depth where that factor is below 1e6.
            let mut x = orbit[9].0;
            for _ in 0..10 {
                x = m.eval(x);
            }
            prop_assert!(circ(x, b) < 1e-10);
        }
    }

    #[test]
    fn v_depends_on_a_only_through_its_itinerary(a in 0.0f64..1.0, c in 0.0f64..1.0, b in 0.0f64..1.0, b0 in 0.0f64..1.0) {
        let m = SineMap::new(0.2).unwrap();
        let n = 12;
        let branches = itinerary(&m, a, n);
        // A second horizontal point with the same first n branches.
        let mut a2 = c;
        for &j in branches.iter().rev() {
            a2 = m.inverse_branch(j, a2).unwrap();
        }
        prop_assume!(itinerary(&m, a2, n) == branches);
        let v1 = v_product(&m, BakerState::new(a, b).unwrap(), b0, n).unwrap().0;
        let v2 = v_product(&m, BakerState::new(a2, b).unwrap(), b0, n).unwrap().0;
        prop_assert!((v1 - v2).abs() < 1e-12);
        let vd = v_product(&DoublingMap, BakerState::new(a, b).unwrap(), b0, n).unwrap().0;
        prop_assert_eq!(vd, 1.0);
    }

    #[test]
    fn fiber_ratios_are_multiplicative(a in 0.0f64..1.0, b1 in 0.0f64..1.0, b2 in 0.0f64..1.0, b3 in 0.0f64..1.0, b0 in 0.0f64..1.0) {
        let m = SineMap::new(0.2).unwrap();
        let v = |b: f64| v_product(&m, BakerState::new(a, b).unwrap(), b0, 40).unwrap();
        let ((v1, tail), (v2, _), (v3, _)) = (v(b1), v(b2), v(b3));
        let d = |x: f64, y: f64| x / y;
        prop_assert!((d(v1, v2) * d(v2, v3) - d(v1, v3)).abs() < 1e-8);
        // Independent of b0: the direct product over the b1, b2 preimages.
        let branches = itinerary(&m, a, 40);
        let p1 = preimages(&m, &branches, b1).unwrap();
        let p2 = preimages(&m, &branches, b2).unwrap();
        let direct: f64 = p1.iter().zip(&p2).map(|(&x, &y)| m.derivative(x) / m.derivative(y)).product();
        prop_assert!((d(v1, v2) - direct).abs() < 1e-8 + 2.0 * tail);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn symmetric_test_functions_balance(eps in 0.0f64..0.45, k in 1i32..4) {
        let m = SineMap::new(eps).unwrap();
        let f = move |a: f64, b: f64, s: f64| (a + 1.0) * (b * s).powi(k) + (b + s).cos();
        let r = baker_kms_residual(&m, &f, 20, 32, 1e-14).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }
}

#[test]
fn truncation_dominates_the_ali_residual() {
    use haarkit::baker::density_residual_ali;
    let m = SineMap::new(0.2).unwrap();
    let coarse = density_residual_ali(&m, 32, 3, 32).unwrap();
    let fine = density_residual_ali(&m, 32, 6, 32).unwrap();
    assert!(fine.ali_residual <= 0.5 * coarse.ali_residual, "{coarse:?} {fine:?}");
    assert!(coarse.ali_within_budget() && fine.ali_within_budget());
    assert!(fine.printed_residual > 0.1 && fine.degree_residual > 1e-3);
}

#[test]
fn sbr_residual_is_pointwise_stable_under_refinement() {
    use haarkit::baker::BakerGrid;
    let m = SineMap::new(0.2).unwrap();
    let g1 = BakerGrid::compute(&m, 32, 20, 32).unwrap();
    let g2 = BakerGrid::compute(&m, 64, 20, 32).unwrap();
    for p in &g1.points {
        let q = g2.points.iter().find(|q| q.a == p.a && q.b == p.b).unwrap();
        assert!((p.sbr - q.sbr).abs() <= 1e-12);
    }
    let (d1, d2) = (g1.report().sbr_discrepancy, g2.report().sbr_discrepancy);
    assert!(d1 > 1e-3 && d2 >= d1 && d2 - d1 < 0.1 * d2);
}
