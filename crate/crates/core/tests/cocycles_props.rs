use haarkit::cocycles::{Cocycle, HolderBound};
use haarkit::function::LocalFunction;
use haarkit::groupoid::Relation;
use haarkit::symbolic::{Alphabet, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cocycles(rng: &mut ChaCha8Rng, ab: Alphabet, beta: f64) -> Vec<(Cocycle, Relation)> {
    let phi = LocalFunction::random(rng, ab, 2, -1.0, 1.0);
    let a = LocalFunction::random(rng, ab, 2, -1.0, 1.0);
    let holder = HolderBound { c: 2.0, alpha: 1.0, lambda: 2.0 };
    vec![
        (Cocycle::potential_diff(phi, beta), Relation::BiggerThanTwo),
        (Cocycle::birkhoff_sum(a.clone(), 2, beta), Relation::KTail(2)),
        (Cocycle::truncated_product(a, 5, holder, beta), Relation::KTail(3)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn multiplicative_on_related_triples(seed in any::<u64>(), d in 2usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = Alphabet::new(d).unwrap();
        let beta = rng.gen_range(-2.0..2.0);
        for (c, rel) in cocycles(&mut rng, ab, beta) {
            let x = Point::random(&mut rng, ab, 6);
            let fiber = rel.fiber(&x);
            let y = &fiber[rng.gen_range(0..fiber.len())];
            let z = &fiber[rng.gen_range(0..fiber.len())];
            let e = |p: &Point, q: &Point| c.modular_eval(rel, p, q).unwrap();
            let prod = e(&x, y) * e(y, z);
            prop_assert!((prod - e(&x, z)).abs() < 1e-12 * prod.max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn constant_shift_and_beta_scaling(seed in any::<u64>(), d in 2usize..4, k in 0.0f64..5.0, beta in -2.0f64..2.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = Alphabet::new(d).unwrap();
        let phi = LocalFunction::random(&mut rng, ab, 2, -1.0, 1.0);
        let rel = Relation::BiggerThanTwo;
        let x = Point::random(&mut rng, ab, 5);
        let fiber = rel.fiber(&x);
        let y = &fiber[rng.gen_range(0..fiber.len())];
        let c1 = Cocycle::potential_diff(phi.clone(), beta);
        let c2 = Cocycle::potential_diff(phi.map(|v| v + k), beta);
        let v1 = c1.modular_eval(rel, &x, y).unwrap();
        let v2 = c2.modular_eval(rel, &x, y).unwrap();
        prop_assert!((v1 - v2).abs() <= 4.0 * f64::EPSILON * v1.max(1.0) * (1.0 + k.abs() * beta.abs()));
        let unit = Cocycle::potential_diff(phi, 1.0).modular_eval(rel, &x, y).unwrap();
        prop_assert!((unit.powf(beta) - v1).abs() < 1e-12 * v1.max(1.0));
    }
}
