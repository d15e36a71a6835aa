use haarkit::function::LocalFunction;
use haarkit::groupoid::{haar_weights, HaarKernel, Relation};
use haarkit::symbolic::{Alphabet, Point};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn relation(pick: usize, depth: usize) -> Relation {
    match pick % 3 {
        0 => Relation::BiggerThanTwo,
        1 => Relation::KTail(depth),
        _ => Relation::EventuallyEqual(depth),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn fibers_partition(seed in any::<u64>(), d in 2usize..4, pick in 0usize..3, depth in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rel = relation(pick, depth);
        let p = Point::random(&mut rng, Alphabet::new(d).unwrap(), 6);
        let fiber = rel.fiber(&p);
        prop_assert!(fiber.contains(&p));
        let s = &fiber[rng.gen_range(0..fiber.len())];
        prop_assert!(rel.related(&p, s) && rel.related(s, &p));
        prop_assert!(rel.fiber(s).contains(&p));
        let mut a = rel.fiber(s);
        let mut b = fiber.clone();
        a.sort_by_key(|q| q.to_string());
        b.sort_by_key(|q| q.to_string());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn haar_masses_are_constant_on_classes(seed in any::<u64>(), d in 2usize..4, pick in 0usize..3, depth in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ab = Alphabet::new(d).unwrap();
        let rel = relation(pick, depth);
        let raw = LocalFunction::random(&mut rng, ab, 2, 0.1, 1.0);
        let j = LocalFunction::from_fn(ab, 2, |s| {
            let tot: f64 = ab.symbols().map(|a| raw.eval_symbols(&[a, s[1]])).sum();
            raw.eval_symbols(s) / tot
        });
        let kernels = [HaarKernel::Counting, HaarKernel::Normalized, HaarKernel::jacobian(j).unwrap()];
        let p = Point::random(&mut rng, ab, 6);
        for k in &kernels {
            if matches!(k, HaarKernel::Jacobian(_)) && rel != Relation::BiggerThanTwo {
                continue;
            }
            let mass = |q: &Point| haar_weights(k, q, rel).unwrap().iter().map(|(_, w)| w).sum::<f64>();
            let m = mass(&p);
            for q in rel.fiber(&p) {
                prop_assert!((mass(&q) - m).abs() < 1e-12);
            }
        }
    }
}
