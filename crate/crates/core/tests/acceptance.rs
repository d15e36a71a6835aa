//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

use std::f64::consts::TAU;
use std::process::ExitCode;

use haarkit::algebra::{convolve, involution, Kernel, TransverseMeasure};
use haarkit::baker::{baker_kms_residual, density_residual_ali, v_product, BakerState, DoublingMap, SineMap};
use haarkit::cocycles::Cocycle;
use haarkit::function::LocalFunction;
use haarkit::groupoid::{GroupoidFunction, HaarKernel, Layout, Relation};
use haarkit::kms::{
    bowen_ratio, indicator_family, markov_counterexample, markov_counterexample_with, matrix_kms_state, max_residual,
    nonuniqueness_witness, twisted_trace_report, twosided_check, verify_gibbs_quasi_invariance, KmsSetup,
    TwoSidedFunction, TwoSidedTable,
};
use haarkit::measures::{CylinderMeasure, StochasticMatrix};
use haarkit::ruelle::eigendata;
use haarkit::symbolic::{Alphabet, Point, Word};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn ab(d: usize) -> Alphabet {
    Alphabet::new(d).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_prob(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..d).map(|_| rng.gen_range(0.05..1.0)).collect();
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / z).collect()
}

fn transfer_exactness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut worst_l, mut worst_m) = (0.0f64, 0.0f64);
    for i in 0..100 {
        let d = 2 + i % 3;
        let a = LocalFunction::random(&mut rng, ab(d), 1, -1.0, 1.0);
        let e = eigendata(&a).map_err(|e| e.to_string())?;
        let lambda: f64 = a.values().iter().map(|v| v.exp()).sum();
        worst_l = worst_l.max((e.lambda - lambda).abs());
        let p: Vec<f64> = a.values().iter().map(|v| v.exp() / lambda).collect();
        let bern = CylinderMeasure::bernoulli(&p).unwrap();
        for n in 1..=3 {
            for w in Word::all(ab(d), n) {
                worst_m = worst_m.max((e.eigmeasure.weight(&w) - bern.weight(&w)).abs());
            }
        }
    }
    check(worst_l < 1e-12 && worst_m < 1e-12, format!("max |Δλ| = {worst_l:.2e}, max cylinder gap = {worst_m:.2e}"))
}

fn gibbs_quasi_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut count = 0;
    for k in 1..=3 {
        let phi = LocalFunction::random(&mut rng, ab(2), k, -1.0, 1.0);
        for beta in [0.5, 1.0, 2.0] {
            let reps = verify_gibbs_quasi_invariance(&phi, beta, Relation::BiggerThanTwo, &[k + 3], k + 1, 1e-10)
                .map_err(|e| e.to_string())?;
            count += reps.len();
            worst = worst.max(max_residual(&reps));
        }
    }
    check(worst < 1e-10, format!("{count} indicator checks, max residual {worst:.2e}"))
}

fn markov_counterexample_check() -> Outcome {
    let p = StochasticMatrix::from_rows(2, vec![0.3, 0.6, 0.7, 0.4]).unwrap();
    let r = markov_counterexample(&p, 2, 1, 1e-12).unwrap();
    let pi = p.stationary_vector().unwrap();
    let s = markov_counterexample_with(&p, &pi, 2, 1, 1e-12).unwrap();
    let ok = r.lhs == 0.5 && (r.rhs - 0.45).abs() < 1e-15 && !r.pass && s.abs_residual < 1e-12;
    check(ok, format!("uniform lhs={} rhs={}; stationary residual {:.2e}", r.lhs, r.rhs, s.abs_residual))
}

fn nonuniqueness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = ab(2);
    let rel = Relation::BiggerThanTwo;
    let family = indicator_family(Layout::new(a, rel, 2).unwrap());
    let (mut min_gap, mut worst) = (f64::INFINITY, 0.0f64);
    for _ in 0..20 {
        let phi = LocalFunction::random(&mut rng, a, 2, -1.0, 1.0);
        let mu = eigendata(&phi.map(|v| -v)).unwrap().eigmeasure;
        let coc = Cocycle::potential_diff(phi, 1.0);
        let setup = KmsSetup { measure: &mu, kernel: &HaarKernel::Counting, relation: rel, cocycle: &coc };
        let tail = LocalFunction::random(&mut rng, a, 2, 0.2, 2.0);
        let v = LocalFunction::from_fn(a, 3, |s| tail.eval_symbols(&s[1..]));
        let w = nonuniqueness_witness(setup, &v, &family, 3, 1e-10).map_err(|e| e.to_string())?;
        min_gap = min_gap.min(w.max_gap);
        worst = worst.max(max_residual(&w.base)).max(max_residual(&w.reweighted));
    }
    check(min_gap > 1e-6 && worst < 1e-10, format!("min cylinder gap {min_gap:.2e}, max residual {worst:.2e}"))
}

fn algebra_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let layouts = [
        (2, Relation::BiggerThanTwo, 2),
        (3, Relation::BiggerThanTwo, 2),
        (2, Relation::KTail(2), 3),
        (2, Relation::EventuallyEqual(2), 2),
    ];
    let c = |v: f64| Complex64::new(v, 0.0);
    for i in 0..100 {
        let (d, rel, m) = layouts[i % layouts.len()];
        let l = Layout::new(ab(d), rel, m).unwrap();
        let nu = Kernel::random_transverse(&mut rng, l, 0.1, 1.0);
        let nu0 = Kernel::random_transverse(&mut rng, l, 0.1, 1.0);
        let lam = Kernel::random(&mut rng, l, 0.1, 1.0);
        let lam_t = Kernel::random_transverse(&mut rng, l, 0.1, 1.0);
        let f = GroupoidFunction::random(&mut rng, l, true);
        let g = GroupoidFunction::random(&mut rng, l, true);
        let h = GroupoidFunction::random(&mut rng, l, true);
        let fr = GroupoidFunction::random(&mut rng, l, false);
        let gr = GroupoidFunction::random(&mut rng, l, false).map(|v| c(v.re.abs() + 0.1));
        let e = |x: haarkit::Result<f64>| x.unwrap();

        let left = convolve(&convolve(&f, &g, &nu).unwrap(), &h, &nu).unwrap();
        let right = convolve(&f, &convolve(&g, &h, &nu).unwrap(), &nu).unwrap();
        worst = worst.max(e(left.max_abs_diff(&right)));

        let inv = involution(&convolve(&f, &g, &nu).unwrap());
        worst = worst.max(e(inv.max_abs_diff(&convolve(&involution(&g), &involution(&f), &nu).unwrap())));

        let counting = Kernel::haar(&HaarKernel::Counting, l).unwrap();
        let id = GroupoidFunction::identity(l);
        worst = worst.max(e(convolve(&id, &f, &counting).unwrap().max_abs_diff(&f)));
        worst = worst.max(e(convolve(&f, &id, &counting).unwrap().max_abs_diff(&f)));
        let jl = Layout::new(ab(d), Relation::BiggerThanTwo, 2).unwrap();
        let raw = LocalFunction::random(&mut rng, ab(d), 2, 0.1, 1.0);
        let j = LocalFunction::from_fn(ab(d), 2, |s| {
            let tot: f64 = ab(d).symbols().map(|a| raw.eval_symbols(&[a, s[1]])).sum();
            raw.eval_symbols(s) / tot
        });
        let jac = Kernel::haar(&HaarKernel::jacobian(j.clone()).unwrap(), jl).unwrap();
        let unit = GroupoidFunction::diagonal(jl, &j.map(|v| 1.0 / v)).unwrap();
        let fj = GroupoidFunction::random(&mut rng, jl, true);
        worst = worst.max(e(convolve(&unit, &fj, &jac).unwrap().max_abs_diff(&fj)));
        worst = worst.max(e(convolve(&fj, &unit, &jac).unwrap().max_abs_diff(&fj)));

        let delta = Kernel::delta(l);
        worst = worst.max(e(delta.convolve(&nu).unwrap().max_abs_diff(&nu)));
        worst = worst.max(e(nu.convolve(&delta).unwrap().max_abs_diff(&nu)));

        // g(s, x) normalized so that Σ_x g(s, x) ν0^y(x) = 1.
        let s = l.class_size();
        let g_norm = GroupoidFunction::from_fn(l, |t, a, x| {
            let tot: f64 = (0..s).map(|z| gr.get(t, a, z).re * nu0.get(t, 0, z)).sum();
            gr.get(t, a, x) / tot
        });
        worst = worst.max(e(nu0.convolve(&nu.weighted(&g_norm).unwrap()).unwrap().max_abs_diff(&nu)));

        let masses = nu0.masses();
        let lam0 = nu.weighted_by(&masses.map(|v| 1.0 / v)).unwrap();
        worst = worst.max(e(nu0.convolve(&lam0).unwrap().max_abs_diff(&nu)));

        let lhs = lam.convolve(&nu.weighted(&gr).unwrap()).unwrap();
        let rhs = nu.weighted(&lam.convolve_function(&gr).unwrap()).unwrap();
        worst = worst.max(e(lhs.max_abs_diff(&rhs)));

        let lhs = lam_t.integrate(&nu.convolve_function(&fr).unwrap()).unwrap();
        let rhs = nu.integrate(&lam_t.convolve_function(&involution(&fr)).unwrap()).unwrap();
        worst = worst.max(e(lhs.max_abs_diff(&rhs)));
    }
    check(worst < 1e-12, format!("100 instances, max residual {worst:.2e}"))
}

fn transverse_invariance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut worst_exchange) = (0.0f64, 0.0f64);
    for i in 0..50 {
        let k = 1 + i % 3;
        let mem = 1 + i % 2;
        let a = ab(2);
        let rel = Relation::KTail(k);
        let phi = LocalFunction::random(&mut rng, a, mem, -1.0, 1.0);
        let beta = rng.gen_range(0.2..2.0);
        let mu = eigendata(&phi.map(|v| -beta * v)).unwrap().eigmeasure;
        let coc = Cocycle::birkhoff_sum(phi, k, beta);
        let m = coc.level(rel);
        let l = Layout::new(a, rel, m).unwrap();
        let tm = TransverseMeasure::new(mu, coc.clone());
        let nu = Kernel::random_transverse(&mut rng, l, 0.1, 1.0);
        let lam = Kernel::random_normalized(&mut rng, l);
        let moved = nu.convolve(&tm.modular_kernel(&lam).unwrap()).unwrap();
        let base = tm.eval(&nu, m).unwrap();
        worst = worst.max((base - tm.eval(&moved, m).unwrap()).abs());

        let nu2 = Kernel::random_transverse(&mut rng, l, 0.1, 1.0);
        let f = GroupoidFunction::random(&mut rng, l, false);
        let dt = coc.table(l).unwrap();
        let dtf = GroupoidFunction::from_fn(l, |t, x, y| dt.get(t, y, x) * f.get(t, x, y));
        let lhs = tm.eval_with(&nu2, &nu.integrate(&dtf).unwrap(), m).unwrap();
        let rhs = tm.eval_with(&nu, &nu2.integrate(&involution(&f)).unwrap(), m).unwrap();
        worst_exchange = worst_exchange.max((lhs - rhs).abs());
    }
    check(
        worst < 1e-10 && worst_exchange < 1e-10,
        format!("invariance residual {worst:.2e}, exchange identity residual {worst_exchange:.2e}"),
    )
}

fn twosided() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let d = 2 + i % 2;
        let a = ab(d);
        let m = CylinderMeasure::bernoulli(&random_prob(&mut rng, d)).unwrap();
        let p = StochasticMatrix::random(&mut rng, d);
        let nu = CylinderMeasure::markov(&p, &p.stationary_vector().unwrap()).unwrap();
        let v = TwoSidedTable::from_fn(a, 2, 2, |_, _| rng.gen_range(-1.0..1.0));
        let f = TwoSidedFunction::from_fn(a, 2, 2, |_, _, _| rng.gen_range(-1.0..1.0));
        worst = worst.max(twosided_check(&m, &nu, &v, &f, 3, 1e-12).unwrap().abs_residual);
    }
    check(worst < 1e-12, format!("50 instances, max residual {worst:.2e}"))
}

fn bowen() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut ok = true;
    let mut detail = String::new();
    for d in 2..=4 {
        let a = ab(d);
        let p = random_prob(&mut rng, d);
        let mu = CylinderMeasure::bernoulli(&p).unwrap();
        let phi = LocalFunction::new(a, 1, p.iter().map(|v| -v.ln()).collect()).unwrap();
        let pts: Vec<Point> = (0..200).map(|_| Point::random(&mut rng, a, 12)).collect();
        let m_max = 10;
        let (c1, c2) = bowen_ratio(&mu, &phi, 0.0, &pts, m_max);
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in &pts {
            for m in 0..=m_max {
                let r = p[x.coord(0).digit()] / p[x.coord(m).digit()];
                lo = lo.min(r);
                hi = hi.max(r);
            }
        }
        let pmin = p.iter().cloned().fold(f64::INFINITY, f64::min);
        let pmax = p.iter().cloned().fold(0.0, f64::max);
        ok &= c1 >= pmin / pmax - 1e-12 && c2 <= pmax / pmin + 1e-12;
        ok &= (c1 - lo).abs() < 1e-12 * lo && (c2 - hi).abs() < 1e-12 * hi;
        detail += &format!("d={d}: [{c1:.4}, {c2:.4}] ");
    }
    check(ok, detail.trim_end().to_string())
}

fn baker() -> Outcome {
    let doubling = DoublingMap;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut v_dev = 0.0f64;
    for _ in 0..100 {
        let z = BakerState::new(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)).unwrap();
        v_dev = v_dev.max((v_product(&doubling, z, rng.gen_range(0.0..1.0), 40).unwrap().0 - 1.0).abs());
    }
    let dr = density_residual_ali(&doubling, 64, 40, 32).unwrap();
    let poly = |a: f64, b: f64, s: f64| a * b * b * s + 3.0 * b - s * s;
    let dk = baker_kms_residual(&doubling, &poly, 40, 64, 1e-12).unwrap();
    let doubling_ok =
        v_dev < 1e-12 && dr.ali_residual < 1e-12 && dr.sbr_discrepancy < 1e-12 && dr.degree_residual < 1e-12 && dk.pass;

    let sine = SineMap::new(0.2).unwrap();
    let r = density_residual_ali(&sine, 512, 40, 64).unwrap();
    let f = |a: f64, b: f64, s: f64| (1.0 + a) * (b - 2.0 * s).exp() + (TAU * b).cos() * s;
    let k = baker_kms_residual(&sine, &f, 40, 128, 1e-6).unwrap();
    let ok = doubling_ok && r.ali_within_budget() && r.sbr_discrepancy > 1e-3 && k.abs_residual < 1e-6;
    check(
        ok,
        format!(
            "doubling: |V-1| {v_dev:.1e}, ali {:.1e}, kms {:.1e}; perturbed: ali {:.2e} <= {:.2e}, sbr {:.3}, kms {:.1e}",
            dr.ali_residual, dk.abs_residual, r.ali_residual, r.ali_budget, r.sbr_discrepancy, k.abs_residual
        ),
    )
}

fn matrix_kms() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut worst = 0.0f64;
    for i in 0..100 {
        let d = 2 + i % 3;
        let a = ab(d);
        let u: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let beta = rng.gen_range(0.0..3.0);
        let rho = CylinderMeasure::bernoulli(&matrix_kms_state(&u, beta)).unwrap();
        let l = Layout::new(a, Relation::BiggerThanTwo, 1).unwrap();
        let coc = Cocycle::potential_diff(LocalFunction::new(a, 1, u).unwrap(), beta);
        let counting = Kernel::haar(&HaarKernel::Counting, l).unwrap();
        let f = GroupoidFunction::random(&mut rng, l, true);
        let g = GroupoidFunction::random(&mut rng, l, true);
        worst = worst.max(twisted_trace_report(&rho, &counting, &coc, &f, &g, "matrix", 1e-12).unwrap().abs_residual);
    }
    check(worst < 1e-12, format!("100 instances, max residual {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("transfer operator exactness", transfer_exactness),
        ("Gibbs eigenprobability is quasi-invariant", gibbs_quasi_invariance),
        ("non-stationary Markov counterexample", markov_counterexample_check),
        ("non-uniqueness under tail reweighting", nonuniqueness),
        ("algebra identities", algebra_identities),
        ("transverse measure invariance", transverse_invariance),
        ("two-sided product measure", twosided),
        ("Bowen bounds", bowen),
        ("Baker map densities", baker),
        ("matrix KMS state", matrix_kms),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = std::time::Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} ({secs:.1}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} ({secs:.1}s)", i + 1);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
