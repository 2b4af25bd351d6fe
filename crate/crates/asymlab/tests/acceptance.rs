//! Acceptance criteria 1–12, one PASS/FAIL line each.

use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;

use asymlab::cesaro::{
    cesaro_limit_iterative, cesaro_limit_spectral, compare_routes, construct_c11, construct_l_stable,
    contraction_asymptotic_limit, harmonic_identity_residual, three_by_three_counterexample, trace_law,
    SpectrumTarget, TRACE_TOL,
};
use asymlab::dirtree::{backward_cyclic_vector, verify_cyclic_vector};
use asymlab::matkernel::op_norm;
use asymlab::random::{random_c11_2x2, random_contraction, random_power_bounded, rng};
use asymlab::repro::{run_scenario, ReproConfig, THREE_BY_THREE_EIGS};
use asymlab::{CMatrix, C64};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        o.pass &= elapsed < limit;
        o.detail = format!("{}; {:.3} s (limit {} s)", o.detail, elapsed.as_secs_f64(), limit.as_secs_f64());
    }
    o
}

/// Runs registered scenarios and passes when every check in them passes.
fn scenarios(ids: &[&str]) -> Outcome {
    let cfg = ReproConfig::default();
    let mut failed = Vec::new();
    let mut checks = 0;
    for id in ids {
        match run_scenario(id, &cfg) {
            Ok(r) => {
                checks += r.checks.len();
                failed.extend(r.checks.iter().filter(|c| !c.pass).map(|c| format!("{id}: {}", c.name)));
            }
            Err(e) => failed.push(format!("{id}: {e}")),
        }
    }
    outcome(failed.is_empty(), format!("{checks} checks in {ids:?}, failed {failed:?}"))
}

fn criterion_1() -> Outcome {
    let h = harmonic_identity_residual(&three_by_three_counterexample()).expect("3x3 limit");
    let dev = h.combined_eigs.iter().zip(THREE_BY_THREE_EIGS).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    outcome(dev <= 1e-3, format!("eigenvalues {:?}, max deviation {dev:.2e}", h.combined_eigs))
}

fn criterion_2() -> Outcome {
    let mut g = rng(0);
    let worst = (0..100)
        .map(|_| harmonic_identity_residual(&random_c11_2x2(&mut g, 1e4)).expect("C11 limit").residual)
        .fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max residual {worst:.2e} over 100 matrices"))
}

fn criterion_3() -> Outcome {
    let mut g = rng(3);
    let (mut ineq, mut eq, mut eq_cases, mut worst) = (true, true, 0, f64::NEG_INFINITY);
    for _ in 0..100 {
        let dim = g.random_range(2..=6);
        let peripheral = g.random_range(1..=dim);
        let s = random_power_bounded(&mut g, dim, peripheral, 50.0);
        let law = trace_law(&cesaro_limit_spectral(&s.t).expect("limit").a, TRACE_TOL).expect("eigen");
        let slack = law.reciprocal_sum - law.rank as f64;
        worst = worst.max(slack);
        ineq &= slack <= 1e-6;
        if peripheral == dim {
            eq_cases += 1;
            eq &= slack.abs() <= 1e-6;
        }
    }
    outcome(ineq && eq && eq_cases > 0, format!("max Σ1/t − rank = {worst:.2e}; {eq_cases} equality cases"))
}

fn diag(values: &[f64]) -> CMatrix {
    let n = values.len();
    CMatrix::from_fn(n, n, |i, j| if i == j { C64::new(values[i], 0.0) } else { C64::new(0.0, 0.0) })
}

fn criterion_4() -> Outcome {
    let mut cases: Vec<(String, CMatrix, CMatrix)> = Vec::new();
    for values in [vec![2.0, 2.0 / 3.0], vec![2.0, 2.0, 0.5]] {
        let c = construct_c11(&SpectrumTarget::new(values.clone(), 0).expect("target")).expect("construct");
        cases.push((format!("{values:?}"), c.t, diag(&values)));
    }
    let l = construct_l_stable(&SpectrumTarget::new(vec![4.0], 1).expect("target")).expect("construct");
    let target = &l.x * diag(&[0.0, 4.0]) * l.x.adjoint();
    cases.push(("[4], l = 1".into(), l.t, target));
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, t, target) in cases {
        let it = cesaro_limit_iterative(&t, 1e-3, 200_000).expect("iterative");
        let sp = cesaro_limit_spectral(&t).expect("spectral");
        let (gi, gs) = (op_norm(&(&it.a - &target)), op_norm(&(&sp.a - &target)));
        pass &= gi <= 1e-3 && it.iterations <= 200_000 && gs <= 1e-8;
        notes.push(format!("{name}: iterative {gi:.1e} at n = {}, spectral {gs:.1e}", it.iterations));
    }
    outcome(pass, notes.join("; "))
}

/// Instances `S (U ⊕ B) S⁻¹` with `cond(S) <= 10`; the Cesàro error constant grows like `cond(S)²`.
fn criterion_5() -> Outcome {
    let mut g = rng(5);
    let (mut agree, mut worst) = (0, 0.0_f64);
    for _ in 0..200 {
        let dim = g.random_range(2..=6);
        let peripheral = g.random_range(1..=dim);
        let s = random_power_bounded(&mut g, dim, peripheral, 10.0);
        let r = match compare_routes(&s.t, 1e-3, 200_000) {
            Ok(r) => r,
            Err(e) => return outcome(false, format!("dim {dim}, {peripheral} peripheral: {e}")),
        };
        let allowed = 1e-3_f64.max(10.0 / r.iterative.iterations as f64);
        agree += usize::from(r.difference <= allowed);
        worst = worst.max(r.difference / allowed);
    }
    outcome(agree == 200, format!("{agree}/200 agree; worst difference/allowed {worst:.2e}"))
}

fn criterion_6() -> Outcome {
    let mut g = rng(6);
    let (mut idem, mut gap) = (0.0_f64, 0.0_f64);
    let mut errors = 0;
    for _ in 0..100 {
        let dim = g.random_range(2..=6);
        let unitary = g.random_range(0..=dim);
        match contraction_asymptotic_limit(&random_contraction(&mut g, dim, unitary), 1e-6) {
            Ok(c) => {
                idem = idem.max(c.idempotency);
                gap = gap.max(c.adjoint_gap);
            }
            Err(_) => errors += 1,
        }
    }
    outcome(
        errors == 0 && idem <= 1e-6 && gap <= 1e-6,
        format!("max ||A² − A|| {idem:.1e}, max ||A_T − A_T*|| {gap:.1e}, {errors} errors"),
    )
}

fn criterion_12() -> Outcome {
    let (j, k, m) = (2, 2000, 12);
    let w = |b: usize, k: u64| if b == 0 { 1.0 } else { 0.5 + 1.0 / (k as f64 + 2.0) };
    let v = backward_cyclic_vector(&w, j, k, m).expect("cyclic vector");
    let again = verify_cyclic_vector(&v.f, Arc::new(w), j, m).expect("verification");
    let within = |xs: &[f64]| xs.len() == m && xs.iter().enumerate().all(|(i, s)| *s <= 0.5f64.powi(i as i32 + 1));
    let ratio = v.certificates.iter().chain(&again).enumerate().map(|(i, s)| s / 0.5f64.powi((i % m) as i32 + 1));
    let worst = ratio.fold(0.0, f64::max);
    outcome(within(&v.certificates) && within(&again), format!("max Σ_m·2^m = {worst:.3} (certified and re-verified)"))
}

#[test]
fn acceptance() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("3x3 counterexample eigenvalues", Box::new(move || timed(secs(1), criterion_1))),
        ("2x2 harmonic identity", Box::new(move || timed(secs(5), criterion_2))),
        ("trace law", Box::new(criterion_3)),
        ("construction round trips", Box::new(criterion_4)),
        ("route agreement", Box::new(criterion_5)),
        ("contraction idempotency", Box::new(criterion_6)),
        ("coincidence and stable-product pairs", Box::new(|| scenarios(&["ch2_coincidence_pair", "ch2_stable_product_pair"]))),
        ("block_unishift bound", Box::new(|| scenarios(&["ch4_block_unishift"]))),
        ("Banach-limit evidence", Box::new(|| scenarios(&["ch3_banach_dependent", "ch3_no_cesaro"]))),
        ("lazy block counterexample", Box::new(|| scenarios(&["ch5_counterexample"]))),
        (
            "tree invariant suite",
            Box::new(|| scenarios(&["ch6_tree_invariants", "ch6_leaf_tree", "ch2_bilateral_half_shift"])),
        ),
        ("cyclic-vector certificates", Box::new(move || timed(secs(10), criterion_12))),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr();
    writeln!(err).expect("stderr");
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        writeln!(err, "{verdict} criterion {:2} {name}: {}", i + 1, o.detail).expect("stderr");
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
