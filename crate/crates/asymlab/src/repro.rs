//! Registry of reproducible scenarios. Each run is deterministic given its configuration and
//! returns a report of computed values and checked expectations.

use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::cesaro::{
    cesaro_limit_spectral, harmonic_identity_residual, three_by_three_counterexample, trace_law, TRACE_TOL,
};
use crate::commutant::{injectivity_kernel, random_mixed_triple, DEFAULT_RANK_TOL};
use crate::dirtree::{
    backward_cyclic_vector, binary_tree_asymptotics, binary_tree_level_mass, bilateral_line, leaf_tree, line_vertex,
    random_tree_shift, tilde_tree, corank_by_matrix_rank, verify_cyclic_vector, AsymptoteClass, Count, Cyclicity,
    RatioBound, TailWeights,
};
use crate::error::{Error, Result};
use crate::exact::{int, ratio, to_f64, Rational, Surd};
use crate::lazyop::{
    asymptotic_diag_value, banach_range_bounds, bilateral_shift, bilateral_similarity_report, block_preset,
    cesaro_mean_at, ch3_sequence, ch5_column_sums, ch5_intertwining_check, diag_cluster_shift, paper_example,
    BasisIndex, BlockPreset, FinVec, LazyOperator, WeightGen, WeightRule,
};
use crate::matkernel::c;
use crate::random::{random_c11_2x2, random_power_bounded, rng};

/// Where an expected value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    /// Stated in the source text.
    Paper,
    /// Immediate from the definitions.
    Trivial,
    /// Computed by an independent route and frozen.
    Derived,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub provenance: Provenance,
    pub expected: String,
    pub observed: String,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    pub config: ReproConfig,
    pub values: Value,
    pub checks: Vec<Check>,
    pub pass: bool,
}

/// Parameters shared by all scenarios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReproConfig {
    pub seed: u64,
    pub tol: f64,
    pub max_n: usize,
    /// Truncation `K` of the cyclic-vector support.
    pub truncation: u64,
    /// Certificate depth `M`.
    pub depth: usize,
}

impl Default for ReproConfig {
    fn default() -> Self {
        ReproConfig { seed: 0, tol: 1e-3, max_n: 200_000, truncation: 2000, depth: 12 }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Scenario {
    pub id: &'static str,
    pub description: &'static str,
}

const SCENARIOS: &[Scenario] = &[
    Scenario { id: "ch2_coincidence_pair", description: "T₁, T₂ with equal asymptotic limits; A_{T₂T₁} e_{i,1} = 1" },
    Scenario { id: "ch2_stable_product_pair", description: "stable T₁, T₂ with A_{T₂T₁} e_{i,j} = i/(i+1)" },
    Scenario { id: "ch2_bilateral_half_shift", description: "bilateral shift with weights 1/2 on k <= 0 and 1 on k > 0" },
    Scenario { id: "ch3_banach_dependent", description: "runs of 2 in the diagonal sequence: Banach limits fill [1, 2]" },
    Scenario { id: "ch3_no_cesaro", description: "power bounded shift whose Cesàro means oscillate" },
    Scenario { id: "ch3_not_power_bounded", description: "Cesàro limit I without power boundedness" },
    Scenario { id: "ch3_3x3_counterexample", description: "A_{T,C}⁻¹ + A_{T*,C}⁻¹ ≠ 2I in dimension 3" },
    Scenario { id: "ch3_2x2_harmonic", description: "A_{T,C}⁻¹ + A_{T*,C}⁻¹ = 2I for random 2×2 C₁₁ matrices" },
    Scenario { id: "ch3_trace_law", description: "Σ 1/t_j <= rank with equality without stable part" },
    Scenario { id: "ch4_block_unishift", description: "bound ||T^{*n}Tⁿx − Ax|| <= (1/r̲(A_n) − 1)||x|| on presets" },
    Scenario { id: "ch4_diag_cluster", description: "antidiagonal cluster shift: residuals against the exact bound" },
    Scenario { id: "ch4_shields_single_defect", description: "bilateral shift with one weight 1/2 is similar to a unitary" },
    Scenario { id: "ch5_counterexample", description: "intertwining T₀₀Y − YT₁₁ + T₀₀V = 0 and column bound 2" },
    Scenario { id: "ch6_binary_tree_cnu", description: "binary tree with weights 1/√2: α ≡ 1, a ≡ 0, unilateral asymptote" },
    Scenario { id: "ch6_leaf_tree", description: "leaf tree similar to W ⊕ N with exact intertwining" },
    Scenario { id: "ch6_tilde_tree", description: "tree with one branching: quasiaffine transform and similarity" },
    Scenario { id: "ch6_tree_invariants", description: "α recursion, row sums and co-rank on seeded trees" },
    Scenario { id: "ch6_backward_cyclic", description: "cyclic vector certificates for a backward shift on two branches" },
];

pub fn registry() -> &'static [Scenario] {
    SCENARIOS
}

pub fn run_scenario(id: &str, cfg: &ReproConfig) -> Result<Report> {
    let scenario = SCENARIOS
        .iter()
        .find(|s| s.id == id)
        .ok_or_else(|| Error::Input(format!("unknown scenario {id}; see the registry")))?;
    let mut r = Recorder::default();
    let values = match id {
        "ch2_coincidence_pair" => ch2_coincidence(&mut r)?,
        "ch2_stable_product_pair" => ch2_stable(&mut r)?,
        "ch2_bilateral_half_shift" => ch2_half_shift(&mut r)?,
        "ch3_banach_dependent" => ch3_banach(&mut r)?,
        "ch3_no_cesaro" => ch3_no_cesaro(&mut r)?,
        "ch3_not_power_bounded" => ch3_not_power_bounded(&mut r)?,
        "ch3_3x3_counterexample" => ch3_three(&mut r)?,
        "ch3_2x2_harmonic" => ch3_harmonic(&mut r, cfg)?,
        "ch3_trace_law" => ch3_trace(&mut r, cfg)?,
        "ch4_block_unishift" => ch4_block(&mut r, cfg)?,
        "ch4_diag_cluster" => ch4_cluster(&mut r)?,
        "ch4_shields_single_defect" => ch4_shields(&mut r)?,
        "ch5_counterexample" => ch5(&mut r, cfg)?,
        "ch6_binary_tree_cnu" => ch6_binary(&mut r)?,
        "ch6_leaf_tree" => ch6_leaf(&mut r)?,
        "ch6_tilde_tree" => ch6_tilde(&mut r)?,
        "ch6_tree_invariants" => ch6_invariants(&mut r, cfg)?,
        "ch6_backward_cyclic" => ch6_cyclic(&mut r, cfg)?,
        _ => unreachable!("registry lookup"),
    };
    let pass = r.checks.iter().all(|c| c.pass);
    Ok(Report {
        scenario: id.into(),
        description: scenario.description.into(),
        config: *cfg,
        values,
        checks: r.checks,
        pass,
    })
}

#[derive(Default)]
struct Recorder {
    checks: Vec<Check>,
}

impl Recorder {
    fn check(&mut self, name: &str, provenance: Provenance, expected: impl ToString, observed: impl ToString, pass: bool) {
        self.checks.push(Check {
            name: name.into(),
            provenance,
            expected: expected.to_string(),
            observed: observed.to_string(),
            pass,
        });
    }
}

fn exact_at(op: &LazyOperator, u: &BasisIndex) -> Result<Rational> {
    asymptotic_diag_value(op, u, 0)?
        .exact
        .ok_or_else(|| Error::Unknown(format!("no exact asymptotic value at {u}")))
}

/// Horizon of the power-sequence cross-checks.
const GRAM_HORIZON: usize = 400;

fn ch2_coincidence(r: &mut Recorder) -> Result<Value> {
    let ex = paper_example("ch2_coincidence_pair")?;
    let (t1, t2, p) = (ex.operator("T1")?, ex.operator("T2")?, ex.operator("T2T1")?);
    let (mut agree, mut formula, mut product_one, mut gram_gap) = (true, true, true, 0.0_f64);
    let mut samples = Vec::new();
    for i in 1..=5 {
        for j in 1..=10 {
            let u = BasisIndex::Pair(i, j);
            let (a1, a2) = (exact_at(t1, &u)?, exact_at(t2, &u)?);
            let expected = if j == 1 { ratio(1, 2) } else { ratio(j - 1, j) };
            agree &= a1 == a2;
            formula &= a1 == expected;
            gram_gap = gram_gap.max((t1.gram_diag(&u, GRAM_HORIZON)? - to_f64(&a1)).abs());
            gram_gap = gram_gap.max((t2.gram_diag(&u, GRAM_HORIZON)? - to_f64(&a2)).abs());
            if j == 1 {
                product_one &= exact_at(p, &u)? == int(1) && p.gram_diag(&u, GRAM_HORIZON)? == 1.0;
            }
            samples.push(json!({"i": i, "j": j, "A_T1": a1.to_string(), "A_T2": a2.to_string()}));
        }
    }
    r.check("A_T1 = A_T2 on 50 basis vectors", Provenance::Paper, "equal", agree, agree);
    r.check("A_T1 e_{i,j} = 1/2 at j = 1, (j−1)/j otherwise", Provenance::Paper, "exact", formula, formula);
    r.check("A_{T2T1} e_{i,1} = 1", Provenance::Paper, 1, product_one, product_one);
    let allowed = 3.0 / GRAM_HORIZON as f64;
    r.check("||Tⁿe_u||² approaches A at n = 400", Provenance::Derived, format!("<= {allowed}"), gram_gap, gram_gap <= allowed);
    Ok(json!({"samples": samples, "gram_gap": gram_gap}))
}

fn ch2_stable(r: &mut Recorder) -> Result<Value> {
    let ex = paper_example("ch2_stable_product_pair")?;
    let (t1, t2, p) = (ex.operator("T1")?, ex.operator("T2")?, ex.operator("T2T1")?);
    let (mut formula, mut nilpotent, mut gram_gap, mut t1_decay) = (true, true, 0.0_f64, 0.0_f64);
    let mut samples = Vec::new();
    for i in 1..=5 {
        for j in 1..=10 {
            let u = BasisIndex::Pair(i, j);
            let a = exact_at(p, &u)?;
            formula &= a == ratio(i, i + 1);
            nilpotent &= t2.apply_power(&FinVec::basis(u.clone()), j as usize)?.is_empty();
            gram_gap = gram_gap.max((p.gram_diag(&u, GRAM_HORIZON)? - to_f64(&a)).abs());
            t1_decay = t1_decay.max(t1.gram_diag(&u, 2000)?);
            samples.push(json!({"i": i, "j": j, "A_T2T1": a.to_string()}));
        }
    }
    r.check("A_{T2T1} e_{i,j} = i/(i+1)", Provenance::Paper, "exact", formula, formula);
    r.check("T2^j e_{i,j} = 0", Provenance::Trivial, "0", nilpotent, nilpotent);
    r.check("||T1^2000 e_u||² below 1e-12", Provenance::Derived, "< 1e-12", t1_decay, t1_decay < 1e-12);
    let allowed = 3.0 / GRAM_HORIZON as f64;
    r.check("||(T2T1)ⁿe_u||² approaches A at n = 400", Provenance::Derived, format!("<= {allowed}"), gram_gap, gram_gap <= allowed);
    Ok(json!({"samples": samples}))
}

fn half_shift_gen() -> WeightGen {
    WeightGen::new(WeightRule::TableThenConstant { start: 1, prefix: vec![], tail: 1.0, head: Some(0.5) })
}

fn ch2_half_shift(r: &mut Recorder) -> Result<Value> {
    let gen = half_shift_gen();
    let op = bilateral_shift(gen.clone());
    let line = bilateral_line(gen)?;
    let (mut formula, mut tree_agrees) = (true, true);
    let mut values = Vec::new();
    for k in -20i64..=20 {
        let a = exact_at(&op, &BasisIndex::Int(k))?;
        let expected = if k > 0 { int(1) } else { num_traits::pow(ratio(1, 2), (2 - 2 * k) as usize) };
        formula &= a == expected;
        tree_agrees &= line.alpha(&line_vertex(k))?.exact.as_ref() == Some(&a);
        values.push(json!({"k": k, "A": a.to_string()}));
    }
    r.check("A e_k = 1 (k > 0), (1/2)^{−2k+2} (k <= 0)", Provenance::Paper, "exact on −20..=20", formula, formula);
    r.check("tree line α agrees", Provenance::Derived, "equal", tree_agrees, tree_agrees);
    Ok(json!({"values": values}))
}

fn ch3_banach(r: &mut Recorder) -> Result<Value> {
    let k = 3usize.pow(10);
    let seq = ch3_sequence("ch3_banach_dependent", k + 10)?;
    let gen = WeightGen::new(WeightRule::RunIndicator { base: 3, high: 2.0 });
    let same = seq.iter().enumerate().all(|(n, &x)| x == gen.value(n as i64 + 1));
    r.check("diagonal sequence equals RunIndicator(3, 2)", Provenance::Derived, "equal", same, same);
    let rep = banach_range_bounds(&seq, k, 10, &[k])?;
    let mean = rep.mean_at(k).expect("checkpoint requested");
    r.check("Cesàro mean at 3^10 within 0.02 of 1", Provenance::Paper, "|mean − 1| <= 0.02", mean, (mean - 1.0).abs() <= 0.02);
    let plateaus = rep.plateaus_at_max(2.0);
    r.check("constant-2 windows of every length <= 10", Provenance::Paper, "found", plateaus, plateaus);
    let lows = rep.plateaus_at_min(1.0);
    r.check("constant-1 windows of every length <= 10", Provenance::Paper, "found", lows, lows);
    Ok(serde_json::to_value(&rep).map_err(|e| Error::Input(e.to_string()))?)
}

fn ch3_no_cesaro(r: &mut Recorder) -> Result<Value> {
    let seq = ch3_sequence("ch3_no_cesaro", 2 * 3usize.pow(8))?;
    let mut gaps = Vec::new();
    for l in 1..=8u32 {
        let p = 3usize.pow(l);
        let (lo, hi) = (cesaro_mean_at(&seq, p)?, cesaro_mean_at(&seq, 2 * p)?);
        gaps.push(json!({"l": l, "mean_3l": lo, "mean_2x3l": hi, "gap": hi - lo}));
    }
    let gap = |l: usize| gaps[l - 1]["gap"].as_f64().expect("number");
    let run = (1..=6).any(|l| (l..l + 3).all(|m| gap(m) > 0.2));
    r.check("means at 3^l and 2·3^l differ by > 0.2 at three consecutive l", Provenance::Paper, "> 0.2", run, run);
    let m27 = cesaro_mean_at(&seq, 27)?;
    let m54 = cesaro_mean_at(&seq, 54)?;
    r.check("mean at 27", Provenance::Derived, 40.0 / 27.0, m27, m27 == 40.0 / 27.0);
    r.check("mean at 54", Provenance::Derived, 93.0 / 54.0, m54, m54 == 93.0 / 54.0);
    let bounded = seq.iter().all(|&x| x == 1.0 || x == 2.0);
    r.check("||Tⁿe_1||² ∈ {1, 2}", Provenance::Paper, "power bounded", bounded, bounded);
    Ok(json!({"checkpoints": gaps}))
}

fn ch3_not_power_bounded(r: &mut Recorder) -> Result<Value> {
    let n = 3usize.pow(12);
    let seq = ch3_sequence("ch3_not_power_bounded", n)?;
    let peak = seq.iter().cloned().fold(0.0, f64::max);
    let mean = cesaro_mean_at(&seq, n)?;
    let expected_peak = 2f64.powi(11);
    r.check("max ||Tⁿe_1||² up to 3^12 equals 2^11", Provenance::Derived, expected_peak, peak, peak == expected_peak);
    r.check("Cesàro mean at 3^12 within 0.05 of 1", Provenance::Paper, "|mean − 1| <= 0.05", mean, (mean - 1.0).abs() <= 0.05);
    let peaks: Vec<Value> = (1..=11u32)
        .map(|l| {
            let at = 3usize.pow(l) + l as usize - 1;
            json!({"l": l, "n": at, "value": seq[at - 1]})
        })
        .collect();
    let grows = peaks.iter().enumerate().all(|(i, p)| p["value"].as_f64() == Some(2f64.powi(i as i32 + 1)));
    r.check("||Tⁿe_1||² = 2^l at n = 3^l + l − 1", Provenance::Derived, "2^l", grows, grows);
    Ok(json!({"mean": mean, "peaks": peaks}))
}

/// Eigenvalues of `A_{T,C}⁻¹ + A_{T*,C}⁻¹` for the closing 3×3 example.
pub const THREE_BY_THREE_EIGS: [f64; 3] = [1.27178, 2.1285, 2.59972];

fn ch3_three(r: &mut Recorder) -> Result<Value> {
    let t = three_by_three_counterexample();
    let h = harmonic_identity_residual(&t)?;
    let max_dev = h.combined_eigs.iter().zip(THREE_BY_THREE_EIGS).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    r.check(
        "eigenvalues of A_{T,C}⁻¹ + A_{T*,C}⁻¹",
        Provenance::Paper,
        format!("{THREE_BY_THREE_EIGS:?} within 1e-3"),
        format!("{:?}", h.combined_eigs),
        max_dev <= 1e-3,
    );
    r.check("sum differs from 2I", Provenance::Paper, "> 0.1", h.residual, h.residual > 0.1);
    let trace: f64 = h.combined_eigs.iter().sum();
    r.check("trace of the sum equals 6", Provenance::Derived, 6.0, trace, (trace - 6.0).abs() < 1e-9);
    Ok(json!({"eigenvalues": h.combined_eigs, "residual": h.residual}))
}

fn ch3_harmonic(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    let mut g = rng(cfg.seed);
    let mut worst = 0.0_f64;
    for _ in 0..100 {
        let t = random_c11_2x2(&mut g, 1e4);
        worst = worst.max(harmonic_identity_residual(&t)?.residual);
    }
    r.check("max ||A⁻¹ + A_*⁻¹ − 2I|| over 100 matrices", Provenance::Paper, "<= 1e-6", worst, worst <= 1e-6);
    Ok(json!({"samples": 100, "max_residual": worst}))
}

fn ch3_trace(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    use rand::Rng;
    let mut g = rng(cfg.seed);
    let (mut ineq, mut eq, mut eq_cases) = (true, true, 0);
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..100 {
        let dim = g.random_range(2..=6);
        let peripheral = g.random_range(1..=dim);
        let sample = random_power_bounded(&mut g, dim, peripheral, 50.0);
        let law = trace_law(&cesaro_limit_spectral(&sample.t)?.a, TRACE_TOL)?;
        let slack = law.reciprocal_sum - law.rank as f64;
        worst_slack = worst_slack.max(slack);
        ineq &= slack <= 1e-6;
        if peripheral == dim {
            eq_cases += 1;
            eq &= slack.abs() <= 1e-6;
        }
    }
    r.check("Σ 1/t_j <= rank + 1e-6", Provenance::Paper, "all 100", ineq, ineq);
    r.check("equality without stable part", Provenance::Paper, format!("all {eq_cases}"), eq, eq && eq_cases > 0);
    Ok(json!({"samples": 100, "equality_cases": eq_cases, "max_slack": worst_slack}))
}

fn ch4_block(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    use rand::Rng;
    let mut g = rng(cfg.seed);
    let mut out = Vec::new();
    for preset in [BlockPreset::Dyadic, BlockPreset::RotatedHarmonic] {
        let shift = block_preset(preset, 64)?;
        let (mut holds, mut exact_ok, mut exact_count) = (true, true, 0);
        for _ in 0..20 {
            let n = g.random_range(1..=12usize);
            let x = FinVec::from_pairs((0..4).map(|_| {
                let j = g.random_range(0..8i64);
                let r = g.random_range(0..shift.dim as i64);
                (BasisIndex::Pair(j, r), c(g.random_range(-1.0..1.0), 0.0))
            }));
            let b = shift.check_bound(&x, n)?;
            holds &= b.holds;
            if let Some(e) = b.exact {
                exact_count += 1;
                exact_ok &= e;
            }
            out.push(json!({"preset": preset, "n": n, "lhs": b.lhs, "rhs": b.rhs, "exact": b.exact}));
        }
        r.check(&format!("{preset:?}: bound on 20 (x, n) pairs"), Provenance::Paper, "holds", holds, holds);
        if exact_count > 0 {
            r.check(&format!("{preset:?}: bound in rationals"), Provenance::Paper, "holds", exact_ok, exact_ok);
        }
    }
    Ok(json!({"checks": out}))
}

fn ch4_cluster(r: &mut Recorder) -> Result<Value> {
    let d = diag_cluster_shift(WeightGen::new(WeightRule::Harmonic))?;
    let (mut agree, mut bounded, mut float_gap) = (true, true, 0.0_f64);
    for l in 1..=5 {
        for m in 1..=5 {
            for n in [1usize, 3, 10] {
                let by_def = d.residual_by_definition(l, m, n).expect("exact weights");
                let by_pair = d.residual_by_pairing(l, m, n).expect("exact weights");
                agree &= by_def == by_pair;
                bounded &= by_pair <= d.bound_exact(n).expect("exact weights");
                float_gap = float_gap.max((d.residual(l, m, n)? - to_f64(&by_pair)).abs());
            }
        }
    }
    r.check("residual by definition equals α_{l,m}/α_{l,m+n} − α_{l,m}", Provenance::Derived, "exact", agree, agree);
    r.check("residual <= 1/λ_n − 1", Provenance::Paper, "exact", bounded, bounded);
    r.check("operator residual matches", Provenance::Derived, "<= 1e-12", float_gap, float_gap <= 1e-12);
    Ok(json!({"float_gap": float_gap}))
}

fn ch4_shields(r: &mut Recorder) -> Result<Value> {
    let gen = WeightGen::new(WeightRule::TableThenConstant { start: 0, prefix: vec![0.5], tail: 1.0, head: Some(1.0) });
    let rep = bilateral_similarity_report(&gen)?;
    r.check("power bounded", Provenance::Trivial, true, rep.power_bounded, rep.power_bounded);
    r.check("inf of window products", Provenance::Derived, "1/2", rep.inf_exact.to_string(), rep.inf_exact == ratio(1, 2));
    r.check("similar to a unitary", Provenance::Paper, true, rep.similar_to_unitary, rep.similar_to_unitary);
    let line = bilateral_line(gen)?;
    let flags = line.similarity_flags()?;
    r.check("tree line agrees", Provenance::Derived, true, flags.similar_to_unitary, flags.similar_to_unitary);
    Ok(serde_json::to_value(&rep).map_err(|e| Error::Input(e.to_string()))?)
}

fn ch5(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    let check = ch5_intertwining_check(50, 50)?;
    let zero = check.exact_zero_rational && check.exact_zero_f64 == check.cases;
    r.check("T₀₀Y − YT₁₁ + T₀₀V = 0 on f_{j,i}, j <= 50, |i| <= 50", Provenance::Paper, 0, check.max_residual, zero);
    let cols = ch5_column_sums(100)?;
    let within = cols.iter().all(|c| c.within_bound);
    let worst = cols.iter().map(|c| c.sum).fold(0.0, f64::max);
    r.check("column sums <= 1 + (m−2)(m+1)^{-2} <= 2", Provenance::Paper, "<= 2", worst, within);
    let mut dims = Vec::new();
    for s in 0..10u64 {
        let bt = random_mixed_triple(cfg.seed.wrapping_add(s), 1 + (s % 3) as usize, 1 + (s % 2) as usize)?;
        dims.push(injectivity_kernel(&bt, DEFAULT_RANK_TOL)?.dimension);
    }
    let nontrivial = dims.iter().all(|&d| d >= 1);
    r.check("finite mixed triples: kernel dimension >= 1", Provenance::Paper, ">= 1", format!("{dims:?}"), nontrivial);
    Ok(json!({"cases": check.cases, "max_residual": check.max_residual, "max_column_sum": worst, "kernel_dims": dims}))
}

fn ch6_binary(r: &mut Recorder) -> Result<Value> {
    let a = binary_tree_asymptotics();
    let mass = (0..64).all(|n| binary_tree_level_mass(n).is_one());
    r.check("α ≡ Σ_{Chiⁿ} ∏λ² = 2ⁿ(1/2)ⁿ = 1", Provenance::Paper, 1, mass, mass);
    let cnu = a.class == AsymptoteClass::Cnu(Count::Infinite);
    r.check("isometric asymptote is a unilateral shift", Provenance::Paper, "cnu(∞)", format!("{:?}", a.class), cnu);
    let a_zero = a.a_values.iter().all(|(_, v)| v.exact.as_ref().is_some_and(Zero::is_zero));
    r.check("a_u = 0 on every level", Provenance::Paper, 0, a_zero, a_zero);
    Ok(serde_json::to_value(&a).map_err(|e| Error::Input(e.to_string()))?)
}

fn constant(v: f64) -> WeightGen {
    WeightGen::new(WeightRule::Constant { value: v })
}

fn ch6_leaf(r: &mut Recorder) -> Result<Value> {
    let t = leaf_tree(constant(1.0), 1.0, &[1.0, 1.0], Some(TailWeights { gen: constant(1.0), start: 1 }), &[0.5, 0.5])?;
    let s = t.leaf_tree_similarity()?;
    let norms = s.g_norms == [Surd::sqrt(&int(5)), Surd::sqrt(&int(17))];
    r.check("||g_1|| = √5, ||g_2|| = √17", Provenance::Derived, "exact", norms, norms);
    let nw = s.n_weights == [Surd::sqrt(&ratio(5, 17))];
    r.check("N weight √(5/17)", Provenance::Derived, "exact", nw, nw);
    let zero = s.intertwining.exact_zero;
    r.check("X(W⊕N)* = S*X on branch and trunk samples", Provenance::Paper, 0, s.intertwining.max_residual, zero);
    let two = leaf_tree(constant(1.0), 1.0, &[1.0], None, &[1.0])?.leaf_tree_similarity()?;
    let ok = two.intertwining.exact_zero && two.cyclic == Cyclicity::Cyclic && two.n_weights.is_empty();
    r.check("k₀ = 1 with two leaves: N = 0 on ℂ¹, cyclic", Provenance::Trivial, true, ok, ok);
    Ok(serde_json::to_value(&s).map_err(|e| Error::Input(e.to_string()))?)
}

fn ch6_tilde(r: &mut Recorder) -> Result<Value> {
    let tail = |v: f64| TailWeights { gen: constant(v), start: 1 };
    let ones = tilde_tree(constant(1.0), 1.0, tail(1.0), tail(1.0))?;
    let q = ones.tilde_tree_report(30, 500)?;
    r.check("all weights 1: ratios bounded, similar", Provenance::Trivial, true, format!("{:?}", q.ratio), q.similar == Some(true));
    r.check("corank 1, Br 1", Provenance::Paper, "1, 1", format!("{}, {}", ones.tree.corank(), ones.tree.branching_index()), ones.tree.corank() == 1);
    let skew = tilde_tree(constant(1.0), 1.0, tail(0.25), tail(0.5))?;
    let q2 = skew.tilde_tree_report(30, 500)?;
    let unbounded = matches!(q2.ratio, RatioBound::Unbounded { .. });
    r.check("λ_{j'}/λ_j = 2: ratios unbounded", Provenance::Derived, "unbounded", format!("{:?}", q2.ratio), unbounded);
    let exact = q.intertwining.exact_zero && q2.intertwining.exact_zero;
    r.check("intertwining exact on basis vectors", Provenance::Paper, 0, exact, exact);
    let x = q.x_star_norm.max(q2.x_star_norm);
    r.check("||X*|span{e_k, e_k'}|| <= 2", Provenance::Paper, "<= 2", x, x <= 2.0);
    let first = |w: f64| TailWeights {
        gen: WeightGen::new(WeightRule::TableThenConstant { start: 1, prefix: vec![w], tail: 1.0, head: None }),
        start: 1,
    };
    let c1 = tilde_tree(constant(1.0), 1.0, first(0.6), first(0.8))?;
    let asym = c1.isometric_asymptote()?;
    let class_ok = asym.class == AsymptoteClass::BilateralPlus(Count::Finite(1));
    r.check("C₁· contraction: asymptote S ⊕ S⁺", Provenance::Paper, "bilateral_plus(1)", format!("{:?}", asym.class), class_ok);
    let q3 = c1.tilde_tree_report(30, 500)?;
    r.check("C₁· contraction has no cyclic vector", Provenance::Paper, "not_cyclic", format!("{:?}", q3.cyclic), q3.cyclic == Cyclicity::NotCyclic);
    let adj = c1.adjoint_cyclicity_flags()?;
    r.check("adjoint cyclic", Provenance::Paper, true, format!("{:?}", adj.adjoint_cyclic), adj.adjoint_cyclic == Some(true));
    Ok(json!({"ones": q, "skew": q2, "c1": q3}))
}

fn ch6_invariants(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    let (mut recursion, mut rows, mut corank, mut asymptotes) = (true, true, true, 0);
    for s in 0..50u64 {
        let t = random_tree_shift(cfg.seed.wrapping_add(s))?;
        for i in 0..t.tree.core_len() {
            let u = crate::lazyop::TreeVertex::Core(i);
            let mut sum = Rational::zero();
            for c in t.tree.chi(&u) {
                let (_, w) = t.weight_sq(&c)?;
                sum += w.expect("exact weights") * t.alpha(&c)?.exact.expect("exact tails");
            }
            recursion &= t.alpha(&u)?.exact == Some(sum);
        }
        match t.isometric_asymptote() {
            Ok(a) => {
                asymptotes += 1;
                rows &= a.row_sums.iter().all(|x| x.exact_one == Some(true));
            }
            Err(Error::Precondition(_)) => {}
            Err(e) => return Err(e),
        }
        corank &= corank_by_matrix_rank(&t)? as u64 == t.tree.corank();
    }
    r.check("α_u = Σ λ_v² α_v at core vertices", Provenance::Paper, "exact on 50 trees", recursion, recursion);
    r.check("Σ β² = 1 at every V' vertex", Provenance::Paper, format!("exact on {asymptotes} asymptotes"), rows, rows);
    r.check("co-rank = Br + [rooted] against matrix rank", Provenance::Paper, "50 trees", corank, corank);
    Ok(json!({"trees": 50, "asymptotes": asymptotes}))
}

fn ch6_cyclic(r: &mut Recorder, cfg: &ReproConfig) -> Result<Value> {
    let w = |j: usize, k: u64| if j == 0 { 1.0 } else { 0.5 + 1.0 / (k as f64 + 2.0) };
    let v = backward_cyclic_vector(&w, 2, cfg.truncation, cfg.depth)?;
    let within = v.certificates.iter().enumerate().all(|(m, s)| *s <= 0.5f64.powi(m as i32 + 1));
    r.check("Σ_m <= 2^{−m}", Provenance::Derived, format!("m <= {}", cfg.depth), format!("{:?}", v.certificates), within);
    let again = verify_cyclic_vector(&v.f, Arc::new(w), 2, cfg.depth)?;
    let ok = again.iter().enumerate().all(|(m, s)| *s <= 0.5f64.powi(m as i32 + 1));
    r.check("residuals recomputed from f̃ by applying B", Provenance::Derived, "<= 2^{−m}", format!("{again:?}"), ok);
    let positive = v.f.iter().all(|(_, x)| x.re > 0.0 && x.im == 0.0);
    r.check("f̃ has positive coordinates", Provenance::Trivial, true, positive, positive);
    let coords: Vec<Value> = v.f.iter().map(|(u, x)| json!([u.to_string(), x.re])).collect();
    Ok(json!({"certificates": v.certificates, "verified": again, "rescaled": v.rescaled, "support": coords}))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_contents() {
        let ids: Vec<&str> = registry().iter().map(|s| s.id).collect();
        for id in [
            "ch2_coincidence_pair",
            "ch2_stable_product_pair",
            "ch3_banach_dependent",
            "ch3_no_cesaro",
            "ch3_not_power_bounded",
            "ch5_counterexample",
            "ch6_binary_tree_cnu",
            "ch3_3x3_counterexample",
        ] {
            assert!(ids.contains(&id), "{id}");
        }
        let mut sorted = ids.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
    }

    #[test]
    fn unknown_scenario() {
        assert!(matches!(run_scenario("nope", &ReproConfig::default()), Err(Error::Input(_))));
    }

    #[test]
    fn every_scenario_passes_and_is_deterministic() {
        let cfg = ReproConfig::default();
        for s in registry() {
            let a = run_scenario(s.id, &cfg).unwrap();
            assert!(!a.checks.is_empty(), "{}", s.id);
            for c in &a.checks {
                assert!(c.pass, "{}: {} expected {} got {}", s.id, c.name, c.expected, c.observed);
            }
            if matches!(s.id, "ch3_trace_law" | "ch4_block_unishift" | "ch6_backward_cyclic") {
                let b = run_scenario(s.id, &cfg).unwrap();
                assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
            }
        }
    }
}
