//! Command-line front end for asymlab. Reports are JSON by default; `--format csv` dumps
//! the tabular part (eigenvalues, weights, checks). Exit codes: 0 pass, 1 failed check,
//! 2 input error.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use asymlab::cesaro::{
    cesaro_limit_iterative, cesaro_limit_spectral, classify_power_bounded, compare_routes, construct_c11,
    construct_l_stable, trace_law, CesaroLimit, SpectrumTarget, DEFAULT_EMPIRICAL_N, DEFAULT_MAX_N, DEFAULT_TOL,
    PERIPHERAL_BAND,
};
use asymlab::commutant::{commutant_report, BlockTripleJson, DEFAULT_RANK_TOL};
use asymlab::dirtree::{backward_cyclic_vector, corank_by_matrix_rank, verify_cyclic_vector, TreeShift};
use asymlab::lazyop::{
    adjoint_consistency, asymptotic_diag_value, bilateral_shift, finvec_from_json, finvec_to_json, paper_example,
    unilateral_shift, BasisIndex, LazyOperator, WeightGen, WeightRule, PAPER_EXAMPLES,
};
use asymlab::matkernel::{eig_hermitian, matrix_from_json, matrix_to_json, op_norm};
use asymlab::repro::{registry, run_scenario, ReproConfig};
use asymlab::{CMatrix, Error};

const SPECTRAL_TOL: f64 = 1e-8;
const RESIDUAL_TOL: f64 = 1e-8;
const TRACE_SLACK: f64 = 1e-6;
const ADJOINT_TOL: f64 = 1e-12;

#[derive(Parser)]
#[command(name = "asymlab", version, about = "Asymptotic limits of operators: numeric reports")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Convergence tolerance of the iterative routes.
    #[arg(long, global = true, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Iteration cap of the iterative routes.
    #[arg(long = "max-n", global = true, default_value_t = DEFAULT_MAX_N)]
    max_n: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Truncation K (cyclic-vector support, asymptotic horizons).
    #[arg(long, global = true, default_value_t = 2000)]
    truncation: u64,
    /// Certificate depth M.
    #[arg(long, global = true, default_value_t = 12)]
    depth: usize,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Iterative,
    Spectral,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ShiftKind {
    Unilateral,
    Bilateral,
}

#[derive(Subcommand)]
enum Cmd {
    /// Power-boundedness and the Cesàro asymptotic limit of a matrix.
    Cesaro {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Build a matrix with prescribed Cesàro limit spectrum and check the round trip.
    Construct {
        /// Target eigenvalues, e.g. `2,2/3`.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
        #[arg(long = "stable-dim", default_value_t = 0)]
        stable_dim: usize,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
    },
    /// Kernel of the commutant mapping of a block triangular matrix.
    Commutant {
        #[arg(long)]
        input: PathBuf,
    },
    /// Apply a lazy operator to a finitely supported vector.
    Lazy {
        /// Registry operator `example[:name]`.
        #[arg(long, conflicts_with = "weights")]
        op: Option<String>,
        /// WeightGen JSON file for a weighted shift.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ShiftKind::Unilateral)]
        shift: ShiftKind,
        /// Support list `[[index, [re, im]], ...]`, inline or as a file path.
        #[arg(long)]
        vector: Option<String>,
        #[arg(long, default_value_t = 1)]
        power: usize,
        /// Report `lim ⟨T^{*n}Tⁿe_u, e_u⟩` on the support of the vector.
        #[arg(long)]
        asymptotic: bool,
        /// List the registry operators.
        #[arg(long)]
        list: bool,
    },
    /// Weighted shift on a directed tree.
    Tree {
        /// Tree JSON file.
        file: Option<PathBuf>,
        #[arg(long, conflicts_with = "file")]
        input: Option<PathBuf>,
        #[arg(long)]
        analyze: bool,
        #[arg(long)]
        asymptote: bool,
        #[arg(long)]
        similarity: bool,
        /// Cyclic vector for the backward shift on branches (uses --truncation and --depth).
        #[arg(long = "cyclic-vector")]
        cyclic_vector: bool,
        /// JSON array of WeightGen, one per branch: `w_{j,k} = gen_j(k)` for `k >= 0`.
        #[arg(long)]
        branches: Option<PathBuf>,
    },
    /// Run registered reproduction scenarios.
    Repro {
        #[arg(long)]
        scenario: Vec<String>,
        #[arg(long, conflicts_with = "scenario")]
        all: bool,
        #[arg(long, conflicts_with_all = ["scenario", "all"])]
        list: bool,
    },
}

enum Failure {
    Input(String),
    Module(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Module(e)
    }
}

type Run<T> = Result<T, Failure>;

#[derive(Default)]
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

struct Outcome {
    report: Value,
    table: Table,
    pass: bool,
}

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn parse_json(text: &str, what: &str) -> Run<Value> {
    serde_json::from_str(text).map_err(|e| Failure::Input(format!("{what}: {e}")))
}

fn parse_value(s: &str) -> Run<f64> {
    let bad = || Failure::Input(format!("cannot parse value {s:?}"));
    match s.trim().split_once('/') {
        Some((p, q)) => {
            let p: f64 = p.trim().parse().map_err(|_| bad())?;
            let q: f64 = q.trim().parse().map_err(|_| bad())?;
            Ok(p / q)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

fn eigenvalues(a: &CMatrix) -> Run<Vec<f64>> {
    Ok(eig_hermitian(a)?.values)
}

fn max_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn limit_json(l: &CesaroLimit) -> Value {
    json!({
        "method": l.method,
        "limit": matrix_to_json(&l.a),
        "iterations": l.iterations,
        "residual": l.residual,
        "error_estimate": l.error_estimate,
        "warnings": l.warnings,
    })
}

fn check(name: &str, pass: bool, detail: Value) -> Value {
    json!({ "name": name, "pass": pass, "detail": detail })
}

fn all_pass(checks: &[Value]) -> bool {
    checks.iter().all(|c| c["pass"] == Value::Bool(true))
}

fn cesaro(c: &Common, input: &Path, method: MethodArg) -> Run<Outcome> {
    let t = matrix_from_json(&read(input)?)?;
    let class = classify_power_bounded(&t, PERIPHERAL_BAND, DEFAULT_EMPIRICAL_N)?;
    if !class.bounded {
        let report = json!({
            "input": input, "classification": class,
            "checks": [check("power_bounded", false, json!(null))], "pass": false,
        });
        return Ok(Outcome { report, table: Table::default(), pass: false });
    }
    let mut checks = Vec::new();
    let (limit, routes) = match method {
        MethodArg::Iterative => {
            let l = cesaro_limit_iterative(&t, c.tol, c.max_n)?;
            (l.a.clone(), vec![limit_json(&l)])
        }
        MethodArg::Spectral => {
            let l = cesaro_limit_spectral(&t)?;
            (l.a.clone(), vec![limit_json(&l)])
        }
        MethodArg::Both => {
            let r = compare_routes(&t, c.tol, c.max_n)?;
            checks.push(check(
                "routes_agree",
                r.agree,
                json!({ "difference": r.difference, "allowed": r.allowed }),
            ));
            (r.spectral.a.clone(), vec![limit_json(&r.iterative), limit_json(&r.spectral)])
        }
    };
    let eigs = eigenvalues(&limit)?;
    let law = trace_law(&limit, 1e-6)?;
    checks.push(check(
        "trace_law",
        law.reciprocal_sum <= law.rank as f64 + TRACE_SLACK,
        json!({ "reciprocal_sum": law.reciprocal_sum, "rank": law.rank }),
    ));
    let pass = all_pass(&checks);
    let report = json!({
        "input": input,
        "classification": class,
        "limit": matrix_to_json(&limit),
        "eigenvalues": eigs,
        "trace_law": law,
        "routes": routes,
        "checks": checks,
        "pass": pass,
    });
    let table = Table {
        header: vec!["index", "eigenvalue"],
        rows: eigs.iter().enumerate().map(|(i, v)| vec![i.to_string(), v.to_string()]).collect(),
    };
    Ok(Outcome { report, table, pass })
}

fn construct(c: &Common, values: &[String], stable_dim: usize, method: MethodArg) -> Run<Outcome> {
    let values: Vec<f64> = values.iter().map(|s| parse_value(s)).collect::<Run<_>>()?;
    let target = SpectrumTarget::new(values.clone(), stable_dim)?;
    let t = if stable_dim == 0 { construct_c11(&target)?.t } else { construct_l_stable(&target)?.t };
    let mut expected: Vec<f64> = std::iter::repeat_n(0.0, stable_dim).chain(values).collect();
    expected.sort_by(f64::total_cmp);
    let mut checks = Vec::new();
    let mut columns: Vec<(&'static str, Vec<f64>)> = Vec::new();
    if method != MethodArg::Iterative {
        let eigs = eigenvalues(&cesaro_limit_spectral(&t)?.a)?;
        let gap = max_gap(&eigs, &expected);
        checks.push(check("spectral", gap <= SPECTRAL_TOL, json!({ "gap": gap, "allowed": SPECTRAL_TOL })));
        columns.push(("spectral", eigs));
    }
    if method != MethodArg::Spectral {
        let l = cesaro_limit_iterative(&t, c.tol, c.max_n)?;
        let eigs = eigenvalues(&l.a)?;
        let gap = max_gap(&eigs, &expected);
        checks.push(check(
            "iterative",
            gap <= c.tol,
            json!({ "gap": gap, "allowed": c.tol, "iterations": l.iterations }),
        ));
        columns.push(("iterative", eigs));
    }
    let pass = all_pass(&checks);
    let mut header = vec!["index", "target"];
    header.extend(columns.iter().map(|(n, _)| *n));
    let rows = (0..expected.len())
        .map(|i| {
            let mut row = vec![i.to_string(), expected[i].to_string()];
            row.extend(columns.iter().map(|(_, v)| v[i].to_string()));
            row
        })
        .collect();
    let report = json!({
        "target": target,
        "t": matrix_to_json(&t),
        "t_norm": op_norm(&t),
        "eigenvalues": columns.iter().map(|(n, v)| (n.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
        "checks": checks,
        "pass": pass,
    });
    Ok(Outcome { report, table: Table { header, rows }, pass })
}

fn commutant(c: &Common, input: &Path) -> Run<Outcome> {
    let text = read(input)?;
    let parsed: BlockTripleJson =
        serde_json::from_str(&text).map_err(|e| Failure::Input(format!("triple JSON: {e}")))?;
    let bt = parsed.to_triple(c.tol.min(1e-9))?;
    let r = commutant_report(&bt, DEFAULT_RANK_TOL)?;
    let pass = r.max_residual <= RESIDUAL_TOL;
    let table = Table {
        header: vec!["basis", "norm_c00", "norm_c01"],
        rows: r
            .basis_norms
            .iter()
            .enumerate()
            .map(|(i, [a, b])| vec![i.to_string(), a.to_string(), b.to_string()])
            .collect(),
    };
    let report = json!({ "input": input, "report": r, "pass": pass });
    Ok(Outcome { report, table, pass })
}

fn registry_operator(spec: &str) -> Run<(String, LazyOperator)> {
    let (example, name) = match spec.split_once(':') {
        Some((e, n)) => (e, Some(n)),
        None => (spec, None),
    };
    let ex = paper_example(example)?;
    let (n, op) = match name {
        Some(n) => (n.to_string(), ex.operator(n)?.clone()),
        None => ex.operators.first().cloned().ok_or_else(|| Failure::Input(format!("{example} has no operators")))?,
    };
    Ok((format!("{example}:{n}"), op))
}

#[allow(clippy::too_many_arguments)]
fn lazy(
    c: &Common,
    op: Option<&str>,
    weights: Option<&Path>,
    shift: ShiftKind,
    vector: Option<&str>,
    power: usize,
    asymptotic: bool,
    list: bool,
) -> Run<Outcome> {
    if list {
        let mut rows = Vec::new();
        let mut entries = Vec::new();
        for name in PAPER_EXAMPLES {
            let ex = paper_example(name)?;
            let ops: Vec<&str> = ex.operators.iter().map(|(n, _)| n.as_str()).collect();
            rows.extend(ops.iter().map(|o| vec![name.to_string(), o.to_string()]));
            entries.push(json!({ "example": name, "description": ex.description, "operators": ops }));
        }
        let table = Table { header: vec!["example", "operator"], rows };
        return Ok(Outcome { report: json!({ "examples": entries, "pass": true }), table, pass: true });
    }
    let (label, t) = match (op, weights) {
        (Some(spec), _) => registry_operator(spec)?,
        (None, Some(path)) => {
            let gen: WeightGen = serde_json::from_str(&read(path)?)
                .map_err(|e| Failure::Input(format!("WeightGen JSON: {e}")))?;
            gen.rule.validate()?;
            match shift {
                ShiftKind::Unilateral => ("unilateral".to_string(), unilateral_shift(gen, 1)),
                ShiftKind::Bilateral => ("bilateral".to_string(), bilateral_shift(gen)),
            }
        }
        (None, None) => return Err(Failure::Input("give --op or --weights".into())),
    };
    let vector = vector.ok_or_else(|| Failure::Input("--vector is required".into()))?;
    let text = if Path::new(vector).is_file() { read(Path::new(vector))? } else { vector.to_string() };
    let x = finvec_from_json(&parse_json(&text, "vector JSON")?)?;
    let image = t.apply_power(&x, power)?;
    let support: Vec<BasisIndex> = x.iter().map(|(u, _)| u.clone()).collect();
    let image_support: Vec<BasisIndex> = image.iter().map(|(u, _)| u.clone()).collect();
    let defect = adjoint_consistency(&t, &support, &image_support)?;
    let mut checks = vec![check("adjoint_consistency", defect <= ADJOINT_TOL, json!({ "defect": defect }))];
    let asymptotics = if asymptotic {
        let horizon = usize::try_from(c.truncation).unwrap_or(usize::MAX);
        let values = support
            .iter()
            .map(|u| Ok(json!({ "index": u.to_string(), "value": asymptotic_diag_value(&t, u, horizon)? })))
            .collect::<Run<Vec<_>>>()?;
        checks.push(check("asymptotic_values", true, json!(null)));
        Some(values)
    } else {
        None
    };
    let pass = all_pass(&checks);
    let table = Table {
        header: vec!["index", "re", "im"],
        rows: image.iter().map(|(u, z)| vec![u.to_string(), z.re.to_string(), z.im.to_string()]).collect(),
    };
    let report = json!({
        "operator": label,
        "power": power,
        "vector": finvec_to_json(&x),
        "image": finvec_to_json(&image),
        "image_norm": image.norm(),
        "asymptotic": asymptotics,
        "checks": checks,
        "pass": pass,
    });
    Ok(Outcome { report, table, pass })
}

fn default_branches() -> Vec<WeightGen> {
    vec![
        WeightGen::new(WeightRule::Constant { value: 1.0 }),
        WeightGen::new(WeightRule::Harmonic),
    ]
}

struct TreeFlags {
    analyze: bool,
    asymptote: bool,
    similarity: bool,
    cyclic_vector: bool,
}

fn not_applicable(e: Error) -> Value {
    json!({ "not_applicable": e.to_string() })
}

fn tree(c: &Common, input: Option<&Path>, flags: TreeFlags, branches: Option<&Path>) -> Run<Outcome> {
    let mut report = serde_json::Map::new();
    let mut checks = Vec::new();
    let mut table = Table::default();
    let any = flags.analyze || flags.asymptote || flags.similarity || flags.cyclic_vector;
    let shift = match input {
        Some(p) => Some(TreeShift::from_json(&parse_json(&read(p)?, "tree JSON")?)?),
        None if flags.cyclic_vector && !(flags.analyze || flags.asymptote || flags.similarity) => None,
        None => return Err(Failure::Input("a tree JSON file is required".into())),
    };
    if let Some(s) = &shift {
        report.insert("input".into(), json!(input));
        if flags.analyze || !any {
            let tr = &s.tree;
            let corank = tr.corank();
            let by_rank = corank_by_matrix_rank(s)?;
            checks.push(check(
                "corank_matches_matrix_rank",
                corank == by_rank as u64,
                json!({ "formula": corank, "matrix_rank": by_rank }),
            ));
            let mut alpha = Vec::new();
            for i in 0..tr.core_len() {
                let v = asymlab::lazyop::TreeVertex::Core(i);
                let a = s.alpha(&v)?;
                let w = if tr.parent(&v).is_some() { Some(s.weight(&v)?) } else { None };
                table.rows.push(vec![
                    tr.name(&v),
                    tr.level(&v).to_string(),
                    w.map_or(String::new(), |w| w.to_string()),
                    a.value.to_string(),
                ]);
                alpha.push(json!({ "vertex": tr.name(&v), "level": tr.level(&v), "alpha": a }));
            }
            table.header = vec!["vertex", "level", "weight", "alpha"];
            report.insert(
                "analysis".into(),
                json!({
                    "core_vertices": tr.core_len(),
                    "tails": tr.tail_count(),
                    "rooted": tr.root().is_some(),
                    "root": tr.root().map(|r| tr.name(&r)),
                    "leaves": tr.leaves().iter().map(|v| tr.name(v)).collect::<Vec<_>>(),
                    "branching_index": tr.branching_index(),
                    "corank": corank,
                    "norm": s.norm(),
                    "contraction": s.is_contraction(),
                    "alpha": alpha,
                    "adjoint_cyclicity": s.adjoint_cyclicity_flags().map_or_else(not_applicable, |f| json!(f)),
                }),
            );
        }
        if flags.asymptote {
            let a = s.isometric_asymptote()?;
            let rows_ok = a.row_sums.iter().all(|r| r.exact_one.unwrap_or(false) || (r.value - 1.0).abs() <= 1e-12);
            checks.push(check("row_sums_one", rows_ok, json!(a.row_sums.len())));
            let dual = if s.tree.up_ray {
                let d = c.depth as i64;
                s.dual_isometric_asymptote(-d..=d).map_or_else(not_applicable, |x| json!(x))
            } else {
                Value::Null
            };
            report.insert("asymptote".into(), json!({ "isometric": a, "dual": dual }));
        }
        if flags.similarity {
            let horizon = usize::try_from(c.truncation).unwrap_or(usize::MAX);
            report.insert(
                "similarity".into(),
                json!({
                    "flags": s.similarity_flags().map_or_else(not_applicable, |x| json!(x)),
                    "leaf_tree": s.leaf_tree_similarity().map_or_else(not_applicable, |x| json!(x)),
                    "tilde_tree": s.tilde_tree_report(c.depth.max(1), horizon)
                        .map_or_else(not_applicable, |x| json!(x)),
                }),
            );
        }
    }
    if flags.cyclic_vector {
        let gens = match branches {
            Some(p) => serde_json::from_str::<Vec<WeightGen>>(&read(p)?)
                .map_err(|e| Failure::Input(format!("branch weights JSON: {e}")))?,
            None => default_branches(),
        };
        for g in &gens {
            g.rule.validate()?;
        }
        let j = gens.len();
        let gens = Arc::new(gens);
        let g1 = gens.clone();
        let w = move |jj: usize, k: u64| g1[jj].value(k as i64);
        let cv = backward_cyclic_vector(&w, j, c.truncation, c.depth)?;
        let verified = verify_cyclic_vector(&cv.f, Arc::new(w), j, c.depth)?;
        let bound = |i: usize| 0.5_f64.powi(i as i32 + 1);
        let ok = cv.certificates.iter().zip(&verified).enumerate().all(|(i, (s, v))| *s <= bound(i) && *v <= bound(i));
        checks.push(check("certificates", ok, json!({ "depth": c.depth })));
        if table.header.is_empty() {
            table.header = vec!["m", "bound", "certificate", "verified"];
            table.rows = (0..cv.certificates.len())
                .map(|i| {
                    vec![
                        (i + 1).to_string(),
                        bound(i).to_string(),
                        cv.certificates[i].to_string(),
                        verified[i].to_string(),
                    ]
                })
                .collect();
        }
        report.insert(
            "cyclic_vector".into(),
            json!({ "branches": *gens, "truncation": c.truncation, "vector": cv, "verified": verified }),
        );
    }
    let pass = all_pass(&checks);
    report.insert("checks".into(), Value::Array(checks));
    report.insert("pass".into(), json!(pass));
    Ok(Outcome { report: Value::Object(report), table, pass })
}

fn repro(c: &Common, scenario: &[String], all: bool, list: bool) -> Run<Outcome> {
    if list || (scenario.is_empty() && !all) {
        let rows = registry().iter().map(|s| vec![s.id.to_string(), s.description.to_string()]).collect();
        return Ok(Outcome {
            report: json!({ "scenarios": registry(), "pass": true }),
            table: Table { header: vec!["id", "description"], rows },
            pass: true,
        });
    }
    let cfg = ReproConfig { seed: c.seed, tol: c.tol, max_n: c.max_n, truncation: c.truncation, depth: c.depth };
    let ids: Vec<String> =
        if all { registry().iter().map(|s| s.id.to_string()).collect() } else { scenario.to_vec() };
    let reports = ids.iter().map(|id| run_scenario(id, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let pass = reports.iter().all(|r| r.pass);
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(|k| {
                vec![
                    r.scenario.clone(),
                    k.name.clone(),
                    json!(k.provenance).as_str().unwrap_or_default().to_string(),
                    k.expected.clone(),
                    k.observed.clone(),
                    k.pass.to_string(),
                ]
            })
        })
        .collect();
    let table = Table { header: vec!["scenario", "check", "provenance", "expected", "observed", "pass"], rows };
    let report = if reports.len() == 1 { json!(reports[0]) } else { json!({ "reports": reports, "pass": pass }) };
    Ok(Outcome { report, table, pass })
}

fn validate(c: &Common) -> Run<()> {
    if !(c.tol.is_finite() && c.tol > 0.0) {
        return Err(Failure::Input(format!("--tol must be positive, got {}", c.tol)));
    }
    if c.max_n == 0 || c.truncation == 0 || c.depth == 0 {
        return Err(Failure::Input("--max-n, --truncation and --depth must be positive".into()));
    }
    Ok(())
}

fn run(cli: &Cli) -> Run<Outcome> {
    let c = &cli.common;
    validate(c)?;
    match &cli.cmd {
        Cmd::Cesaro { input, method } => cesaro(c, input, *method),
        Cmd::Construct { values, stable_dim, method } => construct(c, values, *stable_dim, *method),
        Cmd::Commutant { input } => commutant(c, input),
        Cmd::Lazy { op, weights, shift, vector, power, asymptotic, list } => lazy(
            c,
            op.as_deref(),
            weights.as_deref(),
            *shift,
            vector.as_deref(),
            *power,
            *asymptotic,
            *list,
        ),
        Cmd::Tree { file, input, analyze, asymptote, similarity, cyclic_vector, branches } => tree(
            c,
            file.as_deref().or(input.as_deref()),
            TreeFlags {
                analyze: *analyze,
                asymptote: *asymptote,
                similarity: *similarity,
                cyclic_vector: *cyclic_vector,
            },
            branches.as_deref(),
        ),
        Cmd::Repro { scenario, all, list } => repro(c, scenario, *all, *list),
    }
}

fn render(out: &Outcome, format: Format) -> Result<String, String> {
    match format {
        Format::Json => serde_json::to_string_pretty(&out.report).map(|s| s + "\n").map_err(|e| e.to_string()),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            if !out.table.header.is_empty() {
                w.write_record(&out.table.header).map_err(|e| e.to_string())?;
            }
            for row in &out.table.rows {
                w.write_record(row).map_err(|e| e.to_string())?;
            }
            let bytes = w.into_inner().map_err(|e| e.to_string())?;
            String::from_utf8(bytes).map_err(|e| e.to_string())
        }
    }
}

fn emit(text: &str, output: Option<&Path>) -> std::io::Result<()> {
    match output {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = match render(&out, cli.common.format) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            if let Err(e) = emit(&text, cli.common.output.as_deref()) {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
            if out.pass {
                ExitCode::SUCCESS
            } else {
                eprintln!("check failed");
                ExitCode::from(1)
            }
        }
        Err(Failure::Input(msg)) => {
            eprintln!("input error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Module(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
