//! Weighted shifts on directed trees: a finite core with unary down-tails and an optional
//! unary up-ray. Asymptotic limits, isometric asymptotes, similarity and cyclicity.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{from_f64, square_of, to_f64, Rational, Surd};
use crate::lazyop::{
    AsymptoticValue, BasisIndex, BasisMap, DiagOracle, FinVec, LazyOperator, Route,
    TailKind, TailProduct, TreeVertex, Universe, WeightGen, WeightRule,
};
use crate::matkernel::{from_real_rows, op_norm, C64};

/// Slack allowed when comparing `||S||²` with 1.
pub const CONTRACTION_TOL: f64 = 1e-12;

/// Positions sampled along tails when checking weights.
const WEIGHT_SAMPLES: u64 = 256;

/// Finite cardinality or `∞`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Count {
    Finite(u64),
    Infinite,
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Infinite => write!(f, "∞"),
        }
    }
}

/// Directed tree with core vertices `Core(0..n)`, tails `Tail { tail, pos >= 1 }` hanging below
/// their attach vertex, and, when rootless, the up-ray `Up(k)`, `k >= 1`, above the top core vertex.
#[derive(Debug, Clone)]
pub struct DirectedTree {
    pub names: Vec<String>,
    parent: Vec<Option<u32>>,
    children: Vec<Vec<u32>>,
    tail_attach: Vec<u32>,
    tails_at: Vec<Vec<u32>>,
    depth: Vec<i64>,
    top: u32,
    pub up_ray: bool,
}

impl DirectedTree {
    pub fn new(names: Vec<String>, edges: &[(u32, u32)], tail_attach: Vec<u32>, up_ray: bool) -> Result<Self> {
        let n = names.len();
        if n == 0 {
            return Err(Error::Input("tree needs at least one core vertex".into()));
        }
        let mut parent = vec![None; n];
        let mut children = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(Error::Input(format!("edge ({u}, {v}) leaves the vertex set")));
            }
            if u == v {
                return Err(Error::Input(format!("loop at {}", names[u as usize])));
            }
            if parent[v as usize].replace(u).is_some() {
                return Err(Error::Input(format!("{} has two parents", names[v as usize])));
            }
            children[u as usize].push(v);
        }
        let tops: Vec<u32> = (0..n as u32).filter(|&v| parent[v as usize].is_none()).collect();
        let top = match tops.as_slice() {
            [t] => *t,
            [] => return Err(Error::Input("core contains a circuit".into())),
            _ => return Err(Error::Input("core is not connected".into())),
        };
        let mut depth = vec![-1i64; n];
        depth[top as usize] = 0;
        let mut queue = VecDeque::from([top]);
        let mut seen = 1;
        while let Some(u) = queue.pop_front() {
            for &c in &children[u as usize] {
                depth[c as usize] = depth[u as usize] + 1;
                seen += 1;
                queue.push_back(c);
            }
        }
        if seen != n {
            return Err(Error::Input("core is not connected or contains a circuit".into()));
        }
        let mut tails_at = vec![Vec::new(); n];
        for (t, &a) in tail_attach.iter().enumerate() {
            if a as usize >= n {
                return Err(Error::Input(format!("tail {t} attaches outside the core")));
            }
            tails_at[a as usize].push(t as u32);
        }
        for c in &mut children {
            c.sort_unstable();
        }
        Ok(DirectedTree { names, parent, children, tail_attach, tails_at, depth, top, up_ray })
    }

    pub fn core_len(&self) -> u32 {
        self.names.len() as u32
    }

    pub fn tail_count(&self) -> u32 {
        self.tail_attach.len() as u32
    }

    pub fn top(&self) -> TreeVertex {
        TreeVertex::Core(self.top)
    }

    pub fn root(&self) -> Option<TreeVertex> {
        (!self.up_ray).then(|| self.top())
    }

    pub fn contains(&self, v: &TreeVertex) -> bool {
        match *v {
            TreeVertex::Core(i) => i < self.core_len(),
            TreeVertex::Tail { tail, pos } => tail < self.tail_count() && pos >= 1,
            TreeVertex::Up(k) => self.up_ray && k >= 1,
        }
    }

    pub fn check(&self, v: &TreeVertex) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::Universe { index: BasisIndex::TreeV(v.clone()).to_string(), universe: "tree".into() })
        }
    }

    pub fn name(&self, v: &TreeVertex) -> String {
        match *v {
            TreeVertex::Core(i) => self.names[i as usize].clone(),
            TreeVertex::Tail { tail, pos } => format!("t{tail}:{pos}"),
            TreeVertex::Up(k) => format!("up:{k}"),
        }
    }

    pub fn parent(&self, v: &TreeVertex) -> Option<TreeVertex> {
        match *v {
            TreeVertex::Core(i) => match self.parent[i as usize] {
                Some(p) => Some(TreeVertex::Core(p)),
                None => self.up_ray.then_some(TreeVertex::Up(1)),
            },
            TreeVertex::Tail { tail, pos } => Some(if pos == 1 {
                TreeVertex::Core(self.tail_attach[tail as usize])
            } else {
                TreeVertex::Tail { tail, pos: pos - 1 }
            }),
            TreeVertex::Up(k) => Some(TreeVertex::Up(k + 1)),
        }
    }

    pub fn chi(&self, v: &TreeVertex) -> Vec<TreeVertex> {
        match *v {
            TreeVertex::Core(i) => self.children[i as usize]
                .iter()
                .map(|&c| TreeVertex::Core(c))
                .chain(self.tails_at[i as usize].iter().map(|&t| TreeVertex::Tail { tail: t, pos: 1 }))
                .collect(),
            TreeVertex::Tail { tail, pos } => vec![TreeVertex::Tail { tail, pos: pos + 1 }],
            TreeVertex::Up(1) => vec![self.top()],
            TreeVertex::Up(k) => vec![TreeVertex::Up(k - 1)],
        }
    }

    pub fn par_k(&self, v: &TreeVertex, k: usize) -> Result<TreeVertex> {
        self.check(v)?;
        let mut u = v.clone();
        for _ in 0..k {
            u = self
                .parent(&u)
                .ok_or_else(|| Error::Precondition(format!("{} has no parent", self.name(&u))))?;
        }
        Ok(u)
    }

    pub fn chi_n(&self, v: &TreeVertex, n: usize) -> Result<Vec<TreeVertex>> {
        self.check(v)?;
        let mut layer = vec![v.clone()];
        for _ in 0..n {
            layer = layer.iter().flat_map(|u| self.chi(u)).collect();
        }
        Ok(layer)
    }

    /// `⋃_{j<=n} Chi^j(par^j(v))`, stopping where `par^j` is undefined.
    pub fn gen_n(&self, v: &TreeVertex, n: usize) -> Result<Vec<TreeVertex>> {
        self.check(v)?;
        let mut out = Vec::new();
        let mut anc = Some(v.clone());
        for j in 0..=n {
            let Some(a) = anc else { break };
            out.extend(self.chi_n(&a, j)?);
            anc = self.parent(&a);
        }
        out.sort();
        out.dedup();
        Ok(out)
    }

    /// Level index: the top core vertex is on level 0 and children are one level lower.
    pub fn level(&self, v: &TreeVertex) -> i64 {
        match *v {
            TreeVertex::Core(i) => self.depth[i as usize],
            TreeVertex::Tail { tail, pos } => self.depth[self.tail_attach[tail as usize] as usize] + pos as i64,
            TreeVertex::Up(k) => -(k as i64),
        }
    }

    /// All vertices on level `l`.
    pub fn level_set(&self, l: i64) -> Vec<TreeVertex> {
        let mut out: Vec<TreeVertex> =
            (0..self.core_len()).filter(|&i| self.depth[i as usize] == l).map(TreeVertex::Core).collect();
        for (t, &a) in self.tail_attach.iter().enumerate() {
            let pos = l - self.depth[a as usize];
            if pos >= 1 {
                out.push(TreeVertex::Tail { tail: t as u32, pos: pos as u64 });
            }
        }
        if self.up_ray && l < 0 {
            out.push(TreeVertex::Up((-l) as u64));
        }
        out
    }

    pub fn leaves(&self) -> Vec<TreeVertex> {
        (0..self.core_len())
            .filter(|&i| self.children[i as usize].is_empty() && self.tails_at[i as usize].is_empty())
            .map(TreeVertex::Core)
            .collect()
    }

    pub fn out_degree(&self, i: u32) -> usize {
        self.children[i as usize].len() + self.tails_at[i as usize].len()
    }

    /// `Σ (#Chi(u) − 1)` over non-leaves; only core vertices can branch.
    pub fn branching_index(&self) -> u64 {
        (0..self.core_len()).map(|i| self.out_degree(i).saturating_sub(1) as u64).sum()
    }

    /// `dim (ran S)^⊥`: `Br + 1` with a root, `Br` without.
    pub fn corank(&self) -> u64 {
        self.branching_index() + u64::from(!self.up_ray)
    }

    /// Core vertices ordered parents first.
    fn core_order(&self) -> Vec<u32> {
        let mut order: Vec<u32> = (0..self.core_len()).collect();
        order.sort_by_key(|&i| self.depth[i as usize]);
        order
    }

    pub fn core_children(&self, i: u32) -> &[u32] {
        &self.children[i as usize]
    }

    pub fn tails_at(&self, i: u32) -> &[u32] {
        &self.tails_at[i as usize]
    }

    pub fn tail_attach(&self, t: u32) -> u32 {
        self.tail_attach[t as usize]
    }
}

/// Limit value with interval and, when available, its exact rational form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreeValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    #[serde(skip)]
    pub exact: Option<Rational>,
}

impl TreeValue {
    pub fn exact(q: Rational) -> Self {
        let v = to_f64(&q);
        TreeValue { value: v, lower: v, upper: v, exact: Some(q) }
    }

    pub fn zero() -> Self {
        TreeValue::exact(Rational::zero())
    }

    pub fn one() -> Self {
        TreeValue::exact(Rational::one())
    }

    fn from_tail(t: &TailProduct, what: &str) -> Result<Self> {
        match t.kind {
            TailKind::Exact | TailKind::Bound => {
                Ok(TreeValue { value: t.value, lower: t.lower, upper: t.upper, exact: t.exact.clone() })
            }
            TailKind::Divergent => Err(Error::NotContraction(f64::INFINITY)),
            TailKind::Unknown => Err(Error::Unknown(format!("no tail product for {what}"))),
        }
    }

    /// `self · w` for a squared weight given as float and optional exact value.
    fn times(&self, w: f64, exact: &Option<Rational>) -> Self {
        TreeValue {
            value: self.value * w,
            lower: self.lower * w,
            upper: self.upper * w,
            exact: match (&self.exact, exact) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
        }
    }

    fn times_value(&self, other: &TreeValue) -> Self {
        TreeValue {
            value: self.value * other.value,
            lower: self.lower * other.lower,
            upper: self.upper * other.upper,
            exact: match (&self.exact, &other.exact) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
        }
    }

    fn plus(&self, other: &TreeValue) -> Self {
        TreeValue {
            value: self.value + other.value,
            lower: self.lower + other.lower,
            upper: self.upper + other.upper,
            exact: match (&self.exact, &other.exact) {
                (Some(a), Some(b)) => Some(a + b),
                _ => None,
            },
        }
    }

    /// Decides `self > 0`; an interval straddling 0 is undecided.
    pub fn positive(&self) -> Result<bool> {
        if let Some(q) = &self.exact {
            return Ok(q.is_positive());
        }
        if self.lower > 0.0 {
            Ok(true)
        } else if self.upper <= 0.0 {
            Ok(false)
        } else {
            Err(Error::Unknown(format!("sign of a limit in [{}, {}] is undecided", self.lower, self.upper)))
        }
    }

    fn min(self, other: TreeValue) -> TreeValue {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => {
                if a <= b {
                    self
                } else {
                    other
                }
            }
            _ => {
                if self.value <= other.value {
                    self
                } else {
                    other
                }
            }
        }
    }
}

/// Weights of one down-tail: `λ_{Tail(t, p)} = gen(start + p − 1)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailWeights {
    pub gen: WeightGen,
    pub start: i64,
}

/// Weighted shift `S e_u = Σ_{v ∈ Chi(u)} λ_v e_v` on a [`DirectedTree`].
#[derive(Debug, Clone)]
pub struct TreeShift {
    pub tree: DirectedTree,
    core_weights: Vec<Option<f64>>,
    pub tails: Vec<TailWeights>,
    /// `λ_{Up(k)} = up(−k)`.
    pub up: Option<WeightGen>,
}

impl TreeShift {
    pub fn new(
        tree: DirectedTree,
        core_weights: Vec<Option<f64>>,
        tails: Vec<TailWeights>,
        up: Option<WeightGen>,
    ) -> Result<Self> {
        if core_weights.len() != tree.names.len() {
            return Err(Error::Input("one core weight slot per core vertex".into()));
        }
        if tails.len() != tree.tail_attach.len() {
            return Err(Error::Input("one weight generator per tail".into()));
        }
        if tree.up_ray != up.is_some() {
            return Err(Error::Input("up-ray weights are required exactly for rootless trees".into()));
        }
        for i in 0..tree.core_len() {
            let has_parent = tree.parent(&TreeVertex::Core(i)).is_some();
            match (has_parent, core_weights[i as usize]) {
                (true, Some(w)) if w.is_finite() && w > 0.0 => {}
                (true, Some(w)) => {
                    return Err(Error::Input(format!("weight of {} must be positive, got {w}", tree.names[i as usize])))
                }
                (true, None) => return Err(Error::Input(format!("missing weight for {}", tree.names[i as usize]))),
                (false, Some(_)) => {
                    return Err(Error::Input(format!("root {} carries no weight", tree.names[i as usize])))
                }
                (false, None) => {}
            }
        }
        let positive_samples = |gen: &WeightGen, from: i64, step: i64| -> Result<()> {
            gen.rule.validate()?;
            for k in 0..WEIGHT_SAMPLES as i64 {
                let w = gen.value(from + step * k);
                if !(w.is_finite() && w > 0.0) {
                    return Err(Error::Input(format!("non-positive weight {w} at index {}", from + step * k)));
                }
            }
            Ok(())
        };
        for t in &tails {
            positive_samples(&t.gen, t.start, 1)?;
        }
        if let Some(g) = &up {
            positive_samples(g, -1, -1)?;
        }
        Ok(TreeShift { tree, core_weights, tails, up })
    }

    /// `λ_v`; the root has none.
    pub fn weight(&self, v: &TreeVertex) -> Result<f64> {
        self.tree.check(v)?;
        match *v {
            TreeVertex::Core(i) => self.core_weights[i as usize]
                .ok_or_else(|| Error::Precondition(format!("root {} has no weight", self.tree.name(v)))),
            TreeVertex::Tail { tail, pos } => {
                let t = &self.tails[tail as usize];
                Ok(t.gen.value(t.start + pos as i64 - 1))
            }
            TreeVertex::Up(k) => Ok(self.up.as_ref().expect("rootless").value(-(k as i64))),
        }
    }

    /// `λ_v²` with its exact value when known.
    pub fn weight_sq(&self, v: &TreeVertex) -> Result<(f64, Option<Rational>)> {
        let w = self.weight(v)?;
        let exact = match *v {
            TreeVertex::Core(_) => Some(square_of(w)),
            TreeVertex::Tail { tail, pos } => {
                let t = &self.tails[tail as usize];
                t.gen.exact_square(t.start + pos as i64 - 1)
            }
            TreeVertex::Up(k) => self.up.as_ref().expect("rootless").exact_square(-(k as i64)),
        };
        Ok((exact.as_ref().map_or(w * w, to_f64), exact))
    }

    /// `||S||² = sup_u Σ_{v ∈ Chi(u)} λ_v²`.
    pub fn norm_sq(&self) -> f64 {
        let mut best = 0.0_f64;
        for i in 0..self.tree.core_len() {
            let s: f64 = self
                .tree
                .chi(&TreeVertex::Core(i))
                .iter()
                .map(|v| self.weight_sq(v).map(|(w, _)| w).unwrap_or(0.0))
                .sum();
            best = best.max(s);
        }
        for t in &self.tails {
            let sup = t.gen.extrema_from(t.start + 1).0;
            best = best.max(sup * sup);
        }
        if let Some(g) = &self.up {
            let top = self.weight(&self.tree.top()).unwrap_or(0.0);
            let sup = g.extrema_to(-1).0;
            best = best.max(top * top).max(sup * sup);
        }
        best
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn is_contraction(&self) -> bool {
        self.norm_sq() <= 1.0 + CONTRACTION_TOL
    }

    pub fn require_contraction(&self) -> Result<()> {
        if self.is_contraction() {
            Ok(())
        } else {
            Err(Error::NotContraction(self.norm()))
        }
    }

    /// The shift as a lazy operator on `ℓ²(V)`, with `α_u` as its diagonal oracle.
    pub fn operator(&self) -> LazyOperator {
        let me = Arc::new(self.clone());
        let m1 = me.clone();
        let apply: BasisMap = Arc::new(move |u| {
            let v = tree_vertex(u)?;
            m1.tree.check(&v)?;
            let mut out = FinVec::zero();
            for c in m1.tree.chi(&v) {
                out.add(BasisIndex::TreeV(c.clone()), C64::new(m1.weight(&c)?, 0.0));
            }
            Ok(out)
        });
        let m2 = me.clone();
        let adjoint: BasisMap = Arc::new(move |u| {
            let v = tree_vertex(u)?;
            m2.tree.check(&v)?;
            Ok(match m2.tree.parent(&v) {
                Some(p) => FinVec::scaled(BasisIndex::TreeV(p), C64::new(m2.weight(&v)?, 0.0)),
                None => FinVec::zero(),
            })
        });
        let m3 = me.clone();
        let oracle: DiagOracle = Arc::new(move |u| {
            let a = m3.alpha(&tree_vertex(u)?)?;
            Ok(AsymptoticValue {
                value: a.value,
                exact: a.exact,
                lower: a.lower,
                upper: a.upper,
                route: if a.lower == a.upper { Route::Oracle } else { Route::Bracket },
                note: "sum over reachable tails of squared path weights times tail products".into(),
            })
        });
        LazyOperator::new(Universe::Tree, Universe::Tree, apply, adjoint, self.norm(), "weighted shift on a directed tree")
            .with_diag(oracle)
    }

    /// `∏_{q >= p+1} λ²_{Tail(t,q)}`.
    fn tail_alpha(&self, tail: u32, pos: u64) -> Result<TreeValue> {
        let t = &self.tails[tail as usize];
        TreeValue::from_tail(&t.gen.forward_tail(t.start + pos as i64), "a down-tail")
    }

    fn core_alphas(&self) -> Result<Vec<TreeValue>> {
        let n = self.tree.core_len() as usize;
        let mut alpha: Vec<Option<TreeValue>> = vec![None; n];
        for &i in self.tree.core_order().iter().rev() {
            let mut a = TreeValue::zero();
            for &c in self.tree.core_children(i) {
                let (w, e) = self.weight_sq(&TreeVertex::Core(c))?;
                a = a.plus(&alpha[c as usize].as_ref().expect("children first").times(w, &e));
            }
            for &t in self.tree.tails_at(i) {
                let (w, e) = self.weight_sq(&TreeVertex::Tail { tail: t, pos: 1 })?;
                a = a.plus(&self.tail_alpha(t, 1)?.times(w, &e));
            }
            alpha[i as usize] = Some(a);
        }
        Ok(alpha.into_iter().map(|a| a.expect("all core vertices visited")).collect())
    }

    /// `α_u = lim_n ||S^n e_u||²`.
    pub fn alpha(&self, u: &TreeVertex) -> Result<TreeValue> {
        self.tree.check(u)?;
        match *u {
            TreeVertex::Core(i) => Ok(self.core_alphas()?.swap_remove(i as usize)),
            TreeVertex::Tail { tail, pos } => self.tail_alpha(tail, pos),
            TreeVertex::Up(k) => {
                let top = self.tree.top();
                let mut a = self.alpha(&top)?;
                let (w, e) = self.weight_sq(&top)?;
                a = a.times(w, &e);
                if k > 1 {
                    let f = self.up.as_ref().expect("rootless").finite_product(-(k as i64) + 1, -1);
                    a = a.times(f.value, &f.exact);
                }
                Ok(a)
            }
        }
    }

    /// `∏ λ²` over the vertices from `v` up to the top core vertex, both included.
    pub fn path_sq(&self, v: &TreeVertex) -> Result<TreeValue> {
        self.tree.check(v)?;
        let mut acc = TreeValue::one();
        let mut u = v.clone();
        loop {
            match u {
                TreeVertex::Up(_) => return Err(Error::Precondition("path product starts below the up-ray".into())),
                TreeVertex::Tail { tail, pos } => {
                    let t = &self.tails[tail as usize];
                    let f = t.gen.finite_product(t.start, t.start + pos as i64 - 1);
                    acc = acc.times(f.value, &f.exact);
                    u = TreeVertex::Core(self.tree.tail_attach(tail));
                }
                TreeVertex::Core(i) => {
                    if self.core_weights[i as usize].is_some() {
                        let (w, e) = self.weight_sq(&u)?;
                        acc = acc.times(w, &e);
                    }
                    match self.tree.parent[i as usize] {
                        Some(p) => u = TreeVertex::Core(p),
                        None => return Ok(acc),
                    }
                }
            }
        }
    }

    /// `∏_{i >= k} λ²_{Up(i)}`.
    fn up_tail(&self, k: u64) -> Result<TreeValue> {
        let g = self.up.as_ref().ok_or_else(|| Error::Precondition("rooted tree has no up-ray".into()))?;
        TreeValue::from_tail(&g.backward_tail(-(k as i64)), "the up-ray")
    }

    /// `(∏_{j >= 0} λ_{par^j(v)})²`.
    pub fn ancestry_sq(&self, v: &TreeVertex) -> Result<TreeValue> {
        match *v {
            TreeVertex::Up(k) => self.up_tail(k),
            _ => Ok(self.path_sq(v)?.times_value(&self.up_tail(1)?)),
        }
    }

    /// `a_u = ||h_u||²` and `h_u = Σ_{v ∈ Gen(u)} ∏_{j>=0} λ_{par^j(v)} e_v`.
    pub fn dual_data(&self, u: &TreeVertex) -> Result<DualData> {
        self.tree.check(u)?;
        if !self.tree.up_ray {
            return Err(Error::Precondition("rooted tree: the shift is of class C·0".into()));
        }
        self.require_contraction()?;
        let level = self.tree.level(u);
        let mut a = TreeValue::zero();
        let mut h = FinVec::zero();
        for v in self.tree.level_set(level) {
            let c2 = self.ancestry_sq(&v)?;
            h.add(BasisIndex::TreeV(v), C64::new(c2.value.sqrt(), 0.0));
            a = a.plus(&c2);
        }
        Ok(DualData { level, a, h })
    }
}

fn tree_vertex(u: &BasisIndex) -> Result<TreeVertex> {
    match u {
        BasisIndex::TreeV(v) => Ok(v.clone()),
        other => Err(Error::Universe { index: other.to_string(), universe: "tree".into() }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DualData {
    pub level: i64,
    pub a: TreeValue,
    #[serde(serialize_with = "ser_finvec")]
    pub h: FinVec,
}

fn ser_finvec<S: serde::Serializer>(x: &FinVec, s: S) -> std::result::Result<S::Ok, S::Error> {
    crate::lazyop::finvec_to_json(x).serialize(s)
}

/// Unitary equivalence class of the isometric asymptote.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "summands", rename_all = "snake_case")]
pub enum AsymptoteClass {
    /// Orthogonal sum of unilateral shifts; the tree has a root.
    UnilateralSum(Count),
    /// Rootless and completely non-unitary: a sum of unilateral shifts.
    Cnu(Count),
    /// A bilateral shift plus the given number of unilateral shifts.
    BilateralPlus(Count),
}

#[derive(Debug, Clone, Serialize)]
pub struct RowSum {
    pub vertex: String,
    pub value: f64,
    /// Exact verdict `Σ β² = 1` when all weights are exact.
    pub exact_one: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TreeAsymptotics {
    /// `α` at core vertices.
    pub alpha_core: Vec<(String, TreeValue)>,
    /// `α` at the first vertex of each tail.
    pub alpha_tail_heads: Vec<TreeValue>,
    /// Core vertices outside `V'`, i.e. with `e_u` in the stable subspace.
    pub stable_core: Vec<String>,
    /// Tails contained in the stable subspace.
    pub stable_tails: Vec<u32>,
    /// `β_v` at core vertices of `V'` below the top.
    pub beta_core: Vec<(String, f64)>,
    pub row_sums: Vec<RowSum>,
    pub branching_prime: Count,
    pub class: AsymptoteClass,
    pub corank: Count,
    /// `a` on levels `−2..=2` for rootless trees.
    pub a_values: Vec<(i64, TreeValue)>,
}

impl TreeShift {
    /// `V' = {α > 0}`, the weights `β_v = λ_v √α_v / √α_{par v}` and the class of `U = S_β`.
    pub fn isometric_asymptote(&self) -> Result<TreeAsymptotics> {
        self.require_contraction()?;
        let tree = &self.tree;
        let alphas = self.core_alphas()?;
        let mut in_v = vec![false; alphas.len()];
        for (i, a) in alphas.iter().enumerate() {
            in_v[i] = a.positive()?;
        }
        let heads: Vec<TreeValue> =
            (0..tree.tail_count()).map(|t| self.tail_alpha(t, 1)).collect::<Result<_>>()?;
        let tail_in: Vec<bool> = (0..tree.tail_count())
            .map(|t| self.tail_alpha(t, 0).and_then(|a| a.positive()))
            .collect::<Result<_>>()?;
        if !in_v[tree.top as usize] {
            return Err(Error::Precondition("the shift is of class C0· (V' is empty)".into()));
        }
        let mut beta_core = Vec::new();
        let mut row_sums = Vec::new();
        let mut br = 0u64;
        for i in 0..tree.core_len() {
            if !in_v[i as usize] {
                continue;
            }
            let ai = &alphas[i as usize];
            let mut sum = TreeValue::zero();
            let mut kids = 0u64;
            for c in tree.chi(&TreeVertex::Core(i)) {
                let (w, e) = self.weight_sq(&c)?;
                let (ac, member) = match c {
                    TreeVertex::Core(j) => (alphas[j as usize].clone(), in_v[j as usize]),
                    TreeVertex::Tail { tail, .. } => (self.tail_alpha(tail, 1)?, tail_in[tail as usize]),
                    TreeVertex::Up(_) => unreachable!("core children"),
                };
                if !member {
                    continue;
                }
                kids += 1;
                let b2 = TreeValue {
                    value: w * ac.value / ai.value,
                    lower: w * ac.value / ai.value,
                    upper: w * ac.value / ai.value,
                    exact: match (&e, &ac.exact, &ai.exact) {
                        (Some(e), Some(x), Some(y)) => Some(e * x / y),
                        _ => None,
                    },
                };
                if let TreeVertex::Core(_) = c {
                    beta_core.push((tree.name(&c), b2.value.sqrt()));
                }
                sum = sum.plus(&b2);
            }
            br += kids.saturating_sub(1);
            row_sums.push(RowSum {
                vertex: tree.names[i as usize].clone(),
                value: sum.value,
                exact_one: sum.exact.as_ref().map(|q| q.is_one()),
            });
        }
        let branching_prime = Count::Finite(br);
        let class = if !tree.up_ray {
            AsymptoteClass::UnilateralSum(Count::Finite(br + 1))
        } else {
            // β = 1 on the up-ray, so U restricted to the ancestors of the top is a bilateral shift.
            AsymptoteClass::BilateralPlus(branching_prime)
        };
        let a_values = if tree.up_ray {
            (-2..=2)
                .map(|l| {
                    let v = tree.level_set(l).into_iter().next().expect("levels near the top are nonempty");
                    Ok((l, self.dual_data(&v)?.a))
                })
                .collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        Ok(TreeAsymptotics {
            alpha_core: alphas.iter().enumerate().map(|(i, a)| (tree.names[i].clone(), a.clone())).collect(),
            alpha_tail_heads: heads,
            stable_core: (0..tree.core_len()).filter(|&i| !in_v[i as usize]).map(|i| tree.names[i as usize].clone()).collect(),
            stable_tails: (0..tree.tail_count()).filter(|&t| !tail_in[t as usize]).collect(),
            beta_core,
            row_sums,
            branching_prime,
            class,
            corank: Count::Finite(tree.corank()),
            a_values,
        })
    }
}

/// Closed-form report for the rootless binary tree with all weights `1/√2`.
pub fn binary_tree_asymptotics() -> TreeAsymptotics {
    let half = TreeValue::exact(Rational::new(1.into(), 2.into()));
    TreeAsymptotics {
        alpha_core: vec![("u".into(), TreeValue::one())],
        alpha_tail_heads: Vec::new(),
        stable_core: Vec::new(),
        stable_tails: Vec::new(),
        beta_core: vec![("u".into(), half.value.sqrt())],
        row_sums: vec![RowSum { vertex: "u".into(), value: 1.0, exact_one: Some(true) }],
        branching_prime: Count::Infinite,
        class: AsymptoteClass::Cnu(Count::Infinite),
        corank: Count::Infinite,
        a_values: (-2..=2).map(|l| (l, TreeValue::zero())).collect(),
    }
}

/// `Σ_{v ∈ Chi^n(u)} ∏ λ² = 2^n (1/2)^n` for the binary preset, exactly.
pub fn binary_tree_level_mass(n: u32) -> Rational {
    let two = Rational::from_integer(2.into());
    num_traits::pow(two.clone(), n as usize) * num_traits::pow(Rational::one() / two, n as usize)
}

#[derive(Debug, Clone, Serialize)]
pub struct DualAsymptote {
    /// `bilateral` or `unilateral`.
    pub class: &'static str,
    /// `(level, ||U^* (h_u/√a_u)|| = ||h_{par u}||/√a_{par u})` on sampled levels.
    pub isometry_checks: Vec<(i64, f64)>,
    /// `⟨S^* h_u, h_{par u}⟩ = a_u` holds in exact arithmetic at every sampled level.
    pub exact: Option<bool>,
}

impl TreeShift {
    /// `U_* h_u/√a_u = h_{par u}/√a_{par u}` on sampled levels.
    pub fn dual_isometric_asymptote(&self, levels: std::ops::RangeInclusive<i64>) -> Result<DualAsymptote> {
        if !self.tree.up_ray {
            return Err(Error::Precondition("rooted tree: the shift is of class C·0".into()));
        }
        let mut checks = Vec::new();
        let mut exact = Some(true);
        for l in levels {
            let Some(u) = self.tree.level_set(l).into_iter().next() else { continue };
            let d = self.dual_data(&u)?;
            if !d.a.positive()? {
                return Err(Error::Precondition("the shift is of class C·0 (a_u = 0)".into()));
            }
            let p = self.dual_data(&self.tree.parent(&u).expect("rootless"))?;
            checks.push((l, p.h.norm() / p.a.value.sqrt()));
            // ⟨S^* h_u, h_{par u}⟩ = Σ_{v ∈ Gen(u)} λ_v² c²_{par v} must equal a_u.
            let mut inner = TreeValue::zero();
            for v in self.tree.level_set(l) {
                let (w, e) = self.weight_sq(&v)?;
                inner = inner.plus(&self.ancestry_sq(&self.tree.parent(&v).expect("rootless"))?.times(w, &e));
            }
            exact = match (exact, &inner.exact, &d.a.exact) {
                (Some(ok), Some(x), Some(y)) => Some(ok && x == y),
                _ => None,
            };
        }
        Ok(DualAsymptote { class: if self.tree.tail_count() == 0 { "unilateral" } else { "bilateral" }, isometry_checks: checks, exact })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SimilarityFlags {
    pub inf_alpha: TreeValue,
    pub similar_to_isometry: bool,
    pub similar_to_coisometry: bool,
    pub similar_to_unitary: bool,
    pub note: String,
}

impl TreeShift {
    pub fn inf_alpha(&self) -> Result<TreeValue> {
        let mut inf = self.core_alphas()?.into_iter().reduce(TreeValue::min).expect("nonempty core");
        for t in 0..self.tree.tail_count() {
            inf = inf.min(self.tail_alpha(t, 1)?);
        }
        if self.tree.up_ray {
            let top = self.tree.top();
            let (w, e) = self.weight_sq(&top)?;
            let limit = self.alpha(&top)?.times(w, &e).times_value(&self.up_tail(1)?);
            inf = inf.min(limit);
        }
        Ok(inf)
    }

    /// `∏` of all squared weights along a unary tree.
    fn full_product(&self) -> Result<Option<TreeValue>> {
        if !self.tree.up_ray || self.tree.branching_index() > 0 {
            return Ok(None);
        }
        let bottom = (0..self.tree.core_len())
            .find(|&i| self.tree.core_children(i).is_empty())
            .expect("finite core has a bottom");
        let mut p = self.path_sq(&TreeVertex::Core(bottom))?.times_value(&self.up_tail(1)?);
        if let Some(&t) = self.tree.tails_at(bottom).first() {
            p = p.times_value(&self.tail_alpha(t, 0)?);
        }
        Ok(Some(p))
    }

    pub fn similarity_flags(&self) -> Result<SimilarityFlags> {
        self.require_contraction()?;
        let inf_alpha = self.inf_alpha()?;
        let similar_to_isometry = inf_alpha.positive()?;
        let leafless = self.tree.leaves().is_empty();
        let (similar_to_coisometry, note) = match self.full_product()? {
            None => (false, "a rooted or branching tree is never similar to a co-isometry".to_string()),
            Some(p) => {
                let pos = p.positive()?;
                let kind = if leafless { "bilateral" } else { "backward" };
                (pos, format!("{kind} weighted shift with full product {}", p.value))
            }
        };
        Ok(SimilarityFlags {
            inf_alpha,
            similar_to_isometry,
            similar_to_coisometry,
            similar_to_unitary: similar_to_coisometry && leafless,
            note,
        })
    }

    /// Every `α_u > 0`: no leaves and every tail product positive.
    pub fn is_c1_dot(&self) -> Result<bool> {
        self.require_contraction()?;
        if !self.tree.leaves().is_empty() {
            return Ok(false);
        }
        for t in 0..self.tree.tail_count() {
            if !self.tail_alpha(t, 0)?.positive()? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// `S ∈ C·0`: rooted, or the up-ray product vanishes.
    pub fn is_c_dot0(&self) -> Result<bool> {
        self.require_contraction()?;
        if !self.tree.up_ray {
            return Ok(true);
        }
        Ok(!self.dual_data(&self.tree.top())?.a.positive()?)
    }
}

/// Three-valued cyclicity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Cyclicity {
    Cyclic,
    NotCyclic,
    Unknown,
}

#[derive(Debug, Clone, Serialize)]
pub struct AdjointCyclicity {
    pub rooted: bool,
    pub branching_index: u64,
    pub c1_dot: bool,
    /// `Some(true)` when a sufficient condition applies; otherwise no claim.
    pub adjoint_cyclic: Option<bool>,
    pub reason: String,
}

impl TreeShift {
    pub fn adjoint_cyclicity_flags(&self) -> Result<AdjointCyclicity> {
        let c1_dot = self.is_c1_dot()?;
        let rooted = !self.tree.up_ray;
        let br = self.tree.branching_index();
        let (adjoint_cyclic, reason) = match (c1_dot, rooted) {
            (true, true) => (Some(true), "rooted tree and S of class C1·".into()),
            (true, false) => (Some(true), format!("rootless tree, Br = {br} finite and S of class C1·")),
            (false, _) => (None, "S is not of class C1·; no sufficient condition applies".into()),
        };
        Ok(AdjointCyclicity { rooted, branching_index: br, c1_dot, adjoint_cyclic, reason })
    }
}

/// A unary descending chain: finitely many core vertices, then possibly a tail.
#[derive(Debug, Clone)]
pub struct Chain {
    pub core: Vec<TreeVertex>,
    pub tail: Option<u32>,
}

impl Chain {
    /// Vertex at position `k >= 1`.
    pub fn vertex(&self, k: usize) -> Option<TreeVertex> {
        if k == 0 {
            None
        } else if k <= self.core.len() {
            Some(self.core[k - 1].clone())
        } else {
            self.tail.map(|t| TreeVertex::Tail { tail: t, pos: (k - self.core.len()) as u64 })
        }
    }

    pub fn finite_len(&self) -> Option<usize> {
        self.tail.is_none().then_some(self.core.len())
    }
}

/// A rootless tree with a single branching vertex `0`, trunk `n ∈ ℤ` and branch `k'`, `k >= 1`.
#[derive(Debug, Clone)]
pub struct BranchShape {
    pub branch_vertex: TreeVertex,
    pub trunk: Chain,
    pub branch: Chain,
}

impl TreeShift {
    fn chain_from(&self, start: TreeVertex) -> Chain {
        let mut core = Vec::new();
        let mut v = start;
        loop {
            match v {
                TreeVertex::Tail { tail, .. } => return Chain { core, tail: Some(tail) },
                TreeVertex::Core(i) => {
                    core.push(v.clone());
                    match self.tree.chi(&TreeVertex::Core(i)).as_slice() {
                        [] => return Chain { core, tail: None },
                        [next] => v = next.clone(),
                        _ => unreachable!("single branching vertex"),
                    }
                }
                TreeVertex::Up(_) => unreachable!("descending chain"),
            }
        }
    }

    pub fn branch_shape(&self) -> Result<BranchShape> {
        let t = &self.tree;
        if !t.up_ray || t.branching_index() != 1 {
            return Err(Error::Input("expected a rootless tree with branching index 1".into()));
        }
        let b = (0..t.core_len()).find(|&i| t.out_degree(i) == 2).expect("Br = 1");
        let kids = t.chi(&TreeVertex::Core(b));
        let (first, second) = (self.chain_from(kids[0].clone()), self.chain_from(kids[1].clone()));
        let (trunk, branch) = match (first.finite_len(), second.finite_len()) {
            (Some(a), Some(c)) if c > a => (second, first),
            (Some(_), None) => (second, first),
            _ => (first, second),
        };
        Ok(BranchShape { branch_vertex: TreeVertex::Core(b), trunk, branch })
    }
}

impl BranchShape {
    /// Trunk vertex `n`: `par^{-n}(0)` for `n <= 0`.
    pub fn trunk_vertex(&self, tree: &DirectedTree, n: i64) -> Option<TreeVertex> {
        if n >= 1 {
            self.trunk.vertex(n as usize)
        } else {
            tree.par_k(&self.branch_vertex, (-n) as usize).ok()
        }
    }
}

type RatVec = BTreeMap<TreeVertex, Rational>;

fn rat_add(x: &mut RatVec, v: TreeVertex, c: Rational) {
    let e = x.entry(v.clone()).or_insert_with(Rational::zero);
    *e += c;
    if e.is_zero() {
        x.remove(&v);
    }
}

/// Exact intertwining data `g_k = (∏_{j<=k} 1/λ_j) e_k − (∏_{j<=k} 1/λ_{j'}) e_{k'}`.
struct GVectors {
    trunk_coef: Vec<Rational>,
    branch_coef: Vec<Rational>,
    norms: Vec<Surd>,
}

impl TreeShift {
    fn lambda_exact(&self, v: &TreeVertex) -> Result<Rational> {
        Ok(from_f64(self.weight(v)?))
    }

    fn g_vectors(&self, shape: &BranchShape, k_max: usize) -> Result<GVectors> {
        let (mut a, mut b) = (Rational::one(), Rational::one());
        let mut g = GVectors { trunk_coef: Vec::new(), branch_coef: Vec::new(), norms: Vec::new() };
        for k in 1..=k_max {
            let tv = shape.trunk.vertex(k).ok_or_else(|| Error::Input(format!("trunk ends before {k}")))?;
            let bv = shape.branch.vertex(k).ok_or_else(|| Error::Input(format!("branch ends before {k}")))?;
            a /= self.lambda_exact(&tv)?;
            b /= self.lambda_exact(&bv)?;
            g.norms.push(Surd::sqrt(&(&a * &a + &b * &b)));
            g.trunk_coef.push(a.clone());
            g.branch_coef.push(-b.clone());
        }
        Ok(g)
    }

    fn g_vector(&self, shape: &BranchShape, g: &GVectors, k: usize) -> RatVec {
        let mut x = RatVec::new();
        rat_add(&mut x, shape.trunk.vertex(k).expect("checked"), g.trunk_coef[k - 1].clone());
        rat_add(&mut x, shape.branch.vertex(k).expect("checked"), g.branch_coef[k - 1].clone());
        x
    }

    /// `S^* x` with exact weights.
    fn adjoint_exact(&self, x: &RatVec) -> Result<RatVec> {
        let mut out = RatVec::new();
        for (v, c) in x {
            if let Some(p) = self.tree.parent(v) {
                rat_add(&mut out, p, c * self.lambda_exact(v)?);
            }
        }
        Ok(out)
    }

    fn g_float(&self, shape: &BranchShape, g: &GVectors, k: usize) -> FinVec {
        let n = g.norms[k - 1].to_f64();
        FinVec::from_pairs([
            (BasisIndex::TreeV(shape.trunk.vertex(k).expect("checked")), C64::new(to_f64(&g.trunk_coef[k - 1]) / n, 0.0)),
            (BasisIndex::TreeV(shape.branch.vertex(k).expect("checked")), C64::new(to_f64(&g.branch_coef[k - 1]) / n, 0.0)),
        ])
    }

    /// Checks `X V^* = S^* X` with `X e_n = e_n` on the trunk and `X e_{k'} = g_k/||g_k||`,
    /// where `V^* e_n = λ_n e_{n−1}` and `V^* e_{k'} = (||g_{k−1}||/||g_k||) e_{(k−1)'}`.
    /// Branch vectors are compared after scaling both sides by `||g_k||`, so the test is exact.
    fn branch_intertwining(
        &self,
        shape: &BranchShape,
        g: &GVectors,
        k_max: usize,
        trunk: std::ops::RangeInclusive<i64>,
    ) -> Result<Intertwining> {
        let op = self.operator();
        let mut report = Intertwining { checked: 0, exact_zero: true, max_residual: 0.0 };
        for k in 1..=k_max {
            let rhs = self.adjoint_exact(&self.g_vector(shape, g, k))?;
            let lhs = if k == 1 {
                RatVec::new()
            } else {
                let w = g.norms[k - 2].div(&g.norms[k - 1]);
                let factor = w.div(&g.norms[k - 2]).mul(&g.norms[k - 1]);
                if factor != Surd::one() {
                    report.exact_zero = false;
                }
                self.g_vector(shape, g, k - 1)
            };
            report.exact_zero &= lhs == rhs;
            let rhs_f = op.apply_adjoint(&self.g_float(shape, g, k))?;
            let lhs_f = if k == 1 {
                FinVec::zero()
            } else {
                let w = g.norms[k - 2].to_f64() / g.norms[k - 1].to_f64();
                self.g_float(shape, g, k - 1).scale(C64::new(w, 0.0))
            };
            report.max_residual = report.max_residual.max(lhs_f.sub(&rhs_f).norm());
            report.checked += 1;
        }
        for n in trunk {
            let (Some(v), Some(p)) = (shape.trunk_vertex(&self.tree, n), shape.trunk_vertex(&self.tree, n - 1)) else {
                continue;
            };
            let lam = self.lambda_exact(&v)?;
            let lhs: RatVec = [(p.clone(), lam)].into_iter().collect();
            let rhs = self.adjoint_exact(&[(v.clone(), Rational::one())].into_iter().collect())?;
            report.exact_zero &= lhs == rhs;
            let lhs_f = FinVec::scaled(BasisIndex::TreeV(p), C64::new(self.weight(&v)?, 0.0));
            let rhs_f = op.adjoint_basis(&BasisIndex::TreeV(v))?;
            report.max_residual = report.max_residual.max(lhs_f.sub(&rhs_f).norm());
            report.checked += 1;
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Intertwining {
    pub checked: usize,
    /// Every residual vanishes in exact arithmetic.
    pub exact_zero: bool,
    pub max_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafTreeSimilarity {
    pub leaves: usize,
    pub k0: usize,
    /// Trunk leaf position, `None` when the trunk is infinite.
    pub j0: Option<usize>,
    /// `backward` (two leaves) or `bilateral` (one leaf).
    pub w_kind: &'static str,
    #[serde(serialize_with = "ser_surds")]
    pub g_norms: Vec<Surd>,
    /// Weights `||g_k||/||g_{k+1}||` of the nilpotent part.
    #[serde(serialize_with = "ser_surds")]
    pub n_weights: Vec<Surd>,
    pub intertwining: Intertwining,
    pub cyclic: Cyclicity,
}

fn ser_surds<S: serde::Serializer>(x: &[Surd], s: S) -> std::result::Result<S::Ok, S::Error> {
    x.iter().map(Surd::to_f64).collect::<Vec<_>>().serialize(s)
}

/// Trunk vectors checked on either side of the branching vertex.
pub const TRUNK_SAMPLES: i64 = 8;

impl TreeShift {
    /// Similarity `S ~ W ⊕ N` for a rootless tree with one branching vertex and one or two leaves.
    pub fn leaf_tree_similarity(&self) -> Result<LeafTreeSimilarity> {
        let shape = self.branch_shape()?;
        let leaves = self.tree.leaves().len();
        let k0 = match (leaves, shape.branch.finite_len()) {
            (1 | 2, Some(k0)) => k0,
            _ => return Err(Error::Input("expected one or two leaves with a finite branch".into())),
        };
        let j0 = shape.trunk.finite_len();
        let g = self.g_vectors(&shape, k0)?;
        let top = j0.map_or(TRUNK_SAMPLES, |j| j as i64).min(TRUNK_SAMPLES);
        let intertwining = self.branch_intertwining(&shape, &g, k0, -TRUNK_SAMPLES..=top)?;
        let n_weights = (1..k0).map(|k| g.norms[k - 1].div(&g.norms[k])).collect();
        let cyclic = if leaves == 2 {
            Cyclicity::Cyclic
        } else if self.is_contraction() && !self.is_c_dot0()? {
            Cyclicity::Cyclic
        } else {
            Cyclicity::Unknown
        };
        Ok(LeafTreeSimilarity {
            leaves,
            k0,
            j0,
            w_kind: if leaves == 2 { "backward" } else { "bilateral" },
            g_norms: g.norms,
            n_weights,
            intertwining,
            cyclic,
        })
    }
}

/// Boundedness of `∏_{j<=k} λ_{j'}/λ_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RatioBound {
    Bounded { sup: f64, certificate: String },
    Unbounded { certificate: String },
    Unknown { observed_sup: f64, horizon: usize },
}

#[derive(Debug, Clone, Serialize)]
pub struct TildeTreeReport {
    /// `w_{k'} = ||g_{k−1}||/||g_k||` for `k = 2..`.
    pub unilateral_weights: Vec<f64>,
    pub intertwining: Intertwining,
    /// Largest `||X^*|span{e_k, e_{k'}}||`.
    pub x_star_norm: f64,
    pub ratio: RatioBound,
    pub similar: Option<bool>,
    /// Class flags, `None` when `S` is not a contraction.
    pub c1_dot: Option<bool>,
    pub c_dot0: Option<bool>,
    pub cyclic: Cyclicity,
    pub cyclic_note: String,
}

/// Index from which a forward generator is constant, and the constant.
fn eventually_constant(gen: &WeightGen) -> Option<(i64, f64)> {
    if gen.direction != crate::lazyop::Direction::Forward {
        return None;
    }
    match &gen.rule {
        WeightRule::Constant { value } => Some((i64::MIN, *value)),
        WeightRule::TableThenConstant { start, prefix, tail, .. } => Some((start + prefix.len() as i64, *tail)),
        WeightRule::Custom { start, table, after, .. } => Some((start + table.len() as i64, *after)),
        _ => None,
    }
}

impl TreeShift {
    /// `∏` of all squared weights along a chain.
    fn chain_product(&self, chain: &Chain) -> Result<TreeValue> {
        let mut p = TreeValue::one();
        for v in &chain.core {
            let (w, e) = self.weight_sq(v)?;
            p = p.times(w, &e);
        }
        match chain.tail {
            Some(t) => Ok(p.times_value(&self.tail_alpha(t, 0)?)),
            None => Ok(TreeValue::zero()),
        }
    }

    /// Position from which the chain weights are a known constant.
    fn chain_constant(&self, chain: &Chain) -> Option<(usize, f64)> {
        let t = chain.tail?;
        let tw = &self.tails[t as usize];
        let (from, c) = eventually_constant(&tw.gen)?;
        let pos = from.saturating_sub(tw.start).saturating_add(1).max(1) as usize;
        Some((chain.core.len() + pos, c))
    }

    fn ratio_bound(&self, shape: &BranchShape, horizon: usize) -> Result<RatioBound> {
        let mut r = 1.0_f64;
        let mut sup = 0.0_f64;
        for k in 1..=horizon {
            r *= self.weight(&shape.branch.vertex(k).expect("infinite"))? / self.weight(&shape.trunk.vertex(k).expect("infinite"))?;
            sup = sup.max(r);
        }
        let trunk = self.chain_product(&shape.trunk)?;
        if trunk.positive()? {
            return Ok(RatioBound::Bounded {
                sup,
                certificate: format!("∏ λ_j² = {} > 0 bounds the ratios by its inverse square root", trunk.value),
            });
        }
        let branch = self.chain_product(&shape.branch)?;
        if branch.positive()? {
            return Ok(RatioBound::Unbounded { certificate: "∏ λ_j = 0 while ∏ λ_{j'} > 0".into() });
        }
        if let (Some((a, ct)), Some((b, cb))) = (self.chain_constant(&shape.trunk), self.chain_constant(&shape.branch)) {
            let from = a.max(b);
            if cb > ct {
                return Ok(RatioBound::Unbounded {
                    certificate: format!("from position {from} every factor equals {}", cb / ct),
                });
            }
            let mut r = 1.0_f64;
            let mut sup = 0.0_f64;
            for k in 1..=from.max(1) {
                r *= self.weight(&shape.branch.vertex(k).expect("infinite"))?
                    / self.weight(&shape.trunk.vertex(k).expect("infinite"))?;
                sup = sup.max(r);
            }
            return Ok(RatioBound::Bounded {
                sup,
                certificate: format!("from position {from} every factor equals {} <= 1", cb / ct),
            });
        }
        Ok(RatioBound::Unknown { observed_sup: sup, horizon })
    }

    /// Quasiaffine transform to `W̃` on `𝒯̃` and the similarity criterion.
    pub fn tilde_tree_report(&self, k_max: usize, horizon: usize) -> Result<TildeTreeReport> {
        let shape = self.branch_shape()?;
        if shape.trunk.finite_len().is_some() || shape.branch.finite_len().is_some() {
            return Err(Error::Input("expected a leafless tree with branching index 1".into()));
        }
        let g = self.g_vectors(&shape, k_max)?;
        let intertwining = self.branch_intertwining(&shape, &g, k_max, -TRUNK_SAMPLES..=TRUNK_SAMPLES)?;
        let mut x_star_norm = 0.0_f64;
        for k in 1..=k_max {
            let n = g.norms[k - 1].to_f64();
            let (a, b) = (to_f64(&g.trunk_coef[k - 1]) / n, to_f64(&g.branch_coef[k - 1]) / n);
            x_star_norm = x_star_norm.max(op_norm(&from_real_rows(&[&[1.0, a], &[0.0, b]])));
        }
        let ratio = self.ratio_bound(&shape, horizon)?;
        let similar = match ratio {
            RatioBound::Bounded { .. } => Some(true),
            RatioBound::Unbounded { .. } => Some(false),
            RatioBound::Unknown { .. } => None,
        };
        let (c1_dot, c_dot0) = if self.is_contraction() {
            (Some(self.is_c1_dot()?), Some(self.is_c_dot0()?))
        } else {
            (None, None)
        };
        let (cyclic, cyclic_note) = if c1_dot == Some(true) {
            (Cyclicity::NotCyclic, "C1· contraction: its isometric asymptote S ⊕ S⁺ has no cyclic vector".into())
        } else if c_dot0 == Some(false) && similar == Some(true) {
            (
                Cyclicity::Unknown,
                "similar to W̃; cyclic when the bilateral summand is hypercyclic".into(),
            )
        } else {
            (Cyclicity::Unknown, "no criterion applies".into())
        };
        Ok(TildeTreeReport {
            unilateral_weights: (2..=k_max).map(|k| g.norms[k - 2].to_f64() / g.norms[k - 1].to_f64()).collect(),
            intertwining,
            x_star_norm,
            ratio,
            similar,
            c1_dot,
            c_dot0,
            cyclic,
            cyclic_note,
        })
    }
}

/// Output of [`backward_cyclic_vector`].
#[derive(Debug, Clone, Serialize)]
pub struct CyclicVector {
    #[serde(serialize_with = "ser_finvec")]
    pub f: FinVec,
    /// Support schedule `(j_l, k_l)` for `l = 1..=L`.
    pub schedule: Vec<(usize, u64)>,
    /// `Σ_m` for `m = 1..=M` after all rescalings.
    pub certificates: Vec<f64>,
    pub rescaled: Vec<usize>,
}

/// Schedule `k_l = l(l+1)/2`, branch `j_l = (l − 1) mod J`, for all `l` with `k_l <= K`.
pub fn cyclic_schedule(j_count: usize, k_max: u64) -> Vec<(usize, u64)> {
    (1u64..)
        .map(|l| ((l as usize - 1) % j_count, l * (l + 1) / 2))
        .take_while(|&(_, k)| k <= k_max)
        .collect()
}

fn check_weights(weights: &dyn Fn(usize, u64) -> f64, j_count: usize, k_max: u64) -> Result<()> {
    let mut zeros = Vec::new();
    for j in 0..j_count {
        for k in 0..k_max {
            let w = weights(j, k);
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Input(format!("weight w[{j},{k}] = {w} is not a nonnegative number")));
            }
            if w == 0.0 {
                zeros.push((j, k));
            }
        }
    }
    match zeros.len() {
        0 => Ok(()),
        1 => Err(Error::Unsupported(format!("single zero weight at {:?}", zeros[0]))),
        n => Err(Error::Precondition(format!("{n} zero weights: the range of B has co-dimension above one"))),
    }
}

/// `ln ∏_{i=k_l−k}^{k_l−1} w_{j_l, i}`, the log-coefficient of `B^k e_{j_l,k_l}`.
fn log_path(weights: &dyn Fn(usize, u64) -> f64, (j, kl): (usize, u64), k: u64) -> f64 {
    (kl - k..kl).map(|i| weights(j, i).ln()).sum()
}

/// `Σ_m = max_{k_{m−1} < k <= k_m} Σ_{l>m} (ξ_l ∏w_l / (ξ_m ∏w_m))²` with 1-based `m`.
fn sigma(weights: &dyn Fn(usize, u64) -> f64, schedule: &[(usize, u64)], xi: &[f64], m: usize) -> f64 {
    let prev = if m == 1 { 0 } else { schedule[m - 2].1 };
    let (jm, km) = schedule[m - 1];
    let mut best = 0.0_f64;
    for k in prev + 1..=km {
        let base = xi[m - 1].ln() + log_path(weights, (jm, km), k);
        let total: f64 = (m..schedule.len())
            .map(|l| (2.0 * (xi[l].ln() + log_path(weights, schedule[l], k) - base)).exp())
            .sum();
        best = best.max(total);
    }
    best
}

/// Cyclic vector `f̃ = Σ_l ξ_l e_{j_l,k_l}` for the backward shift `B e_{j,k} = w_{j,k−1} e_{j,k−1}`
/// on `J` branches, truncated at `k <= K`, with `Σ_m <= 2^{−m}` for `m <= M`.
pub fn backward_cyclic_vector(
    weights: &dyn Fn(usize, u64) -> f64,
    j_count: usize,
    k_max: u64,
    m_max: usize,
) -> Result<CyclicVector> {
    if j_count == 0 || m_max == 0 {
        return Err(Error::Input("need at least one branch and one certificate".into()));
    }
    check_weights(weights, j_count, k_max)?;
    let schedule = cyclic_schedule(j_count, k_max);
    if schedule.len() < m_max + 1 {
        return Err(Error::Input(format!(
            "truncation K = {k_max} holds {} support points, {} needed for M = {m_max}",
            schedule.len(),
            m_max + 1
        )));
    }
    let mut xi = vec![1.0; schedule.len()];
    let mut rescaled = Vec::new();
    for m in 1..=m_max {
        let bound = 0.5_f64.powi(m as i32);
        let s = sigma(weights, &schedule, &xi, m);
        if s > bound {
            // One extra factor 2 keeps the certificate strict under rounding.
            let c = (2.0 * s / bound).sqrt();
            xi[m..].iter_mut().for_each(|x| *x /= c);
            rescaled.push(m);
        }
    }
    let certificates = (1..=m_max).map(|m| sigma(weights, &schedule, &xi, m)).collect();
    let f = FinVec::from_pairs(
        schedule.iter().zip(&xi).map(|(&(j, k), &x)| (BasisIndex::Pair(j as i64, k as i64), C64::new(x, 0.0))),
    );
    Ok(CyclicVector { f, schedule, certificates, rescaled })
}

/// The backward shift `B e_{j,k} = w_{j,k−1} e_{j,k−1}`, `B e_{j,0} = 0`, on `J` branches.
pub fn backward_branch_shift(weights: Arc<dyn Fn(usize, u64) -> f64 + Send + Sync>, j_count: usize) -> LazyOperator {
    use crate::lazyop::{weighted_injection, IdxRange, InjectionMap};
    let universe =
        Universe::Pair { first: IdxRange::between(0, j_count as i64 - 1), second: IdxRange::from(0) };
    let w1 = weights.clone();
    let back: InjectionMap = Arc::new(move |u| match *u {
        BasisIndex::Pair(j, k) if k > 0 => Some((BasisIndex::Pair(j, k - 1), w1(j as usize, k as u64 - 1))),
        _ => None,
    });
    let fwd: InjectionMap = Arc::new(move |u| match *u {
        BasisIndex::Pair(j, k) => Some((BasisIndex::Pair(j, k + 1), weights(j as usize, k as u64))),
        _ => None,
    });
    weighted_injection(universe.clone(), universe, back, fwd, f64::INFINITY, "backward shift on branches")
}

/// Recomputes `max_k ||(1/(ξ_m ∏w)) B^k f̃ − e_{j_m, k_m−k}||²` for `m = 1..=M` by applying `B`.
pub fn verify_cyclic_vector(
    f: &FinVec,
    weights: Arc<dyn Fn(usize, u64) -> f64 + Send + Sync>,
    j_count: usize,
    m_max: usize,
) -> Result<Vec<f64>> {
    let b = backward_branch_shift(weights.clone(), j_count);
    let k_m = (m_max * (m_max + 1) / 2) as u64;
    let schedule = cyclic_schedule(j_count, k_m);
    let mut out = Vec::with_capacity(m_max);
    let mut image = f.clone();
    let mut k_done = 0u64;
    for m in 1..=m_max {
        let prev = if m == 1 { 0 } else { schedule[m - 2].1 };
        let (jm, km) = schedule[m - 1];
        let xi = f.get(&BasisIndex::Pair(jm as i64, km as i64)).re;
        let mut worst = 0.0_f64;
        for k in prev + 1..=km {
            image = b.apply_power(&image, (k - k_done) as usize)?;
            k_done = k;
            let prod: f64 = (km - k..km).map(|i| weights(jm, i)).product();
            let target = BasisIndex::Pair(jm as i64, (km - k) as i64);
            let r = image.scale(C64::new(1.0 / (xi * prod), 0.0)).sub(&FinVec::basis(target));
            worst = worst.max(r.norm_sqr());
        }
        out.push(worst);
    }
    Ok(out)
}

impl TreeShift {
    fn build(
        names: Vec<String>,
        edges: &[(u32, u32)],
        core_weights: Vec<Option<f64>>,
        tails: Vec<(u32, TailWeights)>,
        up: Option<WeightGen>,
    ) -> Result<Self> {
        let attach = tails.iter().map(|(a, _)| *a).collect();
        let tree = DirectedTree::new(names, edges, attach, up.is_some())?;
        TreeShift::new(tree, core_weights, tails.into_iter().map(|(_, t)| t).collect(), up)
    }
}

/// Rooted full binary core of the given depth, core weights `weight`, one tail under each bottom vertex.
pub fn binary_core_tree(depth: u32, tail: WeightGen, weight: f64) -> Result<TreeShift> {
    let n = (1u32 << (depth + 1)) - 1;
    let names = (0..n).map(|i| format!("b{i}")).collect();
    let edges: Vec<(u32, u32)> = (1..n).map(|v| ((v - 1) / 2, v)).collect();
    let weights = (0..n).map(|v| (v > 0).then_some(weight)).collect();
    let tails = ((1u32 << depth) - 1..n).map(|v| (v, TailWeights { gen: tail.clone(), start: 1 })).collect();
    TreeShift::build(names, &edges, weights, tails, None)
}

/// `𝒯̃`: vertex `0` with weight `λ_0`, trunk `n >= 1` and branch `k'` as tails, up-ray `λ_{−k} = up(−k)`.
pub fn tilde_tree(up: WeightGen, lambda0: f64, trunk: TailWeights, branch: TailWeights) -> Result<TreeShift> {
    TreeShift::build(vec!["0".into()], &[], vec![Some(lambda0)], vec![(0, trunk), (0, branch)], Some(up))
}

/// Rootless tree with one branching vertex `0`, a trunk `1..=j` (continued by a tail when given)
/// and a finite branch `1'..=k0'`.
pub fn leaf_tree(
    up: WeightGen,
    lambda0: f64,
    trunk: &[f64],
    trunk_tail: Option<TailWeights>,
    branch: &[f64],
) -> Result<TreeShift> {
    let mut names = vec!["0".to_string()];
    let mut weights = vec![Some(lambda0)];
    let mut edges = Vec::new();
    let mut chain = |labels: Vec<String>, ws: &[f64], names: &mut Vec<String>| {
        let mut prev = 0u32;
        for (l, &w) in labels.into_iter().zip(ws) {
            let v = names.len() as u32;
            names.push(l);
            weights.push(Some(w));
            edges.push((prev, v));
            prev = v;
        }
        prev
    };
    let last = chain((1..=trunk.len()).map(|i| i.to_string()).collect(), trunk, &mut names);
    chain((1..=branch.len()).map(|i| format!("{i}'")).collect(), branch, &mut names);
    let tails = trunk_tail.into_iter().map(|t| (last, t)).collect();
    TreeShift::build(names, &edges, weights, tails, Some(up))
}

/// Bilateral line with `S e_n = gen(n) e_{n+1}`, matching [`crate::lazyop::bilateral_shift`].
/// Vertex `n` is [`line_vertex`]`(n)` and carries `λ_n = gen(n − 1)`.
pub fn bilateral_line(gen: WeightGen) -> Result<TreeShift> {
    let w0 = gen.value(0);
    TreeShift::build(vec!["1".into()], &[], vec![Some(w0)], vec![(0, TailWeights { gen: gen.clone(), start: 1 })], Some(gen))
}

/// Vertex `n ∈ ℤ` of [`bilateral_line`].
pub fn line_vertex(n: i64) -> TreeVertex {
    match n {
        1 => TreeVertex::Core(0),
        n if n > 1 => TreeVertex::Tail { tail: 0, pos: (n - 1) as u64 },
        n => TreeVertex::Up((1 - n) as u64),
    }
}

/// Unilateral line rooted at `0` with `S e_n = gen(n) e_{n+1}`; vertex `n >= 1` is `Tail(0, n)`.
pub fn rooted_line(gen: WeightGen) -> Result<TreeShift> {
    TreeShift::build(vec!["0".into()], &[], vec![None], vec![(0, TailWeights { gen, start: 0 })], None)
}

#[derive(Debug, Clone, Deserialize)]
struct TailJson {
    attach: serde_json::Value,
    gen: WeightGen,
    #[serde(default)]
    start: Option<i64>,
}

#[derive(Debug, Clone, Deserialize)]
struct TreeJson {
    vertices: Vec<serde_json::Value>,
    #[serde(default)]
    edges: Vec<(serde_json::Value, serde_json::Value)>,
    #[serde(default)]
    root: Option<serde_json::Value>,
    #[serde(default)]
    weights: BTreeMap<String, f64>,
    #[serde(default)]
    tails: Vec<TailJson>,
    #[serde(default)]
    up_ray: Option<WeightGen>,
}

fn label(v: &serde_json::Value) -> Result<String> {
    match v {
        serde_json::Value::String(s) => Ok(s.clone()),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(Error::Input(format!("vertex label {other} is neither a string nor a number"))),
    }
}

impl TreeShift {
    /// Parses the tree JSON schema; tail weights default to `λ_{Tail(t,p)} = gen(p)`.
    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let t: TreeJson = serde_json::from_value(value.clone()).map_err(|e| Error::Input(format!("tree JSON: {e}")))?;
        let names: Vec<String> = t.vertices.iter().map(label).collect::<Result<_>>()?;
        let index: BTreeMap<String, u32> = names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect();
        if index.len() != names.len() {
            return Err(Error::Input("duplicate vertex label".into()));
        }
        let find = |v: &serde_json::Value| -> Result<u32> {
            let l = label(v)?;
            index.get(&l).copied().ok_or_else(|| Error::Input(format!("unknown vertex {l}")))
        };
        let edges: Vec<(u32, u32)> = t.edges.iter().map(|(u, v)| Ok((find(u)?, find(v)?))).collect::<Result<_>>()?;
        for k in t.weights.keys() {
            if !index.contains_key(k) {
                return Err(Error::Input(format!("weight for unknown vertex {k}")));
            }
        }
        let weights = names.iter().map(|n| t.weights.get(n).copied()).collect();
        let tails = t
            .tails
            .iter()
            .map(|tj| Ok((find(&tj.attach)?, TailWeights { gen: tj.gen.clone(), start: tj.start.unwrap_or(1) })))
            .collect::<Result<Vec<_>>>()?;
        let shift = TreeShift::build(names, &edges, weights, tails, t.up_ray)?;
        if let Some(r) = &t.root {
            if shift.tree.up_ray || TreeVertex::Core(find(r)?) != shift.tree.top() {
                return Err(Error::Input(format!("declared root {} is not the top of a rooted tree", label(r)?)));
            }
        }
        Ok(shift)
    }
}

/// Seeded random contraction on a finite-core tree: up to 7 core vertices, random tails with
/// table-then-constant weights, and an up-ray half of the time.
pub fn random_tree_shift(seed: u64) -> Result<TreeShift> {
    use rand::Rng;
    let mut rng = crate::random::rng(seed);
    let n: u32 = rng.random_range(1..=7);
    let names = (0..n).map(|i| format!("c{i}")).collect();
    let edges: Vec<(u32, u32)> = (1..n).map(|v| (rng.random_range(0..v), v)).collect();
    let tail_counts: Vec<u32> = (0..n).map(|_| rng.random_range(0..=2)).collect();
    let up_ray = rng.random_bool(0.5);
    let mut weights = vec![None; n as usize];
    let mut tails = Vec::new();
    for u in 0..n {
        let kids: Vec<u32> = edges.iter().filter(|e| e.0 == u).map(|e| e.1).collect();
        let d = (kids.len() as u32 + tail_counts[u as usize]).max(1) as f64;
        for &c in &kids {
            weights[c as usize] = Some(rng.random_range(0.3..=1.0) / d.sqrt());
        }
        for _ in 0..tail_counts[u as usize] {
            let mut prefix = vec![rng.random_range(0.3..=1.0) / d.sqrt()];
            prefix.extend((0..rng.random_range(0..3)).map(|_| rng.random_range(0.3..=1.0)));
            let tail = if rng.random_bool(0.75) { 1.0 } else { 0.8 };
            let gen = WeightGen::new(WeightRule::TableThenConstant { start: 1, prefix, tail, head: None });
            tails.push((u, TailWeights { gen, start: 1 }));
        }
    }
    let up = up_ray.then(|| {
        weights[0] = Some(rng.random_range(0.3..=1.0));
        let prefix = (0..3).map(|_| rng.random_range(0.3..=1.0)).collect();
        WeightGen::new(WeightRule::TableThenConstant { start: -3, prefix, tail: 1.0, head: Some(1.0) })
    });
    TreeShift::build(names, &edges, weights, tails, up)
}

/// `dim ker S^*` on `span{e_v : |level(v)| <= N}` by matrix rank, for `N` past the core.
pub fn corank_by_matrix_rank(s: &TreeShift) -> Result<usize> {
    let depth = (0..s.tree.core_len()).map(|i| s.tree.level(&TreeVertex::Core(i))).max().unwrap_or(0);
    let n = depth + 2;
    let lo = if s.tree.up_ray { -n } else { 0 };
    let cols: Vec<TreeVertex> = (lo..=n).flat_map(|l| s.tree.level_set(l)).collect();
    let mut rows: Vec<TreeVertex> = cols.clone();
    rows.extend(cols.iter().filter_map(|v| s.tree.parent(v)));
    rows.sort();
    rows.dedup();
    let mut m = vec![vec![0.0; cols.len()]; rows.len()];
    for (j, v) in cols.iter().enumerate() {
        if let Some(p) = s.tree.parent(v) {
            let i = rows.binary_search(&p).expect("parents included");
            m[i][j] = s.weight(v)?;
        }
    }
    let refs: Vec<&[f64]> = m.iter().map(Vec::as_slice).collect();
    Ok(cols.len() - crate::matkernel::rank(&from_real_rows(&refs), crate::matkernel::RANK_TOL))
}
