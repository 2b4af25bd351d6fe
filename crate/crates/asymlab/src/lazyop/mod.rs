//! Infinite-dimensional operators given by their exact action on basis vectors,
//! evaluated on finitely supported vectors.

mod banach;
mod builders;
mod factory;
mod weights;

pub use banach::{banach_range_bounds, cesaro_mean_at, BanachReport, WindowExtrema};
pub use builders::{
    bilateral_shift, bilateral_similarity_report, block_preset, block_unishift, case_i1_level_exact,
    case_i1_preset, conjugated_bilateral, diag_cluster_index, diag_cluster_shift, orthogonal_sum,
    shift_cor_report, unilateral_shift, weighted_injection, BilateralSimilarity, BlockGen,
    BlockPreset, BlockShift, BoundCheck, ConjugatedBilateral, DiagCluster, ExactLevel,
    InjectionMap, ShiftCorReport,
};
pub use factory::{
    ch3_sequence, ch3_shift, ch5_column_sums, ch5_intertwining_check, paper_example, Ch3,
    Ch5Check, Ch5Column, PaperExample, PAPER_EXAMPLES,
};
pub use weights::{
    telescoping_closed_form, telescoping_partial_exact, trigamma, Direction, TailKind, TailProduct,
    WeightGen, WeightRule,
};

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::Rational;
use crate::matkernel::C64;

/// Default bound on the support size of intermediate vectors.
pub const DEFAULT_SUPPORT_CAP: usize = 1_000_000;

/// Vertex label of a directed tree: core vertex, position on a down-tail, or position on the up-ray.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum TreeVertex {
    Core(u32),
    Tail { tail: u32, pos: u64 },
    Up(u64),
}

/// Label of a basis vector.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum BasisIndex {
    Int(i64),
    Nat(u64),
    Pair(i64, i64),
    TreeV(TreeVertex),
    /// Basis vector of summand `id` in an orthogonal sum.
    Sum(u32, Box<BasisIndex>),
}

impl fmt::Display for BasisIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BasisIndex::Int(i) => write!(f, "e[{i}]"),
            BasisIndex::Nat(i) => write!(f, "e[{i}]"),
            BasisIndex::Pair(i, j) => write!(f, "e[{i},{j}]"),
            BasisIndex::TreeV(TreeVertex::Core(u)) => write!(f, "v{u}"),
            BasisIndex::TreeV(TreeVertex::Tail { tail, pos }) => write!(f, "t{tail}.{pos}"),
            BasisIndex::TreeV(TreeVertex::Up(k)) => write!(f, "up{k}"),
            BasisIndex::Sum(id, inner) => write!(f, "{id}:{inner}"),
        }
    }
}

/// Inclusive bounds on one integer coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdxRange {
    pub min: Option<i64>,
    pub max: Option<i64>,
}

impl IdxRange {
    pub const ALL: IdxRange = IdxRange { min: None, max: None };

    pub fn from(min: i64) -> Self {
        IdxRange { min: Some(min), max: None }
    }

    pub fn between(min: i64, max: i64) -> Self {
        IdxRange { min: Some(min), max: Some(max) }
    }

    pub fn contains(&self, i: i64) -> bool {
        self.min.map_or(true, |m| i >= m) && self.max.map_or(true, |m| i <= m)
    }
}

/// The index set an operator acts on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Universe {
    Int,
    Nat { start: u64 },
    Pair { first: IdxRange, second: IdxRange },
    Tree,
    Sum(Vec<Universe>),
}

impl Universe {
    pub fn contains(&self, u: &BasisIndex) -> bool {
        match (self, u) {
            (Universe::Int, BasisIndex::Int(_)) => true,
            (Universe::Nat { start }, BasisIndex::Nat(i)) => i >= start,
            (Universe::Pair { first, second }, BasisIndex::Pair(i, j)) => {
                first.contains(*i) && second.contains(*j)
            }
            (Universe::Tree, BasisIndex::TreeV(_)) => true,
            (Universe::Sum(parts), BasisIndex::Sum(id, inner)) => {
                parts.get(*id as usize).is_some_and(|p| p.contains(inner))
            }
            _ => false,
        }
    }

    pub fn check(&self, u: &BasisIndex) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(Error::Universe { index: u.to_string(), universe: format!("{self:?}") })
        }
    }
}

/// Finitely supported vector; zero entries are never stored.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FinVec {
    entries: BTreeMap<BasisIndex, C64>,
}

impl FinVec {
    pub fn zero() -> Self {
        FinVec::default()
    }

    pub fn basis(u: BasisIndex) -> Self {
        FinVec::scaled(u, C64::new(1.0, 0.0))
    }

    pub fn scaled(u: BasisIndex, c: C64) -> Self {
        let mut v = FinVec::zero();
        v.add(u, c);
        v
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (BasisIndex, C64)>) -> Self {
        let mut v = FinVec::zero();
        for (u, c) in pairs {
            v.add(u, c);
        }
        v
    }

    /// Add `c e_u`, removing the entry if it cancels to zero.
    pub fn add(&mut self, u: BasisIndex, c: C64) {
        if c == C64::new(0.0, 0.0) {
            return;
        }
        match self.entries.get_mut(&u) {
            Some(x) => {
                *x += c;
                if *x == C64::new(0.0, 0.0) {
                    self.entries.remove(&u);
                }
            }
            None => {
                self.entries.insert(u, c);
            }
        }
    }

    pub fn axpy(&mut self, a: C64, x: &FinVec) {
        for (u, c) in &x.entries {
            self.add(u.clone(), a * c);
        }
    }

    pub fn scale(&self, a: C64) -> FinVec {
        FinVec::from_pairs(self.entries.iter().map(|(u, c)| (u.clone(), a * c)))
    }

    pub fn sub(&self, other: &FinVec) -> FinVec {
        let mut out = self.clone();
        out.axpy(C64::new(-1.0, 0.0), other);
        out
    }

    pub fn get(&self, u: &BasisIndex) -> C64 {
        self.entries.get(u).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisIndex, &C64)> {
        self.entries.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// `⟨self, other⟩`, linear in the first argument.
    pub fn inner(&self, other: &FinVec) -> C64 {
        self.entries.iter().map(|(u, c)| c * other.get(u).conj()).sum()
    }
}

/// Action of an operator or its adjoint on one basis vector.
pub type BasisMap = Arc<dyn Fn(&BasisIndex) -> Result<FinVec> + Send + Sync>;

/// Limit of `⟨T^{*n} T^n e_u, e_u⟩` together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub value: f64,
    #[serde(skip)]
    pub exact: Option<Rational>,
    pub lower: f64,
    pub upper: f64,
    pub route: Route,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    /// Closed-form tail product.
    Oracle,
    /// Sequence observed constant over the second half of the horizon.
    Stationary,
    /// Interval from partial products and a declared tail bound.
    Bracket,
}

impl AsymptoticValue {
    pub fn exact(q: Rational, note: impl Into<String>) -> Self {
        let v = crate::exact::to_f64(&q);
        AsymptoticValue {
            value: v,
            exact: Some(q),
            lower: v,
            upper: v,
            route: Route::Oracle,
            note: note.into(),
        }
    }

    pub fn from_tail(t: &TailProduct, note: impl Into<String>) -> Result<Self> {
        match t.kind {
            TailKind::Exact => Ok(AsymptoticValue {
                value: t.value,
                exact: t.exact.clone(),
                lower: t.lower,
                upper: t.upper,
                route: Route::Oracle,
                note: note.into(),
            }),
            TailKind::Bound => Ok(AsymptoticValue {
                value: t.value,
                exact: None,
                lower: t.lower,
                upper: t.upper,
                route: Route::Bracket,
                note: note.into(),
            }),
            TailKind::Divergent => {
                Err(Error::Unknown("tail product diverges: operator is not a contraction".into()))
            }
            TailKind::Unknown => Err(Error::Unknown("no tail-product oracle".into())),
        }
    }
}

pub type DiagOracle = Arc<dyn Fn(&BasisIndex) -> Result<AsymptoticValue> + Send + Sync>;

/// Operator defined by its action on basis vectors.
#[derive(Clone)]
pub struct LazyOperator {
    pub domain: Universe,
    pub codomain: Universe,
    apply_fn: BasisMap,
    adjoint_fn: BasisMap,
    pub norm_bound: f64,
    pub description: String,
    diag: Option<DiagOracle>,
    pub support_cap: usize,
}

impl fmt::Debug for LazyOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LazyOperator")
            .field("description", &self.description)
            .field("domain", &self.domain)
            .field("codomain", &self.codomain)
            .field("norm_bound", &self.norm_bound)
            .finish()
    }
}

impl LazyOperator {
    pub fn new(
        domain: Universe,
        codomain: Universe,
        apply_fn: BasisMap,
        adjoint_fn: BasisMap,
        norm_bound: f64,
        description: impl Into<String>,
    ) -> Self {
        LazyOperator {
            domain,
            codomain,
            apply_fn,
            adjoint_fn,
            norm_bound,
            description: description.into(),
            diag: None,
            support_cap: DEFAULT_SUPPORT_CAP,
        }
    }

    pub fn with_diag(mut self, oracle: DiagOracle) -> Self {
        self.diag = Some(oracle);
        self
    }

    pub fn with_support_cap(mut self, cap: usize) -> Self {
        self.support_cap = cap;
        self
    }

    pub fn has_diag_oracle(&self) -> bool {
        self.diag.is_some()
    }

    pub fn identity(universe: Universe) -> Self {
        let f: BasisMap = Arc::new(|u: &BasisIndex| Ok(FinVec::basis(u.clone())));
        let oracle: DiagOracle =
            Arc::new(|_: &BasisIndex| Ok(AsymptoticValue::exact(crate::exact::int(1), "identity")));
        LazyOperator::new(universe.clone(), universe, f.clone(), f, 1.0, "identity")
            .with_diag(oracle)
    }

    pub fn apply_basis(&self, u: &BasisIndex) -> Result<FinVec> {
        self.domain.check(u)?;
        (self.apply_fn)(u)
    }

    pub fn adjoint_basis(&self, u: &BasisIndex) -> Result<FinVec> {
        self.codomain.check(u)?;
        (self.adjoint_fn)(u)
    }

    fn linear(&self, x: &FinVec, adjoint: bool) -> Result<FinVec> {
        let mut out = FinVec::zero();
        for (u, c) in x.iter() {
            let image = if adjoint { self.adjoint_basis(u)? } else { self.apply_basis(u)? };
            out.axpy(*c, &image);
            if out.len() > self.support_cap {
                return Err(Error::SupportCap(self.support_cap));
            }
        }
        Ok(out)
    }

    pub fn apply(&self, x: &FinVec) -> Result<FinVec> {
        self.linear(x, false)
    }

    pub fn apply_adjoint(&self, x: &FinVec) -> Result<FinVec> {
        self.linear(x, true)
    }

    pub fn apply_power(&self, x: &FinVec, n: usize) -> Result<FinVec> {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.apply(&y)?;
        }
        Ok(y)
    }

    pub fn apply_adjoint_power(&self, x: &FinVec, n: usize) -> Result<FinVec> {
        let mut y = x.clone();
        for _ in 0..n {
            y = self.apply_adjoint(&y)?;
        }
        Ok(y)
    }

    /// `⟨T e_u, e_v⟩`.
    pub fn matrix_element(&self, u: &BasisIndex, v: &BasisIndex) -> Result<C64> {
        Ok(self.apply_basis(u)?.get(v))
    }

    /// The adjoint operator.
    pub fn adjoint(&self) -> LazyOperator {
        LazyOperator {
            domain: self.codomain.clone(),
            codomain: self.domain.clone(),
            apply_fn: self.adjoint_fn.clone(),
            adjoint_fn: self.apply_fn.clone(),
            norm_bound: self.norm_bound,
            description: format!("({})*", self.description),
            diag: None,
            support_cap: self.support_cap,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &LazyOperator) -> Result<LazyOperator> {
        if inner.codomain != self.domain {
            return Err(Error::Shape(format!(
                "cannot compose {} after {}: universes differ",
                self.description, inner.description
            )));
        }
        let (outer_a, inner_a) = (self.clone(), inner.clone());
        let apply_fn: BasisMap = Arc::new(move |u| outer_a.apply(&inner_a.apply_basis(u)?));
        let (outer_b, inner_b) = (self.clone(), inner.clone());
        let adjoint_fn: BasisMap =
            Arc::new(move |u| inner_b.apply_adjoint(&outer_b.adjoint_basis(u)?));
        Ok(LazyOperator {
            domain: inner.domain.clone(),
            codomain: self.codomain.clone(),
            apply_fn,
            adjoint_fn,
            norm_bound: self.norm_bound * inner.norm_bound,
            description: format!("{} {}", self.description, inner.description),
            diag: None,
            support_cap: self.support_cap.min(inner.support_cap),
        })
    }

    /// `⟨T^{*n} T^n e_u, e_u⟩ = ||T^n e_u||²`.
    pub fn gram_diag(&self, u: &BasisIndex, n: usize) -> Result<f64> {
        Ok(self.apply_power(&FinVec::basis(u.clone()), n)?.norm_sqr())
    }

    /// `T^{*n} T^n x`.
    pub fn gram_apply(&self, x: &FinVec, n: usize) -> Result<FinVec> {
        self.apply_adjoint_power(&self.apply_power(x, n)?, n)
    }
}

/// Default horizon for the stationary route of [`asymptotic_diag_value`].
pub const DEFAULT_DIAG_HORIZON: usize = 4096;

/// `lim_n ⟨T^{*n} T^n e_u, e_u⟩`: the operator's oracle when present, otherwise the
/// sequence must be constant over the second half of the horizon.
pub fn asymptotic_diag_value(t: &LazyOperator, u: &BasisIndex, horizon: usize) -> Result<AsymptoticValue> {
    t.domain.check(u)?;
    if let Some(oracle) = &t.diag {
        return oracle(u);
    }
    let mut x = FinVec::basis(u.clone());
    let half = horizon / 2;
    let mut reference = None;
    for n in 1..=horizon {
        x = t.apply(&x)?;
        let s = x.norm_sqr();
        if n == half.max(1) {
            reference = Some(s);
        } else if n > half {
            if reference != Some(s) {
                return Err(Error::NonConvergence(format!(
                    "no tail oracle and {u} is not stationary within {horizon} steps"
                )));
            }
        }
    }
    let v = reference.unwrap_or(1.0);
    Ok(AsymptoticValue {
        value: v,
        exact: None,
        lower: v,
        upper: v,
        route: Route::Stationary,
        note: format!("constant on steps {half}..{horizon}"),
    })
}

/// Largest `|⟨T e_u, e_v⟩ − conj⟨T* e_v, e_u⟩|` over the given samples.
pub fn adjoint_consistency(t: &LazyOperator, us: &[BasisIndex], vs: &[BasisIndex]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for u in us {
        let tu = t.apply_basis(u)?;
        for v in vs {
            let tv = t.adjoint_basis(v)?;
            worst = worst.max((tu.get(v) - tv.get(u).conj()).norm());
        }
    }
    Ok(worst)
}

/// Parse a support list `[[index, [re, im]], ...]`.
pub fn finvec_from_json(value: &serde_json::Value) -> Result<FinVec> {
    let pairs: Vec<(BasisIndex, [f64; 2])> = serde_json::from_value(value.clone())
        .map_err(|e| Error::Input(format!("vector: {e}")))?;
    Ok(FinVec::from_pairs(pairs.into_iter().map(|(u, [re, im])| (u, C64::new(re, im)))))
}

pub fn finvec_to_json(x: &FinVec) -> serde_json::Value {
    let pairs: Vec<(BasisIndex, [f64; 2])> = x.iter().map(|(u, c)| (u.clone(), [c.re, c.im])).collect();
    serde_json::to_value(pairs).expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c1(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn finvec_is_canonical() {
        let mut v = FinVec::basis(BasisIndex::Int(0));
        v.add(BasisIndex::Int(0), c1(-1.0));
        assert!(v.is_empty());
        v.add(BasisIndex::Int(1), c1(0.0));
        assert!(v.is_empty());
        let x = FinVec::from_pairs([(BasisIndex::Int(1), c1(3.0)), (BasisIndex::Int(2), c1(4.0))]);
        assert_eq!(x.norm(), 5.0);
    }

    #[test]
    fn identity_and_shift() {
        let id = LazyOperator::identity(Universe::Int);
        let x = FinVec::from_pairs([(BasisIndex::Int(-3), c1(2.0)), (BasisIndex::Int(5), C64::new(0.0, 1.0))]);
        assert_eq!(id.apply(&x).unwrap(), x);
        let s = bilateral_shift(WeightGen::constant(1.0));
        assert_eq!(s.apply_basis(&BasisIndex::Int(0)).unwrap(), FinVec::basis(BasisIndex::Int(1)));
    }

    #[test]
    fn universe_mismatch_is_an_error() {
        let s = bilateral_shift(WeightGen::constant(1.0));
        assert!(matches!(s.apply_basis(&BasisIndex::Nat(3)), Err(Error::Universe { .. })));
        let u = unilateral_shift(WeightGen::constant(1.0), 1);
        assert!(matches!(u.apply_basis(&BasisIndex::Nat(0)), Err(Error::Universe { .. })));
    }

    #[test]
    fn support_cap_is_enforced() {
        let f: BasisMap = Arc::new(|u: &BasisIndex| match u {
            BasisIndex::Int(i) => {
                Ok(FinVec::from_pairs([(BasisIndex::Int(2 * i), c1(1.0)), (BasisIndex::Int(2 * i + 1), c1(1.0))]))
            }
            _ => unreachable!(),
        });
        let t = LazyOperator::new(Universe::Int, Universe::Int, f.clone(), f, 2.0, "doubling")
            .with_support_cap(100);
        assert!(matches!(
            t.apply_power(&FinVec::basis(BasisIndex::Int(1)), 10),
            Err(Error::SupportCap(100))
        ));
    }

    #[test]
    fn telescoping_power_coefficient() {
        let t = unilateral_shift(WeightGen::new(WeightRule::Telescoping { j0: 2 }), 1);
        for n in [1usize, 5, 50, 500] {
            let y = t.apply_power(&FinVec::basis(BasisIndex::Nat(1)), n).unwrap();
            let coef = y.get(&BasisIndex::Nat(1 + n as u64)).re;
            // Oracle: ∏_{l=2}^{n} (l²−1)/l² = (n+1)/(2n).
            let expected = (n as f64 + 1.0) / (2.0 * n as f64);
            assert!((coef * coef - expected).abs() < 1e-13, "{n}");
        }
    }

    #[test]
    fn compose_and_adjoint() {
        let s = bilateral_shift(WeightGen::constant(0.5));
        let s2 = s.compose(&s).unwrap();
        let y = s2.apply_basis(&BasisIndex::Int(0)).unwrap();
        assert_eq!(y, FinVec::scaled(BasisIndex::Int(2), c1(0.25)));
        let z = s2.adjoint().apply(&y).unwrap();
        assert_eq!(z, FinVec::scaled(BasisIndex::Int(0), c1(0.0625)));
    }

    #[test]
    fn stationary_route_and_failure() {
        let s = bilateral_shift(WeightGen::new(WeightRule::TableThenConstant {
            start: 0,
            prefix: vec![0.5],
            tail: 1.0,
            head: None,
        }));
        let plain = LazyOperator::new(
            s.domain.clone(),
            s.codomain.clone(),
            s.apply_fn.clone(),
            s.adjoint_fn.clone(),
            1.0,
            "no oracle",
        );
        let v = asymptotic_diag_value(&plain, &BasisIndex::Int(-2), 64).unwrap();
        assert_eq!(v.route, Route::Stationary);
        assert_eq!(v.value, 0.25);
        let t = unilateral_shift(WeightGen::new(WeightRule::Telescoping { j0: 2 }), 1);
        let plain = LazyOperator::new(
            t.domain.clone(),
            t.codomain.clone(),
            t.apply_fn.clone(),
            t.adjoint_fn.clone(),
            1.0,
            "no oracle",
        );
        assert!(asymptotic_diag_value(&plain, &BasisIndex::Nat(2), 64).is_err());
    }

    #[test]
    fn eq_shift_values() {
        let s = bilateral_shift(WeightGen::new(WeightRule::TableThenConstant {
            start: 1,
            prefix: vec![],
            tail: 1.0,
            head: Some(0.5),
        }));
        for k in -10i64..=10 {
            let v = asymptotic_diag_value(&s, &BasisIndex::Int(k), 0).unwrap();
            let expected = if k > 0 { 1.0 } else { 0.5f64.powi((-2 * k + 2) as i32) };
            assert_eq!(v.value, expected);
            assert_eq!(v.route, Route::Oracle);
            assert_eq!(v.exact.unwrap(), crate::exact::from_f64(expected));
        }
    }

    #[test]
    fn finvec_json_round_trip() {
        let x = FinVec::from_pairs([
            (BasisIndex::Pair(1, 2), C64::new(0.5, -1.0)),
            (BasisIndex::Nat(4), c1(2.0)),
        ]);
        let j = finvec_to_json(&x);
        assert_eq!(finvec_from_json(&j).unwrap(), x);
    }

    proptest! {
        #[test]
        fn adjoint_consistency_on_shifts(c in 0.1f64..1.0, k in -20i64..20) {
            let s = bilateral_shift(WeightGen::new(WeightRule::TableThenConstant {
                start: -3, prefix: vec![c, 1.0 - c / 2.0, 0.7], tail: 1.0, head: Some(c),
            }));
            let us: Vec<_> = (k - 3..k + 3).map(BasisIndex::Int).collect();
            prop_assert_eq!(adjoint_consistency(&s, &us, &us).unwrap(), 0.0);
        }

        #[test]
        fn gram_monotone_for_contractions(k in -20i64..20, n in 1usize..40) {
            let s = bilateral_shift(WeightGen::new(WeightRule::ExpInvSquare));
            let u = BasisIndex::Int(k);
            prop_assert!(s.gram_diag(&u, n + 1).unwrap() <= s.gram_diag(&u, n).unwrap());
        }
    }
}
