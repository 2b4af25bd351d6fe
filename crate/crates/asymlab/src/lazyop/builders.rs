//! Weighted shifts, operator-weighted shifts and orthogonal sums.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use super::weights::{Direction, WeightGen, WeightRule};
use super::{
    AsymptoticValue, BasisIndex, BasisMap, DiagOracle, FinVec, IdxRange, LazyOperator, Route,
    Universe,
};
use crate::error::{Error, Result};
use crate::exact::{from_f64, int, ratio, to_f64, Rational};
use crate::matkernel::{
    eig_hermitian, op_norm, psd_power, require_hermitian, CMatrix, C64,
};

/// `u ↦ (v, w)` meaning `e_u ↦ w e_v`, or `None` for `e_u ↦ 0`.
pub type InjectionMap = Arc<dyn Fn(&BasisIndex) -> Option<(BasisIndex, f64)> + Send + Sync>;

/// Operator sending each basis vector to a multiple of one basis vector, injectively.
pub fn weighted_injection(
    domain: Universe,
    codomain: Universe,
    forward: InjectionMap,
    backward: InjectionMap,
    norm_bound: f64,
    description: impl Into<String>,
) -> LazyOperator {
    let lift = |m: InjectionMap| -> BasisMap {
        Arc::new(move |u: &BasisIndex| {
            Ok(match m(u) {
                Some((v, w)) => FinVec::scaled(v, C64::new(w, 0.0)),
                None => FinVec::zero(),
            })
        })
    };
    LazyOperator::new(domain, codomain, lift(forward), lift(backward), norm_bound, description)
}

fn nat(u: &BasisIndex) -> u64 {
    match u {
        BasisIndex::Nat(i) => *i,
        _ => unreachable!("universe checked"),
    }
}

fn int_idx(u: &BasisIndex) -> i64 {
    match u {
        BasisIndex::Int(i) => *i,
        _ => unreachable!("universe checked"),
    }
}

fn pair(u: &BasisIndex) -> (i64, i64) {
    match u {
        BasisIndex::Pair(i, j) => (*i, *j),
        _ => unreachable!("universe checked"),
    }
}

fn tail_oracle(gen: WeightGen, key: fn(&BasisIndex) -> i64) -> DiagOracle {
    Arc::new(move |u: &BasisIndex| {
        AsymptoticValue::from_tail(&gen.forward_tail(key(u)), "forward tail product of the weights")
    })
}

/// `T e_j = w_j e_{j+1}` on `{e_j : j >= start}`.
pub fn unilateral_shift(gen: WeightGen, start: u64) -> LazyOperator {
    let (g1, g2) = (gen.clone(), gen.clone());
    let forward: InjectionMap =
        Arc::new(move |u| Some((BasisIndex::Nat(nat(u) + 1), g1.value(nat(u) as i64))));
    let backward: InjectionMap = Arc::new(move |u| {
        let j = nat(u);
        (j > start).then(|| (BasisIndex::Nat(j - 1), g2.value(j as i64 - 1)))
    });
    let universe = Universe::Nat { start };
    let norm = gen.extrema_from(start as i64).0;
    weighted_injection(universe.clone(), universe, forward, backward, norm, "unilateral weighted shift")
        .with_diag(tail_oracle(gen, |u| nat(u) as i64))
}

/// `T e_k = w_k e_{k+1}` on `{e_k : k ∈ ℤ}`.
pub fn bilateral_shift(gen: WeightGen) -> LazyOperator {
    let (g1, g2) = (gen.clone(), gen.clone());
    let forward: InjectionMap =
        Arc::new(move |u| Some((BasisIndex::Int(int_idx(u) + 1), g1.value(int_idx(u)))));
    let backward: InjectionMap =
        Arc::new(move |u| Some((BasisIndex::Int(int_idx(u) - 1), g2.value(int_idx(u) - 1))));
    let norm = gen.extrema_from(0).0.max(gen.extrema_to(0).0);
    weighted_injection(Universe::Int, Universe::Int, forward, backward, norm, "bilateral weighted shift")
        .with_diag(tail_oracle(gen, int_idx))
}

pub type BlockGen = Arc<dyn Fn(i64) -> CMatrix + Send + Sync>;

const PRECONDITION_SLACK: f64 = 1e-12;

fn spectral_extent(a: &CMatrix) -> Result<(f64, f64)> {
    let e = eig_hermitian(a)?;
    let lo = e.values.first().copied().unwrap_or(0.0);
    let hi = e.values.last().copied().unwrap_or(0.0);
    Ok((lo, hi))
}

/// Transfer matrix `A_{j+1}^{-1/2} A_j^{1/2}` between consecutive levels.
fn transfer(blocks: &BlockGen, j: i64) -> Result<CMatrix> {
    let next = psd_power(&blocks(j + 1), -0.5)?;
    let here = psd_power(&blocks(j), 0.5)?;
    Ok(next * here)
}

fn block_maps(blocks: BlockGen, dim: usize, first_level: Option<i64>) -> (BasisMap, BasisMap) {
    let b1 = blocks.clone();
    let apply: BasisMap = Arc::new(move |u| {
        let (j, r) = pair(u);
        let m = transfer(&b1, j)?;
        Ok(FinVec::from_pairs((0..dim).map(|s| (BasisIndex::Pair(j + 1, s as i64), m[(s, r as usize)]))))
    });
    let adjoint: BasisMap = Arc::new(move |u| {
        let (j, s) = pair(u);
        if first_level.is_some_and(|f| j <= f) {
            return Ok(FinVec::zero());
        }
        let m = transfer(&blocks, j - 1)?;
        Ok(FinVec::from_pairs(
            (0..dim).map(|r| (BasisIndex::Pair(j - 1, r as i64), m[(s as usize, r)].conj())),
        ))
    });
    (apply, adjoint)
}

/// Built-in block generators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockPreset {
    /// `A_j = (1 − 2^{−j}) I₂`.
    Dyadic,
    /// `A_j = R_j diag(a_{2j+1}, a_{2j+2}) R_jᵀ` with `a_m = m/(m+1)` and `R_j` a rotation by `0.3 j`.
    RotatedHarmonic,
    /// Scalar blocks `A_j = j/(j+1)`.
    ScalarHarmonic,
}

impl BlockPreset {
    pub fn generator(self) -> (BlockGen, usize) {
        match self {
            BlockPreset::Dyadic => (
                Arc::new(|j: i64| {
                    let a = 1.0 - 0.5f64.powi(j as i32);
                    crate::matkernel::diag_real(&[a, a])
                }),
                2,
            ),
            BlockPreset::RotatedHarmonic => (
                Arc::new(|j: i64| {
                    let a = |m: i64| m as f64 / (m as f64 + 1.0);
                    let (s, c) = (0.3 * j as f64).sin_cos();
                    let r = crate::matkernel::from_real_rows(&[&[c, -s], &[s, c]]);
                    let d = crate::matkernel::diag_real(&[a(2 * j + 1), a(2 * j + 2)]);
                    let m = &r * d * r.transpose();
                    (&m + m.adjoint()).scale(0.5)
                }),
                2,
            ),
            BlockPreset::ScalarHarmonic => (
                Arc::new(|j: i64| crate::matkernel::diag_real(&[j as f64 / (j as f64 + 1.0)])),
                1,
            ),
        }
    }

    /// Exact value of the scalar multiple `A_j = a_j I` when the preset is scalar.
    pub fn exact_scalar(self, j: i64) -> Option<Rational> {
        match self {
            BlockPreset::Dyadic => Some(int(1) - Rational::new(1.into(), num_bigint::BigInt::from(2).pow(j as u32))),
            BlockPreset::ScalarHarmonic => Some(ratio(j, j + 1)),
            BlockPreset::RotatedHarmonic => None,
        }
    }
}

/// Operator-weighted unilateral shift `T|𝒳_j = A_{j+1}^{-1/2} S A_j^{1/2}` on `e_{(j, r)}`, `j >= 0`.
#[derive(Clone)]
pub struct BlockShift {
    pub op: LazyOperator,
    pub dim: usize,
    pub blocks: BlockGen,
    pub preset: Option<BlockPreset>,
    pub sampled_levels: i64,
    pub max_transfer_norm: f64,
}

/// Outcome of `||T^{*n} T^n x − A x|| <= (1/r̲(A_n) − 1) ||x||`.
#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub n: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Rational verdict when the preset is scalar and `x` has real coefficients.
    pub exact: Option<bool>,
}

pub fn block_unishift(blocks: BlockGen, dim: usize, sample_levels: i64) -> Result<BlockShift> {
    let mut prev_hi = f64::NEG_INFINITY;
    let mut max_transfer_norm = 0.0_f64;
    for j in 0..=sample_levels {
        let a = blocks(j);
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Precondition(format!("block {j} is not {dim}x{dim}")));
        }
        require_hermitian(&a)?;
        let (lo, hi) = spectral_extent(&a)?;
        if lo < -PRECONDITION_SLACK || hi > 1.0 + PRECONDITION_SLACK {
            return Err(Error::Precondition(format!("block {j} is not a positive contraction")));
        }
        if j >= 1 && lo <= 0.0 {
            return Err(Error::Precondition(format!("block {j} is not invertible")));
        }
        if prev_hi > lo + PRECONDITION_SLACK {
            return Err(Error::Precondition(format!(
                "r(A_{}) = {prev_hi} exceeds the lower bound {lo} of A_{j}",
                j - 1
            )));
        }
        prev_hi = hi;
        if j < sample_levels {
            max_transfer_norm = max_transfer_norm.max(op_norm(&transfer(&blocks, j)?));
        }
    }
    if max_transfer_norm > 1.0 + PRECONDITION_SLACK {
        return Err(Error::Precondition(format!("transfer norm {max_transfer_norm} exceeds 1")));
    }
    let universe = Universe::Pair { first: IdxRange::from(0), second: IdxRange::between(0, dim as i64 - 1) };
    let (apply, adjoint) = block_maps(blocks.clone(), dim, Some(0));
    let b = blocks.clone();
    let oracle: DiagOracle = Arc::new(move |u| {
        let (j, r) = pair(u);
        let v = b(j)[(r as usize, r as usize)].re;
        Ok(AsymptoticValue {
            value: v,
            exact: None,
            lower: v,
            upper: v,
            route: Route::Oracle,
            note: "uniform limit equals the block-diagonal A".into(),
        })
    });
    let op = LazyOperator::new(
        universe.clone(),
        universe,
        apply,
        adjoint,
        max_transfer_norm.max(1.0),
        "operator-weighted unilateral shift",
    )
    .with_diag(oracle);
    Ok(BlockShift { op, dim, blocks, preset: None, sampled_levels: sample_levels, max_transfer_norm })
}

pub fn block_preset(preset: BlockPreset, sample_levels: i64) -> Result<BlockShift> {
    let (g, dim) = preset.generator();
    let mut s = block_unishift(g, dim, sample_levels)?;
    s.preset = Some(preset);
    if let Some(p) = s.preset.filter(|p| p.exact_scalar(0).is_some()) {
        let oracle: DiagOracle = Arc::new(move |u| {
            let (j, _) = pair(u);
            Ok(AsymptoticValue::exact(p.exact_scalar(j).expect("scalar preset"), "scalar block value"))
        });
        s.op = s.op.with_diag(oracle);
    }
    Ok(s)
}

impl BlockShift {
    /// `A x` for the block-diagonal limit.
    pub fn limit_apply(&self, x: &FinVec) -> Result<FinVec> {
        let mut out = FinVec::zero();
        for (u, c) in x.iter() {
            self.op.domain.check(u)?;
            let (j, r) = pair(u);
            let a = (self.blocks)(j);
            for s in 0..self.dim {
                out.add(BasisIndex::Pair(j, s as i64), a[(s, r as usize)] * c);
            }
        }
        Ok(out)
    }

    /// `1/r̲(A_n) − 1`.
    pub fn bound(&self, n: usize) -> Result<f64> {
        let (lo, _) = spectral_extent(&(self.blocks)(n as i64))?;
        if lo <= 0.0 {
            return Err(Error::Precondition(format!("A_{n} is not invertible")));
        }
        Ok(1.0 / lo - 1.0)
    }

    pub fn check_bound(&self, x: &FinVec, n: usize) -> Result<BoundCheck> {
        let gram = self.op.gram_apply(x, n)?;
        let lhs = gram.sub(&self.limit_apply(x)?).norm();
        let rhs = self.bound(n)? * x.norm();
        let holds = lhs <= rhs * (1.0 + 1e-12) + 1e-15;
        let exact = self.exact_bound(x, n);
        Ok(BoundCheck { n, lhs, rhs, holds, exact })
    }

    /// Rational check for scalar presets: `Σ |x_u|² d_u² <= (1/a_n − 1)² Σ |x_u|²`
    /// with `d_u = a_j / a_{j+n} − a_j`.
    fn exact_bound(&self, x: &FinVec, n: usize) -> Option<bool> {
        let p = self.preset?;
        p.exact_scalar(0)?;
        if x.iter().any(|(_, c)| c.im != 0.0) {
            return None;
        }
        let a_n = p.exact_scalar(n as i64)?;
        let b = Rational::one() / a_n - Rational::one();
        let (mut lhs, mut mass) = (Rational::zero(), Rational::zero());
        for (u, c) in x.iter() {
            let (j, _) = pair(u);
            let aj = p.exact_scalar(j)?;
            let ajn = p.exact_scalar(j + n as i64)?;
            let d = &aj / &ajn - &aj;
            let w = from_f64(c.re);
            let w2 = &w * &w;
            lhs += &w2 * &d * &d;
            mass += w2;
        }
        Some(lhs <= &b * &b * mass)
    }
}

/// Position of `α_{l,m}` in the antidiagonal arrangement.
pub fn diag_cluster_index(l: i64, m: i64) -> i64 {
    let d = l + m - 1;
    (d - 1) * d / 2 + m
}

/// Diagonal contraction shift with eigenvalues `λ_j` arranged along antidiagonals.
#[derive(Clone)]
pub struct DiagCluster {
    pub op: LazyOperator,
    pub lambda: WeightGen,
}

/// Samples checked for monotonicity.
pub const CLUSTER_SAMPLES: i64 = 2000;

pub fn diag_cluster_shift(lambda: WeightGen) -> Result<DiagCluster> {
    lambda.rule.validate()?;
    let mut prev = 0.0;
    for j in 1..=CLUSTER_SAMPLES {
        let v = lambda.value(j);
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::Precondition(format!("λ_{j} = {v} is outside (0, 1)")));
        }
        if v < prev {
            return Err(Error::Precondition(format!("λ is not nondecreasing at {j}")));
        }
        prev = v;
    }
    if lambda.limit_forward() != Some(1.0) {
        return Err(Error::Precondition("λ_j must increase to 1".into()));
    }
    let alpha = {
        let g = lambda.clone();
        move |l: i64, m: i64| g.value(diag_cluster_index(l, m))
    };
    let a1 = alpha.clone();
    let forward: InjectionMap = Arc::new(move |u| {
        let (l, m) = pair(u);
        Some((BasisIndex::Pair(l, m + 1), (a1(l, m) / a1(l, m + 1)).sqrt()))
    });
    let a2 = alpha.clone();
    let backward: InjectionMap = Arc::new(move |u| {
        let (l, m) = pair(u);
        (m > 1).then(|| (BasisIndex::Pair(l, m - 1), (a2(l, m - 1) / a2(l, m)).sqrt()))
    });
    let g = lambda.clone();
    let oracle: DiagOracle = Arc::new(move |u| {
        let (l, m) = pair(u);
        let n = diag_cluster_index(l, m);
        Ok(match g.exact_value(n) {
            Some(q) => AsymptoticValue::exact(q, "α_{l,m} since α_{l,m+n} → 1"),
            None => {
                let v = g.value(n);
                AsymptoticValue { value: v, exact: None, lower: v, upper: v, route: Route::Oracle, note: "α_{l,m}".into() }
            }
        })
    });
    let universe = Universe::Pair { first: IdxRange::from(1), second: IdxRange::from(1) };
    let op = weighted_injection(universe.clone(), universe, forward, backward, 1.0, "antidiagonal cluster shift")
        .with_diag(oracle);
    Ok(DiagCluster { op, lambda })
}

impl DiagCluster {
    pub fn alpha(&self, l: i64, m: i64) -> f64 {
        self.lambda.value(diag_cluster_index(l, m))
    }

    pub fn alpha_exact(&self, l: i64, m: i64) -> Option<Rational> {
        self.lambda.exact_value(diag_cluster_index(l, m))
    }

    /// `||T^{*n} T^n e_{l,m} − α_{l,m} e_{l,m}||` by applying the operator.
    pub fn residual(&self, l: i64, m: i64, n: usize) -> Result<f64> {
        let e = FinVec::basis(BasisIndex::Pair(l, m));
        let g = self.op.gram_apply(&e, n)?;
        Ok(g.sub(&e.scale(C64::new(self.alpha(l, m), 0.0))).norm())
    }

    /// The same residual from the product of squared weights, in rationals.
    pub fn residual_by_definition(&self, l: i64, m: i64, n: usize) -> Option<Rational> {
        let mut p = Rational::one();
        for k in 0..n as i64 {
            p *= self.alpha_exact(l, m + k)? / self.alpha_exact(l, m + k + 1)?;
        }
        Some((p - self.alpha_exact(l, m)?).abs())
    }

    /// `α_{l,m}/α_{l,m+n} − α_{l,m}`.
    pub fn residual_by_pairing(&self, l: i64, m: i64, n: usize) -> Option<Rational> {
        let a = self.alpha_exact(l, m)?;
        let b = self.alpha_exact(l, m + n as i64)?;
        Some(&a / &b - &a)
    }

    /// `1/λ_n − 1`.
    pub fn bound_exact(&self, n: usize) -> Option<Rational> {
        Some(Rational::one() / self.lambda.exact_value(n as i64)? - Rational::one())
    }
}

/// Bilateral operator `T|level_k = A_{k+1}^{-1/2} U A_k^{1/2}` with `U` the identity transfer.
#[derive(Clone)]
pub struct ConjugatedBilateral {
    pub op: LazyOperator,
    pub dim: usize,
    pub levels: BlockGen,
}

pub type ExactLevel = Arc<dyn Fn(i64) -> Rational + Send + Sync>;

pub fn conjugated_bilateral(
    levels: BlockGen,
    dim: usize,
    sample: (i64, i64),
    exact_level: Option<ExactLevel>,
) -> Result<ConjugatedBilateral> {
    let (lo_k, hi_k) = sample;
    let mut lows = Vec::new();
    let mut max_transfer_norm = 0.0_f64;
    for k in lo_k..=hi_k {
        let a = levels(k);
        if a.nrows() != dim || a.ncols() != dim {
            return Err(Error::Precondition(format!("level {k} is not {dim}x{dim}")));
        }
        require_hermitian(&a)?;
        let (lo, hi) = spectral_extent(&a)?;
        if lo <= 0.0 || hi > 1.0 + PRECONDITION_SLACK {
            return Err(Error::Precondition(format!("level {k} is not an invertible positive contraction")));
        }
        lows.push(lo);
        if k < hi_k {
            let next = levels(k + 1);
            let (gap, _) = spectral_extent(&(&next - &a))?;
            if gap < -PRECONDITION_SLACK {
                return Err(Error::Precondition(format!(
                    "||A^(1/2) y|| exceeds ||A^(1/2) U y|| at level {k}"
                )));
            }
            max_transfer_norm = max_transfer_norm.max(op_norm(&transfer(&levels, k)?));
        }
    }
    if lows.windows(2).any(|w| w[1] < w[0] - PRECONDITION_SLACK) {
        return Err(Error::Precondition("lower spectral bounds must increase towards 1".into()));
    }
    let universe = Universe::Pair { first: IdxRange::ALL, second: IdxRange::between(0, dim as i64 - 1) };
    let (apply, adjoint) = block_maps(levels.clone(), dim, None);
    let lv = levels.clone();
    let oracle: DiagOracle = Arc::new(move |u| {
        let (k, r) = pair(u);
        if let Some(ex) = &exact_level {
            return Ok(AsymptoticValue::exact(ex(k), "level value of A"));
        }
        let v = lv(k)[(r as usize, r as usize)].re;
        Ok(AsymptoticValue { value: v, exact: None, lower: v, upper: v, route: Route::Oracle, note: "level value of A".into() })
    });
    let op = LazyOperator::new(
        universe.clone(),
        universe,
        apply,
        adjoint,
        max_transfer_norm.max(1.0),
        "conjugated bilateral shift",
    )
    .with_diag(oracle);
    Ok(ConjugatedBilateral { op, dim, levels })
}

/// Scalar levels `a_k = 1 − 2^{−k−1}` for `k >= 0` and `a_k = 1/4 + 2^k/4` for `k < 0`.
pub fn case_i1_level_exact(k: i64) -> Rational {
    let two = num_bigint::BigInt::from(2);
    if k >= 0 {
        int(1) - Rational::new(1.into(), two.pow((k + 1) as u32))
    } else {
        ratio(1, 4) + Rational::new(1.into(), two.pow((-k) as u32) * 4)
    }
}

pub fn case_i1_preset(sample: (i64, i64)) -> Result<ConjugatedBilateral> {
    let levels: BlockGen = Arc::new(|k| crate::matkernel::diag_real(&[to_f64(&case_i1_level_exact(k))]));
    conjugated_bilateral(levels, 1, sample, Some(Arc::new(case_i1_level_exact)))
}

/// Window-product extrema of a bilateral weight sequence (Shields criteria).
#[derive(Debug, Clone, Serialize)]
pub struct BilateralSimilarity {
    /// `sup_{k, n} ∏_{j=0}^{n} w_{k+j}`; `None` when infinite.
    pub sup: Option<f64>,
    pub inf: f64,
    #[serde(skip)]
    pub sup_exact: Option<Rational>,
    #[serde(skip)]
    pub inf_exact: Rational,
    pub power_bounded: bool,
    pub similar_to_unitary: bool,
}

fn eventually_constant(gen: &WeightGen) -> Result<(f64, Vec<f64>, f64)> {
    let (left, mut core, right) = match &gen.rule {
        WeightRule::Constant { value } => (*value, Vec::new(), *value),
        WeightRule::TableThenConstant { prefix, tail, head, .. } => {
            (head.unwrap_or(*tail), prefix.clone(), *tail)
        }
        WeightRule::Custom { table, after, .. } => (1.0, table.clone(), *after),
        other => {
            return Err(Error::Unsupported(format!(
                "exact window extrema need eventually constant weights, got {other:?}"
            )))
        }
    };
    Ok(match gen.direction {
        Direction::Forward => (left, core, right),
        Direction::Backward => {
            core.reverse();
            (right, core, left)
        }
    })
}

pub fn bilateral_similarity_report(gen: &WeightGen) -> Result<BilateralSimilarity> {
    gen.rule.validate()?;
    let (left, core, right) = eventually_constant(gen)?;
    let mut seq = vec![from_f64(left)];
    seq.extend(core.iter().map(|&w| from_f64(w)));
    seq.push(from_f64(right));
    let mut best: Option<Rational> = None;
    let mut worst: Option<Rational> = None;
    for a in 0..seq.len() {
        let mut p = Rational::one();
        for q in &seq[a..] {
            p *= q;
            if best.as_ref().map_or(true, |b| &p > b) {
                best = Some(p.clone());
            }
            if worst.as_ref().map_or(true, |w| &p < w) {
                worst = Some(p.clone());
            }
        }
    }
    let sup_exact = if left > 1.0 || right > 1.0 { None } else { best };
    let inf_exact = if left < 1.0 || right < 1.0 { Rational::zero() } else { worst.expect("nonempty") };
    let power_bounded = sup_exact.is_some();
    let inf = to_f64(&inf_exact);
    Ok(BilateralSimilarity {
        sup: sup_exact.as_ref().map(to_f64),
        inf,
        sup_exact,
        similar_to_unitary: power_bounded && inf_exact > Rational::zero(),
        inf_exact,
        power_bounded,
    })
}

/// Orthogonal sum of operators; summand `i` acts on indices `Sum(i, _)`.
pub fn orthogonal_sum(ops: Vec<LazyOperator>) -> Result<LazyOperator> {
    if ops.is_empty() {
        return Err(Error::Input("orthogonal sum of no operators".into()));
    }
    let ops = Arc::new(ops);
    let dispatch = |ops: Arc<Vec<LazyOperator>>, adjoint: bool| -> BasisMap {
        Arc::new(move |u: &BasisIndex| {
            let BasisIndex::Sum(id, inner) = u else { unreachable!("universe checked") };
            let op = &ops[*id as usize];
            let image = if adjoint { op.adjoint_basis(inner)? } else { op.apply_basis(inner)? };
            Ok(FinVec::from_pairs(image.iter().map(|(v, c)| (BasisIndex::Sum(*id, Box::new(v.clone())), *c))))
        })
    };
    let domain = Universe::Sum(ops.iter().map(|o| o.domain.clone()).collect());
    let codomain = Universe::Sum(ops.iter().map(|o| o.codomain.clone()).collect());
    let norm = ops.iter().map(|o| o.norm_bound).fold(0.0, f64::max);
    let description = format!("orthogonal sum of {} operators", ops.len());
    let mut sum = LazyOperator::new(domain, codomain, dispatch(ops.clone(), false), dispatch(ops.clone(), true), norm, description);
    if ops.iter().all(|o| o.has_diag_oracle()) {
        let o2 = ops.clone();
        sum = sum.with_diag(Arc::new(move |u| {
            let BasisIndex::Sum(id, inner) = u else { unreachable!("universe checked") };
            super::asymptotic_diag_value(&o2[*id as usize], inner, 0)
        }));
    }
    Ok(sum)
}

#[derive(Debug, Clone, Serialize)]
pub struct ShiftCorReport {
    /// `sup_i 1 / inf_i`; `None` when infinite.
    pub sup_inverse: Option<f64>,
    pub similar_to_normal: bool,
}

/// Similarity of an orthogonal sum of shifts to a normal operator needs `sup_i 1/inf_i < ∞`.
/// `declared_tail_inf` is the infimum over the summands not listed.
pub fn shift_cor_report(infs: &[f64], declared_tail_inf: Option<f64>) -> ShiftCorReport {
    let all = infs.iter().copied().chain(declared_tail_inf);
    let mut sup = 0.0_f64;
    for v in all {
        if v <= 0.0 {
            return ShiftCorReport { sup_inverse: None, similar_to_normal: false };
        }
        sup = sup.max(1.0 / v);
    }
    ShiftCorReport { sup_inverse: Some(sup), similar_to_normal: true }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lazyop::{adjoint_consistency, asymptotic_diag_value};
    use crate::random::rng;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn block_identity_is_isometry() {
        let g: BlockGen = Arc::new(|_| crate::matkernel::identity(2));
        let s = block_unishift(g, 2, 20).unwrap();
        let x = FinVec::from_pairs([(BasisIndex::Pair(3, 0), C64::new(0.5, 0.5)), (BasisIndex::Pair(4, 1), C64::new(1.0, 0.0))]);
        for n in 1..5 {
            assert_eq!(s.op.gram_apply(&x, n).unwrap(), x);
        }
    }

    #[test]
    fn block_dyadic_bound() {
        let s = block_preset(BlockPreset::Dyadic, 40).unwrap();
        for n in 1..=10 {
            for j in 0..4 {
                let x = FinVec::basis(BasisIndex::Pair(j, 1));
                let chk = s.check_bound(&x, n).unwrap();
                assert!(chk.holds);
                assert_eq!(chk.exact, Some(true));
                // Oracle: scalar action a_j/a_{j+n} − a_j directly.
                let a = |k: i64| 1.0 - 0.5f64.powi(k as i32);
                let expected = (a(j) / a(j + n as i64) - a(j)).abs();
                assert!((chk.lhs - expected).abs() < 1e-14);
            }
            assert!((s.bound(n).unwrap() - (1.0 / (1.0 - 0.5f64.powi(n as i32)) - 1.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn block_scalar_harmonic_limit() {
        let s = block_preset(BlockPreset::ScalarHarmonic, 40).unwrap();
        for j in 0..10 {
            let v = asymptotic_diag_value(&s.op, &BasisIndex::Pair(j, 0), 0).unwrap();
            assert_eq!(v.exact.unwrap(), ratio(j, j + 1));
            // Oracle: the product of squared weights telescopes to a_j/a_{j+n}.
            let n = 3000;
            let g = s.op.gram_diag(&BasisIndex::Pair(j, 0), n).unwrap();
            let expected = (j as f64 / (j as f64 + 1.0)) * ((j + n as i64) as f64 + 1.0) / (j + n as i64) as f64;
            assert!((g - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn block_rotated_bound_and_adjoint() {
        let s = block_preset(BlockPreset::RotatedHarmonic, 40).unwrap();
        let mut g = rng(8);
        for _ in 0..10 {
            let n = g.random_range(1..12);
            let x = FinVec::from_pairs((0..3).map(|j| {
                (BasisIndex::Pair(j, g.random_range(0..2)), C64::new(g.random_range(-1.0..1.0), g.random_range(-1.0..1.0)))
            }));
            let chk = s.check_bound(&x, n).unwrap();
            assert!(chk.holds, "{chk:?}");
            assert!((s.bound(n).unwrap() - 1.0 / (2.0 * n as f64 + 1.0)).abs() < 1e-12);
        }
        let us: Vec<_> = (0..5).flat_map(|j| (0..2).map(move |r| BasisIndex::Pair(j, r))).collect();
        assert!(adjoint_consistency(&s.op, &us, &us).unwrap() < 1e-15);
    }

    #[test]
    fn block_precondition_violation() {
        let g: BlockGen = Arc::new(|j| crate::matkernel::diag_real(&[1.0 / (j as f64 + 2.0)]));
        assert!(matches!(block_unishift(g, 1, 5), Err(Error::Precondition(_))));
    }

    #[test]
    fn cluster_arrangement() {
        assert_eq!(
            [(1, 1), (2, 1), (1, 2), (3, 1), (2, 2), (1, 3), (4, 1), (3, 2), (2, 3), (1, 4)]
                .map(|(l, m)| diag_cluster_index(l, m)),
            [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
        );
        let c = diag_cluster_shift(WeightGen::new(WeightRule::Harmonic)).unwrap();
        assert_eq!(c.alpha_exact(1, 1).unwrap(), ratio(1, 2));
        assert_eq!(c.alpha_exact(1, 2).unwrap(), ratio(3, 4));
        assert_eq!(c.alpha_exact(2, 1).unwrap(), ratio(2, 3));
        let def = c.residual_by_definition(1, 1, 10).unwrap();
        assert_eq!(def, c.residual_by_pairing(1, 1, 10).unwrap());
        assert!(def <= c.bound_exact(10).unwrap());
        assert!((c.residual(1, 1, 10).unwrap() - to_f64(&def)).abs() < 1e-14);
        assert!(matches!(diag_cluster_shift(WeightGen::constant(0.5)), Err(Error::Precondition(_))));
    }

    #[test]
    fn case_i1_is_weighted_shift() {
        let t = case_i1_preset((-30, 30)).unwrap();
        let a = |k: i64| to_f64(&case_i1_level_exact(k));
        assert_eq!(a(0), 0.5);
        assert_eq!(a(-1), 0.375);
        for k in -8..8 {
            let y = t.op.apply_basis(&BasisIndex::Pair(k, 0)).unwrap();
            let w = (a(k) / a(k + 1)).sqrt();
            assert!((y.get(&BasisIndex::Pair(k + 1, 0)).re - w).abs() < 1e-15);
            // Oracle: direct product of squared weights a_k / a_{k+n}.
            let n = 60;
            let g = t.op.gram_diag(&BasisIndex::Pair(k, 0), n).unwrap();
            assert!((g - a(k) / a(k + n as i64)).abs() < 1e-12);
            let v = asymptotic_diag_value(&t.op, &BasisIndex::Pair(k, 0), 0).unwrap();
            assert!((g - v.value).abs() < 1e-12);
        }
        let identity = conjugated_bilateral(Arc::new(|_| crate::matkernel::identity(1)), 1, (-5, 5), None).unwrap();
        assert_eq!(
            identity.op.apply_basis(&BasisIndex::Pair(2, 0)).unwrap(),
            FinVec::basis(BasisIndex::Pair(3, 0))
        );
        let bad: BlockGen = Arc::new(|k| crate::matkernel::diag_real(&[0.9 - 0.01 * k as f64]));
        assert!(matches!(conjugated_bilateral(bad, 1, (0, 5), None), Err(Error::Precondition(_))));
    }

    #[test]
    fn shields_examples() {
        let r = bilateral_similarity_report(&WeightGen::constant(1.0)).unwrap();
        assert_eq!((r.sup, r.inf, r.similar_to_unitary), (Some(1.0), 1.0, true));
        let one_defect = WeightGen::new(WeightRule::TableThenConstant { start: 0, prefix: vec![0.5], tail: 1.0, head: None });
        let r = bilateral_similarity_report(&one_defect).unwrap();
        assert_eq!((r.sup, r.inf, r.similar_to_unitary), (Some(1.0), 0.5, true));
        let half_left = WeightGen::new(WeightRule::TableThenConstant { start: 1, prefix: vec![], tail: 1.0, head: Some(0.5) });
        let r = bilateral_similarity_report(&half_left).unwrap();
        assert!(r.power_bounded && !r.similar_to_unitary);
        assert_eq!(r.inf, 0.0);
        let grow = WeightGen::new(WeightRule::TableThenConstant { start: 0, prefix: vec![2.0, 0.25], tail: 1.0, head: None });
        let r = bilateral_similarity_report(&grow).unwrap();
        assert_eq!((r.sup, r.inf), (Some(2.0), 0.25));
        assert!(bilateral_similarity_report(&WeightGen::new(WeightRule::Harmonic)).is_err());
    }

    #[test]
    fn sums() {
        let id = orthogonal_sum(vec![LazyOperator::identity(Universe::Int), LazyOperator::identity(Universe::Int)]).unwrap();
        let x = FinVec::from_pairs([
            (BasisIndex::Sum(0, Box::new(BasisIndex::Int(3))), C64::new(1.0, 0.0)),
            (BasisIndex::Sum(1, Box::new(BasisIndex::Int(3))), C64::new(2.0, 0.0)),
        ]);
        assert_eq!(id.apply(&x).unwrap(), x);
        let s = bilateral_shift(WeightGen::new(WeightRule::TableThenConstant { start: 0, prefix: vec![0.5], tail: 1.0, head: None }));
        let single = orthogonal_sum(vec![s.clone()]).unwrap();
        for k in -3..3 {
            let wrapped = BasisIndex::Sum(0, Box::new(BasisIndex::Int(k)));
            let a = single.apply_basis(&wrapped).unwrap();
            let b = s.apply_basis(&BasisIndex::Int(k)).unwrap();
            assert_eq!(a.get(&BasisIndex::Sum(0, Box::new(BasisIndex::Int(k + 1)))), b.get(&BasisIndex::Int(k + 1)));
            assert_eq!(
                asymptotic_diag_value(&single, &wrapped, 0).unwrap().value,
                asymptotic_diag_value(&s, &BasisIndex::Int(k), 0).unwrap().value
            );
        }
        assert!(matches!(single.apply_basis(&BasisIndex::Sum(1, Box::new(BasisIndex::Int(0)))), Err(Error::Universe { .. })));
        let infs: Vec<f64> = (2..50).map(|n| 1.0 / n as f64).collect();
        assert!(!shift_cor_report(&infs, Some(0.0)).similar_to_normal);
        assert!(shift_cor_report(&[0.5, 0.25], None).similar_to_normal);
    }

    proptest! {
        #[test]
        fn cluster_residual_bound(l in 1i64..6, m in 1i64..6, n in 1usize..15) {
            let c = diag_cluster_shift(WeightGen::new(WeightRule::Harmonic)).unwrap();
            let def = c.residual_by_definition(l, m, n).unwrap();
            prop_assert_eq!(&def, &c.residual_by_pairing(l, m, n).unwrap());
            prop_assert!(def <= c.bound_exact(n).unwrap());
        }

        #[test]
        fn dyadic_bound_exact(j in 0i64..6, n in 1usize..15, c0 in -1.0f64..1.0, c1 in -1.0f64..1.0) {
            let s = block_preset(BlockPreset::Dyadic, 30).unwrap();
            let x = FinVec::from_pairs([
                (BasisIndex::Pair(j, 0), C64::new(c0, 0.0)),
                (BasisIndex::Pair(j + 1, 1), C64::new(c1, 0.0)),
            ]);
            let chk = s.check_bound(&x, n).unwrap();
            prop_assert!(chk.exact != Some(false));
            prop_assert!(chk.holds);
        }
    }
}
