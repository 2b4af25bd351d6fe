//! Weight sequences with exact tail-product, extremum and limit oracles.

use std::f64::consts::PI;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{from_f64, ratio, square_of, to_f64, Rational};

/// Exponents above this are evaluated in floating point only.
const EXACT_POW_CAP: u64 = 4096;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    #[default]
    Forward,
    /// Index `i` reads the rule at `-i`.
    Backward,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightRule {
    Constant {
        value: f64,
    },
    /// `head` below `start`, `prefix` on `[start, start + len)`, `tail` afterwards.
    TableThenConstant {
        start: i64,
        prefix: Vec<f64>,
        tail: f64,
        #[serde(default)]
        head: Option<f64>,
    },
    /// `sqrt(j² − 1) / j` for `j >= j0`, `1` below.
    Telescoping {
        j0: i64,
    },
    /// `1 − ratio^j` for `j >= 1`, `1` below.
    Geometric {
        ratio: f64,
    },
    /// `high` on `[base^l, base^l + l)` for `l >= 1`, `1` elsewhere.
    RunIndicator {
        base: u64,
        high: f64,
    },
    /// `exp(−1 / (|l| + 1)²)`.
    ExpInvSquare,
    /// `j / (j + 1)` for `j >= 1`, `1` below.
    Harmonic,
    /// `1` below `start`, `table` on `[start, start + len)`, `after` beyond, with an
    /// optional declared value of `∏ w²` over the part beyond the table.
    Custom {
        start: i64,
        table: Vec<f64>,
        after: f64,
        #[serde(default)]
        declared_tail_sq: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailKind {
    /// Closed form; `exact` carries the rational value when it is rational.
    Exact,
    /// Certified interval `[lower, upper]`.
    Bound,
    /// The product grows without bound.
    Divergent,
    Unknown,
}

/// Value of an infinite product of squared weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TailProduct {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<Rational>,
    pub kind: TailKind,
}

impl TailProduct {
    pub fn exact(q: Rational) -> Self {
        let v = to_f64(&q);
        TailProduct { value: v, lower: v, upper: v, exact: Some(q), kind: TailKind::Exact }
    }

    pub fn closed_form(v: f64) -> Self {
        TailProduct { value: v, lower: v, upper: v, exact: None, kind: TailKind::Exact }
    }

    pub fn divergent() -> Self {
        TailProduct {
            value: f64::INFINITY,
            lower: f64::INFINITY,
            upper: f64::INFINITY,
            exact: None,
            kind: TailKind::Divergent,
        }
    }

    fn bound(value: f64, lower: f64, upper: f64) -> Self {
        TailProduct { value, lower, upper, exact: None, kind: TailKind::Bound }
    }

    /// Product with a finite factor.
    pub fn times(&self, f: &Factor) -> TailProduct {
        if f.value == 0.0 {
            return TailProduct::exact(Rational::zero());
        }
        match self.kind {
            TailKind::Divergent | TailKind::Unknown => self.clone(),
            _ => TailProduct {
                value: self.value * f.value,
                lower: self.lower * f.value,
                upper: self.upper * f.value,
                exact: match (&self.exact, &f.exact) {
                    (Some(a), Some(b)) => Some(a * b),
                    _ => None,
                },
                kind: self.kind,
            },
        }
    }
}

/// Finite product of squared weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub value: f64,
    pub exact: Option<Rational>,
}

impl Factor {
    pub fn one() -> Self {
        Factor { value: 1.0, exact: Some(Rational::one()) }
    }

    fn mul_square(&mut self, w: f64) {
        self.value *= w * w;
        if let Some(q) = &mut self.exact {
            *q *= square_of(w);
        }
    }

    fn mul_rational(&mut self, q: Rational) {
        self.value *= to_f64(&q);
        if let Some(e) = &mut self.exact {
            *e *= q;
        }
    }

    fn mul_pow_square(&mut self, w: f64, n: u64) {
        if n == 0 {
            return;
        }
        self.value *= (w * w).powf(n as f64);
        if w == 1.0 {
            return;
        }
        if n > EXACT_POW_CAP {
            self.exact = None;
        } else if let Some(e) = &mut self.exact {
            *e *= pow_rational(&square_of(w), n);
        }
    }

    fn drop_exact(&mut self) {
        self.exact = None;
    }
}

fn pow_rational(q: &Rational, n: u64) -> Rational {
    let mut out = Rational::one();
    let mut base = q.clone();
    let mut e = n;
    while e > 0 {
        if e & 1 == 1 {
            out *= &base;
        }
        base = &base * &base;
        e >>= 1;
    }
    out
}

/// `∏ c²` over an infinite stretch of constant weight `c`.
fn constant_tail(c: f64) -> TailProduct {
    if c == 1.0 {
        TailProduct::exact(Rational::one())
    } else if c < 1.0 {
        TailProduct::exact(Rational::zero())
    } else {
        TailProduct::divergent()
    }
}

/// Trigamma function `ψ₁(x) = Σ_{k>=0} 1/(x+k)²` for `x > 0`.
pub fn trigamma(x: f64) -> f64 {
    assert!(x > 0.0, "trigamma needs a positive argument");
    let mut x = x;
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let x2 = inv * inv;
    acc + inv + x2 / 2.0 + inv * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

/// `Σ_{l>=i} 1/(|l|+1)²`.
fn inv_square_tail(i: i64) -> f64 {
    if i >= 0 {
        trigamma(i as f64 + 1.0)
    } else {
        PI * PI / 3.0 - 1.0 - trigamma(i.unsigned_abs() as f64 + 2.0)
    }
}

fn is_run(base: u64, n: i64) -> bool {
    if n < 1 {
        return false;
    }
    let n = n as u64;
    let mut p = base;
    let mut l = 1u64;
    while p <= n {
        if n < p + l {
            return true;
        }
        match p.checked_mul(base) {
            Some(q) => p = q,
            None => break,
        }
        l += 1;
    }
    false
}

/// Number of run positions `n` with `1 <= n <= i`.
fn run_count(base: u64, i: i64) -> u64 {
    if i < 1 {
        return 0;
    }
    let i = i as u64;
    let mut count = 0;
    let mut p = base;
    let mut l = 1u64;
    while p <= i {
        count += (p + l - 1).min(i) - p + 1;
        match p.checked_mul(base) {
            Some(q) => p = q,
            None => break,
        }
        l += 1;
    }
    count
}

impl WeightRule {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(Error::Input(format!("{what} must be positive and finite, got {x}")))
            }
        };
        match self {
            WeightRule::Constant { value } => positive(*value, "constant weight"),
            WeightRule::TableThenConstant { prefix, tail, head, .. } => {
                prefix.iter().try_for_each(|&x| positive(x, "table weight"))?;
                positive(*tail, "tail weight")?;
                head.map_or(Ok(()), |h| positive(h, "head weight"))
            }
            WeightRule::Telescoping { j0 } => {
                if *j0 >= 2 {
                    Ok(())
                } else {
                    Err(Error::Input(format!("telescoping start j0 = {j0} must be at least 2")))
                }
            }
            WeightRule::Geometric { ratio } => {
                if (0.0..1.0).contains(ratio) {
                    Ok(())
                } else {
                    Err(Error::Input(format!("geometric ratio {ratio} must lie in [0, 1)")))
                }
            }
            WeightRule::RunIndicator { base, high } => {
                if *base < 2 {
                    return Err(Error::Input("run base must be at least 2".into()));
                }
                positive(*high, "run value")
            }
            WeightRule::ExpInvSquare | WeightRule::Harmonic => Ok(()),
            WeightRule::Custom { table, after, declared_tail_sq, .. } => {
                table.iter().try_for_each(|&x| positive(x, "table weight"))?;
                positive(*after, "weight after the table")?;
                match declared_tail_sq {
                    Some(d) if !(d.is_finite() && *d >= 0.0) => {
                        Err(Error::Input("declared tail product must be non-negative".into()))
                    }
                    _ => Ok(()),
                }
            }
        }
    }

    pub fn value(&self, i: i64) -> f64 {
        match self {
            WeightRule::Constant { value } => *value,
            WeightRule::TableThenConstant { start, prefix, tail, head } => {
                if i < *start {
                    head.unwrap_or(*tail)
                } else {
                    prefix.get((i - start) as usize).copied().unwrap_or(*tail)
                }
            }
            WeightRule::Telescoping { j0 } => {
                if i < *j0 {
                    1.0
                } else {
                    let j = i as f64;
                    (j * j - 1.0).sqrt() / j
                }
            }
            WeightRule::Geometric { ratio } => {
                if i < 1 {
                    1.0
                } else {
                    1.0 - ratio.powi(i.min(i32::MAX as i64) as i32)
                }
            }
            WeightRule::RunIndicator { base, high } => {
                if is_run(*base, i) {
                    *high
                } else {
                    1.0
                }
            }
            WeightRule::ExpInvSquare => {
                let d = i.unsigned_abs() as f64 + 1.0;
                (-1.0 / (d * d)).exp()
            }
            WeightRule::Harmonic => {
                if i < 1 {
                    1.0
                } else {
                    i as f64 / (i as f64 + 1.0)
                }
            }
            WeightRule::Custom { start, table, after, .. } => {
                if i < *start {
                    1.0
                } else {
                    table.get((i - start) as usize).copied().unwrap_or(*after)
                }
            }
        }
    }

    /// Exact rational value, when the rule is rational-valued at `i`.
    pub fn exact_value(&self, i: i64) -> Option<Rational> {
        match self {
            WeightRule::Telescoping { j0 } if i >= *j0 => None,
            WeightRule::Geometric { .. } if i > EXACT_POW_CAP as i64 => None,
            WeightRule::Geometric { ratio } if i >= 1 => {
                let r = from_f64(*ratio);
                Some(Rational::one() - pow_rational(&r, i as u64))
            }
            WeightRule::ExpInvSquare => None,
            WeightRule::Harmonic if i >= 1 => Some(ratio(i, i + 1)),
            _ => Some(from_f64(self.value(i))),
        }
    }

    /// Exact square of the weight.
    pub fn exact_square(&self, i: i64) -> Option<Rational> {
        match self {
            WeightRule::Telescoping { j0 } if i >= *j0 => Some(Rational::new(
                (num_bigint::BigInt::from(i) * i) - 1,
                num_bigint::BigInt::from(i) * i,
            )),
            WeightRule::ExpInvSquare => None,
            _ => self.exact_value(i).map(|q| &q * &q),
        }
    }

    /// `∏_{l=lo}^{hi} w_l²` for a finite stretch.
    pub fn finite_product(&self, lo: i64, hi: i64) -> Factor {
        let mut f = Factor::one();
        if hi < lo {
            return f;
        }
        match self {
            WeightRule::Constant { value } => f.mul_pow_square(*value, (hi - lo + 1) as u64),
            WeightRule::Telescoping { j0 } => {
                let a = lo.max(*j0);
                if hi >= a {
                    // ∏_{l=a}^{b} (l²−1)/l² = (a−1)(b+1) / (a b)
                    f.mul_rational(Rational::new(
                        num_bigint::BigInt::from(a - 1) * (hi + 1),
                        num_bigint::BigInt::from(a) * hi,
                    ));
                }
            }
            WeightRule::Harmonic => {
                let a = lo.max(1);
                if hi >= a {
                    let q = ratio(a, hi + 1);
                    f.mul_rational(&q * &q);
                }
            }
            WeightRule::RunIndicator { base, high } => {
                let k = run_count(*base, hi) - run_count(*base, lo - 1);
                f.mul_pow_square(*high, k);
            }
            WeightRule::TableThenConstant { start, prefix, tail, head } => {
                let end = start + prefix.len() as i64;
                let h = head.unwrap_or(*tail);
                if lo < *start {
                    f.mul_pow_square(h, (hi.min(start - 1) - lo + 1) as u64);
                }
                for l in lo.max(*start)..=hi.min(end - 1) {
                    f.mul_square(prefix[(l - start) as usize]);
                }
                if hi >= end {
                    f.mul_pow_square(*tail, (hi - lo.max(end) + 1) as u64);
                }
            }
            WeightRule::Custom { start, table, after, .. } => {
                let end = start + table.len() as i64;
                for l in lo.max(*start)..=hi.min(end - 1) {
                    f.mul_square(table[(l - start) as usize]);
                }
                if hi >= end {
                    f.mul_pow_square(*after, (hi - lo.max(end) + 1) as u64);
                }
            }
            WeightRule::Geometric { ratio } => {
                let a = lo.max(1);
                // Factors equal 1.0 in floating point once ratio^l underflows the unit roundoff.
                let last = if *ratio == 0.0 { a - 1 } else { hi };
                for l in a..=last {
                    let w = self.value(l);
                    if w == 1.0 {
                        break;
                    }
                    f.value *= w * w;
                    match (&mut f.exact, self.exact_square(l)) {
                        (Some(e), Some(q)) => *e *= q,
                        _ => f.drop_exact(),
                    }
                }
            }
            WeightRule::ExpInvSquare => {
                let s = inv_square_tail(lo) - inv_square_tail(hi + 1);
                f.value = (-2.0 * s).exp();
                f.drop_exact();
            }
        }
        f
    }

    /// `∏_{l>=i} w_l²`.
    pub fn forward_tail(&self, i: i64) -> TailProduct {
        match self {
            WeightRule::Constant { value } => constant_tail(*value),
            WeightRule::TableThenConstant { start, prefix, tail, .. } => {
                let end = start + prefix.len() as i64;
                constant_tail(*tail).times(&self.finite_product(i, end - 1))
            }
            WeightRule::Telescoping { j0 } => {
                let m = i.max(*j0);
                TailProduct::exact(ratio(m - 1, m))
            }
            WeightRule::Geometric { ratio } => {
                if *ratio == 0.0 {
                    return TailProduct::exact(Rational::one());
                }
                let a = i.max(1);
                let mut n = a;
                let mut p = 1.0;
                loop {
                    let w = 1.0 - ratio.powi(n as i32);
                    p *= w * w;
                    if ratio.powi(n as i32 + 1) < 1e-18 {
                        break;
                    }
                    n += 1;
                }
                // ∏_{l>n} (1 − r^l)² >= 1 − 2 Σ_{l>n} r^l.
                let rest = 2.0 * ratio.powi(n as i32 + 1) / (1.0 - ratio);
                TailProduct::bound(p, p * (1.0 - rest).max(0.0), p)
            }
            WeightRule::RunIndicator { high, .. } => constant_tail(*high),
            WeightRule::ExpInvSquare => TailProduct::closed_form((-2.0 * inv_square_tail(i)).exp()),
            WeightRule::Harmonic => TailProduct::exact(Rational::zero()),
            WeightRule::Custom { start, table, after, declared_tail_sq } => {
                let end = start + table.len() as i64;
                let finite = self.finite_product(i, end - 1);
                match declared_tail_sq {
                    Some(d) => TailProduct::exact(from_f64(*d)).times(&finite),
                    None if *after == 1.0 => TailProduct::exact(Rational::one()).times(&finite),
                    None if *after > 1.0 => TailProduct::divergent(),
                    None => TailProduct::bound(0.0, 0.0, finite.value),
                }
            }
        }
    }

    /// `∏_{l<=i} w_l²`.
    pub fn backward_tail(&self, i: i64) -> TailProduct {
        let one = || TailProduct::exact(Rational::one());
        match self {
            WeightRule::Constant { value } => constant_tail(*value),
            WeightRule::TableThenConstant { start, tail, head, .. } => {
                constant_tail(head.unwrap_or(*tail)).times(&self.finite_product(*start, i))
            }
            WeightRule::Telescoping { j0 } => one().times(&self.finite_product(*j0, i)),
            WeightRule::Geometric { .. } | WeightRule::Harmonic | WeightRule::RunIndicator { .. } => {
                one().times(&self.finite_product(1, i))
            }
            WeightRule::ExpInvSquare => {
                TailProduct::closed_form((-2.0 * inv_square_tail(-i)).exp())
            }
            WeightRule::Custom { start, .. } => one().times(&self.finite_product(*start, i)),
        }
    }

    /// `(sup, inf)` of `w_l` over `l >= i`.
    pub fn extrema_from(&self, i: i64) -> (f64, f64) {
        match self {
            WeightRule::Constant { value } => (*value, *value),
            WeightRule::TableThenConstant { start, prefix, tail, head } => {
                let mut vals = vec![*tail];
                if i < *start {
                    vals.push(head.unwrap_or(*tail));
                }
                let from = (i - start).max(0) as usize;
                vals.extend(prefix.iter().skip(from).copied());
                extrema(&vals)
            }
            WeightRule::Custom { start, table, after, .. } => {
                let mut vals = vec![*after];
                if i < *start {
                    vals.push(1.0);
                }
                let from = (i - start).max(0) as usize;
                vals.extend(table.iter().skip(from).copied());
                extrema(&vals)
            }
            WeightRule::Telescoping { j0 } => (1.0, self.value(i.max(*j0)).min(1.0)),
            WeightRule::Geometric { .. } | WeightRule::Harmonic => (1.0, self.value(i.max(1))),
            WeightRule::RunIndicator { high, .. } => (high.max(1.0), high.min(1.0)),
            WeightRule::ExpInvSquare => (1.0, self.value(i.max(0))),
        }
    }

    /// `(sup, inf)` of `w_l` over `l <= i`.
    pub fn extrema_to(&self, i: i64) -> (f64, f64) {
        match self {
            WeightRule::Constant { value } => (*value, *value),
            WeightRule::TableThenConstant { start, prefix, tail, head } => {
                let mut vals = vec![head.unwrap_or(*tail)];
                let end = start + prefix.len() as i64;
                for l in *start..=i.min(end - 1) {
                    vals.push(prefix[(l - start) as usize]);
                }
                if i >= end {
                    vals.push(*tail);
                }
                extrema(&vals)
            }
            WeightRule::Custom { start, table, after, .. } => {
                let mut vals = vec![1.0];
                let end = start + table.len() as i64;
                for l in *start..=i.min(end - 1) {
                    vals.push(table[(l - start) as usize]);
                }
                if i >= end {
                    vals.push(*after);
                }
                extrema(&vals)
            }
            WeightRule::Telescoping { j0 } => (1.0, if i >= *j0 { self.value(*j0) } else { 1.0 }),
            WeightRule::Geometric { .. } | WeightRule::Harmonic => {
                (1.0, if i >= 1 { self.value(1) } else { 1.0 })
            }
            WeightRule::RunIndicator { base, high } => {
                if i >= *base as i64 {
                    (high.max(1.0), high.min(1.0))
                } else {
                    (1.0, 1.0)
                }
            }
            WeightRule::ExpInvSquare => (1.0, self.value(i.min(0))),
        }
    }

    /// `lim_{l → +∞} w_l`, when it exists.
    pub fn limit_forward(&self) -> Option<f64> {
        match self {
            WeightRule::Constant { value } => Some(*value),
            WeightRule::TableThenConstant { tail, .. } => Some(*tail),
            WeightRule::Custom { after, .. } => Some(*after),
            WeightRule::RunIndicator { high, .. } => (*high == 1.0).then_some(1.0),
            _ => Some(1.0),
        }
    }

    /// `lim_{l → −∞} w_l`.
    pub fn limit_backward(&self) -> Option<f64> {
        match self {
            WeightRule::Constant { value } => Some(*value),
            WeightRule::TableThenConstant { tail, head, .. } => Some(head.unwrap_or(*tail)),
            _ => Some(1.0),
        }
    }
}

fn extrema(vals: &[f64]) -> (f64, f64) {
    let sup = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inf = vals.iter().copied().fold(f64::INFINITY, f64::min);
    (sup, inf)
}

/// A weight rule read forward or backward along the index line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightGen {
    #[serde(flatten)]
    pub rule: WeightRule,
    #[serde(default)]
    pub direction: Direction,
}

impl WeightGen {
    pub fn new(rule: WeightRule) -> Self {
        WeightGen { rule, direction: Direction::Forward }
    }

    pub fn backward(rule: WeightRule) -> Self {
        WeightGen { rule, direction: Direction::Backward }
    }

    pub fn constant(c: f64) -> Self {
        WeightGen::new(WeightRule::Constant { value: c })
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let g: WeightGen = serde_json::from_value(value.clone())
            .map_err(|e| Error::Input(format!("weight generator: {e}")))?;
        g.rule.validate()?;
        Ok(g)
    }

    fn map(&self, i: i64) -> i64 {
        match self.direction {
            Direction::Forward => i,
            Direction::Backward => -i,
        }
    }

    pub fn value(&self, i: i64) -> f64 {
        self.rule.value(self.map(i))
    }

    pub fn exact_value(&self, i: i64) -> Option<Rational> {
        self.rule.exact_value(self.map(i))
    }

    pub fn exact_square(&self, i: i64) -> Option<Rational> {
        self.rule.exact_square(self.map(i))
    }

    /// `∏_{l=lo}^{hi} w_l²`.
    pub fn finite_product(&self, lo: i64, hi: i64) -> Factor {
        match self.direction {
            Direction::Forward => self.rule.finite_product(lo, hi),
            Direction::Backward => self.rule.finite_product(-hi, -lo),
        }
    }

    /// `∏_{l>=i} w_l²`.
    pub fn forward_tail(&self, i: i64) -> TailProduct {
        match self.direction {
            Direction::Forward => self.rule.forward_tail(i),
            Direction::Backward => self.rule.backward_tail(-i),
        }
    }

    /// `∏_{l<=i} w_l²`.
    pub fn backward_tail(&self, i: i64) -> TailProduct {
        match self.direction {
            Direction::Forward => self.rule.backward_tail(i),
            Direction::Backward => self.rule.forward_tail(-i),
        }
    }

    /// `(sup, inf)` over `l >= i`.
    pub fn extrema_from(&self, i: i64) -> (f64, f64) {
        match self.direction {
            Direction::Forward => self.rule.extrema_from(i),
            Direction::Backward => self.rule.extrema_to(-i),
        }
    }

    /// `(sup, inf)` over `l <= i`.
    pub fn extrema_to(&self, i: i64) -> (f64, f64) {
        match self.direction {
            Direction::Forward => self.rule.extrema_to(i),
            Direction::Backward => self.rule.extrema_from(-i),
        }
    }

    pub fn limit_forward(&self) -> Option<f64> {
        match self.direction {
            Direction::Forward => self.rule.limit_forward(),
            Direction::Backward => self.rule.limit_backward(),
        }
    }

    pub fn limit_backward(&self) -> Option<f64> {
        match self.direction {
            Direction::Forward => self.rule.limit_backward(),
            Direction::Backward => self.rule.limit_forward(),
        }
    }
}

/// `∏_{l=j}^{n} (l² − 1)/l²` as a rational, by direct multiplication.
pub fn telescoping_partial_exact(j: i64, n: i64) -> Rational {
    (j..=n).fold(Rational::one(), |acc, l| acc * Rational::new((l * l - 1).into(), (l * l).into()))
}

/// `(j − 1)/j · (n + 1)/n`, the closed form of [`telescoping_partial_exact`].
pub fn telescoping_closed_form(j: i64, n: i64) -> Rational {
    ratio(j - 1, j) * ratio(n + 1, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-14);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-13);
        // Oracle: direct partial sum with integral remainder.
        let x = 3.0;
        let direct: f64 = (0..200_000).map(|k| 1.0 / ((x + k as f64) * (x + k as f64))).sum::<f64>()
            + 1.0 / (x + 200_000.0);
        assert!((trigamma(x) - direct).abs() < 1e-10);
    }

    #[test]
    fn telescoping_closed_form_matches_loop() {
        for j in 2..=100 {
            for n in [j, j + 1, 1000, 100_000] {
                let direct: f64 = (j..=n).map(|l| {
                    let lf = l as f64;
                    (lf * lf - 1.0) / (lf * lf)
                }).product();
                let closed = to_f64(&telescoping_closed_form(j, n));
                assert!((direct - closed).abs() < 1e-11, "{j} {n}");
            }
        }
        for (j, n) in [(2, 10), (5, 40), (17, 23)] {
            assert_eq!(telescoping_partial_exact(j, n), telescoping_closed_form(j, n));
        }
    }

    #[test]
    fn telescoping_tail_is_exact() {
        let g = WeightGen::new(WeightRule::Telescoping { j0: 2 });
        for j in 2..30 {
            assert_eq!(g.forward_tail(j).exact.unwrap(), ratio(j - 1, j));
        }
        assert_eq!(g.forward_tail(1).exact.unwrap(), ratio(1, 2));
        assert_eq!(g.finite_product(3, 7).exact.unwrap(), telescoping_partial_exact(3, 7));
    }

    #[test]
    fn tail_oracles_converge_monotonically() {
        let gens = [
            WeightGen::new(WeightRule::Telescoping { j0: 2 }),
            WeightGen::new(WeightRule::ExpInvSquare),
            WeightGen::new(WeightRule::Geometric { ratio: 0.5 }),
        ];
        for g in &gens {
            for i in [1i64, 3, 10] {
                let tail = g.forward_tail(i).value;
                let mut prev = f64::INFINITY;
                for n in [1_000i64, 10_000, 100_000] {
                    let p = g.finite_product(i, n).value;
                    let gap = (p - tail).abs();
                    assert!(gap <= prev, "{g:?} {i} {n}");
                    assert!(gap < 10.0 / n as f64);
                    prev = gap;
                }
            }
        }
    }

    #[test]
    fn exp_inv_square_tails() {
        let g = WeightGen::new(WeightRule::ExpInvSquare);
        let whole = (-2.0 * (PI * PI / 3.0 - 1.0)).exp();
        let split = g.backward_tail(-1).value * g.forward_tail(0).value;
        assert!((whole - split).abs() < 1e-14);
        // Oracle: direct sum of the exponent over a long window.
        let s: f64 = (-5..=200_000i64).map(|l| {
            let d = l.unsigned_abs() as f64 + 1.0;
            1.0 / (d * d)
        }).sum();
        assert!(((-2.0 * s).exp() - g.forward_tail(-5).value).abs() < 1e-5);
    }

    #[test]
    fn run_indicator_counts() {
        let g = WeightGen::new(WeightRule::RunIndicator { base: 3, high: 2.0 });
        let runs: Vec<i64> = (1..=40).filter(|&n| g.value(n) == 2.0).collect();
        assert_eq!(runs, vec![3, 9, 10, 27, 28, 29]);
        assert_eq!(run_count(3, 40), 6);
        assert_eq!(run_count(3, 9), 2);
        assert_eq!(g.forward_tail(1).kind, TailKind::Divergent);
    }

    #[test]
    fn direction_reverses() {
        let rule = WeightRule::TableThenConstant { start: 1, prefix: vec![0.3], tail: 1.0, head: Some(0.5) };
        let f = WeightGen::new(rule.clone());
        let b = WeightGen::backward(rule);
        for i in -5..5 {
            assert_eq!(f.value(i), b.value(-i));
        }
        assert_eq!(b.forward_tail(-1).exact, f.backward_tail(1).exact);
    }

    #[test]
    fn geometric_bound_brackets() {
        let g = WeightGen::new(WeightRule::Geometric { ratio: 0.5 });
        let t = g.forward_tail(1);
        assert_eq!(t.kind, TailKind::Bound);
        // Oracle: Euler's pentagonal series for ∏ (1 − q^l) at q = 1/2.
        let mut euler = 0.0;
        for k in -40i64..=40 {
            let e = (k * (3 * k - 1) / 2) as i32;
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            euler += sign * 0.5f64.powi(e);
        }
        let sq = euler * euler;
        assert!(t.lower <= sq + 1e-15 && sq <= t.upper + 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"kind":"table_then_constant","start":0,"prefix":[0.5],"tail":1.0,"direction":"backward"}"#;
        let g = WeightGen::from_json(&serde_json::from_str(text).unwrap()).unwrap();
        assert_eq!(g.direction, Direction::Backward);
        assert_eq!(g.value(0), 0.5);
        let back: WeightGen = serde_json::from_value(serde_json::to_value(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        let bad = serde_json::json!({"kind": "constant", "value": -1.0});
        assert!(WeightGen::from_json(&bad).is_err());
    }

    proptest! {
        #[test]
        fn finite_products_split(lo in -30i64..30, mid in 0i64..20, len in 0i64..20, c in 0.2f64..1.5) {
            let rules = [
                WeightRule::TableThenConstant { start: -3, prefix: vec![c, 0.9, 1.1], tail: 0.95, head: Some(c) },
                WeightRule::Telescoping { j0: 2 },
                WeightRule::Harmonic,
                WeightRule::RunIndicator { base: 2, high: c },
            ];
            let m = lo + mid;
            let hi = m + len;
            for r in &rules {
                let whole = r.finite_product(lo, hi);
                let a = r.finite_product(lo, m);
                let b = r.finite_product(m + 1, hi);
                if let (Some(w), Some(x), Some(y)) = (whole.exact, a.exact, b.exact) {
                    prop_assert_eq!(w, x * y);
                }
            }
        }
    }
}
