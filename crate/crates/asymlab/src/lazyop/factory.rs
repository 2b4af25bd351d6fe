//! Named operators with exact basis actions.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_traits::{One, Zero};
use serde::Serialize;

use super::builders::{weighted_injection, InjectionMap};
use super::{AsymptoticValue, BasisIndex, BasisMap, DiagOracle, FinVec, IdxRange, LazyOperator, Universe};
use crate::error::{Error, Result};
use crate::exact::{int, ratio, Rational};
use crate::matkernel::C64;

pub const PAPER_EXAMPLES: &[&str] = &[
    "ch2_coincidence_pair",
    "ch2_stable_product_pair",
    "ch3_banach_dependent",
    "ch3_no_cesaro",
    "ch3_not_power_bounded",
    "ch3_not_power_bounded_literal",
    "ch5_counterexample",
];

#[derive(Clone, Debug)]
pub struct PaperExample {
    pub name: String,
    pub description: String,
    pub operators: Vec<(String, LazyOperator)>,
}

impl PaperExample {
    pub fn operator(&self, name: &str) -> Result<&LazyOperator> {
        self.operators
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, o)| o)
            .ok_or_else(|| Error::Input(format!("{} has no operator {name}", self.name)))
    }
}

pub fn paper_example(name: &str) -> Result<PaperExample> {
    let (description, operators) = match name {
        "ch2_coincidence_pair" => (
            "T₁, T₂ with equal asymptotic limits while T₂T₁ differs",
            coincidence_pair()?,
        ),
        "ch2_stable_product_pair" => ("stable T₁, T₂ whose product T₂T₁ is not stable", stable_product_pair()?),
        "ch3_banach_dependent" => (
            "power bounded shift whose L-limit depends on L",
            vec![("T".into(), ch3_shift(Ch3::BanachDependent))],
        ),
        "ch3_no_cesaro" => (
            "power bounded shift without Cesàro limit",
            vec![("T".into(), ch3_shift(Ch3::NoCesaro))],
        ),
        "ch3_not_power_bounded" => (
            "shift with Cesàro limit I that is not power bounded (runs of √2 followed by runs of √(1/2))",
            vec![("T".into(), ch3_shift(Ch3::NotPowerBounded))],
        ),
        "ch3_not_power_bounded_literal" => (
            "runs of √2 only; the diagonal sequence is unbounded",
            vec![("T".into(), ch3_shift(Ch3::NotPowerBoundedLiteral))],
        ),
        "ch5_counterexample" => (
            "contraction with injectivity conditions met but non-injective commutant mapping",
            ch5_operators(),
        ),
        _ => return Err(Error::Input(format!("unknown example {name}; known: {}", PAPER_EXAMPLES.join(", ")))),
    };
    Ok(PaperExample { name: name.into(), description: description.into(), operators })
}

fn pair(u: &BasisIndex) -> (i64, i64) {
    match u {
        BasisIndex::Pair(i, j) => (*i, *j),
        _ => unreachable!("universe checked"),
    }
}

fn nat(u: &BasisIndex) -> i64 {
    match u {
        BasisIndex::Nat(j) => *j as i64,
        _ => unreachable!("universe checked"),
    }
}

fn grid() -> Universe {
    Universe::Pair { first: IdxRange::from(1), second: IdxRange::from(1) }
}

/// `√(j² − 1)/j`.
fn tele(j: i64) -> f64 {
    let j = j as f64;
    (j * j - 1.0).sqrt() / j
}

fn tele_sq(j: i64) -> Rational {
    ratio(j * j - 1, j * j)
}

/// `∏_{l >= j} (l² − 1)/l² = (j − 1)/j`.
fn tele_tail(j: i64) -> Rational {
    ratio(j - 1, j)
}

type ExactStep = fn(i64, i64) -> Option<((i64, i64), Rational)>;
type ExactTail = fn(i64, i64) -> Option<Rational>;

/// Follows `e_u ↦ w e_v` with exact squared weights until `tail` knows the remaining product.
fn chain_walk(step: ExactStep, tail: ExactTail, note: &'static str) -> DiagOracle {
    Arc::new(move |u| {
        let (mut i, mut j) = pair(u);
        let mut acc = Rational::one();
        for _ in 0..64 {
            if let Some(t) = tail(i, j) {
                return Ok(AsymptoticValue::exact(acc * t, note));
            }
            match step(i, j) {
                Some(((a, b), w2)) => {
                    acc *= w2;
                    (i, j) = (a, b);
                }
                None => return Ok(AsymptoticValue::exact(Rational::zero(), note)),
            }
        }
        Err(Error::Unknown(format!("chain from {u} does not reach a known tail")))
    })
}

fn injection_from(step: fn(i64, i64) -> Option<((i64, i64), f64)>) -> InjectionMap {
    Arc::new(move |u| {
        let (i, j) = pair(u);
        step(i, j).map(|((a, b), w)| (BasisIndex::Pair(a, b), w))
    })
}

fn t1_coincidence(i: i64, j: i64) -> Option<((i64, i64), f64)> {
    Some(((i, j + 1), if j == 1 { 1.0 } else { tele(j) }))
}

fn t1_coincidence_back(i: i64, j: i64) -> Option<((i64, i64), f64)> {
    match j {
        1 => None,
        2 => Some(((i, 1), 1.0)),
        _ => Some(((i, j - 1), tele(j - 1))),
    }
}

fn t1_coincidence_exact(i: i64, j: i64) -> Option<((i64, i64), Rational)> {
    Some(((i, j + 1), if j == 1 { int(1) } else { tele_sq(j) }))
}

fn t2_coincidence(i: i64, j: i64) -> Option<((i64, i64), f64)> {
    match (i, j) {
        (1, 1) => Some(((1, 2), 1.0)),
        (_, 1) => Some(((i - 1, 3), 3f64.sqrt() / 2.0)),
        (_, 2) => Some(((i + 1, 1), 1.0)),
        _ => Some(((i, j + 1), tele(j))),
    }
}

fn t2_coincidence_back(i: i64, j: i64) -> Option<((i64, i64), f64)> {
    match (i, j) {
        (1, 2) => Some(((1, 1), 1.0)),
        (_, 2) => None,
        (1, 1) => None,
        (_, 1) => Some(((i - 1, 2), 1.0)),
        (_, 3) => Some(((i + 1, 1), 3f64.sqrt() / 2.0)),
        _ => Some(((i, j - 1), tele(j - 1))),
    }
}

fn t2_coincidence_exact(i: i64, j: i64) -> Option<((i64, i64), Rational)> {
    match (i, j) {
        (1, 1) => Some(((1, 2), int(1))),
        (_, 1) => Some(((i - 1, 3), ratio(3, 4))),
        (_, 2) => Some(((i + 1, 1), int(1))),
        _ => Some(((i, j + 1), tele_sq(j))),
    }
}

/// On `j >= 3` both operators of the first pair are the telescoping shift.
fn telescoping_region(_: i64, j: i64) -> Option<Rational> {
    (j >= 3).then(|| tele_tail(j))
}

fn coincidence_pair() -> Result<Vec<(String, LazyOperator)>> {
    let t1 = weighted_injection(
        grid(),
        grid(),
        injection_from(t1_coincidence),
        injection_from(t1_coincidence_back),
        1.0,
        "T₁ e_{i,j} = √(j²−1)/j e_{i,j+1}, T₁ e_{i,1} = e_{i,2}",
    )
    .with_diag(chain_walk(t1_coincidence_exact, telescoping_region, "telescoping tail along the orbit"));
    let t2 = weighted_injection(
        grid(),
        grid(),
        injection_from(t2_coincidence),
        injection_from(t2_coincidence_back),
        1.0,
        "T₂ routes e_{i,1}, e_{i,2} through e_{i−1,3}, e_{i+1,1} before the telescoping shift",
    )
    .with_diag(chain_walk(t2_coincidence_exact, telescoping_region, "telescoping tail along the orbit"));
    let product = t2.compose(&t1)?.with_diag(Arc::new(|u| {
        let (_, j) = pair(u);
        Ok(if j == 1 {
            AsymptoticValue::exact(int(1), "e_{i,1} ↦ e_{i+1,1} is isometric")
        } else {
            AsymptoticValue::exact(tele_tail(j), "telescoping tail along the orbit")
        })
    }));
    Ok(vec![("T1".into(), t1), ("T2".into(), t2), ("T2T1".into(), product)])
}

fn stable_product_pair() -> Result<Vec<(String, LazyOperator)>> {
    let t1 = weighted_injection(
        grid(),
        grid(),
        Arc::new(|u| {
            let (i, j) = pair(u);
            Some((BasisIndex::Pair(i, j + 1), tele(i + 1)))
        }),
        Arc::new(|u| {
            let (i, j) = pair(u);
            (j > 1).then(|| (BasisIndex::Pair(i, j - 1), tele(i + 1)))
        }),
        1.0,
        "T₁ e_{i,j} = √((i+1)²−1)/(i+1) e_{i,j+1}",
    )
    .with_diag(Arc::new(|_| Ok(AsymptoticValue::exact(Rational::zero(), "constant weight below 1 on each row"))));
    let t2 = weighted_injection(
        grid(),
        grid(),
        Arc::new(|u| {
            let (i, j) = pair(u);
            (j > 1).then(|| (BasisIndex::Pair(i + 1, j - 1), 1.0))
        }),
        Arc::new(|u| {
            let (i, j) = pair(u);
            (i > 1).then(|| (BasisIndex::Pair(i - 1, j + 1), 1.0))
        }),
        1.0,
        "T₂ e_{i,j} = e_{i+1,j−1} for j > 1, T₂ e_{i,1} = 0",
    )
    .with_diag(Arc::new(|u| {
        let (_, j) = pair(u);
        Ok(AsymptoticValue::exact(Rational::zero(), format!("T₂^{j} e_u = 0")))
    }));
    let product = t2.compose(&t1)?.with_diag(Arc::new(|u| {
        let (i, _) = pair(u);
        Ok(AsymptoticValue::exact(tele_tail(i + 1), "telescoping tail along e_{i,j} ↦ e_{i+1,j}"))
    }));
    Ok(vec![("T1".into(), t1), ("T2".into(), t2), ("T2T1".into(), product)])
}

/// Weighted shifts `T e_j = w_j e_{j+1}`, `j >= 1`, with `w_j² ∈ {2, 1, 1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Ch3 {
    /// `√2` at `3^l`, `√(1/2)` at `3^l + l`.
    BanachDependent,
    /// `√2` at `3^l`, `√(1/2)` at `2·3^l`.
    NoCesaro,
    /// `√2` on `[3^l, 3^l + l)`, `√(1/2)` on `[3^l + l, 3^l + 2l)`.
    NotPowerBounded,
    /// `√2` on `[3^l, 3^l + l)` only.
    NotPowerBoundedLiteral,
}

impl Ch3 {
    /// `w_j²`, with `l >= 1` throughout.
    pub fn weight_sq(self, j: i64) -> f64 {
        let mut p = 3;
        let mut l = 1;
        while p <= j {
            let hit = match self {
                Ch3::BanachDependent => {
                    if j == p {
                        Some(2.0)
                    } else if j == p + l {
                        Some(0.5)
                    } else {
                        None
                    }
                }
                Ch3::NoCesaro => {
                    if j == p {
                        Some(2.0)
                    } else if j == 2 * p {
                        Some(0.5)
                    } else {
                        None
                    }
                }
                Ch3::NotPowerBounded | Ch3::NotPowerBoundedLiteral => {
                    if j < p + l {
                        Some(2.0)
                    } else if j < p + 2 * l && self == Ch3::NotPowerBounded {
                        Some(0.5)
                    } else {
                        None
                    }
                }
            };
            if let Some(w) = hit {
                return w;
            }
            p *= 3;
            l += 1;
        }
        1.0
    }

    /// `x_n = ⟨T^{*n} T^n e_1, e_1⟩ = ∏_{j=1}^{n} w_j²` for `n = 1..=len`.
    pub fn diagonal_sequence(self, len: usize) -> Vec<f64> {
        let mut p = 1.0;
        (1..=len as i64)
            .map(|j| {
                p *= self.weight_sq(j);
                p
            })
            .collect()
    }
}

pub fn ch3_shift(example: Ch3) -> LazyOperator {
    let universe = Universe::Nat { start: 1 };
    weighted_injection(
        universe.clone(),
        universe,
        Arc::new(move |u| {
            let j = nat(u);
            Some((BasisIndex::Nat(j as u64 + 1), example.weight_sq(j).sqrt()))
        }),
        Arc::new(move |u| {
            let j = nat(u);
            (j > 1).then(|| (BasisIndex::Nat(j as u64 - 1), example.weight_sq(j - 1).sqrt()))
        }),
        2f64.sqrt(),
        format!("{example:?} weighted shift"),
    )
}

/// Diagonal sequence of a named single-operator shift example.
pub fn ch3_sequence(name: &str, len: usize) -> Result<Vec<f64>> {
    let e = match name {
        "ch3_banach_dependent" => Ch3::BanachDependent,
        "ch3_no_cesaro" => Ch3::NoCesaro,
        "ch3_not_power_bounded" => Ch3::NotPowerBounded,
        "ch3_not_power_bounded_literal" => Ch3::NotPowerBoundedLiteral,
        _ => return Err(Error::Input(format!("{name} is not a single-operator shift example"))),
    };
    Ok(e.diagonal_sequence(len))
}

fn h0() -> Universe {
    Universe::Nat { start: 1 }
}

fn h1() -> Universe {
    Universe::Pair { first: IdxRange::from(1), second: IdxRange::ALL }
}

/// `∏_{k=j+3}^{j+i+1} 1/k`, accumulated left to right.
fn y_coefficient(j: i64, i: i64) -> f64 {
    let mut p = 1.0;
    for k in j + 3..=j + i + 1 {
        p *= 1.0 / k as f64;
    }
    p
}

/// `Y f_{j,i}` as `(m, c)` meaning `c e_m`.
fn y_image(j: i64, i: i64) -> Option<(i64, f64)> {
    match i {
        i if i <= 0 => None,
        1 => Some((j + 1, 1.0)),
        _ => Some((j + i, y_coefficient(j, i))),
    }
}

fn y_image_exact(j: i64, i: i64) -> Option<(i64, Rational)> {
    match i {
        i if i <= 0 => None,
        1 => Some((j + 1, int(1))),
        _ => Some((j + i, (j + 3..=j + i + 1).map(|k| ratio(1, k)).product())),
    }
}

fn ch5_operators() -> Vec<(String, LazyOperator)> {
    let t00 = weighted_injection(
        h0(),
        h0(),
        Arc::new(|u| {
            let j = nat(u);
            Some((BasisIndex::Nat(j as u64 + 1), 1.0 / (j + 2) as f64))
        }),
        Arc::new(|u| {
            let j = nat(u);
            (j > 1).then(|| (BasisIndex::Nat(j as u64 - 1), 1.0 / (j + 1) as f64))
        }),
        1.0 / 3.0,
        "T₀₀ e_j = (j+2)^{-1} e_{j+1}",
    )
    .with_diag(Arc::new(|_| Ok(AsymptoticValue::exact(Rational::zero(), "weights tend to 0"))));
    let t11 = weighted_injection(
        h1(),
        h1(),
        Arc::new(|u| {
            let (j, i) = pair(u);
            Some((BasisIndex::Pair(j, i + 1), if i == 0 { 1.0 / (j + 2) as f64 } else { 1.0 }))
        }),
        Arc::new(|u| {
            let (j, i) = pair(u);
            Some((BasisIndex::Pair(j, i - 1), if i == 1 { 1.0 / (j + 2) as f64 } else { 1.0 }))
        }),
        1.0,
        "T₁₁ f_{j,0} = (j+2)^{-1} f_{j,1}, T₁₁ f_{j,i} = f_{j,i+1} otherwise",
    )
    .with_diag(Arc::new(|u| {
        let (j, i) = pair(u);
        Ok(if i > 0 {
            AsymptoticValue::exact(int(1), "isometric from here on")
        } else {
            AsymptoticValue::exact(ratio(1, (j + 2) * (j + 2)), "one defect at f_{j,0}")
        })
    }));
    let v = weighted_injection(
        h1(),
        h0(),
        Arc::new(|u| {
            let (j, i) = pair(u);
            (i == 0).then(|| (BasisIndex::Nat(j as u64), 1.0))
        }),
        Arc::new(|u| Some((BasisIndex::Pair(nat(u), 0), 1.0))),
        1.0,
        "V f_{j,0} = e_j, V f_{j,i} = 0 otherwise",
    );
    let t01 = weighted_injection(
        h1(),
        h0(),
        Arc::new(|u| {
            let (j, i) = pair(u);
            (i == 0).then(|| (BasisIndex::Nat(j as u64), 0.5))
        }),
        Arc::new(|u| Some((BasisIndex::Pair(nat(u), 0), 0.5))),
        0.5,
        "T₀₁ = V/2",
    );
    let apply: BasisMap = Arc::new(|u| {
        let (j, i) = pair(u);
        Ok(match y_image(j, i) {
            Some((m, c)) => FinVec::scaled(BasisIndex::Nat(m as u64), C64::new(c, 0.0)),
            None => FinVec::zero(),
        })
    });
    let adjoint: BasisMap = Arc::new(|u| {
        let m = nat(u);
        Ok(FinVec::from_pairs((1..m).map(|i| {
            let (_, c) = y_image(m - i, i).expect("i >= 1");
            (BasisIndex::Pair(m - i, i), C64::new(c, 0.0))
        })))
    });
    let y = LazyOperator::new(h1(), h0(), apply, adjoint, 2f64.sqrt(), "Y f_{j,i} = ∏_{k=j+3}^{j+i+1} k^{-1} e_{j+i}");
    vec![
        ("T00".into(), t00),
        ("T11".into(), t11),
        ("V".into(), v),
        ("T01".into(), t01),
        ("Y".into(), y),
    ]
}

#[derive(Debug, Clone, Serialize)]
pub struct Ch5Check {
    pub cases: usize,
    /// Largest norm of `(T₀₀Y − YT₁₁ + T₀₀V) f_{j,i}` in floating point.
    pub max_residual: f64,
    /// Number of floating-point residuals that are exactly zero.
    pub exact_zero_f64: usize,
    /// All residuals vanish in rational arithmetic.
    pub exact_zero_rational: bool,
}

/// `T₀₀Y − YT₁₁ + T₀₀V` on `f_{j,i}` for `1 <= j <= j_max`, `|i| <= i_max`.
pub fn ch5_intertwining_check(j_max: i64, i_max: i64) -> Result<Ch5Check> {
    let ex = paper_example("ch5_counterexample")?;
    let (t00, t11, v, y) = (ex.operator("T00")?, ex.operator("T11")?, ex.operator("V")?, ex.operator("Y")?);
    let mut check = Ch5Check { cases: 0, max_residual: 0.0, exact_zero_f64: 0, exact_zero_rational: true };
    for j in 1..=j_max {
        for i in -i_max..=i_max {
            let f = BasisIndex::Pair(j, i);
            let mut r = t00.apply(&y.apply_basis(&f)?)?;
            r = r.sub(&y.apply(&t11.apply_basis(&f)?)?);
            r.axpy(C64::new(1.0, 0.0), &t00.apply(&v.apply_basis(&f)?)?);
            check.cases += 1;
            check.max_residual = check.max_residual.max(r.norm());
            if r.is_empty() {
                check.exact_zero_f64 += 1;
            }
            check.exact_zero_rational &= exact_residual(j, i).is_empty();
        }
    }
    Ok(check)
}

/// The same residual from the defining formulas in rationals, as coefficients on `e_m`.
fn exact_residual(j: i64, i: i64) -> BTreeMap<i64, Rational> {
    let t00 = |m: i64, c: Rational| (m + 1, c * ratio(1, m + 2));
    let mut out: BTreeMap<i64, Rational> = BTreeMap::new();
    let mut add = |(m, c): (i64, Rational)| {
        let e = out.entry(m).or_insert_with(Rational::zero);
        *e += c;
        if e.is_zero() {
            out.remove(&m);
        }
    };
    if let Some((m, c)) = y_image_exact(j, i) {
        add(t00(m, c));
    }
    let (next, w) = if i == 0 { (1, ratio(1, j + 2)) } else { (i + 1, int(1)) };
    if let Some((m, c)) = y_image_exact(j, next) {
        add((m, -(c * w)));
    }
    if i == 0 {
        add(t00(j, int(1)));
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct Ch5Column {
    pub m: i64,
    /// `Σ_i ||Y f_{m−i,i}||²` in floating point, via `||Y* e_m||²`.
    pub sum: f64,
    #[serde(skip)]
    pub exact: Rational,
    /// `exact <= 1 + (m−2)(m+1)^{-2} <= 2`.
    pub within_bound: bool,
}

pub fn ch5_column_sums(m_max: i64) -> Result<Vec<Ch5Column>> {
    let ex = paper_example("ch5_counterexample")?;
    let y = ex.operator("Y")?;
    (2..=m_max)
        .map(|m| {
            let sum = y.adjoint_basis(&BasisIndex::Nat(m as u64))?.norm_sqr();
            let exact: Rational = (1..m)
                .filter_map(|i| y_image_exact(m - i, i))
                .map(|(_, c)| &c * &c)
                .sum();
            let paper_bound = int(1) + ratio(m - 2, (m + 1) * (m + 1));
            let within_bound = exact <= paper_bound && paper_bound <= int(2);
            Ok(Ch5Column { m, sum, exact, within_bound })
        })
        .collect()
}
