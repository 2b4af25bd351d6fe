//! Weighted shifts evaluated exactly on finitely supported vectors, their asymptotic values
//! and the Banach-limit evidence for an oscillating diagonal sequence.
//!
//! Run with `cargo run --example lazy_shifts`.

use asymlab::lazyop::{
    asymptotic_diag_value, banach_range_bounds, bilateral_shift, ch3_sequence, paper_example, unilateral_shift,
    BasisIndex, FinVec, WeightGen, WeightRule,
};
use asymlab::C64;

fn main() -> asymlab::Result<()> {
    let t = unilateral_shift(WeightGen::new(WeightRule::Telescoping { j0: 2 }), 1);
    let x = FinVec::from_pairs([(BasisIndex::Nat(2), C64::new(1.0, 0.0)), (BasisIndex::Nat(5), C64::new(0.0, 2.0))]);
    let y = t.apply_power(&x, 3)?;
    for (u, c) in y.iter() {
        println!("T³x at {u}: {c:.6}");
    }
    for j in [2u64, 3, 10] {
        let a = asymptotic_diag_value(&t, &BasisIndex::Nat(j), 1000)?;
        println!("A-value at e_{j}: {:.6} ({:?}, expected {:.6})", a.value, a.route, (j - 1) as f64 / j as f64);
    }

    let half = WeightGen::new(WeightRule::TableThenConstant { start: 1, prefix: vec![], tail: 1.0, head: Some(0.5) });
    let b = bilateral_shift(half);
    for k in [-3i64, 0, 1] {
        let a = asymptotic_diag_value(&b, &BasisIndex::Int(k), 1000)?;
        println!("bilateral A-value at e_{k}: {:.4}", a.value);
    }

    let pair = paper_example("ch2_coincidence_pair")?;
    println!("{}", pair.description);
    for name in ["T1", "T2", "T2T1"] {
        let op = pair.operator(name)?;
        let a = asymptotic_diag_value(op, &BasisIndex::Pair(3, 1), 1000)?;
        println!("  A_{name} at e_(3,1): {:.6}", a.value);
    }

    let k = 3usize.pow(8);
    let seq = ch3_sequence("ch3_banach_dependent", k + 10)?;
    let r = banach_range_bounds(&seq, k, 8, &[k])?;
    println!(
        "Cesàro mean at 3^8: {:.5}; constant windows at 2 for every length <= 8: {}",
        r.mean_at(k).unwrap_or(f64::NAN),
        r.plateaus_at_max(2.0)
    );
    Ok(())
}
