//! Operator-weighted shifts with block weights and the antidiagonal cluster shift.
//!
//! Run with `cargo run --example block_shifts`.

use asymlab::lazyop::{block_preset, diag_cluster_shift, BasisIndex, BlockPreset, FinVec, WeightGen, WeightRule};
use asymlab::C64;

fn main() -> asymlab::Result<()> {
    for preset in [BlockPreset::Dyadic, BlockPreset::RotatedHarmonic] {
        let shift = block_preset(preset, 40)?;
        let x = FinVec::from_pairs([
            (BasisIndex::Pair(1, 0), C64::new(1.0, 0.0)),
            (BasisIndex::Pair(2, 1), C64::new(-0.5, 0.25)),
        ]);
        println!("{preset:?} (block dimension {}):", shift.dim);
        for n in [1, 4, 16] {
            let c = shift.check_bound(&x, n)?;
            println!("  n = {n:2}: ||T^*n T^n x − Ax|| = {:.3e} <= {:.3e}: {}", c.lhs, c.rhs, c.holds);
        }
    }

    let cluster = diag_cluster_shift(WeightGen::new(WeightRule::Harmonic))?;
    for (l, m) in [(1, 1), (2, 3), (4, 1)] {
        println!(
            "cluster α_({l},{m}) = {:.6}, residual at n = 5: {:.3e}",
            cluster.alpha(l, m),
            cluster.residual(l, m, 5)?
        );
    }
    Ok(())
}
