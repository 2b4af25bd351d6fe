//! Kernel of the commutant mapping for block upper triangular contractions.
//!
//! Run with `cargo run --example commutant_kernel`.

use asymlab::commutant::{commutant_report, random_mixed_triple, BlockTripleJson, DEFAULT_RANK_TOL};

fn main() -> asymlab::Result<()> {
    let text = include_str!("data/triple.json");
    let parsed: BlockTripleJson = serde_json::from_str(text).map_err(|e| asymlab::Error::Input(e.to_string()))?;
    let r = commutant_report(&parsed.to_triple(1e-9)?, DEFAULT_RANK_TOL)?;
    println!("data/triple.json: kernel dimension {}, residual {:.1e}", r.kernel_dimension, r.max_residual);

    for (seed, l, k) in [(1, 1, 1), (2, 2, 1), (3, 2, 3), (4, 3, 2)] {
        let bt = random_mixed_triple(seed, l, k)?;
        let r = commutant_report(&bt, DEFAULT_RANK_TOL)?;
        println!(
            "stable {l}x{l} over unitary {k}x{k}: kernel dimension {}, injective = {}, conditions {}",
            r.kernel_dimension,
            r.injective,
            serde_json::to_string(&r.conditions).expect("serializes")
        );
    }
    Ok(())
}
