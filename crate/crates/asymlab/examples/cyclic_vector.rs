//! Self-certifying cyclic vector for a backward shift on two branches.
//!
//! Run with `cargo run --release --example cyclic_vector`.

use std::sync::Arc;

use asymlab::dirtree::{backward_cyclic_vector, verify_cyclic_vector};

fn main() -> asymlab::Result<()> {
    let (j, k, m) = (2, 2000, 12);
    let weights = |branch: usize, k: u64| if branch == 0 { 1.0 } else { 0.5 + 1.0 / (k as f64 + 2.0) };
    let cv = backward_cyclic_vector(&weights, j, k, m)?;
    let verified = verify_cyclic_vector(&cv.f, Arc::new(weights), j, m)?;
    println!("support size {}, rescaled at m = {:?}", cv.f.len(), cv.rescaled);
    for (i, (s, v)) in cv.certificates.iter().zip(&verified).enumerate() {
        let bound = 0.5_f64.powi(i as i32 + 1);
        println!("m = {:2}: Σ_m = {s:.3e}, re-verified {v:.3e}, bound {bound:.3e}", i + 1);
    }
    Ok(())
}
