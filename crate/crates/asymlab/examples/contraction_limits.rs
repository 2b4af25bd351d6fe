//! Asymptotic limits of matrix contractions and the strong limit of `T^{*n}Tⁿ`.
//!
//! Run with `cargo run --example contraction_limits`.

use asymlab::cesaro::{contraction_asymptotic_limit, sot_limit_exists};
use asymlab::random::{random_contraction, random_power_bounded, rng};

fn main() -> asymlab::Result<()> {
    let mut g = rng(7);
    for (dim, unitary) in [(3, 1), (4, 2), (6, 3)] {
        let t = random_contraction(&mut g, dim, unitary);
        let c = contraction_asymptotic_limit(&t, 1e-6)?;
        println!(
            "dim {dim}: ||A² − A|| = {:.1e}, ||A_T − A_T*|| = {:.1e}, ||T^*N T^N − A|| = {:.1e} at N = 2^20",
            c.idempotency, c.adjoint_gap, c.power_residual
        );
    }
    for seed in 0..4 {
        let s = random_power_bounded(&mut rng(seed), 3, 2, 1e2);
        let r = sot_limit_exists(&s.t)?;
        println!(
            "power bounded seed {seed}: strong limit exists = {}, max cross term {:.2e}",
            r.exists, r.max_cross
        );
    }
    Ok(())
}
