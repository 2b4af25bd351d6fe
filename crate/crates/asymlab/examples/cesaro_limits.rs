//! Power-boundedness, both Cesàro routes, the trace law and the harmonic identity.
//!
//! Run with `cargo run --example cesaro_limits`.

use asymlab::cesaro::{
    classify_power_bounded, compare_routes, harmonic_identity_residual, three_by_three_counterexample, trace_law,
    DEFAULT_EMPIRICAL_N, DEFAULT_MAX_N, DEFAULT_TOL, PERIPHERAL_BAND,
};
use asymlab::matkernel::eig_hermitian;
use asymlab::random::{random_c11_2x2, random_power_bounded, rng};

fn main() -> asymlab::Result<()> {
    let t = three_by_three_counterexample();
    let class = classify_power_bounded(&t, PERIPHERAL_BAND, DEFAULT_EMPIRICAL_N)?;
    println!("3x3: power bounded = {}, spectral radius = {:.6}", class.bounded, class.spectral_radius);

    let routes = compare_routes(&t, DEFAULT_TOL, DEFAULT_MAX_N)?;
    println!(
        "routes: difference {:.2e} (allowed {:.2e}) after {} iterations",
        routes.difference, routes.allowed, routes.iterative.iterations
    );
    let eigs = eig_hermitian(&routes.spectral.a)?.values;
    println!("eigenvalues of A_T,C: {eigs:.6?}");

    let h = harmonic_identity_residual(&t)?;
    println!("A⁻¹ + A_*⁻¹ eigenvalues: {:.5?}", h.combined_eigs);
    println!("distance from 2I: {:.5}", h.residual);

    let mut g = rng(1);
    let c11 = random_c11_2x2(&mut g, 1e4);
    println!("random 2x2 C11: harmonic residual {:.2e}", harmonic_identity_residual(&c11)?.residual);

    for dim in 2..=5 {
        let sample = random_power_bounded(&mut g, dim, dim / 2, 1e3);
        let limit = compare_routes(&sample.t, DEFAULT_TOL, DEFAULT_MAX_N)?.spectral.a;
        let law = trace_law(&limit, 1e-6)?;
        println!(
            "dim {dim}, {} peripheral: Σ 1/t_j = {:.9} with rank {}",
            sample.peripheral, law.reciprocal_sum, law.rank
        );
    }
    Ok(())
}
