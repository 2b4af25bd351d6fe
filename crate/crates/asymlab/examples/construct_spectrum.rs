//! Matrices with a prescribed Cesàro limit spectrum, checked by both routes.
//!
//! Run with `cargo run --example construct_spectrum`.

use asymlab::cesaro::{
    cesaro_limit_iterative, cesaro_limit_spectral, construct_c11, construct_l_stable, SpectrumTarget, DEFAULT_MAX_N,
    DEFAULT_TOL,
};
use asymlab::matkernel::{eig_hermitian, op_norm};
use asymlab::CMatrix;

fn report(label: &str, t: &CMatrix) -> asymlab::Result<()> {
    let spectral = eig_hermitian(&cesaro_limit_spectral(t)?.a)?.values;
    let iterative = cesaro_limit_iterative(t, DEFAULT_TOL, DEFAULT_MAX_N)?;
    println!("{label}: ||T|| = {:.4}", op_norm(t));
    println!("  spectral  {spectral:.10?}");
    println!("  iterative {:.6?} (n = {})", eig_hermitian(&iterative.a)?.values, iterative.iterations);
    Ok(())
}

fn main() -> asymlab::Result<()> {
    for values in [vec![2.0, 2.0 / 3.0], vec![2.0, 2.0, 0.5]] {
        let c = construct_c11(&SpectrumTarget::new(values.clone(), 0)?)?;
        println!("eigenvalues of T: {:.4?}", c.eigenvalues);
        report(&format!("C11 target {values:?}"), &c.t)?;
    }
    let l = construct_l_stable(&SpectrumTarget::new(vec![4.0], 1)?)?;
    println!("block residual of X* A X: {:.2e}", l.block_residual);
    report("1-stable target [4]", &l.t)?;

    match SpectrumTarget::new(vec![1.0, 2.0], 0) {
        Err(e) => println!("rejected (1, 2): {e}"),
        Ok(_) => unreachable!("1 + 1/2 != 2"),
    }
    Ok(())
}
