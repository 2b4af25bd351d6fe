//! Seeded generators for random test matrices.

use std::f64::consts::PI;

use nalgebra::QR;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matkernel::{c, condition_number, diag_complex, inverse, op_norm, CMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Matrix with independent standard complex Gaussian entries.
pub fn random_complex(g: &mut SeededRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = g.sample(StandardNormal);
        let im: f64 = g.sample(StandardNormal);
        c(re, im)
    })
}

/// Haar-distributed unitary via phase-corrected QR.
pub fn random_unitary(g: &mut SeededRng, n: usize) -> CMatrix {
    let x = random_complex(g, n, n);
    let qr = QR::new(x);
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        let col = q.column(k) * phase;
        q.set_column(k, &col);
    }
    q
}

/// `k` unimodular numbers whose angles are pairwise at least `min_gap` apart.
pub fn separated_phases(g: &mut SeededRng, k: usize, min_gap: f64) -> Vec<C64> {
    let mut angles: Vec<f64> = Vec::with_capacity(k);
    while angles.len() < k {
        let a: f64 = g.random_range(0.0..2.0 * PI);
        let ok = angles.iter().all(|&b| {
            let d = (a - b).rem_euclid(2.0 * PI);
            d.min(2.0 * PI - d) >= min_gap
        });
        if ok {
            angles.push(a);
        }
    }
    angles.into_iter().map(|a| C64::from_polar(1.0, a)).collect()
}

/// Random invertible matrix with condition number at most `max_cond`.
pub fn random_invertible(g: &mut SeededRng, n: usize, max_cond: f64) -> CMatrix {
    loop {
        let s = random_complex(g, n, n);
        if condition_number(&s) <= max_cond {
            return s;
        }
    }
}

/// Scale each column to unit length.
pub fn unit_columns(mut s: CMatrix) -> CMatrix {
    for k in 0..s.ncols() {
        let nrm = s.column(k).norm();
        s.column_mut(k).unscale_mut(nrm);
    }
    s
}

/// Square matrix with spectral radius at most `radius`, built as `Q R Q*` with `R` triangular.
/// Off-diagonal entries have scale `0.5/√n`, so the nilpotent part has norm of order one.
pub fn random_stable(g: &mut SeededRng, n: usize, radius: f64) -> CMatrix {
    let q = random_unitary(g, n);
    let mut r = random_complex(g, n, n).scale(0.5 / (n as f64).sqrt());
    for i in 0..n {
        for j in 0..i {
            r[(i, j)] = c(0.0, 0.0);
        }
        let rad: f64 = g.random_range(0.0..radius);
        let ang: f64 = g.random_range(0.0..2.0 * PI);
        r[(i, i)] = C64::from_polar(rad, ang);
    }
    &q * r * q.adjoint()
}

/// A power-bounded matrix `S (U ⊕ B) S⁻¹` with `peripheral` distinct unimodular eigenvalues.
#[derive(Debug, Clone)]
pub struct PowerBoundedSample {
    pub t: CMatrix,
    pub s: CMatrix,
    pub peripheral: usize,
}

pub fn random_power_bounded(
    g: &mut SeededRng,
    dim: usize,
    peripheral: usize,
    max_cond: f64,
) -> PowerBoundedSample {
    assert!(peripheral <= dim);
    let s = random_invertible(g, dim, max_cond);
    let phases = separated_phases(g, peripheral, 0.3);
    let mut core = CMatrix::zeros(dim, dim);
    for (k, &p) in phases.iter().enumerate() {
        core[(k, k)] = p;
    }
    let stable = dim - peripheral;
    if stable > 0 {
        let b = random_stable(g, stable, 0.8);
        core.view_mut((peripheral, peripheral), (stable, stable)).copy_from(&b);
    }
    let t = &s * core * inverse(&s).expect("conditioned S is invertible");
    PowerBoundedSample { t, s, peripheral }
}

/// Random 2x2 matrix of class C11: unit-column `S` with condition at most `max_cond`
/// and two distinct unimodular eigenvalues.
pub fn random_c11_2x2(g: &mut SeededRng, max_cond: f64) -> CMatrix {
    loop {
        let s = unit_columns(random_complex(g, 2, 2));
        if condition_number(&s) > max_cond {
            continue;
        }
        let phases = separated_phases(g, 2, 0.2);
        let t = &s * diag_complex(&phases) * inverse(&s).expect("conditioned");
        return t;
    }
}

/// Random contraction `W (U ⊕ C) W*` with a unitary part of dimension `unitary_dim`
/// and a non-normal strict contraction `C` of norm 0.95.
pub fn random_contraction(g: &mut SeededRng, dim: usize, unitary_dim: usize) -> CMatrix {
    assert!(unitary_dim <= dim);
    let w = random_unitary(g, dim);
    let mut core = CMatrix::zeros(dim, dim);
    if unitary_dim > 0 {
        let u = random_unitary(g, unitary_dim);
        core.view_mut((0, 0), (unitary_dim, unitary_dim)).copy_from(&u);
    }
    let rest = dim - unitary_dim;
    if rest > 0 {
        let x = random_complex(g, rest, rest);
        let cpart = x.scale(0.95 / op_norm(&x));
        core.view_mut((unitary_dim, unitary_dim), (rest, rest)).copy_from(&cpart);
    }
    &w * core * w.adjoint()
}
