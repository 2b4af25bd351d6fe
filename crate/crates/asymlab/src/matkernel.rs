//! Dense complex linear algebra used by every other module.
//!
//! All rank and kernel decisions default to [`RANK_TOL`] relative to the
//! operator norm of the matrix at hand.

use nalgebra::{DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Relative rank tolerance: singular values at or below `RANK_TOL * ||A||` count as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Largest dimension accepted by the general eigensolver.
pub const MAX_EIG_DIM: usize = 64;

const SCHUR_MAX_ITER: usize = 10_000;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn zeros(rows: usize, cols: usize) -> CMatrix {
    CMatrix::zeros(rows, cols)
}

/// Build a matrix from real row-major entries.
pub fn from_real_rows(rows: &[&[f64]]) -> CMatrix {
    let r = rows.len();
    let cols = rows.first().map_or(0, |row| row.len());
    CMatrix::from_fn(r, cols, |i, j| c(rows[i][j], 0.0))
}

pub fn diag_real(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v, 0.0)),
    ))
}

pub fn diag_complex(values: &[C64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Reject NaN and infinite entries.
pub fn validate_finite(a: &CMatrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            let z = a[(i, j)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

pub fn require_square(a: &CMatrix, what: &str) -> Result<usize> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape(format!(
            "{what} must be square, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    Ok(a.nrows())
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = a.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Spectral norm (largest singular value); zero for empty matrices.
pub fn op_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Default absolute rank threshold for `a`.
pub fn rank_tol(a: &CMatrix) -> f64 {
    RANK_TOL * op_norm(a)
}

/// Numerical rank with an absolute threshold.
pub fn rank(a: &CMatrix, abs_tol: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > abs_tol).count()
}

/// Condition number `s_max / s_min`; infinite for singular input.
pub fn condition_number(a: &CMatrix) -> f64 {
    let s = singular_values(a);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    }
}

/// Full singular value decomposition data with `v` square (`ncols x ncols`).
struct FullSvd {
    values: Vec<f64>,
    /// Columns are right singular vectors, ordered like `values`, completed to a basis.
    v: CMatrix,
}

fn full_svd(a: &CMatrix) -> FullSvd {
    let (m, n) = (a.nrows(), a.ncols());
    if n == 0 {
        return FullSvd { values: Vec::new(), v: zeros(0, 0) };
    }
    // Pad with zero rows so the thin decomposition yields a square V.
    let padded = if m < n {
        let mut p = zeros(n, n);
        p.view_mut((0, 0), (m, n)).copy_from(a);
        p
    } else {
        a.clone()
    };
    let svd = SVD::new(padded, false, true);
    let vt = svd.v_t.expect("requested v_t");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let values = order.iter().map(|&k| svd.singular_values[k]).collect();
    let v = CMatrix::from_fn(n, order.len(), |i, j| vt[(order[j], i)].conj());
    FullSvd { values, v }
}

/// Orthonormal basis (as columns) of the kernel of `a`, threshold absolute.
pub fn null_space(a: &CMatrix, abs_tol: f64) -> CMatrix {
    let n = a.ncols();
    if a.nrows() == 0 {
        return identity(n);
    }
    let svd = full_svd(a);
    let cols: Vec<usize> = (0..svd.values.len()).filter(|&k| svd.values[k] <= abs_tol).collect();
    CMatrix::from_fn(n, cols.len(), |i, j| svd.v[(i, cols[j])])
}

/// The `m` right singular vectors belonging to the smallest singular values,
/// together with the largest of those singular values.
pub fn smallest_right_singular(a: &CMatrix, m: usize) -> (CMatrix, f64) {
    let n = a.ncols();
    let svd = full_svd(a);
    let start = n - m;
    let worst = if m == 0 { 0.0 } else { svd.values[start] };
    (CMatrix::from_fn(n, m, |i, j| svd.v[(i, start + j)]), worst)
}

/// Orthonormal basis of the column space of `a`.
pub fn range_basis(a: &CMatrix, abs_tol: f64) -> CMatrix {
    if a.ncols() == 0 || a.nrows() == 0 {
        return zeros(a.nrows(), 0);
    }
    let svd = SVD::new(a.clone(), true, false);
    let u = svd.u.expect("requested u");
    let cols: Vec<usize> =
        (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > abs_tol).collect();
    CMatrix::from_fn(a.nrows(), cols.len(), |i, j| u[(i, cols[j])])
}

/// Inverse of a square matrix; fails when numerically singular.
pub fn inverse(a: &CMatrix) -> Result<CMatrix> {
    let n = require_square(a, "matrix")?;
    if n == 0 {
        return Ok(zeros(0, 0));
    }
    let s = singular_values(a);
    let hi = s[0];
    let lo = s[n - 1];
    if hi == 0.0 || lo <= RANK_TOL * hi {
        return Err(Error::Singular(format!("smallest singular value {lo:.3e}")));
    }
    a.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("LU inversion failed".into()))
}

/// Least-squares solution of `a x = b` via the pseudo-inverse.
pub fn least_squares(a: &CMatrix, b: &CMatrix) -> CMatrix {
    if a.ncols() == 0 {
        return zeros(0, b.ncols());
    }
    let svd = SVD::new(a.clone(), true, true);
    let eps = rank_tol(a);
    svd.solve(b, eps).unwrap_or_else(|_| zeros(a.ncols(), b.ncols()))
}

/// Eigen-decomposition of a general square matrix.
#[derive(Debug, Clone)]
pub struct EigDecomp {
    pub values: Vec<C64>,
    /// Columns are unit right eigenvectors.
    pub vectors: CMatrix,
    /// `max_k ||T v_k - λ_k v_k|| / ||v_k||`.
    pub residual: f64,
    pub defective: bool,
    /// Condition number of `vectors`.
    pub condition: f64,
}

/// Eigenvalues and eigenvectors via complex Schur form and triangular back substitution.
pub fn eig_general(t: &CMatrix, tol: f64) -> Result<EigDecomp> {
    let n = require_square(t, "matrix")?;
    validate_finite(t)?;
    if n > MAX_EIG_DIM {
        return Err(Error::TooLarge { dim: n, limit: MAX_EIG_DIM });
    }
    if n == 0 {
        return Ok(EigDecomp {
            values: Vec::new(),
            vectors: zeros(0, 0),
            residual: 0.0,
            defective: false,
            condition: 1.0,
        });
    }
    let schur = Schur::try_new(t.clone(), f64::EPSILON, SCHUR_MAX_ITER)
        .ok_or_else(|| Error::NonConvergence("Schur iteration".into()))?;
    let (q, r) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|k| r[(k, k)]).collect();
    let scale = op_norm(t).max(f64::MIN_POSITIVE);
    let smin = f64::EPSILON * scale;

    let mut y = zeros(n, n);
    for k in 0..n {
        let lam = values[k];
        y[(k, k)] = c(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = c(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += r[(i, j)] * y[(j, k)];
            }
            let mut d = r[(i, i)] - lam;
            if d.norm() < smin {
                d = c(smin, 0.0);
            }
            y[(i, k)] = -acc / d;
        }
    }
    let mut vectors = &q * y;
    for k in 0..n {
        let nrm = vectors.column(k).norm();
        vectors.column_mut(k).unscale_mut(nrm);
    }
    let mut residual = 0.0_f64;
    for k in 0..n {
        let v = vectors.column(k);
        let res = (t * v - v * values[k]).norm() / v.norm();
        residual = residual.max(res);
    }
    let condition = condition_number(&vectors);
    Ok(EigDecomp { values, vectors, residual, defective: condition > 1.0 / tol, condition })
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermEig {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl HermEig {
    pub fn reconstruct(&self) -> CMatrix {
        let d = diag_real(&self.values);
        &self.vectors * d * self.vectors.adjoint()
    }
}

/// Hermitian defect `||A - A*||`.
pub fn hermitian_defect(a: &CMatrix) -> f64 {
    op_norm(&(a - a.adjoint()))
}

/// Tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

pub fn require_hermitian(a: &CMatrix) -> Result<()> {
    require_square(a, "Hermitian matrix")?;
    let defect = hermitian_defect(a);
    if defect > HERMITIAN_TOL * op_norm(a).max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    Ok(())
}

pub fn eig_hermitian(a: &CMatrix) -> Result<HermEig> {
    let n = require_square(a, "matrix")?;
    validate_finite(a)?;
    require_hermitian(a)?;
    if n == 0 {
        return Ok(HermEig { values: Vec::new(), vectors: zeros(0, 0) });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].total_cmp(&eig.eigenvalues[y]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(HermEig { values, vectors })
}

/// Real power `A^p` of a Hermitian positive semidefinite matrix.
pub fn psd_power(a: &CMatrix, p: f64) -> Result<CMatrix> {
    if !p.is_finite() {
        return Err(Error::Precondition("exponent must be finite".into()));
    }
    let eig = eig_hermitian(a)?;
    let tol = rank_tol(a);
    let mut f = Vec::with_capacity(eig.values.len());
    for &lam in &eig.values {
        if lam < -tol {
            return Err(Error::NotPsd(lam));
        }
        if p < 0.0 && lam <= tol {
            return Err(Error::Singular(format!("eigenvalue {lam:.3e} with negative power")));
        }
        let lam = lam.max(0.0);
        f.push(if lam == 0.0 { 0.0 } else { lam.powf(p) });
    }
    let d = diag_real(&f);
    let out = &eig.vectors * d * eig.vectors.adjoint();
    Ok((&out + out.adjoint()).scale(0.5))
}

/// Smallest singular value above `rank_tol` (the reduced minimum modulus).
pub fn reduced_min_modulus(a: &CMatrix, rank_tol: f64) -> Result<f64> {
    let s = singular_values(a);
    s.iter()
        .rev()
        .copied()
        .find(|&x| x > rank_tol)
        .ok_or(Error::ZeroMatrix)
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> Result<f64> {
    Ok(eig_hermitian(a)?.values.first().copied().unwrap_or(0.0))
}

/// Matrix JSON form: `{"rows": n, "cols": m, "data": [[re, im], ...]}` row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn from_matrix(a: &CMatrix) -> Self {
        let mut data = Vec::with_capacity(a.len());
        for i in 0..a.nrows() {
            for j in 0..a.ncols() {
                data.push([a[(i, j)].re, a[(i, j)].im]);
            }
        }
        MatrixJson { rows: a.nrows(), cols: a.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.rows * self.cols != self.data.len() {
            return Err(Error::Input(format!(
                "rows*cols = {} but data has {} entries",
                self.rows * self.cols,
                self.data.len()
            )));
        }
        let a = CMatrix::from_fn(self.rows, self.cols, |i, j| {
            let [re, im] = self.data[i * self.cols + j];
            c(re, im)
        });
        validate_finite(&a)?;
        Ok(a)
    }
}

pub fn matrix_from_json(text: &str) -> Result<CMatrix> {
    let parsed: MatrixJson =
        serde_json::from_str(text).map_err(|e| Error::Input(format!("matrix JSON: {e}")))?;
    parsed.to_matrix()
}

pub fn matrix_to_json(a: &CMatrix) -> serde_json::Value {
    serde_json::to_value(MatrixJson::from_matrix(a)).expect("matrix serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_complex, random_unitary, rng};
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn identity_eigen() {
        let e = eig_general(&identity(3), 1e-10).unwrap();
        for v in &e.values {
            assert!(close(v.re, 1.0, 1e-14) && v.im.abs() < 1e-14);
        }
        assert_eq!(e.residual, 0.0);
        assert!(!e.defective);
    }

    #[test]
    fn nilpotent_jordan_is_defective() {
        let j = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let e = eig_general(&j, 1e-10).unwrap();
        assert!(e.values.iter().all(|v| v.norm() < 1e-14));
        assert!(e.defective);
    }

    #[test]
    fn golden_ratio_companion() {
        // Quadratic formula oracle for z^2 - z - 1.
        let disc = 5.0_f64.sqrt();
        let (r1, r2) = ((1.0 + disc) / 2.0, (1.0 - disc) / 2.0);
        let comp = from_real_rows(&[&[0.0, 1.0], &[1.0, 1.0]]);
        let e = eig_general(&comp, 1e-10).unwrap();
        let mut got: Vec<f64> = e.values.iter().map(|v| v.re).collect();
        got.sort_by(|a, b| b.total_cmp(a));
        assert!(close(got[0], r1, 1e-10) && close(got[1], r2, 1e-10));
        assert!(e.values.iter().all(|v| v.im.abs() < 1e-12));
        assert!(e.residual < 1e-12);
    }

    #[test]
    fn eig_general_rejects_bad_input() {
        assert!(matches!(eig_general(&zeros(2, 3), 1e-10), Err(Error::Shape(_))));
        assert!(matches!(
            eig_general(&identity(MAX_EIG_DIM + 1), 1e-10),
            Err(Error::TooLarge { .. })
        ));
        let mut bad = identity(2);
        bad[(0, 1)] = c(f64::NAN, 0.0);
        assert!(matches!(eig_general(&bad, 1e-10), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn hermitian_examples() {
        let e = eig_hermitian(&diag_real(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 2.0, 3.0]);
        // Characteristic polynomial (2-x)^2 - 1 has roots 1 and 3.
        let e = eig_hermitian(&from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]])).unwrap();
        assert!(close(e.values[0], 1.0, 1e-14) && close(e.values[1], 3.0, 1e-14));
        let e = eig_hermitian(&zeros(3, 3)).unwrap();
        assert!(e.values.iter().all(|&v| v == 0.0));
        assert!(matches!(
            eig_hermitian(&from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn psd_power_examples() {
        let id = identity(3);
        assert!(op_norm(&(psd_power(&id, -0.5).unwrap() - &id)) < 1e-14);
        let r = psd_power(&diag_real(&[4.0, 9.0]), 0.5).unwrap();
        assert!(op_norm(&(r - diag_real(&[2.0, 3.0]))) < 1e-14);
        // Closed form inverse of [[a, b], [b, a]] is [[a, -b], [-b, a]] / (a^2 - b^2).
        let m = from_real_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let oracle = from_real_rows(&[&[2.0 / 3.0, -1.0 / 3.0], &[-1.0 / 3.0, 2.0 / 3.0]]);
        assert!(op_norm(&(psd_power(&m, -1.0).unwrap() - oracle)) < 1e-12);
        assert!(matches!(psd_power(&diag_real(&[1.0, -1.0]), 0.5), Err(Error::NotPsd(_))));
        assert!(matches!(psd_power(&diag_real(&[1.0, 0.0]), -1.0), Err(Error::Singular(_))));
    }

    #[test]
    fn reduced_min_modulus_examples() {
        assert_eq!(reduced_min_modulus(&identity(3), 1e-8).unwrap(), 1.0);
        let d = diag_real(&[0.0, 0.3, 1.0]);
        assert!(close(reduced_min_modulus(&d, 1e-8).unwrap(), 0.3, 1e-15));
        assert!(matches!(reduced_min_modulus(&zeros(2, 2), 1e-8), Err(Error::ZeroMatrix)));
    }

    #[test]
    fn reduced_min_modulus_matches_full_sweep() {
        let mut g = rng(11);
        let a = random_complex(&mut g, 3, 3);
        // Brute force oracle: eigenvalues of A*A are the squared singular values.
        let gram = a.adjoint() * &a;
        let eig = eig_hermitian(&gram).unwrap();
        let oracle = eig.values.iter().map(|v| v.max(0.0).sqrt()).fold(f64::INFINITY, f64::min);
        let got = reduced_min_modulus(&a, 1e-12).unwrap();
        assert!(close(got, oracle, 1e-12));
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let a = from_real_rows(&[&[1.0, 0.0, 0.0]]);
        let k = null_space(&a, 1e-12);
        assert_eq!(k.ncols(), 2);
        assert!(op_norm(&(&a * &k)) < 1e-14);
    }

    #[test]
    fn matrix_json_round_trip() {
        let a = CMatrix::from_fn(2, 3, |i, j| c(i as f64, j as f64 - 0.5));
        let text = serde_json::to_string(&MatrixJson::from_matrix(&a)).unwrap();
        assert_eq!(matrix_from_json(&text).unwrap(), a);
        assert!(matrix_from_json(r#"{"rows":2,"cols":2,"data":[[1,0]]}"#).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn hermitian_reconstruction(seed in any::<u64>(), n in 1usize..7) {
            let mut g = rng(seed);
            let x = random_complex(&mut g, n, n);
            let a = &x + x.adjoint();
            let e = eig_hermitian(&a).unwrap();
            let scale = op_norm(&a).max(1e-300);
            prop_assert!(op_norm(&(e.reconstruct() - &a)) <= 1e-12 * scale * 10.0);
            let gram = e.vectors.adjoint() * &e.vectors;
            prop_assert!(op_norm(&(gram - identity(n))) < 1e-12);
        }

        #[test]
        fn sqrt_squares_back(seed in any::<u64>(), n in 1usize..7) {
            let mut g = rng(seed);
            let x = random_complex(&mut g, n, n);
            let a = x.adjoint() * &x;
            let r = psd_power(&a, 0.5).unwrap();
            prop_assert!(op_norm(&(&r * &r - &a)) <= 1e-10 * op_norm(&a));
        }

        #[test]
        fn reduced_min_modulus_unitary_invariant(seed in any::<u64>(), n in 1usize..6) {
            let mut g = rng(seed);
            let a = random_complex(&mut g, n, n);
            let u = random_unitary(&mut g, n);
            let w = random_unitary(&mut g, n);
            let lhs = reduced_min_modulus(&a, 1e-12).unwrap();
            let rhs = reduced_min_modulus(&(&u * &a * &w), 1e-12).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * op_norm(&a));
        }

        #[test]
        fn eigen_residual_small(seed in any::<u64>(), n in 1usize..8) {
            let mut g = rng(seed);
            let a = random_complex(&mut g, n, n);
            let e = eig_general(&a, 1e-10).unwrap();
            prop_assert!(e.residual <= 1e-10 * op_norm(&a).max(1.0));
        }
    }
}
