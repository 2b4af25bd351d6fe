//! Block upper-triangular matrices `T = [[T00, T01], [0, T11]]`: the kernel of the
//! commutant map, point spectrum of the blocks, and the four necessary conditions
//! for injectivity in finite dimension.

use serde::{Deserialize, Serialize};

use crate::cesaro::{classify_power_bounded, DEFAULT_EMPIRICAL_N, PERIPHERAL_BAND};
use crate::error::{Error, Result};
use crate::matkernel::{
    eig_general, identity, least_squares, null_space, op_norm, rank, rank_tol, singular_values,
    smallest_right_singular, validate_finite, zeros, CMatrix, MatrixJson, C64, RANK_TOL,
};

/// Spectra closer than this are reported as indeterminate.
pub const SPECTRAL_GAP_TOL: f64 = 1e-6;
/// Relative least-squares residual above which `T01` is outside the Sylvester range.
pub const RANGE_TOL: f64 = 1e-8;
/// Relative residual allowed for kernel basis elements.
pub const BASIS_TOL: f64 = 1e-8;
/// Rank gaps below this ratio attach a warning.
pub const MIN_SINGULAR_GAP: f64 = 10.0;

const EIG_TOL: f64 = 1e-10;
const KERNEL_REL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct BlockTriple {
    pub t00: CMatrix,
    pub t01: CMatrix,
    pub t11: CMatrix,
    pub contraction_flag: bool,
    pub stable_flag: bool,
}

impl BlockTriple {
    pub fn new(t00: CMatrix, t01: CMatrix, t11: CMatrix, tol: f64) -> Result<Self> {
        let (l, k) = (t00.nrows(), t11.nrows());
        if t00.ncols() != l || t11.ncols() != k || t01.shape() != (l, k) {
            return Err(Error::Shape(format!(
                "blocks {}x{}, {}x{}, {}x{} are inconsistent",
                t00.nrows(),
                t00.ncols(),
                t01.nrows(),
                t01.ncols(),
                t11.nrows(),
                t11.ncols()
            )));
        }
        for m in [&t00, &t01, &t11] {
            validate_finite(m)?;
        }
        let mut bt = BlockTriple { t00, t01, t11, contraction_flag: false, stable_flag: false };
        bt.contraction_flag = op_norm(&bt.assemble()) <= 1.0 + tol;
        bt.stable_flag = stable_flag(&bt.t00, &bt.t11)?;
        Ok(bt)
    }

    pub fn l(&self) -> usize {
        self.t00.nrows()
    }

    pub fn k(&self) -> usize {
        self.t11.nrows()
    }

    /// The assembled `(l + k) x (l + k)` matrix.
    pub fn assemble(&self) -> CMatrix {
        let (l, k) = (self.l(), self.k());
        let mut t = zeros(l + k, l + k);
        t.view_mut((0, 0), (l, l)).copy_from(&self.t00);
        t.view_mut((0, l), (l, k)).copy_from(&self.t01);
        t.view_mut((l, l), (k, k)).copy_from(&self.t11);
        t
    }

    fn norm_scale(&self) -> f64 {
        1.0 + op_norm(&self.assemble())
    }
}

fn spectrum(m: &CMatrix) -> Result<Vec<C64>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(eig_general(m, EIG_TOL)?.values)
}

fn stable_flag(t00: &CMatrix, t11: &CMatrix) -> Result<bool> {
    let r00 = spectrum(t00)?.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if r00 > 1.0 - PERIPHERAL_BAND {
        return Ok(false);
    }
    if t11.nrows() == 0 {
        return Ok(true);
    }
    let all_peripheral = spectrum(t11)?.iter().all(|v| v.norm() >= 1.0 - PERIPHERAL_BAND);
    Ok(all_peripheral && classify_power_bounded(t11, PERIPHERAL_BAND, DEFAULT_EMPIRICAL_N)?.bounded)
}

/// Input shape `{"T00": matrix, "T01": matrix, "T11": matrix}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockTripleJson {
    #[serde(rename = "T00")]
    pub t00: MatrixJson,
    #[serde(rename = "T01")]
    pub t01: MatrixJson,
    #[serde(rename = "T11")]
    pub t11: MatrixJson,
}

impl BlockTripleJson {
    pub fn to_triple(&self, tol: f64) -> Result<BlockTriple> {
        BlockTriple::new(self.t00.to_matrix()?, self.t01.to_matrix()?, self.t11.to_matrix()?, tol)
    }
}

#[derive(Debug, Clone)]
pub struct CommutantKernel {
    pub dimension: usize,
    /// Pairs `(C00, C01)`.
    pub basis: Vec<(CMatrix, CMatrix)>,
    /// Smallest retained over largest discarded singular value; infinite if nothing is discarded.
    pub singular_gap: f64,
    pub max_residual: f64,
    pub warnings: Vec<String>,
}

fn unpack(x: &[C64], l: usize, k: usize) -> (CMatrix, CMatrix) {
    let c00 = CMatrix::from_column_slice(l, l, &x[..l * l]);
    let c01 = CMatrix::from_column_slice(l, k, &x[l * l..]);
    (c00, c01)
}

fn kernel_map(bt: &BlockTriple, c00: &CMatrix, c01: &CMatrix) -> (CMatrix, CMatrix) {
    let r0 = c00 * &bt.t00 - &bt.t00 * c00;
    let r1 = &bt.t00 * c01 - c01 * &bt.t11 - c00 * &bt.t01;
    (r0, r1)
}

/// Residual of a pair in the intertwining system.
pub fn kernel_residual(bt: &BlockTriple, c00: &CMatrix, c01: &CMatrix) -> f64 {
    let (r0, r1) = kernel_map(bt, c00, c01);
    op_norm(&r0).max(op_norm(&r1))
}

/// Null space of `(C00, C01) ↦ (C00 T00 − T00 C00, T00 C01 − C01 T11 − C00 T01)`.
pub fn injectivity_kernel(bt: &BlockTriple, rank_tol_rel: f64) -> Result<CommutantKernel> {
    let (l, k) = (bt.l(), bt.k());
    let unknowns = l * l + l * k;
    if unknowns == 0 {
        return Ok(CommutantKernel {
            dimension: 0,
            basis: Vec::new(),
            singular_gap: f64::INFINITY,
            max_residual: 0.0,
            warnings: Vec::new(),
        });
    }
    let mut system = zeros(unknowns, unknowns);
    let mut unit = vec![C64::new(0.0, 0.0); unknowns];
    for col in 0..unknowns {
        unit[col] = C64::new(1.0, 0.0);
        let (c00, c01) = unpack(&unit, l, k);
        let (r0, r1) = kernel_map(bt, &c00, &c01);
        for (row, v) in r0.iter().chain(r1.iter()).enumerate() {
            system[(row, col)] = *v;
        }
        unit[col] = C64::new(0.0, 0.0);
    }
    let sv = singular_values(&system);
    let thr = rank_tol_rel * sv[0];
    let dimension = sv.iter().filter(|&&s| s <= thr).count();
    let retained = sv.iter().copied().filter(|&s| s > thr).fold(f64::INFINITY, f64::min);
    let discarded = sv.iter().copied().filter(|&s| s <= thr).fold(0.0, f64::max);
    let singular_gap = if dimension == 0 || dimension == unknowns {
        f64::INFINITY
    } else if discarded == 0.0 {
        f64::INFINITY
    } else {
        retained / discarded
    };
    let mut warnings = Vec::new();
    if singular_gap < MIN_SINGULAR_GAP {
        warnings.push(format!("ill-separated rank decision: gap {singular_gap:.3e}"));
    }
    let (vectors, _) = smallest_right_singular(&system, dimension);
    let scale = bt.norm_scale();
    let mut basis = Vec::with_capacity(dimension);
    let mut max_residual = 0.0_f64;
    for j in 0..dimension {
        let x: Vec<C64> = vectors.column(j).iter().copied().collect();
        let (c00, c01) = unpack(&x, l, k);
        max_residual = max_residual.max(kernel_residual(bt, &c00, &c01));
        basis.push((c00, c01));
    }
    if max_residual > BASIS_TOL * scale {
        warnings.push(format!("kernel basis residual {max_residual:.3e}"));
    }
    Ok(CommutantKernel { dimension, basis, singular_gap, max_residual, warnings })
}

/// The vectorized Sylvester operator `Y ↦ A Y − Y B` for `Y` of shape `a.nrows() x b.nrows()`.
pub fn sylvester_matrix(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (p, q) = (a.nrows(), b.nrows());
    let n = p * q;
    let mut m = zeros(n, n);
    for col in 0..n {
        let mut y = zeros(p, q);
        y[(col % p, col / p)] = C64::new(1.0, 0.0);
        let r = a * &y - &y * b;
        for (row, v) in r.iter().enumerate() {
            m[(row, col)] = *v;
        }
    }
    m
}

/// Solve `A Y − Y B = C` in the least-squares sense; returns `Y` and the residual norm.
pub fn solve_sylvester(a: &CMatrix, b: &CMatrix, rhs: &CMatrix) -> (CMatrix, f64) {
    let (p, q) = (a.nrows(), b.nrows());
    if p * q == 0 {
        return (zeros(p, q), 0.0);
    }
    let m = sylvester_matrix(a, b);
    let v = CMatrix::from_column_slice(p * q, 1, rhs.as_slice());
    let y = least_squares(&m, &v);
    let res = (&m * &y - &v).norm();
    (CMatrix::from_column_slice(p, q, y.as_slice()), res)
}

/// Membership of `λ` in the point spectra of `T` and `T*`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PointSpectrum {
    pub in_sp_t: bool,
    pub in_sp_tstar: bool,
}

fn kernel_basis(m: &CMatrix, scale: f64) -> CMatrix {
    if m.nrows() == 0 {
        return zeros(0, 0);
    }
    null_space(m, KERNEL_REL * scale)
}

pub fn point_spectrum_block(bt: &BlockTriple, lambda: C64) -> Result<PointSpectrum> {
    if lambda.norm() >= 1.0 {
        return Err(Error::Precondition(format!("|λ| = {} must be below 1", lambda.norm())));
    }
    let (l, k) = (bt.l(), bt.k());
    let scale = bt.norm_scale();
    let k00 = kernel_basis(&(&bt.t00 - identity(l) * lambda), scale);
    let in_sp_t = k00.ncols() > 0;
    let t11_star = bt.t11.adjoint();
    if kernel_basis(&(&t11_star - identity(k) * lambda), scale).ncols() > 0 {
        return Ok(PointSpectrum { in_sp_t, in_sp_tstar: true });
    }
    // T* (x, y) = λ (x, y) with x ≠ 0 needs x ∈ ker(T00* − λ) and T01* x ⊥ ker(T11 − conj λ).
    let kstar = kernel_basis(&(bt.t00.adjoint() - identity(l) * lambda), scale);
    if kstar.ncols() == 0 {
        return Ok(PointSpectrum { in_sp_t, in_sp_tstar: false });
    }
    let n = kernel_basis(&(&bt.t11 - identity(k) * lambda.conj()), scale);
    let in_sp_tstar = if n.ncols() == 0 {
        true
    } else {
        let m = n.adjoint() * bt.t01.adjoint() * &kstar;
        rank(&m, KERNEL_REL * scale) < kstar.ncols()
    };
    Ok(PointSpectrum { in_sp_t, in_sp_tstar })
}

#[derive(Debug, Clone, Serialize)]
pub struct NecessaryConditions {
    /// No nonzero `X` with `X T11 = T00 X`.
    pub i: bool,
    /// `conj σ(T00*) ∩ σ(T11) ≠ ∅`.
    pub ii: bool,
    /// `σ_p(T) ∩ conj σ_p(T*) ∩ 𝔻 = ∅`.
    pub iii: bool,
    /// `T01` lies outside the range of `Y ↦ T00 Y − Y T11`.
    pub iv: bool,
    /// Minimal distance between `σ(T00)` and `σ(T11)`.
    pub spectral_gap: f64,
    pub indeterminate: bool,
    pub sylvester_residual: f64,
}

impl NecessaryConditions {
    pub fn all(&self) -> bool {
        self.i && self.ii && self.iii && self.iv
    }
}

pub fn necessary_conditions(bt: &BlockTriple) -> Result<NecessaryConditions> {
    if !bt.stable_flag {
        return Err(Error::Precondition("necessary conditions need a stable triple".into()));
    }
    if bt.l() == 0 {
        return Ok(NecessaryConditions {
            i: true,
            ii: true,
            iii: true,
            iv: true,
            spectral_gap: f64::INFINITY,
            indeterminate: false,
            sylvester_residual: 0.0,
        });
    }
    let s00 = spectrum(&bt.t00)?;
    let s11 = spectrum(&bt.t11)?;
    let spectral_gap = s00
        .iter()
        .flat_map(|a| s11.iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    let disjoint = spectral_gap > SPECTRAL_GAP_TOL;
    let mut iii = true;
    for lambda in &s00 {
        let ps = point_spectrum_block(bt, *lambda)?;
        let psc = point_spectrum_block(bt, lambda.conj())?;
        if ps.in_sp_t && psc.in_sp_tstar {
            iii = false;
        }
    }
    let (_, sylvester_residual) = solve_sylvester(&bt.t00, &bt.t11, &bt.t01);
    let iv = sylvester_residual > RANGE_TOL * op_norm(&bt.t01);
    Ok(NecessaryConditions {
        i: disjoint,
        ii: !disjoint,
        iii,
        iv,
        spectral_gap,
        indeterminate: !disjoint && spectral_gap > 0.0 && spectral_gap <= SPECTRAL_GAP_TOL,
        sylvester_residual,
    })
}

/// `A`, `B` surjective with `ran A* ∩ ran B* = {0}`.
pub fn dense_range_disjoint(a: &CMatrix, b: &CMatrix) -> Result<bool> {
    if a.ncols() != b.ncols() {
        return Err(Error::Shape(format!(
            "domains differ: {} vs {} columns",
            a.ncols(),
            b.ncols()
        )));
    }
    let ra = rank(a, rank_tol(a));
    let rb = rank(b, rank_tol(b));
    if ra < a.nrows() || rb < b.nrows() {
        return Ok(false);
    }
    let n = a.ncols();
    let mut joint = zeros(n, a.nrows() + b.nrows());
    joint.view_mut((0, 0), (n, a.nrows())).copy_from(&a.adjoint());
    joint.view_mut((0, a.nrows()), (n, b.nrows())).copy_from(&b.adjoint());
    Ok(rank(&joint, rank_tol(&joint)) == ra + rb)
}

/// Summary emitted by the `commutant` subcommand.
#[derive(Debug, Clone, Serialize)]
pub struct CommutantReport {
    pub l: usize,
    pub k: usize,
    pub contraction_flag: bool,
    pub stable_flag: bool,
    pub kernel_dimension: usize,
    pub injective: bool,
    pub basis_norms: Vec<[f64; 2]>,
    pub singular_gap: Option<f64>,
    pub max_residual: f64,
    pub conditions: Option<NecessaryConditions>,
    pub warnings: Vec<String>,
}

pub fn commutant_report(bt: &BlockTriple, rank_tol_rel: f64) -> Result<CommutantReport> {
    let kernel = injectivity_kernel(bt, rank_tol_rel)?;
    let conditions = if bt.stable_flag { Some(necessary_conditions(bt)?) } else { None };
    let mut warnings = kernel.warnings.clone();
    if conditions.is_none() {
        warnings.push("triple is not stable; necessary conditions skipped".into());
    }
    Ok(CommutantReport {
        l: bt.l(),
        k: bt.k(),
        contraction_flag: bt.contraction_flag,
        stable_flag: bt.stable_flag,
        kernel_dimension: kernel.dimension,
        injective: kernel.dimension == 0,
        basis_norms: kernel.basis.iter().map(|(a, b)| [op_norm(a), op_norm(b)]).collect(),
        singular_gap: kernel.singular_gap.is_finite().then_some(kernel.singular_gap),
        max_residual: kernel.max_residual,
        conditions,
        warnings,
    })
}

/// Default relative rank threshold for kernel extraction.
pub const DEFAULT_RANK_TOL: f64 = RANK_TOL;

/// Seeded triple with a stable `T00` of spectral radius below 0.9, a unitary `T11` with
/// separated eigenvalues and a random `T01`; the spectra are disjoint by construction.
pub fn random_mixed_triple(seed: u64, l: usize, k: usize) -> Result<BlockTriple> {
    use crate::matkernel::diag_complex;
    use crate::random::{random_complex, random_stable, random_unitary, rng, separated_phases};
    let mut g = rng(seed);
    let t00 = random_stable(&mut g, l, 0.9);
    let w = random_unitary(&mut g, k);
    let t11 = &w * diag_complex(&separated_phases(&mut g, k, 0.1)) * w.adjoint();
    let t01 = random_complex(&mut g, l, k);
    BlockTriple::new(t00, t01, t11, 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::{c, diag_complex, diag_real, from_real_rows};
    use crate::random::{random_complex, random_unitary, rng};
    use proptest::prelude::*;

    fn triple(t00: CMatrix, t01: CMatrix, t11: CMatrix) -> BlockTriple {
        BlockTriple::new(t00, t01, t11, 1e-9).unwrap()
    }

    fn random_mixed(seed: u64, l: usize, k: usize) -> BlockTriple {
        random_mixed_triple(seed, l, k).unwrap()
    }

    #[test]
    fn assemble_examples() {
        let theta = C64::from_polar(1.0, 0.8);
        let bt = triple(zeros(1, 1), zeros(1, 1), diag_complex(&[theta]));
        assert_eq!(bt.assemble(), diag_complex(&[c(0.0, 0.0), theta]));
        assert!(bt.contraction_flag);
        assert!(bt.stable_flag);

        let u = random_unitary(&mut rng(1), 2);
        let bt = triple(diag_real(&[0.4]), from_real_rows(&[&[0.3, 0.2]]), u);
        assert!(bt.stable_flag);
        // Oracle: powers of T decay on the first block and stay bounded elsewhere.
        let t = bt.assemble();
        let mut p = identity(3);
        for _ in 0..200 {
            p = &t * p;
        }
        assert!(p.column(0).norm() < 1e-60);
        assert!(p.norm() < 10.0);

        let bt = triple(diag_real(&[0.4]), from_real_rows(&[&[5.0, 0.0]]), identity(2));
        assert!(!bt.contraction_flag);
        assert!(BlockTriple::new(zeros(1, 1), zeros(2, 1), identity(1), 1e-9).is_err());
    }

    #[test]
    fn kernel_pure_c1_case_is_empty() {
        let bt = triple(zeros(0, 0), zeros(0, 2), identity(2));
        let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
        assert_eq!(k.dimension, 0);
    }

    #[test]
    fn kernel_disjoint_spectra() {
        let bt = triple(diag_real(&[0.5]), from_real_rows(&[&[1.0, 2.0]]), diag_real(&[1.0, -1.0]));
        let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
        assert!(k.dimension >= 1);
        // Oracle: C00 = 1 with C01 solving 0.5 C01 − C01 diag(1, −1) = T01 explicitly.
        let c01 = from_real_rows(&[&[1.0 / (0.5 - 1.0), 2.0 / (0.5 + 1.0)]]);
        assert!(kernel_residual(&bt, &identity(1), &c01) < 1e-15);
        assert!(k.max_residual < 1e-10);
    }

    #[test]
    fn kernel_scalar_block_dimension_four() {
        let bt = triple(diag_real(&[0.5, 0.5]), zeros(2, 2), diag_real(&[1.0, -1.0]));
        let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
        assert_eq!(k.dimension, 4);
        for (_, c01) in &k.basis {
            assert!(op_norm(c01) < 1e-12);
        }
    }

    #[test]
    fn necessary_conditions_examples() {
        let bt = random_mixed(3, 2, 2);
        let nc = necessary_conditions(&bt).unwrap();
        assert!(nc.i && !nc.ii);
        assert!(!nc.iv);

        let bt = triple(zeros(0, 0), zeros(0, 2), identity(2));
        assert!(necessary_conditions(&bt).unwrap().all());

        let mut g = rng(4);
        let t00 = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        let t11 = random_unitary(&mut g, 2);
        let y = random_complex(&mut g, 2, 2);
        let t01 = &t00 * &y - &y * &t11;
        let nc = necessary_conditions(&triple(t00, t01, t11)).unwrap();
        assert!(!nc.iv);

        let bt = triple(diag_real(&[1.0]), zeros(1, 1), identity(1));
        assert!(matches!(necessary_conditions(&bt), Err(Error::Precondition(_))));
    }

    #[test]
    fn point_spectrum_examples() {
        let u = random_unitary(&mut rng(5), 2);
        let bt = triple(diag_real(&[0.3]), zeros(1, 2), u.clone());
        assert!(point_spectrum_block(&bt, c(0.3, 0.0)).unwrap().in_sp_t);
        assert_eq!(
            point_spectrum_block(&bt, c(0.0, 0.5)).unwrap(),
            PointSpectrum { in_sp_t: false, in_sp_tstar: false }
        );

        let bt = triple(diag_real(&[0.3]), from_real_rows(&[&[0.4, -0.2]]), u);
        let ps = point_spectrum_block(&bt, c(0.3, 0.0)).unwrap();
        assert!(ps.in_sp_tstar);
        // Oracle: direct null space of T* − 0.3.
        let t = bt.assemble();
        let ns = null_space(&(t.adjoint() - identity(3).scale(0.3)), 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!(point_spectrum_block(&bt, c(1.0, 0.0)).is_err());
    }

    #[test]
    fn dense_range_examples() {
        assert!(!dense_range_disjoint(&identity(2), &identity(2)).unwrap());
        let a = from_real_rows(&[&[1.0, 0.0]]);
        let b = from_real_rows(&[&[0.0, 1.0]]);
        assert!(dense_range_disjoint(&a, &b).unwrap());
        let z = from_real_rows(&[&[1.0, 0.0], &[0.0, 0.0]]);
        assert!(!dense_range_disjoint(&z, &b).unwrap());
        assert!(dense_range_disjoint(&a, &identity(3)).is_err());
    }

    #[test]
    fn fifty_mixed_instances_are_not_injective() {
        for seed in 0..50 {
            let bt = random_mixed(100 + seed, 1 + (seed as usize % 2), 1 + (seed as usize % 3));
            assert!(bt.stable_flag);
            let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
            assert!(k.dimension >= 1);
            let (y, res) = solve_sylvester(&bt.t00, &bt.t11, &bt.t01);
            assert!(res < 1e-9);
            assert!(kernel_residual(&bt, &identity(bt.l()), &y) < 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn basis_residuals_small(seed in any::<u64>()) {
            let bt = random_mixed(seed, 2, 2);
            let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
            for (c00, c01) in &k.basis {
                prop_assert!(kernel_residual(&bt, c00, c01) <= 1e-8 * bt.norm_scale());
            }
        }

        #[test]
        fn dimension_unitary_invariant(seed in any::<u64>()) {
            let bt = random_mixed(seed, 2, 2);
            let mut g = rng(seed ^ 0x55);
            let (v, w) = (random_unitary(&mut g, 2), random_unitary(&mut g, 2));
            let moved = triple(
                &v * &bt.t00 * v.adjoint(),
                &v * &bt.t01 * w.adjoint(),
                &w * &bt.t11 * w.adjoint(),
            );
            let a = injectivity_kernel(&bt, RANK_TOL).unwrap();
            let b = injectivity_kernel(&moved, RANK_TOL).unwrap();
            prop_assert_eq!(a.dimension, b.dimension);
        }

        #[test]
        fn injective_implies_all_conditions(seed in any::<u64>(), l in 0usize..3) {
            let bt = random_mixed(seed, l, 2);
            let k = injectivity_kernel(&bt, RANK_TOL).unwrap();
            if k.dimension == 0 {
                prop_assert!(necessary_conditions(&bt).unwrap().all());
            }
        }
    }
}
