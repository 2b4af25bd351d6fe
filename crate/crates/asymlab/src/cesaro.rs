//! Finite-dimensional asymptotics: power-boundedness, Cesàro asymptotic limits
//! computed by two independent routes, realization of prescribed limits, and
//! identity checks.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matkernel::{
    c, condition_number, diag_complex, diag_real, eig_general, eig_hermitian, identity, inverse,
    op_norm, psd_power, range_basis, rank, require_hermitian, require_square,
    smallest_right_singular, zeros, CMatrix, C64,
};

/// Eigenvalues with `|λ| >= 1 - PERIPHERAL_BAND` count as unimodular.
pub const PERIPHERAL_BAND: f64 = 1e-8;
/// Eigenvalues with `1 - AMBIGUOUS_BAND < |λ| < 1 - PERIPHERAL_BAND` are rejected.
pub const AMBIGUOUS_BAND: f64 = 1e-6;
/// Peripheral eigenvalues closer than this are merged into one phase.
pub const CLUSTER_TOL: f64 = 1e-8;
pub const DEFAULT_TOL: f64 = 1e-3;
pub const DEFAULT_MAX_N: usize = 200_000;
/// Horizon of the empirical power sweep.
pub const DEFAULT_EMPIRICAL_N: usize = 500;
/// Tolerance on the trace identity of a spectrum target.
pub const TRACE_TOL: f64 = 1e-9;

const EIG_TOL: f64 = 1e-10;
const KERNEL_REL: f64 = 1e-6;
const CLASSIFY_CLUSTER_TOL: f64 = 1e-6;
const GEOMETRIC_REL: f64 = 1e-8;
const GRAY_REL: f64 = 1e-5;
const ILL_CONDITIONED: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictSource {
    Spectral,
    Empirical,
    Both,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeripheralEig {
    pub value: C64,
    pub algebraic: usize,
    pub geometric: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PowerBoundedReport {
    pub bounded: bool,
    pub spectral_radius: f64,
    pub peripheral_eigs: Vec<PeripheralEig>,
    /// `max_{1 <= n <= N} ||T^n||`.
    pub empirical_sup: f64,
    pub verdict_source: VerdictSource,
    pub spectral_verdict: Option<bool>,
    pub empirical_verdict: bool,
    pub warnings: Vec<String>,
}

/// Group values whose pairwise chains are within `tol`; returns (mean, size).
fn cluster(values: &[C64], tol: f64) -> Vec<(C64, usize)> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= tol {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                label[a] = b;
            }
        }
    }
    let mut groups: Vec<(usize, C64, usize)> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match groups.iter_mut().find(|g| g.0 == r) {
            Some(g) => {
                g.1 += values[i];
                g.2 += 1;
            }
            None => groups.push((r, values[i], 1)),
        }
    }
    groups.into_iter().map(|(_, s, m)| (s / m as f64, m)).collect()
}

fn empirical_sweep(t: &CMatrix, horizon: usize) -> (f64, bool) {
    let n = t.nrows();
    let half = (horizon / 2).max(1);
    let mut p = identity(n);
    let (mut first, mut second) = (0.0_f64, 0.0_f64);
    for k in 1..=horizon.max(2) {
        p = t * &p;
        let nrm = op_norm(&p);
        if !nrm.is_finite() || nrm > 1e150 {
            return (f64::INFINITY, false);
        }
        if k <= half {
            first = first.max(nrm);
        } else {
            second = second.max(nrm);
        }
    }
    let sup = first.max(second);
    (sup, second <= 1.1 * first + 1e-12)
}

/// Spectral and empirical power-boundedness verdicts.
pub fn classify_power_bounded(t: &CMatrix, tol: f64, horizon: usize) -> Result<PowerBoundedReport> {
    require_square(t, "T")?;
    let eig = eig_general(t, EIG_TOL)?;
    let norm = op_norm(t);
    let radius = eig.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let per: Vec<C64> =
        eig.values.iter().copied().filter(|v| v.norm() >= 1.0 - PERIPHERAL_BAND).collect();
    let mut peripheral_eigs = Vec::new();
    let mut ambiguous = false;
    let thr = GEOMETRIC_REL * (1.0 + norm);
    let gray = GRAY_REL * (1.0 + norm);
    for (mu, alg) in cluster(&per, CLASSIFY_CLUSTER_TOL) {
        let shifted = t - identity(t.nrows()) * mu;
        let sv = crate::matkernel::singular_values(&shifted);
        let tail = &sv[sv.len() - alg..];
        let geometric = tail.iter().filter(|&&s| s <= thr).count();
        if tail.iter().any(|&s| s > thr && s <= gray) {
            ambiguous = true;
        }
        peripheral_eigs.push(PeripheralEig { value: mu, algebraic: alg, geometric });
    }
    let spectral_verdict = if radius > 1.0 + tol {
        Some(false)
    } else if ambiguous {
        None
    } else {
        Some(peripheral_eigs.iter().all(|p| p.geometric == p.algebraic))
    };
    let (empirical_sup, empirical_verdict) = empirical_sweep(t, horizon);
    let mut warnings = Vec::new();
    let (bounded, verdict_source) = match spectral_verdict {
        Some(s) if s == empirical_verdict => (s, VerdictSource::Both),
        Some(s) => {
            warnings.push(format!(
                "spectral verdict {s} disagrees with empirical verdict {empirical_verdict}"
            ));
            (s, VerdictSource::Spectral)
        }
        None => {
            warnings.push("peripheral eigenstructure is numerically ambiguous".into());
            (empirical_verdict, VerdictSource::Empirical)
        }
    };
    Ok(PowerBoundedReport {
        bounded,
        spectral_radius: radius,
        peripheral_eigs,
        empirical_sup,
        verdict_source,
        spectral_verdict,
        empirical_verdict,
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Iterative,
    Spectral,
}

#[derive(Debug, Clone)]
pub struct CesaroLimit {
    pub a: CMatrix,
    pub method: Method,
    pub iterations: usize,
    /// Cauchy gap `||M_n − M_{n'}||` for the iterative route, projector residual for the spectral route.
    pub residual: f64,
    /// Iterative route: `K / n`, the stopping criterion. Spectral route: equal to `residual`.
    pub error_estimate: f64,
    pub warnings: Vec<String>,
}

fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Cesàro means `(1/n) Σ_{j=1}^n T^{*j} T^j` at doubling checkpoints.
///
/// The error `||M_n − A||` is `||R_n|| / n` with `R_n` bounded but oscillating, so a single
/// Cauchy gap can be small by coincidence. The estimate at checkpoint `n` is `K / n` with
/// `K = max m·||M_m − M_{m'}||` over all checkpoints `m <= n` (`m'` the one before `m`).
pub fn cesaro_limit_iterative(t: &CMatrix, tol: f64, max_n: usize) -> Result<CesaroLimit> {
    let n = require_square(t, "T")?;
    let report = classify_power_bounded(t, PERIPHERAL_BAND, DEFAULT_EMPIRICAL_N)?;
    if !report.bounded {
        return Err(Error::NotPowerBounded(format!(
            "spectral radius {:.6}",
            report.spectral_radius
        )));
    }
    let mut p = identity(n);
    let mut next = zeros(n, n);
    let mut sum = zeros(n, n);
    let mut checkpoint = 64.min(max_n.max(1));
    let mut previous: Option<CMatrix> = None;
    let mut scale = 0.0_f64;
    let mut estimate = f64::INFINITY;
    for j in 1..=max_n {
        next.gemm(c(1.0, 0.0), t, &p, c(0.0, 0.0));
        std::mem::swap(&mut p, &mut next);
        sum.gemm_ad(c(1.0, 0.0), &p, &p, c(1.0, 0.0));
        if j == checkpoint {
            let mean = hermitize(&sum.unscale(j as f64));
            if let Some(prev) = &previous {
                let gap = op_norm(&(&mean - prev));
                scale = scale.max(j as f64 * gap);
                estimate = scale / j as f64;
                if estimate <= tol {
                    return Ok(CesaroLimit {
                        a: mean,
                        method: Method::Iterative,
                        iterations: j,
                        residual: gap,
                        error_estimate: estimate,
                        warnings: report.warnings,
                    });
                }
            }
            previous = Some(mean);
            checkpoint = if checkpoint * 2 > max_n && checkpoint < max_n {
                max_n
            } else {
                checkpoint * 2
            };
        }
    }
    Err(Error::NonConvergence(format!(
        "error estimate {estimate:.3e} above {tol:.1e} at n = {max_n}"
    )))
}

/// Spectral projector onto one peripheral eigenvalue cluster.
#[derive(Debug, Clone)]
pub struct PeripheralProjector {
    pub value: C64,
    pub multiplicity: usize,
    /// Oblique projector `R (L* R)^{-1} L*`.
    pub projector: CMatrix,
    /// Orthonormal basis of the eigenspace.
    pub eigenspace: CMatrix,
    pub residual: f64,
    pub condition: f64,
}

/// Projectors onto the unimodular part of the spectrum of a power-bounded matrix.
pub fn peripheral_projectors(t: &CMatrix) -> Result<(Vec<PeripheralProjector>, Vec<String>)> {
    let n = require_square(t, "T")?;
    let eig = eig_general(t, EIG_TOL)?;
    let norm = op_norm(t);
    let mut warnings = Vec::new();
    if eig.condition > ILL_CONDITIONED {
        warnings.push(format!("eigenvector condition {:.3e}", eig.condition));
    }
    let mut per = Vec::new();
    for &v in &eig.values {
        let m = v.norm();
        if m > 1.0 + PERIPHERAL_BAND {
            return Err(Error::NotPowerBounded(format!("eigenvalue of modulus {m:.10}")));
        }
        if m > 1.0 - AMBIGUOUS_BAND && m < 1.0 - PERIPHERAL_BAND {
            return Err(Error::Ambiguous(format!("eigenvalue of modulus {m:.10} near the circle")));
        }
        if m >= 1.0 - PERIPHERAL_BAND {
            per.push(v);
        }
    }
    let kernel_thr = KERNEL_REL * (1.0 + norm);
    let mut out = Vec::new();
    for (mu, m) in cluster(&per, CLUSTER_TOL) {
        let shifted = t - identity(n) * mu;
        let (r, worst_r) = smallest_right_singular(&shifted, m);
        let (l, worst_l) = smallest_right_singular(&shifted.adjoint(), m);
        if worst_r > kernel_thr || worst_l > kernel_thr {
            return Err(Error::NotPowerBounded(format!(
                "peripheral eigenvalue {mu:.6} is not semisimple"
            )));
        }
        let gram = l.adjoint() * &r;
        let condition = condition_number(&gram);
        let ginv = inverse(&gram).map_err(|_| {
            Error::Ambiguous(format!("left and right eigenspaces of {mu:.6} are degenerate"))
        })?;
        if condition > ILL_CONDITIONED {
            warnings.push(format!("projector for {mu:.6} has condition {condition:.3e}"));
        }
        let projector = &r * ginv * l.adjoint();
        let residual = op_norm(&(t * &projector - &projector * mu))
            .max(op_norm(&(&projector * &projector - &projector)));
        out.push(PeripheralProjector {
            value: mu,
            multiplicity: m,
            projector,
            eigenspace: range_basis(&r, 0.0),
            residual,
            condition,
        });
    }
    Ok((out, warnings))
}

/// Cesàro asymptotic limit from the peripheral spectral projectors: `Σ_λ P_λ* P_λ`.
pub fn cesaro_limit_spectral(t: &CMatrix) -> Result<CesaroLimit> {
    let n = require_square(t, "T")?;
    let (projectors, warnings) = peripheral_projectors(t)?;
    let mut a = zeros(n, n);
    let mut residual = 0.0_f64;
    for p in &projectors {
        a += p.projector.adjoint() * &p.projector;
        residual = residual.max(p.residual);
    }
    Ok(CesaroLimit { a: hermitize(&a), method: Method::Spectral, iterations: 0, residual, error_estimate: residual, warnings })
}

/// Both routes side by side.
#[derive(Debug, Clone)]
pub struct RouteComparison {
    pub iterative: CesaroLimit,
    pub spectral: CesaroLimit,
    pub difference: f64,
    pub allowed: f64,
    pub agree: bool,
    pub warnings: Vec<String>,
}

pub fn compare_routes(t: &CMatrix, tol: f64, max_n: usize) -> Result<RouteComparison> {
    let iterative = cesaro_limit_iterative(t, tol, max_n)?;
    let spectral = cesaro_limit_spectral(t)?;
    let difference = op_norm(&(&iterative.a - &spectral.a));
    let allowed = tol.max(10.0 / iterative.iterations as f64);
    let agree = difference <= allowed;
    let mut warnings = Vec::new();
    if !agree {
        warnings.push(format!(
            "routes disagree: difference {difference:.3e} exceeds {allowed:.3e}"
        ));
    }
    Ok(RouteComparison { iterative, spectral, difference, allowed, agree, warnings })
}

/// Nonzero eigenvalues of a positive matrix and the sum of their reciprocals.
#[derive(Debug, Clone, Serialize)]
pub struct TraceLaw {
    pub nonzero: Vec<f64>,
    pub rank: usize,
    pub reciprocal_sum: f64,
}

pub fn trace_law(a: &CMatrix, rel_tol: f64) -> Result<TraceLaw> {
    let eig = eig_hermitian(a)?;
    let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let nonzero: Vec<f64> = eig.values.iter().copied().filter(|&v| v > rel_tol * scale.max(1.0)).collect();
    let reciprocal_sum = nonzero.iter().map(|v| 1.0 / v).sum();
    Ok(TraceLaw { rank: nonzero.len(), nonzero, reciprocal_sum })
}

/// Result of the strong-limit test for `T^{*n} T^n`.
#[derive(Debug, Clone)]
pub struct SotReport {
    pub exists: bool,
    pub limit: Option<CMatrix>,
    /// Largest cross inner product between eigenspaces of distinct unimodular eigenvalues.
    pub max_cross: f64,
    /// `σ(A) ⊆ {0} ∪ [1, ∞)` and `dim ker A >= #{eigenvalues > 1}`.
    pub certified: bool,
    pub kernel_dim: usize,
    pub above_one: usize,
}

pub const SOT_TOL: f64 = 1e-8;

pub fn sot_limit_exists(t: &CMatrix) -> Result<SotReport> {
    let (projectors, _) = peripheral_projectors(t)?;
    let mut max_cross = 0.0_f64;
    for i in 0..projectors.len() {
        for j in (i + 1)..projectors.len() {
            let g = projectors[i].eigenspace.adjoint() * &projectors[j].eigenspace;
            max_cross = max_cross.max(op_norm(&g));
        }
    }
    if max_cross > SOT_TOL {
        return Ok(SotReport {
            exists: false,
            limit: None,
            max_cross,
            certified: false,
            kernel_dim: 0,
            above_one: 0,
        });
    }
    let a = cesaro_limit_spectral(t)?.a;
    let eig = eig_hermitian(&a)?;
    let kernel_dim = eig.values.iter().filter(|&&v| v.abs() <= SOT_TOL).count();
    let above_one = eig.values.iter().filter(|&&v| v > 1.0 + SOT_TOL).count();
    let gap_free = eig.values.iter().all(|&v| v.abs() <= SOT_TOL || v >= 1.0 - SOT_TOL);
    Ok(SotReport {
        exists: true,
        limit: Some(a),
        max_cross,
        certified: gap_free && kernel_dim >= above_one,
        kernel_dim,
        above_one,
    })
}

/// Target eigenvalues `t_1..t_k` of a Cesàro limit and the stable dimension `l`.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SpectrumTarget {
    pub values: Vec<f64>,
    pub stable_dim: usize,
}

impl SpectrumTarget {
    pub fn new(values: Vec<f64>, stable_dim: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Precondition("target needs at least one value".into()));
        }
        if values.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
            return Err(Error::Precondition("target values must be positive".into()));
        }
        let target = SpectrumTarget { values, stable_dim };
        let k = target.values.len() as f64;
        let s = target.reciprocal_sum();
        let tol = TRACE_TOL * k.max(1.0);
        if stable_dim == 0 && (s - k).abs() > tol {
            return Err(Error::Precondition(format!("sum of reciprocals {s} must equal {k}")));
        }
        if stable_dim > 0 && s > k + tol {
            return Err(Error::Precondition(format!("sum of reciprocals {s} exceeds {k}")));
        }
        Ok(target)
    }

    pub fn reciprocal_sum(&self) -> f64 {
        self.values.iter().map(|v| 1.0 / v).sum()
    }
}

/// `T = S diag(λ) S⁻¹` with Cesàro limit `diag(t)`.
#[derive(Debug, Clone)]
pub struct C11Construction {
    pub t: CMatrix,
    pub s: CMatrix,
    pub u: CMatrix,
    pub eigenvalues: Vec<C64>,
    /// `max_k | ||S e_k|| - 1 |`.
    pub column_defect: f64,
}

/// Rotation applied to the roots of unity.
pub const ROOT_ROTATION: f64 = 1.0 / 7.0;

pub fn construct_c11(target: &SpectrumTarget) -> Result<C11Construction> {
    if target.stable_dim != 0 {
        return Err(Error::Precondition("construct_c11 needs stable_dim = 0".into()));
    }
    let target = SpectrumTarget::new(target.values.clone(), 0)?;
    let d = target.values.len();
    let eps = C64::from_polar(1.0, 2.0 * PI / d as f64);
    let root = (d as f64).sqrt();
    let u = CMatrix::from_fn(d, d, |j, k| eps.powu((j * k) as u32) / root);
    let scale: Vec<f64> = target.values.iter().map(|t| 1.0 / t.sqrt()).collect();
    let s = diag_real(&scale) * &u;
    let eigenvalues: Vec<C64> = (0..d)
        .map(|j| eps.powu(j as u32) * C64::from_polar(1.0, ROOT_ROTATION))
        .collect();
    let t = &s * diag_complex(&eigenvalues) * inverse(&s)?;
    let column_defect =
        (0..d).map(|k| (s.column(k).norm() - 1.0).abs()).fold(0.0, f64::max);
    Ok(C11Construction { t, s, u, eigenvalues, column_defect })
}

/// Matrix with stable dimension `l` and Cesàro limit spectrum `{0 (×l)} ∪ t`.
#[derive(Debug, Clone)]
pub struct LStableConstruction {
    pub t: CMatrix,
    /// Unitary with `X* A X = 0_l ⊕ diag(t)`.
    pub x: CMatrix,
    pub c: f64,
    pub inner: C11Construction,
    pub stable_dim: usize,
    /// `||X* A X - 0 ⊕ diag(t)||` for the spectral Cesàro limit `A`.
    pub block_residual: f64,
}

pub fn construct_l_stable(target: &SpectrumTarget) -> Result<LStableConstruction> {
    let l = target.stable_dim;
    if l == 0 {
        return Err(Error::Precondition("construct_l_stable needs stable_dim >= 1".into()));
    }
    let target = SpectrumTarget::new(target.values.clone(), l)?;
    let k = target.values.len();
    let t1 = target.values[0];
    let rest: f64 = target.values[1..].iter().map(|v| 1.0 / v).sum();
    let scale_c = 1.0 / (t1 * (k as f64 - rest));
    if !(scale_c > 0.0 && scale_c.is_finite()) {
        return Err(Error::Precondition(format!("invalid scaling c = {scale_c}")));
    }
    let scale_c = scale_c.min(1.0);
    let mut inner_values = target.values.clone();
    inner_values[0] = scale_c * t1;
    let inner_target = SpectrumTarget { values: inner_values, stable_dim: 0 };
    let inner = construct_c11(&inner_target)?;
    let e = &inner.t;
    let s = (1.0 / scale_c - 1.0).max(0.0).sqrt();
    let mut r = zeros(l, k);
    r[(0, 0)] = c(s, 0.0);
    let d = l + k;
    let mut t = zeros(d, d);
    t.view_mut((l, 0), (k, l)).copy_from(&(e * r.adjoint()));
    t.view_mut((l, l), (k, k)).copy_from(e);

    let left = psd_power(&(identity(l) + &r * r.adjoint()), -0.5)?;
    let right = psd_power(&(identity(k) + r.adjoint() * &r), -0.5)?;
    let mut x = zeros(d, d);
    x.view_mut((0, 0), (l, l)).copy_from(&left);
    x.view_mut((0, l), (l, k)).copy_from(&(&r * &right));
    x.view_mut((l, 0), (k, l)).copy_from(&(-(r.adjoint() * &left)));
    x.view_mut((l, l), (k, k)).copy_from(&right);

    let power = {
        let mut p = identity(d);
        for _ in 0..d {
            p = &t * p;
        }
        p
    };
    let stable_dim = d - rank(&power, 1e-10 * op_norm(&power).max(1.0));
    let a = cesaro_limit_spectral(&t)?.a;
    let mut expected = vec![0.0; l];
    expected.extend_from_slice(&target.values);
    let block_residual = op_norm(&(x.adjoint() * &a * &x - diag_real(&expected)));
    if stable_dim != l {
        return Err(Error::NonConvergence(format!(
            "constructed stable dimension {stable_dim} differs from {l}"
        )));
    }
    Ok(LStableConstruction { t, x, c: scale_c, inner, stable_dim, block_residual })
}

#[derive(Debug, Clone, Serialize)]
pub struct HarmonicReport {
    pub residual: f64,
    pub combined_eigs: Vec<f64>,
}

/// `||A_{T,C}⁻¹ + A_{T*,C}⁻¹ - 2I||` and the eigenvalues of the combined matrix.
pub fn harmonic_identity_residual(t: &CMatrix) -> Result<HarmonicReport> {
    let n = require_square(t, "T")?;
    let a = cesaro_limit_spectral(t)?.a;
    let b = cesaro_limit_spectral(&t.adjoint())?.a;
    let ai = psd_power(&a, -1.0).map_err(|_| Error::Singular("A_{T,C} is not invertible".into()))?;
    let bi =
        psd_power(&b, -1.0).map_err(|_| Error::Singular("A_{T*,C} is not invertible".into()))?;
    let combined = ai + bi;
    let residual = op_norm(&(&combined - identity(n).scale(2.0)));
    Ok(HarmonicReport { residual, combined_eigs: eig_hermitian(&combined)?.values })
}

#[derive(Debug, Clone)]
pub struct ContractionLimit {
    pub a: CMatrix,
    pub idempotency: f64,
    pub adjoint_gap: f64,
    /// `N` of the power certificate `||T^{*N} T^N - A||`.
    pub power_n: u64,
    pub power_residual: f64,
}

/// `A_T = lim T^{*n} T^n` for a contraction, certified idempotent and equal to `A_{T*}`.
pub fn contraction_asymptotic_limit(t: &CMatrix, tol: f64) -> Result<ContractionLimit> {
    require_square(t, "T")?;
    let norm = op_norm(t);
    if norm > 1.0 + tol {
        return Err(Error::NotContraction(norm));
    }
    let a = cesaro_limit_spectral(t)?.a;
    let a_star = cesaro_limit_spectral(&t.adjoint())?.a;
    let idempotency = op_norm(&(&a * &a - &a));
    let adjoint_gap = op_norm(&(&a - &a_star));
    if idempotency > tol || adjoint_gap > tol {
        return Err(Error::NonConvergence(format!(
            "certificate failed: idempotency {idempotency:.3e}, adjoint gap {adjoint_gap:.3e}"
        )));
    }
    let mut p = t.clone();
    let squarings = 20;
    for _ in 0..squarings {
        p = &p * &p;
    }
    let power_residual = op_norm(&(p.adjoint() * &p - &a));
    Ok(ContractionLimit { a, idempotency, adjoint_gap, power_n: 1 << squarings, power_residual })
}

/// `A <= B` in the Löwner order, up to `tol`.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<bool> {
    require_hermitian(a)?;
    require_hermitian(b)?;
    if a.shape() != b.shape() {
        return Err(Error::Shape("Löwner comparison needs equal shapes".into()));
    }
    let e = eig_hermitian(&(b - a))?;
    Ok(e.values.first().map_or(true, |&m| m >= -tol))
}

/// The 3×3 counterexample matrix `S diag(1, -1, i) S⁻¹`.
pub fn three_by_three_counterexample() -> CMatrix {
    let s = CMatrix::from_row_slice(
        3,
        3,
        &[
            c(0.0, 1.0),
            c(2.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(0.0, 1.0),
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(4.0, 0.0),
        ],
    );
    let d = diag_complex(&[c(1.0, 0.0), c(-1.0, 0.0), c(0.0, 1.0)]);
    &s * d * inverse(&s).expect("S is invertible")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matkernel::from_real_rows;
    use crate::random::{random_contraction, random_invertible, random_unitary, rng};
    use proptest::prelude::*;

    fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
        op_norm(&(a - b))
    }

    #[test]
    fn iterative_estimate_covers_oscillation() {
        // Error of the mean is |Σ_{j<=n} e^{ijθ}| ||C|| / n: a lone Cauchy gap can vanish while it does not.
        let mut g = rng(11);
        for k in 1..=12 {
            let theta = 2.0 * PI * k as f64 / 13.0;
            let s = random_invertible(&mut g, 2, 10.0);
            let t = &s * diag_complex(&[c(1.0, 0.0), C64::from_polar(1.0, theta)]) * inverse(&s).unwrap();
            let it = cesaro_limit_iterative(&t, 1e-3, DEFAULT_MAX_N).unwrap();
            let sp = cesaro_limit_spectral(&t).unwrap();
            assert!(it.residual <= it.error_estimate && it.error_estimate <= 1e-3);
            assert!(dist(&it.a, &sp.a) <= 1e-3, "θ = {theta}: {}", dist(&it.a, &sp.a));
        }
    }

    #[test]
    fn jordan_block_is_not_power_bounded() {
        let j = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        let r = classify_power_bounded(&j, 1e-8, 500).unwrap();
        assert!(!r.bounded);
        assert!(!r.empirical_verdict);
        assert_eq!(r.peripheral_eigs[0].algebraic, 2);
        assert_eq!(r.peripheral_eigs[0].geometric, 1);
    }

    #[test]
    fn unitary_is_power_bounded() {
        let u = random_unitary(&mut rng(3), 4);
        let r = classify_power_bounded(&u, 1e-8, 500).unwrap();
        assert!(r.bounded);
        assert_eq!(r.verdict_source, VerdictSource::Both);
        assert!((r.empirical_sup - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_spectrum_is_power_bounded() {
        let mut g = rng(5);
        let s = random_invertible(&mut g, 3, 50.0);
        let t = &s * diag_complex(&[c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.0)]) * inverse(&s).unwrap();
        // Oracle: direct sweep of ||T^n|| to N = 500 stays bounded by the similarity bound.
        let bound = op_norm(&s) * op_norm(&inverse(&s).unwrap());
        let mut p = identity(3);
        for _ in 0..500 {
            p = &t * p;
            assert!(op_norm(&p) <= bound * (1.0 + 1e-9));
        }
        assert!(classify_power_bounded(&t, 1e-8, 500).unwrap().bounded);
    }

    #[test]
    fn iterative_unitary_and_stable() {
        let u = random_unitary(&mut rng(7), 3);
        let lim = cesaro_limit_iterative(&u, 1e-6, 10_000).unwrap();
        assert!(dist(&lim.a, &identity(3)) < 1e-9);
        let b = from_real_rows(&[&[0.5, 0.3], &[0.0, 0.2]]);
        let lim = cesaro_limit_iterative(&b, 1e-4, 10_000).unwrap();
        assert!(op_norm(&lim.a) < 1e-3);
        let j = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(cesaro_limit_iterative(&j, 1e-3, 1000), Err(Error::NotPowerBounded(_))));
    }

    #[test]
    fn iterative_roots_of_unity_against_spectral() {
        let mut g = rng(9);
        let s = crate::random::unit_columns(random_invertible(&mut g, 2, 20.0));
        let w = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let t = &s * diag_complex(&[w, w * w]) * inverse(&s).unwrap();
        let expected = inverse(&(&s * s.adjoint())).unwrap();
        let it = cesaro_limit_iterative(&t, 1e-5, 200_000).unwrap();
        let sp = cesaro_limit_spectral(&t).unwrap();
        assert!(dist(&sp.a, &expected) < 1e-10);
        assert!(dist(&it.a, &expected) < 1e-3);
    }

    #[test]
    fn iterative_reports_nonconvergence() {
        let t = crate::random::random_c11_2x2(&mut rng(29), 20.0);
        assert!(matches!(cesaro_limit_iterative(&t, 1e-12, 200), Err(Error::NonConvergence(_))));
    }

    #[test]
    fn spectral_decoupled_scalars() {
        let t = diag_real(&[0.9, 1.0]);
        let a = cesaro_limit_spectral(&t).unwrap().a;
        assert!(dist(&a, &diag_real(&[0.0, 1.0])) < 1e-14);
    }

    #[test]
    fn spectral_rejects_ambiguous_and_unbounded() {
        assert!(matches!(
            cesaro_limit_spectral(&diag_real(&[1.0 - 1e-7])),
            Err(Error::Ambiguous(_))
        ));
        assert!(matches!(
            cesaro_limit_spectral(&diag_real(&[1.01])),
            Err(Error::NotPowerBounded(_))
        ));
        let j = from_real_rows(&[&[1.0, 1.0], &[0.0, 1.0]]);
        assert!(matches!(cesaro_limit_spectral(&j), Err(Error::NotPowerBounded(_))));
    }

    #[test]
    fn three_by_three_combined_eigenvalues() {
        let rep = harmonic_identity_residual(&three_by_three_counterexample()).unwrap();
        let expected = [1.27178, 2.1285, 2.59972];
        for (g, e) in rep.combined_eigs.iter().zip(expected) {
            assert!((g - e).abs() < 1e-3, "{g} vs {e}");
        }
        assert!(rep.residual > 0.5);
    }

    #[test]
    fn stable_part_does_not_change_limit() {
        let mut g = rng(13);
        let s = random_invertible(&mut g, 3, 20.0);
        let si = inverse(&s).unwrap();
        let mut core = zeros(3, 3);
        core[(0, 0)] = C64::from_polar(1.0, 0.4);
        core[(1, 1)] = C64::from_polar(1.0, 2.5);
        let with_b = {
            let mut m = core.clone();
            m[(2, 2)] = c(0.6, 0.0);
            &s * m * &si
        };
        let without_b = &s * core * &si;
        // Oracle: iterative route on both matrices.
        let a1 = cesaro_limit_iterative(&with_b, 1e-4, 200_000).unwrap().a;
        let a2 = cesaro_limit_iterative(&without_b, 1e-4, 200_000).unwrap().a;
        assert!(dist(&a1, &a2) < 1e-3);
        let s1 = cesaro_limit_spectral(&with_b).unwrap().a;
        let s2 = cesaro_limit_spectral(&without_b).unwrap().a;
        assert!(dist(&s1, &s2) < 1e-8);
    }

    #[test]
    fn sot_examples() {
        let u = random_unitary(&mut rng(17), 3);
        let d = diag_complex(&[c(1.0, 0.0), c(0.0, 1.0), c(0.3, 0.0)]);
        let normal = &u * d * u.adjoint();
        let rep = sot_limit_exists(&normal).unwrap();
        assert!(rep.exists && rep.certified);
        let lim = rep.limit.unwrap();
        assert!(dist(&(&lim * &lim), &lim) < 1e-10);

        let s = from_real_rows(&[&[1.0, 0.6], &[0.0, 0.8]]);
        let t = &s * diag_real(&[1.0, -1.0]) * inverse(&s).unwrap();
        // Oracle: T^{*n} T^n oscillates between even and odd n.
        let even = {
            let p = &t * &t;
            p.adjoint() * p
        };
        let odd = t.adjoint() * &t;
        assert!(dist(&even, &odd) > 1e-2);
        assert!(!sot_limit_exists(&t).unwrap().exists);

        let rep = sot_limit_exists(&diag_real(&[0.5, 0.1])).unwrap();
        assert!(rep.exists);
        assert!(op_norm(&rep.limit.unwrap()) == 0.0);
    }

    #[test]
    fn c11_examples() {
        let target = SpectrumTarget::new(vec![1.0, 1.0], 0).unwrap();
        let k = construct_c11(&target).unwrap();
        assert!(dist(&(k.t.adjoint() * &k.t), &identity(2)) < 1e-12);

        let target = SpectrumTarget::new(vec![2.0, 2.0 / 3.0], 0).unwrap();
        let k = construct_c11(&target).unwrap();
        assert!(k.column_defect < 1e-12);
        assert!(dist(&(&k.s * k.s.adjoint()), &diag_real(&[0.5, 1.5])) < 1e-12);
        let it = cesaro_limit_iterative(&k.t, 1e-4, 200_000).unwrap();
        assert!(dist(&it.a, &diag_real(&[2.0, 2.0 / 3.0])) < 1e-3);

        let target = SpectrumTarget::new(vec![2.0, 2.0, 0.5], 0).unwrap();
        let k = construct_c11(&target).unwrap();
        let it = cesaro_limit_iterative(&k.t, 1e-4, 200_000).unwrap();
        assert!(dist(&it.a, &diag_real(&[2.0, 2.0, 0.5])) < 1e-3);

        assert!(SpectrumTarget::new(vec![1.0, 2.0], 0).is_err());
    }

    #[test]
    fn l_stable_examples() {
        let eq = construct_l_stable(&SpectrumTarget::new(vec![1.0], 1).unwrap()).unwrap();
        assert!((eq.c - 1.0).abs() < 1e-15);
        assert!(op_norm(&eq.t.view((0, 0), (1, 2)).clone_owned()) == 0.0);
        assert!(op_norm(&eq.t.view((1, 0), (1, 1)).clone_owned()) < 1e-15);

        let k = construct_l_stable(&SpectrumTarget::new(vec![4.0], 1).unwrap()).unwrap();
        assert_eq!(k.stable_dim, 1);
        let it = cesaro_limit_iterative(&k.t, 1e-5, 200_000).unwrap();
        let law = trace_law(&it.a, 1e-6).unwrap();
        assert_eq!(law.rank, 1);
        assert!((law.nonzero[0] - 4.0).abs() < 1e-3);
        assert!(k.block_residual < 1e-8);

        let k = construct_l_stable(&SpectrumTarget::new(vec![3.0, 1.5], 2).unwrap()).unwrap();
        let it = cesaro_limit_iterative(&k.t, 1e-5, 200_000).unwrap();
        let e = eig_hermitian(&it.a).unwrap().values;
        let expected = [0.0, 0.0, 1.5, 3.0];
        for (g, x) in e.iter().zip(expected) {
            assert!((g - x).abs() < 1e-3, "{g} vs {x}");
        }
        assert!(SpectrumTarget::new(vec![0.5], 1).is_err());
    }

    #[test]
    fn harmonic_for_unitary() {
        let u = random_unitary(&mut rng(19), 3);
        assert!(harmonic_identity_residual(&u).unwrap().residual < 1e-10);
        assert!(matches!(
            harmonic_identity_residual(&diag_real(&[1.0, 0.5])),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn contraction_examples() {
        let u = random_unitary(&mut rng(23), 3);
        let lim = contraction_asymptotic_limit(&u, 1e-8).unwrap();
        assert!(dist(&lim.a, &identity(3)) < 1e-10);
        let lim = contraction_asymptotic_limit(&diag_real(&[0.5, 1.0]), 1e-8).unwrap();
        assert!(dist(&lim.a, &diag_real(&[0.0, 1.0])) < 1e-14);

        let theta = 0.7;
        let mut t = CMatrix::from_row_slice(
            2,
            2,
            &[c(0.9, 0.0), c(0.1, 0.0), c(0.0, 0.0), C64::from_polar(1.0, theta)],
        );
        t /= c(op_norm(&t), 0.0);
        let lim = contraction_asymptotic_limit(&t, 1e-8).unwrap();
        // Oracle: iterate T^{*n} T^n to n = 10^4.
        let mut p = identity(2);
        for _ in 0..10_000 {
            p = &t * p;
        }
        let direct = p.adjoint() * &p;
        assert!(dist(&direct, &lim.a) < 1e-6);
        assert!(dist(&(&direct * &direct), &direct) < 1e-6);
        assert!(matches!(
            contraction_asymptotic_limit(&diag_real(&[1.5]), 1e-8),
            Err(Error::NotContraction(_))
        ));
    }

    #[test]
    fn loewner_examples() {
        let b = diag_real(&[0.5, 2.0]);
        assert!(loewner_leq(&zeros(2, 2), &b, 1e-12).unwrap());
        assert!(!loewner_leq(&identity(2), &b, 1e-12).unwrap());
        let nh = from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert!(loewner_leq(&nh, &b, 1e-12).is_err());
    }

    fn contraction_with_fixed_vector(seed: u64) -> CMatrix {
        let mut g = rng(seed);
        let w = random_unitary(&mut g, 4);
        let mut core = zeros(4, 4);
        core[(0, 0)] = c(1.0, 0.0);
        core[(1, 1)] = C64::from_polar(1.0, 1.3);
        let x = crate::random::random_complex(&mut g, 2, 2);
        core.view_mut((2, 2), (2, 2)).copy_from(&x.scale(0.9 / op_norm(&x)));
        &w * core * w.adjoint()
    }

    #[test]
    fn commuting_contractions_product_order() {
        for seed in 0..5 {
            let cm = contraction_with_fixed_vector(seed);
            let t1 = (identity(4) + &cm).scale(0.5);
            let t2 = &cm * &cm;
            // Oracle: each limit computed independently.
            let a1 = contraction_asymptotic_limit(&t1, 1e-6).unwrap().a;
            let a12 = contraction_asymptotic_limit(&(&t1 * &t2), 1e-6).unwrap().a;
            assert!(loewner_leq(&a12, &a1, 1e-8).unwrap());
            let a2 = contraction_asymptotic_limit(&t2, 1e-6).unwrap().a;
            let ac = contraction_asymptotic_limit(&cm, 1e-6).unwrap().a;
            assert!(dist(&a2, &ac) < 1e-8);
            let a_c3 = contraction_asymptotic_limit(&(&cm * &t2), 1e-6).unwrap().a;
            assert!(dist(&a_c3, &ac) < 1e-6);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn unitary_conjugation_covariance(seed in any::<u64>()) {
            let mut g = rng(seed);
            let sample = crate::random::random_power_bounded(&mut g, 3, 2, 20.0);
            let w = random_unitary(&mut g, 3);
            let a = cesaro_limit_spectral(&sample.t).unwrap().a;
            let b = cesaro_limit_spectral(&(&w * &sample.t * w.adjoint())).unwrap().a;
            prop_assert!(dist(&b, &(&w * a * w.adjoint())) < 1e-8);
        }

        #[test]
        fn contraction_norm_dichotomy(seed in any::<u64>(), unitary_dim in 0usize..3) {
            let mut g = rng(seed);
            let t = random_contraction(&mut g, 4, unitary_dim);
            let a = contraction_asymptotic_limit(&t, 1e-6).unwrap().a;
            let n = op_norm(&a);
            prop_assert!(n < 1e-8 || (n - 1.0).abs() <= 1e-8);
            prop_assert_eq!(n > 0.5, unitary_dim > 0);
        }

        #[test]
        fn trace_law_holds(seed in any::<u64>(), dim in 2usize..6) {
            let mut g = rng(seed);
            let peripheral = 1 + (seed as usize) % dim;
            let sample = crate::random::random_power_bounded(&mut g, dim, peripheral, 30.0);
            let a = cesaro_limit_spectral(&sample.t).unwrap().a;
            let law = trace_law(&a, 1e-9).unwrap();
            prop_assert!(law.reciprocal_sum <= law.rank as f64 + 1e-6);
            if peripheral == dim {
                prop_assert!((law.reciprocal_sum - dim as f64).abs() <= 1e-6);
            }
        }

        #[test]
        fn c11_round_trip(seed in any::<u64>(), d in 2usize..5) {
            let mut g = rng(seed);
            let mut raw: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut g, 0.3..3.0)).collect();
            let s: f64 = raw.iter().map(|v| 1.0 / v).sum();
            for v in raw.iter_mut() { *v *= s / d as f64; }
            let target = SpectrumTarget::new(raw.clone(), 0).unwrap();
            let k = construct_c11(&target).unwrap();
            let a = cesaro_limit_spectral(&k.t).unwrap().a;
            prop_assert!(dist(&a, &diag_real(&raw)) < 1e-8 * raw.iter().fold(1.0, |m: f64, v| m.max(*v)));
        }
    }
}
