//! Ricci curvature of Jacobi curves: matrix and scalar Schwarzian derivatives,
//! the derivative curve, and the change-of-parameter law.

use crate::linalg::{definiteness, gated_solve, max_abs, sorted_symmetric_eigen, symmetrize, Mat};
use crate::matcurve::{CurveJet, SymmetricMatrixCurve};
use crate::symspace::LagrangianChartPoint;
use crate::{JacobiError, Result, Tolerances};

/// Schwarzian `f'''/f' - 3/2 (f''/f')²` of a scalar function from its derivatives.
pub fn scalar_schwarzian(f1: f64, f2: f64, f3: f64) -> Result<f64> {
    if f1 == 0.0 || !f1.is_finite() {
        return Err(JacobiError::SingularParameter);
    }
    let r = f2 / f1;
    Ok(f3 / f1 - 1.5 * r * r)
}

/// `(S')^{-1} S''' - 3/2 ((S')^{-1} S'')²`, computed with linear solves and
/// returned unsymmetrized.
pub fn matrix_schwarzian(j: &CurveJet, cond_max: f64) -> Result<Mat> {
    let n = j.n();
    let mut rhs = Mat::zeros(n, 2 * n);
    rhs.view_mut((0, 0), (n, n)).copy_from(&j.s2);
    rhs.view_mut((0, n), (n, n)).copy_from(&j.s3);
    let sol = gated_solve(&j.s1, &rhs, cond_max).map_err(|_| JacobiError::RegularityFailure { t: j.t })?;
    let a = sol.view((0, 0), (n, n)).into_owned();
    let b = sol.view((0, n), (n, n)).into_owned();
    Ok(b - (&a * &a) * 1.5)
}

/// Ricci data at one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct RicciData {
    pub t: f64,
    /// `𝕊(S)`, the matrix of the Ricci operator in the basis `e + ē S`.
    pub schwarzian: Mat,
    /// Trace of `𝕊(S)`.
    pub ric: f64,
    /// Eigenvalues in ascending order.
    pub eigvals: Vec<f64>,
    /// Eigenvectors as columns with `M^T (σ S') M = I`.
    pub eigvecs: Mat,
    /// `σ = ±1`, the sign making `σ S'` positive definite.
    pub orientation: f64,
    /// Relative asymmetry of `σ S' 𝕊(S)`.
    pub asymmetry: f64,
}

/// Ratio `(λ_max - λ_min) / (1 + max |λ|)` below which a spectrum is treated
/// as a single repeated eigenvalue rather than as nearly colliding ones.
const DEGENERATE_SPREAD: f64 = 1e-10;

/// Relative asymmetry `|A - A^T| / |A|` with a small absolute floor.
pub fn relative_asymmetry(a: &Mat) -> f64 {
    max_abs(&(a - a.transpose())) / (max_abs(a) + 1e-300).max(1e-12)
}

/// Schwarzian plus its spectral decomposition.
///
/// The eigenvectors solve the symmetric-definite problem
/// `(σS' 𝕊) v = λ (σS') v` through the Cholesky factor of `σS'`, so they come
/// out `σS'`-orthonormal directly. A spectrum collapsed to a single value
/// (for instance a flat curve) is accepted; distinct but nearly equal
/// eigenvalues are rejected.
pub fn ricci(j: &CurveJet, tol: &Tolerances) -> Result<RicciData> {
    let n = j.n();
    let orientation = definiteness(&j.s1).ok_or(JacobiError::MonotonicityFailure { t: j.t })?;
    let s1 = &j.s1 * orientation;
    let sch = matrix_schwarzian(j, tol.cond_max)?;
    let a = &s1 * &sch;
    let asym = max_abs(&(&a - a.transpose()));
    if asym > tol.ric_sym_tol * max_abs(&a) + 1e-12 {
        return Err(JacobiError::StructureViolation { t: j.t, what: "S' times Schwarzian is not symmetric", deviation: asym });
    }
    let complex = sch.complex_eigenvalues();
    let scale = 1.0 + complex.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let imag = complex.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()));
    if imag > tol.imag_tol * scale {
        return Err(JacobiError::ComplexEigenvalues { t: j.t, imag });
    }
    let chol = s1.clone().cholesky().ok_or(JacobiError::MonotonicityFailure { t: j.t })?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse().ok_or(JacobiError::RegularityFailure { t: j.t })?;
    let b = &l_inv * symmetrize(&a) * l_inv.transpose();
    let (eigvals, v) = sorted_symmetric_eigen(&b);
    let mut m = l_inv.transpose() * v;
    for k in 0..n {
        let col = m.column(k);
        let lead = col.iter().fold(0.0_f64, |best, x| if x.abs() > best.abs() { *x } else { best });
        if lead < 0.0 {
            m.column_mut(k).neg_mut();
        }
    }
    if n > 1 {
        let lmax = eigvals[n - 1];
        let lmin = eigvals[0];
        let spread = lmax - lmin;
        let mag = 1.0 + lmax.abs().max(lmin.abs());
        if spread > DEGENERATE_SPREAD * mag {
            let gap = eigvals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) / spread;
            if gap < tol.eig_gap_tol {
                return Err(JacobiError::RepeatedEigenvalues { t: j.t, gap });
            }
        }
    }
    Ok(RicciData {
        t: j.t,
        ric: sch.trace(),
        schwarzian: sch,
        eigvals,
        eigvecs: m,
        orientation,
        asymmetry: asym / (max_abs(&a).max(1e-12)),
    })
}

/// Chart coordinate of the derivative curve at the jet's parameter:
/// `S - 2 S' (S'' - r S')^{-1} S'` with `r = ζ'/ζ` when given, `r = 0` otherwise.
pub fn derivative_curve(j: &CurveJet, zeta_ratio: Option<f64>, cond_max: f64) -> Result<LagrangianChartPoint> {
    let r = zeta_ratio.unwrap_or(0.0);
    let d = &j.s2 - &j.s1 * r;
    let x = gated_solve(&d, &j.s1, cond_max).map_err(|_| JacobiError::InflectionPoint { t: j.t })?;
    Ok(LagrangianChartPoint::from_symmetric(&j.s - (&j.s1 * x) * 2.0))
}

/// Independent check of the derivative curve at `tau`: re-chart the curve at
/// `Δ_τ` with origin `Γ(τ)`, where it reads
/// `S̃_t = (S⁰ - S_τ)(S⁰ - S_t)^{-1}(S_t - S_τ)` with `S̃_τ = 0`, and return the
/// largest entry of the central second difference of `S̃` at `tau`.
pub fn verify_derivative_curve(c: &SymmetricMatrixCurve, tau: f64, h: f64, tol: &Tolerances) -> Result<f64> {
    let jt = c.jet(tau, tol)?;
    let s0 = derivative_curve(&jt, None, tol.cond_max)?;
    let b = s0.matrix() - &jt.s;
    let tilde = |t: f64| -> Result<Mat> {
        let st = c.eval(t)?[0].clone();
        let st = symmetrize(&st);
        let rhs = &st - &jt.s;
        let x = gated_solve(&(s0.matrix() - &st), &rhs, tol.cond_max)
            .map_err(|cond| JacobiError::NotTransverse { cond })?;
        Ok(&b * x)
    };
    let plus = tilde(tau + h)?;
    let minus = tilde(tau - h)?;
    Ok(max_abs(&((plus + minus) / (h * h))))
}

/// Predicted Schwarzian of `S ∘ ψ` at `t̄` from the jet of `S` at `ψ(t̄)`:
/// `ψ'² 𝕊(S) + 𝕊(ψ) I`.
pub fn schwarzian_change_of_parameter(j_original: &CurveJet, psi1: f64, psi2: f64, psi3: f64, cond_max: f64) -> Result<Mat> {
    let sp = scalar_schwarzian(psi1, psi2, psi3)?;
    let n = j_original.n();
    Ok(matrix_schwarzian(j_original, cond_max)? * (psi1 * psi1) + Mat::identity(n, n) * sp)
}
