//! Symplectic linear algebra on `R^{2n}` with the standard form
//! `J = [[0, I], [-I, 0]]`.
//!
//! Lagrangian subspaces transverse to `span(ē)` are stored through their chart
//! coordinate `S`, the symmetric matrix with `Γ = span [I; S]`.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{
    asymmetry, blocks, gated_inverse, gated_solve, max_abs, standard_j, symmetrize, Mat,
};
use crate::{JacobiError, Result, Tolerances};

/// `(R^{2n}, ω)` in its standard basis `(e_1..e_n, ē_1..ē_n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpace {
    n: usize,
    j: Mat,
}

impl SymplecticSpace {
    /// Half-dimension `n >= 2`; for `n = 1` no curve is admissible.
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(JacobiError::InvalidDimension(format!(
                "half-dimension must be at least 2, got {n}"
            )));
        }
        Ok(SymplecticSpace { n, j: standard_j(n) })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn j(&self) -> &Mat {
        &self.j
    }
}

/// Chart coordinate of a Lagrangian subspace, always stored symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianChartPoint {
    s: Mat,
}

impl LagrangianChartPoint {
    /// Accepts `s` when its asymmetry is below `sym_tol * max(1, |s|)`, then
    /// stores `(s + s^T) / 2`.
    pub fn new(s: Mat, sym_tol: f64) -> Result<Self> {
        if !s.is_square() {
            return Err(JacobiError::InvalidDimension(format!(
                "chart point must be square, got {}x{}",
                s.nrows(),
                s.ncols()
            )));
        }
        let scale = max_abs(&s).max(1.0);
        let asym = asymmetry(&s);
        if asym > sym_tol * scale {
            return Err(JacobiError::InvalidInput(format!(
                "chart point is not symmetric (asymmetry {asym:.3e})"
            )));
        }
        Ok(LagrangianChartPoint { s: symmetrize(&s) })
    }

    /// Symmetrizes without checking; for values symmetric by construction.
    pub fn from_symmetric(s: Mat) -> Self {
        LagrangianChartPoint { s: symmetrize(&s) }
    }

    pub fn matrix(&self) -> &Mat {
        &self.s
    }

    pub fn into_matrix(self) -> Mat {
        self.s
    }

    pub fn n(&self) -> usize {
        self.s.nrows()
    }
}

/// Basis `[X; Y]` of a Lagrangian subspace.
#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianFrame {
    x: Mat,
    y: Mat,
}

impl LagrangianFrame {
    pub fn new(x: Mat, y: Mat, tol: &Tolerances) -> Result<Self> {
        let n = x.nrows();
        if !x.is_square() || y.shape() != x.shape() {
            return Err(JacobiError::InvalidDimension(
                "frame blocks must be square and of equal size".into(),
            ));
        }
        let iso = max_abs(&(x.transpose() * &y - y.transpose() * &x));
        let scale = (max_abs(&x) * max_abs(&y)).max(1.0);
        if iso > tol.iso_tol * scale {
            return Err(JacobiError::InvalidInput(format!(
                "frame is not isotropic (residual {iso:.3e})"
            )));
        }
        let mut stacked = Mat::zeros(2 * n, n);
        stacked.view_mut((0, 0), (n, n)).copy_from(&x);
        stacked.view_mut((n, 0), (n, n)).copy_from(&y);
        if stacked.rank(1e-12 * max_abs(&stacked).max(1e-300)) < n {
            return Err(JacobiError::InvalidBasis);
        }
        Ok(LagrangianFrame { x, y })
    }

    /// Canonical frame `[I; S]` of a chart point.
    pub fn from_chart(p: &LagrangianChartPoint) -> Self {
        let n = p.n();
        LagrangianFrame { x: Mat::identity(n, n), y: p.matrix().clone() }
    }

    /// Frame of the vertical subspace `span(ē)`, the point at infinity of the chart.
    pub fn vertical(n: usize) -> Self {
        LagrangianFrame { x: Mat::zeros(n, n), y: Mat::identity(n, n) }
    }

    pub fn x(&self) -> &Mat {
        &self.x
    }

    pub fn y(&self) -> &Mat {
        &self.y
    }
}

/// A symplectic basis `(f_1..f_n, f̄_1..f̄_n)` as the columns of a `2n x 2n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticFrame {
    f: Mat,
}

impl SymplecticFrame {
    pub fn new(space: &SymplecticSpace, f: Mat, tol: f64) -> Result<Self> {
        let (ok, residual) = is_symplectic_frame(space, &f, tol)?;
        if !ok {
            return Err(JacobiError::InvalidTransform { residual });
        }
        Ok(SymplecticFrame { f })
    }

    /// Wraps a matrix whose symplecticity is tracked elsewhere.
    pub fn new_unchecked(f: Mat) -> Self {
        SymplecticFrame { f }
    }

    pub fn matrix(&self) -> &Mat {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.f.nrows() / 2
    }

    /// Blocks `(A, Ā, B, B̄)` with `f = eA + ēB`, `f̄ = eĀ + ēB̄`.
    pub fn blocks(&self) -> (Mat, Mat, Mat, Mat) {
        blocks(&self.f)
    }

    pub fn residual(&self) -> f64 {
        let j = standard_j(self.n());
        max_abs(&(self.f.transpose() * &j * &self.f - j))
    }
}

/// Residual `|F^T J F - J|` (largest entry) and the verdict `residual <= tol`.
pub fn is_symplectic_frame(space: &SymplecticSpace, f: &Mat, tol: f64) -> Result<(bool, f64)> {
    let d = 2 * space.n();
    if f.shape() != (d, d) {
        return Err(JacobiError::InvalidDimension(format!(
            "expected {d}x{d} frame, got {}x{}",
            f.nrows(),
            f.ncols()
        )));
    }
    let residual = max_abs(&(f.transpose() * space.j() * f - space.j()));
    Ok((residual <= tol, residual))
}

/// Chart coordinate `Y X^{-1}` of the subspace spanned by `[X; Y]`.
pub fn lagrangian_from_frame(fr: &LagrangianFrame, cond_max: f64) -> Result<LagrangianChartPoint> {
    // S = Y X^{-1}  <=>  X^T S = Y^T (S symmetric)
    let s_t = gated_solve(&fr.x.transpose(), &fr.y.transpose(), cond_max)
        .map_err(|cond| JacobiError::NotInChart { cond })?;
    Ok(LagrangianChartPoint::from_symmetric(s_t.transpose()))
}

/// Complement `M̄ = (S̄ - S)^{-1} (M^T)^{-1}` making
/// `((e + ēS)M, (e + ēS̄)M̄)` a symplectic basis.
pub fn complete_symplectic_basis(
    m: &Mat,
    s: &LagrangianChartPoint,
    sbar: &LagrangianChartPoint,
    cond_max: f64,
) -> Result<Mat> {
    let diff = sbar.matrix() - s.matrix();
    let diff_inv =
        gated_inverse(&diff, cond_max).map_err(|cond| JacobiError::NotTransverse { cond })?;
    let mt_inv = gated_inverse(&m.transpose(), cond_max).map_err(|_| JacobiError::InvalidBasis)?;
    Ok(diff_inv * mt_inv)
}

/// Frame matrix `[[M, M̄], [S M, S̄ M̄]]`.
pub fn frame_from_chart_pair(
    m: &Mat,
    s: &LagrangianChartPoint,
    mbar: &Mat,
    sbar: &LagrangianChartPoint,
) -> Mat {
    crate::linalg::from_blocks(m, mbar, &(s.matrix() * m), &(sbar.matrix() * mbar))
}

/// `(S - S_ref)^{-1}`: the coordinate of the same subspace in the chart of
/// subspaces transverse to `S_ref`. The inverse map is `S_ref + T^{-1}`.
pub fn chart_translate_invert(
    s: &LagrangianChartPoint,
    s_ref: &LagrangianChartPoint,
    cond_max: f64,
) -> Result<LagrangianChartPoint> {
    let diff = s.matrix() - s_ref.matrix();
    let inv = gated_inverse(&diff, cond_max).map_err(|cond| JacobiError::NotTransverse { cond })?;
    Ok(LagrangianChartPoint::from_symmetric(inv))
}

/// Inverse of [`chart_translate_invert`]: `S_ref + T^{-1}`.
pub fn chart_untranslate(
    t: &LagrangianChartPoint,
    s_ref: &LagrangianChartPoint,
    cond_max: f64,
) -> Result<LagrangianChartPoint> {
    let inv =
        gated_inverse(t.matrix(), cond_max).map_err(|cond| JacobiError::NotTransverse { cond })?;
    Ok(LagrangianChartPoint::from_symmetric(s_ref.matrix() + inv))
}

/// Conformal factor `λ` with `g^T J g = λ J`, and the residual of that identity.
pub fn conformal_factor(g: &Mat) -> (f64, f64) {
    let n = g.nrows() / 2;
    let j = standard_j(n);
    let gjg = g.transpose() * &j * g;
    let lambda = gjg[(0, n)];
    let residual = max_abs(&(gjg - &j * lambda));
    (lambda, residual)
}

fn fractional_linear(g: &Mat, s: &Mat, cond_max: f64) -> Result<LagrangianChartPoint> {
    let (p, q, r, t) = blocks(g);
    let x = p + &q * s;
    let y = r + &t * s;
    // Y X^{-1} = (X^{-T} Y^T)^T
    let res = gated_solve(&x.transpose(), &y.transpose(), cond_max)
        .map_err(|cond| JacobiError::NotInChart { cond })?;
    Ok(LagrangianChartPoint::from_symmetric(res.transpose()))
}

fn check_square_2n(g: &Mat, n: usize) -> Result<()> {
    if g.shape() != (2 * n, 2 * n) {
        return Err(JacobiError::InvalidDimension(format!(
            "transform must be {}x{}, got {}x{}",
            2 * n,
            2 * n,
            g.nrows(),
            g.ncols()
        )));
    }
    Ok(())
}

/// Action `S ↦ (R + T S)(P + Q S)^{-1}` of a symplectic `g = [[P, Q], [R, T]]`.
pub fn apply_symplectic(
    g: &Mat,
    s: &LagrangianChartPoint,
    tol: &Tolerances,
) -> Result<LagrangianChartPoint> {
    check_square_2n(g, s.n())?;
    let (lambda, residual) = conformal_factor(g);
    let dev = residual.max((lambda - 1.0).abs());
    if dev > tol.frame_tol * max_abs(g).max(1.0).powi(2) {
        return Err(JacobiError::InvalidTransform { residual: dev });
    }
    fractional_linear(g, s.matrix(), tol.cond_max)
}

/// Same action for any conformal symplectic `g` (`g^T J g = λ J`, `λ ≠ 0`).
pub fn apply_conformal(
    g: &Mat,
    s: &LagrangianChartPoint,
    tol: &Tolerances,
) -> Result<LagrangianChartPoint> {
    check_square_2n(g, s.n())?;
    check_conformal(g, tol)?;
    fractional_linear(g, s.matrix(), tol.cond_max)
}

pub(crate) fn check_conformal(g: &Mat, tol: &Tolerances) -> Result<f64> {
    let (lambda, residual) = conformal_factor(g);
    let scale = max_abs(g).max(1.0).powi(2);
    if lambda == 0.0 || residual > tol.frame_tol * scale {
        return Err(JacobiError::InvalidTransform { residual });
    }
    Ok(lambda)
}

/// Random Hamiltonian matrix `H = J A` with `A` symmetric, entries of `A`
/// uniform in `[-amplitude, amplitude]`; satisfies `H^T J + J H = 0`.
pub fn random_hamiltonian<R: Rng>(n: usize, rng: &mut R, amplitude: f64) -> Mat {
    let mut a = Mat::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for j in i..2 * n {
            let v = rng.random_range(-amplitude..=amplitude);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    standard_j(n) * a
}

/// Scaling section `σ(s) = diag(s I, I)`; `σ(s)^T J σ(s) = s J`.
pub fn scaling_section(n: usize, s: f64) -> Mat {
    let mut d = Mat::identity(2 * n, 2 * n);
    for i in 0..n {
        d[(i, i)] = s;
    }
    d
}

/// A conformal symplectic transform as the pair `(g, s)` with `g` symplectic;
/// it acts as `g σ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalTransform {
    pub symplectic: Mat,
    pub scale: f64,
}

/// Amplitude of the random Hamiltonian generator used by [`random_csp`].
pub const RANDOM_CSP_AMPLITUDE: f64 = 0.25;

impl ConformalTransform {
    pub fn random(n: usize, seed: u64, scale: f64) -> Result<Self> {
        if scale == 0.0 || !scale.is_finite() {
            return Err(JacobiError::InvalidInput("scale must be nonzero".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(n, &mut rng, RANDOM_CSP_AMPLITUDE);
        Ok(ConformalTransform { symplectic: h.exp(), scale })
    }

    pub fn matrix(&self) -> Mat {
        let n = self.symplectic.nrows() / 2;
        &self.symplectic * scaling_section(n, self.scale)
    }

    pub fn apply(&self, s: &LagrangianChartPoint, tol: &Tolerances) -> Result<LagrangianChartPoint> {
        let scaled = LagrangianChartPoint::from_symmetric(s.matrix() / self.scale);
        apply_symplectic(&self.symplectic, &scaled, tol)
    }
}

/// Pseudo-random conformal symplectic matrix `exp(H) σ(scale)`.
pub fn random_csp(space: &SymplecticSpace, seed: u64, scale: f64) -> Result<Mat> {
    Ok(ConformalTransform::random(space.n(), seed, scale)?.matrix())
}

/// Identity-sized helper used by tests and presets.
pub fn identity(n: usize) -> Mat {
    DMatrix::identity(n, n)
}
