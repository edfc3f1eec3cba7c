//! Flat curves and cycles.
//!
//! A cycle is an affine line `L` in the chart of subspaces transverse to some
//! `Λ̄`, closed up by `Λ̄` itself. Cycles are stored in the chart at their point
//! at infinity: a point `S` of the ambient chart has there the coordinate
//! `(S - S_∞)^{-1}`, and membership becomes collinearity with the line
//! `base + λ direction`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::curvature::matrix_schwarzian;
use crate::linalg::{gated_inverse, max_abs, symmetrize, Mat};
use crate::matcurve::{sample_curve, CurveJet, SampleGrid, SymmetricMatrixCurve};
use crate::symspace::{chart_translate_invert, LagrangianChartPoint, LagrangianFrame};
use crate::{JacobiError, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LineClass {
    Regular,
    Singular,
}

/// Regular iff `|det D| > |D|_2^n / cond_max`, i.e. distinct points of the
/// line `t D` are pairwise transverse.
pub fn line_classify(direction: &Mat, cond_max: f64) -> Result<LineClass> {
    let norm = direction.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(JacobiError::ZeroDirection);
    }
    let n = direction.nrows() as i32;
    let spectral = direction.clone().singular_values().max();
    if direction.determinant().abs() > spectral.powi(n) / cond_max {
        Ok(LineClass::Regular)
    } else {
        Ok(LineClass::Singular)
    }
}

/// Largest `|𝕊(S_t)|` over the grid.
pub fn flatness(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<f64> {
    let jets = sample_curve(c, g, tol)?;
    jets.iter().try_fold(0.0_f64, |acc, j| Ok(acc.max(max_abs(&matrix_schwarzian(j, tol.cond_max)?))))
}

/// `true` iff the Schwarzian vanishes (within `flat_tol`) on the whole grid.
pub fn is_flat(c: &SymmetricMatrixCurve, g: &SampleGrid, flat_tol: f64, tol: &Tolerances) -> Result<bool> {
    Ok(flatness(c, g, tol)? <= flat_tol)
}

/// `S(t) = offset + ((a t + b)/(c t + d)) S1` with `S1` of unit Frobenius
/// norm (first non-negligible entry positive), `offset` Frobenius-orthogonal
/// to `S1`, and `(a, b, c, d)` scaled to unit max-norm with `d >= 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MobiusFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    #[serde(serialize_with = "ser_mat")]
    pub s1: Mat,
    #[serde(serialize_with = "ser_mat")]
    pub offset: Mat,
    /// Largest deviation of the samples from the model, relative to `max(1, |S|)`.
    pub residual: f64,
}

fn ser_mat<S: serde::Serializer>(m: &Mat, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&crate::linalg::to_rows(m), s)
}

impl MobiusFit {
    pub fn factor(&self, t: f64) -> f64 {
        (self.a * t + self.b) / (self.c * t + self.d)
    }

    pub fn eval(&self, t: f64) -> Mat {
        &self.offset + &self.s1 * self.factor(t)
    }
}

fn vectorize(m: &Mat) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Fits a Möbius line to the samples of a (presumably flat) curve.
///
/// The direction is the dominant left singular vector of the differences
/// `S(t_i) - S(t_0)`; the scalar factors are Frobenius projections on it,
/// and `(a, b, c, d)` is the least-squares null vector of
/// `a t_i + b - λ_i (c t_i + d) = 0`.
pub fn mobius_fit(jets: &[CurveJet], fit_tol: f64) -> Result<MobiusFit> {
    if jets.len() < 4 {
        return Err(JacobiError::TooFewSamples { got: jets.len(), need: 4 });
    }
    let n = jets[0].n();
    let s0 = &jets[0].s;
    let diffs = DMatrix::from_columns(&jets[1..].iter().map(|j| vectorize(&(&j.s - s0))).collect::<Vec<_>>());
    let svd = diffs.svd(true, false);
    let k = svd.singular_values.imax();
    if svd.singular_values[k] == 0.0 {
        return Err(JacobiError::NoFit { residual: f64::INFINITY });
    }
    let u = svd.u.expect("requested").column(k).into_owned();
    let mut s1 = symmetrize(&Mat::from_column_slice(n, n, u.as_slice()));
    s1 /= s1.norm();
    // sign: first entry of non-negligible size is positive
    let big = s1.amax();
    if s1.iter().find(|x| x.abs() > 1e-8 * big).is_some_and(|x| *x < 0.0) {
        s1 = -s1;
    }
    let lambdas: Vec<f64> = jets.iter().map(|j| j.s.dot(&s1)).collect();
    let offset = jets.iter().zip(&lambdas).fold(Mat::zeros(n, n), |acc, (j, l)| acc + (&j.s - &s1 * *l))
        / jets.len() as f64;

    // center and scale t for conditioning, then map the coefficients back
    let tm = jets.iter().map(|j| j.t).sum::<f64>() / jets.len() as f64;
    let ts = jets.iter().map(|j| (j.t - tm).abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let rows: Vec<[f64; 4]> = jets
        .iter()
        .zip(&lambdas)
        .map(|(j, l)| {
            let u = (j.t - tm) / ts;
            [u, 1.0, -l * u, -l]
        })
        .collect();
    let a_mat = DMatrix::from_fn(rows.len(), 4, |i, c| rows[i][c]);
    let v = a_mat.svd(false, true).v_t.expect("requested");
    let null = v.row(v.nrows() - 1).into_owned();
    // λ = (α u + β)/(γ u + δ) with u = (t - tm)/ts
    let (al, be, ga, de) = (null[0], null[1], null[2], null[3]);
    let mut coef = [al / ts, be - al * tm / ts, ga / ts, de - ga * tm / ts];
    let scale = coef.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let sign = if coef[3] < 0.0 || (coef[3] == 0.0 && coef[2] < 0.0) { -1.0 } else { 1.0 };
    coef.iter_mut().for_each(|x| *x *= sign / scale);
    let mut fit = MobiusFit { a: coef[0], b: coef[1], c: coef[2], d: coef[3], s1, offset, residual: 0.0 };
    let size = jets.iter().map(|j| max_abs(&j.s)).fold(1.0, f64::max);
    fit.residual = jets.iter().map(|j| max_abs(&(&j.s - fit.eval(j.t)))).fold(0.0, f64::max) / size;
    if !(fit.residual <= fit_tol) {
        return Err(JacobiError::NoFit { residual: fit.residual });
    }
    Ok(fit)
}

/// A cycle `L ∪ {Λ̄}` stored in the chart at its point at infinity `Λ̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub infinity: LagrangianFrame,
    /// Coordinate of `Λ̄` in the ambient chart (the chart reference).
    pub infinity_chart: LagrangianChartPoint,
    /// A point of `L` in the chart at `Λ̄`.
    pub base: LagrangianChartPoint,
    pub direction: Mat,
    pub regular: bool,
}

impl Cycle {
    pub fn n(&self) -> usize {
        self.direction.nrows()
    }

    /// The point `base + λ direction` in the ambient chart, when it lies there.
    pub fn point_at(&self, lambda: f64, cond_max: f64) -> Result<LagrangianChartPoint> {
        let t = self.base.matrix() + &self.direction * lambda;
        let inv = gated_inverse(&t, cond_max).map_err(|cond| JacobiError::NotInChart { cond })?;
        Ok(LagrangianChartPoint::from_symmetric(self.infinity_chart.matrix() + inv))
    }
}

/// The unique cycle through three pairwise transverse chart points, with
/// `Λ₃` at infinity: `base = (L1 - L3)^{-1}`, `direction = (L2 - L3)^{-1} - base`.
pub fn cycle_through(
    l1: &LagrangianChartPoint,
    l2: &LagrangianChartPoint,
    l3: &LagrangianChartPoint,
    tol: &Tolerances,
) -> Result<Cycle> {
    let pts = [l1, l2, l3];
    let n = l1.n();
    if pts.iter().any(|p| p.n() != n) {
        return Err(JacobiError::InvalidDimension("chart points differ in size".into()));
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if gated_inverse(&(pts[i].matrix() - pts[j].matrix()), tol.cond_max).is_err() {
            return Err(JacobiError::NotGeneralPosition { i: i + 1, j: j + 1 });
        }
    }
    let base = chart_translate_invert(l1, l3, tol.cond_max)?;
    let second = chart_translate_invert(l2, l3, tol.cond_max)?;
    let direction = symmetrize(&(second.matrix() - base.matrix()));
    let regular = line_classify(&direction, tol.cond_max)? == LineClass::Regular;
    Ok(Cycle { infinity: LagrangianFrame::from_chart(l3), infinity_chart: l3.clone(), base, direction, regular })
}

/// Query point for [`cycle_contains`].
#[derive(Debug, Clone, PartialEq)]
pub enum CyclePoint {
    Chart(LagrangianChartPoint),
    AtInfinity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Membership {
    pub contained: bool,
    /// Best `λ` with `X ≈ base + λ direction` (absent for the point at infinity).
    pub lambda: Option<f64>,
    /// `|X - base - λ direction| / max(1, |X - base|)`.
    pub residual: f64,
}

/// Collinearity test in the chart at the cycle's infinity.
pub fn cycle_membership(c: &Cycle, p: &CyclePoint, contain_tol: f64, tol: &Tolerances) -> Result<Membership> {
    let CyclePoint::Chart(l) = p else {
        return Ok(Membership { contained: true, lambda: None, residual: 0.0 });
    };
    if l.n() != c.n() {
        return Err(JacobiError::InvalidDimension("query point has the wrong size".into()));
    }
    if max_abs(&(l.matrix() - c.infinity_chart.matrix())) <= contain_tol {
        return Ok(Membership { contained: true, lambda: None, residual: 0.0 });
    }
    let x = chart_translate_invert(l, &c.infinity_chart, tol.cond_max)?.into_matrix() - c.base.matrix();
    let lambda = x.dot(&c.direction) / c.direction.dot(&c.direction);
    let residual = max_abs(&(&x - &c.direction * lambda)) / max_abs(&x).max(1.0);
    Ok(Membership { contained: residual <= contain_tol, lambda: Some(lambda), residual })
}

pub fn cycle_contains(c: &Cycle, p: &CyclePoint, contain_tol: f64, tol: &Tolerances) -> Result<bool> {
    cycle_membership(c, p, contain_tol, tol).map(|m| m.contained)
}
