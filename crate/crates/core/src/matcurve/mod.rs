//! Jacobi curves in chart coordinates: smooth curves `t ↦ S(t)` of symmetric
//! matrices with value and first three derivatives, sampling on uniform grids,
//! and the finite-difference engine.

mod fd;
mod json;
mod presets;

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{asymmetry, blocks, condition_number, max_abs, quotient_jets, symmetrize, Mat};
use crate::symspace::check_conformal;
use crate::{JacobiError, Result, Tolerances};

pub use fd::{finite_diff, finite_diff_scalar, MIN_FD_SAMPLES};
pub use json::{CurveSpec, ReparamSpec, TableSamples, TransformSpec};
pub use presets::{preset, Preset, PRESET_NAMES};

/// Value and first three derivatives of a curve at one parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveJet {
    pub t: f64,
    pub s: Mat,
    pub s1: Mat,
    pub s2: Mat,
    pub s3: Mat,
}

impl CurveJet {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    /// Jet of `-S`: the same curve seen with the form `-ω`.
    pub fn negated(&self) -> CurveJet {
        CurveJet {
            t: self.t,
            s: -&self.s,
            s1: -&self.s1,
            s2: -&self.s2,
            s3: -&self.s3,
        }
    }
}

/// Uniform sampling grid `t_i = t0 + i h`, `h = (t1 - t0) / (m - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleGrid {
    pub t0: f64,
    pub t1: f64,
    pub m: usize,
}

/// Five-point stencils need two samples of margin on each side of an interior point.
pub const MIN_GRID_SAMPLES: usize = 7;

impl SampleGrid {
    pub fn new(t0: f64, t1: f64, m: usize) -> Result<Self> {
        let g = SampleGrid { t0, t1, m };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < MIN_GRID_SAMPLES {
            return Err(JacobiError::TooFewSamples { got: self.m, need: MIN_GRID_SAMPLES });
        }
        if !(self.t0.is_finite() && self.t1.is_finite() && self.t0 < self.t1) {
            return Err(JacobiError::InvalidInput(format!(
                "grid interval must satisfy t0 < t1, got [{}, {}]",
                self.t0, self.t1
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.t1 - self.t0) / (self.m - 1) as f64
    }

    pub fn t(&self, i: usize) -> f64 {
        if i + 1 == self.m {
            self.t1
        } else {
            self.t0 + i as f64 * self.h()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.t(i)).collect()
    }

    /// Same interval with half the spacing.
    pub fn refined(&self) -> SampleGrid {
        SampleGrid { t0: self.t0, t1: self.t1, m: 2 * self.m - 1 }
    }
}

/// How a curve was specified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveKind {
    Analytic,
    Preset,
    Polynomial,
    Fourier,
    Table,
    Reparametrized,
    Transformed,
}

/// Evaluator of `(S, S', S'', S''')`. Implementations must be pure.
pub trait CurveEval: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn domain(&self) -> (f64, f64);
    fn eval(&self, t: f64) -> Result<[Mat; 4]>;
}

/// A smooth curve of symmetric `n x n` matrices on a parameter interval.
#[derive(Debug, Clone)]
pub struct SymmetricMatrixCurve {
    inner: Arc<dyn CurveEval>,
    kind: CurveKind,
    label: String,
}

type JetFn = dyn Fn(f64) -> [Mat; 4] + Send + Sync;

struct Analytic {
    n: usize,
    domain: (f64, f64),
    f: Box<JetFn>,
}

impl fmt::Debug for Analytic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Analytic").field("n", &self.n).field("domain", &self.domain).finish()
    }
}

impl CurveEval for Analytic {
    fn dim(&self) -> usize {
        self.n
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        Ok((self.f)(t))
    }
}

/// `S(t) = Σ_k C_k t^k` with symmetric coefficient matrices.
#[derive(Debug)]
struct Polynomial {
    domain: (f64, f64),
    coeffs: Vec<Mat>,
}

impl CurveEval for Polynomial {
    fn dim(&self) -> usize {
        self.coeffs[0].nrows()
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let n = self.dim();
        let mut out = [Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n)];
        // Horner on each derivative order
        for (d, slot) in out.iter_mut().enumerate() {
            for k in (d..self.coeffs.len()).rev() {
                let falling: f64 = (0..d).map(|j| (k - j) as f64).product();
                *slot *= t;
                *slot += &self.coeffs[k] * falling;
            }
        }
        Ok(out)
    }
}

/// `S(t) = A_0 + Σ_k (A_k cos kωt + B_k sin kωt)`.
#[derive(Debug)]
struct Fourier {
    domain: (f64, f64),
    omega: f64,
    a0: Mat,
    a: Vec<Mat>,
    b: Vec<Mat>,
}

impl CurveEval for Fourier {
    fn dim(&self) -> usize {
        self.a0.nrows()
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let n = self.dim();
        let mut out = [self.a0.clone(), Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n)];
        for k in 0..self.a.len() {
            let w = (k + 1) as f64 * self.omega;
            let (s, c) = (w * t).sin_cos();
            let (ak, bk) = (&self.a[k], &self.b[k]);
            out[0] += ak * c + bk * s;
            out[1] += (bk * c - ak * s) * w;
            out[2] -= (ak * c + bk * s) * (w * w);
            out[3] += (ak * s - bk * c) * (w * w * w);
        }
        Ok(out)
    }
}

/// Sampled curve on a uniform grid, evaluated by local Lagrange interpolation
/// of each jet component.
#[derive(Debug)]
struct Table {
    t0: f64,
    /// Last sample parameter, kept exactly (`t0 + (m - 1) h` may round past it).
    t1: f64,
    h: f64,
    series: [Vec<Mat>; 4],
}

/// Number of nodes in the local interpolation window of table curves.
const TABLE_WINDOW: usize = 6;

impl CurveEval for Table {
    fn dim(&self) -> usize {
        self.series[0][0].nrows()
    }
    fn domain(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let m = self.series[0].len();
        let x = (t - self.t0) / self.h;
        let nearest = x.round();
        if (x - nearest).abs() < 1e-12 && nearest >= 0.0 && (nearest as usize) < m {
            let i = nearest as usize;
            return Ok(std::array::from_fn(|d| self.series[d][i].clone()));
        }
        let w = TABLE_WINDOW.min(m);
        let start = (x.floor() as isize - (w as isize / 2 - 1)).clamp(0, (m - w) as isize) as usize;
        let nodes: Vec<f64> = (start..start + w).map(|i| i as f64).collect();
        let weights: Vec<f64> = (0..w)
            .map(|j| {
                (0..w)
                    .filter(|&k| k != j)
                    .map(|k| (x - nodes[k]) / (nodes[j] - nodes[k]))
                    .product()
            })
            .collect();
        let n = self.dim();
        Ok(std::array::from_fn(|d| {
            let mut acc = Mat::zeros(n, n);
            for (j, wj) in weights.iter().enumerate() {
                acc += &self.series[d][start + j] * *wj;
            }
            acc
        }))
    }
}

/// A change of parameter `ψ` with its first three derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Reparam {
    /// `ψ(t) = shift + scale t + quad t² + amp sin(freq t + phase)`.
    Smooth { shift: f64, scale: f64, quad: f64, amp: f64, freq: f64, phase: f64 },
    /// `ψ(t) = tan t`.
    Tan,
}

impl Reparam {
    pub fn affine(shift: f64, scale: f64) -> Self {
        Reparam::Smooth { shift, scale, quad: 0.0, amp: 0.0, freq: 0.0, phase: 0.0 }
    }

    /// `(ψ, ψ', ψ'', ψ''')` at `t`.
    pub fn jet(&self, t: f64) -> [f64; 4] {
        match *self {
            Reparam::Smooth { shift, scale, quad, amp, freq, phase } => {
                let (s, c) = (freq * t + phase).sin_cos();
                [
                    shift + scale * t + quad * t * t + amp * s,
                    scale + 2.0 * quad * t + amp * freq * c,
                    2.0 * quad - amp * freq * freq * s,
                    -amp * freq * freq * freq * c,
                ]
            }
            Reparam::Tan => {
                let tn = t.tan();
                let sec2 = 1.0 + tn * tn;
                [tn, sec2, 2.0 * sec2 * tn, 2.0 * sec2 * (sec2 + 2.0 * tn * tn)]
            }
        }
    }
}

#[derive(Debug)]
struct Reparametrized {
    base: SymmetricMatrixCurve,
    psi: Reparam,
    domain: (f64, f64),
}

impl CurveEval for Reparametrized {
    fn dim(&self) -> usize {
        self.base.n()
    }
    fn domain(&self) -> (f64, f64) {
        self.domain
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let [p0, p1, p2, p3] = self.psi.jet(t);
        let [s0, s1, s2, s3] = self.base.eval(p0)?;
        Ok(compose_jets(&[s0, s1, s2, s3], [p1, p2, p3]))
    }
}

/// Jets of `S ∘ ψ` from the jets of `S` at `ψ(t)` and `(ψ', ψ'', ψ''')`.
pub fn compose_jets(s: &[Mat; 4], psi: [f64; 3]) -> [Mat; 4] {
    let [p1, p2, p3] = psi;
    [
        s[0].clone(),
        &s[1] * p1,
        &s[2] * (p1 * p1) + &s[1] * p2,
        &s[3] * (p1 * p1 * p1) + &s[2] * (3.0 * p1 * p2) + &s[1] * p3,
    ]
}

/// Image of a curve under a (conformal) symplectic map acting on chart coordinates.
#[derive(Debug)]
struct Transformed {
    base: SymmetricMatrixCurve,
    g: Mat,
    cond_max: f64,
}

impl CurveEval for Transformed {
    fn dim(&self) -> usize {
        self.base.n()
    }
    fn domain(&self) -> (f64, f64) {
        self.base.domain()
    }
    fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let s = self.base.eval(t)?;
        let (p, q, r, tt) = blocks(&self.g);
        let x = [&p + &q * &s[0], &q * &s[1], &q * &s[2], &q * &s[3]];
        let y = [&r + &tt * &s[0], &tt * &s[1], &tt * &s[2], &tt * &s[3]];
        quotient_jets(&y, &x, self.cond_max).map_err(|cond| JacobiError::NotInChart { cond })
    }
}

fn check_domain(domain: (f64, f64)) -> Result<()> {
    if !(domain.0 < domain.1) || domain.0.is_nan() || domain.1.is_nan() {
        return Err(JacobiError::InvalidInput(format!(
            "domain must satisfy lo < hi, got [{}, {}]",
            domain.0, domain.1
        )));
    }
    Ok(())
}

impl SymmetricMatrixCurve {
    pub fn from_eval(inner: Arc<dyn CurveEval>, kind: CurveKind, label: impl Into<String>) -> Self {
        SymmetricMatrixCurve { inner, kind, label: label.into() }
    }

    /// Curve given by a closure returning `(S, S', S'', S''')`.
    pub fn analytic<F>(n: usize, domain: (f64, f64), f: F) -> Result<Self>
    where
        F: Fn(f64) -> [Mat; 4] + Send + Sync + 'static,
    {
        check_domain(domain)?;
        if n == 0 {
            return Err(JacobiError::InvalidDimension("n must be positive".into()));
        }
        Ok(Self::from_eval(Arc::new(Analytic { n, domain, f: Box::new(f) }), CurveKind::Analytic, "analytic"))
    }

    /// Polynomial with symmetric matrix coefficients in ascending powers of `t`.
    pub fn polynomial(coeffs: Vec<Mat>, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        let n = coeffs.first().map(|c| c.nrows()).ok_or_else(|| {
            JacobiError::InvalidInput("polynomial needs at least one coefficient".into())
        })?;
        if n == 0 || coeffs.iter().any(|c| c.shape() != (n, n)) {
            return Err(JacobiError::InvalidDimension("coefficients must be square of equal size".into()));
        }
        let coeffs = coeffs.iter().map(symmetrize).collect();
        Ok(Self::from_eval(Arc::new(Polynomial { domain, coeffs }), CurveKind::Polynomial, "polynomial"))
    }

    /// Trigonometric polynomial with harmonics `k ω`, `k = 1..=a.len()`.
    pub fn fourier(a0: Mat, a: Vec<Mat>, b: Vec<Mat>, omega: f64, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        let n = a0.nrows();
        if n == 0 || !a0.is_square() || a.len() != b.len() || a.iter().chain(&b).any(|c| c.shape() != (n, n)) {
            return Err(JacobiError::InvalidDimension("Fourier coefficients must be square of equal size".into()));
        }
        let sym = |v: Vec<Mat>| v.iter().map(symmetrize).collect::<Vec<_>>();
        Ok(Self::from_eval(
            Arc::new(Fourier { domain, omega, a0: symmetrize(&a0), a: sym(a), b: sym(b) }),
            CurveKind::Fourier,
            "fourier",
        ))
    }

    /// Curve sampled on a uniform grid. Missing derivative series are obtained
    /// with [`finite_diff`] (`S'` and `S''` from `S`, `S'''` from `S''`).
    pub fn table(
        t: &[f64],
        s: Vec<Mat>,
        derivs: Option<[Vec<Mat>; 3]>,
    ) -> Result<Self> {
        let m = t.len();
        if m < MIN_GRID_SAMPLES || s.len() != m {
            return Err(JacobiError::TooFewSamples { got: m.min(s.len()), need: MIN_GRID_SAMPLES });
        }
        let h = (t[m - 1] - t[0]) / (m - 1) as f64;
        if !(h > 0.0) {
            return Err(JacobiError::InvalidInput("table parameters must increase".into()));
        }
        for (i, ti) in t.iter().enumerate() {
            if (ti - (t[0] + i as f64 * h)).abs() > 1e-9 * h.max(1.0) * (m as f64) {
                return Err(JacobiError::InvalidInput("table parameters must be uniformly spaced".into()));
            }
        }
        let n = s[0].nrows();
        if n == 0 || s.iter().any(|x| x.shape() != (n, n)) {
            return Err(JacobiError::InvalidDimension("table samples must be square of equal size".into()));
        }
        let s: Vec<Mat> = s.iter().map(symmetrize).collect();
        let series = match derivs {
            Some([d1, d2, d3]) => {
                if [&d1, &d2, &d3].iter().any(|d| d.len() != m || d.iter().any(|x| x.shape() != (n, n))) {
                    return Err(JacobiError::InvalidDimension("derivative series do not match samples".into()));
                }
                let sym = |v: Vec<Mat>| v.iter().map(symmetrize).collect::<Vec<_>>();
                [s, sym(d1), sym(d2), sym(d3)]
            }
            None => {
                let d1 = finite_diff(&s, h, 1)?;
                let d2 = finite_diff(&s, h, 2)?;
                let d3 = finite_diff(&d2, h, 1)?;
                [s, d1, d2, d3]
            }
        };
        Ok(Self::from_eval(Arc::new(Table { t0: t[0], t1: t[m - 1], h, series }), CurveKind::Table, "table"))
    }

    /// `t ↦ S(ψ(t))` on the given domain of the new parameter.
    pub fn reparametrized(&self, psi: Reparam, domain: (f64, f64)) -> Result<Self> {
        check_domain(domain)?;
        let label = format!("{} (reparametrized)", self.label);
        Ok(Self::from_eval(
            Arc::new(Reparametrized { base: self.clone(), psi, domain }),
            CurveKind::Reparametrized,
            label,
        ))
    }

    /// `t ↦ g · S(t)` for a conformal symplectic `g`.
    pub fn transformed(&self, g: &Mat, tol: &Tolerances) -> Result<Self> {
        let n = self.n();
        if g.shape() != (2 * n, 2 * n) {
            return Err(JacobiError::InvalidDimension(format!("transform must be {0}x{0}", 2 * n)));
        }
        check_conformal(g, tol)?;
        let label = format!("{} (transformed)", self.label);
        Ok(Self::from_eval(
            Arc::new(Transformed { base: self.clone(), g: g.clone(), cond_max: tol.cond_max }),
            CurveKind::Transformed,
            label,
        ))
    }

    pub(crate) fn with_label(mut self, kind: CurveKind, label: impl Into<String>) -> Self {
        self.kind = kind;
        self.label = label.into();
        self
    }

    pub fn n(&self) -> usize {
        self.inner.dim()
    }

    pub fn domain(&self) -> (f64, f64) {
        self.inner.domain()
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Raw evaluation with a domain check and no symmetry or regularity checks.
    pub fn eval(&self, t: f64) -> Result<[Mat; 4]> {
        let (lo, hi) = self.domain();
        if !(t >= lo && t <= hi) {
            return Err(JacobiError::DomainError { t, lo, hi });
        }
        self.inner.eval(t)
    }

    /// Checked jet: every component symmetric within `sym_tol` (relative to
    /// its size), stored symmetrized, and `S'` invertible within `cond_max`.
    pub fn jet(&self, t: f64, tol: &Tolerances) -> Result<CurveJet> {
        let raw = self.eval(t)?;
        for m in &raw {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(JacobiError::InvalidInput(format!("non-finite curve value at t = {t}")));
            }
            if asymmetry(m) > tol.sym_tol * max_abs(m).max(1.0) {
                return Err(JacobiError::InvalidInput(format!(
                    "curve value is not symmetric at t = {t} (asymmetry {:.3e})",
                    asymmetry(m)
                )));
            }
        }
        let [s, s1, s2, s3] = raw.map(|m| symmetrize(&m));
        if !(condition_number(&s1) <= tol.cond_max) {
            return Err(JacobiError::RegularityFailure { t });
        }
        Ok(CurveJet { t, s, s1, s2, s3 })
    }
}

/// Checked jets on every grid point, evaluated in parallel; the first failing
/// point in grid order is reported.
pub fn sample_curve(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<Vec<CurveJet>> {
    g.validate()?;
    let (lo, hi) = c.domain();
    if g.t0 < lo || g.t1 > hi {
        let t = if g.t0 < lo { g.t0 } else { g.t1 };
        return Err(JacobiError::DomainError { t, lo, hi });
    }
    let out: Vec<Result<CurveJet>> = g.points().into_par_iter().map(|t| c.jet(t, tol)).collect();
    out.into_iter().collect()
}
