//! Symplectic Frenet frames, Cartan matrices and reduced Cartan invariants.
//!
//! Frames are computed in the curve's own parameter `t` and normalized for the
//! geometric arc parameter `τ` (`dτ = ζ dt`). With `M̃` the `S'`-orthonormal
//! eigenvectors of `𝕊(S)` and `r = ζ'/ζ`:
//!
//! * `f = [M; S M]` with `M = ζ^{1/2} M̃`,
//! * `f̄ = [N; S N + ζ^{-1/2} S' M̃]` with `N = -½ ζ^{-1/2} (S')^{-1}(S'' - r S') M̃`,
//!
//! which spans the derivative curve without inverting `S''`. The Cartan matrix
//! `C` of `dF/dτ = F C` has the blocks (with `X = M̃^{-1} dM̃/dt`)
//!
//! * `C11 = (½ M̃^{-1}(S')^{-1}S'' M̃ + X) / ζ`,
//! * `C12 = -½ M̃^{-1} (𝕊 - 𝕊(φ) Id) M̃ / ζ²`,
//! * `C21 = M̃^T S' M̃`,
//! * `C22 = (-½ M̃^T S'' (S')^{-1} M̃^{-T} - X^T) / ζ`,
//!
//! and reduces to `[[Σ, K], [Id, Σ]]` with `Σ = (X - X^T)/(2ζ)` and
//! `K = -½ diag(k)`.

use serde::Serialize;

use crate::curvature::RicciData;
use crate::geom::ArcData;
use crate::interp::lagrange_matrix;
use crate::linalg::{from_blocks, gated_inverse, max_abs, skew_part, standard_j, symmetrize, to_rows, Mat};
use crate::matcurve::{finite_diff, CurveJet};
use crate::numfmt::sci12;
use crate::symspace::SymplecticFrame;
use crate::{JacobiError, Result, Tolerances};

/// Tolerance on the block structure of computed Cartan matrices, relative to
/// `max(1, |C|)`.
pub const STRUCTURE_TOL: f64 = 1e-6;

/// Frame symplecticity bound checked at every sample.
pub const FRAME_RESIDUAL_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct FrenetFrame {
    pub t: Vec<f64>,
    /// `σ = ±1`; frames are built for the oriented curve `σ S`, which has
    /// positive definite velocity.
    pub orientation: f64,
    /// Eigenvectors normalized against `σ S'` in the parameter `t`.
    pub m_tilde: Vec<Mat>,
    /// `M = ζ^{1/2} M̃`, normalized for the arc parameter.
    pub m: Vec<Mat>,
    pub mbar: Vec<Mat>,
    /// Chart coordinate of the derivative curve where `M̄` is invertible.
    pub s0: Vec<Option<Mat>>,
    /// Frenet bases of the oriented curve.
    pub frames: Vec<SymplecticFrame>,
    pub residual: Vec<f64>,
}

impl FrenetFrame {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    pub fn n(&self) -> usize {
        self.m[0].nrows()
    }

    /// Frame at sample `i` with `(f_j, f̄_j)` multiplied by `signs[j]`.
    pub fn frame_with_signs(&self, i: usize, signs: &[f64]) -> Mat {
        let n = self.n();
        let mut f = self.frames[i].matrix().clone();
        for (j, s) in signs.iter().enumerate() {
            if *s < 0.0 {
                f.column_mut(j).neg_mut();
                f.column_mut(n + j).neg_mut();
            }
        }
        f
    }

    /// Frame at sample `i` in the original coordinates: `diag(I, σI) F`.
    /// Satisfies `F^T J F = σ J`.
    pub fn frame_in_original(&self, i: usize) -> Mat {
        let n = self.n();
        let mut f = self.frames[i].matrix().clone();
        if self.orientation < 0.0 {
            f.rows_mut(n, n).neg_mut();
        }
        f
    }
}

fn oriented(j: &CurveJet, sigma: f64) -> CurveJet {
    if sigma < 0.0 {
        j.negated()
    } else {
        j.clone()
    }
}

/// Symplectic Frenet frames along the grid.
///
/// Eigenvector columns keep the ascending-eigenvalue order; their signs are
/// fixed at the first sample (largest component positive) and then carried by
/// continuity. A column that matches a different column of the previous
/// sample better than its own is reported as an eigenvalue crossing.
pub fn frenet_frame(jets: &[CurveJet], ricci: &[RicciData], arc: &ArcData, tol: &Tolerances) -> Result<FrenetFrame> {
    let m = jets.len();
    if ricci.len() != m || arc.len() != m {
        return Err(JacobiError::GridMismatch("jets, Ricci data and arc data differ in length".into()));
    }
    let sigma = ricci[0].orientation;
    let n = jets[0].n();
    let mut ff = FrenetFrame {
        t: arc.t.clone(),
        orientation: sigma,
        m_tilde: Vec::with_capacity(m),
        m: Vec::with_capacity(m),
        mbar: Vec::with_capacity(m),
        s0: Vec::with_capacity(m),
        frames: Vec::with_capacity(m),
        residual: Vec::with_capacity(m),
    };
    let j_std = standard_j(n);
    for i in 0..m {
        let jet = oriented(&jets[i], sigma);
        if ricci[i].orientation != sigma {
            return Err(JacobiError::MonotonicityFailure { t: jet.t });
        }
        let mut mt = ricci[i].eigvecs.clone();
        if let Some(prev) = ff.m_tilde.last() {
            let g = mt.transpose() * &jet.s1 * prev;
            for c in 0..n {
                let own = g[(c, c)].abs();
                let other = (0..n).filter(|&k| k != c).map(|k| g[(c, k)].abs()).fold(0.0, f64::max);
                if own <= other {
                    return Err(JacobiError::EigenCrossing { t: jet.t });
                }
                if g[(c, c)] < 0.0 {
                    mt.column_mut(c).neg_mut();
                }
            }
        }
        let zeta = arc.zeta[i];
        let r = arc.zeta_ratio(i);
        let sq = zeta.sqrt();
        let s1_inv = gated_inverse(&jet.s1, tol.cond_max).map_err(|_| JacobiError::RegularityFailure { t: jet.t })?;
        let mm = &mt * sq;
        let mbar = (&s1_inv * (&jet.s2 - &jet.s1 * r) * &mt) * (-0.5 / sq);
        let bottom = &jet.s * &mbar + (&jet.s1 * &mt) / sq;
        let f = from_blocks(&mm, &mbar, &(&jet.s * &mm), &bottom);
        let residual = max_abs(&(f.transpose() * &j_std * &f - &j_std));
        if residual > FRAME_RESIDUAL_TOL {
            return Err(JacobiError::StructureViolation { t: jet.t, what: "Frenet frame is not symplectic", deviation: residual });
        }
        let s0 = gated_inverse(&mbar, tol.cond_max).ok().map(|inv| symmetrize(&(&bottom * inv)) * sigma);
        ff.m_tilde.push(mt);
        ff.m.push(mm);
        ff.mbar.push(mbar);
        ff.s0.push(s0);
        ff.frames.push(SymplecticFrame::new_unchecked(f));
        ff.residual.push(residual);
    }
    Ok(ff)
}

/// Full `2n x 2n` Cartan matrix at every sample, with `M̃'` obtained by
/// differencing the sign-continuous eigenvector series.
pub fn cartan_matrix(ff: &FrenetFrame, jets: &[CurveJet], ricci: &[RicciData], arc: &ArcData, tol: &Tolerances) -> Result<Vec<Mat>> {
    let n = ff.n();
    let dm = finite_diff(&ff.m_tilde, arc.h, 1)?;
    let id = Mat::identity(n, n);
    (0..ff.len())
        .map(|i| {
            let jet = oriented(&jets[i], ff.orientation);
            let mt = &ff.m_tilde[i];
            let zeta = arc.zeta[i];
            let mt_inv = gated_inverse(mt, tol.cond_max).map_err(|_| JacobiError::InvalidBasis)?;
            let s1_inv =
                gated_inverse(&jet.s1, tol.cond_max).map_err(|_| JacobiError::RegularityFailure { t: jet.t })?;
            // M̃ᵀS′M̃ = Id fixes sym(X) = -M̃ᵀS″M̃/2 exactly; only skew(X) is differenced
            let x = skew_part(&(&mt_inv * &dm[i])) - mt.transpose() * &jet.s2 * mt * 0.5;
            let c11 = (&mt_inv * &s1_inv * &jet.s2 * mt * 0.5 + &x) / zeta;
            let c22 = (-(mt.transpose() * &jet.s2 * &s1_inv * mt_inv.transpose()) * 0.5 - x.transpose()) / zeta;
            let c12 = &mt_inv * (&ricci[i].schwarzian - &id * arc.sphi[i]) * mt * (-0.5 / (zeta * zeta));
            let c21 = mt.transpose() * &jet.s1 * mt;
            Ok(from_blocks(&c11, &c12, &c21, &c22))
        })
        .collect()
}

/// Reduced Cartan matrix `[[Σ, K], [Id, Σ]]` along the grid together with the
/// arc data needed to compare curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedCartan {
    pub t: Vec<f64>,
    pub arclength: Vec<f64>,
    /// `ds = ζ dt`.
    pub zeta: Vec<f64>,
    /// Skew-symmetric, after sign canonicalization.
    pub sigma: Vec<Mat>,
    /// Diagonal with entries `-k_i / 2`.
    pub kblock: Vec<Mat>,
    /// `ε` applied to the frame vectors by canonicalization (`ε_1 = +1`).
    pub signs: Vec<f64>,
}

impl ReducedCartan {
    pub fn n(&self) -> usize {
        self.kblock[0].nrows()
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Absolute curvatures `d_i = -2 K_ii` at sample `i`.
    pub fn curvatures(&self, i: usize) -> Vec<f64> {
        self.kblock[i].diagonal().iter().map(|v| -2.0 * v).collect()
    }

    /// Largest `|∏ |d_i - d̄| - 1|` over the grid.
    pub fn normalization_defect(&self) -> f64 {
        (0..self.len())
            .map(|i| {
                let d = self.curvatures(i);
                let mean = d.iter().sum::<f64>() / d.len() as f64;
                (d.iter().map(|x| (x - mean).abs()).product::<f64>() - 1.0).abs()
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,arclength,zeta,k_1..k_n,sigma_ij` (upper triangle,
    /// row-major) and `%.12e` numbers.
    pub fn to_csv(&self) -> String {
        let n = self.n();
        let mut header = vec!["t".to_string(), "arclength".into(), "zeta".into()];
        header.extend((1..=n).map(|i| format!("k_{i}")));
        for i in 0..n {
            for j in i + 1..n {
                header.push(format!("sigma_{}{}", i + 1, j + 1));
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in 0..self.len() {
            let mut row = vec![sci12(self.t[r]), sci12(self.arclength[r]), sci12(self.zeta[r])];
            row.extend(self.curvatures(r).into_iter().map(sci12));
            for i in 0..n {
                for j in i + 1..n {
                    row.push(sci12(self.sigma[r][(i, j)]));
                }
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// JSON value with full matrices as nested rows.
    pub fn to_json(&self) -> serde_json::Value {
        #[derive(Serialize)]
        struct Out<'a> {
            n: usize,
            t: &'a [f64],
            arclength: &'a [f64],
            zeta: &'a [f64],
            signs: &'a [f64],
            k: Vec<Vec<f64>>,
            #[serde(rename = "Sigma")]
            sigma: Vec<Vec<Vec<f64>>>,
            #[serde(rename = "K")]
            kblock: Vec<Vec<Vec<f64>>>,
        }
        serde_json::to_value(Out {
            n: self.n(),
            t: &self.t,
            arclength: &self.arclength,
            zeta: &self.zeta,
            signs: &self.signs,
            k: (0..self.len()).map(|i| self.curvatures(i)).collect(),
            sigma: self.sigma.iter().map(to_rows).collect(),
            kblock: self.kblock.iter().map(to_rows).collect(),
        })
        .expect("reduced Cartan serializes")
    }
}

/// Union–find over indices carrying the parity of `ε_i ε_root`.
struct ParityForest {
    parent: Vec<usize>,
    parity: Vec<f64>,
}

impl ParityForest {
    fn new(n: usize) -> Self {
        ParityForest { parent: (0..n).collect(), parity: vec![1.0; n] }
    }

    fn find(&mut self, i: usize) -> (usize, f64) {
        if self.parent[i] == i {
            return (i, 1.0);
        }
        let (root, p) = self.find(self.parent[i]);
        self.parent[i] = root;
        self.parity[i] *= p;
        (root, self.parity[i])
    }

    /// Records `ε_i ε_j = rel` unless `i` and `j` are already linked.
    fn link(&mut self, i: usize, j: usize, rel: f64) {
        let (ri, pi) = self.find(i);
        let (rj, pj) = self.find(j);
        if ri != rj {
            self.parent[rj] = ri;
            self.parity[rj] = rel * pi * pj;
        }
    }
}

/// Sign choice `ε ∈ {±1}^n`, `ε_1 = +1`: pairs `(i, j)`, `i < j`, are visited in
/// row-major order and the first sample with `|Σ_ij| > sign_tol` fixes
/// `ε_i ε_j` so that the conjugated entry is positive, unless the pair's
/// relative sign is already determined.
pub fn canonical_signs(sigma: &[Mat], sign_tol: f64) -> Vec<f64> {
    let n = sigma.first().map_or(0, |s| s.nrows());
    let mut forest = ParityForest::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if let Some(s) = sigma.iter().find(|s| s[(i, j)].abs() > sign_tol) {
                forest.link(i, j, s[(i, j)].signum());
            }
        }
    }
    let mut eps: Vec<f64> = (0..n).map(|i| forest.find(i).1).collect();
    if eps.first().is_some_and(|e| *e < 0.0) {
        eps.iter_mut().for_each(|e| *e = -*e);
    }
    eps
}

pub(crate) fn conjugate(m: &Mat, eps: &[f64]) -> Mat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| eps[i] * eps[j] * m[(i, j)])
}

/// Extracts and canonicalizes `(Σ, K)` from full Cartan matrices.
pub fn reduced_invariants(c_series: &[Mat], arc: &ArcData, tol: &Tolerances) -> Result<ReducedCartan> {
    if c_series.len() != arc.len() {
        return Err(JacobiError::GridMismatch("Cartan series and arc data differ in length".into()));
    }
    let n = c_series[0].nrows() / 2;
    let id = Mat::identity(n, n);
    let mut sigma = Vec::with_capacity(c_series.len());
    let mut kblock = Vec::with_capacity(c_series.len());
    for (i, c) in c_series.iter().enumerate() {
        let t = arc.t[i];
        let (c11, c12, c21, c22) = crate::linalg::blocks(c);
        let bound = STRUCTURE_TOL * max_abs(c).max(1.0);
        let check = |dev: f64, what: &'static str| -> Result<()> {
            if dev > bound {
                Err(JacobiError::StructureViolation { t, what, deviation: dev })
            } else {
                Ok(())
            }
        };
        check(max_abs(&(&c21 - &id)), "lower-left block differs from the identity")?;
        check(max_abs(&(&c11 - &c22)), "diagonal blocks differ")?;
        check(max_abs(&symmetrize(&c11)), "diagonal block is not skew-symmetric")?;
        let off = Mat::from_fn(n, n, |a, b| if a == b { 0.0 } else { c12[(a, b)] });
        check(max_abs(&off), "upper-right block is not diagonal")?;
        sigma.push(skew_part(&((&c11 + &c22) * 0.5)));
        kblock.push(Mat::from_diagonal(&c12.diagonal()));
    }
    let signs = canonical_signs(&sigma, tol.sign_tol);
    let sigma = sigma.iter().map(|s| conjugate(s, &signs)).collect();
    Ok(ReducedCartan {
        t: arc.t.clone(),
        arclength: arc.arclength.clone(),
        zeta: arc.zeta.clone(),
        sigma,
        kblock,
        signs,
    })
}

/// Outcome of [`equivalent_reduced`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Equivalence {
    pub equivalent: bool,
    /// Witnessing (or best) sign pattern `ε` for `b`.
    pub signs: Vec<f64>,
    /// Sup-norm distance of the `K` series.
    pub k_deviation: f64,
    /// Sup-norm distance of `Σ_a` and `ε Σ_b ε` for the best `ε`.
    pub sigma_deviation: f64,
    /// Arclength range `[0, s_max]` on which the curves were compared.
    pub compared_length: f64,
    pub samples: usize,
}

/// Compares reduced Cartan matrices on `a`'s arclength grid.
///
/// Both series start at arclength zero; `b` is resampled (local cubic
/// interpolation in arclength) at the samples of `a` that lie within `b`'s
/// length. Every sign pattern with `ε_1 = +1` is tried.
pub fn equivalent_reduced(a: &ReducedCartan, b: &ReducedCartan, tol: f64) -> Result<Equivalence> {
    if a.is_empty() || b.is_empty() {
        return Err(JacobiError::GridMismatch("empty invariant series".into()));
    }
    let n = a.n();
    if b.n() != n {
        return Err(JacobiError::GridMismatch(format!("dimensions differ: {n} vs {}", b.n())));
    }
    let lb = *b.arclength.last().expect("nonempty");
    let slack = 1e-9 * lb.abs().max(1.0);
    let idx: Vec<usize> = (0..a.len()).filter(|&i| a.arclength[i] <= lb + slack).collect();
    if idx.len() < 2 {
        return Err(JacobiError::GridMismatch("arclength ranges do not overlap".into()));
    }
    let same_grid = a.arclength.len() == b.arclength.len()
        && a.arclength.iter().zip(&b.arclength).all(|(x, y)| (x - y).abs() <= slack);
    let (kb, sb): (Vec<Mat>, Vec<Mat>) = idx
        .iter()
        .map(|&i| {
            if same_grid {
                (b.kblock[i].clone(), b.sigma[i].clone())
            } else {
                let s = a.arclength[i].min(lb);
                (lagrange_matrix(&b.arclength, &b.kblock, s), lagrange_matrix(&b.arclength, &b.sigma, s))
            }
        })
        .unzip();
    let k_dev = idx.iter().zip(&kb).map(|(&i, k)| max_abs(&(&a.kblock[i] - k))).fold(0.0, f64::max);
    let mut best = (f64::INFINITY, vec![1.0; n]);
    for pattern in 0..(1usize << (n - 1)) {
        let eps: Vec<f64> =
            (0..n).map(|i| if i > 0 && pattern & (1 << (i - 1)) != 0 { -1.0 } else { 1.0 }).collect();
        let dev = idx
            .iter()
            .zip(&sb)
            .map(|(&i, s)| max_abs(&(&a.sigma[i] - conjugate(s, &eps))))
            .fold(0.0, f64::max);
        if dev < best.0 {
            best = (dev, eps);
        }
    }
    Ok(Equivalence {
        equivalent: k_dev <= tol && best.0 <= tol,
        signs: best.1,
        k_deviation: k_dev,
        sigma_deviation: best.0,
        compared_length: a.arclength[*idx.last().expect("nonempty")],
        samples: idx.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::assess;
    use crate::matcurve::{preset, SampleGrid, SymmetricMatrixCurve};
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> Mat {
        Mat::from_diagonal(&DVector::from_row_slice(v))
    }

    struct Run {
        jets: Vec<CurveJet>,
        ricci: Vec<RicciData>,
        arc: ArcData,
        ff: FrenetFrame,
        c: Vec<Mat>,
    }

    fn run(c: &SymmetricMatrixCurve, g: &SampleGrid) -> Run {
        let tol = Tolerances::default();
        let (rep, st) = assess(c, g, &tol).unwrap();
        assert!(rep.admissible, "{rep:?}");
        let arc = st.arc.unwrap();
        let ff = frenet_frame(&st.jets, &st.ricci, &arc, &tol).unwrap();
        let cm = cartan_matrix(&ff, &st.jets, &st.ricci, &arc, &tol).unwrap();
        Run { jets: st.jets, ricci: st.ricci, arc, ff, c: cm }
    }

    fn reduced(r: &Run) -> ReducedCartan {
        reduced_invariants(&r.c, &r.arc, &Tolerances::default()).unwrap()
    }

    #[test]
    fn ex1_frame_matches_closed_form() {
        let r = run(&preset("paper-6.2-ex1").unwrap().curve, &SampleGrid::new(0.0, 1.0, 101).unwrap());
        for (i, m) in r.ff.m.iter().enumerate() {
            let t = r.ff.t[i];
            assert_abs_diff_eq!(m, &diag(&[t.cosh() + t.sinh(), 1.0 + t]), epsilon = 1e-10);
            // f̄_1 = e^τ e_1 + cosh τ ē_1, f̄_2 = e_2 + ē_2
            let f = r.ff.frames[i].matrix();
            assert_abs_diff_eq!(f[(0, 2)], t.exp(), epsilon = 1e-10);
            assert_abs_diff_eq!(f[(2, 2)], t.cosh(), epsilon = 1e-10);
            assert_abs_diff_eq!(f[(1, 3)], 1.0, epsilon = 1e-10);
            assert_abs_diff_eq!(f[(3, 3)], 1.0, epsilon = 1e-10);
            let s0 = r.ff.s0[i].as_ref().unwrap();
            assert_abs_diff_eq!(s0, &diag(&[(1.0 + (-2.0 * t).exp()) / 2.0, 1.0]), epsilon = 1e-10);
        }
    }

    #[test]
    fn ex2_frame_matches_closed_form() {
        let r = run(&preset("paper-6.2-ex2").unwrap().curve, &SampleGrid::new(0.0, 1.0, 101).unwrap());
        for (i, m) in r.ff.m.iter().enumerate() {
            let t = r.ff.t[i];
            assert_abs_diff_eq!(m, &diag(&[1.0 + t, t.cos() + t.sin()]), epsilon = 1e-10);
        }
    }

    #[test]
    fn preset_cartan_matrices() {
        let g = SampleGrid::new(0.0, 1.0, 101).unwrap();
        for (name, k) in [("paper-6.2-ex1", [1.0, 0.0]), ("paper-6.2-ex2", [0.0, -1.0])] {
            let r = run(&preset(name).unwrap().curve, &g);
            let rc = reduced(&r);
            for i in 0..rc.len() {
                assert!(max_abs(&rc.sigma[i]) < 1e-8, "{name}");
                assert_abs_diff_eq!(rc.kblock[i], diag(&k), epsilon = 1e-9);
                assert_abs_diff_eq!(rc.zeta[i], 1.0, epsilon = 1e-12);
            }
            assert_eq!(rc.signs, vec![1.0, 1.0]);
        }
    }

    fn wobbly() -> SymmetricMatrixCurve {
        crate::corpus::random_polynomial_curve(3, 0).unwrap().0
    }

    #[test]
    fn frames_satisfy_normalization_and_symplecticity() {
        let r = run(&wobbly(), &SampleGrid::new(0.0, 1.0, 201).unwrap());
        for i in 0..r.ff.len() {
            let s1 = &r.jets[i].s1;
            let mt = &r.ff.m_tilde[i];
            assert_abs_diff_eq!(mt.transpose() * s1 * mt, Mat::identity(3, 3), epsilon = 1e-8);
            assert_abs_diff_eq!(s1.clone().try_inverse().unwrap(), mt * mt.transpose(), epsilon = 1e-8);
            assert!(r.ff.residual[i] <= 1e-7);
            if i > 0 {
                for c in 0..3 {
                    assert!(mt.column(c).dot(&r.ff.m_tilde[i - 1].column(c)) > 0.0);
                }
            }
        }
    }

    #[test]
    fn cartan_matrix_satisfies_frame_ode() {
        // dF/dt = ζ F C, checked by differencing the frame series
        let g = SampleGrid::new(0.0, 1.0, 401).unwrap();
        let r = run(&wobbly(), &g);
        let fs: Vec<Mat> = r.ff.frames.iter().map(|f| f.matrix().clone()).collect();
        let df = finite_diff(&fs, g.h(), 1).unwrap();
        for i in 0..fs.len() {
            let rhs = &fs[i] * &r.c[i] * r.arc.zeta[i];
            assert!(max_abs(&(&df[i] - rhs)) <= 1e-4, "i = {i}");
        }
        let rc = reduced(&r);
        for i in 0..rc.len() {
            assert!(max_abs(&(&rc.sigma[i] + rc.sigma[i].transpose())) <= 1e-9);
        }
        // ∏ |d_i - d̄| = 1 holds with respect to the arc parameter
        assert!(rc.normalization_defect() <= 1e-5);
        let _ = &r.ricci;
    }

    #[test]
    fn negative_orientation_gives_same_invariants() {
        let g = SampleGrid::new(0.0, 1.0, 101).unwrap();
        let c = wobbly();
        let neg = SymmetricMatrixCurve::analytic(3, c.domain(), {
            let c = c.clone();
            move |t| c.eval(t).unwrap().map(|m| -m)
        })
        .unwrap();
        let a = reduced(&run(&c, &g));
        let rn = run(&neg, &g);
        assert_eq!(rn.ff.orientation, -1.0);
        let b = reduced(&rn);
        let eq = equivalent_reduced(&a, &b, 1e-9).unwrap();
        assert!(eq.equivalent, "{eq:?}");
        let j = standard_j(3);
        let f = rn.ff.frame_in_original(0);
        assert_abs_diff_eq!(f.transpose() * &j * &f, -j, epsilon = 1e-9);
    }

    fn synthetic(sig12: impl Fn(f64) -> f64) -> ReducedCartan {
        let t: Vec<f64> = (0..21).map(|i| i as f64 * 0.05).collect();
        ReducedCartan {
            arclength: t.clone(),
            zeta: vec![1.0; t.len()],
            sigma: t
                .iter()
                .map(|x| Mat::from_row_slice(2, 2, &[0.0, sig12(*x), -sig12(*x), 0.0]))
                .collect(),
            kblock: vec![diag(&[1.0, 0.0]); t.len()],
            signs: vec![1.0, 1.0],
            t,
        }
    }

    #[test]
    fn equivalence_examples() {
        let a = synthetic(f64::sin);
        let eq = equivalent_reduced(&a, &a, 1e-12).unwrap();
        assert!(eq.equivalent);
        assert_eq!(eq.signs, vec![1.0, 1.0]);
        let b = synthetic(|t| -t.sin());
        let eq = equivalent_reduced(&a, &b, 1e-12).unwrap();
        assert!(eq.equivalent);
        assert_eq!(eq.signs, vec![1.0, -1.0]);
        let mut c = synthetic(f64::sin);
        c.kblock = vec![diag(&[0.0, -1.0]); c.len()];
        assert!(!equivalent_reduced(&a, &c, 1e-4).unwrap().equivalent);
        let mut d = synthetic(f64::sin);
        d.kblock = vec![Mat::identity(3, 3); d.len()];
        assert!(matches!(equivalent_reduced(&a, &d, 1e-4), Err(JacobiError::GridMismatch(_))));
    }

    #[test]
    fn ex1_and_ex2_are_not_equivalent() {
        let g = SampleGrid::new(0.0, 1.0, 101).unwrap();
        let a = reduced(&run(&preset("paper-6.2-ex1").unwrap().curve, &g));
        let b = reduced(&run(&preset("paper-6.2-ex2").unwrap().curve, &g));
        assert!(!equivalent_reduced(&a, &b, 1e-4).unwrap().equivalent);
    }

    #[test]
    fn canonical_signs_make_first_entries_nonnegative() {
        let s = |a: f64, b: f64, c: f64| Mat::from_row_slice(3, 3, &[0.0, a, b, -a, 0.0, c, -b, -c, 0.0]);
        let series = vec![s(0.0, -1.0, 2.0), s(-3.0, 1.0, 1.0)];
        let eps = canonical_signs(&series, 1e-6);
        assert_eq!(eps[0], 1.0);
        // (0, 1) first nonzero at sample 1: -3 -> eps_0 eps_1 = -1
        // (0, 2) first nonzero at sample 0: -1 -> eps_0 eps_2 = -1
        assert_eq!(eps, vec![1.0, -1.0, -1.0]);
        let conj = conjugate(&series[1], &eps);
        assert!(conj[(0, 1)] > 0.0);
        assert!(conjugate(&series[0], &eps)[(0, 2)] > 0.0);
    }

    #[test]
    fn csv_layout() {
        let rc = synthetic(f64::sin);
        let csv = rc.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,arclength,zeta,k_1,k_2,sigma_12"));
        assert_eq!(
            lines.next(),
            Some("0.000000000000e+00,0.000000000000e+00,1.000000000000e+00,-2.000000000000e+00,-0.000000000000e+00,0.000000000000e+00")
        );
        assert_eq!(csv.lines().count(), 22);
    }
}
