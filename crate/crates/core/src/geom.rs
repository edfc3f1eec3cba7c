//! Conformal geometry of a Jacobi curve on a grid: the geometric arc element
//! `ζ`, the Schwarzian of the arc reparametrization, absolute curvatures and
//! the admissibility report.
//!
//! For `n = 1` the operator `R - Ric/n Id` vanishes identically, so `ζ ≡ 0`
//! and no curve is admissible; the pipeline therefore requires `n >= 2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::curvature::{ricci, RicciData};
use crate::linalg::{definiteness, Mat};
use crate::matcurve::{finite_diff_scalar, sample_curve, CurveJet, SampleGrid, SymmetricMatrixCurve};
use crate::{JacobiError, Result, Tolerances};

/// Arc element and derived series on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArcData {
    pub t: Vec<f64>,
    pub h: f64,
    /// `det(R - Ric/n Id)` before the absolute value and root.
    pub det: Vec<f64>,
    pub zeta: Vec<f64>,
    pub zeta1: Vec<f64>,
    pub zeta2: Vec<f64>,
    /// `𝕊(φ) = ζ''/ζ - 3/2 (ζ'/ζ)²`.
    pub sphi: Vec<f64>,
    /// Cumulative `∫ ζ dt` from the first grid point.
    pub arclength: Vec<f64>,
}

impl ArcData {
    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// `ζ'/ζ` at sample `i`.
    pub fn zeta_ratio(&self, i: usize) -> f64 {
        self.zeta1[i] / self.zeta[i]
    }

    /// Total length `∫ ζ dt` over the grid.
    pub fn length(&self) -> f64 {
        *self.arclength.last().unwrap_or(&0.0)
    }
}

/// `∏ (λ_i - λ̄)` for the eigenvalues of the Ricci operator.
pub fn centered_det(eigvals: &[f64]) -> f64 {
    let mean = eigvals.iter().sum::<f64>() / eigvals.len() as f64;
    eigvals.iter().map(|l| l - mean).product()
}

fn uniform_spacing(t: &[f64]) -> Result<f64> {
    let m = t.len();
    if m < crate::matcurve::MIN_FD_SAMPLES {
        return Err(JacobiError::TooFewSamples { got: m, need: crate::matcurve::MIN_FD_SAMPLES });
    }
    Ok((t[m - 1] - t[0]) / (m - 1) as f64)
}

/// Cumulative trapezoid rule with the endpoint-derivative correction
/// `-h²/12 (f'_{i+1} - f'_i)` on each cell, which makes it fourth order.
pub fn cumulative_arclength(zeta: &[f64], zeta1: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(zeta.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..zeta.len() {
        acc += 0.5 * h * (zeta[i - 1] + zeta[i]) - h * h / 12.0 * (zeta1[i] - zeta1[i - 1]);
        out.push(acc);
    }
    out
}

/// Geometric arc element `ζ = |det(R - Ric/n Id)|^{1/2n}` and its derived series.
pub fn zeta_series(ricci: &[RicciData], tol: &Tolerances) -> Result<ArcData> {
    let t: Vec<f64> = ricci.iter().map(|r| r.t).collect();
    let h = uniform_spacing(&t)?;
    let n = ricci[0].eigvals.len();
    let det: Vec<f64> = ricci.iter().map(|r| centered_det(&r.eigvals)).collect();
    if let Some(i) = det.iter().position(|d| !(d.abs() >= tol.adm_tol)) {
        return Err(JacobiError::NotAdmissible { t: t[i], det: det[i].abs() });
    }
    // a sign change means the determinant vanishes between two samples
    if let Some(i) = (1..det.len()).find(|&i| det[i - 1].signum() != det[i].signum()) {
        return Err(JacobiError::NotAdmissible { t: t[i], det: det[i - 1].abs().min(det[i].abs()) });
    }
    let zeta: Vec<f64> = det.iter().map(|d| d.abs().powf(1.0 / (2 * n) as f64)).collect();
    let zeta1 = finite_diff_scalar(&zeta, h, 1)?;
    let zeta2 = finite_diff_scalar(&zeta, h, 2)?;
    let sphi = (0..zeta.len())
        .map(|i| {
            let r = zeta1[i] / zeta[i];
            zeta2[i] / zeta[i] - 1.5 * r * r
        })
        .collect();
    let arclength = cumulative_arclength(&zeta, &zeta1, h);
    Ok(ArcData { t, h, det, zeta, zeta1, zeta2, sphi, arclength })
}

/// Absolute curvature operator and its eigenvalues along the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbsoluteCurvature {
    pub t: Vec<f64>,
    #[serde(skip)]
    pub rabs: Vec<Mat>,
    /// `k_i`, ascending at every sample.
    pub k: Vec<Vec<f64>>,
    pub kbar: Vec<f64>,
    /// `∏ |k_i - k̄|`, equal to one on admissible curves.
    pub normalization: Vec<f64>,
    /// Signs of `k_i - k̄`.
    pub sign_pattern: Vec<Vec<i8>>,
}

/// `𝓡 = (R - 𝕊(φ) Id) / ζ²` with eigenvalues `k_i = (λ_i - 𝕊(φ)) / ζ²`.
pub fn absolute_curvature(ricci: &[RicciData], arc: &ArcData, tol: &Tolerances) -> Result<AbsoluteCurvature> {
    if ricci.len() != arc.len() {
        return Err(JacobiError::GridMismatch(format!(
            "{} Ricci samples against {} arc samples",
            ricci.len(),
            arc.len()
        )));
    }
    let n = ricci[0].eigvals.len();
    let mut out = AbsoluteCurvature {
        t: arc.t.clone(),
        rabs: Vec::with_capacity(arc.len()),
        k: Vec::with_capacity(arc.len()),
        kbar: Vec::with_capacity(arc.len()),
        normalization: Vec::with_capacity(arc.len()),
        sign_pattern: Vec::with_capacity(arc.len()),
    };
    for (i, r) in ricci.iter().enumerate() {
        let z2 = arc.zeta[i] * arc.zeta[i];
        let sphi = arc.sphi[i];
        out.rabs.push((&r.schwarzian - Mat::identity(n, n) * sphi) / z2);
        let k: Vec<f64> = r.eigvals.iter().map(|l| (l - sphi) / z2).collect();
        let kbar = k.iter().sum::<f64>() / n as f64;
        let norm: f64 = k.iter().map(|ki| (ki - kbar).abs()).product();
        if (norm - 1.0).abs() > tol.norm_tol {
            return Err(JacobiError::NormalizationViolation { t: r.t, value: norm });
        }
        out.sign_pattern.push(k.iter().map(|ki| if ki - kbar >= 0.0 { 1 } else { -1 }).collect());
        out.k.push(k);
        out.kbar.push(kbar);
        out.normalization.push(norm);
    }
    Ok(out)
}

/// One step of the admissibility procedure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepReport {
    pub step: &'static str,
    pub check: &'static str,
    /// `None` when an earlier step failed and this one was not run.
    pub passed: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<&'static str>,
}

/// Structured outcome of the admissibility checks A.1–A.4.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AdmissibilityReport {
    pub admissible: bool,
    pub n: usize,
    pub grid: SampleGrid,
    /// `+1` when `S'` is positive definite, `-1` when negative definite
    /// (the curve is then analyzed with `-ω`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<i8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_eigengap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_relative_eigengap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ricci_asymmetry: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_abs_det: Option<f64>,
    pub steps: Vec<StepReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failed_step: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub failure_t: Option<f64>,
}

const STEPS: [(&str, &str); 4] = [
    ("A.1", "S' is definite"),
    ("A.2", "Ricci operator diagonalizable with real distinct eigenvalues"),
    ("A.3", "arc element zeta computable"),
    ("A.4", "det(R - Ric/n Id) bounded away from zero"),
];

/// Intermediate products of a successful assessment.
#[derive(Debug, Clone)]
pub struct Stages {
    pub jets: Vec<CurveJet>,
    pub ricci: Vec<RicciData>,
    pub arc: Option<ArcData>,
}

fn error_t(e: &JacobiError) -> Option<f64> {
    match e {
        JacobiError::RegularityFailure { t }
        | JacobiError::MonotonicityFailure { t }
        | JacobiError::ComplexEigenvalues { t, .. }
        | JacobiError::RepeatedEigenvalues { t, .. }
        | JacobiError::InflectionPoint { t }
        | JacobiError::NotAdmissible { t, .. }
        | JacobiError::NormalizationViolation { t, .. }
        | JacobiError::EigenCrossing { t }
        | JacobiError::StructureViolation { t, .. }
        | JacobiError::SymplecticityLoss { t, .. } => Some(*t),
        _ => None,
    }
}

impl AdmissibilityReport {
    fn new(n: usize, grid: SampleGrid) -> Self {
        AdmissibilityReport {
            admissible: false,
            n,
            grid,
            orientation: None,
            min_eigengap: None,
            min_relative_eigengap: None,
            max_ricci_asymmetry: None,
            min_abs_det: None,
            steps: STEPS
                .iter()
                .map(|(step, check)| StepReport { step, check, passed: None, t: None, error: None, kind: None })
                .collect(),
            failed_step: None,
            failure_t: None,
        }
    }

    fn pass(&mut self, i: usize) {
        self.steps[i].passed = Some(true);
    }

    fn fail(&mut self, i: usize, e: &JacobiError) {
        let s = &mut self.steps[i];
        s.passed = Some(false);
        s.t = error_t(e);
        s.error = Some(e.to_string());
        s.kind = Some(e.kind());
        self.failed_step = Some(s.step);
        self.failure_t = s.t;
    }

    /// Marks an admissible report as failed at step `A.<step + 1>` after a later
    /// stage detected the problem (for instance an eigenvalue crossing between
    /// samples, found while building frames).
    pub(crate) fn demote(&mut self, step: usize, e: &JacobiError) {
        self.admissible = false;
        self.fail(step, e);
        for s in &mut self.steps[step + 1..] {
            s.passed = None;
        }
    }

    /// The error behind the first failing step, if any.
    pub fn failure_kind(&self) -> Option<&'static str> {
        self.steps.iter().find(|s| s.passed == Some(false)).and_then(|s| s.kind)
    }
}

/// Runs A.1–A.4 and returns the report with whatever stages succeeded.
///
/// Geometric failures are report content. Input problems (invalid grid,
/// parameters outside the domain, malformed curve values, a transformed curve
/// leaving the chart) are returned as errors.
pub fn assess(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<(AdmissibilityReport, Stages)> {
    tol.validate()?;
    let mut report = AdmissibilityReport::new(c.n(), *g);
    let mut stages = Stages { jets: Vec::new(), ricci: Vec::new(), arc: None };
    if c.n() < 2 {
        return Err(JacobiError::InvalidDimension(format!(
            "half-dimension must be at least 2 for curvature invariants, got {}",
            c.n()
        )));
    }

    // A.1
    let jets = match sample_curve(c, g, tol) {
        Ok(j) => j,
        Err(e @ JacobiError::RegularityFailure { .. }) => {
            report.fail(0, &e);
            return Ok((report, stages));
        }
        Err(e) => return Err(e),
    };
    let mut orientation = None;
    for j in &jets {
        match (definiteness(&j.s1), orientation) {
            (None, _) => {
                report.fail(0, &JacobiError::MonotonicityFailure { t: j.t });
                stages.jets = jets;
                return Ok((report, stages));
            }
            (Some(s), None) => orientation = Some(s),
            (Some(s), Some(o)) if s != o => {
                report.fail(0, &JacobiError::MonotonicityFailure { t: j.t });
                stages.jets = jets;
                return Ok((report, stages));
            }
            _ => {}
        }
    }
    report.orientation = orientation.map(|o| if o > 0.0 { 1 } else { -1 });
    report.pass(0);

    // A.2
    let rr: Vec<Result<RicciData>> = jets.par_iter().map(|j| ricci(j, tol)).collect();
    let ricci_series = match rr.into_iter().collect::<Result<Vec<_>>>() {
        Ok(r) => r,
        Err(e) => {
            report.fail(1, &e);
            stages.jets = jets;
            return Ok((report, stages));
        }
    };
    let (mut gap, mut rel_gap, mut asym) = (f64::INFINITY, f64::INFINITY, 0.0_f64);
    for r in &ricci_series {
        let spread = r.eigvals[r.eigvals.len() - 1] - r.eigvals[0];
        let g = r.eigvals.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        gap = gap.min(g);
        if spread > 0.0 {
            rel_gap = rel_gap.min(g / spread);
        } else {
            rel_gap = 0.0;
        }
        asym = asym.max(r.asymmetry);
    }
    report.min_eigengap = Some(gap);
    report.min_relative_eigengap = Some(rel_gap);
    report.max_ricci_asymmetry = Some(asym);
    report.pass(1);

    // A.3 / A.4
    let dets: Vec<f64> = ricci_series.iter().map(|r| centered_det(&r.eigvals)).collect();
    if dets.iter().any(|d| !d.is_finite()) {
        let i = dets.iter().position(|d| !d.is_finite()).unwrap_or(0);
        report.fail(2, &JacobiError::NotAdmissible { t: jets[i].t, det: f64::NAN });
    } else {
        report.pass(2);
        report.min_abs_det = Some(dets.iter().fold(f64::INFINITY, |m, d| m.min(d.abs())));
        match zeta_series(&ricci_series, tol) {
            Ok(arc) => {
                report.pass(3);
                report.admissible = true;
                stages.arc = Some(arc);
            }
            Err(e) => report.fail(3, &e),
        }
    }
    stages.jets = jets;
    stages.ricci = ricci_series;
    Ok((report, stages))
}

/// The admissibility report alone.
pub fn admissibility_report(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<AdmissibilityReport> {
    assess(c, g, tol).map(|(r, _)| r)
}
