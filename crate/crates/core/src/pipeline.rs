//! The full analysis of a curve on a grid (admissibility, arc element,
//! absolute curvatures, Frenet frames, reduced Cartan matrix) and the
//! comparison of two curves.

use serde::Serialize;

use crate::curvature::RicciData;
use crate::frames::{cartan_matrix, equivalent_reduced, frenet_frame, reduced_invariants, Equivalence, FrenetFrame, ReducedCartan};
use crate::geom::{absolute_curvature, assess, AbsoluteCurvature, AdmissibilityReport, ArcData};
use crate::linalg::Mat;
use crate::matcurve::{CurveJet, SampleGrid, SymmetricMatrixCurve};
use crate::{JacobiError, Result, Tolerances};

/// Invariants of an admissible curve.
#[derive(Debug, Clone)]
pub struct Invariants {
    pub arc: ArcData,
    pub curvature: AbsoluteCurvature,
    pub frame: FrenetFrame,
    pub cartan: Vec<Mat>,
    pub reduced: ReducedCartan,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub report: AdmissibilityReport,
    /// Grid actually used; finer than the requested one after a refinement retry.
    pub grid: SampleGrid,
    pub refined: bool,
    pub jets: Vec<CurveJet>,
    pub ricci: Vec<RicciData>,
    /// `None` when the curve is not admissible on the grid.
    pub invariants: Option<Invariants>,
}

impl Analysis {
    pub fn admissible(&self) -> bool {
        self.report.admissible && self.invariants.is_some()
    }

    pub fn reduced(&self) -> Option<&ReducedCartan> {
        self.invariants.as_ref().map(|i| &i.reduced)
    }
}

fn analyze_once(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<Analysis> {
    let (mut report, st) = assess(c, g, tol)?;
    let mut out = Analysis { report: report.clone(), grid: *g, refined: false, jets: st.jets, ricci: st.ricci, invariants: None };
    let Some(arc) = st.arc else { return Ok(out) };
    let curvature = absolute_curvature(&out.ricci, &arc, tol)?;
    let frame = match frenet_frame(&out.jets, &out.ricci, &arc, tol) {
        Ok(f) => f,
        Err(e @ JacobiError::EigenCrossing { .. }) => {
            report.demote(1, &e);
            out.report = report;
            return Ok(out);
        }
        Err(e) => return Err(e),
    };
    let cartan = cartan_matrix(&frame, &out.jets, &out.ricci, &arc, tol)?;
    let reduced = reduced_invariants(&cartan, &arc, tol)?;
    out.invariants = Some(Invariants { arc, curvature, frame, cartan, reduced });
    Ok(out)
}

/// Runs the whole pipeline. A normalization violation (a sign of
/// inconsistent differencing of `ζ`) triggers one retry on a grid with half
/// the spacing.
pub fn analyze(c: &SymmetricMatrixCurve, g: &SampleGrid, tol: &Tolerances) -> Result<Analysis> {
    match analyze_once(c, g, tol) {
        Err(JacobiError::NormalizationViolation { .. }) => {
            let mut a = analyze_once(c, &g.refined(), tol)?;
            a.refined = true;
            Ok(a)
        }
        r => r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Equivalent,
    NotEquivalent,
    Inadmissible,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub verdict: Verdict,
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub equivalence: Option<Equivalence>,
    pub length_a: Option<f64>,
    pub length_b: Option<f64>,
}

/// Compares two analyses. Curves of different length are compared on the
/// common initial arc.
pub fn compare_analyses(a: &Analysis, b: &Analysis, tol: f64) -> Result<Comparison> {
    let (Some(ra), Some(rb)) = (a.reduced(), b.reduced()) else {
        return Ok(Comparison {
            verdict: Verdict::Inadmissible,
            tol,
            equivalence: None,
            length_a: a.reduced().map(|r| *r.arclength.last().expect("nonempty")),
            length_b: b.reduced().map(|r| *r.arclength.last().expect("nonempty")),
        });
    };
    let (la, lb) = (*ra.arclength.last().expect("nonempty"), *rb.arclength.last().expect("nonempty"));
    // always resample the longer onto the shorter
    let eq = if la <= lb { equivalent_reduced(ra, rb, tol)? } else { equivalent_reduced(rb, ra, tol)? };
    Ok(Comparison {
        verdict: if eq.equivalent { Verdict::Equivalent } else { Verdict::NotEquivalent },
        tol,
        equivalence: Some(eq),
        length_a: Some(la),
        length_b: Some(lb),
    })
}

pub fn compare(
    a: &SymmetricMatrixCurve,
    ga: &SampleGrid,
    b: &SymmetricMatrixCurve,
    gb: &SampleGrid,
    tol: &Tolerances,
) -> Result<Comparison> {
    let (x, y) = rayon::join(|| analyze(a, ga, tol), || analyze(b, gb, tol));
    compare_analyses(&x?, &y?, tol.equiv_tol)
}
