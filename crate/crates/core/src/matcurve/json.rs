//! JSON description of curves.
//!
//! ```json
//! { "n": 2, "kind": "polynomial", "domain": [-1, 2],
//!   "entries": [[0, 1], [0, 0, 0.5], [0, 2, 0, 0.1]] }
//! ```
//!
//! * `preset`: `name` is one of [`PRESET_NAMES`](super::PRESET_NAMES); `domain` optional.
//! * `polynomial`: `entries` holds one coefficient array (ascending powers) per
//!   upper-triangle entry `(i, j)`, `i <= j`, in row-major order.
//! * `fourier`: `omega` plus one `{ "a0", "a": [...], "b": [...] }` object per
//!   upper-triangle entry, `S_ij = a0 + Σ_k a_k cos(kωt) + b_k sin(kωt)`.
//! * `table`: `samples = { "t": [...], "S": [n x n, ...] }` on a uniform grid,
//!   optionally with exact derivative series `S1`, `S2`, `S3`.
//!
//! Optional extras applied in order: `reparam` (`{ "type": "smooth" | "tan", ...,
//! "domain": [a, b] }`) pre-composes with a change of parameter; `transform`
//! (`{ "g": 2n x 2n rows }` or `{ "seed": u64, "scale": f64 }`) applies a
//! conformal symplectic map. `grid` (`{ "t0", "t1", "m" }`) suggests a default
//! sampling grid.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{preset, Reparam, SampleGrid, SymmetricMatrixCurve};
use crate::linalg::{from_rows, to_rows, Mat};
use crate::symspace::ConformalTransform;
use crate::{JacobiError, Result, Tolerances};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpecKind {
    Preset,
    Polynomial,
    Fourier,
    Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSamples {
    pub t: Vec<f64>,
    #[serde(rename = "S")]
    pub s: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "S1", default, skip_serializing_if = "Option::is_none")]
    pub s1: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "S2", default, skip_serializing_if = "Option::is_none")]
    pub s2: Option<Vec<Vec<Vec<f64>>>>,
    #[serde(rename = "S3", default, skip_serializing_if = "Option::is_none")]
    pub s3: Option<Vec<Vec<Vec<f64>>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReparamSpec {
    #[serde(flatten)]
    pub psi: Reparam,
    pub domain: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveSpec {
    pub n: usize,
    pub kind: SpecKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<TableSamples>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<SampleGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reparam: Option<ReparamSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformSpec>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FourierEntry {
    a0: f64,
    #[serde(default)]
    a: Vec<f64>,
    #[serde(default)]
    b: Vec<f64>,
}

fn bad(msg: impl Into<String>) -> JacobiError {
    JacobiError::InvalidInput(msg.into())
}

fn upper_triangle(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

fn matrix(rows: &[Vec<f64>], n: usize, what: &str) -> Result<Mat> {
    let m = from_rows(rows).ok_or_else(|| bad(format!("{what}: ragged matrix")))?;
    if m.shape() != (n, n) {
        return Err(JacobiError::InvalidDimension(format!(
            "{what}: expected {n}x{n}, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m)
}

fn set_sym(m: &mut Mat, i: usize, j: usize, v: f64) {
    m[(i, j)] = v;
    m[(j, i)] = v;
}

impl CurveSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| bad(format!("curve JSON: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("curve spec serializes")
    }

    fn domain_or(&self, default: Option<(f64, f64)>) -> Result<(f64, f64)> {
        match (self.domain, default) {
            (Some([a, b]), _) => Ok((a, b)),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(bad("missing 'domain'")),
        }
    }

    /// Polynomial spec from matrix coefficients in ascending powers.
    pub fn polynomial(coeffs: &[Mat], domain: (f64, f64)) -> Self {
        let n = coeffs[0].nrows();
        let entries: Vec<Vec<f64>> =
            upper_triangle(n).into_iter().map(|(i, j)| coeffs.iter().map(|c| c[(i, j)]).collect()).collect();
        CurveSpec {
            n,
            kind: SpecKind::Polynomial,
            name: None,
            entries: Some(serde_json::to_value(entries).expect("numbers serialize")),
            omega: None,
            samples: None,
            domain: Some([domain.0, domain.1]),
            grid: None,
            reparam: None,
            transform: None,
        }
    }

    /// Table spec carrying exact derivative series.
    pub fn table(t: &[f64], jets: [&[Mat]; 4]) -> Self {
        let conv = |v: &[Mat]| v.iter().map(to_rows).collect::<Vec<_>>();
        CurveSpec {
            n: jets[0][0].nrows(),
            kind: SpecKind::Table,
            name: None,
            entries: None,
            omega: None,
            samples: Some(TableSamples {
                t: t.to_vec(),
                s: conv(jets[0]),
                s1: Some(conv(jets[1])),
                s2: Some(conv(jets[2])),
                s3: Some(conv(jets[3])),
            }),
            domain: Some([t[0], t[t.len() - 1]]),
            grid: None,
            reparam: None,
            transform: None,
        }
    }

    pub fn preset(name: &str) -> Self {
        CurveSpec {
            n: 2,
            kind: SpecKind::Preset,
            name: Some(name.to_string()),
            entries: None,
            omega: None,
            samples: None,
            domain: None,
            grid: None,
            reparam: None,
            transform: None,
        }
    }

    /// Grid suggested by the curve file: its `grid` field, or the preset default.
    pub fn default_grid(&self) -> Option<SampleGrid> {
        if let Some(g) = self.grid {
            return Some(g);
        }
        if let (SpecKind::Preset, Some(name)) = (self.kind, &self.name) {
            return preset(name).ok().map(|p| p.grid);
        }
        None
    }

    pub fn build(&self, tol: &Tolerances) -> Result<SymmetricMatrixCurve> {
        let n = self.n;
        if n == 0 {
            return Err(JacobiError::InvalidDimension("n must be positive".into()));
        }
        let mut curve = match self.kind {
            SpecKind::Preset => {
                let name = self.name.as_deref().ok_or_else(|| bad("preset curve needs 'name'"))?;
                let p = preset(name)?;
                if p.curve.n() != n {
                    return Err(JacobiError::InvalidDimension(format!("preset '{name}' has n = {}", p.curve.n())));
                }
                if let Some([a, b]) = self.domain {
                    let (lo, hi) = p.curve.domain();
                    if a < lo || b > hi {
                        return Err(JacobiError::DomainError { t: if a < lo { a } else { b }, lo, hi });
                    }
                }
                p.curve
            }
            SpecKind::Polynomial => {
                let entries: Vec<Vec<f64>> = serde_json::from_value(
                    self.entries.clone().ok_or_else(|| bad("polynomial curve needs 'entries'"))?,
                )
                .map_err(|e| bad(format!("polynomial entries: {e}")))?;
                let idx = upper_triangle(n);
                if entries.len() != idx.len() {
                    return Err(JacobiError::InvalidDimension(format!(
                        "expected {} coefficient arrays for n = {n}, got {}",
                        idx.len(),
                        entries.len()
                    )));
                }
                let deg = entries.iter().map(Vec::len).max().unwrap_or(0).max(1);
                let mut coeffs = vec![Mat::zeros(n, n); deg];
                for (&(i, j), e) in idx.iter().zip(&entries) {
                    for (k, v) in e.iter().enumerate() {
                        set_sym(&mut coeffs[k], i, j, *v);
                    }
                }
                SymmetricMatrixCurve::polynomial(coeffs, self.domain_or(None)?)?
            }
            SpecKind::Fourier => {
                let entries: Vec<FourierEntry> = serde_json::from_value(
                    self.entries.clone().ok_or_else(|| bad("fourier curve needs 'entries'"))?,
                )
                .map_err(|e| bad(format!("fourier entries: {e}")))?;
                let omega = self.omega.ok_or_else(|| bad("fourier curve needs 'omega'"))?;
                let idx = upper_triangle(n);
                if entries.len() != idx.len() {
                    return Err(JacobiError::InvalidDimension(format!(
                        "expected {} Fourier entries for n = {n}, got {}",
                        idx.len(),
                        entries.len()
                    )));
                }
                let harmonics = entries.iter().map(|e| e.a.len().max(e.b.len())).max().unwrap_or(0);
                let mut a0 = Mat::zeros(n, n);
                let mut a = vec![Mat::zeros(n, n); harmonics];
                let mut b = vec![Mat::zeros(n, n); harmonics];
                for (&(i, j), e) in idx.iter().zip(&entries) {
                    set_sym(&mut a0, i, j, e.a0);
                    for (k, v) in e.a.iter().enumerate() {
                        set_sym(&mut a[k], i, j, *v);
                    }
                    for (k, v) in e.b.iter().enumerate() {
                        set_sym(&mut b[k], i, j, *v);
                    }
                }
                SymmetricMatrixCurve::fourier(a0, a, b, omega, self.domain_or(None)?)?
            }
            SpecKind::Table => {
                let smp = self.samples.as_ref().ok_or_else(|| bad("table curve needs 'samples'"))?;
                let conv = |v: &[Vec<Vec<f64>>], what: &str| -> Result<Vec<Mat>> {
                    v.iter().map(|r| matrix(r, n, what)).collect()
                };
                let s = conv(&smp.s, "samples.S")?;
                let derivs = match (&smp.s1, &smp.s2, &smp.s3) {
                    (Some(a), Some(b), Some(c)) => {
                        Some([conv(a, "samples.S1")?, conv(b, "samples.S2")?, conv(c, "samples.S3")?])
                    }
                    (None, None, None) => None,
                    _ => return Err(bad("table derivatives S1, S2, S3 must be given together")),
                };
                SymmetricMatrixCurve::table(&smp.t, s, derivs)?
            }
        };
        if let Some(r) = &self.reparam {
            curve = curve.reparametrized(r.psi, (r.domain[0], r.domain[1]))?;
        }
        if let Some(tr) = &self.transform {
            let g = match (&tr.g, tr.seed) {
                (Some(rows), None) => {
                    let g = from_rows(rows).ok_or_else(|| bad("transform.g: ragged matrix"))?;
                    if g.shape() != (2 * n, 2 * n) {
                        return Err(JacobiError::InvalidDimension(format!("transform.g must be {0}x{0}", 2 * n)));
                    }
                    g
                }
                (None, Some(seed)) => ConformalTransform::random(n, seed, tr.scale.unwrap_or(1.0))?.matrix(),
                _ => return Err(bad("transform needs exactly one of 'g' or 'seed'")),
            };
            curve = curve.transformed(&g, tol)?;
        }
        Ok(curve)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn polynomial_json_roundtrip() {
        let tol = Tolerances::default();
        let text = r#"{ "n": 2, "kind": "polynomial", "domain": [-1, 2],
                        "entries": [[0, 1], [0, 0, 0.5], [0, 2, 0, 0.1]] }"#;
        let spec = CurveSpec::from_json(text).unwrap();
        let c = spec.build(&tol).unwrap();
        let [s, s1, _, s3] = c.eval(1.0).unwrap();
        assert_abs_diff_eq!(s, Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.1]), epsilon = 1e-15);
        assert_abs_diff_eq!(s1, Mat::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 2.3]), epsilon = 1e-15);
        assert_abs_diff_eq!(s3, Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.6]), epsilon = 1e-15);
        let again = CurveSpec::from_json(&spec.to_json()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn matrix_coefficients_roundtrip() {
        let tol = Tolerances::default();
        let c0 = Mat::from_row_slice(2, 2, &[1.0, 0.5, 0.5, -1.0]);
        let c1 = Mat::identity(2, 2);
        let spec = CurveSpec::polynomial(&[c0.clone(), c1.clone()], (0.0, 1.0));
        let c = spec.build(&tol).unwrap();
        assert_abs_diff_eq!(c.eval(0.5).unwrap()[0], &c0 + &c1 * 0.5, epsilon = 1e-15);
    }

    #[test]
    fn fourier_json() {
        let tol = Tolerances::default();
        let text = r#"{ "n": 2, "kind": "fourier", "domain": [0, 3], "omega": 2.0,
                        "entries": [{"a0": 1, "b": [1]}, {"a0": 0}, {"a0": 0, "a": [0, 0.5]}] }"#;
        let c = CurveSpec::from_json(text).unwrap().build(&tol).unwrap();
        let t = 0.3_f64;
        let [s, ..] = c.eval(t).unwrap();
        assert_abs_diff_eq!(s[(0, 0)], 1.0 + (2.0 * t).sin(), epsilon = 1e-15);
        assert_abs_diff_eq!(s[(1, 1)], 0.5 * (4.0 * t).cos(), epsilon = 1e-15);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        let tol = Tolerances::default();
        assert!(CurveSpec::from_json(r#"{ "n": 2, "kind": "spline" }"#).is_err());
        assert!(CurveSpec::from_json(r#"{ "n": 2, "kind": "preset", "nmae": "x" }"#).is_err());
        let no_entries = CurveSpec::from_json(r#"{ "n": 2, "kind": "polynomial", "domain": [0, 1] }"#).unwrap();
        assert!(no_entries.build(&tol).is_err());
        let wrong_count =
            CurveSpec::from_json(r#"{ "n": 2, "kind": "polynomial", "domain": [0, 1], "entries": [[1]] }"#).unwrap();
        assert!(matches!(wrong_count.build(&tol), Err(JacobiError::InvalidDimension(_))));
    }

    #[test]
    fn preset_with_reparam_and_transform() {
        let tol = Tolerances::default();
        let text = r#"{ "n": 2, "kind": "preset", "name": "paper-6.2-ex1",
                        "reparam": { "type": "smooth", "shift": 0, "scale": 1, "quad": 0,
                                     "amp": 0.1, "freq": 1, "phase": 0, "domain": [0, 1] },
                        "transform": { "seed": 4, "scale": 2.0 } }"#;
        let spec = CurveSpec::from_json(text).unwrap();
        let c = spec.build(&tol).unwrap();
        assert!(c.jet(0.5, &tol).is_ok());
        assert_eq!(spec.default_grid().unwrap().t1, 1.0);
    }

    #[test]
    fn table_json_with_derivatives() {
        let tol = Tolerances::default();
        let t: Vec<f64> = (0..9).map(|i| i as f64 * 0.125).collect();
        let s: Vec<Mat> = t.iter().map(|x| Mat::identity(2, 2) * *x).collect();
        let d1 = vec![Mat::identity(2, 2); 9];
        let z = vec![Mat::zeros(2, 2); 9];
        let spec = CurveSpec::table(&t, [&s, &d1, &z, &z]);
        let back = CurveSpec::from_json(&spec.to_json()).unwrap();
        let c = back.build(&tol).unwrap();
        assert_abs_diff_eq!(c.eval(0.3).unwrap()[0], Mat::identity(2, 2) * 0.3, epsilon = 1e-14);
    }
}
