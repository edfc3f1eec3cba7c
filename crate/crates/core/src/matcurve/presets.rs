//! Named example curves.

use nalgebra::DVector;

use super::{CurveKind, SampleGrid, SymmetricMatrixCurve};
use crate::linalg::Mat;
use crate::{JacobiError, Result};

pub const PRESET_NAMES: [&str; 4] = ["paper-6.2-ex1", "paper-6.2-ex2", "affine-line", "scalar-tan-block"];

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub curve: SymmetricMatrixCurve,
    /// Grid used when the caller does not supply one.
    pub grid: SampleGrid,
}

fn diag(v: [f64; 2]) -> Mat {
    Mat::from_diagonal(&DVector::from_row_slice(&v))
}

fn jets(a: [f64; 4], b: [f64; 4]) -> [Mat; 4] {
    std::array::from_fn(|d| diag([a[d], b[d]]))
}

/// `(1 - e^{-2t}) / 2` and derivatives.
fn half_one_minus_exp(t: f64) -> [f64; 4] {
    let e = (-2.0 * t).exp();
    [(1.0 - e) / 2.0, e, -2.0 * e, 4.0 * e]
}

/// `t / (1 + t)` and derivatives.
fn moebius_ratio(t: f64) -> [f64; 4] {
    let u = 1.0 / (1.0 + t);
    [t * u, u * u, -2.0 * u * u * u, 6.0 * u * u * u * u]
}

/// `sin t / (cos t + sin t)` and derivatives; `S' = 1 / (1 + sin 2t)`.
fn sin_ratio(t: f64) -> [f64; 4] {
    let (s2, c2) = (2.0 * t).sin_cos();
    let w = 1.0 + s2;
    let (s, c) = t.sin_cos();
    [s / (c + s), 1.0 / w, -2.0 * c2 / (w * w), 4.0 * s2 / (w * w) + 8.0 * c2 * c2 / (w * w * w)]
}

/// `tan(a t) / a` and derivatives.
fn scaled_tan(a: f64, t: f64) -> [f64; 4] {
    let tn = (a * t).tan();
    let sec2 = 1.0 + tn * tn;
    [tn / a, sec2, 2.0 * a * sec2 * tn, 2.0 * a * a * sec2 * (sec2 + 2.0 * tn * tn)]
}

/// Description, curve domain, default grid interval and jet function.
type PresetData = (&'static str, (f64, f64), (f64, f64), fn(f64) -> [Mat; 4]);

/// Looks up a named preset.
pub fn preset(name: &str) -> Result<Preset> {
    let (description, domain, grid, f): PresetData = match name {
        "paper-6.2-ex1" => (
            "S = diag((1 - e^{-2t})/2, t/(1+t)); k = (-2, 0), zeta = 1",
            (-0.9, 10.0),
            (0.0, 1.0),
            |t| jets(half_one_minus_exp(t), moebius_ratio(t)),
        ),
        "paper-6.2-ex2" => (
            "S = diag(t/(1+t), sin t/(cos t + sin t)); k = (0, 2), zeta = 1",
            (-0.7, 2.3),
            (0.0, 1.0),
            |t| jets(moebius_ratio(t), sin_ratio(t)),
        ),
        "affine-line" => (
            "S = t diag(1, 2); flat, not admissible",
            (-10.0, 10.0),
            (0.0, 1.0),
            |t| jets([t, 1.0, 0.0, 0.0], [2.0 * t, 2.0, 0.0, 0.0]),
        ),
        "scalar-tan-block" => (
            "S = diag(tan t, tan(2t)/2); Schwarzian diag(2, 8), zeta = sqrt 3, k = (2/3, 8/3)",
            (0.05, 0.75),
            (0.1, 0.7),
            |t| jets(scaled_tan(1.0, t), scaled_tan(2.0, t)),
        ),
        _ => {
            return Err(JacobiError::InvalidInput(format!(
                "unknown preset '{name}' (known: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    let name = PRESET_NAMES.iter().copied().find(|p| *p == name).unwrap_or("preset");
    let curve = SymmetricMatrixCurve::analytic(2, domain, f)?.with_label(CurveKind::Preset, name);
    Ok(Preset { name, description, curve, grid: SampleGrid::new(grid.0, grid.1, 201)? })
}
