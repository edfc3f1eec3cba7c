//! Deterministic test corpus: the presets plus pseudo-random admissible
//! polynomial curves and changes of parameter.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geom::assess;
use crate::linalg::Mat;
use crate::matcurve::{Reparam, SampleGrid, SymmetricMatrixCurve};
use crate::{JacobiError, Result, Tolerances};

/// Parameter interval on which random corpus curves are guaranteed admissible.
pub const CORPUS_INTERVAL: (f64, f64) = (0.0, 1.0);

/// Domain of random corpus curves (a margin around [`CORPUS_INTERVAL`]).
pub const CORPUS_DOMAIN: (f64, f64) = (-0.5, 1.5);

/// Acceptance thresholds for random curves: well separated spectra and an
/// arc element bounded away from zero, so that the curve is comfortably far
/// from any non-admissible parameter.
const MIN_RELATIVE_GAP: f64 = 0.1;
const MIN_ZETA_RATIO: f64 = 0.1;
const MAX_LOG_ZETA_SLOPE: f64 = 15.0;

fn random_symmetric<R: Rng>(n: usize, rng: &mut R, amp: f64) -> Mat {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-amp..=amp);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

/// Initial diagonal Schwarzians per dimension, chosen with the middle values
/// away from the mean so that `det(R - Ric/n Id)` stays away from zero.
const SCHWARZIAN_TARGETS: [[f64; 4]; 4] = [
    [0.0, 0.0, 0.0, 0.0],
    [-1.5, 0.3, 0.0, 0.0],
    [-2.0, -0.2, 0.5, 0.0],
    [-2.4, -1.2, -0.2, 0.5],
];

/// Coefficients `C_0 .. C_4` of a candidate quartic curve.
///
/// Each diagonal entry is a scalar quartic with a nearly constant Schwarzian
/// close to a target: for a target `-γ²/2 < 0` the derivative is the cubic
/// Taylor polynomial of `exp(γt)`, otherwise the quartic is `t + (target/6) t³`.
/// A small random symmetric coupling is added to the higher coefficients so
/// that the frame genuinely rotates.
fn candidate(n: usize, rng: &mut ChaCha8Rng) -> Vec<Mat> {
    let mut coeffs = vec![Mat::zeros(n, n), Mat::identity(n, n), Mat::zeros(n, n), Mat::zeros(n, n), Mat::zeros(n, n)];
    for i in 0..n {
        let target: f64 = SCHWARZIAN_TARGETS[n.min(4) - 1][i.min(3)] + rng.random_range(-0.1..0.1);
        if target < 0.0 {
            let g = (-2.0 * target).sqrt();
            coeffs[2][(i, i)] = g / 2.0;
            coeffs[3][(i, i)] = g * g / 6.0;
            coeffs[4][(i, i)] = g * g * g / 24.0;
        } else {
            coeffs[3][(i, i)] = target / 6.0;
        }
    }
    let eps = rng.random_range(0.03..0.12);
    for c in &mut coeffs[2..5] {
        let mut r = random_symmetric(n, rng, eps);
        for i in 0..n {
            r[(i, i)] = 0.0;
        }
        *c += r;
    }
    coeffs
}

/// Checks that the curve is admissible on `grid` with the corpus margins.
pub fn admissible_with_margin(c: &SymmetricMatrixCurve, grid: &SampleGrid, tol: &Tolerances) -> bool {
    let Ok((report, stages)) = assess(c, grid, tol) else { return false };
    let Some(arc) = stages.arc.as_ref().filter(|_| report.admissible) else { return false };
    let rel_gap = report.min_relative_eigengap.unwrap_or(0.0);
    let zmin = arc.zeta.iter().copied().fold(f64::INFINITY, f64::min);
    let zmax = arc.zeta.iter().copied().fold(0.0, f64::max);
    let slope = (0..arc.len()).map(|i| arc.zeta_ratio(i).abs()).fold(0.0, f64::max);
    rel_gap >= MIN_RELATIVE_GAP && zmin >= MIN_ZETA_RATIO * zmax && slope <= MAX_LOG_ZETA_SLOPE
}

/// Random quartic curve `S(t) = Σ_{k=1}^{4} C_k t^k`, `n x n`, admissible with
/// margin on [`CORPUS_INTERVAL`]. Candidates are drawn from a stream seeded by
/// `seed` until one passes; the result depends only on `(n, seed)`.
pub fn random_polynomial_curve(n: usize, seed: u64) -> Result<(SymmetricMatrixCurve, Vec<Mat>)> {
    let tol = Tolerances::default();
    let grid = SampleGrid::new(CORPUS_INTERVAL.0 - 0.05, CORPUS_INTERVAL.1 + 0.05, 111)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n as u64) << 32));
    for _ in 0..1_000 {
        let coeffs = candidate(n, &mut rng);
        let c = SymmetricMatrixCurve::polynomial(coeffs.clone(), CORPUS_DOMAIN)?;
        if admissible_with_margin(&c, &grid, &tol) {
            return Ok((c, coeffs));
        }
    }
    Err(JacobiError::InvalidInput(format!("no admissible curve found for n = {n}, seed {seed}")))
}

/// Random increasing change of parameter `ψ(t) = a + b t + c t² + d sin(ω t + p)`
/// mapping `[0, 1]` into `[0, 1.25]` with `ψ(0) = 0` and `ψ' >= 1/2`.
pub fn random_reparam(seed: u64) -> Reparam {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let scale = rng.random_range(0.7..1.0);
    let quad = rng.random_range(-0.1..0.1);
    let freq = rng.random_range(1.0..4.0);
    let amp = rng.random_range(0.0..0.1) / freq;
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    // shift so that ψ(0) = 0
    let shift = -amp * phase.sin();
    Reparam::Smooth { shift, scale, quad, amp, freq, phase }
}
