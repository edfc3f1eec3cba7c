//! Small dense helpers over `nalgebra::DMatrix` used throughout the crate.

use nalgebra::DMatrix;

/// Dense real matrix; every object in the crate is small and runtime-sized.
pub type Mat = DMatrix<f64>;

/// Largest absolute entry.
pub fn max_abs(m: &Mat) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

pub fn asymmetry(m: &Mat) -> f64 {
    max_abs(&(m - m.transpose()))
}

pub fn symmetrize(m: &Mat) -> Mat {
    (m + m.transpose()) * 0.5
}

pub fn skew_part(m: &Mat) -> Mat {
    (m - m.transpose()) * 0.5
}

/// 2-norm condition number; `f64::INFINITY` for a singular matrix.
pub fn condition_number(m: &Mat) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    let sv = m.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Inverse gated by a condition-number bound. Returns the condition number
/// on failure so callers can build a precise error.
pub fn gated_inverse(m: &Mat, cond_max: f64) -> Result<Mat, f64> {
    let cond = condition_number(m);
    if !(cond <= cond_max) {
        return Err(cond);
    }
    m.clone().lu().try_inverse().ok_or(f64::INFINITY)
}

/// Solves `m X = rhs` through an LU factorisation, gated like [`gated_inverse`].
pub fn gated_solve(m: &Mat, rhs: &Mat, cond_max: f64) -> Result<Mat, f64> {
    let cond = condition_number(m);
    if !(cond <= cond_max) {
        return Err(cond);
    }
    m.clone().lu().solve(rhs).ok_or(f64::INFINITY)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending
/// and eigenvectors permuted to match.
pub fn sorted_symmetric_eigen(m: &Mat) -> (Vec<f64>, Mat) {
    let n = m.nrows();
    let eig = symmetrize(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Mat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Sign of a definite symmetric matrix: `Some(1.0)`, `Some(-1.0)` or `None`
/// when indefinite or singular.
pub fn definiteness(m: &Mat) -> Option<f64> {
    let (vals, _) = sorted_symmetric_eigen(m);
    let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let floor = scale * 1e-14;
    if vals.iter().all(|&v| v > floor) {
        Some(1.0)
    } else if vals.iter().all(|&v| v < -floor) {
        Some(-1.0)
    } else {
        None
    }
}

/// Standard symplectic form `[[0, I], [-I, 0]]` of size `2n`.
pub fn standard_j(n: usize) -> Mat {
    let mut j = Mat::zeros(2 * n, 2 * n);
    for i in 0..n {
        j[(i, n + i)] = 1.0;
        j[(n + i, i)] = -1.0;
    }
    j
}

/// Splits a `2n x 2n` matrix into its four `n x n` blocks `(P, Q, R, T)`
/// with `g = [[P, Q], [R, T]]`.
pub fn blocks(g: &Mat) -> (Mat, Mat, Mat, Mat) {
    let n = g.nrows() / 2;
    (
        g.view((0, 0), (n, n)).into_owned(),
        g.view((0, n), (n, n)).into_owned(),
        g.view((n, 0), (n, n)).into_owned(),
        g.view((n, n), (n, n)).into_owned(),
    )
}

pub fn from_blocks(p: &Mat, q: &Mat, r: &Mat, t: &Mat) -> Mat {
    let n = p.nrows();
    let mut g = Mat::zeros(2 * n, 2 * n);
    g.view_mut((0, 0), (n, n)).copy_from(p);
    g.view_mut((0, n), (n, n)).copy_from(q);
    g.view_mut((n, 0), (n, n)).copy_from(r);
    g.view_mut((n, n), (n, n)).copy_from(t);
    g
}

/// Value and first three derivatives of `Y X^{-1}` from those of `Y` and `X`.
///
/// `z = X^{-1}` is differentiated with `z' = -z X' z` and the product rule is
/// applied with binomial weights.
pub fn quotient_jets(y: &[Mat; 4], x: &[Mat; 4], cond_max: f64) -> Result<[Mat; 4], f64> {
    let z0 = gated_inverse(&x[0], cond_max)?;
    let (x1, x2, x3) = (&x[1], &x[2], &x[3]);
    let z1 = -(&z0 * x1 * &z0);
    let z2 = -(&z0 * x2 * &z0) + (&z0 * x1 * &z0 * x1 * &z0) * 2.0;
    let z3 = -(&z1 * x2 * &z0 + &z0 * x3 * &z0 + &z0 * x2 * &z1)
        + (&z1 * x1 * &z0 * x1 * &z0
            + &z0 * x2 * &z0 * x1 * &z0
            + &z0 * x1 * &z1 * x1 * &z0
            + &z0 * x1 * &z0 * x2 * &z0
            + &z0 * x1 * &z0 * x1 * &z1)
            * 2.0;
    let q0 = &y[0] * &z0;
    let q1 = &y[1] * &z0 + &y[0] * &z1;
    let q2 = &y[2] * &z0 + &y[1] * &z1 * 2.0 + &y[0] * &z2;
    let q3 = &y[3] * &z0 + &y[2] * &z1 * 3.0 + &y[1] * &z2 * 3.0 + &y[0] * &z3;
    Ok([q0, q1, q2, q3])
}

/// Builds a matrix from nested rows, checking rectangularity.
pub fn from_rows(rows: &[Vec<f64>]) -> Option<Mat> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if rows.iter().any(|row| row.len() != c) {
        return None;
    }
    Some(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn to_rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
