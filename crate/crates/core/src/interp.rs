//! Interpolation on nonuniform nodes: local Lagrange windows, cubic Hermite
//! and monotone (Fritsch–Carlson) Hermite slopes.

use crate::linalg::Mat;

/// Index of the interval `[x_i, x_{i+1}]` containing `x` (clamped to the ends).
pub fn bracket(xs: &[f64], x: f64) -> usize {
    let m = xs.len();
    if x <= xs[0] {
        return 0;
    }
    if x >= xs[m - 1] {
        return m - 2;
    }
    xs.partition_point(|v| *v <= x) - 1
}

/// Start index and weights of a `window`-point Lagrange interpolant at `x`,
/// with the window centred on the bracketing interval.
pub fn lagrange_weights(xs: &[f64], x: f64, window: usize) -> (usize, Vec<f64>) {
    let m = xs.len();
    let w = window.min(m);
    let i = bracket(xs, x) as isize;
    let start = (i - (w as isize / 2 - 1)).clamp(0, (m - w) as isize) as usize;
    let nodes = &xs[start..start + w];
    let weights = (0..w)
        .map(|j| {
            (0..w)
                .filter(|&k| k != j)
                .map(|k| (x - nodes[k]) / (nodes[j] - nodes[k]))
                .product()
        })
        .collect();
    (start, weights)
}

/// Local cubic (4-point) Lagrange interpolation of a scalar series.
pub fn lagrange_scalar(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let (start, w) = lagrange_weights(xs, x, 4);
    w.iter().enumerate().map(|(j, wj)| wj * ys[start + j]).sum()
}

/// Local cubic (4-point) Lagrange interpolation of a matrix series.
pub fn lagrange_matrix(xs: &[f64], ys: &[Mat], x: f64) -> Mat {
    let (start, w) = lagrange_weights(xs, x, 4);
    let mut acc = Mat::zeros(ys[0].nrows(), ys[0].ncols());
    for (j, wj) in w.iter().enumerate() {
        acc += &ys[start + j] * *wj;
    }
    acc
}

/// Cubic Hermite basis weights `(h00, h10, h01, h11)` for `u ∈ [0, 1]`.
pub fn hermite_basis(u: f64) -> [f64; 4] {
    let u2 = u * u;
    let u3 = u2 * u;
    [2.0 * u3 - 3.0 * u2 + 1.0, u3 - 2.0 * u2 + u, -2.0 * u3 + 3.0 * u2, u3 - u2]
}

/// Cubic Hermite interpolation of a scalar series with given slopes.
pub fn hermite_scalar(xs: &[f64], ys: &[f64], ds: &[f64], x: f64) -> f64 {
    let i = bracket(xs, x);
    let dx = xs[i + 1] - xs[i];
    let [a, b, c, d] = hermite_basis((x - xs[i]) / dx);
    a * ys[i] + b * dx * ds[i] + c * ys[i + 1] + d * dx * ds[i + 1]
}

/// Cubic Hermite interpolation of a matrix series with given slopes.
pub fn hermite_matrix(xs: &[f64], ys: &[Mat], ds: &[Mat], x: f64) -> Mat {
    let i = bracket(xs, x);
    let dx = xs[i + 1] - xs[i];
    let [a, b, c, d] = hermite_basis((x - xs[i]) / dx);
    &ys[i] * a + &ds[i] * (b * dx) + &ys[i + 1] * c + &ds[i + 1] * (d * dx)
}

/// Fritsch–Carlson slopes: the Hermite interpolant through `(xs, ys)` with
/// these slopes is monotone wherever the data are.
pub fn pchip_slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let m = xs.len();
    if m < 2 {
        return vec![0.0; m];
    }
    let delta: Vec<f64> = (0..m - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
    if m == 2 {
        return vec![delta[0]; 2];
    }
    let mut d = vec![0.0; m];
    for i in 1..m - 1 {
        if delta[i - 1] * delta[i] > 0.0 {
            let h0 = xs[i] - xs[i - 1];
            let h1 = xs[i + 1] - xs[i];
            let w1 = 2.0 * h1 + h0;
            let w2 = h1 + 2.0 * h0;
            d[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
        }
    }
    let end = |h0: f64, h1: f64, d0: f64, d1: f64| {
        let s = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 <= 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(xs[1] - xs[0], xs[2] - xs[1], delta[0], delta[1]);
    d[m - 1] = end(xs[m - 1] - xs[m - 2], xs[m - 2] - xs[m - 3], delta[m - 2], delta[m - 3]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_is_exact_on_cubics() {
        let xs = [0.0, 0.1, 0.35, 0.4, 0.8, 1.3, 1.5];
        let f = |x: f64| 1.0 - x + 2.0 * x * x - 0.5 * x * x * x;
        let ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
        for &x in &[0.0, 0.05, 0.37, 0.9, 1.5] {
            assert!((lagrange_scalar(&xs, &ys, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn hermite_is_exact_on_cubics() {
        let xs = [0.0, 0.5, 0.7, 2.0];
        let f = |x: f64| x * x * x - x;
        let df = |x: f64| 3.0 * x * x - 1.0;
        let ys: Vec<f64> = xs.iter().map(|x| f(*x)).collect();
        let ds: Vec<f64> = xs.iter().map(|x| df(*x)).collect();
        for &x in &[0.1, 0.6, 1.9] {
            assert!((hermite_scalar(&xs, &ys, &ds, x) - f(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn pchip_preserves_monotonicity() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let ys = [0.0, 0.0, 0.1, 5.0, 5.1];
        let ds = pchip_slopes(&xs, &ys);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=400 {
            let x = i as f64 * 0.01;
            let y = hermite_scalar(&xs, &ys, &ds, x);
            assert!(y >= prev - 1e-14, "x = {x}");
            prev = y;
        }
    }

    #[test]
    fn bracket_clamps() {
        let xs = [0.0, 1.0, 2.0];
        assert_eq!(bracket(&xs, -1.0), 0);
        assert_eq!(bracket(&xs, 1.0), 1);
        assert_eq!(bracket(&xs, 5.0), 1);
    }
}
