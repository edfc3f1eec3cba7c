//! Five-point finite differences on uniform grids.
//!
//! With `f_k = f(t_0 + k h)` on `m` samples:
//!
//! | order | point       | weights (on 5 consecutive samples) | divisor |
//! |-------|-------------|------------------------------------|---------|
//! | 1     | interior i  | `1, -8, 0, 8, -1` on `i-2..=i+2`     | `12 h`  |
//! | 1     | 0           | `-25, 48, -36, 16, -3` on `0..=4`    | `12 h`  |
//! | 1     | 1           | `-3, -10, 18, -6, 1` on `0..=4`      | `12 h`  |
//! | 1     | m-2         | `-1, 6, -18, 10, 3` on `m-5..m`      | `12 h`  |
//! | 1     | m-1         | `3, -16, 36, -48, 25` on `m-5..m`    | `12 h`  |
//! | 2     | interior i  | `-1, 16, -30, 16, -1` on `i-2..=i+2` | `12 h²` |
//! | 2     | 0           | `35, -104, 114, -56, 11` on `0..=4`  | `12 h²` |
//! | 2     | 1           | `11, -20, 6, 4, -1` on `0..=4`       | `12 h²` |
//! | 2     | m-2         | `-1, 4, 6, -20, 11` on `m-5..m`      | `12 h²` |
//! | 2     | m-1         | `11, -56, 114, -104, 35` on `m-5..m` | `12 h²` |
//!
//! First-derivative stencils are O(h⁴) everywhere. Second-derivative stencils
//! are O(h⁴) in the interior, O(h³) at points 1 and m-2 and O(h³) at the ends.

use crate::linalg::Mat;
use crate::{JacobiError, Result};

/// Minimum number of samples accepted by [`finite_diff`].
pub const MIN_FD_SAMPLES: usize = 5;

const D1_INTERIOR: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_FIRST: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_SECOND: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D1_PENULTIMATE: [f64; 5] = [-1.0, 6.0, -18.0, 10.0, 3.0];
const D1_LAST: [f64; 5] = [3.0, -16.0, 36.0, -48.0, 25.0];

const D2_INTERIOR: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_FIRST: [f64; 5] = [35.0, -104.0, 114.0, -56.0, 11.0];
const D2_SECOND: [f64; 5] = [11.0, -20.0, 6.0, 4.0, -1.0];
const D2_PENULTIMATE: [f64; 5] = [-1.0, 4.0, 6.0, -20.0, 11.0];
const D2_LAST: [f64; 5] = [11.0, -56.0, 114.0, -104.0, 35.0];

/// Stencil for sample `i` of `m`: index of the first sample used, weights,
/// and the divisor.
fn stencil(i: usize, m: usize, order: u8, h: f64) -> (usize, &'static [f64; 5], f64) {
    let (tables, divisor) = match order {
        1 => ([&D1_FIRST, &D1_SECOND, &D1_INTERIOR, &D1_PENULTIMATE, &D1_LAST], 12.0 * h),
        _ => ([&D2_FIRST, &D2_SECOND, &D2_INTERIOR, &D2_PENULTIMATE, &D2_LAST], 12.0 * h * h),
    };
    if i == 0 {
        (0, tables[0], divisor)
    } else if i == 1 {
        (0, tables[1], divisor)
    } else if i + 2 == m {
        (m - 5, tables[3], divisor)
    } else if i + 1 == m {
        (m - 5, tables[4], divisor)
    } else {
        (i - 2, tables[2], divisor)
    }
}

fn check(m: usize, order: u8, h: f64) -> Result<()> {
    if m < MIN_FD_SAMPLES {
        return Err(JacobiError::TooFewSamples { got: m, need: MIN_FD_SAMPLES });
    }
    if order != 1 && order != 2 {
        return Err(JacobiError::InvalidInput(format!("derivative order must be 1 or 2, got {order}")));
    }
    if !(h > 0.0) || !h.is_finite() {
        return Err(JacobiError::InvalidInput(format!("spacing must be positive, got {h}")));
    }
    Ok(())
}

/// Derivative of order 1 or 2 of a matrix series sampled at spacing `h`.
pub fn finite_diff(values: &[Mat], h: f64, order: u8) -> Result<Vec<Mat>> {
    let m = values.len();
    check(m, order, h)?;
    let (r, c) = values[0].shape();
    Ok((0..m)
        .map(|i| {
            let (start, w, div) = stencil(i, m, order, h);
            let mut acc = Mat::zeros(r, c);
            for (k, wk) in w.iter().enumerate() {
                if *wk != 0.0 {
                    acc += &values[start + k] * *wk;
                }
            }
            acc / div
        })
        .collect())
}

/// Scalar version of [`finite_diff`] with identical stencils.
pub fn finite_diff_scalar(values: &[f64], h: f64, order: u8) -> Result<Vec<f64>> {
    let m = values.len();
    check(m, order, h)?;
    Ok((0..m)
        .map(|i| {
            let (start, w, div) = stencil(i, m, order, h);
            w.iter().enumerate().map(|(k, wk)| wk * values[start + k]).sum::<f64>() / div
        })
        .collect())
}
