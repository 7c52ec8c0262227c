//! Squared local normalized cross-correlation averaged over all voxels.
//!
//! Windows are truncated at the volume boundary (no padding). Window moments
//! come from separable running sums over mean-shifted data; voxels whose
//! variance estimate has lost most of its significant digits to cancellation
//! are recomputed directly from the window, so near-constant regions are
//! classified the same way a two-pass evaluation would classify them.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::volume::{Shape, Volume3D};

/// Local variance (sum of squared deviations) below which a window counts
/// as constant and contributes zero.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Relative cancellation bound triggering the direct two-pass evaluation.
const CANCELLATION_GUARD: f64 = 1e-6;

/// Mean over voxels of `cov^2 / (var_a * var_b)` within a truncated window.
pub fn local_ncc(a: &Volume3D, b: &Volume3D, window: [usize; 3]) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::Geometry(format!(
            "local NCC needs identical grids, got {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    if window.iter().any(|&w| w == 0 || w % 2 == 0) {
        return Err(Error::InvalidInput(format!(
            "NCC window {window:?} must have odd components"
        )));
    }
    let shape = a.shape();
    let radius = [window[0] / 2, window[1] / 2, window[2] / 2];

    let ca = centered(a.voxels());
    let cb = centered(b.voxels());
    let n = ca.len();
    let mut sa = ca.clone();
    let mut sb = cb.clone();
    let mut saa = Vec::with_capacity(n);
    let mut sbb = Vec::with_capacity(n);
    let mut sab = Vec::with_capacity(n);
    for (&x, &y) in ca.iter().zip(&cb) {
        saa.push(x * x);
        sbb.push(y * y);
        sab.push(x * y);
    }
    for field in [&mut sa, &mut sb, &mut saa, &mut sbb, &mut sab] {
        box_sum(field, shape, radius);
    }

    let counts: [Vec<usize>; 3] =
        std::array::from_fn(|axis| window_counts(shape[axis], radius[axis]));
    let [nx, ny, nz] = shape;

    let slice_sums: Vec<f64> = (0..nz)
        .into_par_iter()
        .map(|z| {
            let mut acc = 0.0;
            for y in 0..ny {
                for x in 0..nx {
                    let i = x + nx * (y + ny * z);
                    let cnt = (counts[0][x] * counts[1][y] * counts[2][z]) as f64;
                    let var_a = sa_var(saa[i], sa[i], cnt);
                    let var_b = sa_var(sbb[i], sb[i], cnt);
                    let c = if var_a <= CANCELLATION_GUARD * saa[i]
                        || var_b <= CANCELLATION_GUARD * sbb[i]
                    {
                        direct_contribution(&ca, &cb, shape, radius, [x, y, z])
                    } else {
                        let cov = sab[i] - sa[i] * sb[i] / cnt;
                        contribution(cov, var_a, var_b)
                    };
                    acc += c;
                }
            }
            acc
        })
        .collect();
    Ok(slice_sums.iter().sum::<f64>() / n as f64)
}

#[inline]
fn sa_var(sum_sq: f64, sum: f64, cnt: f64) -> f64 {
    sum_sq - sum * sum / cnt
}

#[inline]
fn contribution(cov: f64, var_a: f64, var_b: f64) -> f64 {
    if var_a < DEGENERATE_VARIANCE || var_b < DEGENERATE_VARIANCE {
        0.0
    } else {
        (cov * cov / (var_a * var_b)).min(1.0)
    }
}

fn centered(voxels: &[f32]) -> Vec<f64> {
    let mean = voxels.iter().map(|&v| f64::from(v)).sum::<f64>() / voxels.len() as f64;
    voxels.iter().map(|&v| f64::from(v) - mean).collect()
}

/// Number of in-bounds voxels of a truncated window, per position on one axis.
fn window_counts(n: usize, r: usize) -> Vec<usize> {
    (0..n)
        .map(|i| (i + r).min(n - 1) - i.saturating_sub(r) + 1)
        .collect()
}

/// In-place truncated box sum, one axis at a time.
fn box_sum(field: &mut [f64], shape: Shape, radius: [usize; 3]) {
    let [nx, ny, nz] = shape;
    let strides = [1, nx, nx * ny];
    let mut line = Vec::new();
    let mut prefix = Vec::new();
    for axis in 0..3 {
        let len = shape[axis];
        let r = radius[axis];
        if r == 0 || len == 1 {
            continue;
        }
        let stride = strides[axis];
        // Enumerate the starting offset of every line along `axis`.
        let starts: Vec<usize> = match axis {
            0 => (0..ny * nz).map(|k| k * nx).collect(),
            1 => (0..nz)
                .flat_map(|z| (0..nx).map(move |x| x + nx * ny * z))
                .collect(),
            _ => (0..nx * ny).collect(),
        };
        for start in starts {
            line.clear();
            line.extend((0..len).map(|k| field[start + k * stride]));
            prefix.clear();
            prefix.push(0.0);
            let mut run = 0.0;
            for &v in &line {
                run += v;
                prefix.push(run);
            }
            for k in 0..len {
                let hi = (k + r).min(len - 1) + 1;
                let lo = k.saturating_sub(r);
                field[start + k * stride] = prefix[hi] - prefix[lo];
            }
        }
    }
}

/// Two-pass evaluation of one voxel's window.
fn direct_contribution(
    a: &[f64],
    b: &[f64],
    shape: Shape,
    radius: [usize; 3],
    p: [usize; 3],
) -> f64 {
    let [nx, ny, _] = shape;
    let lo: [usize; 3] = std::array::from_fn(|k| p[k].saturating_sub(radius[k]));
    let hi: [usize; 3] = std::array::from_fn(|k| (p[k] + radius[k]).min(shape[k] - 1));
    let mut sum_a = 0.0;
    let mut sum_b = 0.0;
    let mut cnt = 0usize;
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let i = x + nx * (y + ny * z);
                sum_a += a[i];
                sum_b += b[i];
                cnt += 1;
            }
        }
    }
    let mean_a = sum_a / cnt as f64;
    let mean_b = sum_b / cnt as f64;
    let (mut cov, mut var_a, mut var_b) = (0.0, 0.0, 0.0);
    for z in lo[2]..=hi[2] {
        for y in lo[1]..=hi[1] {
            for x in lo[0]..=hi[0] {
                let i = x + nx * (y + ny * z);
                let da = a[i] - mean_a;
                let db = b[i] - mean_b;
                cov += da * db;
                var_a += da * da;
                var_b += db * db;
            }
        }
    }
    contribution(cov, var_a, var_b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncated_counts() {
        assert_eq!(window_counts(5, 1), vec![2, 3, 3, 3, 2]);
        assert_eq!(window_counts(3, 4), vec![3, 3, 3]);
        assert_eq!(window_counts(1, 1), vec![1]);
    }

    #[test]
    fn box_sum_matches_loops() {
        let shape = [4, 3, 5];
        let n = 60;
        let data: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64).collect();
        let mut summed = data.clone();
        box_sum(&mut summed, shape, [1, 1, 2]);
        for z in 0..5usize {
            for y in 0..3usize {
                for x in 0..4usize {
                    let mut s = 0.0;
                    for zz in z.saturating_sub(2)..=(z + 2).min(4) {
                        for yy in y.saturating_sub(1)..=(y + 1).min(2) {
                            for xx in x.saturating_sub(1)..=(x + 1).min(3) {
                                s += data[xx + 4 * (yy + 3 * zz)];
                            }
                        }
                    }
                    assert_eq!(summed[x + 4 * (y + 3 * z)], s);
                }
            }
        }
    }

    #[test]
    fn constant_volume_scores_zero() {
        let a = Volume3D::filled([5, 5, 5], [1.0; 3], 0.3).unwrap();
        let b = Volume3D::from_fn([5, 5, 5], [1.0; 3], |x, y, z| (x * y + z) as f32).unwrap();
        assert_eq!(local_ncc(&a, &b, [3, 3, 3]).unwrap(), 0.0);
    }

    #[test]
    fn even_window_rejected() {
        let a = Volume3D::filled([3, 3, 3], [1.0; 3], 0.0).unwrap();
        assert!(local_ncc(&a, &a, [3, 4, 3]).is_err());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Volume3D::filled([3, 3, 3], [1.0; 3], 0.0).unwrap();
        let b = Volume3D::filled([3, 3, 4], [1.0; 3], 0.0).unwrap();
        assert!(matches!(local_ncc(&a, &b, [3, 3, 3]), Err(Error::Geometry(_))));
    }
}
