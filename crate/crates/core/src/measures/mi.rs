//! Histogram mutual information between two volumes on a common grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Logarithm used for information quantities. Only rescales the result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
    Ten,
}

impl LogBase {
    #[inline]
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Two => x.log2(),
            LogBase::Ten => x.log10(),
        }
    }
}

/// Equal-width bin assignment over the volume's own `[min, max]`.
/// A constant volume puts everything in bin 0.
pub(crate) fn bin_indices(vol: &Volume3D, bins: usize) -> Vec<usize> {
    let (lo, hi) = vol.min_max();
    let (lo, hi) = (f64::from(lo), f64::from(hi));
    if hi <= lo {
        return vec![0; vol.len()];
    }
    let width = hi - lo;
    vol.voxels()
        .iter()
        .map(|&v| {
            let t = (f64::from(v) - lo) / width * bins as f64;
            (t.floor() as usize).min(bins - 1)
        })
        .collect()
}

/// Mutual information with natural logarithm.
pub fn mutual_information(a: &Volume3D, b: &Volume3D, bins: usize) -> Result<f64> {
    mutual_information_base(a, b, bins, LogBase::Natural)
}

/// Mutual information `sum P(i,j) log(P(i,j) / (P(i) P(j)))` from a
/// `bins x bins` joint histogram.
pub fn mutual_information_base(
    a: &Volume3D,
    b: &Volume3D,
    bins: usize,
    base: LogBase,
) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Geometry(format!(
            "mutual information needs equal voxel counts, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    if bins < 2 {
        return Err(Error::InvalidInput(format!("need at least 2 bins, got {bins}")));
    }
    let ia = bin_indices(a, bins);
    let ib = bin_indices(b, bins);

    let mut joint = vec![0u64; bins * bins];
    let mut ca = vec![0u64; bins];
    let mut cb = vec![0u64; bins];
    for (&i, &j) in ia.iter().zip(&ib) {
        joint[i * bins + j] += 1;
        ca[i] += 1;
        cb[j] += 1;
    }

    let n = a.len() as f64;
    let mut terms = Vec::new();
    for i in 0..bins {
        if ca[i] == 0 {
            continue;
        }
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            let c = c as f64;
            // P(i,j) / (P(i) P(j)) == c * N / (c_i * c_j)
            terms.push(c / n * base.log(c * n / (ca[i] as f64 * cb[j] as f64)));
        }
    }
    // Summing in sorted order makes the result independent of argument order.
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube(values: &[f32]) -> Volume3D {
        Volume3D::new([2, 2, 2], [1.0; 3], values.to_vec()).unwrap()
    }

    #[test]
    fn independent_halves() {
        let a = cube(&[0., 0., 0., 0., 1., 1., 1., 1.]);
        let b = cube(&[0., 1., 0., 1., 0., 1., 0., 1.]);
        assert!(mutual_information(&a, &b, 2).unwrap().abs() < 1e-15);
        let self_mi = mutual_information(&a, &a, 2).unwrap();
        assert!((self_mi - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn constant_input_has_zero_mi() {
        let a = cube(&[3.0; 8]);
        let b = cube(&[0., 5., 2., 1., 7., 1., 9., 4.]);
        assert_eq!(mutual_information(&a, &b, 8).unwrap(), 0.0);
        assert_eq!(mutual_information(&b, &a, 8).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_counts() {
        let a = cube(&[0.0; 8]);
        let b = Volume3D::filled([3, 3, 3], [1.0; 3], 0.0).unwrap();
        assert!(matches!(mutual_information(&a, &b, 4), Err(Error::Geometry(_))));
    }

    #[test]
    fn too_few_bins() {
        let a = cube(&[0.0; 8]);
        assert!(mutual_information(&a, &a, 1).is_err());
    }

    #[test]
    fn base_only_rescales() {
        let a = cube(&[0., 1., 2., 3., 3., 2., 0., 1.]);
        let b = cube(&[1., 1., 2., 0., 3., 2., 2., 1.]);
        let nat = mutual_information_base(&a, &b, 4, LogBase::Natural).unwrap();
        let two = mutual_information_base(&a, &b, 4, LogBase::Two).unwrap();
        let ten = mutual_information_base(&a, &b, 4, LogBase::Ten).unwrap();
        assert!((two - nat / std::f64::consts::LN_2).abs() < 1e-12);
        assert!((ten - nat / std::f64::consts::LN_10).abs() < 1e-12);
    }
}
