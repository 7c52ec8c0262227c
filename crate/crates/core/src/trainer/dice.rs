use crate::error::{Error, Result};
use crate::volume::LabelMask;

/// Dice overlap `2|A n B| / (|A| + |B|)` of binarized masks; two empty
/// masks agree perfectly.
pub fn dice_score(pred: &LabelMask, gt: &LabelMask) -> Result<f64> {
    if pred.shape() != gt.shape() {
        return Err(Error::Geometry(format!(
            "prediction shape {:?} differs from ground truth {:?}",
            pred.shape(),
            gt.shape()
        )));
    }
    let (mut inter, mut a, mut b) = (0u64, 0u64, 0u64);
    for (&p, &g) in pred.volume().voxels().iter().zip(gt.volume().voxels()) {
        let (p, g) = (p != 0.0, g != 0.0);
        a += u64::from(p);
        b += u64::from(g);
        inter += u64::from(p && g);
    }
    if a + b == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * inter as f64 / (a + b) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(bits: &[u8]) -> LabelMask {
        LabelMask::from_fn([bits.len(), 1, 1], [1.0; 3], |x, _, _| bits[x] != 0).unwrap()
    }

    #[test]
    fn identical_and_disjoint() {
        let a = mask(&[1, 1, 0, 0]);
        assert_eq!(dice_score(&a, &a).unwrap(), 1.0);
        assert_eq!(dice_score(&a, &mask(&[0, 0, 1, 1])).unwrap(), 0.0);
    }

    #[test]
    fn half_overlap() {
        let a = mask(&[1, 1, 1, 1, 0, 0]);
        let b = mask(&[0, 0, 1, 1, 1, 1]);
        assert_eq!(dice_score(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn both_empty() {
        let e = mask(&[0, 0, 0]);
        assert_eq!(dice_score(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn multi_label_binarized() {
        let a = LabelMask::from_fn([3, 1, 1], [1.0; 3], |x, _, _| x < 2).unwrap();
        let b = LabelMask::new(
            crate::volume::Volume3D::new([3, 1, 1], [1.0; 3], vec![2.0, 5.0, 0.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(dice_score(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn geometry_mismatch() {
        assert!(dice_score(&mask(&[1, 0]), &mask(&[1, 0, 0])).is_err());
    }
}
