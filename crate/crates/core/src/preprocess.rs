//! Resampling, intensity windowing and label-driven ROI cropping.
//!
//! Grids are corner-aligned: destination index `i` maps to source index
//! `i * (n_src - 1) / (n_dst - 1)`, and a single-voxel destination axis maps
//! to source index 0. The mapping is evaluated in exact integer arithmetic so
//! identity resampling and nearest-neighbour ties are reproducible.

use crate::error::{Error, Result};
use crate::volume::{LabelMask, Shape, Volume3D};

/// Inclusive voxel-coordinate box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundingBox {
    pub min: [usize; 3],
    pub max: [usize; 3],
}

impl BoundingBox {
    pub fn extent(&self) -> Shape {
        [
            self.max[0] - self.min[0] + 1,
            self.max[1] - self.min[1] + 1,
            self.max[2] - self.min[2] + 1,
        ]
    }
}

/// Source position of one destination sample along an axis, as
/// `base + num / den` with `0 <= num < den`.
#[derive(Debug, Clone, Copy)]
struct AxisSample {
    base: usize,
    num: u64,
    den: u64,
}

impl AxisSample {
    fn frac(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Nearest source index, ties resolved towards the lower index.
    fn nearest(self) -> usize {
        if 2 * self.num > self.den {
            self.base + 1
        } else {
            self.base
        }
    }
}

fn axis_samples(src: usize, dst: usize) -> Vec<AxisSample> {
    if dst == 1 {
        return vec![AxisSample {
            base: 0,
            num: 0,
            den: 1,
        }];
    }
    let scale_num = (src - 1) as u64;
    let den = (dst - 1) as u64;
    (0..dst as u64)
        .map(|i| {
            let pos = i * scale_num;
            AxisSample {
                base: (pos / den) as usize,
                num: pos % den,
                den,
            }
        })
        .collect()
}

fn check_target(src: &Volume3D, target: Shape) -> Result<()> {
    if src.is_empty() {
        return Err(Error::InvalidInput("cannot resample an empty volume".into()));
    }
    if target.contains(&0) {
        return Err(Error::InvalidInput(format!(
            "target shape {target:?} has a zero extent"
        )));
    }
    Ok(())
}

fn rescaled_spacing(src: &Volume3D, target: Shape) -> [f64; 3] {
    let s = src.shape();
    let sp = src.spacing_mm();
    [
        sp[0] * s[0] as f64 / target[0] as f64,
        sp[1] * s[1] as f64 / target[1] as f64,
        sp[2] * s[2] as f64 / target[2] as f64,
    ]
}

/// Trilinear resampling onto `target` voxels. Spacing is rescaled so the
/// physical extent `n * spacing` is unchanged.
pub fn resample_trilinear(vol: &Volume3D, target: Shape) -> Result<Volume3D> {
    check_target(vol, target)?;
    let shape = vol.shape();
    let ax = [
        axis_samples(shape[0], target[0]),
        axis_samples(shape[1], target[1]),
        axis_samples(shape[2], target[2]),
    ];
    let src = vol.voxels();
    // Upper neighbour index, collapsing onto the base at the last voxel where
    // the fractional weight is zero anyway.
    let next = |s: AxisSample, n: usize| if s.base + 1 < n { s.base + 1 } else { s.base };

    let mut out = Vec::with_capacity(target.iter().product());
    for sz in &ax[2] {
        let (z0, z1, tz) = (sz.base, next(*sz, shape[2]), sz.frac());
        for sy in &ax[1] {
            let (y0, y1, ty) = (sy.base, next(*sy, shape[1]), sy.frac());
            for sx in &ax[0] {
                let (x0, x1, tx) = (sx.base, next(*sx, shape[0]), sx.frac());
                let at = |x: usize, y: usize, z: usize| {
                    f64::from(src[x + shape[0] * (y + shape[1] * z)])
                };
                let c = [
                    at(x0, y0, z0),
                    at(x1, y0, z0),
                    at(x0, y1, z0),
                    at(x1, y1, z0),
                    at(x0, y0, z1),
                    at(x1, y0, z1),
                    at(x0, y1, z1),
                    at(x1, y1, z1),
                ];
                let lerp = |a: f64, b: f64, t: f64| a * (1.0 - t) + b * t;
                let v = lerp(
                    lerp(lerp(c[0], c[1], tx), lerp(c[2], c[3], tx), ty),
                    lerp(lerp(c[4], c[5], tx), lerp(c[6], c[7], tx), ty),
                    tz,
                );
                let (lo, hi) = c
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
                        (lo.min(x), hi.max(x))
                    });
                out.push(v.clamp(lo, hi) as f32);
            }
        }
    }
    Volume3D::new(target, rescaled_spacing(vol, target), out)
}

/// Nearest-neighbour resampling for label masks; never blends labels.
pub fn resample_nearest(mask: &LabelMask, target: Shape) -> Result<LabelMask> {
    let vol = mask.volume();
    check_target(vol, target)?;
    let shape = vol.shape();
    let ax = [
        axis_samples(shape[0], target[0]),
        axis_samples(shape[1], target[1]),
        axis_samples(shape[2], target[2]),
    ];
    let mut out = Vec::with_capacity(target.iter().product());
    for sz in &ax[2] {
        for sy in &ax[1] {
            for sx in &ax[0] {
                out.push(vol.get(sx.nearest(), sy.nearest(), sz.nearest()));
            }
        }
    }
    LabelMask::new(Volume3D::new(target, rescaled_spacing(vol, target), out)?)
}

/// Clamps to `[lo, hi]` and maps that window affinely onto `[0, 1]`.
pub fn intensity_window_normalize(vol: &Volume3D, lo: f64, hi: f64) -> Result<Volume3D> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidWindow { lo, hi });
    }
    let width = hi - lo;
    vol.map(|v| ((f64::from(v).clamp(lo, hi) - lo) / width) as f32)
}

/// Tightest box around every nonzero label voxel.
pub fn label_bounding_box(mask: &LabelMask) -> Result<BoundingBox> {
    let [nx, ny, nz] = mask.shape();
    let mut min = [usize::MAX; 3];
    let mut max = [0usize; 3];
    let mut any = false;
    let voxels = mask.volume().voxels();
    for z in 0..nz {
        for y in 0..ny {
            let row = &voxels[nx * (y + ny * z)..nx * (y + ny * z + 1)];
            for (x, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    any = true;
                    let p = [x, y, z];
                    for a in 0..3 {
                        min[a] = min[a].min(p[a]);
                        max[a] = max[a].max(p[a]);
                    }
                }
            }
        }
    }
    if !any {
        return Err(Error::EmptyLabel);
    }
    Ok(BoundingBox { min, max })
}

/// Extracts the voxels inside `bbox`, keeping the spacing.
pub fn crop(vol: &Volume3D, bbox: &BoundingBox) -> Result<Volume3D> {
    let shape = vol.shape();
    if (0..3).any(|a| bbox.min[a] > bbox.max[a] || bbox.max[a] >= shape[a]) {
        return Err(Error::InvalidInput(format!(
            "box {bbox:?} is not inside shape {shape:?}"
        )));
    }
    Volume3D::from_fn(bbox.extent(), vol.spacing_mm(), |x, y, z| {
        vol.get(bbox.min[0] + x, bbox.min[1] + y, bbox.min[2] + z)
    })
}

/// Crops `vol` to the label's bounding box and resamples it to a cube of
/// `cube_size` voxels per side.
pub fn labelcrop(vol: &Volume3D, mask: &LabelMask, cube_size: usize) -> Result<Volume3D> {
    if vol.shape() != mask.shape() {
        return Err(Error::Geometry(format!(
            "image shape {:?} differs from label shape {:?}",
            vol.shape(),
            mask.shape()
        )));
    }
    if cube_size == 0 {
        return Err(Error::InvalidInput("cube size must be at least 1".into()));
    }
    let bbox = label_bounding_box(mask)?;
    let roi = crop(vol, &bbox)?;
    resample_trilinear(&roi, [cube_size; 3])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(values: &[f32]) -> Volume3D {
        Volume3D::new([values.len(), 1, 1], [1.0; 3], values.to_vec()).unwrap()
    }

    #[test]
    fn identity_is_exact() {
        let v = Volume3D::from_fn([4, 3, 5], [1.0, 2.0, 3.0], |x, y, z| {
            (x * 7 + y * 13 + z * 29) as f32 * 0.1
        })
        .unwrap();
        let r = resample_trilinear(&v, v.shape()).unwrap();
        assert_eq!(r, v);
    }

    #[test]
    fn constant_stays_constant() {
        let v = Volume3D::filled([3, 4, 2], [1.0; 3], 2.5).unwrap();
        for target in [[1, 1, 1], [7, 2, 9], [3, 4, 2]] {
            let r = resample_trilinear(&v, target).unwrap();
            assert!(r.voxels().iter().all(|&x| x == 2.5));
        }
    }

    #[test]
    fn linear_midpoint() {
        let r = resample_trilinear(&line(&[0.0, 10.0]), [3, 1, 1]).unwrap();
        assert_eq!(r.voxels(), &[0.0, 5.0, 10.0]);
    }

    #[test]
    fn extent_preserved() {
        let v = Volume3D::filled([4, 4, 4], [1.5, 1.5, 2.0], 0.0).unwrap();
        let r = resample_trilinear(&v, [8, 2, 4]).unwrap();
        assert_eq!(r.spacing_mm(), [0.75, 3.0, 2.0]);
    }

    #[test]
    fn nearest_tie_rounds_down() {
        let m = LabelMask::new(line(&[0.0, 1.0])).unwrap();
        let r = resample_nearest(&m, [3, 1, 1]).unwrap();
        assert_eq!(r.volume().voxels(), &[0.0, 0.0, 1.0]);
    }

    #[test]
    fn nearest_identity() {
        let m = LabelMask::from_fn([3, 3, 3], [1.0; 3], |x, y, z| (x + y + z) % 2 == 0).unwrap();
        assert_eq!(resample_nearest(&m, [3, 3, 3]).unwrap(), m);
    }

    #[test]
    fn single_voxel_axis_maps_to_zero() {
        let r = resample_trilinear(&line(&[3.0, 9.0]), [1, 1, 1]).unwrap();
        assert_eq!(r.voxels(), &[3.0]);
    }

    #[test]
    fn zero_target_rejected() {
        assert!(matches!(
            resample_trilinear(&line(&[1.0]), [0, 1, 1]),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn window_endpoints() {
        let v = line(&[-57.0, 164.0, -100.0, 500.0]);
        let n = intensity_window_normalize(&v, -57.0, 164.0).unwrap();
        assert_eq!(n.voxels(), &[0.0, 1.0, 0.0, 1.0]);
        let n = intensity_window_normalize(&line(&[2.5]), 0.0, 10.0).unwrap();
        assert_eq!(n.voxels(), &[0.25]);
    }

    #[test]
    fn inverted_window_rejected() {
        assert!(matches!(
            intensity_window_normalize(&line(&[0.0]), 1.0, 1.0),
            Err(Error::InvalidWindow { .. })
        ));
    }

    #[test]
    fn bounding_boxes() {
        let m = LabelMask::from_fn([6, 6, 6], [1.0; 3], |x, y, z| (x, y, z) == (3, 4, 5)).unwrap();
        let b = label_bounding_box(&m).unwrap();
        assert_eq!((b.min, b.max), ([3, 4, 5], [3, 4, 5]));

        let m = LabelMask::from_fn([5, 3, 8], [1.0; 3], |_, _, _| true).unwrap();
        let b = label_bounding_box(&m).unwrap();
        assert_eq!((b.min, b.max), ([0, 0, 0], [4, 2, 7]));

        let m = LabelMask::from_fn([6, 6, 8], [1.0; 3], |x, y, z| {
            (x, y, z) == (1, 1, 1) || (x, y, z) == (4, 2, 7)
        })
        .unwrap();
        let b = label_bounding_box(&m).unwrap();
        assert_eq!((b.min, b.max), ([1, 1, 1], [4, 2, 7]));
    }

    #[test]
    fn empty_label() {
        let m = LabelMask::from_fn([3, 3, 3], [1.0; 3], |_, _, _| false).unwrap();
        assert!(matches!(label_bounding_box(&m), Err(Error::EmptyLabel)));
        let v = Volume3D::filled([3, 3, 3], [1.0; 3], 1.0).unwrap();
        assert!(matches!(labelcrop(&v, &m, 4), Err(Error::EmptyLabel)));
    }

    #[test]
    fn full_mask_labelcrop_is_identity() {
        let v = Volume3D::from_fn([5, 5, 5], [1.0; 3], |x, y, z| (x * y + z) as f32).unwrap();
        let m = LabelMask::from_fn([5, 5, 5], [1.0; 3], |_, _, _| true).unwrap();
        assert_eq!(labelcrop(&v, &m, 5).unwrap(), v);
    }
}
