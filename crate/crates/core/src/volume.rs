//! In-memory 3D scalar fields.

use crate::error::{Error, Result};

/// Voxel grid dimensions `(nx, ny, nz)`.
pub type Shape = [usize; 3];

/// A 3D scalar field with physical voxel spacing.
///
/// Voxels are stored x-fastest: the voxel at `(x, y, z)` lives at
/// `x + nx * (y + ny * z)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3D {
    shape: Shape,
    spacing_mm: [f64; 3],
    voxels: Vec<f32>,
}

impl Volume3D {
    /// Builds a volume, rejecting zero extents, non-positive spacing,
    /// a voxel count that disagrees with the shape, and NaN/Inf voxels.
    pub fn new(shape: Shape, spacing_mm: [f64; 3], voxels: Vec<f32>) -> Result<Self> {
        validate_geometry(shape, spacing_mm)?;
        let expected = voxel_count(shape)?;
        if voxels.len() != expected {
            return Err(Error::Geometry(format!(
                "shape {shape:?} needs {expected} voxels, got {}",
                voxels.len()
            )));
        }
        if let Some(idx) = voxels.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteVoxel(idx));
        }
        Ok(Self {
            shape,
            spacing_mm,
            voxels,
        })
    }

    /// A volume with every voxel set to `value`.
    pub fn filled(shape: Shape, spacing_mm: [f64; 3], value: f32) -> Result<Self> {
        let n = voxel_count(shape)?;
        Self::new(shape, spacing_mm, vec![value; n])
    }

    /// Builds a volume by evaluating `f(x, y, z)` at every voxel.
    pub fn from_fn(
        shape: Shape,
        spacing_mm: [f64; 3],
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let n = voxel_count(shape)?;
        let mut voxels = Vec::with_capacity(n);
        for z in 0..shape[2] {
            for y in 0..shape[1] {
                for x in 0..shape[0] {
                    voxels.push(f(x, y, z));
                }
            }
        }
        Self::new(shape, spacing_mm, voxels)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn spacing_mm(&self) -> [f64; 3] {
        self.spacing_mm
    }

    pub fn voxels(&self) -> &[f32] {
        &self.voxels
    }

    pub fn into_voxels(self) -> Vec<f32> {
        self.voxels
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.shape[0] * (y + self.shape[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> f32 {
        self.voxels[self.index(x, y, z)]
    }

    /// Smallest and largest voxel value.
    pub fn min_max(&self) -> (f32, f32) {
        self.voxels
            .iter()
            .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Applies `f` to every voxel, keeping the geometry.
    pub fn map(&self, f: impl Fn(f32) -> f32) -> Result<Self> {
        Self::new(
            self.shape,
            self.spacing_mm,
            self.voxels.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn same_geometry(&self, other: &Volume3D) -> bool {
        self.shape == other.shape && self.spacing_mm == other.spacing_mm
    }
}

/// An integer-valued annotation sharing the geometry of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMask(Volume3D);

impl LabelMask {
    /// Wraps a volume whose voxels are all non-negative whole numbers.
    pub fn new(volume: Volume3D) -> Result<Self> {
        if let Some(idx) = volume
            .voxels()
            .iter()
            .position(|&v| v < 0.0 || v.fract() != 0.0)
        {
            return Err(Error::InvalidInput(format!(
                "label voxel {idx} is {} (labels must be non-negative integers)",
                volume.voxels()[idx]
            )));
        }
        Ok(Self(volume))
    }

    /// Builds a binary mask from a predicate over voxel coordinates.
    pub fn from_fn(
        shape: Shape,
        spacing_mm: [f64; 3],
        mut inside: impl FnMut(usize, usize, usize) -> bool,
    ) -> Result<Self> {
        let vol = Volume3D::from_fn(shape, spacing_mm, |x, y, z| {
            if inside(x, y, z) {
                1.0
            } else {
                0.0
            }
        })?;
        Ok(Self(vol))
    }

    pub fn volume(&self) -> &Volume3D {
        &self.0
    }

    pub fn into_volume(self) -> Volume3D {
        self.0
    }

    pub fn shape(&self) -> Shape {
        self.0.shape()
    }

    pub fn is_set(&self, x: usize, y: usize, z: usize) -> bool {
        self.0.get(x, y, z) != 0.0
    }

    pub fn count_nonzero(&self) -> usize {
        self.0.voxels().iter().filter(|&&v| v != 0.0).count()
    }
}

pub(crate) fn validate_geometry(shape: Shape, spacing_mm: [f64; 3]) -> Result<()> {
    if shape.contains(&0) {
        return Err(Error::Geometry(format!(
            "shape {shape:?} has a zero extent"
        )));
    }
    if spacing_mm.iter().any(|&s| !(s.is_finite() && s > 0.0)) {
        return Err(Error::Geometry(format!(
            "spacing {spacing_mm:?} must be positive and finite"
        )));
    }
    Ok(())
}

pub(crate) fn voxel_count(shape: Shape) -> Result<usize> {
    shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| Error::Geometry(format!("shape {shape:?} overflows")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_wrong_voxel_count() {
        let err = Volume3D::new([2, 2, 2], [1.0; 3], vec![0.0; 7]).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn rejects_non_positive_spacing() {
        assert!(Volume3D::new([1, 1, 1], [1.0, 0.0, 1.0], vec![0.0]).is_err());
        assert!(Volume3D::new([1, 1, 1], [1.0, -2.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn rejects_nan_and_inf() {
        let err = Volume3D::new([2, 1, 1], [1.0; 3], vec![0.0, f32::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFiniteVoxel(1)));
        assert!(Volume3D::new([1, 1, 1], [1.0; 3], vec![f32::INFINITY]).is_err());
    }

    #[test]
    fn x_fastest_indexing() {
        let v = Volume3D::from_fn([3, 4, 5], [1.0; 3], |x, y, z| (x + 10 * y + 100 * z) as f32)
            .unwrap();
        for z in 0..5 {
            for y in 0..4 {
                for x in 0..3 {
                    assert_eq!(v.voxels()[x + 3 * (y + 4 * z)], v.get(x, y, z));
                    assert_eq!(v.get(x, y, z), (x + 10 * y + 100 * z) as f32);
                }
            }
        }
    }

    #[test]
    fn label_mask_requires_whole_numbers() {
        let vol = Volume3D::new([2, 1, 1], [1.0; 3], vec![0.0, 0.5]).unwrap();
        assert!(LabelMask::new(vol).is_err());
        let vol = Volume3D::new([2, 1, 1], [1.0; 3], vec![0.0, -1.0]).unwrap();
        assert!(LabelMask::new(vol).is_err());
        let vol = Volume3D::new([2, 1, 1], [1.0; 3], vec![0.0, 3.0]).unwrap();
        assert_eq!(LabelMask::new(vol).unwrap().count_nonzero(), 1);
    }
}
