//! Volume and manifest I/O: a raw voxel format with a JSON sidecar, a
//! single-file NIfTI-1 subset, and dataset manifests.

mod manifest;
mod nifti;
mod raw;

use std::path::Path;

pub use manifest::{DatasetManifest, ManifestItem, Normalization};
pub use nifti::{read_nifti1, read_nifti1_file};
pub use raw::{decode_raw, raw_paths, read_raw, write_raw, RawPaths, RawSidecar};

use crate::error::{Error, Result};
use crate::volume::{LabelMask, Volume3D};

/// Loads a volume from a locator.
///
/// `.nii` paths are parsed as NIfTI-1, `.nii.gz` is rejected, and anything
/// else is treated as a raw-format stem (`<stem>.bin` + `<stem>.json`;
/// either file name is also accepted).
pub fn load_volume(locator: &Path) -> Result<Volume3D> {
    let name = locator
        .file_name()
        .map(|n| n.to_string_lossy().to_ascii_lowercase())
        .unwrap_or_default();
    if name.ends_with(".nii.gz") || name.ends_with(".gz") {
        return Err(Error::UnsupportedFormat(format!(
            "{}: compressed images are not supported",
            locator.display()
        )));
    }
    if name.ends_with(".hdr") || name.ends_with(".img") {
        return Err(Error::UnsupportedFormat(format!(
            "{}: .hdr/.img pairs are not supported, convert to single-file .nii",
            locator.display()
        )));
    }
    if name.ends_with(".nii") {
        return read_nifti1_file(locator);
    }
    let paths = raw_paths(locator);
    read_raw(&paths.payload, &paths.sidecar)
}

/// Loads a label mask, enforcing whole-number voxels.
pub fn load_label(locator: &Path) -> Result<LabelMask> {
    LabelMask::new(load_volume(locator)?)
}
