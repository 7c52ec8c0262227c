use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::Volume3D;

/// Sidecar describing a raw voxel payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawSidecar {
    pub shape: [usize; 3],
    pub spacing_mm: [f64; 3],
    pub dtype: String,
    pub byte_order: String,
}

impl RawSidecar {
    pub fn for_volume(vol: &Volume3D) -> Self {
        Self {
            shape: vol.shape(),
            spacing_mm: vol.spacing_mm(),
            dtype: "f32".to_string(),
            byte_order: "le".to_string(),
        }
    }
}

/// Payload and sidecar file locations of one raw volume.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPaths {
    pub payload: PathBuf,
    pub sidecar: PathBuf,
}

/// Resolves `<stem>.bin` / `<stem>.json`. A locator that already names
/// either file is reduced to its stem first.
pub fn raw_paths(locator: &Path) -> RawPaths {
    let stem = match locator.extension().and_then(|e| e.to_str()) {
        Some("bin") | Some("json") => locator.with_extension(""),
        _ => locator.to_path_buf(),
    };
    let mut payload = stem.clone().into_os_string();
    payload.push(".bin");
    let mut sidecar = stem.into_os_string();
    sidecar.push(".json");
    RawPaths {
        payload: payload.into(),
        sidecar: sidecar.into(),
    }
}

/// Decodes a little-endian float32 payload according to its sidecar.
pub fn decode_raw(payload: &[u8], sidecar: &RawSidecar) -> Result<Volume3D> {
    if sidecar.dtype != "f32" {
        return Err(Error::UnsupportedFormat(format!(
            "raw dtype {:?} (only \"f32\" is supported)",
            sidecar.dtype
        )));
    }
    if sidecar.byte_order != "le" {
        return Err(Error::UnsupportedFormat(format!(
            "raw byte_order {:?} (only \"le\" is supported)",
            sidecar.byte_order
        )));
    }
    let count = sidecar
        .shape
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| Error::CorruptPayload(format!("shape {:?} overflows", sidecar.shape)))?;
    if payload.len() != count {
        return Err(Error::CorruptPayload(format!(
            "shape {:?} needs {count} bytes, payload has {}",
            sidecar.shape,
            payload.len()
        )));
    }
    let voxels = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    Volume3D::new(sidecar.shape, sidecar.spacing_mm, voxels)
}

/// Reads a raw volume from its payload and sidecar files.
pub fn read_raw(payload_path: &Path, sidecar_path: &Path) -> Result<Volume3D> {
    let text = fs::read_to_string(sidecar_path).map_err(|e| Error::io(sidecar_path, e))?;
    let sidecar: RawSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::json(sidecar_path.display().to_string(), e))?;
    let payload = fs::read(payload_path).map_err(|e| Error::io(payload_path, e))?;
    decode_raw(&payload, &sidecar)
}

/// Writes `<stem>.bin` and `<stem>.json`.
pub fn write_raw(vol: &Volume3D, locator: &Path) -> Result<RawPaths> {
    let paths = raw_paths(locator);
    let mut payload = Vec::with_capacity(vol.len() * 4);
    for v in vol.voxels() {
        payload.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&paths.payload, payload).map_err(|e| Error::io(&paths.payload, e))?;
    let sidecar = serde_json::to_string_pretty(&RawSidecar::for_volume(vol))
        .map_err(|e| Error::json("raw sidecar", e))?;
    fs::write(&paths.sidecar, sidecar).map_err(|e| Error::io(&paths.sidecar, e))?;
    Ok(paths)
}
