//! Reader for the single-file, uncompressed NIfTI-1 subset.
//!
//! Only the fields needed to recover a 3D scalar grid are interpreted:
//! `dim`, `datatype`, `pixdim[1..=3]`, `vox_offset`, `scl_slope`,
//! `scl_inter` and `magic`. Orientation (qform/sform) is ignored.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::volume::Volume3D;

const HEADER_SIZE: i32 = 348;
const MIN_FILE_SIZE: usize = 352;

mod offset {
    pub const SIZEOF_HDR: usize = 0;
    pub const DIM: usize = 40;
    pub const DATATYPE: usize = 70;
    pub const PIXDIM: usize = 76;
    pub const VOX_OFFSET: usize = 108;
    pub const SCL_SLOPE: usize = 112;
    pub const SCL_INTER: usize = 116;
    pub const MAGIC: usize = 344;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Endian {
    Little,
    Big,
}

impl Endian {
    fn bytes<const N: usize>(self, buf: &[u8], at: usize) -> [u8; N] {
        let mut out = [0u8; N];
        out.copy_from_slice(&buf[at..at + N]);
        if self == Endian::Big {
            out.reverse();
        }
        out
    }

    fn i16(self, buf: &[u8], at: usize) -> i16 {
        i16::from_le_bytes(self.bytes(buf, at))
    }

    fn i32(self, buf: &[u8], at: usize) -> i32 {
        i32::from_le_bytes(self.bytes(buf, at))
    }

    fn f32(self, buf: &[u8], at: usize) -> f32 {
        f32::from_le_bytes(self.bytes(buf, at))
    }

    fn f64(self, buf: &[u8], at: usize) -> f64 {
        f64::from_le_bytes(self.bytes(buf, at))
    }
}

#[derive(Debug, Clone, Copy)]
enum DataType {
    U8,
    I16,
    I32,
    F32,
    F64,
}

impl DataType {
    fn from_code(code: i16) -> Result<Self> {
        Ok(match code {
            2 => DataType::U8,
            4 => DataType::I16,
            8 => DataType::I32,
            16 => DataType::F32,
            64 => DataType::F64,
            other => {
                return Err(Error::UnsupportedFormat(format!(
                    "NIfTI datatype code {other}"
                )))
            }
        })
    }

    fn width(self) -> usize {
        match self {
            DataType::U8 => 1,
            DataType::I16 => 2,
            DataType::I32 | DataType::F32 => 4,
            DataType::F64 => 8,
        }
    }

    fn read(self, endian: Endian, buf: &[u8], at: usize) -> f64 {
        match self {
            DataType::U8 => f64::from(buf[at]),
            DataType::I16 => f64::from(endian.i16(buf, at)),
            DataType::I32 => f64::from(endian.i32(buf, at)),
            DataType::F32 => f64::from(endian.f32(buf, at)),
            DataType::F64 => endian.f64(buf, at),
        }
    }
}

/// Parses a NIfTI-1 byte stream into a volume.
///
/// Endianness is inferred from `sizeof_hdr`. Voxels are scaled by
/// `scl_slope`/`scl_inter`, with a zero slope meaning "unscaled".
pub fn read_nifti1(bytes: &[u8]) -> Result<Volume3D> {
    if bytes.len() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b {
        return Err(Error::UnsupportedFormat(
            "gzip-compressed NIfTI is not supported".into(),
        ));
    }
    if bytes.len() < MIN_FILE_SIZE {
        return Err(Error::NotNifti(format!(
            "{} bytes is shorter than a NIfTI-1 header",
            bytes.len()
        )));
    }

    let endian = if Endian::Little.i32(bytes, offset::SIZEOF_HDR) == HEADER_SIZE {
        Endian::Little
    } else if Endian::Big.i32(bytes, offset::SIZEOF_HDR) == HEADER_SIZE {
        Endian::Big
    } else {
        return Err(Error::NotNifti("sizeof_hdr is not 348".into()));
    };

    match &bytes[offset::MAGIC..offset::MAGIC + 4] {
        b"n+1\0" => {}
        b"ni1\0" => {
            return Err(Error::UnsupportedFormat(
                "header-only NIfTI (.hdr/.img pair) is not supported".into(),
            ))
        }
        other => return Err(Error::NotNifti(format!("bad magic {other:?}"))),
    }

    let ndim = endian.i16(bytes, offset::DIM);
    if ndim != 3 {
        return Err(Error::Dimensionality(ndim));
    }
    let mut shape = [0usize; 3];
    for (axis, extent) in shape.iter_mut().enumerate() {
        let d = endian.i16(bytes, offset::DIM + 2 * (axis + 1));
        if d < 1 {
            return Err(Error::Geometry(format!("dim[{}] = {d}", axis + 1)));
        }
        *extent = d as usize;
    }

    let datatype = DataType::from_code(endian.i16(bytes, offset::DATATYPE))?;

    let mut spacing = [0f64; 3];
    for (axis, s) in spacing.iter_mut().enumerate() {
        *s = f64::from(endian.f32(bytes, offset::PIXDIM + 4 * (axis + 1)));
    }

    let vox_offset = endian.f32(bytes, offset::VOX_OFFSET);
    if !(vox_offset.is_finite() && vox_offset >= HEADER_SIZE as f32) {
        return Err(Error::CorruptPayload(format!("vox_offset {vox_offset}")));
    }
    let start = vox_offset as usize;

    let mut slope = f64::from(endian.f32(bytes, offset::SCL_SLOPE));
    let mut inter = f64::from(endian.f32(bytes, offset::SCL_INTER));
    if slope == 0.0 || !slope.is_finite() {
        slope = 1.0;
    }
    if !inter.is_finite() {
        inter = 0.0;
    }

    let count = shape[0] * shape[1] * shape[2];
    let needed = count * datatype.width();
    if bytes.len() < start + needed {
        return Err(Error::CorruptPayload(format!(
            "image data needs {needed} bytes from offset {start}, file has {}",
            bytes.len()
        )));
    }

    let width = datatype.width();
    let voxels = (0..count)
        .map(|i| (datatype.read(endian, bytes, start + i * width) * slope + inter) as f32)
        .collect();
    Volume3D::new(shape, spacing, voxels)
}

pub fn read_nifti1_file(path: &Path) -> Result<Volume3D> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_nifti1(&bytes)
}
