"""Regenerates the NIfTI-1 golden fixtures with the standard library only.

    python3 make_golden.py
"""
import struct


def nifti(endian, shape, datatype, bitpix, pixdim, slope, inter, payload):
    hdr = bytearray(352)
    struct.pack_into(endian + "i", hdr, 0, 348)
    struct.pack_into(endian + "8h", hdr, 40, 3, *shape, 1, 1, 1, 1)
    struct.pack_into(endian + "h", hdr, 70, datatype)
    struct.pack_into(endian + "h", hdr, 72, bitpix)
    struct.pack_into(endian + "8f", hdr, 76, 1.0, *pixdim, 1.0, 1.0, 1.0, 1.0)
    struct.pack_into(endian + "f", hdr, 108, 352.0)
    struct.pack_into(endian + "f", hdr, 112, slope)
    struct.pack_into(endian + "f", hdr, 116, inter)
    hdr[344:348] = b"n+1\0"
    return bytes(hdr) + payload


# 3 x 2 x 2 int16, little-endian, voxel i stored as i - 3, scaled 2x - 1.
le = nifti("<", (3, 2, 2), 4, 16, (0.5, 0.75, 2.0), 2.0, -1.0,
           struct.pack("<12h", *[i - 3 for i in range(12)]))
open("golden_le_i16.nii", "wb").write(le)

# 2 x 2 x 3 float32, big-endian, zero slope (unscaled).
values = [0.25 * i - 1.0 for i in range(12)]
be = nifti(">", (2, 2, 3), 16, 32, (1.0, 1.25, 3.0), 0.0, 0.0,
           struct.pack(">12f", *values))
open("golden_be_f32.nii", "wb").write(be)
