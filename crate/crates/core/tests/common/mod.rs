//! Reference implementations and fixtures shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use proxyhpo::seed;
use proxyhpo::trainer::{HyperParams, Optimizer, TrialSpec};
use proxyhpo::{UNetSpec, Volume3D};
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Random volume whose values come from a few regimes: continuous uniform,
/// a handful of discrete levels, or a constant.
pub fn random_volume(rng: &mut seed::Rng, shape: [usize; 3]) -> Volume3D {
    let n = shape.iter().product();
    let regime = rng.random_range(0..10);
    let voxels: Vec<f32> = match regime {
        0 => vec![rng.random_range(-5.0..5.0); n],
        1..=3 => {
            let levels = rng.random_range(2..6);
            (0..n)
                .map(|_| rng.random_range(0..levels) as f32 * 1.5 - 2.0)
                .collect()
        }
        _ => {
            let scale = rng.random_range(0.1f32..100.0);
            (0..n).map(|_| rng.random_range(-scale..scale)).collect()
        }
    };
    Volume3D::new(shape, [1.0; 3], voxels).unwrap()
}

/// Continuous uniform volume on `[-1, 1)`.
pub fn uniform_volume(rng: &mut seed::Rng, shape: [usize; 3]) -> Volume3D {
    let n = shape.iter().product();
    let voxels = (0..n).map(|_| rng.random_range(-1.0f32..1.0)).collect();
    Volume3D::new(shape, [1.0; 3], voxels).unwrap()
}

fn reference_bins(v: &Volume3D, bins: usize) -> Vec<usize> {
    let vals: Vec<f64> = v.voxels().iter().map(|&x| f64::from(x)).collect();
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    vals.iter()
        .map(|&x| {
            if hi == lo {
                0
            } else {
                let b = ((x - lo) / (hi - lo) * bins as f64).floor() as usize;
                if b >= bins {
                    bins - 1
                } else {
                    b
                }
            }
        })
        .collect()
}

/// Joint-histogram mutual information evaluated term by term in natural log.
pub fn reference_mi(a: &Volume3D, b: &Volume3D, bins: usize) -> f64 {
    let ia = reference_bins(a, bins);
    let ib = reference_bins(b, bins);
    let n = ia.len() as f64;
    let mut joint = vec![vec![0.0f64; bins]; bins];
    for (&i, &j) in ia.iter().zip(&ib) {
        joint[i][j] += 1.0;
    }
    let pa: Vec<f64> = (0..bins).map(|i| joint[i].iter().sum::<f64>() / n).collect();
    let pb: Vec<f64> = (0..bins)
        .map(|j| (0..bins).map(|i| joint[i][j]).sum::<f64>() / n)
        .collect();
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let p = joint[i][j] / n;
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi
}

/// Marginal entropy under the same binning.
pub fn reference_entropy(a: &Volume3D, bins: usize) -> f64 {
    let ia = reference_bins(a, bins);
    let n = ia.len() as f64;
    let mut counts = vec![0.0f64; bins];
    for i in ia {
        counts[i] += 1.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| -(c / n) * (c / n).ln())
        .sum()
}

/// Per-voxel two-pass local NCC over truncated windows.
pub fn reference_ncc(a: &Volume3D, b: &Volume3D, window: [usize; 3]) -> f64 {
    let [nx, ny, nz] = a.shape();
    let r = [window[0] / 2, window[1] / 2, window[2] / 2];
    let mut total = 0.0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let mut va = Vec::new();
                let mut vb = Vec::new();
                for zz in z.saturating_sub(r[2])..=(z + r[2]).min(nz - 1) {
                    for yy in y.saturating_sub(r[1])..=(y + r[1]).min(ny - 1) {
                        for xx in x.saturating_sub(r[0])..=(x + r[0]).min(nx - 1) {
                            va.push(f64::from(a.get(xx, yy, zz)));
                            vb.push(f64::from(b.get(xx, yy, zz)));
                        }
                    }
                }
                let m = va.len() as f64;
                let ma = va.iter().sum::<f64>() / m;
                let mb = vb.iter().sum::<f64>() / m;
                let (mut cov, mut sa, mut sb) = (0.0, 0.0, 0.0);
                for (p, q) in va.iter().zip(&vb) {
                    cov += (p - ma) * (q - mb);
                    sa += (p - ma) * (p - ma);
                    sb += (q - mb) * (q - mb);
                }
                if sa >= 1e-12 && sb >= 1e-12 {
                    total += cov * cov / (sa * sb);
                }
            }
        }
    }
    total / (nx * ny * nz) as f64
}

/// Indices of the `budget` smallest scores by a full sort, ascending.
pub fn reference_selection(scores: &[f64], budget: usize) -> Vec<usize> {
    let mut pairs: Vec<(f64, usize)> = scores.iter().cloned().zip(0..).collect();
    pairs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<usize> = pairs[..budget].iter().map(|p| p.1).collect();
    out.sort();
    out
}

/// Little- or big-endian NIfTI-1 single file with float32 payload.
pub fn nifti_f32(big_endian: bool, shape: [i16; 3], spacing: [f32; 3], values: &[f32]) -> Vec<u8> {
    nifti_bytes(big_endian, shape, spacing, 16, 0.0, 0.0, &{
        let mut p = Vec::new();
        for v in values {
            p.extend(if big_endian { v.to_be_bytes() } else { v.to_le_bytes() });
        }
        p
    })
}

/// Raw NIfTI-1 builder; `payload` is already encoded in the chosen byte order.
pub fn nifti_bytes(
    big_endian: bool,
    shape: [i16; 3],
    spacing: [f32; 3],
    datatype: i16,
    slope: f32,
    inter: f32,
    payload: &[u8],
) -> Vec<u8> {
    let mut h = vec![0u8; 352];
    let put = |h: &mut Vec<u8>, at: usize, bytes: &[u8]| {
        let mut b = bytes.to_vec();
        if big_endian {
            b.reverse();
        }
        h[at..at + b.len()].copy_from_slice(&b);
    };
    put(&mut h, 0, &348i32.to_le_bytes());
    let dims = [3, shape[0], shape[1], shape[2], 1, 1, 1, 1];
    for (k, d) in dims.iter().enumerate() {
        put(&mut h, 40 + 2 * k, &d.to_le_bytes());
    }
    put(&mut h, 70, &datatype.to_le_bytes());
    let pix = [1.0, spacing[0], spacing[1], spacing[2], 1.0, 1.0, 1.0, 1.0f32];
    for (k, p) in pix.iter().enumerate() {
        put(&mut h, 76 + 4 * k, &p.to_le_bytes());
    }
    put(&mut h, 108, &352f32.to_le_bytes());
    put(&mut h, 112, &slope.to_le_bytes());
    put(&mut h, 116, &inter.to_le_bytes());
    h[344..348].copy_from_slice(b"n+1\0");
    h.extend_from_slice(payload);
    h
}

pub fn trial_spec(trial_id: &str, network: UNetSpec) -> TrialSpec {
    TrialSpec {
        trial_id: trial_id.into(),
        seed: 17,
        hyperparams: HyperParams {
            optimizer: Optimizer::Adamax,
            learning_rate: 0.0006,
            intensity_shift_prob: 0.4,
        },
        network,
        train_items: vec!["item000".into(), "item001".into()],
        val_items: vec!["item002".into()],
        manifest: Some("manifest.json".into()),
        max_steps: 300,
        gpu_hours: 0.125,
    }
}
