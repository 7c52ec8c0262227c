//! Deterministic synthetic datasets: one textured ellipsoid "organ" per item
//! over a noisy background, grouped into intensity families.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{write_raw, DatasetManifest, ManifestItem, Normalization};
use crate::seed::{self, derive_seed};
use crate::volume::{LabelMask, Shape, Volume3D};

pub const SYNTH_WINDOW: Normalization = Normalization {
    lo: -57.0,
    hi: 164.0,
};
pub const MIN_EXTENT: usize = 8;

/// Stream offset for family geometry, above any item index.
const FAMILY_STREAM: u64 = 1 << 40;
/// Sub-stream of an item seed used for voxel noise.
const NOISE_STREAM: u64 = 1;

/// Intensity profile of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProfileId {
    A,
    B,
    C,
    D,
}

impl ProfileId {
    pub const ALL: [ProfileId; 4] = [ProfileId::A, ProfileId::B, ProfileId::C, ProfileId::D];

    pub fn profile(self) -> IntensityProfile {
        let (organ, background, period) = match self {
            ProfileId::A => (100.0, -40.0, 4),
            ProfileId::B => (30.0, 140.0, 3),
            ProfileId::C => (150.0, 10.0, 6),
            ProfileId::D => (-20.0, 60.0, 2),
        };
        IntensityProfile {
            organ_level: organ,
            background_level: background,
            texture_period: period,
            texture_amplitude: 15.0,
        }
    }
}

impl fmt::Display for ProfileId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ProfileId::A => "A",
            ProfileId::B => "B",
            ProfileId::C => "C",
            ProfileId::D => "D",
        };
        f.write_str(s)
    }
}

impl FromStr for ProfileId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ProfileId::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown intensity profile {s:?}")))
    }
}

/// Piecewise-constant intensities: two levels plus a checkerboard texture of
/// `texture_period` voxels, all before noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityProfile {
    pub organ_level: f32,
    pub background_level: f32,
    pub texture_period: usize,
    pub texture_amplitude: f32,
}

impl IntensityProfile {
    pub fn value(&self, inside: bool, x: usize, y: usize, z: usize) -> f32 {
        let p = self.texture_period;
        let sign = if (x / p + y / p + z / p).is_multiple_of(2) { 1.0 } else { -1.0 };
        let level = if inside {
            self.organ_level
        } else {
            self.background_level
        };
        level + sign * self.texture_amplitude
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    pub count: usize,
    pub profile: ProfileId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n_items: usize,
    pub shape: Shape,
    pub families: Vec<Family>,
    /// Scale of per-item perturbations: voxels of geometry shift and
    /// twice that in intensity noise standard deviation.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self::duplicate_family(12, 0)
    }
}

impl SynthConfig {
    /// `n - 2` near-duplicates of profile A plus singletons of B and C.
    /// Fewer than three items are all profile A.
    pub fn duplicate_family(n_items: usize, seed: u64) -> Self {
        let families = if n_items >= 3 {
            vec![
                Family {
                    count: n_items - 2,
                    profile: ProfileId::A,
                },
                Family {
                    count: 1,
                    profile: ProfileId::B,
                },
                Family {
                    count: 1,
                    profile: ProfileId::C,
                },
            ]
        } else {
            vec![Family {
                count: n_items,
                profile: ProfileId::A,
            }]
        };
        Self {
            n_items,
            shape: [32; 3],
            families,
            jitter: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_items == 0 {
            return Err(Error::InvalidInput("n_items must be at least 1".into()));
        }
        let total: usize = self.families.iter().map(|f| f.count).sum();
        if total != self.n_items {
            return Err(Error::InvalidInput(format!(
                "family counts sum to {total}, expected {}",
                self.n_items
            )));
        }
        if self.shape.iter().any(|&n| n < MIN_EXTENT) {
            return Err(Error::InvalidInput(format!(
                "shape {:?} is smaller than {MIN_EXTENT} along some axis",
                self.shape
            )));
        }
        if !(self.jitter.is_finite() && self.jitter >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "jitter must be non-negative, got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    /// Family index of every item, in item order.
    fn family_of(&self) -> Vec<usize> {
        self.families
            .iter()
            .enumerate()
            .flat_map(|(f, fam)| std::iter::repeat_n(f, fam.count))
            .collect()
    }
}

/// Axis-aligned ellipsoid in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub center: [f64; 3],
    pub radii: [f64; 3],
}

impl Ellipsoid {
    pub fn contains(&self, x: usize, y: usize, z: usize) -> bool {
        let p = [x as f64, y as f64, z as f64];
        let mut sum = 0.0;
        for axis in 0..3 {
            let d = (p[axis] - self.center[axis]) / self.radii[axis];
            sum += d * d;
        }
        sum <= 1.0
    }
}

fn family_geometry(cfg: &SynthConfig, family: usize) -> Ellipsoid {
    let mut rng = seed::rng(derive_seed(cfg.seed, FAMILY_STREAM + family as u64));
    let mut center = [0.0; 3];
    let mut radii = [0.0; 3];
    for axis in 0..3 {
        let n = cfg.shape[axis] as f64;
        radii[axis] = rng.random_range(0.15 * n..=0.3 * n);
        let margin = radii[axis] + 1.0;
        center[axis] = rng.random_range(margin..=n - 1.0 - margin);
    }
    Ellipsoid { center, radii }
}

/// Ellipsoid of item `index` after family geometry and per-item jitter.
pub fn item_ellipsoid(cfg: &SynthConfig, index: usize) -> Result<Ellipsoid> {
    cfg.validate()?;
    let family = *cfg
        .family_of()
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("item {index} out of range")))?;
    Ok(jittered(cfg, index, family_geometry(cfg, family)))
}

fn jittered(cfg: &SynthConfig, index: usize, base: Ellipsoid) -> Ellipsoid {
    let mut rng = seed::rng(derive_seed(cfg.seed, index as u64));
    let mut e = base;
    if cfg.jitter == 0.0 {
        return e;
    }
    for axis in 0..3 {
        let n = cfg.shape[axis] as f64;
        let dr = rng.random_range(-cfg.jitter..=cfg.jitter);
        e.radii[axis] = (e.radii[axis] + dr).clamp(0.15 * n, 0.3 * n);
        let dc = rng.random_range(-cfg.jitter..=cfg.jitter);
        let margin = e.radii[axis] + 1.0;
        e.center[axis] = (e.center[axis] + dc).clamp(margin, n - 1.0 - margin);
    }
    e
}

/// Image and label of item `index`, in memory.
pub fn generate_item(cfg: &SynthConfig, index: usize) -> Result<(Volume3D, LabelMask)> {
    let ellipsoid = item_ellipsoid(cfg, index)?;
    let profile = cfg.families[cfg.family_of()[index]].profile.profile();
    let mut rng = seed::rng(derive_seed(derive_seed(cfg.seed, index as u64), NOISE_STREAM));
    let sigma = 2.0 * cfg.jitter;
    let noise = Normal::new(0.0, sigma)
        .map_err(|e| Error::InvalidInput(format!("noise distribution: {e}")))?;
    let spacing = [1.0; 3];
    let image = Volume3D::from_fn(cfg.shape, spacing, |x, y, z| {
        let clean = profile.value(ellipsoid.contains(x, y, z), x, y, z);
        if sigma > 0.0 {
            clean + noise.sample(&mut rng) as f32
        } else {
            clean
        }
    })?;
    let label = LabelMask::from_fn(cfg.shape, spacing, |x, y, z| ellipsoid.contains(x, y, z))?;
    Ok((image, label))
}

pub fn item_id(index: usize) -> String {
    format!("item{index:03}")
}

/// Writes every item as raw volumes under `out_dir/images` and
/// `out_dir/labels`, plus `out_dir/manifest.json`.
pub fn gen_synthetic_dataset(cfg: &SynthConfig, out_dir: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    for sub in ["images", "labels"] {
        let dir = out_dir.join(sub);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    }
    let items = (0..cfg.n_items)
        .into_par_iter()
        .map(|i| {
            let (image, label) = generate_item(cfg, i)?;
            let id = item_id(i);
            let image_loc = format!("images/{id}");
            let label_loc = format!("labels/{id}");
            write_raw(&image, &out_dir.join(&image_loc))?;
            write_raw(label.volume(), &out_dir.join(&label_loc))?;
            Ok(ManifestItem {
                id,
                image: image_loc,
                label: label_loc,
                split: None,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest::new(items, Some(SYNTH_WINDOW), out_dir)?;
    manifest.save(&out_dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(SynthConfig::default().validate().is_ok());
        let mut c = SynthConfig::default();
        c.n_items = 11;
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.shape = [7, 32, 32];
        assert!(c.validate().is_err());
        let mut c = SynthConfig::default();
        c.jitter = -1.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn deterministic_and_nonempty() {
        let cfg = SynthConfig::duplicate_family(4, 9);
        for i in 0..4 {
            let (a, la) = generate_item(&cfg, i).unwrap();
            let (b, lb) = generate_item(&cfg, i).unwrap();
            assert_eq!(a, b);
            assert_eq!(la, lb);
            assert!(la.count_nonzero() > 0);
        }
    }

    #[test]
    fn zero_jitter_duplicates_are_identical() {
        let mut cfg = SynthConfig::duplicate_family(5, 3);
        cfg.jitter = 0.0;
        assert_eq!(generate_item(&cfg, 0).unwrap(), generate_item(&cfg, 2).unwrap());
        assert_ne!(generate_item(&cfg, 0).unwrap(), generate_item(&cfg, 4).unwrap());
    }

    #[test]
    fn smallest_shape_still_has_an_organ() {
        let mut cfg = SynthConfig::duplicate_family(3, 1);
        cfg.shape = [8; 3];
        cfg.jitter = 5.0;
        for i in 0..3 {
            assert!(generate_item(&cfg, i).unwrap().1.count_nonzero() > 0);
        }
    }

    #[test]
    fn profile_ids_parse() {
        assert_eq!("b".parse::<ProfileId>().unwrap(), ProfileId::B);
        assert!("Z".parse::<ProfileId>().is_err());
    }
}
