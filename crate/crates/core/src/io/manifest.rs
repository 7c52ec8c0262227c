use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::{LabelMask, Volume3D};

/// Intensity window applied before any measure, in input units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestItem {
    pub id: String,
    pub image: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<String>,
}

/// A list of image/label pairs plus the intensity policy shared by all of them.
///
/// Locators are resolved relative to the directory holding the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub items: Vec<ManifestItem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(skip)]
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(
        items: Vec<ManifestItem>,
        normalization: Option<Normalization>,
        base_dir: impl Into<PathBuf>,
    ) -> Result<Self> {
        let manifest = Self {
            items,
            normalization,
            base_dir: base_dir.into(),
        };
        manifest.check_ids()?;
        Ok(manifest)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut manifest: DatasetManifest = serde_json::from_str(&text)
            .map_err(|e| Error::json(path.display().to_string(), e))?;
        manifest.base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_default();
        manifest.check_ids()?;
        Ok(manifest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text =
            serde_json::to_string_pretty(self).map_err(|e| Error::json("manifest", e))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn base_dir(&self) -> &Path {
        &self.base_dir
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.items.iter().map(|i| i.id.clone()).collect()
    }

    pub fn resolve(&self, locator: &str) -> PathBuf {
        let p = Path::new(locator);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    /// Loads the image and label of item `index`; errors carry the item id.
    pub fn load_item(&self, index: usize) -> Result<(Volume3D, LabelMask)> {
        let item = &self.items[index];
        let load = || -> Result<(Volume3D, LabelMask)> {
            let image = super::load_volume(&self.resolve(&item.image))?;
            let label = super::load_label(&self.resolve(&item.label))?;
            if !image.same_geometry(label.volume()) {
                return Err(Error::Geometry(format!(
                    "label geometry {:?}/{:?} differs from image {:?}/{:?}",
                    label.shape(),
                    label.volume().spacing_mm(),
                    image.shape(),
                    image.spacing_mm()
                )));
            }
            Ok((image, label))
        };
        load().map_err(|e| e.for_item(&item.id))
    }

    /// Loads every item, checking that each label matches its image.
    pub fn validate(&self) -> Result<()> {
        for i in 0..self.items.len() {
            self.load_item(i)?;
        }
        Ok(())
    }

    fn check_ids(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for item in &self.items {
            if !seen.insert(item.id.as_str()) {
                return Err(Error::Manifest(format!("duplicate item id {:?}", item.id)));
            }
        }
        if let Some(n) = self.normalization {
            if !(n.lo < n.hi) {
                return Err(Error::InvalidWindow { lo: n.lo, hi: n.hi });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_documented_schema() {
        let text = r#"{"items":[{"id":"a","image":"img/a","label":"lab/a"},
            {"id":"b","image":"img/b","label":"lab/b","split":"train"}],
            "normalization":{"lo":-57,"hi":164}}"#;
        let m: DatasetManifest = serde_json::from_str(text).unwrap();
        assert_eq!(m.items.len(), 2);
        assert_eq!(m.items[1].split.as_deref(), Some("train"));
        assert_eq!(m.normalization, Some(Normalization { lo: -57.0, hi: 164.0 }));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let item = ManifestItem {
            id: "x".into(),
            image: "i".into(),
            label: "l".into(),
            split: None,
        };
        let err = DatasetManifest::new(vec![item.clone(), item], None, ".").unwrap_err();
        assert!(matches!(err, Error::Manifest(_)));
    }

    #[test]
    fn label_geometry_must_match() {
        let dir = tempfile::tempdir().unwrap();
        let img = Volume3D::filled([2, 2, 2], [1.0; 3], 1.0).unwrap();
        let lab = Volume3D::filled([2, 2, 3], [1.0; 3], 1.0).unwrap();
        super::super::write_raw(&img, &dir.path().join("img")).unwrap();
        super::super::write_raw(&lab, &dir.path().join("lab")).unwrap();
        let m = DatasetManifest::new(
            vec![ManifestItem {
                id: "case1".into(),
                image: "img".into(),
                label: "lab".into(),
                split: None,
            }],
            None,
            dir.path(),
        )
        .unwrap();
        let err = m.validate().unwrap_err();
        assert!(err.to_string().contains("case1"), "{err}");
        assert!(matches!(err, Error::Item { .. }));
    }
}
