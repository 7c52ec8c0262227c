//! Pairwise importance measures and proxy-data selection.
//!
//! Every item is first brought onto a shared canonical cube (after the
//! manifest's intensity window), either from the whole volume or from the
//! label bounding box. The pairwise matrix is filled once per unordered pair
//! and an item's importance is its mean measure against all items, itself
//! included. Items with the lowest importance are kept as proxy data.

mod mi;
mod ncc;
mod selection;

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use mi::{mutual_information, mutual_information_base, LogBase};
pub use ncc::{local_ncc, DEGENERATE_VARIANCE};
pub use selection::{select_proxy, select_random, split_fifty_fifty, SelectionConfig};

use crate::error::{Error, Result};
use crate::io::{DatasetManifest, Normalization};
use crate::preprocess::{intensity_window_normalize, labelcrop, resample_trilinear};
use crate::volume::{LabelMask, Volume3D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    Mi,
    Ncc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoiMode {
    WholeVolume,
    Labelcrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureConfig {
    pub kind: MeasureKind,
    pub roi_mode: RoiMode,
    pub mi_bins: usize,
    pub ncc_window: [usize; 3],
    pub canonical_cube: usize,
    #[serde(default)]
    pub log_base: LogBase,
}

impl MeasureConfig {
    pub fn new(kind: MeasureKind, roi_mode: RoiMode) -> Self {
        Self {
            kind,
            roi_mode,
            mi_bins: 32,
            ncc_window: [9, 9, 9],
            canonical_cube: 64,
            log_base: LogBase::Natural,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mi_bins < 2 {
            return Err(Error::InvalidInput(format!(
                "mi_bins must be at least 2, got {}",
                self.mi_bins
            )));
        }
        if self.ncc_window.iter().any(|&w| w < 3 || w % 2 == 0) {
            return Err(Error::InvalidInput(format!(
                "ncc_window components must be odd and >= 3, got {:?}",
                self.ncc_window
            )));
        }
        if self.canonical_cube == 0 {
            return Err(Error::InvalidInput("canonical_cube must be positive".into()));
        }
        Ok(())
    }

    /// Evaluates the configured measure on two prepared volumes.
    pub fn measure(&self, a: &Volume3D, b: &Volume3D) -> Result<f64> {
        match self.kind {
            MeasureKind::Mi => mutual_information_base(a, b, self.mi_bins, self.log_base),
            MeasureKind::Ncc => local_ncc(a, b, self.ncc_window),
        }
    }

    /// Normalizes and maps one item onto the canonical cube.
    pub fn prepare(
        &self,
        image: &Volume3D,
        label: &LabelMask,
        normalization: Option<Normalization>,
    ) -> Result<Volume3D> {
        let image = match normalization {
            Some(n) => intensity_window_normalize(image, n.lo, n.hi)?,
            None => image.clone(),
        };
        let cube = self.canonical_cube;
        match self.roi_mode {
            RoiMode::WholeVolume => resample_trilinear(&image, [cube; 3]),
            RoiMode::Labelcrop => labelcrop(&image, label, cube),
        }
    }
}

/// Symmetric `n x n` matrix of pairwise measures, rows labelled by item id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    ids: Vec<String>,
    values: Vec<Vec<f64>>,
}

impl PairwiseMatrix {
    /// Wraps a square, symmetric matrix.
    pub fn new(ids: Vec<String>, values: Vec<Vec<f64>>) -> Result<Self> {
        let n = ids.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!(
                "matrix must be {n}x{n} to match its ids"
            )));
        }
        for i in 0..n {
            for j in 0..i {
                if values[i][j] != values[j][i] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { ids, values })
    }

    pub fn n(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i][j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// Row-major CSV with a header row of item ids.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("id");
        for id in &self.ids {
            out.push(',');
            out.push_str(id);
        }
        out.push('\n');
        for (id, row) in self.ids.iter().zip(&self.values) {
            out.push_str(id);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::InvalidInput("empty matrix CSV".into()))?;
        let ids: Vec<String> = header.split(',').skip(1).map(str::to_string).collect();
        let mut values = Vec::new();
        for line in lines {
            let mut cells = line.split(',');
            cells.next();
            let row = cells
                .map(|c| {
                    c.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::InvalidInput(format!("bad matrix cell {c:?}: {e}")))
                })
                .collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        Self::new(ids, values)
    }
}

/// Fills the matrix from volumes that are already on a common grid.
///
/// Entries are computed once per unordered pair, so the result does not
/// depend on how the work is scheduled.
pub fn pairwise_from_prepared(
    ids: Vec<String>,
    volumes: &[Volume3D],
    config: &MeasureConfig,
) -> Result<PairwiseMatrix> {
    config.validate()?;
    let n = volumes.len();
    if ids.len() != n {
        return Err(Error::InvalidInput(format!(
            "{} ids for {n} volumes",
            ids.len()
        )));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let entries = pairs
        .par_iter()
        .map(|&(i, j)| config.measure(&volumes[i], &volumes[j]))
        .collect::<Result<Vec<f64>>>()?;
    let mut values = vec![vec![0.0; n]; n];
    for (&(i, j), v) in pairs.iter().zip(entries) {
        values[i][j] = v;
        values[j][i] = v;
    }
    Ok(PairwiseMatrix { ids, values })
}

/// Loads, prepares and measures every manifest item.
pub fn pairwise_matrix(manifest: &DatasetManifest, config: &MeasureConfig) -> Result<PairwiseMatrix> {
    config.validate()?;
    let prepared = prepare_manifest(manifest, config)?;
    pairwise_from_prepared(manifest.ids(), &prepared, config)
}

/// Canonical-cube volumes for every manifest item, in manifest order.
pub fn prepare_manifest(manifest: &DatasetManifest, config: &MeasureConfig) -> Result<Vec<Volume3D>> {
    (0..manifest.len())
        .into_par_iter()
        .map(|i| {
            let (image, label) = manifest.load_item(i)?;
            config
                .prepare(&image, &label, manifest.normalization)
                .map_err(|e| e.for_item(&manifest.items[i].id))
        })
        .collect()
}

/// Mean of each row, self-pair included.
pub fn importance_scores(matrix: &PairwiseMatrix) -> Vec<f64> {
    let n = matrix.n() as f64;
    matrix
        .rows()
        .iter()
        .map(|row| row.iter().sum::<f64>() / n)
        .collect()
}

/// `id,score` CSV.
pub fn scores_to_csv(ids: &[String], scores: &[f64]) -> String {
    let mut out = String::from("id,score\n");
    for (id, s) in ids.iter().zip(scores) {
        let _ = writeln!(out, "{id},{s}");
    }
    out
}

/// Parses `id,score` CSV (header optional).
pub fn scores_from_csv(text: &str) -> Result<(Vec<String>, Vec<f64>)> {
    let mut ids = Vec::new();
    let mut scores = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("id,")) {
            continue;
        }
        let (id, score) = line
            .split_once(',')
            .ok_or_else(|| Error::InvalidInput(format!("line {}: expected id,score", lineno + 1)))?;
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        ids.push(id.to_string());
        scores.push(score);
    }
    Ok((ids, scores))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[[f64; 3]]) -> PairwiseMatrix {
        PairwiseMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn scores_are_row_means() {
        let m = matrix(&[[1., 2., 3.], [2., 4., 5.], [3., 5., 6.]]);
        let s = importance_scores(&m);
        assert_eq!(s[0], 2.0);
        assert!((s[1] - 11.0 / 3.0).abs() < 1e-15);
        assert!((s[2] - 14.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn constant_matrix_scores() {
        let m = matrix(&[[0.7; 3]; 3]);
        assert!(importance_scores(&m).iter().all(|&s| (s - 0.7).abs() < 1e-15));
        let single = PairwiseMatrix::new(vec!["x".into()], vec![vec![1.25]]).unwrap();
        assert_eq!(importance_scores(&single), vec![1.25]);
    }

    #[test]
    fn asymmetric_matrix_rejected() {
        let r = PairwiseMatrix::new(
            vec!["a".into(), "b".into()],
            vec![vec![1.0, 2.0], vec![2.5, 1.0]],
        );
        assert!(r.is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = matrix(&[[1., 0.1, 0.2], [0.1, 1., 1e-17], [0.2, 1e-17, 1.]]);
        let text = m.to_csv();
        assert!(text.starts_with("id,a,b,c\n"));
        assert_eq!(PairwiseMatrix::from_csv(&text).unwrap(), m);
        let ids = m.ids().to_vec();
        let (ids2, s) = scores_from_csv(&scores_to_csv(&ids, &[0.5, 1.5, 2.5])).unwrap();
        assert_eq!((ids2, s), (ids, vec![0.5, 1.5, 2.5]));
    }

    #[test]
    fn config_validation() {
        let mut c = MeasureConfig::new(MeasureKind::Ncc, RoiMode::Labelcrop);
        assert!(c.validate().is_ok());
        c.ncc_window = [9, 8, 9];
        assert!(c.validate().is_err());
        c.ncc_window = [1, 1, 1];
        assert!(c.validate().is_err());
        let mut c = MeasureConfig::new(MeasureKind::Mi, RoiMode::WholeVolume);
        c.mi_bins = 1;
        assert!(c.validate().is_err());
    }
}
