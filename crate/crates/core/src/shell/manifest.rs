//! Dataset manifests: one TOML file per entity listing its series.
//!
//! ```toml
//! entity = "exemplar-cloud"
//! notes = "synthetic"
//! pre_window_cumulative_revenue = 5.0e11   # optional, USD
//!
//! [[series]]
//! kind = "energy"
//! unit = "MWh/yr"
//! path = "energy.csv"                      # relative to the manifest
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::csv_io::{load_series_with, LoadOptions};
use crate::error::{Error, Result};
use crate::series::{AnnualSeries, SeriesKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesEntry {
    pub kind: SeriesKind,
    pub unit: String,
    pub path: PathBuf,
    /// Fill interior gaps by linear interpolation.
    #[serde(default)]
    pub interpolate_gaps: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub entity: String,
    #[serde(default)]
    pub notes: String,
    /// Revenue accumulated before the first revenue observation, in the
    /// stock unit of the revenue series.
    #[serde(default)]
    pub pre_window_cumulative_revenue: Option<f64>,
    #[serde(default)]
    pub series: Vec<SeriesEntry>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn from_toml(text: &str, source: &Path) -> Result<Self> {
        let mut m: DatasetManifest = toml::from_str(text).map_err(|e| Error::Manifest {
            path: source.to_owned(),
            message: e.to_string(),
        })?;
        m.base_dir = source.parent().map(Path::to_path_buf).unwrap_or_default();
        m.check(source)?;
        Ok(m)
    }

    /// Reads a manifest and checks that every listed file is readable.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m = Self::from_toml(&text, path)?;
        for entry in &m.series {
            let p = m.resolve(entry);
            fs::metadata(&p).map_err(|e| Error::Manifest {
                path: path.to_owned(),
                message: format!("{} series file {}: {e}", entry.kind, p.display()),
            })?;
        }
        Ok(m)
    }

    fn check(&self, source: &Path) -> Result<()> {
        let fail = |message: String| Error::Manifest {
            path: source.to_owned(),
            message,
        };
        if self.entity.trim().is_empty() {
            return Err(fail("entity must not be empty".into()));
        }
        for (i, a) in self.series.iter().enumerate() {
            if self.series[..i].iter().any(|b| b.kind == a.kind) {
                return Err(fail(format!("more than one {} series", a.kind)));
            }
            if a.unit.trim().is_empty() {
                return Err(fail(format!("{} series has an empty unit", a.kind)));
            }
        }
        if let Some(h) = self.pre_window_cumulative_revenue {
            if !(h.is_finite() && h >= 0.0) {
                return Err(fail(format!("pre_window_cumulative_revenue must be >= 0, got {h}")));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, entry: &SeriesEntry) -> PathBuf {
        self.base_dir.join(&entry.path)
    }

    pub fn entry(&self, kind: SeriesKind) -> Option<&SeriesEntry> {
        self.series.iter().find(|e| e.kind == kind)
    }
}

/// A manifest with all of its series loaded.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub series: BTreeMap<SeriesKind, AnnualSeries>,
}

impl Dataset {
    pub fn load(manifest: DatasetManifest) -> Result<Self> {
        let mut series = BTreeMap::new();
        for entry in &manifest.series {
            let opts = LoadOptions {
                interpolate_gaps: entry.interpolate_gaps,
            };
            let s = load_series_with(&manifest.resolve(entry), entry.kind, &entry.unit, opts)?;
            let s = AnnualSeries::new(manifest.entity.clone(), s.kind(), s.unit(), s.points().to_vec())?;
            series.insert(entry.kind, s);
        }
        Ok(Self { manifest, series })
    }

    pub fn open(path: &Path) -> Result<Self> {
        Self::load(DatasetManifest::load(path)?)
    }

    pub fn get(&self, kind: SeriesKind) -> Option<&AnnualSeries> {
        self.series.get(&kind)
    }

    pub fn require(&self, kind: SeriesKind, purpose: &'static str) -> Result<&AnnualSeries> {
        self.get(kind).ok_or(Error::MissingSeries {
            kind: kind.as_str(),
            purpose,
        })
    }
}
