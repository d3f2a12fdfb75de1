use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::{ground_truth_doa, ArrayGeometry, DoaEstimate};

pub const MANIFEST_VERSION: u32 = 1;

/// One utterance. Relative paths are resolved against the manifest's
/// directory. Ground-truth WAVs are single-channel images of the target at
/// the reference microphone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UtteranceManifest {
    pub id: String,
    pub mixture: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reverberant: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub early: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anechoic: Option<PathBuf>,
    /// Target direction of arrival in radians.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doa: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_position: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<ArrayGeometry>,
}

impl UtteranceManifest {
    /// Target DOA, from `doa` or else from `source_position` and `geometry`.
    pub fn target_doa(&self) -> Result<DoaEstimate> {
        if let Some(theta) = self.doa {
            return DoaEstimate::new(theta);
        }
        match (&self.geometry, self.source_position) {
            (Some(g), Some(p)) => ground_truth_doa(g, p),
            _ => Err(Error::MissingGroundTruth(format!(
                "utterance {} has neither a DOA nor a source position with geometry",
                self.id
            ))),
        }
    }

    pub(super) fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.mixture);
        for p in [&mut self.reverberant, &mut self.early, &mut self.anechoic].into_iter().flatten() {
            fix(p);
        }
    }

    fn check_files(&self) -> Result<()> {
        let paths = std::iter::once(&self.mixture).chain([&self.reverberant, &self.early, &self.anechoic].into_iter().flatten());
        for p in paths {
            if !p.is_file() {
                return Err(Error::InvalidConfig(format!(
                    "utterance {}: referenced file {} does not exist",
                    self.id,
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub utterances: Vec<UtteranceManifest>,
}

impl Manifest {
    pub fn new(utterances: Vec<UtteranceManifest>) -> Self {
        Self {
            version: MANIFEST_VERSION,
            utterances,
        }
    }

    /// Parses, resolves relative paths against `base` and validates.
    pub fn from_json(text: &str, base: &Path) -> Result<Self> {
        let mut m: Manifest = serde_json::from_str(text)?;
        if m.version != MANIFEST_VERSION {
            return Err(Error::InvalidConfig(format!(
                "manifest version {} is not supported (expected {MANIFEST_VERSION})",
                m.version
            )));
        }
        for u in &mut m.utterances {
            u.resolve(base);
        }
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_json(&std::fs::read_to_string(path)?, base)
    }

    /// Unique IDs, existing files and well-formed geometry.
    pub fn validate(&self) -> Result<()> {
        let mut ids = std::collections::HashSet::new();
        for u in &self.utterances {
            if u.id.is_empty() || u.id.contains(['/', '\\']) {
                return Err(Error::InvalidConfig(format!("invalid utterance id {:?}", u.id)));
            }
            if !ids.insert(u.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate utterance id {:?}", u.id)));
            }
            if let Some(g) = &u.geometry {
                g.validate()?;
            }
            u.check_files()?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}
