use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "cohort.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Response {
    #[serde(rename = "R")]
    Responder,
    #[serde(rename = "NR")]
    NonResponder,
}

impl Response {
    pub fn is_responder(self) -> bool {
        self == Response::Responder
    }

    pub fn as_label(self) -> u8 {
        u8::from(self.is_responder())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatientEntry {
    pub id: String,
    pub response: Response,
    /// PNG paths relative to the cohort directory.
    pub slides: Vec<String>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortManifest {
    pub version: u32,
    pub patients: Vec<PatientEntry>,
}

impl CohortManifest {
    pub fn new(patients: Vec<PatientEntry>) -> Self {
        Self { version: 1, patients }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != 1 {
            return Err(Error::MalformedManifest(format!("unsupported version {}", self.version)));
        }
        let mut seen = HashSet::new();
        for p in &self.patients {
            if !seen.insert(p.id.as_str()) {
                return Err(Error::DuplicatePatient(p.id.clone()));
            }
        }
        Ok(())
    }

    pub fn patient(&self, id: &str) -> Option<&PatientEntry> {
        self.patients.iter().find(|p| p.id == id)
    }
}

/// Slide id of a manifest path: the file stem.
pub fn slide_id_of(path: &str) -> String {
    Path::new(path)
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}

/// Reads and validates `<dir>/cohort.json`, checking that every slide exists.
pub fn read_cohort(dir: &Path) -> Result<CohortManifest> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    let manifest: CohortManifest =
        serde_json::from_str(&text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
    manifest.validate()?;
    for p in &manifest.patients {
        for s in &p.slides {
            let path = dir.join(s);
            if !path.is_file() {
                return Err(Error::MissingSlide(path));
            }
        }
    }
    Ok(manifest)
}

pub fn write_cohort(manifest: &CohortManifest, dir: &Path) -> Result<()> {
    manifest.validate()?;
    fs::create_dir_all(dir)?;
    let text = serde_json::to_string_pretty(manifest)?;
    fs::write(dir.join(MANIFEST_FILE), text + "\n")?;
    Ok(())
}
