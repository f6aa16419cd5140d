//! Experiment records and the bundled five-distance dataset.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::statmodel::{ProtocolParams, SessionParams, TallyTable};

/// Derived values reported alongside a measurement. Never used as inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Published {
    pub c: f64,
    pub e_zz_1u_percent: f64,
    pub e_zz_percent: f64,
    pub s0_lower: f64,
    pub s1_lower: f64,
    pub skr_bits_per_second: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    /// Fiber length; absent for simulated sessions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fiber_km: Option<f64>,
    pub loss_db: f64,
    pub protocol: ProtocolParams,
    pub session: SessionParams,
    pub tallies: TallyTable,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published: Option<Published>,
}

impl ExperimentRecord {
    pub fn validate(&self) -> Result<()> {
        if !(self.loss_db >= 0.0) || !self.loss_db.is_finite() {
            return Err(invalid(
                "loss_db",
                format!("{} must be finite and >= 0", self.loss_db),
            ));
        }
        self.protocol.validate()?;
        self.session.validate()?;
        self.tallies.validate()?;
        if !self.tallies.is_integral() {
            return Err(Error::InvalidTally(
                "experiment tallies must be integers".into(),
            ));
        }
        if let Some(p) = &self.published {
            let values = [
                p.c,
                p.e_zz_1u_percent,
                p.e_zz_percent,
                p.s0_lower,
                p.s1_lower,
                p.skr_bits_per_second,
            ];
            if values.iter().any(|v| !(*v > 0.0)) {
                return Err(invalid("published", "published values must be positive"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, RecordError> {
        let record: ExperimentRecord = serde_json::from_str(text)?;
        record.validate()?;
        Ok(record)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("record serialises") + "\n"
    }

    pub fn load(path: &Path) -> std::result::Result<Self, RecordError> {
        let text = fs::read_to_string(path)
            .map_err(|e| RecordError::Io(path.display().to_string(), e.to_string()))?;
        Self::from_json(&text)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RecordError {
    #[error("cannot read {0}: {1}")]
    Io(String, String),
    #[error("malformed record: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] Error),
    #[error("no records found in {0}")]
    Empty(String),
}

const BUNDLED: [&str; 5] = [
    include_str!("../data/measured/050km.json"),
    include_str!("../data/measured/100km.json"),
    include_str!("../data/measured/150km.json"),
    include_str!("../data/measured/200km.json"),
    include_str!("../data/measured/250km.json"),
];

/// The five measured distances (50 to 250 km), ordered by length.
pub fn bundled() -> Vec<ExperimentRecord> {
    BUNDLED
        .iter()
        .map(|text| ExperimentRecord::from_json(text).expect("bundled record is valid"))
        .collect()
}

/// Loads every `*.json` record in a directory, sorted by loss.
pub fn load_dir(dir: &Path) -> std::result::Result<Vec<ExperimentRecord>, RecordError> {
    let entries =
        fs::read_dir(dir).map_err(|e| RecordError::Io(dir.display().to_string(), e.to_string()))?;
    let mut paths: Vec<_> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    let mut records = paths
        .iter()
        .map(|p| ExperimentRecord::load(p))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if records.is_empty() {
        return Err(RecordError::Empty(dir.display().to_string()));
    }
    records.sort_by(|a, b| a.loss_db.total_cmp(&b.loss_db));
    Ok(records)
}
