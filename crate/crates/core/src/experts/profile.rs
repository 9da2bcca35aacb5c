use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DialectExpert, SubclassExpert};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ExpertProfile {
    Dialect(DialectExpert),
    Subclass(SubclassExpert),
}

impl ExpertProfile {
    pub fn validate(&self) -> Result<()> {
        match self {
            ExpertProfile::Dialect(e) => e.validate(),
            ExpertProfile::Subclass(e) => e.validate(),
        }
    }
}

pub const ROSTER_SCHEMA: &str = "teamalloc.experts/v1";

/// A reconstructible description of a generated expert team: how it was
/// generated, with which seed, and the resulting profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertRoster {
    pub schema: String,
    pub generator: String,
    pub seed: u64,
    pub experts: Vec<RosterEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub id: usize,
    #[serde(flatten)]
    pub profile: ExpertProfile,
}

impl ExpertRoster {
    pub fn new(generator: impl Into<String>, seed: u64, profiles: Vec<ExpertProfile>) -> Self {
        Self {
            schema: ROSTER_SCHEMA.to_string(),
            generator: generator.into(),
            seed,
            experts: profiles
                .into_iter()
                .enumerate()
                .map(|(i, profile)| RosterEntry { id: i + 1, profile })
                .collect(),
        }
    }

    pub fn profiles(&self) -> Vec<ExpertProfile> {
        self.experts.iter().map(|e| e.profile.clone()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::format(path, e))?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let roster: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e))?;
        if roster.schema != ROSTER_SCHEMA {
            return Err(Error::format(
                path,
                format!("unsupported schema `{}`", roster.schema),
            ));
        }
        for e in &roster.experts {
            e.profile.validate()?;
        }
        Ok(roster)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experts::{gen_dialect_experts, Specialty};

    #[test]
    fn roster_round_trip() {
        let mut profiles: Vec<_> = gen_dialect_experts(3, 4)
            .unwrap()
            .into_iter()
            .map(ExpertProfile::Dialect)
            .collect();
        profiles.push(ExpertProfile::Subclass(
            SubclassExpert::new(vec![1, 4], vec![0, 0, 1, 1]).unwrap(),
        ));
        let roster = ExpertRoster::new("test", 4, profiles);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("experts.json");
        roster.save(&path).unwrap();
        assert_eq!(ExpertRoster::load(&path).unwrap(), roster);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"type\": \"dialect\""));
        assert!(text.contains("\"id\": 4"));
    }

    #[test]
    fn invalid_profile_rejected_on_load() {
        let bad = ExpertRoster::new(
            "test",
            0,
            vec![ExpertProfile::Dialect(DialectExpert {
                p: 0.7,
                q: 0.9,
                specialty: Specialty::Group0,
            })],
        );
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        bad.save(&path).unwrap();
        assert!(ExpertRoster::load(&path).is_err());
    }
}
