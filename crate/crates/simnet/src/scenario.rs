//! Scenario description: everything a run needs, in one serializable
//! record. Identical scenarios produce identical reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("scenario field {field}: {problem}")]
    Invalid { field: String, problem: String },
    #[error("scenario file: {0}")]
    Parse(String),
}

fn invalid(field: &str, problem: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        field: field.to_string(),
        problem: problem.into(),
    }
}

/// Which bundled parameter pair to use: the exhaustive-testing toy pair
/// (19-point curve, n = 847 encryption modulus) or the production-size
/// pair (secp256r1, 512-bit encryption primes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParamSet {
    Toy,
    Standard,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReadingSource {
    /// One value per non-base node, in ascending node-id order.
    Fixed { values: Vec<u64> },
    /// Seeded uniform draws from `[0, max_reading]`.
    Uniform { max_reading: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attack {
    None,
    TamperCt,
    TamperSig,
    ForgeSubtree,
    ReplayEpoch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: ParamSet,
    pub nodes: u32,
    pub fanout: u32,
    pub readings: ReadingSource,
    pub attack: Attack,
    pub strict: bool,
    pub seed: u64,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario =
            serde_json::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// The per-reading bound the deployment will enforce.
    pub fn max_reading(&self) -> u64 {
        match &self.readings {
            ReadingSource::Fixed { values } => values.iter().copied().max().unwrap_or(0),
            ReadingSource::Uniform { max_reading } => *max_reading,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.nodes < 2 {
            return Err(invalid("nodes", "need at least 2 (base plus one sensor)"));
        }
        if self.nodes > u16::MAX as u32 + 1 {
            return Err(invalid("nodes", "node ids are 16-bit"));
        }
        if self.fanout == 0 {
            return Err(invalid("fanout", "must be at least 1"));
        }
        if let ReadingSource::Fixed { values } = &self.readings {
            let expected = self.nodes as usize - 1;
            if values.len() != expected {
                return Err(invalid(
                    "readings",
                    format!(
                        "fixed list needs one value per non-base node: expected {expected}, got {}",
                        values.len()
                    ),
                ));
            }
        }
        if self.attack == Attack::ForgeSubtree && self.nodes < 3 {
            return Err(invalid(
                "attack",
                "forge-subtree needs an aggregator, so at least 3 nodes",
            ));
        }
        // The toy parameter pair can only represent tiny aggregates:
        // sums must stay below both the encryption capacity (8) and the
        // signature scalar order (19).
        if self.params == ParamSet::Toy {
            let worst = (self.nodes as u64 - 1).saturating_mul(self.max_reading());
            if worst >= 8 {
                return Err(invalid(
                    "readings",
                    format!(
                        "toy parameters cap node-count × max-reading below 8, got {worst}"
                    ),
                ));
            }
        }
        Ok(())
    }
}
