//! The trained model file: forest, scenario, anchor policy and LMA quartiles.

use std::path::Path;

use repo_vitals::forest::Forest;
use repo_vitals::lma::{level_of, LmaStatus, LmaValue, Quartiles};
use repo_vitals::{AnchorPolicy, Class, Prediction, Scenario};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const BUNDLE_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    pub schema: u32,
    /// First 12 hex digits of the SHA-256 of everything else in the bundle.
    pub model_version: String,
    pub scenario: Scenario,
    pub anchor: AnchorPolicy,
    pub quartiles: Quartiles,
    pub forest: Forest,
}

#[derive(Serialize)]
struct Versioned<'a> {
    scenario: &'a Scenario,
    anchor: &'a AnchorPolicy,
    quartiles: &'a Quartiles,
    forest: &'a Forest,
}

fn version_of(scenario: &Scenario, anchor: &AnchorPolicy, quartiles: &Quartiles, forest: &Forest) -> String {
    let body = serde_json::to_vec(&Versioned {
        scenario,
        anchor,
        quartiles,
        forest,
    })
    .expect("bundle serializes");
    hex::encode(Sha256::digest(&body))[..12].to_string()
}

impl ModelBundle {
    pub fn new(forest: Forest, scenario: Scenario, anchor: AnchorPolicy, quartiles: Quartiles) -> ModelBundle {
        ModelBundle {
            schema: BUNDLE_SCHEMA,
            model_version: version_of(&scenario, &anchor, &quartiles, &forest),
            scenario,
            anchor,
            quartiles,
            forest,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string(self).expect("bundle serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, origin: &str) -> Result<ModelBundle> {
        let b: ModelBundle = serde_json::from_str(text)
            .map_err(|e| CliError::Config(format!("{origin}: malformed model: {e}")))?;
        if b.schema != BUNDLE_SCHEMA {
            return Err(CliError::Config(format!("{origin}: unsupported model schema {}", b.schema)));
        }
        let expect = version_of(&b.scenario, &b.anchor, &b.quartiles, &b.forest);
        if b.model_version != expect {
            return Err(CliError::Config(format!(
                "{origin}: model_version {} does not match content ({expect})",
                b.model_version
            )));
        }
        Ok(b)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }

    /// `NoModel` when the file is absent.
    pub fn load(path: &Path) -> Result<ModelBundle> {
        match std::fs::read_to_string(path) {
            Ok(text) => ModelBundle::from_json(&text, &path.display().to_string()),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Err(CliError::NoModel(path.to_path_buf())),
            Err(e) => Err(CliError::io(path, e)),
        }
    }

    pub fn level(&self, pred: &Prediction) -> repo_vitals::lma::Level {
        level_of(&LmaStatus::from_prediction(pred), &self.quartiles)
    }
}

/// Out-of-bag vote share per training row: each row is scored only by the
/// trees that did not see it. Rows that every tree saw are `None`.
pub fn oob_predictions(forest: &Forest, rows: &[Vec<f64>]) -> Vec<Option<Prediction>> {
    let mut votes = vec![(0usize, 0usize); rows.len()];
    for tree in &forest.trees {
        for &i in &tree.oob_indices {
            let v = &mut votes[i];
            v.1 += 1;
            if tree.predict(&rows[i]) == Class::Active {
                v.0 += 1;
            }
        }
    }
    votes
        .into_iter()
        .map(|(active, n)| (n > 0).then(|| Prediction::from_votes(active, n)))
        .collect()
}

/// Quartiles of the LMA of rows predicted active out of bag.
pub fn oob_quartiles(forest: &Forest, rows: &[Vec<f64>]) -> Result<Quartiles> {
    let values: Vec<f64> = oob_predictions(forest, rows)
        .into_iter()
        .flatten()
        .filter(|p| p.label == Class::Active)
        .map(|p| LmaValue::from_p_active(p.p_active).map(|v| v.value))
        .collect::<repo_vitals::Result<_>>()?;
    Ok(Quartiles::from_values(&values)?)
}
