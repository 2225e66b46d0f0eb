use serde::{Deserialize, Serialize};

use crate::space::Params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrialState {
    Running,
    Complete,
    Failed,
}

impl TrialState {
    pub fn is_finished(self) -> bool {
        !matches!(self, TrialState::Running)
    }
}

/// One suggestion and its evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub id: u64,
    pub params: Params,
    pub state: TrialState,
    /// Present iff `state == Complete`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

impl Trial {
    pub fn running(id: u64, params: Params) -> Self {
        Self {
            id,
            params,
            state: TrialState::Running,
            values: None,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.state == TrialState::Complete
    }

    /// First objective value of a complete trial.
    pub fn value(&self) -> Option<f64> {
        self.values.as_ref().and_then(|v| v.first().copied())
    }
}

/// Result reported for a running trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Values(Vec<f64>),
    Failure,
}

impl From<Vec<f64>> for Outcome {
    fn from(values: Vec<f64>) -> Self {
        Outcome::Values(values)
    }
}
