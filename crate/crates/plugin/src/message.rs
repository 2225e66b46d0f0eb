//! Wire messages: one JSON object per newline-terminated line.

use std::fmt;

use bbohub_core::{Direction, Params, SearchSpace, Trial};
use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Capability {
    Sampler,
    Problem,
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Capability::Sampler => "sampler",
            Capability::Problem => "problem",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Message {
    Hello {
        protocol: u32,
        capabilities: Vec<Capability>,
    },
    /// Problem plugins also declare what they optimize.
    HelloAck {
        protocol: u32,
        capabilities: Vec<Capability>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        search_space: Option<SearchSpace>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        directions: Option<Vec<Direction>>,
    },
    Ask {
        trial_id: u64,
        search_space: SearchSpace,
        history: Vec<Trial>,
    },
    Params {
        trial_id: u64,
        params: Params,
    },
    Tell {
        trial_id: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
        failure: bool,
    },
    TellAck {
        trial_id: u64,
    },
    Evaluate {
        params: Params,
    },
    Values {
        values: Vec<f64>,
    },
    Shutdown,
    Error {
        code: String,
        message: String,
    },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::HelloAck { .. } => "hello_ack",
            Message::Ask { .. } => "ask",
            Message::Params { .. } => "params",
            Message::Tell { .. } => "tell",
            Message::TellAck { .. } => "tell_ack",
            Message::Evaluate { .. } => "evaluate",
            Message::Values { .. } => "values",
            Message::Shutdown => "shutdown",
            Message::Error { .. } => "error",
        }
    }

    /// Serialized form without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages always serialize")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    /// The line is not a protocol message.
    Malformed(String),
    /// A `values` message carrying NaN or infinities.
    NonFinite,
}

/// Parses one line. Bare `NaN`/`Infinity` tokens, which some JSON writers
/// emit, are recognised so they can be reported as non-finite values.
pub fn decode(line: &str) -> Result<Message, DecodeError> {
    match serde_json::from_str(line) {
        Ok(m) => Ok(m),
        Err(e) => {
            if has_non_finite_values(line) {
                Err(DecodeError::NonFinite)
            } else {
                Err(DecodeError::Malformed(e.to_string()))
            }
        }
    }
}

fn has_non_finite_values(line: &str) -> bool {
    let mut patched = line.to_owned();
    for token in ["-Infinity", "Infinity", "NaN"] {
        patched = patched.replace(token, "null");
    }
    #[derive(Deserialize)]
    #[serde(tag = "type", rename_all = "snake_case")]
    enum Loose {
        Values { values: Vec<Option<f64>> },
    }
    matches!(
        serde_json::from_str(&patched),
        Ok(Loose::Values { values }) if values.iter().any(Option::is_none)
    )
}
