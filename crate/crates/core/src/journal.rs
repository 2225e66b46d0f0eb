//! Append-only study journal.
//!
//! Each record is one JSON line `{"seq":..,"kind":..,"payload":{..},"checksum":".."}`
//! where `checksum` is the lowercase hex SHA-256 of the payload bytes exactly
//! as written. Payloads are produced from typed structs, so the bytes are
//! canonical for a given record.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::space::{Direction, Params, SearchSpace};
use crate::trial::{Trial, TrialState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    StudyCreated,
    TrialAsked,
    TrialTold,
}

#[derive(Debug, Error)]
pub enum JournalError {
    #[error("journal is empty: missing study_created record")]
    MissingStudyCreated,
    #[error("journal corrupt at seq {seq}: {reason}")]
    Corrupt { seq: u64, reason: String },
    #[error("journal line {line} is malformed: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("journal I/O: {0}")]
    Io(#[from] io::Error),
}

fn corrupt(seq: u64, reason: impl Into<String>) -> JournalError {
    JournalError::Corrupt {
        seq,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyCreated {
    pub directions: Vec<Direction>,
    pub search_space: SearchSpace,
    pub seed: u64,
    pub sampler: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialAsked {
    pub trial_id: u64,
    pub params: Params,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTold {
    pub trial_id: u64,
    pub state: TrialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

/// Decoded record body.
#[derive(Debug, Clone, PartialEq)]
pub enum RecordPayload {
    StudyCreated(StudyCreated),
    TrialAsked(TrialAsked),
    TrialTold(TrialTold),
}

impl RecordPayload {
    pub fn kind(&self) -> RecordKind {
        match self {
            RecordPayload::StudyCreated(_) => RecordKind::StudyCreated,
            RecordPayload::TrialAsked(_) => RecordKind::TrialAsked,
            RecordPayload::TrialTold(_) => RecordKind::TrialTold,
        }
    }

    fn to_json(&self) -> String {
        let out = match self {
            RecordPayload::StudyCreated(p) => serde_json::to_string(p),
            RecordPayload::TrialAsked(p) => serde_json::to_string(p),
            RecordPayload::TrialTold(p) => serde_json::to_string(p),
        };
        out.expect("journal payloads always serialize")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JournalRecord {
    pub seq: u64,
    pub kind: RecordKind,
    pub payload: Box<RawValue>,
    pub checksum: String,
}

impl PartialEq for JournalRecord {
    fn eq(&self, other: &Self) -> bool {
        self.seq == other.seq
            && self.kind == other.kind
            && self.payload.get() == other.payload.get()
            && self.checksum == other.checksum
    }
}

pub fn payload_checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl JournalRecord {
    pub fn new(seq: u64, payload: &RecordPayload) -> Self {
        let json = payload.to_json();
        let checksum = payload_checksum(json.as_bytes());
        Self {
            seq,
            kind: payload.kind(),
            payload: RawValue::from_string(json).expect("serializer output is valid JSON"),
            checksum,
        }
    }

    pub fn verify_checksum(&self) -> bool {
        payload_checksum(self.payload.get().as_bytes()) == self.checksum
    }

    pub fn decode(&self) -> Result<RecordPayload, JournalError> {
        let raw = self.payload.get();
        let decoded = match self.kind {
            RecordKind::StudyCreated => serde_json::from_str(raw).map(RecordPayload::StudyCreated),
            RecordKind::TrialAsked => serde_json::from_str(raw).map(RecordPayload::TrialAsked),
            RecordKind::TrialTold => serde_json::from_str(raw).map(RecordPayload::TrialTold),
        };
        decoded.map_err(|e| corrupt(self.seq, format!("undecodable payload: {e}")))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("journal records always serialize")
    }

    pub fn parse_line(line: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(line)
    }
}

/// Reads newline-delimited records, skipping blank lines.
pub fn read_records<R: BufRead>(reader: R) -> Result<Vec<JournalRecord>, JournalError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = JournalRecord::parse_line(&line).map_err(|e| JournalError::Malformed {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<W: Write>(mut writer: W, records: &[JournalRecord]) -> io::Result<()> {
    for r in records {
        writeln!(writer, "{}", r.to_line())?;
    }
    writer.flush()
}

/// Study state reconstructed from a journal, without the sampler instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySnapshot {
    pub directions: Vec<Direction>,
    pub search_space: SearchSpace,
    pub seed: u64,
    pub sampler: String,
    pub trials: Vec<Trial>,
}

/// Rebuilds study state from a record sequence.
///
/// Any prefix of a valid journal replays successfully; a trailing
/// `trial_asked` leaves that trial running.
pub fn replay(records: &[JournalRecord]) -> Result<StudySnapshot, JournalError> {
    let first = records.first().ok_or(JournalError::MissingStudyCreated)?;
    check_record(first, 0)?;
    let mut snapshot = match first.decode()? {
        RecordPayload::StudyCreated(c) => {
            if c.directions.is_empty() {
                return Err(corrupt(0, "study has no directions"));
            }
            StudySnapshot {
                directions: c.directions,
                search_space: c.search_space,
                seed: c.seed,
                sampler: c.sampler,
                trials: Vec::new(),
            }
        }
        _ => return Err(JournalError::MissingStudyCreated),
    };
    for (i, record) in records.iter().enumerate().skip(1) {
        let seq = i as u64;
        check_record(record, seq)?;
        apply(&mut snapshot, seq, record.decode()?)?;
    }
    Ok(snapshot)
}

fn check_record(record: &JournalRecord, expected: u64) -> Result<(), JournalError> {
    if record.seq != expected {
        return Err(corrupt(
            record.seq,
            format!("sequence gap: expected seq {expected}"),
        ));
    }
    if !record.verify_checksum() {
        return Err(corrupt(record.seq, "checksum mismatch"));
    }
    Ok(())
}

fn apply(snapshot: &mut StudySnapshot, seq: u64, payload: RecordPayload) -> Result<(), JournalError> {
    match payload {
        RecordPayload::StudyCreated(_) => Err(corrupt(seq, "duplicate study_created")),
        RecordPayload::TrialAsked(a) => {
            if a.trial_id != snapshot.trials.len() as u64 {
                return Err(corrupt(
                    seq,
                    format!(
                        "trial id {} is not the next dense id {}",
                        a.trial_id,
                        snapshot.trials.len()
                    ),
                ));
            }
            // Sampler contract violations are journaled with empty params.
            if !a.params.is_empty() {
                snapshot
                    .search_space
                    .check(&a.params)
                    .map_err(|e| corrupt(seq, e.to_string()))?;
            }
            snapshot.trials.push(Trial::running(a.trial_id, a.params));
            Ok(())
        }
        RecordPayload::TrialTold(t) => {
            let n_obj = snapshot.directions.len();
            let trial = snapshot
                .trials
                .get_mut(t.trial_id as usize)
                .ok_or_else(|| corrupt(seq, format!("unknown trial {}", t.trial_id)))?;
            if trial.state != TrialState::Running {
                return Err(corrupt(seq, format!("trial {} already finished", t.trial_id)));
            }
            match (t.state, t.values) {
                (TrialState::Complete, Some(values)) => {
                    if values.len() != n_obj || values.iter().any(|v| !v.is_finite()) {
                        return Err(corrupt(seq, "invalid objective values"));
                    }
                    trial.state = TrialState::Complete;
                    trial.values = Some(values);
                }
                (TrialState::Failed, None) => trial.state = TrialState::Failed,
                _ => return Err(corrupt(seq, "inconsistent trial_told state/values")),
            }
            Ok(())
        }
    }
}
