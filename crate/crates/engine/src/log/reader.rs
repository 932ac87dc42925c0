use std::fmt;
use std::path::Path;

use super::{Event, EventRecord, LogError};

/// A fully parsed log. `truncated` is set when the file ends in a partial
/// line, which readers tolerate by ignoring the fragment.
#[derive(Debug)]
pub struct ParsedLog {
    pub records: Vec<EventRecord>,
    pub truncated: bool,
}

/// Strict line-by-line parse. A malformed line anywhere but the unterminated
/// tail is an error naming the line.
pub fn read_log(path: impl AsRef<Path>) -> Result<ParsedLog, ReadLogError> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| ReadLogError::Io(e.into()))?;
    let ends_with_newline = text.ends_with('\n');
    let lines: Vec<&str> = text.lines().collect();
    let mut records = Vec::with_capacity(lines.len());
    let mut truncated = false;
    for (i, line) in lines.iter().enumerate() {
        match serde_json::from_str::<EventRecord>(line) {
            Ok(rec) => records.push(rec),
            Err(err) => {
                let is_tail = i == lines.len() - 1 && !ends_with_newline;
                if is_tail {
                    truncated = true;
                } else {
                    return Err(ReadLogError::Malformed { line: i + 1, message: err.to_string() });
                }
            }
        }
    }
    Ok(ParsedLog { records, truncated })
}

#[derive(Debug, thiserror::Error)]
pub enum ReadLogError {
    #[error(transparent)]
    Io(#[from] LogError),
    #[error("malformed record at line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// One schema violation, located by line for file-backed logs.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub line: usize,
    pub seq: Option<u64>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

fn check_unit_interval(violations: &mut Vec<Violation>, line: usize, seq: u64, name: &str, v: f64) {
    if !(0.0..=1.0).contains(&v) {
        violations.push(Violation {
            line,
            seq: Some(seq),
            message: format!("{name} = {v} outside [0, 1]"),
        });
    }
}

fn check_record(violations: &mut Vec<Violation>, line: usize, rec: &EventRecord) {
    let seq = rec.seq;
    match &rec.event {
        Event::SelfAnalysisRecorded(a) => {
            check_unit_interval(violations, line, seq, "confidence", a.confidence);
            if a.deceptive != (a.dtype != crate::deception::DeceptionType::None) {
                violations.push(Violation {
                    line,
                    seq: Some(seq),
                    message: format!(
                        "self-analysis label mismatch: deceptive={} with type {}",
                        a.deceptive, a.dtype
                    ),
                });
            }
        }
        Event::PeerAnalysisRecorded(a) => {
            check_unit_interval(violations, line, seq, "confidence", a.confidence);
            check_unit_interval(violations, line, seq, "suspicion", a.suspicion);
        }
        Event::SuspicionUpdated(u) => {
            check_unit_interval(violations, line, seq, "suspicion", u.suspicion);
            check_unit_interval(violations, line, seq, "previous", u.previous);
            check_unit_interval(violations, line, seq, "updated", u.updated);
        }
        Event::StatementMade(s) => {
            if s.text.is_empty() {
                violations.push(Violation {
                    line,
                    seq: Some(seq),
                    message: "statement text is empty".to_string(),
                });
            }
        }
        Event::BidsCollected(b) => {
            for bid in &b.bids {
                if bid.value > crate::debate::MAX_BID {
                    violations.push(Violation {
                        line,
                        seq: Some(seq),
                        message: format!("bid {} from {} exceeds 10", bid.value, bid.player),
                    });
                }
            }
        }
        _ => {}
    }
}

/// Validate already-parsed records: seq discipline, first-record convention,
/// and per-kind payload ranges. Line numbers are 1-based record positions.
pub fn validate_records(records: &[EventRecord]) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut expected_seq = 1u64;
    for (i, rec) in records.iter().enumerate() {
        let line = i + 1;
        if rec.seq != expected_seq {
            violations.push(Violation {
                line,
                seq: Some(rec.seq),
                message: format!("sequence violation: expected seq {}, found {}", expected_seq, rec.seq),
            });
            // Resynchronize so one gap is reported once.
            expected_seq = rec.seq + 1;
        } else {
            expected_seq += 1;
        }
        if i == 0 && !matches!(rec.event, Event::GameStarted(_)) {
            violations.push(Violation {
                line,
                seq: Some(rec.seq),
                message: format!("first record must be GameStarted, found {}", rec.event.kind()),
            });
        }
        check_record(&mut violations, line, rec);
    }
    violations
}

/// Line-by-line schema validation of an NDJSON log file. Unparseable lines
/// are reported and skipped; parseable records feed the seq and payload
/// checks from [`validate_records`].
pub fn validate_file(path: impl AsRef<Path>) -> Result<Vec<Violation>, LogError> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut violations = Vec::new();
    let mut parsed: Vec<(usize, EventRecord)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match serde_json::from_str::<EventRecord>(line) {
            Ok(rec) => parsed.push((i + 1, rec)),
            Err(err) => violations.push(Violation {
                line: i + 1,
                seq: None,
                message: format!("unparseable record: {err}"),
            }),
        }
    }
    let mut expected_seq = 1u64;
    for (k, (line, rec)) in parsed.iter().enumerate() {
        if rec.seq != expected_seq {
            violations.push(Violation {
                line: *line,
                seq: Some(rec.seq),
                message: format!("sequence violation: expected seq {}, found {}", expected_seq, rec.seq),
            });
            expected_seq = rec.seq + 1;
        } else {
            expected_seq += 1;
        }
        if k == 0 && !matches!(rec.event, Event::GameStarted(_)) {
            violations.push(Violation {
                line: *line,
                seq: Some(rec.seq),
                message: format!("first record must be GameStarted, found {}", rec.event.kind()),
            });
        }
        check_record(&mut violations, *line, rec);
    }
    violations.sort_by_key(|v| v.line);
    Ok(violations)
}
