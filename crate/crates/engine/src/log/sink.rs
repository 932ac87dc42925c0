use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::time::now_iso8601;
use super::{Event, EventRecord, LogError, Visibility};

/// Append-only destination for a single game's events. Sequence numbers are
/// assigned here, starting at 1, and each record is durable (flushed) before
/// `append` returns — the game never advances past an unwritten event.
pub trait EventSink {
    fn game_id(&self) -> &str;
    fn last_seq(&self) -> u64;
    fn append(&mut self, visibility: Visibility, event: Event) -> Result<u64, LogError>;
}

fn make_record(game_id: &str, seq: u64, visibility: Visibility, event: Event) -> EventRecord {
    EventRecord {
        game_id: game_id.to_string(),
        seq,
        wall_time: now_iso8601(),
        visibility,
        event,
    }
}

/// One NDJSON file, one writer, strictly ordered appends.
pub struct FileSink {
    game_id: String,
    path: PathBuf,
    writer: BufWriter<File>,
    seq: u64,
}

impl FileSink {
    pub fn create(path: impl AsRef<Path>, game_id: impl Into<String>) -> Result<Self, LogError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path)?;
        Ok(Self {
            game_id: game_id.into(),
            path,
            writer: BufWriter::new(file),
            seq: 0,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl EventSink for FileSink {
    fn game_id(&self) -> &str {
        &self.game_id
    }

    fn last_seq(&self) -> u64 {
        self.seq
    }

    fn append(&mut self, visibility: Visibility, event: Event) -> Result<u64, LogError> {
        let seq = self.seq + 1;
        let record = make_record(&self.game_id, seq, visibility, event);
        let line = serde_json::to_string(&record)?;
        debug_assert!(!line.contains('\n'));
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        self.seq = seq;
        Ok(seq)
    }
}

/// In-memory sink for tests and probes.
#[derive(Debug, Default)]
pub struct MemorySink {
    game_id: String,
    pub records: Vec<EventRecord>,
}

impl MemorySink {
    pub fn new(game_id: impl Into<String>) -> Self {
        Self { game_id: game_id.into(), records: Vec::new() }
    }
}

impl EventSink for MemorySink {
    fn game_id(&self) -> &str {
        &self.game_id
    }

    fn last_seq(&self) -> u64 {
        self.records.len() as u64
    }

    fn append(&mut self, visibility: Visibility, event: Event) -> Result<u64, LogError> {
        let seq = self.records.len() as u64 + 1;
        self.records.push(make_record(&self.game_id, seq, visibility, event));
        Ok(seq)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log::{ExilePayload, PhasePayload};
    use crate::game::Phase;

    #[test]
    fn file_sink_assigns_gapless_seqs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.ndjson");
        let mut sink = FileSink::create(&path, "g0000").unwrap();
        for i in 0..5u32 {
            let seq = sink
                .append(
                    Visibility::Public,
                    Event::ExileResolved(ExilePayload { round: i, exiled: None }),
                )
                .unwrap();
            assert_eq!(seq, i as u64 + 1);
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 5);
        for (i, line) in text.lines().enumerate() {
            let rec: EventRecord = serde_json::from_str(line).unwrap();
            assert_eq!(rec.seq, i as u64 + 1);
        }
    }

    #[test]
    fn memory_sink_matches_trait_contract() {
        let mut sink = MemorySink::new("g");
        assert_eq!(sink.last_seq(), 0);
        sink.append(
            Visibility::Public,
            Event::PhaseAdvanced(PhasePayload { from: Phase::Night, to: Phase::DayDebate, round: 1 }),
        )
        .unwrap();
        assert_eq!(sink.last_seq(), 1);
        assert_eq!(sink.records[0].seq, 1);
    }
}
