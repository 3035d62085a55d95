use std::io::{Read, Write};
use std::path::Path;

use super::{attr, ActivityKind, EventLog, EventLogError, EventRecord};
use crate::fsutil::write_atomic;
use crate::Timestamp;

/// Exact CSV header of the exported log.
pub const CSV_HEADER: [&str; 12] = [
    "pr_id",
    "ACTIVITY",
    "DATE",
    attr::COMMIT_AUTHOR,
    attr::PR_AUTHOR,
    attr::MERGED_BY,
    attr::FROM_BRANCH,
    attr::INTO_BRANCH,
    attr::FILETYPES,
    attr::STATE,
    attr::CONCLUSION,
    attr::RUN_ID,
];

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("line {line}: {message}")]
    Field { line: u64, message: String },
    #[error(transparent)]
    Log(#[from] EventLogError),
}

/// Writes the log as RFC 4180 CSV; absent attributes are empty strings.
pub fn write_csv(log: &EventLog, out: impl Write) -> Result<(), CsvError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::CRLF)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for e in log.events() {
        let pr_id = e.pr_id.to_string();
        let date = e.date.to_rfc3339();
        let mut row: Vec<&str> = vec![&pr_id, e.activity.as_str(), &date];
        row.extend(CSV_HEADER[3..].iter().map(|k| e.attr(k).unwrap_or("")));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn export_csv(log: &EventLog, path: &Path) -> Result<(), CsvError> {
    let mut buf = Vec::new();
    write_csv(log, &mut buf)?;
    write_atomic(path, &buf)?;
    Ok(())
}

/// Parses an exported CSV log back into an [`EventLog`].
pub fn read_csv(input: impl Read) -> Result<EventLog, CsvError> {
    let mut rdr = csv::ReaderBuilder::new().from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(CsvError::Header(header));
    }
    let mut events = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |message: String| CsvError::Field { line, message };
        let pr_id = record[0]
            .parse::<u64>()
            .map_err(|e| field(format!("pr_id: {e}")))?;
        let activity = record[1]
            .parse::<ActivityKind>()
            .map_err(|e| field(e.to_string()))?;
        let date = Timestamp::parse_rfc3339(&record[2]).map_err(|e| field(e.to_string()))?;
        let mut event = EventRecord::new(pr_id, activity, date);
        for (key, value) in CSV_HEADER[3..].iter().zip(record.iter().skip(3)) {
            if !value.is_empty() {
                event.attributes.insert(key.to_string(), value.to_string());
            }
        }
        events.push(event);
    }
    Ok(EventLog::new(events)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_log_is_header_only() {
        let mut buf = Vec::new();
        write_csv(&EventLog::default(), &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "pr_id,ACTIVITY,DATE,commit_author,pr_author,merged_by,from_branch,into_branch,\
             filetypes,state,conclusion,run_id\r\n"
        );
    }

    #[test]
    fn comma_attribute_roundtrips() {
        let log = EventLog::new(vec![EventRecord::new(
            3,
            ActivityKind::Commit,
            Timestamp(60),
        )
        .with_attr(attr::COMMIT_AUTHOR, "Doe, Jane \"JD\"")])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains("\"Doe, Jane \"\"JD\"\"\""));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, log);
    }

    #[test]
    fn date_format_has_seconds() {
        let log = EventLog::new(vec![EventRecord::new(
            1,
            ActivityKind::PROpening,
            Timestamp(0),
        )])
        .unwrap();
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .contains(",1970-01-01T00:00:00Z,"));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(
            read_csv("a,b\n1,2\n".as_bytes()),
            Err(CsvError::Header(_))
        ));
    }
}
