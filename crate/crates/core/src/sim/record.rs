//! JSON rank-record files.
//!
//! ```json
//! {"schema_version": 1, "N": 161000, "batch_size": 200, "positives": [3, 17, 40]}
//! ```
//!
//! `schema_version` and `batch_size` may be omitted (defaults 1 and 0).
//! Unknown fields are rejected.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rules::RankRecord;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordDoc {
    #[serde(default = "default_version")]
    schema_version: u32,
    #[serde(rename = "N")]
    collection_size: u64,
    #[serde(default)]
    batch_size: u64,
    positives: Vec<u64>,
}

fn default_version() -> u32 {
    SCHEMA_VERSION
}

pub fn ingest_record(text: &str) -> Result<RankRecord> {
    let doc: RecordDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::data(format!(
            "schema_version: unsupported version {} (expected {SCHEMA_VERSION})",
            doc.schema_version
        )));
    }
    if doc.collection_size == 0 {
        return Err(Error::data("N: collection must be non-empty"));
    }
    RankRecord::new(doc.collection_size, doc.positives, doc.batch_size)
}

pub fn record_to_json(record: &RankRecord) -> String {
    let doc = RecordDoc {
        schema_version: SCHEMA_VERSION,
        collection_size: record.collection_size(),
        batch_size: record.batch_size(),
        positives: record.positives().to_vec(),
    };
    serde_json::to_string(&doc).expect("record serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_record() {
        let rec = ingest_record(r#"{"N": 10, "positives": [1, 5, 9]}"#).unwrap();
        assert_eq!(rec.positive_count(), 3);
        assert_eq!(rec.batch_size(), 0);
    }

    #[test]
    fn batch_count_from_file() {
        let rec = ingest_record(
            r#"{"schema_version": 1, "batch_size": 200, "N": 161000, "positives": [7]}"#,
        )
        .unwrap();
        assert_eq!(rec.batch_count(), 805);
    }

    #[test]
    fn invalid_records() {
        let dup = ingest_record(r#"{"N": 10, "positives": [5, 5]}"#).unwrap_err();
        assert!(dup.to_string().contains("duplicate"), "{dup}");
        assert!(matches!(
            ingest_record(r#"{"N": 10, "positives": [11]}"#),
            Err(Error::Data(_))
        ));
        assert!(matches!(
            ingest_record(r#"{"N": 10, "positives": [1], "schema_version": 2}"#),
            Err(Error::Data(_))
        ));
        let unknown =
            ingest_record("{\"N\": 10,\n \"positives\": [1],\n \"extra\": 3}").unwrap_err();
        match unknown {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("extra"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ingest_record(r#"{"positives": [1]}"#),
            Err(Error::Parse { .. })
        ));
        assert!(matches!(
            ingest_record(r#"{"N": -1, "positives": [1]}"#),
            Err(Error::Parse { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let rec = RankRecord::new(1000, vec![4, 99, 640], 25).unwrap();
        assert_eq!(ingest_record(&record_to_json(&rec)).unwrap(), rec);
    }
}
