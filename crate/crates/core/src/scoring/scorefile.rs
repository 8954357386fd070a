//! Externally computed span scores, one JSON object per line:
//!
//! ```text
//! {"sent_id": "s1", "n": 3, "default": -1e9, "spans": [[0, 3, 2, 1.5], [0, 1, 1, 0.25]]}
//! ```
//!
//! Records follow treebank order. Triples not listed take `default`
//! (`-1e9` when the field is omitted).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ScoreError, SpanScoreTable};

pub const SCORE_FILE_DEFAULT: f64 = -1e9;

fn default_score() -> f64 {
    SCORE_FILE_DEFAULT
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    #[serde(default)]
    pub sent_id: String,
    pub n: usize,
    #[serde(default = "default_score")]
    pub default: f64,
    pub spans: Vec<(usize, usize, usize, f64)>,
}

impl ScoreRecord {
    pub fn to_table(&self) -> Result<SpanScoreTable, ScoreError> {
        let mut table = SpanScoreTable::new(self.n, self.default);
        for &(l, r, h, s) in &self.spans {
            table.set(l, r, h, s)?;
        }
        Ok(table)
    }
}

/// Parses a score file into `(sent_id, table)` pairs in file order. Blank
/// lines are ignored.
pub fn parse_score_file(text: &str) -> Result<Vec<(String, SpanScoreTable)>, ScoreError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record_no = out.len() + 1;
        let rec: ScoreRecord = serde_json::from_str(line).map_err(|e| ScoreError::Record {
            record: record_no,
            sent_id: String::new(),
            msg: format!("line {}: {e}", i + 1),
        })?;
        if rec.n == 0 {
            return Err(ScoreError::Record {
                record: record_no,
                sent_id: rec.sent_id,
                msg: "n must be at least 1".into(),
            });
        }
        let table = rec.to_table().map_err(|e| ScoreError::Record {
            record: record_no,
            sent_id: rec.sent_id.clone(),
            msg: e.to_string(),
        })?;
        out.push((rec.sent_id, table));
    }
    Ok(out)
}

pub fn load_score_file(path: &Path) -> Result<Vec<(String, SpanScoreTable)>, ScoreError> {
    let text = std::fs::read_to_string(path).map_err(|e| ScoreError::Io(format!("{}: {e}", path.display())))?;
    parse_score_file(&text)
}

/// Serializes records as JSON Lines.
pub fn write_score_file(records: &[ScoreRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_entry_record() {
        let tables = parse_score_file(r#"{"n":1,"default":-1000000000.0,"spans":[[0,1,1,3.5]]}"#).unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].1.get(0, 1, 1), 3.5);
    }

    #[test]
    fn absent_triples_take_default() {
        let tables = parse_score_file(r#"{"sent_id":"a","n":3,"spans":[[0,3,2,1.0]]}"#).unwrap();
        let t = &tables[0].1;
        assert_eq!(tables[0].0, "a");
        assert_eq!(t.get(0, 3, 2), 1.0);
        assert_eq!(t.get(0, 3, 1), SCORE_FILE_DEFAULT);
        assert_eq!(t.default_score(), SCORE_FILE_DEFAULT);
    }

    #[test]
    fn rejects_invalid_triple_naming_record() {
        let text = "{\"sent_id\":\"ok\",\"n\":5,\"spans\":[]}\n{\"sent_id\":\"bad\",\"n\":5,\"spans\":[[2,5,2,1.0]]}\n";
        match parse_score_file(text).unwrap_err() {
            ScoreError::Record { record, sent_id, .. } => {
                assert_eq!(record, 2);
                assert_eq!(sent_id, "bad");
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_score_file("{not json}").is_err());
        assert!(parse_score_file(r#"{"n":0,"spans":[]}"#).is_err());
    }

    #[test]
    fn writes_parseable_records() {
        let rec = ScoreRecord {
            sent_id: "x".into(),
            n: 2,
            default: -5.0,
            spans: vec![(0, 2, 1, 1.0), (1, 2, 2, 0.5)],
        };
        let text = write_score_file(&[rec.clone()]);
        let back = parse_score_file(&text).unwrap();
        assert_eq!(back[0].1, rec.to_table().unwrap());
    }
}
