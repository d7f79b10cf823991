//! A minimal statistical database: schemaless records, a three-relation
//! predicate, exact counting queries and Laplace-perturbed answers.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::mechanism::{sample_noise, PrivacyLevel};
use crate::stream::UniformSource;

/// One record: field name to string value.
pub type Record = BTreeMap<String, String>;

/// Immutable collection of records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RecordSet {
    records: Vec<Record>,
}

impl RecordSet {
    pub fn new(records: Vec<Record>) -> Self {
        Self { records }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    /// Returns a copy with one extra record appended.
    pub fn with_record(&self, record: Record) -> Self {
        let mut records = self.records.clone();
        records.push(record);
        Self { records }
    }
}

/// Reads comma-separated rows with a header line.
///
/// Fields may be double-quoted, with `""` standing for a literal quote.
/// Rows whose arity differs from the header are rejected with their row
/// number (the header is row 1).
pub fn load_records<R: Read>(source: R) -> Result<RecordSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(b',')
        .quote(b'"')
        .double_quote(true)
        .escape(None)
        .flexible(false)
        .from_reader(source);

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| parse_error(&e, 1))?
        .iter()
        .map(str::to_owned)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::Parse {
            row: 1,
            message: "empty header".into(),
        });
    }

    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| parse_error(&e, i as u64 + 2))?;
        records.push(header.iter().cloned().zip(row.iter().map(str::to_owned)).collect());
    }
    Ok(RecordSet { records })
}

fn parse_error(err: &csv::Error, fallback_row: u64) -> Error {
    let row = match err.kind() {
        csv::ErrorKind::UnequalLengths { pos: Some(pos), .. } => pos.record() + 1,
        _ => err.position().map_or(fallback_row, |p| p.record() + 1),
    };
    let message = match err.kind() {
        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
            format!("expected {expected_len} fields, found {len}")
        }
        _ => err.to_string(),
    };
    Error::Parse { row, message }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Equals(String),
    NotEquals(String),
    InSet(Vec<String>),
}

/// `ψ: record → {0, 1}`. A record lacking the field never matches.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    pub field: String,
    pub relation: Relation,
}

impl Predicate {
    pub fn equals(field: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            relation: Relation::Equals(value.into()),
        }
    }

    pub fn not_equals(field: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            relation: Relation::NotEquals(value.into()),
        }
    }

    pub fn in_set<I, S>(field: impl Into<String>, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            field: field.into(),
            relation: Relation::InSet(values.into_iter().map(Into::into).collect()),
        }
    }

    pub fn matches(&self, record: &Record) -> bool {
        let Some(value) = record.get(&self.field) else {
            return false;
        };
        match &self.relation {
            Relation::Equals(v) => value == v,
            Relation::NotEquals(v) => value != v,
            Relation::InSet(vs) => vs.iter().any(|v| v == value),
        }
    }
}

/// Parses `<field> <op> <value>` where `op` is `=`, `==`, `!=` or `in`.
/// For `in`, the value is a comma-separated list.
impl FromStr for Predicate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.trim().splitn(3, char::is_whitespace);
        let (Some(field), Some(op), Some(value)) = (parts.next(), parts.next(), parts.next()) else {
            return Err(invalid(format!(
                "predicate {s:?} is not of the form `<field> <op> <value>`"
            )));
        };
        let value = value.trim();
        match op {
            "=" | "==" => Ok(Self::equals(field, value)),
            "!=" => Ok(Self::not_equals(field, value)),
            "in" => Ok(Self::in_set(field, value.split(',').map(str::trim))),
            other => Err(invalid(format!("unknown relation {other:?}; expected =, != or in"))),
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.relation {
            Relation::Equals(v) => write!(f, "{} = {}", self.field, v),
            Relation::NotEquals(v) => write!(f, "{} != {}", self.field, v),
            Relation::InSet(vs) => write!(f, "{} in {}", self.field, vs.join(",")),
        }
    }
}

/// Exact number of records satisfying `pred`.
pub fn count_query(db: &RecordSet, pred: &Predicate) -> u64 {
    db.records.iter().filter(|r| pred.matches(r)).count() as u64
}

/// Owner-side result of a noisy counting query.
///
/// Only [`QueryResult::public_answer`] is meant to leave the trusted side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryResult {
    true_count: u64,
    noisy_value: f64,
    epsilon_used: f64,
}

impl QueryResult {
    pub fn true_count(&self) -> u64 {
        self.true_count
    }

    pub fn noisy_value(&self) -> f64 {
        self.noisy_value
    }

    pub fn epsilon_used(&self) -> f64 {
        self.epsilon_used
    }

    pub fn public_answer(&self) -> PublicAnswer {
        PublicAnswer {
            noisy_value: self.noisy_value,
            epsilon: self.epsilon_used,
        }
    }
}

/// What the analyst sees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PublicAnswer {
    pub noisy_value: f64,
    pub epsilon: f64,
}

impl PublicAnswer {
    /// One-line JSON form, `{"noisy_value":…,"epsilon":…}`.
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("two finite floats always serialize")
    }
}

/// `count_query` plus one Laplace draw.
pub fn noisy_count_query<S: UniformSource + ?Sized>(
    db: &RecordSet,
    pred: &Predicate,
    level: &PrivacyLevel,
    stream: &mut S,
) -> QueryResult {
    let true_count = count_query(db, pred);
    let noise = sample_noise(level, stream);
    QueryResult {
        true_count,
        noisy_value: true_count as f64 + noise.value(),
        epsilon_used: level.epsilon(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::calibrate;
    use crate::stream::{FixedUniform, RunStream};

    const PEOPLE: &str = "\
name,city,smoker
ann,Rome,yes
bob,Milan,no
cid,Rome,no
";

    #[test]
    fn loads_rows() {
        let db = load_records(PEOPLE.as_bytes()).unwrap();
        assert_eq!(db.len(), 3);
        assert_eq!(db.records()[1]["city"], "Milan");
    }

    #[test]
    fn header_only_is_empty_db() {
        let db = load_records("name,city\n".as_bytes()).unwrap();
        assert!(db.is_empty());
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(load_records("".as_bytes()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn arity_mismatch_names_row() {
        let src = "a,b\n1,2\n3\n4,5\n";
        match load_records(src.as_bytes()) {
            Err(Error::Parse { row, message }) => {
                assert_eq!(row, 3, "{message}");
                assert!(message.contains("expected 2"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn doubled_quotes() {
        let db = load_records("q,v\n\"say \"\"hi\"\"\",1\n\"a,b\",2\n".as_bytes()).unwrap();
        assert_eq!(db.records()[0]["q"], "say \"hi\"");
        assert_eq!(db.records()[1]["q"], "a,b");
    }

    #[test]
    fn predicate_parsing() {
        assert_eq!(
            "city = Rome".parse::<Predicate>().unwrap(),
            Predicate::equals("city", "Rome")
        );
        assert_eq!(
            "city == Rome".parse::<Predicate>().unwrap(),
            Predicate::equals("city", "Rome")
        );
        assert_eq!(
            "city != Rome".parse::<Predicate>().unwrap(),
            Predicate::not_equals("city", "Rome")
        );
        assert_eq!(
            "city in Rome, Milan".parse::<Predicate>().unwrap(),
            Predicate::in_set("city", ["Rome", "Milan"])
        );
        assert!("city Rome".parse::<Predicate>().is_err());
        assert!("city > 3".parse::<Predicate>().is_err());
    }

    #[test]
    fn counting() {
        let db = load_records(PEOPLE.as_bytes()).unwrap();
        assert_eq!(count_query(&db, &Predicate::equals("city", "Rome")), 2);
        assert_eq!(count_query(&db, &Predicate::not_equals("city", "Rome")), 1);
        assert_eq!(count_query(&db, &Predicate::in_set("name", ["ann", "bob", "zed"])), 2);
        assert_eq!(count_query(&db, &Predicate::equals("city", "Paris")), 0);
        assert_eq!(count_query(&db, &Predicate::equals("height", "tall")), 0);
        // Missing field is false even under "not equals".
        assert_eq!(count_query(&db, &Predicate::not_equals("height", "tall")), 0);
    }

    #[test]
    fn median_draw_gives_true_count() {
        let db = load_records(PEOPLE.as_bytes()).unwrap();
        let pred = Predicate::equals("city", "Rome");
        let r = noisy_count_query(&db, &pred, &calibrate(0.1).unwrap(), &mut FixedUniform(0.5));
        assert_eq!(r.noisy_value(), 2.0);
        assert_eq!(r.true_count(), 2);
    }

    #[test]
    fn same_seed_same_answer() {
        let db = load_records(PEOPLE.as_bytes()).unwrap();
        let pred = Predicate::equals("smoker", "yes");
        let eps = calibrate(0.3).unwrap();
        let a = noisy_count_query(&db, &pred, &eps, &mut RunStream::new(5, 0));
        let b = noisy_count_query(&db, &pred, &eps, &mut RunStream::new(5, 0));
        assert_eq!(a.noisy_value().to_bits(), b.noisy_value().to_bits());
    }

    #[test]
    fn public_answer_json() {
        let answer = PublicAnswer {
            noisy_value: 3.5,
            epsilon: 0.1,
        };
        assert_eq!(answer.to_json_line(), r#"{"noisy_value":3.5,"epsilon":0.1}"#);
    }
}
