//! Canonical CSV formats.
//!
//! Problem CSV:
//! `id,ha,pha,la,lot_num_a,lot_shape_a,hb,phb,lb,lot_num_b,lot_shape_b,corr,amb`
//! with lottery shapes coded 0=None, 1=Symm, 2=RSkew, 3=LSkew, `corr` in
//! {-1,0,1} and `amb` in {0,1}. Money columns are two-decimal strings.
//!
//! Target CSV: `problem_id,block,feedback,n,a_rate`. `n` is the number of
//! simulated agents for synthetic targets (0 for closed-form models) and
//! the participant count for human data.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamble::{Correlation, Gamble, GambleError, LotShape, Problem, Schema};
use crate::money::Money;
use crate::space::{ProblemSet, Provenance};

pub const PROBLEM_HEADER: [&str; 13] = [
    "id",
    "ha",
    "pha",
    "la",
    "lot_num_a",
    "lot_shape_a",
    "hb",
    "phb",
    "lb",
    "lot_num_b",
    "lot_shape_b",
    "corr",
    "amb",
];

pub const TARGET_HEADER: [&str; 5] = ["problem_id", "block", "feedback", "n", "a_rate"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {source}")]
    Csv {
        context: String,
        #[source]
        source: csv::Error,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{context}, record {record}: {message}")]
    Invalid {
        context: String,
        record: usize,
        message: String,
    },
}

impl IoError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// One per-block choice rate for one problem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub problem_id: String,
    pub block: u32,
    pub feedback: bool,
    pub n: u32,
    pub a_rate: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ProblemRow {
    id: String,
    ha: Money,
    pha: f64,
    la: Money,
    lot_num_a: u32,
    lot_shape_a: i64,
    hb: Money,
    phb: f64,
    lb: Money,
    lot_num_b: u32,
    lot_shape_b: i64,
    corr: i64,
    amb: u8,
}

impl ProblemRow {
    fn from_problem(p: &Problem) -> Self {
        let (a, b) = (p.gamble_a(), p.gamble_b());
        ProblemRow {
            id: p.id().to_string(),
            ha: a.high,
            pha: a.p_high,
            la: a.low,
            lot_num_a: a.lot_num,
            lot_shape_a: a.lot_shape.code().into(),
            hb: b.high,
            phb: b.p_high,
            lb: b.low,
            lot_num_b: b.lot_num,
            lot_shape_b: b.lot_shape.code().into(),
            corr: p.corr().code().into(),
            amb: u8::from(p.amb()),
        }
    }

    fn into_problem(self, schema: Schema) -> Result<Problem, GambleError> {
        let a = Gamble::new(
            self.ha,
            self.pha,
            self.la,
            self.lot_num_a,
            LotShape::from_code(self.lot_shape_a)?,
        )?;
        let b = Gamble::new(
            self.hb,
            self.phb,
            self.lb,
            self.lot_num_b,
            LotShape::from_code(self.lot_shape_b)?,
        )?;
        let amb = match self.amb {
            0 => false,
            1 => true,
            other => return Err(GambleError::InvalidProbability(other as f64)),
        };
        Problem::new(self.id, a, b, Correlation::from_code(self.corr)?, amb, schema)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TargetRow {
    problem_id: String,
    block: u32,
    feedback: u8,
    n: u32,
    a_rate: f64,
}

pub fn write_problems<W: Write>(writer: W, problems: &[Problem]) -> Result<(), IoError> {
    let ctx = || "writing problem CSV".to_string();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(PROBLEM_HEADER)
        .map_err(|source| IoError::Csv { context: ctx(), source })?;
    for p in problems {
        w.serialize(ProblemRow::from_problem(p))
            .map_err(|source| IoError::Csv { context: ctx(), source })?;
    }
    w.flush().map_err(|e| IoError::Csv {
        context: ctx(),
        source: e.into(),
    })
}

pub fn read_problems<R: Read>(reader: R, schema: Schema, context: &str) -> Result<Vec<Problem>, IoError> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r
        .headers()
        .map_err(|source| IoError::Csv {
            context: context.to_string(),
            source,
        })?
        .clone();
    if header.iter().ne(PROBLEM_HEADER.iter().copied()) {
        return Err(IoError::Invalid {
            context: context.to_string(),
            record: 0,
            message: format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<ProblemRow>().enumerate() {
        let row = row.map_err(|source| IoError::Csv {
            context: context.to_string(),
            source,
        })?;
        let p = row.into_problem(schema).map_err(|e| IoError::Invalid {
            context: context.to_string(),
            record: i + 1,
            message: e.to_string(),
        })?;
        out.push(p);
    }
    Ok(out)
}

pub fn write_targets<W: Write>(writer: W, records: &[TargetRecord]) -> Result<(), IoError> {
    let ctx = || "writing target CSV".to_string();
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(TARGET_HEADER)
        .map_err(|source| IoError::Csv { context: ctx(), source })?;
    for t in records {
        w.serialize(TargetRow {
            problem_id: t.problem_id.clone(),
            block: t.block,
            feedback: u8::from(t.feedback),
            n: t.n,
            a_rate: t.a_rate,
        })
        .map_err(|source| IoError::Csv { context: ctx(), source })?;
    }
    w.flush().map_err(|e| IoError::Csv {
        context: ctx(),
        source: e.into(),
    })
}

/// Reads a target CSV, checking the header, block numbers and rate range.
pub fn read_targets<R: Read>(reader: R, context: &str) -> Result<Vec<TargetRecord>, IoError> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut records = r.records();
    let invalid = |record: usize, message: String| IoError::Invalid {
        context: context.to_string(),
        record,
        message,
    };
    let header = records
        .next()
        .ok_or_else(|| invalid(0, "empty file".into()))?
        .map_err(|source| IoError::Csv {
            context: context.to_string(),
            source,
        })?;
    if header.iter().ne(TARGET_HEADER.iter().copied()) {
        return Err(invalid(
            0,
            format!("unexpected header `{}`", header.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(|source| IoError::Csv {
            context: context.to_string(),
            source,
        })?;
        let row: TargetRow = rec.deserialize(None).map_err(|source| IoError::Csv {
            context: context.to_string(),
            source,
        })?;
        if row.block < 1 {
            return Err(invalid(i + 1, "block must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&row.a_rate) {
            return Err(invalid(i + 1, format!("a_rate {} outside [0, 1]", row.a_rate)));
        }
        let feedback = match row.feedback {
            0 => false,
            1 => true,
            other => return Err(invalid(i + 1, format!("feedback flag {other} not in {{0,1}}"))),
        };
        out.push(TargetRecord {
            problem_id: row.problem_id,
            block: row.block,
            feedback,
            n: row.n,
            a_rate: row.a_rate,
        });
    }
    Ok(out)
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| IoError::io(dir, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| IoError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| IoError::io(path, e))
}

/// Path of the provenance sidecar for a problem CSV (`foo.csv` -> `foo.provenance.json`).
pub fn provenance_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("provenance.json")
}

/// Writes the problem CSV and, when present, its provenance sidecar.
pub fn save_problem_set(path: &Path, set: &ProblemSet) -> Result<(), IoError> {
    write_problems(create(path)?, &set.problems).map_err(|e| with_path(e, path))?;
    if let Some(prov) = &set.provenance {
        let side = provenance_path(path);
        let json = serde_json::to_string_pretty(prov).map_err(|source| IoError::Json {
            context: side.display().to_string(),
            source,
        })?;
        std::fs::write(&side, json + "\n").map_err(|e| IoError::io(&side, e))?;
    }
    Ok(())
}

/// Loads a problem CSV, picking up the provenance sidecar if one exists.
pub fn load_problem_set(path: &Path, schema: Schema) -> Result<ProblemSet, IoError> {
    let problems = read_problems(open(path)?, schema, &path.display().to_string())?;
    let side = provenance_path(path);
    let provenance = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| IoError::io(&side, e))?;
        Some(
            serde_json::from_str::<Provenance>(&text).map_err(|source| IoError::Json {
                context: side.display().to_string(),
                source,
            })?,
        )
    } else {
        None
    };
    Ok(ProblemSet {
        problems,
        schema,
        provenance,
    })
}

pub fn save_targets(path: &Path, records: &[TargetRecord]) -> Result<(), IoError> {
    write_targets(create(path)?, records).map_err(|e| with_path(e, path))
}

pub fn load_targets(path: &Path) -> Result<Vec<TargetRecord>, IoError> {
    read_targets(open(path)?, &path.display().to_string())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| IoError::Json {
        context: path.display().to_string(),
        source,
    })?;
    w.write_all(b"\n").map_err(|e| IoError::io(path, e))?;
    w.flush().map_err(|e| IoError::io(path, e))
}

pub fn load_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, IoError> {
    serde_json::from_reader(open(path)?).map_err(|source| IoError::Json {
        context: path.display().to_string(),
        source,
    })
}

fn with_path(e: IoError, path: &Path) -> IoError {
    match e {
        IoError::Csv { source, .. } => IoError::Csv {
            context: path.display().to_string(),
            source,
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{generate_set, SpaceConfig};

    #[test]
    fn problem_csv_roundtrip() {
        let set = generate_set(&SpaceConfig::cpc18(), 200, &[], 4).unwrap();
        let mut buf = Vec::new();
        write_problems(&mut buf, &set.problems).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with(&PROBLEM_HEADER.join(",")));
        let back = read_problems(buf.as_slice(), Schema::Cpc18, "mem").unwrap();
        assert_eq!(back, set.problems);
    }

    #[test]
    fn intro_problem_row_format() {
        let a = Gamble::simple(Money::from_units(100), 0.5, Money::from_units(-100)).unwrap();
        let b = Gamble::sure(Money::ZERO);
        let p = Problem::new("p1", a, b, Correlation::Negative, true, Schema::Cpc15).unwrap();
        let mut buf = Vec::new();
        write_problems(&mut buf, &[p]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().nth(1).unwrap(),
            "p1,100.00,0.5,-100.00,1,0,0.00,1.0,0.00,1,0,-1,1"
        );
    }

    #[test]
    fn cpc15_file_with_lottery_on_a_is_rejected() {
        let text = format!(
            "{}\nx,10,0.5,0,3,1,5,1,5,1,0,0,0\n",
            PROBLEM_HEADER.join(",")
        );
        let err = read_problems(text.as_bytes(), Schema::Cpc15, "mem").unwrap_err();
        assert!(matches!(err, IoError::Invalid { record: 1, .. }), "{err}");
        assert!(read_problems(text.as_bytes(), Schema::Cpc18, "mem").is_ok());
    }

    #[test]
    fn target_csv_roundtrip_and_validation() {
        let recs = vec![
            TargetRecord {
                problem_id: "a".into(),
                block: 1,
                feedback: false,
                n: 16,
                a_rate: 0.4375,
            },
            TargetRecord {
                problem_id: "a".into(),
                block: 2,
                feedback: true,
                n: 16,
                a_rate: 1.0,
            },
        ];
        let mut buf = Vec::new();
        write_targets(&mut buf, &recs).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "problem_id,block,feedback,n,a_rate\na,1,0,16,0.4375\na,2,1,16,1.0\n"
        );
        assert_eq!(read_targets(buf.as_slice(), "mem").unwrap(), recs);

        let bad = "problem_id,block,feedback,n,a_rate\na,1,0,16,1.5\n";
        assert!(read_targets(bad.as_bytes(), "mem").is_err());
        let bad_header = "id,block\n";
        assert!(read_targets(bad_header.as_bytes(), "mem").is_err());
    }
}
