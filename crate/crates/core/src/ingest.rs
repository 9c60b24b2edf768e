//! Building attack instances from materialized query result sets.
//!
//! The attacker's view of a result set is a stream of `(query, tuple_pk)`
//! rows — the primary key of the attacked relation for every result tuple.
//! Grouping and counting that stream yields the joint weights; summing a
//! query's weights recovers its clean cardinality, so the linear
//! decomposition holds by construction.
//!
//! Inputs are CSV with headers `query_id,tuple_pk` (raw rows) or
//! `query_id,tuple_pk,count` (pre-aggregated). Files ending in `.gz` or
//! `.gzip` are transparently decompressed.

use std::collections::HashMap;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::instance::{AttackInstance, JointWeightMatrix, QueryId, TupleId};

/// One result tuple of one query's materialized result set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResultRow {
    pub query: QueryId,
    pub tuple_pk: TupleId,
}

/// One pre-aggregated `(query, tuple, count)` record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroupedRecord {
    pub query: QueryId,
    pub tuple_pk: TupleId,
    pub count: i64,
}

/// Group-by extraction: `w_ij` = number of rows with `(query=j, tuple=i)`.
///
/// Single pass, `O(|rows|)` time, memory bounded by the number of distinct
/// `(query, tuple)` pairs. Row numbers in errors are 1-based positions in
/// the stream.
pub fn extract_joint_weights<I>(
    rows: I,
    n_tuples: usize,
    n_queries: usize,
) -> Result<JointWeightMatrix>
where
    I: IntoIterator<Item = Result<ResultRow>>,
{
    let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
    for (idx, row) in rows.into_iter().enumerate() {
        let row = row?;
        let (q, t) = (row.query.0, row.tuple_pk.0);
        if q >= n_queries || t >= n_tuples {
            return Err(Error::Ingest {
                row: idx as u64 + 1,
                message: format!(
                    "indices (query={q}, tuple={t}) out of range for {n_queries} queries x {n_tuples} tuples"
                ),
            });
        }
        *counts.entry((q, t)).or_insert(0) += 1;
    }
    JointWeightMatrix::from_entries(n_tuples, n_queries, counts.into_iter().map(|((q, t), w)| (q, t, w)))
}

/// Builds a matrix from pre-aggregated records, rejecting duplicate
/// `(query, tuple)` pairs and negative counts.
pub fn load_grouped_counts<I>(
    records: I,
    n_tuples: usize,
    n_queries: usize,
) -> Result<JointWeightMatrix>
where
    I: IntoIterator<Item = Result<GroupedRecord>>,
{
    let mut seen: HashMap<(usize, usize), ()> = HashMap::new();
    let mut entries = Vec::new();
    for (idx, record) in records.into_iter().enumerate() {
        let row = idx as u64 + 1;
        let record = record?;
        let (q, t) = (record.query.0, record.tuple_pk.0);
        if q >= n_queries || t >= n_tuples {
            return Err(Error::Ingest {
                row,
                message: format!(
                    "indices (query={q}, tuple={t}) out of range for {n_queries} queries x {n_tuples} tuples"
                ),
            });
        }
        if record.count < 0 {
            return Err(Error::Ingest {
                row,
                message: format!("negative count {} for (query={q}, tuple={t})", record.count),
            });
        }
        if seen.insert((q, t), ()).is_some() {
            return Err(Error::Ingest {
                row,
                message: format!("duplicate record for (query={q}, tuple={t})"),
            });
        }
        entries.push((q, t, record.count as u64));
    }
    JointWeightMatrix::from_entries(n_tuples, n_queries, entries)
}

fn open_maybe_gzip(path: &Path) -> Result<Box<dyn Read>> {
    let file = std::fs::File::open(path)?;
    let name = path.to_string_lossy();
    if name.ends_with(".gz") || name.ends_with(".gzip") {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn csv_reader(path: &Path, expected_headers: &[&str]) -> Result<csv::Reader<Box<dyn Read>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(open_maybe_gzip(path)?);
    let headers = reader.headers().map_err(csv_error)?;
    let got: Vec<&str> = headers.iter().collect();
    if got != expected_headers {
        return Err(Error::Ingest {
            row: 1,
            message: format!("expected header {expected_headers:?}, found {got:?}"),
        });
    }
    Ok(reader)
}

fn csv_error(err: csv::Error) -> Error {
    let row = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Ingest { row, message: err.to_string() }
}

#[derive(Deserialize)]
struct RawResultRow {
    query_id: usize,
    tuple_pk: usize,
}

#[derive(Deserialize)]
struct RawGroupedRow {
    query_id: usize,
    tuple_pk: usize,
    count: i64,
}

/// Streams result rows from a `query_id,tuple_pk` CSV file.
pub fn read_result_rows(path: impl AsRef<Path>) -> Result<impl Iterator<Item = Result<ResultRow>>> {
    let reader = csv_reader(path.as_ref(), &["query_id", "tuple_pk"])?;
    Ok(reader.into_deserialize::<RawResultRow>().map(|record| {
        record.map_err(csv_error).map(|raw| ResultRow {
            query: QueryId(raw.query_id),
            tuple_pk: TupleId(raw.tuple_pk),
        })
    }))
}

/// Streams grouped records from a `query_id,tuple_pk,count` CSV file.
pub fn read_grouped_records(
    path: impl AsRef<Path>,
) -> Result<impl Iterator<Item = Result<GroupedRecord>>> {
    let reader = csv_reader(path.as_ref(), &["query_id", "tuple_pk", "count"])?;
    Ok(reader.into_deserialize::<RawGroupedRow>().map(|record| {
        record.map_err(csv_error).map(|raw| GroupedRecord {
            query: QueryId(raw.query_id),
            tuple_pk: TupleId(raw.tuple_pk),
            count: raw.count,
        })
    }))
}

/// End-to-end: result-row CSV file to attack instance.
pub fn instance_from_result_csv(
    path: impl AsRef<Path>,
    n_tuples: usize,
    n_queries: usize,
    budget: u64,
) -> Result<AttackInstance> {
    let matrix = extract_joint_weights(read_result_rows(path)?, n_tuples, n_queries)?;
    AttackInstance::from_weights(matrix, budget)
}

/// End-to-end: grouped-count CSV file to attack instance.
pub fn instance_from_grouped_csv(
    path: impl AsRef<Path>,
    n_tuples: usize,
    n_queries: usize,
    budget: u64,
) -> Result<AttackInstance> {
    let matrix = load_grouped_counts(read_grouped_records(path)?, n_tuples, n_queries)?;
    AttackInstance::from_weights(matrix, budget)
}
