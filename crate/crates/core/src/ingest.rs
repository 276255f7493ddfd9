//! Delimited text ingestion.
//!
//! Data files hold variables in rows and samples in columns:
//!
//! ```text
//! id    s1  s2  s3
//! g1    1   2   3
//! g2    0   0   1
//! ```
//!
//! Metadata files hold one row per sample; the first column is the sample id
//! and every further column is a named annotation. Metadata rows may come in
//! any order and may omit samples, which then carry the empty annotation
//! value.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{PmaError, Result};

/// Sentinel annotation value for samples absent from the metadata file.
pub const MISSING_ANNOTATION: &str = "";

/// Field delimiter selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Tab if the first line contains a tab, comma otherwise.
    #[default]
    Auto,
    Tab,
    Comma,
}

impl Delimiter {
    pub fn resolve(self, text: &str) -> char {
        match self {
            Delimiter::Tab => '\t',
            Delimiter::Comma => ',',
            Delimiter::Auto => detect_delimiter(text),
        }
    }
}

impl FromStr for Delimiter {
    type Err = PmaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Delimiter::Auto),
            "tab" | "tsv" => Ok(Delimiter::Tab),
            "comma" | "csv" => Ok(Delimiter::Comma),
            other => Err(PmaError::Config(format!(
                "unknown delimiter `{other}` (expected auto, tab or comma)"
            ))),
        }
    }
}

pub fn detect_delimiter(text: &str) -> char {
    let first = text.lines().next().unwrap_or("");
    if first.contains('\t') {
        '\t'
    } else {
        ','
    }
}

/// A p × n numeric matrix (variables × samples) with per-sample annotations.
///
/// Immutable once built; all constructors validate the invariants.
#[derive(Debug, Clone, PartialEq)]
pub struct DataFrame {
    variable_ids: Vec<String>,
    sample_ids: Vec<String>,
    values: DMatrix<f64>,
    annotations: BTreeMap<String, Vec<String>>,
}

impl DataFrame {
    pub fn new(
        variable_ids: Vec<String>,
        sample_ids: Vec<String>,
        values: DMatrix<f64>,
    ) -> Result<Self> {
        if variable_ids.is_empty() || sample_ids.is_empty() {
            return Err(PmaError::EmptyInput(format!(
                "{} variables × {} samples",
                variable_ids.len(),
                sample_ids.len()
            )));
        }
        if values.nrows() != variable_ids.len() || values.ncols() != sample_ids.len() {
            return Err(PmaError::Config(format!(
                "matrix is {}×{} but ids describe {}×{}",
                values.nrows(),
                values.ncols(),
                variable_ids.len(),
                sample_ids.len()
            )));
        }
        check_unique("variable", &variable_ids)?;
        check_unique("sample", &sample_ids)?;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % values.nrows(), pos / values.nrows());
            return Err(PmaError::parse(
                row + 2,
                Some(col + 2),
                "non-finite value",
            ));
        }
        Ok(DataFrame {
            variable_ids,
            sample_ids,
            values,
            annotations: BTreeMap::new(),
        })
    }

    /// Builds a frame with generated ids `v1..` / `s1..`, mostly for tests and
    /// programmatic use.
    pub fn from_matrix(values: DMatrix<f64>) -> Result<Self> {
        let variable_ids = (1..=values.nrows()).map(|i| format!("v{i}")).collect();
        let sample_ids = (1..=values.ncols()).map(|j| format!("s{j}")).collect();
        DataFrame::new(variable_ids, sample_ids, values)
    }

    /// Attaches (or replaces) one annotation column.
    pub fn with_annotation(mut self, name: &str, values: Vec<String>) -> Result<Self> {
        if values.len() != self.n_samples() {
            return Err(PmaError::Config(format!(
                "annotation `{name}` has {} values for {} samples",
                values.len(),
                self.n_samples()
            )));
        }
        self.annotations.insert(name.to_string(), values);
        Ok(self)
    }

    pub fn n_variables(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.values.ncols()
    }

    pub fn variable_ids(&self) -> &[String] {
        &self.variable_ids
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Variables in rows, samples in columns.
    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn annotations(&self) -> &BTreeMap<String, Vec<String>> {
        &self.annotations
    }

    pub fn annotation(&self, name: &str) -> Result<&[String]> {
        self.annotations
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| PmaError::UnknownAnnotation(name.to_string()))
    }

    /// Serializes the numeric part in the layout accepted by [`parse_data`].
    ///
    /// Values are written with shortest round-trip formatting so that parsing
    /// the output reproduces the matrix bit for bit.
    pub fn to_delimited(&self, delimiter: char) -> String {
        let mut writer = csv_writer(delimiter);
        let mut header = vec!["id".to_string()];
        header.extend(self.sample_ids.iter().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (i, id) in self.variable_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.values.row(i).iter().map(|v| format!("{v:?}")));
            writer.write_record(&row).expect("in-memory write");
        }
        finish(writer)
    }

    /// Serializes the annotations in the layout accepted by [`parse_annotations`].
    pub fn annotations_to_delimited(&self, delimiter: char) -> String {
        let mut writer = csv_writer(delimiter);
        let mut header = vec!["sample".to_string()];
        header.extend(self.annotations.keys().cloned());
        writer.write_record(&header).expect("in-memory write");
        for (j, id) in self.sample_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.annotations.values().map(|col| col[j].clone()));
            writer.write_record(&row).expect("in-memory write");
        }
        finish(writer)
    }
}

fn csv_writer(delimiter: char) -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .delimiter(delimiter as u8)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(writer: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn check_unique(kind: &'static str, ids: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(ids.len());
    for id in ids {
        if !seen.insert(id.as_str()) {
            return Err(PmaError::DuplicateId {
                kind,
                id: id.clone(),
            });
        }
    }
    Ok(())
}

/// Reads all records, returning each with its 1-based line number.
fn read_records(text: &str, delimiter: char) -> Result<Vec<(usize, Vec<String>)>> {
    if !delimiter.is_ascii() {
        return Err(PmaError::Config(format!(
            "delimiter {delimiter:?} is not a single-byte character"
        )));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            PmaError::parse(line, None, e.to_string())
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        // A lone empty field is a blank line.
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        rows.push((line, record.iter().map(str::to_string).collect()));
    }
    Ok(rows)
}

/// Parses a data matrix: a header row (corner cell, then sample ids) followed
/// by one row per variable (id, then one numeric field per sample).
pub fn parse_data(text: &str, delimiter: char) -> Result<DataFrame> {
    let mut rows = read_records(text, delimiter)?.into_iter();
    let (_, header) = rows
        .next()
        .ok_or_else(|| PmaError::EmptyInput("no header row".into()))?;
    let sample_ids: Vec<String> = header[1..].to_vec();
    let n = sample_ids.len();
    if n == 0 {
        return Err(PmaError::EmptyInput("header lists no samples".into()));
    }

    let mut variable_ids = Vec::new();
    let mut data = Vec::new();
    for (line, fields) in rows {
        if fields.len() != n + 1 {
            return Err(PmaError::parse(
                line,
                None,
                format!("expected {} fields, found {}", n + 1, fields.len()),
            ));
        }
        variable_ids.push(fields[0].clone());
        for (col, cell) in fields[1..].iter().enumerate() {
            let value = parse_number(cell).ok_or_else(|| {
                PmaError::parse(line, Some(col + 2), format!("`{cell}` is not a finite number"))
            })?;
            data.push(value);
        }
    }
    let p = variable_ids.len();
    if p == 0 {
        return Err(PmaError::EmptyInput("no variable rows".into()));
    }
    // Rows were read variable by variable.
    let values = DMatrix::from_row_slice(p, n, &data);
    DataFrame::new(variable_ids, sample_ids, values)
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Attaches the annotations of a metadata file to `frame`, re-indexed to the
/// frame's sample order.
pub fn parse_annotations(text: &str, delimiter: char, frame: DataFrame) -> Result<DataFrame> {
    let mut rows = read_records(text, delimiter)?.into_iter();
    let (_, header) = rows
        .next()
        .ok_or_else(|| PmaError::EmptyInput("metadata has no header row".into()))?;
    let names: Vec<String> = header[1..].to_vec();
    check_unique("annotation", &names)?;

    let index: HashMap<&str, usize> = frame
        .sample_ids
        .iter()
        .enumerate()
        .map(|(j, id)| (id.as_str(), j))
        .collect();
    let n = frame.n_samples();
    let mut columns = vec![vec![MISSING_ANNOTATION.to_string(); n]; names.len()];
    let mut seen = HashSet::new();
    for (line, fields) in rows {
        if fields.len() != names.len() + 1 {
            return Err(PmaError::parse(
                line,
                None,
                format!("expected {} fields, found {}", names.len() + 1, fields.len()),
            ));
        }
        let sample = &fields[0];
        let &j = index
            .get(sample.as_str())
            .ok_or_else(|| PmaError::UnknownSample(sample.clone()))?;
        if !seen.insert(j) {
            return Err(PmaError::DuplicateId {
                kind: "metadata sample",
                id: sample.clone(),
            });
        }
        for (column, value) in columns.iter_mut().zip(&fields[1..]) {
            column[j] = value.clone();
        }
    }

    names
        .iter()
        .zip(columns)
        .try_fold(frame, |frame, (name, column)| {
            frame.with_annotation(name, column)
        })
}

/// Parses a data file and, when given, its metadata file, each with its own
/// delimiter resolution.
pub fn load_frame(data: &str, metadata: Option<&str>, delimiter: Delimiter) -> Result<DataFrame> {
    let frame = parse_data(data, delimiter.resolve(data))?;
    match metadata {
        Some(meta) => parse_annotations(meta, delimiter.resolve(meta), frame),
        None => Ok(frame),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_basic_tsv() {
        let frame = parse_data("id\ts1\ts2\ts3\ng1\t1\t2\t3\ng2\t0\t0\t1", '\t').unwrap();
        assert_eq!(frame.n_variables(), 2);
        assert_eq!(frame.n_samples(), 3);
        assert_eq!(
            frame.values(),
            &DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 0.0, 0.0, 1.0])
        );
        assert_eq!(frame.sample_ids(), ["s1", "s2", "s3"]);
        assert_eq!(frame.variable_ids(), ["g1", "g2"]);
    }

    #[test]
    fn ragged_row_reports_row() {
        let err = parse_data("id\ts1\ts2\ts3\ng1\t1\t2\t3\ng2\t0\t1", '\t').unwrap_err();
        assert!(matches!(err, PmaError::Parse { row: 3, column: None, .. }), "{err:?}");
    }

    #[test]
    fn non_numeric_cell_reports_row_and_column() {
        let err = parse_data("id,a,b\nx,1,foo\n", ',').unwrap_err();
        assert!(matches!(err, PmaError::Parse { row: 2, column: Some(3), .. }), "{err:?}");
        let err = parse_data("id,a,b\nx,1,NaN\n", ',').unwrap_err();
        assert!(matches!(err, PmaError::Parse { .. }));
        let err = parse_data("id,a,b\nx,1,\n", ',').unwrap_err();
        assert!(matches!(err, PmaError::Parse { .. }), "missing values are not imputed");
    }

    #[test]
    fn scientific_notation_and_crlf() {
        let frame = parse_data("id,s1\r\ng1,1e-3\r\ng2,-2.5E2\r\n", ',').unwrap();
        assert_eq!(frame.values()[(0, 0)], 0.001);
        assert_eq!(frame.values()[(1, 0)], -250.0);
    }

    #[test]
    fn duplicate_and_empty_inputs() {
        assert!(matches!(
            parse_data("id,s1,s1\ng,1,2", ',').unwrap_err(),
            PmaError::DuplicateId { kind: "sample", .. }
        ));
        assert!(matches!(
            parse_data("id,s1\ng,1\ng,2", ',').unwrap_err(),
            PmaError::DuplicateId { kind: "variable", .. }
        ));
        assert!(matches!(parse_data("id,s1,s2\n", ',').unwrap_err(), PmaError::EmptyInput(_)));
        assert!(matches!(parse_data("id\ng\n", ',').unwrap_err(), PmaError::EmptyInput(_)));
        assert!(matches!(parse_data("", ',').unwrap_err(), PmaError::EmptyInput(_)));
    }

    #[test]
    fn delimiter_detection() {
        assert_eq!(detect_delimiter("id\ta\nx\t1"), '\t');
        assert_eq!(detect_delimiter("id,a\nx\t1"), ',');
        assert_eq!(Delimiter::Comma.resolve("a\tb"), ',');
        assert_eq!("tab".parse::<Delimiter>().unwrap(), Delimiter::Tab);
        assert!("pipe".parse::<Delimiter>().is_err());
    }

    fn toy() -> DataFrame {
        parse_data("id\ts1\ts2\ts3\ng1\t1\t2\t3\ng2\t0\t0\t1", '\t').unwrap()
    }

    #[test]
    fn annotations_reindex_by_sample_id() {
        let frame = parse_annotations("sample\tgroup\ns2\tA\ns1\tA\ns3\tB\n", '\t', toy()).unwrap();
        assert_eq!(frame.annotation("group").unwrap(), ["A", "A", "B"]);
    }

    #[test]
    fn missing_metadata_gets_sentinel() {
        let frame = parse_annotations("sample\tgroup\ns2\tA\ns1\tA\n", '\t', toy()).unwrap();
        assert_eq!(frame.annotation("group").unwrap(), ["A", "A", ""]);
    }

    #[test]
    fn metadata_errors() {
        assert_eq!(
            parse_annotations("sample\tgroup\ns9\tA\n", '\t', toy()).unwrap_err(),
            PmaError::UnknownSample("s9".into())
        );
        assert!(matches!(
            parse_annotations("sample\tg\tg\ns1\tA\tB\n", '\t', toy()).unwrap_err(),
            PmaError::DuplicateId { kind: "annotation", .. }
        ));
        assert!(matches!(
            parse_annotations("sample\tg\ns1\tA\ns1\tB\n", '\t', toy()).unwrap_err(),
            PmaError::DuplicateId { .. }
        ));
        assert_eq!(
            toy().annotation("nope").unwrap_err(),
            PmaError::UnknownAnnotation("nope".into())
        );
    }

    #[test]
    fn serialization_round_trips() {
        let frame = parse_annotations("sample,group\ns1,A\ns3,\"B,C\"\n", ',', toy()).unwrap();
        for delim in ['\t', ','] {
            let data = parse_data(&frame.to_delimited(delim), delim).unwrap();
            let again =
                parse_annotations(&frame.annotations_to_delimited(delim), delim, data).unwrap();
            assert_eq!(again, frame);
        }
    }
}
