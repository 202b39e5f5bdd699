//! Training data model: attribute schema, column storage, CSV ingestion and
//! the index-list views that name the subset handled at each tree node.
//!
//! Indices are 0-based throughout the API. Discrete attribute values keep
//! their file representation `1..=T`, and class labels are mapped to
//! `0..M` in first-appearance order unless the schema declares them.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::criteria::ClassHistogram;
use crate::error::{Error, Result};
use crate::splitscan::SplitTest;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AttributeKind {
    Real,
    /// Values in `1..=domain`.
    Discrete { domain: u32 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    pub name: String,
    #[serde(flatten)]
    pub kind: AttributeKind,
}

impl Attribute {
    pub fn real(name: impl Into<String>) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Real,
        }
    }

    pub fn discrete(name: impl Into<String>, domain: u32) -> Self {
        Attribute {
            name: name.into(),
            kind: AttributeKind::Discrete { domain },
        }
    }
}

/// Attribute list plus class alphabet.
///
/// An empty `class_labels` list is only legal before ingestion; it asks the
/// CSV reader to discover labels in first-appearance order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeSchema {
    attributes: Vec<Attribute>,
    class_labels: Vec<String>,
}

impl AttributeSchema {
    pub fn new(attributes: Vec<Attribute>, class_labels: Vec<String>) -> Result<Self> {
        if attributes.is_empty() {
            return Err(Error::Config("schema needs at least one attribute".into()));
        }
        for (i, attr) in attributes.iter().enumerate() {
            if let AttributeKind::Discrete { domain } = attr.kind {
                if domain < 2 {
                    return Err(Error::Config(format!(
                        "discrete attribute {} ({}) needs a domain of at least 2 values",
                        i, attr.name
                    )));
                }
            }
        }
        let mut seen = HashMap::new();
        for (i, label) in class_labels.iter().enumerate() {
            if seen.insert(label.as_str(), i).is_some() {
                return Err(Error::Config(format!("duplicate class label {label:?}")));
            }
        }
        Ok(AttributeSchema {
            attributes,
            class_labels,
        })
    }

    /// Parses the schema sidecar: one `name,real` or `name,discrete,T` line per
    /// attribute. An optional `class,<label>,<label>...` line declares the
    /// class alphabet. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut attributes = Vec::new();
        let mut class_labels = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line_no = n + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let err = |message: String| Error::Schema {
                line: line_no,
                message,
            };
            match fields.as_slice() {
                ["class", labels @ ..] => {
                    if labels.is_empty() {
                        return Err(err("class line declares no labels".into()));
                    }
                    class_labels = labels.iter().map(|s| s.to_string()).collect();
                }
                [name, "real"] => attributes.push(Attribute::real(*name)),
                [name, "discrete", t] => {
                    let domain: u32 = t
                        .parse()
                        .map_err(|_| err(format!("bad domain size {t:?}")))?;
                    attributes.push(Attribute::discrete(*name, domain));
                }
                _ => return Err(err(format!("unrecognised schema line {line:?}"))),
            }
        }
        Self::new(attributes, class_labels).map_err(|e| match e {
            Error::Config(message) => Error::Schema { line: 0, message },
            other => other,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_sidecar(&self) -> String {
        let mut out = String::new();
        for attr in &self.attributes {
            match attr.kind {
                AttributeKind::Real => writeln!(out, "{},real", attr.name).unwrap(),
                AttributeKind::Discrete { domain } => {
                    writeln!(out, "{},discrete,{}", attr.name, domain).unwrap()
                }
            }
        }
        if !self.class_labels.is_empty() {
            writeln!(out, "class,{}", self.class_labels.join(",")).unwrap();
        }
        out
    }

    pub fn attributes(&self) -> &[Attribute] {
        &self.attributes
    }

    /// Number of attributes `d`.
    pub fn len(&self) -> usize {
        self.attributes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attributes.is_empty()
    }

    pub fn kind(&self, attr: usize) -> AttributeKind {
        self.attributes[attr].kind
    }

    /// Number of classes `M`.
    pub fn class_count(&self) -> usize {
        self.class_labels.len()
    }

    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.class_labels.iter().position(|l| l == label)
    }

    pub fn real_indices(&self) -> Vec<usize> {
        self.indices_where(|k| k == AttributeKind::Real)
    }

    pub fn discrete_indices(&self) -> Vec<usize> {
        self.indices_where(|k| matches!(k, AttributeKind::Discrete { .. }))
    }

    fn indices_where(&self, pred: impl Fn(AttributeKind) -> bool) -> Vec<usize> {
        (0..self.len()).filter(|&i| pred(self.kind(i))).collect()
    }

    pub(crate) fn with_class_labels(mut self, labels: Vec<String>) -> Self {
        self.class_labels = labels;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Column {
    Real(Vec<f64>),
    Discrete(Vec<u32>),
}

impl Column {
    fn len(&self) -> usize {
        match self {
            Column::Real(v) => v.len(),
            Column::Discrete(v) => v.len(),
        }
    }
}

/// Immutable training matrix, stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    schema: AttributeSchema,
    columns: Vec<Column>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(schema: AttributeSchema, columns: Vec<Column>, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyTrainingSet);
        }
        if schema.class_count() == 0 {
            return Err(Error::InvalidDataset("schema declares no classes".into()));
        }
        if columns.len() != schema.len() {
            return Err(Error::InvalidDataset(format!(
                "{} columns for {} attributes",
                columns.len(),
                schema.len()
            )));
        }
        let n = labels.len();
        for (j, (col, attr)) in columns.iter().zip(schema.attributes()).enumerate() {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column {j} has {} values, expected {n}",
                    col.len()
                )));
            }
            match (col, attr.kind) {
                (Column::Real(values), AttributeKind::Real) => {
                    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
                        return Err(Error::InvalidDataset(format!(
                            "non-finite value {v} in column {j}"
                        )));
                    }
                }
                (Column::Discrete(values), AttributeKind::Discrete { domain }) => {
                    if let Some(&v) = values.iter().find(|&&v| v < 1 || v > domain) {
                        return Err(Error::Domain {
                            attr: j,
                            value: v as i64,
                            domain,
                        });
                    }
                }
                _ => {
                    return Err(Error::InvalidDataset(format!(
                        "column {j} storage does not match attribute kind"
                    )))
                }
            }
        }
        let m = schema.class_count();
        if let Some(&y) = labels.iter().find(|&&y| y >= m) {
            return Err(Error::InvalidDataset(format!(
                "class index {y} outside 0..{m}"
            )));
        }
        Ok(Dataset {
            schema,
            columns,
            labels,
        })
    }

    /// Builds a dataset from row vectors; discrete cells must hold integral values.
    pub fn from_rows(schema: AttributeSchema, rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let d = schema.len();
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(Error::InvalidDataset(format!(
                "row {i} has {} values, expected {d}",
                row.len()
            )));
        }
        let mut columns = Vec::with_capacity(d);
        for j in 0..d {
            match schema.kind(j) {
                AttributeKind::Real => columns.push(Column::Real(rows.iter().map(|r| r[j]).collect())),
                AttributeKind::Discrete { domain } => {
                    let mut col = Vec::with_capacity(rows.len());
                    for r in rows {
                        col.push(discrete_cell(r[j], j, domain)?);
                    }
                    columns.push(Column::Discrete(col));
                }
            }
        }
        Dataset::new(schema, columns, labels)
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    /// Number of samples `N`.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.schema.len()
    }

    pub fn column(&self, attr: usize) -> &Column {
        &self.columns[attr]
    }

    pub fn label(&self, row: usize) -> usize {
        self.labels[row]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Cell value as a real number (discrete values widen losslessly).
    pub fn value(&self, attr: usize, row: usize) -> f64 {
        match &self.columns[attr] {
            Column::Real(v) => v[row],
            Column::Discrete(v) => v[row] as f64,
        }
    }

    pub fn row(&self, row: usize) -> Vec<f64> {
        (0..self.dimension()).map(|j| self.value(j, row)).collect()
    }

    pub fn full_view(&self) -> SubsetView<'_> {
        SubsetView {
            data: self,
            indices: (0..self.len()).collect(),
        }
    }

    /// Serialises back to the CSV dialect accepted by [`read_csv`].
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for attr in self.schema.attributes() {
            out.push_str(&attr.name);
            out.push(',');
        }
        out.push_str("class\n");
        for i in 0..self.len() {
            for col in &self.columns {
                match col {
                    Column::Real(v) => write!(out, "{}", v[i]).unwrap(),
                    Column::Discrete(v) => write!(out, "{}", v[i]).unwrap(),
                }
                out.push(',');
            }
            out.push_str(&self.schema.class_labels()[self.labels[i]]);
            out.push('\n');
        }
        out
    }
}

pub(crate) fn discrete_cell(v: f64, attr: usize, domain: u32) -> Result<u32> {
    if v.fract() != 0.0 || v < 1.0 || v > domain as f64 {
        return Err(Error::Domain {
            attr,
            value: if v.is_finite() { v as i64 } else { i64::MIN },
            domain,
        });
    }
    Ok(v as u32)
}

pub fn load_csv(path: impl AsRef<Path>, schema: &AttributeSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema)
}

/// Reads a labelled CSV whose header is the schema's attribute names
/// followed by `class`.
pub fn read_csv<R: Read>(reader: R, schema: &AttributeSchema) -> Result<Dataset> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    check_header(&header, schema, true)?;

    let d = schema.len();
    let mut cells: Vec<Vec<f64>> = Vec::new();
    let mut labels = Vec::new();
    let mut class_labels: Vec<String> = schema.class_labels().to_vec();
    let discover = class_labels.is_empty();

    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != d + 1 {
            return Err(Error::Parse {
                line,
                column: 0,
                message: format!("expected {} fields, found {}", d + 1, record.len()),
            });
        }
        cells.push(parse_cells(&record, schema, line)?);
        let label = record[d].trim();
        let y = match class_labels.iter().position(|l| l == label) {
            Some(y) => y,
            None if discover => {
                class_labels.push(label.to_string());
                class_labels.len() - 1
            }
            None => {
                return Err(Error::Parse {
                    line,
                    column: d + 1,
                    message: format!("class {label:?} not declared in schema"),
                })
            }
        };
        labels.push(y);
    }
    if labels.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let schema = schema.clone().with_class_labels(class_labels);
    Dataset::from_rows(schema, &cells, labels)
}

/// Reads attribute rows for prediction. A trailing `class` column, when
/// present in the header, is ignored.
pub fn read_unlabeled<R: Read>(reader: R, schema: &AttributeSchema) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv_reader(reader);
    let header = rdr.headers()?.clone();
    let with_class = check_header(&header, schema, false)?;
    let width = schema.len() + usize::from(with_class);
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record_line(&record);
        if record.len() != width {
            return Err(Error::Parse {
                line,
                column: 0,
                message: format!("expected {width} fields, found {}", record.len()),
            });
        }
        rows.push(parse_cells(&record, schema, line)?);
    }
    Ok(rows)
}

fn csv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader)
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(0)
}

/// Returns whether the header carries a trailing class column.
fn check_header(header: &csv::StringRecord, schema: &AttributeSchema, require_class: bool) -> Result<bool> {
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let d = schema.len();
    let with_class = names.len() == d + 1 && names[d] == "class";
    if require_class && !with_class || !with_class && names.len() != d {
        return Err(Error::Parse {
            line: 1,
            column: 0,
            message: format!(
                "header has {} columns, expected {} attribute names{}",
                names.len(),
                d,
                if require_class { " plus \"class\"" } else { "" }
            ),
        });
    }
    for (j, attr) in schema.attributes().iter().enumerate() {
        if names[j] != attr.name {
            return Err(Error::Parse {
                line: 1,
                column: j + 1,
                message: format!("header {:?} does not match attribute {:?}", names[j], attr.name),
            });
        }
    }
    Ok(with_class)
}

fn parse_cells(record: &csv::StringRecord, schema: &AttributeSchema, line: usize) -> Result<Vec<f64>> {
    let mut row = Vec::with_capacity(schema.len());
    for (j, attr) in schema.attributes().iter().enumerate() {
        let raw = record[j].trim();
        let bad = |message: String| Error::Parse {
            line,
            column: j + 1,
            message,
        };
        let v = match attr.kind {
            AttributeKind::Real => {
                let v: f64 = raw.parse().map_err(|_| bad(format!("cannot parse {raw:?} as a number")))?;
                if !v.is_finite() {
                    return Err(bad(format!("non-finite value {raw:?}")));
                }
                v
            }
            AttributeKind::Discrete { domain } => {
                let v: i64 = raw
                    .parse()
                    .map_err(|_| bad(format!("cannot parse {raw:?} as a discrete value")))?;
                if v < 1 || v > domain as i64 {
                    return Err(bad(format!("value {v} outside domain 1..={domain}")));
                }
                v as f64
            }
        };
        row.push(v);
    }
    Ok(row)
}

/// The subset of training rows handled at one node.
#[derive(Clone, Debug)]
pub struct SubsetView<'a> {
    data: &'a Dataset,
    indices: Vec<usize>,
}

impl<'a> SubsetView<'a> {
    pub fn new(data: &'a Dataset, indices: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; data.len()];
        for &i in &indices {
            if i >= data.len() {
                return Err(Error::InvalidDataset(format!("row index {i} out of range")));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidDataset(format!("row index {i} repeated")));
            }
        }
        Ok(SubsetView { data, indices })
    }

    pub fn data(&self) -> &'a Dataset {
        self.data
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn class_histogram(&self) -> ClassHistogram {
        let mut hist = ClassHistogram::new(self.data.schema().class_count());
        for &i in &self.indices {
            hist.add(self.data.label(i));
        }
        hist
    }

    pub fn is_pure(&self) -> bool {
        match self.indices.split_first() {
            None => true,
            Some((&first, rest)) => {
                let y = self.data.label(first);
                rest.iter().all(|&i| self.data.label(i) == y)
            }
        }
    }

    /// Splits the view by `test`, preserving index order within each part.
    ///
    /// A threshold test yields `[x <= θ, x > θ]`; a multiway test yields one
    /// (possibly empty) part per domain value.
    pub fn partition(&self, test: &SplitTest) -> Vec<SubsetView<'a>> {
        let mut parts: Vec<Vec<usize>> = vec![Vec::new(); test.branch_count()];
        match (*test, self.data.column(test.attr())) {
            (SplitTest::Threshold { theta, .. }, Column::Real(values)) => {
                for &i in &self.indices {
                    parts[usize::from(values[i] > theta)].push(i);
                }
            }
            (SplitTest::Multiway { .. }, Column::Discrete(values)) => {
                for &i in &self.indices {
                    parts[values[i] as usize - 1].push(i);
                }
            }
            _ => panic!("split test kind does not match attribute {}", test.attr()),
        }
        parts
            .into_iter()
            .map(|indices| SubsetView {
                data: self.data,
                indices,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_rd() -> AttributeSchema {
        AttributeSchema::new(
            vec![Attribute::real("x"), Attribute::discrete("k", 3)],
            vec!["A".into(), "B".into()],
        )
        .unwrap()
    }

    #[test]
    fn single_row_identity() {
        let data = read_csv("x,k,class\n1.5,2,A\n".as_bytes(), &schema_rd()).unwrap();
        assert_eq!(data.len(), 1);
        assert_eq!(data.row(0), vec![1.5, 2.0]);
        assert_eq!(data.label(0), 0);
        assert_eq!(data.schema().class_count(), 2);
    }

    #[test]
    fn out_of_domain_discrete_names_cell() {
        let err = read_csv("x,k,class\n1.5,2,A\n0.5,4,B\n".as_bytes(), &schema_rd()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (3, 2)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn header_only_is_empty_training_set() {
        let err = read_csv("x,k,class\n".as_bytes(), &schema_rd()).unwrap_err();
        assert!(matches!(err, Error::EmptyTrainingSet));
        assert_eq!(err.to_string(), "empty training set");
    }

    #[test]
    fn malformed_rows_are_located() {
        let cases = [
            ("x,k,class\n1.5,2\n", 2, 0),
            ("x,k,class\nabc,2,A\n", 2, 1),
            ("x,k,class\nNaN,2,A\n", 2, 1),
            ("x,k,class\n1,2,A\n2,1,C\n", 3, 3),
        ];
        for (text, line, column) in cases {
            match read_csv(text.as_bytes(), &schema_rd()).unwrap_err() {
                Error::Parse { line: l, column: c, .. } => assert_eq!((l, c), (line, column), "{text}"),
                other => panic!("unexpected {other:?} for {text}"),
            }
        }
    }

    #[test]
    fn crlf_and_discovered_labels() {
        let schema = AttributeSchema::parse("x,real\nk,discrete,3\n").unwrap();
        let data = read_csv("x,k,class\r\n1,1,dog\r\n2,3,cat\r\n3,2,dog\r\n".as_bytes(), &schema).unwrap();
        assert_eq!(data.schema().class_labels(), ["dog", "cat"]);
        assert_eq!(data.labels(), [0, 1, 0]);
    }

    #[test]
    fn schema_sidecar_round_trip() {
        let text = "x,real\nk,discrete,3\nclass,A,B\n";
        let schema = AttributeSchema::parse(text).unwrap();
        assert_eq!(schema, schema_rd());
        assert_eq!(schema.to_sidecar(), text);
        assert_eq!(schema.real_indices(), [0]);
        assert_eq!(schema.discrete_indices(), [1]);
        assert!(AttributeSchema::parse("k,discrete,1\n").is_err());
        assert!(AttributeSchema::parse("k,integer\n").is_err());
        assert!(AttributeSchema::parse("").is_err());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let text = "x,k,class\n0.1,1,A\n-3.0000000000000004,3,B\n1e-300,2,A\n";
        let data = read_csv(text.as_bytes(), &schema_rd()).unwrap();
        let again = read_csv(data.to_csv().as_bytes(), &schema_rd()).unwrap();
        assert_eq!(data, again);
        for i in 0..data.len() {
            assert_eq!(data.value(0, i).to_bits(), again.value(0, i).to_bits());
        }
    }

    #[test]
    fn unlabeled_rows_accept_optional_class_column() {
        let rows = read_unlabeled("x,k\n1,2\n".as_bytes(), &schema_rd()).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0]]);
        let rows = read_unlabeled("x,k,class\n1,2,A\n".as_bytes(), &schema_rd()).unwrap();
        assert_eq!(rows, vec![vec![1.0, 2.0]]);
        assert!(read_unlabeled("y,k\n1,2\n".as_bytes(), &schema_rd()).is_err());
    }

    fn one_column(kind: AttributeKind, values: &[f64]) -> Dataset {
        let attr = Attribute {
            name: "a".into(),
            kind,
        };
        let schema = AttributeSchema::new(vec![attr], vec!["A".into()]).unwrap();
        let rows: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
        Dataset::from_rows(schema, &rows, vec![0; values.len()]).unwrap()
    }

    #[test]
    fn threshold_partition() {
        let data = one_column(AttributeKind::Real, &[1.0, 2.0, 3.0, 4.0]);
        let view = data.full_view();
        let parts = view.partition(&SplitTest::Threshold { attr: 0, theta: 2.5 });
        assert_eq!(parts[0].indices(), [0, 1]);
        assert_eq!(parts[1].indices(), [2, 3]);

        let parts = view.partition(&SplitTest::Threshold { attr: 0, theta: 0.0 });
        assert!(parts[0].is_empty());
        assert_eq!(parts[1].indices(), [0, 1, 2, 3]);
    }

    #[test]
    fn multiway_partition_keeps_empty_branches() {
        let data = one_column(AttributeKind::Discrete { domain: 3 }, &[2.0, 2.0, 1.0]);
        let parts = data.full_view().partition(&SplitTest::Multiway { attr: 0, branches: 3 });
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0].indices(), [2]);
        assert_eq!(parts[1].indices(), [0, 1]);
        assert!(parts[2].is_empty());
    }

    #[test]
    fn view_rejects_bad_indices() {
        let data = one_column(AttributeKind::Real, &[1.0, 2.0]);
        assert!(SubsetView::new(&data, vec![0, 2]).is_err());
        assert!(SubsetView::new(&data, vec![1, 1]).is_err());
        assert!(SubsetView::new(&data, vec![1, 0]).is_ok());
    }
}
