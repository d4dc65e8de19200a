use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{normalize, Dataset, Normalization};
use crate::error::{Error, Result};
use crate::numerics::Tensor;
use crate::scalar::Scalar;

/// Which column, if any, holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelColumn {
    #[default]
    None,
    Last,
    Index(usize),
    Name(String),
}

fn parse_err(path: &Path, row: usize, detail: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        row,
        detail: detail.into(),
    }
}

/// Reads a rectangular numeric table. A first row with any non-numeric
/// feature cell is taken as a header. Labels may be integers or
/// arbitrary strings; strings are numbered in sorted order.
pub fn load_csv<T: Scalar>(path: &Path, label: &LabelColumn, normalization: Normalization) -> Result<Dataset<T>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            other => parse_err(path, 0, format!("{other:?}")),
        })?;
    let mut records = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, i + 1, e.to_string()))?;
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        records.push(rec);
    }
    let first = records.first().ok_or_else(|| parse_err(path, 1, "no data rows"))?;
    let width = first.len();
    let positional = match label {
        LabelColumn::Last => Some(width - 1),
        LabelColumn::Index(i) => Some(*i),
        _ => None,
    };
    let has_header = matches!(label, LabelColumn::Name(_))
        || first
            .iter()
            .enumerate()
            .any(|(c, cell)| Some(c) != positional && cell.parse::<f64>().is_err());
    let header: Option<Vec<String>> = has_header.then(|| first.iter().map(str::to_owned).collect());
    let label_idx = match label {
        LabelColumn::None => None,
        LabelColumn::Last => Some(width - 1),
        LabelColumn::Index(i) => {
            if *i >= width {
                return Err(Error::Config(format!("label column {i} out of range for {width} columns")));
            }
            Some(*i)
        }
        LabelColumn::Name(name) => {
            let h = header
                .as_ref()
                .ok_or_else(|| Error::Config(format!("label column `{name}` requested but the file has no header")))?;
            Some(
                h.iter()
                    .position(|c| c == name)
                    .ok_or_else(|| Error::Config(format!("no column named `{name}`")))?,
            )
        }
    };
    let n_features = width - label_idx.map_or(0, |_| 1);
    if n_features == 0 {
        return Err(Error::Config("table has no feature columns".into()));
    }
    let start = usize::from(has_header);
    let mut data = Vec::with_capacity((records.len() - start) * n_features);
    let mut raw_labels = Vec::new();
    for (r, rec) in records.iter().enumerate().skip(start) {
        let row_no = r + 1;
        if rec.len() != width {
            return Err(parse_err(path, row_no, format!("expected {width} columns, found {}", rec.len())));
        }
        for (c, cell) in rec.iter().enumerate() {
            if Some(c) == label_idx {
                raw_labels.push(cell.to_owned());
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, row_no, format!("column {c}: `{cell}` is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(path, row_no, format!("column {c}: non-finite value")));
            }
            data.push(T::of(v));
        }
    }
    let rows = records.len() - start;
    if rows == 0 {
        return Err(parse_err(path, 1, "header only, no data rows"));
    }
    let mut features = Tensor::new(vec![rows, n_features], data)?;
    normalize(&mut features, normalization);
    let labels = label_idx.map(|_| encode_labels(&raw_labels));
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "csv".into());
    Dataset::new(name, features, labels)
}

fn encode_labels(raw: &[String]) -> Vec<usize> {
    let ints: Option<Vec<usize>> = raw
        .iter()
        .map(|s| {
            s.parse::<usize>()
                .ok()
                .or_else(|| s.parse::<f64>().ok().filter(|v| v.fract() == 0.0 && *v >= 0.0).map(|v| v as usize))
        })
        .collect();
    if let Some(ints) = ints {
        return ints;
    }
    let ids: BTreeMap<&str, usize> = {
        let mut names: Vec<&str> = raw.iter().map(String::as_str).collect();
        names.sort_unstable();
        names.dedup();
        names.into_iter().enumerate().map(|(i, s)| (s, i)).collect()
    };
    raw.iter().map(|s| ids[s.as_str()]).collect()
}

/// Writes features (and labels as a trailing `label` column) with a header.
pub fn write_csv<T: Scalar>(dataset: &Dataset<T>, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Input(format!("{other:?}")),
    })?;
    let io = |e: csv::Error| Error::Input(format!("{}: {e}", path.display()));
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("f{j}")).collect();
    if dataset.labels().is_some() {
        header.push("label".into());
    }
    w.write_record(&header).map_err(io)?;
    for (i, row) in dataset.features().row_iter().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        if let Some(l) = dataset.labels() {
            rec.push(l[i].to_string());
        }
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn header_detection_and_labels() {
        let f = file("a,b,class\n1,2,0\n3,4,1\n5,6,1\n");
        let d = load_csv::<f64>(f.path(), &LabelColumn::Name("class".into()), Normalization::None).unwrap();
        assert_eq!(d.features().shape(), &[3, 2]);
        assert_eq!(d.labels().unwrap(), &[0, 1, 1]);
        assert_eq!(d.class_count, 2);
    }

    #[test]
    fn string_labels_are_numbered() {
        let f = file("1,walk\n2,sit\n3,walk\n");
        let d = load_csv::<f64>(f.path(), &LabelColumn::Last, Normalization::None).unwrap();
        assert_eq!(d.labels().unwrap(), &[1, 0, 1]);
    }

    #[test]
    fn ragged_and_non_numeric_rows() {
        let f = file("1,2\n3\n");
        match load_csv::<f64>(f.path(), &LabelColumn::None, Normalization::None).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 2),
            e => panic!("{e}"),
        }
        let f = file("x,y\n1,2\n3,abc\n");
        match load_csv::<f64>(f.path(), &LabelColumn::None, Normalization::None).unwrap_err() {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn label_column_out_of_range() {
        let f = file("1,2\n3,4\n");
        let e = load_csv::<f64>(f.path(), &LabelColumn::Index(5), Normalization::None).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
    }
}
