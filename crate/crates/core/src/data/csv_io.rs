use std::io::Read;
use std::path::Path;

use super::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::net::FeatureVector;

/// Loads a headed CSV file. Feature columns keep file order, the label column
/// is removed, and labels are mapped to dense indices by first appearance.
///
/// Pass the class names of an earlier load as `known_labels` so that a test
/// file reuses the training file's mapping; unseen labels are appended.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &str,
    split: Split,
    known_labels: Option<&[String]>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, label_column, split, known_labels).map_err(|e| match e {
        Error::EmptyFile(_) => Error::EmptyFile(path.to_path_buf()),
        Error::Malformed { reason, .. } => Error::malformed(path, reason),
        other => other,
    })
}

pub fn read_csv<R: Read>(
    reader: R,
    label_column: &str,
    split: Split,
    known_labels: Option<&[String]>,
) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::malformed("<csv>", e.to_string()))?
        .clone();
    if headers.is_empty() {
        return Err(Error::EmptyFile("<csv>".into()));
    }
    let label_idx = headers
        .iter()
        .position(|h| h == label_column)
        .ok_or_else(|| Error::MissingColumn(label_column.to_string()))?;

    let mut names: Vec<String> = known_labels.map(<[String]>::to_vec).unwrap_or_default();
    let mut instances = Vec::new();
    let mut labels = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| Error::malformed("<csv>", format!("row {row}: {e}")))?;
        if record.len() != headers.len() {
            return Err(Error::malformed(
                "<csv>",
                format!("row {row} has {} cells, header has {}", record.len(), headers.len()),
            ));
        }
        let mut values = Vec::with_capacity(headers.len() - 1);
        for (col, cell) in record.iter().enumerate() {
            if col == label_idx {
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[col].to_string(),
                value: cell.to_string(),
            })?;
            values.push(v);
        }
        let label = &record[label_idx];
        let class = match names.iter().position(|n| n == label) {
            Some(c) => c,
            None => {
                names.push(label.to_string());
                names.len() - 1
            }
        };
        instances.push(FeatureVector::flat(values));
        labels.push(class);
    }
    if instances.is_empty() {
        return Err(Error::EmptyFile("<csv>".into()));
    }
    Ok(Dataset::new(instances, labels, split)?.with_class_names(names))
}

/// Writes features (in order) followed by the label column.
pub fn write_csv(path: impl AsRef<Path>, ds: &Dataset, feature_names: &[String], label_column: &str) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::malformed(path, e.to_string()))?;
    let mut header: Vec<&str> = feature_names.iter().map(String::as_str).collect();
    header.push(label_column);
    w.write_record(&header).map_err(|e| Error::malformed(path, e.to_string()))?;
    for (x, &y) in ds.instances().iter().zip(ds.labels()) {
        let mut row: Vec<String> = x.values().iter().map(|v| v.to_string()).collect();
        row.push(
            ds.class_names()
                .and_then(|n| n.get(y).cloned())
                .unwrap_or_else(|| y.to_string()),
        );
        w.write_record(&row).map_err(|e| Error::malformed(path, e.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), "label", Split::Train, None)
    }

    #[test]
    fn labels_follow_first_appearance() {
        let ds = parse("a,b,label\n1,2,approve\n3,4,refuse\n5,6,approve\n").unwrap();
        assert_eq!(ds.labels(), &[0, 1, 0]);
        assert_eq!(ds.instances()[1].values(), &[3.0, 4.0]);
        assert_eq!(ds.class_names().unwrap(), &["approve".to_string(), "refuse".to_string()]);
    }

    #[test]
    fn label_column_may_sit_anywhere() {
        let ds = parse("label,a,b\nx,1,2\n").unwrap();
        assert_eq!(ds.instances()[0].values(), &[1.0, 2.0]);
    }

    #[test]
    fn non_numeric_cell_names_row_and_column() {
        match parse("a,b,label\n1,2,x\n3,abc,y\n") {
            Err(Error::Parse { row, column, value }) => {
                assert_eq!((row, column.as_str(), value.as_str()), (1, "b", "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_label_column() {
        assert!(matches!(parse("a,b\n1,2\n"), Err(Error::MissingColumn(c)) if c == "label"));
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(parse(""), Err(Error::EmptyFile(_))));
        assert!(matches!(parse("a,label\n"), Err(Error::EmptyFile(_))));
    }

    #[test]
    fn known_labels_are_reused() {
        let known = vec!["refuse".to_string(), "approve".to_string()];
        let ds = read_csv("a,label\n1,approve\n2,new\n".as_bytes(), "label", Split::Test, Some(&known)).unwrap();
        assert_eq!(ds.labels(), &[1, 2]);
    }
}
