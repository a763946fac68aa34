//! CSV ingestion and the bundled datasets.

use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use granulex::learners::Dataset;
use granulex::metadata::ClassCatalog;
use serde::{Deserialize, Serialize};

use crate::WorkbenchError;

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl Default for LabelColumn {
    fn default() -> Self {
        Self::Name("last".into())
    }
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(s.parse().map_or_else(|_| Self::Name(s.to_string()), Self::Index))
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Index(i) => write!(f, "{i}"),
            Self::Name(n) => f.write_str(n),
        }
    }
}

impl LabelColumn {
    /// Column index; `last` resolves to the final column unless a header
    /// column carries that name.
    fn resolve(&self, header: Option<&csv::StringRecord>, width: usize) -> Result<usize, WorkbenchError> {
        match self {
            Self::Index(i) if *i < width => Ok(*i),
            Self::Index(i) => Err(WorkbenchError::Data(format!("label column {i} out of range for {width} columns"))),
            Self::Name(name) => {
                if let Some(pos) = header.and_then(|h| h.iter().position(|c| c.trim() == name)) {
                    Ok(pos)
                } else if name == "last" {
                    Ok(width - 1)
                } else if header.is_none() {
                    Err(WorkbenchError::Data(format!("label column '{name}' needs a header row")))
                } else {
                    Err(WorkbenchError::Data(format!("no column named '{name}'")))
                }
            }
        }
    }
}

pub const BUNDLED: [&str; 3] = ["iris", "wine", "breast-cancer"];

/// One of the offline copies of the classic UCI datasets.
pub fn bundled(name: &str) -> Result<Dataset, WorkbenchError> {
    let text = match name {
        "iris" => include_str!("../assets/iris.csv"),
        "wine" => include_str!("../assets/wine.csv"),
        "breast-cancer" | "breast_cancer" => include_str!("../assets/breast_cancer.csv"),
        other => {
            return Err(WorkbenchError::Data(format!(
                "unknown bundled dataset '{other}' (available: {})",
                BUNDLED.join(", ")
            )))
        }
    };
    read_csv(text.as_bytes(), name, &LabelColumn::default(), true)
}

pub fn load_csv(path: &Path, label_column: &LabelColumn, header: bool) -> Result<Dataset, WorkbenchError> {
    let file = std::fs::File::open(path)
        .map_err(|e| WorkbenchError::Data(format!("cannot read {}: {e}", path.display())))?;
    let name = path.file_stem().map_or_else(|| "data".into(), |s| s.to_string_lossy().into_owned());
    read_csv(file, &name, label_column, header)
        .map_err(|e| WorkbenchError::Data(format!("{}: {}", path.display(), e.message())))
}

/// Parse a labelled CSV. Class names are catalogued in order of first
/// appearance. Row numbers in diagnostics are 1-based file lines.
pub fn read_csv<R: Read>(
    input: R,
    name: &str,
    label_column: &LabelColumn,
    header: bool,
) -> Result<Dataset, WorkbenchError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(header).trim(csv::Trim::All).from_reader(input);
    let header_row = if header {
        Some(reader.headers().map_err(|e| WorkbenchError::Data(e.to_string()))?.clone())
    } else {
        None
    };
    let mut rows = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut labels = Vec::new();
    let mut bad = Vec::new();
    let mut label_idx = None;
    let first_line = if header { 2 } else { 1 };
    for (i, record) in reader.records().enumerate() {
        let line = i + first_line;
        let record = record.map_err(|e| WorkbenchError::Data(format!("line {line}: {e}")))?;
        let width = record.len();
        let li = match label_idx {
            Some(li) => li,
            None => {
                if width < 2 {
                    return Err(WorkbenchError::Data("need at least one feature and a label column".into()));
                }
                *label_idx.insert(label_column.resolve(header_row.as_ref(), width)?)
            }
        };
        let mut features = Vec::with_capacity(width - 1);
        let mut ok = true;
        for (j, cell) in record.iter().enumerate() {
            if j == li {
                continue;
            }
            match cell.parse::<f64>() {
                Ok(v) if v.is_finite() => features.push(v),
                _ => ok = false,
            }
        }
        if !ok {
            bad.push(line);
            continue;
        }
        let label = record.get(li).unwrap_or_default().to_string();
        let class = names.iter().position(|n| *n == label).unwrap_or_else(|| {
            names.push(label);
            names.len() - 1
        });
        rows.push(features);
        labels.push(class);
    }
    if !bad.is_empty() {
        let listed: Vec<String> = bad.iter().take(20).map(ToString::to_string).collect();
        let more = if bad.len() > 20 { format!(" and {} more", bad.len() - 20) } else { String::new() };
        return Err(WorkbenchError::Data(format!(
            "non-numeric or missing feature values on line(s) {}{more}",
            listed.join(", ")
        )));
    }
    if rows.is_empty() {
        return Err(WorkbenchError::Data("no observations".into()));
    }
    if names.len() < 2 {
        return Err(WorkbenchError::Data(format!("only one class ('{}') present", names[0])));
    }
    Ok(Dataset::new(name, rows, labels, ClassCatalog::new(names)?)?)
}

/// Feature rows of an unlabelled (or labelled, with the label dropped) CSV.
pub fn read_features<R: Read>(
    input: R,
    header: bool,
    drop_column: Option<&LabelColumn>,
) -> Result<Vec<Vec<f64>>, WorkbenchError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(header).trim(csv::Trim::All).from_reader(input);
    let header_row = if header {
        Some(reader.headers().map_err(|e| WorkbenchError::Data(e.to_string()))?.clone())
    } else {
        None
    };
    let first_line = if header { 2 } else { 1 };
    let mut rows = Vec::new();
    let mut bad = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let line = i + first_line;
        let record = record.map_err(|e| WorkbenchError::Data(format!("line {line}: {e}")))?;
        let skip = drop_column.map(|c| c.resolve(header_row.as_ref(), record.len())).transpose()?;
        let parsed: Option<Vec<f64>> = record
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != skip)
            .map(|(_, cell)| cell.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect();
        match parsed {
            Some(row) => rows.push(row),
            None => bad.push(line.to_string()),
        }
    }
    if !bad.is_empty() {
        return Err(WorkbenchError::Data(format!(
            "non-numeric or missing feature values on line(s) {}",
            bad.join(", ")
        )));
    }
    Ok(rows)
}

/// Write `data` in the format `load_csv` reads with default options.
pub fn write_csv<W: std::io::Write>(data: &Dataset, out: W) -> Result<(), WorkbenchError> {
    let mut writer = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..data.dim()).map(|j| format!("x{j}")).collect();
    header.push("class".into());
    writer.write_record(&header).map_err(|e| WorkbenchError::Data(e.to_string()))?;
    for (row, &y) in data.rows().zip(data.labels()) {
        let mut record: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        record.push(data.catalog().name(y).unwrap_or_default().to_string());
        writer.write_record(&record).map_err(|e| WorkbenchError::Data(e.to_string()))?;
    }
    writer.flush().map_err(|e| WorkbenchError::Data(e.to_string()))?;
    Ok(())
}
