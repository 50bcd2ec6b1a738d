use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Class-by-attribute strength matrix with attribute and class names.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributeMatrix {
    values: DMatrix<f64>,
    attribute_names: Vec<String>,
    class_names: Vec<String>,
}

impl AttributeMatrix {
    pub fn new(values: DMatrix<f64>, attribute_names: Vec<String>, class_names: Vec<String>) -> Result<Self> {
        if values.ncols() != attribute_names.len() || values.nrows() != class_names.len() {
            return Err(Error::Dimension(format!(
                "{}x{} matrix with {} class names and {} attribute names",
                values.nrows(),
                values.ncols(),
                class_names.len(),
                attribute_names.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Param(format!("non-finite attribute value {v}")));
        }
        Ok(Self {
            values,
            attribute_names,
            class_names,
        })
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn attribute_names(&self) -> &[String] {
        &self.attribute_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_attributes(&self) -> usize {
        self.values.ncols()
    }

    /// Sub-matrix holding the rows of `classes`, in the given order.
    pub fn rows(&self, classes: &[usize]) -> DMatrix<f64> {
        self.values.select_rows(classes.iter())
    }

    /// Indices of attribute columns that are zero for every class.
    pub fn zero_columns(&self) -> Vec<usize> {
        (0..self.n_attributes())
            .filter(|&j| self.values.column(j).iter().all(|&v| v == 0.0))
            .collect()
    }
}

/// Reads the tab-separated attribute table: a `class<TAB>attr_1…` header
/// followed by one row per class.
pub fn load_attribute_matrix(path: &Path) -> Result<AttributeMatrix> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_attribute_tsv(&text, path)
}

pub(crate) fn parse_attribute_tsv(text: &str, path: &Path) -> Result<AttributeMatrix> {
    let parse_err = |line: usize, column: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        message,
    };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, 1, "empty file".into()))?;
    let mut header_cells = header.split('\t');
    if header_cells.next().map(str::trim) != Some("class") {
        return Err(parse_err(1, 1, "header must start with `class`".into()));
    }
    let attribute_names: Vec<String> = header_cells.map(|s| s.trim().to_string()).collect();
    if attribute_names.is_empty() {
        return Err(parse_err(1, 2, "header declares no attributes".into()));
    }
    let d = attribute_names.len();

    let mut class_names = Vec::new();
    let mut data = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != d + 1 {
            return Err(parse_err(
                line_no,
                cells.len().min(d + 1),
                format!("expected {} cells, found {}", d + 1, cells.len()),
            ));
        }
        class_names.push(cells[0].trim().to_string());
        for (j, cell) in cells[1..].iter().enumerate() {
            let v: f64 = cell
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, j + 2, format!("non-numeric cell {cell:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(line_no, j + 2, format!("non-finite cell {cell:?}")));
            }
            data.push(v);
        }
    }
    let values = DMatrix::from_row_slice(class_names.len(), d, &data);
    let m = AttributeMatrix::new(values, attribute_names, class_names)?;
    for j in m.zero_columns() {
        log::warn!("attribute {:?} is zero for every class", m.attribute_names[j]);
    }
    Ok(m)
}

/// Writes the matrix in the same TSV layout that [`load_attribute_matrix`]
/// reads. Values use the shortest representation that parses back exactly.
pub fn write_attribute_matrix(m: &AttributeMatrix, path: &Path) -> Result<()> {
    let mut out = String::from("class");
    for name in &m.attribute_names {
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (i, class) in m.class_names.iter().enumerate() {
        out.push_str(class);
        for j in 0..m.n_attributes() {
            let _ = write!(out, "\t{}", m.values[(i, j)]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Divides every entry by `scale_max`, so that a matrix on a `0..=scale_max`
/// scale lands in `[0, 1]`.
pub fn normalize_attributes(m: &AttributeMatrix, scale_max: f64) -> Result<AttributeMatrix> {
    if !(scale_max > 0.0 && scale_max.is_finite()) {
        return Err(Error::Param(format!("scale_max must be positive, got {scale_max}")));
    }
    for i in 0..m.n_classes() {
        for j in 0..m.n_attributes() {
            let v = m.values[(i, j)];
            if !(0.0..=scale_max).contains(&v) {
                return Err(Error::Range {
                    row: i,
                    column: j,
                    value: v,
                    scale_max,
                });
            }
        }
    }
    let values = if scale_max == 1.0 {
        m.values.clone()
    } else {
        m.values.map(|v| v / scale_max)
    };
    Ok(AttributeMatrix {
        values,
        attribute_names: m.attribute_names.clone(),
        class_names: m.class_names.clone(),
    })
}
