//! Tabular output as CSV (with `#` comment header), JSON, and a gnuplot
//! script written beside each CSV file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};

use crate::config::Format;
use crate::CliError;

pub const VERSION_HEADER: &str = concat!("# qcmap v", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) if v.is_finite() => format!("{v:?}"),
            Cell::Num(_) | Cell::Empty => String::new(),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => json!(v),
            Cell::Num(_) | Cell::Empty => Value::Null,
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

/// How the plot script draws the table.
#[derive(Debug, Clone, PartialEq)]
pub enum PlotStyle {
    /// Column 1 against each listed column.
    Lines { x_label: String, y_label: String, columns: Vec<usize> },
    /// Step histogram of column 2 against column 1.
    Steps { x_label: String, y_label: String },
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    /// Free-form `key: value` notes written as comments / JSON metadata.
    pub notes: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub plot: PlotStyle,
}

impl Table {
    pub fn new(title: impl Into<String>, columns: Vec<String>) -> Self {
        Table {
            title: title.into(),
            notes: Vec::new(),
            columns,
            rows: Vec::new(),
            plot: PlotStyle::None,
        }
    }

    pub fn note(&mut self, key: impl Into<String>, value: impl ToString) {
        self.notes.push((key.into(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(VERSION_HEADER);
        out.push('\n');
        out.push_str(&format!("# {}\n", self.title));
        for (k, v) in &self.notes {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::csv)).expect("in-memory write");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }

    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect();
                Value::Object(obj)
            })
            .collect();
        let notes: Map<String, Value> = self.notes.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "title": self.title,
            "notes": notes,
            "columns": self.columns,
            "records": records,
        })
    }

    pub fn gnuplot(&self, data: &Path) -> Option<String> {
        let file = data.file_name()?.to_string_lossy().to_string();
        let mut s = format!(
            "# gnuplot script for {file}\nset datafile separator ','\nset datafile commentschars '#'\nset key autotitle columnhead\nset title \"{}\"\n",
            self.title.replace('"', "'")
        );
        match &self.plot {
            PlotStyle::Lines { x_label, y_label, columns } => {
                s.push_str(&format!("set xlabel \"{x_label}\"\nset ylabel \"{y_label}\"\n"));
                let parts: Vec<String> = columns
                    .iter()
                    .map(|c| format!("'{file}' using 1:{} with linespoints", c + 1))
                    .collect();
                s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
            }
            PlotStyle::Steps { x_label, y_label } => {
                s.push_str(&format!(
                    "set xlabel \"{x_label}\"\nset ylabel \"{y_label}\"\nset xrange [-1:1]\nplot '{file}' using 1:2 with boxes notitle\n"
                ));
            }
            PlotStyle::None => return None,
        }
        s.push_str("pause -1\n");
        Some(s)
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io {
        path: path.to_path_buf(),
        source: e,
    }
}

/// Writes one or more tables. With several tables and an output path, each
/// goes to `<stem>-<index>.<ext>`; without a path they go to stdout.
pub fn write_output(tables: &[Table], format: Format, path: Option<&Path>) -> Result<Vec<PathBuf>, CliError> {
    let render = |t: &Table| match format {
        Format::Csv => t.to_csv(),
        Format::Json => serde_json::to_string_pretty(&t.to_json()).expect("json values") + "\n",
    };
    let Some(path) = path else {
        let stdout = std::io::stdout();
        let mut lock = stdout.lock();
        for t in tables {
            lock.write_all(render(t).as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e))?;
        }
        return Ok(Vec::new());
    };
    let mut written = Vec::new();
    for (k, t) in tables.iter().enumerate() {
        let target = if tables.len() == 1 {
            path.to_path_buf()
        } else {
            let stem = path.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
            let ext = path.extension().map(|s| s.to_string_lossy().to_string()).unwrap_or_else(|| "csv".into());
            path.with_file_name(format!("{stem}-{k}.{ext}"))
        };
        if let Some(dir) = target.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        }
        fs::write(&target, render(t)).map_err(|e| io_error(&target, e))?;
        written.push(target.clone());
        if format == Format::Csv {
            if let Some(script) = t.gnuplot(&target) {
                let gp = target.with_extension("gp");
                fs::write(&gp, script).map_err(|e| io_error(&gp, e))?;
                written.push(gp);
            }
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", vec!["eps".into(), "exact".into(), "sqc".into()]);
        t.note("beta", 0.3);
        t.push(vec![Cell::Num(0.0), Cell::Num(-0.5), Cell::Empty]);
        t.push(vec![Cell::Num(1.0), Cell::Num(-0.6), Cell::Num(-0.55)]);
        t.plot = PlotStyle::Lines {
            x_label: "eps".into(),
            y_label: "C".into(),
            columns: vec![1, 2],
        };
        t
    }

    #[test]
    fn csv_has_version_header_and_empty_cells() {
        let csv = sample().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], VERSION_HEADER);
        assert!(lines.contains(&"eps,exact,sqc"));
        assert!(lines.contains(&"0.0,-0.5,"));
    }

    #[test]
    fn json_mirrors_records() {
        let j = sample().to_json();
        assert_eq!(j["records"][0]["sqc"], Value::Null);
        assert_eq!(j["records"][1]["sqc"], json!(-0.55));
        assert_eq!(j["notes"]["beta"], json!("0.3"));
    }

    #[test]
    fn files_and_plot_script_are_written() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        let written = write_output(&[sample()], Format::Csv, Some(&path)).unwrap();
        assert_eq!(written.len(), 2);
        let gp = fs::read_to_string(dir.path().join("sub/out.gp")).unwrap();
        assert!(gp.contains("using 1:3"));
        assert!(fs::read_to_string(&path).unwrap().starts_with("# qcmap v"));
    }
}
