//! Comma-delimited output with a `#`-prefixed metadata block.

use crate::failure::Failure;

pub struct Table {
    meta: Vec<(String, String)>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    /// A table whose metadata starts with the tool name and version.
    pub fn new(command: &str) -> Self {
        Self {
            meta: vec![
                ("tool".into(), format!("aerialnet {}", env!("CARGO_PKG_VERSION"))),
                ("command".into(), command.into()),
            ],
            header: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.into(), value.to_string()));
        self
    }

    pub fn header<S: AsRef<str>>(&mut self, columns: &[S]) -> &mut Self {
        self.header = columns.iter().map(|c| c.as_ref().to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    pub fn render(&self) -> Result<String, Failure> {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        if self.header.is_empty() {
            return Ok(out);
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Failure::Runtime(format!("formatting table: {e}"));
        w.write_record(&self.header).map_err(fail)?;
        for r in &self.rows {
            w.write_record(r).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| Failure::Runtime(format!("formatting table: {e}")))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is UTF-8"));
        Ok(out)
    }
}

/// Shortest round-trip form, in exponent notation outside [1e-3, 1e6);
/// empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    match v {
        None => String::new(),
        Some(x) if x == 0.0 || !x.is_finite() || (1e-3..1e6).contains(&x.abs()) => x.to_string(),
        Some(x) => format!("{x:e}"),
    }
}
