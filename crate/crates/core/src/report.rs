//! Deterministic report documents: ordered key-value sections for the
//! human-readable report and flat tab-separated tables for plot data.
//! Every float goes through one formatter (12 significant digits), so
//! identical inputs serialize byte for byte.

/// 12 significant digits in scientific notation; infinities and NaN
/// spelled in lowercase so the document stays machine-parseable.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.11e}")
    }
}

/// Ordered key-value document with named sections.
#[derive(Debug, Default)]
pub struct Doc {
    out: String,
}

impl Doc {
    pub fn new() -> Doc {
        Doc::default()
    }

    pub fn section(&mut self, name: &str) {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        self.out.push('[');
        self.out.push_str(name);
        self.out.push_str("]\n");
    }

    pub fn str(&mut self, key: &str, value: &str) {
        self.out.push_str(key);
        self.out.push_str(" = ");
        self.out.push_str(value);
        self.out.push('\n');
    }

    pub fn float(&mut self, key: &str, x: f64) {
        let v = format_float(x);
        self.str(key, &v);
    }

    pub fn uint(&mut self, key: &str, v: usize) {
        self.str(key, &v.to_string());
    }

    pub fn boolean(&mut self, key: &str, v: bool) {
        self.str(key, if v { "true" } else { "false" });
    }

    pub fn floats(&mut self, key: &str, xs: &[f64]) {
        let body: Vec<String> = xs.iter().map(|&x| format_float(x)).collect();
        let v = format!("[{}]", body.join(", "));
        self.str(key, &v);
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Flat numeric table with a header row; one row per radius, iteration,
/// or grid step, so any plotting tool can consume it.
#[derive(Debug, Default)]
pub struct PlotTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl PlotTable {
    pub fn new(columns: &[&str]) -> PlotTable {
        PlotTable { header: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, values: &[f64]) {
        debug_assert_eq!(values.len(), self.header.len());
        self.rows.push(values.to_vec());
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = self.header.join("\t");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|&x| format_float(x)).collect();
            out.push_str(&cells.join("\t"));
            out.push('\n');
        }
        out
    }
}
