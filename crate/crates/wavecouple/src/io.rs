//! CSV and flat-text artifacts. Numbers are written with 17 significant
//! digits so they read back to the same f64.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::field::Field;

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Row and column strides that keep about `max_rows` rows and `max_cols`
/// columns of a field.
pub fn stride_for(field: &Field, max_rows: usize, max_cols: usize) -> (usize, usize) {
    let g = field.grid;
    (g.nt.div_ceil(max_rows).max(1), g.nx.div_ceil(max_cols).max(1))
}

/// `t,x,<names>` rows, row-major by t, every `stride` node. The last row
/// and column are always included.
pub fn fields_csv(names: &[&str], fields: &[&Field], stride: (usize, usize)) -> String {
    let g = fields[0].grid;
    let pick = |n: usize, s: usize| -> Vec<usize> {
        let mut v: Vec<usize> = (0..n).step_by(s).collect();
        if *v.last().unwrap() != n - 1 {
            v.push(n - 1);
        }
        v
    };
    let mut out = String::from("t,x");
    for n in names {
        out.push(',');
        out.push_str(n);
    }
    out.push('\n');
    for n in pick(g.nt, stride.0) {
        for j in pick(g.nx, stride.1) {
            let _ = write!(out, "{},{}", num(g.t(n)), num(g.x(j)));
            for f in fields {
                let _ = write!(out, ",{}", num(f.at(n, j)));
            }
            out.push('\n');
        }
    }
    out
}

/// `t,value` rows.
pub fn trace_csv(t: &[f64], values: &[f64]) -> String {
    let mut out = String::from("t,value\n");
    for (a, b) in t.iter().zip(values) {
        let _ = writeln!(out, "{},{}", num(*a), num(*b));
    }
    out
}

/// Flat `key = value` report, keys in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub entries: Vec<(String, String)>,
}

impl Report {
    pub fn put(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.entries.push((key.to_string(), value.to_string()));
        self
    }

    pub fn put_f(&mut self, key: &str, value: f64) -> &mut Self {
        self.put(key, num(value))
    }

    pub fn extend(&mut self, prefix: &str, other: &Report) {
        for (k, v) in &other.entries {
            self.entries.push((format!("{prefix}.{k}"), v.clone()));
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }
}

pub fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text)?;
    Ok(())
}
