use clap::ValueEnum;
use nalgebra::{DMatrix, DVector};
use rellich::display::{format_exact, format_general};
use serde_json::{json, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Human,
    Csv,
    Json,
}

pub fn num(x: f64, f: Format) -> String {
    match f {
        Format::Csv => format_exact(x),
        _ => format_general(x, 6),
    }
}

/// `(a, b, c)` in human mode, `a,b,c` in CSV mode.
pub fn vector(v: &[f64], f: Format) -> String {
    let parts: Vec<String> = v.iter().map(|&x| num(x, f)).collect();
    match f {
        Format::Csv => parts.join(","),
        _ => format!("({})", parts.join(", ")),
    }
}

pub fn csv_header(prefix: &str, n: usize) -> String {
    let cols: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
    format!("{prefix},{}", cols.join(","))
}

pub fn json_vec(v: &DVector<f64>) -> Value {
    json!(v.as_slice())
}

/// Rows of `m` as nested arrays.
pub fn json_matrix(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| json!(m.row(r).iter().copied().collect::<Vec<_>>())).collect())
}

pub fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json value serializes"));
}
