//! Delimited-text output with `#` metadata headers.

use serde::{Deserialize, Serialize};

pub const TOOL: &str = "eitcool";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const REPLAY_PREFIX: &str = "# replay: ";

/// Nine significant digits, `%.9g` style.
pub fn g9(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    // round once in scientific form so the exponent reflects the rounding
    let sci = format!("{:.8e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if !(-5..9).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (8 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Everything needed to rerun a command: its arguments (without the output
/// path) and the contents of the files it read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayRecord {
    pub tool: String,
    pub version: String,
    pub args: Vec<String>,
    pub config: Option<String>,
    pub data: Option<String>,
}

impl ReplayRecord {
    pub fn header_line(&self) -> String {
        format!(
            "{REPLAY_PREFIX}{}",
            serde_json::to_string(self).expect("record serializes")
        )
    }

    pub fn from_output(text: &str) -> Option<Result<Self, serde_json::Error>> {
        text.lines()
            .take_while(|l| l.starts_with('#'))
            .find_map(|l| l.strip_prefix(REPLAY_PREFIX))
            .map(serde_json::from_str)
    }
}

/// A `#`-headed, comma-separated document assembled in memory.
#[derive(Debug, Default)]
pub struct Document {
    header: Vec<String>,
    body: Vec<String>,
}

impl Document {
    pub fn new(command: &str) -> Self {
        Document {
            header: vec![format!("# {TOOL} {VERSION} {command}")],
            body: Vec::new(),
        }
    }

    pub fn comment(&mut self, line: impl AsRef<str>) {
        self.header.push(format!("# {}", line.as_ref()));
    }

    pub fn raw_header(&mut self, line: String) {
        self.header.push(line);
    }

    pub fn columns(&mut self, names: &[&str]) {
        self.body.push(names.join(","));
    }

    pub fn row(&mut self, values: &[f64]) {
        self.body
            .push(values.iter().map(|&v| g9(v)).collect::<Vec<_>>().join(","));
    }

    pub fn text_row(&mut self, fields: &[String]) {
        self.body.push(fields.join(","));
    }

    pub fn key_value(&mut self, key: &str, value: f64) {
        self.body.push(format!("{key} = {}", g9(value)));
    }

    pub fn key_text(&mut self, key: &str, value: &str) {
        self.body.push(format!("{key} = {value}"));
    }

    pub fn data_rows(&self) -> usize {
        self.body.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for l in self.header.iter().chain(&self.body) {
            out.push_str(l);
            out.push('\n');
        }
        out
    }
}
