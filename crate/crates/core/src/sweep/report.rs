use std::fmt::Write as _;
use std::io;
use std::path::Path;

/// Comma-separated table with a header row and `#` footer comments.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvReport {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub footer: Vec<String>,
}

impl CsvReport {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        CsvReport {
            header: header.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn push_row(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, key: &str, value: impl std::fmt::Display) {
        self.footer.push(format!("{key}={value}"));
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let line = |cells: &[String]| cells.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",");
        s.push_str(&line(&self.header));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&line(r));
            s.push('\n');
        }
        for f in &self.footer {
            let _ = writeln!(s, "# {f}");
        }
        s
    }

    pub fn write_to(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }
}

fn quote(cell: &str) -> String {
    if cell.contains([',', '"', '\n']) {
        format!("\"{}\"", cell.replace('"', "\"\""))
    } else {
        cell.to_string()
    }
}

/// Nine significant digits; fixed-point down to 1e-4, scientific below.
pub fn sig9(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0.00000000".to_string();
    }
    if x.abs() < 1e-4 {
        return format!("{x:.8e}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (8 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding can carry into a new digit (0.9999999999 -> 1.000000000)
    let digits = s.chars().filter(|c| c.is_ascii_digit()).collect::<String>();
    if digits.trim_start_matches('0').len() > 9 && decimals > 0 {
        let d = decimals - 1;
        format!("{x:.d$}")
    } else {
        s
    }
}

/// Shortest round-trip form, as used for axis values.
pub fn plain(x: f64) -> String {
    format!("{x}")
}
