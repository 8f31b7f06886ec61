//! Minimal CSV with `# key: value` metadata lines above one header row.

use std::io::Write;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    pub fn text(s: impl Into<String>) -> Self {
        Cell::Text(s.into())
    }
}

/// Fixed scientific notation, 15 significant digits, `.` as separator.
pub fn format_number(x: f64) -> String {
    format!("{x:.14e}")
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub metadata: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.metadata.push((key.to_string(), value.to_string()));
        self
    }

    pub fn write_to(&self, w: &mut impl Write) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}: {}", v.replace('\n', " "))?;
        }
        writeln!(w, "{}", self.header.iter().map(|h| quote(h)).collect::<Vec<_>>().join(","))?;
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_number(*x),
                    Cell::Int(i) => i.to_string(),
                    Cell::Text(s) => quote(s),
                })
                .collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// `# key: value` pairs, header, and rows as strings.
pub type Parsed = (Vec<(String, String)>, Vec<String>, Vec<Vec<String>>);

/// Reads back what [`CsvTable::write_to`] writes.
pub fn parse(text: &str) -> Parsed {
    let mut meta = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next_if(|l| l.starts_with('#')) {
        let body = line.trim_start_matches('#').trim();
        let (k, v) = body.split_once(": ").unwrap_or((body, ""));
        meta.push((k.to_string(), v.to_string()));
    }
    let header = lines.next().map(split_row).unwrap_or_default();
    let rows = lines.map(split_row).collect();
    (meta, header, rows)
}

fn split_row(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut quoted = false;
    let mut chars = line.chars().peekable();
    while let Some(c) = chars.next() {
        match (c, quoted) {
            ('"', true) if chars.peek() == Some(&'"') => {
                cur.push('"');
                chars.next();
            }
            ('"', _) => quoted = !quoted,
            (',', false) => out.push(std::mem::take(&mut cur)),
            _ => cur.push(c),
        }
    }
    out.push(cur);
    out
}
