//! Deterministic CSV and JSON rendering.
//!
//! Numbers are written with 17 significant digits in scientific notation;
//! undefined values are an empty CSV field and `null` in JSON.

use std::fmt::Write as _;

use crate::config::Format;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    /// A number that may be undefined (non-finite is treated the same way).
    Opt(Option<f64>),
    Text(String),
    Bool(bool),
    Tokens(Vec<&'static str>),
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Extra top-level JSON members; not part of the CSV rendering.
    pub meta: Vec<(&'static str, Cell)>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
            meta: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => self.json(),
        }
    }

    fn csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Num(v) | Cell::Opt(Some(v)) => push_number(&mut out, *v, ""),
                    Cell::Opt(None) | Cell::Empty => {}
                    Cell::Text(s) => out.push_str(s),
                    Cell::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
                    Cell::Tokens(t) => out.push_str(&t.join(";")),
                }
            }
            out.push('\n');
        }
        out
    }

    fn json(&self) -> String {
        let mut out = String::from("{\n");
        for (key, cell) in &self.meta {
            let _ = write!(out, "  \"{key}\": ");
            json_cell(&mut out, cell);
            out.push_str(",\n");
        }
        out.push_str("  \"rows\": [");
        for (r, row) in self.rows.iter().enumerate() {
            out.push_str(if r == 0 { "\n    {" } else { ",\n    {" });
            for (i, (name, cell)) in self.columns.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "\"{name}\": ");
                json_cell(&mut out, cell);
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() {
            "]\n}\n"
        } else {
            "\n  ]\n}\n"
        });
        out
    }
}

fn push_number(out: &mut String, v: f64, undefined: &str) {
    if v.is_finite() {
        let _ = write!(out, "{v:.16e}");
    } else {
        out.push_str(undefined);
    }
}

fn json_cell(out: &mut String, cell: &Cell) {
    match cell {
        Cell::Num(v) | Cell::Opt(Some(v)) => push_number(out, *v, "null"),
        Cell::Opt(None) | Cell::Empty => out.push_str("null"),
        // Only fixed identifiers (regions, check names) reach here; none need escaping.
        Cell::Text(s) => {
            let _ = write!(out, "\"{s}\"");
        }
        Cell::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Cell::Tokens(t) => {
            out.push('[');
            for (i, s) in t.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let _ = write!(out, "\"{s}\"");
            }
            out.push(']');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "v", "flags"]);
        t.push(vec![
            Cell::Num(1.0),
            Cell::Opt(None),
            Cell::Tokens(vec!["a", "b"]),
        ]);
        t.push(vec![
            Cell::Num(-0.1),
            Cell::Num(f64::INFINITY),
            Cell::Tokens(vec![]),
        ]);
        t
    }

    #[test]
    fn csv_layout() {
        assert_eq!(
            sample().render(Format::Csv),
            "x,v,flags\n1.0000000000000000e0,,a;b\n-1.0000000000000001e-1,,\n"
        );
    }

    #[test]
    fn json_layout() {
        let mut t = sample();
        t.meta.push(("overall", Cell::Bool(true)));
        assert_eq!(
            t.render(Format::Json),
            "{\n  \"overall\": true,\n  \"rows\": [\n    {\"x\": 1.0000000000000000e0, \"v\": null, \"flags\": [\"a\", \"b\"]},\n    \
             {\"x\": -1.0000000000000001e-1, \"v\": null, \"flags\": []}\n  ]\n}\n"
        );
        assert_eq!(
            Table::new(&["x"]).render(Format::Json),
            "{\n  \"rows\": []\n}\n"
        );
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-300, -123456.789e10] {
            let s = format!("{v:.16e}");
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
    }
}
