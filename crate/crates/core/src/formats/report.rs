//! Report rendering: JSON at full precision, CSV and aligned text tables with
//! percentages at exactly two decimals, rounded half-up.

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
    Table,
}

/// Exact `100 * num / den` rendered with two decimals, half-up. `0.00` when `den` is 0.
pub fn percent_ratio(num: u64, den: u64) -> String {
    if den == 0 {
        return "0.00".to_string();
    }
    let (num, den) = (num as u128, den as u128);
    let hundredths = (20_000 * num + den) / (2 * den);
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// `100 * x` with two decimals, rounded half-up on the exact binary value of `x`.
pub fn percent_f64(x: f64) -> String {
    assert!(x.is_finite() && x >= 0.0, "percent of {x}");
    // 1100 fractional digits cover the full expansion of any f64, so the
    // digits below are exact rather than pre-rounded.
    let exact = format!("{x:.1100}");
    let (int_part, frac) = exact.split_once('.').expect("fixed-point formatting");
    let int: u128 = int_part.parse().expect("integer part");
    let frac = frac.as_bytes();
    let first4: u128 = std::str::from_utf8(&frac[..4]).unwrap().parse().unwrap();
    let mut hundredths = int * 10_000 + first4;
    if frac[4] >= b'5' {
        hundredths += 1;
    }
    format!("{}.{:02}", hundredths / 100, hundredths % 100)
}

/// A report that renders as one table row.
pub trait Tabular: Serialize {
    fn columns() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

#[derive(Debug, Clone)]
struct Section {
    title: String,
    columns: Vec<String>,
    rows: Vec<(String, Vec<String>)>,
    json: Map<String, Value>,
    notes: Vec<String>,
}

/// A multi-section report with a configuration header.
#[derive(Debug, Clone, Default)]
pub struct ReportDocument {
    config: Map<String, Value>,
    sections: Vec<Section>,
    extra_json: Map<String, Value>,
}

impl ReportDocument {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn config(mut self, key: &str, value: impl Serialize) -> Self {
        self.config
            .insert(key.to_string(), serde_json::to_value(value).expect("config value serializes"));
        self
    }

    /// Adds a table whose rows are `(row name, report)` pairs.
    pub fn section<R: Tabular>(mut self, title: &str, rows: &[(&str, &R)]) -> Self {
        let mut json = Map::new();
        let rows = rows
            .iter()
            .map(|(name, r)| {
                json.insert(name.to_string(), serde_json::to_value(r).expect("report serializes"));
                (name.to_string(), r.cells())
            })
            .collect();
        self.sections.push(Section {
            title: title.to_string(),
            columns: R::columns().iter().map(|c| c.to_string()).collect(),
            rows,
            json,
            notes: Vec::new(),
        });
        self
    }

    /// Adds a note line to the most recent section (table/CSV only).
    pub fn note(mut self, line: impl Into<String>) -> Self {
        if let Some(s) = self.sections.last_mut() {
            s.notes.push(line.into());
        }
        self
    }

    /// Extra top-level JSON member (ignored by CSV and table renderings).
    pub fn json_member(mut self, key: &str, value: impl Serialize) -> Self {
        self.extra_json
            .insert(key.to_string(), serde_json::to_value(value).expect("value serializes"));
        self
    }

    pub fn render(&self, format: ReportFormat) -> Vec<u8> {
        match format {
            ReportFormat::Json => self.render_json(),
            ReportFormat::Csv => self.render_csv(),
            ReportFormat::Table => self.render_table(),
        }
    }

    fn render_json(&self) -> Vec<u8> {
        let mut root = Map::new();
        root.insert("config".into(), Value::Object(self.config.clone()));
        for s in &self.sections {
            root.insert(s.title.clone(), Value::Object(s.json.clone()));
        }
        for (k, v) in &self.extra_json {
            root.insert(k.clone(), v.clone());
        }
        let mut out = serde_json::to_vec_pretty(&Value::Object(root)).expect("report serializes");
        out.push(b'\n');
        out
    }

    fn config_lines(&self) -> Vec<String> {
        self.config
            .iter()
            .map(|(k, v)| match v {
                Value::String(s) => format!("{k}: {s}"),
                other => format!("{k}: {other}"),
            })
            .collect()
    }

    fn render_csv(&self) -> Vec<u8> {
        let mut out = String::new();
        for line in self.config_lines() {
            out.push_str(&format!("# {line}\n"));
        }
        for s in &self.sections {
            out.push_str(&format!("# {}\n", s.title));
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut header = vec!["Method".to_string()];
            header.extend(s.columns.iter().cloned());
            w.write_record(&header).expect("in-memory csv");
            for (name, cells) in &s.rows {
                let mut rec = vec![name.clone()];
                rec.extend(cells.iter().cloned());
                w.write_record(&rec).expect("in-memory csv");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("in-memory csv")).unwrap());
            for n in &s.notes {
                out.push_str(&format!("# {n}\n"));
            }
        }
        out.into_bytes()
    }

    fn render_table(&self) -> Vec<u8> {
        let mut out = String::new();
        for line in self.config_lines() {
            out.push_str(&format!("# {line}\n"));
        }
        for s in &self.sections {
            out.push('\n');
            out.push_str(&format!("{}\n", s.title));
            let name_w = s
                .rows
                .iter()
                .map(|(n, _)| n.chars().count())
                .chain(["Method".len()])
                .max()
                .unwrap_or(0);
            let col_w: Vec<usize> = s
                .columns
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    s.rows
                        .iter()
                        .map(|(_, cells)| cells[i].len())
                        .chain([c.len()])
                        .max()
                        .unwrap_or(0)
                })
                .collect();
            let mut header = format!("{:<name_w$}", "Method");
            for (c, w) in s.columns.iter().zip(&col_w) {
                header.push_str(&format!("  {c:>w$}"));
            }
            out.push_str(header.trim_end());
            out.push('\n');
            for (name, cells) in &s.rows {
                let mut line = format!("{name:<name_w$}");
                for (c, w) in cells.iter().zip(&col_w) {
                    line.push_str(&format!("  {c:>w$}"));
                }
                out.push_str(&line);
                out.push('\n');
            }
            for n in &s.notes {
                out.push_str(&format!("# {n}\n"));
            }
        }
        out.into_bytes()
    }
}

/// Renders a single report as a one-row document.
pub fn serialize_report<R: Tabular>(report: &R, name: &str, format: ReportFormat) -> Vec<u8> {
    ReportDocument::new().section("report", &[(name, report)]).render(format)
}
