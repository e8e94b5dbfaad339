//! Tabular results, CSV output and quick-look SVG plots.
//!
//! CSV layout: a header row of column names, then a row whose first cell
//! starts with `#` holding the units, then data. Missing values (failed scan
//! points, NaN) are empty cells.

use std::fmt::Write as _;
use std::io::Write;

use crate::{Error, Result};

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(Option<f64>),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(Some(v).filter(|v| v.is_finite()))
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        Cell::Num(v.filter(|v| v.is_finite()))
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            // shortest round-trip form; exponent outside [1e-4, 1e15)
            Cell::Num(Some(v)) if *v != 0.0 && !(1e-4..1e15).contains(&v.abs()) => format!("{v:e}"),
            Cell::Num(Some(v)) => format!("{v}"),
            Cell::Num(None) => String::new(),
            Cell::Text(s) => s.clone(),
        }
    }
}

/// Named, unit-annotated columns of rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub units: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    /// Table with `(name, unit)` columns; use `""` for dimensionless.
    pub fn new(columns: &[(&str, &str)]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.0.to_string()).collect(),
            units: columns.iter().map(|c| c.1.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidInput(format!(
                "row has {} cells, table has {} columns",
                row.len(),
                self.columns.len()
            )));
        }
        self.rows.push(row);
        Ok(())
    }

    /// Numeric values of column `name` (text and missing cells are `None`).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[j] {
                    Cell::Num(v) => *v,
                    Cell::Text(_) => None,
                })
                .collect(),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let err = |e: csv::Error| Error::Output(e.to_string());
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(out);
        w.write_record(&self.columns).map_err(err)?;
        let mut units = self.units.clone();
        if let Some(first) = units.first_mut() {
            *first = format!("# {first}");
        }
        w.write_record(&units).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(err)?;
        }
        w.flush().map_err(|e| Error::Output(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Output(e.to_string()))
    }
}

/// One plotted series; missing points break the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const W: f64 = 720.0;
const H: f64 = 440.0;
const MARGIN: (f64, f64, f64, f64) = (70.0, 20.0, 40.0, 55.0); // left, right, top, bottom

fn nice_ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 8.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Line-and-marker plot of `series` as a standalone SVG document.
pub fn svg_plot(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts = || series.iter().flat_map(|s| s.x.iter().zip(&s.y).filter_map(|(&x, y)| y.map(|y| (x, y))));
    let (mut x0, mut x1, mut y0, mut y1) = pts().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), (x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 <= 0.0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let pad = 0.05 * (y1 - y0);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let (l, r, t, b) = MARGIN;
    let px = |x: f64| l + (x - x0) / (x1 - x0) * (W - l - r);
    let py = |y: f64| H - b - (y - y0) / (y1 - y0) * (H - t - b);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{l}" y="{t}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - l - r,
        H - t - b
    );
    for tx in nice_ticks(x0, x1) {
        let x = px(tx);
        let _ = writeln!(s, r#"<line x1="{x:.1}" y1="{}" x2="{x:.1}" y2="{}" stroke="black"/>"#, H - b, H - b + 5.0);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{}" text-anchor="middle">{}</text>"#, H - b + 18.0, tick_label(tx));
    }
    for ty in nice_ticks(y0, y1) {
        let y = py(ty);
        let _ = writeln!(s, r#"<line x1="{}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/>"#, l - 5.0);
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, l - 8.0, y + 4.0, tick_label(ty));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, l + (W - l - r) / 2.0, H - 12.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        t + (H - t - b) / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut path = String::new();
        let mut pen_up = true;
        for (&x, y) in ser.x.iter().zip(&ser.y) {
            match y {
                Some(y) => {
                    let _ = write!(path, "{}{:.1},{:.1} ", if pen_up { "M" } else { "L" }, px(x), py(*y));
                    pen_up = false;
                    let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2" fill="{color}"/>"#, px(x), py(*y));
                }
                None => pen_up = true,
            }
        }
        if !path.is_empty() {
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, path.trim_end());
        }
        if !ser.label.is_empty() {
            let ly = t + 16.0 + 16.0 * k as f64;
            let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{color}"/>"#, W - r - 150.0, ly - 9.0);
            let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, W - r - 135.0, escape(&ser.label));
        }
    }
    s.push_str("</svg>\n");
    s
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = ResultTable::new(&[("detuning", "Hz"), ("p_up", ""), ("note", "")]);
        t.push(vec![1.5e6.into(), Some(0.25).into(), "".into()]).unwrap();
        t.push(vec![2e6.into(), None.into(), "no fit: flat".into()]).unwrap();
        t.push(vec![3e6.into(), f64::NAN.into(), "".into()]).unwrap();
        let s = t.to_csv_string().unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "detuning,p_up,note");
        assert_eq!(lines[1], "# Hz,,");
        assert_eq!(lines[2], "1500000,0.25,");
        assert_eq!(lines[3], "2000000,,no fit: flat");
        assert_eq!(lines[4], "3000000,,");
        assert_eq!(t.column("p_up").unwrap(), vec![Some(0.25), None, None]);
    }

    #[test]
    fn csv_round_trips_floats() {
        let values = [0.1 + 0.2, 1.444192158251013e-9, -3.5e-300, 6.02e23, 0.0, 1e-4];
        let mut t = ResultTable::new(&[("x", "")]);
        for v in values {
            t.push(vec![v.into()]).unwrap();
        }
        let s = t.to_csv_string().unwrap();
        let back: Vec<f64> = s.lines().skip(2).map(|l| l.parse().unwrap()).collect();
        assert_eq!(back, values);
        assert_eq!(s.lines().nth(3), Some("1.444192158251013e-9"));
        assert_eq!(s.lines().nth(7), Some("0.0001"));
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut t = ResultTable::new(&[("a", ""), ("b", "")]);
        assert!(t.push(vec![1.0.into()]).is_err());
    }

    #[test]
    fn svg_is_well_formed() {
        let s = svg_plot(
            "a < b",
            "x",
            "y",
            &[Series { label: "p".into(), x: vec![0.0, 1.0, 2.0], y: vec![Some(0.0), None, Some(1.0)] }],
        );
        assert!(s.starts_with("<svg") && s.trim_end().ends_with("</svg>"));
        assert!(s.contains("a &lt; b"));
        assert_eq!(s.matches("<circle").count(), 2);
        let empty = svg_plot("", "", "", &[]);
        assert!(empty.contains("</svg>"));
    }

    #[test]
    fn ticks_are_round() {
        let t = nice_ticks(0.0, 1.0);
        assert!(t.len() >= 3 && t.len() <= 9);
        assert!(t.iter().all(|v| ((v * 10.0).round() - v * 10.0).abs() < 1e-9));
    }
}
