//! CSV parsing and SVG rendering for the experiment outputs.
//!
//! The renderer recognizes the CSV schemas emitted by `detcs run`: the phase
//! grid `m,k,success_percent` becomes a heatmap over (m/n, k/m), the three
//! curve schemas become line charts with one polyline per algorithm.

use std::path::Path;

use crate::{Error, Result};

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 160.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 55.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn bad(path: &str, message: impl Into<String>) -> Error {
    Error::MalformedCsv {
        path: path.to_string(),
        message: message.into(),
    }
}

/// Parse comma-separated text with a header line. Every row must match the
/// header width; `path` is used only in error messages.
pub fn parse_csv(text: &str, path: &str) -> Result<CsvTable> {
    let mut lines = text.lines().enumerate();
    let header: Vec<String> = loop {
        match lines.next() {
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.split(',').map(|c| c.trim().to_string()).collect(),
            None => return Err(bad(path, "empty file")),
        }
    };
    if header.iter().any(|h| h.is_empty()) {
        return Err(bad(path, "empty header column"));
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let row: Vec<String> = line.split(',').map(|c| c.trim().to_string()).collect();
        if row.len() != header.len() {
            return Err(bad(
                path,
                format!(
                    "line {}: expected {} columns, found {}",
                    idx + 1,
                    header.len(),
                    row.len()
                ),
            ));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

fn field_f64(table: &CsvTable, row: usize, col: usize, path: &str) -> Result<f64> {
    let raw = &table.rows[row][col];
    let v: f64 = raw
        .parse()
        .map_err(|_| bad(path, format!("row {}: `{raw}` is not a number", row + 1)))?;
    if !v.is_finite() {
        return Err(bad(path, format!("row {}: non-finite value `{raw}`", row + 1)));
    }
    Ok(v)
}

fn axis_ticks(min: f64, max: f64) -> Vec<f64> {
    if min == max {
        return vec![min];
    }
    (0..=4).map(|i| min + (max - min) * i as f64 / 4.0).collect()
}

fn fmt_tick(v: f64) -> String {
    if (v - v.round()).abs() < 1e-9 {
        format!("{}", v.round())
    } else {
        format!("{v:.2}")
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn x(&self, v: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(1e-300);
        MARGIN_L + (v - self.x_min) / span * (WIDTH - MARGIN_L - MARGIN_R)
    }

    fn y(&self, v: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(1e-300);
        HEIGHT - MARGIN_B - (v - self.y_min) / span * (HEIGHT - MARGIN_T - MARGIN_B)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str) {
        let (x0, x1) = (MARGIN_L, WIDTH - MARGIN_R);
        let (y0, y1) = (HEIGHT - MARGIN_B, MARGIN_T);
        out.push_str(&format!(
            "<line x1='{x0}' y1='{y0}' x2='{x1}' y2='{y0}' stroke='black'/>\n\
             <line x1='{x0}' y1='{y0}' x2='{x0}' y2='{y1}' stroke='black'/>\n"
        ));
        for t in axis_ticks(self.x_min, self.x_max) {
            let px = self.x(t);
            out.push_str(&format!(
                "<line x1='{px}' y1='{y0}' x2='{px}' y2='{}' stroke='black'/>\n\
                 <text x='{px}' y='{}' font-size='12' text-anchor='middle'>{}</text>\n",
                y0 + 5.0,
                y0 + 20.0,
                fmt_tick(t)
            ));
        }
        for t in axis_ticks(self.y_min, self.y_max) {
            let py = self.y(t);
            out.push_str(&format!(
                "<line x1='{}' y1='{py}' x2='{x0}' y2='{py}' stroke='black'/>\n\
                 <text x='{}' y='{}' font-size='12' text-anchor='end'>{}</text>\n",
                x0 - 5.0,
                x0 - 8.0,
                py + 4.0,
                fmt_tick(t)
            ));
        }
        out.push_str(&format!(
            "<text x='{}' y='{}' font-size='14' text-anchor='middle'>{x_label}</text>\n",
            (x0 + x1) / 2.0,
            HEIGHT - 12.0
        ));
        out.push_str(&format!(
            "<text x='18' y='{}' font-size='14' text-anchor='middle' transform='rotate(-90 18 {})'>{y_label}</text>\n",
            (y0 + y1) / 2.0,
            (y0 + y1) / 2.0
        ));
    }
}

fn svg_open() -> String {
    format!(
        "<svg xmlns='http://www.w3.org/2000/svg' width='{WIDTH}' height='{HEIGHT}' \
         viewBox='0 0 {WIDTH} {HEIGHT}'>\n<rect width='{WIDTH}' height='{HEIGHT}' fill='white'/>\n"
    )
}

fn render_curves(table: &CsvTable, path: &str) -> Result<String> {
    // ordered series keyed by the algorithm column
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in 0..table.rows.len() {
        let name = table.rows[r][0].clone();
        let x = field_f64(table, r, 1, path)?;
        let y = field_f64(table, r, 2, path)?;
        match series.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push((x, y)),
            None => series.push((name, vec![(x, y)])),
        }
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|(_, p)| p.iter().copied()).collect();
    let frame = Frame {
        x_min: all.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        x_max: all.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        y_min: all.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        y_max: all.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    };
    let mut out = svg_open();
    frame.axes(&mut out, &table.header[1], &table.header[2]);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let points: Vec<String> = pts
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", frame.x(x), frame.y(y)))
            .collect();
        out.push_str(&format!(
            "<polyline fill='none' stroke='{color}' stroke-width='2' points='{}'/>\n",
            points.join(" ")
        ));
        let ly = MARGIN_T + 18.0 * i as f64 + 10.0;
        out.push_str(&format!(
            "<line x1='{}' y1='{ly}' x2='{}' y2='{ly}' stroke='{color}' stroke-width='2'/>\n\
             <text x='{}' y='{}' font-size='12'>{name}</text>\n",
            WIDTH - MARGIN_R + 15.0,
            WIDTH - MARGIN_R + 40.0,
            WIDTH - MARGIN_R + 46.0,
            ly + 4.0
        ));
    }
    out.push_str("</svg>\n");
    Ok(out)
}

fn heat_color(success: f64) -> String {
    let f = (success / 100.0).clamp(0.0, 1.0);
    let r = (255.0 * f).round() as u8;
    let g = (60.0 + 80.0 * f).round() as u8;
    let b = (255.0 * (1.0 - f)).round() as u8;
    format!("rgb({r},{g},{b})")
}

fn render_heatmap(table: &CsvTable, path: &str) -> Result<String> {
    let mut cells: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..table.rows.len() {
        let m = field_f64(table, r, 0, path)?;
        let k = field_f64(table, r, 1, path)?;
        let s = field_f64(table, r, 2, path)?;
        if m < 1.0 || k < 1.0 || m.fract() != 0.0 || k.fract() != 0.0 {
            return Err(bad(path, format!("row {}: m and k must be positive integers", r + 1)));
        }
        cells.push((m as usize, k as usize, s));
    }
    // the CSV does not carry n; with the default integer m grid running to
    // n - 1, max(m) + 1 recovers it (documented approximation otherwise)
    let n = cells.iter().map(|c| c.0).max().unwrap() + 1;
    let ms: Vec<usize> = {
        let mut v: Vec<usize> = cells.iter().map(|c| c.0).collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    // column width along m/n: distance to the next sampled m
    let m_width = |m: usize| -> f64 {
        let pos = ms.iter().position(|&v| v == m).unwrap();
        let next = ms.get(pos + 1).copied().unwrap_or(n);
        (next - m) as f64 / n as f64
    };
    let frame = Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut out = svg_open();
    for &(m, k, s) in &cells {
        let x = frame.x(m as f64 / n as f64);
        let w = m_width(m) / 1.0 * (WIDTH - MARGIN_L - MARGIN_R);
        let h = (1.0 / m as f64) * (HEIGHT - MARGIN_T - MARGIN_B);
        let y = frame.y(k as f64 / m as f64);
        out.push_str(&format!(
            "<rect x='{x:.2}' y='{y:.2}' width='{w:.2}' height='{h:.2}' fill='{}'>\
             <title>m={m} k={k} success={s}%</title></rect>\n"
        , heat_color(s)));
    }
    frame.axes(&mut out, "m/n", "k/m");
    out.push_str(&format!(
        "<text x='{}' y='{}' font-size='12'>0% </text>\n",
        WIDTH - MARGIN_R + 15.0,
        MARGIN_T + 30.0
    ));
    for i in 0..=10 {
        let s = 10.0 * i as f64;
        out.push_str(&format!(
            "<rect x='{}' y='{}' width='14' height='14' fill='{}'/>\n",
            WIDTH - MARGIN_R + 45.0 + 15.0 * i as f64,
            MARGIN_T + 18.0,
            heat_color(s)
        ));
    }
    out.push_str(&format!(
        "<text x='{}' y='{}' font-size='12'>100%</text>\n",
        WIDTH - MARGIN_R + 45.0 + 15.0 * 11.0,
        MARGIN_T + 30.0
    ));
    out.push_str("</svg>\n");
    Ok(out)
}

/// Render a parsed CSV table into SVG text, dispatching on the header
/// schema.
pub fn render_csv(table: &CsvTable, path: &str) -> Result<String> {
    if table.rows.is_empty() {
        return Err(bad(path, "no data rows"));
    }
    let header: Vec<&str> = table.header.iter().map(|s| s.as_str()).collect();
    match header.as_slice() {
        ["m", "k", "success_percent"] => render_heatmap(table, path),
        ["algorithm", "snr_in_db", "mean_snr_out_db"]
        | ["algorithm", "k", "mean_snr_out_db"]
        | ["algorithm", "k", "success_percent"] => render_curves(table, path),
        _ => Err(bad(
            path,
            format!("unknown CSV schema `{}`", table.header.join(",")),
        )),
    }
}

/// Read a CSV file and write the SVG next to it. Nothing is written when the
/// input is rejected.
pub fn plot_file(csv_path: &Path, out_path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(csv_path)?;
    let loc = csv_path.display().to_string();
    let table = parse_csv(&text, &loc)?;
    let svg = render_csv(&table, &loc)?;
    std::fs::write(out_path, svg)?;
    Ok(())
}
