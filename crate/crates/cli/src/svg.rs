//! Deterministic SVG line plots from the tool's own CSV files: fixed
//! 960×640 viewport, no timestamps, no external fonts, so identical input
//! yields byte-identical output.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 640.0;
const MARGIN: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn read_csv(path: &Path) -> Result<Table> {
    let raw = fs::read_to_string(path).with_context(|| format!("reading {path:?}"))?;
    let mut lines = raw.lines();
    let header: Vec<String> = lines
        .next()
        .map(|h| h.split(',').map(|s| s.trim().to_string()).collect())
        .unwrap_or_default();
    if header.is_empty() {
        bail!("empty CSV: {path:?}");
    }
    let mut rows = Vec::new();
    for (k, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Result<Vec<f64>, _> = line.split(',').map(|s| s.trim().parse::<f64>()).collect();
        let row = row.with_context(|| format!("bad numeric row {} in {path:?}", k + 2))?;
        if row.len() != header.len() {
            bail!("row {} has {} fields, header has {}", k + 2, row.len(), header.len());
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("CSV has no data rows: {path:?}");
    }
    Ok(Table { header, rows })
}

fn column_index(table: &Table, name: &str) -> Result<usize> {
    table
        .header
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("column {name:?} not found; have {:?}", table.header))
}

pub fn plot(table: &Table, x_col: &str, y_cols: &[String], out: &Path) -> Result<()> {
    let xi = column_index(table, x_col)?;
    let yis: Result<Vec<usize>> = y_cols.iter().map(|c| column_index(table, c)).collect();
    let yis = yis?;

    let xs: Vec<f64> = table.rows.iter().map(|r| r[xi]).collect();
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for &yi in &yis {
        for r in &table.rows {
            ymin = ymin.min(r[yi]);
            ymax = ymax.max(r[yi]);
        }
    }
    let xmin = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let xmax = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let xspan = (xmax - xmin).max(1e-300);
    let yspan = (ymax - ymin).max(1e-300);
    let sx = |x: f64| MARGIN + (x - xmin) / xspan * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - ymin) / yspan * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" width=\"{WIDTH}\" height=\"{HEIGHT}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN
    ));
    svg.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{m}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = HEIGHT - MARGIN
    ));
    for (label, x, y, anchor) in [
        (format!("{xmin:.4}"), MARGIN, HEIGHT - MARGIN + 20.0, "middle"),
        (format!("{xmax:.4}"), WIDTH - MARGIN, HEIGHT - MARGIN + 20.0, "middle"),
        (format!("{ymin:.4}"), MARGIN - 8.0, HEIGHT - MARGIN, "end"),
        (format!("{ymax:.4}"), MARGIN - 8.0, MARGIN, "end"),
    ] {
        svg.push_str(&format!(
            "<text x=\"{x:.2}\" y=\"{y:.2}\" font-family=\"monospace\" font-size=\"12\" text-anchor=\"{anchor}\">{label}</text>\n"
        ));
    }
    // One polyline per y column.
    for (k, &yi) in yis.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut pts = String::new();
        for r in &table.rows {
            pts.push_str(&format!("{:.3},{:.3} ", sx(r[xi]), sy(r[yi])));
        }
        svg.push_str(&format!(
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            pts.trim_end()
        ));
        svg.push_str(&format!(
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"monospace\" font-size=\"12\" fill=\"{color}\">{}</text>\n",
            WIDTH - MARGIN - 150.0,
            MARGIN + 16.0 * (k as f64 + 1.0),
            y_cols[k]
        ));
    }
    svg.push_str("</svg>\n");
    fs::write(out, svg).with_context(|| format!("writing {out:?}"))?;
    Ok(())
}
