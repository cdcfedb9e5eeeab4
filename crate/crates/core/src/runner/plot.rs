//! Static SVG charts drawn from the CSV artifacts of a run directory.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFamily {
    /// Delivered layers per slot, stacked per client.
    Layers,
    /// Variance and max gap of normalized layers, and the F-index.
    Fairness,
    /// Quality score per client and slot.
    Quality,
    /// Kilobits sent per slot, MILP against LP.
    Compare,
    /// Mean delivered layers per slot for each swept value.
    Sweep,
}

impl PlotFamily {
    pub const ALL: [PlotFamily; 5] =
        [PlotFamily::Layers, PlotFamily::Fairness, PlotFamily::Quality, PlotFamily::Compare, PlotFamily::Sweep];

    pub fn name(self) -> &'static str {
        match self {
            PlotFamily::Layers => "layers",
            PlotFamily::Fairness => "fairness",
            PlotFamily::Quality => "quality",
            PlotFamily::Compare => "compare",
            PlotFamily::Sweep => "sweep",
        }
    }

    fn source(self) -> &'static str {
        match self {
            PlotFamily::Layers | PlotFamily::Fairness | PlotFamily::Quality => "slots.csv",
            PlotFamily::Compare => "compare.csv",
            PlotFamily::Sweep => "sweep.csv",
        }
    }
}

impl std::str::FromStr for PlotFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PlotFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Validation(format!("unknown plot family `{s}`")))
    }
}

type Series = Vec<(String, Vec<(f64, f64)>)>;

const PALETTE: [RGBColor; 8] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
    RGBColor(140, 86, 75),
    RGBColor(227, 119, 194),
    RGBColor(127, 127, 127),
];

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn read(path: &Path) -> Result<Table> {
        if !path.exists() {
            return Err(Error::MissingData(format!("{} not found", path.display())));
        }
        let mut r = csv::Reader::from_path(path)?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<Vec<Vec<String>>, _>>()?;
        if rows.is_empty() {
            return Err(Error::MissingData(format!("{} has no rows", path.display())));
        }
        Ok(Table { header, rows })
    }

    fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingData(format!("column `{name}` missing")))
    }

    fn num(&self, row: &[String], col: usize) -> Option<f64> {
        row.get(col).and_then(|v| v.parse().ok())
    }
}

fn draw_err<E: std::fmt::Debug>(e: E) -> Error {
    Error::Model(format!("plot rendering failed: {e:?}"))
}

fn bounds(series: &Series) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    (x0 - 0.5, x1 + 0.5, y0, y1 * 1.1)
}

fn line_chart(title: &str, y_desc: &str, series: &Series) -> Result<String> {
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let (x0, x1, y0, y1) = bounds(series);
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, y0..y1)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("slot").y_desc(y_desc).draw().map_err(draw_err)?;
        for (k, (label, pts)) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            chart
                .draw_series(LineSeries::new(pts.iter().copied(), color.stroke_width(2)))
                .map_err(draw_err)?
                .label(label.as_str())
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color.stroke_width(2)));
            chart
                .draw_series(pts.iter().map(|&p| Circle::new(p, 3, color.filled())))
                .map_err(draw_err)?;
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn stacked_bars(title: &str, series: &Series) -> Result<String> {
    let mut totals: BTreeMap<i64, f64> = BTreeMap::new();
    for (_, pts) in series {
        for &(x, y) in pts {
            *totals.entry(x as i64).or_default() += y;
        }
    }
    let top = totals.values().copied().fold(1.0, f64::max) * 1.1;
    let (x0, x1) = match (totals.keys().next(), totals.keys().last()) {
        (Some(a), Some(b)) => (*a as f64 - 0.5, *b as f64 + 0.5),
        _ => (0.0, 1.0),
    };
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (800, 480)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(36)
            .y_label_area_size(56)
            .build_cartesian_2d(x0..x1, 0.0..top)
            .map_err(draw_err)?;
        chart.configure_mesh().x_desc("slot").y_desc("layers").draw().map_err(draw_err)?;
        let mut base: BTreeMap<i64, f64> = BTreeMap::new();
        for (k, (label, pts)) in series.iter().enumerate() {
            let color = PALETTE[k % PALETTE.len()];
            let bars: Vec<Rectangle<(f64, f64)>> = pts
                .iter()
                .filter(|(_, y)| *y > 0.0)
                .map(|&(x, y)| {
                    let b = base.entry(x as i64).or_default();
                    let r = Rectangle::new([(x - 0.35, *b), (x + 0.35, *b + y)], color.filled());
                    *b += y;
                    r
                })
                .collect();
            chart
                .draw_series(bars)
                .map_err(draw_err)?
                .label(label.as_str())
                .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 12, y + 5)], color.filled()));
        }
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(draw_err)?;
        root.present().map_err(draw_err)?;
    }
    Ok(svg)
}

fn per_client(t: &Table, value: &str) -> Result<Series> {
    let (slot, client, val) = (t.col("slot")?, t.col("client")?, t.col(value)?);
    let mut by: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for row in &t.rows {
        if let (Some(x), Some(y)) = (t.num(row, slot), t.num(row, val)) {
            by.entry(row[client].clone()).or_default().push((x, y));
        }
    }
    Ok(by.into_iter().collect())
}

fn per_slot(t: &Table, cols: &[&str]) -> Result<Series> {
    let slot = t.col("slot")?;
    let mut out = Vec::new();
    for name in cols {
        let c = t.col(name)?;
        let mut pts: BTreeMap<i64, f64> = BTreeMap::new();
        for row in &t.rows {
            if let (Some(x), Some(y)) = (t.num(row, slot), t.num(row, c)) {
                pts.insert(x as i64, y);
            }
        }
        out.push((name.to_string(), pts.into_iter().map(|(x, y)| (x as f64, y)).collect()));
    }
    Ok(out)
}

fn sweep_means(t: &Table) -> Result<Series> {
    let (value, slot, layers) = (t.col("value")?, t.col("slot")?, t.col("layers")?);
    let mut acc: BTreeMap<String, BTreeMap<i64, (f64, usize)>> = BTreeMap::new();
    for row in &t.rows {
        if let (Some(x), Some(y)) = (t.num(row, slot), t.num(row, layers)) {
            let e = acc.entry(row[value].clone()).or_default().entry(x as i64).or_default();
            e.0 += y;
            e.1 += 1;
        }
    }
    Ok(acc
        .into_iter()
        .map(|(v, m)| (format!("value {v}"), m.into_iter().map(|(x, (s, n))| (x as f64, s / n as f64)).collect()))
        .collect())
}

#[derive(Serialize)]
struct Meta<'a> {
    family: &'a str,
    manifest_sha256: Option<String>,
    input_hash: Option<String>,
    series: BTreeMap<&'a str, &'a [(f64, f64)]>,
}

fn embed(svg: &str, dir: &Path, family: PlotFamily, series: &Series) -> String {
    let manifest = std::fs::read(dir.join("manifest.json")).ok();
    let input_hash = manifest
        .as_ref()
        .and_then(|m| serde_json::from_slice::<serde_json::Value>(m).ok())
        .and_then(|v| v.get("input_hash").and_then(|h| h.as_str().map(str::to_string)));
    let meta = Meta {
        family: family.name(),
        manifest_sha256: manifest.map(|m| hex::encode(Sha256::digest(m))),
        input_hash,
        series: series.iter().map(|(k, v)| (k.as_str(), v.as_slice())).collect(),
    };
    let json = serde_json::to_string(&meta).unwrap_or_default().replace('<', "\\u003c");
    match svg.find('>') {
        Some(i) => format!("{}\n<metadata>{}</metadata>{}", &svg[..=i], json, &svg[i + 1..]),
        None => svg.to_string(),
    }
}

/// Renders one chart family from the CSVs in `dir` into
/// `dir/plots/<family>.svg` and returns its path.
pub fn plot(dir: &Path, family: PlotFamily) -> Result<std::path::PathBuf> {
    let t = Table::read(&dir.join(family.source()))?;
    let (svg, series) = match family {
        PlotFamily::Layers => {
            let s = per_client(&t, "layers")?;
            (stacked_bars("Delivered layers per slot", &s)?, s)
        }
        PlotFamily::Fairness => {
            let s = per_slot(&t, &["variance", "max_gap", "f_index"])?;
            (line_chart("Normalized variance, max gap and F-index", "value", &s)?, s)
        }
        PlotFamily::Quality => {
            let s = per_client(&t, "quality")?;
            (line_chart("Quality score per client", "quality", &s)?, s)
        }
        PlotFamily::Compare => {
            let s = per_slot(&t, &["milp_kb", "lp_kb"])?;
            (line_chart("Data sent per slot", "kb", &s)?, s)
        }
        PlotFamily::Sweep => {
            let s = sweep_means(&t)?;
            (line_chart("Mean delivered layers per slot", "layers", &s)?, s)
        }
    };
    let out = dir.join("plots").join(format!("{}.svg", family.name()));
    std::fs::create_dir_all(dir.join("plots")).map_err(|e| Error::io(dir.join("plots"), e))?;
    std::fs::write(&out, embed(&svg, dir, family, &series)).map_err(|e| Error::io(&out, e))?;
    Ok(out)
}
