//! Minimal SVG line charts for the emitted CSV schemas.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::emotion::Emotion;
use crate::error::{Error, Result};
use crate::output::{RESILIENCE_HEADER, TIMESERIES_HEADER, TRUST_PREFIX};

/// One color per emotion, in canonical order.
pub const EMOTION_PALETTE: [&str; Emotion::COUNT] = [
    "#d62728", // angry
    "#8c564b", // disgust
    "#9467bd", // fear
    "#ff7f0e", // happy
    "#7f7f7f", // neutral
    "#1f77b4", // sad
    "#2ca02c", // surprise
];

const SERIES_PALETTE: [&str; 6] = ["#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"];

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Schema {
    Timeseries,
    Resilience,
    Trust,
}

#[derive(Debug, Clone)]
pub struct Chart {
    pub schema: Schema,
    pub y_label: String,
    pub series: Vec<Series>,
    pub steps: Vec<f64>,
    /// Fixed y range, if the schema has one.
    pub y_range: Option<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    pub color: &'static str,
    /// `None` for empty cells.
    pub values: Vec<Option<f64>>,
}

fn detect(header: &str) -> Result<Schema> {
    if header == TIMESERIES_HEADER {
        return Ok(Schema::Timeseries);
    }
    if header == RESILIENCE_HEADER {
        return Ok(Schema::Resilience);
    }
    let cols: Vec<_> = header.split(',').collect();
    if cols.len() >= 2 && cols[0] == "step" && cols[1..].iter().all(|c| c.len() > TRUST_PREFIX.len() && c.starts_with(TRUST_PREFIX)) {
        return Ok(Schema::Trust);
    }
    Err(Error::Schema(format!("unknown header '{header}'")))
}

pub fn parse_chart(csv: &str) -> Result<Chart> {
    let mut lines = csv.lines().filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Schema("empty file".into()))?;
    let schema = detect(header)?;
    let names: Vec<&str> = header.split(',').skip(1).collect();
    let mut steps = Vec::new();
    let mut columns: Vec<Vec<Option<f64>>> = vec![Vec::new(); names.len()];
    for line in lines {
        let fields: Vec<_> = line.split(',').collect();
        if fields.len() != names.len() + 1 {
            return Err(Error::Schema(format!("row '{line}' has {} fields", fields.len())));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|e| Error::Schema(format!("'{s}': {e}")));
        steps.push(num(fields[0])?);
        for (col, f) in columns.iter_mut().zip(&fields[1..]) {
            col.push(if f.is_empty() { None } else { Some(num(f)?) });
        }
    }
    if steps.is_empty() {
        return Err(Error::Schema("no data rows".into()));
    }
    let series = names
        .iter()
        .zip(columns)
        .enumerate()
        .map(|(i, (name, values))| {
            let (name, color) = match schema {
                Schema::Timeseries => (name.to_string(), EMOTION_PALETTE[i]),
                Schema::Resilience => (name.to_string(), EMOTION_PALETTE[Emotion::Happy.index()]),
                Schema::Trust => (
                    name.trim_start_matches(TRUST_PREFIX).to_string(),
                    SERIES_PALETTE[i % SERIES_PALETTE.len()],
                ),
            };
            Series { name, color, values }
        })
        .collect();
    let (y_label, y_range) = match schema {
        Schema::Timeseries => ("mean agent count", None),
        Schema::Resilience => ("positive emotion ratio", Some((0.0, 1.0))),
        Schema::Trust => ("mean trust", Some((0.0, 1.0))),
    };
    Ok(Chart {
        schema,
        y_label: y_label.to_string(),
        series,
        steps,
        y_range,
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Rounds `max` up to a value that divides into five even ticks.
fn nice_ceiling(max: f64) -> f64 {
    if max <= 0.0 {
        return 1.0;
    }
    let mag = 10f64.powf(max.log10().floor());
    for m in [1.0, 2.0, 2.5, 5.0, 10.0] {
        if m * mag >= max {
            return m * mag;
        }
    }
    10.0 * mag
}

pub fn render_svg(chart: &Chart, title: &str) -> String {
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let x_min = chart.steps.first().copied().unwrap_or(0.0);
    let x_max = chart.steps.last().copied().unwrap_or(0.0).max(x_min + 1.0);
    let (y_min, y_max) = chart.y_range.unwrap_or_else(|| {
        let m = chart
            .series
            .iter()
            .flat_map(|s| s.values.iter().flatten())
            .fold(0.0f64, |a, &b| a.max(b));
        (0.0, nice_ceiling(m))
    });
    let sx = |x: f64| LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| TOP + plot_h - (y.clamp(y_min, y_max) - y_min) / (y_max - y_min) * plot_h;

    let mut s = String::with_capacity(16 * 1024);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + plot_w / 2.0,
        escape(title)
    );

    // grid and ticks
    for i in 0..=5 {
        let v = y_min + (y_max - y_min) * i as f64 / 5.0;
        let y = sy(v);
        let _ = writeln!(
            s,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/>"##,
            LEFT + plot_w
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            LEFT - 6.0,
            y + 4.0,
            trim_number(v)
        );
        let xv = x_min + (x_max - x_min) * i as f64 / 5.0;
        let x = sx(xv);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            TOP + plot_h + 18.0,
            trim_number(xv)
        );
    }
    let _ = writeln!(
        s,
        r##"<rect x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#333333"/>"##
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">step</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        escape(&chart.y_label)
    );

    for (i, series) in chart.series.iter().enumerate() {
        let points: Vec<String> = chart
            .steps
            .iter()
            .zip(&series.values)
            .filter_map(|(&x, v)| v.map(|v| format!("{:.2},{:.2}", sx(x), sy(v))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{}" stroke-width="2" points="{}"><title>{}</title></polyline>"#,
            series.color,
            points.join(" "),
            escape(&series.name)
        );
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + plot_w + 14.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{}" stroke-width="3"/>"#,
            lx + 20.0,
            series.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 26.0,
            ly + 4.0,
            escape(&series.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn trim_number(v: f64) -> String {
    let t = format!("{v:.2}");
    t.trim_end_matches('0').trim_end_matches('.').to_string()
}

pub fn render_csv(csv: &str, title: &str) -> Result<String> {
    Ok(render_svg(&parse_chart(csv)?, title))
}

/// Renders the CSV at `csv_path` to an SVG file at `out_path`.
pub fn render_lineplot(csv_path: &Path, out_path: &Path) -> Result<()> {
    let text = fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let title = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let svg = render_csv(&text, &title)?;
    fs::write(out_path, svg).map_err(|e| Error::io(out_path, e))
}
