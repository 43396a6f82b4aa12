//! Plot emission: self-contained SVG or gnuplot-ready TSV from curve CSVs
//! and test-battery reports.

use std::fmt::Write as _;
use std::str::FromStr;

use serde_json::Value;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct PlotError(pub String);

pub type Result<T> = std::result::Result<T, PlotError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotFormat {
    Svg,
    Tsv,
}

impl FromStr for PlotFormat {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "svg" => Ok(Self::Svg),
            "tsv" => Ok(Self::Tsv),
            other => Err(format!("unknown plot format '{other}' (expected svg or tsv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
    /// One standard error.
    pub err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bar {
    pub label: String,
    pub value: f64,
    /// 95% interval, when one could be computed.
    pub interval: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub bars: Vec<Bar>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlotData {
    Curves { y_label: String, series: Vec<Series> },
    Bars(Vec<Panel>),
}

fn data_err(msg: impl Into<String>) -> PlotError {
    PlotError(msg.into())
}

/// Detects the input kind: JSON (battery or curve report) or a curve/diff CSV.
pub fn parse_plot_input(text: &str) -> Result<PlotData> {
    let trimmed = text.trim_start();
    if trimmed.is_empty() {
        return Err(data_err("input is empty"));
    }
    if trimmed.starts_with('{') {
        let v: Value = serde_json::from_str(trimmed).map_err(|e| data_err(format!("invalid JSON: {e}")))?;
        return parse_json(&v);
    }
    parse_csv(text)
}

fn parse_csv(text: &str) -> Result<PlotData> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| data_err(e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (y_col, y_label, label_col) = match (col("expected_max"), col("expected_diff")) {
        (Some(c), _) => (c, "expected max", col("sampler")),
        (None, Some(c)) => (c, "expected difference", None),
        _ => return Err(data_err("CSV has neither an expected_max nor an expected_diff column")),
    };
    let n_col = col("n").ok_or_else(|| data_err("missing column 'n'"))?;
    let se_col = col("std_error");

    let mut series: Vec<Series> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| data_err(format!("line {}: {e}", i + 2)))?;
        let num = |c: usize, what: &str| -> Result<f64> {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| data_err(format!("line {}: bad {what}", i + 2)))
        };
        let label = match label_col {
            Some(c) => rec.get(c).unwrap_or("").to_string(),
            None => "difference".to_string(),
        };
        let point = CurvePoint {
            x: num(n_col, "n")?,
            y: num(y_col, y_label)?,
            err: match se_col {
                Some(c) => num(c, "std_error")?,
                None => 0.0,
            },
        };
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push(point),
            None => series.push(Series { label, points: vec![point] }),
        }
    }
    if series.is_empty() {
        return Err(data_err("no data rows"));
    }
    Ok(PlotData::Curves { y_label: y_label.into(), series })
}

fn parse_json(v: &Value) -> Result<PlotData> {
    let root = v.get("results").unwrap_or(v);
    if let Some(summaries) = root.get("summaries").and_then(Value::as_array) {
        return battery_panels(summaries);
    }
    if let Some(curves) = root.get("curves").and_then(Value::as_array) {
        let mut series = Vec::new();
        for c in curves {
            let label = c.get("sampler").and_then(Value::as_str).ok_or_else(|| data_err("curve without sampler"))?;
            let points = c
                .get("points")
                .and_then(Value::as_array)
                .ok_or_else(|| data_err("curve without points"))?
                .iter()
                .map(|p| {
                    let f = |k: &str| p.get(k).and_then(Value::as_f64).ok_or_else(|| data_err(format!("point without {k}")));
                    Ok(CurvePoint { x: f("n")?, y: f("expected_max")?, err: f("std_error")? })
                })
                .collect::<Result<Vec<_>>>()?;
            series.push(Series { label: label.to_string(), points });
        }
        if series.iter().all(|s| s.points.is_empty()) {
            return Err(data_err("no data rows"));
        }
        return Ok(PlotData::Curves { y_label: "expected max".into(), series });
    }
    Err(data_err("JSON has neither battery summaries nor curves"))
}

fn battery_panels(summaries: &[Value]) -> Result<PlotData> {
    let mut panels: Vec<Panel> = Vec::new();
    for s in summaries {
        let text = |k: &str| s.get(k).and_then(Value::as_str).ok_or_else(|| data_err(format!("summary without {k}")));
        let num = |k: &str| s.get(k).and_then(Value::as_f64);
        let title = format!(
            "{} tau={}",
            text("metric")?,
            num("temperature").ok_or_else(|| data_err("summary without temperature"))?
        );
        let bar = Bar {
            label: text("sampler")?.to_string(),
            value: num("mean").ok_or_else(|| data_err("summary without mean"))?,
            interval: num("ci95_lower").zip(num("ci95_upper")),
        };
        match panels.iter_mut().find(|p| p.title == title) {
            Some(p) => p.bars.push(bar),
            None => panels.push(Panel { title, bars: vec![bar] }),
        }
    }
    if panels.is_empty() {
        return Err(data_err("no summaries"));
    }
    Ok(PlotData::Bars(panels))
}

pub fn render(data: &PlotData, format: PlotFormat) -> String {
    match format {
        PlotFormat::Svg => render_svg(data),
        PlotFormat::Tsv => render_tsv(data),
    }
}

/// One gnuplot data block per series or panel, separated by two blank lines.
pub fn render_tsv(data: &PlotData) -> String {
    let mut out = String::new();
    match data {
        PlotData::Curves { series, .. } => {
            for (i, s) in series.iter().enumerate() {
                if i > 0 {
                    out.push_str("\n\n");
                }
                let _ = writeln!(out, "# {}\n# n\tmean\tlower\tupper", s.label);
                for p in &s.points {
                    let _ = writeln!(out, "{}\t{}\t{}\t{}", p.x, p.y, p.y - p.err, p.y + p.err);
                }
            }
        }
        PlotData::Bars(panels) => {
            for (i, panel) in panels.iter().enumerate() {
                if i > 0 {
                    out.push_str("\n\n");
                }
                let _ = writeln!(out, "# {}\n# sampler\tmean\tlower\tupper", panel.title);
                for b in &panel.bars {
                    let (lo, hi) = b.interval.unwrap_or((b.value, b.value));
                    let _ = writeln!(out, "{}\t{}\t{}\t{}", b.label, b.value, lo, hi);
                }
            }
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Axis range padded by 5%, widened when degenerate.
fn padded(lo: f64, hi: f64) -> (f64, f64) {
    if hi - lo < 1e-12 {
        let pad = if lo.abs() > 1e-12 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

struct Frame {
    x0: f64,
    y0: f64,
    w: f64,
    h: f64,
    xr: (f64, f64),
    yr: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        self.x0 + (x - self.xr.0) / (self.xr.1 - self.xr.0) * self.w
    }

    fn py(&self, y: f64) -> f64 {
        self.y0 + self.h - (y - self.yr.0) / (self.yr.1 - self.yr.0) * self.h
    }

    fn axes(&self, out: &mut String, x_ticks: bool) {
        let (x0, y0, w, h) = (self.x0, self.y0, self.w, self.h);
        let _ = writeln!(out, r##"<rect x="{x0:.1}" y="{y0:.1}" width="{w:.1}" height="{h:.1}" fill="none" stroke="#444"/>"##);
        for t in ticks(self.yr.0, self.yr.1) {
            let y = self.py(t);
            let _ = writeln!(
                out,
                r##"<line x1="{:.1}" y1="{y:.1}" x2="{x0:.1}" y2="{y:.1}" stroke="#444"/><text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{t:.3}</text>"##,
                x0 - 4.0,
                x0 - 6.0,
                y + 3.0
            );
        }
        if x_ticks {
            for t in ticks(self.xr.0, self.xr.1) {
                let x = self.px(t);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="#444"/><text x="{x:.1}" y="{:.1}" font-size="10" text-anchor="middle">{t:.0}</text>"##,
                    y0 + h,
                    y0 + h + 4.0,
                    y0 + h + 16.0
                );
            }
        }
    }
}

fn svg_open(out: &mut String, width: f64, height: f64) {
    let _ = writeln!(
        out,
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif">"##
    );
    let _ = writeln!(out, r##"<rect width="100%" height="100%" fill="white"/>"##);
}

pub fn render_svg(data: &PlotData) -> String {
    match data {
        PlotData::Curves { y_label, series } => curves_svg(y_label, series),
        PlotData::Bars(panels) => bars_svg(panels),
    }
}

fn curves_svg(y_label: &str, series: &[Series]) -> String {
    let pts = series.iter().flat_map(|s| &s.points);
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y - p.err);
        ymax = ymax.max(p.y + p.err);
    }
    let xr = if xmax > xmin { (xmin, xmax) } else { padded(xmin, xmax) };
    let frame = Frame { x0: 70.0, y0: 20.0, w: 560.0, h: 360.0, xr, yr: padded(ymin, ymax) };
    let mut out = String::new();
    svg_open(&mut out, 780.0, 430.0);
    frame.axes(&mut out, true);
    let _ = writeln!(out, r##"<text x="{:.1}" y="420" font-size="12" text-anchor="middle">N</text>"##, frame.x0 + frame.w / 2.0);
    let _ = writeln!(
        out,
        r##"<text x="16" y="{:.1}" font-size="12" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"##,
        frame.y0 + frame.h / 2.0,
        frame.y0 + frame.h / 2.0,
        escape(y_label)
    );

    for (i, s) in series.iter().enumerate() {
        let c = color(i);
        let upper: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", frame.px(p.x), frame.py(p.y + p.err))).collect();
        let lower: Vec<String> =
            s.points.iter().rev().map(|p| format!("{:.2},{:.2}", frame.px(p.x), frame.py(p.y - p.err))).collect();
        let _ = writeln!(
            out,
            r##"<polygon points="{} {}" fill="{c}" fill-opacity="0.2" stroke="none"/>"##,
            upper.join(" "),
            lower.join(" ")
        );
        let line: Vec<String> = s.points.iter().map(|p| format!("{:.2},{:.2}", frame.px(p.x), frame.py(p.y))).collect();
        let _ = writeln!(out, r##"<polyline points="{}" fill="none" stroke="{c}" stroke-width="2"/>"##, line.join(" "));
        let ly = 30.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r##"<line x1="645" y1="{ly:.1}" x2="665" y2="{ly:.1}" stroke="{c}" stroke-width="2"/><text x="670" y="{:.1}" font-size="11">{}</text>"##,
            ly + 4.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn bars_svg(panels: &[Panel]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for b in panels.iter().flat_map(|p| &p.bars) {
        if !labels.contains(&b.label.as_str()) {
            labels.push(&b.label);
        }
    }
    let cols = panels.len().min(3);
    let rows = panels.len().div_ceil(cols);
    let (pw, ph) = (260.0, 220.0);
    let width = cols as f64 * pw + 20.0;
    let height = rows as f64 * ph + 40.0;
    let mut out = String::new();
    svg_open(&mut out, width, height);

    for (k, panel) in panels.iter().enumerate() {
        let (cx, cy) = ((k % cols) as f64 * pw, (k / cols) as f64 * ph);
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for b in &panel.bars {
            let (l, h) = b.interval.unwrap_or((b.value, b.value));
            lo = lo.min(l.min(b.value));
            hi = hi.max(h.max(b.value));
        }
        let frame = Frame { x0: cx + 60.0, y0: cy + 30.0, w: pw - 80.0, h: ph - 60.0, xr: (0.0, 1.0), yr: padded(lo, hi) };
        frame.axes(&mut out, false);
        let _ = writeln!(
            out,
            r##"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">{}</text>"##,
            frame.x0 + frame.w / 2.0,
            cy + 20.0,
            escape(&panel.title)
        );
        let slot = frame.w / panel.bars.len() as f64;
        let base = frame.py(0.0f64.clamp(frame.yr.0, frame.yr.1));
        for (j, b) in panel.bars.iter().enumerate() {
            let c = color(labels.iter().position(|l| *l == b.label).unwrap_or(j));
            let x = frame.x0 + slot * j as f64 + slot * 0.15;
            let bw = slot * 0.7;
            let top = frame.py(b.value);
            let _ = writeln!(
                out,
                r##"<rect x="{x:.2}" y="{:.2}" width="{bw:.2}" height="{:.2}" fill="{c}" fill-opacity="0.75"><title>{}: {}</title></rect>"##,
                top.min(base),
                (base - top).abs(),
                escape(&b.label),
                b.value
            );
            if let Some((l, h)) = b.interval {
                let mx = x + bw / 2.0;
                let (yl, yh) = (frame.py(l), frame.py(h));
                let _ = writeln!(
                    out,
                    r##"<path d="M{mx:.2},{yl:.2}V{yh:.2}M{:.2},{yl:.2}H{:.2}M{:.2},{yh:.2}H{:.2}" stroke="#111" stroke-width="1.2"/>"##,
                    mx - 5.0,
                    mx + 5.0,
                    mx - 5.0,
                    mx + 5.0
                );
            }
        }
    }
    for (i, l) in labels.iter().enumerate() {
        let x = 20.0 + 120.0 * i as f64;
        let y = height - 14.0;
        let _ = writeln!(
            out,
            r##"<rect x="{x:.1}" y="{:.1}" width="12" height="12" fill="{}" fill-opacity="0.75"/><text x="{:.1}" y="{y:.1}" font-size="11">{}</text>"##,
            y - 10.0,
            color(i),
            x + 16.0,
            escape(l)
        );
    }
    out.push_str("</svg>\n");
    out
}
