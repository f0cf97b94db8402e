//! CSV tables and SVG figures for the evaluation reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{de::DeserializeOwned, Deserialize, Serialize};

use super::boundary::RecoveryBoundary;
use super::cot::CotRow;
use super::payload::{PayloadSample, PayloadSeries};
use super::push::{success_bins, PushTrial, SuccessBin, SUCCESS_BIN_EDGES};
use super::tracking::{TrackingCell, TrackingReport};
use crate::error::EvalError;
use crate::physics::NUM_LEGS;

pub const TRACKING_CSV: &str = "tracking.csv";
pub const TRACKING_SUMMARY_CSV: &str = "tracking_summary.csv";
pub const TRACKING_SVG: &str = "tracking.svg";
pub const PUSH_TRIALS_CSV: &str = "push_trials.csv";
pub const PUSH_BINS_CSV: &str = "push_success.csv";
pub const BOUNDARY_CSV: &str = "push_boundary.csv";
pub const POLAR_SVG: &str = "polar.svg";
pub const COT_CSV: &str = "cot.csv";
pub const COT_SVG: &str = "cot.svg";
pub const PAYLOAD_CSV: &str = "payload.csv";
pub const PAYLOAD_SVG: &str = "stiffness.svg";

fn csv_error(path: &Path, source: csv::Error) -> EvalError {
    EvalError::Csv { path: path.to_path_buf(), source }
}

pub fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.serialize(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|source| EvalError::Output { path: path.to_path_buf(), source })
}

pub fn read_rows<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|e| csv_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<(), EvalError> {
    std::fs::write(path, text).map_err(|source| EvalError::Output { path: path.to_path_buf(), source })
}

/// Payload rows with one kp column per leg.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayloadRow {
    pub time_s: f64,
    pub loaded: bool,
    #[serde(rename = "kp_FR")]
    pub kp_fr: f64,
    #[serde(rename = "kp_FL")]
    pub kp_fl: f64,
    #[serde(rename = "kp_RR")]
    pub kp_rr: f64,
    #[serde(rename = "kp_RL")]
    pub kp_rl: f64,
    pub base_height: f64,
    pub tracking_error: f64,
}

impl From<&PayloadSample> for PayloadRow {
    fn from(s: &PayloadSample) -> Self {
        let [kp_fr, kp_fl, kp_rr, kp_rl] = s.kp_leg;
        Self { time_s: s.time_s, loaded: s.loaded, kp_fr, kp_fl, kp_rr, kp_rl, base_height: s.base_height, tracking_error: s.tracking_error }
    }
}

impl From<&PayloadRow> for PayloadSample {
    fn from(r: &PayloadRow) -> Self {
        Self {
            time_s: r.time_s,
            loaded: r.loaded,
            kp_leg: [r.kp_fr, r.kp_fl, r.kp_rr, r.kp_rl],
            base_height: r.base_height,
            tracking_error: r.tracking_error,
        }
    }
}

/// `tracking.csv` (cells), `tracking_summary.csv` (per speed) and a bar chart.
pub fn export_tracking(dir: &Path, report: &TrackingReport) -> Result<Vec<PathBuf>, EvalError> {
    let paths = [dir.join(TRACKING_CSV), dir.join(TRACKING_SUMMARY_CSV), dir.join(TRACKING_SVG)];
    write_rows(&paths[0], &report.cells)?;
    write_rows(&paths[1], &report.per_speed)?;
    let bars: Vec<(String, f64)> = report
        .per_speed
        .iter()
        .map(|s| (format!("{} m/s", s.speed), s.mean_error.unwrap_or(0.0)))
        .collect();
    write_text(&paths[2], &bar_chart_svg("Mean velocity tracking error", "error (m/s)", &bars))?;
    Ok(paths.to_vec())
}

pub fn import_tracking(path: &Path) -> Result<TrackingReport, EvalError> {
    let cells: Vec<TrackingCell> = read_rows(path)?;
    Ok(TrackingReport::from_cells(cells))
}

/// Trial table, cumulative success bins, boundary samples (when fitted) and
/// the polar figure.
pub fn export_push(dir: &Path, trials: &[PushTrial], boundary: Option<&RecoveryBoundary>) -> Result<Vec<PathBuf>, EvalError> {
    let mut paths = vec![dir.join(PUSH_TRIALS_CSV), dir.join(PUSH_BINS_CSV)];
    write_rows(&paths[0], trials)?;
    let bins: Vec<SuccessBin> = success_bins(trials, &SUCCESS_BIN_EDGES);
    write_rows(&paths[1], &bins)?;
    if let Some(b) = boundary {
        #[derive(Serialize)]
        struct Row {
            azimuth_deg: f64,
            magnitude: f64,
        }
        let rows: Vec<Row> =
            (0..360).map(|d| Row { azimuth_deg: d as f64, magnitude: b.boundary_at((d as f64).to_radians()) }).collect();
        let path = dir.join(BOUNDARY_CSV);
        write_rows(&path, &rows)?;
        paths.push(path);
    }
    let polar = dir.join(POLAR_SVG);
    write_text(&polar, &polar_svg(trials, boundary))?;
    paths.push(polar);
    Ok(paths)
}

pub fn import_push_trials(path: &Path) -> Result<Vec<PushTrial>, EvalError> {
    read_rows(path)
}

pub fn export_cot(dir: &Path, rows: &[CotRow]) -> Result<Vec<PathBuf>, EvalError> {
    let paths = [dir.join(COT_CSV), dir.join(COT_SVG)];
    write_rows(&paths[0], rows)?;
    let bars: Vec<(String, f64)> = rows.iter().map(|r| (format!("{} m/s", r.speed), r.cot.unwrap_or(0.0))).collect();
    write_text(&paths[1], &bar_chart_svg("Cost of transport", "CoT", &bars))?;
    Ok(paths.to_vec())
}

pub fn import_cot(path: &Path) -> Result<Vec<CotRow>, EvalError> {
    read_rows(path)
}

pub fn export_payload(dir: &Path, series: &PayloadSeries) -> Result<Vec<PathBuf>, EvalError> {
    let paths = [dir.join(PAYLOAD_CSV), dir.join(PAYLOAD_SVG)];
    let rows: Vec<PayloadRow> = series.samples.iter().map(PayloadRow::from).collect();
    write_rows(&paths[0], &rows)?;
    let lines: Vec<(String, Vec<(f64, f64)>)> = (0..NUM_LEGS)
        .map(|leg| {
            let name = crate::physics::LEG_NAMES[leg].to_string();
            (name, series.samples.iter().map(|s| (s.time_s, s.kp_leg[leg])).collect())
        })
        .collect();
    let shaded = {
        let loaded: Vec<f64> = series.samples.iter().filter(|s| s.loaded).map(|s| s.time_s).collect();
        loaded.first().zip(loaded.last()).map(|(a, b)| (*a, *b))
    };
    write_text(&paths[1], &line_chart_svg("Stiffness over time", "time (s)", "kp (N·m/rad)", &lines, shaded))?;
    Ok(paths.to_vec())
}

pub fn import_payload(path: &Path) -> Result<Vec<PayloadSample>, EvalError> {
    let rows: Vec<PayloadRow> = read_rows(path)?;
    Ok(rows.iter().map(PayloadSample::from).collect())
}

const W: f64 = 480.0;
const H: f64 = 360.0;
const PALETTE: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];

fn svg_open(title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#, W / 2.0, escape(title));
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// A "nice" axis maximum at or above `v`.
fn axis_max(v: f64) -> f64 {
    if !(v > 0.0) {
        return 1.0;
    }
    let p = 10f64.powf(v.log10().floor());
    [1.0, 2.0, 2.5, 5.0, 10.0].iter().map(|m| m * p).find(|m| *m >= v).unwrap_or(10.0 * p)
}

pub fn bar_chart_svg(title: &str, y_label: &str, bars: &[(String, f64)]) -> String {
    let mut s = svg_open(title);
    let (x0, y0, x1, y1) = (60.0, H - 40.0, W - 20.0, 40.0);
    let top = axis_max(bars.iter().map(|b| b.1).fold(0.0, f64::max));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=4 {
        let v = top * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="end">{v:.3}</text>"#, x0 - 4.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(y_label));
    let slot = (x1 - x0) / bars.len().max(1) as f64;
    for (i, (label, value)) in bars.iter().enumerate() {
        let h = (y0 - y1) * (value / top).clamp(0.0, 1.0);
        let x = x0 + slot * (i as f64 + 0.2);
        let _ = writeln!(s, r#"<rect x="{x:.2}" y="{:.2}" width="{:.2}" height="{h:.2}" fill="{}"/>"#, y0 - h, slot * 0.6, PALETTE[0]);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{}</text>"#, x + slot * 0.3, y0 + 16.0, escape(label));
    }
    s.push_str("</svg>\n");
    s
}

/// Trials as dots (success green, failure red) at (magnitude, azimuth) with
/// the boundary curve when one was fitted.
pub fn polar_svg(trials: &[PushTrial], boundary: Option<&RecoveryBoundary>) -> String {
    let mut s = svg_open("Push recovery");
    let (cx, cy, r) = (W / 2.0, H / 2.0 + 10.0, H / 2.0 - 40.0);
    let max = axis_max(trials.iter().map(|t| t.magnitude).fold(0.0, f64::max));
    for k in 1..=4 {
        let rr = r * k as f64 / 4.0;
        let _ = writeln!(s, r##"<circle cx="{cx}" cy="{cy}" r="{rr:.2}" fill="none" stroke="#bbb"/>"##);
        let _ = writeln!(s, r##"<text x="{:.2}" y="{:.2}" fill="#666">{:.0} N</text>"##, cx + 3.0, cy - rr - 2.0, max * k as f64 / 4.0);
    }
    for d in (0..360).step_by(45) {
        let a = (d as f64).to_radians();
        let _ = writeln!(s, r##"<line x1="{cx}" y1="{cy}" x2="{:.2}" y2="{:.2}" stroke="#ddd"/>"##, cx + r * a.cos(), cy - r * a.sin());
    }
    for t in trials {
        let rr = r * t.magnitude / max;
        let color = if t.success { "#2ca02c" } else { "#d62728" };
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2" fill="{color}"/>"#, cx + rr * t.azimuth.cos(), cy - rr * t.azimuth.sin());
    }
    if let Some(b) = boundary {
        let points: Vec<String> = (0..=360)
            .map(|d| {
                let a = (d as f64).to_radians();
                let rr = r * b.boundary_at(a) / max;
                format!("{:.2},{:.2}", cx + rr * a.cos(), cy - rr * a.sin())
            })
            .collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="black" stroke-width="2"/>"#, points.join(" "));
    }
    s.push_str("</svg>\n");
    s
}

pub fn line_chart_svg(
    title: &str,
    x_label: &str,
    y_label: &str,
    lines: &[(String, Vec<(f64, f64)>)],
    shaded: Option<(f64, f64)>,
) -> String {
    let mut s = svg_open(title);
    let (x0, y0, x1, y1) = (60.0, H - 40.0, W - 90.0, 40.0);
    let all = lines.iter().flat_map(|l| l.1.iter());
    let t_max = all.clone().map(|p| p.0).fold(0.0, f64::max).max(1e-9);
    let v_max = axis_max(all.map(|p| p.1).fold(0.0, f64::max));
    let px = |t: f64| x0 + (x1 - x0) * t / t_max;
    let py = |v: f64| y0 - (y0 - y1) * v / v_max;
    if let Some((a, b)) = shaded {
        let _ = writeln!(s, r##"<rect x="{:.2}" y="{y1}" width="{:.2}" height="{}" fill="#f3e6c8"/>"##, px(a), px(b) - px(a), y0 - y1);
    }
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=4 {
        let v = v_max * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"#, x0 - 4.0, py(v) + 4.0);
        let t = t_max * k as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.2}" y="{}" text-anchor="middle">{t:.1}</text>"#, px(t), y0 + 16.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, H - 6.0, escape(x_label));
    let _ = writeln!(s, r#"<text x="14" y="{}" transform="rotate(-90 14 {})" text-anchor="middle">{}</text>"#, (y0 + y1) / 2.0, (y0 + y1) / 2.0, escape(y_label));
    for (i, (name, points)) in lines.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = points.iter().map(|&(t, v)| format!("{:.2},{:.2}", px(t), py(v))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
        let _ = writeln!(s, r#"<text x="{}" y="{}" fill="{color}">{}</text>"#, x1 + 8.0, y1 + 16.0 * (i as f64 + 1.0), escape(name));
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_polar_plot_has_axes_only() {
        let svg = polar_svg(&[], None);
        assert!(svg.contains("<circle cx=\"240\""));
        assert!(!svg.contains("polyline"));
        assert!(!svg.contains("r=\"2\""));
    }

    #[test]
    fn axis_max_is_nice() {
        assert_eq!(axis_max(0.37), 0.5);
        assert_eq!(axis_max(180.0), 200.0);
        assert_eq!(axis_max(0.0), 1.0);
    }
}
