//! Faithfulness-abstractiveness control curve and effective faithfulness.
//!
//! Control models (one per extractiveness quartile) contribute measured
//! `(coverage, faithfulness)` points. The curve interpolates linearly
//! between adjacent points and holds the endpoint value outside them. A
//! system's effective faithfulness is its faithfulness minus the curve's
//! value at the system's coverage.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::annotations::SystemScore;
use crate::corpus::{malformed, open, parse_object, string_field};
use crate::error::{Error, Result};
use crate::units::Units;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub model_id: String,
    pub coverage: f64,
    pub faithfulness: f64,
}

impl ControlPoint {
    pub fn new(model_id: impl Into<String>, coverage: f64, faithfulness: f64) -> Result<Self> {
        check_fraction("coverage", coverage)?;
        check_fraction("faithfulness", faithfulness)?;
        Ok(ControlPoint {
            model_id: model_id.into(),
            coverage,
            faithfulness,
        })
    }
}

fn check_fraction(field: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            field,
            value,
            range: "[0, 1]",
        })
    }
}

/// Control points sorted by strictly increasing coverage.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    points: Vec<ControlPoint>,
}

pub fn build_curve(mut points: Vec<ControlPoint>) -> Result<TradeoffCurve> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints(points.len()));
    }
    for p in &points {
        check_fraction("coverage", p.coverage)?;
        check_fraction("faithfulness", p.faithfulness)?;
    }
    points.sort_by(|a, b| a.coverage.total_cmp(&b.coverage));
    if let Some(w) = points.windows(2).find(|w| w[0].coverage == w[1].coverage) {
        return Err(Error::DuplicateCoverage(w[0].coverage));
    }
    Ok(TradeoffCurve { points })
}

impl TradeoffCurve {
    pub fn points(&self) -> &[ControlPoint] {
        &self.points
    }

    pub fn min_coverage(&self) -> f64 {
        self.points[0].coverage
    }

    pub fn max_coverage(&self) -> f64 {
        self.points[self.points.len() - 1].coverage
    }

    /// Faithfulness of the control operating at `coverage`.
    pub fn control_at(&self, coverage: f64) -> f64 {
        let pts = &self.points;
        let first = &pts[0];
        let last = &pts[pts.len() - 1];
        if coverage <= first.coverage {
            return first.faithfulness;
        }
        if coverage >= last.coverage {
            return last.faithfulness;
        }
        // first index whose coverage exceeds `coverage`; always in 1..len
        let hi = pts.partition_point(|p| p.coverage <= coverage);
        let (l, r) = (&pts[hi - 1], &pts[hi]);
        if l.coverage == coverage {
            return l.faithfulness;
        }
        let t = (coverage - l.coverage) / (r.coverage - l.coverage);
        l.faithfulness + t * (r.faithfulness - l.faithfulness)
    }

    /// `n` evenly spaced samples over the covered range, endpoints included.
    pub fn polyline(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        let (lo, hi) = (self.min_coverage(), self.max_coverage());
        (0..n)
            .map(|i| {
                let x = if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                };
                (x, self.control_at(x))
            })
            .collect()
    }
}

pub fn control_at(curve: &TradeoffCurve, coverage: f64) -> f64 {
    curve.control_at(coverage)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectiveFaithfulness {
    pub system_id: String,
    pub system_coverage: f64,
    pub system_faithfulness: f64,
    pub control_faithfulness: f64,
    pub delta: f64,
    pub above_curve: bool,
}

pub fn effective_faithfulness(curve: &TradeoffCurve, system: &SystemScore) -> EffectiveFaithfulness {
    let control = curve.control_at(system.mean_coverage);
    let delta = system.mean_faithfulness - control;
    EffectiveFaithfulness {
        system_id: system.system_id.clone(),
        system_coverage: system.mean_coverage,
        system_faithfulness: system.mean_faithfulness,
        control_faithfulness: control,
        delta,
        above_curve: delta > 0.0,
    }
}

/// Sample Pearson correlation between coverage and a metric score.
pub fn correlate(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 2 {
        return Err(Error::DegenerateVariance("fewer than two pairs"));
    }
    let n = pairs.len() as f64;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::DegenerateVariance("coverage is constant"));
    }
    if syy == 0.0 {
        return Err(Error::DegenerateVariance("metric score is constant"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// One `(label, coverage, faithfulness)` record from a control-points or
/// systems file, values already converted to fractions.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredRecord {
    pub label: String,
    pub coverage: f64,
    pub faithfulness: f64,
    pub n_examples: usize,
}

/// Reads `{<label_field>, coverage, faithfulness[, n]}` records. A leading
/// `{"units": "percent"|"fraction"}` record declares the file's units.
pub fn read_measured<R: BufRead>(
    reader: R,
    label_field: &str,
    requested: Option<Units>,
) -> Result<(Vec<MeasuredRecord>, Units)> {
    let mut declared = None;
    let mut raw = Vec::new();
    for (i, text) in reader.lines().enumerate() {
        let line = i + 1;
        let text = text.map_err(|e| malformed(line, e.to_string()))?;
        let Some(obj) = parse_object(&text, line)? else {
            continue;
        };
        if let Some(u) = obj.get("units") {
            if !raw.is_empty() || declared.is_some() {
                return Err(malformed(line, "units header must be the first record"));
            }
            let u = u
                .as_str()
                .ok_or_else(|| malformed(line, "`units` is not a string"))?
                .parse::<Units>()
                .map_err(|e| malformed(line, e.to_string()))?;
            declared = Some(u);
            continue;
        }
        let label = string_field(&obj, label_field, line)?;
        let number = |field: &str| -> Result<f64> {
            obj.get(field)
                .and_then(Value::as_f64)
                .ok_or_else(|| malformed(line, format!("field `{field}` missing or not a number")))
        };
        let n_examples = obj.get("n").and_then(Value::as_u64).unwrap_or(0) as usize;
        raw.push((line, label, number("coverage")?, number("faithfulness")?, n_examples));
    }
    let units = Units::reconcile(declared, requested)?;
    let limit = units.from_fraction(1.0);
    let records = raw
        .into_iter()
        .map(|(line, label, c, f, n)| {
            for v in [c, f] {
                if !(0.0..=limit).contains(&v) {
                    return Err(malformed(line, format!("value {v} outside [0, {limit}] for {units} units")));
                }
            }
            Ok(MeasuredRecord {
                label,
                coverage: units.to_fraction(c),
                faithfulness: units.to_fraction(f),
                n_examples: n,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((records, units))
}

pub fn load_control_points(path: impl AsRef<Path>, requested: Option<Units>) -> Result<(Vec<ControlPoint>, Units)> {
    let (records, units) = read_measured(open(path.as_ref())?, "model", requested)?;
    let points = records
        .into_iter()
        .map(|r| ControlPoint::new(r.label, r.coverage, r.faithfulness))
        .collect::<Result<_>>()?;
    Ok((points, units))
}

pub fn load_systems(path: impl AsRef<Path>, requested: Option<Units>) -> Result<(Vec<SystemScore>, Units)> {
    let (records, units) = read_measured(open(path.as_ref())?, "system", requested)?;
    let systems = records
        .into_iter()
        .map(|r| SystemScore {
            system_id: r.label,
            mean_faithfulness: r.faithfulness,
            mean_coverage: r.coverage,
            n_examples: r.n_examples,
        })
        .collect();
    Ok((systems, units))
}

const POLYLINE_SAMPLES: usize = 51;

/// Tab-separated plot data: curve nodes, a sampled polyline and system
/// points with their control value and above/below flag.
pub fn write_curve_report<W: Write>(
    mut out: W,
    curve: &TradeoffCurve,
    systems: &[EffectiveFaithfulness],
    units: Units,
) -> std::io::Result<()> {
    let u = |v: f64| units.from_fraction(v);
    writeln!(out, "kind\tlabel\tcoverage\tfaithfulness\tcontrol\tdelta\tabove")?;
    for p in curve.points() {
        writeln!(
            out,
            "node\t{}\t{}\t{}\t{}\t0\t",
            p.model_id,
            u(p.coverage),
            u(p.faithfulness),
            u(p.faithfulness)
        )?;
    }
    for (x, y) in curve.polyline(POLYLINE_SAMPLES) {
        writeln!(out, "curve\t\t{}\t{}\t{}\t0\t", u(x), u(y), u(y))?;
    }
    for s in systems {
        writeln!(
            out,
            "system\t{}\t{}\t{}\t{}\t{}\t{}",
            s.system_id,
            u(s.system_coverage),
            u(s.system_faithfulness),
            u(s.control_faithfulness),
            u(s.delta),
            s.above_curve
        )?;
    }
    Ok(())
}

pub fn curve_report(
    curve: &TradeoffCurve,
    systems: &[EffectiveFaithfulness],
    out: impl AsRef<Path>,
    units: Units,
) -> Result<()> {
    let path = out.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_curve_report(&mut w, curve, systems, units)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Static SVG scatter of the curve, its nodes and the systems. Systems above
/// the curve are drawn green, others red.
pub fn render_svg(curve: &TradeoffCurve, systems: &[EffectiveFaithfulness]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const PAD: f64 = 60.0;

    let xs = curve
        .points()
        .iter()
        .map(|p| p.coverage)
        .chain(systems.iter().map(|s| s.system_coverage));
    let ys = curve
        .points()
        .iter()
        .map(|p| p.faithfulness)
        .chain(systems.iter().map(|s| s.system_faithfulness));
    let span = |it: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = it.fold((f64::MAX, f64::MIN), |(lo, hi), v| (lo.min(v), hi.max(v)));
        let margin = ((hi - lo) * 0.1).max(0.01);
        (lo - margin, hi + margin)
    };
    let (x0, x1) = span(&mut xs.into_iter());
    let (y0, y1) = span(&mut ys.into_iter());
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<path d="M{PAD} {PAD} V{} H{}" fill="none" stroke="black"/>"#,
        H - PAD,
        W - PAD
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">coverage (%)</text>"#,
        W / 2.0,
        H - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" text-anchor="middle" transform="rotate(-90 20 {})">faithfulness (%)</text>"#,
        H / 2.0,
        H / 2.0
    );
    for (label, v, x, y) in [
        ("x0", x0, px(x0), H - PAD + 16.0),
        ("x1", x1, px(x1), H - PAD + 16.0),
    ] {
        let _ = writeln!(svg, r#"<text class="{label}" x="{x:.1}" y="{y:.1}" text-anchor="middle">{:.1}</text>"#, v * 100.0);
    }
    for (v, y) in [(y0, py(y0)), (y1, py(y1))] {
        let _ = writeln!(svg, r#"<text x="{:.1}" y="{y:.1}" text-anchor="end">{:.1}</text>"#, PAD - 6.0, v * 100.0);
    }
    let pts: Vec<String> = curve
        .points()
        .iter()
        .map(|p| format!("{:.2},{:.2}", px(p.coverage), py(p.faithfulness)))
        .collect();
    let _ = writeln!(
        svg,
        r#"<polyline points="{}" fill="none" stroke="steelblue" stroke-width="2"/>"#,
        pts.join(" ")
    );
    for p in curve.points() {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="5" fill="steelblue"><title>{}</title></circle>"#,
            px(p.coverage),
            py(p.faithfulness),
            xml_escape(&p.model_id)
        );
    }
    for s in systems {
        let color = if s.above_curve { "seagreen" } else { "firebrick" };
        let (cx, cy) = (px(s.system_coverage), py(s.system_faithfulness));
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="5" fill="{color}"><title>{}</title></circle>"#,
            xml_escape(&s.system_id)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            cx + 7.0,
            cy - 7.0,
            xml_escape(&s.system_id)
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
