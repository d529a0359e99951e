//! Sweep serialization: CSV tables and log-log SVG charts.

use std::io::Write;

use crate::antenna::SpacingMode;
use crate::error::{Error, Result};
use crate::region::FieldRegion;
use crate::scalar::Scalar;
use crate::sweep::{ScenarioConfig, SweepRow};

/// Fixed CSV header; column order is part of the interface.
pub const CSV_HEADER: &str =
    "n,d_m,aperture_m,region,lhs_ohm,rhs_exact_ohm,rhs_bound_ohm,poisson_limit_ohm,margin_bound,margin_exact,verdict";

/// Marker appended to the region column when the model is out of its
/// validity range (reactive near field).
pub const OUT_OF_RANGE_MARKER: &str = "annotation=model-out-of-range";

/// Round-trip float rendering with 17 significant digits.
fn fmt_float<T: Scalar>(v: T) -> String {
    format!("{:.16e}", v.as_f64())
}

fn fmt_optional<T: Scalar>(v: Option<T>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

fn region_field(region: FieldRegion) -> String {
    match region {
        FieldRegion::ReactiveNearField => {
            format!("{};{}", region.label(), OUT_OF_RANGE_MARKER)
        }
        _ => region.label().to_string(),
    }
}

/// Writes the sweep as UTF-8 CSV with the fixed header. Absent optionals are
/// rendered empty; floats round-trip exactly.
pub fn emit_csv<T: Scalar>(rows: &[SweepRow<T>], out: &mut impl Write) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain("refusing to emit an empty sweep".into()));
    }
    writeln!(out, "{CSV_HEADER}")?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.n,
            fmt_float(row.d_m),
            fmt_float(row.aperture_m),
            region_field(row.region),
            fmt_float(row.lhs),
            fmt_optional(row.rhs_exact),
            fmt_float(row.rhs_bound),
            fmt_optional(row.poisson_limit),
            fmt_float(row.margin_bound),
            fmt_optional(row.margin_exact),
            if row.verdict { "pass" } else { "fail" },
        )?;
    }
    Ok(())
}

/// Parses CSV produced by [`emit_csv`] back into rows.
pub fn parse_csv<T: Scalar>(text: &str) -> Result<Vec<SweepRow<T>>> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?;
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected CSV header '{header}'")));
    }
    let parse_f = |field: &str| -> Result<T> {
        field
            .parse::<f64>()
            .map(T::lit)
            .map_err(|_| Error::Config(format!("invalid float '{field}'")))
    };
    let parse_opt = |field: &str| -> Result<Option<T>> {
        if field.is_empty() {
            Ok(None)
        } else {
            parse_f(field).map(Some)
        }
    };
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(Error::Config(format!(
                "expected 11 fields, got {} in '{line}'",
                fields.len()
            )));
        }
        let region_str = fields[3].split(';').next().unwrap_or("");
        let region = match region_str {
            "reactive-near-field" => FieldRegion::ReactiveNearField,
            "radiative-near-field" => FieldRegion::RadiativeNearField,
            "far-field" => FieldRegion::FarField,
            other => return Err(Error::Config(format!("unknown region '{other}'"))),
        };
        rows.push(SweepRow {
            n: fields[0]
                .parse()
                .map_err(|_| Error::Config(format!("invalid n '{}'", fields[0])))?,
            d_m: parse_f(fields[1])?,
            aperture_m: parse_f(fields[2])?,
            region,
            lhs: parse_f(fields[4])?,
            rhs_exact: parse_opt(fields[5])?,
            rhs_bound: parse_f(fields[6])?,
            poisson_limit: parse_opt(fields[7])?,
            margin_bound: parse_f(fields[8])?,
            margin_exact: parse_opt(fields[9])?,
            verdict: match fields[10] {
                "pass" => true,
                "fail" => false,
                other => return Err(Error::Config(format!("unknown verdict '{other}'"))),
            },
        });
    }
    Ok(rows)
}

// --- SVG chart -------------------------------------------------------------

const CHART_WIDTH: f64 = 880.0;
const CHART_HEIGHT: f64 = 620.0;
const PLOT_LEFT: f64 = 90.0;
const PLOT_RIGHT: f64 = 650.0;
const PLOT_TOP: f64 = 60.0;
const PLOT_BOTTOM: f64 = 560.0;

struct Series {
    name: &'static str,
    color: &'static str,
    points: Vec<(f64, f64)>,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Writes a log-log SVG 1.1 chart of the sweep: element count against the
/// condition sides, plus the Poisson asymptote in fixed-spacing mode.
pub fn emit_plot<T: Scalar>(
    rows: &[SweepRow<T>],
    config: &ScenarioConfig<T>,
    out: &mut impl Write,
) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::Domain("refusing to plot an empty sweep".into()));
    }

    let to_log_point = |n: usize, v: T| -> Option<(f64, f64)> {
        let v = v.as_f64();
        (v.is_finite() && v > 0.0).then(|| ((n as f64).log10(), v.log10()))
    };

    let mut series = vec![
        Series {
            name: "lhs",
            color: "#1f77b4",
            points: rows
                .iter()
                .filter_map(|r| to_log_point(r.n, r.lhs))
                .collect(),
        },
        Series {
            name: "rhs_bound",
            color: "#d62728",
            points: rows
                .iter()
                .filter_map(|r| to_log_point(r.n, r.rhs_bound))
                .collect(),
        },
    ];
    let exact_points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.rhs_exact.and_then(|v| to_log_point(r.n, v)))
        .collect();
    if !exact_points.is_empty() {
        series.push(Series {
            name: "rhs_exact",
            color: "#2ca02c",
            points: exact_points,
        });
    }
    if config.spacing_mode == SpacingMode::FixedSpacing {
        let poisson_points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| r.poisson_limit.and_then(|v| to_log_point(r.n, v)))
            .collect();
        if !poisson_points.is_empty() {
            series.push(Series {
                name: "poisson_limit",
                color: "#9467bd",
                points: poisson_points,
            });
        }
    }

    let xs: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .collect();
    let ys: Vec<f64> = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1))
        .collect();
    if ys.is_empty() {
        return Err(Error::Domain("no positive finite values to plot".into()));
    }
    let x_min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let x_max = xs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(x_min + 1e-9);
    let y_min = ys.iter().copied().fold(f64::INFINITY, f64::min).floor();
    let y_max = ys
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
        .ceil()
        .max(y_min + 1.0);

    let map_x = |lx: f64| PLOT_LEFT + (lx - x_min) / (x_max - x_min) * (PLOT_RIGHT - PLOT_LEFT);
    let map_y = |ly: f64| PLOT_BOTTOM - (ly - y_min) / (y_max - y_min) * (PLOT_BOTTOM - PLOT_TOP);

    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" viewBox="0 0 {CHART_WIDTH} {CHART_HEIGHT}">"#
    )?;
    writeln!(
        out,
        r#"<rect x="0" y="0" width="{CHART_WIDTH}" height="{CHART_HEIGHT}" fill="white"/>"#
    )?;
    writeln!(
        out,
        r#"<text x="{}" y="30" font-size="16" text-anchor="middle" font-family="sans-serif">{} (log-log, N vs ohms)</text>"#,
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        xml_escape(&config.name)
    )?;

    // Decade grid and tick labels.
    writeln!(
        out,
        r##"<g class="grid" stroke="#dddddd" stroke-width="1">"##
    )?;
    let mut x_tick = x_min.ceil() as i64;
    while (x_tick as f64) <= x_max {
        let px = map_x(x_tick as f64);
        writeln!(
            out,
            r#"<line x1="{px:.2}" y1="{PLOT_TOP}" x2="{px:.2}" y2="{PLOT_BOTTOM}"/>"#
        )?;
        x_tick += 1;
    }
    let y_span = (y_max - y_min) as i64;
    let y_step = (y_span / 12).max(1);
    let mut y_tick = y_min as i64;
    while (y_tick as f64) <= y_max {
        let py = map_y(y_tick as f64);
        writeln!(
            out,
            r#"<line x1="{PLOT_LEFT}" y1="{py:.2}" x2="{PLOT_RIGHT}" y2="{py:.2}"/>"#
        )?;
        y_tick += y_step;
    }
    writeln!(out, "</g>")?;

    writeln!(
        out,
        r##"<g class="ticks" font-size="12" font-family="sans-serif" fill="#333333">"##
    )?;
    let mut x_tick = x_min.ceil() as i64;
    while (x_tick as f64) <= x_max {
        let px = map_x(x_tick as f64);
        writeln!(
            out,
            r#"<text x="{px:.2}" y="{}" text-anchor="middle">1e{x_tick}</text>"#,
            PLOT_BOTTOM + 20.0
        )?;
        x_tick += 1;
    }
    let mut y_tick = y_min as i64;
    while (y_tick as f64) <= y_max {
        let py = map_y(y_tick as f64);
        writeln!(
            out,
            r#"<text x="{}" y="{:.2}" text-anchor="end">1e{y_tick}</text>"#,
            PLOT_LEFT - 8.0,
            py + 4.0
        )?;
        y_tick += y_step;
    }
    writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">N (elements)</text>"#,
        (PLOT_LEFT + PLOT_RIGHT) / 2.0,
        PLOT_BOTTOM + 45.0
    )?;
    writeln!(out, "</g>")?;

    // Axes.
    writeln!(
        out,
        r##"<g class="axes" stroke="#000000" stroke-width="1.5"><line x1="{PLOT_LEFT}" y1="{PLOT_BOTTOM}" x2="{PLOT_RIGHT}" y2="{PLOT_BOTTOM}"/><line x1="{PLOT_LEFT}" y1="{PLOT_TOP}" x2="{PLOT_LEFT}" y2="{PLOT_BOTTOM}"/></g>"##
    )?;

    // Series.
    for s in &series {
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(lx, ly)| format!("{:.2},{:.2}", map_x(lx), map_y(ly)))
            .collect();
        let dash = if s.name == "poisson_limit" {
            r#" stroke-dasharray="8,4""#
        } else {
            ""
        };
        writeln!(
            out,
            r#"<polyline class="series-{}" fill="none" stroke="{}" stroke-width="2"{} points="{}"/>"#,
            s.name,
            s.color,
            dash,
            pts.join(" ")
        )?;
    }

    // Legend.
    writeln!(
        out,
        r#"<g class="legend" font-size="13" font-family="sans-serif">"#
    )?;
    for (i, s) in series.iter().enumerate() {
        let y = PLOT_TOP + 20.0 + i as f64 * 22.0;
        writeln!(
            out,
            r#"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{}" stroke-width="2"/>"#,
            PLOT_RIGHT + 20.0,
            PLOT_RIGHT + 50.0,
            s.color
        )?;
        writeln!(
            out,
            r#"<text x="{}" y="{:.2}">{}</text>"#,
            PLOT_RIGHT + 58.0,
            y + 4.0,
            s.name
        )?;
    }
    writeln!(out, "</g>")?;
    writeln!(out, "</svg>")?;
    Ok(())
}
