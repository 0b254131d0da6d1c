//! SVG time-series and sweep plots with red limit lines.

use std::path::{Path, PathBuf};

use plotters::prelude::*;

use crate::aero::ActuatorLimits;
use crate::protection::EnvelopeLimits;

use super::{EpisodeLog, HarnessError, LogRow, SweepResult};

const SIZE: (u32, u32) = (900, 420);
const TRACE_COLORS: [RGBColor; 3] = [BLUE, GREEN, MAGENTA];

struct Series<'a> {
    label: &'a str,
    points: Vec<(f64, f64)>,
}

fn plot_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Plot(e.to_string())
}

fn padded(lo: f64, hi: f64) -> (f64, f64) {
    let span = hi - lo;
    if span.abs() < 1e-9 {
        (lo - 1.0, hi + 1.0)
    } else {
        (lo - 0.05 * span, hi + 0.05 * span)
    }
}

fn draw(path: &Path, title: &str, x_label: &str, y_label: &str, series: &[Series], limits: &[f64]) -> Result<(), HarnessError> {
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let ys = series.iter().flat_map(|s| s.points.iter().map(|p| p.1)).chain(limits.iter().copied());
    let (x_lo, x_hi) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    let (y_lo, y_hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    if !(x_lo.is_finite() && x_hi.is_finite() && y_lo.is_finite() && y_hi.is_finite()) {
        return Err(HarnessError::Plot(format!("{title}: no finite data")));
    }
    let (x_lo, x_hi) = padded(x_lo, x_hi);
    let (y_lo, y_hi) = padded(y_lo, y_hi);

    let root = SVGBackend::new(path, SIZE).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(10)
        .x_label_area_size(35)
        .y_label_area_size(55)
        .build_cartesian_2d(x_lo..x_hi, y_lo..y_hi)
        .map_err(plot_err)?;
    chart.configure_mesh().x_desc(x_label).y_desc(y_label).draw().map_err(plot_err)?;

    for lim in limits {
        chart.draw_series(LineSeries::new([(x_lo, *lim), (x_hi, *lim)], RED.stroke_width(1))).map_err(plot_err)?;
    }
    for (i, s) in series.iter().enumerate() {
        let color = TRACE_COLORS[i % TRACE_COLORS.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(plot_err)?
            .label(s.label)
            .legend(move |(x, y)| PathElement::new([(x, y), (x + 18, y)], color));
        // a lone sample has no line segment to show
        if s.points.len() == 1 {
            chart.draw_series(s.points.iter().map(|p| Circle::new(*p, 3, color.filled()))).map_err(plot_err)?;
        }
    }
    if series.len() > 1 {
        chart
            .configure_series_labels()
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(plot_err)?;
    }
    root.present().map_err(plot_err)?;
    Ok(())
}

fn trace<'a>(rows: &[LogRow], label: &'a str, f: fn(&LogRow) -> f64) -> Series<'a> {
    Series { label, points: rows.iter().map(|r| (r.t, f(r))).collect() }
}

/// Writes `alpha.svg`, `nz.svg`, `q.svg` and `surfaces.svg` into `out_dir`.
pub fn plot_episode(log: &EpisodeLog, limits: &EnvelopeLimits, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let rows = &log.rows;
    if rows.is_empty() {
        return Err(HarnessError::Plot("episode log is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let tail = ActuatorLimits::TAIL.position_limit;
    let files = [
        ("alpha.svg", "Angle of attack", "alpha [deg]", vec![trace(rows, "alpha", |r| r.alpha)], vec![limits.alpha_max_deg, limits.alpha_min_deg]),
        ("nz.svg", "Load factor", "nz [g]", vec![trace(rows, "nz", |r| r.nz)], vec![limits.nz_max, limits.nz_min]),
        (
            "q.svg",
            "Pitch rate",
            "q [deg/s]",
            vec![trace(rows, "q", |r| r.q), trace(rows, "pilot", |r| r.q_pilot), trace(rows, "command", |r| r.q_cmd)],
            vec![limits.q_max, limits.q_min],
        ),
        (
            "surfaces.svg",
            "Control surfaces",
            "deflection [deg]",
            vec![trace(rows, "aileron", |r| r.aileron), trace(rows, "tail", |r| r.tail), trace(rows, "rudder", |r| r.rudder)],
            vec![tail, -tail],
        ),
    ];
    let mut written = Vec::new();
    for (name, title, y_label, series, lims) in files {
        let path = out_dir.join(name);
        draw(&path, title, "t [s]", y_label, &series, &lims)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `sweep_alpha.svg` and `sweep_nz.svg` (per-command extremes) and
/// `sweep_violation.svg` (longest exceedance against the failure window).
pub fn plot_sweep(
    result: &SweepResult,
    limits: &EnvelopeLimits,
    window: f64,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, HarnessError> {
    let rows = &result.rows;
    if rows.is_empty() {
        return Err(HarnessError::Plot("sweep result is empty".into()));
    }
    std::fs::create_dir_all(out_dir)?;
    let pts = |f: fn(&super::SweepRow) -> f64| rows.iter().map(|r| (r.q_cmd, f(r))).filter(|p| p.1.is_finite()).collect();
    let mut written = Vec::new();

    let path = out_dir.join("sweep_alpha.svg");
    let series = [
        Series { label: "max alpha", points: pts(|r| r.max_alpha) },
        Series { label: "min alpha", points: pts(|r| r.min_alpha) },
    ];
    draw(&path, "Sweep: angle of attack extremes", "q_cmd [deg/s]", "alpha [deg]", &series, &[limits.alpha_max_deg, limits.alpha_min_deg])?;
    written.push(path);

    let path = out_dir.join("sweep_nz.svg");
    let series =
        [Series { label: "max nz", points: pts(|r| r.max_nz) }, Series { label: "min nz", points: pts(|r| r.min_nz) }];
    draw(&path, "Sweep: load factor extremes", "q_cmd [deg/s]", "nz [g]", &series, &[limits.nz_max, limits.nz_min])?;
    written.push(path);

    let path = out_dir.join("sweep_violation.svg");
    let series = [
        Series { label: "alpha", points: pts(|r| r.longest_alpha) },
        Series { label: "nz", points: pts(|r| r.longest_nz) },
        Series { label: "q", points: pts(|r| r.longest_q) },
    ];
    draw(&path, "Sweep: longest continuous exceedance", "q_cmd [deg/s]", "duration [s]", &series, &[window])?;
    written.push(path);
    Ok(written)
}
