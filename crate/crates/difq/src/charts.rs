//! SVG charts for runs and envelope regions.

use difq_core::envelope::RegionBoundary;
use difq_core::sim::TraceSet;
use plotters::prelude::*;

use crate::error::{CliError, Result};

const COLORS: [RGBColor; 5] = [RED, GREEN, BLUE, MAGENTA, BLACK];

struct Series<'a> {
    label: String,
    points: Vec<(f64, f64)>,
    color: &'a RGBColor,
}

fn draw_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Internal(format!("chart: {e}"))
}

fn bounds(series: &[Series]) -> (std::ops::Range<f64>, std::ops::Range<f64>) {
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for s in series {
        for &(x, y) in &s.points {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    if !(x0 < x1) {
        (x0, x1) = (0.0, 1.0);
    }
    if !(y0 < y1) {
        (y0, y1) = if y0.is_finite() { (y0 - 1.0, y0 + 1.0) } else { (-1.0, 1.0) };
    }
    let pad = 0.05 * (y1 - y0);
    (x0..x1, (y0 - pad)..(y1 + pad))
}

fn panel<DB: DrawingBackend>(
    area: &DrawingArea<DB, plotters::coord::Shift>,
    title: &str,
    x_desc: &str,
    y_desc: &str,
    series: &[Series],
) -> Result<()> {
    let (xr, yr) = bounds(series);
    let mut chart = ChartBuilder::on(area)
        .caption(title, ("sans-serif", 16))
        .margin(8)
        .x_label_area_size(32)
        .y_label_area_size(60)
        .build_cartesian_2d(xr, yr)
        .map_err(draw_err)?;
    chart.configure_mesh().x_desc(x_desc).y_desc(y_desc).light_line_style(WHITE).draw().map_err(draw_err)?;
    for s in series {
        let color = *s.color;
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color))
            .map_err(draw_err)?
            .label(s.label.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], color));
    }
    chart.configure_series_labels().background_style(WHITE.mix(0.8)).border_style(BLACK).draw().map_err(draw_err)?;
    Ok(())
}

/// Most points drawn per trace series; longer traces are strided.
const MAX_POINTS: usize = 2000;

fn trace_series<'a>(t: &[f64], x: &[f64], label: &str, color: &'a RGBColor) -> Series<'a> {
    let stride = t.len().div_ceil(MAX_POINTS).max(1);
    let points = t.iter().copied().zip(x.iter().copied()).step_by(stride).collect();
    Series { label: label.into(), points, color }
}

/// Line currents, source and module powers, and dc-link voltages.
pub fn run_chart(tr: &TraceSet) -> Result<String> {
    let mut buf = String::new();
    {
        let root = SVGBackend::with_string(&mut buf, (1000, 1000)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let areas = root.split_evenly((3, 1));
        let t = &tr.t;
        let names = ["a", "b", "c"];
        let currents: Vec<Series> =
            (0..3).map(|p| trace_series(t, &tr.phases[p].i_line, &format!("i_{}", names[p]), &COLORS[p])).collect();
        panel(&areas[0], "line currents", "t [s]", "A", &currents)?;
        let powers = vec![
            trace_series(t, &tr.p_source, "p_src", &COLORS[0]),
            trace_series(t, &tr.q_source, "q_src", &COLORS[1]),
            trace_series(t, &tr.p_module, "p_mod", &COLORS[2]),
            trace_series(t, &tr.q_module, "q_mod", &COLORS[3]),
        ];
        panel(&areas[1], "powers", "t [s]", "W, var", &powers)?;
        let dc: Vec<Series> = (0..3)
            .map(|p| trace_series(t, &tr.phases[p].v_dc_module, &format!("vdcm_{}", names[p]), &COLORS[p]))
            .collect();
        panel(&areas[2], "module dc links", "t [s]", "V", &dc)?;
        root.present().map_err(draw_err)?;
    }
    Ok(buf)
}

/// One panel per region boundary.
pub fn region_chart(regions: &[RegionBoundary]) -> Result<String> {
    let mut buf = String::new();
    {
        let n = regions.len().max(1);
        let root = SVGBackend::with_string(&mut buf, (700, 420 * n as u32)).into_drawing_area();
        root.fill(&WHITE).map_err(draw_err)?;
        let areas = root.split_evenly((n, 1));
        for (r, area) in regions.iter().zip(&areas) {
            let mut points = r.points.clone();
            if r.closed {
                if let Some(&p) = points.first() {
                    points.push(p);
                }
            }
            let kind = format!("{:?}", r.kind);
            let s = [Series { label: kind.clone(), points, color: &COLORS[2] }];
            panel(area, &kind, r.x_label, r.y_label, &s)?;
        }
        root.present().map_err(draw_err)?;
    }
    Ok(buf)
}
