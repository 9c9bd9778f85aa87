//! BER-versus-SNR plots as SVG.

use std::path::Path;

use plotters::prelude::*;

use super::sweep::PointResult;
use crate::{Error, Result};

/// One curve: `(snr_db, ber)` pairs in plotting order.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

/// One series per scheme, in order of first appearance.
pub fn series_from_results(results: &[PointResult]) -> Vec<Series> {
    let mut out: Vec<Series> = Vec::new();
    for r in results {
        let idx = match out.iter().position(|s| s.label == r.scheme) {
            Some(i) => i,
            None => {
                out.push(Series {
                    label: r.scheme.clone(),
                    points: Vec::new(),
                });
                out.len() - 1
            }
        };
        out[idx].points.push((r.snr_db, r.ber));
    }
    out
}

const COLORS: [RGBColor; 6] = [
    RGBColor(0, 90, 181),
    RGBColor(220, 50, 32),
    RGBColor(0, 150, 80),
    RGBColor(150, 80, 200),
    RGBColor(230, 140, 0),
    RGBColor(60, 60, 60),
];

/// Log-scale BER against SNR with a legend. Zero-BER points are left out
/// because they have no place on a log axis.
pub fn emit_plot(series: &[Series], path: impl AsRef<Path>, title: &str) -> Result<()> {
    let path = path.as_ref();
    let plotted: Vec<Series> = series
        .iter()
        .map(|s| Series {
            label: s.label.clone(),
            points: s.points.iter().copied().filter(|&(x, y)| x.is_finite() && y > 0.0).collect(),
        })
        .collect();
    if plotted.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Plot("nothing to plot: no series with a nonzero BER".into()));
    }
    let all = plotted.iter().flat_map(|s| &s.points);
    let (mut x0, mut x1) = all.clone().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if x1 - x0 < 1.0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    let y_min = all.map(|p| p.1).fold(1.0, f64::min);
    let y0 = 10f64.powf(y_min.log10().floor());

    let to_plot_err = |e: &dyn std::fmt::Display| Error::Plot(e.to_string());
    let root = SVGBackend::new(path, (800, 560)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| to_plot_err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 22))
        .margin(16)
        .x_label_area_size(44)
        .y_label_area_size(64)
        .build_cartesian_2d(x0..x1, (y0..1.0).log_scale())
        .map_err(|e| to_plot_err(&e))?;
    chart
        .configure_mesh()
        .x_desc("SNR (dB)")
        .y_desc("BER")
        .y_label_formatter(&|v| format!("{v:.0e}"))
        .draw()
        .map_err(|e| to_plot_err(&e))?;
    for (i, s) in plotted.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        chart
            .draw_series(LineSeries::new(s.points.iter().copied(), color.stroke_width(2)))
            .map_err(|e| to_plot_err(&e))?
            .label(s.label.clone())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
        chart
            .draw_series(s.points.iter().map(|&p| Circle::new(p, 3, color.filled())))
            .map_err(|e| to_plot_err(&e))?;
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.9))
        .border_style(BLACK)
        .position(SeriesLabelPosition::LowerLeft)
        .draw()
        .map_err(|e| to_plot_err(&e))?;
    root.present().map_err(|e| to_plot_err(&e))?;
    Ok(())
}
