//! Log-scale rate plots of `f(x_k) - f_*` and `r_k`.

use std::path::Path;

use bfgs_core::DiagnosticsRecord;
use plotters::prelude::*;

fn positive_series(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> Option<f64>) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| f(r).filter(|v| *v > 0.0 && v.is_finite()).map(|v| (r.k as f64, v)))
        .collect()
}

pub fn rate_plot(path: &Path, title: &str, records: &[DiagnosticsRecord]) -> Result<(), Box<dyn std::error::Error>> {
    let f_res = positive_series(records, |r| Some(r.f_res));
    let r = positive_series(records, |r| r.r);
    let all: Vec<f64> = f_res.iter().chain(r.iter()).map(|p| p.1).collect();
    if all.is_empty() {
        return Err("nothing positive to plot".into());
    }
    let lo = all.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = all.iter().copied().fold(0.0, f64::max);
    let k_max = records.last().map(|r| r.k).unwrap_or(0).max(1) as f64;

    let root = SVGBackend::new(path, (800, 500)).into_drawing_area();
    root.fill(&WHITE)?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 18))
        .margin(12)
        .x_label_area_size(36)
        .y_label_area_size(72)
        .build_cartesian_2d(0.0..k_max, (lo * 0.5..hi * 2.0).log_scale())?;
    chart.configure_mesh().x_desc("k").y_label_formatter(&|v| format!("{v:.0e}")).draw()?;
    chart
        .draw_series(LineSeries::new(f_res, &BLUE))?
        .label("f(x_k) - f*")
        .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], BLUE));
    if !r.is_empty() {
        chart
            .draw_series(LineSeries::new(r, &RED))?
            .label("r_k")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 16, y)], RED));
    }
    chart.configure_series_labels().border_style(BLACK).background_style(WHITE).draw()?;
    root.present()?;
    Ok(())
}
