use std::path::Path;

use plotters::prelude::*;

use crate::experiment::TrialRecord;
use crate::report::{CliError, CliResult};

fn plot_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: cannot write plot: {e}", path.display()))
}

/// Per-trial empirical values against the oracle and the theoretical bound,
/// trials ordered by their empirical value.
pub fn bound_vs_empirical(path: &Path, metric: &str, records: &[TrialRecord]) -> CliResult<()> {
    let mut rows: Vec<&TrialRecord> = records.iter().filter(|r| r.value.is_some()).collect();
    rows.sort_by(|a, b| a.value.unwrap().total_cmp(&b.value.unwrap()).then(a.trial.cmp(&b.trial)));
    let finite = |v: Option<f64>| v.filter(|x| x.is_finite());
    let top = rows
        .iter()
        .flat_map(|r| [finite(r.value), finite(r.oracle), finite(r.bound)])
        .flatten()
        .fold(1.0f64, f64::max);
    let n = rows.len().max(1);

    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(|e| plot_err(path, e))?;
    let mut chart = ChartBuilder::on(&root)
        .margin(20)
        .x_label_area_size(40)
        .y_label_area_size(60)
        .build_cartesian_2d(0f64..n as f64 + 1.0, 0f64..top * 1.1)
        .map_err(|e| plot_err(path, e))?;
    chart
        .configure_mesh()
        .x_desc("trial (sorted)")
        .y_desc(metric)
        .draw()
        .map_err(|e| plot_err(path, e))?;

    let series = |pick: fn(&TrialRecord) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter()
            .enumerate()
            .filter_map(|(i, r)| finite(pick(r)).map(|v| ((i + 1) as f64, v)))
            .collect()
    };
    let empirical = series(|r| r.value);
    let oracle = series(|r| r.oracle);
    let bound = series(|r| r.bound);
    chart
        .draw_series(empirical.iter().map(|&p| Circle::new(p, 3, BLUE.filled())))
        .map_err(|e| plot_err(path, e))?
        .label("empirical")
        .legend(|(x, y)| Circle::new((x + 10, y), 3, BLUE.filled()));
    if !oracle.is_empty() {
        chart
            .draw_series(oracle.iter().map(|&p| Cross::new(p, 4, RED)))
            .map_err(|e| plot_err(path, e))?
            .label("oracle")
            .legend(|(x, y)| Cross::new((x + 10, y), 4, RED));
    }
    if !bound.is_empty() {
        chart
            .draw_series(LineSeries::new(bound, BLACK))
            .map_err(|e| plot_err(path, e))?
            .label("bound")
            .legend(|(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], BLACK));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| plot_err(path, e))?;
    root.present().map_err(|e| plot_err(path, e))?;
    Ok(())
}
