//! Writes every figure (SVG) and its underlying data (CSV) for one comparison.

use std::path::Path;

use fracgen_core::report::{boxplot_csv, build_boxplot, build_histogram, build_scatter, render_svg, Figure, Style};
use fracgen_core::{DiscontinuitySet, Parameter};

use crate::error::CliError;

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

/// Histogram+KDE and boxplot per parameter plus the dip scatter. Returns the
/// file names written, in order.
pub fn write_figures(
    dir: &Path,
    observed: &DiscontinuitySet,
    generated: Option<&DiscontinuitySet>,
    bins: usize,
) -> Result<Vec<String>, CliError> {
    let style = Style {
        generated_label: generated.map_or_else(|| Style::default().generated_label, |g| g.name.clone()),
        ..Style::default()
    };
    let mut written = Vec::new();
    let mut emit = |name: String, contents: String| -> Result<(), CliError> {
        write(dir, &name, &contents)?;
        written.push(name);
        Ok(())
    };
    for p in Parameter::ALL {
        let h = build_histogram(observed, generated, p, bins).map_err(CliError::runtime)?;
        emit(format!("hist_{p}.svg"), render_svg(&Figure::Histogram(&h), &style))?;
        emit(format!("hist_{p}_counts.csv"), h.counts_csv())?;
        emit(format!("hist_{p}_kde.csv"), h.kde_csv())?;

        let sets: Vec<&DiscontinuitySet> = std::iter::once(observed).chain(generated).collect();
        let stats = build_boxplot(&sets, p).map_err(CliError::runtime)?;
        emit(format!("boxplot_{p}.svg"), render_svg(&Figure::Boxplot { parameter: p, stats: &stats }, &style))?;
        emit(format!("boxplot_{p}.csv"), boxplot_csv(&stats))?;
    }
    let s = build_scatter(observed, generated);
    emit("scatter.svg".into(), render_svg(&Figure::Scatter(&s), &style))?;
    emit("scatter.csv".into(), s.to_csv())?;
    Ok(written)
}
