//! Collates finished deficit and sweep run directories into one comparison.

use std::path::{Path, PathBuf};

use critfuse_core::rsv::HISTOGRAM_BINS;
use critfuse_core::stats::{mean, sample_std};

use crate::csv::{parse_float, Table};
use crate::error::{LabError, Result};
use crate::experiments::deficit::SUMMARY_HEADER;
use crate::experiments::{save_csv, save_svg};
use crate::manifest::{RunManifest, Status};
use crate::svg::{chart, histogram, Bars, Chart, Series, Style};

/// One run as read back from a summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub source: PathBuf,
    pub run: String,
    pub sweep_variable: String,
    pub variable: Option<f64>,
    pub control: bool,
    pub seed: String,
    pub accuracy: f64,
    pub frac_polarized: Option<f64>,
    pub mean_abs_rsv: Option<f64>,
}

fn rows_from(table: &Table, source: &Path) -> Result<Vec<RunRow>> {
    if table.header != SUMMARY_HEADER {
        return Err(LabError::config(format!(
            "{}: unexpected summary columns",
            source.display()
        )));
    }
    (0..table.rows.len())
        .map(|i| {
            let f = |name: &str| table.get_f64(i, name);
            Ok(RunRow {
                source: source.to_path_buf(),
                run: table.get(i, "run").unwrap_or(".").to_string(),
                sweep_variable: table.get(i, "sweep_variable").unwrap_or("").to_string(),
                variable: f("variable"),
                control: table.get(i, "role") == Some("control"),
                seed: table.get(i, "seed").unwrap_or("").to_string(),
                accuracy: f("final_accuracy").ok_or_else(|| {
                    LabError::config(format!("{}: row {} lacks final_accuracy", source.display(), i + 2))
                })?,
                frac_polarized: f("frac_polarized"),
                mean_abs_rsv: f("mean_abs_rsv"),
            })
        })
        .collect()
}

/// Reads every run of a finished deficit or sweep directory.
pub fn load_runs(dir: &Path) -> Result<Vec<RunRow>> {
    let manifest = RunManifest::read(dir)?;
    if manifest.status != Status::Ok {
        return Err(LabError::config(format!("{}: run did not complete", dir.display())));
    }
    match manifest.kind.as_str() {
        "deficit" => rows_from(&Table::read(&dir.join("summary.csv"))?, dir),
        "sweep" => {
            let mut rows = rows_from(&Table::read(&dir.join("controls.csv"))?, dir)?;
            rows.extend(rows_from(&Table::read(&dir.join("aggregate.csv"))?, dir)?);
            Ok(rows)
        }
        other => Err(LabError::config(format!(
            "{}: cannot report on a `{other}` run",
            dir.display()
        ))),
    }
}

/// Seed statistics at one value of the sweep variable.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub variable: Option<f64>,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub control_runs: usize,
    pub mean_control_accuracy: Option<f64>,
    pub delta_vs_control: Option<f64>,
    pub mean_frac_polarized: Option<f64>,
    pub std_frac_polarized: Option<f64>,
    pub mean_abs_rsv: Option<f64>,
}

fn stats_of(xs: &[f64]) -> (Option<f64>, Option<f64>) {
    if xs.is_empty() {
        (None, None)
    } else {
        (Some(mean(xs)), Some(sample_std(xs)))
    }
}

/// Groups deficit runs by variable (ascending). Controls that carry a
/// variable (depth sweeps) are matched on it; otherwise every control counts.
/// With no deficit runs at all, the controls are summarized on their own.
pub fn compare(rows: &[RunRow]) -> Result<(String, Vec<ComparisonRow>)> {
    let deficits: Vec<&RunRow> = rows.iter().filter(|r| !r.control).collect();
    let controls: Vec<&RunRow> = rows.iter().filter(|r| r.control).collect();
    let mut names: Vec<&str> = deficits.iter().map(|r| r.sweep_variable.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() > 1 {
        return Err(LabError::config(format!(
            "incompatible sweep variables: {}",
            names.join(", ")
        )));
    }
    let name = names.first().copied().unwrap_or("none").to_string();

    let mut values: Vec<Option<f64>> = Vec::new();
    for r in if deficits.is_empty() { &controls } else { &deficits } {
        if !values.contains(&r.variable) {
            values.push(r.variable);
        }
    }
    values.sort_by(|a, b| match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(y),
        _ => a.is_some().cmp(&b.is_some()),
    });

    let out = values
        .into_iter()
        .map(|v| {
            let members: Vec<&&RunRow> = if deficits.is_empty() {
                controls.iter().filter(|r| r.variable == v).collect()
            } else {
                deficits.iter().filter(|r| r.variable == v).collect()
            };
            let matched: Vec<f64> = if deficits.is_empty() {
                Vec::new()
            } else {
                let keyed: Vec<&&RunRow> = controls.iter().filter(|c| c.variable.is_some() && c.variable == v).collect();
                if keyed.is_empty() {
                    controls.iter().filter(|c| c.variable.is_none()).map(|c| c.accuracy).collect()
                } else {
                    keyed.iter().map(|c| c.accuracy).collect()
                }
            };
            let acc: Vec<f64> = members.iter().map(|r| r.accuracy).collect();
            let pol: Vec<f64> = members.iter().filter_map(|r| r.frac_polarized).collect();
            let abs: Vec<f64> = members.iter().filter_map(|r| r.mean_abs_rsv).collect();
            let mean_acc = mean(&acc);
            let ctrl = stats_of(&matched).0;
            let (pm, ps) = stats_of(&pol);
            ComparisonRow {
                variable: v,
                runs: acc.len(),
                mean_accuracy: mean_acc,
                std_accuracy: sample_std(&acc),
                control_runs: matched.len(),
                mean_control_accuracy: ctrl,
                delta_vs_control: ctrl.map(|c| mean_acc - c),
                mean_frac_polarized: pm,
                std_frac_polarized: ps,
                mean_abs_rsv: stats_of(&abs).0,
            }
        })
        .collect();
    Ok((name, out))
}

pub const COMPARISON_HEADER: [&str; 11] = [
    "sweep_variable",
    "variable",
    "runs",
    "mean_accuracy",
    "std_accuracy",
    "control_runs",
    "mean_control_accuracy",
    "delta_vs_control",
    "mean_frac_polarized",
    "std_frac_polarized",
    "mean_abs_rsv",
];

fn run_histogram(row: &RunRow) -> Option<Vec<f64>> {
    let t = Table::read(&row.source.join(&row.run).join("rsv.csv")).ok()?;
    let counts: Vec<f64> = (0..t.rows.len()).filter_map(|i| t.get_f64(i, "count")).collect();
    (counts.len() == HISTOGRAM_BINS).then_some(counts)
}

pub fn report(dirs: &[PathBuf], out: &Path) -> Result<()> {
    if dirs.is_empty() {
        return Err(LabError::config("report needs at least one run directory"));
    }
    let mut rows = Vec::new();
    for d in dirs {
        rows.extend(load_runs(d)?);
    }
    let (name, comparison) = compare(&rows)?;

    let mut runs = Table::new(&["source", "run", "sweep_variable", "variable", "role", "seed", "final_accuracy", "frac_polarized", "mean_abs_rsv"]);
    for r in &rows {
        runs.push(vec![
            r.source.display().to_string().into(),
            r.run.as_str().into(),
            r.sweep_variable.as_str().into(),
            r.variable.into(),
            if r.control { "control" } else { "deficit" }.into(),
            r.seed.as_str().into(),
            r.accuracy.into(),
            r.frac_polarized.into(),
            r.mean_abs_rsv.into(),
        ]);
    }
    save_csv(out, "runs.csv", &runs)?;

    let mut table = Table::new(&COMPARISON_HEADER);
    for c in &comparison {
        table.push(vec![
            name.as_str().into(),
            c.variable.into(),
            c.runs.into(),
            c.mean_accuracy.into(),
            c.std_accuracy.into(),
            c.control_runs.into(),
            c.mean_control_accuracy.into(),
            c.delta_vs_control.into(),
            c.mean_frac_polarized.into(),
            c.std_frac_polarized.into(),
            c.mean_abs_rsv.into(),
        ]);
    }
    save_csv(out, "comparison.csv", &table)?;

    let plotted: Vec<&ComparisonRow> = comparison.iter().filter(|c| c.variable.is_some()).collect();
    let deficit_rows: Vec<&RunRow> = rows.iter().filter(|r| !r.control && r.variable.is_some()).collect();
    let curve = |title: &str, y: &str, per_run: Vec<(f64, f64)>, mean_pts: Vec<(f64, f64)>, err: Vec<f64>, ctrl: Option<Vec<(f64, f64)>>| {
        let mut m = Series::new("mean +- std", mean_pts, Style::Solid, 0);
        m.error = Some(err);
        let mut series = vec![Series::new("per seed", per_run, Style::Points, 0), m];
        if let Some(c) = ctrl {
            series.push(Series::new("control", c, Style::Dashed, 1));
        }
        chart(&Chart {
            title: title.into(),
            x_label: name.clone(),
            y_label: y.into(),
            series,
        })
    };
    save_svg(
        out,
        "accuracy.svg",
        curve(
            "final test accuracy",
            "accuracy",
            deficit_rows.iter().map(|r| (r.variable.unwrap_or(0.0), r.accuracy)).collect(),
            plotted.iter().map(|c| (c.variable.unwrap_or(0.0), c.mean_accuracy)).collect(),
            plotted.iter().map(|c| c.std_accuracy).collect(),
            Some(
                plotted
                    .iter()
                    .filter_map(|c| Some((c.variable?, c.mean_control_accuracy?)))
                    .collect(),
            ),
        ),
    )?;
    let with_pol: Vec<&&ComparisonRow> = plotted.iter().filter(|c| c.mean_frac_polarized.is_some()).collect();
    save_svg(
        out,
        "polarization.svg",
        curve(
            "fraction of polarized RSV values",
            "frac polarized",
            deficit_rows
                .iter()
                .filter_map(|r| Some((r.variable?, r.frac_polarized?)))
                .collect(),
            with_pol
                .iter()
                .filter_map(|c| Some((c.variable?, c.mean_frac_polarized?)))
                .collect(),
            with_pol.iter().map(|c| c.std_frac_polarized.unwrap_or(0.0)).collect(),
            None,
        ),
    )?;

    let edges: Vec<f64> = {
        let w = 2.0 / (HISTOGRAM_BINS as f64 - 1.0);
        (0..=HISTOGRAM_BINS).map(|i| -1.0 - w / 2.0 + w * i as f64).collect()
    };
    let mut layers = Vec::new();
    for (i, c) in comparison.iter().enumerate() {
        let mut total = vec![0.0; HISTOGRAM_BINS];
        for r in rows.iter().filter(|r| r.variable == c.variable && (!r.control || deficit_rows.is_empty())) {
            if let Some(h) = run_histogram(r) {
                total.iter_mut().zip(h).for_each(|(t, x)| *t += x);
            }
        }
        let sum: f64 = total.iter().sum();
        if sum > 0.0 {
            let label = c.variable.map_or_else(|| "control".to_string(), |v| format!("{name} {v}"));
            layers.push(Bars {
                label,
                edges: edges.clone(),
                heights: total.iter().map(|t| t / sum).collect(),
                color: i,
            });
        }
    }
    if !layers.is_empty() {
        save_svg(out, "histograms.svg", histogram("RSV histograms", "RSV", "fraction of values", &layers))?;
    }
    Ok(())
}

/// Column `name` of a comparison table as floats (empty cells are `None`).
pub fn column(table: &Table, name: &str) -> Vec<Option<f64>> {
    let Some(c) = table.column(name) else {
        return Vec::new();
    };
    table.rows.iter().map(|r| parse_float(&r[c])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(variable: Option<f64>, control: bool, acc: f64, name: &str) -> RunRow {
        RunRow {
            source: PathBuf::from("x"),
            run: ".".into(),
            sweep_variable: name.into(),
            variable,
            control,
            seed: "0".into(),
            accuracy: acc,
            frac_polarized: Some(acc / 2.0),
            mean_abs_rsv: None,
        }
    }

    #[test]
    fn groups_and_subtracts_controls() {
        let rows = vec![
            row(None, true, 0.9, "none"),
            row(None, true, 0.8, "none"),
            row(Some(10.0), false, 0.5, "window-length"),
            row(Some(5.0), false, 0.7, "window-length"),
            row(Some(10.0), false, 0.3, "window-length"),
        ];
        let (name, cmp) = compare(&rows).unwrap();
        assert_eq!(name, "window-length");
        assert_eq!(cmp[0].variable, Some(5.0));
        assert_eq!(cmp[1].runs, 2);
        assert!((cmp[1].mean_accuracy - 0.4).abs() < 1e-15);
        assert!((cmp[1].delta_vs_control.unwrap() - (0.4 - 0.85)).abs() < 1e-15);
        assert!(cmp[1].std_accuracy > 0.0);
        assert_eq!(cmp[0].std_accuracy, 0.0);
    }

    #[test]
    fn depth_controls_match_by_value() {
        let rows = vec![
            row(Some(1.0), true, 0.9, "depth"),
            row(Some(2.0), true, 0.6, "depth"),
            row(Some(1.0), false, 0.5, "depth"),
            row(Some(2.0), false, 0.5, "depth"),
        ];
        let (_, cmp) = compare(&rows).unwrap();
        assert!((cmp[0].delta_vs_control.unwrap() + 0.4).abs() < 1e-15);
        assert!((cmp[1].delta_vs_control.unwrap() + 0.1).abs() < 1e-15);
    }

    #[test]
    fn mixed_variables_are_rejected() {
        let rows = vec![
            row(Some(1.0), false, 0.5, "depth"),
            row(Some(10.0), false, 0.5, "window-length"),
        ];
        assert!(matches!(compare(&rows), Err(LabError::Config(_))));
    }

    #[test]
    fn controls_alone_pass_through() {
        let (name, cmp) = compare(&[row(None, true, 0.9, "none")]).unwrap();
        assert_eq!(name, "none");
        assert_eq!(cmp.len(), 1);
        assert_eq!(cmp[0].mean_accuracy, 0.9);
        assert_eq!(cmp[0].delta_vs_control, None);
    }
}
