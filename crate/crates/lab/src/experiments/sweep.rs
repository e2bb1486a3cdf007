//! Grids of deficit runs with matched-seed controls, executed on a worker pool.
//! Cell order, not completion order, fixes every output.

use std::path::Path;

use critfuse_core::deficitlab::{
    aggregate, critical_period_cells, depth_cells, run, summarize, CellRole, DeficitSchedule, RunConfig, RunRecord,
    SweepCell, SweepPoint, SweepRow,
};
use critfuse_core::rng::derive_seed;
use rayon::prelude::*;

use super::deficit::{summary_row, write_run, Placement, SUMMARY_HEADER};
use super::{save_csv, save_svg};
use crate::config::{SweepConfig, SweepVariable};
use crate::csv::{Cell, Table};
use crate::error::{LabError, Result};
use crate::svg::{chart, Chart, Series, Style};

pub struct SweepResult {
    pub cells: Vec<SweepCell>,
    pub records: Vec<RunRecord>,
    pub rows: Vec<SweepRow>,
    pub points: Vec<SweepPoint>,
}

/// Seeds of the replicates; every grid point of replicate `r` shares one seed
/// so that it has a matched control.
pub fn replicate_seeds(seed: u64, replicates: usize) -> Vec<u64> {
    (0..replicates as u64).map(|r| derive_seed(seed, r)).collect()
}

pub fn cells(base: &RunConfig, sweep: &SweepConfig, seed: u64) -> Result<Vec<SweepCell>> {
    if sweep.values.is_empty() {
        return Err(LabError::config("sweep.values must not be empty"));
    }
    if sweep.replicates == 0 {
        return Err(LabError::config("sweep.replicates must be positive"));
    }
    let seeds = replicate_seeds(seed, sweep.replicates);
    let built = match sweep.variable {
        SweepVariable::WindowLength | SweepVariable::WindowStart => {
            let windows: Vec<DeficitSchedule> = sweep
                .values
                .iter()
                .map(|v| DeficitSchedule {
                    kind: sweep.deficit,
                    window: sweep.window_for(*v),
                })
                .collect();
            let var = sweep.variable;
            critical_period_cells(base, &windows, &seeds, move |w| match var {
                SweepVariable::WindowStart => w.window.start() as f64,
                _ => w.window.len() as f64,
            })
        }
        SweepVariable::Depth => depth_cells(
            base,
            &sweep.values,
            DeficitSchedule {
                kind: sweep.deficit,
                window: sweep.window_for(0),
            },
            &seeds,
        ),
    };
    built.map_err(|e| LabError::config(format!("sweep: {e}")))
}

/// Runs every cell on `jobs` threads.
pub fn execute(base: &RunConfig, sweep: &SweepConfig, seed: u64, jobs: usize) -> Result<SweepResult> {
    base.validate().map_err(|e| LabError::config(format!("deficit: {e}")))?;
    let cells = cells(base, sweep, seed)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(LabError::compute)?;
    let records = pool.install(|| {
        cells
            .par_iter()
            .map(|c| run(&c.config))
            .collect::<std::result::Result<Vec<_>, _>>()
    });
    let records = records.map_err(LabError::compute)?;
    for (c, r) in cells.iter().zip(&records) {
        if let Some(e) = r.diverged_at {
            log::warn!("cell {} diverged at epoch {e}", c.index);
        }
    }
    let rows = summarize(&cells, &records).map_err(LabError::compute)?;
    let points = aggregate(&rows);
    Ok(SweepResult {
        cells,
        records,
        rows,
        points,
    })
}

fn cell_dir(sweep: &SweepConfig, cell: &SweepCell) -> String {
    let seed = cell.config.seed;
    match (cell.role, sweep.variable) {
        (CellRole::Control, SweepVariable::Depth) => format!("controls/depth-{}-seed-{seed}", cell.variable),
        (CellRole::Control, _) => format!("controls/seed-{seed}"),
        (CellRole::Deficit, v) => format!("runs/{}-{}-seed-{seed}", v.name(), cell.variable),
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn run_sweep(base: &RunConfig, sweep: &SweepConfig, seed: u64, jobs: usize, dir: &Path) -> Result<SweepResult> {
    let result = execute(base, sweep, seed, jobs)?;
    let mut agg = Table::new(&SUMMARY_HEADER);
    let mut controls = Table::new(&SUMMARY_HEADER);
    for ((cell, record), row) in result.cells.iter().zip(&result.records).zip(&result.rows) {
        let path = cell_dir(sweep, cell);
        let at = Placement {
            run: path.clone(),
            sweep_variable: sweep.variable.name().into(),
            variable: finite(cell.variable),
            group: cell.group,
            role: match cell.role {
                CellRole::Control => "control",
                CellRole::Deficit => "deficit",
            },
            control_accuracy: match cell.role {
                CellRole::Control => None,
                CellRole::Deficit => finite(row.control_accuracy),
            },
        };
        write_run(&dir.join(&path), record, &at)?;
        match cell.role {
            CellRole::Control => controls.push(summary_row(record, &at)),
            CellRole::Deficit => agg.push(summary_row(record, &at)),
        }
    }
    save_csv(dir, "aggregate.csv", &agg)?;
    save_csv(dir, "controls.csv", &controls)?;

    let mut points = Table::new(&[
        "sweep_variable",
        "variable",
        "group",
        "role",
        "runs",
        "mean_accuracy",
        "std_accuracy",
        "mean_delta",
        "std_delta",
        "mean_frac_polarized",
        "mean_abs_rsv",
    ]);
    for p in &result.points {
        points.push(vec![
            sweep.variable.name().into(),
            finite(p.variable).into(),
            p.group.into(),
            match p.role {
                CellRole::Control => "control",
                CellRole::Deficit => "deficit",
            }
            .into(),
            p.runs.into(),
            p.mean_accuracy.into(),
            p.std_accuracy.into(),
            p.mean_delta.into(),
            p.std_delta.into(),
            Cell::from(finite(p.mean_frac_polarized)),
            Cell::from(finite(p.mean_abs_rsv)),
        ]);
    }
    save_csv(dir, "points.csv", &points)?;

    let deficit_rows: Vec<&SweepRow> = result.rows.iter().filter(|r| r.role == CellRole::Deficit).collect();
    let deficit_points: Vec<&SweepPoint> = result.points.iter().filter(|p| p.role == CellRole::Deficit).collect();
    let control_mean = {
        let c: Vec<f64> = result
            .rows
            .iter()
            .filter(|r| r.role == CellRole::Control)
            .map(|r| r.final_accuracy)
            .collect();
        critfuse_core::stats::mean(&c)
    };
    let xs: Vec<f64> = deficit_points.iter().map(|p| p.variable).collect();
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    let mut mean = Series::new(
        "mean +- std",
        deficit_points.iter().map(|p| (p.variable, p.mean_accuracy)).collect(),
        Style::Solid,
        0,
    );
    mean.error = Some(deficit_points.iter().map(|p| p.std_accuracy).collect());
    let mut series = vec![
        Series::new(
            "per seed",
            deficit_rows.iter().map(|r| (r.variable, r.final_accuracy)).collect(),
            Style::Points,
            0,
        ),
        mean,
    ];
    if sweep.variable != SweepVariable::Depth && control_mean.is_finite() {
        series.push(Series::new("control", vec![(lo, control_mean), (hi, control_mean)], Style::Dashed, 1));
    }
    save_svg(
        dir,
        "accuracy.svg",
        chart(&Chart {
            title: "final test accuracy".into(),
            x_label: sweep.variable.name().into(),
            y_label: "accuracy".into(),
            series,
        }),
    )?;
    let pol: Vec<(f64, f64)> = deficit_rows
        .iter()
        .filter(|r| r.frac_polarized.is_finite())
        .map(|r| (r.variable, r.frac_polarized))
        .collect();
    let pol_mean: Vec<(f64, f64)> = deficit_points
        .iter()
        .filter(|p| p.mean_frac_polarized.is_finite())
        .map(|p| (p.variable, p.mean_frac_polarized))
        .collect();
    save_svg(
        dir,
        "polarization.svg",
        chart(&Chart {
            title: "fraction of polarized RSV values".into(),
            x_label: sweep.variable.name().into(),
            y_label: "frac polarized".into(),
            series: vec![
                Series::new("per seed", pol, Style::Points, 2),
                Series::new("mean", pol_mean, Style::Solid, 2),
            ],
        }),
    )?;
    Ok(result)
}
