//! A single two-pathway training run and the per-run files shared with sweeps.

use std::path::Path;

use critfuse_core::deficitlab::{generate_task, train, DeficitKind, RunConfig, RunRecord, TaskData, Window};
use critfuse_core::rsv::ActivationDump;

use super::rsv_sim::dump_table;
use super::{save_csv, save_svg};
use crate::csv::{Cell, Table};
use crate::error::{LabError, Result};
use crate::svg::{chart, histogram, Bars, Chart, Series, Style};

/// Columns of `summary.csv` and of a sweep's `aggregate.csv`.
pub const SUMMARY_HEADER: [&str; 16] = [
    "run",
    "sweep_variable",
    "variable",
    "group",
    "role",
    "seed",
    "final_accuracy",
    "control_accuracy",
    "delta_accuracy",
    "mean_abs_rsv",
    "frac_polarized",
    "dead_fraction",
    "usable_both",
    "usable_a_only",
    "usable_b_only",
    "diverged_at",
];

/// Where a run sits in a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct Placement {
    pub run: String,
    pub sweep_variable: String,
    pub variable: Option<f64>,
    pub group: usize,
    pub role: &'static str,
    pub control_accuracy: Option<f64>,
}

impl Placement {
    /// A standalone run is described by its own window.
    pub fn standalone(config: &RunConfig) -> Placement {
        let (name, variable) = match (config.schedule.kind, config.schedule.window) {
            (DeficitKind::None, _) => ("none", None),
            (_, w) if w.is_empty() => ("none", None),
            (_, Window::Initial { epochs }) => ("window-length", Some(epochs as f64)),
            (_, Window::Sliding { start, .. }) => ("window-start", Some(start as f64)),
        };
        Placement {
            run: ".".into(),
            sweep_variable: name.into(),
            variable,
            group: 0,
            role: if variable.is_some() { "deficit" } else { "control" },
            control_accuracy: None,
        }
    }
}

pub fn summary_row(record: &RunRecord, at: &Placement) -> Vec<Cell> {
    let acc = record.final_test_accuracy();
    let (mean_abs, frac, dead) = record.rsv.as_ref().map_or((None, None, None), |r| {
        (
            Some(r.polarization.mean_abs),
            Some(r.polarization.frac_polarized),
            Some(r.dead_fraction),
        )
    });
    let u = record.usable;
    vec![
        at.run.as_str().into(),
        at.sweep_variable.as_str().into(),
        at.variable.into(),
        at.group.into(),
        at.role.into(),
        record.seed.into(),
        acc.into(),
        at.control_accuracy.into(),
        at.control_accuracy.map(|c| acc - c).into(),
        mean_abs.into(),
        frac.into(),
        dead.into(),
        u.map(|u| u.both).into(),
        u.map(|u| u.a_only).into(),
        u.map(|u| u.b_only).into(),
        record.diverged_at.map_or_else(String::new, |e| e.to_string()).into(),
    ]
}

/// `metrics.csv`, `rsv.csv`, `units.csv`, `summary.csv` and the plots.
pub fn write_run(dir: &Path, record: &RunRecord, at: &Placement) -> Result<()> {
    let mut metrics = Table::new(&["epoch", "learning_rate", "deficit_active", "split", "loss", "accuracy"]);
    for e in &record.epochs {
        for (split, loss, acc) in [
            ("train", e.train_loss, e.train_accuracy),
            ("test", e.test_loss, e.test_accuracy),
        ] {
            metrics.push(vec![
                e.epoch.into(),
                e.learning_rate.into(),
                e.deficit_active.into(),
                split.into(),
                loss.into(),
                acc.into(),
            ]);
        }
    }
    save_csv(dir, "metrics.csv", &metrics)?;

    let mut summary = Table::new(&SUMMARY_HEADER);
    summary.push(summary_row(record, at));
    save_csv(dir, "summary.csv", &summary)?;

    let test: Vec<(f64, f64)> = record
        .epochs
        .iter()
        .map(|e| (e.epoch as f64, e.test_accuracy))
        .collect();
    let train: Vec<(f64, f64)> = record
        .epochs
        .iter()
        .map(|e| (e.epoch as f64, e.train_accuracy))
        .collect();
    let window = record.config.schedule.window;
    save_svg(
        dir,
        "accuracy.svg",
        chart(&Chart {
            title: format!("accuracy, deficit epochs [{}, {})", window.start(), window.end()),
            x_label: "epoch".into(),
            y_label: "accuracy".into(),
            series: vec![
                Series::new("test (fused)", test, Style::Solid, 0),
                Series::new("train", train, Style::Dashed, 1),
            ],
        }),
    )?;

    if let Some(rsv) = &record.rsv {
        let mut hist = Table::new(&["center", "count"]);
        for (c, n) in rsv.histogram.centers().iter().zip(&rsv.histogram.counts) {
            hist.push(vec![Cell::F(*c), (*n).into()]);
        }
        save_csv(dir, "rsv.csv", &hist)?;
        let mut units = Table::new(&["unit", "mean_rsv"]);
        for (i, m) in rsv.unit_means.iter().enumerate() {
            units.push(vec![i.into(), (*m).into()]);
        }
        save_csv(dir, "units.csv", &units)?;
        let total = rsv.histogram.total().max(1) as f64;
        save_svg(
            dir,
            "rsv_histogram.svg",
            histogram(
                "RSV of the fused representation",
                "RSV",
                "fraction of values",
                &[Bars {
                    label: "RSV".into(),
                    edges: rsv.histogram.edges.clone(),
                    heights: rsv.histogram.counts.iter().map(|c| *c as f64 / total).collect(),
                    color: 0,
                }],
            ),
        )?;
    }
    Ok(())
}

fn dataset_table(data: &TaskData) -> Table {
    let dim = data.spec.view_dim;
    let first = data.train.first().or(data.test.first());
    let bits = first.map_or(0, |s| s.provenance.bits.len());
    let signs = first.map_or(0, |s| s.provenance.synergy_signs.len());
    let mut header = vec!["split".to_string(), "index".into(), "label".into()];
    header.extend((0..bits).map(|i| format!("bit{i}")));
    header.extend((0..signs).map(|i| format!("synergy_sign{i}")));
    header.extend((0..dim).map(|i| format!("a{i}")));
    header.extend((0..dim).map(|i| format!("b{i}")));
    let mut t = Table::new(&header);
    for (split, samples) in [("train", &data.train), ("test", &data.test)] {
        for (i, s) in samples.iter().enumerate() {
            let mut row: Vec<Cell> = vec![split.into(), i.into(), s.label.into()];
            row.extend(s.provenance.bits.iter().map(|b| Cell::from(*b as usize)));
            row.extend(s.provenance.synergy_signs.iter().map(|x| Cell::S(x.to_string())));
            row.extend(s.view_a.iter().chain(&s.view_b).map(|x| Cell::F(*x)));
            t.push(row);
        }
    }
    t
}

pub fn run(config: &RunConfig, write_dataset: bool, write_activations: bool, dir: &Path) -> Result<RunRecord> {
    config
        .validate()
        .map_err(|e| LabError::config(format!("deficit: {e}")))?;
    let data = generate_task(&config.task).map_err(|e| LabError::config(format!("deficit.task: {e}")))?;
    let (net, record) = train(&data, config).map_err(LabError::compute)?;
    write_run(dir, &record, &Placement::standalone(config))?;
    if write_dataset {
        save_csv(dir, "dataset.csv", &dataset_table(&data))?;
    }
    if write_activations {
        let rsv = config.rsv.clone().unwrap_or_default();
        let a: Vec<&[f64]> = data.test.iter().map(|s| &s.view_a[..]).collect();
        let b: Vec<&[f64]> = data.test.iter().map(|s| &s.view_b[..]).collect();
        let dump = ActivationDump::record(&net, &a, &b, &rsv).map_err(LabError::compute)?;
        save_csv(dir, "activations.csv", &dump_table(&dump))?;
    }
    if let Some(epoch) = record.diverged_at {
        return Err(LabError::compute(format!("training diverged at epoch {epoch}")));
    }
    Ok(record)
}
