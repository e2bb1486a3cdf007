//! Grids of runs (deficit windows, trunk depths) with matched-seed controls.
//!
//! Cells are independent; [`run_cells`] executes them in order, and callers
//! with threads can run them in any order and pass the records back to
//! [`summarize`] indexed by cell.

use alloc::vec::Vec;

use super::train::{run, DeficitSchedule, RunConfig, RunRecord};
use crate::error::{invalid, Result};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellRole {
    Control,
    Deficit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    /// Position in the grid; also the merge order.
    pub index: usize,
    /// Controls are matched within a group (e.g. one group per depth).
    pub group: usize,
    /// Sweep variable (window length, window start, depth...).
    pub variable: f64,
    pub role: CellRole,
    pub config: RunConfig,
}

fn with_seed(base: &RunConfig, seed: u64) -> RunConfig {
    let mut c = base.clone();
    c.seed = seed;
    c.task.seed = seed;
    c
}

/// One control per seed plus one run per (window, seed). The sweep variable is
/// `variable(window)`.
pub fn critical_period_cells(
    base: &RunConfig,
    windows: &[DeficitSchedule],
    seeds: &[u64],
    variable: impl Fn(&DeficitSchedule) -> f64,
) -> Result<Vec<SweepCell>> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "need at least one seed"));
    }
    let mut cells = Vec::new();
    for &seed in seeds {
        let mut c = with_seed(base, seed);
        c.schedule = DeficitSchedule::NONE;
        cells.push(SweepCell {
            index: cells.len(),
            group: 0,
            variable: f64::NAN,
            role: CellRole::Control,
            config: c,
        });
    }
    for w in windows {
        for &seed in seeds {
            let mut c = with_seed(base, seed);
            c.schedule = *w;
            c.validate()?;
            cells.push(SweepCell {
                index: cells.len(),
                group: 0,
                variable: variable(w),
                role: CellRole::Deficit,
                config: c,
            });
        }
    }
    Ok(cells)
}

/// For each trunk depth: a control and a deficit run per seed.
pub fn depth_cells(
    base: &RunConfig,
    depths: &[usize],
    deficit: DeficitSchedule,
    seeds: &[u64],
) -> Result<Vec<SweepCell>> {
    if seeds.is_empty() {
        return Err(invalid("seeds", "need at least one seed"));
    }
    if depths.iter().any(|d| *d == 0) {
        return Err(invalid("depths", "trunk depth must be >= 1"));
    }
    let mut cells = Vec::new();
    for (g, &depth) in depths.iter().enumerate() {
        for (role, schedule) in [
            (CellRole::Control, DeficitSchedule::NONE),
            (CellRole::Deficit, deficit),
        ] {
            for &seed in seeds {
                let mut c = with_seed(base, seed);
                c.net.trunk_blocks = depth;
                c.schedule = schedule;
                c.validate()?;
                cells.push(SweepCell {
                    index: cells.len(),
                    group: g,
                    variable: depth as f64,
                    role,
                    config: c,
                });
            }
        }
    }
    Ok(cells)
}

pub fn run_cells(cells: &[SweepCell]) -> Result<Vec<RunRecord>> {
    cells.iter().map(|c| run(&c.config)).collect()
}

/// One row per run, with the accuracy change against its matched control.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub index: usize,
    pub group: usize,
    pub variable: f64,
    pub role: CellRole,
    pub seed: u64,
    pub final_accuracy: f64,
    pub control_accuracy: f64,
    /// `final_accuracy - control_accuracy`.
    pub delta_accuracy: f64,
    pub mean_abs_rsv: f64,
    pub frac_polarized: f64,
    pub usable_a_only: f64,
    pub usable_b_only: f64,
}

pub fn summarize(cells: &[SweepCell], records: &[RunRecord]) -> Result<Vec<SweepRow>> {
    if cells.len() != records.len() {
        return Err(crate::Error::Length {
            what: "records",
            expected: cells.len(),
            actual: records.len(),
        });
    }
    let control = |group: usize, seed: u64| {
        cells
            .iter()
            .zip(records)
            .find(|(c, _)| c.role == CellRole::Control && c.group == group && c.config.seed == seed)
            .map(|(_, r)| r.final_test_accuracy())
    };
    Ok(cells
        .iter()
        .zip(records)
        .map(|(c, r)| {
            let acc = r.final_test_accuracy();
            let ctrl = control(c.group, c.config.seed).unwrap_or(f64::NAN);
            let (mean_abs, frac) = r.rsv.as_ref().map_or((f64::NAN, f64::NAN), |s| {
                (s.polarization.mean_abs, s.polarization.frac_polarized)
            });
            let (ua, ub) = r
                .usable
                .map_or((f64::NAN, f64::NAN), |u| (u.a_only, u.b_only));
            SweepRow {
                index: c.index,
                group: c.group,
                variable: c.variable,
                role: c.role,
                seed: c.config.seed,
                final_accuracy: acc,
                control_accuracy: ctrl,
                delta_accuracy: acc - ctrl,
                mean_abs_rsv: mean_abs,
                frac_polarized: frac,
                usable_a_only: ua,
                usable_b_only: ub,
            }
        })
        .collect())
}

/// Seed average of one (group, role, variable) point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub group: usize,
    pub variable: f64,
    pub role: CellRole,
    pub runs: usize,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub mean_delta: f64,
    pub std_delta: f64,
    pub mean_frac_polarized: f64,
    pub mean_abs_rsv: f64,
}

/// Groups rows by (group, role, variable) in first-appearance order.
pub fn aggregate(rows: &[SweepRow]) -> Vec<SweepPoint> {
    let same = |a: &SweepRow, b: &SweepRow| {
        a.group == b.group
            && a.role == b.role
            && (a.variable == b.variable || (a.variable.is_nan() && b.variable.is_nan()))
    };
    let mut points = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        if seen.iter().any(|&j| same(&rows[j], row)) {
            continue;
        }
        seen.push(i);
        let members: Vec<&SweepRow> = rows.iter().filter(|r| same(r, row)).collect();
        let col = |f: fn(&SweepRow) -> f64| members.iter().map(|r| f(r)).collect::<Vec<f64>>();
        let acc = col(|r| r.final_accuracy);
        let delta = col(|r| r.delta_accuracy);
        points.push(SweepPoint {
            group: row.group,
            variable: row.variable,
            role: row.role,
            runs: members.len(),
            mean_accuracy: stats::mean(&acc),
            std_accuracy: stats::sample_std(&acc),
            mean_delta: stats::mean(&delta),
            std_delta: stats::sample_std(&delta),
            mean_frac_polarized: stats::mean(&col(|r| r.frac_polarized)),
            mean_abs_rsv: stats::mean(&col(|r| r.mean_abs_rsv)),
        });
    }
    points
}
