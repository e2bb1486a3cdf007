//! Gradient descent on a deep linear chain, optionally after an initial
//! deficit phase, with the clean run from the same initialisation alongside.

use std::path::Path;

use critfuse_core::gradsim::{init_chain, onset_times, simulate, Init, PhaseSchedule, SimConfig, SimTrajectory};
use critfuse_core::lindyn::{decompose, mode_strength, CrossCorrelation};

use super::{save_csv, save_svg};
use crate::config::GradsimConfig;
use crate::csv::{Cell, Table};
use crate::error::{LabError, Result};
use crate::svg::{chart, Chart, Series, Style};

pub struct GradsimOutput {
    pub sigma: CrossCorrelation,
    /// `(variant, trajectory)`; `clean` first.
    pub runs: Vec<(&'static str, SimTrajectory)>,
}

pub fn simulate_all(config: &GradsimConfig, seed: u64, base: &Path) -> Result<GradsimOutput> {
    let (clean, deficit) = config.targets(base)?;
    if config.steps == 0 {
        return Err(LabError::config("gradsim.steps must be positive"));
    }
    if config.deficit_steps > config.steps {
        return Err(LabError::config("gradsim.deficit_steps exceeds gradsim.steps"));
    }
    let eta = match config.eta_normalized {
        Some(e) => SimConfig::normalized_eta(e, &clean).map_err(LabError::compute)?,
        None => config.eta,
    };
    let sim = SimConfig {
        eta,
        record_stride: config.record_stride,
        init: config.init.clone(),
    };
    sim.validate().map_err(|e| LabError::config(format!("gradsim: {e}")))?;
    let chain = init_chain(&clean, config.hidden_width, config.depth, &config.init, seed)
        .map_err(|e| LabError::config(format!("gradsim: {e}")))?;

    let mut schedules = vec![(
        "clean",
        PhaseSchedule::constant(clean.clone(), config.steps).map_err(LabError::compute)?,
    )];
    if let Some(d) = deficit {
        let s = PhaseSchedule::with_initial_deficit(d, clean.clone(), config.deficit_steps, config.steps)
            .map_err(|e| LabError::config(format!("gradsim: {e}")))?;
        schedules.push(("deficit", s));
    }
    let mut runs = Vec::new();
    for (name, schedule) in schedules {
        let mut c = chain.clone();
        let traj = simulate(&mut c, &schedule, &sim)
            .map_err(|d| LabError::compute(format!("{name} run diverged at step {}", d.step)))?;
        for w in &traj.warnings {
            log::warn!("{name}: {w}");
        }
        runs.push((name, traj));
    }
    Ok(GradsimOutput { sigma: clean, runs })
}

pub fn run(config: &GradsimConfig, seed: u64, base: &Path, dir: &Path) -> Result<()> {
    let out = simulate_all(config, seed, base)?;
    let modes = decompose(&out.sigma).map_err(LabError::compute)?;
    let closed_a0 = match &config.init {
        Init::Spectral { a0 } if config.depth == 2 => Some(a0.clone()),
        _ => None,
    };

    let mut traj = Table::new(&["variant", "step", "time", "source_index", "weight_norm"]);
    let mut loss = Table::new(&["variant", "step", "time", "loss"]);
    let mut mode_tab = Table::new(&["variant", "step", "time", "mode", "strength", "closed_form"]);
    let mut onsets = Table::new(&["variant", "source_index", "onset_step"]);
    let mut series = Vec::new();
    for (v, (name, t)) in out.runs.iter().enumerate() {
        let times = t.times();
        for s in t.source_trajectories() {
            for (i, w) in s.weight_norm.iter().enumerate() {
                traj.push(vec![
                    (*name).into(),
                    t.steps[i].into(),
                    Cell::F(times[i]),
                    s.source_index.into(),
                    Cell::F(*w),
                ]);
            }
            let pts = times.iter().copied().zip(s.weight_norm.iter().copied()).collect();
            let style = if v == 0 { Style::Solid } else { Style::Dashed };
            series.push(Series::new(format!("{name} source {}", s.source_index), pts, style, s.source_index));
        }
        for (i, l) in t.losses.iter().enumerate() {
            loss.push(vec![(*name).into(), t.steps[i].into(), Cell::F(times[i]), Cell::F(*l)]);
        }
        for (i, p) in t.products.iter().enumerate() {
            for (m, strength) in modes.project(p).into_iter().enumerate() {
                let closed = match (&closed_a0, v) {
                    (Some(a0), 0) => a0
                        .get(m)
                        .map(|a| mode_strength(modes.singular_values[m], *a, 1.0, times[i]))
                        .transpose()
                        .map_err(LabError::compute)?,
                    _ => None,
                };
                mode_tab.push(vec![
                    (*name).into(),
                    t.steps[i].into(),
                    Cell::F(times[i]),
                    m.into(),
                    Cell::F(strength),
                    closed.into(),
                ]);
            }
        }
        for (k, o) in onset_times(t, 0.5).into_iter().enumerate() {
            let cell = o.map_or_else(|| Cell::S(String::new()), Cell::from);
            onsets.push(vec![(*name).into(), k.into(), cell]);
        }
    }
    save_csv(dir, "trajectories.csv", &traj)?;
    save_csv(dir, "loss.csv", &loss)?;
    save_csv(dir, "modes.csv", &mode_tab)?;
    save_csv(dir, "onsets.csv", &onsets)?;
    save_svg(
        dir,
        "trajectories.svg",
        chart(&Chart {
            title: "per-source weight norm (dashed: after deficit)".into(),
            x_label: "time (eta x step)".into(),
            y_label: "weight norm".into(),
            series,
        }),
    )
}
