//! Closed-form weight trajectories for the full and the source-dropped target,
//! shallow and deep.

use std::path::Path;

use critfuse_core::lindyn::{compare_counterfactual, CounterfactualReport, DynamicsParams, Model};

use super::{save_csv, save_svg};
use crate::config::LindynConfig;
use crate::csv::{Cell, Table};
use crate::error::{LabError, Result};
use crate::svg::{chart, Chart, Series, Style};

pub fn reports(config: &LindynConfig, base: &Path) -> Result<Vec<CounterfactualReport>> {
    let sigma = config.sigma.load("lindyn.sigma", base)?;
    if config.drop_source >= sigma.n_inputs() {
        return Err(LabError::config(format!(
            "lindyn.drop_source: {} out of range for {} inputs",
            config.drop_source,
            sigma.n_inputs()
        )));
    }
    let modes = sigma.n_outputs().min(sigma.n_inputs());
    let params = DynamicsParams::uniform(
        modes,
        config.a0,
        config.tau,
        DynamicsParams::linear_grid(config.t_max, config.points),
    );
    params
        .validate()
        .map_err(|e| LabError::config(format!("lindyn: {e}")))?;
    [Model::Shallow, Model::Deep]
        .into_iter()
        .map(|m| compare_counterfactual(&sigma, config.drop_source, &params, m).map_err(LabError::compute))
        .collect()
}

fn model_name(m: Model) -> &'static str {
    match m {
        Model::Shallow => "shallow",
        Model::Deep => "deep",
    }
}

pub fn run(config: &LindynConfig, base: &Path, dir: &Path) -> Result<()> {
    let reports = reports(config, base)?;
    let mut traj = Table::new(&["model", "variant", "source_index", "time", "weight_norm"]);
    let mut cmp = Table::new(&[
        "model",
        "source_index",
        "max_abs_diff",
        "onset_full",
        "onset_dropped",
        "onset_delta",
    ]);
    for r in &reports {
        let model = model_name(r.model);
        for (variant, set) in [("full", &r.full), ("dropped", &r.dropped)] {
            for s in set {
                if variant == "dropped" && s.source_index == r.dropped_source {
                    continue;
                }
                for (t, w) in s.times.iter().zip(&s.weight_norm) {
                    traj.push(vec![
                        model.into(),
                        variant.into(),
                        s.source_index.into(),
                        Cell::F(*t),
                        Cell::F(*w),
                    ]);
                }
            }
        }
        for c in &r.surviving {
            cmp.push(vec![
                model.into(),
                c.source_index.into(),
                c.max_abs_diff.into(),
                c.onset_full.into(),
                c.onset_dropped.into(),
                c.onset_delta().into(),
            ]);
        }
        let mut series = Vec::new();
        for s in &r.full {
            let pts = s.times.iter().copied().zip(s.weight_norm.iter().copied()).collect();
            series.push(Series::new(format!("source {}", s.source_index), pts, Style::Solid, s.source_index));
        }
        for s in r.dropped.iter().filter(|s| s.source_index != r.dropped_source) {
            let pts = s.times.iter().copied().zip(s.weight_norm.iter().copied()).collect();
            series.push(Series::new(
                format!("source {} (dropped {})", s.source_index, r.dropped_source),
                pts,
                Style::Dashed,
                s.source_index,
            ));
        }
        let svg = chart(&Chart {
            title: format!("{model} network, source {} removed (dashed)", r.dropped_source),
            x_label: "time".into(),
            y_label: "weight norm".into(),
            series,
        });
        save_svg(dir, &format!("{model}.svg"), svg)?;
    }
    save_csv(dir, "trajectories.csv", &traj)?;
    save_csv(dir, "comparison.csv", &cmp)
}
