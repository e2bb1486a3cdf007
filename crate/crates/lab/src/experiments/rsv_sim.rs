//! RSV of the synthetic linear-Gaussian model, or of a recorded activation
//! dump.
//!
//! Activation dumps are CSV with header `varied,pair,draw,u0,u1,...`; `varied`
//! is `a` or `b` and every `(varied, pair, draw)` combination appears once.

use std::path::Path;

use critfuse_core::rsv::{
    polarization_index, rsv_from_activations, sample_synthetic_model, synthetic_closed_form_sv,
    ActivationDump, RsvDistribution, SyntheticRsvModel,
};

use super::{save_csv, save_svg};
use crate::config::RsvSimConfig;
use crate::csv::{Cell, Table};
use crate::error::{LabError, Result};
use crate::svg::{histogram, Bars};

pub fn model(config: &RsvSimConfig) -> SyntheticRsvModel {
    SyntheticRsvModel {
        alpha: config.alpha,
        beta: config.beta,
        sigma0: config.sigma0,
        sigma_a: config.sigma_a,
        sigma_b: config.sigma_b,
        unit_count: config.units,
        mixing: config.mixing,
    }
}

pub fn dump_table(dump: &ActivationDump) -> Table {
    let mut header = vec!["varied".to_string(), "pair".into(), "draw".into()];
    header.extend((0..dump.unit_count).map(|u| format!("u{u}")));
    let mut t = Table::new(&header);
    let (u, m) = (dump.unit_count, dump.variation_samples);
    for (name, data) in [("a", &dump.vary_a), ("b", &dump.vary_b)] {
        for j in 0..dump.fixed_samples {
            for d in 0..m {
                let start = (j * m + d) * u;
                let mut row: Vec<Cell> = vec![name.into(), j.into(), d.into()];
                row.extend(data[start..start + u].iter().map(|x| Cell::F(*x)));
                t.push(row);
            }
        }
    }
    t
}

pub fn parse_dump(t: &Table) -> Result<ActivationDump> {
    if t.header.len() < 4 || t.header[..3] != ["varied", "pair", "draw"] {
        return Err(LabError::config("activation dump: header must start with varied,pair,draw"));
    }
    let units = t.header.len() - 3;
    let mut entries = Vec::with_capacity(t.rows.len());
    let (mut k, mut m) = (0usize, 0usize);
    for (i, row) in t.rows.iter().enumerate() {
        let bad = || LabError::config(format!("activation dump: malformed row {}", i + 2));
        let side = match row[0].as_str() {
            "a" => 0,
            "b" => 1,
            _ => return Err(bad()),
        };
        let pair: usize = row[1].parse().map_err(|_| bad())?;
        let draw: usize = row[2].parse().map_err(|_| bad())?;
        let values = row[3..]
            .iter()
            .map(|s| s.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(bad)?;
        k = k.max(pair + 1);
        m = m.max(draw + 1);
        entries.push((side, pair, draw, values));
    }
    if entries.len() != 2 * k * m {
        return Err(LabError::config(format!(
            "activation dump: expected {} rows for {k} pairs x {m} draws, found {}",
            2 * k * m,
            entries.len()
        )));
    }
    let mut data = [vec![f64::NAN; k * m * units], vec![f64::NAN; k * m * units]];
    let mut seen = vec![false; 2 * k * m];
    for (side, pair, draw, values) in entries {
        let slot = (side * k + pair) * m + draw;
        if std::mem::replace(&mut seen[slot], true) {
            return Err(LabError::config(format!(
                "activation dump: duplicate row for pair {pair} draw {draw}"
            )));
        }
        let start = (pair * m + draw) * units;
        data[side][start..start + units].copy_from_slice(&values);
    }
    let [vary_a, vary_b] = data;
    let dump = ActivationDump {
        unit_count: units,
        fixed_samples: k,
        variation_samples: m,
        vary_a,
        vary_b,
    };
    dump.validate().map_err(|e| LabError::config(format!("activation dump: {e}")))?;
    Ok(dump)
}

pub fn distribution(config: &RsvSimConfig, base: &Path) -> Result<RsvDistribution> {
    config
        .rsv
        .validate()
        .map_err(|e| LabError::config(format!("rsv_sim.rsv: {e}")))?;
    if let Some(path) = &config.activations {
        let dump = parse_dump(&Table::read(&base.join(path))?)?;
        return rsv_from_activations(&dump, config.rsv.dead_unit_epsilon).map_err(LabError::compute);
    }
    let m = model(config);
    m.validate().map_err(|e| LabError::config(format!("rsv_sim: {e}")))?;
    sample_synthetic_model(&m, &config.rsv)
        .map(|(_, d)| d)
        .map_err(LabError::compute)
}

pub fn run(config: &RsvSimConfig, base: &Path, dir: &Path) -> Result<()> {
    if config.curve_points < 2 {
        return Err(LabError::config("rsv_sim.curve_points must be >= 2"));
    }
    let dist = distribution(config, base)?;

    let mut values = Table::new(&["unit", "pair", "rsv", "dead"]);
    for u in 0..dist.unit_count {
        for j in 0..dist.fixed_samples {
            let i = u * dist.fixed_samples + j;
            values.push(vec![u.into(), j.into(), dist.values[i].into(), dist.dead[i].into()]);
        }
    }
    save_csv(dir, "rsv_values.csv", &values)?;

    let mut hist = Table::new(&["center", "count"]);
    for (c, n) in dist.histogram.centers().iter().zip(&dist.histogram.counts) {
        hist.push(vec![Cell::F(*c), (*n).into()]);
    }
    save_csv(dir, "histogram.csv", &hist)?;

    let live: Vec<f64> = dist.live_values().collect();
    let dead = dist.dead.iter().filter(|d| **d).count();
    let mut summary = Table::new(&["values", "dead", "mean", "mean_abs_rsv", "frac_polarized", "frac_positive"]);
    let (mean, mean_abs, frac_pol, frac_pos) = match polarization_index(&dist) {
        Ok(p) => (
            live.iter().sum::<f64>() / live.len() as f64,
            p.mean_abs,
            p.frac_polarized,
            live.iter().filter(|v| **v > 0.0).count() as f64 / live.len() as f64,
        ),
        Err(_) => (f64::NAN, f64::NAN, f64::NAN, f64::NAN),
    };
    summary.push(vec![
        live.len().into(),
        dead.into(),
        mean.into(),
        mean_abs.into(),
        frac_pol.into(),
        frac_pos.into(),
    ]);
    save_csv(dir, "summary.csv", &summary)?;

    let mut closed = Table::new(&["w", "sv_given_a", "sv_given_b", "rsv"]);
    for i in 0..config.curve_points {
        let w = i as f64 / (config.curve_points - 1) as f64;
        let sv = synthetic_closed_form_sv(w, config.sigma0, config.sigma_a, config.sigma_b)
            .map_err(|e| LabError::config(format!("rsv_sim: {e}")))?;
        closed.push(vec![w.into(), sv.sv_given_a.into(), sv.sv_given_b.into(), sv.rsv().into()]);
    }
    save_csv(dir, "closed_form.csv", &closed)?;

    let total = dist.histogram.total().max(1) as f64;
    let svg = histogram(
        "RSV distribution",
        "RSV",
        "fraction of values",
        &[Bars {
            label: "RSV".into(),
            edges: dist.histogram.edges.clone(),
            heights: dist.histogram.counts.iter().map(|c| *c as f64 / total).collect(),
            color: 0,
        }],
    );
    save_svg(dir, "histogram.svg", svg)
}
