//! Acceptance suite. One line per criterion; tolerances and configs are pinned
//! here. Criteria listed in `EXPECTED_FAILURES` are reported but do not fail
//! the process.

use std::path::Path;
use std::time::Instant;

use critfuse::config::{load, SweepConfig, SweepVariable};
use critfuse::csv::Table;
use critfuse::{execute, Kind};
use critfuse_core::deficitlab::net::{loss_and_gradients, Activation, LossMode, NetConfig, PathwayNet};
use critfuse_core::deficitlab::task::{apply_dissociation, generate_task, Batch};
use critfuse_core::deficitlab::{
    aggregate, critical_period_cells, depth_cells, run, summarize, CellRole, DeficitKind, DeficitSchedule,
    OptimConfig, Pathway, RunConfig, RunRecord, SweepCell, SweepPoint, TaskSpec,
};
use critfuse_core::gradsim::{
    gradient, init_chain, loss, onset_times, simulate, Init, LinearChain, PhaseSchedule, SimConfig,
};
use critfuse_core::lindyn::{
    compare_counterfactual, counterfactual_drop, decompose, mode_strength, CrossCorrelation, DynamicsParams, Model,
    ONSET_FRACTION,
};
use critfuse_core::rng;
use critfuse_core::rsv::{
    rsv_distribution, sample_synthetic_model, synthetic_closed_form_sv, synthetic_rsv, FnProbe, RepresentationProbe,
    RsvConfig, Swapped, SyntheticProbe, SyntheticRsvModel, POLARIZED_ABOVE,
};
use critfuse_core::stats::{mean, sample_std, spearman};
use rand::Rng;
use oracle::normal_pair;
use rayon::prelude::*;

/// Criteria that are run and reported but known not to hold in this testbed.
const EXPECTED_FAILURES: &[u32] = &[1, 10];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---- 1 --------------------------------------------------------------------

const EQUIV_TOL: f64 = 1e-3;

/// Worst mode-strength error of a spectral depth-2 run at normalized rate `eta_n`.
fn equivalence_error(eta_n: f64) -> (f64, usize) {
    let sigma = CrossCorrelation::appendix_pre();
    let modes = decompose(&sigma).unwrap();
    let a0 = vec![DynamicsParams::DEFAULT_A0; modes.mode_count()];
    let eta = SimConfig::normalized_eta(eta_n, &sigma).unwrap();
    let mut chain = init_chain(&sigma, 8, 2, &Init::Spectral { a0: a0.clone() }, 0).unwrap();
    let config = SimConfig {
        eta,
        record_stride: 25,
        init: Init::Spectral { a0: a0.clone() },
    };
    let t_end = 12.0 / modes.singular_values[modes.mode_count() - 1].max(0.5);
    let steps = (t_end / eta).ceil() as usize;
    let traj = simulate(&mut chain, &PhaseSchedule::constant(sigma.clone(), steps).unwrap(), &config).unwrap();
    let mut worst: f64 = 0.0;
    for (step, w) in traj.steps.iter().zip(&traj.products) {
        let t = eta * *step as f64;
        for (m, sim) in modes.project(w).into_iter().enumerate() {
            let exact = mode_strength(modes.singular_values[m], a0[m], 1.0, t).unwrap();
            worst = worst.max((sim - exact).abs());
        }
    }
    (worst, steps)
}

fn analytic_vs_simulated() -> Outcome {
    let (worst, steps) = equivalence_error(1e-3);
    let (finer, _) = equivalence_error(2e-4);
    outcome(
        worst <= EQUIV_TOL,
        format!(
            "max |simulated - closed form| = {worst:.2e} over {steps} steps (tol {EQUIV_TOL:.0e}); {finer:.2e} at eta/5"
        ),
    )
}

// ---- 2, 3 -----------------------------------------------------------------

const DROPPED: usize = 2;

fn lindyn_params(sigma: &CrossCorrelation) -> DynamicsParams {
    let modes = decompose(sigma).unwrap().mode_count();
    DynamicsParams::uniform(
        modes,
        DynamicsParams::DEFAULT_A0,
        DynamicsParams::DEFAULT_TAU,
        DynamicsParams::linear_grid(1500.0, 301),
    )
}

fn shallow_invariance() -> Outcome {
    let sigma = CrossCorrelation::appendix_pre();
    let report = compare_counterfactual(&sigma, DROPPED, &lindyn_params(&sigma), Model::Shallow).unwrap();
    let worst = report.surviving.iter().fold(0.0f64, |m, s| m.max(s.max_abs_diff));
    outcome(worst <= 1e-12, format!("worst surviving-source change {worst:.2e} (tol 1e-12)"))
}

fn deep_inhibition() -> Outcome {
    let pre = CrossCorrelation::appendix_pre();
    let post = CrossCorrelation::appendix_post();
    assert_eq!(counterfactual_drop(&pre, DROPPED).unwrap(), post);
    let report = compare_counterfactual(&pre, DROPPED, &lindyn_params(&pre), Model::Deep).unwrap();

    // Onsets from discrete gradient descent, both runs from the same init.
    let eta = 1e-2;
    let steps = 6000;
    let config = SimConfig {
        eta,
        record_stride: 10,
        init: Init::SmallRandom { scale: 1e-2 },
    };
    let onsets = |sigma: &CrossCorrelation| {
        let mut chain = init_chain(sigma, 16, 2, &config.init, 3).unwrap();
        let traj = simulate(&mut chain, &PhaseSchedule::constant(sigma.clone(), steps).unwrap(), &config).unwrap();
        onset_times(&traj, ONSET_FRACTION)
    };
    let (on_full, on_dropped) = (onsets(&pre), onsets(&post));
    let hit = report.surviving.iter().find(|s| {
        let i = s.source_index;
        s.max_abs_diff > 0.1
            && matches!((on_full[i], on_dropped[i]), (Some(f), Some(d)) if d > f)
            && matches!(s.onset_delta(), Some(d) if d > 0.0)
    });
    match hit {
        Some(s) => {
            let i = s.source_index;
            outcome(
                true,
                format!(
                    "source {i}: max diff {:.3}, onset step {} -> {}",
                    s.max_abs_diff,
                    on_full[i].unwrap(),
                    on_dropped[i].unwrap()
                ),
            )
        }
        None => outcome(false, "no surviving source is both changed by > 0.1 and delayed".into()),
    }
}

// ---- 4 --------------------------------------------------------------------

const FD_STEP: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;
const FD_COORDS: usize = 120;

fn relative(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-7)
}

fn gradient_oracles() -> Outcome {
    let sigma = CrossCorrelation::appendix_pre();
    let chain = init_chain(&sigma, 6, 3, &Init::SmallRandom { scale: 0.5 }, 11).unwrap();
    let grads = gradient(&chain, &sigma).unwrap();
    let perturbed = |layer: usize, idx: usize, d: f64| {
        let mut layers = chain.layers().to_vec();
        layers[layer].as_mut_slice()[idx] += d;
        loss(&LinearChain::new(layers).unwrap(), &sigma).unwrap()
    };
    let mut r = rng::stream(41, 0);
    let mut chain_worst: f64 = 0.0;
    for _ in 0..FD_COORDS {
        let layer = r.random_range(0..chain.depth());
        let idx = r.random_range(0..grads[layer].as_slice().len());
        let fd = (perturbed(layer, idx, FD_STEP) - perturbed(layer, idx, -FD_STEP)) / (2.0 * FD_STEP);
        chain_worst = chain_worst.max(relative(grads[layer].as_slice()[idx], fd));
    }

    let net = PathwayNet::new(
        &NetConfig {
            encoder_width: 10,
            trunk_width: 8,
            trunk_blocks: 2,
            trunk_activation: Activation::Relu,
            reconstruction: true,
            init_scale: 1.0,
        },
        24,
        8,
        12,
    )
    .unwrap();
    let data = generate_task(&TaskSpec { seed: 12, ..TaskSpec::synergy_unique() }).unwrap();
    let clean = Batch::from_samples(24, data.train.iter().take(12));
    let mut shuffled = clean.clone();
    apply_dissociation(&mut shuffled, &mut rng::stream(12, 9)).unwrap();
    let mut net_worst: f64 = 0.0;
    for (batch, mode) in [
        (&clean, LossMode::NORMAL.with_reconstruction(0.5)),
        (&shuffled, LossMode::DISSOCIATION),
    ] {
        let (_, g) = loss_and_gradients(&net, batch, mode).unwrap();
        let g: Vec<Vec<f64>> = g.params().iter().map(|p| p.to_vec()).collect();
        for _ in 0..FD_COORDS {
            let buffer = r.random_range(0..g.len());
            let idx = r.random_range(0..g[buffer].len());
            let eval = |d: f64| {
                let mut probe = net.clone();
                probe.params_mut()[buffer][idx] += d;
                loss_and_gradients(&probe, batch, mode).unwrap().0
            };
            let fd = (eval(FD_STEP) - eval(-FD_STEP)) / (2.0 * FD_STEP);
            net_worst = net_worst.max(relative(g[buffer][idx], fd));
        }
    }
    outcome(
        chain_worst <= FD_TOL && net_worst <= FD_TOL,
        format!(
            "worst relative error chain {chain_worst:.1e}, network {net_worst:.1e} ({FD_COORDS} coords per check, tol {FD_TOL:.0e})"
        ),
    )
}

// ---- 5 --------------------------------------------------------------------

const RSV_MC_TOL: f64 = 0.02;

/// Independent estimate of the w = 0.8 RSV: residual variances of least-squares
/// regressions of z on each source, from joint samples.
fn regression_rsv(w: f64, n: usize, seed: u64) -> f64 {
    let mut r = rng::stream(seed, 0);
    let (mut saa, mut sbb, mut szz, mut sza, mut szb) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..n {
        let (x0, na) = normal_pair(&mut r);
        let (nb, _) = normal_pair(&mut r);
        let (xa, xb) = (x0 + na, x0 + nb);
        let z = w * xa + (1.0 - w) * xb;
        saa += xa * xa;
        sbb += xb * xb;
        szz += z * z;
        sza += z * xa;
        szb += z * xb;
    }
    let nf = n as f64;
    let given_a = (szz - sza * sza / saa) / nf;
    let given_b = (szz - szb * szb / sbb) / nf;
    (given_b - given_a) / (given_b + given_a)
}

fn rsv_closed_form() -> Outcome {
    let model = SyntheticRsvModel::new(1.0, 1.0, 1);
    let config = RsvConfig {
        fixed_samples: 4,
        variation_samples: 100_000,
        seed: 5,
        dead_unit_epsilon: 1e-12,
    };
    let mut worst: f64 = 0.0;
    for i in 0..=10 {
        let w = i as f64 / 10.0;
        let probe = SyntheticProbe::new(vec![w], 0);
        let dist = synthetic_rsv(&probe, &model, &config).unwrap();
        let mc = mean(&dist.values);
        let exact = synthetic_closed_form_sv(w, 1.0, 1.0, 1.0).unwrap().rsv();
        worst = worst.max((mc - exact).abs());
    }
    let exact = synthetic_closed_form_sv(0.8, 1.0, 1.0, 1.0).unwrap().rsv();
    let oracle = regression_rsv(0.8, 1_000_000, 6);
    let pass = worst <= RSV_MC_TOL && (exact - 0.882).abs() < 5e-4 && (oracle - exact).abs() < 5e-3;
    outcome(
        pass,
        format!("worst |MC - closed form| {worst:.4} (tol {RSV_MC_TOL}); w=0.8 closed form {exact:.4}, regression oracle {oracle:.4}"),
    )
}

// ---- 6 --------------------------------------------------------------------

const PROBES: usize = 10_000;

fn rsv_properties() -> Outcome {
    let config = RsvConfig {
        fixed_samples: 2,
        variation_samples: 6,
        seed: 0,
        dead_unit_epsilon: 1e-12,
    };
    let counts: (usize, usize) = (0..PROBES as u64)
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(600 + i, 0);
            let units = r.random_range(1..4usize);
            let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-2.0..2.0)).collect() };
            let (wa, wb, cross) = (draw(units * 2), draw(units * 2), draw(units));
            let pool_a: Vec<Vec<f64>> = (0..8).map(|_| draw(2)).collect();
            let pool_b: Vec<Vec<f64>> = (0..8).map(|_| draw(2)).collect();
            let probe = FnProbe::new(units, |a: &[f64], b: &[f64], out: &mut [f64]| {
                for (u, o) in out.iter_mut().enumerate() {
                    let la = wa[2 * u] * a[0] + wa[2 * u + 1] * a[1];
                    let lb = wb[2 * u] * b[0] + wb[2 * u + 1] * b[1];
                    *o = (la + lb + cross[u] * a[0] * b[1]).tanh();
                }
            });
            let cfg = RsvConfig { seed: i, ..config.clone() };
            let dist = rsv_distribution(&probe, &pool_a, &pool_b, &cfg).unwrap();
            let mut flipped = 0;
            let mut bad = dist.values.iter().filter(|v| !(-1.0..=1.0).contains(*v)).count();
            let swapped = rsv_distribution(&Swapped(&probe), &pool_b, &pool_a, &cfg).unwrap();
            bad += dist.values.iter().zip(&swapped.values).filter(|(x, y)| **x != -**y).count();
            for lambda in [1e-3, 1.0, 1e3] {
                let scales: Vec<f64> = (0..units).map(|u| lambda * (1.0 + u as f64)).collect();
                let scaled = FnProbe::new(units, |a: &[f64], b: &[f64], out: &mut [f64]| {
                    probe.eval(a, b, out);
                    for (o, s) in out.iter_mut().zip(&scales) {
                        *o *= s;
                    }
                });
                let d2 = rsv_distribution(&scaled, &pool_a, &pool_b, &cfg).unwrap();
                // The dead threshold is absolute, so only units live at both scales compare.
                for k in 0..dist.values.len() {
                    if dist.dead[k] || d2.dead[k] {
                        flipped += usize::from(dist.dead[k] != d2.dead[k]);
                    } else if (dist.values[k] - d2.values[k]).abs() > 1e-12 {
                        bad += 1;
                    }
                }
            }
            (bad, flipped)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let (violations, flipped) = counts;
    outcome(
        violations == 0,
        format!("{violations} violations over {PROBES} random probes ({flipped} values crossed the dead-unit threshold when rescaled)"),
    )
}

// ---- 7 --------------------------------------------------------------------

#[derive(Debug, PartialEq, Clone, Copy)]
enum Shape {
    OneSided,
    Centered,
    Bimodal,
    Other,
}

const ONE_SIDED_MEAN: f64 = 0.5;
const ONE_SIDED_SIGN: f64 = 0.95;
const BIMODAL_FRAC: f64 = 0.5;
const CENTERED_MEAN_ABS: f64 = 0.5;
const CENTERED_FRAC: f64 = 0.1;

fn classify(values: &[f64]) -> (Shape, String) {
    let n = values.len() as f64;
    let m = mean(values);
    let mean_abs = values.iter().map(|v| v.abs()).sum::<f64>() / n;
    let frac = values.iter().filter(|v| v.abs() > POLARIZED_ABOVE).count() as f64 / n;
    let pos = values.iter().filter(|v| **v > 0.0).count() as f64 / n;
    let same_sign = pos.max(values.iter().filter(|v| **v < 0.0).count() as f64 / n);
    let shape = if m.abs() > ONE_SIDED_MEAN && same_sign >= ONE_SIDED_SIGN {
        Shape::OneSided
    } else if frac > BIMODAL_FRAC && m.abs() < 0.5 {
        Shape::Bimodal
    } else if mean_abs < CENTERED_MEAN_ABS && frac < CENTERED_FRAC {
        Shape::Centered
    } else {
        Shape::Other
    };
    (shape, format!("mean {m:+.2} |mean| {mean_abs:.2} polarized {frac:.2}"))
}

fn synthetic_shapes() -> Outcome {
    let config = RsvConfig {
        fixed_samples: 4,
        variation_samples: 256,
        seed: 7,
        dead_unit_epsilon: 1e-12,
    };
    let half = SyntheticRsvModel {
        mixing: 0.0,
        ..SyntheticRsvModel::new(1.0, 10.0, 20_000)
    };
    let cases = [
        ("a=1 b=10 half", half, Shape::OneSided),
        ("a=1 b=20", SyntheticRsvModel::new(1.0, 20.0, 20_000), Shape::Bimodal),
        ("a=20 b=20", SyntheticRsvModel::new(20.0, 20.0, 20_000), Shape::Centered),
        ("a=30 b=20", SyntheticRsvModel::new(30.0, 20.0, 20_000), Shape::Centered),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, model, want) in cases {
        let (_, dist) = sample_synthetic_model(&model, &config).unwrap();
        let values: Vec<f64> = dist.live_values().collect();
        let (got, stats) = classify(&values);
        pass &= got == want;
        parts.push(format!("{name}: {got:?} ({stats})"));
    }
    outcome(pass, parts.join("; "))
}

// ---- deficit helpers ------------------------------------------------------

fn run_all(cells: &[SweepCell]) -> Vec<RunRecord> {
    cells.par_iter().map(|c| run(&c.config).unwrap()).collect()
}

fn points(cells: &[SweepCell]) -> Vec<SweepPoint> {
    aggregate(&summarize(cells, &run_all(cells)).unwrap())
}

fn deficit_points(points: &[SweepPoint]) -> Vec<&SweepPoint> {
    points.iter().filter(|p| p.role == CellRole::Deficit).collect()
}

fn seeds(n: u64) -> Vec<u64> {
    (0..n).collect()
}

// ---- 8 --------------------------------------------------------------------

const T0: [usize; 6] = [0, 5, 10, 20, 40, 60];
const RHO: f64 = 0.8;

fn critical_period_config() -> RunConfig {
    RunConfig {
        task: TaskSpec::synergy_unique(),
        epochs: 60,
        optim: OptimConfig {
            learning_rate: 0.05,
            decay: 0.97,
            ..OptimConfig::default()
        },
        net: NetConfig {
            encoder_width: 64,
            trunk_width: 64,
            ..NetConfig::default()
        },
        ..RunConfig::default()
    }
}

fn critical_period_curve() -> Outcome {
    let windows: Vec<DeficitSchedule> = T0
        .iter()
        .map(|t| DeficitSchedule::initial(DeficitKind::Dissociation, *t))
        .collect();
    let cells = critical_period_cells(&critical_period_config(), &windows, &seeds(5), |w| w.window.len() as f64).unwrap();
    let pts = points(&cells);
    let def = deficit_points(&pts);
    let t: Vec<f64> = def.iter().map(|p| p.variable).collect();
    let acc: Vec<f64> = def.iter().map(|p| p.mean_accuracy).collect();
    let pol: Vec<f64> = def.iter().map(|p| p.mean_frac_polarized).collect();
    let (rho_acc, rho_pol) = (spearman(&t, &acc), spearman(&t, &pol));
    let fmt = |xs: &[f64]| xs.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        rho_acc <= -RHO && rho_pol >= RHO,
        format!(
            "rho(acc) {rho_acc:+.2}, rho(polarized) {rho_pol:+.2}; accuracy [{}], polarized [{}]",
            fmt(&acc),
            fmt(&pol)
        ),
    )
}

// ---- 9 --------------------------------------------------------------------

fn depth_config() -> RunConfig {
    RunConfig {
        task: TaskSpec::synergy_unique(),
        epochs: 60,
        optim: OptimConfig {
            learning_rate: 0.05,
            decay: 0.95,
            ..OptimConfig::default()
        },
        net: NetConfig {
            encoder_width: 32,
            trunk_width: 16,
            ..NetConfig::default()
        },
        rsv: None,
        ..RunConfig::default()
    }
}

fn depth_effect() -> Outcome {
    let deficit = DeficitSchedule::initial(DeficitKind::Dissociation, 20);
    let cells = depth_cells(&depth_config(), &[1, 2, 3], deficit, &seeds(20)).unwrap();
    let pts = points(&cells);
    let impairment: Vec<f64> = deficit_points(&pts).iter().map(|p| -p.mean_delta).collect();
    let monotone = impairment.windows(2).all(|w| w[1] >= w[0]);
    outcome(
        monotone,
        format!(
            "impairment by depth 1/2/3: {}",
            impairment.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" / ")
        ),
    )
}

// ---- 10 -------------------------------------------------------------------

const RECON_LAMBDA: f64 = 3.0;
const SLIDING_STARTS: [usize; 5] = [0, 10, 20, 30, 40];
const SLIDING_LENGTH: usize = 10;

fn sliding_config(lambda: f64) -> RunConfig {
    RunConfig {
        task: TaskSpec::synergy_unique(),
        epochs: 60,
        optim: OptimConfig {
            learning_rate: 0.05,
            decay: 0.97,
            ..OptimConfig::default()
        },
        net: NetConfig {
            encoder_width: 32,
            trunk_width: 16,
            reconstruction: lambda > 0.0,
            ..NetConfig::default()
        },
        reconstruction: lambda,
        rsv: None,
        ..RunConfig::default()
    }
}

fn worst_drop(lambda: f64) -> f64 {
    let windows: Vec<DeficitSchedule> = SLIDING_STARTS
        .iter()
        .map(|s| DeficitSchedule::sliding(DeficitKind::Dissociation, *s, SLIDING_LENGTH))
        .collect();
    let cells = critical_period_cells(&sliding_config(lambda), &windows, &seeds(5), |w| w.window.start() as f64).unwrap();
    let pts = points(&cells);
    deficit_points(&pts).iter().map(|p| -p.mean_delta).fold(0.0, f64::max)
}

fn reconstruction_robustness() -> Outcome {
    let supervised = worst_drop(0.0);
    let recon = worst_drop(RECON_LAMBDA);
    outcome(
        recon <= 0.5 * supervised,
        format!("worst drop supervised {supervised:.3}, with reconstruction (lambda {RECON_LAMBDA}) {recon:.3}; need <= {:.3}", 0.5 * supervised),
    )
}

// ---- 11 -------------------------------------------------------------------

fn usable_config() -> RunConfig {
    RunConfig {
        task: TaskSpec::default(),
        epochs: 60,
        optim: OptimConfig {
            learning_rate: 0.05,
            decay: 0.97,
            ..OptimConfig::default()
        },
        net: NetConfig {
            encoder_width: 64,
            trunk_width: 64,
            ..NetConfig::default()
        },
        usable_information: true,
        mask_probability: 0.1,
        rsv: None,
        ..RunConfig::default()
    }
}

fn usable_information_inhibition() -> Outcome {
    let base = usable_config();
    let blur = DeficitKind::Blur {
        pathway: Pathway::B,
        gain: 0.0,
        noise_std: 1.0,
    };
    let windows = [DeficitSchedule::initial(blur, base.epochs)];
    let cells = critical_period_cells(&base, &windows, &seeds(5), |w| w.window.len() as f64).unwrap();
    let records = run_all(&cells);
    let b_only = |role: CellRole| -> Vec<f64> {
        cells
            .iter()
            .zip(&records)
            .filter(|(c, _)| c.role == role)
            .map(|(_, r)| r.usable.unwrap().b_only)
            .collect()
    };
    let (control, deficit) = (b_only(CellRole::Control), b_only(CellRole::Deficit));
    let margin = mean(&control) - mean(&deficit);
    let spread = sample_std(&control).max(sample_std(&deficit));
    outcome(
        margin > 2.0 * spread,
        format!(
            "I_u(B alone) control {:.3}, blurred {:.3}; margin {margin:.3} vs 2*std {:.3}",
            mean(&control),
            mean(&deficit),
            2.0 * spread
        ),
    )
}

// ---- 12 -------------------------------------------------------------------

fn csv_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|e| e == "csv") {
                out.push((p.strip_prefix(dir).unwrap().display().to_string(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn reproducibility() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = load("kind = \"sweep\"", &[]).unwrap();
    config.deficit = critical_period_config();
    config.sweep = SweepConfig {
        variable: SweepVariable::WindowLength,
        values: vec![0, 20, 40],
        deficit: DeficitKind::Dissociation,
        window_length: 10,
        replicates: 2,
    };
    let mut digests = Vec::new();
    for (name, jobs) in [("a", 1), ("b", 4), ("c", 4)] {
        config.jobs = jobs;
        let out = tmp.path().join(name);
        execute(Kind::Sweep, &config, tmp.path(), &out, false).unwrap();
        digests.push(csv_bytes(&out));
    }
    let files = digests[0].len();
    let same = files > 0 && digests.iter().all(|d| *d == digests[0]);
    let runs = Table::read(&tmp.path().join("a/aggregate.csv")).map(|t| t.rows.len()).unwrap_or(0);
    outcome(
        same,
        format!("{files} CSVs ({runs} deficit rows) byte-identical across jobs 1, 4 and a repeat at 4"),
    )
}

// ---- harness --------------------------------------------------------------

mod oracle {
    use rand::Rng;

    /// Box-Muller pair; kept local so the oracle shares no sampler with the library.
    pub fn normal_pair(r: &mut impl Rng) -> (f64, f64) {
        let u1: f64 = 1.0 - r.random::<f64>();
        let u2: f64 = r.random::<f64>();
        let radius = (-2.0 * u1.ln()).sqrt();
        let angle = 2.0 * std::f64::consts::PI * u2;
        (radius * angle.cos(), radius * angle.sin())
    }
}

fn main() {
    let filter: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria: [(u32, &str, fn() -> Outcome); 12] = [
        (1, "analytic-simulation equivalence", analytic_vs_simulated),
        (2, "shallow counterfactual invariance", shallow_invariance),
        (3, "deep counterfactual inhibition", deep_inhibition),
        (4, "gradient oracles", gradient_oracles),
        (5, "RSV closed-form agreement", rsv_closed_form),
        (6, "RSV properties", rsv_properties),
        (7, "synthetic RSV shapes", synthetic_shapes),
        (8, "critical-period curve", critical_period_curve),
        (9, "depth effect", depth_effect),
        (10, "reconstruction robustness", reconstruction_robustness),
        (11, "usable-information inhibition", usable_information_inhibition),
        (12, "reproducibility across parallelism", reproducibility),
    ];
    let mut unexpected = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let o = check();
        let expected_fail = EXPECTED_FAILURES.contains(&id);
        let status = match (o.pass, expected_fail) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as expected failure)",
            (false, true) => "FAIL (expected)",
            (false, false) => {
                unexpected += 1;
                "FAIL"
            }
        };
        println!(
            "[{id:>2}] {status} {name}: {} [{:.1}s]",
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if unexpected > 0 {
        println!("{unexpected} criteria failed");
        std::process::exit(1);
    }
}
