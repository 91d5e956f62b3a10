//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS/FAIL line. The data-dependent criteria share one lazily built
//! pipeline (expert dataset, trained model) on the shipped default
//! configuration.

use qlfc::config::PipelineConfig;
use qlfc::expert::{
    build_lookup_table, generate_replay, grid_search, ReplayMemory, Scenario,
};
use qlfc::harness::{
    closed_loop_simulate, compare_optimal_suboptimal, fleet_statistics, DeployConfig,
};
use qlfc::plant::{simulate, LoadEvent, PiGains, SimSettings};
use qlfc::qsim::{run_circuit, sample_counts, Circuit, Gate, Statevector};
use qlfc::expert::ReplaySample;
use qlfc::trainer::{
    evaluate_accuracy_exact, event_heatmap, shots_sweep, split_dataset, train,
};
use qlfc::vqc::{AnsatzSpec, Backend, FeatureMapSpec, FeatureWindow, VqcModel, VqcParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

struct Pipeline {
    cfg: PipelineConfig,
    scenarios: Vec<Scenario>,
    memory: ReplayMemory,
    model: VqcModel,
    test_set: Vec<ReplaySample>,
}

static PIPELINE: OnceLock<Pipeline> = OnceLock::new();

fn pipeline() -> &'static Pipeline {
    PIPELINE.get_or_init(|| {
        let cfg = PipelineConfig::default();
        cfg.validate().expect("shipped config must validate");
        let scenarios = cfg.catalog.expand(&cfg.plant);
        let assignment =
            build_lookup_table(&scenarios, &cfg.grid, cfg.cost, &cfg.sim).expect("lookup table");
        let memory = generate_replay(
            &scenarios,
            &assignment.classes,
            &assignment.table,
            &cfg.grid,
            cfg.cost,
            &cfg.sim,
            &cfg.replay,
        )
        .expect("replay memory");
        let (train_set, test_set) =
            split_dataset(&memory, cfg.split.n_test_events, cfg.split.seed).expect("split");
        let feature_map = FeatureMapSpec {
            n_qubits: 3,
            full_scale_hz: cfg.model.full_scale_hz,
            repetitions: cfg.model.repetitions,
        };
        let ansatz = AnsatzSpec::linear(cfg.model.layers);
        let params = VqcParams::random(&ansatz, 3, cfg.model.init_seed);
        let model = VqcModel::new(feature_map, ansatz, params, memory.table.n_classes());
        let (model, _) = train(&model, &train_set, &cfg.train).expect("training");
        Pipeline {
            cfg,
            scenarios,
            memory,
            model,
            test_set,
        }
    })
}

fn report(criterion: &str, pass: bool, detail: &str) {
    println!(
        "criterion {criterion}: {} - {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
}

fn random_state(seed: u64) -> Statevector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<(f64, f64)> = (0..8).map(|_| (rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
    let norm: f64 = raw.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt();
    let mut circuit = Circuit::new(3);
    let _ = &mut circuit;
    // build via amplitudes: use basis then replace through gates is overkill;
    // statevector construction goes through the public basis + gate API
    let mut sv = Statevector::zero(3);
    // load the random amplitudes with a sequence of gates is unnecessary:
    // norm-preservation is already covered; here a Haar-ish state comes from
    // a random circuit instead.
    for q in 0..3 {
        sv.apply_gate(&Gate::H { target: q }).unwrap();
        sv.apply_gate(&Gate::Rx {
            target: q,
            angle: raw[q].0 * 3.0,
        })
        .unwrap();
        sv.apply_gate(&Gate::Rz {
            target: q,
            angle: raw[q].1 * 3.0,
        })
        .unwrap();
    }
    sv.apply_gate(&Gate::Cnot {
        control: 0,
        target: 1,
    })
    .unwrap();
    sv.apply_gate(&Gate::Cnot {
        control: 1,
        target: 2,
    })
    .unwrap();
    let _ = norm;
    sv
}

#[test]
fn criterion_1_quantum_kernel_correctness() {
    // involutions on random states
    let mut max_dev: f64 = 0.0;
    for seed in 0..10u64 {
        let sv = random_state(seed);
        for gate in [
            Gate::H { target: (seed % 3) as usize },
            Gate::Cnot {
                control: (seed % 3) as usize,
                target: ((seed + 1) % 3) as usize,
            },
        ] {
            let mut twice = sv.clone();
            twice.apply_gate(&gate).unwrap();
            twice.apply_gate(&gate).unwrap();
            for (a, b) in twice.amplitudes().iter().zip(sv.amplitudes()) {
                max_dev = max_dev.max((a - b).norm());
            }
        }
    }
    let involutions_ok = max_dev < 1e-12;

    // norm preservation over random circuits
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut max_norm_err: f64 = 0.0;
    for seed in 0..20u64 {
        let mut sv = random_state(seed);
        for _ in 0..50 {
            let q = rng.gen_range(0..3);
            let gate = match rng.gen_range(0..5) {
                0 => Gate::H { target: q },
                1 => Gate::Phase {
                    target: q,
                    angle: rng.gen_range(-3.2..3.2),
                },
                2 => Gate::Rx {
                    target: q,
                    angle: rng.gen_range(-3.2..3.2),
                },
                3 => Gate::Rz {
                    target: q,
                    angle: rng.gen_range(-3.2..3.2),
                },
                _ => Gate::Cnot {
                    control: q,
                    target: (q + 1) % 3,
                },
            };
            sv.apply_gate(&gate).unwrap();
            max_norm_err = max_norm_err.max((sv.norm_sqr() - 1.0).abs());
        }
    }
    let norm_ok = max_norm_err < 1e-10;

    // Bell state: exact probabilities and million-shot sampling
    let mut bell = Circuit::new(2);
    bell.h(0).cnot(0, 1);
    let state = run_circuit(&bell, &Statevector::zero(2)).unwrap();
    let probs = state.probabilities();
    let bell_exact_ok = (probs[0] - 0.5).abs() < 1e-12
        && probs[1] == 0.0
        && probs[2] == 0.0
        && (probs[3] - 0.5).abs() < 1e-12;

    let counts = sample_counts(&probs, 1_000_000, 2024).unwrap();
    let three_sigma = 3.0 * (0.25f64 / 1_000_000.0).sqrt();
    let f0 = counts.counts()[0] as f64 / 1e6;
    let f3 = counts.counts()[3] as f64 / 1e6;
    let sampling_ok = (f0 - 0.5).abs() < three_sigma
        && (f3 - 0.5).abs() < three_sigma
        && counts.counts()[1] == 0
        && counts.counts()[2] == 0;

    report(
        "1 (quantum kernel)",
        involutions_ok && norm_ok && bell_exact_ok && sampling_ok,
        &format!(
            "involution dev {max_dev:.2e}, norm err {max_norm_err:.2e}, bell probs {probs:?}, 1e6-shot f0 {f0:.5} f3 {f3:.5} (3-sigma {three_sigma:.5})"
        ),
    );
}

#[test]
fn criterion_2_parameter_shift_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(321);
    let mut max_rel: f64 = 0.0;
    for draw in 0..20u64 {
        let ansatz = AnsatzSpec::linear(2);
        let params = VqcParams::random(&ansatz, 3, 500 + draw);
        let model = VqcModel::new(FeatureMapSpec::default(), ansatz, params, 8);
        let x = FeatureWindow([
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ]);
        let data = vec![(x, (draw % 8) as usize)];
        let analytic = model.parameter_shift_gradient(&data).unwrap();
        let h = 1e-5;
        for j in 0..analytic.len() {
            let mut plus = model.clone();
            plus.params.0[j] += h;
            let mut minus = model.clone();
            minus.params.0[j] -= h;
            let numeric =
                (plus.loss(&data).unwrap() - minus.loss(&data).unwrap()) / (2.0 * h);
            let scale = analytic[j].abs().max(numeric.abs()).max(1e-4);
            max_rel = max_rel.max((analytic[j] - numeric).abs() / scale);
        }
    }
    report(
        "2 (gradient check)",
        max_rel < 1e-5,
        &format!("max relative error {max_rel:.2e} over 20 draws (h = 1e-5, L = 2)"),
    );
}

#[test]
fn criterion_3_plant_oracles() {
    let cfg = PipelineConfig::default();
    let p = cfg.plant;
    let delta = 0.1;
    let event = LoadEvent::new(0, vec![(1.0, delta)]);

    // (a) proportional-only steady state matches the DC gain across both the
    // built-in default grid and the shipped grid's kp values
    let mut kp_values = qlfc::expert::GainGrid::default().kp_values;
    kp_values.extend(cfg.grid.kp_values.iter().copied());
    let mut dc_worst: f64 = 0.0;
    for &kp in &kp_values {
        let settings = SimSettings {
            duration_s: 120.0,
            dt_s: 1e-3,
        };
        let run = simulate(&p, &PiGains::new(kp, 0.0), &event, &settings).unwrap();
        let expected = -delta / (p.damping + kp + 1.0 / p.droop);
        let got = run.samples.last().unwrap().delta_f_pu;
        dc_worst = dc_worst.max((got - expected).abs() / expected.abs());
    }
    let dc_ok = dc_worst < 1e-3;

    // (b) integral action drives the error below 1e-5 pu for every grid cell
    let mut integral_worst: f64 = 0.0;
    let default_grid = qlfc::expert::GainGrid::default();
    let cells: Vec<PiGains> = default_grid.cells().chain(cfg.grid.cells()).collect();
    for gains in cells {
        let horizon = 40.0 + 10.0 * (p.damping + gains.kp + 1.0 / p.droop) / gains.ki;
        let settings = SimSettings {
            duration_s: horizon,
            dt_s: 1e-3,
        };
        let run = simulate(&p, &gains, &event, &settings).unwrap();
        integral_worst = integral_worst.max(run.samples.last().unwrap().delta_f_pu.abs());
    }
    let integral_ok = integral_worst < 1e-5;

    // (c) halving dt moves every metric by less than 0.1%
    let gains = PiGains::new(2.0, 6.0);
    let coarse = simulate(
        &p,
        &gains,
        &event,
        &SimSettings {
            duration_s: 30.0,
            dt_s: 1e-3,
        },
    )
    .unwrap();
    let fine = simulate(
        &p,
        &gains,
        &event,
        &SimSettings {
            duration_s: 30.0,
            dt_s: 5e-4,
        },
    )
    .unwrap();
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-12);
    let conv_worst = [
        rel(coarse.metrics.ise, fine.metrics.ise),
        rel(coarse.metrics.itae, fine.metrics.itae),
        rel(coarse.metrics.nadir_hz, fine.metrics.nadir_hz),
        rel(coarse.metrics.settling_time_s, fine.metrics.settling_time_s),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let conv_ok = conv_worst < 1e-3;

    report(
        "3 (plant oracles)",
        dc_ok && integral_ok && conv_ok,
        &format!(
            "DC-gain worst rel err {dc_worst:.2e}, integral-action worst residual {integral_worst:.2e} pu, dt-halving worst shift {conv_worst:.2e}"
        ),
    );
}

#[test]
fn criterion_4_expert_oracle() {
    let pl = pipeline();
    let pinned = [0usize, 19, 43, 66, 89];
    let mut all_match = true;
    let mut detail = String::new();
    for &idx in &pinned {
        let scenario = &pl.scenarios[idx];
        let (winner, winner_cost) = grid_search(
            &scenario.event,
            &pl.cfg.grid,
            &scenario.plant,
            pl.cfg.cost,
            &pl.cfg.sim,
        )
        .unwrap();

        // independent re-enumeration: direct simulation per cell, own ranking
        let mut oracle: Option<(f64, PiGains)> = None;
        for &kp in &pl.cfg.grid.kp_values {
            for &ki in &pl.cfg.grid.ki_values {
                let gains = PiGains::new(kp, ki);
                let cost = match simulate(&scenario.plant, &gains, &scenario.event, &pl.cfg.sim) {
                    Ok(run) => run.metrics.ise,
                    Err(_) => f64::INFINITY,
                };
                let replace = match oracle {
                    None => cost.is_finite(),
                    Some((best, bg)) => {
                        cost < best
                            || (cost == best
                                && (ki < bg.ki || (ki == bg.ki && kp < bg.kp)))
                    }
                };
                if replace {
                    oracle = Some((cost, gains));
                }
            }
        }
        let (oracle_cost, oracle_gains) = oracle.unwrap();
        let matches = winner == oracle_gains && winner_cost == oracle_cost;
        all_match &= matches;
        detail.push_str(&format!(
            "event {} -> ({}, {}) {} ",
            scenario.event.id,
            winner.kp,
            winner.ki,
            if matches { "ok" } else { "MISMATCH" }
        ));
    }
    report("4 (expert oracle)", all_match, detail.trim());
}

#[test]
fn criterion_5_training_efficacy() {
    let pl = pipeline();
    let exact = evaluate_accuracy_exact(&pl.model, &pl.test_set).unwrap();
    let reports = shots_sweep(
        &pl.model,
        &pl.test_set,
        &pl.cfg.eval.shots_list,
        pl.cfg.eval.runs_per_config,
        pl.cfg.eval.base_seed,
    )
    .unwrap();

    let exact_ok = exact >= 0.90;
    let mut shots_ok = true;
    let mut detail = format!("exact {exact:.4}; ");
    for r in &reports {
        detail.push_str(&format!("{} shots mean {:.4} spread {:.4}; ", r.shots, r.mean, r.spread()));
        if r.shots >= 1000 {
            shots_ok &= (r.mean - exact).abs() <= 0.03;
        }
    }
    let spread_100 = reports.iter().find(|r| r.shots == 100).unwrap().spread();
    let spread_10k = reports.iter().find(|r| r.shots == 10000).unwrap().spread();
    let spread_ok = spread_10k <= spread_100;
    report(
        "5 (training efficacy)",
        exact_ok && shots_ok && spread_ok,
        &format!("{detail}spread 10000 {spread_10k:.4} <= spread 100 {spread_100:.4}: {spread_ok}"),
    );
}

#[test]
fn criterion_6_event_heatmap_shape() {
    let pl = pipeline();
    let grids = event_heatmap(
        &pl.model,
        &pl.test_set,
        &pl.cfg.eval.shots_list,
        pl.cfg.eval.runs_per_config,
        pl.cfg.eval.base_seed,
    )
    .unwrap();
    let shape_ok = grids.len() == 18
        && grids.iter().all(|g| {
            g.grid.len() == pl.cfg.eval.shots_list.len()
                && g.grid.iter().all(|row| row.len() == pl.cfg.eval.runs_per_config)
        });
    let top_shots_idx = grids[0]
        .shots_configs
        .iter()
        .position(|&s| s == 10000)
        .unwrap();
    let all_true_at_10k = grids
        .iter()
        .filter(|g| g.grid[top_shots_idx].iter().all(|&ok| ok))
        .count();
    report(
        "6 (event heatmap)",
        shape_ok && all_true_at_10k >= 12,
        &format!(
            "{} grids of {}x{}; {all_true_at_10k}/18 events all-true at 10000 shots (need >= 12)",
            grids.len(),
            pl.cfg.eval.shots_list.len(),
            pl.cfg.eval.runs_per_config
        ),
    );
}

fn test_event_ids(pl: &Pipeline) -> Vec<u32> {
    let mut ids: Vec<u32> = pl.test_set.iter().map(|s| s.event_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

#[test]
fn criterion_7_closed_loop_superiority() {
    let pl = pipeline();
    let mut all_ok = true;
    let mut worst = String::new();
    for id in test_event_ids(pl) {
        let scenario = pl
            .scenarios
            .iter()
            .find(|s| s.event.id == id)
            .unwrap();
        let cmp = compare_optimal_suboptimal(scenario, &pl.memory.table, pl.cfg.cost, &pl.cfg.sim)
            .unwrap();
        let ise_ok = cmp.optimal.metrics.ise <= cmp.suboptimal.metrics.ise;
        let nadir_ok = cmp.optimal.metrics.nadir_hz >= cmp.suboptimal.metrics.nadir_hz;
        if !(ise_ok && nadir_ok) {
            all_ok = false;
            worst.push_str(&format!(
                "event {id}: ise {} vs {}, nadir {} vs {}; ",
                cmp.optimal.metrics.ise,
                cmp.suboptimal.metrics.ise,
                cmp.optimal.metrics.nadir_hz,
                cmp.suboptimal.metrics.nadir_hz
            ));
        }
    }
    report(
        "7 (closed-loop superiority)",
        all_ok,
        if worst.is_empty() {
            "optimal class dominates ISE and nadir on all 18 test events"
        } else {
            &worst
        },
    );
}

#[test]
fn criterion_8_fleet_regulation() {
    let pl = pipeline();
    let mut results = Vec::new();
    let mut settled_ok = true;
    for id in test_event_ids(pl) {
        let scenario = pl.scenarios.iter().find(|s| s.event.id == id).unwrap();
        let deploy = DeployConfig {
            scenario: scenario.clone(),
            sim: pl.cfg.sim,
            sampling_period_s: pl.cfg.replay.sampling_period_s,
            update_period_s: pl.cfg.deploy.update_period_s,
            backend: Backend::Exact,
            hold_band_hz: pl.cfg.deploy.hold_band_hz,
        };
        let (result, _) = closed_loop_simulate(&pl.model, &pl.memory.table, &deploy).unwrap();
        let window_left = pl.cfg.sim.duration_s - scenario.event.last_onset();
        settled_ok &= result.metrics.settling_time_s < window_left;
        results.push(result);
    }
    let stats = fleet_statistics(&results, pl.cfg.deploy.pm_offset_pu);
    let mean_ok = (stats.freq_mean_hz - 60.0).abs() <= 0.05;
    report(
        "8 (fleet regulation)",
        mean_ok && settled_ok,
        &format!(
            "pooled mean {:.4} Hz (need 60 +- 0.05), range [{:.4}, {:.4}], every run settled before horizon: {settled_ok}",
            stats.freq_mean_hz, stats.freq_min_hz, stats.freq_max_hz
        ),
    );
}

#[test]
fn criterion_9_pipeline_determinism() {
    use std::fs;
    use std::path::Path;
    use std::process::Command;

    let mut cfg = PipelineConfig::default();
    // determinism does not depend on depth: shrink the expensive knobs
    cfg.sim.duration_s = 30.0;
    cfg.train.epochs = 20;
    cfg.eval.shots_list = vec![100, 1000];
    cfg.eval.runs_per_config = 2;

    let base = std::env::temp_dir().join(format!("qlfc-acceptance-{}", std::process::id()));
    fs::remove_dir_all(&base).ok();
    fs::create_dir_all(&base).unwrap();
    let cfg_path = base.join("pipeline.toml");
    fs::write(&cfg_path, toml::to_string_pretty(&cfg).unwrap()).unwrap();

    let run_pipeline = |out: &Path| {
        let bin = env!("CARGO_BIN_EXE_qlfc");
        for args in [
            vec!["gen-data"],
            vec!["train", "--data"],
            vec!["sweep-shots", "--data"],
        ] {
            let mut cmd = Command::new(bin);
            cmd.arg(args[0]);
            if args.len() > 1 {
                cmd.arg(args[1]).arg(out);
            }
            if args[0] == "sweep-shots" {
                cmd.arg("--model").arg(out);
            }
            let status = cmd
                .arg("--config")
                .arg(&cfg_path)
                .arg("--out")
                .arg(out)
                .status()
                .unwrap();
            assert!(status.success(), "{} failed", args[0]);
        }
        let status = Command::new(bin)
            .args(["simulate", "--event", "3", "--data"])
            .arg(out)
            .arg("--model")
            .arg(out)
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success(), "simulate failed");
    };

    let out_a = base.join("a");
    let out_b = base.join("b");
    run_pipeline(&out_a);
    run_pipeline(&out_b);

    let mut all_identical = true;
    let mut checked = 0;
    let mut detail = String::new();
    for entry in fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name();
        let a = fs::read(out_a.join(&name)).unwrap();
        let b = fs::read(out_b.join(&name)).unwrap();
        checked += 1;
        if a != b {
            all_identical = false;
            detail.push_str(&format!("{} differs; ", name.to_string_lossy()));
        }
    }
    fs::remove_dir_all(&base).ok();
    report(
        "9 (determinism)",
        all_identical && checked >= 7,
        &format!("{checked} artifact files byte-compared{}", if detail.is_empty() { ", all identical".to_string() } else { format!(": {detail}") }),
    );
}
