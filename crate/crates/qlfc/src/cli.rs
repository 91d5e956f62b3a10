//! Command-line pipeline: data generation, training, evaluation, sweeps,
//! closed-loop simulation, comparisons, and fleet statistics.
//!
//! Every command reads one TOML config document, writes its outputs under a
//! declared directory, and prints a one-line summary. Artifact file names are
//! fixed: `table.toml`, `replay.toml`, `model.toml`, plus CSV tables.

use crate::config::{
    load_toml, save_toml, write_atomic, ModelDocument, PipelineConfig, ReplayDocument,
    TableDocument, SCHEMA_VERSION,
};
use crate::error::{Error, Result};
use crate::expert::{build_lookup_table, generate_replay, ReplayMemory, Scenario};
use crate::harness::{
    closed_loop_simulate, compare_optimal_suboptimal, fleet_statistics, DeployConfig,
};
use crate::plant::SimResult;
use crate::trainer::{
    evaluate_accuracy, evaluate_accuracy_exact, event_heatmap, shots_sweep, split_dataset, train,
};
use crate::vqc::{AnsatzSpec, Backend, FeatureMapSpec, VqcModel, VqcParams};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "qlfc",
    about = "Variational quantum gain scheduling for diesel-generator frequency control",
    version
)]
pub struct Cli {
    /// Override the stage seed (training init/seed, evaluation base seed,
    /// or shot-sampling seed, depending on the command).
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Grid-search the expert, build the lookup table, and fill the replay memory.
    GenData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the classifier on the replay memory's training split.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Report exact-backend and per-shots accuracy on the held-out events.
    Eval {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy statistics over shot configurations and runs, plus the
    /// per-event correctness heatmap.
    SweepShots {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop simulation of one event under scheduled gains.
    Simulate {
        #[arg(long)]
        event: u32,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Sample the classifier with this many shots instead of exactly.
        #[arg(long)]
        shots: Option<u64>,
        /// Keep every Nth trajectory row in the export.
        #[arg(long, default_value_t = 10)]
        decimate: usize,
    },
    /// Static-gain comparison of one event: its best class vs the worst other.
    Compare {
        #[arg(long)]
        event: u32,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-loop fleet statistics over every held-out test event.
    Stats {
        /// Directory holding replay.toml and model.toml.
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenData { config, out } => gen_data(&config, &out),
        Command::Train { data, config, out } => cmd_train(&data, &config, &out, cli.seed),
        Command::Eval {
            data,
            model,
            config,
            out,
        } => cmd_eval(&data, &model, &config, &out, cli.seed),
        Command::SweepShots {
            data,
            model,
            config,
            out,
        } => cmd_sweep(&data, &model, &config, &out, cli.seed),
        Command::Simulate {
            event,
            data,
            model,
            config,
            out,
            shots,
            decimate,
        } => cmd_simulate(event, &data, &model, &config, &out, shots, cli.seed, decimate),
        Command::Compare {
            event,
            data,
            config,
            out,
        } => cmd_compare(event, &data, &config, &out),
        Command::Stats { input, config, out } => cmd_stats(&input, &config, &out),
    }
}

fn load_config(path: &Path) -> Result<PipelineConfig> {
    let cfg: PipelineConfig = load_toml(path)?;
    cfg.validate()?;
    Ok(cfg)
}

fn load_replay(dir: &Path) -> Result<ReplayDocument> {
    load_toml(&dir.join("replay.toml"))
}

fn load_model(dir: &Path) -> Result<ModelDocument> {
    load_toml(&dir.join("model.toml"))
}

fn find_scenario(memory: &ReplayMemory, event: u32) -> Result<(Scenario, usize)> {
    memory
        .scenarios
        .iter()
        .position(|s| s.event.id == event)
        .map(|idx| (memory.scenarios[idx].clone(), memory.classes[idx]))
        .ok_or_else(|| Error::MissingArtifact(format!("event {event} in replay memory")))
}

fn gen_data(config_path: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let scenarios = cfg.catalog.expand(&cfg.plant);
    let assignment = build_lookup_table(&scenarios, &cfg.grid, cfg.cost, &cfg.sim)?;
    let memory = generate_replay(
        &scenarios,
        &assignment.classes,
        &assignment.table,
        &cfg.grid,
        cfg.cost,
        &cfg.sim,
        &cfg.replay,
    )?;
    save_toml(
        &out.join("table.toml"),
        &TableDocument {
            schema_version: SCHEMA_VERSION,
            table: assignment.table.clone(),
            grid: cfg.grid.clone(),
            cost: cfg.cost,
            sim: cfg.sim,
        },
    )?;
    save_toml(
        &out.join("replay.toml"),
        &ReplayDocument {
            schema_version: SCHEMA_VERSION,
            memory: memory.clone(),
        },
    )?;
    let mut rows = String::from("event_id,class,sample_time,df_t3,df_t2,df_t1\n");
    for s in &memory.samples {
        rows.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.event_id, s.target_class, s.sample_time, s.window.0[0], s.window.0[1], s.window.0[2]
        ));
    }
    write_atomic(&out.join("replay_samples.csv"), &rows)?;
    println!(
        "gen-data: {} scenarios, {} classes, {} samples -> {}",
        memory.scenarios.len(),
        memory.table.n_classes(),
        memory.samples.len(),
        out.display()
    );
    Ok(())
}

fn build_model(cfg: &PipelineConfig, n_classes: usize, init_seed: u64) -> VqcModel {
    let feature_map = FeatureMapSpec {
        n_qubits: 3,
        full_scale_hz: cfg.model.full_scale_hz,
        repetitions: cfg.model.repetitions,
    };
    let ansatz = AnsatzSpec::linear(cfg.model.layers);
    let params = VqcParams::random(&ansatz, 3, init_seed);
    VqcModel::new(feature_map, ansatz, params, n_classes)
}

fn cmd_train(data: &Path, config_path: &Path, out: &Path, seed: Option<u64>) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(data)?;
    let init_seed = seed.unwrap_or(cfg.model.init_seed);
    let mut train_cfg = cfg.train.clone();
    if let Some(s) = seed {
        train_cfg.seed = s;
    }
    let (train_set, _) = split_dataset(&replay.memory, cfg.split.n_test_events, cfg.split.seed)?;
    let model = build_model(&cfg, replay.memory.table.n_classes(), init_seed);
    let (trained, history) = train(&model, &train_set, &train_cfg)?;
    let final_loss = *history.last().unwrap();
    save_toml(
        &out.join("model.toml"),
        &ModelDocument::from_model(&trained, train_cfg.seed, init_seed, final_loss),
    )?;
    let mut rows = String::from("epoch,loss\n");
    for (epoch, loss) in history.iter().enumerate() {
        rows.push_str(&format!("{epoch},{loss}\n"));
    }
    write_atomic(&out.join("loss_history.csv"), &rows)?;
    println!(
        "train: {} samples, {} epochs, loss {:.6} -> {}",
        train_set.len(),
        train_cfg.epochs,
        final_loss,
        out.display()
    );
    Ok(())
}

fn cmd_eval(
    data: &Path,
    model_dir: &Path,
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(data)?;
    let model = load_model(model_dir)?.to_model();
    let base_seed = seed.unwrap_or(cfg.eval.base_seed);
    let (_, test_set) = split_dataset(&replay.memory, cfg.split.n_test_events, cfg.split.seed)?;
    let exact = evaluate_accuracy_exact(&model, &test_set)?;
    let mut rows = String::from("backend,accuracy\n");
    rows.push_str(&format!("exact,{exact}\n"));
    let mut summary = format!("eval: exact {exact:.4}");
    for &shots in &cfg.eval.shots_list {
        let acc = evaluate_accuracy(&model, &test_set, shots, base_seed)?;
        rows.push_str(&format!("shots_{shots},{acc}\n"));
        summary.push_str(&format!(", {shots} shots {acc:.4}"));
    }
    write_atomic(&out.join("accuracy.csv"), &rows)?;
    println!("{summary} -> {}", out.display());
    Ok(())
}

fn cmd_sweep(
    data: &Path,
    model_dir: &Path,
    config_path: &Path,
    out: &Path,
    seed: Option<u64>,
) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(data)?;
    let model = load_model(model_dir)?.to_model();
    let base_seed = seed.unwrap_or(cfg.eval.base_seed);
    let (_, test_set) = split_dataset(&replay.memory, cfg.split.n_test_events, cfg.split.seed)?;

    let reports = shots_sweep(
        &model,
        &test_set,
        &cfg.eval.shots_list,
        cfg.eval.runs_per_config,
        base_seed,
    )?;
    let mut rows = String::from("shots,run,accuracy\n");
    for r in &reports {
        for (run, acc) in r.runs.iter().enumerate() {
            rows.push_str(&format!("{},{},{}\n", r.shots, run, acc));
        }
    }
    write_atomic(&out.join("shots_sweep.csv"), &rows)?;
    let mut stat_rows = String::from("shots,min,mean,max\n");
    for r in &reports {
        stat_rows.push_str(&format!("{},{},{},{}\n", r.shots, r.min, r.mean, r.max));
    }
    write_atomic(&out.join("shots_sweep_stats.csv"), &stat_rows)?;

    let grids = event_heatmap(
        &model,
        &test_set,
        &cfg.eval.shots_list,
        cfg.eval.runs_per_config,
        base_seed,
    )?;
    let mut heat = String::from("event_id,shots,run,correct\n");
    for g in &grids {
        for (si, &shots) in g.shots_configs.iter().enumerate() {
            for (run, &ok) in g.grid[si].iter().enumerate() {
                heat.push_str(&format!(
                    "{},{},{},{}\n",
                    g.event_id,
                    shots,
                    run,
                    if ok { 1 } else { 0 }
                ));
            }
        }
    }
    write_atomic(&out.join("event_heatmap.csv"), &heat)?;
    let means: Vec<String> = reports
        .iter()
        .map(|r| format!("{}:{:.3}", r.shots, r.mean))
        .collect();
    println!(
        "sweep-shots: mean accuracy {} over {} runs, {} event grids -> {}",
        means.join(" "),
        cfg.eval.runs_per_config,
        grids.len(),
        out.display()
    );
    Ok(())
}

fn write_trace(path: &Path, result: &SimResult, decimate: usize) -> Result<()> {
    let mut rows = String::from("t,delta_f_pu,f_hz,p_m_pu,p_c_pu\n");
    for (i, s) in result.samples.iter().enumerate() {
        if i % decimate.max(1) == 0 || i == result.samples.len() - 1 {
            rows.push_str(&format!(
                "{},{},{},{},{}\n",
                s.t,
                s.delta_f_pu,
                result.f_base_hz + s.delta_f_pu * result.f_base_hz,
                s.p_m_pu,
                s.p_c_pu
            ));
        }
    }
    write_atomic(path, &rows)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    event: u32,
    data: &Path,
    model_dir: &Path,
    config_path: &Path,
    out: &Path,
    shots: Option<u64>,
    seed: Option<u64>,
    decimate: usize,
) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(data)?;
    let model = load_model(model_dir)?.to_model();
    let (scenario, _) = find_scenario(&replay.memory, event)?;
    let backend = match shots {
        None => Backend::Exact,
        Some(n) => Backend::Shots {
            shots: n,
            seed: seed.unwrap_or(cfg.eval.base_seed),
        },
    };
    let deploy = DeployConfig {
        scenario,
        sim: cfg.sim,
        sampling_period_s: cfg.replay.sampling_period_s,
        update_period_s: cfg.deploy.update_period_s,
        backend,
        hold_band_hz: cfg.deploy.hold_band_hz,
    };
    let (result, decisions) = closed_loop_simulate(&model, &replay.memory.table, &deploy)?;
    write_trace(&out.join(format!("sim_event_{event}.csv")), &result, decimate)?;
    let mut rows = String::from("t,df_t3,df_t2,df_t1,class,kp,ki\n");
    for d in &decisions {
        rows.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            d.t, d.window.0[0], d.window.0[1], d.window.0[2], d.class, d.gains.kp, d.gains.ki
        ));
    }
    write_atomic(&out.join(format!("decisions_event_{event}.csv")), &rows)?;
    println!(
        "simulate: event {event}, nadir {:.4} Hz, settling {:.2} s, ISE {:.3e}, {} decisions -> {}",
        result.metrics.nadir_hz,
        result.metrics.settling_time_s,
        result.metrics.ise,
        decisions.len(),
        out.display()
    );
    Ok(())
}

fn cmd_compare(event: u32, data: &Path, config_path: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(data)?;
    let (scenario, _) = find_scenario(&replay.memory, event)?;
    let report = compare_optimal_suboptimal(&scenario, &replay.memory.table, cfg.cost, &cfg.sim)?;
    let mut rows =
        String::from("variant,class,kp,ki,ise,nadir_hz,settling_time_s,overshoot_pu\n");
    for (variant, class, run) in [
        ("optimal", report.optimal_class, &report.optimal),
        ("suboptimal", report.suboptimal_class, &report.suboptimal),
    ] {
        let gains = replay.memory.table.gains(class);
        rows.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            variant,
            class,
            gains.kp,
            gains.ki,
            run.metrics.ise,
            run.metrics.nadir_hz,
            run.metrics.settling_time_s,
            run.metrics.overshoot_pu
        ));
    }
    write_atomic(&out.join(format!("compare_event_{event}.csv")), &rows)?;
    println!(
        "compare: event {event}, optimal class {} ISE {:.3e} nadir {:.4} Hz vs suboptimal class {} ISE {:.3e} nadir {:.4} Hz -> {}",
        report.optimal_class,
        report.optimal.metrics.ise,
        report.optimal.metrics.nadir_hz,
        report.suboptimal_class,
        report.suboptimal.metrics.ise,
        report.suboptimal.metrics.nadir_hz,
        out.display()
    );
    Ok(())
}

fn cmd_stats(input: &Path, config_path: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config_path)?;
    let replay = load_replay(input)?;
    let model = load_model(input)?.to_model();
    let (_, test_set) = split_dataset(&replay.memory, cfg.split.n_test_events, cfg.split.seed)?;
    let mut test_ids: Vec<u32> = test_set.iter().map(|s| s.event_id).collect();
    test_ids.sort_unstable();
    test_ids.dedup();

    let mut results = Vec::new();
    let mut rows = String::from("event_id,ise,nadir_hz,settling_time_s,overshoot_pu\n");
    for &id in &test_ids {
        let (scenario, _) = find_scenario(&replay.memory, id)?;
        let deploy = DeployConfig {
            scenario,
            sim: cfg.sim,
            sampling_period_s: cfg.replay.sampling_period_s,
            update_period_s: cfg.deploy.update_period_s,
            backend: Backend::Exact,
            hold_band_hz: cfg.deploy.hold_band_hz,
        };
        let (result, _) = closed_loop_simulate(&model, &replay.memory.table, &deploy)?;
        rows.push_str(&format!(
            "{},{},{},{},{}\n",
            id,
            result.metrics.ise,
            result.metrics.nadir_hz,
            result.metrics.settling_time_s,
            result.metrics.overshoot_pu
        ));
        results.push(result);
    }
    let stats = fleet_statistics(&results, cfg.deploy.pm_offset_pu);
    write_atomic(&out.join("fleet_events.csv"), &rows)?;
    let stat_rows = format!(
        "freq_min_hz,freq_mean_hz,freq_max_hz,pm_min_pu,pm_mean_pu,pm_max_pu\n{},{},{},{},{},{}\n",
        stats.freq_min_hz,
        stats.freq_mean_hz,
        stats.freq_max_hz,
        stats.pm_min_pu,
        stats.pm_mean_pu,
        stats.pm_max_pu
    );
    write_atomic(&out.join("fleet_stats.csv"), &stat_rows)?;
    println!(
        "stats: {} closed-loop runs, frequency [{:.4}, {:.4}] Hz mean {:.4}, Pm mean {:.3} pu -> {}",
        results.len(),
        stats.freq_min_hz,
        stats.freq_max_hz,
        stats.freq_mean_hz,
        stats.pm_mean_pu,
        out.display()
    );
    Ok(())
}
