//! Closed-loop deployment of the trained model as a gain scheduler, plus the
//! comparison and fleet-statistics experiments.
//!
//! In deployment the plant runs at the integration step while the controller
//! samples Δf (in Hz) every sampling period. At each update instant the three
//! most recent samples (zero-padded at start) feed the classifier and the PI
//! gains switch to the selected table entry. The integrator absorbs the
//! proportional jump at every switch, so the controller output is continuous.

use crate::error::{Error, Result};
use crate::expert::{evaluate_cost, CostKind, LookupTable, Scenario};
use crate::plant::{
    metrics_after, PiGains, PlantSim, Sample, SimResult, SimSettings,
};
use crate::vqc::{Backend, FeatureWindow, VqcModel};
use serde::{Deserialize, Serialize};

/// Closed-loop run configuration.
#[derive(Debug, Clone)]
pub struct DeployConfig {
    pub scenario: Scenario,
    pub sim: SimSettings,
    /// Spacing of Δf samples fed to the window, seconds.
    pub sampling_period_s: f64,
    /// Gain-scheduling interval; a positive integer multiple of the sampling
    /// period, at least one integration step.
    pub update_period_s: f64,
    pub backend: Backend,
    /// Hold the current gains when every window sample is below this
    /// magnitude (Hz). Sub-resolution windows carry no regime information,
    /// so switching on them would chatter. 0 disables the hold.
    pub hold_band_hz: f64,
}

impl DeployConfig {
    fn validate(&self) -> Result<()> {
        let ratio = self.update_period_s / self.sampling_period_s;
        let near_integer = (ratio - ratio.round()).abs() < 1e-9 && ratio.round() >= 1.0;
        if !near_integer || self.update_period_s < self.sim.dt_s {
            return Err(Error::BadUpdatePeriod {
                update_period: self.update_period_s,
                sampling_period: self.sampling_period_s,
            });
        }
        Ok(())
    }
}

/// One gain-scheduling decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub t: f64,
    pub window: FeatureWindow,
    pub class: usize,
    pub gains: PiGains,
}

/// Run the plant under the classifier-scheduled gains.
///
/// Returns the trajectory (with metrics anchored at the final disturbance)
/// and the full decision log.
pub fn closed_loop_simulate(
    model: &VqcModel,
    table: &LookupTable,
    cfg: &DeployConfig,
) -> Result<(SimResult, Vec<DecisionRecord>)> {
    cfg.validate()?;
    let dt = cfg.sim.dt_s;
    let n_steps = (cfg.sim.duration_s / dt).round() as usize;
    let sample_every = (cfg.sampling_period_s / dt).round() as usize;
    let updates_per_sample = (cfg.update_period_s / cfg.sampling_period_s).round() as usize;
    let f_base = cfg.scenario.plant.f_base_hz;

    // window of the three most recent Δf samples in Hz, zero-padded at start
    let mut window = [0.0f64; 3];
    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut decision_count: u64 = 0;
    let mut sample_count: usize = 0;

    let decide = |window: [f64; 3],
                      t: f64,
                      sim: &mut PlantSim,
                      decision_count: &mut u64,
                      decisions: &mut Vec<DecisionRecord>|
     -> Result<()> {
        let backend = match cfg.backend {
            Backend::Exact => Backend::Exact,
            Backend::Shots { shots, seed } => Backend::Shots {
                shots,
                seed: seed.wrapping_add(*decision_count),
            },
        };
        *decision_count += 1;
        let class = model.predict_class(&FeatureWindow(window), backend)?;
        // sub-resolution windows carry no regime information: hold the gains
        let informative = window.iter().any(|w| w.abs() >= cfg.hold_band_hz);
        let gains = if informative {
            table.gains(class)
        } else {
            sim.gains()
        };
        if gains != sim.gains() {
            sim.set_gains_bumpless(gains);
        }
        decisions.push(DecisionRecord {
            t,
            window: FeatureWindow(window),
            class,
            gains,
        });
        Ok(())
    };

    // initial decision on the zero-padded window fixes the starting gains
    let mut sim = PlantSim::new(cfg.scenario.plant, table.gains(0));
    decide(window, 0.0, &mut sim, &mut decision_count, &mut decisions)?;

    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(sample_at(&sim));
    for i in 0..n_steps {
        let t = i as f64 * dt;
        sim.step(cfg.scenario.event.load_at(t), dt)?;
        sim.align_time((i + 1) as f64 * dt);
        samples.push(sample_at(&sim));

        if (i + 1) % sample_every == 0 {
            sample_count += 1;
            window = [window[1], window[2], sim.state().delta_f * f_base];
            if sample_count % updates_per_sample == 0 {
                decide(
                    window,
                    sim.state().t,
                    &mut sim,
                    &mut decision_count,
                    &mut decisions,
                )?;
            }
        }
    }
    let metrics = metrics_after(&samples, cfg.scenario.event.last_onset(), f_base);
    Ok((
        SimResult {
            dt,
            samples,
            metrics,
            f_base_hz: f_base,
        },
        decisions,
    ))
}

fn sample_at(sim: &PlantSim) -> Sample {
    Sample {
        t: sim.state().t,
        delta_f_pu: sim.state().delta_f,
        p_m_pu: sim.state().x_eng,
        p_c_pu: crate::plant::composite_signal(sim.state(), &sim.gains(), sim.params()),
    }
}

/// Paired static-gain runs of one scenario: its best table entry versus the
/// worst-cost other entry.
#[derive(Debug, Clone)]
pub struct ComparisonReport {
    pub optimal_class: usize,
    pub suboptimal_class: usize,
    pub optimal: SimResult,
    pub suboptimal: SimResult,
}

impl ComparisonReport {
    pub fn ise_delta(&self) -> f64 {
        self.suboptimal.metrics.ise - self.optimal.metrics.ise
    }

    pub fn nadir_delta_hz(&self) -> f64 {
        self.optimal.metrics.nadir_hz - self.suboptimal.metrics.nadir_hz
    }
}

/// Simulate a scenario under its cost-minimal table entry and under the
/// worst-cost other entry.
pub fn compare_optimal_suboptimal(
    scenario: &Scenario,
    table: &LookupTable,
    cost: CostKind,
    sim: &SimSettings,
) -> Result<ComparisonReport> {
    if table.n_classes() < 2 {
        return Err(Error::SingleClassTable {
            classes: table.n_classes(),
        });
    }
    let costs: Vec<f64> = table
        .entries()
        .iter()
        .map(|g| evaluate_cost(scenario, g, cost, sim))
        .collect::<Result<_>>()?;
    let optimal_class = costs
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let suboptimal_class = costs
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != optimal_class)
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    let optimal = crate::plant::simulate(
        &scenario.plant,
        &table.gains(optimal_class),
        &scenario.event,
        sim,
    )?;
    let suboptimal = crate::plant::simulate(
        &scenario.plant,
        &table.gains(suboptimal_class),
        &scenario.event,
        sim,
    )?;
    Ok(ComparisonReport {
        optimal_class,
        suboptimal_class,
        optimal,
        suboptimal,
    })
}

/// Pooled frequency and mechanical-power statistics over a fleet of runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleetStats {
    pub freq_min_hz: f64,
    pub freq_mean_hz: f64,
    pub freq_max_hz: f64,
    pub pm_min_pu: f64,
    pub pm_mean_pu: f64,
    pub pm_max_pu: f64,
}

/// Min/mean/max of frequency (Hz) and mechanical power (plus a reporting
/// offset, per-unit) pooled over every sample of every run.
pub fn fleet_statistics(results: &[SimResult], pm_offset_pu: f64) -> FleetStats {
    assert!(!results.is_empty(), "fleet statistics need at least one run");
    let mut freq = Pool::new();
    let mut pm = Pool::new();
    for r in results {
        for s in &r.samples {
            freq.push(r.f_base_hz + s.delta_f_pu * r.f_base_hz);
            pm.push(s.p_m_pu + pm_offset_pu);
        }
    }
    FleetStats {
        freq_min_hz: freq.min,
        freq_mean_hz: freq.mean(),
        freq_max_hz: freq.max,
        pm_min_pu: pm.min,
        pm_mean_pu: pm.mean(),
        pm_max_pu: pm.max,
    }
}

struct Pool {
    min: f64,
    max: f64,
    sum: f64,
    count: u64,
}

impl Pool {
    fn new() -> Self {
        Pool {
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            sum: 0.0,
            count: 0,
        }
    }

    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        self.sum += v;
        self.count += 1;
    }

    fn mean(&self) -> f64 {
        self.sum / self.count as f64
    }
}
