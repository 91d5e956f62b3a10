//! Expert data generation: exhaustive gain tuning, lookup-table construction,
//! and the replay memory of labeled frequency windows.
//!
//! The expert simulates every (Kp, Ki) grid cell on every scenario, keeps the
//! best-cost pair per scenario, compresses the distinct optima into a lookup
//! table of at most 8 entries (one per basis state), and then replays each
//! scenario under its assigned gains to harvest sliding 3-sample windows of
//! the frequency deviation as training inputs.

use crate::error::{Error, Result};
use crate::plant::{simulate, LoadEvent, PiGains, PlantParams, SimSettings};
use crate::vqc::FeatureWindow;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Candidate gain values, ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainGrid {
    pub kp_values: Vec<f64>,
    pub ki_values: Vec<f64>,
}

impl Default for GainGrid {
    fn default() -> Self {
        GainGrid {
            kp_values: vec![0.1, 0.3, 0.5, 1.0, 2.0],
            ki_values: vec![0.1, 0.5, 1.0, 2.0, 5.0],
        }
    }
}

impl GainGrid {
    pub fn cells(&self) -> impl Iterator<Item = PiGains> + '_ {
        self.kp_values.iter().flat_map(move |&kp| {
            self.ki_values.iter().map(move |&ki| PiGains::new(kp, ki))
        })
    }

    pub fn len(&self) -> usize {
        self.kp_values.len() * self.ki_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kp_values.is_empty() || self.ki_values.is_empty()
    }
}

/// Scalar cost used to rank gain pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CostKind {
    Ise,
    Itae,
}

impl Default for CostKind {
    fn default() -> Self {
        CostKind::Ise
    }
}

/// One training or test case: a load disturbance on a specific operating
/// condition of the plant (inertia varies with the number of online units).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub event: LoadEvent,
    pub plant: PlantParams,
}

/// Cost of one gain pair on one scenario; unstable runs score +∞.
pub fn evaluate_cost(
    scenario: &Scenario,
    gains: &PiGains,
    cost: CostKind,
    sim: &SimSettings,
) -> Result<f64> {
    match simulate(&scenario.plant, gains, &scenario.event, sim) {
        Ok(result) => Ok(match cost {
            CostKind::Ise => result.metrics.ise,
            CostKind::Itae => result.metrics.itae,
        }),
        Err(Error::Diverged { .. }) => Ok(f64::INFINITY),
        Err(other) => Err(other),
    }
}

/// True when `candidate` should replace `incumbent` under the tie rules
/// (lower cost, then lower Ki, then lower Kp).
fn beats(candidate: (f64, PiGains), incumbent: (f64, PiGains)) -> bool {
    let (c_cost, c) = candidate;
    let (i_cost, i) = incumbent;
    if c_cost != i_cost {
        return c_cost < i_cost;
    }
    if c.ki != i.ki {
        return c.ki < i.ki;
    }
    c.kp < i.kp
}

/// Exhaustively simulate every grid cell and return the winner and its cost.
pub fn grid_search(
    event: &LoadEvent,
    grid: &GainGrid,
    p: &PlantParams,
    cost: CostKind,
    sim: &SimSettings,
) -> Result<(PiGains, f64)> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let scenario = Scenario {
        event: event.clone(),
        plant: *p,
    };
    let mut best: Option<(f64, PiGains)> = None;
    for gains in grid.cells() {
        let c = evaluate_cost(&scenario, &gains, cost, sim)?;
        if c.is_infinite() {
            continue;
        }
        match best {
            Some(incumbent) if !beats((c, gains), incumbent) => {}
            _ => best = Some((c, gains)),
        }
    }
    match best {
        Some((c, gains)) => Ok((gains, c)),
        None => Err(Error::AllPairsUnstable),
    }
}

/// Class catalog: one (Kp, Ki) pair per class index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LookupTable {
    entries: Vec<PiGains>,
}

impl LookupTable {
    pub fn new(entries: Vec<PiGains>) -> Self {
        debug_assert!(entries.len() <= 8);
        LookupTable { entries }
    }

    pub fn entries(&self) -> &[PiGains] {
        &self.entries
    }

    pub fn n_classes(&self) -> usize {
        self.entries.len()
    }

    pub fn gains(&self, class: usize) -> PiGains {
        self.entries[class]
    }
}

/// Lookup table plus the class assigned to every scenario, in input order.
#[derive(Debug, Clone, PartialEq)]
pub struct TableAssignment {
    pub table: LookupTable,
    pub classes: Vec<usize>,
}

/// Grid-search every scenario, rank the distinct optima by how many
/// scenarios picked them, keep the top 8, and reassign any scenario whose
/// optimum was cut to the kept pair with the smallest cost increase.
pub fn build_lookup_table(
    scenarios: &[Scenario],
    grid: &GainGrid,
    cost: CostKind,
    sim: &SimSettings,
) -> Result<TableAssignment> {
    if scenarios.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let optima: Vec<(PiGains, f64)> = scenarios
        .par_iter()
        .map(|s| grid_search(&s.event, grid, &s.plant, cost, sim))
        .collect::<Result<_>>()?;

    // rank distinct winners: frequency descending, then lower Ki, lower Kp
    let mut distinct: Vec<(PiGains, usize)> = Vec::new();
    for (gains, _) in &optima {
        match distinct.iter_mut().find(|(g, _)| g == gains) {
            Some((_, count)) => *count += 1,
            None => distinct.push((*gains, 1)),
        }
    }
    distinct.sort_by(|(ga, ca), (gb, cb)| {
        cb.cmp(ca)
            .then(ga.ki.partial_cmp(&gb.ki).unwrap())
            .then(ga.kp.partial_cmp(&gb.kp).unwrap())
    });
    let kept: Vec<PiGains> = distinct.iter().take(8).map(|(g, _)| *g).collect();
    let table = LookupTable::new(kept);

    let classes: Vec<usize> = scenarios
        .par_iter()
        .zip(&optima)
        .map(|(scenario, (optimum, _))| {
            if let Some(idx) = table.entries().iter().position(|g| g == optimum) {
                return Ok(idx);
            }
            // optimum was cut: fall back to the surviving pair with minimal cost
            assign_min_cost_class(scenario, &table, cost, sim)
        })
        .collect::<Result<_>>()?;

    Ok(TableAssignment { table, classes })
}

/// Index of the table entry with minimal cost on this scenario; ties go to
/// the lower class index.
pub fn assign_min_cost_class(
    scenario: &Scenario,
    table: &LookupTable,
    cost: CostKind,
    sim: &SimSettings,
) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for (idx, gains) in table.entries().iter().enumerate() {
        let c = evaluate_cost(scenario, gains, cost, sim)?;
        if best.is_none() || c < best.unwrap().0 {
            best = Some((c, idx));
        }
    }
    Ok(best.expect("table is nonempty").1)
}

/// Window extraction configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplayConfig {
    /// Spacing between consecutive Δf samples, seconds.
    pub sampling_period_s: f64,
    /// Capture length from the final disturbance onset, seconds.
    pub capture_duration_s: f64,
}

impl Default for ReplayConfig {
    fn default() -> Self {
        ReplayConfig {
            sampling_period_s: 0.1,
            capture_duration_s: 1.0,
        }
    }
}

/// One labeled training sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplaySample {
    pub window: FeatureWindow,
    pub target_class: usize,
    pub event_id: u32,
    /// Time of the window's most recent sample, seconds.
    pub sample_time: f64,
}

/// Everything the generation run produced, with its configuration recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayMemory {
    pub samples: Vec<ReplaySample>,
    pub table: LookupTable,
    pub scenarios: Vec<Scenario>,
    /// Class per scenario, aligned with `scenarios`.
    pub classes: Vec<usize>,
    pub grid: GainGrid,
    pub cost: CostKind,
    pub sim: SimSettings,
    pub replay: ReplayConfig,
}

impl ReplayMemory {
    /// Samples as (window, class) pairs for the model layer.
    pub fn labeled(&self) -> Vec<(FeatureWindow, usize)> {
        self.samples
            .iter()
            .map(|s| (s.window, s.target_class))
            .collect()
    }
}

/// Simulate every scenario under its assigned gains and slice the captured
/// Δf samples (in Hz) into sliding 3-sample windows labeled with the class.
pub fn generate_replay(
    scenarios: &[Scenario],
    classes: &[usize],
    table: &LookupTable,
    grid: &GainGrid,
    cost: CostKind,
    sim: &SimSettings,
    replay: &ReplayConfig,
) -> Result<ReplayMemory> {
    assert_eq!(scenarios.len(), classes.len());
    let per_scenario: Vec<Vec<ReplaySample>> = scenarios
        .par_iter()
        .zip(classes)
        .map(|(scenario, &class)| {
            capture_windows(scenario, class, table.gains(class), sim, replay)
        })
        .collect::<Result<_>>()?;
    Ok(ReplayMemory {
        samples: per_scenario.into_iter().flatten().collect(),
        table: table.clone(),
        scenarios: scenarios.to_vec(),
        classes: classes.to_vec(),
        grid: grid.clone(),
        cost,
        sim: *sim,
        replay: *replay,
    })
}

fn capture_windows(
    scenario: &Scenario,
    class: usize,
    gains: PiGains,
    sim: &SimSettings,
    replay: &ReplayConfig,
) -> Result<Vec<ReplaySample>> {
    let onset = scenario.event.last_onset();
    let end = onset + replay.capture_duration_s;
    if end > sim.duration_s {
        return Err(Error::CaptureOutsideHorizon {
            start: onset,
            end,
            duration: sim.duration_s,
        });
    }
    let result = simulate(&scenario.plant, &gains, &scenario.event, sim)?;
    let n_capture = (replay.capture_duration_s / replay.sampling_period_s).round() as usize;
    let f_base = scenario.plant.f_base_hz;
    let df_hz: Vec<(f64, f64)> = (0..n_capture)
        .map(|k| {
            let t = onset + k as f64 * replay.sampling_period_s;
            let idx = (t / sim.dt_s).round() as usize;
            (t, result.samples[idx].delta_f_pu * f_base)
        })
        .collect();
    Ok(df_hz
        .windows(3)
        .map(|w| ReplaySample {
            window: FeatureWindow([w[0].1, w[1].1, w[2].1]),
            target_class: class,
            event_id: scenario.event.id,
            sample_time: w[2].0,
        })
        .collect())
}
