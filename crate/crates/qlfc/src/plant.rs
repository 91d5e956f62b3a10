//! Time-domain simulation of the diesel-generator secondary frequency loop.
//!
//! The loop is the classic cascade: PI controller and droop feed a governor
//! lag, the governor feeds the engine lag, and the net power imbalance drives
//! the inertia/damping block that produces the frequency deviation. All
//! quantities are per-unit internally; Hz appears only at reporting
//! boundaries (Δf_hz = Δf_pu · f_base).
//!
//! Integration is fixed-step classic Runge-Kutta. The load disturbance is
//! piecewise constant, sampled at step boundaries.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Plant constants. All strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    /// Governor time constant, seconds.
    pub t_governor: f64,
    /// Engine actuator time constant, seconds.
    pub t_engine: f64,
    /// Inertia coefficient, per-unit · seconds.
    pub inertia: f64,
    /// Load damping coefficient, per-unit.
    pub damping: f64,
    /// Droop, per-unit.
    pub droop: f64,
    /// Nominal frequency, Hz.
    pub f_base_hz: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        PlantParams {
            t_governor: 0.1,
            t_engine: 0.5,
            inertia: 10.0,
            damping: 0.8,
            droop: 0.05,
            f_base_hz: 60.0,
        }
    }
}

/// PI controller gains, both nonnegative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiGains {
    pub kp: f64,
    pub ki: f64,
}

impl PiGains {
    pub fn new(kp: f64, ki: f64) -> Self {
        PiGains { kp, ki }
    }
}

/// Dynamic state of the loop.
///
/// `integ` accumulates ∫ Ki·e dt with the gain inside the integral, so a Ki
/// change mid-run affects only future accumulation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PlantState {
    /// Frequency deviation, per-unit.
    pub delta_f: f64,
    /// Governor internal state, per-unit.
    pub x_gov: f64,
    /// Engine mechanical power deviation, per-unit.
    pub x_eng: f64,
    /// Accumulated integral term, per-unit.
    pub integ: f64,
    /// Simulation time, seconds.
    pub t: f64,
}

impl PlantState {
    fn is_finite(&self) -> bool {
        self.delta_f.is_finite()
            && self.x_gov.is_finite()
            && self.x_eng.is_finite()
            && self.integ.is_finite()
    }
}

/// Time derivative of the four dynamic states.
#[derive(Debug, Clone, Copy)]
pub struct StateDerivative {
    pub d_delta_f: f64,
    pub d_x_gov: f64,
    pub d_x_eng: f64,
    pub d_integ: f64,
}

/// Regulation error: setpoint 0, so e = −Δf.
fn regulation_error(state: &PlantState) -> f64 {
    -state.delta_f
}

/// Controller output ΔP_ref = Kp·e + I.
pub fn control_reference(state: &PlantState, gains: &PiGains) -> f64 {
    gains.kp * regulation_error(state) + state.integ
}

/// Composite governor input ΔP_c = ΔP_ref − Δf/R.
pub fn composite_signal(state: &PlantState, gains: &PiGains, p: &PlantParams) -> f64 {
    control_reference(state, gains) - state.delta_f / p.droop
}

/// Assembled loop derivatives for a constant load disturbance.
pub fn derivatives(
    state: &PlantState,
    gains: &PiGains,
    delta_pl: f64,
    p: &PlantParams,
) -> StateDerivative {
    let e = regulation_error(state);
    let p_c = composite_signal(state, gains, p);
    StateDerivative {
        d_x_gov: (p_c - state.x_gov) / p.t_governor,
        d_x_eng: (state.x_gov - state.x_eng) / p.t_engine,
        d_delta_f: (state.x_eng - delta_pl - p.damping * state.delta_f) / p.inertia,
        d_integ: gains.ki * e,
    }
}

/// A sequence of load-step applications, times strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadEvent {
    pub id: u32,
    /// (time in seconds, load step in per-unit) pairs.
    pub steps: Vec<(f64, f64)>,
}

impl LoadEvent {
    pub fn new(id: u32, steps: Vec<(f64, f64)>) -> Self {
        debug_assert!(steps.windows(2).all(|w| w[0].0 < w[1].0));
        debug_assert!(steps.iter().all(|s| s.0 >= 0.0));
        LoadEvent { id, steps }
    }

    /// Total load disturbance active at time `t`.
    pub fn load_at(&self, t: f64) -> f64 {
        self.steps
            .iter()
            .take_while(|(time, _)| *time <= t + 1e-9)
            .map(|(_, delta)| delta)
            .sum()
    }

    /// Onset of the last step, or 0 for a quiescent event.
    pub fn last_onset(&self) -> f64 {
        self.steps.last().map_or(0.0, |s| s.0)
    }
}

/// Fixed-step RK4 integrator with switchable gains.
#[derive(Debug, Clone)]
pub struct PlantSim {
    params: PlantParams,
    gains: PiGains,
    state: PlantState,
}

impl PlantSim {
    pub fn new(params: PlantParams, gains: PiGains) -> Self {
        PlantSim {
            params,
            gains,
            state: PlantState::default(),
        }
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn gains(&self) -> PiGains {
        self.gains
    }

    pub fn params(&self) -> &PlantParams {
        &self.params
    }

    /// Pin the recorded time to the step lattice; avoids accumulation drift
    /// on long horizons.
    pub fn align_time(&mut self, t: f64) {
        self.state.t = t;
    }

    /// Switch gains without a step in the controller output: the integrator
    /// absorbs the proportional-term jump (Kp_old − Kp_new)·e.
    pub fn set_gains_bumpless(&mut self, gains: PiGains) {
        let e = regulation_error(&self.state);
        self.state.integ += (self.gains.kp - gains.kp) * e;
        self.gains = gains;
    }

    /// Advance one RK4 step under a constant load disturbance.
    pub fn step(&mut self, delta_pl: f64, dt: f64) -> Result<()> {
        let s = self.state;
        let k1 = derivatives(&s, &self.gains, delta_pl, &self.params);
        let s2 = advance(&s, &k1, dt / 2.0);
        let k2 = derivatives(&s2, &self.gains, delta_pl, &self.params);
        let s3 = advance(&s, &k2, dt / 2.0);
        let k3 = derivatives(&s3, &self.gains, delta_pl, &self.params);
        let s4 = advance(&s, &k3, dt);
        let k4 = derivatives(&s4, &self.gains, delta_pl, &self.params);

        self.state.delta_f +=
            dt / 6.0 * (k1.d_delta_f + 2.0 * k2.d_delta_f + 2.0 * k3.d_delta_f + k4.d_delta_f);
        self.state.x_gov +=
            dt / 6.0 * (k1.d_x_gov + 2.0 * k2.d_x_gov + 2.0 * k3.d_x_gov + k4.d_x_gov);
        self.state.x_eng +=
            dt / 6.0 * (k1.d_x_eng + 2.0 * k2.d_x_eng + 2.0 * k3.d_x_eng + k4.d_x_eng);
        self.state.integ +=
            dt / 6.0 * (k1.d_integ + 2.0 * k2.d_integ + 2.0 * k3.d_integ + k4.d_integ);
        self.state.t += dt;

        if !self.state.is_finite() {
            return Err(Error::Diverged { t: self.state.t });
        }
        Ok(())
    }
}

fn advance(s: &PlantState, d: &StateDerivative, h: f64) -> PlantState {
    PlantState {
        delta_f: s.delta_f + h * d.d_delta_f,
        x_gov: s.x_gov + h * d.d_x_gov,
        x_eng: s.x_eng + h * d.d_x_eng,
        integ: s.integ + h * d.d_integ,
        t: s.t + h,
    }
}

/// Horizon and step size of a batch run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub duration_s: f64,
    pub dt_s: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            duration_s: 60.0,
            dt_s: 1e-3,
        }
    }
}

/// One recorded sample of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub delta_f_pu: f64,
    pub p_m_pu: f64,
    pub p_c_pu: f64,
}

/// Scalar performance metrics of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Minimum absolute frequency reached, Hz.
    pub nadir_hz: f64,
    /// Duration after the final disturbance until |Δf| last leaves the 2% band.
    pub settling_time_s: f64,
    /// ∫ Δf² dt, per-unit²·s.
    pub ise: f64,
    /// ∫ t·|Δf| dt, per-unit·s².
    pub itae: f64,
    /// Largest counter-swing past zero, per-unit.
    pub overshoot_pu: f64,
}

/// A finished run: regular samples plus metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub dt: f64,
    pub samples: Vec<Sample>,
    pub metrics: Metrics,
    /// Nominal frequency used for Hz reporting.
    pub f_base_hz: f64,
}

impl SimResult {
    /// Δf in Hz at sample index i.
    pub fn delta_f_hz(&self, i: usize) -> f64 {
        self.samples[i].delta_f_pu * self.f_base_hz
    }
}

/// Simulate a load event from zero initial state under fixed gains.
pub fn simulate(
    p: &PlantParams,
    gains: &PiGains,
    event: &LoadEvent,
    settings: &SimSettings,
) -> Result<SimResult> {
    if settings.duration_s <= event.last_onset() {
        return Err(Error::HorizonTooShort {
            duration: settings.duration_s,
            last_event: event.last_onset(),
        });
    }
    let dt = settings.dt_s;
    let n_steps = (settings.duration_s / dt).round() as usize;
    let mut sim = PlantSim::new(*p, *gains);
    let mut samples = Vec::with_capacity(n_steps + 1);
    samples.push(sample_of(&sim));
    for i in 0..n_steps {
        let t = i as f64 * dt;
        sim.step(event.load_at(t), dt)?;
        // recompute t from the index so long horizons do not drift
        sim.align_time((i + 1) as f64 * dt);
        samples.push(sample_of(&sim));
    }
    let metrics = metrics_after(&samples, event.last_onset(), p.f_base_hz);
    Ok(SimResult {
        dt,
        samples,
        metrics,
        f_base_hz: p.f_base_hz,
    })
}

fn sample_of(sim: &PlantSim) -> Sample {
    Sample {
        t: sim.state.t,
        delta_f_pu: sim.state.delta_f,
        p_m_pu: sim.state.x_eng,
        p_c_pu: composite_signal(&sim.state, &sim.gains, &sim.params),
    }
}

/// Metrics over a whole series, treating t = 0 as the disturbance instant.
pub fn metrics(samples: &[Sample], f_base_hz: f64) -> Metrics {
    metrics_after(samples, 0.0, f_base_hz)
}

/// Metrics with the settling window starting at `after` seconds (the final
/// disturbance onset). Integrals use the trapezoid rule over the full series.
pub fn metrics_after(samples: &[Sample], after: f64, f_base_hz: f64) -> Metrics {
    assert!(!samples.is_empty(), "metrics need a nonempty series");
    let min_df = samples
        .iter()
        .map(|s| s.delta_f_pu)
        .fold(f64::INFINITY, f64::min);
    let nadir_hz = f_base_hz + min_df * f_base_hz;

    let mut ise = 0.0;
    let mut itae = 0.0;
    for w in samples.windows(2) {
        let h = w[1].t - w[0].t;
        ise += 0.5 * h * (w[0].delta_f_pu.powi(2) + w[1].delta_f_pu.powi(2));
        itae += 0.5 * h * (w[0].t * w[0].delta_f_pu.abs() + w[1].t * w[1].delta_f_pu.abs());
    }

    let peak = samples
        .iter()
        .filter(|s| s.t >= after)
        .map(|s| s.delta_f_pu.abs())
        .fold(0.0, f64::max);
    let settling_time_s = if peak > 0.0 {
        let band = 0.02 * peak;
        samples
            .iter()
            .filter(|s| s.t >= after && s.delta_f_pu.abs() > band)
            .map(|s| s.t - after)
            .fold(0.0, f64::max)
    } else {
        0.0
    };

    // counter-swing against the dominant excursion direction
    let signed_peak = samples
        .iter()
        .map(|s| s.delta_f_pu)
        .fold(
            0.0,
            |acc: f64, v| if v.abs() > acc.abs() { v } else { acc },
        );
    let overshoot_pu = if signed_peak == 0.0 {
        0.0
    } else {
        let dir = -signed_peak.signum();
        samples
            .iter()
            .map(|s| dir * s.delta_f_pu)
            .fold(0.0, f64::max)
    };

    Metrics {
        nadir_hz,
        settling_time_s,
        ise,
        itae,
        overshoot_pu,
    }
}
