//! Execution of P-system dynamics over a [`SystemState`]: maximally-parallel
//! rewriting in abstract mode, reaction–diffusion–swelling integration in
//! kinetic mode, scheduled interventions, halting detection and trace
//! recording.

mod abstract_step;
mod interventions;
mod kinetic;
mod trace;

pub use abstract_step::{applicable, maximal_step, MaximalStepOutcome};
pub use interventions::{
    apply_intervention, close_expired_pores, dc_pulse, electroporate, insert_channel, microinject,
    DcPulseOutcome, Intervention, ScheduledIntervention,
};
pub use kinetic::{
    diffusion_step, effective_permeability, reaction_step, swelling_and_burst, DiffusionSolver,
};
pub use trace::{CompartmentSnapshot, HaltReason, Sample, Trace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{sort_events, Error, Event, EventKind, Mode, Result, SystemState};

/// Per-step relative change below which a kinetic system counts as quiet.
pub const QUIESCENCE_TOL: f64 = 1e-12;

/// How `in`-targeted products choose a destination in abstract mode. Only
/// the uniform-random-child policy is defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InTargetPolicy {
    #[default]
    RandomChild,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbstractConfig {
    pub max_steps: usize,
    pub rng_seed: u64,
    pub in_target_policy: InTargetPolicy,
    pub sample_every: usize,
}

impl Default for AbstractConfig {
    fn default() -> Self {
        AbstractConfig {
            max_steps: 1000,
            rng_seed: 0,
            in_target_policy: InTargetPolicy::RandomChild,
            sample_every: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KineticConfig {
    /// Step size in seconds.
    pub dt: f64,
    pub max_steps: usize,
    /// Effective/initial volume ratio past which a compartment bursts.
    /// 1.06 corresponds to a few percent critical area strain.
    pub burst_volume_ratio: f64,
    /// fL of swelling per amol of accumulated gas.
    pub gas_molar_volume_factor: f64,
    pub diffusion_solver: DiffusionSolver,
    pub sample_every: usize,
}

impl Default for KineticConfig {
    fn default() -> Self {
        KineticConfig {
            dt: 0.01,
            max_steps: 10_000,
            burst_volume_ratio: 1.06,
            gas_molar_volume_factor: 0.025,
            diffusion_solver: DiffusionSolver::default(),
            sample_every: 1,
        }
    }
}

impl KineticConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.burst_volume_ratio > 1.0) {
            return Err(Error::InvalidArgument(format!(
                "burst_volume_ratio must be > 1, got {}",
                self.burst_volume_ratio
            )));
        }
        if !(self.gas_molar_volume_factor >= 0.0) {
            return Err(Error::InvalidArgument(
                "gas_molar_volume_factor must be >= 0".into(),
            ));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunConfig {
    Abstract(AbstractConfig),
    Kinetic(KineticConfig),
}

impl RunConfig {
    pub fn mode(&self) -> Mode {
        match self {
            RunConfig::Abstract(_) => Mode::Abstract,
            RunConfig::Kinetic(_) => Mode::Kinetic,
        }
    }

    pub fn sample_every(&self) -> usize {
        match self {
            RunConfig::Abstract(c) => c.sample_every,
            RunConfig::Kinetic(c) => c.sample_every,
        }
    }
}

fn step_error(op: &'static str, step: usize) -> impl FnOnce(Error) -> Error {
    move |source| Error::StepFailed { op, step, source: Box::new(source) }
}

fn check_schedule(schedule: &[ScheduledIntervention]) -> Result<()> {
    for pair in schedule.windows(2) {
        if pair[1].time < pair[0].time {
            return Err(Error::InvalidArgument(
                "intervention schedule times must be nondecreasing".into(),
            ));
        }
    }
    Ok(())
}

/// Run the system to halt/quiescence or the step cap, recording a trace.
/// Identical (state, config, schedule) produce bit-identical traces.
pub fn run(
    state: &mut SystemState,
    config: &RunConfig,
    schedule: &[ScheduledIntervention],
) -> Result<Trace> {
    state.require_mode(config.mode())?;
    check_schedule(schedule)?;
    match config {
        RunConfig::Abstract(cfg) => run_abstract(state, cfg, schedule),
        RunConfig::Kinetic(cfg) => run_kinetic(state, cfg, schedule),
    }
}

fn run_abstract(
    state: &mut SystemState,
    cfg: &AbstractConfig,
    schedule: &[ScheduledIntervention],
) -> Result<Trace> {
    if cfg.sample_every == 0 {
        return Err(Error::InvalidArgument("sample_every must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let t0 = state.clock;
    let mut samples = vec![Sample::capture(state, 0.0)];
    let mut events: Vec<Event> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut halt = HaltReason::MaxSteps;
    let mut steps_run = 0;
    let mut next_due = 0;

    for step in 1..=cfg.max_steps {
        while next_due < schedule.len() && schedule[next_due].time <= state.clock {
            let fired = apply_intervention(state, &schedule[next_due].intervention, &mut warnings)
                .map_err(step_error("intervention", step))?;
            events.extend(fired);
            next_due += 1;
        }
        let outcome = maximal_step(state, &mut rng).map_err(step_error("maximal_step", step))?;
        if outcome.halted {
            halt = HaltReason::Halt;
            events.push(Event::new(state.clock, EventKind::Halt, state.environment.id.clone()));
            break;
        }
        steps_run = step;
        state.advance_clock(t0 + step as f64);
        if step % cfg.sample_every == 0 {
            samples.push(Sample::capture(state, 0.0));
        }
    }

    if samples.last().map(|s| s.time) != Some(state.clock) {
        samples.push(Sample::capture(state, 0.0));
    }
    sort_events(&mut events);
    Ok(Trace {
        mode: Mode::Abstract,
        seed: cfg.rng_seed,
        dt: None,
        steps_run,
        sample_every: cfg.sample_every,
        halt,
        species: state.species.names().map(String::from).collect(),
        samples,
        events,
        warnings,
    })
}

fn run_kinetic(
    state: &mut SystemState,
    cfg: &KineticConfig,
    schedule: &[ScheduledIntervention],
) -> Result<Trace> {
    cfg.validate()?;
    let t0 = state.clock;
    let factor = cfg.gas_molar_volume_factor;
    let mut samples = vec![Sample::capture(state, factor)];
    let mut events: Vec<Event> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();
    let mut halt = HaltReason::MaxSteps;
    let mut steps_run = cfg.max_steps;
    let mut next_due = 0;

    for step in 1..=cfg.max_steps {
        let mut fired_intervention = false;
        while next_due < schedule.len() && schedule[next_due].time <= state.clock {
            let fired = apply_intervention(state, &schedule[next_due].intervention, &mut warnings)
                .map_err(step_error("intervention", step))?;
            events.extend(fired);
            fired_intervention = true;
            next_due += 1;
        }
        events.extend(close_expired_pores(state));

        let act_r =
            reaction_step(state, cfg.dt, &mut warnings).map_err(step_error("reaction", step))?;
        let act_d = diffusion_step(state, cfg.dt, cfg.diffusion_solver, &mut warnings)
            .map_err(step_error("diffusion", step))?;
        let burst_events =
            swelling_and_burst(state, cfg.burst_volume_ratio, cfg.gas_molar_volume_factor)
                .map_err(step_error("swelling", step))?;
        let had_events = fired_intervention || !burst_events.is_empty();
        events.extend(burst_events);

        let activity = act_r.max(act_d);
        let idle = !had_events && next_due == schedule.len();

        if idle && activity == 0.0 {
            // the step was an identity; do not count it or advance time
            halt = HaltReason::Quiescence;
            steps_run = step - 1;
            events.push(Event::new(state.clock, EventKind::Halt, state.environment.id.clone()));
            break;
        }
        state.advance_clock(t0 + step as f64 * cfg.dt);
        if step % cfg.sample_every == 0 {
            samples.push(Sample::capture(state, factor));
        }
        if idle && activity < QUIESCENCE_TOL {
            halt = HaltReason::Quiescence;
            steps_run = step;
            events.push(Event::new(state.clock, EventKind::Halt, state.environment.id.clone()));
            break;
        }
    }

    if samples.last().map(|s| s.time) != Some(state.clock) {
        samples.push(Sample::capture(state, factor));
    }
    sort_events(&mut events);
    Ok(Trace {
        mode: Mode::Kinetic,
        seed: state.rng_seed,
        dt: Some(cfg.dt),
        steps_run,
        sample_every: cfg.sample_every,
        halt,
        species: state.species.names().map(String::from).collect(),
        samples,
        events,
        warnings,
    })
}
