//! External interventions on a running system: DC-pulse lysis of outer
//! membranes, electroporation of the outer membrane, microinjection into a
//! compartment, and insertion of channel proteins into one membrane.

use serde::{Deserialize, Serialize};

use crate::model::{
    set_depths, Error, Event, EventKind, Mixture, Mode, Mvl, Pore, Result, SystemState,
};

/// A DC pulse lyses the outermost membrane of each target MVL: the root's
/// contents and gas spill into the environment and every former child is
/// liberated, undamaged, as an independent MVL.
#[derive(Debug, Clone, Default)]
pub struct DcPulseOutcome {
    pub events: Vec<Event>,
    /// Root ids of the newly independent MVLs, in liberation order.
    pub liberated: Vec<String>,
    /// Targets whose root was already lysed; recorded as no-ops.
    pub skipped_lysed: Vec<String>,
}

pub fn dc_pulse(state: &mut SystemState, targets: &[String]) -> Result<DcPulseOutcome> {
    for id in targets {
        if state.mvl(id).is_none() {
            return Err(Error::UnknownMvl(id.clone()));
        }
    }
    let clock = state.clock;
    let mut outcome = DcPulseOutcome::default();
    let mut liberated: Vec<Mvl> = Vec::new();
    for id in targets {
        let env = &mut state.environment;
        let mvl = state
            .mvls
            .iter_mut()
            .find(|m| m.id() == id.as_str())
            .expect("checked above");
        if !mvl.root.membrane_intact {
            outcome.skipped_lysed.push(id.clone());
            continue;
        }
        let payload = mvl.root.contents.clear();
        env.contents.merge(&payload);
        env.gas_accumulated += mvl.root.gas_accumulated;
        mvl.root.gas_accumulated = 0.0;
        mvl.root.membrane_intact = false;
        outcome
            .events
            .push(Event::new(clock, EventKind::DcLysis, id.clone()).with_payload(payload));
        for mut child in mvl.root.children.drain(..) {
            set_depths(&mut child, 1).expect("moving up");
            outcome.liberated.push(child.id.clone());
            liberated.push(Mvl::from_tree(child)?);
        }
    }
    state.mvls.extend(liberated);
    Ok(outcome)
}

/// Open a transient pore in the outermost membrane of one MVL: effective
/// permeability for every non-particle species is multiplied by `boost`
/// until `duration` seconds of simulated time have passed. Inner membranes
/// are untouched.
pub fn electroporate(
    state: &mut SystemState,
    mvl_id: &str,
    duration: f64,
    boost: f64,
) -> Result<Event> {
    state.require_mode(Mode::Kinetic)?;
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "electroporation duration must be > 0, got {duration}"
        )));
    }
    if !(boost >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "electroporation boost must be >= 1, got {boost}"
        )));
    }
    let clock = state.clock;
    let mvl = state
        .mvl_mut(mvl_id)
        .ok_or_else(|| Error::UnknownMvl(mvl_id.to_string()))?;
    if !mvl.root.membrane_intact {
        return Err(Error::LysedCompartment(mvl_id.to_string()));
    }
    mvl.root.pore = Some(Pore { boost, until: clock + duration });
    Ok(Event::new(clock, EventKind::ElectroporationOpen, mvl_id))
}

/// Clear expired pores, emitting close events stamped at their reseal time.
pub fn close_expired_pores(state: &mut SystemState) -> Vec<Event> {
    let clock = state.clock;
    let mut events = Vec::new();
    for mvl in &mut state.mvls {
        if let Some(pore) = mvl.root.pore {
            if pore.until <= clock {
                mvl.root.pore = None;
                events.push(Event::new(
                    pore.until,
                    EventKind::ElectroporationClose,
                    mvl.root.id.clone(),
                ));
            }
        }
    }
    events
}

/// Add `amount` of a species to one intact compartment. The injection event
/// is logged even for amount zero.
pub fn microinject(
    state: &mut SystemState,
    compartment_id: &str,
    species: &str,
    amount: f64,
) -> Result<Event> {
    if !(amount >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "injection amount must be >= 0, got {amount}"
        )));
    }
    state.species.require(species)?;
    if state.mode == Mode::Abstract && amount.fract() != 0.0 {
        return Err(Error::FractionalCount(amount));
    }
    let clock = state.clock;
    let compartment = state
        .find_compartment_mut(compartment_id)
        .ok_or_else(|| Error::UnknownCompartment(compartment_id.to_string()))?;
    if !compartment.membrane_intact {
        return Err(Error::LysedCompartment(compartment_id.to_string()));
    }
    compartment.contents.add(species, amount);
    let mut payload = Mixture::new();
    payload.set(species, amount);
    Ok(Event::new(clock, EventKind::Injection, compartment_id).with_payload(payload))
}

/// Give one membrane a per-species permeability override, as embedding a
/// transmembrane channel protein would. The override persists and applies
/// to that membrane only.
pub fn insert_channel(
    state: &mut SystemState,
    compartment_id: &str,
    species: &str,
    permeability: f64,
) -> Result<()> {
    if !(permeability >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "channel permeability must be >= 0, got {permeability}"
        )));
    }
    state.species.require(species)?;
    let compartment = state
        .find_compartment_mut(compartment_id)
        .ok_or_else(|| Error::UnknownCompartment(compartment_id.to_string()))?;
    compartment.channels.insert(species.to_string(), permeability);
    Ok(())
}

/// One scheduled intervention of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "op")]
pub enum Intervention {
    DcPulse { targets: Vec<String> },
    Electroporate { target: String, duration: f64, boost: f64 },
    Inject { compartment: String, species: String, amount: f64 },
    InsertChannel { compartment: String, species: String, permeability: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduledIntervention {
    pub time: f64,
    pub intervention: Intervention,
}

/// Apply one intervention now; returns the events it generated and pushes
/// any no-op notes into `log`.
pub fn apply_intervention(
    state: &mut SystemState,
    intervention: &Intervention,
    log: &mut Vec<String>,
) -> Result<Vec<Event>> {
    match intervention {
        Intervention::DcPulse { targets } => {
            let outcome = dc_pulse(state, targets)?;
            for id in &outcome.skipped_lysed {
                log.push(format!("dc_pulse on '{id}': root already lysed, no-op"));
            }
            Ok(outcome.events)
        }
        Intervention::Electroporate { target, duration, boost } => {
            Ok(vec![electroporate(state, target, *duration, *boost)?])
        }
        Intervention::Inject { compartment, species, amount } => {
            Ok(vec![microinject(state, compartment, species, *amount)?])
        }
        Intervention::InsertChannel { compartment, species, permeability } => {
            insert_channel(state, compartment, species, *permeability)?;
            Ok(Vec::new())
        }
    }
}
