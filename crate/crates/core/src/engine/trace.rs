//! Time-ordered record of a run: sampled per-compartment amounts,
//! concentrations, effective volumes and gas, plus every discrete event.
//! Serializable to CSV (one row per sample × compartment × species, plus
//! event rows) and to JSON with the same fields.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Event, Mixture, Mode, SystemState};

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    /// Abstract mode: no rule applicable anywhere.
    Halt,
    /// Kinetic mode: all rates and fluxes below the quiescence threshold.
    Quiescence,
    MaxSteps,
}

impl std::fmt::Display for HaltReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HaltReason::Halt => write!(f, "halt"),
            HaltReason::Quiescence => write!(f, "quiescence"),
            HaltReason::MaxSteps => write!(f, "max_steps"),
        }
    }
}

/// State of one compartment at a sample instant. `volume_fl` is the
/// effective (gas-swollen) volume; concentrations divide by the geometric
/// volume, matching the dynamics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompartmentSnapshot {
    pub id: String,
    pub depth: u32,
    pub volume_fl: f64,
    pub geometric_volume_fl: f64,
    pub gas_amol: f64,
    pub amounts: Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub compartments: Vec<CompartmentSnapshot>,
}

impl Sample {
    /// Capture the environment and every intact compartment.
    pub fn capture(state: &SystemState, gas_molar_volume_factor: f64) -> Sample {
        let compartments = state
            .compartments()
            .into_iter()
            .filter(|c| c.membrane_intact)
            .map(|c| CompartmentSnapshot {
                id: c.id.clone(),
                depth: c.depth,
                volume_fl: c.effective_volume(gas_molar_volume_factor),
                geometric_volume_fl: c.volume,
                gas_amol: c.gas_accumulated,
                amounts: c.contents.clone(),
            })
            .collect();
        Sample { time: state.clock, compartments }
    }

    /// Total amount of one species over all captured compartments.
    pub fn species_total(&self, species: &str) -> f64 {
        self.compartments.iter().map(|c| c.amounts.amount(species)).sum()
    }

    /// Weighted conservation total, e.g. N with {urea: 2, nh3: 1}.
    pub fn atom_total(&self, weights: &BTreeMap<String, u32>) -> f64 {
        weights
            .iter()
            .map(|(sp, w)| f64::from(*w) * self.species_total(sp))
            .sum()
    }

    pub fn total_objects(&self) -> f64 {
        self.compartments.iter().map(|c| c.amounts.total()).sum()
    }
}

/// The full record of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub mode: Mode,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub dt: Option<f64>,
    pub steps_run: usize,
    pub sample_every: usize,
    pub halt: HaltReason,
    /// All declared species, fixing the per-compartment row order.
    pub species: Vec<String>,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub warnings: Vec<String>,
}

impl Trace {
    pub fn final_sample(&self) -> &Sample {
        self.samples.last().expect("a trace always holds >= 1 sample")
    }

    pub fn events_of_kind(&self, kind: crate::model::EventKind) -> usize {
        self.events.iter().filter(|e| e.kind == kind).count()
    }

    /// CSV with the fixed column set; sample rows carry an empty `event`
    /// column, event rows carry empty species columns. Rows are ordered by
    /// time (samples before events at equal times, then compartment id).
    pub fn to_csv(&self) -> String {
        fn fmt(x: f64) -> String {
            if x.is_infinite() {
                "inf".to_string()
            } else {
                format!("{x}")
            }
        }
        let mut out = String::new();
        out.push_str("time_s,compartment_id,depth,species,amount,concentration_mM,volume_fL,gas_amol,event\n");
        let mut si = 0;
        let mut ei = 0;
        while si < self.samples.len() || ei < self.events.len() {
            let take_sample = match (self.samples.get(si), self.events.get(ei)) {
                (Some(s), Some(e)) => s.time <= e.time,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_sample {
                let s = &self.samples[si];
                si += 1;
                for c in &s.compartments {
                    for sp in &self.species {
                        let amount = c.amounts.amount(sp);
                        let conc = if c.geometric_volume_fl.is_finite() {
                            amount / c.geometric_volume_fl
                        } else {
                            0.0
                        };
                        out.push_str(&format!(
                            "{},{},{},{},{},{},{},{},\n",
                            fmt(s.time),
                            c.id,
                            c.depth,
                            sp,
                            fmt(amount),
                            fmt(conc),
                            fmt(c.volume_fl),
                            fmt(c.gas_amol),
                        ));
                    }
                }
            } else {
                let e = &self.events[ei];
                ei += 1;
                out.push_str(&format!(
                    "{},{},,,,,,,{}\n",
                    fmt(e.time),
                    e.compartment_id,
                    e.kind
                ));
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}
