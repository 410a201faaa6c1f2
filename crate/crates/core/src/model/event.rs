use serde::{Deserialize, Serialize};

use super::Mixture;

/// Discrete occurrences recorded during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Burst,
    DcLysis,
    ElectroporationOpen,
    ElectroporationClose,
    Halt,
    Injection,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Burst => "burst",
            EventKind::DcLysis => "dc_lysis",
            EventKind::ElectroporationOpen => "electroporation_open",
            EventKind::ElectroporationClose => "electroporation_close",
            EventKind::Halt => "halt",
            EventKind::Injection => "injection",
        }
    }
}

impl std::fmt::Display for EventKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A timestamped event on one compartment. Events are totally ordered by
/// (time, compartment id); the payload carries the species amounts the event
/// moved or added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub compartment_id: String,
    #[serde(skip_serializing_if = "Mixture::is_empty", default)]
    pub payload: Mixture,
}

impl Event {
    pub fn new(time: f64, kind: EventKind, compartment_id: impl Into<String>) -> Event {
        Event {
            time,
            kind,
            compartment_id: compartment_id.into(),
            payload: Mixture::new(),
        }
    }

    pub fn with_payload(mut self, payload: Mixture) -> Event {
        self.payload = payload;
        self
    }

    /// Total order: time first, compartment id as the deterministic tiebreak.
    pub fn sort_key(&self) -> (f64, &str) {
        (self.time, &self.compartment_id)
    }
}

/// Sort events into their canonical total order.
pub fn sort_events(events: &mut [Event]) {
    events.sort_by(|a, b| {
        a.time
            .total_cmp(&b.time)
            .then_with(|| a.compartment_id.cmp(&b.compartment_id))
    });
}
