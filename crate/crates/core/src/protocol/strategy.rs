use crate::rng::RandomStream;

use super::{DisclosureMessage, Outcome, Party, ProtocolConfig, StateLabel, Transcript};

/// What a party observes.
#[derive(Debug, Clone, PartialEq)]
pub enum PartyEvent {
    /// Protocol start at `t = 0`; delivered to A, then B, before any other
    /// event.
    Start,
    /// A timer set with [`Action::WakeAt`] fired.
    Wake(u64),
    /// The counterpart's carrier `index` entered this party's region.
    CarrierArrived { index: usize },
    /// This party's detector for the counterpart's carrier `index` fired
    /// and identified `label`.
    Detected { index: usize, label: StateLabel },
    Disclosure(DisclosureMessage),
    /// The counterpart's local verdict.
    VerdictNotice(Outcome),
}

/// What a party can do. Times are absolute simulation times.
#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    /// Launch own carrier `index` (1-based) prepared in state `label`.
    Emit { index: usize, label: StateLabel },
    /// Send the counterpart's carrier `index` straight back as own carrier
    /// `index`, unmeasured.
    Reflect { index: usize },
    /// Alter own in-flight carrier `index`; has no effect once the
    /// counterpart's detector has fired on it.
    Retune { index: usize, label: StateLabel },
    /// Arm the detector on the counterpart's carrier `index`; it fires at
    /// `fire_at`, or never for `None`.
    Measure { index: usize, fire_at: Option<f64> },
    /// Record that the measurement of counterpart carrier `index` ended
    /// inconclusive.
    LogInconclusive { index: usize },
    Disclose(DisclosureMessage),
    /// Send this party's local verdict to the counterpart.
    Notify(Outcome),
    /// Record this party's final verdict.
    Final(Outcome),
    WakeAt { at: f64, tag: u64 },
}

/// Per-event view handed to a strategy.
pub struct PartyContext<'a> {
    pub role: Party,
    pub now: f64,
    pub config: &'a ProtocolConfig,
    pub rng: &'a mut RandomStream,
    pub(crate) actions: &'a mut Vec<Action>,
    pub(crate) counterpart_labels: &'a [Option<StateLabel>],
}

impl PartyContext<'_> {
    pub fn act(&mut self, action: Action) {
        self.actions.push(action);
    }

    /// Parity of the labels currently carried by the counterpart's emitted
    /// carriers. Stands in for an optimal joint measurement whose success
    /// probability is modeled separately; no honest strategy calls it.
    pub fn modeled_collective_parity(&self) -> u8 {
        self.counterpart_labels.iter().flatten().fold(0, |acc, l| acc ^ l.bit())
    }
}

/// A deterministic reactor over observed events. Honest parties and every
/// adversary implement this one contract.
pub trait PartyStrategy {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>);

    /// For cheating strategies: whether the maneuver determined the output
    /// bit in this run, as opposed to the bit landing on the target by
    /// chance. `None` for honest parties.
    fn forced_outcome(&self, _transcript: &Transcript) -> Option<bool> {
        None
    }
}
