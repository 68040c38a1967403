use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distinguishability::{DistinguishabilityCurve, Identification};

use super::ProtocolError;

/// One of the two agreed orthogonal states; `S1 ↔ 0`, `S2 ↔ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StateLabel {
    S1,
    S2,
}

impl StateLabel {
    pub fn bit(self) -> u8 {
        match self {
            Self::S1 => 0,
            Self::S2 => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 { Self::S1 } else { Self::S2 }
    }

    pub fn flipped(self) -> Self {
        Self::from_bit(self.bit() ^ 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Self::A => Self::B,
            Self::B => Self::A,
        }
    }

    pub fn id(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::A => "A",
            Self::B => "B",
        })
    }
}

/// Which part of the sender's labels a disclosure carries. `Full` is only
/// used by the unstaged diagnostic schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Round {
    FirstHalf,
    SecondHalf,
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DisclosureMessage {
    pub sender: Party,
    pub round: Round,
    /// 1-based state indices.
    pub indices: Vec<usize>,
    pub labels: Vec<StateLabel>,
}

/// Disclosure ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// A(N/2) → B(N/2) → A(N/2) → B(N/2), each step triggered by receipt.
    #[default]
    Staged,
    /// Diagnostic: B reveals all N labels first, then A reveals all N.
    Unstaged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AbortReason {
    LabelMismatch,
    ExcessInconclusive,
    LateDetection,
    MalformedDisclosure,
    ScheduleViolation,
}

impl AbortReason {
    pub fn code(self) -> &'static str {
        match self {
            Self::LabelMismatch => "label_mismatch",
            Self::ExcessInconclusive => "excess_inconclusive",
            Self::LateDetection => "late_detection",
            Self::MalformedDisclosure => "malformed_disclosure",
            Self::ScheduleViolation => "schedule_violation",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum Outcome {
    Bit { value: u8 },
    Abort { reason: AbortReason, at_index: Option<usize> },
}

impl Outcome {
    pub fn bit(value: u8) -> Self {
        Self::Bit { value: value & 1 }
    }

    pub fn abort(reason: AbortReason, at_index: Option<usize>) -> Self {
        Self::Abort { reason, at_index }
    }

    pub fn is_abort(&self) -> bool {
        matches!(self, Self::Abort { .. })
    }

    pub fn bit_value(&self) -> Option<u8> {
        match *self {
            Self::Bit { value } => Some(value),
            Self::Abort { .. } => None,
        }
    }

    /// Combines the two parties' local verdicts identically on both sides:
    /// any abort wins, the one with the smallest index (then reason, then
    /// party) first. With no abort each party keeps its own bit.
    pub fn merge(own: Party, local_a: Outcome, local_b: Outcome) -> Outcome {
        let key = |o: &Outcome, p: Party| match *o {
            Outcome::Abort { reason, at_index } => Some((at_index.unwrap_or(usize::MAX), reason, p)),
            Outcome::Bit { .. } => None,
        };
        match (key(&local_a, Party::A), key(&local_b, Party::B)) {
            (Some(ka), Some(kb)) => if ka <= kb { local_a } else { local_b },
            (Some(_), None) => local_a,
            (None, Some(_)) => local_b,
            (None, None) => match own {
                Party::A => local_a,
                Party::B => local_b,
            },
        }
    }
}

/// Static parameters of one protocol run.
#[derive(Debug, Clone)]
pub struct ProtocolConfig {
    /// States per party. For odd `N` the first disclosed half is the larger.
    pub n: usize,
    /// Reliable-distinguishing horizon `T` (seconds).
    pub horizon: f64,
    /// Distance between the laboratories (light-seconds).
    pub channel_length: f64,
    pub curve: Arc<DistinguishabilityCurve>,
    pub seed: u64,
    /// When false, parties skip consistency checks (diagnostic mode).
    pub verify: bool,
    pub schedule: Schedule,
}

/// Relative slack on the detection deadline absorbing float rounding.
pub const DEADLINE_SLACK: f64 = 1e-9;

impl ProtocolConfig {
    pub fn new(n: usize, horizon: f64, curve: DistinguishabilityCurve, seed: u64) -> Result<Self, ProtocolError> {
        let cfg = Self {
            n,
            horizon,
            channel_length: 0.0,
            curve: Arc::new(curve),
            seed,
            verify: true,
            schedule: Schedule::Staged,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_channel_length(mut self, d: f64) -> Result<Self, ProtocolError> {
        self.channel_length = d;
        self.validate()?;
        Ok(self)
    }

    pub fn with_verification(mut self, verify: bool) -> Self {
        self.verify = verify;
        self
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.n == 0 {
            return Err(ProtocolError::InvalidConfig("N must be >= 1".into()));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(ProtocolError::InvalidConfig("T must be positive".into()));
        }
        if !(self.channel_length.is_finite() && self.channel_length >= 0.0) {
            return Err(ProtocolError::InvalidConfig("channel length must be >= 0".into()));
        }
        if self.curve.t_eff() > self.horizon {
            return Err(ProtocolError::InvalidConfig(format!(
                "curve horizon {} exceeds T = {}",
                self.curve.t_eff(),
                self.horizon
            )));
        }
        Ok(())
    }

    /// Indices in a `FirstHalf` disclosure, `⌈N/2⌉`.
    pub fn first_half_len(&self) -> usize {
        self.n.div_ceil(2)
    }

    pub fn position(&self, party: Party) -> f64 {
        match party {
            Party::A => 0.0,
            Party::B => self.channel_length,
        }
    }

    /// Latest admissible detection time, `T + d` plus rounding slack.
    pub fn detection_deadline(&self) -> f64 {
        let base = self.horizon + self.channel_length;
        base + DEADLINE_SLACK * base.max(1.0)
    }

    /// Time at which parties stop watching for detections and verify: one
    /// extra horizon past the window, and strictly after the last honest
    /// disclosure can arrive at `T/2 + 4d`.
    pub fn watch_until(&self) -> f64 {
        2.0 * self.horizon + 4.0 * self.channel_length
    }

    /// Inconclusive outcomes tolerated per party: none for `ε = 0`, else
    /// `max(1, ⌈3εN⌉)`.
    pub fn inconclusive_allowance(&self) -> usize {
        let eps = self.curve.epsilon();
        if eps <= 0.0 {
            0
        } else {
            ((3.0 * eps * self.n as f64).ceil() as usize).max(1)
        }
    }
}

/// Classical payloads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClassicalMessage {
    Disclosure(DisclosureMessage),
    Verdict { outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Entry {
    Emission { party: Party, index: usize, label: StateLabel, x: f64, reflected: bool },
    QuantumDelivery { from: Party, to: Party, index: usize, x: f64, emitted_at: f64 },
    Retune { party: Party, index: usize, label: StateLabel, applied: bool },
    Measurement { party: Party, index: usize, result: Identification },
    ClassicalSend { from: Party, seq: u64, message: ClassicalMessage },
    ClassicalDelivery { from: Party, to: Party, seq: u64, sent_at: f64, message: ClassicalMessage },
    Verdict { party: Party, outcome: Outcome },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    #[serde(serialize_with = "crate::simharness::serialize_rounded")]
    pub t: f64,
    #[serde(flatten)]
    pub entry: Entry,
}

/// Time-ordered record of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    pub fn push(&mut self, t: f64, entry: Entry) {
        self.entries.push(TranscriptEntry { t, entry });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.entries.iter()
    }

    /// One JSON object per line, fields in declaration order.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entry serializes"));
            out.push('\n');
        }
        out
    }

    /// Send time of the first disclosure matching `(from, round)`.
    pub fn disclosure_sent(&self, from: Party, round: Round) -> Option<f64> {
        self.entries.iter().find_map(|e| match &e.entry {
            Entry::ClassicalSend { from: f, message: ClassicalMessage::Disclosure(m), .. }
                if *f == from && m.round == round =>
            {
                Some(e.t)
            }
            _ => None,
        })
    }

    pub fn disclosure_delivered(&self, from: Party, round: Round) -> Option<f64> {
        self.entries.iter().find_map(|e| match &e.entry {
            Entry::ClassicalDelivery { from: f, message: ClassicalMessage::Disclosure(m), .. }
                if *f == from && m.round == round =>
            {
                Some(e.t)
            }
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_bits_are_bijective() {
        for b in [0u8, 1] {
            assert_eq!(StateLabel::from_bit(b).bit(), b);
        }
        assert_eq!(StateLabel::S1.flipped(), StateLabel::S2);
    }

    #[test]
    fn merge_is_symmetric_between_parties() {
        let a = Outcome::abort(AbortReason::ExcessInconclusive, Some(7));
        let b = Outcome::abort(AbortReason::LabelMismatch, Some(3));
        assert_eq!(Outcome::merge(Party::A, a, b), b);
        assert_eq!(Outcome::merge(Party::B, a, b), b);
        let ok = Outcome::bit(1);
        assert_eq!(Outcome::merge(Party::A, ok, a), a);
        assert_eq!(Outcome::merge(Party::B, ok, Outcome::bit(0)), Outcome::bit(0));
        assert_eq!(Outcome::merge(Party::A, ok, Outcome::bit(0)), ok);
    }
}
