//! Single-threaded discrete-event loop with light-speed delivery.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::distinguishability::Identification;
use crate::protocol::{
    Action, ClassicalMessage, Entry, Outcome, Party, PartyContext, PartyEvent, PartyStrategy, ProtocolConfig,
    StateLabel, Transcript,
};
use crate::rng::RandomStream;

pub const DEFAULT_EVENT_BOUND: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("simulation exceeded the bound of {bound} events")]
    Runaway { bound: usize },
    #[error("simulation fault: {0}")]
    Fault(String),
    #[error("run ended without a verdict from party {0}")]
    MissingVerdict(Party),
}

#[derive(Debug, Clone)]
enum Payload {
    Carrier { from: Party, index: usize, emitted_at: f64 },
    Classical { from: Party, sent_at: f64, message: ClassicalMessage },
    Detect { owner: Party, index: usize },
    Wake { owner: Party, tag: u64 },
}

#[derive(Debug, Clone)]
struct Pending {
    at: f64,
    sender: Party,
    seq: u64,
    payload: Payload,
}

impl Pending {
    fn key_cmp(&self, other: &Self) -> Ordering {
        self.at
            .total_cmp(&other.at)
            .then(self.sender.cmp(&other.sender))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialEq for Pending {
    fn eq(&self, other: &Self) -> bool {
        self.key_cmp(other) == Ordering::Equal
    }
}

impl Eq for Pending {}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Pending {
    // reversed: BinaryHeap is a max-heap
    fn cmp(&self, other: &Self) -> Ordering {
        other.key_cmp(self)
    }
}

/// Time-ordered queue of in-flight messages and timers.
///
/// Every message, quantum or classical, is delivered exactly
/// `channel_length` after it is sent. Simultaneous deliveries are ordered by
/// `(deliver_at, sender, per-sender sequence number)`.
#[derive(Debug)]
pub struct Transport {
    channel_length: f64,
    queue: BinaryHeap<Pending>,
    clock: f64,
    next_seq: [u64; 2],
    bound: usize,
    handled: usize,
}

impl Transport {
    pub fn new(channel_length: f64) -> Result<Self, SimError> {
        if !(channel_length.is_finite() && channel_length >= 0.0) {
            return Err(SimError::Fault("channel length must be finite and >= 0".into()));
        }
        Ok(Self {
            channel_length,
            queue: BinaryHeap::new(),
            clock: 0.0,
            next_seq: [0; 2],
            bound: DEFAULT_EVENT_BOUND,
            handled: 0,
        })
    }

    pub fn with_event_bound(mut self, bound: usize) -> Self {
        self.bound = bound;
        self
    }

    pub fn channel_length(&self) -> f64 {
        self.channel_length
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    fn schedule(&mut self, at: f64, sender: Party, payload: Payload) -> Result<u64, SimError> {
        if !at.is_finite() || at < self.clock {
            return Err(SimError::Fault(format!("event scheduled at {at} before clock {}", self.clock)));
        }
        if self.queue.len() + self.handled >= self.bound {
            return Err(SimError::Runaway { bound: self.bound });
        }
        let seq = self.next_seq[sender.id()];
        self.next_seq[sender.id()] += 1;
        self.queue.push(Pending { at, sender, seq, payload });
        Ok(seq)
    }

    fn pop(&mut self) -> Option<Pending> {
        let next = self.queue.pop()?;
        self.clock = next.at;
        self.handled += 1;
        Some(next)
    }
}

/// Physical state of the emitted carriers.
#[derive(Debug, Default)]
struct World {
    labels: [Vec<Option<StateLabel>>; 2],
    detected: [Vec<bool>; 2],
}

impl World {
    fn new(n: usize) -> Self {
        Self { labels: [vec![None; n], vec![None; n]], detected: [vec![false; n], vec![false; n]] }
    }

    fn slot(&self, party: Party, index: usize) -> Result<usize, SimError> {
        if index == 0 || index > self.labels[party.id()].len() {
            return Err(SimError::Fault(format!("carrier index {index} out of range for {party}")));
        }
        Ok(index - 1)
    }
}

/// Result of draining the event queue.
#[derive(Debug, Clone)]
pub struct EventLog {
    pub transcript: Transcript,
    pub finals: [Option<Outcome>; 2],
}

struct Engine<'a> {
    config: &'a ProtocolConfig,
    transport: &'a mut Transport,
    world: World,
    transcript: Transcript,
    finals: [Option<Outcome>; 2],
    buffer: Vec<Action>,
}

impl Engine<'_> {
    fn dispatch(
        &mut self,
        party: Party,
        event: PartyEvent,
        reactors: &mut [&mut dyn PartyStrategy; 2],
        rngs: &mut [RandomStream; 2],
    ) -> Result<(), SimError> {
        let mut actions = std::mem::take(&mut self.buffer);
        {
            let mut ctx = PartyContext {
                role: party,
                now: self.transport.clock(),
                config: self.config,
                rng: &mut rngs[party.id()],
                actions: &mut actions,
                counterpart_labels: &self.world.labels[party.other().id()],
            };
            reactors[party.id()].on_event(&event, &mut ctx);
        }
        let result = actions.drain(..).try_for_each(|a| self.execute(party, a));
        self.buffer = actions;
        result
    }

    fn execute(&mut self, party: Party, action: Action) -> Result<(), SimError> {
        let now = self.transport.clock();
        let d = self.transport.channel_length();
        let x = self.config.position(party);
        match action {
            Action::Emit { index, label } => {
                let k = self.world.slot(party, index)?;
                self.world.labels[party.id()][k] = Some(label);
                self.world.detected[party.id()][k] = false;
                self.transcript.push(now, Entry::Emission { party, index, label, x, reflected: false });
                self.transport.schedule(now + d, party, Payload::Carrier { from: party, index, emitted_at: now })?;
            }
            Action::Reflect { index } => {
                let other = party.other();
                let k = self.world.slot(other, index)?;
                let Some(label) = self.world.labels[other.id()][k] else {
                    return Err(SimError::Fault(format!("{party} reflected carrier {index} that was never sent")));
                };
                self.world.labels[party.id()][k] = Some(label);
                self.world.detected[party.id()][k] = false;
                self.transcript.push(now, Entry::Emission { party, index, label, x, reflected: true });
                self.transport.schedule(now + d, party, Payload::Carrier { from: party, index, emitted_at: now })?;
            }
            Action::Retune { index, label } => {
                let k = self.world.slot(party, index)?;
                let applied = self.world.labels[party.id()][k].is_some() && !self.world.detected[party.id()][k];
                if applied {
                    self.world.labels[party.id()][k] = Some(label);
                }
                self.transcript.push(now, Entry::Retune { party, index, label, applied });
            }
            Action::Measure { index, fire_at } => {
                self.world.slot(party.other(), index)?;
                if let Some(at) = fire_at {
                    self.transport.schedule(at, party, Payload::Detect { owner: party, index })?;
                }
            }
            Action::LogInconclusive { index } => {
                self.world.slot(party.other(), index)?;
                self.transcript.push(now, Entry::Measurement { party, index, result: Identification::Inconclusive });
            }
            Action::Disclose(msg) => self.send_classical(party, ClassicalMessage::Disclosure(msg))?,
            Action::Notify(outcome) => self.send_classical(party, ClassicalMessage::Verdict { outcome })?,
            Action::Final(outcome) => {
                if self.finals[party.id()].is_some() {
                    return Err(SimError::Fault(format!("{party} issued a second final verdict")));
                }
                self.finals[party.id()] = Some(outcome);
                self.transcript.push(now, Entry::Verdict { party, outcome });
            }
            Action::WakeAt { at, tag } => {
                self.transport.schedule(at, party, Payload::Wake { owner: party, tag })?;
            }
        }
        Ok(())
    }

    fn send_classical(&mut self, from: Party, message: ClassicalMessage) -> Result<(), SimError> {
        let now = self.transport.clock();
        let at = now + self.transport.channel_length();
        let seq = self.transport.schedule(at, from, Payload::Classical {
            from,
            sent_at: now,
            message: message.clone(),
        })?;
        self.transcript.push(now, Entry::ClassicalSend { from, seq, message });
        Ok(())
    }
}

/// Drains the queue to quiescence, stepping both reactors in timestamp
/// order. Identical inputs give identical transcripts.
pub fn run_events(
    transport: &mut Transport,
    config: &ProtocolConfig,
    mut reactors: [&mut dyn PartyStrategy; 2],
    rngs: &mut [RandomStream; 2],
) -> Result<EventLog, SimError> {
    let n = config.n;
    let mut engine = Engine {
        config,
        transport,
        world: World::new(n),
        transcript: Transcript::default(),
        finals: [None, None],
        buffer: Vec::new(),
    };
    for party in [Party::A, Party::B] {
        engine.dispatch(party, PartyEvent::Start, &mut reactors, rngs)?;
    }
    while let Some(next) = engine.transport.pop() {
        let now = next.at;
        match next.payload {
            Payload::Carrier { from, index, emitted_at } => {
                let to = from.other();
                let x = config.position(to);
                engine.transcript.push(now, Entry::QuantumDelivery { from, to, index, x, emitted_at });
                engine.dispatch(to, PartyEvent::CarrierArrived { index }, &mut reactors, rngs)?;
            }
            Payload::Classical { from, sent_at, message } => {
                let to = from.other();
                engine.transcript.push(now, Entry::ClassicalDelivery {
                    from,
                    to,
                    seq: next.seq,
                    sent_at,
                    message: message.clone(),
                });
                let event = match message {
                    ClassicalMessage::Disclosure(m) => PartyEvent::Disclosure(m),
                    ClassicalMessage::Verdict { outcome } => PartyEvent::VerdictNotice(outcome),
                };
                engine.dispatch(to, event, &mut reactors, rngs)?;
            }
            Payload::Detect { owner, index } => {
                let source = owner.other();
                let k = engine.world.slot(source, index)?;
                let Some(label) = engine.world.labels[source.id()][k] else {
                    return Err(SimError::Fault(format!("{owner} detected carrier {index} that does not exist")));
                };
                engine.world.detected[source.id()][k] = true;
                engine.transcript.push(now, Entry::Measurement {
                    party: owner,
                    index,
                    result: Identification::Identified(label),
                });
                engine.dispatch(owner, PartyEvent::Detected { index, label }, &mut reactors, rngs)?;
            }
            Payload::Wake { owner, tag } => {
                engine.dispatch(owner, PartyEvent::Wake(tag), &mut reactors, rngs)?;
            }
        }
    }
    Ok(EventLog { transcript: engine.transcript, finals: engine.finals })
}
