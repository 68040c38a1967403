use crate::distinguishability::{sample_detection_time, Identification, MeasurementOutcome};

use super::strategy::{Action, PartyContext, PartyEvent, PartyStrategy};
use super::verify::{verify_consistency, Verification, VerificationPolicy};
use super::{AbortReason, DisclosureMessage, Outcome, Party, Round, Schedule, StateLabel};

pub(crate) const WAKE_DISCLOSE: u64 = 1;
pub(crate) const WAKE_VERIFY: u64 = 2;
/// Timer tags at or above this value belong to the wrapping strategy.
pub const WAKE_STRATEGY_BASE: u64 = 100;

/// Schedule, measurement record and verdict logic common to every party.
///
/// Strategies own a core, intercept the events they care about and forward
/// the rest to [`PartyCore::handle`].
#[derive(Debug, Clone)]
pub struct PartyCore {
    role: Party,
    n: usize,
    verifies: bool,
    /// Labels this party announces, index `i − 1` for state `i`.
    pub announced: Vec<StateLabel>,
    /// Labels of the carriers this party physically prepared, where known.
    pub prepared: Vec<StateLabel>,
    corrupt: Option<usize>,
    preset_first_half: Option<Vec<usize>>,
    measured: Vec<Option<(StateLabel, f64)>>,
    received: Vec<Option<StateLabel>>,
    first_half: Option<Vec<usize>>,
    expecting: Option<Round>,
    exchange_done: bool,
    fault: Option<(AbortReason, Option<usize>)>,
    local: Option<Outcome>,
    notice: Option<Outcome>,
    finalized: bool,
}

impl PartyCore {
    pub fn new(role: Party, n: usize, verifies: bool) -> Self {
        Self {
            role,
            n,
            verifies,
            announced: Vec::new(),
            prepared: Vec::new(),
            corrupt: None,
            preset_first_half: None,
            measured: vec![None; n],
            received: vec![None; n],
            first_half: None,
            expecting: None,
            exchange_done: false,
            fault: None,
            local: None,
            notice: None,
            finalized: false,
        }
    }

    pub fn role(&self) -> Party {
        self.role
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set_corrupted_disclosure(&mut self, index: Option<usize>) {
        self.corrupt = index;
    }

    pub fn set_first_half(&mut self, indices: Option<Vec<usize>>) {
        self.preset_first_half = indices;
    }

    /// Counterpart label disclosed for state `index`, if received.
    pub fn received(&self, index: usize) -> Option<StateLabel> {
        self.received[index - 1]
    }

    pub fn measured(&self, index: usize) -> Option<(StateLabel, f64)> {
        self.measured[index - 1]
    }

    pub fn local_verdict(&self) -> Option<Outcome> {
        self.local
    }

    pub fn draw_labels(&self, ctx: &mut PartyContext<'_>) -> Vec<StateLabel> {
        (0..self.n).map(|_| StateLabel::from_bit(ctx.rng.bit() as u8)).collect()
    }

    /// Sets timers for this party's part of the schedule.
    pub fn start(&mut self, ctx: &mut PartyContext<'_>) {
        let half = ctx.config.horizon / 2.0;
        let opens =
            matches!((ctx.config.schedule, self.role), (Schedule::Staged, Party::A) | (Schedule::Unstaged, Party::B));
        if opens {
            ctx.act(Action::WakeAt { at: half, tag: WAKE_DISCLOSE });
        } else {
            self.expecting = Some(match ctx.config.schedule {
                Schedule::Staged => Round::FirstHalf,
                Schedule::Unstaged => Round::Full,
            });
        }
        ctx.act(Action::WakeAt { at: ctx.config.watch_until(), tag: WAKE_VERIFY });
    }

    pub fn emit_prepared(&self, ctx: &mut PartyContext<'_>) {
        for (i, &label) in self.prepared.iter().enumerate() {
            ctx.act(Action::Emit { index: i + 1, label });
        }
    }

    /// Honest measurement: the detector fires at a time drawn from the curve.
    pub fn arm_detector(&self, index: usize, ctx: &mut PartyContext<'_>) {
        let fire_at = sample_detection_time(&ctx.config.curve, ctx.rng).map(|tau| ctx.now + tau);
        ctx.act(Action::Measure { index, fire_at });
    }

    /// Default event handling.
    pub fn handle(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        match event {
            PartyEvent::Start => {
                self.start(ctx);
                self.emit_prepared(ctx);
            }
            PartyEvent::CarrierArrived { index } => self.arm_detector(*index, ctx),
            PartyEvent::Detected { index, label } => {
                if self.measured[index - 1].is_none() {
                    self.measured[index - 1] = Some((*label, ctx.now));
                }
            }
            PartyEvent::Wake(WAKE_DISCLOSE) => self.open_exchange(ctx),
            PartyEvent::Wake(WAKE_VERIFY) => self.try_verify(ctx),
            PartyEvent::Wake(_) => {}
            PartyEvent::Disclosure(msg) => self.on_disclosure(msg, ctx),
            PartyEvent::VerdictNotice(outcome) => self.on_notice(*outcome, ctx),
        }
    }

    fn disclose(&self, round: Round, indices: Vec<usize>, ctx: &mut PartyContext<'_>) {
        let labels = indices
            .iter()
            .map(|&i| {
                let l = self.announced[i - 1];
                if self.corrupt == Some(i) { l.flipped() } else { l }
            })
            .collect();
        ctx.act(Action::Disclose(DisclosureMessage { sender: self.role, round, indices, labels }));
    }

    fn open_exchange(&mut self, ctx: &mut PartyContext<'_>) {
        if self.exchange_done || self.fault.is_some() {
            return;
        }
        match ctx.config.schedule {
            Schedule::Staged => {
                let first = match &self.preset_first_half {
                    Some(s) => s.clone(),
                    None => random_half(self.n, ctx),
                };
                self.first_half = Some(first.clone());
                self.expecting = Some(Round::FirstHalf);
                self.disclose(Round::FirstHalf, first, ctx);
            }
            Schedule::Unstaged => {
                self.expecting = Some(Round::Full);
                self.disclose(Round::Full, (1..=self.n).collect(), ctx);
            }
        }
    }

    fn complement(&self) -> Vec<usize> {
        let first = self.first_half.as_deref().unwrap_or(&[]);
        (1..=self.n).filter(|i| !first.contains(i)).collect()
    }

    fn check_message(&self, msg: &DisclosureMessage, round: Round) -> Result<(), AbortReason> {
        if msg.sender != self.role.other() {
            return Err(AbortReason::MalformedDisclosure);
        }
        if msg.round != round {
            return Err(AbortReason::ScheduleViolation);
        }
        let expected_len = match round {
            Round::Full => self.n,
            Round::FirstHalf => self.n.div_ceil(2),
            Round::SecondHalf => self.n / 2,
        };
        if msg.indices.len() != expected_len || msg.labels.len() != expected_len {
            return Err(AbortReason::MalformedDisclosure);
        }
        let mut seen = vec![false; self.n];
        for &i in &msg.indices {
            if i == 0 || i > self.n || seen[i - 1] {
                return Err(AbortReason::MalformedDisclosure);
            }
            seen[i - 1] = true;
        }
        let mut sorted = msg.indices.clone();
        sorted.sort_unstable();
        let required = match (round, self.role) {
            // B's first half must cover the index set A opened with
            (Round::FirstHalf, Party::A) => self.first_half.clone(),
            (Round::SecondHalf, _) => Some(self.complement()),
            _ => None,
        };
        if let Some(mut req) = required {
            req.sort_unstable();
            if req != sorted {
                return Err(AbortReason::MalformedDisclosure);
            }
        }
        Ok(())
    }

    fn on_disclosure(&mut self, msg: &DisclosureMessage, ctx: &mut PartyContext<'_>) {
        if self.exchange_done || self.fault.is_some() {
            return;
        }
        let Some(expected) = self.expecting else {
            return self.raise(AbortReason::ScheduleViolation, None, ctx);
        };
        if let Err(reason) = self.check_message(msg, expected) {
            return self.raise(reason, None, ctx);
        }
        for (&i, &l) in msg.indices.iter().zip(&msg.labels) {
            self.received[i - 1] = Some(l);
        }
        match (expected, self.role) {
            (Round::FirstHalf, Party::B) => {
                let mut first = msg.indices.clone();
                first.sort_unstable();
                self.first_half = Some(first.clone());
                self.disclose(Round::FirstHalf, first, ctx);
                self.expecting = Some(Round::SecondHalf);
            }
            (Round::FirstHalf, Party::A) => {
                self.disclose(Round::SecondHalf, self.complement(), ctx);
                self.expecting = Some(Round::SecondHalf);
            }
            (Round::SecondHalf, Party::B) => {
                self.disclose(Round::SecondHalf, self.complement(), ctx);
                self.finish_exchange(ctx);
            }
            (Round::SecondHalf, Party::A) => self.finish_exchange(ctx),
            (Round::Full, Party::A) => {
                self.disclose(Round::Full, (1..=self.n).collect(), ctx);
                self.finish_exchange(ctx);
            }
            (Round::Full, Party::B) => self.finish_exchange(ctx),
        }
    }

    fn finish_exchange(&mut self, ctx: &mut PartyContext<'_>) {
        self.expecting = None;
        self.exchange_done = true;
        self.try_verify(ctx);
    }

    /// Local fault detected on receipt: abort at once.
    fn raise(&mut self, reason: AbortReason, at_index: Option<usize>, ctx: &mut PartyContext<'_>) {
        if self.local.is_some() {
            return;
        }
        self.fault = Some((reason, at_index));
        self.expecting = None;
        if !self.verifies {
            return;
        }
        self.settle(Outcome::abort(reason, at_index), ctx);
    }

    fn try_verify(&mut self, ctx: &mut PartyContext<'_>) {
        if self.local.is_some() || ctx.now < ctx.config.watch_until() {
            return;
        }
        if !self.exchange_done {
            let outcome = Outcome::abort(AbortReason::ScheduleViolation, None);
            return self.settle(outcome, ctx);
        }
        let outcomes: Vec<MeasurementOutcome> = self
            .measured
            .iter()
            .map(|m| match m {
                Some((label, t)) => MeasurementOutcome { result: Identification::Identified(*label), at_time: *t },
                None => MeasurementOutcome { result: Identification::Inconclusive, at_time: ctx.now },
            })
            .collect();
        for (i, m) in self.measured.iter().enumerate() {
            if m.is_none() {
                ctx.act(Action::LogInconclusive { index: i + 1 });
            }
        }
        let disclosed: Vec<StateLabel> = self.received.iter().map(|l| l.expect("exchange complete")).collect();
        let verdict = if self.verifies && ctx.config.verify {
            let policy = VerificationPolicy::from_config(ctx.config);
            match verify_consistency(&outcomes, &disclosed, &policy).expect("aligned lengths") {
                Verification::Ok => None,
                Verification::Fault { index, reason } => Some(Outcome::abort(reason, Some(index))),
            }
        } else {
            None
        };
        let outcome = verdict.unwrap_or_else(|| {
            // counterpart labels: own identification where available
            let c = self
                .announced
                .iter()
                .zip(self.measured.iter().zip(&disclosed))
                .fold(0u8, |acc, (own, (m, d))| acc ^ own.bit() ^ m.map_or(*d, |(l, _)| l).bit());
            Outcome::bit(c)
        });
        self.settle(outcome, ctx);
    }

    fn settle(&mut self, outcome: Outcome, ctx: &mut PartyContext<'_>) {
        self.local = Some(outcome);
        ctx.act(Action::Notify(outcome));
        self.try_finalize(ctx);
    }

    fn on_notice(&mut self, outcome: Outcome, ctx: &mut PartyContext<'_>) {
        self.notice = Some(outcome);
        if self.local.is_none() && outcome.is_abort() {
            // adopt the counterpart's abort
            return self.settle(outcome, ctx);
        }
        self.try_finalize(ctx);
    }

    fn try_finalize(&mut self, ctx: &mut PartyContext<'_>) {
        if self.finalized {
            return;
        }
        if let (Some(own), Some(theirs)) = (self.local, self.notice) {
            let (a, b) = match self.role {
                Party::A => (own, theirs),
                Party::B => (theirs, own),
            };
            self.finalized = true;
            ctx.act(Action::Final(Outcome::merge(self.role, a, b)));
        }
    }
}

fn random_half(n: usize, ctx: &mut PartyContext<'_>) -> Vec<usize> {
    // partial Fisher–Yates
    let m = n.div_ceil(2);
    let mut idx: Vec<usize> = (1..=n).collect();
    for k in 0..m {
        let j = k + ctx.rng.below(n - k);
        idx.swap(k, j);
    }
    let mut first = idx[..m].to_vec();
    first.sort_unstable();
    first
}

/// The honest party: uniform labels, measures everything, follows the
/// schedule and aborts on any inconsistency.
#[derive(Debug, Clone)]
pub struct HonestParty {
    core: PartyCore,
    preset: Option<Vec<StateLabel>>,
}

impl HonestParty {
    pub fn new(role: Party, n: usize) -> Self {
        Self { core: PartyCore::new(role, n, true), preset: None }
    }

    /// Fixed labels instead of random ones.
    pub fn with_labels(mut self, labels: Vec<StateLabel>) -> Self {
        assert_eq!(labels.len(), self.core.n(), "label count must equal N");
        self.preset = Some(labels);
        self
    }

    /// Fixed first-half index set when this party opens the exchange.
    pub fn with_first_half(mut self, indices: Vec<usize>) -> Self {
        self.core.set_first_half(Some(indices));
        self
    }

    /// Diagnostic: announce the wrong label for state `index`.
    pub fn with_corrupted_disclosure(mut self, index: usize) -> Self {
        self.core.set_corrupted_disclosure(Some(index));
        self
    }

    /// Diagnostic: skip consistency checks.
    pub fn without_verification(mut self) -> Self {
        self.core.verifies = false;
        self
    }

    pub fn core(&self) -> &PartyCore {
        &self.core
    }
}

impl PartyStrategy for HonestParty {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        if let PartyEvent::Start = event {
            let labels = match &self.preset {
                Some(l) => l.clone(),
                None => self.core.draw_labels(ctx),
            };
            self.core.announced = labels.clone();
            self.core.prepared = labels;
        }
        self.core.handle(event, ctx);
    }
}
