//! Honest two-party protocol: timed emission, staged half-disclosures,
//! consistency checks and parity extraction.

mod party;
mod strategy;
mod types;
mod verify;

use thiserror::Error;

use crate::rng::RandomStream;
use crate::simharness::{run_events, SimError, Transport};

pub use party::{HonestParty, PartyCore, WAKE_STRATEGY_BASE};
pub use strategy::{Action, PartyContext, PartyEvent, PartyStrategy};
pub use types::{
    AbortReason, ClassicalMessage, DisclosureMessage, Entry, Outcome, Party, ProtocolConfig, Round, Schedule,
    StateLabel, Transcript, TranscriptEntry, DEADLINE_SLACK,
};
pub use verify::{parity, phase_schedule, verify_consistency, Phase, Verification, VerificationPolicy};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProtocolError {
    #[error("invalid protocol config: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Simulation(#[from] SimError),
}

/// Both final verdicts and the full record of one run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub transcript: Transcript,
}

impl RunResult {
    pub fn outcome(&self, party: Party) -> Outcome {
        match party {
            Party::A => self.outcome_a,
            Party::B => self.outcome_b,
        }
    }
}

/// Private streams of the two parties for a given run seed.
pub fn party_streams(seed: u64) -> [RandomStream; 2] {
    let root = RandomStream::from_seed(seed);
    [root.split("party-A"), root.split("party-B")]
}

/// Runs one protocol instance over a light-speed channel of length
/// `config.channel_length`.
pub fn run_protocol(
    config: &ProtocolConfig,
    strategy_a: &mut dyn PartyStrategy,
    strategy_b: &mut dyn PartyStrategy,
) -> Result<RunResult, ProtocolError> {
    let mut transport = Transport::new(config.channel_length)?;
    run_protocol_with(config, strategy_a, strategy_b, &mut transport)
}

pub fn run_protocol_with(
    config: &ProtocolConfig,
    strategy_a: &mut dyn PartyStrategy,
    strategy_b: &mut dyn PartyStrategy,
    transport: &mut Transport,
) -> Result<RunResult, ProtocolError> {
    config.validate()?;
    if transport.channel_length() != config.channel_length {
        return Err(ProtocolError::InvalidInput(format!(
            "transport length {} differs from config {}",
            transport.channel_length(),
            config.channel_length
        )));
    }
    let mut rngs = party_streams(config.seed);
    let log = run_events(transport, config, [strategy_a, strategy_b], &mut rngs)?;
    let [a, b] = log.finals;
    let outcome_a = a.ok_or(SimError::MissingVerdict(Party::A))?;
    let outcome_b = b.ok_or(SimError::MissingVerdict(Party::B))?;
    Ok(RunResult { outcome_a, outcome_b, transcript: log.transcript })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distinguishability::{parametric_curve, ParametricKind};
    use crate::spacetime::{earliest_arrival, SpacetimeEvent};

    fn config(n: usize, seed: u64) -> ProtocolConfig {
        let curve = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.0).unwrap();
        ProtocolConfig::new(n, 1.0, curve, seed).unwrap()
    }

    fn honest(cfg: &ProtocolConfig) -> RunResult {
        let mut a = HonestParty::new(Party::A, cfg.n);
        let mut b = HonestParty::new(Party::B, cfg.n);
        run_protocol(cfg, &mut a, &mut b).unwrap()
    }

    fn labels_of(t: &Transcript, party: Party) -> Vec<StateLabel> {
        t.iter()
            .filter_map(|e| match e.entry {
                Entry::Emission { party: p, label, .. } if p == party => Some(label),
                _ => None,
            })
            .collect()
    }

    #[test]
    fn honest_parties_agree_on_parity() {
        for seed in 0..200 {
            for d in [0.0, 0.3] {
                let cfg = config(8, seed).with_channel_length(d).unwrap();
                let r = honest(&cfg);
                assert_eq!(r.outcome_a, r.outcome_b);
                let c = parity(&labels_of(&r.transcript, Party::A), &labels_of(&r.transcript, Party::B)).unwrap();
                assert_eq!(r.outcome_a, Outcome::bit(c), "seed {seed}");
            }
        }
    }

    #[test]
    fn odd_counts_split_larger_half_first() {
        for n in [1, 3, 5] {
            for seed in 0..20 {
                let r = honest(&config(n, seed));
                assert_eq!(r.outcome_a, r.outcome_b);
                assert!(!r.outcome_a.is_abort());
            }
        }
    }

    #[test]
    fn zero_states_rejected() {
        let curve = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.0).unwrap();
        assert!(ProtocolConfig::new(0, 1.0, curve.clone(), 0).is_err());
        assert!(ProtocolConfig::new(2, 0.5, curve, 0).is_err());
    }

    #[test]
    fn unstaged_schedule_also_agrees() {
        for seed in 0..50 {
            let cfg = config(4, seed).with_schedule(Schedule::Unstaged);
            let r = honest(&cfg);
            assert_eq!(r.outcome_a, r.outcome_b);
            assert!(!r.outcome_a.is_abort());
        }
    }

    #[test]
    fn corrupted_label_aborts_at_its_index() {
        let cfg = config(6, 11);
        let mut a = HonestParty::new(Party::A, 6).with_first_half(vec![2, 3, 5]).with_corrupted_disclosure(3);
        let mut b = HonestParty::new(Party::B, 6);
        let r = run_protocol(&cfg, &mut a, &mut b).unwrap();
        let expected = Outcome::abort(AbortReason::LabelMismatch, Some(3));
        assert_eq!(r.outcome_a, expected);
        assert_eq!(r.outcome_b, expected);
    }

    #[test]
    fn disclosures_follow_receipt_order() {
        for d in [0.0, 0.25] {
            let cfg = config(8, 5).with_channel_length(d).unwrap();
            let t = honest(&cfg).transcript;
            let sent = |p, r| t.disclosure_sent(p, r).unwrap();
            let got = |p, r| t.disclosure_delivered(p, r).unwrap();
            assert_eq!(sent(Party::A, Round::FirstHalf), 0.5);
            assert!(sent(Party::B, Round::FirstHalf) >= got(Party::A, Round::FirstHalf));
            assert!(sent(Party::A, Round::SecondHalf) >= got(Party::B, Round::FirstHalf));
            assert!(sent(Party::B, Round::SecondHalf) >= got(Party::A, Round::SecondHalf));
            let sched = phase_schedule(&cfg);
            assert!((sent(Party::B, Round::SecondHalf) - sched[4].1).abs() < 1e-12);
        }
    }

    #[test]
    fn transcript_is_time_ordered_and_causal() {
        let cfg = config(8, 9).with_channel_length(0.4).unwrap();
        let t = honest(&cfg).transcript;
        assert!(t.entries.windows(2).all(|w| w[0].t <= w[1].t));
        for e in t.iter() {
            match &e.entry {
                Entry::QuantumDelivery { from, x, emitted_at, .. } => {
                    let src = SpacetimeEvent::new(*emitted_at, cfg.position(*from)).unwrap();
                    assert!(e.t >= earliest_arrival(&src, *x).unwrap() - 1e-12);
                }
                Entry::ClassicalDelivery { sent_at, .. } => assert!(e.t >= sent_at + cfg.channel_length - 1e-12),
                _ => {}
            }
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = config(16, 42);
        assert_eq!(honest(&cfg).transcript.to_jsonl(), honest(&cfg).transcript.to_jsonl());
        assert_ne!(honest(&cfg).transcript, honest(&cfg.clone().with_seed(43)).transcript);
    }

    #[test]
    fn residual_epsilon_is_tolerated() {
        let curve = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.02).unwrap();
        let cfg = ProtocolConfig::new(16, 1.0, curve, 0).unwrap();
        assert_eq!(cfg.inconclusive_allowance(), 1);
        let mut aborts = 0;
        for seed in 0..300 {
            let r = honest(&cfg.clone().with_seed(seed));
            assert_eq!(r.outcome_a, r.outcome_b);
            aborts += r.outcome_a.is_abort() as usize;
        }
        // P(≥ 2 of 16 inconclusive) ≈ 0.04
        assert!(aborts < 40, "{aborts}");
    }

    #[test]
    fn transport_length_must_match() {
        let cfg = config(2, 0);
        let mut t = Transport::new(1.0).unwrap();
        let mut a = HonestParty::new(Party::A, 2);
        let mut b = HonestParty::new(Party::B, 2);
        assert!(run_protocol_with(&cfg, &mut a, &mut b, &mut t).is_err());
    }

    #[test]
    fn event_bound_is_enforced() {
        let cfg = config(8, 0);
        let mut t = Transport::new(0.0).unwrap().with_event_bound(10);
        let mut a = HonestParty::new(Party::A, 8);
        let mut b = HonestParty::new(Party::B, 8);
        let err = run_protocol_with(&cfg, &mut a, &mut b, &mut t).unwrap_err();
        assert!(matches!(err, ProtocolError::Simulation(SimError::Runaway { bound: 10 })));
    }

    #[test]
    fn jsonl_lines_parse() {
        let t = honest(&config(2, 1)).transcript;
        let text = t.to_jsonl();
        assert_eq!(text.lines().count(), t.len());
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v.get("t").is_some() && v.get("kind").is_some());
        }
    }
}
