//! Cheating strategies for party A and their analytic success rates.
//!
//! Every strategy targets the output bit `0`. A trial counts as a win when
//! honest B accepts, B's bit is `0`, and the strategy actually forced that
//! bit; target hits that the maneuver did not determine are reported
//! separately as lucky.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distinguishability::{invert_curve, DistinguishabilityCurve};
use crate::protocol::{
    run_protocol, Action, Entry, HonestParty, Party, PartyContext, PartyCore, PartyEvent, PartyStrategy,
    ProtocolConfig, ProtocolError, RunResult, Schedule, StateLabel, Transcript, WAKE_STRATEGY_BASE,
};
use crate::rng::trial_seed;

/// Output bit every cheating strategy aims for.
pub const TARGET_BIT: u8 = 0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheatStrategyKind {
    Mirror,
    MirrorWithRelay,
    DelayedSend { delay: f64 },
    MeasureAndCorrect { t_measure: f64 },
    CollectiveParity,
}

impl CheatStrategyKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Mirror => "mirror",
            Self::MirrorWithRelay => "mirror_with_relay",
            Self::DelayedSend { .. } => "delayed_send",
            Self::MeasureAndCorrect { .. } => "measure_and_correct",
            Self::CollectiveParity => "collective_parity",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
}

/// `p(t)(1 − p(t))`.
pub fn single_state_cheat_probability(curve: &DistinguishabilityCurve, t: f64) -> f64 {
    let p = curve.value(t.max(0.0));
    p * (1.0 - p)
}

/// Time maximizing [`single_state_cheat_probability`] and that maximum.
pub fn optimal_cheat_time(curve: &DistinguishabilityCurve) -> (f64, f64) {
    match invert_curve(curve, 0.5) {
        Ok(t) => (t, 0.25),
        Err(_) => curve
            .samples()
            .map(|(t, p)| (t, p * (1.0 - p)))
            .fold((0.0, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best }),
    }
}

/// `P^N`.
pub fn independent_parity_cheat_probability(p_single: f64, n: usize) -> f64 {
    p_single.powi(n as i32)
}

/// `(1/2)^N`, the same as guessing the parity blind.
pub fn collective_parity_bound(n: usize) -> f64 {
    0.5f64.powi(n as i32)
}

/// Model win probability of `kind` against honest B, where one exists.
pub fn analytic_prediction(kind: &CheatStrategyKind, config: &ProtocolConfig) -> Option<f64> {
    let n = config.n;
    match *kind {
        CheatStrategyKind::Mirror if !config.verify => Some(1.0),
        CheatStrategyKind::Mirror => Some(collective_parity_bound(n)),
        CheatStrategyKind::MirrorWithRelay if !config.verify => Some(1.0),
        CheatStrategyKind::MirrorWithRelay => match config.schedule {
            Schedule::Staged => Some(collective_parity_bound(n)),
            Schedule::Unstaged => Some(1.0),
        },
        CheatStrategyKind::MeasureAndCorrect { t_measure } => {
            // both carriers start their flight at d
            let p = single_state_cheat_probability(&config.curve, t_measure - config.channel_length);
            Some(independent_parity_cheat_probability(p, n))
        }
        CheatStrategyKind::CollectiveParity => Some(collective_parity_bound(n)),
        CheatStrategyKind::DelayedSend { .. } => None,
    }
}

const WAKE_CORRECT: u64 = WAKE_STRATEGY_BASE;
const WAKE_EMIT: u64 = WAKE_STRATEGY_BASE + 1;
const WAKE_DECIDE: u64 = WAKE_STRATEGY_BASE + 2;
const WAKE_COLLECTIVE: u64 = WAKE_STRATEGY_BASE + 3;

fn set_labels(core: &mut PartyCore, labels: Vec<StateLabel>) {
    core.announced = labels.clone();
    core.prepared = labels;
}

/// Sends B's carriers straight back and announces guessed labels.
#[derive(Debug, Clone)]
pub struct Mirror {
    core: PartyCore,
    relay: bool,
}

impl Mirror {
    pub fn new(n: usize, relay: bool) -> Self {
        Self { core: PartyCore::new(Party::A, n, false), relay }
    }

    /// Fixed guesses instead of random ones.
    pub fn with_guesses(mut self, guesses: Vec<StateLabel>) -> Self {
        assert_eq!(guesses.len(), self.core.n(), "guess count must equal N");
        self.core.announced = guesses;
        self
    }
}

impl PartyStrategy for Mirror {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        match event {
            PartyEvent::Start => {
                if self.core.announced.is_empty() {
                    self.core.announced = self.core.draw_labels(ctx);
                }
                self.core.start(ctx);
            }
            PartyEvent::CarrierArrived { index } => ctx.act(Action::Reflect { index: *index }),
            PartyEvent::Disclosure(msg) => {
                if self.relay && msg.sender == Party::B {
                    for (&i, &l) in msg.indices.iter().zip(&msg.labels) {
                        if let Some(slot) = self.core.announced.get_mut(i.wrapping_sub(1)) {
                            *slot = l;
                        }
                    }
                }
                self.core.handle(event, ctx);
            }
            _ => self.core.handle(event, ctx),
        }
    }

    fn forced_outcome(&self, _transcript: &Transcript) -> Option<bool> {
        // reflected carriers make every cᵢ zero by construction
        Some(true)
    }
}

/// Emits at `delay` instead of `t = 0`, copying B's labels measured by then.
#[derive(Debug, Clone)]
pub struct DelayedSend {
    core: PartyCore,
    delay: f64,
    copied: usize,
}

impl DelayedSend {
    pub fn new(n: usize, delay: f64) -> Self {
        Self { core: PartyCore::new(Party::A, n, true), delay, copied: 0 }
    }
}

impl PartyStrategy for DelayedSend {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        match event {
            PartyEvent::Start => {
                let labels = self.core.draw_labels(ctx);
                set_labels(&mut self.core, labels);
                // labels are fixed before the first disclosure leaves
                let decide = self.delay.min(ctx.config.horizon / 2.0);
                ctx.act(Action::WakeAt { at: decide, tag: WAKE_DECIDE });
                ctx.act(Action::WakeAt { at: self.delay, tag: WAKE_EMIT });
                self.core.start(ctx);
            }
            PartyEvent::Wake(WAKE_DECIDE) => {
                for i in 1..=self.core.n() {
                    if let Some((b, _)) = self.core.measured(i) {
                        self.core.announced[i - 1] = b;
                        self.core.prepared[i - 1] = b;
                        self.copied += 1;
                    }
                }
            }
            PartyEvent::Wake(WAKE_EMIT) => self.core.emit_prepared(ctx),
            _ => self.core.handle(event, ctx),
        }
    }

    fn forced_outcome(&self, _transcript: &Transcript) -> Option<bool> {
        Some(self.copied == self.core.n())
    }
}

/// Emits honestly, then at `t_measure` retunes every in-flight carrier whose
/// counterpart label it has already identified so that `aᵢ = bᵢ`.
#[derive(Debug, Clone)]
pub struct MeasureAndCorrect {
    core: PartyCore,
    t_measure: f64,
    corrected: usize,
}

impl MeasureAndCorrect {
    pub fn new(n: usize, t_measure: f64) -> Self {
        Self { core: PartyCore::new(Party::A, n, true), t_measure, corrected: 0 }
    }
}

impl PartyStrategy for MeasureAndCorrect {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        match event {
            PartyEvent::Start => {
                let labels = self.core.draw_labels(ctx);
                set_labels(&mut self.core, labels);
                // scheduled first so it precedes a disclosure at the same time
                ctx.act(Action::WakeAt { at: self.t_measure, tag: WAKE_CORRECT });
                self.core.handle(event, ctx);
            }
            PartyEvent::Wake(WAKE_CORRECT) => {
                for i in 1..=self.core.n() {
                    if let Some((b, _)) = self.core.measured(i) {
                        self.core.announced[i - 1] = b;
                        ctx.act(Action::Retune { index: i, label: b });
                        self.corrected += 1;
                    }
                }
            }
            _ => self.core.handle(event, ctx),
        }
    }

    fn forced_outcome(&self, transcript: &Transcript) -> Option<bool> {
        let landed = transcript
            .iter()
            .filter(|e| matches!(e.entry, Entry::Retune { party: Party::A, applied: true, .. }))
            .count();
        Some(self.corrected == self.core.n() && landed == self.core.n())
    }
}

/// Honest play plus an oracle coin: with probability `(1/2)^N` a modeled
/// collective measurement yields B's parity and one carrier is retuned at
/// `t = 0` to cancel it.
#[derive(Debug, Clone)]
pub struct CollectiveParity {
    core: PartyCore,
    succeeded: bool,
}

impl CollectiveParity {
    pub fn new(n: usize) -> Self {
        Self { core: PartyCore::new(Party::A, n, true), succeeded: false }
    }
}

impl PartyStrategy for CollectiveParity {
    fn on_event(&mut self, event: &PartyEvent, ctx: &mut PartyContext<'_>) {
        match event {
            PartyEvent::Start => {
                let labels = self.core.draw_labels(ctx);
                set_labels(&mut self.core, labels);
                self.succeeded = ctx.rng.chance(collective_parity_bound(self.core.n()));
                if self.succeeded {
                    ctx.act(Action::WakeAt { at: 0.0, tag: WAKE_COLLECTIVE });
                }
                self.core.handle(event, ctx);
            }
            PartyEvent::Wake(WAKE_COLLECTIVE) => {
                let own = self.core.announced.iter().fold(0, |acc, l| acc ^ l.bit());
                if own ^ ctx.modeled_collective_parity() != TARGET_BIT {
                    let flipped = self.core.announced[0].flipped();
                    self.core.announced[0] = flipped;
                    ctx.act(Action::Retune { index: 1, label: flipped });
                }
            }
            _ => self.core.handle(event, ctx),
        }
    }

    fn forced_outcome(&self, _transcript: &Transcript) -> Option<bool> {
        Some(self.succeeded)
    }
}

/// Cheating party A for `kind` under `config`.
pub fn make_cheating_strategy(
    kind: &CheatStrategyKind,
    config: &ProtocolConfig,
) -> Result<Box<dyn PartyStrategy + Send>, AdversaryError> {
    let n = config.n;
    Ok(match *kind {
        CheatStrategyKind::Mirror => Box::new(Mirror::new(n, false)),
        CheatStrategyKind::MirrorWithRelay => Box::new(Mirror::new(n, true)),
        CheatStrategyKind::DelayedSend { delay } => {
            if !(delay.is_finite() && delay > 0.0) {
                return Err(AdversaryError::InvalidStrategy(format!("delay must be positive, got {delay}")));
            }
            Box::new(DelayedSend::new(n, delay))
        }
        CheatStrategyKind::MeasureAndCorrect { t_measure } => {
            if !(t_measure.is_finite() && t_measure >= 0.0) {
                return Err(AdversaryError::InvalidStrategy(format!("t_measure must be >= 0, got {t_measure}")));
            }
            if t_measure > config.horizon / 2.0 {
                // corrections would contradict labels already disclosed
                return Err(AdversaryError::InvalidStrategy(format!(
                    "t_measure {t_measure} is after the first disclosure at T/2 = {}",
                    config.horizon / 2.0
                )));
            }
            Box::new(MeasureAndCorrect::new(n, t_measure))
        }
        CheatStrategyKind::CollectiveParity => Box::new(CollectiveParity::new(n)),
    })
}

/// Classification of one cheating run from B's point of view.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrialResult {
    Win,
    Detected,
    Lucky,
    UndetectedFailure,
}

#[derive(Debug, Clone)]
pub struct CheatTrial {
    pub result: TrialResult,
    pub run: RunResult,
}

/// Runs one trial of `kind` (as A) against honest B.
pub fn run_cheat_trial(kind: &CheatStrategyKind, config: &ProtocolConfig) -> Result<CheatTrial, AdversaryError> {
    let mut cheater = make_cheating_strategy(kind, config)?;
    let mut honest = HonestParty::new(Party::B, config.n);
    let run = run_protocol(config, cheater.as_mut(), &mut honest)?;
    let forced = cheater.forced_outcome(&run.transcript).unwrap_or(false);
    Ok(CheatTrial { result: classify(run.outcome_b.bit_value(), forced), run })
}

fn classify(bit_b: Option<u8>, forced: bool) -> TrialResult {
    match bit_b {
        None => TrialResult::Detected,
        Some(TARGET_BIT) if forced => TrialResult::Win,
        Some(TARGET_BIT) => TrialResult::Lucky,
        Some(_) => TrialResult::UndetectedFailure,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheatReport {
    pub strategy: CheatStrategyKind,
    pub n: usize,
    pub trials: u64,
    pub wins: u64,
    /// Runs B aborted.
    pub detected: u64,
    /// B accepted the target bit without the cheat determining it.
    pub lucky: u64,
    /// B accepted the other bit.
    pub undetected_failures: u64,
    pub success_estimate: f64,
    pub ci95_halfwidth: f64,
    pub analytic_prediction: Option<f64>,
}

impl CheatReport {
    /// Report from `[wins, detected, lucky, undetected_failures]`.
    pub fn from_counts(strategy: CheatStrategyKind, config: &ProtocolConfig, counts: [u64; 4]) -> Self {
        let [wins, detected, lucky, undetected_failures] = counts;
        let trials = counts.iter().sum::<u64>();
        let p = wins as f64 / trials as f64;
        Self {
            strategy,
            n: config.n,
            trials,
            wins,
            detected,
            lucky,
            undetected_failures,
            success_estimate: p,
            ci95_halfwidth: 1.96 * (p * (1.0 - p) / trials as f64).sqrt(),
            analytic_prediction: analytic_prediction(&strategy, config),
        }
    }

    pub fn detection_rate(&self) -> f64 {
        self.detected as f64 / self.trials as f64
    }
}

/// `trials` independent runs of cheater A against honest B. Trial `i` uses
/// the run seed derived from `(base_seed, i)`, so any two experiments with
/// the same base seed share their randomness trial by trial.
pub fn run_cheat_experiment(
    kind: CheatStrategyKind,
    config: &ProtocolConfig,
    trials: u64,
    base_seed: u64,
) -> Result<CheatReport, AdversaryError> {
    if trials == 0 {
        return Err(AdversaryError::InvalidStrategy("trials must be >= 1".into()));
    }
    make_cheating_strategy(&kind, config)?;
    let counts = (0..trials)
        .into_par_iter()
        .map(|i| {
            let cfg = config.clone().with_seed(trial_seed(base_seed, i));
            let mut c = [0u64; 4];
            c[run_cheat_trial(&kind, &cfg)?.result as usize] += 1;
            Ok::<_, AdversaryError>(c)
        })
        .try_reduce(|| [0; 4], |a, b| Ok([a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]))?;
    Ok(CheatReport::from_counts(kind, config, counts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distinguishability::{parametric_curve, ParametricKind};
    use crate::protocol::{Outcome, AbortReason};
    use proptest::prelude::*;

    fn ramp(h: f64) -> DistinguishabilityCurve {
        parametric_curve(ParametricKind::LinearRamp, h, 0.0).unwrap()
    }

    fn config(n: usize, t: f64, h: f64) -> ProtocolConfig {
        ProtocolConfig::new(n, t, ramp(h), 0).unwrap()
    }

    #[test]
    fn analytic_examples() {
        let c = ramp(1.0);
        assert_eq!(single_state_cheat_probability(&c, 0.5), 0.25);
        assert_eq!(single_state_cheat_probability(&c, 0.0), 0.0);
        assert_eq!(single_state_cheat_probability(&c, 1.5), 0.0);
        let (t, p) = optimal_cheat_time(&c);
        assert!((t - 0.5).abs() < 1e-12 && p == 0.25);
        let s = parametric_curve(ParametricKind::Smoothstep, 1.0, 0.0).unwrap();
        let (t, p) = optimal_cheat_time(&s);
        assert!((t - 0.5).abs() < 1e-9 && p == 0.25);
        let capped = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.6).unwrap();
        let (t, p) = optimal_cheat_time(&capped);
        assert!((p - 0.24).abs() < 1e-12 && (t - 1.0).abs() < 1e-12);
        assert_eq!(independent_parity_cheat_probability(0.25, 1), 0.25);
        assert_eq!(independent_parity_cheat_probability(0.25, 3), 0.015625);
        assert_eq!(independent_parity_cheat_probability(1.0, 17), 1.0);
        assert_eq!(collective_parity_bound(1), 0.5);
        assert_eq!(collective_parity_bound(4), 0.0625);
    }

    #[test]
    fn collective_is_strictly_stronger() {
        for n in 1..=64 {
            assert!(independent_parity_cheat_probability(0.25, n) < collective_parity_bound(n));
        }
    }

    #[test]
    fn invalid_parameters_rejected() {
        let cfg = config(2, 2.0, 1.0);
        assert!(make_cheating_strategy(&CheatStrategyKind::DelayedSend { delay: 0.0 }, &cfg).is_err());
        assert!(make_cheating_strategy(&CheatStrategyKind::MeasureAndCorrect { t_measure: -1.0 }, &cfg).is_err());
        assert!(make_cheating_strategy(&CheatStrategyKind::MeasureAndCorrect { t_measure: 1.5 }, &cfg).is_err());
        assert!(run_cheat_experiment(CheatStrategyKind::Mirror, &cfg, 0, 0).is_err());
    }

    fn all_labels(n: usize) -> Vec<Vec<StateLabel>> {
        (0..1usize << n).map(|m| (0..n).map(|i| StateLabel::from_bit((m >> i) as u8)).collect()).collect()
    }

    // exact win probability over all B labels and A guesses
    fn mirror_enumeration(n: usize) -> f64 {
        let cfg = config(n, 1.0, 1.0);
        let mut wins = 0;
        let mut total = 0;
        for b in all_labels(n) {
            for g in all_labels(n) {
                let mut a = Mirror::new(n, false).with_guesses(g);
                let mut hb = HonestParty::new(Party::B, n).with_labels(b.clone());
                let r = run_protocol(&cfg, &mut a, &mut hb).unwrap();
                let forced = a.forced_outcome(&r.transcript).unwrap();
                wins += (classify(r.outcome_b.bit_value(), forced) == TrialResult::Win) as usize;
                total += 1;
            }
        }
        wins as f64 / total as f64
    }

    #[test]
    fn mirror_enumeration_matches_guessing() {
        for n in [2, 4] {
            assert_eq!(mirror_enumeration(n), collective_parity_bound(n));
        }
    }

    #[test]
    fn mirror_without_verification_always_yields_zero() {
        let cfg = config(8, 1.0, 1.0).with_verification(false);
        let r = run_cheat_experiment(CheatStrategyKind::Mirror, &cfg, 200, 3).unwrap();
        assert_eq!(r.wins, 200);
    }

    #[test]
    fn relay_only_helps_without_staging() {
        let cfg = config(8, 1.0, 1.0);
        let staged = run_cheat_experiment(CheatStrategyKind::MirrorWithRelay, &cfg, 500, 1).unwrap();
        assert!(staged.wins < 10, "{staged:?}");
        let unstaged = cfg.with_schedule(Schedule::Unstaged);
        let r = run_cheat_experiment(CheatStrategyKind::MirrorWithRelay, &unstaged, 200, 1).unwrap();
        assert_eq!(r.wins, 200);
    }

    #[test]
    fn delayed_send_detected_late() {
        let cfg = config(16, 1.0, 1.0);
        for seed in 0..20 {
            let cfg = cfg.clone().with_seed(seed);
            let mut a = DelayedSend::new(16, 0.5);
            let mut b = HonestParty::new(Party::B, 16);
            let r = run_protocol(&cfg, &mut a, &mut b).unwrap();
            assert!(matches!(r.outcome_b, Outcome::Abort { reason: AbortReason::LateDetection, .. }));
            assert_eq!(r.outcome_a, r.outcome_b);
        }
    }

    #[test]
    fn measure_and_correct_tracks_prediction_off_peak() {
        let cfg = config(1, 2.0, 1.0);
        let kind = CheatStrategyKind::MeasureAndCorrect { t_measure: 0.2 };
        let r = run_cheat_experiment(kind, &cfg, 20_000, 5).unwrap();
        let p = r.analytic_prediction.unwrap();
        assert!((p - 0.16).abs() < 1e-12);
        let sigma = (p * (1.0 - p) / r.trials as f64).sqrt();
        assert!((r.success_estimate - p).abs() < 4.0 * sigma, "{r:?}");
        assert_eq!(r.wins + r.detected + r.lucky + r.undetected_failures, r.trials);
    }

    #[test]
    fn collective_parity_matches_bound() {
        let cfg = config(2, 1.0, 1.0);
        let r = run_cheat_experiment(CheatStrategyKind::CollectiveParity, &cfg, 20_000, 8).unwrap();
        let p = 0.25;
        let sigma = (p * (1.0 - p) / r.trials as f64).sqrt();
        assert!((r.success_estimate - p).abs() < 4.0 * sigma, "{r:?}");
        assert_eq!(r.detected, 0);
    }

    #[test]
    fn experiments_are_reproducible() {
        let cfg = config(2, 2.0, 1.0);
        let kind = CheatStrategyKind::MeasureAndCorrect { t_measure: 0.5 };
        assert_eq!(run_cheat_experiment(kind, &cfg, 300, 9).unwrap(), run_cheat_experiment(kind, &cfg, 300, 9).unwrap());
    }

    proptest! {
        #[test]
        fn cheat_probability_never_exceeds_quarter(
            ps in proptest::collection::vec(0.0f64..1.0, 1..20),
            t in 0.0f64..3.0,
        ) {
            let mut ps = ps;
            ps.sort_by(f64::total_cmp);
            let mut samples = vec![(0.0, 0.0)];
            samples.extend(ps.iter().enumerate().map(|(i, &p)| ((i + 1) as f64 * 0.1, p)));
            prop_assume!(samples.last().unwrap().1 > 0.0);
            let c = DistinguishabilityCurve::from_samples(samples).unwrap();
            prop_assert!(single_state_cheat_probability(&c, t) <= 0.25);
        }
    }
}
