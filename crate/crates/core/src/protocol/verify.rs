use serde::{Deserialize, Serialize};

use crate::distinguishability::{Identification, MeasurementOutcome};

use super::{AbortReason, ProtocolConfig, ProtocolError, StateLabel};

/// Acceptance rules applied to one party's measurement record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerificationPolicy {
    /// Inconclusive outcomes tolerated before a fault.
    pub inconclusive_allowance: usize,
    /// Detections later than this are faults.
    pub deadline: f64,
}

impl VerificationPolicy {
    pub fn from_config(cfg: &ProtocolConfig) -> Self {
        Self { inconclusive_allowance: cfg.inconclusive_allowance(), deadline: cfg.detection_deadline() }
    }

    pub fn strict(deadline: f64) -> Self {
        Self { inconclusive_allowance: 0, deadline }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verification {
    Ok,
    /// 1-based index of the first faulty state.
    Fault { index: usize, reason: AbortReason },
}

/// Checks own measurements of the counterpart's states against the labels
/// the counterpart disclosed. Both lists are indexed by state.
///
/// The reported fault is the one at the smallest index among: an
/// identification contradicting the disclosure, a detection after the
/// deadline, or the first inconclusive outcome beyond the allowance.
pub fn verify_consistency(
    own_measurements: &[MeasurementOutcome],
    counterpart_disclosures: &[StateLabel],
    policy: &VerificationPolicy,
) -> Result<Verification, ProtocolError> {
    if own_measurements.len() != counterpart_disclosures.len() {
        return Err(ProtocolError::InvalidInput(format!(
            "{} measurements against {} disclosed labels",
            own_measurements.len(),
            counterpart_disclosures.len()
        )));
    }
    let mut inconclusive = 0usize;
    for (i, (m, &disclosed)) in own_measurements.iter().zip(counterpart_disclosures).enumerate() {
        let index = i + 1;
        match m.result {
            Identification::Identified(seen) => {
                if seen != disclosed {
                    return Ok(Verification::Fault { index, reason: AbortReason::LabelMismatch });
                }
                if m.at_time > policy.deadline {
                    return Ok(Verification::Fault { index, reason: AbortReason::LateDetection });
                }
            }
            Identification::Inconclusive => {
                inconclusive += 1;
                if inconclusive > policy.inconclusive_allowance {
                    return Ok(Verification::Fault { index, reason: AbortReason::ExcessInconclusive });
                }
            }
        }
    }
    Ok(Verification::Ok)
}

/// `⊕ᵢ (aᵢ ⊕ bᵢ)`.
pub fn parity(a_labels: &[StateLabel], b_labels: &[StateLabel]) -> Result<u8, ProtocolError> {
    if a_labels.len() != b_labels.len() {
        return Err(ProtocolError::InvalidInput(format!(
            "label strings of length {} and {}",
            a_labels.len(),
            b_labels.len()
        )));
    }
    Ok(a_labels.iter().zip(b_labels).fold(0, |c, (a, b)| c ^ a.bit() ^ b.bit()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Emit,
    DiscloseA1,
    DiscloseB1,
    DiscloseA2,
    DiscloseB2,
}

/// Earliest start of each phase. Disclosures after the first are triggered
/// by receipt, so with `d = 0` they share the time `T/2` and are ordered
/// only by message delivery.
pub fn phase_schedule(config: &ProtocolConfig) -> Vec<(Phase, f64)> {
    let half = config.horizon / 2.0;
    let d = config.channel_length;
    vec![
        (Phase::Emit, 0.0),
        (Phase::DiscloseA1, half),
        (Phase::DiscloseB1, half + d),
        (Phase::DiscloseA2, half + 2.0 * d),
        (Phase::DiscloseB2, half + 3.0 * d),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distinguishability::{parametric_curve, ParametricKind};
    use proptest::prelude::*;
    use StateLabel::*;

    fn seen(label: StateLabel) -> MeasurementOutcome {
        MeasurementOutcome { result: Identification::Identified(label), at_time: 0.5 }
    }

    fn missed() -> MeasurementOutcome {
        MeasurementOutcome { result: Identification::Inconclusive, at_time: 1.0 }
    }

    #[test]
    fn consistent_run_passes() {
        let m = vec![seen(S1), seen(S2), seen(S2)];
        assert_eq!(verify_consistency(&m, &[S1, S2, S2], &VerificationPolicy::strict(1.0)).unwrap(), Verification::Ok);
    }

    #[test]
    fn mismatch_reported_at_index() {
        let m = vec![seen(S1), seen(S2), seen(S1), seen(S1)];
        let v = verify_consistency(&m, &[S1, S2, S2, S1], &VerificationPolicy::strict(1.0)).unwrap();
        assert_eq!(v, Verification::Fault { index: 3, reason: AbortReason::LabelMismatch });
    }

    #[test]
    fn all_inconclusive_without_allowance() {
        let m = vec![missed(); 4];
        let v = verify_consistency(&m, &[S1; 4], &VerificationPolicy::strict(1.0)).unwrap();
        assert_eq!(v, Verification::Fault { index: 1, reason: AbortReason::ExcessInconclusive });
    }

    #[test]
    fn allowance_absorbs_inconclusive() {
        let m = vec![missed(), seen(S1), missed(), missed()];
        let policy = VerificationPolicy { inconclusive_allowance: 2, deadline: 1.0 };
        let v = verify_consistency(&m, &[S1; 4], &policy).unwrap();
        assert_eq!(v, Verification::Fault { index: 4, reason: AbortReason::ExcessInconclusive });
    }

    #[test]
    fn late_detection_is_a_fault() {
        let mut m = vec![seen(S1), seen(S2)];
        m[1].at_time = 1.5;
        let v = verify_consistency(&m, &[S1, S2], &VerificationPolicy::strict(1.0)).unwrap();
        assert_eq!(v, Verification::Fault { index: 2, reason: AbortReason::LateDetection });
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(verify_consistency(&[seen(S1)], &[S1, S2], &VerificationPolicy::strict(1.0)).is_err());
        assert!(parity(&[S1], &[S1, S2]).is_err());
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity(&[S1, S2, S2], &[S1, S2, S2]).unwrap(), 0);
        assert_eq!(parity(&[S1, S1, S1, S1], &[S1, S1, S1, S2]).unwrap(), 1);
    }

    #[test]
    fn schedule_examples() {
        let curve = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.0).unwrap();
        let cfg = ProtocolConfig::new(4, 1.0, curve, 0).unwrap();
        let times: Vec<f64> = phase_schedule(&cfg).iter().map(|p| p.1).collect();
        assert_eq!(times, vec![0.0, 0.5, 0.5, 0.5, 0.5]);
        let cfg = cfg.with_channel_length(0.1).unwrap();
        let sched = phase_schedule(&cfg);
        assert_eq!(sched[0], (Phase::Emit, 0.0));
        let expect = [0.0, 0.5, 0.6, 0.7, 0.8];
        for ((_, t), e) in sched.iter().zip(expect) {
            assert!((t - e).abs() < 1e-12);
        }
    }

    fn labels(n: usize) -> impl Strategy<Value = Vec<StateLabel>> {
        proptest::collection::vec(prop_oneof![Just(S1), Just(S2)], n)
    }

    proptest! {
        #[test]
        fn parity_commutes((a, b) in (1usize..40).prop_flat_map(|n| (labels(n), labels(n)))) {
            prop_assert_eq!(parity(&a, &b).unwrap(), parity(&b, &a).unwrap());
            prop_assert_eq!(parity(&a, &a).unwrap(), 0);
        }
    }
}
