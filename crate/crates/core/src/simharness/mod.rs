//! Event transport, experiment driver and result emission.

mod engine;
mod experiment;

use serde::{Deserialize, Serialize, Serializer};

use crate::adversary::CheatReport;

pub use engine::{run_events, EventLog, SimError, Transport, DEFAULT_EVENT_BOUND};
pub use experiment::{
    execute, run_experiment, run_honest_experiment, CurveSpec, ExperimentError, ExperimentResult, ExperimentSpec,
    HonestReport, Mode, OutputFiles, ProtocolSpec, SweepAxis, SweepParameter, SweepRow, VERSION,
};

/// `x` rounded to 12 significant digits.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

pub fn serialize_rounded<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round12(*x))
}

/// |z| above which an estimate is flagged as inconsistent with its
/// analytic prediction.
pub const Z_FLAG: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub strategy: String,
    pub estimate: f64,
    pub ci95_halfwidth: f64,
    pub analytic_prediction: Option<f64>,
    pub z_score: Option<f64>,
    pub flagged: bool,
}

/// Compares each report with its prediction. The z-score uses the binomial
/// standard error at the predicted rate; a degenerate prediction (0 or 1)
/// gives `z = 0` on an exact match and an infinite `z` otherwise.
pub fn summarize(reports: &[CheatReport]) -> Vec<SummaryRow> {
    reports
        .iter()
        .map(|r| {
            let z = r.analytic_prediction.map(|p| {
                let se = (p * (1.0 - p) / r.trials as f64).sqrt();
                let diff = r.success_estimate - p;
                if se > 0.0 {
                    diff / se
                } else if diff == 0.0 {
                    0.0
                } else {
                    diff.signum() * f64::INFINITY
                }
            });
            SummaryRow {
                strategy: r.strategy.name().to_string(),
                estimate: r.success_estimate,
                ci95_halfwidth: r.ci95_halfwidth,
                analytic_prediction: r.analytic_prediction,
                z_score: z,
                flagged: z.is_some_and(|z| z.abs() > Z_FLAG),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::CheatStrategyKind;

    fn report(estimate: f64, prediction: Option<f64>, trials: u64) -> CheatReport {
        CheatReport {
            strategy: CheatStrategyKind::CollectiveParity,
            n: 1,
            trials,
            wins: (estimate * trials as f64) as u64,
            detected: 0,
            lucky: 0,
            undetected_failures: 0,
            success_estimate: estimate,
            ci95_halfwidth: 0.0,
            analytic_prediction: prediction,
        }
    }

    #[test]
    fn summarize_flags_gross_deviation() {
        let rows = summarize(&[report(0.2502, Some(0.25), 100_000), report(0.5, Some(0.25), 100_000)]);
        assert!(!rows[0].flagged && rows[0].z_score.unwrap().abs() < 4.0);
        assert!(rows[1].flagged);
    }

    #[test]
    fn summarize_without_prediction() {
        let rows = summarize(&[report(0.3, None, 10)]);
        assert_eq!(rows[0].z_score, None);
        assert!(!rows[0].flagged);
    }

    #[test]
    fn degenerate_predictions() {
        assert_eq!(summarize(&[report(1.0, Some(1.0), 10)])[0].z_score, Some(0.0));
        assert!(summarize(&[report(0.9, Some(1.0), 10)])[0].flagged);
    }

    #[test]
    fn rounding_keeps_twelve_digits() {
        assert_eq!(round12(0.1 + 0.2), 0.3);
        assert_eq!(round12(1.0 / 3.0), 0.333333333333);
        assert_eq!(round12(0.0), 0.0);
        assert!(round12(f64::NAN).is_nan());
    }
}
