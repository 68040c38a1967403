use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::adversary::{run_cheat_trial, AdversaryError, CheatReport, CheatStrategyKind, TrialResult};
use crate::distinguishability::{
    parametric_curve_with_samples, wavepacket_curve_to_threshold, CurveError, DistinguishabilityCurve, ParametricKind,
    DEFAULT_CURVE_SAMPLES, DEFAULT_WAVEPACKET_EPSILON,
};
use crate::fieldmodel::{make_orthogonal_pair, MomentumGrid, WavepacketFamily, DEFAULT_GRID_POINTS};
use crate::protocol::{run_protocol, HonestParty, Party, ProtocolConfig, ProtocolError, RunResult, Schedule};
use crate::rng::trial_seed;

use super::{round12, summarize, SimError, SummaryRow};

pub const VERSION: &str = concat!("relcoin ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("simulation fault: {0}")]
    Simulation(String),
}

impl ExperimentError {
    pub fn config(path: &str, message: impl Into<String>) -> Self {
        Self::Config { path: path.into(), message: message.into() }
    }
}

impl From<AdversaryError> for ExperimentError {
    fn from(e: AdversaryError) -> Self {
        match e {
            AdversaryError::InvalidStrategy(m) => Self::config("mode.strategy", m),
            AdversaryError::Protocol(p) => p.into(),
        }
    }
}

impl From<ProtocolError> for ExperimentError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidConfig(m) | ProtocolError::InvalidInput(m) => Self::config("protocol", m),
            ProtocolError::Simulation(s) => Self::Simulation(s.to_string()),
        }
    }
}

impl From<SimError> for ExperimentError {
    fn from(e: SimError) -> Self {
        Self::Simulation(e.to_string())
    }
}

fn default_samples() -> usize {
    DEFAULT_CURVE_SAMPLES
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_wavepacket_epsilon() -> f64 {
    DEFAULT_WAVEPACKET_EPSILON
}

fn default_true() -> bool {
    true
}

fn default_trials() -> u64 {
    1000
}

/// Source of the protocol's `p(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum CurveSpec {
    Parametric {
        shape: ParametricKind,
        horizon: f64,
        #[serde(default)]
        epsilon: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
    /// Crossed-mass curve of the family's first state, emitted at its
    /// offset toward an observer at `distance`.
    Wavepacket {
        family: WavepacketFamily<f64>,
        distance: f64,
        #[serde(default = "default_grid_points")]
        grid_points: usize,
        /// Momentum-grid scale; the grid spans `center ± 4·grid_sigma`.
        /// Defaults to the Gaussian width, or four sech scales.
        #[serde(default)]
        grid_sigma: Option<f64>,
        #[serde(default = "default_wavepacket_epsilon")]
        epsilon: f64,
        #[serde(default = "default_samples")]
        samples: usize,
    },
}

impl CurveSpec {
    pub fn build(&self) -> Result<DistinguishabilityCurve, ExperimentError> {
        let wrap = |e: CurveError| ExperimentError::config("protocol.curve", e.to_string());
        match self {
            Self::Parametric { shape, horizon, epsilon, samples } => {
                parametric_curve_with_samples(*shape, *horizon, *epsilon, *samples).map_err(wrap)
            }
            Self::Wavepacket { family, distance, grid_points, grid_sigma, epsilon, samples } => {
                let sigma = grid_sigma.unwrap_or(match family {
                    WavepacketFamily::GaussianPair { width, .. } => *width,
                    WavepacketFamily::ExponentialTailPair { scale, .. } => 4.0 * scale,
                });
                let grid = MomentumGrid::uniform(family.center(), sigma, *grid_points)
                    .map_err(|e| ExperimentError::config("protocol.curve.grid_sigma", e.to_string()))?;
                let (psi, _) = make_orthogonal_pair(&Arc::new(grid), family)
                    .map_err(|e| ExperimentError::config("protocol.curve.family", e.to_string()))?;
                let source = match family {
                    WavepacketFamily::GaussianPair { offset, .. }
                    | WavepacketFamily::ExponentialTailPair { offset, .. } => *offset,
                };
                wavepacket_curve_to_threshold(&psi, source, *distance, *epsilon, *samples).map_err(wrap)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSpec {
    pub n: usize,
    pub horizon: f64,
    #[serde(default)]
    pub channel_length: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub verify: bool,
    #[serde(default)]
    pub schedule: Schedule,
    pub curve: CurveSpec,
}

impl ProtocolSpec {
    pub fn build(&self) -> Result<ProtocolConfig, ExperimentError> {
        let curve = self.curve.build()?;
        let cfg = ProtocolConfig::new(self.n, self.horizon, curve, self.seed)
            .and_then(|c| c.with_channel_length(self.channel_length))
            .map_err(|e| ExperimentError::config("protocol", e.to_string()))?;
        Ok(cfg.with_verification(self.verify).with_schedule(self.schedule))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Mode {
    Honest,
    Cheat { strategy: CheatStrategyKind },
    Pcurve,
    /// One cheat experiment per value of `sweep.axis`.
    Sweep { strategy: CheatStrategyKind },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    TMeasure,
    Delay,
    N,
    ChannelLength,
}

impl SweepParameter {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "t_measure" => Some(Self::TMeasure),
            "delay" => Some(Self::Delay),
            "n" => Some(Self::N),
            "channel_length" => Some(Self::ChannelLength),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::TMeasure => "t_measure",
            Self::Delay => "delay",
            Self::N => "n",
            Self::ChannelLength => "channel_length",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepAxis {
    pub axis: SweepParameter,
    pub values: Vec<f64>,
}

/// One experiment, as read from a TOML document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub protocol: ProtocolSpec,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub sweep: Option<SweepAxis>,
    /// Output prefix; `.jsonl` and `.csv` are appended.
    #[serde(default)]
    pub output: Option<String>,
    /// Also write every run's transcript.
    #[serde(default)]
    pub transcripts: bool,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let spec: Self = toml::from_str(text).map_err(|e| {
            let message = e.message().to_string();
            let path = e
                .span()
                .map(|s| format!("line {}", text[..s.start.min(text.len())].lines().count().max(1)))
                .unwrap_or_else(|| "<document>".into());
            ExperimentError::Config { path, message }
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text =
            fs::read_to_string(path).map_err(|source| ExperimentError::Io { path: path.to_path_buf(), source })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.trials == 0 {
            return Err(ExperimentError::config("trials", "must be >= 1"));
        }
        match (&self.mode, &self.sweep) {
            (Mode::Sweep { .. }, None) => return Err(ExperimentError::config("sweep", "sweep mode needs an axis")),
            (Mode::Sweep { .. }, Some(s)) if s.values.is_empty() => {
                return Err(ExperimentError::config("sweep.values", "must be nonempty"));
            }
            (Mode::Sweep { .. }, Some(s)) => {
                if let Some(v) = s.values.iter().find(|v| !v.is_finite()) {
                    return Err(ExperimentError::config("sweep.values", format!("non-finite value {v}")));
                }
            }
            (_, Some(_)) => return Err(ExperimentError::config("sweep", "only allowed in sweep mode")),
            _ => {}
        }
        if self.mode == Mode::Pcurve {
            // only the curve is used
            self.protocol.curve.build()?;
        } else {
            self.protocol.build()?;
        }
        Ok(())
    }

    /// SHA-256 of the spec's canonical JSON form.
    pub fn hash(&self) -> String {
        let canon = serde_json::to_string(self).expect("spec serializes");
        Sha256::digest(canon.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Outcome counts of honest-vs-honest runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HonestReport {
    pub n: usize,
    pub trials: u64,
    pub aborts: u64,
    /// Runs where the two final verdicts differ.
    pub disagreements: u64,
    pub bit0: u64,
    pub bit1: u64,
    pub bit0_frequency: f64,
    pub abort_reasons: BTreeMap<String, u64>,
}

fn honest_run(config: &ProtocolConfig, index: u64, base_seed: u64) -> Result<RunResult, ProtocolError> {
    let cfg = config.clone().with_seed(trial_seed(base_seed, index));
    let mut a = HonestParty::new(Party::A, cfg.n);
    let mut b = HonestParty::new(Party::B, cfg.n);
    run_protocol(&cfg, &mut a, &mut b)
}

#[derive(Debug, Clone, Default)]
struct HonestTally {
    aborts: u64,
    disagreements: u64,
    bits: [u64; 2],
    reasons: BTreeMap<String, u64>,
}

impl HonestTally {
    fn add(mut self, r: &RunResult) -> Self {
        if r.outcome_a != r.outcome_b {
            self.disagreements += 1;
        }
        match r.outcome_b {
            crate::protocol::Outcome::Bit { value } => self.bits[value as usize] += 1,
            crate::protocol::Outcome::Abort { reason, .. } => {
                self.aborts += 1;
                *self.reasons.entry(reason.code().to_string()).or_default() += 1;
            }
        }
        self
    }

    fn merge(mut self, other: Self) -> Self {
        self.aborts += other.aborts;
        self.disagreements += other.disagreements;
        self.bits[0] += other.bits[0];
        self.bits[1] += other.bits[1];
        for (k, v) in other.reasons {
            *self.reasons.entry(k).or_default() += v;
        }
        self
    }
}

/// `trials` honest runs with seeds derived from `(base_seed, index)`.
pub fn run_honest_experiment(config: &ProtocolConfig, trials: u64, base_seed: u64) -> Result<HonestReport, ProtocolError> {
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| honest_run(config, i, base_seed).map(|r| HonestTally::default().add(&r)))
        .try_reduce(HonestTally::default, |a, b| Ok(a.merge(b)))?;
    let accepted = tally.bits[0] + tally.bits[1];
    Ok(HonestReport {
        n: config.n,
        trials,
        aborts: tally.aborts,
        disagreements: tally.disagreements,
        bit0: tally.bits[0],
        bit1: tally.bits[1],
        bit0_frequency: if accepted > 0 { tally.bits[0] as f64 / accepted as f64 } else { f64::NAN },
        abort_reasons: tally.reasons,
    })
}

/// Sweep row: the axis value and the cheat report obtained there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepParameter,
    pub value: f64,
    pub report: CheatReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExperimentResult {
    Honest { report: HonestReport },
    Cheat { report: CheatReport, summary: Vec<SummaryRow> },
    Pcurve { t_eff: f64, epsilon: f64, samples: Vec<(f64, f64)> },
    Sweep { rows: Vec<SweepRow>, summary: Vec<SummaryRow> },
}

impl ExperimentResult {
    /// Whether [`summarize`] flagged any row.
    pub fn flagged(&self) -> bool {
        match self {
            Self::Cheat { summary, .. } | Self::Sweep { summary, .. } => summary.iter().any(|r| r.flagged),
            _ => false,
        }
    }
}

fn apply_axis(
    axis: SweepParameter,
    value: f64,
    protocol: &ProtocolSpec,
    strategy: CheatStrategyKind,
) -> Result<(ProtocolConfig, CheatStrategyKind), ExperimentError> {
    let mut protocol = protocol.clone();
    let mut strategy = strategy;
    match (axis, &mut strategy) {
        (SweepParameter::TMeasure, CheatStrategyKind::MeasureAndCorrect { t_measure }) => *t_measure = value,
        (SweepParameter::Delay, CheatStrategyKind::DelayedSend { delay }) => *delay = value,
        (SweepParameter::TMeasure | SweepParameter::Delay, _) => {
            return Err(ExperimentError::config("sweep.axis", format!("{} does not apply to this strategy", axis.name())));
        }
        (SweepParameter::N, _) => {
            if value < 1.0 || value.fract() != 0.0 {
                return Err(ExperimentError::config("sweep.values", format!("N must be a positive integer, got {value}")));
            }
            protocol.n = value as usize;
        }
        (SweepParameter::ChannelLength, _) => protocol.channel_length = value,
    }
    Ok((protocol.build()?, strategy))
}

fn cheat_experiment(
    kind: CheatStrategyKind,
    config: &ProtocolConfig,
    trials: u64,
    base_seed: u64,
    transcripts: Option<&mut Vec<String>>,
) -> Result<CheatReport, ExperimentError> {
    let runs: Vec<(TrialResult, Option<String>)> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let cfg = config.clone().with_seed(trial_seed(base_seed, i));
            let trial = run_cheat_trial(&kind, &cfg)?;
            let text = transcripts.is_some().then(|| trial.run.transcript.to_jsonl());
            Ok((trial.result, text))
        })
        .collect::<Result<_, AdversaryError>>()?;
    let mut counts = [0u64; 4];
    for (r, _) in &runs {
        counts[*r as usize] += 1;
    }
    if let Some(out) = transcripts {
        out.extend(runs.into_iter().filter_map(|(_, t)| t));
    }
    Ok(CheatReport::from_counts(kind, config, counts))
}

/// Runs `spec` and returns its results plus, when requested, one
/// transcript per run in trial order.
pub fn execute(spec: &ExperimentSpec) -> Result<(ExperimentResult, Vec<String>), ExperimentError> {
    spec.validate()?;
    let seed = spec.protocol.seed;
    let mut transcripts = Vec::new();
    let result = match &spec.mode {
        Mode::Honest => {
            let config = spec.protocol.build()?;
            if spec.transcripts {
                transcripts = (0..spec.trials)
                    .into_par_iter()
                    .map(|i| honest_run(&config, i, seed).map(|r| r.transcript.to_jsonl()))
                    .collect::<Result<_, _>>()?;
            }
            ExperimentResult::Honest { report: run_honest_experiment(&config, spec.trials, seed)? }
        }
        Mode::Cheat { strategy } => {
            let config = spec.protocol.build()?;
            let keep = spec.transcripts.then_some(&mut transcripts);
            let report = cheat_experiment(*strategy, &config, spec.trials, seed, keep)?;
            let summary = summarize(std::slice::from_ref(&report));
            ExperimentResult::Cheat { report, summary }
        }
        Mode::Pcurve => {
            let curve = spec.protocol.curve.build()?;
            ExperimentResult::Pcurve { t_eff: curve.t_eff(), epsilon: curve.epsilon(), samples: curve.samples().collect() }
        }
        Mode::Sweep { strategy } => {
            let axis = spec.sweep.as_ref().expect("validated");
            let mut rows = Vec::with_capacity(axis.values.len());
            for &value in &axis.values {
                let (config, kind) = apply_axis(axis.axis, value, &spec.protocol, *strategy)?;
                let keep = spec.transcripts.then_some(&mut transcripts);
                // same base seed at every point: common random numbers
                let report = cheat_experiment(kind, &config, spec.trials, seed, keep)?;
                rows.push(SweepRow { axis: axis.axis, value, report });
            }
            let reports: Vec<CheatReport> = rows.iter().map(|r| r.report.clone()).collect();
            ExperimentResult::Sweep { summary: summarize(&reports), rows }
        }
    };
    Ok((result, transcripts))
}

/// Files written by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub records: PathBuf,
    pub table: PathBuf,
    pub transcripts: Option<PathBuf>,
}

#[derive(Serialize)]
struct Header<'a> {
    record: &'static str,
    spec_sha256: &'a str,
    seed: u64,
    version: &'static str,
}

fn header_lines(spec: &ExperimentSpec) -> (String, String) {
    let hash = spec.hash();
    let json = serde_json::to_string(&Header {
        record: "header",
        spec_sha256: &hash,
        seed: spec.protocol.seed,
        version: VERSION,
    })
    .expect("header serializes");
    let csv = format!("# spec_sha256={hash}\n# seed={}\n# version={VERSION}\n", spec.protocol.seed);
    (json, csv)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| round12(v).to_string()).unwrap_or_default()
}

fn num(x: f64) -> String {
    round12(x).to_string()
}

fn table(result: &ExperimentResult) -> Vec<Vec<String>> {
    let cheat_header = || {
        vec!["strategy", "n", "trials", "wins", "detected", "lucky", "undetected_failures", "estimate", "ci95", "analytic", "z", "flagged"]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let cheat_row = |r: &CheatReport, s: &SummaryRow| {
        vec![
            r.strategy.name().to_string(),
            r.n.to_string(),
            r.trials.to_string(),
            r.wins.to_string(),
            r.detected.to_string(),
            r.lucky.to_string(),
            r.undetected_failures.to_string(),
            num(r.success_estimate),
            num(r.ci95_halfwidth),
            opt(r.analytic_prediction),
            opt(s.z_score),
            s.flagged.to_string(),
        ]
    };
    match result {
        ExperimentResult::Honest { report: r } => vec![
            ["n", "trials", "aborts", "disagreements", "bit0", "bit1", "bit0_frequency"].map(String::from).to_vec(),
            vec![
                r.n.to_string(),
                r.trials.to_string(),
                r.aborts.to_string(),
                r.disagreements.to_string(),
                r.bit0.to_string(),
                r.bit1.to_string(),
                num(r.bit0_frequency),
            ],
        ],
        ExperimentResult::Cheat { report, summary } => vec![cheat_header(), cheat_row(report, &summary[0])],
        ExperimentResult::Pcurve { samples, .. } => std::iter::once(vec!["t".to_string(), "p".to_string()])
            .chain(samples.iter().map(|&(t, p)| vec![num(t), num(p)]))
            .collect(),
        ExperimentResult::Sweep { rows, summary } => {
            let mut head = vec![rows.first().map_or("value", |r| r.axis.name()).to_string()];
            head.extend(cheat_header());
            std::iter::once(head)
                .chain(rows.iter().zip(summary).map(|(r, s)| {
                    let mut row = vec![num(r.value)];
                    row.extend(cheat_row(&r.report, s));
                    row
                }))
                .collect()
        }
    }
}

fn rounded_json(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            serde_json::Number::from_f64(round12(n.as_f64().unwrap_or(f64::NAN))).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(rounded_json).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, rounded_json(v))).collect()),
        other => other,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), ExperimentError> {
    let io = |source| ExperimentError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(contents.as_bytes()).map_err(io)
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Executes `spec` and writes `<prefix>.jsonl` (header line, then one
/// result record), `<prefix>.csv` (commented header, then the table) and,
/// with transcripts enabled, `<prefix>.transcripts.jsonl`.
pub fn run_experiment(spec: &ExperimentSpec, prefix: &Path) -> Result<(ExperimentResult, OutputFiles), ExperimentError> {
    let (result, transcripts) = execute(spec)?;
    let (json_header, csv_header) = header_lines(spec);

    let record = rounded_json(serde_json::to_value(&result).expect("result serializes"));
    let records = format!("{json_header}\n{}\n", serde_json::to_string(&record).expect("value serializes"));

    let mut writer = csv::WriterBuilder::new().flexible(false).from_writer(Vec::new());
    for row in table(&result) {
        writer.write_record(&row).map_err(|e| ExperimentError::Simulation(e.to_string()))?;
    }
    let body = writer.into_inner().map_err(|e| ExperimentError::Simulation(e.to_string()))?;
    let csv_text = format!("{csv_header}{}", String::from_utf8(body).expect("csv is utf-8"));

    let files = OutputFiles {
        records: with_suffix(prefix, ".jsonl"),
        table: with_suffix(prefix, ".csv"),
        transcripts: spec.transcripts.then(|| with_suffix(prefix, ".transcripts.jsonl")),
    };
    write_file(&files.records, &records)?;
    write_file(&files.table, &csv_text)?;
    if let Some(path) = &files.transcripts {
        let mut text = format!("{json_header}\n");
        for (i, t) in transcripts.iter().enumerate() {
            text.push_str(&format!("{{\"record\":\"run\",\"trial\":{i}}}\n"));
            text.push_str(t);
        }
        write_file(path, &text)?;
    }
    Ok((result, files))
}

#[cfg(test)]
mod tests {
    use super::*;

    const HONEST: &str = r#"
trials = 50

[mode]
kind = "honest"

[protocol]
n = 8
horizon = 1.0
seed = 3

[protocol.curve]
source = "parametric"
shape = "linear_ramp"
horizon = 1.0
"#;

    const SWEEP: &str = r#"
trials = 200

[mode]
kind = "sweep"
strategy = { kind = "measure_and_correct", t_measure = 0.0 }

[sweep]
axis = "t_measure"
values = [0.0, 0.5, 1.0]

[protocol]
n = 1
horizon = 2.0

[protocol.curve]
source = "parametric"
shape = "linear_ramp"
horizon = 1.0
"#;

    #[test]
    fn parses_and_runs_honest() {
        let spec = ExperimentSpec::from_toml(HONEST).unwrap();
        assert_eq!(spec.protocol.channel_length, 0.0);
        assert!(spec.protocol.verify);
        let (result, transcripts) = execute(&spec).unwrap();
        assert!(transcripts.is_empty());
        let ExperimentResult::Honest { report } = result else { panic!("wrong mode") };
        assert_eq!(report.trials, 50);
        assert_eq!(report.aborts, 0);
        assert_eq!(report.bit0 + report.bit1, 50);
    }

    #[test]
    fn unknown_keys_are_errors() {
        let text = HONEST.replace("seed = 3", "seed = 3\nseeed = 4");
        let err = ExperimentSpec::from_toml(&text).unwrap_err();
        assert!(matches!(err, ExperimentError::Config { .. }));
        assert!(err.to_string().contains("seeed"), "{err}");
        let text = HONEST.replace("shape = \"linear_ramp\"", "shape = \"linear_ramp\"\nwiggle = 2");
        assert!(ExperimentSpec::from_toml(&text).is_err());
    }

    #[test]
    fn semantic_errors_name_the_field() {
        let err = ExperimentSpec::from_toml(&HONEST.replace("trials = 50", "trials = 0")).unwrap_err();
        assert!(err.to_string().contains("`trials`"), "{err}");
        let err = ExperimentSpec::from_toml(&HONEST.replace("n = 8", "n = 0")).unwrap_err();
        assert!(err.to_string().contains("`protocol`"), "{err}");
        let err = ExperimentSpec::from_toml(&SWEEP.replace("values = [0.0, 0.5, 1.0]", "values = []")).unwrap_err();
        assert!(err.to_string().contains("sweep.values"), "{err}");
    }

    #[test]
    fn sweep_peaks_at_half_ramp() {
        let spec = ExperimentSpec::from_toml(SWEEP).unwrap();
        let (result, _) = execute(&spec).unwrap();
        let ExperimentResult::Sweep { rows, summary } = result else { panic!("wrong mode") };
        let wins: Vec<u64> = rows.iter().map(|r| r.report.wins).collect();
        assert_eq!(wins[0], 0);
        assert_eq!(wins[2], 0);
        assert!(wins[1] > 30);
        assert_eq!(summary.len(), 3);
    }

    #[test]
    fn sweep_axis_must_fit_strategy() {
        let text = SWEEP.replace("axis = \"t_measure\"", "axis = \"delay\"");
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        assert!(matches!(execute(&spec), Err(ExperimentError::Config { .. })));
    }

    #[test]
    fn pcurve_from_wavepacket() {
        let text = r#"
[mode]
kind = "pcurve"

[protocol]
n = 2
horizon = 40.0

[protocol.curve]
source = "wavepacket"
family = { family = "exponential_tail_pair", center = 40.0, scale = 1.0, offset = 0.0 }
distance = 10.0
"#;
        let spec = ExperimentSpec::from_toml(text).unwrap();
        let (result, _) = execute(&spec).unwrap();
        let ExperimentResult::Pcurve { samples, epsilon, .. } = result else { panic!("wrong mode") };
        assert_eq!(samples[0], (0.0, 0.0));
        assert!(epsilon <= 1e-6);
    }

    #[test]
    fn output_files_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::from_toml(HONEST).unwrap();
        spec.transcripts = true;
        let (_, f1) = run_experiment(&spec, &dir.path().join("a/run")).unwrap();
        let (_, f2) = run_experiment(&spec, &dir.path().join("b/run")).unwrap();
        for (p, q) in [(&f1.records, &f2.records), (&f1.table, &f2.table)] {
            assert_eq!(fs::read(p).unwrap(), fs::read(q).unwrap());
        }
        assert_eq!(fs::read(f1.transcripts.unwrap()).unwrap(), fs::read(f2.transcripts.unwrap()).unwrap());
        let csv = fs::read_to_string(&f1.table).unwrap();
        assert!(csv.starts_with(&format!("# spec_sha256={}\n", spec.hash())));
        let first = fs::read_to_string(&f1.records).unwrap();
        let header: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
        assert_eq!(header["seed"], 3);
        assert_eq!(header["version"], VERSION);
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentSpec::from_toml(HONEST).unwrap();
        let mut b = a.clone();
        b.protocol.seed = 4;
        assert_eq!(a.hash(), ExperimentSpec::from_toml(HONEST).unwrap().hash());
        assert_ne!(a.hash(), b.hash());
    }
}
