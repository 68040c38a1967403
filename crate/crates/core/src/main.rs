use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use relcoin::adversary::{optimal_cheat_time, CheatStrategyKind};
use relcoin::distinguishability::{ParametricKind, DEFAULT_CURVE_SAMPLES, DEFAULT_WAVEPACKET_EPSILON};
use relcoin::fieldmodel::{WavepacketFamily, DEFAULT_GRID_POINTS};
use relcoin::protocol::Schedule;
use relcoin::simharness::{
    run_experiment, CurveSpec, ExperimentError, ExperimentResult, ExperimentSpec, Mode, ProtocolSpec, SweepAxis,
    SweepParameter,
};

#[derive(Parser)]
#[command(name = "relcoin", version, about = "Relativistic quantum coin-tossing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// TOML experiment spec; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output prefix; `.jsonl` and `.csv` are appended.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write every run's transcript.
    #[arg(long, global = true)]
    transcript: bool,
    /// States per party.
    #[arg(long, global = true)]
    n: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Honest A against honest B.
    Honest,
    /// Cheating A against honest B.
    Cheat(StrategyArgs),
    /// Sample a distinguishability curve.
    Pcurve {
        #[arg(long, value_enum)]
        family: FamilyName,
    },
    /// One cheat experiment per value of a parameter.
    Sweep {
        #[arg(long)]
        axis: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Option<Vec<f64>>,
        #[command(flatten)]
        strategy: StrategyArgs,
    },
}

#[derive(Args)]
struct StrategyArgs {
    /// Defaults to the config's strategy, else measure-and-correct.
    #[arg(long, value_enum)]
    strategy: Option<StrategyName>,
    /// Correction time; defaults to the time where p(t) = 1/2.
    #[arg(long)]
    t_measure: Option<f64>,
    /// Emission delay; defaults to T/2.
    #[arg(long)]
    delay: Option<f64>,
    /// Disable consistency checks (diagnostic mode).
    #[arg(long)]
    no_verify: bool,
    /// Reveal all labels at once, B first (diagnostic mode).
    #[arg(long)]
    unstaged: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyName {
    Mirror,
    MirrorWithRelay,
    DelayedSend,
    MeasureAndCorrect,
    CollectiveParity,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyName {
    GaussianPair,
    ExponentialTailPair,
    LinearRamp,
    Smoothstep,
    ExponentialSaturation,
}

fn default_protocol() -> ProtocolSpec {
    ProtocolSpec {
        n: 64,
        horizon: 1.0,
        channel_length: 0.0,
        seed: 0,
        verify: true,
        schedule: Schedule::Staged,
        curve: CurveSpec::Parametric {
            shape: ParametricKind::LinearRamp,
            horizon: 1.0,
            epsilon: 0.0,
            samples: DEFAULT_CURVE_SAMPLES,
        },
    }
}

fn family_curve(name: FamilyName) -> CurveSpec {
    let parametric = |shape| CurveSpec::Parametric { shape, horizon: 1.0, epsilon: 0.0, samples: DEFAULT_CURVE_SAMPLES };
    let wavepacket = |family| CurveSpec::Wavepacket {
        family,
        distance: 10.0,
        grid_points: DEFAULT_GRID_POINTS,
        grid_sigma: None,
        epsilon: DEFAULT_WAVEPACKET_EPSILON,
        samples: DEFAULT_CURVE_SAMPLES,
    };
    match name {
        FamilyName::GaussianPair => wavepacket(WavepacketFamily::gaussian(40.0, 1.0)),
        FamilyName::ExponentialTailPair => wavepacket(WavepacketFamily::exponential_tail(40.0, 1.0)),
        FamilyName::LinearRamp => parametric(ParametricKind::LinearRamp),
        FamilyName::Smoothstep => parametric(ParametricKind::Smoothstep),
        FamilyName::ExponentialSaturation => parametric(ParametricKind::ExponentialSaturation),
    }
}

fn name_of(kind: &CheatStrategyKind) -> StrategyName {
    match kind {
        CheatStrategyKind::Mirror => StrategyName::Mirror,
        CheatStrategyKind::MirrorWithRelay => StrategyName::MirrorWithRelay,
        CheatStrategyKind::DelayedSend { .. } => StrategyName::DelayedSend,
        CheatStrategyKind::MeasureAndCorrect { .. } => StrategyName::MeasureAndCorrect,
        CheatStrategyKind::CollectiveParity => StrategyName::CollectiveParity,
    }
}

/// Flags win; unset parameters fall back to the config's strategy when it is
/// of the same kind, then to defaults.
fn strategy_kind(
    args: &StrategyArgs,
    configured: Option<&CheatStrategyKind>,
    protocol: &ProtocolSpec,
) -> Result<CheatStrategyKind, ExperimentError> {
    let name = args.strategy.or(configured.map(name_of)).unwrap_or(StrategyName::MeasureAndCorrect);
    Ok(match name {
        StrategyName::Mirror => CheatStrategyKind::Mirror,
        StrategyName::MirrorWithRelay => CheatStrategyKind::MirrorWithRelay,
        StrategyName::CollectiveParity => CheatStrategyKind::CollectiveParity,
        StrategyName::DelayedSend => {
            let fallback = match configured {
                Some(CheatStrategyKind::DelayedSend { delay }) => *delay,
                _ => protocol.horizon / 2.0,
            };
            CheatStrategyKind::DelayedSend { delay: args.delay.unwrap_or(fallback) }
        }
        StrategyName::MeasureAndCorrect => {
            let t_measure = match (args.t_measure, configured) {
                (Some(t), _) => t,
                (None, Some(CheatStrategyKind::MeasureAndCorrect { t_measure })) => *t_measure,
                _ => optimal_cheat_time(&protocol.curve.build()?).0 + protocol.channel_length,
            };
            CheatStrategyKind::MeasureAndCorrect { t_measure }
        }
    })
}

fn build_spec(cli: &Cli) -> Result<ExperimentSpec, ExperimentError> {
    let base = match &cli.common.config {
        Some(path) => Some(ExperimentSpec::load(path)?),
        None => None,
    };
    let mut protocol = base.as_ref().map_or_else(default_protocol, |s| s.protocol.clone());
    if let Some(n) = cli.common.n {
        protocol.n = n;
    }
    if let Some(seed) = cli.common.seed {
        protocol.seed = seed;
    }
    let apply_diagnostics = |p: &mut ProtocolSpec, s: &StrategyArgs| {
        if s.no_verify {
            p.verify = false;
        }
        if s.unstaged {
            p.schedule = Schedule::Unstaged;
        }
    };
    let configured = match base.as_ref().map(|s| &s.mode) {
        Some(Mode::Cheat { strategy } | Mode::Sweep { strategy }) => Some(strategy),
        _ => None,
    };
    let (mode, sweep) = match &cli.command {
        Command::Honest => (Mode::Honest, None),
        Command::Cheat(s) => {
            apply_diagnostics(&mut protocol, s);
            (Mode::Cheat { strategy: strategy_kind(s, configured, &protocol)? }, None)
        }
        Command::Pcurve { family } => {
            protocol.curve = family_curve(*family);
            (Mode::Pcurve, None)
        }
        Command::Sweep { axis, values, strategy } => {
            apply_diagnostics(&mut protocol, strategy);
            let base_sweep = base.as_ref().and_then(|s| s.sweep.clone());
            let axis = match axis {
                Some(name) => SweepParameter::parse(name).ok_or_else(|| {
                    ExperimentError::config("sweep.axis", format!("unknown axis `{name}` (t_measure, delay, n, channel_length)"))
                })?,
                None => base_sweep.as_ref().map(|s| s.axis).ok_or_else(|| ExperimentError::config("sweep.axis", "missing"))?,
            };
            let values = match values {
                Some(v) => v.clone(),
                None => base_sweep.map(|s| s.values).ok_or_else(|| ExperimentError::config("sweep.values", "missing"))?,
            };
            (Mode::Sweep { strategy: strategy_kind(strategy, configured, &protocol)? }, Some(SweepAxis { axis, values }))
        }
    };
    let spec = ExperimentSpec {
        mode,
        protocol,
        trials: cli.common.trials.or(base.as_ref().map(|s| s.trials)).unwrap_or(1000),
        sweep,
        output: base.as_ref().and_then(|s| s.output.clone()),
        transcripts: cli.common.transcript || base.as_ref().is_some_and(|s| s.transcripts),
    };
    spec.validate()?;
    Ok(spec)
}

fn report(result: &ExperimentResult) {
    match result {
        ExperimentResult::Honest { report: r } => println!(
            "honest N={} trials={} aborts={} disagreements={} bit0={:.6}",
            r.n, r.trials, r.aborts, r.disagreements, r.bit0_frequency
        ),
        ExperimentResult::Cheat { summary, .. } | ExperimentResult::Sweep { summary, .. } => {
            for row in summary {
                let pred = row.analytic_prediction.map_or("-".into(), |p| format!("{p:.6}"));
                let z = row.z_score.map_or("-".into(), |z| format!("{z:+.2}"));
                let flag = if row.flagged { "  INCONSISTENT" } else { "" };
                println!(
                    "{:<20} estimate={:.6} ±{:.6} analytic={pred} z={z}{flag}",
                    row.strategy, row.estimate, row.ci95_halfwidth
                );
            }
        }
        ExperimentResult::Pcurve { t_eff, epsilon, samples } => {
            println!("curve samples={} t_eff={t_eff:.6} epsilon={epsilon:.3e}", samples.len())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let spec = match build_spec(&cli) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let prefix = cli
        .common
        .out
        .clone()
        .or_else(|| spec.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("relcoin-out"));
    match run_experiment(&spec, &prefix) {
        Ok((result, files)) => {
            report(&result);
            println!("wrote {} and {}", files.records.display(), files.table.display());
            if result.flagged() {
                ExitCode::from(3)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ ExperimentError::Simulation(_)) => {
            eprintln!("error: {e}");
            ExitCode::from(4)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
