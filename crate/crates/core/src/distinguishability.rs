//! Time-dependent identification probability `p(t)`: the chance that a
//! measurement completed by time `t` has identified which of the two
//! orthogonal states was sent.
//!
//! Curves are stored as monotone polylines. They come either from a
//! parametric family or from wavepacket geometry, where `p(t)` is the
//! probability mass of a right-moving packet that has crossed into the
//! observer's half-line by time `t`. The wavepacket curve is a modeling
//! choice: any monotone `p(t)` with `p(0) = 0` is admissible.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fieldmodel::{position_density, FieldError, MomentumAmplitude};
use crate::protocol::StateLabel;
use crate::rng::RandomStream;
use crate::scalar::Real;

pub const DEFAULT_CURVE_SAMPLES: usize = 512;
/// Residual failure probability used for exponential-tail wavepacket curves.
pub const DEFAULT_WAVEPACKET_EPSILON: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("probability {target} is above the attainable maximum {max}")]
    UnattainableProbability { target: f64, max: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Monotone sampled map `t ↦ p(t)` with `p(0) = 0` and final value `1 − ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct DistinguishabilityCurve<S = f64> {
    times: Vec<S>,
    probs: Vec<S>,
    epsilon: S,
    t_eff: S,
}

impl<S: Real> DistinguishabilityCurve<S> {
    /// Validates `(t, p)` samples. The first sample must be `(0, 0)`, times
    /// strictly increasing, probabilities nondecreasing in `[0, 1]`, and the
    /// final probability positive.
    pub fn from_samples(samples: Vec<(S, S)>) -> Result<Self, CurveError> {
        if samples.len() < 2 {
            return Err(CurveError::InvalidInput("a curve needs at least two samples".into()));
        }
        let (times, probs): (Vec<S>, Vec<S>) = samples.into_iter().unzip();
        if times[0] != S::zero() || probs[0] != S::zero() {
            return Err(CurveError::InvalidInput("curve must start at (0, 0)".into()));
        }
        if times.iter().chain(&probs).any(|v| !v.is_finite()) {
            return Err(CurveError::InvalidInput("non-finite curve sample".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::InvalidInput("sample times must be strictly increasing".into()));
        }
        if probs.windows(2).any(|w| w[1] < w[0]) {
            return Err(CurveError::InvalidInput("probabilities must be nondecreasing".into()));
        }
        if probs.iter().any(|p| *p < S::zero() || *p > S::one()) {
            return Err(CurveError::InvalidInput("probabilities must lie in [0, 1]".into()));
        }
        let last = *probs.last().expect("nonempty");
        if last <= S::zero() {
            return Err(CurveError::InvalidInput("curve never rises above zero".into()));
        }
        let first_final = probs.iter().position(|p| *p == last).expect("last is present");
        Ok(Self { t_eff: times[first_final], epsilon: S::one() - last, times, probs })
    }

    pub fn epsilon(&self) -> S {
        self.epsilon
    }

    /// First sample time at which the final probability `1 − ε` is reached.
    pub fn t_eff(&self) -> S {
        self.t_eff
    }

    pub fn max_probability(&self) -> S {
        *self.probs.last().expect("nonempty")
    }

    pub fn samples(&self) -> impl Iterator<Item = (S, S)> + '_ {
        self.times.iter().copied().zip(self.probs.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// `p(t)` by linear interpolation; `0` before the first sample and
    /// `1 − ε` after the last.
    pub fn value(&self, t: S) -> S {
        if !(t > S::zero()) {
            return S::zero();
        }
        let last = self.times.len() - 1;
        if t >= self.times[last] {
            return self.probs[last];
        }
        // first index with time > t; 1 ≤ hi ≤ last
        let hi = self.times.partition_point(|&s| s <= t);
        let lo = hi - 1;
        let frac = (t - self.times[lo]) / (self.times[hi] - self.times[lo]);
        self.probs[lo] + frac * (self.probs[hi] - self.probs[lo])
    }

    /// Two-column `t p` text, twelve significant digits.
    pub fn export_text(&self) -> String {
        let mut out = String::from("# t p\n");
        for (t, p) in self.samples() {
            let _ = writeln!(out, "{:.11e} {:.11e}", t.to_f64_lossy(), p.to_f64_lossy());
        }
        out
    }

    pub fn to_f64(&self) -> DistinguishabilityCurve<f64> {
        DistinguishabilityCurve {
            times: self.times.iter().map(|t| t.to_f64_lossy()).collect(),
            probs: self.probs.iter().map(|p| p.to_f64_lossy()).collect(),
            epsilon: self.epsilon.to_f64_lossy(),
            t_eff: self.t_eff.to_f64_lossy(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParametricKind {
    LinearRamp,
    Smoothstep,
    ExponentialSaturation,
}

impl ParametricKind {
    pub fn shape<S: Real>(self, u: S) -> S {
        let u = u.max(S::zero()).min(S::one());
        match self {
            Self::LinearRamp => u,
            Self::Smoothstep => u * u * (S::lit(3.0) - S::lit(2.0) * u),
            Self::ExponentialSaturation => {
                let three = S::lit(3.0);
                (S::one() - (-three * u).exp()) / (S::one() - (-three).exp())
            }
        }
    }
}

pub fn parametric_curve<S: Real>(
    kind: ParametricKind,
    horizon: S,
    epsilon: S,
) -> Result<DistinguishabilityCurve<S>, CurveError> {
    parametric_curve_with_samples(kind, horizon, epsilon, DEFAULT_CURVE_SAMPLES)
}

pub fn parametric_curve_with_samples<S: Real>(
    kind: ParametricKind,
    horizon: S,
    epsilon: S,
    samples: usize,
) -> Result<DistinguishabilityCurve<S>, CurveError> {
    if !(horizon.is_finite() && horizon > S::zero()) {
        return Err(CurveError::InvalidInput("horizon must be positive".into()));
    }
    if !(epsilon >= S::zero() && epsilon < S::one()) {
        return Err(CurveError::InvalidInput("epsilon must lie in [0, 1)".into()));
    }
    if samples < 2 {
        return Err(CurveError::InvalidInput("need at least two samples".into()));
    }
    let scale = S::one() - epsilon;
    let last = S::from_usize_lossy(samples - 1);
    let mut pts = Vec::with_capacity(samples);
    let mut running = S::zero();
    for k in 0..samples {
        let (t, p) = if k + 1 == samples {
            (horizon, scale)
        } else {
            let u = S::from_usize_lossy(k) / last;
            (horizon * u, scale * kind.shape(u))
        };
        running = running.max(p);
        pts.push((t, running));
    }
    DistinguishabilityCurve::from_samples(pts)
}

/// Smallest `t` with `p(t) ≥ target`, exact on the polyline.
pub fn invert_curve<S: Real>(curve: &DistinguishabilityCurve<S>, target: S) -> Result<S, CurveError> {
    if !(target >= S::zero()) {
        return Err(CurveError::InvalidInput("target probability must be non-negative".into()));
    }
    let max = curve.max_probability();
    if target > max {
        return Err(CurveError::UnattainableProbability {
            target: target.to_f64_lossy(),
            max: max.to_f64_lossy(),
        });
    }
    let k = curve.probs.partition_point(|&p| p < target);
    if k == 0 {
        return Ok(S::zero());
    }
    let (t0, t1) = (curve.times[k - 1], curve.times[k]);
    let (p0, p1) = (curve.probs[k - 1], curve.probs[k]);
    Ok(t0 + (target - p0) / (p1 - p0) * (t1 - t0))
}

/// Result of a measurement: the state was identified, or the measurement
/// was inconclusive (the orthogonal complement fired, or nothing did).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "label", rename_all = "snake_case")]
pub enum Identification {
    Identified(StateLabel),
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementOutcome<S = f64> {
    pub result: Identification,
    pub at_time: S,
}

impl<S> MeasurementOutcome<S> {
    pub fn label(&self) -> Option<StateLabel> {
        match self.result {
            Identification::Identified(l) => Some(l),
            Identification::Inconclusive => None,
        }
    }
}

/// Honest measurement completed at `measure_at`: identifies the true label
/// with probability `p(measure_at)`, otherwise inconclusive. Never
/// misidentifies.
pub fn sample_measurement<S: Real>(
    curve: &DistinguishabilityCurve<S>,
    measure_at: S,
    true_label: StateLabel,
    rng: &mut RandomStream,
) -> Result<MeasurementOutcome<S>, CurveError> {
    if !(measure_at >= S::zero()) || !measure_at.is_finite() {
        return Err(CurveError::InvalidInput("measurement time must be finite and >= 0".into()));
    }
    let p = curve.value(measure_at).to_f64_lossy();
    let result = if rng.uniform() < p {
        Identification::Identified(true_label)
    } else {
        Identification::Inconclusive
    };
    Ok(MeasurementOutcome { result, at_time: measure_at })
}

/// Detector firing time by inverse-transform sampling of `p`: `None` with
/// probability `ε`. The event `{τ ≤ t}` has probability `p(t)`, matching
/// [`sample_measurement`].
pub fn sample_detection_time<S: Real>(curve: &DistinguishabilityCurve<S>, rng: &mut RandomStream) -> Option<S> {
    let u = S::lit(rng.uniform());
    if u >= curve.max_probability() {
        return None;
    }
    // u < max, so inversion cannot fail
    invert_curve(curve, u).ok()
}

/// Packet-frame cumulative distribution of a right-moving packet's position
/// density at `t = 0`, over one period of the Fourier synthesis centred on
/// the density peak.
#[derive(Debug, Clone)]
pub struct PacketProfile<S> {
    u: Vec<S>,
    cdf: Vec<S>,
}

/// Fine position samples per momentum node in [`PacketProfile::new`].
const PROFILE_OVERSAMPLING: usize = 16;

impl<S: Real> PacketProfile<S> {
    pub fn new(state: &MomentumAmplitude<S>) -> Result<Self, CurveError> {
        let grid = state.grid();
        let (Some(hmin), Some(period)) = (grid.min_spacing(), grid.spatial_period()) else {
            return Err(CurveError::InvalidInput("wavepacket curves need two or more momenta".into()));
        };
        let pts = grid.points();
        let hmax = pts.windows(2).map(|w| w[1] - w[0]).fold(hmin, S::max);
        if hmax - hmin > S::lit(1e-6) * hmin {
            return Err(CurveError::InvalidInput("wavepacket curves need a uniform momentum grid".into()));
        }
        let m = PROFILE_OVERSAMPLING * grid.len();
        let dx = period / S::from_usize_lossy(m);
        let half = period / S::lit(2.0);
        let xs: Vec<S> = (0..m).map(|i| -half + dx * S::from_usize_lossy(i)).collect();
        let dens = position_density(state, &xs, S::zero())?;
        let peak = dens
            .iter()
            .enumerate()
            .fold((0, S::neg_infinity()), |acc, (i, &d)| if d > acc.1 { (i, d) } else { acc })
            .0;
        // periodic window [peak − P/2, peak + P/2]
        let start = (peak + m / 2) % m;
        let x0 = xs[peak] - half;
        let u: Vec<S> = (0..=m).map(|i| x0 + dx * S::from_usize_lossy(i)).collect();
        let d: Vec<S> = (0..=m).map(|i| dens[(start + i) % m]).collect();
        let mut cdf = Vec::with_capacity(m + 1);
        let mut acc = S::zero();
        cdf.push(acc);
        for w in d.windows(2) {
            acc += S::lit(0.5) * dx * (w[0] + w[1]);
            cdf.push(acc);
        }
        if !(acc > S::zero()) {
            return Err(CurveError::InvalidInput("state has no position-space mass".into()));
        }
        for c in &mut cdf {
            *c /= acc;
        }
        Ok(Self { u, cdf })
    }

    /// Fraction of mass at packet-frame positions `≥ u`.
    pub fn mass_right_of(&self, u: S) -> S {
        let n = self.u.len();
        if u <= self.u[0] {
            return S::one();
        }
        if u >= self.u[n - 1] {
            return S::zero();
        }
        let hi = self.u.partition_point(|&s| s <= u);
        let lo = hi - 1;
        let frac = (u - self.u[lo]) / (self.u[hi] - self.u[lo]);
        S::one() - (self.cdf[lo] + frac * (self.cdf[hi] - self.cdf[lo]))
    }

    /// Packet-frame position with fraction `q` of the mass to its left.
    pub fn quantile(&self, q: S) -> S {
        let q = q.max(S::zero()).min(S::one());
        let k = self.cdf.partition_point(|&c| c < q);
        if k == 0 {
            return self.u[0];
        }
        if k >= self.cdf.len() {
            return self.u[self.u.len() - 1];
        }
        let (c0, c1) = (self.cdf[k - 1], self.cdf[k]);
        let frac = if c1 > c0 { (q - c0) / (c1 - c0) } else { S::zero() };
        self.u[k - 1] + frac * (self.u[k] - self.u[k - 1])
    }

    /// Crossed mass at time `t` for a packet emitted at `source_x` and an
    /// observer controlling `x ≥ observer_x`, before subtracting the mass
    /// already inside at `t = 0`.
    fn accessible_mass(&self, source_x: S, observer_x: S, t: S) -> S {
        self.mass_right_of(observer_x - source_x - t)
    }

    /// Monotone `p(t)` samples on `t_grid`.
    pub fn curve(&self, source_x: S, observer_x: S, t_grid: &[S]) -> Result<DistinguishabilityCurve<S>, CurveError> {
        check_t_grid(t_grid)?;
        let base = self.accessible_mass(source_x, observer_x, S::zero());
        let mut running = S::zero();
        let samples = t_grid
            .iter()
            .map(|&t| {
                let crossed = (self.accessible_mass(source_x, observer_x, t) - base).max(S::zero()).min(S::one());
                running = running.max(crossed);
                (t, running)
            })
            .collect();
        DistinguishabilityCurve::from_samples(samples)
    }

    /// Earliest `t` with crossed mass `≥ 1 − ε`, by bisection.
    pub fn saturation_time(&self, source_x: S, observer_x: S, epsilon: S) -> Result<S, CurveError> {
        let base = self.accessible_mass(source_x, observer_x, S::zero());
        let crossed = |t: S| self.accessible_mass(source_x, observer_x, t) - base;
        // compare residuals, not 1 − ε, so the returned time meets ε exactly
        let reached = |t: S| S::one() - crossed(t) <= epsilon;
        // beyond this shift the whole window has crossed
        let span = self.u[self.u.len() - 1] - self.u[0];
        let mut hi = (observer_x - source_x - self.u[0]).max(S::zero()) + span;
        if !reached(hi) {
            return Err(CurveError::UnattainableProbability {
                target: (S::one() - epsilon).to_f64_lossy(),
                max: crossed(hi).to_f64_lossy(),
            });
        }
        let mut lo = S::zero();
        for _ in 0..200 {
            let mid = (lo + hi) / S::lit(2.0);
            if reached(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo <= S::epsilon() * hi.abs().max(S::one()) {
                break;
            }
        }
        Ok(hi)
    }
}

fn check_t_grid<S: Real>(t_grid: &[S]) -> Result<(), CurveError> {
    if t_grid.is_empty() {
        return Err(CurveError::InvalidInput("empty time grid".into()));
    }
    if t_grid[0] != S::zero() {
        return Err(CurveError::InvalidInput("time grid must start at 0".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CurveError::InvalidInput("time grid must be strictly increasing".into()));
    }
    Ok(())
}

/// `p(t)` for `state` emitted at `source_x` toward an observer who controls
/// the half-line `x ≥ observer_x`.
///
/// Massless right-movers translate rigidly, so one density evaluation in the
/// packet frame serves every `t`.
pub fn curve_from_wavepacket<S: Real>(
    state: &MomentumAmplitude<S>,
    source_x: S,
    observer_x: S,
    t_grid: &[S],
) -> Result<DistinguishabilityCurve<S>, CurveError> {
    check_t_grid(t_grid)?;
    if !(source_x.is_finite() && observer_x.is_finite()) {
        return Err(CurveError::InvalidInput("non-finite positions".into()));
    }
    PacketProfile::new(state)?.curve(source_x, observer_x, t_grid)
}

/// Wavepacket curve on `samples` uniform times ending at the first time the
/// crossed mass reaches `1 − epsilon`.
pub fn wavepacket_curve_to_threshold<S: Real>(
    state: &MomentumAmplitude<S>,
    source_x: S,
    observer_x: S,
    epsilon: S,
    samples: usize,
) -> Result<DistinguishabilityCurve<S>, CurveError> {
    if !(epsilon > S::zero() && epsilon < S::one()) {
        return Err(CurveError::InvalidInput("epsilon must lie in (0, 1)".into()));
    }
    if samples < 2 {
        return Err(CurveError::InvalidInput("need at least two samples".into()));
    }
    let profile = PacketProfile::new(state)?;
    let horizon = profile.saturation_time(source_x, observer_x, epsilon)?;
    let last = S::from_usize_lossy(samples - 1);
    let t_grid: Vec<S> = (0..samples)
        .map(|k| if k + 1 == samples { horizon } else { horizon * S::from_usize_lossy(k) / last })
        .collect();
    profile.curve(source_x, observer_x, &t_grid)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fieldmodel::{make_orthogonal_pair, MomentumGrid, WavepacketFamily};
    use proptest::prelude::*;

    fn ramp() -> DistinguishabilityCurve {
        parametric_curve(ParametricKind::LinearRamp, 1.0, 0.0).unwrap()
    }

    #[test]
    fn parametric_examples() {
        assert!((ramp().value(0.5) - 0.5).abs() < 1e-12);
        let smooth: DistinguishabilityCurve = parametric_curve(ParametricKind::Smoothstep, 1.0, 0.0).unwrap();
        assert!((smooth.value(0.5) - 0.5).abs() < 1e-9);
        for kind in [ParametricKind::LinearRamp, ParametricKind::Smoothstep, ParametricKind::ExponentialSaturation] {
            let c: DistinguishabilityCurve = parametric_curve(kind, 2.0, 0.01).unwrap();
            assert_eq!(c.value(0.0), 0.0);
            assert!((c.max_probability() - 0.99).abs() < 1e-15);
            assert!((c.epsilon() - 0.01).abs() < 1e-15);
            assert_eq!(c.t_eff(), 2.0);
            assert_eq!(c.len(), DEFAULT_CURVE_SAMPLES);
        }
    }

    #[test]
    fn parametric_rejects_bad_parameters() {
        assert!(parametric_curve(ParametricKind::LinearRamp, 0.0, 0.0).is_err());
        assert!(parametric_curve(ParametricKind::LinearRamp, 1.0, 1.0).is_err());
        assert!(parametric_curve(ParametricKind::LinearRamp, 1.0, -0.1).is_err());
    }

    #[test]
    fn inversion_examples() {
        assert!((invert_curve(&ramp(), 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(invert_curve(&ramp(), 0.0).unwrap(), 0.0);
        let c = parametric_curve(ParametricKind::LinearRamp, 1.0, 0.01).unwrap();
        assert!(matches!(invert_curve(&c, 0.999), Err(CurveError::UnattainableProbability { .. })));
    }

    #[test]
    fn from_samples_validates() {
        assert!(DistinguishabilityCurve::from_samples(vec![(0.0, 0.0), (1.0, 0.5), (2.0, 0.4)]).is_err());
        assert!(DistinguishabilityCurve::from_samples(vec![(0.0, 0.1), (1.0, 0.5)]).is_err());
        assert!(DistinguishabilityCurve::from_samples(vec![(0.0, 0.0), (0.0, 0.5)]).is_err());
        assert!(DistinguishabilityCurve::from_samples(vec![(0.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(DistinguishabilityCurve::from_samples(vec![(0.0, 0.0), (1.0, 1.5)]).is_err());
        let c: DistinguishabilityCurve = DistinguishabilityCurve::from_samples(vec![(0.0, 0.0), (1.0, 0.4), (2.0, 0.4)]).unwrap();
        assert_eq!(c.t_eff(), 1.0);
        assert!((c.epsilon() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn measurement_at_endpoints() {
        let c = ramp();
        let mut rng = RandomStream::from_seed(11);
        for _ in 0..1000 {
            assert_eq!(
                sample_measurement(&c, 0.0, StateLabel::S1, &mut rng).unwrap().result,
                Identification::Inconclusive
            );
            assert_eq!(
                sample_measurement(&c, 1.0, StateLabel::S2, &mut rng).unwrap().result,
                Identification::Identified(StateLabel::S2)
            );
        }
        assert!(sample_measurement(&c, -1.0, StateLabel::S1, &mut rng).is_err());
    }

    #[test]
    fn detection_time_law_matches_curve() {
        let c = parametric_curve(ParametricKind::Smoothstep, 1.0, 0.05).unwrap();
        let mut rng = RandomStream::from_seed(5);
        let n = 100_000;
        let taus: Vec<Option<f64>> = (0..n).map(|_| sample_detection_time(&c, &mut rng)).collect();
        for t in [0.2, 0.5, 0.8, 1.0] {
            let hits = taus.iter().filter(|x| x.is_some_and(|x| x <= t)).count() as f64 / n as f64;
            let p = c.value(t);
            assert!((hits - p).abs() < 4.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-12, "t={t}");
        }
        let never = taus.iter().filter(|x| x.is_none()).count() as f64 / n as f64;
        assert!((never - 0.05).abs() < 4.0 * (0.05f64 * 0.95 / n as f64).sqrt());
    }

    fn exp_tail_state(scale: f64) -> MomentumAmplitude<f64> {
        let g = Arc::new(MomentumGrid::uniform(40.0, 4.0 * scale, 256).unwrap());
        make_orthogonal_pair(&g, &WavepacketFamily::exponential_tail(40.0, scale)).unwrap().0
    }

    #[test]
    fn wavepacket_curve_basics() {
        let psi = exp_tail_state(1.0);
        let ts: Vec<f64> = (0..200).map(|i| i as f64 * 0.1).collect();
        let c = curve_from_wavepacket(&psi, 0.0, 8.0, &ts).unwrap();
        assert_eq!(c.value(0.0), 0.0);
        assert!(c.samples().collect::<Vec<_>>().windows(2).all(|w| w[1].1 >= w[0].1));
        assert!(c.value(4.0) < 1e-3);
        assert!(c.value(15.0) > 0.999);
        assert!(curve_from_wavepacket(&psi, 0.0, 8.0, &[]).is_err());
        assert!(curve_from_wavepacket(&psi, 0.0, 8.0, &[0.5, 1.0]).is_err());
    }

    #[test]
    fn saturation_offset_matches_sech_profile() {
        // |φ(x)|² ≈ (a/2) sech²(a x) with a = π s / 2, so the mass left of −y
        // is (1 − tanh(a y)) / 2 and 99% has crossed once a·y = atanh(0.98).
        let scale = 1.0;
        let fam = WavepacketFamily::<f64>::exponential_tail(40.0, scale);
        let width = fam.position_width();
        let k_oracle = 0.98f64.atanh();
        let psi = exp_tail_state(scale);
        let d = 10.0;
        let ts: Vec<f64> = (0..=4000).map(|i| i as f64 * 0.005).collect();
        let c = curve_from_wavepacket(&psi, 0.0, d, &ts).unwrap();
        let t99 = invert_curve(&c, 0.99).unwrap();
        let k = (t99 - d) / width;
        assert!((k - k_oracle).abs() < 0.05, "k = {k}, oracle {k_oracle}");
    }

    #[test]
    fn threshold_curve_reaches_one_minus_epsilon() {
        let psi = exp_tail_state(1.0);
        let c = wavepacket_curve_to_threshold(&psi, 0.0, 10.0, DEFAULT_WAVEPACKET_EPSILON, 512).unwrap();
        assert!(c.epsilon() <= DEFAULT_WAVEPACKET_EPSILON);
        assert!(c.t_eff().is_finite());
        assert_eq!(c.len(), 512);
    }

    #[test]
    fn export_is_two_columns() {
        let text = ramp().export_text();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# t p"));
        assert_eq!(lines.clone().count(), DEFAULT_CURVE_SAMPLES);
        assert!(lines.all(|l| l.split(' ').count() == 2));
    }

    fn any_kind() -> impl Strategy<Value = ParametricKind> {
        prop_oneof![
            Just(ParametricKind::LinearRamp),
            Just(ParametricKind::Smoothstep),
            Just(ParametricKind::ExponentialSaturation)
        ]
    }

    proptest! {
        #[test]
        fn parametric_invariants(kind in any_kind(), horizon in 0.01..100.0f64, eps in 0.0..0.99f64, t in 0.0..200.0f64) {
            let c = parametric_curve(kind, horizon, eps).unwrap();
            let pts: Vec<_> = c.samples().collect();
            prop_assert_eq!(pts[0], (0.0, 0.0));
            prop_assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1));
            prop_assert!((c.max_probability() - (1.0 - eps)).abs() < 1e-15);
            let p = c.value(t);
            prop_assert!((0.0..=1.0).contains(&p));
            prop_assert!(p * (1.0 - p) <= 0.25);
        }

        #[test]
        fn inversion_is_left_inverse(kind in any_kind(), eps in 0.0..0.5f64, q in 0.0..1.0f64) {
            let c = parametric_curve(kind, 3.0, eps).unwrap();
            let target = q * c.max_probability();
            let t = invert_curve(&c, target).unwrap();
            prop_assert!((c.value(t) - target).abs() < 1e-12);
            if t > 1e-9 {
                prop_assert!(c.value(t - 1e-9) < target + 1e-12);
            }
        }
    }
}
