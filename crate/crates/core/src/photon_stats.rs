//! Photon-pair source, detection and memory loss: heralded
//! cross-correlation g² in closed form and by Monte Carlo.

use std::f64::consts::SQRT_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Geometric, Poisson};
use rayon::prelude::*;
use serde::Deserialize;

use crate::error::{Error, Result};

/// Photon-number distribution of the pairs emitted in one window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairStatistics {
    /// Single-mode SPDC.
    #[default]
    Thermal,
    /// Many-mode limit.
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorModel {
    /// Click / no-click detectors; g² from click probabilities.
    #[default]
    Threshold,
    /// Photon-number-resolving detection; g² from mean count products.
    NumberResolving,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairSourceConfig {
    pub mean_pairs_per_window: f64,
    pub signal_channel_efficiency: f64,
    pub idler_channel_efficiency: f64,
    pub dark_rate_signal: f64,
    pub dark_rate_idler: f64,
    pub coincidence_window: f64,
    pub repetition_rate: f64,
    pub signal_bandwidth: f64,
    pub idler_bandwidth: f64,
    pub statistics: PairStatistics,
    pub detector: DetectorModel,
    /// Gaussian timing jitter of each detector.
    pub jitter_sigma: f64,
    /// When false the signal and idler photon numbers are drawn
    /// independently, which removes all correlation.
    pub correlated: bool,
}

impl Default for PairSourceConfig {
    fn default() -> Self {
        Self {
            mean_pairs_per_window: 0.0166,
            signal_channel_efficiency: 0.1,
            idler_channel_efficiency: 0.2,
            dark_rate_signal: 100.0,
            dark_rate_idler: 100.0,
            coincidence_window: 1e-9,
            repetition_rate: 80e6,
            signal_bandwidth: 1.5e9,
            idler_bandwidth: 8e9,
            statistics: PairStatistics::Thermal,
            detector: DetectorModel::Threshold,
            jitter_sigma: 100e-12,
            correlated: true,
        }
    }
}

impl PairSourceConfig {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.mean_pairs_per_window > 0.0 && self.mean_pairs_per_window.is_finite()) {
            problems.push("mean pairs per window must be positive");
        }
        for eff in [self.signal_channel_efficiency, self.idler_channel_efficiency] {
            if !(0.0..=1.0).contains(&eff) {
                problems.push("channel efficiencies must lie in [0, 1]");
            }
        }
        for rate in [self.dark_rate_signal, self.dark_rate_idler] {
            if !(rate >= 0.0 && rate.is_finite()) {
                problems.push("dark rates must be >= 0");
            }
        }
        if !(self.coincidence_window > 0.0 && self.repetition_rate > 0.0) {
            problems.push("coincidence window and repetition rate must be positive");
        }
        if self.coincidence_window * self.repetition_rate > 1.0 {
            problems.push("coincidence window is longer than the repetition period");
        }
        if !(self.jitter_sigma >= 0.0) {
            problems.push("jitter must be >= 0");
        }
        match problems.first() {
            None => Ok(()),
            Some(p) => Err(Error::config(*p)),
        }
    }

    /// Mean dark counts per coincidence window in each channel.
    fn dark_means(&self) -> (f64, f64) {
        (
            self.dark_rate_signal * self.coincidence_window,
            self.dark_rate_idler * self.coincidence_window,
        )
    }

    /// Probability that a correlated pair lands inside the coincidence
    /// window given the jitter of both detectors.
    pub fn jitter_capture(&self) -> f64 {
        if self.jitter_sigma == 0.0 {
            return 1.0;
        }
        // difference of two jittered stamps has σ√2; window is ±w/2
        libm::erf(self.coincidence_window / (2.0 * SQRT_2 * SQRT_2 * self.jitter_sigma))
    }
}

/// Probability generating function of the pair number.
fn pgf(stats: PairStatistics, mu: f64, z: f64) -> f64 {
    match stats {
        PairStatistics::Thermal => 1.0 / (1.0 + mu * (1.0 - z)),
        PairStatistics::Poisson => (-mu * (1.0 - z)).exp(),
    }
}

fn second_factorial_moment(stats: PairStatistics, mu: f64) -> f64 {
    match stats {
        PairStatistics::Thermal => 2.0 * mu * mu,
        PairStatistics::Poisson => mu * mu,
    }
}

/// Closed-form g² per coincidence window.
pub fn g2_analytic(cfg: &PairSourceConfig) -> Result<f64> {
    cfg.validate()?;
    let (ds, di) = cfg.dark_means();
    let mu = cfg.mean_pairs_per_window;
    let (es, ei) = (cfg.signal_channel_efficiency, cfg.idler_channel_efficiency);
    let (single_s, single_i, joint) = match cfg.detector {
        DetectorModel::Threshold => {
            let (qs, qi) = ((-ds).exp(), (-di).exp());
            let (a, b) = (1.0 - es, 1.0 - ei);
            let gs = pgf(cfg.statistics, mu, a);
            let gi = pgf(cfg.statistics, mu, b);
            let ps = 1.0 - qs * gs;
            let pi = 1.0 - qi * gi;
            let both_dark = if cfg.correlated {
                pgf(cfg.statistics, mu, a * b)
            } else {
                gs * gi
            };
            (ps, pi, 1.0 - qs * gs - qi * gi + qs * qi * both_dark)
        }
        DetectorModel::NumberResolving => {
            let ns = es * mu + ds;
            let ni = ei * mu + di;
            let pair_moment = if cfg.correlated {
                es * ei * (second_factorial_moment(cfg.statistics, mu) + mu)
            } else {
                es * ei * mu * mu
            };
            (ns, ni, pair_moment + es * mu * di + ds * ei * mu + ds * di)
        }
    };
    let denom = single_s * single_i;
    if !(denom > 0.0) {
        return Err(Error::domain("g2 undefined: a channel never registers a count"));
    }
    let c = cfg.jitter_capture();
    Ok((c * joint + (1.0 - c) * denom) / denom)
}

/// Number of sidebands on each side of the correlated peak.
pub const SIDEBANDS: usize = 10;
const CHUNK: usize = 1 << 16;

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub g2: f64,
    pub standard_error: f64,
    /// Coincidence counts at trial offsets `-SIDEBANDS..=SIDEBANDS`.
    pub coincidence_histogram: Vec<u64>,
    /// Signal-minus-idler delay of each histogram bin.
    pub histogram_times: Vec<f64>,
    pub storage_time: f64,
}

impl CorrelationResult {
    pub fn cauchy_schwarz(&self) -> Result<CauchySchwarzVerdict> {
        cauchy_schwarz_check(self.g2, self.standard_error)
    }
}

#[derive(Debug, Default, Clone)]
struct Tally {
    peak: u64,
    peak_trials: u64,
    sides: Vec<u64>,
    side_trials: Vec<u64>,
}

struct Sampler {
    stats: PairStatistics,
    detector: DetectorModel,
    es: f64,
    ei: f64,
    correlated: bool,
    thermal: Option<Geometric>,
    poisson: Option<Poisson<f64>>,
    dark_s: Option<Poisson<f64>>,
    dark_i: Option<Poisson<f64>>,
}

impl Sampler {
    fn new(cfg: &PairSourceConfig) -> Result<Self> {
        let (ds, di) = cfg.dark_means();
        let mu = cfg.mean_pairs_per_window;
        let pois = |m: f64| -> Result<Option<Poisson<f64>>> {
            if m > 0.0 {
                Poisson::new(m).map(Some).map_err(|e| Error::domain(e.to_string()))
            } else {
                Ok(None)
            }
        };
        Ok(Self {
            stats: cfg.statistics,
            detector: cfg.detector,
            es: cfg.signal_channel_efficiency,
            ei: cfg.idler_channel_efficiency,
            correlated: cfg.correlated,
            thermal: match cfg.statistics {
                PairStatistics::Thermal => Some(
                    Geometric::new(1.0 / (1.0 + mu)).map_err(|e| Error::domain(e.to_string()))?,
                ),
                PairStatistics::Poisson => None,
            },
            poisson: match cfg.statistics {
                PairStatistics::Poisson => pois(mu)?,
                PairStatistics::Thermal => None,
            },
            dark_s: pois(ds)?,
            dark_i: pois(di)?,
        })
    }

    fn pairs<R: Rng>(&self, rng: &mut R) -> u64 {
        match self.stats {
            PairStatistics::Thermal => self.thermal.as_ref().map_or(0, |d| d.sample(rng)),
            PairStatistics::Poisson => self.poisson.as_ref().map_or(0, |d| d.sample(rng) as u64),
        }
    }

    fn thin<R: Rng>(n: u64, eta: f64, rng: &mut R) -> u64 {
        if n == 0 || eta == 0.0 {
            0
        } else {
            Binomial::new(n, eta).map_or(0, |b| b.sample(rng))
        }
    }

    fn darks<R: Rng>(d: &Option<Poisson<f64>>, rng: &mut R) -> u64 {
        d.as_ref().map_or(0, |p| p.sample(rng) as u64)
    }

    fn detect(&self, photons: u64) -> u64 {
        match self.detector {
            DetectorModel::Threshold => photons.min(1),
            DetectorModel::NumberResolving => photons,
        }
    }

    /// Signal and idler counts of one window.
    fn trial<R: Rng>(&self, rng: &mut R) -> (u64, u64) {
        let n = self.pairs(rng);
        let m = if self.correlated { n } else { self.pairs(rng) };
        let s = Self::thin(n, self.es, rng) + Self::darks(&self.dark_s, rng);
        let i = Self::thin(m, self.ei, rng) + Self::darks(&self.dark_i, rng);
        (self.detect(s), self.detect(i))
    }
}

fn run_chunk(sampler: &Sampler, capture: f64, seed: u64, chunk: u64, len: usize) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut sig = Vec::with_capacity(len);
    let mut idl = Vec::with_capacity(len);
    let mut peak = 0u64;
    for _ in 0..len {
        let (s, i) = sampler.trial(&mut rng);
        sig.push(s);
        idl.push(i);
        if s > 0 {
            // a jittered pair misses the window and meets the background
            let partner = if capture < 1.0 && rng.random::<f64>() >= capture {
                sampler.trial(&mut rng).1
            } else {
                i
            };
            peak += s * partner;
        }
    }
    let mut sides = vec![0u64; 2 * SIDEBANDS];
    let mut side_trials = vec![0u64; 2 * SIDEBANDS];
    for k in 1..=SIDEBANDS.min(len.saturating_sub(1)) {
        let (mut before, mut after) = (0u64, 0u64);
        for j in 0..len - k {
            after += sig[j + k] * idl[j];
            before += sig[j] * idl[j + k];
        }
        // index SIDEBANDS - k is offset -k, SIDEBANDS + k - 1 is offset +k
        sides[SIDEBANDS - k] = before;
        sides[SIDEBANDS + k - 1] = after;
        side_trials[SIDEBANDS - k] = (len - k) as u64;
        side_trials[SIDEBANDS + k - 1] = (len - k) as u64;
    }
    Tally {
        peak,
        peak_trials: len as u64,
        sides,
        side_trials,
    }
}

/// Simulates `n_windows` detection windows and estimates g² from the
/// ratio of the correlated peak to the mean of the uncorrelated sidebands.
/// Windows are processed in fixed-size chunks, each with its own stream of
/// the seeded generator, so the result does not depend on thread count.
pub fn g2_monte_carlo(
    cfg: &PairSourceConfig,
    n_windows: u64,
    seed: u64,
    storage_time: f64,
) -> Result<CorrelationResult> {
    g2_monte_carlo_stream(cfg, n_windows, seed, 0, storage_time)
}

fn g2_monte_carlo_stream(
    cfg: &PairSourceConfig,
    n_windows: u64,
    seed: u64,
    stream_base: u64,
    storage_time: f64,
) -> Result<CorrelationResult> {
    cfg.validate()?;
    if n_windows == 0 {
        return Err(Error::config("need at least one detection window"));
    }
    if n_windows < 10_000 {
        log::warn!("{n_windows} windows give unreliable g2 error bars");
    }
    let sampler = Sampler::new(cfg)?;
    let capture = cfg.jitter_capture();
    let chunks = n_windows.div_ceil(CHUNK as u64);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = if c + 1 == chunks {
                (n_windows - c * CHUNK as u64) as usize
            } else {
                CHUNK
            };
            run_chunk(&sampler, capture, seed, (stream_base << 32) | c, len)
        })
        .collect();
    let mut total = Tally {
        sides: vec![0; 2 * SIDEBANDS],
        side_trials: vec![0; 2 * SIDEBANDS],
        ..Tally::default()
    };
    for t in &tallies {
        total.peak += t.peak;
        total.peak_trials += t.peak_trials;
        for k in 0..2 * SIDEBANDS {
            total.sides[k] += t.sides[k];
            total.side_trials[k] += t.side_trials[k];
        }
    }
    let side_counts: u64 = total.sides.iter().sum();
    let side_trials: u64 = total.side_trials.iter().sum();
    let mut histogram = total.sides[..SIDEBANDS].to_vec();
    histogram.push(total.peak);
    histogram.extend_from_slice(&total.sides[SIDEBANDS..]);
    let period = 1.0 / cfg.repetition_rate;
    let histogram_times = (-(SIDEBANDS as i64)..=SIDEBANDS as i64)
        .map(|k| storage_time + k as f64 * period)
        .collect();
    let (g2, standard_error) = if side_counts == 0 {
        log::warn!("no accidental coincidences in the sidebands; g2 is unbounded");
        (f64::INFINITY, f64::INFINITY)
    } else {
        let side_rate = side_counts as f64 / side_trials as f64;
        let n0 = total.peak_trials as f64;
        let g = total.peak as f64 / n0 / side_rate;
        let var = (total.peak.max(1) as f64 / (n0 * n0)) / (side_rate * side_rate)
            + g * g / side_counts as f64;
        (g, var.sqrt())
    };
    Ok(CorrelationResult {
        g2,
        standard_error,
        coincidence_histogram: histogram,
        histogram_times,
        storage_time,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CauchySchwarzVerdict {
    pub violated: bool,
    pub margin_sigmas: f64,
}

/// Classical fields obey g² ≤ 2 for this pair of modes.
pub fn cauchy_schwarz_check(g2: f64, standard_error: f64) -> Result<CauchySchwarzVerdict> {
    if !(standard_error > 0.0) {
        return Err(Error::domain("standard error must be positive"));
    }
    Ok(CauchySchwarzVerdict {
        violated: g2 > 2.0,
        margin_sigmas: (g2 - 2.0) / standard_error,
    })
}

/// Exponential decay of the recall efficiency with storage time, plus the
/// noise the memory adds to the signal channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemoryDecay {
    pub efficiency_at_zero: f64,
    pub decay_time: f64,
    pub noise_rate: f64,
}

impl Default for MemoryDecay {
    fn default() -> Self {
        Self {
            efficiency_at_zero: 0.07,
            decay_time: 100e-9,
            noise_rate: 0.0,
        }
    }
}

impl MemoryDecay {
    pub fn efficiency(&self, storage_time: f64) -> f64 {
        self.efficiency_at_zero * (-storage_time / self.decay_time).exp()
    }

    /// Source as seen after storing the signal photon for `storage_time`.
    pub fn apply(&self, source: &PairSourceConfig, storage_time: f64) -> Result<PairSourceConfig> {
        if !(storage_time >= 0.0) {
            return Err(Error::config("storage time must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.efficiency_at_zero) || !(self.decay_time > 0.0) {
            return Err(Error::config(
                "memory efficiency must lie in [0, 1] and decay time be positive",
            ));
        }
        if !(self.noise_rate >= 0.0) {
            return Err(Error::config("memory noise rate must be >= 0"));
        }
        Ok(PairSourceConfig {
            signal_channel_efficiency: source.signal_channel_efficiency * self.efficiency(storage_time),
            dark_rate_signal: source.dark_rate_signal + self.noise_rate,
            ..source.clone()
        })
    }

    /// Noise rate at which g² after `storage_time` drops to `target`.
    pub fn calibrate_noise(
        &self,
        source: &PairSourceConfig,
        storage_time: f64,
        target: f64,
    ) -> Result<MemoryDecay> {
        let g_at = |rate: f64| -> Result<f64> {
            g2_analytic(&MemoryDecay { noise_rate: rate, ..*self }.apply(source, storage_time)?)
        };
        if g_at(0.0)? < target {
            return Err(Error::NoSolution(format!(
                "g2 after storage is below {target} even without added noise"
            )));
        }
        let mut hi = 1.0;
        while g_at(hi)? > target {
            hi *= 2.0;
            if hi > 1e15 {
                return Err(Error::NoSolution("noise calibration diverged".into()));
            }
        }
        let rate = bisect(0.0, hi, |r| Ok(g_at(r)? - target))?;
        Ok(MemoryDecay {
            noise_rate: rate,
            ..*self
        })
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let f_lo = f(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? > 0.0) == (f_lo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean pair number at which the source alone reaches `target` g², with
/// the other parameters of `source` fixed.
pub fn solve_mean_pairs(source: &PairSourceConfig, target: f64) -> Result<f64> {
    let g_at = |mu: f64| -> Result<f64> {
        g2_analytic(&PairSourceConfig {
            mean_pairs_per_window: mu,
            ..source.clone()
        })
    };
    let (lo, hi) = (1e-9, 100.0);
    if !(g_at(lo)? > target && g_at(hi)? < target) {
        return Err(Error::NoSolution(format!("no mean pair number reaches g2 = {target}")));
    }
    // search in log space, g2 falls roughly as 1/mu
    let ln = bisect(lo.ln(), hi.ln(), |x| Ok(g_at(x.exp())? - target))?;
    Ok(ln.exp())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StorageTimeRow {
    pub storage_time: f64,
    pub analytic: f64,
    pub result: CorrelationResult,
    pub verdict: CauchySchwarzVerdict,
}

/// g² after each storage time, analytic and simulated. Each storage time
/// uses its own family of generator streams.
pub fn g2_vs_storage_time(
    source: &PairSourceConfig,
    memory: &MemoryDecay,
    storage_times: &[f64],
    n_windows: u64,
    seed: u64,
) -> Result<Vec<StorageTimeRow>> {
    storage_times
        .par_iter()
        .enumerate()
        .map(|(idx, &tau)| {
            let cfg = memory.apply(source, tau)?;
            let analytic = g2_analytic(&cfg)?;
            let result = g2_monte_carlo_stream(&cfg, n_windows, seed, idx as u64 + 1, tau)?;
            let verdict = result.cauchy_schwarz()?;
            Ok(StorageTimeRow {
                storage_time: tau,
                analytic,
                result,
                verdict,
            })
        })
        .collect()
}

/// Writes `storage_time_ns,g2,stderr,violated`.
pub fn write_storage_csv<W: std::io::Write>(rows: &[StorageTimeRow], mut out: W) -> Result<()> {
    writeln!(out, "storage_time_ns,g2,stderr,violated")?;
    for r in rows {
        writeln!(
            out,
            "{:.3},{:.6},{:.6},{}",
            r.storage_time * 1e9,
            r.result.g2,
            r.result.standard_error,
            r.verdict.violated
        )?;
    }
    Ok(())
}

/// Writes the coincidence histogram as `delay_ns,coincidences`.
pub fn write_histogram_csv<W: std::io::Write>(r: &CorrelationResult, mut out: W) -> Result<()> {
    writeln!(out, "delay_ns,coincidences")?;
    for (t, c) in r.histogram_times.iter().zip(&r.coincidence_histogram) {
        writeln!(out, "{:.3},{}", t * 1e9, c)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dark_free() -> PairSourceConfig {
        PairSourceConfig {
            dark_rate_signal: 0.0,
            dark_rate_idler: 0.0,
            jitter_sigma: 0.0,
            ..PairSourceConfig::default()
        }
    }

    #[test]
    fn low_efficiency_limits() {
        let mu = 0.05;
        let weak = |stats| PairSourceConfig {
            mean_pairs_per_window: mu,
            signal_channel_efficiency: 1e-5,
            idler_channel_efficiency: 1e-5,
            statistics: stats,
            ..dark_free()
        };
        let p = g2_analytic(&weak(PairStatistics::Poisson)).unwrap();
        assert!((p - (1.0 + 1.0 / mu)).abs() < 1e-3 * p);
        let t = g2_analytic(&weak(PairStatistics::Thermal)).unwrap();
        assert!((t - (2.0 + 1.0 / mu)).abs() < 1e-3 * t);
    }

    #[test]
    fn number_resolving_closed_form() {
        let mu = 0.2;
        let cfg = PairSourceConfig {
            mean_pairs_per_window: mu,
            detector: DetectorModel::NumberResolving,
            ..dark_free()
        };
        let g = g2_analytic(&cfg).unwrap();
        assert!((g - (2.0 + 1.0 / mu)).abs() < 1e-12);
    }

    #[test]
    fn uncorrelated_source_gives_one() {
        for detector in [DetectorModel::Threshold, DetectorModel::NumberResolving] {
            let cfg = PairSourceConfig {
                correlated: false,
                detector,
                ..PairSourceConfig::default()
            };
            assert!((g2_analytic(&cfg).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dead_channel_is_an_error() {
        let cfg = PairSourceConfig {
            signal_channel_efficiency: 0.0,
            dark_rate_signal: 0.0,
            ..PairSourceConfig::default()
        };
        assert!(g2_analytic(&cfg).is_err());
    }

    #[test]
    fn pure_accidentals_give_unity() {
        let cfg = PairSourceConfig {
            signal_channel_efficiency: 0.0,
            idler_channel_efficiency: 0.0,
            dark_rate_signal: 2e6,
            dark_rate_idler: 2e6,
            ..PairSourceConfig::default()
        };
        let r = g2_monte_carlo(&cfg, 2_000_000, 3, 0.0).unwrap();
        assert!((r.g2 - 1.0).abs() < 4.0 * r.standard_error, "{} ± {}", r.g2, r.standard_error);
    }

    #[test]
    fn monte_carlo_is_deterministic() {
        let cfg = PairSourceConfig::default();
        let a = g2_monte_carlo(&cfg, 300_000, 11, 25e-9).unwrap();
        let b = g2_monte_carlo(&cfg, 300_000, 11, 25e-9).unwrap();
        assert_eq!(a, b);
        let c = g2_monte_carlo(&cfg, 300_000, 12, 25e-9).unwrap();
        assert_ne!(a.coincidence_histogram, c.coincidence_histogram);
    }

    #[test]
    fn histogram_peak_sits_at_storage_time() {
        let r = g2_monte_carlo(&PairSourceConfig::default(), 200_000, 1, 25e-9).unwrap();
        assert_eq!(r.coincidence_histogram.len(), 2 * SIDEBANDS + 1);
        assert!((r.histogram_times[SIDEBANDS] - 25e-9).abs() < 1e-18);
        let max = r.coincidence_histogram.iter().max().unwrap();
        assert_eq!(r.coincidence_histogram[SIDEBANDS], *max);
    }

    #[test]
    fn no_sideband_counts_gives_sentinel() {
        let cfg = PairSourceConfig {
            mean_pairs_per_window: 1e-6,
            ..dark_free()
        };
        let r = g2_monte_carlo(&cfg, 10_000, 1, 0.0).unwrap();
        assert!(r.g2.is_infinite());
    }

    #[test]
    fn cauchy_schwarz_margins() {
        let v = cauchy_schwarz_check(61.8, 3.8).unwrap();
        assert!(v.violated);
        assert!((v.margin_sigmas - 15.7368).abs() < 1e-3);
        let v = cauchy_schwarz_check(9.1, 1.2).unwrap();
        assert!(v.violated);
        assert!((v.margin_sigmas - 5.9167).abs() < 1e-3);
        let v = cauchy_schwarz_check(2.0, 0.5).unwrap();
        assert!(!v.violated);
        assert_eq!(v.margin_sigmas, 0.0);
        assert!(cauchy_schwarz_check(3.0, 0.0).is_err());
    }

    #[test]
    fn solved_source_and_calibrated_memory_hit_targets() {
        let base = PairSourceConfig::default();
        let mu = solve_mean_pairs(&dark_free(), 61.8).unwrap();
        let free = PairSourceConfig {
            mean_pairs_per_window: mu,
            ..dark_free()
        };
        assert!((g2_analytic(&free).unwrap() - 61.8).abs() < 1e-6);
        let source = PairSourceConfig {
            mean_pairs_per_window: mu,
            ..base
        };
        let mem = MemoryDecay::default().calibrate_noise(&source, 25e-9, 9.1).unwrap();
        let g = g2_analytic(&mem.apply(&source, 25e-9).unwrap()).unwrap();
        assert!((g - 9.1).abs() < 1e-6);
        assert!(g2_analytic(&mem.apply(&source, 100e-9).unwrap()).unwrap() > 2.0);
    }

    #[test]
    fn jitter_capture_is_near_one_for_short_jitter() {
        let cfg = PairSourceConfig::default();
        assert!(cfg.jitter_capture() > 0.999 && cfg.jitter_capture() < 1.0);
    }
}
