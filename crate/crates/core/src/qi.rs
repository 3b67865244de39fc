//! Quantum illumination with an SFG receiver.
//!
//! The idler is kept; the signal probes a target of intensity reflectivity
//! η embedded in white noise of `μ_b` photons per mode. Recombining the
//! returned light with the idler by SFG and counting photons in the first
//! pump mode detects the target with probability `ε²λ₀(η + μ_b/SN)`.

use std::collections::BTreeMap;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::{substream, Domain};
use crate::schmidt::SchmidtSpectrum;
use crate::stats::{wilson_interval, Z95};
use crate::C64;

/// Largest number of Schmidt modes the oracle will expand.
pub const ORACLE_MAX_MODES: usize = 1024;

/// Largest Schmidt weight the oracle may leave out.
pub const ORACLE_TAIL_LIMIT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QiChannel {
    /// Probe transmission η; zero when the target is absent.
    pub eta: f64,
    /// Mean noise photons per mode.
    pub mu_b: f64,
}

impl QiChannel {
    pub fn new(eta: f64, mu_b: f64) -> Result<Self> {
        let c = Self { eta, mu_b };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::invalid(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if !(self.mu_b >= 0.0 && self.mu_b.is_finite()) {
            return Err(Error::invalid(format!("mu_b must be non-negative, got {}", self.mu_b)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QiSource {
    pub spectrum: SchmidtSpectrum,
    /// Per-shot conversion probability into the first pump mode.
    pub eps2_lambda0: f64,
}

impl QiSource {
    pub fn new(spectrum: SchmidtSpectrum, eps2_lambda0: f64) -> Result<Self> {
        if !(eps2_lambda0 > 0.0 && eps2_lambda0 <= 1.0) {
            return Err(Error::invalid(format!("eps2_lambda0 must lie in (0, 1], got {eps2_lambda0}")));
        }
        Ok(Self { spectrum, eps2_lambda0 })
    }

    pub fn schmidt_number(&self) -> f64 {
        self.spectrum.schmidt_number()
    }
}

/// Signal and noise contributions to the QI detection probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QiTerms {
    pub signal: f64,
    pub noise: f64,
}

impl QiTerms {
    pub fn total(&self) -> f64 {
        self.signal + self.noise
    }
}

/// `ε²λ₀·η` and `ε²λ₀·μ_b/SN`.
pub fn pd_qi_terms(source: &QiSource, channel: &QiChannel) -> QiTerms {
    let e = source.eps2_lambda0;
    QiTerms {
        signal: e * channel.eta,
        noise: e * channel.mu_b / source.schmidt_number(),
    }
}

/// `ε²λ₀·(η + μ_b/SN)`.
pub fn pd_qi(source: &QiSource, channel: &QiChannel) -> f64 {
    pd_qi_terms(source, channel).total()
}

fn clamp_probability(p: f64, what: &str) -> f64 {
    if p > 1.0 {
        log::warn!("{what} detection probability {p} exceeds 1; clamping");
        1.0
    } else {
        p
    }
}

/// Classical single-photon probe, `η + μ_b`.
pub fn pd_ci(channel: &QiChannel) -> f64 {
    clamp_probability(channel.eta + channel.mu_b, "classical illumination")
}

/// Classical probe read out with the same efficiency as the QI receiver.
pub fn pd_ci_matched(source: &QiSource, channel: &QiChannel) -> f64 {
    clamp_probability(source.eps2_lambda0 * (channel.eta + channel.mu_b), "efficiency-matched classical")
}

/// Which noise photons enter the returned signal modes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NoiseReference {
    /// `μ_b` counts noise photons per mode as collected with the returned
    /// probe.
    #[default]
    Collected,
    /// `μ_b` counts photons per mode at the unused beam-splitter port, so
    /// only a fraction `1 − η` is collected.
    BeamSplitterPort,
}

/// First-order SFG expectation with the default noise reference.
pub fn qi_expectation_oracle(source: &QiSource, channel: &QiChannel, n_modes: usize) -> Result<f64> {
    qi_expectation_oracle_with(source, channel, n_modes, NoiseReference::Collected)
}

/// `tr{A₀†A₀ ρ}` for the returned pair, expanded to first order in the SFG
/// coupling.
///
/// The pair is held as an amplitude matrix `C[a, b]` over signal modes `a`
/// and idler modes `b`, so that `B₀ = Σ conj(C[a,b]) F_a G_b` and
/// `P = ε²λ₀·⟨B₀†B₀⟩`. Each returned signal mode is `t·F_a + r·N_a` with
/// `|t|² = η`; the noise modes enter only through `⟨N_a†N_a'⟩ = δ μ_b` and
/// `⟨N_a⟩ = 0`. With those moments
///
/// `⟨B₀†B₀⟩ = |t|²·(Σ|C|²)² + |r|²μ_b·tr((C†C)²)`,
///
/// where the first term comes from the four-point pair correlator and the
/// second from the idler's reduced density matrix `C†C`.
pub fn qi_expectation_oracle_with(
    source: &QiSource,
    channel: &QiChannel,
    n_modes: usize,
    reference: NoiseReference,
) -> Result<f64> {
    channel.validate()?;
    if n_modes == 0 || n_modes > ORACLE_MAX_MODES {
        return Err(Error::invalid(format!(
            "oracle mode count must lie in 1..={ORACLE_MAX_MODES}, got {n_modes}"
        )));
    }
    let lambdas = source.spectrum.lambdas();
    let kept = &lambdas[..n_modes.min(lambdas.len())];
    let tail = source.spectrum.discarded() + lambdas[kept.len()..].iter().sum::<f64>();
    if tail > ORACLE_TAIL_LIMIT {
        return Err(Error::Truncation {
            discarded: tail,
            limit: ORACLE_TAIL_LIMIT,
        });
    }

    // Schmidt-basis pair amplitudes: nonzero entries (a, b, C[a, b])
    let entries: Vec<(usize, usize, C64)> = kept
        .iter()
        .enumerate()
        .map(|(n, l)| (n, n, C64::new(l.sqrt(), 0.0)))
        .collect();

    let t2 = channel.eta;
    let r2 = 1.0 - channel.eta;
    let collected_noise = match reference {
        NoiseReference::Collected => channel.mu_b,
        NoiseReference::BeamSplitterPort => r2 * channel.mu_b,
    };

    // ⟨pair| F†_a' G†_b' F_a G_b |pair⟩ = conj(C[a',b']) C[a,b]
    let norm: f64 = entries.iter().map(|(_, _, c)| c.norm_sqr()).sum();
    let signal = t2 * norm * norm;

    // idler reduced density matrix I = C†C, then Σ_{b',b} |I[b',b]|²
    let mut by_row: BTreeMap<usize, Vec<(usize, C64)>> = BTreeMap::new();
    for &(a, b, c) in &entries {
        by_row.entry(a).or_default().push((b, c));
    }
    let mut idler: BTreeMap<(usize, usize), C64> = BTreeMap::new();
    for row in by_row.values() {
        for &(b1, c1) in row {
            for &(b2, c2) in row {
                *idler.entry((b1, b2)).or_default() += c1.conj() * c2;
            }
        }
    }
    let noise = collected_noise * idler.values().map(|v| v.norm_sqr()).sum::<f64>();

    Ok(source.eps2_lambda0 * (signal + noise))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Protocol {
    /// Entangled probe with SFG receiver.
    Qi,
    /// Single-photon probe with unit detection efficiency.
    Ci,
    /// Single-photon probe at the QI receiver's efficiency.
    CiMatched,
}

impl Protocol {
    pub const ALL: [Protocol; 3] = [Protocol::Qi, Protocol::Ci, Protocol::CiMatched];

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Qi => "qi",
            Protocol::Ci => "ci",
            Protocol::CiMatched => "ci_matched",
        }
    }

    fn tag(self) -> u8 {
        match self {
            Protocol::Qi => 0,
            Protocol::Ci => 1,
            Protocol::CiMatched => 2,
        }
    }

    /// Per-shot detection probability.
    pub fn probability(self, source: &QiSource, channel: &QiChannel) -> f64 {
        match self {
            Protocol::Qi => pd_qi(source, channel),
            Protocol::Ci => pd_ci(channel),
            Protocol::CiMatched => pd_ci_matched(source, channel),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscriminationConfig {
    /// Shots per decision.
    pub block_len: u64,
    /// Decisions per hypothesis.
    pub blocks: u64,
    pub seed: u64,
}

impl DiscriminationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.block_len == 0 || self.blocks == 0 {
            return Err(Error::invalid("block_len and blocks must both be at least 1"));
        }
        Ok(())
    }
}

/// Detection counts under one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisSample {
    /// Model probability per shot.
    pub p_model: f64,
    pub shots: u64,
    pub detections: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Detections in each block.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    /// Decide "present" when a block has at least this many detections.
    pub threshold: u64,
    pub p_fa: f64,
    pub p_detect: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QiDiscriminationResult {
    pub protocol: Protocol,
    /// Shots per decision.
    pub shots: u64,
    /// Operating point minimizing `p_fa + p_miss`.
    pub threshold: u64,
    pub p_fa: f64,
    pub p_miss: f64,
    /// Points ordered by decreasing threshold, i.e. increasing `p_fa`.
    pub roc: Vec<RocPoint>,
    pub present: HypothesisSample,
    pub absent: HypothesisSample,
}

impl QiDiscriminationResult {
    /// Trapezoid area under the empirical ROC, anchored at (0,0) and (1,1).
    pub fn auc(&self) -> f64 {
        let mut area = 0.0;
        let (mut x0, mut y0) = (0.0, 0.0);
        for p in self.roc.iter().chain(std::iter::once(&RocPoint {
            threshold: 0,
            p_fa: 1.0,
            p_detect: 1.0,
        })) {
            area += (p.p_fa - x0) * (p.p_detect + y0) / 2.0;
            x0 = p.p_fa;
            y0 = p.p_detect;
        }
        area
    }
}

fn sample_hypothesis(p: f64, config: &DiscriminationConfig, domain: Domain) -> Result<HypothesisSample> {
    let binom = Binomial::new(config.block_len, p)
        .map_err(|e| Error::Computation(format!("binomial with p = {p}: {e}")))?;
    let counts: Vec<u64> = (0..config.blocks)
        .into_par_iter()
        .map(|b| binom.sample(&mut substream(config.seed, domain, b)))
        .collect();
    let detections: u64 = counts.iter().sum();
    let shots = config.blocks * config.block_len;
    let (ci_low, ci_high) = wilson_interval(detections, shots, Z95);
    Ok(HypothesisSample {
        p_model: p,
        shots,
        detections,
        p_hat: detections as f64 / shots as f64,
        ci_low,
        ci_high,
        counts,
    })
}

/// Fraction of `sorted` at or above `threshold`.
fn tail_fraction(sorted: &[u64], threshold: u64) -> f64 {
    let below = sorted.partition_point(|&c| c < threshold);
    (sorted.len() - below) as f64 / sorted.len() as f64
}

/// Threshold test between target present and absent for one protocol.
///
/// Each hypothesis gets `config.blocks` independent blocks of
/// `config.block_len` shots; a block's detection count is binomial with the
/// protocol's per-shot probability.
pub fn run_discrimination(
    source: &QiSource,
    present: &QiChannel,
    absent: &QiChannel,
    protocol: Protocol,
    config: &DiscriminationConfig,
) -> Result<QiDiscriminationResult> {
    present.validate()?;
    absent.validate()?;
    config.validate()?;
    if present.mu_b != absent.mu_b {
        return Err(Error::invalid(format!(
            "hypotheses must share the noise level, got {} and {}",
            present.mu_b, absent.mu_b
        )));
    }
    let domain = |h: u8| Domain::QiBlocks {
        protocol: protocol.tag(),
        hypothesis: h,
    };
    let present_s = sample_hypothesis(protocol.probability(source, present), config, domain(1))?;
    let absent_s = sample_hypothesis(protocol.probability(source, absent), config, domain(0))?;

    let mut yes = present_s.counts.clone();
    let mut no = absent_s.counts.clone();
    yes.sort_unstable();
    no.sort_unstable();
    // rates only change at observed counts
    let mut thresholds: Vec<u64> = yes.iter().chain(&no).copied().collect();
    thresholds.push(yes.last().copied().unwrap_or(0).max(no.last().copied().unwrap_or(0)) + 1);
    thresholds.sort_unstable_by(|a, b| b.cmp(a));
    thresholds.dedup();

    let roc: Vec<RocPoint> = thresholds
        .iter()
        .map(|&threshold| RocPoint {
            threshold,
            p_fa: tail_fraction(&no, threshold),
            p_detect: tail_fraction(&yes, threshold),
        })
        .collect();
    let best = roc
        .iter()
        .min_by(|a, b| {
            let ea = a.p_fa + 1.0 - a.p_detect;
            let eb = b.p_fa + 1.0 - b.p_detect;
            ea.total_cmp(&eb).then(a.threshold.cmp(&b.threshold))
        })
        .copied()
        .expect("at least one threshold");

    Ok(QiDiscriminationResult {
        protocol,
        shots: config.block_len,
        threshold: best.threshold,
        p_fa: best.p_fa,
        p_miss: 1.0 - best.p_detect,
        roc,
        present: present_s,
        absent: absent_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn source(lambdas: Vec<f64>, e: f64) -> QiSource {
        QiSource::new(SchmidtSpectrum::from_lambdas(lambdas).unwrap(), e).unwrap()
    }

    #[test]
    fn closed_form_examples() {
        let s = source(vec![1.0], 0.01);
        assert_eq!(pd_qi(&s, &QiChannel::new(1.0, 0.0).unwrap()), 0.01);
        let s2 = source(vec![0.5, 0.5], 1e-2);
        assert!((pd_qi(&s2, &QiChannel::new(0.3, 0.4).unwrap()) - 5e-3).abs() < 1e-15);
        let wide = QiSource::new(SchmidtSpectrum::uniform(1_000_000).unwrap(), 0.02).unwrap();
        let p = pd_qi(&wide, &QiChannel::new(0.0, 0.7).unwrap());
        assert!((p - 0.02 * 0.7e-6).abs() < 1e-15);
    }

    #[test]
    fn ci_probabilities() {
        assert_eq!(pd_ci(&QiChannel::new(0.0, 0.0).unwrap()), 0.0);
        assert!((pd_ci(&QiChannel::new(0.3, 0.4).unwrap()) - 0.7).abs() < 1e-15);
        assert_eq!(pd_ci(&QiChannel::new(0.9, 0.5).unwrap()), 1.0);
        let s = source(vec![0.7, 0.2, 0.1], 0.1);
        let c = QiChannel::new(0.4, 0.3).unwrap();
        assert!(pd_qi(&s, &c) / 0.1 < pd_ci(&c));
        let one = source(vec![1.0], 0.1);
        assert!((pd_qi(&one, &c) / 0.1 - pd_ci(&c)).abs() < 1e-15);
        assert!((pd_ci_matched(&s, &c) - 0.07).abs() < 1e-15);
    }

    #[test]
    fn equivalent_to_ci_with_reduced_noise() {
        let s = source(vec![0.4, 0.3, 0.2, 0.1], 0.05);
        let c = QiChannel::new(0.2, 0.6).unwrap();
        let reduced = QiChannel::new(0.2, 0.6 / s.schmidt_number()).unwrap();
        assert!((pd_qi(&s, &c) - 0.05 * pd_ci(&reduced)).abs() < 1e-15);
    }

    #[test]
    fn oracle_matches_closed_form_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let k = rng.random_range(1..40);
            let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let sum: f64 = raw.iter().sum();
            let s = source(raw.iter().map(|x| x / sum).collect(), rng.random_range(1e-4..1.0));
            let c = QiChannel::new(rng.random(), rng.random_range(0.0..3.0)).unwrap();
            let o = qi_expectation_oracle(&s, &c, 64).unwrap();
            assert!((o - pd_qi(&s, &c)).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_special_cases() {
        let s = source(vec![0.6, 0.3, 0.1], 0.2);
        let ideal = QiChannel::new(1.0, 0.0).unwrap();
        assert!((qi_expectation_oracle(&s, &ideal, 3).unwrap() - pd_qi(&s, &ideal)).abs() < 1e-10);
        let dark = QiChannel::new(0.0, 0.8).unwrap();
        let sum_sq: f64 = [0.36, 0.09, 0.01].iter().sum();
        assert!((qi_expectation_oracle(&s, &dark, 3).unwrap() - 0.2 * 0.8 * sum_sq).abs() < 1e-10);
        let single = source(vec![1.0], 0.3);
        let c = QiChannel::new(0.25, 0.5).unwrap();
        assert!((qi_expectation_oracle(&single, &c, 1).unwrap() - 0.3 * 0.75).abs() < 1e-12);
        let port = qi_expectation_oracle_with(&s, &c, 3, NoiseReference::BeamSplitterPort).unwrap();
        assert!((port - 0.2 * (0.25 + 0.75 * 0.5 * sum_sq)).abs() < 1e-12);
    }

    #[test]
    fn oracle_reports_truncation() {
        let s = source(vec![0.5, 0.3, 0.2], 0.1);
        assert!(matches!(
            qi_expectation_oracle(&s, &QiChannel::new(0.5, 0.5).unwrap(), 2),
            Err(Error::Truncation { .. })
        ));
        assert!(qi_expectation_oracle(&s, &QiChannel::new(0.5, 0.5).unwrap(), 2000).is_err());
        let geo = QiSource::new(SchmidtSpectrum::geometric(0.9, 200).unwrap(), 0.1).unwrap();
        assert!(qi_expectation_oracle(&geo, &QiChannel::new(0.5, 0.5).unwrap(), 200).is_ok());
    }

    #[test]
    fn pd_qi_decreases_with_schmidt_number() {
        let c = QiChannel::new(0.1, 0.5).unwrap();
        let quiet = QiChannel::new(0.1, 0.0).unwrap();
        let mut last = f64::INFINITY;
        for k in [1, 2, 5, 10, 100] {
            let s = QiSource::new(SchmidtSpectrum::uniform(k).unwrap(), 0.01).unwrap();
            let p = pd_qi(&s, &c);
            assert!(p < last);
            last = p;
            assert_eq!(pd_qi(&s, &quiet), 0.01 * 0.1);
        }
    }

    fn config(block_len: u64, blocks: u64) -> DiscriminationConfig {
        DiscriminationConfig {
            block_len,
            blocks,
            seed: 77,
        }
    }

    #[test]
    fn rates_match_model_within_binomial_error() {
        let s = QiSource::new(SchmidtSpectrum::uniform(100).unwrap(), 1e-3).unwrap();
        let yes = QiChannel::new(0.1, 1.0).unwrap();
        let no = QiChannel::new(0.0, 1.0).unwrap();
        for shots in [1_000, 100_000] {
            for protocol in Protocol::ALL {
                let r = run_discrimination(&s, &yes, &no, protocol, &config(shots, 10)).unwrap();
                for h in [&r.present, &r.absent] {
                    let sd = (h.p_model * (1.0 - h.p_model) / h.shots as f64).sqrt();
                    assert!((h.p_hat - h.p_model).abs() <= 3.0 * sd.max(1.0 / h.shots as f64));
                }
            }
        }
    }

    #[test]
    fn roc_is_monotone_and_reproducible() {
        let s = source(vec![0.5, 0.5], 0.05);
        let yes = QiChannel::new(0.2, 0.5).unwrap();
        let no = QiChannel::new(0.0, 0.5).unwrap();
        let r = run_discrimination(&s, &yes, &no, Protocol::Qi, &config(500, 400)).unwrap();
        for w in r.roc.windows(2) {
            assert!(w[1].p_fa >= w[0].p_fa && w[1].p_detect >= w[0].p_detect);
            assert!(w[1].threshold < w[0].threshold);
        }
        assert_eq!(r.roc[0].p_fa, 0.0);
        assert_eq!(r, run_discrimination(&s, &yes, &no, Protocol::Qi, &config(500, 400)).unwrap());
    }

    #[test]
    fn identical_hypotheses_give_diagonal_roc() {
        let s = source(vec![0.5, 0.5], 0.05);
        let c = QiChannel::new(0.2, 0.5).unwrap();
        let r = run_discrimination(&s, &c, &c, Protocol::Qi, &config(400, 2000)).unwrap();
        for p in &r.roc {
            assert!((p.p_fa - p.p_detect).abs() < 0.06, "{p:?}");
        }
        assert!((r.auc() - 0.5).abs() < 0.03);
    }

    #[test]
    fn entanglement_beats_matched_classical_probe() {
        let s = QiSource::new(SchmidtSpectrum::uniform(100).unwrap(), 1e-3).unwrap();
        let yes = QiChannel::new(0.1, 1.0).unwrap();
        let no = QiChannel::new(0.0, 1.0).unwrap();
        let cfg = config(100_000, 400);
        let qi = run_discrimination(&s, &yes, &no, Protocol::Qi, &cfg).unwrap();
        let ci = run_discrimination(&s, &yes, &no, Protocol::CiMatched, &cfg).unwrap();
        assert!(qi.p_fa + qi.p_miss < ci.p_fa + ci.p_miss);
        assert!(qi.auc() > ci.auc() + 0.1);
    }

    #[test]
    fn hypotheses_must_share_noise() {
        let s = source(vec![1.0], 0.1);
        let err = run_discrimination(
            &s,
            &QiChannel::new(0.1, 1.0).unwrap(),
            &QiChannel::new(0.0, 0.5).unwrap(),
            Protocol::Qi,
            &config(10, 10),
        );
        assert!(err.is_err());
        assert!(QiChannel::new(1.2, 0.0).is_err());
        assert!(QiChannel::new(0.5, -1.0).is_err());
    }
}
