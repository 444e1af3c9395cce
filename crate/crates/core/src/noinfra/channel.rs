//! Signal model: transmitter realizations and the sampled receive sequence.
//!
//! Transmitter `n` contributes `beta_n e^{j theta_n} x_n (e^{j 2 pi f~_n})^{l dT}`
//! at sample `l`, i.e. a geometric component with initial term
//! `beta_n e^{j theta_n} x_n` and common ratio `e^{j 2 pi f~_n dT}`. Additive
//! noise is circular complex Gaussian with a fixed per-sample variance of one;
//! per-transmitter SNR is realized through the amplitude `beta`.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noinfra::qam::qam_modulate;
use crate::sequence::ComplexSequence;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReceiverKind {
    /// Continuous random frequencies, decomposition-based reception.
    NoInfra,
    /// Orthogonal subcarrier grid, DFT + successive interference cancellation.
    OraSic,
}

/// Scenario parameters for one simulation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub center_frequency_hz: f64,
    /// Signal bandwidth `F`.
    pub bandwidth_hz: f64,
    /// Symbol duration `T`.
    pub symbol_duration_s: f64,
    /// Samples per symbol `P`; the sampling rate equals the bandwidth.
    pub samples_per_symbol: usize,
    /// Number of simultaneous transmitters.
    pub k: usize,
    pub modulation_order: usize,
    /// Mean per-transmitter SNR in dB.
    pub gamma_db: f64,
    /// Standard deviation of the per-transmitter SNR in dB.
    pub sigma_db: f64,
    pub doppler_range_hz: (f64, f64),
    pub delay_spread_range_s: (f64, f64),
    pub trials: usize,
    pub seed: u64,
    pub receiver: ReceiverKind,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            center_frequency_hz: 6e9,
            bandwidth_hz: 1e6,
            symbol_duration_s: 30e-6,
            samples_per_symbol: 30,
            k: 2,
            modulation_order: 16,
            gamma_db: 30.0,
            sigma_db: 0.0,
            doppler_range_hz: (-1e3, 1e3),
            delay_spread_range_s: (0.0, 1e-6),
            trials: 10_000,
            seed: 1,
            receiver: ReceiverKind::NoInfra,
        }
    }
}

impl SimConfig {
    /// Sampling interval `T / P`.
    pub fn sample_interval_s(&self) -> f64 {
        self.symbol_duration_s / self.samples_per_symbol as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("transmitter count must be at least 1"));
        }
        if self.modulation_order < 2 || !self.modulation_order.is_power_of_two() {
            return Err(Error::invalid("modulation order must be a power of two >= 2"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trial count must be at least 1"));
        }
        if self.samples_per_symbol < 2 {
            return Err(Error::invalid("samples per symbol must be at least 2"));
        }
        if !(self.bandwidth_hz > 0.0) || !(self.symbol_duration_s > 0.0) {
            return Err(Error::invalid("bandwidth and symbol duration must be positive"));
        }
        if self.sigma_db < 0.0 {
            return Err(Error::invalid("SNR standard deviation must be non-negative"));
        }
        if self.doppler_range_hz.0 > self.doppler_range_hz.1
            || self.delay_spread_range_s.0 > self.delay_spread_range_s.1
        {
            return Err(Error::invalid("range bounds must satisfy low <= high"));
        }
        // Sampling at the bandwidth: T/P == 1/F.
        let relative = (self.sample_interval_s() * self.bandwidth_hz - 1.0).abs();
        if relative > 1e-6 {
            return Err(Error::invalid(
                "sampling rate must equal the bandwidth (T / P == 1 / F)",
            ));
        }
        Ok(())
    }
}

/// One transmitter draw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmitterRealization {
    pub symbol_index: usize,
    /// Unit-average-energy constellation point.
    pub symbol: Complex64,
    /// Selected subcarrier frequency `f`.
    pub subcarrier_hz: f64,
    /// Doppler-shifted frequency `f~`.
    pub doppler_shifted_hz: f64,
    /// Amplitude `beta` realizing the drawn SNR against unit noise variance.
    pub amplitude: f64,
    /// Phase rotation `theta` in `[0, 2 pi)`.
    pub phase: f64,
    /// Occupied grid slot (1-based) for grid receivers.
    pub grid_index: Option<usize>,
}

fn uniform(rng: &mut ChaCha8Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.random_range(range.0..range.1)
    }
}

/// Draw the per-trial transmitter realizations; the per-sample noise variance
/// is fixed to one.
pub fn draw_scenario(
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<TransmitterRealization>, f64)> {
    cfg.validate()?;
    let mut transmitters = Vec::with_capacity(cfg.k);
    for _ in 0..cfg.k {
        let snr_db = if cfg.sigma_db == 0.0 {
            cfg.gamma_db
        } else {
            let n: f64 = StandardNormal.sample(rng);
            cfg.gamma_db + cfg.sigma_db * n
        };
        let amplitude = 10f64.powf(snr_db / 20.0);
        let delay = uniform(rng, cfg.delay_spread_range_s);
        let doppler = uniform(rng, cfg.doppler_range_hz);
        let (subcarrier_hz, grid_index) = match cfg.receiver {
            ReceiverKind::NoInfra => (
                uniform(rng, (1.0 / cfg.symbol_duration_s, cfg.bandwidth_hz)),
                None,
            ),
            ReceiverKind::OraSic => {
                let index = rng.random_range(1..=cfg.samples_per_symbol);
                (index as f64 / cfg.symbol_duration_s, Some(index))
            }
        };
        let doppler_shifted_hz = subcarrier_hz + doppler;
        let phase = (-std::f64::consts::TAU * doppler_shifted_hz * delay)
            .rem_euclid(std::f64::consts::TAU);
        let symbol_index = rng.random_range(0..cfg.modulation_order);
        let symbol = qam_modulate(symbol_index, cfg.modulation_order)?;
        transmitters.push(TransmitterRealization {
            symbol_index,
            symbol,
            subcarrier_hz,
            doppler_shifted_hz,
            amplitude,
            phase,
            grid_index,
        });
    }
    Ok((transmitters, 1.0))
}

/// Initial term and common ratio of each transmitter's geometric component.
pub fn implied_components(
    transmitters: &[TransmitterRealization],
    cfg: &SimConfig,
) -> Vec<(Complex64, Complex64)> {
    let dt = cfg.sample_interval_s();
    transmitters
        .iter()
        .map(|tx| {
            let a = Complex64::from_polar(tx.amplitude, tx.phase) * tx.symbol;
            let r = Complex64::from_polar(1.0, std::f64::consts::TAU * tx.doppler_shifted_hz * dt);
            (a, r)
        })
        .collect()
}

fn superpose(components: &[(Complex64, Complex64)], length: usize) -> Vec<Complex64> {
    let mut samples = vec![Complex64::new(0.0, 0.0); length];
    for &(a, r) in components {
        let mut power = Complex64::new(1.0, 0.0);
        for sample in samples.iter_mut() {
            *sample += a * power;
            power *= r;
        }
    }
    samples
}

/// Sampled receive sequence: the superposed transmitter components plus
/// circular complex Gaussian noise of the given per-sample variance.
pub fn received_sequence(
    transmitters: &[TransmitterRealization],
    noise_variance: f64,
    cfg: &SimConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ComplexSequence> {
    if noise_variance < 0.0 {
        return Err(Error::invalid("noise variance must be non-negative"));
    }
    let p = cfg.samples_per_symbol;
    let mut samples = superpose(&implied_components(transmitters, cfg), p);
    if noise_variance > 0.0 {
        let std = (noise_variance / 2.0).sqrt();
        for sample in samples.iter_mut() {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            *sample += Complex64::new(std * re, std * im);
        }
    }
    ComplexSequence::new(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::derive_rng;
    use crate::sequence::{synthesize, Decomposition, GeometricComponent};

    #[test]
    fn degenerate_sigma_gives_equal_amplitudes() {
        let cfg = SimConfig { sigma_db: 0.0, gamma_db: 24.0, k: 4, ..SimConfig::default() };
        let mut rng = derive_rng(1, 1);
        let (txs, noise) = draw_scenario(&cfg, &mut rng).unwrap();
        assert_eq!(noise, 1.0);
        let expected = 10f64.powf(24.0 / 20.0);
        for tx in txs {
            assert_eq!(tx.amplitude, expected);
        }
    }

    #[test]
    fn static_channel_has_no_rotation() {
        let cfg = SimConfig {
            doppler_range_hz: (0.0, 0.0),
            delay_spread_range_s: (0.0, 0.0),
            ..SimConfig::default()
        };
        let mut rng = derive_rng(2, 1);
        let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
        for tx in txs {
            assert_eq!(tx.doppler_shifted_hz, tx.subcarrier_hz);
            assert_eq!(tx.phase, 0.0);
        }
    }

    #[test]
    fn snr_draws_average_to_gamma() {
        let cfg = SimConfig { sigma_db: 6.0, gamma_db: 31.0, k: 1, ..SimConfig::default() };
        let mut rng = derive_rng(3, 1);
        let draws = 100_000;
        let mut sum = 0.0;
        for _ in 0..draws {
            let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
            sum += 20.0 * txs[0].amplitude.log10();
        }
        let mean = sum / draws as f64;
        assert!((mean - 31.0).abs() < 0.1, "mean SNR {mean}");
    }

    #[test]
    fn single_transmitter_ratio_has_unit_modulus() {
        let cfg = SimConfig { k: 1, ..SimConfig::default() };
        let mut rng = derive_rng(4, 1);
        let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
        let comps = implied_components(&txs, &cfg);
        assert!((comps[0].1.norm() - 1.0).abs() < 1e-12);
        let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        for l in 0..cfg.samples_per_symbol - 1 {
            let ratio = s.get(l + 1) / s.get(l);
            assert!((ratio - comps[0].1).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_noise_matches_synthesize_exactly() {
        let cfg = SimConfig { k: 3, ..SimConfig::default() };
        let mut rng = derive_rng(5, 1);
        let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
        let comps = implied_components(&txs, &cfg);
        let d = Decomposition::new(
            comps
                .iter()
                .map(|&(a, r)| GeometricComponent::new(a, r).unwrap())
                .collect(),
        )
        .unwrap();
        let via_synthesize = synthesize(&d, cfg.samples_per_symbol).unwrap();
        let via_channel = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        assert_eq!(via_synthesize, via_channel);
    }

    #[test]
    fn noise_power_matches_requested_variance() {
        let cfg = SimConfig { k: 1, ..SimConfig::default() };
        let mut rng = derive_rng(6, 1);
        let variance = 2.5;
        let mut acc = 0.0;
        let mut count = 0usize;
        // Empty transmitter list isolates the noise.
        for _ in 0..4000 {
            let s = received_sequence(&[], variance, &cfg, &mut rng).unwrap();
            acc += s.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += s.len();
        }
        let mean = acc / count as f64;
        assert!((mean - variance).abs() < 0.02 * variance, "noise power {mean}");
    }

    #[test]
    fn received_power_per_component_is_beta_squared() {
        let cfg = SimConfig { k: 1, gamma_db: 12.0, sigma_db: 0.0, ..SimConfig::default() };
        let mut rng = derive_rng(7, 1);
        let mut acc = 0.0;
        let mut count = 0usize;
        for _ in 0..4000 {
            let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
            let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
            // |x|^2 averages to one over the constellation, so power averages
            // to beta^2 across draws.
            acc += s.samples().iter().map(|z| z.norm_sqr()).sum::<f64>();
            count += s.len();
        }
        let beta_sq = 10f64.powf(12.0 / 10.0);
        let mean = acc / count as f64;
        assert!(
            (mean - beta_sq).abs() < 0.02 * beta_sq,
            "mean power {mean} vs beta^2 {beta_sq}"
        );
    }

    #[test]
    fn config_validation_rejects_bad_setups() {
        let ok = SimConfig::default();
        assert!(ok.validate().is_ok());
        assert!(SimConfig { k: 0, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { modulation_order: 3, ..ok.clone() }.validate().is_err());
        assert!(SimConfig { trials: 0, ..ok.clone() }.validate().is_err());
        assert!(
            SimConfig { samples_per_symbol: 40, ..ok.clone() }.validate().is_err(),
            "sampling must match the bandwidth"
        );
        assert!(SimConfig { sigma_db: -1.0, ..ok }.validate().is_err());
    }
}
