//! The two receivers under comparison.

use num_complex::Complex64;

use crate::denoise::{decompose_noisy, DenoiseConfig, SimilarityKind, DEFAULT_PAIR_BUDGET};
use crate::error::{Error, Result};
use crate::noinfra::channel::SimConfig;
use crate::noinfra::qam::qam_demodulate;
use crate::sequence::ComplexSequence;

/// Receiver-side knobs for decomposition-based reception.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoInfraReceiverConfig {
    pub modulation_order: usize,
    pub denoise: DenoiseConfig,
    pub similarity: SimilarityKind,
    pub pair_budget: usize,
    pub seed: u64,
}

impl NoInfraReceiverConfig {
    pub fn new(modulation_order: usize, seed: u64) -> Self {
        Self {
            modulation_order,
            denoise: DenoiseConfig::default(),
            similarity: SimilarityKind::Diagonal,
            pair_budget: DEFAULT_PAIR_BUDGET,
            seed,
        }
    }
}

/// Decomposition-based reception.
///
/// The receiver knows each transmitter's channel coefficients `(beta, theta)`
/// but not its frequency, so recovered components cannot be matched to
/// transmitters through the ratios. Components are associated to `(beta,
/// theta)` records by amplitude: the assignment minimizing
/// `sum | |a_i| - beta_match(i) |`, found greedily and improved by pairwise
/// swaps. Each symbol is then `a / (beta e^{j theta})`, demodulated.
///
/// Returns demodulated symbol indices aligned with `known`. Any pipeline
/// failure is an error; callers score it as all symbols wrong.
pub fn noinfra_receive(
    s_w: &ComplexSequence,
    known: &[(f64, f64)],
    k: Option<usize>,
    cfg: &NoInfraReceiverConfig,
) -> Result<Vec<usize>> {
    if known.is_empty() {
        return Err(Error::invalid("receiver needs at least one channel record"));
    }
    let (decomposition, _report) = decompose_noisy(
        s_w,
        k,
        &cfg.denoise,
        cfg.similarity,
        cfg.pair_budget,
        cfg.seed,
    )?;
    if decomposition.k() != known.len() {
        return Err(Error::invalid(format!(
            "recovered {} components for {} transmitters",
            decomposition.k(),
            known.len()
        )));
    }
    let amplitudes: Vec<f64> = decomposition
        .components()
        .iter()
        .map(|c| c.initial_term.norm())
        .collect();
    let betas: Vec<f64> = known.iter().map(|&(beta, _)| beta).collect();
    let assignment = assign_by_amplitude(&amplitudes, &betas);

    let mut symbols = vec![0usize; known.len()];
    for (component_idx, &record_idx) in assignment.iter().enumerate() {
        let (beta, theta) = known[record_idx];
        let gain = Complex64::from_polar(beta, theta);
        let estimate = decomposition.components()[component_idx].initial_term / gain;
        symbols[record_idx] = qam_demodulate(estimate, cfg.modulation_order)?;
    }
    Ok(symbols)
}

/// Assignment `component -> record` minimizing the summed absolute amplitude
/// mismatch: greedy matching followed by local pairwise-swap improvement.
fn assign_by_amplitude(amplitudes: &[f64], betas: &[f64]) -> Vec<usize> {
    let n = amplitudes.len();
    let cost = |i: usize, j: usize| (amplitudes[i] - betas[j]).abs();

    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for _ in 0..n {
        let mut best: Option<(usize, usize, f64)> = None;
        for i in 0..n {
            if assignment[i] != usize::MAX {
                continue;
            }
            for j in 0..n {
                if taken[j] {
                    continue;
                }
                let c = cost(i, j);
                if best.map_or(true, |(_, _, b)| c < b) {
                    best = Some((i, j, c));
                }
            }
        }
        let (i, j, _) = best.expect("unassigned pair exists");
        assignment[i] = j;
        taken[j] = true;
    }

    let mut improved = true;
    while improved {
        improved = false;
        for i in 0..n {
            for j in (i + 1)..n {
                let current = cost(i, assignment[i]) + cost(j, assignment[j]);
                let swapped = cost(i, assignment[j]) + cost(j, assignment[i]);
                if swapped + 1e-15 < current {
                    assignment.swap(i, j);
                    improved = true;
                }
            }
        }
    }
    assignment
}

/// Channel knowledge for the grid receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraSicKnown {
    pub amplitude: f64,
    pub phase: f64,
    /// Occupied grid slot, 1-based.
    pub grid_index: usize,
    /// True Doppler-shifted frequency, used for reconstruction during
    /// cancellation.
    pub doppler_shifted_hz: f64,
}

/// DFT value of `samples` at grid bin `bin` (unit-normalized so an on-grid
/// transmitter contributes exactly `beta e^{j theta} x`).
fn dft_bin(samples: &[Complex64], bin: usize) -> Complex64 {
    let p = samples.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for (l, &sample) in samples.iter().enumerate() {
        let angle = -std::f64::consts::TAU * (bin * l % p) as f64 / p as f64;
        acc += sample * Complex64::from_polar(1.0, angle);
    }
    acc / p as f64
}

/// Grid reception: DFT demodulation per occupied bin; collided bins run
/// successive interference cancellation in descending received-power order,
/// reconstructing each cancelled contribution from the sliced symbol and the
/// true channel parameters.
///
/// Demodulation itself never compensates Doppler; the off-grid leakage is the
/// baseline's inherent impairment.
pub fn ora_sic_receive(
    s_w: &ComplexSequence,
    known: &[OraSicKnown],
    cfg: &SimConfig,
) -> Result<Vec<usize>> {
    let p = cfg.samples_per_symbol;
    if s_w.len() != p {
        return Err(Error::dim(format!(
            "expected {p} samples, got {}",
            s_w.len()
        )));
    }
    let dt = cfg.sample_interval_s();
    let m = cfg.modulation_order;
    let mut symbols = vec![0usize; known.len()];

    // Group transmitters by DFT bin.
    let mut bins: Vec<(usize, Vec<usize>)> = Vec::new();
    for (idx, record) in known.iter().enumerate() {
        let bin = record.grid_index % p;
        match bins.iter_mut().find(|(b, _)| *b == bin) {
            Some((_, members)) => members.push(idx),
            None => bins.push((bin, vec![idx])),
        }
    }
    bins.sort_by_key(|&(bin, _)| bin);

    for (bin, mut members) in bins {
        if members.len() == 1 {
            let record = &known[members[0]];
            let gain = Complex64::from_polar(record.amplitude, record.phase);
            let estimate = dft_bin(s_w.samples(), bin) / gain;
            symbols[members[0]] = qam_demodulate(estimate, m)?;
            continue;
        }
        // Collision: strongest first, cancel, re-transform.
        members.sort_by(|&a, &b| {
            known[b]
                .amplitude
                .partial_cmp(&known[a].amplitude)
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let mut residual: Vec<Complex64> = s_w.samples().to_vec();
        for &idx in &members {
            let record = &known[idx];
            let gain = Complex64::from_polar(record.amplitude, record.phase);
            let estimate = dft_bin(&residual, bin) / gain;
            let symbol = qam_demodulate(estimate, m)?;
            symbols[idx] = symbol;
            let sliced = crate::noinfra::qam::qam_modulate(symbol, m)?;
            let ratio =
                Complex64::from_polar(1.0, std::f64::consts::TAU * record.doppler_shifted_hz * dt);
            let mut power = Complex64::new(1.0, 0.0);
            for sample in residual.iter_mut() {
                *sample -= gain * sliced * power;
                power *= ratio;
            }
        }
    }
    Ok(symbols)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noinfra::channel::{
        draw_scenario, received_sequence, ReceiverKind, TransmitterRealization,
    };
    use crate::noinfra::qam::qam_modulate;
    use crate::seeding::derive_rng;
    use rand::Rng;

    fn tx(
        symbol_index: usize,
        m: usize,
        f_hz: f64,
        doppler: f64,
        amplitude: f64,
        phase: f64,
        grid_index: Option<usize>,
    ) -> TransmitterRealization {
        TransmitterRealization {
            symbol_index,
            symbol: qam_modulate(symbol_index, m).unwrap(),
            subcarrier_hz: f_hz,
            doppler_shifted_hz: f_hz + doppler,
            amplitude,
            phase,
            grid_index,
        }
    }

    #[test]
    fn noinfra_recovers_exactly_without_noise() {
        let cfg = SimConfig { k: 2, gamma_db: 20.0, ..SimConfig::default() };
        let mut rng = derive_rng(50, 0);
        let (txs, _) = draw_scenario(&cfg, &mut rng).unwrap();
        let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        let known: Vec<(f64, f64)> = txs.iter().map(|t| (t.amplitude, t.phase)).collect();
        let rx_cfg = NoInfraReceiverConfig::new(cfg.modulation_order, 1);
        let symbols = noinfra_receive(&s, &known, Some(2), &rx_cfg).unwrap();
        for (got, tx) in symbols.iter().zip(&txs) {
            assert_eq!(*got, tx.symbol_index);
        }
    }

    #[test]
    fn duplicate_frequencies_fail_as_degenerate() {
        // Identical Doppler-shifted frequencies make the component count
        // unidentifiable; the receiver reports an error and the caller scores
        // all symbols as wrong.
        let cfg = SimConfig { k: 2, ..SimConfig::default() };
        let m = cfg.modulation_order;
        let f = 300e3;
        let txs = vec![
            tx(3, m, f, 0.0, 10.0, 0.3, None),
            tx(7, m, f, 0.0, 12.0, 1.1, None),
        ];
        let mut rng = derive_rng(51, 0);
        let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        let known: Vec<(f64, f64)> = txs.iter().map(|t| (t.amplitude, t.phase)).collect();
        let rx_cfg = NoInfraReceiverConfig::new(m, 1);
        let err = noinfra_receive(&s, &known, Some(2), &rx_cfg).unwrap_err();
        assert!(
            matches!(err, Error::DegenerateSimplex { .. } | Error::InvalidArgument { .. }),
            "{err:?}"
        );
    }

    #[test]
    fn amplitude_assignment_prefers_the_global_optimum() {
        // Greedy alone would pair 5.0 with 5.5; the swap pass fixes it.
        let assignment = assign_by_amplitude(&[5.0, 6.0], &[5.5, 4.0]);
        assert_eq!(assignment, vec![1, 0]);
    }

    #[test]
    fn ora_sic_is_exact_on_orthogonal_bins() {
        let cfg = SimConfig {
            k: 3,
            receiver: ReceiverKind::OraSic,
            doppler_range_hz: (0.0, 0.0),
            ..SimConfig::default()
        };
        let m = cfg.modulation_order;
        let t = cfg.symbol_duration_s;
        let txs = vec![
            tx(1, m, 3.0 / t, 0.0, 8.0, 0.4, Some(3)),
            tx(9, m, 11.0 / t, 0.0, 2.0, 2.9, Some(11)),
            tx(15, m, 27.0 / t, 0.0, 4.0, 5.1, Some(27)),
        ];
        let mut rng = derive_rng(52, 0);
        let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        let known: Vec<OraSicKnown> = txs
            .iter()
            .map(|t| OraSicKnown {
                amplitude: t.amplitude,
                phase: t.phase,
                grid_index: t.grid_index.unwrap(),
                doppler_shifted_hz: t.doppler_shifted_hz,
            })
            .collect();
        let symbols = ora_sic_receive(&s, &known, &cfg).unwrap();
        for (got, tx) in symbols.iter().zip(&txs) {
            assert_eq!(*got, tx.symbol_index);
        }
    }

    #[test]
    fn on_grid_transmitter_leaks_nothing_into_other_bins() {
        let cfg = SimConfig {
            k: 1,
            receiver: ReceiverKind::OraSic,
            doppler_range_hz: (0.0, 0.0),
            ..SimConfig::default()
        };
        let m = cfg.modulation_order;
        let t = cfg.symbol_duration_s;
        let transmitter = tx(5, m, 7.0 / t, 0.0, 3.0, 1.0, Some(7));
        let mut rng = derive_rng(53, 0);
        let s = received_sequence(&[transmitter], 0.0, &cfg, &mut rng).unwrap();
        let own = dft_bin(s.samples(), 7).norm();
        for bin in 0..cfg.samples_per_symbol {
            if bin == 7 {
                continue;
            }
            let leak = dft_bin(s.samples(), bin).norm();
            assert!(leak < 1e-10 * own, "bin {bin} leak {leak}");
        }
    }

    #[test]
    fn sic_separates_unequal_powers_in_a_collision() {
        let cfg = SimConfig {
            k: 2,
            receiver: ReceiverKind::OraSic,
            doppler_range_hz: (0.0, 0.0),
            ..SimConfig::default()
        };
        let m = cfg.modulation_order;
        let t = cfg.symbol_duration_s;
        // Same bin, 12 dB apart: SIC decodes both without noise.
        let txs = vec![
            tx(2, m, 9.0 / t, 0.0, 8.0, 0.7, Some(9)),
            tx(13, m, 9.0 / t, 0.0, 2.0, 3.3, Some(9)),
        ];
        let mut rng = derive_rng(54, 0);
        let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
        let known: Vec<OraSicKnown> = txs
            .iter()
            .map(|t| OraSicKnown {
                amplitude: t.amplitude,
                phase: t.phase,
                grid_index: t.grid_index.unwrap(),
                doppler_shifted_hz: t.doppler_shifted_hz,
            })
            .collect();
        let symbols = ora_sic_receive(&s, &known, &cfg).unwrap();
        assert_eq!(symbols[0], 2);
        assert_eq!(symbols[1], 13);
    }

    #[test]
    fn equal_power_collisions_are_mostly_unrecoverable() {
        // Same-bin, equal-amplitude 16-QAM: cancellation has no power
        // ordering to exploit, so at least one symbol should be wrong in
        // nearly every draw.
        let cfg = SimConfig {
            k: 2,
            receiver: ReceiverKind::OraSic,
            doppler_range_hz: (0.0, 0.0),
            ..SimConfig::default()
        };
        let m = cfg.modulation_order;
        let t = cfg.symbol_duration_s;
        let mut rng = derive_rng(55, 0);
        let trials = 200;
        let mut errored = 0;
        for _ in 0..trials {
            let si = rng.random_range(0..m);
            let sj = rng.random_range(0..m);
            let txs = vec![
                tx(si, m, 4.0 / t, 0.0, 5.0, rng.random_range(0.0..6.28), Some(4)),
                tx(sj, m, 4.0 / t, 0.0, 5.0, rng.random_range(0.0..6.28), Some(4)),
            ];
            let s = received_sequence(&txs, 0.0, &cfg, &mut rng).unwrap();
            let known: Vec<OraSicKnown> = txs
                .iter()
                .map(|t| OraSicKnown {
                    amplitude: t.amplitude,
                    phase: t.phase,
                    grid_index: t.grid_index.unwrap(),
                    doppler_shifted_hz: t.doppler_shifted_hz,
                })
                .collect();
            let symbols = ora_sic_receive(&s, &known, &cfg).unwrap();
            if symbols[0] != si || symbols[1] != sj {
                errored += 1;
            }
        }
        assert!(
            errored as f64 >= 0.9 * trials as f64,
            "errored in {errored}/{trials}"
        );
    }
}
