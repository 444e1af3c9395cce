//! The exact (noise-free) decomposition pipeline: model-order detection via
//! the geometric test on basic-simplex volume series, ratio extraction as the
//! roots of the quotient polynomial, and initial-term recovery by a ratio
//! Vandermonde least-squares solve.

use num_complex::Complex64;

use crate::error::{Error, Result, Warning};
use crate::linalg::{least_squares_with_condition, polynomial_roots, ComplexMatrix};
use crate::sequence::{
    synthesize, ComplexSequence, Decomposition, GeometricComponent, IndexPattern,
};
use crate::simplex::{basic_volume_series, is_geometric, volume_quotients, zero_volume_threshold};

/// Ratio-agreement tolerance of the geometric test for noise-free inputs.
/// Callers working on noisy data should pass a looser tolerance explicitly.
pub const NOISELESS_GEOMETRIC_TOL: f64 = 1e-9;

/// Relative ratio gap below which recovered ratios are flagged as nearly
/// duplicate.
pub const NEAR_DUPLICATE_REL_GAP: f64 = 1e-6;

/// Round-trip residual (relative, max-norm) above which a recovered
/// decomposition is rejected as inconsistent with its input.
pub const ROUND_TRIP_LIMIT: f64 = 1e-4;

const ILL_CONDITIONED_LIMIT: f64 = 1e10;

/// Largest model order testable from `p` samples with the compact pattern:
/// detection needs `2k + 1` samples.
pub fn default_k_max(p: usize) -> usize {
    ((p.max(1) - 1) / 2).max(1)
}

/// Whether `p` samples allow the order-`k_hat` geometric test for this
/// pattern, i.e. the realizable search space holds at least `k_hat + 2`
/// vertices (strictly more than `k_hat + 1`).
pub fn can_detect_k(p: usize, pattern: &IndexPattern, k_hat: usize) -> bool {
    let pattern = pattern.resized(k_hat);
    let required = pattern.shift() * (k_hat + 1) + pattern.max_offset();
    required + 1 <= p
}

/// Smallest order in `1..=k_max` whose basic-simplex volume series (at least
/// three volumes, all above the zero threshold) is geometric within `tol`.
pub fn detect_k(
    s: &ComplexSequence,
    pattern_seed: Option<&IndexPattern>,
    tol: f64,
    k_max: usize,
) -> Result<usize> {
    let p = s.len();
    if p < 3 {
        return Err(Error::invalid("order detection requires at least 3 samples"));
    }
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    for k_hat in 1..=k_max {
        let pattern = match pattern_seed {
            Some(seed) => seed.resized(k_hat),
            None => IndexPattern::consecutive(k_hat),
        };
        if !can_detect_k(p, &pattern, k_hat) {
            continue;
        }
        // Vertices realizable from p samples, capped so the test sees at most
        // k_hat + 3 volumes (one more ratio than strictly necessary).
        let max_vertices = (p - 1 - pattern.max_offset()) / pattern.shift() + 1;
        let volumes_available = max_vertices.saturating_sub(k_hat - 1);
        let n_volumes = volumes_available.min(k_hat + 3);
        if n_volumes < 3 {
            continue;
        }
        let vertex_count = n_volumes + k_hat - 1;
        let series = basic_volume_series(s, &pattern, vertex_count)?;
        let used_max = max_used_sample(s, &pattern, vertex_count);
        let threshold = zero_volume_threshold(used_max, k_hat);
        if series.volumes().iter().any(|v| v.norm() <= threshold) {
            continue;
        }
        if is_geometric(series.volumes(), tol)?.0 {
            return Ok(k_hat);
        }
    }
    Err(Error::DetectionFailure { k_max })
}

fn max_used_sample(s: &ComplexSequence, pattern: &IndexPattern, vertex_count: usize) -> f64 {
    let mut max = 0.0_f64;
    for j in 0..vertex_count {
        for &offset in pattern.offsets() {
            max = max.max(s.get(pattern.shift() * j + offset).norm());
        }
    }
    max
}

/// The common ratios: roots of the monic polynomial whose coefficient of
/// `r^n` is `(-1)^(k-n) * v[k-n]`.
pub fn extract_ratios(quotients: &crate::simplex::VolumeQuotients) -> Result<Vec<Complex64>> {
    let k = quotients.order();
    let coefficients: Vec<Complex64> = quotients
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| if i % 2 == 0 { v } else { -v })
        .collect();
    debug_assert_eq!(coefficients.len(), k + 1);
    polynomial_roots(&coefficients)
}

/// The ratio power matrix `R[m][n] = ratios[n]^m` over `rows` rows.
pub fn ratio_matrix(ratios: &[Complex64], rows: usize) -> Result<ComplexMatrix> {
    if ratios.is_empty() || rows == 0 {
        return Err(Error::invalid("ratio matrix requires ratios and rows"));
    }
    let k = ratios.len();
    let mut data = Vec::with_capacity(rows * k);
    let mut powers = vec![Complex64::new(1.0, 0.0); k];
    for _ in 0..rows {
        data.extend_from_slice(&powers);
        for (power, ratio) in powers.iter_mut().zip(ratios) {
            *power *= ratio;
        }
    }
    ComplexMatrix::new(rows, k, data)
}

/// Initial terms by least squares against the full sample vector.
pub fn extract_initial_terms(s: &ComplexSequence, ratios: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(extract_initial_terms_with_condition(s, ratios)?.0)
}

fn extract_initial_terms_with_condition(
    s: &ComplexSequence,
    ratios: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    if s.len() < ratios.len() {
        return Err(Error::dim(format!(
            "need at least {} samples to recover {} initial terms",
            ratios.len(),
            ratios.len()
        )));
    }
    let matrix = ratio_matrix(ratios, s.len())?;
    least_squares_with_condition(&matrix, s.samples())
}

/// Diagnostics accompanying a recovered decomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct DecomposeReport {
    pub detected_k: usize,
    /// Max-norm relative residual of synthesizing the result back.
    pub round_trip_residual: f64,
    pub warnings: Vec<Warning>,
}

/// Full pipeline on the compact pattern (stride 1, offsets `0..k`).
pub fn decompose(s: &ComplexSequence) -> Result<Decomposition> {
    Ok(decompose_with_report(s)?.0)
}

pub fn decompose_with_report(s: &ComplexSequence) -> Result<(Decomposition, DecomposeReport)> {
    decompose_core(s, None)
}

/// Full pipeline on a caller-supplied unit-stride pattern (offsets may be
/// non-consecutive). Detection resizes the pattern per candidate order.
pub fn decompose_with_pattern(
    s: &ComplexSequence,
    pattern: &IndexPattern,
) -> Result<(Decomposition, DecomposeReport)> {
    if pattern.shift() != 1 {
        return Err(Error::invalid(
            "ratio extraction requires a unit index-shift stride",
        ));
    }
    decompose_core(s, Some(pattern))
}

fn decompose_core(
    s: &ComplexSequence,
    pattern_seed: Option<&IndexPattern>,
) -> Result<(Decomposition, DecomposeReport)> {
    let p = s.len();
    let k = detect_k(s, pattern_seed, NOISELESS_GEOMETRIC_TOL, default_k_max(p))?;
    let pattern = match pattern_seed {
        Some(seed) => seed.resized(k),
        None => IndexPattern::consecutive(k),
    };
    let (decomposition, mut report) = recover_with_order(s, k, &pattern)?;

    // Round-trip verification so silent numerical failures surface as errors.
    let reconstructed = synthesize(&decomposition, p)?;
    let scale = s.max_abs();
    let residual = s
        .samples()
        .iter()
        .zip(reconstructed.samples())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max)
        / scale;
    if residual > ROUND_TRIP_LIMIT {
        return Err(Error::InconsistentDecomposition {
            residual,
            limit: ROUND_TRIP_LIMIT,
        });
    }
    report.round_trip_residual = residual;
    Ok((decomposition, report))
}

/// Phase 2 with a known order: quotients at `j = 0` on the given unit-stride
/// pattern, ratio roots, then initial terms. Shared by the exact and the
/// de-noised pipelines.
pub(crate) fn recover_with_order(
    s: &ComplexSequence,
    k: usize,
    pattern: &IndexPattern,
) -> Result<(Decomposition, DecomposeReport)> {
    let quotients = volume_quotients(s, &pattern.resized(k), 0)?;
    let ratios = extract_ratios(&quotients)?;
    let mut warnings = Vec::new();
    if let Some(gap) = min_relative_gap(&ratios) {
        if gap < NEAR_DUPLICATE_REL_GAP {
            warnings.push(Warning::NearDuplicateRatios { gap });
        }
    }
    let (terms, condition) = extract_initial_terms_with_condition(s, &ratios)?;
    if condition > ILL_CONDITIONED_LIMIT {
        warnings.push(Warning::IllConditionedRatioMatrix { condition });
    }
    let components = terms
        .into_iter()
        .zip(ratios)
        .map(|(a, r)| GeometricComponent::new(a, r))
        .collect::<Result<Vec<_>>>()?;
    let decomposition = Decomposition::new(components)?;
    let report = DecomposeReport {
        detected_k: k,
        round_trip_residual: f64::NAN,
        warnings,
    };
    Ok((decomposition, report))
}

fn min_relative_gap(ratios: &[Complex64]) -> Option<f64> {
    let mut min: Option<f64> = None;
    for i in 0..ratios.len() {
        for j in (i + 1)..ratios.len() {
            let scale = ratios[i].norm().max(ratios[j].norm()).max(1e-300);
            let gap = (ratios[i] - ratios[j]).norm() / scale;
            min = Some(min.map_or(gap, |m: f64| m.min(gap)));
        }
    }
    min
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sequence::match_components;
    use rand::Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cr(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn golden_real_decomposition() -> Decomposition {
        Decomposition::new(vec![
            GeometricComponent::new(cr(2.0), cr(2.0)).unwrap(),
            GeometricComponent::new(cr(1.0), cr(3.0)).unwrap(),
            GeometricComponent::new(cr(4.0), cr(-1.0)).unwrap(),
        ])
        .unwrap()
    }

    fn golden_complex_decomposition() -> Decomposition {
        Decomposition::new(vec![
            GeometricComponent::new(c(64.0, 32.0), c(0.5, -0.5)).unwrap(),
            GeometricComponent::new(c(0.125, 0.0625), c(2.0, 1.0)).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn detection_feasibility_bounds() {
        for k_hat in 1..=6usize {
            let pattern = IndexPattern::consecutive(k_hat);
            assert!(can_detect_k(2 * k_hat + 1, &pattern, k_hat));
            assert!(!can_detect_k(2 * k_hat, &pattern, k_hat));
        }
        // Requires index 2*4 + 4 = 12, so 9 samples are not enough.
        let pattern = IndexPattern::new(2, vec![0, 1, 4]).unwrap();
        assert!(!can_detect_k(9, &pattern, 3));
        assert!(can_detect_k(13, &pattern, 3));
    }

    #[test]
    fn detects_golden_orders() {
        let s = synthesize(&golden_real_decomposition(), 9).unwrap();
        assert_eq!(detect_k(&s, None, NOISELESS_GEOMETRIC_TOL, 4).unwrap(), 3);

        let s = synthesize(&golden_complex_decomposition(), 8).unwrap();
        assert_eq!(detect_k(&s, None, NOISELESS_GEOMETRIC_TOL, 3).unwrap(), 2);

        let single = ComplexSequence::from_reals(&[1.0, 2.0, 4.0, 8.0, 16.0]).unwrap();
        assert_eq!(detect_k(&single, None, NOISELESS_GEOMETRIC_TOL, 2).unwrap(), 1);
    }

    #[test]
    fn detection_fails_on_unstructured_samples() {
        let mut rng = crate::seeding::derive_rng(31, 0);
        let samples: Vec<Complex64> = (0..9)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let s = ComplexSequence::new(samples).unwrap();
        let err = detect_k(&s, None, NOISELESS_GEOMETRIC_TOL, default_k_max(9)).unwrap_err();
        assert!(matches!(err, Error::DetectionFailure { .. }));
    }

    #[test]
    fn ratios_from_golden_quotients() {
        let s = synthesize(&golden_real_decomposition(), 9).unwrap();
        let q = volume_quotients(&s, &IndexPattern::consecutive(3), 0).unwrap();
        let mut ratios = extract_ratios(&q).unwrap();
        ratios.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        let expected = [cr(-1.0), cr(2.0), cr(3.0)];
        for (r, e) in ratios.iter().zip(expected) {
            assert!((r - e).norm() < 1e-9, "{ratios:?}");
        }
    }

    #[test]
    fn ratios_from_complex_quotients() {
        let s = synthesize(&golden_complex_decomposition(), 5).unwrap();
        let q = volume_quotients(&s, &IndexPattern::consecutive(2), 0).unwrap();
        let mut ratios = extract_ratios(&q).unwrap();
        ratios.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert!((ratios[0] - c(0.5, -0.5)).norm() < 1e-9);
        assert!((ratios[1] - c(2.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn ratios_order_one() {
        let r = c(0.3, -1.7);
        let s = synthesize(
            &Decomposition::new(vec![GeometricComponent::new(cr(2.0), r).unwrap()]).unwrap(),
            4,
        )
        .unwrap();
        let q = volume_quotients(&s, &IndexPattern::consecutive(1), 0).unwrap();
        let ratios = extract_ratios(&q).unwrap();
        assert_eq!(ratios.len(), 1);
        assert!((ratios[0] - r).norm() < 1e-12 * r.norm());
    }

    #[test]
    fn initial_terms_golden() {
        let s = synthesize(&golden_real_decomposition(), 9).unwrap();
        let a = extract_initial_terms(&s, &[cr(2.0), cr(3.0), cr(-1.0)]).unwrap();
        let expected = [cr(2.0), cr(1.0), cr(4.0)];
        for (ai, e) in a.iter().zip(expected) {
            assert!((ai - e).norm() < 1e-9, "{a:?}");
        }
    }

    #[test]
    fn initial_terms_complex_golden() {
        let s = synthesize(&golden_complex_decomposition(), 8).unwrap();
        let a = extract_initial_terms(&s, &[c(0.5, -0.5), c(2.0, 1.0)]).unwrap();
        assert!((a[0] - c(64.0, 32.0)).norm() < 1e-9 * a[0].norm());
        assert!((a[1] - c(0.125, 0.0625)).norm() < 1e-9);
    }

    #[test]
    fn initial_terms_constant_sequence() {
        let value = c(3.0, -1.0);
        let s = ComplexSequence::new(vec![value; 3]).unwrap();
        let a = extract_initial_terms(&s, &[cr(1.0)]).unwrap();
        assert!((a[0] - value).norm() < 1e-12);
    }

    #[test]
    fn decompose_real_golden() {
        let truth = golden_real_decomposition();
        let s = synthesize(&truth, 9).unwrap();
        let (d, report) = decompose_with_report(&s).unwrap();
        assert_eq!(report.detected_k, 3);
        assert!(report.warnings.is_empty());
        let m = match_components(&truth, &d).unwrap();
        assert!(m.max_ratio_error < 1e-9, "{m:?}");
        assert!(m.max_initial_term_error < 1e-9, "{m:?}");
        assert!(report.round_trip_residual < 1e-9);
    }

    #[test]
    fn decompose_complex_golden() {
        let truth = golden_complex_decomposition();
        let s = synthesize(&truth, 8).unwrap();
        let d = decompose(&s).unwrap();
        let m = match_components(&truth, &d).unwrap();
        assert!(m.max_ratio_error < 1e-9, "{m:?}");
        assert!(m.max_initial_term_error < 1e-9, "{m:?}");
    }

    #[test]
    fn decompose_with_non_consecutive_pattern_matches_compact() {
        let truth = golden_real_decomposition();
        let s = synthesize(&truth, 12).unwrap();
        let pattern = IndexPattern::new(1, vec![0, 1, 7]).unwrap();
        let (d, report) = decompose_with_pattern(&s, &pattern).unwrap();
        assert_eq!(report.detected_k, 3);
        let m = match_components(&truth, &d).unwrap();
        assert!(m.max_ratio_error < 1e-9, "{m:?}");
        assert!(m.max_initial_term_error < 1e-9, "{m:?}");
    }

    #[test]
    fn decompose_rejects_strided_pattern() {
        let s = synthesize(&golden_real_decomposition(), 12).unwrap();
        let pattern = IndexPattern::new(2, vec![0, 1, 2]).unwrap();
        assert!(decompose_with_pattern(&s, &pattern).is_err());
    }

    #[test]
    fn decompose_widely_spread_offsets() {
        // Ratio extraction works from non-consecutive offsets spread over a
        // long window, as long as the unit-stride vertices exist.
        let comps = vec![
            GeometricComponent::new(c(1.0, 0.4), Complex64::from_polar(1.0, 0.71)).unwrap(),
            GeometricComponent::new(c(-0.6, 0.9), Complex64::from_polar(1.0, 2.13)).unwrap(),
            GeometricComponent::new(c(0.2, -1.1), Complex64::from_polar(1.0, -1.02)).unwrap(),
        ];
        let truth = Decomposition::new(comps).unwrap();
        let s = synthesize(&truth, 104).unwrap();
        let pattern = IndexPattern::new(1, vec![0, 20, 100]).unwrap();
        let (d, _) = decompose_with_pattern(&s, &pattern).unwrap();
        let compact = decompose(&s).unwrap();
        let against_truth = match_components(&truth, &d).unwrap();
        assert!(against_truth.max_ratio_error < 1e-6, "{against_truth:?}");
        let against_compact = match_components(&compact, &d).unwrap();
        assert!(against_compact.max_ratio_error < 1e-6);
        assert!(against_compact.max_initial_term_error < 1e-6);
    }

    #[test]
    fn quotients_from_minimal_window_match_longer_windows() {
        // 2k consecutive samples are the most compact sampling for ratio
        // extraction; longer windows change nothing.
        let truth = golden_real_decomposition();
        let k = truth.k();
        let minimal = synthesize(&truth, 2 * k).unwrap();
        let longer = synthesize(&truth, 4 * k).unwrap();
        let pattern = IndexPattern::consecutive(k);
        let q_min = volume_quotients(&minimal, &pattern, 0).unwrap();
        let q_long = volume_quotients(&longer, &pattern, 0).unwrap();
        for (a, b) in q_min.values().iter().zip(q_long.values()) {
            assert!((a - b).norm() <= 1e-7 * b.norm().max(1.0));
        }
        let r_min = extract_ratios(&q_min).unwrap();
        let r_long = extract_ratios(&q_long).unwrap();
        for (a, b) in r_min.iter().zip(&r_long) {
            assert!((a - b).norm() <= 1e-7 * b.norm());
        }
    }

    #[test]
    fn decompose_is_scale_equivariant() {
        let truth = golden_complex_decomposition();
        let s = synthesize(&truth, 8).unwrap();
        let factor = c(-1.75, 0.4);
        let scaled = s.scale(factor).unwrap();
        let base = decompose(&s).unwrap();
        let scaled_result = decompose(&scaled).unwrap();
        let m = match_components(&base, &scaled_result).unwrap();
        assert!(m.max_ratio_error < 1e-9);
        for &(i, j) in &m.pairing {
            let expected = base.components()[i].initial_term * factor;
            let got = scaled_result.components()[j].initial_term;
            assert!((expected - got).norm() <= 1e-9 * expected.norm());
        }
    }

    #[test]
    fn random_round_trips_from_minimal_samples() {
        let mut rng = crate::seeding::derive_rng(32, 0);
        for _ in 0..60 {
            let k = rng.random_range(1..=5usize);
            let mut ratios: Vec<Complex64> = Vec::new();
            while ratios.len() < k {
                let cand = Complex64::from_polar(
                    rng.random_range(0.5..2.0),
                    rng.random_range(0.0..std::f64::consts::TAU),
                );
                if ratios.iter().all(|r| (r - cand).norm() > 0.2) {
                    ratios.push(cand);
                }
            }
            let comps: Vec<GeometricComponent> = ratios
                .iter()
                .map(|&r| {
                    GeometricComponent::new(
                        Complex64::from_polar(
                            rng.random_range(0.5..2.0),
                            rng.random_range(0.0..std::f64::consts::TAU),
                        ),
                        r,
                    )
                    .unwrap()
                })
                .collect();
            let truth = Decomposition::new(comps).unwrap();
            let s = synthesize(&truth, 2 * k + 1).unwrap();
            let d = decompose(&s).unwrap();
            assert_eq!(d.k(), k);
            let m = match_components(&truth, &d).unwrap();
            assert!(
                m.max_ratio_error <= 1e-6 && m.max_initial_term_error <= 1e-6,
                "k={k}: {m:?}"
            );
        }
    }
}
