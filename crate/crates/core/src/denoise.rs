//! Noisy-sample pipeline: iterative rank-truncated SVD de-noising of the
//! Hankelized sequence, quotient-similarity functions, and model-order
//! estimation from noisy samples.

use std::collections::HashSet;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::decompose::{default_k_max, recover_with_order, DecomposeReport};
use crate::error::{Error, Result};
use crate::linalg::{rank_truncate, ComplexMatrix};
use crate::seeding::{derive_rng, mix};
use crate::sequence::{ComplexSequence, Decomposition, IndexPattern};
use crate::simplex::quotients_into;

/// Default number of candidate pairs fed to the similarity geometric mean.
/// The full pair count grows combinatorially with the sample count, so pair
/// sets larger than the budget are subsampled (seeded, without replacement).
pub const DEFAULT_PAIR_BUDGET: usize = 20_000;

/// Stopping criterion and iteration cap for the de-noising loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DenoiseConfig {
    /// Relative l2 change of the sequence below which iteration stops.
    pub epsilon: f64,
    /// Maximum number of iterations.
    pub max_iterations: usize,
}

impl Default for DenoiseConfig {
    fn default() -> Self {
        Self { epsilon: 1e-10, max_iterations: 30 }
    }
}

impl DenoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("denoise epsilon must be positive"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("denoise iteration cap must be at least 1"));
        }
        Ok(())
    }
}

/// Similarity function family for noisy model-order estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimilarityKind {
    /// All admissible strides; the most expensive and most reliable.
    Full,
    /// Stride fixed to one.
    Diagonal,
    /// One random candidate pair; the cheapest.
    Rapid,
}

// ---------------------------------------------------------------------------
// Hankel structure
// ---------------------------------------------------------------------------

/// Number of Hankel rows for a sequence of length `p`.
pub fn hankel_rows(p: usize) -> usize {
    (p + 1) / 2
}

/// Hankel matrix `Q[m][n] = s[m + n]` with `hankel_rows(p)` rows and
/// `p - hankel_rows(p) + 1` columns.
pub fn hankelize(s: &ComplexSequence) -> Result<ComplexMatrix> {
    let p = s.len();
    if p < 2 {
        return Err(Error::invalid("hankelize requires at least 2 samples"));
    }
    let rows = hankel_rows(p);
    let cols = p - rows + 1;
    ComplexMatrix::from_fn(rows, cols, |m, n| s.get(m + n))
}

/// Inverse of [`hankelize`] for arbitrary (not necessarily Hankel) matrices:
/// each sample is the mean over its anti-diagonal. Computed as
/// `first + sum(entry - first) / count` so constant anti-diagonals return
/// their value exactly.
pub fn dehankelize(q: &ComplexMatrix) -> Result<ComplexSequence> {
    let rows = q.rows();
    let cols = q.cols();
    let p = rows + cols - 1;
    let mut samples = Vec::with_capacity(p);
    for l in 0..p {
        let m_lo = l.saturating_sub(cols - 1);
        let m_hi = l.min(rows - 1);
        let first = q.get(m_lo, l - m_lo);
        let mut acc = Complex64::new(0.0, 0.0);
        for m in m_lo..=m_hi {
            acc += q.get(m, l - m) - first;
        }
        samples.push(first + acc / (m_hi - m_lo + 1) as f64);
    }
    ComplexSequence::new(samples)
}

/// Output of the iterative de-noising loop.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseResult {
    pub sequence: ComplexSequence,
    pub iterations: usize,
    pub converged: bool,
}

/// Alternate between Hankel structure and rank-`k` truncation until the
/// sequence change falls below `cfg.epsilon` or the iteration cap is reached.
pub fn cadzow_denoise(
    s_w: &ComplexSequence,
    k: usize,
    cfg: &DenoiseConfig,
) -> Result<DenoiseResult> {
    cfg.validate()?;
    let p = s_w.len();
    if p < 2 {
        return Err(Error::invalid("de-noising requires at least 2 samples"));
    }
    let rows = hankel_rows(p);
    let cols = p - rows + 1;
    let max_rank = rows.min(cols);
    if k == 0 || k > max_rank {
        return Err(Error::invalid(format!(
            "rank {k} out of range for de-noising {p} samples (must be in 1..={max_rank})"
        )));
    }
    let mut current = s_w.clone();
    for iteration in 1..=cfg.max_iterations {
        let truncated = rank_truncate(&hankelize(&current)?, k)?;
        let next = dehankelize(&truncated)?;
        let scale = current.norm();
        let change = if scale == 0.0 {
            0.0
        } else {
            current
                .samples()
                .iter()
                .zip(next.samples())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt()
                / scale
        };
        current = next;
        if change < cfg.epsilon {
            return Ok(DenoiseResult { sequence: current, iterations: iteration, converged: true });
        }
    }
    Ok(DenoiseResult {
        sequence: current,
        iterations: cfg.max_iterations,
        converged: false,
    })
}

// ---------------------------------------------------------------------------
// Quotient candidates and similarity
// ---------------------------------------------------------------------------

/// Volume quotients at the given pattern and polyhedron index with the
/// leading one dropped.
pub fn informative_quotients(
    s_w: &ComplexSequence,
    pattern: &IndexPattern,
    j: usize,
) -> Result<Vec<Complex64>> {
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    quotients_into(s_w, pattern, j, &mut scratch, &mut out)?;
    out.remove(0);
    Ok(out)
}

/// Flattened informative-quotient candidates grouped by stride. Pairwise
/// distances are only meaningful within one stride group: the quotients of a
/// stride-`c` candidate are the elementary symmetric polynomials of the
/// `c`-th powers of the ratios.
struct CandidateSet {
    order: usize,
    /// `order` complex values per candidate.
    values: Vec<Complex64>,
    /// `(first_candidate, count)` per stride group.
    groups: Vec<(usize, usize)>,
}

impl CandidateSet {
    fn candidate(&self, idx: usize) -> &[Complex64] {
        &self.values[idx * self.order..(idx + 1) * self.order]
    }

    fn total_pairs(&self) -> u64 {
        self.groups
            .iter()
            .map(|&(_, m)| (m as u64) * (m as u64 - 1) / 2)
            .sum()
    }
}

fn distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Iterate the strictly increasing `k`-subsets of `0..n` in lexicographic
/// order.
fn for_each_combination(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k == 0 || k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] < n - k + i {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Admissible stride upper bound for order `k_hat` over `p` samples.
fn stride_upper_bound(p: usize, k_hat: usize) -> usize {
    (p - k_hat) / (k_hat + 1)
}

/// Enumerate all informative-quotient candidates for the given strides,
/// skipping degenerate ones (vanishing reference volume).
fn enumerate_candidates(
    s_w: &ComplexSequence,
    k_hat: usize,
    strides: &[usize],
) -> Result<CandidateSet> {
    let p = s_w.len();
    let mut values = Vec::new();
    let mut groups = Vec::new();
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    let mut offsets = vec![0usize; k_hat];
    let mut candidate_count = 0usize;
    for &stride in strides {
        if p < stride * k_hat + k_hat {
            continue;
        }
        let offset_range = p - stride * k_hat; // offsets in 0..offset_range
        let group_start = candidate_count;
        for_each_combination(offset_range, k_hat, |combo| {
            offsets.copy_from_slice(combo);
            let pattern = match IndexPattern::new(stride, offsets.clone()) {
                Ok(p) => p,
                Err(_) => return,
            };
            match quotients_into(s_w, &pattern, 0, &mut scratch, &mut out) {
                Ok(()) => {
                    values.extend_from_slice(&out[1..]);
                    candidate_count += 1;
                }
                Err(Error::DegenerateSimplex { .. }) => {}
                Err(_) => {}
            }
        });
        let group_len = candidate_count - group_start;
        if group_len > 0 {
            groups.push((group_start, group_len));
        }
    }
    Ok(CandidateSet { order: k_hat, values, groups })
}

/// Geometric mean of pairwise candidate distances.
///
/// All pairs are used when their number is within `pair_budget`; otherwise
/// `pair_budget` distinct pairs are drawn uniformly (seeded, up front,
/// single-threaded). Distances are floored at 1e-300 inside the log so one
/// coincident pair cannot collapse the product; an all-zero distance set
/// short-circuits to exactly zero.
fn pair_geometric_mean(set: &CandidateSet, pair_budget: usize, rng: &mut ChaCha8Rng) -> f64 {
    let total = set.total_pairs();
    let mut log_sum = 0.0_f64;
    let mut count = 0u64;
    let mut any_nonzero = false;
    let mut accumulate = |d: f64| {
        if d > 0.0 {
            any_nonzero = true;
        }
        log_sum += d.max(1e-300).ln();
        count += 1;
    };

    if total <= pair_budget as u64 {
        for &(start, m) in &set.groups {
            for i in 0..m {
                for j in (i + 1)..m {
                    accumulate(distance(set.candidate(start + i), set.candidate(start + j)));
                }
            }
        }
    } else {
        // Group cumulative pair counts for proportional group selection.
        let group_pairs: Vec<u64> = set
            .groups
            .iter()
            .map(|&(_, m)| (m as u64) * (m as u64 - 1) / 2)
            .collect();
        let mut chosen: HashSet<u64> = HashSet::with_capacity(pair_budget);
        let mut attempts = 0usize;
        let max_attempts = pair_budget.saturating_mul(30);
        while chosen.len() < pair_budget && attempts < max_attempts {
            attempts += 1;
            let mut ticket = rng.random_range(0..total);
            let mut group_idx = 0usize;
            while ticket >= group_pairs[group_idx] {
                ticket -= group_pairs[group_idx];
                group_idx += 1;
            }
            let (start, m) = set.groups[group_idx];
            let i = rng.random_range(0..m);
            let j = rng.random_range(0..m);
            if i == j {
                continue;
            }
            let (lo, hi) = if i < j { (i, j) } else { (j, i) };
            let key = ((start + lo) as u64) << 32 | (start + hi) as u64;
            if chosen.insert(key) {
                accumulate(distance(set.candidate(start + lo), set.candidate(start + hi)));
            }
        }
    }

    if count == 0 || !any_nonzero {
        return 0.0;
    }
    (log_sum / count as f64).exp()
}

/// Similarity of all candidate quotient vectors at order `k_hat`: zero when
/// the order is correct and the samples are noise-free, strictly positive
/// otherwise (generically).
pub fn similarity(
    s_w: &ComplexSequence,
    k_hat: usize,
    kind: SimilarityKind,
    pair_budget: usize,
    seed: u64,
) -> Result<f64> {
    let p = s_w.len();
    if k_hat == 0 {
        return Err(Error::invalid("similarity order must be at least 1"));
    }
    if p < 2 * k_hat {
        return Err(Error::SimilarityInfeasible);
    }
    if pair_budget == 0 {
        return Err(Error::invalid("pair budget must be at least 1"));
    }
    let mut rng = derive_rng(seed, k_hat as u64);
    match kind {
        SimilarityKind::Full => {
            let upper = stride_upper_bound(p, k_hat).max(1);
            let strides: Vec<usize> = (1..=upper).collect();
            let set = enumerate_candidates(s_w, k_hat, &strides)?;
            if set.total_pairs() == 0 {
                return Err(Error::SimilarityInfeasible);
            }
            Ok(pair_geometric_mean(&set, pair_budget, &mut rng))
        }
        SimilarityKind::Diagonal => {
            let set = enumerate_candidates(s_w, k_hat, &[1])?;
            if set.total_pairs() == 0 {
                return Err(Error::SimilarityInfeasible);
            }
            Ok(pair_geometric_mean(&set, pair_budget, &mut rng))
        }
        SimilarityKind::Rapid => rapid_similarity(s_w, k_hat, &mut rng),
    }
}

/// One seeded random candidate pair at stride one.
fn rapid_similarity(s_w: &ComplexSequence, k_hat: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let p = s_w.len();
    let offset_range = p - k_hat; // stride 1
    if binomial_at_least(offset_range, k_hat, 2) < 2 {
        return Err(Error::SimilarityInfeasible);
    }
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    let mut draw = |rng: &mut ChaCha8Rng| -> Option<(Vec<usize>, Vec<Complex64>)> {
        for _ in 0..64 {
            let offsets = random_subset(offset_range, k_hat, rng);
            let pattern = IndexPattern::new(1, offsets.clone()).ok()?;
            match quotients_into(s_w, &pattern, 0, &mut scratch, &mut out) {
                Ok(()) => return Some((offsets, out[1..].to_vec())),
                Err(_) => continue,
            }
        }
        None
    };
    let Some((first_offsets, first)) = draw(rng) else {
        return Err(Error::SimilarityInfeasible);
    };
    for _ in 0..64 {
        let Some((offsets, second)) = draw(rng) else {
            return Err(Error::SimilarityInfeasible);
        };
        if offsets != first_offsets {
            return Ok(distance(&first, &second));
        }
    }
    Err(Error::SimilarityInfeasible)
}

/// `min(C(n, k), cap)` without overflow.
fn binomial_at_least(n: usize, k: usize, cap: u64) -> u64 {
    if k > n {
        return 0;
    }
    let mut result = 1u64;
    for i in 0..k {
        result = result.saturating_mul((n - i) as u64) / (i as u64 + 1);
        if result >= cap {
            return cap;
        }
    }
    result.min(cap)
}

fn random_subset(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        pool.swap(i, j);
    }
    let mut subset = pool[..k].to_vec();
    subset.sort_unstable();
    subset
}

/// Model order minimizing the similarity over `1..=k_max`; ties break toward
/// the smaller order, and orders with no feasible candidate pair are skipped.
pub fn estimate_k(
    s_w: &ComplexSequence,
    k_max: usize,
    kind: SimilarityKind,
    pair_budget: usize,
    seed: u64,
) -> Result<usize> {
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    let mut best: Option<(usize, f64)> = None;
    for k_hat in 1..=k_max {
        let value = match similarity(s_w, k_hat, kind, pair_budget, mix(seed, 0x5e71)) {
            Ok(v) => v,
            Err(Error::SimilarityInfeasible) | Err(Error::DegenerateSimplex { .. }) => continue,
            Err(e) => return Err(e),
        };
        if best.map_or(true, |(_, b)| value < b) {
            best = Some((k_hat, value));
        }
    }
    best.map(|(k, _)| k).ok_or(Error::SimilarityInfeasible)
}

// ---------------------------------------------------------------------------
// Noisy decomposition
// ---------------------------------------------------------------------------

/// Diagnostics for the noisy pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisyReport {
    pub k: usize,
    pub k_was_estimated: bool,
    pub denoise_iterations: usize,
    pub denoise_converged: bool,
    pub recovery: DecomposeReport,
}

/// Noisy pipeline: estimate the order (unless given), de-noise, then recover
/// ratios and initial terms from the de-noised sequence.
///
/// Order estimation runs on the raw noisy samples because de-noising itself
/// requires the order.
pub fn decompose_noisy(
    s_w: &ComplexSequence,
    k: Option<usize>,
    cfg: &DenoiseConfig,
    kind: SimilarityKind,
    pair_budget: usize,
    seed: u64,
) -> Result<(Decomposition, NoisyReport)> {
    let p = s_w.len();
    let (k, estimated) = match k {
        Some(k) => (k, false),
        None => {
            let k = estimate_k(s_w, default_k_max(p), kind, pair_budget, seed)?;
            if p < 2 * k + 1 {
                return Err(Error::invalid(format!(
                    "estimated order {k} needs at least {} samples, have {p}",
                    2 * k + 1
                )));
            }
            (k, true)
        }
    };
    let denoised = cadzow_denoise(s_w, k, cfg)?;
    let (decomposition, recovery) =
        recover_with_order(&denoised.sequence, k, &IndexPattern::consecutive(k))?;
    Ok((
        decomposition,
        NoisyReport {
            k,
            k_was_estimated: estimated,
            denoise_iterations: denoised.iterations,
            denoise_converged: denoised.converged,
            recovery,
        },
    ))
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decompose::decompose;
    use crate::sequence::{match_components, nmse, synthesize, Decomposition, GeometricComponent};
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cr(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn golden_real(p: usize) -> ComplexSequence {
        synthesize(&golden_real_decomposition(), p).unwrap()
    }

    fn golden_real_decomposition() -> Decomposition {
        Decomposition::new(vec![
            GeometricComponent::new(cr(2.0), cr(2.0)).unwrap(),
            GeometricComponent::new(cr(1.0), cr(3.0)).unwrap(),
            GeometricComponent::new(cr(4.0), cr(-1.0)).unwrap(),
        ])
        .unwrap()
    }

    /// Random unit-magnitude-ratio decomposition (radio-wave style), plus its
    /// noiseless synthesis and a noisy observation at the given per-component
    /// SNR.
    fn noisy_instance(
        k: usize,
        p: usize,
        snr_db: f64,
        seed: u64,
    ) -> (Decomposition, ComplexSequence, ComplexSequence) {
        let mut rng = derive_rng(seed, 100);
        let beta = 10f64.powf(snr_db / 20.0);
        let mut ratios: Vec<Complex64> = Vec::new();
        while ratios.len() < k {
            let cand = Complex64::from_polar(1.0, rng.random_range(0.3..std::f64::consts::TAU));
            if ratios.iter().all(|r| (r - cand).norm() > 0.2) {
                ratios.push(cand);
            }
        }
        let comps: Vec<GeometricComponent> = ratios
            .iter()
            .map(|&r| {
                GeometricComponent::new(
                    Complex64::from_polar(beta, rng.random_range(0.0..std::f64::consts::TAU)),
                    r,
                )
                .unwrap()
            })
            .collect();
        let truth = Decomposition::new(comps).unwrap();
        let s = synthesize(&truth, p).unwrap();
        let normal = StandardNormal;
        let noisy: Vec<Complex64> = s
            .samples()
            .iter()
            .map(|&z| {
                let re: f64 = normal.sample(&mut rng);
                let im: f64 = normal.sample(&mut rng);
                z + c(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect();
        (truth, s, ComplexSequence::new(noisy).unwrap())
    }

    #[test]
    fn hankelize_shapes_and_entries() {
        let s = ComplexSequence::from_reals(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let q = hankelize(&s).unwrap();
        assert_eq!((q.rows(), q.cols()), (3, 3));
        let expected = [[1.0, 2.0, 3.0], [2.0, 3.0, 4.0], [3.0, 4.0, 5.0]];
        for (m, row) in expected.iter().enumerate() {
            for (n, e) in row.iter().enumerate() {
                assert_eq!(q.get(m, n), cr(*e));
            }
        }

        let s30 = golden_real(30);
        let q30 = hankelize(&s30).unwrap();
        assert_eq!((q30.rows(), q30.cols()), (15, 16));

        let s2 = ComplexSequence::from_reals(&[7.0, 9.0]).unwrap();
        let q2 = hankelize(&s2).unwrap();
        assert_eq!((q2.rows(), q2.cols()), (1, 2));
    }

    #[test]
    fn dehankelize_averages_anti_diagonals() {
        let q = ComplexMatrix::new(2, 2, vec![cr(1.0), cr(3.0), cr(3.0), cr(5.0)]).unwrap();
        let s = dehankelize(&q).unwrap();
        assert_eq!(s.samples(), &[cr(1.0), cr(3.0), cr(5.0)]);

        let q = ComplexMatrix::new(2, 2, vec![cr(0.0), cr(2.0), cr(4.0), cr(6.0)]).unwrap();
        let s = dehankelize(&q).unwrap();
        assert_eq!(s.samples(), &[cr(0.0), cr(3.0), cr(6.0)]);
    }

    #[test]
    fn dehankelize_inverts_hankelize_exactly() {
        for p in 2..=12usize {
            let mut rng = derive_rng(41, p as u64);
            let samples: Vec<Complex64> = (0..p)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let s = ComplexSequence::new(samples).unwrap();
            let back = dehankelize(&hankelize(&s).unwrap()).unwrap();
            assert_eq!(s, back, "p = {p}");
        }
    }

    #[test]
    fn noiseless_sequence_is_a_fixed_point() {
        let s = golden_real(12);
        let result = cadzow_denoise(&s, 3, &DenoiseConfig::default()).unwrap();
        assert!(result.converged);
        assert_eq!(result.iterations, 1);
        assert!(nmse(&s, &result.sequence).unwrap() < 1e-18);
    }

    #[test]
    fn hankel_rank_matches_component_count() {
        let s = golden_real(13);
        let q = hankelize(&s).unwrap();
        let dec = crate::linalg::svd(&q).unwrap();
        assert!(dec.sigma[3] / dec.sigma[0] < 1e-10, "{:?}", dec.sigma);
        assert!(dec.sigma[2] / dec.sigma[0] > 1e-6);
    }

    #[test]
    fn denoise_rejects_bad_rank() {
        let s = golden_real(10); // 5x6 Hankel
        assert!(cadzow_denoise(&s, 0, &DenoiseConfig::default()).is_err());
        assert!(cadzow_denoise(&s, 6, &DenoiseConfig::default()).is_err());
    }

    #[test]
    fn denoise_improves_nmse_at_30db() {
        let trials = 500;
        let mut improved = 0usize;
        for trial in 0..trials {
            let (_, s, s_w) = noisy_instance(2, 30, 30.0, 5000 + trial);
            let result = cadzow_denoise(&s_w, 2, &DenoiseConfig::default()).unwrap();
            if nmse(&s, &result.sequence).unwrap() < nmse(&s, &s_w).unwrap() {
                improved += 1;
            }
        }
        assert!(
            improved as f64 >= 0.95 * trials as f64,
            "improved in {improved}/{trials} trials"
        );
    }

    #[test]
    fn projection_residual_is_monotone() {
        let (_, _, s_w) = noisy_instance(3, 30, 20.0, 77);
        let k = 3;
        let mut current = s_w.clone();
        let mut last_residual = f64::INFINITY;
        for _ in 0..10 {
            let q = hankelize(&current).unwrap();
            let truncated = rank_truncate(&q, k).unwrap();
            let residual = q.sub(&truncated).unwrap().frobenius_norm();
            assert!(
                residual <= last_residual + 1e-12 * residual.max(1.0),
                "residual {residual} after {last_residual}"
            );
            last_residual = residual;
            current = dehankelize(&truncated).unwrap();
        }
    }

    #[test]
    fn informative_quotients_drop_the_leading_one() {
        let s = golden_real(9);
        let iq = informative_quotients(&s, &IndexPattern::consecutive(3), 0).unwrap();
        let expected = [cr(4.0), cr(1.0), cr(-6.0)];
        for (v, e) in iq.iter().zip(expected) {
            assert!((v - e).norm() < 1e-9 * e.norm().max(1.0));
        }

        let complex = synthesize(
            &Decomposition::new(vec![
                GeometricComponent::new(c(64.0, 32.0), c(0.5, -0.5)).unwrap(),
                GeometricComponent::new(c(0.125, 0.0625), c(2.0, 1.0)).unwrap(),
            ])
            .unwrap(),
            6,
        )
        .unwrap();
        let iq = informative_quotients(&complex, &IndexPattern::consecutive(2), 0).unwrap();
        assert!((iq[0] - c(2.5, 0.5)).norm() < 1e-9);
        assert!((iq[1] - c(1.5, -0.5)).norm() < 1e-9);

        let single = ComplexSequence::from_reals(&[1.0, 2.0, 4.0]).unwrap();
        let iq = informative_quotients(&single, &IndexPattern::consecutive(1), 0).unwrap();
        assert!((iq[0] - cr(2.0)).norm() < 1e-12);
    }

    #[test]
    fn similarity_vanishes_at_the_true_order() {
        let s = golden_real(12);
        for kind in [SimilarityKind::Full, SimilarityKind::Diagonal, SimilarityKind::Rapid] {
            let value = similarity(&s, 3, kind, DEFAULT_PAIR_BUDGET, 9).unwrap();
            assert!(value.abs() < 1e-7, "{kind:?}: {value}");
        }
    }

    #[test]
    fn similarity_positive_off_order() {
        let s = golden_real(12);
        let value = similarity(&s, 2, SimilarityKind::Diagonal, DEFAULT_PAIR_BUDGET, 9).unwrap();
        assert!(value > 1e-3, "{value}");
    }

    #[test]
    fn similarity_zero_for_two_identical_candidates() {
        let s = ComplexSequence::from_reals(&[1.0, 2.0, 4.0]).unwrap();
        let value = similarity(&s, 1, SimilarityKind::Diagonal, DEFAULT_PAIR_BUDGET, 1).unwrap();
        assert_eq!(value, 0.0);
    }

    #[test]
    fn similarity_is_deterministic_per_seed() {
        let (_, _, s_w) = noisy_instance(3, 30, 25.0, 321);
        for kind in [SimilarityKind::Full, SimilarityKind::Diagonal, SimilarityKind::Rapid] {
            let a = similarity(&s_w, 3, kind, 500, 7).unwrap();
            let b = similarity(&s_w, 3, kind, 500, 7).unwrap();
            assert_eq!(a, b, "{kind:?}");
        }
    }

    #[test]
    fn estimate_k_on_noiseless_inputs() {
        let s = golden_real(12);
        for kind in [SimilarityKind::Full, SimilarityKind::Diagonal, SimilarityKind::Rapid] {
            assert_eq!(estimate_k(&s, 4, kind, DEFAULT_PAIR_BUDGET, 3).unwrap(), 3, "{kind:?}");
        }
        let single = ComplexSequence::from_reals(&[3.0, 1.5, 0.75, 0.375, 0.1875]).unwrap();
        assert_eq!(
            estimate_k(&single, 2, SimilarityKind::Diagonal, DEFAULT_PAIR_BUDGET, 3).unwrap(),
            1
        );
    }

    #[test]
    fn noisy_decompose_equals_exact_on_noiseless_input() {
        let s = golden_real(12);
        let exact = decompose(&s).unwrap();
        let (noisy, report) = decompose_noisy(
            &s,
            Some(3),
            &DenoiseConfig::default(),
            SimilarityKind::Diagonal,
            DEFAULT_PAIR_BUDGET,
            0,
        )
        .unwrap();
        assert_eq!(report.denoise_iterations, 1);
        let m = match_components(&exact, &noisy).unwrap();
        assert!(m.max_ratio_error < 1e-9);
        assert!(m.max_initial_term_error < 1e-9);
    }

    #[test]
    fn noisy_decompose_recovers_ratios_at_60db() {
        let trials = 200;
        let mut errors: Vec<f64> = Vec::with_capacity(trials as usize);
        for trial in 0..trials {
            let (truth, _, s_w) = noisy_instance(2, 30, 60.0, 9000 + trial);
            let (d, _) = decompose_noisy(
                &s_w,
                Some(2),
                &DenoiseConfig::default(),
                SimilarityKind::Diagonal,
                DEFAULT_PAIR_BUDGET,
                trial,
            )
            .unwrap();
            let m = match_components(&truth, &d).unwrap();
            errors.push(m.max_ratio_error);
        }
        errors.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errors[errors.len() / 2];
        assert!(median < 1e-3, "median ratio error {median}");
    }

    #[test]
    fn noisy_decompose_beats_raw_observation_at_30db() {
        let trials = 100;
        let mut wins = 0usize;
        let mut reconstruction_nmse: Vec<f64> = Vec::new();
        let mut observation_nmse: Vec<f64> = Vec::new();
        for trial in 0..trials {
            let (_, s, s_w) = noisy_instance(4, 30, 30.0, 40_000 + trial);
            let Ok((d, _)) = decompose_noisy(
                &s_w,
                Some(4),
                &DenoiseConfig::default(),
                SimilarityKind::Diagonal,
                DEFAULT_PAIR_BUDGET,
                trial,
            ) else {
                continue;
            };
            let rec = synthesize(&d, s.len()).unwrap();
            let rec_nmse = nmse(&s, &rec).unwrap();
            let obs_nmse = nmse(&s, &s_w).unwrap();
            reconstruction_nmse.push(rec_nmse);
            observation_nmse.push(obs_nmse);
            if rec_nmse < obs_nmse {
                wins += 1;
            }
        }
        reconstruction_nmse.sort_by(|a, b| a.partial_cmp(b).unwrap());
        observation_nmse.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median_rec = reconstruction_nmse[reconstruction_nmse.len() / 2];
        let median_obs = observation_nmse[observation_nmse.len() / 2];
        assert!(
            median_rec < median_obs,
            "median reconstruction {median_rec} vs observation {median_obs} ({wins} wins)"
        );
    }

    #[test]
    fn estimate_k_is_deterministic() {
        let (_, _, s_w) = noisy_instance(2, 30, 35.0, 1234);
        let a = estimate_k(&s_w, 4, SimilarityKind::Rapid, DEFAULT_PAIR_BUDGET, 99).unwrap();
        let b = estimate_k(&s_w, 4, SimilarityKind::Rapid, DEFAULT_PAIR_BUDGET, 99).unwrap();
        assert_eq!(a, b);
    }
}
