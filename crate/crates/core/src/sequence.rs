//! Core domain types: complex sample sequences, geometric components, index
//! patterns, and synthesis of superpositions.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default absolute tolerance below which two common ratios are considered
/// identical. The decomposition theory assumes non-identical ratios; equal
/// ratios make the component count unidentifiable.
pub const RATIO_DISTINCTNESS_TOL: f64 = 1e-9;

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

// ---------------------------------------------------------------------------
// ComplexSequence
// ---------------------------------------------------------------------------

/// A finite indexed sequence of complex samples.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSequence {
    samples: Vec<Complex64>,
}

impl ComplexSequence {
    pub fn new(samples: Vec<Complex64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("sequence must contain at least one sample"));
        }
        if !samples.iter().copied().all(finite) {
            return Err(Error::non_finite("sequence sample"));
        }
        Ok(Self { samples })
    }

    pub fn from_reals(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&re| Complex64::new(re, 0.0)).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction requires at least one sample
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn get(&self, index: usize) -> Complex64 {
        self.samples[index]
    }

    /// Largest sample modulus.
    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: Complex64) -> Result<Self> {
        Self::new(self.samples.iter().map(|z| z * factor).collect())
    }
}

// ---------------------------------------------------------------------------
// GeometricComponent / Decomposition
// ---------------------------------------------------------------------------

/// One geometric sequence: initial term and common ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricComponent {
    pub initial_term: Complex64,
    pub common_ratio: Complex64,
}

impl GeometricComponent {
    pub fn new(initial_term: Complex64, common_ratio: Complex64) -> Result<Self> {
        if !finite(initial_term) || !finite(common_ratio) {
            return Err(Error::non_finite("geometric component parameter"));
        }
        if initial_term == Complex64::new(0.0, 0.0) {
            return Err(Error::invalid("initial term must be non-zero"));
        }
        if common_ratio == Complex64::new(0.0, 0.0) {
            return Err(Error::invalid("common ratio must be non-zero"));
        }
        Ok(Self { initial_term, common_ratio })
    }
}

/// A set of geometric components with pairwise distinct common ratios; the
/// output of the decomposition pipelines.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    components: Vec<GeometricComponent>,
}

impl Decomposition {
    /// Validates non-zero parameters and pairwise ratio distinctness at
    /// [`RATIO_DISTINCTNESS_TOL`].
    pub fn new(components: Vec<GeometricComponent>) -> Result<Self> {
        Self::with_distinctness_tol(components, RATIO_DISTINCTNESS_TOL)
    }

    pub fn with_distinctness_tol(
        components: Vec<GeometricComponent>,
        tol: f64,
    ) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("decomposition requires at least one component"));
        }
        for comp in &components {
            // Re-validate in case the struct was built manually.
            GeometricComponent::new(comp.initial_term, comp.common_ratio)?;
        }
        for i in 0..components.len() {
            for j in (i + 1)..components.len() {
                let gap = (components[i].common_ratio - components[j].common_ratio).norm();
                if gap <= tol {
                    return Err(Error::invalid(format!(
                        "common ratios {} and {} coincide within {tol:.1e}",
                        components[i].common_ratio, components[j].common_ratio
                    )));
                }
            }
        }
        Ok(Self { components })
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[GeometricComponent] {
        &self.components
    }

    pub fn ratios(&self) -> Vec<Complex64> {
        self.components.iter().map(|c| c.common_ratio).collect()
    }

    pub fn initial_terms(&self) -> Vec<Complex64> {
        self.components.iter().map(|c| c.initial_term).collect()
    }
}

// ---------------------------------------------------------------------------
// IndexPattern
// ---------------------------------------------------------------------------

/// A sampling pattern: a shift stride and a strictly increasing collection of
/// base offsets. Vertex `j` of the induced search space reads the sequence at
/// indices `shift * j + offsets[m]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexPattern {
    shift: usize,
    offsets: Vec<usize>,
}

impl IndexPattern {
    pub fn new(shift: usize, offsets: Vec<usize>) -> Result<Self> {
        if shift == 0 {
            return Err(Error::invalid("index shift stride must be at least 1"));
        }
        if offsets.is_empty() {
            return Err(Error::invalid("index pattern requires at least one offset"));
        }
        if !offsets.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid("offsets must be strictly increasing"));
        }
        Ok(Self { shift, offsets })
    }

    /// The compact pattern: stride 1, offsets `0..order`.
    pub fn consecutive(order: usize) -> Self {
        Self { shift: 1, offsets: (0..order.max(1)).collect() }
    }

    pub fn shift(&self) -> usize {
        self.shift
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    /// Number of offsets, i.e. the dimension of the induced vertices.
    pub fn order(&self) -> usize {
        self.offsets.len()
    }

    pub fn max_offset(&self) -> usize {
        *self.offsets.last().expect("offsets are non-empty")
    }

    /// Reduce or extend to `order` offsets, keeping the stride. Extra offsets
    /// continue consecutively after the last one.
    pub fn resized(&self, order: usize) -> Self {
        let mut offsets: Vec<usize> = self.offsets.iter().copied().take(order).collect();
        while offsets.len() < order {
            let next = offsets.last().map_or(0, |&last| last + 1);
            offsets.push(next);
        }
        Self { shift: self.shift, offsets }
    }
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Evaluate the superposition of the components over `length` samples:
/// `sample[l] = sum_n a_n * r_n^l`.
pub fn synthesize(decomposition: &Decomposition, length: usize) -> Result<ComplexSequence> {
    if length == 0 {
        return Err(Error::invalid("synthesis length must be at least 1"));
    }
    let mut samples = vec![Complex64::new(0.0, 0.0); length];
    for component in decomposition.components() {
        let mut power = Complex64::new(1.0, 0.0);
        for sample in samples.iter_mut() {
            *sample += component.initial_term * power;
            power *= component.common_ratio;
        }
    }
    ComplexSequence::new(samples)
}

/// Normalized mean square error `|estimate - reference|^2 / |reference|^2`.
pub fn nmse(reference: &ComplexSequence, estimate: &ComplexSequence) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::dim(format!(
            "nmse requires equal lengths, got {} and {}",
            reference.len(),
            estimate.len()
        )));
    }
    let denom: f64 = reference.samples().iter().map(|z| z.norm_sqr()).sum();
    if denom == 0.0 {
        return Err(Error::invalid("nmse reference has zero norm"));
    }
    let num: f64 = reference
        .samples()
        .iter()
        .zip(estimate.samples())
        .map(|(r, e)| (e - r).norm_sqr())
        .sum();
    Ok(num / denom)
}

/// Result of matching two decompositions component-wise.
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMatch {
    /// `(truth_index, estimate_index)` pairs.
    pub pairing: Vec<(usize, usize)>,
    /// Largest relative error on the initial terms over the pairing.
    pub max_initial_term_error: f64,
    /// Largest relative error on the common ratios over the pairing.
    pub max_ratio_error: f64,
}

/// Match estimate components to truth components (decompositions are
/// order-free sets). Greedy minimum-cost pairing on `|r_truth - r_est|`.
pub fn match_components(truth: &Decomposition, estimate: &Decomposition) -> Result<ComponentMatch> {
    if truth.k() != estimate.k() {
        return Err(Error::dim(format!(
            "component count mismatch: {} vs {}",
            truth.k(),
            estimate.k()
        )));
    }
    let k = truth.k();
    let mut used_truth = vec![false; k];
    let mut used_estimate = vec![false; k];
    let mut pairing = Vec::with_capacity(k);
    for _ in 0..k {
        let mut best: Option<(usize, usize, f64)> = None;
        for t in 0..k {
            if used_truth[t] {
                continue;
            }
            for e in 0..k {
                if used_estimate[e] {
                    continue;
                }
                let cost = (truth.components()[t].common_ratio
                    - estimate.components()[e].common_ratio)
                    .norm();
                if best.map_or(true, |(_, _, c)| cost < c) {
                    best = Some((t, e, cost));
                }
            }
        }
        let (t, e, _) = best.expect("at least one unmatched pair remains");
        used_truth[t] = true;
        used_estimate[e] = true;
        pairing.push((t, e));
    }
    pairing.sort();

    let mut max_a = 0.0_f64;
    let mut max_r = 0.0_f64;
    for &(t, e) in &pairing {
        let truth_c = truth.components()[t];
        let est_c = estimate.components()[e];
        let a_err = (truth_c.initial_term - est_c.initial_term).norm()
            / truth_c.initial_term.norm();
        let r_err = (truth_c.common_ratio - est_c.common_ratio).norm()
            / truth_c.common_ratio.norm();
        max_a = max_a.max(a_err);
        max_r = max_r.max(r_err);
    }
    Ok(ComponentMatch { pairing, max_initial_term_error: max_a, max_ratio_error: max_r })
}
