//! Simplex transforms of a sample sequence.
//!
//! A sampling pattern turns the sequence into vertices of a virtual
//! `order`-dimensional space. Simplexes spanned by the origin and consecutive
//! vertices ("basic" simplexes) have volumes that form a geometric sequence
//! exactly when `order` equals the number of superposed components; gluing two
//! consecutive basic simplexes yields a union polyhedron whose combinatorial
//! sub-simplexes have volume quotients equal to the elementary symmetric
//! polynomials of the common ratios.
//!
//! Volumes are signed: `det([v_0, ..., v_{order-1}]) / order!` with vertices
//! as matrix columns.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{determinant, ComplexMatrix};
use crate::sequence::{ComplexSequence, IndexPattern};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Volumes whose magnitude falls below `ZERO_VOLUME_REL * G^order`, with `G`
/// the largest used sample modulus, are treated as zero. Volumes scale as
/// products of `order` sample magnitudes, so the threshold is scale-free.
pub const ZERO_VOLUME_REL: f64 = 1e-10;

/// Zero-volume threshold for simplexes of the given order built from samples
/// with maximum modulus `max_abs_sample`.
pub fn zero_volume_threshold(max_abs_sample: f64, order: usize) -> f64 {
    ZERO_VOLUME_REL * max_abs_sample.powi(order as i32)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

// ---------------------------------------------------------------------------
// Search space
// ---------------------------------------------------------------------------

/// Vertices spawned from a sequence by successive index-shifting of a base
/// offset pattern: vertex `j` has coordinates
/// `s[shift * j + offsets[0]], ..., s[shift * j + offsets[order-1]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchSpace {
    pattern: IndexPattern,
    vertices: Vec<Vec<Complex64>>,
}

impl SearchSpace {
    pub fn pattern(&self) -> &IndexPattern {
        &self.pattern
    }

    pub fn vertices(&self) -> &[Vec<Complex64>] {
        &self.vertices
    }

    pub fn cardinality(&self) -> usize {
        self.vertices.len()
    }
}

/// Largest sample index read by vertex `j` of the pattern.
fn last_index(pattern: &IndexPattern, j: usize) -> usize {
    pattern.shift() * j + pattern.max_offset()
}

/// Build the first `count` vertices of the search space.
pub fn build_search_space(
    s: &ComplexSequence,
    pattern: &IndexPattern,
    count: usize,
) -> Result<SearchSpace> {
    if count == 0 {
        return Err(Error::invalid("search space requires at least one vertex"));
    }
    let required = last_index(pattern, count - 1);
    if required >= s.len() {
        return Err(Error::InsufficientSamples {
            required_index: required,
            available: s.len(),
        });
    }
    let vertices = (0..count)
        .map(|j| {
            pattern
                .offsets()
                .iter()
                .map(|&offset| s.get(pattern.shift() * j + offset))
                .collect()
        })
        .collect();
    Ok(SearchSpace { pattern: pattern.clone(), vertices })
}

// ---------------------------------------------------------------------------
// Basic simplex volume series
// ---------------------------------------------------------------------------

/// Signed volumes of the series of basic simplexes.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeSeries {
    volumes: Vec<Complex64>,
}

impl VolumeSeries {
    pub fn volumes(&self) -> &[Complex64] {
        &self.volumes
    }

    pub fn len(&self) -> usize {
        self.volumes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.volumes.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.volumes.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Volumes of the basic simplexes over a search space of `vertex_count`
/// vertices: volume `j` spans vertices `j..j + order - 1` plus the origin.
/// The series is empty when the search space holds fewer than `order`
/// vertices.
pub fn basic_volume_series(
    s: &ComplexSequence,
    pattern: &IndexPattern,
    vertex_count: usize,
) -> Result<VolumeSeries> {
    let space = build_search_space(s, pattern, vertex_count)?;
    let order = pattern.order();
    if space.cardinality() < order {
        return Ok(VolumeSeries { volumes: Vec::new() });
    }
    let k_fact = factorial(order);
    let mut volumes = Vec::with_capacity(space.cardinality() - order + 1);
    for j in 0..=(space.cardinality() - order) {
        let m = ComplexMatrix::from_columns(&space.vertices()[j..j + order])?;
        volumes.push(determinant(&m)? / k_fact);
    }
    Ok(VolumeSeries { volumes })
}

// ---------------------------------------------------------------------------
// Geometric-sequence test
// ---------------------------------------------------------------------------

/// Decide whether `values` form a non-zero geometric sequence: every entry
/// must exceed a relative zero screen and all consecutive-term ratios must
/// agree pairwise within relative tolerance `tol`. Returns the mean ratio on
/// success. Requires at least three values.
pub fn is_geometric(values: &[Complex64], tol: f64) -> Result<(bool, Option<Complex64>)> {
    if values.len() < 3 {
        return Err(Error::invalid(format!(
            "geometric test requires at least 3 values, got {}",
            values.len()
        )));
    }
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 || values.iter().any(|v| v.norm() <= 1e-12 * max) {
        return Ok((false, None));
    }
    let ratios: Vec<Complex64> = values.windows(2).map(|w| w[1] / w[0]).collect();
    for i in 0..ratios.len() {
        for j in (i + 1)..ratios.len() {
            let scale = ratios[i].norm().max(ratios[j].norm());
            if (ratios[i] - ratios[j]).norm() > tol * scale {
                return Ok((false, None));
            }
        }
    }
    let mean = ratios.iter().sum::<Complex64>() / ratios.len() as f64;
    Ok((true, Some(mean)))
}

// ---------------------------------------------------------------------------
// Union polyhedron and volume quotients
// ---------------------------------------------------------------------------

/// The `j`-th union polyhedron: the `order + 1` non-origin vertices of two
/// consecutive basic simplexes, as columns of an `order x (order + 1)` matrix.
pub fn union_polyhedron(
    s: &ComplexSequence,
    pattern: &IndexPattern,
    j: usize,
) -> Result<ComplexMatrix> {
    let order = pattern.order();
    let space_offset = j; // vertices j..=j+order
    let required = last_index(pattern, space_offset + order);
    if required >= s.len() {
        return Err(Error::InsufficientSamples {
            required_index: required,
            available: s.len(),
        });
    }
    ComplexMatrix::from_fn(order, order + 1, |row, col| {
        s.get(pattern.shift() * (j + col) + pattern.offsets()[row])
    })
}

/// Volume quotients of the combinatorial simplexes of a union polyhedron.
///
/// Sub-simplex `l` retains, in lexicographic order of the retained column-index
/// sets, the columns `{0..=order} \ {order - l}`; `v[l]` is its volume divided
/// by the volume of sub-simplex `0` (columns `0..order`). For a superposition
/// of `order` geometric sequences sampled with unit stride this equals
/// `{1, e_1(r), ..., e_order(r)}`, the elementary symmetric polynomials of the
/// common ratios.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumeQuotients {
    v: Vec<Complex64>,
}

impl VolumeQuotients {
    /// The quotient vector; `v[0]` is exactly one.
    pub fn values(&self) -> &[Complex64] {
        &self.v
    }

    /// Number of quotients minus one: the simplex order.
    pub fn order(&self) -> usize {
        self.v.len() - 1
    }

    /// The informative part: everything after the leading one.
    pub fn informative(&self) -> &[Complex64] {
        &self.v[1..]
    }
}

pub fn volume_quotients(
    s: &ComplexSequence,
    pattern: &IndexPattern,
    j: usize,
) -> Result<VolumeQuotients> {
    let mut scratch = Vec::new();
    let mut out = Vec::new();
    quotients_into(s, pattern, j, &mut scratch, &mut out)?;
    Ok(VolumeQuotients { v: out })
}

/// Allocation-free quotient kernel for hot scans.
///
/// All `order + 1` maximal minors of the union polyhedron matrix are obtained
/// from a single pivoted elimination: the null vector `c` of the
/// `order x (order + 1)` matrix has components `c_l = (-1)^l * minor_l`
/// (Cramer), so with the normalization `c[order] = 1` the quotients are
/// `v[l] = (-1)^l * c[order - l]`. The elimination pivots also yield the
/// reference volume magnitude for the degeneracy check, accumulated in the
/// log domain so geometric growth cannot overflow.
pub(crate) fn quotients_into(
    s: &ComplexSequence,
    pattern: &IndexPattern,
    j: usize,
    scratch: &mut Vec<Complex64>,
    out: &mut Vec<Complex64>,
) -> Result<()> {
    let k = pattern.order();
    let cols = k + 1;
    let required = last_index(pattern, j + k);
    if required >= s.len() {
        return Err(Error::InsufficientSamples {
            required_index: required,
            available: s.len(),
        });
    }

    scratch.clear();
    scratch.reserve(k * cols);
    let mut max_abs = 0.0_f64;
    for row in 0..k {
        let offset = pattern.offsets()[row];
        for col in 0..cols {
            let z = s.get(pattern.shift() * (j + col) + offset);
            max_abs = max_abs.max(z.norm());
            scratch.push(z);
        }
    }

    let degenerate = |log_mag: f64| -> Error {
        let threshold = zero_volume_threshold(max_abs, k) / factorial(k);
        Error::DegenerateSimplex {
            magnitude: log_mag.exp(),
            threshold,
        }
    };
    if max_abs == 0.0 {
        return Err(degenerate(f64::NEG_INFINITY));
    }

    // Eliminate the left k x k block, carrying the last column along.
    let m = scratch;
    let mut log_mag = 0.0_f64;
    for col in 0..k {
        let mut pivot_row = col;
        let mut pivot_mag = m[col * cols + col].norm();
        for r in (col + 1)..k {
            let mag = m[r * cols + col].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return Err(degenerate(f64::NEG_INFINITY));
        }
        if pivot_row != col {
            for c in 0..cols {
                m.swap(col * cols + c, pivot_row * cols + c);
            }
        }
        log_mag += pivot_mag.ln();
        let pivot = m[col * cols + col];
        for r in (col + 1)..k {
            let factor = m[r * cols + col] / pivot;
            if factor == ZERO {
                continue;
            }
            m[r * cols + col] = ZERO;
            for c in (col + 1)..cols {
                let v = m[col * cols + c];
                m[r * cols + c] -= factor * v;
            }
        }
    }

    // |Lambda_0| = |det(left block)| / k!; compare against the zero threshold
    // in the log domain.
    let log_lambda0 = log_mag - factorial(k).ln();
    let log_threshold = ZERO_VOLUME_REL.ln() + k as f64 * max_abs.ln() - factorial(k).ln();
    if log_lambda0 < log_threshold {
        return Err(degenerate(log_lambda0));
    }

    // Back-substitute U y = -b where b is the carried last column; the null
    // vector is (y, 1).
    out.clear();
    out.resize(cols, ZERO);
    // Use `out[0..k]` as y storage before the final reorder.
    for row in (0..k).rev() {
        let mut acc = -m[row * cols + k];
        for c in (row + 1)..k {
            let y = out[c];
            acc -= m[row * cols + c] * y;
        }
        out[row] = acc / m[row * cols + row];
    }
    out[k] = ONE;

    // v[l] = (-1)^l * c[k - l]; do the reorder in place via a reversed copy.
    out.reverse();
    for (l, value) in out.iter_mut().enumerate() {
        if l % 2 == 1 {
            *value = -*value;
        }
    }
    out[0] = ONE;
    Ok(())
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
