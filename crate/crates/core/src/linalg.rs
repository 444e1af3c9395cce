//! Self-contained dense complex linear algebra.
//!
//! Everything in this crate works on small matrices (simplex vertex matrices
//! up to ~10x11, Hankel matrices up to ~16x16, companion matrices up to
//! ~10x10), so the kernels favor robustness and determinism over asymptotic
//! speed: pivoted elimination with log-magnitude accumulation for
//! determinants, one-sided Jacobi for the SVD, and shifted Hessenberg QR for
//! companion-matrix eigenvalues.
//!
//! All operations are pure: inputs are immutable and results are new values.

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative singular-value cutoff for the pseudo-inverse. Vandermonde systems
/// built from recovered ratios can be very ill-conditioned; singular values
/// below `cutoff * sigma_max` are treated as zero.
pub const PSEUDO_INVERSE_CUTOFF: f64 = 1e-12;

fn finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

// ---------------------------------------------------------------------------
// Matrix type
// ---------------------------------------------------------------------------

/// Dense complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major data. Requires `rows, cols >= 1`, a matching
    /// entry count, and finite entries.
    pub fn new(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!(
                "matrix dimensions must be at least 1x1, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::dim(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                data.len()
            )));
        }
        if !data.iter().copied().all(finite) {
            return Err(Error::non_finite("matrix entry"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Build from a generator over `(row, col)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self::new(rows, cols, data)
    }

    /// Build with the given vectors as columns; all columns must share a length.
    pub fn from_columns(columns: &[Vec<Complex64>]) -> Result<Self> {
        if columns.is_empty() || columns[0].is_empty() {
            return Err(Error::invalid("from_columns requires at least one non-empty column"));
        }
        let rows = columns[0].len();
        if columns.iter().any(|c| c.len() != rows) {
            return Err(Error::dim("columns have differing lengths"));
        }
        Self::from_fn(rows, columns.len(), |r, c| columns[c][r])
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![ZERO; n * n];
        for i in 0..n {
            data[i * n + i] = ONE;
        }
        Self { rows: n, cols: n, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.cols + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn conjugate_transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c).conj());
            }
        }
        Self { rows: self.cols, cols: self.rows, data }
    }

    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dim(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut data = vec![ZERO; self.rows * other.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == ZERO {
                    continue;
                }
                for c in 0..other.cols {
                    data[r * other.cols + c] += a * other.get(k, c);
                }
            }
        }
        Ok(Self { rows: self.rows, cols: other.cols, data })
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::dim(format!(
                "matrix has {} columns but vector has length {}",
                self.cols,
                x.len()
            )));
        }
        let mut y = vec![ZERO; self.rows];
        for r in 0..self.rows {
            let mut acc = ZERO;
            for c in 0..self.cols {
                acc += self.get(r, c) * x[c];
            }
            y[r] = acc;
        }
        Ok(y)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::dim("matrix subtraction shape mismatch"));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

// ---------------------------------------------------------------------------
// Determinant
// ---------------------------------------------------------------------------

/// Determinant via pivoted elimination.
///
/// The magnitude is accumulated as a sum of pivot log-magnitudes and the
/// unit phase is tracked separately, so determinants of matrices whose
/// entries span many orders of magnitude (geometric growth with `|r| > 1`)
/// do not overflow intermediate products.
pub fn determinant(m: &ComplexMatrix) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NotSquare { rows: m.rows, cols: m.cols });
    }
    let n = m.rows;
    let mut a = m.data.clone();
    let mut log_mag = 0.0_f64;
    let mut phase = ONE;

    for col in 0..n {
        // Partial pivot on modulus.
        let mut pivot_row = col;
        let mut pivot_mag = a[col * n + col].norm();
        for r in (col + 1)..n {
            let mag = a[r * n + col].norm();
            if mag > pivot_mag {
                pivot_mag = mag;
                pivot_row = r;
            }
        }
        if pivot_mag == 0.0 {
            return Ok(ZERO);
        }
        if pivot_row != col {
            for c in 0..n {
                a.swap(col * n + c, pivot_row * n + c);
            }
            phase = -phase;
        }
        let pivot = a[col * n + col];
        log_mag += pivot_mag.ln();
        phase *= pivot / pivot_mag;
        for r in (col + 1)..n {
            let factor = a[r * n + col] / pivot;
            if factor == ZERO {
                continue;
            }
            for c in (col + 1)..n {
                let value = a[col * n + c];
                a[r * n + c] -= factor * value;
            }
        }
    }
    Ok(phase * log_mag.exp())
}

// ---------------------------------------------------------------------------
// Singular value decomposition (one-sided Jacobi)
// ---------------------------------------------------------------------------

/// Thin SVD: `a = u * diag(sigma) * v^H` with orthonormal columns in `u`
/// (rows x q) and `v` (cols x q), `q = min(rows, cols)`, and `sigma`
/// non-negative in descending order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub sigma: Vec<f64>,
    pub v: ComplexMatrix,
}

impl Svd {
    /// Reconstruct `u * diag(sigma) * v^H` using the first `k` triplets.
    pub fn reconstruct(&self, k: usize) -> ComplexMatrix {
        let rows = self.u.rows;
        let cols = self.v.rows;
        let mut data = vec![ZERO; rows * cols];
        for j in 0..k.min(self.sigma.len()) {
            let s = self.sigma[j];
            if s == 0.0 {
                continue;
            }
            for r in 0..rows {
                let us = self.u.get(r, j) * s;
                for c in 0..cols {
                    data[r * cols + c] += us * self.v.get(c, j).conj();
                }
            }
        }
        ComplexMatrix { rows, cols, data }
    }
}

pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    if m.rows >= m.cols {
        svd_tall(m)
    } else {
        // svd(a^H) = (u, s, v)  =>  a = v * diag(s) * u^H
        let t = svd_tall(&m.conjugate_transpose())?;
        Ok(Svd { u: t.v, sigma: t.sigma, v: t.u })
    }
}

/// One-sided Jacobi on the columns of a tall matrix (rows >= cols).
fn svd_tall(m: &ComplexMatrix) -> Result<Svd> {
    let rows = m.rows;
    let cols = m.cols;
    let mut b: Vec<Vec<Complex64>> = (0..cols).map(|c| m.column(c)).collect();
    let mut v: Vec<Vec<Complex64>> = (0..cols)
        .map(|c| {
            let mut e = vec![ZERO; cols];
            e[c] = ONE;
            e
        })
        .collect();

    let tol = 1e-14_f64;
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let mut alpha = 0.0_f64;
                let mut beta = 0.0_f64;
                let mut gamma = ZERO;
                for r in 0..rows {
                    alpha += b[p][r].norm_sqr();
                    beta += b[q][r].norm_sqr();
                    gamma += b[p][r].conj() * b[q][r];
                }
                let off = gamma.norm();
                if off <= tol * (alpha * beta).sqrt() || off == 0.0 {
                    continue;
                }
                rotated = true;
                // Absorb the phase of the inner product, then a real Jacobi
                // rotation annihilates it.
                let phase = gamma / off;
                let tau = (beta - alpha) / (2.0 * off);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let sp = s * phase.conj(); // multiplies column q into p
                let sq = s * phase; // multiplies column p into q
                for r in 0..rows {
                    let bp = b[p][r];
                    let bq = b[q][r];
                    b[p][r] = c * bp - sp * bq;
                    b[q][r] = sq * bp + c * bq;
                }
                for r in 0..cols {
                    let vp = v[p][r];
                    let vq = v[q][r];
                    v[p][r] = c * vp - sp * vq;
                    v[q][r] = sq * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let mut order: Vec<usize> = (0..cols).collect();
    let norms: Vec<f64> = b.iter().map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap());

    let mut u_cols: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    let mut sigma = Vec::with_capacity(cols);
    let mut v_cols: Vec<Vec<Complex64>> = Vec::with_capacity(cols);
    for &j in &order {
        sigma.push(norms[j]);
        v_cols.push(v[j].clone());
        if norms[j] > 0.0 {
            u_cols.push(b[j].iter().map(|z| z / norms[j]).collect());
        } else {
            u_cols.push(vec![ZERO; rows]); // completed below
        }
    }
    complete_orthonormal(&mut u_cols, rows);

    Ok(Svd {
        u: ComplexMatrix::from_fn(rows, cols, |r, c| u_cols[c][r])?,
        sigma,
        v: ComplexMatrix::from_fn(cols, cols, |r, c| v_cols[c][r])?,
    })
}

/// Replace all-zero columns with unit vectors orthogonal to the rest.
fn complete_orthonormal(cols: &mut [Vec<Complex64>], rows: usize) {
    for j in 0..cols.len() {
        if cols[j].iter().any(|z| *z != ZERO) {
            continue;
        }
        'basis: for e in 0..rows {
            let mut candidate = vec![ZERO; rows];
            candidate[e] = ONE;
            for other in cols.iter() {
                let dot: Complex64 = other.iter().zip(&candidate).map(|(a, b)| a.conj() * b).sum();
                for (c, o) in candidate.iter_mut().zip(other) {
                    *c -= dot * o;
                }
            }
            let norm = candidate.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm > 1e-6 {
                for c in candidate.iter_mut() {
                    *c /= norm;
                }
                cols[j] = candidate;
                break 'basis;
            }
        }
    }
}

/// Best rank-`k` approximation (keep the `k` largest singular triplets).
pub fn rank_truncate(m: &ComplexMatrix, k: usize) -> Result<ComplexMatrix> {
    let q = m.rows.min(m.cols);
    if k == 0 || k > q {
        return Err(Error::invalid(format!(
            "rank {k} out of range for a {}x{} matrix (must be in 1..={q})",
            m.rows, m.cols
        )));
    }
    Ok(svd(m)?.reconstruct(k))
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

/// Minimum-norm least-squares solution of `a x = b` via the SVD
/// pseudo-inverse with relative cutoff [`PSEUDO_INVERSE_CUTOFF`].
pub fn least_squares(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    Ok(least_squares_with_condition(a, b)?.0)
}

/// As [`least_squares`], also returning the effective condition number
/// `sigma_max / sigma_min_used` (infinite if everything was cut off).
pub fn least_squares_with_condition(
    a: &ComplexMatrix,
    b: &[Complex64],
) -> Result<(Vec<Complex64>, f64)> {
    if a.rows < a.cols {
        return Err(Error::dim(format!(
            "least squares requires rows >= cols, got {}x{}",
            a.rows, a.cols
        )));
    }
    if b.len() != a.rows {
        return Err(Error::dim(format!(
            "matrix has {} rows but right-hand side has length {}",
            a.rows,
            b.len()
        )));
    }
    if !b.iter().copied().all(finite) {
        return Err(Error::non_finite("right-hand side entry"));
    }
    let dec = svd(a)?;
    let sigma_max = dec.sigma.first().copied().unwrap_or(0.0);
    let cutoff = PSEUDO_INVERSE_CUTOFF * sigma_max;
    let mut x = vec![ZERO; a.cols];
    let mut sigma_min_used = f64::INFINITY;
    for (j, &s) in dec.sigma.iter().enumerate() {
        if s <= cutoff || s == 0.0 {
            continue;
        }
        sigma_min_used = sigma_min_used.min(s);
        let mut coeff = ZERO;
        for r in 0..a.rows {
            coeff += dec.u.get(r, j).conj() * b[r];
        }
        coeff /= s;
        for c in 0..a.cols {
            x[c] += coeff * dec.v.get(c, j);
        }
    }
    let condition = if sigma_min_used.is_finite() && sigma_min_used > 0.0 {
        sigma_max / sigma_min_used
    } else {
        f64::INFINITY
    };
    Ok((x, condition))
}

// ---------------------------------------------------------------------------
// Polynomial roots (companion matrix + Hessenberg QR + Newton polish)
// ---------------------------------------------------------------------------

/// All roots (with multiplicity) of a polynomial given by degree-descending
/// coefficients. The leading coefficient must be non-zero and the degree at
/// least one.
pub fn polynomial_roots(coefficients: &[Complex64]) -> Result<Vec<Complex64>> {
    if coefficients.len() < 2 {
        return Err(Error::invalid(
            "polynomial must have degree at least 1 (need at least two coefficients)",
        ));
    }
    if !coefficients.iter().copied().all(finite) {
        return Err(Error::non_finite("polynomial coefficient"));
    }
    let degree = coefficients.len() - 1;
    let lead = coefficients[0];
    if lead == ZERO {
        return Err(Error::ZeroLeadingCoefficient { degree });
    }

    let monic: Vec<Complex64> = coefficients.iter().map(|c| c / lead).collect();
    let mut roots = if degree == 1 {
        vec![-monic[1]]
    } else {
        let mut h = vec![ZERO; degree * degree];
        for i in 1..degree {
            h[i * degree + (i - 1)] = ONE;
        }
        for i in 0..degree {
            // last column holds -a_i where a_i is the coefficient of x^i
            h[i * degree + (degree - 1)] = -monic[degree - i];
        }
        hessenberg_eigenvalues(&mut h, degree)?
    };

    for root in roots.iter_mut() {
        newton_polish(coefficients, root);
    }

    let max_coeff = coefficients.iter().map(|c| c.norm()).fold(0.0, f64::max);
    for root in &roots {
        let residual = horner(coefficients, *root).norm();
        let tolerance = 1e-8 * max_coeff * root.norm().max(1.0).powi(degree as i32);
        if residual > tolerance {
            return Err(Error::RootResidual { residual, tolerance });
        }
    }
    Ok(roots)
}

fn horner(coefficients: &[Complex64], x: Complex64) -> Complex64 {
    coefficients.iter().fold(ZERO, |acc, &c| acc * x + c)
}

fn horner_derivative(coefficients: &[Complex64], x: Complex64) -> Complex64 {
    let degree = coefficients.len() - 1;
    coefficients[..degree]
        .iter()
        .enumerate()
        .fold(ZERO, |acc, (i, &c)| acc * x + c * (degree - i) as f64)
}

fn newton_polish(coefficients: &[Complex64], root: &mut Complex64) {
    for _ in 0..3 {
        let p = horner(coefficients, *root);
        let dp = horner_derivative(coefficients, *root);
        if dp.norm() < 1e-300 {
            return;
        }
        let step = p / dp;
        if !finite(step) {
            return;
        }
        *root -= step;
    }
}

/// Complex Givens rotation: returns `(c, s)` with real `c >= 0` such that
/// `[c, s; -conj(s), c] * [f; g] = [r; 0]`.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO);
    }
    if f == ZERO {
        return (0.0, g.conj() / g.norm());
    }
    let fmag = f.norm();
    let d = (fmag * fmag + g.norm_sqr()).sqrt();
    (fmag / d, (f / fmag) * g.conj() / d)
}

/// Eigenvalues of a complex upper Hessenberg matrix (row-major, n x n) via
/// explicitly shifted QR with Wilkinson shifts.
fn hessenberg_eigenvalues(h: &mut [Complex64], n: usize) -> Result<Vec<Complex64>> {
    let scale = h.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1e-300);
    let mut eigenvalues = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut stalled = 0usize;
    let mut total = 0usize;
    let max_total = 400 * n;

    loop {
        if hi == 0 {
            eigenvalues.push(h[0]);
            break;
        }
        // Deflation scan from the bottom of the active block.
        let mut lo = hi;
        while lo > 0 {
            let sub = h[lo * n + lo - 1].norm();
            let local = h[(lo - 1) * n + (lo - 1)].norm() + h[lo * n + lo].norm();
            let tol = f64::EPSILON * if local > 0.0 { local } else { scale };
            if sub <= tol {
                h[lo * n + lo - 1] = ZERO;
                break;
            }
            lo -= 1;
        }

        if lo == hi {
            eigenvalues.push(h[hi * n + hi]);
            hi -= 1;
            stalled = 0;
            continue;
        }
        if lo + 1 == hi {
            let (l1, l2) = eig2(
                h[lo * n + lo],
                h[lo * n + hi],
                h[hi * n + lo],
                h[hi * n + hi],
            );
            eigenvalues.push(l1);
            eigenvalues.push(l2);
            stalled = 0;
            if lo == 0 {
                break;
            }
            hi = lo - 1;
            continue;
        }

        total += 1;
        stalled += 1;
        if total > max_total {
            return Err(Error::invalid(
                "eigenvalue iteration did not converge (companion matrix QR)",
            ));
        }

        let shift = if stalled % 12 == 0 {
            // Exceptional shift to break rare cycling.
            h[hi * n + hi] + Complex64::new(0.75 * h[hi * n + hi - 1].norm(), 0.0)
        } else {
            let (l1, l2) = eig2(
                h[(hi - 1) * n + (hi - 1)],
                h[(hi - 1) * n + hi],
                h[hi * n + (hi - 1)],
                h[hi * n + hi],
            );
            let d = h[hi * n + hi];
            if (l1 - d).norm() <= (l2 - d).norm() {
                l1
            } else {
                l2
            }
        };

        // Explicit QR step on the active block [lo..=hi].
        for i in lo..=hi {
            h[i * n + i] -= shift;
        }
        let mut rotations = Vec::with_capacity(hi - lo);
        for i in lo..hi {
            let (c, s) = givens(h[i * n + i], h[(i + 1) * n + i]);
            rotations.push((c, s));
            for col in i..=hi {
                let a = h[i * n + col];
                let b = h[(i + 1) * n + col];
                h[i * n + col] = c * a + s * b;
                h[(i + 1) * n + col] = -s.conj() * a + c * b;
            }
        }
        for (idx, &(c, s)) in rotations.iter().enumerate() {
            let i = lo + idx;
            for row in lo..=(i + 1).min(hi) {
                let a = h[row * n + i];
                let b = h[row * n + i + 1];
                h[row * n + i] = c * a + s.conj() * b;
                h[row * n + i + 1] = -s * a + c * b;
            }
        }
        for i in lo..=hi {
            h[i * n + i] += shift;
        }
    }
    Ok(eigenvalues)
}

/// Eigenvalues of `[[a, b], [c, d]]`.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let mean = (a + d) * 0.5;
    let disc = ((a - d) * (a - d) * 0.25 + b * c).sqrt();
    let l1 = mean + disc;
    let l2 = mean - disc;
    // Recompute the smaller root from the product when possible.
    let det = a * d - b * c;
    if l1.norm() > l2.norm() && l1.norm() > 0.0 {
        (l1, det / l1)
    } else if l2.norm() > 0.0 {
        (det / l2, l2)
    } else {
        (l1, l2)
    }
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------
