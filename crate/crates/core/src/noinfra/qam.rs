//! Gray-coded QAM with unit average energy.
//!
//! Even bit counts give square constellations, odd bit counts rectangular
//! ones (the in-phase axis carries the extra bit). Demodulation is
//! maximum-likelihood by exhaustive nearest-point search with ties broken
//! toward the smaller index.

use num_complex::Complex64;

use crate::error::{Error, Result};

fn bits_per_symbol(modulation_order: usize) -> Result<u32> {
    if modulation_order < 2 || !modulation_order.is_power_of_two() {
        return Err(Error::invalid(format!(
            "modulation order must be a power of two >= 2, got {modulation_order}"
        )));
    }
    Ok(modulation_order.trailing_zeros())
}

fn gray_decode(mut g: usize) -> usize {
    let mut shift = 1;
    while (g >> shift) > 0 {
        g ^= g >> shift;
        shift <<= 1;
    }
    g
}

/// Pulse amplitude for Gray label `label` out of `levels` (odd integers
/// `-(levels-1), ..., levels-1`), or zero when the axis carries no bits.
fn pam_amplitude(label: usize, levels: usize) -> f64 {
    if levels <= 1 {
        return 0.0;
    }
    let position = gray_decode(label);
    (2 * position) as f64 - (levels - 1) as f64
}

/// The full constellation, indexed by symbol index.
pub fn constellation(modulation_order: usize) -> Result<Vec<Complex64>> {
    let bits = bits_per_symbol(modulation_order)?;
    let bits_i = bits.div_ceil(2);
    let bits_q = bits / 2;
    let levels_i = 1usize << bits_i;
    let levels_q = 1usize << bits_q;
    let mut points = Vec::with_capacity(modulation_order);
    for index in 0..modulation_order {
        let label_i = index >> bits_q;
        let label_q = index & (levels_q - 1);
        points.push(Complex64::new(
            pam_amplitude(label_i, levels_i),
            pam_amplitude(label_q, levels_q),
        ));
    }
    let mean_energy =
        points.iter().map(|p| p.norm_sqr()).sum::<f64>() / modulation_order as f64;
    let scale = mean_energy.sqrt().recip();
    for p in points.iter_mut() {
        *p *= scale;
    }
    Ok(points)
}

/// Constellation point for a symbol index.
pub fn qam_modulate(index: usize, modulation_order: usize) -> Result<Complex64> {
    let points = constellation(modulation_order)?;
    points
        .get(index)
        .copied()
        .ok_or_else(|| Error::invalid(format!("symbol index {index} out of range for M={modulation_order}")))
}

/// Nearest-constellation-point index; ties break toward the smaller index.
pub fn qam_demodulate(y: Complex64, modulation_order: usize) -> Result<usize> {
    let points = constellation(modulation_order)?;
    let mut best = 0usize;
    let mut best_dist = f64::INFINITY;
    for (index, point) in points.iter().enumerate() {
        let dist = (y - point).norm_sqr();
        if dist < best_dist {
            best_dist = dist;
            best = index;
        }
    }
    Ok(best)
}
