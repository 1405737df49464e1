use std::f64::consts::PI;

use super::ShVector;

/// Hann-style per-band weight `½(1 + cos(πl/N))`; `w_0 = 1`, `0 < w_l ≤ 1`
/// for `l < N`.
pub fn hann_weight(l: usize, bands: usize) -> f64 {
    0.5 * (1.0 + (PI * l as f64 / bands as f64).cos())
}

/// Attenuates every band of `v` by its Hann weight to suppress ringing.
pub fn window_coeffs(v: &ShVector) -> ShVector {
    let bands = v.bands();
    let mut out = v.clone();
    for l in 0..bands {
        let w = hann_weight(l, bands);
        for m in -(l as i64)..=(l as i64) {
            out.set(l, m, v.get(l, m) * w);
        }
    }
    out
}
