//! Beampattern and link-level figures of merit.

use rand::Rng;

use crate::ci::{decode_psk, PskSymbol};
use crate::harness::rng::complex_normal;
use crate::numerics::ComplexVector;
use crate::signal_model::linear_to_db;
use num_complex::Complex64;

/// Floor applied before taking logs so that exact zeros stay finite.
pub const DB_FLOOR: f64 = -300.0;

/// `10 log10(p / max p)`, floored at [`DB_FLOOR`]. The maximum maps to exactly 0 dB.
pub fn normalize_db(pattern: &[f64]) -> Vec<f64> {
    let peak = pattern.iter().copied().fold(0.0f64, f64::max);
    if peak <= 0.0 {
        return vec![DB_FLOOR; pattern.len()];
    }
    pattern
        .iter()
        .map(|&p| {
            if p >= peak {
                0.0
            } else {
                linear_to_db(p / peak).max(DB_FLOOR)
            }
        })
        .collect()
}

/// Index of the local maximum reached by climbing from the grid point nearest `angle`.
pub fn main_lobe_peak(angles: &[f64], db: &[f64], angle: f64) -> Option<usize> {
    if angles.is_empty() || angles.len() != db.len() {
        return None;
    }
    let mut i = nearest(angles, angle);
    loop {
        let left = i.checked_sub(1).filter(|&j| db[j] > db[i]);
        let right = Some(i + 1).filter(|&j| j < db.len() && db[j] > db[i]);
        i = match (left, right) {
            (Some(l), Some(r)) => {
                if db[l] >= db[r] {
                    l
                } else {
                    r
                }
            }
            (Some(l), None) => l,
            (None, Some(r)) => r,
            (None, None) => return Some(i),
        };
    }
}

fn nearest(angles: &[f64], angle: f64) -> usize {
    let mut best = 0;
    for (i, a) in angles.iter().enumerate() {
        if (a - angle).abs() < (angles[best] - angle).abs() {
            best = i;
        }
    }
    best
}

/// Extent `[lo, hi]` of the lobe around `peak`, bounded by the first local minima.
fn lobe_extent(db: &[f64], peak: usize) -> (usize, usize) {
    let mut lo = peak;
    while lo > 0 && db[lo - 1] <= db[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < db.len() && db[hi + 1] <= db[hi] {
        hi += 1;
    }
    (lo, hi)
}

/// Width in degrees of the lobe around `angle` at 3 dB below its peak, with
/// linear interpolation between grid points. `None` if a side never drops 3 dB.
pub fn width_3db(angles: &[f64], db: &[f64], angle: f64) -> Option<f64> {
    let peak = main_lobe_peak(angles, db, angle)?;
    let level = db[peak] - 3.0;
    let cross = |i: usize, j: usize| {
        let t = (level - db[i]) / (db[j] - db[i]);
        angles[i] + t * (angles[j] - angles[i])
    };
    let left = (1..=peak).rev().find(|&i| db[i - 1] < level).map(|i| cross(i, i - 1))?;
    let right = (peak..db.len() - 1)
        .find(|&i| db[i + 1] < level)
        .map(|i| cross(i, i + 1))?;
    Some(right - left)
}

/// Peak-to-sidelobe ratio in dB: main-lobe peak over the highest point outside
/// the main lobe. `None` if the main lobe covers the whole grid.
pub fn pslr_db(angles: &[f64], db: &[f64], angle: f64) -> Option<f64> {
    let peak = main_lobe_peak(angles, db, angle)?;
    let (lo, hi) = lobe_extent(db, peak);
    let side = db[..lo]
        .iter()
        .chain(&db[hi + 1..])
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    side.is_finite().then(|| db[peak] - side)
}

/// Symbol errors of `y + n`, `n ~ CN(0, noise_var)`, over `trials` realizations.
pub fn count_symbol_errors<R: Rng + ?Sized>(
    rng: &mut R,
    y: Complex64,
    sent: &PskSymbol,
    noise_var: f64,
    trials: usize,
) -> u64 {
    (0..trials)
        .filter(|_| {
            let r = y + complex_normal(rng, noise_var);
            decode_psk(r, sent.order).is_none_or(|d| d.index != sent.index)
        })
        .count() as u64
}

/// `a_t(theta)^T x`: what a single-antenna receiver in direction `theta` observes.
pub fn eavesdropper_observation(a_t: &ComplexVector, x: &ComplexVector) -> Complex64 {
    a_t.iter().zip(x.iter()).map(|(a, v)| a * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::rng::{unit_rng, StreamKind};
    use crate::signal_model::{steering_vector, transmit_beampattern, Scenario};
    use proptest::prelude::*;

    fn grid() -> Vec<f64> {
        (0..=360).map(|i| -90.0 + 0.5 * i as f64).collect()
    }

    fn uniform_pattern(n: usize) -> Vec<f64> {
        let sc = Scenario::standard().with_arrays(n, n);
        let x = steering_vector(n, 0.0).map(|v| v.conj());
        let angles: Vec<f64> = grid().iter().map(|d| d.to_radians()).collect();
        normalize_db(&transmit_beampattern(&sc, &[x], &angles).unwrap())
    }

    #[test]
    fn uniform_array_width_matches_closed_form() {
        // Half-power width of an N-element half-wavelength ULA at broadside is
        // about 2 asin(0.443 * 2 / N), from sin(N u) / (N sin u) = 1/sqrt(2).
        for n in [8usize, 16] {
            let db = uniform_pattern(n);
            let w = width_3db(&grid(), &db, 0.0).unwrap();
            let want = 2.0 * (0.8859 / n as f64).asin().to_degrees();
            assert!((w - want).abs() < 0.1, "n={n}: {w} vs {want}");
        }
        let w8 = width_3db(&grid(), &uniform_pattern(8), 0.0).unwrap();
        let w16 = width_3db(&grid(), &uniform_pattern(16), 0.0).unwrap();
        assert!(w16 < w8);
    }

    #[test]
    fn uniform_array_pslr_is_13_db() {
        // First sidelobe of a uniformly weighted aperture: about -13.3 dB for large N.
        let p = pslr_db(&grid(), &uniform_pattern(16), 0.0).unwrap();
        assert!((p - 13.1).abs() < 0.4, "{p}");
    }

    #[test]
    fn normalization_peak_is_exactly_zero() {
        let db = normalize_db(&[1.0, 4.0, 0.0, 2.0]);
        assert_eq!(db[1], 0.0);
        assert_eq!(db[2], DB_FLOOR);
        assert!((db[0] - linear_to_db(0.25)).abs() < 1e-12);
        assert!(normalize_db(&[0.0, 0.0]).iter().all(|&v| v == DB_FLOOR));
    }

    #[test]
    fn edge_cases() {
        let angles = [0.0, 1.0, 2.0];
        assert_eq!(main_lobe_peak(&angles, &[0.0, -1.0, -2.0], 2.0), Some(0));
        assert!(width_3db(&angles, &[0.0, -1.0, -2.0], 0.0).is_none());
        assert!(pslr_db(&angles, &[-1.0, 0.0, -1.0], 1.0).is_none());
        assert!(main_lobe_peak(&[], &[], 0.0).is_none());
    }

    #[test]
    fn noiseless_observation_never_errs() {
        let mut rng = unit_rng(0, StreamKind::Noise, 0, 0, 0);
        let s = PskSymbol::new(4, 2).unwrap();
        assert_eq!(count_symbol_errors(&mut rng, s.value * 3.0, &s, 0.0, 1000), 0);
    }

    #[test]
    fn ser_matches_q_function() {
        // BPSK at Es/N0 = 4: SER = Q(sqrt(2 * 4)) = 2.339e-3.
        let mut rng = unit_rng(1, StreamKind::Noise, 0, 0, 0);
        let s = PskSymbol::new(2, 1).unwrap();
        let n = 1_000_000;
        let ser = count_symbol_errors(&mut rng, s.value * 2.0, &s, 1.0, n) as f64 / n as f64;
        assert!((ser - 2.339e-3).abs() < 2e-4, "{ser}");
    }

    proptest! {
        #[test]
        fn normalized_max_is_zero(p in proptest::collection::vec(0.0f64..1e6, 1..50)) {
            let db = normalize_db(&p);
            let m = db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(m == 0.0 || p.iter().all(|&v| v == 0.0));
            prop_assert!(db.iter().all(|&v| v <= 0.0));
        }
    }
}
