//! PSK symbols and constructive-interference (CI) constraints.
//!
//! With `y~_k = s_k^* h_k^H x` the noise-free received symbol rotated by
//! `arg(s_k^*)`, user `k` is served constructively when
//!
//! ```text
//! |Im y~_k| <= (Re y~_k - sqrt(sigma_k^2 Gamma_k)) tan(pi / M)
//! ```
//!
//! which keeps the symbol inside its decision sector, shifted away from both
//! boundaries. Every such point also satisfies `SNR_k >= Gamma_k`, since
//! `|y~_k| >= Re y~_k >= sqrt(sigma_k^2 Gamma_k)`. For BPSK the sector is a
//! half plane and only `Re y~_k >= sqrt(sigma_k^2 Gamma_k)` remains.
//!
//! A strict-phase design (`|arg(h^H x) - arg(s)| <= xi` together with the SNR
//! bound) is contained in this region for `xi = 0`, so it is not modeled
//! separately.

use nalgebra::DVector;
use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexVector};
use crate::signal_model::Scenario;

/// Margins at or above `-FEASIBILITY_TOL` count as feasible.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// One `M`-PSK constellation point `exp(j (2m - 1) pi / M)`, `m` in `1..=M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PskSymbol {
    pub order: usize,
    pub index: usize,
    pub value: Complex64,
}

impl PskSymbol {
    pub fn new(order: usize, index: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(DfrcError::Contract(format!(
                "PSK order {order} must be a power of two >= 2"
            )));
        }
        if index == 0 || index > order {
            return Err(DfrcError::Contract(format!("PSK index {index} outside 1..={order}")));
        }
        let phase = (2 * index - 1) as f64 * PI / order as f64;
        Ok(PskSymbol {
            order,
            index,
            value: Complex64::from_polar(1.0, phase),
        })
    }

    pub fn constellation(order: usize) -> Result<Vec<PskSymbol>> {
        (1..=order).map(|m| PskSymbol::new(order, m)).collect()
    }
}

/// Hard PSK decision. Sector `m` is `[2(m-1) pi / M, 2 m pi / M)`; `None` for `y = 0`.
pub fn decode_psk(y: Complex64, order: usize) -> Option<PskSymbol> {
    if y.norm() == 0.0 || !y.re.is_finite() || !y.im.is_finite() {
        return None;
    }
    let mut angle = y.im.atan2(y.re);
    if angle < 0.0 {
        angle += 2.0 * PI;
    }
    let width = 2.0 * PI / order as f64;
    let sector = ((angle / width).floor() as usize).min(order - 1);
    PskSymbol::new(order, sector + 1).ok()
}

/// Linear half-space `normal . xi <= offset` in stacked real coordinates
/// `xi = [Re x; Im x]`, tagged with the user it belongs to.
#[derive(Debug, Clone)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub offset: f64,
    pub user: usize,
}

impl HalfSpace {
    /// `offset - normal . xi`; non-negative inside.
    pub fn slack(&self, xi: &DVector<f64>) -> f64 {
        self.offset - self.normal.dot(xi)
    }
}

/// CI region for one channel/symbol realization plus the power ball.
#[derive(Debug, Clone)]
pub struct CiConstraintSet {
    /// `h~_k = h_k s_k`, so that `h~_k^H x = s_k^* h_k^H x`.
    pub rotated_channels: Vec<ComplexVector>,
    /// `sqrt(sigma_k^2 Gamma_k)`
    pub thresholds: Vec<f64>,
    /// `tan(pi / M)`; infinite for BPSK.
    pub tan_phi: f64,
    pub power_budget: f64,
    pub psk_order: usize,
    /// Linear SNR targets `Gamma_k`.
    pub gammas: Vec<f64>,
    pub noise_vars: Vec<f64>,
}

/// Per-user and power margins of a waveform.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    /// `(Re y~ - t) tan phi - |Im y~|` (BPSK: `Re y~ - t`).
    pub per_user_margins: Vec<f64>,
    /// `P0 - ||x||^2`
    pub power_margin: f64,
}

impl FeasibilityReport {
    pub fn min_user_margin(&self) -> f64 {
        self.per_user_margins.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

pub fn build_constraints(
    scenario: &Scenario,
    channels: &[ComplexVector],
    symbols: &[PskSymbol],
    gammas: &[f64],
) -> Result<CiConstraintSet> {
    let k = scenario.n_users();
    for (len, what) in [
        (channels.len(), "channels"),
        (symbols.len(), "symbols"),
        (gammas.len(), "SNR targets"),
    ] {
        if len != k {
            return Err(DfrcError::Dimension {
                expected: k,
                got: len,
                context: what_static(what),
            });
        }
    }
    if let Some(h) = channels.iter().find(|h| h.len() != scenario.n_tx) {
        return Err(DfrcError::Dimension {
            expected: scenario.n_tx,
            got: h.len(),
            context: "user channel length",
        });
    }
    if let Some(s) = symbols.iter().find(|s| s.order != scenario.psk_order) {
        return Err(DfrcError::Contract(format!(
            "symbol of order {} in a {}-PSK scenario",
            s.order, scenario.psk_order
        )));
    }
    if let Some(g) = gammas.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(DfrcError::Contract(format!(
            "SNR target {g} must be finite and non-negative"
        )));
    }
    let rotated_channels = channels.iter().zip(symbols).map(|(h, s)| h * s.value).collect();
    let thresholds = gammas
        .iter()
        .zip(&scenario.user_noise_vars)
        .map(|(g, v)| (v * g).sqrt())
        .collect();
    let tan_phi = if scenario.psk_order == 2 {
        f64::INFINITY
    } else {
        (PI / scenario.psk_order as f64).tan()
    };
    Ok(CiConstraintSet {
        rotated_channels,
        thresholds,
        tan_phi,
        power_budget: scenario.power_budget,
        psk_order: scenario.psk_order,
        gammas: gammas.to_vec(),
        noise_vars: scenario.user_noise_vars.clone(),
    })
}

fn what_static(what: &str) -> &'static str {
    match what {
        "channels" => "number of channels",
        "symbols" => "number of symbols",
        _ => "number of SNR targets",
    }
}

impl CiConstraintSet {
    pub fn n_users(&self) -> usize {
        self.rotated_channels.len()
    }

    /// Waveform dimension, or `None` when there are no users.
    pub fn dim(&self) -> Option<usize> {
        self.rotated_channels.first().map(|h| h.len())
    }

    pub fn is_bpsk(&self) -> bool {
        self.psk_order == 2
    }

    /// Rotated noise-free symbols `y~_k = h~_k^H x`.
    pub fn rotated_outputs(&self, x: &ComplexVector) -> Vec<Complex64> {
        self.rotated_channels.iter().map(|h| h.dotc(x)).collect()
    }

    /// The CI region as half-spaces in `[Re x; Im x]` coordinates:
    /// two per user (one for BPSK).
    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        let mut out = Vec::with_capacity(2 * self.n_users());
        for (k, (h, &t)) in self.rotated_channels.iter().zip(&self.thresholds).enumerate() {
            let n = h.len();
            // Re(h^H x) = re . xi ; Im(h^H x) = im . xi
            let re = DVector::from_fn(2 * n, |i, _| if i < n { h[i].re } else { h[i - n].im });
            let im = DVector::from_fn(2 * n, |i, _| if i < n { -h[i].im } else { h[i - n].re });
            if self.is_bpsk() {
                out.push(HalfSpace {
                    normal: -re,
                    offset: -t,
                    user: k,
                });
            } else {
                let tp = self.tan_phi;
                out.push(HalfSpace {
                    normal: &im - &re * tp,
                    offset: -t * tp,
                    user: k,
                });
                out.push(HalfSpace {
                    normal: -&im - &re * tp,
                    offset: -t * tp,
                    user: k,
                });
            }
        }
        out
    }

    /// Signed CI margin of user `k` for the rotated output `y`.
    pub fn user_margin(&self, k: usize, y: Complex64) -> f64 {
        let t = self.thresholds[k];
        if self.is_bpsk() {
            y.re - t
        } else {
            (y.re - t) * self.tan_phi - y.im.abs()
        }
    }
}

pub fn check_feasible(cs: &CiConstraintSet, x: &ComplexVector) -> FeasibilityReport {
    let per_user_margins: Vec<f64> = cs
        .rotated_outputs(x)
        .into_iter()
        .enumerate()
        .map(|(k, y)| cs.user_margin(k, y))
        .collect();
    let power_margin = cs.power_budget - x.norm_squared();
    let power_ok = power_margin >= -FEASIBILITY_TOL * cs.power_budget.max(1.0);
    let feasible = power_ok && numerics::all_finite_vec(x) && per_user_margins.iter().all(|&m| m >= -FEASIBILITY_TOL);
    FeasibilityReport {
        feasible,
        per_user_margins,
        power_margin,
    }
}

/// Whether user `k` reaches `SNR_k >= Gamma_k` (relative slack 1e-9).
pub fn ci_implies_snr(cs: &CiConstraintSet, x: &ComplexVector, k: usize) -> bool {
    let snr = cs.rotated_channels[k].dotc(x).norm_sqr() / cs.noise_vars[k];
    snr >= cs.gammas[k] * (1.0 - 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::test_util::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// One user, `N_T = 1`, channel 1: the rotated output is `conj(s) x`.
    fn scalar_set(order: usize, index: usize, gamma: f64) -> CiConstraintSet {
        let sc = Scenario::standard().with_arrays(1, 1).with_users(1);
        let mut sc = sc;
        sc.psk_order = order;
        let s = PskSymbol::new(order, index).unwrap();
        build_constraints(&sc, &[ComplexVector::from_element(1, c(1.0, 0.0))], &[s], &[gamma]).unwrap()
    }

    #[test]
    fn psk_values_are_unit_modulus() {
        for order in [2, 4, 8, 16] {
            for s in PskSymbol::constellation(order).unwrap() {
                assert!((s.value.norm() - 1.0).abs() < 1e-12);
            }
        }
        let s = PskSymbol::new(4, 1).unwrap();
        assert!((s.value - Complex64::from_polar(1.0, PI / 4.0)).norm() < 1e-15);
        assert!(PskSymbol::new(4, 0).is_err() && PskSymbol::new(4, 5).is_err() && PskSymbol::new(3, 1).is_err());
    }

    #[test]
    fn rotation_maps_symbol_to_real_axis() {
        let cs = scalar_set(4, 1, 1.0);
        let x = ComplexVector::from_element(1, Complex64::from_polar(1.0, PI / 4.0));
        // h = 1, so h^H x = e^{j pi/4} and the rotated output is 1.
        let y = cs.rotated_outputs(&x)[0];
        assert!((y - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_threshold_is_pure_sector_test() {
        let cs = scalar_set(4, 1, 0.0);
        assert_eq!(cs.thresholds[0], 0.0);
        let inside = ComplexVector::from_element(1, Complex64::from_polar(2.0, PI / 4.0 + 0.7));
        let outside = ComplexVector::from_element(1, Complex64::from_polar(2.0, PI / 4.0 + 0.9));
        assert!(check_feasible(&cs, &inside).feasible);
        assert!(!check_feasible(&cs, &outside).feasible);
    }

    #[test]
    fn threshold_for_fifteen_db() {
        let cs = scalar_set(4, 2, 10f64.powf(1.5));
        assert!((cs.thresholds[0] - 5.623413251903491).abs() < 1e-12);
    }

    #[test]
    fn margin_arithmetic() {
        // s = e^{j pi/4}, so x = y~ e^{j pi/4} gives rotated output y~.
        let cs = {
            let mut cs = scalar_set(4, 1, 1.0);
            cs.power_budget = 100.0;
            cs
        };
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        let at = |y: Complex64| ComplexVector::from_element(1, y * rot);
        let r = check_feasible(&cs, &at(c(2.0, 0.0)));
        assert!((r.per_user_margins[0] - 1.0).abs() < 1e-12 && r.feasible);
        let r = check_feasible(&cs, &at(c(2.0, 1.5)));
        assert!((r.per_user_margins[0] + 0.5).abs() < 1e-12 && !r.feasible);

        let x = ComplexVector::from_element(1, c(10.0, 0.0) * rot);
        let r = check_feasible(&cs, &x);
        assert!(r.power_margin.abs() < 1e-12);
        assert!(r.feasible);
    }

    #[test]
    fn halfspaces_reproduce_margins() {
        let mut r = rng(4);
        let sc = Scenario::standard();
        let channels: Vec<_> = (0..5).map(|_| random_vector(&mut r, 8)).collect();
        let symbols: Vec<_> = (0..5).map(|k| PskSymbol::new(4, k % 4 + 1).unwrap()).collect();
        let cs = build_constraints(&sc, &channels, &symbols, &[10.0; 5]).unwrap();
        let hs = cs.halfspaces();
        assert_eq!(hs.len(), 10);
        for _ in 0..20 {
            let x = random_vector(&mut r, 8) * c(5.0, 0.0);
            let xi = numerics::to_real(&x);
            let rep = check_feasible(&cs, &x);
            for k in 0..5 {
                let m = hs
                    .iter()
                    .filter(|h| h.user == k)
                    .map(|h| h.slack(&xi))
                    .fold(f64::INFINITY, f64::min);
                assert!((m - rep.per_user_margins[k]).abs() < 1e-10 * (1.0 + m.abs()));
            }
        }
    }

    #[test]
    fn bpsk_ignores_imaginary_part() {
        let cs = scalar_set(2, 1, 1.0);
        assert!(cs.tan_phi.is_infinite());
        assert_eq!(cs.halfspaces().len(), 1);
        // s = e^{j pi/2} = j; x = j (2 + 50 j) rotates to 2 + 50j.
        let x = ComplexVector::from_element(1, c(0.0, 1.0) * c(2.0, 5.0));
        let rep = check_feasible(&cs, &x);
        assert!((rep.per_user_margins[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_rejected() {
        let sc = Scenario::standard();
        let h = vec![ComplexVector::zeros(8); 4];
        let s = vec![PskSymbol::new(4, 1).unwrap(); 5];
        assert!(matches!(
            build_constraints(&sc, &h, &s, &[1.0; 5]),
            Err(DfrcError::Dimension { .. })
        ));
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_psk(Complex64::from_polar(1.0, PI / 4.0), 4).unwrap().index, 1);
        assert_eq!(decode_psk(c(1.0, 0.01), 4).unwrap().index, 1);
        assert_eq!(decode_psk(c(1.0, -0.01), 4).unwrap().index, 4);
        assert_eq!(decode_psk(c(1.0, 0.0), 4).unwrap().index, 1);
        assert_eq!(decode_psk(c(0.0, 1.0), 4).unwrap().index, 2);
        assert!(decode_psk(c(0.0, 0.0), 4).is_none());
        for order in [2, 4, 8] {
            for s in PskSymbol::constellation(order).unwrap() {
                assert_eq!(decode_psk(s.value * 3.0, order).unwrap().index, s.index);
            }
        }
    }

    #[test]
    fn boundary_point_has_snr_equal_to_target() {
        let gamma = 10f64.powf(1.5);
        let cs = scalar_set(4, 3, gamma);
        let s = PskSymbol::new(4, 3).unwrap();
        let x = ComplexVector::from_element(1, s.value * cs.thresholds[0]);
        assert!(check_feasible(&cs, &x).per_user_margins[0].abs() < 1e-12);
        let snr = x[0].norm_sqr();
        assert!((snr - gamma).abs() < 1e-9 * gamma);
        assert!(ci_implies_snr(&cs, &x, 0));
    }

    #[test]
    fn noisy_constructive_symbols_decode() {
        // Points on the CI boundary at 15 dB with unit noise.
        let mut r = rng(77);
        let gamma = 10f64.powf(1.5);
        let mut errors = 0usize;
        let trials = 100_000;
        for t in 0..trials {
            let s = PskSymbol::new(4, t % 4 + 1).unwrap();
            // Corner of the constructive region: rotated output exactly the threshold.
            let y = s.value * gamma.sqrt();
            let n = c(r.sample::<f64, _>(StandardNormal), r.sample::<f64, _>(StandardNormal))
                * std::f64::consts::FRAC_1_SQRT_2;
            if decode_psk(y + n, 4).unwrap().index != s.index {
                errors += 1;
            }
        }
        assert!((errors as f64) / (trials as f64) <= 1e-3, "{errors} errors");
    }

    #[test]
    fn rotation_invariance() {
        // A common phase on the channel turns h^H x by exp(-j psi); the same
        // turn on the symbol leaves the rotated output unchanged.
        let mut r = rng(9);
        let sc = Scenario::standard();
        let channels: Vec<_> = (0..5).map(|_| random_vector(&mut r, 8)).collect();
        let symbols: Vec<_> = (0..5).map(|k| PskSymbol::new(4, k % 4 + 1).unwrap()).collect();
        let cs = build_constraints(&sc, &channels, &symbols, &[5.0; 5]).unwrap();
        for psi in [0.3, 1.7, -2.9] {
            let rot = Complex64::from_polar(1.0, psi);
            let channels2: Vec<_> = channels.iter().map(|h| h * rot).collect();
            let symbols2: Vec<_> = symbols
                .iter()
                .map(|s| PskSymbol {
                    value: s.value * rot.conj(),
                    ..*s
                })
                .collect();
            let cs2 = build_constraints(&sc, &channels2, &symbols2, &[5.0; 5]).unwrap();
            let x = random_vector(&mut r, 8) * c(4.0, 0.0);
            let a = check_feasible(&cs, &x).per_user_margins;
            let b = check_feasible(&cs2, &x).per_user_margins;
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn constructive_points_imply_snr() {
        let mut r = rng(31);
        let sc = Scenario::standard();
        let channels: Vec<_> = (0..5).map(|_| random_vector(&mut r, 8)).collect();
        let symbols: Vec<_> = (0..5).map(|k| PskSymbol::new(4, (k * 3) % 4 + 1).unwrap()).collect();
        let gammas = [10f64.powf(1.5); 5];
        let cs = build_constraints(&sc, &channels, &symbols, &gammas).unwrap();
        // Feasible points: x = sum_k t_k h_k s_k / ||h_k||^2-style combinations
        // are not guaranteed feasible, so sample and keep the feasible ones.
        let mut found = 0;
        let base = crate::numerics::test_util::zf_constructive(&cs, 20.0);
        while found < 1000 {
            let x = &base + random_vector(&mut r, 8) * c(0.5, 0.0);
            if !check_feasible(&cs, &x).feasible {
                continue;
            }
            found += 1;
            for k in 0..5 {
                assert!(ci_implies_snr(&cs, &x, k));
                let snr = crate::signal_model::snr_user(&sc, k, &channels[k], &x).unwrap();
                assert!(snr >= gammas[k] * (1.0 - 1e-9));
            }
        }
    }

    #[test]
    fn convex_combinations_stay_feasible() {
        let mut r = rng(32);
        let sc = Scenario::standard();
        let channels: Vec<_> = (0..5).map(|_| random_vector(&mut r, 8)).collect();
        let symbols: Vec<_> = (0..5).map(|k| PskSymbol::new(4, k % 4 + 1).unwrap()).collect();
        let cs = build_constraints(&sc, &channels, &symbols, &[10.0; 5]).unwrap();
        let base = crate::numerics::test_util::zf_constructive(&cs, 15.0);
        let mut pairs = 0;
        while pairs < 200 {
            let x1 = &base + random_vector(&mut r, 8) * c(1.0, 0.0);
            let x2 = &base + random_vector(&mut r, 8) * c(1.0, 0.0);
            if !(check_feasible(&cs, &x1).feasible && check_feasible(&cs, &x2).feasible) {
                continue;
            }
            pairs += 1;
            for t in [0.0, 0.25, 0.5, 0.9, 1.0] {
                let x = &x1 * c(t, 0.0) + &x2 * c(1.0 - t, 0.0);
                assert!(check_feasible(&cs, &x).feasible);
            }
        }
    }

    #[test]
    fn strict_phase_points_are_constructive() {
        // Zero phase deviation with tight SNR: h^H x = sqrt(sigma^2 Gamma) s exactly.
        let mut r = rng(33);
        let sc = Scenario::standard().with_users(3);
        let channels: Vec<_> = (0..3).map(|_| random_vector(&mut r, 8)).collect();
        let symbols: Vec<_> = (0..3).map(|k| PskSymbol::new(4, k + 1).unwrap()).collect();
        let gammas = [10f64.powf(1.5); 3];
        let cs = build_constraints(&sc, &channels, &symbols, &gammas).unwrap();
        let targets: Vec<Complex64> = symbols.iter().map(|s| s.value * gammas[0].sqrt()).collect();
        let x = crate::numerics::test_util::zero_forcing(&channels, &targets);
        let rep = check_feasible(&cs, &x);
        for m in &rep.per_user_margins {
            assert!(m.abs() < 1e-9, "{m}");
        }
        assert!(rep.feasible);
    }
}
