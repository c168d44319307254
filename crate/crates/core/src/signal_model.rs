//! Array geometry, clutter statistics and radar/communication figures of merit.
//!
//! Both arrays are half-wavelength ULAs. The two-way steering matrix is
//! `U(theta) = a_r(theta) a_t(theta)^T`, with a plain transpose on the
//! transmit side. The transmit beampattern therefore uses `a_t(theta)^T x`
//! as well; conjugating there would mirror the pattern.
//!
//! Powers are normalized by the radar noise variance, so `mu = |alpha_0|^2 /
//! sigma_R^2` and `b_i = |alpha_i|^2 / sigma_R^2`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DfrcError, Result};
use crate::numerics::{self, ComplexMatrix, ComplexVector};

/// Relative slack on the power budget accepted by waveform-dependent routines.
pub const POWER_SLACK: f64 = 1e-6;

/// Below this `|x^H U0^H R^-1 U0 x|` the target is considered nulled.
pub const DEGENERATE_RESPONSE: f64 = 1e-12;

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Physical parameters of one DFRC deployment. Angles in radians, powers linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub n_tx: usize,
    pub n_rx: usize,
    pub target_angle: f64,
    /// `|alpha_0|^2`
    pub target_power: f64,
    pub clutter_angles: Vec<f64>,
    /// `|alpha_i|^2`, one per clutter angle.
    pub clutter_powers: Vec<f64>,
    pub radar_noise_var: f64,
    /// One noise variance per communication user.
    pub user_noise_vars: Vec<f64>,
    pub power_budget: f64,
    pub psk_order: usize,
}

impl Scenario {
    /// The standard evaluation setting: 8x8 arrays, target at broadside with
    /// 10 dB reflectivity, four 30 dB clutter patches at -50, -20, 20 and 50
    /// degrees, a 30 dBm budget, QPSK and five users with unit noise.
    pub fn standard() -> Self {
        Scenario {
            n_tx: 8,
            n_rx: 8,
            target_angle: 0.0,
            target_power: db_to_linear(10.0),
            clutter_angles: [-50.0f64, -20.0, 20.0, 50.0].iter().map(|d| d.to_radians()).collect(),
            clutter_powers: vec![db_to_linear(30.0); 4],
            radar_noise_var: 1.0,
            user_noise_vars: vec![1.0; 5],
            power_budget: db_to_linear(30.0),
            psk_order: 4,
        }
    }

    pub fn with_arrays(mut self, n_tx: usize, n_rx: usize) -> Self {
        self.n_tx = n_tx;
        self.n_rx = n_rx;
        self
    }

    pub fn with_users(mut self, k: usize) -> Self {
        let var = self.user_noise_vars.first().copied().unwrap_or(1.0);
        self.user_noise_vars = vec![var; k];
        self
    }

    pub fn without_clutter(mut self) -> Self {
        self.clutter_angles.clear();
        self.clutter_powers.clear();
        self
    }

    pub fn with_clutter(mut self, angles: Vec<f64>, powers: Vec<f64>) -> Self {
        self.clutter_angles = angles;
        self.clutter_powers = powers;
        self
    }

    pub fn n_users(&self) -> usize {
        self.user_noise_vars.len()
    }

    pub fn n_clutter(&self) -> usize {
        self.clutter_angles.len()
    }

    /// `mu = |alpha_0|^2 / sigma_R^2`
    pub fn mu(&self) -> f64 {
        self.target_power / self.radar_noise_var
    }

    /// `b_i = |alpha_i|^2 / sigma_R^2`
    pub fn clutter_ratios(&self) -> Vec<f64> {
        self.clutter_powers.iter().map(|p| p / self.radar_noise_var).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(DfrcError::Config(msg));
        if self.n_tx == 0 || self.n_rx == 0 {
            return bad("antenna counts must be positive".into());
        }
        if self.n_tx > numerics::MAX_DIM || self.n_rx > numerics::MAX_DIM {
            return bad(format!("antenna counts must not exceed {}", numerics::MAX_DIM));
        }
        let half_pi = std::f64::consts::FRAC_PI_2;
        let angle_ok = |a: f64| a.is_finite() && a > -half_pi && a < half_pi;
        if !angle_ok(self.target_angle) {
            return bad(format!("target angle {} rad outside (-pi/2, pi/2)", self.target_angle));
        }
        if let Some(a) = self.clutter_angles.iter().find(|a| !angle_ok(**a)) {
            return bad(format!("clutter angle {a} rad outside (-pi/2, pi/2)"));
        }
        if self.clutter_angles.len() != self.clutter_powers.len() {
            return bad(format!(
                "{} clutter angles but {} clutter powers",
                self.clutter_angles.len(),
                self.clutter_powers.len()
            ));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.target_power)
            || !positive(self.radar_noise_var)
            || !positive(self.power_budget)
            || !self.clutter_powers.iter().all(|&p| positive(p))
            || !self.user_noise_vars.iter().all(|&p| positive(p))
        {
            return bad("all powers and variances must be finite and positive".into());
        }
        if self.psk_order < 2 || !self.psk_order.is_power_of_two() {
            return bad(format!("PSK order {} must be a power of two >= 2", self.psk_order));
        }
        Ok(())
    }

    fn check_waveform(&self, x: &ComplexVector) -> Result<()> {
        if x.len() != self.n_tx {
            return Err(DfrcError::Dimension {
                expected: self.n_tx,
                got: x.len(),
                context: "transmit waveform",
            });
        }
        if !numerics::all_finite_vec(x) {
            return Err(DfrcError::Contract("waveform has non-finite entries".into()));
        }
        let power = x.norm_squared();
        if power > self.power_budget * (1.0 + POWER_SLACK) {
            return Err(DfrcError::Contract(format!(
                "waveform power {power:.6e} exceeds budget {:.6e}",
                self.power_budget
            )));
        }
        Ok(())
    }
}

/// `U(theta)` together with the angle it was built for.
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    pub angle: f64,
    pub matrix: ComplexMatrix,
}

/// Clutter-plus-noise statistics seen by the radar receiver for one waveform.
#[derive(Debug, Clone)]
pub struct RadarStats {
    /// `Sigma(x)`, `n_rx x n_rx`.
    pub sigma_x: ComplexMatrix,
    /// `Phi(x) = U0^H (Sigma(x) + I)^-1 U0`, `n_tx x n_tx`.
    pub phi_x: ComplexMatrix,
    pub mu: f64,
    pub b: Vec<f64>,
}

/// Unit-norm ULA response with `n` half-wavelength spaced elements.
pub fn steering_vector(n: usize, angle: f64) -> ComplexVector {
    let scale = 1.0 / (n as f64).sqrt();
    let k = -std::f64::consts::PI * angle.sin();
    ComplexVector::from_fn(n, |i, _| Complex64::from_polar(scale, k * i as f64))
}

pub fn steering_tx(scenario: &Scenario, angle: f64) -> ComplexVector {
    steering_vector(scenario.n_tx, angle)
}

pub fn steering_rx(scenario: &Scenario, angle: f64) -> ComplexVector {
    steering_vector(scenario.n_rx, angle)
}

/// `U(theta) = a_r(theta) a_t(theta)^T`.
pub fn steering_matrix(scenario: &Scenario, angle: f64) -> SteeringMatrix {
    let ar = steering_rx(scenario, angle);
    let at = steering_tx(scenario, angle);
    SteeringMatrix {
        angle,
        matrix: &ar * at.transpose(),
    }
}

/// `U(theta) x`, computed as `a_r (a_t^T x)` without forming the matrix.
fn steer(scenario: &Scenario, angle: f64, x: &ComplexVector) -> ComplexVector {
    let gain = steering_tx(scenario, angle).transpose() * x;
    steering_rx(scenario, angle) * gain[(0, 0)]
}

/// `Sigma(x) = sum_i b_i U(theta_i) x x^H U(theta_i)^H`.
pub fn clutter_covariance(scenario: &Scenario, x: &ComplexVector) -> Result<ComplexMatrix> {
    scenario.check_waveform(x)?;
    let n = scenario.n_rx;
    let mut sigma = ComplexMatrix::zeros(n, n);
    for (&angle, b) in scenario.clutter_angles.iter().zip(scenario.clutter_ratios()) {
        let u = steer(scenario, angle, x);
        sigma += (&u * u.adjoint()) * Complex64::new(b, 0.0);
    }
    Ok(numerics::hermitize(&sigma))
}

fn interference_plus_noise(scenario: &Scenario, x: &ComplexVector) -> Result<ComplexMatrix> {
    let sigma = clutter_covariance(scenario, x)?;
    Ok(sigma + ComplexMatrix::identity(scenario.n_rx, scenario.n_rx))
}

/// `Phi(x) = U(theta_0)^H [Sigma(x) + I]^-1 U(theta_0)`.
pub fn sinr_matrix(scenario: &Scenario, x: &ComplexVector) -> Result<ComplexMatrix> {
    let r = interference_plus_noise(scenario, x)?;
    let u0 = steering_matrix(scenario, scenario.target_angle).matrix;
    let y = numerics::herm_solve_matrix(&r, &u0)?;
    Ok(numerics::hermitize(&(u0.adjoint() * y)))
}

pub fn radar_stats(scenario: &Scenario, x: &ComplexVector) -> Result<RadarStats> {
    let sigma_x = clutter_covariance(scenario, x)?;
    let phi_x = sinr_matrix(scenario, x)?;
    Ok(RadarStats {
        sigma_x,
        phi_x,
        mu: scenario.mu(),
        b: scenario.clutter_ratios(),
    })
}

/// `x^H Phi(x) x`, the MVDR output SINR divided by `mu`.
pub fn sinr_objective(scenario: &Scenario, x: &ComplexVector) -> Result<f64> {
    let r = interference_plus_noise(scenario, x)?;
    let v = steer(scenario, scenario.target_angle, x);
    let z = numerics::herm_solve(&r, &v)?;
    Ok(v.dotc(&z).re)
}

/// Exact gradient of `x^H Phi(x) x`, including the dependence of `Sigma` on `x`,
/// in the convention `d s = Re(g^H dx)`.
pub fn sinr_objective_gradient(scenario: &Scenario, x: &ComplexVector) -> Result<ComplexVector> {
    let r = interference_plus_noise(scenario, x)?;
    let u0 = steering_matrix(scenario, scenario.target_angle).matrix;
    let z = numerics::herm_solve(&r, &(&u0 * x))?;
    let two = Complex64::new(2.0, 0.0);
    let mut g = u0.adjoint() * &z * two;
    for (&angle, b) in scenario.clutter_angles.iter().zip(scenario.clutter_ratios()) {
        let ui = steering_matrix(scenario, angle).matrix;
        let beta = z.dotc(&(&ui * x));
        g -= ui.adjoint() * &z * (beta * two * b);
    }
    Ok(g)
}

/// MVDR receive filter normalized for unit gain on the target return.
pub fn mvdr_beamformer(scenario: &Scenario, x: &ComplexVector) -> Result<ComplexVector> {
    let r = interference_plus_noise(scenario, x)?;
    let v = steer(scenario, scenario.target_angle, x);
    let z = numerics::herm_solve(&r, &v)?;
    let denom = v.dotc(&z).re;
    if !(denom > DEGENERATE_RESPONSE) {
        return Err(DfrcError::Degenerate(format!(
            "waveform places no energy on the target (x^H Phi x = {denom:.3e})"
        )));
    }
    Ok(z / Complex64::new(denom, 0.0))
}

/// `mu |w^H U0 x|^2 / (w^H (Sigma(x) + I) w)`.
pub fn sinr_rad(scenario: &Scenario, x: &ComplexVector, w: &ComplexVector) -> Result<f64> {
    if w.len() != scenario.n_rx {
        return Err(DfrcError::Dimension {
            expected: scenario.n_rx,
            got: w.len(),
            context: "receive filter",
        });
    }
    if w.norm() == 0.0 {
        return Err(DfrcError::Contract("receive filter is zero".into()));
    }
    let r = interference_plus_noise(scenario, x)?;
    let v = steer(scenario, scenario.target_angle, x);
    let num = w.dotc(&v).norm_sqr();
    let den = w.dotc(&(&r * w)).re;
    Ok(scenario.mu() * num / den)
}

/// `|h_k^H x|^2 / sigma_k^2` for user `k`.
pub fn snr_user(scenario: &Scenario, k: usize, h: &ComplexVector, x: &ComplexVector) -> Result<f64> {
    let var = *scenario.user_noise_vars.get(k).ok_or(DfrcError::Dimension {
        expected: scenario.n_users(),
        got: k + 1,
        context: "user index",
    })?;
    if h.len() != x.len() {
        return Err(DfrcError::Dimension {
            expected: x.len(),
            got: h.len(),
            context: "user channel",
        });
    }
    Ok(h.dotc(x).norm_sqr() / var)
}

/// Average transmit power pattern `mean_x |a_t(theta)^T x|^2` on `angles`.
pub fn transmit_beampattern(scenario: &Scenario, waveforms: &[ComplexVector], angles: &[f64]) -> Result<Vec<f64>> {
    if waveforms.is_empty() {
        return Err(DfrcError::Contract("beampattern needs at least one waveform".into()));
    }
    if let Some(x) = waveforms.iter().find(|x| x.len() != scenario.n_tx) {
        return Err(DfrcError::Dimension {
            expected: scenario.n_tx,
            got: x.len(),
            context: "beampattern waveform",
        });
    }
    let count = waveforms.len() as f64;
    Ok(angles
        .iter()
        .map(|&theta| {
            let at = steering_tx(scenario, theta);
            waveforms
                .iter()
                .map(|x| (at.transpose() * x)[(0, 0)].norm_sqr())
                .sum::<f64>()
                / count
        })
        .collect())
}

/// Average receive-filter response `mean_w |w^H a_r(theta)|^2`.
pub fn receive_beampattern(scenario: &Scenario, filters: &[ComplexVector], angles: &[f64]) -> Result<Vec<f64>> {
    if filters.is_empty() {
        return Err(DfrcError::Contract("beampattern needs at least one filter".into()));
    }
    let count = filters.len() as f64;
    Ok(angles
        .iter()
        .map(|&theta| {
            let ar = steering_rx(scenario, theta);
            filters.iter().map(|w| w.dotc(&ar).norm_sqr()).sum::<f64>() / count
        })
        .collect())
}
