//! Deterministic random streams for Monte Carlo work units.
//!
//! Every unit gets its own ChaCha8 stream keyed by the master seed and a
//! `(kind, a, b, c)` index, so results do not depend on thread scheduling.
//! Channels depend only on the channel draw and symbols only on
//! `(channel draw, symbol draw)`, which keeps draws common across SNR points
//! and methods.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ci::PskSymbol;
use crate::error::Result;
use crate::numerics::ComplexVector;
use crate::signal_model::Scenario;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum StreamKind {
    Channel = 1,
    Symbol = 2,
    Solver = 3,
    Noise = 4,
}

/// Stream `(kind, a, b, c)` of the master seed. `a < 2^20`, `b < 2^20`, `c < 2^20`.
pub fn unit_rng(seed: u64, kind: StreamKind, a: usize, b: usize, c: usize) -> ChaCha8Rng {
    debug_assert!(a < 1 << 20 && b < 1 << 20 && c < 1 << 20);
    let stream = ((kind as u64) << 60) | ((a as u64) << 40) | ((b as u64) << 20) | c as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Circularly-symmetric complex normal with variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(s * re, s * im)
}

/// `K` Rayleigh channels with i.i.d. `CN(0, 1)` entries.
pub fn draw_channels<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Vec<ComplexVector> {
    (0..scenario.n_users())
        .map(|_| ComplexVector::from_fn(scenario.n_tx, |_, _| complex_normal(rng, 1.0)))
        .collect()
}

/// One uniformly drawn PSK symbol per user.
pub fn draw_symbols<R: Rng + ?Sized>(scenario: &Scenario, rng: &mut R) -> Result<Vec<PskSymbol>> {
    (0..scenario.n_users())
        .map(|_| PskSymbol::new(scenario.psk_order, rng.random_range(1..=scenario.psk_order)))
        .collect()
}

/// Channels and symbols of draw `(channel, symbol)`.
pub fn draw_instance(
    scenario: &Scenario,
    seed: u64,
    channel: usize,
    symbol: usize,
) -> Result<(Vec<ComplexVector>, Vec<PskSymbol>)> {
    let channels = draw_channels(scenario, &mut unit_rng(seed, StreamKind::Channel, channel, 0, 0));
    let symbols = draw_symbols(scenario, &mut unit_rng(seed, StreamKind::Symbol, channel, symbol, 0))?;
    Ok((channels, symbols))
}

/// Seed handed to a solver (randomization) for one unit.
pub fn solver_seed(seed: u64, point: usize, method: usize, draw: usize) -> u64 {
    unit_rng(seed, StreamKind::Solver, point, method, draw).next_u64()
}
