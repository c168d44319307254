//! Secure dual-functional radar-communication waveform design.
//!
//! A DFRC base station transmits one waveform `x` that both illuminates a
//! target in clutter and delivers PSK symbols to single-antenna users. The
//! crate maximizes the radar output SINR (with an MVDR receive filter) while
//! constructive-interference constraints keep every user's noise-free symbol
//! inside a shifted PSK decision sector.
//!
//! Three solvers are provided: sequential concave QCQP ([`solvers::sq_solve`]),
//! semidefinite relaxation with Gaussian randomization ([`solvers::sdr_solve`]),
//! and successive convex approximation ([`solvers::sca_solve`]). The
//! [`harness`] module runs the Monte Carlo studies driven by the `dfrc` CLI.

pub mod ci;
pub mod convex_kernel;
pub mod error;
pub mod harness;
pub mod numerics;
pub mod signal_model;
pub mod solvers;

pub use ci::{build_constraints, check_feasible, decode_psk, CiConstraintSet, FeasibilityReport, PskSymbol};
pub use error::{DfrcError, Result};
pub use numerics::{ComplexMatrix, ComplexVector, EigDecomposition};
pub use signal_model::{RadarStats, Scenario, SteeringMatrix};
pub use solvers::{
    sca_initialize, sca_solve, sdr_solve, sq_solve, LineSearch, Method, SdrResult, SolverConfig, SolverResult,
    SolverStatus, TraceEntry,
};

pub use num_complex::Complex64;
