//! Capacity, power and bandwidth of an underwater acoustic link.
//!
//! The channel attenuates by `A(l, f) = (l/l_ref)^k · a(f)^l` (Thorp
//! absorption `a(f)`) and adds colored ambient noise `N(f)` from turbulence,
//! shipping, wind-driven waves and thermal sources. For a required capacity
//! `C` at distance `l` the capacity-optimal transmit spectrum is the
//! waterfilling one, `S(f) = K - A(l,f)N(f)` wherever that is positive.
//! This crate
//!
//! * evaluates the channel model ([`channel`]),
//! * solves for the level `K(l, C)`, the band, and the power `P(l, C)`
//!   ([`solver`]),
//! * sweeps rectangular `(l, C)` grids ([`sweep`]),
//! * fits the closed-form surrogates `Q(l, C) = 10^(a1(C)/10) l^a2(C)` for
//!   power, band-edge frequency and bandwidth, plus their wind dependence
//!   ([`fit`]),
//! * and regenerates coefficient tables and plot data ([`report`]).
//!
//! ```
//! use uwacap::{EnvironmentParams, LinkQuery, Solver, SolverSettings};
//!
//! let solver = Solver::new(EnvironmentParams::default(), SolverSettings::default()).unwrap();
//! let sol = solver.solve(&LinkQuery::new(5.0, 1.0).unwrap()).unwrap();
//! assert!((sol.capacity_achieved - 1.0).abs() < 1e-9);
//! assert!(sol.f_ini <= sol.f0 && sol.f0 <= sol.f_end);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod config;
pub mod error;
pub mod fit;
pub mod report;
pub mod solver;
pub mod sweep;
pub mod units;

pub use channel::{EnvironmentParams, FrequencyGrid};
pub use config::RunConfig;
pub use error::{Error, Result};
pub use fit::{CoefficientModel, InterceptVariant, Quantity};
pub use solver::{LinkQuery, LinkSolution, Solver, SolverSettings, TransmissionBand};
pub use sweep::{run_sweep, CasePreset, SweepSpec};
pub use units::{DistanceKm, FrequencyKHz, PsdLinear};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/channel.md")]
    mod channel {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/environment.md")]
    mod environment {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
