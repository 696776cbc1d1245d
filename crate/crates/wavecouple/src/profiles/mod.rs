//! One-dimensional profiles behind the elementary return trajectory.

pub mod bumps;
pub mod cutoff;
pub mod stationary;
pub mod temporal;

pub use bumps::{build_bumps, BumpTriple};
pub use stationary::{build_stationary, StationaryProfile};
pub use temporal::{build_temporal, build_temporal_unchecked, Temporal, TemporalJets, TemporalProfiles};
