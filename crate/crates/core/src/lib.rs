//! Multipair massive-MIMO relaying with pilot-data overlay frames.
//!
//! The crate evaluates closed-form ergodic rate lower bounds for overlay and
//! conventional frames in half and full duplex, simulates the transmission
//! chain with instantaneous channels, derives high/low-SNR limits, and
//! balances source and relay power with successive convex approximation.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod estimation;
pub mod experiments;
pub mod frame;
pub mod montecarlo;
pub mod power;
pub mod random;
pub mod rates;
pub mod stats;

pub use config::{Duplex, FadingProfile, LiMode, Scheme, SymbolAlphabet, SystemConfig};
pub use error::{Error, Result};
pub use frame::{frame_accounting, FrameAccounting, IntervalKind};
pub use rates::{rate_e2e, RateBreakdown};
