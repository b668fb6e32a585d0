//! Slot accounting for each scheme and duplex mode.

use crate::config::{Duplex, Scheme, SystemConfig};

/// Whether an interval's source pilots are clean or overlap the previous
/// interval's relay transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    First,
    Steady,
}

impl IntervalKind {
    /// Kind of interval `iota` (1-based). Only FD overlay has contaminated pilots.
    pub fn of(cfg: &SystemConfig, iota: usize) -> IntervalKind {
        if cfg.duplex == Duplex::Full && cfg.scheme == Scheme::Overlay && iota >= 2 {
            IntervalKind::Steady
        } else {
            IntervalKind::First
        }
    }
}

/// Pilot and data durations in slots. Half-duplex lengths may be fractional.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameAccounting {
    /// Pilot slots `T_p`.
    pub pilot_len: f64,
    /// Data slots per direction `T_d`.
    pub data_len: f64,
    /// Uplink slots overlapping the destination pilots.
    pub phase_b: f64,
    /// Uplink slots free of pilot overlap.
    pub phase_c: f64,
    /// `T_p / T_c`.
    pub pilot_overhead: f64,
    /// Effective share of the frame carrying data.
    pub data_fraction: f64,
}

impl FrameAccounting {
    /// Whole slots available for one direction of data.
    pub fn data_slots(&self) -> usize {
        self.data_len.floor() as usize
    }
}

/// Durations for `cfg`. Frames too short to hold the pilots give `T_d = 0`
/// instead of an error so sweeps can cross the feasibility boundary.
pub fn frame_accounting(cfg: &SystemConfig) -> FrameAccounting {
    let tc = cfg.coherence as f64;
    let k = cfg.pairs as f64;
    let l = cfg.intervals as f64;
    let (pilot_len, data_len) = match (cfg.scheme, cfg.duplex) {
        (Scheme::Overlay, Duplex::Half) => {
            let td = if tc >= 3.0 * k {
                (tc - k) / 2.0
            } else {
                // Phase B cannot be filled: uplink data stops after it.
                (tc - 2.0 * k).max(0.0)
            };
            (k, td)
        }
        (Scheme::Overlay, Duplex::Full) => (k, if tc >= 2.0 * k { tc - k } else { 0.0 }),
        (Scheme::Conventional, Duplex::Half) => (2.0 * k, ((tc - 2.0 * k) / 2.0).max(0.0)),
        (Scheme::Conventional, Duplex::Full) => (2.0 * k, (tc - 2.0 * k - cfg.fd_proc_delay as f64).max(0.0)),
    };
    let (phase_b, phase_c) = match cfg.scheme {
        Scheme::Overlay => (data_len.min(k), (data_len - k).max(0.0)),
        Scheme::Conventional => (0.0, data_len),
    };
    let data_fraction = if cfg.scheme == Scheme::Overlay && cfg.duplex == Duplex::Full {
        // The last interval's forward phase spills past the final frame.
        l * data_len / (l * tc + pilot_len)
    } else {
        data_len / tc
    };
    FrameAccounting {
        pilot_len,
        data_len,
        phase_b,
        phase_c,
        pilot_overhead: pilot_len / tc,
        data_fraction,
    }
}
