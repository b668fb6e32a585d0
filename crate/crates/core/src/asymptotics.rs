//! High- and low-SNR limits of the effective SINRs and the overlay-versus-
//! conventional dominance condition.
//!
//! Limits assume equal pilot, source and relay power `rho`. Low-SNR limits
//! vanish, so they are reported as the coefficient of `rho^2`.

use crate::config::{Duplex, FadingProfile, LiMode, Scheme, SystemConfig};
use crate::estimation::estimator_stats;
use crate::frame::{frame_accounting, IntervalKind};
use crate::rates::{sinr_downlink, sinr_uplink_b, sinr_uplink_c};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    High,
    Low,
}

/// Per-pair limits. Overlay fills `uplink_b`, `uplink_c` and `downlink`;
/// conventional frames have a single uplink phase reported in `uplink_c`,
/// with `uplink_b` empty.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticReport {
    pub regime: Regime,
    pub scheme: Scheme,
    pub uplink_b: Vec<f64>,
    pub uplink_c: Vec<f64>,
    pub downlink: Vec<f64>,
    /// Dominance slack `(sum beta_s)^2 + M beta_sk sum beta_s - (sum beta_d)^2` per pair.
    pub margin: Vec<f64>,
    /// Whether the slack is non-negative.
    pub dominance: Vec<bool>,
}

/// Dominance slack of every pair.
pub fn dominance_margin(fading: &FadingProfile, antennas: usize) -> Vec<f64> {
    let ss: f64 = fading.beta_s.iter().sum();
    let sd: f64 = fading.beta_d.iter().sum();
    fading
        .beta_s
        .iter()
        .map(|b| ss * ss + antennas as f64 * b * ss - sd * sd)
        .collect()
}

pub fn asymptotic_sinrs(
    fading: &FadingProfile,
    antennas: usize,
    pairs: usize,
    regime: Regime,
    scheme: Scheme,
) -> AsymptoticReport {
    let m = antennas as f64;
    let k = pairs as f64;
    let ss: f64 = fading.beta_s.iter().sum();
    let sd: f64 = fading.beta_d.iter().sum();
    let sd2: f64 = fading.beta_d.iter().map(|b| b * b).sum();
    let (uplink_b, uplink_c, downlink): (Vec<f64>, Vec<f64>, Vec<f64>) = match regime {
        Regime::High => (
            fading.beta_s.iter().map(|b| m * b / (ss + sd)).collect(),
            fading.beta_s.iter().map(|b| m * b / ss).collect(),
            fading.beta_d.iter().map(|b| m * b / sd).collect(),
        ),
        Regime::Low => (
            fading.beta_s.iter().map(|b| m * k * b * b).collect(),
            fading.beta_s.iter().map(|b| m * k * b * b).collect(),
            fading.beta_d.iter().map(|b| m * k * b.powi(4) / sd2).collect(),
        ),
    };
    let uplink_b = match scheme {
        Scheme::Overlay => uplink_b,
        Scheme::Conventional => Vec::new(),
    };
    let margin = dominance_margin(fading, antennas);
    let dominance = margin.iter().map(|x| *x >= 0.0).collect();
    AsymptoticReport {
        regime,
        scheme,
        uplink_b,
        uplink_c,
        downlink,
        margin,
        dominance,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairDominance {
    pub margin: f64,
    /// The SINR part of the condition (`margin >= 0`).
    pub sinr_condition: bool,
    /// SINR condition and strictly longer overlay data phases in both duplex modes.
    pub dominant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorollaryReport {
    pub pairs: Vec<PairDominance>,
    /// `(overlay T_d, conventional T_d)` in half duplex.
    pub durations_hd: (f64, f64),
    /// Same in full duplex, without processing delay.
    pub durations_fd: (f64, f64),
}

impl CorollaryReport {
    pub fn all_dominant(&self) -> bool {
        self.pairs.iter().all(|p| p.dominant)
    }
}

/// Checks whether overlay beats conventional for every pair of `fading`.
pub fn corollary_check(fading: &FadingProfile, antennas: usize, pairs: usize, coherence: usize) -> CorollaryReport {
    let durations = |duplex| {
        let base = SystemConfig {
            antennas,
            pairs,
            coherence,
            duplex,
            fd_proc_delay: 0,
            ..SystemConfig::default()
        };
        let ov = frame_accounting(&base).data_len;
        let conv = frame_accounting(&SystemConfig {
            scheme: Scheme::Conventional,
            ..base
        })
        .data_len;
        (ov, conv)
    };
    let durations_hd = durations(Duplex::Half);
    let durations_fd = durations(Duplex::Full);
    let longer = durations_hd.0 > durations_hd.1 && durations_fd.0 > durations_fd.1;
    let pairs = dominance_margin(fading, antennas)
        .into_iter()
        .map(|margin| PairDominance {
            margin,
            sinr_condition: margin >= 0.0,
            dominant: margin >= 0.0 && longer,
        })
        .collect();
    CorollaryReport {
        pairs,
        durations_hd,
        durations_fd,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitEntry {
    pub quantity: &'static str,
    pub pair: usize,
    /// SINR at the evaluated power (divided by `rho^2` in the low regime).
    pub value: f64,
    pub limit: f64,
    pub rel_dev: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitReport {
    pub high_rho: f64,
    pub low_rho: f64,
    pub high: Vec<LimitEntry>,
    pub low: Vec<LimitEntry>,
}

impl LimitReport {
    pub fn max_high(&self) -> f64 {
        self.high.iter().map(|e| e.rel_dev).fold(0.0, f64::max)
    }

    pub fn max_low(&self) -> f64 {
        self.low.iter().map(|e| e.rel_dev).fold(0.0, f64::max)
    }
}

/// Compares the closed-form SINRs at equal power `rho` with their limits.
///
/// The loop power keeps the configured behaviour at high SNR. At low SNR it
/// scales with `rho` (fixed loop gain) so that it vanishes like every other
/// received power.
pub fn limit_deviation(cfg: &SystemConfig, fading: &FadingProfile, rho: f64, regime: Regime) -> Vec<LimitEntry> {
    let mut at = cfg.clone();
    if regime == Regime::Low {
        at.beta_li_fixed = Some(fading.beta_li);
        at.li_mode = LiMode::FixedGain;
    }
    at.rho_p = rho;
    let at = at.with_powers(rho, rho);
    let f = fading.for_config(&at);
    let kind = IntervalKind::of(&at, at.intervals.min(2));
    let stats = estimator_stats(&at, &f, kind);
    let lim = asymptotic_sinrs(&f, at.antennas, at.pairs, regime, at.scheme);
    let scale = match regime {
        Regime::High => 1.0,
        Regime::Low => rho * rho,
    };
    let mut out = Vec::new();
    let mut push = |quantity, pair, value: f64, limit: f64| {
        let value = value / scale;
        out.push(LimitEntry {
            quantity,
            pair,
            value,
            limit,
            rel_dev: (value - limit).abs() / limit,
        });
    };
    for k in 0..at.pairs {
        let gc = sinr_uplink_c(&stats, &at, &f, k, at.duplex);
        let gd = sinr_downlink(&stats, &at, &f, k);
        match at.scheme {
            Scheme::Overlay => {
                push("gamma_B", k, sinr_uplink_b(&stats, &at, &f, k), lim.uplink_b[k]);
                push("gamma_C", k, gc, lim.uplink_c[k]);
            }
            Scheme::Conventional => push("gamma_UL", k, gc, lim.uplink_c[k]),
        }
        push("gamma_DL", k, gd, lim.downlink[k]);
    }
    out
}

/// Deviations at `rho = 1e4` (high) and `rho = 1e-3` (low).
pub fn limit_consistency(cfg: &SystemConfig, fading: &FadingProfile) -> LimitReport {
    let high_rho = 1e4;
    let low_rho = 1e-3;
    LimitReport {
        high_rho,
        low_rho,
        high: limit_deviation(cfg, fading, high_rho, Regime::High),
        low: limit_deviation(cfg, fading, low_rho, Regime::Low),
    }
}
