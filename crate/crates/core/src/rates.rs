//! Closed-form effective SINRs and ergodic rate lower bounds.

use std::f64::consts::LN_2;

use crate::config::{Duplex, FadingProfile, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{estimator_stats, EstimatorStats};
use crate::frame::{frame_accounting, IntervalKind};

/// `log2(1 + x)` without cancellation for small `x`.
pub fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Downlink SINR of pair `k` under MRT precoding.
pub fn sinr_downlink(stats: &EstimatorStats, cfg: &SystemConfig, fading: &FadingProfile, k: usize) -> f64 {
    let total: f64 = stats.sigma2_d.iter().sum();
    if cfg.rho_d <= 0.0 || total <= 0.0 {
        return 0.0;
    }
    let s = stats.sigma2_d[k];
    cfg.antennas as f64 * s * s / ((fading.beta_d[k] + 1.0 / cfg.rho_d) * total)
}

/// Uplink SINR of pair `k` while the destination pilots overlap the data.
pub fn sinr_uplink_b(stats: &EstimatorStats, cfg: &SystemConfig, fading: &FadingProfile, k: usize) -> f64 {
    if cfg.rho_s <= 0.0 {
        return 0.0;
    }
    let sum_s: f64 = fading.beta_s.iter().sum();
    let sum_d: f64 = fading.beta_d.iter().sum();
    cfg.antennas as f64 * stats.sigma2_s[k] * cfg.rho_s / (cfg.rho_s * sum_s + cfg.rho_p * sum_d + 1.0)
}

/// Uplink SINR of pair `k` without pilot overlap; full duplex adds the loop interference.
pub fn sinr_uplink_c(
    stats: &EstimatorStats,
    cfg: &SystemConfig,
    fading: &FadingProfile,
    k: usize,
    duplex: Duplex,
) -> f64 {
    if cfg.rho_s <= 0.0 {
        return 0.0;
    }
    let sum_s: f64 = fading.beta_s.iter().sum();
    let li = match duplex {
        Duplex::Full => cfg.rho_d * fading.beta_li,
        Duplex::Half => 0.0,
    };
    cfg.antennas as f64 * stats.sigma2_s[k] * cfg.rho_s / (cfg.rho_s * sum_s + li + 1.0)
}

/// Rates of every pair in one interval.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalRates {
    /// 1-based interval index.
    pub index: usize,
    pub kind: IntervalKind,
    pub gamma_b: Vec<f64>,
    pub gamma_c: Vec<f64>,
    pub gamma_dl: Vec<f64>,
    /// Bits per interval.
    pub r_ul: Vec<f64>,
    pub r_dl: Vec<f64>,
    pub r_pair: Vec<f64>,
}

/// Full rate evaluation of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RateBreakdown {
    pub scheme: Scheme,
    pub duplex: Duplex,
    /// SINRs of the last interval (the steady state when there is one).
    /// Conventional frames have no overlapped uplink phase and report zeros here.
    pub gamma_b: Vec<f64>,
    pub gamma_c: Vec<f64>,
    pub gamma_dl: Vec<f64>,
    /// Per-pair rates in bits per interval, averaged over the intervals.
    pub r_ul: Vec<f64>,
    pub r_dl: Vec<f64>,
    pub r_pair: Vec<f64>,
    /// Sum rate per slot in bits/s/Hz.
    pub r_system: f64,
    /// Sum of `r_pair`, in bits per interval.
    pub bits_per_interval: f64,
    pub per_interval: Vec<IntervalRates>,
}

fn interval_rates(cfg: &SystemConfig, fading: &FadingProfile, kind: IntervalKind, index: usize) -> IntervalRates {
    let frame = frame_accounting(cfg);
    let stats = estimator_stats(cfg, fading, kind);
    let k = cfg.pairs;
    let mut out = IntervalRates {
        index,
        kind,
        gamma_b: vec![0.0; k],
        gamma_c: vec![0.0; k],
        gamma_dl: vec![0.0; k],
        r_ul: vec![0.0; k],
        r_dl: vec![0.0; k],
        r_pair: vec![0.0; k],
    };
    for i in 0..k {
        let gb = match cfg.scheme {
            Scheme::Overlay => sinr_uplink_b(&stats, cfg, fading, i),
            Scheme::Conventional => 0.0,
        };
        let gc = sinr_uplink_c(&stats, cfg, fading, i, cfg.duplex);
        let gd = sinr_downlink(&stats, cfg, fading, i);
        let ul = frame.phase_b * log2_1p(gb) + frame.phase_c * log2_1p(gc);
        let dl = frame.data_len * log2_1p(gd);
        out.gamma_b[i] = gb;
        out.gamma_c[i] = gc;
        out.gamma_dl[i] = gd;
        out.r_ul[i] = ul;
        out.r_dl[i] = dl;
        out.r_pair[i] = ul.min(dl);
    }
    out
}

/// Uplink rates (bits per interval) of interval `interval`.
pub fn rate_uplink(cfg: &SystemConfig, fading: &FadingProfile, interval: usize) -> Vec<f64> {
    interval_rates(cfg, fading, IntervalKind::of(cfg, interval), interval).r_ul
}

/// Downlink rates (bits per interval) of interval `interval`.
pub fn rate_downlink(cfg: &SystemConfig, fading: &FadingProfile, interval: usize) -> Vec<f64> {
    interval_rates(cfg, fading, IntervalKind::of(cfg, interval), interval).r_dl
}

fn assemble(cfg: &SystemConfig, fading: &FadingProfile) -> RateBreakdown {
    let first = interval_rates(cfg, fading, IntervalKind::First, 1);
    let steady = (cfg.intervals >= 2 && IntervalKind::of(cfg, 2) == IntervalKind::Steady)
        .then(|| interval_rates(cfg, fading, IntervalKind::Steady, 2));
    let per_interval: Vec<IntervalRates> = (1..=cfg.intervals)
        .map(|iota| {
            let base = match (&steady, IntervalKind::of(cfg, iota)) {
                (Some(s), IntervalKind::Steady) => s,
                _ => &first,
            };
            IntervalRates {
                index: iota,
                ..base.clone()
            }
        })
        .collect();
    let k = cfg.pairs;
    let l = cfg.intervals as f64;
    let avg = |f: fn(&IntervalRates) -> &Vec<f64>| -> Vec<f64> {
        (0..k)
            .map(|i| per_interval.iter().map(|r| f(r)[i]).sum::<f64>() / l)
            .collect()
    };
    let r_ul = avg(|r| &r.r_ul);
    let r_dl = avg(|r| &r.r_dl);
    let r_pair = avg(|r| &r.r_pair);
    let total: f64 = per_interval.iter().map(|r| r.r_pair.iter().sum::<f64>()).sum();
    let last = per_interval.last().expect("at least one interval");
    RateBreakdown {
        scheme: cfg.scheme,
        duplex: cfg.duplex,
        gamma_b: last.gamma_b.clone(),
        gamma_c: last.gamma_c.clone(),
        gamma_dl: last.gamma_dl.clone(),
        r_ul,
        r_dl,
        bits_per_interval: r_pair.iter().sum(),
        r_pair,
        r_system: total / (l * cfg.coherence as f64),
        per_interval,
    }
}

/// Rates of any scheme and duplex mode. FD overlay uses clean statistics in
/// the first interval and contaminated ones afterwards.
pub fn rate_e2e(cfg: &SystemConfig, fading: &FadingProfile) -> RateBreakdown {
    assemble(cfg, fading)
}

/// Rates of the conventional frame (separate source and destination pilot windows).
pub fn conventional_rates(cfg: &SystemConfig, fading: &FadingProfile) -> Result<RateBreakdown> {
    if cfg.scheme != Scheme::Conventional {
        return Err(Error::ModeMismatch(
            "conventional_rates needs scheme=conventional".into(),
        ));
    }
    Ok(assemble(cfg, fading))
}

/// Normalized system rate in bits/s/Hz.
pub fn system_rate(cfg: &SystemConfig, fading: &FadingProfile) -> f64 {
    assemble(cfg, fading).r_system
}
