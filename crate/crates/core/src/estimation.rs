//! MMSE channel estimation, phase-B detection and the second-order
//! statistics of the estimates.

use num_complex::Complex64;

use crate::config::{Duplex, FadingProfile, Scheme, SymbolAlphabet, SystemConfig};
use crate::error::{Error, Result};
use crate::frame::IntervalKind;
use crate::random::{CMatrix, ChannelSet, PilotBook};

/// Closed-form variances of the estimates for one interval kind.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorStats {
    pub sigma2_s: Vec<f64>,
    pub eps2_s: Vec<f64>,
    pub sigma2_d: Vec<f64>,
    pub eps2_d: Vec<f64>,
    /// MRT normalization `sqrt(1 / (M * sum sigma2_d))`, zero when no
    /// destination channel is estimated.
    pub alpha: f64,
    pub kind: IntervalKind,
}

/// Residual loop power at the relay receiver, zero in half duplex.
pub fn loop_power(cfg: &SystemConfig, fading: &FadingProfile) -> f64 {
    match cfg.duplex {
        Duplex::Full => cfg.rho_d * fading.beta_li,
        Duplex::Half => 0.0,
    }
}

fn mmse_variance(kp: f64, beta: f64, disturbance: f64) -> f64 {
    kp * beta * beta / (disturbance + kp * beta)
}

/// Estimate variances for `kind`. Conventional pilots are never overlapped,
/// so both sides use the clean form there.
pub fn estimator_stats(cfg: &SystemConfig, fading: &FadingProfile, kind: IntervalKind) -> EstimatorStats {
    let kp = cfg.pairs as f64 * cfg.rho_p;
    let overlay = cfg.scheme == Scheme::Overlay;
    let src_disturbance = match kind {
        IntervalKind::Steady if overlay => loop_power(cfg, fading) + 1.0,
        _ => 1.0,
    };
    let sigma2_s: Vec<f64> = fading
        .beta_s
        .iter()
        .map(|&b| mmse_variance(kp, b, src_disturbance))
        .collect();
    let eps2_s: Vec<f64> = fading.beta_s.iter().zip(&sigma2_s).map(|(b, s)| b - s).collect();
    let dst_disturbance = if overlay {
        cfg.rho_s * eps2_s.iter().sum::<f64>() + 1.0
    } else {
        1.0
    };
    let sigma2_d: Vec<f64> = fading
        .beta_d
        .iter()
        .map(|&b| mmse_variance(kp, b, dst_disturbance))
        .collect();
    let eps2_d: Vec<f64> = fading.beta_d.iter().zip(&sigma2_d).map(|(b, s)| b - s).collect();
    let total: f64 = sigma2_d.iter().sum();
    let alpha = if total > 0.0 {
        (1.0 / (cfg.antennas as f64 * total)).sqrt()
    } else {
        0.0
    };
    EstimatorStats {
        sigma2_s,
        eps2_s,
        sigma2_d,
        eps2_d,
        alpha,
        kind,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Source,
    Destination,
}

#[derive(Debug, Clone)]
pub struct ChannelEstimate {
    /// `M x K` estimate.
    pub g_hat: CMatrix,
    pub stats: EstimatorStats,
    pub side: Side,
}

/// Relay transmission of the previous interval that leaks into the current pilots.
#[derive(Debug, Clone)]
pub struct LoopReplay {
    pub alpha: f64,
    /// Previous destination estimate (the precoder).
    pub g_hat_d: CMatrix,
    /// Last `K` forward symbols of the previous interval.
    pub x_tail: CMatrix,
    /// Loop channel during that transmission.
    pub g_li: CMatrix,
}

fn check_shape(what: &'static str, m: &CMatrix, expected: (usize, usize)) -> Result<()> {
    if m.shape() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found: m.shape(),
        });
    }
    Ok(())
}

fn scale_columns(m: &mut CMatrix, factors: impl Iterator<Item = f64>) {
    for (mut col, f) in m.column_iter_mut().zip(factors) {
        col *= Complex64::from(f);
    }
}

/// Received pilot block of phase A. Steady intervals add the replayed loop
/// interference and require `replay`.
pub fn receive_phase_a(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pilots: &PilotBook,
    n_a: &CMatrix,
    kind: IntervalKind,
    replay: Option<&LoopReplay>,
) -> Result<CMatrix> {
    let amp = Complex64::from((cfg.pairs as f64 * cfg.rho_p).sqrt());
    let mut r = &ch.g_s * &pilots.phi * amp + n_a;
    if kind == IntervalKind::Steady && cfg.duplex == Duplex::Full && cfg.scheme == Scheme::Overlay {
        let rep = replay.ok_or_else(|| Error::MissingState("previous interval precoder for loop replay".into()))?;
        let leak = &rep.g_li * (&rep.g_hat_d * &rep.x_tail);
        r += leak * Complex64::from(cfg.rho_d.sqrt() * rep.alpha);
    }
    Ok(r)
}

/// Received block of phase B: overlapped source data plus destination pilots.
/// Conventional frames carry the destination pilots alone.
pub fn receive_phase_b(
    cfg: &SystemConfig,
    ch: &ChannelSet,
    pilots: &PilotBook,
    s_b: &CMatrix,
    n_b: &CMatrix,
) -> CMatrix {
    let amp = Complex64::from((cfg.pairs as f64 * cfg.rho_p).sqrt());
    let mut r = &ch.g_d * &pilots.psi * amp + n_b;
    if cfg.scheme == Scheme::Overlay {
        r += &ch.g_s * s_b * Complex64::from(cfg.rho_s.sqrt());
    }
    r
}

fn despread(r: &CMatrix, pilot: &CMatrix, kp: f64, shrink: impl Iterator<Item = f64>) -> CMatrix {
    if kp <= 0.0 {
        return CMatrix::zeros(r.nrows(), pilot.nrows());
    }
    let mut g = r * pilot.adjoint() * Complex64::from(1.0 / kp.sqrt());
    scale_columns(&mut g, shrink);
    g
}

fn source_estimate(
    r_a: &CMatrix,
    phi: &CMatrix,
    cfg: &SystemConfig,
    fading: &FadingProfile,
    kind: IntervalKind,
) -> Result<ChannelEstimate> {
    let k = cfg.pairs;
    check_shape("pilot matrix", phi, (k, k))?;
    check_shape("phase A block", r_a, (cfg.antennas, k))?;
    if fading.pairs() != k {
        return Err(Error::DimensionMismatch {
            what: "fading profile",
            expected: (k, 1),
            found: (fading.pairs(), 1),
        });
    }
    let stats = estimator_stats(cfg, fading, kind);
    let shrink = stats.sigma2_s.iter().zip(&fading.beta_s).map(|(s, b)| s / b);
    let g_hat = despread(r_a, phi, k as f64 * cfg.rho_p, shrink);
    Ok(ChannelEstimate {
        g_hat,
        stats,
        side: Side::Source,
    })
}

/// Source channels from clean pilots (first interval, every HD interval).
pub fn estimate_source_first(
    r_a: &CMatrix,
    phi: &CMatrix,
    cfg: &SystemConfig,
    fading: &FadingProfile,
) -> Result<ChannelEstimate> {
    source_estimate(r_a, phi, cfg, fading, IntervalKind::First)
}

/// Source channels from pilots overlapped by the relay's loop interference.
pub fn estimate_source_steady(
    r_a: &CMatrix,
    phi: &CMatrix,
    cfg: &SystemConfig,
    fading: &FadingProfile,
) -> Result<ChannelEstimate> {
    if cfg.duplex != Duplex::Full || cfg.scheme != Scheme::Overlay {
        return Err(Error::ModeMismatch(
            "contaminated pilots only occur in full-duplex overlay frames".into(),
        ));
    }
    source_estimate(r_a, phi, cfg, fading, IntervalKind::Steady)
}

/// Detected phase-B symbols.
#[derive(Debug, Clone)]
pub struct Detection {
    /// Matched-filter estimates, `K x K`.
    pub soft: CMatrix,
    /// Nearest QPSK points, when the alphabet is QPSK.
    pub hard: Option<CMatrix>,
}

/// MRC detection normalized by the realized estimate norms.
pub fn detect_phase_b(r_b: &CMatrix, source: &ChannelEstimate, cfg: &SystemConfig) -> Result<Detection> {
    let g = &source.g_hat;
    check_shape("phase B block", r_b, (g.nrows(), g.ncols()))?;
    if cfg.rho_s <= 0.0 {
        return Err(Error::Numerical("no source power to detect".into()));
    }
    let mut soft = g.adjoint() * r_b;
    for (k, mut row) in soft.row_iter_mut().enumerate() {
        let norm = g.column(k).norm_squared();
        if norm == 0.0 {
            return Err(Error::Numerical(format!("zero-norm estimate column {k}")));
        }
        row *= Complex64::from(1.0 / (cfg.rho_s.sqrt() * norm));
    }
    let hard = (cfg.symbols == SymbolAlphabet::Qpsk).then(|| {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        soft.map(|z| Complex64::new(a.copysign(z.re), a.copysign(z.im)))
    });
    Ok(Detection { soft, hard })
}

/// Destination channels from the phase-B block after cancelling the source
/// data `s_b` (true symbols or detector output).
pub fn estimate_destination(
    r_b: &CMatrix,
    source: &ChannelEstimate,
    s_b: &CMatrix,
    psi: &CMatrix,
    cfg: &SystemConfig,
    fading: &FadingProfile,
) -> Result<ChannelEstimate> {
    let k = cfg.pairs;
    check_shape("pilot matrix", psi, (k, k))?;
    check_shape("phase B block", r_b, (cfg.antennas, k))?;
    check_shape("source estimate", &source.g_hat, (cfg.antennas, k))?;
    check_shape("phase B symbols", s_b, (k, k))?;
    let stats = source.stats.clone();
    let shrink = stats.sigma2_d.iter().zip(&fading.beta_d).map(|(s, b)| s / b);
    let g_hat = if cfg.scheme == Scheme::Overlay && cfg.rho_s > 0.0 {
        let cleaned = r_b - &source.g_hat * s_b * Complex64::from(cfg.rho_s.sqrt());
        despread(&cleaned, psi, k as f64 * cfg.rho_p, shrink)
    } else {
        despread(r_b, psi, k as f64 * cfg.rho_p, shrink)
    };
    Ok(ChannelEstimate {
        g_hat,
        stats,
        side: Side::Destination,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{draw_channels, draw_signals, make_pilots};

    fn defaults() -> (SystemConfig, FadingProfile) {
        let cfg = SystemConfig::default();
        let f = cfg.fading().unwrap();
        (cfg, f)
    }

    #[test]
    fn source_variances() {
        let (cfg, f) = defaults();
        let first = estimator_stats(&cfg, &f, IntervalKind::First);
        let steady = estimator_stats(&cfg, &f, IntervalKind::Steady);
        assert!((first.sigma2_s[0] - 1000.0 / 1001.0).abs() < 1e-15);
        assert!((steady.sigma2_s[0] - 1000.0 / 1003.0).abs() < 1e-15);
    }

    #[test]
    fn destination_variance_and_alpha() {
        let (cfg, f) = defaults();
        let st = estimator_stats(&cfg, &f, IntervalKind::Steady);
        let e = 10.0 * (1.0 - 1000.0 / 1003.0);
        let want = 1000.0 / (100.0 * e + 1.0 + 1000.0);
        assert!((st.sigma2_d[3] - want).abs() < 1e-14);
        let a = (1.0 / (128.0 * 10.0 * want)).sqrt();
        assert!((st.alpha - a).abs() < 1e-15);
    }

    #[test]
    fn variance_bookkeeping() {
        let cfg = SystemConfig {
            pairs: 3,
            ..SystemConfig::default()
        };
        let f = FadingProfile::new(vec![0.3, 1.0, 1.7], vec![2.0, 0.1, 0.9], 0.02).unwrap();
        for kind in [IntervalKind::First, IntervalKind::Steady] {
            let st = estimator_stats(&cfg, &f, kind);
            for k in 0..3 {
                assert!((st.sigma2_s[k] + st.eps2_s[k] - f.beta_s[k]).abs() < 1e-12);
                assert!((st.sigma2_d[k] + st.eps2_d[k] - f.beta_d[k]).abs() < 1e-12);
                assert!(st.sigma2_s[k] >= 0.0 && st.sigma2_s[k] <= f.beta_s[k]);
            }
        }
    }

    #[test]
    fn steady_is_never_better_than_first() {
        let (cfg, f) = defaults();
        let a = estimator_stats(&cfg, &f, IntervalKind::First);
        let b = estimator_stats(&cfg, &f, IntervalKind::Steady);
        assert!(b.sigma2_s[0] < a.sigma2_s[0]);
        let quiet = FadingProfile { beta_li: 0.0, ..f };
        let c = estimator_stats(&cfg, &quiet, IntervalKind::Steady);
        assert_eq!(c.sigma2_s, a.sigma2_s);
    }

    #[test]
    fn no_pilot_energy() {
        let (mut cfg, f) = defaults();
        cfg.rho_p = 0.0;
        let st = estimator_stats(&cfg, &f, IntervalKind::First);
        assert_eq!(st.sigma2_s[0], 0.0);
        assert_eq!(st.eps2_s[0], 1.0);
        assert_eq!(st.alpha, 0.0);
    }

    #[test]
    fn noiseless_source_estimate_is_shrunk_truth() {
        let (cfg, f) = defaults();
        let ch = draw_channels(&cfg, &f, 9, 1);
        let p = make_pilots(cfg.pairs);
        let zero = CMatrix::zeros(cfg.antennas, cfg.pairs);
        let r = receive_phase_a(&cfg, &ch, &p, &zero, IntervalKind::First, None).unwrap();
        let est = estimate_source_first(&r, &p.phi, &cfg, &f).unwrap();
        let d = 1000.0 / 1001.0;
        let want = &ch.g_s * Complex64::from(d);
        assert!((est.g_hat - want).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn steady_without_loop_equals_first() {
        let (cfg, f) = defaults();
        let quiet = FadingProfile {
            beta_li: 0.0,
            ..f.clone()
        };
        let ch = draw_channels(&cfg, &f, 2, 1);
        let p = make_pilots(cfg.pairs);
        let sig = draw_signals(&cfg, 2, 1);
        let r = receive_phase_a(&cfg, &ch, &p, &sig.n_a, IntervalKind::First, None).unwrap();
        let a = estimate_source_first(&r, &p.phi, &cfg, &quiet).unwrap();
        let b = estimate_source_steady(&r, &p.phi, &cfg, &quiet).unwrap();
        assert_eq!(a.g_hat, b.g_hat);
    }

    #[test]
    fn steady_rejected_outside_fd_overlay() {
        let (mut cfg, f) = defaults();
        cfg.duplex = Duplex::Half;
        let r = CMatrix::zeros(cfg.antennas, cfg.pairs);
        let p = make_pilots(cfg.pairs);
        assert!(matches!(
            estimate_source_steady(&r, &p.phi, &cfg, &f),
            Err(Error::ModeMismatch(_))
        ));
    }

    #[test]
    fn steady_phase_a_needs_replay() {
        let (cfg, f) = defaults();
        let ch = draw_channels(&cfg, &f, 2, 2);
        let p = make_pilots(cfg.pairs);
        let n = CMatrix::zeros(cfg.antennas, cfg.pairs);
        let err = receive_phase_a(&cfg, &ch, &p, &n, IntervalKind::Steady, None).unwrap_err();
        assert!(matches!(err, Error::MissingState(_)));
    }

    #[test]
    fn dimension_mismatch() {
        let (cfg, f) = defaults();
        let p = make_pilots(cfg.pairs);
        let r = CMatrix::zeros(cfg.antennas, cfg.pairs + 1);
        assert!(matches!(
            estimate_source_first(&r, &p.phi, &cfg, &f),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn single_user_exact_detection() {
        let cfg = SystemConfig {
            pairs: 1,
            antennas: 16,
            coherence: 8,
            ..SystemConfig::default()
        };
        let f = cfg.fading().unwrap();
        let ch = draw_channels(&cfg, &f, 4, 1);
        let sig = draw_signals(&cfg, 4, 1);
        let perfect = ChannelEstimate {
            g_hat: ch.g_s.clone(),
            stats: estimator_stats(&cfg, &f, IntervalKind::First),
            side: Side::Source,
        };
        let r_b = &ch.g_s * &sig.s_b * Complex64::from(cfg.rho_s.sqrt());
        let det = detect_phase_b(&r_b, &perfect, &cfg).unwrap();
        assert!((det.soft - &sig.s_b).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn zero_column_is_numerical_failure() {
        let (cfg, f) = defaults();
        let est = ChannelEstimate {
            g_hat: CMatrix::zeros(cfg.antennas, cfg.pairs),
            stats: estimator_stats(&cfg, &f, IntervalKind::First),
            side: Side::Source,
        };
        let r = CMatrix::zeros(cfg.antennas, cfg.pairs);
        assert!(matches!(detect_phase_b(&r, &est, &cfg), Err(Error::Numerical(_))));
    }

    #[test]
    fn destination_without_source_power_is_clean() {
        let (mut cfg, f) = defaults();
        cfg.rho_s = 0.0;
        let st = estimator_stats(&cfg, &f, IntervalKind::Steady);
        assert!((st.sigma2_d[0] - 1000.0 / 1001.0).abs() < 1e-15);
        let ch = draw_channels(&cfg, &f, 3, 1);
        let p = make_pilots(cfg.pairs);
        let zero = CMatrix::zeros(cfg.antennas, cfg.pairs);
        let src = estimate_source_first(&zero, &p.phi, &cfg, &f).unwrap();
        let r_b = receive_phase_b(&cfg, &ch, &p, &zero.rows(0, cfg.pairs).into_owned(), &zero);
        let dst = estimate_destination(&r_b, &src, &CMatrix::zeros(10, 10), &p.psi, &cfg, &f).unwrap();
        let want = &ch.g_d * Complex64::from(1000.0 / 1001.0);
        assert!((dst.g_hat - want).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn destination_stats_do_not_drift() {
        let (cfg, f) = defaults();
        let a = estimator_stats(&cfg, &f, IntervalKind::of(&cfg, 2));
        let b = estimator_stats(&cfg, &f, IntervalKind::of(&cfg, 5));
        assert_eq!(a, b);
    }
}
