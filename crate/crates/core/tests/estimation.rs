use mmrelay_core::config::{SymbolAlphabet, SystemConfig};
use mmrelay_core::estimation::{
    estimate_destination, estimate_source_first, estimator_stats, receive_phase_a, receive_phase_b,
};
use mmrelay_core::montecarlo::{
    detection_error_vs_m, simulate_chain_with, ChainOptions, DetectionMode, DetectionScenario,
};
use mmrelay_core::random::{draw_channels, draw_signals, make_pilots, trial_seed};
use mmrelay_core::IntervalKind;

fn small() -> SystemConfig {
    SystemConfig {
        antennas: 64,
        pairs: 4,
        rho_p: 10.0,
        ..SystemConfig::default()
    }
    .with_powers(10.0, 10.0)
}

#[test]
fn estimate_variances_match_closed_form() {
    let cfg = small();
    let f = cfg.fading().unwrap();
    let stats = estimator_stats(&cfg, &f, IntervalKind::First);
    let pilots = make_pilots(cfg.pairs);
    let (mut hat_s, mut err_s, mut cross, mut hat_d) = (0.0, 0.0, 0.0, 0.0);
    let trials = 2000;
    for t in 0..trials {
        let seed = trial_seed(3, t);
        let ch = draw_channels(&cfg, &f, seed, 1);
        let sig = draw_signals(&cfg, seed, 1);
        let r_a = receive_phase_a(&cfg, &ch, &pilots, &sig.n_a, IntervalKind::First, None).unwrap();
        let src = estimate_source_first(&r_a, &pilots.phi, &cfg, &f).unwrap();
        let r_b = receive_phase_b(&cfg, &ch, &pilots, &sig.s_b, &sig.n_b);
        let dst = estimate_destination(&r_b, &src, &sig.s_b, &pilots.psi, &cfg, &f).unwrap();
        for k in 0..cfg.pairs {
            let g = ch.g_s.column(k);
            let h = src.g_hat.column(k);
            let e = g - h;
            hat_s += h.norm_squared();
            err_s += e.norm_squared();
            cross += h.dotc(&e).re;
            hat_d += dst.g_hat.column(k).norm_squared();
        }
    }
    let n = (trials as usize * cfg.pairs * cfg.antennas) as f64;
    let rel = |x: f64, y: f64| (x / n - y).abs() / y;
    assert!(rel(hat_s, stats.sigma2_s[0]) < 0.02);
    assert!(rel(err_s, stats.eps2_s[0]) < 0.02);
    assert!(rel(hat_d, stats.sigma2_d[0]) < 0.02);
    assert!((cross / n).abs() < 0.01 * stats.sigma2_s[0]);
}

#[test]
fn channel_entries_have_configured_power() {
    let cfg = SystemConfig {
        beta_s: vec![0.5, 1.0, 1.5, 2.0],
        ..small()
    };
    let f = cfg.fading().unwrap();
    let mut mean = [num_complex::Complex64::new(0.0, 0.0); 4];
    let mut power = [0.0; 4];
    let trials = 500;
    for t in 0..trials {
        let ch = draw_channels(&cfg, &f, trial_seed(11, t), 1);
        for k in 0..4 {
            for x in ch.g_s.column(k).iter() {
                mean[k] += x;
                power[k] += x.norm_sqr();
            }
        }
    }
    let n = (trials as usize * cfg.antennas) as f64;
    for k in 0..4 {
        assert!((mean[k] / n).norm() < 0.02 * f.beta_s[k].sqrt());
        assert!((power[k] / n - f.beta_s[k]).abs() < 0.02 * f.beta_s[k]);
    }
}

#[test]
fn qpsk_detection_is_reliable_with_many_antennas() {
    let cfg = SystemConfig {
        symbols: SymbolAlphabet::Qpsk,
        ..SystemConfig::default()
    };
    let f = cfg.fading().unwrap();
    let pts = detection_error_vs_m(&cfg, &f, &[512], 200, 9, DetectionScenario::default()).unwrap();
    let ser = pts[0].symbol_error_rate.unwrap();
    assert!(ser < 1e-3, "symbol error rate {ser}");
}

#[test]
fn detected_cancellation_approaches_genie() {
    let f_for = |m| {
        let cfg = SystemConfig {
            antennas: m,
            pairs: 4,
            intervals: 2,
            symbols: SymbolAlphabet::Qpsk,
            ..SystemConfig::default()
        };
        let f = cfg.fading().unwrap();
        let run = |detection| {
            let opts = ChainOptions {
                detection,
                ..ChainOptions::default()
            };
            simulate_chain_with(&cfg, &f, 100, 21, &opts)
                .unwrap()
                .destination_mse
                .mean
        };
        (run(DetectionMode::Genie), run(DetectionMode::Detected))
    };
    let (g16, d16) = f_for(16);
    let (g256, d256) = f_for(256);
    assert!(d16 >= g16 * (1.0 - 1e-3), "{d16} vs {g16}");
    let gap16 = (d16 - g16).abs() / g16;
    let gap256 = (d256 - g256).abs() / g256;
    assert!(gap256 < gap16, "{gap16} -> {gap256}");
}

#[test]
fn noiseless_detection_error_falls_with_antennas() {
    let cfg = SystemConfig::default();
    let f = cfg.fading().unwrap();
    let scenario = DetectionScenario {
        noise: false,
        destination_pilots: false,
        perfect_csi: true,
    };
    let pts = detection_error_vs_m(&cfg, &f, &[32, 128, 512], 50, 4, scenario).unwrap();
    assert!(pts.windows(2).all(|w| w[1].error.mean < w[0].error.mean));
}
