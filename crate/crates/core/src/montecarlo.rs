//! Transmission-chain simulation with instantaneous channels.
//!
//! Each trial runs `L` consecutive intervals: pilot reception and source
//! estimation, overlapped data with destination pilots, the remaining
//! uplink, and the MRT downlink whose tail leaks into the next interval's
//! pilots in full duplex. Instantaneous SINRs are formed from the realized
//! signal and interference terms with the estimates as combiner and precoder.
//!
//! Trials run in parallel. Per-trial outputs are collected in trial order and
//! reduced with [`pairwise_sum`], so results do not depend on the thread count.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::config::{Duplex, FadingProfile, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{
    detect_phase_b, estimate_destination, estimate_source_first, estimate_source_steady, estimator_stats, loop_power,
    receive_phase_a, receive_phase_b, ChannelEstimate, EstimatorStats, LoopReplay, Side,
};
use crate::frame::{frame_accounting, FrameAccounting, IntervalKind};
use crate::random::{draw_channels, draw_replay_loop, draw_signals, make_pilots, trial_seed, CMatrix, PilotBook};
use crate::rates::log2_1p;
use crate::stats::{mean_se, pairwise_sum, MeanSe};

/// Symbols used to cancel the source data before destination estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetectionMode {
    /// The transmitted symbols.
    Genie,
    /// The MRC detector output (hard decisions for QPSK).
    Detected,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub detection: DetectionMode,
    /// Upper bound on `M * K * trials`.
    pub work_budget: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            detection: DetectionMode::Genie,
            work_budget: 2e9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Moment {
    /// Mean of `g_dk^H ghat_dk`.
    ExpectedGain,
    /// Variance of `g_dk^H ghat_dk`.
    GainVariance,
    /// Downlink multi-pair interference power.
    DownlinkMi,
    /// Uplink multi-pair interference power.
    UplinkMi,
    /// Destination-pilot interference on the overlapped uplink.
    PilotInterference,
    /// Loop interference on the uplink.
    LoopInterference,
    /// Amplified noise on the uplink.
    UplinkNoise,
}

impl Moment {
    pub const ALL: [Moment; 7] = [
        Moment::ExpectedGain,
        Moment::GainVariance,
        Moment::DownlinkMi,
        Moment::UplinkMi,
        Moment::PilotInterference,
        Moment::LoopInterference,
        Moment::UplinkNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Moment::ExpectedGain => "E_gg",
            Moment::GainVariance => "Var_gg",
            Moment::DownlinkMi => "MI_DL",
            Moment::UplinkMi => "MI_UL",
            Moment::PilotInterference => "PI_UL",
            Moment::LoopInterference => "LI_UL",
            Moment::UplinkNoise => "AN_UL",
        }
    }
}

/// Sample moment pooled over pairs. Each pair's samples are divided by the
/// pair's closed-form value before pooling.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEntry {
    pub moment: Moment,
    /// `ratio * target`.
    pub estimate: f64,
    /// Closed-form value averaged over pairs.
    pub target: f64,
    /// Sample over closed form.
    pub ratio: f64,
    pub ratio_se: f64,
    /// Ratio against the squared-loop-gain variant, for the loop moment only.
    pub alt_ratio: Option<f64>,
}

impl MomentEntry {
    /// Within `rel` relative and `z` standard errors of the closed form.
    pub fn agrees(&self, rel: f64, z: f64) -> bool {
        let d = (self.ratio - 1.0).abs();
        d <= rel && d <= z * self.ratio_se
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentTable {
    pub entries: Vec<MomentEntry>,
    /// Number of (trial, interval) samples per pair.
    pub samples: usize,
}

impl MomentTable {
    pub fn get(&self, moment: Moment) -> Option<&MomentEntry> {
        self.entries.iter().find(|e| e.moment == moment)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    /// Empirical ergodic system rate in bits/s/Hz.
    pub r_system: f64,
    pub r_system_se: f64,
    /// Per-pair mean uplink and downlink rates, bits per interval.
    pub r_ul: Vec<f64>,
    pub r_dl: Vec<f64>,
    pub moments: MomentTable,
    /// Mean of `||g_dk - ghat_dk||^2 / M` over pairs and intervals.
    pub destination_mse: MeanSe,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Unit {
    gain: Complex64,
    mi_dl: f64,
    mi_ul: f64,
    pi: f64,
    li: f64,
    an: f64,
}

struct TrialSamples {
    ul: Vec<f64>,
    dl: Vec<f64>,
    /// Per reference interval, one entry per pair.
    units: Vec<Vec<Unit>>,
    dest_mse: f64,
}

fn ratio_or_zero(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn reference_kind(cfg: &SystemConfig) -> IntervalKind {
    if cfg.intervals >= 2 {
        IntervalKind::of(cfg, 2)
    } else {
        IntervalKind::First
    }
}

fn check_budget(work: f64, budget: f64) -> Result<()> {
    if work > budget {
        return Err(Error::ResourceBudget {
            requested: work,
            budget,
        });
    }
    Ok(())
}

fn source_estimate(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    pilots: &PilotBook,
    r_a: &CMatrix,
    kind: IntervalKind,
) -> Result<ChannelEstimate> {
    match kind {
        IntervalKind::First => estimate_source_first(r_a, &pilots.phi, cfg, fading),
        IntervalKind::Steady => estimate_source_steady(r_a, &pilots.phi, cfg, fading),
    }
}

fn run_trial(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    pilots: &PilotBook,
    frame: &FrameAccounting,
    seed: u64,
    opts: &ChainOptions,
) -> Result<TrialSamples> {
    let k = cfg.pairs;
    let m = cfg.antennas as f64;
    let overlay = cfg.scheme == Scheme::Overlay;
    let full = cfg.duplex == Duplex::Full;
    let ref_kind = reference_kind(cfg);
    let mut out = TrialSamples {
        ul: Vec::with_capacity(cfg.intervals * k),
        dl: Vec::with_capacity(cfg.intervals * k),
        units: Vec::new(),
        dest_mse: 0.0,
    };
    let mut replay: Option<LoopReplay> = None;
    let mut mse_acc = Vec::with_capacity(cfg.intervals);
    for iota in 1..=cfg.intervals {
        let kind = IntervalKind::of(cfg, iota);
        let ch = draw_channels(cfg, fading, seed, iota);
        let sig = draw_signals(cfg, seed, iota);
        let r_a = receive_phase_a(cfg, &ch, pilots, &sig.n_a, kind, replay.as_ref())?;
        let src = source_estimate(cfg, fading, pilots, &r_a, kind)?;
        let r_b = receive_phase_b(cfg, &ch, pilots, &sig.s_b, &sig.n_b);
        let dst = match opts.detection {
            DetectionMode::Genie => estimate_destination(&r_b, &src, &sig.s_b, &pilots.psi, cfg, fading)?,
            DetectionMode::Detected if overlay => {
                let det = detect_phase_b(&r_b, &src, cfg)?;
                let s_b = det.hard.unwrap_or(det.soft);
                estimate_destination(&r_b, &src, &s_b, &pilots.psi, cfg, fading)?
            }
            DetectionMode::Detected => estimate_destination(&r_b, &src, &sig.s_b, &pilots.psi, cfg, fading)?,
        };
        let alpha = dst.stats.alpha;
        let a2 = alpha * alpha;

        let gs_h = src.g_hat.adjoint();
        let c = &gs_h * &ch.g_s;
        let p = overlay.then(|| &gs_h * &ch.g_d);
        let q = match (&ch.g_li, full) {
            (Some(g_li), true) => Some(&gs_h * (g_li * &dst.g_hat)),
            _ => None,
        };
        let d = ch.g_d.adjoint() * &dst.g_hat;

        let mut units = Vec::with_capacity(k);
        let mut mse = 0.0;
        for i in 0..k {
            let row_power = |mat: &CMatrix, skip: Option<usize>| -> f64 {
                (0..k)
                    .filter(|j| Some(*j) != skip)
                    .map(|j| mat[(i, j)].norm_sqr())
                    .sum()
            };
            let sig_ul = cfg.rho_s * c[(i, i)].norm_sqr();
            let mi_ul = cfg.rho_s * row_power(&c, Some(i));
            let pi = p.as_ref().map_or(0.0, |p| cfg.rho_p * row_power(p, None));
            let li = q.as_ref().map_or(0.0, |q| cfg.rho_d * a2 * row_power(q, None));
            let an = src.g_hat.column(i).norm_squared();
            let sig_dl = cfg.rho_d * a2 * d[(i, i)].norm_sqr();
            let mi_dl = cfg.rho_d * a2 * row_power(&d, Some(i));

            let gamma_b = ratio_or_zero(sig_ul, mi_ul + pi + an);
            let gamma_c = ratio_or_zero(sig_ul, mi_ul + li + an);
            let gamma_dl = sig_dl / (mi_dl + 1.0);
            out.ul
                .push(frame.phase_b * log2_1p(gamma_b) + frame.phase_c * log2_1p(gamma_c));
            out.dl.push(frame.data_len * log2_1p(gamma_dl));

            mse += (ch.g_d.column(i) - dst.g_hat.column(i)).norm_squared() / m;
            units.push(Unit {
                gain: d[(i, i)],
                mi_dl,
                mi_ul,
                pi,
                li,
                an,
            });
        }
        mse_acc.push(mse / k as f64);
        if kind == ref_kind {
            out.units.push(units);
        }
        if full && overlay && iota < cfg.intervals {
            replay = Some(LoopReplay {
                alpha,
                g_hat_d: dst.g_hat,
                x_tail: sig.forward_tail(),
                g_li: draw_replay_loop(cfg, fading, seed, iota),
            });
        }
    }
    out.dest_mse = pairwise_sum(&mse_acc) / mse_acc.len() as f64;
    Ok(out)
}

struct Targets {
    values: Vec<(Moment, Vec<f64>, Option<Vec<f64>>)>,
}

fn moment_targets(cfg: &SystemConfig, fading: &FadingProfile, stats: &EstimatorStats) -> Targets {
    let k = cfg.pairs;
    let m = cfg.antennas as f64;
    let a2 = stats.alpha * stats.alpha;
    let sum_sd: f64 = stats.sigma2_d.iter().sum();
    let sum_bs: f64 = fading.beta_s.iter().sum();
    let sum_bd: f64 = fading.beta_d.iter().sum();
    let per = |f: &dyn Fn(usize) -> f64| (0..k).map(f).collect::<Vec<f64>>();
    let mut values = vec![
        (Moment::ExpectedGain, per(&|i| m * stats.sigma2_d[i]), None),
        (
            Moment::GainVariance,
            per(&|i| m * fading.beta_d[i] * stats.sigma2_d[i]),
            None,
        ),
        (
            Moment::DownlinkMi,
            per(&|i| m * cfg.rho_d * a2 * fading.beta_d[i] * (sum_sd - stats.sigma2_d[i])),
            None,
        ),
        (
            Moment::UplinkMi,
            per(&|i| m * cfg.rho_s * stats.sigma2_s[i] * (sum_bs - fading.beta_s[i])),
            None,
        ),
    ];
    if cfg.scheme == Scheme::Overlay {
        values.push((
            Moment::PilotInterference,
            per(&|i| m * cfg.rho_p * stats.sigma2_s[i] * sum_bd),
            None,
        ));
    }
    if cfg.duplex == Duplex::Full {
        let li = loop_power(cfg, fading);
        let alt = cfg.rho_d * fading.beta_li * fading.beta_li;
        values.push((
            Moment::LoopInterference,
            per(&|i| m * li * stats.sigma2_s[i]),
            Some(per(&|i| m * alt * stats.sigma2_s[i])),
        ));
    }
    values.push((Moment::UplinkNoise, per(&|i| m * stats.sigma2_s[i]), None));
    Targets { values }
}

fn unit_value(moment: Moment, u: &Unit) -> f64 {
    match moment {
        Moment::ExpectedGain => u.gain.re,
        Moment::GainVariance => unreachable!("variance is pooled separately"),
        Moment::DownlinkMi => u.mi_dl,
        Moment::UplinkMi => u.mi_ul,
        Moment::PilotInterference => u.pi,
        Moment::LoopInterference => u.li,
        Moment::UplinkNoise => u.an,
    }
}

fn reduce_moments(samples: &[TrialSamples], targets: &Targets, k: usize) -> MomentTable {
    let units: Vec<&Vec<Unit>> = samples.iter().flat_map(|s| s.units.iter()).collect();
    let n = units.len();
    let mut entries = Vec::new();
    for (moment, target, alt) in &targets.values {
        if n == 0 || target.iter().any(|t| t.is_nan() || *t <= 0.0) {
            continue;
        }
        let mean_target = pairwise_sum(target) / k as f64;
        let (ratio, ratio_se) = if *moment == Moment::GainVariance {
            let mut ratio_sum = Vec::with_capacity(k);
            let mut se2 = Vec::with_capacity(k);
            for i in 0..k {
                let xs: Vec<Complex64> = units.iter().map(|u| u[i].gain).collect();
                let mean_re = pairwise_sum(&xs.iter().map(|x| x.re).collect::<Vec<_>>()) / n as f64;
                let mean_im = pairwise_sum(&xs.iter().map(|x| x.im).collect::<Vec<_>>()) / n as f64;
                let centre = Complex64::new(mean_re, mean_im);
                let dev: Vec<f64> = xs.iter().map(|x| (x - centre).norm_sqr()).collect();
                let ms = mean_se(&dev);
                let corr = n as f64 / (n as f64 - 1.0).max(1.0);
                ratio_sum.push(ms.mean * corr / target[i]);
                se2.push((ms.se * corr / target[i]).powi(2));
            }
            (
                pairwise_sum(&ratio_sum) / k as f64,
                pairwise_sum(&se2).sqrt() / k as f64,
            )
        } else {
            let pooled: Vec<f64> = units
                .iter()
                .map(|u| {
                    let r: Vec<f64> = (0..k).map(|i| unit_value(*moment, &u[i]) / target[i]).collect();
                    pairwise_sum(&r) / k as f64
                })
                .collect();
            let ms = mean_se(&pooled);
            (ms.mean, ms.se)
        };
        let alt_ratio = alt.as_ref().map(|a| {
            let mean_alt = pairwise_sum(a) / k as f64;
            ratio * mean_target / mean_alt
        });
        entries.push(MomentEntry {
            moment: *moment,
            estimate: ratio * mean_target,
            target: mean_target,
            ratio,
            ratio_se,
            alt_ratio,
        });
    }
    MomentTable { entries, samples: n }
}

/// Simulates `trials` independent runs of the chain with genie cancellation.
pub fn simulate_chain(cfg: &SystemConfig, fading: &FadingProfile, trials: usize, seed: u64) -> Result<TrialResult> {
    simulate_chain_with(cfg, fading, trials, seed, &ChainOptions::default())
}

pub fn simulate_chain_with(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    trials: usize,
    seed: u64,
    opts: &ChainOptions,
) -> Result<TrialResult> {
    if trials == 0 {
        return Err(Error::Invariant {
            field: "trials",
            reason: "need at least one trial".into(),
        });
    }
    cfg.validate_domain()?;
    if fading.pairs() != cfg.pairs {
        return Err(Error::DimensionMismatch {
            what: "fading profile",
            expected: (cfg.pairs, 1),
            found: (fading.pairs(), 1),
        });
    }
    check_budget(cfg.antennas as f64 * cfg.pairs as f64 * trials as f64, opts.work_budget)?;
    let frame = frame_accounting(cfg);
    let pilots = make_pilots(cfg.pairs);
    let samples: Vec<TrialSamples> = (0..trials as u64)
        .into_par_iter()
        .map(|t| run_trial(cfg, fading, &pilots, &frame, trial_seed(seed, t), opts))
        .collect::<Result<Vec<_>>>()?;

    let k = cfg.pairs;
    let units = cfg.intervals * k;
    let norm = cfg.intervals as f64 * cfg.coherence as f64;
    let column =
        |u: usize, ul: bool| -> Vec<f64> { samples.iter().map(|s| if ul { s.ul[u] } else { s.dl[u] }).collect() };
    let n = trials as f64;
    let ul_mean: Vec<f64> = (0..units).map(|u| pairwise_sum(&column(u, true)) / n).collect();
    let dl_mean: Vec<f64> = (0..units).map(|u| pairwise_sum(&column(u, false)) / n).collect();
    let uplink_binds: Vec<bool> = ul_mean.iter().zip(&dl_mean).map(|(u, d)| u <= d).collect();
    let per_trial: Vec<f64> = samples
        .iter()
        .map(|s| {
            let v: Vec<f64> = (0..units)
                .map(|u| if uplink_binds[u] { s.ul[u] } else { s.dl[u] })
                .collect();
            pairwise_sum(&v) / norm
        })
        .collect();
    let mins: Vec<f64> = ul_mean.iter().zip(&dl_mean).map(|(u, d)| u.min(*d)).collect();
    let r_system = pairwise_sum(&mins) / norm;
    let r_system_se = mean_se(&per_trial).se;
    let per_pair = |means: &[f64]| -> Vec<f64> {
        (0..k)
            .map(|i| {
                let v: Vec<f64> = (0..cfg.intervals).map(|l| means[l * k + i]).collect();
                pairwise_sum(&v) / cfg.intervals as f64
            })
            .collect()
    };

    let stats = estimator_stats(cfg, fading, reference_kind(cfg));
    let moments = reduce_moments(&samples, &moment_targets(cfg, fading, &stats), k);
    let mse: Vec<f64> = samples.iter().map(|s| s.dest_mse).collect();
    Ok(TrialResult {
        r_system,
        r_system_se,
        r_ul: per_pair(&ul_mean),
        r_dl: per_pair(&dl_mean),
        moments,
        destination_mse: mean_se(&mse),
        trials,
        seed,
    })
}

/// Sample moments of the chain against their closed forms.
pub fn moment_oracles(cfg: &SystemConfig, fading: &FadingProfile, trials: usize, seed: u64) -> Result<MomentTable> {
    Ok(simulate_chain(cfg, fading, trials, seed)?.moments)
}

/// Impairments present in a detection study.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectionScenario {
    pub noise: bool,
    pub destination_pilots: bool,
    /// Detect with the true source channels instead of their estimates.
    pub perfect_csi: bool,
}

impl Default for DetectionScenario {
    fn default() -> Self {
        DetectionScenario {
            noise: true,
            destination_pilots: true,
            perfect_csi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionPoint {
    pub antennas: usize,
    /// Mean over pairs of `||shat_k - s_k|| / ||s_k||`.
    pub error: MeanSe,
    /// Fraction of wrong hard decisions (QPSK only).
    pub symbol_error_rate: Option<f64>,
}

/// Relative phase-B detection error for each antenna count in `antennas`.
pub fn detection_error_vs_m(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    antennas: &[usize],
    trials: usize,
    seed: u64,
    scenario: DetectionScenario,
) -> Result<Vec<DetectionPoint>> {
    if antennas.is_empty() || antennas.windows(2).any(|w| w[0] >= w[1]) || antennas[0] == 0 {
        return Err(Error::Invariant {
            field: "M_list",
            reason: "antenna counts must be positive and strictly ascending".into(),
        });
    }
    if trials == 0 {
        return Err(Error::Invariant {
            field: "trials",
            reason: "need at least one trial".into(),
        });
    }
    let budget = ChainOptions::default().work_budget;
    let k = cfg.pairs;
    let pilots = make_pilots(k);
    antennas
        .iter()
        .map(|&m| {
            check_budget(m as f64 * k as f64 * trials as f64, budget)?;
            let c = SystemConfig {
                antennas: m,
                ..cfg.clone()
            };
            let per_trial: Vec<(f64, usize)> = (0..trials as u64)
                .into_par_iter()
                .map(|t| detection_trial(&c, fading, &pilots, trial_seed(seed, t), scenario))
                .collect::<Result<Vec<_>>>()?;
            let errs: Vec<f64> = per_trial.iter().map(|p| p.0).collect();
            let wrong: usize = per_trial.iter().map(|p| p.1).sum();
            Ok(DetectionPoint {
                antennas: m,
                error: mean_se(&errs),
                symbol_error_rate: (c.symbols == crate::config::SymbolAlphabet::Qpsk)
                    .then(|| wrong as f64 / (trials * k * k) as f64),
            })
        })
        .collect()
}

fn detection_trial(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    pilots: &PilotBook,
    seed: u64,
    scenario: DetectionScenario,
) -> Result<(f64, usize)> {
    let k = cfg.pairs;
    let ch = draw_channels(cfg, fading, seed, 1);
    let sig = draw_signals(cfg, seed, 1);
    let zeros = CMatrix::zeros(cfg.antennas, k);
    let source = if scenario.perfect_csi {
        ChannelEstimate {
            g_hat: ch.g_s.clone(),
            stats: estimator_stats(cfg, fading, IntervalKind::First),
            side: Side::Source,
        }
    } else {
        let n_a = if scenario.noise { &sig.n_a } else { &zeros };
        let r_a = receive_phase_a(cfg, &ch, pilots, n_a, IntervalKind::First, None)?;
        estimate_source_first(&r_a, &pilots.phi, cfg, fading)?
    };
    let mut r_b = &ch.g_s * &sig.s_b * Complex64::from(cfg.rho_s.sqrt());
    if scenario.destination_pilots {
        r_b += &ch.g_d * &pilots.psi * Complex64::from((k as f64 * cfg.rho_p).sqrt());
    }
    if scenario.noise {
        r_b += &sig.n_b;
    }
    let det = detect_phase_b(&r_b, &source, cfg)?;
    let rel: Vec<f64> = (0..k)
        .map(|i| (det.soft.row(i) - sig.s_b.row(i)).norm() / sig.s_b.row(i).norm())
        .collect();
    let wrong = det.hard.as_ref().map_or(0, |h| {
        h.iter()
            .zip(sig.s_b.iter())
            .filter(|(a, b)| (*a - *b).norm() > 1e-9)
            .count()
    });
    Ok((pairwise_sum(&rel) / k as f64, wrong))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (SystemConfig, FadingProfile) {
        let cfg = SystemConfig {
            antennas: 32,
            pairs: 4,
            coherence: 16,
            intervals: 3,
            ..SystemConfig::default()
        };
        let f = cfg.fading().unwrap();
        (cfg, f)
    }

    #[test]
    fn reproducible() {
        let (cfg, f) = small();
        let a = simulate_chain(&cfg, &f, 20, 5).unwrap();
        let b = simulate_chain(&cfg, &f, 20, 5).unwrap();
        assert_eq!(a, b);
        let c = simulate_chain(&cfg, &f, 20, 6).unwrap();
        assert_ne!(a.r_system, c.r_system);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let (cfg, f) = small();
        let par = simulate_chain(&cfg, &f, 16, 9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| simulate_chain(&cfg, &f, 16, 9).unwrap());
        assert_eq!(par, serial);
    }

    #[test]
    fn silent_system() {
        let (cfg, _) = small();
        let quiet = cfg.with_powers(0.0, 0.0);
        let f = quiet.fading().unwrap();
        let r = simulate_chain(&quiet, &f, 5, 1).unwrap();
        assert_eq!(r.r_system, 0.0);
        assert!(r.r_ul.iter().chain(&r.r_dl).all(|x| *x == 0.0));
    }

    #[test]
    fn zero_trials_rejected() {
        let (cfg, f) = small();
        assert!(simulate_chain(&cfg, &f, 0, 1).is_err());
    }

    #[test]
    fn budget_guard() {
        let (cfg, f) = small();
        let opts = ChainOptions {
            work_budget: 100.0,
            ..ChainOptions::default()
        };
        assert!(matches!(
            simulate_chain_with(&cfg, &f, 10, 1, &opts),
            Err(Error::ResourceBudget { .. })
        ));
    }

    #[test]
    fn table_contents_follow_mode() {
        let (cfg, f) = small();
        let fd = moment_oracles(&cfg, &f, 4, 2).unwrap();
        assert_eq!(fd.entries.len(), 7);
        assert_eq!(fd.samples, 4 * 2);
        let hd_cfg = SystemConfig {
            duplex: Duplex::Half,
            ..cfg.clone()
        };
        let hd = moment_oracles(&hd_cfg, &f, 4, 2).unwrap();
        assert!(hd.get(Moment::LoopInterference).is_none());
        assert_eq!(hd.samples, 4 * 3);
        let conv = SystemConfig {
            scheme: Scheme::Conventional,
            coherence: 20,
            ..cfg
        };
        let c = moment_oracles(&conv, &f, 4, 2).unwrap();
        assert!(c.get(Moment::PilotInterference).is_none());
    }

    #[test]
    fn single_user_noiseless_detection_is_exact() {
        let cfg = SystemConfig {
            pairs: 1,
            antennas: 8,
            coherence: 4,
            ..SystemConfig::default()
        };
        let f = cfg.fading().unwrap();
        let scenario = DetectionScenario {
            noise: false,
            destination_pilots: false,
            perfect_csi: true,
        };
        let pts = detection_error_vs_m(&cfg, &f, &[8, 16], 10, 3, scenario).unwrap();
        for p in pts {
            assert!(p.error.mean < 1e-12, "{p:?}");
        }
    }

    #[test]
    fn antenna_list_must_ascend() {
        let (cfg, f) = small();
        let s = DetectionScenario::default();
        assert!(detection_error_vs_m(&cfg, &f, &[64, 32], 2, 1, s).is_err());
        assert!(detection_error_vs_m(&cfg, &f, &[], 2, 1, s).is_err());
    }
}
