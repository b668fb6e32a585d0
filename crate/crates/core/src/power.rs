//! Source/relay power balancing for the overlay scheme by successive convex
//! approximation.
//!
//! The budget `L * T_d * (K rho_s + rho_d) = E_d` leaves one free variable.
//! Each iteration linearizes every uplink and downlink rate, maximizes the
//! resulting piecewise-linear concave sum of minima exactly over the budget
//! line, and moves towards that maximizer with a line search on the true
//! objective so the objective never decreases.

use std::f64::consts::LN_2;

use crate::config::{Duplex, FadingProfile, LiMode, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::loop_power;
use crate::frame::{frame_accounting, IntervalKind};
use crate::rates::rate_e2e;

/// Source power per user and relay power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair {
    pub rho_s: f64,
    pub rho_d: f64,
}

impl PowerPair {
    fn norm(self) -> f64 {
        self.rho_s.hypot(self.rho_d)
    }
}

/// A rate and its partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Linearization {
    pub value: f64,
    pub d_rho_s: f64,
    pub d_rho_d: f64,
}

/// Uplink and downlink of one pair in one kind of interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkGradient {
    pub kind: IntervalKind,
    /// Intervals of this kind in the frame sequence.
    pub weight: f64,
    pub pair: usize,
    pub uplink: Linearization,
    pub downlink: Linearization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateGradients {
    pub rho: PowerPair,
    pub links: Vec<LinkGradient>,
}

impl RateGradients {
    /// Weighted sum of per-pair minima, bits over all intervals.
    pub fn objective(&self) -> f64 {
        self.links
            .iter()
            .map(|l| l.weight * l.uplink.value.min(l.downlink.value))
            .sum()
    }
}

fn require_overlay(cfg: &SystemConfig) -> Result<()> {
    if cfg.scheme != Scheme::Overlay {
        return Err(Error::ModeMismatch(
            "power allocation is defined for the overlay scheme".into(),
        ));
    }
    Ok(())
}

/// Interval kinds present in the sequence and how many intervals each covers.
fn kind_weights(cfg: &SystemConfig) -> Vec<(IntervalKind, f64)> {
    if cfg.duplex == Duplex::Full && cfg.intervals >= 2 {
        vec![
            (IntervalKind::First, 1.0),
            (IntervalKind::Steady, (cfg.intervals - 1) as f64),
        ]
    } else {
        vec![(IntervalKind::First, cfg.intervals as f64)]
    }
}

/// Quotient rule for `n / d` given the partials of both.
fn quotient(n: f64, dn: (f64, f64), d: f64, dd: (f64, f64)) -> (f64, (f64, f64)) {
    let v = n / d;
    let d2 = d * d;
    (v, ((dn.0 * d - n * dd.0) / d2, (dn.1 * d - n * dd.1) / d2))
}

fn log_rate(slots: f64, gamma: f64, dg: (f64, f64)) -> Linearization {
    let c = slots / (LN_2 * (1.0 + gamma));
    Linearization {
        value: slots * gamma.ln_1p() / LN_2,
        d_rho_s: c * dg.0,
        d_rho_d: c * dg.1,
    }
}

fn add(a: Linearization, b: Linearization) -> Linearization {
    Linearization {
        value: a.value + b.value,
        d_rho_s: a.d_rho_s + b.d_rho_s,
        d_rho_d: a.d_rho_d + b.d_rho_d,
    }
}

/// Uplink and downlink rates (bits per interval) with their partials with
/// respect to `(rho_s, rho_d)`, for every pair and interval kind.
pub fn rate_gradient(rho: PowerPair, cfg: &SystemConfig, fading: &FadingProfile) -> Result<RateGradients> {
    require_overlay(cfg)?;
    if !(rho.rho_s > 0.0 && rho.rho_d > 0.0) {
        return Err(Error::NonPositivePower {
            rho_s: rho.rho_s,
            rho_d: rho.rho_d,
        });
    }
    let c = cfg.with_powers(rho.rho_s, rho.rho_d);
    let f = fading.for_config(&c);
    let frame = frame_accounting(&c);
    let m = c.antennas as f64;
    let kp = c.pairs as f64 * c.rho_p;
    let (rs, rd) = (rho.rho_s, rho.rho_d);
    let full = c.duplex == Duplex::Full;
    let q = loop_power(&c, &f);
    let dq = if full && c.li_mode == LiMode::FixedGain {
        f.beta_li
    } else {
        0.0
    };
    let sum_bs: f64 = f.beta_s.iter().sum();
    let sum_bd: f64 = f.beta_d.iter().sum();

    let mut links = Vec::new();
    for (kind, weight) in kind_weights(&c) {
        let (dist, d_dist) = match kind {
            IntervalKind::Steady => (q + 1.0, dq),
            IntervalKind::First => (1.0, 0.0),
        };
        // Source estimate variances depend on rho_d only, through the pilot disturbance.
        let (sig_s, dsig_s): (Vec<f64>, Vec<f64>) = f
            .beta_s
            .iter()
            .map(|&b| {
                let den = dist + kp * b;
                (kp * b * b / den, -kp * b * b / (den * den) * d_dist)
            })
            .unzip();
        let e: f64 = f.beta_s.iter().zip(&sig_s).map(|(b, s)| b - s).sum();
        let de_d: f64 = -dsig_s.iter().sum::<f64>();
        let (sig_d, dsig_d): (Vec<f64>, Vec<(f64, f64)>) = f
            .beta_d
            .iter()
            .map(|&b| {
                let a = kp * b * b;
                let qd = rs * e + 1.0 + kp * b;
                let (dq_s, dq_d) = (e, rs * de_d);
                let scale = -a / (qd * qd);
                (a / qd, (scale * dq_s, scale * dq_d))
            })
            .unzip();
        let s_tot: f64 = sig_d.iter().sum();
        let ds_tot = dsig_d.iter().fold((0.0, 0.0), |acc, d| (acc.0 + d.0, acc.1 + d.1));

        for k in 0..c.pairs {
            let ss = sig_s[k];
            let dss = (0.0, dsig_s[k]);

            let (gb, dgb) = quotient(
                m * ss * rs,
                (m * ss, m * rs * dss.1),
                rs * sum_bs + c.rho_p * sum_bd + 1.0,
                (sum_bs, 0.0),
            );
            let (qc, dqc) = if full { (q, dq) } else { (0.0, 0.0) };
            let (gc, dgc) = quotient(
                m * ss * rs,
                (m * ss, m * rs * dss.1),
                rs * sum_bs + qc + 1.0,
                (sum_bs, dqc),
            );
            let uplink = add(log_rate(frame.phase_b, gb, dgb), log_rate(frame.phase_c, gc, dgc));

            let sd = sig_d[k];
            let dsd = dsig_d[k];
            let bd = f.beta_d[k];
            let (gd, dgd) = quotient(
                m * sd * sd * rd,
                (2.0 * m * sd * dsd.0 * rd, m * (2.0 * sd * dsd.1 * rd + sd * sd)),
                (rd * bd + 1.0) * s_tot,
                ((rd * bd + 1.0) * ds_tot.0, bd * s_tot + (rd * bd + 1.0) * ds_tot.1),
            );
            let downlink = log_rate(frame.data_len, gd, dgd);
            links.push(LinkGradient {
                kind,
                weight,
                pair: k,
                uplink,
                downlink,
            });
        }
    }
    Ok(RateGradients { rho, links })
}

/// Per-user power scale `P = E_d / (L T_d)`, so that `K rho_s + rho_d = P`.
pub fn power_scale(cfg: &SystemConfig, energy: f64) -> Result<f64> {
    if !(energy.is_finite() && energy > 0.0) {
        return Err(Error::InfeasibleBudget(energy));
    }
    let td = frame_accounting(cfg).data_len;
    if td <= 0.0 {
        return Err(Error::Invariant {
            field: "T_c",
            reason: "frame has no data slots".into(),
        });
    }
    Ok(energy / (cfg.intervals as f64 * td))
}

/// Energy budget that makes `K rho_s + rho_d` equal `total_power`.
pub fn energy_for_power(cfg: &SystemConfig, total_power: f64) -> f64 {
    cfg.intervals as f64 * frame_accounting(cfg).data_len * total_power
}

/// The equal split `rho_d = K rho_s`.
pub fn equal_allocation(cfg: &SystemConfig, energy: f64) -> Result<PowerPair> {
    let p = power_scale(cfg, energy)?;
    Ok(PowerPair {
        rho_s: p / (2.0 * cfg.pairs as f64),
        rho_d: p / 2.0,
    })
}

/// True objective: sum over intervals and pairs of `min(R_UL, R_DL)` in bits.
pub fn objective_at(cfg: &SystemConfig, fading: &FadingProfile, rho: PowerPair) -> f64 {
    let c = cfg.with_powers(rho.rho_s.max(0.0), rho.rho_d.max(0.0));
    let f = fading.for_config(&c);
    rate_e2e(&c, &f).r_system * c.intervals as f64 * c.coherence as f64
}

fn on_line(p: f64, k: f64, x: f64) -> PowerPair {
    PowerPair {
        rho_s: x,
        rho_d: (p - k * x).max(0.0),
    }
}

fn check_feasible(cfg: &SystemConfig, p: f64, rho: PowerPair) -> Result<()> {
    let used = cfg.pairs as f64 * rho.rho_s + rho.rho_d;
    if rho.rho_s < 0.0 || rho.rho_d < 0.0 || (used - p).abs() > 1e-9 * p {
        return Err(Error::Invariant {
            field: "rho",
            reason: format!(
                "({}, {}) violates the budget K rho_s + rho_d = {p}",
                rho.rho_s, rho.rho_d
            ),
        });
    }
    Ok(())
}

/// Maximizer of the linearized problem around `rho_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpStep {
    pub rho: PowerPair,
    /// Linearized objective at `rho`.
    pub model: f64,
    /// Linearized objective at `rho_i` (the true objective there).
    pub model_at_start: f64,
}

/// Exact maximizer of `sum w * min(linearized UL, linearized DL)` on the
/// budget line, found by enumerating the endpoints and every crossing.
pub fn solve_lp_subproblem(
    rho_i: PowerPair,
    cfg: &SystemConfig,
    fading: &FadingProfile,
    energy: f64,
) -> Result<LpStep> {
    let p = power_scale(cfg, energy)?;
    check_feasible(cfg, p, rho_i)?;
    let grads = rate_gradient(rho_i, cfg, fading)?;
    let k = cfg.pairs as f64;
    let x0 = rho_i.rho_s;
    let x_max = p / k;
    // Along the line d rho_d / d rho_s = -K.
    let lines: Vec<(f64, f64, f64, f64, f64)> = grads
        .links
        .iter()
        .map(|l| {
            (
                l.weight,
                l.uplink.value,
                l.uplink.d_rho_s - k * l.uplink.d_rho_d,
                l.downlink.value,
                l.downlink.d_rho_s - k * l.downlink.d_rho_d,
            )
        })
        .collect();
    let model = |x: f64| -> f64 {
        lines
            .iter()
            .map(|(w, u, gu, d, gd)| w * (u + gu * (x - x0)).min(d + gd * (x - x0)))
            .sum()
    };
    let mut candidates = vec![0.0, x_max];
    for (_, u, gu, d, gd) in &lines {
        if gu != gd {
            let x = x0 + (d - u) / (gu - gd);
            if x > 0.0 && x < x_max {
                candidates.push(x);
            }
        }
    }
    let start = model(x0);
    let mut best = (x0, start);
    for x in candidates {
        let v = model(x);
        let tie = (v - best.1).abs() <= 1e-12 * best.1.abs().max(1.0);
        if (v > best.1 && !tie) || (tie && (x - x0).abs() < (best.0 - x0).abs()) {
            best = (x, v);
        }
    }
    Ok(LpStep {
        rho: on_line(p, k, best.0),
        model: best.1,
        model_at_start: start,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSolution {
    pub rho_star: PowerPair,
    /// Sum over intervals and pairs of the end-to-end rates, bits.
    pub objective: f64,
    /// Number of linearized subproblems solved.
    pub iterations: usize,
    /// Iterates and their objectives, starting with the initial point.
    pub trajectory: Vec<(PowerPair, f64)>,
    pub converged: bool,
}

pub const MAX_ITERATIONS: usize = 100;

/// Golden-section maximization of `phi` on `[0, 1]`.
fn golden_max(phi: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (0.0, 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (phi(c), phi(d));
    while b - a > 1e-12 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = phi(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = phi(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, phi(t))
}

/// Runs the iteration from the equal split.
pub fn sca_optimize(cfg: &SystemConfig, fading: &FadingProfile, energy: f64, epsilon: f64) -> Result<PowerSolution> {
    let start = equal_allocation(cfg, energy)?;
    sca_optimize_from(cfg, fading, energy, epsilon, start.rho_s)
}

/// Runs the iteration from `rho_s = rho_s0`, with `rho_d` set by the budget.
pub fn sca_optimize_from(
    cfg: &SystemConfig,
    fading: &FadingProfile,
    energy: f64,
    epsilon: f64,
    rho_s0: f64,
) -> Result<PowerSolution> {
    require_overlay(cfg)?;
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::Invariant {
            field: "epsilon",
            reason: format!("must be positive, got {epsilon}"),
        });
    }
    let p = power_scale(cfg, energy)?;
    let k = cfg.pairs as f64;
    if !(rho_s0 > 0.0 && rho_s0 < p / k) {
        return Err(Error::Invariant {
            field: "rho",
            reason: format!("initial rho_s={rho_s0} must lie strictly inside (0, {})", p / k),
        });
    }
    let eval = |x: f64| objective_at(cfg, fading, on_line(p, k, x));
    let mut rho = on_line(p, k, rho_s0);
    let mut value = eval(rho.rho_s);
    let mut trajectory = vec![(rho, value)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let lp = solve_lp_subproblem(rho, cfg, fading, energy)?;
        let x0 = rho.rho_s;
        let dx = lp.rho.rho_s - x0;
        let (t, v) = golden_max(|t| eval(x0 + t * dx));
        let full = eval(x0 + dx);
        let (t, v) = if full >= v { (1.0, full) } else { (t, v) };
        let next = if v > value { on_line(p, k, x0 + t * dx) } else { rho };
        let step = PowerPair {
            rho_s: next.rho_s - rho.rho_s,
            rho_d: next.rho_d - rho.rho_d,
        };
        let rel = step.norm() / rho.norm();
        if v > value {
            value = v;
        }
        rho = next;
        trajectory.push((rho, value));
        if rel < epsilon {
            converged = true;
            break;
        }
    }
    Ok(PowerSolution {
        rho_star: rho,
        objective: value,
        iterations,
        trajectory,
        converged,
    })
}
