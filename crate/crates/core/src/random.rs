//! Seeded generation of channels, pilots, symbols and noise.
//!
//! Every draw comes from its own ChaCha8 stream keyed by
//! `(seed, interval, purpose)`, so results do not depend on call order or on
//! which thread produced them.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::{FadingProfile, SymbolAlphabet, SystemConfig};
use crate::frame::frame_accounting;

pub type CMatrix = DMatrix<Complex64>;

/// Independent random streams within one interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum Purpose {
    SourceChannel = 1,
    DestinationChannel = 2,
    LoopChannel = 3,
    /// Loop channel seen by the next interval's pilots during the forward phase.
    LoopReplayChannel = 4,
    PhaseBData = 5,
    PhaseCData = 6,
    RelayData = 7,
    NoiseA = 8,
    NoiseB = 9,
    NoiseC = 10,
    DestinationNoise = 11,
}

/// splitmix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` derived from a run seed.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    mix64(mix64(seed) ^ trial.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

/// The stream for `(seed, interval, purpose)`.
pub fn stream(seed: u64, interval: usize, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(((interval as u64) << 8) | purpose as u64);
    rng
}

/// One circularly-symmetric complex Gaussian sample of variance `var`.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// `rows x cols` matrix with i.i.d. CN(0, var[col]) entries.
pub fn gaussian_columns<R: Rng + ?Sized>(rng: &mut R, rows: usize, var: &[f64]) -> CMatrix {
    let mut m = CMatrix::zeros(rows, var.len());
    for (j, v) in var.iter().enumerate() {
        for i in 0..rows {
            m[(i, j)] = complex_normal(rng, *v);
        }
    }
    m
}

/// `rows x cols` matrix with i.i.d. CN(0, var) entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, var: f64) -> CMatrix {
    gaussian_columns(rng, rows, &vec![var; cols])
}

/// Unit-power symbols of the given alphabet.
pub fn symbols<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize, alphabet: SymbolAlphabet) -> CMatrix {
    match alphabet {
        SymbolAlphabet::Gaussian => gaussian_matrix(rng, rows, cols, 1.0),
        SymbolAlphabet::Qpsk => {
            let a = std::f64::consts::FRAC_1_SQRT_2;
            let mut m = CMatrix::zeros(rows, cols);
            for j in 0..cols {
                for i in 0..rows {
                    let bits: u8 = rng.random_range(0..4);
                    let re = if bits & 1 == 0 { a } else { -a };
                    let im = if bits & 2 == 0 { a } else { -a };
                    m[(i, j)] = Complex64::new(re, im);
                }
            }
            m
        }
    }
}

/// Channel realization of one coherence interval.
#[derive(Debug, Clone)]
pub struct ChannelSet {
    /// Source-to-relay channels, `M x K`.
    pub g_s: CMatrix,
    /// Destination-to-relay channels, `M x K`.
    pub g_d: CMatrix,
    /// Relay loop channel, `M x M`; absent in half duplex.
    pub g_li: Option<CMatrix>,
}

/// Draws the channels of interval `interval` (1-based).
pub fn draw_channels(cfg: &SystemConfig, fading: &FadingProfile, seed: u64, interval: usize) -> ChannelSet {
    assert!(interval >= 1, "intervals are numbered from 1");
    let m = cfg.antennas;
    let g_s = gaussian_columns(&mut stream(seed, interval, Purpose::SourceChannel), m, &fading.beta_s);
    let g_d = gaussian_columns(
        &mut stream(seed, interval, Purpose::DestinationChannel),
        m,
        &fading.beta_d,
    );
    let g_li = cfg
        .is_full_duplex()
        .then(|| gaussian_matrix(&mut stream(seed, interval, Purpose::LoopChannel), m, m, fading.beta_li));
    ChannelSet { g_s, g_d, g_li }
}

/// Loop channel coupling the forward phase of `interval` into the pilots of
/// `interval + 1`. Independent of every channel in [`draw_channels`].
pub fn draw_replay_loop(cfg: &SystemConfig, fading: &FadingProfile, seed: u64, interval: usize) -> CMatrix {
    let m = cfg.antennas;
    gaussian_matrix(
        &mut stream(seed, interval, Purpose::LoopReplayChannel),
        m,
        m,
        fading.beta_li,
    )
}

/// Source and destination pilot matrices, rows mutually orthogonal.
#[derive(Debug, Clone)]
pub struct PilotBook {
    /// Source pilots `K x K`.
    pub phi: CMatrix,
    /// Destination pilots `K x K`.
    pub psi: CMatrix,
}

/// Scaled DFT pilots: `phi[k, t] = exp(-2 pi i k t / K) / sqrt(K)`, `psi = conj(phi)`.
pub fn make_pilots(k: usize) -> PilotBook {
    let scale = 1.0 / (k as f64).sqrt();
    let phi = CMatrix::from_fn(k, k, |r, c| {
        let angle = -2.0 * PI * ((r * c) % k) as f64 / k as f64;
        Complex64::from_polar(scale, angle)
    });
    let psi = phi.map(|z| z.conj());
    PilotBook { phi, psi }
}

/// Data and noise of one interval.
#[derive(Debug, Clone)]
pub struct SignalBlock {
    /// Source data overlapping the destination pilots, `K x K`.
    pub s_b: CMatrix,
    /// Remaining source data, `K x (T_d - K)`.
    pub s_c: CMatrix,
    /// Relay forward data, `K x T_d`.
    pub x: CMatrix,
    pub n_a: CMatrix,
    pub n_b: CMatrix,
    pub n_c: CMatrix,
    /// Destination noise, row `k` for destination `k`, `K x T_d`.
    pub z: CMatrix,
}

impl SignalBlock {
    /// Last `K` relay symbols, the ones sent while the next interval's pilots arrive.
    pub fn forward_tail(&self) -> CMatrix {
        let k = self.x.nrows();
        let t = self.x.ncols();
        let take = k.min(t);
        self.x.columns(t - take, take).into_owned()
    }
}

/// Draws the data and noise of interval `interval` (1-based).
pub fn draw_signals(cfg: &SystemConfig, seed: u64, interval: usize) -> SignalBlock {
    assert!(interval >= 1, "intervals are numbered from 1");
    let m = cfg.antennas;
    let k = cfg.pairs;
    let td = frame_accounting(cfg).data_slots();
    let tc_len = td.saturating_sub(k);
    let alphabet = cfg.symbols;
    SignalBlock {
        s_b: symbols(&mut stream(seed, interval, Purpose::PhaseBData), k, k, alphabet),
        s_c: symbols(&mut stream(seed, interval, Purpose::PhaseCData), k, tc_len, alphabet),
        x: symbols(&mut stream(seed, interval, Purpose::RelayData), k, td, alphabet),
        n_a: gaussian_matrix(&mut stream(seed, interval, Purpose::NoiseA), m, k, 1.0),
        n_b: gaussian_matrix(&mut stream(seed, interval, Purpose::NoiseB), m, k, 1.0),
        n_c: gaussian_matrix(&mut stream(seed, interval, Purpose::NoiseC), m, tc_len, 1.0),
        z: gaussian_matrix(&mut stream(seed, interval, Purpose::DestinationNoise), k, td, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::Duplex;

    fn fading(cfg: &SystemConfig) -> FadingProfile {
        cfg.fading().unwrap()
    }

    #[test]
    fn channels_are_deterministic() {
        let cfg = SystemConfig::default();
        let f = fading(&cfg);
        let a = draw_channels(&cfg, &f, 7, 3);
        let b = draw_channels(&cfg, &f, 7, 3);
        assert_eq!(a.g_s, b.g_s);
        assert_eq!(a.g_d, b.g_d);
        assert_eq!(a.g_li, b.g_li);
        let c = draw_channels(&cfg, &f, 7, 4);
        assert_ne!(a.g_s, c.g_s);
        assert_ne!(a.g_s, a.g_d);
    }

    #[test]
    fn half_duplex_has_no_loop() {
        let cfg = SystemConfig {
            duplex: Duplex::Half,
            ..SystemConfig::default()
        };
        assert!(draw_channels(&cfg, &fading(&cfg), 1, 1).g_li.is_none());
        assert!(draw_channels(&SystemConfig::default(), &fading(&cfg), 1, 1)
            .g_li
            .is_some());
    }

    #[test]
    fn column_power_matches_gain() {
        let cfg = SystemConfig {
            antennas: 64,
            pairs: 4,
            coherence: 20,
            ..SystemConfig::default()
        };
        let f = FadingProfile::new(vec![1.0, 0.5, 2.0, 1.0], vec![1.0; 4], 0.02).unwrap();
        let draws = 4000;
        let mut acc = [0.0; 4];
        for t in 0..draws {
            let ch = draw_channels(&cfg, &f, trial_seed(11, t), 1);
            for (k, a) in acc.iter_mut().enumerate() {
                *a += ch.g_s.column(k).norm_squared() / 64.0;
            }
        }
        for (k, a) in acc.iter().enumerate() {
            let mean = a / draws as f64;
            assert!((mean / f.beta_s[k] - 1.0).abs() < 0.01, "k={k} mean={mean}");
        }
    }

    #[test]
    fn pilots_unitary() {
        for k in [1, 2, 4, 7, 10, 16] {
            let p = make_pilots(k);
            for m in [&p.phi, &p.psi] {
                let g = m * m.adjoint();
                let eye = CMatrix::identity(k, k);
                assert!((g - eye).iter().all(|z| z.norm() < 1e-12));
            }
        }
        let one = make_pilots(1);
        assert_eq!(one.phi[(0, 0)], Complex64::new(1.0, 0.0));
    }

    #[test]
    fn symbol_power() {
        let mut rng = stream(3, 1, Purpose::PhaseCData);
        for alphabet in [SymbolAlphabet::Gaussian, SymbolAlphabet::Qpsk] {
            let s = symbols(&mut rng, 1000, 1000, alphabet);
            let p = s.iter().map(|z| z.norm_sqr()).sum::<f64>() / 1e6;
            assert!((p - 1.0).abs() < 0.005, "{alphabet}: {p}");
        }
    }

    #[test]
    fn signal_shapes() {
        let cfg = SystemConfig::default();
        let s = draw_signals(&cfg, 5, 2);
        assert_eq!(s.s_b.shape(), (10, 10));
        assert_eq!(s.s_c.shape(), (10, 20));
        assert_eq!(s.x.shape(), (10, 30));
        assert_eq!(s.n_a.shape(), (128, 10));
        assert_eq!(s.n_c.shape(), (128, 20));
        assert_eq!(s.z.shape(), (10, 30));
        assert_eq!(s.forward_tail(), s.x.columns(20, 10).into_owned());
    }
}
