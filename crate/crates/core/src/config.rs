//! Scenario configuration and large-scale fading profiles.
//!
//! Powers are linear and noise-normalized (noise variance 1). Text values for
//! powers may carry a `dB` suffix, e.g. `rho_p = 20dB`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Duplex {
    Half,
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Overlay,
    Conventional,
}

/// How the loop channel reacts when the relay power changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LiMode {
    /// Residual loop power `rho_li` is constant; the loop gain is `rho_li / rho_d`.
    FixedPower,
    /// Loop gain is constant (`rho_li / rho_d` at the configured powers);
    /// the residual power scales with `rho_d`.
    FixedGain,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolAlphabet {
    Gaussian,
    Qpsk,
}

impl fmt::Display for Duplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Duplex::Half => "HD",
            Duplex::Full => "FD",
        })
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Overlay => "overlay",
            Scheme::Conventional => "conventional",
        })
    }
}

impl fmt::Display for LiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiMode::FixedPower => "fixed-power",
            LiMode::FixedGain => "fixed-gain",
        })
    }
}

impl fmt::Display for SymbolAlphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SymbolAlphabet::Gaussian => "gaussian",
            SymbolAlphabet::Qpsk => "qpsk",
        })
    }
}

impl FromStr for Duplex {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "hd" | "half" => Ok(Duplex::Half),
            "fd" | "full" => Ok(Duplex::Full),
            _ => Err("expected HD or FD".into()),
        }
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "overlay" => Ok(Scheme::Overlay),
            "conventional" => Ok(Scheme::Conventional),
            _ => Err("expected overlay or conventional".into()),
        }
    }
}

impl FromStr for LiMode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "fixed-power" | "fixed_power" | "power" => Ok(LiMode::FixedPower),
            "fixed-gain" | "fixed_gain" | "gain" => Ok(LiMode::FixedGain),
            _ => Err("expected fixed-power or fixed-gain".into()),
        }
    }
}

impl FromStr for SymbolAlphabet {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(SymbolAlphabet::Gaussian),
            "qpsk" => Ok(SymbolAlphabet::Qpsk),
            _ => Err("expected gaussian or qpsk".into()),
        }
    }
}

/// Every scalar describing one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Relay antennas `M`.
    pub antennas: usize,
    /// User pairs `K`.
    pub pairs: usize,
    /// Coherence interval length `T_c` in symbol slots.
    pub coherence: usize,
    /// Consecutive coherence intervals `L`.
    pub intervals: usize,
    pub rho_p: f64,
    pub rho_s: f64,
    pub rho_d: f64,
    /// Residual loop-interference power at the relay receiver.
    pub rho_li: f64,
    pub duplex: Duplex,
    pub scheme: Scheme,
    /// Slots lost to relay processing in conventional FD.
    pub fd_proc_delay: usize,
    /// Total data energy `E_d`, used by power allocation only.
    pub energy_budget: Option<f64>,
    /// SCA relative step tolerance.
    pub epsilon: f64,
    pub li_mode: LiMode,
    pub symbols: SymbolAlphabet,
    /// Large-scale gains of the source links; one entry broadcasts to all pairs.
    pub beta_s: Vec<f64>,
    /// Large-scale gains of the destination links; one entry broadcasts to all pairs.
    pub beta_d: Vec<f64>,
    /// Loop gain used in [`LiMode::FixedGain`]; `None` derives it from
    /// `rho_li / rho_d` once at construction.
    pub beta_li_fixed: Option<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            antennas: 128,
            pairs: 10,
            coherence: 40,
            intervals: 10,
            rho_p: 100.0,
            rho_s: 100.0,
            rho_d: 100.0,
            rho_li: 2.0,
            duplex: Duplex::Full,
            scheme: Scheme::Overlay,
            fd_proc_delay: 1,
            energy_budget: None,
            epsilon: 1e-5,
            li_mode: LiMode::FixedPower,
            symbols: SymbolAlphabet::Gaussian,
            beta_s: vec![1.0],
            beta_d: vec![1.0],
            beta_li_fixed: None,
        }
    }
}

/// Keys accepted in a config map, in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "M",
    "K",
    "T_c",
    "L",
    "rho_p",
    "rho_s",
    "rho_d",
    "rho_LI",
    "duplex",
    "scheme",
    "fd_proc_delay",
    "E_d",
    "epsilon",
    "li_mode",
    "symbols",
    "beta_s",
    "beta_d",
    "beta_LI",
];

/// Keys that [`SystemConfig::from_map`] insists on.
pub const REQUIRED_KEYS: &[&str] = &["M", "K", "T_c", "rho_p", "rho_s", "rho_d"];

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.to_string(),
        value: value.to_string(),
        reason: reason.into(),
    }
}

fn parse_usize(key: &str, value: &str) -> Result<usize> {
    value
        .trim()
        .parse::<usize>()
        .map_err(|_| invalid(key, value, "expected a non-negative integer"))
}

/// Parses a real number, converting a trailing `dB` to linear scale.
pub fn parse_real(key: &str, value: &str) -> Result<f64> {
    let v = value.trim();
    let (num, db) = match v.strip_suffix("dB").or_else(|| v.strip_suffix("db")) {
        Some(rest) => (rest.trim(), true),
        None => (v, false),
    };
    let x: f64 = num.parse().map_err(|_| invalid(key, value, "expected a real number"))?;
    if !x.is_finite() {
        return Err(invalid(key, value, "must be finite"));
    }
    Ok(if db { db_to_linear(x) } else { x })
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(invalid(key, value, "expected at least one value"));
    }
    items.iter().map(|s| parse_real(key, s)).collect()
}

fn parse_enum<T: FromStr<Err = String>>(key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|e| invalid(key, value, e))
}

/// Parses a seed given in decimal or `0x` hexadecimal.
pub fn parse_seed(value: &str) -> Result<u64> {
    let v = value.trim();
    let parsed = match v.strip_prefix("0x").or_else(|| v.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => v.parse(),
    };
    parsed.map_err(|_| invalid("seed", value, "expected decimal or 0x-hex u64"))
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl SystemConfig {
    /// Builds a config from a map that must contain every key in [`REQUIRED_KEYS`];
    /// the remaining keys take their defaults.
    pub fn from_map(map: &BTreeMap<String, String>) -> Result<Self> {
        // Parse what is present first so bad values are reported before absences.
        let cfg = Self::from_overrides(map)?;
        for key in REQUIRED_KEYS {
            if !map.contains_key(*key) {
                return Err(Error::MissingKey(key.to_string()));
            }
        }
        Ok(cfg)
    }

    /// Applies the given overrides on top of the defaults and validates the result.
    pub fn from_overrides(map: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = SystemConfig::default();
        for (key, value) in map {
            cfg.set(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets a single key from its text form without validating the whole config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "M" => self.antennas = parse_usize(key, value)?,
            "K" => self.pairs = parse_usize(key, value)?,
            "T_c" => self.coherence = parse_usize(key, value)?,
            "L" => self.intervals = parse_usize(key, value)?,
            "rho_p" => self.rho_p = parse_real(key, value)?,
            "rho_s" => self.rho_s = parse_real(key, value)?,
            "rho_d" => self.rho_d = parse_real(key, value)?,
            "rho_LI" => self.rho_li = parse_real(key, value)?,
            "duplex" => self.duplex = parse_enum(key, value)?,
            "scheme" => self.scheme = parse_enum(key, value)?,
            "fd_proc_delay" => self.fd_proc_delay = parse_usize(key, value)?,
            "E_d" => self.energy_budget = Some(parse_real(key, value)?),
            "epsilon" => self.epsilon = parse_real(key, value)?,
            "li_mode" => self.li_mode = parse_enum(key, value)?,
            "symbols" => self.symbols = parse_enum(key, value)?,
            "beta_s" => self.beta_s = parse_list(key, value)?,
            "beta_d" => self.beta_d = parse_list(key, value)?,
            "beta_LI" => self.beta_li_fixed = Some(parse_real(key, value)?),
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Text form of every key, in [`CONFIG_KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let list = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
        let mut out = vec![
            ("M", self.antennas.to_string()),
            ("K", self.pairs.to_string()),
            ("T_c", self.coherence.to_string()),
            ("L", self.intervals.to_string()),
            ("rho_p", format!("{}", self.rho_p)),
            ("rho_s", format!("{}", self.rho_s)),
            ("rho_d", format!("{}", self.rho_d)),
            ("rho_LI", format!("{}", self.rho_li)),
            ("duplex", self.duplex.to_string()),
            ("scheme", self.scheme.to_string()),
            ("fd_proc_delay", self.fd_proc_delay.to_string()),
            (
                "E_d",
                self.energy_budget
                    .map(|e| format!("{e}"))
                    .unwrap_or_else(|| "none".into()),
            ),
            ("epsilon", format!("{}", self.epsilon)),
            ("li_mode", self.li_mode.to_string()),
            ("symbols", self.symbols.to_string()),
            ("beta_s", list(&self.beta_s)),
            ("beta_d", list(&self.beta_d)),
        ];
        if let Some(b) = self.beta_li_fixed {
            out.push(("beta_LI", format!("{b}")));
        }
        out
    }

    /// Domain checks shared by every entry point: positive sizes, finite
    /// non-negative powers, positive gains of the right length.
    pub fn validate_domain(&self) -> Result<()> {
        let inv = |field: &'static str, reason: String| Err(Error::Invariant { field, reason });
        if self.antennas == 0 {
            return inv("M", "must be at least 1".into());
        }
        if self.pairs == 0 {
            return inv("K", "must be at least 1".into());
        }
        if self.coherence == 0 {
            return inv("T_c", "must be at least 1".into());
        }
        if self.intervals == 0 {
            return inv("L", "must be at least 1".into());
        }
        for (field, v) in [
            ("rho_p", self.rho_p),
            ("rho_s", self.rho_s),
            ("rho_d", self.rho_d),
            ("rho_LI", self.rho_li),
        ] {
            if !v.is_finite() || v < 0.0 {
                return inv(field, format!("power must be finite and non-negative, got {v}"));
            }
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return inv("epsilon", format!("must be positive, got {}", self.epsilon));
        }
        if let Some(e) = self.energy_budget {
            if !e.is_finite() {
                return inv("E_d", format!("must be finite, got {e}"));
            }
        }
        if let Some(b) = self.beta_li_fixed {
            if !b.is_finite() || b < 0.0 {
                return inv("beta_LI", format!("must be finite and non-negative, got {b}"));
            }
        }
        for (field, v) in [("beta_s", &self.beta_s), ("beta_d", &self.beta_d)] {
            if v.len() != 1 && v.len() != self.pairs {
                return inv(
                    field,
                    format!("expected 1 or K={} entries, got {}", self.pairs, v.len()),
                );
            }
            if let Some(b) = v.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
                return inv(field, format!("gains must be positive, got {b}"));
            }
        }
        Ok(())
    }

    /// Full validation: domain checks plus a non-degenerate frame (`T_c > 2K`).
    pub fn validate(&self) -> Result<()> {
        self.validate_domain()?;
        if self.coherence <= 2 * self.pairs {
            return Err(Error::Invariant {
                field: "T_c",
                reason: format!("need T_c > 2K, got T_c={} and K={}", self.coherence, self.pairs),
            });
        }
        Ok(())
    }

    /// Fading profile implied by this config.
    pub fn fading(&self) -> Result<FadingProfile> {
        let expand = |v: &[f64]| {
            if v.len() == 1 {
                vec![v[0]; self.pairs]
            } else {
                v.to_vec()
            }
        };
        FadingProfile::new(expand(&self.beta_s), expand(&self.beta_d), self.loop_gain())
    }

    /// Loop gain `beta_LI` at the configured relay power.
    pub fn loop_gain(&self) -> f64 {
        match (self.li_mode, self.beta_li_fixed) {
            (LiMode::FixedGain, Some(b)) => b,
            _ => {
                if self.rho_d > 0.0 {
                    self.rho_li / self.rho_d
                } else {
                    0.0
                }
            }
        }
    }

    /// Copy with a different relay power, keeping the loop model consistent.
    pub fn with_powers(&self, rho_s: f64, rho_d: f64) -> SystemConfig {
        let mut out = self.clone();
        if self.li_mode == LiMode::FixedGain && out.beta_li_fixed.is_none() {
            out.beta_li_fixed = Some(self.loop_gain());
        }
        out.rho_s = rho_s;
        out.rho_d = rho_d;
        out
    }

    pub fn is_full_duplex(&self) -> bool {
        self.duplex == Duplex::Full
    }
}

/// Large-scale fading of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingProfile {
    pub beta_s: Vec<f64>,
    pub beta_d: Vec<f64>,
    /// Loop gain `beta_LI`; zero when the relay is silent.
    pub beta_li: f64,
}

impl FadingProfile {
    pub fn new(beta_s: Vec<f64>, beta_d: Vec<f64>, beta_li: f64) -> Result<Self> {
        if beta_s.is_empty() || beta_s.len() != beta_d.len() {
            return Err(Error::DimensionMismatch {
                what: "fading profile",
                expected: (beta_s.len(), 1),
                found: (beta_d.len(), 1),
            });
        }
        for b in beta_s.iter().chain(beta_d.iter()) {
            if !(b.is_finite() && *b > 0.0) {
                return Err(Error::Invariant {
                    field: "beta",
                    reason: format!("gains must be positive, got {b}"),
                });
            }
        }
        if !(beta_li.is_finite() && beta_li >= 0.0) {
            return Err(Error::Invariant {
                field: "beta_LI",
                reason: format!("must be finite and non-negative, got {beta_li}"),
            });
        }
        Ok(FadingProfile {
            beta_s,
            beta_d,
            beta_li,
        })
    }

    /// Same gain `beta` on every link.
    pub fn uniform(pairs: usize, beta: f64, beta_li: f64) -> Result<Self> {
        Self::new(vec![beta; pairs], vec![beta; pairs], beta_li)
    }

    pub fn pairs(&self) -> usize {
        self.beta_s.len()
    }

    /// Copy with the loop gain re-derived for `cfg`'s powers.
    pub fn for_config(&self, cfg: &SystemConfig) -> FadingProfile {
        FadingProfile {
            beta_s: self.beta_s.clone(),
            beta_d: self.beta_d.clone(),
            beta_li: cfg.loop_gain(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    fn full() -> BTreeMap<String, String> {
        map(&[
            ("M", "128"),
            ("K", "10"),
            ("T_c", "40"),
            ("rho_p", "100"),
            ("rho_s", "100"),
            ("rho_d", "100"),
        ])
    }

    #[test]
    fn full_map_gives_defaults() {
        let cfg = SystemConfig::from_map(&full()).unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(cfg.fd_proc_delay, 1);
        assert_eq!(cfg.rho_li, 2.0);
    }

    #[test]
    fn missing_key_is_reported() {
        let mut m = full();
        m.remove("T_c");
        assert!(matches!(SystemConfig::from_map(&m), Err(Error::MissingKey(k)) if k == "T_c"));
    }

    #[test]
    fn short_conventional_frame_rejected() {
        let mut m = full();
        m.insert("T_c".into(), "20".into());
        m.insert("scheme".into(), "conventional".into());
        let err = SystemConfig::from_map(&m).unwrap_err();
        assert!(matches!(err, Error::Invariant { field: "T_c", .. }), "{err}");
    }

    #[test]
    fn negative_power_rejected_with_field() {
        let err = SystemConfig::from_map(&map(&[("rho_d", "-1")])).unwrap_err();
        assert!(matches!(err, Error::Invariant { field: "rho_d", .. }), "{err}");
    }

    #[test]
    fn type_error_names_key() {
        let err = SystemConfig::from_overrides(&map(&[("M", "abc")])).unwrap_err();
        assert!(matches!(&err, Error::InvalidValue { key, .. } if key == "M"));
        assert!(err.to_string().contains('M'));
    }

    #[test]
    fn unknown_key_fails_closed() {
        let err = SystemConfig::from_overrides(&map(&[("antennas", "4")])).unwrap_err();
        assert!(matches!(err, Error::UnknownKey(_)));
    }

    #[test]
    fn decibel_suffix() {
        let cfg = SystemConfig::from_overrides(&map(&[("rho_p", "10dB"), ("rho_LI", "3 dB")])).unwrap();
        assert!((cfg.rho_p - 10.0).abs() < 1e-12);
        assert!((cfg.rho_li - 1.995_262_314_968_879_5).abs() < 1e-12);
    }

    #[test]
    fn seeds_decimal_and_hex() {
        assert_eq!(parse_seed("42").unwrap(), 42);
        assert_eq!(parse_seed("0xff").unwrap(), 255);
        assert!(parse_seed("0xzz").is_err());
    }

    #[test]
    fn fading_broadcast_and_loop_gain() {
        let cfg = SystemConfig::default();
        let f = cfg.fading().unwrap();
        assert_eq!(f.beta_s, vec![1.0; 10]);
        assert!((f.beta_li - 0.02).abs() < 1e-15);
        let silent = cfg.with_powers(100.0, 0.0);
        assert_eq!(silent.loop_gain(), 0.0);
    }

    #[test]
    fn fixed_gain_keeps_beta() {
        let cfg = SystemConfig {
            li_mode: LiMode::FixedGain,
            ..SystemConfig::default()
        };
        let moved = cfg.with_powers(50.0, 400.0);
        assert!((moved.loop_gain() - 0.02).abs() < 1e-15);
        let fp = SystemConfig::default().with_powers(50.0, 400.0);
        assert!((fp.loop_gain() - 0.005).abs() < 1e-15);
    }

    #[test]
    fn bad_profile_length() {
        let cfg = SystemConfig {
            beta_s: vec![1.0, 2.0],
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn echo_roundtrip() {
        let cfg = SystemConfig {
            energy_budget: Some(3000.0),
            ..SystemConfig::default()
        };
        let m: BTreeMap<String, String> = cfg.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        assert_eq!(SystemConfig::from_map(&m).unwrap(), cfg);
    }
}
