//! Parameter sweeps written as CSV.
//!
//! A spec file is a list of `key = value` lines. Scenario keys are those of
//! [`SystemConfig`]; the experiment keys are `experiment`, `sweep`, `trials`,
//! `seed`, `output` and `montecarlo`. Lines starting with `#` are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;

use crate::config::{db_to_linear, parse_seed, Duplex, Scheme, SystemConfig};
use crate::error::{Error, Result};
use crate::frame::frame_accounting;
use crate::montecarlo::simulate_chain;
use crate::power::{energy_for_power, equal_allocation, objective_at, sca_optimize};
use crate::random::mix64;
use crate::rates::rate_e2e;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentName {
    RateVsSnr,
    RateVsAntennas,
    RateVsCoherence,
    RateVsPairs,
    PowallocVsBudget,
    ScaConvergence,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 6] = [
        ExperimentName::RateVsSnr,
        ExperimentName::RateVsAntennas,
        ExperimentName::RateVsCoherence,
        ExperimentName::RateVsPairs,
        ExperimentName::PowallocVsBudget,
        ExperimentName::ScaConvergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentName::RateVsSnr => "rate-vs-snr",
            ExperimentName::RateVsAntennas => "rate-vs-antennas",
            ExperimentName::RateVsCoherence => "rate-vs-coherence",
            ExperimentName::RateVsPairs => "rate-vs-pairs",
            ExperimentName::PowallocVsBudget => "powalloc-vs-budget",
            ExperimentName::ScaConvergence => "sca-convergence",
        }
    }

    /// Name of the swept quantity.
    pub fn axis(self) -> &'static str {
        match self {
            ExperimentName::RateVsSnr => "snr_db",
            ExperimentName::RateVsAntennas => "M",
            ExperimentName::RateVsCoherence => "T_c",
            ExperimentName::RateVsPairs => "K",
            ExperimentName::PowallocVsBudget | ExperimentName::ScaConvergence => "budget_db",
        }
    }

    pub fn default_sweep(self) -> Vec<f64> {
        let range = |lo: i32, hi: i32, step: i32| (lo..=hi).step_by(step as usize).map(f64::from).collect();
        match self {
            ExperimentName::RateVsSnr => range(-30, 30, 5),
            ExperimentName::RateVsAntennas => vec![16.0, 32.0, 64.0, 128.0, 256.0, 512.0, 1024.0],
            ExperimentName::RateVsCoherence => range(20, 300, 20),
            ExperimentName::RateVsPairs => range(1, 20, 1),
            ExperimentName::PowallocVsBudget => range(-10, 60, 5),
            ExperimentName::ScaConvergence => vec![20.0],
        }
    }

    fn integer_axis(self) -> bool {
        matches!(
            self,
            ExperimentName::RateVsAntennas | ExperimentName::RateVsCoherence | ExperimentName::RateVsPairs
        )
    }

    fn is_power_allocation(self) -> bool {
        matches!(self, ExperimentName::PowallocVsBudget | ExperimentName::ScaConvergence)
    }
}

impl FromStr for ExperimentName {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ExperimentName::ALL
            .into_iter()
            .find(|e| e.as_str() == s.trim())
            .ok_or_else(|| {
                let names: Vec<&str> = ExperimentName::ALL.iter().map(|e| e.as_str()).collect();
                format!("expected one of {}", names.join(", "))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub name: ExperimentName,
    pub sweep: Vec<f64>,
    pub base: SystemConfig,
    pub trials: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    /// Also run the Monte-Carlo chain at every rate point.
    pub montecarlo: bool,
}

pub const EXPERIMENT_KEYS: &[&str] = &["experiment", "sweep", "trials", "seed", "output", "montecarlo"];

fn invalid(key: &str, value: &str, reason: impl Into<String>) -> Error {
    Error::InvalidValue {
        key: key.into(),
        value: value.into(),
        reason: reason.into(),
    }
}

/// Splits `key = value` text into a map. Later duplicates override earlier ones.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| invalid("line", raw, format!("line {} is not `key = value`", n + 1)))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(map)
}

/// Builds the scenario and experiment from parsed key-value pairs.
pub fn spec_from_map(map: &BTreeMap<String, String>) -> Result<(SystemConfig, ExperimentSpec)> {
    let mut base = SystemConfig::default();
    let mut name = ExperimentName::RateVsSnr;
    let mut sweep = None;
    let mut trials = 1000;
    let mut seed = 1;
    let mut output = None;
    let mut montecarlo = false;
    for (key, value) in map {
        match key.as_str() {
            "experiment" => name = value.parse().map_err(|e: String| invalid(key, value, e))?,
            "sweep" => {
                let vals: Vec<f64> = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| crate::config::parse_real(key, s))
                    .collect::<Result<_>>()?;
                sweep = Some(vals);
            }
            "trials" => {
                trials = value
                    .parse()
                    .map_err(|_| invalid(key, value, "expected a positive integer"))?
            }
            "seed" => seed = parse_seed(value)?,
            "output" => output = Some(PathBuf::from(value)),
            "montecarlo" => {
                montecarlo = match value.to_ascii_lowercase().as_str() {
                    "true" | "yes" | "1" | "on" => true,
                    "false" | "no" | "0" | "off" => false,
                    _ => return Err(invalid(key, value, "expected true or false")),
                }
            }
            _ => base.set(key, value)?,
        }
    }
    base.validate()?;
    let spec = ExperimentSpec {
        name,
        sweep: sweep.unwrap_or_else(|| name.default_sweep()),
        base: base.clone(),
        trials,
        seed,
        output,
        montecarlo,
    };
    spec.validate()?;
    Ok((base, spec))
}

/// Reads and parses a spec file.
pub fn parse_config(path: &Path) -> Result<(SystemConfig, ExperimentSpec)> {
    let text = std::fs::read_to_string(path)?;
    spec_from_map(&parse_key_values(&text)?)
}

impl ExperimentSpec {
    pub fn new(name: ExperimentName, base: SystemConfig) -> Self {
        ExperimentSpec {
            name,
            sweep: name.default_sweep(),
            base,
            trials: 1000,
            seed: 1,
            output: None,
            montecarlo: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Err(Error::Invariant { field: "sweep", reason });
        if self.sweep.is_empty() {
            return bad("sweep needs at least one value".into());
        }
        if self.sweep.windows(2).any(|w| w[0] >= w[1]) {
            return bad("sweep values must be strictly ascending".into());
        }
        if self.name.integer_axis() {
            if let Some(v) = self.sweep.iter().find(|v| v.fract() != 0.0 || **v < 1.0) {
                return bad(format!("{} must be a positive integer, got {v}", self.name.axis()));
            }
        }
        if self.trials == 0 {
            return Err(Error::Invariant {
                field: "trials",
                reason: "need at least one trial".into(),
            });
        }
        if self.name.is_power_allocation() && self.base.scheme != Scheme::Overlay {
            return Err(Error::Invariant {
                field: "scheme",
                reason: "power allocation runs on the overlay scheme".into(),
            });
        }
        Ok(())
    }

    /// Resolved settings as `key=value` pairs, experiment keys first.
    pub fn echo(&self) -> Vec<(String, String)> {
        let sweep: Vec<String> = self.sweep.iter().map(|v| format!("{v}")).collect();
        let mut out = vec![
            ("experiment".to_string(), self.name.as_str().to_string()),
            ("sweep".to_string(), sweep.join(",")),
            ("trials".to_string(), self.trials.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("montecarlo".to_string(), self.montecarlo.to_string()),
        ];
        out.extend(self.base.to_pairs().into_iter().map(|(k, v)| (k.to_string(), v)));
        out
    }

    /// Scenario at one sweep value.
    pub fn point_config(&self, value: f64) -> SystemConfig {
        let mut c = self.base.clone();
        match self.name {
            ExperimentName::RateVsSnr => {
                let rho = db_to_linear(value);
                c.rho_p = rho;
                c = c.with_powers(rho, rho);
            }
            ExperimentName::RateVsAntennas => c.antennas = value as usize,
            ExperimentName::RateVsCoherence => c.coherence = value as usize,
            ExperimentName::RateVsPairs => c.pairs = value as usize,
            ExperimentName::PowallocVsBudget | ExperimentName::ScaConvergence => {}
        }
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub experiment: ExperimentName,
    pub sweep_value: f64,
    pub scheme: Scheme,
    pub duplex: Duplex,
    pub closed_form_rate: f64,
    pub closed_form_bits_per_interval: f64,
    pub montecarlo: Option<(f64, f64)>,
    /// `key=value` pairs joined with `;`.
    pub extra: Vec<(String, String)>,
}

pub const CSV_HEADER: &str = "experiment,sweep_value,scheme,duplex,closed_form_rate,closed_form_bits_per_interval,montecarlo_rate,montecarlo_stderr,extra";

impl CsvRow {
    fn numbers(&self) -> Vec<f64> {
        let mut v = vec![
            self.sweep_value,
            self.closed_form_rate,
            self.closed_form_bits_per_interval,
        ];
        if let Some((m, s)) = self.montecarlo {
            v.push(m);
            v.push(s);
        }
        v
    }

    pub fn to_line(&self) -> String {
        let (mc, se) = match self.montecarlo {
            Some((m, s)) => (format!("{m}"), format!("{s}")),
            None => (String::new(), String::new()),
        };
        let extra: Vec<String> = self.extra.iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.experiment.as_str(),
            self.sweep_value,
            self.scheme,
            self.duplex,
            self.closed_form_rate,
            self.closed_form_bits_per_interval,
            mc,
            se,
            extra.join(";")
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub rows: Vec<CsvRow>,
    pub csv: String,
    pub summary: String,
}

const COMBOS: [(Scheme, Duplex); 4] = [
    (Scheme::Overlay, Duplex::Half),
    (Scheme::Overlay, Duplex::Full),
    (Scheme::Conventional, Duplex::Half),
    (Scheme::Conventional, Duplex::Full),
];

fn rate_rows(spec: &ExperimentSpec, index: usize, value: f64) -> Result<Vec<CsvRow>> {
    let point = spec.point_config(value);
    point.validate_domain()?;
    let fading = point.fading()?;
    COMBOS
        .iter()
        .enumerate()
        .map(|(combo, &(scheme, duplex))| {
            let c = SystemConfig {
                scheme,
                duplex,
                ..point.clone()
            };
            let r = rate_e2e(&c, &fading);
            let frame = frame_accounting(&c);
            let montecarlo = if spec.montecarlo && frame.data_len > 0.0 {
                let seed = mix64(spec.seed ^ mix64(((index as u64) << 8) | combo as u64));
                let mc = simulate_chain(&c, &fading, spec.trials, seed)?;
                Some((mc.r_system, mc.r_system_se))
            } else if spec.montecarlo {
                Some((0.0, 0.0))
            } else {
                None
            };
            Ok(CsvRow {
                experiment: spec.name,
                sweep_value: value,
                scheme,
                duplex,
                closed_form_rate: r.r_system,
                closed_form_bits_per_interval: r.bits_per_interval,
                montecarlo,
                extra: vec![
                    ("T_d".into(), format!("{}", frame.data_len)),
                    ("eta_p".into(), format!("{}", frame.pilot_overhead)),
                ],
            })
        })
        .collect()
}

fn power_rows(spec: &ExperimentSpec, value: f64) -> Result<Vec<CsvRow>> {
    let c = spec.point_config(value);
    let fading = c.fading()?;
    let energy = energy_for_power(&c, db_to_linear(value));
    let sol = sca_optimize(&c, &fading, energy, c.epsilon)?;
    let eq = equal_allocation(&c, energy)?;
    let per_slot = c.intervals as f64 * c.coherence as f64;
    let eq_obj = objective_at(&c, &fading, eq);
    let mut extra = vec![
        ("equal_rate".to_string(), format!("{}", eq_obj / per_slot)),
        ("rho_s".to_string(), format!("{}", sol.rho_star.rho_s)),
        ("rho_d".to_string(), format!("{}", sol.rho_star.rho_d)),
        ("iterations".to_string(), sol.iterations.to_string()),
        ("converged".to_string(), sol.converged.to_string()),
    ];
    if spec.name == ExperimentName::ScaConvergence {
        let steps: Vec<String> = sol
            .trajectory
            .iter()
            .map(|(_, v)| format!("{}", v / per_slot))
            .collect();
        extra.push(("trajectory".to_string(), steps.join("|")));
    }
    Ok(vec![CsvRow {
        experiment: spec.name,
        sweep_value: value,
        scheme: c.scheme,
        duplex: c.duplex,
        closed_form_rate: sol.objective / per_slot,
        closed_form_bits_per_interval: sol.objective / c.intervals as f64,
        montecarlo: None,
        extra,
    }])
}

/// Runs every sweep point and renders the CSV and a text summary.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentOutput> {
    spec.validate()?;
    let per_point: Vec<Vec<CsvRow>> = spec
        .sweep
        .par_iter()
        .enumerate()
        .map(|(i, &v)| {
            if spec.name.is_power_allocation() {
                power_rows(spec, v)
            } else {
                rate_rows(spec, i, v)
            }
        })
        .collect::<Result<_>>()?;
    let rows: Vec<CsvRow> = per_point.into_iter().flatten().collect();
    if let Some(row) = rows.iter().find(|r| r.numbers().iter().any(|x| !x.is_finite())) {
        return Err(Error::Numerical(format!("non-finite value in row {}", row.to_line())));
    }
    let mut csv = String::new();
    for (k, v) in spec.echo() {
        let _ = writeln!(csv, "# {k}={v}");
    }
    let _ = writeln!(csv, "{CSV_HEADER}");
    for r in &rows {
        let _ = writeln!(csv, "{}", r.to_line());
    }
    Ok(ExperimentOutput {
        summary: summarize(spec, &rows),
        rows,
        csv,
    })
}

fn summarize(spec: &ExperimentSpec, rows: &[CsvRow]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{}: {} sweep points over {}, {} rows",
        spec.name.as_str(),
        spec.sweep.len(),
        spec.name.axis(),
        rows.len()
    );
    let mut seen: Vec<(Scheme, Duplex)> = Vec::new();
    for r in rows {
        if !seen.contains(&(r.scheme, r.duplex)) {
            seen.push((r.scheme, r.duplex));
        }
    }
    for (scheme, duplex) in seen {
        let best = rows
            .iter()
            .filter(|r| r.scheme == scheme && r.duplex == duplex)
            .max_by(|a, b| a.closed_form_rate.total_cmp(&b.closed_form_rate));
        if let Some(b) = best {
            let _ = writeln!(
                s,
                "  {scheme} {duplex}: peak {:.4} bits/s/Hz at {}={}",
                b.closed_form_rate,
                spec.name.axis(),
                b.sweep_value
            );
        }
    }
    s
}

/// Writes `out.csv` to `path`.
pub fn write_csv(path: &Path, out: &ExperimentOutput) -> Result<()> {
    std::fs::write(path, out.csv.as_bytes())?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(text: &str) -> Result<(SystemConfig, ExperimentSpec)> {
        spec_from_map(&parse_key_values(text)?)
    }

    #[test]
    fn empty_file_gives_defaults() {
        let (cfg, s) = spec("").unwrap();
        assert_eq!(cfg, SystemConfig::default());
        assert_eq!(s.name, ExperimentName::RateVsSnr);
        assert_eq!(s.trials, 1000);
        assert_eq!(s.sweep.first(), Some(&-30.0));
        assert_eq!(s.sweep.last(), Some(&30.0));
    }

    #[test]
    fn type_error_names_key() {
        let err = spec("M=abc").unwrap_err();
        assert!(err.to_string().contains("`M`"), "{err}");
    }

    #[test]
    fn unknown_key_fails() {
        assert!(matches!(spec("colour = red"), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn sweep_must_ascend() {
        assert!(spec("sweep = 3, 1").is_err());
        assert!(spec("sweep = ").is_err());
        assert!(spec("experiment = rate-vs-pairs\nsweep = 1.5").is_err());
    }

    #[test]
    fn trials_echoed() {
        let (_, s) = spec("trials = 5000\nsweep = 0").unwrap();
        let out = run_experiment(&s).unwrap();
        assert!(out.csv.lines().any(|l| l == "# trials=5000"));
        assert_eq!(out.rows.len(), 4);
    }

    #[test]
    fn rows_are_finite_and_ordered() {
        let (_, s) = spec("experiment = rate-vs-pairs").unwrap();
        let out = run_experiment(&s).unwrap();
        assert_eq!(out.rows.len(), 80);
        let values: Vec<f64> = out.rows.iter().map(|r| r.sweep_value).collect();
        assert!(values.windows(2).all(|w| w[0] <= w[1]));
        let header = out.csv.lines().find(|l| !l.starts_with('#')).unwrap();
        assert_eq!(header, CSV_HEADER);
    }

    #[test]
    fn power_rows_carry_iterations() {
        let (_, s) = spec("experiment = sca-convergence").unwrap();
        let out = run_experiment(&s).unwrap();
        assert_eq!(out.rows.len(), 1);
        assert!(out.rows[0].extra.iter().any(|(k, _)| k == "iterations"));
    }

    #[test]
    fn power_allocation_needs_overlay() {
        assert!(spec("experiment = powalloc-vs-budget\nscheme = conventional").is_err());
    }

    #[test]
    fn montecarlo_columns() {
        let (_, s) = spec("sweep = 0\nmontecarlo = true\ntrials = 4\nM = 16\nK = 2\nT_c = 8\nL = 2").unwrap();
        let out = run_experiment(&s).unwrap();
        assert!(out.rows.iter().all(|r| r.montecarlo.is_some()));
        let again = run_experiment(&s).unwrap();
        assert_eq!(out.csv, again.csv);
    }
}
