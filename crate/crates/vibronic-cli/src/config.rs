//! Flat key-value run configuration: a text file of `key = value` lines plus
//! `--set key=value` command-line overrides. Every key is echoed into the
//! run manifest; unknown keys and unparsable values are rejected with their
//! file location.

use std::collections::BTreeMap;
use std::path::Path;

use crate::{CliError, CliResult};

/// Keys accepted anywhere; an experiment reads the subset it cares about.
pub const KNOWN_KEYS: &[&str] = &[
    "abs_tol",
    "audit",
    "epsilon",
    "fock_cutoff",
    "initial",
    "kappa",
    "kappa_list",
    "lambda_max",
    "lzs_delta",
    "n_list",
    "n_spins",
    "nbar",
    "omega",
    "out_dir",
    "par_alpha_im",
    "par_alpha_re",
    "par_chi",
    "par_cutoff_a",
    "par_cutoff_b",
    "par_cutoff_c",
    "par_dim_cap",
    "par_evolve_to",
    "par_g",
    "par_moments",
    "par_omega_a",
    "par_omega_b",
    "par_omega_c",
    "par_smearing",
    "par_times",
    "rel_tol",
    "samples",
    "seed",
    "velocity",
    "v_count",
    "v_end",
    "v_start",
    "vmin_threshold",
    "wigner_tail_tol",
    "wigner_time",
    "workers",
    "x_count",
    "x_max",
    "x_min",
    "p_count",
    "p_max",
    "p_min",
];

#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    /// key -> (value, location for error messages)
    entries: BTreeMap<String, (String, String)>,
}

impl RawConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut cfg = Self::empty();
        for (lineno, raw_line) in text.lines().enumerate() {
            let line = match raw_line.find('#') {
                Some(pos) => &raw_line[..pos],
                None => raw_line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let loc = format!("{}:{}", path.display(), lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{loc}: expected `key = value`")))?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(CliError::Config(format!("{loc}: unknown key `{key}`")));
            }
            cfg.entries.insert(key, (value, loc));
        }
        Ok(cfg)
    }

    /// Applies a `--set key=value` override.
    pub fn apply_set(&mut self, spec: &str) -> CliResult<()> {
        let (key, value) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set `{spec}`: expected key=value")))?;
        let key = key.trim().to_string();
        if !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(CliError::Config(format!("--set: unknown key `{key}`")));
        }
        self.entries
            .insert(key, (value.trim().to_string(), "--set".to_string()));
        Ok(())
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, (v, _))| (k.as_str(), v.as_str()))
    }

    fn get(&self, key: &str) -> Option<&(String, String)> {
        self.entries.get(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, default: T) -> CliResult<T> {
        match self.get(key) {
            None => Ok(default),
            Some((value, loc)) => value.parse::<T>().map_err(|_| {
                CliError::Config(format!(
                    "{loc}: cannot parse `{value}` for key `{key}` as {}",
                    std::any::type_name::<T>()
                ))
            }),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> CliResult<f64> {
        self.parse(key, default)
    }

    pub fn usize_or(&self, key: &str, default: usize) -> CliResult<usize> {
        self.parse(key, default)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> CliResult<u64> {
        self.parse(key, default)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> CliResult<bool> {
        self.parse(key, default)
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.get(key).map(|(v, _)| v.clone()).unwrap_or_else(|| default.to_string())
    }

    pub fn f64_list_or(&self, key: &str, default: &[f64]) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some((value, loc)) => value
                .split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| {
                        CliError::Config(format!("{loc}: `{s}` in `{key}` is not a number"))
                    })
                })
                .collect(),
        }
    }

    pub fn usize_list_or(&self, key: &str, default: &[usize]) -> CliResult<Vec<usize>> {
        match self.get(key) {
            None => Ok(default.to_vec()),
            Some((value, loc)) => value
                .split(',')
                .map(|s| {
                    s.trim().parse::<usize>().map_err(|_| {
                        CliError::Config(format!("{loc}: `{s}` in `{key}` is not an integer"))
                    })
                })
                .collect(),
        }
    }
}

/// Initial-state specification. `GS` and `W<k>` name Dicke levels with the
/// field in vacuum; `custom(m,n)` picks an explicit level and Fock index;
/// `thermal(nbar,<name>)` pairs a named spin level with a thermal field.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Excitations(usize),
    Custom { two_m: i64, n: usize },
    Thermal { nbar: f64, spin_excitations: usize },
}

impl InitialSpec {
    pub fn needs_density(&self) -> bool {
        matches!(self, InitialSpec::Thermal { .. })
    }
}

fn parse_spin_name(name: &str) -> Option<usize> {
    if name == "GS" {
        return Some(0);
    }
    name.strip_prefix('W').and_then(|k| k.parse::<usize>().ok())
}

/// Parses a half-integer `m` written as `-3/2`, `1/2`, `-1.5`, or `2`,
/// returning the exact twice-value.
fn parse_half_integer(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        if den.trim() == "2" {
            return num.trim().parse::<i64>().ok();
        }
        return None;
    }
    if let Ok(int) = s.parse::<i64>() {
        return Some(2 * int);
    }
    let x = s.parse::<f64>().ok()?;
    let two_m = (2.0 * x).round();
    if ((2.0 * x) - two_m).abs() < 1e-9 {
        Some(two_m as i64)
    } else {
        None
    }
}

pub fn parse_initial(spec: &str) -> CliResult<InitialSpec> {
    let spec = spec.trim();
    if let Some(k) = parse_spin_name(spec) {
        return Ok(InitialSpec::Excitations(k));
    }
    if let Some(rest) = spec.strip_prefix("custom(").and_then(|r| r.strip_suffix(')')) {
        let (m, n) = rest
            .split_once(',')
            .ok_or_else(|| CliError::Config(format!("initial `{spec}`: expected custom(m,n)")))?;
        let two_m = parse_half_integer(m)
            .ok_or_else(|| CliError::Config(format!("initial `{spec}`: `{m}` is not a half-integer")))?;
        let n = n.trim().parse::<usize>().map_err(|_| {
            CliError::Config(format!("initial `{spec}`: `{n}` is not a Fock index"))
        })?;
        return Ok(InitialSpec::Custom { two_m, n });
    }
    if let Some(rest) = spec.strip_prefix("thermal(").and_then(|r| r.strip_suffix(')')) {
        let (nbar, name) = rest
            .split_once(',')
            .ok_or_else(|| CliError::Config(format!("initial `{spec}`: expected thermal(nbar,name)")))?;
        let nbar = nbar.trim().parse::<f64>().map_err(|_| {
            CliError::Config(format!("initial `{spec}`: `{nbar}` is not a number"))
        })?;
        let spin_excitations = parse_spin_name(name.trim()).ok_or_else(|| {
            CliError::Config(format!("initial `{spec}`: `{name}` is not GS or W<k>"))
        })?;
        return Ok(InitialSpec::Thermal { nbar, spin_excitations });
    }
    Err(CliError::Config(format!(
        "initial `{spec}`: expected GS, W<k>, custom(m,n), or thermal(nbar,name)"
    )))
}

/// Log-spaced velocity grid, strictly increasing.
pub fn log_grid(v_start: f64, v_end: f64, count: usize) -> CliResult<Vec<f64>> {
    if !(v_start > 0.0) || !(v_end > 0.0) || count == 0 {
        return Err(CliError::Config(format!(
            "v grid must be positive and non-empty (v_start={v_start}, v_end={v_end}, v_count={count})"
        )));
    }
    if count == 1 {
        return Ok(vec![v_start]);
    }
    if v_end <= v_start {
        return Err(CliError::Config(format!(
            "v grid must increase (v_start={v_start}, v_end={v_end})"
        )));
    }
    let (a, b) = (v_start.ln(), v_end.ln());
    Ok((0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_initial_specs() {
        assert_eq!(parse_initial("GS").unwrap(), InitialSpec::Excitations(0));
        assert_eq!(parse_initial("W2").unwrap(), InitialSpec::Excitations(2));
        assert_eq!(
            parse_initial("custom(-3/2, 1)").unwrap(),
            InitialSpec::Custom { two_m: -3, n: 1 }
        );
        assert_eq!(
            parse_initial("custom(0.5, 0)").unwrap(),
            InitialSpec::Custom { two_m: 1, n: 0 }
        );
        assert_eq!(
            parse_initial("thermal(0.5, GS)").unwrap(),
            InitialSpec::Thermal { nbar: 0.5, spin_excitations: 0 }
        );
        assert!(parse_initial("X3").is_err());
        assert!(parse_initial("custom(0.3,0)").is_err());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(0.0078125, 2.0, 48).unwrap();
        assert_eq!(g.len(), 48);
        assert!((g[0] - 0.0078125).abs() < 1e-15);
        assert!((g[47] - 2.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(log_grid(0.5, 2.0, 1).unwrap(), vec![0.5]);
        assert!(log_grid(-1.0, 2.0, 4).is_err());
    }
}
