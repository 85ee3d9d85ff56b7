//! Flat `key = value` run configuration.
//!
//! Lines are `key = value`; `#` starts a comment; blank lines are ignored.
//! Command-line `--set key=value` overrides are applied after the file, in
//! order, so later values win.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tqet_core::model::{ChainSpec, Pauli};
use tqet_core::timelike::Scalarization;

/// Every accepted key with its default (`None` = required or derived) and a
/// one-line description. This table is the schema.
pub const SCHEMA: &[(&str, Option<&str>, &str)] = &[
    ("n_sites", None, "chain length N (4..=12); required except for `validate`"),
    ("j", Some("1"), "Ising coupling J"),
    ("h", Some("0"), "longitudinal field h"),
    ("g", Some("-1.05"), "transverse field g"),
    ("site_a", Some("2"), "Alice's site (1-based)"),
    ("site_b", None, "Bob's site; defaults to N-1"),
    ("sigma_a", Some("Z"), "Alice's measured Pauli"),
    ("sigma_b", Some("Y"), "generator of Bob's rotation"),
    ("t_max", Some("10"), "end of the time grid"),
    ("dt", Some("0.02"), "time step"),
    ("g_min", Some("-2"), "heatmap: lowest g"),
    ("g_max", Some("2"), "heatmap: highest g"),
    ("g_points", Some("41"), "heatmap: number of g values"),
    ("h_min", Some("-2"), "heatmap: lowest h"),
    ("h_max", Some("2"), "heatmap: highest h"),
    ("h_points", Some("41"), "heatmap: number of h values"),
    ("n_min", Some("4"), "N sweeps: smallest N"),
    ("n_max", Some("10"), "N sweeps: largest N"),
    ("allow_large_n", Some("false"), "permit N = 11, 12 in N sweeps"),
    ("scalarization", Some("abs"), "sync analysis functional of the diagnostic: abs, re or im"),
    ("write_sync", Some("true"), "timelike: also write the sync report"),
    ("corrupt_check", Some(""), "validate test mode: force the named check to fail"),
    ("out", Some("."), "output directory"),
    ("workers", None, "worker threads; defaults to available parallelism"),
    ("format", Some("csv"), "csv, json or both"),
];

/// Keys that do not change any computed number; excluded from the hash.
const PRESENTATION_KEYS: [&str; 3] = ["out", "workers", "format"];

/// Largest N admitted by N sweeps without `allow_large_n`.
pub const DEFAULT_MAX_SWEEP_N: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
    Environment,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => f.write_str("--set"),
            Origin::Environment => f.write_str("environment"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {reason}")]
    Unreadable { path: PathBuf, reason: String },
    #[error("{origin}: {message}")]
    Syntax { origin: Origin, message: String },
    #[error("{origin}: key `{key}`: {message}")]
    Value {
        origin: Origin,
        key: String,
        message: String,
    },
    #[error("n_sites missing")]
    MissingSites,
    #[error("{origin}: key `{key}`: invalid configuration: {message}")]
    Invariant {
        origin: Origin,
        key: String,
        message: String,
    },
    #[error("key `{key}`: invalid configuration: {message}")]
    InvariantDefault { key: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// Raw key/value entries with their origins, before interpretation.
#[derive(Clone, Debug, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Unreadable {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Self::from_text(&text, path)
    }

    pub fn from_text(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut raw = Self::default();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: idx + 1,
            };
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or_else(|| ConfigError::Syntax {
                origin: origin.clone(),
                message: format!("expected `key = value`, found {content:?}"),
            })?;
            raw.insert(key.trim(), value.trim(), origin)?;
        }
        Ok(raw)
    }

    /// Applies one `key=value` override.
    pub fn set(&mut self, assignment: &str, origin: Origin) -> Result<(), ConfigError> {
        let (key, value) = assignment.split_once('=').ok_or_else(|| ConfigError::Syntax {
            origin: origin.clone(),
            message: format!("expected `key=value`, found {assignment:?}"),
        })?;
        self.insert(key.trim(), value.trim(), origin)
    }

    fn insert(&mut self, key: &str, value: &str, origin: Origin) -> Result<(), ConfigError> {
        if !SCHEMA.iter().any(|(k, _, _)| *k == key) {
            return Err(ConfigError::Syntax {
                origin,
                message: format!("unknown key `{key}`"),
            });
        }
        self.entries.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    fn get(&self, key: &str) -> Option<&(String, Origin)> {
        self.entries.get(key)
    }

    fn parse<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<Option<T>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some((value, origin)) => parse(value).map(Some).map_err(|message| ConfigError::Value {
                origin: origin.clone(),
                key: key.to_string(),
                message,
            }),
        }
    }

    fn default_of(key: &str) -> &'static str {
        SCHEMA
            .iter()
            .find(|(k, _, _)| *k == key)
            .and_then(|(_, d, _)| *d)
            .unwrap_or("")
    }

    fn value<T>(&self, key: &str, parse: impl Fn(&str) -> Result<T, String>) -> Result<T, ConfigError> {
        match self.parse(key, &parse)? {
            Some(v) => Ok(v),
            None => parse(Self::default_of(key)).map_err(|message| ConfigError::InvariantDefault {
                key: key.to_string(),
                message,
            }),
        }
    }

    fn origin_of(&self, key: &str) -> Option<Origin> {
        self.get(key).map(|(_, o)| o.clone())
    }
}

fn real(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("expected a number, found {s:?}"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("expected a finite number, found {s:?}"))
    }
}

fn count(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, found {s:?}"))
}

fn flag(s: &str) -> Result<bool, String> {
    match s {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(format!("expected true or false, found {s:?}")),
    }
}

fn pauli(s: &str) -> Result<Pauli, String> {
    s.parse::<Pauli>().map_err(|e| e.to_string())
}

fn format_kind(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        "both" => Ok(OutputFormat::Both),
        _ => Err(format!("expected csv, json or both, found {s:?}")),
    }
}

/// Validated configuration for one invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `None` only when `n_sites` was not given (allowed for `validate`).
    pub spec: Option<ChainSpec>,
    /// Chain parameters with `n_sites` possibly unset, used as a template.
    pub template: ChainSpec,
    pub g_axis: (f64, f64, usize),
    pub h_axis: (f64, f64, usize),
    pub n_range: (usize, usize),
    pub allow_large_n: bool,
    pub scalarization: Scalarization,
    pub write_sync: bool,
    pub corrupt_check: Option<String>,
    pub out: PathBuf,
    pub workers: usize,
    pub format: OutputFormat,
    canonical: Vec<(String, String)>,
}

impl RunConfig {
    /// Interprets `raw`, applying defaults and enforcing every invariant.
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let n_sites = raw.parse("n_sites", count)?;
        let template_n = n_sites.unwrap_or(6);
        let template = ChainSpec {
            n_sites: template_n,
            j: raw.value("j", real)?,
            h: raw.value("h", real)?,
            g: raw.value("g", real)?,
            site_a: raw.value("site_a", count)?,
            site_b: raw.parse("site_b", count)?.unwrap_or(template_n.saturating_sub(1)),
            sigma_a: raw.value("sigma_a", pauli)?,
            sigma_b: raw.value("sigma_b", pauli)?,
            t_max: raw.value("t_max", real)?,
            dt: raw.value("dt", real)?,
        };
        let spec = match n_sites {
            Some(_) => {
                template.validate().map_err(|e| invariant_error(raw, &e))?;
                Some(template.clone())
            }
            None => None,
        };

        let g_axis = (raw.value("g_min", real)?, raw.value("g_max", real)?, raw.value("g_points", count)?);
        let h_axis = (raw.value("h_min", real)?, raw.value("h_max", real)?, raw.value("h_points", count)?);
        for (key, points) in [("g_points", g_axis.2), ("h_points", h_axis.2)] {
            if points == 0 {
                return Err(value_error(raw, key, "must be at least 1".into()));
            }
        }
        let n_range = (raw.value("n_min", count)?, raw.value("n_max", count)?);
        let allow_large_n = raw.value("allow_large_n", flag)?;
        if n_range.0 > n_range.1 {
            return Err(value_error(raw, "n_min", format!("n_min = {} exceeds n_max = {}", n_range.0, n_range.1)));
        }
        if n_range.0 < 4 {
            return Err(value_error(raw, "n_min", "N sweeps need N >= 4".into()));
        }
        let cap = if allow_large_n { tqet_core::kernel::MAX_SITES } else { DEFAULT_MAX_SWEEP_N };
        if n_range.1 > cap {
            return Err(value_error(
                raw,
                "n_max",
                format!("n_max = {} exceeds {cap}; set allow_large_n = true for N up to {}", n_range.1, tqet_core::kernel::MAX_SITES),
            ));
        }
        let scalarization = raw.value("scalarization", |s| s.parse::<Scalarization>())?;
        let write_sync = raw.value("write_sync", flag)?;
        let corrupt = raw.value("corrupt_check", |s| Ok::<_, String>(s.to_string()))?;
        let corrupt_check = (!corrupt.is_empty()).then_some(corrupt);
        if let Some(name) = &corrupt_check {
            if !tqet_core::validation::CHECK_NAMES.contains(&name.as_str()) {
                return Err(value_error(raw, "corrupt_check", format!("unknown check {name:?}")));
            }
        }
        let out = PathBuf::from(raw.value("out", |s| Ok::<_, String>(s.to_string()))?);
        let workers = match raw.parse("workers", count)? {
            Some(0) => return Err(value_error(raw, "workers", "must be at least 1".into())),
            Some(w) => w,
            None => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        };
        let format = raw.value("format", format_kind)?;

        let mut canonical = vec![
            ("n_sites".to_string(), n_sites.map_or("unset".to_string(), |n| n.to_string())),
            ("j".into(), canon_f64(template.j)),
            ("h".into(), canon_f64(template.h)),
            ("g".into(), canon_f64(template.g)),
            ("site_a".into(), template.site_a.to_string()),
            ("site_b".into(), if n_sites.is_some() { template.site_b.to_string() } else { "unset".into() }),
            ("sigma_a".into(), template.sigma_a.to_string()),
            ("sigma_b".into(), template.sigma_b.to_string()),
            ("t_max".into(), canon_f64(template.t_max)),
            ("dt".into(), canon_f64(template.dt)),
            ("g_min".into(), canon_f64(g_axis.0)),
            ("g_max".into(), canon_f64(g_axis.1)),
            ("g_points".into(), g_axis.2.to_string()),
            ("h_min".into(), canon_f64(h_axis.0)),
            ("h_max".into(), canon_f64(h_axis.1)),
            ("h_points".into(), h_axis.2.to_string()),
            ("n_min".into(), n_range.0.to_string()),
            ("n_max".into(), n_range.1.to_string()),
            ("allow_large_n".into(), allow_large_n.to_string()),
            ("scalarization".into(), scalarization.to_string()),
            ("write_sync".into(), write_sync.to_string()),
            ("corrupt_check".into(), corrupt_check.clone().unwrap_or_default()),
        ];
        canonical.sort();
        debug_assert!(canonical.iter().all(|(k, _)| !PRESENTATION_KEYS.contains(&k.as_str())));

        Ok(Self {
            spec,
            template,
            g_axis,
            h_axis,
            n_range,
            allow_large_n,
            scalarization,
            write_sync,
            corrupt_check,
            out,
            workers,
            format,
            canonical,
        })
    }

    /// The chain spec; errors with "n_sites missing" when absent.
    pub fn require_spec(&self) -> Result<&ChainSpec, ConfigError> {
        self.spec.as_ref().ok_or(ConfigError::MissingSites)
    }

    /// Canonical `key=value` lines over all computational keys, sorted.
    pub fn canonical_text(&self) -> String {
        self.canonical
            .iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    /// SHA-256 of [`Self::canonical_text`], hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    pub fn n_values(&self) -> Vec<usize> {
        (self.n_range.0..=self.n_range.1).collect()
    }
}

// Shortest round-trip representation; `-0` is folded into `0`.
fn canon_f64(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:?}")
    }
}

fn value_error(raw: &RawConfig, key: &str, message: String) -> ConfigError {
    match raw.origin_of(key) {
        Some(origin) => ConfigError::Value {
            origin,
            key: key.to_string(),
            message,
        },
        None => ConfigError::InvariantDefault {
            key: key.to_string(),
            message,
        },
    }
}

fn invariant_error(raw: &RawConfig, e: &tqet_core::Error) -> ConfigError {
    let key = match e {
        tqet_core::Error::InvalidSpec { field, .. } => field.to_string(),
        tqet_core::Error::Capacity { .. } => "n_sites".to_string(),
        tqet_core::Error::SiteOutOfRange { .. } => "site_b".to_string(),
        _ => "n_sites".to_string(),
    };
    let message = e.to_string();
    match raw.origin_of(&key).or_else(|| raw.origin_of("n_sites")) {
        Some(origin) => ConfigError::Invariant { origin, key, message },
        None => ConfigError::InvariantDefault { key, message },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        RunConfig::from_raw(&RawConfig::from_text(text, Path::new("run.cfg"))?)
    }

    #[test]
    fn empty_file_requires_n_sites() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.require_spec().unwrap_err().to_string(), "n_sites missing");
    }

    #[test]
    fn defaults_match_headline_experiment() {
        let cfg = parse("n_sites = 6\n").unwrap();
        assert_eq!(cfg.require_spec().unwrap(), &ChainSpec::new(6));
        assert_eq!(cfg.format, OutputFormat::Csv);
        assert_eq!(cfg.n_values(), (4..=10).collect::<Vec<_>>());
        assert_eq!(cfg.g_axis, (-2.0, 2.0, 41));
    }

    #[test]
    fn adjacent_agents_are_rejected_with_location() {
        let err = parse("n_sites=6\nsite_a=4\nsite_b=5\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.starts_with("run.cfg:2: key `site_a`"), "{msg}");
        assert!(msg.contains("< 2"), "{msg}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = parse("n_sites = 6\nsitea = 2\n").unwrap_err();
        assert_eq!(err.to_string(), "run.cfg:2: unknown key `sitea`");
    }

    #[test]
    fn bad_values_name_line_and_key() {
        let err = parse("# header\n\nn_sites = 6\ndt = fast\n").unwrap_err();
        assert_eq!(
            err.to_string(),
            "run.cfg:4: key `dt`: expected a number, found \"fast\""
        );
        let err = parse("n_sites = 6\ndt = 0\n").unwrap_err();
        assert!(err.to_string().starts_with("run.cfg:2: key `dt`"));
        assert!(parse("n_sites = 6\nno equals sign\n").unwrap_err().to_string().starts_with("run.cfg:2:"));
    }

    #[test]
    fn comments_and_overrides() {
        let mut raw = RawConfig::from_text("n_sites = 6  # six\ng = -1.0\n", Path::new("x")).unwrap();
        raw.set("g=-0.5", Origin::Flag).unwrap();
        let cfg = RunConfig::from_raw(&raw).unwrap();
        assert_eq!(cfg.require_spec().unwrap().g, -0.5);
        let err = raw.set("bogus=1", Origin::Flag).unwrap_err();
        assert_eq!(err.to_string(), "--set: unknown key `bogus`");
    }

    #[test]
    fn hash_ignores_presentation_keys() {
        let a = parse("n_sites = 6\n").unwrap();
        let b = parse("n_sites=6\nout=/tmp/x\nworkers=3\nformat=both\ng=-1.05\n").unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("n_sites = 6\ng = -1.0\n").unwrap();
        assert_ne!(a.hash(), c.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn large_n_needs_opt_in() {
        assert!(parse("n_sites = 6\nn_max = 12\n").is_err());
        assert_eq!(parse("n_sites = 6\nn_max = 12\nallow_large_n = true\n").unwrap().n_range.1, 12);
        assert!(parse("n_sites = 13\n").is_err());
    }

    #[test]
    fn corrupt_check_must_name_a_check() {
        assert!(parse("corrupt_check = group_law\n").is_ok());
        assert!(parse("corrupt_check = nonsense\n").is_err());
    }
}
