//! Flat key=value experiment configuration with command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use steklov_core::geometry::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Spectrum,
    Duality,
    NodalSweep,
    KeyExample,
    LemmaCheck,
    Weyl,
    Btilde,
}

impl Experiment {
    pub fn parse(name: &str) -> Option<Experiment> {
        match name {
            "spectrum" | "solve" => Some(Experiment::Spectrum),
            "duality" => Some(Experiment::Duality),
            "nodal-sweep" | "nodal" => Some(Experiment::NodalSweep),
            "keyexample" => Some(Experiment::KeyExample),
            "lemma-check" | "lemma" => Some(Experiment::LemmaCheck),
            "weyl" => Some(Experiment::Weyl),
            "btilde" => Some(Experiment::Btilde),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Spectrum => "spectrum",
            Experiment::Duality => "duality",
            Experiment::NodalSweep => "nodal-sweep",
            Experiment::KeyExample => "keyexample",
            Experiment::LemmaCheck => "lemma-check",
            Experiment::Weyl => "weyl",
            Experiment::Btilde => "btilde",
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

/// Everything an experiment run needs, with conservative defaults.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub domain: Domain,
    /// Constant potential value.
    pub q: f64,
    pub lambda: f64,
    pub target_h: f64,
    /// Number of eigenvalues for spectrum/weyl/btilde runs.
    pub count: usize,
    /// Index range for duality and nodal sweeps.
    pub k_max: usize,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub n_grid: usize,
    /// Key-example branch order and pole offset.
    pub n: u32,
    pub eps: f64,
    /// Quotient sweep settings.
    pub epsilon: f64,
    pub delta: Option<f64>,
    pub k_lo: usize,
    pub k_hi: usize,
    pub zero_tol: f64,
    /// Relative agreement targets used by the pass/fail verdicts.
    pub duality_tol: f64,
    pub oracle_tol: f64,
    pub weyl_tol: f64,
    pub btilde_growth_tol: f64,
    pub include_vectors: bool,
    pub out: PathBuf,
}

impl ExperimentConfig {
    fn defaults(experiment: Experiment) -> ExperimentConfig {
        ExperimentConfig {
            experiment,
            domain: Domain::Disk { radius: 1.0 },
            q: 0.0,
            lambda: 0.0,
            target_h: 0.1,
            count: 12,
            k_max: 6,
            sigma_lo: -5.0,
            sigma_hi: 5.0,
            n_grid: 11,
            n: 3,
            eps: 0.1,
            epsilon: 0.25,
            delta: None,
            k_lo: 10,
            k_hi: 30,
            zero_tol: 1e-8,
            duality_tol: 0.01,
            oracle_tol: 0.02,
            weyl_tol: 0.15,
            btilde_growth_tol: 0.2,
            include_vectors: false,
            out: PathBuf::from("out"),
        }
    }

    /// Builds a config from an optional file plus `key=value` overrides
    /// (overrides win). `experiment` may come from the command name, the
    /// file, or an override; it must resolve to a known experiment.
    pub fn build(
        command_experiment: Option<Experiment>,
        file_text: Option<&str>,
        overrides: &[(String, String)],
    ) -> Result<ExperimentConfig, ConfigError> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        if let Some(text) = file_text {
            for (lineno, raw) in text.lines().enumerate() {
                let line = raw.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    ConfigError(format!("line {}: expected key=value", lineno + 1))
                })?;
                kv.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        for (k, v) in overrides {
            kv.insert(k.clone(), v.clone());
        }

        let experiment = match kv.get("experiment") {
            Some(name) => Experiment::parse(name)
                .ok_or_else(|| ConfigError(format!("unknown experiment '{name}'")))?,
            None => command_experiment.ok_or_else(|| ConfigError("no experiment given".into()))?,
        };
        let mut cfg = ExperimentConfig::defaults(experiment);

        let get_f64 =
            |kv: &BTreeMap<String, String>, key: &str| -> Result<Option<f64>, ConfigError> {
                match kv.get(key) {
                    Some(v) => v
                        .parse::<f64>()
                        .map(Some)
                        .map_err(|_| ConfigError(format!("key '{key}': bad number '{v}'"))),
                    None => Ok(None),
                }
            };
        let get_usize =
            |kv: &BTreeMap<String, String>, key: &str| -> Result<Option<usize>, ConfigError> {
                match kv.get(key) {
                    Some(v) => v
                        .parse::<usize>()
                        .map(Some)
                        .map_err(|_| ConfigError(format!("key '{key}': bad integer '{v}'"))),
                    None => Ok(None),
                }
            };

        let radius = get_f64(&kv, "radius")?.unwrap_or(1.0);
        match kv.get("domain").map(|s| s.as_str()) {
            None | Some("disk") => cfg.domain = Domain::Disk { radius },
            Some("annulus") => {
                cfg.domain = Domain::Annulus {
                    r_inner: get_f64(&kv, "r_inner")?.unwrap_or(0.5),
                    r_outer: get_f64(&kv, "r_outer")?.unwrap_or(1.0),
                }
            }
            Some("rectangle") => {
                cfg.domain = Domain::Rectangle {
                    width: get_f64(&kv, "width")?.unwrap_or(1.0),
                    height: get_f64(&kv, "height")?.unwrap_or(1.0),
                }
            }
            Some(other) => return Err(ConfigError(format!("unknown domain '{other}'"))),
        }

        if let Some(v) = get_f64(&kv, "q")? {
            cfg.q = v;
        }
        if let Some(v) = get_f64(&kv, "lambda")? {
            cfg.lambda = v;
        }
        if let Some(v) = get_f64(&kv, "target_h")? {
            cfg.target_h = v;
        }
        if let Some(v) = get_usize(&kv, "count")? {
            cfg.count = v;
        }
        if let Some(v) = get_usize(&kv, "k_max")? {
            cfg.k_max = v;
        }
        if let Some(v) = get_f64(&kv, "sigma_lo")? {
            cfg.sigma_lo = v;
        }
        if let Some(v) = get_f64(&kv, "sigma_hi")? {
            cfg.sigma_hi = v;
        }
        if let Some(v) = get_usize(&kv, "n_grid")? {
            cfg.n_grid = v;
        }
        if let Some(v) = get_usize(&kv, "n")? {
            cfg.n = v as u32;
        }
        if let Some(v) = get_f64(&kv, "eps")? {
            cfg.eps = v;
        }
        if let Some(v) = get_f64(&kv, "epsilon")? {
            cfg.epsilon = v;
        }
        if let Some(v) = get_f64(&kv, "delta")? {
            cfg.delta = Some(v);
        }
        if let Some(v) = get_usize(&kv, "k_lo")? {
            cfg.k_lo = v;
        }
        if let Some(v) = get_usize(&kv, "k_hi")? {
            cfg.k_hi = v;
        }
        if let Some(v) = get_f64(&kv, "zero_tol")? {
            cfg.zero_tol = v;
        }
        if let Some(v) = get_f64(&kv, "duality_tol")? {
            cfg.duality_tol = v;
        }
        if let Some(v) = get_f64(&kv, "oracle_tol")? {
            cfg.oracle_tol = v;
        }
        if let Some(v) = get_f64(&kv, "weyl_tol")? {
            cfg.weyl_tol = v;
        }
        if let Some(v) = get_f64(&kv, "btilde_growth_tol")? {
            cfg.btilde_growth_tol = v;
        }
        if let Some(v) = kv.get("include_vectors") {
            cfg.include_vectors = v == "true" || v == "1";
        }
        if let Some(v) = kv.get("out") {
            cfg.out = PathBuf::from(v);
        }

        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.domain.validate().is_err() {
            return Err(ConfigError(format!(
                "invalid domain parameters: {:?}",
                self.domain
            )));
        }
        for (name, v) in [
            ("target_h", self.target_h),
            ("zero_tol", self.zero_tol),
            ("duality_tol", self.duality_tol),
            ("oracle_tol", self.oracle_tol),
            ("weyl_tol", self.weyl_tol),
            ("btilde_growth_tol", self.btilde_growth_tol),
            ("eps", self.eps),
            ("epsilon", self.epsilon),
        ] {
            if !(v > 0.0) {
                return Err(ConfigError(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return Err(ConfigError(format!("delta must be positive, got {d}")));
            }
        }
        if self.count == 0 || self.k_max == 0 {
            return Err(ConfigError("count and k_max must be at least 1".into()));
        }
        if self.k_lo == 0 || self.k_lo > self.k_hi {
            return Err(ConfigError(format!(
                "need 1 <= k_lo <= k_hi, got [{}, {}]",
                self.k_lo, self.k_hi
            )));
        }
        if self.experiment == Experiment::KeyExample && self.n > 8 {
            return Err(ConfigError(format!(
                "keyexample supports n <= 8, got {}",
                self.n
            )));
        }
        Ok(())
    }
}
