//! Flat `key = value` run configuration. Later sources override earlier ones:
//! defaults, then the config file, then command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use nalgebra::Vector3;
use serde::Serialize;

use pds_core::spectra::Window;

pub const OUT_ENV: &str = "PDSWAVE_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum TimeStep {
    Auto,
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum InitialData {
    /// Bump of radius r0 and height A at X0.
    Bump { x0: [f64; 3], r0: f64, amplitude: f64 },
    /// Uniform in [−A, A].
    Random { seed: u64, amplitude: f64 },
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub n: usize,
    pub layers: usize,
    pub grading: f64,
    pub import: Option<(PathBuf, PathBuf)>,
    pub import_tol: f64,
    pub edge_ratio_max: f64,
    pub dt: TimeStep,
    pub steps: usize,
    pub init: InitialData,
    pub probes: Vec<[f64; 3]>,
    /// None: first step after the stabilization time.
    pub window_start: Option<usize>,
    /// None: last step.
    pub window_end: Option<usize>,
    pub snapshot_every: usize,
    pub pcg_tol: f64,
    pub bound_tol: f64,
    pub energy_guard: f64,
    pub window_fn: Window,
    pub prominence: f64,
    pub max_peaks: usize,
    pub match_tol: f64,
    pub exact_count: usize,
    pub signals: Option<PathBuf>,
    pub out: PathBuf,
    pub force: bool,
    pub force_window: bool,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 8,
            layers: 8,
            grading: 1.0,
            import: None,
            import_tol: 1e-6,
            edge_ratio_max: 4.0,
            dt: TimeStep::Auto,
            steps: 1000,
            init: InitialData::Bump {
                x0: [0.0; 3],
                r0: 0.3,
                amplitude: 100.0,
            },
            probes: vec![[0.0; 3]],
            window_start: None,
            window_end: None,
            snapshot_every: 0,
            pcg_tol: 1e-12,
            bound_tol: 1e-4,
            energy_guard: 10.0,
            window_fn: Window::None,
            prominence: 0.01,
            max_peaks: 64,
            match_tol: 0.1,
            exact_count: 16,
            signals: None,
            out: std::env::var_os(OUT_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
            force: false,
            force_window: false,
            threads: 1,
        }
    }
}

/// `key = value` lines; `#` starts a comment, blank lines are skipped.
pub fn parse_pairs(text: &str) -> Result<Vec<(String, String)>> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value, got {raw:?}", i + 1))?;
        pairs.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(pairs)
}

pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse_pairs(&text).with_context(|| format!("in config {}", path.display()))
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse().map_err(|e| anyhow!("{key}: cannot parse {v:?}: {e}"))
}

fn flag(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => bail!("{key}: expected true or false, got {v:?}"),
    }
}

fn point(key: &str, v: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        bail!("{key}: expected x,y,z, got {v:?}");
    }
    Ok([num(key, parts[0])?, num(key, parts[1])?, num(key, parts[2])?])
}

fn auto_or<T: std::str::FromStr>(key: &str, v: &str) -> Result<Option<T>>
where
    T::Err: std::fmt::Display,
{
    if v == "auto" {
        Ok(None)
    } else {
        num(key, v).map(Some)
    }
}

impl RunConfig {
    pub fn apply(&mut self, key: &str, v: &str) -> Result<()> {
        // initial-data keys are collected first and combined in `set_init`
        match key {
            "n" => self.n = num(key, v)?,
            "layers" => self.layers = num(key, v)?,
            "grading" => self.grading = num(key, v)?,
            "import" => {
                let (a, b) = v
                    .split_once(',')
                    .ok_or_else(|| anyhow!("import: expected NODE,ELE, got {v:?}"))?;
                self.import = Some((PathBuf::from(a.trim()), PathBuf::from(b.trim())));
            }
            "import_tol" => self.import_tol = num(key, v)?,
            "edge_ratio_max" => self.edge_ratio_max = num(key, v)?,
            "dt" => self.dt = auto_or(key, v)?.map_or(TimeStep::Auto, TimeStep::Fixed),
            "steps" => self.steps = num(key, v)?,
            "init" => {
                self.init = match v {
                    "bump" => InitialData::Bump {
                        x0: [0.0; 3],
                        r0: 0.3,
                        amplitude: self.amplitude(),
                    },
                    "random" => InitialData::Random {
                        seed: 0,
                        amplitude: self.amplitude(),
                    },
                    _ => bail!("init: expected bump or random, got {v:?}"),
                }
            }
            "x0" | "r0" | "amplitude" | "seed" => self.set_init(key, v)?,
            "probes" => {
                self.probes = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|p| point(key, p))
                    .collect::<Result<_>>()?
            }
            "window_start" => self.window_start = auto_or(key, v)?,
            "window_end" => self.window_end = auto_or(key, v)?,
            "snapshot_every" => self.snapshot_every = num(key, v)?,
            "pcg_tol" => self.pcg_tol = num(key, v)?,
            "bound_tol" => self.bound_tol = num(key, v)?,
            "energy_guard" => self.energy_guard = num(key, v)?,
            "window_fn" => {
                self.window_fn = match v {
                    "none" => Window::None,
                    "hann" => Window::Hann,
                    _ => bail!("window_fn: expected none or hann, got {v:?}"),
                }
            }
            "prominence" => self.prominence = num(key, v)?,
            "max_peaks" => self.max_peaks = num(key, v)?,
            "match_tol" => self.match_tol = num(key, v)?,
            "exact_count" => self.exact_count = num(key, v)?,
            "signals" => self.signals = Some(PathBuf::from(v)),
            "out" => self.out = PathBuf::from(v),
            "force" => self.force = flag(key, v)?,
            "force_window" => self.force_window = flag(key, v)?,
            "threads" => self.threads = num(key, v)?,
            _ => bail!("unknown configuration key {key:?}"),
        }
        Ok(())
    }

    fn amplitude(&self) -> f64 {
        match self.init {
            InitialData::Bump { amplitude, .. } | InitialData::Random { amplitude, .. } => amplitude,
        }
    }

    fn set_init(&mut self, key: &str, v: &str) -> Result<()> {
        match (&mut self.init, key) {
            (InitialData::Bump { amplitude, .. } | InitialData::Random { amplitude, .. }, "amplitude") => {
                *amplitude = num(key, v)?
            }
            (InitialData::Bump { x0, .. }, "x0") => *x0 = point(key, v)?,
            (InitialData::Bump { r0, .. }, "r0") => *r0 = num(key, v)?,
            (InitialData::Random { seed, .. }, "seed") => *seed = num(key, v)?,
            _ => bail!("{key} does not apply to the selected initial data"),
        }
        Ok(())
    }

    /// Applies pairs in order; `init` is applied first so that its parameters
    /// may appear anywhere in the list.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<RunConfig> {
        let mut c = RunConfig::default();
        if let Some((_, v)) = pairs.iter().rev().find(|(k, _)| k == "init") {
            c.apply("init", v)?;
        }
        for (k, v) in pairs.iter().filter(|(k, _)| k != "init") {
            c.apply(k, v)?;
        }
        c.validate()?;
        Ok(c)
    }

    /// Cross-field checks done before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.import.is_none() && (self.n == 0 || self.layers == 0) {
            bail!("n and layers must be at least 1");
        }
        if !(self.grading > 0.0) {
            bail!("grading must be positive");
        }
        if let TimeStep::Fixed(dt) = self.dt {
            if !(dt > 0.0) {
                bail!("dt must be positive or auto");
            }
        }
        if let InitialData::Bump { r0, .. } = self.init {
            if !(r0 > 0.0) {
                bail!("r0 must be positive");
            }
        }
        if let (Some(a), Some(b)) = (self.window_start, self.window_end) {
            if a > b {
                bail!("window_start {a} exceeds window_end {b}");
            }
        }
        if let Some(b) = self.window_end {
            if b > self.steps {
                bail!("window_end {b} exceeds steps {}", self.steps);
            }
        }
        if self.probes.is_empty() {
            bail!("at least one probe point is required");
        }
        if !(self.pcg_tol > 0.0 && self.bound_tol > 0.0 && self.match_tol > 0.0) {
            bail!("tolerances must be positive");
        }
        if !(self.prominence >= 0.0 && self.prominence < 1.0) {
            bail!("prominence must lie in [0, 1)");
        }
        if self.threads == 0 {
            bail!("threads must be at least 1");
        }
        Ok(())
    }

    pub fn probe_points(&self) -> Vec<Vector3<f64>> {
        self.probes.iter().map(|p| Vector3::new(p[0], p[1], p[2])).collect()
    }
}
