//! Flat `section.key = value` run configuration.

use crate::error::{Error, Result};
use crate::model::{ModelParams, ScalingVariant};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcKind {
    Constant,
    SingleMode,
    TwoMode,
    RandomSmooth,
}

impl IcKind {
    pub fn name(self) -> &'static str {
        match self {
            IcKind::Constant => "constant",
            IcKind::SingleMode => "single_mode",
            IcKind::TwoMode => "two_mode",
            IcKind::RandomSmooth => "random_smooth",
        }
    }
}

impl FromStr for IcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(IcKind::Constant),
            "single_mode" => Ok(IcKind::SingleMode),
            "two_mode" => Ok(IcKind::TwoMode),
            "random_smooth" => Ok(IcKind::RandomSmooth),
            other => Err(config_err(
                "ic.kind",
                format!("unknown kind {other:?}; expected constant, single_mode, two_mode or random_smooth"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialConfig {
    pub kind: IcKind,
    pub amplitude: f64,
    pub rho_base: f64,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Time between density snapshots; 0 writes the final state only.
    pub snapshot_every: f64,
    /// Time between observer samples; 0 samples every step.
    pub observe_every: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PicardSettings {
    pub k_radius: f64,
    pub delta: f64,
    pub tol: f64,
    pub max_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub variant: ScalingVariant,
    pub n: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Single value for one run, strictly decreasing list for a sweep.
    pub epsilon: Vec<f64>,
    pub t_final: f64,
    pub cfl: f64,
    pub ic: InitialConfig,
    pub out: OutputConfig,
    pub picard: PicardSettings,
    /// `None` means twice the critical value `M/(4π)`.
    pub kappa: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            variant: ScalingVariant::First,
            n: 64,
            gamma: 1.0,
            alpha: 1.0,
            beta: 1.0,
            epsilon: vec![0.1],
            t_final: 0.25,
            cfl: 0.4,
            ic: InitialConfig {
                kind: IcKind::SingleMode,
                amplitude: 0.05,
                rho_base: 1.0,
                seed: None,
            },
            out: OutputConfig {
                dir: PathBuf::from("out"),
                snapshot_every: 0.0,
                observe_every: 0.0,
            },
            picard: PicardSettings {
                k_radius: 0.2,
                delta: 1e-3,
                tol: 1e-10,
                max_iters: 50,
            },
            kappa: None,
        }
    }
}

pub const CONFIG_KEYS: [&str; 20] = [
    "variant",
    "grid.n",
    "phys.gamma",
    "phys.alpha",
    "phys.beta",
    "run.epsilon",
    "run.T",
    "run.cfl",
    "ic.kind",
    "ic.amplitude",
    "ic.rho_base",
    "ic.seed",
    "out.dir",
    "out.snapshot_every",
    "out.observe_every",
    "picard.K",
    "picard.delta",
    "picard.tol",
    "picard.max_iters",
    "diag.kappa",
];

fn config_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        reason: reason.into(),
    }
}

fn parse_num<T: FromStr>(field: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| config_err(field, format!("cannot parse {value:?}")))
}

impl RunConfig {
    /// Parses `key = value` lines over the defaults. Blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    &format!("line {}", lineno + 1),
                    format!("expected key = value, got {line:?}"),
                )
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Applies `key=value`, as given on the command line.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| config_err(assignment, "expected key=value"))?;
        self.set(key.trim(), value.trim())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "variant" => {
                self.variant = value.parse().map_err(|_| {
                    config_err(
                        "variant",
                        format!("unknown variant {value:?}; expected first, second_poisson or third_parabolic"),
                    )
                })?
            }
            "grid.n" => self.n = parse_num(key, value)?,
            "phys.gamma" => self.gamma = parse_num(key, value)?,
            "phys.alpha" => self.alpha = parse_num(key, value)?,
            "phys.beta" => self.beta = parse_num(key, value)?,
            "run.epsilon" => {
                self.epsilon = value
                    .split(',')
                    .map(|s| parse_num(key, s))
                    .collect::<Result<Vec<f64>>>()?
            }
            "run.T" => self.t_final = parse_num(key, value)?,
            "run.cfl" => self.cfl = parse_num(key, value)?,
            "ic.kind" => self.ic.kind = value.parse()?,
            "ic.amplitude" => self.ic.amplitude = parse_num(key, value)?,
            "ic.rho_base" => self.ic.rho_base = parse_num(key, value)?,
            "ic.seed" => {
                self.ic.seed = if value.is_empty() {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            "out.dir" => self.out.dir = PathBuf::from(value),
            "out.snapshot_every" => self.out.snapshot_every = parse_num(key, value)?,
            "out.observe_every" => self.out.observe_every = parse_num(key, value)?,
            "picard.K" => self.picard.k_radius = parse_num(key, value)?,
            "picard.delta" => self.picard.delta = parse_num(key, value)?,
            "picard.tol" => self.picard.tol = parse_num(key, value)?,
            "picard.max_iters" => self.picard.max_iters = parse_num(key, value)?,
            "diag.kappa" => {
                self.kappa = if value.is_empty() {
                    None
                } else {
                    Some(parse_num(key, value)?)
                }
            }
            other => {
                return Err(config_err(
                    other,
                    format!("unknown key; valid keys are {}", CONFIG_KEYS.join(", ")),
                ))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 4 && self.n.is_power_of_two()) {
            return Err(config_err(
                "grid.n",
                format!("must be a power of two >= 4, got {}", self.n),
            ));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(config_err("phys.gamma", "must be > 0"));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(config_err("phys.alpha", "must be >= 0"));
        }
        if self.variant != ScalingVariant::SecondPoisson
            && !(self.beta > 0.0 && self.beta.is_finite())
        {
            return Err(config_err("phys.beta", "must be > 0"));
        }
        if self.epsilon.is_empty() {
            return Err(config_err("run.epsilon", "needs at least one value"));
        }
        for &e in &self.epsilon {
            if !(e > 0.0 && e <= 1.0) {
                return Err(config_err(
                    "run.epsilon",
                    format!("values must lie in (0, 1], got {e}"),
                ));
            }
        }
        if self.epsilon.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(config_err(
                "run.epsilon",
                "list must be strictly decreasing",
            ));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(config_err("run.T", "must be >= 0"));
        }
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(config_err("run.cfl", "must lie in (0, 1)"));
        }
        if !(self.ic.rho_base > 0.0 && self.ic.rho_base.is_finite()) {
            return Err(config_err("ic.rho_base", "must be > 0"));
        }
        if !(self.ic.amplitude >= 0.0 && self.ic.amplitude < self.ic.rho_base) {
            return Err(config_err(
                "ic.amplitude",
                format!(
                    "must lie in [0, rho_base) = [0, {}), got {}",
                    self.ic.rho_base, self.ic.amplitude
                ),
            ));
        }
        if self.ic.kind == IcKind::RandomSmooth && self.ic.seed.is_none() {
            return Err(config_err("ic.seed", "required for random_smooth"));
        }
        if !(self.out.snapshot_every >= 0.0) {
            return Err(config_err("out.snapshot_every", "must be >= 0"));
        }
        if !(self.out.observe_every >= 0.0) {
            return Err(config_err("out.observe_every", "must be >= 0"));
        }
        if !(self.picard.k_radius > 0.0 && self.picard.k_radius < 0.5 * self.ic.rho_base) {
            return Err(config_err("picard.K", "must lie in (0, rho_base/2)"));
        }
        if !(self.picard.delta >= 0.0 && self.picard.delta.is_finite()) {
            return Err(config_err("picard.delta", "must be >= 0"));
        }
        if !(self.picard.tol > 0.0) {
            return Err(config_err("picard.tol", "must be > 0"));
        }
        if self.picard.max_iters == 0 {
            return Err(config_err("picard.max_iters", "must be >= 1"));
        }
        if let Some(k) = self.kappa {
            if !(k > 0.0 && k.is_finite()) {
                return Err(config_err("diag.kappa", "must be > 0"));
            }
        }
        Ok(())
    }

    /// `diag.kappa`, or twice the critical `M/(4π)` for mass `M`.
    pub fn kappa_for(&self, mass: f64) -> f64 {
        self.kappa
            .unwrap_or(2.0 * mass / (4.0 * std::f64::consts::PI))
    }

    pub fn params(&self, epsilon: f64) -> Result<ModelParams> {
        ModelParams::new(self.variant, self.alpha, self.beta, self.gamma, epsilon)
    }

    /// Canonical text form; parses back to an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let eps: Vec<String> = self.epsilon.iter().map(|e| format!("{e:?}")).collect();
        let _ = writeln!(s, "variant = {}", self.variant.name());
        let _ = writeln!(s, "grid.n = {}", self.n);
        let _ = writeln!(s, "phys.gamma = {:?}", self.gamma);
        let _ = writeln!(s, "phys.alpha = {:?}", self.alpha);
        let _ = writeln!(s, "phys.beta = {:?}", self.beta);
        let _ = writeln!(s, "run.epsilon = {}", eps.join(","));
        let _ = writeln!(s, "run.T = {:?}", self.t_final);
        let _ = writeln!(s, "run.cfl = {:?}", self.cfl);
        let _ = writeln!(s, "ic.kind = {}", self.ic.kind.name());
        let _ = writeln!(s, "ic.amplitude = {:?}", self.ic.amplitude);
        let _ = writeln!(s, "ic.rho_base = {:?}", self.ic.rho_base);
        let _ = writeln!(
            s,
            "ic.seed = {}",
            self.ic.seed.map(|v| v.to_string()).unwrap_or_default()
        );
        let _ = writeln!(s, "out.dir = {}", self.out.dir.display());
        let _ = writeln!(s, "out.snapshot_every = {:?}", self.out.snapshot_every);
        let _ = writeln!(s, "out.observe_every = {:?}", self.out.observe_every);
        let _ = writeln!(s, "picard.K = {:?}", self.picard.k_radius);
        let _ = writeln!(s, "picard.delta = {:?}", self.picard.delta);
        let _ = writeln!(s, "picard.tol = {:?}", self.picard.tol);
        let _ = writeln!(s, "picard.max_iters = {}", self.picard.max_iters);
        let _ = writeln!(
            s,
            "diag.kappa = {}",
            self.kappa.map(|v| format!("{v:?}")).unwrap_or_default()
        );
        s
    }
}
