//! Run configuration: flat `key=value` text with dotted section prefixes.
//!
//! A config file is a sequence of `section.key = value` lines; `#` starts a
//! comment. Command-line `--set key=value` pairs override file entries, and
//! the `OLIM2D_OUTPUT_DIR` environment variable overrides the output
//! directory (only that key) last.

use std::collections::BTreeMap;
use std::path::PathBuf;

use olim2d::grid::Domain;
use olim2d::models::{DiffusionKind, LambdaPhageModel, LinearModel, MaierSteinModel, PolarModel};
use olim2d::solver::{rule_of_thumb_k, BoundaryPolicy};
use olim2d::{Model, Vec2};

use crate::error::{CliError, Result};

/// Names accepted for `model.name`.
pub const REGISTERED_MODELS: &[&str] = &["linear", "polar", "maier-stein", "lambda-phage"];

/// Environment variable that overrides `output.dir`.
pub const OUTPUT_DIR_ENV: &str = "OLIM2D_OUTPUT_DIR";

/// An ordered key=value store with consumption tracking, so unrecognized
/// keys can be reported as usage errors.
#[derive(Debug, Default, Clone)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse_text(text: &str) -> Result<Self> {
        let mut kv = KeyValues::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            kv.set_pair(line).map_err(|e| {
                CliError::usage(format!("config line {}: {e}", lineno + 1))
            })?;
        }
        Ok(kv)
    }

    /// Insert from a `key=value` string.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::usage(format!("expected key=value, got '{pair}'")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::usage(format!("empty key in '{pair}'")));
        }
        self.map.insert(key.to_string(), value.trim().to_string());
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    /// Insert only when the key is not already present.
    pub fn set_default(&mut self, key: &str, value: impl ToString) {
        self.map.entry(key.to_string()).or_insert_with(|| value.to_string());
    }

    fn take(&mut self, key: &str) -> Option<String> {
        self.map.remove(key)
    }

    fn take_parsed<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::usage(format!("cannot parse '{s}' for key '{key}'"))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key).as_deref() {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(s) => Err(CliError::usage(format!(
                "key '{key}' expects true or false, got '{s}'"
            ))),
        }
    }

    fn take_list<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<Vec<T>>> {
        match self.take(key) {
            None => Ok(None),
            Some(s) => s
                .split(',')
                .map(|tok| {
                    tok.trim().parse().map_err(|_| {
                        CliError::usage(format!("cannot parse '{tok}' in list key '{key}'"))
                    })
                })
                .collect::<Result<Vec<T>>>()
                .map(Some),
        }
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.map.keys().next() {
            return Err(CliError::usage(format!("unknown config key '{key}'")));
        }
        Ok(())
    }
}

/// The model and its parameter overrides.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Linear { alpha: f64, gamma: f64 },
    Polar,
    MaierStein { alpha: f64, gamma: f64 },
    LambdaPhage { diffusion: DiffusionKind },
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Linear { .. } => "linear",
            ModelSpec::Polar => "polar",
            ModelSpec::MaierStein { .. } => "maier-stein",
            ModelSpec::LambdaPhage { .. } => "lambda-phage",
        }
    }

    pub fn build(&self) -> olim2d::Result<Box<dyn Model>> {
        Ok(match *self {
            ModelSpec::Linear { alpha, gamma } => Box::new(LinearModel::new(alpha, gamma)?),
            ModelSpec::Polar => Box::new(PolarModel::new()),
            ModelSpec::MaierStein { alpha, gamma } => {
                Box::new(MaierSteinModel::new(alpha, gamma)?)
            }
            ModelSpec::LambdaPhage { diffusion } => Box::new(LambdaPhageModel::new(diffusion)?),
        })
    }

    /// Rebuild the same model kind with different diffusion parameters
    /// (used by sweeps). Errors for models without those parameters.
    pub fn with_alpha_gamma(&self, alpha: f64, gamma: f64) -> Result<ModelSpec> {
        match self {
            ModelSpec::Linear { .. } => Ok(ModelSpec::Linear { alpha, gamma }),
            ModelSpec::MaierStein { .. } => Ok(ModelSpec::MaierStein { alpha, gamma }),
            _ => Err(CliError::usage(format!(
                "model '{}' has no (alpha, gamma) diffusion parameters",
                self.name()
            ))),
        }
    }

    pub fn default_domain(&self) -> Domain {
        let d = match self {
            ModelSpec::Linear { .. } => Domain::new(-1.0, 1.0, -1.0, 1.0),
            ModelSpec::Polar => Domain::new(-3.8, 4.2, -4.0, 4.0),
            ModelSpec::MaierStein { .. } => Domain::new(-2.0, 2.0, -2.0, 2.0),
            ModelSpec::LambdaPhage { .. } => Domain::new(0.0, 250.0, 0.0, 250.0),
        };
        d.expect("built-in default domains are valid")
    }

    pub fn default_boundary(&self) -> BoundaryPolicy {
        match self {
            ModelSpec::LambdaPhage { .. } => BoundaryPolicy::ComputeWholeDomain,
            _ => BoundaryPolicy::StopOnBoundary,
        }
    }

    pub fn has_exact_u(&self) -> bool {
        matches!(self, ModelSpec::Linear { .. } | ModelSpec::Polar)
    }

    /// Default Newton seed for the saddle targeted by `map` and `rate`.
    pub fn saddle_seed(&self) -> Option<Vec2> {
        match self {
            ModelSpec::Linear { .. } => None,
            ModelSpec::Polar => Some(Vec2::new(-3.0, 0.0)),
            ModelSpec::MaierStein { .. } => Some(Vec2::new(0.0, 0.0)),
            ModelSpec::LambdaPhage { .. } => Some(olim2d::models::SADDLE_SEED),
        }
    }

    fn from_kv(kv: &mut KeyValues) -> Result<ModelSpec> {
        let name = kv
            .take("model.name")
            .ok_or_else(|| CliError::usage("missing required key 'model.name'"))?;
        let spec = match name.as_str() {
            "linear" => ModelSpec::Linear {
                alpha: kv.take_parsed("model.alpha")?.unwrap_or(0.0),
                gamma: kv.take_parsed("model.gamma")?.unwrap_or(1.0),
            },
            "polar" => ModelSpec::Polar,
            "maier-stein" => ModelSpec::MaierStein {
                alpha: kv.take_parsed("model.alpha")?.unwrap_or(0.0),
                gamma: kv.take_parsed("model.gamma")?.unwrap_or(1.0),
            },
            "lambda-phage" => ModelSpec::LambdaPhage {
                diffusion: match kv.take("model.diffusion").as_deref() {
                    None | Some("diagonal") => DiffusionKind::Diagonal,
                    Some("identity") => DiffusionKind::Identity,
                    Some(s) => {
                        return Err(CliError::usage(format!(
                            "model.diffusion must be 'diagonal' or 'identity', got '{s}'"
                        )))
                    }
                },
            },
            other => {
                return Err(CliError::usage(format!(
                    "unknown model '{other}'; registered models: {}",
                    REGISTERED_MODELS.join(", ")
                )))
            }
        };
        Ok(spec)
    }

    fn emit(&self, kv: &mut KeyValues) {
        kv.set("model.name", self.name());
        match *self {
            ModelSpec::Linear { alpha, gamma } | ModelSpec::MaierStein { alpha, gamma } => {
                kv.set("model.alpha", alpha);
                kv.set("model.gamma", gamma);
            }
            ModelSpec::Polar => {}
            ModelSpec::LambdaPhage { diffusion } => {
                kv.set(
                    "model.diffusion",
                    match diffusion {
                        DiffusionKind::Diagonal => "diagonal",
                        DiffusionKind::Identity => "identity",
                    },
                );
            }
        }
    }
}

/// Which artifacts a run writes.
#[derive(Debug, Clone, PartialEq)]
pub struct Outputs {
    pub u_field: bool,
    pub u_csv: bool,
    pub labels: bool,
    pub gradient: bool,
    pub residual: bool,
    pub error_report: bool,
}

/// How sweep rows pick the update factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KRule {
    RuleOfThumb,
    Fixed(usize),
}

impl KRule {
    pub fn k_for(&self, n: usize) -> usize {
        match *self {
            KRule::RuleOfThumb => rule_of_thumb_k(n),
            KRule::Fixed(k) => k,
        }
    }
}

/// Sweep axes: the cartesian product of `n` and the diffusion parameter
/// lists defines the rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub n_list: Vec<usize>,
    pub k_rule: KRule,
    pub alphas: Vec<f64>,
    pub gammas: Vec<f64>,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub nx: usize,
    pub ny: usize,
    pub k: usize,
    pub domain: Domain,
    pub boundary: BoundaryPolicy,
    pub output_dir: PathBuf,
    pub outputs: Outputs,
    pub map_start: Option<Vec2>,
    pub rate_epsilon: f64,
    pub rate_stencil_mult: usize,
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Resolve a key=value store into a config, applying model-dependent
    /// defaults. Consumes every key; leftovers are usage errors.
    pub fn from_kv(mut kv: KeyValues) -> Result<RunConfig> {
        let model = ModelSpec::from_kv(&mut kv)?;

        let n: Option<usize> = kv.take_parsed("solver.n")?;
        let nx = kv.take_parsed("solver.nx")?.or(n).unwrap_or(256);
        let ny = kv.take_parsed("solver.ny")?.or(n).unwrap_or(256);
        let k = match kv.take_parsed("solver.k")? {
            Some(k) => k,
            None => rule_of_thumb_k(nx.max(ny)),
        };
        let dd = model.default_domain();
        let xmin = kv.take_parsed("solver.xmin")?.unwrap_or(dd.xmin);
        let xmax = kv.take_parsed("solver.xmax")?.unwrap_or(dd.xmax);
        let ymin = kv.take_parsed("solver.ymin")?.unwrap_or(dd.ymin);
        let ymax = kv.take_parsed("solver.ymax")?.unwrap_or(dd.ymax);
        let domain = Domain::new(xmin, xmax, ymin, ymax)
            .map_err(|e| CliError::usage(e.to_string()))?;
        let boundary = match kv.take("solver.boundary").as_deref() {
            None => model.default_boundary(),
            Some("stop-on-boundary") => BoundaryPolicy::StopOnBoundary,
            Some("whole-domain") => BoundaryPolicy::ComputeWholeDomain,
            Some(s) => {
                return Err(CliError::usage(format!(
                    "solver.boundary must be 'stop-on-boundary' or 'whole-domain', got '{s}'"
                )))
            }
        };

        let output_dir = PathBuf::from(kv.take("output.dir").unwrap_or_else(|| "out".into()));
        let outputs = Outputs {
            u_field: kv.take_bool("output.u_field")?.unwrap_or(true),
            u_csv: kv.take_bool("output.u_csv")?.unwrap_or(false),
            labels: kv.take_bool("output.labels")?.unwrap_or(false),
            gradient: kv.take_bool("output.gradient")?.unwrap_or(false),
            residual: kv.take_bool("output.residual")?.unwrap_or(false),
            error_report: kv.take_bool("output.error_report")?.unwrap_or(model.has_exact_u()),
        };
        if outputs.error_report && !model.has_exact_u() {
            return Err(CliError::usage(format!(
                "output.error_report needs an exact solution, which model '{}' does not provide",
                model.name()
            )));
        }

        let map_start = match (
            kv.take_parsed::<f64>("map.start_x")?,
            kv.take_parsed::<f64>("map.start_y")?,
        ) {
            (Some(x), Some(y)) => Some(Vec2::new(x, y)),
            (None, None) => None,
            _ => {
                return Err(CliError::usage(
                    "map.start_x and map.start_y must be given together",
                ))
            }
        };

        let rate_epsilon = kv.take_parsed("rate.epsilon")?.unwrap_or(1.0);
        if rate_epsilon <= 0.0 {
            return Err(CliError::usage("rate.epsilon must be positive"));
        }
        let rate_stencil_mult = kv.take_parsed("rate.stencil_mult")?.unwrap_or(4);

        let sweep = SweepConfig {
            n_list: kv.take_list("sweep.n")?.unwrap_or_else(|| vec![128, 256, 512, 1024]),
            k_rule: match kv.take("sweep.k").as_deref() {
                None | Some("rule-of-thumb") => KRule::RuleOfThumb,
                Some(s) => KRule::Fixed(s.parse().map_err(|_| {
                    CliError::usage(format!(
                        "sweep.k must be 'rule-of-thumb' or an integer, got '{s}'"
                    ))
                })?),
            },
            alphas: kv.take_list("sweep.alpha")?.unwrap_or_else(|| vec![0.0]),
            gammas: kv.take_list("sweep.gamma")?.unwrap_or_else(|| vec![1.0]),
        };

        kv.finish()?;
        Ok(RunConfig {
            model,
            nx,
            ny,
            k,
            domain,
            boundary,
            output_dir,
            outputs,
            map_start,
            rate_epsilon,
            rate_stencil_mult,
            sweep,
        })
    }

    /// The effective config as key=value pairs; parsing them back yields an
    /// equal config.
    pub fn to_kv(&self) -> KeyValues {
        let mut kv = KeyValues::default();
        self.model.emit(&mut kv);
        kv.set("solver.nx", self.nx);
        kv.set("solver.ny", self.ny);
        kv.set("solver.k", self.k);
        kv.set("solver.xmin", self.domain.xmin);
        kv.set("solver.xmax", self.domain.xmax);
        kv.set("solver.ymin", self.domain.ymin);
        kv.set("solver.ymax", self.domain.ymax);
        kv.set(
            "solver.boundary",
            match self.boundary {
                BoundaryPolicy::StopOnBoundary => "stop-on-boundary",
                BoundaryPolicy::ComputeWholeDomain => "whole-domain",
            },
        );
        kv.set("output.dir", self.output_dir.display());
        kv.set("output.u_field", self.outputs.u_field);
        kv.set("output.u_csv", self.outputs.u_csv);
        kv.set("output.labels", self.outputs.labels);
        kv.set("output.gradient", self.outputs.gradient);
        kv.set("output.residual", self.outputs.residual);
        kv.set("output.error_report", self.outputs.error_report);
        if let Some(p) = self.map_start {
            kv.set("map.start_x", p.x);
            kv.set("map.start_y", p.y);
        }
        kv.set("rate.epsilon", self.rate_epsilon);
        kv.set("rate.stencil_mult", self.rate_stencil_mult);
        kv.set("sweep.n", join(&self.sweep.n_list));
        kv.set(
            "sweep.k",
            match self.sweep.k_rule {
                KRule::RuleOfThumb => "rule-of-thumb".to_string(),
                KRule::Fixed(k) => k.to_string(),
            },
        );
        kv.set("sweep.alpha", join(&self.sweep.alphas));
        kv.set("sweep.gamma", join(&self.sweep.gammas));
        kv
    }
}

fn join<T: ToString>(list: &[T]) -> String {
    list.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

impl KeyValues {
    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}
