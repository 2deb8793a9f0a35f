//! Declarative run configuration, stored as TOML.

use std::fmt;

use orlicz::phi::FamilyDescriptor;
use orlicz::solver::Method;
use orlicz::{Domain, Grid, PhiFunction, ScalarField, Variant};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Check,
    Constants,
    Conjugate,
    Solve,
    Refine,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Command::Check => "check",
            Command::Constants => "constants",
            Command::Conjugate => "conjugate",
            Command::Solve => "solve",
            Command::Refine => "refine",
        };
        f.write_str(name)
    }
}

/// Uniform grid: `extent` is `[a, b]` in 1D and `[a, b, c, d]` in 2D.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "GridSpec::default_dim")]
    pub dim: usize,
    #[serde(default = "GridSpec::default_extent")]
    pub extent: Vec<f64>,
    #[serde(default = "GridSpec::default_n")]
    pub n: usize,
}

impl GridSpec {
    fn default_dim() -> usize {
        1
    }

    fn default_extent() -> Vec<f64> {
        vec![0.0, 1.0]
    }

    fn default_n() -> usize {
        101
    }

    pub fn domain(&self) -> Result<Domain, CliError> {
        match (self.dim, self.extent.as_slice()) {
            (1, &[a, b]) => Ok(Domain::interval(a, b)),
            (2, &[a, b, c, d]) => Ok(Domain::rectangle(a, b, c, d)),
            (dim, e) => Err(CliError::Validation(vec![format!(
                "grid.extent needs {} values for dim = {dim}, got {}",
                2 * dim,
                e.len()
            )])),
        }
    }

    pub fn with_n(&self, n: usize) -> Result<Grid, CliError> {
        Ok(Grid::new(self.domain()?, n)?)
    }

    pub fn build(&self) -> Result<Grid, CliError> {
        self.with_n(self.n)
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            dim: Self::default_dim(),
            extent: Self::default_extent(),
            n: Self::default_n(),
        }
    }
}

/// Per-command knobs. Each command reads only the fields it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Solver tolerance; the family default when absent.
    pub tol: Option<f64>,
    pub method: Method,
    pub variant: Variant,
    /// Adds the 1/p(x), 1/q(x) energy factors.
    pub normalized: bool,
    /// Right-hand side `f(x, y)`.
    pub load: String,
    /// Exponents for the power-law pair inequality.
    pub r: Vec<f64>,
    pub pairs: usize,
    /// Grid resolution of the best-constant search.
    pub best_n: usize,
    pub ns: Vec<usize>,
    pub t_min: f64,
    pub t_max: f64,
    pub t_count: usize,
    pub s_min: f64,
    pub s_max: f64,
    pub s_count: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            tol: None,
            method: Method::Newton,
            variant: Variant::A,
            normalized: false,
            load: "1".into(),
            r: vec![1.2, 1.5, 2.0, 3.0, 4.0, 6.0],
            pairs: 100_000,
            best_n: 1000,
            ns: vec![26, 51, 101, 201],
            t_min: 1e-6,
            t_max: 1e6,
            t_count: 600,
            s_min: 1e-2,
            s_max: 1e2,
            s_count: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// May be left out of the file when the command line supplies it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    #[serde(default)]
    pub seed: u64,
    pub phi: FamilyDescriptor,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub options: Options,
}

impl RunConfig {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn phi(&self) -> Result<PhiFunction, CliError> {
        let phi = PhiFunction::make_family(&self.phi, &self.grid.domain()?)?;
        let on = phi.normalized() || self.options.normalized;
        Ok(phi.with_normalized(on))
    }

    pub fn load(&self) -> Result<ScalarField, CliError> {
        Ok(ScalarField::parse(&self.options.load, &self.grid.domain()?)?)
    }

    /// Checks every invariant a run relies on and names each one violated.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut errs = Vec::new();
        let mut note = |r: Result<(), CliError>| {
            if let Err(e) = r {
                match e {
                    CliError::Validation(v) => errs.extend(v),
                    other => errs.push(other.to_string()),
                }
            }
        };
        note(self.grid.build().map(drop));
        note(self.phi().map(drop));
        note(self.load().map(drop));
        let o = &self.options;
        if self.seed > i64::MAX as u64 {
            errs.push(format!("seed must be at most {}", i64::MAX));
        }
        if let Some(tol) = o.tol {
            if !(tol > 0.0 && tol.is_finite()) {
                errs.push(format!("options.tol must be positive, got {tol}"));
            }
        }
        if o.r.iter().any(|&r| !(r > 1.0 && r.is_finite())) {
            errs.push("options.r entries must exceed 1".into());
        }
        if o.pairs == 0 {
            errs.push("options.pairs must be positive".into());
        }
        if o.best_n < 2 {
            errs.push("options.best_n must be at least 2".into());
        }
        if o.ns.is_empty() || o.ns.iter().any(|&n| n < 3) {
            errs.push("options.ns must list grid sizes of at least 3".into());
        }
        for (name, lo, hi, count) in [("t", o.t_min, o.t_max, o.t_count), ("s", o.s_min, o.s_max, o.s_count)] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) || count < 2 {
                errs.push(format!("options.{name}_min/{name}_max/{name}_count must give a positive range of 2+ points"));
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errs))
        }
    }
}

/// Parses and validates a config.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map(|s| line_column(text, s.start)).unwrap_or((1, 1));
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })?;
    config.validate()?;
    Ok(config)
}

/// 1-based line and column of a byte offset.
fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}
