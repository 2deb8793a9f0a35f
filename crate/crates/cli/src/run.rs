//! Command dispatch. Every command writes its artifacts into one output
//! directory and reports whether all verdicts held.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use orlicz::mono::{estimate_best_constant_powerlaw, powerlaw_constant, sample_pairs, verify_generalized, verify_powerlaw_any};
use orlicz::phi::FamilyDescriptor;
use orlicz::props::{full_suite, log_grid};
use orlicz::solver::{refinement_study, solve_dirichlet, RefinementReport, SolveOptions};
use orlicz::{DiscreteOperator, Grid, GridFunction, Point, PropertyReport, ScalarField, SeededRng, Verdict};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, RunConfig};
use crate::CliError;

/// Upper limit on the x-samples a `check` run draws from the grid nodes.
pub const MAX_CHECK_NODES: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    /// Every verdict held (or the solve converged).
    Holds,
    /// At least one property failed with a witness.
    Fails,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Holds => 0,
            Status::Fails => 2,
        }
    }

    fn of(verdicts: impl IntoIterator<Item = Verdict>) -> Status {
        if verdicts.into_iter().any(|v| v == Verdict::Fails) {
            Status::Fails
        } else {
            Status::Holds
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub status: Status,
    pub artifacts: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Range of an expression field, estimated by sampling.
#[derive(Serialize)]
struct FieldBounds {
    field: String,
    source: String,
    lo: f64,
    hi: f64,
    rigorous: bool,
}

#[derive(Serialize)]
struct CheckOutput<'a> {
    command: Command,
    seed: u64,
    phi: &'a FamilyDescriptor,
    fields: Vec<FieldBounds>,
    x_samples: usize,
    reports: Vec<PropertyReport>,
}

#[derive(Serialize)]
struct PowerlawRow {
    r: f64,
    paper_constant: f64,
    best_constant: f64,
    report: PropertyReport,
}

#[derive(Serialize)]
struct Generalized {
    x: Point,
    report: PropertyReport,
}

#[derive(Serialize)]
struct ConstantsOutput<'a> {
    command: Command,
    seed: u64,
    phi: &'a FamilyDescriptor,
    powerlaw: Vec<PowerlawRow>,
    generalized: Generalized,
}

#[derive(Serialize)]
struct RefineOutput<'a> {
    command: Command,
    phi: &'a FamilyDescriptor,
    tol: f64,
    report: RefinementReport,
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}

/// Runs `config` and writes its artifacts into `out`.
pub fn run(config: &RunConfig, out: &Path) -> Result<Outcome, CliError> {
    config.validate()?;
    let command = config
        .command
        .ok_or_else(|| CliError::Validation(vec!["no command given in the config or on the command line".into()]))?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut w = Writer {
        dir: out,
        written: Vec::new(),
    };
    let (status, summary) = match command {
        Command::Check => check(config, &mut w)?,
        Command::Constants => constants(config, &mut w)?,
        Command::Conjugate => conjugate(config, &mut w)?,
        Command::Solve => solve(config, &mut w)?,
        Command::Refine => refine(config, &mut w)?,
    };
    Ok(Outcome {
        status,
        artifacts: w.written,
        summary,
    })
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes");
    s.push('\n');
    s
}

/// Grid nodes, thinned by a fixed stride when there are too many.
fn check_nodes(grid: &Grid) -> Vec<Point> {
    let stride = grid.len().div_ceil(MAX_CHECK_NODES);
    grid.points().into_iter().step_by(stride).collect()
}

fn field_bounds(desc: &FamilyDescriptor, prefix: &str, config: &RunConfig, out: &mut Vec<FieldBounds>) -> Result<(), CliError> {
    let domain = config.grid.domain()?;
    let mut push = |name: &str, src: &str| -> Result<(), CliError> {
        let f = ScalarField::parse(src, &domain)?;
        let (lo, hi) = f.bounds();
        out.push(FieldBounds {
            field: format!("{prefix}{name}"),
            source: src.to_string(),
            lo,
            hi,
            rigorous: f.is_constant(),
        });
        Ok(())
    };
    match desc {
        FamilyDescriptor::Power { p, .. } | FamilyDescriptor::VarExponent { p, .. } | FamilyDescriptor::LogPower { p, .. } => {
            push("p", p)
        }
        FamilyDescriptor::DoublePhase { p, q, mu, .. } | FamilyDescriptor::LogDoublePhase { p, q, mu, .. } => {
            push("p", p)?;
            push("q", q)?;
            push("mu", mu)
        }
        FamilyDescriptor::Sum { children } => {
            for (k, c) in children.iter().enumerate() {
                field_bounds(c, &format!("{prefix}children[{k}]."), config, out)?;
            }
            Ok(())
        }
        FamilyDescriptor::Scaled { child, .. } => field_bounds(child, &format!("{prefix}child."), config, out),
    }
}

fn check(config: &RunConfig, w: &mut Writer) -> Result<(Status, Vec<String>), CliError> {
    let phi = config.phi()?;
    let xs = check_nodes(&config.grid.build()?);
    let o = &config.options;
    let ts = log_grid(o.t_min, o.t_max, o.t_count);
    let reports = full_suite(&phi, &xs, &ts, &mut SeededRng::new(config.seed));
    let mut fields = Vec::new();
    field_bounds(&config.phi, "", config, &mut fields)?;
    let status = Status::of(reports.iter().map(|r| r.verdict));
    let summary = reports
        .iter()
        .map(|r| format!("{:<22} {:?}", r.property, r.verdict).to_lowercase())
        .collect();
    w.put(
        "check.json",
        &json(&CheckOutput {
            command: Command::Check,
            seed: config.seed,
            phi: &config.phi,
            fields,
            x_samples: xs.len(),
            reports,
        }),
    )?;
    Ok((status, summary))
}

fn constants(config: &RunConfig, w: &mut Writer) -> Result<(Status, Vec<String>), CliError> {
    let phi = config.phi()?;
    let o = &config.options;
    let mut rng = SeededRng::new(config.seed);
    let mut rows = Vec::new();
    let mut csv = csv::Writer::from_writer(Vec::new());
    csv.write_record(["r", "paper_constant", "best_constant", "min_ratio"]).expect("in-memory write");
    for &r in &o.r {
        let pairs = sample_pairs(&mut rng, o.pairs, 2);
        let report = verify_powerlaw_any(r, &pairs);
        let row = PowerlawRow {
            r,
            paper_constant: powerlaw_constant(r),
            best_constant: estimate_best_constant_powerlaw(r, o.best_n),
            report,
        };
        let min_ratio = row.report.constant("min_ratio").map_or(String::new(), |v| v.to_string());
        csv.write_record([r.to_string(), row.paper_constant.to_string(), row.best_constant.to_string(), min_ratio])
            .expect("in-memory write");
        rows.push(row);
    }
    let grid = config.grid.build()?;
    let x = grid.point(grid.len() / 2);
    let generalized = Generalized {
        x,
        report: verify_generalized(&phi, x, &sample_pairs(&mut rng, o.pairs, 2)),
    };
    let status = Status::of(rows.iter().map(|r| r.report.verdict).chain([generalized.report.verdict]));
    let mut summary: Vec<String> = rows
        .iter()
        .map(|r| format!("r = {}: C_r = {}, best constant = {:.6}, pairs {:?}", r.r, r.paper_constant, r.best_constant, r.report.verdict).to_lowercase())
        .collect();
    summary.push(format!(
        "generalized ratio at x = {:?}: {:?}, inf = {}",
        x,
        generalized.report.verdict,
        generalized.report.constant("C").map_or("n/a".into(), |c| format!("{c:.6}"))
    ));
    let table = String::from_utf8(csv.into_inner().expect("in-memory flush")).expect("csv is utf-8");
    w.put(
        "constants.json",
        &json(&ConstantsOutput {
            command: Command::Constants,
            seed: config.seed,
            phi: &config.phi,
            powerlaw: rows,
            generalized,
        }),
    )?;
    w.put("constants.csv", &table)?;
    Ok((status, summary))
}

fn conjugate(config: &RunConfig, w: &mut Writer) -> Result<(Status, Vec<String>), CliError> {
    let phi = config.phi()?;
    let grid = config.grid.build()?;
    let o = &config.options;
    let ss = log_grid(o.s_min, o.s_max, o.s_count);
    let rows: Vec<Vec<f64>> = grid
        .points()
        .par_iter()
        .map(|&x| ss.iter().map(|&s| phi.conjugate_eval(x, s)).collect::<orlicz::Result<Vec<f64>>>())
        .collect::<orlicz::Result<_>>()?;
    let mut csv = csv::Writer::from_writer(Vec::new());
    let header: &[&str] = if grid.dim() == 1 { &["x", "s", "value"] } else { &["x", "y", "s", "value"] };
    csv.write_record(header).expect("in-memory write");
    for (x, values) in grid.points().iter().zip(&rows) {
        for (s, v) in ss.iter().zip(values) {
            let mut rec = vec![x[0].to_string()];
            if grid.dim() == 2 {
                rec.push(x[1].to_string());
            }
            rec.push(s.to_string());
            rec.push(v.to_string());
            csv.write_record(&rec).expect("in-memory write");
        }
    }
    let table = String::from_utf8(csv.into_inner().expect("in-memory flush")).expect("csv is utf-8");
    w.put("conjugate.csv", &table)?;
    Ok((Status::Holds, vec![format!("{} nodes x {} values of s", grid.len(), ss.len())]))
}

fn solve_options(config: &RunConfig, phi: &orlicz::PhiFunction) -> SolveOptions {
    let mut opts = SolveOptions::for_phi(phi);
    opts.method = config.options.method;
    if let Some(tol) = config.options.tol {
        opts.tol = tol;
    }
    opts
}

fn solve(config: &RunConfig, w: &mut Writer) -> Result<(Status, Vec<String>), CliError> {
    let phi = config.phi()?;
    let grid = Arc::new(config.grid.build()?);
    let op = DiscreteOperator::new(phi.clone(), grid.clone(), config.options.variant);
    let load = config.load()?;
    let f = GridFunction::from_fn(grid, |p| load.eval(p));
    let opts = solve_options(config, &phi);
    let res = solve_dirichlet(&op, &f, &opts)?;
    w.put("solution.csv", &res.u.to_csv_string())?;
    let mut meta = res.metadata_json();
    meta.push('\n');
    w.put("solve.json", &meta)?;
    Ok((
        Status::Holds,
        vec![format!(
            "converged in {} iterations, residual {:.3e} (tol {:.0e}), max |u| = {}",
            res.iterations,
            res.residual_inf,
            opts.tol,
            res.u.max_abs()
        )],
    ))
}

fn refine(config: &RunConfig, w: &mut Writer) -> Result<(Status, Vec<String>), CliError> {
    let phi = config.phi()?;
    let load = config.load()?;
    let opts = solve_options(config, &phi);
    let make = |n| Ok(DiscreteOperator::new(phi.clone(), Arc::new(config.grid.with_n(n).map_err(core_error)?), config.options.variant));
    let report = refinement_study(make, |p| load.eval(p), &config.options.ns, &opts)?;
    let status = Status::of([report.verdict]);
    let summary = vec![format!(
        "n = {:?}: differences {:?}, ratios {:?}, verdict {:?}",
        report.ns, report.differences, report.ratios, report.verdict
    )
    .to_lowercase()];
    w.put(
        "refine.json",
        &json(&RefineOutput {
            command: Command::Refine,
            phi: &config.phi,
            tol: opts.tol,
            report,
        }),
    )?;
    Ok((status, summary))
}

fn core_error(e: CliError) -> orlicz::Error {
    match e {
        CliError::Core(e) => e,
        CliError::Validation(v) => orlicz::Error::Validation(v),
        other => orlicz::Error::Validation(vec![other.to_string()]),
    }
}
