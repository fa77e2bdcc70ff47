//! Experiment driver: problem setup, solver configurations, CSV output.
//!
//! A configuration label names the precisions of the two stages as
//! `<bidiag>+<update>`, with `d` for binary64 and `s` for binary32; `d`
//! alone means both stages in binary64. Longer names (`f64`, `f32`,
//! `emu<t>`) are accepted on either side.
//!
//! Output files of one run share the prefix
//! `<problem>_n<n>_eps<eps>_seed<seed>`:
//!
//! * `_<label>_curves.csv`: per-iteration history of one configuration
//! * `_cross.csv`: relative errors, differences against the first
//!   configuration and the update error bound
//! * `_summary.txt`: selected iteration and error per rule and configuration
//! * `_advisor.txt`: precision advice from the Picard fit

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::advisor::{self, AdvisorReport};
use crate::error::{Error, Result};
use crate::lsqr::{self, IterationRecord, RunLength, SolverConfig, SolverHistory};
use crate::precision::{exact, Precision};
use crate::problems::{self, BlurParams, PicardDiagnostics, ProblemInstance, ProblemKind};
use crate::stopping::{self, StopRule, DEFAULT_TAU};

/// Dense SVD diagnostics are skipped above this many columns.
pub const DIAGNOSTICS_LIMIT: usize = 2500;

/// Slack applied to the update error bound in the comparison verdict.
pub const BOUND_SLACK: f64 = 10.0;

pub const DEFAULT_BLUR_SIDE: usize = 64;

/// One solver configuration: a label and the precisions of the two stages.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub label: String,
    pub spec_bidiag: Precision,
    pub spec_update: Precision,
}

fn parse_stage(s: &str) -> Result<Precision> {
    match s {
        "d" => Ok(Precision::Native64),
        "s" => Ok(Precision::Native32),
        other => other.parse(),
    }
}

impl RunSpec {
    /// Parses `d`, `s+d`, `s+s`, `emu14+d`, `f32+f64`, ...
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let (b, u) = match label.split_once('+') {
            Some((b, u)) => (parse_stage(b)?, parse_stage(u)?),
            None => {
                let p = parse_stage(label)?;
                (p, p)
            }
        };
        Ok(RunSpec {
            label: label.to_string(),
            spec_bidiag: b,
            spec_update: u,
        })
    }

    /// The three standard configurations `d`, `s+d`, `s+s`.
    pub fn standard() -> Vec<RunSpec> {
        ["d", "s+d", "s+s"]
            .iter()
            .map(|l| RunSpec::parse(l).unwrap())
            .collect()
    }

    /// Roundoff unit of the coarser stage.
    pub fn unit(&self) -> f64 {
        self.spec_bidiag.unit().max(self.spec_update.unit())
    }
}

/// Label with `+` spelled `p`, for file and column names.
pub fn sanitize_label(label: &str) -> String {
    label
        .chars()
        .map(|c| match c {
            '+' => 'p',
            c if c.is_ascii_alphanumeric() || c == '_' || c == '-' => c,
            _ => '_',
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    /// Number of unknowns; pixels for `blur2d`.
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blur: Option<BlurParams>,
    pub eps: f64,
    pub seed: u64,
    pub configs: Vec<RunSpec>,
    #[serde(default = "yes")]
    pub reorth: bool,
    pub max_iter: usize,
    #[serde(default = "default_run_length")]
    pub run_length: RunLength,
    pub rules: Vec<StopRule>,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_safety")]
    pub safety: f64,
    #[serde(default = "yes")]
    pub diagnostics: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn yes() -> bool {
    true
}
fn default_run_length() -> RunLength {
    RunLength::Overshoot
}
fn default_tau() -> f64 {
    DEFAULT_TAU
}
fn default_safety() -> f64 {
    advisor::DEFAULT_SAFETY
}

pub const PRESETS: [&str; 6] = [
    "paper-shaw",
    "paper-deriv2",
    "paper-gravity",
    "paper-heat",
    "paper-blurspeckle",
    "paper-blurdefocus",
];

impl ExperimentConfig {
    /// A config with the standard configurations and all three rules.
    pub fn new(problem: ProblemKind, n: usize, eps: f64, seed: u64) -> Self {
        ExperimentConfig {
            problem,
            n,
            blur: None,
            eps,
            seed,
            configs: RunSpec::standard(),
            reorth: true,
            max_iter: 300,
            run_length: RunLength::Overshoot,
            rules: vec![StopRule::Optimal, StopRule::Discrepancy, StopRule::LCurve],
            tau: DEFAULT_TAU,
            safety: advisor::DEFAULT_SAFETY,
            diagnostics: true,
            out_dir: None,
        }
    }

    /// Named preset. Blur presets use `size` as the image side (default 64).
    pub fn preset(name: &str, size: Option<usize>) -> Result<Self> {
        let one_d = |kind, n| {
            if size.is_some() {
                return Err(Error::InvalidConfig(format!(
                    "--size applies only to blur presets, not {name}"
                )));
            }
            Ok(ExperimentConfig::new(kind, n, 1e-3, 1))
        };
        let side = size.unwrap_or(DEFAULT_BLUR_SIDE);
        let blur = |params| {
            let mut c = ExperimentConfig::new(ProblemKind::Blur2d, side * side, 1e-2, 1);
            c.blur = Some(params);
            c.diagnostics = side * side <= DIAGNOSTICS_LIMIT;
            c
        };
        match name {
            "paper-shaw" => one_d(ProblemKind::Shaw, 1000),
            "paper-deriv2" => one_d(ProblemKind::Deriv2, 1000),
            "paper-gravity" => one_d(ProblemKind::Gravity, 2000),
            "paper-heat" => one_d(ProblemKind::Heat, 2000),
            "paper-blurspeckle" => Ok(blur(BlurParams::speckle(side))),
            "paper-blurdefocus" => Ok(blur(BlurParams::defocus(side))),
            _ => Err(Error::InvalidConfig(format!(
                "unknown preset '{name}'; known: {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.configs.is_empty() {
            return Err(Error::InvalidConfig("no solver configurations".to_string()));
        }
        let mut seen = HashSet::new();
        for c in &self.configs {
            if !seen.insert(c.label.as_str()) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate label '{}'",
                    c.label
                )));
            }
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidNoiseLevel(self.eps));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig(
                "max_iter must be positive".to_string(),
            ));
        }
        if self.rules.contains(&StopRule::Discrepancy) && !(self.tau > 1.0) {
            return Err(Error::InvalidConfig(format!(
                "tau must exceed 1, got {}",
                self.tau
            )));
        }
        Ok(())
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn solver_config(&self, run: &RunSpec) -> SolverConfig {
        SolverConfig {
            spec_bidiag: run.spec_bidiag,
            spec_update: run.spec_update,
            reorth: self.reorth,
            max_iter: self.max_iter,
            rules: self.rules.clone(),
            tau: self.tau,
            run_length: self.run_length,
            keep_iterates: true,
            track_kappa: true,
            track_orthogonality: true,
        }
    }

    /// File name prefix shared by all outputs.
    pub fn prefix(&self) -> String {
        format!(
            "{}_n{}_eps{:e}_seed{}",
            self.problem, self.n, self.eps, self.seed
        )
    }

    pub fn build_instance(&self) -> Result<ProblemInstance> {
        ProblemInstance::build(self.problem, self.n, self.blur, self.eps, self.seed)
    }
}

/// History of one configuration together with the problem it ran on.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub run: RunSpec,
    pub problem: String,
    pub n: usize,
    pub eps: f64,
    pub seed: u64,
    pub history: SolverHistory,
}

impl RunResult {
    pub fn label(&self) -> &str {
        &self.run.label
    }

    fn same_problem(&self, other: &RunResult) -> bool {
        self.problem == other.problem
            && self.n == other.n
            && self.eps == other.eps
            && self.seed == other.seed
    }

    /// Oracle-optimal iteration, from the recorded relative errors.
    pub fn k_optimal(&self) -> Option<usize> {
        self.history
            .decision(StopRule::Optimal)
            .map(|d| d.k1)
            .or_else(|| stopping::oracle_optimal(&self.history.relative_errors()?))
    }
}

/// Runs every configuration of `cfg` on one instance.
pub fn run_configs(inst: &ProblemInstance, cfg: &ExperimentConfig) -> Result<Vec<RunResult>> {
    cfg.validate()?;
    cfg.configs
        .iter()
        .map(|run| {
            Ok(RunResult {
                run: run.clone(),
                problem: inst.name().to_string(),
                n: inst.n(),
                eps: inst.eps(),
                seed: inst.seed(),
                history: lsqr::solve(inst, &cfg.solver_config(run))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossRow {
    pub k: usize,
    /// Relative error per configuration.
    pub re: Vec<Option<f64>>,
    /// `‖x_k − x_k^ref‖/‖x_k^ref‖` per non-reference configuration.
    pub reldiff: Vec<Option<f64>>,
    /// Update error bound per non-reference configuration.
    pub bound: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub label: String,
    pub pass: bool,
    /// Largest `reldiff / bound` over `k ≤ k0`.
    pub worst_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub labels: Vec<String>,
    /// Oracle-optimal iteration of the reference configuration.
    pub k0: usize,
    pub rows: Vec<CrossRow>,
    pub verdicts: Vec<Verdict>,
}

/// Compares every run against the first one, iteration by iteration.
///
/// All runs must share the problem and keep their iterates. The verdict for a
/// configuration passes when its relative difference stays within
/// `BOUND_SLACK` times the update error bound up to the reference optimum,
/// with the bound evaluated at the coarser unit of the two stages.
pub fn compare_runs(runs: &[RunResult]) -> Result<Comparison> {
    let Some(reference) = runs.first() else {
        return Err(Error::InvalidParameter("nothing to compare".to_string()));
    };
    for r in runs {
        if !r.same_problem(reference) {
            return Err(Error::InvalidParameter(format!(
                "run '{}' is on a different problem than '{}'",
                r.label(),
                reference.label()
            )));
        }
        if r.history.iterates.len() != r.history.records.len() {
            return Err(Error::InvalidParameter(format!(
                "run '{}' did not keep its iterates",
                r.label()
            )));
        }
    }
    let k0 = reference.k_optimal().ok_or_else(|| {
        Error::InvalidParameter("reference run has no relative errors".to_string())
    })?;
    let kmax = runs
        .iter()
        .map(|r| r.history.records.len())
        .max()
        .unwrap_or(0);
    let others = &runs[1..];
    let mut rows = Vec::with_capacity(kmax);
    for k in 1..=kmax {
        let re = runs
            .iter()
            .map(|r| r.history.records.get(k - 1).and_then(|rec| rec.re))
            .collect();
        let xr = reference.history.iterates.get(k - 1);
        let mut reldiff = Vec::with_capacity(others.len());
        let mut bound = Vec::with_capacity(others.len());
        for r in others {
            let x = r.history.iterates.get(k - 1);
            reldiff.push(match (x, xr) {
                (Some(x), Some(xr)) => Some(exact::dist(x, xr) / exact::norm(xr)),
                _ => None,
            });
            bound.push(
                r.history
                    .records
                    .get(k - 1)
                    .and_then(|rec| rec.kappa_rhat)
                    .map(|kappa| lsqr::update_error_bound(k, kappa, r.run.unit())),
            );
        }
        rows.push(CrossRow {
            k,
            re,
            reldiff,
            bound,
        });
    }
    let verdicts = others
        .iter()
        .enumerate()
        .map(|(j, r)| {
            let mut worst = 0.0f64;
            let mut pass = true;
            for row in rows.iter().take(k0) {
                match (row.reldiff[j], row.bound[j]) {
                    (Some(d), Some(b)) => {
                        worst = worst.max(d / b);
                        if d > BOUND_SLACK * b {
                            pass = false;
                        }
                    }
                    _ => pass = false,
                }
            }
            Verdict {
                label: r.label().to_string(),
                pass,
                worst_ratio: worst,
            }
        })
        .collect();
    Ok(Comparison {
        labels: runs.iter().map(|r| r.label().to_string()).collect(),
        k0,
        rows,
        verdicts,
    })
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub const CURVE_COLUMNS: [&str; 13] = [
    "k",
    "phi_bar",
    "norm_x",
    "RE",
    "kappa_Rhat",
    "mu",
    "nu",
    "rho",
    "theta_next",
    "phi",
    "t_bidiag",
    "t_givens",
    "t_update",
];

pub fn write_curves<W: std::io::Write>(out: W, records: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVE_COLUMNS).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.k.to_string(),
            num(r.phi_bar),
            num(r.norm_x),
            opt_num(r.re),
            opt_num(r.kappa_rhat),
            num(r.mu),
            num(r.nu),
            num(r.rho),
            num(r.theta_next),
            num(r.phi),
            num(r.t_bidiag),
            num(r.t_givens),
            num(r.t_update),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_curves<R: std::io::Read>(input: R) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::Reader::from_reader(input);
    let header = rd.headers().map_err(csv_err)?.clone();
    if header.iter().ne(CURVE_COLUMNS) {
        return Err(Error::Parse(format!("unexpected curves header {header:?}")));
    }
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse()
                .map_err(|e| Error::Parse(format!("column {}: {e}", CURVE_COLUMNS[i])))
        };
        let of = |i: usize| -> Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        out.push(IterationRecord {
            k: rec[0]
                .parse()
                .map_err(|e| Error::Parse(format!("column k: {e}")))?,
            phi_bar: f(1)?,
            norm_x: f(2)?,
            re: of(3)?,
            kappa_rhat: of(4)?,
            mu: f(5)?,
            nu: f(6)?,
            rho: f(7)?,
            theta_next: f(8)?,
            phi: f(9)?,
            t_bidiag: f(10)?,
            t_givens: f(11)?,
            t_update: f(12)?,
        });
    }
    Ok(out)
}

pub fn write_cross<W: std::io::Write>(out: W, cmp: &Comparison) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let names: Vec<String> = cmp.labels.iter().map(|l| sanitize_label(l)).collect();
    let mut header = vec!["k".to_string()];
    header.extend(names.iter().map(|l| format!("RE_{l}")));
    header.extend(
        names[1..]
            .iter()
            .map(|l| format!("reldiff_{l}_vs_{}", names[0])),
    );
    header.extend(names[1..].iter().map(|l| format!("theorem41_bound_{l}")));
    w.write_record(&header).map_err(csv_err)?;
    for row in &cmp.rows {
        let mut rec = vec![row.k.to_string()];
        rec.extend(row.re.iter().map(|&v| opt_num(v)));
        rec.extend(row.reldiff.iter().map(|&v| opt_num(v)));
        rec.extend(row.bound.iter().map(|&v| opt_num(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

/// One cell of the summary table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryEntry {
    pub rule: StopRule,
    pub label: String,
    pub k1: usize,
    pub re: Option<f64>,
}

pub fn summarize(runs: &[RunResult]) -> Vec<SummaryEntry> {
    let mut out = Vec::new();
    for r in runs {
        for d in &r.history.decisions {
            out.push(SummaryEntry {
                rule: d.rule,
                label: r.label().to_string(),
                k1: d.k1,
                re: r.history.records.get(d.k1 - 1).and_then(|rec| rec.re),
            });
        }
    }
    out
}

/// Rules as rows, configurations as columns, cells `RE (k=k1)`.
pub fn summary_table(runs: &[RunResult], rules: &[StopRule]) -> String {
    let entries = summarize(runs);
    let mut s = String::new();
    let _ = write!(s, "{:<10}", "rule");
    for r in runs {
        let _ = write!(s, "{:>20}", r.label());
    }
    s.push('\n');
    for &rule in rules {
        let _ = write!(s, "{:<10}", rule.name());
        for r in runs {
            let cell = entries
                .iter()
                .find(|e| e.rule == rule && e.label == r.label())
                .map(|e| match e.re {
                    Some(re) => format!("{re:.4} (k={})", e.k1),
                    None => format!("- (k={})", e.k1),
                })
                .unwrap_or_else(|| "-".to_string());
            let _ = write!(s, "{cell:>20}");
        }
        s.push('\n');
    }
    s
}

/// Everything one experiment produced.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub runs: Vec<RunResult>,
    pub comparison: Comparison,
    pub summary: String,
    pub diagnostics: Option<PicardDiagnostics>,
    pub advisor: Option<AdvisorReport>,
    pub notices: Vec<String>,
    pub files: Vec<PathBuf>,
}

impl fmt::Display for ExperimentOutput {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r0 = &self.runs[0];
        writeln!(
            f,
            "problem {} (n = {}), eps = {:e}, seed = {}",
            r0.problem, r0.n, r0.eps, r0.seed
        )?;
        writeln!(f)?;
        f.write_str(&self.summary)?;
        writeln!(f)?;
        writeln!(
            f,
            "reference {} optimum at k = {}",
            r0.label(),
            self.comparison.k0
        )?;
        for v in &self.comparison.verdicts {
            writeln!(
                f,
                "{:<8} vs {}: {} (max reldiff/bound {:.3e}, slack {})",
                v.label,
                r0.label(),
                if v.pass { "PASS" } else { "FAIL" },
                v.worst_ratio,
                BOUND_SLACK
            )?;
        }
        if let Some(a) = &self.advisor {
            writeln!(f)?;
            write!(f, "{a}")?;
        }
        for n in &self.notices {
            writeln!(f, "note: {n}")?;
        }
        for p in &self.files {
            writeln!(f, "wrote {}", p.display())?;
        }
        Ok(())
    }
}

fn write_file(path: &Path, write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Builds the problem, runs all configurations, compares them, and writes
/// the output files when `out_dir` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let inst = cfg.build_instance()?;
    let runs = run_configs(&inst, cfg)?;
    let comparison = compare_runs(&runs)?;
    let summary = summary_table(&runs, &cfg.rules);
    let mut notices = Vec::new();

    let (diagnostics, advisor) = if !cfg.diagnostics {
        notices.push("SVD diagnostics disabled; no precision advice".to_string());
        (None, None)
    } else if inst.n() > DIAGNOSTICS_LIMIT {
        notices.push(format!(
            "n = {} exceeds {DIAGNOSTICS_LIMIT}; dense SVD diagnostics skipped",
            inst.n()
        ));
        (None, None)
    } else {
        let diag = problems::picard_diagnostics(&inst)?;
        let adv = match advisor::advise_from_diagnostics(inst.eps(), inst.m(), &diag, cfg.safety) {
            Ok(a) => Some(a),
            Err(e) => {
                notices.push(format!("no precision advice: {e}"));
                None
            }
        };
        (Some(diag), adv)
    };

    let mut files = Vec::new();
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let prefix = cfg.prefix();
        for r in &runs {
            let p = dir.join(format!("{prefix}_{}_curves.csv", sanitize_label(r.label())));
            write_file(&p, |b| write_curves(b, &r.history.records))?;
            files.push(p);
        }
        let p = dir.join(format!("{prefix}_cross.csv"));
        write_file(&p, |b| write_cross(b, &comparison))?;
        files.push(p);
        let p = dir.join(format!("{prefix}_summary.txt"));
        let text = format!(
            "problem {} n={} eps={:e} seed={}\n\n{summary}",
            inst.name(),
            inst.n(),
            inst.eps(),
            inst.seed()
        );
        fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
        files.push(p);
        if let Some(a) = &advisor {
            let p = dir.join(format!("{prefix}_advisor.txt"));
            let text = format!("seed={}\n{a}", inst.seed());
            fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
            files.push(p);
            let p = dir.join(format!("{prefix}_advisor.json"));
            let json = serde_json::to_string_pretty(a).map_err(|e| Error::Parse(e.to_string()))?;
            fs::write(&p, json).map_err(|e| Error::io(&p, e))?;
            files.push(p);
        }
    }
    Ok(ExperimentOutput {
        runs,
        comparison,
        summary,
        diagnostics,
        advisor,
        notices,
        files,
    })
}

/// Picard diagnostics as CSV: `i, sigma, coef_exact, coef_noisy`.
pub fn write_picard<W: std::io::Write>(out: W, d: &PicardDiagnostics) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["i", "sigma", "coef_exact", "coef_noisy"])
        .map_err(csv_err)?;
    for i in 0..d.sigma.len() {
        w.write_record([
            (i + 1).to_string(),
            num(d.sigma[i]),
            num(d.coef_exact[i]),
            num(d.coef_noisy[i]),
        ])
        .map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::Parse(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_parse() {
        let s = RunSpec::parse("s+d").unwrap();
        assert_eq!(
            (s.spec_bidiag, s.spec_update),
            (Precision::Native32, Precision::Native64)
        );
        let e = RunSpec::parse("emu14+d").unwrap();
        assert_eq!(e.spec_bidiag, Precision::Emulated(14));
        assert_eq!(
            RunSpec::parse("d").unwrap().spec_update,
            Precision::Native64
        );
        assert!(RunSpec::parse("q+d").is_err());
        assert_eq!(sanitize_label("s+d"), "spd");
    }

    #[test]
    fn presets_have_table_sizes() {
        let sizes: Vec<usize> = PRESETS
            .iter()
            .map(|p| ExperimentConfig::preset(p, None).unwrap().n)
            .collect();
        assert_eq!(sizes, vec![1000, 1000, 2000, 2000, 4096, 4096]);
        assert_eq!(
            ExperimentConfig::preset("paper-blurdefocus", Some(32))
                .unwrap()
                .n,
            1024
        );
        assert!(ExperimentConfig::preset("paper-shaw", Some(32)).is_err());
        assert!(ExperimentConfig::preset("paper-tomo", None).is_err());
    }

    #[test]
    fn config_validation() {
        let mut c = ExperimentConfig::new(ProblemKind::Shaw, 64, 1e-3, 0);
        c.configs.clear();
        assert!(matches!(c.validate(), Err(Error::InvalidConfig(_))));
        c.configs = vec![RunSpec::parse("d").unwrap(), RunSpec::parse("d").unwrap()];
        assert!(c.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::preset("paper-blurspeckle", Some(16)).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml().unwrap()).unwrap();
        assert_eq!(back, c);
    }
}
