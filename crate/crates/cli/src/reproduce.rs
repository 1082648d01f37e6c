//! One-shot driver: every sweep, its plot, and a threshold report.

use crate::commands::{
    appendix_checks, bell_reports, compression_rows, compression_table, push_bell_rows, quadrature_spec,
    AppendixParams, APPENDIX_CHECKS, BELL_HEADER,
};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{save_csv, save_text, Table};
use crate::svg::{Plot, Series};
use bell_halfline::bell::limiting_value_general_c;
use bell_halfline::{CorrelatorReport, KernelForm};
use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};

/// Smallest-eps massless CHSH required by the reproduction run.
pub const MASSLESS_TARGET: f64 = 2.7;
pub const MASSIVE_TARGET: f64 = 2.5;
pub const GENERAL_C_TOLERANCE: f64 = 0.15;
pub const COMPRESSION_GAP: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReproduceReport {
    pub files: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl ReproduceReport {
    pub fn render(&self) -> String {
        self.checks
            .iter()
            .map(|c| format!("{} {}: {}\n", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail))
            .collect()
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

fn check(name: &str, pass: bool, detail: String) -> Check {
    Check { name: name.into(), pass, detail }
}

/// `(eps, chsh)` sorted from the largest eps to the smallest.
fn by_decreasing_eps(reports: &[CorrelatorReport]) -> Vec<(f64, f64)> {
    let mut v: Vec<(f64, f64)> = reports.iter().map(|r| (r.eps.unwrap_or(f64::NAN), r.chsh_abs)).collect();
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    v
}

fn chsh_plot(title: &str, groups: &[(String, &[CorrelatorReport])], limits: &[(String, f64)]) -> Plot {
    let mut p = Plot::new(title, "eps (log scale)", "|CHSH|", true);
    for (label, reports) in groups {
        p.series.push(Series { label: label.clone(), points: by_decreasing_eps(reports) });
    }
    p.references = limits.to_vec();
    p
}

struct Writer<'a> {
    dir: &'a Path,
    config: &'a RunConfig,
    files: Vec<PathBuf>,
}

impl Writer<'_> {
    fn csv(&mut self, name: &str, table: &Table) -> Result<(), CliError> {
        let path = self.dir.join(name);
        save_csv(&path, self.config, table)?;
        self.files.push(path);
        Ok(())
    }

    fn svg(&mut self, name: &str, plot: &Plot) -> Result<(), CliError> {
        let path = self.dir.join(name);
        save_text(&path, &plot.render())?;
        self.files.push(path);
        Ok(())
    }
}

pub fn reproduce_paper(config: &RunConfig) -> Result<ReproduceReport, CliError> {
    let spec = quadrature_spec(config)?;
    let dir = PathBuf::from(config.get("output-dir"));
    std::fs::create_dir_all(&dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let eps_list = config.f64_list("eps-list")?;
    if eps_list.is_empty() {
        return Err(CliError::Usage("`eps-list` is empty".into()));
    }
    let mass = config.f64("mass")?;
    let massive = KernelForm::Massive(mass);
    massive.validate()?;
    let c_list = config.f64_list("c-list")?;
    let tsirelson = 2.0 * SQRT_2;
    let c_star = bell_halfline::TSIRELSON_C;

    let mut w = Writer { dir: &dir, config, files: Vec::new() };
    let mut checks = Vec::new();
    let mut all_chsh = Vec::new();

    // Massless sweep.
    let massless = bell_reports(&eps_list, KernelForm::Massless, c_star, &spec)?;
    let mut t = Table::new(&BELL_HEADER);
    push_bell_rows(&mut t, &massless)?;
    w.csv("massless_sweep.csv", &t)?;
    w.svg(
        "massless_sweep.svg",
        &chsh_plot(
            "Massless CHSH, c = sqrt2 - 1",
            &[("massless".into(), &massless)],
            &[("2 sqrt 2".into(), tsirelson), ("2".into(), 2.0)],
        ),
    )?;
    let seq = by_decreasing_eps(&massless);
    let smallest = seq.last().map(|p| p.1).unwrap_or(f64::NAN);
    checks.push(check(
        "massless CHSH at smallest eps",
        smallest > MASSLESS_TARGET,
        format!("{smallest:.6} at eps = {:e} (target > {MASSLESS_TARGET})", seq.last().map(|p| p.0).unwrap_or(f64::NAN)),
    ));
    checks.push(check(
        "massless CHSH increases as eps decreases",
        seq.windows(2).all(|p| p[1].1 > p[0].1),
        format!("{:?}", seq.iter().map(|p| format!("{:.6}", p.1)).collect::<Vec<_>>()),
    ));
    all_chsh.extend(seq.iter().map(|p| p.1));

    // Massive sweep.
    let heavy = bell_reports(&eps_list, massive, c_star, &spec)?;
    let mut t = Table::new(&BELL_HEADER);
    push_bell_rows(&mut t, &heavy)?;
    w.csv("massive_sweep.csv", &t)?;
    w.svg(
        "massive_sweep.svg",
        &chsh_plot(
            &format!("Massive CHSH, m = {mass}"),
            &[("massive".into(), &heavy)],
            &[("2 sqrt 2".into(), tsirelson), ("2".into(), 2.0)],
        ),
    )?;
    let seq = by_decreasing_eps(&heavy);
    let smallest = seq.last().map(|p| p.1).unwrap_or(f64::NAN);
    checks.push(check(
        "massive CHSH at smallest eps",
        smallest > MASSIVE_TARGET,
        format!("{smallest:.6} (target > {MASSIVE_TARGET})"),
    ));
    all_chsh.extend(seq.iter().map(|p| p.1));

    // General mixing constants.
    let mut t = Table::new(&BELL_HEADER);
    let mut groups = Vec::new();
    let mut limits = Vec::new();
    for &c in &c_list {
        let reports = bell_reports(&eps_list, KernelForm::Massless, c, &spec)?;
        push_bell_rows(&mut t, &reports)?;
        let limit = limiting_value_general_c(c)?;
        let seq = by_decreasing_eps(&reports);
        let gaps: Vec<f64> = seq.iter().map(|p| (limit - p.1).abs()).collect();
        let last_gap = gaps.last().copied().unwrap_or(f64::NAN);
        checks.push(check(
            &format!("general c = {c:.6}: gap at smallest eps"),
            last_gap <= GENERAL_C_TOLERANCE && gaps.windows(2).all(|g| g[1] < g[0]),
            format!("gap {last_gap:.4} to limit {limit:.6} (tolerance {GENERAL_C_TOLERANCE})"),
        ));
        all_chsh.extend(seq.iter().map(|p| p.1));
        limits.push((format!("limit c={c:.3}"), limit));
        groups.push((format!("c = {c:.3}"), reports));
    }
    w.csv("general_c.csv", &t)?;
    let group_refs: Vec<(String, &[CorrelatorReport])> = groups.iter().map(|(l, r)| (l.clone(), r.as_slice())).collect();
    w.svg("general_c.svg", &chsh_plot("CHSH for general c", &group_refs, &limits))?;

    let above = all_chsh.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    checks.push(check(
        "every CHSH value below 2 sqrt 2",
        above <= tsirelson + 1e-6,
        format!("largest {above:.6}"),
    ));

    // Compression.
    let rows = compression_rows(config)?;
    w.csv("compression_sweep.csv", &compression_table(&rows))?;
    let mut plot = Plot::new("Top eigenvalue of the compressions", "N", "lambda_max", false);
    let mut depths: Vec<u32> = rows.iter().map(|r| r.levels).collect();
    depths.dedup();
    for j in depths {
        let mut pts: Vec<(f64, f64)> =
            rows.iter().filter(|r| r.levels == j).map(|r| (r.n as f64, r.lambda_max)).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        plot.series.push(Series { label: format!("J = {j}"), points: pts });
    }
    plot.references.push(("pi".into(), PI));
    w.svg("compression_sweep.svg", &plot)?;
    let bounded = rows.iter().all(|r| r.lambda_max <= PI);
    let nested = rows.iter().all(|a| {
        rows.iter().all(|b| {
            let finer = b.levels >= a.levels && b.span_exponent >= a.span_exponent;
            !finer || b.lambda_max >= a.lambda_max - 1e-12
        })
    });
    let finest = rows.iter().max_by_key(|r| (r.levels, r.span_exponent));
    let gap = finest.map(|r| r.pi_gap).unwrap_or(f64::NAN);
    checks.push(check(
        "compression edge gap",
        bounded && nested && gap < COMPRESSION_GAP,
        format!("gap {gap:.6} at the finest pair, nested {nested}, bounded {bounded}"),
    ));

    // Appendix.
    let params = AppendixParams {
        mass,
        eta_list: config.f64_list("eta-list")?,
        schedule_eps: config.f64("schedule-eps")?,
        delta: config.f64("delta")?,
    };
    let appendix = appendix_checks(&APPENDIX_CHECKS, &params, &spec)?;
    w.csv("appendix_checks.csv", &appendix.table)?;
    checks.push(check(
        "appendix checks",
        appendix.failures.is_empty(),
        if appendix.failures.is_empty() {
            format!("{} rows", appendix.table.rows.len())
        } else {
            appendix.failures.join("; ")
        },
    ));

    let report = ReproduceReport { files: w.files, checks };
    save_text(&dir.join("checks.txt"), &report.render())?;
    Ok(report)
}
