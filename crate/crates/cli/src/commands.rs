//! Subcommand bodies. Each builds its tables from a merged [`RunConfig`];
//! writing is left to the caller.

use crate::config::{parse_number, RunConfig};
use crate::error::CliError;
use crate::output::{num, Table};
use bell_halfline::bell::{bell_correlator, family_quadruple, limiting_value_general_c, spatial_pairing};
use bell_halfline::compress::{build_compression, edge_gap_sweep, EdgeGapRow};
use bell_halfline::forms::{carleman_form, carleman_form_log, hankel_form, hankel_form_laplace};
use bell_halfline::momentum::{bump_spinor, eta_eps_schedule_check, fourier_bessel_identity_check, momentum_pairings};
use bell_halfline::specfun::{bessel_k0, bessel_k1, cosh_kernel, smooth_step};
use bell_halfline::testfn::{build_phi_tilde, damp_exponential, dilate, local_norm, normalize};
use bell_halfline::{CorrelatorReport, KernelForm, QuadratureSpec, Side, TestFunction1D};
use rayon::prelude::*;
use std::f64::consts::{PI, SQRT_2};

pub fn quadrature_spec(config: &RunConfig) -> Result<QuadratureSpec, CliError> {
    let spec = QuadratureSpec {
        panels: config.usize("panels")?,
        nodes_per_panel: config.usize("nodes-per-panel")?,
        ..QuadratureSpec::default()
    };
    spec.validate()?;
    Ok(spec)
}

/// `start,stop,n,log|lin`.
pub fn parse_grid(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let bad = || CliError::Usage(format!("grid must look like `start,stop,n,log|lin`, got `{text}`"));
    if parts.len() != 4 {
        return Err(bad());
    }
    let start = parse_number("grid", parts[0])?;
    let stop = parse_number("grid", parts[1])?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if n == 0 {
        return Err(CliError::Usage("grid needs at least one point".into()));
    }
    let at = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
    match parts[3] {
        "lin" => Ok((0..n).map(|i| start + (stop - start) * at(i)).collect()),
        "log" => {
            if !(start > 0.0 && stop > 0.0) {
                return Err(CliError::Usage("a log grid needs positive end points".into()));
            }
            Ok((0..n).map(|i| start * (stop / start).powf(at(i))).collect())
        }
        _ => Err(bad()),
    }
}

fn mass_kernel(mass: f64) -> Result<KernelForm, CliError> {
    let k = if mass == 0.0 { KernelForm::Massless } else { KernelForm::Massive(mass) };
    k.validate()?;
    Ok(k)
}

pub fn specfun_table(config: &RunConfig) -> Result<Table, CliError> {
    let grid = parse_grid(config.get("grid"))?;
    let eps = config.f64("eps")?;
    let f: Box<dyn Fn(f64) -> Result<f64, CliError>> = match config.get("fn") {
        "k0" => Box::new(|u| Ok(bessel_k0(u)?)),
        "k1" => Box::new(|u| Ok(bessel_k1(u)?)),
        "h" => Box::new(|r| Ok(cosh_kernel(r))),
        "tau" => {
            if eps.is_nan() || eps <= 0.0 {
                return Err(CliError::Usage(format!("`eps` must be positive, got {eps}")));
            }
            Box::new(move |x| Ok(smooth_step(x, eps)))
        }
        other => return Err(CliError::Usage(format!("`fn` must be one of k0, k1, h, tau; got `{other}`"))),
    };
    let mut t = Table::new(&["u", "value"]);
    for u in grid {
        t.push(vec![num(u), num(f(u)?)]);
    }
    Ok(t)
}

pub fn testfn_sample(config: &RunConfig) -> Result<Table, CliError> {
    let grid = parse_grid(config.get("grid"))?;
    let eps = config.f64("eps")?;
    let spec = QuadratureSpec::default();
    let tilde = build_phi_tilde(eps)?;
    let phi = match config.get("family") {
        "phi" => normalize(&tilde, &spec)?,
        "phi-damped" => normalize(&dilate(&damp_exponential(&tilde), config.f64("mass")?)?, &spec)?,
        other => return Err(CliError::Usage(format!("`family` must be phi or phi-damped; got `{other}`"))),
    };
    let mut t = Table::new(&["x", "value"]);
    for x in grid {
        t.push(vec![num(x), num(phi.eval(x))]);
    }
    Ok(t)
}

fn forms_profile(eps: f64, massive: Option<f64>, spec: &QuadratureSpec) -> Result<TestFunction1D, CliError> {
    let tilde = build_phi_tilde(eps)?;
    Ok(match massive {
        None => normalize(&tilde, spec)?,
        Some(m) => normalize(&dilate(&damp_exponential(&tilde), m)?, spec)?,
    })
}

pub fn forms_sweep(config: &RunConfig) -> Result<Table, CliError> {
    let spec = quadrature_spec(config)?;
    let eps_list = config.f64_list("eps-list")?;
    let massive = match config.get("kernel") {
        "carleman" => None,
        "hankel" => Some(config.f64("mass")?),
        other => return Err(CliError::Usage(format!("`kernel` must be carleman or hankel; got `{other}`"))),
    };
    let available: &[&str] = if massive.is_some() { &["direct", "laplace"] } else { &["direct", "log"] };
    let routes: Vec<&str> = match config.get("route") {
        "all" => available.to_vec(),
        r if available.contains(&r) => vec![r],
        r => {
            return Err(CliError::Usage(format!(
                "route `{r}` is not available for this kernel (choose from {} or all)",
                available.join(", ")
            )))
        }
    };
    let rows: Vec<Result<Vec<Vec<String>>, CliError>> = eps_list
        .par_iter()
        .map(|&eps| {
            let phi = forms_profile(eps, massive, &spec)?;
            let mut out = Vec::new();
            for &route in &routes {
                let v = match (route, massive) {
                    ("direct", None) => carleman_form(&phi, &spec)?,
                    ("log", _) => carleman_form_log(&phi, &spec)?,
                    ("direct", Some(m)) => hankel_form(&phi, m, &spec)?,
                    (_, Some(m)) => hankel_form_laplace(&phi, m, &spec)?,
                    _ => unreachable!("routes are validated above"),
                };
                out.push(vec![num(eps), route.to_string(), num(v.value), num(v.error_estimate), num(PI - v.value)]);
            }
            Ok(out)
        })
        .collect();
    let mut t = Table::new(&["eps", "route", "value", "error_estimate", "pi_minus_value"]);
    for r in rows {
        for row in r? {
            t.push(row);
        }
    }
    Ok(t)
}

pub const BELL_HEADER: [&str; 9] =
    ["eps", "c", "p_fg", "p_fpg", "p_fgp", "p_fpgp", "chsh_abs", "limit_formula", "gap_to_limit"];

/// Correlators over `eps_list`, in list order.
pub fn bell_reports(
    eps_list: &[f64],
    kernel: KernelForm,
    c: f64,
    spec: &QuadratureSpec,
) -> Result<Vec<CorrelatorReport>, CliError> {
    eps_list
        .par_iter()
        .map(|&eps| Ok(bell_correlator(&family_quadruple(eps, kernel, c, spec)?, kernel, spec)?))
        .collect::<Vec<Result<_, CliError>>>()
        .into_iter()
        .collect()
}

pub fn push_bell_rows(t: &mut Table, reports: &[CorrelatorReport]) -> Result<(), CliError> {
    for r in reports {
        let limit = limiting_value_general_c(r.c)?;
        let mut row = vec![num(r.eps.unwrap_or(f64::NAN)), num(r.c)];
        row.extend(r.pairings.iter().map(|p| num(p.im)));
        row.extend([num(r.chsh_abs), num(limit), num(limit - r.chsh_abs)]);
        t.push(row);
    }
    Ok(())
}

pub fn bell_sweep(config: &RunConfig) -> Result<Table, CliError> {
    let spec = quadrature_spec(config)?;
    let kernel = match config.get("kernel") {
        "massless" => KernelForm::Massless,
        "massive" => mass_kernel(config.f64("mass")?)?,
        other => return Err(CliError::Usage(format!("`kernel` must be massless or massive; got `{other}`"))),
    };
    let reports = bell_reports(&config.f64_list("eps-list")?, kernel, config.f64("c")?, &spec)?;
    let mut t = Table::new(&BELL_HEADER);
    push_bell_rows(&mut t, &reports)?;
    Ok(t)
}

pub fn compression_rows(config: &RunConfig) -> Result<Vec<EdgeGapRow>, CliError> {
    let depths = config.u32_list("depth-list")?;
    let spans = config.u32_list("span-list")?;
    let params: Vec<(u32, u32)> = depths.iter().flat_map(|&j| spans.iter().map(move |&k| (j, k))).collect();
    Ok(edge_gap_sweep(&params)?)
}

pub fn compression_table(rows: &[EdgeGapRow]) -> Table {
    let mut t = Table::new(&["J", "K", "N", "lambda_max", "pi_gap"]);
    for r in rows {
        t.push(vec![r.levels.to_string(), r.span_exponent.to_string(), r.n.to_string(), num(r.lambda_max), num(r.pi_gap)]);
    }
    t
}

/// The sweep table, plus the dense matrix of the last `(J, K)` pair when
/// `dump-matrix` names a file.
pub fn compress_sweep(config: &RunConfig) -> Result<(Table, Option<Table>), CliError> {
    let rows = compression_rows(config)?;
    let dump = if config.get("dump-matrix").is_empty() {
        None
    } else {
        let last = rows.last().ok_or_else(|| CliError::Usage("empty depth or span list".into()))?;
        let r = build_compression(last.levels, last.span_exponent)?;
        let names: Vec<String> = (0..r.n).map(|j| format!("col{j}")).collect();
        let mut m = Table { header: names, rows: Vec::new() };
        for i in 0..r.n {
            m.rows.push((0..r.n).map(|j| num(r.entry(i, j))).collect());
        }
        Some(m)
    };
    Ok((compression_table(&rows), dump))
}

/// Appendix checks: the table plus one message per failed row.
pub struct AppendixOutcome {
    pub table: Table,
    pub failures: Vec<String>,
}

pub const APPENDIX_HEADER: [&str; 11] =
    ["check", "eps", "eta", "k", "mass", "value", "reference", "deviation", "tolerance", "trend_ok", "pass"];

struct Row {
    check: &'static str,
    eps: Option<f64>,
    eta: Option<f64>,
    k: Option<f64>,
    mass: f64,
    value: f64,
    reference: f64,
    tolerance: Option<f64>,
    trend_ok: bool,
}

impl Row {
    fn deviation(&self) -> f64 {
        (self.value - self.reference).abs()
    }

    fn pass(&self) -> bool {
        self.trend_ok && self.tolerance.is_none_or(|t| self.deviation() <= t)
    }

    fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
        vec![
            self.check.to_string(),
            opt(self.eps),
            opt(self.eta),
            opt(self.k),
            num(self.mass),
            num(self.value),
            num(self.reference),
            num(self.deviation()),
            opt(self.tolerance),
            self.trend_ok.to_string(),
            self.pass().to_string(),
        ]
    }
}

/// Parameters shared by the appendix checks.
pub struct AppendixParams {
    pub mass: f64,
    pub eta_list: Vec<f64>,
    pub schedule_eps: f64,
    pub delta: f64,
}

pub const APPENDIX_CHECKS: [&str; 5] = ["i1-limit", "i2-self", "i2-vs-config", "fourier-g", "schedule"];

/// Marks rows whose deviation did not decrease from the previous one.
fn mark_trend(rows: &mut [Row]) {
    for i in 1..rows.len() {
        rows[i].trend_ok = rows[i].deviation() < rows[i - 1].deviation();
    }
}

pub fn appendix_checks(which: &[&str], p: &AppendixParams, spec: &QuadratureSpec) -> Result<AppendixOutcome, CliError> {
    let mut eta_list = p.eta_list.clone();
    eta_list.sort_by(|a, b| b.total_cmp(a));
    if eta_list.iter().any(|&e| e.is_nan() || e <= 0.0) || eta_list.is_empty() {
        return Err(CliError::Usage("`eta-list` needs positive widths".into()));
    }
    let kernel = mass_kernel(p.mass)?;
    let alice = bump_spinor(-2.25, -0.25, Side::Alice)?;
    let bob = bump_spinor(0.25, 2.25, Side::Bob)?;
    let mut rows: Vec<Row> = Vec::new();
    let base = |check, eta, mass, value, reference, tolerance| Row {
        check,
        eps: None,
        eta: Some(eta),
        k: None,
        mass,
        value,
        reference,
        tolerance,
        trend_ok: true,
    };

    let need_pairs = which.iter().any(|w| matches!(*w, "i1-limit" | "i2-self" | "i2-vs-config"));
    let pairs = if need_pairs {
        eta_list
            .iter()
            .map(|&eta| Ok(momentum_pairings(&[&alice, &bob], &[&bob], eta, p.mass, spec)?))
            .collect::<Result<Vec<_>, CliError>>()?
    } else {
        Vec::new()
    };

    if which.contains(&"i1-limit") {
        let local = local_norm(&bob, spec)?;
        let mut group: Vec<Row> = eta_list
            .iter()
            .zip(&pairs)
            .map(|(&eta, pr)| base("i1-limit", eta, p.mass, pr[1][0].i1.re, local, (eta <= 1e-3).then_some(1e-4)))
            .collect();
        mark_trend(&mut group);
        rows.extend(group);
    }
    if which.contains(&"i2-self") {
        for (&eta, pr) in eta_list.iter().zip(&pairs) {
            rows.push(base("i2-self", eta, p.mass, pr[1][0].i2.norm(), 0.0, Some(1e-10)));
        }
    }
    if which.contains(&"i2-vs-config") {
        let config = spatial_pairing(&alice, &bob, kernel, spec)?.im;
        let mut group: Vec<Row> = eta_list
            .iter()
            .zip(&pairs)
            .map(|(&eta, pr)| base("i2-vs-config", eta, p.mass, pr[0][0].i2.im, config, (eta <= 3e-3).then_some(1e-3)))
            .collect();
        mark_trend(&mut group);
        rows.extend(group);
        let eta = *eta_list.last().unwrap_or(&3e-3);
        let light = momentum_pairings(&[&alice], &[&bob], eta, 1e-4, spec)?[0][0].i2.im;
        let massless = spatial_pairing(&alice, &bob, KernelForm::Massless, spec)?.im;
        rows.push(base("massless-limit", eta, 1e-4, light, massless, Some(1e-3)));
    }
    if which.contains(&"fourier-g") {
        for m in [0.5, 1.0, 2.0] {
            for k in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0] {
                let d = fourier_bessel_identity_check(k, m, spec)?;
                rows.push(Row {
                    check: "fourier-g",
                    eps: None,
                    eta: None,
                    k: Some(k),
                    mass: m,
                    value: d,
                    reference: 0.0,
                    tolerance: Some(1e-8),
                    trend_ok: true,
                });
            }
        }
    }
    if which.contains(&"schedule") {
        let report = eta_eps_schedule_check(p.schedule_eps, p.delta, 0.0, spec)?;
        let tsirelson = 2.0 * SQRT_2;
        for a in &report.attempts {
            let value = a.chsh_momentum.unwrap_or(a.chsh_spatial);
            rows.push(Row {
                check: if a.eta.is_some() { "schedule-momentum" } else { "schedule-spatial" },
                eps: Some(a.eps),
                eta: a.eta,
                k: None,
                mass: 0.0,
                value,
                reference: a.chsh_spatial,
                tolerance: None,
                trend_ok: true,
            });
        }
        let (value, reference, eps, eta) = match report.witness {
            Some(w) => (w.chsh_momentum.unwrap_or(f64::NAN), w.chsh_spatial, Some(w.eps), w.eta),
            None => (tsirelson - report.best_gap, f64::NAN, None, None),
        };
        rows.push(Row {
            check: "schedule-witness",
            eps,
            eta,
            k: None,
            mass: 0.0,
            value,
            reference,
            tolerance: Some(5e-3),
            trend_ok: value > tsirelson - p.delta && value <= tsirelson,
        });
    }

    let mut table = Table::new(&APPENDIX_HEADER);
    let mut failures = Vec::new();
    for r in &rows {
        if !r.pass() {
            failures.push(format!(
                "{} (eta {:?}, k {:?}, mass {}): value {:.6e}, reference {:.6e}, tolerance {:?}, trend ok {}",
                r.check, r.eta, r.k, r.mass, r.value, r.reference, r.tolerance, r.trend_ok
            ));
        }
        table.push(r.cells());
    }
    Ok(AppendixOutcome { table, failures })
}

pub fn appendix_check(config: &RunConfig) -> Result<AppendixOutcome, CliError> {
    let spec = quadrature_spec(config)?;
    let what = config.get("what");
    let which: Vec<&str> = if what == "all" {
        APPENDIX_CHECKS.to_vec()
    } else if APPENDIX_CHECKS.contains(&what) {
        vec![what]
    } else {
        return Err(CliError::Usage(format!("`what` must be one of {} or all; got `{what}`", APPENDIX_CHECKS.join(", "))));
    };
    let params = AppendixParams {
        mass: config.f64("mass")?,
        eta_list: config.f64_list("eta-list")?,
        schedule_eps: config.f64("eps")?,
        delta: config.f64("delta")?,
    };
    appendix_checks(&which, &params, &spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0,1,3,lin").unwrap(), vec![0.0, 0.5, 1.0]);
        let g = parse_grid("1,100,3,log").unwrap();
        assert!((g[1] - 10.0).abs() < 1e-12);
        assert!(parse_grid("0,1,3,log").is_err());
        assert!(parse_grid("0,1,3").is_err());
        assert!(parse_grid("0,1,0,lin").is_err());
    }
}
