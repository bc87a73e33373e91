//! Batch front end: configuration, command dispatch and report files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asymptotics::{
    default_beta, default_k, fit_log_corrected, fit_power_law, log_alphas, sweep_ground_state,
    variational_bound_exp, variational_bound_hat, Fit, SweepReport,
};
use crate::birman_schwinger::{top_eigenvalue_qe, trace_qe, BSKernelSpec};
use crate::error::{invalid, Error};
use crate::fourier_bessel::{adaptive_spectral_grid, fb_inverse, forward_point, small_p_energy, Grid};
use crate::halfline::{ground_state_weighted, HalfLineProblem, SolverSettings};
use crate::potential::PotentialSpec;
use crate::special::check_dimension;
use crate::tree_solver::{geometric_tree_for_coupling, reduced_ground_state, tree_ground_state, TreeProblem};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Sweep,
    Fit,
    BsTrace,
    BsCorrespond,
    FbCheck,
    TreeBracket,
    Bounds,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Fit => "fit",
            Command::BsTrace => "bs-trace",
            Command::BsCorrespond => "bs-correspond",
            Command::FbCheck => "fb-check",
            Command::TreeBracket => "tree-bracket",
            Command::Bounds => "bounds",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "tree-spectra", version, about = "Weak-coupling ground states on regular metric trees")]
pub struct Args {
    /// Overrides the `command` key of the configuration.
    #[arg(value_enum)]
    pub command: Option<Command>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `key=value`, parsed as a TOML value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write a log-log SVG for `fit`.
    #[arg(long)]
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub d: f64,
    pub gamma: f64,
    /// Potential `c/(1+x)^gamma`.
    pub c: f64,
    pub b: u32,
    /// Explicit couplings; otherwise `alpha_count` log-spaced values.
    pub alphas: Option<Vec<f64>>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_count: usize,
    pub e_values: Option<Vec<f64>>,
    pub e_min: f64,
    pub e_max: f64,
    pub e_count: usize,
    pub rank: usize,
    pub mesh_ratio: f64,
    pub truncation_cap: f64,
    pub eigen_tol: f64,
    pub residual_tol: f64,
    pub extrapolate: bool,
    pub out_dir: PathBuf,
    pub plot: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let s = SolverSettings::default();
        Self {
            command: None,
            d: 1.6,
            gamma: 1.2,
            c: 1.0,
            b: 2,
            alphas: None,
            alpha_min: 1e-3,
            alpha_max: 1e-1,
            alpha_count: 10,
            e_values: None,
            e_min: 1e-4,
            e_max: 1e-1,
            e_count: 4,
            rank: 200,
            mesh_ratio: s.mesh_ratio,
            truncation_cap: s.truncation_cap,
            eigen_tol: s.eigen_tol,
            residual_tol: s.residual_tol,
            extrapolate: s.extrapolate,
            out_dir: PathBuf::from("."),
            plot: false,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(Error::NotConverged(_) | Error::Quadrature(_) | Error::Resource(_)) => 2,
            CliError::Solver(_) => 1,
            CliError::Io { .. } => 3,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            1 => "validation",
            2 => "convergence",
            _ => "io",
        }
    }
}

/// Outcome of a successful dispatch.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    /// Some rows were produced by solves that did not converge.
    pub unconverged: bool,
}

/// Merges the configuration file, `--set` overrides and flags.
pub fn load_config(args: &Args) -> Result<RunConfig, CliError> {
    let mut table = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|source| CliError::Io {
                path: path.clone(),
                source,
            })?;
            text.parse::<toml::Table>()
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for item in &args.set {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got {item:?}")))?;
        let key = key.trim();
        let raw = raw.trim();
        let value = format!("v = {raw}")
            .parse::<toml::Table>()
            .ok()
            .and_then(|mut t| t.remove("v"))
            .unwrap_or_else(|| toml::Value::String(raw.to_string()));
        table.insert(key.to_string(), value);
    }
    let mut config: RunConfig = table.try_into().map_err(|e: toml::de::Error| CliError::Config(e.message().to_string()))?;
    if let Some(c) = args.command {
        config.command = Some(c);
    }
    if let Some(out) = &args.out {
        config.out_dir = out.clone();
    }
    config.plot |= args.plot;
    Ok(config)
}

impl RunConfig {
    pub fn validate(&self) -> Result<Command, CliError> {
        let command = self
            .command
            .ok_or_else(|| CliError::Config("no command given (positional argument or `command` key)".into()))?;
        check_dimension(self.d)?;
        self.potential()?.validate_for_dimension(self.d)?;
        if !(self.mesh_ratio >= 1.0 && self.mesh_ratio < 2.0) {
            return Err(invalid(format!("mesh_ratio must lie in [1, 2), got {}", self.mesh_ratio)).into());
        }
        if !(self.truncation_cap > 0.0 && self.eigen_tol > 0.0 && self.residual_tol > 0.0) {
            return Err(invalid("truncation_cap and tolerances must be positive").into());
        }
        match command {
            Command::Sweep | Command::Fit | Command::BsCorrespond | Command::TreeBracket | Command::Bounds => {
                self.alpha_grid()?;
            }
            Command::BsTrace => {
                self.e_grid()?;
            }
            Command::FbCheck => {}
        }
        if command == Command::TreeBracket && self.b < 2 {
            return Err(invalid(format!("branching number must be at least 2, got {}", self.b)).into());
        }
        if matches!(command, Command::BsCorrespond) && self.rank < 200 {
            return Err(invalid(format!("rank must be at least 200, got {}", self.rank)).into());
        }
        Ok(command)
    }

    pub fn potential(&self) -> crate::Result<PotentialSpec> {
        PotentialSpec::power(self.gamma, self.c)
    }

    fn settings(&self) -> SolverSettings {
        SolverSettings {
            mesh_ratio: self.mesh_ratio,
            truncation_cap: self.truncation_cap,
            eigen_tol: self.eigen_tol,
            residual_tol: self.residual_tol,
            extrapolate: self.extrapolate,
            ..SolverSettings::default()
        }
    }

    /// Couplings in decreasing order.
    pub fn alpha_grid(&self) -> crate::Result<Vec<f64>> {
        let mut alphas = match &self.alphas {
            Some(a) => a.clone(),
            None => {
                if !(self.alpha_min > 0.0 && self.alpha_max >= self.alpha_min && self.alpha_count >= 1) {
                    return Err(invalid("need 0 < alpha_min <= alpha_max and alpha_count >= 1"));
                }
                log_alphas(self.alpha_min, self.alpha_max, self.alpha_count)
            }
        };
        if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(invalid("couplings must be positive and finite"));
        }
        alphas.sort_by(|a, b| b.total_cmp(a));
        alphas.dedup();
        Ok(alphas)
    }

    /// Spectral shifts in increasing order.
    pub fn e_grid(&self) -> crate::Result<Vec<f64>> {
        let mut es = match &self.e_values {
            Some(e) => e.clone(),
            None => {
                if !(self.e_min > 0.0 && self.e_max >= self.e_min && self.e_count >= 1) {
                    return Err(invalid("need 0 < e_min <= e_max and e_count >= 1"));
                }
                let mut v = log_alphas(self.e_min, self.e_max, self.e_count);
                v.reverse();
                v
            }
        };
        if es.is_empty() || es.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(invalid("spectral shifts must be positive and finite"));
        }
        es.sort_by(f64::total_cmp);
        es.dedup();
        Ok(es)
    }

    /// SHA-256 of the resolved configuration, output location excluded.
    pub fn hash(&self) -> String {
        let canonical = Self {
            out_dir: PathBuf::new(),
            plot: false,
            ..self.clone()
        };
        let text = toml::to_string(&canonical).unwrap_or_default();
        Sha256::digest(text.as_bytes()).iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

struct Table {
    header: &'static str,
    rows: Vec<String>,
    trailer: Vec<String>,
}

impl Table {
    fn new(header: &'static str) -> Self {
        Self {
            header,
            rows: Vec::new(),
            trailer: Vec::new(),
        }
    }

    fn render(&self, config: &RunConfig, command: Command) -> String {
        let mut out = format!(
            "# tree-spectra {VERSION} command={} config-sha256={}\n{}\n",
            command.name(),
            config.hash(),
            self.header
        );
        for r in self.rows.iter().chain(&self.trailer) {
            out.push_str(r);
            out.push('\n');
        }
        out
    }
}

/// Runs the configured command and writes its report into `out_dir`.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    let command = config.validate()?;
    let mut unconverged = false;
    let mut svg = None;
    let table = match command {
        Command::Sweep => {
            let report = sweep(config)?;
            unconverged = report.entries.iter().any(|e| !e.converged);
            sweep_table(&report)
        }
        Command::Fit => {
            let report = sweep(config)?;
            unconverged = report.entries.iter().any(|e| !e.converged);
            let mut table = sweep_table(&report);
            let power = fit_power_law(&report)?;
            table.trailer.push(fit_line(&power));
            let mut fits = vec![power];
            if config.gamma == config.d {
                let log = fit_log_corrected(&report, config.gamma)?;
                table.trailer.push(fit_line(&log.fit));
                table.trailer.push(format!("# ratio_min={} ratio_max={}", num(log.ratio_min), num(log.ratio_max)));
                fits.push(log.fit);
            }
            if config.plot {
                svg = Some(plot_fit(&report, &fits[0]));
            }
            table
        }
        Command::BsTrace => {
            let mut table = Table::new("e,trace,tail,slow_convergence_warning");
            for e in config.e_grid()? {
                let spec = BSKernelSpec::new(e, config.d, config.potential()?)?;
                let t = trace_qe(&spec)?;
                table.rows.push(format!("{},{},{},{}", num(e), num(t.value), num(t.tail), t.slow_convergence_warning));
            }
            table
        }
        Command::BsCorrespond => {
            let mut table = Table::new("alpha,e,mu,mu_alpha,converged");
            for alpha in config.alpha_grid()? {
                let p = HalfLineProblem::with_settings(config.d, alpha, 1.0, config.potential()?, config.settings())?;
                let r = ground_state_weighted(&p)?;
                if !(r.e1 < 0.0) {
                    return Err(Error::NotConverged(format!("no bound state at alpha = {alpha}")).into());
                }
                let spec = BSKernelSpec::new(-r.e1, config.d, config.potential()?)?;
                let top = top_eigenvalue_qe(&spec, config.rank)?;
                let ok = top.converged && r.converged;
                unconverged |= !ok;
                table.rows.push(format!("{},{},{},{},{}", num(alpha), num(-r.e1), num(top.mu), num(top.mu * alpha), ok));
            }
            table
        }
        Command::FbCheck => fb_check(config.d)?,
        Command::TreeBracket => {
            let mut table = Table::new("alpha,e1_minus,e1_tree,e1_reduced,e1_plus,ordered");
            for alpha in config.alpha_grid()? {
                let pot = config.potential()?;
                let tree = geometric_tree_for_coupling(config.d, config.b, alpha, &pot)?;
                let k = tree.dimension_constants();
                let mut problem = TreeProblem::new(tree, alpha, pot)?;
                problem.settings = config.settings();
                let minus = ground_state_weighted(&problem.halfline(k.e_minus)?)?;
                let plus = ground_state_weighted(&problem.halfline(k.e_plus)?)?;
                let full = tree_ground_state(&problem)?;
                let reduced = reduced_ground_state(&problem)?;
                unconverged |= ![&minus, &plus, &full, &reduced].iter().all(|r| r.converged);
                let ordered = minus.e1 <= full.e1 && full.e1 <= plus.e1;
                table.rows.push(format!(
                    "{},{},{},{},{},{ordered}",
                    num(alpha),
                    num(minus.e1),
                    num(full.e1),
                    num(reduced.e1),
                    num(plus.e1)
                ));
            }
            table
        }
        Command::Bounds => {
            let mut table = Table::new("alpha,e1,rayleigh_quotient,bound,bound_constant,parameter,test_function");
            for alpha in config.alpha_grid()? {
                let p = HalfLineProblem::with_settings(config.d, alpha, 1.0, config.potential()?, config.settings())?;
                let e1 = ground_state_weighted(&p)?.e1;
                let (b, name) = if config.gamma < config.d {
                    let k = default_k(config.gamma, config.c);
                    (variational_bound_exp(config.d, config.gamma, config.c, alpha, k)?, "exp")
                } else {
                    let beta = default_beta(config.d, config.c)?;
                    (variational_bound_hat(config.d, config.c, alpha, beta)?, "hat")
                };
                table.rows.push(format!(
                    "{},{},{},{},{},{},{name}",
                    num(alpha),
                    num(e1),
                    num(b.rayleigh_quotient),
                    num(b.bound),
                    num(b.bound_constant),
                    num(b.parameter)
                ));
            }
            table
        }
    };

    let dir = &config.out_dir;
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.clone(),
        source,
    })?;
    let csv = dir.join(format!("{}.csv", command.name()));
    write(&csv, &table.render(config, command))?;
    let mut files = vec![csv];
    if let Some(svg) = svg {
        let path = dir.join("fit.svg");
        write(&path, &svg)?;
        files.push(path);
    }
    Ok(RunOutput { files, unconverged })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn sweep(config: &RunConfig) -> Result<SweepReport, CliError> {
    let alphas = config.alpha_grid()?;
    let template = HalfLineProblem::with_settings(config.d, alphas[0], 1.0, config.potential()?, config.settings())?;
    Ok(sweep_ground_state(&template, &alphas)?)
}

fn sweep_table(report: &SweepReport) -> Table {
    let mut table = Table::new("alpha,e1,truncation,converged");
    for e in &report.entries {
        table.rows.push(format!("{},{},{},{}", num(e.alpha), num(e.e1), num(e.truncation), e.converged));
    }
    table
}

fn fit_line(fit: &Fit) -> String {
    let law = match fit.law {
        crate::asymptotics::Law::Power => "power",
        crate::asymptotics::Law::LogCorrected => "log-corrected",
    };
    format!(
        "# fit law={law} exponent={} intercept={} residual={} points={}",
        num(fit.exponent),
        num(fit.intercept),
        num(fit.residual),
        fit.points
    )
}

/// Isometry, round-trip and diagonalization errors for the Gaussian bump
/// `exp(-(x-5)^2/0.5)` on `[3, 7]`.
fn fb_check(d: f64) -> Result<Table, CliError> {
    let gaussian = |x: f64| {
        if (3.0..=7.0).contains(&x) {
            (-(x - 5.0).powi(2) / 0.5).exp()
        } else {
            0.0
        }
    };
    let x_breaks: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
    let x_grid = Grid::composite(&x_breaks, 16)?;
    let norm_sq: f64 = x_grid.nodes.iter().zip(&x_grid.weights).map(|(&x, w)| w * gaussian(x).powi(2)).sum();

    let (_, u) = adaptive_spectral_grid(&gaussian, (3.0, 7.0), d, 1e-6, 25.0, 1e-8)?;
    let energy = u.inner(&u) + small_p_energy(&u, d);
    let isometry = (energy.sqrt() / norm_sq.sqrt() - 1.0).abs();

    let back = fb_inverse(&u, &x_grid, d)?;
    let err: f64 = back
        .nodes
        .iter()
        .zip(back.values.iter().zip(&back.weights))
        .map(|(&x, (v, w))| w * (v - gaussian(x)).powi(2))
        .sum();
    let round_trip = (err / norm_sq).sqrt();

    // smooth bump on (1, 10) so the Robin condition holds trivially
    let c = 0.25 * (d - 1.0) * (d - 3.0);
    let bump = |x: f64| -> (f64, f64) {
        let s = (x - 5.5) / 4.5;
        if s.abs() >= 1.0 {
            return (0.0, 0.0);
        }
        let q = 1.0 - s * s;
        let phi = (-1.0 / q).exp();
        let g1 = -2.0 * s / (q * q);
        let g2 = -2.0 * (1.0 + 3.0 * s * s) / (q * q * q);
        (phi, phi * (g1 * g1 + g2) / (4.5 * 4.5))
    };
    let phi = |x: f64| bump(x).0;
    let h0 = |x: f64| {
        let (v, vpp) = bump(x);
        -vpp + c / (1.0 + x).powi(2) * v
    };
    let (mut worst, mut scale) = (0.0f64, 0.0f64);
    for i in 0..120 {
        let p = 0.1 * 100f64.powf(i as f64 / 119.0);
        let lhs = forward_point(&h0, (1.0, 10.0), p, d)?;
        let rhs = p * p * forward_point(&phi, (1.0, 10.0), p, d)?;
        worst = worst.max((lhs - rhs).abs());
        scale = scale.max(rhs.abs());
    }
    let mut table = Table::new("d,isometry_error,round_trip_error,diagonalization_residual");
    table.rows.push(format!("{},{},{},{}", num(d), num(isometry), num(round_trip), num(worst / scale)));
    Ok(table)
}

/// Log-log plot of `|e1|` against `alpha` with the fitted line.
pub fn plot_fit(report: &SweepReport, fit: &Fit) -> String {
    let pts: Vec<(f64, f64)> = report
        .entries
        .iter()
        .filter(|e| e.converged && e.e1 < 0.0)
        .map(|e| (e.alpha.log10(), (-e.e1).log10()))
        .collect();
    let (w, h, m) = (640.0, 480.0, 60.0);
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n\
         <rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n\
         <rect x=\"{m}\" y=\"{m}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n",
        w - 2.0 * m,
        h - 2.0 * m
    );
    // fitted line: log10|e1| = exponent log10(alpha) + intercept / ln 10
    let line = |x: f64| fit.exponent * x + fit.intercept / std::f64::consts::LN_10;
    let _ = writeln!(
        s,
        "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"steelblue\" stroke-width=\"2\"/>",
        sx(x0),
        sy(line(x0)),
        sx(x1),
        sy(line(x1))
    );
    for (x, y) in &pts {
        let _ = writeln!(s, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"firebrick\"/>", sx(*x), sy(*y));
    }
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">log10 alpha ({x0:.2} to {x1:.2}); slope {:.4}</text>",
        m,
        h - 0.3 * m,
        fit.exponent
    );
    let _ = writeln!(
        s,
        "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"14\">log10 |e1| ({y0:.2} to {y1:.2})</text>",
        m,
        0.6 * m
    );
    s.push_str("</svg>\n");
    s
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !(hi > lo) {
        (lo - 0.5, lo + 0.5)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}
