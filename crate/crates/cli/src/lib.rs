//! Experiment orchestration behind the `gfou` command-line tool.
//!
//! Each subcommand builds its models from an [`ExperimentConfig`], runs the
//! corresponding library operation, and writes CSV artifacts whose comment
//! headers record the config hash and tolerance budgets. All randomness
//! (datum families) flows from the seed, so a fixed config produces
//! byte-identical output.

pub mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use gfou_core::comparison::{solve_problem, verify_comparison, ComparisonConfig};
use gfou_core::domain::GaussianDomain;
use gfou_core::extension::ExtensionField;
use gfou_core::gauss::FractionalParams;
use gfou_core::rearrange::decreasing_rearrangement;
use gfou_core::regularity::{regularity_ratio, GreensKernel};
use gfou_core::semigroup::mehler_kernel;
use gfou_core::spectral::{build_spectral_model, SpectralModel};
use gfou_core::GridField;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{config_hash, ConfigError, DatumSpec, DomainSpec, ExperimentConfig, Shape2d};

/// Process exit codes of the tool.
pub mod exit_code {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const VIOLATED: i32 = 2;
    pub const INCONCLUSIVE: i32 = 3;
    pub const NUMERICAL: i32 = 4;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Extend,
    Rearrange,
    Compare,
    Regularity,
    Kernel,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Extend => "extend",
            Subcommand::Rearrange => "rearrange",
            Subcommand::Compare => "compare",
            Subcommand::Regularity => "regularity",
            Subcommand::Kernel => "kernel",
        }
    }
}

#[derive(Debug)]
pub struct RunError {
    pub exit: i32,
    pub message: String,
}

impl RunError {
    fn config(msg: impl Into<String>) -> Self {
        RunError { exit: exit_code::CONFIG, message: msg.into() }
    }
    fn numerical(msg: impl Into<String>) -> Self {
        RunError { exit: exit_code::NUMERICAL, message: msg.into() }
    }
}

impl From<gfou_core::Error> for RunError {
    fn from(e: gfou_core::Error) -> Self {
        match &e {
            gfou_core::Error::Domain(_) | gfou_core::Error::Config(_) => {
                RunError { exit: exit_code::CONFIG, message: e.to_string() }
            }
            gfou_core::Error::Numerical(_) => {
                RunError { exit: exit_code::NUMERICAL, message: e.to_string() }
            }
        }
    }
}

impl From<std::io::Error> for RunError {
    fn from(e: std::io::Error) -> Self {
        RunError::numerical(format!("io error: {e}"))
    }
}

/// Full-precision decimal rendering (17 significant digits, '.' decimal).
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn artifact_header(cfg: &ExperimentConfig, what: &str, extras: &[(&str, String)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# gfou {what}");
    let _ = writeln!(out, "# config-hash: {}", config_hash(cfg));
    let _ = writeln!(out, "# seed: {}", cfg.seed);
    for (k, v) in extras {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out
}

fn build_domain(cfg: &ExperimentConfig) -> Result<Arc<GaussianDomain>, RunError> {
    Ok(match &cfg.domain {
        DomainSpec::Interval { a, b } => GaussianDomain::interval(*a, *b, 16)?,
        DomainSpec::HalfLine { lambda } => GaussianDomain::half_line(*lambda, 16)?,
        DomainSpec::Grid2d { x0, x1, y0, y1, h, shape } => {
            let (mx, my) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
            let shape = *shape;
            GaussianDomain::grid2d((*x0, *x1), (*y0, *y1), *h, move |x, y| match shape {
                Shape2d::Rect => true,
                Shape2d::LShape => !(x > mx && y > my),
            })?
        }
    })
}

fn spectral_model(
    cfg: &ExperimentConfig,
    domain: &Arc<GaussianDomain>,
) -> Result<Arc<SpectralModel>, RunError> {
    // optional cache keyed by geometry + truncation, under GFOU_CACHE_DIR
    let cache_key = match std::env::var_os("GFOU_CACHE_DIR") {
        Some(dir) => {
            let mut tag = format!("{:?}-k{}-r{}", domain.kind(), cfg.k, cfg.resolution);
            tag.retain(|c| c.is_ascii_alphanumeric() || c == '-' || c == '.');
            let mut path = PathBuf::from(dir);
            path.push(format!("{tag}.spectral.txt"));
            Some(path)
        }
        None => None,
    };
    if let Some(path) = &cache_key {
        if let Ok(text) = std::fs::read_to_string(path) {
            if let Ok(model) = SpectralModel::from_text(&text) {
                return Ok(Arc::new(model));
            }
        }
    }
    let model = Arc::new(build_spectral_model(domain, cfg.k, cfg.resolution)?);
    if let Some(path) = &cache_key {
        if let Some(parent) = path.parent() {
            let _ = std::fs::create_dir_all(parent);
        }
        let _ = std::fs::write(path, model.to_text());
    }
    Ok(model)
}

/// Load a two-column (node, value) CSV aligned with the model grid by
/// nearest-node matching within 1e-9.
pub fn load_field_csv(path: &Path, domain: &Arc<GaussianDomain>) -> Result<GridField, RunError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunError::config(format!("cannot read {}: {e}", path.display())))?;
    let rule = domain.quadrature();
    let mut values = vec![f64::NAN; rule.len()];
    let mut rows = 0usize;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("node") {
            continue;
        }
        let mut parts = line.split(',');
        let (node, value) = (
            parts.next().unwrap_or_default().trim(),
            parts.next().unwrap_or_default().trim(),
        );
        let node: f64 = node.parse().map_err(|e| {
            RunError::config(format!("row {}: bad node `{node}`: {e}", lineno + 1))
        })?;
        let value: f64 = value.parse().map_err(|e| {
            RunError::config(format!("row {}: bad value `{value}`: {e}", lineno + 1))
        })?;
        // nearest node
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for i in 0..rule.len() {
            let d = (rule.xs()[i] - node).abs();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        if best_d > 1e-9 {
            return Err(RunError::config(format!(
                "row {}: node {node} does not match the declared grid (nearest {} at distance {best_d:.3e})",
                lineno + 1,
                rule.xs()[best]
            )));
        }
        values[best] = value;
        rows += 1;
    }
    if rows == 0 {
        return Err(RunError::config("empty field file (no data rows)"));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(RunError::config(format!(
            "field file covers {rows} of {} grid nodes",
            rule.len()
        )));
    }
    Ok(GridField::from_values(Arc::clone(domain), "csv-field", values)?)
}

fn datum_field(
    cfg: &ExperimentConfig,
    model: &Arc<SpectralModel>,
) -> Result<GridField, RunError> {
    match &cfg.datum {
        DatumSpec::One => Ok(GridField::constant(model.domain(), 1.0, "one")),
        DatumSpec::Bump { center, width } => {
            let (c, w) = (*center, *width);
            let dim = model.domain().dim();
            Ok(GridField::from_fn(model.domain(), "bump", move |p| {
                let mut e = -((p[0] - c) / w).powi(2);
                if dim == 2 {
                    e -= ((p[1] - c) / w).powi(2);
                }
                e.exp()
            }))
        }
        DatumSpec::Csv(path) => load_field_csv(Path::new(path), model.domain()),
    }
}

fn write_artifact(out_dir: &Path, name: &str, contents: &str) -> Result<PathBuf, RunError> {
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    std::fs::write(&path, contents)?;
    Ok(path)
}

/// Run one experiment; returns the process exit code.
pub fn run(cmd: Subcommand, cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    cfg.validate().map_err(|e| RunError::config(e.to_string()))?;
    match cmd {
        Subcommand::Solve => run_solve(cfg, out_dir),
        Subcommand::Extend => run_extend(cfg, out_dir),
        Subcommand::Rearrange => run_rearrange(cfg, out_dir),
        Subcommand::Compare => run_compare(cfg, out_dir),
        Subcommand::Regularity => run_regularity(cfg, out_dir),
        Subcommand::Kernel => run_kernel(cfg, out_dir),
    }
}

fn run_solve(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let domain = build_domain(cfg)?;
    let model = spectral_model(cfg, &domain)?;
    let f = datum_field(cfg, &model)?;
    let u = solve_problem(&model, &f, cfg.s)?;
    let mut out = artifact_header(
        cfg,
        "solve",
        &[
            ("tail-fraction", format!("{:.3e}", u.diagnostics.tail_fraction)),
            (
                "truncation-warning",
                u.diagnostics.truncation_warning.to_string(),
            ),
        ],
    );
    let rule = model.domain().quadrature();
    if model.domain().dim() == 1 {
        out.push_str("node,value\n");
        for i in 0..rule.len() {
            let _ = writeln!(out, "{},{}", fmt_f64(rule.xs()[i]), fmt_f64(u.field.values()[i]));
        }
    } else {
        out.push_str("x,y,value\n");
        for i in 0..rule.len() {
            let node = rule.node(i);
            let _ = writeln!(
                out,
                "{},{},{}",
                fmt_f64(node[0]),
                fmt_f64(node[1]),
                fmt_f64(u.field.values()[i])
            );
        }
    }
    write_artifact(out_dir, "solution.csv", &out)?;
    Ok(if u.diagnostics.truncation_warning {
        exit_code::INCONCLUSIVE
    } else {
        exit_code::OK
    })
}

fn run_extend(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let domain = build_domain(cfg)?;
    if domain.dim() != 1 {
        return Err(RunError::config("extend exports 1D extension fields"));
    }
    let model = spectral_model(cfg, &domain)?;
    let f = datum_field(cfg, &model)?;
    let u = solve_problem(&model, &f, cfg.s)?;
    let params = FractionalParams::new(cfg.s)?;
    let mut levels = cfg.y_levels.clone();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let ext = ExtensionField::build(&model, &u.field, &params, levels)?;
    let mut out = artifact_header(
        cfg,
        "extend",
        &[("c_s", fmt_f64(params.c_s)), ("a", fmt_f64(params.a))],
    );
    out.push_str("y");
    let rule = model.domain().quadrature();
    for i in 0..rule.len() {
        let _ = write!(out, ",{}", fmt_f64(rule.xs()[i]));
    }
    out.push('\n');
    let matrix = ext.values_matrix();
    for (j, row) in matrix.iter().enumerate() {
        let _ = write!(out, "{}", fmt_f64(ext.y_levels()[j]));
        for v in row {
            let _ = write!(out, ",{}", fmt_f64(*v));
        }
        out.push('\n');
    }
    write_artifact(out_dir, "extension.csv", &out)?;
    Ok(exit_code::OK)
}

fn run_rearrange(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let domain = build_domain(cfg)?;
    let model = spectral_model(cfg, &domain)?;
    let f = datum_field(cfg, &model)?;
    let prof = decreasing_rearrangement(&f);
    let mut out = artifact_header(
        cfg,
        "rearrange",
        &[("measure", fmt_f64(prof.measure()))],
    );
    out.push_str("r,value,cumulative\n");
    for i in 0..prof.breakpoints().len() {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt_f64(prof.breakpoints()[i]),
            fmt_f64(prof.values()[i]),
            fmt_f64(prof.cumulative()[i])
        );
    }
    write_artifact(out_dir, "profile.csv", &out)?;
    Ok(exit_code::OK)
}

fn run_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let domain = build_domain(cfg)?;
    let ccfg = ComparisonConfig {
        k: cfg.k,
        k_sym: cfg.k.max(30),
        resolution: cfg.resolution,
        sym_resolution: cfg.sym_resolution,
    };
    let datum_desc = format!("{:?}", cfg.datum);
    let report = match &cfg.datum {
        DatumSpec::One => {
            verify_comparison(&domain, &|_: &[f64]| 1.0, &datum_desc, cfg.s, &ccfg)?
        }
        DatumSpec::Bump { center, width } => {
            let (c, w) = (*center, *width);
            let dim = domain.dim();
            verify_comparison(
                &domain,
                &move |p: &[f64]| {
                    let mut e = -((p[0] - c) / w).powi(2);
                    if dim == 2 {
                        e -= ((p[1] - c) / w).powi(2);
                    }
                    e.exp()
                },
                &datum_desc,
                cfg.s,
                &ccfg,
            )?
        }
        DatumSpec::Csv(_) => {
            return Err(RunError::config(
                "compare takes analytic data (one | bump); csv data is for solve/extend",
            ));
        }
    };
    let mut text = String::new();
    let _ = writeln!(text, "domain: {}", report.domain_desc);
    let _ = writeln!(text, "datum: {}", report.datum_desc);
    let _ = writeln!(text, "s: {}", report.s);
    let _ = writeln!(text, "config-hash: {}", config_hash(cfg));
    let _ = writeln!(text, "max-gap: {}", fmt_f64(report.max_gap));
    let _ = writeln!(text, "tolerance-budget: {}", fmt_f64(report.tolerance_budget));
    let _ = writeln!(text, "control-gap: {}", fmt_f64(report.control_gap));
    let _ = writeln!(text, "tail-fraction-u: {:.3e}", report.tail_fraction_u);
    let _ = writeln!(text, "tail-fraction-psi: {:.3e}", report.tail_fraction_psi);
    let _ = writeln!(
        text,
        "verdict: {}",
        if report.confirmed() { "confirmed" } else { "violated-beyond-budget" }
    );
    write_artifact(out_dir, "report.txt", &text)?;

    let mut csv = artifact_header(
        cfg,
        "compare",
        &[("tolerance-budget", fmt_f64(report.tolerance_budget))],
    );
    csv.push_str("r,u_cumulative,psi_cumulative\n");
    let mut grid: Vec<f64> = report
        .u_profile
        .breakpoints()
        .iter()
        .chain(report.psi_profile.breakpoints())
        .copied()
        .collect();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup();
    for &r in &grid {
        let _ = writeln!(
            csv,
            "{},{},{}",
            fmt_f64(r),
            fmt_f64(report.u_profile.cumulative_at(r)),
            fmt_f64(report.psi_profile.cumulative_at(r))
        );
    }
    write_artifact(out_dir, "profiles.csv", &csv)?;
    Ok(if report.confirmed() {
        exit_code::OK
    } else {
        exit_code::VIOLATED
    })
}

fn run_regularity(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let domain = build_domain(cfg)?;
    if domain.measure() > 0.5 + 1e-12 {
        return Err(RunError::config("regularity batch needs γ(Ω) <= 1/2"));
    }
    let model = spectral_model(cfg, &domain)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = artifact_header(
        cfg,
        "regularity",
        &[
            ("p", fmt_f64(cfg.p)),
            ("alpha", fmt_f64(cfg.alpha)),
            ("s", fmt_f64(cfg.s)),
        ],
    );
    out.push_str("datum-id,ratio\n");
    let mut max_ratio = 0.0f64;
    let lo_node = model.domain().nodes_1d().map(|x| x[0]).unwrap_or(0.0);
    for id in 0..cfg.family {
        let center = lo_node + rng.gen_range(0.2..2.0);
        let width = rng.gen_range(0.2..1.0);
        let amp = rng.gen_range(0.5..2.0);
        let f = GridField::from_fn(model.domain(), "f", move |p| {
            amp * (-((p[0] - center) / width).powi(2)).exp()
        });
        let ratio = regularity_ratio(&model, &f, cfg.s, cfg.p, cfg.alpha)?;
        max_ratio = max_ratio.max(ratio.ratio);
        let _ = writeln!(out, "{id},{}", fmt_f64(ratio.ratio));
    }
    let _ = writeln!(out, "# empirical-constant: {}", fmt_f64(max_ratio));
    write_artifact(out_dir, "ratios.csv", &out)?;
    Ok(exit_code::OK)
}

fn run_kernel(cfg: &ExperimentConfig, out_dir: &Path) -> Result<i32, RunError> {
    let n = cfg.kernel_grid.max(2);
    let mut out;
    if cfg.kernel_table == "mehler" {
        out = artifact_header(cfg, "kernel (Mehler rows)", &[("t", fmt_f64(cfg.t))]);
        out.push_str("x,y,M_t\n");
        for i in 0..n {
            for j in 0..n {
                let x = -3.0 + 6.0 * i as f64 / (n - 1) as f64;
                let y = -3.0 + 6.0 * j as f64 / (n - 1) as f64;
                let m = mehler_kernel(&[x], &[y], cfg.t)?;
                let _ = writeln!(out, "{},{},{}", fmt_f64(x), fmt_f64(y), fmt_f64(m));
            }
        }
    } else {
        let kernel = GreensKernel::new(cfg.s, cfg.p)?;
        out = artifact_header(
            cfg,
            "kernel (half-space Green's function split)",
            &[
                ("c_p", fmt_f64(kernel.c_p)),
                ("split-consistency-tolerance", "1e-9".into()),
            ],
        );
        out.push_str("x1,y1,G,G1,G2,G3\n");
        for i in 1..=n {
            for j in 1..=n {
                let x = 0.25 * i as f64;
                let y = 0.25 * j as f64 + 0.1111;
                if (x - y).abs() < gfou_core::regularity::DIAGONAL_EXCLUSION {
                    continue;
                }
                let split = kernel.eval(x, y)?;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt_f64(x),
                    fmt_f64(y),
                    fmt_f64(split.g),
                    fmt_f64(split.g1),
                    fmt_f64(split.g2),
                    fmt_f64(split.g3)
                );
            }
        }
    }
    write_artifact(out_dir, "kernel.csv", &out)?;
    Ok(exit_code::OK)
}
