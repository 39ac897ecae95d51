//! Command-line front end. Every subcommand is a thin adapter over a library call.
//!
//! Exit codes: 0 when every asserted bound passes, 1 on a bound violation or failed
//! certificate, 2 on usage or configuration errors.

use crate::applications::ConvexBody;
use crate::c_geometry::{check_c_convexity, verify_mtww, ConvexityReport, MtwReport};
use crate::cost::{CostKind, CostModel};
use crate::error::{Error, Result};
use crate::io::{read_body, read_measure, write_json, write_plan};
use crate::lab::{
    certified_instance, emit_report, gauss_family, run_both_measures, run_calculus_check, run_gap_bound,
    run_gauss_experiment, run_holder_experiment, run_reflector_design, run_support_localization,
    run_target_stability, sig12, summarize, BoundRow, GaussGrid, ReportFormat, SweepConfig,
};
use crate::ot::{solve_discrete_ot, wasserstein1};
use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};
use std::path::{Path, PathBuf};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "MTWLAB_OUT_DIR";
/// Output directory when neither --out nor the environment variable is set.
pub const DEFAULT_OUT_DIR: &str = "mtwlab-out";
/// Duality gap accepted by `ot-solve`.
pub const DUALITY_GAP_TOL: f64 = 1e-8;
/// Accepted negative part of the MTW tensor on orthogonal directions (finite difference noise).
pub const MTW_ORTHOGONAL_TOL: f64 = 1e-3;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "mtwlab", version, about = "Optimal transport stability toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags mirroring the keys of the sweep configuration file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// JSON configuration; its keys win over flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    cost: Option<CostKind>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    n_source: Option<usize>,
    #[arg(long)]
    n_target: Option<usize>,
    /// Comma separated, ascending.
    #[arg(long, value_delimiter = ',')]
    perturbations: Option<Vec<f64>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    mixtures: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    pairs: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    dirs: Option<usize>,
    #[arg(long)]
    segment_points: Option<usize>,
    /// Comma separated body files; the first is the reference.
    #[arg(long, value_delimiter = ',')]
    bodies: Option<Vec<String>>,
    #[arg(long)]
    format: Option<ReportFormat>,
    /// Report path; defaults to <out dir>/<subcommand>.<ext>.
    #[arg(long)]
    out: Option<String>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct CostEvalArgs {
    #[arg(long)]
    cost: CostKind,
    /// Comma separated coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    x: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    y: Vec<f64>,
    /// Also report membership in D_eps.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    cost: CostKind,
    #[arg(long)]
    mu: PathBuf,
    #[arg(long)]
    nu: PathBuf,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args, Debug)]
struct W1Args {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Cost value, gradient and domain membership at one pair.
    CostEval(CostEvalArgs),
    /// c-exponential round trip, gradient and profile checks on random pairs of D_eps.
    CexpCheck(ConfigArgs),
    /// Sampled MTW tensor on D_eps.
    MtwVerify(ConfigArgs),
    /// c-convexity of D_eps along sampled c-segments.
    CConvexity(ConfigArgs),
    /// Brute-force strong c-concavity certificate of an optimal potential.
    ConcavityCertify(ConfigArgs),
    /// Exact discrete optimal transport between two measure files.
    OtSolve(SolveArgs),
    /// Wasserstein-1 distance between two measure files.
    W1(W1Args),
    /// Target stability sweep.
    StabilityTarget(ConfigArgs),
    /// Both-measure stability sweep.
    StabilityBoth(ConfigArgs),
    /// Suboptimality gap bounds on mixture plans.
    GapCheck(ConfigArgs),
    /// Hölder regularity of the optimal map.
    HolderCheck(ConfigArgs),
    /// Support localization for the reflector cost.
    SupportCheck(ConfigArgs),
    /// Curvature-measure stability for a family of convex bodies.
    GaussRun(ConfigArgs),
    /// Reflector maps from LP duals on sphere grids.
    ReflectorRun(ConfigArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CostEval(_) => "cost-eval",
            Command::CexpCheck(_) => "cexp-check",
            Command::MtwVerify(_) => "mtw-verify",
            Command::CConvexity(_) => "c-convexity",
            Command::ConcavityCertify(_) => "concavity-certify",
            Command::OtSolve(_) => "ot-solve",
            Command::W1(_) => "w1",
            Command::StabilityTarget(_) => "stability-target",
            Command::StabilityBoth(_) => "stability-both",
            Command::GapCheck(_) => "gap-check",
            Command::HolderCheck(_) => "holder-check",
            Command::SupportCheck(_) => "support-check",
            Command::GaussRun(_) => "gauss-run",
            Command::ReflectorRun(_) => "reflector-run",
        }
    }

    fn threads(&self) -> Option<usize> {
        match self {
            Command::CostEval(a) => a.threads,
            Command::OtSolve(a) => a.threads,
            Command::W1(a) => a.threads,
            Command::CexpCheck(c)
            | Command::MtwVerify(c)
            | Command::CConvexity(c)
            | Command::ConcavityCertify(c)
            | Command::StabilityTarget(c)
            | Command::StabilityBoth(c)
            | Command::GapCheck(c)
            | Command::HolderCheck(c)
            | Command::SupportCheck(c)
            | Command::GaussRun(c)
            | Command::ReflectorRun(c) => c.threads,
        }
    }
}

/// A resolved configuration plus what the user set explicitly.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: SweepConfig,
    /// Keys given by flag or file.
    pub explicit: Map<String, Value>,
}

impl ConfigArgs {
    fn flag_map(&self) -> Result<Map<String, Value>> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        if let Some(v) = self.cost {
            put("cost", serde_json::to_value(v)?);
        }
        if let Some(v) = self.eps {
            put("eps", json!(v));
        }
        if let Some(v) = self.n_source {
            put("n_source", json!(v));
        }
        if let Some(v) = self.n_target {
            put("n_target", json!(v));
        }
        if let Some(v) = &self.perturbations {
            put("perturbations", json!(v));
        }
        if let Some(v) = self.seed {
            put("seed", json!(v));
        }
        if let Some(v) = self.instances {
            put("instances", json!(v));
        }
        if let Some(v) = self.mixtures {
            put("mixtures", json!(v));
        }
        if let Some(v) = self.beta {
            put("beta", json!(v));
        }
        if let Some(v) = self.pairs {
            put("pairs", json!(v));
        }
        if let Some(v) = self.samples {
            put("samples", json!(v));
        }
        if let Some(v) = self.grid {
            put("grid", json!(v));
        }
        if let Some(v) = self.dirs {
            put("dirs", json!(v));
        }
        if let Some(v) = self.segment_points {
            put("segment_points", json!(v));
        }
        if let Some(v) = &self.bodies {
            put("bodies", json!(v));
        }
        if let Some(v) = self.format {
            put("format", serde_json::to_value(v)?);
        }
        if let Some(v) = &self.out {
            put("out", json!(v));
        }
        Ok(m)
    }
}

/// Merges flags with an optional config file (file wins, with a warning), then requires a
/// seed and validates.
pub fn resolve_config(flags: Map<String, Value>, file: Option<&Path>) -> Result<Resolved> {
    let mut merged = flags;
    if let Some(path) = file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        let Value::Object(keys) = serde_json::from_str::<Value>(&text)? else {
            return Err(Error::InvalidParameter("config file must hold a JSON object".into()));
        };
        for (k, v) in keys {
            if let Some(old) = merged.get(&k) {
                if *old != v {
                    eprintln!("warning: config file sets {k} = {v}, overriding --{} {old}", k.replace('_', "-"));
                }
            }
            merged.insert(k, v);
        }
    }
    if !merged.contains_key("seed") {
        return Err(Error::InvalidParameter("--seed is required (no implicit seed is ever used)".into()));
    }
    let config: SweepConfig = serde_json::from_value(Value::Object(merged.clone()))?;
    config.validate()?;
    Ok(Resolved { config, explicit: merged })
}

fn out_path(out: Option<&str>, name: &str, ext: &str) -> Result<PathBuf> {
    if let Some(p) = out {
        return Ok(PathBuf::from(p));
    }
    let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    std::fs::create_dir_all(&dir)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", dir.display()))))?;
    Ok(dir.join(format!("{name}.{ext}")))
}

/// Report format: explicit key first, then the extension of --out, then CSV.
fn report_format(r: &Resolved) -> ReportFormat {
    if r.explicit.contains_key("format") {
        return r.config.format;
    }
    match &r.config.out {
        Some(p) if p.ends_with(".json") => ReportFormat::Json,
        _ => ReportFormat::Csv,
    }
}

/// Rows produced by a config-driven subcommand, exactly as the library computes them.
pub fn sweep_rows(name: &str, config: &SweepConfig) -> Result<Vec<BoundRow>> {
    match name {
        "cexp-check" => run_calculus_check(config),
        "stability-target" => run_target_stability(config),
        "stability-both" => run_both_measures(config),
        "gap-check" => run_gap_bound(config),
        "holder-check" => run_holder_experiment(config),
        "support-check" => run_support_localization(config),
        "reflector-run" => run_reflector_design(config),
        "gauss-run" => {
            let grid = GaussGrid { normals: config.grid, samples: config.samples };
            if config.bodies.is_empty() {
                let (k0, family) = gauss_family(config.seed)?;
                run_gauss_experiment(&k0, &family, grid, config.seed)
            } else {
                let bodies: Vec<(String, ConvexBody)> = config
                    .bodies
                    .iter()
                    .map(|p| {
                        let path = Path::new(p);
                        let name = path.file_stem().map_or_else(|| p.clone(), |s| s.to_string_lossy().into_owned());
                        Ok((name, read_body(path)?))
                    })
                    .collect::<Result<_>>()?;
                run_gauss_experiment(&bodies[0].1, &bodies[1..], grid, config.seed)
            }
        }
        other => Err(Error::InvalidParameter(format!("'{other}' is not a row-report subcommand"))),
    }
}

fn model_for(cost: CostKind, d: usize) -> Result<CostModel<f64>> {
    CostModel::standard(cost, d)
}

fn run_rows(name: &str, r: &Resolved) -> Result<i32> {
    let rows = sweep_rows(name, &r.config)?;
    let format = report_format(r);
    let ext = match format {
        ReportFormat::Csv => "csv",
        ReportFormat::Json => "json",
    };
    let path = out_path(r.config.out.as_deref(), name, ext)?;
    emit_report(&rows, &path, format)?;
    let s = summarize(&rows);
    println!(
        "{name}: {}/{} rows pass, worst_ratio={}, report={}",
        s.pass_count,
        s.total,
        sig12(s.worst_ratio),
        path.display()
    );
    Ok(if s.pass_count == s.total { EXIT_PASS } else { EXIT_FAIL })
}

fn mtw_json(cost: CostKind, c: &SweepConfig, rep: &MtwReport<f64>, pass: bool) -> Value {
    json!({
        "cost": cost,
        "eps": c.eps,
        "seed": c.seed,
        "n_points": rep.n_points,
        "n_dirs": rep.n_dirs,
        "samples_evaluated": rep.samples_evaluated,
        "degenerate_skipped": rep.degenerate_skipped,
        "mtw_constant_C": rep.mtw_constant_c,
        "min_tensor_value": rep.min_tensor_value,
        "orthogonal_min": rep.orthogonal_min,
        "violating_pair": rep.violating_pair.as_ref().map(|v| json!({
            "x": v.x, "y": v.y, "zeta": v.zeta, "eta": v.eta, "eta_tilde": v.eta_tilde,
            "normalized_value": v.normalized_value, "alignment": v.alignment,
        })),
        "pass": pass,
    })
}

fn convexity_json(c: &SweepConfig, rep: &ConvexityReport<f64>, pass: bool) -> Value {
    json!({
        "cost": c.cost,
        "eps": c.eps,
        "seed": c.seed,
        "pairs_checked": rep.pairs_checked,
        "points_checked": rep.points_checked,
        "violation_count": rep.violations.len(),
        "violations": rep.violations.iter().take(20).map(|v| json!({"x": v.x, "y0": v.y0, "y1": v.y1, "t": v.t}))
            .collect::<Vec<_>>(),
        "max_norm_identity_error": rep.max_norm_identity_error,
        "norm_bound_failures": rep.norm_bound_failures,
        "pass": pass,
    })
}

fn space_dim(cost: CostKind) -> usize {
    if cost.needs_sphere() {
        3
    } else {
        2
    }
}

fn run_config_command(name: &str, r: &Resolved) -> Result<i32> {
    let c = &r.config;
    let write = |value: &Value| -> Result<PathBuf> {
        let path = out_path(c.out.as_deref(), name, "json")?;
        write_json(&path, value)?;
        Ok(path)
    };
    match name {
        "mtw-verify" => {
            let model = model_for(c.cost, space_dim(c.cost))?;
            let rep = verify_mtww(&model, c.eps, c.samples, c.dirs, c.seed)?;
            let pass = rep.orthogonal_min >= -MTW_ORTHOGONAL_TOL && rep.mtw_constant_c.is_finite();
            let path = write(&mtw_json(c.cost, c, &rep, pass))?;
            println!(
                "mtw-verify: mtw_constant_C={} orthogonal_min={} min_tensor_value={} report={}",
                sig12(rep.mtw_constant_c),
                sig12(rep.orthogonal_min),
                sig12(rep.min_tensor_value),
                path.display()
            );
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        "c-convexity" => {
            let model = model_for(c.cost, space_dim(c.cost))?;
            let rep = check_c_convexity(&model, c.eps, c.pairs, c.segment_points, c.seed)?;
            let pass = rep.violations.is_empty() && rep.norm_bound_failures == 0;
            let path = write(&convexity_json(c, &rep, pass))?;
            println!(
                "c-convexity: {} violations over {} segment points, report={}",
                rep.violations.len(),
                rep.points_checked,
                path.display()
            );
            Ok(if pass { EXIT_PASS } else { EXIT_FAIL })
        }
        "concavity-certify" => {
            let model = model_for(c.cost, 3)?;
            let eps = c.cost.needs_sphere().then_some(c.eps);
            let inst = certified_instance(&model, c.n_source, c.seed, eps)?;
            let cert = &inst.certificate;
            let path = write(&json!({
                "cost": c.cost,
                "n_source": c.n_source,
                "seed": c.seed,
                "eps": cert.eps,
                "strong_constant_C": cert.constant,
                "sharpened_constant": cert.sharpened,
                "primal_value": inst.primal_value,
                "potential": cert.potential.values(),
                "pass": cert.constant > 0.0,
            }))?;
            println!("concavity-certify: strong_constant_C={} report={}", sig12(cert.constant), path.display());
            Ok(EXIT_PASS)
        }
        _ => run_rows(name, r),
    }
}

fn run(cmd: Command) -> Result<i32> {
    let name = cmd.name();
    match cmd {
        Command::CostEval(a) => {
            let model = model_for(a.cost, a.x.len())?;
            model.space().check_dim(&a.y)?;
            let value = model.cost(&a.x, &a.y).finite().map(|v| v + 0.0);
            let grad = match value {
                Some(_) => Some(model.grad_x(&a.x, &a.y)?),
                None => None,
            };
            let in_domain = a.eps.map(|e| model.in_domain(&a.x, &a.y, e));
            eprintln!("config: {}", json!({"cost": a.cost, "x": a.x, "y": a.y, "eps": a.eps}));
            let path = out_path(a.out.as_deref(), name, "json")?;
            write_json(
                &path,
                &json!({"cost": a.cost, "x": a.x, "y": a.y, "value": value, "finite": value.is_some(),
                        "grad_x": grad, "eps": a.eps, "in_domain": in_domain}),
            )?;
            println!("{}", value.map_or_else(|| "inf".to_string(), sig12));
            Ok(EXIT_PASS)
        }
        Command::OtSolve(a) => {
            eprintln!("config: {}", json!({"cost": a.cost, "mu": a.mu, "nu": a.nu}));
            let mu = read_measure(&a.mu)?;
            let nu = read_measure(&a.nu)?;
            let model = CostModel::new(a.cost, mu.space().clone())?;
            let sol = solve_discrete_ot(&model, &mu, &nu)?;
            let path = out_path(a.out.as_deref(), name, "json")?;
            write_plan(&path, &sol)?;
            println!(
                "ot-solve: primal_value={} duality_gap={} plan={}",
                sig12(sol.primal_value),
                sig12(sol.duality_gap),
                path.display()
            );
            Ok(if sol.duality_gap <= DUALITY_GAP_TOL { EXIT_PASS } else { EXIT_FAIL })
        }
        Command::W1(a) => {
            eprintln!("config: {}", json!({"a": a.a, "b": a.b}));
            let ma = read_measure(&a.a)?;
            let mb = read_measure(&a.b)?;
            let w = wasserstein1(ma.space(), &ma, &mb)?;
            let path = out_path(a.out.as_deref(), name, "json")?;
            write_json(&path, &json!({"w1": w}))?;
            println!("{}", sig12(w));
            Ok(EXIT_PASS)
        }
        Command::CexpCheck(c)
        | Command::MtwVerify(c)
        | Command::CConvexity(c)
        | Command::ConcavityCertify(c)
        | Command::StabilityTarget(c)
        | Command::StabilityBoth(c)
        | Command::GapCheck(c)
        | Command::HolderCheck(c)
        | Command::SupportCheck(c)
        | Command::GaussRun(c)
        | Command::ReflectorRun(c) => {
            let r = resolve_config(c.flag_map()?, c.config.as_deref())?;
            eprintln!("config: {}", serde_json::to_string(&r.config)?);
            run_config_command(name, &r)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParameter(_)
        | Error::DimensionMismatch { .. }
        | Error::Domain(_)
        | Error::Unsupported(_)
        | Error::SizeLimit(_)
        | Error::Io(_)
        | Error::Json(_) => EXIT_USAGE,
        _ => EXIT_FAIL,
    }
}

/// Parses `argv` (without the program name) and runs the subcommand.
pub fn dispatch(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("mtwlab".to_string()).chain(argv.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command.threads() {
        Some(0) => Err(Error::InvalidParameter("--threads must be positive".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli.command)),
            Err(e) => Err(Error::InvalidParameter(format!("cannot build a pool of {n} threads: {e}"))),
        },
        None => run(cli.command),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
