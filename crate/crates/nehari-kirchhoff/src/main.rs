//! Batch entry point: config ingestion, subcommand dispatch, structured
//! output. Data goes to stdout or files, diagnostics to stderr. Exit codes:
//! 0 success, 1 validation error, 2 solver failure, 3 verification failure.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nehari_kirchhoff::extremal;
use nehari_kirchhoff::fiber;
use nehari_kirchhoff::mesh::Mesh1d;
use nehari_kirchhoff::problem::{load_config, ValidatedConfig};
use nehari_kirchhoff::quadrature;
use nehari_kirchhoff::solver::{self, Branch, SolveReport, SolverOptions};
use nehari_kirchhoff::thresholds;
use nehari_kirchhoff::verify;
use nehari_kirchhoff::Error;

#[derive(Parser)]
#[command(
    name = "nk",
    version,
    about = "Two-branch Nehari-manifold solver for a singular Kirchhoff-type fractional p-Laplacian problem"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Plain-text `key = value` problem configuration.
    #[arg(long)]
    config: PathBuf,
    /// Number of mesh nodes (uniform, boundary included).
    #[arg(long, default_value_t = 129)]
    mesh: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the branch minimizers and certify them as discrete weak
    /// solutions; JSON report on stdout, iteration-trace CSV per branch.
    Solve {
        #[command(flatten)]
        common: Common,
        /// plus | minus | both
        #[arg(long, default_value = "both")]
        branch: String,
        /// Explicit value, or `auto:FRAC` for FRAC * min(lambda*, lambda**)
        /// (FRAC * lambda*** with --critical).
        #[arg(long, default_value = "auto:0.5")]
        lambda: String,
        /// Critical regime: requires q = p*_s and switches the auto lambda
        /// and the minus-branch initialization to the critical path.
        #[arg(long)]
        critical: bool,
        /// Directory for the iteration-trace CSV files.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Sample the fiber map of the canonical positive bump: CSV columns
    /// t,phi,dphi,ddphi,psi on stdout.
    Fiber {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 1e-2)]
        t_lo: f64,
        #[arg(long, default_value_t = 1e2)]
        t_hi: f64,
    },
    /// Print the admissibility-constant bundle as JSON.
    Thresholds {
        #[command(flatten)]
        common: Common,
    },
    /// Print the Sobolev-constant estimate as JSON.
    Sobolev {
        #[command(flatten)]
        common: Common,
    },
    /// Truncated-family sweep: CSV epsilon,seminorm,lp_p,lpstar,quotient.
    Extremal {
        #[command(flatten)]
        common: Common,
        /// Comma-separated decreasing epsilon grid.
        #[arg(long)]
        eps_grid: Option<String>,
    },
    /// Run the seeded property suites; exit 3 if any fails.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

#[derive(Serialize)]
struct RunManifest {
    config_path: String,
    subcommand: &'static str,
    seed: u64,
    output_dir: String,
    versions: String,
}

impl RunManifest {
    fn new(common: &Common, subcommand: &'static str, seed: u64, out: Option<&PathBuf>) -> Self {
        RunManifest {
            config_path: common.config.display().to_string(),
            subcommand,
            seed,
            output_dir: out
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| ".".to_string()),
            versions: format!("nk {}", env!("CARGO_PKG_VERSION")),
        }
    }
}

/// 17-significant-digit scientific notation for exact CSV round trips.
fn sci(v: f64) -> String {
    format!("{v:.16e}")
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::ExponentChainViolated(_)
        | Error::DimensionViolated(_)
        | Error::NegativeWeight(_)
        | Error::ConfigParse(_)
        | Error::Io(_) => 1,
        _ => 2,
    }
}

#[derive(Serialize)]
struct SolutionJson {
    branch: &'static str,
    energy: f64,
    m_value: f64,
    residual: f64,
    residual_scale: f64,
    nehari_class: String,
    iterations: usize,
    norm_x: f64,
    floor_sensitivity: f64,
    mesh_lo: f64,
    mesh_hi: f64,
    solution: Vec<f64>,
}

impl SolutionJson {
    fn from_report(r: &SolveReport) -> Self {
        SolutionJson {
            branch: r.branch.as_str(),
            energy: r.energy,
            m_value: r.m_value,
            residual: r.residual,
            residual_scale: r.residual_scale,
            nehari_class: format!("{:?}", r.nehari_class),
            iterations: r.iterations,
            norm_x: r.norm_x,
            floor_sensitivity: r.floor_sensitivity,
            mesh_lo: r.solution.mesh.lo,
            mesh_hi: r.solution.mesh.hi,
            solution: r.solution.values.clone(),
        }
    }
}

#[derive(Serialize)]
struct SolveJson {
    manifest: RunManifest,
    lambda: f64,
    thresholds: thresholds::Thresholds,
    reports: Vec<SolutionJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    norm_separation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    separation_required: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    c_level_margin: Option<f64>,
}

fn write_trace(dir: &PathBuf, report: &SolveReport) -> Result<(), Error> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(format!("nk_trace_{}.csv", report.branch.as_str()));
    let mut f =
        std::fs::File::create(&path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut body = String::from("iter,energy,residual,step\n");
    for rec in &report.trace {
        body.push_str(&format!(
            "{},{},{},{}\n",
            rec.iter,
            sci(rec.energy),
            sci(rec.residual),
            sci(rec.step)
        ));
    }
    f.write_all(body.as_bytes())
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<(ValidatedConfig, Mesh1d), Error> {
    let cfg = load_config(&common.config)?;
    if common.mesh < 9 {
        return Err(Error::ConfigParse(format!(
            "--mesh must be at least 9 nodes, got {}",
            common.mesh
        )));
    }
    let mesh = cfg.default_mesh(common.mesh);
    Ok((cfg, mesh))
}

fn resolve_lambda(
    spec: &str,
    cfg: &ValidatedConfig,
    mesh: Mesh1d,
    critical: bool,
) -> Result<f64, Error> {
    if let Some(frac) = spec.strip_prefix("auto:") {
        let frac: f64 = frac
            .parse()
            .map_err(|_| Error::ConfigParse(format!("bad auto fraction `{frac}`")))?;
        if !(frac > 0.0) {
            return Err(Error::ConfigParse("auto fraction must be positive".into()));
        }
        let sob = thresholds::sobolev_constant(cfg, mesh)?;
        let lam = if critical {
            frac * thresholds::lambda_tstar(cfg, sob.s_p)
        } else {
            frac * thresholds::lambda_star(cfg, sob.s_p).min(thresholds::lambda_dstar(cfg, sob.s_p))
        };
        Ok(lam)
    } else {
        spec.parse::<f64>()
            .map_err(|_| Error::ConfigParse(format!("bad lambda `{spec}`")))
    }
}

fn run_solve(
    common: &Common,
    branch: &str,
    lambda_spec: &str,
    critical: bool,
    out: &PathBuf,
) -> Result<(), Error> {
    let (cfg0, mesh) = load(common)?;
    if critical && !cfg0.is_critical() {
        return Err(Error::ExponentChainViolated(format!(
            "--critical requires q = p*_s = {}, config has q = {}",
            cfg0.p_star, cfg0.q
        )));
    }
    let lambda = resolve_lambda(lambda_spec, &cfg0, mesh, critical)?;
    let cfg = cfg0.with_lambda(lambda)?;
    let sob = thresholds::sobolev_constant(&cfg, mesh)?;
    let th = thresholds::compute(&cfg, sob.s_p);
    let opts = SolverOptions::default();

    let manifest = RunManifest::new(common, "solve", 0, Some(out));
    let mut json = SolveJson {
        manifest,
        lambda,
        thresholds: th,
        reports: Vec::new(),
        norm_separation: None,
        separation_required: None,
        c_level_margin: None,
    };

    match branch {
        "both" => {
            let rep = solver::two_solutions(&cfg, mesh, &opts)?;
            write_trace(out, &rep.plus)?;
            write_trace(out, &rep.minus)?;
            json.reports.push(SolutionJson::from_report(&rep.plus));
            json.reports.push(SolutionJson::from_report(&rep.minus));
            json.norm_separation = Some(rep.norm_separation);
            json.separation_required = Some(rep.separation_required);
            json.c_level_margin = rep.c_level_margin;
            json.thresholds = rep.thresholds;
        }
        "plus" => {
            let bump = solver::positive_bump(&cfg, mesh);
            let rep = solver::minimize_branch(&cfg, Branch::Plus, &bump, &opts)?;
            write_trace(out, &rep)?;
            json.reports.push(SolutionJson::from_report(&rep));
        }
        "minus" => {
            let ws = solver::Workspace::new(cfg.clone(), mesh)?;
            let init = if critical {
                let bump = solver::positive_bump(&cfg, mesh);
                let plus = solver::minimize_branch_on(&ws, Branch::Plus, &bump, &opts)?;
                solver::critical_minus_init(&ws, &plus.solution)?
            } else {
                let bump = solver::positive_bump(&cfg, mesh);
                let nb = ws.norm_p(&bump)?.powf(1.0 / cfg.p);
                bump.scale(2.0 * th.eta_lambda / nb)
            };
            let rep = solver::minimize_branch_on(&ws, Branch::Minus, &init, &opts)?;
            write_trace(out, &rep)?;
            json.reports.push(SolutionJson::from_report(&rep));
        }
        other => {
            return Err(Error::ConfigParse(format!(
                "--branch must be plus|minus|both, got `{other}`"
            )))
        }
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&json).expect("serializable")
    );
    Ok(())
}

fn run_fiber(common: &Common, samples: usize, t_lo: f64, t_hi: f64) -> Result<(), Error> {
    let (cfg, mesh) = load(common)?;
    if !(t_lo > 0.0 && t_hi > t_lo) {
        return Err(Error::ConfigParse("need 0 < t_lo < t_hi".into()));
    }
    let bump = solver::positive_bump(&cfg, mesh);
    let pr = fiber::fiber_profile(&bump, &cfg)?;
    let lambda = cfg.lambda;
    let mut out = String::from("t,phi,dphi,ddphi,psi\n");
    for i in 0..samples.max(2) {
        let t = t_lo * (t_hi / t_lo).powf(i as f64 / (samples.max(2) - 1) as f64);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sci(t),
            sci(fiber::phi(&pr, &cfg, lambda, t)),
            sci(fiber::phi_prime(&pr, &cfg, lambda, t)?),
            sci(fiber::phi_dprime(&pr, &cfg, lambda, t)?),
            sci(fiber::psi(&pr, &cfg, t)),
        ));
    }
    print!("{out}");
    Ok(())
}

#[derive(Serialize)]
struct ThresholdsJson {
    #[serde(flatten)]
    thresholds: thresholds::Thresholds,
    lambda: f64,
    manifest: RunManifest,
}

fn run_thresholds(common: &Common) -> Result<(), Error> {
    let (cfg, mesh) = load(common)?;
    let sob = thresholds::sobolev_constant(&cfg, mesh)?;
    let out = ThresholdsJson {
        thresholds: thresholds::compute(&cfg, sob.s_p),
        lambda: cfg.lambda,
        manifest: RunManifest::new(common, "thresholds", 0, None),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable")
    );
    Ok(())
}

#[derive(Serialize)]
struct SobolevJson {
    #[serde(flatten)]
    estimate: thresholds::SobolevEstimate,
    manifest: RunManifest,
}

fn run_sobolev(common: &Common) -> Result<(), Error> {
    let (cfg, mesh) = load(common)?;
    let out = SobolevJson {
        estimate: thresholds::sobolev_constant(&cfg, mesh)?,
        manifest: RunManifest::new(common, "sobolev", 0, None),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&out).expect("serializable")
    );
    Ok(())
}

fn run_extremal(common: &Common, eps_grid: Option<&str>) -> Result<(), Error> {
    let (cfg, mesh) = load(common)?;
    let grid: Vec<f64> = match eps_grid {
        Some(text) => text
            .split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::ConfigParse(format!("bad epsilon `{t}`")))
            })
            .collect::<Result<_, _>>()?,
        None => extremal::FIT_EPS_GRID.to_vec(),
    };
    let delta = extremal::fit_delta(&cfg);
    let mut out = String::from("epsilon,seminorm,lp_p,lpstar,quotient\n");
    for &eps in &grid {
        let u = extremal::cutoff_family(eps, delta, mesh, &cfg)?;
        let seminorm = quadrature::gagliardo_p(&u, &cfg)?;
        let lp_p = quadrature::lp_norm_p(&u, cfg.p, &cfg);
        let lpstar = quadrature::lp_norm_p(&u, cfg.p_star, &cfg);
        let quotient = seminorm / lpstar.powf(cfg.p / cfg.p_star);
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            sci(eps),
            sci(seminorm),
            sci(lp_p),
            sci(lpstar),
            sci(quotient)
        ));
    }
    print!("{out}");
    Ok(())
}

fn run_verify(common: &Common, seed: u64) -> Result<bool, Error> {
    let (cfg, _) = load(common)?;
    let report = verify::run_all(&cfg, common.mesh, seed)?;
    print!("{}", report.render_table());
    Ok(report.all_passed())
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("NK_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprintln!("{e}");
            return ExitCode::from(1);
        }
    };
    let result: Result<bool, Error> = match &cli.command {
        Command::Solve {
            common,
            branch,
            lambda,
            critical,
            out,
        } => run_solve(common, branch, lambda, *critical, out).map(|_| true),
        Command::Fiber {
            common,
            samples,
            t_lo,
            t_hi,
        } => run_fiber(common, *samples, *t_lo, *t_hi).map(|_| true),
        Command::Thresholds { common } => run_thresholds(common).map(|_| true),
        Command::Sobolev { common } => run_sobolev(common).map(|_| true),
        Command::Extremal { common, eps_grid } => {
            run_extremal(common, eps_grid.as_deref()).map(|_| true)
        }
        Command::Verify { common, seed } => run_verify(common, *seed),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
