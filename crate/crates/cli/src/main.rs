//! `tubecert`: certify networks of constrained subsystems, dump their RPI
//! sets and simulate them in closed loop.
//!
//! Exit codes: 0 success or certified, 1 negative analysis result, 2 input
//! error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tubecert::setcalc::plot::{self, Layer, Style};
use tubecert::setcalc::{contains, ConvexSet};
use tubecert::tmpc::{build_controllers, collect_tubes, sample_initial_state, simulate, DEFAULT_HORIZON};
use tubecert::tubes::{certify, square_box_pi_exists, Certification};
use tubecert::{Conclusion, Error, Mode, Scenario, TubeOptions};

#[derive(Parser)]
#[command(name = "tubecert", version, about = "Tube-based stability certificates for networked systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the local tubes and decide the network certificate.
    Certify(CertifyArgs),
    /// Write vertex dumps of every X_i and Z_i.
    Rpi(RpiArgs),
    /// Closed-loop simulation of the coupled plant.
    Simulate(SimulateArgs),
    /// Symmetric-box PI test for networks of scalar subsystems.
    Squarepi(ScenarioArgs),
}

#[derive(Args)]
struct ScenarioArgs {
    /// Builtin scenario name or path to a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Use LQR gains from the scenario weights instead of attached gains.
    #[arg(long)]
    lqr: bool,
}

#[derive(Args)]
struct TubeArgs {
    /// RPI outer-approximation tolerance.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Containment tolerance.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Args)]
struct CertifyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tube: TubeArgs,
    /// Output directory for the report files.
    #[arg(long, default_value = "tubecert-out")]
    out: PathBuf,
}

#[derive(Args)]
struct RpiArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tube: TubeArgs,
    #[arg(long, default_value = "tubecert-out")]
    out: PathBuf,
    /// Also render one SVG per subsystem.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[command(flatten)]
    tube: TubeArgs,
    #[arg(long, default_value = "tubecert-out")]
    out: PathBuf,
    #[arg(long, default_value_t = Mode::Tmpc)]
    mode: Mode,
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    #[arg(short = 'T', long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Input(String),
    Analysis(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Dimension { .. }
            | Error::Unbounded(_)
            | Error::InvalidSet(_)
            | Error::Unsupported(_)
            | Error::Network(_)
            | Error::Scenario(_)
            | Error::Json(_)
            | Error::Io(_) => Failure::Input(e.to_string()),
            _ => Failure::Analysis(e.to_string()),
        }
    }
}

type CmdResult = Result<bool, Failure>;

fn load(args: &ScenarioArgs) -> Result<(Scenario, Vec<DMatrix<f64>>), Failure> {
    let path = Path::new(&args.scenario);
    let sc = if path.is_file() {
        Scenario::from_file(path)?
    } else {
        tubecert::netmodel::builtin_scenario(&args.scenario).map_err(|_| {
            Failure::Input(format!(
                "unknown scenario '{}': not a file and not one of {}",
                args.scenario,
                tubecert::netmodel::builtin_names().join(", ")
            ))
        })?
    };
    let gains = if args.lqr { sc.lqr_gains()? } else { sc.gains()? };
    Ok((sc, gains))
}

fn options(t: &TubeArgs) -> Result<TubeOptions, Failure> {
    if !(t.eps > 0.0) || !(t.tol >= 0.0) {
        return Err(Failure::Input("--eps must be positive and --tol non-negative".into()));
    }
    Ok(TubeOptions {
        eps: t.eps,
        tol: t.tol,
        ..TubeOptions::default()
    })
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<(), Failure> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(Error::from)?;
    println!("wrote {}", path.display());
    Ok(())
}

fn run_certify(a: &CertifyArgs) -> CmdResult {
    let (sc, gains) = load(&a.scenario)?;
    let cert = certify(&sc.name, &sc.network, &gains, &options(&a.tube)?)?;
    let report = &cert.report;
    print!("{}", report.to_text());
    write(&a.out, &format!("{}.certificate.json", sc.name), &(report.to_json()? + "\n"))?;
    write(&a.out, &format!("{}.certificate.txt", sc.name), &report.to_text())?;
    Ok(report.conclusion == Conclusion::Certified)
}

fn tube_layers(cert: &Certification, sc: &Scenario, id: usize) -> Result<Vec<Layer>, Failure> {
    let s = sc.network.subsystem(id)?;
    let mut layers = vec![Layer {
        name: format!("X{id}"),
        vertices: ConvexSet::hpolytope(s.x.clone()).vertices_2d(128)?,
        style: Style::Hatched,
    }];
    if let Some(t) = &cert.tubes[id - 1] {
        layers.push(Layer {
            name: format!("Z{id}"),
            vertices: t.z.vertices_2d(128)?,
            style: Style::Filled,
        });
    }
    Ok(layers)
}

fn run_rpi(a: &RpiArgs) -> CmdResult {
    let (sc, gains) = load(&a.scenario)?;
    let cert = certify(&sc.name, &sc.network, &gains, &options(&a.tube)?)?;
    let mut all_inside = true;
    let mut csv_layers = Vec::new();
    for s in sc.network.subsystems() {
        let rep = &cert.report.subsystems[s.id - 1];
        match &cert.tubes[s.id - 1] {
            Some(t) => {
                let c = contains(&s.x, &t.z, a.tube.tol)?;
                all_inside &= c.holds;
                let bounds: Vec<String> = rep
                    .z_bounds
                    .iter()
                    .flatten()
                    .map(|[lo, hi]| format!("[{lo:.4}, {hi:.4}]"))
                    .collect();
                println!(
                    "subsystem {}: s = {}, alpha = {:.2e}, Z bounds {}, Z in X: {} (margin {:.4})",
                    s.id,
                    t.s,
                    t.alpha,
                    bounds.join(" x "),
                    if c.holds { "yes" } else { "no" },
                    c.margin
                );
            }
            None => {
                all_inside = false;
                println!(
                    "subsystem {}: no RPI set ({})",
                    s.id,
                    rep.error.as_deref().unwrap_or("unknown error")
                );
            }
        }
        if s.nx() > 2 {
            println!("subsystem {}: state dimension {} is not drawn", s.id, s.nx());
            continue;
        }
        let layers = tube_layers(&cert, &sc, s.id)?;
        if a.svg {
            write(&a.out, &format!("{}.rpi.{}.svg", sc.name, s.id), &plot::svg(&layers))?;
        }
        csv_layers.extend(layers);
    }
    write(&a.out, &format!("{}.rpi.csv", sc.name), &plot::vertices_csv(&csv_layers))?;
    Ok(all_inside)
}

fn run_simulate(a: &SimulateArgs) -> CmdResult {
    if a.steps == 0 || a.horizon == 0 {
        return Err(Failure::Input("--steps and --horizon must be at least 1".into()));
    }
    let (sc, gains) = load(&a.scenario)?;
    let cert = certify(&sc.name, &sc.network, &gains, &options(&a.tube)?)?;
    if cert.report.conclusion != Conclusion::Certified {
        eprintln!("warning: {} is not certified; constraints may be violated", sc.name);
    }
    let tubes = collect_tubes(&cert.tubes)?;
    let ctl = build_controllers(&sc.network, &tubes, a.mode, a.horizon, &sc.lqr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let x0 = sample_initial_state(&mut rng, &sc.network, &ctl, a.mode)?;
    let trace = simulate(&sc.network, &ctl, a.mode, &x0, a.steps)?;
    let summary = trace.summary(&sc.name, a.seed, a.steps, a.horizon);
    let stem = format!("{}.{}.seed{}", sc.name, a.mode, a.seed);
    write(&a.out, &format!("{stem}.csv"), &trace.to_csv())?;
    let json = serde_json::to_string_pretty(&summary).map_err(Error::from)?;
    write(&a.out, &format!("{stem}.summary.json"), &(json + "\n"))?;
    let ok = summary.halted.is_none() && summary.all_in_tube && summary.all_in_x && summary.all_in_u;
    println!(
        "{} steps, in tube: {}, in X: {}, in U: {}{}",
        summary.steps_completed,
        summary.all_in_tube,
        summary.all_in_x,
        summary.all_in_u,
        summary.halted.as_deref().map(|h| format!(", halted: {h}")).unwrap_or_default()
    );
    Ok(ok)
}

fn run_squarepi(a: &ScenarioArgs) -> CmdResult {
    let (sc, gains) = load(a)?;
    let f = sc.network.closed_loop(&gains)?;
    let dims: Vec<usize> = sc.network.subsystems().iter().map(|s| s.nx()).collect();
    let res = square_box_pi_exists(&f, &dims)?;
    println!(
        "square box PI set: {}",
        if res.exists { "FOUND" } else { "NOT FOUND" }
    );
    println!("rho(|F|) = {:.6}", res.rho_abs);
    if let Some(h) = &res.half_widths {
        let hw: Vec<String> = h.iter().map(|v| format!("{v:.6}")).collect();
        println!("half-widths: {}", hw.join(", "));
    }
    Ok(res.exists)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Certify(a) => run_certify(a),
        Command::Rpi(a) => run_rpi(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Squarepi(a) => run_squarepi(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Analysis(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
