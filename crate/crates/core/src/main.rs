//! Command-line front end: builds a `RunConfig` from flags or a JSON config
//! file and dispatches it to the runner. Exit codes: 0 converged/ok,
//! 2 non-converged, 1 error (with a JSON error record on stderr).

use clap::{Args, Parser, Subcommand};
use fracstrip::config::{Command as RunCommand, GridSpec, OutputSpec, RunConfig};
use fracstrip::minimize::{MinimizeConfig, MinimizeMode, StartKind};
use fracstrip::params::ProblemParams;
use fracstrip::runner;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "fracstrip", version, about = "Ground states of the defect NLS on a strip")]
struct Cli {
    /// JSON run configuration; flags are ignored when set.
    #[arg(long, global = true)]
    config: Option<String>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Maximum parallel worker runs for sweep verification.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[arg(long, global = true)]
    out_dir: Option<String>,
    #[command(subcommand)]
    command: Option<CliCommand>,
}

#[derive(Args, Clone)]
struct ProblemArgs {
    #[arg(long, default_value_t = 3.0)]
    p: f64,
    #[arg(long, default_value_t = -1.0)]
    gamma: f64,
    #[arg(long, default_value_t = 1.0)]
    omega: f64,
    /// Physical strip width (the 1/L^2 transverse weight after rescaling).
    #[arg(long = "L", default_value_t = 1.0)]
    l_width: f64,
    #[arg(long, default_value_t = 1.0)]
    mass: f64,
}

impl ProblemArgs {
    fn build(&self) -> ProblemParams {
        ProblemParams::new(self.p, self.gamma, self.omega, self.l_width, self.mass)
    }
}

#[derive(Args, Clone)]
struct GridArgs {
    /// Lengthwise truncation half-width X; 0 selects the decay-budget default.
    #[arg(long = "X", default_value_t = 0.0)]
    x_extent: f64,
    #[arg(long, default_value_t = 513)]
    nx: usize,
    #[arg(long, default_value_t = 9)]
    ny: usize,
}

impl GridArgs {
    fn build(&self, problem: &ProblemParams) -> GridSpec {
        let x = if self.x_extent > 0.0 {
            self.x_extent
        } else {
            fracstrip::StripGrid::default_extent(problem.omega, problem.gamma)
        };
        GridSpec { x_extent: x, nx: self.nx, ny: self.ny }
    }
}

#[derive(Args, Clone)]
struct MinimizeArgs {
    #[arg(long)]
    sym: bool,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 400_000)]
    max_iters: usize,
    /// Start: soliton | gaussian | random | <snapshot path>
    #[arg(long, default_value = "soliton")]
    start: String,
    /// Iteration-log stride (0 disables).
    #[arg(long, default_value_t = 1)]
    log_every: usize,
    /// Snapshot stem for the converged field.
    #[arg(long)]
    out: Option<String>,
    /// Iteration log CSV name.
    #[arg(long)]
    log: Option<String>,
}

impl MinimizeArgs {
    fn build(&self, mode: MinimizeMode) -> MinimizeConfig {
        let start = match self.start.as_str() {
            "soliton" => StartKind::SolitonExtension,
            "gaussian" => StartKind::GaussianBump { x0: 2.0, width: 1.5, amplitude: 1.0 },
            "random" => StartKind::Random { amplitude: 1.0 },
            path => StartKind::File { path: path.to_string() },
        };
        MinimizeConfig {
            mode,
            symmetric_x: self.sym,
            tol_grad: self.tol,
            max_iters: self.max_iters,
            start,
            log_every: self.log_every,
            ..MinimizeConfig::default()
        }
    }
}

#[derive(Subcommand, Clone)]
enum CliCommand {
    /// Closed-form 1D soliton table (omega, mass, energy, phi(0)) as CSV.
    Soliton1d {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 0.5)]
        omega_min: f64,
        #[arg(long, default_value_t = 2.0)]
        omega_max: f64,
        #[arg(long, default_value_t = 16)]
        n_omega: usize,
    },
    /// Constrained minimization (action ground state or energy ground state).
    Minimize {
        /// action | energy
        which: String,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[command(flatten)]
        minimize: MinimizeArgs,
    },
    /// Green's function machinery.
    Greens {
        #[command(subcommand)]
        sub: GreensCmd,
    },
    /// Width sweeps and thresholds.
    Shrink {
        #[command(subcommand)]
        sub: ShrinkCmd,
    },
    /// Re-evaluate a snapshot (functionals, Pohozaev, Green residual, decay).
    Verify {
        snapshot: String,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Subcommand, Clone)]
enum GreensCmd {
    /// Emit a (x, y, g) CSV slice of the kernel with source at (xi, eta).
    Probe {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 0.0)]
        xi: f64,
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        even_modes_only: bool,
    },
}

#[derive(Subcommand, Clone)]
enum ShrinkCmd {
    /// Energy sweep over widths at fixed normalized mass.
    Sweep {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "mass-per-length", default_value_t = 1.0)]
        mass_per_length: f64,
        #[arg(long = "L-min", default_value_t = 0.0625)]
        l_min: f64,
        #[arg(long = "L-max", default_value_t = 2.0)]
        l_max: f64,
        #[arg(long = "n-L", default_value_t = 6)]
        n_l: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 400_000)]
        max_iters: usize,
        #[arg(long)]
        verify_sentinels: bool,
        #[arg(long)]
        out: Option<String>,
    },
    /// Bisection estimate of the y-independence width threshold.
    Lstar {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "L-min", default_value_t = 0.25)]
        l_min: f64,
        #[arg(long = "L-max", default_value_t = 4.0)]
        l_max: f64,
        #[arg(long = "n-L", default_value_t = 5)]
        n_l: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 400_000)]
        max_iters: usize,
    },
    /// Closed-form upper bound for the onset of necessary y-dependence.
    Lstarstar {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long, default_value_t = 1.0)]
        mass: f64,
        #[arg(long)]
        optimize: bool,
    },
    /// Repulsive coupling threshold gamma* from the gamma = 0 minimizer.
    Gammastar {
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 400_000)]
        max_iters: usize,
    },
}

fn geometric_list(l_min: f64, l_max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![l_min];
    }
    let ratio = (l_max / l_min).powf(1.0 / (n - 1) as f64);
    (0..n).map(|k| l_min * ratio.powi(k as i32)).collect()
}

fn build_config(cli: &Cli) -> Result<RunConfig, fracstrip::Error> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        return fracstrip::config::parse_config(&text);
    }
    let command = cli
        .command
        .clone()
        .ok_or_else(|| fracstrip::Error::Config("no subcommand and no --config given".into()))?;
    let outputs = OutputSpec { out_dir: cli.out_dir.clone(), ..OutputSpec::default() };

    let (run_command, problem, grid, minimize) = match command {
        CliCommand::Soliton1d { problem, omega_min, omega_max, n_omega } => (
            RunCommand::Soliton1d { omega_min, omega_max, n_omega },
            problem.build(),
            GridSpec { x_extent: 16.0, nx: 65, ny: 5 },
            MinimizeConfig::default(),
        ),
        CliCommand::Minimize { which, problem, grid, minimize } => {
            let p = problem.build();
            let g = grid.build(&p);
            let (cmd, mode) = match which.as_str() {
                "action" => (RunCommand::MinimizeAction, MinimizeMode::NehariAction),
                "energy" => (RunCommand::MinimizeEnergy, MinimizeMode::MassEnergy),
                other => {
                    return Err(fracstrip::Error::Config(format!(
                        "unknown minimize target '{other}' (expected action|energy)"
                    )))
                }
            };
            let mut mcfg = minimize.build(mode);
            mcfg.seed = cli.seed;
            let mut out = outputs.clone();
            out.snapshot = minimize.out.clone();
            out.log = minimize.log.clone();
            return finishing(cmd, p, g, mcfg, out, cli);
        }
        CliCommand::Greens { sub } => match sub {
            GreensCmd::Probe { problem, grid, xi, eta, k_max, even_modes_only } => {
                let p = problem.build();
                let g = grid.build(&p);
                (
                    RunCommand::GreensProbe { xi, eta, k_max, even_modes_only },
                    p,
                    g,
                    MinimizeConfig::default(),
                )
            }
        },
        CliCommand::Shrink { sub } => match sub {
            ShrinkCmd::Sweep {
                problem,
                grid,
                mass_per_length,
                l_min,
                l_max,
                n_l,
                tol,
                max_iters,
                verify_sentinels,
                out: _,
            } => {
                let mut p = problem.build();
                p.mass = mass_per_length;
                let g = grid.build(&p);
                let mcfg = MinimizeConfig {
                    mode: MinimizeMode::MassEnergy,
                    tol_grad: tol,
                    max_iters,
                    log_every: 0,
                    ..MinimizeConfig::default()
                };
                (
                    RunCommand::ShrinkSweep {
                        l_list: geometric_list(l_min, l_max, n_l),
                        verify_sentinels,
                    },
                    p,
                    g,
                    mcfg,
                )
            }
            ShrinkCmd::Lstar { problem, grid, l_min, l_max, n_l, tol, max_iters } => {
                let p = problem.build();
                let g = grid.build(&p);
                let mcfg = MinimizeConfig {
                    mode: MinimizeMode::MassEnergy,
                    tol_grad: tol,
                    max_iters,
                    log_every: 0,
                    ..MinimizeConfig::default()
                };
                (
                    RunCommand::ShrinkLstar { l_list: geometric_list(l_min, l_max, n_l) },
                    p,
                    g,
                    mcfg,
                )
            }
            ShrinkCmd::Lstarstar { problem, mass, optimize } => (
                RunCommand::ShrinkLstarstar { mass, optimize },
                problem.build(),
                GridSpec { x_extent: 16.0, nx: 65, ny: 5 },
                MinimizeConfig::default(),
            ),
            ShrinkCmd::Gammastar { problem, grid, tol, max_iters } => {
                let p = problem.build();
                let g = grid.build(&p);
                let mcfg = MinimizeConfig {
                    tol_grad: tol,
                    max_iters,
                    log_every: 0,
                    ..MinimizeConfig::default()
                };
                (RunCommand::ShrinkGammastar, p, g, mcfg)
            }
        },
        CliCommand::Verify { snapshot, grid } => {
            let p = ProblemParams::new(3.0, -1.0, 1.0, 1.0, 1.0);
            let g = grid.build(&p);
            (RunCommand::Verify { snapshot }, p, g, MinimizeConfig::default())
        }
    };
    finishing(run_command, problem, grid, minimize, outputs, cli)
}

fn finishing(
    command: RunCommand,
    problem: ProblemParams,
    grid: GridSpec,
    minimize: MinimizeConfig,
    outputs: OutputSpec,
    cli: &Cli,
) -> Result<RunConfig, fracstrip::Error> {
    let cfg = RunConfig { command, problem, grid, minimize, outputs, seed: cli.seed, jobs: cli.jobs };
    // route through the strict validator so flag-built configs obey the same rules
    fracstrip::config::parse_config(&serde_json::to_string(&cfg)?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match build_config(&cli) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("{}", runner::error_record(&err));
            return ExitCode::from(1);
        }
    };
    match runner::run(&cfg) {
        Ok(report) => ExitCode::from(report.code as u8),
        Err(err) => {
            eprintln!("{}", runner::error_record(&err));
            ExitCode::from(1)
        }
    }
}
