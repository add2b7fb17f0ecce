use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;

use gamescape::diversity::{effective_diversity, row_diversity};
use gamescape::games::{load_meta_game, write_payoff_csv};
use gamescape::harness::{exit_code, format_sig, load_game, run_experiment, ExperimentConfig, GameSpec, LoadedGame, TrainerKind};
use gamescape::meta::MetaSolver;
use gamescape::trainer::{OracleKind, TauSchedule};
use gamescape::{exploitability, GameError, JointProfile, MixedStrategy, PayoffMatrix, Result};

#[derive(Parser)]
#[command(name = "gamescape", version, about = "Diversity-aware population solvers for two-player games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write its trace CSV.
    Run(RunArgs),
    /// Write a game's payoff matrix as CSV.
    GenGame {
        #[arg(long)]
        game: GameSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a profile on a payoff matrix.
    Eval {
        #[arg(long)]
        payoff: PathBuf,
        /// One line per player; a single line is used for both.
        #[arg(long)]
        profile: PathBuf,
        #[arg(long, value_enum)]
        metric: Metric,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// TOML experiment file; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    game: Option<GameSpec>,
    #[arg(long)]
    trainer: Option<TrainerKind>,
    #[arg(long)]
    solver: Option<MetaSolver>,
    #[arg(long)]
    oracle: Option<OracleKind>,
    /// `0.5`, `harmonic:1` or `geometric:1:0.9`.
    #[arg(long)]
    tau: Option<TauSchedule>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write an SVG plot next to the trace.
    #[arg(long)]
    svg: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Exploitability,
    Diversity,
    Ed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::GenGame { game, seed, out } => gen_game(game, seed, &out),
        Command::Eval {
            payoff,
            profile,
            metric,
        } => eval(&payoff, &profile, metric),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(g) = args.game {
        cfg.game = g;
    }
    if let Some(t) = args.trainer {
        cfg.trainer = t;
    }
    if let Some(s) = args.solver {
        cfg.solver.meta_solver = s;
    }
    if let Some(o) = args.oracle {
        cfg.solver.oracle = o;
    }
    if let Some(t) = args.tau {
        cfg.solver.tau = t;
    }
    if let Some(n) = args.iterations {
        cfg.solver.iterations = n;
    }
    if let Some(s) = args.seed {
        cfg.solver.seed = s;
        cfg.game_seed = s;
    }
    if let Some(out) = args.out {
        cfg.output_path = out;
    }
    cfg.emit_svg |= args.svg;
    let report = run_experiment(&cfg)?;
    let last = report.traces.last();
    println!(
        "{} iterations written to {}; final exploitability {}",
        report.traces.len(),
        report.csv_path.display(),
        last.map_or("n/a".into(), |t| format_sig(t.exploitability))
    );
    if let Some(svg) = report.svg_path {
        println!("plot written to {}", svg.display());
    }
    Ok(())
}

fn gen_game(game: GameSpec, seed: u64, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig {
        game,
        game_seed: seed,
        ..ExperimentConfig::default()
    };
    match load_game(&cfg)? {
        LoadedGame::Matrix(g) => write_payoff_csv(&g, out),
        LoadedGame::Engine(_) => Err(GameError::Config("the mixture game has no payoff matrix".into())),
    }
}

fn read_profile(path: &Path, g: &PayoffMatrix) -> Result<JointProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| GameError::Io {
        path: path.into(),
        source: e,
    })?;
    let mut lines = Vec::new();
    for (k, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let probs = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| GameError::Parse {
                line: k + 1,
                message: e.to_string(),
            })?;
        lines.push(MixedStrategy::new(probs)?);
    }
    let (pi1, pi2) = match lines.len() {
        1 => (lines[0].clone(), lines[0].clone()),
        2 => (lines[0].clone(), lines[1].clone()),
        n => {
            return Err(GameError::Parse {
                line: n,
                message: "expected one or two strategy lines".into(),
            })
        }
    };
    if pi1.len() != g.rows() || pi2.len() != g.cols() {
        return Err(GameError::Shape(format!(
            "profile sizes {}x{} do not match a {}x{} game",
            pi1.len(),
            pi2.len(),
            g.rows(),
            g.cols()
        )));
    }
    Ok(JointProfile::new(pi1, pi2))
}

fn eval(payoff: &Path, profile: &Path, metric: Metric) -> Result<()> {
    let g = load_meta_game(payoff, false)?;
    let p = read_profile(profile, &g)?;
    let value = match metric {
        Metric::Exploitability => exploitability(&g, &p)?,
        Metric::Ed => effective_diversity(&g, &p)?,
        Metric::Diversity => {
            // payoff rows of player one's support
            let support: Vec<usize> = (0..g.rows()).filter(|&i| p.pi1.probs()[i] > 0.0).collect();
            let rows = DMatrix::from_fn(support.len(), g.cols(), |r, j| g.get(support[r], j));
            row_diversity(&rows)
        }
    };
    println!("{}", format_sig(value));
    Ok(())
}
