//! Config-driven experiment runs writing trace CSVs and SVG plots.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::svg::trace_svg;
use crate::atomic::write_atomic;
use crate::error::{GameError, Result};
use crate::game::PayoffMatrix;
use crate::games::{
    load_meta_game, make_blotto, make_random_zero_sum, make_rps, make_rpsx, mixture_engine, BlottoSpec,
    MixtureEngine, MixtureModelSpec,
};
use crate::trainer::{
    check_compatibility, run_diverse_fp_into, run_psro_into, Backend, IterationTrace, Population, TrainerConfig,
};

pub const TRACE_HEADER: &str = "iter,exploitability,diversity,ed,pop_size_p1,pop_size_p2,enlarged,wall_ms";

/// Which game an experiment runs on, in its `kind[:arg...]` string form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum GameSpec {
    Rps,
    Rpsx,
    Blotto { areas: usize, coins: usize },
    Mixture,
    Random(usize),
    Csv(PathBuf),
}

impl FromStr for GameSpec {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || GameError::Config(format!("unknown game {s:?}"));
        let count = |v: &str| v.parse::<usize>().map_err(|_| bad());
        if let Some(path) = s.strip_prefix("csv:") {
            if path.is_empty() {
                return Err(bad());
            }
            return Ok(GameSpec::Csv(PathBuf::from(path)));
        }
        let parts: Vec<&str> = s.split(':').collect();
        Ok(match parts.as_slice() {
            ["rps"] => GameSpec::Rps,
            ["rpsx"] => GameSpec::Rpsx,
            ["blotto"] => {
                let d = BlottoSpec::default();
                GameSpec::Blotto {
                    areas: d.areas,
                    coins: d.coins,
                }
            }
            ["blotto", a, c] => GameSpec::Blotto {
                areas: count(a)?,
                coins: count(c)?,
            },
            ["mixture"] => GameSpec::Mixture,
            ["random", n] => GameSpec::Random(count(n)?),
            _ => return Err(bad()),
        })
    }
}

impl TryFrom<String> for GameSpec {
    type Error = GameError;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<GameSpec> for String {
    fn from(g: GameSpec) -> String {
        match g {
            GameSpec::Rps => "rps".into(),
            GameSpec::Rpsx => "rpsx".into(),
            GameSpec::Blotto { areas, coins } => format!("blotto:{areas}:{coins}"),
            GameSpec::Mixture => "mixture".into(),
            GameSpec::Random(n) => format!("random:{n}"),
            GameSpec::Csv(p) => format!("csv:{}", p.display()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainerKind {
    Psro,
    Fp,
}

impl FromStr for TrainerKind {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "psro" => Ok(TrainerKind::Psro),
            "fp" => Ok(TrainerKind::Fp),
            _ => Err(GameError::Config(format!("unknown trainer {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureSettings {
    pub radius: f64,
    pub variance: f64,
    pub normalize_weights: bool,
}

impl Default for MixtureSettings {
    fn default() -> Self {
        MixtureSettings {
            radius: 5.0,
            variance: 1.0,
            normalize_weights: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameSpec,
    pub trainer: TrainerKind,
    /// Seed for `random:<n>` games.
    pub game_seed: u64,
    /// Replace a loaded CSV matrix by its antisymmetric part.
    pub antisymmetrize: bool,
    pub mixture: MixtureSettings,
    pub solver: TrainerConfig,
    pub output_path: PathBuf,
    pub emit_svg: bool,
    /// Record per-iteration wall time; off by default so traces are
    /// reproducible byte for byte.
    pub record_wall_time: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            game: GameSpec::Rps,
            trainer: TrainerKind::Psro,
            game_seed: 0,
            antisymmetrize: false,
            mixture: MixtureSettings::default(),
            solver: TrainerConfig::default(),
            output_path: PathBuf::from("trace.csv"),
            emit_svg: false,
            record_wall_time: false,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| GameError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| GameError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serialisable")
    }

    /// Where the SVG plot goes: the trace path with an `svg` extension.
    pub fn svg_path(&self) -> PathBuf {
        self.output_path.with_extension("svg")
    }
}

pub enum LoadedGame {
    Matrix(PayoffMatrix),
    Engine(MixtureEngine),
}

impl LoadedGame {
    pub fn backend(&self) -> Backend<'_> {
        match self {
            LoadedGame::Matrix(g) => Backend::Matrix(g),
            LoadedGame::Engine(e) => Backend::Engine(e),
        }
    }
}

/// Builds the configured game.
pub fn load_game(cfg: &ExperimentConfig) -> Result<LoadedGame> {
    let matrix = match &cfg.game {
        GameSpec::Rps => make_rps(),
        GameSpec::Rpsx => make_rpsx(),
        GameSpec::Blotto { areas, coins } => make_blotto(BlottoSpec {
            areas: *areas,
            coins: *coins,
        })
        .map_err(|e| GameError::Config(e.to_string()))?,
        GameSpec::Random(n) => make_random_zero_sum(*n, cfg.game_seed).map_err(|e| GameError::Config(e.to_string()))?,
        GameSpec::Csv(path) => {
            if !path.is_file() {
                return Err(GameError::Config(format!("payoff file {} does not exist", path.display())));
            }
            load_meta_game(path, cfg.antisymmetrize)?
        }
        GameSpec::Mixture => {
            let m = &cfg.mixture;
            let spec = MixtureModelSpec::ring(m.radius, m.variance, m.normalize_weights);
            let engine = mixture_engine(spec).map_err(|e| GameError::Config(e.to_string()))?;
            return Ok(LoadedGame::Engine(engine));
        }
    };
    Ok(LoadedGame::Matrix(matrix))
}

/// Checks everything that can be checked without training.
pub fn validate(cfg: &ExperimentConfig, game: &LoadedGame) -> Result<()> {
    cfg.solver.validate()?;
    match (cfg.trainer, game) {
        (TrainerKind::Fp, LoadedGame::Engine(_)) => {
            Err(GameError::Config("fictitious play needs a normal-form game".into()))
        }
        (TrainerKind::Fp, LoadedGame::Matrix(_)) => Ok(()),
        (TrainerKind::Psro, g) => check_compatibility(g.backend(), &cfg.solver, &initial_population(cfg, g)?),
    }
}

fn initial_population(cfg: &ExperimentConfig, game: &LoadedGame) -> Result<Population> {
    match game {
        LoadedGame::Matrix(g) => Population::initial_nfg(g, cfg.solver.seed),
        LoadedGame::Engine(e) => Population::initial_engine(e, cfg.solver.seed),
    }
}

pub struct ExperimentReport {
    pub traces: Vec<IterationTrace>,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

/// Runs the experiment and writes its outputs. Configuration problems are
/// reported before anything is written; if training fails part-way the
/// iterations completed so far are still written and the error returned.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let game = load_game(cfg)?;
    validate(cfg, &game)?;
    if let Some(dir) = cfg.output_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| GameError::io(dir, e))?;
    }
    let mut traces = Vec::with_capacity(cfg.solver.iterations);
    let outcome = match (&game, cfg.trainer) {
        (LoadedGame::Matrix(g), TrainerKind::Fp) => run_diverse_fp_into(g, &cfg.solver, &mut traces).map(|_| ()),
        (g, TrainerKind::Psro) => {
            run_psro_into(g.backend(), &cfg.solver, initial_population(cfg, g)?, &mut traces).map(|_| ())
        }
        (LoadedGame::Engine(_), TrainerKind::Fp) => unreachable!("rejected by validate"),
    };
    if !cfg.record_wall_time {
        traces.iter_mut().for_each(|t| t.wall_ms = 0);
    }
    write_atomic(&cfg.output_path, trace_csv(&traces).as_bytes())?;
    let svg_path = if cfg.emit_svg {
        let path = cfg.svg_path();
        write_atomic(&path, trace_svg(&traces).as_bytes())?;
        Some(path)
    } else {
        None
    };
    outcome?;
    Ok(ExperimentReport {
        traces,
        csv_path: cfg.output_path.clone(),
        svg_path,
    })
}

/// Process exit status for a failed run: 3 for numerical failures, 2 for
/// everything else.
pub fn exit_code(err: &GameError) -> i32 {
    match err {
        GameError::Convergence { .. } | GameError::NonConcave { .. } => 3,
        _ => 2,
    }
}

/// `x` with 12 significant digits, positional for moderate magnitudes and
/// scientific otherwise, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let (mantissa, _) = sci.split_at(sci.find('e').expect("exponent"));
        return format!("{}e{exp}", trim_zeros(mantissa));
    }
    let decimals = (11 - exp).max(0) as usize;
    trim_zeros(&format!("{x:.decimals$}")).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn trace_csv(traces: &[IterationTrace]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in traces {
        let enlarged = match t.enlarged {
            Some(true) => "true",
            Some(false) => "false",
            None => "",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            t.iteration,
            format_sig(t.exploitability),
            format_sig(t.diversity),
            format_sig(t.ed),
            t.population_sizes[0],
            t.population_sizes[1],
            enlarged,
            t.wall_ms
        );
    }
    out
}
