//! Experiment driver, gamescape geometry and scoring.

mod experiment;
mod hull;
mod svg;

pub use experiment::{
    exit_code, format_sig, load_game, run_experiment, trace_csv, validate, ExperimentConfig, ExperimentReport, GameSpec,
    LoadedGame, MixtureSettings, TrainerKind, TRACE_HEADER,
};
pub use hull::{hull_contains, hull_distance, verify_enlargement, HULL_TOL};
pub use svg::trace_svg;

use crate::error::{GameError, Result};
use crate::game::PayoffMatrix;
use crate::meta::sscc_members;

/// Fraction of sink-component strategies that appear in `found`.
pub fn pcs_score(found: &[usize], m: &PayoffMatrix) -> Result<f64> {
    if let Some(&bad) = found.iter().find(|&&i| i >= m.rows()) {
        return Err(GameError::Index {
            index: bad,
            size: m.rows(),
        });
    }
    let members = sscc_members(m);
    if members.is_empty() {
        return Ok(1.0);
    }
    let hit = members.iter().filter(|s| found.contains(s)).count();
    Ok(hit as f64 / members.len() as f64)
}
