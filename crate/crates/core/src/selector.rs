//! Inverse gait selection over a precomputed sweep grid.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{FinMaterial, GaitParams};
use crate::fom::{fom, FomReport};
use crate::sweep::{point_report, SweepGrid};

#[derive(Debug, Error, PartialEq)]
pub enum SelectError {
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("query is for {query} but the grid was computed for {grid}")]
    MaterialMismatch {
        query: FinMaterial,
        grid: FinMaterial,
    },
    #[error("no gait within tolerance of {target} N; nearest achievable thrust is {nearest} N")]
    NoFeasibleGait { target: f64, nearest: f64 },
    #[error("grid has no evaluated points")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SelectionMode {
    MeetThrust { target: f64, tolerance: f64 },
    MaxThrust,
    MaxEfficiency,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionQuery {
    pub material: FinMaterial,
    pub mode: SelectionMode,
    pub velocity: f64,
    /// 1 ranks feasible gaits by efficiency alone, 0 by thrust error alone.
    pub efficiency_weight: f64,
}

impl SelectionQuery {
    pub fn validate(&self) -> Result<(), SelectError> {
        let bad = |m: String| Err(SelectError::InvalidQuery(m));
        if !(self.velocity.is_finite() && self.velocity >= 0.0) {
            return bad(format!(
                "velocity {} must be finite and non-negative",
                self.velocity
            ));
        }
        if !(0.0..=1.0).contains(&self.efficiency_weight) {
            return bad(format!(
                "efficiency weight {} is outside [0, 1]",
                self.efficiency_weight
            ));
        }
        if let SelectionMode::MeetThrust { target, tolerance } = self.mode {
            if !target.is_finite() {
                return bad(format!("thrust target {target} is not finite"));
            }
            if !(tolerance.is_finite() && tolerance > 0.0) {
                return bad(format!("tolerance {tolerance} must be positive"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub gait: GaitParams,
    pub report: FomReport,
    /// Ranking score; lower is better.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub query: SelectionQuery,
    pub selections: Vec<Selection>,
    pub models: Vec<String>,
    pub grid_hash: String,
}

struct Candidate {
    gait: GaitParams,
    thrust: f64,
    power: f64,
    eta: f64,
    score: f64,
}

fn rank_cmp(a: &Candidate, b: &Candidate) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then(a.power.total_cmp(&b.power))
        .then_with(|| a.gait.lex_cmp(&b.gait))
}

/// Scored candidates of the query, unsorted.
fn candidates(query: &SelectionQuery, grid: &SweepGrid) -> Result<Vec<Candidate>, SelectError> {
    query.validate()?;
    if query.material != grid.material {
        return Err(SelectError::MaterialMismatch {
            query: query.material,
            grid: grid.material,
        });
    }
    let mut all: Vec<Candidate> = grid
        .points()
        .filter_map(|(gait, v)| {
            let eta = fom(v.thrust, v.power, query.velocity).ok()?;
            Some(Candidate {
                gait,
                thrust: v.thrust,
                power: v.power,
                eta,
                score: 0.0,
            })
        })
        .collect();
    if all.is_empty() {
        return Err(SelectError::EmptyGrid);
    }
    match query.mode {
        SelectionMode::MaxEfficiency => all.iter_mut().for_each(|c| c.score = -c.eta),
        SelectionMode::MaxThrust => {
            // thrust first, efficiency breaks ties
            all.sort_by(|a, b| b.thrust.total_cmp(&a.thrust).then(b.eta.total_cmp(&a.eta)));
            let mut rank = 0.0;
            for i in 0..all.len() {
                if i > 0 && (all[i].thrust != all[i - 1].thrust || all[i].eta != all[i - 1].eta) {
                    rank = i as f64;
                }
                all[i].score = rank;
            }
        }
        SelectionMode::MeetThrust { target, tolerance } => {
            let eta_max = all.iter().map(|c| c.eta).fold(f64::NEG_INFINITY, f64::max);
            let w = query.efficiency_weight;
            let nearest = all
                .iter()
                .min_by(|a, b| {
                    (a.thrust - target)
                        .abs()
                        .total_cmp(&(b.thrust - target).abs())
                })
                .map(|c| c.thrust)
                .expect("non-empty");
            all.retain(|c| (c.thrust - target).abs() <= tolerance);
            if all.is_empty() {
                return Err(SelectError::NoFeasibleGait { target, nearest });
            }
            for c in &mut all {
                c.score = if w == 1.0 {
                    -c.eta
                } else {
                    let eta_norm = if eta_max > 0.0 { c.eta / eta_max } else { 0.0 };
                    (1.0 - w) * (c.thrust - target).abs() / tolerance - w * eta_norm
                };
            }
        }
    }
    Ok(all)
}

fn selection(c: &Candidate, velocity: f64) -> Selection {
    let v = crate::sweep::PointValues {
        thrust: c.thrust,
        power: c.power,
        eta: Some(c.eta),
    };
    Selection {
        gait: c.gait,
        report: point_report(&v, c.eta, velocity),
        score: c.score,
    }
}

/// The best gait for the query.
pub fn select_gait(query: &SelectionQuery, grid: &SweepGrid) -> Result<Selection, SelectError> {
    let all = candidates(query, grid)?;
    let best = all
        .iter()
        .min_by(|a, b| rank_cmp(a, b))
        .expect("candidates are non-empty");
    Ok(selection(best, query.velocity))
}

/// The `k` best gaits for the query, best first.
pub fn rank_gaits(
    query: &SelectionQuery,
    grid: &SweepGrid,
    k: usize,
) -> Result<Vec<Selection>, SelectError> {
    if k == 0 {
        return Err(SelectError::InvalidQuery("k must be positive".into()));
    }
    let mut all = candidates(query, grid)?;
    all.sort_by(rank_cmp);
    Ok(all
        .iter()
        .take(k)
        .map(|c| selection(c, query.velocity))
        .collect())
}

/// [`rank_gaits`] wrapped with provenance.
pub fn run_query(
    query: &SelectionQuery,
    grid: &SweepGrid,
    k: usize,
) -> Result<SelectionResult, SelectError> {
    Ok(SelectionResult {
        query: *query,
        selections: rank_gaits(query, grid, k)?,
        models: grid.models.clone(),
        grid_hash: grid.content_hash(),
    })
}
