//! The JSON document emitted for a single solve.

use lrsdp::rounding::{round_bisection, round_cutnorm, round_maxcut};
use lrsdp::{SolveResult, Status};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::input::{Instance, Kind, Source};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rounding {
    /// Vertices on one side of the best cut found.
    Cut {
        value: f64,
        trials: usize,
        side: Vec<usize>,
    },
    CutNorm {
        value: f64,
        trials: usize,
        rows: Vec<usize>,
        cols: Vec<usize>,
    },
}

impl Rounding {
    pub fn value(&self) -> f64 {
        match self {
            Rounding::Cut { value, .. } | Rounding::CutNorm { value, .. } => *value,
        }
    }
}

/// Non-finite metrics (never evaluated, or a run stopped before its first
/// iteration) are written as `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: Kind,
    pub input: String,
    pub dimension: usize,
    pub constraints: usize,
    pub trace_bound: f64,
    pub seed: u64,
    pub status: Status,
    pub objective: f64,
    pub dual_bound: Option<f64>,
    pub suboptimality_bound: Option<f64>,
    pub eta: Option<f64>,
    pub omega: Option<f64>,
    pub xi: Option<f64>,
    pub rank: usize,
    pub outer_iterations: usize,
    pub wall_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rounding: Option<Rounding>,
    /// Recovered matrix, row major, for matrix completion.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub completion: Option<Vec<Vec<f64>>>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

fn members(flags: &[bool]) -> Vec<usize> {
    flags
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| i)
        .collect()
}

/// Best of `trials` hyperplane roundings, or `None` where rounding does
/// not apply.
pub fn round(inst: &Instance, res: &SolveResult, trials: usize, seed: u64) -> Result<Option<Rounding>> {
    if trials == 0 {
        return Ok(None);
    }
    Ok(match (&inst.source, inst.kind) {
        (Source::Graph(g), Kind::Maxcut) => {
            let cut = round_maxcut(&res.y, &g.laplacian(), trials, seed)?;
            Some(Rounding::Cut {
                value: cut.value,
                trials,
                side: members(&cut.side),
            })
        }
        (Source::Graph(g), Kind::Minbisect) => {
            // odd graphs were padded with an isolated vertex
            let n = g.num_vertices();
            let padded = g.clone().padded_to(res.y.rows());
            let cut = round_bisection(&res.y, &padded.laplacian(), trials, seed)?;
            Some(Rounding::Cut {
                value: cut.value,
                trials,
                side: members(&cut.side[..n]),
            })
        }
        (Source::Matrix(a), Kind::Cutnorm) => {
            let sol = round_cutnorm(&res.y, a, trials, seed)?;
            Some(Rounding::CutNorm {
                value: sol.value,
                trials,
                rows: members(&sol.rows),
                cols: members(&sol.cols),
            })
        }
        _ => None,
    })
}

fn completion(inst: &Instance, res: &SolveResult) -> Option<Vec<Vec<f64>>> {
    let Source::Completion { rows, cols } = inst.source else {
        return None;
    };
    Some(
        (0..rows)
            .map(|i| (0..cols).map(|j| res.y.row_dot(i, rows + j)).collect())
            .collect(),
    )
}

impl SolveReport {
    pub fn new(
        inst: &Instance,
        input: &str,
        seed: u64,
        res: &SolveResult,
        rounding: Option<Rounding>,
    ) -> Self {
        let p = &inst.problem;
        SolveReport {
            problem: inst.kind,
            input: input.to_string(),
            dimension: p.dim(),
            constraints: p.num_constraints(),
            trace_bound: p.trace_bound(),
            seed,
            status: res.status,
            objective: res.objective,
            dual_bound: finite(res.dual_bound),
            suboptimality_bound: finite(res.suboptimality_bound),
            eta: finite(res.eta),
            omega: finite(res.omega),
            xi: finite(res.xi),
            rank: res.rank,
            outer_iterations: res.outer_iterations,
            wall_seconds: res.wall_seconds,
            rounding,
            completion: completion(inst, res),
        }
    }
}
