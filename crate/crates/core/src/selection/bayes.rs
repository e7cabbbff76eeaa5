use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::gp::{expected_improvement, gp_update, GpState};
use super::{guarded, Evaluation, SearchBox, SelectionResult};
use crate::error::{Error, Result};
use crate::weights::WeightParams;

/// Nodes per axis of the normalized acquisition grid.
pub const ACQUISITION_GRID: usize = 101;
/// Grid maxima polished by coordinate search.
pub const REFINED_CANDIDATES: usize = 20;

const DUPLICATE_DISTANCE: f64 = 1e-9;

/// First `n` points of the design in unit-square coordinates: the four
/// corners, then the center, then seeded uniform points.
pub fn initial_design(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let fixed = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0], [0.5, 0.5]];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            if i < fixed.len() {
                fixed[i]
            } else {
                [rng.random(), rng.random()]
            }
        })
        .collect()
}

/// Gaussian-process Bayesian optimization of `objective` over `search`.
///
/// The history holds `n_init + n_iter` evaluations. Failed evaluations are
/// recorded with loss `+∞` and left out of the surrogate.
pub fn bayes_opt<F>(
    mut objective: F,
    search: SearchBox,
    n_init: usize,
    n_iter: usize,
    seed: u64,
) -> Result<SelectionResult>
where
    F: FnMut(WeightParams) -> Result<f64>,
{
    search.validate()?;
    if n_init < 2 {
        return Err(Error::InvalidParameter(format!(
            "initial design needs at least 2 points, got {n_init}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut history = Vec::with_capacity(n_init + n_iter);
    let mut visited: Vec<[f64; 2]> = Vec::with_capacity(n_init + n_iter);
    let mut gp = GpState::adaptive();

    let mut observe = |u: [f64; 2],
                       gp: &mut GpState,
                       history: &mut Vec<Evaluation>,
                       visited: &mut Vec<[f64; 2]>| {
        let wp = search.denormalize(u);
        let loss = guarded(&mut objective, wp);
        history.push(Evaluation {
            lambda: wp.lambda,
            alpha: wp.alpha,
            loss,
        });
        visited.push(u);
        if loss.is_finite() {
            // a factorization failure leaves the surrogate as it was
            if let Ok(next) = gp_update(gp, u, loss) {
                *gp = next;
            }
        }
    };

    for u in initial_design(n_init, rng.random()) {
        observe(u, &mut gp, &mut history, &mut visited);
    }
    for _ in 0..n_iter {
        let incumbent = history
            .iter()
            .map(|e| e.loss)
            .filter(|l| l.is_finite())
            .fold(f64::INFINITY, f64::min);
        let proposal = if gp.points().is_empty() {
            None
        } else {
            maximize_acquisition(&gp, incumbent)
        };
        let u = match proposal {
            Some((u, ei)) if ei > 0.0 && !is_visited(&visited, u) => u,
            _ => [rng.random(), rng.random()],
        };
        observe(u, &mut gp, &mut history, &mut visited);
    }
    SelectionResult::from_history(history)
}

fn is_visited(visited: &[[f64; 2]], u: [f64; 2]) -> bool {
    visited
        .iter()
        .any(|v| (v[0] - u[0]).hypot(v[1] - u[1]) < DUPLICATE_DISTANCE)
}

/// Exhaustive grid scan followed by coordinate search from the best nodes.
fn maximize_acquisition(gp: &GpState, incumbent: f64) -> Option<([f64; 2], f64)> {
    let step = 1.0 / (ACQUISITION_GRID - 1) as f64;
    let mut scored = Vec::with_capacity(ACQUISITION_GRID * ACQUISITION_GRID);
    for i in 0..ACQUISITION_GRID {
        for j in 0..ACQUISITION_GRID {
            let u = [i as f64 * step, j as f64 * step];
            scored.push((u, expected_improvement(gp, u, incumbent)));
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    scored
        .into_iter()
        .take(REFINED_CANDIDATES)
        .map(|(u, ei)| coordinate_search(gp, incumbent, u, ei, step))
        .max_by(|a, b| a.1.total_cmp(&b.1))
}

fn coordinate_search(
    gp: &GpState,
    incumbent: f64,
    mut u: [f64; 2],
    mut best: f64,
    mut step: f64,
) -> ([f64; 2], f64) {
    while step > 1e-6 {
        let mut moved = false;
        for d in 0..2 {
            for sign in [-1.0, 1.0] {
                let mut v = u;
                v[d] = (v[d] + sign * step).clamp(0.0, 1.0);
                let ei = expected_improvement(gp, v, incumbent);
                if ei > best {
                    best = ei;
                    u = v;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    (u, best)
}
