//! Data augmentation for masked cells: repeated systematic-scan conditional
//! draws, combined per cell into a single working value for the rest of the
//! sweep.

use crate::draws::draw_conditional;
use crate::error::Result;
use crate::types::NodeType;

use super::state::ChainState;

pub(crate) fn impute_missing(state: &mut ChainState) -> Result<()> {
    let n_cells = state.missing_cells.len();
    let passes = state.cfg.m_imputations;
    let mut snapshots: Vec<Vec<f64>> = Vec::with_capacity(passes);
    let mut scratch: Vec<f64> = Vec::new();

    for _ in 0..passes {
        let mut snap = Vec::with_capacity(n_cells);
        for idx in 0..n_cells {
            let (i, s) = state.missing_cells[idx];
            let mut c_std = 0.0;
            for t in 0..state.p {
                if t != s {
                    c_std += state.edges.beta(t, s) * state.f_std[(i, t)];
                }
            }
            let c_raw = c_std / state.col_sd[s];
            let x = draw_conditional(
                state.types[s],
                &state.thetas[s],
                c_raw,
                state.cfg.b_trunc,
                &state.grid,
                &mut scratch,
                &mut state.rng,
            );
            state.set_cell(i, s, x);
            snap.push(x);
        }
        snapshots.push(snap);
    }

    for idx in 0..n_cells {
        let (i, s) = state.missing_cells[idx];
        let draws: Vec<f64> = snapshots.iter().map(|snap| snap[idx]).collect();
        let combined = combine_draws(state.types[s], &draws);
        state.set_cell(i, s, combined);
    }
    Ok(())
}

/// Pools repeated conditional draws into one working value: mean for
/// continuous, rounded mean for counts, mode (ties to the lowest level) for
/// categorical.
fn combine_draws(ty: NodeType, draws: &[f64]) -> f64 {
    let mean = draws.iter().sum::<f64>() / draws.len() as f64;
    match ty {
        NodeType::Continuous => mean,
        NodeType::Count | NodeType::ZeroInflatedCount => mean.round(),
        NodeType::Categorical(k) => {
            let mut counts = vec![0usize; k];
            for x in draws {
                counts[*x as usize] += 1;
            }
            let best = counts.iter().max().copied().unwrap_or(0);
            counts.iter().position(|c| *c == best).unwrap_or(0) as f64
        }
    }
}
