//! Linear reconstruction of the stationary distribution from departure
//! probabilities.
//!
//! Probability flow up across the cut between `k` and `k+1` comes from
//! arrivals, flow down comes from departures that leave `k` packets behind:
//!
//! ```text
//! sum_{i=0}^{M-1} pi[k-i] * r[i] = sum_w eta[w] * y[k][w],   0 <= k < K
//! ```
//!
//! With `r[0] > 0` this is a triangular system for `pi[0..K]`. The full-buffer
//! state has no departure cut above it and is fixed by normalization, so the
//! map is affine: `pi = G y + e_K`.

use super::{LpError, YVariables};
use crate::markov::StationaryDistribution;
use crate::model::SystemConfig;

/// `(K+1) x (W*K)` matrix plus constant offset mapping stacked `y` to `pi`.
#[derive(Debug, Clone, PartialEq)]
pub struct GMatrix {
    rows: usize,
    cols: usize,
    g: Vec<f64>,
    offset: Vec<f64>,
}

impl GMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Coefficients of `pi[k]` in terms of `y`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.g[k * self.cols..(k + 1) * self.cols]
    }

    /// Constant term of `pi[k]`.
    pub fn offset(&self, k: usize) -> f64 {
        self.offset[k]
    }

    /// Scales one row. Only used to inject faults when exercising the verifier.
    pub fn tamper(&mut self, k: usize, factor: f64) {
        let c = self.cols;
        self.g[k * c..(k + 1) * c].iter_mut().for_each(|v| *v *= factor);
    }
}

/// Builds `G` by forward substitution through the cut equations.
pub fn build_g(config: &SystemConfig) -> Result<GMatrix, LpError> {
    let arrival = config.arrival();
    let r0 = arrival.tail(0);
    if r0 <= 0.0 {
        return Err(LpError::DegenerateArrivals);
    }
    let cap = config.capacity();
    let states = config.states();
    let eta = config.channel().eta();
    let m = config.max_batch();
    let cols = cap * states;
    let rows = cap + 1;
    let mut g = vec![0.0; rows * cols];

    for k in 0..cap {
        let mut row = vec![0.0; cols];
        for (w, &e) in eta.iter().enumerate() {
            row[k * states + w] = e;
        }
        for i in 1..m.min(k + 1) {
            let ri = arrival.tail(i);
            let prev = &g[(k - i) * cols..(k - i + 1) * cols];
            for (x, p) in row.iter_mut().zip(prev) {
                *x -= ri * p;
            }
        }
        for (dst, x) in g[k * cols..(k + 1) * cols].iter_mut().zip(&row) {
            *dst = x / r0;
        }
    }
    // pi[K] = 1 - sum_{k<K} pi[k]
    for j in 0..cols {
        let s: f64 = (0..cap).map(|k| g[k * cols + j]).sum();
        g[cap * cols + j] = -s;
    }
    let mut offset = vec![0.0; rows];
    offset[cap] = 1.0;
    Ok(GMatrix {
        rows,
        cols,
        g,
        offset,
    })
}

/// `pi = G y + offset`, with round-off down to `-1e-10` clamped to zero.
pub fn pi_from_y(g: &GMatrix, y: &YVariables) -> Result<StationaryDistribution, LpError> {
    if y.as_slice().len() != g.cols {
        return Err(LpError::DimensionMismatch {
            expected: g.cols,
            got: y.as_slice().len(),
        });
    }
    let pi = (0..g.rows)
        .map(|k| {
            let v = g.offset[k]
                + g.row(k)
                    .iter()
                    .zip(y.as_slice())
                    .map(|(a, b)| a * b)
                    .sum::<f64>();
            if (-1e-10..0.0).contains(&v) {
                0.0
            } else {
                v
            }
        })
        .collect();
    Ok(StationaryDistribution::from_vec(pi))
}
