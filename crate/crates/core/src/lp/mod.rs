//! Delay-optimal scheduling as a linear program over departure probabilities.
//!
//! The decision variables are `y[k][w]`, the probability that a packet is sent
//! in channel state `w` and leaves `k` packets behind. Both the stationary
//! distribution (through [`GMatrix`]) and the average power are linear in `y`,
//! so minimizing delay under a power budget is an LP. Its optimal vertices
//! are threshold policies: in each channel state, transmit when the
//! post-arrival queue exceeds a threshold, randomize exactly at it.

mod gmatrix;
pub mod simplex;

use rayon::prelude::*;
use thiserror::Error;

pub use gmatrix::{build_g, pi_from_y, GMatrix};
pub use simplex::{Constraint, LinearProgram, LpSolution as SimplexSolution, LpStatus, Relation};

use crate::markov::{self, MarkovError, Policy, StationaryDistribution};
use crate::model::SystemConfig;

/// Bound below which a post-arrival state is treated as unreachable.
const UNREACHABLE: f64 = 1e-12;
/// Tolerance for classifying `y` as zero or saturated.
pub const STRUCTURE_TOLERANCE: f64 = 1e-7;
/// Objective perturbation used to break ties between optimal vertices.
const TIE_BREAK: f64 = 1e-9;
/// Lost packets are charged this many buffer lengths of delay.
pub const LOSS_PENALTY_FACTOR: f64 = 1000.0;
/// Number of budgets in the default tradeoff grid.
pub const DEFAULT_GRID: usize = 60;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("arrival distribution has no mass above zero")]
    DegenerateArrivals,
    #[error("budget {budget} is below the minimum power {min_power} needed to carry the offered load")]
    Infeasible { budget: f64, min_power: f64 },
    #[error("LP is unbounded")]
    Unbounded,
    #[error("optimal y is not threshold structured in channel state {state}")]
    NotThresholdStructured { state: usize },
    #[error(transparent)]
    Simplex(#[from] simplex::SimplexError),
    #[error(transparent)]
    Markov(#[from] MarkovError),
}

/// Departure probabilities `y[k][w]`, `k in 0..K`, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct YVariables {
    states: usize,
    y: Vec<f64>,
}

impl YVariables {
    pub fn new(states: usize, y: Vec<f64>) -> Self {
        Self { states, y }
    }

    #[inline]
    pub fn get(&self, k: usize, w: usize) -> f64 {
        self.y[k * self.states + w]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.y
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// `sum_{k,w} eta[w] y[k][w]`: packets sent per slot.
    pub fn departure_rate(&self, eta: &[f64]) -> f64 {
        self.y
            .iter()
            .enumerate()
            .map(|(j, v)| eta[j % self.states] * v)
            .sum()
    }
}

/// Probability that the post-arrival queue length is exactly `u` without overflow.
#[inline]
pub fn post_arrival(config: &SystemConfig, pi: &StationaryDistribution, u: usize) -> f64 {
    config
        .arrival()
        .theta()
        .iter()
        .enumerate()
        .map(|(m, th)| th * pi.at(u as isize - m as isize))
        .sum()
}

/// Maps a policy and its stationary distribution to departure probabilities.
pub fn substitute_y(
    config: &SystemConfig,
    policy: &Policy,
    pi: &StationaryDistribution,
) -> Result<YVariables, LpError> {
    let cap = config.capacity();
    let states = config.states();
    if policy.capacity() != cap || policy.states() != states {
        return Err(LpError::DimensionMismatch {
            expected: (cap + 1) * states,
            got: policy.as_slice().len(),
        });
    }
    if pi.len() != cap + 1 {
        return Err(LpError::DimensionMismatch {
            expected: cap + 1,
            got: pi.len(),
        });
    }
    let mut y = vec![0.0; cap * states];
    for k in 0..cap {
        let mass = post_arrival(config, pi, k + 1);
        for w in 0..states {
            y[k * states + w] = policy.get(k + 1, w) * mass;
        }
    }
    Ok(YVariables::new(states, y))
}

/// The assembled LP for one power budget.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub program: LinearProgram,
    pub budget: f64,
    /// Index of the first `y <= bound` row; there are `W*K` of them.
    pub bound_rows: usize,
    /// Index of the power row.
    pub power_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub y: YVariables,
    /// Mean delay in slots.
    pub delay: f64,
    /// Mean power per slot.
    pub power: f64,
    /// Packets lost per slot on overflow.
    pub loss: f64,
    /// Minimized objective: delay plus the loss penalty.
    pub objective: f64,
    pub pivots: usize,
}

/// Per-channel-state thresholds `K_w*` (in `1..=K+1`) and the transmit
/// probability applied exactly at the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPolicy {
    pub thresholds: Vec<usize>,
    pub frac: Vec<f64>,
}

impl ThresholdPolicy {
    /// Deterministic policy that transmits iff `u >= thresholds[w]`.
    pub fn pure(thresholds: Vec<usize>) -> Self {
        let frac = vec![1.0; thresholds.len()];
        Self { thresholds, frac }
    }
}

/// LP builder bound to one system, reusable across budgets.
#[derive(Debug, Clone)]
pub struct LpModel {
    config: SystemConfig,
    g: GMatrix,
    loss_penalty: f64,
}

impl LpModel {
    pub fn new(config: &SystemConfig) -> Result<Self, LpError> {
        Ok(Self {
            g: build_g(config)?,
            config: config.clone(),
            loss_penalty: default_loss_penalty(config),
        })
    }

    /// Delay charged per lost packet, in slots.
    pub fn with_loss_penalty(mut self, penalty: f64) -> Self {
        self.loss_penalty = penalty;
        self
    }

    pub fn loss_penalty(&self) -> f64 {
        self.loss_penalty
    }

    /// Uses a caller-supplied `G`, e.g. a deliberately corrupted one.
    pub fn with_g(config: &SystemConfig, g: GMatrix) -> Self {
        Self {
            loss_penalty: default_loss_penalty(config),
            config: config.clone(),
            g,
        }
    }

    pub fn config(&self) -> &SystemConfig {
        &self.config
    }

    pub fn g(&self) -> &GMatrix {
        &self.g
    }

    fn vars(&self) -> usize {
        self.config.capacity() * self.config.states()
    }

    /// Linear form and constant of the post-arrival mass at `u`.
    fn post_arrival_form(&self, u: usize) -> (Vec<f64>, f64) {
        let mut coeffs = vec![0.0; self.vars()];
        let mut constant = 0.0;
        for (m, &th) in self.config.arrival().theta().iter().enumerate() {
            if m > u || th == 0.0 {
                continue;
            }
            let j = u - m;
            for (c, g) in coeffs.iter_mut().zip(self.g.row(j)) {
                *c += th * g;
            }
            constant += th * self.g.offset(j);
        }
        (coeffs, constant)
    }

    /// Assembles the LP: minimize mean delay plus the overflow penalty subject
    /// to the power budget, `0 <= y[k][w] <= Pr{post-arrival = k+1}` and
    /// `pi >= 0`.
    ///
    /// Without the penalty a full buffer acts as free service, since dropped
    /// packets never count toward the queue, and optima at small `K` stop
    /// being threshold policies.
    pub fn build_lp(&self, budget: f64) -> LpProblem {
        let cap = self.config.capacity();
        let states = self.config.states();
        let n = self.vars();
        let rate = self.config.mean_rate();

        let mut objective = vec![0.0; n];
        let mut offset = 0.0;
        for k in 1..=cap {
            let weight = (k as f64 + self.loss_penalty * overflow(&self.config, k)) / rate;
            for (o, g) in objective.iter_mut().zip(self.g.row(k)) {
                *o += weight * g;
            }
            offset += weight * self.g.offset(k);
        }
        let mut program = LinearProgram::new(objective);
        program.offset = offset;

        for k in 0..=cap {
            let coeffs = self.g.row(k).iter().map(|v| -v).collect();
            program.push(Constraint::le(coeffs, self.g.offset(k)));
        }
        let bound_rows = program.constraints.len();
        for k in 0..cap {
            let (form, constant) = self.post_arrival_form(k + 1);
            for w in 0..states {
                let mut coeffs: Vec<f64> = form.iter().map(|v| -v).collect();
                coeffs[k * states + w] += 1.0;
                program.push(Constraint::le(coeffs, constant));
            }
        }
        let power_row = program.constraints.len();
        let ch = self.config.channel();
        let coeffs = (0..n)
            .map(|j| ch.eta()[j % states] * ch.power()[j % states])
            .collect();
        program.push(Constraint::le(coeffs, budget));

        LpProblem {
            program,
            budget,
            bound_rows,
            power_row,
        }
    }

    /// Solves an assembled problem and reports delay and power at the optimum.
    pub fn solve_lp(&self, problem: &LpProblem) -> Result<LpSolution, LpError> {
        let sol = simplex::solve(&problem.program)?;
        let states = self.config.states();
        let y = YVariables::new(states, sol.x);
        let (delay, loss, power) = match sol.status {
            LpStatus::Optimal => (
                self.delay_of(&y),
                self.loss_of(&y).max(0.0),
                problem.program.constraints[problem.power_row].activity(y.as_slice()),
            ),
            _ => (f64::NAN, f64::NAN, f64::NAN),
        };
        Ok(LpSolution {
            status: sol.status,
            y,
            delay,
            power,
            loss,
            objective: penalized_delay(&self.config, delay, loss, self.loss_penalty),
            pivots: sol.pivots,
        })
    }

    /// `sum_k weight(k) * pi[k]` with `pi` reconstructed from `y`.
    fn pi_moment(&self, y: &YVariables, weight: impl Fn(usize) -> f64) -> f64 {
        (0..=self.config.capacity())
            .map(|k| {
                let pk = self.g.offset(k)
                    + self
                        .g
                        .row(k)
                        .iter()
                        .zip(y.as_slice())
                        .map(|(a, b)| a * b)
                        .sum::<f64>();
                weight(k) * pk
            })
            .sum()
    }

    /// Mean delay implied by `y` through `G`.
    pub fn delay_of(&self, y: &YVariables) -> f64 {
        self.pi_moment(y, |k| k as f64) / self.config.mean_rate()
    }

    /// Overflow loss rate implied by `y` through `G`.
    pub fn loss_of(&self, y: &YVariables) -> f64 {
        self.pi_moment(y, |k| overflow(&self.config, k))
    }

    /// Solves for `budget` and recovers the threshold policy.
    ///
    /// Budgets below [`SystemConfig::min_sustainable_power`] are rejected:
    /// no policy can carry the offered load with less power.
    pub fn optimize(&self, budget: f64) -> Result<Optimum, LpError> {
        let min_power = self.config.min_sustainable_power();
        if budget.is_nan() || budget < min_power * (1.0 - 1e-12) {
            return Err(LpError::Infeasible { budget, min_power });
        }
        let problem = self.build_lp(budget);
        let solution = self.solve_lp(&problem)?;
        match solution.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(LpError::Infeasible { budget, min_power }),
            LpStatus::Unbounded => return Err(LpError::Unbounded),
        }
        let (solution, thresholds) = match extract_thresholds(&solution, &self.g, &self.config) {
            Ok(tp) => (solution, tp),
            Err(LpError::NotThresholdStructured { .. }) => {
                let mut perturbed = problem.clone();
                let states = self.config.states();
                for (j, c) in perturbed.program.objective.iter_mut().enumerate() {
                    *c += TIE_BREAK * (j / states) as f64 * (j % states + 1) as f64;
                }
                let retry = self.solve_lp(&perturbed)?;
                if retry.status != LpStatus::Optimal {
                    return Err(LpError::NotThresholdStructured { state: 0 });
                }
                let tp = extract_thresholds(&retry, &self.g, &self.config)?;
                (retry, tp)
            }
            Err(e) => return Err(e),
        };
        let policy = threshold_to_policy(&thresholds, &self.config)?;
        Ok(Optimum {
            budget,
            delay: solution.delay,
            power: solution.power,
            loss: solution.loss,
            objective: solution.objective,
            solution,
            thresholds,
            policy,
        })
    }
}

/// Result of [`LpModel::optimize`].
#[derive(Debug, Clone)]
pub struct Optimum {
    pub budget: f64,
    pub delay: f64,
    pub power: f64,
    pub loss: f64,
    pub objective: f64,
    pub solution: LpSolution,
    pub thresholds: ThresholdPolicy,
    pub policy: Policy,
}

/// Expected packets lost in a slot that starts with `k` queued.
fn overflow(config: &SystemConfig, k: usize) -> f64 {
    let cap = config.capacity();
    config
        .arrival()
        .theta()
        .iter()
        .enumerate()
        .filter(|(m, _)| k + m > cap)
        .map(|(m, th)| th * (k + m - cap) as f64)
        .sum()
}

/// Default delay charged per lost packet: `LOSS_PENALTY_FACTOR * K` slots.
pub fn default_loss_penalty(config: &SystemConfig) -> f64 {
    LOSS_PENALTY_FACTOR * config.capacity() as f64
}

/// Objective minimized by the LP: mean delay plus `penalty` slots for every
/// packet lost to overflow.
pub fn penalized_delay(config: &SystemConfig, delay: f64, loss: f64, penalty: f64) -> f64 {
    delay + penalty * loss / config.mean_rate()
}

/// Convenience wrapper: `LpModel::new(config)?.build_lp(budget)`.
pub fn build_lp(config: &SystemConfig, budget: f64) -> Result<LpProblem, LpError> {
    Ok(LpModel::new(config)?.build_lp(budget))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Cell {
    Free,
    Zero,
    Partial,
    Saturated,
}

/// Per-column classification of an optimal `y` against its bounds.
fn classify(sol: &LpSolution, g: &GMatrix, config: &SystemConfig) -> Result<Vec<Vec<(Cell, f64)>>, LpError> {
    let pi = pi_from_y(g, &sol.y)?;
    let cap = config.capacity();
    let states = config.states();
    let bounds: Vec<f64> = (1..=cap).map(|u| post_arrival(config, &pi, u)).collect();
    Ok((0..states)
        .map(|w| {
            (0..cap)
                .map(|k| {
                    let (y, b) = (sol.y.get(k, w), bounds[k]);
                    let cell = if b < STRUCTURE_TOLERANCE {
                        Cell::Free
                    } else if y <= STRUCTURE_TOLERANCE {
                        Cell::Zero
                    } else if y >= b - STRUCTURE_TOLERANCE {
                        Cell::Saturated
                    } else {
                        Cell::Partial
                    };
                    (cell, if b < UNREACHABLE { f64::NAN } else { y / b })
                })
                .collect()
        })
        .collect())
}

/// Number of entries strictly between zero and their bound, per channel state.
pub fn fractional_counts(
    sol: &LpSolution,
    g: &GMatrix,
    config: &SystemConfig,
) -> Result<Vec<usize>, LpError> {
    Ok(classify(sol, g, config)?
        .iter()
        .map(|col| col.iter().filter(|(c, _)| *c == Cell::Partial).count())
        .collect())
}

/// Reads the threshold structure off an optimal `y`.
///
/// Each channel column must look like zeros, at most one partial entry, then
/// saturated entries (unreachable entries are compatible with anything). The
/// partial entry, or the first saturated one, sits at `K_w* - 1`.
pub fn extract_thresholds(
    sol: &LpSolution,
    g: &GMatrix,
    config: &SystemConfig,
) -> Result<ThresholdPolicy, LpError> {
    let cap = config.capacity();
    let columns = classify(sol, g, config)?;
    let mut thresholds = Vec::with_capacity(columns.len());
    let mut frac = Vec::with_capacity(columns.len());
    for (w, col) in columns.iter().enumerate() {
        let bad = LpError::NotThresholdStructured { state: w };
        let last_zero = col.iter().rposition(|(c, _)| *c == Cell::Zero);
        let first_active = col
            .iter()
            .position(|(c, _)| matches!(c, Cell::Partial | Cell::Saturated));
        if let (Some(z), Some(a)) = (last_zero, first_active) {
            if z > a {
                return Err(bad);
            }
        }
        let partials: Vec<usize> = col
            .iter()
            .enumerate()
            .filter(|(_, (c, _))| *c == Cell::Partial)
            .map(|(k, _)| k)
            .collect();
        match partials.as_slice() {
            [] => {
                // First position after the last zero; saturated or unreachable.
                let k = last_zero.map_or(0, |z| z + 1);
                if k >= cap {
                    thresholds.push(cap + 1);
                    frac.push(0.0);
                } else {
                    thresholds.push(k + 1);
                    frac.push(1.0);
                }
            }
            [k] if Some(*k) == first_active => {
                thresholds.push(k + 1);
                frac.push(col[*k].1.clamp(0.0, 1.0));
            }
            _ => return Err(bad),
        }
    }
    Ok(ThresholdPolicy { thresholds, frac })
}

/// Expands a threshold policy into the full transmission-probability matrix.
pub fn threshold_to_policy(tp: &ThresholdPolicy, config: &SystemConfig) -> Result<Policy, LpError> {
    let states = config.states();
    if tp.thresholds.len() != states || tp.frac.len() != states {
        return Err(LpError::DimensionMismatch {
            expected: states,
            got: tp.thresholds.len().min(tp.frac.len()),
        });
    }
    Ok(Policy::from_fn(config.capacity(), states, |q, w| {
        let t = tp.thresholds[w];
        if q < t {
            0.0
        } else if q == t {
            tp.frac[w].clamp(0.0, 1.0)
        } else {
            1.0
        }
    })?)
}

/// One point of the delay-power tradeoff curve.
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffPoint {
    pub budget: f64,
    pub power: f64,
    pub delay: f64,
    pub loss: f64,
    pub objective: f64,
    pub thresholds: ThresholdPolicy,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepEntry {
    Point(TradeoffPoint),
    Infeasible { budget: f64 },
    /// The optimum exists but no threshold policy attains it; this happens
    /// at budgets pinned to the minimum sustainable power.
    Unstructured { budget: f64, error: String },
}

impl SweepEntry {
    pub fn budget(&self) -> f64 {
        match self {
            SweepEntry::Point(p) => p.budget,
            SweepEntry::Infeasible { budget } | SweepEntry::Unstructured { budget, .. } => *budget,
        }
    }

    pub fn point(&self) -> Option<&TradeoffPoint> {
        match self {
            SweepEntry::Point(p) => Some(p),
            _ => None,
        }
    }
}

/// Solves every budget (concurrently); entries come back in budget order.
pub fn sweep(config: &SystemConfig, budgets: &[f64]) -> Result<Vec<SweepEntry>, LpError> {
    sweep_with(&LpModel::new(config)?, budgets)
}

pub fn sweep_with(model: &LpModel, budgets: &[f64]) -> Result<Vec<SweepEntry>, LpError> {
    budgets
        .par_iter()
        .map(|&budget| match model.optimize(budget) {
            Ok(opt) => Ok(SweepEntry::Point(TradeoffPoint {
                budget,
                power: opt.power,
                delay: opt.delay,
                loss: opt.loss,
                objective: opt.objective,
                thresholds: opt.thresholds,
            })),
            Err(LpError::Infeasible { .. }) => Ok(SweepEntry::Infeasible { budget }),
            Err(e @ LpError::NotThresholdStructured { .. }) => Ok(SweepEntry::Unstructured {
                budget,
                error: e.to_string(),
            }),
            Err(e) => Err(e),
        })
        .collect()
}

/// Mean power of the transmit-whenever-possible policy.
pub fn greedy_power(config: &SystemConfig) -> Result<f64, LpError> {
    let g = Policy::greedy(config.capacity(), config.states());
    Ok(markov::evaluate_policy(config, &g)?.power)
}

/// `n` budgets log-spaced from the minimum sustainable power up to the
/// greedy policy's power, endpoints included.
pub fn default_budgets(config: &SystemConfig, n: usize) -> Result<Vec<f64>, LpError> {
    let lo = config.min_sustainable_power();
    let hi = greedy_power(config)?.max(lo);
    Ok(log_space(lo, hi, n))
}

pub fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let mut v: Vec<f64> = (0..n)
                .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
                .collect();
            v[0] = lo;
            v[n - 1] = hi;
            v
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    fn sol_from(y: Vec<f64>, states: usize) -> LpSolution {
        LpSolution {
            status: LpStatus::Optimal,
            y: YVariables::new(states, y),
            delay: 0.0,
            power: 0.0,
            loss: 0.0,
            objective: 0.0,
            pivots: 0,
        }
    }

    #[test]
    fn variable_and_bound_row_counts() {
        let cfg = validate(&[0.78, 0.14, 0.08], &[0.5, 0.5], &[1.0, 2.0], 6).unwrap();
        let p = build_lp(&cfg, 1.0).unwrap();
        assert_eq!(p.program.vars(), 12);
        assert_eq!(p.power_row - p.bound_rows, 12);
    }

    #[test]
    fn threshold_pattern_is_read_from_y() {
        // Single channel state, M = 1: pi[k] = y[k] / theta_1, so a y column
        // can be chosen freely and the bounds follow from it.
        let cfg = validate(&[0.5, 0.5], &[1.0], &[1.0], 6).unwrap();
        let g = build_g(&cfg).unwrap();
        // Stationary distribution of "transmit iff u >= 3, with prob 0.4 at 3".
        let tp = ThresholdPolicy {
            thresholds: vec![3],
            frac: vec![0.4],
        };
        let policy = threshold_to_policy(&tp, &cfg).unwrap();
        let ev = markov::evaluate_policy(&cfg, &policy).unwrap();
        let y = substitute_y(&cfg, &policy, &ev.pi).unwrap();
        let got = extract_thresholds(&sol_from(y.as_slice().to_vec(), 1), &g, &cfg).unwrap();
        assert_eq!(got.thresholds, vec![3]);
        assert!((got.frac[0] - 0.4).abs() < 1e-9);
    }

    #[test]
    fn saturated_column_means_always_transmit() {
        let cfg = validate(&[0.5, 0.3, 0.2], &[0.5, 0.5], &[1.0, 2.0], 5).unwrap();
        let g = build_g(&cfg).unwrap();
        let policy = Policy::greedy(5, 2);
        let ev = markov::evaluate_policy(&cfg, &policy).unwrap();
        let y = substitute_y(&cfg, &policy, &ev.pi).unwrap();
        let got = extract_thresholds(&sol_from(y.as_slice().to_vec(), 2), &g, &cfg).unwrap();
        assert_eq!(got.thresholds, vec![1, 1]);
        assert_eq!(got.frac, vec![1.0, 1.0]);
    }

    #[test]
    fn non_threshold_column_rejected() {
        let cfg = validate(&[0.5, 0.3, 0.2], &[1.0], &[1.0], 5).unwrap();
        let g = build_g(&cfg).unwrap();
        // randomizes at two queue lengths
        let policy = Policy::from_fn(5, 1, |q, _| if q <= 2 { 0.5 } else { 1.0 }).unwrap();
        let ev = markov::evaluate_policy(&cfg, &policy).unwrap();
        let y = substitute_y(&cfg, &policy, &ev.pi).unwrap();
        assert!(matches!(
            extract_thresholds(&sol_from(y.as_slice().to_vec(), 1), &g, &cfg),
            Err(LpError::NotThresholdStructured { state: 0 })
        ));
    }

    #[test]
    fn threshold_to_policy_edges() {
        let cfg = validate(&[0.5, 0.5], &[0.5, 0.5], &[1.0, 2.0], 4).unwrap();
        let never = ThresholdPolicy {
            thresholds: vec![5, 5],
            frac: vec![0.0, 0.0],
        };
        assert_eq!(threshold_to_policy(&never, &cfg).unwrap(), Policy::idle(4, 2));
        let always = ThresholdPolicy::pure(vec![1, 1]);
        assert_eq!(threshold_to_policy(&always, &cfg).unwrap(), Policy::greedy(4, 2));
        let p = threshold_to_policy(
            &ThresholdPolicy {
                thresholds: vec![2, 3],
                frac: vec![0.25, 0.5],
            },
            &cfg,
        )
        .unwrap();
        assert_eq!(p.get(0, 0), 0.0);
        assert_eq!(p.get(1, 0), 0.0);
        assert_eq!(p.get(2, 0), 0.25);
        assert_eq!(p.get(3, 0), 1.0);
        assert_eq!(p.get(2, 1), 0.0);
        assert_eq!(p.get(3, 1), 0.5);
        assert_eq!(p.get(4, 1), 1.0);
    }

    #[test]
    fn log_space_endpoints() {
        let v = log_space(0.01, 1.0, 3);
        assert_eq!(v[0], 0.01);
        assert!((v[1] - 0.1).abs() < 1e-15);
        assert_eq!(v[2], 1.0);
        assert_eq!(log_space(2.0, 3.0, 1), vec![2.0]);
    }

    #[test]
    fn zero_budget_infeasible() {
        let cfg = validate(&[0.7, 0.3], &[0.5, 0.5], &[1.0, 2.0], 5).unwrap();
        let model = LpModel::new(&cfg).unwrap();
        assert!(matches!(model.optimize(0.0), Err(LpError::Infeasible { .. })));
    }
}
