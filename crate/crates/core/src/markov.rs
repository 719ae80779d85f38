//! Queue-length Markov chain induced by a probabilistic scheduling policy.
//!
//! Within a slot the buffer first receives the arrival batch, then the
//! scheduler looks at the post-arrival length `u` and the channel state `w`
//! and sends one packet with probability `f[u][w]`. A batch that does not fit
//! fills the buffer to `K`, the excess is dropped and nothing is sent in that
//! slot.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::SystemConfig;

/// Stationary entries above this (negative) value are treated as round-off.
const CLAMP_TOLERANCE: f64 = -1e-12;
const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Stationary mass in the full-buffer state above which a warning is logged.
const OVERFLOW_WARNING: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MarkovError {
    #[error("policy is {got_rows}x{got_cols}, expected {rows}x{cols}")]
    DimensionMismatch {
        rows: usize,
        cols: usize,
        got_rows: usize,
        got_cols: usize,
    },
    #[error("f[{q}][{w}] = {value} is not a probability")]
    InvalidProbability { q: usize, w: usize, value: f64 },
    #[error("f[0][{w}] must be zero (empty buffer)")]
    TransmitOnEmpty { w: usize },
    #[error("stationary distribution is not unique: {classes} closed classes reachable from the empty buffer")]
    SingularSystem { classes: usize },
    #[error("stationary solve failed: {0}")]
    Numerical(String),
    #[error("index ({k}, {w}) out of range")]
    IndexOutOfRange { k: usize, w: usize },
    #[error("mean arrival rate is zero")]
    ZeroArrivalRate,
}

/// Transmission probabilities indexed by post-arrival queue length `0..=K` and
/// channel state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    capacity: usize,
    states: usize,
    f: Vec<f64>,
}

impl Policy {
    /// Builds a policy from a row-major `(K+1) x W` matrix.
    pub fn new(capacity: usize, states: usize, f: Vec<f64>) -> Result<Self, MarkovError> {
        if f.len() != (capacity + 1) * states {
            return Err(MarkovError::DimensionMismatch {
                rows: capacity + 1,
                cols: states,
                got_rows: f.len() / states.max(1),
                got_cols: states,
            });
        }
        for (i, &value) in f.iter().enumerate() {
            let (q, w) = (i / states, i % states);
            if !(0.0..=1.0).contains(&value) || value.is_nan() {
                return Err(MarkovError::InvalidProbability { q, w, value });
            }
            if q == 0 && value != 0.0 {
                return Err(MarkovError::TransmitOnEmpty { w });
            }
        }
        Ok(Self {
            capacity,
            states,
            f,
        })
    }

    /// Builds a policy from a function of `(q, w)`; row `q = 0` is forced to zero.
    pub fn from_fn(
        capacity: usize,
        states: usize,
        mut prob: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self, MarkovError> {
        let mut f = vec![0.0; (capacity + 1) * states];
        for q in 1..=capacity {
            for w in 0..states {
                f[q * states + w] = prob(q, w);
            }
        }
        Self::new(capacity, states, f)
    }

    /// Transmit whenever the buffer is non-empty.
    pub fn greedy(capacity: usize, states: usize) -> Self {
        Self::from_fn(capacity, states, |_, _| 1.0).expect("constant policy is valid")
    }

    /// Never transmit.
    pub fn idle(capacity: usize, states: usize) -> Self {
        Self::from_fn(capacity, states, |_, _| 0.0).expect("constant policy is valid")
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn states(&self) -> usize {
        self.states
    }

    /// `f[q][w]`, zero for post-arrival lengths beyond the buffer.
    #[inline]
    pub fn get(&self, q: usize, w: usize) -> f64 {
        if q > self.capacity {
            0.0
        } else {
            self.f[q * self.states + w]
        }
    }

    pub fn set(&mut self, q: usize, w: usize, value: f64) -> Result<(), MarkovError> {
        if q > self.capacity || w >= self.states {
            return Err(MarkovError::IndexOutOfRange { k: q, w });
        }
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(MarkovError::InvalidProbability { q, w, value });
        }
        if q == 0 && value != 0.0 {
            return Err(MarkovError::TransmitOnEmpty { w });
        }
        self.f[q * self.states + w] = value;
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.f
    }

    /// Checks the policy dimensions against `config`.
    pub fn validate_for(&self, config: &SystemConfig) -> Result<(), MarkovError> {
        if self.capacity != config.capacity() || self.states != config.states() {
            return Err(MarkovError::DimensionMismatch {
                rows: config.capacity() + 1,
                cols: config.states(),
                got_rows: self.capacity + 1,
                got_cols: self.states,
            });
        }
        Ok(())
    }

    /// Channel-averaged transmit probability at post-arrival length `q`.
    fn mean_transmit(&self, config: &SystemConfig, q: usize) -> f64 {
        config
            .channel()
            .eta()
            .iter()
            .enumerate()
            .map(|(w, e)| e * self.get(q, w))
            .sum()
    }
}

/// One-step transition probabilities, stored row-by-source:
/// `get(k, l) = Pr{q[n] = l | q[n-1] = k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    dim: usize,
    tau: Vec<f64>,
}

impl TransitionMatrix {
    /// Wraps a row-stochastic matrix given row-major.
    pub fn from_rows(dim: usize, tau: Vec<f64>) -> Result<Self, MarkovError> {
        if tau.len() != dim * dim {
            return Err(MarkovError::DimensionMismatch {
                rows: dim,
                cols: dim,
                got_rows: tau.len() / dim.max(1),
                got_cols: dim,
            });
        }
        Ok(Self { dim, tau })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.tau[k * self.dim + l]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.tau[k * self.dim..(k + 1) * self.dim]
    }
}

/// Probability vector over queue lengths `0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pi: Vec<f64>,
}

impl StationaryDistribution {
    pub fn from_vec(pi: Vec<f64>) -> Self {
        Self { pi }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.pi
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    /// `pi[k]`, zero outside `0..=K`.
    #[inline]
    pub fn at(&self, k: isize) -> f64 {
        if k < 0 {
            0.0
        } else {
            self.pi.get(k as usize).copied().unwrap_or(0.0)
        }
    }

    pub fn mean(&self) -> f64 {
        self.pi.iter().enumerate().map(|(k, p)| k as f64 * p).sum()
    }
}

/// Builds the transition matrix of the queue under `policy`.
pub fn build_transition(
    config: &SystemConfig,
    policy: &Policy,
) -> Result<TransitionMatrix, MarkovError> {
    policy.validate_for(config)?;
    let cap = config.capacity();
    let dim = cap + 1;
    let arrival = config.arrival();
    let send: Vec<f64> = (0..=cap).map(|u| policy.mean_transmit(config, u)).collect();

    let mut tau = vec![0.0; dim * dim];
    for k in 0..dim {
        let row = &mut tau[k * dim..(k + 1) * dim];
        for (m, &theta) in arrival.theta().iter().enumerate() {
            if theta == 0.0 {
                continue;
            }
            let u = k + m;
            if u > cap {
                row[cap] += theta;
            } else if u == 0 {
                row[0] += theta;
            } else {
                row[u - 1] += theta * send[u];
                row[u] += theta * (1.0 - send[u]);
            }
        }
    }
    Ok(TransitionMatrix { dim, tau })
}

/// Solves for the stationary distribution reached from an empty buffer.
///
/// The closed class reachable from state 0 is solved by LU with one balance
/// equation replaced by normalization; transient states get zero mass. More
/// than one reachable closed class makes the answer depend on the sample
/// path and is reported as [`MarkovError::SingularSystem`].
pub fn stationary(t: &TransitionMatrix) -> Result<StationaryDistribution, MarkovError> {
    let n = t.dim();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| reachable(t, s)).collect();
    let recurrent: Vec<usize> = (0..n)
        .filter(|&s| reach[0][s])
        .filter(|&s| (0..n).all(|x| !reach[s][x] || reach[x][s]))
        .collect();

    let mut classes: Vec<Vec<usize>> = Vec::new();
    for &s in &recurrent {
        if !classes.iter().any(|c| reach[s][c[0]]) {
            classes.push((0..n).filter(|&x| reach[s][x]).collect());
        }
    }
    if classes.len() != 1 {
        return Err(MarkovError::SingularSystem {
            classes: classes.len(),
        });
    }
    let class = &classes[0];
    let c = class.len();

    // (P^T - I) pi = 0 on the class, last row replaced by 1^T pi = 1.
    let mut a = DMatrix::<f64>::zeros(c, c);
    for (i, &to) in class.iter().enumerate() {
        for (j, &from) in class.iter().enumerate() {
            a[(i, j)] = t.get(from, to) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..c {
        a[(c - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(c);
    b[c - 1] = 1.0;
    let sol = a
        .lu()
        .solve(&b)
        .ok_or_else(|| MarkovError::Numerical("singular balance system".into()))?;

    let mut pi = vec![0.0; n];
    for (i, &s) in class.iter().enumerate() {
        let v = sol[i];
        if v < CLAMP_TOLERANCE {
            return Err(MarkovError::Numerical(format!(
                "negative stationary mass {v:e} in state {s}"
            )));
        }
        pi[s] = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);

    let residual = (0..n)
        .map(|l| ((0..n).map(|k| pi[k] * t.get(k, l)).sum::<f64>() - pi[l]).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOLERANCE {
        return Err(MarkovError::Numerical(format!(
            "balance residual {residual:e}"
        )));
    }
    if pi[n - 1] > OVERFLOW_WARNING {
        log::debug!(
            "full-buffer probability {:.3e} is not negligible; consider a larger capacity",
            pi[n - 1]
        );
    }
    Ok(StationaryDistribution { pi })
}

fn reachable(t: &TransitionMatrix, from: usize) -> Vec<bool> {
    let n = t.dim();
    let mut seen = vec![false; n];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(k) = stack.pop() {
        for (l, &p) in t.row(k).iter().enumerate() {
            if p > 0.0 && !seen[l] {
                seen[l] = true;
                stack.push(l);
            }
        }
    }
    seen
}

/// Probability of sending in channel state `w` given `q[n-1] = k`:
/// `sum_m theta[m] f[k+m][w]`, with overflowing batches contributing nothing.
pub fn transmit_prob(
    config: &SystemConfig,
    policy: &Policy,
    k: usize,
    w: usize,
) -> Result<f64, MarkovError> {
    policy.validate_for(config)?;
    if k > config.capacity() || w >= config.states() {
        return Err(MarkovError::IndexOutOfRange { k, w });
    }
    Ok(psi(config, policy, k, w))
}

/// Probability of staying silent given `q[n-1] = k`.
pub fn idle_prob(config: &SystemConfig, policy: &Policy, k: usize) -> Result<f64, MarkovError> {
    let mut sent = 0.0;
    for w in 0..config.states() {
        sent += transmit_prob(config, policy, k, w)?;
    }
    Ok(1.0 - sent)
}

#[inline]
fn psi(config: &SystemConfig, policy: &Policy, k: usize, w: usize) -> f64 {
    config
        .arrival()
        .theta()
        .iter()
        .enumerate()
        .map(|(m, th)| th * policy.get(k + m, w))
        .sum()
}

/// Mean delay in slots by Little's law.
pub fn average_delay(pi: &StationaryDistribution, rate: f64) -> Result<f64, MarkovError> {
    if rate <= 0.0 {
        return Err(MarkovError::ZeroArrivalRate);
    }
    Ok(pi.mean() / rate)
}

/// Mean transmit power per slot.
pub fn average_power(
    config: &SystemConfig,
    policy: &Policy,
    pi: &StationaryDistribution,
) -> Result<f64, MarkovError> {
    policy.validate_for(config)?;
    if pi.len() != config.capacity() + 1 {
        return Err(MarkovError::DimensionMismatch {
            rows: config.capacity() + 1,
            cols: 1,
            got_rows: pi.len(),
            got_cols: 1,
        });
    }
    let ch = config.channel();
    let mut total = 0.0;
    for (k, &p) in pi.as_slice().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        for w in 0..ch.states() {
            total += p * ch.eta()[w] * ch.power()[w] * psi(config, policy, k, w);
        }
    }
    Ok(total)
}

/// Expected number of packets sent per slot.
pub fn throughput(config: &SystemConfig, policy: &Policy, pi: &StationaryDistribution) -> f64 {
    let eta = config.channel().eta();
    pi.as_slice()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            p * (0..eta.len())
                .map(|w| eta[w] * psi(config, policy, k, w))
                .sum::<f64>()
        })
        .sum()
}

/// Expected number of packets dropped per slot because the batch did not fit.
pub fn loss_rate(config: &SystemConfig, pi: &StationaryDistribution) -> f64 {
    let cap = config.capacity();
    pi.as_slice()
        .iter()
        .enumerate()
        .map(|(k, p)| {
            p * config
                .arrival()
                .theta()
                .iter()
                .enumerate()
                .filter(|(m, _)| k + m > cap)
                .map(|(m, th)| th * (k + m - cap) as f64)
                .sum::<f64>()
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub delay: f64,
    pub power: f64,
    pub pi: StationaryDistribution,
    /// Packets dropped per slot on buffer overflow.
    pub loss: f64,
}

/// Mean delay, mean power and stationary distribution of `policy`.
pub fn evaluate_policy(config: &SystemConfig, policy: &Policy) -> Result<Evaluation, MarkovError> {
    let t = build_transition(config, policy)?;
    let pi = stationary(&t)?;
    let delay = average_delay(&pi, config.mean_rate())?;
    let power = average_power(config, policy, &pi)?;
    let loss = loss_rate(config, &pi);
    Ok(Evaluation {
        delay,
        power,
        pi,
        loss,
    })
}
