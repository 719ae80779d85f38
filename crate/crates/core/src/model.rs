//! System model: batch arrivals, block-fading channel states and the buffer.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance applied to probability vectors read from user input.
pub const INPUT_TOLERANCE: f64 = 1e-9;

/// Default buffer capacity when a configuration does not name one.
pub const DEFAULT_CAPACITY: usize = 40;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{what} does not sum to one (sum = {sum})")]
    NonNormalized { what: &'static str, sum: f64 },
    #[error("{what}[{index}] = {value} is not a probability")]
    InvalidProbability {
        what: &'static str,
        index: usize,
        value: f64,
    },
    #[error("transmit powers must be positive and strictly increasing (P[{index}] = {value})")]
    NonIncreasingPower { index: usize, value: f64 },
    #[error("mean arrival rate {rate} is not below the service rate of one packet per slot")]
    Unstable { rate: f64 },
    #[error("buffer capacity {capacity} is smaller than the largest arrival batch {max_batch}")]
    BufferTooSmall { capacity: usize, max_batch: usize },
    #[error("{what} is empty")]
    Empty { what: &'static str },
    #[error("eta has {eta} entries but power has {power}")]
    ChannelLengthMismatch { eta: usize, power: usize },
    #[error("index {index} out of range 0..{len}")]
    IndexOutOfRange { index: usize, len: usize },
}

/// Distribution of the number of packets arriving in one slot.
///
/// `theta[m]` is the probability that exactly `m` packets arrive. The vector is
/// stored densely over `0..=M` with `theta[M] > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrivalSpec {
    theta: Vec<f64>,
}

impl ArrivalSpec {
    /// Validates and normalizes an arrival distribution, trimming trailing zeros.
    pub fn new(theta: &[f64]) -> Result<Self, ModelError> {
        let theta = normalize("theta", theta)?;
        let last = theta.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        Ok(Self {
            theta: theta[..=last].to_vec(),
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Probability of `m` arrivals; zero beyond the support.
    #[inline]
    pub fn prob(&self, m: usize) -> f64 {
        self.theta.get(m).copied().unwrap_or(0.0)
    }

    /// Largest batch size `M` with non-zero probability.
    pub fn max_batch(&self) -> usize {
        self.theta.len() - 1
    }

    /// Mean number of arrivals per slot.
    pub fn mean_rate(&self) -> f64 {
        self.theta
            .iter()
            .enumerate()
            .map(|(m, &p)| m as f64 * p)
            .sum()
    }

    /// `sum_{m=1}^{M-1} m(m+1)/2 * theta[m+1]`, the constant offset that relates
    /// departure-weighted queue lengths to the mean queue length.
    pub fn xi(&self) -> f64 {
        (1..self.max_batch())
            .map(|m| (m * (m + 1)) as f64 / 2.0 * self.theta[m + 1])
            .sum()
    }

    /// Upper tail `Pr{a > i}` for `0 <= i < M`.
    pub fn tail_mass(&self, i: usize) -> Result<f64, ModelError> {
        let m = self.max_batch();
        if i >= m {
            return Err(ModelError::IndexOutOfRange { index: i, len: m });
        }
        Ok(self.tail(i))
    }

    /// Upper tail `Pr{a > i}`, zero for `i >= M`.
    #[inline]
    pub(crate) fn tail(&self, i: usize) -> f64 {
        self.theta.iter().skip(i + 1).sum()
    }
}

/// Per-slot channel state distribution and the transmit power needed in each state.
///
/// State `0` is the best channel, so powers are strictly increasing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelSpec {
    eta: Vec<f64>,
    power: Vec<f64>,
}

impl ChannelSpec {
    pub fn new(eta: &[f64], power: &[f64]) -> Result<Self, ModelError> {
        if eta.len() != power.len() {
            return Err(ModelError::ChannelLengthMismatch {
                eta: eta.len(),
                power: power.len(),
            });
        }
        let eta = normalize("eta", eta)?;
        for (i, &p) in power.iter().enumerate() {
            let prev = if i == 0 { 0.0 } else { power[i - 1] };
            if !p.is_finite() || p <= prev {
                return Err(ModelError::NonIncreasingPower { index: i, value: p });
            }
        }
        Ok(Self {
            eta,
            power: power.to_vec(),
        })
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    pub fn states(&self) -> usize {
        self.eta.len()
    }

    /// Mean power spent per packet when transmitting in every state.
    pub fn mean_power(&self) -> f64 {
        self.eta.iter().zip(&self.power).map(|(e, p)| e * p).sum()
    }
}

/// A validated arrival/channel/buffer triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    arrival: ArrivalSpec,
    channel: ChannelSpec,
    capacity: usize,
}

impl SystemConfig {
    pub fn new(
        arrival: ArrivalSpec,
        channel: ChannelSpec,
        capacity: usize,
    ) -> Result<Self, ModelError> {
        let rate = arrival.mean_rate();
        if rate >= 1.0 {
            return Err(ModelError::Unstable { rate });
        }
        if capacity < arrival.max_batch() || capacity == 0 {
            return Err(ModelError::BufferTooSmall {
                capacity,
                max_batch: arrival.max_batch(),
            });
        }
        Ok(Self {
            arrival,
            channel,
            capacity,
        })
    }

    pub fn arrival(&self) -> &ArrivalSpec {
        &self.arrival
    }

    pub fn channel(&self) -> &ChannelSpec {
        &self.channel
    }

    /// Buffer capacity `K` in packets.
    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn states(&self) -> usize {
        self.channel.states()
    }

    pub fn max_batch(&self) -> usize {
        self.arrival.max_batch()
    }

    pub fn mean_rate(&self) -> f64 {
        self.arrival.mean_rate()
    }

    /// Same system with a different buffer capacity.
    pub fn with_capacity(&self, capacity: usize) -> Result<Self, ModelError> {
        Self::new(self.arrival.clone(), self.channel.clone(), capacity)
    }

    /// Smallest average power at which the offered load can be carried at all:
    /// serve packets in the cheapest channel states first until the service
    /// probability reaches the arrival rate.
    pub fn min_sustainable_power(&self) -> f64 {
        let mut remaining = self.mean_rate();
        let mut total = 0.0;
        for (&eta, &p) in self.channel.eta.iter().zip(&self.channel.power) {
            if remaining <= 0.0 {
                break;
            }
            let used = eta.min(remaining);
            total += used * p;
            remaining -= used;
        }
        total
    }
}

/// Validates raw sequences into a [`SystemConfig`].
pub fn validate(
    theta: &[f64],
    eta: &[f64],
    power: &[f64],
    capacity: usize,
) -> Result<SystemConfig, ModelError> {
    let arrival = ArrivalSpec::new(theta)?;
    let channel = ChannelSpec::new(eta, power)?;
    SystemConfig::new(arrival, channel, capacity)
}

fn normalize(what: &'static str, probs: &[f64]) -> Result<Vec<f64>, ModelError> {
    if probs.is_empty() {
        return Err(ModelError::Empty { what });
    }
    for (index, &value) in probs.iter().enumerate() {
        if !(0.0..=1.0).contains(&value) || value.is_nan() {
            return Err(ModelError::InvalidProbability { what, index, value });
        }
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > INPUT_TOLERANCE {
        return Err(ModelError::NonNormalized { what, sum });
    }
    Ok(probs.iter().map(|p| p / sum).collect())
}

/// Named parameter sets from the numerical study: four channel states with
/// these occupancy probabilities, and per-BER transmit powers.
pub mod table1 {
    pub const ETA: [f64; 4] = [0.135, 0.232, 0.239, 0.394];
    pub const POWER_BER_1E4: [f64; 4] = [0.08, 0.11, 0.24, 101.64];
    pub const POWER_BER_1E3: [f64; 4] = [0.04, 0.08, 0.16, 10.14];
    pub const POWER_BER_1E2: [f64; 4] = [0.02, 0.04, 0.08, 0.99];

    pub const THETA_RATE_025: [f64; 3] = [0.80, 0.15, 0.05];
    pub const THETA_RATE_030: [f64; 3] = [0.78, 0.14, 0.08];
    pub const THETA_RATE_035: [f64; 3] = [0.74, 0.17, 0.09];

    pub const THETA_VAR_027: [f64; 3] = [0.73, 0.24, 0.03];
    pub const THETA_VAR_031: [f64; 3] = [0.75, 0.20, 0.05];
    pub const THETA_VAR_037: [f64; 3] = [0.78, 0.14, 0.08];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn table_config_validates_with_two_packet_batches() {
        let cfg = validate(&table1::THETA_RATE_025, &table1::ETA, &table1::POWER_BER_1E3, 40)
            .unwrap();
        assert_eq!(cfg.max_batch(), 2);
        assert_eq!(cfg.capacity(), 40);
        assert_eq!(cfg.states(), 4);
    }

    #[test]
    fn trailing_zero_trimmed() {
        let a = ArrivalSpec::new(&[0.5, 0.5, 0.0]).unwrap();
        assert_eq!(a.max_batch(), 1);
    }

    #[test]
    fn non_normalized_rejected() {
        let err = ArrivalSpec::new(&[0.2, 0.9]).unwrap_err();
        assert!(matches!(err, ModelError::NonNormalized { .. }));
    }

    #[test]
    fn validation_errors() {
        let e = validate(&[0.5, 0.5], &[0.5, 0.5], &[2.0, 1.0], 4).unwrap_err();
        assert!(matches!(e, ModelError::NonIncreasingPower { index: 1, .. }));
        let e = validate(&[0.0, 0.0, 1.0], &[1.0], &[1.0], 4).unwrap_err();
        assert!(matches!(e, ModelError::Unstable { .. }));
        let e = validate(&[0.8, 0.1, 0.1], &[1.0], &[1.0], 1).unwrap_err();
        assert!(matches!(e, ModelError::BufferTooSmall { .. }));
        let e = validate(&[0.8, 0.2], &[0.5, 0.5], &[1.0], 4).unwrap_err();
        assert!(matches!(e, ModelError::ChannelLengthMismatch { .. }));
        let e = validate(&[1.2, -0.2], &[1.0], &[1.0], 4).unwrap_err();
        assert!(matches!(e, ModelError::InvalidProbability { .. }));
    }

    #[test]
    fn mean_rates_match_table() {
        let r = |t: &[f64]| ArrivalSpec::new(t).unwrap().mean_rate();
        assert!(close(r(&table1::THETA_RATE_025), 0.25, 1e-12));
        assert!(close(r(&table1::THETA_RATE_030), 0.30, 1e-12));
        assert!(close(r(&table1::THETA_RATE_035), 0.35, 1e-12));
        assert!(close(r(&[1.0]), 0.0, 0.0));
        for t in [table1::THETA_VAR_027, table1::THETA_VAR_031, table1::THETA_VAR_037] {
            assert!(close(r(&t), 0.30, 1e-12));
        }
    }

    #[test]
    fn xi_values() {
        assert_eq!(ArrivalSpec::new(&[0.3, 0.7]).unwrap().xi(), 0.0);
        let a = ArrivalSpec::new(&[0.80, 0.15, 0.05]).unwrap();
        assert!(close(a.xi(), 0.05, 1e-15));
        let a = ArrivalSpec::new(&[0.7, 0.1, 0.1, 0.1]).unwrap();
        assert!(close(a.xi(), 0.4, 1e-15));
    }

    #[test]
    fn tail_mass_values() {
        let a = ArrivalSpec::new(&[0.78, 0.14, 0.08]).unwrap();
        assert!(close(a.tail_mass(0).unwrap(), 0.22, 1e-15));
        assert!(close(a.tail_mass(1).unwrap(), 0.08, 1e-15));
        assert!(matches!(
            a.tail_mass(2),
            Err(ModelError::IndexOutOfRange { index: 2, len: 2 })
        ));
    }

    #[test]
    fn min_sustainable_power_fills_cheapest_states() {
        let cfg = validate(&table1::THETA_RATE_030, &table1::ETA, &table1::POWER_BER_1E3, 40)
            .unwrap();
        // 0.135 of service in state 1, the remaining 0.165 in state 2.
        let expected = 0.135 * 0.04 + 0.165 * 0.08;
        assert!(close(cfg.min_sustainable_power(), expected, 1e-15));
    }

    #[test]
    fn channel_mean_power() {
        let ch = ChannelSpec::new(&table1::ETA, &table1::POWER_BER_1E3).unwrap();
        assert!(close(ch.mean_power(), 4.05736, 1e-12));
    }
}
