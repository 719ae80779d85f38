//! Slot-level Monte Carlo simulation of a policy.
//!
//! Each slot draws a batch and a channel state, adds the batch to the queue,
//! drops whatever does not fit, and transmits one packet with the policy's
//! probability for the post-arrival length. A slot that overflows transmits
//! nothing, matching the chain in [`crate::markov`].

use std::collections::VecDeque;

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::markov::{MarkovError, Policy};
use crate::model::SystemConfig;

pub const DEFAULT_SLOTS: u64 = 10_000_000;
pub const DEFAULT_WARMUP: u64 = 10_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("need more slots ({n_slots}) than warmup ({warmup})")]
    TooShort { n_slots: u64, warmup: u64 },
    #[error("confidence intervals need at least {needed} batches, got {got}")]
    TooFewBatches { needed: usize, got: usize },
    #[error(transparent)]
    Policy(#[from] MarkovError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub n_slots: u64,
    pub seed: u64,
    pub warmup: u64,
    /// Also track each packet's sojourn time (first in, first out).
    pub track_sojourn: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n_slots: DEFAULT_SLOTS,
            seed: 0,
            warmup: DEFAULT_WARMUP,
            track_sojourn: false,
        }
    }
}

impl SimConfig {
    pub fn new(n_slots: u64, seed: u64) -> Self {
        Self {
            n_slots,
            seed,
            ..Self::default()
        }
    }

    pub fn with_warmup(mut self, warmup: u64) -> Self {
        self.warmup = warmup;
        self
    }

    pub fn with_sojourn(mut self) -> Self {
        self.track_sojourn = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    /// Little's-law delay: mean queue over measured accepted-arrival rate.
    pub empirical_delay: f64,
    pub empirical_power: f64,
    /// Fraction of arriving packets dropped on overflow.
    pub loss_rate: f64,
    pub mean_queue: f64,
    /// Slots measured after warmup.
    pub slots_run: u64,
    /// Mean FIFO sojourn of packets that departed after warmup.
    pub sojourn_delay: Option<f64>,
    /// Whole-run counters, warmup included.
    pub arrived: u64,
    pub accepted: u64,
    pub departed: u64,
    pub final_queue: u64,
}

impl SimResult {
    /// `accepted == departed + final_queue`.
    pub fn conserves_packets(&self) -> bool {
        self.accepted == self.departed + self.final_queue
    }
}

/// Runs `policy` for `sc.n_slots` slots from an empty buffer.
pub fn simulate(config: &SystemConfig, policy: &Policy, sc: &SimConfig) -> Result<SimResult, SimError> {
    if sc.n_slots <= sc.warmup {
        return Err(SimError::TooShort {
            n_slots: sc.n_slots,
            warmup: sc.warmup,
        });
    }
    policy.validate_for(config)?;
    let cap = config.capacity() as u64;
    let arrivals = WeightedIndex::new(config.arrival().theta()).expect("validated arrival distribution");
    let channels = WeightedIndex::new(config.channel().eta()).expect("validated channel distribution");
    let power = config.channel().power();
    let mut rng = ChaCha8Rng::seed_from_u64(sc.seed);

    let mut q: u64 = 0;
    let (mut arrived, mut accepted, mut departed) = (0u64, 0u64, 0u64);
    let (mut m_arrived, mut m_accepted, mut m_lost) = (0u64, 0u64, 0u64);
    let mut queue_sum: u128 = 0;
    let mut energy = 0.0;
    let mut fifo: VecDeque<u64> = VecDeque::new();
    let (mut sojourn_sum, mut sojourn_count) = (0u128, 0u64);

    for n in 0..sc.n_slots {
        let measuring = n >= sc.warmup;
        let a = arrivals.sample(&mut rng) as u64;
        let w = channels.sample(&mut rng);
        let mut u = q + a;
        let mut lost = 0;
        let send = if u > cap {
            lost = u - cap;
            u = cap;
            false
        } else {
            let f = policy.get(u as usize, w);
            f > 0.0 && rng.gen_bool(f)
        };
        let admitted = a - lost;
        arrived += a;
        accepted += admitted;
        if sc.track_sojourn {
            fifo.extend(std::iter::repeat_n(n, admitted as usize));
        }
        if send {
            u -= 1;
            departed += 1;
            if sc.track_sojourn {
                let t0 = fifo.pop_front().expect("queue holds the transmitted packet");
                if measuring {
                    sojourn_sum += (n - t0) as u128;
                    sojourn_count += 1;
                }
            }
        }
        q = u;
        if measuring {
            m_arrived += a;
            m_accepted += admitted;
            m_lost += lost;
            queue_sum += q as u128;
            if send {
                energy += power[w];
            }
        }
    }

    let slots = sc.n_slots - sc.warmup;
    let mean_queue = queue_sum as f64 / slots as f64;
    let accepted_rate = m_accepted as f64 / slots as f64;
    Ok(SimResult {
        empirical_delay: if accepted_rate > 0.0 { mean_queue / accepted_rate } else { 0.0 },
        empirical_power: energy / slots as f64,
        loss_rate: if m_arrived > 0 { m_lost as f64 / m_arrived as f64 } else { 0.0 },
        mean_queue,
        slots_run: slots,
        sojourn_delay: (sc.track_sojourn && sojourn_count > 0)
            .then(|| sojourn_sum as f64 / sojourn_count as f64),
        arrived,
        accepted,
        departed,
        final_queue: q,
    })
}

/// Independent runs with seeds `sc.seed, sc.seed + 1, ...`, in seed order.
pub fn simulate_batches(
    config: &SystemConfig,
    policy: &Policy,
    sc: &SimConfig,
    batches: usize,
) -> Result<Vec<SimResult>, SimError> {
    (0..batches as u64)
        .into_par_iter()
        .map(|i| {
            let run = SimConfig {
                seed: sc.seed.wrapping_add(i),
                ..*sc
            };
            simulate(config, policy, &run)
        })
        .collect()
}

/// Minimum number of batches accepted by [`confidence`].
pub const MIN_BATCHES: usize = 10;

/// Batch-means estimate and 95% Student-t half-width.
pub fn confidence(samples: &[f64]) -> Result<(f64, f64), SimError> {
    let n = samples.len();
    if n < MIN_BATCHES {
        return Err(SimError::TooFewBatches {
            needed: MIN_BATCHES,
            got: n,
        });
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.975);
    Ok((mean, t * (var / n as f64).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate;

    #[test]
    fn idle_policy_fills_buffer_and_loses_everything_after() {
        let cfg = validate(&[0.7, 0.3], &[1.0], &[2.0], 5).unwrap();
        let r = simulate(&cfg, &Policy::idle(5, 1), &SimConfig::new(20_000, 1)).unwrap();
        assert_eq!(r.empirical_power, 0.0);
        assert_eq!(r.final_queue, 5);
        assert!(r.loss_rate > 0.999);
        assert!(r.conserves_packets());
    }

    #[test]
    fn greedy_single_arrival_power() {
        let cfg = validate(
            &[0.7, 0.3],
            &crate::model::table1::ETA,
            &crate::model::table1::POWER_BER_1E3,
            10,
        )
        .unwrap();
        let r = simulate(&cfg, &Policy::greedy(10, 4), &SimConfig::new(400_000, 5)).unwrap();
        assert!((r.empirical_power - 1.217208).abs() / 1.217208 < 0.02, "{r:?}");
        assert_eq!(r.empirical_delay, 0.0);
        assert_eq!(r.loss_rate, 0.0);
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = validate(&[0.6, 0.3, 0.1], &[0.5, 0.5], &[1.0, 3.0], 8).unwrap();
        let p = Policy::from_fn(8, 2, |q, w| if q >= 2 - w.min(1) { 0.7 } else { 0.0 }).unwrap();
        let sc = SimConfig::new(50_000, 42).with_sojourn();
        assert_eq!(simulate(&cfg, &p, &sc).unwrap(), simulate(&cfg, &p, &sc).unwrap());
    }

    #[test]
    fn sojourn_matches_littles_law() {
        let cfg = validate(&[0.6, 0.3, 0.1], &[0.5, 0.5], &[1.0, 3.0], 20).unwrap();
        let p = Policy::greedy(20, 2);
        let r = simulate(&cfg, &p, &SimConfig::new(300_000, 3).with_sojourn()).unwrap();
        let s = r.sojourn_delay.unwrap();
        assert!((s - r.empirical_delay).abs() < 0.02 * r.empirical_delay.max(0.1), "{r:?}");
    }

    #[test]
    fn warmup_must_be_shorter() {
        let cfg = validate(&[0.5, 0.5], &[1.0], &[1.0], 3).unwrap();
        assert!(matches!(
            simulate(&cfg, &Policy::greedy(3, 1), &SimConfig::new(100, 0)),
            Err(SimError::TooShort { .. })
        ));
    }

    #[test]
    fn confidence_needs_ten_batches() {
        assert!(matches!(confidence(&[1.0; 9]), Err(SimError::TooFewBatches { .. })));
        assert_eq!(confidence(&[2.5; 10]).unwrap(), (2.5, 0.0));
    }

    #[test]
    fn confidence_half_width() {
        let xs: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let (m, h) = confidence(&xs).unwrap();
        assert_eq!(m, 4.5);
        // t_{0.975, 9} = 2.262157, s = sqrt(82.5 / 9)
        assert!((h - 2.262157 * (82.5f64 / 9.0 / 10.0).sqrt()).abs() < 1e-5);
    }
}
