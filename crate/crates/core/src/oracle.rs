//! Brute-force ground truth for small instances.
//!
//! Exhaustive enumeration of deterministic threshold policies, the lower
//! convex hull of their (power, objective) points, and numerical checks of
//! the identities the LP is built on.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::lp::{self, build_g, penalized_delay, substitute_y, GMatrix, ThresholdPolicy};
use crate::markov::{self, MarkovError, Policy};
use crate::model::SystemConfig;

/// Largest atlas `enumerate_pure` will build.
pub const MAX_ATLAS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{count} threshold policies exceed the enumeration limit of {MAX_ATLAS}")]
    TooLarge { count: usize },
    #[error("no points to build a hull from")]
    Empty,
    #[error(transparent)]
    Markov(#[from] MarkovError),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
}

/// Draws `f[q][w]` uniform on `[0, 1]` with row 0 forced to zero.
pub fn random_policy<R: Rng + ?Sized>(config: &SystemConfig, rng: &mut R) -> Policy {
    Policy::from_fn(config.capacity(), config.states(), |_, _| rng.gen::<f64>())
        .expect("uniform draws are valid probabilities")
}

fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Random valid system with `K <= max_capacity`, `W <= max_states` and
/// `M <= max_batch`, arrival rate below 0.9 and increasing powers.
pub fn random_instance<R: Rng + ?Sized>(
    rng: &mut R,
    max_capacity: usize,
    max_states: usize,
    max_batch: usize,
) -> SystemConfig {
    loop {
        let batch = rng.gen_range(1..=max_batch.max(1));
        let capacity = rng.gen_range(batch.max(1)..=max_capacity.max(batch).max(1));
        let states = rng.gen_range(1..=max_states.max(1));
        let theta = random_simplex(rng, batch + 1);
        let eta = random_simplex(rng, states);
        let mut power: Vec<f64> = (0..states).map(|_| rng.gen_range(0.05..5.0)).collect();
        power.sort_by(f64::total_cmp);
        if power.windows(2).any(|p| p[1] - p[0] < 1e-3) {
            continue;
        }
        if let Ok(cfg) = crate::model::validate(&theta, &eta, &power, capacity) {
            if cfg.mean_rate() < 0.9 {
                return cfg;
            }
        }
    }
}

/// One evaluated deterministic threshold policy.
#[derive(Debug, Clone, PartialEq)]
pub struct AtlasEntry {
    pub thresholds: ThresholdPolicy,
    pub delay: f64,
    pub power: f64,
    pub loss: f64,
    /// Delay plus the loss penalty, comparable with the LP objective.
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyAtlas {
    pub entries: Vec<AtlasEntry>,
}

/// Threshold vector number `index` in lexicographic order over `{1..=K+1}^W`.
fn thresholds_at(index: usize, capacity: usize, states: usize) -> Vec<usize> {
    let base = capacity + 1;
    let mut rest = index;
    let mut t = vec![0; states];
    for slot in t.iter_mut().rev() {
        *slot = rest % base + 1;
        rest /= base;
    }
    t
}

/// Evaluates every deterministic threshold policy, scoring the loss with the
/// default LP penalty.
pub fn enumerate_pure(config: &SystemConfig) -> Result<PolicyAtlas, OracleError> {
    enumerate_pure_with(config, lp::default_loss_penalty(config))
}

pub fn enumerate_pure_with(config: &SystemConfig, penalty: f64) -> Result<PolicyAtlas, OracleError> {
    let cap = config.capacity();
    let states = config.states();
    let count = (cap + 1)
        .checked_pow(states as u32)
        .filter(|&c| c <= MAX_ATLAS)
        .ok_or(OracleError::TooLarge {
            count: (cap + 1).saturating_pow(states as u32),
        })?;
    let entries = (0..count)
        .into_par_iter()
        .map(|i| {
            let tp = ThresholdPolicy::pure(thresholds_at(i, cap, states));
            let policy = lp::threshold_to_policy(&tp, config)?;
            let ev = markov::evaluate_policy(config, &policy)?;
            Ok(AtlasEntry {
                objective: penalized_delay(config, ev.delay, ev.loss, penalty),
                thresholds: tp,
                delay: ev.delay,
                power: ev.power,
                loss: ev.loss,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(PolicyAtlas { entries })
}

/// Piecewise-linear lower boundary of a point cloud, non-increasing in power.
#[derive(Debug, Clone, PartialEq)]
pub struct Hull {
    vertices: Vec<(f64, f64)>,
}

impl Hull {
    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Smallest value reachable with mean power at most `budget`, by
    /// time-sharing between neighbouring vertices. `None` below the cheapest
    /// point.
    pub fn evaluate(&self, budget: f64) -> Option<f64> {
        let first = self.vertices.first()?;
        if budget < first.0 {
            return None;
        }
        for pair in self.vertices.windows(2) {
            let ((p0, d0), (p1, d1)) = (pair[0], pair[1]);
            if budget <= p1 {
                let t = if p1 > p0 { (budget - p0) / (p1 - p0) } else { 1.0 };
                return Some(d0 + t * (d1 - d0));
            }
        }
        self.vertices.last().map(|v| v.1)
    }
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Lower convex hull of `(power, value)` points, truncated at the minimum
/// value so it never increases with power. Collinear interior points are
/// dropped.
pub fn lower_hull(points: &[(f64, f64)]) -> Result<Hull, OracleError> {
    let mut pts: Vec<(f64, f64)> = points
        .iter()
        .copied()
        .filter(|(p, d)| p.is_finite() && d.is_finite())
        .collect();
    if pts.is_empty() {
        return Err(OracleError::Empty);
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for p in pts {
        if hull.last().is_some_and(|last| last.0 == p.0) {
            continue;
        }
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let best = hull
        .iter()
        .enumerate()
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    hull.truncate(best + 1);
    Ok(Hull { vertices: hull })
}

/// Hull of an atlas over (power, LP objective).
pub fn atlas_hull(atlas: &PolicyAtlas) -> Result<Hull, OracleError> {
    let pts: Vec<(f64, f64)> = atlas.entries.iter().map(|e| (e.power, e.objective)).collect();
    lower_hull(&pts)
}

/// Least-squares fit `target ≈ scale * x + offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineFit {
    pub scale: f64,
    pub offset: f64,
    /// Largest absolute residual of the fit.
    pub residual: f64,
}

fn fit_affine(x: &[f64], target: &[f64]) -> AffineFit {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let mt = target.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxt: f64 = x.iter().zip(target).map(|(a, b)| (a - mx) * (b - mt)).sum();
    let scale = if sxx > 0.0 { sxt / sxx } else { 1.0 };
    let offset = mt - scale * mx;
    let residual = x
        .iter()
        .zip(target)
        .map(|(a, b)| (b - scale * a - offset).abs())
        .fold(0.0, f64::max);
    AffineFit {
        scale,
        offset,
        residual,
    }
}

/// Largest violations of each identity over a sample of policies.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub policies: usize,
    /// Up-flow across each cut equals down-flow from departures.
    pub cut_balance: f64,
    /// Departure rate equals the arrival rate net of overflow losses.
    pub throughput: f64,
    /// Departure probabilities stay within `[0, Pr{post-arrival state}]`.
    pub bounds: f64,
    /// `G y + e_K` reproduces the stationary distribution.
    pub reconstruction: f64,
    /// Power from departure probabilities equals the policy's mean power.
    pub power: f64,
    /// Departure-moment delay expression corrected for the buffer boundary.
    pub delay_corrected: f64,
    /// Affine fit of the mean delay against the uncorrected moment expression.
    pub delay_fit: AffineFit,
    /// Largest overflow loss rate seen in the sample.
    pub max_loss: f64,
}

impl VerifyReport {
    /// Exact identities within `tol`, power within `power_tol`.
    pub fn passes(&self, tol: f64, power_tol: f64) -> bool {
        [
            self.cut_balance,
            self.throughput,
            self.bounds,
            self.reconstruction,
            self.delay_corrected,
        ]
        .iter()
        .all(|v| *v < tol)
            && self.power < power_tol
    }
}

/// Identity residuals for one policy.
struct Residuals {
    cut: f64,
    throughput: f64,
    bounds: f64,
    reconstruction: f64,
    power: f64,
    corrected: f64,
    delay: f64,
    moment: f64,
    loss: f64,
}

fn check_policy(
    config: &SystemConfig,
    g: &GMatrix,
    policy: &Policy,
) -> Result<Residuals, OracleError> {
    let ev = markov::evaluate_policy(config, policy)?;
    let pi = &ev.pi;
    let y = substitute_y(config, policy, pi)?;
    let arrival = config.arrival();
    let ch = config.channel();
    let cap = config.capacity();
    let states = config.states();
    let rate = config.mean_rate();
    let m = config.max_batch();

    let mut cut: f64 = 0.0;
    let mut bounds: f64 = 0.0;
    let mut moment = 0.0;
    let mut power = 0.0;
    let mut departures = 0.0;
    for k in 0..cap {
        let down: f64 = (0..states).map(|w| ch.eta()[w] * y.get(k, w)).sum();
        let up: f64 = (0..m.min(k + 1))
            .map(|i| pi.at(k as isize - i as isize) * arrival.tail(i))
            .sum();
        cut = cut.max((up - down).abs());
        let bound = lp::post_arrival(config, pi, k + 1);
        for w in 0..states {
            let v = y.get(k, w);
            bounds = bounds.max((-v).max(v - bound).max(0.0));
            power += ch.eta()[w] * ch.power()[w] * v;
        }
        departures += down;
        moment += k as f64 * down;
    }
    // Up-flow across cuts at or above K: arrivals that overflow.
    let boundary: f64 = (0..=cap)
        .map(|j| {
            (cap.saturating_sub(j)..m)
                .map(|i| (j + i) as f64 * arrival.tail(i))
                .sum::<f64>()
                * pi.at(j as isize)
        })
        .sum();
    let recon = lp::pi_from_y(g, &y)?;
    let reconstruction = recon
        .as_slice()
        .iter()
        .zip(pi.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let moment = (moment - arrival.xi()) / (rate * rate);
    let corrected = moment + boundary / (rate * rate);
    Ok(Residuals {
        cut,
        throughput: (departures - (rate - ev.loss)).abs(),
        bounds,
        reconstruction,
        power: (power - ev.power).abs(),
        corrected: (corrected - ev.delay).abs(),
        delay: ev.delay,
        moment,
        loss: ev.loss,
    })
}

/// Checks every identity the LP relies on for the given policies.
pub fn verify_policies(
    config: &SystemConfig,
    g: &GMatrix,
    policies: &[Policy],
) -> Result<VerifyReport, OracleError> {
    let results = policies
        .par_iter()
        .map(|p| check_policy(config, g, p))
        .collect::<Result<Vec<_>, _>>()?;
    let max = |f: fn(&Residuals) -> f64| results.iter().map(f).fold(0.0, f64::max);
    let moments: Vec<f64> = results.iter().map(|r| r.moment).collect();
    let delays: Vec<f64> = results.iter().map(|r| r.delay).collect();
    let delay_fit = if results.is_empty() {
        AffineFit {
            scale: 1.0,
            offset: 0.0,
            residual: 0.0,
        }
    } else {
        fit_affine(&moments, &delays)
    };
    Ok(VerifyReport {
        policies: results.len(),
        cut_balance: max(|r| r.cut),
        throughput: max(|r| r.throughput),
        bounds: max(|r| r.bounds),
        reconstruction: max(|r| r.reconstruction),
        power: max(|r| r.power),
        delay_corrected: max(|r| r.corrected),
        delay_fit,
        max_loss: max(|r| r.loss),
    })
}

/// Verifies the identities on `n_random` uniformly drawn policies.
pub fn verify_transformations(
    config: &SystemConfig,
    n_random: usize,
    seed: u64,
) -> Result<VerifyReport, OracleError> {
    verify_with_g(config, &build_g(config)?, n_random, seed)
}

/// As [`verify_transformations`] but against a caller-supplied `G`.
pub fn verify_with_g(
    config: &SystemConfig,
    g: &GMatrix,
    n_random: usize,
    seed: u64,
) -> Result<VerifyReport, OracleError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policies: Vec<Policy> = (0..n_random).map(|_| random_policy(config, &mut rng)).collect();
    if config.max_batch() + 1 >= config.capacity() {
        log::info!(
            "buffer of {} is within one batch of the largest arrival; overflow terms dominate",
            config.capacity()
        );
    }
    verify_policies(config, g, &policies)
}

/// `n` budgets evenly spaced above the minimum sustainable power, up to 10%
/// past the greedy policy's power. The minimum itself is excluded: the
/// delay there is unbounded for an unlimited buffer.
pub fn interior_budgets(config: &SystemConfig, n: usize) -> Result<Vec<f64>, OracleError> {
    let lo = config.min_sustainable_power();
    let hi = lp::greedy_power(config)?.max(lo) * 1.1;
    Ok((1..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect())
}

/// Outcome of comparing LP optima with the threshold hull.
#[derive(Debug, Clone, PartialEq)]
pub struct HullCheck {
    pub budgets: usize,
    /// Largest `|LP objective - hull(budget)|`.
    pub max_gap: f64,
    /// Most entries strictly inside their bounds in any channel column.
    pub max_fractional: usize,
    /// Budgets where the LP or the hull produced no value, with the reason.
    pub failures: Vec<(f64, String)>,
}

impl HullCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.failures.is_empty() && self.max_gap < tol && self.max_fractional <= 1
    }
}

pub fn hull_agreement(model: &lp::LpModel, hull: &Hull, budgets: &[f64]) -> HullCheck {
    let mut check = HullCheck {
        budgets: budgets.len(),
        max_gap: 0.0,
        max_fractional: 0,
        failures: Vec::new(),
    };
    for &b in budgets {
        let opt = match model.optimize(b) {
            Ok(o) => o,
            Err(e) => {
                check.failures.push((b, e.to_string()));
                continue;
            }
        };
        match lp::fractional_counts(&opt.solution, model.g(), model.config()) {
            Ok(c) => {
                check.max_fractional = check.max_fractional.max(c.into_iter().max().unwrap_or(0))
            }
            Err(e) => check.failures.push((b, e.to_string())),
        }
        match hull.evaluate(b) {
            Some(h) => check.max_gap = check.max_gap.max((h - opt.objective).abs()),
            None => check.failures.push((b, "below every threshold policy's power".into())),
        }
    }
    check
}

/// Random policies measured against the LP optimum at one budget.
#[derive(Debug, Clone, PartialEq)]
pub struct DominanceCheck {
    pub budget: f64,
    pub lp_objective: f64,
    /// Best objective among sampled policies within the budget.
    pub best_sampled: f64,
    pub sampled: usize,
}

impl DominanceCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.best_sampled >= self.lp_objective - tol
    }
}

/// Draws uniform random policies until `n` of them fit the budget, which is
/// set to the upper quartile of a pilot sample's power (but never below the
/// minimum sustainable power), and compares the best against the LP.
pub fn dominance(model: &lp::LpModel, n: usize, seed: u64) -> Result<DominanceCheck, OracleError> {
    let config = model.config();
    let penalty = model.loss_penalty();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pilot: Vec<f64> = (0..200)
        .map(|_| markov::evaluate_policy(config, &random_policy(config, &mut rng)).map(|e| e.power))
        .collect::<Result<_, _>>()?;
    pilot.sort_by(f64::total_cmp);
    let budget = pilot[pilot.len() * 3 / 4].max(config.min_sustainable_power());
    let lp_objective = model.optimize(budget)?.objective;
    let mut best = f64::INFINITY;
    let mut sampled = 0;
    while sampled < n {
        let ev = markov::evaluate_policy(config, &random_policy(config, &mut rng))?;
        if ev.power <= budget {
            sampled += 1;
            best = best.min(penalized_delay(config, ev.delay, ev.loss, penalty));
        }
    }
    Ok(DominanceCheck {
        budget,
        lp_objective,
        best_sampled: best,
        sampled,
    })
}
