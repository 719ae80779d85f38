use proptest::prelude::*;
use qsched::lp::{self, build_g, pi_from_y, substitute_y, LpModel, YVariables};
use qsched::markov::{build_transition, evaluate_policy, stationary, Policy};
use qsched::model::{validate, SystemConfig};
use qsched::oracle::{self, lower_hull};
use qsched::sim::{simulate, SimConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn instance(seed: u64) -> SystemConfig {
    oracle::random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 10, 4, 3)
}

fn policy(cfg: &SystemConfig, seed: u64) -> Policy {
    oracle::random_policy(cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn prob_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validation_is_idempotent(theta in prob_vec(3), eta in prob_vec(3), k in 2usize..20) {
        let power = [0.5, 1.0, 4.0];
        if let Ok(cfg) = validate(&theta, &eta, &power, k) {
            let again = validate(cfg.arrival().theta(), cfg.channel().eta(), cfg.channel().power(), k).unwrap();
            let pairs = cfg.arrival().theta().iter().zip(again.arrival().theta())
                .chain(cfg.channel().eta().iter().zip(again.channel().eta()));
            for (a, b) in pairs {
                prop_assert!((a - b).abs() < 1e-15);
            }
            prop_assert_eq!(cfg.channel().power(), again.channel().power());
        }
    }

    #[test]
    fn tail_masses_sum_to_rate(theta in prob_vec(4)) {
        if let Ok(cfg) = validate(&theta, &[1.0], &[1.0], 5) {
            let a = cfg.arrival();
            let total: f64 = (0..a.max_batch()).map(|i| a.tail_mass(i).unwrap()).sum();
            prop_assert!((total - cfg.mean_rate()).abs() < 1e-12);
        }
    }

    #[test]
    fn stationary_is_a_fixed_point(seed in any::<u64>()) {
        let cfg = instance(seed);
        let p = policy(&cfg, seed ^ 1);
        let t = build_transition(&cfg, &p).unwrap();
        let pi = stationary(&t).unwrap();
        let v = pi.as_slice();
        prop_assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(v.iter().all(|x| *x >= 0.0));
        for l in 0..t.dim() {
            let next: f64 = (0..t.dim()).map(|k| v[k] * t.get(k, l)).sum();
            prop_assert!((next - v[l]).abs() < 1e-10);
        }
    }

    #[test]
    fn g_reconstructs_pi(seed in any::<u64>()) {
        let cfg = instance(seed);
        let p = policy(&cfg, seed.wrapping_add(3));
        let ev = evaluate_policy(&cfg, &p).unwrap();
        let g = build_g(&cfg).unwrap();
        let y = substitute_y(&cfg, &p, &ev.pi).unwrap();
        let back = pi_from_y(&g, &y).unwrap();
        for (a, b) in back.as_slice().iter().zip(ev.pi.as_slice()) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn g_image_is_normalized(seed in any::<u64>(), scale in 0.0f64..2.0) {
        let cfg = instance(seed);
        let g = build_g(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = cfg.capacity() * cfg.states();
        let y: Vec<f64> = (0..n).map(|_| scale * rand::Rng::gen::<f64>(&mut rng)).collect();
        let pi = pi_from_y(&g, &YVariables::new(cfg.states(), y)).unwrap();
        prop_assert!((pi.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn lp_power_and_delay_are_consistent_with_the_chain(seed in any::<u64>(), t in 0.05f64..1.0) {
        let cfg = oracle::random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 8, 3, 3);
        let model = LpModel::new(&cfg).unwrap();
        let lo = cfg.min_sustainable_power();
        let hi = lp::greedy_power(&cfg).unwrap().max(lo) * 1.1;
        let opt = model.optimize(lo + t * (hi - lo)).unwrap();
        let ev = evaluate_policy(&cfg, &opt.policy).unwrap();
        prop_assert!(opt.power <= opt.budget + 1e-9);
        prop_assert!((ev.power - opt.power).abs() < 1e-7 * opt.power.max(1.0));
        prop_assert!((ev.delay - opt.delay).abs() < 1e-6 * opt.delay.max(1.0));
    }

    #[test]
    fn tradeoff_is_non_increasing(seed in any::<u64>()) {
        let cfg = oracle::random_instance(&mut ChaCha8Rng::seed_from_u64(seed), 8, 3, 3);
        let budgets = oracle::interior_budgets(&cfg, 12).unwrap();
        let objectives: Vec<f64> = lp::sweep(&cfg, &budgets)
            .unwrap()
            .iter()
            .map(|e| e.point().expect("interior budgets are structured").objective)
            .collect();
        for w in objectives.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * w[0].max(1.0));
        }
    }

    #[test]
    fn hull_is_convex_and_below_the_cloud(pts in prop::collection::vec((0.0f64..10.0, 0.0f64..10.0), 1..40)) {
        let hull = lower_hull(&pts).unwrap();
        let v = hull.vertices();
        for w in v.windows(3) {
            let s1 = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
            let s2 = (w[2].1 - w[1].1) / (w[2].0 - w[1].0);
            prop_assert!(s1 <= s2 + 1e-12);
        }
        for w in v.windows(2) {
            prop_assert!(w[1].1 <= w[0].1);
        }
        for &(x, y) in &pts {
            if let Some(h) = hull.evaluate(x) {
                prop_assert!(h <= y + 1e-9);
            }
        }
    }

    #[test]
    fn simulation_conserves_packets_and_repeats(seed in any::<u64>()) {
        let cfg = instance(seed);
        let p = policy(&cfg, seed.wrapping_mul(31));
        let sc = SimConfig::new(5_000, seed).with_warmup(100).with_sojourn();
        let a = simulate(&cfg, &p, &sc).unwrap();
        prop_assert!(a.conserves_packets());
        prop_assert!(a.final_queue as usize <= cfg.capacity());
        prop_assert!(a.accepted <= a.arrived);
        prop_assert_eq!(&a, &simulate(&cfg, &p, &sc).unwrap());
    }
}
