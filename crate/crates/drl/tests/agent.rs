use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use safedrive_drl::grid::{GridConfig, GridWorld};
use safedrive_drl::train::{run_grid_episode, write_training_csv};
use safedrive_drl::*;

fn transition(rng: &mut ChaCha8Rng, dim: usize, n_actions: usize, done: bool) -> Transition {
    Transition {
        s: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        a: rng.gen_range(0..n_actions),
        r: rng.gen_range(-5.0..5.0),
        s_next: (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        done,
    }
}

#[test]
fn epsilon_schedule_endpoints() {
    let c = AgentConfig::default();
    assert_eq!(epsilon_at(0, &c), 1.0);
    assert_eq!(epsilon_at(200_000, &c), 0.05);
    assert_eq!(epsilon_at(1_000_000, &c), 0.05);
    assert!((epsilon_at(100_000, &c) - 0.525).abs() < 1e-15);
    let mut prev = 2.0;
    for s in (0..=200_000).step_by(10_000) {
        let e = epsilon_at(s, &c);
        assert!(e <= prev);
        prev = e;
    }
}

#[test]
fn terminal_targets_are_the_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = Mlp::new(&[4, 8, 3], &mut rng).unwrap();
    let b = Mlp::new(&[4, 8, 3], &mut rng).unwrap();
    let mut t = transition(&mut rng, 4, 3, true);
    t.r = -100.0;
    for alg in [Algorithm::Dqn, Algorithm::Ddqn] {
        assert_eq!(compute_targets(&a, &b, &[&t], 0.99, alg).unwrap(), vec![-100.0]);
    }
}

#[test]
fn zero_discount_gives_the_reward() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = Mlp::new(&[4, 8, 3], &mut rng).unwrap();
    let batch: Vec<Transition> = (0..20).map(|_| transition(&mut rng, 4, 3, false)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let y = compute_targets(&a, &a, &refs, 0.0, Algorithm::Ddqn).unwrap();
    for (t, yi) in batch.iter().zip(y) {
        assert_eq!(t.r, yi);
    }
}

#[test]
fn double_and_plain_targets_on_a_toy_pair() {
    // identity networks on 2-d input: Q(s) = W s
    let mut online = Mlp::zeros(&[2, 2]).unwrap();
    online.layer_mut(0).0.copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
    let mut target = Mlp::zeros(&[2, 2]).unwrap();
    target.layer_mut(0).0.copy_from_slice(&[0.0, 1.0, 1.0, 0.0]);
    // s' = (1, 3): online picks action 1, target values are (3, 1)
    let t = Transition { s: vec![0.0, 0.0], a: 0, r: 1.0, s_next: vec![1.0, 3.0], done: false };
    let dqn = compute_targets(&online, &target, &[&t], 0.5, Algorithm::Dqn).unwrap()[0];
    let ddqn = compute_targets(&online, &target, &[&t], 0.5, Algorithm::Ddqn).unwrap()[0];
    assert_eq!(dqn, 1.0 + 0.5 * 3.0);
    assert_eq!(ddqn, 1.0 + 0.5 * 1.0);
    // an online net that ranks actions like the target gives the same target
    let mut ranked = Mlp::zeros(&[2, 2]).unwrap();
    ranked.layer_mut(0).0.copy_from_slice(&[0.0, 2.0, 1.0, 0.0]);
    let ddqn = compute_targets(&ranked, &target, &[&t], 0.5, Algorithm::Ddqn).unwrap()[0];
    assert_eq!(ddqn, dqn);
}

#[test]
fn double_equals_plain_when_argmaxes_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..1000 {
        let online = Mlp::new(&[3, 6, 3], &mut rng).unwrap();
        let target = Mlp::new(&[3, 6, 3], &mut rng).unwrap();
        let batch: Vec<Transition> = (0..8)
            .map(|_| {
                let done = rng.gen_bool(0.2);
                transition(&mut rng, 3, 3, done)
            })
            .collect();
        let refs: Vec<&Transition> = batch.iter().collect();
        let d = compute_targets(&online, &target, &refs, 0.9, Algorithm::Dqn).unwrap();
        let dd = compute_targets(&online, &target, &refs, 0.9, Algorithm::Ddqn).unwrap();
        for (k, t) in batch.iter().enumerate() {
            let agree = argmax(&online.forward(&t.s_next).unwrap()) == argmax(&target.forward(&t.s_next).unwrap());
            if agree || t.done {
                assert_eq!(d[k], dd[k]);
                checked += 1;
            } else {
                assert!(dd[k] <= d[k]);
            }
        }
    }
    assert!(checked > 1000);
}

#[test]
fn target_sync_rules() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let online = Mlp::new(&[3, 4, 2], &mut rng).unwrap();
    let mut target = Mlp::new(&[3, 4, 2], &mut rng).unwrap();
    sync_target(&online, &mut target, TargetUpdate::Hard { period: 100 }, 99);
    assert_ne!(target.params, online.params);
    sync_target(&online, &mut target, TargetUpdate::Hard { period: 100 }, 100);
    assert_eq!(target.params, online.params);

    let mut t2 = Mlp::new(&[3, 4, 2], &mut rng).unwrap();
    sync_target(&online, &mut t2, TargetUpdate::Soft { rate: 1.0 }, 1);
    assert_eq!(t2.params, online.params);

    let mut ones = Mlp::zeros(&[1, 1]).unwrap();
    ones.params.iter_mut().for_each(|p| *p = 1.0);
    let mut zeros = Mlp::zeros(&[1, 1]).unwrap();
    sync_target(&ones, &mut zeros, TargetUpdate::Soft { rate: 0.01 }, 1);
    assert!(zeros.params.iter().all(|&p| p == 0.01));
}

#[test]
fn epsilon_greedy_frequency() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = [0.0, 1.0, 0.5];
    let n = 100_000;
    let random = (0..n).filter(|_| epsilon_greedy(&q, 0.3, &mut rng).1).count();
    let f = random as f64 / n as f64;
    assert!((f - 0.3).abs() <= 0.01, "{f}");
    assert_eq!(epsilon_greedy(&q, 0.0, &mut rng), (1, false));
}

#[test]
fn train_step_fits_a_fixed_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut online = Mlp::new(&[3, 16, 2], &mut rng).unwrap();
    let target = online.clone();
    let batch: Vec<Transition> = (0..16).map(|_| transition(&mut rng, 3, 2, true)).collect();
    let refs: Vec<&Transition> = batch.iter().collect();
    let c = AgentConfig { lr: 1e-2, ..AgentConfig::default() };
    let first = train_step(&mut online, &target, &refs, &c).unwrap();
    let mut last = first;
    for _ in 0..500 {
        last = train_step(&mut online, &target, &refs, &c).unwrap();
    }
    assert!(last < 0.05 * first, "{first} -> {last}");
    assert!(train_step(&mut online, &target, &[], &c).is_err());
}

#[test]
fn non_finite_loss_is_reported() {
    let mut online = Mlp::zeros(&[1, 1]).unwrap();
    let target = online.clone();
    let t = Transition { s: vec![1.0], a: 0, r: f64::NAN, s_next: vec![0.0], done: true };
    let r = train_step(&mut online, &target, &[&t], &AgentConfig::default());
    assert!(matches!(r, Err(DrlError::NonFinite { .. })));
    assert_eq!(online.params, vec![0.0, 0.0]);
}

#[test]
fn config_validation() {
    assert!(AgentConfig::default().validate().is_ok());
    assert!(AgentConfig::grid_dqn().validate().is_ok());
    assert!(AgentConfig { gamma_discount: 1.0, ..Default::default() }.validate().is_err());
    assert!(AgentConfig { eps_end: 0.5, eps_start: 0.1, ..Default::default() }.validate().is_err());
    assert!(AgentConfig { target_update: TargetUpdate::Hard { period: 0 }, ..Default::default() }.validate().is_err());
}

#[test]
fn replay_ring_evicts_oldest() {
    let mut b = ReplayBuffer::new(5);
    for k in 0..12 {
        b.push(Transition { s: vec![k as f64], a: 0, r: 0.0, s_next: vec![], done: false });
    }
    assert_eq!(b.len(), 5);
    let order: Vec<f64> = b.iter_oldest_first().map(|t| t.s[0]).collect();
    assert_eq!(order, vec![7.0, 8.0, 9.0, 10.0, 11.0]);
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let run = || {
        let config = AgentConfig { warmup_steps: 100, batch_size: 16, ..AgentConfig::grid_dqn() };
        let mut agent = Agent::new(GridWorld::OBS_DIM, GridWorld::N_ACTIONS, config, 42).unwrap();
        let mut env = GridWorld::new(GridConfig::default(), 43);
        let mut rewards = Vec::new();
        let mut k = 0;
        while agent.env_steps < 1000 {
            rewards.push(run_grid_episode(&mut agent, &mut env, true, k).unwrap().total_reward);
            k += 1;
        }
        (agent.online.params, rewards)
    };
    let (a, ra) = run();
    let (b, rb) = run();
    assert_eq!(ra, rb);
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn training_log_has_the_expected_header() {
    let config = AgentConfig { warmup_steps: 10, batch_size: 4, ..AgentConfig::grid_dqn() };
    let mut agent = Agent::new(GridWorld::OBS_DIM, GridWorld::N_ACTIONS, config, 1).unwrap();
    let mut env = GridWorld::new(GridConfig::default(), 2);
    let recs: Vec<_> = (0..3).map(|k| run_grid_episode(&mut agent, &mut env, true, k).unwrap()).collect();
    let mut out = Vec::new();
    write_training_csv(&recs, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert_eq!(text.lines().next().unwrap(), "episode,steps,total_reward,loss_mean,eps");
    assert_eq!(text.lines().count(), 4);
}

proptest! {
    #[test]
    fn replay_size_is_bounded(cap in 1usize..50, n in 0usize..200) {
        let mut b = ReplayBuffer::new(cap);
        for k in 0..n {
            b.push(Transition { s: vec![k as f64], a: 0, r: 0.0, s_next: vec![], done: false });
        }
        prop_assert_eq!(b.len(), n.min(cap));
        if n > 0 {
            prop_assert_eq!(b.iter_oldest_first().last().unwrap().s[0], (n - 1) as f64);
        }
    }

    #[test]
    fn epsilon_stays_in_range(step in 0u64..1_000_000) {
        let c = AgentConfig::default();
        let e = epsilon_at(step, &c);
        prop_assert!((0.05..=1.0).contains(&e));
    }
}
