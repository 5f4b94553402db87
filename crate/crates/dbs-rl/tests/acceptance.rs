//! Acceptance suite: one test per release criterion, each printing a PASS
//! line with its measured numbers. Run with
//! `cargo test -p dbs-rl --test acceptance -- --nocapture`.

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dbs_rl::bias::{equal_mean_gaussians, draw_sample_means};
use dbs_rl::bounds::{convergence_step_bound, fixed_beta_error_bound, tighter_bound_threshold};
use dbs_rl::dqn::{
    loss_and_grad, meta_grad_c, sgd_step, target_sync, train_dqn, ApproxModel, Architecture,
    DqnConfig, Experience, TargetOp, TargetRule,
};
use dbs_rl::gridworld::{build_gridworld, default_gridworld, GridWorldSpec};
use dbs_rl::harness::{run_experiment, ExperimentConfig, OperatorSpec, Suite};
use dbs_rl::operators::{boltz, entropy_gap, log_sum_exp, max_op, OperatorKind};
use dbs_rl::qlearning::{train, LearnerConfig};
use dbs_rl::value_iteration::vi_run;

fn pass(criterion: u32, started: Instant, budget: Duration, detail: &str) {
    let elapsed = started.elapsed();
    println!("criterion {criterion:2}: PASS in {elapsed:.2?} (budget {budget:?}) — {detail}");
    assert!(
        elapsed <= budget,
        "criterion {criterion} exceeded its runtime budget: {elapsed:?} > {budget:?}"
    );
}

#[test]
fn criterion_01_operator_identities_and_sandwich() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let beta_grid = [0.1, 1.0, 10.0, 100.0];
    let mut worst_identity = 0.0f64;
    for _ in 0..10_000 {
        let n = rng.gen_range(2..=10);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let m = max_op(&x).unwrap();
        for beta_t in [0.0, 0.1, 1.0, 10.0, 100.0] {
            assert!(boltz(&x, beta_t).unwrap() <= m, "softmax exceeded max");
        }
        for beta in beta_grid {
            let lse = log_sum_exp(&x, beta).unwrap();
            assert!(m <= lse, "max exceeded log-sum-exp");
            let gap = entropy_gap(&x, beta).unwrap();
            let direct = lse - boltz(&x, beta).unwrap();
            let error = (gap - direct).abs();
            worst_identity = worst_identity.max(error);
            assert!(error <= 1e-10, "identity error {error} at beta {beta}");
            assert!(gap <= (n as f64).ln() / beta + 1e-12, "entropy cap violated");
        }
    }
    pass(
        1,
        started,
        Duration::from_secs(5),
        &format!("10^4 vectors x beta grid; worst identity error {worst_identity:.2e}"),
    );
}

#[test]
fn criterion_02_dbs_vi_convergence_and_fixed_beta_plateaus() {
    let started = Instant::now();
    let gw = default_gridworld().unwrap();
    let v0 = vec![0.0; gw.mdp.n_states()];

    let quad = vi_run(&gw.mdp, &OperatorKind::dbs_power(1.0, 2.0).unwrap(), 200, &v0).unwrap();
    assert!(
        quad.final_loss() <= 1e-4,
        "quadratic-schedule loss {} after 200 sweeps",
        quad.final_loss()
    );

    let mut plateaus = Vec::new();
    for beta in [1.0, 10.0, 100.0] {
        let record = vi_run(&gw.mdp, &OperatorKind::Boltzmann { beta }, 500, &v0).unwrap();
        let bound = fixed_beta_error_bound(beta, gw.mdp.gamma(), gw.mdp.n_actions(), 1.0).unwrap();
        let final_loss = record.final_loss();
        assert!(final_loss > 0.0, "beta {beta}: loss should stay positive");
        assert!(
            final_loss <= bound,
            "beta {beta}: plateau {final_loss} above bound {bound}"
        );
        let tail = &record.losses[record.losses.len() - 20..];
        let spread = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - tail.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(spread <= 1e-9, "beta {beta}: tail still moving ({spread})");
        plateaus.push((beta, final_loss, bound));
    }
    pass(
        2,
        started,
        Duration::from_secs(10),
        &format!(
            "t^2 loss {:.2e}; plateaus vs bounds {:?}",
            quad.final_loss(),
            plateaus
                .iter()
                .map(|(b, l, bd)| format!("beta {b}: {l:.2e} <= {bd:.2e}"))
                .collect::<Vec<_>>()
        ),
    );
}

#[test]
fn criterion_03_final_loss_ordering() {
    let started = Instant::now();
    let gw = default_gridworld().unwrap();
    let v0 = vec![0.0; gw.mdp.n_states()];
    let loss = |op: &OperatorKind| vi_run(&gw.mdp, op, 200, &v0).unwrap().final_loss();

    let cubic = loss(&OperatorKind::dbs_power(1.0, 3.0).unwrap());
    let quad = loss(&OperatorKind::dbs_power(1.0, 2.0).unwrap());
    let linear = loss(&OperatorKind::dbs_power(1.0, 1.0).unwrap());
    let fixed = loss(&OperatorKind::Boltzmann { beta: 100.0 });

    assert!(cubic <= quad + 1e-9, "t^3 {cubic} vs t^2 {quad}");
    assert!(quad <= linear + 1e-9, "t^2 {quad} vs t^1 {linear}");
    assert!(linear <= fixed + 1e-9, "t^1 {linear} vs beta=100 {fixed}");
    pass(
        3,
        started,
        Duration::from_secs(10),
        &format!("losses t^3 {cubic:.2e} <= t^2 {quad:.2e} <= t^1 {linear:.2e} <= b100 {fixed:.2e}"),
    );
}

#[test]
fn criterion_04_step_bound_guarantees_the_tolerance() {
    let started = Instant::now();
    assert_eq!(convergence_step_bound(0.01, 0.9, 1.0, 4, 2.0).unwrap(), 79);

    let gw = default_gridworld().unwrap();
    let v0 = vec![0.0; gw.mdp.n_states()];
    let mut results = Vec::new();
    for eps in [0.01, 0.001] {
        for p in [1.0, 2.0] {
            let steps = convergence_step_bound(eps, 0.9, 1.0, 4, p).unwrap();
            let record = vi_run(
                &gw.mdp,
                &OperatorKind::dbs_power(1.0, p).unwrap(),
                steps as usize,
                &v0,
            )
            .unwrap();
            assert!(
                record.final_loss() <= eps,
                "eps {eps}, p {p}: loss {} after the guaranteed {steps} sweeps",
                record.final_loss()
            );
            results.push(format!("(eps {eps}, p {p}): {steps} sweeps -> {:.1e}", record.final_loss()));
        }
    }
    pass(4, started, Duration::from_secs(10), &results.join("; "));
}

#[test]
fn criterion_05_bound_calculator_reference_values() {
    let started = Instant::now();
    let bound = fixed_beta_error_bound(100.0, 0.9, 4, 1.0).unwrap();
    assert!((bound - 0.13863).abs() <= 1e-5, "bound {bound}");
    let threshold = tighter_bound_threshold(0.9, 4, 1.0).unwrap();
    assert!((threshold - 0.03774).abs() <= 1e-5, "threshold {threshold}");
    pass(
        5,
        started,
        Duration::from_secs(1),
        &format!("bound(100)={bound:.6}, threshold={threshold:.6}"),
    );
}

/// One-sided sign test helper: how many paired seeds have `a > b`.
fn seeds_strictly_worse(a: &[f64], b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x > y).count()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard error of the mean paired difference `a - b`.
fn paired_se(a: &[f64], b: &[f64]) -> f64 {
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let m = mean(&diffs);
    let var = diffs.iter().map(|d| (d - m) * (d - m)).sum::<f64>() / (diffs.len() - 1) as f64;
    (var / diffs.len() as f64).sqrt()
}

#[test]
fn criterion_06_gridworld_learning_ranking() {
    let started = Instant::now();
    let gw = default_gridworld().unwrap();
    let seeds: Vec<u64> = (0..10).collect();
    let episodes = 5000;
    let window = 100;

    let soft_betas = [1e2, 1e3, 1e4, 1e5, 1e6];
    let mut variants = vec![
        OperatorKind::dbs_power(1.0, 2.0).unwrap(),
        OperatorKind::Max,
    ];
    for beta in soft_betas {
        variants.push(OperatorKind::LogSumExp { beta });
    }

    let mut jobs = Vec::new();
    for (vi, op) in variants.iter().enumerate() {
        for &seed in &seeds {
            jobs.push((vi, *op, seed));
        }
    }
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(4);
    let results = dbs_rl::harness::run_parallel(&jobs, workers, |(vi, op, seed)| {
        let cfg = LearnerConfig::new(*op, episodes, *seed);
        let record = train(&gw, &cfg).unwrap();
        let tail_steps: Vec<usize> = record.stats[record.stats.len() - window..]
            .iter()
            .map(|e| e.steps)
            .collect();
        (*vi, *seed, mean(&tail_steps.iter().map(|&s| s as f64).collect::<Vec<_>>()), tail_steps)
    });

    let mut per_variant_means = vec![Vec::new(); variants.len()];
    let mut dbs_tail_pool = Vec::new();
    for (vi, _seed, tail_mean, tail_steps) in results {
        per_variant_means[vi].push(tail_mean);
        if vi == 0 {
            dbs_tail_pool.extend(tail_steps);
        }
    }

    let dbs_means = &per_variant_means[0];
    let vanilla_means = &per_variant_means[1];
    let best_soft_index = (2..variants.len())
        .min_by(|&a, &b| {
            mean(&per_variant_means[a])
                .partial_cmp(&mean(&per_variant_means[b]))
                .unwrap()
        })
        .unwrap();
    let best_soft_means = &per_variant_means[best_soft_index];

    // One-sided sign test at the 5% level over 10 paired seeds: the claim
    // "dbs <= rival" is rejected only when >= 9 of 10 seeds are strictly
    // worse. A two-sigma guard on the paired means backs it up.
    for (rival_means, name) in [(vanilla_means, "vanilla"), (best_soft_means, "best-soft")] {
        let worse = seeds_strictly_worse(dbs_means, rival_means);
        assert!(
            worse <= 8,
            "sign test rejects dbs <= {name}: {worse}/10 seeds strictly worse"
        );
        let guard = 2.0 * paired_se(dbs_means, rival_means);
        assert!(
            mean(dbs_means) <= mean(rival_means) + guard,
            "dbs mean {} not <= {name} mean {} within 2se ({guard})",
            mean(dbs_means),
            mean(rival_means)
        );
    }

    dbs_tail_pool.sort_unstable();
    let pooled_median = dbs_tail_pool[dbs_tail_pool.len() / 2] as f64;
    let shortest = gw.shortest_path_steps() as f64;
    assert!(
        pooled_median <= 1.25 * shortest,
        "dbs pooled median {pooled_median} vs 1.25 x shortest {shortest}"
    );

    pass(
        6,
        started,
        Duration::from_secs(300),
        &format!(
            "means: dbs {:.2}, vanilla {:.2}, best soft {:.2} ({}); dbs median {pooled_median} vs shortest {shortest}",
            mean(dbs_means),
            mean(vanilla_means),
            mean(best_soft_means),
            variants[best_soft_index].label()
        ),
    );
}

#[test]
fn criterion_07_bias_ordering_and_closed_form() {
    let started = Instant::now();
    let trials = 100_000;
    let beta_grid = [0.1, 1.0, 10.0, 100.0];
    let closed_form = 1.0 / std::f64::consts::PI.sqrt();

    for m in [2usize, 5, 10] {
        let specs = equal_mean_gaussians(m);
        let mut rng = ChaCha8Rng::seed_from_u64(700 + m as u64);
        let mut sums_boltz = [0.0f64; 4];
        let mut sums_lse = [0.0f64; 4];
        let mut sum_max = 0.0f64;
        let mut sum_sq_max = 0.0f64;
        for _ in 0..trials {
            let mu_hat = draw_sample_means(&specs, &mut rng).unwrap();
            let max_v = max_op(&mu_hat).unwrap();
            sum_max += max_v;
            sum_sq_max += max_v * max_v;
            for (i, &beta) in beta_grid.iter().enumerate() {
                let b = boltz(&mu_hat, beta).unwrap();
                let l = log_sum_exp(&mu_hat, beta).unwrap();
                // The ordering must hold on every single realization.
                assert!(b <= max_v, "pointwise softmax ordering failed (M={m})");
                assert!(max_v <= l, "pointwise log-sum-exp ordering failed (M={m})");
                sums_boltz[i] += b;
                sums_lse[i] += l;
            }
        }
        let n = trials as f64;
        let max_bias = sum_max / n; // true max mean is 0
        for i in 0..beta_grid.len() {
            assert!(sums_boltz[i] / n <= max_bias, "mean ordering failed (M={m})");
            assert!(max_bias <= sums_lse[i] / n, "mean ordering failed (M={m})");
        }
        if m == 2 {
            let var = (sum_sq_max / n - max_bias * max_bias).max(0.0);
            let se = (var / (n - 1.0)).sqrt();
            assert!(
                (max_bias - closed_form).abs() <= 3.0 * se,
                "max bias {max_bias} vs closed form {closed_form} (3se {})",
                3.0 * se
            );
        }
    }
    pass(
        7,
        started,
        Duration::from_secs(30),
        &format!("pointwise and mean ordering on M in {{2,5,10}} x 10^5 trials; max bias matches 1/sqrt(pi) = {closed_form:.4}"),
    );
}

fn one_hot(i: usize, d: usize) -> Vec<f64> {
    let mut v = vec![0.0; d];
    v[i] = 1.0;
    v
}

fn random_experience<R: Rng>(d: usize, actions: usize, step: u64, rng: &mut R) -> Experience {
    Experience {
        state: one_hot(rng.gen_range(0..d), d),
        action: rng.gen_range(0..actions),
        reward: rng.gen_range(-1.0..1.0),
        next_state: one_hot(rng.gen_range(0..d), d),
        terminal: false,
        step,
    }
}

#[test]
fn criterion_08_dqn_gradient_soundness() {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(800);
    let gamma = 0.9;
    let alpha = 0.05;
    let mut worst_theta = 0.0f64;
    let mut worst_meta = 0.0f64;

    for config_index in 0..100 {
        let arch = if config_index % 2 == 0 {
            Architecture::Linear
        } else {
            Architecture::OneHidden {
                hidden: rng.gen_range(3..=6),
            }
        };
        let d = rng.gen_range(4..=6);
        let actions = rng.gen_range(2..=4);
        let model = ApproxModel::random(arch, d, actions, 0.6, &mut rng);
        let target = target_sync(&ApproxModel::random(arch, d, actions, 0.6, &mut rng));
        let c: f64 = rng.gen_range(0.2..2.0);
        let t: u64 = rng.gen_range(1..=5);
        let t_pow = (t as f64).powi(2);
        let beta = c * t_pow;
        let op = TargetOp::Boltz { beta };

        // Loss gradient check on a small batch.
        let exps: Vec<Experience> = (0..4)
            .map(|k| {
                let mut e = random_experience(d, actions, k as u64 + 1, &mut rng);
                e.terminal = k == 3 && config_index % 3 == 0;
                e
            })
            .collect();
        let batch: Vec<&Experience> = exps.iter().collect();
        let (_, grad) = loss_and_grad(&batch, &model, &target, op, gamma).unwrap();
        let h = 1e-6;
        for k in 0..model.theta.len() {
            let mut plus = model.clone();
            let mut minus = model.clone();
            plus.theta[k] += h;
            minus.theta[k] -= h;
            let (lp, _) = loss_and_grad(&batch, &plus, &target, op, gamma).unwrap();
            let (lm, _) = loss_and_grad(&batch, &minus, &target, op, gamma).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let scale = grad[k].abs().max(fd.abs()).max(1e-7);
            let rel = (grad[k] - fd).abs() / scale;
            worst_theta = worst_theta.max(rel);
            assert!(rel <= 1e-4, "theta gradient off by {rel} (config {config_index})");
        }

        // Meta gradient check through the parameter update.
        let tau = random_experience(d, actions, t, &mut rng);
        let tau_next = Experience {
            state: tau.next_state.clone(),
            ..random_experience(d, actions, t + 1, &mut rng)
        };
        let tau_batch = [&tau];
        let (_, tau_grad) = loss_and_grad(&tau_batch, &model, &target, op, gamma).unwrap();
        let mut after = model.clone();
        after.theta = sgd_step(&model.theta, &tau_grad, alpha).unwrap();
        let b_vec =
            dbs_rl::dqn::dtheta_dc(&tau, &model, &target, alpha, gamma, beta, t_pow).unwrap();
        let analytic = meta_grad_c(&tau_next, &after, &target, beta, gamma, &b_vec).unwrap();

        let hc = 1e-5;
        let mut held_out_losses = [0.0f64; 2];
        for (slot, cc) in [(0usize, c + hc), (1usize, c - hc)] {
            let op_c = TargetOp::Boltz { beta: cc * t_pow };
            let (_, g) = loss_and_grad(&tau_batch, &model, &target, op_c, gamma).unwrap();
            let mut shifted = model.clone();
            shifted.theta = sgd_step(&model.theta, &g, alpha).unwrap();
            let y = dbs_rl::dqn::td_target(&tau_next, &target, op, gamma).unwrap();
            let q = shifted.q_forward(&tau_next.state).unwrap()[tau_next.action];
            held_out_losses[slot] = 0.5 * (y - q) * (y - q);
        }
        let fd = (held_out_losses[0] - held_out_losses[1]) / (2.0 * hc);
        // Scale floor 1e-4: a saturated softmax can make the true gradient
        // ~1e-9, below what central differences can resolve relatively.
        let scale = analytic.abs().max(fd.abs()).max(1e-4);
        let rel = (analytic - fd).abs() / scale;
        worst_meta = worst_meta.max(rel);
        assert!(rel <= 1e-4, "meta gradient off by {rel} (config {config_index})");
    }
    pass(
        8,
        started,
        Duration::from_secs(30),
        &format!("100 configs; worst rel errors: theta {worst_theta:.2e}, meta {worst_meta:.2e}"),
    );
}

#[test]
fn criterion_09_dqn_learning_and_max_target_reduction() {
    let started = Instant::now();
    let gw = build_gridworld(&GridWorldSpec::wall_free(6, 6)).unwrap();

    // Meta-adapted run.
    let cfg = DqnConfig::new(
        3000,
        42,
        TargetRule::Dbs {
            c0: 1.0,
            eta: Some(1e-4),
        },
    );
    let record = train_dqn(&gw, &cfg).unwrap();
    let success = record.final_success_rate(200);
    assert!(success >= 0.95, "final-200 success rate {success}");
    assert!(
        record
            .c_trajectory
            .iter()
            .all(|&c| c.is_finite() && c > 0.0),
        "coefficient left the positive reals"
    );

    // Frozen-huge-coefficient run must replay the max-target run exactly.
    let mut frozen_cfg = DqnConfig::new(
        600,
        7,
        TargetRule::Dbs {
            c0: 1e12,
            eta: None,
        },
    );
    frozen_cfg.record_steps = true;
    let mut max_cfg = DqnConfig::new(600, 7, TargetRule::Max);
    max_cfg.record_steps = true;
    let frozen = train_dqn(&gw, &frozen_cfg).unwrap();
    let hard = train_dqn(&gw, &max_cfg).unwrap();
    assert_eq!(frozen.step_log, hard.step_log, "trajectories diverged");
    assert_eq!(
        frozen.final_model.theta, hard.final_model.theta,
        "parameters diverged"
    );
    for (a, b) in frozen.episodes.iter().zip(&hard.episodes) {
        assert_eq!((a.steps, a.reached_goal), (b.steps, b.reached_goal));
        assert_eq!(a.total_reward, b.total_reward);
        assert_eq!(a.loss_mean, b.loss_mean);
    }

    pass(
        9,
        started,
        Duration::from_secs(180),
        &format!(
            "success {success:.3}; c in [{:.4}, {:.4}]; frozen-c run identical to max-target over {} steps",
            record.c_trajectory.iter().cloned().fold(f64::INFINITY, f64::min),
            record.c_trajectory.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            frozen.step_log.len()
        ),
    );
}

#[test]
fn criterion_10_artifact_determinism() {
    let started = Instant::now();
    let base = tempfile::tempdir().unwrap();

    let mut configs = Vec::new();

    let mut vi = ExperimentConfig::for_suite(Suite::Vi);
    vi.vi.iterations = 30;
    vi.vi.operators = vec![OperatorSpec::Max, OperatorSpec::Dbs { c: 1.0, p: 2.0 }];
    configs.push(vi);

    let mut qlearn = ExperimentConfig::for_suite(Suite::Qlearn);
    qlearn.qlearn.episodes = 100;
    qlearn.qlearn.variants = vec![OperatorSpec::Max, OperatorSpec::Dbs { c: 1.0, p: 2.0 }];
    qlearn.seeds = vec![0, 1];
    qlearn.workers = 2;
    configs.push(qlearn);

    let mut bias = ExperimentConfig::for_suite(Suite::Bias);
    bias.bias.trials = 2000;
    bias.bias.m_values = vec![2, 5];
    configs.push(bias);

    configs.push(ExperimentConfig::for_suite(Suite::Bounds));

    let mut dqn = ExperimentConfig::for_suite(Suite::Dqn);
    dqn.dqn.episodes = 40;
    dqn.dqn.snapshot_every = Some(20);
    configs.push(dqn);

    for (i, mut config) in configs.into_iter().enumerate() {
        config.out_dir = base.path().join(format!("suite_{i}"));
        config.force = true;

        let first = run_experiment(&config).unwrap();
        let snapshot: Vec<(String, Vec<u8>)> = first
            .artifacts
            .iter()
            .map(|p| (p.display().to_string(), std::fs::read(p).unwrap()))
            .collect();

        let second = run_experiment(&config).unwrap();
        assert_eq!(first.artifacts, second.artifacts, "artifact sets differ");
        for (path, bytes) in snapshot {
            let rerun = std::fs::read(&path).unwrap();
            assert_eq!(rerun, bytes, "artifact {path} changed between reruns");
        }
    }
    pass(
        10,
        started,
        Duration::from_secs(120),
        "vi/qlearn/bias/bounds/dqn artifacts byte-identical across reruns",
    );
}
