//! Property tests around the Bellman machinery: the max backup is a
//! gamma-contraction, value bounds are preserved, and every operator's TD
//! target respects the softmax/max/log-sum-exp ordering.

use dbs_rl::gridworld::default_gridworld;
use dbs_rl::mdp::value_loss;
use dbs_rl::operators::{boltz, log_sum_exp, max_op, BetaSchedule, OperatorKind};
use dbs_rl::qlearning::next_state_value;
use dbs_rl::value_iteration::bellman_backup_q;
use proptest::prelude::*;

fn max_sweep(
    mdp: &dbs_rl::mdp::TabularMdp,
    v: &[f64],
) -> Vec<f64> {
    let q = bellman_backup_q(mdp, v).unwrap();
    (0..mdp.n_states())
        .map(|s| {
            if mdp.is_terminal(s) {
                0.0
            } else {
                max_op(q.row(s)).unwrap()
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn max_backup_is_a_gamma_contraction(
        seed_a in prop::collection::vec(-10.0..10.0f64, 128),
        seed_b in prop::collection::vec(-10.0..10.0f64, 128),
    ) {
        let gw = default_gridworld().unwrap();
        let n = gw.mdp.n_states();
        let (va, vb) = (&seed_a[..n], &seed_b[..n]);
        let before = value_loss(va, vb).unwrap();
        let after = value_loss(&max_sweep(&gw.mdp, va), &max_sweep(&gw.mdp, vb)).unwrap();
        prop_assert!(
            after <= gw.mdp.gamma() * before + 1e-12,
            "after {after} vs gamma*before {}",
            gw.mdp.gamma() * before
        );
    }

    #[test]
    fn backup_preserves_the_reward_bound(
        values in prop::collection::vec(-10.0..10.0f64, 128),
    ) {
        // ||V|| <= R/(1-gamma) = 10 stays invariant under one sweep.
        let gw = default_gridworld().unwrap();
        let swept = max_sweep(&gw.mdp, &values[..gw.mdp.n_states()]);
        let r_max = gw.mdp.max_abs_reward();
        let cap = r_max / (1.0 - gw.mdp.gamma());
        prop_assert!(swept.iter().all(|v| v.abs() <= cap + 1e-12));
    }

    #[test]
    fn td_target_ordering_across_operators(
        row in prop::collection::vec(-5.0..5.0f64, 2..6),
        t in 1u64..500,
    ) {
        let dbs = OperatorKind::Dbs {
            schedule: BetaSchedule::power(1.0, 2.0).unwrap(),
        };
        let soft = OperatorKind::LogSumExp { beta: 100.0 };
        let dbs_v = next_state_value(&row, &dbs, t, false).unwrap();
        let max_v = next_state_value(&row, &OperatorKind::Max, t, false).unwrap();
        let soft_v = next_state_value(&row, &soft, t, false).unwrap();
        prop_assert!(dbs_v <= max_v && max_v <= soft_v);
        // Terminal rows collapse to zero for every operator.
        for op in [&dbs, &OperatorKind::Max, &soft] {
            prop_assert_eq!(next_state_value(&row, op, t, true).unwrap(), 0.0);
        }
    }

    #[test]
    fn backup_rows_bound_their_own_summaries(
        values in prop::collection::vec(0.0..10.0f64, 128),
        beta in 0.1..100.0f64,
    ) {
        // For any backed-up row, softmax <= max <= log-sum-exp.
        let gw = default_gridworld().unwrap();
        let q = bellman_backup_q(&gw.mdp, &values[..gw.mdp.n_states()]).unwrap();
        for s in 0..gw.mdp.n_states() {
            let row = q.row(s);
            let b = boltz(row, beta).unwrap();
            let m = max_op(row).unwrap();
            let l = log_sum_exp(row, beta).unwrap();
            prop_assert!(b <= m && m <= l);
        }
    }
}
