use itertools::Itertools;
use proptest::prelude::*;
use relaysec::pairing::{opt_scp, solve_paired};
use relaysec::power::af::operand_hessian;
use relaysec::{
    allocate, brute_force_scp, generate_realization, optimal_relay_power, pair_ordered, solve_df,
    solve_power_bruteforce, sum_secure_rate, Budgets, ChannelRealization, Pairing, PowerAllocation,
    RelayMode, SystemConfig,
};

fn realization(n: usize, seed: u64) -> ChannelRealization {
    generate_realization(&SystemConfig::desk(n, 2).with_seed(seed)).unwrap()
}

#[test]
fn single_subcarrier_is_identity() {
    let real = realization(1, 3);
    let asg = allocate(&real);
    let b = Budgets::from_db(10.0, 10.0, 1.0).unwrap();
    for mode in [RelayMode::Af, RelayMode::Df] {
        let o = brute_force_scp(&real, &asg, b, mode).unwrap();
        assert_eq!(o.best_pairing, Pairing::identity(1));
        assert_eq!(o.evaluations, 1);
    }
}

#[test]
fn symmetric_channels_tie() {
    let real =
        ChannelRealization::new(vec![1.5, 1.5], vec![vec![2.0, 2.0], vec![0.5, 0.5]], 1.0).unwrap();
    let asg = allocate(&real);
    let b = Budgets::from_db(10.0, 8.0, 1.0).unwrap();
    for mode in [RelayMode::Af, RelayMode::Df] {
        let o = brute_force_scp(&real, &asg, b, mode).unwrap();
        assert_eq!(o.best_pairing, Pairing::identity(2));
        let swapped =
            solve_paired(&real, &asg, Pairing::new(vec![1, 0]).unwrap(), b, mode).unwrap();
        assert!((swapped.rate - o.best_rate).abs() <= 1e-9 * o.best_rate);
    }
}

#[test]
fn best_rate_dominates_every_permutation() {
    let b = Budgets::from_db(12.0, 6.0, 1.0).unwrap();
    for seed in 0..20 {
        let real = realization(3, 100 + seed);
        let asg = allocate(&real);
        for mode in [RelayMode::Af, RelayMode::Df] {
            let o = brute_force_scp(&real, &asg, b, mode).unwrap();
            assert_eq!(o.evaluations, 6);
            let mut first_best = None;
            for perm in (0..3).permutations(3) {
                let p = Pairing::new(perm).unwrap();
                let r = solve_paired(&real, &asg, p.clone(), b, mode).unwrap().rate;
                assert!(r <= o.best_rate);
                if r == o.best_rate && first_best.is_none() {
                    first_best = Some(p);
                }
            }
            assert_eq!(first_best, Some(o.best_pairing));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn fast_schemes_never_beat_oracle(n in 2usize..=5, seed: u64, ps_db in 0.0f64..25.0, pr_db in 0.0f64..25.0) {
        let real = realization(n, seed);
        let asg = allocate(&real);
        let b = Budgets::from_db(ps_db, pr_db, 1.0).unwrap();
        for mode in [RelayMode::Af, RelayMode::Df] {
            let best = brute_force_scp(&real, &asg, b, mode).unwrap().best_rate;
            let fast = [
                opt_scp(&real, &asg, b, mode).unwrap().rate,
                solve_paired(&real, &asg, pair_ordered(&real, &asg).unwrap(), b, mode).unwrap().rate,
                solve_paired(&real, &asg, Pairing::identity(n), b, mode).unwrap().rate,
            ];
            for r in fast {
                prop_assert!(r <= best + 1e-6, "{mode}: {r} > {best}");
            }
        }
    }
}

#[test]
fn two_subcarrier_df_oracle_agrees() {
    for seed in 0..30 {
        let real = realization(2, 700 + seed);
        let asg = allocate(&real);
        let p = Pairing::identity(2);
        let b = Budgets::from_db((seed % 4) as f64 * 5.0, 10.0, 1.0).unwrap();
        let (fast, _) = solve_df(&real, &asg, &p, b).unwrap();
        let slow = solve_power_bruteforce(&real, &asg, &p, b, RelayMode::Df, 8).unwrap();
        let rf = sum_secure_rate(&real, &asg, &p, &fast, RelayMode::Df)
            .unwrap()
            .sum;
        let rs = sum_secure_rate(&real, &asg, &p, &slow, RelayMode::Df)
            .unwrap()
            .sum;
        assert!(
            (rf - rs).abs() <= 1e-4 * rs.max(1e-12),
            "seed {seed}: {rf} vs {rs}"
        );
    }
}

/// Along the segment from the uniform allocation to the oracle optimum, every
/// point inside the region where the AF operand is concave shows the expected
/// Hessian signs.
#[test]
fn concavity_probe_along_ascent() {
    let mut probed = 0;
    for seed in 0..20 {
        let real = realization(2, 900 + seed);
        let asg = allocate(&real);
        let p = Pairing::identity(2);
        let b = Budgets::from_db(15.0, 10.0, 1.0).unwrap();
        let end = solve_power_bruteforce(&real, &asg, &p, b, RelayMode::Af, 6).unwrap();
        let start = PowerAllocation::uniform(2, b, RelayMode::Af);
        let gains = p.pair_gains(&real, &asg);
        for k in 0..=50 {
            let t = k as f64 / 50.0;
            for (i, g) in gains.iter().enumerate() {
                let ps = start.ps[i] + t * (end.ps[i] - start.ps[i]);
                let pr = start.pr[i] + t * (end.pr[i] - start.pr[i]);
                let star = optimal_relay_power(ps, g.sr, g.rm, g.re, 1.0);
                if g.rm < g.re || pr > star || pr * (g.rm * g.re).sqrt() < 1.0 {
                    continue;
                }
                let h = operand_hessian(ps, pr, *g, 1.0);
                assert!(h.ss <= 0.0 && h.rr <= 0.0 && h.det >= -1e-9, "{h:?}");
                probed += 1;
            }
        }
    }
    assert!(probed > 100, "only {probed} points in the concave region");
}
