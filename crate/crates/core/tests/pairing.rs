use itertools::Itertools;
use proptest::prelude::*;
use relaysec::pairing::{af_relay_key, effective_gains, gain_variance, opt_scp, solve_paired};
use relaysec::power::df::secure_waterfill;
use relaysec::{
    allocate, brute_force_scp, generate_realization, pair_af, pair_df, pair_ordered, Budgets,
    ChannelRealization, DfCase, Pairing, RelayMode, SystemConfig,
};

fn realization(n: usize, m: usize, seed: u64) -> ChannelRealization {
    generate_realization(&SystemConfig::desk(n, m).with_seed(seed)).unwrap()
}

fn is_bijection(p: &Pairing) -> bool {
    let mut seen = vec![false; p.len()];
    p.as_slice()
        .iter()
        .all(|&o| o < seen.len() && !std::mem::replace(&mut seen[o], true))
}

fn argsort_desc(v: &[f64]) -> Vec<usize> {
    (0..v.len())
        .sorted_by(|&i, &j| v[j].total_cmp(&v[i]).then(i.cmp(&j)))
        .collect()
}

fn all_pairings(n: usize) -> Vec<Pairing> {
    (0..n)
        .permutations(n)
        .map(|p| Pairing::new(p).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pairings_are_bijections(n in 1usize..=8, m in 2usize..=5, seed: u64, ps_db in -5.0f64..30.0, pr_db in -5.0f64..30.0) {
        let real = realization(n, m, seed);
        let asg = allocate(&real);
        let b = Budgets::from_db(ps_db, pr_db, 1.0).unwrap();
        prop_assert!(is_bijection(&pair_ordered(&real, &asg).unwrap()));
        prop_assert!(is_bijection(&pair_af(&real, &asg).unwrap()));
        prop_assert!(is_bijection(&pair_df(&real, &asg, b).unwrap().0));
        for mode in [RelayMode::Af, RelayMode::Df] {
            prop_assert!(is_bijection(&opt_scp(&real, &asg, b, mode).unwrap().pairing));
        }
    }

    /// Reordering the relay-side subcarriers by the AF pairing co-sorts the
    /// keys, after which the pairing is the identity.
    #[test]
    fn af_rank_matching_idempotent(n in 1usize..=8, seed: u64) {
        let real = realization(n, 3, seed);
        let asg = allocate(&real);
        let p = pair_af(&real, &asg).unwrap();
        let ru: Vec<Vec<f64>> = real
            .gain_ru()
            .iter()
            .map(|row| (0..n).map(|k| row[p.partner(k)]).collect())
            .collect();
        let sorted = ChannelRealization::new(real.gain_sr().to_vec(), ru, 1.0).unwrap();
        let asg2 = allocate(&sorted);
        prop_assert_eq!(pair_af(&sorted, &asg2).unwrap(), Pairing::identity(n));
    }

    #[test]
    fn ordered_pairing_matches_double_argsort(seed: u64) {
        let real = realization(4, 3, seed);
        let asg = allocate(&real);
        let s = argsort_desc(real.gain_sr());
        let r = argsort_desc(&asg.gain_rm);
        let mut perm = [0; 4];
        for k in 0..4 {
            perm[s[k]] = r[k];
        }
        let got = pair_ordered(&real, &asg).unwrap();
        prop_assert_eq!(got.as_slice(), &perm[..]);
    }

    /// Widening the gap between two water-filled gains (sum kept fixed)
    /// lowers the sum rate once the budget exceeds the power bound.
    #[test]
    fn widening_gains_lowers_waterfill_rate(
        g2 in 0.01f64..10.0,
        ratio in 1.0f64..10.0,
        frac in 0.001f64..0.999,
        scale in 1.001f64..50.0,
        s in 0.1f64..10.0,
    ) {
        let g1 = g2 * ratio;
        let d = g2 * frac;
        let (h1, h2) = (g1 + d, g2 - d);
        let bound = s * (g1 + g2) / (g1 * g2 * h1 * h2).sqrt();
        let both_on = s * (1.0 / h2 - 1.0 / h1);
        let p = bound.max(both_on) * scale;
        let rate = |x: f64, y: f64| {
            let w = secure_waterfill(&[x, y], &[0.0, 0.0], p, s).unwrap();
            (1.0 + w.powers[0] * x / s).ln() + (1.0 + w.powers[1] * y / s).ln()
        };
        prop_assert!(rate(h1, h2) < rate(g1, g2));
    }
}

#[test]
fn ordered_pairing_example() {
    let real =
        ChannelRealization::new(vec![3.0, 1.0], vec![vec![2.0, 5.0], vec![1.0, 1.0]], 1.0).unwrap();
    let asg = allocate(&real);
    assert_eq!(pair_ordered(&real, &asg).unwrap().as_slice(), &[1, 0]);
}

#[test]
fn af_pairing_beats_most_permutations_at_high_snr() {
    let b = Budgets::from_db(30.0, 30.0, 1.0).unwrap();
    let trials = 200;
    let mut good = 0;
    for seed in 0..trials {
        let real = realization(3, 2, 1000 + seed);
        let asg = allocate(&real);
        let mine = solve_paired(&real, &asg, pair_af(&real, &asg).unwrap(), b, RelayMode::Af)
            .unwrap()
            .rate;
        let beaten = all_pairings(3)
            .into_iter()
            .filter(|p| {
                let r = solve_paired(&real, &asg, p.clone(), b, RelayMode::Af)
                    .unwrap()
                    .rate;
                mine >= r * (1.0 - 1e-9)
            })
            .count();
        if beaten >= 5 {
            good += 1;
        }
    }
    assert!(good as f64 >= 0.99 * trials as f64, "{good}/{trials}");
}

/// Σps for a relay-limited allocation under a given pairing.
fn source_energy(real: &ChannelRealization, rm: &[f64], pr: &[f64], p: &Pairing) -> f64 {
    (0..p.len())
        .map(|n| pr[p.partner(n)] * rm[p.partner(n)] / real.gain_sr()[n])
        .sum()
}

#[test]
fn df_relay_limited_pairing_minimizes_source_energy() {
    for seed in 0..200 {
        let n = 2 + (seed as usize % 5);
        let real = realization(n, 3, 2000 + seed);
        let asg = allocate(&real);
        let b = Budgets::new(1e12, 10.0).unwrap();
        let (p, case) = pair_df(&real, &asg, b).unwrap();
        assert_eq!(case, DfCase::RelayLimited);
        let pr = secure_waterfill(&asg.gain_rm, &asg.gain_re, b.relay, 1.0)
            .unwrap()
            .powers;
        let base = source_energy(&real, &asg.gain_rm, &pr, &p);
        for i in 0..n {
            for j in i + 1..n {
                let mut q = p.as_slice().to_vec();
                q.swap(i, j);
                let swapped = source_energy(&real, &asg.gain_rm, &pr, &Pairing::new(q).unwrap());
                assert!(swapped >= base * (1.0 - 1e-12), "seed {seed}: swap {i},{j}");
            }
        }
    }
}

#[test]
fn df_source_limited_pairing_keys_on_gain_ratio() {
    for seed in 0..100 {
        let real = realization(5, 3, 3000 + seed);
        let asg = allocate(&real);
        let (p, case) = pair_df(&real, &asg, Budgets::new(10.0, 1e12).unwrap()).unwrap();
        assert_eq!(case, DfCase::SourceLimited);
        let ratio: Vec<f64> = asg
            .gain_rm
            .iter()
            .zip(&asg.gain_re)
            .map(|(m, e)| m / e)
            .collect();
        let s = argsort_desc(real.gain_sr());
        let r = argsort_desc(&ratio);
        for k in 0..5 {
            assert_eq!(p.partner(s[k]), r[k]);
        }
    }
}

#[test]
fn df_pairing_close_to_brute_force() {
    let b = Budgets::from_db(20.0, 20.0, 1.0).unwrap();
    for seed in 0..300 {
        let real = realization(3, 2, 4000 + seed);
        let asg = allocate(&real);
        let opt = opt_scp(&real, &asg, b, RelayMode::Df).unwrap().rate;
        let brute = brute_force_scp(&real, &asg, b, RelayMode::Df)
            .unwrap()
            .best_rate;
        assert!(opt >= 0.98 * brute, "seed {seed}: {opt} vs {brute}");
    }
}

#[test]
fn af_relay_key_values() {
    assert_eq!(af_relay_key(4.0, 1.0), 1.5);
    assert_eq!(af_relay_key(2.0, 2.0), 0.0);
}

#[test]
fn variance_two_pass() {
    let real = realization(3, 2, 77);
    let asg = allocate(&real);
    let g = effective_gains(&real, &asg, &Pairing::identity(3), RelayMode::Df).unwrap();
    let mean = g.value.iter().sum::<f64>() / 3.0;
    let two_pass = g.value.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0;
    assert!((gain_variance(&g) - two_pass).abs() <= 1e-12 * two_pass.max(1.0));
}

#[test]
fn low_variance_pairings_tend_to_win() {
    let b = Budgets::from_db(15.0, 15.0, 1.0).unwrap();
    let trials = 500;
    for mode in [RelayMode::Af, RelayMode::Df] {
        let (mut min_var_wins, mut heuristic_low) = (0, 0);
        for seed in 0..trials {
            let real = realization(3, 2, 5000 + seed);
            let asg = allocate(&real);
            let perms = all_pairings(3);
            let vars: Vec<f64> = perms
                .iter()
                .map(|p| gain_variance(&effective_gains(&real, &asg, p, mode).unwrap()))
                .collect();
            let rates: Vec<f64> = perms
                .iter()
                .map(|p| solve_paired(&real, &asg, p.clone(), b, mode).unwrap().rate)
                .collect();
            let best = rates.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let k = (0..6).min_by(|&i, &j| vars[i].total_cmp(&vars[j])).unwrap();
            if rates[k] >= best * (1.0 - 1e-9) {
                min_var_wins += 1;
            }
            let chosen = match mode {
                RelayMode::Af => pair_af(&real, &asg).unwrap(),
                RelayMode::Df => pair_df(&real, &asg, b).unwrap().0,
            };
            let v = gain_variance(&effective_gains(&real, &asg, &chosen, mode).unwrap());
            if vars.iter().filter(|&&w| w < v).count() < 2 {
                heuristic_low += 1;
            }
        }
        assert!(2 * min_var_wins > trials, "{mode}: {min_var_wins}/{trials}");
        assert!(
            2 * heuristic_low > trials,
            "{mode}: {heuristic_low}/{trials}"
        );
    }
}
