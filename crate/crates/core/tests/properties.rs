//! Randomized properties: structural invariants that must hold for every
//! admissible input, checked against brute-force oracles.

use proptest::prelude::*;

use thermoshift::potential::PotentialParams;
use thermoshift::pressure;
use thermoshift::series::lerch_tail;
use thermoshift::sft::{CylinderSpec, SftSpec, Word, WordCount};

fn brute_count(transition: &[Vec<u8>], n: usize) -> u128 {
    let m = transition.len();
    let mut alive = vec![true; m];
    loop {
        let mut changed = false;
        for i in 0..m {
            if alive[i] && !(0..m).any(|j| alive[j] && transition[i][j] == 1) {
                alive[i] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    fn dfs(t: &[Vec<u8>], alive: &[bool], last: usize, left: usize) -> u128 {
        if left == 0 {
            return 1;
        }
        (0..t.len())
            .filter(|&j| alive[j] && t[last][j] == 1)
            .map(|j| dfs(t, alive, j, left - 1))
            .sum()
    }
    (0..m)
        .filter(|&i| alive[i])
        .map(|i| dfs(transition, &alive, i, n - 1))
        .sum()
}

fn random_matrix(m: usize) -> impl Strategy<Value = Vec<Vec<u8>>> {
    proptest::collection::vec(proptest::collection::vec(0u8..=1, m), m)
}

proptest! {
    #[test]
    fn word_counts_match_brute_force(m in 2usize..=4, t in (2usize..=4).prop_flat_map(random_matrix)) {
        prop_assume!(t.len() == m);
        if let Ok(spec) = SftSpec::from_matrix(m, t.clone()) {
            for n in 1..=7 {
                let got = match spec.count_words(n) {
                    WordCount::Exact(c) => c,
                    WordCount::LogApprox(_) => unreachable!("tiny n"),
                };
                prop_assert_eq!(got, brute_count(&t, n), "n={}", n);
            }
        }
    }

    #[test]
    fn damped_tail_monotone(eps in 0.0f64..2.0, t in 1.1f64..5.0, j0 in 2u64..50) {
        let a = lerch_tail(eps, t, j0).unwrap();
        let b = lerch_tail(eps, t, j0 + 1).unwrap();
        let c = lerch_tail(eps + 0.1, t, j0).unwrap();
        // dropping a positive term or strengthening the damping decreases
        // the sum
        prop_assert!(b.lo <= a.hi + 1e-15);
        prop_assert!(c.lo <= a.hi + 1e-15);
        // the removed term is exactly the difference
        let term = (-eps * j0 as f64).exp() * (j0 as f64).powf(-t);
        prop_assert!((a.lo - b.hi - term).abs() < 1e-9 * (1.0 + a.hi));
        prop_assert!(a.lo >= 0.0 && a.hi >= a.lo);
    }

    #[test]
    fn grouped_and_direct_always_intersect(t in 1.2f64..4.0, dz in 0.0f64..1.0) {
        let spec = SftSpec::from_forbidden_blocks(2, &[Word(vec![1, 1])]).unwrap();
        let cyl = CylinderSpec::new(&spec, &Word(vec![1, 1])).unwrap();
        let params = PotentialParams::new(&spec, 1.0, 4).unwrap();
        let xi = thermoshift::spectral::entropy(&spec).unwrap();
        let z = xi + dz;
        let d = pressure::lambda_direct(&spec, &cyl, &params, t, z, 14).unwrap();
        let g = pressure::lambda_grouped(&spec, &cyl, &params, t, z, 25).unwrap();
        prop_assert!(d.enclosure().intersects(&g.enclosure()), "t={} z={}", t, z);
        prop_assert!(d.lower <= d.upper && g.lower <= g.upper);
    }
}
