//! Property tests of the cross-cutting invariants.

use proptest::prelude::*;

use quasiperm::rational::{frac, rat, Rational};
use quasiperm::{
    dependence, enumerate_permutations, pattern_density, perturb, step_density, DependenceStatus,
    Permutation, PerturbationVector,
};

fn permutation_strategy(max_order: usize) -> impl Strategy<Value = Permutation> {
    (1..=max_order)
        .prop_flat_map(|n| Just((1..=n).collect::<Vec<usize>>()).prop_shuffle())
        .prop_map(|image| Permutation::from_one_line(image).unwrap())
}

/// Perturbation coordinates inside the always-valid box |x| <= 1/(4n).
fn safe_perturbation(n: usize) -> impl Strategy<Value = PerturbationVector> {
    let coords = (n - 1) * (n - 1);
    proptest::collection::vec(-4i64..=4, coords).prop_map(move |nums| {
        let entries: Vec<Rational> = nums.into_iter().map(|v| frac(v, 16 * n as i64)).collect();
        PerturbationVector::from_flat(n, entries).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn pattern_densities_sum_to_one(host in permutation_strategy(8), k in 1usize..=3) {
        let total: Rational = enumerate_permutations(k)
            .iter()
            .map(|q| pattern_density(q, &host))
            .sum();
        let expected = if k <= host.order() { rat(1) } else { rat(0) };
        prop_assert_eq!(total, expected);
    }

    #[test]
    fn induced_patterns_are_bijections(host in permutation_strategy(10)) {
        let n = host.order();
        let step = 1.max(n / 3);
        let positions: Vec<usize> = (1..=n).step_by(step).collect();
        let pattern = host.induced_pattern(&positions).unwrap();
        prop_assert_eq!(pattern.order(), positions.len());
        let mut image: Vec<usize> = pattern.image().collect();
        image.sort_unstable();
        prop_assert_eq!(image, (1..=positions.len()).collect::<Vec<_>>());
    }

    #[test]
    fn perturbed_densities_sum_to_one_and_transpose(x in safe_perturbation(3)) {
        let m = perturb(&x).unwrap();
        for k in 2..=3usize {
            let total: Rational = enumerate_permutations(k)
                .iter()
                .map(|q| step_density(q, &m))
                .sum();
            prop_assert_eq!(total, rat(1));
        }
        let mt = m.transpose();
        for q in enumerate_permutations(3) {
            prop_assert_eq!(step_density(&q, &m), step_density(&q.inverse(), &mt));
        }
    }

    #[test]
    fn dependence_status_survives_shuffling(
        indices in proptest::collection::hash_set(0usize..8, 1..=3),
        seed in any::<u64>(),
    ) {
        let pool: Vec<Permutation> = enumerate_permutations(2)
            .into_iter()
            .chain(enumerate_permutations(3))
            .collect();
        let mut set: Vec<Permutation> =
            indices.iter().map(|&i| pool[i].clone()).collect();
        let base = dependence(&set).unwrap();
        // Rotate deterministically from the seed for a different input order.
        let shift = (seed % set.len() as u64) as usize;
        set.rotate_left(shift);
        let rotated = dependence(&set).unwrap();
        prop_assert_eq!(base.status, rotated.status);
        if base.status == DependenceStatus::Dependent {
            let kernel = rotated.kernel.unwrap();
            prop_assert!(quasiperm::forcing::kernel_annihilates(&set, &kernel));
        }
    }
}
