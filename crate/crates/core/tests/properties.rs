//! Property tests for the rank, reverse-mapping, spectrum and metric
//! invariants.

use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sdc_metrics::{
    align_sizes, canonical_correlations, cm1, cm2, cm3, covariance_pair, evaluate, rank_matrix,
    reverse_map, sdc, trivial_record_swap, um, CanonicalSpectrum, Dataset, EvaluateOptions,
};

fn random_dataset(n: usize, m: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names = (1..=m).map(|j| format!("x{j}")).collect();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..m).map(|_| rng.random_range(-50.0..50.0)).collect())
        .collect();
    Dataset::from_rows(names, &rows).unwrap()
}

fn shape() -> impl Strategy<Value = (usize, usize, u64)> {
    (5usize..60, 1usize..6, any::<u64>())
}

/// Applies a strictly increasing transform to every cell of column `j`.
fn transform_column(d: &Dataset, j: usize, f: impl Fn(f64) -> f64) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..d.n_records())
        .map(|i| {
            (0..d.n_attributes())
                .map(|c| {
                    let v = d.values()[(i, c)];
                    if c == j {
                        f(v)
                    } else {
                        v
                    }
                })
                .collect()
        })
        .collect();
    Dataset::from_rows(d.names().to_vec(), &rows).unwrap()
}

fn sorted_column(d: &Dataset, j: usize) -> Vec<f64> {
    let mut col = d.column(j);
    col.sort_by(|a, b| a.partial_cmp(b).unwrap());
    col
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ranks_invariant_under_strictly_increasing_transforms((n, m, seed) in shape()) {
        let d = random_dataset(n, m, seed);
        let mut t = d.clone();
        for j in 0..m {
            // exact-in-floating-point monotone map, and one curved map
            t = transform_column(&t, j, |v| if j % 2 == 0 { 2.0 * v + 1.0 } else { (v / 25.0).exp() });
        }
        prop_assert_eq!(rank_matrix(&d).ranks(), rank_matrix(&t).ranks());
    }

    #[test]
    fn reverse_map_permutes_columns_and_copies_anonymized_ranks((n, m, seed) in shape()) {
        let x = random_dataset(n, m, seed);
        let y = random_dataset(n, m, seed.wrapping_add(1));
        let z = reverse_map(&x, &y).unwrap();
        for j in 0..m {
            prop_assert_eq!(sorted_column(&z, j), sorted_column(&x, j));
        }
        prop_assert_eq!(rank_matrix(&z).ranks(), rank_matrix(&y).ranks());
    }

    #[test]
    fn align_sizes_is_idempotent_and_deterministic((n, m, seed) in shape()) {
        let a = random_dataset(n + 13, m, seed);
        let b = random_dataset(n, m, seed.wrapping_add(2));
        let (a1, b1) = align_sizes(&a, &b, seed).unwrap();
        let (a2, b2) = align_sizes(&a, &b, seed).unwrap();
        prop_assert_eq!(&a1, &a2);
        prop_assert_eq!(&b1, &b2);
        prop_assert_eq!(a1.n_records(), n);
        prop_assert_eq!(b1.n_records(), n);
        // equal sizes pass through untouched
        let (a3, b3) = align_sizes(&a1, &b1, seed.wrapping_add(3)).unwrap();
        prop_assert_eq!((&a1, &b1), (&a3, &b3));
    }

    #[test]
    fn spectrum_is_sorted_bounded_and_symmetric((n, m, seed) in shape()) {
        let x = random_dataset(n, m, seed);
        let y = random_dataset(n, m, seed.wrapping_add(4));
        let spec = canonical_correlations(
            &covariance_pair(&rank_matrix(&x), &rank_matrix(&y)).unwrap(),
        )
        .unwrap();
        prop_assert!(spec.effective_rank <= m);
        for w in spec.rhos.windows(2) {
            prop_assert!(w[0] >= w[1]);
        }
        for rho in &spec.rhos {
            prop_assert!((0.0..=1.0).contains(rho));
        }
        let swapped = canonical_correlations(
            &covariance_pair(&rank_matrix(&y), &rank_matrix(&x)).unwrap(),
        )
        .unwrap();
        for (a, b) in spec.rhos.iter().zip(&swapped.rhos) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn spectrum_invariant_under_shared_row_relabeling((n, m, seed) in shape()) {
        let x = random_dataset(n, m, seed);
        let y = random_dataset(n, m, seed.wrapping_add(5));
        let spec = canonical_correlations(
            &covariance_pair(&rank_matrix(&x), &rank_matrix(&y)).unwrap(),
        )
        .unwrap();
        // the same permutation applied to both sides only relabels records
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(6));
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);
        let permute = |d: &Dataset| {
            let rows: Vec<Vec<f64>> = order
                .iter()
                .map(|&i| (0..m).map(|j| d.values()[(i, j)]).collect())
                .collect();
            Dataset::from_rows(d.names().to_vec(), &rows).unwrap()
        };
        let relabeled = canonical_correlations(
            &covariance_pair(&rank_matrix(&permute(&x)), &rank_matrix(&permute(&y))).unwrap(),
        )
        .unwrap();
        for (a, b) in spec.rhos.iter().zip(&relabeled.rhos) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn no_projection_pair_beats_the_top_canonical_correlation((n, seed) in (10usize..60, any::<u64>())) {
        let m = 3;
        let x = random_dataset(n, m, seed);
        let y = random_dataset(n, m, seed.wrapping_add(7));
        let (rx, ry) = (rank_matrix(&x), rank_matrix(&y));
        let spec =
            canonical_correlations(&covariance_pair(&rx, &ry).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(8));
        for _ in 0..10 {
            let unit = |rng: &mut ChaCha8Rng| {
                let v = DVector::from_fn(m, |_, _| rng.random_range(-1.0..1.0f64));
                let norm = v.norm();
                if norm > 0.0 { v / norm } else { DVector::from_element(m, (m as f64).sqrt().recip()) }
            };
            let (a, b) = (unit(&mut rng), unit(&mut rng));
            let u = rx.ranks() * &a;
            let v = ry.ranks() * &b;
            let nn = n as f64;
            let (mu, mv) = (u.sum() / nn, v.sum() / nn);
            let uc = u.map(|t| t - mu);
            let vc = v.map(|t| t - mv);
            let denom = uc.norm() * vc.norm();
            if denom > 0.0 {
                let corr = (uc.dot(&vc) / denom).abs();
                prop_assert!(corr <= spec.rhos[0] + 1e-9, "corr {corr} > rho1 {}", spec.rhos[0]);
            }
        }
    }

    #[test]
    fn metrics_are_bounded_and_mutually_consistent((n, seed) in (10usize..80, any::<u64>())) {
        let m = 2 + (seed % 4) as usize;
        let x = random_dataset(n, m, seed);
        let y = match seed % 5 {
            0 => sdc::additive_noise(&x, 0.5, seed).unwrap(),
            1 => sdc::multiplicative_noise(&x, 0.5, seed).unwrap(),
            2 => sdc::column_shuffle(&x, seed),
            3 => trivial_record_swap(&x, seed),
            _ => x.clone(),
        };
        let report = evaluate(
            &x,
            &y,
            &EvaluateOptions { compute_cm3: true, ..Default::default() },
        )
        .unwrap();
        prop_assert!((0.0..=1.0).contains(&report.cm1));
        prop_assert!((0.0..=1.0).contains(&report.cm2));
        prop_assert!((0.0..=1.0).contains(&report.um));
        prop_assert!((0.0..=1.0).contains(&report.cm3.unwrap()));
        prop_assert!(report.cm2 <= report.cm1);
        prop_assert_eq!(report.cm1 == 0.0, report.cm2 == 0.0);
        if report.cm2 > 0.0 {
            let back = (-report.mutual_information).exp();
            prop_assert!(((back - report.cm2) / report.cm2).abs() <= 1e-12);
        } else {
            prop_assert!(report.mutual_information.is_infinite());
        }
    }

    #[test]
    fn cm3_vanishes_for_whole_row_permutations((n, seed) in (10usize..80, any::<u64>())) {
        let m = 2 + (seed % 4) as usize;
        let x = random_dataset(n, m, seed);
        let y = trivial_record_swap(&x, seed.wrapping_add(9));
        prop_assert!(cm3(&x, &y).unwrap() <= 1e-9);
    }

    #[test]
    fn um_is_exactly_one_on_itself((n, m, seed) in shape()) {
        let x = random_dataset(n, m, seed);
        let r = rank_matrix(&x);
        prop_assert_eq!(um(&r, &r).unwrap(), 1.0);
    }
}

#[test]
fn cm1_and_cm2_vanish_together_on_unit_correlation() {
    for tail in [vec![], vec![0.4], vec![0.9, 0.2]] {
        let mut rhos = vec![1.0];
        rhos.extend(tail);
        let m = rhos.len();
        let spectrum = CanonicalSpectrum {
            rhos,
            basis_x: nalgebra::DMatrix::identity(m, m),
            basis_y: nalgebra::DMatrix::identity(m, m),
            effective_rank: m,
        };
        assert_eq!(cm1(&spectrum), 0.0);
        let (value, mi) = cm2(&spectrum);
        assert_eq!(value, 0.0);
        assert!(mi.is_infinite());
    }
}
