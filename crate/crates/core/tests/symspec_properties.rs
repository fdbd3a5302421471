mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sb_kit::symspec::*;

fn scale(a: &SelfAdjointOperator) -> f64 {
    operator_norm(a).unwrap().max(1.0)
}

/// Largest and smallest eigenvalue of the symmetric part, from nalgebra's
/// solver rather than ours.
fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let e = SymmetricEigen::new(sym);
    (e.eigenvalues.min(), e.eigenvalues.max())
}

fn norm(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = extreme_eigenvalues(m);
    lo.abs().max(hi.abs())
}

fn seeds() -> impl Strategy<Value = (u64, usize)> {
    (any::<u64>(), 1usize..=8)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn eigendecomposition_reconstructs((seed, dim) in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, dim, 10.0);
        let e = eigendecompose(&a).unwrap();
        let rebuilt = &e.vectors * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(e.values.clone())) * e.vectors.transpose();
        prop_assert!(norm(&(a.matrix() - rebuilt)) <= 1e-10 * scale(&a));
        let oracle = SymmetricEigen::new(a.matrix().clone());
        let mut expected: Vec<f64> = oracle.eigenvalues.iter().copied().collect();
        expected.sort_by(f64::total_cmp);
        for (x, y) in e.values.iter().zip(&expected) {
            prop_assert!((x - y).abs() <= 1e-10 * scale(&a));
        }
    }

    #[test]
    fn positive_sqrt_matches_the_eigen_oracle((seed, dim) in (any::<u64>(), 1usize..=10)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_symmetric(&mut rng, dim, 3.0);
        let a = SelfAdjointOperator::symmetrized(&(m.matrix() * m.matrix())).unwrap();
        let s = positive_sqrt(&a).unwrap();
        prop_assert!(norm(&(s.matrix() * s.matrix() - a.matrix())) <= 1e-8 * scale(&a));
        prop_assert!(extreme_eigenvalues(s.matrix()).0 >= -1e-9);
        let oracle = SymmetricEigen::new(a.matrix().clone());
        let root = &oracle.eigenvectors
            * DMatrix::from_diagonal(&oracle.eigenvalues.map(|x| x.max(0.0).sqrt()))
            * oracle.eigenvectors.transpose();
        prop_assert!(norm(&(s.matrix() - root)) <= 1e-7 * scale(&a).sqrt());
    }

    #[test]
    fn positive_projection_satisfies_its_defining_clauses((seed, dim) in seeds(), zeros in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let zeros = zeros.min(dim);
        let mut values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-4.0..4.0)).collect();
        values[..zeros].iter_mut().for_each(|v| *v = 0.0);
        let a = with_spectrum(&mut rng, &values);
        let e = positive_projection(&a).unwrap();
        let (am, em) = (a.matrix(), e.matrix());
        let tol = 1e-9 * scale(&a);
        prop_assert!(norm(&(em * em - em)) <= 1e-9);
        prop_assert!((em - em.transpose()).amax() <= 1e-12);
        // commutes with A and A²
        prop_assert!(norm(&(em * am - am * em)) <= tol);
        let a2 = am * am;
        prop_assert!(norm(&(em * &a2 - &a2 * em)) <= tol * scale(&a));
        // A·E₊ ≥ 0 and A·(I − E₊) ≤ 0
        let id = DMatrix::<f64>::identity(dim, dim);
        prop_assert!(extreme_eigenvalues(&(am * em)).0 >= -tol);
        prop_assert!(extreme_eigenvalues(&(am * (&id - em))).1 <= tol);
        // kernel vectors are fixed
        let oracle = SymmetricEigen::new(am.clone());
        for (k, &lambda) in oracle.eigenvalues.iter().enumerate() {
            if lambda.abs() < 1e-12 {
                let x = oracle.eigenvectors.column(k).into_owned();
                prop_assert!((em * &x - &x).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn identity_decomposition_is_monotone_with_the_right_ends((seed, dim) in seeds(), l in -5.0f64..5.0, gap in 0.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, dim, 3.0);
        let e = eigendecompose(&a).unwrap();
        let el = identity_decomposition(&a, l).unwrap();
        let em = identity_decomposition(&a, l + gap).unwrap();
        prop_assert!(norm(&(el.matrix() * em.matrix() - el.matrix())) <= 1e-9);
        prop_assert_eq!(identity_decomposition(&a, e.min()).unwrap(), SelfAdjointOperator::zero(dim));
        let top = identity_decomposition(&a, e.max() + 1e-6).unwrap();
        prop_assert!((top.matrix() - DMatrix::<f64>::identity(dim, dim)).amax() <= 1e-9);
    }

    #[test]
    fn riemann_sum_error_is_below_the_mesh((seed, dim) in seeds(), cells in 1usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_symmetric(&mut rng, dim, 3.0);
        let e = eigendecompose(&a).unwrap();
        let left = e.min() - rng.gen_range(0.0..0.5);
        let right = e.max() + rng.gen_range(0.01..0.5);
        let mut cuts: Vec<f64> = (1..cells).map(|_| rng.gen_range(left..right)).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-6);
        let mut boundaries = vec![left];
        boundaries.extend(cuts.into_iter().filter(|&c| c - left > 1e-6 && right - c > 1e-6));
        boundaries.push(right);
        let tags = boundaries.windows(2).map(|w| rng.gen_range(w[0]..w[1])).collect();
        let p = RiemannPartition::new(boundaries, tags).unwrap();
        let (_, error) = spectral_riemann_sum(&a, &p).unwrap();
        prop_assert!(error <= p.mesh(), "error {} mesh {}", error, p.mesh());
    }

    #[test]
    fn approximate_unitary_conjugates_rotated_pairs((seed, dim) in seeds(), repeated in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = if repeated {
            let values: Vec<f64> = (0..dim).map(|_| [-1.0, 0.0, 2.0][rng.gen_range(0..3)]).collect();
            with_spectrum(&mut rng, &values)
        } else {
            random_symmetric(&mut rng, dim, 5.0)
        };
        let a2 = rotate(&a1, &random_orthogonal(&mut rng, dim));
        for eps in [1e-2, 1e-6] {
            let u = approximate_unitary(&a1, &a2, eps).unwrap();
            prop_assert!(conjugation_residual(&a1, &a2, &u).unwrap() < eps);
            prop_assert!(u.orthogonality_defect().unwrap() <= ORTHOGONALITY_TOL);
        }
    }

    #[test]
    fn residual_is_stable_under_a_common_rotation((seed, dim) in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a1 = random_symmetric(&mut rng, dim, 5.0);
        let a2 = rotate(&a1, &random_orthogonal(&mut rng, dim));
        let w = random_orthogonal(&mut rng, dim);
        let u = approximate_unitary(&a1, &a2, 1e-6).unwrap();
        let v = approximate_unitary(&rotate(&a1, &w), &rotate(&a2, &w), 1e-6).unwrap();
        let r1 = conjugation_residual(&a1, &a2, &u).unwrap();
        let r2 = conjugation_residual(&rotate(&a1, &w), &rotate(&a2, &w), &v).unwrap();
        prop_assert!((r1 - r2).abs() <= 1e-9);
    }

    #[test]
    fn describe_agrees_with_spectrum_and_equivalence_of_rotations((seed, dim) in seeds()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values: Vec<f64> = (0..dim).map(|_| rng.gen_range(-3i32..=3) as f64).collect();
        let a = with_spectrum(&mut rng, &values);
        let b = rotate(&a, &random_orthogonal(&mut rng, dim));
        let da = describe(&a, 1e-6).unwrap();
        prop_assert!(spectrally_equivalent(&da, &describe(&b, 1e-6).unwrap()));
        let total: u64 = da.isolated().iter().map(|p| p.1).sum();
        prop_assert_eq!(total as usize, dim);
        for &(v, m) in da.isolated() {
            let count = values.iter().filter(|&&x| (x - v).abs() < 1e-6).count();
            prop_assert_eq!(count as u64, m);
        }
    }
}

#[test]
fn bi_embeddable_descriptions_are_equivalent() {
    let fam = description_family();
    assert_eq!(fam.len(), 342);
    let mut bi = 0;
    for d1 in &fam {
        for d2 in &fam {
            if description_embeddable(d1, d2) && description_embeddable(d2, d1) {
                bi += 1;
                assert!(spectrally_equivalent(d1, d2), "{d1:?} vs {d2:?}");
            }
        }
    }
    // the multiplicity check runs both ways, so on this family only equal
    // descriptions are bi-embeddable
    assert_eq!(bi, fam.len());
}

#[test]
fn embeddability_is_a_preorder_on_the_family() {
    let fam = description_family();
    for a in &fam {
        assert!(description_embeddable(a, a));
    }
    for a in fam.iter().step_by(7) {
        for b in &fam {
            if !description_embeddable(a, b) {
                continue;
            }
            for c in fam.iter().step_by(3) {
                if description_embeddable(b, c) {
                    assert!(description_embeddable(a, c));
                }
            }
        }
    }
}
