use super::*;
use crate::scalar::q;
use alloc::vec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn words(list: &[&[u8]]) -> Vec<Word> {
    list.iter().map(|w| Word::new(w.to_vec())).collect()
}

fn random_series(alg: &FreeLieAlgebra, rng: &mut ChaCha8Rng) -> LieSeries {
    let coeffs = (0..alg.dimension())
        .map(|_| (rng.next_u64() as f64 / u64::MAX as f64) * 2.0 - 1.0)
        .collect();
    alg.from_coeffs(coeffs).unwrap()
}

#[test]
fn basis_examples() {
    let b = generate_basis(2, 2).unwrap();
    let got: Vec<Word> = b.iter().map(|e| e.word.clone()).collect();
    assert_eq!(got, words(&[&[1], &[2], &[1, 2]]));

    let b = generate_basis(2, 3).unwrap();
    let got: Vec<Word> = b.iter().map(|e| e.word.clone()).collect();
    assert_eq!(got, words(&[&[1], &[2], &[1, 2], &[1, 1, 2], &[1, 2, 2]]));

    let b = generate_basis(1, 3).unwrap();
    assert_eq!(b.len(), 1);
}

#[test]
fn per_level_counts_follow_witt() {
    for d in 1..=3usize {
        let alg = FreeLieAlgebra::new(d, 5).unwrap();
        for k in 1..=5 {
            assert_eq!(alg.level_range(k).len() as u64, witt_dimension(d as u64, k as u64));
        }
    }
}

#[test]
fn dimension_cap_is_enforced() {
    assert!(matches!(
        FreeLieAlgebra::new(3, 8),
        Err(Error::DimensionCap { .. })
    ));
    assert!(FreeLieAlgebra::with_cap(2, 8, 2000).is_ok());
}

#[test]
fn bracket_of_generators() {
    let alg = FreeLieAlgebra::new(2, 2).unwrap();
    let c = alg.bracket(&alg.generator(1), &alg.generator(2)).unwrap();
    assert_eq!(c.coeffs(), &[0.0, 0.0, 1.0]);
    let a = alg.from_coeffs(vec![0.3, -1.0, 2.0]).unwrap();
    assert_eq!(alg.bracket(&a, &a).unwrap().max_abs(), 0.0);
}

#[test]
fn bracket_rejects_foreign_series() {
    let a2 = FreeLieAlgebra::new(2, 2).unwrap();
    let a3 = FreeLieAlgebra::new(3, 2).unwrap();
    assert!(matches!(
        a2.bracket(&a2.generator(1), &a3.generator(1)),
        Err(Error::DimensionMismatch(_))
    ));
}

#[test]
fn level_three_brackets_follow_standard_factorization() {
    let alg = FreeLieAlgebra::new(2, 3).unwrap();
    // [1,[1,2]] is the basis element 112, [[1,2],2] is 122
    let e1 = alg.generator(1);
    let e2 = alg.generator(2);
    let e12 = alg.bracket(&e1, &e2).unwrap();
    let x = alg.bracket(&e1, &e12).unwrap();
    assert_eq!(alg.coefficient(&x, &Word::new(vec![1, 1, 2])), Some(1.0));
    let y = alg.bracket(&e12, &e2).unwrap();
    assert_eq!(alg.coefficient(&y, &Word::new(vec![1, 2, 2])), Some(1.0));
    // [2,[1,2]] = -[[1,2],2]
    let z = alg.bracket(&e2, &e12).unwrap();
    assert_eq!(alg.coefficient(&z, &Word::new(vec![1, 2, 2])), Some(-1.0));
}

fn unit(alg: &FreeLieAlgebra, i: usize) -> Vec<Q> {
    let mut v = vec![Q::from_integer(0); alg.dimension()];
    v[i] = Q::from_integer(1);
    v
}

#[test]
fn exact_antisymmetry_and_jacobi_on_basis_triples() {
    for (d, depth) in [(2usize, 6usize), (3, 4)] {
        let alg = FreeLieAlgebra::new(d, depth).unwrap();
        let n = alg.dimension();
        let level = |i: usize| alg.basis()[i].level;
        for i in 0..n {
            for j in 0..n {
                if level(i) + level(j) > depth {
                    continue;
                }
                let ij = alg.bracket_exact(&unit(&alg, i), &unit(&alg, j));
                let ji = alg.bracket_exact(&unit(&alg, j), &unit(&alg, i));
                assert!(ij.iter().zip(&ji).all(|(a, b)| *a == -*b));
                for k in 0..n {
                    if level(i) + level(j) + level(k) > depth {
                        continue;
                    }
                    let (ei, ej, ek) = (unit(&alg, i), unit(&alg, j), unit(&alg, k));
                    let a = alg.bracket_exact(&ei, &alg.bracket_exact(&ej, &ek));
                    let b = alg.bracket_exact(&ej, &alg.bracket_exact(&ek, &ei));
                    let c = alg.bracket_exact(&ek, &alg.bracket_exact(&ei, &ej));
                    for t in 0..n {
                        assert_eq!(a[t] + b[t] + c[t], Q::from_integer(0), "d={d} ({i},{j},{k})");
                    }
                }
            }
        }
    }
}

#[test]
fn random_jacobi_in_floating_point() {
    let alg = FreeLieAlgebra::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..50 {
        let (a, b, c) = (
            random_series(&alg, &mut rng),
            random_series(&alg, &mut rng),
            random_series(&alg, &mut rng),
        );
        let j1 = alg.bracket(&a, &alg.bracket(&b, &c).unwrap()).unwrap();
        let j2 = alg.bracket(&b, &alg.bracket(&c, &a).unwrap()).unwrap();
        let j3 = alg.bracket(&c, &alg.bracket(&a, &b).unwrap()).unwrap();
        assert!(j1.add(&j2).add(&j3).max_abs() < 1e-12);
    }
}

#[test]
fn bch_step_two_closed_form() {
    let alg = FreeLieAlgebra::new(2, 2).unwrap();
    let x = alg.from_coeffs(vec![0.4, -0.7, 0.2]).unwrap();
    let y = alg.from_coeffs(vec![1.1, 0.3, -0.5]).unwrap();
    let z = alg.bch(&x, &y).unwrap();
    let half_bracket = alg.bracket(&x, &y).unwrap().scale(0.5);
    let want = x.add(&y).add(&half_bracket);
    assert!(z.max_abs_diff(&want) < 1e-15);
}

#[test]
fn bch_identities() {
    let alg = FreeLieAlgebra::new(3, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let a = random_series(&alg, &mut rng);
    assert!(alg.bch(&a, &alg.zero()).unwrap().max_abs_diff(&a) < 1e-15);
    assert!(alg.bch(&alg.zero(), &a).unwrap().max_abs_diff(&a) < 1e-15);
    assert!(alg.bch(&a, &a.neg()).unwrap().max_abs() < 1e-12);
}

#[test]
fn bch_known_coefficients() {
    let alg = FreeLieAlgebra::new(2, 4).unwrap();
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1])), Some(q(1, 1)));
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1, 2])), Some(q(1, 2)));
    // [X,[X,Y]] / 12 and [[X,Y],Y] / 12
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1, 1, 2])), Some(q(1, 12)));
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1, 2, 2])), Some(q(1, 12)));
    // level 4 is only the [Y,[X,[X,Y]]] / 24 term
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1, 1, 1, 2])), Some(q(0, 1)));
    assert_eq!(alg.bch_coefficient(&Word::new(vec![1, 2, 2, 2])), Some(q(0, 1)));
}

#[test]
fn bch_associativity_random() {
    let alg = FreeLieAlgebra::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let (a, b, c) = (
            random_series(&alg, &mut rng),
            random_series(&alg, &mut rng),
            random_series(&alg, &mut rng),
        );
        let left = alg.bch(&alg.bch(&a, &b).unwrap(), &c).unwrap();
        let right = alg.bch(&a, &alg.bch(&b, &c).unwrap()).unwrap();
        assert!(left.max_abs_diff(&right) < 1e-12);
    }
}

#[test]
fn bch_agrees_with_tensor_exp_log() {
    for (d, depth) in [(2usize, 4usize), (3, 3), (2, 6)] {
        let alg = FreeLieAlgebra::new(d, depth).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(d as u64 * 100 + depth as u64);
        for _ in 0..20 {
            let a = random_series(&alg, &mut rng);
            let b = random_series(&alg, &mut rng);
            let via_lie = alg.bch(&a, &b).unwrap();
            let ea = alg.to_tensor(&a).exp().unwrap();
            let eb = alg.to_tensor(&b).exp().unwrap();
            let log = ea.mul(&eb).unwrap().log().unwrap();
            let via_tensor = alg.project(&log).unwrap();
            assert!(via_lie.max_abs_diff(&via_tensor) < 1e-12, "d={d} L={depth}");
        }
    }
}

#[test]
fn projection_roundtrip_and_rejection() {
    let alg = FreeLieAlgebra::new(3, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_series(&alg, &mut rng);
    let back = alg.project(&alg.to_tensor(&a)).unwrap();
    assert!(back.max_abs_diff(&a) < 1e-14);

    // a lone word of length 2 is not a Lie element
    let mut t = TensorSeries::<f64>::zero(3, 3);
    t.level_mut(2)[1] = 1.0;
    assert!(matches!(alg.project(&t), Err(Error::NotPrimitive(_))));
}

#[test]
fn linear_part_of_bch_is_its_derivative() {
    let alg = FreeLieAlgebra::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let g = random_series(&alg, &mut rng);
    let y = random_series(&alg, &mut rng);
    let h = 1e-5;
    let plus = alg.bch(&g, &y.scale(h)).unwrap();
    let minus = alg.bch(&g, &y.scale(-h)).unwrap();
    let fd = plus.sub(&minus).scale(0.5 / h);
    let exact = alg.bch_linear_in_second(&g, &y).unwrap();
    assert!(fd.max_abs_diff(&exact) < 1e-8);
}

#[test]
fn right_nested_brackets() {
    let alg = FreeLieAlgebra::new(2, 3).unwrap();
    let r = alg.right_nested(&Word::new(vec![1, 1, 2]));
    assert_eq!(alg.coefficient(&r, &Word::new(vec![1, 1, 2])), Some(1.0));
    let r = alg.right_nested(&Word::new(vec![1, 2, 2]));
    // [1,[2,2]] = 0
    assert_eq!(r.max_abs(), 0.0);
}
