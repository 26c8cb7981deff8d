mod common;

use common::dense::*;
use floquet_core::PauliWord;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn basis(size: usize, i: usize) -> State {
    let mut v = vec![Complex64::new(0.0, 0.0); size];
    v[i] = Complex64::new(1.0, 0.0);
    v
}

#[test]
fn dense_operators_follow_normal_order() {
    // Products computed by the engine agree with matrix products.
    for dim in [2u32, 3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        for _ in 0..50 {
            let a = random_word(2, dim, &mut rng);
            let b = random_word(2, dim, &mut rng);
            let ab = a.mul(&b).unwrap();
            let size = (dim * dim) as usize;
            for i in 0..size {
                let lhs = apply(&ab, &basis(size, i));
                let rhs = apply(&a, &apply(&b, &basis(size, i)));
                assert!(lhs.iter().zip(&rhs).all(|(x, y)| (x - y).norm() < 1e-12));
            }
        }
    }
}

#[test]
fn measurable_words_have_nth_power_identity() {
    for dim in [2u32, 3, 4] {
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
        for _ in 0..50 {
            let w = random_word(3, dim, &mut rng);
            let size = (dim as usize).pow(3);
            let mut v = basis(size, 5);
            for _ in 0..dim {
                v = apply(&w, &v);
            }
            assert!((v[5] - 1.0).norm() < 1e-9);
        }
    }
}

#[test]
fn qubit_y_is_hermitian() {
    let y = PauliWord::y_on(1, 0);
    let v = apply(&y, &basis(2, 0));
    assert!((v[1] - Complex64::new(0.0, 1.0)).norm() < 1e-12);
}

#[test]
fn engine_matches_state_vectors() {
    for (dim, seed) in [(2u32, 1u64), (3, 2), (4, 3)] {
        let rep = run_oracle(dim, 300, 6, seed);
        assert!(rep.passed(), "N={dim}: {rep:?}");
    }
}
