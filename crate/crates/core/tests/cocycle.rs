use gasket_core::cocycle::*;
use gasket_core::exact::{char_poly, Branch, IntMatrix3, Perm};
use gasket_core::induction::{word_transfer, PathStep, Word};
use num_bigint::BigInt;
use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn b1() -> IntMatrix3 {
    IntMatrix3::from_rows([[12, 6, 5], [11, 6, 5], [2, 1, 1]])
}

fn b2() -> IntMatrix3 {
    IntMatrix3::from_rows([[10, 5, 4], [9, 5, 4], [2, 1, 1]])
}

fn random_word(rng: &mut ChaCha8Rng, max_len: usize) -> Word {
    let len = rng.random_range(1..=max_len);
    let steps = (0..len)
        .map(|_| PathStep::new(if rng.random_bool(0.5) { Branch::Two } else { Branch::Three }, rng.random_range(1..=9)))
        .collect();
    Word::new(Perm::ALL[rng.random_range(0..6)], steps)
}

fn loop_word(counts: [u64; 3]) -> Word {
    // (1,2,3) → (2,3,1) → (3,1,2) → (1,2,3)
    Word::new(Perm::IDENTITY, counts.iter().map(|&n| PathStep::new(Branch::Three, n)).collect())
}

#[test]
fn a_is_inverse_transpose_of_b() {
    for n in 1..=100 {
        let b = b_block(n).unwrap();
        assert!(b.det().is_one());
        assert_eq!(b.transpose().inverse_unimodular().unwrap(), a_block(n).unwrap());
        assert!(fixes_backtrack_vector(&a_block(n).unwrap()));
    }
    assert_eq!(b_block(2).unwrap(), IntMatrix3::from_rows([[1, 0, 0], [2, 1, 0], [2, 0, 1]]));
}

#[test]
fn duality_on_random_words() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..1000 {
        let w = random_word(&mut rng, 20);
        let b = path_cocycle(&w, Variant::B).product;
        let a = path_cocycle(&w, Variant::A).product;
        assert_eq!(b.transpose().inverse_unimodular().unwrap(), a);
        assert!(b.det().abs().is_one());
        assert!(a.det().abs().is_one());
    }
}

#[test]
fn b_product_is_sorted_frame_length_transfer() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..200 {
        let w = random_word(&mut rng, 10);
        let m = word_transfer(&w);
        let sorted = &(&w.start.matrix().transpose() * &m) * &w.final_order().matrix();
        assert_eq!(path_cocycle(&w, Variant::B).product.transpose(), sorted);
    }
}

#[test]
fn loop_reproduces_b1_and_b2() {
    let total = |c: [u64; 3]| path_cocycle(&loop_word(c), Variant::B).product;
    let shifted = |c: [u64; 3]| path_cocycle(&loop_word(c.map(|n| n + 1)), Variant::B).product;
    for (name, counts, target) in [("B1", [1, 1, 5], b1()), ("B2", [1, 1, 4], b2())] {
        let direct = total(counts) == target;
        let plus_one = shifted(counts) == target;
        println!(
            "{name}: counts {counts:?} as total simple steps: {direct}; as extra steps: {plus_one}"
        );
        assert!(direct || plus_one, "{name} not reproduced under either convention");
        assert!(direct, "{name}: expected the total-steps convention to match");
    }
}

#[test]
fn complete_paths_are_positive() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut complete = 0;
    for _ in 0..2000 {
        let w = random_word(&mut rng, 12);
        if w.is_complete() {
            complete += 1;
            assert!(is_positive_path(&w), "{}", w.to_compact());
            let ext = w.concat(&random_word_from(&mut rng, w.final_order()));
            assert!(is_positive_path(&ext));
        }
    }
    assert!(complete > 100);
}

fn random_word_from(rng: &mut ChaCha8Rng, start: Perm) -> Word {
    let mut w = random_word(rng, 5);
    w.start = start;
    w
}

#[test]
fn subtractive_matches_matrix_action() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut checked = 0;
    while checked < 100 {
        let x1 = rng.random_range(1..50i64);
        let n = rng.random_range(1..6i64);
        let x2 = x1 * (n + 1) + rng.random_range(1..x1.max(2));
        let x3 = x1 * (n + 1) + rng.random_range(1..x1.max(2));
        if x2 == x3 || x2 - n * x1 == x1 || x3 - n * x1 == x1 {
            continue;
        }
        let mut x = [x1, x2, x3];
        for _ in 0..n {
            x = fully_subtractive_step(x).unwrap();
        }
        let m = IntMatrix3::from_rows([[1, 0, 0], [-n, 1, 0], [-n, 0, 1]]);
        let y = m.apply(&[x1, x2, x3].map(BigInt::from));
        assert_eq!(y, x.map(BigInt::from));
        checked += 1;
    }
}

#[test]
fn pisot_certificates() {
    for m in [b1(), b2()] {
        let bracket = pisot_bracket(&m).unwrap().expect("Pisot");
        let c = char_poly(&m);
        // the bracket endpoints straddle a sign change of the polynomial
        let lo = c.eval(&bracket.lo);
        let hi = c.eval(&bracket.hi);
        assert!(lo.is_negative() != hi.is_negative() || lo == hi);
        assert!(is_pisot(&m).unwrap());
    }
    assert!(!is_pisot(&IntMatrix3::identity()).unwrap());
    assert!(b1_dominant() > 18.0);
}

fn b1_dominant() -> f64 {
    char_poly(&b1()).roots_f64().iter().map(|r| r.0).fold(f64::MIN, f64::max)
}

#[test]
fn pinching_and_twisting() {
    let (p1, c1) = is_galois_pinching(&b1());
    assert!(p1);
    assert_eq!(c1.discriminant, "1940");
    assert_eq!(c1.char_poly, "λ³−19λ²+9λ−1");
    let (p2, c2) = is_galois_pinching(&b2());
    assert!(p2);
    assert_eq!(c2.discriminant, "229");
    assert!(!is_galois_pinching(&b_block(1).unwrap()).0);

    let (t, cert) = is_twisting_pair(&b1(), &b2());
    assert!(t);
    assert_eq!(cert.discriminant_product, "444260");
    assert!(!cert.product_is_square);
    assert!(!is_twisting_pair(&b1(), &b1()).0);
    assert!(!is_twisting_pair(&b1(), &IntMatrix3::identity()).0);

    let json = serde_json::to_value(&c1).unwrap();
    for key in ["matrix", "char_poly", "discriminant", "pinching", "pisot", "facts"] {
        assert!(json.get(key).is_some(), "{key}");
    }
}

#[test]
fn backtrack_vector_along_words_is_recorded() {
    // the permutation-free blocks fix (0,1,−1); along full words the frame
    // changes act on coordinates, so this only reports the proportion
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let mut fixed = 0;
    for _ in 0..500 {
        let w = random_word(&mut rng, 6);
        if fixes_backtrack_vector(&path_cocycle(&w, Variant::A).product) {
            fixed += 1;
        }
    }
    println!("A_w fixes (0,1,-1) on {fixed}/500 random words");
}
