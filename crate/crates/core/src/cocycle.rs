//! The width cocycle `B` and the orientation cocycle `A` over accelerated
//! induction, with the algebraic certificates used for simplicity of the
//! Lyapunov spectrum.
//!
//! Products are taken in the sorted frame: each accelerated step contributes
//! its block followed by the change of frame of its branch,
//! `B_w = S_K^T B(n_K) ⋯ S_1^T B(n_1)`, and likewise for `A`. With this
//! ordering `(B_w^T)^{-1} = A_w` holds exactly.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{char_poly, is_perfect_square, Cubic, IntMatrix3, RootInterval};
use crate::induction::{PathStep, Word};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CocycleError {
    #[error("block index must be at least 1")]
    NonPositiveN,
    #[error("coordinates must be strictly positive and distinct")]
    TieOrNonPositive,
    #[error("root isolation inconclusive at {bits} bits")]
    UncertifiedRoots { bits: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    B,
    A,
}

/// `B(n) = [[1,0,0],[n,1,0],[n,0,1]]`.
pub fn b_block(n: u64) -> Result<IntMatrix3, CocycleError> {
    if n == 0 {
        return Err(CocycleError::NonPositiveN);
    }
    let n = n as i64;
    Ok(IntMatrix3::from_rows([[1, 0, 0], [n, 1, 0], [n, 0, 1]]))
}

/// `A(n) = [[1,−n,−n],[0,1,0],[0,0,1]]`.
pub fn a_block(n: u64) -> Result<IntMatrix3, CocycleError> {
    if n == 0 {
        return Err(CocycleError::NonPositiveN);
    }
    let n = n as i64;
    Ok(IntMatrix3::from_rows([[1, -n, -n], [0, 1, 0], [0, 0, 1]]))
}

/// One step's contribution `S^T X(n)`.
pub fn step_matrix(step: PathStep, variant: Variant) -> IntMatrix3 {
    let block = match variant {
        Variant::B => b_block(step.n),
        Variant::A => a_block(step.n),
    }
    .expect("path steps have n >= 1");
    &step.branch.frame_change().transpose() * &block
}

/// Cocycle product along a word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CocyclePath {
    pub word: Word,
    pub variant: Variant,
    pub product: IntMatrix3,
    /// Permutation matrix of the order reached at the end of the word.
    pub permutation: IntMatrix3,
}

pub fn path_cocycle(w: &Word, variant: Variant) -> CocyclePath {
    let product = w
        .steps
        .iter()
        .fold(IntMatrix3::identity(), |acc, &st| &step_matrix(st, variant) * &acc);
    CocyclePath { word: w.clone(), variant, product, permutation: w.final_order().matrix() }
}

/// All entries of the `B` product are at least 1.
pub fn is_positive_path(w: &Word) -> bool {
    path_cocycle(w, Variant::B).product.is_positive()
}

/// Subtract the smallest coordinate from the other two.
pub fn fully_subtractive_step(x: [i64; 3]) -> Result<[i64; 3], CocycleError> {
    if x.iter().any(|&v| v <= 0) || x[0] == x[1] || x[1] == x[2] || x[0] == x[2] {
        return Err(CocycleError::TieOrNonPositive);
    }
    let k = (0..3).min_by_key(|&i| x[i]).unwrap();
    Ok(std::array::from_fn(|i| if i == k { x[i] } else { x[i] - x[k] }))
}

const ISOLATION_BITS: [u32; 5] = [32, 64, 128, 256, 1024];

/// Certified Pisot test: a simple real root above 1 and the other two roots
/// strictly inside the unit disk.
pub fn is_pisot(m: &IntMatrix3) -> Result<bool, CocycleError> {
    pisot_bracket(m).map(|b| b.is_some())
}

/// The certified bracket of the dominant root when `m` is Pisot.
pub fn pisot_bracket(m: &IntMatrix3) -> Result<Option<RootInterval>, CocycleError> {
    let c = char_poly(m);
    let one = BigRational::one();
    let delta = c.discriminant();
    if delta.is_zero() {
        return Ok(pisot_repeated(&c));
    }
    let mut last = 0;
    for bits in ISOLATION_BITS {
        last = bits;
        let mut roots = c.real_roots(bits);
        roots.sort_by(|a, b| a.lo.cmp(&b.lo));
        let top = roots.last().cloned().expect("odd degree has a real root");
        if delta.is_positive() {
            // three real roots; the top one must exceed 1, the rest |.| < 1
            let others_hi: Vec<BigRational> = roots[..roots.len() - 1].iter().map(|r| r.abs_bounds().1).collect();
            let others_lo: Vec<BigRational> = roots[..roots.len() - 1].iter().map(|r| r.abs_bounds().0).collect();
            if top.hi <= one || others_lo.iter().any(|l| *l >= one) {
                return Ok(None);
            }
            if top.lo > one && others_hi.iter().all(|h| *h < one) {
                return Ok(Some(top));
            }
        } else {
            // one real root r; the complex pair has modulus² = |p0| / |r|
            let p0 = BigRational::from_integer(c.p0.abs());
            let (r_lo, r_hi) = top.abs_bounds();
            if top.hi <= one || r_hi <= p0 {
                return Ok(None);
            }
            if top.lo > one && r_lo > p0 {
                return Ok(Some(top));
            }
        }
    }
    Err(CocycleError::UncertifiedRoots { bits: last })
}

/// Pisot test for a cubic with a repeated root, which is then rational.
fn pisot_repeated(c: &Cubic) -> Option<RootInterval> {
    let (p, q, r) = (
        BigRational::from_integer(c.p2.clone()),
        BigRational::from_integer(c.p1.clone()),
        BigRational::from_integer(c.p0.clone()),
    );
    let denom = &p * &p - BigRational::from_integer(3.into()) * &q;
    if denom.is_zero() {
        return None; // triple root
    }
    let two = BigRational::from_integer(2.into());
    let double = (BigRational::from_integer(9.into()) * &r - &p * &q) / (&two * &denom);
    let simple = -&p - &two * &double;
    let one = BigRational::one();
    (simple > one && double.abs() < one).then(|| RootInterval { lo: simple.clone(), hi: simple })
}

/// Machine-readable record of the algebraic facts about one matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub matrix: IntMatrix3,
    pub char_poly: String,
    pub coefficients: Cubic,
    pub discriminant: String,
    pub irreducible: bool,
    pub totally_real: bool,
    pub square_discriminant: bool,
    pub pinching: bool,
    /// `None` when root isolation was inconclusive.
    pub pisot: Option<bool>,
    pub facts: Vec<String>,
}

/// Galois-pinching: irreducible over ℚ, three real roots and a non-square
/// discriminant (Galois group `S_3`).
pub fn is_galois_pinching(m: &IntMatrix3) -> (bool, Certificate) {
    let c = char_poly(m);
    let delta = c.discriminant();
    let irreducible = c.is_irreducible();
    let totally_real = delta.is_positive();
    let square = !delta.is_negative() && is_perfect_square(&delta);
    let pinching = irreducible && totally_real && !square;
    let pisot = is_pisot(m).ok();
    let mut facts = Vec::new();
    facts.push(format!("characteristic polynomial {c}"));
    match c.integer_root() {
        None => facts.push("no integer root, hence irreducible over Q".into()),
        Some(k) => facts.push(format!("integer root {k}, hence reducible")),
    }
    facts.push(format!("discriminant {delta} is {}", if totally_real { "positive: three real roots" } else { "not positive" }));
    if totally_real {
        facts.push(format!("discriminant {} a perfect square", if square { "is" } else { "is not" }));
    }
    match pisot {
        Some(true) => facts.push("Pisot: simple dominant root above 1, others inside the unit disk".into()),
        Some(false) => facts.push("not Pisot".into()),
        None => facts.push("Pisot property not certified".into()),
    }
    let cert = Certificate {
        matrix: m.clone(),
        char_poly: c.to_string(),
        discriminant: delta.to_string(),
        coefficients: c,
        irreducible,
        totally_real,
        square_discriminant: square,
        pinching,
        pisot,
        facts,
    };
    (pinching, cert)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwistingCertificate {
    pub first: Certificate,
    pub second: Certificate,
    pub distinct_polynomials: bool,
    pub discriminant_product: String,
    pub product_is_square: bool,
    pub twisting: bool,
    pub facts: Vec<String>,
}

/// Twisting of `m2` relative to `m1`: both pinching, distinct characteristic
/// polynomials, and disjoint quadratic resolvent fields (`Δ₁Δ₂` not a square).
pub fn is_twisting_pair(m1: &IntMatrix3, m2: &IntMatrix3) -> (bool, TwistingCertificate) {
    let (p1, first) = is_galois_pinching(m1);
    let (p2, second) = is_galois_pinching(m2);
    let distinct = first.coefficients != second.coefficients;
    let d1: BigInt = first.discriminant.parse().expect("integer");
    let d2: BigInt = second.discriminant.parse().expect("integer");
    let product = &d1 * &d2;
    let product_square = !product.is_negative() && is_perfect_square(&product);
    let twisting = p1 && p2 && distinct && !product_square;
    let mut facts = vec![
        format!("first matrix {}", if p1 { "is Galois-pinching" } else { "is not Galois-pinching" }),
        format!("second matrix {}", if p2 { "is Galois-pinching" } else { "is not Galois-pinching" }),
        format!("characteristic polynomials {}", if distinct { "differ" } else { "coincide" }),
        format!("discriminant product {product} {} a perfect square", if product_square { "is" } else { "is not" }),
    ];
    if twisting {
        facts.push("quadratic subfields differ, so the splitting fields are disjoint".into());
    }
    let cert = TwistingCertificate {
        first,
        second,
        distinct_polynomials: distinct,
        discriminant_product: product.to_string(),
        product_is_square: product_square,
        twisting,
        facts,
    };
    (twisting, cert)
}

/// Whether `A_w` fixes the vector `(0,1,−1)`.
pub fn fixes_backtrack_vector(a: &IntMatrix3) -> bool {
    let v = [BigInt::zero(), BigInt::one(), -BigInt::one()];
    a.apply(&v) == v
}
