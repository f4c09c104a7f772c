use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::IntMatrix3;

/// Monic integer cubic `λ³ + p2·λ² + p1·λ + p0`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cubic {
    #[serde(with = "super::bigint_string")]
    pub p2: BigInt,
    #[serde(with = "super::bigint_string")]
    pub p1: BigInt,
    #[serde(with = "super::bigint_string")]
    pub p0: BigInt,
}

/// Closed interval `[lo, hi]` known to contain exactly one real root.
#[derive(Debug, Clone, PartialEq)]
pub struct RootInterval {
    pub lo: BigRational,
    pub hi: BigRational,
}

impl RootInterval {
    pub fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    pub fn midpoint_f64(&self) -> f64 {
        ((&self.lo + &self.hi) / BigRational::from_integer(2.into())).to_f64().unwrap_or(f64::NAN)
    }

    /// Bounds on `|root|`.
    pub fn abs_bounds(&self) -> (BigRational, BigRational) {
        if !self.lo.is_negative() {
            (self.lo.clone(), self.hi.clone())
        } else if !self.hi.is_positive() {
            (self.hi.abs(), self.lo.abs())
        } else {
            (BigRational::zero(), self.lo.abs().max(self.hi.abs()))
        }
    }
}

/// Exact characteristic polynomial `det(λI − M)`.
pub fn char_poly(m: &IntMatrix3) -> Cubic {
    Cubic { p2: -m.trace(), p1: m.principal_minor_sum(), p0: -m.det() }
}

pub fn discriminant(c: &Cubic) -> BigInt {
    c.discriminant()
}

pub fn is_perfect_square(n: &BigInt) -> bool {
    if n.is_negative() {
        return false;
    }
    let r = n.sqrt();
    &r * &r == *n
}

impl Cubic {
    pub fn new(p2: i64, p1: i64, p0: i64) -> Self {
        Cubic { p2: p2.into(), p1: p1.into(), p0: p0.into() }
    }

    pub fn discriminant(&self) -> BigInt {
        let (p, q, r) = (&self.p2, &self.p1, &self.p0);
        let p2 = p * p;
        let q2 = q * q;
        &p2 * &q2 - 4 * &q2 * q - 4 * &p2 * p * r - 27 * r * r + 18 * p * q * r
    }

    pub fn eval(&self, x: &BigRational) -> BigRational {
        let c = |v: &BigInt| BigRational::from_integer(v.clone());
        ((x + c(&self.p2)) * x + c(&self.p1)) * x + c(&self.p0)
    }

    pub fn eval_int(&self, x: &BigInt) -> BigInt {
        ((x + &self.p2) * x + &self.p1) * x + &self.p0
    }

    fn poly(&self) -> Poly {
        Poly::new(vec![
            BigRational::from_integer(self.p0.clone()),
            BigRational::from_integer(self.p1.clone()),
            BigRational::from_integer(self.p2.clone()),
            BigRational::one(),
        ])
    }

    /// Cauchy bound: every root has modulus below it.
    pub fn root_bound(&self) -> BigInt {
        let m = [&self.p2, &self.p1, &self.p0].into_iter().map(|x| x.abs()).max().unwrap();
        m + 1
    }

    /// Isolates every distinct real root to an interval of width at most
    /// `2^-bits`, using Sturm sequences and exact rational sign evaluation.
    pub fn real_roots(&self, bits: u32) -> Vec<RootInterval> {
        let p = self.poly();
        let sq = p.squarefree();
        let chain = sq.sturm_chain();
        let b = BigRational::from_integer(self.root_bound());
        let mut out = Vec::new();
        isolate(&chain, -b.clone(), b, &mut out);
        let eps = BigRational::new(BigInt::one(), BigInt::one() << bits);
        out.into_iter().map(|iv| refine(&chain, iv, &eps)).collect()
    }

    /// Multiplicity pattern of the roots: `true` when some root is repeated.
    pub fn has_repeated_root(&self) -> bool {
        self.discriminant().is_zero()
    }

    /// A monic integer cubic is reducible over ℚ iff it has an integer root.
    pub fn integer_root(&self) -> Option<BigInt> {
        for iv in self.real_roots(2) {
            let lo = floor(&iv.lo);
            let hi = ceil(&iv.hi);
            let mut k = lo;
            while k <= hi {
                if self.eval_int(&k).is_zero() {
                    return Some(k);
                }
                k += 1;
            }
        }
        None
    }

    pub fn is_irreducible(&self) -> bool {
        self.integer_root().is_none()
    }

    /// Approximate roots (real roots from isolation, complex pair from the
    /// coefficient relations). For diagnostics and test oracles.
    pub fn roots_f64(&self) -> Vec<(f64, f64)> {
        let reals: Vec<f64> = self.real_roots(120).iter().map(|r| r.midpoint_f64()).collect();
        if self.discriminant().is_negative() && reals.len() == 1 {
            let r = reals[0];
            let p2 = self.p2.to_f64().unwrap();
            let p0 = self.p0.to_f64().unwrap();
            // other two roots: sum = -p2 - r, product = -p0 / r
            let s = -p2 - r;
            let prod = -p0 / r;
            let re = s / 2.0;
            let im = (prod - re * re).max(0.0).sqrt();
            vec![(r, 0.0), (re, im), (re, -im)]
        } else {
            reals.into_iter().map(|r| (r, 0.0)).collect()
        }
    }
}

impl fmt::Display for Cubic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "λ³")?;
        for (c, pow) in [(&self.p2, "λ²"), (&self.p1, "λ"), (&self.p0, "")] {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { '−' } else { '+' };
            let a = c.abs();
            if a.is_one() && !pow.is_empty() {
                write!(f, "{sign}{pow}")?;
            } else {
                write!(f, "{sign}{a}{pow}")?;
            }
        }
        Ok(())
    }
}

fn floor(x: &BigRational) -> BigInt {
    x.floor().to_integer()
}

fn ceil(x: &BigRational) -> BigInt {
    x.ceil().to_integer()
}

/// Dense polynomial over ℚ, coefficients from the constant term upward.
#[derive(Debug, Clone)]
struct Poly(Vec<BigRational>);

impl Poly {
    fn new(mut c: Vec<BigRational>) -> Self {
        while c.len() > 1 && c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        Poly(c)
    }

    fn degree(&self) -> usize {
        self.0.len() - 1
    }

    fn is_zero(&self) -> bool {
        self.0.len() == 1 && self.0[0].is_zero()
    }

    fn eval(&self, x: &BigRational) -> BigRational {
        self.0.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
    }

    fn derivative(&self) -> Poly {
        if self.degree() == 0 {
            return Poly::new(vec![BigRational::zero()]);
        }
        Poly::new(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
                .collect(),
        )
    }

    fn div_rem(&self, d: &Poly) -> (Poly, Poly) {
        let mut r = self.0.clone();
        let dd = d.degree();
        let lead = d.0[dd].clone();
        if self.degree() < dd {
            return (Poly::new(vec![BigRational::zero()]), self.clone());
        }
        let mut q = vec![BigRational::zero(); self.degree() - dd + 1];
        for k in (0..q.len()).rev() {
            let coef = &r[k + dd] / &lead;
            for (j, dj) in d.0.iter().enumerate() {
                r[k + j] = &r[k + j] - &coef * dj;
            }
            q[k] = coef;
        }
        r.truncate(dd.max(1));
        (Poly::new(q), Poly::new(r))
    }

    fn gcd(&self, other: &Poly) -> Poly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let (_, r) = a.div_rem(&b);
            a = b;
            b = r;
        }
        a
    }

    fn squarefree(&self) -> Poly {
        let g = self.gcd(&self.derivative());
        if g.degree() == 0 {
            self.clone()
        } else {
            self.div_rem(&g).0
        }
    }

    fn sturm_chain(&self) -> Vec<Poly> {
        let mut chain = vec![self.clone(), self.derivative()];
        loop {
            let n = chain.len();
            if chain[n - 1].is_zero() || chain[n - 1].degree() == 0 {
                break;
            }
            let (_, r) = chain[n - 2].div_rem(&chain[n - 1]);
            if r.is_zero() {
                break;
            }
            chain.push(Poly::new(r.0.into_iter().map(|c| -c).collect()));
        }
        chain
    }
}

fn sign_changes(chain: &[Poly], x: &BigRational) -> usize {
    let mut prev = 0i8;
    let mut count = 0;
    for p in chain {
        let v = p.eval(x);
        let s = if v.is_positive() {
            1
        } else if v.is_negative() {
            -1
        } else {
            0
        };
        if s != 0 {
            if prev != 0 && s != prev {
                count += 1;
            }
            prev = s;
        }
    }
    count
}

fn isolate(chain: &[Poly], lo: BigRational, hi: BigRational, out: &mut Vec<RootInterval>) {
    let n = sign_changes(chain, &lo) - sign_changes(chain, &hi);
    match n {
        0 => {}
        1 => out.push(RootInterval { lo, hi }),
        _ => {
            let mid = (&lo + &hi) / BigRational::from_integer(2.into());
            isolate(chain, lo, mid.clone(), out);
            isolate(chain, mid, hi, out);
        }
    }
}

/// Bisects an isolating interval `(lo, hi]` by Sturm counts until it is
/// narrower than `eps`.
fn refine(chain: &[Poly], mut iv: RootInterval, eps: &BigRational) -> RootInterval {
    let two = BigRational::from_integer(2.into());
    if chain[0].eval(&iv.hi).is_zero() {
        return RootInterval { lo: iv.hi.clone(), hi: iv.hi };
    }
    while iv.width() > *eps {
        let mid = (&iv.lo + &iv.hi) / &two;
        if chain[0].eval(&mid).is_zero() {
            return RootInterval { lo: mid.clone(), hi: mid };
        }
        if sign_changes(chain, &iv.lo) - sign_changes(chain, &mid) == 1 {
            iv.hi = mid;
        } else {
            iv.lo = mid;
        }
    }
    iv
}
