use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::{ExactError, Perm};

/// Default working precision of [`SimplexPoint`]s, in bits.
pub const DEFAULT_PRECISION: u32 = 256;

/// Parses an exact rational from `"3/5"`, `"0.6"`, `"6e-1"` or `"2"`.
pub fn parse_rational(s: &str) -> Result<BigRational, ExactError> {
    let bad = || ExactError::Parse(s.to_string());
    let t = s.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(n, d));
    }
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all = format!("{int_part}{frac_part}");
    let mut num: BigInt = if all.is_empty() { BigInt::zero() } else { all.parse().map_err(|_| bad())? };
    if neg {
        num = -num;
    }
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    Ok(if scale >= 0 {
        BigRational::from_integer(num * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(num, num_traits::pow(ten, (-scale) as usize))
    })
}

pub fn rational_to_string(x: &BigRational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Clears denominators: the integer vector on the same projective ray.
pub fn integer_ray(v: &[BigRational; 3]) -> [BigInt; 3] {
    let l = v[0].denom().lcm(v[1].denom()).lcm(v[2].denom());
    let ints: [BigInt; 3] = std::array::from_fn(|i| (&v[i] * BigRational::from_integer(l.clone())).to_integer());
    let g = ints[0].gcd(&ints[1]).gcd(&ints[2]);
    if g.is_zero() || g.is_one() {
        ints
    } else {
        ints.map(|x| x / &g)
    }
}

/// Normalized exact lengths `(l₁, l₂, l₃)` of a special system of isometries
/// together with their decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpecialSystem {
    lengths: [BigRational; 3],
    tau: Perm,
}

impl SpecialSystem {
    /// Rescales to unit sum and records the order. Ties are rejected.
    pub fn new(lengths: [BigRational; 3]) -> Result<Self, ExactError> {
        if lengths.iter().any(|l| !l.is_positive()) {
            return Err(ExactError::NonPositiveLength);
        }
        let total = &lengths[0] + &lengths[1] + &lengths[2];
        let lengths = lengths.map(|l| l / &total);
        let tau = Perm::sorting(&lengths).ok_or(ExactError::DegenerateOrder)?;
        Ok(SpecialSystem { lengths, tau })
    }

    pub fn from_strs(l: [&str; 3]) -> Result<Self, ExactError> {
        Self::new([parse_rational(l[0])?, parse_rational(l[1])?, parse_rational(l[2])?])
    }

    pub fn from_integers(v: &[BigInt; 3]) -> Result<Self, ExactError> {
        Self::new(v.clone().map(BigRational::from_integer))
    }

    pub fn lengths(&self) -> &[BigRational; 3] {
        &self.lengths
    }

    pub fn tau(&self) -> Perm {
        self.tau
    }

    /// Sorted values `(a, b, c)` with `a > b > c`.
    pub fn sorted(&self) -> [BigRational; 3] {
        self.tau.0.map(|l| self.lengths[l as usize].clone())
    }

    pub fn to_f64(&self) -> [f64; 3] {
        self.lengths.clone().map(|l| l.to_f64().unwrap_or(f64::NAN))
    }

    pub fn integer_ray(&self) -> [BigInt; 3] {
        integer_ray(&self.lengths)
    }
}

/// `make_system` under its contract name.
pub fn make_system(l1: BigRational, l2: BigRational, l3: BigRational) -> Result<SpecialSystem, ExactError> {
    SpecialSystem::new([l1, l2, l3])
}

impl fmt::Display for SpecialSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.lengths;
        write!(
            f,
            "({}, {}, {}) τ={}",
            rational_to_string(a),
            rational_to_string(b),
            rational_to_string(c),
            self.tau
        )
    }
}

impl Serialize for SpecialSystem {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            lengths: [String; 3],
            tau: [u8; 3],
        }
        Repr { lengths: self.lengths.clone().map(|l| rational_to_string(&l)), tau: self.tau.labels() }
            .serialize(s)
    }
}

/// A point of the parameter simplex kept as a non-negative integer ray plus a
/// per-coordinate absolute error bound.
///
/// The true point lies in the box `coords ± err` (projectively). Markov-map
/// iterations only subtract, so the ray shrinks while the error grows; once a
/// branch comparison falls inside the error box the point has exhausted its
/// precision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimplexPoint {
    pub(crate) coords: [BigInt; 3],
    pub(crate) err: [BigInt; 3],
    precision: u32,
}

impl SimplexPoint {
    /// An exact point on the ray of `v` (no error).
    pub fn exact(v: [BigInt; 3]) -> Result<Self, ExactError> {
        if v.iter().any(|x| x.is_negative()) || v.iter().all(|x| x.is_zero()) {
            return Err(ExactError::NonPositiveLength);
        }
        let precision = (&v[0] + &v[1] + &v[2]).bits() as u32;
        Ok(SimplexPoint { coords: v, err: Default::default(), precision })
    }

    /// Rounds the ray of `v` to `bits` bits: coordinates sum to about `2^bits`
    /// and each carries one unit of error.
    pub fn from_ray(v: &[BigInt; 3], bits: u32) -> Result<Self, ExactError> {
        if v.iter().any(|x| x.is_negative()) || v.iter().all(|x| x.is_zero()) {
            return Err(ExactError::NonPositiveLength);
        }
        let total = &v[0] + &v[1] + &v[2];
        let scale = BigInt::one() << bits;
        let coords = std::array::from_fn(|i| (&v[i] * &scale).div_floor(&total));
        Ok(SimplexPoint { coords, err: std::array::from_fn(|_| BigInt::one()), precision: bits })
    }

    pub fn from_rationals(v: &[BigRational; 3], bits: u32) -> Result<Self, ExactError> {
        if v.iter().any(|x| x.is_negative()) {
            return Err(ExactError::NonPositiveLength);
        }
        Self::from_ray(&integer_ray(v), bits)
    }

    pub fn from_f64(v: [f64; 3], bits: u32) -> Result<Self, ExactError> {
        let mut r: [BigRational; 3] = Default::default();
        for (slot, x) in r.iter_mut().zip(v) {
            if !x.is_finite() || x < 0.0 {
                return Err(ExactError::NonPositiveLength);
            }
            *slot = BigRational::from_float(x).ok_or(ExactError::NonPositiveLength)?;
        }
        Self::from_rationals(&r, bits)
    }

    pub fn from_system(s: &SpecialSystem) -> Self {
        Self::exact(s.integer_ray()).expect("positive system")
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn ray(&self) -> &[BigInt; 3] {
        &self.coords
    }

    pub fn error(&self) -> &[BigInt; 3] {
        &self.err
    }

    pub fn is_exact(&self) -> bool {
        self.err.iter().all(|e| e.is_zero())
    }

    pub fn total(&self) -> BigInt {
        &self.coords[0] + &self.coords[1] + &self.coords[2]
    }

    /// Normalized coordinates (unit sum) as `f64`.
    pub fn coords_f64(&self) -> [f64; 3] {
        let total = self.total();
        self.coords.clone().map(|c| BigRational::new(c, total.clone()).to_f64().unwrap_or(f64::NAN))
    }

    pub fn to_rationals(&self) -> [BigRational; 3] {
        let total = self.total();
        self.coords.clone().map(|c| BigRational::new(c, total.clone()))
    }

    /// Bits of information left: `log2(total / max error)`; unbounded for
    /// exact points.
    pub fn remaining_bits(&self) -> Option<f64> {
        let e = self.err.iter().max().unwrap();
        if e.is_zero() {
            return None;
        }
        let t = self.total();
        Some(t.bits() as f64 - e.bits() as f64)
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.coords.iter().zip(&self.err).all(|(c, e)| c > e)
    }

    pub(crate) fn from_parts(coords: [BigInt; 3], err: [BigInt; 3], precision: u32) -> Self {
        SimplexPoint { coords, err, precision }
    }
}
