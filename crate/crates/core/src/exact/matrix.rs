use std::fmt;
use std::ops::Mul;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ExactError;

/// 3×3 matrix of arbitrary-precision integers.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix3 {
    e: [[BigInt; 3]; 3],
}

impl IntMatrix3 {
    pub fn new(e: [[BigInt; 3]; 3]) -> Self {
        IntMatrix3 { e }
    }

    pub fn from_rows(rows: [[i64; 3]; 3]) -> Self {
        IntMatrix3 { e: rows.map(|r| r.map(BigInt::from)) }
    }

    pub fn identity() -> Self {
        Self::from_rows([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    pub fn zero() -> Self {
        Self::from_rows([[0; 3]; 3])
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.e[i][j]
    }

    pub fn entries(&self) -> &[[BigInt; 3]; 3] {
        &self.e
    }

    pub fn transpose(&self) -> Self {
        let e = &self.e;
        IntMatrix3 {
            e: std::array::from_fn(|i| std::array::from_fn(|j| e[j][i].clone())),
        }
    }

    pub fn trace(&self) -> BigInt {
        &self.e[0][0] + &self.e[1][1] + &self.e[2][2]
    }

    fn minor(&self, r0: usize, r1: usize, c0: usize, c1: usize) -> BigInt {
        &self.e[r0][c0] * &self.e[r1][c1] - &self.e[r0][c1] * &self.e[r1][c0]
    }

    pub fn det(&self) -> BigInt {
        let e = &self.e;
        &e[0][0] * self.minor(1, 2, 1, 2) - &e[0][1] * self.minor(1, 2, 0, 2)
            + &e[0][2] * self.minor(1, 2, 0, 1)
    }

    /// Sum of the three principal 2×2 minors.
    pub fn principal_minor_sum(&self) -> BigInt {
        self.minor(0, 1, 0, 1) + self.minor(0, 2, 0, 2) + self.minor(1, 2, 1, 2)
    }

    pub fn adjugate(&self) -> Self {
        // cofactor C_ij, adjugate is its transpose
        let cof = |i: usize, j: usize| {
            let rows: Vec<usize> = (0..3).filter(|&r| r != i).collect();
            let cols: Vec<usize> = (0..3).filter(|&c| c != j).collect();
            let m = self.minor(rows[0], rows[1], cols[0], cols[1]);
            if (i + j).is_multiple_of(2) {
                m
            } else {
                -m
            }
        };
        IntMatrix3 {
            e: std::array::from_fn(|i| std::array::from_fn(|j| cof(j, i))),
        }
    }

    /// Exact integer inverse of a matrix with determinant ±1.
    pub fn inverse_unimodular(&self) -> Result<Self, ExactError> {
        let d = self.det();
        if d.abs() != BigInt::one() {
            return Err(ExactError::NotUnimodular(d.to_string()));
        }
        let mut adj = self.adjugate();
        if d.is_negative() {
            for row in adj.e.iter_mut() {
                for x in row.iter_mut() {
                    *x = -&*x;
                }
            }
        }
        Ok(adj)
    }

    pub fn apply(&self, v: &[BigInt; 3]) -> [BigInt; 3] {
        std::array::from_fn(|i| {
            &self.e[i][0] * &v[0] + &self.e[i][1] * &v[1] + &self.e[i][2] * &v[2]
        })
    }

    pub fn is_positive(&self) -> bool {
        self.e.iter().flatten().all(|x| x.is_positive())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.e.iter().flatten().all(|x| !x.is_negative())
    }

    pub fn column_sums(&self) -> [BigInt; 3] {
        std::array::from_fn(|j| &self.e[0][j] + &self.e[1][j] + &self.e[2][j])
    }

    pub fn row_sums(&self) -> [BigInt; 3] {
        std::array::from_fn(|i| &self.e[i][0] + &self.e[i][1] + &self.e[i][2])
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = IntMatrix3::identity();
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Lossy conversion; entries beyond `f64` range become infinite.
    pub fn to_f64(&self) -> [[f64; 3]; 3] {
        self.e.clone().map(|r| r.map(|x| x.to_f64().unwrap_or(f64::NAN)))
    }

    /// Entries as `i128` if they all fit.
    pub fn to_i128(&self) -> Option<[[i128; 3]; 3]> {
        let mut out = [[0i128; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = self.e[i][j].to_i128()?;
            }
        }
        Some(out)
    }

    pub fn is_identity(&self) -> bool {
        *self == IntMatrix3::identity()
    }

    pub fn max_abs_bits(&self) -> u64 {
        self.e.iter().flatten().map(|x| x.bits()).max().unwrap_or(0)
    }
}

impl Mul for &IntMatrix3 {
    type Output = IntMatrix3;

    fn mul(self, rhs: &IntMatrix3) -> IntMatrix3 {
        let a = &self.e;
        let b = &rhs.e;
        IntMatrix3 {
            e: std::array::from_fn(|i| {
                std::array::from_fn(|j| {
                    let mut s = BigInt::zero();
                    for (k, bk) in b.iter().enumerate() {
                        if !a[i][k].is_zero() && !bk[j].is_zero() {
                            s += &a[i][k] * &bk[j];
                        }
                    }
                    s
                })
            }),
        }
    }
}

impl Mul for IntMatrix3 {
    type Output = IntMatrix3;

    fn mul(self, rhs: IntMatrix3) -> IntMatrix3 {
        &self * &rhs
    }
}

impl fmt::Debug for IntMatrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for IntMatrix3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, row) in self.e.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "[{},{},{}]", row[0], row[1], row[2])?;
        }
        write!(f, "]")
    }
}

// Matrices travel as nested arrays of decimal strings so that entries of any
// size survive JSON exactly.
impl Serialize for IntMatrix3 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<String>> =
            self.e.iter().map(|r| r.iter().map(|x| x.to_string()).collect()).collect();
        rows.serialize(s)
    }
}

impl<'de> Deserialize<'de> for IntMatrix3 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<String>> = Vec::deserialize(d)?;
        if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
            return Err(D::Error::custom("expected a 3x3 array"));
        }
        let mut e: [[BigInt; 3]; 3] = Default::default();
        for (i, row) in rows.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                e[i][j] = x.parse().map_err(D::Error::custom)?;
            }
        }
        Ok(IntMatrix3 { e })
    }
}
