//! Exact arithmetic: orders of labels, integer matrices, cubic polynomials and
//! parameter points.

mod cubic;
mod matrix;
mod perm;
mod system;

pub use cubic::{char_poly, discriminant, is_perfect_square, Cubic, RootInterval};
pub use matrix::IntMatrix3;
pub use perm::{Branch, Perm};
pub use system::{
    integer_ray, make_system, parse_rational, rational_to_string, SimplexPoint, SpecialSystem,
    DEFAULT_PRECISION,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("lengths must be strictly positive")]
    NonPositiveLength,
    #[error("two lengths are equal")]
    DegenerateOrder,
    #[error("matrix is not unimodular (det = {0})")]
    NotUnimodular(String),
    #[error("cannot parse rational number {0:?}")]
    Parse(String),
}

pub(crate) mod bigint_string {
    use num_bigint::BigInt;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}
