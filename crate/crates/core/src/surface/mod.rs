//! The triply periodic surface of a parameter triple and its sections by
//! planes `x₂ = s`.
//!
//! Every plate, hole and wall coordinate is an exact rational. In `(x₁, x₃)`
//! the section lives on the grid `X = 5·x₁`, `Z = 4·x₃`, so segments carry
//! integer endpoints; only the decision which holes a plane meets depends on
//! the level `s`, and that is settled exactly with scaled integers.

mod trace;

pub use trace::*;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::rational_to_string;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SurfaceError {
    #[error("parameters must satisfy a > b > c > 0 and a + b + c = 1")]
    BadParameters,
    #[error("level is degenerate in cell {cell:?} at the {feature:?} edge")]
    DegenerateLevel { cell: [i64; 3], feature: Feature },
    #[error("{count} continuations at grid point {point:?}")]
    JunctionAnomaly { point: (i64, i64), count: usize },
    #[error("stitching tolerance {0} is not usable")]
    ToleranceFailure(f64),
    #[error("start cell {0:?} has no segment on the requested plate")]
    BadStart([i64; 3]),
    #[error("trace arclength {0} is below the minimum of 1000")]
    TooShort(f64),
    #[error("i/o failure: {0}")]
    IoFailure(String),
    #[error("cannot parse trace file: {0}")]
    Parse(String),
}

/// Named pieces of the fundamental domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Feature {
    /// Outer rectangle `T₁` of either plate.
    Plate,
    T2,
    T3,
    T4,
}

/// Axis-parallel rectangle in `(x₁, x₂)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rect {
    pub x1: (BigRational, BigRational),
    pub x2: (BigRational, BigRational),
}

impl Rect {
    fn new(x1: (BigRational, BigRational), x2: (BigRational, BigRational)) -> Self {
        Rect { x1, x2 }
    }

    pub fn within_unit_square(&self) -> bool {
        let (zero, one) = (BigRational::zero(), BigRational::from_integer(1.into()));
        [&self.x1.0, &self.x1.1, &self.x2.0, &self.x2.1].iter().all(|v| **v >= zero && **v <= one)
    }
}

/// A horizontal plate: `T₁` minus holes, at height `x₃`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plate {
    pub height: BigRational,
    pub outer: Rect,
    pub holes: Vec<(Feature, Rect)>,
}

/// Boundary of a hole rectangle swept over `x₃ ∈ [z.0, z.1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WallPanel {
    pub hole: Feature,
    pub rect: Rect,
    pub z: (BigRational, BigRational),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurfaceModel {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    pub plates: [Plate; 2],
    pub walls: Vec<WallPanel>,
    /// Lattice basis `e₁, e₂, e₃` (rows).
    pub lattice: [[BigRational; 3]; 3],
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn build_surface(a: &BigRational, b: &BigRational, c: &BigRational) -> Result<SurfaceModel, SurfaceError> {
    let one = q(1, 1);
    if !(a > b && b > c && c.is_positive() && (a + b + c) == one) {
        return Err(SurfaceError::BadParameters);
    }
    let zero = BigRational::zero();
    let t1 = Rect::new((zero.clone(), one.clone()), (zero.clone(), a + b + c + c));
    let t2 = Rect::new((q(1, 5), q(2, 5)), (zero.clone(), c.clone()));
    let t3 = Rect::new((q(3, 5), q(4, 5)), (a.clone(), a + c));
    let t4 = Rect::new((q(1, 5), q(2, 5)), (a + b, a + b + c));
    if ![&t2, &t3, &t4].iter().all(|r| r.within_unit_square()) {
        return Err(SurfaceError::BadParameters);
    }
    let plates = [
        Plate { height: q(1, 4), outer: t1.clone(), holes: vec![(Feature::T2, t2.clone()), (Feature::T3, t3.clone())] },
        Plate { height: q(3, 4), outer: t1, holes: vec![(Feature::T3, t3.clone()), (Feature::T4, t4.clone())] },
    ];
    let walls = vec![
        WallPanel { hole: Feature::T2, rect: t2, z: (zero.clone(), q(1, 4)) },
        WallPanel { hole: Feature::T3, rect: t3, z: (q(1, 4), q(3, 4)) },
        WallPanel { hole: Feature::T4, rect: t4, z: (q(3, 4), one.clone()) },
    ];
    let lattice = [
        [one.clone(), -(b + c), zero.clone()],
        [one.clone(), a + c, zero.clone()],
        [zero, a + b, one],
    ];
    Ok(SurfaceModel { a: a.clone(), b: b.clone(), c: c.clone(), plates, walls, lattice })
}

/// Surface for the normalized point of a positive integer ray, coordinates
/// sorted so that `a > b > c`.
pub fn model_from_ray(ray: &[BigInt; 3]) -> Result<SurfaceModel, SurfaceError> {
    let mut v = ray.to_vec();
    v.sort_by(|x, y| y.cmp(x));
    let total: BigInt = v.iter().sum();
    if !total.is_positive() {
        return Err(SurfaceError::BadParameters);
    }
    let p: Vec<BigRational> = v.into_iter().map(|x| BigRational::new(x, total.clone())).collect();
    build_surface(&p[0], &p[1], &p[2])
}

impl SurfaceModel {
    /// Translation `m₁e₁ + m₂e₂ + m₃e₃`.
    pub fn translation(&self, cell: [i64; 3]) -> [BigRational; 3] {
        std::array::from_fn(|j| {
            (0..3).map(|i| &self.lattice[i][j] * BigRational::from_integer(cell[i].into())).sum()
        })
    }

    pub fn parameters_string(&self) -> [String; 3] {
        [rational_to_string(&self.a), rational_to_string(&self.b), rational_to_string(&self.c)]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Axis {
    /// Horizontal: runs along `x₁` at fixed `x₃`.
    X1,
    /// Vertical: runs along `x₃` at fixed `x₁`.
    X3,
}

/// A straight piece of a section, in grid units `X = 5·x₁`, `Z = 4·x₃`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Segment {
    pub axis: Axis,
    /// `Z` for horizontal segments, `X` for vertical ones.
    pub fixed: i64,
    /// Increasing range along the axis.
    pub range: (i64, i64),
    pub feature: Feature,
    pub cell: [i64; 3],
}

impl Segment {
    pub fn endpoints(&self) -> [(i64, i64); 2] {
        match self.axis {
            Axis::X1 => [(self.range.0, self.fixed), (self.range.1, self.fixed)],
            Axis::X3 => [(self.fixed, self.range.0), (self.fixed, self.range.1)],
        }
    }

    /// Euclidean length in `(x₁, x₃)`.
    pub fn length(&self) -> f64 {
        let d = (self.range.1 - self.range.0) as f64;
        match self.axis {
            Axis::X1 => d / 5.0,
            Axis::X3 => d / 4.0,
        }
    }
}

/// A plane level with all the comparisons it needs pre-scaled to integers.
#[derive(Debug, Clone)]
pub struct Section {
    pub model: SurfaceModel,
    pub s: BigRational,
    pub tolerance: f64,
    // everything below is multiplied by the common denominator
    s_num: BigInt,
    shift: [BigInt; 3],
    width: BigInt,
    edges: Vec<(BigInt, Feature)>,
    tol: BigInt,
    c: BigInt,
    a: BigInt,
    ac: BigInt,
    ab: BigInt,
    abc: BigInt,
}

impl Section {
    pub fn new(model: &SurfaceModel, s: &BigRational, tolerance: f64) -> Result<Section, SurfaceError> {
        if !(0.0..1e-3).contains(&tolerance) {
            return Err(SurfaceError::ToleranceFailure(tolerance));
        }
        let den = [&model.a, &model.b, &model.c, s]
            .iter()
            .fold(BigInt::from(1), |acc, v| acc.lcm(v.denom()));
        let scale = |v: &BigRational| (v * BigRational::from_integer(den.clone())).to_integer();
        let (a, b, c) = (&model.a, &model.b, &model.c);
        let edges = vec![
            (scale(&BigRational::zero()), Feature::Plate),
            (scale(&(a + b + c + c)), Feature::Plate),
            (scale(c), Feature::T2),
            (scale(a), Feature::T3),
            (scale(&(a + c)), Feature::T3),
            (scale(&(a + b)), Feature::T4),
            (scale(&(a + b + c)), Feature::T4),
        ];
        let tol = (BigRational::from_float(tolerance).unwrap() * BigRational::from_integer(den.clone())).floor().to_integer();
        Ok(Section {
            model: model.clone(),
            s: s.clone(),
            tolerance,
            s_num: scale(s),
            shift: [scale(&-(b + c)), scale(&(a + c)), scale(&(a + b))],
            width: scale(&(a + b + c + c)),
            edges,
            tol,
            c: scale(c),
            a: scale(a),
            ac: scale(&(a + c)),
            ab: scale(&(a + b)),
            abc: scale(&(a + b + c)),
        })
    }

    /// Local level `s − t₂(cell)`, scaled.
    fn local(&self, cell: [i64; 3]) -> BigInt {
        let mut v = self.s_num.clone();
        for i in 0..3 {
            v -= &self.shift[i] * cell[i];
        }
        v
    }

    /// Local level of a cell as an exact rational.
    pub fn local_level(&self, cell: [i64; 3]) -> BigRational {
        let t = self.model.translation(cell);
        &self.s - &t[1]
    }

    /// The unique `m₁` whose cell in column `k = m₁ + m₂`, layer `m₃` meets
    /// the plane (ignoring degenerate boundaries).
    pub fn active_m1(&self, k: i64, m3: i64) -> i64 {
        // local(m1, k − m1, m3) = local(0, k, m3) + m1·W
        let base = self.local([0, k, m3]);
        (Integer::div_floor(&-base, &self.width) + BigInt::from(1)).to_i64().expect("cell index fits in i64")
    }

    /// Segments of the section inside one cell.
    pub fn segments(&self, cell: [i64; 3]) -> Result<Vec<Segment>, SurfaceError> {
        let sigma = self.local(cell);
        let near = |e: &BigInt| (&sigma - e).abs() <= self.tol;
        if sigma < -&self.tol || sigma > &self.width + &self.tol {
            return Ok(Vec::new());
        }
        for (e, f) in &self.edges {
            if near(e) {
                return Err(SurfaceError::DegenerateLevel { cell, feature: *f });
            }
        }
        let zero = BigInt::zero();
        let inside = |lo: &BigInt, hi: &BigInt| &sigma > lo && &sigma < hi;
        let t2 = inside(&zero, &self.c);
        let t3 = inside(&self.a, &self.ac);
        let t4 = inside(&self.ab, &self.abc);
        let x0 = 5 * (cell[0] + cell[1]);
        let z0 = 4 * cell[2];
        let mut out = Vec::with_capacity(12);
        let mut plate = |z: i64, gaps: &[(bool, i64)]| {
            let mut x = 0;
            for &(on, g) in gaps {
                if on {
                    out.push(Segment { axis: Axis::X1, fixed: z0 + z, range: (x0 + x, x0 + g), feature: Feature::Plate, cell });
                    x = g + 1;
                }
            }
            out.push(Segment { axis: Axis::X1, fixed: z0 + z, range: (x0 + x, x0 + 5), feature: Feature::Plate, cell });
        };
        plate(1, &[(t2, 1), (t3, 3)]);
        plate(3, &[(t4, 1), (t3, 3)]);
        let mut wall = |on: bool, xs: [i64; 2], z: (i64, i64), f: Feature| {
            if on {
                for x in xs {
                    out.push(Segment { axis: Axis::X3, fixed: x0 + x, range: (z0 + z.0, z0 + z.1), feature: f, cell });
                }
            }
        };
        wall(t2, [1, 2], (0, 1), Feature::T2);
        wall(t3, [3, 4], (1, 3), Feature::T3);
        wall(t4, [1, 2], (3, 4), Feature::T4);
        Ok(out)
    }
}

/// Segments of the section `x₂ = s` in one lattice cell.
pub fn section_segments(model: &SurfaceModel, s: &BigRational, cell: [i64; 3], tolerance: f64) -> Result<Vec<Segment>, SurfaceError> {
    Section::new(model, s, tolerance)?.segments(cell)
}
