//! Rauzy induction on special systems of isometries.
//!
//! Everything here works in label coordinates: the length vector keeps the
//! original labels and the order `tau` is tracked alongside. A simple step
//! with winner `x` replaces `l_x` by `l_x − l_y − l_z`; its length-transfer
//! matrix (old = M · new) is the identity with row `x` filled with ones.

use std::cmp::Ordering;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{Branch, ExactError, IntMatrix3, Perm, SimplexPoint, SpecialSystem};
use crate::exec::Exec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InductionError {
    /// A hole appeared; `steps` simple steps of the current accelerated step
    /// were completed before it.
    #[error("hole reached after {steps} simple steps")]
    HoleReached { steps: u64 },
    /// A branch comparison fell inside the point's error box.
    #[error("precision exhausted after {steps} accelerated steps")]
    PrecisionExhausted { steps: u64 },
    /// Two lengths became exactly equal (non-generic point).
    #[error("lengths tie exactly after {steps} accelerated steps")]
    Degenerate { steps: u64 },
}

impl InductionError {
    fn at_depth(self, depth: u64) -> Self {
        match self {
            InductionError::PrecisionExhausted { .. } => InductionError::PrecisionExhausted { steps: depth },
            InductionError::Degenerate { .. } => InductionError::Degenerate { steps: depth },
            hole => hole,
        }
    }
}

impl From<ExactError> for InductionError {
    fn from(_: ExactError) -> Self {
        InductionError::Degenerate { steps: 0 }
    }
}

/// One accelerated step: `n` simple steps with the same winner, closed by an
/// order change of type `branch`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathStep {
    pub branch: Branch,
    pub n: u64,
}

impl PathStep {
    pub fn new(branch: Branch, n: u64) -> Self {
        assert!(n >= 1, "accelerated steps merge at least one simple step");
        PathStep { branch, n }
    }
}

/// A path in the accelerated Rauzy graph: a starting order and the steps.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    pub start: Perm,
    pub steps: Vec<PathStep>,
}

impl Word {
    pub fn new(start: Perm, steps: Vec<PathStep>) -> Self {
        Word { start, steps }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Orders visited before each step, paired with the step.
    pub fn states(&self) -> impl Iterator<Item = (Perm, PathStep)> + '_ {
        let mut tau = self.start;
        self.steps.iter().map(move |&st| {
            let here = tau;
            tau = tau.after(st.branch);
            (here, st)
        })
    }

    pub fn final_order(&self) -> Perm {
        self.steps.iter().fold(self.start, |t, st| t.after(st.branch))
    }

    /// Winner label (0-based) of every step.
    pub fn winners(&self) -> impl Iterator<Item = usize> + '_ {
        self.states().map(|(tau, _)| tau.top())
    }

    /// Every label wins at least once.
    pub fn is_complete(&self) -> bool {
        let mut seen = [false; 3];
        for w in self.winners() {
            seen[w] = true;
        }
        seen.iter().all(|&s| s)
    }

    /// The path returns to its starting vertex.
    pub fn is_loop(&self) -> bool {
        self.final_order() == self.start
    }

    /// Drops the first step (the shift on words).
    pub fn shifted(&self) -> Word {
        match self.steps.first() {
            Some(st) => Word { start: self.start.after(st.branch), steps: self.steps[1..].to_vec() },
            None => self.clone(),
        }
    }

    pub fn prefix(&self, k: usize) -> Word {
        Word { start: self.start, steps: self.steps[..k.min(self.len())].to_vec() }
    }

    pub fn concat(&self, other: &Word) -> Word {
        assert_eq!(self.final_order(), other.start, "words do not chain");
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        Word { start: self.start, steps }
    }

    /// Compact text form: `"123:3x1,3x1,3x5"`.
    pub fn to_compact(&self) -> String {
        let [a, b, c] = self.start.labels();
        let body: Vec<String> = self.steps.iter().map(|s| format!("{}x{}", s.branch.number(), s.n)).collect();
        format!("{a}{b}{c}:{}", body.join(","))
    }

    pub fn parse_compact(s: &str) -> Option<Word> {
        let (head, body) = s.split_once(':')?;
        let digits: Vec<u8> = head.bytes().map(|b| b.wrapping_sub(b'0')).collect();
        if digits.len() != 3 {
            return None;
        }
        let start = Perm::from_labels([digits[0], digits[1], digits[2]])?;
        let mut steps = Vec::new();
        for part in body.split(',').filter(|p| !p.is_empty()) {
            let (b, n) = part.trim().split_once('x')?;
            let branch = Branch::from_number(b.parse().ok()?)?;
            let n: u64 = n.parse().ok()?;
            if n == 0 {
                return None;
            }
            steps.push(PathStep { branch, n });
        }
        Some(Word { start, steps })
    }
}

/// Length transfer of `n` simple steps won by `winner`: identity with the
/// off-diagonal entries of row `winner` equal to `n`.
pub fn winner_transfer(winner: usize, n: u64) -> IntMatrix3 {
    let mut rows = [[0i64; 3]; 3];
    for (i, row) in rows.iter_mut().enumerate() {
        row[i] = 1;
    }
    let mut m = rows.map(|r| r.map(BigInt::from));
    for (j, e) in m[winner].iter_mut().enumerate() {
        if j != winner {
            *e = BigInt::from(n);
        }
    }
    IntMatrix3::new(m)
}

/// Length transfer of a word in label coordinates: old = M · new.
pub fn word_transfer(w: &Word) -> IntMatrix3 {
    w.states().fold(IntMatrix3::identity(), |acc, (tau, st)| &acc * &winner_transfer(tau.top(), st.n))
}

/// Outcome of one simple step.
#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Hole,
    Next {
        next: SpecialSystem,
        /// Lengths after the step, before renormalization.
        unnormalized: [BigRational; 3],
        /// 1-based label of the reduced pair.
        winner: u8,
        length_transfer: IntMatrix3,
    },
}

/// True when one step from `s` leaves a hole: `a ≤ b + c` for the sorted
/// values (the boundary counts as a hole).
pub fn step_produces_hole(s: &SpecialSystem) -> bool {
    let [a, b, c] = s.sorted();
    a <= b + c
}

/// One simple Rauzy step with exact renormalization.
pub fn rauzy_step(s: &SpecialSystem) -> Result<StepOutcome, ExactError> {
    if step_produces_hole(s) {
        return Ok(StepOutcome::Hole);
    }
    let tau = s.tau();
    let (x, y, z) = (tau.top(), tau.mid(), tau.bottom());
    let l = s.lengths();
    let mut new = l.clone();
    new[x] = &l[x] - &l[y] - &l[z];
    let next = SpecialSystem::new(new.clone())?;
    Ok(StepOutcome::Next { next, unnormalized: new, winner: x as u8 + 1, length_transfer: winner_transfer(x, 1) })
}

fn cmp_err(u: &BigInt, eu: &BigInt, w: &BigInt, ew: &BigInt) -> Option<Ordering> {
    let d = u - w;
    let bound = eu + ew;
    if d > bound {
        Some(Ordering::Greater)
    } else if -&d > bound {
        Some(Ordering::Less)
    } else if bound.is_zero() {
        Some(Ordering::Equal)
    } else {
        None
    }
}

const EXHAUSTED: InductionError = InductionError::PrecisionExhausted { steps: 0 };
const TIE: InductionError = InductionError::Degenerate { steps: 0 };

/// Certified order of a ray with error box. The hole test comes first so a
/// point deep in the hole is classified even when its two shorter lengths
/// cannot be told apart.
fn certified_order(c: &[BigInt; 3], e: &[BigInt; 3]) -> Result<Perm, InductionError> {
    let total = &c[0] + &c[1] + &c[2];
    let e_total = &e[0] + &e[1] + &e[2];
    let mut top = None;
    let mut unsure = false;
    for i in 0..3 {
        match cmp_err(&c[i], &e[i], &(&total - &c[i]), &(&e_total - &e[i])) {
            Some(Ordering::Greater) => top = Some(i),
            Some(_) => {}
            None => unsure = true,
        }
    }
    let x = match (top, unsure) {
        (Some(x), _) => x,
        (None, false) => return Err(InductionError::HoleReached { steps: 0 }),
        (None, true) => return Err(EXHAUSTED),
    };
    let (y, z) = ((x + 1) % 3, (x + 2) % 3);
    match cmp_err(&c[y], &e[y], &c[z], &e[z]) {
        Some(Ordering::Greater) => Ok(Perm([x as u8, y as u8, z as u8])),
        Some(Ordering::Less) => Ok(Perm([x as u8, z as u8, y as u8])),
        Some(Ordering::Equal) => Err(TIE),
        None => Err(EXHAUSTED),
    }
}

/// Result of one accelerated step on a ray.
#[derive(Debug, Clone)]
pub(crate) struct RayStep {
    pub tau: Perm,
    pub step: PathStep,
    pub coords: [BigInt; 3],
    pub err: [BigInt; 3],
}

/// Accelerated step on an integer ray with absolute error bounds, using the
/// closed form for the number of merged steps and certifying every branch
/// decision against the error box.
pub(crate) fn accelerated_on_ray(c: &[BigInt; 3], e: &[BigInt; 3]) -> Result<RayStep, InductionError> {
    let tau = certified_order(c, e)?;
    let (x, y, z) = (tau.top(), tau.mid(), tau.bottom());
    let s = &c[y] + &c[z];
    let es = &e[y] + &e[z];
    // smallest n with l_x − n·s < l_y
    let n = (&c[x] - &c[y]).div_floor(&s) + BigInt::one();
    let n_prev = &n - BigInt::one();
    let v_prev = &c[x] - &n_prev * &s;
    let e_prev = &e[x] + &n_prev * &es;
    let v = &v_prev - &s;
    let e_v = &e_prev + &es;
    let steps_before: u64 = n_prev.clone().try_into().unwrap_or(u64::MAX);
    if n_prev.is_positive() {
        // l_x − (n−1)s must still be a winner without leaving a hole
        match cmp_err(&v_prev, &e_prev, &c[y], &e[y]) {
            Some(Ordering::Greater) => {}
            Some(Ordering::Equal) => return Err(TIE),
            _ => return Err(EXHAUSTED),
        }
        match cmp_err(&v_prev, &e_prev, &s, &es) {
            Some(Ordering::Greater) => {}
            Some(_) => return Err(InductionError::HoleReached { steps: steps_before }),
            None => return Err(EXHAUSTED),
        }
    }
    match cmp_err(&v, &e_v, &c[y], &e[y]) {
        Some(Ordering::Less) => {}
        Some(Ordering::Equal) => return Err(TIE),
        _ => return Err(EXHAUSTED),
    }
    let branch = match cmp_err(&v, &e_v, &c[z], &e[z]) {
        Some(Ordering::Greater) => Branch::Two,
        Some(Ordering::Less) => Branch::Three,
        Some(Ordering::Equal) => return Err(TIE),
        None => return Err(EXHAUSTED),
    };
    let mut coords = c.clone();
    let mut err = e.clone();
    coords[x] = v;
    err[x] = e_v;
    let n: u64 = n.try_into().map_err(|_| EXHAUSTED)?;
    Ok(RayStep { tau, step: PathStep { branch, n }, coords, err })
}

/// Result of [`accelerated_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct Accelerated {
    pub tau: Perm,
    pub step: PathStep,
    pub next: SpecialSystem,
    /// old lengths = transfer · (unnormalized next lengths)
    pub transfer: IntMatrix3,
}

/// One accelerated step on an exact system.
pub fn accelerated_step(s: &SpecialSystem) -> Result<Accelerated, InductionError> {
    let ray = s.integer_ray();
    let r = accelerated_on_ray(&ray, &Default::default())?;
    let next = SpecialSystem::from_integers(&r.coords)?;
    Ok(Accelerated { tau: r.tau, step: r.step, next, transfer: winner_transfer(r.tau.top(), r.step.n) })
}

/// The renormalized accelerated step on an exact system.
pub fn markov_map(s: &SpecialSystem) -> Result<SpecialSystem, InductionError> {
    accelerated_step(s).map(|a| a.next)
}

/// The renormalized accelerated step on a precision-tracked point.
pub fn markov_map_point(p: &SimplexPoint) -> Result<(Perm, PathStep, SimplexPoint), InductionError> {
    let r = accelerated_on_ray(&p.coords, &p.err)?;
    Ok((r.tau, r.step, SimplexPoint::from_parts(r.coords, r.err, p.precision())))
}

/// Symbolic coding of the first `k` accelerated steps of `p`. On failure the
/// word read so far is returned with the error.
pub fn itinerary(p: &SimplexPoint, k: usize) -> Result<Word, (Word, InductionError)> {
    let mut c = p.coords.clone();
    let mut e = p.err.clone();
    let mut word: Option<Word> = None;
    for depth in 0..k {
        match accelerated_on_ray(&c, &e) {
            Ok(r) => {
                word.get_or_insert_with(|| Word::new(r.tau, Vec::new())).steps.push(r.step);
                c = r.coords;
                e = r.err;
            }
            Err(err) => {
                let w = word.unwrap_or_else(|| Word::new(Perm::sorting(&c).unwrap_or(Perm::IDENTITY), Vec::new()));
                return Err((w, err.at_depth(depth as u64)));
            }
        }
    }
    Ok(word.unwrap_or_else(|| Word::new(Perm::sorting(&c).unwrap_or(Perm::IDENTITY), Vec::new())))
}

/// Accelerated steps survived before a hole, capped at `max_depth`.
pub fn gasket_depth(p: &SimplexPoint, max_depth: u32) -> Result<u32, InductionError> {
    let mut c = p.coords.clone();
    let mut e = p.err.clone();
    for depth in 0..max_depth {
        match accelerated_on_ray(&c, &e) {
            Ok(r) => {
                c = r.coords;
                e = r.err;
            }
            Err(InductionError::HoleReached { .. }) => return Ok(depth),
            Err(err) => return Err(err.at_depth(depth as u64)),
        }
    }
    Ok(max_depth)
}

/// A cylinder set: the points whose coding starts with a given word.
#[derive(Debug, Clone, PartialEq)]
pub struct Cylinder {
    pub word: Word,
    /// Length transfer of the word (label coordinates).
    pub matrix: IntMatrix3,
    /// Integer rays of the three corners of the cylinder triangle.
    pub vertices: [[BigInt; 3]; 3],
}

impl Cylinder {
    /// Barycenter (average of the normalized corners) as an exact ray.
    pub fn barycenter_ray(&self) -> [BigInt; 3] {
        let sums: [BigInt; 3] = self.vertices.clone().map(|v| &v[0] + &v[1] + &v[2]);
        let weights = [&sums[1] * &sums[2], &sums[0] * &sums[2], &sums[0] * &sums[1]];
        let ray: [BigInt; 3] = std::array::from_fn(|i| {
            (0..3).map(|k| &self.vertices[k][i] * &weights[k]).fold(BigInt::zero(), |a, b| a + b)
        });
        reduce_ray(ray)
    }

    pub fn barycenter(&self) -> SimplexPoint {
        SimplexPoint::exact(self.barycenter_ray()).expect("positive ray")
    }

    pub fn vertex_points(&self) -> [SimplexPoint; 3] {
        self.vertices.clone().map(|v| SimplexPoint::exact(v).expect("non-negative ray"))
    }

    /// Image of an interior point of the final order's region; `weights`
    /// are barycentric weights on the three corners.
    pub fn interior_ray(&self, weights: [u64; 3]) -> [BigInt; 3] {
        let ray: [BigInt; 3] = std::array::from_fn(|i| {
            (0..3).map(|k| &self.vertices[k][i] * BigInt::from(weights[k])).fold(BigInt::zero(), |a, b| a + b)
        });
        reduce_ray(ray)
    }
}

fn reduce_ray(v: [BigInt; 3]) -> [BigInt; 3] {
    let g = v[0].gcd(&v[1]).gcd(&v[2]);
    if g.is_zero() || g.is_one() {
        v
    } else {
        v.map(|x| x / &g)
    }
}

/// Corners of the ordered region of `tau` as integer rays: `e_p`,
/// `e_p + e_q`, `e_p + e_q + e_r`.
pub fn order_region_corners(tau: Perm) -> [[BigInt; 3]; 3] {
    let mut out: [[BigInt; 3]; 3] = Default::default();
    for (k, corner) in out.iter_mut().enumerate() {
        for &l in &tau.0[..=k] {
            corner[l as usize] = BigInt::one();
        }
    }
    out
}

/// The cylinder of a word: the transfer matrix and the image of the ordered
/// region of the word's final vertex.
pub fn cylinder(w: &Word) -> Cylinder {
    let m = word_transfer(w);
    let corners = order_region_corners(w.final_order());
    let vertices = corners.map(|c| reduce_ray(m.apply(&c)));
    Cylinder { word: w.clone(), matrix: m, vertices }
}

/// Hilbert projective distance between two positive vectors.
pub fn hilbert_distance(p: &[f64; 3], q: &[f64; 3]) -> Result<f64, ZeroCoordinate> {
    if p.iter().chain(q.iter()).any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(ZeroCoordinate);
    }
    let up = (0..3).map(|i| p[i] / q[i]).fold(f64::MIN, f64::max);
    let down = (0..3).map(|i| q[i] / p[i]).fold(f64::MIN, f64::max);
    Ok((up * down).ln().max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("coordinate is zero or not finite")]
pub struct ZeroCoordinate;

/// One raster cell of a gasket image.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pixel {
    /// Outside the parameter triangle.
    Outside,
    Depth(u32),
    /// The branch decision needed more precision than available.
    Exhausted,
}

/// Escape-time raster of the gasket over the parameter triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct GasketImage {
    pub resolution: usize,
    pub max_depth: u32,
    pub precision: u32,
    /// Row-major, `resolution²` pixels.
    pub pixels: Vec<Pixel>,
}

/// Barycentric coordinates of a pixel center. The triangle has label 1 at the
/// top middle, label 2 bottom left, label 3 bottom right.
pub fn pixel_center(resolution: usize, row: usize, col: usize) -> Option<[f64; 3]> {
    let res = resolution as f64;
    let y = (row as f64 + 0.5) / res;
    let x = (col as f64 + 0.5) / res;
    let l1 = 1.0 - y;
    let l3 = x - 0.5 * l1;
    let l2 = 1.0 - l1 - l3;
    if l1 > 0.0 && l2 > 0.0 && l3 > 0.0 {
        Some([l1, l2, l3])
    } else {
        None
    }
}

/// Sample point of a pixel: its center moved by a fixed pseudo-random offset
/// below `2^-20` in the low-order bits. Exact dyadic centers are rationals
/// with small denominators, whose induction terminates after a few steps
/// like Euclid's algorithm; the offset makes the sample generic at the
/// working precision.
pub fn pixel_point(resolution: usize, row: usize, col: usize, precision: u32) -> Option<SimplexPoint> {
    let l = pixel_center(resolution, row, col)?;
    let bits = precision.max(32);
    let mut rng = ChaCha8Rng::seed_from_u64(((row as u64) << 32) | col as u64);
    let ray: [BigInt; 3] = l.map(|x| {
        let base = (BigRational::from_float(x).expect("finite") * BigRational::from_integer(BigInt::one() << bits)).floor().to_integer();
        let words: Vec<u32> = (0..bits.div_ceil(32)).map(|_| rng.random()).collect();
        let jitter = BigInt::from_slice(Sign::Plus, &words) >> (words.len() as u32 * 32 - (bits - 20));
        base + jitter
    });
    SimplexPoint::from_ray(&ray, bits).ok()
}

/// Renders the gasket; rows are processed in parallel under `Exec::Parallel`.
pub fn render_gasket(resolution: usize, max_depth: u32, precision: u32, exec: Exec) -> GasketImage {
    assert!(resolution >= 2, "resolution must be at least 2");
    let rows = exec.map_range(resolution, |row| {
        (0..resolution)
            .map(|col| match pixel_point(resolution, row, col, precision) {
                None => Pixel::Outside,
                Some(p) => match gasket_depth(&p, max_depth) {
                    Ok(d) => Pixel::Depth(d),
                    Err(_) => Pixel::Exhausted,
                },
            })
            .collect::<Vec<_>>()
    });
    GasketImage { resolution, max_depth, precision, pixels: rows.into_iter().flatten().collect() }
}

impl GasketImage {
    pub fn get(&self, row: usize, col: usize) -> Pixel {
        self.pixels[row * self.resolution + col]
    }

    /// Fraction of in-triangle pixels with depth ≥ k, for k = 0..=max_depth.
    pub fn survival_fractions(&self) -> Vec<f64> {
        let inside: Vec<&Pixel> = self.pixels.iter().filter(|p| **p != Pixel::Outside).collect();
        let total = inside.len().max(1) as f64;
        (0..=self.max_depth)
            .map(|k| {
                inside.iter().filter(|p| matches!(p, Pixel::Depth(d) if *d >= k)).count() as f64 / total
            })
            .collect()
    }

    /// Color ramp: outside white, survivors to `max_depth` black, exhausted
    /// red, escapes shaded from pale yellow (depth 0) to dark blue.
    pub fn color(&self, p: Pixel) -> [u8; 3] {
        match p {
            Pixel::Outside => [255, 255, 255],
            Pixel::Exhausted => [255, 0, 0],
            Pixel::Depth(d) if d >= self.max_depth => [0, 0, 0],
            Pixel::Depth(d) => {
                let t = d as f64 / self.max_depth.max(1) as f64;
                let lerp = |a: f64, b: f64| (a + (b - a) * t).round() as u8;
                [lerp(250.0, 20.0), lerp(245.0, 40.0), lerp(220.0, 140.0)]
            }
        }
    }

    /// Binary PPM (P6, 8-bit RGB, row-major).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.resolution, self.resolution).into_bytes();
        for &p in &self.pixels {
            out.extend_from_slice(&self.color(p));
        }
        out
    }

    /// CSV with header `row,col,depth`; outside pixels are skipped and
    /// exhausted ones written as `exhausted`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("row,col,depth\n");
        for row in 0..self.resolution {
            for col in 0..self.resolution {
                match self.get(row, col) {
                    Pixel::Outside => {}
                    Pixel::Depth(d) => s.push_str(&format!("{row},{col},{d}\n")),
                    Pixel::Exhausted => s.push_str(&format!("{row},{col},exhausted\n")),
                }
            }
        }
        s
    }
}
