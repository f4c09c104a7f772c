//! Walking a section through lattice cells, the empirical diffusion exponent
//! of the resulting curve, and trace export.

use std::collections::HashMap;
use std::path::Path;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Axis, Section, Segment, SurfaceError, SurfaceModel};
use crate::exact::rational_to_string;

/// A polyline vertex. `grid` holds doubled grid units `(10·x₁, 8·x₃)`, which
/// keeps segment midpoints integral; `tick` is arclength in units of 1/40.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub t: f64,
    pub x1: f64,
    pub x3: f64,
    #[serde(skip)]
    pub grid: (i64, i64),
}

impl Vertex {
    /// Vertex at doubled grid point `grid` and arclength `tick / 40`.
    pub fn from_grid(grid: (i64, i64), tick: i64) -> Self {
        Vertex { t: tick as f64 / 40.0, x1: grid.0 as f64 / 10.0, x3: grid.1 as f64 / 8.0, grid }
    }

    /// Euclidean distance in `(x₁, x₃)` computed from exact grid offsets.
    pub fn distance(&self, other: &Vertex) -> f64 {
        let dx = (self.grid.0 - other.grid.0) as f64 / 10.0;
        let dz = (self.grid.1 - other.grid.1) as f64 / 8.0;
        dx.hypot(dz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceStatus {
    Completed,
    ClosedLoop,
    ToleranceFailure,
}

/// Which plate of the seed cell the start point lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StartPlate {
    /// `x₃ = 1/4`
    Low,
    /// `x₃ = 3/4`
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub s: String,
    pub tolerance: f64,
    pub seed_cell: [i64; 3],
    pub plate: StartPlate,
    pub start_segment: Segment,
    /// Starts at the start point.
    pub forward: Vec<Vertex>,
    /// Starts at the start point and runs the other way.
    pub backward: Vec<Vertex>,
    pub status: TraceStatus,
    pub cells_loaded: usize,
    pub retries: u32,
    pub events: Vec<String>,
}

impl Trace {
    pub fn arclength(&self) -> f64 {
        self.forward.last().map_or(0.0, |v| v.t) + self.backward.last().map_or(0.0, |v| v.t)
    }
}

/// Lazily generated segments with an index from grid points to segments.
pub struct Tracer<'a> {
    section: &'a Section,
    arena: Vec<Segment>,
    loaded: HashMap<[i64; 3], ()>,
    at: HashMap<(i64, i64), Vec<u32>>,
    loads: usize,
    cache_limit: usize,
}

/// Cells kept before the cache is dropped and rebuilt around the walker.
pub const DEFAULT_CACHE_LIMIT: usize = 250_000;

impl<'a> Tracer<'a> {
    pub fn new(section: &'a Section) -> Self {
        Tracer { section, arena: Vec::new(), loaded: HashMap::new(), at: HashMap::new(), loads: 0, cache_limit: DEFAULT_CACHE_LIMIT }
    }

    pub fn with_cache_limit(mut self, cells: usize) -> Self {
        self.cache_limit = cells.max(27);
        self
    }

    /// Cell generations so far, counting regenerations after eviction.
    pub fn cells_loaded(&self) -> usize {
        self.loads
    }

    pub fn segment(&self, i: usize) -> &Segment {
        &self.arena[i]
    }

    fn load(&mut self, cell: [i64; 3]) -> Result<(), SurfaceError> {
        if self.loaded.contains_key(&cell) {
            return Ok(());
        }
        let segs = self.section.segments(cell)?;
        self.loaded.insert(cell, ());
        self.loads += 1;
        for seg in segs {
            let id = self.arena.len() as u32;
            for p in seg.endpoints() {
                self.at.entry(p).or_default().push(id);
            }
            self.arena.push(seg);
        }
        Ok(())
    }

    /// Loads a cell and its 26 lattice neighbours.
    pub fn load_neighborhood(&mut self, cell: [i64; 3]) -> Result<(), SurfaceError> {
        for d0 in -1..=1 {
            for d1 in -1..=1 {
                for d2 in -1..=1 {
                    self.load([cell[0] + d0, cell[1] + d1, cell[2] + d2])?;
                }
            }
        }
        Ok(())
    }

    /// Segments meeting a grid point (only complete once the neighbourhood of
    /// every cell touching it is loaded).
    pub fn incident(&self, p: (i64, i64)) -> &[u32] {
        self.at.get(&p).map_or(&[], |v| v.as_slice())
    }

    /// The unique other segment through endpoint `p` of segment `seg`.
    pub fn continuation(&mut self, seg: Segment, p: (i64, i64)) -> Result<usize, SurfaceError> {
        if self.loaded.len() > self.cache_limit {
            self.arena.clear();
            self.loaded.clear();
            self.at.clear();
        }
        self.load_neighborhood(seg.cell)?;
        let others: Vec<u32> = self.incident(p).iter().copied().filter(|&i| self.arena[i as usize] != seg).collect();
        match others.as_slice() {
            [one] => Ok(*one as usize),
            _ => Err(SurfaceError::JunctionAnomaly { point: p, count: others.len() }),
        }
    }

    /// First segment on the requested plate of a cell.
    pub fn start_segment(&mut self, cell: [i64; 3], plate: StartPlate) -> Result<usize, SurfaceError> {
        self.load_neighborhood(cell)?;
        let z = 4 * cell[2] + if plate == StartPlate::Low { 1 } else { 3 };
        (0..self.arena.len())
            .filter(|&i| {
                let s = &self.arena[i];
                s.cell == cell && s.axis == Axis::X1 && s.fixed == z
            })
            .max_by_key(|&i| self.arena[i].range.1 - self.arena[i].range.0)
            .ok_or(SurfaceError::BadStart(cell))
    }

    /// Walks from the midpoint of `start` through endpoint `toward` (0 or 1)
    /// until the arclength reaches `max_arclength` or the walk returns to
    /// `start`. Returns the vertices and whether the curve closed.
    pub fn walk(&mut self, start: usize, toward: usize, max_arclength: f64) -> Result<(Vec<Vertex>, bool), SurfaceError> {
        let max_tick = (max_arclength * 40.0).ceil() as i64;
        let start_seg = self.arena[start];
        let ends = start_seg.endpoints();
        let mid = (ends[0].0 + ends[1].0, ends[0].1 + ends[1].1);
        let mut out = vec![Vertex::from_grid(mid, 0)];
        let mut tick = 0i64;
        let mut prev = mid;
        let mut seg = start_seg;
        let mut p = ends[toward];
        loop {
            let pd = (2 * p.0, 2 * p.1);
            tick += ticks(prev, pd);
            out.push(Vertex::from_grid(pd, tick));
            if tick >= max_tick {
                return Ok((out, false));
            }
            let next = self.continuation(seg, p)?;
            if self.arena[next] == start_seg {
                tick += ticks(pd, mid);
                out.push(Vertex::from_grid(mid, tick));
                return Ok((out, true));
            }
            let e = self.arena[next].endpoints();
            prev = pd;
            p = if e[0] == p { e[1] } else { e[0] };
            seg = self.arena[next];
        }
    }
}

/// Arclength between two doubled-grid points on a common axis, in 1/40 units.
fn ticks(a: (i64, i64), b: (i64, i64)) -> i64 {
    // doubled x₁ units are 1/10, doubled x₃ units are 1/8
    4 * (a.0 - b.0).abs() + 5 * (a.1 - b.1).abs()
}

/// Traces the section through the midpoint of the largest plate segment of
/// `seed_cell`, in both directions, up to `max_arclength` each way.
pub fn trace(section: &Section, seed_cell: [i64; 3], plate: StartPlate, max_arclength: f64) -> Result<Trace, SurfaceError> {
    let mut tracer = Tracer::new(section);
    let start = tracer.start_segment(seed_cell, plate)?;
    let start_seg = *tracer.segment(start);
    let (forward, closed) = tracer.walk(start, 1, max_arclength)?;
    let backward = if closed {
        Vec::new()
    } else {
        let start = tracer.start_segment(seed_cell, plate)?;
        tracer.walk(start, 0, max_arclength)?.0
    };
    Ok(Trace {
        s: rational_to_string(&section.s),
        tolerance: section.tolerance,
        seed_cell,
        plate,
        start_segment: start_seg,
        forward,
        backward,
        status: if closed { TraceStatus::ClosedLoop } else { TraceStatus::Completed },
        cells_loaded: tracer.cells_loaded(),
        retries: 0,
        events: Vec::new(),
    })
}

/// Number of segments at every interior vertex of a trace (2 on a regular
/// level).
pub fn vertex_degrees(section: &Section, vertices: &[Vertex]) -> Result<Vec<usize>, SurfaceError> {
    let mut tracer = Tracer::new(section);
    let mut out = Vec::new();
    for v in vertices.iter().skip(1).take(vertices.len().saturating_sub(2)) {
        let p = (v.grid.0 / 2, v.grid.1 / 2);
        // every cell whose closure may contain p
        let k = p.0.div_euclid(5);
        let m3 = p.1.div_euclid(4);
        for dk in -1..=1 {
            for dm in -1..=1 {
                let m1 = section.active_m1(k + dk, m3 + dm);
                tracer.load([m1, k + dk - m1, m3 + dm])?;
            }
        }
        out.push(tracer.incident(p).len());
    }
    Ok(out)
}

/// Draws a level uniformly from the plate's `x₂` range, with a 62-bit
/// denominator.
pub fn random_level(model: &SurfaceModel, rng: &mut ChaCha8Rng) -> BigRational {
    let w = &model.a + &model.b + &model.c + &model.c;
    let u: u64 = rng.random_range(1..(1u64 << 62));
    w * BigRational::new(BigInt::from(u), BigInt::from(1u64 << 62))
}

/// Traces at a seeded random level, redrawing the level (at most `retries`
/// times) when it turns out degenerate or a junction is ambiguous.
pub fn trace_random_level(
    model: &SurfaceModel,
    seed: u64,
    plate: StartPlate,
    max_arclength: f64,
    tolerance: f64,
    retries: u32,
) -> Result<Trace, SurfaceError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::new();
    let mut last = None;
    for attempt in 0..=retries {
        let s = random_level(model, &mut rng);
        let section = Section::new(model, &s, tolerance)?;
        match trace(&section, [0, 0, 0], plate, max_arclength) {
            Ok(mut t) => {
                t.retries = attempt;
                t.events = events;
                return Ok(t);
            }
            Err(e @ (SurfaceError::DegenerateLevel { .. } | SurfaceError::JunctionAnomaly { .. } | SurfaceError::BadStart(_))) => {
                events.push(format!("level {}: {e}", rational_to_string(&s)));
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(SurfaceError::ToleranceFailure(tolerance)))
}

/// Least-squares fit of `log(max_{τ≤t} d(x, x_τ))` against `log t` at dyadic
/// times in the upper half of the available range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub nu_hat: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub times: Vec<f64>,
    pub running_max: Vec<f64>,
    /// Index into `times` where the fit starts.
    pub fit_from: usize,
}

pub const MIN_FIT_ARCLENGTH: f64 = 1000.0;

pub fn diffusion_exponent(vertices: &[Vertex]) -> Result<ExponentFit, SurfaceError> {
    let total = vertices.last().map_or(0.0, |v| v.t);
    if total < MIN_FIT_ARCLENGTH {
        return Err(SurfaceError::TooShort(total));
    }
    let (times, running_max) = dyadic_running_max(vertices);
    Ok(fit_slope(times, running_max))
}

/// Exponent of the whole trace: the running maximum is taken over both
/// directions, `max_{|τ| ≤ t} d(x, x_τ)`. A closed loop uses its one pass.
pub fn trace_exponent(trace: &Trace) -> Result<ExponentFit, SurfaceError> {
    if trace.backward.is_empty() {
        return diffusion_exponent(&trace.forward);
    }
    let total = trace.forward.last().map_or(0.0, |v| v.t).min(trace.backward.last().map_or(0.0, |v| v.t));
    if total < MIN_FIT_ARCLENGTH {
        return Err(SurfaceError::TooShort(total));
    }
    let (tf, mf) = dyadic_running_max(&trace.forward);
    let (tb, mb) = dyadic_running_max(&trace.backward);
    let n = tf.len().min(tb.len());
    let maxes = mf[..n].iter().zip(&mb[..n]).map(|(a, b)| a.max(*b)).collect();
    Ok(fit_slope(tf[..n].to_vec(), maxes))
}

fn fit_slope(times: Vec<f64>, running_max: Vec<f64>) -> ExponentFit {
    let jmax = times.len() - 1;
    let fit_from = jmax.div_ceil(2);
    let xs: Vec<f64> = times[fit_from..].iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = running_max[fit_from..].iter().map(|d| d.max(f64::MIN_POSITIVE).ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let nu_hat = sxy / sxx;
    let intercept = my - nu_hat * mx;
    let rms_residual = (xs.iter().zip(&ys).map(|(x, y)| (y - intercept - nu_hat * x).powi(2)).sum::<f64>() / n).sqrt();
    ExponentFit { nu_hat, intercept, rms_residual, times, running_max, fit_from }
}

/// `max_{τ ≤ t} d(x, x_τ)` at `t = 1, 2, 4, …` up to the trace length.
pub fn dyadic_running_max(vertices: &[Vertex]) -> (Vec<f64>, Vec<f64>) {
    let x = vertices[0];
    let total = vertices.last().map_or(0.0, |v| v.t);
    let mut times = Vec::new();
    let mut maxes = Vec::new();
    let mut best = 0.0f64;
    let mut i = 0;
    let mut t = 1.0;
    while t <= total {
        while i + 1 < vertices.len() && vertices[i + 1].t <= t {
            i += 1;
            best = best.max(vertices[i].distance(&x));
        }
        // interpolated point at arclength t on the current segment
        let mut here = best;
        if i + 1 < vertices.len() && vertices[i + 1].t > vertices[i].t {
            let (a, b) = (&vertices[i], &vertices[i + 1]);
            let f = (t - a.t) / (b.t - a.t);
            let px = a.x1 + f * (b.x1 - a.x1) - x.x1;
            let pz = a.x3 + f * (b.x3 - a.x3) - x.x3;
            here = here.max(px.hypot(pz));
        }
        times.push(t);
        maxes.push(here);
        t *= 2.0;
    }
    (times, maxes)
}

/// CSV with columns `t,x1,x3,d` (distance to the first vertex).
pub fn trace_csv(vertices: &[Vertex]) -> String {
    let mut s = String::with_capacity(vertices.len() * 48);
    s.push_str("t,x1,x3,d\n");
    if let Some(x) = vertices.first() {
        for v in vertices {
            s.push_str(&format!("{},{},{},{}\n", v.t, v.x1, v.x3, v.distance(x)));
        }
    }
    s
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<Vertex>, SurfaceError> {
    let mut lines = text.lines();
    if lines.next() != Some("t,x1,x3,d") {
        return Err(SurfaceError::Parse("missing header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<f64> = line
                .split(',')
                .map(|x| x.parse::<f64>().map_err(|e| SurfaceError::Parse(e.to_string())))
                .collect::<Result<_, _>>()?;
            if f.len() != 4 {
                return Err(SurfaceError::Parse(format!("bad row {line:?}")));
            }
            Ok(Vertex { t: f[0], x1: f[1], x3: f[2], grid: ((f[1] * 10.0).round() as i64, (f[2] * 8.0).round() as i64) })
        })
        .collect()
}

/// SVG with one polyline per traced direction and a bounding box.
pub fn trace_svg(trace: &Trace) -> String {
    let all = trace.forward.iter().chain(&trace.backward);
    let (mut x0, mut x1, mut z0, mut z1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for v in all {
        x0 = x0.min(v.x1);
        x1 = x1.max(v.x1);
        z0 = z0.min(v.x3);
        z1 = z1.max(v.x3);
    }
    let (w, h) = ((x1 - x0).max(1.0), (z1 - z0).max(1.0));
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{} {} {} {}\">\n<rect x=\"{x0}\" y=\"{}\" width=\"{w}\" height=\"{h}\" fill=\"none\" stroke=\"#bbb\" stroke-width=\"{}\"/>\n",
        x0 - 0.02 * w,
        -z1 - 0.02 * h,
        1.04 * w,
        1.04 * h,
        -z1,
        0.002 * w.max(h)
    );
    for (name, part, color) in [("forward", &trace.forward, "#1f4e99"), ("backward", &trace.backward, "#b3452c")] {
        if part.is_empty() {
            continue;
        }
        let pts: Vec<String> = part.iter().map(|v| format!("{},{}", v.x1, -v.x3)).collect();
        s.push_str(&format!(
            "<polyline id=\"{name}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"{}\" points=\"{}\"/>\n",
            0.002 * w.max(h),
            pts.join(" ")
        ));
    }
    s.push_str("</svg>\n");
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceFormat {
    Csv,
    Svg,
}

/// Writes a trace through a temporary file and a rename. CSV output holds
/// the forward direction.
pub fn export_trace(trace: &Trace, format: TraceFormat, path: &Path) -> Result<(), SurfaceError> {
    let body = match format {
        TraceFormat::Csv => trace_csv(&trace.forward),
        TraceFormat::Svg => trace_svg(trace),
    };
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, body).and_then(|_| std::fs::rename(&tmp, path)).map_err(|e| SurfaceError::IoFailure(e.to_string()))
}

/// Everything needed to reproduce a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceManifest {
    pub a: String,
    pub b: String,
    pub c: String,
    pub s: String,
    pub seed: Option<u64>,
    pub tolerance: f64,
    pub retries: u32,
    pub events: Vec<String>,
    pub status: TraceStatus,
    pub plate: StartPlate,
    pub seed_cell: [i64; 3],
    pub arclength_forward: f64,
    pub arclength_backward: f64,
    pub vertices: usize,
    pub cells_loaded: usize,
    pub nu_hat_forward: Option<f64>,
    pub nu_hat_backward: Option<f64>,
    pub nu_hat: Option<f64>,
}

impl TraceManifest {
    pub fn new(model: &SurfaceModel, trace: &Trace, seed: Option<u64>) -> Self {
        let [a, b, c] = model.parameters_string();
        TraceManifest {
            a,
            b,
            c,
            s: trace.s.clone(),
            seed,
            tolerance: trace.tolerance,
            retries: trace.retries,
            events: trace.events.clone(),
            status: trace.status,
            plate: trace.plate,
            seed_cell: trace.seed_cell,
            arclength_forward: trace.forward.last().map_or(0.0, |v| v.t),
            arclength_backward: trace.backward.last().map_or(0.0, |v| v.t),
            vertices: trace.forward.len() + trace.backward.len(),
            cells_loaded: trace.cells_loaded,
            nu_hat_forward: diffusion_exponent(&trace.forward).ok().map(|f| f.nu_hat),
            nu_hat_backward: diffusion_exponent(&trace.backward).ok().map(|f| f.nu_hat),
            nu_hat: trace_exponent(trace).ok().map(|f| f.nu_hat),
        }
    }
}
