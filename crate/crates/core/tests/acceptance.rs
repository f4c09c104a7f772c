//! End-to-end acceptance checks, one test per criterion. Each prints a single
//! `criterion N: PASS|FAIL` line with the measured values.

use std::sync::OnceLock;
use std::time::Instant;

use gasket_core::cocycle::*;
use gasket_core::exact::{char_poly, Branch, IntMatrix3, Perm, SimplexPoint};
use gasket_core::induction::{cylinder, markov_map_point, pixel_center, render_gasket, Pixel, PathStep, Word};
use gasket_core::lyapunov::*;
use gasket_core::surface::*;
use gasket_core::thermo::*;
use gasket_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

// Pinned tolerances.

/// Runtime budget for the exact certificates.
const CERTIFICATE_SECONDS: f64 = 1.0;
/// Runtime budget for 1000 exact duality checks.
const DUALITY_SECONDS: f64 = 10.0;
/// Periodic-word spectrum vs log root moduli of the cubic.
const ORACLE_SPECTRUM_TOL: f64 = 1e-6;
/// Relative error of the finite-difference Jacobian against `e^{3r}`.
const JACOBIAN_REL_TOL: f64 = 1e-4;
/// κ₀ drift between truncations 20 and 40, and `|h_flow − κ₀|`.
const KAPPA0_TOL: f64 = 0.05;
/// `|λ₁ + λ₂ + λ₃|` per replica.
const ZERO_SUM_TOL: f64 = 1e-3;
/// 95% half-width of `−λ₃/λ₁`, and max − min across seeds.
const RATE_CI_HALF_WIDTH: f64 = 0.02;
const RATE_SEED_SPREAD: f64 = 0.02;
/// Per-trace `|ν̂ − (−λ₃/λ₁)|`.
const DIFFUSION_TOL: f64 = 0.1;
/// Trace arclength per direction for the end-to-end comparison.
const DIFFUSION_ARCLENGTH: f64 = 1e6;
/// Ballistic synthetic trace: `|ν̂ − 1|`; bounded trace: `ν̂`.
const BALLISTIC_TOL: f64 = 1e-3;
const BOUNDED_MAX: f64 = 0.05;
/// Relative spread of corner survival fractions (three-fold symmetry).
const CORNER_SYMMETRY_TOL: f64 = 0.1;
/// Render budget for 512² at depth 12.
const RENDER_SECONDS: f64 = 60.0;

fn report(n: u32, pass: bool, details: String) {
    println!("criterion {n}: {} {details}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n}: {details}");
}

fn chain() -> &'static (f64, GibbsChain) {
    static CHAIN: OnceLock<(f64, GibbsChain)> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let k = solve_kappa0(20, (1.0, 4.0), 1e-10).unwrap().kappa0;
        (k, gibbs_chain(&build_transfer(20, k).unwrap()).unwrap())
    })
}

/// 8 replicas of 10⁶ steps each at κ₀.
fn replicas() -> &'static Vec<Spectrum> {
    static R: OnceLock<Vec<Spectrum>> = OnceLock::new();
    R.get_or_init(|| gibbs_replicas(&chain().1, 1, 8, &SpectrumOptions::new(Variant::B, 1_000_000), Exec::Parallel).unwrap())
}

fn random_word(rng: &mut ChaCha8Rng, len: usize, max_n: u64) -> Word {
    let steps = (0..len)
        .map(|_| PathStep::new(if rng.random_bool(0.5) { Branch::Two } else { Branch::Three }, rng.random_range(1..=max_n)))
        .collect();
    Word::new(Perm::ALL[rng.random_range(0..6)], steps)
}

#[test]
fn criterion_01_exact_certificates() {
    let t = Instant::now();
    let b1 = IntMatrix3::from_rows([[12, 6, 5], [11, 6, 5], [2, 1, 1]]);
    let b2 = IntMatrix3::from_rows([[10, 5, 4], [9, 5, 4], [2, 1, 1]]);
    let (p1, c1) = is_galois_pinching(&b1);
    let (p2, c2) = is_galois_pinching(&b2);
    let (tw, _) = is_twisting_pair(&b1, &b2);
    let poly1 = char_poly(&b1).to_string();
    let poly2 = char_poly(&b2).to_string();
    let secs = t.elapsed().as_secs_f64();
    let pass = poly1 == "λ³−19λ²+9λ−1"
        && c1.discriminant == "1940"
        && poly2 == "λ³−16λ²+8λ−1"
        && c2.discriminant == "229"
        && p1
        && p2
        && tw
        && secs < CERTIFICATE_SECONDS;
    report(1, pass, format!("B1 {poly1} Δ={}, B2 {poly2} Δ={}, pinching {p1}/{p2}, twisting {tw}, {secs:.3}s", c1.discriminant, c2.discriminant));
}

#[test]
fn criterion_02_duality() {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut bad = 0;
    for _ in 0..1000 {
        let len = rng.random_range(1..=20);
        let w = random_word(&mut rng, len, 9);
        let b = path_cocycle(&w, Variant::B).product;
        let a = path_cocycle(&w, Variant::A).product;
        if &b.transpose() * &a != IntMatrix3::identity() {
            bad += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    report(2, bad == 0 && secs < DUALITY_SECONDS, format!("(B_wᵀ)⁻¹ = A_w on {} of 1000 words, {secs:.2}s", 1000 - bad));
}

#[test]
fn criterion_03_positivity() {
    let (_, chain) = chain();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut sampled, mut positive, mut draws) = (0, 0, 0u64);
    while sampled < 500 {
        let len = rng.random_range(3..=30);
        let w = sample_word(chain, len, draws);
        draws += 1;
        if !w.is_complete() {
            continue;
        }
        sampled += 1;
        positive += is_positive_path(&w) as usize;
    }
    report(3, positive == sampled, format!("{positive} of {sampled} complete Gibbs paths positive ({draws} draws)"));
}

#[test]
fn criterion_04_pisot() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut loops, mut pisot) = (0, 0);
    while loops < 200 {
        let len = rng.random_range(3..=12);
        let w = random_word(&mut rng, len, 6);
        if !w.is_loop() || !is_positive_path(&w) {
            continue;
        }
        loops += 1;
        pisot += matches!(is_pisot(&path_cocycle(&w, Variant::B).product), Ok(true)) as usize;
    }
    report(4, pisot == loops, format!("{pisot} of {loops} positive loops certified Pisot"));
}

/// Real roots of x³ − 19x² + 9x − 1 by bisection.
fn b1_roots() -> Vec<f64> {
    let f = |x: f64| ((x - 19.0) * x + 9.0) * x - 1.0;
    let mut roots = Vec::new();
    for i in 0..40_000 {
        let (mut lo, mut hi) = (-1.0 + i as f64 * 0.0005, -1.0 + (i + 1) as f64 * 0.0005);
        if f(lo).signum() == f(hi).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo).signum() == f(mid).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

#[test]
fn criterion_05_oracle_spectrum() {
    let mut oracle: Vec<f64> = b1_roots().iter().map(|r| r.abs().ln() / 3.0).collect();
    oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let steps: Vec<PathStep> = [1, 1, 5].map(|n| PathStep::new(Branch::Three, n)).to_vec();
    let s = lyapunov_spectrum(steps.into_iter().cycle(), &SpectrumOptions::new(Variant::B, 30_000)).unwrap();
    let err = (0..3).map(|i| (s.lambda[i] - oracle[i]).abs()).fold(0.0, f64::max);
    report(5, oracle.len() == 3 && err < ORACLE_SPECTRUM_TOL, format!("estimate {:?} vs oracle {oracle:?}, max error {err:.2e}", s.lambda));
}

/// `T` in the chart `(x₁, x₂)` through the actual induction.
fn chart_map(x: [f64; 2]) -> Option<(PathStep, [f64; 2])> {
    let p = SimplexPoint::from_f64([x[0], x[1], 1.0 - x[0] - x[1]], 512).ok()?;
    let (_, step, q) = markov_map_point(&p).ok()?;
    let c = q.coords_f64();
    Some((step, [c[0], c[1]]))
}

#[test]
fn criterion_06_jacobian() {
    let (_, chain) = chain();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut checked, mut worst, mut seed) = (0, 0.0f64, 0u64);
    while checked < 100 {
        let w = sample_word(chain, 30, 60_000 + seed);
        seed += 1;
        let ray = cylinder(&w).interior_ray([rng.random_range(1..1000), rng.random_range(1..1000), rng.random_range(1..1000)]);
        let p = SimplexPoint::exact(ray).unwrap();
        let x = p.coords_f64();
        let (_, r) = roof(&p).unwrap();
        let Some(base) = chart_map([x[0], x[1]]).map(|b| b.0) else { continue };
        let mut h = 1e-7;
        let det = loop {
            let at = |dx: f64, dy: f64| chart_map([x[0] + dx, x[1] + dy]);
            let pts = [at(h, 0.0), at(-h, 0.0), at(0.0, h), at(0.0, -h)];
            if pts.iter().all(|q| q.map(|q| q.0) == Some(base)) {
                let [a, b, c, d] = pts.map(|q| q.unwrap().1);
                let j = [[(a[0] - b[0]) / (2.0 * h), (c[0] - d[0]) / (2.0 * h)], [(a[1] - b[1]) / (2.0 * h), (c[1] - d[1]) / (2.0 * h)]];
                break Some(j[0][0] * j[1][1] - j[0][1] * j[1][0]);
            }
            h /= 4.0;
            if h < 1e-13 {
                break None;
            }
        };
        let Some(det) = det else { continue };
        let expected = (3.0 * r).exp();
        worst = worst.max((det.abs() - expected).abs() / expected);
        checked += 1;
    }
    report(6, worst < JACOBIAN_REL_TOL, format!("max relative error of |det DT| vs e^(3r) over {checked} points: {worst:.2e}"));
}

#[test]
fn criterion_07_roof_bound() {
    let (_, chain) = chain();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut returns, mut min_return, mut min_roof) = (0, f64::INFINITY, f64::INFINITY);
    for seed in 0..500u64 {
        let w = sample_word(chain, 40, 70_000 + seed);
        let ray = cylinder(&w).interior_ray([rng.random_range(1..1000), rng.random_range(1..1000), rng.random_range(1..1000)]);
        let mut q = SimplexPoint::exact(ray).unwrap();
        let mut total = 0.0;
        for k in 0..w.len() {
            let (_, r) = roof(&q).unwrap();
            min_roof = min_roof.min(r);
            total += r;
            q = markov_map_point(&q).unwrap().2;
            if w.prefix(k + 1).is_complete() {
                returns += 1;
                min_return = min_return.min(total);
                break;
            }
        }
    }
    let pass = returns >= 400 && min_return >= 3f64.ln() - 1e-12 && min_roof > 0.0;
    report(7, pass, format!("{returns} complete returns, min return roof {min_return:.4} (log 3 = {:.4}), min single roof {min_roof:.3e}", 3f64.ln()));
}

#[test]
fn criterion_08_pressure() {
    let kappas: Vec<f64> = (0..=40).map(|i| 0.5 + 0.1 * i as f64).collect();
    let curve = pressure_curve(20, &kappas, Exec::Parallel).unwrap();
    let decreasing = curve.windows(2).all(|w| w[1].pressure < w[0].pressure);
    let k20 = solve_kappa0(20, (1.0, 4.0), 1e-10).unwrap();
    let k40 = solve_kappa0(40, (1.0, 4.0), 1e-10).unwrap();
    let (kappa0, chain) = chain();
    let h_flow = chain.flow_entropy();
    let pass = decreasing && (k20.kappa0 - k40.kappa0).abs() < KAPPA0_TOL && (h_flow - kappa0).abs() < KAPPA0_TOL;
    report(
        8,
        pass,
        format!(
            "P strictly decreasing on {} points: {decreasing}; κ₀(20) = {:.5}, κ₀(40) = {:.5} ({} bisections); h_flow = {h_flow:.5}",
            kappas.len(),
            k20.kappa0,
            k40.kappa0,
            k20.bisections
        ),
    );
}

#[test]
fn criterion_09_spectrum_structure() {
    let reps = replicas();
    let p = pool(reps);
    let rate = diffusion_rate(&p).unwrap();
    let rates: Vec<f64> = reps.iter().map(|s| diffusion_rate(s).unwrap().value).collect();
    let spread = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - rates.iter().cloned().fold(f64::INFINITY, f64::min);
    let half_width = 1.96 * rate.stderr;
    let [l1, l2, l3] = p.lambda;
    let ordered = reps.iter().all(|s| s.lambda[0] > 0.0 && 0.0 > s.lambda[1] && s.lambda[1] > s.lambda[2]);
    let pass = l1 > 0.0
        && 0.0 > l2
        && l2 > l3
        && ordered
        && reps.iter().all(|s| s.sum().abs() < ZERO_SUM_TOL)
        && rate.value > 0.5
        && rate.value < 1.0
        && half_width < RATE_CI_HALF_WIDTH
        && spread < RATE_SEED_SPREAD
        && reps.len() >= 8
        && reps.iter().all(|s| s.steps >= 1_000_000);
    report(
        9,
        pass,
        format!("λ = {:?} ± {:?}, Σ = {:.1e}, −λ₃/λ₁ = {:.4} ± {half_width:.4} (95%), cross-seed spread {spread:.4}", p.lambda, p.stderr, p.sum(), rate.value),
    );
}

#[test]
fn criterion_10_end_to_end_diffusion() {
    let (_, chain) = chain();
    let rate = diffusion_rate(&pool(replicas())).unwrap().value;
    let mut jobs = Vec::new();
    for p in 0..3u64 {
        let w = sample_word(chain, 200, replica_seed(1 ^ 0x5A17, p));
        let model = model_from_ray(&cylinder(&w).barycenter_ray()).unwrap();
        for l in 0..2u64 {
            jobs.push((p, l, model.clone()));
        }
    }
    let results = Exec::Parallel.map(jobs, |(p, l, model)| {
        let t = trace_random_level(&model, replica_seed(1, p * 1000 + l), StartPlate::Low, DIFFUSION_ARCLENGTH, 1e-12, 5).unwrap();
        (p, l, t.status, t.arclength(), trace_exponent(&t).unwrap().nu_hat)
    });
    let mut lines = Vec::new();
    let mut pass = true;
    for (p, l, status, len, nu) in &results {
        let ok = (nu - rate).abs() < DIFFUSION_TOL && *nu > 0.4 && *nu < 1.0 && *status == TraceStatus::Completed;
        pass &= ok;
        lines.push(format!("p{p}/l{l} {status:?} t={len:.0} ν̂={nu:.4}{}", if ok { "" } else { " (out)" }));
    }
    let mean = results.iter().map(|r| r.4).sum::<f64>() / results.len() as f64;
    report(10, pass, format!("−λ₃/λ₁ = {rate:.4}; {}; mean ν̂ = {mean:.4}", lines.join(", ")));
}

#[test]
fn criterion_11_tracer_soundness() {
    fn polyline(points: &[(i64, i64)]) -> Vec<Vertex> {
        let mut tick = 0;
        let mut out = vec![Vertex::from_grid(points[0], 0)];
        for w in points.windows(2) {
            tick += 4 * (w[1].0 - w[0].0).abs() + 5 * (w[1].1 - w[0].1).abs();
            out.push(Vertex::from_grid(w[1], tick));
        }
        out
    }
    let line: Vec<(i64, i64)> = (0..=200_000).map(|i| (10 * i, 0)).collect();
    let ballistic = diffusion_exponent(&polyline(&line)).unwrap().nu_hat;
    let square = [(0, 0), (30, 0), (30, 24), (0, 24)];
    let lp: Vec<(i64, i64)> = (0..=40_000).map(|i| square[i % 4]).collect();
    let bounded = diffusion_exponent(&polyline(&lp)).unwrap().nu_hat;

    let (_, chain) = chain();
    let model = model_from_ray(&cylinder(&sample_word(chain, 200, 11)).barycenter_ray()).unwrap();
    let mut degree_ok = true;
    let mut translation_ok = true;
    let mut traces = 0;
    for seed in 0..4u64 {
        let t = trace_random_level(&model, seed, StartPlate::Low, 2e4, 1e-12, 5).unwrap();
        let section = Section::new(&model, &parse(&t.s), 1e-12).unwrap();
        if t.status == TraceStatus::Completed {
            traces += 1;
            for part in [&t.forward, &t.backward] {
                degree_ok &= vertex_degrees(&section, part).unwrap().iter().all(|&d| d == 2);
            }
        }
        let e = [seed as i64 - 1, 2, -(seed as i64)];
        let moved = Section::new(&model, &(&section.s + &model.translation(e)[1]), 1e-12).unwrap();
        let u = trace(&moved, e, StartPlate::Low, 2e4).unwrap();
        let d = |tr: &Trace| tr.forward.iter().map(|v| (v.t, v.distance(&tr.forward[0]))).collect::<Vec<_>>();
        translation_ok &= d(&u) == d(&t);
    }
    let pass = (ballistic - 1.0).abs() < BALLISTIC_TOL && bounded < BOUNDED_MAX && degree_ok && translation_ok && traces > 0;
    report(
        11,
        pass,
        format!("ballistic ν̂ = {ballistic:.6}, loop ν̂ = {bounded:.4}, degree 2 on {traces} completed traces: {degree_ok}, translated d(t) identical: {translation_ok}"),
    );
}

fn parse(s: &str) -> num_rational::BigRational {
    gasket_core::exact::parse_rational(s).unwrap()
}

#[test]
fn criterion_12_gasket_render() {
    let t = Instant::now();
    let img = render_gasket(512, 12, 256, Exec::Parallel);
    let secs = t.elapsed().as_secs_f64();
    let surv = img.survival_fractions();
    let strictly = surv.windows(2).all(|w| w[1] < w[0]);
    // central triangle: every label below one half, escapes at once
    let mut central = (0, 0);
    // corner regions: one label above one half
    let mut corners = [(0usize, 0usize); 3];
    for row in 0..512 {
        for col in 0..512 {
            let Some(l) = pixel_center(512, row, col) else { continue };
            let depth = match img.get(row, col) {
                Pixel::Depth(d) => d,
                _ => continue,
            };
            if l.iter().all(|&x| x < 0.49) {
                central.0 += 1;
                central.1 += (depth == 0) as usize;
            }
            for i in 0..3 {
                if l[i] > 0.51 {
                    corners[i].0 += 1;
                    corners[i].1 += (depth >= 3) as usize;
                }
            }
        }
    }
    let fr: Vec<f64> = corners.iter().map(|c| c.1 as f64 / c.0 as f64).collect();
    let (lo, hi) = (fr.iter().cloned().fold(1.0, f64::min), fr.iter().cloned().fold(0.0, f64::max));
    let pass = strictly && central.0 > 0 && central.0 == central.1 && lo > 0.0 && (hi - lo) / hi < CORNER_SYMMETRY_TOL && secs < RENDER_SECONDS;
    report(
        12,
        pass,
        format!(
            "survival {:?}; central triangle {}/{} pixels depth 0; corner fractions with depth ≥ 3 {fr:.3?}; {secs:.1}s",
            surv.iter().map(|s| (s * 1e4).round() / 1e4).collect::<Vec<_>>(),
            central.1,
            central.0
        ),
    );
}
