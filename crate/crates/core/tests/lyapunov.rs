use std::sync::OnceLock;

use gasket_core::cocycle::{is_pisot, is_positive_path, path_cocycle, Variant};
use gasket_core::exact::{Branch, Perm, SimplexPoint};
use gasket_core::induction::{cylinder, PathStep, Word};
use gasket_core::lyapunov::*;
use gasket_core::thermo::{build_transfer, gibbs_chain, sample_word, solve_kappa0, GibbsChain};
use gasket_core::Exec;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn chain() -> &'static GibbsChain {
    static CHAIN: OnceLock<GibbsChain> = OnceLock::new();
    CHAIN.get_or_init(|| {
        let k = solve_kappa0(20, (1.0, 4.0), 1e-10).unwrap();
        gibbs_chain(&build_transfer(20, k.kappa0).unwrap()).unwrap()
    })
}

fn gibbs_pool(variant: Variant) -> &'static Spectrum {
    static B: OnceLock<Spectrum> = OnceLock::new();
    static A: OnceLock<Spectrum> = OnceLock::new();
    let cell = if variant == Variant::B { &B } else { &A };
    cell.get_or_init(|| {
        let opts = SpectrumOptions::new(variant, 200_000);
        pool(&gibbs_replicas(chain(), 7, 8, &opts, Exec::Parallel).unwrap())
    })
}

fn b1_loop() -> Vec<PathStep> {
    [1, 1, 5].map(|n| PathStep::new(Branch::Three, n)).to_vec()
}

/// Real roots of x³ − 19x² + 9x − 1 by bisection on sign changes.
fn b1_roots() -> [f64; 3] {
    let f = |x: f64| ((x - 19.0) * x + 9.0) * x - 1.0;
    let mut roots = Vec::new();
    let grid: Vec<f64> = (0..=40_000).map(|i| -1.0 + i as f64 * 0.0005).collect();
    for w in grid.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        if f(lo) == 0.0 {
            roots.push(lo);
            continue;
        }
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
    assert_eq!(roots.len(), 3, "{roots:?}");
    [roots[0], roots[1], roots[2]]
}

#[test]
fn b1_periodic_stream_matches_root_moduli() {
    let mut oracle = b1_roots().map(|r| r.abs().ln() / 3.0);
    oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let periods = 10_000;
    let opts = SpectrumOptions::new(Variant::B, 3 * periods);
    let stream = b1_loop().into_iter().cycle();
    let s = lyapunov_spectrum(stream, &opts).unwrap();
    println!("estimate {:?}, oracle {oracle:?}", s.lambda);
    for i in 0..3 {
        assert!((s.lambda[i] - oracle[i]).abs() < 1e-6, "λ{} {} vs {}", i + 1, s.lambda[i], oracle[i]);
    }
    let exact = periodic_exponents(&b1_loop(), Variant::B);
    for i in 0..3 {
        assert!((exact[i] - oracle[i]).abs() < 1e-12);
    }
    let rate = diffusion_rate(&s).unwrap();
    assert!((rate.value - (-oracle[2] / oracle[0])).abs() < 1e-6);
}

#[test]
fn random_loops_converge_to_their_eigenvalues() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let len = rng.random_range(3..8);
        let steps: Vec<PathStep> = (0..len)
            .map(|_| PathStep::new(if rng.random_bool(0.5) { Branch::Two } else { Branch::Three }, rng.random_range(1..5)))
            .collect();
        let exact = periodic_exponents(&steps, Variant::B);
        // only simple spectra have a well-separated flag to converge to
        if (exact[0] - exact[1]).abs() < 1e-3 || (exact[1] - exact[2]).abs() < 1e-3 {
            continue;
        }
        let opts = SpectrumOptions::new(Variant::B, (len as u64) * 8 * 2000);
        let s = lyapunov_spectrum(steps.iter().copied().cycle(), &opts).unwrap();
        for i in 0..3 {
            assert!((s.lambda[i] - exact[i]).abs() < 1e-4, "{steps:?}: {:?} vs {exact:?}", s.lambda);
        }
    }
}

#[test]
fn variant_a_is_negated_reverse_of_b() {
    let opts_b = SpectrumOptions::new(Variant::B, 200_000);
    let opts_a = SpectrumOptions::new(Variant::A, 200_000);
    let b = gibbs_spectrum(chain(), 42, &opts_b).unwrap();
    let a = gibbs_spectrum(chain(), 42, &opts_a).unwrap();
    println!("B {:?}\nA {:?}", b.lambda, a.lambda);
    for i in 0..3 {
        let se = (a.stderr[i].powi(2) + b.stderr[2 - i].powi(2)).sqrt();
        assert!((a.lambda[i] + b.lambda[2 - i]).abs() < 3.0 * se.max(1e-9), "{i}");
    }
    // periodic streams: exact duality of the loop product
    let pa = periodic_exponents(&b1_loop(), Variant::A);
    let pb = periodic_exponents(&b1_loop(), Variant::B);
    for i in 0..3 {
        assert!((pa[i] + pb[2 - i]).abs() < 1e-12);
    }
}

#[test]
fn exponents_sum_to_zero() {
    let s = lyapunov_spectrum(b1_loop().into_iter().cycle(), &SpectrumOptions::new(Variant::B, 30_000)).unwrap();
    assert!(s.sum().abs() < 1e-3);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let stream = std::iter::from_fn(move || {
        Some(PathStep::new(if rng.random_bool(0.5) { Branch::Two } else { Branch::Three }, rng.random_range(1..10)))
    });
    let s = lyapunov_spectrum(stream, &SpectrumOptions::new(Variant::B, 100_000)).unwrap();
    assert!(s.sum().abs() < 1e-3, "{}", s.sum());
    for v in [Variant::B, Variant::A] {
        let p = gibbs_pool(v);
        let se = p.stderr.iter().map(|e| e * e).sum::<f64>().sqrt();
        assert!(p.sum().abs() < 1e-3 && p.sum().abs() < 3.0 * se.max(1e-12), "{v:?} {}", p.sum());
    }
}

#[test]
fn gibbs_spectrum_is_simple_with_rate_between_half_and_one() {
    let p = gibbs_pool(Variant::B);
    let [l1, l2, l3] = p.lambda;
    let [e1, e2, e3] = p.stderr;
    println!("pooled {:?} ± {:?}", p.lambda, p.stderr);
    assert!(l1 > 3.0 * e1 && l2 < -3.0 * e2 && l3 < l2 - 3.0 * (e2 + e3));
    let r = diffusion_rate(p).unwrap();
    println!("rate {} ± {}", r.value, r.stderr);
    assert!(r.value - 3.0 * r.stderr > 0.5 && r.value + 3.0 * r.stderr < 1.0);
}

#[test]
fn replicas_are_reproducible_and_exec_independent() {
    let opts = SpectrumOptions::new(Variant::B, 20_000);
    let par = gibbs_replicas(chain(), 11, 4, &opts, Exec::Parallel).unwrap();
    let seq = gibbs_replicas(chain(), 11, 4, &opts, Exec::Sequential).unwrap();
    assert_eq!(par, seq);
    assert_ne!(par[0].lambda, par[1].lambda);
    let json = par[0].to_json();
    for key in ["\"seed\"", "\"source\": \"gibbs\"", "\"steps\": 20000", "\"variant\": \"b\""] {
        assert!(json.contains(key), "{key} in {json}");
    }
}

fn depth_200_start(seed: u64, bits: u32) -> (Word, SimplexPoint) {
    let w = sample_word(chain(), 200, seed);
    let p = SimplexPoint::from_ray(&cylinder(&w).barycenter_ray(), bits).unwrap();
    (w, p)
}

#[test]
fn direct_orbits_survive_150_steps_at_1024_bits() {
    for seed in 0..8 {
        let (w, p) = depth_200_start(seed, 1024);
        let (steps, stop) = orbit_steps(&p, 1000);
        println!("seed {seed}: {} steps, stop {stop:?}", steps.len());
        assert!(steps.len() >= 150);
        assert_eq!(&steps[..200.min(steps.len())], &w.steps[..200.min(steps.len())]);
    }
}

#[test]
fn direct_orbits_agree_with_gibbs_streams() {
    let opts = SpectrumOptions { variant: Variant::B, block_len: 8, total_steps: 120, warmup_steps: 24, batches: 4 };
    let spectra: Vec<Spectrum> = Exec::Parallel
        .map_range(64, |r| direct_orbit_exponents(&depth_200_start(1000 + r as u64, 1024).1, &opts).unwrap());
    let direct = pool(&spectra);
    let gibbs = gibbs_pool(Variant::B);
    println!("direct {:?} ± {:?}\ngibbs  {:?} ± {:?}", direct.lambda, direct.stderr, gibbs.lambda, gibbs.stderr);
    for i in 0..3 {
        let joint = (direct.stderr[i].powi(2) + gibbs.stderr[i].powi(2)).sqrt();
        assert!((direct.lambda[i] - gibbs.lambda[i]).abs() < 2.0 * joint, "λ{}", i + 1);
    }
}

#[test]
fn short_precision_is_reported() {
    let (_, p) = depth_200_start(3, 64);
    let opts = SpectrumOptions::new(Variant::B, 1000);
    assert!(matches!(direct_orbit_exponents(&p, &opts), Err(LyapunovError::PrecisionExhausted { .. })));
}

#[test]
fn pisot_loops_have_one_expanding_direction() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    while checked < 25 {
        let counts: Vec<u64> = (0..3).map(|_| rng.random_range(1..7)).collect();
        let w = Word::new(Perm::IDENTITY, counts.iter().map(|&n| PathStep::new(Branch::Three, n)).collect());
        if !is_positive_path(&w) {
            continue;
        }
        let m = path_cocycle(&w, Variant::B).product;
        let Ok(pisot) = is_pisot(&m) else { continue };
        let opts = SpectrumOptions::new(Variant::B, 24_000);
        let s = lyapunov_spectrum(w.steps.iter().copied().cycle(), &opts).unwrap();
        let echo = s.lambda[0] > 0.0 && s.lambda[1] < 0.0 && s.lambda[2] < 0.0;
        assert_eq!(pisot, echo, "{counts:?} {:?}", s.lambda);
        checked += 1;
    }
}

#[test]
fn rate_edge_cases() {
    let mut s = gibbs_pool(Variant::B).clone();
    s.lambda = [0.8, 0.0, -0.8];
    s.stderr = [0.01, 0.01, 0.01];
    assert!((diffusion_rate(&s).unwrap().value - 1.0).abs() < 1e-15);
    s.lambda = [0.005, 0.0, -0.005];
    assert!(matches!(diffusion_rate(&s), Err(LyapunovError::NonHyperbolic { .. })));
}

#[test]
fn option_errors() {
    let short = SpectrumOptions::new(Variant::B, 70);
    assert!(matches!(lyapunov_spectrum(b1_loop().into_iter().cycle(), &short), Err(LyapunovError::TooShort { .. })));
    let mut big = SpectrumOptions::new(Variant::B, 100_000);
    big.block_len = 200;
    let heavy = std::iter::repeat(PathStep::new(Branch::Two, 9));
    assert!(matches!(lyapunov_spectrum(heavy, &big), Err(LyapunovError::Overflow { block_len: 200 })));
    let ended = lyapunov_spectrum(b1_loop(), &SpectrumOptions::new(Variant::B, 1000));
    assert!(matches!(ended, Err(LyapunovError::StreamEnded(_))));
}
