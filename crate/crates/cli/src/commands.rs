use gasket_core::cocycle::{is_galois_pinching, is_twisting_pair, path_cocycle, Certificate, TwistingCertificate, Variant};
use gasket_core::induction::render_gasket;
use gasket_core::lyapunov::{diffusion_rate, gibbs_replicas, pool, Rate, Spectrum, SpectrumOptions};
use gasket_core::surface::{
    trace, trace_csv, trace_random_level, trace_svg, Section, StartPlate, Trace, TraceManifest,
    TraceStatus,
};
use gasket_core::thermo::{pressure_curve, pressure_csv, replica_seed, solve_kappa0, GibbsChain, Kappa0, PressurePoint};
use gasket_core::{Branch, Exec, PathStep, Perm, Word};
use serde::Serialize;

use crate::config::{Parameters, RunConfig};
use crate::failure::Failure;
use crate::output::Output;

#[derive(Serialize)]
struct Manifest<'a, T: Serialize> {
    command: &'static str,
    config: &'a RunConfig,
    files: Vec<String>,
    result: T,
}

fn finish<T: Serialize>(out: &mut Output, command: &'static str, cfg: &RunConfig, result: T) -> Result<(), Failure> {
    let name = format!("{command}.json");
    let mut files = out.files();
    files.push(name.clone());
    out.write_json(&name, &Manifest { command, config: cfg, files, result })
}

#[derive(Serialize)]
struct GasketResult {
    survival_fractions: Vec<f64>,
    monotone: bool,
}

pub fn gasket(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let img = render_gasket(cfg.resolution, cfg.depth, cfg.precision, Exec::Parallel);
    out.write("gasket.ppm", img.to_ppm())?;
    out.write("gasket_depth.csv", img.to_csv())?;
    let survival_fractions = img.survival_fractions();
    let monotone = survival_fractions.windows(2).all(|w| w[1] <= w[0]);
    finish(out, "gasket", cfg, GasketResult { survival_fractions, monotone })
}

fn three_cycle(counts: [u64; 3]) -> Word {
    Word::new(Perm::IDENTITY, counts.iter().map(|&n| PathStep::new(Branch::Three, n)).collect())
}

#[derive(Serialize)]
struct NamedCertificate {
    name: String,
    word: String,
    pinching: bool,
    certificate: Certificate,
}

#[derive(Serialize)]
struct CertifyResult {
    certificates: Vec<NamedCertificate>,
    twisting: TwistingCertificate,
}

pub fn certify(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let mut words = vec![("B1".to_string(), three_cycle([1, 1, 5])), ("B2".to_string(), three_cycle([1, 1, 4]))];
    for w in &cfg.words {
        let parsed = Word::parse_compact(w).ok_or_else(|| Failure::bad_parameters(format!("bad word {w:?}")))?;
        if !parsed.is_loop() {
            return Err(Failure::bad_parameters(format!("{w} is not a loop")));
        }
        words.push((w.clone(), parsed));
    }
    let products: Vec<_> = words.iter().map(|(_, w)| path_cocycle(w, Variant::B).product).collect();
    let certificates = words
        .iter()
        .zip(&products)
        .map(|((name, w), m)| {
            let (pinching, certificate) = is_galois_pinching(m);
            NamedCertificate { name: name.clone(), word: w.to_compact(), pinching, certificate }
        })
        .collect();
    let (_, twisting) = is_twisting_pair(&products[0], &products[1]);
    let result = CertifyResult { certificates, twisting };
    out.write_json("certificates.json", &result)?;
    finish(out, "certify", cfg, ())
}

#[derive(Serialize, Clone)]
pub struct SpectrumResult {
    pub kappa0: f64,
    pub replicas: Vec<Spectrum>,
    pub pooled: Spectrum,
    pub rate: Rate,
    /// 95% interval for `−λ₃/λ₁`.
    pub rate_ci: [f64; 2],
    pub replica_rates: Vec<f64>,
}

fn spectrum_of(cfg: &RunConfig, kappa0: f64, chain: &GibbsChain) -> Result<SpectrumResult, Failure> {
    let opts = SpectrumOptions::new(Variant::B, cfg.steps);
    let replicas = gibbs_replicas(chain, cfg.seed, cfg.replicas, &opts, Exec::Parallel)?;
    let pooled = pool(&replicas);
    let replica_rates = replicas.iter().map(|s| diffusion_rate(s).map(|r| r.value)).collect::<Result<_, _>>()?;
    let mut rate = diffusion_rate(&pooled)?;
    if replicas.len() >= 2 {
        // across-replica spread of the ratio itself
        let rates: &Vec<f64> = &replica_rates;
        let k = rates.len() as f64;
        let mean = rates.iter().sum::<f64>() / k;
        rate.stderr = (rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt();
    }
    let rate_ci = [rate.value - 1.96 * rate.stderr, rate.value + 1.96 * rate.stderr];
    Ok(SpectrumResult { kappa0, replicas, pooled, rate, rate_ci, replica_rates })
}

pub fn spectrum(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let (kappa0, chain) = cfg.chain()?;
    let result = spectrum_of(cfg, kappa0, &chain)?;
    out.write("spectrum.json", result.pooled.to_json() + "\n")?;
    finish(out, "spectrum", cfg, result)
}

#[derive(Serialize)]
struct PressureResult {
    kappa0: Kappa0,
    points: Vec<PressurePoint>,
    decreasing: bool,
}

pub fn pressure(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let points = pressure_curve(cfg.nmax, &cfg.kappas, Exec::Parallel)?;
    out.write("pressure.csv", pressure_csv(&points))?;
    let kappa0 = solve_kappa0(cfg.nmax, (1.0, 4.0), 1e-10)?;
    let decreasing = points.windows(2).all(|w| w[0].kappa >= w[1].kappa || w[1].pressure < w[0].pressure);
    finish(out, "pressure", cfg, PressureResult { kappa0, points, decreasing })
}

#[derive(Serialize, Clone)]
pub struct TraceSummary {
    pub point: usize,
    pub label: String,
    pub level_index: usize,
    pub manifest: TraceManifest,
    /// Second start on the other plate of the seed cell.
    pub other_start: Option<TraceManifest>,
    /// Whether the second start lies on the traced component (within the
    /// traced length).
    pub same_component: Option<bool>,
    pub files: Vec<String>,
}

/// First trace, second-start trace, level seed.
type Traced = (Trace, Option<Trace>, Option<u64>);

fn run_traces(cfg: &RunConfig, chain: Option<&GibbsChain>, out: &mut Output) -> Result<Vec<TraceSummary>, Failure> {
    let points = cfg.parameter_points(chain)?;
    let fixed = cfg.fixed_level()?;
    let mut jobs = Vec::new();
    for (p, point) in points.iter().enumerate() {
        let levels = if fixed.is_some() { 1 } else { cfg.levels };
        for l in 0..levels {
            jobs.push((p, l, &point.model, point.label.clone()));
        }
    }
    let traced: Vec<Result<Traced, Failure>> = Exec::Parallel.map(jobs.clone(), |(p, l, model, _)| {
        let (first, seed) = match &fixed {
            Some(s) => (trace(&Section::new(model, s, cfg.tolerance)?, [0, 0, 0], StartPlate::Low, cfg.length)?, None),
            None => {
                let seed = replica_seed(cfg.seed, (p * 1000 + l) as u64);
                (trace_random_level(model, seed, StartPlate::Low, cfg.length, cfg.tolerance, 5)?, Some(seed))
            }
        };
        let s = gasket_core::exact::parse_rational(&first.s).expect("own output");
        let other = trace(&Section::new(model, &s, cfg.tolerance)?, [0, 0, 0], StartPlate::High, cfg.length).ok();
        Ok((first, other, seed))
    });
    let mut summaries = Vec::new();
    for ((p, l, model, label), res) in jobs.into_iter().zip(traced) {
        let (first, other, seed) = res?;
        let stem = format!("trace_p{p}_l{l}");
        out.write(&format!("{stem}.csv"), trace_csv(&first.forward))?;
        out.write(&format!("{stem}.svg"), trace_svg(&first))?;
        let manifest = TraceManifest::new(model, &first, seed);
        let same_component = other.as_ref().map(|o| {
            let mid = o.forward[0].grid;
            first.forward.iter().chain(&first.backward).any(|v| v.grid == mid)
        });
        let other_start = other.as_ref().map(|o| TraceManifest::new(model, o, seed));
        let summary = TraceSummary {
            point: p,
            label,
            level_index: l,
            manifest,
            other_start,
            same_component,
            files: vec![format!("{stem}.csv"), format!("{stem}.svg"), format!("{stem}.json")],
        };
        out.write_json(&format!("{stem}.json"), &summary)?;
        summaries.push(summary);
    }
    Ok(summaries)
}

pub fn trace_cmd(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let chain = match cfg.parameters {
        Parameters::Sampled { .. } => Some(cfg.chain()?.1),
        _ => None,
    };
    let summaries = run_traces(cfg, chain.as_ref(), out)?;
    finish(out, "trace", cfg, summaries)
}

#[derive(Serialize)]
struct Comparison {
    point: usize,
    level_index: usize,
    status: TraceStatus,
    nu_hat: Option<f64>,
    nu_hat_other_start: Option<f64>,
    difference: Option<f64>,
    within_0_1: bool,
    in_half_to_one: bool,
}

#[derive(Serialize)]
struct PipelineResult {
    kappa0: f64,
    lambda: [f64; 3],
    lambda_stderr: [f64; 3],
    rate: Rate,
    rate_ci: [f64; 2],
    traces: Vec<Comparison>,
    nu_hat_mean: Option<f64>,
    nu_hat_stderr: Option<f64>,
    all_within_0_1: bool,
}

pub fn pipeline(cfg: &RunConfig, out: &mut Output) -> Result<(), Failure> {
    let (kappa0, chain) = cfg.chain()?;
    let sr = spectrum_of(cfg, kappa0, &chain)?;
    out.write("spectrum.json", sr.pooled.to_json() + "\n")?;
    let summaries = run_traces(cfg, Some(&chain), out)?;
    let rate = sr.rate.value;
    let traces: Vec<Comparison> = summaries
        .iter()
        .map(|s| {
            let nu = s.manifest.nu_hat;
            Comparison {
                point: s.point,
                level_index: s.level_index,
                status: s.manifest.status,
                nu_hat: nu,
                nu_hat_other_start: s.other_start.as_ref().and_then(|o| o.nu_hat),
                difference: nu.map(|v| v - rate),
                within_0_1: nu.is_some_and(|v| (v - rate).abs() < 0.1),
                in_half_to_one: nu.is_some_and(|v| v > 0.5 && v < 1.0),
            }
        })
        .collect();
    let nus: Vec<f64> = traces.iter().filter_map(|t| t.nu_hat).collect();
    let k = nus.len() as f64;
    let nu_hat_mean = (!nus.is_empty()).then(|| nus.iter().sum::<f64>() / k);
    let nu_hat_stderr = nu_hat_mean
        .filter(|_| nus.len() > 1)
        .map(|m| (nus.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt());
    let result = PipelineResult {
        kappa0,
        lambda: sr.pooled.lambda,
        lambda_stderr: sr.pooled.stderr,
        rate: sr.rate,
        rate_ci: sr.rate_ci,
        all_within_0_1: traces.iter().all(|t| t.within_0_1),
        traces,
        nu_hat_mean,
        nu_hat_stderr,
    };
    finish(out, "pipeline", cfg, result)
}
