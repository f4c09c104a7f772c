//! Lyapunov spectra of the cocycles by QR deflation.
//!
//! Steps are multiplied exactly in `i128` blocks of `block_len` steps, then a
//! `f64` orthonormal frame is pushed through each block and re-orthonormalized.
//! Exponents are normalized per accelerated step.

use serde::{Deserialize, Serialize};

use crate::cocycle::{step_matrix, Variant};
use crate::exact::{IntMatrix3, SimplexPoint};
use crate::exec::Exec;
use crate::induction::{markov_map_point, InductionError, PathStep};
use crate::thermo::{replica_seed, GibbsChain};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LyapunovError {
    #[error("block product of {block_len} steps overflows 128-bit integers; reduce block_len")]
    Overflow { block_len: usize },
    #[error("need at least 10 blocks of {block_len} steps, got {total_steps} steps")]
    TooShort { total_steps: u64, block_len: usize },
    #[error("stream ended after {0} steps")]
    StreamEnded(u64),
    #[error("top exponent {lambda1} is not above its standard error {stderr1}")]
    NonHyperbolic { lambda1: f64, stderr1: f64 },
    #[error("precision exhausted after {step} steps of the orbit")]
    PrecisionExhausted { step: u64 },
    #[error("orbit reached a hole after {step} steps")]
    HoleReached { step: u64 },
}

/// Estimated exponents, per accelerated step, in QR order (λ₁ ≥ λ₂ ≥ λ₃).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub variant: Variant,
    pub lambda: [f64; 3],
    pub stderr: [f64; 3],
    /// Steps entering the averages (warmup excluded).
    pub steps: u64,
    pub warmup: u64,
    pub block_len: usize,
    pub seed: Option<u64>,
    pub source: String,
}

impl Spectrum {
    pub fn sum(&self) -> f64 {
        self.lambda.iter().sum()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub variant: Variant,
    pub block_len: usize,
    /// Measured steps, after the warmup.
    pub total_steps: u64,
    /// Steps discarded while the frame aligns with the Oseledets flag.
    pub warmup_steps: u64,
    pub batches: usize,
}

impl SpectrumOptions {
    pub fn new(variant: Variant, total_steps: u64) -> Self {
        SpectrumOptions { variant, block_len: 8, total_steps, warmup_steps: 2048, batches: 32 }
    }
}

type M3 = [[i128; 3]; 3];
type F3 = [[f64; 3]; 3];

const I3: M3 = [[1, 0, 0], [0, 1, 0], [0, 0, 1]];

fn mul_checked(a: &M3, b: &M3) -> Option<M3> {
    let mut out = [[0i128; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut s: i128 = 0;
            for k in 0..3 {
                s = s.checked_add(a[i][k].checked_mul(b[k][j])?)?;
            }
            out[i][j] = s;
        }
    }
    Some(out)
}

/// `S^T X(n)` as an `i128` matrix, without going through big integers.
fn step_i128(step: PathStep, variant: Variant, frames: &[M3; 2]) -> Option<M3> {
    let n = i128::from(step.n);
    let block = match variant {
        Variant::B => [[1, 0, 0], [n, 1, 0], [n, 0, 1]],
        Variant::A => [[1, -n, -n], [0, 1, 0], [0, 0, 1]],
    };
    mul_checked(&frames[step.branch.index()], &block)
}

fn frames() -> [M3; 2] {
    crate::exact::Branch::ALL.map(|b| b.frame_change().transpose().to_i128().expect("small"))
}

/// Modified Gram–Schmidt with one re-orthogonalization pass; returns `Q`
/// (columns) and the diagonal of `R`.
fn qr(a: &F3) -> (F3, [f64; 3]) {
    let mut cols: [[f64; 3]; 3] = std::array::from_fn(|j| std::array::from_fn(|i| a[i][j]));
    let mut diag = [0.0; 3];
    for j in 0..3 {
        for _ in 0..2 {
            for k in 0..j {
                let d: f64 = (0..3).map(|i| cols[j][i] * cols[k][i]).sum();
                for i in 0..3 {
                    cols[j][i] -= d * cols[k][i];
                }
            }
        }
        let norm = cols[j].iter().map(|x| x * x).sum::<f64>().sqrt();
        diag[j] = norm;
        for i in 0..3 {
            cols[j][i] /= norm;
        }
    }
    let q = std::array::from_fn(|i| std::array::from_fn(|j| cols[j][i]));
    (q, diag)
}

/// Spectrum of the cocycle along a stream of accelerated steps.
pub fn lyapunov_spectrum<I>(stream: I, opts: &SpectrumOptions) -> Result<Spectrum, LyapunovError>
where
    I: IntoIterator<Item = PathStep>,
{
    let bl = opts.block_len.max(1);
    if opts.total_steps < 10 * bl as u64 {
        return Err(LyapunovError::TooShort { total_steps: opts.total_steps, block_len: bl });
    }
    let frames = frames();
    let mut it = stream.into_iter();
    let mut q: F3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    let mut consumed = 0u64;
    let total = opts.warmup_steps + opts.total_steps;
    let mut block_sums: Vec<[f64; 3]> = Vec::with_capacity((opts.total_steps as usize).div_ceil(bl));
    let mut block_steps: Vec<u64> = Vec::new();
    while consumed < total {
        // never let a block straddle the end of the warmup
        let limit = if consumed < opts.warmup_steps { opts.warmup_steps - consumed } else { total - consumed };
        let len = (bl as u64).min(limit);
        let mut p = I3;
        for _ in 0..len {
            let step = it.next().ok_or(LyapunovError::StreamEnded(consumed))?;
            let c = step_i128(step, opts.variant, &frames).ok_or(LyapunovError::Overflow { block_len: bl })?;
            p = mul_checked(&c, &p).ok_or(LyapunovError::Overflow { block_len: bl })?;
            consumed += 1;
        }
        let pf: F3 = p.map(|r| r.map(|x| x as f64));
        let a: F3 = std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|k| pf[i][k] * q[k][j]).sum()));
        let (nq, diag) = qr(&a);
        q = nq;
        if consumed > opts.warmup_steps {
            block_sums.push(diag.map(f64::ln));
            block_steps.push(len);
        }
    }
    let steps: u64 = block_steps.iter().sum();
    let mut lambda = [0.0; 3];
    for b in &block_sums {
        for i in 0..3 {
            lambda[i] += b[i];
        }
    }
    let lambda = lambda.map(|x| x / steps as f64);

    // batch means over contiguous runs of blocks
    let nb = opts.batches.clamp(2, block_sums.len());
    let per = block_sums.len() / nb;
    let mut means = Vec::with_capacity(nb);
    for b in 0..nb {
        let range = b * per..if b + 1 == nb { block_sums.len() } else { (b + 1) * per };
        let s: u64 = block_steps[range.clone()].iter().sum();
        let mut m = [0.0; 3];
        for blk in &block_sums[range] {
            for i in 0..3 {
                m[i] += blk[i];
            }
        }
        means.push(m.map(|x| x / s as f64));
    }
    let stderr = std::array::from_fn(|i| {
        let var = means.iter().map(|m| (m[i] - lambda[i]).powi(2)).sum::<f64>() / (nb - 1) as f64;
        (var / nb as f64).sqrt()
    });
    Ok(Spectrum {
        variant: opts.variant,
        lambda,
        stderr,
        steps,
        warmup: opts.warmup_steps,
        block_len: bl,
        seed: None,
        source: "stream".into(),
    })
}

/// Exponents of the infinite periodic repetition of `word`, from the exact
/// loop product (root moduli of its characteristic polynomial).
pub fn periodic_exponents(steps: &[PathStep], variant: Variant) -> [f64; 3] {
    let m = steps.iter().fold(IntMatrix3::identity(), |acc, &s| &step_matrix(s, variant) * &acc);
    let c = crate::exact::char_poly(&m);
    let mut logs: Vec<f64> = c.roots_f64().iter().map(|(re, im)| (re * re + im * im).sqrt().ln() / steps.len() as f64).collect();
    if logs.len() < 3 {
        // repeated roots: fall back to the distinct ones
        while logs.len() < 3 {
            logs.push(logs[logs.len() - 1]);
        }
    }
    logs.sort_by(|a, b| b.partial_cmp(a).unwrap());
    [logs[0], logs[1], logs[2]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub stderr: f64,
}

/// `−λ₃/λ₁` with first-order error propagation.
pub fn diffusion_rate(s: &Spectrum) -> Result<Rate, LyapunovError> {
    let (l1, l3) = (s.lambda[0], s.lambda[2]);
    let (e1, e3) = (s.stderr[0], s.stderr[2]);
    if l1 <= e1 || l1 <= 0.0 {
        return Err(LyapunovError::NonHyperbolic { lambda1: l1, stderr1: e1 });
    }
    let value = -l3 / l1;
    let stderr = ((e3 / l1).powi(2) + (l3 * e1 / (l1 * l1)).powi(2)).sqrt();
    Ok(Rate { value, stderr })
}

/// Accelerated steps along the actual orbit of `start`, stopping at `max`
/// steps or when the point can no longer be iterated.
pub fn orbit_steps(start: &SimplexPoint, max: u64) -> (Vec<PathStep>, Option<InductionError>) {
    let mut p = start.clone();
    let mut out = Vec::new();
    while (out.len() as u64) < max {
        match markov_map_point(&p) {
            Ok((_, step, q)) => {
                out.push(step);
                p = q;
            }
            Err(e) => return (out, Some(e)),
        }
    }
    (out, None)
}

/// Spectrum along the true symbolic orbit of a point.
pub fn direct_orbit_exponents(start: &SimplexPoint, opts: &SpectrumOptions) -> Result<Spectrum, LyapunovError> {
    let need = opts.warmup_steps + opts.total_steps;
    let (steps, err) = orbit_steps(start, need);
    if (steps.len() as u64) < need {
        let step = steps.len() as u64;
        return Err(match err {
            Some(InductionError::HoleReached { .. }) => LyapunovError::HoleReached { step },
            _ => LyapunovError::PrecisionExhausted { step },
        });
    }
    let mut s = lyapunov_spectrum(steps, opts)?;
    s.source = "orbit".into();
    Ok(s)
}

/// Spectrum along a Gibbs-sampled stream.
pub fn gibbs_spectrum(chain: &GibbsChain, seed: u64, opts: &SpectrumOptions) -> Result<Spectrum, LyapunovError> {
    let stream = chain.walk(seed).map(|s| chain.states[s].step());
    let mut s = lyapunov_spectrum(stream, opts)?;
    s.seed = Some(seed);
    s.source = "gibbs".into();
    Ok(s)
}

/// Independent replicas, one seed each (derived from `master`).
pub fn gibbs_replicas(
    chain: &GibbsChain,
    master: u64,
    replicas: usize,
    opts: &SpectrumOptions,
    exec: Exec,
) -> Result<Vec<Spectrum>, LyapunovError> {
    exec.map_range(replicas, |r| gibbs_spectrum(chain, replica_seed(master, r as u64), opts))
        .into_iter()
        .collect()
}

/// Pooled estimate over replicas: mean exponents and the standard error of
/// the mean across replicas.
pub fn pool(spectra: &[Spectrum]) -> Spectrum {
    let k = spectra.len() as f64;
    let lambda: [f64; 3] = std::array::from_fn(|i| spectra.iter().map(|s| s.lambda[i]).sum::<f64>() / k);
    let stderr = std::array::from_fn(|i| {
        if spectra.len() < 2 {
            return spectra[0].stderr[i];
        }
        let var = spectra.iter().map(|s| (s.lambda[i] - lambda[i]).powi(2)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    });
    Spectrum {
        variant: spectra[0].variant,
        lambda,
        stderr,
        steps: spectra.iter().map(|s| s.steps).sum(),
        warmup: spectra[0].warmup,
        block_len: spectra[0].block_len,
        seed: None,
        source: format!("pooled {} replicas", spectra.len()),
    }
}
