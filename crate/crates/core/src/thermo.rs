//! Thermodynamic formalism on a truncated countable shift.
//!
//! States are accelerated steps `(order, branch, n)` with `n ≤ N_max`; a
//! state may be followed by any state whose order is the one reached after
//! it. The potential is `−κ·r` with `r` the roof function, i.e. the log of
//! the ℓ¹ renormalization swallowed by the Markov map.

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{weighted::WeightedAliasIndex, Distribution};
use serde::{Deserialize, Serialize};

use crate::exact::{Branch, IntMatrix3, Perm, SimplexPoint};
use crate::exec::Exec;
use crate::induction::{markov_map_point, winner_transfer, InductionError, PathStep, Word, ZeroCoordinate};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThermoError {
    #[error("power iteration did not converge in {0} iterations")]
    NoConvergence(usize),
    #[error("pressure does not change sign on [{lo}, {hi}] (P = {p_lo}, {p_hi})")]
    NoSignChange { lo: f64, hi: f64, p_lo: f64, p_hi: f64 },
    #[error("period {0} is too large for exact enumeration (at most 5)")]
    TooLarge(usize),
    #[error("truncation must be at least 2, got {0}")]
    BadTruncation(u32),
}

/// One symbol of the shift: an accelerated step taken from order `tau`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ShiftState {
    pub tau: Perm,
    pub branch: Branch,
    pub n: u32,
}

impl ShiftState {
    pub fn step(self) -> PathStep {
        PathStep { branch: self.branch, n: self.n as u64 }
    }

    pub fn next_order(self) -> Perm {
        self.tau.after(self.branch)
    }

    pub fn transfer(self) -> IntMatrix3 {
        winner_transfer(self.tau.top(), self.n as u64)
    }

    /// Index in the enumeration used by [`TransferModel`]: states sharing an
    /// order are contiguous.
    pub fn index(self, n_max: u32) -> usize {
        (self.tau.index() * 2 + self.branch.index()) * n_max as usize + (self.n as usize - 1)
    }
}

/// All `12·N_max` states, ordered by [`ShiftState::index`].
pub fn enumerate_states(n_max: u32) -> Vec<ShiftState> {
    let mut out = Vec::with_capacity(12 * n_max as usize);
    for tau in Perm::ALL {
        for branch in Branch::ALL {
            for n in 1..=n_max {
                out.push(ShiftState { tau, branch, n });
            }
        }
    }
    out
}

/// Interior point of an ordered region, largest weight on the top label.
pub const REPRESENTATIVE_WEIGHTS: [f64; 3] = [8.0, 3.0, 1.0];

/// Short description of the representative rule, embedded in reports.
pub const REPRESENTATIVE_RULE: &str =
    "per transition (s, s'): roof of s at the normalized image under M_s' of the point (8,3,1) of the order after s'";

/// Roof of a transfer `m` at the unnormalized preimage `next`:
/// `log ‖m · next̂‖₁` with `next̂` scaled to unit sum.
pub fn roof_of_transfer(m: &IntMatrix3, next: &[f64; 3]) -> Result<f64, ZeroCoordinate> {
    if next.iter().any(|&x| x <= 0.0 || !x.is_finite()) {
        return Err(ZeroCoordinate);
    }
    let total: f64 = next.iter().sum();
    let f = m.to_f64();
    let image: f64 = (0..3).map(|i| (0..3).map(|j| f[i][j] * next[j] / total).sum::<f64>()).sum();
    Ok(image.ln())
}

/// Roof at a point: the accelerated step taken there and `log` of the ratio
/// of total length before and after it, computed from the exact ray.
pub fn roof(p: &SimplexPoint) -> Result<(PathStep, f64), InductionError> {
    let (_, step, q) = markov_map_point(p)?;
    Ok((step, log_ratio(&p.total(), &q.total())))
}

fn log_ratio(a: &num_bigint::BigInt, b: &num_bigint::BigInt) -> f64 {
    let shift = a.bits().max(b.bits()).saturating_sub(60);
    let fa = (a >> shift).to_f64().unwrap();
    let fb = (b >> shift).to_f64().unwrap();
    fa.ln() - fb.ln()
}

/// Truncated transfer operator with weights `exp(−κ·r(s, s'))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferModel {
    pub n_max: u32,
    pub kappa: f64,
    pub states: Vec<ShiftState>,
    /// `roof[s * 2N + j]` for the j-th successor of state `s`.
    roof: Vec<f64>,
}

pub fn build_transfer(n_max: u32, kappa: f64) -> Result<TransferModel, ThermoError> {
    if n_max < 2 {
        return Err(ThermoError::BadTruncation(n_max));
    }
    assert!(kappa >= 0.0, "kappa must be non-negative");
    let states = enumerate_states(n_max);
    let block = 2 * n_max as usize;
    // representative of each state's cell, as a unit-sum vector
    let reps: Vec<[f64; 3]> = states
        .iter()
        .map(|s| {
            let after = s.next_order();
            let mut u = [0.0; 3];
            for (k, &label) in after.0.iter().enumerate() {
                u[label as usize] = REPRESENTATIVE_WEIGHTS[k];
            }
            let f = s.transfer().to_f64();
            let v: [f64; 3] = std::array::from_fn(|i| (0..3).map(|j| f[i][j] * u[j]).sum());
            let t: f64 = v.iter().sum();
            v.map(|x| x / t)
        })
        .collect();
    let mut roof = Vec::with_capacity(states.len() * block);
    for s in &states {
        let m = s.transfer();
        let first = successor_block(*s, n_max);
        for j in 0..block {
            roof.push(roof_of_transfer(&m, &reps[first + j]).expect("positive representative"));
        }
    }
    Ok(TransferModel { n_max, kappa, states, roof })
}

fn successor_block(s: ShiftState, n_max: u32) -> usize {
    s.next_order().index() * 2 * n_max as usize
}

impl TransferModel {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    fn block(&self) -> usize {
        2 * self.n_max as usize
    }

    /// The same model at another `κ` (roofs are reused).
    pub fn with_kappa(&self, kappa: f64) -> TransferModel {
        TransferModel { kappa, ..self.clone() }
    }

    /// Successor states of `s` with their roofs.
    pub fn successors(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let first = successor_block(self.states[s], self.n_max);
        let b = self.block();
        self.roof[s * b..(s + 1) * b].iter().enumerate().map(move |(j, &r)| (first + j, r))
    }

    pub fn roof(&self, s: usize, t: usize) -> Option<f64> {
        self.successors(s).find(|&(u, _)| u == t).map(|(_, r)| r)
    }

    pub fn weight(&self, s: usize, t: usize) -> f64 {
        self.roof(s, t).map_or(0.0, |r| (-self.kappa * r).exp())
    }

    pub fn min_roof(&self) -> f64 {
        self.roof.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.len()).map(|s| self.successors(s).map(|(_, r)| (-self.kappa * r).exp()).sum()).collect()
    }

    /// `K · v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|s| self.successors(s).map(|(t, r)| (-self.kappa * r).exp() * v[t]).sum()).collect()
    }

    /// `vᵀ · K`.
    pub fn apply_left(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for (s, &vs) in v.iter().enumerate() {
            for (t, r) in self.successors(s) {
                out[t] += vs * (-self.kappa * r).exp();
            }
        }
        out
    }

    /// Dense weight matrix, row-major.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.len();
        let mut m = vec![0.0; n * n];
        for s in 0..n {
            for (t, r) in self.successors(s) {
                m[s * n + t] = (-self.kappa * r).exp();
            }
        }
        m
    }
}

/// Leading eigenvalue with right (`h`) and left (`l`) eigenvectors,
/// normalized so that `Σh = 1` and `Σ l·h = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Perron {
    pub lambda: f64,
    pub right: Vec<f64>,
    pub left: Vec<f64>,
    pub iterations: usize,
}

fn power(apply: impl Fn(&[f64]) -> Vec<f64>, n: usize, max_iter: usize, tol: f64) -> Result<(f64, Vec<f64>, usize), ThermoError> {
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = f64::NAN;
    for it in 1..=max_iter {
        let w = apply(&v);
        let norm: f64 = w.iter().sum();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(ThermoError::NoConvergence(it));
        }
        let w: Vec<f64> = w.into_iter().map(|x| x / norm).collect();
        let dv = v.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let done = (norm - lambda).abs() <= tol * norm && dv <= tol;
        lambda = norm;
        v = w;
        if done {
            return Ok((lambda, v, it));
        }
    }
    Err(ThermoError::NoConvergence(max_iter))
}

pub fn perron(model: &TransferModel, max_iter: usize, tol: f64) -> Result<Perron, ThermoError> {
    let n = model.len();
    let (lambda, right, i1) = power(|v| model.apply(v), n, max_iter, tol)?;
    let (_, mut left, i2) = power(|v| model.apply_left(v), n, max_iter, tol)?;
    let dot: f64 = left.iter().zip(&right).map(|(a, b)| a * b).sum();
    left.iter_mut().for_each(|x| *x /= dot);
    Ok(Perron { lambda, right, left, iterations: i1.max(i2) })
}

pub const DEFAULT_ITERATIONS: usize = 200_000;
pub const DEFAULT_TOLERANCE: f64 = 1e-13;

/// Pressure `log Λ(κ)` of the truncated model.
pub fn pressure(model: &TransferModel, max_iter: usize, tol: f64) -> Result<f64, ThermoError> {
    let (lambda, _, _) = power(|v| model.apply(v), model.len(), max_iter, tol)?;
    Ok(lambda.ln())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Kappa0 {
    pub kappa0: f64,
    pub n_max: u32,
    pub bracket: (f64, f64),
    pub tolerance: f64,
    pub bisections: usize,
}

/// Root of `κ ↦ P(κ)` by bisection.
pub fn solve_kappa0(n_max: u32, bracket: (f64, f64), tol: f64) -> Result<Kappa0, ThermoError> {
    let base = build_transfer(n_max, 0.0)?;
    let p = |k: f64| pressure(&base.with_kappa(k), DEFAULT_ITERATIONS, 1e-12);
    let (mut lo, mut hi) = bracket;
    let (p_lo, p_hi) = (p(lo)?, p(hi)?);
    if !(p_lo > 0.0 && p_hi < 0.0) {
        return Err(ThermoError::NoSignChange { lo, hi, p_lo, p_hi });
    }
    let mut bisections = 0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        bisections += 1;
    }
    Ok(Kappa0 { kappa0: 0.5 * (lo + hi), n_max, bracket, tolerance: tol, bisections })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PressurePoint {
    pub kappa: f64,
    pub pressure: f64,
    pub n_max: u32,
}

/// Pressure on a grid of `κ`, evaluated in parallel.
pub fn pressure_curve(n_max: u32, kappas: &[f64], exec: Exec) -> Result<Vec<PressurePoint>, ThermoError> {
    let base = build_transfer(n_max, 0.0)?;
    exec.map(kappas.to_vec(), |kappa| {
        pressure(&base.with_kappa(kappa), DEFAULT_ITERATIONS, 1e-12).map(|pressure| PressurePoint { kappa, pressure, n_max })
    })
    .into_iter()
    .collect()
}

pub fn pressure_csv(points: &[PressurePoint]) -> String {
    let mut s = String::from("kappa,pressure,n_max\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.kappa, p.pressure, p.n_max));
    }
    s
}

/// Exact weighted count of period-`m` words through `start`:
/// `Z_m = (K^m)_{start,start}`.
pub fn zm_partition(model: &TransferModel, m: usize, start: usize) -> Result<f64, ThermoError> {
    if m > 5 {
        return Err(ThermoError::TooLarge(m));
    }
    if m == 0 {
        return Ok(1.0);
    }
    let mut v = vec![0.0; model.len()];
    v[start] = 1.0;
    for _ in 0..m {
        v = model.apply_left(&v);
    }
    Ok(v[start])
}

/// Markov chain of the Gibbs measure of the truncated potential.
#[derive(Debug, Clone)]
pub struct GibbsChain {
    pub n_max: u32,
    pub kappa: f64,
    pub lambda: f64,
    pub states: Vec<ShiftState>,
    /// `(successor, probability, roof)` per state.
    pub transitions: Vec<Vec<(usize, f64, f64)>>,
    pub stationary: Vec<f64>,
    alias: Vec<WeightedAliasIndex<f64>>,
    stationary_alias: WeightedAliasIndex<f64>,
}

pub fn gibbs_chain(model: &TransferModel) -> Result<GibbsChain, ThermoError> {
    let pf = perron(model, DEFAULT_ITERATIONS, DEFAULT_TOLERANCE)?;
    let h = &pf.right;
    let transitions: Vec<Vec<(usize, f64, f64)>> = (0..model.len())
        .map(|s| {
            let row: Vec<(usize, f64, f64)> = model
                .successors(s)
                .map(|(t, r)| (t, (-model.kappa * r).exp() * h[t] / (pf.lambda * h[s]), r))
                .collect();
            let total: f64 = row.iter().map(|x| x.1).sum();
            row.into_iter().map(|(t, p, r)| (t, p / total, r)).collect()
        })
        .collect();
    let mut pi: Vec<f64> = pf.left.iter().zip(h).map(|(a, b)| a * b).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|x| *x /= total);
    let alias = transitions
        .iter()
        .map(|row| WeightedAliasIndex::new(row.iter().map(|x| x.1).collect()).expect("positive row"))
        .collect();
    let stationary_alias = WeightedAliasIndex::new(pi.clone()).expect("positive stationary vector");
    Ok(GibbsChain {
        n_max: model.n_max,
        kappa: model.kappa,
        lambda: pf.lambda,
        states: model.states.clone(),
        transitions,
        stationary: pi,
        alias,
        stationary_alias,
    })
}

impl GibbsChain {
    /// `max_t |(πP)_t − π_t|`.
    pub fn stationarity_residual(&self) -> f64 {
        let mut next = vec![0.0; self.states.len()];
        for (s, row) in self.transitions.iter().enumerate() {
            for &(t, p, _) in row {
                next[t] += self.stationary[s] * p;
            }
        }
        next.iter().zip(&self.stationary).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    /// Entropy of the chain, `−Σ π_s P_st log P_st`.
    pub fn entropy(&self) -> f64 {
        self.transitions
            .iter()
            .zip(&self.stationary)
            .map(|(row, pi)| -pi * row.iter().map(|&(_, p, _)| if p > 0.0 { p * p.ln() } else { 0.0 }).sum::<f64>())
            .sum()
    }

    /// `∫ r dμ` under the stationary chain.
    pub fn mean_roof(&self) -> f64 {
        self.transitions
            .iter()
            .zip(&self.stationary)
            .map(|(row, pi)| pi * row.iter().map(|&(_, p, r)| p * r).sum::<f64>())
            .sum()
    }

    /// Entropy of the suspension flow by Abramov's formula.
    pub fn flow_entropy(&self) -> f64 {
        self.entropy() / self.mean_roof()
    }

    /// Random walk of `length` states started from the stationary law.
    pub fn sample_states(&self, length: usize, seed: u64) -> Vec<usize> {
        self.walk(seed).take(length).collect()
    }

    /// Endless seeded walk; memory use is independent of the length.
    pub fn walk(&self, seed: u64) -> impl Iterator<Item = usize> + '_ {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut current = self.stationary_alias.sample(&mut rng);
        std::iter::from_fn(move || {
            let out = current;
            current = self.transitions[current][self.alias[current].sample(&mut rng)].0;
            Some(out)
        })
    }

    /// Roof along a transition (`None` if not allowed).
    pub fn roof(&self, s: usize, t: usize) -> Option<f64> {
        self.transitions[s].iter().find(|x| x.0 == t).map(|x| x.2)
    }

    pub fn report(&self, seed: Option<u64>) -> ChainReport {
        ChainReport {
            n_max: self.n_max,
            kappa: self.kappa,
            lambda: self.lambda,
            entropy: self.entropy(),
            mean_roof: self.mean_roof(),
            flow_entropy: self.flow_entropy(),
            stationarity_residual: self.stationarity_residual(),
            representative_rule: REPRESENTATIVE_RULE.to_string(),
            seed,
        }
    }
}

/// Seeded word of `length` accelerated steps drawn from the chain.
pub fn sample_word(chain: &GibbsChain, length: usize, seed: u64) -> Word {
    let states = chain.sample_states(length, seed);
    let start = states.first().map_or(Perm::IDENTITY, |&s| chain.states[s].tau);
    Word::new(start, states.iter().map(|&s| chain.states[s].step()).collect())
}

/// Draws a seed for a replica from a master seed.
pub fn replica_seed(master: u64, replica: u64) -> u64 {
    ChaCha8Rng::seed_from_u64(master ^ replica.wrapping_mul(0x9E37_79B9_7F4A_7C15)).random()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n_max: u32,
    pub kappa: f64,
    pub lambda: f64,
    pub entropy: f64,
    pub mean_roof: f64,
    pub flow_entropy: f64,
    pub stationarity_residual: f64,
    pub representative_rule: String,
    pub seed: Option<u64>,
}
