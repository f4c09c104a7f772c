use std::path::PathBuf;

use gasket_core::exact::parse_rational;
use gasket_core::induction::{cylinder, word_transfer};
use gasket_core::surface::{build_surface, model_from_ray, SurfaceModel};
use gasket_core::thermo::{build_transfer, gibbs_chain, sample_word, solve_kappa0, GibbsChain};
use gasket_core::Word;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::failure::Failure;

/// Where the surface parameters come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameters {
    /// Exact decimal or fraction strings.
    Exact { a: String, b: String, c: String },
    /// A cylinder word: the Perron direction for a loop, the barycenter
    /// otherwise, rounded to `precision` bits.
    Word { word: String },
    /// Barycenters of Gibbs-sampled cylinders of the given depth.
    Sampled { depth: usize, points: usize },
}

impl Default for Parameters {
    fn default() -> Self {
        Parameters::Sampled { depth: 200, points: 3 }
    }
}

fn default_precision() -> u32 {
    256
}
fn default_seed() -> u64 {
    1
}
fn default_nmax() -> u32 {
    20
}
fn default_depth() -> u32 {
    12
}
fn default_resolution() -> usize {
    512
}
fn default_length() -> f64 {
    1e5
}
fn default_levels() -> usize {
    2
}
fn default_replicas() -> usize {
    8
}
fn default_steps() -> u64 {
    1_000_000
}
fn default_tolerance() -> f64 {
    1e-12
}
fn default_kappas() -> Vec<f64> {
    (0..=30).map(|i| (10 + i) as f64 / 10.0).collect()
}

/// Everything a command reads. Every field has a default, so `{}` is a valid
/// config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default = "default_precision")]
    pub precision: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_nmax")]
    pub nmax: u32,
    #[serde(default = "default_depth")]
    pub depth: u32,
    #[serde(default = "default_resolution")]
    pub resolution: usize,
    /// Arclength per trace direction.
    #[serde(default = "default_length")]
    pub length: f64,
    /// Fixed plane level; random levels are drawn from `seed` otherwise.
    #[serde(default)]
    pub level: Option<String>,
    #[serde(default = "default_levels")]
    pub levels: usize,
    #[serde(default = "default_replicas")]
    pub replicas: usize,
    #[serde(default = "default_steps")]
    pub steps: u64,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_kappas")]
    pub kappas: Vec<f64>,
    /// Extra loop words for `certify`.
    #[serde(default)]
    pub words: Vec<String>,
    /// Output directory; not part of the reproducible record.
    #[serde(default, skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("defaults")
    }
}

/// A surface together with a description of where it came from.
pub struct ParameterPoint {
    pub label: String,
    pub model: SurfaceModel,
}

impl RunConfig {
    pub fn load(path: &std::path::Path) -> Result<RunConfig, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), Failure> {
        let bad = |m: &str| Err(Failure::config(m.to_string()));
        if self.precision < 32 {
            return bad("precision must be at least 32 bits");
        }
        if self.nmax == 0 {
            return bad("nmax must be positive");
        }
        if self.resolution < 2 {
            return bad("resolution must be at least 2");
        }
        if !(self.length.is_finite() && self.length > 0.0) {
            return bad("length must be positive");
        }
        if self.replicas == 0 || self.levels == 0 {
            return bad("replicas and levels must be positive");
        }
        Ok(())
    }

    pub fn chain(&self) -> Result<(f64, GibbsChain), Failure> {
        let k = solve_kappa0(self.nmax, (1.0, 4.0), 1e-10)?;
        let chain = gibbs_chain(&build_transfer(self.nmax, k.kappa0)?)?;
        Ok((k.kappa0, chain))
    }

    pub fn parameter_points(&self, chain: Option<&GibbsChain>) -> Result<Vec<ParameterPoint>, Failure> {
        match &self.parameters {
            Parameters::Exact { a, b, c } => {
                let [a, b, c] = [a, b, c].map(|x| parse_rational(x).map_err(|_| Failure::bad_parameters(format!("not a number: {x}"))));
                let model = build_surface(&a?, &b?, &c?)?;
                let [a, b, c] = model.parameters_string();
                Ok(vec![ParameterPoint { label: format!("exact {a}, {b}, {c}"), model }])
            }
            Parameters::Word { word } => {
                let w = Word::parse_compact(word).ok_or_else(|| Failure::bad_parameters(format!("bad word {word:?}")))?;
                let ray = if w.is_loop() && !w.steps.is_empty() {
                    perron_direction(&w, self.precision).ok_or_else(|| Failure::bad_parameters(format!("{word}: no Perron direction")))?
                } else {
                    round_ray(&cylinder(&w).barycenter_ray(), self.precision)
                };
                Ok(vec![ParameterPoint { label: format!("word {word}"), model: model_from_ray(&ray)? }])
            }
            Parameters::Sampled { depth, points } => {
                let chain = chain.ok_or_else(|| Failure::config("sampled parameters need the Gibbs chain".into()))?;
                (0..*points)
                    .map(|i| {
                        let seed = gasket_core::thermo::replica_seed(self.seed ^ 0x5A17_u64, i as u64);
                        let w = sample_word(chain, *depth, seed);
                        let model = model_from_ray(&cylinder(&w).barycenter_ray())?;
                        Ok(ParameterPoint { label: format!("sampled depth {depth} seed {seed}"), model })
                    })
                    .collect()
            }
        }
    }

    pub fn fixed_level(&self) -> Result<Option<BigRational>, Failure> {
        self.level
            .as_deref()
            .map(|s| parse_rational(s).map_err(|_| Failure::bad_parameters(format!("bad level {s:?}"))))
            .transpose()
    }
}

/// Integer ray with total `2^bits` approximating the direction of `v`.
fn round_ray(v: &[BigInt; 3], bits: u32) -> [BigInt; 3] {
    let total: BigInt = v.iter().sum();
    let scale = BigInt::one() << bits;
    v.clone().map(|x| x * &scale / &total)
}

/// Fixed direction of a loop's length transfer, by exact power iteration,
/// to `bits` bits.
pub fn perron_direction(w: &Word, bits: u32) -> Option<[BigInt; 3]> {
    let m = word_transfer(w);
    let mut v: [BigInt; 3] = [BigInt::one(), BigInt::one(), BigInt::one()];
    let mut prev = round_ray(&v, bits + 8);
    for _ in 0..100_000 {
        v = m.apply(&v);
        let g = v.iter().fold(BigInt::zero(), |g, x| num_integer::Integer::gcd(&g, x));
        if !g.is_zero() {
            v = v.map(|x| x / &g);
        }
        let cur = round_ray(&v, bits + 8);
        if (0..3).all(|i| (&cur[i] - &prev[i]).abs() <= BigInt::from(16)) {
            let r = round_ray(&v, bits);
            return r.iter().all(|x| x.is_positive()).then_some(r);
        }
        prev = cur;
    }
    None
}
