//! Ising models over ±1 spins, Sherrington–Kirkpatrick instance generation,
//! and uniqueness-preserving training-set construction.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

/// A point of `{+1, −1}^N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpinConfig(Vec<i8>);

impl SpinConfig {
    pub fn new(spins: Vec<i8>) -> Result<Self> {
        if spins.iter().any(|&s| s != 1 && s != -1) {
            return Err(Error::Domain("spin values must be +1 or -1".into()));
        }
        Ok(Self(spins))
    }

    pub fn all_up(n: usize) -> Self {
        Self(vec![1; n])
    }

    /// Bit `i` set maps to spin `−1` at site `i`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        Self(
            (0..n)
                .map(|i| if bits >> i & 1 == 1 { -1 } else { 1 })
                .collect(),
        )
    }

    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        Self(
            (0..n)
                .map(|_| if rng.random::<bool>() { 1 } else { -1 })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn spins(&self) -> &[i8] {
        &self.0
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&s| f64::from(s)).collect()
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|&s| -s).collect())
    }
}

/// `H(x) = c − Σ_i h_i x_i − Σ_{i<j} J_ij x_i x_j` with a symmetric,
/// zero-diagonal `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    c: f64,
    h: Vec<f64>,
    j: SymMatrix,
}

impl IsingModel {
    /// The diagonal of `j` is discarded: it never enters the Hamiltonian.
    pub fn new(c: f64, h: Vec<f64>, j: SymMatrix) -> Result<Self> {
        if j.n() == 0 {
            return Err(Error::InvalidDimension(
                "model dimension must be positive".into(),
            ));
        }
        if h.len() != j.n() {
            return Err(Error::DimensionMismatch {
                expected: j.n(),
                found: h.len(),
            });
        }
        if !c.is_finite() || h.iter().any(|v| !v.is_finite()) || !j.is_finite() {
            return Err(Error::NonFinite("ising model parameters"));
        }
        Ok(Self {
            c,
            h,
            j: j.with_zero_diagonal(),
        })
    }

    pub fn from_couplings(j: SymMatrix) -> Result<Self> {
        let n = j.n();
        Self::new(0.0, vec![0.0; n], j)
    }

    pub fn n(&self) -> usize {
        self.j.n()
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn j(&self) -> &SymMatrix {
        &self.j
    }

    /// Same model with every parameter sign-flipped: `−H`.
    pub fn negated(&self) -> Self {
        Self {
            c: -self.c,
            h: self.h.iter().map(|v| -v).collect(),
            j: self.j.scaled(-1.0),
        }
    }

    pub fn energy(&self, x: &SpinConfig) -> Result<f64> {
        energy(self, x)
    }

    /// Off-diagonal couplings `J_ij` for `i < j`, row by row.
    pub fn upper_couplings(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n();
        (0..n).flat_map(move |i| ((i + 1)..n).map(move |k| self.j.get(i, k)))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&IsingModelJson::from(self))?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: IsingModelJson = serde_json::from_str(s)?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
struct IsingModelJson {
    n: usize,
    c: f64,
    h: Vec<f64>,
    j: Vec<Vec<f64>>,
}

impl From<&IsingModel> for IsingModelJson {
    fn from(m: &IsingModel) -> Self {
        Self {
            n: m.n(),
            c: m.c,
            h: m.h.clone(),
            j: m.j.to_rows(),
        }
    }
}

impl TryFrom<IsingModelJson> for IsingModel {
    type Error = Error;

    fn try_from(raw: IsingModelJson) -> Result<Self> {
        if raw.j.len() != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                found: raw.j.len(),
            });
        }
        IsingModel::new(raw.c, raw.h, SymMatrix::from_rows(raw.j)?)
    }
}

/// Sherrington–Kirkpatrick couplings `J_ij ~ N(J₀/N, J₁²/N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkParams {
    pub n: usize,
    pub j0: f64,
    pub j1: f64,
    pub seed: u64,
}

impl SkParams {
    pub fn mean(&self) -> f64 {
        self.j0 / self.n as f64
    }

    pub fn variance(&self) -> f64 {
        self.j1 * self.j1 / self.n as f64
    }
}

/// Draws one SK instance with `c = 0`, `h = 0`.
///
/// Couplings are drawn in row-major upper-triangle order from a ChaCha8
/// stream seeded by `params.seed`, so every `(seed, i, j)` reproduces on any
/// platform.
pub fn generate_sk(params: &SkParams) -> Result<IsingModel> {
    let n = params.n;
    if n < 2 {
        return Err(Error::InvalidDimension(format!(
            "SK model needs n >= 2, got {n}"
        )));
    }
    if !(params.j1 > 0.0) || !params.j1.is_finite() || !params.j0.is_finite() {
        return Err(Error::Domain(format!(
            "SK scale J1 must be positive, got {}",
            params.j1
        )));
    }
    let mean = params.mean();
    let std = params.variance().sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let j = SymMatrix::from_upper_fn(n, |a, b| {
        if a == b {
            0.0
        } else {
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + std * z
        }
    });
    IsingModel::from_couplings(j)
}

pub fn energy(model: &IsingModel, x: &SpinConfig) -> Result<f64> {
    let n = model.n();
    if x.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: x.len(),
        });
    }
    let s = x.spins();
    let mut e = model.c;
    for i in 0..n {
        let xi = f64::from(s[i]);
        e -= model.h[i] * xi;
        let row = model.j.row(i);
        let mut pair = 0.0;
        for k in (i + 1)..n {
            pair += row[k] * f64::from(s[k]);
        }
        e -= xi * pair;
    }
    Ok(e)
}

/// Distinct spin configurations paired with their energies.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    points: Vec<(SpinConfig, f64)>,
}

impl Dataset {
    /// Fails if two points share a configuration.
    pub fn new(points: Vec<(SpinConfig, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(points.len());
        for (x, _) in &points {
            if !seen.insert(x) {
                return Err(Error::Domain(
                    "dataset configurations must be distinct".into(),
                ));
            }
        }
        Ok(Self { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[(SpinConfig, f64)] {
        &self.points
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SpinConfig, f64)> {
        self.points.iter()
    }
}

/// Number of configurations in `{±1}^n`, saturating at `u128::MAX`.
fn config_count(n: usize) -> u128 {
    if n >= 128 {
        u128::MAX
    } else {
        1u128 << n
    }
}

/// Samples `d` distinct configurations uniformly without replacement and
/// labels them with exact energies.
pub fn build_dataset(model: &IsingModel, d: usize, seed: u64) -> Result<Dataset> {
    let n = model.n();
    let available = config_count(n);
    if d as u128 > available {
        return Err(Error::InfeasibleDataset {
            requested: d,
            available,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let configs: Vec<SpinConfig> = if n < 64 && available <= usize::MAX as u128 {
        rand::seq::index::sample(&mut rng, available as usize, d)
            .into_iter()
            .map(|b| SpinConfig::from_bits(n, b as u64))
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(d);
        let mut out = Vec::with_capacity(d);
        while out.len() < d {
            let x = SpinConfig::random(n, &mut rng);
            if seen.insert(x.clone()) {
                out.push(x);
            }
        }
        out
    };
    let points = configs
        .into_iter()
        .map(|x| {
            let e = energy(model, &x)?;
            Ok((x, e))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset { points })
}

/// Monte Carlo variance of the interaction energy `−Σ_{i<j} J_ij x_i x_j`
/// under uniformly random spins. Converges to `Σ_{i<j} J_ij²`.
pub fn interaction_energy_variance_mc(
    model: &IsingModel,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples < 2 {
        return Err(Error::Domain(format!(
            "need at least 2 samples, got {samples}"
        )));
    }
    let pure = IsingModel::from_couplings(model.j.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    for t in 0..samples {
        let e = energy(&pure, &SpinConfig::random(model.n(), &mut rng))?;
        let delta = e - mean;
        mean += delta / (t + 1) as f64;
        m2 += delta * (e - mean);
    }
    Ok(m2 / (samples - 1) as f64)
}
