//! Random-matrix approximation of the coupling-matrix spectrum and the
//! predicted FM rank.
//!
//! For a symmetric Gaussian matrix with off-diagonal entries `N(μ, σ²)` and
//! diagonal entries `N(μ, 2σ²)`, the spectrum is modelled as one outlier
//! `λ₁ ≈ Nμ + σ²/μ` on top of a semicircle bulk on `[−2√N σ, 2√N σ]`. After
//! normalizing `λ̂ = (λ − λ_N)/(λ₁ − λ_N)` the bulk edge sits at
//! `r = 4√N μσ/(√N μ + σ)²`, which gives the piecewise CDF in
//! [`approx_cdf`] and the rank `K*(α) = N(1 − P(λ̂ < α))`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleParams {
    pub n: usize,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `√N·|μ| ≥ σ`: outlier plus compressed semicircle.
    SmallJ,
    /// `√N·|μ| < σ`: plain semicircle on `[0, 1]`.
    LargeJ,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankPrediction {
    pub r: f64,
    pub alpha: f64,
    pub k_star: f64,
    pub branch: Branch,
}

impl RankPrediction {
    /// Smallest integer rank covering `K*`.
    pub fn ceil_rank(&self) -> usize {
        self.k_star.ceil() as usize
    }
}

impl EnsembleParams {
    pub fn new(n: usize, mu: f64, sigma: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!(
                "ensemble needs n >= 2, got {n}"
            )));
        }
        if !(sigma > 0.0) || !sigma.is_finite() || !mu.is_finite() {
            return Err(Error::Domain(format!(
                "ensemble needs sigma > 0, got {sigma}"
            )));
        }
        Ok(Self { n, mu, sigma })
    }

    /// Ensemble of an SK model: `μ = J₀/N`, `σ = J₁/√N`.
    pub fn from_sk(n: usize, j0: f64, j1: f64) -> Result<Self> {
        Self::new(n, j0 / n as f64, j1 / (n as f64).sqrt())
    }

    fn sqrt_n_mu(&self) -> f64 {
        (self.n as f64).sqrt() * self.mu.abs()
    }

    pub fn branch(&self) -> Branch {
        if self.sqrt_n_mu() >= self.sigma {
            Branch::SmallJ
        } else {
            Branch::LargeJ
        }
    }

    /// Normalized position of `λ₂`: `4√N|μ|σ/(√N|μ| + σ)²`.
    pub fn r(&self) -> f64 {
        let a = self.sqrt_n_mu();
        4.0 * a * self.sigma / (a + self.sigma).powi(2)
    }
}

/// Expected `(λ₁, λ₂, λ_N)`. With `μ = 0` the outlier merges with the bulk
/// edge `2√N σ`.
pub fn eigenvalue_landmarks(e: &EnsembleParams) -> (f64, f64, f64) {
    let n = e.n as f64;
    let edge = 2.0 * n.sqrt() * e.sigma;
    let mu = e.mu.abs();
    let lambda1 = if mu == 0.0 {
        edge
    } else {
        n * mu + e.sigma * e.sigma / mu
    };
    (lambda1, edge, -edge)
}

/// Affine map of a nonincreasing spectrum onto `[0, 1]`.
pub fn normalize_spectrum(eigenvalues: &[f64]) -> Result<Vec<f64>> {
    let (Some(&first), Some(&last)) = (eigenvalues.first(), eigenvalues.last()) else {
        return Err(Error::Domain("empty spectrum".into()));
    };
    let span = first - last;
    if !(span > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(eigenvalues
        .iter()
        .map(|&l| ((l - last) / span).clamp(0.0, 1.0))
        .collect())
}

/// `f(x) = arccos(2x − 1) − 2√(x(1−x))(2x − 1)`; decreases from `π` at 0 to
/// 0 at 1.
pub fn semicircle_tail(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    let c = 2.0 * x - 1.0;
    c.clamp(-1.0, 1.0).acos() - 2.0 * (x * (1.0 - x)).sqrt() * c
}

/// `∫₀ˣ √(R² − (2t − R)²) dt = (R²/4)(π − f(x/R))` for `0 ≤ x ≤ R`.
pub fn semicircle_integral(radius: f64, x: f64) -> f64 {
    if radius <= 0.0 {
        return 0.0;
    }
    radius * radius / 4.0 * (PI - semicircle_tail(x / radius))
}

fn check_unit(x: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("{what} must lie in [0, 1], got {x}")));
    }
    Ok(())
}

/// Approximate `P(λ̂ < x)` for `x ∈ [0, 1]`.
pub fn approx_cdf(e: &EnsembleParams, x: f64) -> Result<f64> {
    check_unit(x, "x")?;
    let n = e.n as f64;
    Ok(match e.branch() {
        Branch::SmallJ => {
            let r = e.r();
            if x > r {
                1.0 + (x - 1.0) / ((1.0 - r) * n)
            } else {
                1.0 / n + 4.0 * (n - 2.0) / (PI * n * r * r) * semicircle_integral(r, x)
            }
        }
        Branch::LargeJ => 1.0 / n + 4.0 * (n - 1.0) / (PI * n) * semicircle_integral(1.0, x),
    })
}

/// `K*(α)` from the closed forms of `N(1 − P(λ̂ < α))`.
pub fn predicted_rank(e: &EnsembleParams, alpha: f64) -> Result<RankPrediction> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let n = e.n as f64;
    let r = e.r();
    let branch = e.branch();
    let k_star = match branch {
        Branch::SmallJ if alpha > r => (1.0 - alpha) / (1.0 - r),
        Branch::SmallJ => 1.0 + (n - 2.0) / PI * semicircle_tail(alpha / r),
        Branch::LargeJ => (n - 1.0) / PI * semicircle_tail(alpha),
    };
    Ok(RankPrediction {
        r,
        alpha,
        k_star,
        branch,
    })
}

/// Right-continuous empirical CDF of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// `#{v ≤ x} / n`.
    pub fn eval(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// `#{v < x} / n`.
    fn eval_left(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&v| v < x);
        count as f64 / self.sorted.len() as f64
    }

    /// Distinct jump locations with the CDF value just after each.
    pub fn steps(&self) -> Vec<(f64, f64)> {
        let n = self.sorted.len() as f64;
        let mut out: Vec<(f64, f64)> = Vec::new();
        for (i, &v) in self.sorted.iter().enumerate() {
            let p = (i + 1) as f64 / n;
            match out.last_mut() {
                Some(last) if last.0 == v => last.1 = p,
                _ => out.push((v, p)),
            }
        }
        out
    }

    /// One `(x, F(x))` per sample, ascending.
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.sorted.iter().map(|&v| (v, self.eval(v))).collect()
    }

    /// `sup_x |F(x) − P(x)|` for a continuous nondecreasing `P` on `[0, 1]`.
    ///
    /// Between jumps `F` is constant and `P` monotone, so the supremum is
    /// attained at a jump from one side or the other.
    pub fn sup_distance(&self, mut cdf: impl FnMut(f64) -> f64) -> f64 {
        let mut worst: f64 = 0.0;
        for &(x, _) in &self.steps() {
            let p = cdf(x);
            worst = worst.max((self.eval(x) - p).abs());
            worst = worst.max((self.eval_left(x) - p).abs());
        }
        worst
    }
}

pub fn empirical_cdf(values: &[f64]) -> Result<EmpiricalCdf> {
    if values.is_empty() {
        return Err(Error::Domain("empirical CDF of an empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("empirical CDF sample"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(EmpiricalCdf { sorted })
}

/// Sup-distance between the empirical CDF of `normalized` and
/// [`approx_cdf`] for `e`.
pub fn cdf_sup_distance(e: &EnsembleParams, normalized: &[f64]) -> Result<f64> {
    let ecdf = empirical_cdf(normalized)?;
    for &x in normalized {
        check_unit(x, "normalized eigenvalue")?;
    }
    Ok(ecdf.sup_distance(|x| approx_cdf(e, x).expect("checked domain")))
}

/// Draws a matrix with off-diagonal `N(μ, σ²)` and diagonal `N(μ, 2σ²)`
/// entries.
pub fn sample_ensemble(e: &EnsembleParams, seed: u64) -> SymMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let diag_scale = 2f64.sqrt() * e.sigma;
    SymMatrix::from_upper_fn(e.n, |i, j| {
        let z: f64 = StandardNormal.sample(&mut rng);
        let scale = if i == j { diag_scale } else { e.sigma };
        e.mu + scale * z
    })
}
