//! Initializers that build an FM close to a given Ising model.
//!
//! The constant and linear parts are always copied from the model
//! ([`match_linear`]); the initializers differ only in how the factor matrix
//! `V` is chosen:
//!
//! - [`low_rank_init`] takes the top-`k` eigenpairs of the coupling matrix
//!   after shifting its spectrum by the smallest eigenvalue, so that the
//!   Gram matrix `V Vᵀ` is a rank-`k` truncation of `J − λ_N I`.
//! - [`energy_random_init`] draws `v_ik ~ N(0, σ_v²)` with
//!   `σ_v² = sqrt(E[J²]/K)`, matching the variance of the interaction energy
//!   under random spins.
//! - [`coupling_random_init`] draws `v_ik ~ N(μ_v, σ_v²)` with
//!   `μ_v = sqrt(|μ|/K)` and `σ_v² = (sqrt(μ² + Kσ²) − |μ|)/K`, matching the
//!   mean and variance of individual couplings.
//!
//! The second parameter of every Gaussian here is a variance.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fm::{FmParams, FmSign};
use crate::ising::IsingModel;
use crate::linalg::{eigh, EigenDecomposition};

/// Moments of the off-diagonal couplings `J_ij`, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingStats {
    pub mu: f64,
    pub sigma2: f64,
    pub mean_sq: f64,
}

impl CouplingStats {
    /// Sample mean, unbiased sample variance, and mean of squares.
    pub fn from_model(model: &IsingModel) -> Self {
        let values: Vec<f64> = model.upper_couplings().collect();
        let count = values.len();
        if count == 0 {
            return Self {
                mu: 0.0,
                sigma2: 0.0,
                mean_sq: 0.0,
            };
        }
        let m = count as f64;
        let mu = values.iter().sum::<f64>() / m;
        let mean_sq = values.iter().map(|v| v * v).sum::<f64>() / m;
        let sigma2 = if count > 1 {
            values.iter().map(|v| (v - mu).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        Self {
            mu,
            sigma2,
            mean_sq,
        }
    }

    /// Population moments of a known coupling distribution.
    pub fn population(mu: f64, sigma2: f64) -> Self {
        Self {
            mu,
            sigma2,
            mean_sq: sigma2 + mu * mu,
        }
    }
}

/// Parameters of the component-wise Gaussian `v_ik ~ N(mu_v, sigma2_v)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomInitSpec {
    pub mu_v: f64,
    pub sigma2_v: f64,
}

impl RandomInitSpec {
    pub fn energy_based(stats: &CouplingStats, k: usize) -> Self {
        Self {
            mu_v: 0.0,
            sigma2_v: (stats.mean_sq.max(0.0) / k as f64).sqrt(),
        }
    }

    /// Returns the spec together with the FM sign it is meant for: negative
    /// for `μ ≥ 0`, positive otherwise.
    pub fn coupling_based(stats: &CouplingStats, k: usize) -> (Self, FmSign) {
        let sign = if stats.mu >= 0.0 {
            FmSign::Negative
        } else {
            FmSign::Positive
        };
        let mu = stats.mu.abs();
        let kf = k as f64;
        let sigma2 = stats.sigma2.max(0.0);
        let sigma2_v = (((mu * mu + kf * sigma2).sqrt() - mu) / kf).max(0.0);
        (
            Self {
                mu_v: (mu / kf).sqrt(),
                sigma2_v,
            },
            sign,
        )
    }

    /// `E_v[⟨v_i, v_j⟩] = K μ_v²`.
    pub fn pair_mean(&self, k: usize) -> f64 {
        k as f64 * self.mu_v * self.mu_v
    }

    /// `Var_v[⟨v_i, v_j⟩] = K σ_v² (σ_v² + 2 μ_v²)`.
    pub fn pair_variance(&self, k: usize) -> f64 {
        k as f64 * self.sigma2_v * (self.sigma2_v + 2.0 * self.mu_v * self.mu_v)
    }

    /// `E_v[Var_x[f₂]] = K N(N−1)/2 · (σ_v⁴ + 2μ_v²σ_v² + Kμ_v⁴)`.
    pub fn expected_interaction_variance(&self, n: usize, k: usize) -> f64 {
        let kf = k as f64;
        let pairs = (n * n.saturating_sub(1)) as f64 / 2.0;
        let (m2, s2) = (self.mu_v * self.mu_v, self.sigma2_v);
        kf * pairs * (s2 * s2 + 2.0 * m2 * s2 + kf * m2 * m2)
    }

    pub fn sample(&self, len: usize, rng: &mut impl Rng) -> Vec<f64> {
        if self.sigma2_v == 0.0 {
            return vec![self.mu_v; len];
        }
        let dist = Normal::new(self.mu_v, self.sigma2_v.sqrt()).expect("finite spec");
        (0..len).map(|_| dist.sample(rng)).collect()
    }
}

/// Constant and linear FM weights reproducing `c − Σ h_i x_i`.
pub fn match_linear(model: &IsingModel, sign: FmSign) -> (f64, Vec<f64>) {
    match sign {
        FmSign::Positive => (model.c(), model.h().iter().map(|h| -h).collect()),
        FmSign::Negative => (-model.c(), model.h().to_vec()),
    }
}

fn check_rank(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::RankOutOfRange { k, max: n });
    }
    Ok(())
}

/// Spectrum of the coupling matrix the FM must reproduce: `J` for a negative
/// FM, `−J` for a positive one.
fn target_spectrum(model: &IsingModel, sign: FmSign) -> Result<EigenDecomposition> {
    match sign {
        FmSign::Negative => eigh(model.j()),
        FmSign::Positive => eigh(&model.j().scaled(-1.0)),
    }
}

/// `V = U_k (Σ'_k)^{1/2}` with `Σ'` the eigenvalues shifted by `−λ_N`.
///
/// `k = N − 1` reproduces the couplings exactly; `k = N` is accepted and
/// adds a zero column.
pub fn low_rank_init(model: &IsingModel, k: usize, sign: FmSign) -> Result<FmParams> {
    let n = model.n();
    check_rank(k, n)?;
    let eig = target_spectrum(model, sign)?;
    let floor = eig.smallest();
    let scales: Vec<f64> = eig.eigenvalues()[..k]
        .iter()
        .map(|&l| (l - floor).max(0.0).sqrt())
        .collect();
    let mut v = vec![0.0; n * k];
    for i in 0..n {
        for (m, &s) in scales.iter().enumerate() {
            v[i * k + m] = s * eig.component(i, m);
        }
    }
    let (w0, w) = match_linear(model, sign);
    FmParams::new(w0, w, v, k, sign)
}

/// `δJ'_k = sqrt(Σ_{i>k} (λ_i − λ_N)²)` for the couplings of `model`.
///
/// Spectral shifts are sign-specific, so this bounds the negative-FM
/// initialization; use `model.negated()` for the positive one.
pub fn truncation_error(model: &IsingModel, k: usize) -> Result<f64> {
    check_rank(k, model.n())?;
    let eig = eigh(model.j())?;
    Ok(truncation_error_from(&eig, k))
}

pub fn truncation_error_from(eig: &EigenDecomposition, k: usize) -> f64 {
    let floor = eig.smallest();
    eig.eigenvalues()[k.min(eig.n())..]
        .iter()
        .map(|&l| (l - floor).powi(2))
        .sum::<f64>()
        .sqrt()
}

fn random_params(
    model: &IsingModel,
    k: usize,
    sign: FmSign,
    spec: &RandomInitSpec,
    seed: u64,
) -> Result<FmParams> {
    let n = model.n();
    if k == 0 {
        return Err(Error::RankOutOfRange { k, max: n });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = spec.sample(n * k, &mut rng);
    let (w0, w) = match_linear(model, sign);
    FmParams::new(w0, w, v, k, sign)
}

/// Energy-distribution random init using sample moments of `model`.
pub fn energy_random_init(
    model: &IsingModel,
    k: usize,
    sign: FmSign,
    seed: u64,
) -> Result<FmParams> {
    energy_random_init_with(model, &CouplingStats::from_model(model), k, sign, seed)
}

pub fn energy_random_init_with(
    model: &IsingModel,
    stats: &CouplingStats,
    k: usize,
    sign: FmSign,
    seed: u64,
) -> Result<FmParams> {
    if k == 0 {
        return Err(Error::RankOutOfRange { k, max: model.n() });
    }
    random_params(
        model,
        k,
        sign,
        &RandomInitSpec::energy_based(stats, k),
        seed,
    )
}

/// Coupling-distribution random init using sample moments of `model`. The
/// FM sign follows the sign of the mean coupling.
pub fn coupling_random_init(model: &IsingModel, k: usize, seed: u64) -> Result<FmParams> {
    coupling_random_init_with(model, &CouplingStats::from_model(model), k, seed)
}

pub fn coupling_random_init_with(
    model: &IsingModel,
    stats: &CouplingStats,
    k: usize,
    seed: u64,
) -> Result<FmParams> {
    if k == 0 {
        return Err(Error::RankOutOfRange { k, max: model.n() });
    }
    let (spec, sign) = RandomInitSpec::coupling_based(stats, k);
    random_params(model, k, sign, &spec, seed)
}

/// `ΔJ = ‖J − diag J − (G − diag G)‖_F`, with `G` negated for positive FMs.
pub fn coupling_error(model: &IsingModel, p: &FmParams) -> Result<f64> {
    let n = model.n();
    if p.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: p.n(),
        });
    }
    // Negative FM: ⟨v_i,v_j⟩ ≈ J_ij. Positive FM: ⟨v_i,v_j⟩ ≈ −J_ij.
    let s = -p.sign.factor();
    let mut acc = 0.0;
    for i in 0..n {
        let vi = p.v_row(i);
        for j in (i + 1)..n {
            let g: f64 = vi.iter().zip(p.v_row(j)).map(|(a, b)| a * b).sum();
            acc += (model.j().get(i, j) - s * g).powi(2);
        }
    }
    Ok((2.0 * acc).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ising::{generate_sk, SkParams};
    use crate::linalg::{frobenius, SymMatrix};

    fn sk(n: usize, j1: f64, seed: u64) -> IsingModel {
        generate_sk(&SkParams {
            n,
            j0: 1.0,
            j1,
            seed,
        })
        .unwrap()
    }

    fn bond2(j12: f64) -> IsingModel {
        let mut j = SymMatrix::zeros(2);
        j.set(0, 1, j12);
        IsingModel::from_couplings(j).unwrap()
    }

    #[test]
    fn linear_matching() {
        let m = IsingModel::new(2.0, vec![1.0, -1.0], SymMatrix::zeros(2)).unwrap();
        assert_eq!(match_linear(&m, FmSign::Positive), (2.0, vec![-1.0, 1.0]));
        assert_eq!(match_linear(&m, FmSign::Negative), (-2.0, vec![1.0, -1.0]));
        let z = IsingModel::from_couplings(SymMatrix::zeros(3)).unwrap();
        assert_eq!(match_linear(&z, FmSign::Positive), (0.0, vec![0.0; 3]));
        assert_eq!(match_linear(&z, FmSign::Negative), (0.0, vec![0.0; 3]));
    }

    #[test]
    fn linear_part_reproduces_fields() {
        let m = IsingModel::new(0.7, vec![0.3, -1.2, 0.5], SymMatrix::zeros(3)).unwrap();
        for sign in [FmSign::Positive, FmSign::Negative] {
            let (w0, w) = match_linear(&m, sign);
            let p = FmParams::new(w0, w, vec![0.0; 3], 1, sign).unwrap();
            for b in 0..8 {
                let x = crate::ising::SpinConfig::from_bits(3, b);
                assert!((p.forward(&x).unwrap() - m.energy(&x).unwrap()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn two_spin_low_rank_is_exact() {
        // J = [[0,1],[1,0]] has λ = (1, −1) and u₁ = (1, 1)/√2; λ' = (2, 0),
        // so v_i = √2 · u₁ᵢ = 1 and ⟨v₁, v₂⟩ = 1.
        let m = bond2(1.0);
        let p = low_rank_init(&m, 1, FmSign::Negative).unwrap();
        assert!((p.v_at(0, 0) - 1.0).abs() < 1e-14);
        assert!((p.v_at(1, 0) - 1.0).abs() < 1e-14);
        assert!(coupling_error(&m, &p).unwrap() < 1e-14);
        assert!(truncation_error(&m, 1).unwrap() < 1e-14);
    }

    #[test]
    fn full_rank_exactness_both_signs() {
        for seed in 0..5 {
            let m = sk(10, 0.5, seed);
            for sign in [FmSign::Negative, FmSign::Positive] {
                let p = low_rank_init(&m, 9, sign).unwrap();
                assert!(coupling_error(&m, &p).unwrap() <= 1e-8);
            }
            assert!(truncation_error(&m, 9).unwrap() <= 1e-12);
            assert_eq!(truncation_error(&m, 10).unwrap(), 0.0);
        }
    }

    #[test]
    fn zero_couplings_give_zero_factors() {
        let m = IsingModel::from_couplings(SymMatrix::zeros(5)).unwrap();
        for k in 1..=5 {
            let p = low_rank_init(&m, k, FmSign::Negative).unwrap();
            assert!(p.v().iter().all(|&v| v == 0.0));
            assert_eq!(coupling_error(&m, &p).unwrap(), 0.0);
        }
    }

    #[test]
    fn rank_range_checked() {
        let m = sk(4, 0.1, 1);
        assert!(matches!(
            low_rank_init(&m, 0, FmSign::Negative),
            Err(Error::RankOutOfRange { .. })
        ));
        assert!(low_rank_init(&m, 5, FmSign::Negative).is_err());
        assert!(truncation_error(&m, 0).is_err());
        assert!(energy_random_init(&m, 0, FmSign::Negative, 1).is_err());
        assert!(coupling_random_init(&m, 0, 1).is_err());
    }

    #[test]
    fn truncation_error_matches_explicit_rebuild() {
        let m = sk(8, 1.0, 3);
        let eig = eigh(m.j()).unwrap();
        let shifted = m.j().shifted(-eig.smallest());
        for k in 1..=8 {
            let rebuilt = eig.reconstruct_with(
                &eig.eigenvalues()[..k]
                    .iter()
                    .map(|l| l - eig.smallest())
                    .collect::<Vec<_>>(),
            );
            let explicit = frobenius(&shifted.sub(&rebuilt).unwrap());
            let closed = truncation_error(&m, k).unwrap();
            assert!(
                (explicit - closed).abs() <= 1e-10 * closed.max(1e-300) + 1e-13,
                "k={k}"
            );
        }
    }

    #[test]
    fn truncation_monotone_and_bounds_coupling_error() {
        let m = sk(9, 0.7, 5);
        let mut prev = f64::INFINITY;
        for k in 1..=9 {
            let t = truncation_error(&m, k).unwrap();
            assert!(t <= prev);
            prev = t;
            let p = low_rank_init(&m, k, FmSign::Negative).unwrap();
            assert!(coupling_error(&m, &p).unwrap() <= t + 1e-10);
        }
    }

    #[test]
    fn positive_sign_mirrors_negated_model() {
        let m = sk(7, 0.4, 2);
        for k in 1..7 {
            let pos = low_rank_init(&m, k, FmSign::Positive).unwrap();
            let neg = low_rank_init(&m.negated(), k, FmSign::Negative).unwrap();
            let a = coupling_error(&m, &pos).unwrap();
            let b = coupling_error(&m.negated(), &neg).unwrap();
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn coupling_error_of_zero_model() {
        let m = sk(6, 1.0, 4);
        let p = FmParams::zeros(6, 2, FmSign::Negative).unwrap();
        let expected = m.j().off_diagonal_frobenius();
        assert!((coupling_error(&m, &p).unwrap() - expected).abs() < 1e-14);
        let wrong = FmParams::zeros(5, 2, FmSign::Negative).unwrap();
        assert!(coupling_error(&m, &wrong).is_err());
    }

    #[test]
    fn energy_init_zero_couplings() {
        let m = IsingModel::from_couplings(SymMatrix::zeros(4)).unwrap();
        let p = energy_random_init(&m, 3, FmSign::Positive, 1).unwrap();
        assert!(p.v().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn energy_variance_identity() {
        let stats = CouplingStats::population(0.1, 0.001);
        for k in 1..10 {
            let spec = RandomInitSpec::energy_based(&stats, k);
            let n = 10;
            let pairs = (n * (n - 1)) as f64 / 2.0;
            let lhs = spec.expected_interaction_variance(n, k);
            let rhs = pairs * stats.mean_sq;
            assert!((lhs - rhs).abs() <= 1e-14 * rhs);
        }
    }

    #[test]
    fn coupling_spec_limits() {
        let (spec, sign) = RandomInitSpec::coupling_based(&CouplingStats::population(1.0, 0.0), 4);
        assert_eq!(sign, FmSign::Negative);
        assert_eq!(spec.mu_v, 0.5);
        assert_eq!(spec.sigma2_v, 0.0);

        let (spec0, sign0) =
            RandomInitSpec::coupling_based(&CouplingStats::population(0.0, 0.04), 4);
        assert_eq!(sign0, FmSign::Negative);
        assert_eq!(spec0.mu_v, 0.0);
        assert!((spec0.sigma2_v - 0.2 / 2.0).abs() < 1e-15);

        let (_, neg_mu) = RandomInitSpec::coupling_based(&CouplingStats::population(-0.3, 0.01), 3);
        assert_eq!(neg_mu, FmSign::Positive);

        for k in 1..8 {
            let s = CouplingStats::population(0.1, 0.001);
            let (spec, _) = RandomInitSpec::coupling_based(&s, k);
            assert!((spec.pair_mean(k) - 0.1).abs() < 1e-15);
            assert!((spec.pair_variance(k) - 0.001).abs() < 1e-15);
        }
    }

    #[test]
    fn deterministic_constant_coupling_init() {
        let j = SymMatrix::from_upper_fn(5, |a, b| if a == b { 0.0 } else { 1.0 });
        let m = IsingModel::from_couplings(j).unwrap();
        let p = coupling_random_init(&m, 4, 9).unwrap();
        assert_eq!(p.sign, FmSign::Negative);
        let g = p.coupling_matrix();
        for a in 0..5 {
            for b in 0..5 {
                if a != b {
                    assert!((g.get(a, b) - 1.0).abs() < 1e-15);
                }
            }
        }
        assert!(coupling_error(&m, &p).unwrap() < 1e-14);
    }

    #[test]
    fn sample_stats_conventions() {
        let m = sk(10, 0.3, 12);
        let s = CouplingStats::from_model(&m);
        let m_count = 45.0;
        assert!((s.mean_sq - (s.sigma2 * (m_count - 1.0) / m_count + s.mu * s.mu)).abs() < 1e-14);
        assert!(s.mean_sq >= s.sigma2 * (m_count - 1.0) / m_count - 1e-12);
    }

    #[test]
    fn random_inits_deterministic_and_finite() {
        let m = sk(10, 1.0, 6);
        let a = energy_random_init(&m, 4, FmSign::Negative, 77).unwrap();
        assert_eq!(a, energy_random_init(&m, 4, FmSign::Negative, 77).unwrap());
        assert_ne!(a, energy_random_init(&m, 4, FmSign::Negative, 78).unwrap());
        let b = coupling_random_init(&m, 4, 77).unwrap();
        assert_eq!(b, coupling_random_init(&m, 4, 77).unwrap());
        assert!(a.is_finite() && b.is_finite());
    }
}
