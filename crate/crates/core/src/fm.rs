//! Second-order factorization machines over spin inputs.
//!
//! The positive model is `f₊(x) = w₀ + Σ w_i x_i + Σ_{i<j} ⟨v_i, v_j⟩ x_i x_j`
//! and the negative model is `f₋ = −f₊` for the same parameters. Because
//! `x_i² = 1` on spins, the pairwise sum reduces to
//! `½ Σ_k [(Σ_i v_ik x_i)² − Σ_i v_ik²]`, which is what [`FmParams::forward`]
//! evaluates in `O(KN)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ising::SpinConfig;
use crate::linalg::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FmSign {
    Positive,
    Negative,
}

impl FmSign {
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            FmSign::Positive => 1.0,
            FmSign::Negative => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            FmSign::Positive => FmSign::Negative,
            FmSign::Negative => FmSign::Positive,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FmSign::Positive => "positive",
            FmSign::Negative => "negative",
        }
    }
}

/// Parameters `θ = (w₀, w, V)` with `V` stored row-major as `n × k`
/// (row `i` is `v_i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FmParamsJson", into = "FmParamsJson")]
pub struct FmParams {
    n: usize,
    k: usize,
    pub w0: f64,
    pub w: Vec<f64>,
    v: Vec<f64>,
    pub sign: FmSign,
}

impl FmParams {
    pub fn new(w0: f64, w: Vec<f64>, v: Vec<f64>, k: usize, sign: FmSign) -> Result<Self> {
        let n = w.len();
        if n == 0 {
            return Err(Error::InvalidDimension(
                "FM dimension must be positive".into(),
            ));
        }
        if k == 0 {
            return Err(Error::RankOutOfRange { k, max: n });
        }
        if v.len() != n * k {
            return Err(Error::DimensionMismatch {
                expected: n * k,
                found: v.len(),
            });
        }
        let p = Self {
            n,
            k,
            w0,
            w,
            v,
            sign,
        };
        if !p.is_finite() {
            return Err(Error::NonFinite("FM parameters"));
        }
        Ok(p)
    }

    pub fn zeros(n: usize, k: usize, sign: FmSign) -> Result<Self> {
        Self::new(0.0, vec![0.0; n], vec![0.0; n * k], k, sign)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn v_mut(&mut self) -> &mut [f64] {
        &mut self.v
    }

    #[inline]
    pub fn v_at(&self, i: usize, f: usize) -> f64 {
        self.v[i * self.k + f]
    }

    pub fn v_row(&self, i: usize) -> &[f64] {
        &self.v[i * self.k..(i + 1) * self.k]
    }

    pub fn is_finite(&self) -> bool {
        self.w0.is_finite()
            && self.w.iter().all(|x| x.is_finite())
            && self.v.iter().all(|x| x.is_finite())
    }

    /// Number of scalar parameters: `1 + n + n·k`.
    pub fn len(&self) -> usize {
        1 + self.n + self.n * self.k
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// All parameters in the order `w₀, w, V`.
    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        std::iter::once(&mut self.w0)
            .chain(self.w.iter_mut())
            .chain(self.v.iter_mut())
    }

    fn check(&self, x: &SpinConfig) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: x.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, x: &SpinConfig) -> Result<f64> {
        self.check(x)?;
        let mut q = vec![0.0; self.k];
        Ok(self.forward_dense(&x.to_f64(), &mut q))
    }

    /// Forward pass on `±1` values held as `f64`. Leaves `q_f = Σ_i v_if x_i`
    /// in `q` for reuse by the gradient.
    pub(crate) fn forward_dense(&self, x: &[f64], q: &mut [f64]) -> f64 {
        q.iter_mut().for_each(|v| *v = 0.0);
        let mut sq_sum = 0.0;
        let mut linear = self.w0;
        for (i, &xi) in x.iter().enumerate() {
            linear += self.w[i] * xi;
            let row = &self.v[i * self.k..(i + 1) * self.k];
            for (qf, &vif) in q.iter_mut().zip(row) {
                *qf += vif * xi;
                sq_sum += vif * vif;
            }
        }
        let pair = 0.5 * (q.iter().map(|v| v * v).sum::<f64>() - sq_sum);
        self.sign.factor() * (linear + pair)
    }

    /// `G = V Vᵀ`, the Gram matrix of the factor vectors.
    pub fn coupling_matrix(&self) -> SymMatrix {
        SymMatrix::from_upper_fn(self.n, |i, j| {
            self.v_row(i)
                .iter()
                .zip(self.v_row(j))
                .map(|(a, b)| a * b)
                .sum()
        })
    }

    /// Gradient of `(f(x) − y)²` given `residual = f(x) − y`.
    pub fn grad(&self, x: &SpinConfig, residual: f64) -> Result<FmGradient> {
        self.check(x)?;
        let mut g = FmGradient::zeros(self.n, self.k);
        let xf = x.to_f64();
        let mut q = vec![0.0; self.k];
        self.forward_dense(&xf, &mut q);
        self.accumulate_grad(&xf, &q, 2.0 * residual, &mut g);
        Ok(g)
    }

    /// Adds `scale · ∂f/∂θ` at `x` into `out`; `q` must hold the factor sums
    /// from [`Self::forward_dense`] at the same `x`.
    pub(crate) fn accumulate_grad(&self, x: &[f64], q: &[f64], scale: f64, out: &mut FmGradient) {
        let s = scale * self.sign.factor();
        out.w0 += s;
        for (i, &xi) in x.iter().enumerate() {
            out.w[i] += s * xi;
            let row = &self.v[i * self.k..(i + 1) * self.k];
            let grow = &mut out.v[i * self.k..(i + 1) * self.k];
            for ((g, &vif), &qf) in grow.iter_mut().zip(row).zip(q) {
                *g += s * xi * (qf - vif * xi);
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// Gradient with the same layout as [`FmParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct FmGradient {
    pub w0: f64,
    pub w: Vec<f64>,
    pub v: Vec<f64>,
}

impl FmGradient {
    pub fn zeros(n: usize, k: usize) -> Self {
        Self {
            w0: 0.0,
            w: vec![0.0; n],
            v: vec![0.0; n * k],
        }
    }

    pub fn reset(&mut self) {
        self.w0 = 0.0;
        self.w.iter_mut().for_each(|x| *x = 0.0);
        self.v.iter_mut().for_each(|x| *x = 0.0);
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.w0)
            .chain(self.w.iter().copied())
            .chain(self.v.iter().copied())
    }
}

#[derive(Serialize, Deserialize)]
struct FmParamsJson {
    n: usize,
    k: usize,
    sign: FmSign,
    w0: f64,
    w: Vec<f64>,
    v: Vec<Vec<f64>>,
}

impl From<FmParams> for FmParamsJson {
    fn from(p: FmParams) -> Self {
        let v = p.v.chunks(p.k).map(<[f64]>::to_vec).collect();
        Self {
            n: p.n,
            k: p.k,
            sign: p.sign,
            w0: p.w0,
            w: p.w,
            v,
        }
    }
}

impl TryFrom<FmParamsJson> for FmParams {
    type Error = Error;

    fn try_from(raw: FmParamsJson) -> Result<Self> {
        if raw.w.len() != raw.n || raw.v.len() != raw.n {
            return Err(Error::DimensionMismatch {
                expected: raw.n,
                found: raw.w.len().min(raw.v.len()),
            });
        }
        if let Some(bad) = raw.v.iter().find(|row| row.len() != raw.k) {
            return Err(Error::DimensionMismatch {
                expected: raw.k,
                found: bad.len(),
            });
        }
        let v = raw.v.into_iter().flatten().collect();
        FmParams::new(raw.w0, raw.w, v, raw.k, raw.sign)
    }
}
