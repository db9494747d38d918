//! Full-batch MSE training with AdamW and best-checkpoint selection by
//! coupling error.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fm::{FmGradient, FmParams};
use crate::init::coupling_error;
use crate::ising::{Dataset, IsingModel};

/// Loss above which a run is treated as diverged.
pub const DIVERGENCE_LOSS: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub eval_interval: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 10_000,
            eval_interval: 100,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return bad(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.eval_interval == 0 || self.eval_interval > self.epochs {
            return bad(format!(
                "eval interval must be in 1..={}, got {}",
                self.epochs, self.eval_interval
            ));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) || !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return bad(format!(
                "betas must lie in (0, 1), got {} and {}",
                self.beta1, self.beta2
            ));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.weight_decay >= 0.0) {
            return bad(format!(
                "weight decay must be nonnegative, got {}",
                self.weight_decay
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub epoch: usize,
    pub loss: f64,
    pub coupling_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    pub best_params: FmParams,
    pub best_coupling_error: f64,
    pub best_epoch: usize,
    /// Epoch 0 first, then one point every `eval_interval` epochs.
    pub trace: Vec<TracePoint>,
    pub final_loss: f64,
}

impl TrainResult {
    pub fn initial_coupling_error(&self) -> f64 {
        self.trace[0].coupling_error
    }

    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "loss", "coupling_error"])?;
        for p in &self.trace {
            w.write_record([
                p.epoch.to_string(),
                p.loss.to_string(),
                p.coupling_error.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `L(θ) = (1/D) Σ_d (f(x_d; θ) − y_d)²`.
pub fn mse_loss(p: &FmParams, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let batch = Batch::new(p, data)?;
    Ok(batch.loss(p))
}

/// Spins cached as `f64` rows.
struct Batch {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
}

impl Batch {
    fn new(p: &FmParams, data: &Dataset) -> Result<Self> {
        let n = p.n();
        let mut x = Vec::with_capacity(n * data.len());
        let mut y = Vec::with_capacity(data.len());
        for (cfg, energy) in data.iter() {
            if cfg.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: cfg.len(),
                });
            }
            x.extend(cfg.spins().iter().map(|&s| f64::from(s)));
            y.push(*energy);
        }
        Ok(Self { x, y, n })
    }

    fn len(&self) -> usize {
        self.y.len()
    }

    fn rows(&self) -> impl Iterator<Item = (&[f64], f64)> {
        self.x.chunks(self.n.max(1)).zip(self.y.iter().copied())
    }

    fn loss(&self, p: &FmParams) -> f64 {
        let mut q = vec![0.0; p.k()];
        let total: f64 = self
            .rows()
            .map(|(x, y)| (p.forward_dense(x, &mut q) - y).powi(2))
            .sum();
        total / self.len() as f64
    }

    /// Writes the mean-loss gradient into `grad`; returns the loss.
    fn loss_and_grad(&self, p: &FmParams, grad: &mut FmGradient, q: &mut [f64]) -> f64 {
        grad.reset();
        let scale = 2.0 / self.len() as f64;
        let mut total = 0.0;
        for (x, y) in self.rows() {
            let r = p.forward_dense(x, q) - y;
            total += r * r;
            p.accumulate_grad(x, q, scale * r, grad);
        }
        total / self.len() as f64
    }
}

/// AdamW moment state over the flattened parameter vector `(w₀, w, V)`.
#[derive(Debug, Clone)]
pub struct AdamW {
    cfg: TrainConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl AdamW {
    pub fn new(cfg: TrainConfig, len: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// Adaptive moment step on `grad`, then decoupled decay
    /// `θ ← θ − lr·wd·θ`.
    pub fn step(&mut self, params: &mut FmParams, grad: &FmGradient) {
        self.t += 1;
        let TrainConfig {
            learning_rate: lr,
            beta1,
            beta2,
            eps,
            weight_decay,
            ..
        } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        let decay = lr * weight_decay;
        for (((theta, g), m), v) in params
            .values_mut()
            .zip(grad.values())
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *theta -= lr * m_hat / (v_hat.sqrt() + eps);
            if decay != 0.0 {
                *theta -= decay * *theta;
            }
        }
    }
}

/// Trains `p0` on `data`, measuring `ΔJ` against `model` at epoch 0 and every
/// `eval_interval` epochs, and returns the checkpoint with the smallest `ΔJ`.
///
/// An empty dataset leaves the parameters untouched; its trace reports zero
/// loss.
pub fn train(
    p0: &FmParams,
    data: &Dataset,
    model: &IsingModel,
    cfg: &TrainConfig,
) -> Result<TrainResult> {
    cfg.validate()?;
    if model.n() != p0.n() {
        return Err(Error::DimensionMismatch {
            expected: model.n(),
            found: p0.n(),
        });
    }
    let batch = Batch::new(p0, data)?;
    let evals = cfg.epochs / cfg.eval_interval;

    let loss_of = |p: &FmParams| if batch.len() == 0 { 0.0 } else { batch.loss(p) };
    let initial = TracePoint {
        epoch: 0,
        loss: loss_of(p0),
        coupling_error: coupling_error(model, p0)?,
    };
    if !initial.loss.is_finite() || initial.loss > DIVERGENCE_LOSS {
        return Err(Error::Divergence {
            epoch: 0,
            loss: initial.loss,
        });
    }

    let mut trace = Vec::with_capacity(evals + 1);
    trace.push(initial);
    let mut best_params = p0.clone();
    let mut best_err = initial.coupling_error;
    let mut best_epoch = 0;

    if batch.len() == 0 {
        for e in 1..=evals {
            trace.push(TracePoint {
                epoch: e * cfg.eval_interval,
                ..initial
            });
        }
        return Ok(TrainResult {
            best_params,
            best_coupling_error: best_err,
            best_epoch,
            trace,
            final_loss: 0.0,
        });
    }

    let mut params = p0.clone();
    let mut opt = AdamW::new(*cfg, params.len());
    let mut grad = FmGradient::zeros(params.n(), params.k());
    let mut q = vec![0.0; params.k()];
    for epoch in 1..=cfg.epochs {
        let loss = batch.loss_and_grad(&params, &mut grad, &mut q);
        if !loss.is_finite() || loss > DIVERGENCE_LOSS {
            return Err(Error::Divergence { epoch, loss });
        }
        opt.step(&mut params, &grad);
        if epoch % cfg.eval_interval == 0 {
            let point = TracePoint {
                epoch,
                loss: batch.loss(&params),
                coupling_error: coupling_error(model, &params)?,
            };
            if !point.loss.is_finite() || point.loss > DIVERGENCE_LOSS {
                return Err(Error::Divergence {
                    epoch,
                    loss: point.loss,
                });
            }
            if point.coupling_error < best_err {
                best_err = point.coupling_error;
                best_params = params.clone();
                best_epoch = epoch;
            }
            trace.push(point);
        }
    }

    Ok(TrainResult {
        best_params,
        best_coupling_error: best_err,
        best_epoch,
        trace,
        final_loss: batch.loss(&params),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fm::FmSign;
    use crate::init::{coupling_random_init_with, low_rank_init, CouplingStats};
    use crate::ising::{build_dataset, generate_sk, SkParams, SpinConfig};
    use crate::linalg::SymMatrix;

    fn sk10(seed: u64) -> IsingModel {
        generate_sk(&SkParams {
            n: 10,
            j0: 1.0,
            j1: 0.1,
            seed,
        })
        .unwrap()
    }

    fn short(epochs: usize, eval: usize) -> TrainConfig {
        TrainConfig {
            epochs,
            eval_interval: eval,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn loss_hand_cases() {
        let m = sk10(1);
        let data = build_dataset(&m, 50, 2).unwrap();
        let exact = low_rank_init(&m, 9, FmSign::Negative).unwrap();
        assert!(mse_loss(&exact, &data).unwrap() < 1e-24);

        let pts = (0..4).map(|b| (SpinConfig::from_bits(3, b), 2.0)).collect();
        let two = Dataset::new(pts).unwrap();
        let zero = FmParams::zeros(3, 1, FmSign::Positive).unwrap();
        assert_eq!(mse_loss(&zero, &two).unwrap(), 4.0);
        assert!(matches!(
            mse_loss(&zero, &Dataset::default()),
            Err(Error::EmptyDataset)
        ));
    }

    #[test]
    fn loss_matches_direct_summation() {
        let m = sk10(3);
        let data = build_dataset(&m, 40, 5).unwrap();
        let p =
            coupling_random_init_with(&m, &CouplingStats::population(0.1, 0.001), 3, 4).unwrap();
        let mut direct = 0.0;
        for (x, y) in data.iter() {
            direct += (p.forward(x).unwrap() - y).powi(2);
        }
        direct /= data.len() as f64;
        let l = mse_loss(&p, &data).unwrap();
        assert!((l - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn exact_start_stays_best() {
        let m = sk10(4);
        let data = build_dataset(&m, 100, 1).unwrap();
        let p0 = low_rank_init(&m, 9, FmSign::Negative).unwrap();
        let r = train(&p0, &data, &m, &short(300, 100)).unwrap();
        assert!(r.trace[0].loss < 1e-20);
        assert!(r.trace[0].coupling_error <= 1e-8);
        assert!(r.best_coupling_error <= r.trace[0].coupling_error);
    }

    #[test]
    fn single_interval_has_two_trace_points() {
        let m = sk10(5);
        let data = build_dataset(&m, 10, 1).unwrap();
        let p0 = low_rank_init(&m, 3, FmSign::Negative).unwrap();
        let r = train(&p0, &data, &m, &short(100, 100)).unwrap();
        assert_eq!(r.trace.len(), 2);
        assert_eq!(r.trace[1].epoch, 100);
        let r = train(&p0, &data, &m, &short(1000, 100)).unwrap();
        assert_eq!(r.trace.len(), 11);
        let min = r
            .trace
            .iter()
            .map(|p| p.coupling_error)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(r.best_coupling_error, min);
    }

    #[test]
    fn deterministic() {
        let m = sk10(6);
        let data = build_dataset(&m, 30, 2).unwrap();
        let p0 =
            coupling_random_init_with(&m, &CouplingStats::population(0.1, 0.001), 4, 3).unwrap();
        let a = train(&p0, &data, &m, &short(500, 100)).unwrap();
        let b = train(&p0, &data, &m, &short(500, 100)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_learning_rate_freezes_parameters() {
        let m = sk10(7);
        let data = build_dataset(&m, 20, 2).unwrap();
        let p0 = low_rank_init(&m, 2, FmSign::Negative).unwrap();
        let cfg = TrainConfig {
            learning_rate: 1e-300,
            ..short(200, 100)
        };
        let r = train(&p0, &data, &m, &cfg).unwrap();
        assert!(r.trace.windows(2).all(|w| w[0].loss == w[1].loss));
        assert_eq!(r.best_params, p0);
    }

    #[test]
    fn full_rank_training_lowers_loss() {
        let m = sk10(8);
        let data = build_dataset(&m, 200, 9).unwrap();
        let p0 = FmParams::new(0.0, vec![0.0; 10], vec![0.01; 100], 10, FmSign::Negative).unwrap();
        let r = train(&p0, &data, &m, &short(1000, 100)).unwrap();
        assert!(r.trace[0].loss > 1e-8);
        assert!(r.final_loss < r.trace[0].loss);
    }

    #[test]
    fn empty_dataset_is_a_no_op() {
        let m = sk10(9);
        let p0 = low_rank_init(&m, 4, FmSign::Negative).unwrap();
        let r = train(&p0, &Dataset::default(), &m, &short(300, 100)).unwrap();
        assert_eq!(r.trace.len(), 4);
        assert_eq!(r.best_params, p0);
    }

    #[test]
    fn divergence_reported_with_epoch() {
        let mut j = SymMatrix::zeros(3);
        j.set(0, 1, 1e9);
        let m = IsingModel::from_couplings(j).unwrap();
        let data = build_dataset(&m, 8, 1).unwrap();
        let p0 = FmParams::zeros(3, 1, FmSign::Negative).unwrap();
        let err = train(&p0, &data, &m, &short(100, 10)).unwrap_err();
        assert!(matches!(err, Error::Divergence { epoch: 0, .. }));
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        assert!(short(100, 200).validate().is_err());
        assert!(TrainConfig {
            beta1: 1.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
        assert!(TrainConfig {
            weight_decay: -1.0,
            ..TrainConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn weight_decay_shrinks_parameters() {
        let m = sk10(10);
        let p0 = low_rank_init(&m, 9, FmSign::Negative).unwrap();
        let cfg = TrainConfig {
            weight_decay: 10.0,
            ..short(100, 100)
        };
        let mut opt = AdamW::new(cfg, p0.len());
        let mut p = p0.clone();
        let zero = FmGradient::zeros(10, 9);
        opt.step(&mut p, &zero);
        let norm = |q: &FmParams| q.v().iter().map(|v| v * v).sum::<f64>();
        assert!(norm(&p) < norm(&p0));
    }

    #[test]
    fn trace_csv_header() {
        let m = sk10(11);
        let data = build_dataset(&m, 10, 1).unwrap();
        let p0 = low_rank_init(&m, 2, FmSign::Negative).unwrap();
        let r = train(&p0, &data, &m, &short(200, 100)).unwrap();
        let mut buf = Vec::new();
        r.write_trace_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("epoch,loss,coupling_error\n0,"));
        assert_eq!(text.lines().count(), 4);
    }
}
