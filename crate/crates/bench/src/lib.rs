//! Shared fixtures for the criterion benches.

use fmwarm::{build_dataset, generate_sk, Dataset, IsingModel, SkParams};

pub fn sk_instance(n: usize, j1: f64) -> IsingModel {
    generate_sk(&SkParams {
        n,
        j0: 1.0,
        j1,
        seed: 7,
    })
    .expect("valid SK parameters")
}

pub fn dataset(model: &IsingModel, d: usize) -> Dataset {
    build_dataset(model, d, 11).expect("feasible dataset")
}
