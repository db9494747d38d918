use std::collections::HashMap;

use crate::error::{Error, Result};

/// Independent random streams used by a sweep cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Instance,
    Data,
    Init,
}

impl Stream {
    pub fn id(self) -> u64 {
        match self {
            Stream::Instance => 0,
            Stream::Data => 1,
            Stream::Init => 2,
        }
    }
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a master seed and cell coordinates into a child seed.
///
/// Coordinates are folded through the SplitMix64 finalizer together with
/// their position and the coordinate count, so `[1, 2]`, `[2, 1]` and
/// `[1, 2, 0]` all land on different seeds.
pub fn seed_schedule(master: u64, coords: &[u64]) -> u64 {
    let mut h = mix(master.wrapping_add(GOLDEN));
    for (i, &c) in coords.iter().enumerate() {
        let tagged = c.wrapping_add((i as u64 + 1).wrapping_mul(GOLDEN));
        h = mix(h ^ mix(tagged));
    }
    mix(h ^ coords.len() as u64)
}

/// Issues child seeds and rejects any collision between distinct
/// coordinates within one experiment.
#[derive(Debug, Clone)]
pub struct SeedPlan {
    master: u64,
    issued: HashMap<u64, Vec<u64>>,
}

impl SeedPlan {
    pub fn new(master: u64) -> Self {
        Self {
            master,
            issued: HashMap::new(),
        }
    }

    pub fn seed(&mut self, coords: &[u64]) -> Result<u64> {
        let s = seed_schedule(self.master, coords);
        match self.issued.get(&s) {
            Some(prev) if prev.as_slice() != coords => {
                Err(Error::SeedCollision(prev.clone(), coords.to_vec()))
            }
            Some(_) => Ok(s),
            None => {
                self.issued.insert(s, coords.to_vec());
                Ok(s)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.issued.len()
    }

    pub fn is_empty(&self) -> bool {
        self.issued.is_empty()
    }
}
