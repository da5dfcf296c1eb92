//! Index streams: cyclic, permuted (fresh Fisher–Yates shuffle per epoch),
//! randomized (uniform with replacement) and weighted sampling.
//!
//! Indices are 0-based. All randomness comes from [`CounterRng`] so a stream
//! is fully determined by `(kind, n, seed)`.

use crate::error::{invalid, Error, Result};
use crate::rng::CounterRng;

#[derive(Debug, Clone, PartialEq)]
pub enum OrderingKind {
    Cyclic,
    Permuted,
    Randomized,
    Weighted(Vec<f64>),
}

impl OrderingKind {
    pub fn name(&self) -> &'static str {
        match self {
            OrderingKind::Cyclic => "cyclic",
            OrderingKind::Permuted => "permuted",
            OrderingKind::Randomized => "random",
            OrderingKind::Weighted(_) => "weighted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Ordering {
    kind: OrderingKind,
    n: usize,
    seed: u64,
    step: u64,
    rng: CounterRng,
    perm: Vec<usize>,
    cumulative: Vec<f64>,
}

impl Ordering {
    pub fn new(kind: OrderingKind, n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("n", "must be >= 1"));
        }
        let mut cumulative = Vec::new();
        if let OrderingKind::Weighted(p) = &kind {
            if p.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: p.len() });
            }
            if p.iter().any(|&v| !(v.is_finite() && v > 0.0)) {
                return Err(invalid("weights", "every p_i must be finite and > 0"));
            }
            let total: f64 = p.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(invalid("weights", format!("must sum to 1, got {total}")));
            }
            let mut acc = 0.0;
            for &v in p {
                acc += v;
                cumulative.push(acc / total);
            }
        }
        Ok(Ordering {
            kind,
            n,
            seed,
            step: 0,
            rng: CounterRng::new(seed),
            perm: Vec::new(),
            cumulative,
        })
    }

    pub fn kind(&self) -> &OrderingKind {
        &self.kind
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn n(&self) -> usize {
        self.n
    }
    /// Number of indices emitted so far.
    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn next_index(&mut self) -> usize {
        let n = self.n;
        let k = self.step;
        self.step += 1;
        match &self.kind {
            OrderingKind::Cyclic => (k % n as u64) as usize,
            OrderingKind::Permuted => {
                let pos = (k % n as u64) as usize;
                if pos == 0 {
                    self.reshuffle();
                }
                self.perm[pos]
            }
            OrderingKind::Randomized => self.rng.below(n as u64) as usize,
            OrderingKind::Weighted(_) => {
                let u = self.rng.uniform_f64();
                let i = self.cumulative.partition_point(|&c| c <= u);
                i.min(n - 1)
            }
        }
    }

    fn reshuffle(&mut self) {
        self.perm.clear();
        self.perm.extend(0..self.n);
        for i in (1..self.n).rev() {
            let j = self.rng.below(i as u64 + 1) as usize;
            self.perm.swap(i, j);
        }
    }
}

impl Iterator for Ordering {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        Some(self.next_index())
    }
}

/// `p_i ∝ c_i = (μn + L_i − μ)/μ`.
pub fn weights_from_lipschitz(mu: f64, n: usize, lipschitz: &[f64]) -> Result<Vec<f64>> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::NotStronglyConvex(mu));
    }
    if lipschitz.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: lipschitz.len() });
    }
    let c: Vec<f64> = lipschitz.iter().map(|&l| (mu * n as f64 + l - mu) / mu).collect();
    let z: f64 = c.iter().sum();
    Ok(c.into_iter().map(|v| v / z).collect())
}
