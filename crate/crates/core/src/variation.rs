//! Crossover and mutation over full-size parameter sets.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::model::ParamSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MutationConfig {
    pub rate_start: f64,
    pub rate_end: f64,
    /// Iteration at which the rate reaches `rate_end`.
    pub max_iter: usize,
    /// Standard deviation of the Gaussian noise.
    pub scale: f64,
}

impl Default for MutationConfig {
    fn default() -> Self {
        Self {
            rate_start: 0.9,
            rate_end: 0.1,
            max_iter: 20_000,
            scale: 0.008,
        }
    }
}

impl MutationConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("rate_start", self.rate_start), ("rate_end", self.rate_end)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(format!("{name} = {r} is outside [0, 1]")));
            }
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::config(format!(
                "mutation scale must be positive, got {}",
                self.scale
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::config("mutation schedule max_iter must be positive"));
        }
        Ok(())
    }
}

/// Linear interpolation from `rate_start` at iteration 0 to `rate_end` at
/// `max_iter`, held at `rate_end` afterwards.
pub fn mutation_rate_at(iteration: usize, config: &MutationConfig) -> f64 {
    if iteration >= config.max_iter {
        return config.rate_end;
    }
    let t = iteration as f64 / config.max_iter as f64;
    config.rate_start + (config.rate_end - config.rate_start) * t
}

/// Row-wise single-point crossover of the weights and per-element arithmetic
/// blending of the biases.
///
/// Each weight row gets its own cut `k` in `0..=row_len`: the first offspring
/// takes the leader's prefix and the follower's suffix, the second the
/// reverse. Each bias element gets its own `alpha` in `[0, 1)`.
pub fn crossover_rows<R: Rng + ?Sized>(
    leader: &ParamSet,
    follower: &ParamSet,
    rng: &mut R,
) -> Result<(ParamSet, ParamSet)> {
    leader.check_same_shape(follower)?;
    let layers = leader.layers();
    let mut w1 = Vec::with_capacity(layers);
    let mut w2 = Vec::with_capacity(layers);
    let mut b1 = Vec::with_capacity(layers);
    let mut b2 = Vec::with_capacity(layers);
    for l in 0..layers {
        let (lw, fw) = (&leader.weights[l], &follower.weights[l]);
        let mut o1 = Matrix::zeros(lw.rows(), lw.cols());
        let mut o2 = Matrix::zeros(lw.rows(), lw.cols());
        for r in 0..lw.rows() {
            let k = rng.random_range(0..=lw.cols());
            let (lr, fr) = (lw.row(r), fw.row(r));
            let row1 = o1.row_mut(r);
            row1[..k].copy_from_slice(&lr[..k]);
            row1[k..].copy_from_slice(&fr[k..]);
            let row2 = o2.row_mut(r);
            row2[..k].copy_from_slice(&fr[..k]);
            row2[k..].copy_from_slice(&lr[k..]);
        }
        w1.push(o1);
        w2.push(o2);

        let (lb, fb) = (&leader.biases[l], &follower.biases[l]);
        let mut c1 = Vec::with_capacity(lb.len());
        let mut c2 = Vec::with_capacity(lb.len());
        for (&x, &y) in lb.iter().zip(fb) {
            let alpha: f64 = rng.random();
            c1.push(alpha * x + (1.0 - alpha) * y);
            c2.push(alpha * y + (1.0 - alpha) * x);
        }
        b1.push(c1);
        b2.push(c2);
    }
    Ok((
        ParamSet {
            weights: w1,
            biases: b1,
        },
        ParamSet {
            weights: w2,
            biases: b2,
        },
    ))
}

/// Adds `Normal(0, scale)` noise to each entry independently with
/// probability `rate`.
pub fn mutate<R: Rng + ?Sized>(params: &ParamSet, rate: f64, scale: f64, rng: &mut R) -> ParamSet {
    let mut out = params.clone();
    mutate_in_place(&mut out, rate, scale, rng);
    out
}

pub fn mutate_in_place<R: Rng + ?Sized>(params: &mut ParamSet, rate: f64, scale: f64, rng: &mut R) {
    for v in params.values_mut() {
        if rng.random::<f64>() < rate {
            let z: f64 = StandardNormal.sample(rng);
            *v += scale * z;
        }
    }
}
