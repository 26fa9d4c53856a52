//! Architecture search: dominance ranking, roulette weighting and the
//! consideration/pitch-adjustment generator for new hidden-layer widths.
//!
//! Every solution is scored on the objective vector
//! `(hidden widths..., cost)`, all minimized. The rank of a solution is the
//! number of other solutions that dominate it, and lists are kept sorted by
//! `(rank, cost)` with ties broken by original position.

use std::collections::HashSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec;
use crate::model::{self, ArchSolution, Architecture, Dataset, ParamSet};

/// Draws allowed per requested architecture before giving up.
pub const DRAWS_PER_ARCH: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchSearchConfig {
    /// Consideration rate: chance of copying a width from an existing solution.
    pub cr: f64,
    /// Pitch adjustment rate: chance of nudging a copied width.
    pub par: f64,
    /// Nudges are uniform integers in `[-pitch_span, pitch_span]`.
    pub pitch_span: usize,
    pub max_dims: Architecture,
}

impl ArchSearchConfig {
    pub fn new(max_dims: Architecture) -> Self {
        Self {
            cr: 0.9,
            par: 0.3,
            pitch_span: 2,
            max_dims,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.cr) {
            return Err(Error::config(format!("cr = {} is outside [0, 1]", self.cr)));
        }
        if !(0.0..=1.0).contains(&self.par) {
            return Err(Error::config(format!("par = {} is outside [0, 1]", self.par)));
        }
        if self.pitch_span < 1 {
            return Err(Error::config("pitch_span must be at least 1"));
        }
        Ok(())
    }
}

/// Roulette-wheel selection probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionWeights {
    probs: Vec<f64>,
}

impl SelectionWeights {
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Spins the wheel once.
    pub fn pick<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, p) in self.probs.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        // Rounding can leave the cumulative sum a hair below one.
        self.probs
            .iter()
            .rposition(|&p| p > 0.0)
            .unwrap_or(self.probs.len() - 1)
    }
}

/// `p_i = f_i / sum_j f_j` with fitness `f_i = 1 / (1 + cost_i)`.
pub fn fitness_weights(costs: &[f64]) -> Result<SelectionWeights> {
    if costs.is_empty() {
        return Err(Error::config("fitness weights need at least one cost"));
    }
    if let Some((index, &value)) = costs
        .iter()
        .enumerate()
        .find(|(_, c)| !c.is_finite() || **c < 0.0)
    {
        return Err(Error::InvalidCost { index, value });
    }
    let fitness: Vec<f64> = costs.iter().map(|c| 1.0 / (1.0 + c)).collect();
    let total: f64 = fitness.iter().sum();
    Ok(SelectionWeights {
        probs: fitness.iter().map(|f| f / total).collect(),
    })
}

fn check_comparable(a: &Architecture, b: &Architecture) -> Result<()> {
    if a.dims().len() == b.dims().len() {
        Ok(())
    } else {
        Err(Error::IncomparableStructure {
            left: a.dims().len(),
            right: b.dims().len(),
        })
    }
}

fn dominates_unchecked(a: &ArchSolution, b: &ArchSolution) -> bool {
    let mut strictly = a.cost < b.cost;
    if a.cost > b.cost {
        return false;
    }
    for (x, y) in a.arch.hidden().iter().zip(b.arch.hidden()) {
        if x > y {
            return false;
        }
        strictly |= x < y;
    }
    strictly
}

/// True when `a` is no worse than `b` on every objective and strictly better
/// on at least one.
pub fn dominates(a: &ArchSolution, b: &ArchSolution) -> Result<bool> {
    check_comparable(&a.arch, &b.arch)?;
    Ok(dominates_unchecked(a, b))
}

/// Number of solutions dominating each solution.
pub fn pareto_dominance_rank(solutions: &[ArchSolution]) -> Result<Vec<usize>> {
    if let Some(first) = solutions.first() {
        for s in &solutions[1..] {
            check_comparable(&first.arch, &s.arch)?;
        }
    }
    let n = solutions.len();
    let mut rank = vec![0; n];
    for i in 0..n {
        for j in i + 1..n {
            if dominates_unchecked(&solutions[j], &solutions[i]) {
                rank[i] += 1;
            } else if dominates_unchecked(&solutions[i], &solutions[j]) {
                rank[j] += 1;
            }
        }
    }
    Ok(rank)
}

/// Positions of `solutions` in `(rank, cost)` order, ties kept in input order.
pub fn sort_order(solutions: &[ArchSolution]) -> Result<Vec<usize>> {
    let rank = pareto_dominance_rank(solutions)?;
    let mut order: Vec<usize> = (0..solutions.len()).collect();
    order.sort_by(|&a, &b| {
        rank[a]
            .cmp(&rank[b])
            .then(solutions[a].cost.total_cmp(&solutions[b].cost))
    });
    Ok(order)
}

pub fn sort_solutions(solutions: Vec<ArchSolution>) -> Result<Vec<ArchSolution>> {
    let order = sort_order(&solutions)?;
    let mut slots: Vec<Option<ArchSolution>> = solutions.into_iter().map(Some).collect();
    Ok(order
        .into_iter()
        .map(|i| slots[i].take().expect("order is a permutation"))
        .collect())
}

/// First occurrence of each architecture, carrying the lowest cost seen for it.
pub fn unique_by_arch<'a, I>(solutions: I) -> Vec<ArchSolution>
where
    I: IntoIterator<Item = &'a ArchSolution>,
{
    let mut out: Vec<ArchSolution> = Vec::new();
    for s in solutions {
        match out.iter_mut().find(|u| u.arch == s.arch) {
            Some(u) => u.cost = u.cost.min(s.cost),
            None => out.push(s.clone()),
        }
    }
    out
}

/// Proposes one architecture from the donor pool `unique`.
///
/// Input and output widths are copied. Each hidden width independently either
/// copies the same column from a roulette-selected donor (probability `cr`),
/// optionally nudged by up to `pitch_span` and clipped to `[1, max]`
/// (probability `par`), or is drawn uniformly from `[1, max]`.
pub fn create_new_solution<R: Rng + ?Sized>(
    unique: &[ArchSolution],
    config: &ArchSearchConfig,
    rng: &mut R,
) -> Result<Architecture> {
    let first = unique
        .first()
        .ok_or_else(|| Error::config("cannot create a solution from an empty donor list"))?;
    let max = config.max_dims.dims();
    if let Some(bad) = unique.iter().find(|s| !s.arch.fits_within(&config.max_dims)) {
        return Err(Error::config(format!(
            "donor {} does not fit max dims {}",
            bad.arch, config.max_dims
        )));
    }
    let costs: Vec<f64> = unique.iter().map(|s| s.cost).collect();
    let weights = fitness_weights(&costs)?;
    let span = config.pitch_span as i64;

    let mut dims = Vec::with_capacity(max.len());
    dims.push(first.arch.input());
    for (col, &upper) in max.iter().enumerate().take(max.len() - 1).skip(1) {
        let width = if rng.random::<f64>() < config.cr {
            let donor = weights.pick(rng);
            let mut w = unique[donor].arch.dims()[col] as i64;
            if rng.random::<f64>() < config.par {
                w += rng.random_range(-span..=span);
                w = w.clamp(1, upper as i64);
            }
            w as usize
        } else {
            rng.random_range(1..=upper)
        };
        dims.push(width);
    }
    dims.push(*first.arch.dims().last().expect("nonempty"));
    Architecture::new(dims)
}

/// Draws until `count` architectures are collected that differ from each
/// other and from everything in `exclude`.
pub(crate) fn generate_distinct<R: Rng + ?Sized>(
    pool: &[ArchSolution],
    config: &ArchSearchConfig,
    count: usize,
    exclude: &[Architecture],
    rng: &mut R,
) -> Result<Vec<Architecture>> {
    let budget = DRAWS_PER_ARCH * count;
    let mut seen: HashSet<Architecture> = exclude.iter().cloned().collect();
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0;
    while out.len() < count {
        if attempts == budget {
            return Err(Error::SearchSpaceExhausted {
                wanted: count,
                found: out.len(),
                attempts,
            });
        }
        attempts += 1;
        let arch = create_new_solution(pool, config, rng)?;
        if seen.insert(arch.clone()) {
            out.push(arch);
        }
    }
    Ok(out)
}

/// Proposes `size` distinct architectures from the union of both agents' lists.
pub fn create_new_solutions<R: Rng + ?Sized>(
    leader: &[ArchSolution],
    follower: &[ArchSolution],
    config: &ArchSearchConfig,
    size: usize,
    rng: &mut R,
) -> Result<Vec<Architecture>> {
    let unique = unique_by_arch(leader.iter().chain(follower));
    generate_distinct(&unique, config, size, &[], rng)
}

/// Costs every architecture against `params` on `data`, in input order.
pub fn evaluate_all(
    archs: &[Architecture],
    params: &ParamSet,
    data: &Dataset,
) -> Result<Vec<ArchSolution>> {
    exec::map(archs, |a| {
        model::evaluate(params, a, data).map(|c| ArchSolution::new(a.clone(), c))
    })
    .into_iter()
    .collect()
}

/// Re-evaluates every architecture and returns them in `(rank, cost)` order.
pub fn update_and_sort(
    archs: &[Architecture],
    params: &ParamSet,
    data: &Dataset,
) -> Result<Vec<ArchSolution>> {
    sort_solutions(evaluate_all(archs, params, data)?)
}
