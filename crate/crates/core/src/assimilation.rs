//! Masked trim-and-paste merging of parameter sets.
//!
//! A merge walks a ranked list of solutions and, for each architecture it
//! keeps, copies that architecture's block from the solution's source
//! parameter set into the target. A [`WriteMask`] records every written cell
//! so that the first writer of a cell wins and later, lower-ranked solutions
//! only fill in what is still untouched.

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::arch_search::{self, ArchSearchConfig};
use crate::error::{Error, Result};
use crate::model::{init_zero_params, ArchSolution, Architecture, Dataset, ParamSet};

/// Boolean shadow of a [`ParamSet`]; `true` marks a cell written during the
/// current merge.
#[derive(Debug, Clone, PartialEq)]
pub struct WriteMask {
    weights: Vec<Vec<bool>>,
    biases: Vec<Vec<bool>>,
    cols: Vec<usize>,
}

impl WriteMask {
    pub fn new(shape: &ParamSet) -> Self {
        Self {
            weights: shape
                .weights
                .iter()
                .map(|w| vec![false; w.as_slice().len()])
                .collect(),
            biases: shape.biases.iter().map(|b| vec![false; b.len()]).collect(),
            cols: shape.weights.iter().map(|w| w.cols()).collect(),
        }
    }

    pub fn weight(&self, layer: usize, row: usize, col: usize) -> bool {
        self.weights[layer][row * self.cols[layer] + col]
    }

    pub fn bias(&self, layer: usize, row: usize) -> bool {
        self.biases[layer][row]
    }

    pub fn count(&self) -> usize {
        self.weights
            .iter()
            .chain(&self.biases)
            .map(|v| v.iter().filter(|&&b| b).count())
            .sum()
    }

    fn fits(&self, params: &ParamSet) -> bool {
        self.weights.len() == params.weights.len()
            && self
                .weights
                .iter()
                .zip(&params.weights)
                .all(|(m, w)| m.len() == w.as_slice().len())
            && self
                .biases
                .iter()
                .zip(&params.biases)
                .all(|(m, b)| m.len() == b.len())
            && self
                .cols
                .iter()
                .zip(&params.weights)
                .all(|(&c, w)| c == w.cols())
    }
}

/// Copies `donor`'s `arch` block into `target` wherever `mask` is still
/// unset, then sets those mask cells. Returns the number of cells written.
pub fn masked_paste(
    target: &mut ParamSet,
    donor: &ParamSet,
    arch: &Architecture,
    mask: &mut WriteMask,
) -> Result<usize> {
    target.check_same_shape(donor)?;
    target.check_holds(arch)?;
    if !mask.fits(target) {
        return Err(Error::dim("write mask does not match the parameter shapes"));
    }
    let d = arch.dims();
    let mut written = 0;
    for l in 0..arch.layers() {
        let (rows, cols) = (d[l + 1], d[l]);
        let stride = mask.cols[l];
        let wmask = &mut mask.weights[l];
        let tw = target.weights[l].as_mut_slice();
        let dw = donor.weights[l].as_slice();
        for r in 0..rows {
            for c in 0..cols {
                let i = r * stride + c;
                if !wmask[i] {
                    tw[i] = dw[i];
                    wmask[i] = true;
                    written += 1;
                }
            }
        }
        let cells = mask.biases[l][..rows]
            .iter_mut()
            .zip(&mut target.biases[l][..rows])
            .zip(&donor.biases[l][..rows]);
        for ((seen, t), &d) in cells {
            if !*seen {
                *t = d;
                *seen = true;
                written += 1;
            }
        }
    }
    Ok(written)
}

/// Which offspring parameter set a solution was evaluated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OffspringTag {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
}

/// Which agent (or the merged offspring) a solution came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentTag {
    Lead,
    Foll,
    Off,
}

impl fmt::Display for OffspringTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OffspringTag::One => "1",
            OffspringTag::Two => "2",
        })
    }
}

impl fmt::Display for AgentTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AgentTag::Lead => "lead",
            AgentTag::Foll => "foll",
            AgentTag::Off => "off",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggedSolution<T> {
    pub solution: ArchSolution,
    pub source: T,
}

impl<T> TaggedSolution<T> {
    pub fn new(solution: ArchSolution, source: T) -> Self {
        Self { solution, source }
    }
}

/// Tags, ranks and sorts the concatenation of several solution lists.
fn join_sorted<T: Copy>(lists: &[(&[ArchSolution], T)]) -> Result<Vec<TaggedSolution<T>>> {
    let joined: Vec<TaggedSolution<T>> = lists
        .iter()
        .flat_map(|(list, tag)| list.iter().map(|s| TaggedSolution::new(s.clone(), *tag)))
        .collect();
    let plain: Vec<ArchSolution> = joined.iter().map(|t| t.solution.clone()).collect();
    let order = arch_search::sort_order(&plain)?;
    Ok(order.into_iter().map(|i| joined[i].clone()).collect())
}

fn recompute(archs: &[Architecture], params: &ParamSet, data: &Dataset) -> Result<Vec<ArchSolution>> {
    arch_search::evaluate_all(archs, params, data)
}

/// Combines two offspring parameter sets that were evaluated on the same
/// architectures.
///
/// The ranked walk keeps the first occurrence of each architecture and pastes
/// its block from the offspring it was scored against into a zeroed parameter
/// set, stopping after `size` architectures. Costs are then recomputed
/// against the merged parameters and the list re-sorted.
pub fn merge_two_offs(
    off1_params: &ParamSet,
    off2_params: &ParamSet,
    off1: &[ArchSolution],
    off2: &[ArchSolution],
    data: &Dataset,
) -> Result<(ParamSet, Vec<ArchSolution>)> {
    if off1.len() != off2.len() {
        return Err(Error::dim(format!(
            "offspring lists differ in length: {} vs {}",
            off1.len(),
            off2.len()
        )));
    }
    off1_params.check_same_shape(off2_params)?;
    let size = off1.len();
    let sorted = join_sorted(&[(off1, OffspringTag::One), (off2, OffspringTag::Two)])?;

    let mut merged = init_zero_params(&Architecture::new(off1_params.dims())?);
    let mut mask = WriteMask::new(&merged);
    let mut chosen: Vec<Architecture> = Vec::with_capacity(size);
    for entry in &sorted {
        if chosen.len() == size {
            break;
        }
        let arch = &entry.solution.arch;
        if chosen.contains(arch) {
            continue;
        }
        let donor = match entry.source {
            OffspringTag::One => off1_params,
            OffspringTag::Two => off2_params,
        };
        masked_paste(&mut merged, donor, arch, &mut mask)?;
        chosen.push(arch.clone());
    }
    let solutions = arch_search::sort_solutions(recompute(&chosen, &merged, data)?)?;
    Ok((merged, solutions))
}

/// One agent: its full-size parameters and its ranked architectures.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub params: ParamSet,
    pub solutions: Vec<ArchSolution>,
}

impl Agent {
    pub fn new(params: ParamSet, solutions: Vec<ArchSolution>) -> Self {
        Self { params, solutions }
    }

    /// Lowest recorded cost.
    pub fn best_cost(&self) -> f64 {
        self.solutions
            .iter()
            .map(|s| s.cost)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn archs(&self) -> Vec<Architecture> {
        self.solutions.iter().map(|s| s.arch.clone()).collect()
    }
}

/// Outcome of one entry of the redistribution walk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assignment {
    Leader,
    Follower,
    Skipped,
}

/// Decides, for a ranked list of architectures, which agent receives each one.
///
/// Even positions go to the leader and odd ones to the follower. An
/// architecture already held by its intended agent falls through to the
/// other agent, and is skipped if both already hold it.
pub fn plan_assignments<'a, I>(sorted: I) -> Vec<Assignment>
where
    I: IntoIterator<Item = &'a Architecture>,
{
    let mut lead: Vec<&Architecture> = Vec::new();
    let mut foll: Vec<&Architecture> = Vec::new();
    sorted
        .into_iter()
        .enumerate()
        .map(|(idx, arch)| {
            let (first, second) = if idx % 2 == 0 {
                (Assignment::Leader, Assignment::Follower)
            } else {
                (Assignment::Follower, Assignment::Leader)
            };
            for choice in [first, second] {
                let held = match choice {
                    Assignment::Leader => &mut lead,
                    _ => &mut foll,
                };
                if !held.contains(&arch) {
                    held.push(arch);
                    return choice;
                }
            }
            Assignment::Skipped
        })
        .collect()
}

/// Result of walking a ranked, tagged list into two agents.
#[derive(Debug, Clone)]
pub struct Redistribution {
    pub leader_params: ParamSet,
    pub follower_params: ParamSet,
    pub leader: Vec<ArchSolution>,
    pub follower: Vec<ArchSolution>,
    /// Decision per walked entry.
    pub decisions: Vec<Assignment>,
    /// Cells written per walked entry.
    pub pasted: Vec<usize>,
}

/// Walks `sorted` and pastes each assigned solution's block from its source
/// into copies of the leader and follower parameters.
pub fn redistribute(
    sorted: &[TaggedSolution<AgentTag>],
    leader_params: &ParamSet,
    follower_params: &ParamSet,
    offspring_params: &ParamSet,
) -> Result<Redistribution> {
    leader_params.check_same_shape(follower_params)?;
    leader_params.check_same_shape(offspring_params)?;
    let decisions = plan_assignments(sorted.iter().map(|t| &t.solution.arch));

    let mut lead_p = leader_params.clone();
    let mut foll_p = follower_params.clone();
    let mut lead_mask = WriteMask::new(&lead_p);
    let mut foll_mask = WriteMask::new(&foll_p);
    let mut leader = Vec::new();
    let mut follower = Vec::new();
    let mut pasted = Vec::with_capacity(sorted.len());

    for (entry, decision) in sorted.iter().zip(&decisions) {
        let donor = match entry.source {
            AgentTag::Lead => leader_params,
            AgentTag::Foll => follower_params,
            AgentTag::Off => offspring_params,
        };
        let (target, mask, chosen) = match decision {
            Assignment::Leader => (&mut lead_p, &mut lead_mask, &mut leader),
            Assignment::Follower => (&mut foll_p, &mut foll_mask, &mut follower),
            Assignment::Skipped => {
                pasted.push(0);
                continue;
            }
        };
        pasted.push(masked_paste(target, donor, &entry.solution.arch, mask)?);
        chosen.push(entry.solution.clone());
    }
    Ok(Redistribution {
        leader_params: lead_p,
        follower_params: foll_p,
        leader,
        follower,
        decisions,
        pasted,
    })
}

fn settle<R: Rng + ?Sized>(
    mut chosen: Vec<ArchSolution>,
    params: &ParamSet,
    size: usize,
    pool: &[ArchSolution],
    config: &ArchSearchConfig,
    data: &Dataset,
    rng: &mut R,
) -> Result<Vec<ArchSolution>> {
    chosen.truncate(size);
    let mut archs: Vec<Architecture> = chosen.into_iter().map(|s| s.arch).collect();
    if archs.len() < size {
        let fill = arch_search::generate_distinct(pool, config, size - archs.len(), &archs, rng)?;
        archs.extend(fill);
    }
    recompute(&archs, params, data)
}

/// Folds the leader, follower and merged offspring into updated leader and
/// follower agents.
///
/// All `3 * size` solutions are ranked together and redistributed by
/// [`redistribute`]. Each agent keeps at most `size` solutions in walk order;
/// a short list is topped up with fresh proposals drawn from the union of
/// the three lists. Every retained cost is recomputed against the updated
/// parameters. Lists stay in walk order, so the leader's first entry is the
/// best-ranked joined architecture.
pub fn anabolism<R: Rng + ?Sized>(
    leader: &Agent,
    follower: &Agent,
    offspring: &Agent,
    config: &ArchSearchConfig,
    data: &Dataset,
    rng: &mut R,
) -> Result<(Agent, Agent)> {
    let size = leader.solutions.len();
    if follower.solutions.len() != size || offspring.solutions.len() != size {
        return Err(Error::dim(format!(
            "anabolism needs equal list sizes, got {}, {}, {}",
            size,
            follower.solutions.len(),
            offspring.solutions.len()
        )));
    }
    let sorted = join_sorted(&[
        (&leader.solutions, AgentTag::Lead),
        (&follower.solutions, AgentTag::Foll),
        (&offspring.solutions, AgentTag::Off),
    ])?;
    let walk = redistribute(&sorted, &leader.params, &follower.params, &offspring.params)?;
    let pool = arch_search::unique_by_arch(sorted.iter().map(|t| &t.solution));

    let lead_l = settle(walk.leader, &walk.leader_params, size, &pool, config, data, rng)?;
    let foll_l = settle(walk.follower, &walk.follower_params, size, &pool, config, data, rng)?;
    Ok((
        Agent::new(walk.leader_params, lead_l),
        Agent::new(walk.follower_params, foll_l),
    ))
}

/// Re-scores both agents and swaps them when the follower's best cost is
/// strictly lower than the leader's. Returns whether a swap happened.
pub fn update_lead_foll(leader: &mut Agent, follower: &mut Agent, data: &Dataset) -> Result<bool> {
    if leader.solutions.is_empty() || follower.solutions.is_empty() {
        return Err(Error::config("agents need at least one solution"));
    }
    leader.solutions = arch_search::update_and_sort(&leader.archs(), &leader.params, data)?;
    follower.solutions = arch_search::update_and_sort(&follower.archs(), &follower.params, data)?;
    let swap = follower.best_cost() < leader.best_cost();
    if swap {
        std::mem::swap(leader, follower);
    }
    Ok(swap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::RunRng;
    use rand::SeedableRng;

    fn arch(d: &[usize]) -> Architecture {
        Architecture::new(d.to_vec()).unwrap()
    }

    fn sol(d: &[usize], cost: f64) -> ArchSolution {
        ArchSolution::new(arch(d), cost)
    }

    fn filled(max: &Architecture, v: f64) -> ParamSet {
        let mut p = init_zero_params(max);
        p.values_mut().for_each(|x| *x = v);
        p
    }

    fn toy_data(features: usize, m: usize, seed: u64) -> Dataset {
        let mut rng = RunRng::seed_from_u64(seed);
        let x: Vec<f64> = (0..features * m).map(|_| rng.random()).collect();
        let y: Vec<u8> = (0..m).map(|_| rng.random_range(0..=1)).collect();
        Dataset::new(Matrix::from_vec(features, m, x).unwrap(), y).unwrap()
    }

    #[test]
    fn unobstructed_full_paste() {
        let max = arch(&[4, 3, 1]);
        let mut target = init_zero_params(&max);
        let donor = filled(&max, 2.5);
        let mut mask = WriteMask::new(&target);
        let n = masked_paste(&mut target, &donor, &max, &mut mask).unwrap();
        assert_eq!(n, donor.len());
        assert_eq!(target, donor);
        assert_eq!(mask.count(), donor.len());

        let other = filled(&max, -1.0);
        assert_eq!(masked_paste(&mut target, &other, &max, &mut mask).unwrap(), 0);
        assert_eq!(target, donor);
    }

    #[test]
    fn second_paste_fills_only_new_cells() {
        let max = arch(&[50, 5, 5, 1]);
        let mut target = init_zero_params(&max);
        let a = filled(&max, 1.0);
        let b = filled(&max, 2.0);
        let mut mask = WriteMask::new(&target);
        masked_paste(&mut target, &a, &arch(&[50, 5, 3, 1]), &mut mask).unwrap();
        masked_paste(&mut target, &b, &arch(&[50, 2, 5, 1]), &mut mask).unwrap();
        let w2 = &target.weights[1];
        for r in 0..5 {
            for c in 0..5 {
                let expected = if r < 3 {
                    1.0
                } else if c < 2 {
                    2.0
                } else {
                    0.0
                };
                assert_eq!(w2.get(r, c), expected, "W2[{r}][{c}]");
            }
        }
    }

    #[test]
    fn paste_rejects_oversized_arch() {
        let max = arch(&[4, 2, 1]);
        let mut target = init_zero_params(&max);
        let donor = filled(&max, 1.0);
        let mut mask = WriteMask::new(&target);
        assert!(masked_paste(&mut target, &donor, &arch(&[4, 3, 1]), &mut mask).is_err());
    }

    #[test]
    fn merge_prefers_lower_cost_source() {
        let max = arch(&[6, 5, 3, 1]);
        let data = toy_data(6, 10, 1);
        let p1 = filled(&max, 0.01);
        let p2 = filled(&max, -0.02);
        let (merged, sols) = merge_two_offs(
            &p1,
            &p2,
            &[sol(&[6, 5, 3, 1], 0.655)],
            &[sol(&[6, 5, 3, 1], 0.545)],
            &data,
        )
        .unwrap();
        assert_eq!(sols.len(), 1);
        assert_eq!(merged, p2);
    }

    #[test]
    fn merge_of_identical_donors_keeps_costs() {
        let max = arch(&[6, 4, 3, 1]);
        let data = toy_data(6, 12, 2);
        let mut rng = RunRng::seed_from_u64(3);
        let mut p = init_zero_params(&max);
        p.values_mut().for_each(|v| *v = rng.random_range(-0.5..0.5));
        let archs = [arch(&[6, 4, 3, 1]), arch(&[6, 2, 2, 1]), arch(&[6, 1, 3, 1])];
        let l = arch_search::update_and_sort(&archs, &p, &data).unwrap();
        let (merged, sols) = merge_two_offs(&p, &p, &l, &l, &data).unwrap();
        // Every selected region is covered, and [6,4,3,1] is the full shape.
        assert_eq!(merged, p);
        let mut expected = l.clone();
        expected.sort_by(|a, b| a.arch.cmp(&b.arch));
        let mut got = sols.clone();
        got.sort_by(|a, b| a.arch.cmp(&b.arch));
        assert_eq!(got, expected);
    }

    #[test]
    fn merge_size_mismatch_is_an_error() {
        let max = arch(&[6, 4, 1]);
        let data = toy_data(6, 4, 0);
        let p = init_zero_params(&max);
        assert!(merge_two_offs(&p, &p, &[sol(&[6, 4, 1], 0.1)], &[], &data).is_err());
    }

    #[test]
    fn plan_alternates_and_falls_through() {
        let a = arch(&[50, 5, 3, 1]);
        let b = arch(&[50, 2, 5, 1]);
        let plan = plan_assignments([&a, &a, &a, &b, &b]);
        assert_eq!(
            plan,
            vec![
                Assignment::Leader,
                Assignment::Follower,
                Assignment::Skipped,
                Assignment::Follower,
                Assignment::Leader,
            ]
        );
    }

    #[test]
    fn anabolism_keeps_sizes_and_elite() {
        let max = arch(&[8, 4, 4, 1]);
        let data = toy_data(8, 20, 4);
        let mut rng = RunRng::seed_from_u64(5);
        let rand_params = |rng: &mut RunRng| {
            let mut p = init_zero_params(&max);
            p.values_mut().for_each(|v| *v = rng.random_range(-1.0..1.0));
            p
        };
        let lp = rand_params(&mut rng);
        let fp = rand_params(&mut rng);
        let op = rand_params(&mut rng);
        let la = [arch(&[8, 4, 4, 1]), arch(&[8, 2, 3, 1]), arch(&[8, 1, 1, 1])];
        let fa = [arch(&[8, 3, 3, 1]), arch(&[8, 2, 3, 1]), arch(&[8, 4, 1, 1])];
        let oa = [arch(&[8, 4, 4, 1]), arch(&[8, 1, 2, 1]), arch(&[8, 3, 4, 1])];
        let leader = Agent::new(lp.clone(), arch_search::update_and_sort(&la, &lp, &data).unwrap());
        let follower = Agent::new(fp.clone(), arch_search::update_and_sort(&fa, &fp, &data).unwrap());
        let off = Agent::new(op.clone(), arch_search::update_and_sort(&oa, &op, &data).unwrap());

        let all: Vec<ArchSolution> = leader
            .solutions
            .iter()
            .chain(&follower.solutions)
            .chain(&off.solutions)
            .cloned()
            .collect();
        let best = arch_search::sort_solutions(all).unwrap()[0].clone();

        let cfg = ArchSearchConfig::new(max.clone());
        let (l2, f2) = anabolism(&leader, &follower, &off, &cfg, &data, &mut rng).unwrap();
        for agent in [&l2, &f2] {
            assert_eq!(agent.solutions.len(), 3);
            let mut archs = agent.archs();
            archs.sort();
            archs.dedup();
            assert_eq!(archs.len(), 3);
            assert!(agent.params.same_shape(&lp));
            for s in &agent.solutions {
                let c = crate::model::evaluate(&agent.params, &s.arch, &data).unwrap();
                assert_eq!(c, s.cost);
            }
        }
        assert_eq!(l2.solutions[0].arch, best.arch);
        assert_eq!(l2.solutions[0].cost, best.cost);
    }

    #[test]
    fn anabolism_rejects_size_mismatch() {
        let max = arch(&[4, 2, 1]);
        let data = toy_data(4, 3, 0);
        let p = init_zero_params(&max);
        let a = Agent::new(p.clone(), vec![sol(&[4, 2, 1], 0.1)]);
        let b = Agent::new(p, vec![]);
        let cfg = ArchSearchConfig::new(max);
        let mut rng = RunRng::seed_from_u64(0);
        assert!(anabolism(&a, &a, &b, &cfg, &data, &mut rng).is_err());
    }

    fn separator_params() -> ParamSet {
        // [1, 3, 1]: units 1 and 2 separate the two examples, unit 0 is dead.
        let mut p = init_zero_params(&arch(&[1, 3, 1]));
        p.weights[0] = Matrix::from_rows(&[[0.0], [40.0], [-40.0]]).unwrap();
        p.biases[0] = vec![0.0, -20.0, 20.0];
        p.weights[1] = Matrix::from_rows(&[[0.0, 2.0, -2.0]]).unwrap();
        p
    }

    #[test]
    fn follower_with_separator_takes_the_lead() {
        let data = Dataset::new(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![1, 0]).unwrap();
        let ln2 = std::f64::consts::LN_2;
        let mut leader = Agent::new(
            init_zero_params(&arch(&[1, 3, 1])),
            vec![sol(&[1, 3, 1], ln2), sol(&[1, 1, 1], ln2)],
        );
        let mut follower = Agent::new(
            separator_params(),
            vec![sol(&[1, 3, 1], ln2), sol(&[1, 1, 1], ln2)],
        );
        let swapped = update_lead_foll(&mut leader, &mut follower, &data).unwrap();
        assert!(swapped);
        assert!(leader.best_cost() < 1e-12);
        assert_eq!(leader.params, separator_params());
        assert!((follower.best_cost() - ln2).abs() < 1e-12);
    }

    #[test]
    fn ties_keep_roles() {
        let data = Dataset::new(Matrix::from_rows(&[[1.0, 0.0]]).unwrap(), vec![1, 0]).unwrap();
        let p = separator_params();
        let mut leader = Agent::new(p.clone(), vec![sol(&[1, 3, 1], 0.0)]);
        let mut follower = Agent::new(p, vec![sol(&[1, 3, 1], 0.0)]);
        assert!(!update_lead_foll(&mut leader, &mut follower, &data).unwrap());
    }
}
