//! Iterated elimination of dominated sequences.
//!
//! A length-κ sequence p of agent i is dominated when some probability
//! mixture θ over its *co-sequences* (same history, different last action)
//! does at least as well against every joint completion by the other
//! agents: ν(q) ≤ Σ_{p'} θ(p')·ν(q') for all surviving q with q_i = p.
//! Dominated sequences never need to appear in an optimal policy, so the
//! pruned integer program can drop their variables.
//!
//! The θ test is a tiny LP in game form. Rather than one row per completion
//! (of which there may be hundreds), we solve the equivalent minimax dual:
//! minimize over distributions λ on completions the best co-sequence payoff
//! Σ_c λ_c·(ν(q'_c) − ν(q_c)). Its value z is the worst-case advantage of
//! the best mixture; p is dominated exactly when z ≥ 0 (up to a small
//! margin). This keeps the simplex basis at (number of co-sequences + 1)
//! rows regardless of how many completions there are.
//!
//! Elimination sweeps agents round-robin, re-testing against survivors only,
//! until nothing moves. Within one sweep all tests see the same survivor
//! set and run independently (and concurrently); removals apply between
//! sweeps, so results do not depend on scheduling. Exact ties count as
//! dominated, which could erase a whole sibling group (sequences differing
//! only in the last action); that is harmless when the group's history has
//! zero probability under every surviving completion — its payoffs are
//! identically 0, extraction fills the branch with the first action, and
//! nothing changes — so such groups are removed whole. A group that still
//! carries probability against some survivor keeps its canonical-first
//! member, since a policy must put real weight on one of the ties.
//! Shorter sequences are marked afterwards by the descendant rule: a
//! sequence is dominated iff all its one-step extensions are.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use milp::{Problem, RowSense, SimplexOptions, VarKind};

use crate::sequences::SequenceSpace;
use crate::valuation::JointSequenceTable;
use crate::Error;

#[derive(Debug, Clone, Copy)]
pub struct DominanceConfig {
    /// Stop after one sweep over every agent instead of iterating to a
    /// fixpoint (for comparisons; the pruned program stays sound).
    pub single_pass: bool,
    /// Test against all joint completions instead of only surviving ones.
    /// More conservative (removes less); also sound.
    pub contexts_over_all: bool,
    /// Slack on the domination inequalities so numerical noise cannot
    /// eliminate a sequence.
    pub margin: f64,
}

impl Default for DominanceConfig {
    fn default() -> Self {
        DominanceConfig {
            single_pass: false,
            contexts_over_all: false,
            margin: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DominanceResult {
    /// Per agent: dominated flag for every sequence (all lengths, global
    /// indices).
    pub dominated: Vec<Vec<bool>>,
    /// Per elimination round, per agent: global indices of the length-κ
    /// sequences removed in that round.
    pub rounds: Vec<Vec<Vec<usize>>>,
}

impl DominanceResult {
    pub fn is_dominated(&self, agent: usize, seq: usize) -> bool {
        self.dominated[agent][seq]
    }

    pub fn dominated_count(&self, agent: usize) -> usize {
        self.dominated[agent].iter().filter(|&&d| d).count()
    }

    /// Fraction of the agent's length-κ sequences that were eliminated.
    pub fn terminal_fraction(&self, agent: usize, space: &SequenceSpace) -> f64 {
        let slice = space.slice(space.horizon);
        let total = slice.len();
        let removed = slice.filter(|&j| self.dominated[agent][j]).count();
        removed as f64 / total as f64
    }
}

/// All sequences identical to `p` except for the final action (excluding
/// `p` itself).
pub fn co_sequences(space: &SequenceSpace, p: usize) -> Vec<usize> {
    let (t, w) = space.split(p);
    let base = (w / space.num_actions) * space.num_actions;
    (0..space.num_actions)
        .map(|a| space.join(t, base + a))
        .filter(|&j| j != p)
        .collect()
}

/// Flat-index offsets of every joint completion by the other agents:
/// Σ_{j≠i} w_j·stride_j for each combination of marked sequences.
fn completion_offsets(
    table: &JointSequenceTable,
    agent: usize,
    surviving: &[Vec<bool>],
    include_all: bool,
) -> Vec<usize> {
    let mut out = vec![0usize];
    for j in 0..surviving.len() {
        if j == agent {
            continue;
        }
        let stride = table.strides[j];
        let mut next = Vec::new();
        for &base in &out {
            for (w, &alive) in surviving[j].iter().enumerate() {
                if include_all || alive {
                    next.push(base + w * stride);
                }
            }
        }
        out = next;
    }
    out
}

/// Domination test for one candidate, as the minimax LP described in the
/// module docs. `p_within`/`co_within` are within-length indices of the
/// candidate and its co-sequences; `completions` come from
/// [`completion_offsets`].
fn dominated_against(
    table: &JointSequenceTable,
    agent: usize,
    p_within: usize,
    co_within: &[usize],
    completions: &[usize],
    margin: f64,
) -> Result<bool, Error> {
    if co_within.is_empty() {
        return Ok(false);
    }
    if completions.is_empty() {
        // Vacuous: nothing constrains the mixture.
        return Ok(true);
    }
    let stride = table.strides[agent];
    let mut problem = Problem::new("dominance");
    let u = problem.add_variable("u", f64::NEG_INFINITY, f64::INFINITY, VarKind::Continuous, -1.0);
    let lambdas: Vec<usize> = (0..completions.len())
        .map(|c| problem.add_variable(format!("l{c}"), 0.0, f64::INFINITY, VarKind::Continuous, 0.0))
        .collect();
    for (r, &alt) in co_within.iter().enumerate() {
        let mut coeffs = Vec::with_capacity(completions.len() + 1);
        for (c, &base) in completions.iter().enumerate() {
            let gain = table.nu[base + alt * stride] - table.nu[base + p_within * stride];
            if gain != 0.0 {
                coeffs.push((lambdas[c], gain));
            }
        }
        coeffs.push((u, -1.0));
        problem.add_row(format!("adv{r}"), coeffs, RowSense::Le, 0.0);
    }
    problem.add_row(
        "mass",
        lambdas.iter().map(|&l| (l, 1.0)).collect(),
        RowSense::Eq,
        1.0,
    );
    let sol = milp::solve_lp(&problem, &SimplexOptions::default())?;
    if sol.status != milp::LpStatus::Optimal {
        return Err(Error::Solver(milp::Error::Numerical(format!(
            "domination game LP ended {:?}, expected an optimum",
            sol.status
        ))));
    }
    // Objective is −z where z is the mixture's worst-case advantage.
    Ok(-sol.objective >= -margin)
}

/// Public single-sequence test: is the length-κ sequence `p` (global index)
/// of `space.agent` dominated given the marked survivors of every agent?
pub fn is_dominated(
    space: &SequenceSpace,
    table: &JointSequenceTable,
    p: usize,
    surviving: &[Vec<bool>],
    config: &DominanceConfig,
) -> Result<bool, Error> {
    let agent = space.agent;
    let (t, w) = space.split(p);
    debug_assert_eq!(t, space.horizon);
    let completions = completion_offsets(table, agent, surviving, config.contexts_over_all);
    let co: Vec<usize> = co_sequences(space, p)
        .into_iter()
        .map(|j| space.split(j).1)
        .collect();
    dominated_against(table, agent, w, &co, &completions, config.margin)
}

/// Runs iterated elimination over all agents and marks shorter sequences by
/// the descendant rule. Tests within one sweep run concurrently when the
/// `parallel` feature is enabled; the result is identical to
/// [`eliminate_seq`].
pub fn eliminate(
    spaces: &[SequenceSpace],
    table: &JointSequenceTable,
    config: &DominanceConfig,
) -> Result<DominanceResult, Error> {
    run(spaces, table, config, true)
}

/// Single-threaded [`eliminate`], for comparisons.
pub fn eliminate_seq(
    spaces: &[SequenceSpace],
    table: &JointSequenceTable,
    config: &DominanceConfig,
) -> Result<DominanceResult, Error> {
    run(spaces, table, config, false)
}

fn run(
    spaces: &[SequenceSpace],
    table: &JointSequenceTable,
    config: &DominanceConfig,
    parallel: bool,
) -> Result<DominanceResult, Error> {
    let n = spaces.len();
    let horizon = table.horizon;

    let mut surviving: Vec<Vec<bool>> = spaces
        .iter()
        .map(|sp| vec![true; sp.slice_len(horizon)])
        .collect();
    let mut rounds: Vec<Vec<Vec<usize>>> = Vec::new();

    // Sibling groups still reachable *within the surviving game*: group w/A
    // of every component of a joint sequence with positive probability and
    // all components alive. ρ never depends on any last action, so
    // reachability is constant across a group. Recomputed as survivors
    // shrink; a group this never marks has ν ≡ 0 against every survivor.
    let reachable_now = |surviving: &[Vec<bool>]| -> Vec<Vec<bool>> {
        let mut reachable: Vec<Vec<bool>> = spaces
            .iter()
            .map(|sp| vec![false; sp.slice_len(horizon) / sp.num_actions])
            .collect();
        for flat in 0..table.len() {
            if table.rho[flat] == 0.0 {
                continue;
            }
            let withins = table.split_index(flat);
            if withins
                .iter()
                .enumerate()
                .all(|(i, &w)| surviving[i][w])
            {
                for (i, &w) in withins.iter().enumerate() {
                    reachable[i][w / spaces[i].num_actions] = true;
                }
            }
        }
        reachable
    };

    loop {
        let mut removed_this_round: Vec<Vec<usize>> = vec![Vec::new(); n];
        for agent in 0..n {
            let space = &spaces[agent];
            let a_count = space.num_actions;
            let completions =
                completion_offsets(table, agent, &surviving, config.contexts_over_all);
            let candidates: Vec<usize> = (0..surviving[agent].len())
                .filter(|&w| surviving[agent][w])
                .collect();

            let test = |&w: &usize| -> Result<bool, Error> {
                let co: Vec<usize> = {
                    let base = (w / a_count) * a_count;
                    (base..base + a_count).filter(|&s| s != w).collect()
                };
                dominated_against(table, agent, w, &co, &completions, config.margin)
            };
            let flags: Vec<bool> = {
                #[cfg(feature = "parallel")]
                {
                    if parallel {
                        candidates
                            .par_iter()
                            .map(test)
                            .collect::<Result<Vec<_>, Error>>()?
                    } else {
                        candidates
                            .iter()
                            .map(test)
                            .collect::<Result<Vec<_>, Error>>()?
                    }
                }
                #[cfg(not(feature = "parallel"))]
                {
                    let _ = parallel;
                    candidates
                        .iter()
                        .map(test)
                        .collect::<Result<Vec<_>, Error>>()?
                }
            };

            let mut flagged = vec![false; surviving[agent].len()];
            for (&w, &f) in candidates.iter().zip(&flags) {
                flagged[w] = f;
            }
            // Keep-one guard for groups still reachable among survivors
            // (see module docs).
            let reachable = reachable_now(&surviving);
            for group in 0..reachable[agent].len() {
                if !reachable[agent][group] {
                    continue;
                }
                let members = group * a_count..(group + 1) * a_count;
                let all_going = members
                    .clone()
                    .all(|w| !surviving[agent][w] || flagged[w]);
                if all_going {
                    if let Some(keep) = members.clone().find(|&w| surviving[agent][w]) {
                        flagged[keep] = false;
                    }
                }
            }
            let offset = space.slice(horizon).start;
            for w in 0..flagged.len() {
                if flagged[w] && surviving[agent][w] {
                    surviving[agent][w] = false;
                    removed_this_round[agent].push(offset + w);
                }
            }
        }
        let moved = removed_this_round.iter().any(|r| !r.is_empty());
        rounds.push(removed_this_round);
        if config.single_pass || !moved {
            break;
        }
    }

    // Descendant rule for lengths κ−1 down to 1: dominated iff every
    // one-step extension is dominated.
    let mut dominated: Vec<Vec<bool>> = spaces
        .iter()
        .map(|sp| vec![false; sp.len()])
        .collect();
    for agent in 0..n {
        let space = &spaces[agent];
        let offset = space.slice(horizon).start;
        for (w, &alive) in surviving[agent].iter().enumerate() {
            dominated[agent][offset + w] = !alive;
        }
        for t in (1..horizon).rev() {
            for p in space.slice(t) {
                let all_dead = (0..space.num_observations).all(|o| {
                    (0..space.num_actions).all(|a| dominated[agent][space.child(p, o, a)])
                });
                dominated[agent][p] = all_dead;
            }
        }
    }

    Ok(DominanceResult { dominated, rounds })
}
