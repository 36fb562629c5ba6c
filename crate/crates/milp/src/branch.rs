//! Branch-and-bound over binary variables.
//!
//! Maximization. Open nodes are kept in a best-bound priority queue; after a
//! node is expanded the search dives depth-first into the child whose fixed
//! value is nearest the fractional LP value, which tends to find incumbents
//! early while the queue preserves the global bound. Every choice (queue
//! order, branching variable, dive direction, incumbent ties) is a fixed
//! deterministic rule, so repeated runs produce the same tree and the same
//! reported solution.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use crate::simplex::{solve_lp_with_bounds, LpStatus, SimplexOptions};
use crate::{Error, Problem};

/// A binary value within this distance of an integer counts as integral.
const INT_TOL: f64 = 1e-6;
/// Objective difference below this is an incumbent tie, resolved by picking
/// the lexicographically smallest binary assignment.
const TIE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct MilpOptions {
    pub simplex: SimplexOptions,
    /// A node is pruned when its bound is within this of the incumbent.
    pub gap_tol: f64,
    /// Maximum number of LP solves before giving up.
    pub node_limit: u64,
    pub time_limit: Duration,
}

impl Default for MilpOptions {
    fn default() -> Self {
        MilpOptions {
            simplex: SimplexOptions::default(),
            gap_tol: 1e-6,
            node_limit: 10_000_000,
            time_limit: Duration::from_secs(1800),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MilpStatus {
    /// Incumbent proven optimal (within the gap tolerance).
    Optimal,
    Infeasible,
    /// Node limit hit; `objective`/`values` hold the best incumbent so far.
    NodeLimit,
    /// Time limit hit; `objective`/`values` hold the best incumbent so far.
    TimeLimit,
}

#[derive(Debug, Clone)]
pub struct MilpSolution {
    pub status: MilpStatus,
    /// Incumbent objective (NaN when none was found).
    pub objective: f64,
    /// Incumbent variable values; binaries are snapped to exact 0/1.
    pub values: Vec<f64>,
    /// Best proof bound on the optimum at exit. Equals `objective` when the
    /// status is `Optimal`.
    pub best_bound: f64,
    /// Number of LP relaxations solved.
    pub nodes: u64,
    /// Total simplex iterations summed over all LP solves.
    pub lp_iterations: u64,
    pub wall_time: Duration,
}

/// Chain of variable fixings from the root to a node. Nodes share prefixes,
/// so storing a parent link costs O(depth) rather than O(variables).
#[derive(Debug)]
enum FixLink {
    Root,
    Fix {
        var: u32,
        value: f64,
        parent: Arc<FixLink>,
    },
}

struct OpenNode {
    bound: f64,
    seq: u64,
    fixings: Arc<FixLink>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    fn cmp(&self, other: &Self) -> Ordering {
        // Max-heap: larger bound first, then earlier creation order.
        self.bound
            .total_cmp(&other.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    objective: f64,
    values: Vec<f64>,
}

pub fn solve_milp(problem: &Problem, options: &MilpOptions) -> Result<MilpSolution, Error> {
    problem.validate()?;
    let binaries: Vec<usize> = problem.binary_indices().collect();
    let base_lower: Vec<f64> = problem.variables.iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = problem.variables.iter().map(|v| v.upper).collect();

    let start = Instant::now();
    let mut heap = BinaryHeap::new();
    heap.push(OpenNode {
        bound: f64::INFINITY,
        seq: 0,
        fixings: Arc::new(FixLink::Root),
    });
    let mut next_seq: u64 = 1;
    let mut nodes: u64 = 0;
    let mut lp_iterations: u64 = 0;
    let mut incumbent: Option<Incumbent> = None;

    let prune_threshold = |inc: &Option<Incumbent>| -> f64 {
        inc.as_ref()
            .map_or(f64::NEG_INFINITY, |i| i.objective + options.gap_tol)
    };

    // Some(status) when a limit interrupts the search; carries the bound of
    // the interrupted dive so the proof bound stays honest.
    let mut interrupted: Option<(MilpStatus, f64)> = None;

    'search: while let Some(node) = heap.pop() {
        if node.bound <= prune_threshold(&incumbent) {
            continue;
        }
        let mut fixings = node.fixings;
        let mut dive_bound = node.bound;
        // Depth-first dive from this node.
        loop {
            if nodes >= options.node_limit {
                interrupted = Some((MilpStatus::NodeLimit, dive_bound));
                break 'search;
            }
            if start.elapsed() >= options.time_limit {
                interrupted = Some((MilpStatus::TimeLimit, dive_bound));
                break 'search;
            }

            let mut lower = base_lower.clone();
            let mut upper = base_upper.clone();
            let mut link = fixings.as_ref();
            while let FixLink::Fix { var, value, parent } = link {
                lower[*var as usize] = *value;
                upper[*var as usize] = *value;
                link = parent.as_ref();
            }

            nodes += 1;
            if nodes % 1000 == 0 {
                let inc = incumbent
                    .as_ref()
                    .map_or(f64::NEG_INFINITY, |i| i.objective);
                let bound = heap
                    .peek()
                    .map_or(dive_bound, |top| dive_bound.max(top.bound));
                log::debug!(
                    "nodes {} best bound {:.6} incumbent {:.6} gap {:.3e}",
                    nodes,
                    bound,
                    inc,
                    bound - inc
                );
            }
            let lp = solve_lp_with_bounds(problem, &lower, &upper, &options.simplex)?;
            lp_iterations += lp.iterations;
            match lp.status {
                LpStatus::Infeasible => continue 'search,
                LpStatus::Unbounded => return Err(Error::UnboundedRelaxation),
                LpStatus::Optimal => {}
            }
            if lp.objective <= prune_threshold(&incumbent) {
                continue 'search;
            }
            dive_bound = lp.objective;

            match pick_branch_variable(&lp.values, &binaries) {
                None => {
                    offer_incumbent(&mut incumbent, lp.objective, lp.values, &binaries);
                    continue 'search;
                }
                Some(j) => {
                    let near = lp.values[j].round();
                    let far = 1.0 - near;
                    heap.push(OpenNode {
                        bound: lp.objective,
                        seq: next_seq,
                        fixings: Arc::new(FixLink::Fix {
                            var: j as u32,
                            value: far,
                            parent: Arc::clone(&fixings),
                        }),
                    });
                    next_seq += 1;
                    fixings = Arc::new(FixLink::Fix {
                        var: j as u32,
                        value: near,
                        parent: fixings,
                    });
                }
            }
        }
    }

    let (status, best_bound) = match interrupted {
        Some((status, dive_bound)) => {
            // Optimum is bounded by the best open bound anywhere.
            let mut bound = dive_bound;
            for open in heap.iter() {
                bound = bound.max(open.bound);
            }
            if let Some(inc) = &incumbent {
                bound = bound.max(inc.objective);
            }
            (status, bound)
        }
        None => match &incumbent {
            Some(inc) => (MilpStatus::Optimal, inc.objective),
            None => (MilpStatus::Infeasible, f64::NAN),
        },
    };
    let (objective, values) = match incumbent {
        Some(inc) => (inc.objective, inc.values),
        None => (f64::NAN, Vec::new()),
    };
    Ok(MilpSolution {
        status,
        objective,
        values,
        best_bound,
        nodes,
        lp_iterations,
        wall_time: start.elapsed(),
    })
}

/// Most fractional binary (value nearest 0.5), lowest index on ties; `None`
/// when every binary is integral.
fn pick_branch_variable(values: &[f64], binaries: &[usize]) -> Option<usize> {
    let mut best: Option<(f64, usize)> = None;
    for &j in binaries {
        let dist = (values[j] - values[j].round()).abs();
        if dist > INT_TOL && best.map_or(true, |(b, _)| dist > b) {
            best = Some((dist, j));
        }
    }
    best.map(|(_, j)| j)
}

fn offer_incumbent(
    incumbent: &mut Option<Incumbent>,
    objective: f64,
    mut values: Vec<f64>,
    binaries: &[usize],
) {
    for &j in binaries {
        values[j] = values[j].round();
    }
    let accept = match incumbent {
        None => true,
        Some(inc) => {
            if objective > inc.objective + TIE_TOL {
                true
            } else if objective < inc.objective - TIE_TOL {
                false
            } else {
                lex_smaller(&values, &inc.values, binaries)
            }
        }
    };
    if accept {
        *incumbent = Some(Incumbent { objective, values });
    }
}

/// True when `a`'s binary assignment precedes `b`'s lexicographically (by
/// ascending variable index).
fn lex_smaller(a: &[f64], b: &[f64], binaries: &[usize]) -> bool {
    for &j in binaries {
        if a[j] < b[j] - 0.5 {
            return true;
        }
        if a[j] > b[j] + 0.5 {
            return false;
        }
    }
    false
}
