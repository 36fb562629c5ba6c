//! Per-agent sequence spaces and the two interchangeable policy forms.
//!
//! A *sequence* of length t is one agent's private history ending in an
//! action: t actions interleaved with t−1 observations. A policy tree of
//! depth κ realizes one sequence per node, and is equivalently encoded as a
//! 0/1 vector over the whole sequence space that satisfies a small linear
//! system (one row fixing the root action mass, one flow row per
//! (sequence, observation) pair). The MILP works entirely on the vector
//! form; trees are for humans and for the recursive evaluator.
//!
//! Canonical order everywhere: sequences sorted by length, then by their
//! mixed-radix digit string (a₁, o₁, a₂, …, a_t) with a₁ most significant.
//! Equivalently: the length-(t+1) extension of sequence `w` by observation
//! `o` and action `a` has within-length index `(w·Ω + o)·A + a`.

use crate::Error;

/// Default cap on the total number of sequences per agent.
pub const SEQUENCE_LIMIT: u128 = 10_000_000;

#[derive(Debug, Clone)]
pub struct SequenceSpace {
    pub agent: usize,
    pub horizon: usize,
    pub num_actions: usize,
    pub num_observations: usize,
    /// `offsets[t-1]` is the global index of the first length-t sequence;
    /// `offsets[horizon]` is the total count.
    offsets: Vec<usize>,
}

/// Decoded digits of one sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sequence {
    pub actions: Vec<usize>,
    pub observations: Vec<usize>,
}

impl SequenceSpace {
    /// Enumerates all sequences of agent `agent` up to length `horizon`.
    pub fn new(
        agent: usize,
        num_actions: usize,
        num_observations: usize,
        horizon: usize,
    ) -> Result<Self, Error> {
        if horizon == 0 {
            return Err(Error::ZeroHorizon);
        }
        let a = num_actions as u128;
        let o = num_observations as u128;
        let mut offsets = vec![0usize; horizon + 1];
        let mut total: u128 = 0;
        let mut size: u128 = a; // |S^1| = A
        for t in 1..=horizon {
            offsets[t - 1] = total as usize;
            total += size;
            if total > SEQUENCE_LIMIT {
                return Err(Error::Capacity {
                    what: format!("sequence space for agent {agent}"),
                    size: total,
                    limit: SEQUENCE_LIMIT,
                });
            }
            size *= a * o; // |S^{t+1}| = |S^t|·A·Ω
            let _ = t;
        }
        offsets[horizon] = total as usize;
        Ok(SequenceSpace {
            agent,
            horizon,
            num_actions,
            num_observations,
            offsets,
        })
    }

    /// Builds the spaces of every agent of a model.
    pub fn for_model(m: &crate::DecPomdp, horizon: usize) -> Result<Vec<Self>, Error> {
        (0..m.num_agents)
            .map(|i| Self::new(i, m.actions[i], m.observations[i], horizon))
            .collect()
    }

    /// Total number of sequences over all lengths.
    pub fn len(&self) -> usize {
        self.offsets[self.horizon]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Global index range of the length-`t` slice.
    pub fn slice(&self, t: usize) -> std::ops::Range<usize> {
        self.offsets[t - 1]..self.offsets[t]
    }

    pub fn slice_len(&self, t: usize) -> usize {
        self.offsets[t] - self.offsets[t - 1]
    }

    /// Number of length-κ sequences one deterministic policy realizes.
    pub fn terminal_per_policy(&self) -> usize {
        self.num_observations.pow(self.horizon as u32 - 1)
    }

    /// (length, within-slice index) of a global index.
    pub fn split(&self, index: usize) -> (usize, usize) {
        debug_assert!(index < self.len());
        let t = self.offsets.partition_point(|&off| off <= index);
        (t, index - self.offsets[t - 1])
    }

    pub fn length_of(&self, index: usize) -> usize {
        self.split(index).0
    }

    /// Global index from (length, within-slice index).
    pub fn join(&self, t: usize, within: usize) -> usize {
        debug_assert!(within < self.slice_len(t));
        self.offsets[t - 1] + within
    }

    /// Extension of `parent` by observation `o`, then action `a`.
    pub fn child(&self, parent: usize, o: usize, a: usize) -> usize {
        let (t, w) = self.split(parent);
        self.join(t + 1, (w * self.num_observations + o) * self.num_actions + a)
    }

    /// Parent sequence and the observation leading away from it; `None` for
    /// length-1 sequences.
    pub fn parent(&self, index: usize) -> Option<(usize, usize)> {
        let (t, w) = self.split(index);
        if t == 1 {
            return None;
        }
        let o = (w / self.num_actions) % self.num_observations;
        let pw = w / (self.num_actions * self.num_observations);
        Some((self.join(t - 1, pw), o))
    }

    pub fn last_action(&self, index: usize) -> usize {
        self.split(index).1 % self.num_actions
    }

    pub fn digits(&self, index: usize) -> Sequence {
        let (t, mut w) = self.split(index);
        let mut actions = vec![0; t];
        let mut observations = vec![0; t - 1];
        for j in (0..t).rev() {
            actions[j] = w % self.num_actions;
            w /= self.num_actions;
            if j > 0 {
                observations[j - 1] = w % self.num_observations;
                w /= self.num_observations;
            }
        }
        Sequence {
            actions,
            observations,
        }
    }

    /// Global index of the sequence with the given digits.
    pub fn index_of(&self, seq: &Sequence) -> Result<usize, Error> {
        let t = seq.actions.len();
        if t == 0 || t > self.horizon || seq.observations.len() != t - 1 {
            return Err(Error::Policy(format!(
                "sequence with {} actions and {} observations is not a length-1..={} sequence",
                seq.actions.len(),
                seq.observations.len(),
                self.horizon
            )));
        }
        let mut w = 0usize;
        for j in 0..t {
            if seq.actions[j] >= self.num_actions {
                return Err(Error::Policy(format!(
                    "action {} out of range for agent {}",
                    seq.actions[j], self.agent
                )));
            }
            if j > 0 {
                if seq.observations[j - 1] >= self.num_observations {
                    return Err(Error::Policy(format!(
                        "observation {} out of range for agent {}",
                        seq.observations[j - 1], self.agent
                    )));
                }
                w = w * self.num_observations + seq.observations[j - 1];
            }
            w = w * self.num_actions + seq.actions[j];
        }
        Ok(self.join(t, w))
    }

    /// Text form "a0 o1 a2": actions and observations interleaved.
    pub fn render(&self, index: usize) -> String {
        let seq = self.digits(index);
        let mut parts = vec![format!("a{}", seq.actions[0])];
        for j in 1..seq.actions.len() {
            parts.push(format!("o{}", seq.observations[j - 1]));
            parts.push(format!("a{}", seq.actions[j]));
        }
        parts.join(" ")
    }
}

/// Parses the "a0 o1 a2" text form back into digits.
pub fn parse_sequence(text: &str) -> Result<Sequence, Error> {
    let mut actions = Vec::new();
    let mut observations = Vec::new();
    for (i, tok) in text.split_whitespace().enumerate() {
        let expect_action = i % 2 == 0;
        let prefix = if expect_action { 'a' } else { 'o' };
        let digits = tok.strip_prefix(prefix).ok_or_else(|| {
            Error::Policy(format!(
                "token `{tok}` breaks the a/o alternation in `{text}`"
            ))
        })?;
        let value: usize = digits
            .parse()
            .map_err(|_| Error::Policy(format!("cannot parse sequence token `{tok}`")))?;
        if expect_action {
            actions.push(value);
        } else {
            observations.push(value);
        }
    }
    if actions.len() != observations.len() + 1 {
        return Err(Error::Policy(format!(
            "sequence `{text}` must end with an action"
        )));
    }
    Ok(Sequence {
        actions,
        observations,
    })
}

/// The linear system `C·x = b` whose 0/1 solutions are exactly the
/// realization vectors of depth-κ policy trees.
#[derive(Debug, Clone)]
pub struct PolicyConstraintSystem {
    pub rows: Vec<ConstraintRow>,
}

#[derive(Debug, Clone)]
pub struct ConstraintRow {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
    /// `(sequence, observation)` identifying the flow row
    /// `x[p] − Σ_a x[p·o·a] = 0`; `None` for the root-mass row.
    pub context: Option<(usize, usize)>,
}

/// Builds the policy constraints of one agent: one root row `Σ_a x[a] = 1`
/// plus a flow row for every (sequence shorter than κ, observation) pair.
pub fn policy_constraints(space: &SequenceSpace) -> PolicyConstraintSystem {
    let mut rows = Vec::new();
    rows.push(ConstraintRow {
        coeffs: space.slice(1).map(|j| (j, 1.0)).collect(),
        rhs: 1.0,
        context: None,
    });
    for t in 1..space.horizon {
        for p in space.slice(t) {
            for o in 0..space.num_observations {
                let mut coeffs = vec![(p, 1.0)];
                for a in 0..space.num_actions {
                    coeffs.push((space.child(p, o, a), -1.0));
                }
                rows.push(ConstraintRow {
                    coeffs,
                    rhs: 0.0,
                    context: Some((p, o)),
                });
            }
        }
    }
    PolicyConstraintSystem { rows }
}

/// A policy as a vector over one agent's sequence space. Deterministic
/// policies are 0/1; fractional values appear only inside LP relaxations.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyVector {
    pub agent: usize,
    pub values: Vec<f64>,
}

impl PolicyVector {
    /// Index of the first row of `cons` this vector violates, if any.
    pub fn check_feasible(&self, cons: &PolicyConstraintSystem) -> Result<(), usize> {
        for (i, row) in cons.rows.iter().enumerate() {
            let lhs: f64 = row.coeffs.iter().map(|&(j, c)| c * self.values[j]).sum();
            if (lhs - row.rhs).abs() > 1e-9 {
                return Err(i);
            }
        }
        Ok(())
    }

    pub fn is_binary(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// Within-slice indices of the selected length-κ sequences, in canonical
    /// order.
    pub fn selected_terminal(&self, space: &SequenceSpace) -> Vec<usize> {
        let off = space.slice(space.horizon).start;
        space
            .slice(space.horizon)
            .filter(|&j| self.values[j] == 1.0)
            .map(|j| j - off)
            .collect()
    }

    /// Global indices of all selected sequences, in canonical order.
    pub fn selected(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&j| self.values[j] == 1.0)
            .collect()
    }
}

/// A depth-κ policy tree stored as a flat array of node actions.
///
/// Level t (1-based) holds Ω^(t−1) nodes; the node reached from node `j` of
/// level t by observation `o` is node `j·Ω + o` of level t+1. Nodes are
/// stored level by level, within a level in observation-history order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolicyTree {
    pub horizon: usize,
    pub num_observations: usize,
    pub actions: Vec<usize>,
}

/// Nodes of a depth-`horizon` tree with branching `omega`.
pub fn tree_node_count(omega: usize, horizon: usize) -> usize {
    if omega == 1 {
        horizon
    } else {
        (omega.pow(horizon as u32) - 1) / (omega - 1)
    }
}

/// Number of deterministic depth-`horizon` policies of one agent; `None` on
/// overflow (which any enumeration limit treats as "too many").
pub fn num_deterministic_policies(
    num_actions: usize,
    num_observations: usize,
    horizon: usize,
) -> Option<u128> {
    let nodes = tree_node_count(num_observations, horizon);
    (num_actions as u128).checked_pow(u32::try_from(nodes).ok()?)
}

impl PolicyTree {
    pub fn node_count(&self) -> usize {
        tree_node_count(self.num_observations, self.horizon)
    }

    /// Offset of level `t` (1-based) in the flat action array.
    pub fn level_offset(&self, t: usize) -> usize {
        tree_node_count(self.num_observations, t - 1)
    }

    pub fn action_at(&self, t: usize, node: usize) -> usize {
        self.actions[self.level_offset(t) + node]
    }
}

/// Marks every sequence the tree realizes: the root-to-node history of each
/// of its nodes.
pub fn tree_to_vector(tree: &PolicyTree, space: &SequenceSpace) -> Result<PolicyVector, Error> {
    if tree.horizon != space.horizon || tree.num_observations != space.num_observations {
        return Err(Error::Policy(format!(
            "tree shape (depth {}, branching {}) does not match the sequence space (depth {}, branching {})",
            tree.horizon, tree.num_observations, space.horizon, space.num_observations
        )));
    }
    if tree.actions.len() != tree.node_count() {
        return Err(Error::Policy(format!(
            "tree has {} node actions, expected {}",
            tree.actions.len(),
            tree.node_count()
        )));
    }
    let mut values = vec![0.0; space.len()];
    // Walk levels in order; `within[node]` is the sequence index realized at
    // that node of the current level.
    let mut within: Vec<usize> = Vec::new();
    for t in 1..=tree.horizon {
        let level = tree.level_offset(t);
        let nodes = space.num_observations.pow(t as u32 - 1);
        let mut next = vec![0usize; nodes];
        for node in 0..nodes {
            let a = tree.actions[level + node];
            if a >= space.num_actions {
                return Err(Error::Policy(format!(
                    "action label {} out of range at level {t}",
                    a
                )));
            }
            let w = if t == 1 {
                a
            } else {
                let parent_w = within[node / space.num_observations];
                let o = node % space.num_observations;
                (parent_w * space.num_observations + o) * space.num_actions + a
            };
            next[node] = w;
            values[space.join(t, w)] = 1.0;
        }
        within = next;
    }
    Ok(PolicyVector {
        agent: space.agent,
        values,
    })
}

/// Rebuilds the unique tree whose realization vector is `x`.
pub fn vector_to_tree(x: &PolicyVector, space: &SequenceSpace) -> Result<PolicyTree, Error> {
    let pick = |candidates: &mut dyn Iterator<Item = (usize, usize)>,
                place: String|
     -> Result<(usize, usize), Error> {
        let mut found = None;
        for (a, j) in candidates {
            match x.values[j] {
                0.0 => continue,
                1.0 => {
                    if found.is_some() {
                        return Err(Error::Policy(format!(
                            "multiple continuations selected {place}"
                        )));
                    }
                    found = Some((a, j));
                }
                v => {
                    return Err(Error::Policy(format!(
                        "non-binary value {v} {place}"
                    )))
                }
            }
        }
        found.ok_or_else(|| Error::Policy(format!("no continuation selected {place}")))
    };

    let mut actions = Vec::with_capacity(tree_node_count(space.num_observations, space.horizon));
    let (root_a, root_j) = pick(
        &mut space.slice(1).map(|j| (j, j)),
        "at the root (row mass must be 1)".into(),
    )?;
    actions.push(root_a);
    // `frontier[node]` is the selected sequence at that node of the current
    // level.
    let mut frontier = vec![root_j];
    for _t in 2..=space.horizon {
        let mut next = Vec::with_capacity(frontier.len() * space.num_observations);
        for &p in &frontier {
            for o in 0..space.num_observations {
                let (a, j) = pick(
                    &mut (0..space.num_actions).map(|a| (a, space.child(p, o, a))),
                    format!("after `{}` observation {o}", space.render(p)),
                )?;
                actions.push(a);
                next.push(j);
            }
        }
        frontier = next;
    }
    Ok(PolicyTree {
        horizon: space.horizon,
        num_observations: space.num_observations,
        actions,
    })
}

/// Renders a tree as indented text, one node per line.
pub fn render_tree(tree: &PolicyTree) -> String {
    fn walk(tree: &PolicyTree, t: usize, node: usize, indent: usize, out: &mut String) {
        if t < tree.horizon {
            for o in 0..tree.num_observations {
                let child = node * tree.num_observations + o;
                out.push_str(&"  ".repeat(indent));
                out.push_str(&format!("o{o}: a{}\n", tree.action_at(t + 1, child)));
                walk(tree, t + 1, child, indent + 1, out);
            }
        }
    }
    let mut out = format!("a{}\n", tree.action_at(1, 0));
    walk(tree, 1, 0, 1, &mut out);
    out
}
