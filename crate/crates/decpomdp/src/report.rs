//! JSON run reports and the policy interchange format.
//!
//! A solve emits one [`RunReport`]. The `policy` block doubles as the input
//! format for re-evaluation: the `sequences` lists (every selected sequence
//! of each agent, rendered as alternating action/observation labels) fully
//! determine a deterministic policy, while `tree` is a human-readable
//! rendering carried along for inspection only. `evaluate` accepts either a
//! bare policy block or a whole report containing one.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundPair;
use crate::dominance::DominanceResult;
use crate::formulation::JointPolicy;
use crate::sequences::{parse_sequence, render_tree, PolicyVector, SequenceSpace};
use crate::Error;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: String,
    pub horizon: usize,
    pub variant: String,
    /// `optimal`, `node-limit`, `time-limit`, or `infeasible`.
    pub status: String,
    /// Value of the best policy found; absent when none was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub best_bound: f64,
    pub bounds: BoundsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policy: Option<PolicyReport>,
    pub stats: StatsReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dominance: Option<DominanceReport>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct BoundsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lower_source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_source: Option<String>,
}

impl From<&BoundPair> for BoundsReport {
    fn from(pair: &BoundPair) -> Self {
        BoundsReport {
            lower: pair.lower,
            lower_source: pair.lower_source.clone(),
            upper: pair.upper,
            upper_source: pair.upper_source.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    pub nodes: u64,
    pub lp_iterations: u64,
    pub wall_time_seconds: f64,
    pub variables: usize,
    pub rows: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DominanceReport {
    /// Length-κ sequences removed per elimination round, per agent.
    pub removed_per_round: Vec<Vec<usize>>,
    /// Dominated sequences per agent, all lengths.
    pub dominated_per_agent: Vec<usize>,
    /// Fraction of each agent's full-length sequences eliminated.
    pub terminal_fraction: Vec<f64>,
}

pub fn dominance_report(result: &DominanceResult, spaces: &[SequenceSpace]) -> DominanceReport {
    DominanceReport {
        removed_per_round: result
            .rounds
            .iter()
            .map(|round| round.iter().map(|r| r.len()).collect())
            .collect(),
        dominated_per_agent: (0..spaces.len())
            .map(|i| result.dominated_count(i))
            .collect(),
        terminal_fraction: spaces
            .iter()
            .enumerate()
            .map(|(i, sp)| result.terminal_fraction(i, sp))
            .collect(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyReport {
    pub agents: Vec<AgentPolicyReport>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentPolicyReport {
    pub agent: usize,
    /// Every selected sequence, canonical order, rendered as
    /// "a0 o1 a1 ...".
    pub sequences: Vec<String>,
    /// Indented tree rendering; informational only.
    #[serde(default)]
    pub tree: String,
}

pub fn policy_report(policy: &JointPolicy, spaces: &[SequenceSpace]) -> PolicyReport {
    PolicyReport {
        agents: policy
            .vectors
            .iter()
            .zip(spaces)
            .zip(&policy.trees)
            .map(|((vector, space), tree)| AgentPolicyReport {
                agent: space.agent,
                sequences: vector
                    .selected()
                    .into_iter()
                    .map(|j| space.render(j))
                    .collect(),
                tree: render_tree(tree),
            })
            .collect(),
    }
}

/// Accepts either a bare policy block (`{"agents": [...]}`) or a whole run
/// report that contains one.
pub fn parse_policy_document(text: &str) -> Result<PolicyReport, Error> {
    let value: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Policy(format!("policy document is not valid JSON: {e}")))?;
    let node = value.get("policy").unwrap_or(&value);
    serde_json::from_value(node.clone())
        .map_err(|e| Error::Policy(format!("policy block has the wrong shape: {e}")))
}

/// Rebuilds each agent's 0/1 sequence-weight vector from its rendered
/// sequence list.
pub fn policy_from_report(
    report: &PolicyReport,
    spaces: &[SequenceSpace],
) -> Result<Vec<PolicyVector>, Error> {
    if report.agents.len() != spaces.len() {
        return Err(Error::Policy(format!(
            "policy lists {} agents, instance has {}",
            report.agents.len(),
            spaces.len()
        )));
    }
    let mut vectors = Vec::with_capacity(spaces.len());
    for (entry, space) in report.agents.iter().zip(spaces) {
        if entry.agent != space.agent {
            return Err(Error::Policy(format!(
                "agent entries out of order: found {}, expected {}",
                entry.agent, space.agent
            )));
        }
        let mut values = vec![0.0; space.len()];
        for text in &entry.sequences {
            let seq = parse_sequence(text)?;
            let index = space.index_of(&seq)?;
            values[index] = 1.0;
        }
        vectors.push(PolicyVector {
            agent: space.agent,
            values,
        });
    }
    Ok(vectors)
}
