//! End-to-end drivers behind the command-line interface: assemble, bound,
//! solve, extract, report.

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use milp::{solve_milp, MilpOptions, MilpStatus};

use crate::bounds::{lower_bound, pomdp_upper_bound, BoundPair};
use crate::dominance::{eliminate, DominanceConfig};
use crate::formulation::{build, JointPolicy, Variant};
use crate::model::DecPomdp;
use crate::oracle::{brute_force_optimal, OracleResult};
use crate::report::{
    dominance_report, parse_policy_document, policy_from_report, policy_report, RunReport,
    BoundsReport, StatsReport,
};
use crate::sequences::{policy_constraints, vector_to_tree, SequenceSpace};
use crate::valuation::{build_table, dump_table, sequence_form_value, tree_value};
use crate::Error;

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub variant: Variant,
    pub horizon: usize,
    /// Inject a lower bound from a recursive horizon-(κ−1) solve.
    pub use_lower_bound: bool,
    /// Inject the pooled-observation relaxation value as an upper bound.
    pub use_upper_bound: bool,
    pub dominance: DominanceConfig,
    pub milp: MilpOptions,
    /// Write the assembled program in LP format before solving.
    pub emit_lp: Option<PathBuf>,
    /// Write the joint payoff table before solving.
    pub dump_table: Option<PathBuf>,
}

impl SolveOptions {
    pub fn new(variant: Variant, horizon: usize) -> Self {
        SolveOptions {
            variant,
            horizon,
            use_lower_bound: false,
            use_upper_bound: false,
            dominance: DominanceConfig::default(),
            milp: MilpOptions::default(),
            emit_lp: None,
            dump_table: None,
        }
    }
}

#[derive(Debug)]
pub struct SolveOutcome {
    pub status: MilpStatus,
    /// Best policy found; `None` when the search ended with no incumbent.
    pub policy: Option<JointPolicy>,
    pub report: RunReport,
}

/// The whole planning pipeline for one instance and horizon.
pub fn solve(model: &DecPomdp, instance: &str, options: &SolveOptions) -> Result<SolveOutcome, Error> {
    let spaces = SequenceSpace::for_model(model, options.horizon)?;
    let table = build_table(model, options.horizon)?;

    let dominance = if options.variant == Variant::MilpPr {
        Some(eliminate(&spaces, &table, &options.dominance)?)
    } else {
        None
    };

    let mut formulation = build(
        model,
        options.horizon,
        options.variant,
        &table,
        &spaces,
        dominance.as_ref(),
    )?;

    let mut pair = BoundPair::default();
    if options.use_lower_bound {
        let previous = if options.horizon == 1 {
            Some(0.0)
        } else {
            let mut sub = options.clone();
            sub.horizon = options.horizon - 1;
            sub.use_lower_bound = false;
            sub.use_upper_bound = false;
            sub.emit_lp = None;
            sub.dump_table = None;
            let outcome = solve(model, instance, &sub)?;
            // Only a proven optimum yields a valid bound.
            (outcome.status == MilpStatus::Optimal)
                .then(|| outcome.policy.as_ref().map(|p| p.value))
                .flatten()
        };
        if let Some(v) = previous {
            pair.lower = Some(lower_bound(v, model));
            pair.lower_source = Some(format!(
                "horizon-{} optimum plus one worst-case step",
                options.horizon - 1
            ));
        }
    }
    if options.use_upper_bound {
        pair.upper = Some(pomdp_upper_bound(model, options.horizon, &table)?);
        pair.upper_source = Some("pooled-observation relaxation".into());
    }
    pair.check()?;
    formulation.add_bounds(pair.lower, pair.upper)?;

    if let Some(path) = &options.emit_lp {
        let mut out = BufWriter::new(File::create(path)?);
        milp::write_lp(&formulation.problem, &mut out)?;
    }
    if let Some(path) = &options.dump_table {
        let mut out = BufWriter::new(File::create(path)?);
        dump_table(&table, &mut out)?;
    }

    let solution = solve_milp(&formulation.problem, &options.milp)?;

    let policy = if solution.objective.is_nan() {
        None
    } else {
        let trees = formulation.extract_trees(&solution.values, &spaces)?;
        let policy = JointPolicy::from_trees(model, &spaces, trees)?;
        if (policy.value - solution.objective).abs() > 1e-6 {
            return Err(Error::Extraction(format!(
                "extracted policy is worth {} but the solver reported {}",
                policy.value, solution.objective
            )));
        }
        Some(policy)
    };

    let status = match solution.status {
        MilpStatus::Optimal => "optimal",
        MilpStatus::Infeasible => "infeasible",
        MilpStatus::NodeLimit => "node-limit",
        MilpStatus::TimeLimit => "time-limit",
    };
    let report = RunReport {
        instance: instance.to_string(),
        horizon: options.horizon,
        variant: options.variant.as_str().to_string(),
        status: status.to_string(),
        value: policy.as_ref().map(|p| p.value),
        best_bound: solution.best_bound,
        bounds: BoundsReport::from(&pair),
        policy: policy.as_ref().map(|p| policy_report(p, &spaces)),
        stats: StatsReport {
            nodes: solution.nodes,
            lp_iterations: solution.lp_iterations,
            wall_time_seconds: solution.wall_time.as_secs_f64(),
            variables: formulation.problem.variables.len(),
            rows: formulation.problem.rows.len(),
        },
        dominance: dominance.as_ref().map(|d| dominance_report(d, &spaces)),
    };
    Ok(SolveOutcome {
        status: solution.status,
        policy,
        report,
    })
}

#[derive(Debug)]
pub struct EvaluateOutcome {
    pub policy: JointPolicy,
    /// Independent re-evaluation from the payoff table; always within 1e-9
    /// of `policy.value`.
    pub sequence_form: f64,
}

/// Checks a policy document against an instance and evaluates it both ways:
/// by expectation over the tree and by summing table payoffs over the
/// selected sequences.
pub fn evaluate(model: &DecPomdp, horizon: usize, document: &str) -> Result<EvaluateOutcome, Error> {
    let spaces = SequenceSpace::for_model(model, horizon)?;
    let table = build_table(model, horizon)?;
    let constraints: Vec<_> = spaces.iter().map(policy_constraints).collect();
    let parsed = parse_policy_document(document)?;
    let vectors = policy_from_report(&parsed, &spaces)?;
    let sequence_form = sequence_form_value(&table, &spaces, &constraints, &vectors)?;
    let mut trees = Vec::with_capacity(vectors.len());
    for (vector, space) in vectors.iter().zip(&spaces) {
        trees.push(vector_to_tree(vector, space)?);
    }
    let value = tree_value(model, &trees);
    if (value - sequence_form).abs() > 1e-9 {
        return Err(Error::Extraction(format!(
            "tree and sequence-form evaluations disagree: {value} vs {sequence_form}"
        )));
    }
    Ok(EvaluateOutcome {
        policy: JointPolicy {
            trees,
            vectors,
            value,
        },
        sequence_form,
    })
}

/// Enumerates every deterministic joint policy and returns the best.
pub fn brute(model: &DecPomdp, horizon: usize) -> Result<OracleResult, Error> {
    let spaces = SequenceSpace::for_model(model, horizon)?;
    let table = build_table(model, horizon)?;
    brute_force_optimal(model, horizon, &table, &spaces)
}
