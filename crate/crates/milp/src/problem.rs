//! Problem container shared by the LP and MILP solvers.
//!
//! Variable and row order is significant everywhere: the simplex prices
//! columns in index order, branch-and-bound breaks ties by variable index,
//! and the LP writer emits rows as stored. Callers that want reproducible
//! behaviour get it by constructing the problem in a canonical order.

use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Continuous,
    Binary,
}

#[derive(Debug, Clone)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub kind: VarKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowSense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct Row {
    pub name: String,
    pub coeffs: Vec<(usize, f64)>,
    pub sense: RowSense,
    pub rhs: f64,
}

/// A maximization problem `max c'x + offset` subject to box bounds and
/// linear rows.
#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub variables: Vec<Variable>,
    pub objective: Vec<f64>,
    /// Constant added to `c'x` when reporting objective values. Lets callers
    /// work with shifted costs while solutions are reported in original units.
    pub objective_offset: f64,
    pub rows: Vec<Row>,
}

impl Problem {
    pub fn new(name: impl Into<String>) -> Self {
        Problem {
            name: name.into(),
            variables: Vec::new(),
            objective: Vec::new(),
            objective_offset: 0.0,
            rows: Vec::new(),
        }
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        lower: f64,
        upper: f64,
        kind: VarKind,
        objective: f64,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            lower,
            upper,
            kind,
        });
        self.objective.push(objective);
        self.variables.len() - 1
    }

    /// Adds a row and returns its index.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        coeffs: Vec<(usize, f64)>,
        sense: RowSense,
        rhs: f64,
    ) -> usize {
        self.rows.push(Row {
            name: name.into(),
            coeffs,
            sense,
            rhs,
        });
        self.rows.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn binary_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Binary)
            .map(|(j, _)| j)
    }

    /// Structural checks: bound sanity, binary boxes inside [0, 1], finite
    /// coefficients, and in-range column indices.
    pub fn validate(&self) -> Result<(), Error> {
        let n = self.variables.len();
        if self.objective.len() != n {
            return Err(Error::InvalidProblem(format!(
                "objective has {} entries for {} variables",
                self.objective.len(),
                n
            )));
        }
        for (j, v) in self.variables.iter().enumerate() {
            if v.lower.is_nan() || v.upper.is_nan() || v.lower > v.upper {
                return Err(Error::InvalidProblem(format!(
                    "variable {} ({}) has bad bounds [{}, {}]",
                    j, v.name, v.lower, v.upper
                )));
            }
            if v.kind == VarKind::Binary && (v.lower < 0.0 || v.upper > 1.0) {
                return Err(Error::InvalidProblem(format!(
                    "binary variable {} ({}) has bounds [{}, {}] outside [0, 1]",
                    j, v.name, v.lower, v.upper
                )));
            }
            if !self.objective[j].is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "objective coefficient of variable {} ({}) is not finite",
                    j, v.name
                )));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(Error::InvalidProblem(format!(
                    "row {} ({}) has non-finite right-hand side",
                    i, row.name
                )));
            }
            for &(j, c) in &row.coeffs {
                if j >= n {
                    return Err(Error::InvalidProblem(format!(
                        "row {} ({}) references variable {} but there are only {}",
                        i, row.name, j, n
                    )));
                }
                if !c.is_finite() {
                    return Err(Error::InvalidProblem(format!(
                        "row {} ({}) has non-finite coefficient on variable {}",
                        i, row.name, j
                    )));
                }
            }
        }
        Ok(())
    }
}
