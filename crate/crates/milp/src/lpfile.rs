//! Plain-text LP-format emitter, for cross-checking problems against
//! external solvers. Variables and rows appear exactly in problem order, so
//! the output is canonical for a given problem.

use std::fmt::Write as _;
use std::io;

use crate::{Problem, RowSense, VarKind};

const WRAP_COLUMN: usize = 76;

/// Renders `problem` in LP format (Maximize / Subject To / Bounds /
/// Binaries / End).
pub fn lp_string(problem: &Problem) -> String {
    let mut s = String::new();
    if !problem.name.is_empty() {
        let _ = writeln!(s, "\\ {}", problem.name);
    }
    s.push_str("Maximize\n");
    let mut line = String::from(" obj:");
    let mut first = true;
    for (j, &c) in problem.objective.iter().enumerate() {
        if c != 0.0 {
            push_term(&mut s, &mut line, c, &problem.variables[j].name, first);
            first = false;
        }
    }
    if problem.objective_offset != 0.0 {
        push_wrapped(&mut s, &mut line, &signed_num(problem.objective_offset, first));
    }
    s.push_str(&line);
    s.push('\n');

    s.push_str("Subject To\n");
    for row in &problem.rows {
        let mut line = format!(" {}:", row.name);
        let mut first = true;
        for &(j, c) in &row.coeffs {
            if c != 0.0 {
                push_term(&mut s, &mut line, c, &problem.variables[j].name, first);
                first = false;
            }
        }
        if first {
            // A row with no terms still needs one for parsers; use the first
            // variable with coefficient zero.
            push_term(&mut s, &mut line, 0.0, &problem.variables[0].name, true);
        }
        let sense = match row.sense {
            RowSense::Eq => "=",
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
        };
        push_wrapped(&mut s, &mut line, &format!("{} {}", sense, num(row.rhs)));
        s.push_str(&line);
        s.push('\n');
    }

    let mut bounds = String::new();
    for v in &problem.variables {
        // Defaults need no line: continuous 0 <= x < inf, binary 0 <= x <= 1.
        let line = match (v.lower, v.upper) {
            (l, u) if l == 0.0 && u == f64::INFINITY => continue,
            (l, u) if v.kind == VarKind::Binary && l == 0.0 && u == 1.0 => continue,
            (l, u) if l == u => format!(" {} = {}\n", v.name, num(l)),
            (l, u) if l == f64::NEG_INFINITY && u == f64::INFINITY => {
                format!(" {} free\n", v.name)
            }
            (l, u) if u == f64::INFINITY => format!(" {} >= {}\n", v.name, num(l)),
            (l, u) if l == f64::NEG_INFINITY => {
                format!(" -infinity <= {} <= {}\n", v.name, num(u))
            }
            (l, u) => format!(" {} <= {} <= {}\n", num(l), v.name, num(u)),
        };
        bounds.push_str(&line);
    }
    if !bounds.is_empty() {
        s.push_str("Bounds\n");
        s.push_str(&bounds);
    }

    if problem.variables.iter().any(|v| v.kind == VarKind::Binary) {
        s.push_str("Binaries\n");
        let mut line = String::from(" ");
        for v in &problem.variables {
            if v.kind == VarKind::Binary {
                if line.len() + v.name.len() + 1 > WRAP_COLUMN && line.trim() != "" {
                    s.push_str(line.trim_end());
                    s.push('\n');
                    line = String::from(" ");
                }
                let _ = write!(line, " {}", v.name);
            }
        }
        s.push_str(line.trim_end());
        s.push('\n');
    }
    s.push_str("End\n");
    s
}

/// Writes the LP rendering of `problem` to `out`.
pub fn write_lp(problem: &Problem, out: &mut dyn io::Write) -> io::Result<()> {
    out.write_all(lp_string(problem).as_bytes())
}

fn num(v: f64) -> String {
    // f64 Display is shortest-roundtrip decimal, which LP parsers accept.
    format!("{}", v)
}

fn signed_num(v: f64, first: bool) -> String {
    if first {
        num(v)
    } else if v < 0.0 {
        format!("- {}", num(-v))
    } else {
        format!("+ {}", num(v))
    }
}

fn push_term(s: &mut String, line: &mut String, coeff: f64, name: &str, first: bool) {
    let term = if first {
        format!("{} {}", num(coeff), name)
    } else if coeff < 0.0 {
        format!("- {} {}", num(-coeff), name)
    } else {
        format!("+ {} {}", num(coeff), name)
    };
    push_wrapped(s, line, &term);
}

fn push_wrapped(s: &mut String, line: &mut String, term: &str) {
    if line.len() + term.len() + 1 > WRAP_COLUMN {
        s.push_str(line);
        s.push('\n');
        line.clear();
        line.push_str("  ");
    }
    line.push(' ');
    line.push_str(term);
}
