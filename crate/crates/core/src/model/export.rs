//! Text export of a [`MilpInstance`] for external solvers.
//!
//! Two formats are supported: free-format MPS (with `OBJSENSE MAXIMIZE` and
//! an objective-constant entry in the RHS section, negated per the usual
//! convention) and CPLEX-style LP. Variable names are stable (`y_i_c`,
//! `x_i_j_c` with `i < j`, `f_i_j`) and emission is fully deterministic:
//! re-exporting the same instance yields byte-identical text.

use super::{MilpInstance, Sense, VarKind};
use std::fmt::Write;

/// Formats a coefficient or bound. Plain `Display` for `f64` is decimal,
/// round-trips exactly, and never switches to scientific notation, which
/// keeps the files parseable by strict readers.
fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "1e30".into()
    } else {
        format!("{x}")
    }
}

/// Writes the instance in free-format MPS.
pub fn write_mps(instance: &MilpInstance, name: &str) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME {name}");
    out.push_str("OBJSENSE\n    MAXIMIZE\n");

    out.push_str("ROWS\n N  obj\n");
    for row in &instance.rows {
        let tag = match row.sense {
            Sense::Le => 'L',
            Sense::Ge => 'G',
            Sense::Eq => 'E',
        };
        let _ = writeln!(out, " {tag}  {}", row.name);
    }

    // Column-major coefficients: for each variable, its objective entry then
    // every row it appears in, in row order.
    let mut columns: Vec<Vec<(usize, f64)>> = vec![Vec::new(); instance.variables.len()];
    for (r, row) in instance.rows.iter().enumerate() {
        for &(v, coeff) in &row.terms {
            columns[v].push((r, coeff));
        }
    }

    out.push_str("COLUMNS\n");
    let mut in_integer_block = false;
    let mut marker = 0usize;
    for (v, var) in instance.variables.iter().enumerate() {
        let integral = matches!(var.kind, VarKind::Binary | VarKind::Integer);
        if integral != in_integer_block {
            let kind = if integral { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER{marker}  'MARKER'  {kind}");
            marker += 1;
            in_integer_block = integral;
        }
        if var.objective != 0.0 {
            let _ = writeln!(out, "    {}  obj  {}", var.name, num(var.objective));
        }
        for &(r, coeff) in &columns[v] {
            let _ = writeln!(out, "    {}  {}  {}", var.name, instance.rows[r].name, num(coeff));
        }
        if var.objective == 0.0 && columns[v].is_empty() {
            // keep the column visible so readers register the variable
            let _ = writeln!(out, "    {}  obj  0", var.name);
        }
    }
    if in_integer_block {
        let _ = writeln!(out, "    MARKER{marker}  'MARKER'  'INTEND'");
    }

    out.push_str("RHS\n");
    if instance.objective_constant != 0.0 {
        let _ = writeln!(out, "    rhs  obj  {}", num(-instance.objective_constant));
    }
    for row in &instance.rows {
        if row.rhs != 0.0 {
            let _ = writeln!(out, "    rhs  {}  {}", row.name, num(row.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for var in &instance.variables {
        match var.kind {
            VarKind::Binary => {
                let _ = writeln!(out, " BV bnd  {}", var.name);
            }
            VarKind::Integer => {
                let _ = writeln!(out, " LI bnd  {}  {}", var.name, num(var.lower));
                let _ = writeln!(out, " UI bnd  {}  {}", var.name, num(var.upper));
            }
            VarKind::Continuous => {
                // flows: default bounds [0, inf) need no entry
                if var.lower != 0.0 {
                    let _ = writeln!(out, " LO bnd  {}  {}", var.name, num(var.lower));
                }
                if var.upper != f64::INFINITY {
                    let _ = writeln!(out, " UP bnd  {}  {}", var.name, num(var.upper));
                }
            }
        }
    }
    out.push_str("ENDATA\n");
    out
}

/// Writes the instance in CPLEX-style LP format.
pub fn write_lp(instance: &MilpInstance, _name: &str) -> String {
    let mut out = String::new();
    out.push_str("Maximize\n obj:");
    let mut any = false;
    for var in &instance.variables {
        if var.objective != 0.0 {
            let _ = write!(out, " {} {}", signed(var.objective, any), var.name);
            any = true;
        }
    }
    if instance.objective_constant != 0.0 {
        let _ = write!(out, " {}", signed_const(instance.objective_constant, any));
        any = true;
    }
    if !any {
        out.push_str(" 0 y_0_1");
    }
    out.push('\n');

    out.push_str("Subject To\n");
    for row in &instance.rows {
        let _ = write!(out, " {}:", row.name);
        for (k, &(v, coeff)) in row.terms.iter().enumerate() {
            let _ = write!(out, " {} {}", signed(coeff, k > 0), instance.variables[v].name);
        }
        let op = match row.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        };
        let _ = writeln!(out, " {op} {}", num(row.rhs));
    }

    out.push_str("Bounds\n");
    for var in &instance.variables {
        match var.kind {
            VarKind::Binary => {}
            _ => {
                if var.upper == f64::INFINITY {
                    let _ = writeln!(out, " {} <= {}", num(var.lower), var.name);
                } else {
                    let _ =
                        writeln!(out, " {} <= {} <= {}", num(var.lower), var.name, num(var.upper));
                }
            }
        }
    }

    let binaries: Vec<&str> = instance
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Binary)
        .map(|v| v.name.as_str())
        .collect();
    if !binaries.is_empty() {
        out.push_str("Binaries\n");
        for chunk in binaries.chunks(12) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    let generals: Vec<&str> = instance
        .variables
        .iter()
        .filter(|v| v.kind == VarKind::Integer)
        .map(|v| v.name.as_str())
        .collect();
    if !generals.is_empty() {
        out.push_str("Generals\n");
        for chunk in generals.chunks(12) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

fn signed(coeff: f64, follow: bool) -> String {
    if coeff < 0.0 {
        format!("- {}", num(-coeff))
    } else if follow {
        format!("+ {}", num(coeff))
    } else {
        num(coeff)
    }
}

fn signed_const(c: f64, follow: bool) -> String {
    signed(c, follow)
}
