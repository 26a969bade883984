use std::fmt::Write as _;
use std::io::{self, Write};

use super::model::{MilpModel, VarKind};

fn term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        let _ = write!(out, " - {} {}", -coef, name);
    } else if first {
        let _ = write!(out, " {coef} {name}");
    } else {
        let _ = write!(out, " + {coef} {name}");
    }
}

/// Renders the model in CPLEX LP text format.
pub fn to_lp_string(model: &MilpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ line reconstruction model\n");
    let _ = writeln!(out, "\\ {} variables, {} rows", model.num_vars(), model.constraints.len());
    out.push_str("Maximize\n obj:");
    let mut first = true;
    for (id, c) in &model.objective {
        term(&mut out, *c, &model.vars[id.index].name, first);
        first = false;
    }
    if model.objective_constant != 0.0 || first {
        let c = model.objective_constant;
        if first {
            let _ = write!(out, " {c}");
        } else if c < 0.0 {
            let _ = write!(out, " - {}", -c);
        } else {
            let _ = write!(out, " + {c}");
        }
    }
    out.push_str("\nSubject To\n");
    for (r, c) in model.constraints.iter().enumerate() {
        let _ = write!(out, " c{r}:");
        let mut first = true;
        for (id, a) in &c.terms {
            term(&mut out, *a, &model.vars[id.index].name, first);
            first = false;
        }
        if first {
            out.push_str(" 0 ");
            out.push_str(&model.vars.first().map_or("x".to_string(), |v| v.name.clone()));
        }
        let _ = writeln!(out, " {} {}", c.sense, c.rhs);
    }
    out.push_str("Bounds\n");
    for v in model.vars.iter().filter(|v| !v.integer) {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    for v in model.vars.iter().filter(|v| v.integer && (v.lower != 0.0 || v.upper != 1.0)) {
        let _ = writeln!(out, " {} <= {} <= {}", v.lower, v.name, v.upper);
    }
    let binaries: Vec<&str> = model.vars.iter().filter(|v| v.integer).map(|v| v.name.as_str()).collect();
    if !binaries.is_empty() {
        out.push_str("Binary\n");
        for chunk in binaries.chunks(8) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

pub fn write_lp<W: Write>(model: &MilpModel, mut w: W) -> io::Result<()> {
    w.write_all(to_lp_string(model).as_bytes())
}

/// Count of variables per kind, in declaration order of [`VarKind`].
pub fn kind_counts(model: &MilpModel) -> Vec<(VarKind, usize)> {
    let kinds = [VarKind::Lambda, VarKind::Slack, VarKind::BEdge, VarKind::Pi, VarKind::BBoundary];
    kinds.iter().map(|&k| (k, model.vars.iter().filter(|v| v.kind == k).count())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::model::{ModelParams, Sense};

    #[test]
    fn sections_present() {
        let mut m = MilpModel::empty(ModelParams::default());
        let x = m.add_var(VarKind::Lambda, 1.0, 10.0, "lam_0_1");
        let b = m.add_var(VarKind::BEdge, 0.0, 1.0, "b_0_1");
        m.objective.push((b, 2.5));
        m.objective.push((x, -1.0));
        m.objective_constant = 3.0;
        m.add_constraint(vec![(x, 1.0), (b, 20.0)], Sense::Le, 20.0);
        let s = to_lp_string(&m);
        assert!(s.contains("Maximize\n obj: 2.5 b_0_1 - 1 lam_0_1 + 3\n"));
        assert!(s.contains(" c0: 1 lam_0_1 + 20 b_0_1 <= 20\n"));
        assert!(s.contains(" 1 <= lam_0_1 <= 10\n"));
        assert!(s.contains("Binary\n b_0_1\n"));
        assert!(s.ends_with("End\n"));
        assert_eq!(kind_counts(&m)[0], (VarKind::Lambda, 1));
    }
}
