//! Shared oracles for the integration tests. Everything here leans on
//! `microlp` or brute force, never on the crate's own solver.

#![allow(dead_code)]

use linelift::milp::{MilpModel, Sense};
use microlp::{ComparisonOp, OptimizationDirection, Problem};

/// Maximizes the LP relaxation of `model` with variables in `fixed` pinned to
/// the given values. `None` when infeasible.
pub fn lp_oracle(model: &MilpModel, fixed: &[(usize, f64)]) -> Option<(f64, Vec<f64>)> {
    lp_oracle_with(model, fixed, true)
}

/// Same as [`lp_oracle`], with the objective dropped when `optimize` is false.
pub fn lp_oracle_with(model: &MilpModel, fixed: &[(usize, f64)], optimize: bool) -> Option<(f64, Vec<f64>)> {
    let mut cost = vec![0.0; model.num_vars()];
    if optimize {
        for (v, c) in &model.objective {
            cost[v.index] += c;
        }
    }
    let mut bounds: Vec<(f64, f64)> = model.vars.iter().map(|v| (v.lower, v.upper)).collect();
    for &(j, x) in fixed {
        bounds[j] = (x, x);
    }
    let mut p = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = cost.iter().zip(&bounds).map(|(&c, &b)| p.add_var(c, b)).collect();
    for row in &model.constraints {
        let op = match row.sense {
            Sense::Le => ComparisonOp::Le,
            Sense::Ge => ComparisonOp::Ge,
            Sense::Eq => ComparisonOp::Eq,
        };
        let terms: Vec<_> = row.terms.iter().map(|(v, c)| (vars[v.index], *c)).collect();
        p.add_constraint(terms, op, row.rhs);
    }
    match p.solve() {
        Ok(sol) => {
            let x: Vec<f64> = vars.iter().map(|&v| *sol.var_value(v)).collect();
            Some((model.objective_value(&x), x))
        }
        Err(microlp::Error::Infeasible) => None,
        Err(e) => panic!("oracle LP failed: {e}"),
    }
}

/// Best objective over every assignment of the boolean variables, each
/// completed by the LP oracle.
pub fn exhaustive_optimum(model: &MilpModel) -> Option<f64> {
    let booleans: Vec<usize> = (0..model.num_vars()).filter(|&j| model.vars[j].integer).collect();
    assert!(booleans.len() <= 16, "exhaustive search over {} booleans", booleans.len());
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << booleans.len()) {
        let fixed: Vec<(usize, f64)> =
            booleans.iter().enumerate().map(|(k, &j)| (j, f64::from((mask >> k) & 1))).collect();
        if let Some((obj, _)) = lp_oracle(model, &fixed) {
            best = Some(best.map_or(obj, |b| b.max(obj)));
        }
    }
    best
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Largest relative endpoint error of `points` against `truth` after the best
/// single positive scale is applied to `points`.
pub fn scale_aligned_error(points: &[[f64; 3]], truth: &[[f64; 3]]) -> f64 {
    assert_eq!(points.len(), truth.len());
    let num: f64 = points.iter().zip(truth).map(|(p, q)| dot(*p, *q)).sum();
    let den: f64 = points.iter().map(|p| dot(*p, *p)).sum();
    let s = num / den;
    points
        .iter()
        .zip(truth)
        .map(|(p, q)| {
            let d = [s * p[0] - q[0], s * p[1] - q[1], s * p[2] - q[2]];
            (dot(d, d) / dot(*q, *q)).sqrt()
        })
        .fold(0.0, f64::max)
}
