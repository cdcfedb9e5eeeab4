//! Solver-neutral linear model plus the simplex backend used for bounding.
//!
//! The backend is `microlp`; only its continuous simplex is used. Integer
//! variables are handled by the branch-and-bound in [`crate::optimizer`],
//! which re-solves children from the parent's basis via [`WarmLp::fix`].

use std::fmt::Write as _;

use microlp::{ComparisonOp, OptimizationDirection, Problem, Variable};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarSpec {
    pub name: String,
    pub lo: f64,
    /// `f64::INFINITY` for no upper bound.
    pub hi: f64,
    pub obj: f64,
    pub integer: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Cmp,
    pub rhs: f64,
}

/// Minimization model `min c.x + k` subject to rows and bounds.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub vars: Vec<VarSpec>,
    pub rows: Vec<Row>,
    pub obj_const: f64,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lo: f64, hi: f64, obj: f64, integer: bool) -> VarId {
        self.vars.push(VarSpec { name: name.into(), lo, hi, obj, integer });
        VarId(self.vars.len() - 1)
    }

    pub fn add_row(&mut self, name: impl Into<String>, terms: Vec<(VarId, f64)>, cmp: Cmp, rhs: f64) {
        self.rows.push(Row { name: name.into(), terms, cmp, rhs });
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_integer(&self) -> usize {
        self.vars.iter().filter(|v| v.integer).count()
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.obj_const + self.vars.iter().zip(x).map(|(v, xi)| v.obj * xi).sum::<f64>()
    }

    /// Largest bound or row violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, xi) in self.vars.iter().zip(x) {
            worst = worst.max(v.lo - xi).max(xi - v.hi);
        }
        for r in &self.rows {
            let lhs: f64 = r.terms.iter().map(|(v, a)| a * x[v.0]).sum();
            let viol = match r.cmp {
                Cmp::Le => lhs - r.rhs,
                Cmp::Ge => r.rhs - lhs,
                Cmp::Eq => (lhs - r.rhs).abs(),
            };
            worst = worst.max(viol);
        }
        worst
    }

    /// CPLEX LP text for cross-checking with external solvers.
    pub fn to_lp_format(&self) -> String {
        let name = |i: usize| sanitize(&self.vars[i].name, i);
        let mut out = String::new();
        let _ = writeln!(out, "\\ objective constant {}", self.obj_const);
        out.push_str("Minimize\n obj:");
        let mut any = false;
        for (i, v) in self.vars.iter().enumerate() {
            if v.obj != 0.0 {
                let _ = write!(out, " {} {}", signed(v.obj), name(i));
                any = true;
            }
        }
        if !any {
            out.push_str(" 0");
        }
        out.push_str("\nSubject To\n");
        for (k, r) in self.rows.iter().enumerate() {
            let _ = write!(out, " {}:", sanitize(&r.name, k));
            if r.terms.is_empty() {
                out.push_str(" 0");
            }
            for (v, a) in &r.terms {
                let _ = write!(out, " {} {}", signed(*a), name(v.0));
            }
            let op = match r.cmp {
                Cmp::Le => "<=",
                Cmp::Ge => ">=",
                Cmp::Eq => "=",
            };
            let _ = writeln!(out, " {op} {}", r.rhs);
        }
        out.push_str("Bounds\n");
        for (i, v) in self.vars.iter().enumerate() {
            if v.hi.is_infinite() {
                let _ = writeln!(out, " {} >= {}", name(i), v.lo);
            } else {
                let _ = writeln!(out, " {} <= {} <= {}", v.lo, name(i), v.hi);
            }
        }
        let ints: Vec<usize> = (0..self.vars.len()).filter(|&i| self.vars[i].integer).collect();
        if !ints.is_empty() {
            out.push_str("Generals\n");
            for i in ints {
                let _ = writeln!(out, " {}", name(i));
            }
        }
        out.push_str("End\n");
        out
    }
}

fn signed(a: f64) -> String {
    if a < 0.0 {
        format!("- {}", -a)
    } else {
        format!("+ {a}")
    }
}

fn sanitize(name: &str, idx: usize) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_.[]".contains(c) { c } else { '_' })
        .collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        format!("x{idx}_{s}")
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpPoint {
    pub x: Vec<f64>,
    pub objective: f64,
}

/// A solved continuous relaxation that can be re-solved after fixing
/// variables without starting from scratch.
#[derive(Clone)]
pub struct WarmLp {
    sol: microlp::Solution,
    vars: Vec<Variable>,
    obj_const: f64,
    fixed: Vec<(VarId, f64)>,
}

impl std::fmt::Debug for WarmLp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WarmLp").field("objective", &self.objective()).field("fixed", &self.fixed).finish()
    }
}

fn build_problem(model: &Model, fixed: &[(VarId, f64)]) -> (Problem, Vec<Variable>) {
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let mut lo: Vec<f64> = model.vars.iter().map(|v| v.lo).collect();
    let mut hi: Vec<f64> = model.vars.iter().map(|v| v.hi).collect();
    for &(v, val) in fixed {
        lo[v.0] = val;
        hi[v.0] = val;
    }
    let vars: Vec<Variable> = model
        .vars
        .iter()
        .enumerate()
        .map(|(i, v)| p.add_var(v.obj, (lo[i], hi[i])))
        .collect();
    for r in &model.rows {
        let terms: Vec<(Variable, f64)> = r.terms.iter().map(|(v, a)| (vars[v.0], *a)).collect();
        let op = match r.cmp {
            Cmp::Le => ComparisonOp::Le,
            Cmp::Ge => ComparisonOp::Ge,
            Cmp::Eq => ComparisonOp::Eq,
        };
        p.add_constraint(terms.as_slice(), op, r.rhs);
    }
    (p, vars)
}

fn outcome(res: std::result::Result<microlp::SolveOutcome, microlp::Error>) -> Result<Option<microlp::Solution>> {
    match res {
        Ok(o) => o
            .into_solution()
            .map(Some)
            .map_err(|_| Error::Solver("simplex interrupted before reaching a basis".into())),
        Err(microlp::Error::Infeasible) => Ok(None),
        Err(microlp::Error::Unbounded) => Err(Error::Solver("relaxation is unbounded".into())),
        Err(e) => Err(Error::Numerical(e.to_string())),
    }
}

impl WarmLp {
    /// Solves the continuous relaxation of `model` (integrality dropped).
    /// `Ok(None)` means infeasible.
    pub fn solve(model: &Model) -> Result<Option<WarmLp>> {
        Self::cold(model, Vec::new())
    }

    /// Solves from scratch with the given variables fixed.
    pub fn solve_fixed(model: &Model, fixed: &[(VarId, f64)]) -> Result<Option<WarmLp>> {
        Self::cold(model, fixed.to_vec())
    }

    fn cold(model: &Model, fixed: Vec<(VarId, f64)>) -> Result<Option<WarmLp>> {
        let (p, vars) = build_problem(model, &fixed);
        Ok(outcome(p.solve())?.map(|sol| WarmLp { sol, vars, obj_const: model.obj_const, fixed }))
    }

    /// Re-solves with one more variable fixed. Falls back to a solve from
    /// scratch if the warm dual simplex reports a numerical failure.
    pub fn fix(&self, model: &Model, var: VarId, val: f64) -> Result<Option<WarmLp>> {
        let mut fixed = self.fixed.clone();
        fixed.retain(|(v, _)| *v != var);
        fixed.push((var, val));
        match outcome(self.sol.clone().fix_var(self.vars[var.0], val)) {
            Ok(sol) => Ok(sol.map(|sol| WarmLp { sol, vars: self.vars.clone(), obj_const: self.obj_const, fixed })),
            Err(Error::Numerical(msg)) => {
                log::debug!("warm re-solve failed ({msg}); solving from scratch");
                Self::cold(model, fixed)
            }
            Err(e) => Err(e),
        }
    }

    pub fn objective(&self) -> f64 {
        self.sol.objective() + self.obj_const
    }

    pub fn value(&self, v: VarId) -> f64 {
        self.sol.var_value_raw(self.vars[v.0])
    }

    pub fn point(&self) -> LpPoint {
        LpPoint { x: self.vars.iter().map(|&v| self.sol.var_value_raw(v)).collect(), objective: self.objective() }
    }

    pub fn fixed(&self) -> &[(VarId, f64)] {
        &self.fixed
    }
}

/// Solves the continuous relaxation and returns the optimal point.
pub fn solve_relaxation(model: &Model) -> Result<Option<LpPoint>> {
    Ok(WarmLp::solve(model)?.map(|w| w.point()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Model {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x,y in [0, 10]
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 10.0, -1.0, false);
        let y = m.add_var("y", 0.0, 10.0, -1.0, true);
        m.add_row("a", vec![(x, 1.0), (y, 2.0)], Cmp::Le, 4.0);
        m.add_row("b", vec![(x, 3.0), (y, 1.0)], Cmp::Le, 6.0);
        m
    }

    #[test]
    fn relaxation_optimum() {
        let p = solve_relaxation(&small()).unwrap().unwrap();
        assert!((p.objective + 2.8).abs() < 1e-9);
        assert!((p.x[0] - 1.6).abs() < 1e-9 && (p.x[1] - 1.2).abs() < 1e-9);
        assert!(small().max_violation(&p.x) < 1e-9);
    }

    #[test]
    fn warm_fix_matches_cold_solve() {
        let m = small();
        let w = WarmLp::solve(&m).unwrap().unwrap();
        let fixed = w.fix(&m, VarId(1), 1.0).unwrap().unwrap();
        let mut cold = m.clone();
        cold.vars[1].lo = 1.0;
        cold.vars[1].hi = 1.0;
        let c = solve_relaxation(&cold).unwrap().unwrap();
        assert!((fixed.objective() - c.objective).abs() < 1e-9);
        assert!(w.fix(&m, VarId(1), 10.0).unwrap().is_none());
    }

    #[test]
    fn infeasible_is_none() {
        let mut m = Model::new();
        let x = m.add_var("x", 0.0, 1.0, 1.0, false);
        m.add_row("r", vec![(x, 1.0)], Cmp::Ge, 2.0);
        assert!(solve_relaxation(&m).unwrap().is_none());
    }

    #[test]
    fn lp_format_lists_every_section() {
        let text = small().to_lp_format();
        for part in ["Minimize", "Subject To", " a: + 1 x + 2 y <= 4", "Bounds", "Generals\n y", "End"] {
            assert!(text.contains(part), "missing {part:?} in\n{text}");
        }
    }
}
