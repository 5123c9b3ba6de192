//! Two-phase dense tableau simplex with Bland's rule.
//!
//! The same code runs over exact rationals and `f64`. Artificial columns are
//! kept through phase 2 so that row duals (and, for infeasible programs, a
//! Farkas certificate) can be read from their reduced costs.

use serde_json::json;

use super::{OptimizeError, Result, Sense, Status};
use crate::num::{format_rational, parse_rational, Rational, Scalar};

/// Scalars the simplex can pivot on.
pub trait LpScalar: Scalar {
    /// Values with magnitude at most this are treated as zero.
    const ZERO_TOL: f64;

    /// `*x -= f * y`.
    fn sub_mul(x: &mut Self, f: &Self, y: &Self);
    /// `*x /= d`.
    fn div_by(x: &mut Self, d: &Self);
    fn to_json(&self) -> serde_json::Value;
    fn from_json(v: &serde_json::Value) -> Option<Self>;

    fn is_pos(&self) -> bool {
        self.approx() > Self::ZERO_TOL || (Self::ZERO_TOL == 0.0 && self.is_positive())
    }
    fn is_neg(&self) -> bool {
        self.approx() < -Self::ZERO_TOL || (Self::ZERO_TOL == 0.0 && self.is_negative())
    }
    fn is_nonzero(&self) -> bool {
        self.is_pos() || self.is_neg()
    }
}

impl LpScalar for Rational {
    const ZERO_TOL: f64 = 0.0;

    fn sub_mul(x: &mut Self, f: &Self, y: &Self) {
        *x -= f * y;
    }
    fn div_by(x: &mut Self, d: &Self) {
        *x /= d;
    }
    fn to_json(&self) -> serde_json::Value {
        json!(format_rational(self))
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        match v {
            serde_json::Value::String(s) => parse_rational(s),
            serde_json::Value::Number(n) => n.as_i64().map(crate::num::qi),
            _ => None,
        }
    }
    fn is_pos(&self) -> bool {
        num_traits::Signed::is_positive(self)
    }
    fn is_neg(&self) -> bool {
        num_traits::Signed::is_negative(self)
    }
}

impl LpScalar for f64 {
    const ZERO_TOL: f64 = 1e-9;

    fn sub_mul(x: &mut Self, f: &Self, y: &Self) {
        *x -= f * y;
    }
    fn div_by(x: &mut Self, d: &Self) {
        *x /= d;
    }
    fn to_json(&self) -> serde_json::Value {
        json!(self)
    }
    fn from_json(v: &serde_json::Value) -> Option<Self> {
        v.as_f64()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RowKind {
    /// `a·x = b`
    Eq,
    /// `a·x ≤ b`
    Le,
    /// `a·x ≥ b`
    Ge,
}

impl RowKind {
    fn tag(self) -> &'static str {
        match self {
            RowKind::Eq => "eq",
            RowKind::Le => "le",
            RowKind::Ge => "ge",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint<T> {
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, T)>,
    pub kind: RowKind,
    pub rhs: T,
}

impl<T: LpScalar> Constraint<T> {
    pub fn lhs(&self, x: &[T]) -> T {
        self.coeffs.iter().fold(T::zero(), |acc, (j, a)| acc + a.clone() * x[*j].clone())
    }
}

/// `max/min f·x` subject to linear rows; variables are non-negative unless
/// marked free.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram<T> {
    pub sense: Sense,
    pub objective: Vec<T>,
    pub constraints: Vec<Constraint<T>>,
    pub free: Vec<bool>,
}

pub type ExactProgram = LinearProgram<Rational>;

impl<T: LpScalar> LinearProgram<T> {
    pub fn new(variables: usize, sense: Sense) -> Self {
        LinearProgram {
            sense,
            objective: vec![T::zero(); variables],
            constraints: Vec::new(),
            free: vec![false; variables],
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective_coeff(&mut self, j: usize, c: T) {
        self.objective[j] = c;
    }

    pub fn set_free(&mut self, j: usize) {
        self.free[j] = true;
    }

    pub fn add(&mut self, coeffs: Vec<(usize, T)>, kind: RowKind, rhs: T) {
        self.constraints.push(Constraint { coeffs, kind, rhs });
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.variables();
        if self.free.len() != n {
            return Err(OptimizeError::MalformedProgram("free-variable mask has the wrong length".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if let Some((j, _)) = c.coeffs.iter().find(|(j, _)| *j >= n) {
                return Err(OptimizeError::MalformedProgram(format!("row {i} references variable {j} of {n}")));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.objective.iter().zip(x).fold(T::zero(), |acc, (c, v)| acc + c.clone() * v.clone())
    }

    /// Largest violation of any row or sign restriction at `x`.
    pub fn max_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        let mut bump = |v: T| {
            if v > worst {
                worst = v;
            }
        };
        for (j, v) in x.iter().enumerate() {
            if !self.free[j] {
                bump(-v.clone());
            }
        }
        for c in &self.constraints {
            let lhs = c.lhs(x);
            match c.kind {
                RowKind::Eq => bump((lhs - c.rhs.clone()).abs()),
                RowKind::Le => bump(lhs - c.rhs.clone()),
                RowKind::Ge => bump(c.rhs.clone() - lhs),
            }
        }
        worst
    }

    /// Checks a Farkas certificate `y`: the combination `Σ y_i row_i` is
    /// non-positive on every feasible direction but its right-hand side is
    /// positive, so no feasible point exists.
    pub fn verify_farkas(&self, y: &[T]) -> bool {
        if y.len() != self.constraints.len() {
            return false;
        }
        let mut column = vec![T::zero(); self.variables()];
        let mut rhs = T::zero();
        for (c, yi) in self.constraints.iter().zip(y) {
            let sign_ok = match c.kind {
                RowKind::Eq => true,
                RowKind::Le => !yi.is_pos(),
                RowKind::Ge => !yi.is_neg(),
            };
            if !sign_ok {
                return false;
            }
            for (j, a) in &c.coeffs {
                column[*j] = column[*j].clone() + a.clone() * yi.clone();
            }
            rhs = rhs + c.rhs.clone() * yi.clone();
        }
        let columns_ok =
            column.iter().zip(&self.free).all(|(v, &free)| if free { !v.is_nonzero() } else { !v.is_pos() });
        columns_ok && rhs.is_pos()
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({
            "kind": "lp",
            "arithmetic": T::ARITHMETIC.to_string(),
            "sense": match self.sense { Sense::Maximize => "max", Sense::Minimize => "min" },
            "variables": self.variables(),
            "objective": self.objective.iter().map(LpScalar::to_json).collect::<Vec<_>>(),
            "free": self.free.iter().enumerate().filter(|(_, f)| **f).map(|(j, _)| j).collect::<Vec<_>>(),
            "constraints": self.constraints.iter().map(|c| json!({
                "kind": c.kind.tag(),
                "rhs": c.rhs.to_json(),
                "coeffs": c.coeffs.iter().map(|(j, a)| json!([j, a.to_json()])).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| OptimizeError::MalformedProgram(m.to_string());
        if v.get("arithmetic").and_then(|a| a.as_str()) != Some(&T::ARITHMETIC.to_string()) {
            return Err(bad("arithmetic mode does not match"));
        }
        let sense = match v.get("sense").and_then(|s| s.as_str()) {
            Some("max") => Sense::Maximize,
            Some("min") => Sense::Minimize,
            _ => return Err(bad("missing sense")),
        };
        let objective: Vec<T> = v
            .get("objective")
            .and_then(|o| o.as_array())
            .ok_or_else(|| bad("missing objective"))?
            .iter()
            .map(|c| T::from_json(c).ok_or_else(|| bad("bad objective coefficient")))
            .collect::<Result<_>>()?;
        let mut lp = LinearProgram::new(objective.len(), sense);
        lp.objective = objective;
        for j in v.get("free").and_then(|f| f.as_array()).into_iter().flatten() {
            let j = j.as_u64().ok_or_else(|| bad("bad free index"))? as usize;
            if j >= lp.variables() {
                return Err(bad("free index out of range"));
            }
            lp.free[j] = true;
        }
        for c in v.get("constraints").and_then(|c| c.as_array()).ok_or_else(|| bad("missing constraints"))? {
            let kind = match c.get("kind").and_then(|k| k.as_str()) {
                Some("eq") => RowKind::Eq,
                Some("le") => RowKind::Le,
                Some("ge") => RowKind::Ge,
                _ => return Err(bad("bad row kind")),
            };
            let rhs = c.get("rhs").and_then(T::from_json).ok_or_else(|| bad("bad rhs"))?;
            let coeffs = c
                .get("coeffs")
                .and_then(|a| a.as_array())
                .ok_or_else(|| bad("missing coeffs"))?
                .iter()
                .map(|pair| {
                    let j = pair.get(0).and_then(|j| j.as_u64()).ok_or_else(|| bad("bad coefficient index"))?;
                    let a = pair.get(1).and_then(T::from_json).ok_or_else(|| bad("bad coefficient"))?;
                    Ok((j as usize, a))
                })
                .collect::<Result<_>>()?;
            lp.add(coeffs, kind, rhs);
        }
        lp.validate()?;
        Ok(lp)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution<T> {
    pub status: Status,
    /// Optimal objective value in the program's own sense.
    pub value: Option<T>,
    pub x: Vec<T>,
    /// Row duals `y` with `Σ y_i rhs_i = value` at optimality.
    pub duals: Vec<T>,
    /// Farkas certificate for infeasible programs (see
    /// [`LinearProgram::verify_farkas`]).
    pub farkas: Option<Vec<T>>,
    pub iterations: usize,
}

impl<T: LpScalar> LpSolution<T> {
    pub fn dual_value(&self, lp: &LinearProgram<T>) -> T {
        lp.constraints.iter().zip(&self.duals).fold(T::zero(), |acc, (c, y)| acc + c.rhs.clone() * y.clone())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LpOptions {
    pub max_iterations: usize,
}

impl Default for LpOptions {
    fn default() -> Self {
        LpOptions { max_iterations: 100_000 }
    }
}

pub fn solve_lp<T: LpScalar>(lp: &LinearProgram<T>) -> Result<LpSolution<T>> {
    solve_lp_with(lp, LpOptions::default())
}

struct Tableau<T> {
    /// `m` constraint rows followed by the objective row; last column is the rhs.
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    structural: usize,
    iterations: usize,
}

enum PhaseOutcome {
    Optimal,
    Unbounded,
    MaxIterations,
}

impl<T: LpScalar> Tableau<T> {
    fn m(&self) -> usize {
        self.basis.len()
    }

    fn width(&self) -> usize {
        self.rows[0].len() - 1
    }

    fn pivot(&mut self, r: usize, col: usize) {
        let w = self.width() + 1;
        let piv = self.rows[r][col].clone();
        let nz: Vec<usize> = (0..w).filter(|&j| !self.rows[r][j].is_zero()).collect();
        for &j in &nz {
            T::div_by(&mut self.rows[r][j], &piv);
        }
        let prow = std::mem::take(&mut self.rows[r]);
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col].clone();
            if f.is_zero() {
                continue;
            }
            for &j in &nz {
                T::sub_mul(&mut row[j], &f, &prow[j]);
            }
            if T::ZERO_TOL > 0.0 {
                for &j in &nz {
                    if row[j].approx().abs() < 1e-13 {
                        row[j] = T::zero();
                    }
                }
            }
            row[col] = T::zero();
        }
        self.rows[r] = prow;
        self.basis[r] = col;
        self.iterations += 1;
    }

    /// Bland's rule on columns `< allowed`.
    fn run(&mut self, allowed: usize, max_iter: usize) -> PhaseOutcome {
        let m = self.m();
        let rhs = self.width();
        loop {
            if self.iterations >= max_iter {
                return PhaseOutcome::MaxIterations;
            }
            let Some(col) = (0..allowed).find(|&j| self.rows[m][j].is_neg()) else {
                return PhaseOutcome::Optimal;
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..m {
                let a = &self.rows[i][col];
                if !a.is_pos() {
                    continue;
                }
                let ratio = self.rows[i][rhs].clone() / a.clone();
                let better = match &best {
                    None => true,
                    Some((bi, br)) => {
                        let d = ratio.clone() - br.clone();
                        d.is_neg() || (!d.is_pos() && self.basis[i] < self.basis[*bi])
                    }
                };
                if better {
                    best = Some((i, ratio));
                }
            }
            let Some((r, _)) = best else {
                return PhaseOutcome::Unbounded;
            };
            self.pivot(r, col);
        }
    }

    fn set_costs(&mut self, costs: &[T]) {
        let m = self.m();
        let w = self.width() + 1;
        let mut obj: Vec<T> = (0..w).map(|j| if j < costs.len() { costs[j].clone() } else { T::zero() }).collect();
        for i in 0..m {
            let cb = &costs[self.basis[i]];
            if cb.is_zero() {
                continue;
            }
            for j in 0..w {
                if !self.rows[i][j].is_zero() {
                    T::sub_mul(&mut obj[j], cb, &self.rows[i][j]);
                }
            }
        }
        self.rows[m] = obj;
    }

    /// `y_i = c_art - d_art_i` for the current costs.
    fn row_duals(&self, art_cost: &T) -> Vec<T> {
        let m = self.m();
        (0..m).map(|i| art_cost.clone() - self.rows[m][self.structural + i].clone()).collect()
    }
}

pub fn solve_lp_with<T: LpScalar>(lp: &LinearProgram<T>, opts: LpOptions) -> Result<LpSolution<T>> {
    lp.validate()?;
    let n = lp.variables();
    let m = lp.constraints.len();

    // Standard-form columns: one per variable, a second (negated) one for
    // free variables, one slack per inequality row.
    let mut col_of: Vec<(usize, Option<usize>)> = Vec::with_capacity(n);
    let mut next = 0;
    for j in 0..n {
        if lp.free[j] {
            col_of.push((next, Some(next + 1)));
            next += 2;
        } else {
            col_of.push((next, None));
            next += 1;
        }
    }
    let mut slack_of = vec![None; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        if c.kind != RowKind::Eq {
            slack_of[i] = Some(next);
            next += 1;
        }
    }
    let structural = next;
    let width = structural + m;

    let mut flipped = vec![false; m];
    let mut rows: Vec<Vec<T>> = Vec::with_capacity(m + 1);
    for (i, c) in lp.constraints.iter().enumerate() {
        let mut row = vec![T::zero(); width + 1];
        for (j, a) in &c.coeffs {
            let (p, neg) = col_of[*j];
            row[p] = row[p].clone() + a.clone();
            if let Some(q) = neg {
                row[q] = row[q].clone() - a.clone();
            }
        }
        if let Some(s) = slack_of[i] {
            row[s] = if c.kind == RowKind::Le { T::one() } else { -T::one() };
        }
        row[width] = c.rhs.clone();
        if row[width].is_neg() {
            flipped[i] = true;
            for v in row.iter_mut() {
                *v = -v.clone();
            }
        }
        row[structural + i] = T::one();
        rows.push(row);
    }
    rows.push(vec![T::zero(); width + 1]);
    let mut t = Tableau { rows, basis: (structural..structural + m).collect(), structural, iterations: 0 };

    // Phase 1: minimise the sum of artificials.
    let mut phase1_costs = vec![T::zero(); width];
    for c in phase1_costs.iter_mut().skip(structural) {
        *c = T::one();
    }
    t.set_costs(&phase1_costs);
    let unflip = |y: Vec<T>| -> Vec<T> { y.into_iter().zip(&flipped).map(|(v, &f)| if f { -v } else { v }).collect() };
    match t.run(structural, opts.max_iterations) {
        PhaseOutcome::MaxIterations => return Ok(limit_solution(n, m, t.iterations)),
        PhaseOutcome::Unbounded => {
            return Err(OptimizeError::NumericalFailure("phase 1 reported unbounded".into()));
        }
        PhaseOutcome::Optimal => {}
    }
    let infeasibility = -t.rows[m][width].clone();
    if infeasibility.is_pos() {
        let y = unflip(t.row_duals(&T::one()));
        return Ok(LpSolution {
            status: Status::Infeasible,
            value: None,
            x: vec![T::zero(); n],
            duals: vec![T::zero(); m],
            farkas: Some(y),
            iterations: t.iterations,
        });
    }
    // Drive zero-level artificials out of the basis where possible.
    for r in 0..m {
        if t.basis[r] >= structural {
            if let Some(col) = (0..structural).find(|&j| t.rows[r][j].is_nonzero()) {
                t.pivot(r, col);
            }
        }
    }

    // Phase 2: minimise (−f for maximisation) over structural columns.
    let mut costs = vec![T::zero(); width];
    for j in 0..n {
        let c = match lp.sense {
            Sense::Maximize => -lp.objective[j].clone(),
            Sense::Minimize => lp.objective[j].clone(),
        };
        let (p, neg) = col_of[j];
        if let Some(q) = neg {
            costs[q] = -c.clone();
        }
        costs[p] = c;
    }
    t.set_costs(&costs);
    let outcome = t.run(structural, opts.max_iterations);
    let status = match outcome {
        PhaseOutcome::Optimal => Status::Optimal,
        PhaseOutcome::Unbounded => Status::Unbounded,
        PhaseOutcome::MaxIterations => Status::MaxIterations,
    };
    if status != Status::Optimal {
        let mut s = limit_solution(n, m, t.iterations);
        s.status = status;
        return Ok(s);
    }
    let mut std_x = vec![T::zero(); width];
    for (i, &b) in t.basis.iter().enumerate() {
        std_x[b] = t.rows[i][width].clone();
    }
    let x: Vec<T> = col_of
        .iter()
        .map(|&(p, neg)| match neg {
            Some(q) => std_x[p].clone() - std_x[q].clone(),
            None => std_x[p].clone(),
        })
        .collect();
    let mut duals = unflip(t.row_duals(&T::zero()));
    if lp.sense == Sense::Maximize {
        duals = duals.into_iter().map(|v| -v).collect();
    }
    let value = lp.objective_value(&x);
    Ok(LpSolution { status, value: Some(value), x, duals, farkas: None, iterations: t.iterations })
}

fn limit_solution<T: LpScalar>(n: usize, m: usize, iterations: usize) -> LpSolution<T> {
    LpSolution {
        status: Status::MaxIterations,
        value: None,
        x: vec![T::zero(); n],
        duals: vec![T::zero(); m],
        farkas: None,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{q, qi};

    #[test]
    fn trivial_bound() {
        let mut lp = ExactProgram::new(1, Sense::Maximize);
        lp.set_objective_coeff(0, qi(1));
        lp.add(vec![(0, qi(1))], RowKind::Le, qi(1));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, Status::Optimal);
        assert_eq!(s.value, Some(qi(1)));
        assert_eq!(s.dual_value(&lp), qi(1));
    }

    #[test]
    fn textbook_program_and_duality() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → 36 at (2, 6)
        let mut lp = ExactProgram::new(2, Sense::Maximize);
        lp.objective = vec![qi(3), qi(5)];
        lp.add(vec![(0, qi(1))], RowKind::Le, qi(4));
        lp.add(vec![(1, qi(2))], RowKind::Le, qi(12));
        lp.add(vec![(0, qi(3)), (1, qi(2))], RowKind::Le, qi(18));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.value, Some(qi(36)));
        assert_eq!(s.x, vec![qi(2), qi(6)]);
        assert_eq!(s.dual_value(&lp), qi(36));
        assert_eq!(lp.max_violation(&s.x), qi(0));
        let f = LinearProgram::<f64> {
            sense: Sense::Maximize,
            objective: vec![3.0, 5.0],
            constraints: lp
                .constraints
                .iter()
                .map(|c| Constraint {
                    coeffs: c.coeffs.iter().map(|(j, a)| (*j, a.approx())).collect(),
                    kind: c.kind,
                    rhs: c.rhs.approx(),
                })
                .collect(),
            free: vec![false; 2],
        };
        let fs = solve_lp(&f).unwrap();
        assert!((fs.value.unwrap() - 36.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_has_certificate() {
        let mut lp = ExactProgram::new(2, Sense::Maximize);
        lp.add(vec![(0, qi(1)), (1, qi(1))], RowKind::Eq, qi(1));
        lp.add(vec![(0, qi(1))], RowKind::Ge, qi(2));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, Status::Infeasible);
        assert!(lp.verify_farkas(s.farkas.as_ref().unwrap()));
    }

    #[test]
    fn unbounded_and_free_variables() {
        let mut lp = ExactProgram::new(1, Sense::Maximize);
        lp.objective = vec![qi(1)];
        assert_eq!(solve_lp(&lp).unwrap().status, Status::Unbounded);
        let mut lp = ExactProgram::new(1, Sense::Minimize);
        lp.objective = vec![qi(1)];
        lp.set_free(0);
        lp.add(vec![(0, qi(1))], RowKind::Ge, q(-5, 2));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.value, Some(q(-5, 2)));
        assert_eq!(s.dual_value(&lp), q(-5, 2));
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = ExactProgram::new(2, Sense::Maximize);
        lp.objective = vec![qi(1), qi(2)];
        lp.add(vec![(0, qi(1)), (1, qi(1))], RowKind::Eq, qi(1));
        lp.add(vec![(0, qi(2)), (1, qi(2))], RowKind::Eq, qi(2));
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.value, Some(qi(2)));
        assert_eq!(s.dual_value(&lp), qi(2));
    }

    #[test]
    fn json_round_trip() {
        let mut lp = ExactProgram::new(2, Sense::Minimize);
        lp.objective = vec![q(1, 3), qi(-2)];
        lp.set_free(1);
        lp.add(vec![(0, qi(1)), (1, q(7, 5))], RowKind::Le, qi(3));
        let back = ExactProgram::from_json(&lp.to_json()).unwrap();
        assert_eq!(back, lp);
        assert!(LinearProgram::<f64>::from_json(&lp.to_json()).is_err());
    }

    #[test]
    fn malformed_is_rejected() {
        let mut lp = ExactProgram::new(1, Sense::Maximize);
        lp.add(vec![(3, qi(1))], RowKind::Le, qi(1));
        assert!(matches!(solve_lp(&lp), Err(OptimizeError::MalformedProgram(_))));
    }
}
