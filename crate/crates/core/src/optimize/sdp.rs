//! Primal-dual interior point method for semidefinite programs.
//!
//! Programs are posed as linear matrix inequalities,
//!
//! ```text
//! maximise  c·y + c0
//! s.t.      F_0 + Σ_k y_k F_k ⪰ 0      (block diagonal: PSD and diagonal blocks)
//!           G y = h
//! ```
//!
//! The equalities are eliminated first (`y = y_0 + N t`); the reduced
//! problem is the dual of `min C•X s.t. A_i•X = b_i, X ⪰ 0` with `C = F_0`,
//! `A_i = -F_i`, `b = c`, solved by an infeasible-start HKM
//! predictor-corrector method.

use std::collections::HashMap;

use nalgebra::{DMatrix, SymmetricEigen};
use serde_json::json;

use super::linalg::{cholesky_in_place, cholesky_solve};
use super::{OptimizeError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BlockKind {
    /// A symmetric positive semidefinite block.
    Psd,
    /// A non-negative diagonal (linear inequalities).
    Diagonal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Block {
    pub kind: BlockKind,
    pub size: usize,
}

/// One upper-triangle entry `(row ≤ col)` of a symmetric block matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Entry {
    pub block: usize,
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SemidefiniteProgram {
    pub blocks: Vec<Block>,
    pub objective: Vec<f64>,
    pub objective_constant: f64,
    /// `F_0`.
    pub constant: Vec<Entry>,
    /// `F_k` for each variable.
    pub coefficients: Vec<Vec<Entry>>,
    /// Rows of `G y = h` as sparse `(variable, coefficient)` lists.
    pub equalities: Vec<(Vec<(usize, f64)>, f64)>,
    /// A bound `B` with `|y_k| ≤ B` for every point of interest; enables
    /// rigorous bounds from inexact iterates.
    pub variable_bound: Option<f64>,
}

impl SemidefiniteProgram {
    pub fn new(blocks: Vec<Block>, variables: usize) -> Self {
        SemidefiniteProgram {
            blocks,
            objective: vec![0.0; variables],
            objective_constant: 0.0,
            constant: Vec::new(),
            coefficients: vec![Vec::new(); variables],
            equalities: Vec::new(),
            variable_bound: None,
        }
    }

    pub fn variables(&self) -> usize {
        self.objective.len()
    }

    /// Adds `value` at `(row, col)` of `F_k` (or `F_0` when `var` is `None`).
    pub fn push(&mut self, var: Option<usize>, block: usize, row: usize, col: usize, value: f64) {
        let (row, col) = if row <= col { (row, col) } else { (col, row) };
        let e = Entry { block, row, col, value };
        match var {
            Some(k) => self.coefficients[k].push(e),
            None => self.constant.push(e),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(OptimizeError::MalformedProgram(m));
        if self.coefficients.len() != self.variables() {
            return bad("one coefficient list per variable required".into());
        }
        let check = |e: &Entry| -> bool {
            match self.blocks.get(e.block) {
                None => false,
                Some(b) => {
                    e.row <= e.col
                        && e.col < b.size
                        && (b.kind == BlockKind::Psd || e.row == e.col)
                        && e.value.is_finite()
                }
            }
        };
        if let Some(e) = self.constant.iter().chain(self.coefficients.iter().flatten()).find(|e| !check(e)) {
            return bad(format!("entry {e:?} outside its block"));
        }
        for (row, rhs) in &self.equalities {
            if !rhs.is_finite() || row.iter().any(|(k, v)| *k >= self.variables() || !v.is_finite()) {
                return bad("equality references an unknown variable".into());
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return bad("non-finite objective".into());
        }
        if self.variable_bound.is_some_and(|b| !(b.is_finite() && b >= 0.0)) {
            return bad("variable bound must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Evaluates `F_0 + Σ y_k F_k` as dense blocks.
    pub fn lmi_value(&self, y: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.blocks.iter().map(|b| DMatrix::zeros(b.size, b.size)).collect();
        let mut add = |e: &Entry, w: f64| {
            out[e.block][(e.row, e.col)] += w * e.value;
            if e.row != e.col {
                out[e.block][(e.col, e.row)] += w * e.value;
            }
        };
        for e in &self.constant {
            add(e, 1.0);
        }
        for (k, list) in self.coefficients.iter().enumerate() {
            for e in list {
                add(e, y[k]);
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries = |list: &[Entry]| -> Vec<serde_json::Value> {
            list.iter().map(|e| json!([e.block, e.row, e.col, e.value])).collect()
        };
        json!({
            "kind": "sdp",
            "blocks": self.blocks.iter().map(|b| json!({
                "kind": match b.kind { BlockKind::Psd => "psd", BlockKind::Diagonal => "diag" },
                "size": b.size,
            })).collect::<Vec<_>>(),
            "objective": self.objective,
            "objective_constant": self.objective_constant,
            "constant": entries(&self.constant),
            "coefficients": self.coefficients.iter().map(|l| entries(l)).collect::<Vec<_>>(),
            "equalities": self.equalities.iter().map(|(row, rhs)| json!({"row": row, "rhs": rhs})).collect::<Vec<_>>(),
            "variable_bound": self.variable_bound,
        })
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let bad = |m: &str| OptimizeError::MalformedProgram(m.to_string());
        let blocks = v
            .get("blocks")
            .and_then(|b| b.as_array())
            .ok_or_else(|| bad("missing blocks"))?
            .iter()
            .map(|b| {
                let kind = match b.get("kind").and_then(|k| k.as_str()) {
                    Some("psd") => BlockKind::Psd,
                    Some("diag") => BlockKind::Diagonal,
                    _ => return Err(bad("bad block kind")),
                };
                let size = b.get("size").and_then(|s| s.as_u64()).ok_or_else(|| bad("bad block size"))? as usize;
                Ok(Block { kind, size })
            })
            .collect::<Result<Vec<_>>>()?;
        let floats = |key: &str| -> Result<Vec<f64>> {
            v.get(key)
                .and_then(|o| o.as_array())
                .ok_or_else(|| bad(key))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| bad(key)))
                .collect()
        };
        let parse_entries = |list: &serde_json::Value| -> Result<Vec<Entry>> {
            list.as_array()
                .ok_or_else(|| bad("entries"))?
                .iter()
                .map(|e| {
                    let a = e.as_array().filter(|a| a.len() == 4).ok_or_else(|| bad("entry"))?;
                    let idx = |i: usize| a[i].as_u64().map(|x| x as usize).ok_or_else(|| bad("entry index"));
                    Ok(Entry {
                        block: idx(0)?,
                        row: idx(1)?,
                        col: idx(2)?,
                        value: a[3].as_f64().ok_or_else(|| bad("entry value"))?,
                    })
                })
                .collect()
        };
        let objective = floats("objective")?;
        let mut p = SemidefiniteProgram::new(blocks, objective.len());
        p.objective = objective;
        p.objective_constant = v.get("objective_constant").and_then(|c| c.as_f64()).unwrap_or(0.0);
        p.constant = parse_entries(v.get("constant").ok_or_else(|| bad("constant"))?)?;
        p.coefficients = v
            .get("coefficients")
            .and_then(|c| c.as_array())
            .ok_or_else(|| bad("coefficients"))?
            .iter()
            .map(parse_entries)
            .collect::<Result<_>>()?;
        for eq in v.get("equalities").and_then(|e| e.as_array()).into_iter().flatten() {
            let rhs = eq.get("rhs").and_then(|r| r.as_f64()).ok_or_else(|| bad("equality rhs"))?;
            let row = eq
                .get("row")
                .and_then(|r| r.as_array())
                .ok_or_else(|| bad("equality row"))?
                .iter()
                .map(|pair| {
                    let k = pair.get(0).and_then(|k| k.as_u64()).ok_or_else(|| bad("equality index"))?;
                    let c = pair.get(1).and_then(|c| c.as_f64()).ok_or_else(|| bad("equality coefficient"))?;
                    Ok((k as usize, c))
                })
                .collect::<Result<_>>()?;
            p.equalities.push((row, rhs));
        }
        p.variable_bound = v.get("variable_bound").and_then(|b| b.as_f64());
        p.validate()?;
        Ok(p)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SdpStatus {
    Optimal,
    /// The matrix inequality has no solution.
    Infeasible,
    /// The objective is unbounded above.
    Unbounded,
    MaxIterations,
    /// Progress stopped before the tolerance was met.
    Stalled,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpOptions {
    /// Bound on relative gap and relative residuals.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Infeasibility is declared once the certificate objective exceeds this.
    pub divergence: f64,
    /// Prints one line per iteration to stderr.
    pub verbose: bool,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions { tolerance: 1e-7, max_iterations: 120, divergence: 1e8, verbose: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpSolution {
    pub status: SdpStatus,
    /// `c·y + c0` at the returned point.
    pub objective: f64,
    /// `C•X + c0`: an upper bound on the maximum when `X` is feasible.
    pub upper_bound: f64,
    /// Rigorous upper bound over all feasible points within the variable
    /// box, the best over all iterates; present when the program has one.
    pub certified_bound: Option<f64>,
    /// Relative duality gap.
    pub gap: f64,
    pub y: Vec<f64>,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
    pub iterations: usize,
    /// Number of free variables after eliminating equalities.
    pub reduced_variables: usize,
}

impl SdpSolution {
    /// The rigorous bound when available, else the converged primal value.
    pub fn bound(&self) -> Option<f64> {
        match (self.certified_bound, self.status) {
            (Some(b), SdpStatus::Optimal | SdpStatus::Stalled | SdpStatus::MaxIterations) => Some(b),
            (None, SdpStatus::Optimal) => Some(self.upper_bound),
            _ => None,
        }
    }
}

/// Block-diagonal matrix storage: dense PSD blocks and diagonal vectors.
#[derive(Clone, Debug)]
struct Blocks {
    mats: Vec<DMatrix<f64>>,
    kinds: Vec<BlockKind>,
}

impl Blocks {
    fn zeros(blocks: &[Block]) -> Self {
        Blocks {
            mats: blocks
                .iter()
                .map(|b| match b.kind {
                    BlockKind::Psd => DMatrix::zeros(b.size, b.size),
                    BlockKind::Diagonal => DMatrix::zeros(b.size, 1),
                })
                .collect(),
            kinds: blocks.iter().map(|b| b.kind).collect(),
        }
    }

    fn identity(blocks: &[Block], scale: f64) -> Self {
        let mut z = Blocks::zeros(blocks);
        for (m, b) in z.mats.iter_mut().zip(blocks) {
            for i in 0..b.size {
                match b.kind {
                    BlockKind::Psd => m[(i, i)] = scale,
                    BlockKind::Diagonal => m[(i, 0)] = scale,
                }
            }
        }
        z
    }

    fn dot(&self, other: &Blocks) -> f64 {
        self.mats.iter().zip(&other.mats).map(|(a, b)| a.dot(b)).sum()
    }

    fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    fn axpy(&mut self, w: f64, other: &Blocks) {
        for (a, b) in self.mats.iter_mut().zip(&other.mats) {
            *a += b * w;
        }
    }

    fn scaled(&self, w: f64) -> Blocks {
        Blocks { mats: self.mats.iter().map(|m| m * w).collect(), kinds: self.kinds.clone() }
    }

    fn sub(&self, other: &Blocks) -> Blocks {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    /// Blockwise product; diagonal blocks multiply elementwise.
    fn mul(&self, other: &Blocks) -> Blocks {
        Blocks {
            mats: self
                .mats
                .iter()
                .zip(&other.mats)
                .zip(&self.kinds)
                .map(|((a, b), k)| match k {
                    BlockKind::Psd => a * b,
                    BlockKind::Diagonal => a.component_mul(b),
                })
                .collect(),
            kinds: self.kinds.clone(),
        }
    }

    fn symmetrize(&mut self) {
        for (m, k) in self.mats.iter_mut().zip(&self.kinds) {
            if *k == BlockKind::Psd {
                let t = m.transpose();
                *m += t;
                *m *= 0.5;
            }
        }
    }

    fn inverse(&self) -> Option<Blocks> {
        let mut mats = Vec::with_capacity(self.mats.len());
        for (m, k) in self.mats.iter().zip(&self.kinds) {
            mats.push(match k {
                BlockKind::Psd => {
                    let inv = m.clone().cholesky()?.inverse();
                    (&inv + inv.transpose()) * 0.5
                }
                BlockKind::Diagonal => {
                    if m.iter().any(|v| *v <= 0.0) {
                        return None;
                    }
                    m.map(|v| 1.0 / v)
                }
            });
        }
        Some(Blocks { mats, kinds: self.kinds.clone() })
    }

    fn min_eigenvalue(&self) -> f64 {
        self.mats
            .iter()
            .zip(&self.kinds)
            .map(|(m, k)| match k {
                BlockKind::Psd if m.nrows() > 0 => {
                    SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
                }
                BlockKind::Psd => f64::INFINITY,
                BlockKind::Diagonal => m.iter().copied().fold(f64::INFINITY, f64::min),
            })
            .fold(f64::INFINITY, f64::min)
    }

    fn add_identity(&mut self, w: f64) {
        for (m, k) in self.mats.iter_mut().zip(&self.kinds) {
            match k {
                BlockKind::Psd => {
                    for i in 0..m.nrows() {
                        m[(i, i)] += w;
                    }
                }
                BlockKind::Diagonal => m.add_scalar_mut(w),
            }
        }
    }

    /// Largest `α ≤ cap` keeping `self + α d` positive definite.
    fn max_step(&self, d: &Blocks, cap: f64) -> Option<f64> {
        let mut alpha = cap;
        for ((m, dm), k) in self.mats.iter().zip(&d.mats).zip(&self.kinds) {
            match k {
                BlockKind::Psd => {
                    if m.nrows() == 0 {
                        continue;
                    }
                    let l = m.clone().cholesky()?.l();
                    let li = l.clone().try_inverse()?;
                    let s = &li * dm * li.transpose();
                    let s = (&s + s.transpose()) * 0.5;
                    let lo = SymmetricEigen::new(s).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
                    if lo < 0.0 {
                        alpha = alpha.min(-1.0 / lo);
                    }
                }
                BlockKind::Diagonal => {
                    for (x, dx) in m.iter().zip(dm.iter()) {
                        if *dx < 0.0 {
                            alpha = alpha.min(-x / dx);
                        }
                    }
                }
            }
        }
        Some(alpha)
    }
}

/// `A_i` as expanded sparse entries `(block, p, q, a)`; off-diagonal
/// upper entries appear twice.
struct Operator {
    entries: Vec<Vec<(usize, usize, usize, f64)>>,
}

impl Operator {
    fn new(coeffs: &[Vec<Entry>], sign: f64) -> Self {
        let entries = coeffs
            .iter()
            .map(|list| {
                let mut out = Vec::with_capacity(list.len() * 2);
                for e in list {
                    out.push((e.block, e.row, e.col, sign * e.value));
                    if e.row != e.col {
                        out.push((e.block, e.col, e.row, sign * e.value));
                    }
                }
                out
            })
            .collect();
        Operator { entries }
    }

    fn m(&self) -> usize {
        self.entries.len()
    }

    /// `A_i • W = tr(A_i W)` for every `i`.
    fn apply(&self, w: &Blocks) -> Vec<f64> {
        self.entries
            .iter()
            .map(|list| {
                list.iter()
                    .map(|&(b, p, q, a)| match w.kinds[b] {
                        BlockKind::Psd => a * w.mats[b][(q, p)],
                        BlockKind::Diagonal => a * w.mats[b][(p, 0)],
                    })
                    .sum()
            })
            .collect()
    }

    /// `Σ_i y_i A_i`.
    fn adjoint(&self, y: &[f64], blocks: &[Block]) -> Blocks {
        let mut out = Blocks::zeros(blocks);
        for (list, &yi) in self.entries.iter().zip(y) {
            if yi == 0.0 {
                continue;
            }
            for &(b, p, q, a) in list {
                match out.kinds[b] {
                    BlockKind::Psd => out.mats[b][(p, q)] += yi * a,
                    BlockKind::Diagonal => out.mats[b][(p, 0)] += yi * a,
                }
            }
        }
        out
    }

    /// Row-major Gram matrix `A_i • A_j`.
    fn gram(&self) -> Vec<f64> {
        let m = self.m();
        let mut at: HashMap<(usize, usize, usize), Vec<(usize, f64)>> = HashMap::new();
        for (i, list) in self.entries.iter().enumerate() {
            for &(b, p, q, a) in list {
                at.entry((b, p, q)).or_default().push((i, a));
            }
        }
        let mut g = vec![0.0; m * m];
        for users in at.values() {
            for &(i, a) in users {
                for &(j, c) in users {
                    g[i * m + j] += a * c;
                }
            }
        }
        g
    }

    fn norms(&self) -> Vec<f64> {
        self.entries.iter().map(|l| l.iter().map(|e| e.3 * e.3).sum::<f64>().sqrt()).collect()
    }

    /// Schur complement `M_ij = tr(A_i X A_j Z⁻¹)` (row-major, full).
    fn schur(&self, x: &Blocks, zinv: &Blocks) -> Vec<f64> {
        let m = self.m();
        let mut out = vec![0.0; m * m];
        // per block: column support of each A_j
        for j in 0..m {
            let list = &self.entries[j];
            if list.is_empty() {
                continue;
            }
            // W_j = X A_j Z⁻¹ restricted to blocks touched by A_j.
            let mut touched: Vec<usize> = list.iter().map(|e| e.0).collect();
            touched.sort_unstable();
            touched.dedup();
            let mut w: Vec<Option<DMatrix<f64>>> = vec![None; x.mats.len()];
            for &b in &touched {
                match x.kinds[b] {
                    BlockKind::Psd => {
                        let n = x.mats[b].nrows();
                        let mut t = DMatrix::<f64>::zeros(n, n);
                        let mut cols: Vec<usize> = Vec::new();
                        for &(bb, r, s, a) in list {
                            if bb != b {
                                continue;
                            }
                            // (X A)[:, s] += a X[:, r]
                            let xr = x.mats[b].column(r).into_owned();
                            t.column_mut(s).axpy(a, &xr, 1.0);
                            cols.push(s);
                        }
                        cols.sort_unstable();
                        cols.dedup();
                        let mut wb = DMatrix::<f64>::zeros(n, n);
                        for &s in &cols {
                            let ts = t.column(s).into_owned();
                            let zrow = zinv.mats[b].row(s).into_owned();
                            // wb += ts * zrow
                            wb.ger(1.0, &ts, &zrow.transpose(), 1.0);
                        }
                        w[b] = Some(wb);
                    }
                    BlockKind::Diagonal => {
                        let n = x.mats[b].nrows();
                        let mut d = DMatrix::<f64>::zeros(n, 1);
                        for &(bb, r, _, a) in list {
                            if bb == b {
                                d[(r, 0)] += a * x.mats[b][(r, 0)] * zinv.mats[b][(r, 0)];
                            }
                        }
                        w[b] = Some(d);
                    }
                }
            }
            for i in 0..=j {
                let mut s = 0.0;
                for &(b, p, q, a) in &self.entries[i] {
                    if let Some(wb) = &w[b] {
                        s += match x.kinds[b] {
                            BlockKind::Psd => a * wb[(q, p)],
                            BlockKind::Diagonal => a * wb[(p, 0)],
                        };
                    }
                }
                out[i * m + j] = s;
                out[j * m + i] = s;
            }
        }
        out
    }
}

/// Equality elimination `y = y0 + N t`.
struct Reduction {
    y0: Vec<f64>,
    /// For each free variable `t_j`: the sparse column `N_{·j}`.
    columns: Vec<Vec<(usize, f64)>>,
}

fn eliminate(p: &SemidefiniteProgram) -> std::result::Result<Reduction, ()> {
    let m = p.variables();
    let e = p.equalities.len();
    let mut g = vec![0.0; e * m];
    let mut h = vec![0.0; e];
    for (i, (row, rhs)) in p.equalities.iter().enumerate() {
        for &(k, v) in row {
            g[i * m + k] += v;
        }
        h[i] = *rhs;
    }
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let tol = 1e-10 * scale;
    let mut pivot_of_row: Vec<Option<usize>> = vec![None; e];
    let mut is_pivot = vec![false; m];
    for i in 0..e {
        let (col, best) = (0..m)
            .filter(|&k| !is_pivot[k])
            .map(|k| (k, g[i * m + k].abs()))
            .fold((usize::MAX, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            for k in 0..m {
                g[i * m + k] = 0.0;
            }
            if h[i].abs() > 1e-9 * (1.0 + h.iter().fold(0.0f64, |a, v| a.max(v.abs()))) {
                return Err(());
            }
            continue;
        }
        let pv = g[i * m + col];
        for k in 0..m {
            g[i * m + k] /= pv;
        }
        h[i] /= pv;
        for r in 0..e {
            if r == i {
                continue;
            }
            let f = g[r * m + col];
            if f == 0.0 {
                continue;
            }
            for k in 0..m {
                let v = g[i * m + k];
                if v != 0.0 {
                    g[r * m + k] -= f * v;
                }
            }
            h[r] -= f * h[i];
            g[r * m + col] = 0.0;
        }
        pivot_of_row[i] = Some(col);
        is_pivot[col] = true;
    }
    let mut y0 = vec![0.0; m];
    for (i, pc) in pivot_of_row.iter().enumerate() {
        if let Some(c) = pc {
            y0[*c] = h[i];
        }
    }
    let mut columns = Vec::new();
    for k in (0..m).filter(|&k| !is_pivot[k]) {
        let mut col = vec![(k, 1.0)];
        for (i, pc) in pivot_of_row.iter().enumerate() {
            if let Some(c) = pc {
                let v = g[i * m + k];
                if v.abs() > 1e-14 {
                    col.push((*c, -v));
                }
            }
        }
        columns.push(col);
    }
    Ok(Reduction { y0, columns })
}

fn merge_entries(list: Vec<Entry>) -> Vec<Entry> {
    let mut list = list;
    list.sort_by_key(|a| (a.block, a.row, a.col));
    let mut out: Vec<Entry> = Vec::with_capacity(list.len());
    for e in list {
        match out.last_mut() {
            Some(last) if (last.block, last.row, last.col) == (e.block, e.row, e.col) => last.value += e.value,
            _ => out.push(e),
        }
    }
    out.retain(|e| e.value.abs() > 1e-14);
    out
}

pub fn solve_sdp(p: &SemidefiniteProgram, opts: &SdpOptions) -> Result<SdpSolution> {
    p.validate()?;
    let Ok(red) = eliminate(p) else {
        return Ok(SdpSolution {
            status: SdpStatus::Infeasible,
            objective: f64::NAN,
            upper_bound: f64::NAN,
            certified_bound: None,
            gap: f64::NAN,
            y: vec![0.0; p.variables()],
            primal_infeasibility: f64::NAN,
            dual_infeasibility: f64::NAN,
            iterations: 0,
            reduced_variables: 0,
        });
    };
    let mut c0 = p.constant.clone();
    for (k, list) in p.coefficients.iter().enumerate() {
        if red.y0[k] != 0.0 {
            c0.extend(list.iter().map(|e| Entry { value: e.value * red.y0[k], ..*e }));
        }
    }
    let c0 = merge_entries(c0);
    let mut fs = Vec::with_capacity(red.columns.len());
    let mut b = Vec::with_capacity(red.columns.len());
    for col in &red.columns {
        let mut list = Vec::new();
        let mut bj = 0.0;
        for &(k, w) in col {
            list.extend(p.coefficients[k].iter().map(|e| Entry { value: e.value * w, ..*e }));
            bj += w * p.objective[k];
        }
        fs.push(merge_entries(list));
        b.push(bj);
    }
    let constant = p.objective_constant + p.objective.iter().zip(&red.y0).map(|(c, y)| c * y).sum::<f64>();
    let ops = Operator::new(&fs, -1.0);
    let mut cmat = Blocks::zeros(&p.blocks);
    for e in &c0 {
        match p.blocks[e.block].kind {
            BlockKind::Psd => {
                cmat.mats[e.block][(e.row, e.col)] += e.value;
                if e.row != e.col {
                    cmat.mats[e.block][(e.col, e.row)] += e.value;
                }
            }
            BlockKind::Diagonal => cmat.mats[e.block][(e.row, 0)] += e.value,
        }
    }
    // Each free coordinate is one of the original variables, so the box
    // carries over unchanged.
    let t = ipm(&p.blocks, &cmat, &ops, &b, p.variable_bound, opts)?;
    let mut y = red.y0.clone();
    for (col, tj) in red.columns.iter().zip(&t.y) {
        for &(k, w) in col {
            y[k] += w * tj;
        }
    }
    Ok(SdpSolution {
        status: t.status,
        objective: t.dobj + constant,
        upper_bound: t.pobj + constant,
        certified_bound: t.certified.map(|v| v + constant),
        gap: t.gap,
        y,
        primal_infeasibility: t.pinf,
        dual_infeasibility: t.dinf,
        iterations: t.iterations,
        reduced_variables: red.columns.len(),
    })
}

/// Solves `M d = r` with the (possibly regularised) factor of `M`, then
/// refines against `M` itself.
fn refined_solve(mat: &[f64], fac: &[f64], m: usize, rhs: &[f64]) -> Vec<f64> {
    let mut d = rhs.to_vec();
    cholesky_solve(fac, m, &mut d);
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut best = f64::INFINITY;
    for _ in 0..REFINEMENT_STEPS {
        let mut r: Vec<f64> = rhs.to_vec();
        for i in 0..m {
            let row = &mat[i * m..(i + 1) * m];
            r[i] -= row.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        }
        let rn = norm(&r);
        if rn >= best || rn <= 1e-15 * (1.0 + norm(rhs)) {
            break;
        }
        best = rn;
        cholesky_solve(fac, m, &mut r);
        for (di, ci) in d.iter_mut().zip(&r) {
            *di += ci;
        }
    }
    d
}

const REFINEMENT_STEPS: usize = 5;

/// Rigorous bounds from any `X ⪰ 0` when every feasible point satisfies
/// `|t_j| ≤ B`: `b·t ≤ C•X + B‖b − A(X)‖₁`. The iterate is first moved onto
/// `A(X) = b` by a least-norm correction and shifted back into the cone.
struct Certifier<'a> {
    ops: &'a Operator,
    blocks: &'a [Block],
    bound: f64,
    gram: Option<Vec<f64>>,
}

impl<'a> Certifier<'a> {
    fn new(ops: &'a Operator, blocks: &'a [Block], bound: f64) -> Self {
        let m = ops.m();
        let mut g = ops.gram();
        let gram = cholesky_in_place(&mut g, m).ok().map(|_| g);
        Certifier { ops, blocks, bound, gram }
    }

    fn residual_bound(&self, c: &Blocks, x: &Blocks, b: &[f64]) -> f64 {
        let ax = self.ops.apply(x);
        c.dot(x) + self.bound * b.iter().zip(&ax).map(|(bi, ai)| (bi - ai).abs()).sum::<f64>()
    }

    fn bound(&self, c: &Blocks, x: &Blocks, b: &[f64]) -> f64 {
        let raw = self.residual_bound(c, x, b);
        let Some(g) = &self.gram else { return raw };
        let ax = self.ops.apply(x);
        let mut w: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        cholesky_solve(g, self.ops.m(), &mut w);
        let mut xp = x.clone();
        xp.axpy(1.0, &self.ops.adjoint(&w, self.blocks));
        xp.symmetrize();
        let lo = xp.min_eigenvalue();
        if lo < 0.0 {
            xp.add_identity(-lo * (1.0 + 1e-12));
        }
        raw.min(self.residual_bound(c, &xp, b))
    }
}

/// Iterations without a 10% improvement of the worst residual before the
/// solver gives up.
const STALL_WINDOW: usize = 10;

struct IpmResult {
    status: SdpStatus,
    y: Vec<f64>,
    pobj: f64,
    dobj: f64,
    certified: Option<f64>,
    gap: f64,
    pinf: f64,
    dinf: f64,
    iterations: usize,
}

fn ipm(
    blocks: &[Block],
    c: &Blocks,
    ops: &Operator,
    b: &[f64],
    bound: Option<f64>,
    opts: &SdpOptions,
) -> Result<IpmResult> {
    let m = ops.m();
    let n_total: usize = blocks.iter().map(|b| b.size).sum();
    let norms = ops.norms();
    let cnorm = c.norm();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nf = n_total as f64;
    let alpha0 = (0..m).map(|i| nf * (1.0 + b[i].abs()) / (1.0 + norms[i])).fold(nf.sqrt().max(10.0), f64::max);
    let beta0 = (1.0 + norms.iter().copied().fold(cnorm, f64::max)) / nf.sqrt();
    let beta0 = beta0.max(10.0).max(nf.sqrt());
    let mut x = Blocks::identity(blocks, alpha0);
    let mut z = Blocks::identity(blocks, beta0);
    let mut y = vec![0.0; m];

    let certifier = bound.map(|bb| Certifier::new(ops, blocks, bb));
    let mut certified: Option<f64> = None;
    let mut best_merit = f64::INFINITY;
    let mut best_progress = f64::INFINITY;
    let mut best_ray = 0.0f64;
    let mut since_progress = 0;
    let mut result = IpmResult {
        status: SdpStatus::MaxIterations,
        y: y.clone(),
        pobj: f64::NAN,
        dobj: f64::NAN,
        certified,
        gap: f64::NAN,
        pinf: f64::NAN,
        dinf: f64::NAN,
        iterations: 0,
    };
    let stalled = |mut r: IpmResult, why: &str, verbose: bool| {
        if verbose {
            eprintln!("sdp: stopping, {why}");
        }
        r.status = SdpStatus::Stalled;
        Ok(r)
    };
    for iter in 0..=opts.max_iterations {
        let ax = ops.apply(&x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let aty = ops.adjoint(&y, blocks);
        let rd = c.sub(&z).sub(&aty);
        let pobj = c.dot(&x);
        let dobj: f64 = b.iter().zip(&y).map(|(bi, yi)| bi * yi).sum();
        if !(pobj.is_finite() && dobj.is_finite()) {
            return stalled(result, "non-finite iterate", opts.verbose);
        }
        let mu = x.dot(&z) / nf;
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        let pinf = rp.iter().map(|v| v * v).sum::<f64>().sqrt() / (1.0 + bnorm);
        let dinf = rd.norm() / (1.0 + cnorm);
        // For X ⪰ 0 and any feasible t in the box: b·t ≤ C•X + B‖b − A(X)‖₁,
        // and feasibility forces C•X + B‖A(X)‖₁ ≥ 0.
        if let Some(cf) = &certifier {
            let cert = cf.bound(c, &x, b);
            certified = Some(certified.map_or(cert, |c: f64| c.min(cert)));
            if pobj + cf.bound * ax.iter().map(|v| v.abs()).sum::<f64>() < 0.0 {
                result = IpmResult {
                    status: SdpStatus::Infeasible,
                    y,
                    pobj,
                    dobj,
                    certified,
                    gap,
                    pinf,
                    dinf,
                    iterations: iter,
                };
                return Ok(result);
            }
        }
        let current = IpmResult {
            status: SdpStatus::MaxIterations,
            y: y.clone(),
            pobj,
            dobj,
            certified,
            gap,
            pinf,
            dinf,
            iterations: iter,
        };
        let merit = gap.max(pinf).max(dinf);
        if merit <= best_merit || result.pobj.is_nan() {
            result = current;
        } else {
            result.certified = certified;
            result.iterations = iter;
        }
        if opts.verbose {
            eprintln!(
                "{iter:3} pobj={pobj:+.9e} dobj={dobj:+.9e} gap={gap:.1e} pinf={pinf:.1e} dinf={dinf:.1e} mu={mu:.1e}"
            );
        }
        if merit <= opts.tolerance {
            result.status = SdpStatus::Optimal;
            return Ok(result);
        }
        // X along a ray with A(X) bounded and C•X → −∞ certifies an empty LMI.
        if -pobj > opts.divergence && ax.iter().map(|v| v * v).sum::<f64>().sqrt() / (-pobj) < 1e-6 {
            return Ok(IpmResult {
                status: SdpStatus::Infeasible,
                y,
                pobj,
                dobj,
                certified,
                gap,
                pinf,
                dinf,
                iterations: iter,
            });
        }
        if dobj > opts.divergence && dinf * (1.0 + cnorm) / dobj < 1e-6 {
            return Ok(IpmResult {
                status: SdpStatus::Unbounded,
                y,
                pobj,
                dobj,
                certified,
                gap,
                pinf,
                dinf,
                iterations: iter,
            });
        }
        // growth of -C•X relative to A(X) is progress towards an infeasibility certificate
        let ray = -pobj / (1.0 + ax.iter().map(|v| v.abs()).sum::<f64>());
        // The relative gap saturates near 1 while C•X is still large, so
        // progress is judged on the gap scaled by the smaller objective.
        let scaled_gap = (pobj - dobj).abs() / (1.0 + pobj.abs().min(dobj.abs()));
        let progress = scaled_gap.max(pinf).max(dinf);
        if merit < 0.9 * best_merit || progress < 0.9 * best_progress || ray > 1.1 * best_ray.max(1e-3) {
            best_merit = best_merit.min(merit);
            best_progress = best_progress.min(progress);
            best_ray = best_ray.max(ray);
            since_progress = 0;
        } else {
            since_progress += 1;
            if since_progress >= STALL_WINDOW {
                return stalled(result, "no progress", opts.verbose);
            }
        }
        if iter == opts.max_iterations {
            break;
        }
        let Some(zinv) = z.inverse() else {
            return stalled(result, "dual slack lost definiteness", opts.verbose);
        };
        let schur = ops.schur(&x, &zinv);
        let diag_max = (0..m).map(|i| schur[i * m + i]).fold(0.0f64, f64::max);
        let mut reg = 0.0;
        let mut fac = schur.clone();
        while cholesky_in_place(&mut fac, m).is_err() {
            reg = if reg == 0.0 { 1e-13 * diag_max.max(1e-300) } else { reg * 100.0 };
            if reg > 1e-3 * diag_max.max(1.0) {
                return stalled(result, "Schur complement not positive definite", opts.verbose);
            }
            fac.copy_from_slice(&schur);
            for i in 0..m {
                fac[i * m + i] += reg;
            }
        }

        let x_rd_zinv = x.mul(&rd).mul(&zinv);
        let a_xrdz = ops.apply(&x_rd_zinv);
        let a_zinv = ops.apply(&zinv);

        let direction = |sigma: f64, corr: Option<&Blocks>| -> (Vec<f64>, Blocks, Blocks) {
            let a_corr = corr.map(|k| ops.apply(k));
            let rhs: Vec<f64> = (0..m)
                .map(|i| b[i] - sigma * mu * a_zinv[i] + a_xrdz[i] + a_corr.as_ref().map_or(0.0, |v| v[i]))
                .collect();
            let dy = refined_solve(&schur, &fac, m, &rhs);
            let dz = rd.sub(&ops.adjoint(&dy, blocks));
            let mut dx = zinv.scaled(sigma * mu);
            dx.axpy(-1.0, &x);
            dx.axpy(-1.0, &x.mul(&dz).mul(&zinv));
            if let Some(k) = corr {
                dx.axpy(-1.0, k);
            }
            dx.symmetrize();
            (dy, dx, dz)
        };

        // predictor
        let (_, dx_a, dz_a) = direction(0.0, None);
        let ap = x.max_step(&dx_a, 1.0).unwrap_or(0.0);
        let ad = z.max_step(&dz_a, 1.0).unwrap_or(0.0);
        let mut xa = x.clone();
        xa.axpy(ap, &dx_a);
        let mut za = z.clone();
        za.axpy(ad, &dz_a);
        let mu_aff = xa.dot(&za) / nf;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        // corrector
        let corr = dx_a.mul(&dz_a).mul(&zinv);
        let (dy, dx, dz) = direction(sigma, Some(&corr));
        let gamma = 0.9 + 0.09 * (1.0 - sigma).min(1.0);
        let ap = x.max_step(&dx, f64::INFINITY).map(|a| (gamma * a).min(1.0)).unwrap_or(0.0);
        let ad = z.max_step(&dz, f64::INFINITY).map(|a| (gamma * a).min(1.0)).unwrap_or(0.0);
        if ap < 1e-12 && ad < 1e-12 {
            return stalled(result, "step length collapsed", opts.verbose);
        }
        x.axpy(ap, &dx);
        z.axpy(ad, &dz);
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn psd(size: usize) -> Block {
        Block { kind: BlockKind::Psd, size }
    }

    #[test]
    fn two_by_two_eigenvalue_condition() {
        // maximise −t s.t. [[t,1],[1,t]] ⪰ 0
        let mut p = SemidefiniteProgram::new(vec![psd(2)], 1);
        p.objective[0] = -1.0;
        p.push(Some(0), 0, 0, 0, 1.0);
        p.push(Some(0), 0, 1, 1, 1.0);
        p.push(None, 0, 0, 1, 1.0);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.y[0] - 1.0).abs() < 1e-7, "{s:?}");
        assert!(s.gap <= 1e-7);
    }

    #[test]
    fn largest_eigenvalue() {
        // minimise λ s.t. λI − W ⪰ 0, posed as maximise −λ
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 6;
        let mut w = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = rng.gen_range(-1.0..1.0);
                w[(i, j)] = v;
                w[(j, i)] = v;
            }
        }
        let mut p = SemidefiniteProgram::new(vec![psd(n)], 1);
        p.objective[0] = -1.0;
        for i in 0..n {
            p.push(Some(0), 0, i, i, 1.0);
            for j in i..n {
                p.push(None, 0, i, j, -w[(i, j)]);
            }
        }
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        let top = SymmetricEigen::new(w).eigenvalues.iter().copied().fold(f64::MIN, f64::max);
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((-s.objective - top).abs() < 1e-6, "{} vs {}", -s.objective, top);
    }

    /// Level-1 moment matrix over `(1, A0, A1, B0, B1)` with ±1 observables.
    fn chsh_level1() -> SemidefiniteProgram {
        // variables: E00 E01 E10 E11 (A_x B_y), a01 (A0A1), b01 (B0B1)
        let mut p = SemidefiniteProgram::new(vec![psd(5)], 6);
        for i in 0..5 {
            p.push(None, 0, i, i, 1.0);
        }
        for x in 0..2 {
            for y in 0..2 {
                p.push(Some(2 * x + y), 0, 1 + x, 3 + y, 1.0);
            }
        }
        p.push(Some(4), 0, 1, 2, 1.0);
        p.push(Some(5), 0, 3, 4, 1.0);
        p.objective = vec![1.0, 1.0, 1.0, -1.0, 0.0, 0.0];
        p
    }

    #[test]
    fn chsh_level_one_calibration() {
        let s = solve_sdp(&chsh_level1(), &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective - 2.0 * 2f64.sqrt()).abs() < 1e-5);
        assert!(s.upper_bound + 1e-7 >= s.objective);
        assert!(s.gap <= 1e-7);
    }

    #[test]
    fn equalities_are_eliminated() {
        // force E00 = E01 = E10 = −E11 = t: still 2√2
        let mut p = chsh_level1();
        p.equalities.push((vec![(0, 1.0), (1, -1.0)], 0.0));
        p.equalities.push((vec![(0, 1.0), (2, -1.0)], 0.0));
        p.equalities.push((vec![(0, 1.0), (3, 1.0)], 0.0));
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Optimal);
        assert!((s.objective - 2.0 * 2f64.sqrt()).abs() < 1e-5);
        assert_eq!(s.reduced_variables, 3);
    }

    #[test]
    fn detects_infeasible_lmi() {
        // E00 + E01 + E10 − E11 = 3.5 exceeds the quantum maximum
        let mut p = chsh_level1();
        p.equalities.push((vec![(0, 1.0), (1, 1.0), (2, 1.0), (3, -1.0)], 3.5));
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible, "{s:?}");
    }

    #[test]
    fn inconsistent_equalities_are_infeasible() {
        let mut p = chsh_level1();
        p.equalities.push((vec![(0, 1.0)], 0.5));
        p.equalities.push((vec![(0, 2.0)], 0.2));
        assert_eq!(solve_sdp(&p, &SdpOptions::default()).unwrap().status, SdpStatus::Infeasible);
    }

    #[test]
    fn diagonal_block_acts_as_lp() {
        // maximise y s.t. 1 − y ≥ 0, y ≥ 0 → 1
        let mut p = SemidefiniteProgram::new(vec![Block { kind: BlockKind::Diagonal, size: 2 }], 1);
        p.objective[0] = 1.0;
        p.push(None, 0, 0, 0, 1.0);
        p.push(Some(0), 0, 0, 0, -1.0);
        p.push(Some(0), 0, 1, 1, 1.0);
        let s = solve_sdp(&p, &SdpOptions::default()).unwrap();
        assert!((s.objective - 1.0).abs() < 1e-6);
    }

    #[test]
    fn json_round_trip() {
        let mut p = chsh_level1();
        p.equalities.push((vec![(0, 1.0)], 0.25));
        assert_eq!(SemidefiniteProgram::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn deterministic() {
        let a = solve_sdp(&chsh_level1(), &SdpOptions::default()).unwrap();
        let b = solve_sdp(&chsh_level1(), &SdpOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
