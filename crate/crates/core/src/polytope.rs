//! Causal polytopes in full-correlator space.
//!
//! Vertices come from the deterministic response functions allowed by each
//! causal model; facets come from an exact double description conversion.
//! Tripartite correlators `E_xyz` sit at index `x + 2y + 4z`, bipartite ones
//! at `x + 2y`.
//!
//! # Double description
//!
//! The facets `a·x ≤ β` of `conv(V)` are the extreme rays of the cone
//! `{(β, a) : β - a·v ≥ 0 for all v ∈ V}`. Rays are kept as primitive integer
//! vectors. The initial simplicial cone uses the lexicographically first
//! linearly independent constraints; the remaining constraints are inserted
//! in lexicographic vertex order, with the combinatorial adjacency test.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::behavior::Behavior;
use crate::inequality::{correlators, svetlichny3};
use crate::num::{qi, Rational, Value};
use crate::optimize::lp::{solve_lp, LinearProgram, RowKind};
use crate::optimize::{OptimizeError, Sense, Status};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolytopeError {
    #[error("points span an affine space of dimension {affine}, expected {dimension}")]
    NotFullDimensional { affine: usize, dimension: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("empty vertex set")]
    Empty,
    #[error("inequality system does not describe a bounded polytope")]
    Unbounded,
    #[error("integer overflow in exact arithmetic")]
    Overflow,
    #[error("unknown causal model '{0}'")]
    UnknownModel(String),
    #[error("behavior is not a binary tripartite table: {0}")]
    Behavior(String),
    #[error("malformed facet JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
}

pub type Result<T> = std::result::Result<T, PolytopeError>;

/// Which settings each receiver may see in a deterministic strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CausalModel {
    /// Standard tripartite Bell scenario: `a(x)`, `b(y)`, `c(z)`.
    Local,
    /// Alice may broadcast her input: `a(x)`, `b(x, y)`, `c(x, z)`.
    UntrustedAlice,
    /// Bob may broadcast his input: `a(x, y)`, `b(y)`, `c(y, z)`.
    UntrustedBob,
    /// Convex hull of the two untrusted-receiver models.
    Either,
}

impl CausalModel {
    pub fn label(self) -> &'static str {
        match self {
            CausalModel::Local => "local",
            CausalModel::UntrustedAlice => "alice",
            CausalModel::UntrustedBob => "bob",
            CausalModel::Either => "either",
        }
    }

    /// Parent settings of each party's output (0 = x, 1 = y, 2 = z), or
    /// `None` for the union model.
    pub fn parents(self) -> Option<[&'static [usize]; 3]> {
        match self {
            CausalModel::Local => Some([&[0], &[1], &[2]]),
            CausalModel::UntrustedAlice => Some([&[0], &[0, 1], &[0, 2]]),
            CausalModel::UntrustedBob => Some([&[0, 1], &[1], &[1, 2]]),
            CausalModel::Either => None,
        }
    }

    /// The single-DAG models whose vertices make up this model.
    pub fn components(self) -> Vec<CausalModel> {
        match self {
            CausalModel::Either => vec![CausalModel::UntrustedAlice, CausalModel::UntrustedBob],
            m => vec![m],
        }
    }
}

impl fmt::Display for CausalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CausalModel {
    type Err = PolytopeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local" => Ok(CausalModel::Local),
            "alice" => Ok(CausalModel::UntrustedAlice),
            "bob" => Ok(CausalModel::UntrustedBob),
            "either" => Ok(CausalModel::Either),
            other => Err(PolytopeError::UnknownModel(other.to_string())),
        }
    }
}

/// A deterministic strategy of one single-DAG causal model.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DeterministicStrategy {
    pub model: CausalModel,
    /// `responses[k][j]`: output of party `k` on the `j`-th assignment of
    /// its parent settings (first parent fastest).
    pub responses: [Vec<u8>; 3],
}

impl DeterministicStrategy {
    pub fn outputs(&self, settings: [usize; 3]) -> [u8; 3] {
        let parents = self.model.parents().expect("strategies belong to single-DAG models");
        let mut out = [0u8; 3];
        for k in 0..3 {
            let j = parents[k].iter().enumerate().fold(0, |acc, (i, &p)| acc | (settings[p] << i));
            out[k] = self.responses[k][j];
        }
        out
    }

    /// Full correlators `(-1)^{a+b+c}` at index `x + 2y + 4z`.
    pub fn correlators(&self) -> Vec<i64> {
        (0..8)
            .map(|s| {
                let o = self.outputs([s & 1, (s >> 1) & 1, (s >> 2) & 1]);
                if (o[0] ^ o[1] ^ o[2]) & 1 == 0 {
                    1
                } else {
                    -1
                }
            })
            .collect()
    }
}

/// All deterministic strategies of a model, before projection. The union
/// model lists the strategies of both components.
pub fn enumerate_strategies(model: CausalModel) -> Vec<DeterministicStrategy> {
    let mut out = Vec::new();
    for m in model.components() {
        let parents = m.parents().expect("single-DAG component");
        let tables: Vec<Vec<Vec<u8>>> = parents.iter().map(|p| response_tables(1 << p.len())).collect();
        for a in &tables[0] {
            for b in &tables[1] {
                for c in &tables[2] {
                    out.push(DeterministicStrategy { model: m, responses: [a.clone(), b.clone(), c.clone()] });
                }
            }
        }
    }
    out
}

/// Every binary function on `inputs` points, as output tables.
fn response_tables(inputs: usize) -> Vec<Vec<u8>> {
    (0..1usize << inputs).map(|f| (0..inputs).map(|j| ((f >> j) & 1) as u8).collect()).collect()
}

/// A polytope given by its vertices, with the models that produced each.
#[derive(Clone, Debug, PartialEq)]
pub struct VRep {
    pub dimension: usize,
    /// Distinct points in lexicographic order.
    pub vertices: Vec<Vec<Rational>>,
    pub provenance: Vec<Vec<CausalModel>>,
}

impl VRep {
    /// Deduplicates and sorts the points, merging their provenance.
    pub fn new(dimension: usize, points: Vec<(Vec<Rational>, CausalModel)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<Rational>, BTreeSet<CausalModel>> = BTreeMap::new();
        for (p, m) in points {
            if p.len() != dimension {
                return Err(PolytopeError::DimensionMismatch { expected: dimension, found: p.len() });
            }
            merged.entry(p).or_default().insert(m);
        }
        let (vertices, provenance) = merged.into_iter().map(|(p, ms)| (p, ms.into_iter().collect())).unzip();
        Ok(VRep { dimension, vertices, provenance })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains_vertex(&self, p: &[Rational]) -> bool {
        self.vertices.binary_search_by(|v| v.as_slice().cmp(p)).is_ok()
    }

    /// Dimension of the affine hull.
    pub fn affine_dimension(&self) -> usize {
        let rows: Vec<Vec<Rational>> = self.vertices.iter().map(|v| homogenize(v)).collect();
        rank(&rows).saturating_sub(1)
    }

    pub fn centroid(&self) -> Vec<Rational> {
        let n = qi(self.len() as i64);
        (0..self.dimension).map(|i| self.vertices.iter().fold(Rational::zero(), |acc, v| acc + &v[i]) / &n).collect()
    }
}

/// Projects strategies to correlator space and deduplicates.
pub fn project_correlators(strategies: &[DeterministicStrategy]) -> VRep {
    let points: Vec<(Vec<Rational>, CausalModel)> =
        strategies.par_iter().map(|s| (s.correlators().into_iter().map(qi).collect(), s.model)).collect();
    VRep::new(8, points).expect("correlator vectors have dimension 8")
}

/// The correlator polytope of a causal model.
pub fn enumerate_vertices(model: CausalModel) -> VRep {
    project_correlators(&enumerate_strategies(model))
}

/// Local polytope of the two-party, two-setting scenario in the
/// 4-dimensional space of `E_xy`.
pub fn bipartite_local_vertices() -> VRep {
    let mut points = Vec::new();
    for f in response_tables(2) {
        for g in response_tables(2) {
            let e = (0..4).map(|s| if (f[s & 1] ^ g[s >> 1]) == 0 { qi(1) } else { qi(-1) }).collect();
            points.push((e, CausalModel::Local));
        }
    }
    VRep::new(4, points).expect("dimension 4")
}

/// Facet inequality `normal·x ≤ offset` with coprime integer entries.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Facet {
    pub normal: Vec<i64>,
    pub offset: i64,
}

impl Facet {
    /// Scales to coprime integers, keeping the direction of the inequality.
    pub fn canonical(normal: &[Rational], offset: &Rational) -> Result<Facet> {
        let all: Vec<&Rational> = normal.iter().chain(std::iter::once(offset)).collect();
        let lcm = all.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let ints: Vec<BigInt> = all.iter().map(|r| (r.numer() * &lcm) / r.denom()).collect();
        let g = ints.iter().fold(BigInt::zero(), |acc, v| acc.gcd(v));
        let g = if g.is_zero() { BigInt::one() } else { g };
        let mut out = Vec::with_capacity(ints.len());
        for v in ints {
            out.push((v / &g).to_i64().ok_or(PolytopeError::Overflow)?);
        }
        let offset = out.pop().expect("offset present");
        Ok(Facet { normal: out, offset })
    }

    pub fn dimension(&self) -> usize {
        self.normal.len()
    }

    /// A facet is trivial when it bounds a single correlator.
    pub fn is_trivial(&self) -> bool {
        self.normal.iter().filter(|&&c| c != 0).count() == 1
    }

    pub fn value(&self, point: &[Rational]) -> Rational {
        self.normal.iter().zip(point).fold(Rational::zero(), |acc, (&c, x)| acc + qi(c) * x)
    }

    /// `normal·point - offset`; positive means violated.
    pub fn violation(&self, point: &[Rational]) -> Rational {
        self.value(point) - qi(self.offset)
    }

    pub fn is_satisfied_by(&self, point: &[Rational]) -> bool {
        !self.violation(point).is_positive()
    }

    pub fn is_tight_at(&self, point: &[Rational]) -> bool {
        self.violation(point).is_zero()
    }

    /// Number of affinely independent vertices of `v` on this facet.
    pub fn support_rank(&self, v: &VRep) -> usize {
        let rows: Vec<Vec<Rational>> =
            v.vertices.iter().filter(|p| self.is_tight_at(p)).map(|p| homogenize(p)).collect();
        rank(&rows)
    }
}

impl fmt::Display for Facet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &c) in self.normal.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let sign = if c < 0 {
                "-"
            } else if first {
                ""
            } else {
                "+"
            };
            let mag = if c.abs() == 1 { String::new() } else { c.abs().to_string() };
            let sep = if first { "" } else { " " };
            write!(f, "{sep}{sign}{mag}E{i}")?;
            first = false;
        }
        if first {
            f.write_str("0")?;
        }
        write!(f, " <= {}", self.offset)
    }
}

/// A polytope given by canonical facet inequalities in sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HRep {
    pub dimension: usize,
    pub facets: Vec<Facet>,
}

impl HRep {
    pub fn new(dimension: usize, facets: Vec<Facet>) -> Result<Self> {
        for f in &facets {
            if f.dimension() != dimension {
                return Err(PolytopeError::DimensionMismatch { expected: dimension, found: f.dimension() });
            }
        }
        let facets: BTreeSet<Facet> = facets.into_iter().collect();
        Ok(HRep { dimension, facets: facets.into_iter().collect() })
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn trivial_count(&self) -> usize {
        self.facets.iter().filter(|f| f.is_trivial()).count()
    }

    pub fn nontrivial(&self) -> Vec<&Facet> {
        self.facets.iter().filter(|f| !f.is_trivial()).collect()
    }

    pub fn contains(&self, point: &[Rational]) -> bool {
        self.facets.iter().all(|f| f.is_satisfied_by(point))
    }

    /// One facet per line as `[n_0, ..., n_{d-1}, offset]`, meaning
    /// `n·x ≤ offset`.
    pub fn to_json_string(&self) -> String {
        let mut s = format!("{{\n  \"dimension\": {},\n  \"facets\": [\n", self.dimension);
        for (i, f) in self.facets.iter().enumerate() {
            let items: Vec<String> = f.normal.iter().chain(std::iter::once(&f.offset)).map(|v| v.to_string()).collect();
            let comma = if i + 1 < self.facets.len() { "," } else { "" };
            s.push_str(&format!("    [{}]{comma}\n", items.join(", ")));
        }
        s.push_str("  ]\n}\n");
        s
    }

    pub fn from_json_str(s: &str) -> Result<HRep> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| PolytopeError::Json(e.to_string()))?;
        let dimension =
            v["dimension"].as_u64().ok_or_else(|| PolytopeError::Json("missing dimension".into()))? as usize;
        let rows = v["facets"].as_array().ok_or_else(|| PolytopeError::Json("missing facets".into()))?;
        let mut facets = Vec::with_capacity(rows.len());
        for row in rows {
            let nums: Vec<i64> = row
                .as_array()
                .ok_or_else(|| PolytopeError::Json("facet is not an array".into()))?
                .iter()
                .map(|x| x.as_i64().ok_or_else(|| PolytopeError::Json(format!("non-integer entry {x}"))))
                .collect::<Result<_>>()?;
            if nums.len() != dimension + 1 {
                return Err(PolytopeError::Json(format!(
                    "facet has {} entries, expected {}",
                    nums.len(),
                    dimension + 1
                )));
            }
            let (normal, offset) = nums.split_at(dimension);
            facets.push(Facet { normal: normal.to_vec(), offset: offset[0] });
        }
        HRep::new(dimension, facets)
    }
}

/// Facets of a full-dimensional V-representation.
pub fn facets(v: &VRep) -> Result<HRep> {
    if v.is_empty() {
        return Err(PolytopeError::Empty);
    }
    let affine = v.affine_dimension();
    if affine < v.dimension {
        return Err(PolytopeError::NotFullDimensional { affine, dimension: v.dimension });
    }
    // β·L - (L v)·a ≥ 0 with L clearing the denominators of v
    let rows: Vec<Vec<i128>> = v
        .vertices
        .iter()
        .map(|p| {
            let lcm = p.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
            let mut row = vec![to_i128(&lcm)?];
            for r in p {
                row.push(to_i128(&(-(r.numer() * &lcm) / r.denom()))?);
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let rays = extreme_rays(&rows)?;
    let facets = rays
        .iter()
        .map(|y| {
            let offset = Rational::from_integer(BigInt::from(y[0]));
            let normal: Vec<Rational> = y[1..].iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect();
            Facet::canonical(&normal, &offset)
        })
        .collect::<Result<_>>()?;
    HRep::new(v.dimension, facets)
}

/// Vertices of a bounded H-representation.
pub fn vertices_from_hrep(h: &HRep) -> Result<VRep> {
    let d = h.dimension;
    // variables (t, x): offset·t - normal·x ≥ 0 and t ≥ 0
    let mut rows: Vec<Vec<i128>> = Vec::with_capacity(h.len() + 1);
    let mut t_row = vec![0i128; d + 1];
    t_row[0] = 1;
    rows.push(t_row);
    for f in &h.facets {
        let mut row = vec![f.offset as i128];
        row.extend(f.normal.iter().map(|&c| -(c as i128)));
        rows.push(row);
    }
    let rays = extreme_rays(&rows).map_err(|e| match e {
        PolytopeError::NotFullDimensional { .. } => PolytopeError::Unbounded,
        other => other,
    })?;
    let mut points = Vec::with_capacity(rays.len());
    for y in rays {
        if y[0] == 0 {
            return Err(PolytopeError::Unbounded);
        }
        let t = BigInt::from(y[0]);
        let p = y[1..].iter().map(|&c| Rational::new(BigInt::from(c), t.clone())).collect();
        points.push((p, CausalModel::Local));
    }
    if points.is_empty() {
        return Err(PolytopeError::Empty);
    }
    let mut v = VRep::new(d, points)?;
    v.provenance = vec![Vec::new(); v.len()];
    Ok(v)
}

fn to_i128(v: &BigInt) -> Result<i128> {
    v.to_i128().ok_or(PolytopeError::Overflow)
}

fn homogenize(p: &[Rational]) -> Vec<Rational> {
    std::iter::once(Rational::one()).chain(p.iter().cloned()).collect()
}

/// Incremental row echelon form over the rationals.
struct Echelon {
    /// Reduced rows with their pivot columns.
    rows: Vec<(usize, Vec<Rational>)>,
}

impl Echelon {
    fn new() -> Self {
        Echelon { rows: Vec::new() }
    }

    /// Adds `v` if it is independent of the rows so far.
    fn insert(&mut self, v: &[Rational]) -> bool {
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            if !v[*pivot].is_zero() {
                let f = v[*pivot].clone() / &row[*pivot];
                for (x, r) in v.iter_mut().zip(row) {
                    *x -= &f * r;
                }
            }
        }
        match v.iter().position(|x| !x.is_zero()) {
            Some(pivot) => {
                self.rows.push((pivot, v));
                true
            }
            None => false,
        }
    }
}

fn rank(rows: &[Vec<Rational>]) -> usize {
    let mut e = Echelon::new();
    rows.iter().filter(|r| e.insert(r)).count()
}

/// Fixed-width bitset over constraint indices.
#[derive(Clone, Debug)]
struct Bits(Vec<u64>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn subset_of(&self, other: &Bits) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a & !b == 0)
    }
}

struct Ray {
    v: Vec<i128>,
    zeros: Bits,
}

fn dot(a: &[i128], b: &[i128]) -> Result<i128> {
    a.iter()
        .zip(b)
        .try_fold(0i128, |acc, (x, y)| x.checked_mul(*y).and_then(|p| acc.checked_add(p)))
        .ok_or(PolytopeError::Overflow)
}

fn primitive(mut v: Vec<i128>) -> Vec<i128> {
    let g = v.iter().fold(0i128, |acc, x| acc.gcd(x));
    if g > 1 {
        for x in &mut v {
            *x /= g;
        }
    }
    v
}

/// Extreme rays of the pointed cone `{y : row·y ≥ 0 for every row}`, as
/// sorted primitive integer vectors. Reports `NotFullDimensional` when the
/// rows do not have full column rank (the cone is not pointed).
fn extreme_rays(rows: &[Vec<i128>]) -> Result<Vec<Vec<i128>>> {
    let m = rows.len();
    let d = rows.first().map_or(0, |r| r.len());
    let rational: Vec<Vec<Rational>> =
        rows.iter().map(|r| r.iter().map(|&c| Rational::from_integer(BigInt::from(c))).collect()).collect();

    let mut echelon = Echelon::new();
    let mut basis = Vec::with_capacity(d);
    for (i, r) in rational.iter().enumerate() {
        if basis.len() == d {
            break;
        }
        if echelon.insert(r) {
            basis.push(i);
        }
    }
    if basis.len() < d {
        return Err(PolytopeError::NotFullDimensional { affine: basis.len().saturating_sub(1), dimension: d - 1 });
    }

    let inverse = invert(basis.iter().map(|&i| rational[i].clone()).collect());
    let mut rays: Vec<Ray> = Vec::with_capacity(d);
    for j in 0..d {
        let column: Vec<Rational> = (0..d).map(|i| inverse[i][j].clone()).collect();
        let lcm = column.iter().fold(BigInt::one(), |acc, r| acc.lcm(r.denom()));
        let v = column.iter().map(|r| to_i128(&((r.numer() * &lcm) / r.denom()))).collect::<Result<Vec<_>>>()?;
        let mut zeros = Bits::new(m);
        for (k, &row) in basis.iter().enumerate() {
            if k != j {
                zeros.set(row);
            }
        }
        rays.push(Ray { v: primitive(v), zeros });
    }

    let in_basis: BTreeSet<usize> = basis.iter().copied().collect();
    for (h, row) in rows.iter().enumerate() {
        if in_basis.contains(&h) {
            continue;
        }
        let slacks = rays.iter().map(|r| dot(row, &r.v)).collect::<Result<Vec<_>>>()?;
        let pos: Vec<usize> = (0..rays.len()).filter(|&i| slacks[i] > 0).collect();
        let neg: Vec<usize> = (0..rays.len()).filter(|&i| slacks[i] < 0).collect();
        let mut created = Vec::new();
        for &p in &pos {
            for &n in &neg {
                let common = rays[p].zeros.and(&rays[n].zeros);
                if common.count() + 2 < d {
                    continue;
                }
                let blocked = rays.iter().enumerate().any(|(k, r)| k != p && k != n && common.subset_of(&r.zeros));
                if blocked {
                    continue;
                }
                let (sp, sn) = (slacks[p], -slacks[n]);
                let v = rays[p]
                    .v
                    .iter()
                    .zip(&rays[n].v)
                    .map(|(&a, &b)| {
                        let x = sn.checked_mul(a).ok_or(PolytopeError::Overflow)?;
                        let y = sp.checked_mul(b).ok_or(PolytopeError::Overflow)?;
                        x.checked_add(y).ok_or(PolytopeError::Overflow)
                    })
                    .collect::<Result<Vec<_>>>()?;
                let mut zeros = common;
                zeros.set(h);
                created.push(Ray { v: primitive(v), zeros });
            }
        }
        let mut next: Vec<Ray> = Vec::with_capacity(rays.len() + created.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            match slacks[i].signum() {
                1 => next.push(r),
                0 => {
                    r.zeros.set(h);
                    next.push(r);
                }
                _ => {}
            }
        }
        next.extend(created);
        rays = next;
    }
    let mut out: Vec<Vec<i128>> = rays.into_iter().map(|r| r.v).collect();
    out.sort();
    out.dedup();
    Ok(out)
}

/// Inverse of a square nonsingular rational matrix by Gauss-Jordan.
fn invert(mut a: Vec<Vec<Rational>>) -> Vec<Vec<Rational>> {
    let n = a.len();
    let mut inv: Vec<Vec<Rational>> =
        (0..n).map(|i| (0..n).map(|j| if i == j { Rational::one() } else { Rational::zero() }).collect()).collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("nonsingular basis");
        a.swap(col, piv);
        inv.swap(col, piv);
        let p = a[col][col].clone();
        for j in 0..n {
            a[col][j] /= &p;
            inv[col][j] /= &p;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for j in 0..n {
                    let (x, y) = (&a[col][j] * &f, &inv[col][j] * &f);
                    a[r][j] -= x;
                    inv[r][j] -= y;
                }
            }
        }
    }
    inv
}

/// A signed coordinate permutation of tripartite correlator space:
/// `E'[target[s]] = sign[s] · E[s]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorrelatorSymmetry {
    pub name: String,
    pub target: Vec<usize>,
    pub sign: Vec<i64>,
}

impl CorrelatorSymmetry {
    /// Builds the map from its action on settings `(x, y, z)`; the closure
    /// returns the image settings and whether the correlator flips sign.
    pub fn from_settings(name: &str, f: impl Fn([usize; 3]) -> ([usize; 3], bool)) -> Self {
        let mut target = vec![0; 8];
        let mut sign = vec![1; 8];
        for s in 0..8 {
            let ([x, y, z], flip) = f([s & 1, (s >> 1) & 1, (s >> 2) & 1]);
            target[s] = x + 2 * y + 4 * z;
            if flip {
                sign[s] = -1;
            }
        }
        CorrelatorSymmetry { name: name.to_string(), target, sign }
    }

    pub fn apply_point(&self, e: &[Rational]) -> Vec<Rational> {
        let mut out = vec![Rational::zero(); e.len()];
        for (s, x) in e.iter().enumerate() {
            out[self.target[s]] = x * qi(self.sign[s]);
        }
        out
    }

    /// The image inequality; the map is orthogonal, so `a·x ≤ β` on `P`
    /// becomes `(g a)·y ≤ β` on `g P`.
    pub fn apply_facet(&self, f: &Facet) -> Facet {
        let mut normal = vec![0; f.normal.len()];
        for (s, &c) in f.normal.iter().enumerate() {
            normal[self.target[s]] = c * self.sign[s];
        }
        Facet { normal, offset: f.offset }
    }
}

/// Generators of the relabelings that map the union model onto itself:
/// global and input-dependent output flips, Bob's output flip on `x·y`,
/// input flips, and the exchange of Alice and Bob.
pub fn either_model_symmetries() -> Vec<CorrelatorSymmetry> {
    vec![
        CorrelatorSymmetry::from_settings("flip-output", |s| (s, true)),
        CorrelatorSymmetry::from_settings("flip-a-on-x", |s| (s, s[0] == 1)),
        CorrelatorSymmetry::from_settings("flip-b-on-y", |s| (s, s[1] == 1)),
        CorrelatorSymmetry::from_settings("flip-c-on-z", |s| (s, s[2] == 1)),
        CorrelatorSymmetry::from_settings("flip-b-on-xy", |s| (s, s[0] * s[1] == 1)),
        CorrelatorSymmetry::from_settings("flip-x", |[x, y, z]| ([1 - x, y, z], false)),
        CorrelatorSymmetry::from_settings("flip-y", |[x, y, z]| ([x, 1 - y, z], false)),
        CorrelatorSymmetry::from_settings("flip-z", |[x, y, z]| ([x, y, 1 - z], false)),
        CorrelatorSymmetry::from_settings("swap-ab", |[x, y, z]| ([y, x, z], false)),
    ]
}

/// Closure of `seed` under the generated group.
pub fn orbit(seed: &Facet, generators: &[CorrelatorSymmetry]) -> BTreeSet<Facet> {
    let mut seen = BTreeSet::from([seed.clone()]);
    let mut frontier = vec![seed.clone()];
    while let Some(f) = frontier.pop() {
        for g in generators {
            let image = g.apply_facet(&f);
            if seen.insert(image.clone()) {
                frontier.push(image);
            }
        }
    }
    seen
}

/// The Svetlichny functional as a correlator inequality.
pub fn svetlichny_facet() -> Facet {
    let f = svetlichny3();
    let coeffs = f.correlator_coefficients().expect("correlator form");
    Facet::canonical(&coeffs, f.bound()).expect("small integers")
}

/// Facets of `h` whose image under some generator is missing from `h`.
pub fn symmetry_defects(h: &HRep, generators: &[CorrelatorSymmetry]) -> Vec<(Facet, String)> {
    let set: BTreeSet<&Facet> = h.facets.iter().collect();
    let mut out = Vec::new();
    for f in &h.facets {
        for g in generators {
            if !set.contains(&g.apply_facet(f)) {
                out.push((f.clone(), g.name.clone()));
            }
        }
    }
    out
}

/// Outcome of a membership test.
#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Convex weights over the vertices reproducing the point.
    Inside { weights: Vec<Rational> },
    /// `hyperplane` holds on every vertex and fails at the point by
    /// `violation`. `is_facet` reports whether it is tight on a facet.
    Outside { hyperplane: Facet, violation: Rational, is_facet: bool },
}

impl Membership {
    pub fn is_inside(&self) -> bool {
        matches!(self, Membership::Inside { .. })
    }
}

/// Decides `point ∈ conv(v)` exactly. Outside points get a separating
/// hyperplane; for full-dimensional `v` it maximizes the normalized
/// violation, which selects a facet.
pub fn membership(point: &[Rational], v: &VRep) -> Result<Membership> {
    if point.len() != v.dimension {
        return Err(PolytopeError::DimensionMismatch { expected: v.dimension, found: point.len() });
    }
    if v.is_empty() {
        return Err(PolytopeError::Empty);
    }
    let n = v.len();
    let mut lp = LinearProgram::<Rational>::new(n, Sense::Maximize);
    lp.add((0..n).map(|j| (j, Rational::one())).collect(), RowKind::Eq, Rational::one());
    for i in 0..v.dimension {
        let coeffs = (0..n).filter(|&j| !v.vertices[j][i].is_zero()).map(|j| (j, v.vertices[j][i].clone())).collect();
        lp.add(coeffs, RowKind::Eq, point[i].clone());
    }
    let sol = solve_lp(&lp)?;
    match sol.status {
        Status::Optimal => return Ok(Membership::Inside { weights: sol.x }),
        Status::Infeasible => {}
        other => return Err(OptimizeError::NumericalFailure(format!("membership LP ended {other}")).into()),
    }
    if v.affine_dimension() == v.dimension {
        if let Some(m) = separating_facet(point, v)? {
            return Ok(m);
        }
    }
    // Farkas: y0 + y·v ≤ 0 on vertices, y0 + y·p > 0
    let y = sol.farkas.ok_or_else(|| OptimizeError::NumericalFailure("no Farkas certificate".into()))?;
    let hyperplane = Facet::canonical(&y[1..], &-y[0].clone())?;
    let violation = hyperplane.violation(point);
    let is_facet = hyperplane.support_rank(v) == v.dimension;
    Ok(Membership::Outside { hyperplane, violation, is_facet })
}

/// `max a·(p - c)` over `a·(v - c) ≤ 1`, with `c` the centroid.
fn separating_facet(point: &[Rational], v: &VRep) -> Result<Option<Membership>> {
    let d = v.dimension;
    let c = v.centroid();
    let mut lp = LinearProgram::<Rational>::new(d, Sense::Maximize);
    for i in 0..d {
        lp.set_free(i);
        lp.set_objective_coeff(i, &point[i] - &c[i]);
    }
    for p in &v.vertices {
        let coeffs = (0..d).map(|i| (i, &p[i] - &c[i])).filter(|(_, x)| !x.is_zero()).collect();
        lp.add(coeffs, RowKind::Le, Rational::one());
    }
    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Ok(None);
    }
    let offset = Rational::one() + sol.x.iter().zip(&c).fold(Rational::zero(), |acc, (a, ci)| acc + a * ci);
    let hyperplane = Facet::canonical(&sol.x, &offset)?;
    let violation = hyperplane.violation(point);
    if !violation.is_positive() {
        return Ok(None);
    }
    let is_facet = hyperplane.support_rank(v) == d;
    Ok(Some(Membership::Outside { hyperplane, violation, is_facet }))
}

/// Full correlators of a binary tripartite behavior as exact rationals.
/// Float entries are converted exactly from their binary values.
pub fn correlator_point(b: &Behavior) -> Result<Vec<Rational>> {
    if b.scenario().parties() != 3 {
        return Err(PolytopeError::Behavior(format!("{} parties", b.scenario().parties())));
    }
    let e = correlators(b).map_err(|e| PolytopeError::Behavior(e.to_string()))?;
    e.into_iter()
        .map(|x| match x {
            Value::Exact(r) => Ok(r),
            Value::Float(f) => Rational::from_float(f).ok_or_else(|| PolytopeError::Behavior(format!("entry {f}"))),
        })
        .collect()
}

pub fn behavior_membership(b: &Behavior, v: &VRep) -> Result<Membership> {
    membership(&correlator_point(b)?, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{mermin_wiring_box, svetlichny_box};

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|&x| qi(x)).collect()
    }

    #[test]
    fn raw_strategy_counts() {
        assert_eq!(enumerate_strategies(CausalModel::UntrustedAlice).len(), 1024);
        assert_eq!(enumerate_strategies(CausalModel::UntrustedBob).len(), 1024);
        assert_eq!(enumerate_strategies(CausalModel::Local).len(), 64);
        assert_eq!(enumerate_strategies(CausalModel::Either).len(), 2048);
    }

    #[test]
    fn strategy_outputs_follow_parents() {
        let s = DeterministicStrategy {
            model: CausalModel::UntrustedAlice,
            responses: [vec![0, 1], vec![0, 0, 1, 0], vec![1, 1, 1, 0]],
        };
        // b is 1 only at (x, y) = (0, 1); c is 0 only at (x, z) = (1, 1)
        assert_eq!(s.outputs([0, 1, 0]), [0, 1, 1]);
        assert_eq!(s.outputs([1, 1, 1]), [1, 0, 0]);
    }

    #[test]
    fn vertex_counts_and_provenance() {
        let alice = enumerate_vertices(CausalModel::UntrustedAlice);
        let either = enumerate_vertices(CausalModel::Either);
        assert_eq!(alice.len(), 64);
        assert_eq!(either.len(), 96);
        assert_eq!(enumerate_vertices(CausalModel::Local).len(), 16);
        let shared = either.provenance.iter().filter(|p| p.len() == 2).count();
        assert_eq!(shared, 32);
        assert!(either.vertices.iter().flatten().all(|x| x.abs() == qi(1)));
    }

    #[test]
    fn bipartite_facets_are_chsh_and_positivity() {
        let v = bipartite_local_vertices();
        assert_eq!(v.len(), 8);
        let h = facets(&v).unwrap();
        assert_eq!(h.len(), 16);
        assert_eq!(h.trivial_count(), 8);
        for f in h.nontrivial() {
            assert_eq!(f.offset, 2);
            assert!(f.normal.iter().all(|c| c.abs() == 1));
            assert_eq!(f.normal.iter().filter(|&&c| c < 0).count() % 2, 1);
        }
    }

    #[test]
    fn square_facets() {
        let v = VRep::new(
            2,
            vec![
                (ints(&[0, 0]), CausalModel::Local),
                (ints(&[0, 2]), CausalModel::Local),
                (ints(&[2, 0]), CausalModel::Local),
                (ints(&[2, 2]), CausalModel::Local),
                (ints(&[1, 1]), CausalModel::Local),
            ],
        )
        .unwrap();
        let h = facets(&v).unwrap();
        let expect = vec![
            Facet { normal: vec![-1, 0], offset: 0 },
            Facet { normal: vec![0, -1], offset: 0 },
            Facet { normal: vec![0, 1], offset: 2 },
            Facet { normal: vec![1, 0], offset: 2 },
        ];
        assert_eq!(h.facets, expect);
    }

    #[test]
    fn rational_vertices() {
        let v = VRep::new(
            2,
            vec![
                (ints(&[0, 0]), CausalModel::Local),
                (vec![Rational::new(1.into(), 2.into()), qi(0)], CausalModel::Local),
                (vec![qi(0), Rational::new(1.into(), 3.into())], CausalModel::Local),
            ],
        )
        .unwrap();
        let h = facets(&v).unwrap();
        assert!(h.facets.contains(&Facet { normal: vec![2, 3], offset: 1 }));
        assert_eq!(vertices_from_hrep(&h).unwrap().vertices, v.vertices);
    }

    #[test]
    fn flat_input_is_rejected() {
        let v = VRep::new(
            3,
            vec![
                (ints(&[0, 0, 0]), CausalModel::Local),
                (ints(&[1, 0, 0]), CausalModel::Local),
                (ints(&[0, 1, 0]), CausalModel::Local),
            ],
        )
        .unwrap();
        assert_eq!(facets(&v), Err(PolytopeError::NotFullDimensional { affine: 2, dimension: 3 }));
    }

    #[test]
    fn unbounded_hrep_is_rejected() {
        let h = HRep::new(2, vec![Facet { normal: vec![-1, 0], offset: 0 }, Facet { normal: vec![0, -1], offset: 0 }])
            .unwrap();
        assert_eq!(vertices_from_hrep(&h), Err(PolytopeError::Unbounded));
    }

    #[test]
    fn canonical_form_is_coprime_and_oriented() {
        let f = Facet::canonical(
            &[Rational::new(3.into(), 4.into()), Rational::new((-3).into(), 2.into())],
            &Rational::new(9.into(), 4.into()),
        )
        .unwrap();
        assert_eq!(f, Facet { normal: vec![1, -2], offset: 3 });
        assert_eq!(f.to_string(), "E0 -2E1 <= 3");
    }

    #[test]
    fn json_round_trip_and_rejection() {
        let h = facets(&bipartite_local_vertices()).unwrap();
        let s = h.to_json_string();
        assert_eq!(HRep::from_json_str(&s).unwrap(), h);
        assert!(HRep::from_json_str("{\"dimension\": 4, \"facets\": [[1, 0, 0]]}").is_err());
        assert!(HRep::from_json_str("{\"dimension\": 4, \"facets\": [[1, 0, 0, 0, 0.5]]}").is_err());
    }

    #[test]
    fn svetlichny_orbit_has_thirty_two_members() {
        let f = svetlichny_facet();
        assert_eq!(f.offset, 4);
        assert_eq!(orbit(&f, &either_model_symmetries()).len(), 32);
    }

    #[test]
    fn wiring_inside_and_svetlichny_box_outside() {
        let alice = enumerate_vertices(CausalModel::UntrustedAlice);
        let m = behavior_membership(&mermin_wiring_box().observed(), &alice).unwrap();
        let Membership::Inside { weights } = m else { panic!("wiring should be inside") };
        assert_eq!(weights.iter().fold(Rational::zero(), |a, w| a + w), qi(1));

        let either = enumerate_vertices(CausalModel::Either);
        let m = behavior_membership(&svetlichny_box(), &either).unwrap();
        let Membership::Outside { hyperplane, violation, is_facet } = m else { panic!("box should be outside") };
        assert!(is_facet);
        assert_eq!(violation, qi(4));
        assert!(orbit(&svetlichny_facet(), &either_model_symmetries()).contains(&hyperplane));
    }

    #[test]
    fn alice_polytope_has_conditional_chsh_facets() {
        let h = facets(&enumerate_vertices(CausalModel::UntrustedAlice)).unwrap();
        assert_eq!((h.len(), h.trivial_count()), (32, 16));
        for f in h.nontrivial() {
            // supported on a single value of x
            let xs: BTreeSet<usize> = (0..8).filter(|&s| f.normal[s] != 0).map(|s| s & 1).collect();
            assert_eq!((xs.len(), f.offset), (1, 2));
        }
    }

    #[test]
    fn vertices_are_inside() {
        let v = enumerate_vertices(CausalModel::Local);
        for p in &v.vertices {
            assert!(membership(p, &v).unwrap().is_inside());
        }
    }

    #[test]
    fn off_hull_point_uses_farkas() {
        let v = VRep::new(
            3,
            vec![
                (ints(&[0, 0, 0]), CausalModel::Local),
                (ints(&[1, 0, 0]), CausalModel::Local),
                (ints(&[0, 1, 0]), CausalModel::Local),
            ],
        )
        .unwrap();
        let p = ints(&[0, 0, 1]);
        let Membership::Outside { hyperplane, violation, .. } = membership(&p, &v).unwrap() else { panic!() };
        assert!(violation.is_positive());
        assert!(v.vertices.iter().all(|x| hyperplane.is_satisfied_by(x)));
        assert_eq!(membership(&ints(&[0, 0]), &v), Err(PolytopeError::DimensionMismatch { expected: 3, found: 2 }));
    }
}
