//! Moment-matrix relaxations of the quantum model with an untrusted receiver.
//!
//! Each party holds one projector per setting (the outcome-0 effect). With
//! Alice untrusted, Bob and Charlie measure `B_{x,y}` and `C_{x,z}` and
//! Alice's extra output is produced by `E_x`; with Bob untrusted the roles
//! of `x` and `y` swap. Operators of distinct parties commute and every
//! projector is idempotent. The moment matrix is taken real symmetric, which
//! is a valid relaxation because all constrained quantities are real.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::behavior::{extended_binary_scenario, ExtendedBehavior, Scenario, UntrustedParty};
use crate::certify::CertificationConstraints;
use crate::inequality::svetlichny3;
use crate::num::Tensor;
use crate::optimize::sdp::{Block, BlockKind, SemidefiniteProgram};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NpaError {
    #[error("invalid level specification {0:?}")]
    InvalidLevel(String),
    #[error("both a fixed marginal and a Svetlichny value were requested")]
    ConflictingConstraints,
    #[error("structure built for untrusted {built} but constraints name {requested}")]
    ScenarioMismatch { built: UntrustedParty, requested: UntrustedParty },
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
}

pub type Result<T> = std::result::Result<T, NpaError>;

/// Party letters in canonical order.
pub const PARTY_NAMES: [char; 4] = ['A', 'B', 'C', 'E'];

/// A projector: party index and setting index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Op {
    pub party: u8,
    pub setting: u8,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", PARTY_NAMES[self.party as usize], self.setting)
    }
}

/// A product of projectors; the empty word is the identity.
pub type Word = Vec<Op>;

pub fn format_word(w: &[Op]) -> String {
    if w.is_empty() {
        "1".into()
    } else {
        w.iter().map(Op::to_string).collect::<Vec<_>>().join(" ")
    }
}

/// Sorts by party (keeping order within a party) and merges repeated
/// adjacent projectors.
pub fn reduce(w: &[Op]) -> Word {
    let mut sorted = w.to_vec();
    sorted.sort_by_key(|o| o.party);
    let mut out: Word = Vec::with_capacity(sorted.len());
    for o in sorted {
        if out.last() != Some(&o) {
            out.push(o);
        }
    }
    out
}

pub fn adjoint(w: &[Op]) -> Word {
    let mut r = w.to_vec();
    r.reverse();
    reduce(&r)
}

/// Representative of `w` under reduction and `w ~ w†`.
pub fn canonical(w: &[Op]) -> Word {
    let r = reduce(w);
    let a = adjoint(&r);
    r.min(a)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorScenario {
    pub untrusted: UntrustedParty,
    /// Settings per party `A, B, C, E`.
    pub settings: [usize; 4],
}

impl OperatorScenario {
    pub fn tripartite(untrusted: UntrustedParty) -> Self {
        let settings = match untrusted {
            UntrustedParty::Alice => [2, 4, 4, 2],
            UntrustedParty::Bob => [4, 2, 4, 2],
        };
        OperatorScenario { untrusted, settings }
    }

    /// The projector setting used by `party` at observed inputs `(x, y, z)`.
    pub fn setting_for(&self, party: usize, xyz: [usize; 3]) -> usize {
        let [x, y, z] = xyz;
        match (self.untrusted, party) {
            (UntrustedParty::Alice, 0) | (UntrustedParty::Alice, 3) => x,
            (UntrustedParty::Alice, 1) => 2 * x + y,
            (UntrustedParty::Alice, 2) => 2 * x + z,
            (UntrustedParty::Bob, 0) => 2 * y + x,
            (UntrustedParty::Bob, 1) | (UntrustedParty::Bob, 3) => y,
            (UntrustedParty::Bob, 2) => 2 * y + z,
            _ => panic!("party index {party} out of range"),
        }
    }

    pub fn operators(&self) -> Vec<Op> {
        (0..4).flat_map(|p| (0..self.settings[p]).map(move |s| Op { party: p as u8, setting: s as u8 })).collect()
    }

    /// `∏_{p ∈ parties} P_p` at inputs `(x, y, z)`, in canonical order.
    pub fn joint_word(&self, parties: &[usize], xyz: [usize; 3]) -> Word {
        let mut w: Word =
            parties.iter().map(|&p| Op { party: p as u8, setting: self.setting_for(p, xyz) as u8 }).collect();
        w.sort();
        w
    }
}

/// Hierarchy level: all words up to `base` projectors, plus one-projector-
/// per-party products for each listed party set.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LevelSpec {
    pub base: usize,
    /// Sorted party indices; each set has at least two parties.
    pub extras: Vec<Vec<usize>>,
}

impl LevelSpec {
    pub fn new(base: usize) -> Self {
        LevelSpec { base, extras: Vec::new() }
    }

    pub fn with_extra(mut self, parties: &[usize]) -> Self {
        let mut p = parties.to_vec();
        p.sort_unstable();
        p.dedup();
        if !self.extras.contains(&p) {
            self.extras.push(p);
        }
        self
    }

    /// The level used for published curves: `2+ABC+ABE+BCE+ABCE`.
    pub fn full() -> Self {
        "2+ABC+ABE+BCE+ABCE".parse().expect("valid literal")
    }
}

impl Default for LevelSpec {
    fn default() -> Self {
        LevelSpec::new(2)
    }
}

impl FromStr for LevelSpec {
    type Err = NpaError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || NpaError::InvalidLevel(s.to_string());
        let mut parts = s.trim().split('+');
        let base: usize = parts.next().and_then(|b| b.trim().parse().ok()).ok_or_else(bad)?;
        let mut level = LevelSpec::new(base);
        for word in parts {
            let word = word.trim();
            let mut parties = Vec::new();
            for ch in word.chars() {
                let p = PARTY_NAMES.iter().position(|&n| n == ch).ok_or_else(bad)?;
                if parties.contains(&p) {
                    return Err(bad());
                }
                parties.push(p);
            }
            if parties.len() < 2 {
                return Err(bad());
            }
            level = level.with_extra(&parties);
        }
        Ok(level)
    }
}

impl fmt::Display for LevelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.base)?;
        for e in &self.extras {
            let name: String = e.iter().map(|&p| PARTY_NAMES[p]).collect();
            write!(f, "+{name}")?;
        }
        Ok(())
    }
}

/// Symbolic skeleton of the moment matrix `Γ_ij = ⟨m_i† m_j⟩`.
#[derive(Clone, Debug)]
pub struct MomentStructure {
    pub scenario: OperatorScenario,
    pub level: LevelSpec,
    /// Index set of the matrix; the identity comes first.
    pub monomials: Vec<Word>,
    /// Canonical word of each equality class; class 0 is the identity.
    pub classes: Vec<Word>,
    /// Row-major `n × n` class index of each matrix entry.
    pub entry_class: Vec<usize>,
    /// Number of classes occurring in the matrix; classes beyond this only
    /// enter through probabilities not reached at this level.
    pub matrix_classes: usize,
    lookup: HashMap<Word, usize>,
}

impl MomentStructure {
    pub fn size(&self) -> usize {
        self.monomials.len()
    }

    pub fn class_of(&self, w: &[Op]) -> Option<usize> {
        self.lookup.get(&canonical(w)).copied()
    }

    pub fn entry(&self, i: usize, j: usize) -> usize {
        self.entry_class[i * self.size() + j]
    }

    /// Classes not tied to any probability `p(abce|xyz)`.
    pub fn free_classes(&self) -> Vec<usize> {
        let tied: BTreeSet<usize> = self.probability_classes().into_iter().collect();
        (1..self.classes.len()).filter(|k| !tied.contains(k)).collect()
    }

    /// Classes of joint moments `⟨∏_{p∈T} P_p⟩`, `T ≠ ∅`, at every input triple.
    pub fn probability_classes(&self) -> Vec<usize> {
        let mut out = BTreeSet::new();
        for xyz in input_triples() {
            for t in 1..16usize {
                let parties: Vec<usize> = (0..4).filter(|p| t >> p & 1 == 1).collect();
                out.insert(self.class_of(&self.scenario.joint_word(&parties, xyz)).expect("joint moments registered"));
            }
        }
        out.into_iter().collect()
    }

    /// `p(o|xyz)` as integer combination of classes, where `None` marginalises
    /// a party. Outcome 0 is the projector, outcome 1 its complement.
    pub fn probability_expression(&self, outcomes: [Option<usize>; 4], xyz: [usize; 3]) -> Vec<(usize, i64)> {
        let fixed_zero: Vec<usize> = (0..4).filter(|&p| outcomes[p] == Some(0)).collect();
        let ones: Vec<usize> = (0..4).filter(|&p| outcomes[p] == Some(1)).collect();
        let mut acc: HashMap<usize, i64> = HashMap::new();
        for mask in 0..(1usize << ones.len()) {
            let mut parties = fixed_zero.clone();
            let mut sign = 1;
            for (t, &p) in ones.iter().enumerate() {
                if mask >> t & 1 == 1 {
                    parties.push(p);
                    sign = -sign;
                }
            }
            let k = self.class_of(&self.scenario.joint_word(&parties, xyz)).expect("joint moments registered");
            *acc.entry(k).or_insert(0) += sign;
        }
        let mut v: Vec<(usize, i64)> = acc.into_iter().filter(|(_, c)| *c != 0).collect();
        v.sort_unstable();
        v
    }
}

fn input_triples() -> impl Iterator<Item = [usize; 3]> {
    (0..8).map(|i| [i & 1, i >> 1 & 1, i >> 2 & 1])
}

/// Enumerates monomials, reduces them, and builds entry-equality classes.
pub fn monomial_basis(s: &OperatorScenario, lvl: &LevelSpec) -> MomentStructure {
    let ops = s.operators();
    let mut words: BTreeSet<(usize, Word)> = BTreeSet::new();
    words.insert((0, Vec::new()));
    let mut frontier: Vec<Word> = vec![Vec::new()];
    for _ in 0..lvl.base {
        let mut next = Vec::new();
        for w in &frontier {
            for &o in &ops {
                let mut e = w.clone();
                e.push(o);
                let r = reduce(&e);
                if words.insert((r.len(), r.clone())) {
                    next.push(r);
                }
            }
        }
        frontier = next;
    }
    for parties in &lvl.extras {
        let mut partial: Vec<Word> = vec![Vec::new()];
        for &p in parties {
            partial = partial
                .into_iter()
                .flat_map(|w| {
                    (0..s.settings[p]).map(move |k| {
                        let mut e = w.clone();
                        e.push(Op { party: p as u8, setting: k as u8 });
                        e
                    })
                })
                .collect();
        }
        for w in partial {
            let r = reduce(&w);
            words.insert((r.len(), r));
        }
    }
    let monomials: Vec<Word> = words.into_iter().map(|(_, w)| w).collect();
    let n = monomials.len();

    let mut lookup: HashMap<Word, usize> = HashMap::new();
    let mut classes: Vec<Word> = vec![Vec::new()];
    lookup.insert(Vec::new(), 0);
    let mut entry_class = vec![0; n * n];
    let adjoints: Vec<Word> = monomials.iter().map(|m| adjoint(m)).collect();
    for i in 0..n {
        for j in i..n {
            let mut w = adjoints[i].clone();
            w.extend_from_slice(&monomials[j]);
            let key = canonical(&w);
            let k = *lookup.entry(key.clone()).or_insert_with(|| {
                classes.push(key);
                classes.len() - 1
            });
            entry_class[i * n + j] = k;
            entry_class[j * n + i] = k;
        }
    }
    let matrix_classes = classes.len();
    for xyz in input_triples() {
        for t in 1..16usize {
            let parties: Vec<usize> = (0..4).filter(|p| t >> p & 1 == 1).collect();
            let key = canonical(&s.joint_word(&parties, xyz));
            lookup.entry(key.clone()).or_insert_with(|| {
                classes.push(key);
                classes.len() - 1
            });
        }
    }
    MomentStructure { scenario: s.clone(), level: lvl.clone(), monomials, classes, entry_class, matrix_classes, lookup }
}

/// An assembled relaxation; SDP variable `k` is the moment of class `k + 1`.
#[derive(Clone, Debug)]
pub struct AssembledSdp {
    pub program: SemidefiniteProgram,
    pub matrix_size: usize,
    /// Number of moment classes excluding the identity.
    pub moments: usize,
}

impl AssembledSdp {
    /// The extended behavior encoded by a solution vector.
    pub fn behavior(&self, ms: &MomentStructure, y: &[f64]) -> ExtendedBehavior {
        let sc = extended_binary_scenario();
        let mut p = vec![0.0; sc.len()];
        for xyz in input_triples() {
            for o in sc.outcome_tuples() {
                let expr = ms.probability_expression([Some(o[0]), Some(o[1]), Some(o[2]), Some(o[3])], xyz);
                let v: f64 = expr.iter().map(|&(k, c)| c as f64 * moment(y, k)).sum();
                p[sc.index(&o, &[xyz[0], xyz[1], xyz[2], 0])] = v.max(0.0);
            }
        }
        let total: Vec<f64> = (0..8).map(|s| p[s * 16..(s + 1) * 16].iter().sum()).collect();
        for (s, t) in total.iter().enumerate() {
            for v in &mut p[s * 16..(s + 1) * 16] {
                *v /= t;
            }
        }
        ExtendedBehavior::new(&Scenario::binary(3), 2, ms.scenario.untrusted, Tensor::Float(p))
            .expect("normalised table")
    }
}

fn moment(y: &[f64], class: usize) -> f64 {
    if class == 0 {
        1.0
    } else {
        y[class - 1]
    }
}

/// Splits a class combination into `(constant, variable terms)`.
fn linear(expr: &[(usize, f64)]) -> (f64, Vec<(usize, f64)>) {
    let mut constant = 0.0;
    let mut terms = Vec::new();
    for &(k, c) in expr {
        if k == 0 {
            constant += c;
        } else if c != 0.0 {
            terms.push((k - 1, c));
        }
    }
    (constant, terms)
}

fn as_f64(expr: Vec<(usize, i64)>, w: f64) -> Vec<(usize, f64)> {
    expr.into_iter().map(|(k, c)| (k, c as f64 * w)).collect()
}

fn merge(expr: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    let mut acc: HashMap<usize, f64> = HashMap::new();
    for (k, c) in expr {
        *acc.entry(k).or_insert(0.0) += c;
    }
    let mut v: Vec<(usize, f64)> = acc.into_iter().filter(|(_, c)| *c != 0.0).collect();
    v.sort_by_key(|e| e.0);
    v
}

/// Builds the semidefinite program: positivity of the moment matrix and of
/// all 128 probabilities, the no-signaling families of the causal model,
/// the optional value/marginal equalities, the relaxed secret-sharing
/// condition, and the objective `p(e = c | x*, y*, z*)`.
pub fn assemble_sdp(ms: &MomentStructure, c: &CertificationConstraints) -> Result<AssembledSdp> {
    if c.svetlichny_value.is_some() && c.fixed_marginal.is_some() {
        return Err(NpaError::ConflictingConstraints);
    }
    if ms.scenario.untrusted != c.untrusted {
        return Err(NpaError::ScenarioMismatch { built: ms.scenario.untrusted, requested: c.untrusted });
    }
    if c.target.iter().any(|&t| t > 1) {
        return Err(NpaError::InvalidConstraint(format!("target settings {:?}", c.target)));
    }
    let n = ms.size();
    let vars = ms.classes.len() - 1;
    let diagonal = if c.secret_sharing { 129 } else { 128 };
    let mut p = SemidefiniteProgram::new(
        vec![Block { kind: BlockKind::Psd, size: n }, Block { kind: BlockKind::Diagonal, size: diagonal }],
        vars,
    );
    for i in 0..n {
        for j in i..n {
            match ms.entry(i, j) {
                0 => p.push(None, 0, i, j, 1.0),
                k => p.push(Some(k - 1), 0, i, j, 1.0),
            }
        }
    }
    let sc = extended_binary_scenario();
    for xyz in input_triples() {
        for o in sc.outcome_tuples() {
            let row = sc.index(&o, &[xyz[0], xyz[1], xyz[2], 0]);
            let expr = ms.probability_expression([Some(o[0]), Some(o[1]), Some(o[2]), Some(o[3])], xyz);
            let (k0, terms) = linear(&as_f64(expr, 1.0));
            if k0 != 0.0 {
                p.push(None, 1, row, row, k0);
            }
            for (k, v) in terms {
                p.push(Some(k), 1, row, row, v);
            }
        }
    }
    let mut add_equality = |expr: Vec<(usize, f64)>, rhs: f64| {
        let (k0, terms) = linear(&merge(expr));
        if !terms.is_empty() || (rhs - k0).abs() > 0.0 {
            p.equalities.push((terms, rhs - k0));
        }
    };
    // No-signaling: marginals on the non-summed parties do not depend on
    // the varied input.
    for direction in c.untrusted.directions() {
        let (summed, varied) = direction.pattern();
        let rest: Vec<usize> = (0..4).filter(|q| !summed.contains(q)).collect();
        for xyz in input_triples().filter(|s| s[varied] == 1) {
            let mut xyz0 = xyz;
            xyz0[varied] = 0;
            for t in 1..(1usize << rest.len()) {
                let parties: Vec<usize> =
                    rest.iter().enumerate().filter(|(i, _)| t >> i & 1 == 1).map(|(_, &q)| q).collect();
                let k1 = ms.class_of(&ms.scenario.joint_word(&parties, xyz)).expect("registered");
                let k0 = ms.class_of(&ms.scenario.joint_word(&parties, xyz0)).expect("registered");
                if k1 != k0 {
                    add_equality(vec![(k1, 1.0), (k0, -1.0)], 0.0);
                }
            }
        }
    }
    if let Some(gamma) = &c.svetlichny_value {
        let f = svetlichny3();
        let mut expr = Vec::new();
        for xyz in input_triples() {
            for o in 0..8usize {
                let abc = [o & 1, o >> 1 & 1, o >> 2 & 1];
                let beta = f.coefficient(&abc, &xyz).to_f64();
                if beta != 0.0 {
                    let e = ms.probability_expression([Some(abc[0]), Some(abc[1]), Some(abc[2]), None], xyz);
                    expr.extend(as_f64(e, beta));
                }
            }
        }
        add_equality(expr, gamma.to_f64());
    }
    if let Some(m) = &c.fixed_marginal {
        if m.scenario() != &Scenario::binary(3) {
            return Err(NpaError::InvalidConstraint("fixed marginal must be tripartite binary".into()));
        }
        for xyz in input_triples() {
            for o in 0..8usize {
                let abc = [o & 1, o >> 1 & 1, o >> 2 & 1];
                let e = ms.probability_expression([Some(abc[0]), Some(abc[1]), Some(abc[2]), None], xyz);
                add_equality(as_f64(e, 1.0), m.prob(&abc, &xyz).to_f64());
            }
        }
    }
    let target = c.target;
    if c.secret_sharing {
        let mut expr = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                let e = ms.probability_expression([Some(a), Some(b), Some((a + b) % 2), None], target);
                expr.extend(as_f64(e, 1.0));
            }
        }
        // p(c = a⊕b) ≥ 1 − slack as an extra diagonal entry.
        let (k0, terms) = linear(&merge(expr));
        p.push(None, 1, 128, 128, k0 - (1.0 - c.secret_sharing_slack));
        for (k, v) in terms {
            p.push(Some(k), 1, 128, 128, v);
        }
    }
    // Moments of projector products lie in [-1, 1] for every quantum model.
    p.variable_bound = Some(1.0);
    let mut objective = Vec::new();
    for cc in 0..2 {
        objective.extend(as_f64(ms.probability_expression([None, None, Some(cc), Some(cc)], target), 1.0));
    }
    let (k0, terms) = linear(&merge(objective));
    p.objective_constant = k0;
    for (k, v) in terms {
        p.objective[k] = v;
    }
    Ok(AssembledSdp { program: p, matrix_size: n, moments: vars })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::check_nonsignaling;
    use crate::certify::Resource;
    use crate::num::Value;
    use crate::optimize::sdp::{solve_sdp, SdpOptions, SdpStatus};

    fn op(party: u8, setting: u8) -> Op {
        Op { party, setting }
    }

    #[test]
    fn level_parsing_round_trips() {
        let l: LevelSpec = "2+ABC+ABE+BCE+ABCE".parse().unwrap();
        assert_eq!(l.base, 2);
        assert_eq!(l.extras, vec![vec![0, 1, 2], vec![0, 1, 3], vec![1, 2, 3], vec![0, 1, 2, 3]]);
        assert_eq!(l.to_string(), "2+ABC+ABE+BCE+ABCE");
        assert_eq!("1+AB".parse::<LevelSpec>().unwrap().to_string(), "1+AB");
        for bad in ["", "x", "2+A", "2+ABX", "2+AAB", "+ABC"] {
            assert!(bad.parse::<LevelSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn reduction_rules() {
        assert_eq!(reduce(&[op(0, 0), op(0, 0)]), vec![op(0, 0)]);
        assert_eq!(reduce(&[op(1, 0), op(0, 0)]), reduce(&[op(0, 0), op(1, 0)]));
        assert_eq!(reduce(&[op(0, 0), op(1, 0), op(0, 0)]), vec![op(0, 0), op(1, 0)]);
        assert_eq!(reduce(&[op(0, 0), op(0, 1), op(0, 0)]).len(), 3);
        assert_eq!(canonical(&[op(0, 1), op(0, 0)]), vec![op(0, 0), op(0, 1)]);
    }

    #[test]
    fn monomial_counts() {
        let s = OperatorScenario::tripartite(UntrustedParty::Alice);
        assert_eq!(monomial_basis(&s, &LevelSpec::new(1)).size(), 13);
        assert_eq!(monomial_basis(&s, &LevelSpec::new(2)).size(), 93);
        assert_eq!(monomial_basis(&s, &LevelSpec::full()).size(), 237);
        let ms = monomial_basis(&s, &LevelSpec::new(1));
        assert!(ms.monomials[0].is_empty());
        assert_eq!(ms.entry(0, 0), 0);
    }

    #[test]
    fn commuting_products_share_a_class() {
        let s = OperatorScenario::tripartite(UntrustedParty::Alice);
        let ms = monomial_basis(&s, &LevelSpec::new(1));
        let a = ms.class_of(&[op(0, 0), op(1, 0)]).unwrap();
        assert_eq!(ms.class_of(&[op(1, 0), op(0, 0)]), Some(a));
        assert_eq!(ms.class_of(&[op(0, 0), op(0, 0)]), ms.class_of(&[op(0, 0)]));
        assert!(ms.free_classes().iter().all(|&k| k < ms.matrix_classes));
    }

    #[test]
    fn probabilities_sum_to_one() {
        let s = OperatorScenario::tripartite(UntrustedParty::Bob);
        let ms = monomial_basis(&s, &LevelSpec::new(1));
        let mut acc: HashMap<usize, i64> = HashMap::new();
        for o in 0..16usize {
            for (k, c) in
                ms.probability_expression([Some(o & 1), Some(o >> 1 & 1), Some(o >> 2 & 1), Some(o >> 3)], [1, 0, 1])
            {
                *acc.entry(k).or_insert(0) += c;
            }
        }
        acc.retain(|_, c| *c != 0);
        assert_eq!(acc, HashMap::from([(0, 1)]));
    }

    fn quantum(level: LevelSpec) -> CertificationConstraints {
        CertificationConstraints { resource: Resource::Quantum(level), ..Default::default() }
    }

    #[test]
    fn conflicting_constraints_rejected() {
        let s = OperatorScenario::tripartite(UntrustedParty::Alice);
        let ms = monomial_basis(&s, &LevelSpec::new(1));
        let mut c = quantum(LevelSpec::new(1));
        c.svetlichny_value = Some(Value::int(4));
        c.fixed_marginal = Some(crate::behavior::svetlichny_box());
        assert_eq!(assemble_sdp(&ms, &c).unwrap_err(), NpaError::ConflictingConstraints);
        c.fixed_marginal = None;
        c.untrusted = UntrustedParty::Bob;
        assert!(matches!(assemble_sdp(&ms, &c), Err(NpaError::ScenarioMismatch { .. })));
    }

    #[test]
    fn level_one_solution_is_nonsignaling() {
        let s = OperatorScenario::tripartite(UntrustedParty::Alice);
        let level = LevelSpec::new(1);
        let ms = monomial_basis(&s, &level);
        let mut c = quantum(level);
        c.svetlichny_value = Some(Value::Float(5.0));
        let sdp = assemble_sdp(&ms, &c).unwrap();
        let sol = solve_sdp(&sdp.program, &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        let b = sdp.behavior(&ms, &sol.y);
        let report = check_nonsignaling(&b, UntrustedParty::Alice);
        for chk in &report.checks {
            assert!(chk.worst_violation.to_f64() < 1e-6, "{chk:?}");
        }
        assert!(sol.upper_bound <= 1.0 + 1e-6 && sol.upper_bound >= 0.5);
    }

    #[test]
    fn secret_sharing_adds_one_relaxed_row() {
        let s = OperatorScenario::tripartite(UntrustedParty::Alice);
        let level = LevelSpec::new(1);
        let ms = monomial_basis(&s, &level);
        let mut c = quantum(level);
        c.svetlichny_value = Some(Value::Float(5.0));
        let plain = assemble_sdp(&ms, &c).unwrap();
        c.secret_sharing = true;
        let relaxed = assemble_sdp(&ms, &c).unwrap();
        assert_eq!(plain.program.blocks[1].size, 128);
        assert_eq!(relaxed.program.blocks[1].size, 129);
        assert_eq!(relaxed.program.equalities.len(), plain.program.equalities.len());
        let tight = solve_sdp(&relaxed.program, &SdpOptions::default()).unwrap().bound().unwrap();
        c.secret_sharing_slack = 1e-2;
        let loose_sdp = assemble_sdp(&ms, &c).unwrap();
        let loose = solve_sdp(&loose_sdp.program, &SdpOptions::default()).unwrap().bound().unwrap();
        let free = solve_sdp(&plain.program, &SdpOptions::default()).unwrap().bound().unwrap();
        assert!(tight <= loose + 1e-6 && loose <= free + 1e-6, "{tight} {loose} {free}");
    }
}
