//! Bell functionals and their correlator decompositions.
//!
//! Functionals are stored as coefficient tensors `β(outcomes, settings)` in
//! the same flat order as [`Behavior`]; the value is `Σ β·p`. Full-correlator
//! functionals `Σ_s c_s E_s` are expanded as `β(o, s) = c_s (-1)^{Σ o}`.

use num_traits::{One, Zero};
use serde_json::json;
use thiserror::Error;

use crate::behavior::{parse_tensor_json, tensor_json, Behavior, BehaviorError, RelabelSpec, Scenario};
use crate::num::{format_rational, parse_rational, qi, Rational, Scalar, Tensor, Value};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InequalityError {
    #[error("functional and behavior live in different scenarios")]
    ScenarioMismatch,
    #[error("expected a binary scenario with {0} parties")]
    NotBinary(usize),
    #[error("party count {0} is below 3")]
    TooFewParties(usize),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error("malformed functional JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, InequalityError>;

/// A linear functional on behaviors with its classical (or hybrid) bound.
#[derive(Clone, Debug, PartialEq)]
pub struct BellFunctional {
    name: String,
    scenario: Scenario,
    coefficients: Tensor,
    bound: Rational,
}

fn parity_sign(bits: &[usize]) -> i64 {
    if bits.iter().sum::<usize>() % 2 == 0 {
        1
    } else {
        -1
    }
}

impl BellFunctional {
    pub fn new(name: impl Into<String>, scenario: Scenario, coefficients: Tensor, bound: Rational) -> Result<Self> {
        if coefficients.len() != scenario.len() {
            return Err(BehaviorError::DimensionMismatch { expected: scenario.len(), found: coefficients.len() }.into());
        }
        Ok(BellFunctional { name: name.into(), scenario, coefficients, bound })
    }

    /// `Σ_s c(s) E_s` on `parties` binary parties.
    pub fn from_correlators(
        name: impl Into<String>,
        parties: usize,
        c: impl Fn(&[usize]) -> i64,
        bound: Rational,
    ) -> Self {
        let scenario = Scenario::binary(parties);
        let v = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                qi(c(&s) * parity_sign(&o))
            })
            .collect();
        BellFunctional { name: name.into(), scenario, coefficients: Tensor::Exact(v), bound }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn coefficients(&self) -> &Tensor {
        &self.coefficients
    }

    pub fn bound(&self) -> &Rational {
        &self.bound
    }

    pub fn coefficient(&self, outcomes: &[usize], settings: &[usize]) -> Value {
        self.coefficients.get(self.scenario.index(outcomes, settings))
    }

    /// Full-correlator coefficients `c_s`, if the functional has that form.
    pub fn correlator_coefficients(&self) -> Option<Vec<Rational>> {
        let Tensor::Exact(v) = &self.coefficients else {
            return None;
        };
        if !self.scenario.is_binary() {
            return None;
        }
        let oc = self.scenario.outcome_count();
        let outcomes = self.scenario.outcome_tuples();
        let mut out = Vec::with_capacity(self.scenario.setting_count());
        for block in v.chunks(oc) {
            let c = block[0].clone();
            for (o, beta) in outcomes.iter().zip(block) {
                if *beta != &c * qi(parity_sign(o)) {
                    return None;
                }
            }
            out.push(c);
        }
        Some(out)
    }

    /// The functional `f'` with `f'(relabel(b, spec)) = f(b)`.
    pub fn relabel(&self, spec: &RelabelSpec) -> Result<BellFunctional> {
        let (scenario, map) = spec.index_map(&self.scenario)?;
        Ok(BellFunctional {
            name: self.name.clone(),
            scenario,
            coefficients: crate::behavior::permute_tensor(&self.coefficients, &map),
            bound: self.bound.clone(),
        })
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = tensor_json(&self.scenario, &self.coefficients);
        let obj = v.as_object_mut().expect("object");
        let coefficients = obj.remove("p").expect("entries");
        obj.insert("name".into(), json!(self.name));
        obj.insert("bound".into(), json!(format_rational(&self.bound)));
        obj.insert("coefficients".into(), coefficients);
        v
    }

    pub fn from_json(value: &serde_json::Value) -> Result<BellFunctional> {
        let mut with_p = value.clone();
        let obj = with_p.as_object_mut().ok_or_else(|| InequalityError::Json("not an object".into()))?;
        let coeffs =
            obj.remove("coefficients").ok_or_else(|| InequalityError::Json("missing `coefficients`".into()))?;
        obj.insert("p".into(), coeffs);
        let (scenario, coefficients) = parse_tensor_json(&with_p)?;
        let bound = value
            .get("bound")
            .and_then(|b| match b {
                serde_json::Value::String(s) => parse_rational(s),
                serde_json::Value::Number(n) => n.as_i64().map(qi),
                _ => None,
            })
            .ok_or_else(|| InequalityError::Json("missing or bad `bound`".into()))?;
        let name = value.get("name").and_then(|n| n.as_str()).unwrap_or("functional");
        BellFunctional::new(name, scenario, coefficients, bound)
    }
}

/// `Σ β·p`; exact when both operands are exact.
pub fn evaluate(f: &BellFunctional, b: &Behavior) -> Result<Value> {
    if f.scenario() != b.scenario() {
        return Err(InequalityError::ScenarioMismatch);
    }
    Ok(match (f.coefficients(), b.entries()) {
        (Tensor::Exact(beta), Tensor::Exact(p)) => {
            Value::Exact(beta.iter().zip(p).fold(Rational::zero(), |acc, (x, y)| acc + x * y))
        }
        (beta, p) => Value::Float(beta.to_f64_vec().iter().zip(p.to_f64_vec()).map(|(x, y)| x * y).sum()),
    })
}

fn svetlichny_coefficient(s: &[usize]) -> i64 {
    let (x, y, z) = (s[0], s[1], s[2]);
    parity_sign(&[x * y, x * z, y * z])
}

/// `β = (-1)^{a+b+c+xy+xz+yz}`, bound 4.
pub fn svetlichny3() -> BellFunctional {
    BellFunctional::from_correlators("svetlichny3", 3, svetlichny_coefficient, qi(4))
}

/// `E_000 - E_011 - E_101 - E_110`, bound 2.
pub fn mermin3() -> BellFunctional {
    BellFunctional::from_correlators(
        "mermin3",
        3,
        |s| {
            if s.iter().sum::<usize>() == 0 {
                1
            } else if s.iter().sum::<usize>() == 2 {
                -1
            } else {
                0
            }
        },
        qi(2),
    )
}

/// CHSH `E00 + E01 + E10 - E11`, or the primed symmetry
/// `E00 - E01 - E10 - E11`; bound 2 for both.
pub fn chsh(primed: bool) -> BellFunctional {
    if primed {
        BellFunctional::from_correlators("chsh_prime", 2, |s| if s == [0, 0] { 1 } else { -1 }, qi(2))
    } else {
        BellFunctional::from_correlators("chsh", 2, |s| if s == [1, 1] { -1 } else { 1 }, qi(2))
    }
}

fn chsh_sign(primed: bool, y: usize, z: usize) -> i64 {
    match (primed, y, z) {
        (false, 1, 1) => -1,
        (false, _, _) => 1,
        (true, 0, 0) => 1,
        (true, _, _) => -1,
    }
}

/// Full correlators `E_s = Σ_o (-1)^{Σ o} p(o|s)` of a binary behavior, in
/// setting-index order.
pub fn correlators(b: &Behavior) -> Result<Vec<Value>> {
    let sc = b.scenario();
    if !sc.is_binary() {
        return Err(InequalityError::NotBinary(sc.parties()));
    }
    Ok(match b.entries() {
        Tensor::Exact(p) => correlators_impl(sc, p).into_iter().map(Value::Exact).collect(),
        Tensor::Float(p) => correlators_impl(sc, p).into_iter().map(Value::Float).collect(),
    })
}

fn correlators_impl<T: Scalar>(sc: &Scenario, p: &[T]) -> Vec<T> {
    let outcomes = sc.outcome_tuples();
    p.chunks(sc.outcome_count())
        .map(|block| {
            outcomes.iter().zip(block).fold(T::zero(), |acc, (o, x)| {
                if parity_sign(o) > 0 {
                    acc + x.clone()
                } else {
                    acc - x.clone()
                }
            })
        })
        .collect()
}

/// Correlators of a tripartite binary behavior conditioned on Alice.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorView {
    /// `E_xyz` at index `x + 2y + 4z`.
    pub full: Vec<Value>,
    /// `p_A(a|x)` at `[x][a]`.
    pub alice_marginal: [[Value; 2]; 2],
    /// `E^{ax}_{yz}` at `[x][a][y + 2z]`; `None` when `p_A(a|x) = 0`.
    pub conditional: [[Option<[Value; 4]>; 2]; 2],
}

/// The conditional-CHSH decomposition of the Svetlichny value.
#[derive(Clone, Debug, PartialEq)]
pub struct SvetlichnyDecomposition {
    pub view: CorrelatorView,
    /// `CHSH_{a0}` at `[0][a]` and `CHSH'_{a1}` at `[1][a]`.
    pub conditional_chsh: [[Option<Value>; 2]; 2],
    /// `(a, x)` slots whose conditional is undefined.
    pub marginal_zero: Vec<(usize, usize)>,
    pub decomposed_value: Value,
    pub coefficient_value: Value,
}

impl SvetlichnyDecomposition {
    pub fn discrepancy(&self) -> Value {
        self.decomposed_value.abs_diff(&self.coefficient_value)
    }

    pub fn agrees(&self, tol: f64) -> bool {
        match self.discrepancy() {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => x <= tol,
        }
    }
}

struct DecompositionRaw<T> {
    full: Vec<T>,
    marginal: [[T; 2]; 2],
    conditional: [[Option<[T; 4]>; 2]; 2],
    chsh: [[Option<T>; 2]; 2],
    decomposed: T,
}

fn decompose_impl<T: Scalar>(sc: &Scenario, p: &[T], marginal: &[T]) -> DecompositionRaw<T> {
    let full = correlators_impl(sc, p);
    let m = |a: usize, x: usize| marginal[2 * x + a].clone();
    let mut conditional: [[Option<[T; 4]>; 2]; 2] = Default::default();
    let mut chsh: [[Option<T>; 2]; 2] = Default::default();
    let mut decomposed = T::zero();
    for x in 0..2 {
        for a in 0..2 {
            let pa = m(a, x);
            if pa.is_zero() {
                continue;
            }
            let mut e: [T; 4] = std::array::from_fn(|_| T::zero());
            for y in 0..2 {
                for z in 0..2 {
                    let mut acc = T::zero();
                    for b in 0..2 {
                        for c in 0..2 {
                            let v = p[sc.index(&[a, b, c], &[x, y, z])].clone();
                            acc = if (b + c) % 2 == 0 { acc + v } else { acc - v };
                        }
                    }
                    e[y + 2 * z] = acc / pa.clone();
                }
            }
            let primed = x == 1;
            let value =
                (0..4).fold(T::zero(), |acc, k| acc + T::from_i64(chsh_sign(primed, k % 2, k / 2)) * e[k].clone());
            let term = pa * value.clone();
            decomposed = if a == 0 { decomposed + term } else { decomposed - term };
            conditional[x][a] = Some(e);
            chsh[x][a] = Some(value);
        }
    }
    DecompositionRaw { full, marginal: [[m(0, 0), m(1, 0)], [m(0, 1), m(1, 1)]], conditional, chsh, decomposed }
}

fn lift<T: Scalar>(raw: DecompositionRaw<T>, coefficient_value: Value) -> SvetlichnyDecomposition {
    let mut marginal_zero = Vec::new();
    for x in 0..2 {
        for a in 0..2 {
            if raw.conditional[x][a].is_none() {
                marginal_zero.push((a, x));
            }
        }
    }
    let v = |t: T| t.into_value();
    let [[m00, m10], [m01, m11]] = raw.marginal;
    let conditional = raw.conditional.map(|row| row.map(|slot| slot.map(|e| e.map(v))));
    let conditional_chsh = raw.chsh.map(|row| row.map(|slot| slot.map(v)));
    SvetlichnyDecomposition {
        view: CorrelatorView {
            full: raw.full.into_iter().map(v).collect(),
            alice_marginal: [[v(m00), v(m10)], [v(m01), v(m11)]],
            conditional,
        },
        conditional_chsh,
        marginal_zero,
        decomposed_value: v(raw.decomposed),
        coefficient_value,
    }
}

/// Conditions on Alice's input and output and rewrites the Svetlichny value as
/// `p_A(0|0) CHSH_00 - p_A(1|0) CHSH_10 + p_A(0|1) CHSH'_01 - p_A(1|1) CHSH'_11`.
pub fn decompose_svetlichny(b: &Behavior) -> Result<SvetlichnyDecomposition> {
    let sc = b.scenario();
    if sc.parties() != 3 || !sc.is_binary() {
        return Err(InequalityError::NotBinary(3));
    }
    let coefficient_value = evaluate(&svetlichny3(), b)?;
    let alice = b.marginal(&[0])?;
    Ok(match (b.entries(), alice.entries()) {
        (Tensor::Exact(p), Tensor::Exact(m)) => lift(decompose_impl(sc, p, m), coefficient_value),
        (p, m) => lift(decompose_impl(sc, &p.to_f64_vec(), &m.to_f64_vec()), coefficient_value),
    })
}

/// Correlator coefficients of the `n`-party Svetlichny functional:
/// `c_n(x_1..x_n) = c_{n-1}(x_1 ⊕ x_n, x_2, ..., x_{n-1})`.
pub fn svetlichny_n_coefficient(s: &[usize]) -> i64 {
    if s.len() == 3 {
        return svetlichny_coefficient(s);
    }
    let n = s.len();
    let mut head = s[..n - 1].to_vec();
    head[0] ^= s[n - 1];
    svetlichny_n_coefficient(&head)
}

/// `S_n = S_{n-1} A^{(n)}_0 + S'_{n-1} A^{(n)}_1` with `S'` the `x_1 → x_1 ⊕ 1`
/// relabeling, based at [`svetlichny3`]. The stated bound is 4 for every `n`.
pub fn svetlichny_n(n: usize) -> Result<BellFunctional> {
    if n < 3 {
        return Err(InequalityError::TooFewParties(n));
    }
    if n == 3 {
        return Ok(svetlichny3());
    }
    let prev = svetlichny_n(n - 1)?;
    let prime = prev.relabel(&RelabelSpec::flip_setting(prev.scenario(), 0))?;
    let prev_c = prev.correlator_coefficients().expect("correlator form");
    let prime_c = prime.correlator_coefficients().expect("correlator form");
    let sub = prev.scenario().clone();
    Ok(BellFunctional::from_correlators(
        format!("svetlichny{n}"),
        n,
        |s| {
            let i = sub.setting_index(&s[..n - 1]);
            let c = if s[n - 1] == 0 { &prev_c[i] } else { &prime_c[i] };
            if c.is_one() {
                1
            } else {
                -1
            }
        },
        qi(4),
    ))
}

/// A bipartite correlator slice `Σ c(x_1, x_2) E_{x_1 x_2}` with three equal
/// signs and one odd sign: a CHSH symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChshPattern {
    /// Setting pair `(x_1, x_2)` whose sign differs from the other three.
    pub odd_setting: [usize; 2],
    /// Sign of the three majority coefficients.
    pub sign: i64,
}

impl ChshPattern {
    pub const CHSH: ChshPattern = ChshPattern { odd_setting: [1, 1], sign: 1 };
    pub const CHSH_PRIME: ChshPattern = ChshPattern { odd_setting: [0, 0], sign: -1 };

    fn classify(c: [i64; 4]) -> Option<ChshPattern> {
        let plus = c.iter().filter(|&&v| v == 1).count();
        let (sign, odd_value) = match plus {
            3 => (1, -1),
            1 => (-1, 1),
            _ => return None,
        };
        let k = c.iter().position(|&v| v == odd_value)?;
        Some(ChshPattern { odd_setting: [k % 2, k / 2], sign })
    }

    pub fn label(&self) -> String {
        match *self {
            ChshPattern::CHSH => "CHSH".into(),
            ChshPattern::CHSH_PRIME => "CHSH'".into(),
            p => format!("{}CHSH[odd {}{}]", if p.sign > 0 { "+" } else { "-" }, p.odd_setting[0], p.odd_setting[1]),
        }
    }
}

/// One conditioning slot `(a_3..a_n, x_3..x_n)` of the expansion.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionTerm {
    pub settings: Vec<usize>,
    pub outcomes: Vec<usize>,
    /// `p_{A_3..A_n}(a_3..a_n | x_3..x_n)`.
    pub weight: Value,
    /// `None` if the slice is not a CHSH symmetry.
    pub pattern: Option<ChshPattern>,
    /// Conditional CHSH-type value of parties 1 and 2; `None` if `weight = 0`.
    pub conditional_value: Option<Value>,
}

impl ExpansionTerm {
    pub fn marginal_zero(&self) -> bool {
        self.conditional_value.is_none()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExpansionReport {
    pub parties: usize,
    pub terms: Vec<ExpansionTerm>,
    pub expanded_value: Value,
    pub direct_value: Value,
    /// Whether every slice is CHSH when `⊕_{k≥3} x_k = 0` and CHSH' otherwise.
    pub matches_parity_rule: bool,
}

impl ExpansionReport {
    pub fn discrepancy(&self) -> Value {
        self.expanded_value.abs_diff(&self.direct_value)
    }

    pub fn agrees(&self, tol: f64) -> bool {
        match self.discrepancy() {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => x <= tol,
        }
    }
}

/// Conditions the `n`-party Svetlichny value on parties `3..n`:
/// `S_n = Σ (-1)^{Σ a_j} p(a_3..a_n | x_3..x_n) · slice(x_3..x_n)` evaluated on
/// the conditional bipartite correlators of parties 1 and 2.
pub fn expand_recursion(n: usize, b: &Behavior) -> Result<ExpansionReport> {
    let f = svetlichny_n(n)?;
    if b.scenario() != f.scenario() {
        return Err(InequalityError::ScenarioMismatch);
    }
    let direct_value = evaluate(&f, b)?;
    let rest: Vec<usize> = (2..n).collect();
    let marginal = b.marginal(&rest)?;
    let sc = b.scenario().clone();
    let rest_sc = marginal.scenario().clone();
    let (terms, expanded_value) = match (b.entries(), marginal.entries()) {
        (Tensor::Exact(p), Tensor::Exact(m)) => {
            let (t, v) = expand_impl(&sc, &rest_sc, p, m);
            (t, v.into_value())
        }
        (p, m) => {
            let (t, v) = expand_impl(&sc, &rest_sc, &p.to_f64_vec(), &m.to_f64_vec());
            (t, v.into_value())
        }
    };
    let matches_parity_rule = terms.iter().all(|t| {
        let expected =
            if t.settings.iter().sum::<usize>() % 2 == 0 { ChshPattern::CHSH } else { ChshPattern::CHSH_PRIME };
        t.pattern == Some(expected)
    });
    Ok(ExpansionReport { parties: n, terms, expanded_value, direct_value, matches_parity_rule })
}

fn expand_impl<T: Scalar>(sc: &Scenario, rest_sc: &Scenario, p: &[T], m: &[T]) -> (Vec<ExpansionTerm>, T) {
    let mut terms = Vec::new();
    let mut total = T::zero();
    for xs in rest_sc.setting_tuples() {
        let slice: [i64; 4] = std::array::from_fn(|k| {
            let mut s = vec![k % 2, k / 2];
            s.extend(&xs);
            svetlichny_n_coefficient(&s)
        });
        let pattern = ChshPattern::classify(slice);
        for os in rest_sc.outcome_tuples() {
            let weight = m[rest_sc.index(&os, &xs)].clone();
            let conditional_value = if weight.is_zero() {
                None
            } else {
                let mut acc = T::zero();
                for k in 0..4 {
                    let mut s = vec![k % 2, k / 2];
                    s.extend(&xs);
                    let mut e = T::zero();
                    for a12 in 0..4 {
                        let mut o = vec![a12 % 2, a12 / 2];
                        o.extend(&os);
                        let v = p[sc.index(&o, &s)].clone();
                        e = if (a12 % 2 + a12 / 2) % 2 == 0 { e + v } else { e - v };
                    }
                    acc = acc + T::from_i64(slice[k]) * e;
                }
                Some(acc / weight.clone())
            };
            if let Some(v) = &conditional_value {
                let term = weight.clone() * v.clone();
                total = if parity_sign(&os) > 0 { total + term } else { total - term };
            }
            terms.push(ExpansionTerm {
                settings: xs.clone(),
                outcomes: os,
                weight: weight.into_value(),
                pattern,
                conditional_value: conditional_value.map(Scalar::into_value),
            });
        }
    }
    (terms, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{classical_box, mermin_box, parity_box, random_nonsignaling, svetlichny_box};
    use crate::num::q;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn box_values() {
        assert_eq!(evaluate(&svetlichny3(), &svetlichny_box()).unwrap(), Value::int(8));
        assert_eq!(evaluate(&svetlichny3(), &classical_box()).unwrap(), Value::int(4));
        assert_eq!(evaluate(&svetlichny3(), &Behavior::uniform(Scenario::binary(3))).unwrap(), Value::int(0));
        assert_eq!(evaluate(&mermin3(), &mermin_box()).unwrap(), Value::int(4));
        assert!(evaluate(&mermin3(), &classical_box()).unwrap().to_f64() <= 2.0);
    }

    #[test]
    fn scenario_mismatch() {
        assert_eq!(evaluate(&chsh(false), &svetlichny_box()), Err(InequalityError::ScenarioMismatch));
    }

    #[test]
    fn chsh_on_pr_boxes() {
        let pr = parity_box(2, |s| s[0] * s[1]);
        assert_eq!(evaluate(&chsh(false), &pr).unwrap(), Value::int(4));
        let pr_prime = parity_box(2, |s| s[0] | s[1]);
        assert_eq!(evaluate(&chsh(true), &pr_prime).unwrap(), Value::int(4));
        assert_eq!(evaluate(&chsh(true), &pr).unwrap(), Value::int(0));
    }

    #[test]
    fn local_deterministic_bound_is_four() {
        let mut worst = 0i64;
        for strategy in 0..64usize {
            let bits: Vec<usize> = (0..6).map(|k| (strategy >> k) & 1).collect();
            let b = Behavior::from_fn(Scenario::binary(3), |o, s| {
                if (0..3).all(|k| o[k] == bits[2 * k + s[k]]) {
                    qi(1)
                } else {
                    Rational::zero()
                }
            })
            .unwrap();
            let v = evaluate(&svetlichny3(), &b).unwrap();
            worst = worst.max(v.to_f64().abs() as i64);
        }
        assert_eq!(worst, 4);
    }

    #[test]
    fn svetlichny_box_decomposition() {
        let d = decompose_svetlichny(&svetlichny_box()).unwrap();
        assert_eq!(d.conditional_chsh[0][0], Some(Value::int(4)));
        assert_eq!(d.conditional_chsh[1][1], Some(Value::int(-4)));
        assert!(d.agrees(0.0));
        assert!(d.marginal_zero.is_empty());
    }

    #[test]
    fn marginal_zero_is_flagged() {
        let b = parity_box(3, |s| s[1] * s[2]);
        let det = Behavior::from_fn(Scenario::binary(3), |o, s| {
            if o[0] == 0 && (o[1] + o[2]) % 2 == s[1] * s[2] {
                q(1, 2)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        assert!(decompose_svetlichny(&b).unwrap().marginal_zero.is_empty());
        let d = decompose_svetlichny(&det).unwrap();
        assert_eq!(d.marginal_zero, vec![(1, 0), (1, 1)]);
        assert!(d.agrees(0.0));
    }

    #[test]
    fn recursion_base_and_involution() {
        assert_eq!(svetlichny_n(3).unwrap(), svetlichny3());
        let s4 = svetlichny_n(4).unwrap();
        let flip = RelabelSpec::flip_setting(s4.scenario(), 0);
        let twice = s4.relabel(&flip).unwrap().relabel(&flip).unwrap();
        assert_eq!(twice.coefficients(), s4.coefficients());
        assert_eq!(s4.bound(), &qi(4));
        assert!(svetlichny_n(2).is_err());
    }

    #[test]
    fn recursion_matches_closed_form() {
        for n in 3..=6 {
            let f = svetlichny_n(n).unwrap();
            let c = f.correlator_coefficients().unwrap();
            for (i, s) in f.scenario().setting_tuples().iter().enumerate() {
                assert_eq!(c[i], qi(svetlichny_n_coefficient(s)));
            }
        }
    }

    #[test]
    fn expansion_n3_matches_decomposition() {
        for b in [svetlichny_box(), classical_box(), mermin_box()] {
            let e = expand_recursion(3, &b).unwrap();
            let d = decompose_svetlichny(&b).unwrap();
            assert_eq!(e.expanded_value, d.decomposed_value);
            assert!(e.agrees(0.0));
            assert!(e.matches_parity_rule);
        }
    }

    #[test]
    fn expansion_random_n4() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let b = random_nonsignaling(&mut rng, 4, 4);
            let e = expand_recursion(4, &b).unwrap();
            assert!(e.agrees(1e-12), "{:?}", e.discrepancy());
        }
    }

    #[test]
    fn relabel_covariance_chsh() {
        let sc = Scenario::binary(2);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = random_nonsignaling(&mut rng, 2, 3);
        let flip_x = RelabelSpec::flip_setting(&sc, 0);
        let spec = flip_x
            .then(&RelabelSpec::flip_setting(&sc, 1), &sc)
            .unwrap()
            .then(&RelabelSpec::flip_outcome(&sc, 0, 0), &sc)
            .unwrap()
            .then(&RelabelSpec::flip_outcome(&sc, 0, 1), &sc)
            .unwrap();
        let lhs = evaluate(&chsh(false), &b.relabel(&spec).unwrap()).unwrap().to_f64();
        let rhs = evaluate(&chsh(true), &b).unwrap().to_f64();
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let f = svetlichny3();
        let back = BellFunctional::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
    }
}
