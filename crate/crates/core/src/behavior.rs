//! Multipartite behaviors `p(outcomes | settings)` and the named boxes.
//!
//! # Index convention
//!
//! A [`Scenario`] fixes one flat ordering for every probability table in the
//! crate: settings are the outer (slow) index and outcomes the inner (fast)
//! index. Inside each block the first party varies fastest:
//!
//! ```text
//! flat = setting_index * outcome_count + outcome_index
//! setting_index = x_1 + s_1 * (x_2 + s_2 * (x_3 + ...))
//! outcome_index = a_1 + o_1 * (a_2 + o_2 * (a_3 + ...))
//! ```
//!
//! An [`ExtendedBehavior`] stores `p(a,b,c,e|x,y,z)` as a four-party table
//! whose last party is the adversary, with a single (dummy) setting.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde_json::json;
use thiserror::Error;

use crate::num::{format_rational, parse_rational, q, Arithmetic, Rational, Scalar, Tensor, Value};

/// Float-mode tolerance for normalization and positivity.
pub const FLOAT_NORMALIZATION_TOL: f64 = 1e-12;
/// Float-mode tolerance for marginal and non-signaling comparisons.
pub const FLOAT_SIGNALING_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dimension mismatch: expected {expected} entries, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("settings {settings:?} sum to {sum}, not 1")]
    NotNormalized { settings: Vec<usize>, sum: f64 },
    #[error("entry {index} is negative ({value})")]
    NegativeEntry { index: usize, value: f64 },
    #[error("behaviors live in different scenarios")]
    ScenarioMismatch,
    #[error("mixing weight {0} outside [0, 1]")]
    WeightOutOfRange(String),
    #[error("parameter {0} out of range")]
    ParameterOutOfRange(String),
    #[error("marginal depends on the setting of dropped party {party} (gap {gap})")]
    SignalingMarginal { party: usize, gap: f64 },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("malformed behavior JSON: {0}")]
    Json(String),
}

pub type Result<T> = std::result::Result<T, BehaviorError>;

/// Party counts, settings per party and outcomes per party.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scenario {
    settings: Vec<usize>,
    outcomes: Vec<usize>,
}

impl Scenario {
    pub fn new(settings: Vec<usize>, outcomes: Vec<usize>) -> Result<Self> {
        if settings.is_empty() {
            return Err(BehaviorError::InvalidScenario("no parties".into()));
        }
        if settings.len() != outcomes.len() {
            return Err(BehaviorError::InvalidScenario(format!(
                "{} setting counts but {} outcome counts",
                settings.len(),
                outcomes.len()
            )));
        }
        if settings.iter().chain(&outcomes).any(|&c| c == 0) {
            return Err(BehaviorError::InvalidScenario("every count must be at least 1".into()));
        }
        Ok(Scenario { settings, outcomes })
    }

    /// `parties` parties with two settings and two outcomes each.
    pub fn binary(parties: usize) -> Self {
        Scenario::new(vec![2; parties], vec![2; parties]).expect("binary scenario")
    }

    pub fn parties(&self) -> usize {
        self.settings.len()
    }

    pub fn settings(&self) -> &[usize] {
        &self.settings
    }

    pub fn outcomes(&self) -> &[usize] {
        &self.outcomes
    }

    pub fn setting_count(&self) -> usize {
        self.settings.iter().product()
    }

    pub fn outcome_count(&self) -> usize {
        self.outcomes.iter().product()
    }

    pub fn len(&self) -> usize {
        self.setting_count() * self.outcome_count()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_binary(&self) -> bool {
        self.settings.iter().chain(&self.outcomes).all(|&c| c == 2)
    }

    pub fn setting_index(&self, settings: &[usize]) -> usize {
        mixed_radix(settings, &self.settings)
    }

    pub fn outcome_index(&self, outcomes: &[usize]) -> usize {
        mixed_radix(outcomes, &self.outcomes)
    }

    pub fn index(&self, outcomes: &[usize], settings: &[usize]) -> usize {
        self.setting_index(settings) * self.outcome_count() + self.outcome_index(outcomes)
    }

    /// Inverse of [`Scenario::index`]: `(outcomes, settings)`.
    pub fn decode(&self, flat: usize) -> (Vec<usize>, Vec<usize>) {
        let oc = self.outcome_count();
        (unradix(flat % oc, &self.outcomes), unradix(flat / oc, &self.settings))
    }

    /// All setting tuples in canonical order.
    pub fn setting_tuples(&self) -> Vec<Vec<usize>> {
        (0..self.setting_count()).map(|i| unradix(i, &self.settings)).collect()
    }

    pub fn outcome_tuples(&self) -> Vec<Vec<usize>> {
        (0..self.outcome_count()).map(|i| unradix(i, &self.outcomes)).collect()
    }

    /// The sub-scenario on `keep` (in the given order).
    pub fn restrict(&self, keep: &[usize]) -> Result<Scenario> {
        check_party_subset(keep, self.parties())?;
        Scenario::new(
            keep.iter().map(|&k| self.settings[k]).collect(),
            keep.iter().map(|&k| self.outcomes[k]).collect(),
        )
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "settings {:?}, outcomes {:?}", self.settings, self.outcomes)
    }
}

fn mixed_radix(digits: &[usize], radices: &[usize]) -> usize {
    debug_assert_eq!(digits.len(), radices.len());
    digits.iter().zip(radices).rev().fold(0, |acc, (&d, &r)| {
        debug_assert!(d < r);
        acc * r + d
    })
}

fn unradix(mut flat: usize, radices: &[usize]) -> Vec<usize> {
    radices
        .iter()
        .map(|&r| {
            let d = flat % r;
            flat /= r;
            d
        })
        .collect()
}

fn check_party_subset(keep: &[usize], parties: usize) -> Result<()> {
    if keep.is_empty() {
        return Err(BehaviorError::InvalidScenario("empty party subset".into()));
    }
    let mut seen = vec![false; parties];
    for &k in keep {
        if k >= parties || seen[k] {
            return Err(BehaviorError::InvalidScenario(format!("bad party subset {keep:?}")));
        }
        seen[k] = true;
    }
    Ok(())
}

/// A validated conditional probability table.
#[derive(Clone, Debug, PartialEq)]
pub struct Behavior {
    scenario: Scenario,
    p: Tensor,
}

impl Behavior {
    pub fn new(scenario: Scenario, p: Tensor) -> Result<Self> {
        if p.len() != scenario.len() {
            return Err(BehaviorError::DimensionMismatch { expected: scenario.len(), found: p.len() });
        }
        match &p {
            Tensor::Exact(v) => validate(&scenario, v, 0.0)?,
            Tensor::Float(v) => validate(&scenario, v, FLOAT_NORMALIZATION_TOL)?,
        }
        Ok(Behavior { scenario, p })
    }

    /// Exact behavior from a function of `(outcomes, settings)`.
    pub fn from_fn(scenario: Scenario, f: impl Fn(&[usize], &[usize]) -> Rational) -> Result<Self> {
        let v = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                f(&o, &s)
            })
            .collect();
        Behavior::new(scenario, Tensor::Exact(v))
    }

    pub fn from_fn_f64(scenario: Scenario, f: impl Fn(&[usize], &[usize]) -> f64) -> Result<Self> {
        let v = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                f(&o, &s)
            })
            .collect();
        Behavior::new(scenario, Tensor::Float(v))
    }

    /// The uniform distribution, exact.
    pub fn uniform(scenario: Scenario) -> Self {
        let w = q(1, scenario.outcome_count() as i64);
        Behavior { p: Tensor::Exact(vec![w; scenario.len()]), scenario }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn entries(&self) -> &Tensor {
        &self.p
    }

    pub fn arithmetic(&self) -> Arithmetic {
        self.p.arithmetic()
    }

    pub fn prob(&self, outcomes: &[usize], settings: &[usize]) -> Value {
        self.p.get(self.scenario.index(outcomes, settings))
    }

    pub fn to_float(&self) -> Behavior {
        Behavior { scenario: self.scenario.clone(), p: self.p.to_float() }
    }

    /// Entrywise `v * b1 + (1 - v) * b2`.
    pub fn mix(b1: &Behavior, b2: &Behavior, v: &Value) -> Result<Behavior> {
        if b1.scenario != b2.scenario {
            return Err(BehaviorError::ScenarioMismatch);
        }
        let out_of_range = match v {
            Value::Exact(r) => r.is_negative() || *r > Rational::one(),
            Value::Float(x) => !(0.0..=1.0).contains(x),
        };
        if out_of_range {
            return Err(BehaviorError::WeightOutOfRange(v.to_string()));
        }
        let p = match (&b1.p, &b2.p, v) {
            (Tensor::Exact(x), Tensor::Exact(y), Value::Exact(w)) => {
                let w1 = Rational::one() - w;
                Tensor::Exact(x.iter().zip(y).map(|(a, b)| w * a + &w1 * b).collect())
            }
            _ => {
                let (x, y, w) = (b1.p.to_f64_vec(), b2.p.to_f64_vec(), v.to_f64());
                Tensor::Float(x.iter().zip(&y).map(|(a, b)| w * a + (1.0 - w) * b).collect())
            }
        };
        Behavior::new(b1.scenario.clone(), p)
    }

    /// Sums out every party not in `keep`; the result keeps the parties in
    /// the order given. Fails if the kept table depends on a dropped party's
    /// setting.
    pub fn marginal(&self, keep: &[usize]) -> Result<Behavior> {
        let sub = self.scenario.restrict(keep)?;
        match &self.p {
            Tensor::Exact(v) => marginal_impl(&self.scenario, v, keep, &sub, 0.0)
                .map(|m| Behavior { scenario: sub.clone(), p: Tensor::Exact(m) }),
            Tensor::Float(v) => marginal_impl(&self.scenario, v, keep, &sub, FLOAT_SIGNALING_TOL)
                .map(|m| Behavior { scenario: sub.clone(), p: Tensor::Float(m) }),
        }
    }

    /// Largest change of the table obtained by summing the outcomes of
    /// `summed`, when the setting of `varied` changes.
    pub fn signaling_gap(&self, summed: &[usize], varied: usize) -> Value {
        match &self.p {
            Tensor::Exact(v) => Value::Exact(signaling_gap_impl(&self.scenario, v, summed, varied)),
            Tensor::Float(v) => Value::Float(signaling_gap_impl(&self.scenario, v, summed, varied)),
        }
    }

    /// Largest single-party signaling gap; zero for non-signaling tables.
    pub fn nonsignaling_violation(&self) -> Value {
        let mut worst = match self.arithmetic() {
            Arithmetic::Exact => Value::int(0),
            Arithmetic::Float => Value::Float(0.0),
        };
        for k in 0..self.scenario.parties() {
            let g = self.signaling_gap(&[k], k);
            if g.to_f64() > worst.to_f64() || (g.is_exact() && worst.is_exact() && g.as_exact() > worst.as_exact()) {
                worst = g;
            }
        }
        worst
    }

    /// Non-signaling in every single-party direction (exact, or within
    /// `tol` in float mode). Multi-party marginals follow from these.
    pub fn is_nonsignaling(&self, tol: f64) -> bool {
        match self.nonsignaling_violation() {
            Value::Exact(r) => r.is_zero(),
            Value::Float(x) => x <= tol,
        }
    }

    pub fn relabel(&self, spec: &RelabelSpec) -> Result<Behavior> {
        let (scenario, map) = spec.index_map(&self.scenario)?;
        let p = permute_tensor(&self.p, &map);
        Ok(Behavior { scenario, p })
    }

    pub fn to_json(&self) -> serde_json::Value {
        tensor_json(&self.scenario, &self.p)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Behavior> {
        let (scenario, p) = parse_tensor_json(value)?;
        Behavior::new(scenario, p)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json()).expect("serializable")
    }

    pub fn from_json_str(s: &str) -> Result<Behavior> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| BehaviorError::Json(e.to_string()))?;
        Behavior::from_json(&v)
    }
}

fn validate<T: Scalar>(scenario: &Scenario, v: &[T], tol: f64) -> Result<()> {
    let neg_floor = T::from_float(-tol);
    if let Some((index, value)) = v.iter().enumerate().find(|(_, x)| **x < neg_floor) {
        return Err(BehaviorError::NegativeEntry { index, value: value.approx() });
    }
    let oc = scenario.outcome_count();
    for (s, block) in v.chunks(oc).enumerate() {
        let sum = block.iter().fold(T::zero(), |acc, x| acc + x.clone());
        let off = (sum.clone() - T::one()).abs();
        if !off.near_zero(tol) {
            return Err(BehaviorError::NotNormalized { settings: unradix(s, scenario.settings()), sum: sum.approx() });
        }
    }
    Ok(())
}

fn marginal_impl<T: Scalar>(scenario: &Scenario, v: &[T], keep: &[usize], sub: &Scenario, tol: f64) -> Result<Vec<T>> {
    let n = scenario.parties();
    let dropped: Vec<usize> = (0..n).filter(|k| !keep.contains(k)).collect();
    // Reference: every dropped party at setting 0.
    let mut out = vec![T::zero(); sub.len()];
    let mut filled = vec![false; sub.setting_count()];
    for s in scenario.setting_tuples() {
        let sub_s: Vec<usize> = keep.iter().map(|&k| s[k]).collect();
        let mut block = vec![T::zero(); sub.outcome_count()];
        for o in scenario.outcome_tuples() {
            let sub_o: Vec<usize> = keep.iter().map(|&k| o[k]).collect();
            let x = v[scenario.index(&o, &s)].clone();
            let slot = &mut block[sub.outcome_index(&sub_o)];
            *slot = slot.clone() + x;
        }
        let si = sub.setting_index(&sub_s);
        let base = si * sub.outcome_count();
        if !filled[si] {
            out[base..base + sub.outcome_count()].clone_from_slice(&block);
            filled[si] = true;
        } else {
            for (j, x) in block.into_iter().enumerate() {
                let gap = (x - out[base + j].clone()).abs();
                if !gap.near_zero(tol) {
                    let party = dropped.iter().copied().find(|&d| s[d] != 0).unwrap_or(dropped[0]);
                    return Err(BehaviorError::SignalingMarginal { party, gap: gap.approx() });
                }
            }
        }
    }
    Ok(out)
}

fn signaling_gap_impl<T: Scalar>(scenario: &Scenario, v: &[T], summed: &[usize], varied: usize) -> T {
    let oc = scenario.outcome_count();
    let sc = scenario.setting_count();
    // marginal[s][o'] with summed outcomes collapsed to 0
    let mut m = vec![T::zero(); sc * oc];
    for (i, x) in v.iter().enumerate() {
        let (mut o, s) = scenario.decode(i);
        for &k in summed {
            o[k] = 0;
        }
        let j = scenario.index(&o, &s);
        m[j] = m[j].clone() + x.clone();
    }
    let mut worst = T::zero();
    for s in scenario.setting_tuples() {
        if s[varied] == 0 {
            continue;
        }
        let mut s0 = s.clone();
        s0[varied] = 0;
        for o in scenario.outcome_tuples() {
            if summed.iter().any(|&k| o[k] != 0) {
                continue;
            }
            let d = (m[scenario.index(&o, &s)].clone() - m[scenario.index(&o, &s0)].clone()).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    worst
}

pub(crate) fn permute_tensor(p: &Tensor, map: &[usize]) -> Tensor {
    match p {
        Tensor::Exact(v) => {
            let mut out = vec![Rational::zero(); v.len()];
            for (i, x) in v.iter().enumerate() {
                out[map[i]] = x.clone();
            }
            Tensor::Exact(out)
        }
        Tensor::Float(v) => {
            let mut out = vec![0.0; v.len()];
            for (i, x) in v.iter().enumerate() {
                out[map[i]] = *x;
            }
            Tensor::Float(out)
        }
    }
}

pub(crate) fn tensor_json(scenario: &Scenario, p: &Tensor) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = match p {
        Tensor::Exact(v) => v.iter().map(|r| json!(format_rational(r))).collect(),
        Tensor::Float(v) => v.iter().map(|x| json!(x)).collect(),
    };
    json!({
        "parties": scenario.parties(),
        "settings": scenario.settings(),
        "outcomes": scenario.outcomes(),
        "arithmetic": p.arithmetic().to_string(),
        "p": entries,
    })
}

pub(crate) fn parse_tensor_json(value: &serde_json::Value) -> Result<(Scenario, Tensor)> {
    let err = |m: &str| BehaviorError::Json(m.to_string());
    let counts = |key: &str| -> Result<Vec<usize>> {
        value
            .get(key)
            .and_then(|v| v.as_array())
            .ok_or_else(|| err(&format!("missing array `{key}`")))?
            .iter()
            .map(|c| c.as_u64().map(|c| c as usize).ok_or_else(|| err(&format!("non-integer in `{key}`"))))
            .collect()
    };
    let settings = counts("settings")?;
    let outcomes = counts("outcomes")?;
    if let Some(n) = value.get("parties") {
        if n.as_u64() != Some(settings.len() as u64) {
            return Err(err("`parties` disagrees with `settings`"));
        }
    }
    let scenario = Scenario::new(settings, outcomes)?;
    let entries = value.get("p").and_then(|v| v.as_array()).ok_or_else(|| err("missing array `p`"))?;
    let mode = value.get("arithmetic").and_then(|v| v.as_str()).unwrap_or("exact");
    let p = match mode {
        "exact" => Tensor::Exact(
            entries
                .iter()
                .map(|e| match e {
                    serde_json::Value::String(s) => {
                        parse_rational(s).ok_or_else(|| err(&format!("bad rational `{s}`")))
                    }
                    serde_json::Value::Number(n) if n.is_i64() => Ok(crate::num::qi(n.as_i64().unwrap())),
                    _ => Err(err("exact entries must be \"num/den\" strings")),
                })
                .collect::<Result<_>>()?,
        ),
        "float" => Tensor::Float(
            entries
                .iter()
                .map(|e| match e {
                    serde_json::Value::Number(n) => n.as_f64().ok_or_else(|| err("bad number")),
                    serde_json::Value::String(s) => s.parse::<f64>().map_err(|_| err(&format!("bad float `{s}`"))),
                    _ => Err(err("float entries must be numbers")),
                })
                .collect::<Result<_>>()?,
        ),
        other => return Err(err(&format!("unknown arithmetic `{other}`"))),
    };
    Ok((scenario, p))
}

/// Party, setting and outcome relabeling.
///
/// Old party `k` becomes party `party_perm[k]`; its setting `x` becomes
/// `setting_perms[k][x]`, and its outcome `a` under setting `x` becomes
/// `outcome_perms[k][x][a]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelabelSpec {
    pub party_perm: Vec<usize>,
    pub setting_perms: Vec<Vec<usize>>,
    pub outcome_perms: Vec<Vec<Vec<usize>>>,
}

impl RelabelSpec {
    pub fn identity(scenario: &Scenario) -> Self {
        let n = scenario.parties();
        RelabelSpec {
            party_perm: (0..n).collect(),
            setting_perms: scenario.settings().iter().map(|&s| (0..s).collect()).collect(),
            outcome_perms: (0..n)
                .map(|k| vec![(0..scenario.outcomes()[k]).collect(); scenario.settings()[k]])
                .collect(),
        }
    }

    /// `x_party -> x_party ⊕ 1` on a binary-setting party.
    pub fn flip_setting(scenario: &Scenario, party: usize) -> Self {
        let mut s = RelabelSpec::identity(scenario);
        s.setting_perms[party].reverse();
        s
    }

    /// Flips the outcome of `party` when its setting is `setting`.
    pub fn flip_outcome(scenario: &Scenario, party: usize, setting: usize) -> Self {
        let mut s = RelabelSpec::identity(scenario);
        s.outcome_perms[party][setting].reverse();
        s
    }

    pub fn swap_parties(scenario: &Scenario, i: usize, j: usize) -> Self {
        let mut s = RelabelSpec::identity(scenario);
        s.party_perm.swap(i, j);
        s
    }

    pub fn validate(&self, scenario: &Scenario) -> Result<()> {
        let n = scenario.parties();
        let bad = |m: String| Err(BehaviorError::InvalidPermutation(m));
        if !is_permutation(&self.party_perm, n) {
            return bad(format!("party map {:?}", self.party_perm));
        }
        if self.setting_perms.len() != n || self.outcome_perms.len() != n {
            return bad("one entry per party required".into());
        }
        for k in 0..n {
            if !is_permutation(&self.setting_perms[k], scenario.settings()[k]) {
                return bad(format!("setting map of party {k}: {:?}", self.setting_perms[k]));
            }
            if self.outcome_perms[k].len() != scenario.settings()[k] {
                return bad(format!("party {k} needs one outcome map per setting"));
            }
            for (x, perm) in self.outcome_perms[k].iter().enumerate() {
                if !is_permutation(perm, scenario.outcomes()[k]) {
                    return bad(format!("outcome map of party {k}, setting {x}: {perm:?}"));
                }
            }
        }
        Ok(())
    }

    /// The scenario after relabeling.
    pub fn image(&self, scenario: &Scenario) -> Result<Scenario> {
        self.validate(scenario)?;
        let n = scenario.parties();
        let mut settings = vec![0; n];
        let mut outcomes = vec![0; n];
        for k in 0..n {
            settings[self.party_perm[k]] = scenario.settings()[k];
            outcomes[self.party_perm[k]] = scenario.outcomes()[k];
        }
        Scenario::new(settings, outcomes)
    }

    /// New scenario and the map old flat index -> new flat index.
    pub fn index_map(&self, scenario: &Scenario) -> Result<(Scenario, Vec<usize>)> {
        let target = self.image(scenario)?;
        let n = scenario.parties();
        let map = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                let mut no = vec![0; n];
                let mut ns = vec![0; n];
                for k in 0..n {
                    let to = self.party_perm[k];
                    ns[to] = self.setting_perms[k][s[k]];
                    no[to] = self.outcome_perms[k][s[k]][o[k]];
                }
                target.index(&no, &ns)
            })
            .collect();
        Ok((target, map))
    }

    /// The relabeling undoing `self`; `scenario` is the domain of `self`.
    pub fn inverse(&self, scenario: &Scenario) -> Result<RelabelSpec> {
        let target = self.image(scenario)?;
        let mut out = RelabelSpec::identity(&target);
        for k in 0..scenario.parties() {
            let m = self.party_perm[k];
            out.party_perm[m] = k;
            for x in 0..scenario.settings()[k] {
                let mx = self.setting_perms[k][x];
                out.setting_perms[m][mx] = x;
                for a in 0..scenario.outcomes()[k] {
                    out.outcome_perms[m][mx][self.outcome_perms[k][x][a]] = a;
                }
            }
        }
        Ok(out)
    }

    /// The relabeling that applies `self` first and `next` second.
    /// `scenario` is the domain of `self`.
    pub fn then(&self, next: &RelabelSpec, scenario: &Scenario) -> Result<RelabelSpec> {
        let mid = self.image(scenario)?;
        next.validate(&mid)?;
        let n = scenario.parties();
        let mut out = RelabelSpec::identity(scenario);
        for k in 0..n {
            let m = self.party_perm[k];
            out.party_perm[k] = next.party_perm[m];
            for x in 0..scenario.settings()[k] {
                let mx = self.setting_perms[k][x];
                out.setting_perms[k][x] = next.setting_perms[m][mx];
                for a in 0..scenario.outcomes()[k] {
                    let ma = self.outcome_perms[k][x][a];
                    out.outcome_perms[k][x][a] = next.outcome_perms[m][mx][ma];
                }
            }
        }
        Ok(out)
    }
}

fn is_permutation(p: &[usize], n: usize) -> bool {
    if p.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &i in p {
        if i >= n || seen[i] {
            return false;
        }
        seen[i] = true;
    }
    true
}

/// `2^{1-n} δ(a_1 ⊕ ... ⊕ a_n, f(x))` on `n` binary parties.
pub fn parity_box(parties: usize, f: impl Fn(&[usize]) -> usize) -> Behavior {
    let w = q(1, 1 << (parties - 1));
    Behavior::from_fn(Scenario::binary(parties), |o, s| {
        let parity = o.iter().sum::<usize>() % 2;
        if parity == f(s) % 2 {
            w.clone()
        } else {
            Rational::zero()
        }
    })
    .expect("parity boxes are normalized")
}

/// `(1/4) δ(a⊕b⊕c, xy ⊕ z)`: a Mermin box with the maximal value 4,
/// reachable by the untrusted-Alice wiring of [`mermin_wiring_box`].
pub fn mermin_box() -> Behavior {
    parity_box(3, |s| s[0] * s[1] + s[2])
}

/// `(1/4) δ(a⊕b⊕c, xy ⊕ xz ⊕ yz)`, the algebraic Svetlichny maximum.
pub fn svetlichny_box() -> Behavior {
    parity_box(3, |s| s[0] * s[1] + s[0] * s[2] + s[1] * s[2])
}

/// `(1/4) δ(a⊕b⊕c, x)`, classically correlated.
pub fn classical_box() -> Behavior {
    parity_box(3, |s| s[0])
}

/// Which receiver may be dishonest and hold the adversary outcome `e`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UntrustedParty {
    Alice,
    Bob,
}

impl UntrustedParty {
    /// Party index (0 for Alice, 1 for Bob) whose input is broadcast.
    pub fn index(self) -> usize {
        match self {
            UntrustedParty::Alice => 0,
            UntrustedParty::Bob => 1,
        }
    }

    pub fn other(self) -> UntrustedParty {
        match self {
            UntrustedParty::Alice => UntrustedParty::Bob,
            UntrustedParty::Bob => UntrustedParty::Alice,
        }
    }

    /// The no-signaling directions imposed by this causal model.
    pub fn directions(self) -> [NsDirection; 3] {
        match self {
            UntrustedParty::Alice => [NsDirection::Bob, NsDirection::Charlie, NsDirection::AliceEve],
            UntrustedParty::Bob => [NsDirection::Alice, NsDirection::Charlie, NsDirection::BobEve],
        }
    }
}

impl fmt::Display for UntrustedParty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            UntrustedParty::Alice => f.write_str("alice"),
            UntrustedParty::Bob => f.write_str("bob"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NsDirection {
    Alice,
    Bob,
    Charlie,
    AliceEve,
    BobEve,
}

impl NsDirection {
    /// Parties whose outcomes are summed, and the party whose setting varies,
    /// in the four-party `(A, B, C, E)` table.
    pub fn pattern(self) -> (&'static [usize], usize) {
        match self {
            NsDirection::Alice => (&[0], 0),
            NsDirection::Bob => (&[1], 1),
            NsDirection::Charlie => (&[2], 2),
            NsDirection::AliceEve => (&[0, 3], 0),
            NsDirection::BobEve => (&[1, 3], 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NsCheck {
    pub direction: NsDirection,
    pub worst_violation: Value,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NsReport {
    pub model: UntrustedParty,
    pub checks: Vec<NsCheck>,
}

impl NsReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, direction: NsDirection) -> Option<&NsCheck> {
        self.checks.iter().find(|c| c.direction == direction)
    }
}

/// `p(a,b,c,e | x,y,z)`: a tripartite behavior extended by the outcome `e`
/// of the untrusted receiver.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtendedBehavior {
    joint: Behavior,
    untrusted: UntrustedParty,
}

/// Slot of the adversary outcome in [`ExtendedBehavior::marginal`].
pub const ADVERSARY: usize = 3;

impl ExtendedBehavior {
    /// `p` is laid out as a four-party table `(A, B, C, E)` where `E` has one
    /// setting and `adversary_outcomes` outcomes.
    pub fn new(observed: &Scenario, adversary_outcomes: usize, untrusted: UntrustedParty, p: Tensor) -> Result<Self> {
        if observed.parties() != 3 {
            return Err(BehaviorError::InvalidScenario("extended behaviors are tripartite".into()));
        }
        let mut settings = observed.settings().to_vec();
        settings.push(1);
        let mut outcomes = observed.outcomes().to_vec();
        outcomes.push(adversary_outcomes);
        let joint = Behavior::new(Scenario::new(settings, outcomes)?, p)?;
        Ok(ExtendedBehavior { joint, untrusted })
    }

    /// Exact binary extended behavior from `f(a, b, c, e, x, y, z)`.
    pub fn tripartite_from_fn(
        untrusted: UntrustedParty,
        f: impl Fn([usize; 4], [usize; 3]) -> Rational,
    ) -> Result<Self> {
        let scenario = extended_binary_scenario();
        let v = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                f([o[0], o[1], o[2], o[3]], [s[0], s[1], s[2]])
            })
            .collect();
        Ok(ExtendedBehavior { joint: Behavior::new(scenario, Tensor::Exact(v))?, untrusted })
    }

    pub fn tripartite_from_fn_f64(
        untrusted: UntrustedParty,
        f: impl Fn([usize; 4], [usize; 3]) -> f64,
    ) -> Result<Self> {
        let scenario = extended_binary_scenario();
        let v = (0..scenario.len())
            .map(|i| {
                let (o, s) = scenario.decode(i);
                f([o[0], o[1], o[2], o[3]], [s[0], s[1], s[2]])
            })
            .collect();
        Ok(ExtendedBehavior { joint: Behavior::new(scenario, Tensor::Float(v))?, untrusted })
    }

    pub fn joint(&self) -> &Behavior {
        &self.joint
    }

    pub fn untrusted(&self) -> UntrustedParty {
        self.untrusted
    }

    pub fn prob(&self, outcomes: [usize; 4], settings: [usize; 3]) -> Value {
        self.joint.prob(&outcomes, &[settings[0], settings[1], settings[2], 0])
    }

    /// `Σ_e p(a,b,c,e|x,y,z)`.
    pub fn observed(&self) -> Behavior {
        self.joint.marginal(&[0, 1, 2]).expect("the adversary slot has a single setting")
    }

    /// Marginal over any subset of `{0: A, 1: B, 2: C, 3: E}`.
    pub fn marginal(&self, keep: &[usize]) -> Result<Behavior> {
        self.joint.marginal(keep)
    }

    /// `p(e = c | x*, y*, z*)`.
    pub fn guessing_probability(&self, target: [usize; 3]) -> Value {
        self.sum_where(target, |o| o[3] == o[2])
    }

    /// Mass on `a ⊕ b ⊕ c = 0` at the given settings.
    pub fn secret_sharing_mass(&self, target: [usize; 3]) -> Value {
        self.sum_where(target, |o| (o[0] + o[1] + o[2]) % 2 == 0)
    }

    fn sum_where(&self, target: [usize; 3], pred: impl Fn(&[usize]) -> bool) -> Value {
        let sc = self.joint.scenario();
        let s = [target[0], target[1], target[2], 0];
        let picked = sc.outcome_tuples().into_iter().filter(|o| pred(o)).map(|o| sc.index(&o, &s));
        match self.joint.entries() {
            Tensor::Exact(v) => Value::Exact(picked.fold(Rational::zero(), |acc, i| acc + &v[i])),
            Tensor::Float(v) => Value::Float(picked.map(|i| v[i]).sum()),
        }
    }
}

pub fn extended_binary_scenario() -> Scenario {
    Scenario::new(vec![2, 2, 2, 1], vec![2, 2, 2, 2]).expect("valid")
}

/// Checks the three no-signaling families of the given causal model:
/// for untrusted Alice, Bob's and Charlie's marginals may not depend on their
/// own settings and `Σ_{a,e} p` may not depend on `x`; mirrored for Bob.
pub fn check_nonsignaling(b: &ExtendedBehavior, model: UntrustedParty) -> NsReport {
    let tol = match b.joint.arithmetic() {
        Arithmetic::Exact => 0.0,
        Arithmetic::Float => FLOAT_SIGNALING_TOL,
    };
    let checks = model
        .directions()
        .into_iter()
        .map(|direction| {
            let (summed, varied) = direction.pattern();
            let worst = b.joint.signaling_gap(summed, varied);
            let pass = match &worst {
                Value::Exact(r) => r.is_zero(),
                Value::Float(x) => *x <= tol,
            };
            NsCheck { direction, worst_violation: worst, pass }
        })
        .collect();
    NsReport { model, checks }
}

fn xor_delta(lhs: usize, rhs: usize) -> bool {
    lhs % 2 == rhs % 2
}

/// `(1/4) δ(a⊕b⊕c, f) δ(e⊕c⊕x(a⊕b), f)` with `f = xy ⊕ xz ⊕ xyz`: non-signaling
/// for untrusted Alice, Svetlichny value 6, perfect guessing at `(0,0,0)`.
pub fn unsafe_ns_box() -> ExtendedBehavior {
    ExtendedBehavior::tripartite_from_fn(UntrustedParty::Alice, |[a, b, c, e], [x, y, z]| {
        let f = x * y + x * z + x * y * z;
        if xor_delta(a + b + c, f) && xor_delta(e + c + x * (a + b), f) {
            q(1, 4)
        } else {
            Rational::zero()
        }
    })
    .expect("normalized")
}

fn svetlichny_sign(o: [usize; 3], s: [usize; 3]) -> i64 {
    let exponent = o[0] + o[1] + o[2] + s[0] * s[1] + s[0] * s[2] + s[1] * s[2];
    if exponent.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

/// The one-parameter family with Svetlichny value `4 + 2u`, guessing
/// probability 1 and no secret-sharing guarantee, for `u ∈ [-1, 1]`.
pub fn tunable_unsafe_box(u: &Value) -> Result<ExtendedBehavior> {
    if u.to_f64().abs() > 1.0 || u.as_exact().is_some_and(|r| r.abs() > Rational::one()) {
        return Err(BehaviorError::ParameterOutOfRange(format!("u = {u}")));
    }
    match u {
        Value::Exact(u) => ExtendedBehavior::tripartite_from_fn(UntrustedParty::Alice, |o, s| {
            tunable_entry(o, s, u.clone(), q)
        }),
        Value::Float(u) => ExtendedBehavior::tripartite_from_fn_f64(UntrustedParty::Alice, |o, s| {
            tunable_entry(o, s, *u, |n, d| n as f64 / d as f64)
        }),
    }
}

fn tunable_entry<T: Scalar>(o: [usize; 4], s: [usize; 3], u: T, frac: impl Fn(i64, i64) -> T) -> T {
    let [a, b, c, e] = o;
    let [x, _, z] = s;
    let beta = T::from_i64(svetlichny_sign([a, b, c], s));
    match (x, z) {
        (1, _) => frac(1, 16) * (T::one() + beta),
        (_, 0) => {
            if e == c {
                frac(1, 8)
            } else {
                T::zero()
            }
        }
        _ => frac(1, 16) * (T::one() + beta * u),
    }
}

/// Untrusted-Alice simulation of [`mermin_box`]: the local box
/// `(1/4) δ(a⊕b⊕c, y⊕z)`, realised as `a = λ1`, `b = λ2 ⊕ y'`,
/// `c = λ1 ⊕ λ2 ⊕ z` with uniform `λ`, where Bob feeds `y' = x·y`.
/// Alice outputs `e = λ1 ⊕ λ2`, which equals `c` whenever `z = 0`.
pub fn mermin_wiring_box() -> ExtendedBehavior {
    ExtendedBehavior::tripartite_from_fn(UntrustedParty::Alice, |[a, b, c, e], [x, y, z]| {
        let mut total = Rational::zero();
        for l1 in 0..2 {
            for l2 in 0..2 {
                let hit = a == l1 && b == (l2 + x * y) % 2 && c == (l1 + l2 + z) % 2 && e == (l1 + l2) % 2;
                if hit {
                    total += q(1, 4);
                }
            }
        }
        total
    })
    .expect("normalized")
}

/// A random non-signaling binary behavior: a convex mixture of uniform noise,
/// local deterministic boxes and random parity boxes. Float mode.
pub fn random_nonsignaling<R: Rng>(rng: &mut R, parties: usize, components: usize) -> Behavior {
    let scenario = Scenario::binary(parties);
    let mut acc = vec![0.0; scenario.len()];
    let mut weights: Vec<f64> = (0..=components).map(|_| rng.gen::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let uniform = 1.0 / scenario.outcome_count() as f64;
    for x in acc.iter_mut() {
        *x += weights[0] * uniform;
    }
    for w in &weights[1..] {
        let component = if rng.gen_bool(0.5) {
            let table: Vec<Vec<usize>> = (0..parties).map(|_| vec![rng.gen_range(0..2), rng.gen_range(0..2)]).collect();
            Behavior::from_fn(scenario.clone(), |o, s| {
                if (0..parties).all(|k| o[k] == table[k][s[k]]) {
                    Rational::one()
                } else {
                    Rational::zero()
                }
            })
            .expect("deterministic")
        } else {
            let truth: Vec<usize> = (0..scenario.setting_count()).map(|_| rng.gen_range(0..2)).collect();
            let sc = scenario.clone();
            parity_box(parties, move |s| truth[sc.setting_index(s)])
        };
        for (x, p) in acc.iter_mut().zip(component.entries().to_f64_vec()) {
            *x += w * p;
        }
    }
    // Renormalize each block to remove accumulated rounding.
    let oc = scenario.outcome_count();
    for block in acc.chunks_mut(oc) {
        let s: f64 = block.iter().sum();
        block.iter_mut().for_each(|x| *x /= s);
    }
    Behavior::new(scenario, Tensor::Float(acc)).expect("mixture of valid behaviors")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::qi;

    #[test]
    fn index_is_settings_major_party_one_fastest() {
        let sc = Scenario::binary(3);
        assert_eq!(sc.index(&[1, 0, 0], &[0, 0, 0]), 1);
        assert_eq!(sc.index(&[0, 1, 0], &[0, 0, 0]), 2);
        assert_eq!(sc.index(&[0, 0, 0], &[1, 0, 0]), 8);
        assert_eq!(sc.index(&[0, 0, 0], &[0, 0, 1]), 32);
        for i in 0..sc.len() {
            let (o, s) = sc.decode(i);
            assert_eq!(sc.index(&o, &s), i);
        }
    }

    #[test]
    fn rejects_bad_tables() {
        let sc = Scenario::binary(3);
        assert!(Behavior::new(sc.clone(), Tensor::Exact(vec![q(1, 8); 63])).is_err());
        let mut v = vec![q(1, 8); 64];
        v[0] = q(-1, 10);
        v[1] = q(1, 8) + q(1, 10) + q(1, 8);
        v[2] = Rational::zero();
        assert!(matches!(
            Behavior::new(sc.clone(), Tensor::Exact(v)),
            Err(BehaviorError::NegativeEntry { index: 0, .. })
        ));
        let mut v = vec![q(1, 8); 64];
        v[9] = q(1, 8) - q(1, 10);
        assert!(matches!(
            Behavior::new(sc.clone(), Tensor::Exact(v)),
            Err(BehaviorError::NotNormalized { settings, .. }) if settings == vec![1, 0, 0]
        ));
        assert!(Behavior::new(sc, Tensor::Exact(vec![q(1, 8); 64])).is_ok());
    }

    #[test]
    fn mermin_box_entry_at_origin() {
        assert_eq!(mermin_box().prob(&[0, 0, 0], &[0, 0, 0]), Value::ratio(1, 4));
        assert_eq!(mermin_box().prob(&[1, 0, 0], &[0, 0, 0]), Value::int(0));
    }

    #[test]
    fn named_boxes_are_nonsignaling() {
        for b in [mermin_box(), svetlichny_box(), classical_box()] {
            assert_eq!(b.nonsignaling_violation(), Value::int(0));
        }
        for e in [unsafe_ns_box(), mermin_wiring_box()] {
            assert!(e.observed().is_nonsignaling(0.0));
        }
    }

    #[test]
    fn mix_boundaries_and_errors() {
        let s = svetlichny_box();
        let c = classical_box();
        assert_eq!(Behavior::mix(&s, &c, &Value::int(0)).unwrap(), c);
        assert_eq!(Behavior::mix(&s, &c, &Value::int(1)).unwrap(), s);
        assert_eq!(Behavior::mix(&s, &s, &Value::ratio(1, 3)).unwrap(), s);
        assert!(matches!(Behavior::mix(&s, &c, &Value::ratio(3, 2)), Err(BehaviorError::WeightOutOfRange(_))));
        let other = Behavior::uniform(Scenario::binary(2));
        assert!(matches!(Behavior::mix(&s, &other, &Value::ratio(1, 2)), Err(BehaviorError::ScenarioMismatch)));
    }

    #[test]
    fn unsafe_box_marginal_and_guess() {
        let u = unsafe_ns_box();
        let expected = parity_box(3, |s| s[0] * s[1] + s[0] * s[2] + s[0] * s[1] * s[2]);
        assert_eq!(u.marginal(&[0, 1, 2]).unwrap(), expected);
        assert_eq!(u.guessing_probability([0, 0, 0]), Value::int(1));
        assert_eq!(u.secret_sharing_mass([0, 0, 0]), Value::int(1));
        assert!(check_nonsignaling(&u, UntrustedParty::Alice).all_pass());
    }

    #[test]
    fn tunable_box_range_and_ns() {
        assert!(tunable_unsafe_box(&Value::ratio(3, 2)).is_err());
        assert!(tunable_unsafe_box(&Value::Float(-1.01)).is_err());
        let b = tunable_unsafe_box(&Value::ratio(3, 10)).unwrap();
        assert!(check_nonsignaling(&b, UntrustedParty::Alice).all_pass());
        assert_eq!(b.guessing_probability([0, 0, 0]), Value::int(1));
        let f = tunable_unsafe_box(&Value::Float(0.3)).unwrap();
        assert!(check_nonsignaling(&f, UntrustedParty::Alice).all_pass());
    }

    #[test]
    fn wiring_reproduces_mermin_box() {
        let w = mermin_wiring_box();
        assert_eq!(w.observed(), mermin_box());
        assert_eq!(w.guessing_probability([0, 0, 0]), Value::int(1));
        assert!(check_nonsignaling(&w, UntrustedParty::Alice).all_pass());
    }

    #[test]
    fn signaling_marginal_is_an_error() {
        // Bob outputs z: marginal over Charlie depends on z.
        let b = Behavior::from_fn(Scenario::binary(3), |o, s| {
            if o[1] == s[2] && o[0] == 0 && o[2] == 0 {
                qi(1)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        assert!(matches!(b.marginal(&[0, 1]), Err(BehaviorError::SignalingMarginal { party: 2, .. })));
        let u = Behavior::uniform(Scenario::binary(3));
        assert_eq!(u.marginal(&[2, 0]).unwrap(), Behavior::uniform(Scenario::binary(2)));
    }

    #[test]
    fn charlie_direction_detects_bob_reading_z() {
        let e = ExtendedBehavior::tripartite_from_fn(UntrustedParty::Alice, |[a, b, c, ee], [_, _, z]| {
            if a == 0 && c == 0 && ee == 0 && b == z {
                qi(1)
            } else {
                Rational::zero()
            }
        })
        .unwrap();
        let report = check_nonsignaling(&e, UntrustedParty::Alice);
        assert!(!report.get(NsDirection::Charlie).unwrap().pass);
        assert!(report.get(NsDirection::Bob).unwrap().pass);
        assert_eq!(report.get(NsDirection::Charlie).unwrap().worst_violation, Value::int(1));
    }

    #[test]
    fn relabel_flip_is_involution_and_symmetric_swap() {
        let sc = Scenario::binary(3);
        let s = svetlichny_box();
        let flip = RelabelSpec::flip_setting(&sc, 0);
        assert_ne!(s.relabel(&flip).unwrap(), s);
        assert_eq!(s.relabel(&flip).unwrap().relabel(&flip).unwrap(), s);
        assert_eq!(s.relabel(&RelabelSpec::swap_parties(&sc, 0, 1)).unwrap(), s);
        let mut bad = RelabelSpec::identity(&sc);
        bad.setting_perms[1] = vec![0, 0];
        assert!(matches!(s.relabel(&bad), Err(BehaviorError::InvalidPermutation(_))));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let b = Behavior::mix(&svetlichny_box(), &classical_box(), &Value::ratio(1, 3)).unwrap();
        let back = Behavior::from_json_str(&b.to_json_string()).unwrap();
        assert_eq!(back, b);
        let text = b.to_json_string();
        assert!(text.contains("\"1/3\"") || text.contains("\"1/6\""));
    }
}
