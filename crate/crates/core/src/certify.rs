//! Guessing-probability certification: the adversary's best chance of
//! reproducing Charlie's bit, bounded by linear programming over
//! non-signaling extended behaviors or by NPA relaxations of quantum ones.

use std::fmt;

use num_traits::Zero;
use rayon::prelude::*;
use thiserror::Error;

use crate::behavior::{
    extended_binary_scenario, Behavior, BehaviorError, ExtendedBehavior, NsDirection, Scenario, UntrustedParty,
};
use crate::inequality::{evaluate, svetlichny3, BellFunctional, InequalityError};
use crate::npa::{self, LevelSpec};
use crate::num::{format_rational, Arithmetic, Rational, Scalar, Tensor, Value};
use crate::optimize::lp::{solve_lp, LinearProgram, LpScalar, RowKind};
use crate::optimize::sdp::{solve_sdp, SdpOptions, SdpStatus};
use crate::optimize::{OptimizeError, Sense, Status};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CertifyError {
    #[error("both a fixed marginal and a Svetlichny value were requested")]
    ConflictingConstraints,
    #[error("the {0} builder needs the matching resource class")]
    WrongResource(&'static str),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
    #[error(transparent)]
    Inequality(#[from] InequalityError),
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Npa(#[from] npa::NpaError),
}

pub type Result<T> = std::result::Result<T, CertifyError>;

/// What the adversary is allowed to share with the devices.
#[derive(Clone, Debug, PartialEq)]
pub enum Resource {
    NonSignaling,
    Quantum(LevelSpec),
}

impl Resource {
    pub fn label(&self) -> &'static str {
        match self {
            Resource::NonSignaling => "ns",
            Resource::Quantum(_) => "quantum",
        }
    }

    pub fn level(&self) -> Option<&LevelSpec> {
        match self {
            Resource::NonSignaling => None,
            Resource::Quantum(l) => Some(l),
        }
    }
}

/// Constraints on the extended behavior `p(a,b,c,e|x,y,z)`.
///
/// At most one of `svetlichny_value` and `fixed_marginal` may be set;
/// requesting both is reported as [`CertifyError::ConflictingConstraints`].
#[derive(Clone, Debug, PartialEq)]
pub struct CertificationConstraints {
    pub untrusted: UntrustedParty,
    pub target: [usize; 3],
    pub svetlichny_value: Option<Value>,
    pub fixed_marginal: Option<Behavior>,
    pub secret_sharing: bool,
    /// Quantum relaxations impose `p(c = a⊕b | target) ≥ 1 − slack`, which
    /// keeps a strict interior; bounds remain valid for the exact condition
    /// and loosen by roughly `√slack`. The LP imposes it exactly.
    pub secret_sharing_slack: f64,
    pub resource: Resource,
}

/// Default [`CertificationConstraints::secret_sharing_slack`].
pub const DEFAULT_SECRET_SHARING_SLACK: f64 = 1e-6;

impl Default for CertificationConstraints {
    fn default() -> Self {
        CertificationConstraints {
            untrusted: UntrustedParty::Alice,
            target: [0, 0, 0],
            svetlichny_value: None,
            fixed_marginal: None,
            secret_sharing: false,
            secret_sharing_slack: DEFAULT_SECRET_SHARING_SLACK,
            resource: Resource::NonSignaling,
        }
    }
}

impl CertificationConstraints {
    pub fn ns_gamma(gamma: Value, secret_sharing: bool) -> Self {
        CertificationConstraints { svetlichny_value: Some(gamma), secret_sharing, ..Default::default() }
    }

    pub fn ns_marginal(marginal: Behavior) -> Self {
        CertificationConstraints { fixed_marginal: Some(marginal), ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.svetlichny_value.is_some() && self.fixed_marginal.is_some() {
            return Err(CertifyError::ConflictingConstraints);
        }
        if self.target.iter().any(|&t| t > 1) {
            return Err(CertifyError::InvalidConstraint(format!("target settings {:?}", self.target)));
        }
        if let Some(m) = &self.fixed_marginal {
            if m.scenario() != &Scenario::binary(3) {
                return Err(CertifyError::InvalidConstraint("fixed marginal must be tripartite binary".into()));
            }
        }
        if !(0.0..1.0).contains(&self.secret_sharing_slack) {
            return Err(CertifyError::InvalidConstraint(format!(
                "secret-sharing slack {} outside [0, 1)",
                self.secret_sharing_slack
            )));
        }
        Ok(())
    }

    /// Exact when every supplied number is exact.
    pub fn arithmetic(&self) -> Arithmetic {
        let gamma_exact = self.svetlichny_value.as_ref().is_none_or(Value::is_exact);
        let marginal_exact = self.fixed_marginal.as_ref().is_none_or(|m| m.arithmetic() == Arithmetic::Exact);
        if gamma_exact && marginal_exact {
            Arithmetic::Exact
        } else {
            Arithmetic::Float
        }
    }

    pub fn summary(&self) -> String {
        let mut parts = vec![format!("untrusted={}", self.untrusted)];
        parts.push(format!("target={}{}{}", self.target[0], self.target[1], self.target[2]));
        if let Some(g) = &self.svetlichny_value {
            parts.push(format!("S={g}"));
        }
        if self.fixed_marginal.is_some() {
            parts.push("fixed-marginal".into());
        }
        parts.push(format!("ss={}", if self.secret_sharing { "on" } else { "off" }));
        parts.join(" ")
    }
}

/// Flat index of `p(a,b,c,e|x,y,z)` among the 128 LP variables.
pub fn ns_variable(outcomes: [usize; 4], settings: [usize; 3]) -> usize {
    extended_binary_scenario().index(&outcomes, &[settings[0], settings[1], settings[2], 0])
}

/// Rows `Σ_{summed} p(o|s) - Σ_{summed} p(o|s0) = 0` for one no-signaling
/// direction, where `s0` has the varied party at setting 0.
fn ns_rows(direction: NsDirection) -> Vec<Vec<(usize, i64)>> {
    let sc = extended_binary_scenario();
    let (summed, varied) = direction.pattern();
    let mut rows = Vec::new();
    for s in sc.setting_tuples() {
        if s[varied] == 0 {
            continue;
        }
        let mut s0 = s.clone();
        s0[varied] = 0;
        for o in sc.outcome_tuples() {
            if summed.iter().any(|&k| o[k] != 0) {
                continue;
            }
            let mut row = Vec::new();
            for bits in 0..(1usize << summed.len()) {
                let mut oo = o.clone();
                for (t, &k) in summed.iter().enumerate() {
                    oo[k] = (bits >> t) & 1;
                }
                row.push((sc.index(&oo, &s), 1));
                row.push((sc.index(&oo, &s0), -1));
            }
            rows.push(row);
        }
    }
    rows
}

fn to_t<T: LpScalar>(coeffs: Vec<(usize, i64)>) -> Vec<(usize, T)> {
    coeffs.into_iter().map(|(j, a)| (j, T::from_i64(a))).collect()
}

/// The LP over the 128 non-signaling variables `p(a,b,c,e|x,y,z)`:
/// maximise `p(e=c|x*,y*,z*)` subject to normalization, the three
/// no-signaling families of the causal model, and the requested value or
/// marginal constraints.
pub fn ns_guessing_problem<T: LpScalar>(c: &CertificationConstraints) -> Result<LinearProgram<T>> {
    c.validate()?;
    if c.resource != Resource::NonSignaling {
        return Err(CertifyError::WrongResource("non-signaling"));
    }
    let sc = extended_binary_scenario();
    let mut lp = LinearProgram::<T>::new(sc.len(), Sense::Maximize);
    let [tx, ty, tz] = c.target;
    for a in 0..2 {
        for b in 0..2 {
            for cc in 0..2 {
                lp.set_objective_coeff(ns_variable([a, b, cc, cc], [tx, ty, tz]), T::one());
            }
        }
    }
    for s in 0..sc.setting_count() {
        let coeffs = (0..sc.outcome_count()).map(|o| (s * sc.outcome_count() + o, T::one())).collect();
        lp.add(coeffs, RowKind::Eq, T::one());
    }
    for direction in c.untrusted.directions() {
        for row in ns_rows(direction) {
            lp.add(to_t(row), RowKind::Eq, T::zero());
        }
    }
    if let Some(gamma) = &c.svetlichny_value {
        let f = svetlichny3();
        let mut coeffs = Vec::new();
        for i in 0..sc.len() {
            let (o, s) = sc.decode(i);
            let beta = f.coefficient(&o[..3], &s[..3]);
            coeffs.push((i, T::from_value(&beta)));
        }
        lp.add(coeffs, RowKind::Eq, T::from_value(gamma));
    }
    if let Some(m) = &c.fixed_marginal {
        let p = m.entries();
        let small = m.scenario();
        for i in 0..small.len() {
            let (o, s) = small.decode(i);
            let coeffs = (0..2).map(|e| (sc.index(&[o[0], o[1], o[2], e], &[s[0], s[1], s[2], 0]), T::one())).collect();
            lp.add(coeffs, RowKind::Eq, T::from_value(&p.get(i)));
        }
    }
    if c.secret_sharing {
        let mut coeffs = Vec::new();
        for a in 0..2 {
            for b in 0..2 {
                let cc = (a + b) % 2;
                for e in 0..2 {
                    coeffs.push((ns_variable([a, b, cc, e], [tx, ty, tz]), T::one()));
                }
            }
        }
        lp.add(coeffs, RowKind::Eq, T::one());
    }
    Ok(lp)
}

/// Maximum of a functional over all non-signaling behaviors of its
/// scenario, with a maximizing behavior. Exact.
pub fn ns_maximum(f: &BellFunctional) -> Result<(Rational, Behavior)> {
    let sc = f.scenario().clone();
    let Tensor::Exact(coeffs) = f.coefficients() else {
        return Err(CertifyError::InvalidConstraint("functional must have exact coefficients".into()));
    };
    let mut lp = LinearProgram::<Rational>::new(sc.len(), Sense::Maximize);
    for (j, c) in coeffs.iter().enumerate() {
        lp.set_objective_coeff(j, c.clone());
    }
    let outcomes = sc.outcome_tuples();
    for s in sc.setting_tuples() {
        let row = outcomes.iter().map(|o| (sc.index(o, &s), Rational::from_integer(1.into()))).collect();
        lp.add(row, RowKind::Eq, Rational::from_integer(1.into()));
    }
    // the marginal of the other parties must not depend on party k's setting
    for k in 0..sc.parties() {
        for s in sc.setting_tuples().into_iter().filter(|s| s[k] == 0) {
            for alt in 1..sc.settings()[k] {
                let mut t = s.clone();
                t[k] = alt;
                for o in outcomes.iter().filter(|o| o[k] == 0) {
                    let mut row = Vec::new();
                    for ok in 0..sc.outcomes()[k] {
                        let mut oo = o.clone();
                        oo[k] = ok;
                        row.push((sc.index(&oo, &s), Rational::from_integer(1.into())));
                        row.push((sc.index(&oo, &t), Rational::from_integer((-1).into())));
                    }
                    lp.add(row, RowKind::Eq, Rational::zero());
                }
            }
        }
    }
    let sol = solve_lp(&lp)?;
    let value = match (sol.status, sol.value) {
        (Status::Optimal, Some(v)) => v,
        (status, _) => {
            return Err(OptimizeError::NumericalFailure(format!("non-signaling maximum ended {status}")).into())
        }
    };
    Ok((value, Behavior::new(sc, Tensor::Exact(sol.x))?))
}

/// Result of one certification problem.
#[derive(Clone, Debug, PartialEq)]
pub struct GuessingReport {
    pub status: Status,
    /// Exact optimum (NS, exact data), float optimum (NS, float data), or a
    /// float upper bound (quantum).
    pub guess: Option<Value>,
    /// Svetlichny value of the constrained marginal, when fixed.
    pub svetlichny: Option<Value>,
    pub resource: Resource,
    pub secret_sharing: bool,
    pub constraints: String,
    /// Maximising extended behavior (NS only).
    pub optimizer: Option<ExtendedBehavior>,
    /// Duality gap of the SDP solve (quantum only).
    pub gap: Option<f64>,
    /// Bound minus the objective at the returned point (quantum only). When
    /// small, the bound is attained to within this amount.
    pub bound_excess: Option<f64>,
}

impl GuessingReport {
    pub fn is_feasible(&self) -> bool {
        self.status == Status::Optimal
    }

    /// "optimum" for NS, "upper bound at level L" for quantum.
    pub fn kind(&self) -> String {
        match &self.resource {
            Resource::NonSignaling => "optimum".into(),
            Resource::Quantum(l) => format!("upper bound at level {l}"),
        }
    }
}

impl fmt::Display for GuessingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.guess {
            Some(g) => write!(f, "guess {} ({}) [{}; {}]", g, self.kind(), self.status, self.constraints),
            None => write!(f, "no bound [{}; {}]", self.status, self.constraints),
        }
    }
}

fn svetlichny_of(c: &CertificationConstraints) -> Result<Option<Value>> {
    Ok(match (&c.svetlichny_value, &c.fixed_marginal) {
        (Some(g), _) => Some(g.clone()),
        (None, Some(m)) => Some(evaluate(&svetlichny3(), m)?),
        (None, None) => None,
    })
}

fn solve_ns_in<T: LpScalar>(c: &CertificationConstraints) -> Result<(Status, Option<Value>, Option<ExtendedBehavior>)> {
    let lp = ns_guessing_problem::<T>(c)?;
    let sol = solve_lp(&lp)?;
    if sol.status != Status::Optimal {
        return Ok((sol.status, None, None));
    }
    let tensor = match T::ARITHMETIC {
        Arithmetic::Exact => {
            Tensor::Exact(sol.x.iter().map(|v| v.clone().into_value().as_exact().cloned().unwrap()).collect())
        }
        Arithmetic::Float => Tensor::Float(sol.x.iter().map(|v| v.approx().max(0.0)).collect()),
    };
    let optimizer = ExtendedBehavior::new(&Scenario::binary(3), 2, c.untrusted, tensor).ok();
    Ok((Status::Optimal, sol.value.map(Scalar::into_value), optimizer))
}

/// Solves the non-signaling problem, exactly when the data are exact.
pub fn certify_ns(c: &CertificationConstraints) -> Result<GuessingReport> {
    let (status, guess, optimizer) = match c.arithmetic() {
        Arithmetic::Exact => solve_ns_in::<Rational>(c)?,
        Arithmetic::Float => solve_ns_in::<f64>(c)?,
    };
    Ok(GuessingReport {
        status,
        guess,
        svetlichny: svetlichny_of(c)?,
        resource: Resource::NonSignaling,
        secret_sharing: c.secret_sharing,
        constraints: c.summary(),
        optimizer,
        gap: None,
        bound_excess: None,
    })
}

/// The NPA relaxation of the quantum problem at the requested level.
pub fn quantum_guessing_problem(c: &CertificationConstraints) -> Result<npa::AssembledSdp> {
    c.validate()?;
    let Resource::Quantum(level) = &c.resource else {
        return Err(CertifyError::WrongResource("quantum"));
    };
    let ms = npa::monomial_basis(&npa::OperatorScenario::tripartite(c.untrusted), level);
    Ok(npa::assemble_sdp(&ms, c)?)
}

pub fn certify_quantum(c: &CertificationConstraints, opts: &SdpOptions) -> Result<GuessingReport> {
    let assembled = quantum_guessing_problem(c)?;
    let sol = solve_sdp(&assembled.program, opts)?;
    let status = match sol.status {
        SdpStatus::Optimal => Status::Optimal,
        SdpStatus::Infeasible => Status::Infeasible,
        SdpStatus::Unbounded => Status::Unbounded,
        SdpStatus::MaxIterations => Status::MaxIterations,
        SdpStatus::Stalled => Status::Stalled,
    };
    Ok(GuessingReport {
        status,
        guess: sol.bound().map(Value::Float),
        svetlichny: svetlichny_of(c)?,
        resource: c.resource.clone(),
        secret_sharing: c.secret_sharing,
        constraints: c.summary(),
        optimizer: None,
        gap: Some(sol.gap),
        bound_excess: sol.bound().map(|b| b - sol.objective),
    })
}

pub fn certify(c: &CertificationConstraints, opts: &SdpOptions) -> Result<GuessingReport> {
    match c.resource {
        Resource::NonSignaling => certify_ns(c),
        Resource::Quantum(_) => certify_quantum(c, opts),
    }
}

/// Sweep over the Svetlichny value or over visibilities of the optimal
/// quantum behavior.
#[derive(Clone, Debug, PartialEq)]
pub enum Sweep {
    Gamma(Vec<Value>),
    /// Fixed marginal `v p_Svet + (1-v) p_Clas`.
    MixV(Vec<Value>),
    /// Fixed marginal from the optimal quantum setup at visibility `v`.
    QuantumV(Vec<f64>),
}

impl Sweep {
    pub fn len(&self) -> usize {
        match self {
            Sweep::Gamma(v) | Sweep::MixV(v) => v.len(),
            Sweep::QuantumV(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn value(&self, i: usize) -> Value {
        match self {
            Sweep::Gamma(v) | Sweep::MixV(v) => v[i].clone(),
            Sweep::QuantumV(v) => Value::Float(v[i]),
        }
    }

    fn constraints_at(&self, i: usize, base: &CertificationConstraints) -> Result<CertificationConstraints> {
        let mut c = base.clone();
        match self {
            Sweep::Gamma(v) => {
                c.fixed_marginal = None;
                c.svetlichny_value = Some(v[i].clone());
            }
            Sweep::MixV(v) => {
                c.svetlichny_value = None;
                let b = Behavior::mix(&crate::behavior::svetlichny_box(), &crate::behavior::classical_box(), &v[i])?;
                c.fixed_marginal = Some(b);
            }
            Sweep::QuantumV(v) => {
                c.svetlichny_value = None;
                let b = crate::quantum::svetlichny_optimal_behavior(v[i])
                    .map_err(|e| CertifyError::InvalidConstraint(e.to_string()))?;
                c.fixed_marginal = Some(b);
            }
        }
        Ok(c)
    }
}

/// `count` evenly spaced points from `lo` to `hi`; exact when both ends are.
pub fn grid(lo: &Value, hi: &Value, count: usize) -> Vec<Value> {
    if count == 1 {
        return vec![lo.clone()];
    }
    match (lo, hi) {
        (Value::Exact(a), Value::Exact(b)) => (0..count)
            .map(|i| {
                let t = crate::num::q(i as i64, (count - 1) as i64);
                Value::Exact(a + (b - a) * t)
            })
            .collect(),
        _ => {
            let (a, b) = (lo.to_f64(), hi.to_f64());
            (0..count).map(|i| Value::Float(a + (b - a) * i as f64 / (count - 1) as f64)).collect()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub sweep_value: Value,
    pub report: std::result::Result<GuessingReport, String>,
}

/// One report per grid point, in sweep order. Points are solved in parallel.
pub fn guessing_curve(sweep: &Sweep, base: &CertificationConstraints, opts: &SdpOptions) -> Vec<CurveRow> {
    (0..sweep.len())
        .into_par_iter()
        .map(|i| {
            let report = sweep.constraints_at(i, base).and_then(|c| certify(&c, opts)).map_err(|e| e.to_string());
            CurveRow { sweep_value: sweep.value(i), report }
        })
        .collect()
}

fn decimal(v: &Value) -> String {
    let x = v.to_f64();
    if x == 0.0 {
        return "0".into();
    }
    let s = format!("{:.*e}", 11, x);
    // back to plain notation for moderate magnitudes
    let parsed: f64 = s.parse().unwrap_or(x);
    let plain = format!("{parsed}");
    if plain.len() <= 20 {
        plain
    } else {
        s
    }
}

fn exact_column(v: Option<&Value>) -> String {
    match v {
        Some(Value::Exact(r)) => format_rational(r),
        _ => String::new(),
    }
}

/// CSV with columns `sweep_value, svetlichny, guess, status, resource, level,
/// ss_constraint`, plus `guess_exact` (`num/den`) for non-signaling runs.
pub fn curve_csv(rows: &[CurveRow], resource: &Resource) -> String {
    let ns = matches!(resource, Resource::NonSignaling);
    let mut out = String::from("sweep_value,svetlichny,guess,status,resource,level,ss_constraint");
    if ns {
        out.push_str(",guess_exact");
    }
    out.push('\n');
    let level = resource.level().map(|l| l.to_string()).unwrap_or_default();
    for row in rows {
        let fields: Vec<String> = match &row.report {
            Ok(r) => {
                let mut f = vec![
                    decimal(&row.sweep_value),
                    r.svetlichny.as_ref().map(decimal).unwrap_or_default(),
                    r.guess.as_ref().map(decimal).unwrap_or_default(),
                    r.status.to_string(),
                    resource.label().into(),
                    level.clone(),
                    if r.secret_sharing { "on".into() } else { "off".into() },
                ];
                if ns {
                    f.push(exact_column(r.guess.as_ref()));
                }
                f
            }
            Err(e) => {
                let mut f = vec![
                    decimal(&row.sweep_value),
                    String::new(),
                    String::new(),
                    format!("error: {}", e.replace(',', ";")),
                    resource.label().into(),
                    level.clone(),
                    String::new(),
                ];
                if ns {
                    f.push(String::new());
                }
                f
            }
        };
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::behavior::{check_nonsignaling, classical_box, svetlichny_box};
    use crate::num::{q, qi};

    fn ns_guess(c: &CertificationConstraints) -> Value {
        certify_ns(c).unwrap().guess.unwrap()
    }

    #[test]
    fn secret_sharing_slack_must_lie_in_unit_interval() {
        for bad in [-1e-9, 1.0, f64::NAN] {
            let c = CertificationConstraints { secret_sharing_slack: bad, ..Default::default() };
            assert!(matches!(c.validate(), Err(CertifyError::InvalidConstraint(_))), "{bad}");
        }
        assert!(CertificationConstraints::default().validate().is_ok());
    }

    #[test]
    fn gamma_endpoints() {
        assert_eq!(ns_guess(&CertificationConstraints::ns_gamma(Value::int(8), true)), Value::ratio(1, 2));
        assert_eq!(ns_guess(&CertificationConstraints::ns_gamma(Value::int(6), false)), Value::int(1));
    }

    #[test]
    fn mixture_marginal() {
        for k in 0..=4 {
            let v = q(k, 4);
            let b = Behavior::mix(&svetlichny_box(), &classical_box(), &Value::Exact(v.clone())).unwrap();
            let r = certify_ns(&CertificationConstraints::ns_marginal(b)).unwrap();
            assert_eq!(r.guess, Some(Value::Exact(qi(1) - v / qi(2))));
        }
    }

    #[test]
    fn optimizer_is_nonsignaling_and_hits_gamma() {
        let c = CertificationConstraints::ns_gamma(Value::ratio(13, 2), false);
        let r = certify_ns(&c).unwrap();
        let opt = r.optimizer.unwrap();
        assert!(check_nonsignaling(&opt, UntrustedParty::Alice).all_pass());
        assert_eq!(evaluate(&svetlichny3(), &opt.observed()).unwrap(), Value::ratio(13, 2));
        assert_eq!(opt.guessing_probability([0, 0, 0]), r.guess.unwrap());
    }

    #[test]
    fn conflicting_constraints() {
        let mut c = CertificationConstraints::ns_gamma(Value::int(6), false);
        c.fixed_marginal = Some(svetlichny_box());
        assert_eq!(certify_ns(&c).unwrap_err(), CertifyError::ConflictingConstraints);
    }

    #[test]
    fn beyond_algebraic_maximum_is_infeasible() {
        let r = certify_ns(&CertificationConstraints::ns_gamma(Value::int(9), false)).unwrap();
        assert_eq!(r.status, Status::Infeasible);
    }

    #[test]
    fn ns_maximum_of_svetlichny_is_algebraic() {
        let (v, b) = ns_maximum(&svetlichny3()).unwrap();
        assert_eq!(v, qi(8));
        assert!(b.is_nonsignaling(0.0));
        assert_eq!(evaluate(&svetlichny3(), &b).unwrap(), Value::int(8));
    }

    #[test]
    fn grid_is_exact() {
        let g = grid(&Value::int(4), &Value::int(8), 17);
        assert_eq!(g[1], Value::ratio(17, 4));
        assert_eq!(g[16], Value::int(8));
    }
}
