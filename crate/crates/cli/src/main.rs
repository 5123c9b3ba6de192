//! Command-line front end: box construction, functional evaluation, facet
//! enumeration, guessing-probability curves and the acceptance self-test.
//!
//! Exit codes: 0 success, 1 acceptance failure, 2 usage or parse error,
//! 3 computation error.

mod presets;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use svetshare::acceptance::{self, AcceptanceOptions, Outcome};
use svetshare::behavior::{Behavior, UntrustedParty};
use svetshare::certify::{
    curve_csv, grid, guessing_curve, CertificationConstraints, Resource, Sweep, DEFAULT_SECRET_SHARING_SLACK,
};
use svetshare::inequality::{chsh, evaluate, mermin3, svetlichny3, svetlichny_n, BellFunctional};
use svetshare::npa::LevelSpec;
use svetshare::num::Value;
use svetshare::optimize::sdp::SdpOptions;
use svetshare::polytope::{bipartite_local_vertices, enumerate_vertices, facets, CausalModel};

use presets::Preset;

#[derive(Parser, Debug)]
#[command(name = "svetshare", version, about = "Device-independent secret sharing certification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate a Bell functional on a behavior.
    Eval(EvalArgs),
    /// Write a preset behavior as JSON.
    Box(BoxArgs),
    /// Enumerate the facets of a causal polytope.
    Facets(FacetArgs),
    /// Bound the adversary's guessing probability over a sweep.
    Guess(GuessArgs),
    /// Run the acceptance suite.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug)]
struct BehaviorSource {
    /// Named behavior.
    #[arg(long, value_enum, conflicts_with = "behavior")]
    preset: Option<Preset>,
    /// Behavior JSON file.
    #[arg(long)]
    behavior: Option<PathBuf>,
    /// Visibility or family parameter of the preset.
    #[arg(long)]
    param: Option<String>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    source: BehaviorSource,
    /// svetlichny3, mermin3, chsh, chsh-prime, or svetlichnyN for N parties.
    #[arg(long, default_value = "svetlichny3")]
    functional: String,
}

#[derive(Args, Debug)]
struct BoxArgs {
    #[command(flatten)]
    source: BehaviorSource,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModelArg {
    Either,
    Alice,
    Bob,
    Local,
    BipartiteSanity,
}

#[derive(Args, Debug)]
struct FacetArgs {
    #[arg(long, value_enum, default_value = "either")]
    model: ModelArg,
    /// Facet JSON output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ResourceArg {
    Ns,
    Quantum,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MarginalArg {
    /// `v p_Svet + (1 - v) p_Clas`.
    MixV,
    /// Optimal quantum behavior at visibility `v`.
    GhzOptimal,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PartyArg {
    Alice,
    Bob,
}

#[derive(Args, Debug)]
struct GuessArgs {
    #[arg(long, value_enum, default_value = "ns")]
    resource: ResourceArg,
    /// NPA level such as `2` or `2+ABC+ABE`.
    #[arg(long, default_value = "2")]
    level: String,
    /// Svetlichny-value grid `lo:hi:count`.
    #[arg(long, conflicts_with = "sweep_v")]
    sweep_gamma: Option<String>,
    /// Visibility grid `lo:hi:count` for a fixed marginal.
    #[arg(long)]
    sweep_v: Option<String>,
    /// Marginal family swept by `--sweep-v`.
    #[arg(long, value_enum)]
    fixed_marginal: Option<MarginalArg>,
    /// Require the secret-sharing condition at the target settings.
    #[arg(long)]
    ss: bool,
    /// Slack on the secret-sharing condition in quantum relaxations.
    #[arg(long, requires = "ss")]
    ss_slack: Option<f64>,
    #[arg(long, value_enum, default_value = "alice")]
    untrusted: PartyArg,
    /// Target settings as three bits, e.g. `000`.
    #[arg(long, default_value = "000")]
    target: String,
    /// Interior-point tolerance.
    #[arg(long)]
    tolerance: Option<f64>,
    /// CSV output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    /// Skip the semidefinite criteria.
    #[arg(long)]
    quick: bool,
    /// Also run the full-level threshold criterion.
    #[arg(long)]
    full_level: bool,
    /// Facet file to compare against instead of the bundled one.
    #[arg(long)]
    golden: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Compute(String),
    Acceptance(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Acceptance(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Compute(m) | Failure::Acceptance(m) => m,
        }
    }
}

type CliResult = Result<(), Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn compute(e: impl std::fmt::Display) -> Failure {
    Failure::Compute(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Eval(a) => cmd_eval(a),
        Command::Box(a) => cmd_box(a),
        Command::Facets(a) => cmd_facets(a),
        Command::Guess(a) => cmd_guess(a),
        Command::Selftest(a) => cmd_selftest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

fn load_behavior(src: &BehaviorSource) -> Result<Behavior, Failure> {
    match (&src.preset, &src.behavior) {
        (Some(p), None) => p.build(src.param.as_deref()),
        (None, Some(path)) => {
            if src.param.is_some() {
                return Err(usage("--param applies to presets only"));
            }
            let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Behavior::from_json_str(&text).map_err(usage)
        }
        _ => Err(usage("give exactly one of --preset and --behavior")),
    }
}

fn functional(name: &str) -> Result<BellFunctional, Failure> {
    match name {
        "svetlichny3" => Ok(svetlichny3()),
        "mermin3" => Ok(mermin3()),
        "chsh" => Ok(chsh(false)),
        "chsh-prime" => Ok(chsh(true)),
        other => {
            let n = other
                .strip_prefix("svetlichny")
                .and_then(|n| n.parse::<usize>().ok())
                .ok_or_else(|| usage(format!("unknown functional '{other}'")))?;
            svetlichny_n(n).map_err(usage)
        }
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> CliResult {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| compute(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn cmd_eval(a: EvalArgs) -> CliResult {
    let b = load_behavior(&a.source)?;
    let f = functional(&a.functional)?;
    let v = evaluate(&f, &b).map_err(usage)?;
    println!("{v}");
    Ok(())
}

fn cmd_box(a: BoxArgs) -> CliResult {
    let b = load_behavior(&a.source)?;
    write_output(a.out.as_ref(), &(b.to_json_string() + "\n"))
}

fn cmd_facets(a: FacetArgs) -> CliResult {
    let (label, v) = match a.model {
        ModelArg::Either => ("either", enumerate_vertices(CausalModel::Either)),
        ModelArg::Alice => ("alice", enumerate_vertices(CausalModel::UntrustedAlice)),
        ModelArg::Bob => ("bob", enumerate_vertices(CausalModel::UntrustedBob)),
        ModelArg::Local => ("local", enumerate_vertices(CausalModel::Local)),
        ModelArg::BipartiteSanity => ("bipartite-sanity", bipartite_local_vertices()),
    };
    let h = facets(&v).map_err(compute)?;
    if let Some(path) = &a.out {
        fs::write(path, h.to_json_string()).map_err(|e| compute(format!("{}: {e}", path.display())))?;
    }
    println!(
        "{label}: {} vertices, {} facets ({} trivial, {} non-trivial)",
        v.len(),
        h.len(),
        h.trivial_count(),
        h.len() - h.trivial_count()
    );
    Ok(())
}

/// Parses `lo:hi:count`.
fn parse_grid(s: &str) -> Result<(Value, Value, usize), Failure> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || usage(format!("grid '{s}' is not lo:hi:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo = Value::parse(parts[0]).ok_or_else(bad)?;
    let hi = Value::parse(parts[1]).ok_or_else(bad)?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count == 0 {
        return Err(bad());
    }
    Ok((lo, hi, count))
}

fn parse_target(s: &str) -> Result<[usize; 3], Failure> {
    let bits: Vec<usize> = s
        .chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(usage(format!("target '{s}' must be three bits"))),
        })
        .collect::<Result<_, _>>()?;
    bits.try_into().map_err(|_| usage(format!("target '{s}' must be three bits")))
}

fn cmd_guess(a: GuessArgs) -> CliResult {
    let resource = match a.resource {
        ResourceArg::Ns => Resource::NonSignaling,
        ResourceArg::Quantum => Resource::Quantum(a.level.parse::<LevelSpec>().map_err(usage)?),
    };
    let sweep = match (&a.sweep_gamma, &a.sweep_v) {
        (Some(g), None) => {
            if a.fixed_marginal.is_some() {
                return Err(usage("--fixed-marginal needs --sweep-v"));
            }
            let (lo, hi, n) = parse_grid(g)?;
            Sweep::Gamma(grid(&lo, &hi, n))
        }
        (None, Some(v)) => {
            let (lo, hi, n) = parse_grid(v)?;
            let family = a.fixed_marginal.unwrap_or(match a.resource {
                ResourceArg::Ns => MarginalArg::MixV,
                ResourceArg::Quantum => MarginalArg::GhzOptimal,
            });
            let points = grid(&lo, &hi, n);
            if points.iter().any(|p| p.to_f64() < 0.0 || p.to_f64() > 1.0) {
                return Err(usage("visibilities must lie in [0, 1]"));
            }
            match family {
                MarginalArg::MixV => Sweep::MixV(points),
                MarginalArg::GhzOptimal => Sweep::QuantumV(points.iter().map(Value::to_f64).collect()),
            }
        }
        _ => return Err(usage("give exactly one of --sweep-gamma and --sweep-v")),
    };
    let base = CertificationConstraints {
        untrusted: match a.untrusted {
            PartyArg::Alice => UntrustedParty::Alice,
            PartyArg::Bob => UntrustedParty::Bob,
        },
        target: parse_target(&a.target)?,
        secret_sharing: a.ss,
        secret_sharing_slack: a.ss_slack.unwrap_or(DEFAULT_SECRET_SHARING_SLACK),
        resource: resource.clone(),
        ..Default::default()
    };
    base.validate().map_err(usage)?;
    let mut opts = SdpOptions::default();
    if let Some(t) = a.tolerance {
        if !(t > 0.0 && t < 1.0) {
            return Err(usage(format!("tolerance {t} outside (0, 1)")));
        }
        opts.tolerance = t;
    }
    let rows = guessing_curve(&sweep, &base, &opts);
    if !rows.is_empty() && rows.iter().all(|r| r.report.is_err()) {
        let first = rows[0].report.as_ref().err().cloned().unwrap_or_default();
        return Err(compute(format!("every point failed: {first}")));
    }
    write_output(a.out.as_ref(), &curve_csv(&rows, &resource))
}

fn cmd_selftest(a: SelftestArgs) -> CliResult {
    let golden = match &a.golden {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| usage(format!("{}: {e}", p.display())))?),
        None => None,
    };
    let opts = AcceptanceOptions { quick: a.quick, full_level: a.full_level, golden_facets: golden };
    let mut first_failure = None;
    let mut skipped = 0;
    for (id, _) in acceptance::criteria() {
        let report = acceptance::run_criterion(id, &opts).expect("listed criterion");
        println!("{report}");
        if report.outcome == Outcome::Skip {
            skipped += 1;
        }
        if report.outcome == Outcome::Fail && first_failure.is_none() {
            first_failure = Some(format!("criterion {} ({}) failed", report.id, report.name));
        }
    }
    match first_failure {
        Some(msg) => Err(Failure::Acceptance(msg)),
        None => {
            println!("all criteria passed ({skipped} skipped)");
            Ok(())
        }
    }
}
