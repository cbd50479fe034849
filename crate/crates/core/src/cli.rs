//! Batch command-line front end. Every subcommand reads JSON files and
//! writes deterministic JSON (or CSV for `bench`) to standard output.
//!
//! Exit codes: 0 success, 1 validation or guard error, 2 internal failure.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};

use crate::behavioural::{behavioural_distance, Construction, IterationConfig, Lifting, Stop};
use crate::convex_powerset::{
    dhk_composite, dhk_dual, dhk_spanning_tree_guarded, point_to_set_distance, spanning_tree_count, verify_hk, ConvexSet,
    HkResult, SPANNING_TREE_GUARD,
};
use crate::distributions::{expectation, Distribution};
use crate::error::{Error, Result};
use crate::json::{self, exact_and_decimal, rat, GroundFile};
use crate::levy_prokhorov::{crisp_price_pair, duality_witness, ky_fan, lp_direct_guarded, SUBSET_GUARD};
use crate::liftings::{
    kantorovich_relational_with, kantorovich_with, verify_witness, wasserstein, Exactness, Ground, LiftedValue, LiftingConfig,
    Witness,
};
use crate::lp::solve_transport;
use crate::modalities::{Argument, Modality};
use crate::scalar::{format_rational, to_decimal_string, Scalar};
use crate::spaces::{PointSet, PseudometricSpace};
use crate::{random, Rational};

/// Environment variables overriding the default guard limits.
pub const ENV_GUARD_SUBSETS: &str = "LIFTLAB_GUARD_SUBSETS";
pub const ENV_GUARD_SPANNING_TREE: &str = "LIFTLAB_GUARD_SPANNING_TREE";
pub const ENV_GUARD_GRID: &str = "LIFTLAB_GUARD_GRID";

#[derive(Parser, Debug)]
#[command(name = "liftlab", version, about = "Exact Kantorovich and Wasserstein liftings of pseudometrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Lifted distance between two arguments
    Dist {
        #[arg(long)]
        modality: String,
        #[arg(long, value_enum)]
        construction: DistConstruction,
        /// Pseudometric, or fuzzy relation (with "targets")
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Attach the witness (coupling or price function)
        #[arg(long)]
        witness: bool,
        /// Re-evaluate the witness independently
        #[arg(long)]
        verify: bool,
        /// lp-direct only: also require the mirrored clause
        #[arg(long)]
        symmetrized: bool,
        /// Grid step for the p-moment Kantorovich oracle
        #[arg(long, default_value = "1/32")]
        grid_delta: String,
        /// Decimal digits for p-th roots
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Kantorovich and Wasserstein values side by side
    DualityCheck {
        #[arg(long)]
        modality: String,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long, default_value = "1/32")]
        grid_delta: String,
        #[arg(long)]
        digits: Option<u32>,
    },
    /// Price-pair certificate for the Lévy-Prokhorov distance
    Witness {
        #[arg(long)]
        epsilon: String,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        mu: PathBuf,
        #[arg(long)]
        nu: PathBuf,
        /// Emit the binary price pair of the relation thresholded at epsilon
        #[arg(long)]
        crisp: bool,
        #[arg(long)]
        verify: bool,
    },
    /// Hausdorff-Kantorovich distance between convex sets
    Convex {
        #[arg(long, value_enum)]
        algorithm: Algorithm,
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        verify: bool,
    },
    /// Behavioural distance of a finite coalgebra
    Behavioural {
        #[arg(long)]
        coalgebra: PathBuf,
        #[arg(long)]
        modality: String,
        #[arg(long, value_enum, default_value = "kantorovich")]
        construction: LiftConstruction,
        #[arg(long, default_value_t = 1000)]
        max_iters: usize,
        /// Stop once no entry changes by more than this
        #[arg(long)]
        tolerance: Option<String>,
    },
    /// Timing suite (CSV)
    Bench {
        #[arg(long, default_value = "convex")]
        suite: String,
        #[arg(long, value_delimiter = ',', default_value = "3,5,10")]
        sizes: Vec<usize>,
        /// Generators per side
        #[arg(long, default_value_t = 5)]
        generators: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_value = "composite,dual,spanning-tree")]
        algorithms: Vec<Algorithm>,
    },
    /// Reproduce the worked instances
    Examples {
        #[arg(long, value_enum)]
        name: ExampleName,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistConstruction {
    Kantorovich,
    Wasserstein,
    LpDirect,
    KyFan,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum LiftConstruction {
    Kantorovich,
    Wasserstein,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Composite,
    SpanningTree,
    Dual,
}

impl Algorithm {
    fn name(self) -> &'static str {
        match self {
            Algorithm::Composite => "composite",
            Algorithm::SpanningTree => "spanning-tree",
            Algorithm::Dual => "dual",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExampleName {
    PWassersteinGap,
    Hexagon,
    LpDuality,
}

/// Guard limits, optionally overridden from the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct Guards {
    pub subsets: usize,
    pub spanning_tree: usize,
    pub grid: u128,
}

impl Guards {
    pub fn from_env() -> Result<Self> {
        fn read<T: std::str::FromStr>(name: &str, default: T) -> Result<T> {
            match std::env::var(name) {
                Ok(v) => v.trim().parse().map_err(|_| Error::validation(format!("{name} must be a non-negative integer"))),
                Err(_) => Ok(default),
            }
        }
        Ok(Guards {
            subsets: read(ENV_GUARD_SUBSETS, SUBSET_GUARD)?,
            spanning_tree: read(ENV_GUARD_SPANNING_TREE, SPANNING_TREE_GUARD)?,
            grid: read(ENV_GUARD_GRID, LiftingConfig::default().grid_limit)?,
        })
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match execute(cli.command) {
        Ok(Output::Json(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            0
        }
        Ok(Output::Text(t)) => {
            let _ = write!(out, "{t}");
            0
        }
        Ok(Output::Failed(v)) => {
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("JSON values serialize"));
            let _ = writeln!(err, "error: computed values disagree with the expected ones");
            2
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Internal(_) => 2,
                _ => 1,
            }
        }
    }
}

enum Output {
    Json(Value),
    Text(String),
    /// Output to show, but the run is an assertion failure.
    Failed(Value),
}

fn rational_arg(text: &str) -> Result<Rational> {
    crate::scalar::parse_rational(text)
}

fn modality_arg(text: &str, digits: Option<u32>) -> Result<Modality> {
    let m = json::modality_from_arg(text)?;
    match digits {
        Some(d) => m.with_digits(d),
        None => Ok(m),
    }
}

fn lifting_config(grid_delta: &str, guards: &Guards) -> Result<LiftingConfig> {
    Ok(LiftingConfig { grid_delta: rational_arg(grid_delta)?, grid_limit: guards.grid, ..LiftingConfig::default() })
}

/// An argument of a lifting as loaded from disk.
enum Loaded {
    Dist(Distribution<Rational>),
    Points(PointSet),
    Convex(ConvexSet<Rational>),
}

impl Loaded {
    fn load(m: &Modality, path: &std::path::Path, labels: &[String]) -> Result<Self> {
        let v = json::read_value(path)?;
        Ok(match m {
            Modality::Sup | Modality::Inf => Loaded::Points(json::point_set_from_json(v, labels)?),
            Modality::ConvexSupExpectation => Loaded::Convex(json::convex_set_from_json(v, labels)?),
            _ => Loaded::Dist(json::distribution_from_json(v, labels)?),
        })
    }

    fn arg(&self) -> Argument<'_, Rational> {
        match self {
            Loaded::Dist(d) => Argument::Dist(d),
            Loaded::Points(p) => Argument::Points(p),
            Loaded::Convex(c) => Argument::Convex(c),
        }
    }

    fn dist(&self) -> Result<&Distribution<Rational>> {
        match self {
            Loaded::Dist(d) => Ok(d),
            _ => Err(Error::kind("this construction needs distributions")),
        }
    }
}

fn ground_of(g: &GroundFile) -> Ground<'_, Rational> {
    match g {
        GroundFile::Space(s) => Ground::Metric(s),
        GroundFile::Relation(r) => Ground::Relation(r),
    }
}

fn exactness_name(e: Exactness) -> &'static str {
    match e {
        Exactness::Exact => "exact",
        Exactness::LowerBound => "lower_bound",
        Exactness::UpperBound => "upper_bound",
        Exactness::Approximate { .. } => "approximate",
    }
}

/// Values built from truncated p-th roots are shown as decimals with their
/// precision; everything else exactly, with a decimal alongside.
fn value_json(v: &Rational, digits: Option<u32>) -> Value {
    match digits {
        Some(digits) => json!({ "decimal": to_decimal_string(v, digits as usize), "digits": digits }),
        None => exact_and_decimal(v),
    }
}

fn root_digits(m: &Modality) -> Option<u32> {
    match m {
        Modality::PMoment { digits, .. } => Some(*digits),
        _ => None,
    }
}

fn hk_json(hk: &HkResult<Rational>, labels: &[String]) -> Value {
    let direction = |w: &Option<crate::convex_powerset::DirectionWitness<Rational>>, from: &str, to: &str| {
        w.as_ref().map(|w| {
            json!({
                "from": format!("{from}[{}]", w.generator),
                "value": rat(&w.value),
                "weights": w.weights.iter().map(|c| json!({ "set": to, "weight": rat(c) })).collect::<Vec<_>>(),
                "nearest": json::distribution_to_json(&w.nearest, labels),
            })
        })
    };
    let mut obj = json!({ "value": exact_and_decimal(&hk.value) });
    if let Some(f) = direction(&hk.forward, "A", "B") {
        obj["forward"] = f;
    }
    if let Some(b) = direction(&hk.backward, "B", "A") {
        obj["backward"] = b;
    }
    if let Some(f) = &hk.dual_witness {
        obj["dual_witness"] = json::predicate_to_json(f, labels);
    }
    obj
}

fn witness_json(w: &Witness<Rational>, sources: &[String], targets: &[String]) -> Value {
    match w {
        Witness::None => Value::Null,
        Witness::Coupling(c) => {
            let mut entries = Vec::new();
            for (x, row) in c.joint().iter().enumerate() {
                for (y, m) in row.iter().enumerate() {
                    if !m.is_zero() {
                        entries.push(json!({ "from": sources[x], "to": targets[y], "mass": rat(m) }));
                    }
                }
            }
            json!({ "coupling": entries })
        }
        Witness::SetCoupling(pairs) => json!({
            "set_coupling": pairs.iter().map(|&(x, y)| json!([sources[x], targets[y]])).collect::<Vec<_>>()
        }),
        Witness::Predicate(f) => json!({ "f": json::predicate_to_json(f, sources) }),
        Witness::Pair(p) => json!({ "f": json::predicate_to_json(&p.f, sources), "g": json::predicate_to_json(&p.g, targets) }),
        Witness::Convex(hk) => hk_json(hk, sources),
    }
}

fn lifted_json(m: &Modality, l: &LiftedValue<Rational>, ground: &GroundFile, with_witness: bool) -> Value {
    let mut obj = json!({
        "value": value_json(&l.value, root_digits(m)),
        "exactness": exactness_name(l.exactness),
    });
    if let Some(u) = &l.upper {
        obj["upper_bound"] = value_json(u, root_digits(m));
    }
    if with_witness {
        obj["witness"] = witness_json(&l.witness, ground.sources(), ground.targets());
    }
    obj
}

fn execute(cmd: Command) -> Result<Output> {
    let guards = Guards::from_env()?;
    match cmd {
        Command::Dist { modality, construction, space, mu, nu, witness, verify, symmetrized, grid_delta, digits } => {
            let m = modality_arg(&modality, digits)?;
            let ground = json::ground_from_json(json::read_value(&space)?)?;
            let s = Loaded::load(&m, &mu, ground.sources())?;
            let t = Loaded::load(&m, &nu, ground.targets())?;
            let cfg = lifting_config(&grid_delta, &guards)?;
            let mut out = json!({
                "modality": json::modality_to_json(&m),
                "construction": format!("{construction:?}").to_lowercase(),
            });
            let lifted = match construction {
                DistConstruction::LpDirect => {
                    let GroundFile::Space(d) = &ground else {
                        return Err(Error::validation("lp-direct needs a pseudometric"));
                    };
                    if m != Modality::Generally {
                        return Err(Error::kind("lp-direct is the Lévy-Prokhorov distance; use --modality generally"));
                    }
                    let v = lp_direct_guarded(d, s.dist()?, t.dist()?, symmetrized, guards.subsets)?;
                    out["value"] = exact_and_decimal(&v);
                    out["exactness"] = json!("exact");
                    out["symmetrized"] = json!(symmetrized);
                    return Ok(Output::Json(out));
                }
                DistConstruction::KyFan => {
                    if m != Modality::Generally {
                        return Err(Error::kind("ky-fan is the Lévy-Prokhorov distance; use --modality generally"));
                    }
                    let r = match &ground {
                        GroundFile::Space(d) => d.as_relation(),
                        GroundFile::Relation(r) => r.clone(),
                    };
                    let kf = ky_fan(&r, s.dist()?, t.dist()?)?;
                    out["epsilon"] = rat(&kf.epsilon);
                    kf.lifted
                }
                DistConstruction::Wasserstein => wasserstein(&m, ground_of(&ground), s.arg(), t.arg())?,
                DistConstruction::Kantorovich => match &ground {
                    GroundFile::Space(d) => kantorovich_with(&m, d, s.arg(), t.arg(), &cfg)?,
                    GroundFile::Relation(r) => kantorovich_relational_with(&m, r, s.arg(), t.arg(), &cfg)?,
                },
            };
            merge(&mut out, lifted_json(&m, &lifted, &ground, witness));
            if verify {
                let v = verify_witness(&m, ground_of(&ground), s.arg(), t.arg(), &lifted)?;
                out["verified"] = json!({ "ok": true, "witness_value": value_json(&v, root_digits(&m)) });
            }
            Ok(Output::Json(out))
        }
        Command::DualityCheck { modality, space, mu, nu, grid_delta, digits } => {
            let m = modality_arg(&modality, digits)?;
            let ground = json::ground_from_json(json::read_value(&space)?)?;
            let s = Loaded::load(&m, &mu, ground.sources())?;
            let t = Loaded::load(&m, &nu, ground.targets())?;
            let cfg = lifting_config(&grid_delta, &guards)?;
            let k = match &ground {
                GroundFile::Space(d) => kantorovich_with(&m, d, s.arg(), t.arg(), &cfg)?,
                GroundFile::Relation(r) => kantorovich_relational_with(&m, r, s.arg(), t.arg(), &cfg)?,
            };
            let w = wasserstein(&m, ground_of(&ground), s.arg(), t.arg())?;
            let gap = w.value.clone() - k.value.clone();
            let both_exact = k.exactness == Exactness::Exact && w.exactness == Exactness::Exact;
            let slack: Rational = m.slack();
            Ok(Output::Json(json!({
                "modality": json::modality_to_json(&m),
                "kantorovich": lifted_json(&m, &k, &ground, false),
                "wasserstein": lifted_json(&m, &w, &ground, false),
                "equal": both_exact && gap.is_zero(),
                "gap": value_json(&gap, root_digits(&m)),
                "kantorovich_le_wasserstein": k.value <= w.value.clone() + slack,
            })))
        }
        Command::Witness { epsilon, space, mu, nu, crisp, verify } => {
            let eps = rational_arg(&epsilon)?;
            let ground = json::ground_from_json(json::read_value(&space)?)?;
            let r = match &ground {
                GroundFile::Space(d) => d.as_relation(),
                GroundFile::Relation(r) => r.clone(),
            };
            let mu = json::distribution_from_json(json::read_value(&mu)?, ground.sources())?;
            let nu = json::distribution_from_json(json::read_value(&nu)?, ground.targets())?;
            let bits = |v: &[u8], labels: &[String]| -> Value {
                Value::Object(labels.iter().zip(v).map(|(l, b)| (l.clone(), json!(b))).collect())
            };
            if crisp {
                let threshold = r.crisp_threshold(&eps);
                let pair = crisp_price_pair(&threshold, &mu, &nu)?;
                let margin = pair.margin(&mu, &nu)?;
                let cost = solve_transport(threshold.relation().matrix(), mu.masses(), nu.masses())?.cost;
                let mut out = json!({
                    "epsilon": rat(&eps),
                    "p": bits(&pair.p, ground.sources()),
                    "q": bits(&pair.q, ground.targets()),
                    "margin": rat(&margin),
                    "transport_cost": rat(&cost),
                });
                if verify {
                    let ok = pair.to_pair::<Rational>().is_nonexpansive(threshold.relation()) && margin >= cost;
                    if !ok {
                        return Err(Error::Internal("crisp price pair failed re-verification".into()));
                    }
                    out["verified"] = json!(true);
                }
                return Ok(Output::Json(out));
            }
            let w = duality_witness(&r, &mu, &nu, &eps)?;
            let mut out = json!({
                "epsilon": rat(&w.epsilon),
                "a": rat(&expectation(&mu, &w.crisp.to_pair::<Rational>().f)?),
                "f": json::predicate_to_json(&w.pair.f, ground.sources()),
                "g": json::predicate_to_json(&w.pair.g, ground.targets()),
                "p": bits(&w.crisp.p, ground.sources()),
                "q": bits(&w.crisp.q, ground.targets()),
                "margin": rat(&w.margin),
            });
            if verify {
                let margin = crate::modalities::generally(&w.pair.g, &nu)? - crate::modalities::generally(&w.pair.f, &mu)?;
                if !w.pair.is_nonexpansive(&r) || margin < eps {
                    return Err(Error::Internal("duality witness failed re-verification".into()));
                }
                out["verified"] = json!(true);
            }
            Ok(Output::Json(out))
        }
        Command::Convex { algorithm, space, a, b, verify } => {
            let d = json::space_from_json(json::read_value(&space)?)?;
            let a = json::convex_set_from_json(json::read_value(&a)?, d.points())?;
            let b = json::convex_set_from_json(json::read_value(&b)?, d.points())?;
            let hk = run_convex(algorithm, &d, &a, &b, &guards)?;
            let mut out = json!({ "algorithm": algorithm.name() });
            merge(&mut out, hk_json(&hk, d.points()));
            if verify {
                verify_hk(&d, &a, &b, &hk)?;
                out["verified"] = json!(true);
            }
            Ok(Output::Json(out))
        }
        Command::Behavioural { coalgebra, modality, construction, max_iters, tolerance } => {
            let c = json::coalgebra_from_json(json::read_value(&coalgebra)?)?;
            let lifting = Lifting {
                modality: modality_arg(&modality, None)?,
                construction: match construction {
                    LiftConstruction::Kantorovich => Construction::Kantorovich,
                    LiftConstruction::Wasserstein => Construction::Wasserstein,
                },
            };
            let cfg = IterationConfig { max_iters, tolerance: tolerance.as_deref().map(rational_arg).transpose()? };
            let it = behavioural_distance(&c, &lifting, &cfg)?;
            Ok(Output::Json(json!({
                "states": c.states(),
                "d": it.d.matrix().iter().map(|row| row.iter().map(rat).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "iteration": it.iteration,
                "converged": it.converged,
                "stop": match it.stop {
                    Stop::ExactRepeat => "exact_repeat",
                    Stop::Tolerance => "tolerance",
                    Stop::MaxIterations => "max_iterations",
                },
                "monotone": it.monotone,
            })))
        }
        Command::Bench { suite, sizes, generators, seed, repeats, algorithms } => {
            if suite != "convex" {
                return Err(Error::validation(format!("unknown bench suite {suite:?}; available: convex")));
            }
            bench_convex(&sizes, generators, seed, repeats.max(1), &algorithms, &guards).map(Output::Text)
        }
        Command::Examples { name } => examples(name),
    }
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn run_convex(
    algorithm: Algorithm,
    d: &PseudometricSpace<Rational>,
    a: &ConvexSet<Rational>,
    b: &ConvexSet<Rational>,
    guards: &Guards,
) -> Result<HkResult<Rational>> {
    match algorithm {
        Algorithm::Composite => dhk_composite(d, a, b),
        Algorithm::SpanningTree => dhk_spanning_tree_guarded(d, a, b, guards.spanning_tree),
        Algorithm::Dual => dhk_dual(d, a, b),
    }
}

fn bench_convex(sizes: &[usize], generators: usize, seed: u64, repeats: usize, algorithms: &[Algorithm], guards: &Guards) -> Result<String> {
    if generators == 0 {
        return Err(Error::validation("need at least one generator per side"));
    }
    let mut csv = String::from("algorithm,n,a0,b0,wall_ms,value,note\n");
    for &n in sizes {
        if n == 0 {
            return Err(Error::validation("carrier size must be positive"));
        }
        let mut rng = random::rng(seed ^ (n as u64) << 32);
        let d = random::metric(&mut rng, n, 12);
        let a = random::convex_set(&mut rng, n, generators, 9);
        let b = random::convex_set(&mut rng, n, generators, 9);
        for &alg in algorithms {
            if alg == Algorithm::SpanningTree && n > guards.spanning_tree {
                csv.push_str(&format!(
                    "{},{n},{generators},{generators},,,guarded: K_{{{n},{n}}} has n^(2n-2) = {} spanning trees (limit n <= {})\n",
                    alg.name(),
                    spanning_tree_count(n),
                    guards.spanning_tree
                ));
                continue;
            }
            let mut times = Vec::with_capacity(repeats);
            let mut value = None;
            for _ in 0..repeats {
                let start = Instant::now();
                let hk = run_convex(alg, &d, &a, &b, guards)?;
                times.push(start.elapsed().as_secs_f64() * 1000.0);
                value = Some(hk.value);
            }
            times.sort_by(|x, y| x.partial_cmp(y).unwrap());
            let median = times[times.len() / 2];
            let note = if alg == Algorithm::SpanningTree { format!("{} trees", spanning_tree_count(n)) } else { String::new() };
            csv.push_str(&format!(
                "{},{n},{generators},{generators},{median:.1},{},{note}\n",
                alg.name(),
                format_rational(&value.unwrap())
            ));
        }
    }
    Ok(csv)
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

struct Checks {
    rows: Vec<Value>,
    ok: bool,
}

impl Checks {
    fn new() -> Self {
        Checks { rows: Vec::new(), ok: true }
    }

    fn exact(&mut self, what: &str, expected: &Rational, computed: &Rational) {
        let ok = expected == computed;
        self.ok &= ok;
        self.rows.push(json!({ "quantity": what, "expected": rat(expected), "computed": rat(computed), "match": ok }));
    }

    fn holds(&mut self, what: &str, detail: Value, ok: bool) {
        self.ok &= ok;
        self.rows.push(json!({ "quantity": what, "detail": detail, "match": ok }));
    }

    fn finish(self, name: &str) -> Output {
        let v = json!({ "example": name, "checks": self.rows, "all_match": self.ok });
        if self.ok {
            Output::Json(v)
        } else {
            Output::Failed(v)
        }
    }
}

fn dist(v: &[Rational]) -> Result<Distribution<Rational>> {
    Distribution::new(v.to_vec())
}

fn examples(name: ExampleName) -> Result<Output> {
    let mut checks = Checks::new();
    match name {
        ExampleName::Hexagon => {
            let d = PseudometricSpace::new(vec!["x".into(), "y".into(), "z".into()], {
                let o = || Rational::one();
                let z = || Rational::zero();
                vec![vec![z(), o(), o()], vec![o(), z(), o()], vec![o(), o(), z()]]
            })?;
            let third = q(1, 3);
            let mu0 = dist(&[third.clone(), third.clone(), third.clone()])?;
            let mu1 = dist(&[q(2, 3), q(1, 3), q(0, 1)])?;
            let mu2 = dist(&[q(0, 1), q(2, 3), q(1, 3)])?;
            let mu3 = dist(&[q(1, 3), q(0, 1), q(2, 3)])?;
            let a = ConvexSet::new(vec![mu0, mu1.clone()])?;
            let b = ConvexSet::new(vec![mu2, mu3])?;
            let pts = point_to_set_distance(&d, &mu1, &b)?;
            checks.exact("point-to-set distance from mu1 to B", &q(1, 2), &pts.value);
            let expected_star = dist(&[q(1, 6), q(1, 3), q(1, 2)])?;
            checks.holds(
                "nearest point mu* = 1/2 mu2 + 1/2 mu3",
                json!({ "expected": json::distribution_to_json(&expected_star, d.points()), "computed": json::distribution_to_json(&pts.nearest, d.points()) }),
                pts.nearest == expected_star,
            );
            let vertices = b
                .generators()
                .iter()
                .map(|nu| solve_transport(d.matrix(), mu1.masses(), nu.masses()).map(|t| t.cost))
                .collect::<Result<Vec<_>>>()?;
            let vertex_min = vertices.into_iter().min().unwrap();
            checks.exact("distance from mu1 to B's generators only", &q(2, 3), &vertex_min);
            for alg in [Algorithm::Composite, Algorithm::SpanningTree, Algorithm::Dual] {
                let hk = run_convex(alg, &d, &a, &b, &Guards::from_env()?)?;
                verify_hk(&d, &a, &b, &hk)?;
                checks.exact(&format!("d_HK(A, B) via {}", alg.name()), &q(1, 2), &hk.value);
            }
            Ok(checks.finish("hexagon"))
        }
        ExampleName::PWassersteinGap => {
            let d = PseudometricSpace::<Rational>::discrete(2);
            let mu = dist(&[q(2, 3), q(1, 3)])?;
            let nu = dist(&[q(1, 3), q(2, 3)])?;
            let m = Modality::p_moment(q(2, 1))?;
            let w = wasserstein(&m, Ground::Metric(&d), Argument::Dist(&mu), Argument::Dist(&nu))?;
            let k = kantorovich_with(&m, &d, Argument::Dist(&mu), Argument::Dist(&nu), &LiftingConfig::default())?;
            let inv_sqrt3 = q(1, 3).pow_rational(&q(1, 2), crate::modalities::DEFAULT_DIGITS);
            let tol = q(1, 1_000_000_000_000);
            let close = (w.value.clone() - inv_sqrt3.clone()).abs() <= tol;
            checks.holds(
                "W = 1/sqrt(3)",
                json!({ "expected": to_decimal_string(&inv_sqrt3, 30), "computed": to_decimal_string(&w.value, 30), "tolerance": "1e-12" }),
                close,
            );
            let upper = k.upper.clone().unwrap_or_else(|| w.value.clone());
            checks.holds(
                "Kantorovich bounds: lower <= upper <= 1/3",
                json!({ "lower": exact_and_decimal(&k.value), "upper": exact_and_decimal(&upper), "grid_step": "1/32" }),
                k.value <= upper && upper <= q(1, 3),
            );
            checks.holds(
                "strict gap: 1/3 < W - 1/10",
                json!({ "w_minus_tenth": to_decimal_string(&(w.value.clone() - q(1, 10)), 12) }),
                q(1, 3) < w.value.clone() - q(1, 10),
            );
            Ok(checks.finish("p-wasserstein-gap"))
        }
        ExampleName::LpDuality => {
            let d = PseudometricSpace::<Rational>::discrete(2);
            let mu = dist(&[q(2, 3), q(1, 3)])?;
            let nu = dist(&[q(1, 3), q(2, 3)])?;
            let direct = crate::levy_prokhorov::lp_direct(&d, &mu, &nu, false)?;
            checks.exact("direct Lévy-Prokhorov distance", &q(1, 3), &direct);
            let sym = crate::levy_prokhorov::lp_direct(&d, &mu, &nu, true)?;
            checks.exact("symmetrized direct distance", &q(1, 3), &sym);
            let kf = ky_fan(&d.as_relation(), &mu, &nu)?;
            checks.exact("Ky Fan (coupling) form", &q(1, 3), &kf.lifted.value);
            let k = kantorovich_with(&Modality::Generally, &d, Argument::Dist(&mu), Argument::Dist(&nu), &LiftingConfig::default())?;
            checks.exact("Kantorovich (generally)", &q(1, 3), &k.value);
            let kr = kantorovich_relational_with(
                &Modality::Generally,
                &d.as_relation(),
                Argument::Dist(&mu),
                Argument::Dist(&nu),
                &LiftingConfig::default(),
            )?;
            checks.exact("relational Kantorovich (generally)", &q(1, 3), &kr.value);
            let w = duality_witness(&d.as_relation(), &mu, &nu, &q(1, 4))?;
            checks.holds(
                "duality witness at epsilon = 1/4",
                json!({ "margin": rat(&w.margin), "f": json::predicate_to_json(&w.pair.f, d.points()), "g": json::predicate_to_json(&w.pair.g, d.points()) }),
                w.margin >= q(1, 4),
            );
            Ok(checks.finish("lp-duality"))
        }
    }
}
