use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kreiss_core::fixtures::{self, Design};
use kreiss_core::matcore::RealMatrix;
use kreiss_core::nlsim::{self, NonlinearSystem};
use kreiss_core::synth::{scenario_loop, DiskRegion, ObjectiveKind, SynthesisProblem, DEFAULT_RESTARTS, DEFAULT_SEED};
use kreiss_core::sysmodel::{close_loop, Controller, ProjectionJ, StateSpace};
use kreiss_core::transient::{
    h2_norm, kreiss_constant, numerical_abscissa, restricted_numerical_abscissa, spectral_abscissa,
    transient_growth, worst_case_energy, DEFAULT_TOL,
};
use kreiss_core::KreissError;

use crate::catalog;
use crate::error::{CliError, CliResult};
use crate::format::SystemFile;
use crate::report::{csv, num, records_table, table, ReportRecord};

/// Relative golden-section width for transient peaks.
const GROWTH_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "kreiss", version, about = "Kreiss constants, transient growth and structured controller synthesis")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores). Results do
    /// not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Print JSON on stdout instead of a table.
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute analysis quantities of a matrix, plant or closed loop.
    Analyze(AnalyzeArgs),
    /// Kreiss constants of Grcar matrices with timings.
    BenchGrcar(BenchArgs),
    /// Design a fixed-order controller by the scenario loop.
    Synthesize(SynthArgs),
    /// Analyze the four printed controllers of the 7-state example.
    Table2(Table2Args),
    /// Simulate the two-state nonlinear example.
    Simulate(SimArgs),
    /// List or print the built-in fixtures.
    Fixtures {
        #[command(subcommand)]
        action: FixturesCmd,
    },
}

#[derive(Debug, Args)]
pub struct Source {
    /// System file.
    #[arg(long, conflicts_with = "fixture")]
    pub input: Option<PathBuf>,
    /// Built-in fixture name.
    #[arg(long)]
    pub fixture: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum JMode {
    /// Sandwich by the plant-state selector.
    Plant,
    /// Use all states.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    K,
    M0,
    Omega,
    Alpha,
    H2,
    WcEnergy,
}

impl Quantity {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "K" | "𝒦" => Ok(Quantity::K),
            "M0" | "𝓜₀" => Ok(Quantity::M0),
            "omega" => Ok(Quantity::Omega),
            "alpha" => Ok(Quantity::Alpha),
            "h2" => Ok(Quantity::H2),
            "wc_energy" => Ok(Quantity::WcEnergy),
            _ => Err(format!("unknown quantity `{s}` (K, M0, omega, alpha, h2, wc_energy)")),
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub source: Source,
    /// Controller file to close the loop with a plant input.
    #[arg(long, conflicts_with = "controller_fixture")]
    pub controller: Option<PathBuf>,
    /// Built-in controller to close the loop with a plant input.
    #[arg(long)]
    pub controller_fixture: Option<String>,
    /// Comma-separated quantities: K, M0, omega, alpha, h2, wc_energy.
    #[arg(long, value_delimiter = ',', default_value = "K,M0,omega,alpha", value_parser = Quantity::parse)]
    pub quantity: Vec<Quantity>,
    #[arg(long, value_enum, default_value_t = JMode::Plant)]
    pub j: JMode,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Also write the JSON records to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,50")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Kreiss,
    Numabs,
    H2match,
    Wcenergy,
}

impl Method {
    fn name(self) -> &'static str {
        match self {
            Method::Kreiss => "kreiss",
            Method::Numabs => "numabs",
            Method::H2match => "h2match",
            Method::Wcenergy => "wcenergy",
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub source: Source,
    #[arg(long, value_enum, default_value_t = Method::Kreiss)]
    pub method: Method,
    /// Controller order (0 for a static gain).
    #[arg(long, default_value_t = 0)]
    pub order: usize,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    /// Seed of the first restart; restart r uses seed + r.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Minimum closed-loop decay rate.
    #[arg(long, default_value_t = DiskRegion::default().min_decay)]
    pub decay: f64,
    /// Maximum closed-loop eigenvalue modulus.
    #[arg(long, default_value_t = DiskRegion::default().radius)]
    pub radius: f64,
    /// Controller file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Table2Args {
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LoopMode {
    Open,
    Closed,
}

#[derive(Debug, Args)]
pub struct SimArgs {
    #[arg(long = "loop", value_enum, default_value_t = LoopMode::Open)]
    pub mode: LoopMode,
    /// Initial state `x1,x2` (repeatable; controller states start at zero
    /// unless given as two more entries). Defaults to the eight published
    /// initial conditions.
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Vec<String>,
    #[arg(long, default_value_t = nlsim::DEFAULT_HORIZON)]
    pub horizon: f64,
    #[arg(long, default_value_t = nlsim::DEFAULT_TOL)]
    pub tol: f64,
    /// Also bisect for the basin threshold along x2.
    #[arg(long)]
    pub threshold: bool,
    /// Directory for one trajectory CSV per initial condition.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum FixturesCmd {
    /// Names, kinds and sizes.
    List,
    /// Print a fixture as a system file.
    Dump {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::io(path.display().to_string(), e))
}

fn emit(out: &mut dyn Write, text: &str) -> CliResult<()> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::io("stdout", e))
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report types serialize");
    s.push('\n');
    s
}

pub fn load_file(path: &Path) -> CliResult<SystemFile> {
    let origin = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(origin.clone(), e))?;
    SystemFile::parse(&text).map_err(|error| CliError::Parse { origin, error })
}

fn load(source: &Source) -> CliResult<SystemFile> {
    match (&source.input, &source.fixture) {
        (Some(p), None) => load_file(p),
        (None, Some(name)) => catalog::lookup(name),
        _ => Err(CliError::Usage("give exactly one of --input or --fixture".into())),
    }
}

pub fn run(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    let json = cli.json;
    let go = |out: &mut dyn Write| match cli.command {
        Command::Analyze(a) => analyze(&a, json, out),
        Command::BenchGrcar(a) => bench_grcar(&a, json, out),
        Command::Synthesize(a) => synthesize(&a, json, out),
        Command::Table2(a) => table2(&a, json, out),
        Command::Simulate(a) => simulate(&a, json, out),
        Command::Fixtures { action } => fixtures_cmd(&action, out),
    };
    match cli.workers {
        Some(0) => Err(CliError::Usage("--workers must be at least 1".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {w} workers: {e}")))?;
            // Output is buffered so the pool thread need not own stdout.
            let mut buf = Vec::new();
            let res = pool.install(|| go(&mut buf));
            emit(out, &String::from_utf8_lossy(&buf))?;
            res
        }
        None => go(out),
    }
}

/// State matrix, plant-state selector and the open-loop plant if no
/// controller was applied.
struct Target {
    a: RealMatrix,
    j: ProjectionJ,
    open_plant: Option<StateSpace>,
}

fn analysis_target(args: &AnalyzeArgs) -> CliResult<Target> {
    let system = load(&args.source)?;
    let controller = match (&args.controller, &args.controller_fixture) {
        (Some(p), None) => Some(load_file(p)?),
        (None, Some(name)) => Some(catalog::lookup(name)?),
        (None, None) => None,
        _ => unreachable!("clap rejects both"),
    };
    let mut target = match (system, controller) {
        (SystemFile::Plant(p), Some(SystemFile::Controller(k))) => {
            let acl = close_loop(&p, &k)?;
            Target {
                a: acl.a().clone(),
                j: ProjectionJ::new(p.nstates(), k.order()),
                open_plant: None,
            }
        }
        (_, Some(other)) if other.kind() != crate::format::Kind::Controller => {
            return Err(CliError::Usage(format!("--controller expects a controller, got a {}", other.kind().name())));
        }
        (other, Some(_)) => {
            return Err(CliError::Usage(format!("a controller can only be applied to a plant, got a {}", other.kind().name())));
        }
        (SystemFile::Controller(_), None) => {
            return Err(CliError::Usage("a controller alone has nothing to analyze; pass it with --controller".into()));
        }
        (SystemFile::Plant(p), None) => Target {
            a: p.a().clone(),
            j: ProjectionJ::identity(p.nstates()),
            open_plant: Some(p),
        },
        (f @ SystemFile::ClosedLoop { .. }, None) => {
            let (a, j) = f.state_matrix().expect("closed loops have a state matrix");
            Target { a, j, open_plant: None }
        }
    };
    if args.j == JMode::Full {
        target.j = ProjectionJ::identity(target.a.nrows());
    }
    Ok(target)
}

fn timed<T>(f: impl FnOnce() -> Result<T, KreissError>) -> Result<(T, f64), KreissError> {
    let t = Instant::now();
    let v = f()?;
    Ok((v, t.elapsed().as_secs_f64()))
}

fn analyze_quantity(q: Quantity, t: &Target, tol: f64) -> CliResult<ReportRecord> {
    let restricted = t.j.controller_order() > 0;
    let rec = match q {
        Quantity::K => {
            let (r, s) = timed(|| kreiss_constant(&t.a, t.j, tol))?;
            let name = if restricted { "𝒦" } else { "K" };
            ReportRecord::new(name, r.value, r.tolerance, s)
                .at("delta", r.delta_star)
                .at("omega", json_number(r.omega_star))
        }
        Quantity::M0 => {
            let (p, s) = timed(|| transient_growth(&t.a, t.j, tol.min(GROWTH_TOL)))?;
            let name = if restricted { "𝓜₀" } else { "M0" };
            ReportRecord::new(name, p.peak, tol.min(GROWTH_TOL), s).at("t", p.peak_time)
        }
        Quantity::Omega => {
            let (w, s) = timed(|| {
                if restricted {
                    restricted_numerical_abscissa(&t.a, t.j)
                } else {
                    numerical_abscissa(&t.a)
                }
            })?;
            ReportRecord::new("omega", w, 0.0, s)
        }
        Quantity::Alpha => {
            let (w, s) = timed(|| spectral_abscissa(&t.a))?;
            ReportRecord::new("alpha", w, 0.0, s)
        }
        Quantity::H2 => {
            let (w, s) = timed(|| match &t.open_plant {
                Some(p) => h2_norm(p),
                None => {
                    let jm = t.j.matrix();
                    let n = t.j.plant_states();
                    h2_norm(&StateSpace::new(t.a.clone(), jm.clone(), jm.transpose(), RealMatrix::zeros(n, n))?)
                }
            })?;
            ReportRecord::new("h2", w, 0.0, s)
        }
        Quantity::WcEnergy => {
            let (w, s) = timed(|| worst_case_energy(&t.a, t.j))?;
            ReportRecord::new("wc_energy", w.value, 0.0, s).at("vertex", w.vertex.clone())
        }
    };
    Ok(rec)
}

/// JSON has no infinity; the high-frequency limit is written as a string.
fn json_number(x: f64) -> serde_json::Value {
    if x.is_finite() {
        x.into()
    } else {
        "inf".into()
    }
}

fn positive_tol(tol: f64) -> CliResult<()> {
    if tol.is_finite() && tol > 0.0 && tol < 1.0 {
        Ok(())
    } else {
        Err(CliError::Usage(format!("--tol must lie in (0, 1), got {tol}")))
    }
}

pub fn analyze(args: &AnalyzeArgs, json: bool, out: &mut dyn Write) -> CliResult<()> {
    positive_tol(args.tol)?;
    let target = analysis_target(args)?;
    let records = args
        .quantity
        .iter()
        .map(|&q| analyze_quantity(q, &target, args.tol))
        .collect::<CliResult<Vec<_>>>()?;
    if let Some(p) = &args.out {
        write_file(p, &to_json(&records))?;
    }
    emit(out, &if json { to_json(&records) } else { records_table(&records) })
}

#[derive(Debug, Serialize)]
pub struct GrcarRow {
    pub n: usize,
    pub estimate: f64,
    pub reported: Option<f64>,
    pub rel_err: Option<f64>,
    pub delta: f64,
    pub cpu_s: f64,
}

pub fn bench_grcar(args: &BenchArgs, json: bool, out: &mut dyn Write) -> CliResult<()> {
    positive_tol(args.tol)?;
    if let Some(&n) = args.sizes.iter().find(|&&n| n < 2) {
        return Err(CliError::Usage(format!("grcar sizes must be at least 2, got {n}")));
    }
    let mut rows = Vec::new();
    for &n in &args.sizes {
        let (r, s) = timed(|| kreiss_constant(&fixtures::grcar(n), ProjectionJ::identity(n), args.tol))
            .map_err(|source| CliError::Context {
                context: format!("grcar-{n}"),
                source,
            })?;
        let reported = fixtures::GRCAR_KREISS.iter().find(|p| p.0 == n).map(|p| p.1);
        rows.push(GrcarRow {
            n,
            estimate: r.value,
            reported,
            rel_err: reported.map(|v| (r.value - v).abs() / v),
            delta: r.delta_star,
            cpu_s: s,
        });
    }
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.n.to_string(),
                format!("{:.6e}", r.estimate),
                r.reported.map_or(String::new(), |v| format!("{v:e}")),
                r.rel_err.map_or(String::new(), |v| format!("{v:.2e}")),
                format!("{:.3}", r.cpu_s),
            ]
        })
        .collect();
    let header = ["n", "estimate", "reported", "rel_err", "cpu_s"];
    if let Some(p) = &args.out {
        write_file(p, &csv(&header, &cells))?;
    }
    emit(out, &if json { to_json(&rows) } else { table(&header, &cells) })
}

#[derive(Debug, Serialize)]
struct RoundRow {
    scenarios: usize,
    h_lower: f64,
    destabilizing_delta: f64,
    alpha_star: f64,
    degrading_delta: Option<f64>,
    h_upper: Option<f64>,
}

#[derive(Debug, Serialize)]
struct RestartRow {
    index: usize,
    seed: u64,
    certified: Option<f64>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct SynthesisReport {
    method: &'static str,
    order: usize,
    status: &'static str,
    restart: usize,
    certified: f64,
    scenarios: Vec<f64>,
    rounds: Vec<RoundRow>,
    restarts: Vec<RestartRow>,
    records: Vec<ReportRecord>,
    cpu_s: f64,
}

/// `(𝓜₀, 𝒦, Ω)` of a closed loop with plant states first.
pub fn loop_triple(acl: &RealMatrix, j: ProjectionJ, tol: f64) -> CliResult<[ReportRecord; 3]> {
    let t = Target {
        a: acl.clone(),
        j,
        open_plant: None,
    };
    Ok([
        analyze_quantity(Quantity::M0, &t, tol)?,
        analyze_quantity(Quantity::K, &t, tol)?,
        analyze_quantity(Quantity::Omega, &t, tol)?,
    ])
}

pub fn synthesize(args: &SynthArgs, json: bool, out: &mut dyn Write) -> CliResult<()> {
    let plant = match load(&args.source)? {
        SystemFile::Plant(p) => p,
        other => {
            return Err(CliError::Usage(format!("synthesize needs a plant, got a {}", other.kind().name())));
        }
    };
    let kind = ObjectiveKind::parse(args.method.name(), plant.nstates())?;
    let region = DiskRegion::new(args.decay, args.radius)?;
    let problem = SynthesisProblem::new(plant.clone(), args.order, kind)?
        .with_restarts(args.restarts, args.seed)?
        .with_region(region);
    let start = Instant::now();
    let result = scenario_loop(&problem)?;
    let cpu = start.elapsed().as_secs_f64();

    let acl = close_loop(&plant, &result.controller)?;
    let j = ProjectionJ::new(plant.nstates(), args.order);
    let mut records = vec![ReportRecord::new(format!("certified {}", result.kind), result.certified, DEFAULT_TOL, cpu)];
    records.extend(loop_triple(acl.a(), j, DEFAULT_TOL)?);
    records.push(ReportRecord::new("alpha", spectral_abscissa(acl.a())?, 0.0, 0.0));

    if let Some(p) = &args.out {
        write_file(p, &SystemFile::Controller(result.controller.clone()).serialize())?;
    }
    let report = SynthesisReport {
        method: result.kind,
        order: args.order,
        status: result.state.status.name(),
        restart: result.restart,
        certified: result.certified,
        scenarios: result.state.scenarios.clone(),
        rounds: result
            .state
            .history
            .iter()
            .map(|h| RoundRow {
                scenarios: h.scenarios,
                h_lower: h.h_lower,
                destabilizing_delta: h.destabilizing_delta,
                alpha_star: h.alpha_star,
                degrading_delta: h.degrading_delta,
                h_upper: h.h_upper,
            })
            .collect(),
        restarts: result
            .restarts
            .iter()
            .map(|r| RestartRow {
                index: r.index,
                seed: r.seed,
                certified: r.certified,
                error: r.error.clone(),
            })
            .collect(),
        records,
        cpu_s: cpu,
    };
    if json {
        return emit(out, &to_json(&report));
    }
    let mut text = format!(
        "method {}  order {}  status {}  best restart {}  cpu {:.1} s\n\n",
        report.method, report.order, report.status, report.restart, cpu
    );
    let rounds: Vec<Vec<String>> = report
        .rounds
        .iter()
        .map(|r| {
            vec![
                r.scenarios.to_string(),
                num(r.h_lower),
                num(r.destabilizing_delta),
                num(r.alpha_star),
                r.degrading_delta.map_or("-".into(), num),
                r.h_upper.map_or("-".into(), num),
            ]
        })
        .collect();
    text.push_str(&table(&["scenarios", "h_lower", "delta_destab", "alpha*", "delta_degrade", "h_upper"], &rounds));
    text.push('\n');
    let restarts: Vec<Vec<String>> = report
        .restarts
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.seed.to_string(),
                r.certified.map_or("-".into(), num),
                r.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    text.push_str(&table(&["restart", "seed", "certified", "error"], &restarts));
    text.push('\n');
    text.push_str(&records_table(&report.records));
    if args.out.is_none() {
        text.push('\n');
        text.push_str(&SystemFile::Controller(result.controller).serialize());
    }
    emit(out, &text)
}

#[derive(Debug, Serialize)]
pub struct Table2Row {
    pub design: &'static str,
    pub m0: f64,
    pub kreiss: f64,
    pub omega: f64,
    pub reported: (f64, f64, f64),
    pub max_rel_err: f64,
    pub cpu_s: f64,
}

pub fn table2_rows(tol: f64) -> CliResult<Vec<Table2Row>> {
    let plant = fixtures::example_plant();
    let mut rows = Vec::new();
    for d in Design::ALL {
        let start = Instant::now();
        let k: Controller = fixtures::printed_controller(d);
        let acl = close_loop(&plant, &k)?;
        let [m0, kr, om] = loop_triple(acl.a(), ProjectionJ::new(plant.nstates(), k.order()), tol)?;
        let reported = d.reported();
        let max_rel_err = [(m0.value, reported.0), (kr.value, reported.1), (om.value, reported.2)]
            .iter()
            .map(|(v, r)| (v - r).abs() / r)
            .fold(0.0, f64::max);
        rows.push(Table2Row {
            design: d.name(),
            m0: m0.value,
            kreiss: kr.value,
            omega: om.value,
            reported,
            max_rel_err,
            cpu_s: start.elapsed().as_secs_f64(),
        });
    }
    Ok(rows)
}

pub fn table2(args: &Table2Args, json: bool, out: &mut dyn Write) -> CliResult<()> {
    positive_tol(args.tol)?;
    let rows = table2_rows(args.tol)?;
    let header = ["design", "M0", "K", "Omega", "M0_reported", "K_reported", "Omega_reported", "max_rel_err", "cpu_s"];
    let cells: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.design.to_string(),
                num(r.m0),
                num(r.kreiss),
                num(r.omega),
                r.reported.0.to_string(),
                r.reported.1.to_string(),
                r.reported.2.to_string(),
                format!("{:.2e}", r.max_rel_err),
                format!("{:.3}", r.cpu_s),
            ]
        })
        .collect();
    if let Some(p) = &args.out {
        write_file(p, &csv(&header, &cells))?;
    }
    emit(out, &if json { to_json(&rows) } else { table(&header, &cells) })
}

#[derive(Debug, Serialize)]
pub struct SimRow {
    pub index: usize,
    pub x0: Vec<f64>,
    pub terminal: &'static str,
    pub final_norm: f64,
    pub max_norm: f64,
    pub steps: usize,
}

#[derive(Debug, Serialize)]
struct SimReport {
    mode: &'static str,
    runs: Vec<SimRow>,
    threshold: Option<serde_json::Value>,
}

fn parse_x0(s: &str) -> CliResult<Vec<f64>> {
    let v = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|_| CliError::Usage(format!("--x0 expects comma-separated numbers, got `{s}`")))?;
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Usage(format!("--x0 expects finite numbers, got `{s}`")));
    }
    Ok(v)
}

pub fn simulate(args: &SimArgs, json: bool, out: &mut dyn Write) -> CliResult<()> {
    let sys = NonlinearSystem::new(fixtures::NL_REYNOLDS)?;
    let controller = match args.mode {
        LoopMode::Open => None,
        LoopMode::Closed => Some(fixtures::nonlinear_controller()),
    };
    let mode = match args.mode {
        LoopMode::Open => "open",
        LoopMode::Closed => "closed",
    };
    let x0s: Vec<Vec<f64>> = if args.x0.is_empty() {
        fixtures::NL_INITIAL_X2.iter().map(|&x2| vec![0.0, x2]).collect()
    } else {
        args.x0.iter().map(|s| parse_x0(s)).collect::<CliResult<_>>()?
    };
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display().to_string(), e))?;
    }
    let mut runs = Vec::new();
    for (i, x0) in x0s.iter().enumerate() {
        let traj = nlsim::simulate(&sys, controller.as_ref(), x0, args.horizon, args.tol).map_err(|source| {
            CliError::Context {
                context: format!("x0 = {x0:?}"),
                source,
            }
        })?;
        if let Some(dir) = &args.out {
            write_file(&dir.join(format!("{mode}-{i}.csv")), &traj.to_csv())?;
        }
        runs.push(SimRow {
            index: i,
            x0: x0.clone(),
            terminal: traj.terminal.name(),
            final_norm: *traj.norms.last().expect("nonempty trajectory"),
            max_norm: traj.norms.iter().cloned().fold(0.0, f64::max),
            steps: traj.times.len() - 1,
        });
    }
    let threshold = if args.threshold {
        match nlsim::threshold_search(&sys, controller.as_ref(), &[0.0, 1.0], (1e-6, 1e-2)) {
            Ok(s) => Some(serde_json::Value::from(s)),
            Err(KreissError::NoThreshold(class)) => Some(serde_json::Value::from(format!("none ({class})"))),
            Err(e) => return Err(e.into()),
        }
    } else {
        None
    };
    let report = SimReport { mode, runs, threshold };
    if json {
        return emit(out, &to_json(&report));
    }
    let cells: Vec<Vec<String>> = report
        .runs
        .iter()
        .map(|r| {
            vec![
                r.index.to_string(),
                r.x0.iter().map(|v| format!("{v:e}")).collect::<Vec<_>>().join(","),
                r.terminal.to_string(),
                format!("{:.3e}", r.final_norm),
                format!("{:.3e}", r.max_norm),
                r.steps.to_string(),
            ]
        })
        .collect();
    let mut text = table(&["run", "x0", "terminal", "final_norm", "max_norm", "steps"], &cells);
    if let Some(t) = &report.threshold {
        match t.as_f64() {
            Some(v) => text.push_str(&format!("threshold along x2: {v:.6e}\n")),
            None => text.push_str(&format!("threshold along x2: {}\n", t.as_str().unwrap_or_default())),
        }
    }
    emit(out, &text)
}

pub fn fixtures_cmd(action: &FixturesCmd, out: &mut dyn Write) -> CliResult<()> {
    match action {
        FixturesCmd::List => {
            let mut text = String::new();
            for name in catalog::NAMES.iter().chain(&catalog::EXTRA_NAMES) {
                text.push_str(&catalog::describe(name)?);
                text.push('\n');
            }
            text.push_str("grcar-N                any N >= 2\n");
            emit(out, &text)
        }
        FixturesCmd::Dump { name, out: path } => {
            let text = catalog::lookup(name)?.serialize();
            match path {
                Some(p) => write_file(p, &text),
                None => emit(out, &text),
            }
        }
    }
}
