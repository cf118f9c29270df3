use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use rayon::prelude::*;
use serde::Serialize;
use spectral_scope::dynamics::sidecar_path;
use spectral_scope::graph::matrix_from_csv;
use spectral_scope::oracle::ComplexJson;
use spectral_scope::scenario::{Outcome, Scenario, ScenarioName, ScenarioParams};
use spectral_scope::{
    assign_uniform_weights, build_matrix, estimate_dt_spectrum_online, estimate_spectrum, observable_partition,
    preferential_attachment, ring, simulate_ct_networked, simulate_ct_sampled, simulate_dt, simulate_dt_networked,
    verify_estimate, Complex64, EstimatorOptions, GraphMatrix, GraphMatrixKind, MatchReport, NodeDynamics,
    Observation, ObservationSetup, OutputSequence, Prescale, Sidecar, SpectrumJson, TimeMode,
};

use crate::config::ExperimentConfig;
use crate::{BenchArgs, DemoArgs, EstimateArgs, GenerateArgs, SimulateArgs, VerifyArgs};

/// A command failure, split by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad or missing arguments (exit 2).
    Usage(String),
    /// Estimation, verification or I/O failure (exit 1).
    Failure(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "{msg}"),
            CliError::Failure(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Failure(e)
    }
}

impl From<spectral_scope::Error> for CliError {
    fn from(e: spectral_scope::Error) -> Self {
        CliError::Failure(e.into())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(e.into())
    }
}

type CmdResult = Result<ExitCode, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| usage(format!("missing required --{flag}")))
}

fn existing(path: Option<PathBuf>, flag: &str) -> Result<PathBuf, CliError> {
    let path = required(path, flag)?;
    if !path.is_file() {
        return Err(usage(format!("--{flag}: {} does not exist", path.display())));
    }
    Ok(path)
}

fn parse_flag<T: FromStr>(text: &str, flag: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    text.parse().map_err(|e| usage(format!("--{flag} {text:?}: {e}")))
}

fn parse_list(text: &str, flag: &str) -> Result<Vec<f64>, CliError> {
    text.split(',').map(|v| parse_flag(v.trim(), flag)).collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("plain data serializes") + "\n"
}

fn load_matrix(path: &Path) -> Result<GraphMatrix, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let m = matrix_from_csv(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    GraphMatrix::from_matrix(m).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_node(path: &Path) -> Result<NodeDynamics, CliError> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let node: NodeDynamics = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    NodeDynamics::new(node.a, node.beta, node.gamma).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Builds the graph named by the flags. Weights use `seed + 1` so that the
/// topology and the weights come from independent streams.
pub fn generate(a: &GenerateArgs, cfg: &ExperimentConfig) -> CmdResult {
    let seed = cfg.seed(a.seed)?.unwrap_or(0);
    let model = a.model.clone().or(cfg.model.clone()).unwrap_or_else(|| "pa".into());
    let n = required(a.n.or(cfg.n), "n")?;
    let kind = a.kind.clone().or(cfg.kind.clone()).unwrap_or_else(|| "adjacency".into());
    let kind: GraphMatrixKind = parse_flag(&kind, "kind")?;
    let weights = match &a.weights {
        Some(text) => match parse_list(text, "weights")?.as_slice() {
            &[lo, hi] => Some([lo, hi]),
            _ => return Err(usage("--weights expects LO,HI")),
        },
        None => cfg.weights,
    };
    let graph = match model.as_str() {
        "pa" => {
            let m = a.m.or(cfg.m).unwrap_or(2);
            preferential_attachment(n, m, seed).map_err(|e| usage(e.to_string()))?
        }
        "ring" => ring(n, a.directed || cfg.directed.unwrap_or(false)).map_err(|e| usage(e.to_string()))?,
        other => return Err(usage(format!("--model must be pa|ring, got {other}"))),
    };
    let graph = match weights {
        Some([lo, hi]) => assign_uniform_weights(&graph, lo, hi, seed.wrapping_add(1)).map_err(|e| usage(e.to_string()))?,
        None => graph,
    };
    let matrix = build_matrix(&graph, kind)?;
    let graph_out = a.graph_out.clone().or(cfg.graph_out.clone()).unwrap_or_else(|| "graph.tsv".into());
    let matrix_out = a.matrix_out.clone().or(cfg.matrix_out.clone()).unwrap_or_else(|| "matrix.csv".into());
    write_file(&graph_out, &graph.to_tsv())?;
    write_file(&matrix_out, &matrix.to_csv())?;
    println!(
        "n={} edges={} kind={} graph={} matrix={}",
        graph.n(),
        graph.edges().len(),
        kind_name(kind),
        graph_out.display(),
        matrix_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn kind_name(kind: GraphMatrixKind) -> &'static str {
    match kind {
        GraphMatrixKind::Adjacency => "adjacency",
        GraphMatrixKind::Degree => "degree",
        GraphMatrixKind::Laplacian => "laplacian",
        GraphMatrixKind::NormalizedLaplacian => "normalized-laplacian",
    }
}

#[derive(Debug)]
enum Readout {
    Pattern(Observation),
    Vector(Vec<f64>),
}

fn parse_observe(text: &str) -> Result<Readout, CliError> {
    let (head, rest) = text.split_once(':').unwrap_or((text, ""));
    match head {
        "random" => Ok(Readout::Pattern(Observation::Random)),
        "node" => Ok(Readout::Pattern(Observation::Node(parse_flag(rest, "observe")?))),
        "subset" => {
            let items = rest
                .split(',')
                .map(|item| {
                    let (i, w) = item.split_once('=').unwrap_or((item, "1"));
                    Ok((parse_flag(i.trim(), "observe")?, parse_flag(w.trim(), "observe")?))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            Ok(Readout::Pattern(Observation::Subset(items)))
        }
        "vector" => Ok(Readout::Vector(parse_list(rest, "observe")?)),
        _ => Err(usage(format!(
            "--observe must be node:I, subset:I=W,.., random or vector:C,.., got {text}"
        ))),
    }
}

/// Runs the chosen dynamics on a matrix file and writes CSV plus sidecar.
pub fn simulate(a: &SimulateArgs, cfg: &ExperimentConfig) -> CmdResult {
    let seed = cfg.seed(a.seed)?.unwrap_or(0);
    let g = load_matrix(&existing(a.matrix.clone().or(cfg.matrix.clone()), "matrix")?)?;
    let n = g.n();
    let mode = a.mode.clone().or(cfg.mode.clone()).unwrap_or_else(|| "dt".into());
    let k_len = a.k.or(cfg.k).unwrap_or(2 * n);
    let observe = a.observe.clone().or(cfg.observe.clone()).unwrap_or_else(|| "node:0".into());
    let readout = parse_observe(&observe)?;
    let pattern = match &readout {
        Readout::Pattern(p) => p.clone(),
        Readout::Vector(_) => Observation::Random,
    };
    let mut setup = ObservationSetup::random(n, &pattern, seed).map_err(|e| usage(e.to_string()))?;
    if let Readout::Vector(c) = readout {
        setup.c = c;
    }
    match a.x0.clone().or(cfg.x0.clone()).as_deref() {
        None | Some("random") => {}
        Some(list) => setup.x0 = parse_list(list, "x0")?,
    }
    if setup.c.len() != n || setup.x0.len() != n {
        return Err(usage(format!(
            "matrix is {n}x{n} but c has {} and x0 has {} entries",
            setup.c.len(),
            setup.x0.len()
        )));
    }

    let networked = mode.ends_with("-networked");
    let node = if networked {
        Some(match a.node_file.clone().or(cfg.node_file.clone()) {
            Some(path) => load_node(&existing(Some(path), "node-file")?)?,
            None => {
                let d = required(a.node_d.or(cfg.node_d), "node-d (or --node-file)")?;
                let node_seed = a.node_seed.or(cfg.node_seed).unwrap_or(seed.wrapping_add(1));
                NodeDynamics::random_symmetric(d, node_seed).map_err(|e| usage(e.to_string()))?
            }
        })
    } else {
        None
    };
    let tau = a.tau.or(cfg.tau);
    let need_tau = || {
        required(tau, "tau").and_then(|t| {
            if t > 0.0 && t.is_finite() {
                Ok(t)
            } else {
                Err(usage(format!("--tau must be > 0, got {t}")))
            }
        })
    };
    let y = match (mode.as_str(), &node) {
        ("dt", _) => simulate_dt(&g, &setup, k_len)?,
        ("ct", _) => simulate_ct_sampled(&g, &setup, need_tau()?, k_len)?,
        ("dt-networked", Some(node)) => simulate_dt_networked(&g, node, &setup, k_len)?,
        ("ct-networked", Some(node)) => simulate_ct_networked(&g, node, &setup, need_tau()?, k_len)?,
        _ => return Err(usage(format!("--mode must be dt|ct|dt-networked|ct-networked, got {mode}"))),
    };
    let mut sidecar = y.sidecar();
    sidecar.c = Some(setup.c.clone());
    sidecar.x0 = Some(setup.x0.clone());
    sidecar.node = node;
    match a.out.clone().or(cfg.out.clone()) {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            y.save(&path, &sidecar)?;
            eprintln!("wrote {} samples to {}", y.len(), path.display());
        }
        None => print!("{}", y.to_csv()),
    }
    Ok(ExitCode::SUCCESS)
}

/// Reads a sequence CSV. Without a sidecar a `t,y` file is taken as
/// continuous-time with `τ` read off the time column.
fn load_sequence(path: &Path) -> Result<(OutputSequence, Option<Sidecar>), CliError> {
    let (y, sidecar) = OutputSequence::load(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if sidecar.is_some() {
        return Ok((y, sidecar));
    }
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    if lines.next().map(str::trim) != Some("t,y") {
        return Ok((y, None));
    }
    let times: Vec<f64> = lines
        .take(2)
        .map(|l| l.split(',').next().unwrap_or("").trim().parse().unwrap_or(f64::NAN))
        .collect();
    match times.as_slice() {
        &[t0, t1] if t1 - t0 > 0.0 => Ok((OutputSequence::continuous(y.values, t1 - t0), None)),
        _ => Err(usage(format!(
            "{}: a t,y file needs two samples or a sidecar to give the sampling period",
            path.display()
        ))),
    }
}

fn estimator_options(
    rank_tolerance: Option<f64>,
    cluster_tol: Option<f64>,
    prescale: Option<&str>,
    base: EstimatorOptions,
) -> Result<EstimatorOptions, CliError> {
    let mut opts = base;
    if rank_tolerance.is_some() {
        opts.rank_tolerance = rank_tolerance;
    }
    if let Some(tol) = cluster_tol {
        opts.cluster_tol = tol;
    }
    if let Some(p) = prescale {
        opts.prescale = parse_flag::<Prescale>(p, "prescale")?;
    }
    Ok(opts)
}

/// Estimates the spectrum of one sequence file.
pub fn estimate(a: &EstimateArgs, cfg: &ExperimentConfig) -> CmdResult {
    let input = existing(a.input.clone(), "input (positional)")?;
    let (y, sidecar) = load_sequence(&input)?;
    let opts = estimator_options(
        a.rank_tolerance.or(cfg.rank_tolerance),
        a.cluster_tol.or(cfg.cluster_tol),
        a.prescale.as_deref().or(cfg.prescale.as_deref()),
        EstimatorOptions::default(),
    )?;
    let node = match a.node_file.clone().or(cfg.node_file.clone()) {
        Some(path) => Some(load_node(&existing(Some(path), "node-file")?)?),
        None => sidecar.and_then(|s| s.node),
    };
    let online = a.online || cfg.online.unwrap_or(false);
    let estimate = if online {
        if y.time_mode != TimeMode::DiscreteTime || node.is_some() {
            return Err(usage("--online applies to plain discrete-time sequences only"));
        }
        estimate_dt_spectrum_online(y.values.iter().copied(), y.n_hint, &opts)?.0
    } else {
        estimate_spectrum(&y, node.as_ref(), &opts)?
    };
    let json = estimate.to_json() + "\n";
    match a.out.clone().or(cfg.out.clone()) {
        Some(path) => write_file(&path, &json)?,
        None => print!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

/// `verify` output: the match report plus the verdict and the oracle's
/// view of which eigenvalues the output can reveal.
#[derive(Debug, Serialize)]
struct VerifyJson {
    #[serde(flatten)]
    report: MatchReport,
    tol: f64,
    passed: bool,
    missing: Vec<ComplexJson>,
    unobservable: Vec<ComplexJson>,
}

fn complex_list(values: &[Complex64]) -> Vec<ComplexJson> {
    values.iter().map(|&v| v.into()).collect()
}

/// Compares an estimate JSON against the eigenvalues of a matrix file.
pub fn verify(a: &VerifyArgs, cfg: &ExperimentConfig) -> CmdResult {
    let g = load_matrix(&existing(a.matrix.clone().or(cfg.matrix.clone()), "matrix")?)?;
    let est_path = existing(a.estimate.clone(), "estimate")?;
    let est_text = std::fs::read_to_string(&est_path)?;
    let est: SpectrumJson =
        serde_json::from_str(&est_text).map_err(|e| usage(format!("{}: {e}", est_path.display())))?;
    let tol = a.tol.or(cfg.tol).unwrap_or(1e-6);
    let (c, x0) = match &a.setup {
        Some(path) => {
            let path = existing(Some(path.clone()), "setup")?;
            let side = if path.extension().is_some_and(|e| e == "json") { path } else { sidecar_path(&path) };
            let text = std::fs::read_to_string(&side).with_context(|| format!("reading {}", side.display()))?;
            let sidecar: Sidecar =
                serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", side.display())))?;
            match (sidecar.c, sidecar.x0) {
                (Some(c), Some(x0)) => (c, x0),
                _ => return Err(usage(format!("{} lacks c and x0", side.display()))),
            }
        }
        // Without a setup every eigenvalue counts as observable.
        None => (vec![1.0; g.n()], vec![1.0; g.n()]),
    };
    let oracle = if a.setup.is_some() {
        observable_partition(&g, &c, &x0)?
    } else {
        let mut o = observable_partition(&g, &c, &x0)?;
        for d in &mut o.distinct {
            d.observable = true;
            d.observed_multiplicity = Some(d.algebraic_multiplicity);
        }
        o
    };
    let estimated: Vec<Complex64> = est
        .roots()
        .iter()
        .flat_map(|r| std::iter::repeat_n(r.value, r.multiplicity))
        .collect();
    let v = verify_estimate(&oracle, &estimated, tol);
    let json = to_json(&VerifyJson {
        report: v.report,
        tol,
        passed: v.passed,
        missing: complex_list(&v.missing),
        unobservable: complex_list(&oracle.unobservable()),
    });
    match &a.out {
        Some(path) => write_file(path, &json)?,
        None => print!("{json}"),
    }
    Ok(if v.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn scenario_name(text: &str) -> Result<ScenarioName, CliError> {
    parse_flag(text, "scenario")
}

/// One seeded scenario end to end, with every artifact written to `out_dir`.
pub fn demo(a: &DemoArgs, cfg: &ExperimentConfig) -> CmdResult {
    let name = scenario_name(&a.name)?;
    let seed = cfg.seed(a.seed)?.unwrap_or(42);
    let params = ScenarioParams {
        negate: a.negate || cfg.negate.unwrap_or(false),
        ..ScenarioParams::default()
    };
    if params.negate && name != ScenarioName::Fig2 {
        return Err(usage("--negate applies to fig2 only"));
    }
    let mut scenario = Scenario::build(name, seed, &params)?;
    scenario.options = estimator_options(
        a.rank_tolerance.or(cfg.rank_tolerance),
        cfg.cluster_tol,
        a.prescale.as_deref().or(cfg.prescale.as_deref()),
        scenario.options,
    )?;
    if let Some(tol) = a.tol.or(cfg.tol) {
        scenario.tolerance = tol;
    }
    let out_dir = a
        .out_dir
        .clone()
        .or(cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(format!("demo-{name}")));
    std::fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    write_file(&out_dir.join("graph.tsv"), &scenario.graph.to_tsv())?;
    write_file(&out_dir.join("matrix.csv"), &scenario.g.to_csv())?;

    let outcome = scenario.run();
    let tol = scenario.tolerance;
    let truth_rows = scenario.truth.iter().map(|v| (v, "true"));
    let mut eig_csv = String::from("re,im,source\n");
    for (v, source) in truth_rows {
        let _ = writeln!(eig_csv, "{},{},{source}", v.re, v.im);
    }
    let line = match &outcome {
        Outcome::Estimated { y, estimate, report } => {
            let mut sidecar = y.sidecar();
            sidecar.c = Some(scenario.setup.c.clone());
            sidecar.x0 = Some(scenario.setup.x0.clone());
            sidecar.node = scenario.node.clone();
            y.save(out_dir.join("y.csv"), &sidecar)?;
            write_file(&out_dir.join("spectrum.json"), &(estimate.to_json() + "\n"))?;
            write_file(&out_dir.join("match.json"), &to_json(report))?;
            for v in estimate.expanded() {
                let _ = writeln!(eig_csv, "{},{},estimated", v.re, v.im);
            }
            format!(
                "max_error={:.3e} matched={}/{} tol={tol:.1e}",
                report.max_error,
                report.pairs.iter().filter(|p| p.error <= tol).count(),
                scenario.truth.len()
            )
        }
        Outcome::Overflow { index } => format!("overflow at sample {index}"),
        Outcome::Failed { error } => format!("estimator error: {error}"),
    };
    write_file(&out_dir.join("eigenvalues.csv"), &eig_csv)?;
    let passed = outcome.passed(tol);
    println!("{name} seed={seed}: {} {line}", if passed { "PASS" } else { "FAIL" });
    Ok(if passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Debug, Serialize)]
struct BenchRow {
    scenario: String,
    seeds: u64,
    passed: u64,
    success_rate: f64,
    overflow: u64,
    errors: u64,
    median_max_error: Option<f64>,
    failed_seeds: Vec<u64>,
}

fn bench_row(name: ScenarioName, seeds: &[u64]) -> Result<BenchRow, CliError> {
    let results = seeds
        .par_iter()
        .map(|&seed| {
            let s = Scenario::build(name, seed, &ScenarioParams::default())?;
            let outcome = s.run();
            Ok((seed, outcome.passed(s.tolerance), outcome))
        })
        .collect::<Result<Vec<_>, spectral_scope::Error>>()?;
    let mut errors_seen: Vec<f64> = results.iter().filter_map(|(_, _, o)| o.max_error()).collect();
    errors_seen.sort_by(f64::total_cmp);
    let passed = results.iter().filter(|r| r.1).count() as u64;
    Ok(BenchRow {
        scenario: name.to_string(),
        seeds: seeds.len() as u64,
        passed,
        success_rate: if seeds.is_empty() { 0.0 } else { passed as f64 / seeds.len() as f64 },
        overflow: results.iter().filter(|r| matches!(r.2, Outcome::Overflow { .. })).count() as u64,
        errors: results.iter().filter(|r| matches!(r.2, Outcome::Failed { .. })).count() as u64,
        median_max_error: errors_seen.get(errors_seen.len() / 2).copied(),
        failed_seeds: results.iter().filter(|r| !r.1).map(|r| r.0).collect(),
    })
}

#[derive(Debug, Serialize)]
struct BenchJson {
    schema: u32,
    start: u64,
    rows: Vec<BenchRow>,
}

/// Success rates of the demo scenarios over a range of seeds.
pub fn bench(a: &BenchArgs, cfg: &ExperimentConfig) -> CmdResult {
    let names: Vec<ScenarioName> = match a.scenario.as_str() {
        "all" => ScenarioName::ALL.to_vec(),
        other => vec![scenario_name(other)?],
    };
    let count = a.seeds.or(cfg.seeds).unwrap_or(100);
    let start = cfg.seed(a.start.or(cfg.start))?.unwrap_or(0);
    let seeds: Vec<u64> = (start..start + count).collect();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = a.jobs.or(cfg.jobs) {
        if jobs == 0 {
            return Err(usage("--jobs must be >= 1"));
        }
        pool = pool.num_threads(jobs);
    }
    let pool = pool.build().context("starting worker pool")?;
    let clock = std::time::Instant::now();
    let rows = pool.install(|| names.iter().map(|&n| bench_row(n, &seeds)).collect::<Result<Vec<_>, _>>())?;
    eprintln!("bench: {} runs in {:.2}s", rows.len() as u64 * count, clock.elapsed().as_secs_f64());
    if a.json {
        print!("{}", to_json(&BenchJson { schema: 1, start, rows }));
    } else {
        println!(
            "{:<8} {:>6} {:>7} {:>8} {:>9} {:>7} {:>12}",
            "scenario", "seeds", "passed", "rate", "overflow", "errors", "median_err"
        );
        for r in &rows {
            println!(
                "{:<8} {:>6} {:>7} {:>7.1}% {:>9} {:>7} {:>12}",
                r.scenario,
                r.seeds,
                r.passed,
                100.0 * r.success_rate,
                r.overflow,
                r.errors,
                r.median_max_error.map_or("-".into(), |e| format!("{e:.2e}"))
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}
