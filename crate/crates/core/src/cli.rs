//! Command-line front end. `run` returns the process exit status:
//! 0 on success, 1 on a domain error, 2 on a usage error.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{self, chosen_to_csv, write_atomic, write_json, RunReport};
use crate::problem::Algorithm;
use crate::regression::{fit_sr_regression, RegressionSample};
use crate::run::{resolve_algorithm, run_algorithm, AlgorithmSpec, ProblemConfig, RunOptions};
use crate::similarity::ClassId;
use crate::synth::{generate_synthetic_world, SyntheticWorldConfig};
use crate::verify::{
    certify_bounds, check_monotonicity, check_submodularity, MonotonicityReport, SubmodularityReport,
    DEFAULT_ENUMERATION_CAP, DEFAULT_EXPECTATION_TRIALS,
};

#[derive(Debug, Parser)]
#[command(name = "baseselect", version, about = "Select base classes for few-shot transfer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a clustered synthetic embedding set
    Simgen(SimgenArgs),
    /// Select m base classes and write a report
    Select(SelectArgs),
    /// Exhaustive optimum (small instances only)
    Oracle(OracleArgs),
    /// Sample submodularity and monotonicity checks
    Verify(VerifyArgs),
    /// Select, then check the applicable guarantee against the optimum
    Certify(CertifyArgs),
    /// Fit accuracy on the similarity-ratio components
    Regress(RegressArgs),
    /// Sweep budgets across algorithms
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV `id,v1,...,vd`
    #[arg(long, conflicts_with = "matrix", required_unless_present = "matrix")]
    embeddings: Option<PathBuf>,
    /// CSV with novel ids as header and base ids as first column
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// comma-separated ids or @file
    #[arg(long)]
    candidates: Option<String>,
    #[arg(long)]
    preselected: Option<String>,
    #[arg(long)]
    novel: Option<String>,
}

#[derive(Debug, Args)]
struct ParamArgs {
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
}

#[derive(Debug, Args)]
struct EngineArgs {
    #[arg(long, default_value = "auto", value_parser = parse_spec)]
    algorithm: AlgorithmSpec,
    #[arg(long, default_value_t = crate::greedy::DEFAULT_GAMMA)]
    gamma: f64,
    #[arg(long, default_value_t = crate::continuous::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// extra random restarts for k-medoids
    #[arg(long, default_value_t = 0)]
    restarts: usize,
}

#[derive(Debug, Args)]
struct SimgenArgs {
    #[arg(long, default_value_t = 5)]
    clusters: usize,
    #[arg(long, default_value_t = 20)]
    classes_per_cluster: usize,
    #[arg(long, default_value_t = 10)]
    novel_classes: usize,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long, default_value_t = 0.3)]
    intra_spread: f64,
    #[arg(long, default_value_t = 1.0)]
    inter_spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// output directory; the report goes to stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct OracleArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    enum_cap: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CertifyArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    params: ParamArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// seeds averaged for randomized engines
    #[arg(long, default_value_t = DEFAULT_EXPECTATION_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    enum_cap: u128,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegressArgs {
    /// CSV with header `acc,x1,x2`
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    m: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    lambda: Vec<f64>,
    #[arg(long, value_delimiter = ',', value_parser = parse_algorithm,
          default_value = "greedy-target,random-greedy,random,domsim")]
    algorithms: Vec<Algorithm>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = crate::continuous::DEFAULT_STEPS)]
    steps: usize,
    #[arg(long)]
    out: PathBuf,
}

fn parse_spec(s: &str) -> std::result::Result<AlgorithmSpec, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_algorithm(s: &str) -> std::result::Result<Algorithm, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

/// `a,b,c` or `@path` (one id per line).
fn id_arg(value: &Option<String>) -> Result<Option<Vec<ClassId>>> {
    match value.as_deref() {
        None => Ok(None),
        Some(v) => match v.strip_prefix('@') {
            Some(path) => io::read_id_list(path).map(Some),
            None => {
                v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(ClassId::new).collect::<Result<_>>().map(Some)
            }
        },
    }
}

fn config(data: &DataArgs, m: usize, k: usize, lambda: f64) -> Result<ProblemConfig> {
    Ok(ProblemConfig {
        embeddings: data.embeddings.clone(),
        matrix: data.matrix.clone(),
        candidates: id_arg(&data.candidates)?,
        preselected: id_arg(&data.preselected)?.unwrap_or_default(),
        novel: id_arg(&data.novel)?,
        m,
        k,
        lambda,
    })
}

impl EngineArgs {
    fn options(&self, enum_cap: u128) -> RunOptions {
        RunOptions { seed: self.seed, steps: self.steps, gamma: self.gamma, restarts: self.restarts, enum_cap }
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 { stdout.write_all(text.as_bytes()) } else { stderr.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            1
        }
    }
}

fn emit(stdout: &mut dyn Write, line: impl AsRef<str>) -> Result<()> {
    writeln!(stdout, "{}", line.as_ref()).map_err(|e| Error::io("<stdout>", e))
}

fn emit_json<T: Serialize>(stdout: &mut dyn Write, out: Option<&Path>, name: &str, value: &T) -> Result<()> {
    match out {
        Some(dir) => {
            let path = dir.join(name);
            write_json(&path, value)?;
            emit(stdout, format!("wrote {}", path.display()))
        }
        None => emit(stdout, serde_json::to_string_pretty(value)?),
    }
}

fn write_report(stdout: &mut dyn Write, out: Option<&Path>, report: &RunReport) -> Result<()> {
    if let Some(dir) = out {
        let path = dir.join("chosen.csv");
        write_atomic(&path, chosen_to_csv(&report.result).as_bytes())?;
        emit(stdout, format!("wrote {}", path.display()))?;
    }
    emit_json(stdout, out, "report.json", report)
}

fn dispatch(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::Simgen(a) => simgen(a, stdout),
        Command::Select(a) => {
            let loaded = config(&a.data, a.params.m, a.params.k, a.params.lambda)?.load()?;
            let (alg, rationale) = resolve_algorithm(&loaded.problem, a.engine.algorithm, a.engine.gamma)?;
            let opts = a.engine.options(DEFAULT_ENUMERATION_CAP);
            let result = run_algorithm(&loaded.problem, alg, &opts, loaded.embeddings.as_ref())?;
            let mut report = RunReport::new(&loaded.problem, result)?;
            report.rationale = rationale;
            report.timings.load_secs = loaded.load_secs;
            write_report(stdout, a.out.as_deref(), &report)
        }
        Command::Oracle(a) => {
            let loaded = config(&a.data, a.params.m, a.params.k, a.params.lambda)?.load()?;
            let opts = RunOptions { enum_cap: a.enum_cap, ..RunOptions::default() };
            let result = run_algorithm(&loaded.problem, Algorithm::BruteForce, &opts, None)?;
            let mut report = RunReport::new(&loaded.problem, result)?;
            report.timings.load_secs = loaded.load_secs;
            write_report(stdout, a.out.as_deref(), &report)
        }
        Command::Verify(a) => {
            #[derive(Serialize)]
            struct VerifyOutput {
                negative_similarities: bool,
                submodularity: SubmodularityReport,
                monotonicity: MonotonicityReport,
            }
            let loaded = config(&a.data, a.params.m, a.params.k, a.params.lambda)?.load()?;
            let p = &loaded.problem;
            let output = VerifyOutput {
                negative_similarities: p.has_negative_similarities(),
                submodularity: check_submodularity(p, a.trials, a.seed),
                monotonicity: check_monotonicity(p, a.trials, a.seed),
            };
            emit(
                stdout,
                format!(
                    "submodularity violations: {}, monotonicity violations: {}",
                    output.submodularity.violations(),
                    output.monotonicity.violations
                ),
            )?;
            emit_json(stdout, a.out.as_deref(), "verify.json", &output)
        }
        Command::Certify(a) => {
            let loaded = config(&a.data, a.params.m, a.params.k, a.params.lambda)?.load()?;
            let p = &loaded.problem;
            let (alg, rationale) = resolve_algorithm(p, a.engine.algorithm, a.engine.gamma)?;
            let result = run_algorithm(p, alg, &a.engine.options(a.enum_cap), loaded.embeddings.as_ref())?;
            let started = Instant::now();
            let certificate = certify_bounds(p, &result, a.trials, a.enum_cap)?;
            let mut report = RunReport::new(p, result)?;
            report.rationale = rationale;
            report.timings.load_secs = loaded.load_secs;
            report.timings.certify_secs = Some(started.elapsed().as_secs_f64());
            emit(stdout, format!("{}: bound satisfied = {}", alg, certificate.satisfied))?;
            report.certificate = Some(certificate);
            write_report(stdout, a.out.as_deref(), &report)
        }
        Command::Regress(a) => {
            let source = a.input.display().to_string();
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_path(&a.input)
                .map_err(|e| Error::Parse { path: source.clone(), message: e.to_string() })?;
            let samples = reader
                .deserialize::<RegressionSample>()
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { path: source, message: e.to_string() })?;
            let fit = fit_sr_regression(&samples)?;
            emit_json(stdout, a.out.as_deref(), "regression.json", &fit)
        }
        Command::Bench(a) => bench(a, stdout),
    }
}

fn simgen(a: SimgenArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = SyntheticWorldConfig {
        clusters: a.clusters,
        classes_per_cluster: a.classes_per_cluster,
        novel_classes: a.novel_classes,
        dim: a.dim,
        intra_spread: a.intra_spread,
        inter_spread: a.inter_spread,
        seed: a.seed,
    };
    let world = generate_synthetic_world(&cfg)?;
    io::write_embeddings_csv(a.out.join("embeddings.csv"), &world.combined())?;
    io::write_id_list(a.out.join("candidates.txt"), &world.base.ids().cloned().collect::<Vec<_>>())?;
    io::write_id_list(a.out.join("novel.txt"), &world.novel.ids().cloned().collect::<Vec<_>>())?;
    let mut clusters = String::from("id,role,cluster\n");
    for (id, c) in &world.base_cluster {
        clusters.push_str(&format!("{id},base,{c}\n"));
    }
    for (id, c) in &world.novel_cluster {
        clusters.push_str(&format!("{id},novel,{c}\n"));
    }
    write_atomic(&a.out.join("clusters.csv"), clusters.as_bytes())?;
    emit(
        stdout,
        format!("wrote {} base and {} novel classes to {}", world.base.len(), world.novel.len(), a.out.display()),
    )
}

fn bench(a: BenchArgs, stdout: &mut dyn Write) -> Result<()> {
    let first = config(&a.data, a.m[0], a.k[0], a.lambda[0])?.load()?;
    let embeddings = first.embeddings.as_ref();
    let opts = RunOptions { seed: a.seed, steps: a.steps, ..RunOptions::default() };
    let mut table = String::from("m,k,lambda,algorithm,objective,elapsed_secs\n");
    for &k in &a.k {
        for &lambda in &a.lambda {
            for &m in &a.m {
                let p = first.problem.with_top_k(k)?.with_lambda(lambda)?.with_budget(m)?;
                for &alg in &a.algorithms {
                    let res = match run_algorithm(&p, alg, &opts, embeddings) {
                        Ok(res) => res,
                        // inapplicable engines are skipped rather than aborting the sweep
                        Err(e @ Error::WrongEngine { .. }) => {
                            log::warn!("skipping {alg} at m={m}, k={k}, lambda={lambda}: {e}");
                            continue;
                        }
                        Err(e) => return Err(e),
                    };
                    table.push_str(&format!(
                        "{m},{k},{},{alg},{},{}\n",
                        io::fmt_real(lambda),
                        io::fmt_real(res.objective),
                        io::fmt_real(res.elapsed_secs)
                    ));
                }
            }
        }
    }
    let path = a.out.join("bench.csv");
    write_atomic(&path, table.as_bytes())?;
    emit(stdout, format!("wrote {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_with(args.iter().copied(), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_2() {
        let (code, _, err) = run_capture(&["baseselect", "frobnicate"]);
        assert_eq!(code, 2);
        assert!(err.contains("Usage"), "{err}");
        assert_eq!(run_capture(&["baseselect", "select", "--matrix", "x.csv", "--m", "1", "--bogus"]).0, 2);
        assert_eq!(run_capture(&["baseselect", "select", "--m", "1"]).0, 2);
    }

    #[test]
    fn help_exits_0() {
        let (code, out, _) = run_capture(&["baseselect", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("simgen"));
    }

    #[test]
    fn domain_errors_exit_1() {
        let (code, _, err) = run_capture(&["baseselect", "select", "--matrix", "/nonexistent/m.csv", "--m", "1"]);
        assert_eq!(code, 1);
        assert!(err.starts_with("error:"), "{err}");
    }

    #[test]
    fn id_arg_forms() {
        assert_eq!(id_arg(&Some("a, b,".into())).unwrap().unwrap(), vec![ClassId::from("a"), ClassId::from("b")]);
        assert!(id_arg(&None).unwrap().is_none());
        assert!(id_arg(&Some("@/nonexistent/ids.txt".into())).is_err());
    }
}
