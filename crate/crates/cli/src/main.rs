//! `annealkit`: generate instances, embed and calibrate them, run sampling
//! experiments and summarize the results.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use annealkit::chimera::{choi_clique_embedding, ChimeraGraph};
use annealkit::embedding::{embed, estimate_kappa0, find_embedding, EmbedParams, Embedding, Kappa0Search};
use annealkit::exact::DEFAULT_LIMIT;
use annealkit::experiment::{
    generate, load_instance, run_experiment, summarize, verify, write_summary, ExperimentConfig,
    GenerateRequest,
};
use annealkit::generators::InstanceClass;
use annealkit::ice::IceModel;
use annealkit::metrics::read_csv;
use annealkit::sampler::{chain_shim, AnnealerConfig, ShimParams};
use annealkit::{Error, Hamiltonian};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "annealkit", version, about = "Annealer pipeline experiments on Chimera-structured Ising problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances plus JSON sidecars.
    Generate(GenerateArgs),
    /// Find a minor-embedding of a problem's interaction graph.
    Embed(EmbedArgs),
    /// Estimate the smallest chain strength that keeps the best sample unbroken.
    CalibrateKappa(CalibrateArgs),
    /// Compute compensating per-qubit fields for an embedded problem.
    Shim(ShimArgs),
    /// Run an experiment config and write the metrics CSV.
    Run(RunArgs),
    /// Exact ground energy and planted-state check for one instance.
    Verify(VerifyArgs),
    /// Percentile summary of a metrics CSV.
    Report(ReportArgs),
}

/// Hardware target: a full `C_k` or a working-graph file.
#[derive(Args)]
struct TargetArgs {
    /// Chimera size of the full target graph.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Working-graph file; overrides --k.
    #[arg(long)]
    working_graph: Option<PathBuf>,
}

impl TargetArgs {
    fn load(&self) -> Result<ChimeraGraph, Error> {
        match &self.working_graph {
            Some(p) => ChimeraGraph::load_working_graph(&read(p)?),
            None => ChimeraGraph::build(self.k),
        }
    }
}

#[derive(Args)]
struct AnnealerArgs {
    /// Programming time per gauge, seconds.
    #[arg(long, default_value_t = 30e-3)]
    t_p: f64,
    /// Anneal time per read, seconds.
    #[arg(long, default_value_t = 20e-6)]
    t_f: f64,
    /// Readout time per read, seconds.
    #[arg(long, default_value_t = 116e-6)]
    t_s: f64,
    /// Simulated-annealing sweeps at the 20us anneal floor.
    #[arg(long, default_value_t = 10.0)]
    sweeps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl AnnealerArgs {
    fn config(&self) -> AnnealerConfig {
        AnnealerConfig {
            t_p: self.t_p,
            t_f: self.t_f,
            t_s: self.t_s,
            sweeps_per_min_anneal: self.sweeps,
            seed: self.seed,
            ..AnnealerConfig::default()
        }
    }
}

#[derive(Args)]
struct IceArgs {
    /// Standard deviation of field errors.
    #[arg(long, default_value_t = 0.050)]
    sigma_h: f64,
    /// Standard deviation of coupler errors.
    #[arg(long, default_value_t = 0.035)]
    sigma_j: f64,
    #[arg(long, default_value_t = 0)]
    ice_seed: u64,
}

impl IceArgs {
    fn model(&self) -> Result<IceModel, Error> {
        IceModel::new(self.sigma_h, self.sigma_j, self.ice_seed)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// ran, fl, 3mc or nae.
    class: InstanceClass,
    /// Precision limit R; 1 for RAN and 2 for FL when omitted.
    #[arg(long = "R", visible_alias = "precision")]
    precision: Option<u32>,
    /// Loop ratio for FL (0.2) or clause ratio for NAE (2.1).
    #[arg(long)]
    ratio: Option<f64>,
    #[command(flatten)]
    target: TargetArgs,
    /// Logical size for 3MC and NAE.
    #[arg(long, default_value_t = 20)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only NAE instances with a unique ground state up to global flip.
    #[arg(long)]
    unique: bool,
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Choi,
    Heuristic,
}

#[derive(Args)]
struct EmbedArgs {
    problem: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, value_enum, default_value_t = Method::Heuristic)]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Embedding file to write; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    problem: PathBuf,
    /// Embedding file from `annealkit embed`.
    #[arg(long)]
    embedding: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    #[arg(long, default_value_t = 1000)]
    reads: usize,
    #[arg(long, default_value_t = 1)]
    gauges: usize,
    #[command(flatten)]
    annealer: AnnealerArgs,
    #[command(flatten)]
    ice: IceArgs,
}

#[derive(Args)]
struct ShimArgs {
    problem: PathBuf,
    #[arg(long)]
    embedding: PathBuf,
    #[command(flatten)]
    target: TargetArgs,
    /// Chain strength, in units of the logical weights.
    #[arg(long, default_value_t = 2.0)]
    kappa: f64,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    #[arg(long, default_value_t = 0.1)]
    step: f64,
    #[arg(long, default_value_t = 1000)]
    reads: usize,
    #[command(flatten)]
    annealer: AnnealerArgs,
    #[command(flatten)]
    ice: IceArgs,
    /// Bias file to write (`qubit bias` per line); stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Metrics CSV to write.
    #[arg(long, short, default_value = "results.csv")]
    out: PathBuf,
    /// Directory for raw readouts when the config asks for archives;
    /// defaults to `<out>.raw`.
    #[arg(long)]
    archive_dir: Option<PathBuf>,
    /// Worker threads; overrides the config.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct VerifyArgs {
    problem: PathBuf,
    /// Largest number of active spins to enumerate.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ReportArgs {
    /// Metrics CSV from `annealkit run`.
    results: PathBuf,
    /// Summary CSV to write; stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn load_problem(path: &Path) -> Result<Hamiltonian, Error> {
    Ok(load_instance(path)?.0)
}

fn load_embedding(path: &Path, target: &TargetArgs) -> Result<Embedding, Error> {
    Embedding::from_text(&read(path)?, Arc::new(target.load()?))
}

fn cmd_generate(a: GenerateArgs) -> Result<(), Error> {
    let hardware = matches!(a.class, InstanceClass::Ran | InstanceClass::Fl);
    let req = GenerateRequest {
        class: a.class,
        precision: a.precision.unwrap_or(if a.class == InstanceClass::Fl { 2 } else { 1 }),
        ratio: a.ratio.unwrap_or(match a.class {
            InstanceClass::Fl => 0.2,
            InstanceClass::Nae => 2.1,
            _ => 0.0,
        }),
        target: if hardware { Some(a.target.load()?) } else { None },
        size: a.n,
        count: a.count,
        seed: a.seed,
        unique: a.unique,
    };
    for p in generate(&req, &a.out)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn cmd_embed(a: EmbedArgs) -> Result<(), Error> {
    let ham = load_problem(&a.problem)?;
    let target = Arc::new(a.target.load()?);
    let n = ham.n();
    let emb = match a.method {
        Method::Choi => {
            let clique = choi_clique_embedding(target.clone())?;
            if clique.num_variables() < n {
                return Err(Error::Infeasible(format!(
                    "C_{} holds a clique of {}, problem has {n} variables",
                    target.k(),
                    clique.num_variables()
                )));
            }
            Embedding::new(clique.chains()[..n].to_vec(), target)?
        }
        Method::Heuristic => {
            let params = EmbedParams {
                seed: a.seed,
                ..EmbedParams::default()
            };
            find_embedding(n, &ham.edges(), target, &params)?
                .ok_or_else(|| Error::Infeasible("no embedding found".into()))?
        }
    };
    emb.validate(&ham.edges())?;
    eprintln!("{n} variables on {} qubits, longest chain {}", emb.num_qubits(), emb.max_chain_len());
    emit(a.out.as_deref(), &emb.to_text())
}

fn cmd_calibrate(a: CalibrateArgs) -> Result<(), Error> {
    let ham = load_problem(&a.problem)?;
    let emb = load_embedding(&a.embedding, &a.target)?;
    let search = Kappa0Search {
        reads: a.reads,
        gauges: a.gauges,
        ..Kappa0Search::default()
    };
    let est = estimate_kappa0(&ham, &emb, &a.annealer.config(), &a.ice.model()?, &search)?;
    if est.saturated {
        println!("kappa0 >= {} (no grid value kept the best sample unbroken)", est.kappa);
    } else {
        println!("kappa0 = {}", est.kappa);
    }
    Ok(())
}

fn cmd_shim(a: ShimArgs) -> Result<(), Error> {
    let ham = load_problem(&a.problem)?;
    let emb = load_embedding(&a.embedding, &a.target)?;
    let problem = embed(&ham, &emb, a.kappa)?;
    let params = ShimParams {
        iterations: a.iterations,
        step: a.step,
        reads: a.reads,
        gauges: 1,
    };
    let result = chain_shim(&problem, &a.annealer.config(), &a.ice.model()?, &params)?;
    for (it, pol) in result.history.iter().enumerate() {
        let worst = pol.iter().flatten().fold(0.0f64, |m, p| m.max(p.abs()));
        eprintln!("iteration {it}: max |polarization| {worst:.4}");
    }
    if !result.converged {
        eprintln!("warning: polarization still above sampling noise after {} iterations", a.iterations);
    }
    let mut text = String::new();
    for (q, b) in result.biases.iter().enumerate().filter(|(_, &b)| b != 0.0) {
        text.push_str(&format!("{q} {b}\n"));
    }
    emit(a.out.as_deref(), &text)
}

fn cmd_run(a: RunArgs) -> Result<(), Error> {
    let mut config = ExperimentConfig::load(&a.config)?;
    if a.threads.is_some() {
        config.threads = a.threads;
    }
    let base = a.config.parent().unwrap_or(Path::new("."));
    let out = run_experiment(&config, base)?;
    let archive_dir = a.archive_dir.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".raw");
        PathBuf::from(p)
    });
    out.write(&a.out, config.archive.then_some(archive_dir.as_path()))?;
    eprintln!("{} rows written to {}", out.rows.len(), a.out.display());
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<(), Error> {
    let (ham, meta) = load_instance(&a.problem)?;
    let report = verify(&ham, meta.as_ref(), a.limit)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(());
    }
    println!("spins: {} ({} active)", report.n, report.active);
    if let (Some(e), Some(d)) = (report.ground_energy, report.degeneracy) {
        println!("ground energy: {e}");
        println!("degeneracy: {d}");
    }
    if let Some(p) = &report.planted {
        println!("planted energy: {} (closed form {})", p.energy, p.closed_form);
        println!("planted state: {}", if p.consistent { "consistent" } else { "INCONSISTENT" });
        match p.is_ground {
            Some(true) => println!("planted state is a ground state"),
            Some(false) => println!("planted state is NOT a ground state"),
            None => println!("ground state not enumerated ({} spins over the limit)", report.active),
        }
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> Result<(), Error> {
    let file = fs::File::open(&a.results)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", a.results.display())))?;
    let rows = read_csv(file)?;
    let summary = if rows.is_empty() { Vec::new() } else { summarize(&rows)? };
    let mut buf = Vec::new();
    write_summary(&summary, &mut buf)?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Generate(a) => cmd_generate(a),
        Command::Embed(a) => cmd_embed(a),
        Command::CalibrateKappa(a) => cmd_calibrate(a),
        Command::Shim(a) => cmd_shim(a),
        Command::Run(a) => cmd_run(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Report(a) => cmd_report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            // Bad parameters are usage errors; everything else is about the data.
            if matches!(e, Error::InvalidParameter(_)) {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}
