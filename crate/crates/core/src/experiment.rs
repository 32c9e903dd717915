//! Declarative experiments: instance generation, verification, sampling
//! sweeps and summary reports.
//!
//! An experiment is a TOML file naming instance files and the settings to
//! sweep (gauge counts, anneal-time multipliers) plus the embedding,
//! calibration, postprocessing and success criteria to apply. Running it
//! yields one metrics row per (instance, setting, criterion). Instances run
//! in parallel; every random stream is keyed by instance index and setting,
//! so output is identical for any worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::archive::{self, ArchiveEntry, Manifest};
use crate::chimera::{choi_clique_embedding, ChimeraGraph};
use crate::embedding::{embed, estimate_kappa0, find_embedding, EmbedParams, Embedding, Kappa0Search};
use crate::error::{Error, Result};
use crate::exact::{BruteForce, DEFAULT_LIMIT};
use crate::generators::{
    fl_planted_energy, gen_3mc, gen_fl, gen_nae, gen_ran, InstanceClass, InstanceMeta, InstanceSpec, NaeParams,
};
use crate::ice::{success_band, IceModel};
use crate::ising::Hamiltonian;
use crate::metrics::{self, st99, st99_time, MetricRow, SuccessCriterion, SuccessMode};
use crate::postprocess::{postprocess_pipeline, PostprocessContext, Stage};
use crate::rng;
use crate::sampler::{chain_shim, AnnealerConfig, Sampler, ShimParams};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; the global pool when absent.
    #[serde(default)]
    pub threads: Option<usize>,
    /// Problem files, relative to the config file. A directory stands for
    /// every `.txt` file in it, in name order.
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub annealer: AnnealerConfig,
    #[serde(default)]
    pub ice: IceModel,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub embedding: Option<EmbeddingConfig>,
    #[serde(default)]
    pub shim: Option<ShimParams>,
    #[serde(default)]
    pub postprocess: Vec<Stage>,
    #[serde(default = "default_criteria")]
    pub criteria: Vec<CriterionConfig>,
    /// Largest problem the reference search will enumerate.
    #[serde(default = "default_exact_limit")]
    pub exact_limit: usize,
    /// Write raw readouts next to the CSV.
    #[serde(default)]
    pub archive: bool,
}

fn default_criteria() -> Vec<CriterionConfig> {
    vec![CriterionConfig {
        mode: SuccessMode::ExactGround,
        band: None,
    }]
}

fn default_exact_limit() -> usize {
    DEFAULT_LIMIT
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplingConfig {
    /// Reads per setting, `k`.
    pub reads: usize,
    /// Programming-cycle counts `p` to compare.
    pub gauges: Vec<usize>,
    /// Anneal times as multiples of the floor.
    pub anneal_multipliers: Vec<f64>,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            reads: 1000,
            gauges: vec![10],
            anneal_multipliers: vec![1.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMethod {
    /// Clique embedding on the full `C_k`.
    Choi,
    /// Heuristic minor-embedding into the working graph.
    Heuristic,
    /// Chains read from `file`.
    File,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case", deny_unknown_fields)]
pub enum KappaPolicy {
    Fixed { value: f64 },
    /// `multiplier * kappa0`, with `kappa0` estimated per instance.
    Calibrated {
        #[serde(default = "one")]
        multiplier: f64,
        #[serde(default = "default_calibration_reads")]
        reads: usize,
    },
}

fn one() -> f64 {
    1.0
}

fn default_calibration_reads() -> usize {
    1000
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub method: EmbedMethod,
    /// Size of the full Chimera target.
    pub chimera_k: usize,
    /// Working-graph file; the full `C_k` when absent.
    #[serde(default)]
    pub working_graph: Option<PathBuf>,
    /// Embedding file for [`EmbedMethod::File`].
    #[serde(default)]
    pub file: Option<PathBuf>,
    pub kappa: KappaPolicy,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionConfig {
    pub mode: SuccessMode,
    /// Energy band in hardware units; `success_band(N)` when absent.
    #[serde(default)]
    pub band: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.annealer.validate()?;
        self.ice.validate()?;
        let s = &self.sampling;
        if s.reads == 0 || s.gauges.is_empty() || s.gauges.contains(&0) {
            return Err(Error::Config("need a positive read count and gauge counts".into()));
        }
        if s.anneal_multipliers.is_empty() || s.anneal_multipliers.iter().any(|&m| !(m >= 1.0)) {
            return Err(Error::Config("anneal multipliers must be at least 1".into()));
        }
        if self.criteria.is_empty() {
            return Err(Error::Config("at least one success criterion is required".into()));
        }
        for c in &self.criteria {
            match (c.mode, c.band) {
                (SuccessMode::ExactGround, Some(_)) => {
                    return Err(Error::Config("exact_ground takes no band".into()))
                }
                (SuccessMode::WithinBand, Some(b)) if !(b > 0.0) => {
                    return Err(Error::Config("band must be positive".into()))
                }
                _ => {}
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if let Some(e) = &self.embedding {
            if e.method == EmbedMethod::File && e.file.is_none() {
                return Err(Error::Config("embedding method `file` needs `file`".into()));
            }
            if let KappaPolicy::Fixed { value } = e.kappa {
                if !(value > 0.0) {
                    return Err(Error::Config("fixed kappa must be positive".into()));
                }
            }
        }
        if self.shim.is_some() && self.embedding.is_none() {
            return Err(Error::Config("chain shimming needs an embedding".into()));
        }
        if self.embedding.is_none() && self.postprocess.iter().any(|s| *s != Stage::DescentEmbedded) {
            return Err(Error::Config("majority vote and logical descent need an embedding".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Instance files
// ---------------------------------------------------------------------------

pub fn sidecar_path(problem: &Path) -> PathBuf {
    problem.with_extension("json")
}

/// Loads a problem file and its metadata sidecar, if present.
pub fn load_instance(path: &Path) -> Result<(Hamiltonian, Option<InstanceMeta>)> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read instance {}: {e}", path.display())))?;
    let ham = Hamiltonian::from_text(&text)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        Some(InstanceMeta::from_json(&fs::read_to_string(side)?)?)
    } else {
        None
    };
    Ok((ham, meta))
}

fn instance_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Clone, Debug)]
pub struct GenerateRequest {
    pub class: InstanceClass,
    /// Precision limit `R` (RAN, FL).
    pub precision: u32,
    /// Loop ratio (FL) or clause ratio (NAE).
    pub ratio: f64,
    /// Hardware target for RAN and FL.
    pub target: Option<ChimeraGraph>,
    /// Logical size for 3MC and NAE.
    pub size: usize,
    pub count: usize,
    pub seed: u64,
    /// NAE uniqueness filter.
    pub unique: bool,
}

/// Writes `count` instances plus sidecars into `out_dir`; returns the
/// problem paths. Instance `i` uses seed `derive_seed(seed, [i])`.
pub fn generate(req: &GenerateRequest, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let needs_target = matches!(req.class, InstanceClass::Ran | InstanceClass::Fl);
    if needs_target && req.target.is_none() {
        return Err(Error::InvalidParameter(format!("{} instances need a Chimera target", req.class)));
    }
    if req.count > 0 {
        fs::create_dir_all(out_dir)?;
    }
    let prefix = match req.class {
        InstanceClass::Ran | InstanceClass::Fl => format!("{}{}", req.class, req.precision),
        _ => req.class.to_string(),
    }
    .to_lowercase();
    let mut paths = Vec::with_capacity(req.count);
    for i in 0..req.count {
        let seed = rng::derive_seed(req.seed, &[i as u64]);
        let mut spec = InstanceSpec {
            class: req.class,
            precision: None,
            ratio: None,
            size: req.size,
            seed,
            planted_state: None,
        };
        let mut meta_extra = (Vec::new(), Vec::new(), Vec::new());
        let ham = match req.class {
            InstanceClass::Ran => {
                let g = req.target.as_ref().unwrap();
                spec.precision = Some(req.precision);
                spec.size = g.num_qubits();
                gen_ran(g, req.precision, seed)?
            }
            InstanceClass::Fl => {
                let g = req.target.as_ref().unwrap();
                spec.precision = Some(req.precision);
                spec.ratio = Some(req.ratio);
                spec.size = g.num_qubits();
                let fl = gen_fl(g, req.precision, req.ratio, seed)?;
                spec.planted_state = Some(fl.planted);
                meta_extra.0 = fl.cycles;
                fl.hamiltonian
            }
            InstanceClass::ThreeMc => {
                let (h, edges) = gen_3mc(req.size, seed)?;
                meta_extra.1 = edges;
                h
            }
            InstanceClass::Nae => {
                spec.ratio = Some(req.ratio);
                let params = NaeParams {
                    ratio: req.ratio,
                    unique_filter: req.unique,
                    ..NaeParams::default()
                };
                let inst = gen_nae(req.size, &params, seed)?;
                meta_extra.2 = inst.clauses;
                inst.hamiltonian
            }
        };
        let meta = InstanceMeta {
            spec,
            cycles: meta_extra.0,
            edges: meta_extra.1,
            clauses: meta_extra.2,
        };
        let path = out_dir.join(format!("{prefix}-{i:04}.txt"));
        fs::write(&path, ham.to_text())?;
        fs::write(sidecar_path(&path), meta.to_json()? + "\n")?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlantedCheck {
    /// Planted-state energy with the unit scaling undone.
    pub energy: f64,
    /// `sum -(len - 2)` over the recorded loops.
    pub closed_form: f64,
    pub consistent: bool,
    /// Whether exhaustive search agrees, when it ran.
    pub is_ground: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    /// Spins that carry a field or coupling.
    pub active: usize,
    pub ground_energy: Option<f64>,
    pub degeneracy: Option<u64>,
    pub planted: Option<PlantedCheck>,
}

/// Exact ground energy (over the active spins, when few enough) and the
/// planted-state check for FL instances.
pub fn verify(ham: &Hamiltonian, meta: Option<&InstanceMeta>, limit: usize) -> Result<VerifyReport> {
    let active: Vec<usize> = ham
        .participating()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(i, _)| i)
        .collect();
    let planted_meta = meta.and_then(|m| m.spec.planted_state.as_ref().map(|s| (m, s)));
    let exact = if active.len() <= limit {
        let reduced = ham.restrict(&active)?;
        Some(BruteForce::default().with_limit(limit).with_cap(1).solve(&reduced)?)
    } else if planted_meta.is_none() {
        return Err(Error::TooLarge { n: active.len(), limit });
    } else {
        None
    };
    let planted = match planted_meta {
        Some((m, s)) => {
            let alpha = ham.scale_alpha().unwrap_or(1.0);
            let energy = ham.energy(s)? / alpha;
            let closed_form = fl_planted_energy(&m.cycles);
            let tol = 1e-9 * closed_form.abs().max(1.0);
            Some(PlantedCheck {
                energy,
                closed_form,
                consistent: (energy - closed_form).abs() <= tol,
                is_ground: exact
                    .as_ref()
                    .map(|g| (ham.energy(s).unwrap_or(f64::INFINITY) - g.energy).abs() <= 1e-9),
            })
        }
        None => None,
    };
    Ok(VerifyReport {
        n: ham.n(),
        active: active.len(),
        ground_energy: exact.as_ref().map(|g| g.energy),
        degeneracy: exact.as_ref().map(|g| g.degeneracy),
        planted,
    })
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Default)]
pub struct ExperimentOutput {
    pub rows: Vec<MetricRow>,
    /// Archive entries and their encoded readouts, in row order.
    pub archives: Vec<(ArchiveEntry, Vec<u8>)>,
}

impl ExperimentOutput {
    pub fn csv(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        metrics::write_csv(&self.rows, &mut buf)?;
        if self.rows.is_empty() {
            buf = format!("{}\n", CSV_HEADER).into_bytes();
        }
        Ok(buf)
    }

    /// Writes the CSV and, when present, the archives plus manifest.
    pub fn write(&self, csv_path: &Path, archive_dir: Option<&Path>) -> Result<()> {
        if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(csv_path, self.csv()?)?;
        if let Some(dir) = archive_dir.filter(|_| !self.archives.is_empty()) {
            fs::create_dir_all(dir)?;
            let mut manifest = Manifest::default();
            for (entry, bytes) in &self.archives {
                fs::write(dir.join(&entry.file), bytes)?;
                manifest.entries.push(entry.clone());
            }
            manifest.save(dir)?;
        }
        Ok(())
    }
}

pub const CSV_HEADER: &str = "instance_id,class,n,N,M,criterion,pi,k99,st99_time_s,tags";

/// Runs every instance of `config`; instance paths resolve against
/// `base_dir`.
pub fn run_experiment(config: &ExperimentConfig, base_dir: &Path) -> Result<ExperimentOutput> {
    config.validate()?;
    let work = || -> Result<ExperimentOutput> {
        let target = match &config.embedding {
            Some(e) => Some(Arc::new(load_target(e, base_dir)?)),
            None => None,
        };
        let instances = expand_instances(&config.instances, base_dir)?;
        let per_instance: Vec<ExperimentOutput> = instances
            .par_iter()
            .enumerate()
            .map(|(i, rel)| run_instance(config, base_dir, target.clone(), i, rel))
            .collect::<Result<_>>()?;
        let mut out = ExperimentOutput::default();
        for part in per_instance {
            out.rows.extend(part.rows);
            out.archives.extend(part.archives);
        }
        Ok(out)
    };
    match config.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work),
        None => work(),
    }
}

fn expand_instances(listed: &[PathBuf], base_dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for rel in listed {
        let full = base_dir.join(rel);
        if !full.is_dir() {
            out.push(rel.clone());
            continue;
        }
        let mut names: Vec<PathBuf> = fs::read_dir(&full)?
            .map(|e| e.map(|e| e.file_name()))
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .map(PathBuf::from)
            .filter(|n| n.extension().is_some_and(|x| x == "txt"))
            .collect();
        if names.is_empty() {
            return Err(Error::Config(format!("no .txt instances in {}", full.display())));
        }
        names.sort();
        out.extend(names.into_iter().map(|n| rel.join(n)));
    }
    Ok(out)
}

fn load_target(e: &EmbeddingConfig, base_dir: &Path) -> Result<ChimeraGraph> {
    match &e.working_graph {
        Some(path) => {
            let path = base_dir.join(path);
            let text = fs::read_to_string(&path)
                .map_err(|err| Error::Config(format!("cannot read working graph {}: {err}", path.display())))?;
            let g = ChimeraGraph::load_working_graph(&text)?;
            if g.k() != e.chimera_k {
                return Err(Error::Config(format!(
                    "working graph is C_{}, config says C_{}",
                    g.k(),
                    e.chimera_k
                )));
            }
            Ok(g)
        }
        None => ChimeraGraph::build(e.chimera_k),
    }
}

/// How the reference energy of an instance was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Reference {
    Exact,
    Planted,
    BestSeen,
}

impl Reference {
    fn tag(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Planted => "planted",
            Self::BestSeen => "best_seen",
        }
    }
}

struct Setting {
    p: usize,
    multiplier: f64,
    energies: Vec<Option<f64>>,
    seed: u64,
    t_f: f64,
    archive: Option<Vec<u8>>,
}

fn run_instance(
    config: &ExperimentConfig,
    base_dir: &Path,
    target: Option<Arc<ChimeraGraph>>,
    index: usize,
    rel: &Path,
) -> Result<ExperimentOutput> {
    let path = base_dir.join(rel);
    let (scored, meta) = load_instance(&path)?;
    let id = instance_id(rel);
    let key = index as u64;
    let ice = IceModel {
        seed: rng::derive_seed(config.ice.seed, &[key]),
        ..config.ice.clone()
    };
    let base_seed = rng::derive_seed(config.seed, &[key]);

    // Hardware problem.
    let mut offsets: Option<Vec<f64>> = None;
    let mut kappa_tag = String::new();
    let (hardware, embedded) = match (&config.embedding, target) {
        (Some(e), Some(target)) => {
            let emb = build_embedding(e, base_dir, &scored, target, base_seed)?;
            let kappa = match e.kappa {
                KappaPolicy::Fixed { value } => value,
                KappaPolicy::Calibrated { multiplier, reads } => {
                    let cfg = AnnealerConfig {
                        seed: rng::derive_seed(base_seed, &[1]),
                        ..config.annealer.clone()
                    };
                    let search = Kappa0Search {
                        reads,
                        ..Kappa0Search::default()
                    };
                    multiplier * estimate_kappa0(&scored, &emb, &cfg, &ice, &search)?.kappa
                }
            };
            kappa_tag = format!(";kappa={kappa}");
            let problem = embed(&scored, &emb, kappa)?;
            if let Some(params) = &config.shim {
                let cfg = AnnealerConfig {
                    seed: rng::derive_seed(base_seed, &[2]),
                    ..config.annealer.clone()
                };
                offsets = Some(chain_shim(&problem, &cfg, &ice, params)?.biases);
            }
            (problem.hardware().clone(), Some((emb, problem.alpha())))
        }
        _ => (scored.clone(), None),
    };
    if !hardware.is_hardware_ready() {
        return Err(Error::Config(format!(
            "instance {id} has weights outside [-1, 1]; scale it or embed it"
        )));
    }
    let participating = hardware.participating();
    let qubits = participating.iter().filter(|&&a| a).count();
    let couplers = hardware.num_couplings();

    // Sampling sweep.
    let mut settings = Vec::new();
    for (pi_idx, &p) in config.sampling.gauges.iter().enumerate() {
        for (m_idx, &m) in config.sampling.anneal_multipliers.iter().enumerate() {
            let seed = rng::derive_seed(base_seed, &[3, pi_idx as u64, m_idx as u64]);
            let cfg = AnnealerConfig {
                seed,
                ..config.annealer.with_anneal_multiplier(m)
            };
            let mut sampler = Sampler::new(&cfg, &ice);
            if let Some(o) = &offsets {
                sampler = sampler.with_offsets(o);
            }
            let samples = sampler.run(&hardware, config.sampling.reads, p)?;
            let ctx = PostprocessContext {
                hardware: &hardware,
                embedding: embedded.as_ref().map(|(e, _)| e),
                logical: embedded.as_ref().map(|_| &scored),
                seed: rng::derive_seed(seed, &[4]),
            };
            let processed = postprocess_pipeline(&samples, &ctx, &config.postprocess)?;
            settings.push(Setting {
                p,
                multiplier: m,
                energies: processed.records.iter().map(|r| r.energy).collect(),
                seed,
                t_f: cfg.t_f,
                archive: config.archive.then(|| archive::encode(&samples, hardware.n())),
            });
        }
    }

    // Reference energy for scoring.
    let active: Vec<usize> = scored
        .participating()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a)
        .map(|(i, _)| i)
        .collect();
    let planted = meta.as_ref().and_then(|m| m.spec.planted_state.as_ref());
    let (reference, how) = if active.len() <= config.exact_limit {
        let reduced = scored.restrict(&active)?;
        let g = BruteForce::default().with_limit(config.exact_limit).with_cap(1).solve(&reduced)?;
        (g.energy, Reference::Exact)
    } else if let Some(s) = planted {
        (scored.energy(s)?, Reference::Planted)
    } else {
        let best = settings
            .iter()
            .flat_map(|s| s.energies.iter().flatten())
            .copied()
            .fold(f64::INFINITY, f64::min);
        (best, Reference::BestSeen)
    };

    // Band widths are hardware energies; logical energies of an embedded
    // problem are larger by 1 / alpha.
    let unit = embedded.as_ref().map_or(1.0, |(_, alpha)| 1.0 / alpha);
    let criteria: Vec<SuccessCriterion> = config
        .criteria
        .iter()
        .map(|c| match c.mode {
            SuccessMode::ExactGround => Ok(SuccessCriterion::exact(reference)),
            SuccessMode::WithinBand => {
                SuccessCriterion::within_band(reference, c.band.unwrap_or_else(|| success_band(qubits)) * unit)
            }
        })
        .collect::<Result<_>>()?;

    let class = meta
        .as_ref()
        .map_or_else(|| "unknown".to_string(), |m| m.spec.class.to_string());
    let mut out = ExperimentOutput::default();
    for s in settings {
        let tags = format!("p={};tf={}x{};ref={}", s.p, s.multiplier, kappa_tag, how.tag());
        for crit in &criteria {
            let pi = success_on(&s.energies, crit);
            out.rows.push(MetricRow {
                instance_id: id.clone(),
                class: class.clone(),
                n: scored.n(),
                qubits,
                couplers,
                criterion: crit.label().to_string(),
                success_prob: pi,
                k99: st99(pi),
                st99_time_s: st99_time(pi, config.sampling.reads / s.p, &AnnealerConfig {
                    t_f: s.t_f,
                    ..config.annealer.clone()
                }),
                tags: tags.clone(),
            });
        }
        if let Some(bytes) = s.archive {
            let entry = ArchiveEntry {
                file: format!("{id}__p{}_tf{}.bin", s.p, s.multiplier),
                instance_id: id.clone(),
                n: hardware.n(),
                reads: config.sampling.reads,
                gauges: s.p,
                t_f: s.t_f,
                seed: s.seed,
                tags: tags.clone(),
            };
            out.archives.push((entry, bytes));
        }
    }
    Ok(out)
}

fn success_on(energies: &[Option<f64>], crit: &SuccessCriterion) -> f64 {
    if energies.is_empty() {
        return 0.0;
    }
    let hits = energies.iter().filter(|e| e.is_some_and(|e| crit.is_success(e))).count();
    hits as f64 / energies.len() as f64
}

fn build_embedding(
    e: &EmbeddingConfig,
    base_dir: &Path,
    logical: &Hamiltonian,
    target: Arc<ChimeraGraph>,
    seed: u64,
) -> Result<Embedding> {
    let edges = logical.edges();
    let emb = match e.method {
        EmbedMethod::Choi => {
            let clique = choi_clique_embedding(target.clone())?;
            if logical.n() > clique.num_variables() {
                return Err(Error::Infeasible(format!(
                    "{} variables exceed the K_{} clique of C_{}",
                    logical.n(),
                    clique.num_variables(),
                    target.k()
                )));
            }
            Embedding::new(clique.chains()[..logical.n()].to_vec(), target)?
        }
        EmbedMethod::Heuristic => {
            let params = EmbedParams {
                seed: rng::derive_seed(seed, &[rng::TAG_EMBED]),
                ..EmbedParams::default()
            };
            find_embedding(logical.n(), &edges, target, &params)?
                .ok_or_else(|| Error::Infeasible("no embedding found".into()))?
        }
        EmbedMethod::File => {
            let path = base_dir.join(e.file.as_ref().expect("validated"));
            let text = fs::read_to_string(&path)
                .map_err(|err| Error::Config(format!("cannot read embedding {}: {err}", path.display())))?;
            Embedding::from_text(&text, target)?
        }
    };
    emb.validate(&edges)?;
    Ok(emb)
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub class: String,
    pub criterion: String,
    /// Setting tags with the per-instance reference tag removed.
    pub setting: String,
    pub instances: usize,
    pub median_pi: f64,
    pub st99_p5: f64,
    pub st99_p25: f64,
    pub st99_p50: f64,
    pub st99_p75: f64,
    pub st99_p95: f64,
}

/// Percentiles of ST99 time over instances, grouped by class, criterion
/// and setting.
pub fn summarize(rows: &[MetricRow]) -> Result<Vec<SummaryRow>> {
    let mut groups: BTreeMap<(String, String, String), Vec<&MetricRow>> = BTreeMap::new();
    for r in rows {
        let setting = r
            .tags
            .split(';')
            .filter(|t| !t.starts_with("ref=") && !t.starts_with("kappa="))
            .collect::<Vec<_>>()
            .join(";");
        groups
            .entry((r.class.clone(), r.criterion.clone(), setting))
            .or_default()
            .push(r);
    }
    groups
        .into_iter()
        .map(|((class, criterion, setting), rs)| {
            let times: Vec<f64> = rs.iter().map(|r| r.st99_time_s).collect();
            let pis: Vec<f64> = rs.iter().map(|r| r.success_prob).collect();
            let p = metrics::percentiles(&times, &metrics::REPORT_LEVELS)?;
            let median_pi = metrics::percentiles(&pis, &[50])?[&50];
            Ok(SummaryRow {
                class,
                criterion,
                setting,
                instances: rs.len(),
                median_pi,
                st99_p5: p[&5],
                st99_p25: p[&25],
                st99_p50: p[&50],
                st99_p75: p[&75],
                st99_p95: p[&95],
            })
        })
        .collect()
}

pub fn write_summary<W: std::io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
