//! End-to-end analysis of a dumbbell chain: generate, simulate, fit, sweep,
//! detect `k`, coarse-grain with and without the infinitesimal part.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cluster::{coarse_grain, CoarseGrainMethod, CoarseGrainOptions, CoarseGraining};
use crate::error::{Error, Result};
use crate::fit::{build_snapshots, fit_dtpm, FitOptions, FitReport};
use crate::io::{self, MatrixFile};
use crate::markov::{dumbbell_generate, ei, random_probability_vector, simulate, DumbbellConfig, Tpm};
use crate::svd::DEFAULT_GROUP_TOL;
use crate::sweep::{detect_k, norm_sweep, Detection, SweepTable};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepOptions {
    pub p_list: Vec<f64>,
    pub group_tol: f64,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            p_list: vec![1.0, 1.3, 1.6, 1.9],
            group_tol: DEFAULT_GROUP_TOL,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    #[default]
    Json,
}

/// Run configuration. `seed` drives every random choice: the chain uses
/// `seed`, the initial state `seed + 1` and k-means `seed + 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub dumbbell: DumbbellConfig,
    /// Number of snapshot columns `T`; the trajectory has `T + 2` states.
    pub t: usize,
    pub fit: FitOptions,
    pub sweep: SweepOptions,
    pub coarse: CoarseGrainOptions,
    /// Coarse-grain at this `k` instead of the detected one.
    pub k: Option<usize>,
    pub format: OutputFormat,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 0,
            dumbbell: DumbbellConfig::default(),
            t: 500,
            fit: FitOptions::default(),
            sweep: SweepOptions::default(),
            coarse: CoarseGrainOptions::default(),
            k: None,
            format: OutputFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    pub dumbbell: u64,
    pub initial_state: u64,
    pub kmeans: u64,
}

impl PipelineConfig {
    pub fn seeds(&self) -> Seeds {
        Seeds {
            dumbbell: self.seed,
            initial_state: self.seed.wrapping_add(1),
            kmeans: self.seed.wrapping_add(2),
        }
    }

    /// Copies the derived seeds into the nested configs.
    pub fn resolved(&self) -> PipelineConfig {
        let seeds = self.seeds();
        let mut cfg = self.clone();
        cfg.dumbbell.seed = seeds.dumbbell;
        cfg.coarse.kmeans.seed = seeds.kmeans;
        cfg
    }
}

/// Everything computed by [`analyze`].
#[derive(Clone, Debug)]
pub struct Analysis {
    pub config: PipelineConfig,
    pub chain: Tpm,
    pub fit: FitReport,
    pub sweep: SweepTable,
    pub detection: Detection,
    pub k: usize,
    pub with_infinitesimal: CoarseGraining,
    pub without_infinitesimal: CoarseGraining,
    pub ei_micro: f64,
    pub ei_with: f64,
    pub ei_without: f64,
}

fn stage<T>(name: &'static str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.in_stage(name))
}

/// Runs every stage in memory.
pub fn analyze(cfg: &PipelineConfig) -> Result<Analysis> {
    let cfg = cfg.resolved();
    if cfg.t == 0 {
        return Err(Error::out_of_range("t", 0, "1..").in_stage("config"));
    }
    let chain = stage("generate", dumbbell_generate(&cfg.dumbbell))?;
    let x1 = random_probability_vector(chain.n(), cfg.seeds().initial_state);
    let xs = stage("simulate", simulate(&chain, &x1, cfg.t))?;
    let snap = stage("snapshots", build_snapshots(&xs))?;
    let fit = stage("fit", fit_dtpm(&snap, &cfg.fit))?;
    let mut sweep = stage("sweep", norm_sweep(&fit.p, &cfg.sweep.p_list, cfg.sweep.group_tol))?;
    sweep.provenance = serde_json::json!({ "seed": cfg.seed, "seeds": cfg.seeds() });
    let detection = stage("detect", detect_k(&sweep))?;
    let k = cfg.k.unwrap_or(detection.k_star);
    let with_infinitesimal = stage(
        "coarse-grain",
        coarse_grain(&fit.p, k, CoarseGrainMethod::WithInfinitesimal, &cfg.coarse),
    )?;
    let without_infinitesimal = stage(
        "coarse-grain",
        coarse_grain(&fit.p, k, CoarseGrainMethod::WithoutInfinitesimal, &cfg.coarse),
    )?;
    Ok(Analysis {
        ei_micro: ei(&fit.p.standard()),
        ei_with: ei(&with_infinitesimal.upsilon),
        ei_without: ei(&without_infinitesimal.upsilon),
        config: cfg,
        chain,
        fit,
        sweep,
        detection,
        k,
        with_infinitesimal,
        without_infinitesimal,
    })
}

/// Serialized coarse-graining: labels, reduced chain and its EI.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseGrainingDoc {
    pub method: CoarseGrainMethod,
    pub k: usize,
    pub labels: Vec<usize>,
    pub upsilon: Tpm,
    pub ei_reduced: f64,
    pub ei_micro: f64,
}

impl CoarseGrainingDoc {
    pub fn new(cg: &CoarseGraining, ei_micro: f64) -> Self {
        CoarseGrainingDoc {
            method: cg.method,
            k: cg.phi.ncols(),
            labels: cg.labels.clone(),
            upsilon: cg.upsilon.clone(),
            ei_reduced: ei(&cg.upsilon),
            ei_micro,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Results {
    pub k_star: usize,
    pub k_used: usize,
    pub per_p: Vec<(f64, usize)>,
    pub unanimous: bool,
    pub degenerate: bool,
    pub ei_micro: f64,
    pub ei_with_infinitesimal: f64,
    pub ei_without_infinitesimal: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub seeds: Seeds,
    pub artifacts: Vec<String>,
    pub results: Results,
}

/// Writes a dense matrix in the configured format; returns the file names.
pub fn write_matrix(
    dir: &Path,
    stem: &str,
    file: &MatrixFile,
    format: OutputFormat,
) -> Result<Vec<String>> {
    match format {
        OutputFormat::Json => {
            let name = format!("{stem}.json");
            io::write_json(&dir.join(&name), file)?;
            Ok(vec![name])
        }
        OutputFormat::Csv => {
            let dual = file.to_dual()?;
            let mut names = vec![format!("{stem}_s.csv")];
            io::write_matrix_csv(&dir.join(&names[0]), dual.s())?;
            if file.i.is_some() {
                names.push(format!("{stem}_i.csv"));
                io::write_matrix_csv(&dir.join(&names[1]), dual.i())?;
            }
            Ok(names)
        }
    }
}

/// Runs [`analyze`] and writes every artifact plus `manifest.json` into `out`.
pub fn run_pipeline(cfg: &PipelineConfig, out: &Path) -> Result<Manifest> {
    let a = analyze(cfg)?;
    let cfg = &a.config;
    let write = |r: Result<()>| r.map_err(|e| e.in_stage("write"));
    write(std::fs::create_dir_all(out).map_err(Error::from))?;
    let echo = serde_json::to_value(cfg)?;
    let seeds = cfg.seeds();
    let mut artifacts = Vec::new();

    let chain = MatrixFile::real(a.chain.matrix())
        .with_provenance(Some(seeds.dumbbell), Some(serde_json::to_value(&cfg.dumbbell)?));
    artifacts.extend(write_matrix(out, "chain", &chain, cfg.format).map_err(|e| e.in_stage("write"))?);
    let dtpm = MatrixFile::dual(a.fit.p.dual()).with_provenance(Some(cfg.seed), Some(echo));
    artifacts.extend(write_matrix(out, "dtpm", &dtpm, cfg.format).map_err(|e| e.in_stage("write"))?);

    let mut named = |name: &str, r: Result<()>| -> Result<()> {
        write(r)?;
        artifacts.push(name.to_string());
        Ok(())
    };
    named("fit_report.json", io::write_json(&out.join("fit_report.json"), &a.fit))?;
    named(
        "sweep.csv",
        std::fs::write(out.join("sweep.csv"), io::sweep_to_csv(&a.sweep)).map_err(Error::from),
    )?;
    named("detection.json", io::write_json(&out.join("detection.json"), &a.detection))?;
    for (name, cg) in [
        ("coarse_grain_with.json", &a.with_infinitesimal),
        ("coarse_grain_without.json", &a.without_infinitesimal),
    ] {
        named(name, io::write_json(&out.join(name), &CoarseGrainingDoc::new(cg, a.ei_micro)))?;
    }

    let manifest = Manifest {
        tool: "dualce".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        seeds,
        artifacts,
        results: Results {
            k_star: a.detection.k_star,
            k_used: a.k,
            per_p: a.detection.per_p.clone(),
            unanimous: a.detection.unanimous,
            degenerate: a.detection.degenerate,
            ei_micro: a.ei_micro,
            ei_with_infinitesimal: a.ei_with,
            ei_without_infinitesimal: a.ei_without,
        },
    };
    write(io::write_json(&out.join("manifest.json"), &manifest))?;
    Ok(manifest)
}
