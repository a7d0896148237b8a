use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use dualce::cluster::{coarse_grain, CoarseGrainMethod};
use dualce::fit::{build_snapshots, fit_dtpm};
use dualce::io::{self, MatrixFile};
use dualce::markov::{dumbbell_generate, ei, random_probability_vector, simulate, Dtpm, Tpm};
use dualce::pipeline::{run_pipeline, write_matrix, CoarseGrainingDoc, OutputFormat, PipelineConfig};
use dualce::sweep::{detect_k, norm_sweep};

#[derive(Parser)]
#[command(name = "dualce", version, about = "Dual-norm causal-emergence analysis of Markov chains")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Master seed (chain: seed, initial state: seed+1, k-means: seed+2).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// JSON run configuration; missing fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Comma-separated exponents in [1, 2).
    #[arg(long, global = true, value_delimiter = ',')]
    p_list: Option<Vec<f64>>,
    /// Relative gap below which singular values are treated as repeated.
    #[arg(long, global = true)]
    group_tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    With,
    Without,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dumbbell transition matrix.
    Generate,
    /// Propagate a random initial distribution through a chain.
    Simulate {
        /// Chain matrix (.json or .csv).
        #[arg(long)]
        input: PathBuf,
        /// Number of snapshot columns; T + 2 states are written.
        #[arg(long)]
        t: Option<usize>,
    },
    /// Fit a dual transition matrix to a trajectory.
    Fit {
        /// Trajectory file (.csv, one state per line, or .json).
        #[arg(long)]
        input: PathBuf,
    },
    /// Dual Ky Fan norms over k and p.
    Sweep {
        /// Dual transition matrix (.json).
        #[arg(long)]
        input: PathBuf,
    },
    /// Classification number from a sweep table.
    Detect {
        /// Sweep table (.csv or .json).
        #[arg(long)]
        input: PathBuf,
    },
    /// Cluster states into k macro-states.
    CoarseGrain {
        /// Dual transition matrix (.json).
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, value_enum, default_value = "both")]
        method: Method,
    },
    /// Run every stage and write a manifest.
    Pipeline,
}

fn load_config(c: &Common) -> Result<PipelineConfig> {
    let mut cfg = match &c.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", path.display()))?
        }
        None => PipelineConfig::default(),
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    if let Some(p) = &c.p_list {
        cfg.sweep.p_list = p.clone();
    }
    if let Some(tol) = c.group_tol {
        cfg.sweep.group_tol = tol;
        cfg.coarse.group_tol = tol;
    }
    if let Some(f) = c.format {
        cfg.format = match f {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    Ok(cfg.resolved())
}

fn read_dtpm(path: &Path) -> Result<Dtpm> {
    let m = io::read_matrix(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(Dtpm::new(m)?)
}

fn report(paths: &[String], out: &Path) {
    for p in paths {
        println!("{}", out.join(p).display());
    }
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli.common)?;
    let out = cli.common.out.as_path();
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let json = cfg.format == OutputFormat::Json;
    match cli.command {
        Command::Generate => {
            let chain = dumbbell_generate(&cfg.dumbbell)?;
            let file = MatrixFile::real(chain.matrix())
                .with_provenance(Some(cfg.dumbbell.seed), Some(serde_json::to_value(&cfg.dumbbell)?));
            report(&write_matrix(out, "chain", &file, cfg.format)?, out);
        }
        Command::Simulate { input, t } => {
            let chain = Tpm::new(io::read_matrix(&input)?.into_parts().0)?;
            let x1 = random_probability_vector(chain.n(), cfg.seeds().initial_state);
            let xs = simulate(&chain, &x1, t.unwrap_or(cfg.t))?;
            let name = if json { "trajectory.json" } else { "trajectory.csv" };
            io::write_trajectory(&out.join(name), &xs)?;
            report(&[name.into()], out);
        }
        Command::Fit { input } => {
            let xs = io::read_trajectory(&input)?;
            let rep = fit_dtpm(&build_snapshots(&xs)?, &cfg.fit)?;
            let file = MatrixFile::dual(rep.p.dual())
                .with_provenance(Some(cfg.seed), Some(serde_json::to_value(&cfg.fit)?));
            let mut names = write_matrix(out, "dtpm", &file, cfg.format)?;
            io::write_json(&out.join("fit_report.json"), &rep)?;
            names.push("fit_report.json".into());
            report(&names, out);
        }
        Command::Sweep { input } => {
            let p = read_dtpm(&input)?;
            let mut table = norm_sweep(&p, &cfg.sweep.p_list, cfg.sweep.group_tol)?;
            table.provenance = serde_json::json!({ "input": input.display().to_string() });
            let name = if json { "sweep.json" } else { "sweep.csv" };
            if json {
                io::write_json(&out.join(name), &table)?;
            } else {
                fs::write(out.join(name), io::sweep_to_csv(&table))?;
            }
            report(&[name.into()], out);
        }
        Command::Detect { input } => {
            let d = detect_k(&io::read_sweep(&input)?)?;
            io::write_json(&out.join("detection.json"), &d)?;
            println!("k_star = {}", d.k_star);
        }
        Command::CoarseGrain { input, k, method } => {
            let p = read_dtpm(&input)?;
            let methods: &[(CoarseGrainMethod, &str)] = match method {
                Method::With => &[(CoarseGrainMethod::WithInfinitesimal, "coarse_grain_with.json")],
                Method::Without => &[(CoarseGrainMethod::WithoutInfinitesimal, "coarse_grain_without.json")],
                Method::Both => &[
                    (CoarseGrainMethod::WithInfinitesimal, "coarse_grain_with.json"),
                    (CoarseGrainMethod::WithoutInfinitesimal, "coarse_grain_without.json"),
                ],
            };
            let ei_micro = ei(&p.standard());
            for &(m, name) in methods {
                let cg = coarse_grain(&p, k, m, &cfg.coarse)?;
                io::write_json(&out.join(name), &CoarseGrainingDoc::new(&cg, ei_micro))?;
                println!("{}: EI {:.6} (micro {:.6})", out.join(name).display(), ei(&cg.upsilon), ei_micro);
            }
        }
        Command::Pipeline => {
            let m = run_pipeline(&cfg, out)?;
            let r = &m.results;
            println!(
                "k_star = {} (per p: {:?}); EI micro {:.6}, with ε {:.6}, without ε {:.6}",
                r.k_star, r.per_p, r.ei_micro, r.ei_with_infinitesimal, r.ei_without_infinitesimal
            );
            report(&m.artifacts, out);
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
