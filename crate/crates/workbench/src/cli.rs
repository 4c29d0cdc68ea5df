//! Command-line interface of the `capillary` binary.

use std::path::{Path, PathBuf};

use capillary_core::boundary::detect_boundaries_by_diameter;
use capillary_core::io::{read_graph, read_graph_lenient, write_graph, write_json as write_core_json, SolutionFile};
use capillary_core::{generate_network, GeneratorConfig, Rheology};
use capillary_gnn::{prediction_file, GnnModel, Variant};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bench::{bench_graph, BenchReport};
use crate::config::WorkbenchConfig;
use crate::dataset::{build_dataset, graph_seed, solve, DatasetManifest, Split};
use crate::error::{Result, WorkbenchError};
use crate::eval::evaluate;
use crate::report::{write_csv, write_json, write_text};
use crate::study::generalization_study;
use crate::train::train;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Desk,
    Full,
}

#[derive(Debug, Parser)]
#[command(name = "capillary", version, about = "Capillary blood-flow solvers and graph network surrogates")]
pub struct Cli {
    /// Seed for generation, initialisation and shuffling.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON settings file (sections: dataset, gnn, train, study, bench).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Scale preset used when no settings file is given.
    #[arg(long, global = true, value_enum, default_value = "desk")]
    pub preset: Preset,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic networks.
    Generate(GenerateArgs),
    /// Solve the full-order flow problem on a graph file.
    Solve(SolveArgs),
    /// Generate and solve a dataset and write its manifest.
    Dataset(DatasetArgs),
    /// Train a surrogate on a dataset.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one dataset split.
    Eval(EvalArgs),
    /// Error versus inlet count on freshly generated networks.
    Study(StudyArgs),
    /// Time full-order solvers against surrogate inference.
    Bench(BenchArgs),
    /// Predict the flow on one graph with a checkpoint.
    Predict(PredictArgs),
    /// Import an external graph and detect its boundaries by vessel diameter.
    ImportAnatomical(ImportArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Inlet count range, e.g. `--inlets 10 15`.
    #[arg(long, num_args = 2)]
    pub inlets: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    pub graph: PathBuf,
    #[arg(long, default_value = "linear")]
    pub rheology: Rheology,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[arg(long)]
    pub count: Option<usize>,
    /// Solve with these rheologies (repeatable).
    #[arg(long)]
    pub rheology: Vec<Rheology>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset directory or manifest file.
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub variant: Variant,
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value = "test")]
    pub split: Split,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Comma-separated inlet counts.
    #[arg(long, value_delimiter = ',')]
    pub inlets: Option<Vec<usize>>,
    #[arg(long)]
    pub graphs_per_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Graph files to time; without any, one network per `--inlets` value is generated.
    #[arg(long)]
    pub graph: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub inlets: Option<Vec<usize>>,
    /// Also time the nonlinear solver.
    #[arg(long)]
    pub nonlinear: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    pub graph: PathBuf,
    #[arg(long)]
    pub arterial_root: usize,
    #[arg(long)]
    pub venous_root: usize,
    /// Vessels strictly wider than this (µm) belong to the boundary regions.
    #[arg(long)]
    pub threshold: f64,
    #[arg(long, default_value_t = 35.0)]
    pub inlet_pressure: f64,
    #[arg(long, default_value_t = 10.0)]
    pub outlet_pressure: f64,
    #[arg(long, default_value_t = 0.45)]
    pub hematocrit: f64,
    /// Solve the imported network with this rheology.
    #[arg(long)]
    pub solve: Option<Rheology>,
}

/// Process exit status for a result of [`run`].
pub fn exit_code(result: &Result<()>) -> i32 {
    match result {
        Ok(()) => 0,
        Err(e) if e.is_numerical() => 2,
        Err(_) => 1,
    }
}

fn settings(cli: &Cli) -> Result<WorkbenchConfig> {
    let base = match &cli.config {
        Some(path) => WorkbenchConfig::load(path)?,
        None => match cli.preset {
            Preset::Desk => WorkbenchConfig::desk(),
            Preset::Full => WorkbenchConfig::full_scale(),
        },
    };
    Ok(match cli.seed {
        Some(seed) => base.with_seed(seed),
        None => base,
    })
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "graph".into(), |s| s.to_string_lossy().into_owned())
}

fn emit<T: Serialize>(out: &Path, name: &str, text: &str, value: &T) -> Result<()> {
    print!("{text}");
    write_text(&out.join(format!("{name}.txt")), text)?;
    write_json(&out.join(format!("{name}.json")), value)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = settings(&cli)?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Generate(a) => {
            let mut gen = cfg.dataset.generator.clone();
            if let Some(r) = &a.inlets {
                gen.inlet_count_range = [r[0], r[1]];
            }
            let mut rows = Vec::new();
            for id in 0..a.count {
                let config = GeneratorConfig {
                    seed: graph_seed(gen.seed, id),
                    ..gen.clone()
                };
                let net = generate_network(&config).map_err(|source| WorkbenchError::Graph { id, source })?;
                let path = out.join(format!("graph_{id:04}.json"));
                write_graph(&path, &net.graph, &net.bc)?;
                println!(
                    "{}: {} nodes, {} edges, {} inlets, {} outlets",
                    path.display(),
                    net.graph.node_count(),
                    net.graph.edge_count(),
                    net.bc.inlets().len(),
                    net.bc.outlets().len()
                );
                rows.push(GenerateRow {
                    id,
                    seed: config.seed,
                    nodes: net.graph.node_count(),
                    edges: net.graph.edge_count(),
                    inlets: net.bc.inlets().len(),
                    outlets: net.bc.outlets().len(),
                    domain_side_um: net.domain_side,
                });
            }
            write_csv(&out.join("generate.csv"), &rows)
        }
        Command::Solve(a) => {
            let (graph, bc) = read_graph(&a.graph)?;
            let sol = solve(&graph, &bc, a.rheology, &cfg.dataset.rheology_params, &cfg.dataset.fixed_point)?;
            let path = out.join(format!("{}.{}.solution.json", stem(&a.graph), a.rheology));
            std::fs::create_dir_all(out).map_err(|e| WorkbenchError::io(out, e))?;
            write_core_json(&path, &SolutionFile::from_solution(&sol))?;
            println!(
                "{}: {} rheology, {} iteration(s), constitutive residual {:.3e} mmHg, mass residual {:.3e} µm³/s",
                path.display(),
                a.rheology,
                sol.meta.iterations,
                sol.meta.residuals.constitutive,
                sol.meta.residuals.mass
            );
            Ok(())
        }
        Command::Dataset(a) => {
            let mut spec = cfg.dataset.clone();
            if let Some(n) = a.count {
                spec.count = n;
            }
            if !a.rheology.is_empty() {
                spec.rheologies = a.rheology.clone();
            }
            let manifest = build_dataset(out, &spec)?;
            let [tr, va, te] = manifest.split_counts();
            println!("{}: {tr} train / {va} val / {te} test", out.join("manifest.json").display());
            Ok(())
        }
        Command::Train(a) => {
            let (manifest, root) = DatasetManifest::load(&a.dataset)?;
            let gnn = capillary_gnn::GnnConfig {
                variant: a.variant,
                ..cfg.gnn.clone()
            };
            let mut tc = cfg.train.clone();
            if let Some(e) = a.epochs {
                tc.max_epochs = e;
            }
            manifest.verify(&root, a.variant.rheology())?;
            let train_set = manifest.load_samples(&root, Split::Train, &gnn)?;
            let val_set = manifest.load_samples(&root, Split::Val, &gnn)?;
            let outcome = train(&gnn, &tc, &train_set, &val_set)?;
            let log = &outcome.log;
            let ck = out.join(format!("model{}.json", a.variant.id()));
            std::fs::create_dir_all(out).map_err(|e| WorkbenchError::io(out, e))?;
            outcome.model.save(&ck, serde_json::to_value(&tc)?)?;
            write_json(&out.join(format!("train_log{}.json", a.variant.id())), log)?;
            write_csv(&out.join(format!("train_log{}.csv", a.variant.id())), &log.epochs)?;
            println!(
                "{}: {} epoch(s), best epoch {} (val loss {:.4e}), stop: {}",
                ck.display(),
                log.epochs.len(),
                log.best_epoch,
                log.best_val_loss,
                log.stop_reason
            );
            Ok(())
        }
        Command::Eval(a) => {
            let (manifest, root) = DatasetManifest::load(&a.dataset)?;
            let model = GnnModel::load(&a.checkpoint)?;
            let cases = manifest.load_cases(&root, a.split, model.variant().rheology())?;
            let report = evaluate(&model, &cases, &manifest.spec.rheology_params, &manifest.spec.fixed_point)?;
            emit(out, "eval", &report.to_text(), &report)?;
            write_csv(&out.join("eval.csv"), &report.rows())
        }
        Command::Study(a) => {
            let model = GnnModel::load(&a.checkpoint)?;
            let mut sc = cfg.study.clone();
            if let Some(v) = &a.inlets {
                sc.inlet_counts = v.clone();
            }
            if let Some(n) = a.graphs_per_count {
                sc.graphs_per_count = n;
            }
            let table = generalization_study(&model, &sc)?;
            emit(out, "study", &table.to_text(), &table)?;
            write_csv(&out.join("study.csv"), &table.csv_rows())
        }
        Command::Bench(a) => {
            let model = GnnModel::load(&a.checkpoint)?;
            let mut graphs = Vec::new();
            for p in &a.graph {
                graphs.push(read_graph(p)?);
            }
            if graphs.is_empty() {
                for (k, &n) in a.inlets.clone().unwrap_or_else(|| vec![12]).iter().enumerate() {
                    let config = GeneratorConfig {
                        seed: graph_seed(cfg.dataset.generator.seed, 90_000 + k),
                        inlet_count_range: [n, n],
                        ..cfg.dataset.generator.clone()
                    };
                    let net = generate_network(&config).map_err(|source| WorkbenchError::Graph { id: k, source })?;
                    graphs.push((net.graph, net.bc));
                }
            }
            let mut rows = Vec::new();
            for (g, bc) in &graphs {
                rows.push(bench_graph(
                    g,
                    bc,
                    &model,
                    &cfg.dataset.rheology_params,
                    &cfg.dataset.fixed_point,
                    a.nonlinear,
                    cfg.bench,
                )?);
            }
            let report = BenchReport {
                variant: model.variant().id(),
                protocol: cfg.bench,
                rows,
            };
            emit(out, "bench", &report.to_text(), &report)?;
            write_csv(&out.join("bench.csv"), &report.csv_rows())
        }
        Command::Predict(a) => {
            let model = GnnModel::load(&a.checkpoint)?;
            let (graph, bc) = read_graph(&a.graph)?;
            let pred = model.predict(&graph, &bc)?;
            let path = out.join(format!("{}.model{}.prediction.json", stem(&a.graph), model.variant().id()));
            std::fs::create_dir_all(out).map_err(|e| WorkbenchError::io(out, e))?;
            write_core_json(&path, &prediction_file(&pred))?;
            println!("{}", path.display());
            Ok(())
        }
        Command::ImportAnatomical(a) => {
            let (graph, _) = read_graph_lenient(&a.graph)?;
            let sets = detect_boundaries_by_diameter(&graph, a.arterial_root, a.venous_root, a.threshold)?;
            let bc = sets.with_pressures(a.inlet_pressure, a.outlet_pressure, a.hematocrit)?;
            let path = out.join(format!("{}.imported.json", stem(&a.graph)));
            std::fs::create_dir_all(out).map_err(|e| WorkbenchError::io(out, e))?;
            write_graph(&path, &graph, &bc)?;
            println!(
                "{}: {} nodes, {} edges, {} inlets, {} outlets",
                path.display(),
                graph.node_count(),
                graph.edge_count(),
                sets.inlets.len(),
                sets.outlets.len()
            );
            if let Some(rh) = a.solve {
                let sol = solve(&graph, &bc, rh, &cfg.dataset.rheology_params, &cfg.dataset.fixed_point)?;
                let sp = out.join(format!("{}.{rh}.solution.json", stem(&a.graph)));
                write_core_json(&sp, &SolutionFile::from_solution(&sol))?;
                println!(
                    "{}: constitutive residual {:.3e} mmHg, mass residual {:.3e} µm³/s",
                    sp.display(),
                    sol.meta.residuals.constitutive,
                    sol.meta.residuals.mass
                );
            }
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct GenerateRow {
    id: usize,
    seed: u64,
    nodes: usize,
    edges: usize,
    inlets: usize,
    outlets: usize,
    domain_side_um: f64,
}
