//! Generated datasets: graphs, full-order solutions and the split manifest.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use capillary_core::io::{read_graph, read_json, write_graph, write_json, SolutionFile};
use capillary_core::{
    generate_network, solve_linear, solve_nonlinear, BoundaryConditions, FixedPointConfig, FlowSolution,
    GeneratorConfig, Rheology, RheologyParams, VascularGraph,
};
use capillary_gnn::{GnnConfig, Sample};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, WorkbenchError};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split `{other}` (expected train|val|test)")),
        }
    }
}

/// What to build: `count` graphs from `generator`, solved with every rheology listed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetSpec {
    pub generator: GeneratorConfig,
    pub count: usize,
    /// Train, validation and test fractions.
    pub fractions: [f64; 3],
    pub rheologies: Vec<Rheology>,
    pub rheology_params: RheologyParams,
    pub fixed_point: FixedPointConfig,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        Self {
            generator: GeneratorConfig::default(),
            count: 250,
            fractions: [0.8, 0.1, 0.1],
            rheologies: vec![Rheology::Linear],
            rheology_params: RheologyParams::default(),
            fixed_point: FixedPointConfig::default(),
        }
    }
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.rheology_params.validate()?;
        self.fixed_point.validate()?;
        let sum: f64 = self.fractions.iter().sum();
        if self.fractions.iter().any(|f| !(*f >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
            return Err(WorkbenchError::Config(format!(
                "split fractions {:?} must be nonnegative and sum to 1",
                self.fractions
            )));
        }
        if self.rheologies.is_empty() {
            return Err(WorkbenchError::Config("at least one rheology is required".into()));
        }
        Ok(())
    }

    /// Per-split sizes; validation and test are rounded, training takes the rest.
    pub fn split_sizes(&self) -> [usize; 3] {
        let n = self.count;
        let val = ((n as f64 * self.fractions[1]).round() as usize).min(n);
        let test = ((n as f64 * self.fractions[2]).round() as usize).min(n - val);
        [n - val - test, val, test]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: usize,
    pub seed: u64,
    pub split: Split,
    pub nodes: usize,
    pub edges: usize,
    pub inlets: usize,
    /// Paths relative to the manifest directory.
    pub graph: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<String>,
}

impl ManifestEntry {
    pub fn solution_path(&self, rheology: Rheology) -> Option<&str> {
        match rheology {
            Rheology::Linear => self.linear.as_deref(),
            Rheology::Nonlinear => self.nonlinear.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    /// SHA-256 of the generator configuration as JSON.
    pub generator_hash: String,
    pub spec: DatasetSpec,
    pub entries: Vec<ManifestEntry>,
}

/// One loaded graph with its full-order solution.
#[derive(Debug, Clone)]
pub struct GraphCase {
    pub id: usize,
    pub graph: VascularGraph,
    pub bc: BoundaryConditions,
    pub solution: FlowSolution,
}

/// A prepared training or evaluation sample tagged with its graph id.
#[derive(Debug, Clone)]
pub struct GraphSample {
    pub id: usize,
    pub sample: Sample,
}

pub fn generator_hash(config: &GeneratorConfig) -> String {
    let json = serde_json::to_string(config).expect("generator config serialises");
    hex::encode(Sha256::digest(json.as_bytes()))
}

/// Seed of graph `id`, derived from the generator seed.
pub fn graph_seed(base: u64, id: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(id as u64)
}

pub fn solve(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    rheology: Rheology,
    params: &RheologyParams,
    fixed_point: &FixedPointConfig,
) -> capillary_core::Result<FlowSolution> {
    match rheology {
        Rheology::Linear => solve_linear(graph, bc, params),
        Rheology::Nonlinear => solve_nonlinear(graph, bc, params, fixed_point),
    }
}

fn rel(root: &Path, rel: &str) -> PathBuf {
    root.join(rel)
}

fn graph_rel(id: usize) -> String {
    format!("graphs/g{id:05}.json")
}

fn solution_rel(id: usize, rheology: Rheology) -> String {
    format!("solutions/{rheology}/g{id:05}.json")
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| WorkbenchError::io(path, e))
}

/// Reads a graph and one of its solutions, checking sizes agree.
fn read_case(root: &Path, entry: &ManifestEntry, rheology: Rheology) -> Result<GraphCase> {
    let (graph, bc) = read_graph(&rel(root, &entry.graph))?;
    let path = entry.solution_path(rheology).ok_or_else(|| WorkbenchError::Manifest {
        path: root.join(MANIFEST_FILE),
        message: format!("graph {} has no {rheology} solution", entry.id),
    })?;
    let solution = read_json::<SolutionFile>(&rel(root, path))?.into_solution()?;
    if solution.pressures.len() != graph.node_count()
        || solution.flows.len() != graph.edge_count()
        || solution.meta.rheology != rheology
    {
        return Err(WorkbenchError::Manifest {
            path: rel(root, path),
            message: format!("solution does not match graph {}", entry.id),
        });
    }
    Ok(GraphCase {
        id: entry.id,
        graph,
        bc,
        solution,
    })
}

fn build_entry(root: &Path, spec: &DatasetSpec, id: usize, split: Split) -> Result<ManifestEntry> {
    let seed = graph_seed(spec.generator.seed, id);
    let graph_path = graph_rel(id);
    let mut entry = ManifestEntry {
        id,
        seed,
        split,
        nodes: 0,
        edges: 0,
        inlets: 0,
        graph: graph_path.clone(),
        linear: None,
        nonlinear: None,
    };
    for &rh in &spec.rheologies {
        match rh {
            Rheology::Linear => entry.linear = Some(solution_rel(id, rh)),
            Rheology::Nonlinear => entry.nonlinear = Some(solution_rel(id, rh)),
        }
    }

    // Resume: keep a graph whose files all parse and agree.
    let existing = read_graph(&rel(root, &graph_path)).ok();
    let (graph, bc) = match existing {
        Some(pair) => pair,
        None => {
            let net = generate_network(&GeneratorConfig {
                seed,
                ..spec.generator.clone()
            })
            .map_err(|source| WorkbenchError::Graph { id, source })?;
            write_graph(&rel(root, &graph_path), &net.graph, &net.bc)?;
            (net.graph, net.bc)
        }
    };
    entry.nodes = graph.node_count();
    entry.edges = graph.edge_count();
    entry.inlets = bc.inlets().len();
    for &rh in &spec.rheologies {
        if read_case(root, &entry, rh).is_ok() {
            continue;
        }
        let sol = solve(&graph, &bc, rh, &spec.rheology_params, &spec.fixed_point)
            .map_err(|source| WorkbenchError::Graph { id, source })?;
        write_json(&rel(root, entry.solution_path(rh).expect("path set above")), &SolutionFile::from_solution(&sol))?;
    }
    Ok(entry)
}

/// Generates and solves the dataset under `root`, reusing valid files from an
/// earlier run, and writes `manifest.json`.
pub fn build_dataset(root: &Path, spec: &DatasetSpec) -> Result<DatasetManifest> {
    spec.validate()?;
    let hash = generator_hash(&spec.generator);
    if root.join(MANIFEST_FILE).exists() {
        let (old, _) = DatasetManifest::load(root)?;
        if old.generator_hash != hash {
            return Err(WorkbenchError::Manifest {
                path: root.join(MANIFEST_FILE),
                message: "existing dataset was built with a different generator configuration".into(),
            });
        }
    }
    create_dir(&root.join("graphs"))?;
    for rh in &spec.rheologies {
        create_dir(&root.join("solutions").join(rh.to_string()))?;
    }
    let [train, val, _] = spec.split_sizes();
    let split_of = |id: usize| {
        if id < train {
            Split::Train
        } else if id < train + val {
            Split::Val
        } else {
            Split::Test
        }
    };
    let entries = (0..spec.count)
        .into_par_iter()
        .map(|id| build_entry(root, spec, id, split_of(id)))
        .collect::<Result<Vec<_>>>()?;
    let manifest = DatasetManifest {
        format_version: MANIFEST_VERSION,
        generator_hash: hash,
        spec: spec.clone(),
        entries,
    };
    manifest.save(root)?;
    Ok(manifest)
}

impl DatasetManifest {
    pub fn save(&self, root: &Path) -> Result<()> {
        Ok(write_json(&root.join(MANIFEST_FILE), self)?)
    }

    /// Loads `path`, which is either the manifest file or its directory.
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let file = if path.is_dir() { path.join(MANIFEST_FILE) } else { path.to_path_buf() };
        let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest: Self = read_json(&file)?;
        if manifest.format_version != MANIFEST_VERSION {
            return Err(WorkbenchError::Manifest {
                path: file,
                message: format!("unsupported format version {}", manifest.format_version),
            });
        }
        manifest.check_splits(&file)?;
        Ok((manifest, root))
    }

    fn check_splits(&self, file: &Path) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.id) {
                return Err(WorkbenchError::Manifest {
                    path: file.to_path_buf(),
                    message: format!("graph {} listed twice", e.id),
                });
            }
        }
        Ok(())
    }

    pub fn entries_in(&self, split: Split) -> impl Iterator<Item = &ManifestEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn split_counts(&self) -> [usize; 3] {
        [Split::Train, Split::Val, Split::Test].map(|s| self.entries_in(s).count())
    }

    /// Checks that every referenced file exists and parses for `rheology`.
    pub fn verify(&self, root: &Path, rheology: Rheology) -> Result<()> {
        self.entries
            .par_iter()
            .try_for_each(|e| read_case(root, e, rheology).map(|_| ()))
    }

    pub fn load_cases(&self, root: &Path, split: Split, rheology: Rheology) -> Result<Vec<GraphCase>> {
        let entries: Vec<_> = self.entries_in(split).collect();
        entries.par_iter().map(|e| read_case(root, e, rheology)).collect()
    }

    /// Samples of one split prepared for `config`.
    pub fn load_samples(&self, root: &Path, split: Split, config: &GnnConfig) -> Result<Vec<GraphSample>> {
        let cases = self.load_cases(root, split, config.variant.rheology())?;
        prepare_samples(&cases, config, &self.spec.rheology_params)
    }
}

pub fn prepare_samples(cases: &[GraphCase], config: &GnnConfig, params: &RheologyParams) -> Result<Vec<GraphSample>> {
    cases
        .iter()
        .map(|c| {
            Ok(GraphSample {
                id: c.id,
                sample: Sample::new(&c.graph, &c.bc, Some(&c.solution), config, params)?,
            })
        })
        .collect()
}
