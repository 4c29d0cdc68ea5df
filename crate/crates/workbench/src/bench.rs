//! Wall-clock comparison of full-order solvers and surrogate inference.

use std::fmt::Write as _;
use std::time::Instant;

use capillary_core::{
    solve_linear, solve_nonlinear, BoundaryConditions, FixedPointConfig, RheologyParams, VascularGraph,
};
use capillary_gnn::{build_features, GnnModel};
use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchProtocol {
    pub warmup: usize,
    pub runs: usize,
}

impl Default for BenchProtocol {
    fn default() -> Self {
        Self { warmup: 1, runs: 5 }
    }
}

/// Median and spread of repeated runs, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Timing {
    pub fn from_samples(mut samples: Vec<f64>) -> Self {
        assert!(!samples.is_empty(), "timing needs at least one run");
        samples.sort_by(f64::total_cmp);
        let n = samples.len();
        let median = if n % 2 == 1 {
            samples[n / 2]
        } else {
            0.5 * (samples[n / 2 - 1] + samples[n / 2])
        };
        Self {
            median,
            min: samples[0],
            max: samples[n - 1],
        }
    }
}

/// Runs `f` `warmup` times untimed, then `runs` times timed.
pub fn time_runs<T, E>(protocol: BenchProtocol, mut f: impl FnMut() -> Result<T, E>) -> Result<Timing, E> {
    for _ in 0..protocol.warmup {
        f()?;
    }
    let mut samples = Vec::with_capacity(protocol.runs.max(1));
    for _ in 0..protocol.runs.max(1) {
        let t = Instant::now();
        std::hint::black_box(f()?);
        samples.push(t.elapsed().as_secs_f64());
    }
    Ok(Timing::from_samples(samples))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub nodes: usize,
    pub edges: usize,
    pub linear_solver: Timing,
    pub nonlinear_solver: Option<Timing>,
    pub surrogate: Timing,
    /// Linear solver median / surrogate median.
    pub speedup_linear: f64,
    pub speedup_nonlinear: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub variant: u8,
    pub protocol: BenchProtocol,
    pub rows: Vec<BenchRow>,
}

/// Surrogate inference time covers feature construction and the forward pass;
/// solver times exclude file I/O.
pub fn bench_graph(
    graph: &VascularGraph,
    bc: &BoundaryConditions,
    model: &GnnModel,
    params: &RheologyParams,
    fixed_point: &FixedPointConfig,
    with_nonlinear: bool,
    protocol: BenchProtocol,
) -> Result<BenchRow> {
    let linear = time_runs(protocol, || solve_linear(graph, bc, params))?;
    let nonlinear = if with_nonlinear {
        Some(time_runs(protocol, || solve_nonlinear(graph, bc, params, fixed_point))?)
    } else {
        None
    };
    let surrogate = time_runs(protocol, || {
        let inputs = build_features(graph, bc, model.variant(), model.config.scales);
        model.infer(&inputs)
    })?;
    Ok(BenchRow {
        nodes: graph.node_count(),
        edges: graph.edge_count(),
        speedup_linear: linear.median / surrogate.median,
        speedup_nonlinear: nonlinear.map(|t| t.median / surrogate.median),
        linear_solver: linear,
        nonlinear_solver: nonlinear,
        surrogate,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchCsvRow {
    pub nodes: usize,
    pub edges: usize,
    pub linear_median: f64,
    pub linear_min: f64,
    pub linear_max: f64,
    pub nonlinear_median: Option<f64>,
    pub nonlinear_min: Option<f64>,
    pub nonlinear_max: Option<f64>,
    pub surrogate_median: f64,
    pub surrogate_min: f64,
    pub surrogate_max: f64,
    pub speedup_linear: f64,
    pub speedup_nonlinear: Option<f64>,
}

impl BenchReport {
    pub fn csv_rows(&self) -> Vec<BenchCsvRow> {
        self.rows
            .iter()
            .map(|r| BenchCsvRow {
                nodes: r.nodes,
                edges: r.edges,
                linear_median: r.linear_solver.median,
                linear_min: r.linear_solver.min,
                linear_max: r.linear_solver.max,
                nonlinear_median: r.nonlinear_solver.map(|t| t.median),
                nonlinear_min: r.nonlinear_solver.map(|t| t.min),
                nonlinear_max: r.nonlinear_solver.map(|t| t.max),
                surrogate_median: r.surrogate.median,
                surrogate_min: r.surrogate.min,
                surrogate_max: r.surrogate.max,
                speedup_linear: r.speedup_linear,
                speedup_nonlinear: r.speedup_nonlinear,
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "model {} timings (median of {} after {} warm-up)",
            self.variant, self.protocol.runs, self.protocol.warmup
        );
        for r in &self.rows {
            let _ = write!(
                s,
                "  n={} m={}: linear {:.3e} s, surrogate {:.3e} s, speedup {:.2}",
                r.nodes, r.edges, r.linear_solver.median, r.surrogate.median, r.speedup_linear
            );
            if let (Some(t), Some(x)) = (r.nonlinear_solver, r.speedup_nonlinear) {
                let _ = write!(s, "; nonlinear {:.3e} s, speedup {x:.2}", t.median);
            }
            s.push('\n');
        }
        s
    }
}
