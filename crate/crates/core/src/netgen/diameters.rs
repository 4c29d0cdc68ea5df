//! Murray-type diameter assignment along the flow direction.

use rand::Rng;

use crate::boundary::BoundaryConditions;
use crate::graph::VascularGraph;

/// Parent diameter from its daughters, `(Σ dᵢ⁴)^(1/4)`.
pub fn murray_parent(daughters: &[f64]) -> f64 {
    daughters.iter().map(|d| d.powi(4)).sum::<f64>().powf(0.25)
}

/// Second daughter when the parent and one daughter are known,
/// `(D_p⁴ − d₁⁴)^(1/4)`; zero when `d₁ ≥ D_p`.
pub fn murray_daughter(parent: f64, daughter: f64) -> f64 {
    (parent.powi(4) - daughter.powi(4)).max(0.0).powf(0.25)
}

/// Assigns diameters to an oriented graph whose edges all point forward in
/// `order`. Inlet edges get `d_max`; single outflows inherit the parent,
/// confluences combine their inflows, and bifurcations sample one daughter
/// uniformly and solve the other from the fourth-power rule. Everything is
/// clamped to `[d_min, d_max]`.
pub fn assign_diameters<R: Rng>(
    graph: &VascularGraph,
    order: &[usize],
    bc: &BoundaryConditions,
    bounds: [f64; 2],
    rng: &mut R,
) -> Vec<f64> {
    let [d_min, d_max] = bounds;
    let m = graph.edge_count();
    let mut d: Vec<Option<f64>> = vec![None; m];
    let mut is_inlet = vec![false; graph.node_count()];
    for b in bc.inlets() {
        is_inlet[b.node] = true;
        for &e in graph.incident_edges(b.node) {
            d[e] = Some(d_max);
        }
    }
    for &v in order {
        let mut ins = Vec::new();
        let mut outs = Vec::new();
        for &e in graph.incident_edges(v) {
            if graph.edges()[e].target == v {
                ins.push(d[e].unwrap_or(d_max));
            } else if d[e].is_none() {
                outs.push(e);
            }
        }
        if outs.is_empty() {
            continue;
        }
        let parent = match ins.len() {
            _ if is_inlet[v] => d_max,
            0 => d_max,
            1 => ins[0],
            _ => murray_parent(&ins).clamp(d_min, d_max),
        };
        let mut remaining = parent;
        for (k, &e) in outs.iter().enumerate() {
            let left = outs.len() - k;
            let value = if left == 1 {
                remaining
            } else {
                let upper = (remaining.powi(4) - (left - 1) as f64 * d_min.powi(4)).max(0.0).powf(0.25);
                let pick = if upper > d_min { rng.gen_range(d_min..=upper) } else { d_min };
                remaining = murray_daughter(remaining, pick);
                pick
            };
            d[e] = Some(value.clamp(d_min, d_max));
        }
    }
    d.into_iter().map(|x| x.unwrap_or(d_max).clamp(d_min, d_max)).collect()
}
