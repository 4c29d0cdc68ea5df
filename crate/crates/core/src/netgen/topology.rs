//! Boundary stubs, shortest-path selection, trifurcation removal and flow
//! orientation.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use super::delaunay::Point;
use super::tessellate::{components, dist, restrict, Candidates};
use crate::boundary::BoundaryConditions;
use crate::graph::{Edge, VascularGraph};
use crate::linear::{solve_linear, RheologyParams};
use crate::error::Result;

/// Candidate network with appended boundary stub nodes.
#[derive(Debug, Clone)]
pub struct StubbedNetwork {
    pub network: Candidates,
    pub inlets: Vec<usize>,
    pub outlets: Vec<usize>,
}

/// Attaches `n_in` stubs from the highest vertices up to `z = 1` and `n_out`
/// stubs from the lowest vertices down to `z = 0`. Vertices closer than
/// `min_stub` to their plane are skipped. `None` if too few vertices remain.
pub fn attach_stubs(core: &Candidates, n_in: usize, n_out: usize, min_stub: f64) -> Option<StubbedNetwork> {
    let n = core.coords.len();
    let mut by_z: Vec<usize> = (0..n).collect();
    by_z.sort_by(|&a, &b| core.coords[b][2].total_cmp(&core.coords[a][2]).then(a.cmp(&b)));
    let top: Vec<usize> = by_z
        .iter()
        .copied()
        .filter(|&j| 1.0 - core.coords[j][2] >= min_stub)
        .take(n_in)
        .collect();
    let bottom: Vec<usize> = by_z
        .iter()
        .rev()
        .copied()
        .filter(|&j| core.coords[j][2] >= min_stub && !top.contains(&j))
        .take(n_out)
        .collect();
    if top.len() < n_in || bottom.len() < n_out {
        return None;
    }
    let mut network = core.clone();
    let mut stub = |j: usize, z: f64| {
        let p = network.coords[j];
        let s = network.coords.len();
        network.coords.push([p[0], p[1], z]);
        network.edges.push((j, s));
        s
    };
    let inlets = top.iter().map(|&j| stub(j, 1.0)).collect();
    let outlets = bottom.iter().map(|&j| stub(j, 0.0)).collect();
    Some(StubbedNetwork {
        network,
        inlets,
        outlets,
    })
}

#[derive(Clone, Copy, PartialEq)]
struct State {
    cost: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn adjacency(c: &Candidates) -> Vec<Vec<(usize, usize)>> {
    let mut adj = vec![Vec::new(); c.coords.len()];
    for (i, &(a, b)) in c.edges.iter().enumerate() {
        adj[a].push((b, i));
        adj[b].push((a, i));
    }
    adj
}

/// Multi-source Dijkstra with Euclidean edge weights; returns the
/// predecessor edge of every reached node.
fn shortest_path_forest(c: &Candidates, adj: &[Vec<(usize, usize)>], sources: &[usize]) -> Vec<Option<usize>> {
    let n = c.coords.len();
    let mut best = vec![f64::INFINITY; n];
    let mut pred = vec![None; n];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        best[s] = 0.0;
        heap.push(State { cost: 0.0, node: s });
    }
    while let Some(State { cost, node }) = heap.pop() {
        if cost > best[node] {
            continue;
        }
        for &(w, e) in &adj[node] {
            let next = cost + dist(&c.coords[node], &c.coords[w]);
            if next < best[w] {
                best[w] = next;
                pred[w] = Some(e);
                heap.push(State { cost: next, node: w });
            }
        }
    }
    pred
}

fn trace(c: &Candidates, pred: &[Option<usize>], mut node: usize, out: &mut HashSet<usize>) {
    while let Some(e) = pred[node] {
        out.insert(e);
        let (a, b) = c.edges[e];
        node = if a == node { b } else { a };
    }
}

/// Union of shortest paths from every outlet to its nearest inlet and from
/// every inlet to its nearest outlet; leftover components are joined by
/// further shortest paths. Unused nodes are dropped and boundary indices
/// remapped.
pub fn select_paths(s: &StubbedNetwork) -> StubbedNetwork {
    let c = &s.network;
    let adj = adjacency(c);
    let mut chosen = HashSet::new();
    let from_inlets = shortest_path_forest(c, &adj, &s.inlets);
    for &o in &s.outlets {
        trace(c, &from_inlets, o, &mut chosen);
    }
    let from_outlets = shortest_path_forest(c, &adj, &s.outlets);
    for &i in &s.inlets {
        trace(c, &from_outlets, i, &mut chosen);
    }
    let n = c.coords.len();
    let mut boundary = vec![false; n];
    for &j in s.inlets.iter().chain(&s.outlets) {
        boundary[j] = true;
    }
    loop {
        let edges: Vec<(usize, usize)> = chosen.iter().map(|&e| c.edges[e]).collect();
        let mut in_use = boundary.clone();
        for &(a, b) in &edges {
            in_use[a] = true;
            in_use[b] = true;
        }
        let label = components(n, &edges);
        let anchor = label[s.inlets[0]];
        let Some(stray) = (0..n).find(|&j| in_use[j] && label[j] != anchor) else {
            break;
        };
        let sources: Vec<usize> = (0..n).filter(|&j| in_use[j] && label[j] == anchor).collect();
        let pred = shortest_path_forest(c, &adj, &sources);
        let before = chosen.len();
        trace(c, &pred, stray, &mut chosen);
        if chosen.len() == before {
            break;
        }
    }
    let mut keep = boundary;
    let mut edge_ids: Vec<usize> = chosen.into_iter().collect();
    edge_ids.sort_unstable();
    let edges: Vec<(usize, usize)> = edge_ids.iter().map(|&e| c.edges[e]).collect();
    for &(a, b) in &edges {
        keep[a] = true;
        keep[b] = true;
    }
    let mut map = vec![usize::MAX; n];
    let mut k = 0;
    for j in 0..n {
        if keep[j] {
            map[j] = k;
            k += 1;
        }
    }
    StubbedNetwork {
        network: restrict(&c.coords, &edges, &keep),
        inlets: s.inlets.iter().map(|&j| map[j]).collect(),
        outlets: s.outlets.iter().map(|&j| map[j]).collect(),
    }
}

fn unit(v: Point) -> Point {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    if n == 0.0 {
        v
    } else {
        v.map(|x| x / n)
    }
}

fn diff(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

/// Splits every node of degree > 3: the shortest incident branch `(v, u)` is
/// detached and reconnected to an auxiliary node inserted on the incident
/// edge `(v, w)` pointing closest towards `u`. The auxiliary node sits at
/// the projection of `u` onto that edge, clamped to the middle half.
/// Existing node and edge indices are preserved; new ones are appended.
pub fn remove_trifurcations(graph: &VascularGraph) -> VascularGraph {
    if graph.max_degree() <= 3 {
        return graph.clone();
    }
    let mut coords = graph.coords().to_vec();
    let mut edges = graph.edges().to_vec();
    let mut diameters = graph.diameters().to_vec();
    let mut lengths = graph.lengths().to_vec();
    let mut adj: Vec<Vec<usize>> = (0..graph.node_count()).map(|j| graph.incident_edges(j).to_vec()).collect();

    for v in 0..graph.node_count() {
        while adj[v].len() > 3 {
            let e_u = *adj[v]
                .iter()
                .min_by(|&&a, &&b| lengths[a].total_cmp(&lengths[b]).then(a.cmp(&b)))
                .expect("nonempty");
            let u = edges[e_u].other(v);
            let toward_u = unit(diff(&coords[u], &coords[v]));
            let e_w = *adj[v]
                .iter()
                .filter(|&&e| e != e_u)
                .max_by(|&&a, &&b| {
                    let ca: f64 = {
                        let d = unit(diff(&coords[edges[a].other(v)], &coords[v]));
                        d.iter().zip(&toward_u).map(|(x, y)| x * y).sum()
                    };
                    let cb: f64 = {
                        let d = unit(diff(&coords[edges[b].other(v)], &coords[v]));
                        d.iter().zip(&toward_u).map(|(x, y)| x * y).sum()
                    };
                    ca.total_cmp(&cb).then(b.cmp(&a))
                })
                .expect("degree above 3");
            let w = edges[e_w].other(v);
            let vw = diff(&coords[w], &coords[v]);
            let vu = diff(&coords[u], &coords[v]);
            let vw2: f64 = vw.iter().map(|x| x * x).sum();
            let t = if vw2 > 0.0 {
                (vu.iter().zip(&vw).map(|(x, y)| x * y).sum::<f64>() / vw2).clamp(0.25, 0.75)
            } else {
                0.5
            };
            let a_pos = [0, 1, 2].map(|k| coords[v][k] + t * vw[k]);
            let a = coords.len();
            coords.push(a_pos);

            // (v, w) -> (v, a) + (a, w), keeping the stored orientation
            let lw = lengths[e_w];
            let new_edge = edges.len();
            if edges[e_w].source == v {
                edges[e_w] = Edge::new(v, a);
                edges.push(Edge::new(a, w));
            } else {
                edges[e_w] = Edge::new(a, v);
                edges.push(Edge::new(w, a));
            }
            lengths[e_w] = t * lw;
            lengths.push((1.0 - t) * lw);
            diameters.push(diameters[e_w]);

            // (v, u) -> (a, u)
            let old = dist(&coords[v], &coords[u]);
            let new = dist(&a_pos, &coords[u]);
            if old > 0.0 && new > 0.0 {
                lengths[e_u] *= new / old;
            }
            edges[e_u] = if edges[e_u].source == v { Edge::new(a, u) } else { Edge::new(u, a) };

            adj[v].retain(|&e| e != e_u);
            for e in adj[w].iter_mut() {
                if *e == e_w {
                    *e = new_edge;
                }
            }
            adj.push(vec![e_w, new_edge, e_u]);
        }
    }
    VascularGraph::new_relaxed(coords, edges, diameters, lengths).expect("splitting preserves graph validity")
}

/// Orientation along the flow of a provisional linear solve.
#[derive(Debug, Clone)]
pub struct Oriented {
    pub graph: VascularGraph,
    /// Nodes sorted by decreasing provisional pressure; every edge points
    /// forward in this order.
    pub order: Vec<usize>,
}

/// Solves with the given provisional diameters and reorients every edge from
/// higher to lower pressure (ties broken by node index).
pub fn orient_by_flow(graph: &VascularGraph, bc: &BoundaryConditions, provisional_diameters: Vec<f64>) -> Result<Oriented> {
    let provisional = graph.with_diameters(provisional_diameters)?;
    let sol = solve_linear(&provisional, bc, &RheologyParams::default())?;
    let p = &sol.pressures;
    let mut order: Vec<usize> = (0..graph.node_count()).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let mut rank = vec![0usize; order.len()];
    for (r, &j) in order.iter().enumerate() {
        rank[j] = r;
    }
    let edges = graph
        .edges()
        .iter()
        .map(|e| {
            if rank[e.source] <= rank[e.target] {
                *e
            } else {
                Edge::new(e.target, e.source)
            }
        })
        .collect();
    let graph = VascularGraph::new(
        graph.coords().to_vec(),
        edges,
        graph.diameters().to_vec(),
        graph.lengths().to_vec(),
    )?;
    Ok(Oriented { graph, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn star(spokes: usize) -> VascularGraph {
        let mut coords = vec![[0.0, 0.0, 0.0]];
        let mut edges = Vec::new();
        let mut lengths = Vec::new();
        for k in 0..spokes {
            let ang = k as f64 * std::f64::consts::TAU / spokes as f64;
            let r = 1.0 + 0.1 * k as f64;
            coords.push([r * ang.cos(), r * ang.sin(), 0.05 * k as f64]);
            edges.push(Edge::new(0, k + 1));
            lengths.push(dist(&coords[0], &coords[k + 1]));
        }
        VascularGraph::new(coords, edges, vec![6.0; spokes], lengths).unwrap()
    }

    #[test]
    fn four_spoke_star_gets_one_auxiliary_node() {
        let g = star(4);
        let h = remove_trifurcations(&g);
        assert_eq!(h.node_count(), 6);
        assert_eq!(h.edge_count(), 5);
        assert!(h.max_degree() <= 3);
        assert!(h.is_weakly_connected());
        // the shortest spoke (to node 1) now hangs off the new node
        assert!(h.incident_edges(1).iter().all(|&e| h.edges()[e].other(1) == 5));
    }

    #[test]
    fn low_degree_graph_is_unchanged() {
        let g = star(3);
        assert_eq!(remove_trifurcations(&g), g);
    }

    #[test]
    fn split_lengths_add_up() {
        let g = star(6);
        let h = remove_trifurcations(&g);
        assert!(h.max_degree() <= 3);
        assert_eq!(h.edge_count() - g.edge_count(), h.node_count() - g.node_count());
        for (i, e) in h.edges().iter().enumerate() {
            let d = dist(&h.coords()[e.source], &h.coords()[e.target]);
            assert!((h.lengths()[i] - d).abs() < 1e-12);
        }
    }
}
