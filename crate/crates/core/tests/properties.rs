mod common;

use capillary_core::boundary::{classify_nodes, detect_boundaries_by_diameter};
use capillary_core::io::{self, SolutionFile};
use capillary_core::*;
use common::network;
use proptest::prelude::*;

/// Random connected graph: a random tree plus a few extra non-parallel edges.
fn arb_graph() -> impl Strategy<Value = VascularGraph> {
    (3usize..30).prop_flat_map(|n| {
        (
            proptest::collection::vec(0usize..1000, n - 1),
            proptest::collection::vec((0usize..n, 0usize..n), 0..6),
            proptest::collection::vec((-1e3f64..1e3, -1e3f64..1e3, -1e3f64..1e3), n),
            proptest::collection::vec((2.0f64..20.0, 1.0f64..200.0), n + 6),
        )
            .prop_map(move |(parents, extra, coords, geom)| {
                let mut edges = Vec::new();
                let mut seen = std::collections::HashSet::new();
                for (k, p) in parents.iter().enumerate() {
                    let child = k + 1;
                    let parent = p % child;
                    seen.insert((parent.min(child), parent.max(child)));
                    edges.push(Edge::new(parent, child));
                }
                for (a, b) in extra {
                    if a != b && seen.insert((a.min(b), a.max(b))) {
                        edges.push(Edge::new(a, b));
                    }
                }
                let m = edges.len();
                VascularGraph::new(
                    coords.into_iter().map(|(x, y, z)| [x, y, z]).collect(),
                    edges,
                    geom[..m].iter().map(|g| g.0).collect(),
                    geom[..m].iter().map(|g| g.1).collect(),
                )
                .unwrap()
            })
    })
}

/// Union-find restricted to edges above the threshold.
fn flood_fill_oracle(g: &VascularGraph, root: usize, threshold: f64) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..g.node_count()).collect();
    fn find(p: &mut Vec<usize>, x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        p[x] = r;
        r
    }
    for (i, e) in g.edges().iter().enumerate() {
        if g.diameters()[i] > threshold {
            let (a, b) = (find(&mut parent, e.source), find(&mut parent, e.target));
            parent[a] = b;
        }
    }
    let r = find(&mut parent, root);
    (0..g.node_count()).filter(|&j| j != root && find(&mut parent, j) == r).collect()
}

#[test]
fn generated_network_round_trips_field_by_field() {
    let net = network(8, [35, 40]);
    assert!(net.graph.node_count() >= 250);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    io::write_graph(&path, &net.graph, &net.bc).unwrap();
    let (g, bc) = io::read_graph(&path).unwrap();
    assert_eq!(g.coords(), net.graph.coords());
    assert_eq!(g.edges(), net.graph.edges());
    assert_eq!(g.diameters(), net.graph.diameters());
    assert_eq!(g.lengths(), net.graph.lengths());
    assert_eq!(bc, net.bc);
}

#[test]
fn solution_file_round_trips() {
    let net = network(1, [10, 12]);
    let sol = solve_nonlinear(&net.graph, &net.bc, &RheologyParams::default(), &FixedPointConfig::default()).unwrap();
    let file = SolutionFile::from_solution(&sol);
    let text = io::to_json_string(&file).unwrap();
    let back: SolutionFile = io::from_json_str(&text).unwrap();
    assert_eq!(back, file);
    assert_eq!(back.hematocrits.as_ref().unwrap().len(), net.graph.edge_count());
    assert_eq!(back.iterations, Some(sol.meta.iterations));
    let restored = back.into_solution().unwrap();
    assert_eq!(restored.pressures, sol.pressures);
    assert_eq!(restored.flows, sol.flows);
    assert_eq!(restored.hematocrits, sol.hematocrits);
    assert_eq!(restored.meta.rheology, sol.meta.rheology);
}

#[test]
fn imported_graph_boundaries_match_flood_fill_oracle() {
    let net = network(4, [60, 60]);
    let g = &net.graph;
    let a_root = net.bc.inlets()[0].node;
    let v_root = net.bc.outlets()[0].node;
    for threshold in [6.0, 8.0, 10.0] {
        match detect_boundaries_by_diameter(g, a_root, v_root, threshold) {
            Ok(sets) => {
                assert_eq!(sets.inlets, flood_fill_oracle(g, a_root, threshold));
                assert_eq!(sets.outlets, flood_fill_oracle(g, v_root, threshold));
            }
            Err(Error::EmptyBoundary(_)) | Err(Error::OverlappingBoundary(_)) => {}
            Err(e) => panic!("{e}"),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn incidence_rows_have_two_opposite_entries(g in arb_graph()) {
        let c = build_incidence(&g);
        for i in 0..c.nrows() {
            let row: Vec<i8> = (0..c.ncols()).map(|j| c.get(i, j)).collect();
            prop_assert_eq!(row.iter().filter(|&&v| v != 0).count(), 2);
            prop_assert_eq!(row.iter().map(|&v| v as i32).sum::<i32>(), 0);
        }
    }

    #[test]
    fn classification_is_a_partition(g in arb_graph(), split in 0.1f64..0.9) {
        let n = g.node_count();
        let k = ((n as f64 * split) as usize).clamp(1, n - 1);
        let bc = BoundaryConditions::new(
            vec![BoundaryNode { node: 0, pressure: 30.0 }],
            (k..n).step_by(2).map(|node| BoundaryNode { node, pressure: 10.0 }).collect(),
            0.45,
        );
        prop_assume!(bc.is_ok());
        let bc = bc.unwrap();
        let classes = classify_nodes(&g, &bc).unwrap();
        prop_assert_eq!(classes.len(), n);
        let inlets = classes.iter().filter(|c| **c == NodeClass::Inlet).count();
        let outlets = classes.iter().filter(|c| **c == NodeClass::Outlet).count();
        prop_assert_eq!(inlets, bc.inlets().len());
        prop_assert_eq!(outlets, bc.outlets().len());
    }

    #[test]
    fn detection_is_monotone_in_threshold(g in arb_graph(), t1 in 2.0f64..20.0, dt in 0.0f64..10.0) {
        let n = g.node_count();
        let small = boundary::large_vessel_region(&g, 0, t1);
        let large = boundary::large_vessel_region(&g, 0, t1 + dt);
        prop_assert!(large.iter().all(|j| small.contains(j)));
        prop_assert!(small.iter().all(|&j| j < n && j != 0));
    }

    #[test]
    fn graph_file_round_trip_is_identity(g in arb_graph(), h in 0.01f64..0.99) {
        let n = g.node_count();
        let bc = BoundaryConditions::new(
            vec![BoundaryNode { node: 0, pressure: 31.234567890123 }],
            vec![BoundaryNode { node: n - 1, pressure: 1.0 / 3.0 }],
            h,
        ).unwrap();
        let text = io::graph_to_string(&g, &bc).unwrap();
        let (g2, bc2) = io::graph_from_str(&text).unwrap();
        prop_assert_eq!(g2, g);
        prop_assert_eq!(bc2, bc);
    }
}
