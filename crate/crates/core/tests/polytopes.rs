mod common;

use common::*;
use proptest::prelude::*;
use squint::polytopes::*;

fn classes() -> Vec<(&'static str, ConceptClass)> {
    vec![
        ("k6m3", ConceptClass::k_subsets(6, 3).unwrap()),
        ("k8m2", ConceptClass::k_subsets(8, 2).unwrap()),
        ("diamond", ConceptClass::DagPaths(Dag::diamond())),
        ("dag6", ConceptClass::DagPaths(Dag::from_edges(6, &SIX_NODE_EDGES, 0, 5).unwrap())),
        (
            "explicit",
            ConceptClass::explicit(vec![
                vec![1, 0, 0, 1],
                vec![0, 1, 0, 1],
                vec![1, 1, 1, 0],
                vec![0, 0, 1, 1],
                vec![1, 0, 1, 0],
            ])
            .unwrap(),
        ),
    ]
}

fn as_f64(v: &Vertex) -> Vec<f64> {
    v.iter().map(|&b| f64::from(b)).collect()
}

#[test]
fn six_node_dag_paths() {
    let class = ConceptClass::DagPaths(Dag::from_edges(6, &SIX_NODE_EDGES, 0, 5).unwrap());
    let paths = enumerate_vertices(&class, DEFAULT_VERTEX_CAP).unwrap();
    // Count by dynamic programming over the topological order.
    let mut count = [0u32; 6];
    count[0] = 1;
    for v in 0..6 {
        for &(a, b) in &SIX_NODE_EDGES {
            if a == v {
                count[b] += count[a];
            }
        }
    }
    assert_eq!(paths.len(), count[5] as usize);
    for p in &paths {
        assert!(class.hull_residual(&as_f64(p)).unwrap() <= 1e-12);
    }
}

#[test]
fn enumerated_vertices_satisfy_hull_constraints() {
    for (name, class) in classes() {
        let cons = class.hull_constraints();
        let verts = enumerate_vertices(&class, DEFAULT_VERTEX_CAP).unwrap();
        let mut sorted = verts.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), verts.len(), "{name}: duplicates");
        for v in &verts {
            let x = as_f64(v);
            assert!(cons.iter().all(|c| c.violation(&x) == 0.0), "{name}");
            assert!(class.hull_residual(&x).unwrap() <= 1e-12, "{name}");
        }
    }
}

#[test]
fn ksubsets_projection_matches_dual_sweep() {
    let class = ConceptClass::k_subsets(4, 2).unwrap();
    let mut rng = SplitMix(42);
    for _ in 0..200 {
        let u: Vec<f64> = (0..4).map(|_| rng.range(0.001, 0.999)).collect();
        let got = project(&class, &u).unwrap();
        let oracle = ksubsets_projection_oracle(&u, 2);
        for (a, b) in got.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn member_is_a_fixed_point() {
    let class = ConceptClass::DagPaths(Dag::diamond());
    let u = [0.3, 0.7, 0.3, 0.7];
    let p = project(&class, &u).unwrap();
    for (a, b) in p.iter().zip(&u) {
        assert!((a - b).abs() < 1e-9);
    }
}

fn interior(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6f64..(1.0 - 1e-6), k)
}

fn class_and_point() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0..classes().len()).prop_flat_map(|i| {
        let k = classes()[i].1.dim();
        (Just(i), interior(k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn projection_is_idempotent_and_pythagorean((i, u) in class_and_point()) {
        let (_, class) = &classes()[i];
        let p = project(class, &u).unwrap();
        prop_assert!(class.hull_residual(&p).unwrap() <= 1e-9);
        let pp = project(class, &p).unwrap();
        for (a, b) in p.iter().zip(&pp) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        for v in enumerate_vertices(class, DEFAULT_VERTEX_CAP).unwrap() {
            let v = as_f64(&v);
            prop_assert!(delta2(&v, &p) <= delta2(&v, &u) + 1e-8);
        }
    }

    #[test]
    fn ksubsets_projection_preserves_order(u in interior(7), m in 1usize..7) {
        let class = ConceptClass::k_subsets(7, m).unwrap();
        let p = project(&class, &u).unwrap();
        for a in 0..7 {
            for b in 0..7 {
                if u[a] < u[b] {
                    prop_assert!(p[a] <= p[b]);
                }
            }
        }
    }

    #[test]
    fn decomposition_round_trip(i in 0..5usize, seed in any::<u64>()) {
        let (_, class) = &classes()[i];
        let verts = enumerate_vertices(class, DEFAULT_VERTEX_CAP).unwrap();
        let mut rng = SplitMix(seed);
        let weights: Vec<f64> = verts.iter().map(|_| if rng.uniform() < 0.5 { 0.0 } else { rng.uniform() }).collect();
        let total: f64 = weights.iter().sum();
        prop_assume!(total > 0.0);
        let k = class.dim();
        let mut u = vec![0.0; k];
        for (v, w) in verts.iter().zip(&weights) {
            for j in 0..k {
                u[j] += w / total * v[j] as f64;
            }
        }
        let d = decompose(class, &u).unwrap();
        prop_assert!(d.concepts.len() <= 2 * k);
        prop_assert!((d.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(d.weights.iter().all(|&w| w > 0.0));
        for (a, b) in d.reconstruct().iter().zip(&u) {
            prop_assert!((a - b).abs() <= 1e-8);
        }
        for c in &d.concepts {
            prop_assert!(verts.contains(c));
        }
    }

    #[test]
    fn step_closed_form_is_the_posterior(u in 0.01f64..0.99, ue in 0.01f64..0.99, l in -1.0f64..1.0, e in 1usize..8) {
        let eta = 0.5f64.powi(e as i32);
        let closed = ue * (1.0 + eta * (u - 1.0) * l) / (1.0 + eta * (u - ue) * l);
        let x1 = -(eta * (u * l - l)).ln_1p();
        let x0 = -(eta * u * l).ln_1p();
        let post = unconstrained_update(&[ue], &[x1], &[x0]).unwrap()[0];
        prop_assert!((closed - post).abs() <= 1e-12);
    }
}

#[test]
fn dag_json_round_trip_and_edge_order() {
    let text = r#"{
        "nodes": ["s", "a", "b", "t"],
        "edges": [
            {"source": "a", "target": "t", "index": 3},
            {"source": "s", "target": "a", "index": 1},
            {"source": "s", "target": "b", "index": 2},
            {"source": "b", "target": "t", "index": 4}
        ],
        "source": "s",
        "sink": "t"
    }"#;
    let dag = Dag::from_json(text).unwrap();
    assert_eq!(dag.k(), 4);
    let class = ConceptClass::DagPaths(dag.clone());
    let mut paths = enumerate_vertices(&class, DEFAULT_VERTEX_CAP).unwrap();
    paths.sort();
    assert_eq!(paths, vec![vec![0, 1, 0, 1], vec![1, 0, 1, 0]]);
    let again = Dag::from_spec(&dag.to_spec()).unwrap();
    assert_eq!(again, dag);
}

#[test]
fn malformed_specs_are_rejected() {
    let cyclic = r#"{"nodes":["s","t"],"edges":[
        {"source":"s","target":"t","index":1},{"source":"t","target":"s","index":2}],
        "source":"s","sink":"t"}"#;
    assert!(Dag::from_json(cyclic).is_err());
    let extra = r#"{"kind":"k_subsets","k":4,"m":2,"weight":1}"#;
    assert!(serde_json::from_str::<ClassSpec>(extra).is_err());
    let ok: ClassSpec = serde_json::from_str(r#"{"kind":"k_subsets","k":4,"m":2}"#).unwrap();
    assert_eq!(ConceptClass::from_spec(&ok).unwrap().dim(), 4);
    assert!(ConceptClass::k_subsets(3, 4).is_err());
}

#[test]
fn vertex_cap_is_enforced() {
    let class = ConceptClass::k_subsets(20, 10).unwrap();
    assert!(matches!(
        enumerate_vertices(&class, 1000),
        Err(squint::Error::VertexCapExceeded { .. })
    ));
}

#[test]
fn points_outside_the_hull_do_not_decompose() {
    let class = ConceptClass::k_subsets(4, 2).unwrap();
    assert!(matches!(
        decompose(&class, &[0.5, 0.5, 0.5, 0.6]),
        Err(squint::Error::NotInHull { .. })
    ));
}
