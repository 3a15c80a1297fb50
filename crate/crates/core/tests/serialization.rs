mod common;

use nodalsl::forward::reference_position;
use nodalsl::io::{forward, nodes_csv, parse_nodes_csv, ProblemConfig, Summary};
use nodalsl::{Case, NodalDataset, NodalLayer, NodalPoint};
use proptest::prelude::*;

fn dataset(case: Case, layers: Vec<(u32, f64, Vec<f64>)>) -> NodalDataset {
    NodalDataset {
        layers: layers
            .into_iter()
            .map(|(n, k, xs)| NodalLayer {
                n,
                k,
                nodes: xs
                    .into_iter()
                    .enumerate()
                    .map(|(j, x)| NodalPoint { n, j: j as i64, x, reference: reference_position(case, n, j as i64) })
                    .collect(),
            })
            .collect(),
    }
}

fn layers_strategy() -> impl Strategy<Value = Vec<(u32, f64, Vec<f64>)>> {
    prop::collection::btree_map(5u32..2000, (1.0..1e4f64, prop::collection::vec(1e-300..1.0f64, 1..20)), 1..6).prop_map(
        |m| {
            m.into_iter()
                .map(|(n, (k, xs))| (n, k, xs.into_iter().filter(|x| *x < 1.0).collect::<Vec<_>>()))
                .filter(|(_, _, xs)| !xs.is_empty())
                .collect()
        },
    )
}

proptest! {
    #[test]
    fn nodes_csv_round_trip_is_bit_stable(layers in layers_strategy(), case_ix in 0usize..3) {
        prop_assume!(!layers.is_empty());
        let case = [Case::I, Case::II, Case::III][case_ix];
        let ds = dataset(case, layers);
        let bytes = nodes_csv(&ds);
        let back = parse_nodes_csv(&bytes, case).unwrap();
        for (a, b) in ds.layers.iter().zip(&back.layers) {
            prop_assert_eq!(a.k.to_bits(), b.k.to_bits());
            for (p, q) in a.nodes.iter().zip(&b.nodes) {
                prop_assert_eq!(p.x.to_bits(), q.x.to_bits());
                prop_assert_eq!((p.n, p.j), (q.n, q.j));
            }
        }
        prop_assert_eq!(&back, &ds);
        prop_assert_eq!(nodes_csv(&back), bytes);
    }
}

const TRIVIAL: &str = "q = \"0\"\nh = 0\nH = 0\ngamma0 = 0\ngamma1 = 0\nxi0 = \"1/2\"\nxi1 = \"1/2\"\nn_list = [10]\n";

#[test]
fn trivial_problem_nodes_sit_on_the_reference_grid() {
    let out = forward(&ProblemConfig::from_toml_str(TRIVIAL).unwrap()).unwrap();
    let layer = out.dataset.layer(10).unwrap();
    assert_eq!(layer.nodes.len(), 10);
    for p in &layer.nodes {
        assert!((p.x - (p.j as f64 + 0.5) / 10.0).abs() < 1e-12);
    }
}

#[test]
fn forward_output_is_deterministic() {
    let text = TRIVIAL.replace("q = \"0\"", "q = \"cos(pi*x) + x\"").replace("[10]", "[12, 20, 35]");
    let config = ProblemConfig::from_toml_str(&text).unwrap();
    let a = forward(&config).unwrap();
    let b = forward(&config).unwrap();
    assert_eq!(nodes_csv(&a.dataset), nodes_csv(&b.dataset));
    assert_eq!(a.metadata, b.metadata);
    assert_eq!(a.metadata["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(a.metadata["problem"]["case"], "i");
}

#[test]
fn summary_has_the_documented_keys() {
    let ds = dataset(Case::I, vec![(20, 62.8, (0..20).map(|j| (j as f64 + 0.5) / 20.0).collect())]);
    let res = nodalsl::inverse::invert(
        &ds,
        Case::I,
        common::rational("1/2"),
        common::rational("1/5"),
        &Default::default(),
        None,
        None,
    )
    .unwrap();
    let v = serde_json::to_value(Summary::new(&res, None)).unwrap();
    for key in ["case", "combo_constants", "resolved", "q_mean_subtracted", "errors", "layers_used"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["combo_constants"]["gamma0_minus_h"], 0.0);
}
