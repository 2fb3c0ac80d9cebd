use cpda::formats::{
    read_edge_list, read_model_json, read_observations, write_edge_list, write_model_json, write_observations_csv,
    write_observations_meta,
};
use cpda_core::cpdm::{Cpdm, Provenance, WeightedEdge};
use cpda_core::graph::Dag;
use cpda_core::observations::{Bits, Observation, ObservationSet};
use proptest::prelude::*;

fn arb_set() -> impl Strategy<Value = ObservationSet> {
    (1usize..=12, 1usize..=3).prop_flat_map(|(width, tests)| {
        let obs = (1..=width, 0u32..100, 0..tests, proptest::collection::vec(any::<bool>(), width), 1u32..=12)
            .prop_map(move |(mutated, ordinal, test, bits, weight_den)| Observation {
                mutated,
                ordinal,
                test,
                changed: Bits::from_fn(width, |k| bits[k - 1]),
                weight_den,
            });
        let coverage = proptest::collection::vec(proptest::collection::vec(any::<bool>(), width), tests);
        let ids = proptest::collection::vec("[a-z][a-z0-9 ,\"]{0,8}", tests);
        (proptest::collection::vec(obs, 0..30), coverage, ids).prop_map(move |(obs, coverage, ids)| {
            let ids: Vec<String> = ids.into_iter().enumerate().map(|(t, s)| format!("{t}{s}")).collect();
            let coverage = coverage.iter().map(|c| Bits::from_fn(width, |k| c[k - 1])).collect();
            ObservationSet::new(width, ids, coverage, obs).unwrap()
        })
    })
}

fn arb_model() -> impl Strategy<Value = Cpdm> {
    (
        proptest::collection::btree_map((1usize..=8, 1usize..=8), (-1.0f64..=1.0, any::<bool>()), 0..20),
        "[a-z_\"]{0,10}",
        1usize..1000,
        any::<u64>(),
    )
        .prop_map(|(edges, suite, nmpn, seed)| Cpdm {
            labels: (1..=8).map(|k| format!("v{k} \"q\"")).collect(),
            edges: edges
                .into_iter()
                .filter(|((p, c), _)| p != c)
                .map(|((parent, child), (weight, undefined))| WeightedEdge {
                    parent,
                    child,
                    weight,
                    undefined,
                })
                .collect(),
            provenance: Provenance { suite, nmpn, seed },
        })
}

proptest! {
    #[test]
    fn observations_round_trip_exactly(set in arb_set()) {
        let csv = write_observations_csv(&set);
        let meta = write_observations_meta(&set);
        let back = read_observations(&csv, &meta).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(write_observations_csv(&back), csv);
    }

    #[test]
    fn models_round_trip_bit_exactly(m in arb_model()) {
        let text = write_model_json(&m);
        let back = read_model_json(&text).unwrap();
        prop_assert_eq!(back.edges.len(), m.edges.len());
        for (a, b) in back.edges.iter().zip(&m.edges) {
            prop_assert_eq!(a.weight.to_bits(), b.weight.to_bits());
        }
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(write_model_json(&back), text);
    }

    #[test]
    fn edge_lists_round_trip(edges in proptest::collection::btree_set((1usize..=9, 1usize..=9), 0..25)) {
        let mut dag = Dag::new(9);
        for (p, c) in edges.into_iter().filter(|(p, c)| p < c) {
            dag.add_edge(p, c);
        }
        prop_assert_eq!(read_edge_list(&write_edge_list(&dag), 9).unwrap(), dag);
    }
}

#[test]
fn malformed_inputs_are_rejected() {
    assert!(read_edge_list("1 2 3\n", 3).is_err());
    assert!(read_edge_list("0 2\n", 3).is_err());
    assert!(read_edge_list("2 2\n", 3).is_err());
    assert!(read_model_json("{\"schema_version\": 99}").is_err());
    let meta = "{\"kind\":\"header\",\"schema_version\":1,\"width\":2,\"tests\":1}\n\
                {\"kind\":\"test\",\"index\":0,\"id\":\"t\",\"coverage\":\"11\"}\n";
    let header = "mutated,ordinal,test,weight,changed\n";
    assert!(read_observations(&format!("{header}1,0,t,1/1,10\n"), meta).is_ok());
    assert!(read_observations(&format!("{header}1,0,t,1/1,101\n"), meta).is_err());
    assert!(read_observations(&format!("{header}1,0,u,1/1,10\n"), meta).is_err());
    assert!(read_observations(&format!("{header}1,0,t,1/0,10\n"), meta).is_err());
    assert!(read_observations(&format!("{header}3,0,t,1/1,10\n"), meta).is_err());
}
