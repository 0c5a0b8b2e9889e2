mod common;

use std::collections::BTreeMap;

use proptest::prelude::*;

use ontovec_core::{ModelKind, Store};

use common::{app, get, labels_for, publish};

fn store_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..25, 1usize..6).prop_flat_map(|(n, d)| {
        prop::collection::vec(
            prop::collection::vec(-10.0f64..10.0, d).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3)),
            n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn api_invariants(rows in store_strategy(), k in 1usize..40, pick in any::<prop::sample::Index>()) {
        let rt = tokio::runtime::Runtime::new().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let store = Store::new(dir.path());
        let vectors: BTreeMap<String, Vec<f64>> =
            rows.into_iter().enumerate().map(|(i, v)| (format!("X:{i:07}"), v)).collect();
        publish(&store, "x", "v1", 1, &[(ModelKind::HolE, vectors.clone())], &labels_for(&vectors));
        let (_, router) = app(&store, 2);
        let iris: Vec<&String> = vectors.keys().collect();
        let q = iris[pick.index(iris.len())];
        let other = iris[(pick.index(iris.len()) + 1) % iris.len()];

        let (closest, ab, ba) = rt.block_on(async {
            (
                get(&router, &format!("/api/v1/closest/x/hole?q={q}&k={k}")).await.json(),
                get(&router, &format!("/api/v1/similarity/x/hole?a={q}&b={other}")).await.json(),
                get(&router, &format!("/api/v1/similarity/x/hole?a={other}&b={q}")).await.json(),
            )
        });
        let rows = closest["rows"].as_array().unwrap();
        prop_assert_eq!(rows.len(), k.min(vectors.len() - 1));
        let scores: Vec<f64> = rows.iter().map(|r| r["score"].as_f64().unwrap()).collect();
        prop_assert!(scores.iter().all(|s| (-1.0..=1.0).contains(s)));
        prop_assert!(scores.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(rows.iter().all(|r| r["iri"] != q.as_str()));
        prop_assert_eq!(&ab["score"], &ba["score"]);
    }
}
