//! Randomized property tests for the structural invariants that hold on
//! every input, not just curated examples.

mod common;

use std::collections::BTreeSet;

use graphpse::eval::{clip_for_report, r_squared};
use graphpse::graph::{add_virtual_node, validate, Graph, NodeMark};
use graphpse::io::{graph_to_json_line, parse_graph_line};
use graphpse::structuralize::{structuralize_categorical, structuralize_edge_features};
use proptest::prelude::*;

/// An arbitrary valid featured graph: n nodes, random simple edges,
/// `channels` categorical channels with small cardinalities.
fn featured_graph() -> impl Strategy<Value = Graph> {
    (2usize..12, 1usize..4, any::<u64>()).prop_flat_map(|(n, channels, seed)| {
        let all_pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let m = all_pairs.len();
        (
            proptest::sample::subsequence(all_pairs, 0..=m),
            proptest::collection::vec(proptest::collection::vec(0u32..5, channels), n),
            Just(seed),
        )
            .prop_map(move |(edges, cats, seed)| {
                let mut g = Graph::new(format!("prop{seed}"), n, edges);
                g.node_categories = cats;
                g
            })
    })
}

proptest! {
    #[test]
    fn virtual_node_augmentation_invariants(g in featured_graph()) {
        let aug = add_virtual_node(&g).unwrap();
        prop_assert!(validate(&aug).is_valid());
        prop_assert_eq!(aug.num_nodes, g.num_nodes + 1);
        prop_assert_eq!(aug.edges.len(), g.edges.len() + g.num_nodes);
        prop_assert_eq!(aug.node_marks[g.num_nodes], NodeMark::VirtualNode);
        // Every original node gained exactly the edge to the virtual node.
        let vdeg = aug.edges.iter().filter(|&&(u, v)| u == g.num_nodes || v == g.num_nodes).count();
        prop_assert_eq!(vdeg, g.num_nodes);
    }

    #[test]
    fn structuralization_combinatorics(g in featured_graph()) {
        let d = g.node_categories[0].len();
        let present: usize = (0..d)
            .map(|i| {
                g.node_categories
                    .iter()
                    .map(|row| row[i])
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .sum();
        let res = structuralize_categorical(&g).unwrap();
        let t = &res.graph;
        prop_assert!(validate(t).is_valid());
        prop_assert_eq!(t.num_nodes, g.num_nodes + present);
        prop_assert_eq!(t.edges.len(), g.edges.len() + g.num_nodes * d);
        // The original nodes induce the original graph.
        let orig: BTreeSet<(usize, usize)> = g.edges.iter()
            .map(|&(u, v)| (u.min(v), u.max(v))).collect();
        let induced: BTreeSet<(usize, usize)> = t.edges.iter()
            .filter(|&&(u, v)| u < g.num_nodes && v < g.num_nodes)
            .map(|&(u, v)| (u.min(v), u.max(v))).collect();
        prop_assert_eq!(orig, induced);
        // Explicit categories are gone; only marks remain.
        prop_assert!(t.node_categories.iter().all(|row| row.is_empty()));
        for v in 0..g.num_nodes {
            prop_assert_eq!(t.node_marks[v], NodeMark::Original);
        }
        for v in g.num_nodes..t.num_nodes {
            prop_assert_eq!(t.node_marks[v], NodeMark::FeatureNode);
        }
    }

    #[test]
    fn edge_variant_combinatorics(g in featured_graph()) {
        prop_assume!(!g.edges.is_empty());
        let mut g = g;
        let d = g.node_categories[0].len();
        let node_present: usize = (0..d)
            .map(|i| {
                g.node_categories
                    .iter()
                    .map(|row| row[i])
                    .collect::<BTreeSet<_>>()
                    .len()
            })
            .sum();
        g.edge_categories = Some(g.edges.iter().enumerate().map(|(i, _)| (i % 3) as u32).collect());
        let n = g.num_nodes;
        let m = g.edges.len();
        let edge_present = g.edge_categories.as_ref().unwrap().iter().collect::<BTreeSet<_>>().len();
        let res = structuralize_edge_features(&g).unwrap();
        let t = &res.graph;
        prop_assert!(validate(t).is_valid());
        // One node per original edge, one feature-node per present category in
        // every channel (node channels and the edge-category channel);
        // original edges replaced by 2m incidence edges, plus one feature
        // edge per attributed (node, channel) pair: n·d + m.
        prop_assert_eq!(t.num_nodes, n + m + node_present + edge_present);
        prop_assert_eq!(t.edges.len(), 2 * m + n * d + m);
    }

    #[test]
    fn jsonl_round_trip(g in featured_graph()) {
        let line = graph_to_json_line(&g).unwrap();
        let back = parse_graph_line(&line, 1).unwrap();
        prop_assert_eq!(g, back);
    }

    #[test]
    fn r_squared_affine_invariance_and_clip(
        data in proptest::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..40),
        a in 0.5f64..3.0,
        b in -5.0f64..5.0,
    ) {
        let pred: Vec<f64> = data.iter().map(|&(p, _)| p).collect();
        let target: Vec<f64> = data.iter().map(|&(_, t)| t).collect();
        let scaled_pred: Vec<f64> = pred.iter().map(|p| a * p + b).collect();
        let scaled_target: Vec<f64> = target.iter().map(|t| a * t + b).collect();
        let r = r_squared(&pred, &target).unwrap();
        let rs = r_squared(&scaled_pred, &scaled_target).unwrap();
        match (r, rs) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-6 * (1.0 + x.abs())),
            (None, None) => {}
            _ => prop_assert!(false, "affine map changed definedness"),
        }
        if let Some(x) = r {
            let c = clip_for_report(x);
            prop_assert!(c >= -1.0);
            prop_assert_eq!(clip_for_report(c), c);
            if x >= -1.0 {
                prop_assert_eq!(c, x);
            }
        }
    }

    #[test]
    fn mean_predictor_r_squared_is_zero(target in proptest::collection::vec(-50.0f64..50.0, 3..40)) {
        let mean = target.iter().sum::<f64>() / target.len() as f64;
        let pred = vec![mean; target.len()];
        match r_squared(&pred, &target).unwrap() {
            Some(r) => prop_assert!(r.abs() < 1e-9),
            None => {
                // Constant target: SS_tot = 0 marks the dimension missing.
                let t0 = target[0];
                prop_assert!(target.iter().all(|&t| t == t0));
            }
        }
    }
}
