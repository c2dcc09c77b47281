mod common;

use std::collections::BTreeMap;

use hoverlink_core::linkage::{DEFAULT_MAX_ITERATIONS, DEFAULT_TOLERANCE};
use hoverlink_core::{apply_edit, highlight, parse, solve_edit, Axis, EditRequest, EditStatus, MarkerSet};
use proptest::prelude::*;

fn program() -> impl Strategy<Value = String> {
    any::<u64>().prop_map(|seed| common::straight_line_program(&mut common::rng(seed)))
}

fn axis() -> impl Strategy<Value = Axis> {
    prop::sample::select(Axis::ALL.to_vec())
}

proptest! {
    #[test]
    fn exact_edits_hit_their_targets(
        src in program(),
        pick in any::<prop::sample::Index>(),
        axes in prop::collection::btree_set(axis(), 1..3),
        deltas in prop::collection::vec(-4.0..4.0f64, 4),
    ) {
        let base = common::run(&src);
        prop_assume!(base.is_ok());
        let wp = &base.waypoints[pick.index(base.waypoints.len())];
        let targets: BTreeMap<Axis, f64> =
            axes.iter().zip(&deltas).map(|(a, d)| (*a, wp.axis(*a).value + d)).collect();
        let request = EditRequest { waypoint_index: wp.index, targets: targets.clone() };
        let program = parse(&src).unwrap();
        let proposal = solve_edit(&program, &MarkerSet::default(), &request, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        prop_assert!(proposal.iterations <= DEFAULT_MAX_ITERATIONS);
        if matches!(proposal.status, EditStatus::Unsolvable { .. }) {
            prop_assert!(proposal.rewrites.is_empty());
            prop_assert!(apply_edit(&src, &proposal).is_err());
            return Ok(());
        }
        let edited = apply_edit(&src, &proposal).unwrap();
        let reparsed = parse(&edited).unwrap();
        prop_assert_eq!(common::shape(&reparsed), common::shape(&program));
        let after = common::run(&edited);
        prop_assert!(after.is_ok());
        let moved = &after.waypoints[wp.index];
        match &proposal.status {
            EditStatus::Exact => {
                for (a, t) in &targets {
                    let tol = if wp.axis(*a).trace.is_affine() { 1e-9 } else { 1e-6 };
                    prop_assert!((moved.axis(*a).value - t).abs() <= tol * t.abs().max(1.0),
                        "{:?}: got {} want {}", a, moved.axis(*a).value, t);
                }
            }
            EditStatus::BestEffort { achieved } => {
                for (a, v) in achieved {
                    prop_assert!((moved.axis(*a).value - v).abs() <= 1e-9 * v.abs().max(1.0));
                }
            }
            EditStatus::Unsolvable { .. } => unreachable!(),
        }
        let mut spans: Vec<_> = proposal.rewrites.iter().map(|r| r.span).collect();
        spans.dedup();
        prop_assert_eq!(spans.len(), proposal.rewrites.len());
    }

    #[test]
    fn rewritten_spans_are_highlighted(src in program(), pick in any::<prop::sample::Index>(), a in axis(), d in -4.0..4.0f64) {
        let base = common::run(&src);
        prop_assume!(base.is_ok());
        let wp = &base.waypoints[pick.index(base.waypoints.len())];
        let request = EditRequest::single(wp.index, a, wp.axis(a).value + d);
        let proposal = solve_edit(&parse(&src).unwrap(), &MarkerSet::default(), &request, DEFAULT_TOLERANCE, DEFAULT_MAX_ITERATIONS).unwrap();
        let lit = highlight(&base, wp.index, &[a]).unwrap();
        for rw in &proposal.rewrites {
            prop_assert!(lit.spans.contains(&rw.span));
        }
        if lit.spans.is_empty() {
            let unsolvable = matches!(proposal.status, EditStatus::Unsolvable { .. });
            prop_assert!(unsolvable || proposal.rewrites.is_empty());
        }
    }
}
