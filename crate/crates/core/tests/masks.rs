mod common;

use actcluster::pipeline::{MaskSemantics, MaskState};
use proptest::prelude::*;

#[test]
fn worked_example_follows_set_definitions() {
    for sem in [MaskSemantics::Loss, MaskSemantics::Algorithm1] {
        let mut state = MaskState::new(5);
        for (j, step) in common::mask_worked_example().iter().enumerate() {
            state.update_masks(&step.labels, &step.confidence, 0.95, sem).unwrap();
            assert_eq!(common::members(state.mask()), step.mask, "M_{}", j + 1);
            assert_eq!(common::members(state.semi()), step.semi, "S_{}", j + 1);
            let expected = match sem {
                MaskSemantics::Loss => &step.weights,
                MaskSemantics::Algorithm1 => &step.algorithm1_weights,
            };
            assert_eq!(state.weights(), expected.as_slice(), "weights at iteration {}", j + 1);
        }
    }
}

#[test]
fn mismatched_lengths_rejected() {
    let mut s = MaskState::new(3);
    assert!(s
        .update_masks(&[0, 1], &[0.99, 0.99], 0.95, MaskSemantics::Loss)
        .is_err());
}

proptest! {
    #![proptest_config(common::prop_config(256))]
    #[test]
    fn semi_mask_is_a_subset_with_graded_weights(
        iters in proptest::collection::vec(
            proptest::collection::vec((0usize..3, 0.5f64..1.0), 12), 1..6)
    ) {
        let mut state = MaskState::new(12);
        let mut ever_flipped = [false; 12];
        let mut prev: Option<Vec<usize>> = None;
        for it in &iters {
            let labels: Vec<usize> = it.iter().map(|p| p.0).collect();
            let conf: Vec<f64> = it.iter().map(|p| p.1).collect();
            let up = state.update_masks(&labels, &conf, 0.95, MaskSemantics::Loss).unwrap();
            if let Some(p) = &prev {
                for x in 0..12 {
                    ever_flipped[x] |= p[x] != labels[x];
                }
            }
            for x in 0..12 {
                prop_assert!(!state.semi()[x] || state.mask()[x]);
                if state.semi()[x] {
                    prop_assert!(!ever_flipped[x]);
                }
                if !up.fallback {
                    let w = state.weights()[x];
                    prop_assert!(w == 0.0 || w == 1.0 || w == 2.0);
                    prop_assert_eq!(w == 2.0, state.semi()[x]);
                    prop_assert_eq!(w > 0.0, state.mask()[x]);
                } else {
                    prop_assert_eq!(state.weights()[x], 1.0);
                }
            }
            prev = Some(labels);
        }
    }
}
