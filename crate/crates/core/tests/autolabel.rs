mod support;

use framelabel_core::annotation::BBox;
use framelabel_core::autolabel::{
    classify_candidates, nms, score_candidates, AutoLabelConfig, CandidateDetection, Detection, Embedding,
    PromptStore,
};
use proptest::prelude::*;
use support::oracles::{nms_brute_force, RefDet};

fn emb(v: &[f64]) -> Embedding {
    Embedding::new(v.to_vec()).unwrap()
}

fn det_strategy() -> impl Strategy<Value = Detection> {
    (0u32..6, 0u32..6, 1u32..6, 1u32..6, 0u32..3, 0u32..5).prop_map(|(x, y, w, h, c, s)| Detection {
        // coarse grid and few score levels so ties and overlaps are common
        bbox: BBox::new(f64::from(x), f64::from(y), f64::from(w), f64::from(h)),
        class_id: c,
        score: f64::from(s) / 4.0,
    })
}

fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, dim).prop_filter("non-zero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

fn store_from(entries: &[(u32, Vec<f64>)]) -> PromptStore {
    let mut s = PromptStore::new();
    for (k, v) in entries {
        s.insert(*k, "f", BBox::new(0.0, 0.0, 1.0, 1.0), emb(v)).unwrap();
    }
    s
}

fn candidates(raw: &[(Vec<f64>, f64)]) -> Vec<CandidateDetection> {
    raw.iter()
        .enumerate()
        .map(|(i, (v, obj))| CandidateDetection {
            bbox: BBox::new(i as f64 * 20.0, 0.0, 10.0, 10.0),
            embedding: emb(v),
            objectness: *obj,
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn nms_equals_brute_force(
        dets in prop::collection::vec(det_strategy(), 0..=10),
        thr in prop::sample::select(vec![0.1, 0.25, 0.5, 0.75, 1.0]),
        agnostic in any::<bool>(),
    ) {
        let got = nms(&dets, thr, agnostic);
        let refs: Vec<RefDet> = dets.iter().map(|d| RefDet { bbox: [d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h], class_id: d.class_id, score: d.score }).collect();
        let want: Vec<Detection> = nms_brute_force(&refs, thr, agnostic).into_iter().map(|i| dets[i].clone()).collect();
        prop_assert_eq!(got, want);
    }

    #[test]
    fn adding_a_prompt_never_lowers_its_class(
        prompts in prop::collection::vec((0u32..4, vec_strategy(6)), 1..8),
        extra in (0u32..4, vec_strategy(6)),
        cands in prop::collection::vec((vec_strategy(6), 0.0..=1.0f64), 1..6),
    ) {
        let cfg = AutoLabelConfig { score_threshold: 0.0, ..Default::default() };
        let cands = candidates(&cands);
        let before = score_candidates(&cands, &store_from(&prompts), &cfg).unwrap();
        let mut more = prompts.clone();
        more.push(extra.clone());
        let after = score_candidates(&cands, &store_from(&more), &cfg).unwrap();
        for b in &before {
            if b.class_id == extra.0 {
                let a = after.iter().find(|a| a.bbox == b.bbox).unwrap();
                prop_assert_eq!(a.class_id, extra.0);
                prop_assert!(a.score >= b.score);
            }
        }
    }

    #[test]
    fn duplicate_prompt_is_a_no_op(
        prompts in prop::collection::vec((0u32..4, vec_strategy(5)), 1..8),
        pick in any::<prop::sample::Index>(),
        cands in prop::collection::vec((vec_strategy(5), 0.0..=1.0f64), 1..6),
    ) {
        let cfg = AutoLabelConfig::default();
        let cands = candidates(&cands);
        let before = classify_candidates(&cands, &store_from(&prompts), &cfg).unwrap();
        let mut more = prompts.clone();
        more.push(prompts[pick.index(prompts.len())].clone());
        prop_assert_eq!(classify_candidates(&cands, &store_from(&more), &cfg).unwrap(), before);
    }

    #[test]
    fn scaling_inputs_keeps_assignments(
        prompts in prop::collection::vec((0u32..4, vec_strategy(5)), 1..8),
        cands in prop::collection::vec((vec_strategy(5), 0.0..=1.0f64), 1..6),
        k in 0.01..100.0f64,
    ) {
        let cfg = AutoLabelConfig { score_threshold: 0.0, ..Default::default() };
        let scale = |v: &Vec<f64>| v.iter().map(|x| x * k).collect::<Vec<_>>();
        let a = score_candidates(&candidates(&cands), &store_from(&prompts), &cfg).unwrap();
        let sp: Vec<_> = prompts.iter().map(|(c, v)| (*c, scale(v))).collect();
        let sc: Vec<_> = cands.iter().map(|(v, o)| (scale(v), *o)).collect();
        let b = score_candidates(&candidates(&sc), &store_from(&sp), &cfg).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.class_id, y.class_id);
            prop_assert!((x.score - y.score).abs() < 1e-9);
        }
    }

    #[test]
    fn raising_threshold_only_removes(
        prompts in prop::collection::vec((0u32..3, vec_strategy(4)), 1..6),
        cands in prop::collection::vec((vec_strategy(4), 0.0..=1.0f64), 1..8),
        t1 in 0.0..=1.0f64, t2 in 0.0..=1.0f64,
    ) {
        let (lo, hi) = if t1 <= t2 { (t1, t2) } else { (t2, t1) };
        let store = store_from(&prompts);
        let cands = candidates(&cands);
        let at = |t| AutoLabelConfig { score_threshold: t, ..Default::default() };
        let pre_lo = score_candidates(&cands, &store, &at(lo)).unwrap();
        let pre_hi = score_candidates(&cands, &store, &at(hi)).unwrap();
        prop_assert!(pre_hi.iter().all(|d| pre_lo.contains(d)));
        let post_lo = classify_candidates(&cands, &store, &at(lo)).unwrap();
        let post_hi = classify_candidates(&cands, &store, &at(hi)).unwrap();
        prop_assert!(post_hi.iter().all(|d| post_lo.contains(d)));
    }
}
