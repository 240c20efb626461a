use serde::{Deserialize, Serialize};

use crate::annotation::BBox;

use super::backend::CandidateDetection;
use super::embedding::{cosine, Embedding};
use super::nms::nms;
use super::prompts::PromptStore;
use super::AutolabelError;

/// How similarities to a class's several prompts combine into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Best-matching prompt wins; prompts act as alternative exemplars.
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AutoLabelConfig {
    pub score_threshold: f64,
    pub nms_iou: f64,
    pub max_detections: usize,
    pub class_agnostic_nms: bool,
    pub aggregation: Aggregation,
}

impl Default for AutoLabelConfig {
    fn default() -> Self {
        Self {
            score_threshold: 0.30,
            nms_iou: 0.50,
            max_detections: 300,
            class_agnostic_nms: false,
            aggregation: Aggregation::Max,
        }
    }
}

impl AutoLabelConfig {
    pub fn validate(&self) -> Result<(), AutolabelError> {
        if !(0.0..=1.0).contains(&self.score_threshold) {
            return Err(AutolabelError::Config(format!(
                "score_threshold {} outside [0, 1]",
                self.score_threshold
            )));
        }
        if !(self.nms_iou > 0.0 && self.nms_iou <= 1.0) {
            return Err(AutolabelError::Config(format!("nms_iou {} outside (0, 1]", self.nms_iou)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BBox,
    pub class_id: u32,
    pub score: f64,
}

/// Per-class similarity of an embedding to the store, classes ascending.
pub fn class_similarities(
    embedding: &Embedding,
    store: &PromptStore,
    aggregation: Aggregation,
) -> Result<Vec<(u32, f64)>, AutolabelError> {
    store
        .classes()
        .map(|(class_id, prompts)| {
            let sims = prompts
                .iter()
                .map(|p| cosine(embedding, &p.embedding))
                .collect::<Result<Vec<_>, _>>()?;
            let s = match aggregation {
                Aggregation::Max => sims.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Aggregation::Mean => sims.iter().sum::<f64>() / sims.len() as f64,
            };
            Ok((class_id, s))
        })
        .collect()
}

/// Best class for an embedding; ties go to the lowest class id.
pub fn best_class(
    embedding: &Embedding,
    store: &PromptStore,
    aggregation: Aggregation,
) -> Result<Option<(u32, f64)>, AutolabelError> {
    let mut best: Option<(u32, f64)> = None;
    for (class_id, s) in class_similarities(embedding, store, aggregation)? {
        if best.map_or(true, |(_, b)| s > b) {
            best = Some((class_id, s));
        }
    }
    Ok(best)
}

/// Scores and labels candidates before suppression: class by prompt
/// similarity, score = similarity × objectness, below-threshold dropped.
pub fn score_candidates(
    candidates: &[CandidateDetection],
    store: &PromptStore,
    config: &AutoLabelConfig,
) -> Result<Vec<Detection>, AutolabelError> {
    config.validate()?;
    if store.is_empty() {
        return Err(AutolabelError::EmptyPromptStore);
    }
    let mut out = Vec::new();
    for c in candidates {
        let Some((class_id, sim)) = best_class(&c.embedding, store, config.aggregation)? else {
            continue;
        };
        let score = (sim * c.objectness.clamp(0.0, 1.0)).min(1.0);
        if score >= config.score_threshold {
            out.push(Detection {
                bbox: c.bbox,
                class_id,
                score,
            });
        }
    }
    Ok(out)
}

/// Labels candidates with the best-matching prompted class, then applies
/// the threshold, NMS and the detection cap (highest scores kept).
pub fn classify_candidates(
    candidates: &[CandidateDetection],
    store: &PromptStore,
    config: &AutoLabelConfig,
) -> Result<Vec<Detection>, AutolabelError> {
    let scored = score_candidates(candidates, store, config)?;
    let mut kept = nms(&scored, config.nms_iou, config.class_agnostic_nms);
    kept.truncate(config.max_detections);
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb(v: &[f64]) -> Embedding {
        Embedding::new(v.to_vec()).unwrap()
    }

    fn cand(x: f64, e: &[f64], objectness: f64) -> CandidateDetection {
        CandidateDetection {
            bbox: BBox::new(x, 0.0, 10.0, 10.0),
            embedding: emb(e),
            objectness,
        }
    }

    fn store(entries: &[(u32, &[f64])]) -> PromptStore {
        let mut s = PromptStore::new();
        for (class_id, e) in entries {
            s.insert(*class_id, "f", BBox::new(0.0, 0.0, 1.0, 1.0), emb(e)).unwrap();
        }
        s
    }

    #[test]
    fn exact_match() {
        let s = store(&[(0, &[1.0, 0.0, 0.0]), (2, &[0.0, 0.0, 1.0])]);
        let out = classify_candidates(&[cand(0.0, &[0.0, 0.0, 1.0], 1.0)], &s, &AutoLabelConfig::default()).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].class_id, 2);
        assert!((out[0].score - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tie_goes_to_lowest_class() {
        // cos 0.5 to both prompts
        let s = store(&[(1, &[0.5, 0.75f64.sqrt(), 0.0]), (0, &[0.5, 0.0, 0.75f64.sqrt()])]);
        let out = classify_candidates(&[cand(0.0, &[1.0, 0.0, 0.0], 1.0)], &s, &AutoLabelConfig::default()).unwrap();
        assert_eq!(out[0].class_id, 0);
        assert!((out[0].score - 0.5).abs() < 1e-12);
    }

    #[test]
    fn below_threshold_dropped() {
        let s = store(&[(0, &[1.0, 0.0])]);
        // similarity 1, objectness 0.2
        let out = classify_candidates(&[cand(0.0, &[1.0, 0.0], 0.2)], &s, &AutoLabelConfig::default()).unwrap();
        assert!(out.is_empty());
    }

    #[test]
    fn multiple_prompts_take_max() {
        let s = store(&[(0, &[1.0, 0.0]), (0, &[0.0, 1.0]), (1, &[1.0, 1.0])]);
        let c = cand(0.0, &[0.0, 1.0], 1.0);
        let out = classify_candidates(&[c.clone()], &s, &AutoLabelConfig::default()).unwrap();
        assert_eq!(out[0].class_id, 0);
        let mean = AutoLabelConfig { aggregation: Aggregation::Mean, ..Default::default() };
        let out = classify_candidates(&[c], &s, &mean).unwrap();
        assert_eq!(out[0].class_id, 1);
    }

    #[test]
    fn errors() {
        let empty = PromptStore::new();
        assert!(matches!(
            classify_candidates(&[cand(0.0, &[1.0], 1.0)], &empty, &AutoLabelConfig::default()),
            Err(AutolabelError::EmptyPromptStore)
        ));
        let s = store(&[(0, &[1.0, 0.0])]);
        assert!(matches!(
            classify_candidates(&[cand(0.0, &[1.0, 0.0, 0.0], 1.0)], &s, &AutoLabelConfig::default()),
            Err(AutolabelError::DimensionMismatch { .. })
        ));
        let bad = AutoLabelConfig { nms_iou: 0.0, ..Default::default() };
        assert!(matches!(classify_candidates(&[], &s, &bad), Err(AutolabelError::Config(_))));
    }

    #[test]
    fn cap_keeps_highest_scores() {
        let s = store(&[(0, &[1.0, 0.0])]);
        let cands: Vec<_> = (0..5).map(|i| cand(f64::from(i) * 20.0, &[1.0, 0.0], 0.5 + f64::from(i) * 0.1)).collect();
        let cfg = AutoLabelConfig { max_detections: 2, ..Default::default() };
        let out = classify_candidates(&cands, &s, &cfg).unwrap();
        assert_eq!(out.iter().map(|d| d.bbox.x).collect::<Vec<_>>(), [80.0, 60.0]);
    }
}
