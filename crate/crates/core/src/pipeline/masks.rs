use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How mask membership turns into training weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaskSemantics {
    /// 2 on always-consistent windows, 1 on the rest of the mask.
    #[default]
    Loss,
    /// 1 on always-consistent windows, 0.5 on the rest of the mask.
    Algorithm1,
}

/// Per-window filtering state across inner iterations.
///
/// `M_j` holds windows that are confident now and (after the first
/// iteration) kept the label they had in the previous one. `S_j ⊆ M_j`
/// additionally requires the label to have matched in every iteration so
/// far.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskState {
    iteration: usize,
    previous: Option<Vec<usize>>,
    always_consistent: Vec<bool>,
    mask: Vec<bool>,
    semi: Vec<bool>,
    weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskUpdate {
    pub mask_size: usize,
    pub semi_size: usize,
    /// Fewer than two windows qualified; every window got weight 1.
    pub fallback: bool,
}

impl MaskState {
    pub fn new(n: usize) -> Self {
        Self {
            iteration: 0,
            previous: None,
            always_consistent: vec![true; n],
            mask: vec![false; n],
            semi: vec![false; n],
            weights: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    /// Number of completed updates.
    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn previous(&self) -> Option<&[usize]> {
        self.previous.as_deref()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn semi(&self) -> &[bool] {
        &self.semi
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn update_masks(
        &mut self,
        labels: &[usize],
        confidence: &[f64],
        threshold: f64,
        semantics: MaskSemantics,
    ) -> Result<MaskUpdate> {
        let n = self.len();
        if labels.len() != n || confidence.len() != n {
            return Err(Error::InvalidArgument(format!(
                "mask update needs {n} labels and confidences, got {} and {}",
                labels.len(),
                confidence.len()
            )));
        }
        let (full, half) = match semantics {
            MaskSemantics::Loss => (2.0, 1.0),
            MaskSemantics::Algorithm1 => (1.0, 0.5),
        };
        for x in 0..n {
            let same = self.previous.as_ref().is_none_or(|p| p[x] == labels[x]);
            self.always_consistent[x] &= same;
            self.mask[x] = confidence[x] >= threshold && same;
            self.semi[x] = self.mask[x] && self.always_consistent[x];
            self.weights[x] = if self.semi[x] {
                full
            } else if self.mask[x] {
                half
            } else {
                0.0
            };
        }
        let mask_size = self.mask.iter().filter(|&&m| m).count();
        let semi_size = self.semi.iter().filter(|&&m| m).count();
        let fallback = mask_size < 2;
        if fallback {
            self.weights.iter_mut().for_each(|w| *w = 1.0);
        }
        self.previous = Some(labels.to_vec());
        self.iteration += 1;
        Ok(MaskUpdate {
            mask_size,
            semi_size,
            fallback,
        })
    }
}
