//! Turns a ranked candidate list into a batch of new runs: keep the
//! candidates scoring at least a fraction of the best score, seed with the
//! best one, then grow the batch by greedy maximin distance.

use serde::{Deserialize, Serialize};

use crate::criteria::RankedSample;
use crate::error::{invalid, Error, Result};
use crate::scalar::{lex_cmp, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    #[serde(default = "default_alpha")]
    pub cutoff_alpha: f64,
    pub batch_size: usize,
}

fn default_alpha() -> f64 {
    0.5
}

impl SelectionConfig {
    pub fn new(cutoff_alpha: f64, batch_size: usize) -> Result<Self> {
        let c = Self {
            cutoff_alpha,
            batch_size,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff_alpha > 0.0 && self.cutoff_alpha <= 1.0) {
            return Err(invalid(format!(
                "cutoff_alpha must lie in (0, 1], got {}",
                self.cutoff_alpha
            )));
        }
        if self.batch_size == 0 {
            return Err(invalid("batch_size must be at least 1"));
        }
        Ok(())
    }
}

/// Candidates whose score is at least `cutoff_alpha · max_score`, in rank
/// order. `ranked` must be sorted best-first.
pub fn cutoff_filter<T: Scalar>(
    ranked: &[RankedSample<T>],
    config: &SelectionConfig,
) -> Vec<RankedSample<T>> {
    let Some(best) = ranked.first() else {
        return Vec::new();
    };
    let threshold = T::of(config.cutoff_alpha) * best.score.value;
    let mut kept: Vec<_> = ranked
        .iter()
        .filter(|s| s.score.value >= threshold)
        .cloned()
        .collect();
    if kept.is_empty() {
        kept.push(best.clone());
    }
    kept
}

#[inline]
fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

/// Greedy maximin batch. The first point is the top-ranked candidate; each
/// subsequent point maximizes its distance to the existing design plus the
/// points already chosen. Ties go to the lexicographically smallest point.
pub fn maximin_select<T: Scalar>(
    candidates: &[RankedSample<T>],
    existing: &[Vec<T>],
    batch_size: usize,
) -> Result<Vec<Vec<T>>> {
    if candidates.is_empty() {
        return Err(invalid("maximin selection needs at least one candidate"));
    }
    if batch_size > candidates.len() {
        return Err(Error::InsufficientCandidates {
            available: candidates.len(),
            requested: batch_size,
        });
    }
    let seed = candidates[0].point.clone();
    let mut taken = vec![false; candidates.len()];
    taken[0] = true;
    let mut min_d: Vec<T> = candidates
        .iter()
        .map(|c| {
            existing
                .iter()
                .map(|e| sq_dist(&c.point, e))
                .fold(sq_dist(&c.point, &seed), T::min)
        })
        .collect();
    let mut batch = vec![seed];
    while batch.len() < batch_size {
        let mut best: Option<usize> = None;
        for (i, c) in candidates.iter().enumerate() {
            if taken[i] {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(j) => {
                    let better = min_d[i] > min_d[j]
                        || (min_d[i] == min_d[j]
                            && lex_cmp(&c.point, &candidates[j].point).is_lt());
                    Some(if better { i } else { j })
                }
            };
        }
        let i = best.expect("batch_size ≤ candidates");
        taken[i] = true;
        let p = candidates[i].point.clone();
        for (j, c) in candidates.iter().enumerate() {
            if !taken[j] {
                min_d[j] = min_d[j].min(sq_dist(&c.point, &p));
            }
        }
        batch.push(p);
    }
    Ok(batch)
}

/// Outcome of [`select_batch`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Selection<T> {
    pub batch: Vec<Vec<T>>,
    /// Candidates that survived the cutoff (after relaxation, if any).
    pub candidates: Vec<RankedSample<T>>,
    pub warnings: Vec<String>,
}

/// Cutoff plus maximin, dropping duplicate candidates and candidates that
/// coincide with existing runs. If the cutoff keeps fewer than
/// `batch_size` candidates the top `batch_size` ranked samples are used
/// instead and a warning is recorded.
pub fn select_batch<T: Scalar>(
    ranked: &[RankedSample<T>],
    existing: &[Vec<T>],
    config: &SelectionConfig,
) -> Result<Selection<T>> {
    config.validate()?;
    let mut unique: Vec<RankedSample<T>> = Vec::with_capacity(ranked.len());
    for s in ranked {
        if existing.iter().any(|e| e == &s.point) {
            continue;
        }
        if unique.iter().any(|u| u.point == s.point) {
            continue;
        }
        unique.push(s.clone());
    }
    if unique.len() < config.batch_size {
        return Err(Error::InsufficientCandidates {
            available: unique.len(),
            requested: config.batch_size,
        });
    }
    let mut warnings = Vec::new();
    let mut candidates = cutoff_filter(&unique, config);
    if candidates.len() < config.batch_size {
        warnings.push(format!(
            "cutoff kept {} candidates for a batch of {}; using the top {} ranked samples",
            candidates.len(),
            config.batch_size,
            config.batch_size
        ));
        candidates = unique[..config.batch_size].to_vec();
    }
    let batch = maximin_select(&candidates, existing, config.batch_size)?;
    Ok(Selection {
        batch,
        candidates,
        warnings,
    })
}
