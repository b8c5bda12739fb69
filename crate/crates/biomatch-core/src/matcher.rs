//! Threshold decisions, one-to-many search, and the accuracy statistics
//! FMR / FNMR / EER / ROC with the n-gallery scaling approximation.
//!
//! The rate functions follow the similarity convention: a comparison
//! matches when its score exceeds the threshold, so `fmr` counts impostor
//! scores strictly above `t` and `fnmr` counts genuine scores at or below
//! `t`. Distance-oriented scores enter negated (scores and thresholds
//! both), which preserves those inequality directions verbatim.

use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::metric::{compare, MetricError, MetricPoint, Orientation, SpaceDescriptor};
use crate::store::TemplateId;

#[derive(Debug, Error)]
pub enum MatcherError {
    #[error("score set is empty")]
    EmptyScoreSet,
    #[error("threshold grid is empty")]
    EmptyGrid,
    #[error("threshold grid is not strictly increasing")]
    NonMonotonicGrid,
    #[error("scores must be finite")]
    NonFiniteScore,
    #[error("probe or gallery entry does not conform to the space: {0}")]
    SpaceMismatch(#[from] MetricError),
    #[error("roc i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

/// Whether a comparison came from matching or non-matching identities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreLabel {
    Genuine,
    Impostor,
}

/// Labelled comparison scores with the orientation they were produced in.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    scores: Vec<(f64, ScoreLabel)>,
    orientation: Orientation,
}

impl ScoreSet {
    pub fn new(orientation: Orientation) -> Self {
        ScoreSet {
            scores: Vec::new(),
            orientation,
        }
    }

    pub fn push(&mut self, value: f64, label: ScoreLabel) -> Result<(), MatcherError> {
        if !value.is_finite() {
            return Err(MatcherError::NonFiniteScore);
        }
        self.scores.push((value, label));
        Ok(())
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, ScoreLabel)> + '_ {
        self.scores.iter().copied()
    }

    pub fn genuine(&self) -> Vec<f64> {
        self.values(ScoreLabel::Genuine)
    }

    pub fn impostor(&self) -> Vec<f64> {
        self.values(ScoreLabel::Impostor)
    }

    fn values(&self, wanted: ScoreLabel) -> Vec<f64> {
        self.scores
            .iter()
            .filter(|(_, label)| *label == wanted)
            .map(|(value, _)| *value)
            .collect()
    }

    /// (genuine, impostor) scores in the similarity convention: negated
    /// when the set holds distances.
    pub fn similarity_scores(&self) -> (Vec<f64>, Vec<f64>) {
        let convert = |mut values: Vec<f64>| {
            if self.orientation == Orientation::Distance {
                for v in &mut values {
                    *v = -*v;
                }
            }
            values
        };
        (convert(self.genuine()), convert(self.impostor()))
    }
}

/// Strictly increasing candidate thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdGrid(Vec<f64>);

impl ThresholdGrid {
    pub fn new(values: Vec<f64>) -> Result<Self, MatcherError> {
        if values.is_empty() {
            return Err(MatcherError::EmptyGrid);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MatcherError::NonFiniteScore);
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(MatcherError::NonMonotonicGrid);
        }
        Ok(ThresholdGrid(values))
    }

    /// Midpoints between adjacent distinct values of the pooled score
    /// multiset, plus one point below the minimum and one above the
    /// maximum.
    pub fn midpoints(pooled: &[f64]) -> Result<Self, MatcherError> {
        if pooled.is_empty() {
            return Err(MatcherError::EmptyScoreSet);
        }
        if pooled.iter().any(|v| !v.is_finite()) {
            return Err(MatcherError::NonFiniteScore);
        }
        let mut distinct = pooled.to_vec();
        distinct.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        distinct.dedup();
        let mut grid = Vec::with_capacity(distinct.len() + 1);
        grid.push(distinct[0] - 1.0);
        for pair in distinct.windows(2) {
            grid.push(pair[0] + (pair[1] - pair[0]) / 2.0);
        }
        grid.push(distinct[distinct.len() - 1] + 1.0);
        ThresholdGrid::new(grid)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Outcome of thresholding one comparison score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchDecision {
    pub accept: bool,
    pub score: f64,
    pub threshold: f64,
}

/// Boundary-inclusive threshold rule: a distance matches at `score <= t`,
/// a similarity at `score >= t`.
pub fn decide(score: f64, threshold: f64, orientation: Orientation) -> MatchDecision {
    let accept = match orientation {
        Orientation::Distance => score <= threshold,
        Orientation::Similarity => score >= threshold,
    };
    MatchDecision {
        accept,
        score,
        threshold,
    }
}

/// Fraction of impostor scores strictly above the threshold.
pub fn fmr(impostor_scores: &[f64], threshold: f64) -> Result<f64, MatcherError> {
    if impostor_scores.is_empty() {
        return Err(MatcherError::EmptyScoreSet);
    }
    let above = impostor_scores.iter().filter(|&&s| s > threshold).count();
    Ok(above as f64 / impostor_scores.len() as f64)
}

/// Fraction of genuine scores at or below the threshold.
pub fn fnmr(genuine_scores: &[f64], threshold: f64) -> Result<f64, MatcherError> {
    if genuine_scores.is_empty() {
        return Err(MatcherError::EmptyScoreSet);
    }
    let at_or_below = genuine_scores.iter().filter(|&&s| s <= threshold).count();
    Ok(at_or_below as f64 / genuine_scores.len() as f64)
}

/// One operating point of the ROC table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
    v
}

/// (FMR, FNMR) rows for every grid threshold, in grid order.
pub fn roc_curve(
    genuine: &[f64],
    impostor: &[f64],
    grid: &ThresholdGrid,
) -> Result<Vec<RocPoint>, MatcherError> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(MatcherError::EmptyScoreSet);
    }
    if genuine.iter().chain(impostor).any(|v| !v.is_finite()) {
        return Err(MatcherError::NonFiniteScore);
    }
    let genuine_sorted = sorted(genuine);
    let impostor_sorted = sorted(impostor);
    Ok(grid
        .values()
        .iter()
        .map(|&t| {
            let above = impostor_sorted.len() - impostor_sorted.partition_point(|&s| s <= t);
            let at_or_below = genuine_sorted.partition_point(|&s| s <= t);
            RocPoint {
                threshold: t,
                fmr: above as f64 / impostor_sorted.len() as f64,
                fnmr: at_or_below as f64 / genuine_sorted.len() as f64,
            }
        })
        .collect())
}

/// Operating point where the two error rates are closest.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    /// (FMR + FNMR) / 2 at the selected threshold.
    pub eer: f64,
    pub threshold: f64,
    pub fmr_at_threshold: f64,
    pub fnmr_at_threshold: f64,
}

/// Selects the grid threshold minimising |FMR − FNMR| (ties to the
/// smallest threshold) and reports the mean of the two rates there.
pub fn eer(
    genuine: &[f64],
    impostor: &[f64],
    grid: &ThresholdGrid,
) -> Result<EerResult, MatcherError> {
    let rows = roc_curve(genuine, impostor, grid)?;
    let best = rows
        .iter()
        .min_by(|a, b| {
            let gap_a = (a.fmr - a.fnmr).abs();
            let gap_b = (b.fmr - b.fnmr).abs();
            gap_a.partial_cmp(&gap_b).expect("finite rates")
        })
        .expect("grid is nonempty");
    Ok(EerResult {
        eer: (best.fmr + best.fnmr) / 2.0,
        threshold: best.threshold,
        fmr_at_threshold: best.fmr,
        fnmr_at_threshold: best.fnmr,
    })
}

/// ROC rows rendered as CSV with 17-significant-digit decimal floats.
pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("threshold,fmr,fnmr\n");
    for p in points {
        writeln!(out, "{:.16e},{:.16e},{:.16e}", p.threshold, p.fmr, p.fnmr)
            .expect("string writes cannot fail");
    }
    out
}

pub fn write_roc_csv(path: &Path, points: &[RocPoint]) -> Result<(), MatcherError> {
    Ok(std::fs::write(path, roc_csv(points))?)
}

/// Single-comparison rates extrapolated to an n-identity gallery.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledRates {
    pub fmr_n: f64,
    pub fnmr_n: f64,
    /// The linear extrapolation is considered sufficient only while
    /// n·FMR < 1/10.
    pub valid: bool,
}

/// FMRⁿ ≈ n·FMR (clamped to 1) and FNMRⁿ ≈ FNMR.
///
/// # Panics
///
/// Panics when either rate lies outside [0, 1] or `n` is zero.
pub fn gallery_scaled_rates(fmr_1: f64, fnmr_1: f64, n: u32) -> ScaledRates {
    assert!((0.0..=1.0).contains(&fmr_1), "fmr must be a rate");
    assert!((0.0..=1.0).contains(&fnmr_1), "fnmr must be a rate");
    assert!(n > 0, "gallery size must be positive");
    let scaled = n as f64 * fmr_1;
    ScaledRates {
        fmr_n: scaled.min(1.0),
        fnmr_n: fnmr_1,
        valid: scaled < 0.1,
    }
}

/// Outcome of a one-to-many search.
#[derive(Debug, Clone, PartialEq)]
pub enum IdentifyOutcome {
    Identified(TemplateId),
    NoMatch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentificationResult {
    pub outcome: IdentifyOutcome,
    /// Best comparison score seen, absent for an empty gallery.
    pub best_score: Option<f64>,
    /// Gap between the best and second-best scores, zero when fewer than
    /// two records were compared.
    pub runner_up_margin: f64,
}

impl IdentificationResult {
    pub fn identified(&self) -> Option<&TemplateId> {
        match &self.outcome {
            IdentifyOutcome::Identified(id) => Some(id),
            IdentifyOutcome::NoMatch => None,
        }
    }
}

/// Scans every record for the best score (minimum for distances, maximum
/// for similarities) and identifies when that score passes the threshold.
/// Score ties resolve to the lexicographically smallest identifier; an
/// empty gallery yields `NoMatch`.
pub fn identify<'a, I>(
    gallery: I,
    probe: &MetricPoint,
    threshold: f64,
    space: &SpaceDescriptor,
) -> Result<IdentificationResult, MatcherError>
where
    I: IntoIterator<Item = (&'a TemplateId, &'a MetricPoint)>,
{
    space.validate_point(probe)?;
    let orientation = space.orientation();
    let better = |a: f64, b: f64| match orientation {
        Orientation::Distance => a < b,
        Orientation::Similarity => a > b,
    };
    let mut best: Option<(TemplateId, f64)> = None;
    let mut runner_up: Option<f64> = None;
    for (id, embedding) in gallery {
        let score = compare(space, probe, embedding)?;
        match &best {
            None => best = Some((id.clone(), score)),
            Some((best_id, best_score)) => {
                if better(score, *best_score) || (score == *best_score && id < best_id) {
                    runner_up = Some(*best_score);
                    best = Some((id.clone(), score));
                } else if runner_up.is_none_or(|r| better(score, r)) {
                    runner_up = Some(score);
                }
            }
        }
    }
    let Some((id, score)) = best else {
        return Ok(IdentificationResult {
            outcome: IdentifyOutcome::NoMatch,
            best_score: None,
            runner_up_margin: 0.0,
        });
    };
    let margin = runner_up.map_or(0.0, |r| match orientation {
        Orientation::Distance => r - score,
        Orientation::Similarity => score - r,
    });
    let outcome = if decide(score, threshold, orientation).accept {
        IdentifyOutcome::Identified(id)
    } else {
        IdentifyOutcome::NoMatch
    };
    Ok(IdentificationResult {
        outcome,
        best_score: Some(score),
        runner_up_margin: margin,
    })
}
