//! Confidence-ratio decisions and abstention.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{Forest, ForestError};
use crate::types::ProbVector;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecideError {
    #[error("confidence needs at least 2 classes, got {0}")]
    TooFewClasses(usize),
    #[error("confidence threshold must be >= 1, got {0}")]
    BadThreshold(f64),
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// Ratio of the largest to the second-largest probability.
///
/// Equal top probabilities give exactly 1; a second-largest of zero gives
/// `+inf`.
pub fn confidence(probs: &ProbVector) -> Result<f64, DecideError> {
    let p = probs.as_slice();
    if p.len() < 2 {
        return Err(DecideError::TooFewClasses(p.len()));
    }
    let (mut first, mut second) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &v in p {
        if v > first {
            second = first;
            first = v;
        } else if v > second {
            second = v;
        }
    }
    Ok(if first == second {
        1.0
    } else if second == 0.0 {
        f64::INFINITY
    } else {
        first / second
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub predicted: usize,
    pub probs: ProbVector,
    pub confidence: f64,
}

impl Decision {
    pub fn from_probs(probs: ProbVector) -> Result<Self, DecideError> {
        let confidence = confidence(&probs)?;
        Ok(Decision { predicted: probs.argmax(), probs, confidence })
    }

    /// Inclusive threshold test; `+inf` passes every finite threshold.
    pub fn passes(&self, threshold: f64) -> bool {
        self.confidence >= threshold
    }
}

/// Outcome of classifying one frame at a confidence threshold.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Decided(Decision),
    /// The frame's decision was dropped; the scored decision is kept for logging.
    Abstain(Decision),
}

impl Verdict {
    pub fn is_decided(&self) -> bool {
        matches!(self, Verdict::Decided(_))
    }

    pub fn decision(&self) -> &Decision {
        match self {
            Verdict::Decided(d) | Verdict::Abstain(d) => d,
        }
    }
}

pub fn check_threshold(threshold: f64) -> Result<(), DecideError> {
    if threshold >= 1.0 {
        Ok(())
    } else {
        Err(DecideError::BadThreshold(threshold))
    }
}

pub fn decide(probs: ProbVector, threshold: f64) -> Result<Verdict, DecideError> {
    check_threshold(threshold)?;
    let d = Decision::from_probs(probs)?;
    Ok(if d.passes(threshold) { Verdict::Decided(d) } else { Verdict::Abstain(d) })
}

pub fn classify(forest: &Forest, x: &[f64], threshold: f64) -> Result<Verdict, DecideError> {
    check_threshold(threshold)?;
    decide(forest.predict_proba(x)?, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn conventions() {
        assert_eq!(confidence(&pv(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0])).unwrap(), f64::INFINITY);
        let u = 1.0 / 6.0;
        assert_eq!(confidence(&ProbVector::from_raw(vec![u; 6])).unwrap(), 1.0);
        assert_eq!(confidence(&pv(&[0.6, 0.3, 0.1, 0.0, 0.0, 0.0])).unwrap(), 2.0);
        assert_eq!(confidence(&pv(&[0.1, 0.3, 0.6])).unwrap(), 2.0);
        assert!(matches!(confidence(&pv(&[1.0])), Err(DecideError::TooFewClasses(1))));
    }

    #[test]
    fn thresholds() {
        let even = pv(&[0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        assert!(decide(even.clone(), 1.0).unwrap().is_decided());
        assert!(!decide(even, 1.01).unwrap().is_decided());

        let p = pv(&[0.9, 0.1, 0.0, 0.0, 0.0, 0.0]);
        let c = confidence(&p).unwrap();
        assert!((c - 9.0).abs() < 1e-12);
        assert!(decide(p.clone(), 2.0).unwrap().is_decided());
        // 0.9 / 0.1 rounds to 9.000000000000002, so an inclusive 9 passes.
        assert!(decide(p.clone(), 9.0).unwrap().is_decided());
        assert!(!decide(p.clone(), 10.0).unwrap().is_decided());
        assert!(decide(p, 0.5).is_err());
    }

    #[test]
    fn infinite_confidence_passes_any_finite_threshold() {
        let p = pv(&[0.0, 1.0]);
        assert!(decide(p, f64::MAX).unwrap().is_decided());
    }

    #[test]
    fn tie_goes_to_lowest_index_and_abstains_above_one() {
        let p = pv(&[0.2, 0.4, 0.4]);
        let v = decide(p, 1.5).unwrap();
        assert_eq!(v.decision().predicted, 1);
        assert!(!v.is_decided());
    }
}
