//! Mismatch scoring: the matching function, per-iteration score, running
//! mean, and feedback valence.
//!
//! The per-iteration score is kept as an exact integer fraction so that the
//! valence thresholds (exactly 0, exactly 1) never depend on float rounding.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;
use crate::token::{ConceptDictionary, ConceptId};

/// How the per-iteration denominator is chosen.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreStrategy {
    /// `1 - |matched ∩ learned| / |learned|`.
    Literal,
    /// `1 - |matched ∩ learned| / |matched ∪ learned|` (Jaccard distance).
    #[default]
    ExampleConsistent,
}

/// An exact non-negative fraction `num / den` with `den > 0`, not reduced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "FractionRepr", try_from = "FractionRepr")]
pub struct Fraction {
    num: u32,
    den: u32,
}

impl Fraction {
    pub const ZERO: Fraction = Fraction { num: 0, den: 1 };
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Option<Fraction> {
        (den > 0 && num <= den).then_some(Fraction { num, den })
    }

    pub fn numerator(&self) -> u32 {
        self.num
    }

    pub fn denominator(&self) -> u32 {
        self.den
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == self.den
    }

    /// Decimal with four fractional digits.
    pub fn decimal(&self) -> String {
        format!("{:.4}", self.value())
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}/{})", self.decimal(), self.num, self.den)
    }
}

#[derive(Serialize, Deserialize)]
struct FractionRepr {
    value: String,
    num: u32,
    den: u32,
}

impl From<Fraction> for FractionRepr {
    fn from(f: Fraction) -> Self {
        FractionRepr {
            value: f.decimal(),
            num: f.num,
            den: f.den,
        }
    }
}

impl TryFrom<FractionRepr> for Fraction {
    type Error = String;

    fn try_from(r: FractionRepr) -> Result<Self, Self::Error> {
        let f = Fraction::new(r.num, r.den)
            .ok_or_else(|| format!("invalid fraction {}/{}", r.num, r.den))?;
        if f.decimal() != r.value {
            return Err(format!(
                "fraction {}/{} renders as {}, log says {}",
                r.num,
                r.den,
                f.decimal(),
                r.value
            ));
        }
        Ok(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationScore {
    pub s_d: Fraction,
    pub n_learned: u32,
    pub matched_learned: u32,
    pub strategy: ScoreStrategy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CumulativeScore {
    pub s_cum: f64,
    pub d: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Valence {
    Positive,
    Mixed,
    Negative,
    None,
}

/// `M(c, K)`: 1 if some key term mapped to `concept`, else 0.
pub fn matching_function(concept: ConceptId, matched: &BTreeSet<ConceptId>) -> u32 {
    u32::from(matched.contains(&concept))
}

pub fn iteration_score(
    matched: &BTreeSet<ConceptId>,
    learned: &BTreeSet<ConceptId>,
    strategy: ScoreStrategy,
    dict: &ConceptDictionary,
) -> Result<IterationScore, DomainError> {
    if let Some(bad) = matched.iter().chain(learned).find(|c| !dict.contains(**c)) {
        return Err(DomainError::UnknownConcept(bad.to_string()));
    }
    // Σ M(c_i, K) · Learned(c_i) over the dictionary.
    let matched_learned: u32 = dict
        .entries()
        .iter()
        .filter(|e| learned.contains(&e.id))
        .map(|e| matching_function(e.id, matched))
        .sum();
    let n_learned = learned.len() as u32;
    let den = match strategy {
        ScoreStrategy::Literal => n_learned,
        ScoreStrategy::ExampleConsistent => matched.union(learned).count() as u32,
    };
    let s_d = if n_learned == 0 || den == 0 {
        Fraction::ONE
    } else {
        Fraction::new(den - matched_learned, den).expect("intersection bounded by denominator")
    };
    Ok(IterationScore {
        s_d,
        n_learned,
        matched_learned,
        strategy,
    })
}

/// Folds one more per-iteration score into the running mean.
pub fn cumulative_score(prev: Option<CumulativeScore>, s_d: f64) -> CumulativeScore {
    match prev {
        None => CumulativeScore { s_cum: s_d, d: 1 },
        Some(p) => {
            let d = p.d + 1;
            CumulativeScore {
                s_cum: (s_d + p.s_cum * (d - 1) as f64) / d as f64,
                d,
            }
        }
    }
}

pub fn feedback_valence(s_d: Fraction) -> Valence {
    if s_d.is_zero() {
        Valence::Positive
    } else if s_d.is_one() {
        Valence::Negative
    } else {
        Valence::Mixed
    }
}

pub fn performance_feedback(newly_learned: &BTreeSet<ConceptId>) -> Valence {
    if newly_learned.is_empty() {
        Valence::Negative
    } else {
        Valence::Positive
    }
}
