//! The Superdoku token universe and the concept dictionary.
//!
//! Tokens are the 27 points of `color × shape × size`. A teaching move is a
//! [`TokenCombination`] of three distinct tokens; the robot detects concepts
//! from it with [`detect_concepts`]. Every concept also has a grid predicate
//! used to check demonstrations.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::DomainError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Blue,
    Red,
    Yellow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Circle,
    Square,
    Triangle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Size {
    Small,
    Medium,
    Large,
}

impl Color {
    pub const ALL: [Color; 3] = [Color::Blue, Color::Red, Color::Yellow];
}

impl Shape {
    pub const ALL: [Shape; 3] = [Shape::Circle, Shape::Square, Shape::Triangle];
}

impl Size {
    pub const ALL: [Size; 3] = [Size::Small, Size::Medium, Size::Large];
}

/// One of the three token attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Attribute {
    Color,
    Shape,
    Size,
}

impl Attribute {
    pub const ALL: [Attribute; 3] = [Attribute::Color, Attribute::Shape, Attribute::Size];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Token {
    pub color: Color,
    pub shape: Shape,
    pub size: Size,
}

impl Token {
    pub const fn new(color: Color, shape: Shape, size: Size) -> Self {
        Token { color, shape, size }
    }

    /// Index of this token's value on `attr`, in enumeration order (0..3).
    pub fn value(&self, attr: Attribute) -> usize {
        match attr {
            Attribute::Color => self.color as usize,
            Attribute::Shape => self.shape as usize,
            Attribute::Size => self.size as usize,
        }
    }

    /// Position in the canonical order returned by [`all_tokens`].
    pub fn index(&self) -> usize {
        self.color as usize * 9 + self.shape as usize * 3 + self.size as usize
    }

    pub fn from_index(index: usize) -> Option<Token> {
        (index < 27).then(|| {
            Token::new(
                Color::ALL[index / 9],
                Shape::ALL[(index / 3) % 3],
                Size::ALL[index % 3],
            )
        })
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {:?}, {:?})", self.color, self.shape, self.size)
    }
}

/// All 27 tokens, color-major, then shape, then size.
pub fn all_tokens() -> Vec<Token> {
    (0..27).filter_map(Token::from_index).collect()
}

/// Three pairwise-distinct tokens presented to the robot in one iteration.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Token>", into = "Vec<Token>")]
pub struct TokenCombination([Token; 3]);

impl TokenCombination {
    pub fn new(tokens: [Token; 3]) -> Result<Self, DomainError> {
        let [a, b, c] = tokens;
        if a == b || a == c || b == c {
            return Err(DomainError::DuplicateToken);
        }
        Ok(TokenCombination(tokens))
    }

    pub fn tokens(&self) -> &[Token; 3] {
        &self.0
    }
}

impl TryFrom<Vec<Token>> for TokenCombination {
    type Error = DomainError;

    fn try_from(tokens: Vec<Token>) -> Result<Self, Self::Error> {
        let arr: [Token; 3] = tokens
            .try_into()
            .map_err(|v: Vec<Token>| DomainError::CombinationLength(v.len()))?;
        TokenCombination::new(arr)
    }
}

impl From<TokenCombination> for Vec<Token> {
    fn from(combo: TokenCombination) -> Self {
        combo.0.to_vec()
    }
}

/// Identifier of one of the 13 learnable concepts.
///
/// Declaration order is the dictionary order; the derived `Ord` follows it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConceptId {
    #[serde(rename = "color-blue")]
    ColorBlue,
    #[serde(rename = "color-red")]
    ColorRed,
    #[serde(rename = "color-yellow")]
    ColorYellow,
    #[serde(rename = "shape-circle")]
    ShapeCircle,
    #[serde(rename = "shape-square")]
    ShapeSquare,
    #[serde(rename = "shape-triangle")]
    ShapeTriangle,
    #[serde(rename = "size-small")]
    SizeSmall,
    #[serde(rename = "size-medium")]
    SizeMedium,
    #[serde(rename = "size-large")]
    SizeLarge,
    #[serde(rename = "unique-colors")]
    UniqueColors,
    #[serde(rename = "unique-shapes")]
    UniqueShapes,
    #[serde(rename = "unique-sizes")]
    UniqueSizes,
    #[serde(rename = "all-unique")]
    AllUnique,
}

/// The structural reading of a concept.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConceptKind {
    /// All three tokens share value index `.1` on attribute `.0`.
    Value(Attribute, usize),
    /// Attribute is pairwise distinct.
    Unique(Attribute),
    AllUnique,
}

impl ConceptId {
    pub const COUNT: usize = 13;

    pub const ALL: [ConceptId; 13] = [
        ConceptId::ColorBlue,
        ConceptId::ColorRed,
        ConceptId::ColorYellow,
        ConceptId::ShapeCircle,
        ConceptId::ShapeSquare,
        ConceptId::ShapeTriangle,
        ConceptId::SizeSmall,
        ConceptId::SizeMedium,
        ConceptId::SizeLarge,
        ConceptId::UniqueColors,
        ConceptId::UniqueShapes,
        ConceptId::UniqueSizes,
        ConceptId::AllUnique,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ConceptId::ColorBlue => "color-blue",
            ConceptId::ColorRed => "color-red",
            ConceptId::ColorYellow => "color-yellow",
            ConceptId::ShapeCircle => "shape-circle",
            ConceptId::ShapeSquare => "shape-square",
            ConceptId::ShapeTriangle => "shape-triangle",
            ConceptId::SizeSmall => "size-small",
            ConceptId::SizeMedium => "size-medium",
            ConceptId::SizeLarge => "size-large",
            ConceptId::UniqueColors => "unique-colors",
            ConceptId::UniqueShapes => "unique-shapes",
            ConceptId::UniqueSizes => "unique-sizes",
            ConceptId::AllUnique => "all-unique",
        }
    }

    pub fn kind(&self) -> ConceptKind {
        let idx = *self as usize;
        match idx {
            0..=8 => ConceptKind::Value(Attribute::ALL[idx / 3], idx % 3),
            9..=11 => ConceptKind::Unique(Attribute::ALL[idx - 9]),
            _ => ConceptKind::AllUnique,
        }
    }

    pub fn value_concept(attr: Attribute, value: usize) -> ConceptId {
        ConceptId::ALL[attr as usize * 3 + value]
    }

    pub fn unique_concept(attr: Attribute) -> ConceptId {
        ConceptId::ALL[9 + attr as usize]
    }

    /// Detection predicate over a combination.
    pub fn detected_in(&self, combo: &TokenCombination) -> bool {
        let t = combo.tokens();
        match self.kind() {
            ConceptKind::Value(attr, v) => t.iter().all(|tok| tok.value(attr) == v),
            ConceptKind::Unique(attr) => pairwise_distinct(t, attr),
            ConceptKind::AllUnique => Attribute::ALL.iter().all(|&a| pairwise_distinct(t, a)),
        }
    }

    /// Grid predicate: what a demonstration must show once this concept is known.
    pub fn holds_on(&self, grid: &Grid) -> bool {
        match self.kind() {
            ConceptKind::Value(attr, v) => grid.cells().iter().any(|tok| tok.value(attr) == v),
            ConceptKind::Unique(attr) => grid.is_latin(attr),
            ConceptKind::AllUnique => Attribute::ALL.iter().all(|&a| grid.is_latin(a)),
        }
    }
}

fn pairwise_distinct(tokens: &[Token; 3], attr: Attribute) -> bool {
    let [a, b, c] = tokens.map(|t| t.value(attr));
    a != b && a != c && b != c
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConceptId {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ConceptId::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| DomainError::UnknownConcept(s.to_string()))
    }
}

/// Every concept whose detection predicate holds for `combo`.
pub fn detect_concepts(combo: &TokenCombination) -> BTreeSet<ConceptId> {
    ConceptId::ALL
        .iter()
        .copied()
        .filter(|c| c.detected_in(combo))
        .collect()
}

/// A 3×3 arrangement of tokens, row-major. Tokens may repeat.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Token>", into = "Vec<Token>")]
pub struct Grid([Token; 9]);

impl Grid {
    pub fn new(cells: [Token; 9]) -> Self {
        Grid(cells)
    }

    pub fn cells(&self) -> &[Token; 9] {
        &self.0
    }

    pub fn at(&self, row: usize, col: usize) -> Token {
        self.0[row * 3 + col]
    }

    /// Each value of `attr` occurs exactly once in every row and column.
    pub fn is_latin(&self, attr: Attribute) -> bool {
        (0..3).all(|i| {
            let row = [0, 1, 2].map(|j| self.at(i, j).value(attr));
            let col = [0, 1, 2].map(|j| self.at(j, i).value(attr));
            is_permutation(row) && is_permutation(col)
        })
    }
}

fn is_permutation(vals: [usize; 3]) -> bool {
    let mut seen = [false; 3];
    for v in vals {
        seen[v] = true;
    }
    seen.iter().all(|&s| s)
}

impl TryFrom<Vec<Token>> for Grid {
    type Error = DomainError;

    fn try_from(cells: Vec<Token>) -> Result<Self, Self::Error> {
        let n = cells.len();
        cells
            .try_into()
            .map(Grid)
            .map_err(|_| DomainError::GridLength(n))
    }
}

impl From<Grid> for Vec<Token> {
    fn from(grid: Grid) -> Self {
        grid.0.to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConceptEntry {
    pub id: ConceptId,
    pub description: &'static str,
}

/// The set of learnable concepts with their human-readable descriptions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConceptDictionary {
    entries: Vec<ConceptEntry>,
}

impl ConceptDictionary {
    pub fn standard() -> Self {
        let entries = ConceptId::ALL
            .iter()
            .map(|&id| ConceptEntry {
                id,
                description: describe(id),
            })
            .collect();
        ConceptDictionary { entries }
    }

    /// A dictionary over a subset of the standard concepts.
    pub fn with_concepts(ids: &[ConceptId]) -> Result<Self, DomainError> {
        if ids.is_empty() {
            return Err(DomainError::EmptyDictionary);
        }
        let unique: BTreeSet<_> = ids.iter().collect();
        if unique.len() != ids.len() {
            return Err(DomainError::DuplicateConcept);
        }
        let entries = ids
            .iter()
            .map(|&id| ConceptEntry {
                id,
                description: describe(id),
            })
            .collect();
        Ok(ConceptDictionary { entries })
    }

    pub fn entries(&self) -> &[ConceptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.entries.iter().any(|e| e.id == id)
    }

    pub fn lookup(&self, s: &str) -> Option<ConceptId> {
        self.entries
            .iter()
            .map(|e| e.id)
            .find(|id| id.as_str() == s)
    }
}

impl Default for ConceptDictionary {
    fn default() -> Self {
        ConceptDictionary::standard()
    }
}

fn describe(id: ConceptId) -> &'static str {
    match id {
        ConceptId::ColorBlue => "All tokens are blue.",
        ConceptId::ColorRed => "All tokens are red.",
        ConceptId::ColorYellow => "All tokens are yellow.",
        ConceptId::ShapeCircle => "All tokens are circles.",
        ConceptId::ShapeSquare => "All tokens are squares.",
        ConceptId::ShapeTriangle => "All tokens are triangles.",
        ConceptId::SizeSmall => "All tokens are small.",
        ConceptId::SizeMedium => "All tokens are medium-sized.",
        ConceptId::SizeLarge => "All tokens are large.",
        ConceptId::UniqueColors => "Every token has a different color.",
        ConceptId::UniqueShapes => "Every token has a different shape.",
        ConceptId::UniqueSizes => "Every token has a different size.",
        ConceptId::AllUnique => "Tokens differ in color, shape and size at once.",
    }
}

/// Concepts the robot has acquired. Only ever grows.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LearnedState(BTreeSet<ConceptId>);

impl LearnedState {
    pub fn new() -> Self {
        LearnedState::default()
    }

    pub fn concepts(&self) -> &BTreeSet<ConceptId> {
        &self.0
    }

    pub fn contains(&self, id: ConceptId) -> bool {
        self.0.contains(&id)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Adds `detected`, returning the concepts that were not known before.
    pub fn absorb(&mut self, detected: &BTreeSet<ConceptId>) -> BTreeSet<ConceptId> {
        let new: BTreeSet<_> = detected.difference(&self.0).copied().collect();
        self.0.extend(new.iter().copied());
        new
    }
}

impl FromIterator<ConceptId> for LearnedState {
    fn from_iter<I: IntoIterator<Item = ConceptId>>(iter: I) -> Self {
        LearnedState(iter.into_iter().collect())
    }
}


#[cfg(test)]
mod tests {
    use super::testing::*;
    use super::*;
    use Color::*;
    use ConceptId::*;
    use Shape::*;
    use Size::*;

    #[test]
    fn twenty_seven_tokens_in_canonical_order() {
        let all = all_tokens();
        assert_eq!(all.len(), 27);
        assert_eq!(all.iter().collect::<BTreeSet<_>>().len(), 27);
        assert_eq!(all[0], tok(Blue, Circle, Small));
        assert_eq!(all.iter().filter(|t| t.color == Blue).count(), 9);
        for (i, t) in all.iter().enumerate() {
            assert_eq!(t.index(), i);
        }
    }

    #[test]
    fn detection_examples() {
        let ex1 = combo(
            tok(Blue, Circle, Small),
            tok(Red, Circle, Medium),
            tok(Yellow, Triangle, Small),
        );
        assert_eq!(detect_concepts(&ex1), BTreeSet::from([UniqueColors]));

        let ex2 = combo(
            tok(Blue, Circle, Large),
            tok(Red, Circle, Medium),
            tok(Yellow, Square, Medium),
        );
        assert_eq!(detect_concepts(&ex2), BTreeSet::from([UniqueColors]));

        let ex3 = combo(
            tok(Red, Square, Small),
            tok(Blue, Triangle, Small),
            tok(Yellow, Circle, Small),
        );
        assert_eq!(
            detect_concepts(&ex3),
            BTreeSet::from([SizeSmall, UniqueColors, UniqueShapes])
        );

        let all = combo(
            tok(Blue, Circle, Small),
            tok(Red, Square, Medium),
            tok(Yellow, Triangle, Large),
        );
        assert_eq!(
            detect_concepts(&all),
            BTreeSet::from([UniqueColors, UniqueShapes, UniqueSizes, AllUnique])
        );
    }

    #[test]
    fn rejects_duplicates_and_wrong_length() {
        let t = tok(Blue, Circle, Small);
        let u = tok(Red, Circle, Small);
        assert_eq!(
            TokenCombination::new([t, t, u]),
            Err(DomainError::DuplicateToken)
        );
        assert_eq!(
            TokenCombination::try_from(vec![t, u]),
            Err(DomainError::CombinationLength(2))
        );
        let json = r#"[{"color":"blue","shape":"circle","size":"small"},
                       {"color":"blue","shape":"circle","size":"small"},
                       {"color":"red","shape":"circle","size":"small"}]"#;
        assert!(serde_json::from_str::<TokenCombination>(json).is_err());
    }

    #[test]
    fn wire_format() {
        let t = tok(Blue, Circle, Small);
        assert_eq!(
            serde_json::to_string(&t).unwrap(),
            r#"{"color":"blue","shape":"circle","size":"small"}"#
        );
        assert_eq!(
            serde_json::to_string(&UniqueColors).unwrap(),
            r#""unique-colors""#
        );
        for c in ConceptId::ALL {
            let s = serde_json::to_string(&c).unwrap();
            assert_eq!(s, format!("\"{}\"", c.as_str()));
            assert_eq!(c.as_str().parse::<ConceptId>().unwrap(), c);
        }
    }

    #[test]
    fn kinds_round_trip() {
        for attr in Attribute::ALL {
            for v in 0..3 {
                assert_eq!(
                    ConceptId::value_concept(attr, v).kind(),
                    ConceptKind::Value(attr, v)
                );
            }
            assert_eq!(
                ConceptId::unique_concept(attr).kind(),
                ConceptKind::Unique(attr)
            );
        }
        assert_eq!(AllUnique.kind(), ConceptKind::AllUnique);
    }

    #[test]
    fn dictionary() {
        let dict = ConceptDictionary::standard();
        assert_eq!(dict.len(), 13);
        assert_eq!(dict.lookup("all-unique"), Some(AllUnique));
        assert_eq!(dict.lookup("nope"), None);
        assert_eq!(
            ConceptDictionary::with_concepts(&[]),
            Err(DomainError::EmptyDictionary)
        );
        assert_eq!(
            ConceptDictionary::with_concepts(&[ColorRed, ColorRed]),
            Err(DomainError::DuplicateConcept)
        );
    }

    #[test]
    fn learned_state_absorb_is_monotone() {
        let mut s = LearnedState::new();
        let first = s.absorb(&BTreeSet::from([UniqueColors, SizeSmall]));
        assert_eq!(first.len(), 2);
        let second = s.absorb(&BTreeSet::from([UniqueColors]));
        assert!(second.is_empty());
        assert_eq!(s.len(), 2);
    }
}
