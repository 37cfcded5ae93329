//! Simulated teachers standing in for study participants.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::matcher::Intention;
use crate::score::Valence;
use crate::session::{Condition, Feedback};
use crate::token::{
    all_tokens, detect_concepts, Attribute, ConceptId, ConceptKind, Token, TokenCombination,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Oracle,
    Random,
    Adaptive,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::Oracle => "oracle",
            PolicyKind::Random => "random",
            PolicyKind::Adaptive => "adaptive",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeacherPolicy {
    pub kind: PolicyKind,
    pub seed: u64,
    /// Adaptive only: probability of jumping to a random strategy family.
    pub exploration: f64,
}

impl TeacherPolicy {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        TeacherPolicy {
            kind,
            seed,
            exploration: 0.2,
        }
    }

    pub fn build(&self) -> Box<dyn Teacher + Send> {
        match self.kind {
            PolicyKind::Oracle => Box::new(OracleTeacher),
            PolicyKind::Random => Box::new(RandomTeacher::new(self.seed)),
            PolicyKind::Adaptive => Box::new(AdaptiveTeacher::new(self.seed, self.exploration)),
        }
    }
}

/// What a teacher may look at before its next move.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub condition: Condition,
    /// Feedback as shown to the participant, oldest first.
    pub history: &'a [Feedback],
    /// Ground truth; only the oracle reads it.
    pub learned: &'a BTreeSet<ConceptId>,
}

pub trait Teacher {
    fn step(&mut self, obs: &Observation<'_>) -> (TokenCombination, Intention);
}

/// Intention phrase that the lexicon maps to exactly `concept`.
pub fn intention_for(concept: ConceptId) -> Intention {
    let text = match concept.kind() {
        ConceptKind::Value(attr, v) => format!("show the robot {}", value_word(attr, v)),
        ConceptKind::Unique(attr) => format!("show the robot unique {}s", noun(attr)),
        ConceptKind::AllUnique => "show the robot everything unique".to_string(),
    };
    Intention::new(text).expect("generated intentions are short")
}

fn value_word(attr: Attribute, v: usize) -> &'static str {
    [
        ["blue", "red", "yellow"],
        ["circle", "square", "triangle"],
        ["small", "medium", "large"],
    ][attr as usize][v]
}

fn noun(attr: Attribute) -> &'static str {
    ["color", "shape", "size"][attr as usize]
}

struct Catalog {
    combos: Vec<(TokenCombination, BTreeSet<ConceptId>)>,
}

/// All C(27,3) = 2925 combinations in lexicographic index order with their detections.
fn catalog() -> &'static Catalog {
    static CATALOG: OnceLock<Catalog> = OnceLock::new();
    CATALOG.get_or_init(|| {
        let tokens = all_tokens();
        let mut combos = Vec::with_capacity(2925);
        for i in 0..27 {
            for j in i + 1..27 {
                for k in j + 1..27 {
                    let c = TokenCombination::new([tokens[i], tokens[j], tokens[k]])
                        .expect("distinct indices");
                    let d = detect_concepts(&c);
                    combos.push((c, d));
                }
            }
        }
        Catalog { combos }
    })
}

/// The first combination that teaches `target` with the fewest other new
/// concepts, given what is already learned.
pub fn canonical_combo(target: ConceptId, learned: &BTreeSet<ConceptId>) -> TokenCombination {
    catalog()
        .combos
        .iter()
        .filter(|(_, d)| d.contains(&target))
        .min_by_key(|(_, d)| d.difference(learned).count())
        .map(|(c, _)| c.clone())
        .expect("every concept is detectable")
}

/// Always teaches the lowest unlearned concept in isolation.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleTeacher;

impl Teacher for OracleTeacher {
    fn step(&mut self, obs: &Observation<'_>) -> (TokenCombination, Intention) {
        let target = ConceptId::ALL
            .into_iter()
            .find(|c| !obs.learned.contains(c))
            .unwrap_or(ConceptId::AllUnique);
        (canonical_combo(target, obs.learned), intention_for(target))
    }
}

pub const PHRASE_BANK: &[&str] = &[
    "unique colors",
    "different shapes and colors",
    "Teach the robot to recognize large tokens.",
    "show the robot blue",
    "small blue circles",
    "same size",
    "all different",
    "these go together",
    "red and yellow",
    "a pattern",
    "every shape differs",
    "triangles",
    "medium squares",
    "distinct sizes",
    "just trying something",
];

fn random_combo(rng: &mut ChaCha8Rng) -> TokenCombination {
    let tokens = all_tokens();
    let picks = rand::seq::index::sample(rng, 27, 3);
    TokenCombination::new([
        tokens[picks.index(0)],
        tokens[picks.index(1)],
        tokens[picks.index(2)],
    ])
    .expect("sampled without replacement")
}

/// Uniform combinations, intentions from a fixed phrase bank.
#[derive(Debug, Clone)]
pub struct RandomTeacher {
    rng: ChaCha8Rng,
}

impl RandomTeacher {
    pub fn new(seed: u64) -> Self {
        RandomTeacher {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl Teacher for RandomTeacher {
    fn step(&mut self, _obs: &Observation<'_>) -> (TokenCombination, Intention) {
        let combo = random_combo(&mut self.rng);
        let phrase = PHRASE_BANK.choose(&mut self.rng).expect("non-empty bank");
        (
            combo,
            Intention::new(*phrase).expect("bank phrases are valid"),
        )
    }
}

/// A strategy family groups the targets a teacher tries in a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Family {
    Value(Attribute),
    Unique(Attribute),
    AllUnique,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Value(Attribute::Color),
        Family::Value(Attribute::Shape),
        Family::Value(Attribute::Size),
        Family::Unique(Attribute::Color),
        Family::Unique(Attribute::Shape),
        Family::Unique(Attribute::Size),
        Family::AllUnique,
    ];

    pub fn of(concept: ConceptId) -> Family {
        match concept.kind() {
            ConceptKind::Value(a, _) => Family::Value(a),
            ConceptKind::Unique(a) => Family::Unique(a),
            ConceptKind::AllUnique => Family::AllUnique,
        }
    }

    pub fn targets(&self) -> Vec<ConceptId> {
        match *self {
            Family::Value(a) => (0..3).map(|v| ConceptId::value_concept(a, v)).collect(),
            Family::Unique(a) => vec![ConceptId::unique_concept(a)],
            Family::AllUnique => vec![ConceptId::AllUnique],
        }
    }
}

/// Builds a random combination that exhibits `target`.
pub fn combo_for(target: ConceptId, rng: &mut ChaCha8Rng) -> TokenCombination {
    let tokens = all_tokens();
    match target.kind() {
        ConceptKind::Value(attr, v) => {
            let pool: Vec<Token> = tokens.into_iter().filter(|t| t.value(attr) == v).collect();
            let picks: Vec<Token> = pool.choose_multiple(rng, 3).copied().collect();
            TokenCombination::try_from(picks).expect("distinct picks")
        }
        ConceptKind::Unique(_) | ConceptKind::AllUnique => loop {
            let c = random_combo(rng);
            if target.detected_in(&c) {
                break c;
            }
        },
    }
}

/// Keeps a strategy family while feedback is encouraging, switches after
/// negative feedback, and occasionally explores.
#[derive(Debug, Clone)]
pub struct AdaptiveTeacher {
    rng: ChaCha8Rng,
    exploration: f64,
    family: Option<Family>,
    last_target: Option<ConceptId>,
    believed_taught: BTreeSet<ConceptId>,
}

impl AdaptiveTeacher {
    pub fn new(seed: u64, exploration: f64) -> Self {
        AdaptiveTeacher {
            rng: ChaCha8Rng::seed_from_u64(seed),
            exploration: exploration.clamp(0.0, 1.0),
            family: None,
            last_target: None,
            believed_taught: BTreeSet::new(),
        }
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }

    fn open_targets(&self, family: Family) -> Vec<ConceptId> {
        family
            .targets()
            .into_iter()
            .filter(|c| !self.believed_taught.contains(c))
            .collect()
    }

    fn random_family(&mut self, except: Option<Family>) -> Family {
        let open: Vec<Family> = Family::ALL
            .into_iter()
            .filter(|f| Some(*f) != except && !self.open_targets(*f).is_empty())
            .collect();
        let pool = if open.is_empty() {
            Family::ALL
                .into_iter()
                .filter(|f| Some(*f) != except)
                .collect()
        } else {
            open
        };
        *pool.choose(&mut self.rng).expect("seven families")
    }
}

impl Teacher for AdaptiveTeacher {
    fn step(&mut self, obs: &Observation<'_>) -> (TokenCombination, Intention) {
        let last = obs.history.last().map(|f| f.valence);
        if matches!(last, Some(Valence::Positive) | Some(Valence::Mixed)) {
            if let Some(t) = self.last_target {
                self.believed_taught.insert(t);
            }
        }
        let mut family = match (last, self.family) {
            (Some(Valence::Positive) | Some(Valence::Mixed), Some(f)) => f,
            (Some(Valence::Negative), Some(f)) => self.random_family(Some(f)),
            _ => self.random_family(None),
        };
        if self.rng.gen_bool(self.exploration) {
            family = self.random_family(None);
        }
        if self.open_targets(family).is_empty() {
            family = self.random_family(Some(family));
        }
        let open = self.open_targets(family);
        let candidates = if open.is_empty() {
            family.targets()
        } else {
            open
        };
        let target = *candidates
            .choose(&mut self.rng)
            .expect("family has targets");

        self.family = Some(family);
        self.last_target = Some(target);
        (combo_for(target, &mut self.rng), intention_for(target))
    }
}
