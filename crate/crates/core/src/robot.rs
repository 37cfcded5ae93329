//! The virtual robot learner.
//!
//! Learning is threshold activation: whatever a combination exhibits is
//! learned. Demonstrations fill the 3×3 grid with a randomized backtracking
//! search whose constraints come from the learned concepts.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::token::{
    all_tokens, detect_concepts, Attribute, ConceptId, ConceptKind, Grid, LearnedState, Token,
    TokenCombination,
};

const MAX_RESTARTS: u32 = 100;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobotState {
    pub learned: LearnedState,
    pub rng_seed: u64,
}

impl RobotState {
    pub fn new(rng_seed: u64) -> Self {
        RobotState {
            learned: LearnedState::new(),
            rng_seed,
        }
    }

    pub fn with_learned(learned: impl IntoIterator<Item = ConceptId>, rng_seed: u64) -> Self {
        RobotState {
            learned: learned.into_iter().collect(),
            rng_seed,
        }
    }

    /// Returns the successor state and the concepts that were new.
    pub fn learn(&self, combo: &TokenCombination) -> (RobotState, BTreeSet<ConceptId>) {
        let mut next = self.clone();
        let newly = next.learned.absorb(&detect_concepts(combo));
        (next, newly)
    }

    pub fn is_fully_taught(&self) -> bool {
        self.learned.len() == ConceptId::COUNT
    }

    /// Fills a grid consistent with everything learned, using `rng_seed`.
    pub fn demonstrate(&self) -> Grid {
        self.demonstrate_with_seed(self.rng_seed)
    }

    pub fn demonstrate_with_seed(&self, seed: u64) -> Grid {
        GridSolver::new(self.learned.concepts())
            .solve(seed)
            .unwrap_or_else(|| {
                panic!(
                    "grid solver exhausted {MAX_RESTARTS} restarts for {:?} (seed {seed})",
                    self.learned
                )
            })
    }
}

/// Evaluates each concept's grid predicate on `grid`.
pub fn validate_grid(grid: &Grid, concepts: &BTreeSet<ConceptId>) -> BTreeMap<ConceptId, bool> {
    concepts.iter().map(|c| (*c, c.holds_on(grid))).collect()
}

struct GridSolver {
    latin: [bool; 3],
    required: Vec<(Attribute, usize)>,
}

#[derive(Clone, Copy, Default)]
struct Used {
    // used[attr][line] bitmask over values
    rows: [[u8; 3]; 3],
    cols: [[u8; 3]; 3],
}

impl GridSolver {
    fn new(learned: &BTreeSet<ConceptId>) -> Self {
        let mut latin = [false; 3];
        let mut required = Vec::new();
        for c in learned {
            match c.kind() {
                ConceptKind::Unique(a) => latin[a as usize] = true,
                ConceptKind::AllUnique => latin = [true; 3],
                ConceptKind::Value(a, v) => required.push((a, v)),
            }
        }
        GridSolver { latin, required }
    }

    fn solve(&self, seed: u64) -> Option<Grid> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens = all_tokens();
        for _ in 0..MAX_RESTARTS {
            let mut cells = [Token::from_index(0).unwrap(); 9];
            let mut used = Used::default();
            if self.fill(0, &mut cells, &mut used, &tokens, &mut rng)
                && self.covers_required(&cells)
            {
                return Some(Grid::new(cells));
            }
        }
        None
    }

    fn fill(
        &self,
        pos: usize,
        cells: &mut [Token; 9],
        used: &mut Used,
        tokens: &[Token],
        rng: &mut ChaCha8Rng,
    ) -> bool {
        if pos == 9 {
            return true;
        }
        let (r, c) = (pos / 3, pos % 3);
        let mut candidates = tokens.to_vec();
        candidates.shuffle(rng);
        for tok in candidates {
            if !self.fits(used, r, c, tok) {
                continue;
            }
            let saved = *used;
            self.mark(used, r, c, tok);
            cells[pos] = tok;
            if self.fill(pos + 1, cells, used, tokens, rng) {
                return true;
            }
            *used = saved;
        }
        false
    }

    fn fits(&self, used: &Used, r: usize, c: usize, tok: Token) -> bool {
        Attribute::ALL.iter().all(|&a| {
            let ai = a as usize;
            let bit = 1u8 << tok.value(a);
            !self.latin[ai] || (used.rows[ai][r] & bit == 0 && used.cols[ai][c] & bit == 0)
        })
    }

    fn mark(&self, used: &mut Used, r: usize, c: usize, tok: Token) {
        for a in Attribute::ALL {
            let ai = a as usize;
            let bit = 1u8 << tok.value(a);
            used.rows[ai][r] |= bit;
            used.cols[ai][c] |= bit;
        }
    }

    fn covers_required(&self, cells: &[Token; 9]) -> bool {
        self.required
            .iter()
            .all(|&(a, v)| cells.iter().any(|t| t.value(a) == v))
    }
}
