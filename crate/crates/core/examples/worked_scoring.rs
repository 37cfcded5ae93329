// Scores the three reference submissions on a fresh robot, under both
// scoring strategies.

use mmm::matcher::lexicon::lexicon_match;
use mmm::score::iteration_score;
use mmm::token::{Color::*, Shape::*, Size::*};
use mmm::{ConceptDictionary, RobotState, ScoreStrategy, Token, TokenCombination};

pub fn run_example() -> anyhow::Result<()> {
    let dict = ConceptDictionary::standard();
    let submissions = [
        (
            [
                Token::new(Blue, Circle, Small),
                Token::new(Red, Circle, Medium),
                Token::new(Yellow, Triangle, Small),
            ],
            "I want to show the robot unique colors.",
        ),
        (
            [
                Token::new(Blue, Circle, Large),
                Token::new(Red, Circle, Medium),
                Token::new(Yellow, Square, Medium),
            ],
            "different shapes and colors",
        ),
        (
            [
                Token::new(Red, Square, Small),
                Token::new(Blue, Triangle, Small),
                Token::new(Yellow, Circle, Small),
            ],
            "Teach the robot to recognize large tokens.",
        ),
    ];
    for (i, (tokens, intention)) in submissions.into_iter().enumerate() {
        let combo = TokenCombination::new(tokens)?;
        let (_, learned) = RobotState::new(0).learn(&combo);
        let matched = lexicon_match(intention, &dict);
        println!("example {}: \"{intention}\"", i + 1);
        println!("  matched {matched:?}");
        println!("  learned {learned:?}");
        for strategy in [ScoreStrategy::ExampleConsistent, ScoreStrategy::Literal] {
            let score = iteration_score(&matched, &learned, strategy, &dict)?;
            println!(
                "  {strategy:?}: s_d = {} -> {:?}",
                score.s_d,
                mmm::score::feedback_valence(score.s_d)
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
