// The robot fills a 3x3 grid using only what it has learned so far.

use std::collections::BTreeSet;

use mmm::token::Token;
use mmm::{validate_grid, ConceptId, Grid, RobotState};

fn render(grid: &Grid) -> String {
    let cell = |t: Token| format!("{:?}-{:?}-{:?}", t.color, t.shape, t.size).to_lowercase();
    (0..3)
        .map(|r| {
            (0..3)
                .map(|c| format!("{:<24}", cell(grid.at(r, c))))
                .collect::<String>()
        })
        .collect::<Vec<_>>()
        .join("\n")
}

pub fn run_example() -> anyhow::Result<()> {
    let stages: [&[ConceptId]; 3] = [
        &[],
        &[ConceptId::UniqueColors, ConceptId::SizeSmall],
        &ConceptId::ALL,
    ];
    for learned in stages {
        let robot = RobotState::with_learned(learned.iter().copied(), 42);
        let grid = robot.demonstrate();
        let set: BTreeSet<ConceptId> = learned.iter().copied().collect();
        let ok = validate_grid(&grid, &set).values().all(|v| *v);
        println!("knows {:?} (valid: {ok})\n{}\n", set, render(&grid));
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example()
}
