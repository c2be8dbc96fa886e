//! Runs acceptance criteria 1 to 9 and prints one line per criterion.

use std::process::ExitCode;

fn main() -> ExitCode {
    let outcomes = hqmap::acceptance::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("acceptance: {} passed, {failed} failed", outcomes.len() - failed);
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}
