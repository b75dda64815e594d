//! The full acceptance suite on the shipped fixtures.

use std::process::ExitCode;

use dpnls_cli::suite::{run_suite, shipped_fixtures, Fixtures};

fn main() -> ExitCode {
    let fixtures = Fixtures::open(&shipped_fixtures()).expect("shipped fixtures");
    let report = run_suite(&fixtures, &[]).expect("suite runs");
    for c in &report.criteria {
        println!("{}", c.line());
    }
    let failed = report.criteria.iter().filter(|c| !c.pass).count();
    println!("acceptance: {} of {} criteria pass", report.criteria.len() - failed, report.criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
