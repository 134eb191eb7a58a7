//! Prints the run report for a scenario file.
//!
//! `cargo run -p holointent-core --example report -- scenarios/two_robots.json [--wall]`

use holointent::scenario::{run_scenario_file, ClockMode, RunOptions};

fn main() {
    let mut args = std::env::args().skip(1);
    let path = args.next().expect("usage: report <scenario.json> [--wall]");
    let clock = if args.next().as_deref() == Some("--wall") { ClockMode::Wall } else { ClockMode::Logical };
    match run_scenario_file(path.as_ref(), RunOptions { clock, ..RunOptions::default() }) {
        Ok(report) => println!("{}", report.to_json()),
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(1);
        }
    }
}
