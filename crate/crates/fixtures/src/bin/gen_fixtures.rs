//! Regenerates the fixture tree: `gen-fixtures [ROOT]` (default `fixtures`).

use std::path::PathBuf;
use std::process::ExitCode;

fn main() -> ExitCode {
    let root = std::env::args().nth(1).map_or_else(|| PathBuf::from("fixtures"), PathBuf::from);
    match docsynth_fixtures::write_fixtures(&root) {
        Ok(n) => {
            println!("wrote {} with {n} replay entries", root.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
