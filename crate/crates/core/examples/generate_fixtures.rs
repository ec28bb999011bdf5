//! Regenerates the synthetic datasets under `fixtures/`.
//!
//! cargo run -p cloudtherm-core --example generate_fixtures [-- <dir>]

use std::path::PathBuf;

use cloudtherm_core::shell::fixtures::{write_fixture, FixtureParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures"));
    for fp in [FixtureParams::exemplar(), FixtureParams::regime_break()] {
        let dir = root.join(&fp.entity);
        write_fixture(&fp, &dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}
