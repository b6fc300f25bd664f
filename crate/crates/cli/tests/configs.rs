use std::fs;
use std::path::Path;

use henon_spde_cli::commands::schema;
use henon_spde_cli::config::{Config, RawConfig};
use henon_spde_cli::COMMANDS;

#[test]
fn shipped_configs_resolve() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let command = COMMANDS
            .iter()
            .find(|c| stem == **c || stem.starts_with(&format!("{c}-")))
            .unwrap_or_else(|| panic!("{stem} names no command"));
        let raw = RawConfig::read(&path).unwrap();
        Config::resolve(&raw, &schema(command).unwrap()).unwrap_or_else(|e| panic!("{stem}: {e}"));
        seen += 1;
    }
    assert!(seen >= COMMANDS.len());
}
