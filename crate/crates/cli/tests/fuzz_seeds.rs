//! Replays the checked-in fuzz corpus through the fuzz targets' checks, so
//! the seeds stay meaningful on a stable toolchain.

use std::path::{Path, PathBuf};

use trajopt_cli::config::ExperimentConfig;
use trajopt_cli::io::read_trajectory;

fn seeds(target: &str) -> Vec<PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut files: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    assert!(!files.is_empty(), "no seeds in {}", dir.display());
    files
}

#[test]
fn config_seeds_parse_and_echo() {
    for path in seeds("config_parse") {
        let text = std::fs::read_to_string(&path).unwrap();
        let config = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let echoed = ExperimentConfig::parse(&config.to_toml()).unwrap();
        assert_eq!(echoed.to_toml(), config.to_toml(), "{}", path.display());
    }
}

#[test]
fn trajectory_seeds_read_consistently() {
    let mut accepted = 0;
    for path in seeds("trajectory_csv") {
        let bytes = std::fs::read(&path).unwrap();
        if let Ok((xs, us)) = read_trajectory(bytes.as_slice()) {
            assert_eq!(xs.len(), us.len() + 1, "{}", path.display());
            accepted += 1;
        }
    }
    assert!(accepted >= 2);
}
