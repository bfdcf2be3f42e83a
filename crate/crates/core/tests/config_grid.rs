#![cfg(all(unix, feature = "subprocess"))]

use std::collections::HashSet;
use std::path::Path;

use leaps_core::oracle::subprocess::read_config_space;

#[test]
fn minisat_grid_layout() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/minisat_grid.json");
    let configs = read_config_space(&path).unwrap();
    assert_eq!(configs.len(), 3 * 3 * 4 * 3 * 3 * 3);
    assert_eq!(
        configs[898].join(" "),
        "-ccmin-mode=2 -cla-decay=0.999 -phase-saving=0 -rfirst=10 -rinc=5 -var-decay=0.95"
    );
    let distinct: HashSet<&Vec<String>> = configs.iter().collect();
    assert_eq!(distinct.len(), configs.len());
    assert!(configs.iter().all(|c| c.len() == 6));
}
