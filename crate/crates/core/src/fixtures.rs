//! Reference inputs shipped with the crate.

pub const DC_MOTOR: &str = include_str!("../fixtures/dc_motor.json");
pub const TABLE1_CSV: &str = include_str!("../fixtures/table1.csv");
pub const TABLE1_CONFIG: &str = include_str!("../fixtures/table1.json");
pub const EXAMPLE35: &str = include_str!("../fixtures/example35.json");
pub const EXAMPLE35_CHECK: &str = include_str!("../fixtures/example35_check.json");
pub const T2_EXAMPLE: &str = include_str!("../fixtures/t2example.json");
pub const RR_EXAMPLE: &str = include_str!("../fixtures/rr_example.json");

/// Directory holding the fixture files, for path-based loading.
pub fn dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}
