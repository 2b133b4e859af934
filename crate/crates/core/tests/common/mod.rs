#![allow(dead_code)]

pub mod oracles;

use std::path::PathBuf;

use hypglue_core::triangulation::{barycentric_subdivide, parse_triangulation, Triangulation};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

pub fn fixture(name: &str) -> Triangulation {
    let text = std::fs::read_to_string(fixture_path(name)).expect("fixture readable");
    parse_triangulation(&text).expect("fixture parses")
}

pub fn l41() -> Triangulation {
    fixture("l41.json")
}

pub fn weeks() -> Triangulation {
    fixture("weeks.json")
}

pub fn l41_subdivided() -> Triangulation {
    barycentric_subdivide(&l41()).expect("closed")
}

/// Fixtures and their barycentric subdivisions, with names.
pub fn all_triangulations() -> Vec<(&'static str, Triangulation)> {
    let weeks = weeks();
    let weeks_sub = barycentric_subdivide(&weeks).expect("closed");
    vec![("l41", l41()), ("l41/sub", l41_subdivided()), ("weeks", weeks), ("weeks/sub", weeks_sub)]
}
