//! SkelUnet forward pass against an independent PyTorch evaluation of the
//! same weights (see `fixtures/torch_reference.py`).
//!
//! To regenerate the fixture, run this test with `SKELROAD_DUMP_TORCH_INPUTS`
//! set to a directory, then feed the dumped `net.sklw` and `map.pgm` to the
//! script.

use std::path::Path;

use skelroad::gridmap::io::read_map_file;
use skelroad::gridmap::{generate_dungeon, save_map, GenParams, MapFormat};
use skelroad::neuroskel::{forward, save_weights, NetworkParameters};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

/// Seeded random weights with small nonzero biases, so bias handling is
/// covered as well.
fn fixture_params() -> NetworkParameters {
    let mut tensors = NetworkParameters::random(7).tensors().clone();
    for (i, (name, t)) in tensors.iter_mut().enumerate() {
        if name.ends_with(".bias") {
            for (j, b) in t.data.iter_mut().enumerate() {
                *b = ((i * 31 + j * 7) % 13) as f32 * 0.01 - 0.06;
            }
        }
    }
    NetworkParameters::new(tensors).unwrap()
}

#[test]
fn forward_matches_torch() {
    let params = fixture_params();
    if let Ok(dir) = std::env::var("SKELROAD_DUMP_TORCH_INPUTS") {
        let dir = Path::new(&dir);
        std::fs::create_dir_all(dir).unwrap();
        std::fs::write(dir.join("net.sklw"), save_weights(&params)).unwrap();
        let g = generate_dungeon(&GenParams::default().with_seed(5)).unwrap();
        std::fs::write(dir.join("map.pgm"), save_map(&g, MapFormat::PgmBinary)).unwrap();
        return;
    }
    let grid = read_map_file(&Path::new(FIXTURES).join("torch_map.pgm")).unwrap();
    let expected: Vec<f32> = std::fs::read(Path::new(FIXTURES).join("torch_output.f32"))
        .unwrap()
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let got = forward(&params, &grid).unwrap();
    assert_eq!(got.values.len(), expected.len());
    let worst = got
        .values
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f32, f32::max);
    assert!(worst < 1e-5, "max |torch - ours| = {worst}");
    // the fixture should not be degenerate
    let (lo, hi) = expected.iter().fold((1.0f32, 0.0f32), |(l, h), &v| (l.min(v), h.max(v)));
    assert!(hi - lo > 0.05, "output range [{lo}, {hi}]");
}
