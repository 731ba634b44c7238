use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::lattice::Measure;

/// Independent generator for one path. The key depends on the seed and the
/// measure; the path id selects the ChaCha stream, so a path's draws do not
/// depend on how paths are scheduled across threads.
pub fn path_rng(seed: u64, measure: Measure, path: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = match measure {
        Measure::Dollar => 1,
        Measure::Euro => 2,
    };
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}
