//! Seed expansion.
//!
//! Every random stream is derived from the run seed and a stream label:
//! `splitmix64(seed ^ fnv1a64(label))`. Streams used by the crate:
//!
//! | label            | consumer                                   |
//! |------------------|--------------------------------------------|
//! | `init`           | parameter initialization                   |
//! | `shuffle/<e>`    | batch order of training epoch `e`          |
//! | `split`          | train/val/test shuffle                     |
//! | `synth/<i>`      | features and label noise of synthetic `i`  |
//! | `patch`          | multi-patch crop positions                 |
//! | `verify/<suite>` | random instances of a self-check suite     |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fnv1a64(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    splitmix64(seed ^ fnv1a64(label))
}

pub fn stream(seed: u64, label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, label))
}
