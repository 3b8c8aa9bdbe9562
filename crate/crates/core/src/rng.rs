//! Seeded random streams and complex Gaussian sampling.
//!
//! Every unit of Monte-Carlo work draws from its own ChaCha stream derived
//! from a master seed and a list of integer tags, so results do not depend on
//! scheduling order.

use std::f64::consts::FRAC_1_SQRT_2;

use faer::{c64, Mat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SimRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Hashes a tag list into a 64-bit ChaCha stream id.
pub fn stream_id(tags: &[u64]) -> u64 {
    tags.iter()
        .fold(0x6A09_E667_F3BC_C908, |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Independent generator for the stream identified by `tags` under `seed`.
pub fn stream_rng(seed: u64, tags: &[u64]) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tags));
    rng
}

/// One draw of CN(0, 1): real and imaginary parts each have variance 1/2.
pub fn complex_normal<R: Rng + ?Sized>(rng: &mut R) -> c64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// Matrix of i.i.d. CN(0, variance) entries, filled row by row.
pub fn complex_normal_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    variance: f64,
    rng: &mut R,
) -> Mat<c64> {
    let scale = variance.sqrt();
    let mut out = Mat::<c64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            out[(i, j)] = complex_normal(rng) * scale;
        }
    }
    out
}
