//! Times single forward passes of the default model at a few lengths.

use std::time::Instant;

use mcdf_core::model::{forward, init_random, ModelConfig};
use mcdf_core::TokenSequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let params = init_random(&ModelConfig::default(), 7).unwrap();
    for len in [50usize, 125, 200] {
        let tokens = TokenSequence::from_ids((0..len).map(|i| 5 + (i % 20) as u32).collect());
        let reps = 200;
        let start = Instant::now();
        for _ in 0..reps {
            forward(&params, &tokens, None, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        }
        let per = start.elapsed().as_secs_f64() / reps as f64;
        println!("n_a = {len:3}: {:.3} ms/pass", per * 1e3);
    }
}
