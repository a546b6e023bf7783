//! Seeded inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use minfilt::{Arithmetic, Rational, Signal, Taps3, Tile4};

fn draw(rng: &mut ChaCha8Rng) -> Rational {
    Rational::from_integer(rng.random_range(-128i64..=127).into())
}

/// `n` samples of 8-bit integer data in the given backend.
pub fn signal<A: Arithmetic>(arith: &A, n: usize, seed: u64) -> Signal<A::Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|_| arith.from_rational(&draw(&mut rng)).expect("8-bit values fit every backend"))
        .collect();
    Signal::new(samples).expect("at least three samples")
}

pub fn tiles<A: Arithmetic>(arith: &A, count: usize, seed: u64) -> Vec<Tile4<A::Value>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let x: [Rational; 4] = std::array::from_fn(|_| draw(&mut rng));
            Tile4::from_rationals(arith, &x).expect("8-bit values fit every backend")
        })
        .collect()
}

pub fn taps<A: Arithmetic>(arith: &A, seed: u64) -> Taps3<A::Value> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h: [Rational; 3] = std::array::from_fn(|_| draw(&mut rng));
    Taps3::from_rationals(arith, &h).expect("8-bit values fit every backend")
}
