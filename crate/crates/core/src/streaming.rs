//! Valid-mode convolution of a whole signal with a 3-tap filter.
//!
//! The signal is cut into stride-2 tiles of four samples; each tile yields two
//! outputs. When the output count `N - 2` is odd, the last output is produced
//! by a single direct dot product so both modes return identical results.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{ArithError, Arithmetic};
use crate::kernel::{
    dot3, naive_pair, precompute_taps, winograd_pair, Taps3, Tile4, TransformedTaps,
};

pub const TAPS: usize = 3;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum StreamError {
    #[error("signal has {len} samples; at least 3 are required")]
    TooShort { len: usize },
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Naive,
    #[default]
    Winograd,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Naive => "naive",
            Mode::Winograd => "winograd",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "naive" => Ok(Mode::Naive),
            "winograd" => Ok(Mode::Winograd),
            other => Err(format!("unknown mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailHandling {
    NaiveTail,
    None,
}

/// Input samples; always at least three.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<V> {
    samples: Vec<V>,
}

impl<V> Signal<V> {
    pub fn new(samples: Vec<V>) -> Result<Self, StreamError> {
        if samples.len() < TAPS {
            return Err(StreamError::TooShort { len: samples.len() });
        }
        Ok(Signal { samples })
    }

    pub fn samples(&self) -> &[V] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn output_len(&self) -> usize {
        self.samples.len() - TAPS + 1
    }

    pub fn into_samples(self) -> Vec<V> {
        self.samples
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvolutionResult<V> {
    pub outputs: Vec<V>,
    pub mode: Mode,
    pub tail_handling: TailHandling,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TileKind {
    /// Four samples starting at `start` produce outputs `start` and `start + 1`.
    Pair,
    /// A single trailing output at `start`.
    Tail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TileSpan {
    pub start: usize,
    pub kind: TileKind,
}

impl TileSpan {
    pub fn outputs(&self) -> std::ops::Range<usize> {
        match self.kind {
            TileKind::Pair => self.start..self.start + 2,
            TileKind::Tail => self.start..self.start + 1,
        }
    }
}

/// Tiles covering every output of an `n`-sample signal exactly once.
pub fn tile_schedule(n: usize) -> Result<Vec<TileSpan>, StreamError> {
    if n < TAPS {
        return Err(StreamError::TooShort { len: n });
    }
    let outputs = n - TAPS + 1;
    let mut tiles: Vec<TileSpan> = (0..outputs / 2)
        .map(|k| TileSpan {
            start: 2 * k,
            kind: TileKind::Pair,
        })
        .collect();
    if outputs % 2 == 1 {
        tiles.push(TileSpan {
            start: outputs - 1,
            kind: TileKind::Tail,
        });
    }
    Ok(tiles)
}

/// Multiplications a convolution of `n` samples performs in `mode`.
pub fn multiplication_count(n: usize, mode: Mode) -> Result<u64, StreamError> {
    let schedule = tile_schedule(n)?;
    Ok(schedule
        .iter()
        .map(|t| match (t.kind, mode) {
            (TileKind::Pair, Mode::Winograd) => 4,
            (TileKind::Pair, Mode::Naive) => 6,
            (TileKind::Tail, _) => 3,
        })
        .sum())
}

/// Filter state prepared once per convolution.
#[derive(Debug, Clone)]
pub enum PreparedTaps<V> {
    Naive(Taps3<V>),
    Winograd {
        taps: Taps3<V>,
        pre: TransformedTaps<V>,
    },
}

impl<V: Clone> PreparedTaps<V> {
    pub fn new<A: Arithmetic<Value = V>>(
        arith: &A,
        taps: &Taps3<V>,
        mode: Mode,
    ) -> Result<Self, ArithError> {
        Ok(match mode {
            Mode::Naive => PreparedTaps::Naive(taps.clone()),
            Mode::Winograd => PreparedTaps::Winograd {
                taps: taps.clone(),
                pre: precompute_taps(arith, taps)?,
            },
        })
    }

    fn taps(&self) -> &Taps3<V> {
        match self {
            PreparedTaps::Naive(taps) | PreparedTaps::Winograd { taps, .. } => taps,
        }
    }
}

/// Outputs of one tile, in order.
pub fn evaluate_tile<A: Arithmetic>(
    arith: &A,
    samples: &[A::Value],
    prepared: &PreparedTaps<A::Value>,
    span: TileSpan,
) -> Result<Vec<A::Value>, ArithError> {
    let s = span.start;
    match span.kind {
        TileKind::Tail => Ok(vec![dot3(arith, &samples[s..s + TAPS], prepared.taps())?]),
        TileKind::Pair => {
            let tile = Tile4([
                samples[s].clone(),
                samples[s + 1].clone(),
                samples[s + 2].clone(),
                samples[s + 3].clone(),
            ]);
            let out = match prepared {
                PreparedTaps::Naive(taps) => naive_pair(arith, &tile, taps)?,
                PreparedTaps::Winograd { pre, .. } => winograd_pair(arith, &tile, pre)?,
            };
            Ok(out.into_array().into())
        }
    }
}

/// Single-threaded convolution.
pub fn convolve<A: Arithmetic>(
    arith: &A,
    signal: &Signal<A::Value>,
    taps: &Taps3<A::Value>,
    mode: Mode,
) -> Result<ConvolutionResult<A::Value>, StreamError> {
    let schedule = tile_schedule(signal.len())?;
    let prepared = PreparedTaps::new(arith, taps, mode)?;
    let chunks = schedule
        .iter()
        .map(|span| evaluate_tile(arith, signal.samples(), &prepared, *span))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(&schedule, chunks, mode))
}

/// Convolution with tiles distributed over `threads` workers. The result does
/// not depend on the thread count.
pub fn convolve_parallel<A: Arithmetic + Sync>(
    arith: &A,
    signal: &Signal<A::Value>,
    taps: &Taps3<A::Value>,
    mode: Mode,
    threads: usize,
) -> Result<ConvolutionResult<A::Value>, StreamError> {
    if threads <= 1 {
        return convolve(arith, signal, taps, mode);
    }
    let schedule = tile_schedule(signal.len())?;
    let prepared = PreparedTaps::new(arith, taps, mode)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| StreamError::ThreadPool(e.to_string()))?;
    let chunks = pool.install(|| {
        schedule
            .par_iter()
            .map(|span| evaluate_tile(arith, signal.samples(), &prepared, *span))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(assemble(&schedule, chunks, mode))
}

fn assemble<V>(schedule: &[TileSpan], chunks: Vec<Vec<V>>, mode: Mode) -> ConvolutionResult<V> {
    let tail = schedule.last().map(|t| t.kind) == Some(TileKind::Tail);
    ConvolutionResult {
        outputs: chunks.into_iter().flatten().collect(),
        mode,
        tail_handling: if tail && mode == Mode::Winograd {
            TailHandling::NaiveTail
        } else {
            TailHandling::None
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{Counting, Exact, Rational};
    use proptest::prelude::*;

    fn direct(x: &[i64], h: [i64; 3]) -> Vec<i64> {
        x.windows(3).map(|w| w[0] * h[0] + w[1] * h[1] + w[2] * h[2]).collect()
    }

    fn run(x: &[i64], h: [i64; 3], mode: Mode) -> ConvolutionResult<Rational> {
        let signal = Signal::new(x.iter().map(|v| Exact.from_int(*v).unwrap()).collect()).unwrap();
        let taps = Taps3::from_ints(&Exact, h).unwrap();
        convolve(&Exact, &signal, &taps, mode).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<Rational> {
        v.iter().map(|x| Rational::from_integer((*x).into())).collect()
    }

    #[test]
    fn schedule_examples() {
        let pair = |start| TileSpan { start, kind: TileKind::Pair };
        assert_eq!(tile_schedule(4).unwrap(), vec![pair(0)]);
        assert_eq!(
            tile_schedule(5).unwrap(),
            vec![pair(0), TileSpan { start: 2, kind: TileKind::Tail }]
        );
        assert_eq!(tile_schedule(10).unwrap(), vec![pair(0), pair(2), pair(4), pair(6)]);
        assert_eq!(
            tile_schedule(3).unwrap(),
            vec![TileSpan { start: 0, kind: TileKind::Tail }]
        );
        assert_eq!(tile_schedule(2), Err(StreamError::TooShort { len: 2 }));
    }

    #[test]
    fn convolve_examples() {
        let r = run(&[1, 2, 3, 4, 5], [1, 1, 1], Mode::Winograd);
        assert_eq!(direct(&[1, 2, 3, 4, 5], [1, 1, 1]), vec![6, 9, 12]);
        assert_eq!(r.outputs, ints(&[6, 9, 12]));
        assert_eq!(r.tail_handling, TailHandling::NaiveTail);
        let r = run(&[1, 2, 3, 4, 5], [1, 1, 1], Mode::Naive);
        assert_eq!(r.tail_handling, TailHandling::None);

        let r = run(&[0; 64], [3, -1, 2], Mode::Winograd);
        assert_eq!(r.outputs, ints(&[0; 62]));
        assert_eq!(r.tail_handling, TailHandling::None);

        let mut impulse = vec![0; 17];
        impulse[0] = 1;
        let r = run(&impulse, [3, -1, 2], Mode::Winograd);
        let mut want = vec![0; 15];
        want[0] = 3;
        assert_eq!(r.outputs, ints(&want));
    }

    #[test]
    fn rejects_short_signals() {
        assert_eq!(Signal::<i64>::new(vec![1, 2]), Err(StreamError::TooShort { len: 2 }));
    }

    #[test]
    fn multiplication_counts() {
        for n in 3..40 {
            for mode in [Mode::Naive, Mode::Winograd] {
                let counting = Counting::new(Exact);
                let signal = Signal::new(vec![Exact.from_int(1).unwrap(); n]).unwrap();
                let taps = Taps3::from_ints(&Exact, [1, 2, 3]).unwrap();
                convolve(&counting, &signal, &taps, mode).unwrap();
                let got = counting.counts().multiplications;
                assert_eq!(got, multiplication_count(n, mode).unwrap());
                let outputs = (n - 2) as u64;
                let want = match mode {
                    Mode::Naive => 3 * outputs,
                    Mode::Winograd => 4 * (outputs / 2) + 3 * (outputs % 2),
                };
                assert_eq!(got, want, "n={n} {mode}");
            }
        }
    }

    #[test]
    fn parallel_matches_sequential() {
        let x: Vec<i64> = (0..257).map(|i| (i * 37 % 101) - 50).collect();
        let signal = Signal::new(x.iter().map(|v| Exact.from_int(*v).unwrap()).collect()).unwrap();
        let taps = Taps3::from_ints(&Exact, [5, -7, 3]).unwrap();
        let seq = convolve(&Exact, &signal, &taps, Mode::Winograd).unwrap();
        let par = convolve_parallel(&Exact, &signal, &taps, Mode::Winograd, 4).unwrap();
        assert_eq!(seq, par);
        assert_eq!(seq.outputs, ints(&direct(&x, [5, -7, 3])));
    }

    #[test]
    fn tile_order_does_not_matter() {
        let x: Vec<i64> = (0..31).map(|i| i * i - 40).collect();
        let samples: Vec<Rational> = ints(&x);
        let taps = Taps3::from_ints(&Exact, [2, 1, -3]).unwrap();
        let prepared = PreparedTaps::new(&Exact, &taps, Mode::Winograd).unwrap();
        let schedule = tile_schedule(x.len()).unwrap();
        let mut out = vec![Rational::from_integer(0.into()); x.len() - 2];
        // Reverse and interleave the evaluation order.
        let mut order: Vec<usize> = (0..schedule.len()).rev().collect();
        order.sort_by_key(|i| i % 3);
        for i in order {
            let span = schedule[i];
            let values = evaluate_tile(&Exact, &samples, &prepared, span).unwrap();
            for (slot, v) in span.outputs().zip(values) {
                out[slot] = v;
            }
        }
        assert_eq!(out, ints(&direct(&x, [2, 1, -3])));
    }

    proptest! {
        #[test]
        fn modes_agree(x in prop::collection::vec(-(1i64 << 15)..=(1 << 15), 3..300),
                       h in prop::array::uniform3(-(1i64 << 15)..=(1 << 15))) {
            let w = run(&x, h, Mode::Winograd);
            let n = run(&x, h, Mode::Naive);
            prop_assert_eq!(w.outputs.len(), x.len() - 2);
            prop_assert_eq!(&w.outputs, &n.outputs);
            prop_assert_eq!(w.outputs, ints(&direct(&x, h)));
        }

        #[test]
        fn schedule_covers_each_output_once(n in 3usize..2000) {
            let mut seen = vec![0u8; n - 2];
            for span in tile_schedule(n).unwrap() {
                for l in span.outputs() {
                    seen[l] += 1;
                }
            }
            prop_assert!(seen.iter().all(|c| *c == 1));
        }
    }
}
