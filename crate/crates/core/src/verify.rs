//! Seeded property suites run by the `verify` command and the acceptance tests.
//!
//! Each suite draws integer tiles and taps from a ChaCha stream, so a run is
//! fully determined by its seed and trial count.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{format_rational, ArithError, Arithmetic, Exact, Rational};
use crate::kernel::{
    combine_products, naive_pair, precompute_taps, precompute_taps_factored, winograd_pair, OutPair, Taps3,
    Tile4, TransformedTaps,
};

/// Largest magnitude drawn for tile and tap entries.
pub const DEFAULT_BOUND: i64 = 1 << 15;

pub type PairKernel =
    fn(&Exact, &Tile4<Rational>, &TransformedTaps<Rational>) -> Result<OutPair<Rational>, ArithError>;

/// The minimal filtering kernel under test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum KernelVariant {
    #[default]
    Reference,
    /// Deliberately wrong: the fourth product uses `(x1 - x2)` instead of
    /// `(x1 - x3)`. The suites must catch it.
    Mu4Typo,
}

impl KernelVariant {
    pub fn kernel(self) -> PairKernel {
        match self {
            KernelVariant::Reference => winograd_pair::<Exact>,
            KernelVariant::Mu4Typo => mu4_typo_pair,
        }
    }
}

impl FromStr for KernelVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "reference" => Ok(KernelVariant::Reference),
            "mu4-typo" => Ok(KernelVariant::Mu4Typo),
            other => Err(format!("unknown kernel variant `{other}`")),
        }
    }
}

/// Minimal filtering with `mu4 = (x1 - x2)·s3`.
pub fn mu4_typo_pair<A: Arithmetic>(
    arith: &A,
    tile: &Tile4<A::Value>,
    pre: &TransformedTaps<A::Value>,
) -> Result<OutPair<A::Value>, ArithError> {
    let [x0, x1, x2, _] = &tile.0;
    let [s0, s1, s2, s3] = &pre.0;
    let mu = [
        arith.mul(&arith.sub(x0, x2)?, s0)?,
        arith.mul(&arith.add(x1, x2)?, s1)?,
        arith.mul(&arith.sub(x2, x1)?, s2)?,
        arith.mul(&arith.sub(x1, x2)?, s3)?,
    ];
    combine_products(arith, &mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Property {
    OracleEquivalence,
    Factorization,
    ShiftConsistency,
}

impl Property {
    pub const ALL: [Property; 3] = [
        Property::OracleEquivalence,
        Property::Factorization,
        Property::ShiftConsistency,
    ];

    fn stream(self) -> u64 {
        match self {
            Property::OracleEquivalence => 1,
            Property::Factorization => 2,
            Property::ShiftConsistency => 3,
        }
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Property::OracleEquivalence => "oracle equivalence",
            Property::Factorization => "factorization",
            Property::ShiftConsistency => "shift consistency",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counterexample {
    pub trial: u64,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropertyOutcome {
    pub property: Property,
    pub trials: u64,
    pub passed: u64,
    pub first_failure: Option<Counterexample>,
}

impl PropertyOutcome {
    pub fn ok(&self) -> bool {
        self.passed == self.trials
    }
}

impl fmt::Display for PropertyOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}/{} passed", self.property, self.passed, self.trials)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SuiteConfig {
    pub trials: u64,
    pub seed: u64,
    pub bound: i64,
    pub kernel: KernelVariant,
}

impl SuiteConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        SuiteConfig {
            trials,
            seed,
            bound: DEFAULT_BOUND,
            kernel: KernelVariant::Reference,
        }
    }
}

fn rng_for(seed: u64, property: Property) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(property.stream());
    rng
}

fn draw<const N: usize>(rng: &mut impl Rng, bound: i64) -> [i64; N] {
    std::array::from_fn(|_| rng.random_range(-bound..=bound))
}

fn ints(values: &[i64]) -> String {
    values.iter().map(i64::to_string).collect::<Vec<_>>().join(",")
}

fn pair(p: &OutPair<Rational>) -> String {
    format!("({}, {})", format_rational(&p.y0), format_rational(&p.y1))
}

fn taps_of(h: [i64; 3]) -> Taps3<Rational> {
    Taps3::from_ints(&Exact, h).expect("exact backend is infallible")
}

fn tile_of(x: [i64; 4]) -> Tile4<Rational> {
    Tile4::from_ints(&Exact, x).expect("exact backend is infallible")
}

/// One trial; `Some(description)` on failure.
fn trial(property: Property, rng: &mut ChaCha8Rng, cfg: &SuiteConfig) -> Result<Option<String>, ArithError> {
    let kernel = cfg.kernel.kernel();
    match property {
        Property::OracleEquivalence => {
            let (x, h) = (draw::<4>(rng, cfg.bound), draw::<3>(rng, cfg.bound));
            let (tile, taps) = (tile_of(x), taps_of(h));
            let got = kernel(&Exact, &tile, &precompute_taps(&Exact, &taps)?)?;
            let want = naive_pair(&Exact, &tile, &taps)?;
            Ok((got != want).then(|| {
                format!("x=[{}] h=[{}]: minimal {} != direct {}", ints(&x), ints(&h), pair(&got), pair(&want))
            }))
        }
        Property::Factorization => {
            let h = draw::<3>(rng, cfg.bound);
            let taps = taps_of(h);
            let closed = precompute_taps(&Exact, &taps)?;
            let staged = precompute_taps_factored(&Exact, &taps)?;
            Ok((closed != staged).then(|| format!("h=[{}]: factored taps differ", ints(&h))))
        }
        Property::ShiftConsistency => {
            // The second output of a window equals the first output of the
            // window one sample later.
            let (x, h) = (draw::<5>(rng, cfg.bound), draw::<3>(rng, cfg.bound));
            let pre = precompute_taps(&Exact, &taps_of(h))?;
            let a = kernel(&Exact, &tile_of([x[0], x[1], x[2], x[3]]), &pre)?;
            let b = kernel(&Exact, &tile_of([x[1], x[2], x[3], x[4]]), &pre)?;
            Ok((a.y1 != b.y0).then(|| {
                format!(
                    "x=[{}] h=[{}]: y1 {} != next y0 {}",
                    ints(&x),
                    ints(&h),
                    format_rational(&a.y1),
                    format_rational(&b.y0)
                )
            }))
        }
    }
}

pub fn run_property(property: Property, cfg: &SuiteConfig) -> Result<PropertyOutcome, ArithError> {
    let mut rng = rng_for(cfg.seed, property);
    let mut passed = 0;
    let mut first_failure = None;
    for t in 0..cfg.trials {
        match trial(property, &mut rng, cfg)? {
            None => passed += 1,
            Some(description) => {
                first_failure.get_or_insert(Counterexample { trial: t, description });
            }
        }
    }
    Ok(PropertyOutcome {
        property,
        trials: cfg.trials,
        passed,
        first_failure,
    })
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<Vec<PropertyOutcome>, ArithError> {
    Property::ALL.iter().map(|p| run_property(*p, cfg)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_passes() {
        for outcome in run_suite(&SuiteConfig::new(500, 7)).unwrap() {
            assert!(outcome.ok(), "{outcome}");
            assert_eq!(outcome.to_string(), format!("{}: 500/500 passed", outcome.property));
        }
    }

    #[test]
    fn mutant_is_caught() {
        let cfg = SuiteConfig {
            kernel: KernelVariant::Mu4Typo,
            ..SuiteConfig::new(1000, 42)
        };
        let oracle = run_property(Property::OracleEquivalence, &cfg).unwrap();
        let first = oracle.first_failure.expect("mutant must fail");
        assert!(first.trial < 10, "{first:?}");
        assert!(!run_property(Property::ShiftConsistency, &cfg).unwrap().ok());
    }

    #[test]
    fn deterministic_given_seed() {
        let cfg = SuiteConfig {
            kernel: KernelVariant::Mu4Typo,
            ..SuiteConfig::new(50, 3)
        };
        assert_eq!(run_suite(&cfg).unwrap(), run_suite(&cfg).unwrap());
        let other = SuiteConfig { seed: 4, ..cfg };
        assert_ne!(
            run_property(Property::OracleEquivalence, &cfg).unwrap().first_failure,
            run_property(Property::OracleEquivalence, &other).unwrap().first_failure
        );
    }

    #[test]
    fn mutant_agrees_when_x2_equals_x3() {
        let pre = precompute_taps(&Exact, &taps_of([3, -2, 5])).unwrap();
        let tile = tile_of([1, 4, 7, 7]);
        assert_eq!(
            mu4_typo_pair(&Exact, &tile, &pre).unwrap(),
            winograd_pair(&Exact, &tile, &pre).unwrap()
        );
    }
}
