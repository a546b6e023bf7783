//! Two-output, three-tap filtering kernels.
//!
//! [`naive_pair`] evaluates the two inner products directly. [`winograd_pair`]
//! uses the minimal filtering form: four pre-additions on the input tile, four
//! products with the precomputed taps, and two 3-input algebraic adders.
//! [`winograd_pair_matrix`] computes the same thing as the staged product
//! `output_transform · diag(s) · input_transform · x`.

use crate::arith::{ArithError, Arithmetic, Rational, Sign};

/// Four consecutive input samples `x0..x3`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tile4<V>(pub [V; 4]);

/// Filter impulse response `h0..h2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Taps3<V>(pub [V; 3]);

/// Two consecutive filter outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct OutPair<V> {
    pub y0: V,
    pub y1: V,
}

/// Precomputed taps `s0..s3`, the contents of the module's register memory.
///
/// `s0 = h0`, `s1 = (h0 + h1 + h2) / 2`, `s2 = (h0 - h1 + h2) / 2`, `s3 = h2`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedTaps<V>(pub [V; 4]);

impl<V> OutPair<V> {
    pub fn into_array(self) -> [V; 2] {
        [self.y0, self.y1]
    }
}

fn ints<A: Arithmetic, const N: usize>(
    arith: &A,
    values: [i64; N],
) -> Result<[A::Value; N], ArithError> {
    collect_array(values.iter().map(|v| arith.from_int(*v)))
}

fn rationals<A: Arithmetic, const N: usize>(
    arith: &A,
    values: &[Rational; N],
) -> Result<[A::Value; N], ArithError> {
    collect_array(values.iter().map(|v| arith.from_rational(v)))
}

fn collect_array<V, const N: usize>(
    items: impl Iterator<Item = Result<V, ArithError>>,
) -> Result<[V; N], ArithError> {
    let v = items.collect::<Result<Vec<V>, _>>()?;
    match v.try_into() {
        Ok(arr) => Ok(arr),
        Err(_) => unreachable!("iterator length fixed by N"),
    }
}

impl<V> Tile4<V> {
    pub fn from_ints<A: Arithmetic<Value = V>>(arith: &A, x: [i64; 4]) -> Result<Self, ArithError> {
        ints(arith, x).map(Tile4)
    }

    pub fn from_rationals<A: Arithmetic<Value = V>>(
        arith: &A,
        x: &[Rational; 4],
    ) -> Result<Self, ArithError> {
        rationals(arith, x).map(Tile4)
    }
}

impl<V> Taps3<V> {
    pub fn from_ints<A: Arithmetic<Value = V>>(arith: &A, h: [i64; 3]) -> Result<Self, ArithError> {
        ints(arith, h).map(Taps3)
    }

    pub fn from_rationals<A: Arithmetic<Value = V>>(
        arith: &A,
        h: &[Rational; 3],
    ) -> Result<Self, ArithError> {
        rationals(arith, h).map(Taps3)
    }
}

/// One entry of the diagonal tap-scaling matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagEntry {
    One,
    Half,
}

/// The constant matrices of the factored algorithm.
///
/// All signed entries are in {-1, 0, 1}, so every matrix-vector product is a
/// network of algebraic adders and wires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransformConstants {
    /// 4×4, maps the input tile to the four multiplier operands.
    pub input_transform: [[i8; 4]; 4],
    /// 2×4, combines the four products into the two outputs.
    pub output_transform: [[i8; 4]; 2],
    /// diag(1, 1/2, 1/2, 1), the final stage of the tap precompute.
    pub tap_scale: [DiagEntry; 4],
    /// 5×3, first stage of the tap precompute.
    pub tap_expand: [[i8; 3]; 5],
    /// 4×5, second stage of the tap precompute.
    pub tap_combine: [[i8; 5]; 4],
}

static TRANSFORM_CONSTANTS: TransformConstants = TransformConstants {
    input_transform: [[1, 0, -1, 0], [0, 1, 1, 0], [0, -1, 1, 0], [0, 1, 0, -1]],
    output_transform: [[1, 1, 1, 0], [0, 1, -1, -1]],
    tap_scale: [DiagEntry::One, DiagEntry::Half, DiagEntry::Half, DiagEntry::One],
    tap_expand: [[1, 0, 0], [0, 1, 0], [1, 0, 1], [0, -1, 0], [0, 0, 1]],
    tap_combine: [
        [1, 0, 0, 0, 0],
        [0, 1, 1, 0, 0],
        [0, 0, 1, 1, 0],
        [0, 0, 0, 0, 1],
    ],
};

pub fn transform_constants() -> &'static TransformConstants {
    &TRANSFORM_CONSTANTS
}

/// Multiplies a {-1, 0, 1} matrix by a vector. A row with a single `+1` is a
/// wire and performs no arithmetic.
pub fn apply_signed<A: Arithmetic, const R: usize, const C: usize>(
    arith: &A,
    matrix: &[[i8; C]; R],
    v: &[A::Value; C],
) -> Result<[A::Value; R], ArithError> {
    collect_array(matrix.iter().map(|row| {
        let terms: Vec<(Sign, &A::Value)> = row
            .iter()
            .zip(v)
            .filter_map(|(c, x)| Sign::from_coeff(*c).map(|s| (s, x)))
            .collect();
        match terms.as_slice() {
            [] => Ok(arith.zero()),
            [(Sign::Plus, x)] => Ok((*x).clone()),
            _ => arith.signed_sum(&terms),
        }
    }))
}

/// Direct evaluation: six products and two 3-input accumulations.
pub fn naive_pair<A: Arithmetic>(
    arith: &A,
    tile: &Tile4<A::Value>,
    taps: &Taps3<A::Value>,
) -> Result<OutPair<A::Value>, ArithError> {
    let [x0, x1, x2, x3] = &tile.0;
    let [h0, h1, h2] = &taps.0;
    let p = [
        arith.mul(x0, h0)?,
        arith.mul(x1, h1)?,
        arith.mul(x2, h2)?,
        arith.mul(x1, h0)?,
        arith.mul(x2, h1)?,
        arith.mul(x3, h2)?,
    ];
    let y0 = arith.signed_sum(&[(Sign::Plus, &p[0]), (Sign::Plus, &p[1]), (Sign::Plus, &p[2])])?;
    let y1 = arith.signed_sum(&[(Sign::Plus, &p[3]), (Sign::Plus, &p[4]), (Sign::Plus, &p[5])])?;
    Ok(OutPair { y0, y1 })
}

/// Single output `x0·h0 + x1·h1 + x2·h2` over the first three samples of `window`.
pub fn dot3<A: Arithmetic>(
    arith: &A,
    window: &[A::Value],
    taps: &Taps3<A::Value>,
) -> Result<A::Value, ArithError> {
    let p = [
        arith.mul(&window[0], &taps.0[0])?,
        arith.mul(&window[1], &taps.0[1])?,
        arith.mul(&window[2], &taps.0[2])?,
    ];
    arith.signed_sum(&[(Sign::Plus, &p[0]), (Sign::Plus, &p[1]), (Sign::Plus, &p[2])])
}

/// Closed-form tap precompute.
pub fn precompute_taps<A: Arithmetic>(
    arith: &A,
    taps: &Taps3<A::Value>,
) -> Result<TransformedTaps<A::Value>, ArithError> {
    let [h0, h1, h2] = &taps.0;
    let sum = arith.signed_sum(&[(Sign::Plus, h0), (Sign::Plus, h1), (Sign::Plus, h2)])?;
    let alt = arith.signed_sum(&[(Sign::Plus, h0), (Sign::Minus, h1), (Sign::Plus, h2)])?;
    Ok(TransformedTaps([
        h0.clone(),
        arith.halve(&sum)?,
        arith.halve(&alt)?,
        h2.clone(),
    ]))
}

/// Tap precompute by the two sparse stages followed by the diagonal halving.
pub fn precompute_taps_factored<A: Arithmetic>(
    arith: &A,
    taps: &Taps3<A::Value>,
) -> Result<TransformedTaps<A::Value>, ArithError> {
    let k = transform_constants();
    let expanded = apply_signed(arith, &k.tap_expand, &taps.0)?;
    let combined = apply_signed(arith, &k.tap_combine, &expanded)?;
    let mut out = Vec::with_capacity(4);
    for (t, d) in combined.into_iter().zip(k.tap_scale) {
        out.push(match d {
            DiagEntry::One => t,
            DiagEntry::Half => arith.halve(&t)?,
        });
    }
    Ok(TransformedTaps(collect_array(out.into_iter().map(Ok))?))
}

/// The four products `mu1..mu4` of the minimal filtering method.
pub fn winograd_products<A: Arithmetic>(
    arith: &A,
    tile: &Tile4<A::Value>,
    pre: &TransformedTaps<A::Value>,
) -> Result<[A::Value; 4], ArithError> {
    let [x0, x1, x2, x3] = &tile.0;
    let [s0, s1, s2, s3] = &pre.0;
    Ok([
        arith.mul(&arith.sub(x0, x2)?, s0)?,
        arith.mul(&arith.add(x1, x2)?, s1)?,
        arith.mul(&arith.sub(x2, x1)?, s2)?,
        arith.mul(&arith.sub(x1, x3)?, s3)?,
    ])
}

/// Combines the four products: `y0 = mu1 + mu2 + mu3`, `y1 = mu2 - mu3 - mu4`.
pub fn combine_products<A: Arithmetic>(
    arith: &A,
    mu: &[A::Value; 4],
) -> Result<OutPair<A::Value>, ArithError> {
    let y0 = arith.signed_sum(&[(Sign::Plus, &mu[0]), (Sign::Plus, &mu[1]), (Sign::Plus, &mu[2])])?;
    let y1 = arith.signed_sum(&[
        (Sign::Plus, &mu[1]),
        (Sign::Minus, &mu[2]),
        (Sign::Minus, &mu[3]),
    ])?;
    Ok(OutPair { y0, y1 })
}

/// Minimal filtering: 4 multiplications and 8 two-input-equivalent additions.
pub fn winograd_pair<A: Arithmetic>(
    arith: &A,
    tile: &Tile4<A::Value>,
    pre: &TransformedTaps<A::Value>,
) -> Result<OutPair<A::Value>, ArithError> {
    let mu = winograd_products(arith, tile, pre)?;
    combine_products(arith, &mu)
}

/// Minimal filtering as explicit staged matrix-vector products.
pub fn winograd_pair_matrix<A: Arithmetic>(
    arith: &A,
    tile: &Tile4<A::Value>,
    pre: &TransformedTaps<A::Value>,
    k: &TransformConstants,
) -> Result<OutPair<A::Value>, ArithError> {
    let operands = apply_signed(arith, &k.input_transform, &tile.0)?;
    let products = collect_array(
        operands
            .iter()
            .zip(&pre.0)
            .map(|(a, s)| arith.mul(a, s)),
    )?;
    let [y0, y1] = apply_signed(arith, &k.output_transform, &products)?;
    Ok(OutPair { y0, y1 })
}
