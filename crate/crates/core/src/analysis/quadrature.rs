//! Globally adaptive Gauss–Kronrod (7/15) quadrature on a finite interval.

use crate::error::{Result, SearchError};
use crate::scalar::Scalar;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];

// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Integral<T> {
    pub value: T,
    pub abs_err: T,
    pub intervals: usize,
}

#[derive(Clone, Copy, Debug)]
struct Piece<T> {
    lo: T,
    hi: T,
    value: T,
    err: T,
}

fn gk15<T: Scalar, F: Fn(T) -> T>(f: &F, lo: T, hi: T) -> Piece<T> {
    let half = (hi - lo) * T::lit(0.5);
    let mid = lo + half;
    let fc = f(mid);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let pair = f(mid - dx) + f(mid + dx);
        kronrod = kronrod + pair * T::lit(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + pair * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * half;
    let err = ((kronrod - gauss) * half).abs();
    Piece { lo, hi, value, err }
}

/// Integrate `f` over `[points[0], points[last]]`, using the interior points
/// as initial breakpoints. Subdivides the worst interval until the summed
/// error estimate drops below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<T: Scalar, F: Fn(T) -> T>(
    f: F,
    points: &[T],
    abs_tol: T,
    rel_tol: T,
    max_intervals: usize,
) -> Result<Integral<T>> {
    if points.len() < 2 {
        return Err(SearchError::Empty("quadrature needs at least two breakpoints"));
    }
    let mut pieces: Vec<Piece<T>> = points
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if pieces.is_empty() {
        return Ok(Integral { value: T::zero(), abs_err: T::zero(), intervals: 0 });
    }
    loop {
        let value: T = pieces.iter().map(|p| p.value).sum();
        let err: T = pieces.iter().map(|p| p.err).sum();
        if !value.is_finite() || !err.is_finite() {
            return Err(quadrature_error(points, value, err, pieces.len()));
        }
        if err <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Integral { value, abs_err: err, intervals: pieces.len() });
        }
        if pieces.len() >= max_intervals {
            return Err(quadrature_error(points, value, err, pieces.len()));
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |(bi, be), (i, p)| {
                if p.err > be {
                    (i, p.err)
                } else {
                    (bi, be)
                }
            });
        let p = pieces.swap_remove(worst);
        let mid = (p.lo + p.hi) * T::lit(0.5);
        if !(mid > p.lo && mid < p.hi) {
            // interval cannot be split further in this precision
            return Err(quadrature_error(points, value, err, pieces.len() + 1));
        }
        pieces.push(gk15(&f, p.lo, mid));
        pieces.push(gk15(&f, mid, p.hi));
    }
}

fn quadrature_error<T: Scalar>(points: &[T], value: T, err: T, n: usize) -> SearchError {
    SearchError::Quadrature {
        lo: points[0].as_f64(),
        hi: points[points.len() - 1].as_f64(),
        estimate: value.as_f64(),
        error: err.as_f64(),
        intervals: n,
    }
}
