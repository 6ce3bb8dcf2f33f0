//! Globally adaptive 7/15-point Gauss-Kronrod quadrature.

use crate::{Error, Result};

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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct QuadTol {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl QuadTol {
    pub fn new(abs: f64, rel: f64) -> Self {
        QuadTol {
            abs,
            rel,
            max_intervals: 2000,
        }
    }
}

impl Default for QuadTol {
    fn default() -> Self {
        QuadTol::new(1e-10, 1e-10)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

/// Integrates `f` over [a, b], bisecting the worst interval until the summed
/// error estimate is below max(abs, rel·|I|).
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: QuadTol) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut pieces = vec![Piece { a, b, value: v, error: e }];
    let mut evaluations = 15;
    loop {
        let value: f64 = pieces.iter().map(|p| p.value).sum();
        let error: f64 = pieces.iter().map(|p| p.error).sum();
        if !value.is_finite() {
            return Err(Error::Quadrature {
                achieved: f64::INFINITY,
                requested: tol.abs,
            });
        }
        let target = tol.abs.max(tol.rel * value.abs());
        if error <= target {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
            });
        }
        if pieces.len() >= tol.max_intervals {
            return Err(Error::Quadrature {
                achieved: error,
                requested: target,
            });
        }
        let worst = pieces
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap();
        let p = pieces.swap_remove(worst);
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // Interval can no longer be split in floating point.
            return Err(Error::Quadrature {
                achieved: error,
                requested: target,
            });
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        evaluations += 30;
        pieces.push(Piece { a: p.a, b: m, value: v1, error: e1 });
        pieces.push(Piece { a: m, b: p.b, value: v2, error: e2 });
    }
}
