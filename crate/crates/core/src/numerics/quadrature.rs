//! Globally adaptive Gauss–Kronrod (7/15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{NumericsError, Result};

/// Absolute error floor added to every relative tolerance.
pub const QUADRATURE_ABS_FLOOR: f64 = 1e-14;

const MAX_PANELS: usize = 20_000;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

// ordered by error estimate, so the heap pops the worst panel
impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gk15<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let sample = |x: f64| -> Result<f64> {
        let v = g(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(NumericsError::NonFiniteSample { x })
        }
    };
    let fc = sample(center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = sample(center - dx)?;
        let f2 = sample(center + dx)?;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Panel { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() })
}

/// Integrate `g` over `[a, b]` so that the error estimate satisfies
/// `err <= rel_tol * |result| + QUADRATURE_ABS_FLOOR`.
pub fn quadrature<G: Fn(f64) -> f64>(g: G, a: f64, b: f64, rel_tol: f64) -> Result<f64> {
    quadrature_with_breaks(g, &[a, b], rel_tol)
}

/// Like [`quadrature`], with the interval split at every point of `points`
/// (sorted, first and last are the integration limits). Integrands with
/// kinks or jumps must list them here.
pub fn quadrature_with_breaks<G: Fn(f64) -> f64>(g: G, points: &[f64], rel_tol: f64) -> Result<f64> {
    let (a, b) = match (points.first(), points.last()) {
        (Some(&a), Some(&b)) if points.len() >= 2 => (a, b),
        _ => return Err(NumericsError::InvalidSpan { t0: f64::NAN, t1: f64::NAN }),
    };
    if !(a.is_finite() && b.is_finite() && b > a) || points.windows(2).any(|w| w[1] <= w[0]) {
        return Err(NumericsError::InvalidSpan { t0: a, t1: b });
    }
    if !(rel_tol > 0.0) {
        return Err(NumericsError::InvalidTolerance { rel: rel_tol, abs: QUADRATURE_ABS_FLOOR });
    }

    let mut heap = BinaryHeap::with_capacity(64);
    let (mut total, mut err) = (0.0, 0.0);
    for w in points.windows(2) {
        let p = gk15(&g, w[0], w[1])?;
        total += p.value;
        err += p.error;
        heap.push(p);
    }
    loop {
        if err <= rel_tol * total.abs() + QUADRATURE_ABS_FLOOR {
            // re-sum to shed the drift of the running totals
            total = heap.iter().map(|p| p.value).sum();
            err = heap.iter().map(|p| p.error).sum();
            if err <= rel_tol * total.abs() + QUADRATURE_ABS_FLOOR {
                return Ok(total);
            }
        }
        let p = heap.pop().expect("non-empty");
        let mid = 0.5 * (p.a + p.b);
        if heap.len() + 1 >= MAX_PANELS || mid <= p.a || mid >= p.b {
            heap.push(p);
            let total: f64 = heap.iter().map(|p| p.value).sum();
            let err: f64 = heap.iter().map(|p| p.error).sum();
            return Err(NumericsError::QuadratureNotConverged { a, b, estimate: total, error: err });
        }
        let left = gk15(&g, p.a, mid)?;
        let right = gk15(&g, mid, p.b)?;
        total += left.value + right.value - p.value;
        err += left.error + right.error - p.error;
        heap.push(left);
        heap.push(right);
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`; exact for polynomials
/// of degree `2n − 1`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Tricomi's initial guess, then Newton on P_n
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p0 = 1.0;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let step = p1 / dp;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sine_squared_half_period() {
        let v = quadrature(|x: f64| x.sin().powi(2), 0.0, PI, 1e-10).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-10);
    }

    #[test]
    fn kinked_integrand_with_breaks() {
        let v = quadrature_with_breaks(|x: f64| x.sin().abs(), &[0.0, PI, 2.0 * PI], 1e-12).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn reports_non_finite_location() {
        let err = quadrature(|x: f64| 1.0 / (x - 0.5), 0.0, 1.0, 1e-10).unwrap_err();
        assert!(matches!(err, NumericsError::NonFiniteSample { x } if x == 0.5));
    }

    #[test]
    fn gauss_legendre_exactness() {
        let rule = gauss_legendre(10);
        let v: f64 = rule.iter().map(|(x, w)| w * x.powi(18)).sum();
        assert!((v - 2.0 / 19.0).abs() < 1e-14);
        assert!((rule.iter().map(|r| r.1).sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(quadrature(|x: f64| x, 1.0, 0.0, 1e-10).is_err());
    }
}
