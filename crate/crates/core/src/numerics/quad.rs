//! Adaptive 21-point Gauss–Kronrod quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_600_525_505_731,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

// Gauss weights for the odd-indexed Kronrod nodes.
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    abs: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk21<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> Segment {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[10];
    let mut gauss = 0.0;
    let mut abs_k = kron.abs();
    let mut fv = [0.0f64; 21];
    fv[10] = fc;
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = f1;
        fv[20 - j] = f2;
        kron += WGK[j] * (f1 + f2);
        abs_k += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = kron * 0.5;
    let mut asc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        asc += WGK[j] * ((fv[j] - mean).abs() + (fv[20 - j] - mean).abs());
    }
    let value = kron * h;
    let resasc = asc * h.abs();
    let resabs = abs_k * h.abs();
    let mut error = ((kron - gauss) * h).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Segment {
        a,
        b,
        value,
        error,
        abs: resabs,
    }
}

/// Integrates `f` over `[a, b]` until the error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    integrate_with_limit(&mut f, a, b, abs_tol, rel_tol, 4000)
}

pub fn integrate_with_limit<F: FnMut(f64) -> f64>(
    f: &mut F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let first = gk21(f, a, b);
    let mut evals = 21;
    let mut value = first.value;
    let mut error = first.error;
    let mut abs = first.abs;
    let mut heap = BinaryHeap::new();
    heap.push(first);
    loop {
        if !value.is_finite() {
            return Err(Error::Quadrature {
                context: format!("non-finite integrand on [{a}, {b}]"),
                estimate: value,
                error,
            });
        }
        // below ~100 ulp of ∫|f| further bisection only chases roundoff
        let floor = 100.0 * f64::EPSILON * abs;
        if error <= abs_tol.max(rel_tol * value.abs()).max(floor) {
            return Ok(Integral {
                value,
                error,
                evaluations: evals,
            });
        }
        if heap.len() >= max_segments {
            return Err(Error::Quadrature {
                context: format!("segment limit on [{a}, {b}]"),
                estimate: value,
                error,
            });
        }
        let worst = heap.pop().expect("heap is non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // cannot bisect further; accept what we have
            return Ok(Integral {
                value,
                error,
                evaluations: evals,
            });
        }
        let left = gk21(f, worst.a, mid);
        let right = gk21(f, mid, worst.b);
        evals += 42;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        abs += left.abs + right.abs - worst.abs;
        heap.push(left);
        heap.push(right);
        // refresh the running sums now and then to limit drift
        if heap.len() % 64 == 0 {
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
            abs = heap.iter().map(|s| s.abs).sum();
        }
    }
}

/// Integrates over `[a, inf)` with the map `x = a + s / (1 - s)`.
pub fn integrate_to_infinity<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Integral> {
    integrate(
        |s| {
            if s >= 1.0 {
                return 0.0;
            }
            let d = 1.0 - s;
            let v = f(a + s / d) / (d * d);
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        0.0,
        1.0,
        abs_tol,
        rel_tol,
    )
}
