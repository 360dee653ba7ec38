//! Independent reference computations used by the integration tests.
//! None of these call into the library.
#![allow(dead_code)]

/// Neumaier-compensated sum.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Composite Simpson with `panels` panels and compensated accumulation.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let inner = (0..panels).map(|i| {
        let x0 = a + i as f64 * h;
        let x1 = if i + 1 == panels { b } else { a + (i + 1) as f64 * h };
        (f(x0) + 4.0 * f(0.5 * (x0 + x1)) + f(x1)) * (x1 - x0) / 6.0
    });
    compensated_sum(inner)
}

/// `erf` by its Maclaurin series, `terms` terms.
pub fn erf_series(x: f64, terms: usize) -> f64 {
    let mut term = x;
    let mut acc = Vec::with_capacity(terms);
    for n in 0..terms {
        acc.push(term / (2 * n + 1) as f64);
        term *= -x * x / (n + 1) as f64;
    }
    2.0 / std::f64::consts::PI.sqrt() * compensated_sum(acc)
}

/// Maximum of `ηx − η²y` over `[0, 1/2]` and where it is attained.
pub fn peak(x: f64, y: f64) -> (f64, f64) {
    let g = |e: f64| e * x - e * e * y;
    let mut best = (0.0, g(0.0));
    for e in [0.5, if y > 0.0 { (x / (2.0 * y)).clamp(0.0, 0.5) } else { 0.0 }] {
        if g(e) > best.1 {
            best = (e, g(e));
        }
    }
    best
}

/// `ln ∫₀^{1/2} η^p exp(ηx − η²y) dη` (p ∈ {0, 1}) by Simpson on a mesh
/// graded geometrically towards the peak of the exponent.
pub fn ln_moment_graded(x: f64, y: f64, p: i32) -> f64 {
    let (e0, m) = peak(x, y);
    let f = |e: f64| e.powi(p) * (e * x - e * e * y - m).exp();
    let mut pieces = Vec::new();
    for (lo, hi) in [(0.0, e0), (e0, 0.5)] {
        let width = hi - lo;
        if width <= 0.0 {
            continue;
        }
        // Break points at distance width·2^-j from the peak.
        let mut cuts: Vec<f64> = (0..60)
            .map(|j| width * 0.5f64.powi(j))
            .map(|d| if lo == e0 { lo + d } else { hi - d })
            .collect();
        cuts.push(e0);
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            pieces.push(simpson(&f, w[0], w[1], 400));
        }
    }
    m + compensated_sum(pieces).ln()
}

/// `∫₀^{1/2} η^p exp(ηx − η²y) dη` by uniform Simpson with `panels` panels.
pub fn moment_uniform(x: f64, y: f64, p: i32, panels: usize) -> f64 {
    simpson(|e| e.powi(p) * (e * x - e * e * y).exp(), 0.0, 0.5, panels)
}

/// CV-prior moment `∫₀^{1/2} exp(ηR − η²V) ln2 / ln²η dη`, by Simpson on a
/// geometric mesh in `η` (down to `2^-200`, below which the tail is `< 1e-300`-relative).
pub fn cv_moment(r: f64, v: f64) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let f = |e: f64| {
        if e == 0.0 {
            0.0
        } else {
            (e * r - e * e * v).exp() * ln2 / (e.ln() * e.ln())
        }
    };
    let mut pieces = Vec::new();
    for j in 1..200 {
        let hi = 0.5f64.powi(j);
        let lo = hi / 2.0;
        pieces.push(simpson(&f, lo, hi, 64));
    }
    // Remaining mass on [0, 2^-200]: ∫ ln2/ln²η dη ≤ ln2·2^-200/ln²(2^-200).
    compensated_sum(pieces)
}

/// Binary relative entropy, coordinate by coordinate.
pub fn delta2(v: &[f64], u: &[f64]) -> f64 {
    let mut s = 0.0;
    for (&a, &b) in v.iter().zip(u) {
        if a > 0.0 {
            s += a * (a / b).ln();
        }
        if a < 1.0 {
            s += (1.0 - a) * ((1.0 - a) / (1.0 - b)).ln();
        }
    }
    s
}

/// Simple deterministic generator for test inputs (SplitMix64).
pub struct SplitMix(pub u64);

impl SplitMix {
    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }
}

/// KSubsets projection by a dense sweep over the dual parameter followed by
/// bisection on the bracketing cell.
pub fn ksubsets_projection_oracle(u: &[f64], m: usize) -> Vec<f64> {
    let z: Vec<f64> = u.iter().map(|&x| (x / (1.0 - x)).ln()).collect();
    let total = |l: f64| z.iter().map(|&zi| 1.0 / (1.0 + (-(zi + l)).exp())).sum::<f64>() - m as f64;
    let mut prev = -60.0;
    let mut bracket = (-60.0, 60.0);
    for i in 1..=12_000 {
        let l = -60.0 + i as f64 * 0.01;
        if total(l) >= 0.0 {
            bracket = (prev, l);
            break;
        }
        prev = l;
    }
    let (mut lo, mut hi) = bracket;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if total(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let l = 0.5 * (lo + hi);
    z.iter().map(|&zi| 1.0 / (1.0 + (-(zi + l)).exp())).collect()
}

/// Edges of a layered six-node DAG, source 0 and sink 5.
pub const SIX_NODE_EDGES: [(usize, usize); 10] = [
    (0, 1),
    (0, 2),
    (1, 2),
    (1, 3),
    (2, 3),
    (2, 4),
    (1, 4),
    (3, 4),
    (3, 5),
    (4, 5),
];
