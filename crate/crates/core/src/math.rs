// Elementary functions routed through `libm` so that results are identical
// with and without `std`, and across platforms.

#[inline]
pub(crate) fn pow(x: f64, y: f64) -> f64 {
    // small integer exponents are common and much cheaper by multiplication
    if y == 2.0 {
        x * x
    } else if y == 3.0 {
        x * x * x
    } else if y == 4.0 {
        let x2 = x * x;
        x2 * x2
    } else {
        libm::pow(x, y)
    }
}

#[inline]
pub(crate) fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub(crate) fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub(crate) fn expm1(x: f64) -> f64 {
    libm::expm1(x)
}

#[inline]
pub(crate) fn ln_1p(x: f64) -> f64 {
    libm::log1p(x)
}

#[inline]
pub(crate) fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub(crate) fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub(crate) fn floor(x: f64) -> f64 {
    libm::floor(x)
}

#[inline]
pub(crate) fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub(crate) fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub(crate) fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub(crate) fn abs(x: f64) -> f64 {
    libm::fabs(x)
}

#[inline]
pub(crate) fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    hypot(a[0] - b[0], a[1] - b[1])
}

/// `(t + dt)^p − t^p` without cancellation.
pub(crate) fn pow_increment(t: f64, dt: f64, p: f64) -> f64 {
    if t == 0.0 {
        pow(dt, p)
    } else if p == floor(p) && (1.0..=8.0).contains(&p) {
        // Σ_{k≥1} C(n,k) t^{n−k} dt^k by Horner in dt
        let n = p as u32;
        let mut acc = 0.0;
        let mut c = 1.0;
        let mut coeffs = [0.0f64; 9];
        for k in 1..=n {
            c = c * f64::from(n - k + 1) / f64::from(k);
            coeffs[k as usize] = c * pow_int(t, n - k);
        }
        for k in (1..=n).rev() {
            acc = acc * dt + coeffs[k as usize];
        }
        acc * dt
    } else {
        pow(t, p) * expm1(p * ln_1p(dt / t))
    }
}

fn pow_int(x: f64, n: u32) -> f64 {
    let mut r = 1.0;
    for _ in 0..n {
        r *= x;
    }
    r
}

/// Pairwise summation over a fixed index-order tree.
///
/// The split points depend only on the slice length, so the result is
/// bit-reproducible for a given input.
pub(crate) fn tree_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        let mut acc = 0.0;
        for v in values {
            acc += *v;
        }
        return acc;
    }
    let mid = values.len() / 2;
    tree_sum(&values[..mid]) + tree_sum(&values[mid..])
}

/// Geometric grid of `n` nodes from `lo` to `hi` inclusive.
pub(crate) fn geometric_grid(lo: f64, hi: f64, n: usize) -> alloc::vec::Vec<f64> {
    let n = n.max(2);
    let ratio = ln(hi / lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo * exp(ratio * i as f64)
            }
        })
        .collect()
}
