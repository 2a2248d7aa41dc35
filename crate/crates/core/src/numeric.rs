//! Small numeric kernels shared across modules.

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `a^e - b^e` for `a ≥ b ≥ 0`, accurate when `a` and `b` are close.
pub(crate) fn pow_diff(a: f64, b: f64, e: f64) -> f64 {
    if b <= 0.0 {
        return a.powf(e);
    }
    let rel = (a - b) / b;
    b.powf(e) * (e * rel.ln_1p()).exp_m1()
}

/// Physicists' Hermite polynomials `H_0(t), …, H_kmax(t)` written into `out`.
#[inline]
pub(crate) fn hermite_into(t: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = 2.0 * t;
    }
    for k in 1..out.len().saturating_sub(1) {
        out[k + 1] = 2.0 * t * out[k] - 2.0 * (k as f64) * out[k - 1];
    }
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Vertex of the parabola through `(−1, y0), (0, y1), (1, y2)`.
///
/// Returns the offset in `[-1, 1]` and the interpolated value, or `None`
/// when the three points are not strictly concave.
pub(crate) fn parabolic_vertex(y0: f64, y1: f64, y2: f64) -> Option<(f64, f64)> {
    let curvature = y0 - 2.0 * y1 + y2;
    if !(curvature < 0.0) {
        return None;
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    if !offset.is_finite() || offset.abs() > 1.0 {
        return None;
    }
    let value = y1 - 0.25 * (y0 - y2) * offset;
    Some((offset, value))
}
