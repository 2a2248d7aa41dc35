//! Quadrature on logarithmic grids for `dt/t` integrals.

use crate::numeric::{neumaier_sum, parabolic_vertex};

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Nodes `10^{k/per_decade}` covering `[lo, hi]`, anchored at whole decades so
/// that grids for dilated problems share nodes.
pub fn decade_nodes(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let pd = per_decade as f64;
    let k0 = (lo.log10() * pd + 1e-9).floor() as i64;
    let k1 = (hi.log10() * pd - 1e-9).ceil() as i64;
    (k0..=k1).map(|k| 10f64.powf(k as f64 / pd)).collect()
}

/// `n` nodes log-uniformly spaced from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| match i {
            0 => lo,
            _ if i == n - 1 => hi,
            _ => (a + step * i as f64).exp(),
        })
        .collect()
}

/// Trapezoid weights in `ln t` for `n` equally spaced log nodes.
pub fn trapezoid_ln_weights(n: usize, ln_step: f64) -> Vec<f64> {
    let mut w = vec![ln_step; n];
    if n > 0 {
        w[0] *= 0.5;
        w[n - 1] *= 0.5;
    }
    if n == 1 {
        w[0] = 0.0;
    }
    w
}

/// `∫ v(t) dt/t` by the trapezoid rule in `ln t`.
pub fn trapezoid_ln(values: &[f64], ln_step: f64) -> f64 {
    let w = trapezoid_ln_weights(values.len(), ln_step);
    neumaier_sum(values.iter().zip(&w).map(|(v, w)| v * w))
}

/// `∫_{t0}^{t1} v(t) dt/t` with `v ≈ C·t^a` fitted through the endpoint values.
///
/// Falls back to the trapezoid rule in `ln t` when an endpoint is not
/// positive.
pub fn power_cell(t0: f64, t1: f64, v0: f64, v1: f64) -> f64 {
    let span = (t1 / t0).ln();
    if !(v0 > 0.0 && v1 > 0.0) {
        return 0.5 * (v0 + v1) * span;
    }
    let x = (v1 / v0).ln();
    if x.abs() < 1e-12 {
        return v0 * span * (1.0 + 0.5 * x);
    }
    v0 * span * x.exp_m1() / x
}

/// Cumulative `∫_{t_0}^{t_i} v dt/t` using per-cell power laws.
pub fn power_cumulative(ts: &[f64], vs: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ts.len());
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    out.push(0.0);
    for i in 1..ts.len() {
        let x = power_cell(ts[i - 1], ts[i], vs[i - 1], vs[i]);
        let s = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - s) + x;
        } else {
            comp += (x - s) + sum;
        }
        sum = s;
        out.push(sum + comp);
    }
    out
}

const GL5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// Per-cell `∫ v dt/t` with `ln v` interpolated in `ln t` by the smoothest of
/// the cubic stencils covering each cell. Exact for piecewise powers whose
/// kinks sit on nodes; fourth order for smooth positive integrands.
pub fn eno_cells(ts: &[f64], vs: &[f64]) -> Vec<f64> {
    let n = ts.len();
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NAN }).collect();
    (0..n.saturating_sub(1))
        .map(|i| {
            let base = power_cell(ts[i], ts[i + 1], vs[i], vs[i + 1]);
            if !(ys[i].is_finite() && ys[i + 1].is_finite()) {
                return base;
            }
            let Some((nodes, coeffs)) = smoothest_stencil(&xs, &ys, i) else {
                return base;
            };
            let (x0, x1) = (xs[i], xs[i + 1]);
            let half = 0.5 * (x1 - x0);
            let mid = 0.5 * (x0 + x1);
            let slope = (ys[i + 1] - ys[i]) / (x1 - x0);
            let corr: f64 = GL5
                .iter()
                .map(|(u, w)| {
                    let x = mid + half * u;
                    let chord = ys[i] + slope * (x - x0);
                    w * chord.exp() * (eval_newton(&nodes, &coeffs, x) - chord).exp_m1()
                })
                .sum();
            base + half * corr
        })
        .collect()
}

/// Among the 4-point stencils containing cell `i`, the one with the smallest
/// third divided difference (centered preferred on ties).
fn smoothest_stencil(xs: &[f64], ys: &[f64], i: usize) -> Option<([f64; 4], [f64; 4])> {
    let n = xs.len();
    let mut best: Option<([f64; 4], [f64; 4])> = None;
    for s in [i as i64 - 1, i as i64 - 2, i as i64] {
        if s < 0 || s as usize + 3 >= n {
            continue;
        }
        let s = s as usize;
        if ys[s..s + 4].iter().any(|y| !y.is_finite()) {
            continue;
        }
        let c = newton_coeffs(&xs[s..s + 4], &ys[s..s + 4]);
        if best.is_none_or(|(_, b)| c[3].abs() < b[3].abs()) {
            best = Some(([xs[s], xs[s + 1], xs[s + 2], xs[s + 3]], c));
        }
    }
    best
}

fn newton_coeffs(x: &[f64], y: &[f64]) -> [f64; 4] {
    let mut c = [y[0], y[1], y[2], y[3]];
    for j in 1..4 {
        for k in (j..4).rev() {
            c[k] = (c[k] - c[k - 1]) / (x[k] - x[k - j]);
        }
    }
    c
}

fn eval_newton(x: &[f64; 4], c: &[f64; 4], at: f64) -> f64 {
    let mut v = c[3];
    for k in (0..3).rev() {
        v = v * (at - x[k]) + c[k];
    }
    v
}

/// Local log-slope `d ln v / d ln t` between two samples.
pub fn log_slope(t0: f64, t1: f64, v0: f64, v1: f64) -> f64 {
    (v1 / v0).ln() / (t1 / t0).ln()
}

/// `∫_t^∞ v·(u/t)^a du/u = v/(−a)`, finite only for `a < 0`.
pub fn upper_tail(v: f64, slope: f64) -> Option<f64> {
    if v == 0.0 {
        return Some(0.0);
    }
    (slope < 0.0).then(|| v / -slope)
}

/// `∫_0^t v·(u/t)^a du/u = v/a`, finite only for `a > 0`.
pub fn lower_tail(v: f64, slope: f64) -> Option<f64> {
    if v == 0.0 {
        return Some(0.0);
    }
    (slope > 0.0).then(|| v / slope)
}

/// Maximum of `g` over `[lo, hi]` given an interior point `mid` whose value
/// dominates both ends. Seeds with a parabolic vertex, then golden-section
/// search to a bracket of width `tol`. Returns `(argmax, max)`.
pub fn refine_max<F: FnMut(f64) -> f64>(mut g: F, lo: f64, mid: f64, hi: f64, tol: f64) -> (f64, f64) {
    let g_mid = g(mid);
    let mut best = (mid, g_mid);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut gc = g(c);
    let mut gd = g(d);
    for (x, v) in [(c, gc), (d, gd)] {
        if v > best.1 {
            best = (x, v);
        }
    }
    while (b - a) > tol {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - INV_PHI * (b - a);
            gc = g(c);
            if gc > best.1 {
                best = (c, gc);
            }
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + INV_PHI * (b - a);
            gd = g(d);
            if gd > best.1 {
                best = (d, gd);
            }
        }
    }
    best
}

/// Largest sample and its 3-point parabolic refinement in the index
/// coordinate. Returns `(index, refined offset in [-1,1], refined value)`.
pub fn discrete_max(values: &[f64]) -> (usize, f64, f64) {
    let (i, v) = values.iter().enumerate().fold(
        (0, f64::NEG_INFINITY),
        |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) },
    );
    if i == 0 || i + 1 >= values.len() {
        return (i, 0.0, v);
    }
    match parabolic_vertex(values[i - 1], v, values[i + 1]) {
        Some((off, val)) if val >= v => (i, off, val),
        _ => (i, 0.0, v),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decade_anchoring() {
        let a = decade_nodes(1e-2, 1e2, 10);
        assert_eq!(a.len(), 41);
        assert!((a[0] - 1e-2).abs() < 1e-17);
        assert!((a[40] - 1e2).abs() < 1e-12);
        let b = decade_nodes(0.5, 3.0, 10);
        assert!(b[0] <= 0.5 && *b.last().unwrap() >= 3.0);
        assert!(a.iter().any(|x| (x - b[0]).abs() < 1e-15));
    }

    #[test]
    fn trapezoid_is_spectral_for_decaying_integrands() {
        // ∫₀^∞ t e^{-t} dt/t = 1
        let ts = log_spaced(1e-12, 1e2, 400);
        let step = (1e2f64 / 1e-12).ln() / 399.0;
        let vs: Vec<f64> = ts.iter().map(|t| t * (-t).exp()).collect();
        assert!((trapezoid_ln(&vs, step) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn power_cells_exact_on_powers() {
        let ts = log_spaced(0.1, 10.0, 7);
        let vs: Vec<f64> = ts.iter().map(|t| t.powf(1.5)).collect();
        let c = power_cumulative(&ts, &vs);
        let exact = (10f64.powf(1.5) - 0.1f64.powf(1.5)) / 1.5;
        assert!((c[6] - exact).abs() < 1e-12 * exact);
        assert!((power_cell(1.0, 2.0, 3.0, 3.0) - 3.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(upper_tail(2.0, -0.5), Some(4.0));
        assert_eq!(upper_tail(2.0, 0.5), None);
        assert_eq!(lower_tail(2.0, 2.0), Some(1.0));
    }

    #[test]
    fn eno_cells_fourth_order_and_exact_on_kinked_powers() {
        // ∫₀^∞ e^{-t} t dt/t over a truncated range
        for (n, tol) in [(161usize, 5e-7), (641, 2e-9)] {
            let ts = log_spaced(1e-3, 1e1, n);
            let vs: Vec<f64> = ts.iter().map(|t| t * (-t).exp()).collect();
            let s: f64 = eno_cells(&ts, &vs).iter().sum();
            let exact = (-1e-3f64).exp() - (-10f64).exp();
            assert!((s - exact).abs() < tol * exact, "{n}: {:e}", s - exact);
        }
        let ts = log_spaced(1e-2, 1e2, 41);
        let vs: Vec<f64> = ts.iter().map(|t| t.min(1.0 / t)).collect();
        let s: f64 = eno_cells(&ts, &vs).iter().sum();
        assert!((s - 1.98).abs() < 1e-13);
    }

    #[test]
    fn golden_refinement() {
        let (x, v) = refine_max(|u: f64| -(u - 0.3).powi(2) + 2.0, -1.0, 0.0, 1.0, 1e-6);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((v - 2.0).abs() < 1e-12);
        let (i, off, val) = discrete_max(&[0.0, 1.0, 0.5]);
        assert_eq!(i, 1);
        assert!(off > 0.0 && val >= 1.0);
    }
}
