//! Thermic Besov, Triebel-Lizorkin and Triebel-Lizorkin-Lorentz quasinorms,
//! and Sobolev-Lorentz seminorms.
//!
//! The h-aggregations run on logarithmic node sets anchored at whole
//! decades. Finite `q` uses the trapezoid rule in `ln h`; `q = ∞` takes the
//! maximum over nodes refined around the argmax. With automatic ranges the
//! node set is extended until both endpoint residuals are acceptable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::funcspace::{grad_magnitude_field, AnalyticFunction, GridSpec, MultiIndex, SampledField};
use crate::heat::{apply_analytic, dh_m_analytic, HeatEvolver, HeatScale, LaplacianPower};
use crate::lorentz::{lorentz_norm_of, LorentzIndex};
use crate::numeric::parabolic_vertex;
use crate::quad::{log_slope, log_spaced, lower_tail, refine_max, trapezoid_ln, upper_tail};

/// Endpoint residual tolerance for finite-`q` integrals.
pub const NEGLIGIBLE: f64 = 1e-12;
/// Endpoint-to-peak ratio that brackets a supremum over `h`.
pub const SUP_BRACKET: f64 = 1e-3;
/// Relative change per decade accepted as an upper plateau of a supremum.
pub const PLATEAU: f64 = 1e-8;
/// Golden-section bracket width in `ln h` for refined suprema.
pub const REFINE_TOL: f64 = 1e-4;

/// Relative endpoint residual below which a stable power-law tail may be
/// closed analytically instead of extending the h-range.
pub const TAIL_GATE: f64 = 1e-6;

const MAX_DECADES: f64 = 40.0;
const NODE_CHUNK: usize = 8;

/// Smoothness `s`, integrability `p`, secondary `q` and derivative order `m`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessIndex {
    pub s: f64,
    pub p: Exponent,
    pub q: Exponent,
    pub m: u32,
}

impl SmoothnessIndex {
    /// `m = None` selects the smallest admissible order.
    pub fn new(s: f64, p: Exponent, q: Exponent, m: Option<u32>) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::InvalidIndex(format!("smoothness must be finite, got {s}")));
        }
        let m = m.unwrap_or_else(|| Self::default_m(s));
        if 2.0 * m as f64 <= s {
            return Err(Error::InvalidIndex(format!("need 2m > s, got m={m}, s={s}")));
        }
        Ok(SmoothnessIndex { s, p, q, m })
    }

    pub fn from_f64(s: f64, p: f64, q: f64, m: Option<u32>) -> Result<Self> {
        Self::new(s, Exponent::new(p)?, Exponent::new(q)?, m)
    }

    /// `max(0, ⌊s/2⌋ + 1)`.
    pub fn default_m(s: f64) -> u32 {
        ((s / 2.0).floor() + 1.0).max(0.0) as u32
    }

    /// Power of `h` multiplying `|∂_h^m P_h f|`.
    pub fn weight_exponent(&self) -> f64 {
        self.m as f64 - self.s / 2.0
    }
}

/// h-node policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum QuadratureSpec {
    Fixed { hmin: f64, hmax: f64, nodes: usize },
    Auto { per_decade: usize },
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec::Auto { per_decade: 16 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            QuadratureSpec::Fixed { hmin, hmax, nodes } => {
                if !(hmin > 0.0 && hmax > hmin && hmax.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "need 0 < hmin < hmax, got [{hmin}, {hmax}]"
                    )));
                }
                if nodes < 50 {
                    return Err(Error::InvalidArgument(format!("need at least 50 nodes, got {nodes}")));
                }
            }
            QuadratureSpec::Auto { per_decade } => {
                if per_decade < 4 {
                    return Err(Error::InvalidArgument(format!(
                        "need at least 4 nodes per decade, got {per_decade}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// The node set actually used.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizedQuad {
    pub hmin: f64,
    pub hmax: f64,
    pub nodes: usize,
}

/// A quasinorm value with its quadrature metadata.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormValue {
    pub value: f64,
    pub m: u32,
    pub quad: RealizedQuad,
    /// Endpoint-to-peak ratios `[lower, upper]`.
    pub endpoint_residuals: [f64; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    Lorentz,
    Besov,
    TriebelLizorkin,
    TlLorentz,
    SobolevLorentz,
}

/// JSON row for one quasinorm evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub norm_kind: NormKind,
    pub indices: serde_json::Value,
    pub m: Option<u32>,
    pub quad: Option<RealizedQuad>,
    pub value: f64,
    pub endpoint_residuals: Option<[f64; 2]>,
}

impl NormRow {
    pub fn smooth(kind: NormKind, idx: &SmoothnessIndex, r: Option<Exponent>, v: &NormValue) -> Self {
        let mut indices = serde_json::json!({ "s": idx.s, "p": idx.p, "q": idx.q });
        if let Some(r) = r {
            indices["r"] = serde_json::to_value(r).expect("exponents serialize");
        }
        NormRow {
            norm_kind: kind,
            indices,
            m: Some(v.m),
            quad: Some(v.quad),
            value: v.value,
            endpoint_residuals: Some(v.endpoint_residuals),
        }
    }
}

/// Decade-anchored node `k`: `h = 10^{k/per_decade}`.
#[inline]
fn node(k: i64, pd: usize) -> f64 {
    10f64.powf(k as f64 / pd as f64)
}

fn k_floor(h: f64, pd: usize) -> i64 {
    (h.log10() * pd as f64 + 1e-9).floor() as i64
}

fn k_ceil(h: f64, pd: usize) -> i64 {
    (h.log10() * pd as f64 - 1e-9).ceil() as i64
}

fn residual(end: f64, peak: f64, q: Exponent) -> f64 {
    if peak <= 0.0 {
        return 0.0;
    }
    let r = end / peak;
    if q.is_infinite() {
        r
    } else {
        r.powf(q.get())
    }
}

/// Closed power-law tail of `∫ v^q dh/h` beyond one end of a uniform
/// ln-h node set with `pd` nodes per decade. Returns `(mass, error)` where
/// the error is the spread between the last two decade slopes.
fn power_tail(vs: &[f64], pd: usize, q: f64, lower: bool) -> Option<(f64, f64)> {
    let n = vs.len();
    if n <= 2 * pd {
        return None;
    }
    let at = |i: usize| if lower { vs[i].powf(q) } else { vs[n - 1 - i].powf(q) };
    let (e, a1, a2) = (at(0), at(pd), at(2 * pd));
    if e == 0.0 {
        return Some((0.0, 0.0));
    }
    let step = if lower {
        std::f64::consts::LN_10
    } else {
        -std::f64::consts::LN_10
    };
    let s1 = log_slope(1.0, step.exp(), e, a1);
    let s2 = log_slope(1.0, step.exp(), a1, a2);
    let (mass, spread) = if lower {
        (lower_tail(e, s1)?, lower_tail(e, s2)?)
    } else {
        (upper_tail(e, s1)?, upper_tail(e, s2)?)
    };
    Some((mass, (mass - spread).abs()))
}

fn end_tolerance(q: Exponent) -> f64 {
    if q.is_infinite() {
        SUP_BRACKET
    } else {
        NEGLIGIBLE
    }
}

/// Aggregate a scalar h-profile `I(h)`.
fn scalar_aggregate<F>(
    integrand: &F,
    q: Exponent,
    quad: &QuadratureSpec,
    scale: (f64, f64),
    cap: f64,
    m: u32,
) -> Result<NormValue>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    quad.validate()?;
    let eval = |hs: &[f64]| -> Result<Vec<f64>> { hs.par_iter().map(|h| integrand(*h)).collect() };
    let mut plateau = None;
    let mut tails = [0.0f64; 2];
    let mut closure: [Option<f64>; 2] = [None; 2];
    let (hs, vs, ln_step) = match *quad {
        QuadratureSpec::Fixed { hmin, hmax, nodes } => {
            if hmax > cap {
                return Err(Error::InvalidArgument(format!(
                    "hmax = {hmax} exceeds the admissible {cap}"
                )));
            }
            let hs = log_spaced(hmin, hmax, nodes);
            let vs = eval(&hs)?;
            let step = (hmax / hmin).ln() / (nodes - 1) as f64;
            let peak = vs.iter().fold(0.0f64, |a, v| a.max(*v));
            let res = [residual(vs[0], peak, q), residual(vs[nodes - 1], peak, q)];
            let tol = end_tolerance(q);
            if res[0] > tol || res[1] > tol {
                return Err(Error::QuadratureUnderresolved {
                    lower: res[0],
                    upper: res[1],
                    tolerance: tol,
                });
            }
            (hs, vs, step)
        }
        QuadratureSpec::Auto { per_decade: pd } => {
            let k_min = k_floor(scale.0 * 10f64.powf(-MAX_DECADES), pd);
            let k_max = k_floor(cap.min(scale.1 * 10f64.powf(MAX_DECADES)), pd);
            let mut k_lo = k_floor(scale.0 * 1e-2, pd).max(k_min);
            let mut k_hi = k_ceil(scale.1 * 1e2, pd).min(k_max);
            if k_hi <= k_lo + 2 {
                return Err(Error::InvalidArgument("admissible h range is empty".into()));
            }
            let ks: Vec<i64> = (k_lo..=k_hi).collect();
            let mut vs = eval(&ks.iter().map(|k| node(*k, pd)).collect::<Vec<_>>())?;
            loop {
                let peak = vs.iter().fold(0.0f64, |a, v| a.max(*v));
                let n = vs.len();
                let tol = end_tolerance(q);
                let lower = residual(vs[0], peak, q);
                let mut upper = residual(vs[n - 1], peak, q);
                let lower_ok = lower <= tol;
                let mut upper_ok = upper <= tol;
                if !upper_ok && q.is_infinite() && n > pd {
                    let change = (vs[n - 1] - vs[n - 1 - pd]).abs() / vs[n - 1];
                    if change < PLATEAU {
                        upper_ok = true;
                        upper = change;
                        plateau = Some(change);
                    }
                }
                let mut lower_ok = lower_ok;
                if !q.is_infinite() && (!lower_ok || !upper_ok) && lower.max(upper) <= TAIL_GATE {
                    let qv = q.get();
                    let pw: Vec<f64> = vs.iter().map(|v| v.powf(qv)).collect();
                    let total = trapezoid_ln(&pw, std::f64::consts::LN_10 / pd as f64);
                    for (end, ok) in [(0, &mut lower_ok), (1, &mut upper_ok)] {
                        if *ok {
                            continue;
                        }
                        if let Some((mass, err)) = power_tail(&vs, pd, qv, end == 0) {
                            if err <= tol * total {
                                *ok = true;
                                tails[end] = mass;
                                closure[end] = Some(err / total);
                            }
                        }
                    }
                }
                if lower_ok && upper_ok {
                    break;
                }
                plateau = None;
                tails = [0.0; 2];
                closure = [None; 2];
                let extend_lo = !lower_ok && k_lo > k_min;
                let extend_hi = !upper_ok && k_hi < k_max;
                if !extend_lo && !extend_hi {
                    return Err(Error::QuadratureUnderresolved {
                        lower,
                        upper,
                        tolerance: tol,
                    });
                }
                if extend_lo {
                    let new_lo = (k_lo - 2 * pd as i64).max(k_min);
                    let hs: Vec<f64> = (new_lo..k_lo).map(|k| node(k, pd)).collect();
                    let mut head = eval(&hs)?;
                    head.extend_from_slice(&vs);
                    vs = head;
                    k_lo = new_lo;
                }
                if extend_hi {
                    let new_hi = (k_hi + 2 * pd as i64).min(k_max);
                    let hs: Vec<f64> = (k_hi + 1..=new_hi).map(|k| node(k, pd)).collect();
                    vs.extend(eval(&hs)?);
                    k_hi = new_hi;
                }
            }
            let hs = (k_lo..=k_hi).map(|k| node(k, pd)).collect();
            (hs, vs, std::f64::consts::LN_10 / pd as f64)
        }
    };
    let n = vs.len();
    let peak = vs.iter().fold(0.0f64, |a, v| a.max(*v));
    let mut res = [
        closure[0].unwrap_or_else(|| residual(vs[0], peak, q)),
        closure[1].or(plateau).unwrap_or_else(|| residual(vs[n - 1], peak, q)),
    ];
    let value = if peak == 0.0 {
        res = [0.0, 0.0];
        0.0
    } else if q.is_infinite() {
        let (i, _) = vs.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(bi, bv), (i, v)| if *v > bv { (i, *v) } else { (bi, bv) },
        );
        if i == 0 || i + 1 == n {
            peak
        } else {
            let failed = std::sync::atomic::AtomicBool::new(false);
            let g = |u: f64| match integrand(u.exp()) {
                Ok(v) => v,
                Err(_) => {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                    f64::NAN
                }
            };
            let (_, v) = refine_max(g, hs[i - 1].ln(), hs[i].ln(), hs[i + 1].ln(), REFINE_TOL);
            if failed.into_inner() || !v.is_finite() {
                return Err(Error::Numeric("supremum refinement failed".into()));
            }
            v.max(peak)
        }
    } else {
        let qv = q.get();
        let pw: Vec<f64> = vs.iter().map(|v| v.powf(qv)).collect();
        (trapezoid_ln(&pw, ln_step) + tails[0] + tails[1]).powf(1.0 / qv)
    };
    if !value.is_finite() {
        return Err(Error::Numeric(format!("quasinorm evaluated to {value}")));
    }
    Ok(NormValue {
        value,
        m,
        quad: RealizedQuad {
            hmin: hs[0],
            hmax: hs[n - 1],
            nodes: n,
        },
        endpoint_residuals: res,
    })
}

fn analytic_grid(f: &AnalyticFunction, h: f64, m: u32) -> Result<GridSpec> {
    let (a_min, a_max) = f.width_range();
    let c_max = f
        .gaussian_terms()?
        .iter()
        .flat_map(|t| t.center.iter())
        .fold(0.0f64, |a, c| a.max(c.abs()));
    let half = c_max + 10.0 * (2.0 * (a_max + h)).sqrt();
    let (res, cap) = if f.dim() == 1 {
        (4.0 + 2.0 * m as f64, 1usize << 16)
    } else {
        (2.0 + m as f64, 1usize << 10)
    };
    let target = (a_min + h).sqrt() / res;
    let n = ((2.0 * half / target).ceil() as usize)
        .next_power_of_two()
        .clamp(32, cap);
    GridSpec::new(f.dim(), half, n)
}

/// `‖∂_h^m P_h f‖_p` for a Gaussian mixture on an h-adapted grid (closed
/// form for a single term with `m = 0`).
pub fn analytic_dh_norm(f: &AnalyticFunction, h: HeatScale, m: u32, p: Exponent) -> Result<f64> {
    let evolved = apply_analytic(f, h)?;
    let terms = evolved.gaussian_terms()?;
    if m == 0 && terms.len() == 1 {
        let t = &terms[0];
        let n = f.dim() as f64;
        if p.is_infinite() {
            return Ok(t.amp.abs());
        }
        let pv = p.get();
        return Ok(t.amp.abs() * (4.0 * std::f64::consts::PI * t.width / pv).powf(n / (2.0 * pv)));
    }
    let g = analytic_grid(f, h.get(), m)?;
    let lap = LaplacianPower::new(&evolved, m)?;
    let dim = g.dim();
    let field = SampledField::from_fn(g, |x| lap.eval(&x[..dim]))?;
    if !p.is_infinite() {
        return Ok(field.lp_norm(p.get()));
    }
    let (imax, vmax) =
        field.values().iter().enumerate().fold(
            (0, 0.0f64),
            |(bi, bv), (i, v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) },
        );
    Ok(refine_point_max(&lap, g.point(imax), g.spacing(), dim).max(vmax))
}

/// Local maximum of `|Δ^m f|` near a cell center, by coordinate-wise
/// golden-section search within one cell in each direction.
fn refine_point_max(lap: &LaplacianPower, start: [f64; 2], dx: f64, dim: usize) -> f64 {
    let mut x = start;
    let mut best = lap.eval(&x[..dim]).abs();
    for _ in 0..if dim == 1 { 1 } else { 3 } {
        for axis in 0..dim {
            let base = x;
            let g = |u: f64| {
                let mut y = base;
                y[axis] = u;
                lap.eval(&y[..dim]).abs()
            };
            let c = base[axis];
            let (u, v) = refine_max(g, c - dx, c, c + dx, dx * 1e-6);
            if v > best {
                best = v;
                x[axis] = u;
            }
        }
    }
    best
}

/// Thermic Besov quasinorm of a Gaussian mixture, grid-free in `h`.
pub fn besov_norm(f: &AnalyticFunction, idx: &SmoothnessIndex, quad: &QuadratureSpec) -> Result<NormValue> {
    f.gaussian_terms()?;
    let we = idx.weight_exponent();
    let integrand = |h: f64| -> Result<f64> {
        let v = analytic_dh_norm(f, HeatScale::new(h)?, idx.m, idx.p)?;
        Ok(h.powf(we) * v)
    };
    let scale = f.width_range();
    scalar_aggregate(&integrand, idx.q, quad, scale, f64::MAX, idx.m)
}

/// `‖D^ν f‖` in thermic Besov form with `m = 0`, using `P_h D^ν f = D^ν P_h f`.
pub fn besov_norm_of_derivative(
    f: &AnalyticFunction,
    nu: &MultiIndex,
    idx: &SmoothnessIndex,
    quad: &QuadratureSpec,
) -> Result<NormValue> {
    f.gaussian_terms()?;
    if idx.m != 0 {
        return Err(Error::InvalidIndex(format!(
            "derivative Besov norms need m = 0, got {}",
            idx.m
        )));
    }
    if nu.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: nu.dim(),
        });
    }
    let we = idx.weight_exponent();
    let dim = f.dim();
    let integrand = |h: f64| -> Result<f64> {
        let d = apply_analytic(f, HeatScale::new(h)?)?.derivative(nu)?;
        let g = analytic_grid(f, h, nu.order())?;
        let field = SampledField::from_fn(g, |x| d.eval(&x[..dim]))?;
        let v = if idx.p.is_infinite() {
            field.max_abs()
        } else {
            field.lp_norm(idx.p.get())
        };
        Ok(h.powf(we) * v)
    };
    scalar_aggregate(&integrand, idx.q, quad, f.width_range(), f64::MAX, 0)
}

/// Largest `h` for which the kernel fits the grid.
pub fn h_cap(g: &GridSpec) -> f64 {
    (g.half_width() / 10.0).powi(2) / 2.0
}

/// Thermic Besov quasinorm of a sampled field via FFT convolution.
pub fn besov_norm_sampled(f: &SampledField, idx: &SmoothnessIndex, quad: &QuadratureSpec) -> Result<NormValue> {
    let ev = HeatEvolver::new(f)?;
    let we = idx.weight_exponent();
    let p = idx.p.get();
    let integrand = |h: f64| -> Result<f64> {
        let field = ev.dh_m(HeatScale::new(h)?, idx.m)?;
        Ok(h.powf(we) * field.lp_norm(p))
    };
    let g = f.grid();
    let cap = h_cap(g);
    let dx2 = g.spacing().powi(2);
    scalar_aggregate(&integrand, idx.q, quad, (dx2, cap / 100.0), cap, idx.m)
}

/// Source of `∂_h^m P_h f` fields on a fixed grid.
pub trait Evolution: Sync {
    fn grid(&self) -> GridSpec;
    fn field(&self, h: f64, m: u32) -> Result<SampledField>;
    /// Largest admissible `h`.
    fn h_cap(&self) -> f64;
    /// Characteristic `h` range of the data.
    fn scale(&self) -> (f64, f64);
}

impl Evolution for HeatEvolver {
    fn grid(&self) -> GridSpec {
        *HeatEvolver::grid(self)
    }

    fn field(&self, h: f64, m: u32) -> Result<SampledField> {
        self.dh_m(HeatScale::new(h)?, m)
    }

    fn h_cap(&self) -> f64 {
        h_cap(HeatEvolver::grid(self))
    }

    fn scale(&self) -> (f64, f64) {
        let g = HeatEvolver::grid(self);
        (g.spacing().powi(2), self.h_cap() / 100.0)
    }
}

/// Closed-form evolution of a Gaussian mixture sampled on a fixed grid.
#[derive(Clone, Debug)]
pub struct AnalyticEvolution {
    f: AnalyticFunction,
    grid: GridSpec,
}

impl AnalyticEvolution {
    pub fn new(f: &AnalyticFunction, grid: &GridSpec) -> Result<Self> {
        f.gaussian_terms()?;
        if f.dim() != grid.dim() {
            return Err(Error::DimensionMismatch {
                expected: grid.dim(),
                got: f.dim(),
            });
        }
        Ok(AnalyticEvolution {
            f: f.clone(),
            grid: *grid,
        })
    }
}

impl Evolution for AnalyticEvolution {
    fn grid(&self) -> GridSpec {
        self.grid
    }

    fn field(&self, h: f64, m: u32) -> Result<SampledField> {
        dh_m_analytic(&self.f, HeatScale::new(h)?, m, &self.grid)
    }

    fn h_cap(&self) -> f64 {
        f64::MAX
    }

    fn scale(&self) -> (f64, f64) {
        let (lo, hi) = self.f.width_range();
        let reach = 2.0 * self.grid.half_width();
        (lo, hi.max(reach * reach))
    }
}

/// Pointwise h-aggregate and its metadata.
#[derive(Clone, Debug)]
pub struct Aggregate {
    pub field: SampledField,
    /// Unrefined maximum over nodes (`q = ∞` only).
    pub node_max: Option<SampledField>,
    pub value: NormValue,
}

struct Stream {
    q: Exponent,
    first: Vec<f64>,
    last: Vec<f64>,
    best: Vec<f64>,
    before: Vec<f64>,
    after: Vec<f64>,
    best_k: Vec<usize>,
    sum: Vec<f64>,
    comp: Vec<f64>,
    seen: usize,
}

impl Stream {
    fn new(len: usize, q: Exponent) -> Self {
        Stream {
            q,
            first: vec![0.0; len],
            last: vec![0.0; len],
            best: vec![0.0; len],
            before: vec![0.0; len],
            after: vec![f64::NAN; len],
            best_k: vec![0; len],
            sum: vec![0.0; len],
            comp: vec![0.0; len],
            seen: 0,
        }
    }

    fn push(&mut self, vals: &[f64], weight: f64) {
        let k = self.seen;
        for (i, v) in vals.iter().enumerate() {
            let v = *v;
            if k == 0 {
                self.first[i] = v;
            }
            if self.q.is_infinite() {
                if k == 0 || v > self.best[i] {
                    self.before[i] = self.last[i];
                    self.best[i] = v;
                    self.best_k[i] = k;
                    self.after[i] = f64::NAN;
                } else if self.best_k[i] + 1 == k {
                    self.after[i] = v;
                }
            } else {
                let x = weight * v.powf(self.q.get());
                let s = self.sum[i] + x;
                if self.sum[i].abs() >= x.abs() {
                    self.comp[i] += (self.sum[i] - s) + x;
                } else {
                    self.comp[i] += (x - s) + self.sum[i];
                }
                self.sum[i] = s;
                self.best[i] = self.best[i].max(v);
            }
            self.last[i] = v;
        }
        self.seen += 1;
    }

    fn residuals(&self) -> [f64; 2] {
        let mut r = [0.0f64; 2];
        for i in 0..self.first.len() {
            r[0] = r[0].max(residual(self.first[i], self.best[i], self.q));
            r[1] = r[1].max(residual(self.last[i], self.best[i], self.q));
        }
        r
    }

    fn finish(&self) -> (Vec<f64>, Option<Vec<f64>>) {
        if self.q.is_infinite() {
            let n = self.seen;
            let refined = (0..self.best.len())
                .map(|i| {
                    let k = self.best_k[i];
                    if k == 0 || k + 1 >= n || self.after[i].is_nan() {
                        return self.best[i];
                    }
                    match parabolic_vertex(self.before[i], self.best[i], self.after[i]) {
                        Some((_, v)) => v.max(self.best[i]),
                        None => self.best[i],
                    }
                })
                .collect();
            (refined, Some(self.best.clone()))
        } else {
            let inv = 1.0 / self.q.get();
            (
                (0..self.sum.len())
                    .map(|i| (self.sum[i] + self.comp[i]).powf(inv))
                    .collect(),
                None,
            )
        }
    }
}

fn stream_pass(ev: &dyn Evolution, idx: &SmoothnessIndex, hs: &[f64], ln_step: f64) -> Result<Stream> {
    let grid = ev.grid();
    let mut st = Stream::new(grid.len(), idx.q);
    let we = idx.weight_exponent();
    let n = hs.len();
    for (c, chunk) in hs.chunks(NODE_CHUNK).enumerate() {
        let fields = chunk
            .par_iter()
            .map(|h| ev.field(*h, idx.m).map(|f| (*h, f)))
            .collect::<Result<Vec<_>>>()?;
        for (j, (h, f)) in fields.into_iter().enumerate() {
            let k = c * NODE_CHUNK + j;
            let w = if k == 0 || k + 1 == n { 0.5 * ln_step } else { ln_step };
            let scale = h.powf(we);
            let vals: Vec<f64> = f.values().iter().map(|v| scale * v.abs()).collect();
            st.push(&vals, w);
        }
    }
    Ok(st)
}

/// Relative change over the last decade at points whose supremum sits on the
/// final node, when every such point has flattened below `PLATEAU`.
fn pointwise_plateau(
    ev: &dyn Evolution,
    idx: &SmoothnessIndex,
    st: &Stream,
    h_prev: f64,
    tol: f64,
) -> Result<Option<f64>> {
    let field = ev.field(h_prev, idx.m)?;
    let scale = h_prev.powf(idx.weight_exponent());
    let mut change = 0.0f64;
    for (i, v) in field.values().iter().enumerate() {
        let last = st.last[i];
        if residual(last, st.best[i], st.q) <= tol {
            continue;
        }
        change = change.max((last - scale * v.abs()).abs() / last);
    }
    Ok((change < PLATEAU).then_some(change))
}

/// `x ↦ (∫ h^{(m−s/2)q} |∂_h^m P_h f(x)|^q dh/h)^{1/q}` (sup for `q = ∞`).
pub fn tl_pointwise_aggregate(ev: &dyn Evolution, idx: &SmoothnessIndex, quad: &QuadratureSpec) -> Result<Aggregate> {
    quad.validate()?;
    let grid = ev.grid();
    let tol = end_tolerance(idx.q);
    let build = |st: &Stream, hs: &[f64], res: [f64; 2]| -> Result<Aggregate> {
        let (vals, node_max) = st.finish();
        Ok(Aggregate {
            field: SampledField::new(grid, vals)?,
            node_max: node_max.map(|v| SampledField::new(grid, v)).transpose()?,
            value: NormValue {
                value: f64::NAN,
                m: idx.m,
                quad: RealizedQuad {
                    hmin: hs[0],
                    hmax: hs[hs.len() - 1],
                    nodes: hs.len(),
                },
                endpoint_residuals: res,
            },
        })
    };
    match *quad {
        QuadratureSpec::Fixed { hmin, hmax, nodes } => {
            if hmax > ev.h_cap() {
                return Err(Error::InvalidArgument(format!(
                    "hmax = {hmax} exceeds the admissible {}",
                    ev.h_cap()
                )));
            }
            let hs = log_spaced(hmin, hmax, nodes);
            let step = (hmax / hmin).ln() / (nodes - 1) as f64;
            let st = stream_pass(ev, idx, &hs, step)?;
            let res = st.residuals();
            if res[0] > tol || res[1] > tol {
                return Err(Error::QuadratureUnderresolved {
                    lower: res[0],
                    upper: res[1],
                    tolerance: tol,
                });
            }
            build(&st, &hs, res)
        }
        QuadratureSpec::Auto { per_decade: pd } => {
            let (lo, hi) = ev.scale();
            let cap = ev.h_cap();
            let k_min = k_floor(lo * 10f64.powf(-MAX_DECADES), pd);
            let k_max = k_floor(cap.min(hi * 10f64.powf(MAX_DECADES)), pd);
            let mut k_lo = k_floor(lo * 1e-3, pd).max(k_min);
            let mut k_hi = k_ceil(hi * 10.0, pd).min(k_max);
            let step = std::f64::consts::LN_10 / pd as f64;
            loop {
                let hs: Vec<f64> = (k_lo..=k_hi).map(|k| node(k, pd)).collect();
                let st = stream_pass(ev, idx, &hs, step)?;
                let mut res = st.residuals();
                if res[1] > tol && idx.q.is_infinite() && hs.len() > pd {
                    if let Some(change) = pointwise_plateau(ev, idx, &st, hs[hs.len() - 1 - pd], tol)? {
                        res[1] = change;
                    }
                }
                let extend_lo = res[0] > tol && k_lo > k_min;
                let extend_hi = res[1] > tol && k_hi < k_max;
                if res[0] <= tol && res[1] <= tol {
                    return build(&st, &hs, res);
                }
                if !extend_lo && !extend_hi {
                    return Err(Error::QuadratureUnderresolved {
                        lower: res[0],
                        upper: res[1],
                        tolerance: tol,
                    });
                }
                let grow = |r: f64| if r > 1e-2 { 4 } else { 2 } * pd as i64;
                if extend_lo {
                    k_lo = (k_lo - grow(res[0])).max(k_min);
                }
                if extend_hi {
                    k_hi = (k_hi + grow(res[1])).min(k_max);
                }
            }
        }
    }
}

/// `‖f‖_{Ḟ^s_{p,r;q}}`: Lorentz `(p, r)` norm of the pointwise aggregate.
pub fn tl_lorentz_norm(
    ev: &dyn Evolution,
    idx: &SmoothnessIndex,
    r: Exponent,
    quad: &QuadratureSpec,
) -> Result<NormValue> {
    if idx.p.is_infinite() {
        return Err(Error::UnsupportedIndex("Triebel-Lizorkin norms need p < inf".into()));
    }
    let agg = tl_pointwise_aggregate(ev, idx, quad)?;
    let value = lorentz_norm_of(&agg.field, LorentzIndex::new(idx.p, r)?)?;
    Ok(NormValue { value, ..agg.value })
}

/// Plain `Ḟ^s_{p,q}` (the case `r = p`).
pub fn tl_norm(ev: &dyn Evolution, idx: &SmoothnessIndex, quad: &QuadratureSpec) -> Result<NormValue> {
    tl_lorentz_norm(ev, idx, idx.p, quad)
}

/// `‖𝒟^r f‖_{p,q}` with `𝒟^r f = Σ_{|ν|=r} |D^ν f|`.
pub fn sobolev_lorentz_seminorm(f: &AnalyticFunction, r: u32, idx: LorentzIndex, g: &GridSpec) -> Result<f64> {
    lorentz_norm_of(&grad_magnitude_field(f, r, g)?, idx)
}

/// Whether `‖f‖_{Ḃ^s_{p,q}}` is finite for a Gaussian mixture: the profile
/// decays like `h^{−(s + n/p' + k)/2}` at large `h`, with `k` the number of
/// vanishing moments.
pub fn besov_finite(f: &AnalyticFunction, s: f64, p: Exponent, q: Exponent) -> bool {
    let n = f.dim() as f64;
    let k = f.vanishing_moment_order() as f64;
    let margin = s + n * (1.0 - p.recip()) + k;
    margin > 1e-12 || (q.is_infinite() && margin > -1e-12)
}

/// Whether `‖f‖_{Ḟ^s_{p,r;q}}` is finite: the aggregate decays like
/// `|x|^{−(n+s+k)}` at infinity.
pub fn tl_finite(f: &AnalyticFunction, s: f64, p: Exponent, r: Exponent) -> bool {
    let n = f.dim() as f64;
    let k = f.vanishing_moment_order() as f64;
    let decay = n + s + k;
    if p.is_infinite() {
        return decay >= 0.0;
    }
    let margin = p.get() * decay - n;
    margin > 1e-12 || (r.is_infinite() && margin > -1e-12)
}
