//! Gauss-Weierstrass kernel, heat semigroup and its h-derivatives.
//!
//! Sampled fields are convolved linearly on a grid zero-padded to `2N`
//! points per axis. For `h ≥ 2Δ²` the analytically sampled kernel is used;
//! below that the kernel is narrower than a cell and the exact Fourier
//! multiplier is applied to the padded spectrum instead.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::{AnalyticFunction, GaussianTerm, GridSpec, SampledField, TermPlan};
use crate::numeric::{binomial, factorial, neumaier_sum};
use crate::quad::{log_spaced, trapezoid_ln_weights};

/// Semigroup time `h > 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct HeatScale(f64);

impl HeatScale {
    pub fn new(h: f64) -> Result<Self> {
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "heat scale must be positive and finite, got {h}"
            )));
        }
        Ok(HeatScale(h))
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for HeatScale {
    type Error = Error;

    fn try_from(h: f64) -> Result<Self> {
        HeatScale::new(h)
    }
}

impl From<HeatScale> for f64 {
    fn from(h: HeatScale) -> f64 {
        h.0
    }
}

/// Generalized Laguerre polynomial `L_m^α`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaguerrePoly {
    degree: u32,
    alpha: f64,
    coeffs: Vec<f64>,
}

fn gen_binomial(x: f64, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, j| acc * (x - j as f64) / (j + 1) as f64)
}

impl LaguerrePoly {
    /// Coefficients `c_i = (−1)^i C(m+α, m−i) / i!`.
    pub fn new(degree: u32, alpha: f64) -> Self {
        let coeffs = (0..=degree)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                sign * gen_binomial(degree as f64 + alpha, degree - i) / factorial(i)
            })
            .collect();
        LaguerrePoly { degree, alpha, coeffs }
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    #[inline]
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c)
    }

    /// Evaluation through the three-term recurrence.
    pub fn eval_recurrence(degree: u32, alpha: f64, u: f64) -> f64 {
        let mut prev = 1.0;
        if degree == 0 {
            return prev;
        }
        let mut cur = alpha + 1.0 - u;
        for k in 1..degree {
            let kf = k as f64;
            let next = ((2.0 * kf + alpha + 1.0 - u) * cur - (kf + alpha) * prev) / (kf + 1.0);
            prev = cur;
            cur = next;
        }
        cur
    }
}

#[inline]
fn kernel_r2(h: f64, r2: f64, dim: usize) -> f64 {
    (-r2 / (4.0 * h)).exp() / (4.0 * PI * h).powf(dim as f64 / 2.0)
}

/// `p_h(y) = e^{−|y|²/(4h)} / (4πh)^{n/2}` with `n = y.len()`.
pub fn kernel(h: HeatScale, y: &[f64]) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    kernel_r2(h.get(), r2, y.len())
}

/// `∂_h^m p_h(y) = p_h(y)·m!(−1)^m h^{−m} L_m^{n/2−1}(|y|²/(4h))`.
pub fn kernel_dh(h: HeatScale, y: &[f64], m: u32) -> f64 {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let spec = KernelSpec::derivative(m, y.len());
    spec.spatial(h.get(), r2)
}

#[derive(Clone, Debug)]
enum KernelSpec {
    /// `∂_h^m p_h`.
    Derivative { m: u32, dim: usize, lag: LaguerrePoly },
    /// `p_h L_{m−1}^{n/2}(|y|²/4h)`, the kernel of the tail `∫_h^∞`.
    Primitive { m: u32, dim: usize, lag: LaguerrePoly },
}

impl KernelSpec {
    fn derivative(m: u32, dim: usize) -> Self {
        KernelSpec::Derivative {
            m,
            dim,
            lag: LaguerrePoly::new(m, dim as f64 / 2.0 - 1.0),
        }
    }

    fn primitive(m: u32, dim: usize) -> Self {
        KernelSpec::Primitive {
            m,
            dim,
            lag: LaguerrePoly::new(m - 1, dim as f64 / 2.0),
        }
    }

    #[inline]
    fn spatial(&self, h: f64, r2: f64) -> f64 {
        match self {
            KernelSpec::Derivative { m, dim, lag } => {
                let p = kernel_r2(h, r2, *dim);
                if *m == 0 {
                    return p;
                }
                let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
                p * sign * factorial(*m) * h.powi(-(*m as i32)) * lag.eval(r2 / (4.0 * h))
            }
            KernelSpec::Primitive { dim, lag, .. } => kernel_r2(h, r2, *dim) * lag.eval(r2 / (4.0 * h)),
        }
    }

    #[inline]
    fn multiplier(&self, h: f64, xi2: f64) -> f64 {
        let decay = (-h * xi2).exp();
        match self {
            KernelSpec::Derivative { m, .. } => (-xi2).powi(*m as i32) * decay,
            KernelSpec::Primitive { m, .. } => {
                let x = h * xi2;
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..*m {
                    term *= x / j as f64;
                    sum += term;
                }
                decay * sum
            }
        }
    }
}

/// Effective kernel support `10·sqrt(2h)` must fit in the half width.
pub(crate) fn check_fit(grid: &GridSpec, h: f64) -> Result<()> {
    let needed = 10.0 * (2.0 * h).sqrt();
    if needed > grid.half_width() {
        return Err(Error::KernelTooWide {
            h,
            needed,
            half_width: grid.half_width(),
        });
    }
    Ok(())
}

/// Cached padded spectrum of a field, reusable across many `h`.
pub struct HeatEvolver {
    grid: GridSpec,
    padded: usize,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    zero: bool,
}

impl std::fmt::Debug for HeatEvolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatEvolver")
            .field("grid", &self.grid)
            .field("padded", &self.padded)
            .finish()
    }
}

impl HeatEvolver {
    pub fn new(f: &SampledField) -> Result<Self> {
        let grid = *f.grid();
        let n = grid.points_per_axis();
        let m = 2 * n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        let total = m.pow(grid.dim() as u32);
        let mut data = vec![Complex64::new(0.0, 0.0); total];
        let vals = f.values();
        match grid.dim() {
            1 => {
                for (d, v) in data.iter_mut().zip(vals) {
                    d.re = *v;
                }
            }
            _ => {
                for iy in 0..n {
                    for ix in 0..n {
                        data[iy * m + ix].re = vals[iy * n + ix];
                    }
                }
            }
        }
        let zero = vals.iter().all(|v| *v == 0.0);
        let mut ev = HeatEvolver {
            grid,
            padded: m,
            spectrum: Vec::new(),
            forward,
            inverse,
            zero,
        };
        ev.transform(&mut data, false);
        ev.spectrum = data;
        Ok(ev)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let fft = if inverse { &self.inverse } else { &self.forward };
        fft.process(data);
        if self.grid.dim() == 2 {
            transpose(data, self.padded);
            fft.process(data);
            transpose(data, self.padded);
        }
    }

    /// Signed offset (in cells) of wrap-order index `i`.
    #[inline]
    fn offset(&self, i: usize) -> f64 {
        let n = self.grid.points_per_axis();
        if i < n {
            i as f64
        } else {
            i as f64 - self.padded as f64
        }
    }

    fn convolve(&self, h: f64, spec: &KernelSpec) -> Result<SampledField> {
        check_fit(&self.grid, h)?;
        if self.zero {
            return Ok(SampledField::zeros(self.grid));
        }
        let dx = self.grid.spacing();
        let m = self.padded;
        let dim = self.grid.dim();
        let total = self.spectrum.len();
        let mut data: Vec<Complex64>;
        if h >= 2.0 * dx * dx {
            let cell = self.grid.cell_measure();
            let build = |idx: usize| {
                let r2 = match dim {
                    1 => (self.offset(idx) * dx).powi(2),
                    _ => (self.offset(idx % m) * dx).powi(2) + (self.offset(idx / m) * dx).powi(2),
                };
                Complex64::new(spec.spatial(h, r2) * cell, 0.0)
            };
            data = if total >= 1 << 14 {
                (0..total).into_par_iter().map(build).collect()
            } else {
                (0..total).map(build).collect()
            };
            self.transform(&mut data, false);
            for (d, s) in data.iter_mut().zip(&self.spectrum) {
                *d *= s;
            }
        } else {
            let dxi = 2.0 * PI / (m as f64 * dx);
            data = self.spectrum.clone();
            for (idx, d) in data.iter_mut().enumerate() {
                let xi2 = match dim {
                    1 => (self.offset(idx) * dxi).powi(2),
                    _ => (self.offset(idx % m) * dxi).powi(2) + (self.offset(idx / m) * dxi).powi(2),
                };
                *d *= spec.multiplier(h, xi2);
            }
        }
        self.transform(&mut data, true);
        let scale = 1.0 / total as f64;
        let n = self.grid.points_per_axis();
        let values: Vec<f64> = match dim {
            1 => data[..n].iter().map(|c| c.re * scale).collect(),
            _ => (0..n * n).map(|k| data[(k / n) * m + k % n].re * scale).collect(),
        };
        SampledField::new(self.grid, values)
    }

    /// `P_h f`.
    pub fn apply(&self, h: HeatScale) -> Result<SampledField> {
        self.convolve(h.get(), &KernelSpec::derivative(0, self.grid.dim()))
    }

    /// `∂_h^m P_h f` (`m = 0` gives `P_h f`).
    pub fn dh_m(&self, h: HeatScale, m: u32) -> Result<SampledField> {
        self.convolve(h.get(), &KernelSpec::derivative(m, self.grid.dim()))
    }

    /// `((−1)^m/(m−1)!) ∫_h^∞ u^{m−1} ∂_u^m P_u f du`, in closed form.
    pub fn tail_primitive(&self, h: HeatScale, m: u32) -> Result<SampledField> {
        if m == 0 {
            return Err(Error::InvalidArgument("tail primitive needs m >= 1".into()));
        }
        self.convolve(h.get(), &KernelSpec::primitive(m, self.grid.dim()))
    }
}

fn transpose(data: &mut [Complex64], m: usize) {
    for i in 0..m {
        for j in (i + 1)..m {
            data.swap(i * m + j, j * m + i);
        }
    }
}

/// `P_h f` for a sampled field.
pub fn apply(f: &SampledField, h: HeatScale) -> Result<SampledField> {
    check_fit(f.grid(), h.get())?;
    HeatEvolver::new(f)?.apply(h)
}

/// `∂_h^m P_h f` for a sampled field, `m ≥ 1`.
pub fn dh_m(f: &SampledField, h: HeatScale, m: u32) -> Result<SampledField> {
    if m == 0 {
        return Err(Error::InvalidArgument("dh_m needs m >= 1".into()));
    }
    check_fit(f.grid(), h.get())?;
    HeatEvolver::new(f)?.dh_m(h, m)
}

/// Exact heat evolution of a Gaussian mixture:
/// `(A, c, a) ↦ (A·(a/(a+h))^{n/2}, c, a+h)`.
pub fn apply_analytic(f: &AnalyticFunction, h: HeatScale) -> Result<AnalyticFunction> {
    let terms = f.gaussian_terms()?;
    let n = f.dim() as f64;
    let h = h.get();
    AnalyticFunction::gaussian_mix(
        terms
            .iter()
            .map(|t| GaussianTerm {
                amp: t.amp * (t.width / (t.width + h)).powf(n / 2.0),
                center: t.center.clone(),
                width: t.width + h,
            })
            .collect(),
    )
}

/// Closed-form evaluator of `Δ^m f` for a Gaussian mixture.
#[derive(Clone, Debug)]
pub struct LaplacianPower {
    plans: Vec<TermPlan>,
    m: u32,
    dim: usize,
    weights: Vec<f64>,
}

impl LaplacianPower {
    pub fn new(f: &AnalyticFunction, m: u32) -> Result<Self> {
        let plans = f.gaussian_terms()?.iter().map(TermPlan::from_term).collect();
        let dim = f.dim();
        let weights = (0..=m).map(|k| binomial(m, k)).collect();
        Ok(LaplacianPower { plans, m, dim, weights })
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let order = 2 * self.m as usize;
        let mut bx = [0.0f64; 128];
        let mut by = [0.0f64; 128];
        let mut total = 0.0;
        for p in &self.plans {
            p.axis_derivatives(x[0] - p.center[0], &mut bx[..=order]);
            if self.dim == 1 {
                total += p.amp * bx[order];
            } else {
                p.axis_derivatives(x[1] - p.center[1], &mut by[..=order]);
                let mut s = 0.0;
                for (k, w) in self.weights.iter().enumerate() {
                    s += w * bx[2 * k] * by[order - 2 * k];
                }
                total += p.amp * s;
            }
        }
        total
    }
}

/// `∂_h^m P_h f = Δ^m P_h f` sampled on `g`, computed in closed form.
pub fn dh_m_analytic(f: &AnalyticFunction, h: HeatScale, m: u32, g: &GridSpec) -> Result<SampledField> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: f.dim(),
        });
    }
    let evolved = apply_analytic(f, h)?;
    let lap = LaplacianPower::new(&evolved, m)?;
    let dim = g.dim();
    SampledField::from_fn(*g, |x| lap.eval(&x[..dim]))
}

/// How `reconstruct` treats `∫_{hmax}^∞`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailClosure {
    /// Drop the tail.
    Truncate,
    /// Add the closed-form tail `g_{hmax} * f`.
    #[default]
    Primitive,
}

/// `((−1)^m/(m−1)!) ∫ h^{m−1} ∂_h^m P_h f dh`, trapezoid in `ln h` over
/// `[hmin, hmax]` plus the closed-form tail.
pub fn reconstruct(f: &SampledField, m: u32, hmin: f64, hmax: f64, nodes: usize) -> Result<SampledField> {
    reconstruct_with(f, m, hmin, hmax, nodes, TailClosure::Primitive)
}

pub fn reconstruct_with(
    f: &SampledField,
    m: u32,
    hmin: f64,
    hmax: f64,
    nodes: usize,
    tail: TailClosure,
) -> Result<SampledField> {
    if m == 0 {
        return Err(Error::InvalidArgument("reconstruction needs m >= 1".into()));
    }
    if !(hmin > 0.0 && hmax > hmin && nodes >= 2) {
        return Err(Error::InvalidArgument(format!(
            "need 0 < hmin < hmax and at least 2 nodes, got [{hmin}, {hmax}] with {nodes}"
        )));
    }
    check_fit(f.grid(), hmax)?;
    let ev = HeatEvolver::new(f)?;
    let hs = log_spaced(hmin, hmax, nodes);
    let weights = trapezoid_ln_weights(nodes, (hmax / hmin).ln() / (nodes - 1) as f64);
    let parts = hs
        .par_iter()
        .map(|h| ev.dh_m(HeatScale(*h), m))
        .collect::<Result<Vec<_>>>()?;
    let sign = if m.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pre = sign / factorial(m - 1);
    let len = f.values().len();
    let mut out = vec![0.0; len];
    for (k, o) in out.iter_mut().enumerate() {
        *o = pre
            * neumaier_sum(
                parts
                    .iter()
                    .zip(&hs)
                    .zip(&weights)
                    .map(|((p, h), w)| w * h.powi(m as i32) * p.values()[k]),
            );
    }
    if tail == TailClosure::Primitive {
        let closure = ev.tail_primitive(HeatScale(hmax), m)?;
        for (o, c) in out.iter_mut().zip(closure.values()) {
            *o += c;
        }
    }
    SampledField::new(*f.grid(), out)
}
