//! Grids over centered boxes, analytic test-function families and sampling.
//!
//! Fields are stored row-major: in two dimensions the flat index is
//! `iy * N + ix`, with `x` the fast axis.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::hermite_into;

/// Minimum number of points per axis.
pub const MIN_POINTS: usize = 16;

const PAR_THRESHOLD: usize = 1 << 14;

/// Uniform cell-centered grid over `[-L, L)^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGrid", into = "RawGrid")]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

#[derive(Serialize, Deserialize)]
struct RawGrid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl TryFrom<RawGrid> for GridSpec {
    type Error = Error;

    fn try_from(raw: RawGrid) -> Result<Self> {
        GridSpec::new(raw.dim, raw.half_width, raw.points_per_axis)
    }
}

impl From<GridSpec> for RawGrid {
    fn from(g: GridSpec) -> Self {
        RawGrid {
            dim: g.dim,
            half_width: g.half_width,
            points_per_axis: g.points_per_axis,
        }
    }
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension must be 1 or 2, got {dim}")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        if points_per_axis < MIN_POINTS || !points_per_axis.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= {MIN_POINTS}, got {points_per_axis}"
            )));
        }
        Ok(GridSpec {
            dim,
            half_width,
            points_per_axis,
        })
    }

    /// Grid wide enough that every term of `f` has negligible tail mass
    /// outside the box (`L ≥ c_max + 10·sqrt(2·a_max)` for Gaussians).
    pub fn adequate_for(f: &AnalyticFunction, points_per_axis: usize) -> Result<Self> {
        let half_width = match f {
            AnalyticFunction::GaussianMix { terms } => {
                let c_max = terms
                    .iter()
                    .flat_map(|t| t.center.iter())
                    .fold(0.0f64, |m, c| m.max(c.abs()));
                let a_max = terms.iter().fold(0.0f64, |m, t| m.max(t.width));
                c_max + 10.0 * (2.0 * a_max).sqrt()
            }
            AnalyticFunction::Ball { radius, center, .. } => {
                let c_max = center.iter().fold(0.0f64, |m, c| m.max(c.abs()));
                2.0 * (c_max + radius)
            }
        };
        GridSpec::new(f.dim(), half_width, points_per_axis)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    #[inline]
    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Cell size `Δ = 2L/N`.
    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// Cell measure `Δⁿ`.
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Measure of the box, `(2L)ⁿ`.
    #[inline]
    pub fn box_measure(&self) -> f64 {
        (2.0 * self.half_width).powi(self.dim as i32)
    }

    /// Number of cells, `Nⁿ`.
    #[inline]
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Center of cell `k` along one axis.
    #[inline]
    pub fn axis_coord(&self, k: usize) -> f64 {
        -self.half_width + (k as f64 + 0.5) * self.spacing()
    }

    /// Cell center for a flat index; unused coordinates are zero.
    #[inline]
    pub fn point(&self, index: usize) -> [f64; 2] {
        let n = self.points_per_axis;
        match self.dim {
            1 => [self.axis_coord(index), 0.0],
            _ => [self.axis_coord(index % n), self.axis_coord(index / n)],
        }
    }

    /// The grid whose cell centers are `factor` times these.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        GridSpec::new(self.dim, self.half_width * factor, self.points_per_axis)
    }

    /// Same box with twice the points per axis.
    pub fn refined(&self) -> Result<Self> {
        GridSpec::new(self.dim, self.half_width, self.points_per_axis * 2)
    }
}

/// One term `A·exp(−|x−c|²/(4a))` of a Gaussian mixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTerm {
    pub amp: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl GaussianTerm {
    pub fn new(amp: f64, center: Vec<f64>, width: f64) -> Self {
        GaussianTerm { amp, center, width }
    }

    /// Centered unit-amplitude term in `dim` dimensions.
    pub fn centered(dim: usize, width: f64) -> Self {
        GaussianTerm::new(1.0, vec![0.0; dim], width)
    }

    /// `∫ A·exp(−|x−c|²/(4a)) dx = A·(4πa)^{n/2}`.
    pub fn mass(&self) -> f64 {
        self.amp * (4.0 * std::f64::consts::PI * self.width).powf(self.center.len() as f64 / 2.0)
    }
}

/// Symbolic test-function families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AnalyticFunction {
    GaussianMix { terms: Vec<GaussianTerm> },
    Ball { height: f64, radius: f64, center: Vec<f64> },
}

impl AnalyticFunction {
    pub fn gaussian_mix(terms: Vec<GaussianTerm>) -> Result<Self> {
        let f = AnalyticFunction::GaussianMix { terms };
        f.validate()?;
        Ok(f)
    }

    pub fn gaussian(amp: f64, center: Vec<f64>, width: f64) -> Result<Self> {
        Self::gaussian_mix(vec![GaussianTerm::new(amp, center, width)])
    }

    pub fn ball(height: f64, radius: f64, center: Vec<f64>) -> Result<Self> {
        let f = AnalyticFunction::Ball { height, radius, center };
        f.validate()?;
        Ok(f)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: AnalyticFunction = serde_json::from_str(text)?;
        f.validate()?;
        Ok(f)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("function descriptors always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFunction(msg));
        match self {
            AnalyticFunction::GaussianMix { terms } => {
                if terms.is_empty() {
                    return bad("Gaussian mixture needs at least one term".into());
                }
                let dim = terms[0].center.len();
                if !(dim == 1 || dim == 2) {
                    return bad(format!("dimension must be 1 or 2, got {dim}"));
                }
                for (i, t) in terms.iter().enumerate() {
                    if t.center.len() != dim {
                        return bad(format!("term {i} has dimension {}, expected {dim}", t.center.len()));
                    }
                    if !(t.width.is_finite() && t.width > 0.0) {
                        return bad(format!("term {i} width must be positive, got {}", t.width));
                    }
                    if !t.amp.is_finite() || t.center.iter().any(|c| !c.is_finite()) {
                        return bad(format!("term {i} has non-finite parameters"));
                    }
                }
                Ok(())
            }
            AnalyticFunction::Ball { height, radius, center } => {
                if !(center.len() == 1 || center.len() == 2) {
                    return bad(format!("dimension must be 1 or 2, got {}", center.len()));
                }
                if !(height.is_finite() && *height > 0.0) {
                    return bad(format!("ball height must be positive, got {height}"));
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    return bad(format!("ball radius must be positive, got {radius}"));
                }
                if center.iter().any(|c| !c.is_finite()) {
                    return bad("ball center must be finite".into());
                }
                Ok(())
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            AnalyticFunction::GaussianMix { terms } => terms[0].center.len(),
            AnalyticFunction::Ball { center, .. } => center.len(),
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            AnalyticFunction::GaussianMix { .. } => "gaussian_mix",
            AnalyticFunction::Ball { .. } => "ball",
        }
    }

    /// Highest supported derivative order; `None` means every order.
    pub fn max_derivative_order(&self) -> Option<u32> {
        match self {
            AnalyticFunction::GaussianMix { .. } => None,
            AnalyticFunction::Ball { .. } => Some(0),
        }
    }

    pub fn gaussian_terms(&self) -> Result<&[GaussianTerm]> {
        match self {
            AnalyticFunction::GaussianMix { terms } => Ok(terms),
            other => Err(Error::UnsupportedFamily(other.family_name())),
        }
    }

    /// Smallest and largest Gaussian width (or `radius²` for a ball).
    pub fn width_range(&self) -> (f64, f64) {
        match self {
            AnalyticFunction::GaussianMix { terms } => terms.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), t| {
                (lo.min(t.width), hi.max(t.width))
            }),
            AnalyticFunction::Ball { radius, .. } => (radius * radius, radius * radius),
        }
    }

    /// `∫ f dx`.
    pub fn mass(&self) -> f64 {
        match self {
            AnalyticFunction::GaussianMix { terms } => terms.iter().map(GaussianTerm::mass).sum(),
            AnalyticFunction::Ball { height, radius, center } => {
                let vol = if center.len() == 1 {
                    2.0 * radius
                } else {
                    std::f64::consts::PI * radius * radius
                };
                height * vol
            }
        }
    }

    /// Number of leading vanishing moments (0: nonzero mass, 1: zero mass
    /// but nonzero first moment, 2: both vanish), judged relative to the
    /// total variation of the terms.
    pub fn vanishing_moment_order(&self) -> u32 {
        let AnalyticFunction::GaussianMix { terms } = self else {
            return 0;
        };
        let scale: f64 = terms.iter().map(|t| t.mass().abs()).sum();
        let tol = 1e-9 * scale;
        if self.mass().abs() > tol {
            return 0;
        }
        let dim = self.dim();
        let (_, a_max) = self.width_range();
        let first_tol = tol * (1.0 + a_max.sqrt());
        for axis in 0..dim {
            let m1: f64 = terms.iter().map(|t| t.mass() * t.center[axis]).sum();
            if m1.abs() > first_tol {
                return 1;
            }
        }
        2
    }

    /// Evaluate at a point of matching dimension.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            AnalyticFunction::GaussianMix { terms } => terms
                .iter()
                .map(|t| {
                    let r2: f64 = t.center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
                    t.amp * (-r2 / (4.0 * t.width)).exp()
                })
                .sum(),
            AnalyticFunction::Ball { height, radius, center } => {
                let r2: f64 = center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
                if r2 < radius * radius {
                    *height
                } else {
                    0.0
                }
            }
        }
    }

    /// The family representing `x ↦ f(λx)`.
    pub fn dilate(&self, lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "dilation must be positive, got {lambda}"
            )));
        }
        Ok(match self {
            AnalyticFunction::GaussianMix { terms } => AnalyticFunction::GaussianMix {
                terms: terms
                    .iter()
                    .map(|t| GaussianTerm {
                        amp: t.amp,
                        center: t.center.iter().map(|c| c / lambda).collect(),
                        width: t.width / (lambda * lambda),
                    })
                    .collect(),
            },
            AnalyticFunction::Ball { height, radius, center } => AnalyticFunction::Ball {
                height: *height,
                radius: radius / lambda,
                center: center.iter().map(|c| c / lambda).collect(),
            },
        })
    }

    /// `κ·f` for `κ > 0`.
    pub fn scale_amplitude(&self, kappa: f64) -> Result<Self> {
        if !(kappa.is_finite() && kappa > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "amplitude factor must be positive, got {kappa}"
            )));
        }
        Ok(match self {
            AnalyticFunction::GaussianMix { terms } => AnalyticFunction::GaussianMix {
                terms: terms
                    .iter()
                    .map(|t| GaussianTerm {
                        amp: t.amp * kappa,
                        ..t.clone()
                    })
                    .collect(),
            },
            AnalyticFunction::Ball { height, radius, center } => AnalyticFunction::Ball {
                height: height * kappa,
                radius: *radius,
                center: center.clone(),
            },
        })
    }

    /// Exact evaluator for `D^ν f`.
    pub fn derivative(&self, nu: &MultiIndex) -> Result<DerivativeEvaluator> {
        if nu.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: nu.dim(),
            });
        }
        match self {
            AnalyticFunction::GaussianMix { terms } => Ok(DerivativeEvaluator::new(terms, nu)),
            AnalyticFunction::Ball { .. } if nu.order() == 0 => Ok(DerivativeEvaluator {
                inner: EvaluatorKind::Plain(self.clone()),
            }),
            AnalyticFunction::Ball { .. } => Err(Error::UnsupportedDerivative {
                family: "ball",
                order: nu.order(),
            }),
        }
    }
}

/// Multi-index `ν = (ν₁, …, ν_n)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(components: Vec<u32>) -> Result<Self> {
        if !(components.len() == 1 || components.len() == 2) {
            return Err(Error::InvalidArgument(format!(
                "multi-index dimension must be 1 or 2, got {}",
                components.len()
            )));
        }
        Ok(MultiIndex(components))
    }

    pub fn zero(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn components(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// `|ν| = ν₁ + … + ν_n`.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Every multi-index of dimension `dim` with `|ν| = order`.
    pub fn all_of_order(dim: usize, order: u32) -> Vec<MultiIndex> {
        match dim {
            1 => vec![MultiIndex(vec![order])],
            _ => (0..=order).map(|k| MultiIndex(vec![k, order - k])).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct TermPlan {
    pub amp: f64,
    pub center: [f64; 2],
    /// `1/(2√a)`.
    pub inv_scale: f64,
}

impl TermPlan {
    pub(crate) fn from_term(t: &GaussianTerm) -> Self {
        let mut center = [0.0; 2];
        for (dst, c) in center.iter_mut().zip(&t.center) {
            *dst = *c;
        }
        TermPlan {
            amp: t.amp,
            center,
            inv_scale: 1.0 / (2.0 * t.width.sqrt()),
        }
    }

    /// `d^k/du^k exp(−u²/(4a))` for `k = 0..out.len()`, at `u = x − c`.
    #[inline]
    pub(crate) fn axis_derivatives(&self, u: f64, out: &mut [f64]) {
        let t = u * self.inv_scale;
        hermite_into(t, out);
        let g = (-t * t).exp();
        let mut factor = g;
        for v in out.iter_mut() {
            *v *= factor;
            factor *= -self.inv_scale;
        }
    }
}

#[derive(Clone, Debug)]
enum EvaluatorKind {
    Gaussian {
        plans: Vec<TermPlan>,
        nu: [u32; 2],
        dim: usize,
    },
    Plain(AnalyticFunction),
}

/// Closed-form evaluator of one partial derivative.
#[derive(Clone, Debug)]
pub struct DerivativeEvaluator {
    inner: EvaluatorKind,
}

impl DerivativeEvaluator {
    fn new(terms: &[GaussianTerm], nu: &MultiIndex) -> Self {
        let mut nu_arr = [0u32; 2];
        for (dst, v) in nu_arr.iter_mut().zip(nu.components()) {
            *dst = *v;
        }
        DerivativeEvaluator {
            inner: EvaluatorKind::Gaussian {
                plans: terms.iter().map(TermPlan::from_term).collect(),
                nu: nu_arr,
                dim: nu.dim(),
            },
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match &self.inner {
            EvaluatorKind::Plain(f) => f.eval(x),
            EvaluatorKind::Gaussian { plans, nu, dim } => {
                let mut bx = [0.0f64; 64];
                let mut by = [0.0f64; 64];
                let kx = nu[0] as usize;
                let ky = nu[1] as usize;
                plans
                    .iter()
                    .map(|p| {
                        p.axis_derivatives(x[0] - p.center[0], &mut bx[..=kx]);
                        let mut v = p.amp * bx[kx];
                        if *dim == 2 {
                            p.axis_derivatives(x[1] - p.center[1], &mut by[..=ky]);
                            v *= by[ky];
                        }
                        v
                    })
                    .sum()
            }
        }
    }
}

/// Values of a function at the cell centers of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SampledField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "field has {} values, grid has {} cells",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite field value at cell {i}")));
        }
        Ok(SampledField { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        SampledField {
            values: vec![0.0; grid.len()],
            grid,
        }
    }

    /// Build a field from a closure over cell centers.
    pub fn from_fn<F>(grid: GridSpec, f: F) -> Result<Self>
    where
        F: Fn([f64; 2]) -> f64 + Sync,
    {
        let values: Vec<f64> = if grid.len() >= PAR_THRESHOLD {
            (0..grid.len()).into_par_iter().map(|i| f(grid.point(i))).collect()
        } else {
            (0..grid.len()).map(|i| f(grid.point(i))).collect()
        };
        SampledField::new(grid, values)
    }

    #[inline]
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledField::new(self.grid, self.values.iter().map(|v| f(*v)).collect())
    }

    pub fn zip_with(&self, other: &SampledField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::InvalidArgument("fields live on different grids".into()));
        }
        SampledField::new(
            self.grid,
            self.values.iter().zip(&other.values).map(|(a, b)| f(*a, *b)).collect(),
        )
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Grid `L^p` norm `(Δⁿ Σ|v|^p)^{1/p}`, or the max for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let cell = self.grid.cell_measure();
        let s = crate::numeric::neumaier_sum(self.values.iter().map(|v| v.abs().powf(p)));
        (cell * s).powf(1.0 / p)
    }
}

/// Sample `f` at the cell centers of `g`.
pub fn sample(f: &AnalyticFunction, g: &GridSpec) -> Result<SampledField> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: f.dim(),
        });
    }
    let dim = g.dim();
    SampledField::from_fn(*g, |x| f.eval(&x[..dim]))
}

/// Samples `x ↦ Σ_{|ν|=r} |D^ν f(x)|`.
pub fn grad_magnitude_field(f: &AnalyticFunction, r: u32, g: &GridSpec) -> Result<SampledField> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: f.dim(),
        });
    }
    let evals = MultiIndex::all_of_order(g.dim(), r)
        .iter()
        .map(|nu| f.derivative(nu))
        .collect::<Result<Vec<_>>>()?;
    let dim = g.dim();
    SampledField::from_fn(*g, |x| evals.iter().map(|e| e.eval(&x[..dim]).abs()).sum())
}

/// Samples the Euclidean gradient length `|∇f(x)|`.
pub fn gradient_norm_field(f: &AnalyticFunction, g: &GridSpec) -> Result<SampledField> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            got: f.dim(),
        });
    }
    let evals = MultiIndex::all_of_order(g.dim(), 1)
        .iter()
        .map(|nu| f.derivative(nu))
        .collect::<Result<Vec<_>>>()?;
    let dim = g.dim();
    SampledField::from_fn(*g, |x| {
        evals
            .iter()
            .map(|e| {
                let v = e.eval(&x[..dim]);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss1(width: f64) -> AnalyticFunction {
        AnalyticFunction::gaussian(1.0, vec![0.0], width).unwrap()
    }

    #[test]
    fn grid_invariants() {
        let g = GridSpec::new(1, 2.0, 16).unwrap();
        assert_eq!(g.spacing(), 0.25);
        assert_eq!(g.axis_coord(0), -2.0 + 0.125);
        assert_eq!(g.axis_coord(15), 2.0 - 0.125);
        assert!(GridSpec::new(1, 2.0, 24).is_err());
        assert!(GridSpec::new(1, 2.0, 8).is_err());
        assert!(GridSpec::new(3, 2.0, 16).is_err());
        assert!(GridSpec::new(1, 0.0, 16).is_err());
        let g2 = GridSpec::new(2, 1.0, 16).unwrap();
        assert_eq!(g2.len(), 256);
        assert_eq!(g2.point(17), [g2.axis_coord(1), g2.axis_coord(1)]);
    }

    #[test]
    fn sample_examples() {
        assert_eq!(gauss1(1.0).eval(&[0.0]), 1.0);
        let ball = AnalyticFunction::ball(3.0, 1.0, vec![0.0]).unwrap();
        assert_eq!(ball.eval(&[0.5]), 3.0);
        assert_eq!(ball.eval(&[1.5]), 0.0);
        assert!((gauss1(1.0).eval(&[2.0]) - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn dilate_examples() {
        let d = gauss1(1.0).dilate(2.0).unwrap();
        assert_eq!(d, AnalyticFunction::gaussian(1.0, vec![0.0], 0.25).unwrap());
        let b = AnalyticFunction::ball(3.0, 1.0, vec![0.0])
            .unwrap()
            .dilate(2.0)
            .unwrap();
        assert_eq!(b, AnalyticFunction::ball(3.0, 0.5, vec![0.0]).unwrap());
        let f = AnalyticFunction::gaussian_mix(vec![
            GaussianTerm::new(1.0, vec![0.3, -0.2], 0.7),
            GaussianTerm::new(-0.4, vec![-1.0, 0.5], 1.3),
        ])
        .unwrap();
        let g = GridSpec::new(2, 6.0, 32).unwrap();
        let a = sample(&f, &g).unwrap();
        let back = f.dilate(2.0).unwrap().dilate(0.5).unwrap();
        assert_eq!(sample(&back, &g).unwrap(), a);
        let back = f.dilate(3.0).unwrap().dilate(1.0 / 3.0).unwrap();
        let b = sample(&back, &g).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() <= 1e-14);
        }
        // sampling the dilate on g equals sampling f on the scaled grid
        let d = sample(&f.dilate(2.0).unwrap(), &g).unwrap();
        let scaled = sample(&f, &g.scaled(2.0).unwrap()).unwrap();
        assert_eq!(d.values(), scaled.values());
    }

    #[test]
    fn derivative_examples() {
        let f = gauss1(1.0);
        let d0 = f.derivative(&MultiIndex::zero(1)).unwrap();
        assert_eq!(d0.eval(&[0.7]), f.eval(&[0.7]));
        let d1 = f.derivative(&MultiIndex::new(vec![1]).unwrap()).unwrap();
        assert_eq!(d1.eval(&[0.0]), 0.0);
        assert!((d1.eval(&[2.0]) + (-1.0f64).exp()).abs() < 1e-15);
        // central finite difference with step 1e-5
        let step = 1e-5;
        let fd = (f.eval(&[2.0 + step]) - f.eval(&[2.0 - step])) / (2.0 * step);
        assert!((fd - d1.eval(&[2.0])).abs() < 1e-9);
    }

    #[test]
    fn ball_rejects_derivatives() {
        let b = AnalyticFunction::ball(1.0, 1.0, vec![0.0, 0.0]).unwrap();
        let err = b.derivative(&MultiIndex::new(vec![1, 0]).unwrap()).unwrap_err();
        assert!(matches!(err, Error::UnsupportedDerivative { order: 1, .. }));
        let g = GridSpec::new(2, 2.0, 16).unwrap();
        assert!(grad_magnitude_field(&b, 1, &g).is_err());
    }

    #[test]
    fn grad_magnitude_examples() {
        let f = gauss1(1.0);
        let g = GridSpec::new(1, 4.0, 16).unwrap();
        let e1 = MultiIndex::all_of_order(1, 1);
        let e2 = MultiIndex::all_of_order(1, 2);
        assert_eq!(e1.len(), 1);
        let v1 = f.derivative(&e1[0]).unwrap().eval(&[2.0]).abs();
        assert!((v1 - (-1.0f64).exp()).abs() < 1e-15);
        let v2 = f.derivative(&e2[0]).unwrap().eval(&[0.0]).abs();
        assert!((v2 - 0.5).abs() < 1e-15);
        assert!(grad_magnitude_field(&f, 1, &g)
            .unwrap()
            .values()
            .iter()
            .all(|v| *v >= 0.0));

        let radial = AnalyticFunction::gaussian(1.0, vec![0.0, 0.0], 1.0).unwrap();
        let evals: Vec<_> = MultiIndex::all_of_order(2, 1)
            .iter()
            .map(|nu| radial.derivative(nu).unwrap())
            .collect();
        let at_origin: f64 = evals.iter().map(|e| e.eval(&[0.0, 0.0]).abs()).sum();
        assert_eq!(at_origin, 0.0);
        assert_eq!(MultiIndex::all_of_order(2, 3).len(), 4);
    }

    #[test]
    fn json_descriptors() {
        let text = r#"{"family":"gaussian_mix","terms":[{"amp":1.0,"center":[0.0],"width":1.0}]}"#;
        let f = AnalyticFunction::from_json(text).unwrap();
        assert_eq!(f, gauss1(1.0));
        assert_eq!(AnalyticFunction::from_json(&f.to_json()).unwrap(), f);
        let b = AnalyticFunction::from_json(r#"{"family":"ball","height":3,"radius":1,"center":[0,0]}"#).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(AnalyticFunction::from_json(r#"{"family":"ball","height":3,"radius":-1,"center":[0]}"#).is_err());
        assert!(AnalyticFunction::from_json(r#"{"family":"gaussian_mix","terms":[]}"#).is_err());
        assert!(
            AnalyticFunction::from_json(r#"{"family":"gaussian_mix","terms":[{"amp":1,"center":[0],"width":0}]}"#)
                .is_err()
        );
    }

    #[test]
    fn moments() {
        let f = gauss1(1.0);
        assert!((f.mass() - (4.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
        assert_eq!(f.vanishing_moment_order(), 0);
        let dipole = AnalyticFunction::gaussian_mix(vec![
            GaussianTerm::new(1.0, vec![0.5], 1.0),
            GaussianTerm::new(-1.0, vec![-0.5], 1.0),
        ])
        .unwrap();
        assert_eq!(dipole.vanishing_moment_order(), 1);
        let mexican = AnalyticFunction::gaussian_mix(vec![
            GaussianTerm::new(2.0, vec![0.0], 0.25),
            GaussianTerm::new(-1.0, vec![0.0], 1.0),
        ])
        .unwrap();
        assert_eq!(mexican.vanishing_moment_order(), 2);
    }
}
