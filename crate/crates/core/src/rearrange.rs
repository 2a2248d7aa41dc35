//! Distribution functions, decreasing rearrangements and `f**`.
//!
//! A sampled field is treated as a simple function, constant on cells, so
//! every identity here (equimeasurability, mass preservation, the
//! Hardy-Littlewood sup) holds exactly up to floating-point summation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::funcspace::SampledField;
use crate::numeric::neumaier_sum;

const PAR_SORT_THRESHOLD: usize = 1 << 15;

/// Which endpoint of each step carries the step value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Continuity {
    /// Value `v_j` on `(t_{j-1}, t_j]` (rearrangements).
    Left,
    /// Value `v_j` on `[t_{j-1}, t_j)` (distribution functions).
    Right,
}

/// Nonincreasing nonnegative step function on `(0, ∞)`, zero after the last
/// breakpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct StepProfile {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    continuity: Continuity,
    cumulative: Vec<f64>,
}

impl StepProfile {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>, continuity: Continuity) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} breakpoints but {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        let mut prev_t = 0.0;
        let mut prev_v = f64::INFINITY;
        for (t, v) in breakpoints.iter().zip(&values) {
            if !(t.is_finite() && *t > prev_t) {
                return Err(Error::InvalidArgument(format!(
                    "breakpoints must be positive, finite and strictly increasing (got {t} after {prev_t})"
                )));
            }
            if !(v.is_finite() && *v >= 0.0 && *v <= prev_v) {
                return Err(Error::MonotonicityViolated(format!(
                    "profile values must be finite, nonnegative and nonincreasing (got {v} after {prev_v})"
                )));
            }
            prev_t = *t;
            prev_v = *v;
        }
        Ok(Self::from_parts(breakpoints, values, continuity))
    }

    /// Left-continuous profile taking `values[j]` on `(t_{j-1}, t_j]`.
    pub fn left(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(breakpoints, values, Continuity::Left)
    }

    pub fn empty(continuity: Continuity) -> Self {
        Self::from_parts(Vec::new(), Vec::new(), continuity)
    }

    fn from_parts(breakpoints: Vec<f64>, values: Vec<f64>, continuity: Continuity) -> Self {
        let mut cumulative = Vec::with_capacity(values.len());
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut prev = 0.0;
        for (t, v) in breakpoints.iter().zip(&values) {
            let x = v * (t - prev);
            let s = sum + x;
            if sum.abs() >= x.abs() {
                comp += (sum - s) + x;
            } else {
                comp += (x - s) + sum;
            }
            sum = s;
            cumulative.push(sum + comp);
            prev = *t;
        }
        StepProfile {
            breakpoints,
            values,
            continuity,
            cumulative,
        }
    }

    /// Rearrangement of a list of raw cell values with cell measure `cell`.
    pub fn rearrangement_of(values: &[f64], cell: f64) -> Self {
        let mut abs: Vec<f64> = values.iter().map(|v| v.abs()).filter(|v| *v > 0.0).collect();
        if abs.len() >= PAR_SORT_THRESHOLD {
            abs.par_sort_unstable_by(|a, b| b.total_cmp(a));
        } else {
            abs.sort_unstable_by(|a, b| b.total_cmp(a));
        }
        let mut breakpoints = Vec::new();
        let mut steps = Vec::new();
        let mut k = 0;
        while k < abs.len() {
            let v = abs[k];
            while k < abs.len() && abs[k] == v {
                k += 1;
            }
            breakpoints.push(k as f64 * cell);
            steps.push(v);
        }
        Self::from_parts(breakpoints, steps, Continuity::Left)
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last breakpoint (0 for an empty profile).
    pub fn support_end(&self) -> f64 {
        self.breakpoints.last().copied().unwrap_or(0.0)
    }

    /// Value at the left end, `lim_{t→0⁺}`.
    pub fn sup(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Index of the step containing `t`, or `len()` beyond the support.
    fn step_index(&self, t: f64) -> usize {
        match self.continuity {
            Continuity::Left => self.breakpoints.partition_point(|b| *b < t),
            Continuity::Right => self.breakpoints.partition_point(|b| *b <= t),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 && self.continuity == Continuity::Left {
            return self.sup();
        }
        self.values.get(self.step_index(t)).copied().unwrap_or(0.0)
    }

    /// `∫₀ᵗ profile(u) du` in closed form.
    pub fn integral_to(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let j = self.breakpoints.partition_point(|b| *b < t);
        if j >= self.len() {
            return self.total_integral();
        }
        let (base, start) = if j == 0 {
            (0.0, 0.0)
        } else {
            (self.cumulative[j - 1], self.breakpoints[j - 1])
        };
        base + self.values[j] * (t - start)
    }

    /// `∫₀^∞ profile(u) du`.
    pub fn total_integral(&self) -> f64 {
        self.cumulative.last().copied().unwrap_or(0.0)
    }

    /// `|{t > 0 : profile(t) > y}|`.
    pub fn measure_above(&self, y: f64) -> f64 {
        let j = self.values.partition_point(|v| *v > y);
        if j == 0 {
            0.0
        } else {
            self.breakpoints[j - 1]
        }
    }

    /// CSV export of `(t, value)` pairs at the breakpoints.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.breakpoints.iter().zip(&self.values) {
            let _ = writeln!(out, "{t:e},{v:e}");
        }
        out
    }
}

/// `t ↦ (1/t)∫₀ᵗ base(u) du`.
#[derive(Clone, Debug, PartialEq)]
pub struct AveragedProfile {
    base: StepProfile,
}

impl AveragedProfile {
    pub fn base(&self) -> &StepProfile {
        &self.base
    }

    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return self.base.sup();
        }
        self.base.integral_to(t) / t
    }
}

/// `y ↦ λ_f(y) = |{|f| > y}|` as a right-continuous step profile in `y`.
pub fn distribution(f: &SampledField) -> StepProfile {
    let fstar = rearrangement(f);
    let k = fstar.len();
    let mut breakpoints = Vec::with_capacity(k);
    let mut values = Vec::with_capacity(k);
    for j in (0..k).rev() {
        breakpoints.push(fstar.values[j]);
        values.push(fstar.breakpoints[j]);
    }
    StepProfile::from_parts(breakpoints, values, Continuity::Right)
}

/// Decreasing rearrangement `f*`.
pub fn rearrangement(f: &SampledField) -> StepProfile {
    StepProfile::rearrangement_of(f.values(), f.grid().cell_measure())
}

/// `f**` of a rearrangement.
pub fn double_star(fstar: &StepProfile) -> AveragedProfile {
    AveragedProfile { base: fstar.clone() }
}

/// `sup_{|E| = t} ∫_E |f|` over unions of (fractions of) cells.
pub fn hardy_littlewood_sup(f: &SampledField, t: f64) -> Result<f64> {
    let measure = f.grid().box_measure();
    if !(t >= 0.0) || t > measure {
        return Err(Error::DomainExceeded { t, measure });
    }
    let cell = f.grid().cell_measure();
    let mut abs: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    abs.sort_unstable_by(|a, b| b.total_cmp(a));
    let whole = ((t / cell).floor() as usize).min(abs.len());
    let head = neumaier_sum(abs[..whole].iter().map(|v| v * cell));
    let rest = t - whole as f64 * cell;
    let frac = abs.get(whole).map_or(0.0, |v| v * rest);
    Ok(head + frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::{sample, AnalyticFunction, GridSpec};

    fn ball_field(n: usize) -> SampledField {
        let f = AnalyticFunction::ball(3.0, 1.0, vec![0.0]).unwrap();
        sample(&f, &GridSpec::new(1, 2.0, n).unwrap()).unwrap()
    }

    fn gauss_field(n: usize) -> SampledField {
        // e^{-x²} has width 1/4
        let f = AnalyticFunction::gaussian(1.0, vec![0.0], 0.25).unwrap();
        sample(&f, &GridSpec::new(1, 8.0, n).unwrap()).unwrap()
    }

    #[test]
    fn indicator_profiles() {
        for n in [16, 64, 256] {
            let field = ball_field(n);
            let lam = distribution(&field);
            assert_eq!(lam.eval(0.5), 2.0);
            assert_eq!(lam.eval(2.999), 2.0);
            assert_eq!(lam.eval(3.0), 0.0);
            let fstar = rearrangement(&field);
            assert_eq!(fstar.breakpoints(), &[2.0]);
            assert_eq!(fstar.values(), &[3.0]);
            assert_eq!(fstar.eval(2.0), 3.0);
            assert_eq!(fstar.eval(2.0001), 0.0);
        }
    }

    #[test]
    fn zero_field_is_empty() {
        let g = GridSpec::new(2, 1.0, 16).unwrap();
        let z = SampledField::zeros(g);
        assert!(distribution(&z).is_empty());
        assert!(rearrangement(&z).is_empty());
        assert_eq!(double_star(&rearrangement(&z)).eval(1.0), 0.0);
    }

    #[test]
    fn gaussian_distribution_matches_closed_form() {
        let field = gauss_field(4096);
        let dx = field.grid().spacing();
        let lam = distribution(&field);
        let fstar = rearrangement(&field);
        for i in 1..100 {
            let y = i as f64 / 100.0;
            let exact = 2.0 * (1.0 / y).ln().sqrt();
            assert!((lam.eval(y) - exact).abs() <= 2.0 * dx, "y={y}");
        }
        // f*(t) = e^{-t²/4}; Lipschitz constant of e^{-t²/4} is below 1/2
        let mut t = dx;
        while t <= 5.0 {
            assert!((fstar.eval(t) - (-t * t / 4.0).exp()).abs() <= dx, "t={t}");
            t += 0.37 * dx + 0.01;
        }
    }

    #[test]
    fn negation_invariant() {
        let field = gauss_field(256);
        let neg = field.map(|v| -v).unwrap();
        assert_eq!(rearrangement(&field), rearrangement(&neg));
    }

    #[test]
    fn double_star_examples() {
        let chi = StepProfile::left(vec![1.0], vec![1.0]).unwrap();
        let ds = double_star(&chi);
        assert_eq!(ds.eval(0.5), 1.0);
        assert_eq!(ds.eval(1.0), 1.0);
        assert!((ds.eval(4.0) - 0.25).abs() < 1e-15);

        let field = gauss_field(8192);
        let fss = double_star(&rearrangement(&field)).eval(2.0);
        // sqrt(pi) * erf(1) / 2
        let oracle = 0.746_824_132_812_427;
        assert!((fss - oracle).abs() < 1e-3, "{fss}");
    }

    #[test]
    fn hardy_littlewood_examples() {
        let field = ball_field(64);
        let dx = field.grid().spacing();
        assert!((hardy_littlewood_sup(&field, dx).unwrap() - 3.0 * dx).abs() < 1e-15);
        let total = hardy_littlewood_sup(&field, 4.0).unwrap();
        let mass = dx * field.values().iter().map(|v| v.abs()).sum::<f64>();
        assert!((total - mass).abs() < 1e-14);
        assert!(matches!(
            hardy_littlewood_sup(&field, 4.5),
            Err(Error::DomainExceeded { .. })
        ));

        let g = gauss_field(1024);
        let fstar = rearrangement(&g);
        let a = hardy_littlewood_sup(&g, 1.0).unwrap();
        let b = fstar.integral_to(1.0);
        assert!(((a - b) / b).abs() <= 1e-12);
    }

    #[test]
    fn csv_export() {
        let p = StepProfile::left(vec![1.0, 2.0], vec![3.0, 1.0]).unwrap();
        let csv = p.to_csv();
        assert!(csv.starts_with("t,value\n"));
        assert_eq!(csv.lines().count(), 3);
    }

    #[test]
    fn invalid_profiles_rejected() {
        assert!(StepProfile::left(vec![1.0, 1.0], vec![2.0, 1.0]).is_err());
        assert!(StepProfile::left(vec![1.0, 2.0], vec![1.0, 2.0]).is_err());
        assert!(StepProfile::left(vec![1.0], vec![-1.0]).is_err());
        assert!(StepProfile::left(vec![0.0], vec![1.0]).is_err());
    }
}
