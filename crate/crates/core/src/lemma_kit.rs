//! Constructive forms of the auxiliary lemmas: geometric majorization of
//! sequences, two-sided power envelopes, balance points, balancing infima,
//! the pseudo-Poincaré inequality and the heat smoothing bound.
//!
//! Every construction returns a [`Certificate`] listing each conclusion with
//! its signed margin, so failures are reported rather than hidden.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::funcspace::{gradient_norm_field, sample, AnalyticFunction, GridSpec, SampledField};
use crate::heat::{self, HeatEvolver, HeatScale};
use crate::numeric::neumaier_sum;
use crate::quad::{self, eno_cells, log_slope, lower_tail, refine_max, upper_tail};
use crate::rearrange::{double_star, rearrangement};

const TREND_TOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;
const RATIO_TOL: f64 = 1e-14;
const WINDOW_CUTOFF: f64 = 1e-15;
const MAX_EXTENSION: usize = 1 << 20;
const POINTWISE_TOL: f64 = 1e-9;
const ENVELOPE_SLACK: f64 = 1e-6;
const BALANCE_SLACK: f64 = 1e-3;
const POINCARE_SLACK: f64 = 1e-2;
const SMOOTHING_SLACK: f64 = 1e-6;
const Z_REFINE_TOL: f64 = 1e-7;

/// One conclusion of a lemma. It holds when `margin ≥ −tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Clause {
    pub name: String,
    pub margin: f64,
    pub tolerance: f64,
}

impl Clause {
    pub fn new(name: impl Into<String>, margin: f64, tolerance: f64) -> Self {
        Clause {
            name: name.into(),
            margin,
            tolerance,
        }
    }

    pub fn holds(&self) -> bool {
        self.margin >= -self.tolerance
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub lemma: String,
    #[serde(rename = "inputs-digest")]
    pub inputs_digest: String,
    pub clauses: Vec<Clause>,
    pub holds: bool,
}

impl Certificate {
    pub fn new(lemma: &str, digest: &Digest, clauses: Vec<Clause>) -> Self {
        let holds = clauses.iter().all(Clause::holds);
        Certificate {
            lemma: lemma.to_string(),
            inputs_digest: digest.hex(),
            clauses,
            holds,
        }
    }

    pub fn clause(&self, name: &str) -> Option<&Clause> {
        self.clauses.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

/// 64-bit FNV-1a over the bit patterns of a lemma's inputs.
#[derive(Clone, Copy, Debug)]
pub struct Digest(u64);

impl Default for Digest {
    fn default() -> Self {
        Digest(0xcbf2_9ce4_8422_2325)
    }
}

impl Digest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bytes(mut self, bytes: &[u8]) -> Self {
        for b in bytes {
            self.0 ^= u64::from(*b);
            self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
        }
        self
    }

    pub fn f64(self, x: f64) -> Self {
        self.bytes(&x.to_bits().to_le_bytes())
    }

    pub fn f64s(self, xs: &[f64]) -> Self {
        xs.iter().fold(self.u64(xs.len() as u64), |d, x| d.f64(*x))
    }

    pub fn u64(self, x: u64) -> Self {
        self.bytes(&x.to_le_bytes())
    }

    pub fn hex(&self) -> String {
        format!("{:016x}", self.0)
    }
}

// ---------------------------------------------------------------------------
// Sequences

/// Nonnegative sequence `α_k`, stored on `[k_lo, k_hi]` and zero elsewhere,
/// together with the decay rate `δ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiscreteSeq {
    k_lo: i64,
    values: Vec<f64>,
    delta: f64,
}

impl DiscreteSeq {
    pub fn new(k_lo: i64, values: Vec<f64>, delta: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("sequence window is empty".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "sequence values must be finite and nonnegative, got {v}"
            )));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
        }
        Ok(DiscreteSeq { k_lo, values, delta })
    }

    pub fn k_lo(&self) -> i64 {
        self.k_lo
    }

    pub fn k_hi(&self) -> i64 {
        self.k_lo + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn get(&self, k: i64) -> f64 {
        if k < self.k_lo || k > self.k_hi() {
            return 0.0;
        }
        self.values[(k - self.k_lo) as usize]
    }

    pub fn sum(&self) -> f64 {
        neumaier_sum(self.values.iter().copied())
    }
}

/// Majorant `β` on an extended window, with the geometric tails beyond it
/// summed in closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct Majorization {
    pub beta: DiscreteSeq,
    pub lower_tail: f64,
    pub upper_tail: f64,
    pub total: f64,
    pub certificate: Certificate,
}

impl Majorization {
    /// `β_k` for any `k`; outside the window the tails are exactly geometric.
    pub fn at(&self, k: i64) -> f64 {
        let r = 2f64.powf(-self.beta.delta);
        if k < self.beta.k_lo {
            self.beta.values[0] * r.powi((self.beta.k_lo - k) as i32)
        } else if k > self.beta.k_hi() {
            self.beta.values[self.beta.values.len() - 1] * r.powi((k - self.beta.k_hi()) as i32)
        } else {
            self.beta.get(k)
        }
    }
}

/// Builds `α'_k = Σ_{m≤k} 2^{−(k−m)δ} α_m` and `β_k = Σ_{m≥k} 2^{−(m−k)δ} α'_m`.
///
/// `β ≥ α`, `Σβ = Σα/(1−2^{−δ})²` and `2^{−δ} ≤ β_{k+1}/β_k ≤ 2^δ`.
pub fn seq_majorize(a: &DiscreteSeq) -> Result<Majorization> {
    let mass = a.sum();
    if mass == 0.0 {
        return Err(Error::ZeroSequence);
    }
    let r = 2f64.powf(-a.delta);
    let n = a.values.len();
    let mut primed = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in &a.values {
        acc = r * acc + v;
        primed.push(acc);
    }
    let mut window = vec![0.0; n];
    window[n - 1] = primed[n - 1] / (1.0 - r * r);
    for k in (0..n - 1).rev() {
        window[k] = primed[k] + r * window[k + 1];
    }

    let floor = WINDOW_CUTOFF * mass;
    let extend = |edge: f64| -> Vec<f64> {
        (1..MAX_EXTENSION)
            .map(|j| edge * r.powi(j as i32))
            .take_while(|v| *v >= floor)
            .collect()
    };
    let below = extend(window[0]);
    let above = extend(window[n - 1]);
    let mut full = Vec::with_capacity(below.len() + n + above.len());
    full.extend(below.iter().rev());
    full.extend_from_slice(&window);
    full.extend_from_slice(&above);
    let k_lo = a.k_lo - below.len() as i64;

    let geometric = r / (1.0 - r);
    let lower_tail = full[0] * geometric;
    let upper_tail = full[full.len() - 1] * geometric;
    let total = neumaier_sum(full.iter().copied().chain([lower_tail, upper_tail]));
    let expected = mass / ((1.0 - r) * (1.0 - r));

    let dominates = (0..n)
        .map(|i| (window[i] - a.values[i]) / mass)
        .fold(f64::INFINITY, f64::min);
    let ratios = full
        .windows(2)
        .map(|w| {
            let q = w[1] / w[0];
            (q / r - 1.0).min(1.0 / (r * q) - 1.0)
        })
        .fold(0.0f64, f64::min);
    let clauses = vec![
        Clause::new("dominates", dominates, 0.0),
        Clause::new("sum-identity", -(total / expected - 1.0).abs(), SUM_TOL),
        Clause::new("ratio-bounds", ratios, RATIO_TOL),
    ];
    let digest = Digest::new().u64(a.k_lo as u64).f64s(&a.values).f64(a.delta);
    Ok(Majorization {
        beta: DiscreteSeq {
            k_lo,
            values: full,
            delta: a.delta,
        },
        lower_tail,
        upper_tail,
        total,
        certificate: Certificate::new("seq_majorize", &digest, clauses),
    })
}

// ---------------------------------------------------------------------------
// Profiles on logarithmic grids

/// A positive function sampled at increasing points of `(0, ∞)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LogProfile {
    ts: Vec<f64>,
    values: Vec<f64>,
}

impl LogProfile {
    pub fn new(ts: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if ts.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} values",
                ts.len(),
                values.len()
            )));
        }
        if ts.len() < 4 {
            return Err(Error::InvalidArgument("a profile needs at least 4 nodes".into()));
        }
        if ts[0] <= 0.0 || ts.windows(2).any(|w| !(w[1] > w[0])) || !ts[ts.len() - 1].is_finite() {
            return Err(Error::InvalidArgument(
                "nodes must be positive, finite and strictly increasing".into(),
            ));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::InvalidArgument(format!(
                "profile values must be positive and finite, got {v}"
            )));
        }
        Ok(LogProfile { ts, values })
    }

    pub fn from_fn(ts: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = ts.iter().map(|t| f(*t)).collect();
        Self::new(ts, values)
    }

    pub fn ts(&self) -> &[f64] {
        &self.ts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }

    /// `t ↦ φ(1/t)` on the reflected grid.
    pub fn reflect(&self) -> LogProfile {
        LogProfile {
            ts: self.ts.iter().rev().map(|t| 1.0 / t).collect(),
            values: self.values.iter().rev().copied().collect(),
        }
    }

    /// Log-log linear interpolation; power-law extrapolation past the ends.
    pub fn interp(&self, t: f64) -> f64 {
        let n = self.ts.len();
        let j = self.ts.partition_point(|x| *x <= t).clamp(1, n - 1) - 1;
        let (t0, t1) = (self.ts[j], self.ts[j + 1]);
        let (v0, v1) = (self.values[j], self.values[j + 1]);
        v0 * (t / t0).powf(log_slope(t0, t1, v0, v1))
    }

    /// `‖φ‖_{L^q(dt/t)}` with power-law tails beyond the grid.
    pub fn lq_norm(&self, q: Exponent) -> Result<f64> {
        if q.is_infinite() {
            return Ok(self.values.iter().fold(0.0f64, |m, v| m.max(*v)));
        }
        let w: Vec<f64> = self.values.iter().map(|v| v.powf(q.get())).collect();
        Ok(tail_corrected_integral(&self.ts, &w)?.powf(1.0 / q.get()))
    }

    /// Smallest step of `ln(t^e·φ)` in the requested direction; negative
    /// values measure a violation.
    pub fn trend_margin(&self, exponent: f64, increasing: bool) -> f64 {
        let sign = if increasing { 1.0 } else { -1.0 };
        let w: Vec<f64> = self
            .ts
            .iter()
            .zip(&self.values)
            .map(|(t, v)| v.ln() + exponent * t.ln())
            .collect();
        w.windows(2).map(|p| sign * (p[1] - p[0])).fold(f64::INFINITY, f64::min)
    }

    fn require_trend(&self, exponent: f64, increasing: bool, what: &str) -> Result<()> {
        let m = self.trend_margin(exponent, increasing);
        if m < -TREND_TOL {
            let dir = if increasing { "nondecreasing" } else { "nonincreasing" };
            return Err(Error::MonotonicityViolated(format!(
                "{what}: t^{exponent}·φ must be {dir} (worst log step {m:e})"
            )));
        }
        Ok(())
    }
}

/// `∫_0^∞ w dt/t`: per-cell quadrature plus power-law tails fitted on the
/// edge cells.
fn tail_corrected_integral(ts: &[f64], w: &[f64]) -> Result<f64> {
    let n = ts.len();
    let lo = lower_tail(w[0], log_slope(ts[0], ts[1], w[0], w[1]))
        .ok_or_else(|| Error::TailDivergent("integrand does not decay as t → 0".into()))?;
    let hi = upper_tail(w[n - 1], log_slope(ts[n - 2], ts[n - 1], w[n - 2], w[n - 1]))
        .ok_or_else(|| Error::TailDivergent("integrand does not decay as t → ∞".into()))?;
    Ok(neumaier_sum(eno_cells(ts, w).into_iter().chain([lo, hi])))
}

// ---------------------------------------------------------------------------
// Envelopes

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvelopeClass {
    /// `t^γ·φ` nondecreasing.
    PowerIncreasing,
    /// `t^{−γ}·φ` nonincreasing.
    PowerDecreasing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeProblem {
    phi: LogProfile,
    gamma: f64,
    delta: f64,
    q: Exponent,
    class: EnvelopeClass,
}

impl EnvelopeProblem {
    pub fn new(phi: LogProfile, gamma: f64, delta: f64, q: Exponent, class: EnvelopeClass) -> Result<Self> {
        for (name, v) in [("gamma", gamma), ("delta", delta)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        match class {
            EnvelopeClass::PowerIncreasing => phi.require_trend(gamma, true, "envelope input")?,
            EnvelopeClass::PowerDecreasing => phi.require_trend(-gamma, false, "envelope input")?,
        }
        Ok(EnvelopeProblem {
            phi,
            gamma,
            delta,
            q,
            class,
        })
    }

    pub fn phi(&self) -> &LogProfile {
        &self.phi
    }

    /// `(2(1+γ/δ))^{1/q}`, or `1` for `q = ∞`.
    pub fn constant(&self) -> f64 {
        (2.0 * (1.0 + self.gamma / self.delta)).powf(self.q.recip())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Envelope {
    pub phi_tilde: LogProfile,
    pub constant: f64,
    pub norm_phi: f64,
    pub norm_tilde: f64,
    pub certificate: Certificate,
}

/// Smooth majorant `φ̃ ≥ φ` with `t^δφ̃` increasing, `t^{−δ}φ̃` decreasing and
/// `‖φ̃‖_{L^q(dt/t)} ≤ (2(1+γ/δ))^{1/q}‖φ‖_{L^q(dt/t)}`.
pub fn envelope(prob: &EnvelopeProblem) -> Result<Envelope> {
    let phi = &prob.phi;
    let tilde = if prob.q.is_infinite() {
        let sup = phi.values.iter().fold(0.0f64, |m, v| m.max(*v));
        vec![sup; phi.len()]
    } else {
        let q = prob.q.get();
        match prob.class {
            EnvelopeClass::PowerIncreasing => increasing_envelope(&phi.ts, &phi.values, prob.gamma, prob.delta, q)?,
            EnvelopeClass::PowerDecreasing => {
                let h = phi.reflect();
                let mut v = increasing_envelope(&h.ts, &h.values, prob.gamma, prob.delta, q)?;
                v.reverse();
                v
            }
        }
    };
    let phi_tilde = LogProfile::new(phi.ts.clone(), tilde)
        .map_err(|e| Error::Numeric(format!("envelope left the positive reals: {e}")))?;
    let constant = prob.constant();
    let norm_phi = phi.lq_norm(prob.q)?;
    let norm_tilde = phi_tilde.lq_norm(prob.q)?;

    let dominates = phi_tilde
        .values
        .iter()
        .zip(&phi.values)
        .map(|(a, b)| a / b - 1.0)
        .fold(f64::INFINITY, f64::min);
    let trends = phi_tilde
        .trend_margin(prob.delta, true)
        .min(phi_tilde.trend_margin(-prob.delta, false));
    let norm_margin = 1.0 - norm_tilde / (constant * (1.0 + ENVELOPE_SLACK) * norm_phi);
    let clauses = vec![
        Clause::new("dominates", dominates, POINTWISE_TOL),
        Clause::new("power-trends", trends, TREND_TOL),
        Clause::new("norm-bound", norm_margin, 0.0),
    ];
    let digest = Digest::new()
        .f64s(&phi.ts)
        .f64s(&phi.values)
        .f64(prob.gamma)
        .f64(prob.delta)
        .f64(prob.q.get())
        .u64(prob.class as u64);
    Ok(Envelope {
        phi_tilde,
        constant,
        norm_phi,
        norm_tilde,
        certificate: Certificate::new("envelope", &digest, clauses),
    })
}

/// The two integral constructions for the `t^γφ` increasing class.
fn increasing_envelope(ts: &[f64], phi: &[f64], gamma: f64, delta: f64, q: f64) -> Result<Vec<f64>> {
    let n = ts.len();
    let dq = delta * q;
    let g: Vec<f64> = ts.iter().zip(phi).map(|(t, v)| v.powf(q) * t.powf(-dq)).collect();
    let cells = eno_cells(ts, &g);
    let mut upper = vec![0.0; n];
    upper[n - 1] = upper_tail(g[n - 1], log_slope(ts[n - 2], ts[n - 1], g[n - 2], g[n - 1]))
        .ok_or_else(|| Error::TailDivergent("φ^q t^{−δq} does not decay as t → ∞".into()))?;
    for k in (0..n - 1).rev() {
        upper[k] = upper[k + 1] + cells[k];
    }
    // φ₁^q t^{δq} = (δ+γ)q · t^{2δq} · ∫_t^∞ φ^q u^{−δq} du/u
    let c1 = (delta + gamma) * q;
    let k: Vec<f64> = ts.iter().zip(&upper).map(|(t, u)| c1 * t.powf(2.0 * dq) * u).collect();
    let cells = eno_cells(ts, &k);
    let mut lower = vec![0.0; n];
    lower[0] = lower_tail(k[0], log_slope(ts[0], ts[1], k[0], k[1]))
        .ok_or_else(|| Error::TailDivergent("φ₁^q t^{δq} does not decay as t → 0".into()))?;
    for i in 1..n {
        lower[i] = lower[i - 1] + cells[i - 1];
    }
    let c2 = 2.0 * dq;
    Ok(ts
        .iter()
        .zip(&lower)
        .map(|(t, l)| t.powf(-delta) * (c2 * l).powf(1.0 / q))
        .collect())
}

// ---------------------------------------------------------------------------
// Balance points

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceShape {
    /// `φ(t)·t^α` nonincreasing.
    PowerDecreasing,
    /// `φ(t)·t^{−α}` nondecreasing.
    PowerIncreasing,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalancePoint {
    pub z: LogProfile,
    /// `|d ln z / d ln t|` by central differences at interior nodes.
    pub log_slopes: Vec<f64>,
    pub certificate: Certificate,
}

/// `z(t) = ψ^{−1}(φ(t))` and the bound `α/(βt) ≤ |z'(t)|/z(t)`.
pub fn balance_point(
    phi: &LogProfile,
    shape: BalanceShape,
    psi: &LogProfile,
    alpha: f64,
    beta: f64,
) -> Result<BalancePoint> {
    for (name, v) in [("alpha", alpha), ("beta", beta)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
        }
    }
    if psi.values.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::MonotonicityViolated("ψ must be strictly increasing".into()));
    }
    psi.require_trend(-beta, false, "ψ")?;
    match shape {
        BalanceShape::PowerDecreasing => phi.require_trend(alpha, false, "φ")?,
        BalanceShape::PowerIncreasing => phi.require_trend(-alpha, true, "φ")?,
    }
    let (lo, hi) = (psi.values[0], psi.values[psi.len() - 1]);
    if let Some(v) = phi.values.iter().find(|v| **v < lo || **v > hi) {
        return Err(Error::NotBijective(format!(
            "φ takes the value {v} outside the sampled range [{lo}, {hi}] of ψ"
        )));
    }
    let ln_psi: Vec<f64> = psi.values.iter().map(|v| v.ln()).collect();
    let ln_z: Vec<f64> = psi.ts.iter().map(|z| z.ln()).collect();
    let inverse = |y: f64| -> f64 {
        let ly = y.ln();
        let j = ln_psi.partition_point(|v| *v <= ly).clamp(1, ln_psi.len() - 1) - 1;
        let frac = (ly - ln_psi[j]) / (ln_psi[j + 1] - ln_psi[j]);
        (ln_z[j] + frac * (ln_z[j + 1] - ln_z[j])).exp()
    };
    let z: Vec<f64> = phi.values.iter().map(|v| inverse(*v)).collect();
    let n = z.len();
    let log_slopes: Vec<f64> = (1..n - 1)
        .map(|k| (z[k + 1] / z[k - 1]).ln().abs() / (phi.ts[k + 1] / phi.ts[k - 1]).ln())
        .collect();
    let target = alpha / beta;
    let margin = log_slopes
        .iter()
        .map(|s| s * (1.0 + BALANCE_SLACK) / target - 1.0)
        .fold(f64::INFINITY, f64::min);
    let digest = Digest::new()
        .f64s(&phi.ts)
        .f64s(&phi.values)
        .f64s(&psi.ts)
        .f64s(&psi.values)
        .f64(alpha)
        .f64(beta)
        .u64(shape as u64);
    Ok(BalancePoint {
        z: LogProfile::new(phi.ts.clone(), z)?,
        log_slopes,
        certificate: Certificate::new(
            "balance_point",
            &digest,
            vec![Clause::new("log-derivative-bound", margin, 0.0)],
        ),
    })
}

// ---------------------------------------------------------------------------
// Balancing infimum

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceCase {
    /// `t^ρφ₁` increasing, `t^σφ₂` decreasing; both profiles move with `z`.
    I,
    /// `t^{−1/p₁}φ₁` and `t^σφ₂` decreasing; `φ₁` is frozen at `t`.
    Ii,
    /// `t^ρφ₁` increasing, `t^{−1/p₂}φ₂` decreasing; `φ₂` is frozen at `t`.
    Iii,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BalanceProblem {
    case: BalanceCase,
    rho: f64,
    sigma: f64,
    p1: Exponent,
    q1: Exponent,
    p2: Exponent,
    q2: Exponent,
    theta: f64,
    p: Exponent,
    q: Exponent,
    phi1: LogProfile,
    phi2: LogProfile,
}

impl BalanceProblem {
    /// `first = (p₁, q₁)`, `second = (p₂, q₂)`; `φ₁`, `φ₂` share one grid.
    pub fn new(
        case: BalanceCase,
        rho: f64,
        sigma: f64,
        first: (Exponent, Exponent),
        second: (Exponent, Exponent),
        phi1: LogProfile,
        phi2: LogProfile,
    ) -> Result<Self> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(Error::InvalidArgument(format!("rho must be positive, got {rho}")));
        }
        if !(sigma.is_finite() && sigma < 0.0) {
            return Err(Error::InvalidArgument(format!("sigma must be negative, got {sigma}")));
        }
        let ((p1, q1), (p2, q2)) = (first, second);
        if p1 == p2 {
            return Err(Error::IndexViolation("p1 and p2 must differ".into()));
        }
        if phi1.ts != phi2.ts {
            return Err(Error::InvalidArgument("φ₁ and φ₂ must share a grid".into()));
        }
        let theta = rho / (rho - sigma);
        let p = Exponent::from_recip((1.0 - theta) * p1.recip() + theta * p2.recip())?;
        let q = Exponent::from_recip((1.0 - theta) * q1.recip() + theta * q2.recip())?;
        match case {
            BalanceCase::I => {
                phi1.require_trend(rho, true, "φ₁")?;
                phi2.require_trend(sigma, false, "φ₂")?;
            }
            BalanceCase::Ii => {
                phi1.require_trend(-p1.recip(), false, "φ₁")?;
                phi2.require_trend(sigma, false, "φ₂")?;
            }
            BalanceCase::Iii => {
                phi1.require_trend(rho, true, "φ₁")?;
                phi2.require_trend(-p2.recip(), false, "φ₂")?;
            }
        }
        Ok(BalanceProblem {
            case,
            rho,
            sigma,
            p1,
            q1,
            p2,
            q2,
            theta,
            p,
            q,
            phi1,
            phi2,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn q(&self) -> Exponent {
        self.q
    }

    /// `Φ(z, t)` given the profile values at `z` and at `t`.
    fn objective(&self, t: f64, z: f64, at_z: (f64, f64), at_t: (f64, f64)) -> f64 {
        let a = t.powf(-self.p1.recip());
        let b = t.powf(-self.p2.recip());
        let (u, v) = match self.case {
            BalanceCase::I => (at_z.0, at_z.1),
            BalanceCase::Ii => (at_t.0, at_z.1),
            BalanceCase::Iii => (at_z.0, at_t.1),
        };
        a * z.powf(self.rho) * u + b * z.powf(self.sigma) * v
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BalanceResult {
    pub ts: Vec<f64>,
    pub f: Vec<f64>,
    pub minimizers: Vec<f64>,
    /// Number of `t` whose grid minimizer sat on the first or last `z` node.
    pub edge_hits: usize,
    pub norm_f: f64,
    pub norm_phi1: f64,
    pub norm_phi2: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// `f(t) = inf_z Φ(z,t)` on `ts` and the ratio
/// `‖f‖_{p,q} / (‖φ₁‖_{L^{q₁}}^{1−θ}‖φ₂‖_{L^{q₂}}^θ)`.
pub fn balance_inf(prob: &BalanceProblem, ts: &[f64]) -> Result<BalanceResult> {
    if ts.len() < 4 || ts[0] <= 0.0 || ts.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "t grid must be positive, increasing, with at least 4 nodes".into(),
        ));
    }
    let zs = &prob.phi1.ts;
    let nz = zs.len();
    let rows: Vec<(f64, f64, bool)> = ts
        .par_iter()
        .map(|&t| {
            let at_t = (prob.phi1.interp(t), prob.phi2.interp(t));
            let grid_val = |j: usize| prob.objective(t, zs[j], (prob.phi1.values[j], prob.phi2.values[j]), at_t);
            let (j, best) = (0..nz)
                .map(|j| (j, grid_val(j)))
                .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
            if j == 0 || j == nz - 1 {
                return (best, zs[j], true);
            }
            let neg = |u: f64| {
                let z = u.exp();
                -prob.objective(t, z, (prob.phi1.interp(z), prob.phi2.interp(z)), at_t)
            };
            let (u, v) = refine_max(neg, zs[j - 1].ln(), zs[j].ln(), zs[j + 1].ln(), Z_REFINE_TOL);
            if -v < best {
                (-v, u.exp(), false)
            } else {
                (best, zs[j], false)
            }
        })
        .collect();
    let f: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let minimizers = rows.iter().map(|r| r.1).collect();
    let edge_hits = rows.iter().filter(|r| r.2).count();
    let inv_p = prob.p.recip();
    let weighted = LogProfile::new(ts.to_vec(), ts.iter().zip(&f).map(|(t, v)| t.powf(inv_p) * v).collect())?;
    let norm_f = weighted.lq_norm(prob.q)?;
    let norm_phi1 = prob.phi1.lq_norm(prob.q1)?;
    let norm_phi2 = prob.phi2.lq_norm(prob.q2)?;
    let bound = norm_phi1.powf(1.0 - prob.theta) * norm_phi2.powf(prob.theta);
    Ok(BalanceResult {
        ts: ts.to_vec(),
        f,
        minimizers,
        edge_hits,
        norm_f,
        norm_phi1,
        norm_phi2,
        bound,
        ratio: norm_f / bound,
    })
}

// ---------------------------------------------------------------------------
// Heat-semigroup inequalities

/// `c_n = 2π^{−n/2}∫_{ℝⁿ}|v|e^{−|v|²}dv`: `2/√π` for `n = 1`, `√π` for `n = 2`.
pub fn poincare_constant(n: usize) -> Result<f64> {
    match n {
        1 => Ok(2.0 / std::f64::consts::PI.sqrt()),
        2 => Ok(std::f64::consts::PI.sqrt()),
        _ => Err(Error::DimensionMismatch { expected: 2, got: n }),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoincareCheck {
    pub c_n: f64,
    /// `(f − P_hf)**(t) / (√h·(∇f)**(t))` per `t`.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub holds: bool,
    pub certificate: Certificate,
}

fn check_times(g: &GridSpec, ts: &[f64]) -> Result<()> {
    let measure = g.box_measure();
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && **t <= measure)) {
        return Err(Error::DomainExceeded { t: *t, measure });
    }
    Ok(())
}

/// `(f − P_hf)**(t) ≤ c_n√h·(∇f)**(t)` on `ts`.
pub fn pseudo_poincare(f: &AnalyticFunction, h: HeatScale, g: &GridSpec, ts: &[f64]) -> Result<PoincareCheck> {
    heat::check_fit(g, h.get())?;
    check_times(g, ts)?;
    let c_n = poincare_constant(g.dim())?;
    let evolved = sample(&heat::apply_analytic(f, h)?, g)?;
    let defect = sample(f, g)?.zip_with(&evolved, |a, b| a - b)?;
    let dstar = double_star(&rearrangement(&defect));
    let gstar = double_star(&rearrangement(&gradient_norm_field(f, g)?));
    let root_h = h.get().sqrt();
    let ratios: Vec<f64> = ts
        .iter()
        .map(|t| {
            let num = dstar.eval(*t);
            let den = root_h * gstar.eval(*t);
            match (num, den) {
                (0.0, _) => 0.0,
                (_, 0.0) => f64::INFINITY,
                (n, d) => n / d,
            }
        })
        .collect();
    let max_ratio = ratios.iter().fold(0.0f64, |m, r| m.max(*r));
    let margin = 1.0 - max_ratio / (c_n * (1.0 + POINCARE_SLACK));
    let digest = Digest::new()
        .bytes(f.to_json().as_bytes())
        .f64(h.get())
        .f64(g.half_width())
        .u64(g.points_per_axis() as u64)
        .f64s(ts);
    let certificate = Certificate::new(
        "pseudo_poincare",
        &digest,
        vec![Clause::new("defect-bound", margin, 0.0)],
    );
    Ok(PoincareCheck {
        c_n,
        ratios,
        max_ratio,
        holds: certificate.holds,
        certificate,
    })
}

/// Sharp `‖p_h‖_{q'} = (4πh)^{−n/(2q)}(q')^{−n/(2q')}`.
pub fn smoothing_constant(n: usize, h: HeatScale, q: Exponent) -> Result<f64> {
    let qp = q.conjugate()?;
    let half_n = n as f64 / 2.0;
    let dual = if qp.is_infinite() {
        1.0
    } else {
        qp.get().powf(-half_n * qp.recip())
    };
    Ok((4.0 * std::f64::consts::PI * h.get()).powf(-half_n * q.recip()) * dual)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SmoothingCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub constant: f64,
    pub holds: bool,
    pub certificate: Certificate,
}

/// `‖P_hf‖_∞ ≤ ‖p_h‖_{q'}‖f‖_q`, together with `(P_hf)** ≤ f**` at every
/// cell-aligned `t`.
pub fn smoothing_bound(f: &SampledField, h: HeatScale, q: Exponent) -> Result<SmoothingCheck> {
    let g = f.grid();
    let constant = smoothing_constant(g.dim(), h, q)?;
    let evolved = HeatEvolver::new(f)?.apply(h)?;
    let lhs = evolved.max_abs();
    let rhs = constant * f.lp_norm(q.get());
    let sup_margin = if lhs == 0.0 {
        0.0
    } else {
        1.0 - lhs / (rhs * (1.0 + SMOOTHING_SLACK))
    };

    let fstar = rearrangement(f);
    let pstar = rearrangement(&evolved);
    let cell = g.cell_measure();
    let top = fstar.sup();
    let contraction = if top == 0.0 {
        0.0
    } else {
        (1..=g.len())
            .map(|k| {
                let t = k as f64 * cell;
                (fstar.integral_to(t) - pstar.integral_to(t)) / (t * top)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let digest = Digest::new()
        .f64s(f.values())
        .f64(g.half_width())
        .u64(g.dim() as u64)
        .f64(h.get())
        .f64(q.get());
    let certificate = Certificate::new(
        "smoothing_bound",
        &digest,
        vec![
            Clause::new("sup-bound", sup_margin, 0.0),
            Clause::new("double-star-contraction", contraction, POINTWISE_TOL),
        ],
    );
    Ok(SmoothingCheck {
        lhs,
        rhs,
        constant,
        holds: certificate.holds,
        certificate,
    })
}

/// Log grid helper for profiles.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    quad::log_spaced(lo, hi, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn brute_beta(a: &DiscreteSeq, k: i64) -> f64 {
        let r = 2f64.powf(-a.delta());
        let primed = |j: i64| -> f64 {
            (a.k_lo()..=j.min(a.k_hi()))
                .map(|m| r.powi((j - m) as i32) * a.get(m))
                .sum()
        };
        (k..k + 4000).map(|m| r.powi((m - k) as i32) * primed(m)).sum()
    }

    #[test]
    fn unit_mass_majorant() {
        let a = DiscreteSeq::new(0, vec![1.0], 1.0).unwrap();
        let m = seq_majorize(&a).unwrap();
        for k in -10..=10i64 {
            let expected = 4.0 / 3.0 * 2f64.powi(-(k.abs() as i32));
            assert!((m.at(k) - expected).abs() < 1e-15 * expected, "k={k}");
        }
        assert!((m.total - 4.0).abs() < 1e-14);
        assert!(m.certificate.holds, "{:?}", m.certificate);
    }

    #[test]
    fn random_sequences_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let vals: Vec<f64> = (0..20).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a = DiscreteSeq::new(-5, vals, 0.3).unwrap();
        let m = seq_majorize(&a).unwrap();
        assert!(m.certificate.holds, "{:?}", m.certificate);
        for k in -8..=18 {
            let b = brute_beta(&a, k);
            assert!((m.at(k) - b).abs() < 1e-12 * b, "k={k}: {} vs {b}", m.at(k));
        }
    }

    #[test]
    fn zero_sequence_rejected() {
        let a = DiscreteSeq::new(0, vec![0.0, 0.0], 0.5).unwrap();
        assert!(matches!(seq_majorize(&a), Err(Error::ZeroSequence)));
    }

    #[test]
    fn certificate_json_shape() {
        let a = DiscreteSeq::new(0, vec![1.0, 2.0], 0.5).unwrap();
        let c = seq_majorize(&a).unwrap().certificate;
        let v: serde_json::Value = serde_json::from_str(&c.to_json()).unwrap();
        assert_eq!(v["lemma"], "seq_majorize");
        assert_eq!(v["inputs-digest"].as_str().unwrap().len(), 16);
        assert_eq!(v["clauses"].as_array().unwrap().len(), 3);
        assert_eq!(v["holds"], true);
    }

    fn tent(n: usize) -> LogProfile {
        LogProfile::from_fn(log_grid(1e-8, 1e8, n), |t| t.min(1.0 / t)).unwrap()
    }

    #[test]
    fn tent_envelope_matches_closed_form() {
        let q = Exponent::new(1.0).unwrap();
        let prob = EnvelopeProblem::new(tent(1601), 1.0, 0.5, q, EnvelopeClass::PowerIncreasing).unwrap();
        let env = envelope(&prob).unwrap();
        assert!((env.norm_phi - 2.0).abs() < 1e-12);
        let interior = env
            .phi_tilde
            .ts()
            .iter()
            .zip(env.phi_tilde.values())
            .filter(|(t, _)| (1e-5..=1e5).contains(*t));
        for (t, v) in interior {
            let exact = if *t <= 1.0 {
                4.0 * t.sqrt() - 2.0 * t
            } else {
                4.0 / t.sqrt() - 2.0 / t
            };
            assert!((v - exact).abs() < 1e-7 * exact, "t={t}: {v} vs {exact}");
        }
        // ‖φ̃‖ = 12 = 2(1+γ/δ)‖φ‖: the norm clause is tight here.
        assert!((env.norm_tilde - 12.0).abs() < 1e-6);
        assert!(env.certificate.holds, "{:?}", env.certificate);
    }

    #[test]
    fn sup_envelope() {
        let prob =
            EnvelopeProblem::new(tent(101), 1.0, 0.5, Exponent::INFINITY, EnvelopeClass::PowerIncreasing).unwrap();
        let env = envelope(&prob).unwrap();
        assert_eq!(env.constant, 1.0);
        assert!(env.phi_tilde.values().iter().all(|v| (*v - 1.0).abs() < 1e-15));
        assert!(env.certificate.holds);
    }

    #[test]
    fn reflection_commutes_with_envelope() {
        // t^{-1}·min(t^{1/2}, t^{-2}) is nonincreasing
        let phi = LogProfile::from_fn(log_grid(1e-6, 1e6, 241), |t| t.sqrt().min(t.powi(-2))).unwrap();
        let q = Exponent::new(2.0).unwrap();
        let dec = EnvelopeProblem::new(phi.clone(), 1.0, 0.7, q, EnvelopeClass::PowerDecreasing).unwrap();
        let inc = EnvelopeProblem::new(phi.reflect(), 1.0, 0.7, q, EnvelopeClass::PowerIncreasing).unwrap();
        let a = envelope(&dec).unwrap();
        let b = envelope(&inc).unwrap();
        assert_eq!(a.phi_tilde.reflect().values(), b.phi_tilde.values());
        assert!(a.certificate.holds && b.certificate.holds);
    }

    #[test]
    fn envelope_rejects_wrong_class() {
        let phi = LogProfile::from_fn(log_grid(1e-3, 1e3, 50), |t| t * t / (1.0 + t.powi(4))).unwrap();
        let r = EnvelopeProblem::new(
            phi,
            1.0,
            0.5,
            Exponent::new(1.0).unwrap(),
            EnvelopeClass::PowerIncreasing,
        );
        assert!(matches!(r, Err(Error::MonotonicityViolated(_))));
    }

    #[test]
    fn balance_point_powers() {
        let ts = log_grid(1e-2, 1e2, 81);
        let phi = LogProfile::from_fn(ts, |t| t.powf(1.5)).unwrap();
        let psi = LogProfile::from_fn(log_grid(1e-6, 1e6, 201), |z| z * z).unwrap();
        let bp = balance_point(&phi, BalanceShape::PowerIncreasing, &psi, 1.0, 2.0).unwrap();
        for (t, z) in bp.z.ts().iter().zip(bp.z.values()) {
            assert!((z - t.powf(0.75)).abs() < 1e-12 * z);
        }
        assert!(bp.certificate.holds);

        let id = LogProfile::from_fn(log_grid(1e-6, 1e6, 201), |z| z).unwrap();
        let phi = LogProfile::from_fn(log_grid(1e-2, 1e2, 81), |t| t.powf(0.5)).unwrap();
        let bp = balance_point(&phi, BalanceShape::PowerIncreasing, &id, 0.5, 1.0).unwrap();
        let m = bp.certificate.clauses[0].margin;
        assert!((m - BALANCE_SLACK).abs() < 1e-9, "{m}");
    }

    #[test]
    fn balance_point_range_checked() {
        let phi = LogProfile::from_fn(log_grid(1e-2, 1e2, 41), |t| t).unwrap();
        let psi = LogProfile::from_fn(log_grid(1e-1, 1e1, 41), |z| z).unwrap();
        let r = balance_point(&phi, BalanceShape::PowerIncreasing, &psi, 1.0, 1.0);
        assert!(matches!(r, Err(Error::NotBijective(_))));
    }

    fn coercive_problem(kappa: f64, scale: f64) -> BalanceProblem {
        let zs = log_grid(1e-8, 1e8, 801);
        let phi1 = LogProfile::from_fn(zs.clone(), |z| scale * z.min(z.powf(-0.5))).unwrap();
        let phi2 = LogProfile::from_fn(zs, |z| scale * kappa * z.sqrt().min(1.0 / z)).unwrap();
        let e = |x: f64| Exponent::new(x).unwrap();
        BalanceProblem::new(
            BalanceCase::I,
            1.0,
            -1.0,
            (e(1.0), e(1.0)),
            (e(2.0), e(1.0)),
            phi1,
            phi2,
        )
        .unwrap()
    }

    #[test]
    fn balance_inf_homogeneity() {
        let ts = log_grid(1e-8, 1e8, 801);
        let base = balance_inf(&coercive_problem(1.0, 1.0), &ts).unwrap();
        assert!(base.ratio.is_finite() && base.ratio > 0.0);
        assert_eq!(base.edge_hits, 0);
        let doubled = balance_inf(&coercive_problem(1.0, 2.0), &ts).unwrap();
        assert!((doubled.norm_f / base.norm_f - 2.0).abs() < 1e-12);
        assert!((doubled.bound / base.bound - 2.0).abs() < 1e-12);
        let scaled = balance_inf(&coercive_problem(8.0, 1.0), &ts).unwrap();
        assert!(
            (scaled.ratio / base.ratio - 1.0).abs() < 1e-3,
            "{} vs {}",
            scaled.ratio,
            base.ratio
        );
    }

    #[test]
    fn poincare_constants_by_quadrature() {
        // 2π^{-n/2}∫|v|e^{-|v|²}dv by radial quadrature
        let radial = |n: usize| -> f64 {
            let ts = log_grid(1e-8, 1e2, 4001);
            let surface = if n == 1 { 2.0 } else { 2.0 * std::f64::consts::PI };
            let w: Vec<f64> = ts
                .iter()
                .map(|r| surface * r.powi(n as i32 + 1) * (-r * r).exp())
                .collect();
            let integral: f64 = eno_cells(&ts, &w).iter().sum();
            2.0 * std::f64::consts::PI.powf(-(n as f64) / 2.0) * integral
        };
        for n in [1, 2] {
            assert!((radial(n) - poincare_constant(n).unwrap()).abs() < 1e-8);
        }
        assert!((poincare_constant(1).unwrap() - std::f64::consts::FRAC_2_SQRT_PI).abs() < 1e-12);
        assert!((poincare_constant(2).unwrap() - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn poincare_holds_for_unit_gaussian() {
        let f = AnalyticFunction::gaussian(1.0, vec![0.0], 1.0).unwrap();
        let g = GridSpec::new(1, 40.0, 4096).unwrap();
        let ts = log_grid(1e-2, 79.0, 60);
        for h in [1e-2, 1e-1, 1.0] {
            let c = pseudo_poincare(&f, HeatScale::new(h).unwrap(), &g, &ts).unwrap();
            assert!(c.holds, "h={h}: {}", c.max_ratio);
        }
    }

    #[test]
    fn smoothing_constants() {
        let h = HeatScale::new(0.5).unwrap();
        let one = smoothing_constant(1, h, Exponent::new(1.0).unwrap()).unwrap();
        assert!((one - (2.0 * std::f64::consts::PI).powf(-0.5)).abs() < 1e-15);
        assert_eq!(smoothing_constant(2, h, Exponent::INFINITY).unwrap(), 1.0);
    }

    #[test]
    fn smoothing_bound_gaussian() {
        let f = AnalyticFunction::gaussian(1.0, vec![0.0], 1.0).unwrap();
        let g = GridSpec::new(1, 64.0, 4096).unwrap();
        let field = sample(&f, &g).unwrap();
        for h in [0.1, 1.0, 10.0] {
            for q in [1.0, 2.0, f64::INFINITY] {
                let c = smoothing_bound(&field, HeatScale::new(h).unwrap(), Exponent::new(q).unwrap()).unwrap();
                assert!(c.holds, "h={h} q={q}: {:?}", c.certificate);
            }
        }
    }

    #[test]
    fn smoothing_bound_concentration_limit() {
        // narrow bump: ‖P_hf‖_∞ → (4πh)^{-1/2}‖f‖₁
        let f = AnalyticFunction::gaussian(1.0, vec![0.0], 1e-4).unwrap();
        let g = GridSpec::new(1, 32.0, 1 << 16).unwrap();
        let c = smoothing_bound(
            &sample(&f, &g).unwrap(),
            HeatScale::new(1.0).unwrap(),
            Exponent::new(1.0).unwrap(),
        )
        .unwrap();
        assert!(c.holds);
        assert!(c.lhs / c.rhs > 0.999, "{}", c.lhs / c.rhs);
    }
}
