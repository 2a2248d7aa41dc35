//! Lorentz quasinorms and the disjoint / overlapping set-family inequalities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::funcspace::{GridSpec, SampledField};
use crate::numeric::{neumaier_sum, pow_diff};
use crate::rearrange::{rearrangement, StepProfile};

/// Lorentz index `(p, r)`; `p = ∞` is admitted only with `r = ∞`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawIndex", into = "RawIndex")]
pub struct LorentzIndex {
    p: Exponent,
    r: Exponent,
}

#[derive(Serialize, Deserialize)]
struct RawIndex {
    p: Exponent,
    r: Exponent,
}

impl TryFrom<RawIndex> for LorentzIndex {
    type Error = Error;

    fn try_from(raw: RawIndex) -> Result<Self> {
        LorentzIndex::new(raw.p, raw.r)
    }
}

impl From<LorentzIndex> for RawIndex {
    fn from(idx: LorentzIndex) -> Self {
        RawIndex { p: idx.p, r: idx.r }
    }
}

impl LorentzIndex {
    pub fn new(p: Exponent, r: Exponent) -> Result<Self> {
        if p.is_infinite() && !r.is_infinite() {
            return Err(Error::InvalidIndex(format!("L^{{inf,{r}}} is not supported")));
        }
        Ok(LorentzIndex { p, r })
    }

    /// Convenience constructor from raw reals (`f64::INFINITY` allowed).
    pub fn from_f64(p: f64, r: f64) -> Result<Self> {
        Self::new(Exponent::new(p)?, Exponent::new(r)?)
    }

    /// `L^p = L^{p,p}`.
    pub fn lebesgue(p: f64) -> Result<Self> {
        Self::from_f64(p, p)
    }

    pub fn p(&self) -> Exponent {
        self.p
    }

    pub fn r(&self) -> Exponent {
        self.r
    }
}

/// `‖f‖_{p,r}` from a left-continuous rearrangement, exact on each step.
pub fn lorentz_norm(fstar: &StepProfile, idx: LorentzIndex) -> Result<f64> {
    if fstar.is_empty() {
        return Ok(0.0);
    }
    let inv_p = idx.p.recip();
    let ts = fstar.breakpoints();
    let vs = fstar.values();
    if idx.r.is_infinite() {
        if idx.p.is_infinite() {
            return Ok(fstar.sup());
        }
        return Ok(ts.iter().zip(vs).fold(0.0f64, |m, (t, v)| m.max(t.powf(inv_p) * v)));
    }
    let r = idx.r.get();
    let e = r * inv_p;
    let mut prev = 0.0;
    let sum = neumaier_sum(ts.iter().zip(vs).map(|(t, v)| {
        let term = v.powf(r) * pow_diff(*t, prev, e);
        prev = *t;
        term
    }));
    let value = (sum / e).powf(1.0 / r);
    if !value.is_finite() {
        return Err(Error::NonIntegrable(format!("Lorentz integral overflowed for {idx:?}")));
    }
    Ok(value)
}

/// `(p ∫₀^∞ y^{r−1} λ(y)^{r/p} dy)^{1/r}` from a right-continuous
/// distribution profile.
pub fn lorentz_norm_via_distribution(lambda: &StepProfile, idx: LorentzIndex) -> Result<f64> {
    if idx.p.is_infinite() || idx.r.is_infinite() {
        return Err(Error::UnsupportedIndex(
            "the distribution form needs finite p and r".into(),
        ));
    }
    let (p, r) = (idx.p.get(), idx.r.get());
    let mut prev = 0.0;
    let sum = neumaier_sum(lambda.breakpoints().iter().zip(lambda.values()).map(|(y, l)| {
        let term = l.powf(r / p) * pow_diff(*y, prev, r);
        prev = *y;
        term
    }));
    Ok((p * sum / r).powf(1.0 / r))
}

/// `‖f‖_{p,r}` of a sampled field.
pub fn lorentz_norm_of(f: &SampledField, idx: LorentzIndex) -> Result<f64> {
    lorentz_norm(&rearrangement(f), idx)
}

/// Outcome of an inequality check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl InequalityCheck {
    pub(crate) fn new(lhs: f64, rhs: f64) -> Self {
        InequalityCheck {
            lhs,
            rhs,
            holds: lhs <= rhs * (1.0 + 1e-10),
        }
    }
}

fn validate_cells(grid: &GridSpec, cells: &[usize], label: i64) -> Result<()> {
    if let Some(c) = cells.iter().find(|c| **c >= grid.len()) {
        return Err(Error::InvalidFamily(format!(
            "set {label} references cell {c} outside the grid"
        )));
    }
    if cells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidFamily(format!(
            "set {label} cells must be strictly increasing"
        )));
    }
    Ok(())
}

fn validate_labels(sets: &[(i64, Vec<usize>)]) -> Result<()> {
    if sets.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidFamily("set indices must be strictly increasing".into()));
    }
    Ok(())
}

/// Pairwise disjoint sets `E_j`, `j ∈ J`, given as sorted cell lists.
#[derive(Clone, Debug, PartialEq)]
pub struct DisjointFamily {
    grid: GridSpec,
    sets: Vec<(i64, Vec<usize>)>,
    tail_measures: Vec<f64>,
}

impl DisjointFamily {
    pub fn new(grid: GridSpec, sets: Vec<(i64, Vec<usize>)>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidFamily("family has no sets".into()));
        }
        validate_labels(&sets)?;
        let mut owner = vec![false; grid.len()];
        for (j, cells) in &sets {
            validate_cells(&grid, cells, *j)?;
            for c in cells {
                if owner[*c] {
                    return Err(Error::InvalidFamily(format!(
                        "set {j} overlaps an earlier set at cell {c}"
                    )));
                }
                owner[*c] = true;
            }
        }
        let cell = grid.cell_measure();
        let mut tail_measures = vec![0.0; sets.len()];
        let mut count = 0usize;
        for (i, (_, cells)) in sets.iter().enumerate().rev() {
            count += cells.len();
            tail_measures[i] = count as f64 * cell;
        }
        if tail_measures.iter().any(|m| *m <= 0.0) {
            return Err(Error::InvalidFamily(
                "the last set is empty, so its tail measure vanishes".into(),
            ));
        }
        Ok(DisjointFamily {
            grid,
            sets,
            tail_measures,
        })
    }

    pub fn sets(&self) -> &[(i64, Vec<usize>)] {
        &self.sets
    }

    /// `μ_j = Σ_{k ≥ j} |E_k|`, aligned with `sets()`.
    pub fn tail_measures(&self) -> &[f64] {
        &self.tail_measures
    }
}

/// Sets with `E_j ∩ E_k = ∅` whenever `|j − k| ≥ N`.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapFamily {
    grid: GridSpec,
    sets: Vec<(i64, Vec<usize>)>,
    overlap: usize,
}

impl OverlapFamily {
    pub fn new(grid: GridSpec, sets: Vec<(i64, Vec<usize>)>, overlap: usize) -> Result<Self> {
        if overlap == 0 {
            return Err(Error::InvalidFamily("overlap bound must be positive".into()));
        }
        validate_labels(&sets)?;
        let mut lo = vec![i64::MAX; grid.len()];
        let mut hi = vec![i64::MIN; grid.len()];
        for (j, cells) in &sets {
            validate_cells(&grid, cells, *j)?;
            for c in cells {
                lo[*c] = lo[*c].min(*j);
                hi[*c] = hi[*c].max(*j);
                if hi[*c] - lo[*c] >= overlap as i64 {
                    return Err(Error::InvalidFamily(format!(
                        "sets {} and {} share cell {c} but are {} apart (N = {overlap})",
                        lo[*c],
                        hi[*c],
                        hi[*c] - lo[*c]
                    )));
                }
            }
        }
        Ok(OverlapFamily { grid, sets, overlap })
    }

    pub fn sets(&self) -> &[(i64, Vec<usize>)] {
        &self.sets
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }
}

fn check_grid(f: &SampledField, grid: &GridSpec) -> Result<()> {
    if f.grid() != grid {
        return Err(Error::InvalidFamily("family and field live on different grids".into()));
    }
    Ok(())
}

/// `Σ_j μ_j^{q/p−1} ∫_{E_j}|f|^q ≤ ‖f‖_{p,q}^q` for `1 ≤ q ≤ p < ∞`.
pub fn check_disjoint_lemma(f: &SampledField, fam: &DisjointFamily, p: f64, q: f64) -> Result<InequalityCheck> {
    if !(q >= 1.0 && p.is_finite()) {
        return Err(Error::IndexViolation(format!(
            "need 1 <= q <= p < inf, got p={p}, q={q}"
        )));
    }
    if q > p {
        return Err(Error::IndexViolation(format!("q = {q} exceeds p = {p}")));
    }
    check_grid(f, &fam.grid)?;
    let cell = fam.grid.cell_measure();
    let vals = f.values();
    let lhs = neumaier_sum(fam.sets.iter().zip(&fam.tail_measures).map(|((_, cells), mu)| {
        let mass = cell * neumaier_sum(cells.iter().map(|c| vals[*c].abs().powf(q)));
        mu.powf(q / p - 1.0) * mass
    }));
    let rhs = lorentz_norm_of(f, LorentzIndex::from_f64(p, q)?)?.powf(q);
    Ok(InequalityCheck::new(lhs, rhs))
}

/// `Σ_j ‖f χ_{E_j}‖_{p,q}^q ≤ N^{q/p} ‖f‖_{p,q}^q` for `1 < p ≤ q < ∞`.
pub fn check_overlap_lemma(f: &SampledField, fam: &OverlapFamily, p: f64, q: f64) -> Result<InequalityCheck> {
    if !(p > 1.0 && q.is_finite()) {
        return Err(Error::IndexViolation(format!(
            "need 1 < p <= q < inf, got p={p}, q={q}"
        )));
    }
    if p > q {
        return Err(Error::IndexViolation(format!("p = {p} exceeds q = {q}")));
    }
    check_grid(f, &fam.grid)?;
    let idx = LorentzIndex::from_f64(p, q)?;
    let cell = fam.grid.cell_measure();
    let vals = f.values();
    let mut parts = Vec::with_capacity(fam.sets.len());
    for (_, cells) in &fam.sets {
        let restricted: Vec<f64> = cells.iter().map(|c| vals[*c]).collect();
        let fstar = StepProfile::rearrangement_of(&restricted, cell);
        parts.push(lorentz_norm(&fstar, idx)?.powf(q));
    }
    let lhs = neumaier_sum(parts);
    let rhs = (fam.overlap as f64).powf(q / p) * lorentz_norm_of(f, idx)?.powf(q);
    Ok(InequalityCheck::new(lhs, rhs))
}

fn sorted_distinct<R: Rng + ?Sized>(rng: &mut R, count: usize, upper: usize) -> Vec<usize> {
    let mut picks = rand::seq::index::sample(rng, upper, count).into_vec();
    picks.sort_unstable();
    picks
}

/// Random disjoint family of `sets` contiguous cell runs with increasing,
/// possibly gapped labels.
pub fn random_disjoint_family<R: Rng + ?Sized>(grid: &GridSpec, sets: usize, rng: &mut R) -> Result<DisjointFamily> {
    let len = grid.len();
    if sets == 0 || 2 * sets > len {
        return Err(Error::InvalidFamily(format!("cannot place {sets} runs in {len} cells")));
    }
    let cuts = sorted_distinct(rng, 2 * sets, len + 1);
    let mut label = rng.gen_range(-5i64..=5);
    let mut out = Vec::with_capacity(sets);
    for pair in cuts.chunks(2) {
        out.push((label, (pair[0]..pair[1]).collect()));
        label += rng.gen_range(1i64..=3);
    }
    DisjointFamily::new(*grid, out)
}

/// Random family of contiguous runs in which only sets fewer than `overlap`
/// labels apart may intersect.
pub fn random_overlap_family<R: Rng + ?Sized>(
    grid: &GridSpec,
    sets: usize,
    overlap: usize,
    rng: &mut R,
) -> Result<OverlapFamily> {
    let len = grid.len();
    let bounds_needed = sets + overlap;
    if sets == 0 || overlap == 0 || bounds_needed > len + 1 {
        return Err(Error::InvalidFamily(format!(
            "cannot place {sets} runs with overlap {overlap} in {len} cells"
        )));
    }
    let b = sorted_distinct(rng, bounds_needed, len + 1);
    let out = (0..sets)
        .map(|j| {
            let start = b[j];
            let full = b[j + overlap] - start;
            let end = start + rng.gen_range(1..=full);
            (j as i64, (start..end).collect())
        })
        .collect();
    OverlapFamily::new(*grid, out, overlap)
}
