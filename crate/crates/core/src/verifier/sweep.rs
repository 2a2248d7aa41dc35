use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::family::{function_family, FamilySpec};
use super::{
    default_t_grid, verify_BB, verify_BF, verify_FB, verify_FF, verify_pointwise_estprod, verify_sobolev_gn,
    verify_sobolev_lorentz, verify_wadade, verify_weak_type, GNParameters, ParamSet, RatioReport, Theorem,
    WadadeParameters,
};
use crate::error::{Error, Result};
use crate::exponent::Exponent;
use crate::funcspace::{sample, AnalyticFunction, GridSpec};
use crate::heat::HeatScale;
use crate::lemma_kit::{pseudo_poincare, seq_majorize, smoothing_bound, DiscreteSeq};
use crate::smoothnorms::QuadratureSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedFunction {
    pub id: String,
    pub func: AnalyticFunction,
}

/// One inequality with fixed indices, evaluated over every matching function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremRow {
    pub theorem: Theorem,
    pub params: serde_json::Value,
    /// Dimensions to run on; all available when absent.
    #[serde(default)]
    pub dims: Option<Vec<usize>>,
    #[serde(default = "default_t_nodes")]
    pub t_nodes: usize,
}

fn default_t_nodes() -> usize {
    48
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CheckSpec {
    Estprod {
        r: f64,
        s: f64,
        m: u32,
        #[serde(default)]
        dims: Option<Vec<usize>>,
    },
    PseudoPoincare {
        h: Vec<f64>,
        #[serde(default = "default_t_nodes")]
        t_nodes: usize,
        #[serde(default)]
        dims: Option<Vec<usize>>,
    },
    SmoothingBound {
        h: Vec<f64>,
        q: Vec<Exponent>,
        #[serde(default)]
        dims: Option<Vec<usize>>,
    },
    SeqMajorize {
        count: usize,
        delta: f64,
        #[serde(default = "default_seq_len")]
        len: usize,
    },
}

fn default_seq_len() -> usize {
    24
}

impl CheckSpec {
    pub fn name(&self) -> &'static str {
        match self {
            CheckSpec::Estprod { .. } => "estprod",
            CheckSpec::PseudoPoincare { .. } => "pseudo_poincare",
            CheckSpec::SmoothingBound { .. } => "smoothing_bound",
            CheckSpec::SeqMajorize { .. } => "seq_majorize",
        }
    }

    fn dims(&self) -> Option<&Vec<usize>> {
        match self {
            CheckSpec::Estprod { dims, .. }
            | CheckSpec::PseudoPoincare { dims, .. }
            | CheckSpec::SmoothingBound { dims, .. } => dims.as_ref(),
            CheckSpec::SeqMajorize { .. } => None,
        }
    }
}

fn default_points_1d() -> usize {
    4096
}

fn default_points_2d() -> usize {
    256
}

fn default_dilations() -> Vec<f64> {
    vec![1.0]
}

/// A sweep campaign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub functions: Vec<NamedFunction>,
    #[serde(default = "default_points_1d")]
    pub points_1d: usize,
    #[serde(default = "default_points_2d")]
    pub points_2d: usize,
    #[serde(default = "default_dilations")]
    pub dilations: Vec<f64>,
    /// Also evaluate every undilated row at twice the resolution.
    #[serde(default)]
    pub grid_doubling: bool,
    #[serde(default)]
    pub quad: QuadratureSpec,
    #[serde(default)]
    pub theorems: Vec<TheoremRow>,
    #[serde(default)]
    pub checks: Vec<CheckSpec>,
}

impl CampaignConfig {
    /// Parses JSON, reporting syntax and schema errors with line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: CampaignConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.points_1d < 2 || self.points_2d < 2 {
            return Err(Error::Config("points_1d and points_2d must be at least 2".into()));
        }
        if let Some(l) = self.dilations.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::Config(format!("dilations must be positive, got {l}")));
        }
        if !self.dilations.contains(&1.0) {
            return Err(Error::Config("dilations must include 1".into()));
        }
        for (i, row) in self.theorems.iter().enumerate() {
            match RowParams::parse(row) {
                Ok(_) | Err(Error::AdmissibilityViolation(_)) => {}
                Err(e) => return Err(Error::Config(format!("theorems[{i}]: {e}"))),
            }
        }
        for (i, c) in self.checks.iter().enumerate() {
            if let CheckSpec::SeqMajorize { delta, len, .. } = c {
                if !(delta.is_finite() && *delta > 0.0) || *len == 0 {
                    return Err(Error::Config(format!("checks[{i}]: need delta > 0 and len >= 1")));
                }
            }
        }
        Ok(())
    }

    /// Grid points per axis for `dim`.
    pub fn points(&self, dim: usize) -> usize {
        if dim == 1 {
            self.points_1d
        } else {
            self.points_2d
        }
    }

    /// Explicit functions followed by the generated families.
    pub fn functions(&self) -> Result<Vec<NamedFunction>> {
        let mut out = self.functions.clone();
        for fam in &self.families {
            out.extend(
                function_family(self.seed, fam)?
                    .into_iter()
                    .map(|(id, func)| NamedFunction { id, func }),
            );
        }
        let mut seen = std::collections::BTreeSet::new();
        for nf in &out {
            nf.func.validate()?;
            if !seen.insert(nf.id.as_str()) {
                return Err(Error::Config(format!("duplicate function id {:?}", nf.id)));
            }
        }
        Ok(out)
    }
}

enum RowParams {
    Gn(GNParameters),
    SobolevLorentz { r: u32, p: f64 },
    Wadade(WadadeParameters),
}

impl RowParams {
    fn parse(row: &TheoremRow) -> Result<Self> {
        let v = row.params.clone();
        Ok(match row.theorem {
            Theorem::SobolevLorentz => {
                #[derive(Deserialize)]
                #[serde(deny_unknown_fields)]
                struct Sl {
                    r: u32,
                    p: f64,
                }
                let sl: Sl = serde_json::from_value(v)?;
                GNParameters::sobolev_lorentz(2, sl.r, sl.p)?;
                RowParams::SobolevLorentz { r: sl.r, p: sl.p }
            }
            Theorem::WadadeBesov | Theorem::WadadeTl => {
                let wp: WadadeParameters = serde_json::from_value(v)?;
                wp.check()?;
                RowParams::Wadade(wp)
            }
            t => {
                let gp: GNParameters = serde_json::from_value(v)?;
                gp.check(t)?;
                RowParams::Gn(gp)
            }
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RowTarget {
    Theorem { theorem: Theorem, row: usize },
    Check { check: String, row: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Indices inadmissible for the function or a factor infinite.
    Skipped,
    /// An explicit-constant check failed.
    Failed,
    /// Internal numeric failure.
    Error,
}

/// Outcome of an explicit-constant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    /// Worst observed `lhs / (constant·rhs)`.
    pub margin: f64,
    pub holds: bool,
    pub detail: serde_json::Value,
}

/// One line of a sweep report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportLine {
    pub id: usize,
    pub target: RowTarget,
    pub function_id: String,
    pub dilation: f64,
    pub points_per_axis: usize,
    pub refined: bool,
    pub status: RowStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<RatioReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub check: Option<CheckOutcome>,
}

struct Job<'a> {
    target: RowTarget,
    func: Option<&'a NamedFunction>,
    dilation: f64,
    refined: bool,
}

fn dims_match(dims: Option<&Vec<usize>>, d: usize) -> bool {
    dims.is_none_or(|ds| ds.contains(&d))
}

fn is_skip(e: &Error) -> bool {
    matches!(
        e,
        Error::AdmissibilityViolation(_)
            | Error::NonIntegrable(_)
            | Error::UnsupportedDerivative { .. }
            | Error::UnsupportedFamily(_)
            | Error::UnsupportedIndex(_)
            | Error::IndexViolation(_)
            | Error::KernelTooWide { .. }
            | Error::DimensionMismatch { .. }
    )
}

fn grid_for(cfg: &CampaignConfig, f: &AnalyticFunction, dilation: f64, refined: bool) -> Result<GridSpec> {
    let n = cfg.points(f.dim()) * if refined { 2 } else { 1 };
    GridSpec::adequate_for(f, n)?.scaled(1.0 / dilation)
}

/// Grid whose box also holds the heat kernel at scale `h_max` around `f`.
fn heat_grid_for(cfg: &CampaignConfig, f: &AnalyticFunction, h_max: f64) -> Result<GridSpec> {
    let g = grid_for(cfg, f, 1.0, false)?;
    let half = match f.gaussian_terms() {
        Ok(terms) => {
            let c_max = terms
                .iter()
                .flat_map(|t| t.center.iter())
                .fold(0.0f64, |a, c| a.max(c.abs()));
            c_max + 10.0 * (2.0 * (f.width_range().1 + h_max)).sqrt()
        }
        Err(_) => g.half_width() + 10.0 * (2.0 * h_max).sqrt(),
    };
    GridSpec::new(f.dim(), g.half_width().max(half), g.points_per_axis())
}

/// Evaluates `theorem` with JSON `params` on `f` over `g`.
pub fn verify_theorem(
    theorem: Theorem,
    params: &serde_json::Value,
    f: &AnalyticFunction,
    g: &GridSpec,
    quad: &QuadratureSpec,
) -> Result<RatioReport> {
    let row = TheoremRow {
        theorem,
        params: params.clone(),
        dims: None,
        t_nodes: default_t_nodes(),
    };
    evaluate(&row, f, g, quad)
}

fn evaluate(row: &TheoremRow, f: &AnalyticFunction, g: &GridSpec, quad: &QuadratureSpec) -> Result<RatioReport> {
    Ok(match (row.theorem, RowParams::parse(row)?) {
        (Theorem::SobolevGn, RowParams::Gn(gp)) => verify_sobolev_gn(f, &gp, g, quad)?,
        (Theorem::WeakType, RowParams::Gn(gp)) => verify_weak_type(f, &gp, &default_t_grid(g, row.t_nodes), g, quad)?,
        (Theorem::Ff, RowParams::Gn(gp)) => verify_FF(f, &gp, g, quad)?,
        (Theorem::Bb, RowParams::Gn(gp)) => verify_BB(f, &gp, g, quad)?,
        (Theorem::Fb, RowParams::Gn(gp)) => verify_FB(f, &gp, g, quad)?,
        (Theorem::Bf, RowParams::Gn(gp)) => verify_BF(f, &gp, g, quad)?,
        (Theorem::SobolevLorentz, RowParams::SobolevLorentz { r, p }) => verify_sobolev_lorentz(f, r, p, g, quad)?,
        (Theorem::WadadeBesov, RowParams::Wadade(wp)) => verify_wadade(f, &wp, g, quad)?.0,
        (Theorem::WadadeTl, RowParams::Wadade(wp)) => verify_wadade(f, &wp, g, quad)?.1,
        _ => return Err(Error::Config("theorem and parameter kinds disagree".into())),
    })
}

fn run_theorem(
    cfg: &CampaignConfig,
    row: &TheoremRow,
    nf: &NamedFunction,
    dilation: f64,
    refined: bool,
) -> Result<RatioReport> {
    let g = grid_for(cfg, &nf.func, dilation, refined)?;
    let f = nf.func.dilate(dilation)?;
    let mut report = evaluate(row, &f, &g, &cfg.quad)?;
    report.function_id = nf.id.clone();
    report.dilation = dilation;
    Ok(report)
}

fn run_check(cfg: &CampaignConfig, spec: &CheckSpec, row: usize, nf: Option<&NamedFunction>) -> Result<CheckOutcome> {
    match (spec, nf) {
        (CheckSpec::Estprod { r, s, m, .. }, Some(nf)) => {
            let g = grid_for(cfg, &nf.func, 1.0, false)?;
            let c = verify_pointwise_estprod(&nf.func, *r, *s, *m, &cfg.quad, &g)?;
            Ok(CheckOutcome {
                margin: c.max_margin,
                holds: c.holds,
                detail: serde_json::to_value(&c)?,
            })
        }
        (CheckSpec::PseudoPoincare { h, t_nodes, .. }, Some(nf)) => {
            let g = heat_grid_for(cfg, &nf.func, h.iter().fold(0.0, |a, b| a.max(*b)))?;
            let ts = default_t_grid(&g, *t_nodes);
            let mut worst = 0.0f64;
            let mut holds = true;
            let mut certs = Vec::new();
            for &hh in h {
                let c = pseudo_poincare(&nf.func, HeatScale::new(hh)?, &g, &ts)?;
                worst = worst.max(c.max_ratio / c.c_n);
                holds &= c.holds;
                certs.push(c.certificate);
            }
            Ok(CheckOutcome {
                margin: worst,
                holds,
                detail: serde_json::to_value(certs)?,
            })
        }
        (CheckSpec::SmoothingBound { h, q, .. }, Some(nf)) => {
            let g = heat_grid_for(cfg, &nf.func, h.iter().fold(0.0, |a, b| a.max(*b)))?;
            let field = sample(&nf.func, &g)?;
            let mut worst = 0.0f64;
            let mut holds = true;
            let mut certs = Vec::new();
            for &hh in h {
                for &qq in q {
                    let c = smoothing_bound(&field, HeatScale::new(hh)?, qq)?;
                    worst = worst.max(c.lhs / c.rhs);
                    holds &= c.holds;
                    certs.push(c.certificate);
                }
            }
            Ok(CheckOutcome {
                margin: worst,
                holds,
                detail: serde_json::to_value(certs)?,
            })
        }
        (CheckSpec::SeqMajorize { delta, len, .. }, None) => {
            let mut rng =
                ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(row as u64).wrapping_mul(0x2545_f491_4f6c_dd1d));
            let values: Vec<f64> = (0..*len).map(|_| rng.gen::<f64>()).collect();
            let k_lo = rng.gen_range(-20..20);
            let maj = seq_majorize(&DiscreteSeq::new(k_lo, values, *delta)?)?;
            let worst = maj
                .certificate
                .clauses
                .iter()
                .map(|c| -c.margin / c.tolerance.max(f64::MIN_POSITIVE))
                .fold(f64::NEG_INFINITY, f64::max);
            Ok(CheckOutcome {
                margin: worst,
                holds: maj.certificate.holds,
                detail: serde_json::to_value(&maj.certificate)?,
            })
        }
        _ => Err(Error::Config(format!("check {} has no function target", spec.name()))),
    }
}

/// Process exit classification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitClass {
    Ok,
    ExplicitFailure,
    NumericFailure,
}

impl ExitClass {
    pub fn code(self) -> i32 {
        match self {
            ExitClass::Ok => 0,
            ExitClass::ExplicitFailure => 2,
            ExitClass::NumericFailure => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremSummary {
    pub row: usize,
    pub theorem: Theorem,
    pub params: Option<ParamSet>,
    pub rows: usize,
    pub ok: usize,
    pub skipped: usize,
    pub errors: usize,
    pub functions: usize,
    pub max_ratio: Option<f64>,
    pub min_ratio: Option<f64>,
    /// `max |ratio(λ)/ratio(1) − 1|` over `λ ∈ {1/2, 2}`.
    pub dilation_drift: Option<f64>,
    /// The same over every dilation in the campaign.
    pub dilation_drift_all: Option<f64>,
    pub max_ratio_refined: Option<f64>,
    /// `|max_ratio_refined / max_ratio(λ = 1) − 1|`.
    pub resolution_change: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub row: usize,
    pub check: String,
    pub rows: usize,
    pub ok: usize,
    pub failed: usize,
    pub skipped: usize,
    pub errors: usize,
    pub max_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub lines: usize,
    pub theorems: Vec<TheoremSummary>,
    pub checks: Vec<CheckSummary>,
    pub explicit_failures: usize,
    pub numeric_errors: usize,
    pub exit: ExitClass,
}

pub struct SweepOutcome {
    pub lines: Vec<ReportLine>,
    pub summary: Summary,
}

impl SweepOutcome {
    /// JSON lines, one per row, ordered by id.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for line in &self.lines {
            out.push_str(&serde_json::to_string(line).expect("report lines serialize"));
            out.push('\n');
        }
        out
    }
}

/// Runs every theorem row and check of `cfg`, optionally restricted to one
/// theorem.
pub fn run_sweep(cfg: &CampaignConfig, only: Option<Theorem>) -> Result<SweepOutcome> {
    cfg.validate()?;
    let funcs = cfg.functions()?;
    let mut jobs = Vec::new();
    for (row, tr) in cfg.theorems.iter().enumerate() {
        if only.is_some_and(|t| t != tr.theorem) {
            continue;
        }
        for nf in funcs.iter().filter(|nf| dims_match(tr.dims.as_ref(), nf.func.dim())) {
            let target = RowTarget::Theorem {
                theorem: tr.theorem,
                row,
            };
            for &dilation in &cfg.dilations {
                jobs.push(Job {
                    target: target.clone(),
                    func: Some(nf),
                    dilation,
                    refined: false,
                });
            }
            if cfg.grid_doubling {
                jobs.push(Job {
                    target,
                    func: Some(nf),
                    dilation: 1.0,
                    refined: true,
                });
            }
        }
    }
    if only.is_none() {
        for (row, spec) in cfg.checks.iter().enumerate() {
            let target = RowTarget::Check {
                check: spec.name().to_string(),
                row,
            };
            match spec {
                CheckSpec::SeqMajorize { count, .. } => {
                    for _ in 0..*count {
                        jobs.push(Job {
                            target: target.clone(),
                            func: None,
                            dilation: 1.0,
                            refined: false,
                        });
                    }
                }
                _ => {
                    for nf in funcs.iter().filter(|nf| dims_match(spec.dims(), nf.func.dim())) {
                        jobs.push(Job {
                            target: target.clone(),
                            func: Some(nf),
                            dilation: 1.0,
                            refined: false,
                        });
                    }
                }
            }
        }
    }

    let mut seq_counter: BTreeMap<usize, usize> = BTreeMap::new();
    let seq_index: Vec<usize> = jobs
        .iter()
        .map(|j| match &j.target {
            RowTarget::Check { row, .. } if j.func.is_none() => {
                let c = seq_counter.entry(*row).or_default();
                *c += 1;
                *c - 1
            }
            _ => 0,
        })
        .collect();

    let lines: Vec<ReportLine> = jobs
        .par_iter()
        .enumerate()
        .map(|(id, job)| {
            let points = job
                .func
                .map(|nf| cfg.points(nf.func.dim()) * if job.refined { 2 } else { 1 })
                .unwrap_or(0);
            let mut line = ReportLine {
                id,
                target: job.target.clone(),
                function_id: job
                    .func
                    .map_or_else(|| format!("seq-{:03}", seq_index[id]), |nf| nf.id.clone()),
                dilation: job.dilation,
                points_per_axis: points,
                refined: job.refined,
                status: RowStatus::Ok,
                reason: None,
                report: None,
                check: None,
            };
            let fail = |line: &mut ReportLine, e: Error| {
                line.status = if is_skip(&e) {
                    RowStatus::Skipped
                } else {
                    RowStatus::Error
                };
                line.reason = Some(e.to_string());
            };
            match &job.target {
                RowTarget::Theorem { row, .. } => {
                    match run_theorem(
                        cfg,
                        &cfg.theorems[*row],
                        job.func.expect("theorem jobs carry functions"),
                        job.dilation,
                        job.refined,
                    ) {
                        Ok(r) => line.report = Some(r),
                        Err(e) => fail(&mut line, e),
                    }
                }
                RowTarget::Check { row, .. } => {
                    let seeded_row = row * 1_000_003 + seq_index[id];
                    match run_check(cfg, &cfg.checks[*row], seeded_row, job.func) {
                        Ok(c) => {
                            if !c.holds {
                                line.status = RowStatus::Failed;
                            }
                            line.check = Some(c);
                        }
                        Err(e) => fail(&mut line, e),
                    }
                }
            }
            line
        })
        .collect();
    let summary = summarize(&lines);
    Ok(SweepOutcome { lines, summary })
}

fn max_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.max(b)))
}

fn min_opt(a: Option<f64>, b: f64) -> Option<f64> {
    Some(a.map_or(b, |a| a.min(b)))
}

/// Summary, per-function dilation curves and coarse-grid maximum of one row.
type RowAccumulator = (TheoremSummary, BTreeMap<String, BTreeMap<u64, f64>>, Option<f64>);

/// Aggregates report lines per theorem row and per check row.
pub fn summarize(lines: &[ReportLine]) -> Summary {
    let mut theorems: BTreeMap<usize, RowAccumulator> = BTreeMap::new();
    let mut checks: BTreeMap<usize, CheckSummary> = BTreeMap::new();
    let (mut explicit_failures, mut numeric_errors) = (0, 0);
    for line in lines {
        match line.status {
            RowStatus::Failed => explicit_failures += 1,
            RowStatus::Error => numeric_errors += 1,
            _ => {}
        }
        match &line.target {
            RowTarget::Theorem { theorem, row } => {
                let (s, by_fn, base_max) = theorems.entry(*row).or_insert_with(|| {
                    (
                        TheoremSummary {
                            row: *row,
                            theorem: *theorem,
                            params: None,
                            rows: 0,
                            ok: 0,
                            skipped: 0,
                            errors: 0,
                            functions: 0,
                            max_ratio: None,
                            min_ratio: None,
                            dilation_drift: None,
                            dilation_drift_all: None,
                            max_ratio_refined: None,
                            resolution_change: None,
                        },
                        BTreeMap::new(),
                        None,
                    )
                });
                s.rows += 1;
                match line.status {
                    RowStatus::Skipped => s.skipped += 1,
                    RowStatus::Error | RowStatus::Failed => s.errors += 1,
                    RowStatus::Ok => s.ok += 1,
                }
                if let Some(r) = &line.report {
                    s.params.get_or_insert(r.params);
                    if line.refined {
                        s.max_ratio_refined = max_opt(s.max_ratio_refined, r.ratio);
                    } else {
                        s.max_ratio = max_opt(s.max_ratio, r.ratio);
                        s.min_ratio = min_opt(s.min_ratio, r.ratio);
                        if line.dilation == 1.0 {
                            *base_max = max_opt(*base_max, r.ratio);
                        }
                        by_fn
                            .entry(line.function_id.clone())
                            .or_default()
                            .insert(line.dilation.to_bits(), r.ratio);
                    }
                }
            }
            RowTarget::Check { check, row } => {
                let s = checks.entry(*row).or_insert_with(|| CheckSummary {
                    row: *row,
                    check: check.clone(),
                    rows: 0,
                    ok: 0,
                    failed: 0,
                    skipped: 0,
                    errors: 0,
                    max_margin: None,
                });
                s.rows += 1;
                match line.status {
                    RowStatus::Ok => s.ok += 1,
                    RowStatus::Failed => s.failed += 1,
                    RowStatus::Skipped => s.skipped += 1,
                    RowStatus::Error => s.errors += 1,
                }
                if let Some(c) = &line.check {
                    s.max_margin = max_opt(s.max_margin, c.margin);
                }
            }
        }
    }
    let theorems = theorems
        .into_values()
        .map(|(mut s, by_fn, base_max)| {
            s.functions = by_fn.len();
            for ratios in by_fn.values() {
                let Some(base) = ratios.get(&1f64.to_bits()) else {
                    continue;
                };
                for (bits, r) in ratios {
                    let lambda = f64::from_bits(*bits);
                    let drift = (r / base - 1.0).abs();
                    s.dilation_drift_all = max_opt(s.dilation_drift_all, drift);
                    if lambda == 0.5 || lambda == 2.0 || lambda == 1.0 {
                        s.dilation_drift = max_opt(s.dilation_drift, drift);
                    }
                }
            }
            if let (Some(refined), Some(base)) = (s.max_ratio_refined, base_max) {
                s.resolution_change = Some((refined / base - 1.0).abs());
            }
            s
        })
        .collect();
    let exit = if explicit_failures > 0 {
        ExitClass::ExplicitFailure
    } else if numeric_errors > 0 {
        ExitClass::NumericFailure
    } else {
        ExitClass::Ok
    };
    Summary {
        lines: lines.len(),
        theorems,
        checks: checks.into_values().collect(),
        explicit_failures,
        numeric_errors,
        exit,
    }
}

fn csv(points: impl IntoIterator<Item = (f64, f64)>) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in points {
        writeln!(out, "{t:e},{v:e}").expect("writing to a string");
    }
    out
}

/// Writes `(t, value)` CSV series into `dir`:
/// per theorem row the worst ratio against dilation and the ratio per
/// function, per theorem the worst ratio against `|1/p₁ − 1/p₂|`, and per
/// check row the margin per target.
pub fn render_plots(lines: &[ReportLine], dir: &Path) -> Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut dilation: BTreeMap<(usize, Theorem), BTreeMap<u64, f64>> = BTreeMap::new();
    let mut per_fn: BTreeMap<(usize, Theorem), Vec<f64>> = BTreeMap::new();
    let mut blowup: BTreeMap<Theorem, BTreeMap<u64, f64>> = BTreeMap::new();
    let mut margins: BTreeMap<(usize, String), Vec<f64>> = BTreeMap::new();
    for line in lines.iter().filter(|l| !l.refined) {
        match (&line.target, &line.report, &line.check) {
            (RowTarget::Theorem { theorem, row }, Some(r), _) => {
                let e = dilation
                    .entry((*row, *theorem))
                    .or_default()
                    .entry(line.dilation.to_bits())
                    .or_insert(0.0);
                *e = e.max(r.ratio);
                if line.dilation == 1.0 {
                    per_fn.entry((*row, *theorem)).or_default().push(r.ratio);
                    let gap = match r.params {
                        ParamSet::Gn(gp) => Some((gp.first().0.recip() - gp.second().0.recip()).abs()),
                        ParamSet::Wadade(_) => None,
                    };
                    if let Some(gap) = gap {
                        let e = blowup.entry(*theorem).or_default().entry(gap.to_bits()).or_insert(0.0);
                        *e = e.max(r.ratio);
                    }
                }
            }
            (RowTarget::Check { check, row }, _, Some(c)) => {
                margins.entry((*row, check.clone())).or_default().push(c.margin);
            }
            _ => {}
        }
    }
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> Result<()> {
        std::fs::write(dir.join(&name), body)?;
        written.push(name);
        Ok(())
    };
    for ((row, th), series) in &dilation {
        put(
            format!("{row:02}_{}_dilation.csv", th.name()),
            csv(series.iter().map(|(b, v)| (f64::from_bits(*b), *v))),
        )?;
    }
    for ((row, th), ratios) in &per_fn {
        put(
            format!("{row:02}_{}_ratios.csv", th.name()),
            csv(ratios.iter().enumerate().map(|(i, v)| (i as f64, *v))),
        )?;
    }
    for (th, series) in &blowup {
        put(
            format!("{}_blowup.csv", th.name()),
            csv(series.iter().map(|(b, v)| (f64::from_bits(*b), *v))),
        )?;
    }
    for ((row, name), ms) in &margins {
        put(
            format!("check_{row:02}_{name}.csv"),
            csv(ms.iter().enumerate().map(|(i, v)| (i as f64, *v))),
        )?;
    }
    Ok(written)
}

/// Reads a JSON-lines report.
pub fn read_report(text: &str) -> Result<Vec<ReportLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Config(format!("line {}: {e}", i + 1))))
        .collect()
}
