//! Monte Carlo verification harness: laws of large numbers, central limit
//! theorems, martingale moment identities, Girsanov reweighting, radial
//! reduction and density agreement, each summarized as an [`McReport`].

use crate::densities::{DensityEvaluator, DensityFamily, DensitySpec, ExactSampler};
use crate::error::{Error, Result};
use crate::kernels_nd::{moments, KernelFamily};
use crate::rng::stream;
use crate::rootsys::{dot, RootKind};
use crate::simulate::{girsanov_weight, ProcessFamily, ProcessSpec, SimConfig, Simulator};
use crate::stats::{chi_square_gof, ks_test, ks_two_sample, mean_ci, standard_normal_cdf, TabulatedCdf, TestResult};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;
/// p-value floor for every goodness-of-fit test.
pub const P_FLOOR: f64 = 0.01;
/// Width of the statistical band, in standard errors.
pub const SIGMA_BAND: f64 = 3.0;
/// Covariance entries in the CLT check may deviate by this many standard errors.
pub const COV_SIGMA_BAND: f64 = 5.0;
/// Girsanov comparisons are inconclusive below this effective sample fraction.
pub const MIN_ESS_FRACTION: f64 = 0.05;
pub const DEFAULT_PATHS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Band an estimate must fall into: `|value − target| ≤ tolerance + sigmas·std_error`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub target: f64,
    pub tolerance: f64,
    pub sigmas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<Band>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ok: Option<bool>,
}

impl Estimate {
    pub fn new(value: f64, std_error: f64) -> Self {
        Self {
            value,
            std_error,
            band: None,
            ok: None,
        }
    }

    pub fn banded(value: f64, std_error: f64, band: Band) -> Self {
        let ok = (value - band.target).abs() <= band.tolerance + band.sigmas * std_error;
        Self {
            value,
            std_error,
            band: Some(band),
            ok: Some(ok),
        }
    }

    pub fn half_width(&self) -> Option<f64> {
        self.band.map(|b| b.tolerance + b.sigmas * self.std_error)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestStat {
    pub statistic: f64,
    pub p_value: f64,
    pub floor: f64,
    pub ok: bool,
}

impl TestStat {
    fn from(r: TestResult) -> Self {
        Self {
            statistic: r.statistic,
            p_value: r.p_value,
            floor: P_FLOOR,
            ok: r.p_value > P_FLOOR,
        }
    }
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub schema_version: u32,
    pub experiment_id: String,
    pub kind: String,
    pub process: ProcessSpec,
    pub sampler: String,
    pub n_paths: usize,
    pub t_grid: Vec<f64>,
    pub estimates: BTreeMap<String, Estimate>,
    pub tests: BTreeMap<String, TestStat>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    pub seed: u64,
    pub runtime_ms: Option<u64>,
}

impl McReport {
    fn new(id: &str, kind: &str, ps: &ProcessSpec, sampler: &str, n: usize, t_grid: Vec<f64>, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_id: id.to_string(),
            kind: kind.to_string(),
            process: ps.clone(),
            sampler: sampler.to_string(),
            n_paths: n,
            t_grid,
            estimates: BTreeMap::new(),
            tests: BTreeMap::new(),
            verdict: Verdict::Inconclusive,
            notes: Vec::new(),
            seed,
            runtime_ms: None,
        }
    }

    /// Pass iff every test clears its floor and every banded estimate lies
    /// in its band; `inconclusive` overrides both when the estimator itself
    /// is unreliable.
    fn finalize(&mut self, inconclusive: bool) {
        let all_ok = self.tests.values().all(|t| t.ok) && self.estimates.values().all(|e| e.ok != Some(false));
        self.verdict = if inconclusive {
            Verdict::Inconclusive
        } else if all_ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        };
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// Flat table of estimates and tests.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment_id,kind,name,value,std_error,target,half_width,p_value,floor,ok\n");
        let opt = |v: Option<f64>| v.map(fmt_num).unwrap_or_default();
        for (name, e) in &self.estimates {
            let _ = writeln!(
                s,
                "{},estimate,{},{},{},{},{},,,{}",
                self.experiment_id,
                name,
                fmt_num(e.value),
                fmt_num(e.std_error),
                opt(e.band.map(|b| b.target)),
                opt(e.half_width()),
                e.ok.map(|b| b.to_string()).unwrap_or_default()
            );
        }
        for (name, t) in &self.tests {
            let _ = writeln!(
                s,
                "{},test,{},{},,,,{},{},{}",
                self.experiment_id,
                name,
                fmt_num(t.statistic),
                fmt_num(t.p_value),
                fmt_num(t.floor),
                t.ok
            );
        }
        s
    }
}

/// Locale-independent shortest round-trip formatting.
pub fn fmt_num(v: f64) -> String {
    format!("{v:?}")
}

/// Exit code for a batch of reports: 0 all pass, 2 any fail, 3 otherwise.
pub fn exit_code(reports: &[McReport]) -> i32 {
    if reports.iter().any(|r| r.verdict == Verdict::Fail) {
        2
    } else if reports.iter().all(|r| r.verdict == Verdict::Pass) {
        0
    } else {
        3
    }
}

/// How terminal states are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    /// Rejection sampling from the transition density (product systems)
    /// or the matrix oracles.
    #[default]
    Exact,
    /// The Euler / jump-thinning scheme of [`Simulator`].
    Scheme,
}

/// Settings shared by all experiments of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunContext {
    pub seed: u64,
    pub sampler: SamplerKind,
    /// Scheme settings (`T` and `path_index` are set per draw).
    pub sim: SimConfig,
    /// Record wall-clock time in the reports (makes them non-reproducible).
    pub timing: bool,
}

impl Default for RunContext {
    fn default() -> Self {
        Self {
            seed: 0,
            sampler: SamplerKind::Exact,
            sim: SimConfig {
                record_path: false,
                ..SimConfig::default()
            },
            timing: false,
        }
    }
}

fn sampler_label(ps: &ProcessSpec, kind: SamplerKind) -> &'static str {
    if ps.family().is_oracle() {
        "matrix-oracle"
    } else if kind == SamplerKind::Scheme {
        "euler-jump-scheme"
    } else {
        "exact-density"
    }
}

fn is_product(ps: &ProcessSpec) -> bool {
    ps.root_system()
        .map(|rs| matches!(rs.kind(), RootKind::Rank1 | RootKind::ProductZ2))
        .unwrap_or(false)
}

fn density_family(f: ProcessFamily) -> Result<DensityFamily> {
    match f {
        ProcessFamily::BesselDrift => Ok(DensityFamily::BesselDrift),
        ProcessFamily::DunklDrift => Ok(DensityFamily::DunklDrift),
        ProcessFamily::HybridDrift => Ok(DensityFamily::HybridDrift),
        other => Err(Error::Unsupported(format!("{other:?} has no transition density"))),
    }
}

/// `n` terminal states at time `t`, path `i` driven by stream `(seed, tag, i)`.
pub fn draw_terminals(ps: &ProcessSpec, t: f64, n: usize, ctx: &RunContext, tag: &str, kind: SamplerKind) -> Result<Vec<Vec<f64>>> {
    let seed = ctx.seed;
    let exact = kind == SamplerKind::Exact && !ps.family().is_oracle();
    let out: Vec<Result<Vec<f64>>> = if exact {
        if !is_product(ps) {
            return Err(Error::Unsupported("exact sampling needs a product root system".into()));
        }
        let f = density_family(ps.family())?;
        let k = ps.root_system()?.k_scalar();
        let samplers = ps
            .x0()
            .iter()
            .zip(ps.lambda())
            .map(|(&x, &l)| ExactSampler::new(&DensitySpec::rank1(f, k, l)?, t, x))
            .collect::<Result<Vec<_>>>()?;
        (0..n)
            .into_par_iter()
            .map_init(
                || samplers.clone(),
                |s, i| {
                    let mut rng = stream(seed, tag, i as u64);
                    s.iter_mut().map(|c| c.sample(&mut rng)).collect()
                },
            )
            .collect()
    } else {
        let cfg = SimConfig {
            horizon: t,
            record_path: false,
            with_weight: false,
            ..ctx.sim.clone()
        };
        let sim = Simulator::new(ps, &cfg)?;
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut rng = stream(seed, tag, i as u64);
                sim.run(&mut rng).map(|p| p.terminal().to_vec()).map_err(|e| match e {
                    Error::NanState { step, .. } => Error::NanState { step, path: i as u64 },
                    e => e,
                })
            })
            .collect()
    };
    out.into_iter().collect()
}

fn timed<F: FnOnce() -> Result<McReport>>(ctx: &RunContext, f: F) -> Result<McReport> {
    let start = Instant::now();
    let mut r = f()?;
    if ctx.timing {
        r.runtime_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(r)
}

fn t_label(t: f64) -> String {
    format!("T={}", fmt_num(t))
}

/// Law of large numbers: `E‖X_T/T − λ‖` along increasing horizons.
pub fn run_slln(id: &str, ps: &ProcessSpec, t_list: &[f64], n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        if t_list.is_empty() || t_list.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("T list must be non-empty and increasing".into()));
        }
        let mut r = McReport::new(id, "slln", ps, sampler_label(ps, ctx.sampler), n_paths, t_list.to_vec(), ctx.seed);
        let l = ps.lambda();
        let dim = l.len() as f64;
        let mut errs = Vec::new();
        for &t in t_list {
            let xs = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/{}", t_label(t)), ctx.sampler)?;
            let dev: Vec<f64> = xs
                .iter()
                .map(|x| x.iter().zip(l).map(|(xi, li)| (xi / t - li).powi(2)).sum::<f64>().sqrt())
                .collect();
            let m = mean_ci(&dev, 0.95)?;
            errs.push((t, m));
        }
        let decreasing = errs.windows(2).filter(|w| w[1].1.mean < w[0].1.mean).count();
        for (i, (t, m)) in errs.iter().enumerate() {
            let e = if i + 1 == errs.len() {
                Estimate::banded(
                    m.mean,
                    m.std_error,
                    Band {
                        target: 0.0,
                        tolerance: 3.0 * (dim / t).sqrt(),
                        sigmas: SIGMA_BAND,
                    },
                )
            } else {
                Estimate::new(m.mean, m.std_error)
            };
            r.estimates.insert(format!("{}/mean_error", t_label(*t)), e);
        }
        let steps = (errs.len() - 1) as f64;
        r.estimates.insert(
            "decreasing_steps".into(),
            Estimate::banded(
                decreasing as f64,
                0.0,
                Band {
                    target: steps,
                    tolerance: 0.0,
                    sigmas: 0.0,
                },
            ),
        );
        r.finalize(false);
        Ok(r)
    })
}

/// Central limit theorem: `(X_T − Tλ)/√T` against `N(0, I)`.
pub fn run_clt(id: &str, ps: &ProcessSpec, t: f64, n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        let mut r = McReport::new(id, "clt", ps, sampler_label(ps, ctx.sampler), n_paths, vec![t], ctx.seed);
        let l = ps.lambda();
        let n = l.len();
        let xs = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/{}", t_label(t)), ctx.sampler)?;
        let z: Vec<Vec<f64>> = xs
            .iter()
            .map(|x| x.iter().zip(l).map(|(xi, li)| (xi - t * li) / t.sqrt()).collect())
            .collect();
        for i in 0..n {
            let c: Vec<f64> = z.iter().map(|v| v[i]).collect();
            r.tests
                .insert(format!("ks_coord{}", i + 1), TestStat::from(ks_test(&c, standard_normal_cdf)?));
            if l[i] == 0.0 {
                r.notes.push(format!(
                    "coordinate {} has zero drift: no centering occurs and a non-normal limit is expected",
                    i + 1
                ));
            }
        }
        for i in 0..n {
            for j in i..n {
                let prods: Vec<f64> = z.iter().map(|v| v[i] * v[j]).collect();
                let m = mean_ci(&prods, 0.95)?;
                r.estimates.insert(
                    format!("cov[{}][{}]", i + 1, j + 1),
                    Estimate::banded(
                        m.mean,
                        m.std_error,
                        Band {
                            target: if i == j { 1.0 } else { 0.0 },
                            tolerance: 0.0,
                            sigmas: COV_SIGMA_BAND,
                        },
                    ),
                );
            }
        }
        r.finalize(false);
        Ok(r)
    })
}

/// Martingale moment identities of the Dunkl family from `x₀`:
/// `E X_t = x₀ + tλ`, `E m₁(X_t) = m₁(x₀) + tλ` and
/// `E m₂;ₗⱼ(X_t) = m₂;ₗⱼ(x₀) + t(δₗⱼ + λₗm₁;ⱼ(x₀) + λⱼm₁;ₗ(x₀)) + t²λₗλⱼ`.
pub fn run_moment_checks(id: &str, ps: &ProcessSpec, t_grid: &[f64], n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        if ps.family() != ProcessFamily::DunklDrift || !is_product(ps) {
            return Err(Error::Unsupported("moment checks need a Dunkl process on a product system".into()));
        }
        let mut r = McReport::new(id, "moments", ps, sampler_label(ps, ctx.sampler), n_paths, t_grid.to_vec(), ctx.seed);
        let rs = ps.root_system()?;
        let (l, x0) = (ps.lambda(), ps.x0());
        let n = l.len();
        let at0 = moments(&rs, KernelFamily::Dunkl, l, x0)?;
        let m2_0 = at0.m2_full.clone().expect("product systems give the full m2");
        let band = Band {
            target: 0.0,
            tolerance: 0.0,
            sigmas: SIGMA_BAND,
        };
        for &t in t_grid {
            let xs = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/{}", t_label(t)), ctx.sampler)?;
            let ms = xs
                .iter()
                .map(|x| moments(&rs, KernelFamily::Dunkl, l, x))
                .collect::<Result<Vec<_>>>()?;
            let mut add = |name: String, vals: Vec<f64>, expect: f64| -> Result<()> {
                let m = mean_ci(&vals, 0.95)?;
                r.estimates
                    .insert(format!("{}/{name}", t_label(t)), Estimate::banded(m.mean - expect, m.std_error, band));
                Ok(())
            };
            for i in 0..n {
                add(format!("mean_resid[{}]", i + 1), xs.iter().map(|x| x[i]).collect(), x0[i] + t * l[i])?;
                add(format!("m1_resid[{}]", i + 1), ms.iter().map(|m| m.m1[i]).collect(), at0.m1[i] + t * l[i])?;
            }
            for a in 0..n {
                for b in a..n {
                    let delta = if a == b { 1.0 } else { 0.0 };
                    let expect = m2_0[a * n + b] + t * (delta + l[a] * at0.m1[b] + l[b] * at0.m1[a]) + t * t * l[a] * l[b];
                    let vals = ms.iter().map(|m| m.m2_full.as_ref().expect("full m2")[a * n + b]).collect();
                    add(format!("m2_resid[{}][{}]", a + 1, b + 1), vals, expect)?;
                }
            }
        }
        r.finalize(false);
        Ok(r)
    })
}

/// Test functionals for the Girsanov comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Functional {
    One,
    /// `1{x₁ > threshold}`.
    HalfLine { threshold: f64 },
    /// `1{lo ≤ x ≤ hi}` coordinatewise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    FirstCoordinate,
    /// `exp(−rate·‖x‖)`.
    BoundedExp { rate: f64 },
}

impl Functional {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Functional::One => 1.0,
            Functional::HalfLine { threshold } => f64::from(u8::from(x[0] > *threshold)),
            Functional::Box { lo, hi } => {
                let inside = x.iter().zip(lo).zip(hi).all(|((v, a), b)| a <= v && v <= b);
                f64::from(u8::from(inside))
            }
            Functional::FirstCoordinate => x[0],
            Functional::BoundedExp { rate } => (-rate * dot(x, x).sqrt()).exp(),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Functional::One => "one",
            Functional::HalfLine { .. } => "half_line",
            Functional::Box { .. } => "box",
            Functional::FirstCoordinate => "first_coordinate",
            Functional::BoundedExp { .. } => "bounded_exp",
        }
    }
}

/// `E_λ[f(X_T)·w(X_T)]` against `E_0[f(X_T)]` with `w` the Girsanov weight.
pub fn run_girsanov_check(id: &str, ps: &ProcessSpec, t: f64, f: &Functional, n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        let mut r = McReport::new(id, "girsanov", ps, sampler_label(ps, ctx.sampler), n_paths, vec![t], ctx.seed);
        let driftless = ps.with_lambda(vec![0.0; ps.lambda().len()])?;
        let drifted = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/drifted"), ctx.sampler)?;
        let plain = draw_terminals(&driftless, t, n_paths, ctx, &format!("{id}/driftless"), ctx.sampler)?;
        let w = drifted
            .iter()
            .map(|x| girsanov_weight(ps, x, t).map(|v| v.to_f64()))
            .collect::<Result<Vec<_>>>()?;
        let fw: Vec<f64> = drifted.iter().zip(&w).map(|(x, wi)| f.eval(x) * wi).collect();
        let f0: Vec<f64> = plain.iter().map(|x| f.eval(x)).collect();
        let a = mean_ci(&fw, 0.95)?;
        let b = mean_ci(&f0, 0.95)?;
        let ess = w.iter().sum::<f64>().powi(2) / w.iter().map(|v| v * v).sum::<f64>();
        let ess_fraction = ess / n_paths as f64;
        r.estimates.insert("reweighted".into(), Estimate::new(a.mean, a.std_error));
        r.estimates.insert("driftless".into(), Estimate::new(b.mean, b.std_error));
        r.estimates.insert("ess_fraction".into(), Estimate::new(ess_fraction, 0.0));
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        r.estimates.insert(
            "difference".into(),
            Estimate::banded(
                a.mean - b.mean,
                se,
                Band {
                    target: 0.0,
                    tolerance: 0.0,
                    sigmas: SIGMA_BAND,
                },
            ),
        );
        let symmetric_start = ps.family() != ProcessFamily::BesselDrift && ps.x0().iter().all(|&v| v == 0.0);
        if symmetric_start && *f == (Functional::HalfLine { threshold: 0.0 }) {
            // the driftless law from the origin is symmetric
            r.estimates.insert(
                "reweighted_vs_half".into(),
                Estimate::banded(
                    a.mean,
                    a.std_error,
                    Band {
                        target: 0.5,
                        tolerance: 0.0,
                        sigmas: SIGMA_BAND,
                    },
                ),
            );
        }
        let collapsed = ess_fraction < MIN_ESS_FRACTION;
        if collapsed {
            r.notes.push(format!(
                "importance weights collapsed: effective sample fraction {ess_fraction:.4} < {MIN_ESS_FRACTION}"
            ));
        }
        r.finalize(collapsed);
        Ok(r)
    })
}

/// CDF of a rank-one density started at `x`, tabulated on the truncated
/// support.
fn rank1_cdf(ds: &DensitySpec, t: f64, x: f64) -> Result<(TabulatedCdf<impl Fn(f64) -> f64>, f64, f64)> {
    let ev = DensityEvaluator::new(ds, t, &[x])?;
    let radius = x.abs() + ds.lambda[0].abs() * t + 12.0 * t.sqrt();
    let lo = if ds.on_chamber() { 0.0 } else { -radius };
    // surface evaluation errors as NaN; the tests then fail loudly
    let density = move |y: f64| ev.density(&[y]).unwrap_or(f64::NAN);
    Ok((TabulatedCdf::new(density, lo, radius, 1200, 0.0), lo, radius))
}

/// `‖X_T‖` from the origin against the rank-one Bessel law with
/// multiplicity `γ + N/2 − 1/2` and drift `‖λ‖`.
pub fn run_radial_check(id: &str, ps: &ProcessSpec, t_grid: &[f64], n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        if ps.x0().iter().any(|&v| v != 0.0) {
            return Err(Error::InvalidArgument("the radial check starts at the origin".into()));
        }
        let mut r = McReport::new(id, "radial", ps, sampler_label(ps, ctx.sampler), n_paths, t_grid.to_vec(), ctx.seed);
        let target = ps.radial_target()?;
        r.notes.push(format!(
            "target: rank-one Bessel, k = {}, drift = {}",
            fmt_num(target.spec.k_scalar()),
            fmt_num(target.lambda[0])
        ));
        for &t in t_grid {
            let xs = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/{}", t_label(t)), ctx.sampler)?;
            let radii: Vec<f64> = xs.iter().map(|x| dot(x, x).sqrt()).collect();
            let (cdf, _, _) = rank1_cdf(&target, t, 0.0)?;
            r.tests
                .insert(format!("{}/ks_radius", t_label(t)), TestStat::from(ks_test(&radii, |v| cdf.eval(v))?));
        }
        r.finalize(false);
        Ok(r)
    })
}

/// Scheme, exact sampler and transition density against each other in
/// rank one; for the hybrid family also the folded law against the Bessel
/// density.
pub fn run_density_agreement(id: &str, ps: &ProcessSpec, t: f64, n_paths: usize, ctx: &RunContext) -> Result<McReport> {
    timed(ctx, || {
        if ps.family().is_oracle() || ps.lambda().len() != 1 {
            return Err(Error::Unsupported("density agreement is for rank-one kernel families".into()));
        }
        let mut r = McReport::new(id, "density", ps, "euler-jump-scheme+exact-density", n_paths, vec![t], ctx.seed);
        let ds = ps.density_spec()?;
        let x0 = ps.x0()[0];
        let (cdf, lo, hi) = rank1_cdf(&ds, t, x0)?;
        r.estimates.insert("density_mass".into(), Estimate::new(cdf.total(), 0.0));
        let scheme: Vec<f64> = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/scheme"), SamplerKind::Scheme)?
            .into_iter()
            .map(|v| v[0])
            .collect();
        let exact: Vec<f64> = draw_terminals(ps, t, n_paths, ctx, &format!("{id}/exact"), SamplerKind::Exact)?
            .into_iter()
            .map(|v| v[0])
            .collect();
        let c = |v: f64| cdf.eval(v);
        r.tests.insert("scheme_vs_density/chi2".into(), TestStat::from(chi_square_gof(&scheme, c, 20, lo, hi)?));
        r.tests.insert("scheme_vs_density/ks".into(), TestStat::from(ks_test(&scheme, c)?));
        r.tests.insert("exact_vs_density/ks".into(), TestStat::from(ks_test(&exact, c)?));
        r.tests.insert("scheme_vs_exact/ks2".into(), TestStat::from(ks_two_sample(&scheme, &exact)?));
        if ps.family() == ProcessFamily::HybridDrift {
            let bessel = DensitySpec::rank1(DensityFamily::BesselDrift, ds.spec.k_scalar(), ds.lambda[0].abs())?;
            let (bcdf, _, _) = rank1_cdf(&bessel, t, x0.abs())?;
            // the sign of λ is irrelevant to the hybrid law's radial part
            let folded: Vec<f64> = scheme.iter().map(|v| v.abs()).collect();
            r.tests
                .insert("folded_scheme_vs_bessel/ks".into(), TestStat::from(ks_test(&folded, |v| bcdf.eval(v))?));
        }
        r.finalize(false);
        Ok(r)
    })
}

/// One experiment, as stored in presets and config files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    Slln {
        process: ProcessSpec,
        t_list: Vec<f64>,
        n_paths: usize,
    },
    Clt {
        process: ProcessSpec,
        #[serde(rename = "T")]
        horizon: f64,
        n_paths: usize,
    },
    Moments {
        process: ProcessSpec,
        t_grid: Vec<f64>,
        n_paths: usize,
    },
    Girsanov {
        process: ProcessSpec,
        #[serde(rename = "T")]
        horizon: f64,
        functional: Functional,
        n_paths: usize,
    },
    Radial {
        process: ProcessSpec,
        t_grid: Vec<f64>,
        n_paths: usize,
    },
    Density {
        process: ProcessSpec,
        #[serde(rename = "T")]
        horizon: f64,
        n_paths: usize,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::Slln { .. } => "slln",
            ExperimentSpec::Clt { .. } => "clt",
            ExperimentSpec::Moments { .. } => "moments",
            ExperimentSpec::Girsanov { .. } => "girsanov",
            ExperimentSpec::Radial { .. } => "radial",
            ExperimentSpec::Density { .. } => "density",
        }
    }

    pub fn n_paths_mut(&mut self) -> &mut usize {
        match self {
            ExperimentSpec::Slln { n_paths, .. }
            | ExperimentSpec::Clt { n_paths, .. }
            | ExperimentSpec::Moments { n_paths, .. }
            | ExperimentSpec::Girsanov { n_paths, .. }
            | ExperimentSpec::Radial { n_paths, .. }
            | ExperimentSpec::Density { n_paths, .. } => n_paths,
        }
    }
}

pub const EXPERIMENT_KINDS: [&str; 6] = ["slln", "clt", "moments", "girsanov", "radial", "density"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedExperiment {
    pub name: String,
    pub spec: ExperimentSpec,
}

pub fn run_experiment(e: &NamedExperiment, ctx: &RunContext) -> Result<McReport> {
    let id = e.name.as_str();
    match &e.spec {
        ExperimentSpec::Slln { process, t_list, n_paths } => run_slln(id, process, t_list, *n_paths, ctx),
        ExperimentSpec::Clt { process, horizon, n_paths } => run_clt(id, process, *horizon, *n_paths, ctx),
        ExperimentSpec::Moments { process, t_grid, n_paths } => run_moment_checks(id, process, t_grid, *n_paths, ctx),
        ExperimentSpec::Girsanov {
            process,
            horizon,
            functional,
            n_paths,
        } => run_girsanov_check(id, process, *horizon, functional, *n_paths, ctx),
        ExperimentSpec::Radial { process, t_grid, n_paths } => run_radial_check(id, process, t_grid, *n_paths, ctx),
        ExperimentSpec::Density { process, horizon, n_paths } => {
            run_density_agreement(id, process, *horizon, *n_paths, ctx)
        }
    }
}

pub const PRESET_NAMES: [&str; 3] = ["acceptance", "rank1-dunkl-k1", "boundary-counterexample"];

fn named(name: &str, spec: ExperimentSpec) -> NamedExperiment {
    NamedExperiment {
        name: name.to_string(),
        spec,
    }
}

/// Named experiment lists. `acceptance` covers every Monte Carlo
/// acceptance scenario; the boundary counterexample fails by design.
pub fn preset(name: &str) -> Result<Vec<NamedExperiment>> {
    let n = DEFAULT_PATHS;
    let pf = ProcessFamily::DunklDrift;
    let dunkl1 = ProcessSpec::rank1(pf, 1.0, 1.0, 0.0)?;
    let counterexample = || -> Result<NamedExperiment> {
        Ok(named(
            "clt/productz2-boundary-counterexample",
            ExperimentSpec::Clt {
                process: ProcessSpec::product_z2(pf, 1.0, vec![1.0, 0.0], vec![0.0, 0.0])?,
                horizon: 100.0,
                n_paths: n,
            },
        ))
    };
    match name {
        "rank1-dunkl-k1" => Ok(vec![
            named(
                "slln/rank1-dunkl-k1",
                ExperimentSpec::Slln {
                    process: dunkl1.clone(),
                    t_list: vec![10.0, 40.0, 160.0],
                    n_paths: n,
                },
            ),
            named(
                "clt/rank1-dunkl-k1",
                ExperimentSpec::Clt {
                    process: dunkl1.clone(),
                    horizon: 100.0,
                    n_paths: n,
                },
            ),
            named(
                "moments/rank1-dunkl-k1",
                ExperimentSpec::Moments {
                    process: dunkl1.clone(),
                    t_grid: vec![0.5, 1.0, 2.0],
                    n_paths: n,
                },
            ),
            named(
                "girsanov/rank1-dunkl-k1/half_line",
                ExperimentSpec::Girsanov {
                    process: dunkl1.clone(),
                    horizon: 1.0,
                    functional: Functional::HalfLine { threshold: 0.0 },
                    n_paths: n,
                },
            ),
            named(
                "density/rank1-dunkl-k1",
                ExperimentSpec::Density {
                    process: dunkl1,
                    horizon: 1.0,
                    n_paths: n,
                },
            ),
        ]),
        "boundary-counterexample" => Ok(vec![counterexample()?]),
        "acceptance" => {
            let mut v = Vec::new();
            // exact oracle and scheme against densities
            v.push(named(
                "radial/oracle-chi-n3",
                ExperimentSpec::Radial {
                    process: ProcessSpec::chi(3, 1.0)?,
                    t_grid: vec![1.0],
                    n_paths: n,
                },
            ));
            v.push(named(
                "density/rank1-dunkl-k1",
                ExperimentSpec::Density {
                    process: dunkl1.clone(),
                    horizon: 1.0,
                    n_paths: n,
                },
            ));
            // moment identities
            v.push(named(
                "moments/rank1-dunkl-k1",
                ExperimentSpec::Moments {
                    process: dunkl1.clone(),
                    t_grid: vec![0.5, 1.0, 2.0],
                    n_paths: n,
                },
            ));
            v.push(named(
                "moments/productz2-dunkl-k1",
                ExperimentSpec::Moments {
                    process: ProcessSpec::product_z2(pf, 1.0, vec![1.0, 2.0], vec![0.0, 0.0])?,
                    t_grid: vec![0.5, 1.0, 2.0],
                    n_paths: n,
                },
            ));
            // Girsanov
            for k in [0.0, 1.0] {
                let p = ProcessSpec::rank1(pf, k, 1.0, 0.0)?;
                for f in [
                    Functional::HalfLine { threshold: 0.0 },
                    Functional::FirstCoordinate,
                    Functional::BoundedExp { rate: 1.0 },
                ] {
                    v.push(named(
                        &format!("girsanov/rank1-dunkl-k{k}/{}", f.label()),
                        ExperimentSpec::Girsanov {
                            process: p.clone(),
                            horizon: 1.0,
                            functional: f,
                            n_paths: n,
                        },
                    ));
                }
            }
            // radial reduction
            for (label, fam) in [
                ("dunkl", ProcessFamily::DunklDrift),
                ("bessel", ProcessFamily::BesselDrift),
                ("hybrid", ProcessFamily::HybridDrift),
            ] {
                v.push(named(
                    &format!("radial/productz2-{label}-k1"),
                    ExperimentSpec::Radial {
                        process: ProcessSpec::product_z2(fam, 1.0, vec![1.0, 0.0], vec![0.0, 0.0])?,
                        t_grid: vec![0.5, 1.0],
                        n_paths: n,
                    },
                ));
            }
            let dyson = ProcessSpec::dyson(2, 2, vec![1.0, -1.0])?;
            v.push(named(
                "radial/dyson-n2-d2",
                ExperimentSpec::Radial {
                    process: dyson.clone(),
                    t_grid: vec![0.5, 1.0],
                    n_paths: n,
                },
            ));
            // laws of large numbers
            let bessel1 = ProcessSpec::rank1(ProcessFamily::BesselDrift, 1.0, 1.0, 0.0)?;
            for (label, p) in [
                ("rank1-dunkl-k1", dunkl1.clone()),
                ("rank1-bessel-k1", bessel1.clone()),
                ("dyson-n2-d2", dyson.clone()),
            ] {
                v.push(named(
                    &format!("slln/{label}"),
                    ExperimentSpec::Slln {
                        process: p,
                        t_list: vec![10.0, 40.0, 160.0],
                        n_paths: n,
                    },
                ));
            }
            // central limit theorems and the intended-failure fixture
            for (label, p) in [
                ("rank1-dunkl-k1", dunkl1),
                ("rank1-bessel-k0.5", ProcessSpec::rank1(ProcessFamily::BesselDrift, 0.5, 1.0, 0.0)?),
                ("rank1-bessel-k1", bessel1),
                ("dyson-n2-d2", dyson),
            ] {
                v.push(named(
                    &format!("clt/{label}"),
                    ExperimentSpec::Clt {
                        process: p,
                        horizon: 100.0,
                        n_paths: n,
                    },
                ));
            }
            v.push(counterexample()?);
            Ok(v)
        }
        other => Err(Error::InvalidArgument(format!(
            "unknown preset {other:?}; available: {}",
            PRESET_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx() -> RunContext {
        RunContext {
            seed: 3,
            ..RunContext::default()
        }
    }

    #[test]
    fn k0_slln_matches_gaussian_rate() {
        let ps = ProcessSpec::rank1(ProcessFamily::DunklDrift, 0.0, 1.0, 0.0).unwrap();
        let r = run_slln("k0", &ps, &[4.0, 16.0, 64.0], 4000, &ctx()).unwrap();
        for t in [4.0f64, 16.0, 64.0] {
            let e = &r.estimates[&format!("T={t:?}/mean_error")];
            let exact = (2.0 / (std::f64::consts::PI * t)).sqrt();
            assert!((e.value - exact).abs() < 4.0 * e.std_error, "T={t}");
        }
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn k0_clt_passes_and_covariance_is_identity() {
        let ps = ProcessSpec::product_z2(ProcessFamily::DunklDrift, 0.0, vec![1.0, -0.5], vec![0.0, 0.0]).unwrap();
        let r = run_clt("k0", &ps, 5.0, 4000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{r:#?}");
        assert!(r.estimates.contains_key("cov[1][2]"));
    }

    #[test]
    fn boundary_counterexample_fails() {
        let mut e = preset("boundary-counterexample").unwrap().remove(0);
        *e.spec.n_paths_mut() = 10_000;
        let r = run_experiment(&e, &ctx()).unwrap();
        assert!(r.tests["ks_coord2"].p_value < P_FLOOR);
        assert_eq!(r.verdict, Verdict::Fail);
    }

    #[test]
    fn moment_identities_hold() {
        let ps = ProcessSpec::rank1(ProcessFamily::DunklDrift, 1.0, 1.0, -0.5).unwrap();
        let r = run_moment_checks("m", &ps, &[0.5, 1.0], 4000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.estimates);
        let z = ProcessSpec::rank1(ProcessFamily::DunklDrift, 1.0, 0.0, 0.0).unwrap();
        let r = run_moment_checks("m0", &z, &[1.0], 4000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn girsanov_identities() {
        let ps = ProcessSpec::rank1(ProcessFamily::DunklDrift, 1.0, 1.0, 0.0).unwrap();
        for f in [Functional::One, Functional::HalfLine { threshold: 0.0 }] {
            let r = run_girsanov_check("g", &ps, 1.0, &f, 4000, &ctx()).unwrap();
            assert_eq!(r.verdict, Verdict::Pass, "{f:?}");
        }
        let r = run_girsanov_check("g", &ps, 1.0, &Functional::One, 4000, &ctx()).unwrap();
        assert!((r.estimates["driftless"].value - 1.0).abs() < 1e-15);
        // large T‖λ‖² collapses the importance weights
        let far = ProcessSpec::rank1(ProcessFamily::DunklDrift, 1.0, 3.0, 0.0).unwrap();
        let r = run_girsanov_check("g", &far, 20.0, &Functional::FirstCoordinate, 2000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
    }

    #[test]
    fn radial_and_density_k0() {
        let ps = ProcessSpec::product_z2(ProcessFamily::DunklDrift, 0.0, vec![1.0, 0.5], vec![0.0, 0.0]).unwrap();
        let r = run_radial_check("r", &ps, &[1.0], 3000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let d = ProcessSpec::rank1(ProcessFamily::DunklDrift, 0.0, 1.0, 0.5).unwrap();
        let c = RunContext {
            sim: SimConfig {
                dt0: 0.01,
                record_path: false,
                ..SimConfig::default()
            },
            ..ctx()
        };
        let r = run_density_agreement("d", &d, 1.0, 3000, &c).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.tests);
    }

    #[test]
    fn hybrid_fold_agreement() {
        let ps = ProcessSpec::rank1(ProcessFamily::HybridDrift, 1.0, 1.0, 0.0).unwrap();
        let r = run_density_agreement("h", &ps, 1.0, 3000, &ctx()).unwrap();
        assert_eq!(r.verdict, Verdict::Pass, "{:#?}", r.tests);
        assert!(r.tests.contains_key("folded_scheme_vs_bessel/ks"));
    }

    #[test]
    fn reports_are_deterministic_and_csv_is_stable() {
        let ps = ProcessSpec::dyson(2, 2, vec![1.0, -1.0]).unwrap();
        let a = run_slln("d", &ps, &[1.0, 4.0], 500, &ctx()).unwrap();
        let b = run_slln("d", &ps, &[1.0, 4.0], 500, &ctx()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
        let back: McReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        let csv = a.to_csv();
        assert!(csv.starts_with("experiment_id,kind,name,value,std_error,target,half_width,p_value,floor,ok\n"));
        assert!(csv.lines().all(|l| l.split(',').count() == 10));
        let other = run_slln("d", &ps, &[1.0, 4.0], 500, &RunContext { seed: 4, ..ctx() }).unwrap();
        assert_ne!(a.estimates, other.estimates);
    }

    #[test]
    fn exit_codes() {
        let ps = ProcessSpec::chi(1, 0.0).unwrap();
        let mut r = McReport::new("x", "k", &ps, "s", 1, vec![], 0);
        let with = |v: Verdict| {
            let mut c = r.clone();
            c.verdict = v;
            c
        };
        assert_eq!(exit_code(&[with(Verdict::Pass), with(Verdict::Pass)]), 0);
        assert_eq!(exit_code(&[with(Verdict::Pass), with(Verdict::Fail), with(Verdict::Inconclusive)]), 2);
        assert_eq!(exit_code(&[with(Verdict::Pass), with(Verdict::Inconclusive)]), 3);
        r.finalize(false);
        assert_eq!(r.verdict, Verdict::Pass);
    }

    #[test]
    fn presets_parse_and_round_trip() {
        for name in PRESET_NAMES {
            let list = preset(name).unwrap();
            assert!(!list.is_empty());
            for e in &list {
                let json = serde_json::to_string(e).unwrap();
                let back: NamedExperiment = serde_json::from_str(&json).unwrap();
                assert_eq!(&back, e);
            }
        }
        assert!(preset("nope").is_err());
        assert_eq!(preset("acceptance").unwrap().len(), 22);
    }
}
