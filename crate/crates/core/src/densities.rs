//! Transition densities of Bessel, Dunkl and hybrid processes with drift,
//! normalization and semigroup checks, and an exact rank-one sampler.

use crate::error::{Error, Result};
use crate::kernels1d::{bessel_local, dunkl_local};
use crate::kernels_nd::{bessel_j_nd, bessel_j_product, dunkl_e_nd};
use crate::logvalue::LogValue;
use crate::quad::{integrate_pieces, QuadConfig};
use crate::rootsys::{dot, RootKind, RootSystemSpec};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DensityFamily {
    BesselDrift,
    DunklDrift,
    HybridDrift,
}

/// A drifted process family on a root system, as far as its transition
/// density is concerned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub family: DensityFamily,
    pub spec: RootSystemSpec,
    pub lambda: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kernel {
    E,
    J,
}

impl DensitySpec {
    pub fn new(family: DensityFamily, spec: RootSystemSpec, lambda: Vec<f64>) -> Result<Self> {
        if lambda.len() != spec.rank() {
            return Err(Error::DimensionMismatch {
                expected: spec.rank(),
                got: lambda.len(),
            });
        }
        let k_zero = spec.root_multiplicities().iter().all(|&k| k == 0.0);
        if !(matches!(spec.kind(), RootKind::Rank1 | RootKind::ProductZ2) || k_zero) {
            return Err(Error::Unsupported(format!(
                "transition densities need an exact kernel; type {} with k > 0 has none",
                spec.kind()
            )));
        }
        if family == DensityFamily::BesselDrift && !spec.in_chamber(&lambda, 0.0) {
            return Err(Error::InvalidArgument(
                "the Bessel family needs its drift in the closed chamber".into(),
            ));
        }
        Ok(Self {
            family,
            spec,
            lambda,
        })
    }

    /// Rank-one shorthand.
    pub fn rank1(family: DensityFamily, k: f64, lambda: f64) -> Result<Self> {
        Self::new(family, RootSystemSpec::rank1(k)?, vec![lambda])
    }

    fn kernels(&self) -> (Kernel, Kernel) {
        match self.family {
            DensityFamily::BesselDrift => (Kernel::J, Kernel::J),
            DensityFamily::DunklDrift => (Kernel::E, Kernel::E),
            DensityFamily::HybridDrift => (Kernel::E, Kernel::J),
        }
    }

    pub fn on_chamber(&self) -> bool {
        self.family == DensityFamily::BesselDrift
    }

    fn log_kernel(&self, which: Kernel, x: &[f64], l: &[f64]) -> Result<f64> {
        let s = &self.spec;
        let product = matches!(s.kind(), RootKind::Rank1 | RootKind::ProductZ2);
        match which {
            Kernel::E => Ok(dunkl_e_nd(s, x, l)?.ln()),
            Kernel::J if product && s.rank() == 1 => Ok(bessel_local(s.k_scalar(), x[0] * l[0])?.log_e),
            Kernel::J if product => Ok(bessel_j_product(s, x, l)?.ln()),
            Kernel::J => Ok(bessel_j_nd(s, x, l)?.ln()),
        }
    }

    /// `log(prefactor)`: `|W| c_k` on the chamber, `c_k` on all of ℝ^N.
    fn log_prefactor(&self) -> Result<f64> {
        let c = self.spec.norm_constant_log()?;
        Ok(if self.on_chamber() {
            c + (self.spec.weyl_order() as f64).ln()
        } else {
            c
        })
    }
}

/// Transition density `p_t(x, y)` with respect to Lebesgue measure on the
/// state space (the chamber for the Bessel family, ℝ^N otherwise).
pub fn transition_density(ds: &DensitySpec, t: f64, x: &[f64], y: &[f64]) -> Result<LogValue> {
    DensityEvaluator::new(ds, t, x)?.log_density(y)
}

/// Density `y ↦ p_t(x, y)` with every `y`-independent factor precomputed.
#[derive(Debug, Clone)]
pub struct DensityEvaluator {
    ds: DensitySpec,
    t: f64,
    x: Vec<f64>,
    log_const: f64,
    y_over_t_kernel: Kernel,
    ratio_kernel: Kernel,
    fast_rank1: bool,
}

impl DensityEvaluator {
    pub fn new(ds: &DensitySpec, t: f64, x: &[f64]) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("t must be positive, got {t}")));
        }
        let n = ds.spec.rank();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if ds.on_chamber() && !ds.spec.in_chamber(x, 0.0) {
            return Err(Error::InvalidArgument("Bessel start point must lie in the chamber".into()));
        }
        let (kk, kr) = ds.kernels();
        let ll = dot(&ds.lambda, &ds.lambda);
        let a = ds.spec.gamma_exponent() + 0.5 * n as f64;
        let log_const = ds.log_prefactor()? - 0.5 * ll * t - a * t.ln() - dot(x, x) / (2.0 * t)
            - ds.log_kernel(kr, x, &ds.lambda)?;
        Ok(Self {
            ds: ds.clone(),
            t,
            x: x.to_vec(),
            log_const,
            y_over_t_kernel: kk,
            ratio_kernel: kr,
            fast_rank1: ds.spec.kind() == RootKind::Rank1,
        })
    }

    pub fn spec(&self) -> &DensitySpec {
        &self.ds
    }

    pub fn log_density(&self, y: &[f64]) -> Result<LogValue> {
        if y.len() != self.x.len() {
            return Err(Error::DimensionMismatch {
                expected: self.x.len(),
                got: y.len(),
            });
        }
        if self.ds.on_chamber() && !self.ds.spec.in_chamber(y, 0.0) {
            return Ok(LogValue::ZERO);
        }
        let lw = self.ds.spec.log_weight(y);
        if lw == f64::NEG_INFINITY {
            return Ok(LogValue::ZERO);
        }
        let t = self.t;
        let (kx, kr) = if self.fast_rank1 {
            let k = self.ds.spec.k_scalar();
            let eval = |which: Kernel, u: f64| match which {
                Kernel::E => dunkl_local(k, u).map(|v| v.log_e),
                Kernel::J => bessel_local(k, u).map(|v| v.log_e),
            };
            (
                eval(self.y_over_t_kernel, self.x[0] * y[0] / t)?,
                eval(self.ratio_kernel, y[0] * self.ds.lambda[0])?,
            )
        } else {
            let yt: Vec<f64> = y.iter().map(|v| v / t).collect();
            (
                self.ds.log_kernel(self.y_over_t_kernel, &self.x, &yt)?,
                self.ds.log_kernel(self.ratio_kernel, y, &self.ds.lambda)?,
            )
        };
        Ok(LogValue::from_log(
            self.log_const - dot(y, y) / (2.0 * t) + kx + kr + lw,
        ))
    }

    pub fn density(&self, y: &[f64]) -> Result<f64> {
        Ok(self.log_density(y)?.to_f64())
    }
}

/// Tolerances used by the normalization and semigroup checks.
pub fn check_quad_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 4000,
    }
}

/// Breakpoints for one coordinate: ends of the truncated domain, the
/// origin (where `w_k` has a cusp) and the likely modes.
fn breakpoints(lo: f64, hi: f64, centres: &[f64], t: f64) -> Vec<f64> {
    let mut b = vec![lo, hi];
    if lo < 0.0 && hi > 0.0 {
        b.push(0.0);
    }
    let s = t.sqrt();
    for &c in centres {
        for d in [-4.0 * s, 0.0, 4.0 * s] {
            let p = c + d;
            if p > lo && p < hi {
                b.push(p);
            }
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    b
}

fn coordinate_domain(ds: &DensitySpec, radius: f64, xi: f64, li: f64, t: f64) -> (Vec<f64>, f64, f64) {
    let lo = if ds.on_chamber() { 0.0 } else { -radius };
    let centres = [xi + t * li, -xi + t * li, xi - t * li, -xi - t * li];
    (breakpoints(lo, radius, &centres, t), lo, radius)
}

/// `∫ p_t(x, y) dy` over the state space (`N ≤ 2`, product systems for
/// `N = 2`), truncated at `|y_i| ≤ ‖x‖ + ‖λ‖t + 12√t`.
pub fn normalization_check(ds: &DensitySpec, t: f64, x: &[f64], cfg: &QuadConfig) -> Result<f64> {
    let ev = DensityEvaluator::new(ds, t, x)?;
    let n = ds.spec.rank();
    let radius = dot(x, x).sqrt() + dot(&ds.lambda, &ds.lambda).sqrt() * t + 12.0 * t.sqrt();
    match n {
        1 => {
            let (b, _, _) = coordinate_domain(ds, radius, x[0], ds.lambda[0], t);
            let mut err = None;
            let r = integrate_pieces(
                |y| ev.density(&[y]).unwrap_or_else(|e| {
                    err = Some(e);
                    f64::NAN
                }),
                &b,
                cfg,
            );
            if let Some(e) = err {
                return Err(e);
            }
            Ok(r?.value)
        }
        2 if ds.spec.kind() == RootKind::ProductZ2 => {
            let (b1, _, _) = coordinate_domain(ds, radius, x[0], ds.lambda[0], t);
            let (b2, _, _) = coordinate_domain(ds, radius, x[1], ds.lambda[1], t);
            let mut err = None;
            let r = integrate_pieces(
                |y1| match integrate_pieces(
                    |y2| ev.density(&[y1, y2]).unwrap_or(f64::NAN),
                    &b2,
                    cfg,
                ) {
                    Ok(v) => v.value,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                },
                &b1,
                cfg,
            );
            if let Some(e) = err {
                return Err(e);
            }
            Ok(r?.value)
        }
        _ => Err(Error::Unsupported(format!(
            "normalization quadrature supports rank 1 and ProductZ2 rank 2, got {} rank {n}",
            ds.spec.kind()
        ))),
    }
}

/// `|∫ p_s(x,y) p_t(y,z) dy - p_{s+t}(x,z)| / p_{s+t}(x,z)` in rank one.
pub fn chapman_kolmogorov_check(
    ds: &DensitySpec,
    s: f64,
    t: f64,
    x: f64,
    z: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    if ds.spec.rank() != 1 {
        return Err(Error::Unsupported("Chapman-Kolmogorov check is rank one only".into()));
    }
    let first = DensityEvaluator::new(ds, s, &[x])?;
    let direct = transition_density(ds, s + t, &[x], &[z])?.to_f64();
    let l = ds.lambda[0].abs();
    let radius = x.abs().max(z.abs()) + l * (s + t) + 12.0 * (s + t).sqrt();
    let lo = if ds.on_chamber() { 0.0 } else { -radius };
    let mut centres = vec![x, -x, z, -z];
    centres.extend([x + s * ds.lambda[0], -x + s * ds.lambda[0]]);
    let b = breakpoints(lo, radius, &centres, s.min(t));
    let mut err = None;
    let r = integrate_pieces(
        |y| {
            let v = first
                .density(&[y])
                .and_then(|p| Ok(p * transition_density(ds, t, &[y], &[z])?.to_f64()));
            v.unwrap_or_else(|e| {
                err = Some(e);
                f64::NAN
            })
        },
        &b,
        cfg,
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok((r?.value - direct).abs() / direct)
}

/// Floor on the rejection acceptance rate.
pub const MIN_ACCEPTANCE: f64 = 1e-3;
const ENVELOPE_SAFETY: f64 = 1.05;
const ENVELOPE_GRID: usize = 1500;

/// Exact draws from `p_t(x, ·)` in rank one by rejection.
///
/// The proposal is an equal-weight mixture of `N(μ, 2t)` over the centres
/// `μ ∈ {±x ± tλ}` (folded to `[0, ∞)` for the Bessel family). With the
/// variance inflated to `2t` the ratio `p/q` decays in both tails, and its
/// supremum is located numerically in log scale and padded by 5%.
#[derive(Debug, Clone)]
pub struct ExactSampler {
    ev: DensityEvaluator,
    centres: Vec<f64>,
    sd: f64,
    log_bound: f64,
    folded: bool,
    attempts: u64,
    accepted: u64,
}

impl ExactSampler {
    pub fn new(ds: &DensitySpec, t: f64, x: f64) -> Result<Self> {
        if ds.spec.rank() != 1 {
            return Err(Error::Unsupported("exact sampling is rank one only".into()));
        }
        let ev = DensityEvaluator::new(ds, t, &[x])?;
        let l = ds.lambda[0];
        let mut centres = vec![x + t * l, -x + t * l, x - t * l, -x - t * l];
        centres.sort_by(f64::total_cmp);
        centres.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let mut sampler = Self {
            ev,
            centres,
            sd: (2.0 * t).sqrt(),
            log_bound: 0.0,
            folded: ds.on_chamber(),
            attempts: 0,
            accepted: 0,
        };
        sampler.log_bound = sampler.find_bound(x.abs() + l.abs() * t + 12.0 * t.sqrt())? + ENVELOPE_SAFETY.ln();
        Ok(sampler)
    }

    fn log_proposal(&self, y: f64) -> f64 {
        let var = self.sd * self.sd;
        let m = self.centres.len() as f64;
        let dens = |y: f64| {
            self.centres
                .iter()
                .map(|c| (-(y - c).powi(2) / (2.0 * var)).exp())
                .sum::<f64>()
                / (m * (2.0 * PI * var).sqrt())
        };
        let q = if self.folded { dens(y) + dens(-y) } else { dens(y) };
        q.ln()
    }

    fn log_ratio(&self, y: f64) -> Result<f64> {
        Ok(self.ev.log_density(&[y])?.ln() - self.log_proposal(y))
    }

    fn find_bound(&self, radius: f64) -> Result<f64> {
        let lo = if self.folded { 0.0 } else { -radius };
        let h = (radius - lo) / ENVELOPE_GRID as f64;
        let mut best = (f64::NEG_INFINITY, lo);
        for i in 0..=ENVELOPE_GRID {
            let y = lo + h * i as f64;
            let r = self.log_ratio(y)?;
            if r > best.0 {
                best = (r, y);
            }
        }
        // refine around the grid maximum by golden-section search
        let (mut a, mut b) = ((best.1 - h).max(lo), (best.1 + h).min(radius));
        let g = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if self.log_ratio(c)? > self.log_ratio(d)? {
                b = d;
            } else {
                a = c;
            }
        }
        Ok(best.0.max(self.log_ratio(0.5 * (a + b))?))
    }

    pub fn sample<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        loop {
            self.attempts += 1;
            let c = self.centres[rng.random_range(0..self.centres.len())];
            let z: f64 = rng.sample(StandardNormal);
            let mut y = c + self.sd * z;
            if self.folded {
                y = y.abs();
            }
            let excess = self.log_ratio(y)? - self.log_bound;
            if excess > 0.0 {
                return Err(Error::EnvelopeViolation { y, excess });
            }
            let u: f64 = rng.random();
            if u.ln() < excess {
                self.accepted += 1;
                return Ok(y);
            }
            if self.attempts >= 10_000 && self.acceptance_rate() < MIN_ACCEPTANCE {
                return Err(Error::LowAcceptance {
                    rate: self.acceptance_rate(),
                    floor: MIN_ACCEPTANCE,
                });
            }
        }
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.attempts == 0 {
            1.0
        } else {
            self.accepted as f64 / self.attempts as f64
        }
    }

    /// `log M` of the envelope `p ≤ M q`.
    pub fn log_envelope(&self) -> f64 {
        self.log_bound
    }
}

/// One exact draw of `X_t` given `X_0 = x` in rank one.
pub fn sample_exact_1d<R: Rng + ?Sized>(ds: &DensitySpec, t: f64, x: f64, rng: &mut R) -> Result<f64> {
    ExactSampler::new(ds, t, x)?.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;

    fn rank1(f: DensityFamily, k: f64, l: f64) -> DensitySpec {
        DensitySpec::rank1(f, k, l).unwrap()
    }

    #[test]
    fn dunkl_k1_closed_form_from_origin() {
        let ds = rank1(DensityFamily::DunklDrift, 1.0, 1.0);
        for &t in &[0.5, 1.0, 3.0] {
            for &y in &[-4.0f64, -0.3, 0.2, 1.0, 5.0] {
                let got = transition_density(&ds, t, &[0.0], &[y]).unwrap().to_f64();
                let expect = (-t / 2.0).exp() / (t.powf(1.5) * (2.0 * PI).sqrt())
                    * (-y * y / (2.0 * t)).exp()
                    * (y * y.exp() - y.sinh());
                assert!((got - expect).abs() < 1e-12 * expect, "t={t} y={y}");
            }
        }
    }

    #[test]
    fn reflected_brownian_motion() {
        let ds = rank1(DensityFamily::BesselDrift, 0.0, 0.0);
        let (t, x) = (0.7, 0.4);
        for &y in &[0.0, 0.3, 2.0] {
            let got = transition_density(&ds, t, &[x], &[y]).unwrap().to_f64();
            let expect = 2.0 / (2.0 * PI * t).sqrt() * (-(x * x + y * y) / (2.0 * t)).exp() * (x * y / t).cosh();
            assert!((got - expect).abs() < 1e-13);
        }
        assert!(transition_density(&ds, t, &[x], &[-0.1]).unwrap().is_zero());
    }

    #[test]
    fn rejects_bad_inputs() {
        let ds = rank1(DensityFamily::DunklDrift, 1.0, 1.0);
        assert!(transition_density(&ds, 0.0, &[0.0], &[1.0]).is_err());
        assert!(DensitySpec::rank1(DensityFamily::BesselDrift, 1.0, -1.0).is_err());
        let a = RootSystemSpec::new(RootKind::A, 2, crate::rootsys::Multiplicity::Single(1.0)).unwrap();
        assert!(matches!(
            DensitySpec::new(DensityFamily::DunklDrift, a, vec![1.0, 0.0]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn normalization_rank_one() {
        let cfg = check_quad_config();
        let cases = [
            (DensityFamily::BesselDrift, 1.0, 1.0, 1.0, 1.0),
            (DensityFamily::DunklDrift, 1.0, 1.0, 0.5, 2.0),
            (DensityFamily::HybridDrift, 0.5, 2.0, 1.0, -1.0),
            (DensityFamily::BesselDrift, 0.0, 0.0, 1.0, 0.3),
        ];
        for (f, k, l, t, x) in cases {
            let v = normalization_check(&rank1(f, k, l), t, &[x], &cfg).unwrap();
            assert!((v - 1.0).abs() < 1e-8, "{f:?} k={k}: {v}");
        }
    }

    #[test]
    fn normalization_product_two() {
        let cfg = QuadConfig {
            abs_tol: 1e-11,
            rel_tol: 1e-9,
            max_intervals: 2000,
        };
        for f in [DensityFamily::DunklDrift, DensityFamily::BesselDrift, DensityFamily::HybridDrift] {
            let ds = DensitySpec::new(f, RootSystemSpec::product_z2(2, 1.0).unwrap(), vec![1.0, 0.5]).unwrap();
            let v = normalization_check(&ds, 1.0, &[0.5, 1.0], &cfg).unwrap();
            assert!((v - 1.0).abs() < 1e-6, "{f:?}: {v}");
        }
    }

    #[test]
    fn chapman_kolmogorov_examples() {
        let cfg = check_quad_config();
        let b = rank1(DensityFamily::BesselDrift, 1.0, 1.0);
        assert!(chapman_kolmogorov_check(&b, 0.5, 0.5, 1.0, 2.0, &cfg).unwrap() < 1e-6);
        let g = rank1(DensityFamily::DunklDrift, 0.0, 0.0);
        assert!(chapman_kolmogorov_check(&g, 0.3, 0.9, 0.5, -1.0, &cfg).unwrap() < 1e-9);
        let d = rank1(DensityFamily::DunklDrift, 1.0, 1.0);
        assert!(chapman_kolmogorov_check(&d, 0.5, 0.5, -1.0, 1.0, &cfg).unwrap() < 1e-6);
    }

    #[test]
    fn hybrid_folds_onto_bessel() {
        for &k in &[0.3, 1.0, 2.0] {
            let h = rank1(DensityFamily::HybridDrift, k, 1.3);
            let b = rank1(DensityFamily::BesselDrift, k, 1.3);
            for &(x, y) in &[(0.5, 0.7), (-1.2, 2.0), (2.0, -0.4)] {
                let fold = transition_density(&h, 0.8, &[x], &[y]).unwrap()
                    + transition_density(&h, 0.8, &[x], &[-y]).unwrap();
                let bes = transition_density(&b, 0.8, &[f64::abs(x)], &[f64::abs(y)]).unwrap();
                assert!(fold.rel_diff(&bes) < 1e-9, "k={k} x={x} y={y}");
            }
        }
    }

    #[test]
    fn dunkl_orbit_sum_is_bessel_on_product() {
        // Σ_{g} p^{Dunkl}(x, g y) with E→J in the ratio equals p^{Bessel}
        let spec = RootSystemSpec::product_z2(2, 0.7).unwrap();
        let h = DensitySpec::new(DensityFamily::HybridDrift, spec.clone(), vec![0.4, 1.1]).unwrap();
        let b = DensitySpec::new(DensityFamily::BesselDrift, spec.clone(), vec![0.4, 1.1]).unwrap();
        let x = [0.6, -0.9];
        let y = [1.3, 0.2];
        let orbit = LogValue::sum(
            spec.weyl_group()
                .unwrap()
                .map(|g| transition_density(&h, 0.6, &x, &g.apply(&y)).unwrap()),
        );
        let px = spec.chamber_project(&x).unwrap();
        let bes = transition_density(&b, 0.6, &px, &y).unwrap();
        assert!(orbit.rel_diff(&bes) < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn drift_is_a_conjugation(k in 0.0f64..2.5, l in -2.0f64..2.0, t in 0.1f64..3.0, x in -4.0f64..4.0, y in -4.0f64..4.0, fam in 0usize..3) {
            let (f, g): (DensityFamily, fn(f64, f64) -> f64) = match fam {
                0 => (DensityFamily::DunklDrift, |k, u| dunkl_local(k, u).unwrap().log_e),
                1 => (DensityFamily::HybridDrift, |k, u| bessel_local(k, u).unwrap().log_e),
                _ => (DensityFamily::BesselDrift, |k, u| bessel_local(k, u).unwrap().log_e),
            };
            let (l, x, y) = if f == DensityFamily::BesselDrift { (l.abs(), x.abs(), y.abs()) } else { (l, x, y) };
            prop_assume!(y != 0.0);
            let with = transition_density(&rank1(f, k, l), t, &[x], &[y]).unwrap();
            let without = transition_density(&rank1(f, k, 0.0), t, &[x], &[y]).unwrap();
            let expect = -l * l * t / 2.0 + g(k, y * l) - g(k, x * l);
            prop_assert!(((with / without).ln() - expect).abs() < 1e-12 * (1.0 + expect.abs()));
            prop_assert!(with.is_positive());
        }
    }

    #[test]
    fn sampler_k0_is_gaussian() {
        let ds = rank1(DensityFamily::DunklDrift, 0.0, 0.8);
        let mut s = ExactSampler::new(&ds, 1.5, 0.3).unwrap();
        let mut rng = stream(11, "sampler-test", 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - (0.3 + 1.5 * 0.8)).abs() < 4.0 * (1.5f64 / n as f64).sqrt(), "mean {mean} var {var}");
        assert!((var - 1.5).abs() < 0.03);
        assert!(s.acceptance_rate() > 0.1);
    }

    #[test]
    fn sampler_dunkl_mean_is_t_lambda() {
        let ds = rank1(DensityFamily::DunklDrift, 1.0, 1.0);
        let mut s = ExactSampler::new(&ds, 1.0, 0.0).unwrap();
        let mut rng = stream(6, "sampler-test", 0);
        let n = 20_000;
        let xs: Vec<f64> = (0..n).map(|_| s.sample(&mut rng).unwrap()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn sampler_handles_far_starts_and_long_times() {
        let mut rng = stream(7, "sampler-test", 0);
        for (f, k, l, t, x) in [
            (DensityFamily::DunklDrift, 1.0, 1.0, 160.0, 0.0),
            (DensityFamily::BesselDrift, 0.5, 1.0, 100.0, 0.0),
            (DensityFamily::DunklDrift, 2.0, 1.0, 0.2, -3.0),
            (DensityFamily::HybridDrift, 1.0, 0.5, 0.05, 0.3),
        ] {
            let mut s = ExactSampler::new(&rank1(f, k, l), t, x).unwrap();
            for _ in 0..500 {
                s.sample(&mut rng).unwrap();
            }
            assert!(s.acceptance_rate() > 0.05, "{f:?} rate {}", s.acceptance_rate());
        }
    }
}
