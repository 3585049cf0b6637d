//! Multivariate kernels where they are computable: exact product kernels
//! on `Z_2^N`, Monte Carlo Haar averages for the geometric A/B cases, and
//! the modified moment functions `m₁`, `m₂`.

use crate::error::{Error, Result};
use crate::kernels1d::{bessel_local, dunkl_local, Rank1Local};
use crate::linalg::{haar_orthogonal, haar_unitary};
use crate::logvalue::LogValue;
use crate::rootsys::{dot, Multiplicity, RootKind, RootSystemSpec};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Minimum Monte Carlo sample count for Haar estimates.
pub const MIN_HAAR_SAMPLES: usize = 100;

/// Which kernel a process family is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelFamily {
    Dunkl,
    Bessel,
}

fn check_dims(spec: &RootSystemSpec, x: &[f64], l: &[f64]) -> Result<()> {
    for v in [x, l] {
        if v.len() != spec.rank() {
            return Err(Error::DimensionMismatch {
                expected: spec.rank(),
                got: v.len(),
            });
        }
    }
    Ok(())
}

fn is_product(spec: &RootSystemSpec) -> bool {
    matches!(spec.kind(), RootKind::Rank1 | RootKind::ProductZ2)
}

fn all_k_zero(spec: &RootSystemSpec) -> bool {
    spec.root_multiplicities().iter().all(|&k| k == 0.0)
}

/// `E_k(x, λ)` for product systems (`Π_i E_k(x_i, λ_i)`), and `e^{⟨x,λ⟩}`
/// for any system at `k = 0`.
pub fn dunkl_e_nd(spec: &RootSystemSpec, x: &[f64], l: &[f64]) -> Result<LogValue> {
    check_dims(spec, x, l)?;
    if all_k_zero(spec) {
        return Ok(LogValue::from_log(dot(x, l)));
    }
    if !is_product(spec) {
        return Err(Error::Unsupported(format!(
            "no Dunkl kernel formula for type {} with k > 0",
            spec.kind()
        )));
    }
    let k = spec.k_scalar();
    let mut s = 0.0;
    for (xi, li) in x.iter().zip(l) {
        s += dunkl_local(k, xi * li)?.log_e;
    }
    Ok(LogValue::from_log(s))
}

/// `J_k(x, λ) = |W|^{-1} Σ_{g∈W} E_k(x, gλ)`, summed over the group.
/// Exact for product systems and for `k = 0`.
pub fn bessel_j_nd(spec: &RootSystemSpec, x: &[f64], l: &[f64]) -> Result<LogValue> {
    check_dims(spec, x, l)?;
    if !(is_product(spec) || all_k_zero(spec)) {
        return Err(Error::Unsupported(format!(
            "no exact Bessel function for type {} with k > 0; use haar_bessel_estimate for geometric cases",
            spec.kind()
        )));
    }
    let order = spec.weyl_order() as f64;
    let mut terms = Vec::new();
    for g in spec.weyl_group()? {
        terms.push(dunkl_e_nd(spec, x, &g.apply(l))?);
    }
    Ok(LogValue::sum(terms) * LogValue::from_f64(1.0 / order))
}

/// `Π_i J_k(x_i, λ_i)` for product systems: the factorized form of
/// [`bessel_j_nd`], linear in `N` instead of `2^N`.
pub fn bessel_j_product(spec: &RootSystemSpec, x: &[f64], l: &[f64]) -> Result<LogValue> {
    check_dims(spec, x, l)?;
    if !is_product(spec) {
        return Err(Error::Unsupported(format!(
            "factorized Bessel function needs a product system, got {}",
            spec.kind()
        )));
    }
    let k = spec.k_scalar();
    let mut s = 0.0;
    for (xi, li) in x.iter().zip(l) {
        s += bessel_local(k, xi * li)?.log_e;
    }
    Ok(LogValue::from_log(s))
}

/// Matrix models whose orbit projections realize geometric multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GeometricCase {
    /// Hermitian `N × N` matrices over ℝ (`d = 1`) or ℂ (`d = 2`); `k = d/2`.
    A { n: usize, d: u8 },
    /// `M × N` matrices, `M ≥ N`; `k₂ = d/2`, `k₁ = (M-N+1)d/2 - 1/2`.
    B { m: usize, n: usize, d: u8 },
}

impl GeometricCase {
    fn validate(&self) -> Result<()> {
        let (d, ok) = match *self {
            GeometricCase::A { n, d } => (d, n >= 1),
            GeometricCase::B { m, n, d } => (d, n >= 1 && m >= n),
        };
        if !(d == 1 || d == 2) || !ok {
            return Err(Error::InvalidArgument(format!("invalid geometric case {self:?}")));
        }
        Ok(())
    }

    pub fn rank(&self) -> usize {
        match *self {
            GeometricCase::A { n, .. } | GeometricCase::B { n, .. } => n,
        }
    }

    /// Root system and multiplicity realized by this matrix model.
    pub fn root_system(&self) -> Result<RootSystemSpec> {
        self.validate()?;
        match *self {
            GeometricCase::A { n, d } => {
                if n == 1 {
                    return Err(Error::Unsupported("type A needs N >= 2".into()));
                }
                RootSystemSpec::new(RootKind::A, n, Multiplicity::Single(f64::from(d) / 2.0))
            }
            GeometricCase::B { m, n, d } => {
                let df = f64::from(d);
                let k1 = (m - n + 1) as f64 * df / 2.0 - 0.5;
                RootSystemSpec::new(RootKind::B, n, Multiplicity::Pair([k1, df / 2.0]))
            }
        }
    }

    /// Inverse of [`root_system`](Self::root_system) for geometric
    /// multiplicities; `None` otherwise.
    pub fn from_spec(spec: &RootSystemSpec) -> Option<Self> {
        let d_of = |k: f64| {
            if k == 0.5 {
                Some(1u8)
            } else if k == 1.0 {
                Some(2u8)
            } else {
                None
            }
        };
        match (spec.kind(), spec.multiplicity()) {
            (RootKind::A, Multiplicity::Single(k)) => Some(GeometricCase::A {
                n: spec.rank(),
                d: d_of(k)?,
            }),
            (RootKind::B, Multiplicity::Pair([k1, k2])) => {
                let n = spec.rank();
                // at N = 1 there are no k₂ roots, so k₂ may carry any value
                let d = d_of(k2).or(if n == 1 { Some(1) } else { None })?;
                let steps = (2.0 * k1 + 1.0) / f64::from(d);
                if steps.fract() != 0.0 || steps < 1.0 {
                    return None;
                }
                Some(GeometricCase::B {
                    m: steps as usize + n - 1,
                    n,
                    d,
                })
            }
            _ => None,
        }
    }
}

/// Monte Carlo estimate carried in log scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HaarEstimate {
    pub value: LogValue,
    /// Standard error of `log value` (delta method: `sd / (mean √n)`).
    pub std_error: f64,
    pub samples: usize,
}

/// `J_k(x, λ)` at a geometric multiplicity as a Haar average of the
/// exponential over the group orbit:
///
/// * A: `exp(Σ_{ij} λ_i |U_ij|² x_j)`, `U` Haar in `O(N)` / `U(N)`;
/// * B: `exp(Re Σ_{i,j≤N} x_j conj(U_ji) λ_i V_ji)`, `U` Haar in `M × M`,
///   `V` in `N × N`.
pub fn haar_bessel_estimate<R: Rng + ?Sized>(
    case: GeometricCase,
    x: &[f64],
    l: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<HaarEstimate> {
    case.validate()?;
    if samples < MIN_HAAR_SAMPLES {
        return Err(Error::InsufficientSamples {
            min: MIN_HAAR_SAMPLES,
            got: samples,
        });
    }
    let n = case.rank();
    if x.len() != n || l.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if x.len() != n { x.len() } else { l.len() },
        });
    }
    let mut logs = Vec::with_capacity(samples);
    for _ in 0..samples {
        let e = match case {
            GeometricCase::A { d, .. } => {
                let w: Vec<f64> = if d == 1 {
                    haar_orthogonal(n, rng).iter().map(|v| v * v).collect()
                } else {
                    haar_unitary(n, rng).iter().map(|v| v.norm_sqr()).collect()
                };
                (0..n)
                    .map(|i| l[i] * (0..n).map(|j| w[i * n + j] * x[j]).sum::<f64>())
                    .sum::<f64>()
            }
            GeometricCase::B { m, d, .. } => {
                let (u, v): (Vec<Complex64>, Vec<Complex64>) = if d == 1 {
                    let re = |a: Vec<f64>| a.into_iter().map(|t| Complex64::new(t, 0.0)).collect();
                    (re(haar_orthogonal(m, rng)), re(haar_orthogonal(n, rng)))
                } else {
                    (haar_unitary(m, rng), haar_unitary(n, rng))
                };
                let mut s = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        s += l[i] * x[j] * (u[j * m + i].conj() * v[j * n + i]).re;
                    }
                }
                s
            }
        };
        logs.push(e);
    }
    Ok(log_mean_estimate(&logs))
}

/// Mean of `exp(logs)` with the delta-method standard error of its log.
pub fn log_mean_estimate(logs: &[f64]) -> HaarEstimate {
    let n = logs.len();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|v| (v - max).exp()).collect();
    let mean = w.iter().sum::<f64>() / n as f64;
    let var = w.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0).max(1.0);
    HaarEstimate {
        value: LogValue::from_log(max + mean.ln()),
        std_error: (var / n as f64).sqrt() / mean,
        samples: n,
    }
}

/// Modified moment functions at one point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentPair {
    pub m1: Vec<f64>,
    pub m2_diag: Vec<f64>,
    /// Row-major `N × N`; present for product systems.
    pub m2_full: Option<Vec<f64>>,
}

fn local(family: KernelFamily, k: f64, u: f64) -> Result<Rank1Local> {
    match family {
        KernelFamily::Dunkl => dunkl_local(k, u),
        KernelFamily::Bessel => bessel_local(k, u),
    }
}

/// `m₁ = ∇_λ log F(x, λ)` and `m₂ = H_λ F / F` with `F = E_k` or `J_k`.
pub fn moments(spec: &RootSystemSpec, family: KernelFamily, l: &[f64], x: &[f64]) -> Result<MomentPair> {
    check_dims(spec, x, l)?;
    if !is_product(spec) {
        return Err(Error::Unsupported(format!(
            "moment functions need a product system, got {}",
            spec.kind()
        )));
    }
    let k = spec.k_scalar();
    let n = spec.rank();
    let mut m1 = Vec::with_capacity(n);
    let mut m2_diag = Vec::with_capacity(n);
    for (xi, li) in x.iter().zip(l) {
        let loc = local(family, k, xi * li)?;
        m1.push(xi * loc.dlog);
        m2_diag.push(xi * xi * loc.d2_ratio);
    }
    let mut full = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            full[i * n + j] = if i == j { m2_diag[i] } else { m1[i] * m1[j] };
        }
    }
    Ok(MomentPair {
        m1,
        m2_diag,
        m2_full: Some(full),
    })
}

/// `‖m₁(tx) - p(tx)‖ / t` for each `t`, where `p` maps coordinate `i` to
/// `sign(λ_i)|x_i|` (the chamber of `λ`).
pub fn m1_limit_check(spec: &RootSystemSpec, l: &[f64], x: &[f64], ts: &[f64]) -> Result<Vec<f64>> {
    check_dims(spec, x, l)?;
    if let Some(i) = l.iter().position(|&v| v == 0.0) {
        return Err(Error::BoundaryContact { root: i });
    }
    ts.iter()
        .map(|&t| {
            let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
            let m = moments(spec, KernelFamily::Dunkl, l, &tx)?;
            let gap: f64 = m
                .m1
                .iter()
                .zip(&tx)
                .zip(l)
                .map(|((mi, xi), li)| (mi - li.signum() * xi.abs()).powi(2))
                .sum::<f64>()
                .sqrt();
            Ok(gap / t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels1d::{dunkl_e_1d, sph_bessel_imag};
    use crate::rng::stream;
    use proptest::prelude::*;

    fn e1(x: f64) -> f64 {
        x.exp() / x - x.sinh() / (x * x)
    }

    #[test]
    fn product_kernel_examples() {
        let s = RootSystemSpec::product_z2(2, 1.0).unwrap();
        assert_eq!(dunkl_e_nd(&s, &[0.0, 0.0], &[1.0, 3.0]).unwrap(), LogValue::ONE);
        let v = dunkl_e_nd(&s, &[1.0, 2.0], &[1.0, 1.0]).unwrap().to_f64();
        assert!((v - e1(1.0) * e1(2.0)).abs() < 1e-12 * v);
        let r = RootSystemSpec::rank1(0.7).unwrap();
        assert_eq!(
            dunkl_e_nd(&r, &[1.3], &[0.4]).unwrap(),
            dunkl_e_1d(0.7, 1.3, 0.4).unwrap()
        );
        let a = RootSystemSpec::new(RootKind::A, 2, Multiplicity::Single(1.0)).unwrap();
        assert!(matches!(dunkl_e_nd(&a, &[1.0, 0.0], &[1.0, 0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn bessel_nd_examples() {
        let s = RootSystemSpec::product_z2(2, 1.0).unwrap();
        assert!(bessel_j_nd(&s, &[1.0, 2.0], &[0.0, 0.0]).unwrap().rel_diff(&LogValue::ONE) < 1e-15);
        let v = bessel_j_nd(&s, &[1.0, 2.0], &[1.0, 1.0]).unwrap().to_f64();
        let expect = 1f64.sinh() * 2f64.sinh() / 2.0;
        assert!((v - expect).abs() < 1e-12 * expect);
        let r = RootSystemSpec::rank1(1.0).unwrap();
        let v = bessel_j_nd(&r, &[2.5], &[1.0]).unwrap().to_f64();
        assert!((v - 2.5f64.sinh() / 2.5).abs() < 1e-12 * v);
    }

    #[test]
    fn k_zero_bessel_is_orbit_average_of_exponentials() {
        let a = RootSystemSpec::new(RootKind::A, 2, Multiplicity::Single(0.0)).unwrap();
        let v = bessel_j_nd(&a, &[1.0, -1.0], &[0.5, 0.2]).unwrap().to_f64();
        let expect = 0.5 * ((0.5f64 - 0.2).exp() + (0.2f64 - 0.5).exp());
        assert!((v - expect).abs() < 1e-14);
    }

    /// Exact `J^{A₁}`: split off the diagonal direction and apply the
    /// rank-one Bessel function to the coordinate along `(1,-1)/√2`.
    fn a1_exact(k: f64, x: [f64; 2], l: [f64; 2]) -> LogValue {
        let sx = (x[0] - x[1]) / 2f64.sqrt();
        let sl = (l[0] - l[1]) / 2f64.sqrt();
        LogValue::from_log((x[0] + x[1]) * (l[0] + l[1]) / 2.0) * sph_bessel_imag(k - 0.5, sx * sl).unwrap()
    }

    #[test]
    fn haar_estimates_match_exact_cases() {
        let mut rng = stream(11, "haar-test", 0);
        let z = haar_bessel_estimate(GeometricCase::A { n: 3, d: 2 }, &[1.0, 0.0, -1.0], &[0.0; 3], 200, &mut rng).unwrap();
        assert!(z.value.rel_diff(&LogValue::ONE) < 1e-15 && z.std_error < 1e-15);
        let one = haar_bessel_estimate(GeometricCase::A { n: 1, d: 2 }, &[1.5], &[2.0], 100, &mut rng).unwrap();
        assert!((one.value.ln() - 3.0).abs() < 1e-14);

        let est = haar_bessel_estimate(GeometricCase::A { n: 2, d: 2 }, &[1.0, -1.0], &[1.0, -1.0], 20_000, &mut rng).unwrap();
        let exact = a1_exact(1.0, [1.0, -1.0], [1.0, -1.0]);
        assert!((exact.to_f64() - 2f64.sinh() / 2.0).abs() < 1e-14);
        assert!((est.value.ln() - exact.ln()).abs() < 3.0 * est.std_error, "{} vs {}", est.value, exact);

        let est = haar_bessel_estimate(GeometricCase::A { n: 2, d: 1 }, &[2.0, 0.5], &[0.3, -0.4], 20_000, &mut rng).unwrap();
        let exact = a1_exact(0.5, [2.0, 0.5], [0.3, -0.4]);
        assert!((est.value.ln() - exact.ln()).abs() < 3.0 * est.std_error);
    }

    #[test]
    fn haar_b_case_reduces_to_rank_one_at_n1() {
        let mut rng = stream(12, "haar-test", 0);
        for (m, d) in [(3usize, 1u8), (2, 2), (4, 2)] {
            let case = GeometricCase::B { m, n: 1, d };
            let spec = case.root_system().unwrap();
            let k1 = spec.k_scalar();
            let est = haar_bessel_estimate(case, &[1.7], &[1.1], 20_000, &mut rng).unwrap();
            let exact = sph_bessel_imag(k1 - 0.5, 1.7 * 1.1).unwrap();
            assert!((est.value.ln() - exact.ln()).abs() < 3.0 * est.std_error, "M={m} d={d}");
            assert_eq!(GeometricCase::from_spec(&spec), Some(case));
        }
    }

    #[test]
    fn haar_b_case_is_w_invariant_in_lambda() {
        // J^B(x, gλ) = J^B(x, λ) for signed permutations g
        let case = GeometricCase::B { m: 3, n: 2, d: 2 };
        let x = [1.2, 0.4];
        let mut rng = stream(13, "haar-test", 0);
        let a = haar_bessel_estimate(case, &x, &[0.9, 0.3], 20_000, &mut rng).unwrap();
        let b = haar_bessel_estimate(case, &x, &[-0.3, 0.9], 20_000, &mut rng).unwrap();
        let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
        assert!((a.value.ln() - b.value.ln()).abs() < 3.5 * se);
    }

    #[test]
    fn haar_rejects_small_samples() {
        let mut rng = stream(0, "haar-test", 0);
        assert!(matches!(
            haar_bessel_estimate(GeometricCase::A { n: 2, d: 1 }, &[1.0, 0.0], &[1.0, 0.0], 10, &mut rng),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn haar_std_error_scales_with_samples() {
        let case = GeometricCase::A { n: 3, d: 1 };
        let x = [1.0, 0.2, -0.7];
        let l = [0.8, 0.1, -0.5];
        let mut ratios = Vec::new();
        for rep in 0..10 {
            let mut rng = stream(14, "haar-scale", rep);
            let a = haar_bessel_estimate(case, &x, &l, 2000, &mut rng).unwrap();
            let b = haar_bessel_estimate(case, &x, &l, 4000, &mut rng).unwrap();
            ratios.push(b.std_error / a.std_error);
        }
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        assert!((mean - 0.5f64.sqrt()).abs() < 0.2 * 0.5f64.sqrt(), "{mean}");
    }

    #[test]
    fn moment_examples() {
        let r = RootSystemSpec::rank1(1.0).unwrap();
        let m = moments(&r, KernelFamily::Dunkl, &[1.0], &[0.0]).unwrap();
        assert_eq!((m.m1[0], m.m2_diag[0]), (0.0, 0.0));
        for &x in &[0.3f64, 1.0, 4.0] {
            let m = moments(&r, KernelFamily::Bessel, &[1.0], &[x]).unwrap();
            let expect = (x * x.cosh() - x.sinh()) / x.sinh();
            assert!((m.m1[0] - expect).abs() < 1e-12);
        }
        let r0 = RootSystemSpec::rank1(0.0).unwrap();
        let m = moments(&r0, KernelFamily::Dunkl, &[0.7], &[-2.0]).unwrap();
        assert_eq!((m.m1[0], m.m2_diag[0]), (-2.0, 4.0));
        let p = RootSystemSpec::product_z2(2, 1.0).unwrap();
        let m = moments(&p, KernelFamily::Dunkl, &[1.0, 2.0], &[0.5, -1.0]).unwrap();
        let full = m.m2_full.unwrap();
        assert_eq!(full[1], m.m1[0] * m.m1[1]);
    }

    #[test]
    fn m1_limit_examples() {
        let r = RootSystemSpec::rank1(1.0).unwrap();
        let gaps = m1_limit_check(&r, &[1.0], &[1.0], &[5.0, 10.0, 50.0]).unwrap();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[2] < 0.1);
        let r0 = RootSystemSpec::rank1(0.0).unwrap();
        assert!(m1_limit_check(&r0, &[1.0], &[1.0], &[1.0, 7.0]).unwrap().iter().all(|&g| g == 0.0));
        assert!(matches!(m1_limit_check(&r, &[0.0], &[1.0], &[1.0]), Err(Error::BoundaryContact { .. })));
        // m₁(x)/|x| → sign(λ)
        let m = moments(&r, KernelFamily::Dunkl, &[1.0], &[-200.0]).unwrap();
        assert!((m.m1[0] / 200.0 - 1.0).abs() < 0.01);
        let p = RootSystemSpec::product_z2(2, 0.5).unwrap();
        let gaps = m1_limit_check(&p, &[1.0, -2.0], &[0.7, 0.4], &[2.0, 20.0, 200.0]).unwrap();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]) && gaps[2] < 0.05);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn product_bessel_is_weyl_invariant(k in 0.0f64..3.0, x in prop::collection::vec(-6.0f64..6.0, 3), l in prop::collection::vec(-2.0f64..2.0, 3)) {
            let s = RootSystemSpec::product_z2(3, k).unwrap();
            let j = bessel_j_nd(&s, &x, &l).unwrap();
            prop_assert!(j.rel_diff(&bessel_j_product(&s, &x, &l).unwrap()) < 1e-9);
            for g in s.weyl_group().unwrap() {
                prop_assert!(bessel_j_nd(&s, &g.apply(&x), &l).unwrap().rel_diff(&j) < 1e-9);
            }
        }

        #[test]
        fn moment_bounds_hold(k in 0.0f64..3.0, x in prop::collection::vec(-20.0f64..20.0, 2), l in prop::collection::vec(-3.0f64..3.0, 2), bessel in any::<bool>()) {
            let s = RootSystemSpec::product_z2(2, k).unwrap();
            let fam = if bessel { KernelFamily::Bessel } else { KernelFamily::Dunkl };
            let m = moments(&s, fam, &l, &x).unwrap();
            let xx: f64 = x.iter().map(|v| v * v).sum();
            let tol = 1e-10 * (1.0 + xx);
            for i in 0..2 {
                prop_assert!(m.m1[i].powi(2) <= m.m2_diag[i] + tol);
            }
            prop_assert!(m.m2_diag.iter().sum::<f64>() <= xx + tol);
            prop_assert!(m.m1.iter().map(|v| v * v).sum::<f64>().sqrt() <= xx.sqrt() + tol);
            let f = m.m2_full.unwrap();
            prop_assert!(f[1].abs() <= (f[0] * f[3]).sqrt() + tol);
        }

        #[test]
        fn m1_matches_finite_difference(k in 0.0f64..3.0, x in prop::collection::vec(-8.0f64..8.0, 2), l in prop::collection::vec(-2.0f64..2.0, 2), bessel in any::<bool>()) {
            let s = RootSystemSpec::product_z2(2, k).unwrap();
            let (fam, f): (KernelFamily, fn(&RootSystemSpec, &[f64], &[f64]) -> Result<LogValue>) =
                if bessel { (KernelFamily::Bessel, bessel_j_product) } else { (KernelFamily::Dunkl, dunkl_e_nd) };
            let m = moments(&s, fam, &l, &x).unwrap();
            let h = 1e-4;
            for i in 0..2 {
                let mut lp = l.clone();
                let mut lm = l.clone();
                lp[i] += h;
                lm[i] -= h;
                let fd = (f(&s, &x, &lp).unwrap().ln() - f(&s, &x, &lm).unwrap().ln()) / (2.0 * h);
                prop_assert!((fd - m.m1[i]).abs() < 1e-6 * (1.0 + m.m1[i].abs()));
            }
        }
    }
}
