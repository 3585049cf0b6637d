//! Statistics used by the experiment harness: empirical CDFs,
//! Kolmogorov–Smirnov tests, normal-approximation intervals and binned χ²
//! goodness of fit.

use crate::error::{Error, Result};
use crate::quad::gk15;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// A test statistic with its p-value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Sample mean with its standard error and a normal-approximation interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanEstimate {
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Self {
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        Self { sorted }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Kolmogorov survival function `Q(λ) = 2 Σ_{j≥1} (−1)^{j−1} e^{−2j²λ²}`,
/// switching to the Jacobi-theta form for small `λ` where the alternating
/// series converges slowly.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // 1 − Q(λ) = √(2π)/λ Σ_{j≥1} e^{−(2j−1)²π²/(8λ²)}
        let w = std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let s: f64 = (1..=8)
            .map(|j| (-((2 * j - 1) as f64).powi(2) * w).exp())
            .sum();
        return (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0);
    }
    let mut s = 0.0;
    for j in 1..=100 {
        let term = (-2.0 * (j * j) as f64 * lambda * lambda).exp();
        s += if j % 2 == 1 { term } else { -term };
        if term < 1e-18 {
            break;
        }
    }
    (2.0 * s).clamp(0.0, 1.0)
}

/// One-sample two-sided KS test against a continuous CDF.
pub fn ks_test<F: FnMut(f64) -> f64>(samples: &[f64], mut cdf: F) -> Result<TestResult> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { min: 1, got: 0 });
    }
    let e = Ecdf::new(samples);
    let n = samples.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in e.sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
    })
}

/// Two-sample two-sided KS test.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<TestResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InsufficientSamples { min: 1, got: 0 });
    }
    let (ea, eb) = (Ecdf::new(a), Ecdf::new(b));
    let (sa, sb) = (ea.sorted(), eb.sorted());
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
    while i < sa.len() && j < sb.len() {
        let x = sa[i].min(sb[j]);
        while i < sa.len() && sa[i] <= x {
            i += 1;
        }
        while j < sb.len() && sb[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let ne = na * nb / (na + nb);
    Ok(TestResult {
        statistic: d,
        p_value: kolmogorov_survival(ne.sqrt() * d),
    })
}

pub fn standard_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

/// Sample mean, unbiased variance, standard error and a two-sided interval
/// at `level` (e.g. 0.95).
pub fn mean_ci(samples: &[f64], level: f64) -> Result<MeanEstimate> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            min: 2,
            got: samples.len(),
        });
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std_error = (variance / n).sqrt();
    let z = Normal::standard().inverse_cdf(0.5 + 0.5 * level);
    Ok(MeanEstimate {
        mean,
        variance,
        std_error,
        lo: mean - z * std_error,
        hi: mean + z * std_error,
    })
}

/// Pearson χ² with `bins − 1 − fitted` degrees of freedom.
pub fn chi_square_test(observed: &[f64], expected: &[f64], fitted: usize) -> Result<TestResult> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            got: observed.len(),
        });
    }
    if observed.len() < fitted + 2 {
        return Err(Error::InvalidArgument("too few bins for a χ² test".into()));
    }
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(o, e)| (o - e).powi(2) / e)
        .sum();
    let dof = (observed.len() - 1 - fitted) as f64;
    let dist = ChiSquared::new(dof).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(TestResult {
        statistic: stat,
        p_value: dist.sf(stat),
    })
}

/// Binned χ² goodness of fit of `samples` against a CDF, using `bins`
/// cells that are equiprobable under the reference law.
pub fn chi_square_gof<F: FnMut(f64) -> f64>(samples: &[f64], cdf: F, bins: usize, lo: f64, hi: f64) -> Result<TestResult> {
    let (edges, probs) = equiprobable_edges(cdf, bins, lo, hi);
    let mut observed = vec![0.0; edges.len() + 1];
    for &x in samples {
        observed[edges.partition_point(|&e| e <= x)] += 1.0;
    }
    let n = samples.len() as f64;
    let expected: Vec<f64> = probs.iter().map(|p| p * n).collect();
    chi_square_test(&observed, &expected, 0)
}

/// Interior edges splitting `[lo, hi]` into cells of equal probability
/// under `cdf` (found by bisection) and the realized cell probabilities,
/// with the tails beyond `lo`/`hi` folded into the outer cells.
fn equiprobable_edges<F: FnMut(f64) -> f64>(mut cdf: F, bins: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    let mut edges = Vec::with_capacity(bins - 1);
    for b in 1..bins {
        let target = b as f64 / bins as f64;
        let (mut a, mut c) = (lo, hi);
        for _ in 0..80 {
            let m = 0.5 * (a + c);
            if cdf(m) < target {
                a = m;
            } else {
                c = m;
            }
        }
        edges.push(0.5 * (a + c));
    }
    let mut probs = Vec::with_capacity(bins);
    let mut prev = 0.0;
    for &e in &edges {
        let f = cdf(e);
        probs.push(f - prev);
        prev = f;
    }
    probs.push(1.0 - prev);
    (edges, probs)
}

/// CDF of a density on `[lo, hi]`, tabulated by Gauss–Kronrod on a uniform
/// grid and completed inside a cell by one more panel.
#[derive(Debug, Clone)]
pub struct TabulatedCdf<F> {
    density: F,
    lo: f64,
    h: f64,
    cumulative: Vec<f64>,
}

impl<F: Fn(f64) -> f64> TabulatedCdf<F> {
    /// `mass_below_lo` is the probability to the left of `lo` (0 when `lo`
    /// bounds the support).
    pub fn new(density: F, lo: f64, hi: f64, cells: usize, mass_below_lo: f64) -> Self {
        let h = (hi - lo) / cells as f64;
        let mut cumulative = Vec::with_capacity(cells + 1);
        let mut acc = mass_below_lo;
        cumulative.push(acc);
        let mut f = |x: f64| density(x);
        for i in 0..cells {
            let a = lo + h * i as f64;
            acc += gk15(&mut f, a, a + h).0;
            cumulative.push(acc);
        }
        Self {
            density,
            lo,
            h,
            cumulative,
        }
    }

    /// Total mass captured, which should be 1 up to truncation.
    pub fn total(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let cells = self.cumulative.len() - 1;
        if x <= self.lo {
            return self.cumulative[0];
        }
        let pos = (x - self.lo) / self.h;
        if pos >= cells as f64 {
            return self.total();
        }
        let i = pos as usize;
        let a = self.lo + self.h * i as f64;
        let mut f = |y: f64| (self.density)(y);
        self.cumulative[i] + gk15(&mut f, a, x).0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn kolmogorov_survival_reference_values() {
        // classical critical values: Q(1.3581) = 0.05, Q(1.6276) = 0.01
        assert!((kolmogorov_survival(1.358_098_6) - 0.05).abs() < 1e-6);
        assert!((kolmogorov_survival(1.627_624_1) - 0.01).abs() < 1e-6);
        assert!((kolmogorov_survival(0.5) - 0.963_945_2).abs() < 1e-6);
        // both branches agree at the switch point
        let lam = 1.18f64;
        let alt: f64 = 2.0 * (1..50).map(|j| {
            let t = (-2.0 * (j * j) as f64 * lam * lam).exp();
            if j % 2 == 1 { t } else { -t }
        }).sum::<f64>();
        assert!((kolmogorov_survival(lam - 1e-12) - alt).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn ks_p_value_is_monotone(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(kolmogorov_survival(hi) <= kolmogorov_survival(lo) + 1e-15);
        }
    }

    #[test]
    fn ks_p_values_are_uniform_under_the_null() {
        let mut ps = Vec::new();
        for seed in 0..100 {
            let mut rng = stream(seed, "ks-null", 0);
            let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
            ps.push(ks_test(&xs, standard_normal_cdf).unwrap().p_value);
        }
        let mut counts = vec![0.0; 10];
        for p in ps {
            counts[((p * 10.0) as usize).min(9)] += 1.0;
        }
        let r = chi_square_test(&counts, &[10.0; 10], 0).unwrap();
        assert!(r.p_value > 0.01, "{counts:?}");
    }

    #[test]
    fn ks_detects_a_shift() {
        let mut rng = stream(1, "ks-alt", 0);
        let xs: Vec<f64> = (0..10_000).map(|_| 0.1 + rng.sample::<f64, _>(StandardNormal)).collect();
        assert!(ks_test(&xs, standard_normal_cdf).unwrap().p_value < 1e-6);
        let ys: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_two_sample(&xs, &ys).unwrap().p_value < 1e-3);
        let zs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(ks_two_sample(&zs, &ys).unwrap().p_value > 1e-3);
    }

    #[test]
    fn ecdf_steps() {
        let e = Ecdf::new(&[3.0, 1.0, 2.0, 2.0]);
        assert_eq!(e.eval(0.0), 0.0);
        assert_eq!(e.eval(1.0), 0.25);
        assert_eq!(e.eval(2.5), 0.75);
        assert_eq!(e.eval(9.0), 1.0);
    }

    #[test]
    fn confidence_intervals_cover() {
        let mut hits = 0;
        let reps = 2000;
        for seed in 0..reps {
            let mut rng = stream(seed, "ci", 0);
            let xs: Vec<f64> = (0..50).map(|_| 2.0 + 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let m = mean_ci(&xs, 0.95).unwrap();
            if m.lo <= 2.0 && 2.0 <= m.hi {
                hits += 1;
            }
        }
        let cover = hits as f64 / reps as f64;
        // t-vs-normal quantile at n = 50 costs about half a percent
        assert!((cover - 0.945).abs() < 0.015, "{cover}");
    }

    #[test]
    fn chi_square_reference() {
        // statistic 10 on 4 dof: sf = e^{-5}(1 + 5) = 0.04042768
        let r = chi_square_test(&[10.0, 20.0, 30.0, 20.0, 20.0], &[20.0; 5], 0).unwrap();
        assert!((r.statistic - 10.0).abs() < 1e-12);
        assert!((r.p_value - 6.0 * (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn chi_square_gof_normal() {
        let mut rng = stream(4, "chi", 0);
        let xs: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
        assert!(chi_square_gof(&xs, standard_normal_cdf, 20, -10.0, 10.0).unwrap().p_value > 0.01);
        let ys: Vec<f64> = xs.iter().map(|x| 1.1 * x).collect();
        assert!(chi_square_gof(&ys, standard_normal_cdf, 20, -10.0, 10.0).unwrap().p_value < 0.01);
    }

    #[test]
    fn tabulated_cdf_matches_normal() {
        let pdf = |x: f64| (-x * x / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let c = TabulatedCdf::new(pdf, -12.0, 12.0, 300, 0.0);
        assert!((c.total() - 1.0).abs() < 1e-13);
        for &x in &[-3.0, -0.7, 0.0, 0.33, 2.5, 20.0] {
            assert!((c.eval(x) - standard_normal_cdf(x)).abs() < 1e-12, "{x}");
        }
    }
}
