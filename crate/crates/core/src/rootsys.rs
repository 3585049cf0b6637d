//! Root systems `A_{N-1}`, `B_N`, `D_N`, the rank-one system and the
//! decoupled product `Z_2^N`: roots, Weyl group actions, chambers,
//! weights and normalization constants.

use crate::error::{Error, Result};
use crate::quad::{integrate, QuadConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;
use std::f64::consts::{LN_2, PI};
use std::fmt;

/// Largest rank for which Weyl groups are enumerated element by element.
pub const MAX_WEYL_RANK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RootKind {
    A,
    B,
    D,
    Rank1,
    ProductZ2,
}

impl RootKind {
    pub fn name(self) -> &'static str {
        match self {
            RootKind::A => "A",
            RootKind::B => "B",
            RootKind::D => "D",
            RootKind::Rank1 => "Rank1",
            RootKind::ProductZ2 => "ProductZ2",
        }
    }

    fn min_rank(self) -> usize {
        match self {
            RootKind::A | RootKind::D => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for RootKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multiplicity as written in JSON: one number, or `[k1, k2]` for type B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Multiplicity {
    Single(f64),
    Pair([f64; 2]),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    kind: RootKind,
    rank: usize,
    k: Multiplicity,
}

/// A root system together with a multiplicity function.
///
/// Positive roots and their multiplicities are materialized at
/// construction; the value is immutable afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct RootSystemSpec {
    kind: RootKind,
    rank: usize,
    k: Multiplicity,
    roots: Vec<Vec<f64>>,
    root_k: Vec<f64>,
}

impl TryFrom<RawSpec> for RootSystemSpec {
    type Error = Error;
    fn try_from(raw: RawSpec) -> Result<Self> {
        RootSystemSpec::new(raw.kind, raw.rank, raw.k)
    }
}

impl From<RootSystemSpec> for RawSpec {
    fn from(s: RootSystemSpec) -> Self {
        RawSpec {
            kind: s.kind,
            rank: s.rank,
            k: s.k,
        }
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMultiplicity(format!(
            "multiplicities must be finite and >= 0, got {k}"
        )))
    }
}

impl RootSystemSpec {
    pub fn new(kind: RootKind, rank: usize, k: Multiplicity) -> Result<Self> {
        if rank < kind.min_rank() || (kind == RootKind::Rank1 && rank != 1) {
            return Err(Error::InvalidRank {
                kind: kind.name(),
                rank,
                min: kind.min_rank(),
            });
        }
        let (k1, k2) = match (kind, k) {
            (RootKind::B, Multiplicity::Pair([a, b])) => (a, b),
            (RootKind::B, Multiplicity::Single(_)) => {
                return Err(Error::InvalidMultiplicity(
                    "type B needs a pair [k1, k2]".into(),
                ))
            }
            (_, Multiplicity::Single(a)) => (a, a),
            (_, Multiplicity::Pair(_)) => {
                return Err(Error::InvalidMultiplicity(format!(
                    "type {kind} takes a single multiplicity"
                )))
            }
        };
        check_k(k1)?;
        check_k(k2)?;

        let n = rank;
        let unit = |i: usize| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v
        };
        let pair = |i: usize, j: usize, s: f64| {
            let mut v = vec![0.0; n];
            v[i] = 1.0;
            v[j] = s;
            v
        };
        let mut roots = Vec::new();
        let mut root_k = Vec::new();
        match kind {
            RootKind::A => {
                for i in 0..n {
                    for j in i + 1..n {
                        roots.push(pair(i, j, -1.0));
                        root_k.push(k1);
                    }
                }
            }
            RootKind::B | RootKind::D => {
                if kind == RootKind::B {
                    for i in 0..n {
                        roots.push(unit(i));
                        root_k.push(k1);
                    }
                }
                for i in 0..n {
                    for j in i + 1..n {
                        roots.push(pair(i, j, -1.0));
                        root_k.push(k2);
                        roots.push(pair(i, j, 1.0));
                        root_k.push(k2);
                    }
                }
            }
            RootKind::Rank1 | RootKind::ProductZ2 => {
                for i in 0..n {
                    roots.push(unit(i));
                    root_k.push(k1);
                }
            }
        }
        Ok(Self {
            kind,
            rank,
            k,
            roots,
            root_k,
        })
    }

    /// Convenience constructor for the rank-one system.
    pub fn rank1(k: f64) -> Result<Self> {
        Self::new(RootKind::Rank1, 1, Multiplicity::Single(k))
    }

    pub fn product_z2(n: usize, k: f64) -> Result<Self> {
        Self::new(RootKind::ProductZ2, n, Multiplicity::Single(k))
    }

    pub fn kind(&self) -> RootKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn multiplicity(&self) -> Multiplicity {
        self.k
    }

    /// The single multiplicity value, or `k1` for type B.
    pub fn k_scalar(&self) -> f64 {
        match self.k {
            Multiplicity::Single(k) => k,
            Multiplicity::Pair([k1, _]) => k1,
        }
    }

    pub fn positive_roots(&self) -> &[Vec<f64>] {
        &self.roots
    }

    /// Multiplicity attached to each entry of [`positive_roots`](Self::positive_roots).
    pub fn root_multiplicities(&self) -> &[f64] {
        &self.root_k
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.rank {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.rank,
                got: x.len(),
            })
        }
    }

    /// `γ = Σ_{α∈R₊} k(α)`.
    pub fn gamma_exponent(&self) -> f64 {
        self.root_k.iter().sum()
    }

    /// `log w_k(x) = Σ 2k(α) log|⟨α,x⟩|`; `-inf` on a wall with `k(α) > 0`.
    pub fn log_weight(&self, x: &[f64]) -> f64 {
        self.roots
            .iter()
            .zip(&self.root_k)
            .filter(|(_, &k)| k > 0.0)
            .map(|(a, &k)| 2.0 * k * dot(a, x).abs().ln())
            .sum()
    }

    /// Representative of the Weyl orbit of `x` in the closed chamber.
    pub fn chamber_project(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        let desc = |v: &mut Vec<f64>| v.sort_by(|a, b| b.total_cmp(a));
        let mut y: Vec<f64> = match self.kind {
            RootKind::A => x.to_vec(),
            _ => x.iter().map(|v| v.abs()).collect(),
        };
        match self.kind {
            RootKind::A | RootKind::B => desc(&mut y),
            RootKind::D => {
                desc(&mut y);
                let negatives = x.iter().filter(|v| v.is_sign_negative() && **v != 0.0).count();
                if negatives % 2 == 1 {
                    let last = y.len() - 1;
                    y[last] = -y[last];
                }
            }
            RootKind::Rank1 | RootKind::ProductZ2 => {}
        }
        Ok(y)
    }

    /// True when `⟨α,x⟩ ≥ -tol` for every positive root.
    pub fn in_chamber(&self, x: &[f64], tol: f64) -> bool {
        self.roots.iter().all(|a| dot(a, x) >= -tol)
    }

    /// Order of the Weyl group.
    pub fn weyl_order(&self) -> u64 {
        let n = self.rank as u64;
        let fact: u64 = (1..=n).product();
        match self.kind {
            RootKind::A => fact,
            RootKind::B => fact << n,
            RootKind::D => fact << (n - 1),
            RootKind::Rank1 => 2,
            RootKind::ProductZ2 => 1 << n,
        }
    }

    /// Iterates over all Weyl group elements; rejects ranks above
    /// [`MAX_WEYL_RANK`].
    pub fn weyl_group(&self) -> Result<WeylIter> {
        if self.rank > MAX_WEYL_RANK {
            return Err(Error::GroupTooLarge {
                rank: self.rank,
                max: MAX_WEYL_RANK,
            });
        }
        let n = self.rank;
        let (perms, signs): (u64, u64) = match self.kind {
            RootKind::A => ((1..=n as u64).product(), 1),
            RootKind::B => ((1..=n as u64).product(), 1 << n),
            RootKind::D => ((1..=n as u64).product(), 1 << n),
            RootKind::Rank1 | RootKind::ProductZ2 => (1, 1 << n),
        };
        Ok(WeylIter {
            n,
            even_signs: self.kind == RootKind::D,
            perms,
            signs,
            next: 0,
        })
    }

    /// `log c_k`, the constant with `c_k ∫ e^{-|y|²/2} w_k(y) dy = 1`.
    pub fn norm_constant_log(&self) -> Result<f64> {
        let n = self.rank as f64;
        Ok(match (self.kind, self.k) {
            (RootKind::A, Multiplicity::Single(k)) => {
                let mut s = -0.5 * n * (2.0 * PI).ln();
                for j in 1..=self.rank {
                    s += ln_gamma(1.0 + k) - ln_gamma(1.0 + j as f64 * k);
                }
                s
            }
            (RootKind::B, Multiplicity::Pair([k1, k2])) => {
                let mut s = -n * (k1 + (n - 1.0) * k2 + 0.5) * LN_2;
                for j in 1..=self.rank {
                    let jf = j as f64;
                    s += ln_gamma(1.0 + k2)
                        - ln_gamma(1.0 + jf * k2)
                        - ln_gamma(0.5 + k1 + (jf - 1.0) * k2);
                }
                s
            }
            (RootKind::Rank1 | RootKind::ProductZ2, Multiplicity::Single(k)) => {
                n * rank1_norm_constant_log(k)
            }
            (RootKind::D, Multiplicity::Single(k)) => d_norm_constant_log(self.rank, k)?,
            _ => unreachable!("validated at construction"),
        })
    }

    /// `log d_k` with `d_k = ∫_{S^{N-1}} w_k dσ`.
    ///
    /// Passing to polar coordinates in the defining integral of `c_k` gives
    /// `d_k = 2^{1-γ-N/2} / (c_k Γ(γ+N/2))`.
    pub fn sphere_constant_log(&self) -> Result<f64> {
        let a = self.gamma_exponent() + 0.5 * self.rank as f64;
        Ok((1.0 - a) * LN_2 - self.norm_constant_log()? - ln_gamma(a))
    }
}

/// `log(1 / (2^{k+1/2} Γ(k+1/2)))`.
pub fn rank1_norm_constant_log(k: f64) -> f64 {
    -(k + 0.5) * LN_2 - ln_gamma(k + 0.5)
}

fn d_norm_constant_log(n: usize, k: f64) -> Result<f64> {
    let spec = RootSystemSpec::new(RootKind::D, n, Multiplicity::Single(k))?;
    if k == 0.0 {
        return Ok(-0.5 * n as f64 * (2.0 * PI).ln());
    }
    let a = spec.gamma_exponent() + 0.5 * n as f64;
    if n <= 3 {
        // c_k^{-1} = d_k · 2^{a-1} Γ(a) with d_k the sphere integral of w_k
        let w = |y: &[f64]| spec.log_weight(y).exp();
        let d = sphere_integral(n, w)?;
        Ok(-(d.ln() + (a - 1.0) * LN_2 + ln_gamma(a)))
    } else {
        // Monte Carlo over the sphere: d_k = |S^{N-1}| E[w_k(U)], U uniform
        let mut rng = ChaCha8Rng::seed_from_u64(0x0d_c0_ffee);
        let samples = 2_000_000;
        let mut z = vec![0.0; n];
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..samples {
            for v in z.iter_mut() {
                *v = StandardNormal.sample(&mut rng);
            }
            let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            z.iter_mut().for_each(|v| *v /= r);
            let w = spec.log_weight(&z).exp();
            s += w;
            s2 += w * w;
        }
        let m = s / samples as f64;
        let var = (s2 / samples as f64 - m * m).max(0.0);
        let rel = (var / samples as f64).sqrt() / m;
        if !(rel <= 1e-3) {
            return Err(Error::QuadratureNonConvergence {
                estimate: m,
                error: rel * m,
            });
        }
        let nf = n as f64;
        let log_area = LN_2 + 0.5 * nf * PI.ln() - ln_gamma(0.5 * nf);
        Ok(-(log_area + m.ln() + (a - 1.0) * LN_2 + ln_gamma(a)))
    }
}

/// Integral of `f` over the unit sphere `S^{n-1}` for `n ≤ 3`.
pub fn sphere_integral<F: Fn(&[f64]) -> f64>(n: usize, f: F) -> Result<f64> {
    let cfg = QuadConfig {
        abs_tol: 1e-13,
        rel_tol: 1e-11,
        max_intervals: 2000,
    };
    match n {
        1 => Ok(f(&[1.0]) + f(&[-1.0])),
        2 => Ok(integrate(|t: f64| f(&[t.cos(), t.sin()]), 0.0, 2.0 * PI, &cfg)?.value),
        3 => {
            let mut err = None;
            let inner = |th: f64| {
                let (s, c) = th.sin_cos();
                match integrate(|ph: f64| f(&[s * ph.cos(), s * ph.sin(), c]), 0.0, 2.0 * PI, &cfg) {
                    Ok(r) => r.value * s,
                    Err(e) => {
                        err = Some(e);
                        f64::NAN
                    }
                }
            };
            let outer_cfg = QuadConfig {
                rel_tol: 1e-10,
                ..cfg
            };
            let r = integrate(inner, 0.0, PI, &outer_cfg);
            if let Some(e) = err {
                return Err(e);
            }
            Ok(r?.value)
        }
        _ => Err(Error::Unsupported(format!(
            "sphere quadrature is implemented for n <= 3, got {n}"
        ))),
    }
}

/// A Weyl group element acting as a signed permutation:
/// `(g·x)_i = sign_i · x_{perm_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeylElement {
    pub perm: Vec<usize>,
    pub signs: Vec<i8>,
}

impl WeylElement {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.perm
            .iter()
            .zip(&self.signs)
            .map(|(&p, &s)| f64::from(s) * x[p])
            .collect()
    }
}

/// Lazy enumeration of a Weyl group (permutations by Lehmer code times
/// sign patterns by bitmask).
#[derive(Debug, Clone)]
pub struct WeylIter {
    n: usize,
    even_signs: bool,
    perms: u64,
    signs: u64,
    next: u64,
}

impl Iterator for WeylIter {
    type Item = WeylElement;
    fn next(&mut self) -> Option<WeylElement> {
        loop {
            if self.next >= self.perms * self.signs {
                return None;
            }
            let idx = self.next;
            self.next += 1;
            let mask = idx % self.signs;
            if self.even_signs && mask.count_ones() % 2 == 1 {
                continue;
            }
            let mut code = idx / self.signs;
            let mut pool: Vec<usize> = (0..self.n).collect();
            let mut perm = Vec::with_capacity(self.n);
            for i in (1..=self.n as u64).rev() {
                let f: u64 = (1..i).product();
                let q = (code / f) as usize;
                code %= f;
                perm.push(pool.remove(q));
            }
            let signs = (0..self.n)
                .map(|i| if (mask >> i) & 1 == 1 { -1 } else { 1 })
                .collect();
            return Some(WeylElement { perm, signs });
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x - 2⟨α,x⟩/⟨α,α⟩ α`.
pub fn reflect(alpha: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: alpha.len(),
            got: x.len(),
        });
    }
    let aa = dot(alpha, alpha);
    if aa == 0.0 {
        return Err(Error::ZeroRoot);
    }
    let c = 2.0 * dot(alpha, x) / aa;
    Ok(x.iter().zip(alpha).map(|(xi, ai)| xi - c * ai).collect())
}
