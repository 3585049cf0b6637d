//! Path generation: Euler–Maruyama for Bessel diffusions with drift, a
//! thinned jump-diffusion scheme for Dunkl and hybrid processes, exact
//! matrix-model oracles, and Girsanov weights.

use crate::densities::{DensityFamily, DensitySpec, ExactSampler};
use crate::error::{Error, Result};
use crate::kernels1d::{bessel_local, dunkl_local};
use crate::kernels_nd::{bessel_j_nd, bessel_j_product, dunkl_e_nd, GeometricCase};
use crate::linalg::{hermitian_eigenvalues, singular_values, singular_values_complex, symmetric_eigenvalues};
use crate::logvalue::LogValue;
use crate::rootsys::{dot, Multiplicity, RootKind, RootSystemSpec};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest matrix size accepted by the matrix oracles.
pub const MAX_ORACLE_N: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessFamily {
    BesselDrift,
    DunklDrift,
    HybridDrift,
    OracleChi,
    OracleDysonA,
    OracleSingularB,
}

impl ProcessFamily {
    pub fn is_oracle(self) -> bool {
        matches!(
            self,
            ProcessFamily::OracleChi | ProcessFamily::OracleDysonA | ProcessFamily::OracleSingularB
        )
    }

    fn density_family(self) -> Option<DensityFamily> {
        match self {
            ProcessFamily::BesselDrift => Some(DensityFamily::BesselDrift),
            ProcessFamily::DunklDrift => Some(DensityFamily::DunklDrift),
            ProcessFamily::HybridDrift => Some(DensityFamily::HybridDrift),
            _ => None,
        }
    }

    fn has_jumps(self) -> bool {
        matches!(self, ProcessFamily::DunklDrift | ProcessFamily::HybridDrift)
    }
}

/// Matrix dimensions of an oracle: `n` alone (χ), `(n, d)` (Dyson) or
/// `(m, n, d)` (singular values).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleDims {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemDescriptor {
    Roots(RootSystemSpec),
    Oracle(OracleDims),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarOrVec {
    Scalar(f64),
    Vector(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProcess {
    family: ProcessFamily,
    spec: SystemDescriptor,
    lambda: ScalarOrVec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

/// A process to simulate: family, root system or oracle dimensions, drift
/// and start point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess", into = "RawProcess")]
pub struct ProcessSpec {
    family: ProcessFamily,
    system: SystemDescriptor,
    lambda: Vec<f64>,
    x0: Vec<f64>,
}

impl TryFrom<RawProcess> for ProcessSpec {
    type Error = Error;
    fn try_from(r: RawProcess) -> Result<Self> {
        let lambda = match r.lambda {
            ScalarOrVec::Scalar(v) => vec![v],
            ScalarOrVec::Vector(v) => v,
        };
        let x0 = r.x0.unwrap_or_else(|| vec![0.0; lambda.len()]);
        Self::new(r.family, r.spec, lambda, x0)
    }
}

impl From<ProcessSpec> for RawProcess {
    fn from(p: ProcessSpec) -> Self {
        let lambda = if p.family == ProcessFamily::OracleChi {
            ScalarOrVec::Scalar(p.lambda[0])
        } else {
            ScalarOrVec::Vector(p.lambda)
        };
        RawProcess {
            family: p.family,
            spec: p.system,
            lambda,
            x0: Some(p.x0),
        }
    }
}

impl ProcessSpec {
    pub fn new(family: ProcessFamily, system: SystemDescriptor, lambda: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let ps = Self {
            family,
            system,
            lambda,
            x0,
        };
        ps.validate()?;
        Ok(ps)
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim()?;
        for (v, what) in [(&self.lambda, "lambda"), (&self.x0, "x0")] {
            if v.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: v.len(),
                });
            }
            if v.iter().any(|c| !c.is_finite()) {
                return Err(Error::InvalidArgument(format!("{what} must be finite")));
            }
        }
        if self.family.is_oracle() {
            if self.x0.iter().any(|&v| v != 0.0) {
                return Err(Error::InvalidArgument("matrix oracles start at the origin".into()));
            }
            let rs = self.root_system()?;
            if !rs.in_chamber(&self.lambda, 0.0) {
                return Err(Error::InvalidArgument("oracle drift must lie in the closed chamber".into()));
            }
            return Ok(());
        }
        let ds = self.density_spec()?;
        if ds.on_chamber() && !ds.spec.in_chamber(&self.x0, 0.0) {
            return Err(Error::InvalidArgument("Bessel start point must lie in the chamber".into()));
        }
        Ok(())
    }

    /// Rank-one process with multiplicity `k`.
    pub fn rank1(family: ProcessFamily, k: f64, lambda: f64, x0: f64) -> Result<Self> {
        Self::new(family, SystemDescriptor::Roots(RootSystemSpec::rank1(k)?), vec![lambda], vec![x0])
    }

    pub fn product_z2(family: ProcessFamily, k: f64, lambda: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let n = lambda.len();
        Self::new(family, SystemDescriptor::Roots(RootSystemSpec::product_z2(n, k)?), lambda, x0)
    }

    pub fn chi(n: usize, lambda: f64) -> Result<Self> {
        let dims = OracleDims { m: None, n, d: None };
        Self::new(ProcessFamily::OracleChi, SystemDescriptor::Oracle(dims), vec![lambda], vec![0.0])
    }

    pub fn dyson(n: usize, d: u8, lambda: Vec<f64>) -> Result<Self> {
        let dims = OracleDims { m: None, n, d: Some(d) };
        Self::new(ProcessFamily::OracleDysonA, SystemDescriptor::Oracle(dims), lambda, vec![0.0; n])
    }

    pub fn singular_b(m: usize, n: usize, d: u8, lambda: Vec<f64>) -> Result<Self> {
        let dims = OracleDims { m: Some(m), n, d: Some(d) };
        Self::new(ProcessFamily::OracleSingularB, SystemDescriptor::Oracle(dims), lambda, vec![0.0; n])
    }

    pub fn family(&self) -> ProcessFamily {
        self.family
    }

    pub fn system(&self) -> &SystemDescriptor {
        &self.system
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    pub fn with_lambda(&self, lambda: Vec<f64>) -> Result<Self> {
        Self::new(self.family, self.system.clone(), lambda, self.x0.clone())
    }

    pub fn with_x0(&self, x0: Vec<f64>) -> Result<Self> {
        Self::new(self.family, self.system.clone(), self.lambda.clone(), x0)
    }

    fn oracle_dims(&self) -> Result<OracleDims> {
        match (&self.system, self.family.is_oracle()) {
            (SystemDescriptor::Oracle(d), true) => Ok(*d),
            _ => Err(Error::InvalidArgument(format!(
                "family {:?} does not match its system descriptor",
                self.family
            ))),
        }
    }

    fn geometric_case(&self) -> Result<Option<GeometricCase>> {
        let dims = self.oracle_dims()?;
        let d = || {
            dims.d
                .filter(|d| *d == 1 || *d == 2)
                .ok_or_else(|| Error::InvalidArgument("oracle needs d in {1, 2}".into()))
        };
        if dims.n > MAX_ORACLE_N {
            return Err(Error::InvalidArgument(format!(
                "oracle size {} exceeds {MAX_ORACLE_N}",
                dims.n
            )));
        }
        Ok(match self.family {
            ProcessFamily::OracleChi => None,
            ProcessFamily::OracleDysonA => Some(GeometricCase::A { n: dims.n, d: d()? }),
            _ => {
                let m = dims
                    .m
                    .ok_or_else(|| Error::InvalidArgument("singular-value oracle needs m".into()))?;
                Some(GeometricCase::B { m, n: dims.n, d: d()? })
            }
        })
    }

    /// State-space dimension.
    pub fn dim(&self) -> Result<usize> {
        match &self.system {
            SystemDescriptor::Roots(rs) if !self.family.is_oracle() => Ok(rs.rank()),
            _ => {
                let dims = self.oracle_dims()?;
                if dims.n == 0 {
                    return Err(Error::InvalidArgument("oracle dimension must be at least 1".into()));
                }
                Ok(if self.family == ProcessFamily::OracleChi { 1 } else { dims.n })
            }
        }
    }

    /// The root system whose Bessel process the family realizes (for the
    /// χ oracle, rank one with `k = (n − 1)/2`).
    pub fn root_system(&self) -> Result<RootSystemSpec> {
        match &self.system {
            SystemDescriptor::Roots(rs) if !self.family.is_oracle() => Ok(rs.clone()),
            _ => match self.geometric_case()? {
                None => RootSystemSpec::rank1((self.oracle_dims()?.n as f64 - 1.0) / 2.0),
                Some(GeometricCase::A { n: 1, .. }) => RootSystemSpec::rank1(0.0)
                    .and_then(|_| RootSystemSpec::new(RootKind::ProductZ2, 1, Multiplicity::Single(0.0))),
                Some(g) => g.root_system(),
            },
        }
    }

    /// Density description of the kernel families (and of the χ oracle as
    /// a rank-one Bessel process).
    pub fn density_spec(&self) -> Result<DensitySpec> {
        match self.family.density_family() {
            Some(f) => DensitySpec::new(f, self.root_system()?, self.lambda.clone()),
            None if self.family == ProcessFamily::OracleChi => {
                DensitySpec::new(DensityFamily::BesselDrift, self.root_system()?, self.lambda.clone())
            }
            None => Err(Error::Unsupported(format!("{:?} has no closed-form density", self.family))),
        }
    }

    /// Rank-one Bessel law of `‖X_t‖` from the origin: multiplicity
    /// `γ + N/2 − 1/2`, drift `‖λ‖`.
    pub fn radial_target(&self) -> Result<DensitySpec> {
        let rs = self.root_system()?;
        let n = self.dim()? as f64;
        let k = rs.gamma_exponent() + n / 2.0 - 0.5;
        DensitySpec::rank1(DensityFamily::BesselDrift, k, dot(&self.lambda, &self.lambda).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    Fixed,
    Adaptive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub dt0: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    pub step_rule: StepRule,
    pub boundary_eps: f64,
    pub rate_cap_factor: f64,
    pub seed: u64,
    pub path_index: u64,
    /// Keep every grid point; otherwise only the endpoints are stored.
    pub record_path: bool,
    /// Attach the Girsanov weight of the terminal state.
    pub with_weight: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt0: 1e-3,
            horizon: 1.0,
            step_rule: StepRule::Adaptive,
            boundary_eps: 0.05,
            rate_cap_factor: 10.0,
            seed: 0,
            path_index: 0,
            record_path: true,
            with_weight: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{what} must be positive, got {v}")))
            }
        };
        pos(self.dt0, "dt0")?;
        pos(self.horizon, "T")?;
        pos(self.boundary_eps, "boundary_eps")?;
        pos(self.rate_cap_factor, "rate_cap_factor")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Jump {
    pub time: f64,
    pub root: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub jumps: Vec<Jump>,
    pub terminal_weight: Option<f64>,
    /// Steps on which the adaptive step size underflowed at a wall.
    pub wall_events: u64,
}

impl Path {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("a path has at least its start point")
    }
}

/// Drift and jump rate of one coordinate of a product system.
fn coord_terms(family: ProcessFamily, k: f64, x: f64, l: f64, root: usize) -> Result<(f64, f64)> {
    if k == 0.0 {
        let drift = match family {
            ProcessFamily::DunklDrift => l,
            _ => l * bessel_local(0.0, x * l)?.dlog,
        };
        return Ok((drift, 0.0));
    }
    if x == 0.0 {
        return Err(Error::BoundaryContact { root });
    }
    let u = x * l;
    Ok(match family {
        ProcessFamily::DunklDrift => {
            let here = dunkl_local(k, u)?;
            let there = dunkl_local(k, -u)?;
            (
                k / x + l * here.dlog,
                0.5 * k * (there.log_e - here.log_e).exp() / (x * x),
            )
        }
        ProcessFamily::HybridDrift => (k / x + l * bessel_local(k, u)?.dlog, 0.5 * k / (x * x)),
        _ => (k / x + l * bessel_local(k, u)?.dlog, 0.0),
    })
}

fn is_product(rs: &RootSystemSpec) -> bool {
    matches!(rs.kind(), RootKind::Rank1 | RootKind::ProductZ2)
}

fn kernel_family(ps: &ProcessSpec) -> Result<RootSystemSpec> {
    if ps.family.is_oracle() {
        return Err(Error::Unsupported(format!("{:?} is simulated exactly", ps.family)));
    }
    ps.root_system()
}

/// Drift `Σ k(α) α/⟨α,x⟩ + ∇ₓ log G(x, λ)` with `G = E_k` (Dunkl) or
/// `J_k` (Bessel, hybrid).
pub fn drift_field(ps: &ProcessSpec, x: &[f64]) -> Result<Vec<f64>> {
    let rs = kernel_family(ps)?;
    if x.len() != rs.rank() {
        return Err(Error::DimensionMismatch {
            expected: rs.rank(),
            got: x.len(),
        });
    }
    if is_product(&rs) {
        let k = rs.k_scalar();
        return x
            .iter()
            .zip(&ps.lambda)
            .enumerate()
            .map(|(i, (&xi, &li))| coord_terms(ps.family, k, xi, li, i).map(|t| t.0))
            .collect();
    }
    // remaining supported systems have k ≡ 0
    if ps.family == ProcessFamily::DunklDrift {
        return Ok(ps.lambda.clone());
    }
    // ∇ log Σ_w e^{⟨x, wλ⟩}: softmax-weighted orbit average of wλ
    let orbit: Vec<Vec<f64>> = rs.weyl_group()?.map(|g| g.apply(&ps.lambda)).collect();
    let logs: Vec<f64> = orbit.iter().map(|wl| dot(x, wl)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    Ok((0..x.len())
        .map(|i| orbit.iter().zip(&weights).map(|(wl, w)| w * wl[i]).sum::<f64>() / total)
        .collect())
}

/// Intensity of the jump `x → σ_α x` for positive root `root`.
pub fn jump_rate(ps: &ProcessSpec, x: &[f64], root: usize) -> Result<f64> {
    let rs = kernel_family(ps)?;
    let alpha = rs
        .positive_roots()
        .get(root)
        .ok_or_else(|| Error::InvalidArgument(format!("no positive root with index {root}")))?;
    let k = rs.root_multiplicities()[root];
    if !ps.family.has_jumps() || k == 0.0 {
        return Ok(0.0);
    }
    if is_product(&rs) {
        return coord_terms(ps.family, k, x[root], ps.lambda[root], root).map(|t| t.1);
    }
    let a = dot(alpha, x);
    if a == 0.0 {
        return Err(Error::BoundaryContact { root });
    }
    let base = 0.5 * k * dot(alpha, alpha) / (a * a);
    if ps.family == ProcessFamily::HybridDrift {
        return Ok(base);
    }
    let sx = crate::rootsys::reflect(alpha, x)?;
    let ratio = dunkl_e_nd(&rs, &sx, &ps.lambda)? / dunkl_e_nd(&rs, x, &ps.lambda)?;
    Ok(base * ratio.to_f64())
}

/// `log G(x, λ)` for the family's ratio kernel.
fn log_ratio_kernel(ps: &ProcessSpec, rs: &RootSystemSpec, x: &[f64]) -> Result<LogValue> {
    match ps.family {
        ProcessFamily::DunklDrift => dunkl_e_nd(rs, x, &ps.lambda),
        _ if is_product(rs) => bessel_j_product(rs, x, &ps.lambda),
        _ => bessel_j_nd(rs, x, &ps.lambda),
    }
}

/// Density of the driftless law with respect to the drifted one on paths
/// up to `T`: `e^{‖λ‖²T/2} G(x₀, λ) / G(X_T, λ)`.
pub fn girsanov_weight(ps: &ProcessSpec, terminal: &[f64], horizon: f64) -> Result<LogValue> {
    let rs = kernel_family(ps)?;
    let ll = dot(&ps.lambda, &ps.lambda);
    Ok(LogValue::from_log(0.5 * ll * horizon) * log_ratio_kernel(ps, &rs, &ps.x0)?
        / log_ratio_kernel(ps, &rs, terminal)?)
}

/// `‖Z‖`, `Z ~ N((tλ, 0, …, 0), t I_n)`.
pub fn oracle_chi<R: Rng + ?Sized>(n: usize, lambda: f64, t: f64, rng: &mut R) -> f64 {
    let s = t.sqrt();
    let first = t * lambda + s * rng.sample::<f64, _>(StandardNormal);
    let rest: f64 = (1..n)
        .map(|_| (s * rng.sample::<f64, _>(StandardNormal)).powi(2))
        .sum();
    (first * first + rest).sqrt()
}

fn gaussian_pair<R: Rng + ?Sized>(sd: f64, rng: &mut R) -> Complex64 {
    Complex64::new(sd * rng.sample::<f64, _>(StandardNormal), sd * rng.sample::<f64, _>(StandardNormal))
}

/// Ordered eigenvalues of `G + t·diag(λ)`, `G` a Gaussian Hermitian matrix
/// at time `t` for the trace inner product (diagonal variance `t`,
/// off-diagonal real coordinates variance `t/2`).
pub fn oracle_dyson<R: Rng + ?Sized>(n: usize, d: u8, lambda: &[f64], t: f64, rng: &mut R) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_ORACLE_N || lambda.len() != n || !(d == 1 || d == 2) {
        return Err(Error::InvalidArgument(format!("bad Dyson oracle (n={n}, d={d})")));
    }
    let s = t.sqrt();
    let off = (t / 2.0).sqrt();
    if d == 1 {
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            a[i * n + i] = t * lambda[i] + s * rng.sample::<f64, _>(StandardNormal);
            for j in i + 1..n {
                let v = off * rng.sample::<f64, _>(StandardNormal);
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        symmetric_eigenvalues(a, n)
    } else {
        let mut h = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            h[i * n + i] = Complex64::new(t * lambda[i] + s * rng.sample::<f64, _>(StandardNormal), 0.0);
            for j in i + 1..n {
                let z = gaussian_pair(off, rng);
                h[i * n + j] = z;
                h[j * n + i] = z.conj();
            }
        }
        hermitian_eigenvalues(&h, n)
    }
}

/// Descending singular values of `G + t·Λ̂`, `G` an `M × N` Gaussian matrix
/// whose real coordinates have variance `t`.
pub fn oracle_singular_b<R: Rng + ?Sized>(
    m: usize,
    n: usize,
    d: u8,
    lambda: &[f64],
    t: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_ORACLE_N || m < n || lambda.len() != n || !(d == 1 || d == 2) {
        return Err(Error::InvalidArgument(format!("bad singular-value oracle (m={m}, n={n}, d={d})")));
    }
    let s = t.sqrt();
    let shift = |i: usize, j: usize| if i == j { t * lambda[i] } else { 0.0 };
    if d == 1 {
        let a: Vec<f64> = (0..m * n)
            .map(|p| shift(p / n, p % n) + s * rng.sample::<f64, _>(StandardNormal))
            .collect();
        singular_values(&a, m, n)
    } else {
        let a: Vec<Complex64> = (0..m * n)
            .map(|p| gaussian_pair(s, rng) + shift(p / n, p % n))
            .collect();
        singular_values_complex(&a, m, n)
    }
}

/// Prepared simulation of one process under one configuration; build it
/// once and draw any number of paths.
#[derive(Debug, Clone)]
pub struct Simulator {
    ps: ProcessSpec,
    cfg: SimConfig,
    rs: RootSystemSpec,
    /// Exact first-step samplers for coordinates that start on a wall.
    wall_start: Vec<Option<ExactSampler>>,
}

impl Simulator {
    pub fn new(ps: &ProcessSpec, cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let rs = ps.root_system()?;
        let mut wall_start = vec![None; ps.x0.len()];
        if !ps.family.is_oracle() {
            if is_product(&rs) {
                let k = rs.k_scalar();
                let h = cfg.dt0.min(cfg.horizon);
                for (i, slot) in wall_start.iter_mut().enumerate() {
                    if k > 0.0 && ps.x0[i] == 0.0 {
                        let f = ps.family.density_family().expect("kernel family");
                        let ds = DensitySpec::rank1(f, k, ps.lambda[i])?;
                        *slot = Some(ExactSampler::new(&ds, h, 0.0)?);
                    }
                }
            } else if rs.root_multiplicities().iter().any(|&k| k > 0.0) {
                return Err(Error::Unsupported(format!(
                    "path simulation of type {} with k > 0; use the matrix oracles",
                    rs.kind()
                )));
            }
        }
        Ok(Self {
            ps: ps.clone(),
            cfg: cfg.clone(),
            rs,
            wall_start,
        })
    }

    pub fn process(&self) -> &ProcessSpec {
        &self.ps
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// Exact terminal draw for the oracle families.
    fn oracle_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let t = self.cfg.horizon;
        let dims = self.ps.oracle_dims()?;
        match self.ps.family {
            ProcessFamily::OracleChi => Ok(vec![oracle_chi(dims.n, self.ps.lambda[0], t, rng)]),
            ProcessFamily::OracleDysonA => oracle_dyson(dims.n, dims.d.unwrap_or(0), &self.ps.lambda, t, rng),
            _ => oracle_singular_b(dims.m.unwrap_or(0), dims.n, dims.d.unwrap_or(0), &self.ps.lambda, t, rng),
        }
    }

    pub fn run<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Path> {
        let t_end = self.cfg.horizon;
        let mut path = Path {
            times: vec![0.0],
            states: vec![self.ps.x0.clone()],
            jumps: Vec::new(),
            terminal_weight: None,
            wall_events: 0,
        };
        if self.ps.family.is_oracle() {
            path.times.push(t_end);
            path.states.push(self.oracle_terminal(rng)?);
            return Ok(path);
        }
        let mut x = self.ps.x0.clone();
        let mut t = 0.0;
        let mut step = 0usize;
        if self.wall_start.iter().any(Option::is_some) {
            let h = self.cfg.dt0.min(t_end);
            let mut next = x.clone();
            for (i, s) in self.wall_start.iter().enumerate() {
                next[i] = match s {
                    Some(sampler) => sampler.clone().sample(rng)?,
                    None => self.euler_coord(i, x[i], h, rng)?,
                };
            }
            x = next;
            t = h;
            step = 1;
            self.record(&mut path, t, &x);
        }
        while t_end - t > 1e-12 * t_end {
            t = self.step(&mut x, t, &mut path, rng)?;
            step += 1;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::NanState {
                    step,
                    path: self.cfg.path_index,
                });
            }
            self.record(&mut path, t, &x);
        }
        if !self.cfg.record_path {
            path.times.push(t);
            path.states.push(x.clone());
        }
        if self.cfg.with_weight {
            path.terminal_weight = Some(girsanov_weight(&self.ps, &x, t_end)?.to_f64());
        }
        Ok(path)
    }

    fn record(&self, path: &mut Path, t: f64, x: &[f64]) {
        if self.cfg.record_path {
            path.times.push(t);
            path.states.push(x.to_vec());
        }
    }

    /// One Euler step of a single product coordinate (no jumps), used
    /// beside an exact wall start.
    fn euler_coord<R: Rng + ?Sized>(&self, i: usize, x: f64, h: f64, rng: &mut R) -> Result<f64> {
        let (b, _) = coord_terms(self.ps.family, self.rs.k_scalar(), x, self.ps.lambda[i], i)?;
        let y = x + b * h + h.sqrt() * rng.sample::<f64, _>(StandardNormal);
        Ok(self.confine(i, x, y))
    }

    /// Keeps a product coordinate on its side of the wall: absolute value
    /// for the Bessel family, reflection back across the wall otherwise.
    fn confine(&self, i: usize, before: f64, after: f64) -> f64 {
        let k = self.rs.root_multiplicities()[i];
        match self.ps.family {
            ProcessFamily::BesselDrift => after.abs(),
            _ if k > 0.0 && after * before < 0.0 => -after,
            _ => after,
        }
    }

    fn step<R: Rng + ?Sized>(&self, x: &mut Vec<f64>, t: f64, path: &mut Path, rng: &mut R) -> Result<f64> {
        let cfg = &self.cfg;
        let remaining = cfg.horizon - t;
        let product = is_product(&self.rs);
        let roots = self.rs.positive_roots();
        let ks = self.rs.root_multiplicities();

        let (drift, rates) = if product {
            let k = self.rs.k_scalar();
            let mut d = Vec::with_capacity(x.len());
            let mut r = Vec::with_capacity(x.len());
            for i in 0..x.len() {
                let (b, q) = coord_terms(self.ps.family, k, x[i], self.ps.lambda[i], i)?;
                d.push(b);
                r.push(q);
            }
            (d, r)
        } else {
            (drift_field(&self.ps, x)?, vec![0.0; roots.len()])
        };

        let mut dt = cfg.dt0.min(remaining);
        let mut wall = false;
        if cfg.step_rule == StepRule::Adaptive {
            let min_a2 = roots
                .iter()
                .zip(ks)
                .filter(|(_, &k)| k > 0.0)
                .map(|(a, _)| dot(a, x).powi(2) / dot(a, a))
                .fold(f64::INFINITY, f64::min);
            dt = dt.min(cfg.boundary_eps * min_a2);
            let total: f64 = rates.iter().sum();
            if total > 0.0 {
                dt = dt.min(1.0 / (cfg.rate_cap_factor * total));
            }
            let floor = cfg.dt0 * 1e-8;
            if dt < floor {
                dt = floor.min(remaining);
                wall = true;
                path.wall_events += 1;
            }
        }
        let t_next = t + dt;

        if self.ps.family.has_jumps() {
            if wall {
                // local two-state balance between x and σx at the wall
                let k = self.rs.k_scalar();
                for i in 0..x.len() {
                    if k > 0.0 && x[i] * x[i] < cfg.boundary_eps * dt {
                        let p = match self.ps.family {
                            ProcessFamily::DunklDrift => {
                                let u = x[i] * self.ps.lambda[i];
                                let a = dunkl_local(k, u)?.log_e;
                                let b = dunkl_local(k, -u)?.log_e;
                                1.0 / (1.0 + (a - b).exp())
                            }
                            _ => 0.5,
                        };
                        if rng.random::<f64>() < p {
                            x[i] = -x[i];
                            path.jumps.push(Jump { time: t_next, root: i });
                        }
                    }
                }
            } else {
                // exponential clocks; the first to ring within dt fires
                let mut first: Option<(f64, usize)> = None;
                for (i, &r) in rates.iter().enumerate() {
                    if r > 0.0 {
                        let tau = rng.sample::<f64, _>(Exp1) / r;
                        if tau < dt && first.is_none_or(|(s, _)| tau < s) {
                            first = Some((tau, i));
                        }
                    }
                }
                if let Some((_, i)) = first {
                    *x = crate::rootsys::reflect(&roots[i], x)?;
                    path.jumps.push(Jump { time: t_next, root: i });
                }
            }
        }

        // drift is re-evaluated after a jump
        let drift = if path.jumps.last().is_some_and(|j| j.time == t_next) {
            if product {
                let k = self.rs.k_scalar();
                (0..x.len())
                    .map(|i| coord_terms(self.ps.family, k, x[i], self.ps.lambda[i], i).map(|v| v.0))
                    .collect::<Result<Vec<_>>>()?
            } else {
                drift_field(&self.ps, x)?
            }
        } else {
            drift
        };

        let sd = dt.sqrt();
        let before = x.clone();
        for i in 0..x.len() {
            x[i] += drift[i] * dt + sd * rng.sample::<f64, _>(StandardNormal);
        }
        if product {
            for i in 0..x.len() {
                x[i] = self.confine(i, before[i], x[i]);
            }
        } else if self.ps.family == ProcessFamily::BesselDrift {
            *x = self.rs.chamber_project(x)?;
        }
        Ok(t_next)
    }
}

/// One path of `ps` under `cfg`.
pub fn simulate_path<R: Rng + ?Sized>(ps: &ProcessSpec, cfg: &SimConfig, rng: &mut R) -> Result<Path> {
    Simulator::new(ps, cfg)?.run(rng)
}
