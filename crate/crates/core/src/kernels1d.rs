//! Rank-one Dunkl kernel `E_k(x, λ)`, the spherical Bessel function
//! `j_α(iu)`, and their logarithmic derivatives, all in log scale.
//!
//! `E_k(x, λ) = e^{u} ₁F₁(k, 2k+1; -2u)` with `u = xλ`. After a Kummer
//! transformation both tails reduce to all-positive series in `z = 2|u|`:
//!
//! * `u ≥ 0`: `E = e^{-u} ₁F₁(k+1, 2k+1; 2u)`
//! * `u < 0`: `E = e^{u} ₁F₁(k, 2k+1; 2|u|)`
//!
//! so no cancellation occurs anywhere on the real line.

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use crate::quad::GaussJacobi;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;

const MAX_TERMS: usize = 100_000;
const REL_TOL: f64 = 1e-16;
const RESCALE: f64 = 1e250;
/// Number of Gauss–Jacobi nodes used by the integral-representation route.
pub const QUADRATURE_NODES: usize = 200;

/// Value and first two derivatives of an all-positive power series,
/// returned as `(log G, G'/G, G''/G)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesDerivs {
    pub log_value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// `₁F₁(a, b; z)` with `z ≥ 0` and its `z`-derivatives, summed in linear
/// scale with periodic rescaling. The derivative series are the same
/// hypergeometric series with parameters shifted by one and two.
fn f11_positive(a: f64, b: f64, z: f64) -> Result<SeriesDerivs> {
    debug_assert!(z >= 0.0);
    let (mut t0, mut t1, mut t2) = (1.0f64, 1.0f64, 1.0f64);
    let (mut s0, mut s1, mut s2) = (1.0f64, 1.0f64, 1.0f64);
    let mut log_scale = 0.0;
    let mut n = 0usize;
    loop {
        let nf = n as f64;
        let zn = z / (nf + 1.0);
        let r0 = (a + nf) / (b + nf) * zn;
        t0 *= r0;
        t1 *= (a + 1.0 + nf) / (b + 1.0 + nf) * zn;
        t2 *= (a + 2.0 + nf) / (b + 2.0 + nf) * zn;
        s0 += t0;
        s1 += t1;
        s2 += t2;
        n += 1;
        if s0 > RESCALE || s2 > RESCALE {
            let f = 1.0 / RESCALE;
            t0 *= f;
            t1 *= f;
            t2 *= f;
            s0 *= f;
            s1 *= f;
            s2 *= f;
            log_scale += RESCALE.ln();
        }
        let small = t0 <= REL_TOL * s0 && t1 <= REL_TOL * s1 && t2 <= REL_TOL * s2;
        if (small && r0 < 1.0) || z == 0.0 {
            break;
        }
        if n >= MAX_TERMS || !s0.is_finite() {
            return Err(Error::SeriesDiverged { terms: n, z });
        }
    }
    Ok(SeriesDerivs {
        log_value: log_scale + s0.ln(),
        d1: a / b * s1 / s0,
        d2: a * (a + 1.0) / (b * (b + 1.0)) * s2 / s0,
    })
}

/// `₁F₁(a, b; z)` in log scale. Negative `z` goes through
/// `₁F₁(a,b;z) = e^z ₁F₁(b-a, b; -z)`, which requires `b - a ≥ 0` to stay
/// all-positive.
pub fn kummer_1f1_log(a: f64, b: f64, z: f64) -> Result<LogValue> {
    if !(a > 0.0 && b > 0.0) || !z.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "1F1 needs a, b > 0 and finite z (a={a}, b={b}, z={z})"
        )));
    }
    if z >= 0.0 {
        return Ok(LogValue::from_log(f11_positive(a, b, z)?.log_value));
    }
    if b - a < 0.0 {
        return Err(Error::Unsupported(format!(
            "1F1 at negative argument with b < a (a={a}, b={b})"
        )));
    }
    if b == a {
        return Ok(LogValue::from_log(z));
    }
    Ok(LogValue::from_log(z + f11_positive(b - a, b, -z)?.log_value))
}

/// Local data of `u ↦ E_k(u) := E_k(u, 1)`: `log E`, `(log E)'` and
/// `E''/E`. Since `E_k(x, λ) = E_k(xλ, 1)`, derivatives in either slot
/// follow by the chain rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rank1Local {
    pub log_e: f64,
    pub dlog: f64,
    pub d2_ratio: f64,
}

pub fn dunkl_local(k: f64, u: f64) -> Result<Rank1Local> {
    check_k(k)?;
    if k == 0.0 {
        return Ok(Rank1Local {
            log_e: u,
            dlog: 1.0,
            d2_ratio: 1.0,
        });
    }
    let b = 2.0 * k + 1.0;
    if u >= 0.0 {
        let g = f11_positive(k + 1.0, b, 2.0 * u)?;
        Ok(Rank1Local {
            log_e: -u + g.log_value,
            dlog: -1.0 + 2.0 * g.d1,
            d2_ratio: 1.0 - 4.0 * g.d1 + 4.0 * g.d2,
        })
    } else {
        let g = f11_positive(k, b, -2.0 * u)?;
        Ok(Rank1Local {
            log_e: u + g.log_value,
            dlog: 1.0 - 2.0 * g.d1,
            d2_ratio: 1.0 - 4.0 * g.d1 + 4.0 * g.d2,
        })
    }
}

fn check_k(k: f64) -> Result<()> {
    if k.is_finite() && k >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidMultiplicity(format!("k must be finite and >= 0, got {k}")))
    }
}

/// The rank-one Dunkl kernel `E_k(x, λ)`.
pub fn dunkl_e_1d(k: f64, x: f64, lambda: f64) -> Result<LogValue> {
    Ok(LogValue::from_log(dunkl_local(k, x * lambda)?.log_e))
}

/// `E_k(x, λ)` from its integral representation against the density
/// `Γ(k+1/2)/(Γ(1/2)Γ(k)) (1-t)^{k-1}(1+t)^k` on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct DunklQuadrature {
    k: f64,
    log_prefactor: f64,
    rule: GaussJacobi,
}

impl DunklQuadrature {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidMultiplicity(format!(
                "the integral representation needs k > 0, got {k}"
            )));
        }
        Ok(Self {
            k,
            log_prefactor: ln_gamma(k + 0.5) - 0.5 * PI.ln() - ln_gamma(k),
            rule: GaussJacobi::new(QUADRATURE_NODES, k - 1.0, k)?,
        })
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn eval(&self, x: f64, lambda: f64) -> LogValue {
        let u = x * lambda;
        LogValue::from_log(self.log_prefactor) * self.rule.integrate_exp(|t| u * t)
    }
}

/// One-shot form of [`DunklQuadrature`]; `k = 0` returns `e^{xλ}`.
pub fn dunkl_e_1d_quadrature(k: f64, x: f64, lambda: f64) -> Result<LogValue> {
    check_k(k)?;
    if k == 0.0 {
        return Ok(LogValue::from_log(x * lambda));
    }
    Ok(DunklQuadrature::new(k)?.eval(x, lambda))
}

/// `∂_λ log E_k(x, λ)`.
pub fn dunkl_e_1d_dlam(k: f64, x: f64, lambda: f64) -> Result<f64> {
    Ok(x * dunkl_local(k, x * lambda)?.dlog)
}

/// `∂²_λ E_k(x, λ) / E_k(x, λ)`.
pub fn dunkl_e_1d_d2lam(k: f64, x: f64, lambda: f64) -> Result<f64> {
    Ok(x * x * dunkl_local(k, x * lambda)?.d2_ratio)
}

/// Leading-order behaviour of `E_k(u, 1)` as `u → ±∞`:
/// `Γ(2k+1)/Γ(k+1) e^{u} (2u)^{-k}` and `Γ(2k+1)/Γ(k) e^{|u|} (2|u|)^{-k-1}`.
pub fn dunkl_e_1d_asymptotic(k: f64, u: f64) -> LogValue {
    if k == 0.0 {
        return LogValue::from_log(u);
    }
    let z = 2.0 * u.abs();
    if u > 0.0 {
        LogValue::from_log(ln_gamma(2.0 * k + 1.0) - ln_gamma(k + 1.0) + u - k * z.ln())
    } else {
        LogValue::from_log(ln_gamma(2.0 * k + 1.0) - ln_gamma(k) - u - (k + 1.0) * z.ln())
    }
}

/// `(j_α(iu), j'/j, j''/j)` for `u ≥ 0`, with `j_α(iu) = Σ c_n`,
/// `c_n = c_{n-1} (u²/4) / (n(n+α))`.
pub fn sph_bessel_local(alpha: f64, u: f64) -> Result<SeriesDerivs> {
    if !(alpha >= -0.5) || !u.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "j_alpha needs alpha >= -1/2 and finite u (alpha={alpha}, u={u})"
        )));
    }
    let u = u.abs();
    if u == 0.0 {
        return Ok(SeriesDerivs {
            log_value: 0.0,
            d1: 0.0,
            d2: 1.0 / (2.0 * (alpha + 1.0)),
        });
    }
    let q = 0.25 * u * u;
    let (mut c, mut s0, mut s1, mut s2) = (1.0f64, 1.0f64, 0.0f64, 0.0f64);
    let mut log_scale = 0.0;
    let mut n = 1usize;
    loop {
        let nf = n as f64;
        let na = nf + alpha;
        let t1 = c * u / (2.0 * na);
        let t2 = c * (2.0 * nf - 1.0) / (2.0 * na);
        let ratio = q / (nf * na);
        c *= ratio;
        s0 += c;
        s1 += t1;
        s2 += t2;
        if s0 > RESCALE {
            let f = 1.0 / RESCALE;
            c *= f;
            s0 *= f;
            s1 *= f;
            s2 *= f;
            log_scale += RESCALE.ln();
        }
        if ratio < 1.0 && c <= REL_TOL * s0 && t1 <= REL_TOL * s1 && t2 <= REL_TOL * s2 {
            break;
        }
        n += 1;
        if n >= MAX_TERMS {
            return Err(Error::SeriesDiverged { terms: n, z: u });
        }
    }
    Ok(SeriesDerivs {
        log_value: log_scale + s0.ln(),
        d1: s1 / s0,
        d2: s2 / s0,
    })
}

/// `j_α(iu) = Γ(α+1) Σ (u/2)^{2n} / (n! Γ(n+α+1))`, always positive.
pub fn sph_bessel_imag(alpha: f64, u: f64) -> Result<LogValue> {
    Ok(LogValue::from_log(sph_bessel_local(alpha, u)?.log_value))
}

/// `d/du log j_α(iu)`; odd in `u`.
pub fn sph_bessel_imag_logderiv(alpha: f64, u: f64) -> Result<f64> {
    Ok(u.signum() * sph_bessel_local(alpha, u)?.d1)
}

/// `J_k(x, λ) = j_{k-1/2}(i xλ)`.
pub fn bessel_j_1d(k: f64, x: f64, lambda: f64) -> Result<LogValue> {
    check_k(k)?;
    sph_bessel_imag(k - 0.5, x * lambda)
}

/// Local data of `u ↦ J_k(u, 1)` in the same layout as [`Rank1Local`].
pub fn bessel_local(k: f64, u: f64) -> Result<Rank1Local> {
    check_k(k)?;
    let s = sph_bessel_local(k - 0.5, u)?;
    Ok(Rank1Local {
        log_e: s.log_value,
        dlog: if u < 0.0 { -s.d1 } else { s.d1 },
        d2_ratio: s.d2,
    })
}
