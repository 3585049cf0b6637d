//! Numerical quadrature: globally adaptive Gauss–Kronrod (7/15) on finite
//! intervals and Gauss–Jacobi rules for endpoint-singular weights.

use crate::error::{Error, Result};
use crate::logvalue::LogValue;
use statrs::function::gamma::ln_gamma;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_225,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Tolerances and subdivision budget for [`integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_intervals: 4000,
        }
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
}

/// Single 15-point Kronrod panel; returns (kronrod, |kronrod - gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`, bisecting the panel
/// with the largest error estimate until the total estimate meets
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, cfg: &QuadConfig) -> Result<Integral> {
    if a == b {
        return Ok(Integral {
            value: 0.0,
            error: 0.0,
        });
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Panel {
        a,
        b,
        value: v,
        error: e,
    });
    let mut total = v;
    let mut err = e;
    let mut n = 1;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if err <= tol {
            break;
        }
        if n >= cfg.max_intervals {
            if err <= 100.0 * tol {
                break;
            }
            return Err(Error::QuadratureNonConvergence {
                estimate: total,
                error: err,
            });
        }
        let p = heap.pop().expect("heap is never empty");
        let m = 0.5 * (p.a + p.b);
        if m <= p.a || m >= p.b {
            // interval can no longer be split in floating point
            heap.push(Panel { error: 0.0, ..p });
            err = heap.iter().map(|q| q.error).sum();
            continue;
        }
        let (v1, e1) = gk15(&mut f, p.a, m);
        let (v2, e2) = gk15(&mut f, m, p.b);
        total += v1 + v2 - p.value;
        err += e1 + e2 - p.error;
        heap.push(Panel {
            a: p.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            value: v2,
            error: e2,
        });
        n += 1;
        if n % 64 == 0 {
            // resynchronise the running sums against drift
            total = heap.iter().map(|q| q.value).sum();
            err = heap.iter().map(|q| q.error).sum();
        }
    }
    let value: f64 = heap.iter().map(|q| q.value).sum();
    Ok(Integral { value, error: err })
}

/// Integrates over consecutive pieces `[b_0,b_1], [b_1,b_2], …`, splitting at
/// known kinks or singular points.
pub fn integrate_pieces<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], cfg: &QuadConfig) -> Result<Integral> {
    let mut out = Integral {
        value: 0.0,
        error: 0.0,
    };
    for w in breaks.windows(2) {
        let r = integrate(&mut f, w[0], w[1], cfg)?;
        out.value += r.value;
        out.error += r.error;
    }
    Ok(out)
}

/// Gauss–Jacobi rule for the weight `(1-t)^alpha (1+t)^beta` on `[-1, 1]`.
///
/// Nodes start from the eigenvalues of the Jacobi matrix and are polished
/// by Newton iteration on the three-term recurrence; weights use the
/// closed form `∝ 1/(P_n'·P_{n-1})` at the polished nodes, which keeps tiny
/// endpoint weights accurate to full relative precision.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussJacobi {
    pub alpha: f64,
    pub beta: f64,
    nodes: Vec<f64>,
    log_weights: Vec<f64>,
}

impl GaussJacobi {
    pub fn new(n: usize, alpha: f64, beta: f64) -> Result<Self> {
        if n < 2 || alpha <= -1.0 || beta <= -1.0 {
            return Err(Error::InvalidArgument(format!(
                "Gauss-Jacobi needs n >= 2, alpha, beta > -1 (got n={n}, alpha={alpha}, beta={beta})"
            )));
        }
        let ab = alpha + beta;
        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n];
        for (j, d) in diag.iter_mut().enumerate() {
            let jf = j as f64;
            let s = 2.0 * jf + ab;
            *d = if j == 0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            };
        }
        for (j, o) in off.iter_mut().enumerate().skip(1) {
            let jf = j as f64;
            let s = 2.0 * jf + ab;
            *o = if j == 1 {
                // (j+α+β)/(2j+α+β-1) cancels to 1; written out to avoid 0/0 at α+β = -1
                (4.0 * (1.0 + alpha) * (1.0 + beta) / (s * s * (s + 1.0))).sqrt()
            } else {
                let num = 4.0 * jf * (jf + alpha) * (jf + beta) * (jf + ab);
                let den = s * s * (s + 1.0) * (s - 1.0);
                (num / den).sqrt()
            };
        }
        let mut guesses = tridiagonal_eigenvalues(diag, off)?;
        guesses.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));

        let mut nodes = Vec::with_capacity(n);
        let mut log_weights = Vec::with_capacity(n);
        for z0 in guesses {
            let mut z = z0.clamp(-1.0 + 1e-300, 1.0 - 1e-300);
            let mut pp = 0.0;
            let mut p2 = 0.0;
            for _ in 0..100 {
                let (p1, p2n, ppn) = jacobi_eval(n, alpha, beta, z);
                pp = ppn;
                p2 = p2n;
                let dz = p1 / pp;
                let znew = z - dz;
                let done = (znew - z).abs() <= 1e-15 * znew.abs().max(1e-3);
                z = znew;
                if done {
                    let (_, p2n, ppn) = jacobi_eval(n, alpha, beta, z);
                    pp = ppn;
                    p2 = p2n;
                    break;
                }
            }
            nodes.push(z);
            log_weights.push(-(pp * p2).abs().ln());
        }
        // The n-dependent Gamma-ratio prefactor is replaced by normalizing to
        // the exact zeroth moment; lnΓ at arguments near n would cost ~1e-12
        // in absolute log accuracy.
        let mu0 = (ab + 1.0) * std::f64::consts::LN_2 + ln_gamma(alpha + 1.0) + ln_gamma(beta + 1.0)
            - ln_gamma(ab + 2.0);
        let total = LogValue::sum(log_weights.iter().map(|&w| LogValue::from_log(w))).ln();
        for w in log_weights.iter_mut() {
            *w += mu0 - total;
        }
        Ok(Self {
            alpha,
            beta,
            nodes,
            log_weights,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `∫_{-1}^{1} (1-t)^α (1+t)^β exp(g(t)) dt` with `g` supplied in log
    /// scale.
    pub fn integrate_exp<G: Fn(f64) -> f64>(&self, g: G) -> LogValue {
        LogValue::sum(
            self.nodes
                .iter()
                .zip(&self.log_weights)
                .map(|(&t, &lw)| LogValue::from_log(lw + g(t))),
        )
    }

    pub fn integrate<G: Fn(f64) -> f64>(&self, g: G) -> f64 {
        self.nodes
            .iter()
            .zip(&self.log_weights)
            .map(|(&t, &lw)| lw.exp() * g(t))
            .sum()
    }
}

/// Returns `(P_n(z), P_{n-1}(z), P_n'(z))` for Jacobi polynomials.
fn jacobi_eval(n: usize, alpha: f64, beta: f64, z: f64) -> (f64, f64, f64) {
    let ab = alpha + beta;
    let mut temp = 2.0 + ab;
    let mut p1 = (alpha - beta + temp * z) / 2.0;
    let mut p2 = 1.0;
    for j in 2..=n {
        let jf = j as f64;
        let p3 = p2;
        p2 = p1;
        temp = 2.0 * jf + ab;
        let a = 2.0 * jf * (jf + ab) * (temp - 2.0);
        let b = (temp - 1.0) * (alpha * alpha - beta * beta + temp * (temp - 2.0) * z);
        let c = 2.0 * (jf - 1.0 + alpha) * (jf - 1.0 + beta) * temp;
        p1 = (b * p2 - c * p3) / a;
    }
    let nf = n as f64;
    let pp = (nf * (alpha - beta - temp * z) * p1 + 2.0 * (nf + alpha) * (nf + beta) * p2)
        / (temp * (1.0 - z * z));
    (p1, p2, pp)
}

/// Eigenvalues of a symmetric tridiagonal matrix by implicit QL with
/// Wilkinson shifts. `off[0]` is ignored; `off[i]` couples rows `i-1, i`.
fn tridiagonal_eigenvalues(mut d: Vec<f64>, off: Vec<f64>) -> Result<Vec<f64>> {
    let n = d.len();
    let mut e = vec![0.0; n];
    e[..(n - 1)].copy_from_slice(&off[1..n]);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::JacobiNonConvergence { sweeps: iter });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut early = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    early = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if early {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}
