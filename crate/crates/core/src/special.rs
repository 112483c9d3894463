//! Special functions backing the Student-t distribution.
//!
//! The regularized incomplete beta function is evaluated with the modified
//! Lentz continued fraction. Callers pass both `x` and `1 - x` so that the
//! complement can be formed without cancellation; the t tail probabilities
//! rely on this near the centre of the distribution.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum SpecialError {
    #[error("argument outside the function domain")]
    Domain,
    #[error("continued fraction did not converge")]
    NoConvergence,
}

const MAX_ITER: usize = 20_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

pub fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn betainc(a: f64, b: f64, x: f64) -> Result<f64, SpecialError> {
    inc_beta(a, b, x, 1.0 - x).map(|(p, _)| p)
}

/// Returns `(I_x(a, b), 1 - I_x(a, b))` with `y = 1 - x` supplied by the
/// caller. Whichever of the pair is small is computed directly.
pub fn inc_beta(a: f64, b: f64, x: f64, y: f64) -> Result<(f64, f64), SpecialError> {
    if !(a > 0.0 && b > 0.0) || !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(SpecialError::Domain);
    }
    if x == 0.0 {
        return Ok((0.0, 1.0));
    }
    if y == 0.0 {
        return Ok((1.0, 0.0));
    }
    let ln_front = a * libm::log(x) + b * libm::log(y) - ln_beta(a, b);
    if x < (a + 1.0) / (a + b + 2.0) {
        let p = libm::exp(ln_front) * continued_fraction(a, b, x)? / a;
        Ok((p, 1.0 - p))
    } else {
        let q = libm::exp(ln_front) * continued_fraction(b, a, y)? / b;
        Ok((1.0 - q, q))
    }
}

fn continued_fraction(a: f64, b: f64, x: f64) -> Result<f64, SpecialError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let guard = |v: f64| if v.abs() < TINY { TINY } else { v };

    let mut c = 1.0;
    let mut d = 1.0 / guard(1.0 - qab * x / qap);
    let mut h = d;
    for m in 1..=MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 / guard(1.0 + aa * d);
        c = guard(1.0 + aa / c);
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            return Ok(h);
        }
    }
    Err(SpecialError::NoConvergence)
}

/// Student-t with `nu` degrees of freedom, location 0 and scale 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardT {
    nu: f64,
    ln_norm: f64,
}

impl StandardT {
    pub fn new(nu: f64) -> Result<Self, SpecialError> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(SpecialError::Domain);
        }
        let ln_norm = ln_gamma(0.5 * (nu + 1.0))
            - ln_gamma(0.5 * nu)
            - 0.5 * libm::log(nu * core::f64::consts::PI);
        Ok(StandardT { nu, ln_norm })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn ln_pdf(&self, u: f64) -> f64 {
        self.ln_norm - 0.5 * (self.nu + 1.0) * libm::log1p(u * u / self.nu)
    }

    pub fn pdf(&self, u: f64) -> f64 {
        if u.is_infinite() {
            return 0.0;
        }
        libm::exp(self.ln_pdf(u))
    }

    /// `P(T > |u|)`.
    pub fn tail(&self, u: f64) -> f64 {
        if u.is_infinite() {
            return 0.0;
        }
        let u2 = u * u;
        let denom = self.nu + u2;
        // Arguments are in the domain by construction.
        match inc_beta(0.5 * self.nu, 0.5, self.nu / denom, u2 / denom) {
            Ok((p, _)) => 0.5 * p,
            Err(_) => f64::NAN,
        }
    }

    pub fn cdf(&self, u: f64) -> f64 {
        if u < 0.0 {
            self.tail(u)
        } else {
            1.0 - self.tail(u)
        }
    }

    /// Survival function `1 - cdf(u)`, accurate in the upper tail.
    pub fn sf(&self, u: f64) -> f64 {
        if u > 0.0 {
            self.tail(u)
        } else {
            1.0 - self.tail(u)
        }
    }

    /// `∫_a^b u f(u) du`; infinite bounds are allowed when `nu > 1`.
    pub fn partial_first_moment(&self, a: f64, b: f64) -> f64 {
        let nu = self.nu;
        if (nu - 1.0).abs() < 1e-12 {
            // Cauchy: antiderivative ln(1+u²)/(2π).
            let g = |u: f64| libm::log1p(u * u) / (2.0 * core::f64::consts::PI);
            return g(b) - g(a);
        }
        // Antiderivative -(nu + u²) f(u) / (nu - 1).
        let g = |u: f64| {
            if u.is_infinite() {
                0.0
            } else {
                -(nu + u * u) * self.pdf(u) / (nu - 1.0)
            }
        };
        g(b) - g(a)
    }

    /// Quantile for a lower-tail probability `q` in `(0, 1)`.
    pub fn quantile(&self, q: f64) -> Result<f64, SpecialError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(SpecialError::Domain);
        }
        Ok(if q < 0.5 {
            -self.upper_quantile(q)
        } else {
            self.upper_quantile(1.0 - q)
        })
    }

    /// The `u >= 0` with `P(T > u) = p`, for `p` in `[0, 0.5]`.
    ///
    /// `p = 0` maps to `+inf`.
    pub fn upper_quantile(&self, p: f64) -> f64 {
        if p >= 0.5 {
            return 0.0;
        }
        if p <= 0.0 {
            return f64::INFINITY;
        }
        // Bracket the root, keeping tail(lo) >= p > tail(hi).
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.tail(hi) >= p {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::INFINITY;
            }
        }
        // On [0, inf) the tail is convex and decreasing, so Newton from the
        // left end approaches the root monotonically.
        let mut x = lo;
        for _ in 0..400 {
            let g = self.tail(x) - p;
            if g == 0.0 {
                return x;
            }
            let dens = self.pdf(x);
            let mut next = x + g / dens;
            if !(next.is_finite() && next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if g > 0.0 {
                lo = lo.max(x);
            } else {
                hi = hi.min(x);
            }
            if (next - x).abs() <= 4.0 * f64::EPSILON * next.abs().max(1.0) {
                return next;
            }
            x = next;
        }
        x
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / core::f64::consts::SQRT_2)
}
