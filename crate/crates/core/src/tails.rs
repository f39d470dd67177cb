//! Regularly varying tail laws and the time/space scales of the N-BRW.
//!
//! A law is given by its tail function `h`, with `P(X > x) = 1/h(x)`.
//! Both supported families satisfy `h = 1` on `[0, 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance of the bisection used by [`TailLaw::h_inverse`].
pub const INVERSE_RTOL: f64 = 1e-12;

/// Supported tail families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `h(x) = x^α` for `x ≥ 1`.
    Pareto,
    /// `h(x) = x^α ln(e + x) / ln(e + 1)` for `x ≥ 1`.
    ParetoLog,
}

impl Family {
    /// Stable lowercase name used in configs and file headers.
    pub fn name(self) -> &'static str {
        match self {
            Family::Pareto => "pareto",
            Family::ParetoLog => "pareto_log",
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "pareto" => Ok(Family::Pareto),
            "pareto_log" => Ok(Family::ParetoLog),
            other => domain(format!("unknown law family {other:?}")),
        }
    }
}

/// A jump law with regularly varying tail of index `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailLaw {
    pub family: Family,
    pub alpha: f64,
}

fn log_norm() -> f64 {
    (std::f64::consts::E + 1.0).ln()
}

impl TailLaw {
    /// Validated constructor; `alpha` must be positive and finite.
    pub fn new(family: Family, alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return domain(format!("alpha must be positive and finite, got {alpha}"));
        }
        Ok(TailLaw { family, alpha })
    }

    /// Pure power law.
    pub fn pareto(alpha: f64) -> Result<Self> {
        Self::new(Family::Pareto, alpha)
    }

    /// Power law with a logarithmic slowly varying factor.
    pub fn pareto_log(alpha: f64) -> Result<Self> {
        Self::new(Family::ParetoLog, alpha)
    }

    /// The tail function `h(x)`; values below 1 (including negatives) map to 1.
    pub fn h(&self, x: f64) -> f64 {
        if x < 1.0 {
            return 1.0;
        }
        match self.family {
            Family::Pareto => x.powf(self.alpha),
            Family::ParetoLog => x.powf(self.alpha) * (std::f64::consts::E + x).ln() / log_norm(),
        }
    }

    /// `P(X > x) = 1/h(x)` for `x ≥ 0`.
    pub fn survival(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return domain(format!("survival needs x >= 0, got {x}"));
        }
        Ok(1.0 / self.h(x))
    }

    /// Generalized inverse `inf{z ≥ 0 : h(z) > y}`.
    ///
    /// Exact for `pareto`; bisection to relative tolerance [`INVERSE_RTOL`]
    /// for `pareto_log`. Negative and NaN inputs return 0.
    pub fn h_inverse(&self, y: f64) -> f64 {
        if !(y >= 1.0) {
            return 0.0;
        }
        if y.is_infinite() {
            return f64::INFINITY;
        }
        match self.family {
            Family::Pareto => y.powf(1.0 / self.alpha),
            Family::ParetoLog => bisect_inverse(|z| self.h(z), y),
        }
    }

    /// Inverse-transform sampler: `h⁻¹(1/u)` for `u ∈ (0, 1)`.
    pub fn sample_jump(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return domain(format!("sample_jump needs u in (0,1), got {u}"));
        }
        Ok(self.h_inverse(1.0 / u))
    }

    /// Unchecked sampler used on hot paths where `u ∈ (0,1)` by construction.
    #[inline]
    pub fn jump_from_uniform(&self, u: f64) -> f64 {
        debug_assert!(u > 0.0 && u < 1.0);
        self.h_inverse(1.0 / u)
    }
}

/// Smallest `z` with `h(z) > y` for a non-decreasing `h`, with `y ≥ 1`.
///
/// The bracket `[lo, hi]` keeps `h(lo) ≤ y < h(hi)`; it starts at `[0, 1]`
/// and doubles until `h(hi) > y`.
fn bisect_inverse(h: impl Fn(f64) -> f64, y: f64) -> f64 {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while h(hi) <= y {
        lo = hi;
        hi *= 2.0;
        if hi.is_infinite() {
            return f64::INFINITY;
        }
    }
    while hi - lo > INVERSE_RTOL * hi {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) > y {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `ℓ_N = ⌈log₂ N⌉` in integer arithmetic.
pub fn time_scale(n: u64) -> Result<u32> {
    if n < 2 {
        return domain(format!("N must be at least 2, got {n}"));
    }
    Ok(64 - (n - 1).leading_zeros())
}

/// `a_N = h⁻¹(2 N ℓ_N)`.
pub fn space_scale(law: &TailLaw, n: u64) -> Result<f64> {
    let ell = time_scale(n)?;
    Ok(law.h_inverse(2.0 * n as f64 * ell as f64))
}

/// `ε_N ℓ_N := max(1, ⌊log₂(ell) / 4⌋)`, computed on integers.
pub fn epsilon_schedule(ell: u32) -> u32 {
    let floor_log2 = if ell == 0 { 0 } else { 31 - ell.leading_zeros() };
    (floor_log2 / 4).max(1)
}

/// Whether [`epsilon_schedule`] was clamped up to 1 for this `ell`.
pub fn epsilon_clamped(ell: u32) -> bool {
    ell < 16
}

/// Scales attached to a population size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub n_particles: u64,
    pub ell: u32,
    pub a: f64,
    pub eps_ell: u32,
}

impl Scales {
    /// Derive all scales for `law` at population size `n`.
    pub fn new(law: &TailLaw, n: u64) -> Result<Self> {
        let ell = time_scale(n)?;
        Ok(Scales { n_particles: n, ell, a: space_scale(law, n)?, eps_ell: epsilon_schedule(ell) })
    }

    /// `t_i = t − i ℓ_N`, or `None` when negative.
    pub fn t_i(&self, t: u32, i: u32) -> Option<u32> {
        t.checked_sub(i * self.ell)
    }
}

/// Constants of a Potter-type envelope verified on a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PotterCertificate {
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Constants with `1/h(x) ≤ C1 x^{ε−α}` and `h(x) ≤ C2 x^{α+ε}` on the grid.
///
/// Both constants are floored at 1 and `B = 1`; the bounds are evaluated
/// directly, so the certificate is only as strong as the grid.
pub fn potter_certificate(law: &TailLaw, eps: f64, grid: &[f64]) -> Result<PotterCertificate> {
    if !(eps > 0.0 && eps.is_finite()) {
        return domain(format!("eps must be positive, got {eps}"));
    }
    if grid.is_empty() {
        return domain("potter_certificate needs a non-empty grid");
    }
    let mut c1 = 1.0_f64;
    let mut c2 = 1.0_f64;
    for &x in grid {
        if !(x >= 1.0 && x.is_finite()) {
            return domain(format!("grid points must be finite and >= 1, got {x}"));
        }
        c1 = c1.max((1.0 / law.h(x)) / x.powf(eps - law.alpha));
        c2 = c2.max(law.h(x) / x.powf(law.alpha + eps));
    }
    Ok(PotterCertificate { b: 1.0, c1, c2 })
}
