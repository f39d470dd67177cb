//! Numeric checks of the exponential-moment identity for truncated variables
//! and of the exponential-Markov bound on truncated random-walk sums.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::quadrature::{integrate, integrate_pieces, QuadOptions};
use crate::rng::{Domain, NodeKey, Stream};
use crate::stats::{wilson, Welford};
use crate::tails::{time_scale, TailLaw};

/// Largest admitted exponent `v K₂`.
pub const EXP_GUARD: f64 = 700.0;

/// Both sides of `E[exp(vY 1{Y≤K₂}) 1{Y≥K₁}] = ∫_{K₁}^{K₂} v e^{vu} P(Y>u) du
/// + e^{vK₁} P(Y≥K₁) − (e^{vK₂}−1) P(Y>K₂)`, plus a Monte-Carlo LHS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityCheck {
    /// LHS by quadrature of `e^{vQ(u)}` over the survival level `u`.
    pub lhs: f64,
    /// RHS by quadrature of the survival function.
    pub rhs: f64,
    pub abs_diff: f64,
    pub mc_mean: f64,
    pub mc_se: f64,
    pub samples: u64,
}

impl IdentityCheck {
    /// `|MC − RHS|` in standard errors; 0 when both agree exactly.
    pub fn mc_z(&self) -> f64 {
        let d = (self.mc_mean - self.rhs).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.mc_se
        }
    }
}

fn quad_opts() -> QuadOptions {
    QuadOptions { abs_tol: 1e-12, rel_tol: 1e-15, max_intervals: 4000 }
}

/// Breakpoints of `[lo, hi]` at the kink of the survival function at 1.
fn breaks(lo: f64, hi: f64) -> Vec<f64> {
    if lo < 1.0 && 1.0 < hi {
        vec![lo, 1.0, hi]
    } else {
        vec![lo, hi]
    }
}

/// Check the identity for `Y` with law `law`; `K₁ = K₂` is the degenerate limit.
pub fn gantert_identity_check(law: &TailLaw, v: f64, k1: f64, k2: f64, samples: u64, seed: u64) -> Result<IdentityCheck> {
    if !(v > 0.0 && v.is_finite() && k1 > 0.0 && k1 <= k2 && k2.is_finite()) {
        return domain(format!("need v > 0 and 0 < K1 <= K2 < inf, got v = {v}, K1 = {k1}, K2 = {k2}"));
    }
    if v * k2 > EXP_GUARD {
        return domain(format!("v K2 = {} exceeds {EXP_GUARD}; rescale v or K2", v * k2));
    }
    let s1 = law.survival(k1)?;
    let s2 = law.survival(k2)?;
    // Y ∈ [K₁, K₂] exactly when the uniform U = 1/h(Y) lies in [S(K₂), S(K₁)].
    let lhs = integrate(|u| (v * law.h_inverse(1.0 / u)).exp(), s2, s1, quad_opts())?.value + s2;
    let integral = integrate_pieces(|u| v * (v * u).exp() / law.h(u), &breaks(k1, k2), quad_opts())?.value;
    let rhs = integral + (v * k1).exp() * s1 - (v * k2).exp_m1() * s2;
    let mut stream = Stream::new(NodeKey::domain(Domain::MonteCarlo, seed));
    let mut w = Welford::default();
    for _ in 0..samples {
        let y = law.jump_from_uniform(stream.next_f64());
        let z = if y < k1 {
            0.0
        } else if y <= k2 {
            (v * y).exp()
        } else {
            1.0
        };
        w.push(z);
    }
    Ok(IdentityCheck { lhs, rhs, abs_diff: (lhs - rhs).abs(), mc_mean: w.mean, mc_se: w.se(), samples })
}

/// Outcome of the truncated-sum comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundVerdict {
    /// The estimate does not exceed the bound significantly.
    Pass,
    /// The lower Wilson limit lies above the bound.
    Fail,
    /// `(2q ln 2, λ(1∧α) ln 2/(4r))` is empty; `c = 4q ln 2` was used.
    WindowEmpty,
}

/// Inputs of [`truncated_sum_bound_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSumParams {
    /// Number of steps is `m ℓ_N`.
    pub m: u32,
    pub r: f64,
    pub lambda: f64,
    pub n: u64,
    pub samples: u64,
    pub seed: u64,
    /// Target exponent; defaults to `λ(1∧α)/(16r)`, which leaves the window nonempty.
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedSumCheck {
    pub ell: u32,
    pub x_n: f64,
    pub q: f64,
    pub c: f64,
    /// `E[e^{c ℓ_N X̃ / x_N}]`.
    pub moment: f64,
    /// `e^{−cℓ_N} E[e^{c ℓ_N X̃ / x_N}]^{mℓ_N}`.
    pub bound: f64,
    pub hits: u64,
    pub samples: u64,
    pub estimate: f64,
    /// Wilson interval at three standard errors.
    pub lower: f64,
    pub upper: f64,
    /// Whether the whole interval lies below the bound.
    pub resolved: bool,
    pub verdict: BoundVerdict,
}

/// `E[e^{vX̃}]` for `X̃ = X 1{X ≤ K}`, via the identity with `K₁ → 0`.
pub fn truncated_moment(law: &TailLaw, v: f64, k: f64) -> Result<f64> {
    if !(v >= 0.0 && k > 0.0 && k.is_finite()) {
        return domain(format!("need v >= 0 and K > 0, got v = {v}, K = {k}"));
    }
    if v * k > EXP_GUARD {
        return domain(format!("v K = {} exceeds {EXP_GUARD}", v * k));
    }
    let integral = integrate_pieces(|u| v * (v * u).exp() * law.survival(u).unwrap_or(1.0), &breaks(0.0, k), quad_opts())?;
    Ok(integral.value + 1.0 - (v * k).exp_m1() * law.survival(k)?)
}

/// Compare a Monte-Carlo estimate of `P(Σ_{j≤mℓ_N} X̃_j ≥ x_N)` with its
/// exponential-Markov bound, `x_N = N^λ (1 + 10⁻⁹)` and `X̃ = X 1{X ≤ r x_N}`.
pub fn truncated_sum_bound_check(law: &TailLaw, p: &TruncatedSumParams) -> Result<TruncatedSumCheck> {
    if !(p.r > 0.0 && p.r < 1.0) {
        return domain(format!("r must lie in (0, 1), got {}", p.r));
    }
    if !(p.lambda > 0.0 && p.lambda.is_finite()) || p.m == 0 || p.samples == 0 {
        return domain("need lambda > 0, m >= 1 and samples >= 1");
    }
    let ell = time_scale(p.n)?.max(1);
    let x_n = (p.n as f64).powf(p.lambda) * (1.0 + 1e-9);
    let slope = p.lambda * law.alpha.min(1.0) * std::f64::consts::LN_2;
    let q = p.q.unwrap_or(p.lambda * law.alpha.min(1.0) / (16.0 * p.r));
    let (lo, hi) = (2.0 * q * std::f64::consts::LN_2, slope / (4.0 * p.r));
    let (c, window_ok) = if lo < hi { (0.5 * (lo + hi), true) } else { (2.0 * lo, false) };
    let cl = c * ell as f64;
    let k = p.r * x_n;
    let moment = truncated_moment(law, cl / x_n, k)?;
    let steps = p.m as u64 * ell as u64;
    let bound = (-cl + steps as f64 * moment.ln()).exp();

    let mut stream = Stream::new(NodeKey::domain(Domain::MonteCarlo, p.seed ^ 0x7275_6e63));
    let mut hits = 0u64;
    for _ in 0..p.samples {
        let mut sum = 0.0;
        for _ in 0..steps {
            let x = law.jump_from_uniform(stream.next_f64());
            if x <= k {
                sum += x;
            }
        }
        hits += (sum >= x_n) as u64;
    }
    let (lower, upper) = wilson(hits, p.samples, 3.0);
    let verdict = if !window_ok {
        BoundVerdict::WindowEmpty
    } else if lower <= bound {
        BoundVerdict::Pass
    } else {
        BoundVerdict::Fail
    };
    Ok(TruncatedSumCheck {
        ell,
        x_n,
        q,
        c,
        moment,
        bound,
        hits,
        samples: p.samples,
        estimate: hits as f64 / p.samples as f64,
        lower,
        upper,
        resolved: upper <= bound,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pareto(alpha: f64) -> TailLaw {
        TailLaw::pareto(alpha).unwrap()
    }

    #[test]
    fn degenerate_limits_reduce_to_the_survival() {
        let law = pareto(2.0);
        let c = gantert_identity_check(&law, 1.0, 3.0, 3.0, 1000, 1).unwrap();
        let s = 1.0 / 9.0;
        assert_relative_eq!(c.lhs, s, max_relative = 1e-14);
        assert_relative_eq!(c.rhs, s, max_relative = 1e-14);
    }

    #[test]
    fn closed_form_for_pareto_two() {
        // E[e^{Y} 1{1≤Y≤2}] + P(Y>2) with density 2y^{-3} on [1, ∞).
        let oracle = {
            let f = |y: f64| 2.0 * y.exp() / (y * y * y);
            // Composite Simpson with 2·10⁵ panels, independent of the library quadrature.
            let n = 200_000;
            let h = 1.0 / n as f64;
            let mut s = f(1.0) + f(2.0);
            for i in 1..n {
                s += f(1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            s * h / 3.0 + 0.25
        };
        let c = gantert_identity_check(&pareto(2.0), 1.0, 1.0, 2.0, 200_000, 7).unwrap();
        assert_relative_eq!(c.lhs, oracle, max_relative = 1e-12);
        assert!(c.abs_diff < 1e-8, "{c:?}");
        assert!(c.mc_z() < 3.0, "{c:?}");
    }

    #[test]
    fn overflow_and_domain_guards() {
        assert!(gantert_identity_check(&pareto(1.0), 100.0, 1.0, 8.0, 10, 1).is_err());
        assert!(gantert_identity_check(&pareto(1.0), 1.0, 3.0, 2.0, 10, 1).is_err());
        let p = TruncatedSumParams { m: 2, r: 1.0, lambda: 0.6, n: 1024, samples: 10, seed: 1, q: None };
        assert!(truncated_sum_bound_check(&pareto(1.0), &p).is_err());
    }

    #[test]
    fn truncation_below_one_gives_zero_probability() {
        // r x_N < 1: every truncated Pareto jump is 0, so the sum never reaches x_N.
        let p = TruncatedSumParams { m: 2, r: 0.01, lambda: 0.5, n: 1024, samples: 2000, seed: 3, q: None };
        let c = truncated_sum_bound_check(&pareto(1.0), &p).unwrap();
        assert!(c.x_n * 0.01 < 1.0);
        assert_eq!(c.hits, 0);
        assert_relative_eq!(c.moment, 1.0, max_relative = 1e-12);
        assert!(c.bound > 0.0);
        assert_eq!(c.verdict, BoundVerdict::Pass);
    }

    #[test]
    fn single_step_with_huge_target_never_hits() {
        let p = TruncatedSumParams { m: 1, r: 0.5, lambda: 3.0, n: 2, samples: 5000, seed: 4, q: None };
        let c = truncated_sum_bound_check(&pareto(1.0), &p).unwrap();
        assert_eq!(c.ell, 1);
        assert_eq!(c.hits, 0);
        assert_eq!(c.verdict, BoundVerdict::Pass);
    }

    #[test]
    fn empty_window_is_flagged() {
        let p = TruncatedSumParams { m: 2, r: 0.1, lambda: 0.6, n: 1024, samples: 100, seed: 5, q: Some(10.0) };
        let c = truncated_sum_bound_check(&pareto(1.0), &p).unwrap();
        assert_eq!(c.verdict, BoundVerdict::WindowEmpty);
        assert_relative_eq!(c.c, 40.0 * std::f64::consts::LN_2);
    }

    #[test]
    fn truncated_moment_matches_direct_expectation() {
        // E[e^{vX̃}] = P(X > K) + ∫_1^K e^{vx} x^{-2} dx for Pareto(1).
        let (v, k) = (0.3, 5.0);
        let n = 100_000;
        let h = (k - 1.0) / n as f64;
        let f = |x: f64| (v * x).exp() / (x * x);
        let mut s = f(1.0) + f(k);
        for i in 1..n {
            s += f(1.0 + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = s * h / 3.0 + 1.0 / k;
        assert_relative_eq!(truncated_moment(&pareto(1.0), v, k).unwrap(), oracle, max_relative = 1e-12);
    }
}
