//! Constant schedules `η, γ, δ, ρ, c₁…c₆, K, ν` for event evaluation.
//!
//! The derived schedule follows the fixed recipe from `η` and `α`; its
//! constants shrink doubly exponentially, so it is computed in log space
//! first and converted only when every constant is a normal `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Which family a schedule belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Produced by [`schedule_from_eta`].
    PaperDerived,
    /// Satisfies the ordering chain but was chosen freely.
    Legal,
    /// Violates the chain; only meaningful for descriptive statistics.
    Probe,
}

/// Constants used by the events, with `c[j-1] = c_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantSchedule {
    pub eta: f64,
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub c: [f64; 6],
    #[serde(rename = "K")]
    pub k: f64,
    pub nu: f64,
    pub alpha: f64,
    /// True when produced by [`schedule_from_eta`].
    pub derived: bool,
}

/// Default sample size used to pick `ν = η / (2M²)`.
pub const DEFAULT_M: usize = 4;

impl ConstantSchedule {
    pub fn c1(&self) -> f64 {
        self.c[0]
    }
    pub fn c2(&self) -> f64 {
        self.c[1]
    }
    pub fn c3(&self) -> f64 {
        self.c[2]
    }
    pub fn c4(&self) -> f64 {
        self.c[3]
    }
    pub fn c5(&self) -> f64 {
        self.c[4]
    }
    pub fn c6(&self) -> f64 {
        self.c[5]
    }

    /// First violated link of the ordering chain, if any.
    pub fn chain_violation(&self) -> Option<String> {
        let all = [self.eta, self.gamma, self.delta, self.rho, self.k, self.nu, self.alpha];
        if all.iter().chain(&self.c).any(|x| !x.is_finite() || *x <= 0.0) {
            return Some("all constants must be finite and positive".into());
        }
        if !(self.gamma < self.delta && self.delta < self.rho) {
            return Some("need γ < δ < ρ".into());
        }
        if 10.0 * self.rho >= self.c[0] {
            return Some("need 10ρ < c₁".into());
        }
        for j in 0..5 {
            if 10.0 * self.c[j] >= self.c[j + 1] {
                return Some(format!("need 10c{} < c{}", j + 1, j + 2));
            }
        }
        if self.c[5] >= self.eta || self.eta > 1.0 {
            return Some("need c₆ < η ≤ 1".into());
        }
        if self.k <= self.rho.powf(-self.alpha) {
            return Some("need K > ρ^(−α)".into());
        }
        None
    }

    pub fn regime(&self) -> Regime {
        if self.chain_violation().is_some() {
            Regime::Probe
        } else if self.derived {
            Regime::PaperDerived
        } else {
            Regime::Legal
        }
    }

    /// A legal schedule with `η` close to 1 and neighbouring constants a
    /// factor `10.05` apart, so that fixtures can realise the events at
    /// moderate `N`. `δ` sits just below `ρ` and `γ` far below `δ`.
    pub fn relaxed(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return domain(format!("alpha must be positive, got {alpha}"));
        }
        let eta = 0.99;
        let mut c = [0.0; 6];
        c[5] = 0.98;
        for j in (0..5).rev() {
            c[j] = c[j + 1] / 10.05;
        }
        let rho = c[0] / 10.05;
        let delta = rho * 0.999;
        let gamma = delta * 1e-3;
        let s = ConstantSchedule {
            eta,
            gamma,
            delta,
            rho,
            c,
            k: rho.powf(-alpha) * 1.01,
            nu: eta / (2.0 * (DEFAULT_M * DEFAULT_M) as f64),
            alpha,
            derived: false,
        };
        debug_assert!(s.chain_violation().is_none());
        Ok(s)
    }

    /// A descriptive schedule with a chosen `η` and big-jump level `ρ`.
    ///
    /// `δ = ρ/2` and `γ = ρ/4`; the `c_j` descend from `c₆ = η/2` by factors
    /// of 10. The chain `10ρ < c₁` fails, so the regime is [`Regime::Probe`].
    pub fn probe(alpha: f64, eta: f64, rho: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return domain(format!("eta must lie in (0,1], got {eta}"));
        }
        if !(rho > 0.0 && rho.is_finite()) || !(alpha > 0.0 && alpha.is_finite()) {
            return domain("rho and alpha must be positive");
        }
        let mut c = [0.0; 6];
        c[5] = eta / 2.0;
        for j in (0..5).rev() {
            c[j] = c[j + 1] / 10.0;
        }
        Ok(ConstantSchedule {
            eta,
            gamma: rho / 4.0,
            delta: rho / 2.0,
            rho,
            c,
            k: rho.powf(-alpha) * 2.0,
            nu: eta / (2.0 * (DEFAULT_M * DEFAULT_M) as f64),
            alpha,
            derived: false,
        })
    }

    /// Replace `ν`, e.g. with `η / (2M²)` for another sample size.
    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }
}

/// Natural logarithms of the derived constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogSchedule {
    pub eta: f64,
    pub alpha: f64,
    pub ln_gamma: f64,
    pub ln_delta: f64,
    pub ln_rho: f64,
    pub ln_c: [f64; 6],
    #[serde(rename = "ln_K")]
    pub ln_k: f64,
    /// Halving counts chosen for `c₃` and `c₂`.
    pub halvings: [u32; 2],
    /// Whether `η` is small enough for the probability bounds.
    pub eta_small: bool,
}

/// `(1 − p x)^α ≥ 1 − 2αp x` with `x = exp(ln_x)`, evaluated stably.
fn ratio_condition(ln_x: f64, p: f64, alpha: f64) -> bool {
    let x = ln_x.exp();
    let rhs = 1.0 - 2.0 * alpha * p * x;
    let base = 1.0 - p * x;
    if base < 0.0 {
        return false;
    }
    if rhs <= 0.0 {
        return true;
    }
    alpha * (-p * x).ln_1p() >= (-2.0 * alpha * p * x).ln_1p()
}

/// Largest `ln(cap) − k ln 2`, `k ≥ 1`, meeting the ratio condition against `ln_upper`.
fn halving_search(ln_cap: f64, ln_upper: f64, p: f64, alpha: f64) -> (f64, u32) {
    let mut k = 1u32;
    loop {
        let ln_c = ln_cap - k as f64 * std::f64::consts::LN_2;
        if ratio_condition(ln_c - ln_upper, p, alpha) || k >= 4096 {
            return (ln_c, k);
        }
        k += 1;
    }
}

/// The `η`-smallness condition
/// `η² < min((2^{α+2} log(1000/η))^{−1/α}, η / (1000·2^α))`.
pub fn eta_small_enough(eta: f64, alpha: f64) -> bool {
    let first = (2f64.powf(alpha + 2.0) * (1000.0 / eta).ln()).powf(-1.0 / alpha);
    let second = eta / (1000.0 * 2f64.powf(alpha));
    eta * eta < first.min(second)
}

impl LogSchedule {
    /// Derive every constant from `η` and `α` in log space.
    pub fn from_eta(eta: f64, alpha: f64) -> Result<Self> {
        if !(eta > 0.0 && eta <= 1.0) {
            return domain(format!("eta must lie in (0,1], got {eta}"));
        }
        if !(alpha > 0.0 && alpha.is_finite()) {
            return domain(format!("alpha must be positive, got {alpha}"));
        }
        let (amax, amin) = (alpha.max(1.0), alpha.min(1.0));
        let ln_eta = eta.ln();
        let mut ln_c = [0.0; 6];
        ln_c[5] = 2.0 * ln_eta;
        ln_c[4] = 6.0 * amax * ln_eta;
        ln_c[3] = 4.0 / amin * ln_c[4];
        let (c3, k3) = halving_search(4.0 * amax * ln_c[3], ln_c[3], 6.0, alpha);
        ln_c[2] = c3;
        let (c2, k2) = halving_search(4.0 * amax * ln_c[2], ln_c[2], 4.0, alpha);
        ln_c[1] = c2;
        ln_c[0] = 2.0 * ln_c[1];
        let ln_rho = ln_c[0] + 2.0 * amin.ln() - (100.0 * alpha).ln();
        let ln_delta = (alpha + 1.0) * ln_rho;
        Ok(LogSchedule {
            eta,
            alpha,
            ln_gamma: ln_delta - std::f64::consts::LN_2,
            ln_delta,
            ln_rho,
            ln_c,
            ln_k: -(alpha + 1.0) * ln_rho,
            halvings: [k3, k2],
            eta_small: eta_small_enough(eta, alpha),
        })
    }

    /// Convert to plain constants, failing when any would be subnormal or infinite.
    pub fn to_schedule(&self) -> Result<ConstantSchedule> {
        let ln_min = f64::MIN_POSITIVE.ln();
        let ln_max = f64::MAX.ln();
        let mut lows = vec![("gamma", self.ln_gamma), ("delta", self.ln_delta), ("rho", self.ln_rho)];
        for (j, &l) in self.ln_c.iter().enumerate() {
            lows.push((["c1", "c2", "c3", "c4", "c5", "c6"][j], l));
        }
        if let Some((name, l)) = lows.iter().find(|(_, l)| *l < ln_min) {
            return Err(Error::ScaleInfeasible(format!(
                "{name} = exp({l:.4e}) underflows f64 for eta = {}, alpha = {}",
                self.eta, self.alpha
            )));
        }
        if self.ln_k > ln_max {
            return Err(Error::ScaleInfeasible(format!("K = exp({:.4e}) overflows f64", self.ln_k)));
        }
        let mut c = [0.0; 6];
        for (x, l) in c.iter_mut().zip(&self.ln_c) {
            *x = l.exp();
        }
        Ok(ConstantSchedule {
            eta: self.eta,
            gamma: self.ln_gamma.exp(),
            delta: self.ln_delta.exp(),
            rho: self.ln_rho.exp(),
            c,
            k: self.ln_k.exp(),
            nu: self.eta / (2.0 * (DEFAULT_M * DEFAULT_M) as f64),
            alpha: self.alpha,
            derived: true,
        })
    }
}

/// The derived schedule as plain numbers.
pub fn schedule_from_eta(eta: f64, alpha: f64) -> Result<ConstantSchedule> {
    LogSchedule::from_eta(eta, alpha)?.to_schedule()
}
