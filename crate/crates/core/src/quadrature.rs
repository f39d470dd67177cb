//! Globally adaptive Gauss–Kronrod (7, 15) quadrature on finite intervals.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::stats::NeumaierSum;

/// Kronrod abscissae on `[0, 1)`, largest first; odd indices are Gauss nodes.
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
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
/// Gauss weights for `XGK[1], XGK[3], XGK[5]` and the centre.
const WG: [f64; 4] = [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

/// Result of one integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quad {
    pub value: f64,
    /// Sum of the per-interval `|K₁₅ − G₇|` estimates.
    pub error: f64,
    pub intervals: usize,
    pub evaluations: usize,
}

/// Tolerances and limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-10, rel_tol: 1e-14, max_intervals: 4000 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Piece {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    /// The error estimate is at the rounding floor; splitting cannot help.
    floor: bool,
}

impl PartialEq for Piece {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o).is_eq()
    }
}
impl Eq for Piece {}
impl PartialOrd for Piece {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Piece {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        (!self.floor).cmp(&!o.floor).then(self.error.total_cmp(&o.error))
    }
}

fn kronrod(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> Piece {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = NeumaierSum::default();
    let mut g = NeumaierSum::default();
    let mut abs = fc.abs() * WGK[7];
    k.add(fc * WGK[7]);
    g.add(fc * WG[3]);
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        k.add((f1 + f2) * WGK[j]);
        abs += (f1.abs() + f2.abs()) * WGK[j];
        if j % 2 == 1 {
            g.add((f1 + f2) * WG[j / 2]);
        }
    }
    let (kv, gv) = (k.value() * h, g.value() * h);
    // Differences below the rounding level of the panel carry no information.
    let floor = 50.0 * f64::EPSILON * abs * h.abs();
    let diff = (kv - gv).abs();
    Piece { a, b, value: kv, error: diff.max(floor), floor: diff <= floor }
}

/// `∫_a^b f` to `max(abs_tol, rel_tol·|I|)`, splitting the worst panel first.
///
/// Stops early, without error, once every panel is at its rounding floor.
/// Recomputes the running totals each step, which is cheap at these sizes.
pub fn integrate(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, opts: QuadOptions) -> Result<Quad> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Domain(format!("integration limits must be finite, got [{a}, {b}]")));
    }
    if a == b {
        return Ok(Quad { value: 0.0, error: 0.0, intervals: 0, evaluations: 0 });
    }
    let mut heap = BinaryHeap::new();
    heap.push(kronrod(&mut f, a, b));
    let mut evaluations = 15;
    loop {
        let total: NeumaierSum = heap.iter().map(|p| p.value).collect();
        let err: f64 = heap.iter().map(|p| p.error).sum();
        let value = total.value();
        let tol = opts.abs_tol.max(opts.rel_tol * value.abs());
        let worst = *heap.peek().expect("nonempty");
        let mid = 0.5 * (worst.a + worst.b);
        let exhausted = worst.floor || !(worst.a < mid && mid < worst.b);
        if err <= tol || exhausted || heap.len() >= opts.max_intervals {
            if err > tol && !exhausted {
                return Err(Error::Domain(format!(
                    "quadrature did not converge on [{a}, {b}]: error {err:.3e} > {tol:.3e}"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Domain(format!("non-finite integral on [{a}, {b}]")));
            }
            return Ok(Quad { value, error: err, intervals: heap.len(), evaluations });
        }
        heap.pop();
        heap.push(kronrod(&mut f, worst.a, mid));
        heap.push(kronrod(&mut f, mid, worst.b));
        evaluations += 30;
    }
}

/// `∫` over consecutive breakpoints, so kinks of the integrand fall on panel ends.
pub fn integrate_pieces(mut f: impl FnMut(f64) -> f64, breaks: &[f64], opts: QuadOptions) -> Result<Quad> {
    let mut total = NeumaierSum::default();
    let mut out = Quad { value: 0.0, error: 0.0, intervals: 0, evaluations: 0 };
    for w in breaks.windows(2) {
        let q = integrate(&mut f, w[0], w[1], opts)?;
        total.add(q.value);
        out.error += q.error;
        out.intervals += q.intervals;
        out.evaluations += q.evaluations;
    }
    out.value = total.value();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn high_degree_polynomials_are_exact() {
        let q = integrate(|x| x.powi(21), 0.0, 1.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 1.0 / 22.0, max_relative = 1e-14);
        let cubic = integrate(|x| x * x * x, -1.0, 3.0, QuadOptions::default()).unwrap();
        assert_relative_eq!(cubic.value, 20.0, max_relative = 1e-15);
        assert_eq!(cubic.intervals, 1);
    }

    #[test]
    fn closed_forms() {
        let o = QuadOptions::default();
        assert_relative_eq!(integrate(f64::exp, 0.0, 20.0, o).unwrap().value, 20f64.exp() - 1.0, max_relative = 1e-14);
        assert_relative_eq!(integrate(|x| 1.0 / x, 1.0, 1e6, o).unwrap().value, 1e6f64.ln(), max_relative = 1e-13);
        assert_relative_eq!(integrate(|x| x.sqrt(), 0.0, 1.0, o).unwrap().value, 2.0 / 3.0, epsilon = 1e-10);
        assert_eq!(integrate(|x| x, 3.0, 3.0, o).unwrap().value, 0.0);
    }

    #[test]
    fn kink_is_handled_by_breakpoints() {
        let f = |x: f64| if x < 1.0 { 1.0 } else { 1.0 / (x * x) };
        let q = integrate_pieces(f, &[0.0, 1.0, 4.0], QuadOptions::default()).unwrap();
        assert_relative_eq!(q.value, 1.75, max_relative = 1e-14);
    }

    #[test]
    fn reversed_limits_change_sign() {
        let o = QuadOptions::default();
        let a = integrate(f64::sin, 0.0, 2.0, o).unwrap().value;
        let b = integrate(f64::sin, 2.0, 0.0, o).unwrap().value;
        assert_relative_eq!(a, -b, max_relative = 1e-14);
    }

    #[test]
    fn infinite_limits_are_refused() {
        assert!(integrate(|x| x, 0.0, f64::INFINITY, QuadOptions::default()).is_err());
    }
}
