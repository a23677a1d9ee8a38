//! The Moser recurrence `b_{n+1} = Φ_m(K n^γ b_n)` tracked in θ = (ln b)^{1/m}.
//!
//! b_n is an n-fold exponential tower, so only θ_n (written β_n) is stored,
//! together with the excess `β_n − β₁ − (n−1)` accumulated without cancellation.

use crate::error::{Error, Result};
use crate::logval::LogVal;
use crate::orlicz::{PhiM, YoungFn};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTrace {
    pub m: f64,
    pub k: f64,
    pub gamma: f64,
    pub theta1: f64,
    /// β_1..β_N.
    pub betas: Vec<f64>,
    /// β_n − θ₁ − (n−1).
    pub excess: Vec<f64>,
}

impl RecurrenceTrace {
    pub fn len(&self) -> usize {
        self.betas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.betas.is_empty()
    }

    /// `γ + ln K`.
    pub fn scale(&self) -> f64 {
        self.gamma + self.k.ln()
    }

    /// θ-value of C* for the given C_m: `θ₁ + C_m(γ + ln K)`.
    pub fn cstar_theta(&self, cm: f64) -> f64 {
        self.theta1 + cm * self.scale()
    }

    /// α_n = θ(C*) + (n−1), 1-based.
    pub fn alpha(&self, n: usize, cm: f64) -> f64 {
        self.cstar_theta(cm) + (n - 1) as f64
    }

    /// Truncated copy with the first `n` entries.
    pub fn prefix(&self, n: usize) -> RecurrenceTrace {
        let n = n.min(self.len());
        RecurrenceTrace {
            betas: self.betas[..n].to_vec(),
            excess: self.excess[..n].to_vec(),
            ..self.clone()
        }
    }
}

fn check_params(m: f64, k: f64, gamma: f64, theta1: f64, n: usize) -> Result<()> {
    if !(m > 1.0) || !m.is_finite() {
        return Err(Error::InvalidParameter(format!("m must be > 1, got {m}")));
    }
    if !(k >= 1.0) || !k.is_finite() {
        return Err(Error::InvalidParameter(format!("K must be >= 1, got {k}")));
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidParameter(format!("gamma must be >= 0, got {gamma}")));
    }
    if !(theta1 >= 2.0) {
        return Err(Error::Precondition(format!("theta1 = (ln b1)^(1/m) must be >= 2, got {theta1}")));
    }
    if n == 0 {
        return Err(Error::InvalidParameter("N must be >= 1".into()));
    }
    Ok(())
}

/// Runs `β_{n+1} = (β_n^m + ln K + γ ln n)^{1/m} + 1` for n = 1..N−1.
pub fn run_recurrence(m: f64, k: f64, gamma: f64, theta1: f64, n: usize) -> Result<RecurrenceTrace> {
    check_params(m, k, gamma, theta1, n)?;
    let ln_k = k.ln();
    let mut betas = Vec::with_capacity(n);
    let mut excess = Vec::with_capacity(n);
    let (mut b, mut d) = (theta1, 0.0);
    betas.push(b);
    excess.push(d);
    for i in 1..n {
        let c = ln_k + gamma * (i as f64).ln();
        // (β^m + c)^{1/m} − β, evaluated as β·expm1(ln1p(c/β^m)/m)
        let inc = b * ((c * b.powf(-m)).ln_1p() / m).exp_m1();
        d += inc;
        b = theta1 + i as f64 + d;
        betas.push(b);
        excess.push(d);
    }
    Ok(RecurrenceTrace { m, k, gamma, theta1, betas, excess })
}

/// θ-values of the same recurrence evaluated directly through Φ_m in the log domain.
pub fn direct_thetas(m: f64, k: f64, gamma: f64, theta1: f64, n: usize) -> Result<Vec<f64>> {
    check_params(m, k, gamma, theta1, n)?;
    let phi = PhiM::new(m)?;
    let mut b = LogVal::from_ln(theta1.powf(m));
    let mut out = vec![theta1];
    for i in 1..n {
        let factor = LogVal::from_ln(k.ln() + gamma * (i as f64).ln());
        b = phi.eval(factor * b);
        out.push(b.ln().powf(1.0 / m));
    }
    Ok(out)
}

/// Whether α_n = θ₁ + C_m(γ+ln K) + (n−1) dominates β_n along the trace.
pub fn cstar_verify(trace: &RecurrenceTrace, cm: f64) -> Result<bool> {
    if !(trace.m > 2.0) {
        return Err(Error::Precondition(format!("domination requires m > 2, got {}", trace.m)));
    }
    let slack = cm * trace.scale();
    Ok(trace.excess.iter().all(|&d| d <= slack))
}

/// Smallest C_m with `β_n ≤ α_n` over the computed horizon.
pub fn minimal_cm(trace: &RecurrenceTrace) -> f64 {
    let s = trace.scale();
    let dmax = trace.excess.iter().cloned().fold(0.0, f64::max);
    if dmax == 0.0 {
        0.0
    } else {
        dmax / s
    }
}

/// `ln Φ^{(−(n−1))}(b_n) = (β_n − (n−1))^m` for n = 1..N, with γ = 0.
///
/// Index convention: entry n strips the n−1 shifts that were applied to b₁, so
/// n = 1 returns ln b₁. For m ≤ 2 and K > e the sequence is unbounded.
pub fn failure_demo(m: f64, k: f64, theta1: f64, n: usize) -> Result<Vec<f64>> {
    let trace = run_recurrence(m, k, 0.0, theta1, n)?;
    Ok(trace.excess.iter().map(|d| (theta1 + d).powf(m)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn one_step() {
        let t = run_recurrence(3.0, E, 4.0, 2.0, 2).unwrap();
        assert!((t.betas[1] - (9.0f64.cbrt() + 1.0)).abs() < 1e-14);
        assert!((t.betas[1] - 3.0801).abs() < 1e-4);
    }

    #[test]
    fn degenerate_is_pure_shift() {
        let t = run_recurrence(3.0, 1.0, 0.0, 2.5, 500).unwrap();
        for (i, b) in t.betas.iter().enumerate() {
            assert_eq!(*b, 2.5 + i as f64);
        }
        assert_eq!(minimal_cm(&t), 0.0);
        assert!(cstar_verify(&t, 0.0).unwrap());
    }

    #[test]
    fn rough_lower_bound_and_monotone() {
        let t = run_recurrence(2.5, 3.0, 2.0, 2.0, 5000).unwrap();
        for n in 1..t.len() {
            assert!(t.betas[n] >= n as f64 + t.theta1);
            assert!(t.betas[n] > t.betas[n - 1]);
            assert!(t.excess[n] >= t.excess[n - 1]);
        }
    }

    #[test]
    fn theta_domain_matches_direct_logval() {
        for &(m, k, g) in &[(3.0, E, 4.0), (2.5, 2.0, 1.0), (2.0, E * E, 0.0)] {
            let t = run_recurrence(m, k, g, 2.0, 30).unwrap();
            let d = direct_thetas(m, k, g, 2.0, 30).unwrap();
            for (a, b) in t.betas.iter().zip(&d) {
                // compare ln b_n = β^m
                let (la, lb) = (a.powf(m), b.powf(m));
                assert!((la - lb).abs() <= 1e-10 * la, "{la} vs {lb}");
            }
        }
    }

    #[test]
    fn cstar_examples() {
        let t = run_recurrence(3.0, E, 4.0, 2.0, 10_000).unwrap();
        assert!(cstar_verify(&t, 10.0).unwrap());
        assert!(!cstar_verify(&t, 0.0).unwrap());
        let cm = minimal_cm(&t);
        assert!(cm.is_finite() && cm > 0.0);
        assert!(cstar_verify(&t, cm).unwrap());
        assert!(!cstar_verify(&t, cm * (1.0 - 1e-9)).unwrap());
        assert!(cstar_verify(&run_recurrence(2.0, E, 1.0, 2.0, 10).unwrap(), 1.0).is_err());
    }

    #[test]
    fn smaller_m_needs_larger_cm() {
        let a = minimal_cm(&run_recurrence(2.1, E, 4.0, 2.0, 10_000).unwrap());
        let b = minimal_cm(&run_recurrence(3.0, E, 4.0, 2.0, 10_000).unwrap());
        assert!(a > b, "{a} vs {b}");
    }

    #[test]
    fn preconditions() {
        assert!(matches!(run_recurrence(3.0, E, 1.0, 1.9, 10), Err(Error::Precondition(_))));
        assert!(run_recurrence(3.0, 0.5, 1.0, 2.0, 10).is_err());
        assert!(run_recurrence(3.0, E, 1.0, 2.0, 0).is_err());
    }

    #[test]
    fn failure_demo_grows_for_m2() {
        let s = failure_demo(2.0, E * E, 2.0, 10_000).unwrap();
        assert_eq!(s[0], 4.0);
        // independent oracle: plain f64 iteration of β_{n+1} = √(β_n²+2)+1
        let mut b = 2.0f64;
        for n in 1..=100 {
            assert!(((b - (n - 1) as f64).powi(2) - s[n - 1]).abs() < 1e-9 * s[n - 1]);
            b = (b * b + 2.0).sqrt() + 1.0;
        }
        // ratio of values ≥ 10 ⇔ difference of logs ≥ ln 10
        assert!(s[9_999] - s[9] >= 10f64.ln());
        assert!(s.windows(2).all(|w| w[1] > w[0]));
        let bounded = failure_demo(3.0, E * E, 2.0, 10_000).unwrap();
        assert!(bounded[9_999] - bounded[999] < 5e-2);
        assert!(bounded[9_999] < 2.0 * bounded[99]);
    }
}
