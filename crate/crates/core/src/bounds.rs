//! Closed-form error bounds for the transductive learners.
//!
//! The realizable bound counts behaviors, so its logarithms are base 2.
//! The agnostic bounds come from a Hoeffding step and natural logarithms,
//! except for the VC branch whose constant is a free parameter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_VC_CONSTANT: f64 = 4.0;

fn check(n: usize, delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadDelta(delta));
    }
    if n == 0 {
        return Err(Error::EmptyInput("sample size"));
    }
    Ok(())
}

fn check_opt(opt: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&opt) {
        return Err(Error::PreconditionViolated(format!("opt must lie in [0, 1], got {opt}")));
    }
    Ok(())
}

/// `(rdim · log₂(2n) + log₂(1/δ)) / n`, unclamped.
pub fn realizable_bound(rdim: usize, n: usize, delta: f64) -> Result<f64> {
    check(n, delta)?;
    let n = n as f64;
    Ok((rdim as f64 * (2.0 * n).log2() + (1.0 / delta).log2()) / n)
}

/// `ε₀ = √(ln(2/δ) / 2n)`.
pub fn epsilon_zero(n: usize, delta: f64) -> Result<f64> {
    check(n, delta)?;
    Ok(((2.0 / delta).ln() / (2.0 * n as f64)).sqrt())
}

/// `3·opt + 3·ε₀ + √((rdim·ln(2n) + ln(1/δ)) / n)`, unclamped.
pub fn agnostic_rdim_bound(rdim: usize, opt: f64, n: usize, delta: f64) -> Result<f64> {
    check_opt(opt)?;
    let eps0 = epsilon_zero(n, delta)?;
    let n = n as f64;
    let deviation = ((rdim as f64 * (2.0 * n).ln() + (1.0 / delta).ln()) / n).sqrt();
    Ok(3.0 * opt + 3.0 * eps0 + deviation)
}

/// `2·opt + c·√((vc + log₂(1/δ)) / n)`, unclamped.
pub fn agnostic_vc_bound(vc: usize, opt: f64, n: usize, delta: f64, vc_constant: f64) -> Result<f64> {
    check_opt(opt)?;
    check(n, delta)?;
    if !(vc_constant > 0.0 && vc_constant.is_finite()) {
        return Err(Error::Config(format!("vc constant must be positive, got {vc_constant}")));
    }
    Ok(2.0 * opt + vc_constant * ((vc as f64 + (1.0 / delta).log2()) / n as f64).sqrt())
}

/// All bounds for one configuration, each clamped to `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub realizable_eps: f64,
    pub agnostic_eps_vc: f64,
    pub agnostic_eps_rdim: f64,
    pub agnostic_eps: f64,
    pub n: usize,
    pub delta: f64,
    pub vc: usize,
    pub rdim: usize,
    pub opt_composed: f64,
    pub vc_constant: f64,
}

fn clamp01(v: f64) -> f64 {
    v.clamp(0.0, 1.0)
}

pub fn agnostic_bound(
    vc: usize,
    rdim: usize,
    opt_composed: f64,
    n: usize,
    delta: f64,
    vc_constant: f64,
) -> Result<BoundReport> {
    let vc_eps = clamp01(agnostic_vc_bound(vc, opt_composed, n, delta, vc_constant)?);
    let rdim_eps = clamp01(agnostic_rdim_bound(rdim, opt_composed, n, delta)?);
    Ok(BoundReport {
        realizable_eps: clamp01(realizable_bound(rdim, n, delta)?),
        agnostic_eps_vc: vc_eps,
        agnostic_eps_rdim: rdim_eps,
        agnostic_eps: vc_eps.min(rdim_eps),
        n,
        delta,
        vc,
        rdim,
        opt_composed,
        vc_constant,
    })
}

/// Binary entropy `H(p)` in bits, with `H(0) = H(1) = 0`.
pub fn entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// The three successive upper estimates of the refined deviation `ε̃`,
/// with `p = opt + ε₀`:
///
/// * `solved   = √(2 ln2 · H(p) + (rdim · ln((1-p)·2n) + ln(1/δ)) / n)`
/// * `split    = √(2 ln2 · H(p)) + √((rdim · ln((1-p)·2n) + ln(1/δ)) / n)`
/// * `final_form = p + √((rdim · ln(2n) + ln(1/δ)) / n)`
///
/// `solved ≤ split` always holds. `split ≤ final_form` needs
/// `√(2 ln2 · H(p)) ≤ p`, which fails for every `p` in `(0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonChain {
    pub p: f64,
    pub solved: f64,
    pub split: f64,
    pub final_form: f64,
}

pub fn epsilon_chain(rdim: usize, opt: f64, n: usize, delta: f64) -> Result<EpsilonChain> {
    check_opt(opt)?;
    let p = opt + epsilon_zero(n, delta)?;
    let nf = n as f64;
    let remaining = (1.0 - p) * 2.0 * nf;
    if remaining < 1.0 {
        return Err(Error::PreconditionViolated(format!(
            "(1 - opt - eps0) * 2n = {remaining} is below 1"
        )));
    }
    let entropy_term = 2.0 * std::f64::consts::LN_2 * entropy(p);
    let tail = (rdim as f64 * remaining.ln() + (1.0 / delta).ln()) / nf;
    Ok(EpsilonChain {
        p,
        solved: (entropy_term + tail).sqrt(),
        split: entropy_term.sqrt() + tail.sqrt(),
        final_form: p + ((rdim as f64 * (2.0 * nf).ln() + (1.0 / delta).ln()) / nf).sqrt(),
    })
}
