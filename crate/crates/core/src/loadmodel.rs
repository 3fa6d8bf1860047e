//! Classical computational load per block, the required computation rate,
//! and the error-correction iteration-count model feeding them.
//!
//! Iteration model: a block holding a Poisson(`rho`) number of errors has
//! odd parity with probability `e^-rho sinh(rho)`, and each odd block yields
//! one correction, so the expected error count decays by the factor
//! `1 - e^-rho sinh(rho) / rho` per iteration. Iteration `i` runs while
//! `J = ceil(e / rho) > 2` blocks would be formed.

use thiserror::Error;

use crate::params::{BlockSpec, SecurityParams, SystemConfig};
use crate::photonics;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LoadError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationCounts<S = f64> {
    pub n1: u32,
    /// Expected errors before each iteration, then after the last one.
    pub error_trajectory: Vec<S>,
    /// Block count `J` of each executed iteration.
    pub block_counts: Vec<u64>,
}

/// Fraction of errors left after one block-parity pass at `rho` errors per block.
pub fn error_decay_factor<S: Scalar>(rho: S) -> S {
    S::one() - (-rho).exp() * rho.sinh() / rho
}

pub fn block_count<S: Scalar>(errors: S, rho: S) -> u64 {
    (errors / rho).ceil().max(S::zero()).as_f64() as u64
}

pub fn iteration_counts<S: Scalar>(e0: S, rho: S) -> Result<IterationCounts<S>, LoadError> {
    if !(e0 > S::zero()) {
        return Err(LoadError::NonPositive("e0"));
    }
    if !(rho > S::zero()) {
        return Err(LoadError::NonPositive("rho"));
    }
    let decay = error_decay_factor(rho);
    let mut e = e0;
    let mut out = IterationCounts {
        n1: 0,
        error_trajectory: vec![e0],
        block_counts: Vec::new(),
    };
    loop {
        let j = block_count(e, rho);
        if j <= 2 {
            break;
        }
        out.block_counts.push(j);
        out.n1 += 1;
        e = e * decay;
        out.error_trajectory.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadBreakdown<S = f64> {
    pub overhead_lb0: S,
    pub sifting_term: S,
    pub ec_bracket_term: S,
    pub quadratic_term: S,
    pub total_lb: S,
    pub n1: u32,
    pub n2_total: u32,
}

/// Upper bound on instructions per block for sifted length `n`.
pub fn computational_load<S: Scalar>(
    block: &BlockSpec<S>,
    sec: &SecurityParams<S>,
    n: u64,
    e0: S,
    n2_total: u32,
) -> Result<LoadBreakdown<S>, LoadError> {
    if n == 0 {
        return Err(LoadError::NonPositive("n"));
    }
    let l = S::lit;
    let counts = iteration_counts(e0, sec.rho)?;
    let n1 = S::from_count(counts.n1 as u64);
    let nf = S::from_count(n);
    let m = S::from_count(block.raw_block_m);
    let w = S::from_count(block.machine_word_w as u64);
    let g_auth = S::from_count(sec.g_auth as u64);
    let g_ec = S::from_count(sec.g_ec as u64);
    let rho = sec.rho;

    let overhead_lb0 = S::from_count(block.overhead_lb0);
    let sifting_term = (l(50.0) + l(220.0) / g_auth) * nf * (S::one() + m.log2());
    let bracket = l(200.0)
        + l(25.0) * n1
        + l(12.5) * (S::one() - (l(-2.0) * rho).exp()) * n1
        + l(25.0) * rho
        + l(37.5) * S::from_count(n2_total as u64)
        + l(43.0) / w
        + l(220.0) / g_auth
        + l(110.0) / g_ec;
    let ec_bracket_term = bracket * nf;
    let quadratic_term = l(46.0) * nf * nf / (w * w);
    Ok(LoadBreakdown {
        overhead_lb0,
        sifting_term,
        ec_bracket_term,
        quadratic_term,
        total_lb: overhead_lb0 + sifting_term + ec_bracket_term + quadratic_term,
        n1: counts.n1,
        n2_total,
    })
}

/// Instructions per second needed to keep up with the quantum channel.
pub fn computation_rate<S: Scalar>(load: &LoadBreakdown<S>, m: u64, tau: S) -> S {
    load.total_lb / (S::from_count(m) * tau)
}

/// Inputs of the load budget resolved from a config.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadInputs<S = f64> {
    pub n: u64,
    pub e0: S,
    pub n2_total: u32,
}

/// Sifted length and error count from the config, or from the expected
/// channel statistics when not given explicitly.
pub fn load_inputs<S: Scalar>(config: &SystemConfig<S>) -> LoadInputs<S> {
    let stats = photonics::expected_sift_stats(config);
    LoadInputs {
        n: config
            .block
            .sifted_n
            .unwrap_or_else(|| stats.expected_sifted_n.round().max(S::one()).as_f64() as u64),
        e0: config
            .block
            .initial_errors_e0
            .unwrap_or(stats.expected_errors_et),
        n2_total: config.security.n2_required + config.security.expected_validation_failures,
    }
}

pub fn load_budget<S: Scalar>(
    config: &SystemConfig<S>,
) -> Result<(LoadBreakdown<S>, S), LoadError> {
    let inputs = load_inputs(config);
    let load = computational_load(
        &config.block,
        &config.security,
        inputs.n,
        inputs.e0,
        inputs.n2_total,
    )?;
    let rate = computation_rate(
        &load,
        config.block.raw_block_m,
        config.source.pulse_period_tau,
    );
    Ok((load, rate))
}
