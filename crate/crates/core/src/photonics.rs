//! Channel transmission, Poisson photon statistics and expected sifted-string
//! statistics for weak-coherent and single-photon sources.

use crate::params::{ChannelSpec, SourceKind, SystemConfig};
use crate::scalar::Scalar;

/// `alpha = 10^(-(A*L + kappa)/10)`, with `kappa` a non-negative loss in dB.
pub fn transmission_probability<S: Scalar>(ch: &ChannelSpec<S>) -> S {
    let db = ch.attenuation_a * ch.fiber_length_km + ch.bulk_loss_kappa;
    S::lit(10.0).powf(-db / S::lit(10.0))
}

/// Probability that a Poisson pulse of mean `x` holds at least `k` photons.
///
/// `k = 1` uses `expm1`; `k = 2` sums the tail directly below `x = 1`,
/// where the closed form loses digits to cancellation.
pub fn psi_geq<S: Scalar>(k: u32, x: S) -> S {
    match k {
        0 => S::one(),
        1 => -(-x).exp_m1(),
        2 if x < S::one() => {
            let mut term = x * x / S::lit(2.0);
            let mut sum = S::zero();
            let mut l = 2u64;
            while term > S::epsilon() * sum || sum == S::zero() {
                sum = sum + term;
                l += 1;
                term = term * x / S::from_count(l);
                if term == S::zero() {
                    break;
                }
            }
            sum * (-x).exp()
        }
        2 => -(-x).exp_m1() - x * (-x).exp(),
        _ => {
            // 1 - sum_{l<k} e^-x x^l / l!
            let mut term = (-x).exp();
            let mut below = term;
            for l in 1..k {
                term = term * x / S::from_count(l as u64);
                below = below + term;
            }
            (S::one() - below).max(S::zero())
        }
    }
}

pub fn psi_geq1<S: Scalar>(x: S) -> S {
    psi_geq(1, x)
}

pub fn psi_geq2<S: Scalar>(x: S) -> S {
    psi_geq(2, x)
}

/// Which form of the sifted-length expressions to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SiftForm {
    /// Drops the `(1 - r_d)` factor, valid for `r_d << 1`.
    #[default]
    Simplified,
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiftStats<S = f64> {
    pub expected_sifted_n: S,
    pub expected_errors_et: S,
    /// Probability that Bob registers a click in a given pulse period.
    pub detection_prob_per_pulse: S,
}

impl<S: Scalar> SiftStats<S> {
    pub fn qber(&self) -> S {
        if self.expected_sifted_n > S::zero() {
            self.expected_errors_et / self.expected_sifted_n
        } else {
            S::zero()
        }
    }
}

/// Per-pulse probability that a signal photon reaches and fires Bob's detector.
pub fn signal_click_probability<S: Scalar>(config: &SystemConfig<S>, mu: S) -> S {
    let eta_alpha = config.detector.efficiency_eta * config.alpha();
    match config.source.kind {
        SourceKind::WeakCoherent => psi_geq1(eta_alpha * mu),
        SourceKind::SinglePhoton => eta_alpha,
    }
}

pub fn expected_sift_stats<S: Scalar>(config: &SystemConfig<S>) -> SiftStats<S> {
    expected_sift_stats_at(config, config.source.mu, SiftForm::Simplified)
}

/// Sift statistics at an explicit mean photon number (ignored for SPS).
pub fn expected_sift_stats_at<S: Scalar>(
    config: &SystemConfig<S>,
    mu: S,
    form: SiftForm,
) -> SiftStats<S> {
    let half_m = config.m() / S::lit(2.0);
    let rd = config.detector.dark_count_rd;
    let rc = config.channel.intrinsic_error_rc;
    let p = signal_click_probability(config, mu);
    let signal = match form {
        SiftForm::Simplified => p,
        SiftForm::Exact => (S::one() - rd) * p,
    };
    let click = signal + rd;
    SiftStats {
        expected_sifted_n: half_m * click,
        expected_errors_et: half_m * (signal * rc + rd / S::lit(2.0)),
        detection_prob_per_pulse: click,
    }
}
