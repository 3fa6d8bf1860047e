//! Seeded sampler for the quantum transmission of one block.
//!
//! Only pulses that can produce a click are visited: nonempty pulses are
//! reached by geometric skips, their photon count is drawn from the
//! zero-truncated Poisson law, and dark counts come from a second skip
//! sequence. This is distributionally the per-pulse process but costs
//! O(detections) rather than O(m) random draws.

use rand::Rng;
use rand_distr::{Distribution, Geometric, Poisson};

use crate::bits::BitString;
use crate::params::{SourceKind, SystemConfig};

use super::{stream_rng, STREAM_QUANTUM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Detection {
    pub pulse_index: u64,
    pub bob_bit: bool,
    /// Click caused by a dark count alone.
    pub dark: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantumExchangeRecord {
    pub alice_bits: BitString,
    pub alice_bases: BitString,
    pub bob_bases: BitString,
    /// Sorted by strictly increasing pulse index.
    pub detections: Vec<Detection>,
    /// Detected pulses that Eve intercepted and resent.
    pub intercepted: u64,
}

impl QuantumExchangeRecord {
    pub fn m(&self) -> usize {
        self.alice_bits.len()
    }
}

/// Iterator over the positions of successes in `m` Bernoulli(`p`) trials.
struct Skips<'a, R: Rng> {
    rng: &'a mut R,
    geo: Option<Geometric>,
    next: u64,
    m: u64,
}

impl<'a, R: Rng> Skips<'a, R> {
    fn new(rng: &'a mut R, p: f64, m: u64) -> Self {
        let geo = if p > 0.0 {
            Some(Geometric::new(p.min(1.0)).expect("probability in (0, 1]"))
        } else {
            None
        };
        let mut s = Skips {
            rng,
            geo,
            next: 0,
            m,
        };
        s.next = s.gap();
        s
    }

    fn gap(&mut self) -> u64 {
        match &self.geo {
            Some(g) => g.sample(self.rng),
            None => u64::MAX,
        }
    }

    fn next_pos(&mut self) -> Option<(u64, &mut R)> {
        if self.next >= self.m {
            return None;
        }
        let pos = self.next;
        self.next = pos.saturating_add(1).saturating_add(self.gap());
        Some((pos, &mut *self.rng))
    }
}

/// Photon count of a pulse known to be nonempty.
fn truncated_poisson<R: Rng>(mu: f64, rng: &mut R) -> u64 {
    if mu >= 1.0 {
        let p = Poisson::new(mu).expect("positive mean");
        loop {
            let k: f64 = p.sample(rng);
            if k >= 1.0 {
                return k as u64;
            }
        }
    }
    // Inverse CDF of P(k) = mu^k e^-mu / (k! (1 - e^-mu)), k >= 1.
    let u = rng.random::<f64>() * -(-mu).exp_m1();
    let mut k = 1;
    let mut pk = mu * (-mu).exp();
    let mut cum = pk;
    while u > cum && k < 64 {
        k += 1;
        pk *= mu / k as f64;
        cum += pk;
    }
    k
}

pub fn simulate_quantum_exchange(config: &SystemConfig, seed: u64) -> QuantumExchangeRecord {
    let mut rng = stream_rng(seed, STREAM_QUANTUM);
    let m = config.block.raw_block_m as usize;
    let alice_bits = BitString::random(m, &mut rng);
    let alice_bases = BitString::random(m, &mut rng);
    let bob_bases = BitString::random(m, &mut rng);

    let mu = config.source.mu;
    let per_photon = config.alpha() * config.detector.efficiency_eta;
    let rc = config.channel.intrinsic_error_rc;
    let phi = config.attack.eve_intercept_fraction_phi;
    let p_nonempty = match config.source.kind {
        SourceKind::WeakCoherent => -(-mu).exp_m1(),
        SourceKind::SinglePhoton => 1.0,
    };

    let mut signal = Vec::new();
    let mut intercepted = 0;
    let mut pulses = Skips::new(&mut rng, p_nonempty, m as u64);
    while let Some((pos, rng)) = pulses.next_pos() {
        let photons = match config.source.kind {
            SourceKind::WeakCoherent => truncated_poisson(mu, rng),
            SourceKind::SinglePhoton => 1,
        };
        let p_click = 1.0 - (1.0 - per_photon).powi(photons.min(i32::MAX as u64) as i32);
        if rng.random::<f64>() >= p_click {
            continue;
        }
        let i = pos as usize;
        let (mut basis, mut bit) = (alice_bases.get(i), alice_bits.get(i));
        if phi > 0.0 && rng.random_bool(phi) {
            intercepted += 1;
            let eve_basis: bool = rng.random();
            let eve_bit = if eve_basis == basis {
                bit
            } else {
                rng.random()
            };
            basis = eve_basis;
            bit = eve_bit;
        }
        let mut bob_bit = if bob_bases.get(i) == basis {
            bit
        } else {
            rng.random()
        };
        if rc > 0.0 && rng.random_bool(rc) {
            bob_bit = !bob_bit;
        }
        signal.push(Detection {
            pulse_index: pos,
            bob_bit,
            dark: false,
        });
    }

    let mut dark = Vec::new();
    let mut darks = Skips::new(&mut rng, config.detector.dark_count_rd, m as u64);
    while let Some((pos, rng)) = darks.next_pos() {
        dark.push(Detection {
            pulse_index: pos,
            bob_bit: rng.random(),
            dark: true,
        });
    }

    QuantumExchangeRecord {
        alice_bits,
        alice_bases,
        bob_bases,
        detections: merge(signal, dark),
        intercepted,
    }
}

/// Merges two sorted detection lists; a signal click wins over a dark count
/// in the same pulse.
fn merge(signal: Vec<Detection>, dark: Vec<Detection>) -> Vec<Detection> {
    let mut out = Vec::with_capacity(signal.len() + dark.len());
    let mut d = dark.into_iter().peekable();
    for s in signal {
        while let Some(x) = d.next_if(|x| x.pulse_index <= s.pulse_index) {
            if x.pulse_index < s.pulse_index {
                out.push(x);
            }
        }
        out.push(s);
    }
    out.extend(d);
    out
}
