//! Interactive error correction: shuffle, block parities with batched
//! bisection, then random-subset validation.
//!
//! Alice only ever discloses parities; Bob compares them with his own and
//! flips the bits that bisection isolates.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::BitString;
use crate::loadmodel::{block_count, error_decay_factor};
use crate::params::SecurityParams;

use super::transcript::{EcIteration, ParityKind, ParityLink};
use super::{stream_rng, ProtocolError, STREAM_SHARED};

/// `perm[i]` is the original position of shuffled bit `i`.
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<u32> {
    let mut p: Vec<u32> = (0..n as u32).collect();
    p.shuffle(rng);
    p
}

pub fn shuffle_bits(s: &BitString, perm: &[u32]) -> BitString {
    let mut out = BitString::with_capacity(perm.len());
    for &j in perm {
        out.push(s.get(j as usize));
    }
    out
}

pub fn unshuffle_bits(s: &BitString, perm: &[u32]) -> BitString {
    let mut out = BitString::zeros(perm.len());
    for (i, &j) in perm.iter().enumerate() {
        if s.get(i) {
            out.set(j as usize, true);
        }
    }
    out
}

/// Locates one error in each range (each known to have odd error parity),
/// advancing all ranges together one comparison per round. Returns the
/// located positions; Bob has already flipped them.
pub fn bisect_batch(
    alice: &BitString,
    bob: &mut BitString,
    ranges: &[(usize, usize)],
    kind: ParityKind,
    link: &mut ParityLink,
) -> Vec<usize> {
    let mut active: Vec<(usize, usize)> = ranges.to_vec();
    while active.iter().any(|&(s, e)| e - s > 1) {
        for r in active.iter_mut() {
            let (s, e) = *r;
            if e - s <= 1 {
                continue;
            }
            let mid = s + (e - s) / 2;
            let odd_lower =
                link.exchange(kind, alice.parity_range(s, mid), bob.parity_range(s, mid));
            *r = if odd_lower { (s, mid) } else { (mid, e) };
        }
    }
    let found: Vec<usize> = active.iter().map(|&(s, _)| s).collect();
    for &i in &found {
        bob.flip(i);
    }
    found
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EcOutcome {
    pub alice: BitString,
    pub bob: BitString,
    pub iterations: Vec<EcIteration>,
    pub link: ParityLink,
    pub corrected: u64,
}

/// Block-parity error correction with the modeled error trajectory: block
/// count `ceil(e / rho)` per iteration, `e` decaying by the expected fraction
/// each pass, stopping once two or fewer blocks would be formed.
pub fn error_correct_with<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    sec: &SecurityParams,
    e0: f64,
    rng: &mut R,
) -> Result<EcOutcome, ProtocolError> {
    let n = alice.len();
    if bob.len() != n {
        return Err(ProtocolError::LengthMismatch {
            alice: n,
            bob: bob.len(),
        });
    }
    let mut perm = random_permutation(n, rng);
    let mut a = shuffle_bits(alice, &perm);
    let mut b = shuffle_bits(bob, &perm);
    let mut link = ParityLink::default();
    let mut iterations = Vec::new();
    let mut corrected = 0;
    let decay = error_decay_factor(sec.rho);
    let mut e = e0;
    while e > 0.0 {
        let j = block_count(e, sec.rho).min(n as u64);
        if j <= 2 {
            break;
        }
        if sec.reshuffle_each_iteration && !iterations.is_empty() {
            let (orig_a, orig_b) = (unshuffle_bits(&a, &perm), unshuffle_bits(&b, &perm));
            perm = random_permutation(n, rng);
            a = shuffle_bits(&orig_a, &perm);
            b = shuffle_bits(&orig_b, &perm);
        }
        let bounds = |k: u64| (k as u128 * n as u128 / j as u128) as usize;
        let mut odd = Vec::new();
        for k in 0..j {
            let (s, t) = (bounds(k), bounds(k + 1));
            if link.exchange(
                ParityKind::Block,
                a.parity_range(s, t),
                b.parity_range(s, t),
            ) {
                odd.push((s, t));
            }
        }
        let found = bisect_batch(&a, &mut b, &odd, ParityKind::Bisection, &mut link);
        corrected += found.len() as u64;
        iterations.push(EcIteration {
            blocks: j,
            errors_found: found.len() as u64,
        });
        e *= decay;
    }
    Ok(EcOutcome {
        alice: unshuffle_bits(&a, &perm),
        bob: unshuffle_bits(&b, &perm),
        iterations,
        link,
        corrected,
    })
}

pub fn error_correct(
    alice: &BitString,
    bob: &BitString,
    sec: &SecurityParams,
    e0: f64,
    seed: u64,
) -> Result<EcOutcome, ProtocolError> {
    error_correct_with(alice, bob, sec, e0, &mut stream_rng(seed, STREAM_SHARED))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationOutcome {
    pub bob: BitString,
    pub passes: u64,
    pub failures: u64,
    /// 1-based iteration of the first mismatch.
    pub first_failure_at: Option<u64>,
    pub corrected: u64,
    pub link: ParityLink,
    /// Empty input: nothing to check.
    pub degenerate: bool,
}

fn masked_parity(s: &BitString, mask: &BitString) -> bool {
    s.words()
        .iter()
        .zip(mask.words())
        .fold(0u32, |acc, (x, m)| acc ^ (x & m).count_ones())
        & 1
        == 1
}

fn list_parity(s: &BitString, idx: &[usize]) -> bool {
    idx.iter().fold(false, |p, &i| p ^ s.get(i))
}

/// Random-subset parity checks until `n2_required` consecutive matches; a
/// mismatch is bisected within the subset and the located bit corrected.
pub fn validate_with<R: Rng + ?Sized>(
    alice: &BitString,
    bob: &BitString,
    n2_required: u32,
    rng: &mut R,
) -> Result<ValidationOutcome, ProtocolError> {
    let n = alice.len();
    if bob.len() != n {
        return Err(ProtocolError::LengthMismatch {
            alice: n,
            bob: bob.len(),
        });
    }
    let mut out = ValidationOutcome {
        bob: bob.clone(),
        passes: 0,
        failures: 0,
        first_failure_at: None,
        corrected: 0,
        link: ParityLink::default(),
        degenerate: n == 0,
    };
    if n == 0 {
        return Ok(out);
    }
    let mut run = 0;
    let mut iter = 0;
    while run < n2_required {
        iter += 1;
        let mask = BitString::random(n, rng);
        let mismatch = out.link.exchange(
            ParityKind::Validation,
            masked_parity(alice, &mask),
            masked_parity(&out.bob, &mask),
        );
        if !mismatch {
            out.passes += 1;
            run += 1;
            continue;
        }
        out.failures += 1;
        out.first_failure_at.get_or_insert(iter);
        run = 0;
        let mut idx: Vec<usize> = (0..n).filter(|&i| mask.get(i)).collect();
        while idx.len() > 1 {
            let lower = &idx[..idx.len() / 2];
            let odd = out.link.exchange(
                ParityKind::Bisection,
                list_parity(alice, lower),
                list_parity(&out.bob, lower),
            );
            idx = if odd {
                lower.to_vec()
            } else {
                idx[idx.len() / 2..].to_vec()
            };
        }
        out.bob.flip(idx[0]);
        out.corrected += 1;
    }
    Ok(out)
}

pub fn validate_reconciled(
    alice: &BitString,
    bob: &BitString,
    sec: &SecurityParams,
    seed: u64,
) -> Result<ValidationOutcome, ProtocolError> {
    validate_with(
        alice,
        bob,
        sec.n2_required,
        &mut stream_rng(seed, STREAM_SHARED),
    )
}
