//! Polynomial arithmetic over GF(2) and binary extension fields GF(2^k).
//!
//! Polynomials are little-endian word vectors: coefficient of `x^j` is bit
//! `j % 64` of word `j / 64`. Fields are defined by either a sparse
//! irreducible (trinomial or pentanomial found by a Rabin irreducibility
//! test) or, for large degrees, the all-ones polynomial `1 + x + ... + x^k`,
//! which is irreducible when `p = k + 1` is prime and 2 is a primitive root
//! modulo `p`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use crate::bits::BitString;

pub type Poly = Vec<u64>;

/// Largest degree for which a sparse modulus is searched for directly.
pub const SPARSE_SEARCH_LIMIT: usize = 512;

const KARATSUBA_THRESHOLD: usize = 24;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("field degree must be at least 1")]
    ZeroDegree,
    #[error("no supported irreducible modulus of degree {0}")]
    UnsupportedDegree(usize),
}

// ---------------------------------------------------------------------------
// carry-less word multiplication

#[cfg(target_arch = "x86_64")]
fn has_pclmul() -> bool {
    static HAS: OnceLock<bool> = OnceLock::new();
    *HAS.get_or_init(|| is_x86_feature_detected!("pclmulqdq") && is_x86_feature_detected!("sse2"))
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "pclmulqdq,sse2")]
unsafe fn clmul64_hw(a: u64, b: u64) -> u128 {
    use std::arch::x86_64::*;
    let va = _mm_set_epi64x(0, a as i64);
    let vb = _mm_set_epi64x(0, b as i64);
    let r = _mm_clmulepi64_si128(va, vb, 0);
    let lo = _mm_cvtsi128_si64(r) as u64;
    let hi = _mm_cvtsi128_si64(_mm_unpackhi_epi64(r, r)) as u64;
    ((hi as u128) << 64) | lo as u128
}

/// Portable 4-bit windowed carry-less multiply.
pub fn clmul64_soft(a: u64, b: u64) -> u128 {
    let mut table = [0u128; 16];
    for i in 1..16 {
        table[i] = (table[i >> 1] << 1) ^ if i & 1 == 1 { a as u128 } else { 0 };
    }
    let mut r = 0u128;
    for k in (0..16).rev() {
        r = (r << 4) ^ table[((b >> (4 * k)) & 15) as usize];
    }
    r
}

#[inline]
pub fn clmul64(a: u64, b: u64) -> u128 {
    #[cfg(target_arch = "x86_64")]
    {
        if has_pclmul() {
            // SAFETY: feature presence checked at runtime above.
            return unsafe { clmul64_hw(a, b) };
        }
    }
    clmul64_soft(a, b)
}

// ---------------------------------------------------------------------------
// dense polynomial helpers

pub fn degree(p: &[u64]) -> Option<usize> {
    p.iter()
        .rposition(|&w| w != 0)
        .map(|i| 64 * i + 63 - p[i].leading_zeros() as usize)
}

pub fn is_zero(p: &[u64]) -> bool {
    p.iter().all(|&w| w == 0)
}

#[inline]
pub fn coeff(p: &[u64], j: usize) -> bool {
    p.get(j >> 6).is_some_and(|w| (w >> (j & 63)) & 1 == 1)
}

pub fn set_coeff(p: &mut Poly, j: usize) {
    if p.len() <= j >> 6 {
        p.resize((j >> 6) + 1, 0);
    }
    p[j >> 6] |= 1 << (j & 63);
}

pub fn monomial(j: usize) -> Poly {
    let mut p = Poly::new();
    set_coeff(&mut p, j);
    p
}

fn trim(p: &mut Poly) {
    while p.last() == Some(&0) {
        p.pop();
    }
}

pub fn xor_into(dst: &mut Poly, src: &[u64]) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0);
    }
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// `dst ^= src * x^shift`.
pub fn xor_shifted_into(dst: &mut Poly, src: &[u64], shift: usize) {
    let (ws, bs) = (shift >> 6, shift & 63);
    let need = src.len() + ws + 1;
    if dst.len() < need {
        dst.resize(need, 0);
    }
    if bs == 0 {
        for (i, &w) in src.iter().enumerate() {
            dst[i + ws] ^= w;
        }
    } else {
        for (i, &w) in src.iter().enumerate() {
            dst[i + ws] ^= w << bs;
            dst[i + ws + 1] ^= w >> (64 - bs);
        }
    }
}

/// Coefficients `[from, ..)` shifted down to start at zero.
pub fn shr(p: &[u64], from: usize) -> Poly {
    let (ws, bs) = (from >> 6, from & 63);
    if ws >= p.len() {
        return Poly::new();
    }
    let src = &p[ws..];
    let mut out: Poly = if bs == 0 {
        src.to_vec()
    } else {
        (0..src.len())
            .map(|i| (src[i] >> bs) | src.get(i + 1).map_or(0, |&h| h << (64 - bs)))
            .collect()
    };
    trim(&mut out);
    out
}

/// Keeps coefficients below `x^bits`.
pub fn truncate_to(p: &mut Poly, bits: usize) {
    p.truncate(bits.div_ceil(64));
    if bits & 63 != 0 {
        if let Some(last) = p.get_mut(bits >> 6) {
            *last &= (1u64 << (bits & 63)) - 1;
        }
    }
}

fn mul_schoolbook(a: &[u64], b: &[u64]) -> Poly {
    let mut out = vec![0u64; a.len() + b.len()];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            let r = clmul64(x, y);
            out[i + j] ^= r as u64;
            out[i + j + 1] ^= (r >> 64) as u64;
        }
    }
    out
}

fn mul_karatsuba(a: &[u64], b: &[u64]) -> Poly {
    if a.len().min(b.len()) <= KARATSUBA_THRESHOLD {
        return mul_schoolbook(a, b);
    }
    let h = a.len().max(b.len()) / 2;
    let (a0, a1) = a.split_at(h.min(a.len()));
    let (b0, b1) = b.split_at(h.min(b.len()));
    let z0 = mul_karatsuba(a0, b0);
    let z2 = if a1.is_empty() || b1.is_empty() {
        Poly::new()
    } else {
        mul_karatsuba(a1, b1)
    };
    let mut sa = a0.to_vec();
    xor_into(&mut sa, a1);
    let mut sb = b0.to_vec();
    xor_into(&mut sb, b1);
    let mut z1 = mul_karatsuba(&sa, &sb);
    xor_into(&mut z1, &z0);
    xor_into(&mut z1, &z2);

    let mut out = vec![0u64; a.len() + b.len()];
    for (i, &w) in z0.iter().enumerate() {
        out[i] ^= w;
    }
    for (i, &w) in z1.iter().enumerate() {
        if w != 0 {
            out[i + h] ^= w;
        }
    }
    for (i, &w) in z2.iter().enumerate() {
        if w != 0 {
            out[i + 2 * h] ^= w;
        }
    }
    out
}

/// Full product in GF(2)[x].
pub fn mul(a: &[u64], b: &[u64]) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Poly::new();
    }
    let mut out = mul_karatsuba(a, b);
    trim(&mut out);
    out
}

#[inline]
fn spread32(x: u32) -> u64 {
    let mut x = x as u64;
    x = (x | (x << 16)) & 0x0000_FFFF_0000_FFFF;
    x = (x | (x << 8)) & 0x00FF_00FF_00FF_00FF;
    x = (x | (x << 4)) & 0x0F0F_0F0F_0F0F_0F0F;
    x = (x | (x << 2)) & 0x3333_3333_3333_3333;
    x = (x | (x << 1)) & 0x5555_5555_5555_5555;
    x
}

/// Squaring is linear over GF(2): interleave zeros between coefficients.
pub fn square(a: &[u64]) -> Poly {
    let mut out = Vec::with_capacity(2 * a.len());
    for &w in a {
        out.push(spread32(w as u32));
        out.push(spread32((w >> 32) as u32));
    }
    trim(&mut out);
    out
}

/// Remainder of `a` modulo a non-zero `m` (dense long division).
pub fn rem(a: &[u64], m: &[u64]) -> Poly {
    let dm = degree(m).expect("division by zero polynomial");
    let mut r = a.to_vec();
    trim(&mut r);
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        xor_shifted_into(&mut r, m, dr - dm);
        trim(&mut r);
    }
    r
}

pub fn gcd(a: &[u64], b: &[u64]) -> Poly {
    let (mut a, mut b) = (a.to_vec(), b.to_vec());
    trim(&mut a);
    trim(&mut b);
    while !b.is_empty() {
        let r = rem(&a, &b);
        a = b;
        b = r;
    }
    a
}

// ---------------------------------------------------------------------------
// moduli

/// Irreducible defining polynomial of a binary field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Modulus {
    /// `x^k + sum x^e` over the listed exponents (all `< k`, including 0).
    Sparse(Vec<usize>),
    /// `1 + x + ... + x^k`.
    AllOnes,
}

fn reduce_sparse(mut p: Poly, degree: usize, exps: &[usize]) -> Poly {
    loop {
        let high = shr(&p, degree);
        if high.is_empty() {
            break;
        }
        truncate_to(&mut p, degree);
        for &e in exps {
            xor_shifted_into(&mut p, &high, e);
        }
    }
    trim(&mut p);
    p
}

fn reduce_all_ones(mut p: Poly, degree: usize) -> Poly {
    // x^(k+1) = 1 modulo x^(k+1) - 1, which the all-ones polynomial divides.
    let period = degree + 1;
    loop {
        let high = shr(&p, period);
        if high.is_empty() {
            break;
        }
        truncate_to(&mut p, period);
        xor_into(&mut p, &high);
    }
    if coeff(&p, degree) {
        let ones = all_ones(period);
        xor_into(&mut p, &ones);
    }
    trim(&mut p);
    p
}

fn all_ones(bits: usize) -> Poly {
    let mut p = vec![u64::MAX; bits.div_ceil(64)];
    truncate_to(&mut p, bits);
    p
}

fn sparse_poly(degree: usize, exps: &[usize]) -> Poly {
    let mut f = monomial(degree);
    for &e in exps {
        set_coeff(&mut f, e);
    }
    f
}

fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn is_prime(n: u64) -> bool {
    n >= 2 && prime_factors(n) == [n]
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut r = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            r = (r as u128 * b as u128 % m as u128) as u64;
        }
        b = (b as u128 * b as u128 % m as u128) as u64;
        e >>= 1;
    }
    r
}

/// True when the all-ones polynomial of this degree is irreducible.
pub fn all_ones_is_irreducible(degree: usize) -> bool {
    let p = degree as u64 + 1;
    is_prime(p)
        && p > 2
        && prime_factors(p - 1)
            .iter()
            .all(|&q| pow_mod(2, (p - 1) / q, p) != 1)
}

/// Rabin's test for a sparse candidate `x^k + sum x^e`.
pub fn is_irreducible_sparse(degree: usize, exps: &[usize]) -> bool {
    if degree == 1 {
        return true;
    }
    if !exps.contains(&0) {
        return false;
    }
    let f = sparse_poly(degree, exps);
    let checkpoints: Vec<usize> = prime_factors(degree as u64)
        .into_iter()
        .map(|q| degree / q as usize)
        .collect();
    let x = monomial(1);
    let mut h = x.clone();
    for k in 1..=degree {
        h = reduce_sparse(square(&h), degree, exps);
        if checkpoints.contains(&k) {
            let mut t = h.clone();
            xor_into(&mut t, &x);
            trim(&mut t);
            if degree_is_positive_gcd(&t, &f) {
                return false;
            }
        }
    }
    let mut t = h;
    xor_into(&mut t, &x);
    trim(&mut t);
    t.is_empty()
}

fn degree_is_positive_gcd(a: &[u64], f: &[u64]) -> bool {
    if is_zero(a) {
        return true;
    }
    degree(&gcd(a, f)).is_some_and(|d| d > 0)
}

/// Lowest-weight irreducible of the given degree: trinomials by increasing
/// middle exponent, then pentanomials in lexicographic order.
pub fn find_sparse_modulus(degree: usize) -> Option<Vec<usize>> {
    if degree == 0 {
        return None;
    }
    if degree == 1 {
        return Some(vec![0]);
    }
    for k in 1..degree {
        let exps = vec![k, 0];
        if is_irreducible_sparse(degree, &exps) {
            return Some(exps);
        }
    }
    for a in 3..degree {
        for b in 2..a {
            for c in 1..b {
                let exps = vec![a, b, c, 0];
                if is_irreducible_sparse(degree, &exps) {
                    return Some(exps);
                }
            }
        }
    }
    None
}

/// Largest `d <= n` for which [`Gf2Field::new`] succeeds without search failure.
pub fn largest_supported_degree(n: usize) -> Option<usize> {
    if n == 0 {
        return None;
    }
    if n <= SPARSE_SEARCH_LIMIT {
        return Some(n);
    }
    (SPARSE_SEARCH_LIMIT + 1..=n)
        .rev()
        .find(|&d| all_ones_is_irreducible(d))
        .or(Some(SPARSE_SEARCH_LIMIT))
}

// ---------------------------------------------------------------------------
// fields

/// The binary field GF(2^degree).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Gf2Field {
    degree: usize,
    modulus: Modulus,
}

impl Gf2Field {
    /// Field of the given degree; moduli are searched once and cached.
    pub fn new(degree: usize) -> Result<Arc<Gf2Field>, FieldError> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Gf2Field>>>> = OnceLock::new();
        if degree == 0 {
            return Err(FieldError::ZeroDegree);
        }
        let cache = CACHE.get_or_init(Default::default);
        if let Some(f) = cache.lock().expect("field cache poisoned").get(&degree) {
            return Ok(f.clone());
        }
        let modulus = if degree <= SPARSE_SEARCH_LIMIT {
            find_sparse_modulus(degree).map(Modulus::Sparse)
        } else if all_ones_is_irreducible(degree) {
            Some(Modulus::AllOnes)
        } else {
            None
        }
        .ok_or(FieldError::UnsupportedDegree(degree))?;
        let field = Arc::new(Gf2Field { degree, modulus });
        cache
            .lock()
            .expect("field cache poisoned")
            .insert(degree, field.clone());
        Ok(field)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn modulus(&self) -> &Modulus {
        &self.modulus
    }

    /// The defining polynomial, including its leading term.
    pub fn modulus_poly(&self) -> Poly {
        match &self.modulus {
            Modulus::Sparse(exps) => sparse_poly(self.degree, exps),
            Modulus::AllOnes => all_ones(self.degree + 1),
        }
    }

    pub fn reduce(&self, p: Poly) -> Poly {
        match &self.modulus {
            Modulus::Sparse(exps) => reduce_sparse(p, self.degree, exps),
            Modulus::AllOnes => reduce_all_ones(p, self.degree),
        }
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Poly {
        self.reduce(mul(a, b))
    }

    /// Single-word multiply for fields of degree at most 64.
    pub fn mul_word(&self, a: u64, b: u64) -> u64 {
        let d = self.degree;
        assert!(d <= 64, "mul_word needs degree <= 64");
        let mut p = clmul64(a, b);
        match &self.modulus {
            Modulus::Sparse(exps) => loop {
                let high = p >> d;
                if high == 0 {
                    break;
                }
                p &= (1u128 << d) - 1;
                for &e in exps {
                    p ^= high << e;
                }
            },
            Modulus::AllOnes => {
                let period = d + 1;
                loop {
                    let high = p >> period;
                    if high == 0 {
                        break;
                    }
                    p = (p & ((1u128 << period) - 1)) ^ high;
                }
                if (p >> d) & 1 == 1 {
                    p ^= (1u128 << period) - 1;
                }
            }
        }
        p as u64
    }

    /// Interprets an MSB-first string of exactly `degree` bits as a field
    /// element: the first bit is the coefficient of `x^(degree-1)`.
    pub fn element_from_bits(&self, bits: &BitString) -> Poly {
        assert!(bits.len() <= self.degree, "element wider than the field");
        bits_to_poly(bits, self.degree)
    }

    /// The `degree`-bit MSB-first representation of an element.
    pub fn element_to_bits(&self, p: &[u64]) -> BitString {
        poly_to_bits(p, self.degree)
    }
}

/// Maps an MSB-first string onto a polynomial whose top coefficient is
/// `x^(width-1)`; shorter strings are zero-padded on the right (low end).
pub fn bits_to_poly(bits: &BitString, width: usize) -> Poly {
    assert!(bits.len() <= width);
    let mut p = vec![0u64; width.div_ceil(64)];
    for (k, &w) in bits.words().iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let lz = w.leading_zeros() as usize;
            w &= !(1u64 << (63 - lz));
            let i = 64 * k + lz;
            let j = width - 1 - i;
            p[j >> 6] |= 1 << (j & 63);
        }
    }
    trim(&mut p);
    p
}

/// Inverse of [`bits_to_poly`]: the `width` coefficients from `x^(width-1)` down.
pub fn poly_to_bits(p: &[u64], width: usize) -> BitString {
    let mut words = vec![0u64; width.div_ceil(64)];
    for (k, &w) in p.iter().enumerate() {
        let mut w = w;
        while w != 0 {
            let tz = w.trailing_zeros() as usize;
            w &= w - 1;
            let j = 64 * k + tz;
            assert!(j < width, "polynomial wider than requested bit width");
            let i = width - 1 - j;
            words[i >> 6] |= 1u64 << (63 - (i & 63));
        }
    }
    BitString::from_words(words, width)
}
