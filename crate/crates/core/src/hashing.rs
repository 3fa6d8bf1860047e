//! Universal hash families: the Wegman–Carter authentication family (also
//! used for the equivalence check) and the strongly universal `a*x + b`
//! family used for privacy amplification.
//!
//! # Authentication family
//!
//! For a message of `c` bits (`c >= 4`, shorter messages use `c = 4`) and tag
//! length `g`, let `s = g + ceil(log2 log2 c)` and pick the widest internal
//! chunk width `t` in `[s, 2s]` whose key schedule fits in the
//! `wc_index_length(g, c)` index bits. While the working string is longer
//! than `2t` bits it is cut into `2t`-bit chunks (the last zero-padded) and
//! each chunk `x` is replaced by the top `t` bits of `k * x` in GF(2^2t),
//! one fresh multiplier `k` per level. The surviving `r <= 2t` bits are
//! finished with `top_g(a * x + b)` in GF(2^d), `d = max(r, g)`. Each level
//! is `2^-t`-almost-universal and the last step is strongly universal, so a
//! forgery succeeds with probability at most `2^-g + levels * 2^-t`, which
//! the choice of `t` keeps below `2^(1-g)`. Index bits are consumed in order:
//! level multipliers, then `a`, then `b`; leftover bits are unused.
//!
//! # Bit conventions
//!
//! A `w`-bit chunk maps to the GF(2) polynomial whose `x^(w-1)` coefficient
//! is the chunk's first bit. "Top `t` bits" means the `t` highest coefficients.

use rand::Rng;
use thiserror::Error;

use crate::bits::BitString;
use crate::gf2::{self, Gf2Field, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HashError {
    #[error("message-size parameter c = {0} is below the minimum of 4 bits")]
    DomainTooSmall(u64),
    #[error("tag length g must be at least 1")]
    ZeroTagLength,
    #[error("authentication index already used")]
    IndexReused,
    #[error("index has {got} bits, expected {expected}")]
    IndexLength { expected: u64, got: u64 },
    #[error("index sized for (g = {index_g}, c = {index_c}) used for (g = {g}, c = {c})")]
    IndexFamily {
        index_g: u32,
        index_c: u64,
        g: u32,
        c: u64,
    },
    #[error("no supported field layout for g = {g}, c = {c}")]
    Unsupported { g: u32, c: u64 },
    #[error("privacy amplification parameters have {got} bits, input has {expected}")]
    PaSize { expected: usize, got: usize },
    #[error("output length {out_len} exceeds input length {n}")]
    OutLen { out_len: usize, n: usize },
    #[error("field of degree {0} not supported for privacy amplification")]
    PaField(usize),
}

/// Secret index bits needed to select one authentication function:
/// `ceil(4 (g + log2 log2 c) log2 c)`.
pub fn wc_index_length(g: u32, c: u64) -> Result<u64, HashError> {
    if c < 4 {
        return Err(HashError::DomainTooSmall(c));
    }
    if g == 0 {
        return Err(HashError::ZeroTagLength);
    }
    let lc = (c as f64).log2();
    let v = 4.0 * (g as f64 + lc.log2()) * lc;
    // Integral results (powers of two) must not be bumped by rounding noise.
    let r = v.round();
    Ok(if (v - r).abs() <= 1e-9 * v {
        r as u64
    } else {
        v.ceil() as u64
    })
}

/// Family parameter for a message of `len` bits.
pub fn family_size(len: usize) -> u64 {
    (len as u64).max(4)
}

/// Concrete layout of the authentication hash for one `(g, c)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WcPlan {
    pub g: u32,
    pub c: u64,
    pub s: u32,
    /// Internal chunk output width; chunks are `2t` bits.
    pub t: u32,
    pub levels: u32,
    /// Degree of the final strongly universal step.
    pub final_degree: u32,
    pub key_bits_used: u64,
    pub index_len: u64,
}

impl WcPlan {
    /// Upper bound on the probability that two distinct messages collide.
    pub fn collision_bound(&self) -> f64 {
        2f64.powi(-(self.g as i32)) + self.levels as f64 * 2f64.powi(-(self.t as i32))
    }
}

fn layout(c: u64, t: u64) -> (u32, u64) {
    let mut len = c;
    let mut levels = 0;
    while len > 2 * t {
        len = len.div_ceil(2 * t) * t;
        levels += 1;
    }
    (levels, len)
}

fn field_ok(degree: u64) -> bool {
    degree as usize <= gf2::SPARSE_SEARCH_LIMIT || gf2::all_ones_is_irreducible(degree as usize)
}

pub fn wc_plan(g: u32, c: u64) -> Result<WcPlan, HashError> {
    let index_len = wc_index_length(g, c)?;
    let s = g + ((c as f64).log2().log2().ceil() as u32);
    for t in (s..=2 * s).rev() {
        let (levels, r) = layout(c, t as u64);
        let d = r.max(g as u64);
        let key_bits_used = levels as u64 * 2 * t as u64 + 2 * d;
        if key_bits_used <= index_len && field_ok(2 * t as u64) && field_ok(d) {
            return Ok(WcPlan {
                g,
                c,
                s,
                t,
                levels,
                final_degree: d as u32,
                key_bits_used,
                index_len,
            });
        }
    }
    Err(HashError::Unsupported { g, c })
}

/// A single-use secret index selecting one authentication function.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuthKeyIndex {
    bits: BitString,
    g: u32,
    c: u64,
    consumed: bool,
}

impl AuthKeyIndex {
    pub fn new(g: u32, c: u64, bits: BitString) -> Result<Self, HashError> {
        let expected = wc_index_length(g, c)?;
        if bits.len() as u64 != expected {
            return Err(HashError::IndexLength {
                expected,
                got: bits.len() as u64,
            });
        }
        Ok(AuthKeyIndex {
            bits,
            g,
            c,
            consumed: false,
        })
    }

    pub fn random<R: Rng + ?Sized>(g: u32, c: u64, rng: &mut R) -> Result<Self, HashError> {
        let len = wc_index_length(g, c)?;
        Self::new(g, c, BitString::random(len as usize, rng))
    }

    pub fn bits(&self) -> &BitString {
        &self.bits
    }

    pub fn g(&self) -> u32 {
        self.g
    }

    pub fn c(&self) -> u64 {
        self.c
    }

    pub fn is_consumed(&self) -> bool {
        self.consumed
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AuthTag {
    pub bits: BitString,
}

impl AuthTag {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn to_hex(&self) -> String {
        self.bits.to_hex()
    }
}

/// Authentication tag of `message`; consumes `index`.
pub fn wc_tag(message: &BitString, index: &mut AuthKeyIndex, g: u32) -> Result<AuthTag, HashError> {
    if index.consumed {
        return Err(HashError::IndexReused);
    }
    let c = family_size(message.len());
    if index.g != g || index.c != c {
        return Err(HashError::IndexFamily {
            index_g: index.g,
            index_c: index.c,
            g,
            c,
        });
    }
    let plan = wc_plan(g, c)?;
    index.consumed = true;
    Ok(AuthTag {
        bits: wc_hash(message, index.bits(), &plan),
    })
}

/// Tag for the equivalence check: the same family keyed for `g_ec`.
pub fn equivalence_tag(
    string: &BitString,
    index: &mut AuthKeyIndex,
    g_ec: u32,
) -> Result<AuthTag, HashError> {
    wc_tag(string, index, g_ec)
}

/// Reads `width` index bits at `offset` as a field element of that width.
fn read_element(bits: &BitString, offset: usize, width: usize) -> Poly {
    let mut p = Poly::new();
    let mut remaining = width;
    let mut pos = offset;
    while remaining > 0 {
        let w = remaining.min(64);
        let v = bits.get_bits(pos, w);
        remaining -= w;
        gf2::xor_shifted_into(&mut p, &[v], remaining);
        pos += w;
    }
    while p.last() == Some(&0) {
        p.pop();
    }
    p
}

/// Appends coefficients `x^(lo + width - 1)` down to `x^lo` of `p`.
fn push_coeffs(out: &mut BitString, p: &[u64], lo: usize, width: usize) {
    let mut remaining = width;
    while remaining > 0 {
        let w = remaining.min(64);
        let start = lo + remaining - w;
        let chunk = gf2::shr(p, start);
        let v = chunk.first().copied().unwrap_or(0);
        let v = if w == 64 { v } else { v & ((1u64 << w) - 1) };
        out.push_bits(v, w);
        remaining -= w;
    }
}

/// The keyed hash itself, with no index bookkeeping.
pub fn wc_hash(message: &BitString, key: &BitString, plan: &WcPlan) -> BitString {
    let t = plan.t as usize;
    let chunk = 2 * t;
    let mut cur = message.clone();
    let mut off = 0usize;

    if chunk <= 64 {
        let field = Gf2Field::new(chunk).expect("chunk field");
        for _ in 0..plan.levels {
            let k = key.get_bits(off, chunk);
            off += chunk;
            let mut next = BitString::with_capacity(cur.len().div_ceil(chunk) * t);
            let mut i = 0;
            while i < cur.len() {
                let x = chunk_word(&cur, i, chunk);
                next.push_bits(field.mul_word(k, x) >> t, t);
                i += chunk;
            }
            cur = next;
        }
    } else {
        let field = Gf2Field::new(chunk).expect("chunk field");
        for _ in 0..plan.levels {
            let k = read_element(key, off, chunk);
            off += chunk;
            let mut next = BitString::with_capacity(cur.len().div_ceil(chunk) * t);
            let mut i = 0;
            while i < cur.len() {
                let x = read_element(&cur, i, chunk);
                let y = field.mul(&k, &x);
                push_coeffs(&mut next, &y, t, t);
                i += chunk;
            }
            cur = next;
        }
    }

    let d = plan.final_degree as usize;
    let g = plan.g as usize;
    let field = Gf2Field::new(d).expect("final field");
    let mut tag = BitString::with_capacity(g);
    if d <= 64 {
        let a = key.get_bits(off, d);
        let b = key.get_bits(off + d, d);
        let x = chunk_word(&cur, 0, d);
        let y = field.mul_word(a, x) ^ b;
        tag.push_bits(y >> (d - g), g);
    } else {
        let a = read_element(key, off, d);
        let b = read_element(key, off + d, d);
        let x = read_element(&cur, 0, d);
        let mut y = field.mul(&a, &x);
        gf2::xor_into(&mut y, &b);
        push_coeffs(&mut tag, &y, d - g, g);
    }
    tag
}

/// `width`-bit chunk at `start`, zero-padded past the end of the string.
fn chunk_word(s: &BitString, start: usize, width: usize) -> u64 {
    s.get_bits(start, width)
}

/// Parameters of one privacy-amplification function: two strings as long as
/// the input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PAHashParams {
    pub param_a: BitString,
    pub param_b: BitString,
}

impl PAHashParams {
    pub fn new(param_a: BitString, param_b: BitString) -> Result<Self, HashError> {
        if param_a.len() != param_b.len() {
            return Err(HashError::PaSize {
                expected: param_a.len(),
                got: param_b.len(),
            });
        }
        Ok(PAHashParams { param_a, param_b })
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        PAHashParams {
            param_a: BitString::random(n, rng),
            param_b: BitString::random(n, rng),
        }
    }

    pub fn input_len(&self) -> usize {
        self.param_a.len()
    }
}

/// `h(x) = top_out_len(a * x + b)` in GF(2^n), `n = |x|`.
pub fn pa_hash(
    input: &BitString,
    params: &PAHashParams,
    out_len: usize,
) -> Result<BitString, HashError> {
    let n = input.len();
    for p in [&params.param_a, &params.param_b] {
        if p.len() != n {
            return Err(HashError::PaSize {
                expected: n,
                got: p.len(),
            });
        }
    }
    if out_len > n {
        return Err(HashError::OutLen { out_len, n });
    }
    if out_len == 0 {
        return Ok(BitString::new());
    }
    let field = Gf2Field::new(n).map_err(|_| HashError::PaField(n))?;
    let a = gf2::bits_to_poly(&params.param_a, n);
    let b = gf2::bits_to_poly(&params.param_b, n);
    let x = gf2::bits_to_poly(input, n);
    let mut y = field.mul(&a, &x);
    gf2::xor_into(&mut y, &b);
    let mut out = BitString::with_capacity(out_len);
    push_coeffs(&mut out, &y, n - out_len, out_len);
    Ok(out)
}

/// Largest input length `<= n` that [`pa_hash`] supports.
pub fn pa_supported_len(n: usize) -> usize {
    gf2::largest_supported_degree(n).unwrap_or(0)
}
