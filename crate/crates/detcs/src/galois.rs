//! Exact arithmetic in GF(p^s) via exponent/logarithm tables.
//!
//! Elements are encoded as base-p digit vectors packed into an integer code
//! in `[0, q)`, digits being the coefficients of the residue polynomial in
//! the generator. The generator is the residue class of `x` modulo the
//! lexicographically smallest primitive polynomial of degree `s`, so every
//! table is bit-reproducible across runs.

use crate::{Error, Result};

/// An element of a fixed GF(p^s), identified by its integer code.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct FieldElement {
    pub code: u32,
}

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement { code: 0 };
    pub const ONE: FieldElement = FieldElement { code: 1 };

    pub fn new(code: u32) -> Self {
        FieldElement { code }
    }

    pub fn is_zero(self) -> bool {
        self.code == 0
    }
}

/// Arithmetic tables for one GF(p^s).
///
/// Immutable after construction; reads are safe from any number of threads.
pub struct FieldTable {
    p: u32,
    s: u32,
    q: u32,
    /// `exp[i]` is the code of g^i, length q-1.
    exp: Vec<u32>,
    /// Inverse of `exp` for nonzero codes; `log[0]` is unused.
    log: Vec<u32>,
    /// Monic primitive polynomial, constant term first, leading coefficient 1.
    primitive_poly: Vec<u32>,
    /// Field trace Tr: GF(p^s) -> GF(p), indexed by element code.
    trace_tab: Vec<u32>,
}

const SIZE_GUARD: u64 = 1 << 20;

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= p {
        if p % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Build the tables for GF(p^s).
///
/// The primitive polynomial is the lexicographically smallest monic primitive
/// polynomial of degree s over GF(p), ordering coefficient tuples
/// (c_{s-1}, ..., c_0) by their packed base-p code. Primitivity is tested by
/// brute force: the residue of x must have multiplicative order exactly q-1.
pub fn build_field(p: u32, s: u32) -> Result<FieldTable> {
    if !is_prime(p as u64) {
        return Err(Error::NonPrimeModulus(p as u64));
    }
    if s < 1 {
        return Err(Error::ZeroExtensionDegree);
    }
    let q64 = (p as u64).checked_pow(s).unwrap_or(u64::MAX);
    if q64 > SIZE_GUARD {
        return Err(Error::FieldTooLarge(q64));
    }
    let q = q64 as u32;

    for cand in 0..q {
        let reduction = digits(cand, p, s);
        if let Some((exp, log)) = try_build_tables(p, s, q, &reduction) {
            let trace_tab = build_trace(p, s, q, &exp, &log);
            let mut primitive_poly = reduction;
            primitive_poly.push(1);
            return Ok(FieldTable {
                p,
                s,
                q,
                exp,
                log,
                primitive_poly,
                trace_tab,
            });
        }
    }
    unreachable!("a primitive polynomial of degree s over GF(p) always exists")
}

fn digits(code: u32, p: u32, s: u32) -> Vec<u32> {
    let mut d = Vec::with_capacity(s as usize);
    let mut c = code;
    for _ in 0..s {
        d.push(c % p);
        c /= p;
    }
    d
}

fn pack(digits: &[u32], p: u32) -> u32 {
    digits.iter().rev().fold(0, |acc, &d| acc * p + d)
}

/// Multiply a residue code by x modulo x^s + reduction(x).
fn mul_by_x(code: u32, p: u32, s: u32, reduction: &[u32]) -> u32 {
    let mut d = digits(code, p, s);
    let top = d[s as usize - 1];
    for i in (1..s as usize).rev() {
        d[i] = d[i - 1];
    }
    d[0] = 0;
    if top != 0 {
        for i in 0..s as usize {
            d[i] = (d[i] + p - top * reduction[i] % p) % p;
        }
    }
    pack(&d, p)
}

/// Attempt to build exp/log tables for the candidate reduction polynomial.
/// Fails unless x has multiplicative order exactly q-1, which simultaneously
/// certifies that the quotient ring is a field and that x generates it.
fn try_build_tables(p: u32, s: u32, q: u32, reduction: &[u32]) -> Option<(Vec<u32>, Vec<u32>)> {
    let order = q - 1;
    let mut exp = vec![0u32; order as usize];
    exp[0] = 1;
    let mut y = 1u32;
    for i in 1..order {
        y = mul_by_x(y, p, s, reduction);
        if y == 1 || y == 0 {
            return None;
        }
        exp[i as usize] = y;
    }
    if mul_by_x(y, p, s, reduction) != 1 {
        return None;
    }
    let mut log = vec![0u32; q as usize];
    for (i, &code) in exp.iter().enumerate() {
        log[code as usize] = i as u32;
    }
    Some((exp, log))
}

fn build_trace(p: u32, s: u32, q: u32, exp: &[u32], log: &[u32]) -> Vec<u32> {
    let order = (q - 1) as u64;
    let mut tab = vec![0u32; q as usize];
    for code in 1..q {
        let l = log[code as usize] as u64;
        let mut acc = vec![0u32; s as usize];
        let mut frob = 1u64; // p^i mod (q-1) applied to the exponent
        for _ in 0..s {
            let power = exp[((l * frob) % order) as usize];
            let d = digits(power, p, s);
            for (a, b) in acc.iter_mut().zip(d) {
                *a = (*a + b) % p;
            }
            frob = frob * p as u64 % order;
        }
        debug_assert!(
            acc[1..].iter().all(|&d| d == 0),
            "trace must land in the prime subfield"
        );
        tab[code as usize] = acc[0];
    }
    tab
}

impl FieldTable {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// Multiplicative order of the generator, q - 1.
    pub fn order(&self) -> u32 {
        self.q - 1
    }

    pub fn primitive_poly(&self) -> &[u32] {
        &self.primitive_poly
    }

    /// The primitive element g (residue of x).
    pub fn generator(&self) -> FieldElement {
        FieldElement::new(self.exp[1 % self.exp.len()])
    }

    /// Code of g^i with i taken mod q-1.
    #[inline]
    pub fn exp_at(&self, i: u64) -> u32 {
        self.exp[(i % self.exp.len() as u64) as usize]
    }

    /// Discrete log of a nonzero code.
    #[inline]
    pub fn log_of(&self, code: u32) -> u32 {
        debug_assert!(code != 0 && code < self.q);
        self.log[code as usize]
    }

    /// Digitwise mod-p addition of two element codes.
    #[inline]
    pub fn add_codes(&self, a: u32, b: u32) -> u32 {
        debug_assert!(a < self.q && b < self.q, "mixed-field operand");
        let (p, s) = (self.p, self.s);
        let mut out = 0u32;
        let mut mult = 1u32;
        let (mut a, mut b) = (a, b);
        for _ in 0..s {
            out += (a % p + b % p) % p * mult;
            a /= p;
            b /= p;
            mult *= p;
        }
        out
    }

    /// Field trace of an element code, as an integer in [0, p).
    #[inline]
    pub fn trace_code(&self, code: u32) -> u32 {
        debug_assert!(code < self.q, "mixed-field operand");
        self.trace_tab[code as usize]
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement::new(self.add_codes(a.code, b.code))
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        assert!(a.code < self.q && b.code < self.q, "mixed-field operand");
        if a.is_zero() || b.is_zero() {
            return FieldElement::ZERO;
        }
        let i = (self.log_of(a.code) as u64 + self.log_of(b.code) as u64) % self.order() as u64;
        FieldElement::new(self.exp[i as usize])
    }

    /// a^e with the exponent reduced mod q-1 for nonzero a; 0^e = 0 for e > 0.
    pub fn pow(&self, a: FieldElement, e: i64) -> FieldElement {
        assert!(a.code < self.q, "mixed-field operand");
        if a.is_zero() {
            assert!(e > 0, "0 has no inverse");
            return FieldElement::ZERO;
        }
        let order = self.order() as i64;
        let i = (self.log_of(a.code) as i64 * e).rem_euclid(order);
        FieldElement::new(self.exp[i as usize])
    }

    pub fn trace(&self, a: FieldElement) -> u32 {
        self.trace_code(a.code)
    }
}


#[cfg(test)]
impl FieldTable {
    /// pow that tolerates a zero base with positive exponent, for exhaustive tests.
    fn pow_or_zero(&self, a: FieldElement, e: i64) -> FieldElement {
        if a.is_zero() {
            FieldElement::ZERO
        } else {
            self.pow(a, e)
        }
    }
}
