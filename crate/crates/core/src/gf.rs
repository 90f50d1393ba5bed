//! Exact arithmetic in GF(p^s) for primes p <= 13 and degrees s <= 4.
//!
//! An element is stored as a single integer: the base-p digits of the index
//! are the coefficients of the element in the power basis of the modulus,
//! lowest degree first. Multiplication goes through discrete log tables built
//! once per field; addition uses a full table for small fields and digit-wise
//! arithmetic otherwise.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Largest supported characteristic.
pub const MAX_P: u32 = 13;
/// Largest supported extension degree.
pub const MAX_S: u32 = 4;

/// Fields up to this size get a full addition table.
const ADD_TABLE_LIMIT: u32 = 256;

/// Errors raised while constructing a field or parsing elements.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("characteristic {0} is not prime")]
    NonPrime(u32),
    #[error("field GF({p}^{s}) is outside the supported range (p <= {MAX_P}, 1 <= s <= {MAX_S})")]
    RangeExceeded { p: u32, s: u32 },
    #[error("modulus {0:?} is not a monic irreducible polynomial of the requested degree")]
    BadModulus(Vec<u32>),
    #[error("coefficient vector {0:?} does not describe an element of the field")]
    BadElement(Vec<u32>),
}

/// An element of a finite field. Only meaningful together with its [`Field`].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct FieldElem(pub(crate) u32);

impl FieldElem {
    /// The canonical integer encoding (base-p digits are the coefficients).
    pub fn index(self) -> u32 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Debug for FieldElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

struct Inner {
    p: u32,
    s: u32,
    q: u32,
    modulus: Vec<u32>,
    /// exp[i] = gen^i for 0 <= i < 2(q-1), so products of logs need no reduction.
    exp: Vec<u32>,
    /// log[a] for a != 0; log[0] is unused.
    log: Vec<u32>,
    neg: Vec<u32>,
    add: Option<Vec<u16>>,
}

/// A finite field GF(p^s) together with its arithmetic tables.
///
/// Cloning is cheap (reference counted); all operations are pure.
#[derive(Clone)]
pub struct Field {
    inner: Arc<Inner>,
}

impl PartialEq for Field {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.p == other.inner.p
                && self.inner.s == other.inner.s
                && self.inner.modulus == other.inner.modulus)
    }
}

impl Eq for Field {}

impl fmt::Debug for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({}^{}, modulus {:?})", self.p(), self.s(), self.modulus())
    }
}

pub(crate) fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

/// Remainder of `a` modulo the monic polynomial `m` over GF(p); coefficient lists low-first.
fn poly_rem(a: &[u32], m: &[u32], p: u32) -> Vec<u32> {
    let mut r: Vec<u32> = a.to_vec();
    let dm = m.len() - 1;
    while r.len() > dm {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - dm;
        if lead != 0 {
            for (i, &c) in m.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - (lead * c) % p) % p;
            }
        }
        r.pop();
    }
    r
}

fn is_irreducible(m: &[u32], p: u32) -> bool {
    let s = m.len() - 1;
    if s == 1 {
        return true;
    }
    // trial division by every monic polynomial of degree 1..=s/2
    for d in 1..=s / 2 {
        let count = p.pow(d as u32);
        for idx in 0..count {
            let mut f: Vec<u32> = (0..d).map(|i| (idx / p.pow(i as u32)) % p).collect();
            f.push(1);
            if poly_rem(m, &f, p).iter().all(|&c| c == 0) {
                return false;
            }
        }
    }
    true
}

/// Smallest monic irreducible polynomial of degree `s` over GF(p), comparing
/// coefficient lists low-degree-first.
fn smallest_irreducible(p: u32, s: u32) -> Vec<u32> {
    if s == 1 {
        return vec![0, 1];
    }
    let count = p.pow(s);
    for idx in 0..count {
        // the constant coefficient is the most significant digit of the order
        let mut m: Vec<u32> = (0..s).map(|i| (idx / p.pow(s - 1 - i)) % p).collect();
        m.push(1);
        if is_irreducible(&m, p) {
            return m;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

impl Field {
    /// Build GF(p^s) with the lexicographically smallest monic irreducible modulus.
    pub fn new(p: u32, s: u32) -> Result<Field, FieldError> {
        Self::check_range(p, s)?;
        let modulus = smallest_irreducible(p, s);
        Ok(Self::build(p, s, modulus))
    }

    /// Build GF(p^s) with a caller-supplied modulus (coefficients low-first, monic).
    pub fn with_modulus(p: u32, s: u32, modulus: &[u32]) -> Result<Field, FieldError> {
        Self::check_range(p, s)?;
        let ok = modulus.len() == s as usize + 1
            && modulus.iter().all(|&c| c < p)
            && modulus[s as usize] == 1
            && (s == 1 || is_irreducible(modulus, p));
        if !ok {
            return Err(FieldError::BadModulus(modulus.to_vec()));
        }
        // for s = 1 the modulus is always X: elements are residues mod p
        let modulus = if s == 1 { vec![0, 1] } else { modulus.to_vec() };
        Ok(Self::build(p, s, modulus))
    }

    fn check_range(p: u32, s: u32) -> Result<(), FieldError> {
        if !is_prime(p) {
            return Err(FieldError::NonPrime(p));
        }
        if p > MAX_P || s == 0 || s > MAX_S {
            return Err(FieldError::RangeExceeded { p, s });
        }
        Ok(())
    }

    fn build(p: u32, s: u32, modulus: Vec<u32>) -> Field {
        let q = p.pow(s);
        let digits = |x: u32| -> Vec<u32> { (0..s).map(|i| (x / p.pow(i)) % p).collect() };
        let undigits = |d: &[u32]| -> u32 { d.iter().enumerate().map(|(i, &c)| c * p.pow(i as u32)).sum() };
        let slow_mul = |a: u32, b: u32| -> u32 {
            if s == 1 {
                return (a * b) % p;
            }
            let (da, db) = (digits(a), digits(b));
            let mut prod = vec![0u32; 2 * s as usize - 1];
            for (i, &x) in da.iter().enumerate() {
                for (j, &y) in db.iter().enumerate() {
                    prod[i + j] = (prod[i + j] + x * y) % p;
                }
            }
            let mut r = poly_rem(&prod, &modulus, p);
            r.resize(s as usize, 0);
            undigits(&r)
        };
        // smallest generator of the multiplicative group
        let order_of = |g: u32| -> u32 {
            let mut x = g;
            let mut k = 1;
            while x != 1 {
                x = slow_mul(x, g);
                k += 1;
            }
            k
        };
        let gen = if q == 2 { 1 } else { (2..q).find(|&g| order_of(g) == q - 1).unwrap() };
        let n = (q - 1) as usize;
        let mut exp = vec![0u32; 2 * n.max(1)];
        let mut log = vec![0u32; q as usize];
        let mut x = 1u32;
        for i in 0..n {
            exp[i] = x;
            log[x as usize] = i as u32;
            x = slow_mul(x, gen);
        }
        for i in n..2 * n {
            exp[i] = exp[i - n];
        }
        let neg: Vec<u32> =
            (0..q).map(|a| undigits(&digits(a).iter().map(|&c| (p - c) % p).collect::<Vec<_>>())).collect();
        let add = (q <= ADD_TABLE_LIMIT).then(|| {
            let mut t = vec![0u16; (q * q) as usize];
            for a in 0..q {
                let da = digits(a);
                for b in 0..q {
                    let db = digits(b);
                    let sum: Vec<u32> = da.iter().zip(&db).map(|(x, y)| (x + y) % p).collect();
                    t[(a * q + b) as usize] = undigits(&sum) as u16;
                }
            }
            t
        });
        Field { inner: Arc::new(Inner { p, s, q, modulus, exp, log, neg, add }) }
    }

    pub fn p(&self) -> u32 {
        self.inner.p
    }

    pub fn s(&self) -> u32 {
        self.inner.s
    }

    /// Number of elements.
    pub fn q(&self) -> u32 {
        self.inner.q
    }

    /// The defining modulus, coefficients low-degree-first.
    pub fn modulus(&self) -> &[u32] {
        &self.inner.modulus
    }

    pub fn is_prime_field(&self) -> bool {
        self.inner.s == 1
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem(0)
    }

    pub fn one(&self) -> FieldElem {
        FieldElem(1)
    }

    /// The element with the given canonical index.
    pub fn elem(&self, index: u32) -> FieldElem {
        assert!(index < self.inner.q, "index {index} outside GF({})", self.inner.q);
        FieldElem(index)
    }

    /// All elements in index order.
    pub fn elements(&self) -> impl Iterator<Item = FieldElem> {
        (0..self.inner.q).map(FieldElem)
    }

    /// The image of an integer under Z -> GF(p).
    pub fn from_int(&self, n: i64) -> FieldElem {
        FieldElem(n.rem_euclid(self.inner.p as i64) as u32)
    }

    /// Element from its power-basis coefficients (low-degree-first, missing entries are 0).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<FieldElem, FieldError> {
        let (p, s) = (self.inner.p, self.inner.s as usize);
        if coeffs.len() > s || coeffs.iter().any(|&c| c >= p) {
            return Err(FieldError::BadElement(coeffs.to_vec()));
        }
        Ok(FieldElem(coeffs.iter().enumerate().map(|(i, &c)| c * p.pow(i as u32)).sum()))
    }

    /// Power-basis coefficients of `a`, length s, low-degree-first.
    pub fn coeffs(&self, a: FieldElem) -> Vec<u32> {
        let p = self.inner.p;
        (0..self.inner.s).map(|i| (a.0 / p.pow(i)) % p).collect()
    }

    /// The prime-field generator 1 scaled: true iff `a` lies in GF(p).
    pub fn in_prime_field(&self, a: FieldElem) -> bool {
        a.0 < self.inner.p
    }

    /// True iff `a` lies in the subfield GF(p^k) (k must divide s).
    pub fn in_subfield(&self, a: FieldElem, k: u32) -> bool {
        self.pow(a, (self.inner.p as u64).pow(k)) == a
    }

    #[inline]
    pub fn add(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let inner = &*self.inner;
        if inner.s == 1 {
            let t = a.0 + b.0;
            return FieldElem(if t >= inner.p { t - inner.p } else { t });
        }
        if let Some(t) = &inner.add {
            return FieldElem(t[(a.0 * inner.q + b.0) as usize] as u32);
        }
        let p = inner.p;
        let (mut x, mut y, mut r, mut w) = (a.0, b.0, 0, 1);
        for _ in 0..inner.s {
            r += ((x % p + y % p) % p) * w;
            x /= p;
            y /= p;
            w *= p;
        }
        FieldElem(r)
    }

    #[inline]
    pub fn neg(&self, a: FieldElem) -> FieldElem {
        FieldElem(self.inner.neg[a.0 as usize])
    }

    #[inline]
    pub fn sub(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        let inner = &*self.inner;
        if inner.s == 1 {
            return FieldElem((a.0 * b.0) % inner.p);
        }
        if a.0 == 0 || b.0 == 0 {
            return FieldElem(0);
        }
        FieldElem(inner.exp[(inner.log[a.0 as usize] + inner.log[b.0 as usize]) as usize])
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: FieldElem) -> Option<FieldElem> {
        if a.0 == 0 {
            return None;
        }
        let inner = &*self.inner;
        let n = inner.q - 1;
        Some(FieldElem(inner.exp[((n - inner.log[a.0 as usize]) % n.max(1)) as usize]))
    }

    /// `a / b`; panics when `b` is zero.
    pub fn div(&self, a: FieldElem, b: FieldElem) -> FieldElem {
        self.mul(a, self.inv(b).expect("division by zero in finite field"))
    }

    /// `a^k` with the convention `0^0 = 1`.
    pub fn pow(&self, a: FieldElem, k: u64) -> FieldElem {
        if k == 0 {
            return self.one();
        }
        if a.0 == 0 {
            return self.zero();
        }
        let inner = &*self.inner;
        let n = (inner.q - 1) as u64;
        let l = (inner.log[a.0 as usize] as u64 * (k % n)) % n;
        FieldElem(inner.exp[l as usize])
    }

    /// The Frobenius map a -> a^p.
    pub fn frobenius(&self, a: FieldElem) -> FieldElem {
        self.pow(a, self.inner.p as u64)
    }

    /// Multiplicative order of a nonzero element.
    pub fn order(&self, a: FieldElem) -> Option<u64> {
        if a.0 == 0 {
            return None;
        }
        let n = (self.inner.q - 1) as u64;
        let l = self.inner.log[a.0 as usize] as u64;
        Some(n / gcd(n, l))
    }

    /// A fixed generator of the multiplicative group.
    pub fn primitive_element(&self) -> FieldElem {
        FieldElem(self.inner.exp[if self.inner.q == 2 { 0 } else { 1 }])
    }

    /// The unique square root in characteristic 2 (Frobenius is bijective).
    pub fn sqrt_char2(&self, a: FieldElem) -> FieldElem {
        assert_eq!(self.inner.p, 2, "square roots via Frobenius need characteristic 2");
        self.pow(a, 1u64 << (self.inner.s - 1))
    }

    /// Serialize an element: a bare integer for prime fields, else the coefficient list.
    pub fn to_json(&self, a: FieldElem) -> serde_json::Value {
        if self.inner.s == 1 {
            serde_json::Value::from(a.0)
        } else {
            serde_json::Value::from(self.coeffs(a))
        }
    }

    /// Parse an element from a bare integer (reduced mod p) or a coefficient list.
    pub fn from_json(&self, v: &serde_json::Value) -> Result<FieldElem, FieldError> {
        match v {
            serde_json::Value::Number(n) => {
                let k = n.as_i64().ok_or_else(|| FieldError::BadElement(vec![]))?;
                Ok(self.from_int(k))
            }
            serde_json::Value::Array(items) => {
                let mut cs = Vec::with_capacity(items.len());
                for it in items {
                    let k = it.as_i64().ok_or_else(|| FieldError::BadElement(cs.clone()))?;
                    cs.push(k.rem_euclid(self.inner.p as i64) as u32);
                }
                self.from_coeffs(&cs)
            }
            _ => Err(FieldError::BadElement(vec![])),
        }
    }

    /// Human-readable rendering: an integer for prime fields, else a polynomial in `a`.
    pub fn fmt_elem(&self, x: FieldElem) -> String {
        if self.inner.s == 1 {
            return x.0.to_string();
        }
        let cs = self.coeffs(x);
        let mut parts = Vec::new();
        for (i, &c) in cs.iter().enumerate() {
            if c == 0 {
                continue;
            }
            parts.push(match (i, c) {
                (0, _) => c.to_string(),
                (1, 1) => "a".to_string(),
                (1, _) => format!("{c}a"),
                (_, 1) => format!("a^{i}"),
                _ => format!("{c}a^{i}"),
            });
        }
        if parts.is_empty() {
            "0".into()
        } else {
            parts.join("+")
        }
    }
}

pub(crate) fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
