//! Coefficient fields: finite fields `F_q`, the p-adic field `Q_p` and the
//! Laurent-series field `F_q((t))`, the last two truncated to a fixed number of
//! significant digits.
//!
//! Truncated elements follow the capped-relative model: a nonzero element is
//! `pi^val * (unit + O(pi^rel))` with `1 <= rel <= prec`. Cancellation can
//! destroy every known digit, which produces a zero known only up to
//! `O(pi^k)`. Such zeros behave as zero (valuation infinity) but remember
//! their absolute precision, and inverting one is a precision error rather
//! than a division by zero.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::str::FromStr;

use rand_core::RngCore;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("invalid field spec: {0}")]
    InvalidSpec(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("no significant digits left")]
    PrecisionExhausted,
    #[error("element is not integral")]
    NotIntegral,
    #[error("cannot parse element literal {0:?}")]
    BadLiteral(String),
    #[error("operation not supported for {0} fields")]
    Unsupported(&'static str),
}

/// A discrete valuation value, `Infinity` standing for `v(0)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Valuation {
    Finite(i64),
    Infinity,
}

impl Valuation {
    pub fn finite(self) -> Option<i64> {
        match self {
            Valuation::Finite(v) => Some(v),
            Valuation::Infinity => None,
        }
    }
}

impl fmt::Display for Valuation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Valuation::Finite(v) => write!(f, "{v}"),
            Valuation::Infinity => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldKind {
    Finite,
    PAdic,
    Laurent,
}

impl FieldKind {
    fn name(self) -> &'static str {
        match self {
            FieldKind::Finite => "finite",
            FieldKind::PAdic => "p-adic",
            FieldKind::Laurent => "laurent",
        }
    }
}

/// Which field to build. Grammar: `Fq:q=<n>`, `Qp:p=<prime>,prec=<n>`,
/// `Laurent:q=<n>,prec=<n>`; `F<n>` is accepted for `Fq:q=<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FieldSpec {
    Finite { q: u32 },
    PAdic { p: u32, prec: u32 },
    Laurent { q: u32, prec: u32 },
}

impl FieldSpec {
    pub fn kind(self) -> FieldKind {
        match self {
            FieldSpec::Finite { .. } => FieldKind::Finite,
            FieldSpec::PAdic { .. } => FieldKind::PAdic,
            FieldSpec::Laurent { .. } => FieldKind::Laurent,
        }
    }
}

impl fmt::Display for FieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            FieldSpec::Finite { q } => write!(f, "Fq:q={q}"),
            FieldSpec::PAdic { p, prec } => write!(f, "Qp:p={p},prec={prec}"),
            FieldSpec::Laurent { q, prec } => write!(f, "Laurent:q={q},prec={prec}"),
        }
    }
}

impl FromStr for FieldSpec {
    type Err = FieldError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FieldError::InvalidSpec(s.to_string());
        let s = s.trim();
        if let Some(rest) = s.strip_prefix('F') {
            if !rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit()) {
                return Ok(FieldSpec::Finite {
                    q: rest.parse().map_err(|_| bad())?,
                });
            }
        }
        let (kind, params) = s.split_once(':').ok_or_else(bad)?;
        let mut q = None;
        let mut p = None;
        let mut prec = None;
        for kv in params.split(',') {
            let (k, v) = kv.split_once('=').ok_or_else(bad)?;
            let v: u32 = v.trim().parse().map_err(|_| bad())?;
            match k.trim() {
                "q" => q = Some(v),
                "p" => p = Some(v),
                "prec" => prec = Some(v),
                _ => return Err(bad()),
            }
        }
        match (kind.trim(), q, p, prec) {
            ("Fq", Some(q), None, None) => Ok(FieldSpec::Finite { q }),
            ("Qp", None, Some(p), Some(prec)) => Ok(FieldSpec::PAdic { p, prec }),
            ("Laurent", Some(q), None, Some(prec)) => Ok(FieldSpec::Laurent { q, prec }),
            _ => Err(bad()),
        }
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d.saturating_mul(d) <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// `Some((p, k))` when `q = p^k` with `p` prime.
pub fn prime_power(q: u32) -> Option<(u32, u32)> {
    if q < 2 {
        return None;
    }
    let p = (2..=q).find(|d| q % d == 0)?;
    let mut rest = q;
    let mut k = 0;
    while rest % p == 0 {
        rest /= p;
        k += 1;
    }
    (rest == 1).then_some((p, k))
}

/// Uniform integer in `0..n` by rejection sampling.
pub fn uniform_below<R: RngCore + ?Sized>(rng: &mut R, n: u64) -> u64 {
    assert!(n > 0);
    let zone = u64::MAX - (u64::MAX - n + 1) % n;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % n;
        }
    }
}

/// `GF(p^k)` with elements encoded as integers `sum c_i p^i`, where `c_i` are
/// the coefficients of a polynomial reduced modulo a fixed irreducible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteField {
    p: u32,
    degree: u32,
    q: u32,
    /// Monic irreducible, low coefficients first (length `degree + 1`).
    modulus: Vec<u32>,
    mul_table: Vec<u32>,
    inv_table: Vec<u32>,
}

const TABLE_LIMIT: u32 = 256;

impl FiniteField {
    pub fn new(q: u32) -> Result<Self, FieldError> {
        let (p, degree) = prime_power(q)
            .ok_or_else(|| FieldError::InvalidSpec(format!("{q} is not a prime power")))?;
        if q > 1 << 16 {
            return Err(FieldError::InvalidSpec(format!("q = {q} is too large")));
        }
        let modulus = if degree == 1 {
            vec![0, 1]
        } else {
            least_irreducible(p, degree)
        };
        let mut field = FiniteField {
            p,
            degree,
            q,
            modulus,
            mul_table: Vec::new(),
            inv_table: Vec::new(),
        };
        if q <= TABLE_LIMIT {
            let mut mul = vec![0; (q * q) as usize];
            let mut inv = vec![0; q as usize];
            for a in 0..q {
                for b in 0..q {
                    let c = field.mul_slow(a, b);
                    mul[(a * q + b) as usize] = c;
                    if c == 1 {
                        inv[a as usize] = b;
                    }
                }
            }
            field.mul_table = mul;
            field.inv_table = inv;
        }
        Ok(field)
    }

    pub fn order(&self) -> u32 {
        self.q
    }

    pub fn characteristic(&self) -> u32 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    fn coeffs(&self, a: u32) -> Vec<u32> {
        let mut out = vec![0; self.degree as usize];
        let mut x = a;
        for c in out.iter_mut() {
            *c = x % self.p;
            x /= self.p;
        }
        out
    }

    fn encode(&self, coeffs: &[u32]) -> u32 {
        coeffs.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, a: u32, b: u32) -> u32 {
        if self.degree == 1 {
            return (a + b) % self.p;
        }
        let (ca, cb) = (self.coeffs(a), self.coeffs(b));
        let sum: Vec<u32> = ca.iter().zip(&cb).map(|(x, y)| (x + y) % self.p).collect();
        self.encode(&sum)
    }

    pub fn neg(&self, a: u32) -> u32 {
        if self.degree == 1 {
            return (self.p - a) % self.p;
        }
        let c: Vec<u32> = self
            .coeffs(a)
            .iter()
            .map(|x| (self.p - x) % self.p)
            .collect();
        self.encode(&c)
    }

    pub fn sub(&self, a: u32, b: u32) -> u32 {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: u32, b: u32) -> u32 {
        if !self.mul_table.is_empty() {
            return self.mul_table[(a * self.q + b) as usize];
        }
        self.mul_slow(a, b)
    }

    fn mul_slow(&self, a: u32, b: u32) -> u32 {
        if self.degree == 1 {
            return ((u64::from(a) * u64::from(b)) % u64::from(self.p)) as u32;
        }
        let (ca, cb) = (self.coeffs(a), self.coeffs(b));
        let n = self.degree as usize;
        let mut prod = vec![0u32; 2 * n - 1];
        for (i, x) in ca.iter().enumerate() {
            for (j, y) in cb.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        for k in (n..prod.len()).rev() {
            let c = prod[k];
            if c == 0 {
                continue;
            }
            // x^k = x^{k-n} * x^n and x^n = -sum modulus[i] x^i
            for i in 0..n {
                let sub = (c * self.modulus[i]) % self.p;
                prod[k - n + i] = (prod[k - n + i] + self.p - sub) % self.p;
            }
            prod[k] = 0;
        }
        self.encode(&prod[..n])
    }

    pub fn pow(&self, a: u32, mut e: u64) -> u32 {
        let mut base = a;
        let mut acc = 1;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: u32) -> Result<u32, FieldError> {
        if a == 0 {
            return Err(FieldError::DivisionByZero);
        }
        if !self.inv_table.is_empty() {
            return Ok(self.inv_table[a as usize]);
        }
        Ok(self.pow(a, u64::from(self.q) - 2))
    }

    /// Image of an integer under `Z -> F_p -> F_q`.
    pub fn from_int(&self, n: i64) -> u32 {
        n.rem_euclid(i64::from(self.p)) as u32
    }

    /// Inverse of `x -> x^p`, which is `x -> x^{q/p}`.
    pub fn frobenius_root(&self, a: u32) -> u32 {
        self.pow(a, u64::from(self.q / self.p))
    }

    pub fn random<R: RngCore + ?Sized>(&self, rng: &mut R) -> u32 {
        uniform_below(rng, u64::from(self.q)) as u32
    }
}

fn least_irreducible(p: u32, degree: u32) -> Vec<u32> {
    let n = degree as usize;
    let count = p.pow(degree);
    for code in 0..count {
        let mut poly = vec![0u32; n + 1];
        let mut x = code;
        for c in poly.iter_mut().take(n) {
            *c = x % p;
            x /= p;
        }
        poly[n] = 1;
        if poly[0] != 0 && is_irreducible(&poly, p) {
            return poly;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let n = poly.len() - 1;
    for d in 1..=n / 2 {
        for code in 0..p.pow(d as u32) {
            let mut div = vec![0u32; d + 1];
            let mut x = code;
            for c in div.iter_mut().take(d) {
                *c = x % p;
                x /= p;
            }
            div[d] = 1;
            if poly_rem_is_zero(poly, &div, p) {
                return false;
            }
        }
    }
    true
}

fn poly_rem_is_zero(a: &[u32], monic: &[u32], p: u32) -> bool {
    let mut r = a.to_vec();
    let d = monic.len() - 1;
    for k in (d..r.len()).rev() {
        let c = r[k];
        if c == 0 {
            continue;
        }
        for i in 0..=d {
            let sub = (c * monic[i]) % p;
            r[k - d + i] = (r[k - d + i] + p - sub) % p;
        }
    }
    r.iter().all(|&c| c == 0)
}

/// Marker for an exactly known zero (no precision bound).
const EXACT: i64 = i64::MAX;

/// `p^val * (unit + O(p^rel))`; `rel == 0` encodes a zero known to
/// `O(p^val)`, or the exact zero when `val == EXACT`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PadicNum {
    val: i64,
    unit: u64,
    rel: u32,
}

/// `t^val * (c_0 + c_1 t + ... + O(t^{coeffs.len()}))` with `c_0 != 0`; an
/// empty coefficient list encodes a zero known to `O(t^val)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct LaurentNum {
    val: i64,
    coeffs: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FieldElement {
    Finite(u32),
    PAdic(PadicNum),
    Laurent(LaurentNum),
}

/// Classification of a coefficient field as a topological field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub tag: ClassTag,
    pub characteristic: u32,
    pub residue_size: u32,
    pub local: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassTag {
    Finite,
    LaurentSeries,
    PAdic,
}

impl ClassTag {
    pub fn name(self) -> &'static str {
        match self {
            ClassTag::Finite => "finite",
            ClassTag::LaurentSeries => "laurent-series",
            ClassTag::PAdic => "p-adic",
        }
    }
}

/// Arithmetic context for one coefficient field.
#[derive(Debug, Clone)]
pub struct Field {
    spec: FieldSpec,
    residue: FiniteField,
    /// `p^k` for `k <= prec` (p-adic only).
    powers: Vec<u64>,
}

impl Field {
    pub fn new(spec: FieldSpec) -> Result<Self, FieldError> {
        let (residue, powers) = match spec {
            FieldSpec::Finite { q } => (FiniteField::new(q)?, Vec::new()),
            FieldSpec::PAdic { p, prec } => {
                if !is_prime(p) {
                    return Err(FieldError::InvalidSpec(format!("{p} is not prime")));
                }
                if prec == 0 {
                    return Err(FieldError::InvalidSpec("precision must be positive".into()));
                }
                let mut powers = vec![1u64];
                for _ in 0..prec {
                    let next = powers.last().unwrap().checked_mul(u64::from(p));
                    match next {
                        Some(x) if x < 1 << 62 => powers.push(x),
                        _ => {
                            return Err(FieldError::InvalidSpec(format!(
                                "{p}^{prec} does not fit in 62 bits"
                            )))
                        }
                    }
                }
                (FiniteField::new(p)?, powers)
            }
            FieldSpec::Laurent { q, prec } => {
                if prec == 0 {
                    return Err(FieldError::InvalidSpec("precision must be positive".into()));
                }
                (FiniteField::new(q)?, Vec::new())
            }
        };
        Ok(Field {
            spec,
            residue,
            powers,
        })
    }

    pub fn spec(&self) -> FieldSpec {
        self.spec
    }

    pub fn kind(&self) -> FieldKind {
        self.spec.kind()
    }

    pub fn residue_field(&self) -> &FiniteField {
        &self.residue
    }

    /// Size `q` of the residue field (the field itself when finite).
    pub fn residue_size(&self) -> u32 {
        self.residue.order()
    }

    pub fn characteristic(&self) -> u32 {
        match self.spec {
            FieldSpec::PAdic { .. } => 0,
            _ => self.residue.characteristic(),
        }
    }

    /// Relative precision cap; `None` for finite fields.
    pub fn precision(&self) -> Option<u32> {
        match self.spec {
            FieldSpec::Finite { .. } => None,
            FieldSpec::PAdic { prec, .. } | FieldSpec::Laurent { prec, .. } => Some(prec),
        }
    }

    fn prec(&self) -> u32 {
        self.precision().unwrap_or(0)
    }

    fn p(&self) -> u64 {
        u64::from(self.residue.characteristic())
    }

    pub fn classify(&self) -> Classification {
        classify(self.spec)
    }

    pub fn zero(&self) -> FieldElement {
        match self.kind() {
            FieldKind::Finite => FieldElement::Finite(0),
            FieldKind::PAdic => FieldElement::PAdic(PadicNum {
                val: EXACT,
                unit: 0,
                rel: 0,
            }),
            FieldKind::Laurent => FieldElement::Laurent(LaurentNum {
                val: EXACT,
                coeffs: Vec::new(),
            }),
        }
    }

    pub fn one(&self) -> FieldElement {
        self.from_int(1)
    }

    pub fn from_int(&self, n: i64) -> FieldElement {
        match self.kind() {
            FieldKind::Finite => FieldElement::Finite(self.residue.from_int(n)),
            FieldKind::PAdic => {
                if n == 0 {
                    return self.zero();
                }
                let p = self.p() as i64;
                let mut m = n;
                let mut v = 0;
                while m % p == 0 {
                    m /= p;
                    v += 1;
                }
                let modulus = self.powers[self.prec() as usize] as i128;
                let unit = (i128::from(m)).rem_euclid(modulus) as u64;
                FieldElement::PAdic(PadicNum {
                    val: v,
                    unit,
                    rel: self.prec(),
                })
            }
            FieldKind::Laurent => {
                let c = self.residue.from_int(n);
                if c == 0 {
                    return self.zero();
                }
                self.monomial(c, 0)
            }
        }
    }

    /// Element of the residue field, lifted by its Teichmuller-free digit
    /// representative (the integer code for `Q_p`, the constant for `F_q((t))`).
    pub fn from_residue(&self, code: u32) -> FieldElement {
        match self.kind() {
            FieldKind::Finite => FieldElement::Finite(code % self.residue.order()),
            FieldKind::PAdic => self.from_int(i64::from(code % self.residue.order())),
            FieldKind::Laurent => {
                if code % self.residue.order() == 0 {
                    self.zero()
                } else {
                    self.monomial(code % self.residue.order(), 0)
                }
            }
        }
    }

    /// `c * t^k` in `F_q((t))`, or `c * p^k` in `Q_p`.
    pub fn monomial(&self, c: u32, k: i64) -> FieldElement {
        match self.kind() {
            FieldKind::Finite => FieldElement::Finite(c),
            FieldKind::PAdic => {
                let x = self.from_int(i64::from(c));
                match x {
                    FieldElement::PAdic(n) if n.rel > 0 => FieldElement::PAdic(PadicNum {
                        val: n.val + k,
                        ..n
                    }),
                    other => other,
                }
            }
            FieldKind::Laurent => {
                if c == 0 {
                    return self.zero();
                }
                let mut coeffs = vec![0; self.prec() as usize];
                coeffs[0] = c;
                FieldElement::Laurent(LaurentNum { val: k, coeffs })
            }
        }
    }

    /// The uniformizer `p` or `t`.
    pub fn uniformizer(&self) -> Result<FieldElement, FieldError> {
        match self.kind() {
            FieldKind::Finite => Err(FieldError::Unsupported("finite")),
            _ => Ok(self.monomial(1, 1)),
        }
    }

    /// `sum digits[k] * pi^{offset + k}`, digits taken as residue codes.
    pub fn from_digits(&self, offset: i64, digits: &[u32]) -> FieldElement {
        let mut acc = self.zero();
        for (k, &d) in digits.iter().enumerate() {
            if d != 0 {
                acc = self.add(&acc, &self.monomial(d, offset + k as i64));
            }
        }
        acc
    }

    pub fn is_zero(&self, a: &FieldElement) -> bool {
        match a {
            FieldElement::Finite(x) => *x == 0,
            FieldElement::PAdic(n) => n.rel == 0,
            FieldElement::Laurent(n) => n.coeffs.is_empty(),
        }
    }

    pub fn valuation(&self, a: &FieldElement) -> Valuation {
        if self.is_zero(a) {
            return Valuation::Infinity;
        }
        match a {
            FieldElement::Finite(_) => Valuation::Finite(0),
            FieldElement::PAdic(n) => Valuation::Finite(n.val),
            FieldElement::Laurent(n) => Valuation::Finite(n.val),
        }
    }

    /// Exponent below which every digit of `a` is known; `None` when exact.
    pub fn absolute_precision(&self, a: &FieldElement) -> Option<i64> {
        match a {
            FieldElement::Finite(_) => None,
            FieldElement::PAdic(n) if n.val == EXACT => None,
            FieldElement::Laurent(n) if n.val == EXACT => None,
            FieldElement::PAdic(n) => Some(n.val + i64::from(n.rel)),
            FieldElement::Laurent(n) => Some(n.val + n.coeffs.len() as i64),
        }
    }

    /// Number of significant digits (0 for zeros, `None` for finite fields).
    pub fn relative_precision(&self, a: &FieldElement) -> Option<u32> {
        match a {
            FieldElement::Finite(_) => None,
            FieldElement::PAdic(n) => Some(n.rel),
            FieldElement::Laurent(n) => Some(n.coeffs.len() as u32),
        }
    }

    /// Equality up to the precision both sides are known to.
    pub fn eq_to_precision(&self, a: &FieldElement, b: &FieldElement) -> bool {
        self.is_zero(&self.sub(a, b))
    }

    pub fn add(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        match (a, b) {
            (FieldElement::Finite(x), FieldElement::Finite(y)) => {
                FieldElement::Finite(self.residue.add(*x, *y))
            }
            (FieldElement::PAdic(x), FieldElement::PAdic(y)) => {
                FieldElement::PAdic(self.padic_add(x, y))
            }
            (FieldElement::Laurent(x), FieldElement::Laurent(y)) => {
                FieldElement::Laurent(self.laurent_add(x, y))
            }
            _ => panic!("elements from different kinds of fields"),
        }
    }

    pub fn neg(&self, a: &FieldElement) -> FieldElement {
        match a {
            FieldElement::Finite(x) => FieldElement::Finite(self.residue.neg(*x)),
            FieldElement::PAdic(x) => {
                if x.rel == 0 {
                    return a.clone();
                }
                let m = self.powers[x.rel as usize];
                FieldElement::PAdic(PadicNum {
                    unit: m - x.unit,
                    ..*x
                })
            }
            FieldElement::Laurent(x) => FieldElement::Laurent(LaurentNum {
                val: x.val,
                coeffs: x.coeffs.iter().map(|&c| self.residue.neg(c)).collect(),
            }),
        }
    }

    pub fn sub(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        self.add(a, &self.neg(b))
    }

    pub fn mul(&self, a: &FieldElement, b: &FieldElement) -> FieldElement {
        match (a, b) {
            (FieldElement::Finite(x), FieldElement::Finite(y)) => {
                FieldElement::Finite(self.residue.mul(*x, *y))
            }
            (FieldElement::PAdic(x), FieldElement::PAdic(y)) => {
                FieldElement::PAdic(self.padic_mul(x, y))
            }
            (FieldElement::Laurent(x), FieldElement::Laurent(y)) => {
                FieldElement::Laurent(self.laurent_mul(x, y))
            }
            _ => panic!("elements from different kinds of fields"),
        }
    }

    pub fn inv(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        if let Some(err) = self.zero_error(a) {
            return Err(err);
        }
        Ok(match a {
            FieldElement::Finite(x) => FieldElement::Finite(self.residue.inv(*x)?),
            FieldElement::PAdic(x) => {
                let m = self.powers[x.rel as usize];
                FieldElement::PAdic(PadicNum {
                    val: -x.val,
                    unit: inv_mod(x.unit, m),
                    rel: x.rel,
                })
            }
            FieldElement::Laurent(x) => FieldElement::Laurent(LaurentNum {
                val: -x.val,
                coeffs: self.series_inverse(&x.coeffs)?,
            }),
        })
    }

    pub fn div(&self, a: &FieldElement, b: &FieldElement) -> Result<FieldElement, FieldError> {
        Ok(self.mul(a, &self.inv(b)?))
    }

    /// `None` for nonzero elements; otherwise the error an inversion raises.
    fn zero_error(&self, a: &FieldElement) -> Option<FieldError> {
        if !self.is_zero(a) {
            return None;
        }
        Some(match self.absolute_precision(a) {
            None => FieldError::DivisionByZero,
            Some(_) => FieldError::PrecisionExhausted,
        })
    }

    pub fn pow(&self, a: &FieldElement, mut e: u64) -> FieldElement {
        let mut base = a.clone();
        let mut acc = self.one();
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(&acc, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        acc
    }

    /// `x -> x^p` for characteristic `p > 0`.
    pub fn frobenius(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        match self.characteristic() {
            0 => Err(FieldError::Unsupported("characteristic-zero")),
            p => Ok(self.pow(a, u64::from(p))),
        }
    }

    /// Image in the residue field of an element of valuation `>= 0`.
    pub fn residue(&self, a: &FieldElement) -> Result<u32, FieldError> {
        match a {
            FieldElement::Finite(x) => Ok(*x),
            _ if self.is_zero(a) => match self.absolute_precision(a) {
                Some(k) if k < 1 => Err(FieldError::PrecisionExhausted),
                _ => Ok(0),
            },
            FieldElement::PAdic(x) => match x.val.cmp(&0) {
                Ordering::Less => Err(FieldError::NotIntegral),
                Ordering::Equal => Ok((x.unit % self.p()) as u32),
                Ordering::Greater => Ok(0),
            },
            FieldElement::Laurent(x) => match x.val.cmp(&0) {
                Ordering::Less => Err(FieldError::NotIntegral),
                Ordering::Equal => Ok(x.coeffs[0]),
                Ordering::Greater => Ok(0),
            },
        }
    }

    /// Digits of `a` at exponents `from..to` (base-p digits for `Q_p`,
    /// coefficients for `F_q((t))`).
    pub fn digits(&self, a: &FieldElement, from: i64, to: i64) -> Result<Vec<u32>, FieldError> {
        if self.kind() == FieldKind::Finite {
            return Err(FieldError::Unsupported("finite"));
        }
        if to <= from {
            return Ok(Vec::new());
        }
        if let Some(abs) = self.absolute_precision(a) {
            if abs < to {
                return Err(FieldError::PrecisionExhausted);
            }
        }
        let mut out = vec![0u32; (to - from) as usize];
        match a {
            FieldElement::PAdic(x) if x.rel > 0 => {
                let mut u = x.unit;
                for k in 0..x.rel as i64 {
                    let e = x.val + k;
                    let d = (u % self.p()) as u32;
                    u /= self.p();
                    if (from..to).contains(&e) {
                        out[(e - from) as usize] = d;
                    }
                }
            }
            FieldElement::Laurent(x) => {
                for (k, &c) in x.coeffs.iter().enumerate() {
                    let e = x.val + k as i64;
                    if (from..to).contains(&e) {
                        out[(e - from) as usize] = c;
                    }
                }
            }
            _ => {}
        }
        Ok(out)
    }

    /// Random element with valuation in `min_val..=max_val`; zero is never
    /// returned. For finite fields the valuation range is ignored.
    pub fn random_nonzero<R: RngCore + ?Sized>(
        &self,
        rng: &mut R,
        min_val: i64,
        max_val: i64,
    ) -> FieldElement {
        let span = (max_val - min_val + 1).max(1) as u64;
        let val = min_val + uniform_below(rng, span) as i64;
        match self.kind() {
            FieldKind::Finite => FieldElement::Finite(
                1 + uniform_below(rng, u64::from(self.residue.order() - 1)) as u32,
            ),
            FieldKind::PAdic => {
                let m = self.powers[self.prec() as usize];
                let unit = loop {
                    let u = uniform_below(rng, m);
                    if u % self.p() != 0 {
                        break u;
                    }
                };
                FieldElement::PAdic(PadicNum {
                    val,
                    unit,
                    rel: self.prec(),
                })
            }
            FieldKind::Laurent => {
                let mut coeffs: Vec<u32> =
                    (0..self.prec()).map(|_| self.residue.random(rng)).collect();
                coeffs[0] = 1 + uniform_below(rng, u64::from(self.residue.order() - 1)) as u32;
                FieldElement::Laurent(LaurentNum { val, coeffs })
            }
        }
    }

    /// Random element of valuation `>= 0` (zero allowed).
    pub fn random_integral<R: RngCore + ?Sized>(&self, rng: &mut R, max_val: i64) -> FieldElement {
        if uniform_below(rng, 16) == 0 {
            return self.zero();
        }
        self.random_nonzero(rng, 0, max_val)
    }

    pub fn parse_element(&self, s: &str) -> Result<FieldElement, FieldError> {
        let bad = || FieldError::BadLiteral(s.to_string());
        let s = s.trim();
        match self.kind() {
            FieldKind::Finite => {
                let n: i64 = s.parse().map_err(|_| bad())?;
                if self.residue.degree() == 1 {
                    Ok(FieldElement::Finite(self.residue.from_int(n)))
                } else if (0..i64::from(self.residue.order())).contains(&n) {
                    Ok(FieldElement::Finite(n as u32))
                } else {
                    Err(bad())
                }
            }
            FieldKind::PAdic => {
                let (num, den) = match s.split_once('/') {
                    Some((a, b)) => (a.trim(), b.trim()),
                    None => (s, "1"),
                };
                let num: i64 = num.parse().map_err(|_| bad())?;
                let den: i64 = den.parse().map_err(|_| bad())?;
                if den == 0 {
                    return Err(FieldError::DivisionByZero);
                }
                self.div(&self.from_int(num), &self.from_int(den))
            }
            FieldKind::Laurent => self.parse_laurent(s).ok_or_else(bad),
        }
    }

    fn parse_laurent(&self, s: &str) -> Option<FieldElement> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return None;
        }
        // Split into signed terms, keeping '-' that belongs to an exponent.
        let mut terms: Vec<(bool, String)> = Vec::new();
        let mut current = String::new();
        let mut negative = false;
        let mut prev = '\0';
        for ch in compact.chars() {
            if (ch == '+' || ch == '-') && prev != '^' && !(current.is_empty() && prev == '\0') {
                terms.push((negative, core::mem::take(&mut current)));
                negative = ch == '-';
            } else if ch == '-' && prev == '\0' {
                negative = true;
            } else {
                current.push(ch);
            }
            prev = ch;
        }
        terms.push((negative, current));
        let mut acc = self.zero();
        for (neg, term) in terms {
            if term.is_empty() {
                return None;
            }
            let (coef, exp) = match term.find('t') {
                None => (term.as_str(), 0i64),
                Some(pos) => {
                    let coef = term[..pos].trim_end_matches('*');
                    let rest = &term[pos + 1..];
                    let exp = if rest.is_empty() {
                        1
                    } else {
                        let e = rest.strip_prefix('^')?;
                        let e = e.trim_start_matches('(').trim_end_matches(')');
                        e.parse().ok()?
                    };
                    (if coef.is_empty() { "1" } else { coef }, exp)
                }
            };
            let c: i64 = coef.parse().ok()?;
            let code = if self.residue.degree() == 1 {
                self.residue.from_int(c)
            } else if (0..i64::from(self.residue.order())).contains(&c) {
                c as u32
            } else {
                return None;
            };
            let code = if neg { self.residue.neg(code) } else { code };
            acc = self.add(&acc, &self.monomial(code, exp));
        }
        Some(acc)
    }

    pub fn format_element(&self, a: &FieldElement) -> String {
        match a {
            FieldElement::Finite(x) => x.to_string(),
            FieldElement::PAdic(x) => {
                let p = self.p();
                if x.val == EXACT {
                    return "0".into();
                }
                if x.rel == 0 {
                    return format!("O({p}^{})", x.val);
                }
                format!(
                    "{}*{p}^{} + O({p}^{})",
                    x.unit,
                    x.val,
                    x.val + i64::from(x.rel)
                )
            }
            FieldElement::Laurent(x) => {
                if x.val == EXACT {
                    return "0".into();
                }
                let mut parts: Vec<String> = Vec::new();
                for (k, &c) in x.coeffs.iter().enumerate() {
                    if c != 0 {
                        parts.push(format!("{c}*t^{}", x.val + k as i64));
                    }
                }
                parts.push(format!("O(t^{})", x.val + x.coeffs.len() as i64));
                parts.join(" + ")
            }
        }
    }

    fn padic_add(&self, a: &PadicNum, b: &PadicNum) -> PadicNum {
        if a.rel == 0 && a.val == EXACT {
            return *b;
        }
        if b.rel == 0 && b.val == EXACT {
            return *a;
        }
        let abs = |x: &PadicNum| x.val + i64::from(x.rel);
        let target = abs(a).min(abs(b));
        let m = [a, b].iter().filter(|x| x.rel > 0).map(|x| x.val).min();
        let m = match m {
            Some(m) if m < target => m,
            _ => {
                return PadicNum {
                    val: target,
                    unit: 0,
                    rel: 0,
                }
            }
        };
        let r = (target - m) as u32;
        let modulus = u128::from(self.powers[r as usize]);
        let mut sum: u128 = 0;
        for x in [a, b] {
            if x.rel == 0 {
                continue;
            }
            let shift = x.val - m;
            if shift >= i64::from(r) {
                continue;
            }
            let term = u128::from(x.unit) * u128::from(self.powers[shift as usize]) % modulus;
            sum = (sum + term) % modulus;
        }
        self.padic_normalize(m, sum as u64, r)
    }

    fn padic_normalize(&self, val: i64, value: u64, r: u32) -> PadicNum {
        if value == 0 {
            return PadicNum {
                val: val + i64::from(r),
                unit: 0,
                rel: 0,
            };
        }
        let p = self.p();
        let mut v = 0u32;
        let mut u = value;
        while u % p == 0 {
            u /= p;
            v += 1;
        }
        PadicNum {
            val: val + i64::from(v),
            unit: u,
            rel: r - v,
        }
    }

    fn padic_mul(&self, a: &PadicNum, b: &PadicNum) -> PadicNum {
        let exact_zero = |x: &PadicNum| x.rel == 0 && x.val == EXACT;
        if exact_zero(a) || exact_zero(b) {
            return PadicNum {
                val: EXACT,
                unit: 0,
                rel: 0,
            };
        }
        if a.rel == 0 || b.rel == 0 {
            return PadicNum {
                val: a.val + b.val,
                unit: 0,
                rel: 0,
            };
        }
        let rel = a.rel.min(b.rel);
        let m = u128::from(self.powers[rel as usize]);
        let unit = (u128::from(a.unit) * u128::from(b.unit) % m) as u64;
        PadicNum {
            val: a.val + b.val,
            unit,
            rel,
        }
    }

    fn laurent_add(&self, a: &LaurentNum, b: &LaurentNum) -> LaurentNum {
        if a.val == EXACT {
            return b.clone();
        }
        if b.val == EXACT {
            return a.clone();
        }
        let abs = |x: &LaurentNum| x.val + x.coeffs.len() as i64;
        let target = abs(a).min(abs(b));
        let m = [a, b]
            .iter()
            .filter(|x| !x.coeffs.is_empty())
            .map(|x| x.val)
            .min();
        let m = match m {
            Some(m) if m < target => m,
            _ => {
                return LaurentNum {
                    val: target,
                    coeffs: Vec::new(),
                }
            }
        };
        let r = (target - m) as usize;
        let mut out = vec![0u32; r];
        for x in [a, b] {
            let shift = (x.val - m) as usize;
            for (k, &c) in x.coeffs.iter().enumerate() {
                if shift + k < r {
                    out[shift + k] = self.residue.add(out[shift + k], c);
                }
            }
        }
        laurent_normalize(m, out)
    }

    fn laurent_mul(&self, a: &LaurentNum, b: &LaurentNum) -> LaurentNum {
        if a.val == EXACT || b.val == EXACT {
            return LaurentNum {
                val: EXACT,
                coeffs: Vec::new(),
            };
        }
        if a.coeffs.is_empty() || b.coeffs.is_empty() {
            return LaurentNum {
                val: a.val + b.val,
                coeffs: Vec::new(),
            };
        }
        let r = a.coeffs.len().min(b.coeffs.len());
        let mut out = vec![0u32; r];
        for (i, &x) in a.coeffs.iter().take(r).enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.coeffs.iter().take(r - i).enumerate() {
                out[i + j] = self.residue.add(out[i + j], self.residue.mul(x, y));
            }
        }
        LaurentNum {
            val: a.val + b.val,
            coeffs: out,
        }
    }

    fn series_inverse(&self, a: &[u32]) -> Result<Vec<u32>, FieldError> {
        let r = a.len();
        let a0_inv = self.residue.inv(a[0])?;
        let mut b = vec![0u32; r];
        b[0] = a0_inv;
        for k in 1..r {
            let mut s = 0;
            for j in 1..=k {
                s = self.residue.add(s, self.residue.mul(a[j], b[k - j]));
            }
            b[k] = self.residue.neg(self.residue.mul(a0_inv, s));
        }
        Ok(b)
    }

    /// Builds a Laurent element from coefficients at exponents
    /// `lo..lo + coeffs.len()`, known up to `O(t^{lo + coeffs.len()})`.
    pub fn laurent_from_window(
        &self,
        lo: i64,
        coeffs: Vec<u32>,
    ) -> Result<FieldElement, FieldError> {
        if self.kind() != FieldKind::Laurent {
            return Err(FieldError::Unsupported(self.kind().name()));
        }
        let cap = self.prec() as usize;
        let mut n = laurent_normalize(lo, coeffs);
        n.coeffs.truncate(cap);
        Ok(FieldElement::Laurent(n))
    }
}

fn laurent_normalize(val: i64, coeffs: Vec<u32>) -> LaurentNum {
    match coeffs.iter().position(|&c| c != 0) {
        None => LaurentNum {
            val: val + coeffs.len() as i64,
            coeffs: Vec::new(),
        },
        Some(v) => LaurentNum {
            val: val + v as i64,
            coeffs: coeffs[v..].to_vec(),
        },
    }
}

fn inv_mod(a: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let (mut old_r, mut r) = (i128::from(a), i128::from(m));
    let (mut old_s, mut s) = (1i128, 0i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
    }
    debug_assert_eq!(old_r, 1, "not a unit");
    old_s.rem_euclid(i128::from(m)) as u64
}

/// Classifies the field described by `spec` without building it.
pub fn classify(spec: FieldSpec) -> Classification {
    match spec {
        FieldSpec::Finite { q } => Classification {
            tag: ClassTag::Finite,
            characteristic: prime_power(q).map_or(0, |(p, _)| p),
            residue_size: q,
            local: false,
        },
        FieldSpec::PAdic { p, .. } => Classification {
            tag: ClassTag::PAdic,
            characteristic: 0,
            residue_size: p,
            local: true,
        },
        FieldSpec::Laurent { q, .. } => Classification {
            tag: ClassTag::LaurentSeries,
            characteristic: prime_power(q).map_or(0, |(p, _)| p),
            residue_size: q,
            local: true,
        },
    }
}

/// Splits `a` in `F_q((t))` as `sum_{i < p} a_i^p t^i`.
pub fn frobenius_decompose(
    field: &Field,
    a: &FieldElement,
) -> Result<Vec<FieldElement>, FieldError> {
    let FieldElement::Laurent(x) = a else {
        return Err(FieldError::Unsupported(field.kind().name()));
    };
    let p = i64::from(field.characteristic());
    let res = field.residue_field();
    if x.val == EXACT {
        return Ok(vec![field.zero(); p as usize]);
    }
    let abs = x.val + x.coeffs.len() as i64;
    (0..p)
        .map(|i| {
            // a_i has coefficients at k with p*k + i in val..abs.
            let lo = (x.val - i).div_euclid(p) + i64::from((x.val - i).rem_euclid(p) != 0);
            let hi = (abs - i + p - 1).div_euclid(p);
            let coeffs: Vec<u32> = (lo..hi)
                .map(|k| {
                    let e = p * k + i;
                    let c = x.coeffs[(e - x.val) as usize];
                    res.frobenius_root(c)
                })
                .collect();
            field.laurent_from_window(lo, coeffs)
        })
        .collect()
}

/// `sum_i parts[i]^p t^i`.
pub fn frobenius_recompose(
    field: &Field,
    parts: &[FieldElement],
) -> Result<FieldElement, FieldError> {
    let t = field.uniformizer()?;
    let mut acc = field.zero();
    let mut t_pow = field.one();
    for part in parts {
        let term = field.mul(&field.frobenius(part)?, &t_pow);
        acc = field.add(&acc, &term);
        t_pow = field.mul(&t_pow, &t);
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrobeniusReport {
    pub degree: u32,
    pub checked: usize,
    pub failures: Vec<String>,
}

impl FrobeniusReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks on sampled elements that `1, t, ..., t^{p-1}` is a basis of
/// `F` over `F^p`: every element decomposes and recomposes exactly.
pub fn frobenius_index_check<R: RngCore + ?Sized>(
    field: &Field,
    samples: usize,
    rng: &mut R,
) -> Result<FrobeniusReport, FieldError> {
    if field.kind() != FieldKind::Laurent {
        return Err(FieldError::Unsupported(field.kind().name()));
    }
    let mut failures = Vec::new();
    let mut inputs = vec![field.one(), field.zero(), field.uniformizer()?];
    for _ in 0..samples {
        inputs.push(field.random_nonzero(rng, -4, 4));
    }
    for a in &inputs {
        let parts = frobenius_decompose(field, a)?;
        let back = frobenius_recompose(field, &parts)?;
        if !field.eq_to_precision(&back, a) {
            failures.push(field.format_element(a));
        }
    }
    Ok(FrobeniusReport {
        degree: field.characteristic(),
        checked: inputs.len(),
        failures,
    })
}
