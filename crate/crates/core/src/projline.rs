//! The projective line `P = F ∪ {∞}` under translations and the inversion
//! `x -> -x^{-1}`, and recovery of squaring and multiplication from that
//! action through Hua's identity
//! `xyx = (x^{-1} - (x + y^{-1})^{-1})^{-1} - x`.
//!
//! All `∞` bookkeeping lives in [`ProjLine::add`], [`ProjLine::neg`] and
//! [`ProjLine::inv`]: `0^{-1} = ∞`, `∞^{-1} = 0`, `-∞ = ∞`, `a + ∞ = ∞`
//! (including `∞ + ∞ = ∞`). A zero known only to finite precision inverts
//! to `∞` as well.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::localfield::{frobenius_decompose, Field, FieldElement, FieldError, FieldKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProjLineError {
    #[error("square root not available: {0}")]
    FrobeniusNotInvertible(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ProjPoint {
    Finite(FieldElement),
    Infinity,
}

impl ProjPoint {
    pub fn finite(&self) -> Option<&FieldElement> {
        match self {
            ProjPoint::Finite(a) => Some(a),
            ProjPoint::Infinity => None,
        }
    }
}

/// A generator of the little projective group: `τ_a` or `ι`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Generator {
    Translate(FieldElement),
    Invert,
}

#[derive(Debug, Clone)]
pub struct ProjLine {
    field: Field,
}

impl ProjLine {
    pub fn new(field: Field) -> Self {
        ProjLine { field }
    }

    pub fn field(&self) -> &Field {
        &self.field
    }

    pub fn point(&self, a: FieldElement) -> ProjPoint {
        ProjPoint::Finite(a)
    }

    pub fn parse_point(&self, s: &str) -> Result<ProjPoint, FieldError> {
        match s.trim() {
            "inf" | "∞" | "infinity" => Ok(ProjPoint::Infinity),
            lit => Ok(ProjPoint::Finite(self.field.parse_element(lit)?)),
        }
    }

    pub fn format_point(&self, x: &ProjPoint) -> String {
        match x {
            ProjPoint::Finite(a) => self.field.format_element(a),
            ProjPoint::Infinity => "inf".into(),
        }
    }

    /// Equality of points, finite parts compared to precision.
    pub fn same_point(&self, x: &ProjPoint, y: &ProjPoint) -> bool {
        match (x, y) {
            (ProjPoint::Infinity, ProjPoint::Infinity) => true,
            (ProjPoint::Finite(a), ProjPoint::Finite(b)) => self.field.eq_to_precision(a, b),
            _ => false,
        }
    }

    pub fn add(&self, x: &ProjPoint, y: &ProjPoint) -> ProjPoint {
        match (x, y) {
            (ProjPoint::Finite(a), ProjPoint::Finite(b)) => ProjPoint::Finite(self.field.add(a, b)),
            _ => ProjPoint::Infinity,
        }
    }

    pub fn neg(&self, x: &ProjPoint) -> ProjPoint {
        match x {
            ProjPoint::Finite(a) => ProjPoint::Finite(self.field.neg(a)),
            ProjPoint::Infinity => ProjPoint::Infinity,
        }
    }

    pub fn inv(&self, x: &ProjPoint) -> ProjPoint {
        match x {
            ProjPoint::Infinity => ProjPoint::Finite(self.field.zero()),
            ProjPoint::Finite(a) => match self.field.inv(a) {
                Ok(b) => ProjPoint::Finite(b),
                Err(_) => ProjPoint::Infinity,
            },
        }
    }

    /// `ι(x) = -x^{-1}`.
    pub fn iota(&self, x: &ProjPoint) -> ProjPoint {
        self.neg(&self.inv(x))
    }

    pub fn apply(&self, g: &Generator, x: &ProjPoint) -> ProjPoint {
        match g {
            Generator::Translate(a) => self.add(&ProjPoint::Finite(a.clone()), x),
            Generator::Invert => self.iota(x),
        }
    }

    /// Applies `word` left to right.
    pub fn pl_apply(&self, word: &[Generator], x: &ProjPoint) -> ProjPoint {
        word.iter().fold(x.clone(), |acc, g| self.apply(g, &acc))
    }

    pub fn hua_triple_product(&self, x: &ProjPoint, y: &ProjPoint) -> ProjPoint {
        let s = self.add(x, &self.inv(y));
        let d = self.add(&self.inv(x), &self.neg(&self.inv(&s)));
        self.add(&self.inv(&d), &self.neg(x))
    }

    pub fn recover_square(&self, x: &ProjPoint) -> ProjPoint {
        let one = ProjPoint::Finite(self.field.one());
        match x {
            ProjPoint::Infinity => ProjPoint::Infinity,
            ProjPoint::Finite(a) => match self.field.valuation(a).finite() {
                Some(v) if v < 0 => {
                    let ix = self.iota(x);
                    self.neg(&self.iota(&self.hua_triple_product(&ix, &one)))
                }
                _ => self.hua_triple_product(x, &one),
            },
        }
    }

    /// Recovered square of a finite element. `∞` here means every
    /// significant digit cancelled inside the identity.
    fn square(&self, a: &FieldElement) -> Result<FieldElement, FieldError> {
        match self.recover_square(&ProjPoint::Finite(a.clone())) {
            ProjPoint::Finite(b) => Ok(b),
            ProjPoint::Infinity => Err(FieldError::PrecisionExhausted),
        }
    }

    /// Inverse of `x -> x^2` in characteristic 2, built from recovered squaring.
    pub fn square_root(&self, a: &FieldElement) -> Result<FieldElement, ProjLineError> {
        if self.field.characteristic() != 2 {
            return Err(ProjLineError::Field(FieldError::Unsupported(
                "odd-characteristic",
            )));
        }
        match self.field.kind() {
            FieldKind::Finite => {
                let mut r = a.clone();
                for _ in 1..self.field.residue_field().degree() {
                    r = self.square(&r)?;
                }
                Ok(r)
            }
            FieldKind::Laurent => {
                let parts = frobenius_decompose(&self.field, a)?;
                if !self.field.is_zero(&parts[1]) {
                    return Err(ProjLineError::FrobeniusNotInvertible(
                        self.field.format_element(a),
                    ));
                }
                Ok(parts[0].clone())
            }
            FieldKind::PAdic => Err(ProjLineError::Field(FieldError::Unsupported("p-adic"))),
        }
    }

    /// `xy` from translations, inversion and recovered squares.
    pub fn recover_multiplication(
        &self,
        x: &FieldElement,
        y: &FieldElement,
    ) -> Result<FieldElement, ProjLineError> {
        let f = &self.field;
        if f.characteristic() == 2 {
            // x y^2 x = y x^2 y; the identity loses about |v(a b)| digits
            // computing a b a, so use the order with the smaller loss.
            let v = |a: &FieldElement| f.valuation(a).finite().unwrap_or(0);
            let (a, b) = if (v(x) + 2 * v(y)).abs() <= (2 * v(x) + v(y)).abs() {
                (x, y)
            } else {
                (y, x)
            };
            let b2 = ProjPoint::Finite(self.square(b)?);
            let ab2a = match self.hua_triple_product(&ProjPoint::Finite(a.clone()), &b2) {
                ProjPoint::Finite(v) => v,
                ProjPoint::Infinity => return Err(FieldError::PrecisionExhausted.into()),
            };
            return self.square_root(&ab2a);
        }
        let s = self.square(&f.add(x, y))?;
        let diff = f.sub(&f.sub(&s, &self.square(x)?), &self.square(y)?);
        let half = f.inv(&f.from_int(2))?;
        Ok(f.mul(&half, &diff))
    }

    /// `(x + y)^2 = x^2 + y^2` for every `y` in `ys`.
    pub fn frobenius_additive_at(&self, x: &FieldElement, ys: &[FieldElement]) -> bool {
        let f = &self.field;
        ys.iter().all(
            |y| match (self.square(&f.add(x, y)), self.square(x), self.square(y)) {
                (Ok(lhs), Ok(a), Ok(b)) => f.eq_to_precision(&lhs, &f.add(&a, &b)),
                _ => false,
            },
        )
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProjPoint::Finite(a) => write!(f, "{a:?}"),
            ProjPoint::Infinity => f.write_str("inf"),
        }
    }
}

/// Sample pairs for a recovery check, with the edge cases `xy = 0` and
/// `xy = -1` forced in.
pub fn edge_case_pairs(field: &Field, xs: &[FieldElement]) -> Vec<(FieldElement, FieldElement)> {
    let mut out = Vec::new();
    let minus_one = field.neg(&field.one());
    for x in xs {
        out.push((x.clone(), field.zero()));
        out.push((field.zero(), x.clone()));
        if let Ok(inv) = field.inv(x) {
            out.push((x.clone(), field.neg(&inv)));
        }
        out.push((x.clone(), field.neg(x)));
        out.push((x.clone(), field.sub(&minus_one, x)));
        out.push((minus_one.clone(), x.clone()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::localfield::FieldSpec;

    fn line(s: &str) -> ProjLine {
        ProjLine::new(Field::new(s.parse::<FieldSpec>().unwrap()).unwrap())
    }

    fn fin(l: &ProjLine, n: i64) -> ProjPoint {
        ProjPoint::Finite(l.field().from_int(n))
    }

    #[test]
    fn apply_examples() {
        let l = line("F5");
        let zero = fin(&l, 0);
        assert_eq!(l.pl_apply(&[Generator::Invert], &zero), ProjPoint::Infinity);
        let tau = Generator::Translate(l.field().from_int(3));
        assert_eq!(
            l.pl_apply(&[tau], &ProjPoint::Infinity),
            ProjPoint::Infinity
        );
        assert_eq!(l.iota(&fin(&l, 2)), fin(&l, 2));
        assert_eq!(l.iota(&ProjPoint::Infinity), zero);
    }

    #[test]
    fn hua_examples() {
        let l = line("F5");
        assert_eq!(l.hua_triple_product(&fin(&l, 2), &fin(&l, 3)), fin(&l, 2));
        assert_eq!(l.hua_triple_product(&fin(&l, 1), &fin(&l, -1)), fin(&l, -1));
        for x in 0..5 {
            assert_eq!(l.hua_triple_product(&fin(&l, x), &fin(&l, 0)), fin(&l, 0));
        }
    }

    /// Every pair of finite points of P^1(F_5), with `xy = 0` and `xy = -1`
    /// included, against the field product.
    #[test]
    fn hua_exhaustive_f5() {
        let l = line("F5");
        let f = l.field();
        for x in 0..5 {
            for y in 0..5 {
                let (a, b) = (f.from_int(x), f.from_int(y));
                let want = ProjPoint::Finite(f.mul(&f.mul(&a, &b), &a));
                let got = l.hua_triple_product(&fin(&l, x), &fin(&l, y));
                assert_eq!(got, want, "x={x} y={y}");
            }
            if x != 0 {
                assert_eq!(
                    l.hua_triple_product(&ProjPoint::Infinity, &fin(&l, x)),
                    ProjPoint::Infinity
                );
                assert_eq!(
                    l.hua_triple_product(&fin(&l, x), &ProjPoint::Infinity),
                    ProjPoint::Infinity
                );
            }
        }
    }

    #[test]
    fn square_examples() {
        let l = line("F7");
        assert_eq!(l.recover_square(&fin(&l, 3)), fin(&l, 2));
        assert_eq!(l.recover_square(&ProjPoint::Infinity), ProjPoint::Infinity);
        assert_eq!(l.recover_square(&fin(&l, 0)), fin(&l, 0));
        let q5 = line("Qp:p=5,prec=8");
        let x = q5.parse_point("7/25").unwrap();
        let want = q5.field().parse_element("49/625").unwrap();
        assert!(q5.same_point(&q5.recover_square(&x), &ProjPoint::Finite(want)));
    }

    #[test]
    fn multiplication_examples() {
        let l = line("F7");
        let f = l.field();
        let r = l
            .recover_multiplication(&f.from_int(3), &f.from_int(5))
            .unwrap();
        assert_eq!(r, f.from_int(1));
        let l4 = line("Fq:q=4");
        let w = FieldElement::Finite(2);
        let r = l4.recover_multiplication(&w, &w).unwrap();
        assert_eq!(r, FieldElement::Finite(3));
        for y in 0..4 {
            let y = FieldElement::Finite(y);
            assert_eq!(l4.recover_multiplication(&l4.field().one(), &y).unwrap(), y);
        }
    }

    #[test]
    fn char_two_laurent() {
        let l = line("Laurent:q=2,prec=8");
        let f = l.field();
        let x = f.parse_element("t^-1 + 1 + t^3").unwrap();
        let y = f.parse_element("t + t^2").unwrap();
        let r = l.recover_multiplication(&x, &y).unwrap();
        assert!(f.eq_to_precision(&r, &f.mul(&x, &y)));
        let t = f.uniformizer().unwrap();
        assert!(matches!(
            l.square_root(&t),
            Err(ProjLineError::FrobeniusNotInvertible(_))
        ));
        assert!(l.frobenius_additive_at(&x, &[y, t]));
    }
}
