//! Arithmetic in GF(p) for small primes, plus the dense polynomial helpers the
//! sharing layer needs: Horner evaluation and Lagrange interpolation.
//!
//! Elements are plain canonical residues; the modulus lives in a
//! [`FieldContext`] that is threaded through every operation.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A canonical residue in `[0, p)`. The modulus is carried by the context.
#[derive(
    Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct FieldElement(u64);

impl FieldElement {
    pub const ZERO: FieldElement = FieldElement(0);
    pub const ONE: FieldElement = FieldElement(1);

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FieldOp {
    Add,
    Sub,
    Mul,
    Inv,
    Neg,
}

/// The prime field together with the model alphabet bound `ell` and the user
/// count the prime was chosen for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldContext {
    p: u64,
    ell: u64,
    users: u64,
    conforming: bool,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n < 4 {
        return true;
    }
    if n.is_multiple_of(2) || n.is_multiple_of(3) {
        return false;
    }
    let mut d = 5u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) || n.is_multiple_of(d + 2) {
            return false;
        }
        d += 6;
    }
    true
}

impl FieldContext {
    /// Smallest prime `p` with `users*(ell-1) < p <= 2*users*(ell-1)`.
    pub fn select_prime(users: u64, ell: u64) -> Result<Self> {
        if users == 0 || ell < 2 {
            return Err(Error::InvalidParams(format!(
                "prime selection needs N >= 1 and ell >= 2 (got N={users}, ell={ell})"
            )));
        }
        let low = users
            .checked_mul(ell - 1)
            .ok_or_else(|| Error::InvalidParams("N*(ell-1) overflows".into()))?;
        let high = low
            .checked_mul(2)
            .ok_or_else(|| Error::InvalidParams("2*N*(ell-1) overflows".into()))?;
        let p = (low + 1..=high)
            .find(|&c| is_prime(c))
            .ok_or(Error::NoPrimeInInterval { low, high })?;
        Ok(FieldContext {
            p,
            ell,
            users,
            conforming: true,
        })
    }

    /// Manually chosen prime. Always tagged non-conforming, even when it
    /// happens to coincide with [`FieldContext::select_prime`].
    pub fn with_prime(p: u64, ell: u64, users: u64) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::NotPrime(p));
        }
        if p > u32::MAX as u64 {
            return Err(Error::InvalidParams(format!("prime {p} exceeds 32 bits")));
        }
        Ok(FieldContext {
            p,
            ell,
            users,
            conforming: false,
        })
    }

    pub fn modulus(&self) -> u64 {
        self.p
    }

    pub fn ell(&self) -> u64 {
        self.ell
    }

    pub fn users(&self) -> u64 {
        self.users
    }

    pub fn is_conforming(&self) -> bool {
        self.conforming
    }

    /// `ceil(log2 p)`.
    pub fn bits_per_symbol(&self) -> u32 {
        64 - (self.p - 1).leading_zeros()
    }

    pub fn element(&self, v: u64) -> FieldElement {
        FieldElement(v % self.p)
    }

    pub fn add(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0;
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    pub fn sub(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 {
            a.0 - b.0
        } else {
            a.0 + self.p - b.0
        })
    }

    pub fn neg(&self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    pub fn mul(&self, a: FieldElement, b: FieldElement) -> FieldElement {
        if self.p <= u32::MAX as u64 {
            FieldElement(a.0 * b.0 % self.p)
        } else {
            FieldElement(((a.0 as u128 * b.0 as u128) % self.p as u128) as u64)
        }
    }

    pub fn pow(&self, base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = FieldElement::ONE;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        FieldElement(acc.0 % self.p)
    }

    /// Multiplicative inverse by the extended Euclidean algorithm.
    pub fn inv(&self, a: FieldElement) -> Result<FieldElement> {
        if a.0 == 0 {
            return Err(Error::InverseOfZero);
        }
        let (mut r0, mut r1) = (self.p as i128, a.0 as i128);
        let (mut s0, mut s1) = (0i128, 1i128);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (s0, s1) = (s1, s0 - q * s1);
        }
        debug_assert_eq!(r0, 1);
        Ok(FieldElement(s0.rem_euclid(self.p as i128) as u64))
    }

    /// Dispatch form of the binary/unary operations. `b` is ignored by the
    /// unary ones.
    pub fn apply(&self, op: FieldOp, a: FieldElement, b: FieldElement) -> Result<FieldElement> {
        Ok(match op {
            FieldOp::Add => self.add(a, b),
            FieldOp::Sub => self.sub(a, b),
            FieldOp::Mul => self.mul(a, b),
            FieldOp::Neg => self.neg(a),
            FieldOp::Inv => self.inv(a)?,
        })
    }

    pub fn add_assign_vec(&self, acc: &mut [FieldElement], other: &[FieldElement]) {
        debug_assert_eq!(acc.len(), other.len());
        for (a, &b) in acc.iter_mut().zip(other) {
            *a = self.add(*a, b);
        }
    }

    /// Horner evaluation over a raw coefficient slice (lowest degree first).
    pub fn horner(&self, coeffs: &[FieldElement], x: FieldElement) -> FieldElement {
        coeffs
            .iter()
            .rev()
            .fold(FieldElement::ZERO, |acc, &c| self.add(self.mul(acc, x), c))
    }

    pub fn eval_poly(&self, poly: &Polynomial, x: FieldElement) -> FieldElement {
        self.horner(&poly.coeffs, x)
    }

    /// Coefficients of the Lagrange basis polynomials for the abscissae `xs`:
    /// entry `i` is the polynomial that is 1 at `xs[i]` and 0 at every other
    /// abscissa, as a dense vector of length `xs.len()`.
    pub fn lagrange_basis(&self, xs: &[FieldElement]) -> Result<Vec<Vec<FieldElement>>> {
        for (i, a) in xs.iter().enumerate() {
            if xs[..i].contains(a) {
                return Err(Error::DuplicateAbscissa(a.0));
            }
        }
        let n = xs.len();
        // master(x) = prod (x - x_j), degree n, monic
        let mut master = vec![FieldElement::ZERO; n + 1];
        master[0] = FieldElement::ONE;
        for (deg, &xj) in xs.iter().enumerate() {
            for k in (0..=deg + 1).rev() {
                let shifted = if k > 0 {
                    master[k - 1]
                } else {
                    FieldElement::ZERO
                };
                master[k] = self.sub(shifted, self.mul(xj, master[k]));
            }
        }
        let mut basis = Vec::with_capacity(n);
        for &xi in xs {
            // synthetic division of master by (x - xi)
            let mut quotient = vec![FieldElement::ZERO; n];
            let mut carry = FieldElement::ZERO;
            for k in (1..=n).rev() {
                carry = self.add(master[k], self.mul(carry, xi));
                quotient[k - 1] = carry;
            }
            let denom = self.horner(&quotient, xi);
            let scale = self.inv(denom)?;
            quotient.iter_mut().for_each(|c| *c = self.mul(*c, scale));
            basis.push(quotient);
        }
        Ok(basis)
    }

    /// The unique polynomial of degree `< points.len()` through `points`.
    pub fn lagrange_interpolate(
        &self,
        points: &[(FieldElement, FieldElement)],
    ) -> Result<Polynomial> {
        if points.is_empty() {
            return Err(Error::InsufficientEvaluations { needed: 1, got: 0 });
        }
        let xs: Vec<_> = points.iter().map(|&(x, _)| x).collect();
        let basis = self.lagrange_basis(&xs)?;
        let mut coeffs = vec![FieldElement::ZERO; points.len()];
        for (b, &(_, y)) in basis.iter().zip(points) {
            for (c, &bk) in coeffs.iter_mut().zip(b) {
                *c = self.add(*c, self.mul(bk, y));
            }
        }
        Ok(Polynomial::new(coeffs))
    }
}

/// Dense polynomial, lowest degree first, with trailing zeros trimmed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Polynomial {
    coeffs: Vec<FieldElement>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<FieldElement>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Polynomial { coeffs }
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[FieldElement] {
        &self.coeffs
    }

    /// Coefficient of `x^i`, zero past the degree.
    pub fn coeff(&self, i: usize) -> FieldElement {
        self.coeffs.get(i).copied().unwrap_or(FieldElement::ZERO)
    }
}
