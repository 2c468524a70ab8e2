//! Dense polynomials over GF(2).
//!
//! Coefficients are packed little-endian by exponent into 64-bit words: bit
//! `i % 64` of word `i / 64` is the coefficient of `t^i`. Every operation
//! returns a canonical value (no trailing zero words), so derived equality is
//! polynomial equality.

use std::fmt;
use std::ops::{Add, Mul};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Gf2Poly {
    words: Vec<u64>,
}

impl Gf2Poly {
    pub fn zero() -> Self {
        Self { words: Vec::new() }
    }

    pub fn one() -> Self {
        Self::from_mask(1)
    }

    /// The indeterminate `t`.
    pub fn t() -> Self {
        Self::from_mask(0b10)
    }

    /// Builds a polynomial from a coefficient mask (bit i = coefficient of t^i).
    pub fn from_mask(mask: u64) -> Self {
        let mut p = Self { words: vec![mask] };
        p.normalize();
        p
    }

    /// `t^k`.
    pub fn monomial(k: usize) -> Self {
        let mut words = vec![0u64; k / 64 + 1];
        words[k / 64] = 1 << (k % 64);
        Self { words }
    }

    pub fn from_exponents(exps: &[usize]) -> Self {
        let mut p = Self::zero();
        for &e in exps {
            p.flip(e);
        }
        p
    }

    /// Low 64 coefficients as a mask; `None` if the degree is 64 or more.
    pub fn to_mask(&self) -> Option<u64> {
        match self.words.len() {
            0 => Some(0),
            1 => Some(self.words[0]),
            _ => None,
        }
    }

    fn normalize(&mut self) {
        while self.words.last() == Some(&0) {
            self.words.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.words.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.words.len() == 1 && self.words[0] == 1
    }

    pub fn degree(&self) -> Option<usize> {
        let last = *self.words.last()?;
        Some((self.words.len() - 1) * 64 + 63 - last.leading_zeros() as usize)
    }

    pub fn coeff(&self, i: usize) -> bool {
        self.words
            .get(i / 64)
            .is_some_and(|w| (w >> (i % 64)) & 1 == 1)
    }

    fn flip(&mut self, i: usize) {
        if self.words.len() <= i / 64 {
            self.words.resize(i / 64 + 1, 0);
        }
        self.words[i / 64] ^= 1 << (i % 64);
        self.normalize();
    }

    /// Exponents with nonzero coefficient, ascending.
    pub fn exponents(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64)
                .filter(move |b| (w >> b) & 1 == 1)
                .map(move |b| wi * 64 + b)
        })
    }

    fn shl(&self, k: usize) -> Self {
        if self.is_zero() {
            return Self::zero();
        }
        let (ws, bs) = (k / 64, k % 64);
        let mut words = vec![0u64; self.words.len() + ws + 1];
        for (i, &w) in self.words.iter().enumerate() {
            words[i + ws] ^= w << bs;
            if bs != 0 {
                words[i + ws + 1] ^= w >> (64 - bs);
            }
        }
        let mut p = Self { words };
        p.normalize();
        p
    }

    fn xor_assign(&mut self, other: &Self) {
        if self.words.len() < other.words.len() {
            self.words.resize(other.words.len(), 0);
        }
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
        self.normalize();
    }

    /// Quotient and remainder of `self / divisor`.
    pub fn div_rem(&self, divisor: &Self) -> Result<(Self, Self)> {
        let dd = divisor.degree().ok_or(Error::DivisionByZero)?;
        let mut rem = self.clone();
        let mut quot = Self::zero();
        while let Some(rd) = rem.degree() {
            if rd < dd {
                break;
            }
            let shift = rd - dd;
            rem.xor_assign(&divisor.shl(shift));
            quot.flip(shift);
        }
        Ok((quot, rem))
    }

    pub fn rem(&self, modulus: &Self) -> Result<Self> {
        Ok(self.div_rem(modulus)?.1)
    }

    pub fn gcd(&self, other: &Self) -> Self {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.rem(&b).expect("b is nonzero");
            a = b;
            b = r;
        }
        a
    }

    pub fn mul_mod(&self, other: &Self, modulus: &Self) -> Result<Self> {
        (self * other).rem(modulus)
    }

    /// `self^e mod modulus` by left-to-right square-and-multiply.
    pub fn pow_mod(&self, e: u64, modulus: &Self) -> Result<Self> {
        let base = self.rem(modulus)?;
        let mut acc = Self::one().rem(modulus)?;
        for bit in (0..64 - e.leading_zeros()).rev() {
            acc = acc.mul_mod(&acc, modulus)?;
            if (e >> bit) & 1 == 1 {
                acc = acc.mul_mod(&base, modulus)?;
            }
        }
        Ok(acc)
    }

    /// `self^(2^k) mod modulus` by k squarings.
    pub fn frobenius_mod(&self, k: usize, modulus: &Self) -> Result<Self> {
        let mut acc = self.rem(modulus)?;
        for _ in 0..k {
            acc = acc.mul_mod(&acc, modulus)?;
        }
        Ok(acc)
    }

    /// Deterministic irreducibility test (Rabin): `p` of degree n is
    /// irreducible iff t^(2^n) = t mod p and gcd(t^(2^(n/q)) - t, p) = 1 for
    /// every prime q dividing n.
    pub fn is_irreducible(&self) -> Result<bool> {
        let n = match self.degree() {
            None | Some(0) => return Err(Error::ConstantPolynomial),
            Some(n) => n,
        };
        let t = Self::t().rem(self)?;
        if Self::t().frobenius_mod(n, self)? != t {
            return Ok(false);
        }
        for q in prime_divisors(n) {
            let x = Self::t().frobenius_mod(n / q, self)?;
            if !self.gcd(&(&x + &t)).is_one() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Dickson-style recursion f_0 = 1, f_1 = t + 1, f_n = t f_{n-1} + f_{n-2}.
    pub fn dickson(n: usize) -> Self {
        let mut prev = Self::one();
        if n == 0 {
            return prev;
        }
        let mut cur = Self::from_mask(0b11);
        for _ in 2..=n {
            let next = &cur.shl(1) + &prev;
            prev = std::mem::replace(&mut cur, next);
        }
        cur
    }

    /// Hex coefficient mask, e.g. `0xd` for t^3+t^2+1.
    pub fn to_hex(&self) -> String {
        if self.is_zero() {
            return "0x0".to_string();
        }
        let mut s = String::from("0x");
        for (i, w) in self.words.iter().rev().enumerate() {
            if i == 0 {
                s.push_str(&format!("{w:x}"));
            } else {
                s.push_str(&format!("{w:016x}"));
            }
        }
        s
    }
}

fn prime_divisors(mut n: usize) -> Vec<usize> {
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

impl Add for &Gf2Poly {
    type Output = Gf2Poly;

    fn add(self, rhs: &Gf2Poly) -> Gf2Poly {
        let mut out = self.clone();
        out.xor_assign(rhs);
        out
    }
}

impl Mul for &Gf2Poly {
    type Output = Gf2Poly;

    fn mul(self, rhs: &Gf2Poly) -> Gf2Poly {
        let mut out = Gf2Poly::zero();
        for e in rhs.exponents() {
            out.xor_assign(&self.shl(e));
        }
        out
    }
}

impl fmt::Display for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        let terms: Vec<String> = self
            .exponents()
            .collect::<Vec<_>>()
            .into_iter()
            .rev()
            .map(|e| match e {
                0 => "1".to_string(),
                1 => "t".to_string(),
                _ => format!("t^{e}"),
            })
            .collect();
        f.write_str(&terms.join("+"))
    }
}

impl fmt::Debug for Gf2Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Gf2Poly({self})")
    }
}

impl FromStr for Gf2Poly {
    type Err = Error;

    /// Accepts `t^3+t^2+1` style sums (repeated terms cancel) or a hex mask
    /// such as `0xD`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if s.is_empty() {
            return Err(Error::Parse("empty polynomial".into()));
        }
        if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
            if hex.is_empty() {
                return Err(Error::Parse("empty hex mask".into()));
            }
            let mut p = Gf2Poly::zero();
            for (i, c) in hex.chars().rev().enumerate() {
                let d = c
                    .to_digit(16)
                    .ok_or_else(|| Error::Parse(format!("bad hex digit '{c}'")))?;
                for b in 0..4 {
                    if (d >> b) & 1 == 1 {
                        p.flip(4 * i + b);
                    }
                }
            }
            return Ok(p);
        }
        let mut p = Gf2Poly::zero();
        for term in s.split('+') {
            let e = match term {
                "0" => continue,
                "1" => 0,
                "t" => 1,
                _ => term
                    .strip_prefix("t^")
                    .and_then(|k| k.parse::<usize>().ok())
                    .ok_or_else(|| Error::Parse(format!("bad term '{term}'")))?,
            };
            p.flip(e);
        }
        Ok(p)
    }
}
