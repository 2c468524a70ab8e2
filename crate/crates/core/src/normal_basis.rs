//! Normal-basis arithmetic over GF(2^n) with generator `alpha = t`.
//!
//! Coordinates are little-endian internally: bit `i` of an element is the
//! coefficient of `t^(2^i)`. Text forms use the big-endian order
//! `b_{n-1} ... b_1 b_0`, so `t^4` in GF(2^3) prints as `100`.
//!
//! The multiplication matrix `T0` is derived from field arithmetic: entry
//! `(i, j)` is the `t^(2^0)` coordinate of `t^(2^i) * t^(2^j)`. Every other
//! output coordinate follows by index rotation, so the rotated matrices are
//! never stored.

use std::fmt;

use crate::error::{Error, Result};
use crate::gf2_poly::Gf2Poly;

/// Largest supported extension degree (elements and exponents fit in `u64`).
pub const MAX_DEGREE: usize = 63;

/// A field element in normal-basis coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NbElement {
    bits: u64,
    n: usize,
}

impl NbElement {
    pub fn from_bits(bits: u64, n: usize) -> Self {
        debug_assert!(n <= MAX_DEGREE);
        Self {
            bits: bits & mask(n),
            n,
        }
    }

    pub fn zero(n: usize) -> Self {
        Self::from_bits(0, n)
    }

    /// The all-ones vector, which is the field's multiplicative identity.
    pub fn one(n: usize) -> Self {
        Self::from_bits(mask(n), n)
    }

    /// `t^(2^i)`, a single basis vector.
    pub fn basis(i: usize, n: usize) -> Self {
        Self::from_bits(1 << i, n)
    }

    /// The generator `t` itself.
    pub fn generator(n: usize) -> Self {
        Self::basis(0, n)
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        (self.bits >> i) & 1 == 1
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    /// Squaring is a cyclic shift: output bit `i+1 mod n` is input bit `i`.
    pub fn square(&self) -> Self {
        if self.n == 0 {
            return *self;
        }
        let top = (self.bits >> (self.n - 1)) & 1;
        Self::from_bits((self.bits << 1) | top, self.n)
    }

    /// Parses big-endian bit strings such as `110`.
    pub fn parse_be(s: &str, n: usize) -> Result<Self> {
        let s = s.trim();
        if s.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: s.len(),
            });
        }
        let mut bits = 0u64;
        for c in s.chars() {
            bits <<= 1;
            match c {
                '0' => {}
                '1' => bits |= 1,
                _ => return Err(Error::Parse(format!("bad bit '{c}' in '{s}'"))),
            }
        }
        Ok(Self::from_bits(bits, n))
    }
}

impl fmt::Display for NbElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in (0..self.n).rev() {
            f.write_str(if self.bit(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for NbElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NbElement[{self}]")
    }
}

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// Square 0/1 matrix over GF(2), one `u64` mask per row (bit j = column j).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BitMatrix {
    n: usize,
    rows: Vec<u64>,
}

impl BitMatrix {
    pub fn from_rows(rows: Vec<u64>) -> Self {
        Self {
            n: rows.len(),
            rows,
        }
    }

    /// Builds from nested 0/1 rows written left to right as column 0, 1, ...
    pub fn from_grid(grid: &[&[u8]]) -> Self {
        let rows = grid
            .iter()
            .map(|r| {
                r.iter()
                    .enumerate()
                    .fold(0u64, |m, (j, &v)| m | (u64::from(v & 1) << j))
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows((0..n).map(|i| 1u64 << i).collect())
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[u64] {
        &self.rows
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        (self.rows[i] >> j) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.rows.iter().map(|r| r.count_ones() as usize).sum()
    }

    /// Row vector times matrix: XOR of the rows selected by `v`.
    pub fn apply_row(&self, v: u64) -> u64 {
        self.rows
            .iter()
            .enumerate()
            .filter(|(i, _)| (v >> i) & 1 == 1)
            .fold(0, |acc, (_, r)| acc ^ r)
    }

    pub fn mul(&self, other: &BitMatrix) -> BitMatrix {
        BitMatrix::from_rows(self.rows.iter().map(|&r| other.apply_row(r)).collect())
    }

    /// Gauss-Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<BitMatrix> {
        let n = self.n;
        let mut a = self.rows.clone();
        let mut inv = BitMatrix::identity(n).rows;
        for col in 0..n {
            let pivot = (col..n).find(|&r| (a[r] >> col) & 1 == 1)?;
            a.swap(col, pivot);
            inv.swap(col, pivot);
            for r in 0..n {
                if r != col && (a[r] >> col) & 1 == 1 {
                    a[r] ^= a[col];
                    inv[r] ^= inv[col];
                }
            }
        }
        Some(BitMatrix::from_rows(inv))
    }

    /// The same matrix with both row and column order reversed.
    pub fn reversed(&self) -> BitMatrix {
        let n = self.n;
        let rows = (0..n)
            .map(|i| {
                (0..n).fold(0u64, |m, j| {
                    m | (u64::from(self.get(n - 1 - i, n - 1 - j)) << j)
                })
            })
            .collect();
        BitMatrix::from_rows(rows)
    }

    /// Rows as 0/1 grids, column 0 first.
    pub fn to_grid(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| u8::from(self.get(i, j))).collect())
            .collect()
    }
}

impl fmt::Display for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in self.to_grid() {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

/// Immutable context for GF(2^n) in the normal basis generated by `t`.
#[derive(Clone, Debug)]
pub struct FieldParams {
    n: usize,
    f: Gf2Poly,
    /// Row i = polynomial-basis coordinates of t^(2^i).
    m_n2p: BitMatrix,
    /// Inverse of `m_n2p`; row j = normal-basis coordinates of t^j.
    m_p2n: BitMatrix,
    t0: BitMatrix,
    /// Nonzero entries of `t0`.
    t0_pairs: Vec<(usize, usize)>,
    optimal: bool,
}

impl FieldParams {
    /// Builds the field from the Dickson polynomial of degree `n`.
    pub fn build(n: usize) -> Result<Self> {
        if !(2..=MAX_DEGREE).contains(&n) {
            return Err(Error::UnsupportedDegree(n));
        }
        let f = Gf2Poly::dickson(n);
        if !f.is_irreducible()? {
            return Err(Error::ReducibleDickson(n));
        }
        Self::with_polynomial(f)
    }

    /// Builds the normal-basis context for an arbitrary irreducible `f`,
    /// provided `t` is a normal element modulo `f`.
    pub fn with_polynomial(f: Gf2Poly) -> Result<Self> {
        let n = f.degree().unwrap_or(0);
        if !(2..=MAX_DEGREE).contains(&n) {
            return Err(Error::UnsupportedDegree(n));
        }
        let powers: Vec<Gf2Poly> = (0..n)
            .map(|i| Gf2Poly::t().frobenius_mod(i, &f))
            .collect::<Result<_>>()?;
        let m_n2p = BitMatrix::from_rows(
            powers
                .iter()
                .map(|p| p.to_mask().expect("reduced below degree 64"))
                .collect(),
        );
        let m_p2n = m_n2p.inverse().ok_or(Error::NotNormalElement(n))?;

        let mut rows = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let prod = powers[i].mul_mod(&powers[j], &f)?;
                let nb = m_p2n.apply_row(prod.to_mask().expect("reduced below degree 64"));
                if nb & 1 == 1 {
                    rows[i] |= 1 << j;
                }
            }
        }
        let t0 = BitMatrix::from_rows(rows);
        let t0_pairs = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| t0.get(i, j))
            .collect();
        let optimal = t0.count_ones() == 2 * n - 1;
        Ok(Self {
            n,
            f,
            m_n2p,
            m_p2n,
            t0,
            t0_pairs,
            optimal,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn modulus(&self) -> &Gf2Poly {
        &self.f
    }

    pub fn m_n2p(&self) -> &BitMatrix {
        &self.m_n2p
    }

    pub fn m_p2n(&self) -> &BitMatrix {
        &self.m_p2n
    }

    pub fn t0(&self) -> &BitMatrix {
        &self.t0
    }

    pub fn is_optimal(&self) -> bool {
        self.optimal
    }

    /// Order of the multiplicative group, 2^n - 1.
    pub fn group_order(&self) -> u64 {
        mask(self.n)
    }

    /// The rotated matrix `T^(k)` whose bilinear form gives coordinate `c_k`.
    pub fn rotated_matrix(&self, k: usize) -> BitMatrix {
        let n = self.n;
        let mut rows = vec![0u64; n];
        for &(i, j) in &self.t0_pairs {
            rows[(i + k) % n] |= 1 << ((j + k) % n);
        }
        BitMatrix::from_rows(rows)
    }

    /// Source coordinates `a_i` whose XOR forms bit `k` of `a * t^(2^l)`.
    ///
    /// With `b = t^(2^l)` only `b_l` is set, so `c_k` collects every
    /// `a_{i+k}` with `T0[i][l-k] = 1`.
    pub fn shift_sources(&self, l: usize, k: usize) -> Vec<usize> {
        let n = self.n;
        let col = (l + n - k % n) % n;
        (0..n)
            .filter(|&i| self.t0.get(i, col))
            .map(|i| (i + k) % n)
            .collect()
    }

    fn check(&self, a: &NbElement) -> Result<()> {
        if a.n != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: a.n,
            });
        }
        Ok(())
    }

    pub fn element(&self, bits: u64) -> NbElement {
        NbElement::from_bits(bits, self.n)
    }

    pub fn mul(&self, a: &NbElement, b: &NbElement) -> Result<NbElement> {
        self.check(a)?;
        self.check(b)?;
        let n = self.n;
        let mut c = 0u64;
        for k in 0..n {
            let bit = self.t0_pairs.iter().fold(false, |acc, &(i, j)| {
                acc ^ (a.bit((i + k) % n) & b.bit((j + k) % n))
            });
            c |= u64::from(bit) << k;
        }
        Ok(self.element(c))
    }

    pub fn square(&self, a: &NbElement) -> Result<NbElement> {
        self.check(a)?;
        Ok(a.square())
    }

    /// Square-and-multiply; `e = 0` gives the all-ones identity.
    pub fn pow(&self, a: &NbElement, e: u64) -> Result<NbElement> {
        self.check(a)?;
        if a.is_zero() && e == 0 {
            return Err(Error::ZeroToZero);
        }
        let mut acc = NbElement::one(self.n);
        for bit in (0..64 - e.leading_zeros()).rev() {
            acc = acc.square();
            if (e >> bit) & 1 == 1 {
                acc = self.mul(&acc, a)?;
            }
        }
        Ok(acc)
    }

    pub fn to_poly(&self, a: &NbElement) -> Result<Gf2Poly> {
        self.check(a)?;
        Ok(Gf2Poly::from_mask(self.m_n2p.apply_row(a.bits)))
    }

    /// Reduces `p` modulo `f` and converts it to normal-basis coordinates.
    pub fn from_poly(&self, p: &Gf2Poly) -> Result<NbElement> {
        let r = p.rem(&self.f)?;
        Ok(self.element(
            self.m_p2n
                .apply_row(r.to_mask().expect("reduced below degree 64")),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f3() -> FieldParams {
        FieldParams::build(3).unwrap()
    }

    #[test]
    fn square_is_rotation() {
        let t = NbElement::parse_be("001", 3).unwrap();
        assert_eq!(t.square().to_string(), "010");
        assert_eq!(t.square().square().to_string(), "100");
        assert_eq!(NbElement::one(3).square(), NbElement::one(3));
    }

    #[test]
    fn mul_examples_in_gf8() {
        let fp = f3();
        let t = fp.element(0b001);
        let t4 = fp.element(0b100);
        assert_eq!(fp.mul(&t, &t).unwrap().to_string(), "010");
        assert_eq!(fp.mul(&t4, &t4).unwrap().to_string(), "001");
        for bits in 0..8 {
            let a = fp.element(bits);
            assert_eq!(fp.mul(&NbElement::one(3), &a).unwrap(), a);
        }
    }

    #[test]
    fn pow_examples() {
        let fp = f3();
        let t = NbElement::generator(3);
        assert_eq!(fp.pow(&t, 1).unwrap().to_string(), "001");
        assert_eq!(fp.pow(&t, 5).unwrap().to_string(), "110");
        assert_eq!(fp.pow(&t, 7).unwrap().to_string(), "111");
        assert_eq!(fp.pow(&NbElement::zero(3), 0), Err(Error::ZeroToZero));
        assert_eq!(fp.pow(&NbElement::zero(3), 3).unwrap(), NbElement::zero(3));
    }

    #[test]
    fn pow_agrees_with_repeated_mul() {
        let fp = FieldParams::build(5).unwrap();
        let t = NbElement::generator(5);
        let mut acc = NbElement::one(5);
        for e in 0..40 {
            assert_eq!(fp.pow(&t, e).unwrap(), acc, "e={e}");
            acc = fp.mul(&acc, &t).unwrap();
        }
    }

    #[test]
    fn conversions() {
        let fp = f3();
        let one_plus_t: Gf2Poly = "t+1".parse().unwrap();
        assert_eq!(fp.from_poly(&one_plus_t).unwrap().to_string(), "110");
        assert!(fp.to_poly(&NbElement::one(3)).unwrap().is_one());
        let t2: Gf2Poly = "t^2".parse().unwrap();
        assert_eq!(fp.from_poly(&t2).unwrap().to_string(), "010");
        for bits in 0..8 {
            let a = fp.element(bits);
            assert_eq!(fp.from_poly(&fp.to_poly(&a).unwrap()).unwrap(), a);
        }
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let fp = f3();
        let a = NbElement::generator(4);
        assert_eq!(
            fp.mul(&a, &a),
            Err(Error::LengthMismatch {
                expected: 3,
                got: 4
            })
        );
        assert!(NbElement::parse_be("10", 3).is_err());
        assert!(NbElement::parse_be("1x0", 3).is_err());
    }

    #[test]
    fn unsupported_or_reducible_degrees() {
        assert_eq!(
            FieldParams::build(1).unwrap_err(),
            Error::UnsupportedDegree(1)
        );
        // f_4 = t^4+t^3+t^2+1 has the root 1.
        assert_eq!(
            FieldParams::build(4).unwrap_err(),
            Error::ReducibleDickson(4)
        );
    }

    #[test]
    fn matrix_inverse_round_trip() {
        let fp = FieldParams::build(6).unwrap();
        assert_eq!(fp.m_n2p().mul(fp.m_p2n()), BitMatrix::identity(6));
        assert_eq!(fp.m_p2n().mul(fp.m_n2p()), BitMatrix::identity(6));
        let singular = BitMatrix::from_grid(&[&[1, 1], &[1, 1]]);
        assert!(singular.inverse().is_none());
    }

    #[test]
    fn multiplication_exhaustive_small_fields() {
        for n in [2usize, 3] {
            let fp = FieldParams::build(n).unwrap();
            let size = 1u64 << n;
            for a in 0..size {
                let a = fp.element(a);
                assert_eq!(fp.mul(&a, &a).unwrap(), a.square());
                for b in 0..size {
                    let b = fp.element(b);
                    assert_eq!(fp.mul(&a, &b).unwrap(), fp.mul(&b, &a).unwrap());
                }
            }
        }
    }

    #[test]
    fn shift_sources_reproduce_generic_product() {
        let fp = FieldParams::build(5).unwrap();
        for l in 0..5 {
            let b = NbElement::basis(l, 5);
            for a in 0..32 {
                let a = fp.element(a);
                let c = fp.mul(&a, &b).unwrap();
                for k in 0..5 {
                    let bit = fp
                        .shift_sources(l, k)
                        .iter()
                        .fold(false, |x, &i| x ^ a.bit(i));
                    assert_eq!(bit, c.bit(k));
                }
            }
        }
    }
}
