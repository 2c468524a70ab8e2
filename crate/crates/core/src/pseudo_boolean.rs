//! Exact symbolic algebra over named binary variables.
//!
//! [`LinExpr`] is an affine integer expression, [`PbPoly`] a multilinear
//! polynomial of degree at most two. Products of two variables are replaced
//! by fresh variables constrained with the Rosenberg penalty
//! `xy - 2xz - 2yz + 3z`, which is zero exactly when `z = xy`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Opaque variable handle. Handles are never reused within one registry.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarRole {
    /// Bit `bit` of the exponent.
    Exponent { bit: usize },
    /// Coordinate `position` of the running register after stage `stage`.
    Register { stage: usize, position: usize },
    /// Linearized product of two variables.
    Product { x: VarId, y: VarId },
    /// Bit `bit` of the carry that lifts parity constraint `constraint`.
    Multiplicity { constraint: usize, bit: usize },
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub role: VarRole,
    pub name: String,
}

/// Variable table plus the per-transformation product cache.
#[derive(Clone, Debug, Default)]
pub struct VarRegistry {
    vars: Vec<VarInfo>,
    products: BTreeMap<(VarId, VarId), VarId>,
}

impl VarRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fresh(&mut self, role: VarRole) -> VarId {
        let id = VarId(self.vars.len() as u32);
        let name = match &role {
            VarRole::Exponent { bit } => format!("u{bit}"),
            VarRole::Register { stage, position } => format!("v{stage}_{position}"),
            VarRole::Product { .. } => format!("z{}", id.0),
            VarRole::Multiplicity { .. } => format!("k{}", id.0),
        };
        self.vars.push(VarInfo { role, name });
        id
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn info(&self, v: VarId) -> &VarInfo {
        &self.vars[v.index()]
    }

    pub fn role(&self, v: VarId) -> &VarRole {
        &self.info(v).role
    }

    pub fn name(&self, v: VarId) -> &str {
        &self.info(v).name
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarId, &VarInfo)> {
        self.vars
            .iter()
            .enumerate()
            .map(|(i, info)| (VarId(i as u32), info))
    }

    /// Factors of a product variable; `None` for anything else, including
    /// variables this registry never allocated.
    pub fn factors(&self, z: VarId) -> Option<(VarId, VarId)> {
        match self.vars.get(z.index()).map(|i| &i.role) {
            Some(VarRole::Product { x, y }) => Some((*x, *y)),
            _ => None,
        }
    }

    /// Returns the product variable for `x*y`, allocating it on first use,
    /// together with its Rosenberg penalty.
    pub fn linearize(&mut self, x: VarId, y: VarId) -> (VarId, PbPoly) {
        assert_ne!(x, y, "x*x needs no linearization");
        let key = if x < y { (x, y) } else { (y, x) };
        let z = match self.products.get(&key) {
            Some(&z) => z,
            None => {
                let z = self.fresh(VarRole::Product { x: key.0, y: key.1 });
                self.products.insert(key, z);
                z
            }
        };
        (z, rosenberg_penalty(key.0, key.1, z))
    }

    /// Cached products in allocation order.
    pub fn products(&self) -> impl Iterator<Item = (VarId, VarId, VarId)> + '_ {
        self.iter().filter_map(|(z, info)| match info.role {
            VarRole::Product { x, y } => Some((x, y, z)),
            _ => None,
        })
    }
}

/// `xy - 2xz - 2yz + 3z`.
pub fn rosenberg_penalty(x: VarId, y: VarId, z: VarId) -> PbPoly {
    let mut p = PbPoly::zero();
    p.add_monomial(&[x, y], 1);
    p.add_monomial(&[x, z], -2);
    p.add_monomial(&[y, z], -2);
    p.add_monomial(&[z], 3);
    p
}

/// Affine integer expression `constant + sum coeff * var`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, PartialOrd, Ord)]
pub struct LinExpr {
    constant: i64,
    terms: BTreeMap<VarId, i64>,
}

impl LinExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        Self {
            constant: c,
            terms: BTreeMap::new(),
        }
    }

    pub fn var(v: VarId) -> Self {
        Self::term(v, 1)
    }

    pub fn term(v: VarId, coeff: i64) -> Self {
        let mut e = Self::zero();
        e.add_term(v, coeff);
        e
    }

    /// `1 - v`.
    pub fn not(v: VarId) -> Self {
        let mut e = Self::constant(1);
        e.add_term(v, -1);
        e
    }

    pub fn constant_part(&self) -> i64 {
        self.constant
    }

    pub fn terms(&self) -> impl Iterator<Item = (VarId, i64)> + '_ {
        self.terms.iter().map(|(&v, &c)| (v, c))
    }

    pub fn coeff(&self, v: VarId) -> i64 {
        self.terms.get(&v).copied().unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.terms.keys().copied()
    }

    pub fn num_vars(&self) -> usize {
        self.terms.len()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn as_constant(&self) -> Option<i64> {
        self.is_constant().then_some(self.constant)
    }

    pub fn add_constant(&mut self, c: i64) {
        self.constant += c;
    }

    pub fn add_term(&mut self, v: VarId, coeff: i64) {
        let entry = self.terms.entry(v).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.terms.remove(&v);
        }
    }

    pub fn add_scaled(&mut self, other: &LinExpr, k: i64) {
        self.constant += k * other.constant;
        for (v, c) in other.terms() {
            self.add_term(v, k * c);
        }
    }

    pub fn plus(&self, other: &LinExpr) -> LinExpr {
        let mut e = self.clone();
        e.add_scaled(other, 1);
        e
    }

    pub fn minus(&self, other: &LinExpr) -> LinExpr {
        let mut e = self.clone();
        e.add_scaled(other, -1);
        e
    }

    pub fn scaled(&self, k: i64) -> LinExpr {
        let mut e = LinExpr::zero();
        e.add_scaled(self, k);
        e
    }

    /// Replaces `v` by `with`.
    pub fn substitute(&self, v: VarId, with: &LinExpr) -> LinExpr {
        let c = self.coeff(v);
        if c == 0 {
            return self.clone();
        }
        let mut e = self.clone();
        e.terms.remove(&v);
        e.add_scaled(with, c);
        e
    }

    /// Substitutes eliminated variables until none remain.
    pub fn substitute_all(&self, elim: &BTreeMap<VarId, LinExpr>) -> LinExpr {
        let mut e = self.clone();
        loop {
            let Some(v) = e.vars().find(|v| elim.contains_key(v)) else {
                break;
            };
            e = e.substitute(v, &elim[&v]);
        }
        e
    }

    pub fn eval(&self, value: impl Fn(VarId) -> bool) -> i64 {
        self.constant
            + self
                .terms()
                .filter(|&(v, _)| value(v))
                .map(|(_, c)| c)
                .sum::<i64>()
    }

    /// Bounds over all 0/1 assignments, ignoring correlations between terms.
    pub fn range(&self) -> (i64, i64) {
        let neg: i64 = self.terms.values().filter(|&&c| c < 0).sum();
        let pos: i64 = self.terms.values().filter(|&&c| c > 0).sum();
        (self.constant + neg, self.constant + pos)
    }

    pub fn display(&self, reg: &VarRegistry) -> String {
        self.display_with(|v| reg.name(v).to_string())
    }

    pub fn display_with(&self, name: impl Fn(VarId) -> String) -> String {
        let mut s = String::new();
        if self.constant != 0 || self.terms.is_empty() {
            write!(s, "{}", self.constant).unwrap();
        }
        for (v, c) in self.terms() {
            let sign = if c < 0 { "-" } else { "+" };
            let mag = c.unsigned_abs();
            if mag == 1 {
                write!(s, "{sign}{}", name(v)).unwrap();
            } else {
                write!(s, "{sign}{mag}{}", name(v)).unwrap();
            }
        }
        s.strip_prefix('+').map(str::to_string).unwrap_or(s)
    }
}

/// Range of `e`, i.e. `range(e)` in the free-function style used by callers.
pub fn range(e: &LinExpr) -> (i64, i64) {
    e.range()
}

/// An affine expression together with bounds known from how it was built.
///
/// Raw [`LinExpr::range`] ignores correlations such as `z = xy`; expressions
/// assembled through [`Bounded::select`] keep the tighter bounds of the
/// factored form `u*A + (1-u)*B`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bounded {
    pub expr: LinExpr,
    pub min: i64,
    pub max: i64,
}

impl Bounded {
    pub fn raw(expr: LinExpr) -> Self {
        let (min, max) = expr.range();
        Self { expr, min, max }
    }

    /// An expression known to take only the values 0 and 1.
    pub fn binary(expr: LinExpr) -> Self {
        let (lo, hi) = expr.range();
        Self {
            expr,
            min: lo.max(0),
            max: hi.min(1),
        }
    }

    pub fn constant(c: i64) -> Self {
        Self::raw(LinExpr::constant(c))
    }

    pub fn plus(&self, other: &Bounded) -> Bounded {
        self.combine(other, 1)
    }

    pub fn minus(&self, other: &Bounded) -> Bounded {
        self.combine(other, -1)
    }

    fn combine(&self, other: &Bounded, sign: i64) -> Bounded {
        let expr = {
            let mut e = self.expr.clone();
            e.add_scaled(&other.expr, sign);
            e
        };
        let (min, max) = if sign > 0 {
            (self.min + other.min, self.max + other.max)
        } else {
            (self.min - other.max, self.max - other.min)
        };
        Self::tighten(expr, min, max)
    }

    fn tighten(expr: LinExpr, min: i64, max: i64) -> Bounded {
        let (lo, hi) = expr.range();
        Bounded {
            expr,
            min: min.max(lo),
            max: max.min(hi),
        }
    }

    pub fn range(&self) -> (i64, i64) {
        (self.min, self.max)
    }

    /// `sel * when_one + (1 - sel) * when_zero`, linearizing every product of
    /// `sel` with a variable. `sel` must not occur in either branch.
    pub fn select(
        reg: &mut VarRegistry,
        sel: VarId,
        when_one: &Bounded,
        when_zero: &Bounded,
    ) -> Bounded {
        debug_assert!(when_one.expr.coeff(sel) == 0 && when_zero.expr.coeff(sel) == 0);
        let diff = when_one.expr.minus(&when_zero.expr);
        let mut expr = when_zero.expr.clone();
        expr.add_term(sel, diff.constant_part());
        for (v, c) in diff.terms() {
            let (z, _) = reg.linearize(sel, v);
            expr.add_term(z, c);
        }
        Self::tighten(
            expr,
            when_one.min.min(when_zero.min),
            when_one.max.max(when_zero.max),
        )
    }
}

/// Allocates carry bits `k_j` (coefficients -2, -4, ...) so that
/// `e - sum 2^(j+1) k_j = 0` is solvable exactly when `e` is even.
pub fn multiplicity_bits(
    e: &Bounded,
    reg: &mut VarRegistry,
    constraint: usize,
) -> Result<Vec<(VarId, i64)>> {
    let (min, max) = e.range();
    if min < -1 {
        return Err(Error::NotReducedSign(min));
    }
    let count = multiplicity_bit_count(max);
    Ok((0..count)
        .map(|bit| {
            let k = reg.fresh(VarRole::Multiplicity { constraint, bit });
            (k, -(2i64 << bit))
        })
        .collect())
}

/// `ceil(log2(floor(max/2) + 1))`.
pub fn multiplicity_bit_count(max: i64) -> usize {
    if max < 2 {
        return 0;
    }
    let carries = (max / 2) as u64 + 1;
    (64 - (carries - 1).leading_zeros()) as usize
}

/// Multilinear polynomial with integer coefficients, degree at most two.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct PbPoly {
    monomials: BTreeMap<Vec<VarId>, i64>,
}

impl PbPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: i64) -> Self {
        let mut p = Self::zero();
        p.add_monomial(&[], c);
        p
    }

    /// Adds `coeff * prod(vars)`, folding repeated variables (`x^2 = x`).
    pub fn add_monomial(&mut self, vars: &[VarId], coeff: i64) {
        let mut key = vars.to_vec();
        key.sort_unstable();
        key.dedup();
        let entry = self.monomials.entry(key.clone()).or_insert(0);
        *entry += coeff;
        if *entry == 0 {
            self.monomials.remove(&key);
        }
    }

    pub fn monomials(&self) -> impl Iterator<Item = (&[VarId], i64)> {
        self.monomials.iter().map(|(k, &c)| (k.as_slice(), c))
    }

    pub fn constant_part(&self) -> i64 {
        self.monomials.get(&Vec::new()).copied().unwrap_or(0)
    }

    pub fn degree(&self) -> usize {
        self.monomials.keys().map(Vec::len).max().unwrap_or(0)
    }

    pub fn vars(&self) -> Vec<VarId> {
        let mut vs: Vec<VarId> = self.monomials.keys().flatten().copied().collect();
        vs.sort_unstable();
        vs.dedup();
        vs
    }

    pub fn is_zero(&self) -> bool {
        self.monomials.is_empty()
    }

    pub fn add_assign(&mut self, other: &PbPoly) {
        for (k, c) in other.monomials() {
            self.add_monomial(k, c);
        }
    }

    /// Product with folding; any resulting monomial of degree three or more
    /// is rejected rather than reduced.
    pub fn mul(&self, other: &PbPoly) -> Result<PbPoly> {
        let mut out = PbPoly::zero();
        for (a, ca) in self.monomials() {
            for (b, cb) in other.monomials() {
                let mut key: Vec<VarId> = a.iter().chain(b).copied().collect();
                key.sort_unstable();
                key.dedup();
                if key.len() > 2 {
                    return Err(Error::DegreeTooHigh(key.len()));
                }
                out.add_monomial(&key, ca * cb);
            }
        }
        Ok(out)
    }

    pub fn eval(&self, value: impl Fn(VarId) -> bool) -> i64 {
        self.monomials()
            .filter(|(k, _)| k.iter().all(|&v| value(v)))
            .map(|(_, c)| c)
            .sum()
    }
}

impl From<&LinExpr> for PbPoly {
    fn from(e: &LinExpr) -> Self {
        let mut p = PbPoly::constant(e.constant_part());
        for (v, c) in e.terms() {
            p.add_monomial(&[v], c);
        }
        p
    }
}

/// Expands `e^2` into a multilinear polynomial.
pub fn square_to_pb(e: &LinExpr) -> PbPoly {
    let p = PbPoly::from(e);
    p.mul(&p).expect("square of an affine form is quadratic")
}

/// Definition `var = expr`, an integer equality over binary variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    pub var: VarId,
    pub expr: LinExpr,
}

impl Binding {
    pub fn new(var: VarId, expr: LinExpr) -> Self {
        Self { var, expr }
    }
}

/// Outcome of [`simplify`].
#[derive(Clone, Debug, Default)]
pub struct Simplified {
    /// Bindings whose variable survived, with expressions over survivors.
    pub bindings: Vec<Binding>,
    /// Equations `expr = 0` left over after their defining variable was
    /// eliminated by another rule.
    pub residual: Vec<LinExpr>,
    /// Eliminated variables, each expressed over surviving variables.
    pub eliminated: BTreeMap<VarId, LinExpr>,
}

impl Simplified {
    /// Current value of `v` in terms of surviving variables.
    pub fn resolve(&self, v: VarId) -> LinExpr {
        LinExpr::var(v).substitute_all(&self.eliminated)
    }
}

/// Reduces a binding system to a fixpoint using constant propagation, copy
/// propagation, negation aliasing and duplicate merging. Any equation on at
/// most two variables is solved by enumerating its binary solutions; the
/// higher `VarId` is the one eliminated.
pub fn simplify(bindings: Vec<Binding>, _reg: &VarRegistry) -> Result<Simplified> {
    let mut elim: BTreeMap<VarId, LinExpr> = BTreeMap::new();
    let mut pending = bindings;
    let mut residual: Vec<LinExpr> = Vec::new();

    loop {
        let mut changed = false;
        let mut kept: Vec<Binding> = Vec::new();
        let mut kept_residual: Vec<LinExpr> = Vec::new();

        let equations = pending
            .drain(..)
            .map(|b| {
                let rhs = b.expr.substitute_all(&elim);
                let lhs = LinExpr::var(b.var).substitute_all(&elim);
                (
                    Some(b.var).filter(|v| !elim.contains_key(v)),
                    lhs.minus(&rhs),
                    rhs,
                )
            })
            .chain(
                residual
                    .drain(..)
                    .map(|e| (None, e.substitute_all(&elim), LinExpr::zero())),
            )
            .collect::<Vec<_>>();

        for (var, eq, rhs) in equations {
            // Earlier rules in this pass may already have eliminated vars.
            let eq = eq.substitute_all(&elim);
            match solve_small(&eq)? {
                Some(rules) => {
                    for (v, e) in rules {
                        elim.insert(v, e);
                    }
                    changed = true;
                }
                None => match var.filter(|v| !elim.contains_key(v)) {
                    Some(v) => kept.push(Binding::new(v, rhs.substitute_all(&elim))),
                    None => kept_residual.push(eq),
                },
            }
        }

        // Duplicate merging: identical expressions collapse onto the lower var.
        let mut seen: BTreeMap<LinExpr, VarId> = BTreeMap::new();
        let mut merged: Vec<Binding> = Vec::new();
        kept.sort_by_key(|b| b.var);
        for b in kept {
            match seen.get(&b.expr) {
                Some(&lower) => {
                    elim.insert(b.var, LinExpr::var(lower));
                    changed = true;
                }
                None => {
                    seen.insert(b.expr.clone(), b.var);
                    merged.push(b);
                }
            }
        }

        pending = merged;
        residual = kept_residual;
        if !changed {
            break;
        }
    }

    let eliminated = elim
        .keys()
        .map(|&v| (v, LinExpr::var(v).substitute_all(&elim)))
        .collect();
    Ok(Simplified {
        bindings: pending,
        residual,
        eliminated,
    })
}

/// Solves `eq = 0` when it mentions at most two variables. Returns the
/// eliminations it implies, `None` if it must be kept, or an error when it
/// has no binary solution.
fn solve_small(eq: &LinExpr) -> Result<Option<Vec<(VarId, LinExpr)>>> {
    let vars: Vec<VarId> = eq.vars().collect();
    let inconsistent = || {
        Error::Inconsistent(format!(
            "{} = 0 has no binary solution",
            eq.display_with(|v| format!("x{}", v.0))
        ))
    };
    match vars.len() {
        0 => {
            if eq.constant_part() != 0 {
                return Err(inconsistent());
            }
            Ok(Some(Vec::new()))
        }
        1 => {
            let x = vars[0];
            let sols: Vec<i64> = (0..2).filter(|&b| eq.eval(|_| b == 1) == 0).collect();
            match sols.as_slice() {
                [] => Err(inconsistent()),
                [b] => Ok(Some(vec![(x, LinExpr::constant(*b))])),
                _ => unreachable!("nonzero coefficient"),
            }
        }
        2 => {
            let (x, y) = (vars[0], vars[1]);
            let sols: Vec<(bool, bool)> =
                [(false, false), (false, true), (true, false), (true, true)]
                    .into_iter()
                    .filter(|&(bx, by)| eq.eval(|v| if v == x { bx } else { by }) == 0)
                    .collect();
            let c = |b: bool| LinExpr::constant(i64::from(b));
            let rules = match sols.as_slice() {
                [] => return Err(inconsistent()),
                [(bx, by)] => vec![(x, c(*bx)), (y, c(*by))],
                [(false, false), (true, true)] => vec![(y, LinExpr::var(x))],
                [(false, true), (true, false)] => vec![(y, LinExpr::not(x))],
                [(bx1, _), (bx2, _)] if bx1 == bx2 => vec![(x, c(*bx1))],
                [(_, by1), (_, by2)] if by1 == by2 => vec![(y, c(*by1))],
                _ => return Ok(None),
            };
            Ok(Some(rules))
        }
        _ => Ok(None),
    }
}
