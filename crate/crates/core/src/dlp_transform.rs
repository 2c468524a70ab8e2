//! Reduction of `t^y = h` over GF(2^n) to a QUBO.
//!
//! The exponent is split into bits, `y = sum 2^l u_l`, and the power is built
//! as a chain of conditional multiplications. Stage `l` multiplies the running
//! register `A` by `t^(2^l)` when `u_l = 1` and by one otherwise, so every
//! output coordinate has the form
//!
//! ```text
//! c_k = u_l * (a_i XOR a_j) + (1 - u_l) * a_k
//! ```
//!
//! where `a_i, a_j` are the coordinates selected by the multiplication matrix
//! (one of them is absent for exactly one `k` in an optimal basis). XORs that
//! reduce to affine forms (against a constant, a copy, or a complement) are
//! folded symbolically. The rest become fresh register bits tied to a parity
//! constraint whose integer lift carries a single multiplicity bit.
//!
//! Materialization policy: an affine output bit with at most two variables
//! stays a propagated expression, anything longer is bound to a fresh
//! register variable. The last stage equates each coordinate to the target
//! bit directly, using `u(a_i - a_j)` or `u(a_i + a_j) - 1` so that no carry
//! is needed. Every constraint and penalty carries weight one: the minimum
//! energy is exactly zero and any violated relation costs at least one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::normal_basis::{FieldParams, NbElement};
use crate::pseudo_boolean::{
    multiplicity_bits, rosenberg_penalty, simplify, square_to_pb, Binding, Bounded, LinExpr,
    PbPoly, VarId, VarRegistry, VarRole,
};
use crate::qubo::Qubo;

/// Affine register bits with at most this many variables are propagated.
pub const PROPAGATE_MAX_TERMS: usize = 2;

/// A DLP instance `t^y = h` with generator `t`.
#[derive(Clone, Debug)]
pub struct DlpInstance {
    pub fp: FieldParams,
    pub h: NbElement,
}

impl DlpInstance {
    pub fn new(fp: FieldParams, h: NbElement) -> Result<Self> {
        if h.len() != fp.n() {
            return Err(Error::LengthMismatch {
                expected: fp.n(),
                got: h.len(),
            });
        }
        if h.is_zero() {
            return Err(Error::NotInSubgroup);
        }
        Ok(Self { fp, h })
    }

    pub fn group_order(&self) -> u64 {
        self.fp.group_order()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    /// `v - expr = 0` for a materialized affine register bit.
    Register { stage: usize, position: usize },
    /// Integer lift of a parity relation, carry bits included.
    Parity { stage: usize, position: usize },
    /// Last-stage coordinate equated to the target bit.
    Target { position: usize },
    /// Leftover equation from simplification.
    Residual,
}

/// A squared-to-zero constraint `expr = 0`.
#[derive(Clone, Debug)]
pub struct Constraint {
    pub kind: ConstraintKind,
    pub expr: LinExpr,
}

/// How an auxiliary variable's value follows from earlier variables.
#[derive(Clone, Debug)]
enum Definition {
    Affine(LinExpr),
    Parity(LinExpr),
    Carry { lift: LinExpr, bit: usize },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformStats {
    pub logical_variable_count: usize,
    pub constraint_count: usize,
    pub penalty_count: usize,
    pub multiplicity_count: usize,
}

/// State of one transformation: registry, product cache and constraints.
#[derive(Clone, Debug)]
pub struct TransformContext {
    fp: FieldParams,
    reg: VarRegistry,
    exponent_vars: Vec<VarId>,
    constraints: Vec<Constraint>,
    definitions: BTreeMap<VarId, Definition>,
    eliminated: Vec<(VarId, LinExpr)>,
    stage_bindings: Vec<(usize, Vec<Binding>)>,
}

impl TransformContext {
    pub fn new(fp: FieldParams) -> Self {
        Self {
            fp,
            reg: VarRegistry::new(),
            exponent_vars: Vec::new(),
            constraints: Vec::new(),
            definitions: BTreeMap::new(),
            eliminated: Vec::new(),
            stage_bindings: Vec::new(),
        }
    }

    pub fn registry(&self) -> &VarRegistry {
        &self.reg
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn exponent_vars(&self) -> &[VarId] {
        &self.exponent_vars
    }

    /// Affine register bindings of each stage, before simplification.
    pub fn stage_bindings(&self) -> &[(usize, Vec<Binding>)] {
        &self.stage_bindings
    }

    /// Allocates the exponent bits `u_0 .. u_{n-1}`, `y = sum 2^i u_i`.
    pub fn decompose_exponent(&mut self) -> Vec<VarId> {
        let n = self.fp.n();
        self.exponent_vars = (0..n)
            .map(|bit| self.reg.fresh(VarRole::Exponent { bit }))
            .collect();
        self.exponent_vars.clone()
    }

    /// `t^(u_0)`: coordinate 0 is 1, every other coordinate is `1 - u_0`.
    pub fn initial_register(&self) -> Vec<Bounded> {
        let u0 = self.exponent_vars[0];
        (0..self.fp.n())
            .map(|k| {
                if k == 0 {
                    Bounded::constant(1)
                } else {
                    Bounded::binary(LinExpr::not(u0))
                }
            })
            .collect()
    }

    fn check_register(&self, reg: &[Bounded], stage: usize) -> Result<()> {
        if reg.len() != self.fp.n() {
            return Err(Error::LengthMismatch {
                expected: self.fp.n(),
                got: reg.len(),
            });
        }
        match reg.iter().position(|b| b.min < 0 || b.max > 1) {
            Some(bit) => Err(Error::NonAffineRegister { stage, bit }),
            None => Ok(()),
        }
    }

    /// Stage `l`: multiplies `prev` by `t^(2^l u_l)` and returns the next
    /// register.
    pub fn stage_constraints(&mut self, prev: &[Bounded], l: usize) -> Result<Vec<Bounded>> {
        self.check_register(prev, l)?;
        let n = self.fp.n();
        let u = self.exponent_vars[l];

        let mut affine: Vec<(usize, VarId, LinExpr)> = Vec::new();
        let mut out: Vec<Option<Bounded>> = vec![None; n];
        let mut parity_vars: BTreeMap<LinExpr, VarId> = BTreeMap::new();

        for k in 0..n {
            let sources: Vec<Bounded> = self
                .fp
                .shift_sources(l, k)
                .into_iter()
                .map(|i| prev[i].clone())
                .collect();
            let terms = fold_xor(sources);
            if terms.len() <= 1 {
                let d = terms
                    .into_iter()
                    .next()
                    .unwrap_or_else(|| Bounded::constant(0));
                let sel = Bounded::select(&mut self.reg, u, &d, &prev[k]);
                let v = self.reg.fresh(VarRole::Register {
                    stage: l,
                    position: k,
                });
                affine.push((k, v, sel.expr));
                continue;
            }

            let sum = terms
                .iter()
                .skip(1)
                .fold(terms[0].clone(), |acc, t| acc.plus(t));
            let sel = Bounded::select(&mut self.reg, u, &sum, &prev[k]);
            if let Some(&v) = parity_vars.get(&sel.expr) {
                out[k] = Some(Bounded::binary(LinExpr::var(v)));
                continue;
            }
            let v = self.reg.fresh(VarRole::Register {
                stage: l,
                position: k,
            });
            parity_vars.insert(sel.expr.clone(), v);
            self.definitions
                .insert(v, Definition::Parity(sel.expr.clone()));
            let lift = sel.minus(&Bounded::binary(LinExpr::var(v)));
            self.push_lifted(
                lift,
                ConstraintKind::Parity {
                    stage: l,
                    position: k,
                },
            )?;
            out[k] = Some(Bounded::binary(LinExpr::var(v)));
        }

        let bindings: Vec<Binding> = affine
            .iter()
            .map(|(_, v, e)| Binding::new(*v, e.clone()))
            .collect();
        self.stage_bindings.push((l, bindings.clone()));
        let simplified = simplify(bindings, &self.reg)?;
        let mut elim = simplified.eliminated.clone();
        for b in &simplified.bindings {
            if b.expr.num_vars() <= PROPAGATE_MAX_TERMS {
                elim.insert(b.var, b.expr.clone());
            } else {
                self.definitions
                    .insert(b.var, Definition::Affine(b.expr.clone()));
                self.constraints.push(Constraint {
                    kind: ConstraintKind::Register {
                        stage: l,
                        position: self.position_of(b.var),
                    },
                    expr: LinExpr::var(b.var).minus(&b.expr),
                });
            }
        }
        for e in &simplified.residual {
            self.constraints.push(Constraint {
                kind: ConstraintKind::Residual,
                expr: e.clone(),
            });
        }
        for (k, v, _) in &affine {
            let resolved = LinExpr::var(*v).substitute_all(&elim);
            if resolved != LinExpr::var(*v) {
                self.definitions
                    .insert(*v, Definition::Affine(resolved.clone()));
                self.eliminated.push((*v, resolved.clone()));
            }
            out[*k] = Some(Bounded::binary(resolved));
        }
        Ok(out
            .into_iter()
            .map(|b| b.expect("every coordinate assigned"))
            .collect())
    }

    fn position_of(&self, v: VarId) -> usize {
        match self.reg.role(v) {
            VarRole::Register { position, .. } => *position,
            _ => 0,
        }
    }

    /// Adds `lift - sum 2^(j+1) k_j = 0`, allocating carry bits as needed.
    fn push_lifted(&mut self, lift: Bounded, kind: ConstraintKind) -> Result<()> {
        let id = self.constraints.len();
        let bits = multiplicity_bits(&lift, &mut self.reg, id)?;
        let mut expr = lift.expr.clone();
        for (bit, &(k, coeff)) in bits.iter().enumerate() {
            expr.add_term(k, coeff);
            self.definitions.insert(
                k,
                Definition::Carry {
                    lift: lift.expr.clone(),
                    bit,
                },
            );
        }
        self.constraints.push(Constraint { kind, expr });
        Ok(())
    }

    /// Last stage: each coordinate of `last * t^(2^(n-1) u_{n-1})` is
    /// equated to the corresponding bit of `h`.
    pub fn final_constraints(&mut self, last: &[Bounded], h: &NbElement) -> Result<()> {
        let n = self.fp.n();
        self.check_register(last, n - 1)?;
        if h.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                got: h.len(),
            });
        }
        let l = n - 1;
        let u = self.exponent_vars[l];
        for k in 0..n {
            let target = i64::from(h.bit(k));
            let sources: Vec<Bounded> = self
                .fp
                .shift_sources(l, k)
                .into_iter()
                .map(|i| last[i].clone())
                .collect();
            let terms = fold_xor(sources);
            let lift = match terms.as_slice() {
                [] | [_] => {
                    let d = terms
                        .first()
                        .cloned()
                        .unwrap_or_else(|| Bounded::constant(0));
                    Bounded::select(&mut self.reg, u, &d, &last[k])
                        .minus(&Bounded::constant(target))
                }
                // a XOR b = 0 iff a - b = 0; a XOR b = 1 iff a + b - 1 = 0.
                [a, b] if target == 0 => Bounded::select(&mut self.reg, u, &a.minus(b), &last[k]),
                [a, b] => Bounded::select(&mut self.reg, u, &a.plus(b), &last[k])
                    .minus(&Bounded::constant(1)),
                _ => {
                    let sum = terms
                        .iter()
                        .skip(1)
                        .fold(terms[0].clone(), |acc, t| acc.plus(t));
                    Bounded::select(&mut self.reg, u, &sum, &last[k])
                        .minus(&Bounded::constant(target))
                }
            };
            if lift.expr.is_constant() && lift.expr.constant_part() == 0 {
                continue;
            }
            self.push_lifted(lift, ConstraintKind::Target { position: k })?;
        }
        Ok(())
    }

    /// Values of every allocated variable for exponent `y`, following each
    /// variable's definition. Indexed by `VarId`.
    pub fn values_for_exponent(&self, y: u64) -> Vec<bool> {
        let mut vals = vec![false; self.reg.len()];
        for (v, info) in self.reg.iter() {
            let get = |w: VarId| vals[w.index()];
            let value = match (&info.role, self.definitions.get(&v)) {
                (VarRole::Exponent { bit }, _) => (y >> bit) & 1 == 1,
                (VarRole::Product { x, y }, _) => get(*x) && get(*y),
                (_, Some(Definition::Affine(e))) => e.eval(get) == 1,
                (_, Some(Definition::Parity(e))) => e.eval(get).rem_euclid(2) == 1,
                (_, Some(Definition::Carry { lift, bit })) => {
                    ((lift.eval(get).max(0) / 2) >> bit) & 1 == 1
                }
                (_, None) => false,
            };
            vals[v.index()] = value;
        }
        vals
    }

    /// Collects live variables, squares the constraints, adds penalties for
    /// every live product, and numbers the QUBO variables (exponent bits
    /// first, then by `VarId`).
    pub fn finish(self) -> Result<TransformResult> {
        let mut live: BTreeSet<VarId> = self.exponent_vars.iter().copied().collect();
        for c in &self.constraints {
            live.extend(c.expr.vars());
        }
        let mut stack: Vec<VarId> = live.iter().copied().collect();
        while let Some(v) = stack.pop() {
            if let Some((x, y)) = self.reg.factors(v) {
                for f in [x, y] {
                    if live.insert(f) {
                        stack.push(f);
                    }
                }
            }
        }

        let mut qubo_vars: Vec<VarId> = self.exponent_vars.clone();
        qubo_vars.extend(live.iter().filter(|v| !self.exponent_vars.contains(v)));
        let index: BTreeMap<VarId, usize> =
            qubo_vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();

        let mut energy = PbPoly::zero();
        for c in &self.constraints {
            energy.add_assign(&square_to_pb(&c.expr));
        }
        let penalties: Vec<(VarId, VarId, VarId)> = self
            .reg
            .products()
            .filter(|(_, _, z)| live.contains(z))
            .collect();
        for &(x, y, z) in &penalties {
            energy.add_assign(&rosenberg_penalty(x, y, z));
        }
        let qubo = Qubo::from_pb(&energy, qubo_vars.len(), |v| index[&v])?;

        let multiplicity_count = live
            .iter()
            .filter(|v| matches!(self.reg.role(**v), VarRole::Multiplicity { .. }))
            .count();
        let stats = TransformStats {
            logical_variable_count: qubo_vars.len(),
            constraint_count: self.constraints.len(),
            penalty_count: penalties.len(),
            multiplicity_count,
        };
        Ok(TransformResult {
            n: self.fp.n(),
            qubo,
            exponent_vars: self.exponent_vars.clone(),
            qubo_vars,
            penalties,
            stats,
            ctx: self,
        })
    }
}

/// Reduces XOR chains to affine forms where possible. Returns the remaining
/// terms whose XOR equals the input's XOR; at most one term means the XOR is
/// affine.
fn fold_xor(mut terms: Vec<Bounded>) -> Vec<Bounded> {
    loop {
        let mut folded = None;
        'search: for i in 0..terms.len() {
            for j in i + 1..terms.len() {
                if let Some(f) = xor_affine(&terms[i], &terms[j]) {
                    folded = Some((i, j, f));
                    break 'search;
                }
            }
        }
        match folded {
            Some((i, j, f)) => {
                terms.remove(j);
                terms[i] = f;
            }
            None => break,
        }
    }
    terms.retain(|t| t.expr.as_constant() != Some(0));
    terms
}

fn xor_affine(a: &Bounded, b: &Bounded) -> Option<Bounded> {
    let flip = |x: &Bounded| Bounded::binary(LinExpr::constant(1).minus(&x.expr));
    match (a.expr.as_constant(), b.expr.as_constant()) {
        (Some(0), _) => return Some(b.clone()),
        (_, Some(0)) => return Some(a.clone()),
        (Some(1), _) => return Some(flip(b)),
        (_, Some(1)) => return Some(flip(a)),
        _ => {}
    }
    if a.expr == b.expr {
        return Some(Bounded::constant(0));
    }
    if a.expr.plus(&b.expr) == LinExpr::constant(1) {
        return Some(Bounded::constant(1));
    }
    None
}

/// Output of [`transform`].
#[derive(Clone, Debug)]
pub struct TransformResult {
    pub n: usize,
    pub qubo: Qubo,
    /// `u_0 .. u_{n-1}`; they occupy QUBO indices `0 .. n-1`.
    pub exponent_vars: Vec<VarId>,
    /// QUBO index to registry variable.
    pub qubo_vars: Vec<VarId>,
    /// Live linearized products `(x, y, z)`.
    pub penalties: Vec<(VarId, VarId, VarId)>,
    pub stats: TransformStats,
    ctx: TransformContext,
}

impl TransformResult {
    pub fn registry(&self) -> &VarRegistry {
        &self.ctx.reg
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.ctx.constraints
    }

    /// Register bits replaced by expressions over surviving variables.
    pub fn eliminated(&self) -> &[(VarId, LinExpr)] {
        &self.ctx.eliminated
    }

    pub fn qubo_index(&self, v: VarId) -> Option<usize> {
        self.qubo_vars.iter().position(|&w| w == v)
    }

    /// The full QUBO assignment induced by exponent `y` (all auxiliaries set
    /// to their consistent values).
    pub fn assignment_for(&self, y: u64) -> Vec<bool> {
        let vals = self.ctx.values_for_exponent(y);
        self.qubo_vars.iter().map(|v| vals[v.index()]).collect()
    }

    /// One line per squared constraint and per penalty, e.g.
    /// `F1=(1-u0-v0_1)^2` and `Pen1=Penalty(u1,u0,z5)`.
    pub fn dump(&self) -> String {
        let reg = self.registry();
        let mut s = String::new();
        for (i, c) in self.constraints().iter().enumerate() {
            writeln!(s, "F{}=({})^2", i + 1, c.expr.display(reg)).unwrap();
        }
        for (i, &(x, y, z)) in self.penalties.iter().enumerate() {
            writeln!(
                s,
                "Pen{}=Penalty({},{},{})",
                i + 1,
                reg.name(x),
                reg.name(y),
                reg.name(z)
            )
            .unwrap();
        }
        s
    }

    pub fn metadata(&self, inst: &DlpInstance) -> Metadata {
        let reg = self.registry();
        let roles = self.qubo_vars.iter().map(|&v| describe(reg, v)).collect();
        let eliminated = self
            .eliminated()
            .iter()
            .map(|(v, e)| (reg.name(*v).to_string(), e.display(reg)))
            .collect();
        Metadata {
            n: self.n,
            modulus: inst.fp.modulus().to_string(),
            h: inst.h.to_string(),
            num_vars: self.qubo.num_vars(),
            exponent_bits: (0..self.n).collect(),
            roles,
            eliminated,
        }
    }
}

fn describe(reg: &VarRegistry, v: VarId) -> String {
    let name = reg.name(v);
    match reg.role(v) {
        VarRole::Exponent { bit } => format!("{name} exponent bit={bit}"),
        VarRole::Register { stage, position } => {
            format!("{name} register stage={stage} position={position}")
        }
        VarRole::Product { x, y } => format!("{name} product {}*{}", reg.name(*x), reg.name(*y)),
        VarRole::Multiplicity { constraint, bit } => {
            format!("{name} multiplicity constraint={constraint} bit={bit}")
        }
    }
}

/// Runs the full reduction.
pub fn transform(inst: &DlpInstance) -> Result<TransformResult> {
    let n = inst.fp.n();
    let mut ctx = TransformContext::new(inst.fp.clone());
    ctx.decompose_exponent();
    let mut register = ctx.initial_register();
    for l in 1..n - 1 {
        register = ctx.stage_constraints(&register, l)?;
    }
    ctx.final_constraints(&register, &inst.h)?;
    ctx.finish()
}

/// Reads `y = sum 2^i u_i` off a QUBO assignment.
pub fn decode_solution(assignment: &[bool], result: &TransformResult) -> Result<u64> {
    decode_exponent(
        assignment,
        result.qubo.num_vars(),
        &(0..result.n).collect::<Vec<_>>(),
    )
}

/// `y` from the QUBO indices of the exponent bits, least significant first.
pub fn decode_exponent(
    assignment: &[bool],
    num_vars: usize,
    exponent_bits: &[usize],
) -> Result<u64> {
    if assignment.len() < num_vars {
        return Err(Error::MissingVariable(assignment.len()));
    }
    exponent_bits
        .iter()
        .enumerate()
        .try_fold(0u64, |y, (i, &idx)| {
            let bit = *assignment.get(idx).ok_or(Error::MissingVariable(idx))?;
            Ok(y | (u64::from(bit) << i))
        })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimateMode {
    /// One register, one product and two carry variables per coordinate.
    Naive,
    /// One carry bit per coordinate.
    Optimized,
}

/// Asymptotic variable-count estimates: `4n^2` naive, `3n^2` optimized.
pub fn variable_count_estimate(n: usize, mode: EstimateMode) -> usize {
    match mode {
        EstimateMode::Naive => 4 * n * n,
        EstimateMode::Optimized => 3 * n * n,
    }
}

/// Sidecar written next to a QUBO file: everything `decode` needs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Metadata {
    pub n: usize,
    pub modulus: String,
    /// Target in big-endian normal-basis bits.
    pub h: String,
    pub num_vars: usize,
    pub exponent_bits: Vec<usize>,
    /// Description of each QUBO variable, by index.
    pub roles: Vec<String>,
    /// `(name, expression)` for register bits that were propagated away.
    pub eliminated: Vec<(String, String)>,
}

impl Metadata {
    pub fn to_text(&self) -> String {
        let mut s = String::from("# dlpqubo transform metadata\n");
        writeln!(s, "n={}", self.n).unwrap();
        writeln!(s, "f={}", self.modulus).unwrap();
        writeln!(s, "h_nb={}", self.h).unwrap();
        writeln!(s, "num_vars={}", self.num_vars).unwrap();
        let bits: Vec<String> = self.exponent_bits.iter().map(usize::to_string).collect();
        writeln!(s, "exponent_bits={}", bits.join(",")).unwrap();
        for (i, r) in self.roles.iter().enumerate() {
            writeln!(s, "var.{i}={r}").unwrap();
        }
        for (name, e) in &self.eliminated {
            writeln!(s, "elim.{name}={e}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Metadata> {
        let mut kv: BTreeMap<String, String> = BTreeMap::new();
        let mut roles: BTreeMap<usize, String> = BTreeMap::new();
        let mut eliminated = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("expected key=value: '{line}'")))?;
            if let Some(i) = k.strip_prefix("var.") {
                let i = i
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad index '{k}'")))?;
                roles.insert(i, v.to_string());
            } else if let Some(name) = k.strip_prefix("elim.") {
                eliminated.push((name.to_string(), v.to_string()));
            } else {
                kv.insert(k.to_string(), v.to_string());
            }
        }
        let get = |k: &str| {
            kv.get(k)
                .ok_or_else(|| Error::Parse(format!("missing key '{k}'")))
        };
        let num = |k: &str| -> Result<usize> {
            get(k)?
                .parse()
                .map_err(|_| Error::Parse(format!("bad value for '{k}'")))
        };
        let exponent_bits = get("exponent_bits")?
            .split(',')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse()
                    .map_err(|_| Error::Parse(format!("bad exponent index '{s}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        Ok(Metadata {
            n: num("n")?,
            modulus: get("f")?.clone(),
            h: get("h_nb")?.clone(),
            num_vars: num("num_vars")?,
            exponent_bits,
            roles: roles.into_values().collect(),
            eliminated,
        })
    }

    pub fn decode(&self, assignment: &[bool]) -> Result<u64> {
        decode_exponent(assignment, self.num_vars, &self.exponent_bits)
    }
}
