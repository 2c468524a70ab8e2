//! Integer QUBO model, its text file format, and two solvers: exhaustive
//! Gray-code enumeration and single-flip simulated annealing.
//!
//! File format (comment lines start with `#`):
//!
//! ```text
//! qubo <num_vars> <offset>
//! <i> <i> <coeff>     linear term
//! <i> <j> <coeff>     quadratic term, i < j
//! ```
//!
//! Writers emit terms sorted by `(i, j)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::pseudo_boolean::{PbPoly, VarId};

/// Default limit on the number of variables for exhaustive search.
pub const EXHAUSTIVE_GUARD: usize = 28;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Qubo {
    num_vars: usize,
    linear: BTreeMap<usize, i64>,
    quadratic: BTreeMap<(usize, usize), i64>,
    offset: i64,
}

impl Qubo {
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            ..Self::default()
        }
    }

    /// Builds a QUBO from a quadratic polynomial, mapping each variable
    /// through `index`.
    pub fn from_pb(poly: &PbPoly, num_vars: usize, index: impl Fn(VarId) -> usize) -> Result<Self> {
        let mut q = Qubo::new(num_vars);
        for (mono, c) in poly.monomials() {
            match mono {
                [] => q.add_offset(c),
                [x] => q.add_linear(index(*x), c),
                [x, y] => q.add_quadratic(index(*x), index(*y), c),
                _ => return Err(Error::DegreeTooHigh(mono.len())),
            }
        }
        Ok(q)
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn linear(&self) -> &BTreeMap<usize, i64> {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), i64> {
        &self.quadratic
    }

    pub fn add_offset(&mut self, c: i64) {
        self.offset += c;
    }

    pub fn add_linear(&mut self, i: usize, c: i64) {
        self.num_vars = self.num_vars.max(i + 1);
        let e = self.linear.entry(i).or_insert(0);
        *e += c;
        if *e == 0 {
            self.linear.remove(&i);
        }
    }

    /// Adds `c * x_i * x_j`; `i == j` folds into the linear term.
    pub fn add_quadratic(&mut self, i: usize, j: usize, c: i64) {
        if i == j {
            return self.add_linear(i, c);
        }
        let key = (i.min(j), i.max(j));
        self.num_vars = self.num_vars.max(key.1 + 1);
        let e = self.quadratic.entry(key).or_insert(0);
        *e += c;
        if *e == 0 {
            self.quadratic.remove(&key);
        }
    }

    pub fn energy(&self, x: &[bool]) -> Result<i64> {
        if x.len() < self.num_vars {
            return Err(Error::MissingVariable(x.len()));
        }
        let lin: i64 = self
            .linear
            .iter()
            .filter(|(&i, _)| x[i])
            .map(|(_, &c)| c)
            .sum();
        let quad: i64 = self
            .quadratic
            .iter()
            .filter(|(&(i, j), _)| x[i] && x[j])
            .map(|(_, &c)| c)
            .sum();
        Ok(self.offset + lin + quad)
    }

    /// Every coefficient and the offset multiplied by `k`.
    pub fn scaled(&self, k: i64) -> Qubo {
        let mut q = Qubo::new(self.num_vars);
        q.offset = self.offset * k;
        for (&i, &c) in &self.linear {
            q.add_linear(i, c * k);
        }
        for (&(i, j), &c) in &self.quadratic {
            q.add_quadratic(i, j, c * k);
        }
        q
    }

    /// Renames variable `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Qubo {
        let mut q = Qubo::new(self.num_vars);
        q.offset = self.offset;
        for (&i, &c) in &self.linear {
            q.add_linear(perm[i], c);
        }
        for (&(i, j), &c) in &self.quadratic {
            q.add_quadratic(perm[i], perm[j], c);
        }
        q
    }

    /// Per-variable linear coefficients and neighbour lists.
    fn adjacency(&self) -> (Vec<i64>, Vec<Vec<(usize, i64)>>) {
        let mut lin = vec![0i64; self.num_vars];
        let mut adj = vec![Vec::new(); self.num_vars];
        for (&i, &c) in &self.linear {
            lin[i] = c;
        }
        for (&(i, j), &c) in &self.quadratic {
            adj[i].push((j, c));
            adj[j].push((i, c));
        }
        (lin, adj)
    }

    pub fn to_text(&self, comments: &[String]) -> String {
        let mut s = String::new();
        for c in comments {
            writeln!(s, "# {c}").unwrap();
        }
        writeln!(s, "qubo {} {}", self.num_vars, self.offset).unwrap();
        let mut terms: Vec<((usize, usize), i64)> =
            self.linear.iter().map(|(&i, &c)| ((i, i), c)).collect();
        terms.extend(self.quadratic.iter().map(|(&k, &c)| (k, c)));
        terms.sort_unstable();
        for ((i, j), c) in terms {
            writeln!(s, "{i} {j} {c}").unwrap();
        }
        s
    }

    pub fn parse(text: &str) -> Result<Qubo> {
        let mut q: Option<Qubo> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let bad = |what: &str| Error::Parse(format!("line {}: {what}: '{line}'", lineno + 1));
            let fields: Vec<&str> = line.split_whitespace().collect();
            match (&mut q, fields.as_slice()) {
                (None, ["qubo", n, off]) => {
                    let mut fresh = Qubo::new(n.parse().map_err(|_| bad("bad variable count"))?);
                    fresh.offset = off.parse().map_err(|_| bad("bad offset"))?;
                    q = Some(fresh);
                }
                (None, _) => return Err(bad("expected header 'qubo <num_vars> <offset>'")),
                (Some(q), [i, j, c]) => {
                    let i: usize = i.parse().map_err(|_| bad("bad index"))?;
                    let j: usize = j.parse().map_err(|_| bad("bad index"))?;
                    let c: i64 = c.parse().map_err(|_| bad("bad coefficient"))?;
                    if i >= q.num_vars || j >= q.num_vars {
                        return Err(bad("index out of range"));
                    }
                    q.add_quadratic(i, j, c);
                }
                (Some(_), _) => return Err(bad("expected '<i> <j> <coeff>'")),
            }
        }
        q.ok_or_else(|| Error::Parse("missing 'qubo' header".into()))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolveResult {
    pub best_energy: i64,
    /// All minimizers (exhaustive) or the distinct best states found
    /// (annealing), in discovery order.
    pub best_assignments: Vec<Vec<bool>>,
    pub reads: usize,
    pub successes_at_best: usize,
}

fn unpack(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (mask >> i) & 1 == 1).collect()
}

pub fn exhaustive_solve(q: &Qubo) -> Result<SolveResult> {
    exhaustive_solve_with_guard(q, EXHAUSTIVE_GUARD)
}

/// Enumerates all `2^n` assignments in Gray-code order with incremental
/// energy updates and returns every minimizer.
pub fn exhaustive_solve_with_guard(q: &Qubo, guard: usize) -> Result<SolveResult> {
    let n = q.num_vars();
    if n > guard || n > 62 {
        return Err(Error::TooManyVariables { vars: n, guard });
    }
    let (lin, adj) = q.adjacency();
    let mut field = lin;
    let mut x = vec![false; n];
    let mut state = 0u64;
    let mut energy = q.offset();
    let mut best = energy;
    let mut argmin = vec![0u64];

    for step in 1u64..(1u64 << n) {
        let i = step.trailing_zeros() as usize;
        let (delta, sign) = if x[i] { (-field[i], -1) } else { (field[i], 1) };
        energy += delta;
        x[i] = !x[i];
        state ^= 1 << i;
        for &(j, c) in &adj[i] {
            field[j] += sign * c;
        }
        if energy < best {
            best = energy;
            argmin.clear();
            argmin.push(state);
        } else if energy == best {
            argmin.push(state);
        }
    }
    argmin.sort_unstable();
    Ok(SolveResult {
        best_energy: best,
        successes_at_best: argmin.len(),
        best_assignments: argmin.into_iter().map(|m| unpack(m, n)).collect(),
        reads: 1usize << n,
    })
}

/// Parameters for [`simulated_annealing`].
#[derive(Clone, Debug, PartialEq)]
pub struct AnnealParams {
    pub reads: usize,
    pub sweeps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    pub seed: u64,
    pub parallel: bool,
}

impl Default for AnnealParams {
    /// Geometric inverse temperature from 0.3 to 3 over 200 sweeps.
    fn default() -> Self {
        Self {
            reads: 1000,
            sweeps: 200,
            beta_start: 0.3,
            beta_end: 3.0,
            seed: 42,
            parallel: true,
        }
    }
}

impl AnnealParams {
    pub fn beta(&self, sweep: usize) -> f64 {
        if self.sweeps <= 1 {
            return self.beta_end;
        }
        let frac = sweep as f64 / (self.sweeps - 1) as f64;
        self.beta_start * (self.beta_end / self.beta_start).powf(frac)
    }
}

/// Outcome of one annealing read.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Read {
    pub energy: i64,
    pub assignment: Vec<bool>,
}

/// Runs one read. The generator is derived from `(seed, read)` alone, so
/// results do not depend on scheduling.
pub fn anneal_read(q: &Qubo, params: &AnnealParams, read: usize) -> Read {
    let n = q.num_vars();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(read as u64);

    let (lin, adj) = q.adjacency();
    let mut x: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut field = lin;
    for i in 0..n {
        if x[i] {
            for &(j, c) in &adj[i] {
                field[j] += c;
            }
        }
    }
    let mut energy = q.energy(&x).expect("assignment covers all variables");
    let mut best = Read {
        energy,
        assignment: x.clone(),
    };
    let mut order: Vec<usize> = (0..n).collect();

    for sweep in 0..params.sweeps {
        let beta = params.beta(sweep);
        order.shuffle(&mut rng);
        for &i in &order {
            let delta = if x[i] { -field[i] } else { field[i] };
            let accept = delta <= 0 || rng.gen::<f64>() < (-beta * delta as f64).exp();
            if !accept {
                continue;
            }
            energy += delta;
            x[i] = !x[i];
            let sign = if x[i] { 1 } else { -1 };
            for &(j, c) in &adj[i] {
                field[j] += sign * c;
            }
            if energy < best.energy {
                best = Read {
                    energy,
                    assignment: x.clone(),
                };
            }
        }
    }
    best
}

/// Runs all reads and summarizes them.
pub fn anneal_reads(q: &Qubo, params: &AnnealParams) -> Vec<Read> {
    if params.parallel {
        (0..params.reads)
            .into_par_iter()
            .map(|r| anneal_read(q, params, r))
            .collect()
    } else {
        (0..params.reads)
            .map(|r| anneal_read(q, params, r))
            .collect()
    }
}

pub fn simulated_annealing(q: &Qubo, params: &AnnealParams) -> Result<SolveResult> {
    if params.reads == 0 {
        return Err(Error::Parse("annealing needs at least one read".into()));
    }
    let reads = anneal_reads(q, params);
    let best_energy = reads
        .iter()
        .map(|r| r.energy)
        .min()
        .expect("at least one read");
    let mut best_assignments: Vec<Vec<bool>> = Vec::new();
    let mut successes_at_best = 0;
    for r in reads.iter().filter(|r| r.energy == best_energy) {
        successes_at_best += 1;
        if !best_assignments.contains(&r.assignment) {
            best_assignments.push(r.assignment.clone());
        }
    }
    Ok(SolveResult {
        best_energy,
        best_assignments,
        reads: params.reads,
        successes_at_best,
    })
}
