#![allow(dead_code)]

use dlpqubo_core::pseudo_boolean::{rosenberg_penalty, square_to_pb, LinExpr, PbPoly, VarId};
use dlpqubo_core::qubo::Qubo;

/// Hand-derived variable names of the GF(2^3) worked example, by QUBO index.
pub const GOLDEN_NAMES: [u32; 11] = [0, 1, 2, 4, 6, 8, 10, 11, 12, 13, 14];

fn idx(name: u32) -> usize {
    GOLDEN_NAMES
        .iter()
        .position(|&u| u == name)
        .expect("golden variable")
}

fn lin(constant: i64, terms: &[(u32, i64)]) -> LinExpr {
    let mut e = LinExpr::constant(constant);
    for &(u, c) in terms {
        e.add_term(VarId(u), c);
    }
    e
}

/// F1..F6 and the four Rosenberg penalties for t^y = t^4 + t^2 over GF(2^3).
pub fn golden_qubo() -> Qubo {
    let squares = [
        lin(1, &[(0, -1), (4, -1)]),
        lin(1, &[(6, -1), (10, -1)]),
        lin(0, &[(8, 1), (1, 1), (4, 1), (14, -2)]),
        lin(0, &[(11, -1), (12, 1), (6, 1), (13, -1)]),
        lin(1, &[(13, -1), (4, -1)]),
        lin(1, &[(13, -1), (8, -1), (11, 1)]),
    ];
    let penalties = [(1, 4, 10), (2, 8, 11), (2, 4, 12), (2, 6, 13)];
    let mut f = PbPoly::zero();
    for e in &squares {
        f.add_assign(&square_to_pb(e));
    }
    for (x, y, z) in penalties {
        f.add_assign(&rosenberg_penalty(VarId(x), VarId(y), VarId(z)));
    }
    Qubo::from_pb(&f, GOLDEN_NAMES.len(), |v| idx(v.0)).unwrap()
}

/// The same energy, evaluated straight from the formulas.
pub fn golden_energy(x: &[bool]) -> i64 {
    let u = |name: u32| i64::from(x[idx(name)]);
    let sq = |v: i64| v * v;
    let pen = |a: i64, b: i64, z: i64| a * b - 2 * (a + b) * z + 3 * z;
    sq(1 - u(0) - u(4))
        + sq(1 - u(6) - u(10))
        + sq(u(8) + u(1) + u(4) - 2 * u(14))
        + sq(-u(11) + u(12) + u(6) - u(13))
        + sq(1 - u(13) - u(4))
        + sq(1 - u(13) - u(8) + u(11))
        + pen(u(1), u(4), u(10))
        + pen(u(2), u(8), u(11))
        + pen(u(2), u(4), u(12))
        + pen(u(2), u(6), u(13))
}

/// y = u0 + 2 u1 + 4 u2.
pub fn golden_decode(x: &[bool]) -> u64 {
    (0..3).map(|i| u64::from(x[idx(i)]) << i).sum()
}

pub fn unpack(mask: u64, n: usize) -> Vec<bool> {
    (0..n).map(|i| (mask >> i) & 1 == 1).collect()
}
