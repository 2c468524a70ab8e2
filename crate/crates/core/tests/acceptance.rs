//! Acceptance gate: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use dlpqubo_core::dlp_transform::{decode_solution, transform, DlpInstance, TransformContext};
use dlpqubo_core::pseudo_boolean::{
    rosenberg_penalty, simplify, Binding, LinExpr, VarId, VarRegistry,
};
use dlpqubo_core::qubo::{exhaustive_solve, simulated_annealing, AnnealParams};
use dlpqubo_core::verify_stats::{
    all_solutions, binomial_tail_log10, success_rate, verify, TrialStats,
};
use dlpqubo_core::{BitMatrix, FieldParams, Gf2Poly, NbElement};
use num_rational::{BigRational, Ratio};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GOLDEN_CONSTRUCTION_LIMIT: Duration = Duration::from_millis(1);
const GOLDEN_QUBO_LIMIT: Duration = Duration::from_secs(1);
const DESK_SCALE_LIMIT: Duration = Duration::from_secs(30);
const PIPELINE_MAX_VARS: usize = 12;
const SCALING_NS: [usize; 6] = [2, 3, 5, 6, 9, 11];
const SA_TARGETS: usize = 10;
const SA_MAX_READS: usize = 10_000;
const TAIL_RANGE: (f64, f64) = (-13550.5, -13548.5);
const GOLDEN_SA_READS: usize = 1000;
const GOLDEN_SA_MIN_RATE: f64 = 0.99;
const HOMOMORPHISM_PAIRS: usize = 1000;

type Outcome = (bool, String);
type Criterion = (&'static str, fn() -> Outcome);

fn c1_golden_construction() -> Outcome {
    let start = Instant::now();
    let f3 = Gf2Poly::dickson(3);
    let f5 = Gf2Poly::dickson(5);
    let elapsed = start.elapsed();
    let ok = f3 == Gf2Poly::from_exponents(&[3, 2, 0])
        && f5 == Gf2Poly::from_exponents(&[5, 4, 2, 1, 0])
        && elapsed < GOLDEN_CONSTRUCTION_LIMIT;
    (ok, format!("f3={f3} f5={f5} in {elapsed:?}"))
}

fn grid(rows: &[&[u8]]) -> BitMatrix {
    BitMatrix::from_grid(rows)
}

fn c2_golden_matrices() -> Outcome {
    let f3 = FieldParams::build(3).unwrap();
    let f5 = FieldParams::build(5).unwrap();
    // Transition matrices are displayed with the highest power first.
    let m_n2p = f3.m_n2p().reversed() == grid(&[&[1, 1, 1], &[1, 0, 0], &[0, 1, 0]]);
    let m_p2n = f3.m_p2n().reversed() == grid(&[&[0, 1, 0], &[0, 0, 1], &[1, 1, 1]]);
    let t0_3 = *f3.t0() == grid(&[&[0, 1, 0], &[1, 0, 1], &[0, 1, 1]]);
    let t0_5 = *f5.t0()
        == grid(&[
            &[0, 1, 0, 0, 0],
            &[1, 0, 0, 1, 0],
            &[0, 0, 0, 1, 1],
            &[0, 1, 1, 0, 0],
            &[0, 0, 1, 0, 1],
        ]);
    let counts = (f3.t0().count_ones(), f5.t0().count_ones());
    let ok =
        m_n2p && m_p2n && t0_3 && t0_5 && counts == (5, 9) && f3.is_optimal() && f5.is_optimal();
    (
        ok,
        format!("m_n2p={m_n2p} m_p2n={m_p2n} t0(3)={t0_3} t0(5)={t0_5} nonzeros={counts:?}"),
    )
}

fn c3_golden_qubo() -> Outcome {
    let start = Instant::now();
    let q = common::golden_qubo();
    let sol = exhaustive_solve(&q).unwrap();
    let elapsed = start.elapsed();
    let agrees = (0..1u64 << 11).all(|m| {
        let x = common::unpack(m, 11);
        q.energy(&x).unwrap() == common::golden_energy(&x)
    });
    let ys: Vec<u64> = sol
        .best_assignments
        .iter()
        .map(|x| common::golden_decode(x))
        .collect();
    let ok = q.num_vars() == 11
        && agrees
        && sol.best_energy == 0
        && ys == [5]
        && elapsed < GOLDEN_QUBO_LIMIT;
    (
        ok,
        format!(
            "vars={} min={} argmins={} y={ys:?} formula_agrees={agrees} in {elapsed:?}",
            q.num_vars(),
            sol.best_energy,
            sol.best_assignments.len()
        ),
    )
}

fn c4_pipeline_parity() -> Outcome {
    let fp = FieldParams::build(3).unwrap();
    let h = NbElement::parse_be("110", 3).unwrap();
    let r = transform(&DlpInstance::new(fp, h).unwrap()).unwrap();
    let sol = exhaustive_solve(&r.qubo).unwrap();
    let ys: BTreeSet<u64> = sol
        .best_assignments
        .iter()
        .map(|x| decode_solution(x, &r).unwrap())
        .collect();
    let vars = r.stats.logical_variable_count;
    let ok = vars <= PIPELINE_MAX_VARS && sol.best_energy == 0 && ys == BTreeSet::from([5]);
    (
        ok,
        format!(
            "measured vars={vars} (limit {PIPELINE_MAX_VARS}) min={} y={ys:?}",
            sol.best_energy
        ),
    )
}

fn c5_desk_scale() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let mut bad = Vec::new();
    for n in [2usize, 3] {
        let fp = FieldParams::build(n).unwrap();
        for bits in 1..(1u64 << n) {
            let inst = DlpInstance::new(fp.clone(), fp.element(bits)).unwrap();
            let r = transform(&inst).unwrap();
            let sol = exhaustive_solve(&r.qubo).unwrap();
            let ys: BTreeSet<u64> = sol
                .best_assignments
                .iter()
                .map(|x| decode_solution(x, &r).unwrap())
                .collect();
            let want: BTreeSet<u64> = all_solutions(&inst).into_iter().collect();
            let mut ok = sol.best_energy == 0 && ys == want;
            if bits == (1 << n) - 1 {
                ok &= ys == BTreeSet::from([0, (1 << n) - 1]);
            }
            if !ok {
                bad.push(format!("n={n} h={}", inst.h));
            }
            checked += 1;
        }
    }
    let elapsed = start.elapsed();
    let ok = bad.is_empty() && checked == 10 && elapsed < DESK_SCALE_LIMIT;
    (
        ok,
        format!("{checked} targets, mismatches={bad:?} in {elapsed:?}"),
    )
}

fn c6_scaling() -> Outcome {
    let mut rows = Vec::new();
    let mut ok = true;
    for n in SCALING_NS {
        let fp = FieldParams::build(n).unwrap();
        let t = NbElement::generator(n);
        let worst = [1u64, 5, (1 << n) - 2]
            .into_iter()
            .map(|y| {
                let h = fp.pow(&t, y).unwrap();
                transform(&DlpInstance::new(fp.clone(), h).unwrap())
                    .unwrap()
                    .stats
                    .logical_variable_count
            })
            .max()
            .unwrap();
        let bound = 3 * n * n + n;
        ok &= worst <= bound;
        rows.push(format!("n={n}:{worst}/{bound}"));
    }

    let fp = FieldParams::build(5).unwrap();
    let t = NbElement::generator(5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut solved = 0;
    let mut max_reads = 0;
    for _ in 0..SA_TARGETS {
        let y_true = rng.gen_range(1..fp.group_order());
        let inst = DlpInstance::new(fp.clone(), fp.pow(&t, y_true).unwrap()).unwrap();
        let r = transform(&inst).unwrap();
        for reads in [1000, SA_MAX_READS] {
            let params = AnnealParams {
                reads,
                seed: y_true,
                ..AnnealParams::default()
            };
            let sol = simulated_annealing(&r.qubo, &params).unwrap();
            let good = sol.best_energy == 0
                && sol
                    .best_assignments
                    .iter()
                    .all(|x| verify(decode_solution(x, &r).unwrap(), &inst));
            if good {
                solved += 1;
                max_reads = max_reads.max(reads);
                break;
            }
        }
    }
    ok &= solved >= SA_TARGETS;
    (
        ok,
        format!(
            "counts {} ; n=5 SA solved {solved}/{SA_TARGETS} with <= {max_reads} reads",
            rows.join(" ")
        ),
    )
}

fn c7_statistics() -> Outcome {
    let p = BigRational::new(1.into(), 2048.into());
    let tail = binomial_tail_log10(10_000, 5000, &p).unwrap();
    let rate = success_rate(&TrialStats::new(10_000, 7415, 11).unwrap()).unwrap();
    let ok = (TAIL_RANGE.0..=TAIL_RANGE.1).contains(&tail) && rate == Ratio::new(7415, 10_000);
    (ok, format!("log10 tail={tail:.6} rate={rate}"))
}

fn golden_sa() -> (bool, String) {
    let q = common::golden_qubo();
    let certified = exhaustive_solve(&q).unwrap().best_energy;
    let params = AnnealParams {
        reads: GOLDEN_SA_READS,
        ..AnnealParams::default()
    };
    let sol = simulated_annealing(&q, &params).unwrap();
    let rate = sol.successes_at_best as f64 / sol.reads as f64;
    let ok = sol.best_energy == certified && rate >= GOLDEN_SA_MIN_RATE;
    (
        ok,
        format!(
            "golden SA {}/{} at energy {}",
            sol.successes_at_best, sol.reads, sol.best_energy
        ),
    )
}

fn homomorphism() -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ok = true;
    for n in SCALING_NS {
        let fp = FieldParams::build(n).unwrap();
        let mask = (1u64 << n) - 1;
        for _ in 0..HOMOMORPHISM_PAIRS {
            let a = fp.element(rng.gen::<u64>() & mask);
            let b = fp.element(rng.gen::<u64>() & mask);
            let pa = fp.to_poly(&a).unwrap();
            let pb = fp.to_poly(&b).unwrap();
            let prod = fp.to_poly(&fp.mul(&a, &b).unwrap()).unwrap();
            ok &= prod == pa.mul_mod(&pb, fp.modulus()).unwrap();
            ok &= fp.from_poly(&pa).unwrap() == a;
        }
    }
    (
        ok,
        format!(
            "homomorphism {}x{HOMOMORPHISM_PAIRS} pairs",
            SCALING_NS.len()
        ),
    )
}

fn rosenberg_truth_table() -> (bool, String) {
    let p = rosenberg_penalty(VarId(0), VarId(1), VarId(2));
    let ok = (0..8u32).all(|m| {
        let bit = |v: VarId| (m >> v.0) & 1 == 1;
        let e = p.eval(bit);
        let consistent = bit(VarId(2)) == (bit(VarId(0)) && bit(VarId(1)));
        if consistent {
            e == 0
        } else {
            e >= 1
        }
    });
    (ok, "penalty truth table".into())
}

/// Compares solution sets of a binding system before and after
/// simplification, by enumerating every variable it mentions.
fn simplify_preserves(bindings: &[Binding], reg: &VarRegistry) -> bool {
    let mut vars: BTreeSet<VarId> = BTreeSet::new();
    for b in bindings {
        vars.insert(b.var);
        vars.extend(b.expr.vars());
    }
    let mut stack: Vec<VarId> = vars.iter().copied().collect();
    while let Some(v) = stack.pop() {
        if let Some((x, y)) = reg.factors(v) {
            for f in [x, y] {
                if vars.insert(f) {
                    stack.push(f);
                }
            }
        }
    }
    let vars: Vec<VarId> = vars.into_iter().collect();
    let pos: BTreeMap<VarId, usize> = vars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let products: Vec<(VarId, VarId, VarId)> = vars
        .iter()
        .filter_map(|&z| reg.factors(z).map(|(x, y)| (x, y, z)))
        .collect();

    let simplified = simplify(bindings.to_vec(), reg);
    (0..1u64 << vars.len()).all(|m| {
        let val = |v: VarId| (m >> pos[&v]) & 1 == 1;
        if !products
            .iter()
            .all(|&(x, y, z)| val(z) == (val(x) && val(y)))
        {
            return true;
        }
        let original = bindings
            .iter()
            .all(|b| i64::from(val(b.var)) == b.expr.eval(val));
        let reduced = match &simplified {
            Err(_) => false,
            Ok(s) => {
                s.eliminated
                    .iter()
                    .all(|(v, e)| i64::from(val(*v)) == e.eval(val))
                    && s.bindings
                        .iter()
                        .all(|b| i64::from(val(b.var)) == b.expr.eval(val))
                    && s.residual.iter().all(|e| e.eval(val) == 0)
            }
        };
        original == reduced
    })
}

fn simplify_suite() -> (bool, String) {
    let mut systems = 0;
    let mut ok = true;

    for n in [2usize, 3] {
        let fp = FieldParams::build(n).unwrap();
        for bits in 1..(1u64 << n) {
            let mut ctx = TransformContext::new(fp.clone());
            ctx.decompose_exponent();
            let mut reg = ctx.initial_register();
            for l in 1..n - 1 {
                reg = ctx.stage_constraints(&reg, l).unwrap();
            }
            ctx.final_constraints(&reg, &fp.element(bits)).unwrap();
            for (_, b) in ctx.stage_bindings() {
                ok &= simplify_preserves(b, ctx.registry());
                systems += 1;
            }
        }
    }

    // Every two-binding system v1 = c1 + a x0, v2 = c2 + b0 x0 + b1 v1.
    let reg = VarRegistry::new();
    let (x0, v1, v2) = (VarId(0), VarId(1), VarId(2));
    let cs = [-1i64, 0, 1, 2];
    let ks = [-1i64, 0, 1];
    for c1 in cs {
        for a in ks {
            for c2 in cs {
                for b0 in ks {
                    for b1 in ks {
                        let mut e1 = LinExpr::constant(c1);
                        e1.add_term(x0, a);
                        let mut e2 = LinExpr::constant(c2);
                        e2.add_term(x0, b0);
                        e2.add_term(v1, b1);
                        let sys = [Binding::new(v1, e1), Binding::new(v2, e2)];
                        ok &= simplify_preserves(&sys, &reg);
                        ok &= simplify_preserves(&sys[1..], &reg);
                        systems += 2;
                    }
                }
            }
        }
    }
    (ok, format!("simplify on {systems} systems"))
}

fn c8_property_suites() -> Outcome {
    let parts = [
        golden_sa(),
        homomorphism(),
        rosenberg_truth_table(),
        simplify_suite(),
    ];
    let ok = parts.iter().all(|(ok, _)| *ok);
    let detail: Vec<String> = parts
        .iter()
        .map(|(ok, d)| format!("{d}: {}", if *ok { "ok" } else { "FAILED" }))
        .collect();
    (ok, detail.join("; "))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("golden construction", c1_golden_construction),
        ("golden matrices", c2_golden_matrices),
        ("golden QUBO", c3_golden_qubo),
        ("pipeline parity", c4_pipeline_parity),
        ("total correctness at desk scale", c5_desk_scale),
        ("scaling check", c6_scaling),
        ("statistics", c7_statistics),
        ("property suites", c8_property_suites),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) =
            catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| (false, "panicked".to_string()));
        println!(
            "{} criterion {} ({name}): {detail}",
            if ok { "PASS" } else { "FAIL" },
            i + 1
        );
        if !ok {
            failed += 1;
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
