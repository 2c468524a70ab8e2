//! Oracles independent of the QUBO pipeline, and binomial tail statistics.

use num_bigint::{BigInt, BigUint};
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive, Zero};
use statrs::function::gamma::ln_gamma;

use crate::dlp_transform::DlpInstance;
use crate::error::{Error, Result};
use crate::normal_basis::{FieldParams, NbElement};
use crate::qubo::{exhaustive_solve, Qubo};

/// Smallest `y` in `[0, 2^n - 2]` with `t^y = h`, by scanning powers.
pub fn dlp_brute_force(fp: &FieldParams, h: &NbElement) -> Result<u64> {
    if h.len() != fp.n() {
        return Err(Error::LengthMismatch {
            expected: fp.n(),
            got: h.len(),
        });
    }
    let t = NbElement::generator(fp.n());
    let mut acc = NbElement::one(fp.n());
    for y in 0..fp.group_order() {
        if acc == *h {
            return Ok(y);
        }
        acc = fp.mul(&acc, &t)?;
    }
    Err(Error::NotInSubgroup)
}

pub fn verify(y: u64, inst: &DlpInstance) -> bool {
    inst.fp
        .pow(&NbElement::generator(inst.fp.n()), y)
        .is_ok_and(|p| p == inst.h)
}

/// Every `y` in `[0, 2^n - 1]` with `t^y = h`.
pub fn all_solutions(inst: &DlpInstance) -> Vec<u64> {
    (0..=inst.group_order())
        .filter(|&y| verify(y, inst))
        .collect()
}

/// `(minimum energy, number of argmin assignments)`.
pub fn count_minima(q: &Qubo) -> Result<(i64, usize)> {
    let r = exhaustive_solve(q)?;
    Ok((r.best_energy, r.best_assignments.len()))
}

/// `log10 sum_{i=threshold}^{trials} C(trials, i) p^i (1-p)^(trials-i)`,
/// accumulated in log space from the largest term.
pub fn binomial_tail_log10(trials: u64, threshold: u64, p: &BigRational) -> Result<f64> {
    check_tail_args(trials, threshold, p)?;
    if threshold == 0 {
        return Ok(0.0);
    }
    if p.is_zero() {
        return Ok(f64::NEG_INFINITY);
    }
    if p.is_one() {
        return Ok(0.0);
    }
    let ln_p = ln_rational(p);
    let ln_q = ln_rational(&(BigRational::one() - p));
    let n = trials as f64;
    let ln_n_fact = ln_gamma(n + 1.0);
    let terms: Vec<f64> = (threshold..=trials)
        .map(|i| {
            let i = i as f64;
            ln_n_fact - ln_gamma(i + 1.0) - ln_gamma(n - i + 1.0) + i * ln_p + (n - i) * ln_q
        })
        .collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok((max + sum.ln()) / std::f64::consts::LN_10)
}

/// The same tail as an exact rational.
pub fn binomial_tail_exact(trials: u64, threshold: u64, p: &BigRational) -> Result<BigRational> {
    check_tail_args(trials, threshold, p)?;
    let q = BigRational::one() - p;
    let mut sum = BigRational::zero();
    let mut choose = BigInt::one();
    for i in 0..=trials {
        if i >= threshold {
            let term = BigRational::from_integer(choose.clone()) * pow(p, i) * pow(&q, trials - i);
            sum += term;
        }
        choose = choose * BigInt::from(trials - i) / BigInt::from(i + 1);
    }
    Ok(sum)
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    num_traits::pow(x.clone(), e as usize)
}

fn check_tail_args(trials: u64, threshold: u64, p: &BigRational) -> Result<()> {
    if threshold > trials {
        return Err(Error::InvalidArgument(format!(
            "threshold {threshold} > trials {trials}"
        )));
    }
    if p.is_negative() || *p > BigRational::one() {
        return Err(Error::InvalidArgument(format!(
            "probability {p} outside [0, 1]"
        )));
    }
    Ok(())
}

/// Natural log of a positive rational, exact-ish for huge numerators and
/// denominators.
pub fn ln_rational(x: &BigRational) -> f64 {
    ln_big(&x.numer().magnitude().clone()) - ln_big(&x.denom().magnitude().clone())
}

fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_f64().expect("64-bit value");
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    /// log2 of the solution-space size.
    pub space_bits: u32,
}

impl TrialStats {
    pub fn new(trials: u64, successes: u64, space_bits: u32) -> Result<Self> {
        if successes > trials {
            return Err(Error::InvalidArgument(format!(
                "{successes} successes > {trials} trials"
            )));
        }
        Ok(Self {
            trials,
            successes,
            space_bits,
        })
    }

    /// `2^-space_bits`: chance that a uniformly random assignment hits a
    /// unique minimum.
    pub fn random_hit_probability(&self) -> BigRational {
        BigRational::new(BigInt::one(), BigInt::one() << self.space_bits)
    }

    /// log10 probability that uniform guessing reaches `successes`.
    pub fn random_tail_log10(&self) -> Result<f64> {
        binomial_tail_log10(self.trials, self.successes, &self.random_hit_probability())
    }
}

pub fn success_rate(stats: &TrialStats) -> Result<Ratio<u64>> {
    if stats.trials == 0 {
        return Err(Error::InvalidArgument("no trials".into()));
    }
    Ok(Ratio::new(stats.successes, stats.trials))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn exact_log10(x: &BigRational) -> f64 {
        ln_rational(x) / std::f64::consts::LN_10
    }

    #[test]
    fn brute_force_examples() {
        let f3 = FieldParams::build(3).unwrap();
        assert_eq!(
            dlp_brute_force(&f3, &NbElement::parse_be("110", 3).unwrap()).unwrap(),
            5
        );
        assert_eq!(dlp_brute_force(&f3, &NbElement::one(3)).unwrap(), 0);
        let f5 = FieldParams::build(5).unwrap();
        let h = f5.pow(&NbElement::generator(5), 17).unwrap();
        assert_eq!(dlp_brute_force(&f5, &h).unwrap(), 17);
        assert!(matches!(
            dlp_brute_force(&f3, &NbElement::zero(3)),
            Err(Error::NotInSubgroup)
        ));
    }

    #[test]
    fn verify_examples() {
        let inst = DlpInstance::new(
            FieldParams::build(3).unwrap(),
            NbElement::parse_be("110", 3).unwrap(),
        )
        .unwrap();
        assert!(verify(5, &inst));
        assert!(!verify(4, &inst));
        assert!(verify(12, &inst));
        assert_eq!(all_solutions(&inst), vec![5]);
        let one = DlpInstance::new(FieldParams::build(3).unwrap(), NbElement::one(3)).unwrap();
        assert_eq!(all_solutions(&one), vec![0, 7]);
    }

    #[test]
    fn brute_force_agrees_with_verify() {
        for n in [2usize, 3, 5] {
            let fp = FieldParams::build(n).unwrap();
            for bits in 1..(1u64 << n) {
                let inst = DlpInstance::new(fp.clone(), fp.element(bits)).unwrap();
                let y = dlp_brute_force(&fp, &inst.h).unwrap();
                assert!(y < fp.group_order());
                assert!(verify(y, &inst));
            }
        }
    }

    #[test]
    fn count_minima_toy() {
        let mut q = Qubo::new(2);
        q.add_linear(0, 1);
        q.add_linear(1, 1);
        q.add_quadratic(0, 1, -2);
        assert_eq!(count_minima(&q).unwrap(), (0, 2));
    }

    #[test]
    fn tail_examples() {
        let v = binomial_tail_log10(10000, 5000, &rat(1, 2048)).unwrap();
        assert!((v - (-13549.508211710668)).abs() < 1e-6, "{v}");
        assert_eq!(binomial_tail_log10(10, 0, &rat(1, 3)).unwrap(), 0.0);
        let v = binomial_tail_log10(100, 100, &rat(1, 2)).unwrap();
        assert!((v - 100.0 * 0.5f64.log10()).abs() < 1e-9);
        assert_eq!(
            binomial_tail_log10(5, 1, &rat(0, 1)).unwrap(),
            f64::NEG_INFINITY
        );
        assert!(binomial_tail_log10(5, 6, &rat(1, 2)).is_err());
        assert!(binomial_tail_log10(5, 1, &rat(3, 2)).is_err());
    }

    #[test]
    fn tail_matches_exact_for_small_trials() {
        for trials in 1..=20u64 {
            for threshold in 0..=trials {
                for p in [rat(1, 2048), rat(1, 2), rat(3, 7), rat(9, 10)] {
                    let fast = binomial_tail_log10(trials, threshold, &p).unwrap();
                    let exact = exact_log10(&binomial_tail_exact(trials, threshold, &p).unwrap());
                    let tol = 1e-9 * exact.abs().max(1e-3);
                    assert!(
                        (fast - exact).abs() <= tol.max(1e-12),
                        "{trials} {threshold} {p}: {fast} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn exact_tail_from_zero_is_one() {
        assert_eq!(
            binomial_tail_exact(64, 0, &rat(1, 2048)).unwrap(),
            BigRational::one()
        );
    }

    #[test]
    fn rates() {
        let r = success_rate(&TrialStats::new(10000, 7415, 11).unwrap()).unwrap();
        assert_eq!(r, Ratio::new(7415, 10000));
        assert_eq!(r, Ratio::new(1483, 2000));
        assert_eq!(
            success_rate(&TrialStats::new(9, 9, 1).unwrap()).unwrap(),
            Ratio::from_integer(1)
        );
        assert_eq!(
            success_rate(&TrialStats::new(9, 0, 1).unwrap()).unwrap(),
            Ratio::from_integer(0)
        );
        assert!(TrialStats::new(1, 2, 1).is_err());
        assert!(success_rate(&TrialStats::new(0, 0, 1).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn tail_is_monotone_in_threshold(trials in 1u64..400, num in 1i64..50, den in 51i64..5000) {
            let p = rat(num, den);
            let mut prev = f64::INFINITY;
            for threshold in 0..=trials {
                let v = binomial_tail_log10(trials, threshold, &p).unwrap();
                prop_assert!(v <= prev + 1e-9);
                prev = v;
            }
        }
    }
}
