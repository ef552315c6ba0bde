//! Exact averages of amplitude monomials over the uniform (Haar) prior on
//! pure states.
//!
//! For `l` factors of `c` and `l` factors of `c^*`,
//!
//! ```text
//! ⟨c_{i1} c*_{j1} ··· c_{il} c*_{jl}⟩ = (d-1)! / (d+l-1)! · #{σ ∈ S_l : i_k = j_σ(k)}
//! ```
//!
//! and every monomial with unequal numbers of `c` and `c^*` averages to zero.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::symmetric::{sym_dim, SymmetricMatrix};

/// Exact rational number with arbitrary-precision parts.
pub type Rational = BigRational;

/// Index tuples `(i_1..i_l)` for the `c` factors and `(j_1..j_l)` for the
/// `c^*` factors. Indices are one-based.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MomentIndex {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
}

impl MomentIndex {
    pub fn new(i: Vec<usize>, j: Vec<usize>) -> Result<Self> {
        if i.iter().chain(&j).any(|&k| k == 0) {
            return Err(Error::InvalidInput("moment indices are one-based".into()));
        }
        Ok(Self { i, j })
    }

    /// Parses `"1,2"` / `"2,1"` style comma-separated lists.
    pub fn parse(i: &str, j: &str) -> Result<Self> {
        fn list(s: &str) -> Result<Vec<usize>> {
            let s = s.trim();
            if s.is_empty() {
                return Ok(Vec::new());
            }
            s.split(',')
                .map(|t| {
                    t.trim().parse::<usize>().map_err(|e| Error::Parse {
                        location: format!("index list {s:?}"),
                        message: e.to_string(),
                    })
                })
                .collect()
        }
        Self::new(list(i)?, list(j)?)
    }

    /// Both tuples have the same length.
    pub fn is_balanced(&self) -> bool {
        self.i.len() == self.j.len()
    }

    pub fn max_index(&self) -> usize {
        self.i.iter().chain(&self.j).copied().max().unwrap_or(0)
    }
}

fn multiset(v: &[usize]) -> BTreeMap<usize, usize> {
    let mut m = BTreeMap::new();
    for &k in v {
        *m.entry(k).or_insert(0) += 1;
    }
    m
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Number of bijections `σ` with `i_k = j_σ(k)` for every `k`.
///
/// This is `Π_v m_v!` when `i` and `j` carry the same multiset with
/// multiplicities `m_v`, and zero otherwise.
pub fn contraction_count(idx: &MomentIndex) -> BigUint {
    if !idx.is_balanced() {
        return BigUint::zero();
    }
    let mi = multiset(&idx.i);
    if mi != multiset(&idx.j) {
        return BigUint::zero();
    }
    mi.values().fold(BigUint::one(), |acc, &m| acc * factorial(m))
}

/// Exact Haar average of the monomial addressed by `idx` in dimension `d`.
pub fn moment_value(d: usize, idx: &MomentIndex) -> Result<Rational> {
    if d < 2 {
        return Err(Error::InvalidInput(format!("dimension must be at least 2, got {d}")));
    }
    if idx.max_index() > d {
        return Err(Error::InvalidInput(format!(
            "index {} out of range for d = {d}",
            idx.max_index()
        )));
    }
    if !idx.is_balanced() {
        return Ok(Rational::zero());
    }
    let l = idx.i.len();
    let count = contraction_count(idx);
    if count.is_zero() {
        return Ok(Rational::zero());
    }
    // (d-1)!/(d+l-1)! = 1 / (d (d+1) ··· (d+l-1))
    let rising = (d..d + l).fold(BigUint::one(), |acc, k| acc * BigUint::from(k));
    Ok(Rational::new(BigInt::from(count), BigInt::from(rising)))
}

/// [`moment_value`] rounded to `f64`.
pub fn moment_value_f64(d: usize, idx: &MomentIndex) -> Result<f64> {
    moment_value(d, idx).map(|r| rational_to_f64(&r))
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Formats as `p/q` (or `p` when the denominator is one).
pub fn format_rational(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// `⟨ρ^{⊗N}⟩ = S_N / d_N`, which is `I / d_N` in the occupation basis.
pub fn mean_tensor_power(d: usize, n: usize) -> Result<SymmetricMatrix> {
    let dim = sym_dim(d, n)?;
    let mut m = SymmetricMatrix::identity(d, n)?;
    m.entries /= num_complex::Complex64::new(dim as f64, 0.0);
    Ok(m)
}

/// Every index tuple pair with `l` entries each, indices in `1..=d`.
pub fn all_indices(d: usize, l: usize) -> Vec<MomentIndex> {
    fn tuples(d: usize, l: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for _ in 0..l {
            out = out
                .into_iter()
                .flat_map(|t| {
                    (1..=d).map(move |k| {
                        let mut t = t.clone();
                        t.push(k);
                        t
                    })
                })
                .collect();
        }
        out
    }
    let ts = tuples(d, l);
    let mut out = Vec::with_capacity(ts.len() * ts.len());
    for i in &ts {
        for j in &ts {
            out.push(MomentIndex {
                i: i.clone(),
                j: j.clone(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(i: &[usize], j: &[usize]) -> MomentIndex {
        MomentIndex::new(i.to_vec(), j.to_vec()).unwrap()
    }

    fn q(p: i64, r: i64) -> Rational {
        Rational::new(BigInt::from(p), BigInt::from(r))
    }

    /// Brute-force count over all permutations of `0..l`.
    fn count_by_enumeration(idx: &MomentIndex) -> usize {
        fn perms(l: usize) -> Vec<Vec<usize>> {
            if l == 0 {
                return vec![vec![]];
            }
            let mut out = Vec::new();
            for p in perms(l - 1) {
                for pos in 0..=p.len() {
                    let mut q = p.clone();
                    q.insert(pos, l - 1);
                    out.push(q);
                }
            }
            out
        }
        if idx.i.len() != idx.j.len() {
            return 0;
        }
        perms(idx.i.len())
            .into_iter()
            .filter(|s| (0..s.len()).all(|k| idx.i[k] == idx.j[s[k]]))
            .count()
    }

    #[test]
    fn contraction_examples() {
        assert_eq!(contraction_count(&idx(&[1], &[1])), BigUint::from(1u32));
        assert_eq!(contraction_count(&idx(&[1, 1], &[1, 1])), BigUint::from(2u32));
        assert_eq!(contraction_count(&idx(&[1, 2], &[2, 1])), BigUint::from(1u32));
        assert_eq!(contraction_count(&idx(&[1, 2], &[1, 1])), BigUint::zero());
    }

    #[test]
    fn contraction_matches_enumeration() {
        for l in 0..=4 {
            for m in all_indices(3, l).into_iter().step_by(7) {
                assert_eq!(
                    contraction_count(&m),
                    BigUint::from(count_by_enumeration(&m)),
                    "{m:?}"
                );
            }
        }
    }

    #[test]
    fn moment_examples() {
        for d in 2..6 {
            assert_eq!(moment_value(d, &idx(&[1], &[1])).unwrap(), q(1, d as i64));
        }
        assert_eq!(moment_value(2, &idx(&[1, 1], &[1, 1])).unwrap(), q(1, 3));
        assert_eq!(moment_value(2, &idx(&[1, 2], &[2, 1])).unwrap(), q(1, 6));
        assert_eq!(moment_value(2, &idx(&[1, 1], &[1])).unwrap(), q(0, 1));
        assert_eq!(moment_value(2, &idx(&[], &[])).unwrap(), q(1, 1));
        assert!(moment_value(2, &idx(&[3], &[3])).is_err());
        assert!(moment_value(1, &idx(&[1], &[1])).is_err());
    }

    #[test]
    fn normalization_is_exact() {
        for d in 2..7 {
            let total: Rational = (1..=d)
                .map(|k| moment_value(d, &idx(&[k], &[k])).unwrap())
                .sum();
            assert_eq!(total, q(1, 1));
        }
    }

    #[test]
    fn mean_tensor_power_is_scaled_identity() {
        let m = mean_tensor_power(2, 2).unwrap();
        assert_eq!(m.entries.nrows(), 3);
        for r in 0..3 {
            for c in 0..3 {
                let want = if r == c { 1.0 / 3.0 } else { 0.0 };
                assert!((m.entries[(r, c)].re - want).abs() < 1e-16);
            }
        }
        assert_eq!(mean_tensor_power(3, 2).unwrap().entries.nrows(), 6);
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&q(2, 6)), "1/3");
        assert_eq!(format_rational(&q(4, 2)), "2");
        assert_eq!(format_rational(&q(0, 5)), "0");
    }

    #[test]
    fn parse_index_lists() {
        let m = MomentIndex::parse("1, 2", "2,1").unwrap();
        assert_eq!(m, idx(&[1, 2], &[2, 1]));
        assert!(MomentIndex::parse("0", "1").is_err());
        assert!(MomentIndex::parse("a", "1").is_err());
    }
}
