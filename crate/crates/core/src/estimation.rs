//! Running an estimator: Born probabilities, simulated measurement records,
//! and fidelity figures (pointwise, analytic mean, Monte Carlo mean).

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::{rational_to_f64, Rational};
use crate::povm::{Povm, Provenance};
use crate::symmetric::{
    fidelity, haar_random_state_with, occupation_basis, overlap, sym_dim, sym_embed, sym_embed_in, PureState,
    SymmetricMatrix,
};

/// Samples per Monte Carlo block. Each block draws from its own ChaCha
/// stream, and blocks are merged in index order.
pub const MC_BLOCK: usize = 1024;

/// A measurement on `N` copies with one guessed state per outcome.
pub trait Estimator {
    fn dim(&self) -> usize;
    fn copies(&self) -> usize;
    fn outcome_count(&self) -> usize;
    fn guess(&self, outcome: usize) -> &PureState;
    /// Born probabilities `tr(E_a ρ^{⊗N})`.
    fn outcome_probs(&self, state: &PureState) -> Result<OutcomeDistribution>;

    /// `Σ_a p_a(φ) |⟨φ_a|φ⟩|^2`, the fidelity averaged over outcomes for a
    /// fixed input.
    fn expected_fidelity(&self, state: &PureState) -> Result<f64> {
        let probs = self.outcome_probs(state)?;
        let mut total = 0.0;
        for (a, &p) in probs.probs.iter().enumerate() {
            total += p * fidelity(self.guess(a), state)?;
        }
        Ok(total)
    }
}

/// Probabilities over outcomes `a = 0..A`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeDistribution {
    pub probs: Vec<f64>,
}

impl OutcomeDistribution {
    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Total-variation distance to the empirical distribution of `counts`.
    pub fn tv_distance(&self, counts: &[u64]) -> f64 {
        let shots: u64 = counts.iter().sum();
        0.5 * self
            .probs
            .iter()
            .zip(counts)
            .map(|(&p, &c)| (p - c as f64 / shots as f64).abs())
            .sum::<f64>()
    }
}

fn check_dim(expected: usize, state: &PureState) -> Result<()> {
    if state.dim() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: state.dim(),
        });
    }
    Ok(())
}

impl Estimator for Povm {
    fn dim(&self) -> usize {
        self.d
    }

    fn copies(&self) -> usize {
        self.n
    }

    fn outcome_count(&self) -> usize {
        self.elements.len()
    }

    fn guess(&self, outcome: usize) -> &PureState {
        &self.elements[outcome].guess
    }

    /// `p_a = d_N w_a |⟨φ_a|φ⟩|^{2N}`.
    fn outcome_probs(&self, state: &PureState) -> Result<OutcomeDistribution> {
        check_dim(self.d, state)?;
        let dn = self.sym_dim() as f64;
        let probs = self
            .elements
            .iter()
            .map(|e| {
                let f = fidelity(&e.guess, state)?;
                Ok(dn * e.weight * f.powi(self.n as i32))
            })
            .collect::<Result<_>>()?;
        Ok(OutcomeDistribution { probs })
    }
}

/// A POVM with arbitrary dense elements on the symmetric subspace, each
/// paired with a guess.
#[derive(Clone, Debug)]
pub struct DensePovm {
    pub d: usize,
    pub n: usize,
    pub elements: Vec<SymmetricMatrix>,
    pub guesses: Vec<PureState>,
}

impl DensePovm {
    pub fn new(d: usize, n: usize, elements: Vec<SymmetricMatrix>, guesses: Vec<PureState>) -> Result<Self> {
        if elements.len() != guesses.len() {
            return Err(Error::InvalidInput(format!(
                "{} elements but {} guesses",
                elements.len(),
                guesses.len()
            )));
        }
        let dim = sym_dim(d, n)?;
        if let Some(e) = elements.iter().find(|e| e.entries.nrows() != dim || e.entries.ncols() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: e.entries.nrows(),
            });
        }
        for g in &guesses {
            check_dim(d, g)?;
        }
        Ok(Self { d, n, elements, guesses })
    }

    /// `‖Σ_a E_a − I‖_∞`.
    pub fn completeness_residual(&self) -> Result<f64> {
        let mut total = SymmetricMatrix::zeros(self.d, self.n)?;
        for e in &self.elements {
            total.entries += &e.entries;
        }
        Ok(total.max_abs_diff(&SymmetricMatrix::identity(self.d, self.n)?))
    }
}

impl From<&Povm> for DensePovm {
    fn from(p: &Povm) -> Self {
        Self {
            d: p.d,
            n: p.n,
            elements: (0..p.len()).map(|a| p.element_matrix(a)).collect(),
            guesses: p.guesses(),
        }
    }
}

impl Estimator for DensePovm {
    fn dim(&self) -> usize {
        self.d
    }

    fn copies(&self) -> usize {
        self.n
    }

    fn outcome_count(&self) -> usize {
        self.elements.len()
    }

    fn guess(&self, outcome: usize) -> &PureState {
        &self.guesses[outcome]
    }

    fn outcome_probs(&self, state: &PureState) -> Result<OutcomeDistribution> {
        check_dim(self.d, state)?;
        let v = sym_embed(state, self.n);
        let probs = self
            .elements
            .iter()
            .map(|e| (v.coords.adjoint() * &e.entries * &v.coords)[(0, 0)].re)
            .collect();
        Ok(OutcomeDistribution { probs })
    }
}

/// Measures every copy separately in the computational basis and guesses
/// the basis state seen most often (ties go to the lower index).
///
/// Restricted to the symmetric subspace the outcomes are the occupation
/// numbers, so the elements are the occupation-basis projectors.
pub fn separate_measurement_baseline(d: usize, n: usize) -> Result<DensePovm> {
    let basis = occupation_basis(d, n);
    let mut elements = Vec::with_capacity(basis.len());
    let mut guesses = Vec::with_capacity(basis.len());
    for (k, occ) in basis.iter().enumerate() {
        let mut e = SymmetricMatrix::zeros(d, n)?;
        e.entries[(k, k)] = Complex64::new(1.0, 0.0);
        elements.push(e);
        let winner = occ
            .counts()
            .iter()
            .enumerate()
            .fold((0, 0), |best, (i, &c)| if c > best.1 { (i, c) } else { best })
            .0;
        guesses.push(PureState::basis(d, winner)?);
    }
    DensePovm::new(d, n, elements, guesses)
}

/// Multinomial draw of `shots` outcomes from `outcome_probs`.
pub fn sample_outcomes<E: Estimator + ?Sized>(est: &E, state: &PureState, shots: u64, seed: u64) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(Error::InvalidInput("shots must be at least 1".into()));
    }
    let dist = est.outcome_probs(state)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(multinomial(&dist.probs, shots, &mut rng))
}

/// Conditional-binomial multinomial sampler.
fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let clean: Vec<f64> = probs.iter().map(|&p| p.max(0.0)).collect();
    let mut remaining_mass: f64 = clean.iter().sum();
    let mut remaining = shots;
    let mut counts = vec![0u64; clean.len()];
    for (a, &p) in clean.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if a + 1 == clean.len() {
            counts[a] = remaining;
            break;
        }
        let q = if remaining_mass > 0.0 {
            (p / remaining_mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let k = Binomial::new(remaining, q).map(|b| b.sample(rng)).unwrap_or(0);
        counts[a] = k;
        remaining -= k;
        remaining_mass -= p;
    }
    counts
}

/// `d_N Σ_a w_a |⟨φ_a|φ⟩|^{2(N+1)}`: the fidelity of the product-form POVM
/// averaged over outcomes, for one input state.
pub fn pointwise_fidelity(povm: &Povm, state: &PureState) -> Result<f64> {
    check_dim(povm.d, state)?;
    let dn = povm.sym_dim() as f64;
    let mut total = 0.0;
    for e in &povm.elements {
        total += e.weight * fidelity(&e.guess, state)?.powi(povm.n as i32 + 1);
    }
    Ok(dn * total)
}

/// How a [`FidelityReport`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FidelityMethod {
    Analytic,
    MonteCarlo,
    Pointwise,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FidelityReport {
    pub value: f64,
    /// Standard error of `value`; zero for analytic results.
    pub stderr: f64,
    /// Sample variance of the integrand (Monte Carlo only).
    pub variance: f64,
    pub method: FidelityMethod,
    pub samples: Option<usize>,
    pub seed: Option<u64>,
}

/// Haar-averaged fidelity of a product-form POVM: `(d_N / d_{N+1}) Σ_a w_a`.
pub fn mean_fidelity_exact(povm: &Povm) -> Result<FidelityReport> {
    let ratio = sym_dim(povm.d, povm.n)? as f64 / sym_dim(povm.d, povm.n + 1)? as f64;
    Ok(FidelityReport {
        value: ratio * povm.weight_sum(),
        stderr: 0.0,
        variance: 0.0,
        method: FidelityMethod::Analytic,
        samples: None,
        seed: None,
    })
}

/// [`mean_fidelity_exact`] with the weights summed exactly as rationals.
pub fn mean_fidelity_rational(povm: &Povm) -> Result<Rational> {
    let mut sum = Rational::zero();
    for e in &povm.elements {
        sum += Rational::from_float(e.weight)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite weight {}", e.weight)))?;
    }
    let ratio = Rational::new(
        BigInt::from(sym_dim(povm.d, povm.n)?),
        BigInt::from(sym_dim(povm.d, povm.n + 1)?),
    );
    Ok(sum * ratio)
}

/// `(N + 1) / (N + d)`.
pub fn optimal_fidelity(n: usize, d: usize) -> Result<Rational> {
    if n == 0 || d < 2 {
        return Err(Error::InvalidInput(format!("need N >= 1 and d >= 2, got N = {n}, d = {d}")));
    }
    Ok(Rational::new(BigInt::from(n + 1), BigInt::from(n + d)))
}

pub fn optimal_fidelity_f64(n: usize, d: usize) -> Result<f64> {
    optimal_fidelity(n, d).map(|r| rational_to_f64(&r))
}

/// Count, mean and sum of squared deviations; merged pairwise.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let delta = x - self.mean;
        self.mean += delta / self.count;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0.0 {
            return self;
        }
        if self.count == 0.0 {
            return other;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + delta * other.count / count,
            m2: self.m2 + other.m2 + delta * delta * self.count * other.count / count,
        }
    }
}

/// Averages `f` over `samples` Haar-random states of dimension `d`.
///
/// Deterministic for a given seed regardless of the thread count.
pub fn haar_average<F>(d: usize, samples: usize, seed: u64, f: F) -> Result<FidelityReport>
where
    F: Fn(&PureState) -> Result<f64> + Sync,
{
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let blocks = samples.div_ceil(MC_BLOCK);
    let partials: Vec<Result<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let len = MC_BLOCK.min(samples - b * MC_BLOCK);
            let mut m = Moments::default();
            for _ in 0..len {
                m.push(f(&haar_random_state_with(d, &mut rng))?);
            }
            Ok(m)
        })
        .collect();
    let mut total = Moments::default();
    for p in partials {
        total = total.merge(p?);
    }
    let variance = total.m2 / (total.count - 1.0);
    Ok(FidelityReport {
        value: total.mean,
        stderr: (variance / total.count).sqrt(),
        variance,
        method: FidelityMethod::MonteCarlo,
        samples: Some(samples),
        seed: Some(seed),
    })
}

/// Monte Carlo estimate of the mean fidelity of any estimator.
pub fn mean_fidelity_mc<E: Estimator + Sync + ?Sized>(est: &E, samples: usize, seed: u64) -> Result<FidelityReport> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!("need at least 100 samples, got {samples}")));
    }
    haar_average(est.dim(), samples, seed, |s| est.expected_fidelity(s))
}

/// Applies `U` to every guess of a product-form POVM.
pub fn rotate_povm(povm: &Povm, unitary: &nalgebra::DMatrix<Complex64>) -> Result<Povm> {
    let elements = povm
        .elements
        .iter()
        .map(|e| {
            Ok(crate::povm::PovmElement {
                weight: e.weight,
                guess: e.guess.transformed(unitary)?,
            })
        })
        .collect::<Result<_>>()?;
    Povm::from_elements(
        povm.d,
        povm.n,
        elements,
        Provenance {
            construction: format!("{} (rotated)", povm.provenance.construction),
            ..povm.provenance.clone()
        },
    )
}

/// Born probabilities through the dense route `Re v† E_a v`, used to
/// cross-check the product formula.
pub fn outcome_probs_dense(povm: &Povm, state: &PureState) -> Result<Vec<f64>> {
    check_dim(povm.d, state)?;
    let basis = occupation_basis(povm.d, povm.n);
    let v = sym_embed_in(state, &basis);
    let dn = povm.sym_dim() as f64;
    povm.elements
        .iter()
        .map(|e| {
            let g = sym_embed_in(&e.guess, &basis);
            Ok(dn * e.weight * g.inner(&v).norm_sqr())
        })
        .collect()
}

/// `|⟨φ_a|φ⟩|^2` for every guess.
pub fn guess_overlaps(povm: &Povm, state: &PureState) -> Result<Vec<f64>> {
    povm.elements
        .iter()
        .map(|e| overlap(&e.guess, state).map(|z| z.norm_sqr()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::povm::{build_povm, BuildOptions, PovmElement};
    use crate::symmetric::haar_random_state;
    use approx::assert_abs_diff_eq;

    fn diagonal() -> Povm {
        Povm::from_elements(
            2,
            1,
            vec![
                PovmElement {
                    weight: 0.5,
                    guess: PureState::basis(2, 0).unwrap(),
                },
                PovmElement {
                    weight: 0.5,
                    guess: PureState::basis(2, 1).unwrap(),
                },
            ],
            Provenance::unknown(),
        )
        .unwrap()
    }

    #[test]
    fn diagonal_probs() {
        let p = diagonal().outcome_probs(&PureState::basis(2, 0).unwrap()).unwrap();
        assert_eq!(p.probs, vec![1.0, 0.0]);
        assert_abs_diff_eq!(
            pointwise_fidelity(&diagonal(), &PureState::basis(2, 0).unwrap()).unwrap(),
            1.0
        );
    }

    #[test]
    fn probs_sum_to_one() {
        let p = build_povm(3, 2, BuildOptions::default()).unwrap();
        for seed in 0..10 {
            let dist = p.outcome_probs(&haar_random_state(3, seed)).unwrap();
            assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-10);
            assert!(dist.probs.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn dimension_mismatch() {
        let p = diagonal();
        assert!(p.outcome_probs(&PureState::basis(3, 0).unwrap()).is_err());
        assert!(pointwise_fidelity(&p, &PureState::basis(3, 0).unwrap()).is_err());
    }

    #[test]
    fn sampling() {
        let counts = sample_outcomes(&diagonal(), &PureState::basis(2, 0).unwrap(), 100, 1).unwrap();
        assert_eq!(counts, vec![100, 0]);
        let p = build_povm(2, 1, BuildOptions::default()).unwrap();
        let s = haar_random_state(2, 3);
        let a = sample_outcomes(&p, &s, 1000, 9).unwrap();
        assert_eq!(a, sample_outcomes(&p, &s, 1000, 9).unwrap());
        assert_eq!(a.iter().sum::<u64>(), 1000);
        assert!(sample_outcomes(&p, &s, 0, 9).is_err());
    }

    #[test]
    fn exact_mean_fidelity_values() {
        for (d, n, want) in [(2, 1, 2.0 / 3.0), (2, 3, 0.8), (3, 2, 0.6)] {
            let p = build_povm(d, n, BuildOptions::default()).unwrap();
            assert_abs_diff_eq!(mean_fidelity_exact(&p).unwrap().value, want, epsilon = 1e-12);
        }
    }

    #[test]
    fn optimal_fidelity_values() {
        let q = |a: i64, b: i64| Rational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(optimal_fidelity(1, 2).unwrap(), q(2, 3));
        assert_eq!(optimal_fidelity(10, 2).unwrap(), q(11, 12));
        assert_eq!(optimal_fidelity(1, 3).unwrap(), q(1, 2));
        assert!(optimal_fidelity(0, 2).is_err());
        let values: Vec<f64> = (1..20).map(|n| optimal_fidelity_f64(n, 2).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn mc_is_deterministic_and_thread_independent() {
        let p = build_povm(2, 1, BuildOptions::default()).unwrap();
        let a = mean_fidelity_mc(&p, 3000, 42).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mean_fidelity_mc(&p, 3000, 42).unwrap());
        assert_eq!(a, b);
        assert!(mean_fidelity_mc(&p, 10, 42).is_err());
    }

    #[test]
    fn baseline_is_a_povm() {
        for n in 1..5 {
            let b = separate_measurement_baseline(2, n).unwrap();
            assert!(b.completeness_residual().unwrap() < 1e-15);
        }
        let b = separate_measurement_baseline(2, 2).unwrap();
        // (2,0) → |0⟩, (1,1) tie → |0⟩, (0,2) → |1⟩
        assert_eq!(b.guesses[1], PureState::basis(2, 0).unwrap());
        assert_eq!(b.guesses[2], PureState::basis(2, 1).unwrap());
    }

    #[test]
    fn dense_and_product_routes_agree() {
        let p = build_povm(2, 2, BuildOptions::default()).unwrap();
        let dense = DensePovm::from(&p);
        for seed in 0..5 {
            let s = haar_random_state(2, seed);
            let a = p.outcome_probs(&s).unwrap().probs;
            let b = dense.outcome_probs(&s).unwrap().probs;
            let c = outcome_probs_dense(&p, &s).unwrap();
            for ((x, y), z) in a.iter().zip(&b).zip(&c) {
                assert!((x - y).abs() < 1e-12 && (x - z).abs() < 1e-12);
            }
        }
    }
}
