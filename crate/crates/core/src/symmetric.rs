//! Pure states, the totally symmetric subspace of `H_d^{⊗N}` and its
//! occupation-number basis.
//!
//! Basis convention: occupation vectors `(n_1, .., n_d)` with `Σ n_i = N`,
//! listed in lexicographically descending order, so for `d = 2, N = 2` the
//! basis is `(2,0), (1,1), (0,2)`. Serialized matrices and vectors use this
//! order.
//!
//! Full-space (tensor product) indices put the first particle in the most
//! significant digit: `x = Σ_k s_k d^(M-1-k)`.

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Tolerance on `Σ |c_i|^2 = 1` for a [`PureState`].
pub const NORM_TOL: f64 = 1e-12;

/// Default limit on `d^M` for dense full-space operators.
pub const DEFAULT_FULL_SPACE_GUARD: usize = 4096;

/// Environment variable overriding [`DEFAULT_FULL_SPACE_GUARD`].
pub const FULL_SPACE_GUARD_ENV: &str = "OPTIMAL_POVM_FULL_SPACE_GUARD";

/// The active full-space guard, honouring [`FULL_SPACE_GUARD_ENV`].
pub fn full_space_guard() -> usize {
    std::env::var(FULL_SPACE_GUARD_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_FULL_SPACE_GUARD)
}

/// A normalized vector `c = (c_1, .., c_d)` in `C^d`.
///
/// The global phase is carried along but never compared; use
/// [`PureState::same_ray`] for physical equality.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amps: Vec<Complex64>,
}

impl PureState {
    /// Wraps amplitudes that are already normalized within [`NORM_TOL`].
    pub fn new(amps: Vec<Complex64>) -> Result<Self> {
        if amps.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "state dimension must be at least 2, got {}",
                amps.len()
            )));
        }
        let norm_sqr: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(Self { amps })
    }

    /// Rescales arbitrary nonzero amplitudes onto the unit sphere.
    pub fn normalized(mut amps: Vec<Complex64>) -> Result<Self> {
        let norm = amps.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidInput("cannot normalize a zero vector".into()));
        }
        for c in amps.iter_mut() {
            *c /= norm;
        }
        Self::new(amps)
    }

    /// The computational basis state `|k⟩` (zero-based).
    pub fn basis(d: usize, k: usize) -> Result<Self> {
        if k >= d {
            return Err(Error::InvalidInput(format!("basis index {k} out of range for d = {d}")));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        amps[k] = Complex64::new(1.0, 0.0);
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// `true` when both states describe the same ray.
    pub fn same_ray(&self, other: &Self) -> bool {
        fidelity(self, other).map(|f| f >= 1.0 - NORM_TOL).unwrap_or(false)
    }

    /// Multiplies every amplitude by `e^{i phase}`.
    pub fn with_global_phase(&self, phase: f64) -> Self {
        let p = Complex64::from_polar(1.0, phase);
        Self {
            amps: self.amps.iter().map(|c| c * p).collect(),
        }
    }

    /// `U|φ⟩` for a `d × d` unitary.
    pub fn transformed(&self, unitary: &DMatrix<Complex64>) -> Result<Self> {
        if unitary.nrows() != self.dim() || unitary.ncols() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: unitary.nrows(),
            });
        }
        let v = unitary * DVector::from_column_slice(&self.amps);
        Self::normalized(v.iter().copied().collect())
    }

    /// Density matrix `|φ⟩⟨φ|`.
    pub fn density(&self) -> DMatrix<Complex64> {
        let v = DVector::from_column_slice(&self.amps);
        &v * v.adjoint()
    }
}

/// `⟨a|b⟩ = Σ_i a_i^* b_i`.
pub fn overlap(a: &PureState, b: &PureState) -> Result<Complex64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: b.dim(),
        });
    }
    Ok(a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum())
}

/// `|⟨a|b⟩|^2`.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64> {
    overlap(a, b).map(|z| z.norm_sqr())
}

/// Dimension `C(N+d-1, d-1)` of the symmetric subspace of `N` particles in
/// dimension `d`.
pub fn sym_dim(d: usize, n: usize) -> Result<usize> {
    if d == 0 {
        return Err(Error::InvalidInput("dimension d must be at least 1".into()));
    }
    binomial(n + d - 1, d - 1)
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::Overflow(format!("sym_dim(d = {d}, N = {n})")))
}

/// Exact `C(n, k)` or `None` on overflow of `u128`.
pub(crate) fn binomial(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) after the multiplication
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// `N! / Π n_i!` as a float (exact while it fits in 53 bits).
fn multinomial_f64(occ: &[u32]) -> f64 {
    let mut total = 0usize;
    let mut acc = 1.0;
    for &k in occ {
        let k = k as usize;
        total += k;
        // C(total, k), built incrementally
        let mut b = 1.0;
        for j in 0..k {
            b = b * (total - j) as f64 / (j + 1) as f64;
        }
        acc *= b.round();
    }
    acc
}

/// Occupation numbers `(n_1, .., n_d)` of a symmetric basis vector.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationVector(Vec<u32>);

impl OccupationVector {
    pub fn new(counts: Vec<u32>) -> Self {
        Self(counts)
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().map(|&k| k as usize).sum()
    }

    /// `N! / Π n_i!`, the number of product basis states in this class.
    pub fn multiplicity(&self) -> f64 {
        multinomial_f64(&self.0)
    }
}

impl fmt::Display for OccupationVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, n) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{n}")?;
        }
        write!(f, ")")
    }
}

/// All occupation vectors for `N` particles in `d` modes, in descending
/// lexicographic order.
pub fn occupation_basis(d: usize, n: usize) -> Vec<OccupationVector> {
    fn fill(prefix: &mut Vec<u32>, remaining: u32, slots: usize, out: &mut Vec<OccupationVector>) {
        if slots == 1 {
            prefix.push(remaining);
            out.push(OccupationVector(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=remaining).rev() {
            prefix.push(k);
            fill(prefix, remaining - k, slots - 1, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if d == 0 {
        return out;
    }
    fill(&mut Vec::with_capacity(d), n as u32, d, &mut out);
    out
}

/// The occupation basis together with a reverse lookup table.
#[derive(Clone, Debug)]
pub struct SymmetricBasis {
    d: usize,
    n: usize,
    states: Vec<OccupationVector>,
    index: HashMap<OccupationVector, usize>,
}

impl SymmetricBasis {
    pub fn new(d: usize, n: usize) -> Self {
        let states = occupation_basis(d, n);
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Self { d, n, states, index }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn particles(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[OccupationVector] {
        &self.states
    }

    pub fn index_of(&self, occ: &OccupationVector) -> Option<usize> {
        self.index.get(occ).copied()
    }

    /// Occupation class of the full-space product basis index `x`.
    pub fn class_of_full_index(&self, mut x: usize) -> usize {
        let mut counts = vec![0u32; self.d];
        for _ in 0..self.n {
            counts[x % self.d] += 1;
            x /= self.d;
        }
        self.index[&OccupationVector(counts)]
    }
}

/// Coordinates of a vector of the symmetric subspace in the occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricVector {
    pub d: usize,
    pub n: usize,
    pub coords: DVector<Complex64>,
}

impl SymmetricVector {
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.coords.dotc(&other.coords)
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }
}

/// An operator on the symmetric subspace in the occupation basis.
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricMatrix {
    pub d: usize,
    pub n: usize,
    pub entries: DMatrix<Complex64>,
}

impl SymmetricMatrix {
    pub fn zeros(d: usize, n: usize) -> Result<Self> {
        let dim = sym_dim(d, n)?;
        Ok(Self {
            d,
            n,
            entries: DMatrix::zeros(dim, dim),
        })
    }

    pub fn identity(d: usize, n: usize) -> Result<Self> {
        let dim = sym_dim(d, n)?;
        Ok(Self {
            d,
            n,
            entries: DMatrix::identity(dim, dim),
        })
    }

    /// Adds `scale · v v†`.
    pub fn add_outer(&mut self, scale: f64, v: &SymmetricVector) {
        let dim = self.entries.nrows();
        for col in 0..dim {
            let vc = v.coords[col].conj() * scale;
            for row in 0..dim {
                self.entries[(row, col)] += v.coords[row] * vc;
            }
        }
    }

    /// `max_{ij} |A_ij - B_ij|`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs_diff(&self.entries, &other.entries)
    }

    /// `‖A − A†‖_∞` entrywise.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(&self.entries, &self.entries.adjoint())
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }
}

pub(crate) fn max_abs_diff(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Coordinates of `|φ⟩^{⊗N}` in the occupation basis:
/// `sqrt(N!/Π n_i!) · Π c_i^{n_i}`.
pub fn sym_embed(state: &PureState, n: usize) -> SymmetricVector {
    let basis = occupation_basis(state.dim(), n);
    sym_embed_in(state, &basis)
}

/// [`sym_embed`] against a precomputed basis list.
pub fn sym_embed_in(state: &PureState, basis: &[OccupationVector]) -> SymmetricVector {
    let d = state.dim();
    let n = basis.first().map(|o| o.total()).unwrap_or(0);
    // powers[i][k] = c_i^k
    let powers: Vec<Vec<Complex64>> = state
        .amplitudes()
        .iter()
        .map(|&c| {
            let mut p = Vec::with_capacity(n + 1);
            let mut acc = Complex64::new(1.0, 0.0);
            for _ in 0..=n {
                p.push(acc);
                acc *= c;
            }
            p
        })
        .collect();
    let coords = DVector::from_iterator(
        basis.len(),
        basis.iter().map(|occ| {
            let prod: Complex64 = occ
                .counts()
                .iter()
                .enumerate()
                .map(|(i, &k)| powers[i][k as usize])
                .product();
            prod * occ.multiplicity().sqrt()
        }),
    );
    SymmetricVector { d, n, coords }
}

fn check_full_space(d: usize, m: usize, guard: usize) -> Result<usize> {
    let size = (d as u128).checked_pow(m as u32).unwrap_or(u128::MAX);
    if size > guard as u128 {
        return Err(Error::ResourceGuard {
            what: "full-space dimension d^M",
            needed: size,
            limit: guard as u128,
        });
    }
    Ok(size as usize)
}

/// `|φ⟩^{⊗M}` as a dense vector of length `d^M`.
pub fn tensor_power_full(state: &PureState, m: usize, guard: usize) -> Result<DVector<Complex64>> {
    let d = state.dim();
    let size = check_full_space(d, m, guard)?;
    let mut v = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for _ in 0..m {
        let mut next = DVector::zeros(v.len() * d);
        for (x, &a) in v.iter().enumerate() {
            for (s, &c) in state.amplitudes().iter().enumerate() {
                next[x * d + s] = a * c;
            }
        }
        v = next;
    }
    debug_assert_eq!(v.len(), size);
    Ok(v)
}

/// The projector `S_M` onto the symmetric subspace of `H_d^{⊗M}` as a dense
/// `d^M × d^M` matrix.
///
/// Equal to the average of the `M!` permutation operators. It is assembled
/// from occupation classes: `S[x,y] = 1/mult(n)` when `x` and `y` share the
/// occupation class `n`, else 0.
pub fn symmetric_projector_full(d: usize, m: usize, guard: usize) -> Result<DMatrix<Complex64>> {
    let size = check_full_space(d, m, guard)?;
    let basis = SymmetricBasis::new(d, m);
    let classes: Vec<usize> = (0..size).map(|x| basis.class_of_full_index(x)).collect();
    let inv_mult: Vec<f64> = basis.states().iter().map(|o| 1.0 / o.multiplicity()).collect();
    Ok(DMatrix::from_fn(size, size, |x, y| {
        if classes[x] == classes[y] {
            Complex64::new(inv_mult[classes[x]], 0.0)
        } else {
            Complex64::new(0.0, 0.0)
        }
    }))
}

/// The `d^M × d_M` isometry whose columns are the normalized symmetric basis
/// vectors, so that `S_M = B B†`.
pub fn symmetric_isometry_full(d: usize, m: usize, guard: usize) -> Result<DMatrix<Complex64>> {
    let size = check_full_space(d, m, guard)?;
    let basis = SymmetricBasis::new(d, m);
    let mut b = DMatrix::zeros(size, basis.len());
    for x in 0..size {
        let k = basis.class_of_full_index(x);
        b[(x, k)] = Complex64::new(1.0 / basis.states()[k].multiplicity().sqrt(), 0.0);
    }
    Ok(b)
}

/// Haar-random pure state from a seed.
pub fn haar_random_state(d: usize, seed: u64) -> PureState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    haar_random_state_with(d, &mut rng)
}

/// Haar-random pure state: `d` independent standard complex Gaussians,
/// normalized.
pub fn haar_random_state_with<R: Rng + ?Sized>(d: usize, rng: &mut R) -> PureState {
    assert!(d >= 2, "state dimension must be at least 2");
    loop {
        let amps: Vec<Complex64> = (0..d)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        if let Ok(s) = PureState::normalized(amps) {
            return s;
        }
    }
}

/// Haar-random `d × d` unitary: Gram-Schmidt on a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DMatrix<Complex64> {
    let mut cols: Vec<DVector<Complex64>> = Vec::with_capacity(d);
    while cols.len() < d {
        let mut v = DVector::from_fn(d, |_, _| {
            Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        for u in &cols {
            let proj = u.dotc(&v);
            v -= u * proj;
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / Complex64::new(norm, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}
